//! Synthetic polarimetric scenes with exact per-pixel ground truth.
//!
//! A scene is a partition of the image into regions, each driven either by a
//! canonical point mechanism (sphere, oriented dihedral, helix) with a random
//! absolute phase per pixel, or by Gaussian clutter drawn from a prescribed
//! coherency matrix. Additive channel noise keeps reciprocity intact, so the
//! output raster is three-channel.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use std::f64::consts::{FRAC_1_SQRT_2, PI, TAU};

use super::raster::{ComplexRaster, Dtype, LabelPlane};
use crate::cxcore::{CxError, Result};
use crate::polarimetry::{
    eigh3, h_alpha, hermitized, pauli_compose, pauli_decompose, CameronClass, CoherencyMatrix,
    Helicity, PauliVector, SinclairPixel, ZoneTable,
};

/// Scattering behaviour of one region.
#[derive(Clone, Debug)]
pub enum Mechanism {
    /// Odd-bounce point target (trihedral / plate).
    Sphere,
    /// Even-bounce point target oriented at `theta` radians.
    Dihedral { theta: f64 },
    /// Helical point target of the given handedness.
    Helix { hand: Helicity },
    /// Distributed Gaussian clutter with the given population coherency
    /// matrix (scaled internally so the region's expected span equals its
    /// configured power).
    Clutter { coherency: CoherencyMatrix },
}

impl Mechanism {
    fn canonical(&self) -> Option<SinclairPixel> {
        match self {
            Mechanism::Sphere => Some(SinclairPixel::sphere()),
            Mechanism::Dihedral { theta } => Some(SinclairPixel::diplane(*theta)),
            Mechanism::Helix { hand } => Some(SinclairPixel::helix(*hand, 0.0)),
            Mechanism::Clutter { .. } => None,
        }
    }

    /// Coherent-class ground truth; clutter is 0 (no single coherent target).
    fn cameron_label(&self) -> u8 {
        match self {
            Mechanism::Sphere => CameronClass::Trihedral.label(),
            Mechanism::Dihedral { .. } => CameronClass::Dihedral.label(),
            Mechanism::Helix { hand: Helicity::Left } => CameronClass::LeftHelix.label(),
            Mechanism::Helix { hand: Helicity::Right } => CameronClass::RightHelix.label(),
            Mechanism::Clutter { .. } => 0,
        }
    }
}

/// One region: a mechanism plus its expected per-pixel span.
#[derive(Clone, Debug)]
pub struct SynthRegion {
    pub mechanism: Mechanism,
    pub power: f64,
}

/// Full scene description. `region_map` assigns every pixel (row-major) an
/// index into `regions`.
#[derive(Clone, Debug)]
pub struct SynthSpec {
    pub height: usize,
    pub width: usize,
    pub region_map: Vec<u8>,
    pub regions: Vec<SynthRegion>,
    /// Per-channel additive noise amplitude: each of hh, hv, vv receives an
    /// independent circular Gaussian sample of expected power `sigma^2`.
    pub noise_sigma: f64,
    pub seed: u64,
}

/// Scene raster plus per-pixel ground-truth label planes.
pub struct SynthOutput {
    pub raster: ComplexRaster,
    /// Coherent-class truth per pixel (0 where the truth is distributed
    /// clutter rather than a point target).
    pub cameron: LabelPlane,
    /// Entropy/alpha zone of each region's population coherency matrix.
    pub zone: LabelPlane,
}

impl SynthSpec {
    /// Structural checks; numeric checks on clutter matrices happen when the
    /// scene is synthesized.
    pub fn validate(&self) -> Result<()> {
        const OP: &str = "synth_spec";
        if self.height == 0 || self.width == 0 {
            return Err(CxError::contract(OP, "empty scene"));
        }
        if self.region_map.len() != self.height * self.width {
            return Err(CxError::contract(
                OP,
                format!(
                    "region map has {} entries, scene has {} pixels",
                    self.region_map.len(),
                    self.height * self.width
                ),
            ));
        }
        if self.regions.is_empty() {
            return Err(CxError::contract(OP, "no regions"));
        }
        if let Some(bad) = self.region_map.iter().find(|&&r| r as usize >= self.regions.len()) {
            return Err(CxError::contract(
                OP,
                format!("region index {bad} out of range for {} regions", self.regions.len()),
            ));
        }
        if !self.noise_sigma.is_finite() || self.noise_sigma < 0.0 {
            return Err(CxError::contract(OP, "noise sigma must be finite and non-negative"));
        }
        for (k, r) in self.regions.iter().enumerate() {
            if !r.power.is_finite() || r.power <= 0.0 {
                return Err(CxError::contract(OP, format!("region {k} power must be positive")));
            }
            if let Mechanism::Clutter { coherency } = &r.mechanism {
                let finite = coherency
                    .m
                    .iter()
                    .flatten()
                    .all(|z| z.re.is_finite() && z.im.is_finite());
                if !finite || coherency.trace() <= 0.0 {
                    return Err(CxError::contract(
                        OP,
                        format!("region {k} clutter matrix must be finite with positive trace"),
                    ));
                }
            }
        }
        Ok(())
    }

    /// The benchmark desk scene: four point-target squares (sphere, tilted
    /// dihedral, both helices) centered in the image quadrants over a
    /// distributed-clutter background, with mild channel noise.
    pub fn desk(height: usize, width: usize, seed: u64) -> Result<Self> {
        if height.min(width) < 64 {
            return Err(CxError::contract("desk", "desk scene needs at least 64x64 pixels"));
        }
        let side = height.min(width) * 7 / 32;
        let regions = vec![
            SynthRegion {
                mechanism: Mechanism::Clutter { coherency: desk_clutter_coherency() },
                power: 1.0,
            },
            SynthRegion { mechanism: Mechanism::Sphere, power: 2.0 },
            SynthRegion { mechanism: Mechanism::Dihedral { theta: PI / 12.0 }, power: 2.0 },
            SynthRegion { mechanism: Mechanism::Helix { hand: Helicity::Left }, power: 1.5 },
            SynthRegion { mechanism: Mechanism::Helix { hand: Helicity::Right }, power: 1.5 },
        ];
        let mut region_map = vec![0u8; height * width];
        let centers = [
            (height / 4, width / 4, 1u8),
            (height / 4, 3 * width / 4, 2),
            (3 * height / 4, width / 4, 3),
            (3 * height / 4, 3 * width / 4, 4),
        ];
        for (cr, cc, id) in centers {
            let r0 = cr - side / 2;
            let c0 = cc - side / 2;
            for r in r0..r0 + side {
                for c in c0..c0 + side {
                    region_map[r * width + c] = id;
                }
            }
        }
        Ok(SynthSpec { height, width, region_map, regions, noise_sigma: 0.05, seed })
    }
}

/// Background clutter for the desk scene: a partially polarized mixture with
/// a tilted dominant mechanism, chosen so its population entropy/alpha point
/// sits inside zone 5 with a wide margin to every zone boundary and to the
/// feasibility envelope.
pub fn desk_clutter_coherency() -> CoherencyMatrix {
    let chi = 2.0 * PI / 9.0;
    let two_theta = PI / 4.0;
    let k1 = [chi.cos(), chi.sin() * two_theta.cos(), chi.sin() * two_theta.sin()];
    let k2 = [-chi.sin(), chi.cos() * two_theta.cos(), chi.cos() * two_theta.sin()];
    let phases = [0.0, 0.6, 1.1].map(|p| Complex64::from_polar(1.0, p));
    let mut t = CoherencyMatrix::zero();
    for r in 0..3 {
        for c in 0..3 {
            let mut v = 0.65 * k1[r] * k1[c] + 0.25 * k2[r] * k2[c];
            if r == c {
                v += 0.10 / 3.0;
            }
            t.m[r][c] = phases[r] * v * phases[c].conj();
        }
    }
    t
}

enum RegionSampler {
    /// Scaled canonical pixel; each draw applies a fresh absolute phase.
    Point(SinclairPixel),
    /// Square root of the scaled coherency matrix, mapping iid circular
    /// Gaussians onto the population statistics in the Pauli basis.
    Clutter([[Complex64; 3]; 3]),
}

struct RegionState {
    sampler: RegionSampler,
    cameron: u8,
    zone: u8,
}

fn build_region(k: usize, region: &SynthRegion) -> Result<RegionState> {
    const OP: &str = "synthesize";
    let (sampler, population) = match (&region.mechanism, region.mechanism.canonical()) {
        (_, Some(canonical)) => {
            let scaled = canonical.scaled((region.power / canonical.span()).sqrt().into());
            let population = CoherencyMatrix::from_outer(&pauli_decompose(&scaled));
            (RegionSampler::Point(scaled), population)
        }
        (Mechanism::Clutter { coherency }, None) => {
            let mut t = CoherencyMatrix { m: hermitized(&coherency.m) };
            t.scale(region.power / t.trace());
            let (vals, vecs) = eigh3(&t.m);
            if vals[2] < -1e-9 * vals[0].abs() {
                return Err(CxError::contract(
                    OP,
                    format!("region {k} clutter matrix is not PSD: eigenvalue {:.3e}", vals[2]),
                ));
            }
            let mut a = [[Complex64::new(0.0, 0.0); 3]; 3];
            for (i, vec) in vecs.iter().enumerate() {
                let root = vals[i].max(0.0).sqrt();
                for r in 0..3 {
                    for c in 0..3 {
                        a[r][c] += root * vec[r] * vec[c].conj();
                    }
                }
            }
            (RegionSampler::Clutter(a), t)
        }
        _ => unreachable!("canonical() is None exactly for clutter"),
    };
    let zone = h_alpha(&population, &ZoneTable::default())?.zone;
    Ok(RegionState { sampler, cameron: region.mechanism.cameron_label(), zone })
}

/// Renders a scene deterministically from its spec.
pub fn synthesize(spec: &SynthSpec) -> Result<SynthOutput> {
    spec.validate()?;
    let states: Vec<RegionState> = spec
        .regions
        .iter()
        .enumerate()
        .map(|(k, r)| build_region(k, r))
        .collect::<Result<_>>()?;

    let mut raster = ComplexRaster::zeros(spec.height, spec.width, 3, Dtype::C64)?;
    let mut cameron = LabelPlane::zeros(spec.height, spec.width)?;
    let mut zone = LabelPlane::zeros(spec.height, spec.width)?;
    let mut rng = ChaCha12Rng::seed_from_u64(spec.seed);

    /// Circular Gaussian sample with expected squared modulus `pow`.
    fn circular(rng: &mut ChaCha12Rng, pow: f64) -> Complex64 {
        let s = pow.sqrt() * FRAC_1_SQRT_2;
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex64::new(re * s, im * s)
    }

    for r in 0..spec.height {
        for c in 0..spec.width {
            let state = &states[spec.region_map[r * spec.width + c] as usize];
            let mut p = match &state.sampler {
                RegionSampler::Point(pix) => {
                    let phase = Complex64::from_polar(1.0, rng.gen_range(0.0..TAU));
                    pix.scaled(phase)
                }
                RegionSampler::Clutter(a) => {
                    let z: [Complex64; 3] = std::array::from_fn(|_| circular(&mut rng, 1.0));
                    let mut k = [Complex64::new(0.0, 0.0); 3];
                    for (i, ki) in k.iter_mut().enumerate() {
                        *ki = a[i][0] * z[0] + a[i][1] * z[1] + a[i][2] * z[2];
                    }
                    pauli_compose(&PauliVector::new(k[0], k[1], k[2]))
                }
            };
            if spec.noise_sigma > 0.0 {
                let pow = spec.noise_sigma * spec.noise_sigma;
                p.s_hh += circular(&mut rng, pow);
                p.s_hv += circular(&mut rng, pow);
                p.s_vv += circular(&mut rng, pow);
                p.s_vh = p.s_hv;
            }
            raster.set_pixel(r, c, &p);
            cameron.set(r, c, state.cameron);
            zone.set(r, c, state.zone);
        }
    }
    raster.meta.insert("synth.seed".into(), spec.seed.to_string());
    raster.meta.insert("synth.sigma".into(), spec.noise_sigma.to_string());
    Ok(SynthOutput { raster, cameron, zone })
}
