//! Property tests for the decomposition stack: energy conservation, exact
//! round trips, classification invariances and spectral sanity on random
//! inputs.

use num_complex::Complex64;
use polsar_cvnn::polarimetry::{
    boxcar_scm, cameron_classify, circular_basis, classify_zone, feasibility_envelope, h_alpha,
    krogager_decompose, krogager_resynthesize, pauli_compose, pauli_decompose, CameronClass,
    CoherencyMatrix, Helicity, HelicityRule, PauliVector, SinclairPixel, ZoneTable,
    CAMERON_REC_THRESHOLD, CAMERON_SYM_THRESHOLD,
};
use polsar_cvnn::testkit::{eig3_charpoly_oracle, rand_psd3, rng};
use rand::Rng;
use rand_chacha::ChaCha12Rng;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

fn rand_cx(rng: &mut ChaCha12Rng, scale: f64) -> Complex64 {
    Complex64::new(rng.gen_range(-scale..scale), rng.gen_range(-scale..scale))
}

fn rand_reciprocal(rng: &mut ChaCha12Rng) -> SinclairPixel {
    SinclairPixel::reciprocal(rand_cx(rng, 2.0), rand_cx(rng, 2.0), rand_cx(rng, 2.0))
}

fn pixel_distance(a: &SinclairPixel, b: &SinclairPixel) -> f64 {
    ((a.s_hh - b.s_hh).norm_sqr()
        + (a.s_hv - b.s_hv).norm_sqr()
        + (a.s_vh - b.s_vh).norm_sqr()
        + (a.s_vv - b.s_vv).norm_sqr())
    .sqrt()
}

#[test]
fn pauli_round_trips_and_preserves_power() {
    let mut rng = rng(301);
    for _ in 0..10_000 {
        let p = rand_reciprocal(&mut rng);
        let k = pauli_decompose(&p);
        let span = p.span();
        assert!((k.power() - span).abs() <= 1e-12 * span.max(1.0));
        let back = pauli_compose(&k);
        assert!(pixel_distance(&p, &back) <= 1e-12 * span.sqrt().max(1.0));
    }
}

#[test]
fn pauli_composition_inverts_from_the_vector_side() {
    let mut rng = rng(302);
    for _ in 0..5_000 {
        let k = PauliVector {
            alpha: rand_cx(&mut rng, 2.0),
            beta: rand_cx(&mut rng, 2.0),
            gamma: rand_cx(&mut rng, 2.0),
        };
        let again = pauli_decompose(&pauli_compose(&k));
        assert!((again.alpha - k.alpha).norm() < 1e-12);
        assert!((again.beta - k.beta).norm() < 1e-12);
        assert!((again.gamma - k.gamma).norm() < 1e-12);
    }
}

#[test]
fn circular_basis_preserves_total_power() {
    let mut rng = rng(303);
    for _ in 0..10_000 {
        let p = rand_reciprocal(&mut rng);
        let (srr, sll, srl) = circular_basis(&p);
        let circ = srr.norm_sqr() + sll.norm_sqr() + 2.0 * srl.norm_sqr();
        assert!((circ - p.span()).abs() <= 1e-12 * p.span().max(1.0));
    }
}

#[test]
fn krogager_resynthesis_reproduces_random_pixels() {
    let mut rng = rng(304);
    for _ in 0..2_000 {
        let p = rand_reciprocal(&mut rng);
        let v = krogager_decompose(&p, HelicityRule::Dominance).unwrap();
        assert!(v.k_s >= 0.0 && v.k_d >= 0.0 && v.k_h >= 0.0);
        assert!(v.theta > -FRAC_PI_4 - 1e-12 && v.theta <= FRAC_PI_4 + 1e-12);
        assert!(v.phi.abs() <= PI + 1e-12 && v.phi_s.abs() <= PI + 1e-12);
        let back = krogager_resynthesize(&v);
        assert!(pixel_distance(&p, &back) <= 1e-10 * p.span().sqrt().max(1.0));
    }
}

#[test]
fn krogager_pure_mechanisms_keep_a_single_component() {
    let mut rng = rng(305);
    for _ in 0..500 {
        let c = rand_cx(&mut rng, 3.0);
        if c.norm() < 1e-6 {
            continue;
        }
        let s = krogager_decompose(&SinclairPixel::sphere().scaled(c), HelicityRule::Dominance)
            .unwrap();
        assert!((s.k_s - c.norm()).abs() < 1e-12 && s.k_d < 1e-12 && s.k_h < 1e-12);

        let theta = rng.gen_range(-0.7..0.7);
        let d = krogager_decompose(&SinclairPixel::diplane(theta).scaled(c), HelicityRule::Dominance)
            .unwrap();
        assert!((d.k_d - c.norm()).abs() < 1e-12 && d.k_s < 1e-12 && d.k_h < 1e-12);

        for hand in [Helicity::Left, Helicity::Right] {
            let h = krogager_decompose(
                &SinclairPixel::helix(hand, theta).scaled(c),
                HelicityRule::Dominance,
            )
            .unwrap();
            assert!((h.k_h - c.norm()).abs() < 1e-12 && h.k_s < 1e-12 && h.k_d < 1e-12);
            assert_eq!(h.helicity, hand);
        }
    }
}

#[test]
fn krogager_and_cameron_agree_on_helix_handedness() {
    let mut rng = rng(306);
    for _ in 0..200 {
        let c = rand_cx(&mut rng, 2.0);
        if c.norm() < 1e-3 {
            continue;
        }
        let theta = rng.gen_range(-0.7..0.7);
        for (hand, class) in
            [(Helicity::Left, CameronClass::LeftHelix), (Helicity::Right, CameronClass::RightHelix)]
        {
            let p = SinclairPixel::helix(hand, theta).scaled(c);
            let v = krogager_decompose(&p, HelicityRule::Dominance).unwrap();
            assert_eq!(v.helicity, hand);
            let r = cameron_classify(&p, CAMERON_REC_THRESHOLD, CAMERON_SYM_THRESHOLD).unwrap();
            assert_eq!(r.class, Some(class));
        }
    }
}

#[test]
fn cameron_classes_survive_complex_scaling() {
    let mut rng = rng(307);
    let canon: [(SinclairPixel, CameronClass); 9] = [
        (SinclairPixel::sphere(), CameronClass::Trihedral),
        (SinclairPixel::diplane(0.0), CameronClass::Dihedral),
        (SinclairPixel::narrow_diplane(), CameronClass::NarrowDiplane),
        (SinclairPixel::dipole(), CameronClass::Dipole),
        (SinclairPixel::cylinder(), CameronClass::Cylinder),
        (SinclairPixel::quarter_wave(), CameronClass::QuarterWave),
        (SinclairPixel::helix(Helicity::Left, 0.0), CameronClass::LeftHelix),
        (SinclairPixel::helix(Helicity::Right, 0.0), CameronClass::RightHelix),
        (SinclairPixel::antisymmetric(), CameronClass::NonReciprocal),
    ];
    for (p, want) in &canon {
        for _ in 0..200 {
            let c = rand_cx(&mut rng, 2.0);
            if c.norm() < 1e-3 {
                continue;
            }
            let got = cameron_classify(&p.scaled(c), CAMERON_REC_THRESHOLD, CAMERON_SYM_THRESHOLD)
                .unwrap();
            assert_eq!(got.class, Some(*want), "{}", want.name());
        }
    }
}

#[test]
fn cameron_invariants_hold_on_random_pixels() {
    let mut rng = rng(308);
    for round in 0..5_000 {
        // Mix reciprocal and fully general pixels.
        let p = if round % 3 == 0 {
            SinclairPixel::new(
                rand_cx(&mut rng, 2.0),
                rand_cx(&mut rng, 2.0),
                rand_cx(&mut rng, 2.0),
                rand_cx(&mut rng, 2.0),
            )
        } else {
            rand_reciprocal(&mut rng)
        };
        let r = cameron_classify(&p, CAMERON_REC_THRESHOLD, CAMERON_SYM_THRESHOLD).unwrap();
        assert!((0.0..=FRAC_PI_2 + 1e-12).contains(&r.rec_angle));
        assert!((0.0..=FRAC_PI_4 + 1e-12).contains(&r.sym_angle));
        assert!(r.z.norm() <= 1.0 + 1e-12);
        assert!(r.label() <= 10);
        if r.rec_angle > CAMERON_REC_THRESHOLD {
            assert_eq!(r.class, Some(CameronClass::NonReciprocal));
        }
    }
}

#[test]
fn h_alpha_spectra_match_the_characteristic_polynomial() {
    let table = ZoneTable::default();
    let mut rng = rng(309);
    for _ in 0..2_000 {
        let t = CoherencyMatrix { m: rand_psd3(&mut rng, 0.0) };
        let r = h_alpha(&t, &table).unwrap();
        assert!(r.valid);
        assert!((0.0..=1.0 + 1e-12).contains(&r.entropy));
        assert!((0.0..=FRAC_PI_2 + 1e-12).contains(&r.alpha_mean));
        let sum: f64 = r.pseudo_probs.iter().sum();
        assert!((sum - 1.0).abs() < 1e-9);
        assert!(r.eigenvalues[0] >= r.eigenvalues[1] && r.eigenvalues[1] >= r.eigenvalues[2]);
        let want = eig3_charpoly_oracle(&t.m);
        let scale = want[0].max(1.0);
        for (got, want) in r.eigenvalues.iter().zip(&want) {
            assert!((got - want).abs() < 1e-9 * scale);
        }
        assert!((1..=9).contains(&r.zone));
    }
}

#[test]
fn boxcar_pipeline_yields_classified_pixels() {
    let table = ZoneTable::default();
    let mut rng = rng(310);
    let (h, w) = (12, 9);
    let field: Vec<PauliVector> =
        (0..h * w).map(|_| pauli_decompose(&rand_reciprocal(&mut rng))).collect();
    let scm = boxcar_scm(&field, h, w, 3).unwrap();
    assert_eq!(scm.len(), h * w);
    for t in &scm {
        assert!(t.hermitian_defect() < 1e-12 * t.trace().max(1.0));
        let r = h_alpha(t, &table).unwrap();
        assert!(r.valid);
        assert_eq!(classify_zone(r.entropy, r.alpha_mean, &table).unwrap(), r.zone);
    }
}

#[test]
fn degenerate_eigenvalue_families_trace_the_envelope() {
    let env = feasibility_envelope(2048);
    let table = ZoneTable::default();
    for k in 0..200 {
        let m = k as f64 / 199.0;
        let mut lo = CoherencyMatrix::zero();
        let mut hi = CoherencyMatrix::zero();
        for i in 0..3 {
            lo.m[i][i] = Complex64::from(if i == 0 { 1.0 } else { m });
            hi.m[i][i] = Complex64::from(if i == 2 { m } else { 1.0 });
        }
        for t in [lo, hi] {
            let r = h_alpha(&t, &table).unwrap();
            if r.valid {
                // Slack covers chord error of the sampled envelope, which
                // concentrates where the lower curve bends near H -> 0.
                assert!(env.contains(r.entropy, r.alpha_mean, 1e-4), "H={}", r.entropy);
            }
        }
    }
}
