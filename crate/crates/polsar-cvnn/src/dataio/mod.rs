//! Data plumbing: the complex raster container, tile grids and fold splits,
//! invertible normalization, and synthetic scene generation.

mod normalize;
mod raster;
mod synth;
mod tiling;

pub use normalize::{denormalize, denormalize_with, normalize, NormMode, NormParams};
pub use raster::{
    import_raw, read_labels, read_raster, write_labels, write_raster, ComplexRaster, Dtype,
    LabelPlane,
};
pub use synth::{
    desk_clutter_coherency, synthesize, Mechanism, SynthOutput, SynthRegion, SynthSpec,
};
pub use tiling::{
    extract_tile, extract_tiles, read_manifest, split, tile, tile_grid, write_manifest, Split,
    TileRect, TileSet,
};
