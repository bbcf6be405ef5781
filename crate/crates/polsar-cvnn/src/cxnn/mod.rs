//! Complex-valued neural network layers and training machinery.

pub mod act;
pub mod checkpoint;
pub mod conv;
pub mod init;
pub mod linear;
pub mod loss;
pub mod model;
pub mod norm;
pub mod optim;
pub mod pool;
pub mod resample;

pub use act::{channel_geometry, ActLayer, Activation};
pub use checkpoint::{rng_from_meta, rng_to_meta, Checkpoint};
pub use conv::{conv2d, Conv2d};
pub use init::{init_param, Init};
pub use linear::{linear, Linear};
pub use loss::mse_loss;
pub use model::{stack_reim, unstack_reim, AeConfig, AutoEncoder, Bottleneck, Downsample, ResBlock};
pub use norm::{BatchNorm, BN_EPS, BN_MOMENTUM};
pub use optim::{AdamW, AdamWConfig, ParamModel};
pub use pool::{avg_pool2d, max_pool2d, subsample};
pub use resample::{upsample, upsample_bilinear, upsample_nearest, UpsampleMode};
