pub mod dynamics;
pub mod geom;
pub mod kernels;
pub mod measure;
pub mod rng;
pub mod shrink;
pub mod stats;
pub mod validate;
