pub mod tree;
pub mod term;
pub mod model;
pub mod spectral;
pub mod noise;
pub mod scheme;
pub mod harness;
