pub mod constructions;
pub mod discrepancy;
pub mod error;
pub mod experiments;
pub mod intrinsic_dim;
pub mod pointio;
pub mod relu_net;
pub mod synth_data;
pub mod wae_core;

pub use error::{Error, Result};
