//! Converse bounds for noisy non-adaptive group testing.
//!
//! The library computes strong and weak converse thresholds on the number of
//! tests needed to recover `k` defectives among `p` items, checks the
//! approximations those thresholds rely on, and runs Monte Carlo decoders
//! against random test designs to compare the bounds with observed error
//! rates. All logarithms are natural.

mod error;
mod optimize;

pub mod approx_bounds;
pub mod channels;
pub mod infomath;
pub mod rng;
pub mod simulator;
pub mod thresholds;

pub use channels::{Channel, NoiseModel, ZOrientation};
pub use error::{Error, Result};
pub use infomath::Distribution;
pub use simulator::MeasurementMatrix;
