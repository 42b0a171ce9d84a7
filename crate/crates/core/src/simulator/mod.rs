//! Monte Carlo group-testing engine: test designs, observations, decoders,
//! and error-rate estimation.

mod decode;
mod ensemble;
mod estimate;
mod matrix;

pub(crate) use decode::scan_sets;
pub use decode::{
    info_density_decoder, map_decoder, Decoder, InfoDensityDecoder, MapDecoder, DEFAULT_SET_CAP,
};
pub use ensemble::{gen_matrix, Ensemble, EnsembleSpec};
pub use estimate::{
    estimate_pe, estimate_pe_ensemble, isotonic_nonincreasing, random_set, sample_observations,
    sweep_n, SimEstimate, SweepMode, SweepPoint, SweepResult,
};
pub use matrix::MeasurementMatrix;
