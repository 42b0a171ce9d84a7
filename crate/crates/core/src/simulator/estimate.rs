use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::decode::Decoder;
use super::ensemble::{gen_matrix, EnsembleSpec};
use super::MeasurementMatrix;
use crate::channels::Channel;
use crate::error::{param_err, Result};
use crate::rng::{substream, SimRng, DOMAIN_MATRIX, DOMAIN_TRIAL};

const Z_95: f64 = 1.959_963_984_540_054;
const DOMAIN_ENSEMBLE: u64 = DOMAIN_MATRIX ^ 0xe5e5;

/// Empirical exact-recovery error rate with a Wilson 95% interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimEstimate {
    pub pe_hat: f64,
    pub trials: u64,
    pub errors: u64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Binomial standard error `sqrt(pe_hat (1 - pe_hat) / trials)`.
    pub std_err: f64,
    pub seed: u64,
}

impl SimEstimate {
    pub fn from_counts(errors: u64, trials: u64, seed: u64) -> Self {
        assert!(trials > 0 && errors <= trials);
        let t = trials as f64;
        let pe_hat = errors as f64 / t;
        let z2 = Z_95 * Z_95;
        let denom = 1.0 + z2 / t;
        let center = (pe_hat + z2 / (2.0 * t)) / denom;
        let half = Z_95 / denom * (pe_hat * (1.0 - pe_hat) / t + z2 / (4.0 * t * t)).sqrt();
        SimEstimate {
            pe_hat,
            trials,
            errors,
            ci_low: (center - half).max(0.0).min(pe_hat),
            ci_high: (center + half).min(1.0).max(pe_hat),
            std_err: (pe_hat * (1.0 - pe_hat) / t).sqrt(),
            seed,
        }
    }
}

/// Draws `y` for the defective set `set` under `channel`, independently per test.
pub fn sample_observations<R: Rng + ?Sized>(
    matrix: &MeasurementMatrix,
    set: &[usize],
    channel: &Channel,
    rng: &mut R,
) -> Vec<u8> {
    matrix
        .defective_counts(set)
        .into_iter()
        .map(|v| channel.sample_unchecked(v, rng))
        .collect()
}

/// Uniformly random size-`k` subset of `0..p`, sorted.
pub fn random_set<R: Rng + ?Sized>(p: usize, k: usize, rng: &mut R) -> Vec<usize> {
    let mut s = sample(rng, p, k).into_vec();
    s.sort_unstable();
    s
}

fn check_trial_args(p: usize, k: usize, trials: u64) -> Result<()> {
    if trials == 0 {
        return Err(param_err!("trials must be at least 1"));
    }
    if k > p {
        return Err(param_err!("k = {k} exceeds p = {p}"));
    }
    Ok(())
}

fn one_trial(
    matrix: &MeasurementMatrix,
    channel: &Channel,
    k: usize,
    decoder: &dyn Decoder,
    rng: &mut SimRng,
) -> Result<u64> {
    let truth = random_set(matrix.p(), k, rng);
    let y = sample_observations(matrix, &truth, channel, rng);
    let estimate = decoder.decode(matrix, &y, k)?;
    Ok(u64::from(estimate.as_deref() != Some(truth.as_slice())))
}

/// `pe(X)` for a fixed matrix. Trial `t` uses stream `t` of `seed`, so two
/// decoders run with the same seed see identical `(S, Y)` pairs.
pub fn estimate_pe(
    matrix: &MeasurementMatrix,
    channel: &Channel,
    k: usize,
    decoder: &dyn Decoder,
    trials: u64,
    seed: u64,
) -> Result<SimEstimate> {
    check_trial_args(matrix.p(), k, trials)?;
    let errors = (0..trials)
        .into_par_iter()
        .map(|t| {
            one_trial(
                matrix,
                channel,
                k,
                decoder,
                &mut substream(seed, DOMAIN_TRIAL, t),
            )
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    Ok(SimEstimate::from_counts(errors, trials, seed))
}

/// Ensemble-averaged error: every trial draws a fresh `n x p` matrix from
/// `spec` (stream `t` of `spec.seed`) before drawing `(S, Y)`.
#[allow(clippy::too_many_arguments)]
pub fn estimate_pe_ensemble(
    spec: &EnsembleSpec,
    n: usize,
    p: usize,
    channel: &Channel,
    k: usize,
    decoder: &dyn Decoder,
    trials: u64,
    seed: u64,
) -> Result<SimEstimate> {
    check_trial_args(p, k, trials)?;
    spec.ensemble.validate(n, k)?;
    let errors = (0..trials)
        .into_par_iter()
        .map(|t| {
            let matrix =
                spec.ensemble
                    .sample(n, p, k, &mut substream(spec.seed, DOMAIN_ENSEMBLE, t))?;
            one_trial(
                &matrix,
                channel,
                k,
                decoder,
                &mut substream(seed, DOMAIN_TRIAL, t),
            )
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    Ok(SimEstimate::from_counts(errors, trials, seed))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepMode {
    /// Fresh matrix per trial; estimates the ensemble average of `pe(X)`.
    Ensemble,
    /// One matrix per grid point from `spec.seed`; estimates `pe(X)`.
    Fixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub n: usize,
    pub estimate: SimEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub mode: SweepMode,
    pub points: Vec<SweepPoint>,
    /// Trial-weighted isotonic (nonincreasing in `n`) fit of `pe_hat`.
    pub isotonic: Vec<f64>,
}

impl SweepResult {
    /// Smallest `n` at which the isotonic curve falls to `level`, linearly
    /// interpolated between grid points. `None` if it never does.
    pub fn crossing(&self, level: f64) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self
            .points
            .iter()
            .zip(&self.isotonic)
            .map(|(pt, &pe)| (pt.n as f64, pe))
            .collect();
        if pts.first()?.1 <= level {
            return Some(pts[0].0);
        }
        pts.windows(2).find_map(|w| {
            let ((n0, e0), (n1, e1)) = (w[0], w[1]);
            (e1 <= level).then(|| n0 + (n1 - n0) * (e0 - level) / (e0 - e1))
        })
    }
}

/// Map-decoded error rate over a grid of test counts.
#[allow(clippy::too_many_arguments)]
pub fn sweep_n(
    spec: &EnsembleSpec,
    channel: &Channel,
    p: usize,
    k: usize,
    n_grid: &[usize],
    decoder: &dyn Decoder,
    trials: u64,
    seed: u64,
    mode: SweepMode,
) -> Result<SweepResult> {
    if n_grid.is_empty() {
        return Err(param_err!("empty n grid"));
    }
    let mut grid = n_grid.to_vec();
    grid.sort_unstable();
    grid.dedup();
    let points = grid
        .iter()
        .map(|&n| {
            let estimate = match mode {
                SweepMode::Ensemble => {
                    estimate_pe_ensemble(spec, n, p, channel, k, decoder, trials, seed)?
                }
                SweepMode::Fixed => {
                    let matrix = gen_matrix(spec, n, p, k)?;
                    estimate_pe(&matrix, channel, k, decoder, trials, seed)?
                }
            };
            Ok(SweepPoint { n, estimate })
        })
        .collect::<Result<Vec<_>>>()?;
    let values: Vec<f64> = points.iter().map(|pt| pt.estimate.pe_hat).collect();
    let weights: Vec<f64> = points.iter().map(|pt| pt.estimate.trials as f64).collect();
    let isotonic = isotonic_nonincreasing(&values, &weights);
    Ok(SweepResult {
        mode,
        points,
        isotonic,
    })
}

/// Weighted least-squares nonincreasing fit (pool adjacent violators).
pub fn isotonic_nonincreasing(values: &[f64], weights: &[f64]) -> Vec<f64> {
    // blocks of (mean, weight, length)
    let mut blocks: Vec<(f64, f64, usize)> = Vec::with_capacity(values.len());
    for (&v, &w) in values.iter().zip(weights) {
        blocks.push((v, w, 1));
        while blocks.len() > 1 {
            let (m1, w1, l1) = blocks[blocks.len() - 1];
            let (m0, w0, l0) = blocks[blocks.len() - 2];
            if m0 >= m1 {
                break;
            }
            blocks.truncate(blocks.len() - 2);
            blocks.push(((m0 * w0 + m1 * w1) / (w0 + w1), w0 + w1, l0 + l1));
        }
    }
    blocks
        .into_iter()
        .flat_map(|(m, _, len)| std::iter::repeat_n(m, len))
        .collect()
}
