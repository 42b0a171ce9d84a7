//! Converse thresholds on the number of tests.
//!
//! * [`strong_converse_threshold`]: below `ln C(p,k) / I*` tests the error
//!   probability of every decoder tends to one; [`chebyshev_error_lower_bound`]
//!   gives the finite-`n` version of that statement for a concrete matrix.
//! * [`weak_converse_threshold`] and [`mixture_threshold`]: the genie-aided
//!   per-`ell` bounds, below which the error probability cannot vanish.

use std::ops::ControlFlow;

use serde::{Deserialize, Serialize};

use crate::channels::Channel;
use crate::error::{domain_err, param_err, Error, Result};
use crate::infomath::{
    binary_entropy, conditional_mi_bernoulli_design, kl_binary, ln_choose, Distribution,
};
use crate::optimize::{golden_min, grid_golden_min};
use crate::rng::{substream, DOMAIN_SETS};
use crate::simulator::{random_set, scan_sets, MeasurementMatrix, DEFAULT_SET_CAP};

pub const DEFAULT_CAPACITY_TOL: f64 = 1e-9;
pub const DEFAULT_CAPACITY_MAX_ITER: usize = 100_000;
/// Grid points seeding every search over `nu in [0, k]`.
pub const NU_GRID_POINTS: usize = 256;
/// Set averages are exhaustive up to this many candidate sets.
pub const EXHAUSTIVE_SET_LIMIT: u64 = 100_000;
pub const DEFAULT_DELTA: f64 = 0.1;
pub const DEFAULT_C0: f64 = 1.0;

/// Capacity of `P(Y | V_S)` over all input laws on `0..=k`, with the
/// capacity-achieving output distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityResult {
    pub capacity: f64,
    pub q_star: Distribution,
    pub input_dist: Distribution,
    pub iterations: usize,
    /// `max_v D(P(.|v) || Q) - sum_v P(v) D(P(.|v) || Q)` at the last iterate.
    pub gap: f64,
}

impl CapacityResult {
    pub fn q_star_pair(&self) -> [f64; 2] {
        [self.q_star.pmf(0), self.q_star.pmf(1)]
    }
}

pub fn capacity_output_dist(channel: &Channel, tol: f64) -> Result<CapacityResult> {
    capacity_output_dist_capped(channel, tol, DEFAULT_CAPACITY_MAX_ITER)
}

/// Alternating maximization: reweight each input by `exp` of its divergence
/// from the current output marginal until the divergences agree to `tol`.
///
/// With a binary output every row is a mixture of the rows with the smallest
/// and largest `P(Y = 1 | v)`, so the iteration runs on those two inputs only
/// and the optimal input law is supported on them. Once the stopping rule is
/// met the iterate is replaced by the exact fixed point of the two-input
/// problem, the output law `r` with `D(a || r) = D(b || r)`. `gap` is
/// reported over all rows.
pub fn capacity_output_dist_capped(
    channel: &Channel,
    tol: f64,
    max_iter: usize,
) -> Result<CapacityResult> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(param_err!("tolerance must be positive, got {tol}"));
    }
    let table = channel.table();
    let lo = (0..table.len())
        .min_by(|&a, &b| table[a].total_cmp(&table[b]))
        .expect("nonempty table");
    let hi = (0..table.len())
        .max_by(|&a, &b| table[a].total_cmp(&table[b]).then(b.cmp(&a)))
        .expect("nonempty table");
    let extremes = [channel.row(lo), channel.row(hi)];
    let divergences = |w: [f64; 2]| {
        let p1 = (w[0] * extremes[0][1] + w[1] * extremes[1][1]).clamp(0.0, 1.0);
        let out = [1.0 - p1, p1];
        let d = [kl_binary(extremes[0], out), kl_binary(extremes[1], out)];
        (out, d, w[0] * d[0] + w[1] * d[1])
    };
    let finish = |w: [f64; 2], iterations: usize| {
        let (out, _, mean) = divergences(w);
        let max_all = (0..table.len())
            .map(|v| kl_binary(channel.row(v), out))
            .fold(f64::NEG_INFINITY, f64::max);
        let mut input = vec![0.0; table.len()];
        input[lo] += w[0];
        input[hi] += w[1];
        CapacityResult {
            capacity: mean.max(0.0),
            q_star: Distribution::new(0, out.to_vec())
                .unwrap_or_else(|_| Distribution::bernoulli(out[1]).expect("in [0, 1]")),
            input_dist: Distribution::normalized(0, input).expect("positive weights"),
            iterations,
            gap: (max_all - mean).max(0.0),
        }
    };
    if lo == hi || table[lo] == table[hi] {
        return Ok(finish([1.0, 0.0], 0));
    }
    let mut weights = [0.5, 0.5];
    let mut iterations = 0;
    loop {
        let (_, d, mean) = divergences(weights);
        let max = d[0].max(d[1]);
        if max - mean <= tol {
            let (a, b) = (table[lo], table[hi]);
            let logit = (binary_entropy(a) - binary_entropy(b)) / (b - a);
            let r = 1.0 / (1.0 + (-logit).exp());
            let w = ((r - a) / (b - a)).clamp(0.0, 1.0);
            return Ok(finish([1.0 - w, w], iterations));
        }
        if iterations >= max_iter {
            return Err(Error::Convergence {
                iterations,
                gap: max - mean,
                best: Box::new(finish(weights, iterations)),
            });
        }
        let w = [
            weights[0] * (d[0] - max).exp(),
            weights[1] * (d[1] - max).exp(),
        ];
        let total = w[0] + w[1];
        weights = [w[0] / total, w[1] / total];
        iterations += 1;
    }
}

/// Design MI with `nu` clamped to `[0, k]`; `ell` is always in range here.
fn design_mi(channel: &Channel, ell: usize, nu: f64) -> f64 {
    if channel.is_uninformative() {
        return 0.0;
    }
    conditional_mi_bernoulli_design(channel, ell, nu.clamp(0.0, channel.k() as f64))
        .expect("ell in 1..=k")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IStar {
    pub nu: f64,
    pub value: f64,
}

/// `max_{nu in [0,k]} I(X_s; Y)` for Bernoulli(`nu / k`) entries.
pub fn i_star(channel: &Channel) -> IStar {
    let k = channel.k();
    let (nu, neg) = grid_golden_min(
        |nu| -design_mi(channel, k, nu),
        0.0,
        k as f64,
        NU_GRID_POINTS,
        1e-10 * k as f64,
    );
    IStar { nu, value: -neg }
}

fn check_pk(p: usize, k: usize) -> Result<()> {
    if k == 0 || k > p {
        return Err(domain_err!("need 1 <= k <= p, got p = {p}, k = {k}"));
    }
    Ok(())
}

fn check_eta(eta: f64) -> Result<()> {
    if !(0.0..1.0).contains(&eta) {
        return Err(param_err!("eta = {eta} outside [0, 1)"));
    }
    Ok(())
}

/// `ln C(p,k) / I* * (1 - eta)`; `+inf` when `I* = 0` and `p > k`.
pub fn strong_converse_threshold(p: usize, k: usize, channel: &Channel, eta: f64) -> Result<f64> {
    check_pk(p, k)?;
    check_eta(eta)?;
    if channel.k() != k {
        return Err(param_err!("channel built for k = {}, not {k}", channel.k()));
    }
    let log_sets = ln_choose(p as u64, k as u64);
    if log_sets == 0.0 {
        return Ok(0.0);
    }
    let istar = i_star(channel).value;
    if istar <= 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(log_sets / istar * (1.0 - eta))
}

/// Mean and variance of `sum_i ln(P(Y_i | v_i) / q(Y_i))` given the set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InfoDensityMoments {
    pub mean: f64,
    pub variance: f64,
}

/// Per-test mean and variance of the log-likelihood ratio at each `v`;
/// `None` where `q` vanishes on an output the row can produce.
fn per_test_moments(channel: &Channel, k: usize, q: [f64; 2]) -> Vec<Option<(f64, f64)>> {
    (0..=k)
        .map(|v| {
            let w = channel.row(v);
            let mut m1 = 0.0;
            let mut m2 = 0.0;
            for y in 0..2 {
                if w[y] > 0.0 {
                    if q[y] <= 0.0 {
                        return None;
                    }
                    let l = (w[y] / q[y]).ln();
                    m1 += w[y] * l;
                    m2 += w[y] * l * l;
                }
            }
            Some((m1, (m2 - m1 * m1).max(0.0)))
        })
        .collect()
}

fn binary_q(q: &Distribution) -> Result<[f64; 2]> {
    if q.offset() < 0 || q.max_value() > 1 {
        return Err(param_err!("auxiliary output law must live on {{0, 1}}"));
    }
    Ok([q.pmf(0), q.pmf(1)])
}

fn moments_from_counts(
    table: &[Option<(f64, f64)>],
    counts: impl Iterator<Item = (usize, u32)>,
) -> Result<InfoDensityMoments> {
    let mut mean = 0.0;
    let mut variance = 0.0;
    for (v, c) in counts {
        if c == 0 {
            continue;
        }
        let (m, s) = table[v].ok_or_else(|| {
            Error::AbsoluteContinuity(format!(
                "auxiliary law has zero mass on an output reachable at v = {v}"
            ))
        })?;
        mean += c as f64 * m;
        variance += c as f64 * s;
    }
    Ok(InfoDensityMoments { mean, variance })
}

pub fn info_density_moments(
    matrix: &MeasurementMatrix,
    set: &[usize],
    channel: &Channel,
    q: &Distribution,
) -> Result<InfoDensityMoments> {
    let k = set.len();
    if channel.k() < k {
        return Err(param_err!(
            "set of size {k} exceeds channel k = {}",
            channel.k()
        ));
    }
    if let Some(&j) = set.iter().find(|&&j| j >= matrix.p()) {
        return Err(domain_err!("item {j} outside 0..{}", matrix.p()));
    }
    let table = per_test_moments(channel, k, binary_q(q)?);
    let mut counts = vec![0u32; k + 1];
    for v in matrix.defective_counts(set) {
        counts[v] += 1;
    }
    moments_from_counts(&table, counts.into_iter().enumerate())
}

/// Largest single-test variance of the log-likelihood ratio over `v`.
pub fn max_per_test_variance(channel: &Channel, q: &Distribution) -> Result<f64> {
    per_test_moments(channel, channel.k(), binary_q(q)?)
        .into_iter()
        .map(|m| {
            m.map(|(_, s)| s).ok_or_else(|| {
                Error::AbsoluteContinuity("auxiliary law misses a reachable output".into())
            })
        })
        .try_fold(0.0f64, |acc, s| Ok(acc.max(s?)))
}

/// How the average over defective sets is taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SetSampler {
    Exhaustive,
    MonteCarlo {
        trials: u64,
        seed: u64,
    },
    /// Exhaustive when `C(p,k) <= EXHAUSTIVE_SET_LIMIT`, else Monte Carlo.
    Auto {
        trials: u64,
        seed: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChebyshevBound {
    /// Lower bound on `pe(X)`; zero when vacuous.
    pub bound: f64,
    pub vacuous: bool,
    pub failure: Option<String>,
    pub delta: f64,
    pub delta1: f64,
    pub i_star: f64,
    pub capacity: f64,
    pub log_sets: f64,
    pub n: usize,
    pub sets_evaluated: u64,
    pub exhaustive: bool,
    /// Set-average of `sigma^2 / (n delta I*)^2`.
    pub variance_term: f64,
    /// Standard error of `variance_term` under Monte Carlo set sampling.
    pub variance_term_std_err: f64,
    pub max_mean: f64,
}

/// `1/sqrt(C(p,k))` clipped to `[1e-6, 0.5]`.
pub fn default_delta1(p: usize, k: usize) -> f64 {
    (-0.5 * ln_choose(p as u64, k as u64))
        .exp()
        .clamp(1e-6, 0.5)
}

/// Log-spaced values of `delta` in `(0, 1)` for [`best_chebyshev_bound`].
pub fn default_delta_grid() -> Vec<f64> {
    let (lo, hi, points) = (1e-4f64.ln(), 0.99f64.ln(), 120);
    (0..points)
        .map(|i| (lo + (hi - lo) * i as f64 / (points - 1) as f64).exp())
        .collect()
}

struct SetMoments {
    moments: Vec<InfoDensityMoments>,
    exhaustive: bool,
    i_star: f64,
    capacity: f64,
    log_sets: f64,
}

fn collect_set_moments(
    matrix: &MeasurementMatrix,
    channel: &Channel,
    k: usize,
    sampler: SetSampler,
) -> Result<SetMoments> {
    let p = matrix.p();
    check_pk(p, k)?;
    if channel.k() != k {
        return Err(param_err!("channel built for k = {}, not {k}", channel.k()));
    }
    let cap = capacity_output_dist(channel, DEFAULT_CAPACITY_TOL)?;
    let table = per_test_moments(channel, k, cap.q_star_pair());
    let log_sets = ln_choose(p as u64, k as u64);
    let exhaustive = match sampler {
        SetSampler::Exhaustive => true,
        SetSampler::MonteCarlo { .. } => false,
        SetSampler::Auto { .. } => log_sets <= (EXHAUSTIVE_SET_LIMIT as f64).ln() + 1e-9,
    };
    if exhaustive && log_sets > (DEFAULT_SET_CAP as f64).ln() + 1e-9 {
        return Err(Error::Feasibility(format!(
            "C({p}, {k}) sets exceeds the cap of {DEFAULT_SET_CAP}; use Monte Carlo set sampling"
        )));
    }
    let mut moments = Vec::new();
    if exhaustive {
        let zeros = vec![0u8; matrix.n()];
        let mut failure = None;
        scan_sets(matrix, &zeros, k, |_, t| {
            match moments_from_counts(&table, t.counts.iter().map(|c| c[0]).enumerate()) {
                Ok(m) => {
                    moments.push(m);
                    ControlFlow::Continue(())
                }
                Err(e) => {
                    failure = Some(e);
                    ControlFlow::Break(())
                }
            }
        });
        if let Some(e) = failure {
            return Err(e);
        }
    } else {
        let (SetSampler::MonteCarlo { trials, seed } | SetSampler::Auto { trials, seed }) = sampler
        else {
            unreachable!()
        };
        if trials == 0 {
            return Err(param_err!("Monte Carlo set sampling needs trials >= 1"));
        }
        for t in 0..trials {
            let set = random_set(p, k, &mut substream(seed, DOMAIN_SETS, t));
            let mut counts = vec![0u32; k + 1];
            for v in matrix.defective_counts(&set) {
                counts[v] += 1;
            }
            moments.push(moments_from_counts(&table, counts.into_iter().enumerate())?);
        }
    }
    Ok(SetMoments {
        moments,
        exhaustive,
        i_star: i_star(channel).value,
        capacity: cap.capacity,
        log_sets,
    })
}

fn bound_from_moments(sm: &SetMoments, n: usize, delta1: f64, delta: f64) -> ChebyshevBound {
    let dev = n as f64 * delta * sm.i_star;
    let level = sm.log_sets + delta1.ln();
    let max_mean = sm
        .moments
        .iter()
        .map(|m| m.mean)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut out = ChebyshevBound {
        bound: 0.0,
        vacuous: true,
        failure: None,
        delta,
        delta1,
        i_star: sm.i_star,
        capacity: sm.capacity,
        log_sets: sm.log_sets,
        n,
        sets_evaluated: sm.moments.len() as u64,
        exhaustive: sm.exhaustive,
        variance_term: f64::NAN,
        variance_term_std_err: 0.0,
        max_mean,
    };
    // Chebyshev needs the threshold ln C(p,k) + ln delta1 to sit at least
    // n delta I* above the mean for every set.
    if let Some((i, m)) = sm
        .moments
        .iter()
        .enumerate()
        .find(|(_, m)| level < m.mean + dev - 1e-12 * level.abs().max(1.0))
    {
        out.failure = Some(format!(
            "set #{i}: ln C(p,k) + ln delta1 = {level:.6} < mean {:.6} + n*delta*I* {dev:.6}",
            m.mean
        ));
        return out;
    }
    let terms: Vec<f64> = sm
        .moments
        .iter()
        .map(|m| {
            if m.variance == 0.0 {
                0.0
            } else if dev == 0.0 {
                f64::INFINITY
            } else {
                m.variance / (dev * dev)
            }
        })
        .collect();
    let count = terms.len() as f64;
    let avg = terms.iter().sum::<f64>() / count;
    if !sm.exhaustive && count > 1.0 && avg.is_finite() {
        let var = terms.iter().map(|t| (t - avg).powi(2)).sum::<f64>() / (count - 1.0);
        out.variance_term_std_err = (var / count).sqrt();
    }
    out.variance_term = avg;
    out.bound = (1.0 - avg - delta1).max(0.0);
    out.vacuous = false;
    out
}

fn check_chebyshev_args(delta1: f64, delta: f64) -> Result<()> {
    if !(delta1 > 0.0 && delta1 < 1.0) {
        return Err(param_err!("delta1 = {delta1} outside (0, 1)"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(param_err!("delta = {delta} outside (0, 1)"));
    }
    Ok(())
}

/// Finite-`n` strong-converse lower bound on `pe(X)` for a given matrix,
/// with `Q_Y` the capacity-achieving output law.
pub fn chebyshev_error_lower_bound(
    matrix: &MeasurementMatrix,
    channel: &Channel,
    k: usize,
    delta1: f64,
    delta: f64,
    sampler: SetSampler,
) -> Result<ChebyshevBound> {
    check_chebyshev_args(delta1, delta)?;
    let sm = collect_set_moments(matrix, channel, k, sampler)?;
    Ok(bound_from_moments(&sm, matrix.n(), delta1, delta))
}

/// Largest Chebyshev bound over a grid of `delta` values. The set moments are
/// computed once and shared by every grid point.
pub fn best_chebyshev_bound(
    matrix: &MeasurementMatrix,
    channel: &Channel,
    k: usize,
    delta1: f64,
    sampler: SetSampler,
    deltas: &[f64],
) -> Result<ChebyshevBound> {
    if deltas.is_empty() {
        return Err(param_err!("empty delta grid"));
    }
    for &d in deltas {
        check_chebyshev_args(delta1, d)?;
    }
    let sm = collect_set_moments(matrix, channel, k, sampler)?;
    let mut best: Option<ChebyshevBound> = None;
    for &d in deltas {
        let b = bound_from_moments(&sm, matrix.n(), delta1, d);
        let better = match &best {
            None => true,
            Some(cur) => (cur.vacuous && !b.vacuous) || (!b.vacuous && b.bound > cur.bound),
        };
        if better {
            best = Some(b);
        }
    }
    Ok(best.expect("nonempty grid"))
}

/// `c0 * ell (k - ell) / p * max(1, ln(p / (ell (k - ell))))`, zero at `ell = k`.
pub fn delta_ell(p: usize, k: usize, ell: usize, c0: f64) -> f64 {
    if ell >= k {
        return 0.0;
    }
    let x = (ell * (k - ell)) as f64 / p as f64;
    c0 * x * (-x.ln()).max(1.0)
}

/// A point mass on `nu` with probability `weight`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub weight: f64,
    pub nu: f64,
}

/// Finite mixture over design densities: a time-sharing variable `U` with
/// `P(U = u) = weight_u` and Bernoulli(`nu_u / k`) entries given `U = u`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureProfile {
    atoms: Vec<Atom>,
}

impl MixtureProfile {
    /// `(weight, nu)` pairs; weights must sum to one within 1e-12.
    pub fn new(atoms: Vec<(f64, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(param_err!("profile needs at least one atom"));
        }
        if atoms
            .iter()
            .any(|(w, nu)| !(w.is_finite() && *w >= 0.0 && nu.is_finite() && *nu >= 0.0))
        {
            return Err(param_err!(
                "profile weights and nu values must be finite and nonnegative"
            ));
        }
        let total: f64 = atoms.iter().map(|a| a.0).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(param_err!("profile weights sum to {total}, not 1"));
        }
        Ok(MixtureProfile {
            atoms: atoms
                .into_iter()
                .map(|(weight, nu)| Atom { weight, nu })
                .collect(),
        })
    }

    pub fn single(nu: f64) -> Self {
        MixtureProfile {
            atoms: vec![Atom { weight: 1.0, nu }],
        }
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn mean_nu(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight * a.nu).sum()
    }

    /// Per-row `nu` for an `n`-test design: rows are handed to atoms in
    /// order, with counts from largest-remainder rounding of `n * weight`.
    pub fn row_parameters(&self, n: usize) -> Vec<f64> {
        let exact: Vec<f64> = self.atoms.iter().map(|a| a.weight * n as f64).collect();
        let mut counts: Vec<usize> = exact.iter().map(|x| x.floor() as usize).collect();
        let mut order: Vec<usize> = (0..counts.len()).collect();
        order.sort_by(|&a, &b| {
            let ra = exact[a] - counts[a] as f64;
            let rb = exact[b] - counts[b] as f64;
            rb.total_cmp(&ra).then(a.cmp(&b))
        });
        let short = n.saturating_sub(counts.iter().sum());
        for &i in order.iter().take(short) {
            counts[i] += 1;
        }
        self.atoms
            .iter()
            .zip(counts)
            .flat_map(|(a, c)| std::iter::repeat_n(a.nu, c))
            .collect()
    }
}

/// One `ell` of a converse threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EllRow {
    pub ell: usize,
    /// Design density where the row was evaluated (profile mean for mixtures).
    pub nu: f64,
    pub mutual_information: f64,
    pub delta_ell: f64,
    /// `ln C(p - k + ell, ell)`
    pub log_numerator: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdResult {
    pub n_threshold: f64,
    pub best_ell: usize,
    pub best_nu: f64,
    pub eta: f64,
    pub c0: f64,
    pub per_ell: Vec<EllRow>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub profile: Option<MixtureProfile>,
}

impl ThresholdResult {
    pub const CSV_HEADER: [&'static str; 6] = [
        "ell",
        "nu",
        "mutual_information",
        "delta_ell",
        "log_numerator",
        "ratio",
    ];
}

/// Shared per-`ell` constants of the weak converse.
struct WeakObjective<'a> {
    channel: &'a Channel,
    numerators: Vec<f64>,
    deltas: Vec<f64>,
}

impl<'a> WeakObjective<'a> {
    fn new(p: usize, k: usize, channel: &'a Channel, c0: f64) -> Result<Self> {
        if k >= p {
            return Err(domain_err!(
                "weak converse needs k < p, got p = {p}, k = {k}"
            ));
        }
        check_pk(p, k)?;
        if channel.k() != k {
            return Err(param_err!("channel built for k = {}, not {k}", channel.k()));
        }
        if !(c0 > 0.0 && c0.is_finite()) {
            return Err(param_err!("c0 = {c0} must be positive"));
        }
        Ok(WeakObjective {
            channel,
            numerators: (1..=k)
                .map(|l| ln_choose((p - k + l) as u64, l as u64))
                .collect(),
            deltas: (1..=k).map(|l| delta_ell(p, k, l, c0)).collect(),
        })
    }

    fn k(&self) -> usize {
        self.numerators.len()
    }

    fn mi_at(&self, nu: f64) -> Vec<f64> {
        (1..=self.k())
            .map(|l| design_mi(self.channel, l, nu))
            .collect()
    }

    fn ratio(&self, idx: usize, mi: f64) -> f64 {
        let denom = mi + self.deltas[idx];
        let num = self.numerators[idx];
        if denom > 0.0 {
            num / denom
        } else if num == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }

    /// `(max_ell ratio, argmax index)` for per-`ell` information values.
    fn value(&self, mi: &[f64]) -> (f64, usize) {
        let mut best = (f64::NEG_INFINITY, 0);
        for (i, &m) in mi.iter().enumerate() {
            let r = self.ratio(i, m);
            if r > best.0 {
                best = (r, i);
            }
        }
        best
    }

    /// Time-sharing average of per-atom information vectors.
    fn mix(&self, atoms: &[(f64, &[f64])]) -> Vec<f64> {
        (0..self.k())
            .map(|i| atoms.iter().fold(0.0, |acc, (w, mi)| acc + w * mi[i]))
            .collect()
    }

    fn result(
        &self,
        mi: &[f64],
        nu: f64,
        eta: f64,
        c0: f64,
        profile: Option<MixtureProfile>,
    ) -> ThresholdResult {
        let (max, best) = self.value(mi);
        ThresholdResult {
            n_threshold: max * (1.0 - eta),
            best_ell: best + 1,
            best_nu: nu,
            eta,
            c0,
            per_ell: mi
                .iter()
                .enumerate()
                .map(|(i, &m)| EllRow {
                    ell: i + 1,
                    nu,
                    mutual_information: m,
                    delta_ell: self.deltas[i],
                    log_numerator: self.numerators[i],
                    ratio: self.ratio(i, m),
                })
                .collect(),
            profile,
        }
    }
}

/// `min_nu max_ell ln C(p-k+ell, ell) / (I_ell(nu) + Delta_ell) * (1 - eta)`.
pub fn weak_converse_threshold(
    p: usize,
    k: usize,
    channel: &Channel,
    eta: f64,
    c0: f64,
) -> Result<ThresholdResult> {
    check_eta(eta)?;
    let obj = WeakObjective::new(p, k, channel, c0)?;
    let (nu, _) = grid_golden_min(
        |nu| obj.value(&obj.mi_at(nu)).0,
        0.0,
        k as f64,
        NU_GRID_POINTS,
        1e-10 * k as f64,
    );
    Ok(obj.result(&obj.mi_at(nu), nu, eta, c0, None))
}

/// The threshold for a fixed time-sharing profile.
pub fn mixture_threshold(
    p: usize,
    k: usize,
    channel: &Channel,
    eta: f64,
    c0: f64,
    profile: &MixtureProfile,
) -> Result<ThresholdResult> {
    check_eta(eta)?;
    let obj = WeakObjective::new(p, k, channel, c0)?;
    if let Some(a) = profile.atoms().iter().find(|a| a.nu > k as f64) {
        return Err(param_err!("profile atom nu = {} exceeds k = {k}", a.nu));
    }
    let per_atom: Vec<Vec<f64>> = profile.atoms().iter().map(|a| obj.mi_at(a.nu)).collect();
    let mixed = obj.mix(
        &profile
            .atoms()
            .iter()
            .zip(&per_atom)
            .map(|(a, mi)| (a.weight, mi.as_slice()))
            .collect::<Vec<_>>(),
    );
    Ok(obj.result(&mixed, profile.mean_nu(), eta, c0, Some(profile.clone())))
}

const MIX_GRID: usize = 65;
const WEIGHT_TOL: f64 = 1e-7;

/// Minimizes [`mixture_threshold`] over profiles with at most `max_atoms`
/// atoms (1 to 3). Starts from the single-atom optimum of
/// [`weak_converse_threshold`], so the result never exceeds it.
pub fn optimize_mixture(
    p: usize,
    k: usize,
    channel: &Channel,
    eta: f64,
    c0: f64,
    max_atoms: usize,
) -> Result<ThresholdResult> {
    if !(1..=3).contains(&max_atoms) {
        return Err(param_err!("max_atoms = {max_atoms} outside 1..=3"));
    }
    let single = weak_converse_threshold(p, k, channel, eta, c0)?;
    let obj = WeakObjective::new(p, k, channel, c0)?;
    let kf = k as f64;
    let grid: Vec<f64> = (0..MIX_GRID)
        .map(|i| kf * i as f64 / (MIX_GRID - 1) as f64)
        .collect();
    let table: Vec<Vec<f64>> = grid.iter().map(|&nu| obj.mi_at(nu)).collect();

    let mut best_atoms: Vec<(f64, f64)> = vec![(1.0, single.best_nu)];
    let best_value = obj.value(&obj.mi_at(single.best_nu)).0;

    if max_atoms >= 2 {
        // Objective is convex in the weights for fixed atoms.
        let mut pair: Option<(f64, usize, usize, f64)> = None;
        for a in 0..MIX_GRID {
            for b in a + 1..MIX_GRID {
                let (w, v) = golden_min(
                    |w| {
                        obj.value(&obj.mix(&[(w, &table[a]), (1.0 - w, &table[b])]))
                            .0
                    },
                    0.0,
                    1.0,
                    WEIGHT_TOL,
                );
                if pair.is_none_or(|p| v < p.0) {
                    pair = Some((v, a, b, w));
                }
            }
        }
        let (v2, a, b, w) = pair.expect("grid has pairs");
        let mut atoms = vec![(w, grid[a]), (1.0 - w, grid[b])];
        let mut value = v2;
        if max_atoms == 3 {
            let mut triple: Option<(f64, usize, f64, f64)> = None;
            for c in 0..MIX_GRID {
                if c == a || c == b {
                    continue;
                }
                let (t, v) = golden_min(
                    |t| {
                        golden_min(
                            |s| {
                                let rest = 1.0 - t;
                                obj.value(&obj.mix(&[
                                    (rest * s, &table[a]),
                                    (rest * (1.0 - s), &table[b]),
                                    (t, &table[c]),
                                ]))
                                .0
                            },
                            0.0,
                            1.0,
                            WEIGHT_TOL,
                        )
                        .1
                    },
                    0.0,
                    1.0,
                    1e-5,
                );
                if triple.is_none_or(|tr| v < tr.0) {
                    triple = Some((v, c, t, 0.0));
                }
            }
            if let Some((v3, c, t, _)) = triple {
                if v3 < value {
                    let (s, _) = golden_min(
                        |s| {
                            obj.value(&obj.mix(&[
                                ((1.0 - t) * s, &table[a]),
                                ((1.0 - t) * (1.0 - s), &table[b]),
                                (t, &table[c]),
                            ]))
                            .0
                        },
                        0.0,
                        1.0,
                        WEIGHT_TOL,
                    );
                    atoms = vec![
                        ((1.0 - t) * s, grid[a]),
                        ((1.0 - t) * (1.0 - s), grid[b]),
                        (t, grid[c]),
                    ];
                    value = v3;
                }
            }
        }
        refine_atoms(&obj, &mut atoms, &mut value, kf / (MIX_GRID - 1) as f64);
        if value < best_value {
            best_atoms = atoms;
        }
    }

    let weights_total: f64 = best_atoms.iter().map(|a| a.0).sum();
    let profile = MixtureProfile::new(
        best_atoms
            .iter()
            .filter(|a| a.0 > 0.0)
            .map(|&(w, nu)| (w / weights_total, nu))
            .collect(),
    )?;
    let candidate = mixture_threshold(p, k, channel, eta, c0, &profile)?;
    if candidate.n_threshold <= single.n_threshold {
        Ok(candidate)
    } else {
        mixture_threshold(
            p,
            k,
            channel,
            eta,
            c0,
            &MixtureProfile::single(single.best_nu),
        )
    }
}

/// Coordinate-wise golden search on each atom's `nu` within one grid step,
/// keeping only improvements.
fn refine_atoms(obj: &WeakObjective<'_>, atoms: &mut [(f64, f64)], value: &mut f64, step: f64) {
    let k = obj.k() as f64;
    for _ in 0..3 {
        for u in 0..atoms.len() {
            let others: Vec<(f64, Vec<f64>)> = atoms
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != u)
                .map(|(_, &(w, nu))| (w, obj.mi_at(nu)))
                .collect();
            let w_u = atoms[u].0;
            let eval = |nu: f64| {
                let mi_u = obj.mi_at(nu);
                let mut parts: Vec<(f64, &[f64])> =
                    others.iter().map(|(w, m)| (*w, m.as_slice())).collect();
                parts.push((w_u, &mi_u));
                obj.value(&obj.mix(&parts)).0
            };
            let lo = (atoms[u].1 - step).max(0.0);
            let hi = (atoms[u].1 + step).min(k);
            let (nu, v) = golden_min(eval, lo, hi, 1e-9 * k);
            if v < *value {
                atoms[u].1 = nu;
                *value = v;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::NoiseModel;
    use std::f64::consts::LN_2;

    fn ch(model: &str, k: usize) -> Channel {
        Channel::new(model.parse().unwrap(), k).unwrap()
    }

    #[test]
    fn i_star_examples() {
        let r = i_star(&ch("noiseless", 1));
        assert!((r.nu - 0.5).abs() < 1e-6 && (r.value - LN_2).abs() < 1e-12);
        let r = i_star(&ch("symmetric:0.11", 1));
        assert!((r.value - (LN_2 - binary_entropy(0.11))).abs() < 1e-9 * r.value);
        assert!((r.value - 0.346_6).abs() < 1e-4);
        let c = ch("noiseless", 3);
        let best = i_star(&c).value;
        for i in 0..=1000 {
            let nu = 3.0 * i as f64 / 1000.0;
            assert!(best >= design_mi(&c, 3, nu) - 1e-12);
        }
    }

    #[test]
    fn capacity_examples() {
        let r = capacity_output_dist(&ch("noiseless", 1), 1e-9).unwrap();
        assert!((r.capacity - LN_2).abs() < 1e-9);
        assert!((r.q_star.pmf(0) - 0.5).abs() < 1e-6);
        for rho in [0.05, 0.11, 0.3] {
            let r = capacity_output_dist(
                &Channel::new(NoiseModel::Symmetric { rho }, 2).unwrap(),
                1e-9,
            )
            .unwrap();
            assert!((r.capacity - (LN_2 - binary_entropy(rho))).abs() < 1e-8);
            assert!((r.q_star.pmf(1) - 0.5).abs() < 1e-4);
        }
        for rho in [0.11f64, 0.4] {
            let r = capacity_output_dist(&ch(&format!("zchannel:{rho}"), 3), 1e-12).unwrap();
            let closed = (1.0 + (1.0 - rho) * rho.powf(rho / (1.0 - rho))).ln();
            assert!((r.capacity - closed).abs() < 1e-10);
        }
        let flat = Channel::from_table(vec![0.3; 5]).unwrap();
        let r = capacity_output_dist(&flat, 1e-9).unwrap();
        assert_eq!(r.capacity, 0.0);
        assert!(capacity_output_dist(&flat, 0.0).is_err());
    }

    #[test]
    fn capacity_reports_non_convergence() {
        let c = ch("dilution:0.3", 6);
        match capacity_output_dist_capped(&c, 1e-12, 3) {
            Err(Error::Convergence {
                iterations, best, ..
            }) => {
                assert_eq!(iterations, 3);
                assert!(best.capacity > 0.0);
            }
            other => panic!("expected convergence error, got {other:?}"),
        }
    }

    #[test]
    fn saddlepoint_and_capacity_dominates_i_star() {
        let tol = 1e-9;
        for model in [
            "noiseless",
            "symmetric:0.2",
            "zchannel:0.4",
            "dilution:0.5",
            "zchannel-rev:0.2",
        ] {
            for k in 1..=6 {
                let c = ch(model, k);
                let r = capacity_output_dist(&c, tol).unwrap();
                for v in 0..=k {
                    assert!(kl_binary(c.row(v), r.q_star_pair()) <= r.capacity + 1e-13);
                }
                assert!(r.capacity >= i_star(&c).value - 1e-9, "{model} k={k}");
                for seed in 0..20u64 {
                    let w: Vec<f64> = (0..=k as u64)
                        .map(|v| ((seed * 31 + v * 17) % 11) as f64 + 0.5)
                        .collect();
                    let input = Distribution::normalized(0, w).unwrap();
                    assert!(
                        crate::infomath::mutual_information(&input, &c).unwrap()
                            <= r.capacity + 1e-9
                    );
                }
            }
        }
    }

    #[test]
    fn strong_threshold_examples() {
        let t = strong_converse_threshold(4, 1, &ch("noiseless", 1), 0.0).unwrap();
        assert!((t - 2.0).abs() < 1e-9);
        let c = ch("symmetric:0.11", 5);
        let t = strong_converse_threshold(10_000, 5, &c, 0.0).unwrap();
        let oracle = ln_choose(10_000, 5) / (LN_2 - binary_entropy(0.11));
        assert!((t - oracle).abs() < 1e-6 * oracle);
        assert_eq!(
            strong_converse_threshold(3, 3, &ch("noiseless", 3), 0.0).unwrap(),
            0.0
        );
        let flat = Channel::from_table(vec![0.4; 3]).unwrap();
        assert_eq!(
            strong_converse_threshold(10, 2, &flat, 0.1).unwrap(),
            f64::INFINITY
        );
        assert!(strong_converse_threshold(10, 2, &ch("noiseless", 2), 1.0).is_err());
    }

    #[test]
    fn info_density_examples() {
        let c = ch("noiseless", 2);
        let half = Distribution::bernoulli(0.5).unwrap();
        let empty = MeasurementMatrix::zeros(0, 5);
        let m = info_density_moments(&empty, &[0, 1], &c, &half).unwrap();
        assert_eq!((m.mean, m.variance), (0.0, 0.0));
        let zeros = MeasurementMatrix::zeros(7, 5);
        let m = info_density_moments(&zeros, &[0, 3], &c, &half).unwrap();
        assert!((m.mean - 7.0 * LN_2).abs() < 1e-12);
        assert_eq!(m.variance, 0.0);
        let err =
            info_density_moments(&zeros, &[0, 3], &c, &Distribution::point_mass(1)).unwrap_err();
        assert!(matches!(err, Error::AbsoluteContinuity(_)));
    }

    #[test]
    fn delta_ell_examples() {
        assert_eq!(delta_ell(100, 4, 4, 1.0), 0.0);
        assert!((delta_ell(100, 4, 2, 1.0) - 0.04 * 25f64.ln()).abs() < 1e-15);
        assert!((delta_ell(100, 4, 2, 1.0) - 0.128_755).abs() < 1e-6);
        assert_eq!(delta_ell(16, 8, 4, 1.0), 1.0);
    }

    #[test]
    fn weak_threshold_single_ell_for_k1() {
        let r = weak_converse_threshold(50, 1, &ch("symmetric:0.1", 1), 0.0, 1.0).unwrap();
        assert_eq!(r.per_ell.len(), 1);
        assert_eq!(r.per_ell[0].delta_ell, 0.0);
        assert_eq!(r.best_ell, 1);
    }

    #[test]
    fn weak_threshold_report_is_consistent() {
        let eta = 0.1;
        let c = ch("dilution:0.4", 5);
        let r = weak_converse_threshold(500, 5, &c, eta, 1.0).unwrap();
        let max = r
            .per_ell
            .iter()
            .map(|row| row.ratio)
            .fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(r.n_threshold, max * (1.0 - eta));
        assert_eq!(r.per_ell[r.best_ell - 1].ratio, max);
        let again =
            mixture_threshold(500, 5, &c, eta, 1.0, &MixtureProfile::single(r.best_nu)).unwrap();
        assert_eq!(again.n_threshold, r.n_threshold);
    }

    #[test]
    fn degenerate_channel_gives_infinite_weak_threshold() {
        let flat = Channel::from_table(vec![0.5; 4]).unwrap();
        let r = weak_converse_threshold(100, 3, &flat, 0.0, 1.0).unwrap();
        assert_eq!(r.n_threshold, f64::INFINITY);
    }

    #[test]
    fn duplicate_atoms_collapse() {
        let c = ch("zchannel:0.2", 4);
        let one = mixture_threshold(200, 4, &c, 0.0, 1.0, &MixtureProfile::single(1.1)).unwrap();
        let two = mixture_threshold(
            200,
            4,
            &c,
            0.0,
            1.0,
            &MixtureProfile::new(vec![(0.5, 1.1), (0.5, 1.1)]).unwrap(),
        )
        .unwrap();
        assert_eq!(one.n_threshold, two.n_threshold);
    }

    #[test]
    fn row_parameters_use_largest_remainder() {
        let p = MixtureProfile::new(vec![(0.5, 0.1), (0.3, 0.2), (0.2, 0.3)]).unwrap();
        let rows = p.row_parameters(7);
        assert_eq!(rows.len(), 7);
        assert_eq!(rows.iter().filter(|&&x| x == 0.1).count(), 4);
        assert_eq!(rows.iter().filter(|&&x| x == 0.2).count(), 2);
        assert!(MixtureProfile::new(vec![(0.6, 1.0), (0.6, 1.0)]).is_err());
        assert!(MixtureProfile::new(vec![]).is_err());
    }

    #[test]
    fn default_delta1_is_clipped() {
        assert_eq!(default_delta1(4, 4), 0.5);
        assert!((default_delta1(24, 2) - 276f64.powf(-0.5)).abs() < 1e-12);
        assert_eq!(default_delta1(1_000_000, 10), 1e-6);
    }
}
