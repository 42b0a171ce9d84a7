//! Finite-alphabet probability kernels. All information quantities are in nats.

use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_binomial;

use crate::channels::Channel;
use crate::error::{domain_err, param_err, Result};

const SUM_TOL: f64 = 1e-12;

/// A pmf on the contiguous integer support `offset, offset + 1, ...`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Distribution {
    offset: i64,
    probs: Vec<f64>,
}

impl Distribution {
    /// Checks nonnegativity and that the mass sums to one within 1e-12.
    pub fn new(offset: i64, probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(domain_err!("empty distribution"));
        }
        if let Some(bad) = probs.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
            return Err(param_err!("invalid probability {bad}"));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > SUM_TOL {
            return Err(param_err!("probabilities sum to {total}, not 1"));
        }
        Ok(Distribution { offset, probs })
    }

    /// Rescales nonnegative weights to unit mass.
    pub fn normalized(offset: i64, weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total.is_finite() && total > 0.0) || weights.iter().any(|w| *w < 0.0) {
            return Err(param_err!(
                "weights must be nonnegative with positive finite total"
            ));
        }
        Ok(Distribution {
            offset,
            probs: weights.into_iter().map(|w| w / total).collect(),
        })
    }

    pub fn point_mass(at: i64) -> Self {
        Distribution {
            offset: at,
            probs: vec![1.0],
        }
    }

    /// `(1 - p, p)` on `{0, 1}`.
    pub fn bernoulli(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(param_err!("Bernoulli parameter {p} outside [0, 1]"));
        }
        Ok(Distribution {
            offset: 0,
            probs: vec![1.0 - p, p],
        })
    }

    pub fn offset(&self) -> i64 {
        self.offset
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Largest value in the stored support.
    pub fn max_value(&self) -> i64 {
        self.offset + self.probs.len() as i64 - 1
    }

    /// `P(X = x)`, zero outside the stored support.
    pub fn pmf(&self, x: i64) -> f64 {
        let i = x - self.offset;
        if i < 0 {
            return 0.0;
        }
        self.probs.get(i as usize).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.probs
            .iter()
            .enumerate()
            .map(move |(i, p)| (self.offset + i as i64, *p))
    }

    pub fn mean(&self) -> f64 {
        self.iter().map(|(x, p)| x as f64 * p).sum()
    }
}

/// `Binomial(trials, success_prob)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinomialSpec {
    pub trials: u64,
    pub success_prob: f64,
}

/// Number of specials among `draws` items taken without replacement from a
/// population of `population` containing `specials` special items.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HypergeometricSpec {
    pub draws: u64,
    pub specials: u64,
    pub population: u64,
}

/// `ln C(n, k)`; `-inf` when `k > n`.
pub fn ln_choose(n: u64, k: u64) -> f64 {
    if k > n {
        f64::NEG_INFINITY
    } else {
        ln_binomial(n, k)
    }
}

pub fn binomial_pmf(spec: BinomialSpec) -> Result<Distribution> {
    let BinomialSpec {
        trials: n,
        success_prob: q,
    } = spec;
    if !(0.0..=1.0).contains(&q) {
        return Err(param_err!(
            "binomial success probability {q} outside [0, 1]"
        ));
    }
    let len = n as usize + 1;
    if q == 0.0 || q == 1.0 {
        let mut probs = vec![0.0; len];
        probs[if q == 0.0 { 0 } else { n as usize }] = 1.0;
        return Ok(Distribution { offset: 0, probs });
    }
    let (lq, lr) = (q.ln(), (-q).ln_1p());
    let weights = (0..=n)
        .map(|i| (ln_choose(n, i) + i as f64 * lq + (n - i) as f64 * lr).exp())
        .collect();
    Distribution::normalized(0, weights)
}

/// Stored on `0..=draws` with zeros outside the feasible range.
pub fn hypergeometric_pmf(spec: HypergeometricSpec) -> Result<Distribution> {
    let HypergeometricSpec {
        draws,
        specials,
        population,
    } = spec;
    if specials > population || draws > population {
        return Err(domain_err!(
            "infeasible hypergeometric: draws {draws}, specials {specials}, population {population}"
        ));
    }
    let lo = (draws + specials).saturating_sub(population);
    let hi = draws.min(specials);
    let norm = ln_choose(population, draws);
    let weights = (0..=draws)
        .map(|i| {
            if i < lo || i > hi {
                0.0
            } else {
                (ln_choose(specials, i) + ln_choose(population - specials, draws - i) - norm).exp()
            }
        })
        .collect();
    Distribution::normalized(0, weights)
}

/// Half the L1 distance; mass outside either support counts as zero.
pub fn tv_distance(p: &Distribution, q: &Distribution) -> f64 {
    let lo = p.offset.min(q.offset);
    let hi = p.max_value().max(q.max_value());
    let l1: f64 = (lo..=hi).map(|x| (p.pmf(x) - q.pmf(x)).abs()).sum();
    (0.5 * l1).min(1.0)
}

pub fn entropy(p: &Distribution) -> f64 {
    p.probs.iter().map(|&x| entropy_term(x)).sum()
}

/// `H_2(x) = -x ln x - (1 - x) ln(1 - x)`.
pub fn binary_entropy(x: f64) -> f64 {
    entropy_term(x) + entropy_term(1.0 - x)
}

#[inline]
fn entropy_term(x: f64) -> f64 {
    if x > 0.0 {
        -x * x.ln()
    } else {
        0.0
    }
}

/// `D(P || Q)`; `+inf` when `P` is not absolutely continuous w.r.t. `Q`.
pub fn kl_divergence(p: &Distribution, q: &Distribution) -> f64 {
    let mut total = 0.0;
    for (x, px) in p.iter() {
        if px <= 0.0 {
            continue;
        }
        let qx = q.pmf(x);
        if qx <= 0.0 {
            return f64::INFINITY;
        }
        total += px * (px / qx).ln();
    }
    total.max(0.0)
}

/// KL divergence between two pmfs on `{0, 1}` given as `[P(0), P(1)]`.
pub(crate) fn kl_binary(p: [f64; 2], q: [f64; 2]) -> f64 {
    let mut total = 0.0;
    for y in 0..2 {
        if p[y] > 0.0 {
            if q[y] <= 0.0 {
                return f64::INFINITY;
            }
            total += p[y] * (p[y] / q[y]).ln();
        }
    }
    total.max(0.0)
}

/// `P(Y = 1)` when `V ~ input` is sent through `channel`.
pub fn output_prob_one(input: &Distribution, channel: &Channel) -> Result<f64> {
    check_input_support(input, channel)?;
    Ok(input
        .iter()
        .map(|(v, p)| p * channel.prob_one(v as usize))
        .sum::<f64>()
        .clamp(0.0, 1.0))
}

/// `I(V; Y)` for `V ~ input` on `0..=k` sent through `channel`.
pub fn mutual_information(input: &Distribution, channel: &Channel) -> Result<f64> {
    check_input_support(input, channel)?;
    Ok(mi_shifted(input, channel, 0))
}

fn check_input_support(input: &Distribution, channel: &Channel) -> Result<()> {
    if input.offset < 0 || input.max_value() > channel.k() as i64 {
        return Err(domain_err!(
            "input support [{}, {}] outside channel range 0..={}",
            input.offset,
            input.max_value(),
            channel.k()
        ));
    }
    Ok(())
}

/// `I(V; Y)` where the channel sees `V + shift`. Caller checks ranges.
fn mi_shifted(input: &Distribution, channel: &Channel, shift: usize) -> f64 {
    let mut py1 = 0.0;
    let mut cond = 0.0;
    for (v, p) in input.iter() {
        if p == 0.0 {
            continue;
        }
        let q = channel.prob_one(v as usize + shift);
        py1 += p * q;
        cond += p * binary_entropy(q);
    }
    (binary_entropy(py1.clamp(0.0, 1.0)) - cond).max(0.0)
}

/// `I(V_dif; Y | V_eq)` with `V_dif ~ dif`, `V_eq ~ eq` independent and `Y`
/// drawn from `channel` at `V_dif + V_eq`.
pub fn conditional_mi(
    channel: &Channel,
    ell: usize,
    dif: &Distribution,
    eq: &Distribution,
) -> Result<f64> {
    let k = channel.k();
    if ell == 0 || ell > k {
        return Err(param_err!("ell = {ell} outside 1..={k}"));
    }
    if dif.offset < 0 || eq.offset < 0 {
        return Err(domain_err!("negative support in conditional MI"));
    }
    if dif.max_value() + eq.max_value() > k as i64 {
        return Err(domain_err!(
            "support overflow: {} + {} > k = {k}",
            dif.max_value(),
            eq.max_value()
        ));
    }
    Ok(eq
        .iter()
        .filter(|(_, w)| *w > 0.0)
        .map(|(v_eq, w)| w * mi_shifted(dif, channel, v_eq as usize))
        .sum())
}

/// `I(X_dif; Y | X_eq)` for i.i.d. Bernoulli(`nu / k`) test entries, with
/// `|dif| = ell` and `|eq| = k - ell`.
pub fn conditional_mi_bernoulli_design(channel: &Channel, ell: usize, nu: f64) -> Result<f64> {
    let k = channel.k();
    if !(0.0..=k as f64).contains(&nu) {
        return Err(param_err!("nu = {nu} outside [0, {k}]"));
    }
    if ell == 0 || ell > k {
        return Err(param_err!("ell = {ell} outside 1..={k}"));
    }
    let q = (nu / k as f64).min(1.0);
    let dif = binomial_pmf(BinomialSpec {
        trials: ell as u64,
        success_prob: q,
    })?;
    let eq = binomial_pmf(BinomialSpec {
        trials: (k - ell) as u64,
        success_prob: q,
    })?;
    conditional_mi(channel, ell, &dif, &eq)
}
