//! Distribution approximations behind the weak converse and their bounds:
//! hypergeometric to binomial (Soon), binomial to binomial (Roos), and
//! continuity of mutual information under input perturbations.

use std::f64::consts::{LN_2, PI};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::Channel;
use crate::error::{domain_err, param_err, Result};
use crate::infomath::{
    binomial_pmf, hypergeometric_pmf, mutual_information, tv_distance, BinomialSpec, Distribution,
    HypergeometricSpec,
};
use crate::rng::{substream, DOMAIN_VERIFY};

/// Slack on every bound check.
pub const TV_SLACK: f64 = 1e-12;

/// `(k - ell - 1) / (p - 1)`, clamped at zero: TV between the revealed
/// defective count and its binomial surrogate.
pub fn soon_bound_eq(k: usize, ell: usize, p: usize) -> f64 {
    if p < 2 {
        return 0.0;
    }
    ((k as f64 - ell as f64 - 1.0) / (p as f64 - 1.0)).max(0.0)
}

/// `(ell - 1) / (p - k + ell - 1)`, clamped at zero.
pub fn soon_bound_dif(ell: usize, k: usize, p: usize) -> f64 {
    let denom = p as f64 - k as f64 + ell as f64 - 1.0;
    if denom <= 0.0 {
        return 0.0;
    }
    ((ell as f64 - 1.0) / denom).max(0.0)
}

pub fn roos_constant() -> f64 {
    (2.0 * PI).powf(0.25) * (1.0f64 / 24.0).exp() / 2f64.sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoosParams {
    pub delta_gap: f64,
    pub ell: usize,
    pub eta_roos: f64,
    pub c_const: f64,
}

impl RoosParams {
    pub fn new(ell: usize, delta_gap: f64) -> Self {
        RoosParams {
            delta_gap,
            ell,
            eta_roos: delta_gap * delta_gap * ell as f64 * (ell as f64 + 2.0),
            c_const: roos_constant(),
        }
    }

    pub fn bound(&self) -> f64 {
        let eta = self.eta_roos;
        (self.c_const * eta.sqrt() * (1.0 + (2.0 * eta).sqrt()) * (2.0 * eta).exp()).min(1.0)
    }
}

/// Bound on `TV(Bin(ell, a), Bin(ell, a + delta_gap))`, capped at one.
pub fn roos_bound(ell: usize, delta_gap: f64) -> f64 {
    RoosParams::new(ell, delta_gap).bound()
}

/// `m/p - (m - v_eq)/(p - k + ell)`: the gap between the unconditional and
/// the conditional success probability of an unrevealed defective.
pub fn binomial_gap(p: usize, k: usize, ell: usize, m: usize, v_eq: usize) -> f64 {
    m as f64 / p as f64 - (m as f64 - v_eq as f64) / (p - k + ell) as f64
}

/// `min(1, soon_bound_dif + roos_bound)`: total error of replacing the
/// conditional law of `V_dif` by `Bin(ell, m/p)`.
pub fn delta2(p: usize, k: usize, ell: usize, m: usize, v_eq: usize) -> f64 {
    (soon_bound_dif(ell, k, p) + roos_bound(ell, binomial_gap(p, k, ell, m, v_eq))).min(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TvStep {
    /// `Hg(k - ell, m, p)` vs `Bin(k - ell, m/p)`.
    Revealed,
    /// `Hg(ell, m - v_eq, p - k + ell)` vs its binomial.
    Hidden,
    /// That binomial vs `Bin(ell, m/p)`.
    Binomial,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TvBoundReport {
    pub step: TvStep,
    pub exact_tv: f64,
    pub bound: f64,
    pub p: usize,
    pub k: usize,
    pub ell: usize,
    pub m: usize,
    pub v_eq: usize,
    pub satisfied: bool,
}

/// Range of `v_eq` consistent with a test of weight `m`.
pub fn feasible_v_eq(p: usize, k: usize, ell: usize, m: usize) -> std::ops::RangeInclusive<usize> {
    (m + k).saturating_sub(ell + p)..=(k - ell).min(m)
}

fn hg(draws: usize, specials: usize, population: usize) -> Result<Distribution> {
    hypergeometric_pmf(HypergeometricSpec {
        draws: draws as u64,
        specials: specials as u64,
        population: population as u64,
    })
}

fn bin(trials: usize, q: f64) -> Result<Distribution> {
    binomial_pmf(BinomialSpec {
        trials: trials as u64,
        success_prob: q.clamp(0.0, 1.0),
    })
}

/// Exact TV of each approximation step next to its bound.
pub fn verify_tv_chain(
    p: usize,
    k: usize,
    ell: usize,
    m: usize,
    v_eq: usize,
) -> Result<Vec<TvBoundReport>> {
    if !(1 <= ell && ell <= k && k < p) {
        return Err(domain_err!(
            "need 1 <= ell <= k < p, got p = {p}, k = {k}, ell = {ell}"
        ));
    }
    if m > p {
        return Err(domain_err!("test weight m = {m} exceeds p = {p}"));
    }
    if !feasible_v_eq(p, k, ell, m).contains(&v_eq) {
        return Err(domain_err!(
            "v_eq = {v_eq} infeasible for p = {p}, k = {k}, ell = {ell}, m = {m}"
        ));
    }
    let rest = p - k + ell;
    let cond_q = (m - v_eq) as f64 / rest as f64;
    let steps = [
        (
            TvStep::Revealed,
            tv_distance(&hg(k - ell, m, p)?, &bin(k - ell, m as f64 / p as f64)?),
            soon_bound_eq(k, ell, p),
        ),
        (
            TvStep::Hidden,
            tv_distance(&hg(ell, m - v_eq, rest)?, &bin(ell, cond_q)?),
            soon_bound_dif(ell, k, p),
        ),
        (
            TvStep::Binomial,
            tv_distance(&bin(ell, cond_q)?, &bin(ell, m as f64 / p as f64)?),
            roos_bound(ell, binomial_gap(p, k, ell, m, v_eq)),
        ),
    ];
    Ok(steps
        .into_iter()
        .map(|(step, exact_tv, bound)| TvBoundReport {
            step,
            exact_tv,
            bound,
            p,
            k,
            ell,
            m,
            v_eq,
            satisfied: exact_tv <= bound + TV_SLACK,
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TvGridReport {
    pub tuples: usize,
    pub checks: usize,
    pub violations: Vec<TvBoundReport>,
    /// Largest `exact_tv / bound` seen per step, over nonzero bounds.
    pub worst_ratio: [f64; 3],
}

/// Every feasible `(p, k, ell, m, v_eq)` with `m = floor(p * frac)`.
pub fn tv_grid(
    ps: &[usize],
    ks: &[usize],
    m_fracs: &[f64],
) -> Vec<(usize, usize, usize, usize, usize)> {
    let mut out = Vec::new();
    for &p in ps {
        for &k in ks.iter().filter(|&&k| k >= 1 && k < p) {
            for ell in 1..=k {
                let mut ms: Vec<usize> = m_fracs
                    .iter()
                    .map(|f| (p as f64 * f).floor() as usize)
                    .collect();
                ms.dedup();
                for m in ms {
                    for v_eq in feasible_v_eq(p, k, ell, m) {
                        out.push((p, k, ell, m, v_eq));
                    }
                }
            }
        }
    }
    out
}

pub fn verify_tv_grid(tuples: &[(usize, usize, usize, usize, usize)]) -> Result<TvGridReport> {
    let reports = tuples
        .par_iter()
        .map(|&(p, k, ell, m, v)| verify_tv_chain(p, k, ell, m, v))
        .collect::<Result<Vec<_>>>()?;
    let mut worst_ratio = [0.0f64; 3];
    let mut violations = Vec::new();
    let mut checks = 0;
    for r in reports.iter().flatten() {
        checks += 1;
        if r.bound > 0.0 {
            let i = r.step as usize;
            worst_ratio[i] = worst_ratio[i].max(r.exact_tv / r.bound);
        }
        if !r.satisfied {
            violations.push(*r);
        }
    }
    Ok(TvGridReport {
        tuples: tuples.len(),
        checks,
        violations,
        worst_ratio,
    })
}

/// `p in {50, 100, 500}`, `k in 2..=10`, `m in {0, p/4, p/2}`.
pub fn default_tv_grid() -> Vec<(usize, usize, usize, usize, usize)> {
    tv_grid(
        &[50, 100, 500],
        &(2..=10).collect::<Vec<_>>(),
        &[0.0, 0.25, 0.5],
    )
}

/// `delta1 * ln 2`: effect on the conditional MI of changing the law of the
/// conditioning variable by `delta1` in TV.
pub fn mi_perturb_bound_eq(delta1: f64) -> f64 {
    delta1 * LN_2
}

/// `delta2 * ln(4 / delta2)`, zero at `delta2 = 0`.
pub fn mi_perturb_bound_dif(delta2: f64) -> f64 {
    if delta2 <= 0.0 {
        0.0
    } else {
        delta2 * (4.0 / delta2).ln()
    }
}

/// Continuity bound for the entropy of a binary output whose marginals are
/// `tv` apart: `theta ln(2 / theta)` with `theta = 2 tv` the L1 distance,
/// valid for `theta <= 1/2`, and `ln 2` beyond.
pub fn binary_entropy_continuity_bound(tv: f64) -> f64 {
    let theta = 2.0 * tv;
    if theta <= 0.0 {
        0.0
    } else if theta <= 0.5 {
        theta * (2.0 / theta).ln()
    } else {
        LN_2
    }
}

/// Lipschitz constant of `H_2` on `[lo, 1 - lo]`, for `lo < 1/2`.
pub fn binary_entropy_lipschitz(lo: f64) -> f64 {
    ((1.0 - lo) / lo).ln()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MiCheck {
    /// `|I_P - I_Q| <= delta ln(4/delta)`
    Perturbation,
    /// `|I(V;Y|A) - I(V;Y|A')| <= TV(P_A, P_A') ln 2`
    ConditionalSwap,
    /// `TV(PW, QW) <= TV(P, Q)`
    DataProcessing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiViolation {
    pub trial: u64,
    pub check: MiCheck,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub channel: Vec<f64>,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiContinuityReport {
    pub trials: u64,
    pub seed: u64,
    pub checks: u64,
    pub violations: Vec<MiViolation>,
    /// Largest `lhs / rhs` per check, over nonzero right-hand sides.
    pub worst_ratio: [f64; 3],
}

impl MiContinuityReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

fn random_pmf<R: Rng + ?Sized>(rng: &mut R, size: usize) -> Vec<f64> {
    let sparse = rng.random_bool(0.3);
    let mut w: Vec<f64> = (0..size)
        .map(|_| {
            if sparse && rng.random_bool(0.5) {
                0.0
            } else {
                -rng.random::<f64>().max(f64::MIN_POSITIVE).ln()
            }
        })
        .collect();
    if w.iter().all(|&x| x == 0.0) {
        w[rng.random_range(0..size)] = 1.0;
    }
    let total: f64 = w.iter().sum();
    w.iter().map(|x| x / total).collect()
}

/// Either an independent draw or a small perturbation of `p`.
fn companion_pmf<R: Rng + ?Sized>(rng: &mut R, p: &[f64]) -> Vec<f64> {
    match rng.random_range(0..3) {
        0 => random_pmf(rng, p.len()),
        1 => p.to_vec(),
        _ => {
            let eps = 10f64.powf(-rng.random_range(1.0..6.0));
            let other = random_pmf(rng, p.len());
            p.iter()
                .zip(&other)
                .map(|(a, b)| (1.0 - eps) * a + eps * b)
                .collect()
        }
    }
}

fn random_channel<R: Rng + ?Sized>(rng: &mut R, k: usize) -> Channel {
    let table = match rng.random_range(0..4) {
        0 => vec![rng.random::<f64>(); k + 1],
        1 => (0..=k)
            .map(|_| if rng.random_bool(0.5) { 0.0 } else { 1.0 })
            .collect(),
        _ => (0..=k).map(|_| rng.random::<f64>()).collect(),
    };
    Channel::from_table(table).expect("probabilities in [0, 1]")
}

fn dist(p: &[f64]) -> Distribution {
    Distribution::normalized(0, p.to_vec()).expect("valid pmf")
}

struct TrialOutcome {
    checks: u64,
    ratios: [f64; 3],
    violations: Vec<MiViolation>,
}

fn mi_trial(seed: u64, trial: u64) -> Result<TrialOutcome> {
    let mut rng = substream(seed, DOMAIN_VERIFY, trial);
    let k = rng.random_range(1..=10usize);
    let channel = random_channel(&mut rng, k);
    let p = random_pmf(&mut rng, k + 1);
    let q = companion_pmf(&mut rng, &p);
    let (pd, qd) = (dist(&p), dist(&q));
    let delta = tv_distance(&pd, &qd);
    let mut out = TrialOutcome {
        checks: 0,
        ratios: [0.0; 3],
        violations: Vec::new(),
    };
    let mut record = |check: MiCheck, lhs: f64, rhs: f64, a: &[f64], b: &[f64]| {
        out.checks += 1;
        if rhs > 0.0 {
            let i = check as usize;
            out.ratios[i] = out.ratios[i].max(lhs / rhs);
        }
        if lhs > rhs + TV_SLACK {
            out.violations.push(MiViolation {
                trial,
                check,
                p: a.to_vec(),
                q: b.to_vec(),
                channel: channel.table().to_vec(),
                lhs,
                rhs,
            });
        }
    };

    let diff = (mutual_information(&pd, &channel)? - mutual_information(&qd, &channel)?).abs();
    record(
        MiCheck::Perturbation,
        diff,
        mi_perturb_bound_dif(delta),
        &p,
        &q,
    );

    let out_p: f64 = p
        .iter()
        .enumerate()
        .map(|(v, w)| w * channel.prob_one(v))
        .sum();
    let out_q: f64 = q
        .iter()
        .enumerate()
        .map(|(v, w)| w * channel.prob_one(v))
        .sum();
    record(
        MiCheck::DataProcessing,
        (out_p - out_q).abs(),
        delta,
        &p,
        &q,
    );

    // The conditioning variable takes `size` values, each with its own law of V.
    let size = rng.random_range(1..=k + 1);
    let a = random_pmf(&mut rng, size);
    let b = companion_pmf(&mut rng, &a);
    let per_value = (0..size)
        .map(|_| mutual_information(&dist(&random_pmf(&mut rng, k + 1)), &channel))
        .collect::<Result<Vec<f64>>>()?;
    let cond = |w: &[f64]| w.iter().zip(&per_value).map(|(x, i)| x * i).sum::<f64>();
    let swap_tv = tv_distance(&dist(&a), &dist(&b));
    record(
        MiCheck::ConditionalSwap,
        (cond(&a) - cond(&b)).abs(),
        mi_perturb_bound_eq(swap_tv),
        &a,
        &b,
    );
    Ok(out)
}

/// Random inputs, perturbations and binary-output channels checked against
/// the three continuity inequalities. Deterministic in `seed`.
pub fn verify_mi_continuity(trials: u64, seed: u64) -> Result<MiContinuityReport> {
    if trials == 0 {
        return Err(param_err!("trials must be at least 1"));
    }
    let outcomes = (0..trials)
        .into_par_iter()
        .map(|t| mi_trial(seed, t))
        .collect::<Result<Vec<_>>>()?;
    let mut report = MiContinuityReport {
        trials,
        seed,
        checks: 0,
        violations: Vec::new(),
        worst_ratio: [0.0; 3],
    };
    for o in outcomes {
        report.checks += o.checks;
        for i in 0..3 {
            report.worst_ratio[i] = report.worst_ratio[i].max(o.ratios[i]);
        }
        report.violations.extend(o.violations);
    }
    Ok(report)
}

/// Both verification suites, as emitted by the `verify` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub tv: TvGridReport,
    pub mi: MiContinuityReport,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.tv.violations.is_empty() && self.mi.passed()
    }
}

pub fn run_verify_suite(trials: u64, seed: u64) -> Result<VerifyReport> {
    Ok(VerifyReport {
        tv: verify_tv_grid(&default_tv_grid())?,
        mi: verify_mi_continuity(trials, seed)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::infomath::binary_entropy;
    use proptest::prelude::*;

    #[test]
    fn soon_examples() {
        assert_eq!(soon_bound_eq(5, 4, 50), 0.0);
        assert!((soon_bound_eq(10, 2, 100) - 7.0 / 99.0).abs() < 1e-15);
        assert_eq!(soon_bound_eq(4, 4, 10), 0.0);
        assert_eq!(soon_bound_dif(1, 5, 50), 0.0);
        assert!((soon_bound_dif(3, 5, 50) - 2.0 / 47.0).abs() < 1e-15);
        assert!((soon_bound_dif(2, 2, 4) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn single_draw_is_exactly_binomial() {
        for m in 0..=20 {
            let exact = tv_distance(&hg(1, m, 20).unwrap(), &bin(1, m as f64 / 20.0).unwrap());
            assert!(exact < 1e-15);
        }
    }

    #[test]
    fn roos_examples() {
        let c = roos_constant();
        let oracle = (2.0 * PI).sqrt().sqrt() * (1.0 / 24.0f64).exp() * 0.5f64.sqrt();
        assert!((c - oracle).abs() < 1e-15);
        assert!((c - 1.16715).abs() < 1e-4);
        assert_eq!(roos_bound(5, 0.0), 0.0);
        let r = RoosParams::new(4, 0.05);
        assert_eq!(r.eta_roos, 0.05 * 0.05 * 4.0 * 6.0);
        let expect = c * 0.06f64.sqrt() * (1.0 + 0.12f64.sqrt()) * 0.12f64.exp();
        assert!((r.bound() - expect).abs() < 1e-12);
        let exact = tv_distance(&bin(4, 0.5).unwrap(), &bin(4, 0.55).unwrap());
        assert!(exact <= r.bound());
        assert_eq!(roos_bound(10, 0.9), 1.0);
    }

    #[test]
    fn tv_chain_degenerate_cases() {
        let r = verify_tv_chain(4, 2, 2, 2, 0).unwrap();
        assert_eq!(r[0].exact_tv, 0.0);
        assert!(r.iter().all(|x| x.satisfied));
        // v_eq = m (k - ell) / p ... choose m = 0 for a zero gap
        let r = verify_tv_chain(50, 3, 1, 0, 0).unwrap();
        assert_eq!(r[2].exact_tv, 0.0);
        assert!(verify_tv_chain(10, 3, 1, 2, 3).is_err());
        assert!(verify_tv_chain(10, 3, 0, 2, 0).is_err());
        assert!(verify_tv_chain(3, 3, 1, 1, 0).is_err());
    }

    #[test]
    fn zero_gap_gives_zero_binomial_tv() {
        // m/p = (m - v_eq)/(p - k + ell) with p = 10, k = 3, ell = 1, m = 5, v_eq = 1
        assert_eq!(binomial_gap(10, 3, 1, 5, 1), 0.0);
        let r = verify_tv_chain(10, 3, 1, 5, 1).unwrap();
        assert_eq!(r[2].exact_tv, 0.0);
        assert_eq!(r[2].bound, 0.0);
    }

    #[test]
    fn mi_perturb_examples() {
        assert_eq!(mi_perturb_bound_eq(0.0), 0.0);
        assert_eq!(mi_perturb_bound_eq(1.0), LN_2);
        assert!((mi_perturb_bound_eq(0.1) - 0.069_314_7).abs() < 1e-7);
        assert_eq!(mi_perturb_bound_dif(0.0), 0.0);
        assert!(mi_perturb_bound_dif(1e-300) < 1e-297);
        assert!((mi_perturb_bound_dif(1.0) - 4f64.ln()).abs() < 1e-15);
        let mut prev = 0.0;
        for i in 1..=1000 {
            let x = i as f64 / 1000.0 * 4.0 / std::f64::consts::E;
            let y = mi_perturb_bound_dif(x);
            assert!(y >= prev);
            prev = y;
        }
    }

    #[test]
    fn mi_continuity_small_run_is_clean_and_reproducible() {
        let a = verify_mi_continuity(500, 7).unwrap();
        assert!(a.passed(), "{:?}", a.violations.first());
        assert_eq!(a.checks, 1500);
        assert_eq!(a, verify_mi_continuity(500, 7).unwrap());
    }

    #[test]
    fn identical_and_constant_inputs() {
        let c = Channel::from_table(vec![0.3, 0.3, 0.3]).unwrap();
        let p = dist(&[0.2, 0.5, 0.3]);
        assert_eq!(mutual_information(&p, &c).unwrap(), 0.0);
        let w = Channel::from_table(vec![0.1, 0.8, 0.4]).unwrap();
        assert_eq!(
            mutual_information(&p, &w).unwrap(),
            mutual_information(&p.clone(), &w).unwrap()
        );
    }

    // The literal form `t ln(2/t)` with `t` the TV distance fails at the
    // boundary; the L1 form holds.
    #[test]
    fn tv_form_of_entropy_continuity_fails_at_the_boundary() {
        let t: f64 = 0.1;
        let diff = binary_entropy(0.1) - binary_entropy(0.0);
        assert!(diff > t * (2.0 / t).ln());
        assert!(diff <= binary_entropy_continuity_bound(t));
    }

    // A quadratic bound with constant 3 fails for two marginals that are both
    // off-centre in [0.4, 0.6]; it holds when one of them sits at 1/2.
    #[test]
    fn quadratic_local_bound_needs_the_centre() {
        let (a, b): (f64, f64) = (0.4, 0.45);
        let diff = (binary_entropy(a) - binary_entropy(b)).abs();
        assert!(diff > 3.0 * (a - b).powi(2));
        assert!(diff <= binary_entropy_lipschitz(0.4) * (a - b).abs());
    }

    proptest! {
        #[test]
        fn tv_chain_holds(p in 5usize..300, k in 1usize..12, frac in 0.0f64..1.0, pick in any::<u32>()) {
            prop_assume!(k < p);
            let m = (p as f64 * frac) as usize;
            for ell in 1..=k {
                let range = feasible_v_eq(p, k, ell, m);
                let span = range.end() - range.start() + 1;
                let v = range.start() + pick as usize % span;
                for r in verify_tv_chain(p, k, ell, m, v).unwrap() {
                    prop_assert!(r.satisfied, "{r:?}");
                }
            }
        }

        #[test]
        fn roos_monotone(ell in 1usize..30, d1 in 0.0f64..0.5, d2 in 0.0f64..0.5) {
            let (lo, hi) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
            prop_assert!(roos_bound(ell, lo) <= roos_bound(ell, hi));
            prop_assert!(roos_bound(ell, -hi) == roos_bound(ell, hi));
            prop_assert!(roos_bound(ell, lo) <= roos_bound(ell + 1, lo));
        }

        #[test]
        fn binary_entropy_continuity(a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
            let t = (a - b).abs();
            prop_assert!((binary_entropy(a) - binary_entropy(b)).abs() <= binary_entropy_continuity_bound(t) + 1e-12);
        }

        #[test]
        fn entropy_near_the_centre(a in 0.4f64..=0.6, b in 0.4f64..=0.6) {
            let t = (a - b).abs();
            let diff = (binary_entropy(a) - binary_entropy(b)).abs();
            prop_assert!(diff <= binary_entropy_lipschitz(0.4) * t + 1e-15);
            let off = (a - 0.5).abs();
            prop_assert!(binary_entropy(0.5) - binary_entropy(a) <= 3.0 * off * off + 1e-15);
        }
    }
}
