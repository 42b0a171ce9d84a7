use std::hash::{DefaultHasher, Hash, Hasher};

use gtconverse::infomath::ln_choose;
use gtconverse::rng::substream;
use gtconverse::simulator::{
    estimate_pe, estimate_pe_ensemble, gen_matrix, random_set, sample_observations, sweep_n,
    Decoder, Ensemble, EnsembleSpec, InfoDensityDecoder, MapDecoder, SweepMode,
};
use gtconverse::thresholds::{
    capacity_output_dist, default_delta1, i_star, info_density_moments, strong_converse_threshold,
    DEFAULT_CAPACITY_TOL,
};
use gtconverse::{Channel, MeasurementMatrix, NoiseModel, Result};
use rand::seq::index::sample;

fn noiseless(k: usize) -> Channel {
    Channel::new(NoiseModel::Noiseless, k).unwrap()
}

fn symmetric(rho: f64, k: usize) -> Channel {
    Channel::new(NoiseModel::Symmetric { rho }, k).unwrap()
}

fn iid_spec(ch: &Channel, seed: u64) -> EnsembleSpec {
    EnsembleSpec {
        ensemble: Ensemble::Iid { nu: i_star(ch).nu },
        seed,
    }
}

/// Picks the `k` items with the highest score, ties to the lower index.
fn top_k(scores: &[f64], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut set = order[..k].to_vec();
    set.sort_unstable();
    set
}

fn column_scores(m: &MeasurementMatrix, f: impl Fn(u8, u8) -> f64, y: &[u8]) -> Vec<f64> {
    (0..m.p())
        .map(|j| (0..m.n()).map(|i| f(m.get(i, j), y[i])).sum())
        .collect()
}

/// Agreement between a column and the outcomes.
struct Correlation;
/// Number of positive tests an item is in.
struct PositiveCount;
/// Fraction of an item's tests that are negative, fewest first.
struct NoisyComp;
/// Uniform guess seeded by the observation.
struct RandomGuess;
/// Always the lexicographically first set.
struct FirstSet;

impl Decoder for Correlation {
    fn decode(&self, m: &MeasurementMatrix, y: &[u8], k: usize) -> Result<Option<Vec<usize>>> {
        let s = column_scores(m, |x, y| f64::from(x) * if y == 1 { 1.0 } else { -1.0 }, y);
        Ok(Some(top_k(&s, k)))
    }
}

impl Decoder for PositiveCount {
    fn decode(&self, m: &MeasurementMatrix, y: &[u8], k: usize) -> Result<Option<Vec<usize>>> {
        Ok(Some(top_k(
            &column_scores(m, |x, y| f64::from(x * y), y),
            k,
        )))
    }
}

impl Decoder for NoisyComp {
    fn decode(&self, m: &MeasurementMatrix, y: &[u8], k: usize) -> Result<Option<Vec<usize>>> {
        let neg = column_scores(m, |x, y| f64::from(x * (1 - y)), y);
        let scores: Vec<f64> = neg
            .iter()
            .enumerate()
            .map(|(j, &c)| -c / m.column_weight(j).max(1) as f64)
            .collect();
        Ok(Some(top_k(&scores, k)))
    }
}

impl Decoder for RandomGuess {
    fn decode(&self, m: &MeasurementMatrix, y: &[u8], k: usize) -> Result<Option<Vec<usize>>> {
        let mut h = DefaultHasher::new();
        y.hash(&mut h);
        let mut rng = substream(h.finish(), 1, 0);
        let mut set = sample(&mut rng, m.p(), k).into_vec();
        set.sort_unstable();
        Ok(Some(set))
    }
}

impl Decoder for FirstSet {
    fn decode(&self, _: &MeasurementMatrix, _: &[u8], k: usize) -> Result<Option<Vec<usize>>> {
        Ok(Some((0..k).collect()))
    }
}

#[test]
fn map_beats_heuristics_on_shared_trials() {
    let (p, k, n) = (12, 2, 40);
    let ch = symmetric(0.11, k);
    let m = gen_matrix(&iid_spec(&ch, 31), n, p, k).unwrap();
    let map = estimate_pe(&m, &ch, k, &MapDecoder::new(ch.clone()), 2000, 17).unwrap();
    let heuristics: [(&str, &dyn Decoder); 5] = [
        ("correlation", &Correlation),
        ("positive count", &PositiveCount),
        ("noisy comp", &NoisyComp),
        ("random guess", &RandomGuess),
        ("first set", &FirstSet),
    ];
    for (name, dec) in heuristics {
        let other = estimate_pe(&m, &ch, k, dec, 2000, 17).unwrap();
        assert!(
            map.errors <= other.errors,
            "{name}: map {} > {}",
            map.errors,
            other.errors
        );
    }
}

#[test]
fn map_beats_info_density_decoder() {
    let (p, k) = (14, 2);
    for (ch, n) in [(noiseless(k), 5), (symmetric(0.11, k), 20)] {
        let m = gen_matrix(&iid_spec(&ch, 4), n, p, k).unwrap();
        let cap = capacity_output_dist(&ch, DEFAULT_CAPACITY_TOL).unwrap();
        let gamma = ln_choose(p as u64, k as u64) + default_delta1(p, k).ln();
        let info = InfoDensityDecoder::new(ch.clone(), cap.q_star_pair(), gamma);
        let a = estimate_pe(&m, &ch, k, &MapDecoder::new(ch.clone()), 3000, 8).unwrap();
        let b = estimate_pe(&m, &ch, k, &info, 3000, 8).unwrap();
        assert!(
            a.errors <= b.errors,
            "map {} > info density {}",
            a.errors,
            b.errors
        );
    }
}

// Fraction of trials in which the true set's information density does not
// exceed gamma, against the set-averaged Chebyshev tail 1 - sigma^2 / (gamma - mu)^2.
#[test]
fn true_set_misses_threshold_as_often_as_chebyshev_predicts() {
    let (p, k) = (24, 2);
    for ch in [noiseless(k), symmetric(0.11, k)] {
        let n = (strong_converse_threshold(p, k, &ch, 0.0).unwrap() * 0.5).floor() as usize;
        let m = gen_matrix(&iid_spec(&ch, 21), n, p, k).unwrap();
        let cap = capacity_output_dist(&ch, DEFAULT_CAPACITY_TOL).unwrap();
        let q = cap.q_star_pair();
        let gamma = ln_choose(p as u64, k as u64) + default_delta1(p, k).ln();

        let sets = ln_choose(p as u64, k as u64).exp().round() as usize;
        let mut predicted = 0.0;
        for i in 0..p {
            for j in i + 1..p {
                let mo = info_density_moments(&m, &[i, j], &ch, &cap.q_star).unwrap();
                let gap = gamma - mo.mean;
                if gap > 0.0 {
                    predicted += (1.0 - mo.variance / (gap * gap)).max(0.0);
                }
            }
        }
        predicted /= sets as f64;

        let trials = 10_000u64;
        let mut misses = 0u64;
        for t in 0..trials {
            let mut rng = substream(77, 3, t);
            let s = random_set(p, k, &mut rng);
            let y = sample_observations(&m, &s, &ch, &mut rng);
            let density: f64 = m
                .defective_counts(&s)
                .iter()
                .zip(&y)
                .map(|(&v, &yi)| (ch.prob(v, yi) / q[yi as usize]).ln())
                .sum();
            misses += u64::from(density <= gamma);
        }
        let frac = misses as f64 / trials as f64;
        let se = (frac * (1.0 - frac) / trials as f64).sqrt();
        assert!(frac >= predicted - 4.0 * se, "{frac} < {predicted}");
    }
}

#[test]
fn zero_tests_match_uniform_guess() {
    let (p, k) = (9, 3);
    let ch = symmetric(0.2, k);
    let target = 1.0 - (-ln_choose(p as u64, k as u64)).exp();
    let sweep = sweep_n(
        &iid_spec(&ch, 1),
        &ch,
        p,
        k,
        &[0],
        &MapDecoder::new(ch.clone()),
        5000,
        2,
        SweepMode::Ensemble,
    )
    .unwrap();
    let e = &sweep.points[0].estimate;
    assert!((e.pe_hat - target).abs() <= 4.0 * e.std_err.max(1.0 / e.trials as f64));
}

#[test]
fn twice_the_threshold_recovers() {
    let (p, k) = (20, 2);
    let ch = noiseless(k);
    let n = (2.0 * strong_converse_threshold(p, k, &ch, 0.0).unwrap()).ceil() as usize;
    let est = estimate_pe_ensemble(
        &iid_spec(&ch, 6),
        n,
        p,
        &ch,
        k,
        &MapDecoder::new(ch.clone()),
        4000,
        6,
    )
    .unwrap();
    assert!(est.pe_hat <= 0.1, "n = {n}: {est:?}");
}

#[test]
fn sweep_is_monotone_up_to_noise() {
    let (p, k) = (20, 2);
    let ch = symmetric(0.05, k);
    let grid: Vec<usize> = (0..=30).step_by(3).collect();
    let sweep = sweep_n(
        &iid_spec(&ch, 12),
        &ch,
        p,
        k,
        &grid,
        &MapDecoder::new(ch.clone()),
        1500,
        12,
        SweepMode::Ensemble,
    )
    .unwrap();
    for (pt, iso) in sweep.points.iter().zip(&sweep.isotonic) {
        let e = &pt.estimate;
        assert!(e.ci_low <= e.pe_hat && e.pe_hat <= e.ci_high);
        assert!(
            (e.pe_hat - iso).abs() <= e.ci_high - e.ci_low,
            "n = {}: {} vs isotonic {iso}",
            pt.n,
            e.pe_hat
        );
    }
    assert!(sweep.isotonic.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn runs_are_bit_identical() {
    let (p, k) = (15, 2);
    let ch = symmetric(0.11, k);
    let spec = EnsembleSpec {
        ensemble: Ensemble::ConstantColumnWeight { w: 3 },
        seed: 8,
    };
    let run = |mode| {
        sweep_n(
            &spec,
            &ch,
            p,
            k,
            &[4, 8, 12],
            &MapDecoder::new(ch.clone()),
            700,
            5,
            mode,
        )
        .unwrap()
    };
    for mode in [SweepMode::Ensemble, SweepMode::Fixed] {
        assert_eq!(run(mode), run(mode));
    }
    assert_ne!(
        run(SweepMode::Fixed),
        sweep_n(
            &spec,
            &ch,
            p,
            k,
            &[4, 8, 12],
            &MapDecoder::new(ch.clone()),
            700,
            6,
            SweepMode::Fixed
        )
        .unwrap()
    );
}

#[test]
fn degenerate_sizes_do_not_panic() {
    let ch = noiseless(4);
    let m = MeasurementMatrix::zeros(1, 4);
    let e = estimate_pe(&m, &ch, 4, &MapDecoder::new(ch.clone()), 100, 0).unwrap();
    assert_eq!(e.errors, 0);
    assert_eq!(strong_converse_threshold(4, 4, &ch, 0.0).unwrap(), 0.0);
    assert!(estimate_pe(&m, &ch, 4, &MapDecoder::new(ch.clone()), 0, 0).is_err());
}
