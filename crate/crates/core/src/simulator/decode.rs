//! Exhaustive decoders over all size-`k` candidate sets.

use std::ops::ControlFlow;

use super::MeasurementMatrix;
use crate::channels::Channel;
use crate::error::{param_err, Error, Result};
use crate::infomath::ln_choose;

/// Largest number of candidate sets an exhaustive decoder will scan by default.
pub const DEFAULT_SET_CAP: u64 = 1_000_000;

/// Anything that maps `(X, y)` to an estimate of the defective set.
/// `Ok(None)` means the decoder abstained, which counts as an error.
pub trait Decoder: Sync {
    fn decode(&self, matrix: &MeasurementMatrix, y: &[u8], k: usize) -> Result<Option<Vec<usize>>>;
}

/// Per-set histogram of `(V_s, Y)` over the tests.
pub(crate) struct CountTable {
    /// `counts[v] = [#tests with V_s = v and Y = 0, ... and Y = 1]`
    pub counts: Vec<[u32; 2]>,
}

fn check_size(p: usize, k: usize, cap: u64) -> Result<()> {
    if k > p {
        return Err(param_err!("k = {k} exceeds p = {p}"));
    }
    if ln_choose(p as u64, k as u64) > (cap as f64).ln() + 1e-9 {
        return Err(Error::Feasibility(format!(
            "C({p}, {k}) candidate sets exceeds the cap of {cap}; use smaller p or k"
        )));
    }
    Ok(())
}

fn pack(y: &[u8], words: usize) -> Vec<u64> {
    let mut bits = vec![0u64; words];
    for (i, &b) in y.iter().enumerate() {
        if b == 1 {
            bits[i / 64] |= 1 << (i % 64);
        }
    }
    bits
}

/// Visits every size-`k` subset in lexicographic order together with its
/// `(V_s, Y)` histogram. Per-test counts are kept as bit-sliced binary
/// counters over the packed columns.
pub(crate) fn scan_sets<F>(matrix: &MeasurementMatrix, y: &[u8], k: usize, mut visit: F)
where
    F: FnMut(&[usize], &CountTable) -> ControlFlow<()>,
{
    let (n, p, words) = (matrix.n(), matrix.p(), matrix.words());
    assert_eq!(
        y.len(),
        n,
        "observation length must equal the number of tests"
    );
    let y_bits = pack(y, words);
    let mut valid = vec![0u64; words];
    for i in 0..n {
        valid[i / 64] |= 1 << (i % 64);
    }
    let planes = (usize::BITS - k.leading_zeros()).max(1) as usize;
    let stride = planes * words;
    // acc[d] holds the counter planes for the first d chosen columns.
    let mut acc = vec![0u64; (k + 1) * stride];
    let mut idx: Vec<usize> = (0..k).collect();
    let mut table = CountTable {
        counts: vec![[0; 2]; k + 1],
    };
    let mut mask = vec![0u64; words];

    let mut rebuild_from = 0;
    loop {
        for d in rebuild_from..k {
            let (prev, next) = acc.split_at_mut((d + 1) * stride);
            let prev = &prev[d * stride..];
            let next = &mut next[..stride];
            let col = matrix.column_bits(idx[d]);
            for w in 0..words {
                let mut carry = col[w];
                for b in 0..planes {
                    let plane = prev[b * words + w];
                    next[b * words + w] = plane ^ carry;
                    carry &= plane;
                }
            }
        }
        let top = &acc[k * stride..(k + 1) * stride];
        for (v, slot) in table.counts.iter_mut().enumerate() {
            let mut total = 0u32;
            let mut ones = 0u32;
            for w in 0..words {
                let mut m = valid[w];
                for b in 0..planes {
                    let plane = top[b * words + w];
                    m &= if (v >> b) & 1 == 1 { plane } else { !plane };
                }
                mask[w] = m;
                total += m.count_ones();
                ones += (m & y_bits[w]).count_ones();
            }
            *slot = [total - ones, ones];
        }
        if visit(&idx, &table).is_break() {
            return;
        }
        // Advance to the next combination.
        let Some(i) = (0..k).rev().find(|&i| idx[i] < p - k + i) else {
            return;
        };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
        rebuild_from = i;
    }
}

fn score(table: &CountTable, weights: &[[f64; 2]]) -> f64 {
    let mut s = 0.0;
    for (counts, w) in table.counts.iter().zip(weights) {
        for y in 0..2 {
            if counts[y] > 0 {
                s += counts[y] as f64 * w[y];
            }
        }
    }
    s
}

fn log_likelihood_table(channel: &Channel, k: usize) -> Result<Vec<[f64; 2]>> {
    if channel.k() < k {
        return Err(param_err!("channel covers v <= {}, need {k}", channel.k()));
    }
    Ok((0..=k).map(|v| channel.row(v).map(f64::ln)).collect())
}

/// Maximum-likelihood (= MAP under a uniform prior) estimate. Ties go to the
/// lexicographically smallest index tuple.
pub fn map_decoder(
    matrix: &MeasurementMatrix,
    y: &[u8],
    k: usize,
    channel: &Channel,
) -> Result<Vec<usize>> {
    MapDecoder::new(channel.clone()).decode_set(matrix, y, k)
}

/// First set in lexicographic order whose information density
/// `sum_i ln(P(y_i | v_i) / q(y_i))` exceeds `gamma`; `None` if no set does.
pub fn info_density_decoder(
    matrix: &MeasurementMatrix,
    y: &[u8],
    k: usize,
    channel: &Channel,
    q: [f64; 2],
    gamma: f64,
) -> Result<Option<Vec<usize>>> {
    InfoDensityDecoder::new(channel.clone(), q, gamma).decode(matrix, y, k)
}

#[derive(Debug, Clone)]
pub struct MapDecoder {
    pub channel: Channel,
    pub set_cap: u64,
}

impl MapDecoder {
    pub fn new(channel: Channel) -> Self {
        MapDecoder {
            channel,
            set_cap: DEFAULT_SET_CAP,
        }
    }

    pub fn decode_set(&self, matrix: &MeasurementMatrix, y: &[u8], k: usize) -> Result<Vec<usize>> {
        check_size(matrix.p(), k, self.set_cap)?;
        let weights = log_likelihood_table(&self.channel, k)?;
        let mut best: Option<(f64, Vec<usize>)> = None;
        scan_sets(matrix, y, k, |set, table| {
            let s = score(table, &weights);
            match &mut best {
                Some((b, bs)) if s > *b => {
                    *b = s;
                    bs.copy_from_slice(set);
                }
                None => best = Some((s, set.to_vec())),
                _ => {}
            }
            ControlFlow::Continue(())
        });
        Ok(best.map(|(_, s)| s).unwrap_or_default())
    }
}

impl Decoder for MapDecoder {
    fn decode(&self, matrix: &MeasurementMatrix, y: &[u8], k: usize) -> Result<Option<Vec<usize>>> {
        self.decode_set(matrix, y, k).map(Some)
    }
}

#[derive(Debug, Clone)]
pub struct InfoDensityDecoder {
    pub channel: Channel,
    pub q: [f64; 2],
    pub gamma: f64,
    pub set_cap: u64,
}

impl InfoDensityDecoder {
    pub fn new(channel: Channel, q: [f64; 2], gamma: f64) -> Self {
        InfoDensityDecoder {
            channel,
            q,
            gamma,
            set_cap: DEFAULT_SET_CAP,
        }
    }

    /// Per-`(v, y)` terms `ln(P(y|v) / q(y))`.
    fn density_table(&self, k: usize) -> Result<Vec<[f64; 2]>> {
        let ll = log_likelihood_table(&self.channel, k)?;
        Ok(ll
            .into_iter()
            .map(|row| {
                let mut out = [0.0; 2];
                for y in 0..2 {
                    out[y] = if row[y] == f64::NEG_INFINITY {
                        f64::NEG_INFINITY
                    } else {
                        row[y] - self.q[y].ln()
                    };
                }
                out
            })
            .collect())
    }
}

impl Decoder for InfoDensityDecoder {
    fn decode(&self, matrix: &MeasurementMatrix, y: &[u8], k: usize) -> Result<Option<Vec<usize>>> {
        check_size(matrix.p(), k, self.set_cap)?;
        let weights = self.density_table(k)?;
        let accept_all = self.gamma == f64::NEG_INFINITY;
        let mut found = None;
        scan_sets(matrix, y, k, |set, table| {
            if accept_all || score(table, &weights) > self.gamma {
                found = Some(set.to_vec());
                ControlFlow::Break(())
            } else {
                ControlFlow::Continue(())
            }
        });
        Ok(found)
    }
}
