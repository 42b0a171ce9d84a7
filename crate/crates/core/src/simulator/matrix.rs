use std::fmt::Write as _;
use std::path::Path;

use crate::error::{param_err, Error, Result};

/// An `n x p` binary test design. Row `i` lists the items pooled in test `i`.
///
/// Columns are also kept as packed bit vectors over tests, which is what the
/// decoders work with.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MeasurementMatrix {
    n: usize,
    p: usize,
    entries: Vec<u8>,
    row_weights: Vec<usize>,
    columns: Vec<u64>,
    words: usize,
}

impl MeasurementMatrix {
    /// `entries` is row-major with values in `{0, 1}`.
    pub fn new(n: usize, p: usize, entries: Vec<u8>) -> Result<Self> {
        if entries.len() != n * p {
            return Err(param_err!(
                "expected {} entries for {n}x{p}, got {}",
                n * p,
                entries.len()
            ));
        }
        if entries.iter().any(|&x| x > 1) {
            return Err(param_err!("matrix entries must be 0 or 1"));
        }
        let row_weights = (0..n)
            .map(|i| {
                entries[i * p..(i + 1) * p]
                    .iter()
                    .map(|&x| x as usize)
                    .sum()
            })
            .collect();
        let words = n.div_ceil(64).max(1);
        let mut columns = vec![0u64; words * p];
        for i in 0..n {
            for j in 0..p {
                if entries[i * p + j] == 1 {
                    columns[j * words + i / 64] |= 1 << (i % 64);
                }
            }
        }
        Ok(MeasurementMatrix {
            n,
            p,
            entries,
            row_weights,
            columns,
            words,
        })
    }

    pub fn from_rows(rows: &[Vec<u8>]) -> Result<Self> {
        let p = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != p) {
            return Err(param_err!("rows have unequal lengths"));
        }
        Self::new(rows.len(), p, rows.concat())
    }

    pub fn zeros(n: usize, p: usize) -> Self {
        Self::new(n, p, vec![0; n * p]).expect("valid shape")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    #[inline]
    pub fn get(&self, test: usize, item: usize) -> u8 {
        self.entries[test * self.p + item]
    }

    pub fn row(&self, test: usize) -> &[u8] {
        &self.entries[test * self.p..(test + 1) * self.p]
    }

    /// Number of items in each test.
    pub fn row_weights(&self) -> &[usize] {
        &self.row_weights
    }

    pub fn column_weight(&self, item: usize) -> usize {
        self.column_bits(item)
            .iter()
            .map(|w| w.count_ones() as usize)
            .sum()
    }

    /// Packed indicator of the tests containing `item`.
    #[inline]
    pub(crate) fn column_bits(&self, item: usize) -> &[u64] {
        &self.columns[item * self.words..(item + 1) * self.words]
    }

    pub(crate) fn words(&self) -> usize {
        self.words
    }

    /// `V_s` for every test: how many members of `set` each test contains.
    pub fn defective_counts(&self, set: &[usize]) -> Vec<usize> {
        (0..self.n)
            .map(|i| {
                let row = self.row(i);
                set.iter().map(|&j| row[j] as usize).sum()
            })
            .collect()
    }

    /// Plain-text form: a `p n` header line, then one line of `0`/`1`
    /// characters per test. Blank lines and lines starting with `#` are
    /// skipped when parsing.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity((self.p + 1) * (self.n + 1));
        let _ = writeln!(out, "{} {}", self.p, self.n);
        for i in 0..self.n {
            out.extend(self.row(i).iter().map(|&x| if x == 1 { '1' } else { '0' }));
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| {
            let t = l.trim();
            !t.is_empty() && !t.starts_with('#')
        });
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::Parse("empty matrix file".into()))?;
        let dims: Vec<&str> = header.split_whitespace().collect();
        let parse_dim = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| Error::Parse(format!("line 1: bad dimension '{s}'")))
        };
        let (p, n) = match dims.as_slice() {
            [p, n] => (parse_dim(p)?, parse_dim(n)?),
            _ => return Err(Error::Parse("line 1: header must be 'p n'".into())),
        };
        let mut entries = Vec::with_capacity(n * p);
        let mut rows = 0;
        for (lineno, line) in lines {
            let line = line.trim();
            rows += 1;
            if rows > n {
                return Err(Error::Parse(format!(
                    "line {}: more than {n} rows",
                    lineno + 1
                )));
            }
            if line.len() != p {
                return Err(Error::Parse(format!(
                    "line {}: row {} has length {}, expected {p}",
                    lineno + 1,
                    rows,
                    line.len()
                )));
            }
            for c in line.chars() {
                entries.push(match c {
                    '0' => 0,
                    '1' => 1,
                    other => {
                        return Err(Error::Parse(format!(
                            "line {}: row {rows} has invalid character '{other}'",
                            lineno + 1
                        )))
                    }
                });
            }
        }
        if rows != n {
            return Err(Error::Parse(format!("expected {n} rows, found {rows}")));
        }
        Self::new(n, p, entries)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path.as_ref(), self.to_text())
            .map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
        Self::from_text(&text)
    }
}
