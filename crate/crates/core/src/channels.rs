//! Observation models `P(Y | V_S)` for a single pooled test.
//!
//! A test outcome depends on the measurement vector only through the number
//! of defective items it contains, so every model reduces to a table
//! `q_v = P(Y = 1 | V_S = v)` for `v = 0..=k`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain_err, param_err, Error, Result};

/// Which output of the noiseless OR channel a Z-channel corrupts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZOrientation {
    /// A positive outcome is read as negative with probability `rho`.
    OneToZero,
    /// A negative outcome is read as positive with probability `rho`.
    ZeroToOne,
}

/// A named noise family with its parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseModel {
    Noiseless,
    /// `Y = 1{V > 0} xor Z`, `Z ~ Bernoulli(rho)`, `rho in [0, 1/2)`.
    Symmetric {
        rho: f64,
    },
    /// OR channel followed by a Z-channel with crossover `rho in [0, 1)`.
    ZChannel {
        rho: f64,
        orientation: ZOrientation,
    },
    /// Each defective in the pool is independently missed with probability `q in [0, 1)`.
    Dilution {
        q: f64,
    },
}

impl NoiseModel {
    pub fn validate(&self) -> Result<()> {
        let check = |name: &str, x: f64, hi: f64| {
            if x.is_finite() && (0.0..hi).contains(&x) {
                Ok(())
            } else {
                Err(param_err!("{name} parameter {x} outside [0, {hi})"))
            }
        };
        match *self {
            NoiseModel::Noiseless => Ok(()),
            NoiseModel::Symmetric { rho } => check("symmetric", rho, 0.5),
            NoiseModel::ZChannel { rho, .. } => check("zchannel", rho, 1.0),
            NoiseModel::Dilution { q } => check("dilution", q, 1.0),
        }
    }
}

impl fmt::Display for NoiseModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NoiseModel::Noiseless => write!(f, "noiseless"),
            NoiseModel::Symmetric { rho } => write!(f, "symmetric:{rho}"),
            NoiseModel::ZChannel {
                rho,
                orientation: ZOrientation::OneToZero,
            } => write!(f, "zchannel:{rho}"),
            NoiseModel::ZChannel {
                rho,
                orientation: ZOrientation::ZeroToOne,
            } => write!(f, "zchannel-rev:{rho}"),
            NoiseModel::Dilution { q } => write!(f, "dilution:{q}"),
        }
    }
}

impl FromStr for NoiseModel {
    type Err = Error;

    /// Grammar: `noiseless`, `symmetric:RHO`, `zchannel:RHO`,
    /// `zchannel-rev:RHO`, `dilution:Q`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n.trim(), Some(a.trim())),
            None => (s, None),
        };
        let param = || -> Result<f64> {
            let a =
                arg.ok_or_else(|| Error::Parse(format!("noise model '{name}' needs a parameter")))?;
            a.parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad noise parameter '{a}'")))
        };
        let model = match name.to_ascii_lowercase().as_str() {
            "noiseless" => {
                if arg.is_some() {
                    return Err(Error::Parse("noiseless takes no parameter".into()));
                }
                NoiseModel::Noiseless
            }
            "symmetric" => NoiseModel::Symmetric { rho: param()? },
            "zchannel" => NoiseModel::ZChannel {
                rho: param()?,
                orientation: ZOrientation::OneToZero,
            },
            "zchannel-rev" => NoiseModel::ZChannel {
                rho: param()?,
                orientation: ZOrientation::ZeroToOne,
            },
            "dilution" => NoiseModel::Dilution { q: param()? },
            other => return Err(Error::Parse(format!("unknown noise model '{other}'"))),
        };
        model.validate()?;
        Ok(model)
    }
}

impl Serialize for NoiseModel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for NoiseModel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Dense table `q_v = P(Y = 1 | V_S = v)`, `v = 0..=k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Channel {
    k: usize,
    prob_one: Vec<f64>,
}

impl Channel {
    /// Builds the table for `model` with `k` defectives.
    pub fn new(model: NoiseModel, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(domain_err!("channel needs k >= 1"));
        }
        model.validate()?;
        let prob_one = (0..=k)
            .map(|v| match model {
                NoiseModel::Noiseless => f64::from(u8::from(v > 0)),
                NoiseModel::Symmetric { rho } => {
                    if v > 0 {
                        1.0 - rho
                    } else {
                        rho
                    }
                }
                NoiseModel::ZChannel { rho, orientation } => match (orientation, v > 0) {
                    (ZOrientation::OneToZero, true) => 1.0 - rho,
                    (ZOrientation::OneToZero, false) => 0.0,
                    (ZOrientation::ZeroToOne, true) => 1.0,
                    (ZOrientation::ZeroToOne, false) => rho,
                },
                NoiseModel::Dilution { q } => 1.0 - q.powi(v as i32),
            })
            .collect();
        Ok(Channel { k, prob_one })
    }

    /// Arbitrary table; `prob_one.len() - 1` becomes `k`.
    pub fn from_table(prob_one: Vec<f64>) -> Result<Self> {
        if prob_one.len() < 2 {
            return Err(domain_err!("channel table needs at least 2 entries"));
        }
        if let Some(bad) = prob_one.iter().find(|q| !(0.0..=1.0).contains(*q)) {
            return Err(param_err!("channel entry {bad} outside [0, 1]"));
        }
        Ok(Channel {
            k: prob_one.len() - 1,
            prob_one,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn table(&self) -> &[f64] {
        &self.prob_one
    }

    /// True when the output does not depend on `v`, so no test carries information.
    pub fn is_uninformative(&self) -> bool {
        self.prob_one.iter().all(|&q| q == self.prob_one[0])
    }

    /// `P(Y = 1 | V_S = v)`. Panics if `v > k`.
    #[inline]
    pub fn prob_one(&self, v: usize) -> f64 {
        self.prob_one[v]
    }

    /// `P(Y = y | V_S = v)` for `y in {0, 1}`.
    #[inline]
    pub fn prob(&self, v: usize, y: u8) -> f64 {
        if y == 0 {
            1.0 - self.prob_one[v]
        } else {
            self.prob_one[v]
        }
    }

    /// Row `v` as `[P(Y=0|v), P(Y=1|v)]`.
    pub fn row(&self, v: usize) -> [f64; 2] {
        [1.0 - self.prob_one[v], self.prob_one[v]]
    }

    /// Draws one output for a test containing `v` defectives.
    pub fn sample_output<R: Rng + ?Sized>(&self, v: usize, rng: &mut R) -> Result<u8> {
        if v > self.k {
            return Err(domain_err!("v = {v} exceeds k = {}", self.k));
        }
        Ok(self.sample_unchecked(v, rng))
    }

    #[inline]
    pub(crate) fn sample_unchecked<R: Rng + ?Sized>(&self, v: usize, rng: &mut R) -> u8 {
        u8::from(rng.random::<f64>() < self.prob_one[v])
    }
}
