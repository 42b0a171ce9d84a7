use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::MeasurementMatrix;
use crate::error::{param_err, Error, Result};
use crate::rng::{substream, DOMAIN_MATRIX};
use crate::thresholds::MixtureProfile;

/// Random test-design families.
#[derive(Debug, Clone, PartialEq)]
pub enum Ensemble {
    /// Every entry Bernoulli(`nu / k`).
    Iid { nu: f64 },
    /// Every column has exactly `w` ones at uniformly random tests.
    ConstantColumnWeight { w: usize },
    /// Tests are split among the atoms in proportion to their weights; a
    /// test assigned to atom `u` has Bernoulli(`nu_u / k`) entries.
    Profile(MixtureProfile),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub ensemble: Ensemble,
    pub seed: u64,
}

impl Ensemble {
    pub fn validate(&self, n: usize, k: usize) -> Result<()> {
        match self {
            Ensemble::Iid { nu } => {
                if !(0.0..=k as f64).contains(nu) {
                    return Err(param_err!("iid nu = {nu} outside [0, {k}]"));
                }
            }
            Ensemble::ConstantColumnWeight { w } => {
                if *w > n {
                    return Err(param_err!("column weight {w} exceeds n = {n}"));
                }
            }
            Ensemble::Profile(profile) => {
                if let Some(a) = profile
                    .atoms()
                    .iter()
                    .find(|a| !(0.0..=k as f64).contains(&a.nu))
                {
                    return Err(param_err!("profile atom nu = {} outside [0, {k}]", a.nu));
                }
            }
        }
        Ok(())
    }

    /// Draws an `n x p` matrix from `rng`.
    pub fn sample<R: Rng + ?Sized>(
        &self,
        n: usize,
        p: usize,
        k: usize,
        rng: &mut R,
    ) -> Result<MeasurementMatrix> {
        self.validate(n, k)?;
        let mut entries = vec![0u8; n * p];
        match self {
            Ensemble::Iid { nu } => {
                let q = nu / k as f64;
                for x in entries.iter_mut() {
                    *x = u8::from(rng.random::<f64>() < q);
                }
            }
            Ensemble::ConstantColumnWeight { w } => {
                for j in 0..p {
                    for i in sample(rng, n, *w) {
                        entries[i * p + j] = 1;
                    }
                }
            }
            Ensemble::Profile(profile) => {
                for (i, nu) in profile.row_parameters(n).into_iter().enumerate() {
                    let q = nu / k as f64;
                    for x in entries[i * p..(i + 1) * p].iter_mut() {
                        *x = u8::from(rng.random::<f64>() < q);
                    }
                }
            }
        }
        MeasurementMatrix::new(n, p, entries)
    }
}

/// Deterministic in `spec.seed`.
pub fn gen_matrix(spec: &EnsembleSpec, n: usize, p: usize, k: usize) -> Result<MeasurementMatrix> {
    let mut rng = substream(spec.seed, DOMAIN_MATRIX, 0);
    spec.ensemble.sample(n, p, k, &mut rng)
}

impl fmt::Display for Ensemble {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ensemble::Iid { nu } => write!(f, "iid:{nu}"),
            Ensemble::ConstantColumnWeight { w } => write!(f, "ccw:{w}"),
            Ensemble::Profile(profile) => {
                write!(f, "profile:")?;
                for (i, a) in profile.atoms().iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{}@{}", a.weight, a.nu)?;
                }
                Ok(())
            }
        }
    }
}

impl FromStr for Ensemble {
    type Err = Error;

    /// Grammar: `iid:NU`, `ccw:W`, `profile:W1@NU1,W2@NU2,...`.
    fn from_str(s: &str) -> Result<Self> {
        let (name, arg) = s
            .trim()
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("ensemble '{s}' needs a parameter")))?;
        let num = |t: &str| -> Result<f64> {
            t.trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad number '{t}' in ensemble")))
        };
        match name.trim() {
            "iid" => Ok(Ensemble::Iid { nu: num(arg)? }),
            "ccw" => arg
                .trim()
                .parse()
                .map(|w| Ensemble::ConstantColumnWeight { w })
                .map_err(|_| Error::Parse(format!("bad column weight '{arg}'"))),
            "profile" => {
                let atoms = arg
                    .split(',')
                    .map(|atom| {
                        let (w, nu) = atom.split_once('@').ok_or_else(|| {
                            Error::Parse(format!("profile atom '{atom}' must be WEIGHT@NU"))
                        })?;
                        Ok((num(w)?, num(nu)?))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(Ensemble::Profile(MixtureProfile::new(atoms)?))
            }
            other => Err(Error::Parse(format!("unknown ensemble '{other}'"))),
        }
    }
}

impl Serialize for Ensemble {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Ensemble {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(ensemble: Ensemble) -> EnsembleSpec {
        EnsembleSpec { ensemble, seed: 11 }
    }

    #[test]
    fn iid_zero_density_is_all_zero() {
        let m = gen_matrix(&spec(Ensemble::Iid { nu: 0.0 }), 20, 10, 3).unwrap();
        assert!(m.row_weights().iter().all(|&w| w == 0));
    }

    #[test]
    fn full_column_weight_is_all_ones() {
        let m = gen_matrix(&spec(Ensemble::ConstantColumnWeight { w: 7 }), 7, 9, 2).unwrap();
        assert!(m.row_weights().iter().all(|&w| w == 9));
    }

    #[test]
    fn constant_column_weight_is_exact() {
        let m = gen_matrix(&spec(Ensemble::ConstantColumnWeight { w: 3 }), 12, 40, 2).unwrap();
        assert!((0..40).all(|j| m.column_weight(j) == 3));
        assert!(gen_matrix(&spec(Ensemble::ConstantColumnWeight { w: 13 }), 12, 40, 2).is_err());
    }

    #[test]
    fn iid_density_concentrates() {
        let (n, p) = (10_000, 100);
        let m = gen_matrix(&spec(Ensemble::Iid { nu: 1.0 }), n, p, 2).unwrap();
        for j in 0..p {
            let density = m.column_weight(j) as f64 / n as f64;
            assert!((density - 0.5).abs() < 0.02, "column {j}: {density}");
        }
    }

    #[test]
    fn profile_rows_follow_their_atoms() {
        let profile = MixtureProfile::new(vec![(0.5, 0.0), (0.5, 2.0)]).unwrap();
        let m = gen_matrix(&spec(Ensemble::Profile(profile)), 10, 15, 2).unwrap();
        let weights = m.row_weights();
        assert!(weights[..5].iter().all(|&w| w == 0));
        assert!(weights[5..].iter().all(|&w| w == 15));
    }

    #[test]
    fn deterministic_in_seed() {
        let s = spec(Ensemble::Iid { nu: 0.7 });
        assert_eq!(
            gen_matrix(&s, 30, 20, 2).unwrap(),
            gen_matrix(&s, 30, 20, 2).unwrap()
        );
        let other = EnsembleSpec {
            seed: 12,
            ..s.clone()
        };
        assert_ne!(
            gen_matrix(&s, 30, 20, 2).unwrap(),
            gen_matrix(&other, 30, 20, 2).unwrap()
        );
    }

    #[test]
    fn grammar() {
        for s in ["iid:0.5", "ccw:3", "profile:0.25@0.1,0.75@1.5"] {
            assert_eq!(s.parse::<Ensemble>().unwrap().to_string(), s);
        }
        assert!("iid".parse::<Ensemble>().is_err());
        assert!("profile:0.5@1,0.4@2".parse::<Ensemble>().is_err());
        assert!("bogus:1".parse::<Ensemble>().is_err());
        assert!(Ensemble::Iid { nu: 3.0 }.validate(5, 2).is_err());
    }
}
