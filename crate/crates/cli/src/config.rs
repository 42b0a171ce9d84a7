use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

/// `--seed`: a 64-bit integer, or `auto` to pick one from the clock.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SeedArg {
    Value(u64),
    Word(String),
}

impl FromStr for SeedArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "auto" => Ok(SeedArg::Word("auto".into())),
            t => t
                .parse()
                .map(SeedArg::Value)
                .map_err(|_| format!("seed must be a non-negative integer or 'auto', got '{s}'")),
        }
    }
}

impl fmt::Display for SeedArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SeedArg::Value(v) => write!(f, "{v}"),
            SeedArg::Word(w) => f.write_str(w),
        }
    }
}

/// Every flag a command may read. Unset flags fall back to the `--config`
/// file, then to per-command defaults.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct Params {
    /// noiseless | symmetric:RHO | zchannel:RHO | zchannel-rev:RHO | dilution:Q
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub channel: Option<String>,
    /// Number of items.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<usize>,
    /// Number of defectives.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    /// Number of tests.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// Test counts for `sweep`: `0,4,8`, `A:B` or `A:B:STEP` (inclusive).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_grid: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c0: Option<f64>,
    /// Chebyshev slack; swept over a grid when unset.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta1: Option<f64>,
    /// iid:NU | ccw:W | profile:W1@NU1,W2@NU2,...
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ensemble: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<SeedArg>,
    /// ensemble (fresh matrix per trial) | fixed (one matrix)
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<String>,
    /// map | info-density
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decoder: Option<String>,
    /// Information-density threshold; defaults to ln C(p,k) + ln delta1.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    /// Matrix file in the plain-text `p n` format.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matrix: Option<PathBuf>,
    /// Also optimize a time-sharing profile with up to this many atoms (1-3).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub atoms: Option<usize>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
}

/// Reads a config file: raw parameters, or the `config` object of an emitted
/// JSON output, or the comment header of an emitted CSV output.
pub fn load_config(path: &Path) -> Result<(Option<String>, Params), CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    let json = if let Some(line) = text.lines().find(|l| l.starts_with("# gtconverse ")) {
        let start = line.find("config=").ok_or_else(|| {
            CliError::Usage(format!("{}: CSV header lacks config=", path.display()))
        })?;
        line[start + "config=".len()..].to_string()
    } else {
        text
    };
    let value: Value = serde_json::from_str(&json)
        .map_err(|e| CliError::Usage(format!("{}: invalid JSON: {e}", path.display())))?;
    let command = value
        .get("command")
        .and_then(Value::as_str)
        .map(str::to_string);
    let inner = value.get("config").cloned().unwrap_or(value);
    let params = serde_json::from_value(inner)
        .map_err(|e| CliError::Usage(format!("{}: invalid config: {e}", path.display())))?;
    Ok((command, params))
}

/// Flag values override file values field by field.
pub fn merge(flags: &Params, file: &Params) -> Params {
    let to_map = |p: &Params| match serde_json::to_value(p).expect("params serialize") {
        Value::Object(m) => m,
        _ => Map::new(),
    };
    let mut merged = to_map(file);
    merged.extend(to_map(flags));
    serde_json::from_value(Value::Object(merged)).expect("merged params deserialize")
}

/// `0,4,8`, `A:B` or `A:B:STEP`.
pub fn parse_grid(s: &str) -> Result<Vec<usize>, CliError> {
    let bad = || CliError::Usage(format!("bad --n-grid '{s}': use 0,4,8 or A:B or A:B:STEP"));
    let num = |t: &str| t.trim().parse::<usize>().map_err(|_| bad());
    let grid: Vec<usize> = if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        let (a, b, step) = match parts.as_slice() {
            [a, b] => (num(a)?, num(b)?, 1),
            [a, b, c] => (num(a)?, num(b)?, num(c)?),
            _ => return Err(bad()),
        };
        if step == 0 || a > b {
            return Err(bad());
        }
        (a..=b).step_by(step).collect()
    } else {
        s.split(',').map(num).collect::<Result<_, _>>()?
    };
    if grid.is_empty() {
        return Err(bad());
    }
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        assert_eq!(parse_grid("0:4").unwrap(), vec![0, 1, 2, 3, 4]);
        assert_eq!(parse_grid("2:10:4").unwrap(), vec![2, 6, 10]);
        assert_eq!(parse_grid("3,1").unwrap(), vec![3, 1]);
        for bad in ["", "a", "4:1", "1:2:0", "1:2:3:4"] {
            assert!(parse_grid(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn flags_override_file() {
        let file = Params {
            p: Some(10),
            k: Some(2),
            ..Default::default()
        };
        let flags = Params {
            p: Some(20),
            ..Default::default()
        };
        let m = merge(&flags, &file);
        assert_eq!((m.p, m.k), (Some(20), Some(2)));
    }

    #[test]
    fn seeds() {
        assert_eq!("7".parse::<SeedArg>().unwrap(), SeedArg::Value(7));
        assert_eq!(
            "auto".parse::<SeedArg>().unwrap(),
            SeedArg::Word("auto".into())
        );
        assert!("-1".parse::<SeedArg>().is_err());
    }
}
