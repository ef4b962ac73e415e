//! Report files.
//!
//! JSON reports store matrices as arrays of rows (row = robot, column =
//! task). `p_gamma` is indexed by the column-major vectorization
//! `(i, j) -> j * m + i`. Every non-integer number is written with 17
//! significant digits in exponent form, so reports are byte-stable and
//! round-trip exactly.
//!
//! CSV run files have the header `run,<assignment 1>,<assignment 2>,...`
//! followed by one line per Monte Carlo run in run order.

use std::io::Write;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use serde_json::{Number, Value};

use crate::evaluation::McReport;
use crate::unscented::UtParams;

pub const VECTORIZATION: &str = "column-major: (i, j) -> j * m + i, zero-based";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub scenario_name: String,
    pub scenario_sha256: String,
    pub vectorization: String,
}

impl Provenance {
    pub fn new(scenario_name: &str, scenario_sha256: &str) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            scenario_name: scenario_name.to_string(),
            scenario_sha256: scenario_sha256.to_string(),
            vectorization: VECTORIZATION.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtReport {
    pub alpha: f64,
    pub beta: f64,
    pub kappa: f64,
    pub dim: usize,
    pub lambda: f64,
    pub gamma: f64,
    pub weights_mean: Vec<f64>,
    pub weights_cov: Vec<f64>,
}

impl From<&UtParams> for UtReport {
    fn from(p: &UtParams) -> Self {
        Self {
            alpha: p.alpha,
            beta: p.beta,
            kappa: p.kappa,
            dim: p.dim(),
            lambda: p.lambda(),
            gamma: p.gamma(),
            weights_mean: p.weights_mean().to_vec(),
            weights_cov: p.weights_cov().to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StochasticSection {
    pub gamma_s: Vec<Vec<f64>>,
    pub sigma_s: Vec<Vec<f64>>,
    pub p_gamma: Vec<Vec<f64>>,
    pub q: Vec<Vec<f64>>,
    pub floor: f64,
    pub sentinel: f64,
    pub gamma_f: Vec<Vec<u8>>,
    /// Sum of `q` over the cells chosen by `gamma_f`.
    pub gamma_f_q_total: f64,
    pub low_confidence: bool,
    /// Task index chosen by each robot at every sigma point.
    pub per_point: Vec<Vec<usize>>,
    pub mean_cost: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocateReport {
    pub provenance: Provenance,
    pub mode: String,
    pub gamma_0: Vec<Vec<u8>>,
    pub gamma_0_cost: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ut: Option<UtReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stochastic: Option<StochasticSection>,
}

/// Measured reduction against the target saving.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reproduction {
    pub target_reduction: f64,
    pub measured_reduction: f64,
    /// `measured - target`.
    pub deviation: f64,
    pub tolerance: f64,
    pub within_tolerance: bool,
}

impl Reproduction {
    pub const TARGET: f64 = 0.30;
    pub const TOLERANCE: f64 = 0.15;

    pub fn new(measured: f64) -> Self {
        let deviation = measured - Self::TARGET;
        Self {
            target_reduction: Self::TARGET,
            measured_reduction: measured,
            deviation,
            tolerance: Self::TOLERANCE,
            within_tolerance: deviation.abs() <= Self::TOLERANCE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub provenance: Provenance,
    pub ut: UtReport,
    pub gamma_0: Vec<Vec<u8>>,
    pub gamma_s: Vec<Vec<f64>>,
    pub sigma_s: Vec<Vec<f64>>,
    pub q: Vec<Vec<f64>>,
    pub gamma_f: Vec<Vec<u8>>,
    pub low_confidence: bool,
    pub monte_carlo: McReport,
    pub reproduction: Reproduction,
}

pub fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

pub fn from_rows(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let n = rows.first().map_or(0, Vec::len);
    DMatrix::from_fn(rows.len(), n, |i, j| rows[i][j])
}

/// `x` with 17 significant digits, e.g. `1.4142135623730951e0`.
pub fn format_sig17(x: f64) -> String {
    format!("{x:.16e}")
}

fn fix_precision(v: Value) -> Value {
    match v {
        Value::Number(n) if !(n.is_u64() || n.is_i64()) => {
            let x = n.as_f64().expect("finite float");
            Value::Number(Number::from_str(&format_sig17(x)).expect("valid JSON number"))
        }
        Value::Array(a) => Value::Array(a.into_iter().map(fix_precision).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, fix_precision(v))).collect()),
        other => other,
    }
}

/// Pretty JSON with 17-digit floats and a trailing newline.
pub fn to_json<T: Serialize>(report: &T) -> serde_json::Result<String> {
    let value = fix_precision(serde_json::to_value(report)?);
    let mut s = serde_json::to_string_pretty(&value)?;
    s.push('\n');
    Ok(s)
}

pub fn write_runs_csv<W: Write>(mut out: W, names: &[String], costs: &[Vec<f64>]) -> std::io::Result<()> {
    write!(out, "run")?;
    for n in names {
        write!(out, ",{n}")?;
    }
    writeln!(out)?;
    for (run, row) in costs.iter().enumerate() {
        write!(out, "{run}")?;
        for c in row {
            write!(out, ",{}", format_sig17(*c))?;
        }
        writeln!(out)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig17_format() {
        assert_eq!(format_sig17(2f64.sqrt()), "1.4142135623730951e0");
        assert_eq!(format_sig17(0.0), "0.0000000000000000e0");
        assert_eq!(format_sig17(-0.125), "-1.2500000000000000e-1");
    }

    #[test]
    fn floats_rewritten_integers_kept() {
        #[derive(Serialize)]
        struct S {
            runs: usize,
            seed: u64,
            x: f64,
            m: Vec<Vec<f64>>,
        }
        let s = S { runs: 3, seed: u64::MAX, x: 0.1, m: vec![vec![1.0, 2.5]] };
        let text = to_json(&s).unwrap();
        assert!(text.contains("\"runs\": 3"));
        assert!(text.contains("\"seed\": 18446744073709551615"));
        assert!(text.contains("\"x\": 1.0000000000000001e-1"));
        assert!(text.contains("2.5000000000000000e+0"), "{text}");
        let back: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(back["x"].as_f64(), Some(0.1));
    }

    #[test]
    fn csv_layout() {
        let mut buf = Vec::new();
        write_runs_csv(&mut buf, &["a".into(), "b".into()], &[vec![1.0, 2.0], vec![0.5, 0.25]]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "run,a,b");
        assert_eq!(lines[2], "1,5.0000000000000000e-1,2.5000000000000000e-1");
        assert_eq!(lines.len(), 3);
    }

    #[test]
    fn reproduction_tolerance() {
        assert!(Reproduction::new(0.2).within_tolerance);
        let r = Reproduction::new(-0.01);
        assert!(!r.within_tolerance);
        assert!((r.deviation + 0.31).abs() < 1e-15);
    }
}
