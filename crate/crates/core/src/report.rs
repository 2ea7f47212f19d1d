//! Verification outcomes, regression fits and config hashing.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Outcome of one check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
    /// The hypotheses of the estimate do not hold; measured values are
    /// reported without an assertion.
    NotApplicable,
}

impl fmt::Display for CheckStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CheckStatus::Pass => "pass",
            CheckStatus::Fail => "fail",
            CheckStatus::NotApplicable => "not-applicable",
        })
    }
}

/// Outcome of one verification with its fitted constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub name: String,
    /// Preset identifier the check belongs to (`mp-31`, `decay-32`, ...).
    pub anchor: String,
    pub constants: BTreeMap<String, f64>,
    /// Worst-case residual; its meaning is check specific and documented
    /// in `notes`.
    pub residual: f64,
    pub tolerance: f64,
    pub status: CheckStatus,
    pub seed: Option<u64>,
    pub config_hash: String,
    pub notes: Vec<String>,
}

impl EstimateReport {
    pub fn new(name: impl Into<String>, anchor: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            anchor: anchor.into(),
            constants: BTreeMap::new(),
            residual: 0.0,
            tolerance: 0.0,
            status: CheckStatus::Pass,
            seed: None,
            config_hash: String::new(),
            notes: Vec::new(),
        }
    }

    pub fn constant(mut self, key: &str, value: f64) -> Self {
        self.constants.insert(key.to_string(), value);
        self
    }

    pub fn set(&mut self, key: &str, value: f64) {
        self.constants.insert(key.to_string(), value);
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    pub fn with_hash(mut self, hash: &str) -> Self {
        self.config_hash = hash.to_string();
        self
    }

    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        self.seed = seed;
        self
    }

    /// Pass when `residual ≤ tolerance` (and the residual is a number).
    pub fn judge(mut self, residual: f64, tolerance: f64) -> Self {
        self.residual = residual;
        self.tolerance = tolerance;
        self.status = if residual <= tolerance {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        };
        self
    }

    pub fn not_applicable(mut self, reason: impl Into<String>) -> Self {
        self.status = CheckStatus::NotApplicable;
        self.notes.push(reason.into());
        self
    }

    pub fn passed(&self) -> bool {
        self.status != CheckStatus::Fail
    }

    pub const CSV_HEADER: &'static str =
        "name,anchor,status,residual,tolerance,constants,seed,config_hash";

    pub fn csv_row(&self) -> String {
        let constants: Vec<String> = self
            .constants
            .iter()
            .map(|(k, v)| format!("{k}={v:.10e}"))
            .collect();
        format!(
            "{},{},{},{:.10e},{:.10e},{},{},{}",
            self.name,
            self.anchor,
            self.status,
            self.residual,
            self.tolerance,
            constants.join(";"),
            self.seed.map(|s| s.to_string()).unwrap_or_default(),
            self.config_hash
        )
    }

    pub fn summary_line(&self) -> String {
        let constants: Vec<String> = self
            .constants
            .iter()
            .map(|(k, v)| format!("{k}={v:.4e}"))
            .collect();
        format!(
            "[{}] {} ({}): residual {:.3e} vs tolerance {:.3e}; {}",
            self.status,
            self.name,
            self.anchor,
            self.residual,
            self.tolerance,
            constants.join(", ")
        )
    }
}

/// Least-squares line `y = constant + exponent · x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionFit {
    pub exponent: f64,
    pub constant: f64,
    pub r_squared: f64,
    pub x_min: f64,
    pub x_max: f64,
    pub points: usize,
}

/// Ordinary least squares. Needs at least two distinct abscissae.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Option<RegressionFit> {
    let n = xs.len().min(ys.len());
    if n < 2 {
        return None;
    }
    let mx = xs[..n].iter().sum::<f64>() / n as f64;
    let my = ys[..n].iter().sum::<f64>() / n as f64;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for i in 0..n {
        let dx = xs[i] - mx;
        let dy = ys[i] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        sxy * sxy / (sxx * syy)
    };
    Some(RegressionFit {
        exponent: slope,
        constant: my - slope * mx,
        r_squared,
        x_min: xs[..n].iter().cloned().fold(f64::INFINITY, f64::min),
        x_max: xs[..n].iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        points: n,
    })
}

/// SHA-256 of the canonical (key-sorted) JSON form of a value.
pub fn config_hash<T: Serialize>(value: &T) -> String {
    let canonical = serde_json::to_value(value)
        .and_then(|v| serde_json::to_string(&v))
        .unwrap_or_default();
    let digest = Sha256::digest(canonical.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_recovers_line() {
        let xs: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 - 0.5 * x).collect();
        let f = linear_fit(&xs, &ys).unwrap();
        assert!((f.exponent + 0.5).abs() < 1e-14 && (f.constant - 3.0).abs() < 1e-14);
        assert!((f.r_squared - 1.0).abs() < 1e-14);
        assert!(linear_fit(&[1.0, 1.0], &[0.0, 1.0]).is_none());
    }

    #[test]
    fn hash_ignores_field_order() {
        #[derive(Serialize)]
        struct A {
            x: u32,
            y: u32,
        }
        #[derive(Serialize)]
        struct B {
            y: u32,
            x: u32,
        }
        assert_eq!(
            config_hash(&A { x: 1, y: 2 }),
            config_hash(&B { y: 2, x: 1 })
        );
        assert_ne!(
            config_hash(&A { x: 1, y: 2 }),
            config_hash(&A { x: 2, y: 1 })
        );
    }

    #[test]
    fn judge_sets_status() {
        let r = EstimateReport::new("x", "mp-31").judge(1.0, 0.5);
        assert_eq!(r.status, CheckStatus::Fail);
        assert!(r.csv_row().starts_with("x,mp-31,fail,"));
    }
}
