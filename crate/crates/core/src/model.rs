//! Weight data, admissible indices and check reports.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::special::POLE_TOLERANCE;

/// Absolute tolerance on `m1 + m2 = l1 + l2`.
pub const BALANCE_TOLERANCE: f64 = 1e-12;
/// Lower bound on `|sin(pi (j+1) / kappa)|` for a generic kappa.
pub const GENERICITY_THRESHOLD: f64 = 1e-8;

/// The parameters `(m1, m2, l1, l2)` and `kappa` shared by every integral
/// and operator. `m2`, `l2` are module dimensions, `m1`, `l1` complex weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightData {
    pub m1: Complex64,
    pub m2: usize,
    pub l1: Complex64,
    pub l2: usize,
    pub kappa: f64,
}

impl WeightData {
    /// Validates and builds a weight tuple.
    pub fn new(m1: Complex64, m2: i64, l1: Complex64, l2: i64, kappa: f64) -> Result<Self, ModelError> {
        validate_weight_data(m1, m2, l1, l2, kappa)
    }

    /// The dual tuple `(l1, l2, m1, m2)`.
    pub fn swapped(&self) -> Self {
        WeightData { m1: self.l1, m2: self.l2, l1: self.m1, l2: self.m2, kappa: self.kappa }
    }

    /// `min(m2, l2)`; the integral matrix has this size plus one.
    pub fn dim(&self) -> usize {
        admissible_range(self.m2, self.l2)
    }

    pub fn m2c(&self) -> Complex64 {
        Complex64::new(self.m2 as f64, 0.0)
    }

    pub fn l2c(&self) -> Complex64 {
        Complex64::new(self.l2 as f64, 0.0)
    }

    pub fn admissible(&self, index: i64) -> Result<AdmissibleIndex, ModelError> {
        AdmissibleIndex::new(index, self.dim())
    }
}

pub fn validate_weight_data(
    m1: Complex64,
    m2: i64,
    l1: Complex64,
    l2: i64,
    kappa: f64,
) -> Result<WeightData, ModelError> {
    if m2 < 0 || l2 < 0 {
        return Err(ModelError::NegativeDimension { m2, l2 });
    }
    let gap = (m1 + m2 as f64 - l1 - l2 as f64).norm();
    if gap.is_nan() || gap > BALANCE_TOLERANCE {
        return Err(ModelError::BalanceViolation { gap });
    }
    if !(kappa.is_finite() && kappa > 0.0) {
        return Err(ModelError::NonGenericKappa { kappa, reason: "kappa must be positive".into() });
    }
    let top = m2.max(l2) as usize;
    for j in 0..top {
        let s = (PI * (j as f64 + 1.0) / kappa).sin();
        if s.abs() <= GENERICITY_THRESHOLD {
            return Err(ModelError::NonGenericKappa {
                kappa,
                reason: format!("sin(pi*{}/kappa) = {s:e}", j + 1),
            });
        }
        for (name, w) in [("m1", m1), ("l1", l1)] {
            let arg = 1.0 + (w - j as f64) / kappa;
            if near_pole(arg) {
                return Err(ModelError::NonGenericKappa {
                    kappa,
                    reason: format!("Gamma(1 + ({name} - {j})/kappa) sits on a pole"),
                });
            }
        }
    }
    Ok(WeightData { m1, m2: m2 as usize, l1, l2: l2 as usize, kappa })
}

fn near_pole(z: Complex64) -> bool {
    if z.re > 0.5 {
        return false;
    }
    let k = z.re.round().min(0.0);
    Complex64::new(z.re - k, z.im).norm() < POLE_TOLERANCE
}

/// `min(m2, l2)`.
pub fn admissible_range(m2: usize, l2: usize) -> usize {
    m2.min(l2)
}

/// An index `a` with `0 <= a <= min(m2, l2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdmissibleIndex(usize);

impl AdmissibleIndex {
    pub fn new(index: i64, max: usize) -> Result<Self, ModelError> {
        if index < 0 || index as usize > max {
            return Err(ModelError::NotAdmissible { index, max });
        }
        Ok(AdmissibleIndex(index as usize))
    }

    pub fn get(self) -> usize {
        self.0
    }
}

/// One labelled value in a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportValue {
    pub label: String,
    pub re: f64,
    pub im: f64,
    pub err: f64,
}

impl ReportValue {
    pub fn new(label: impl Into<String>, value: Complex64, err: f64) -> Self {
        ReportValue { label: label.into(), re: value.re, im: value.im, err }
    }

    pub fn real(label: impl Into<String>, value: f64) -> Self {
        ReportValue { label: label.into(), re: value, im: 0.0, err: 0.0 }
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

/// Outcome of one verification: `pass` holds exactly when `max_rel_err <= tolerance`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check: String,
    pub params: serde_json::Value,
    pub values: Vec<ReportValue>,
    pub max_rel_err: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// Extra conditions beyond the error bound; all must hold for `pass`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub conditions: Vec<(String, bool)>,
}

impl CheckReport {
    pub fn new(check: impl Into<String>, params: serde_json::Value, tolerance: f64) -> Self {
        CheckReport {
            check: check.into(),
            params,
            values: Vec::new(),
            max_rel_err: 0.0,
            tolerance,
            pass: true,
            conditions: Vec::new(),
        }
    }

    pub fn push(&mut self, value: ReportValue) {
        self.values.push(value);
    }

    /// Folds one relative error into `max_rel_err`. NaN counts as failure.
    pub fn record_error(&mut self, rel_err: f64) {
        if rel_err.is_nan() {
            self.max_rel_err = f64::INFINITY;
        } else if rel_err > self.max_rel_err {
            self.max_rel_err = rel_err;
        }
        self.refresh();
    }

    pub fn require(&mut self, name: impl Into<String>, holds: bool) {
        self.conditions.push((name.into(), holds));
        self.refresh();
    }

    fn refresh(&mut self) {
        self.pass = self.max_rel_err <= self.tolerance && self.conditions.iter().all(|(_, ok)| *ok);
    }

    /// Merges several reports into one summary; passes iff all parts pass.
    pub fn combine(check: impl Into<String>, params: serde_json::Value, parts: &[CheckReport]) -> Self {
        let mut out = CheckReport::new(check, params, 1.0);
        out.max_rel_err = 0.0;
        for p in parts {
            let scaled = if p.tolerance > 0.0 { p.max_rel_err / p.tolerance } else { p.max_rel_err };
            out.record_error(scaled);
            out.require(p.check.clone(), p.pass);
        }
        out
    }
}
