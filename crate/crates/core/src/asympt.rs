//! The saddle-point example `I_C = ∫_C e^{-t} (-t)^{M+a} (z-t)^{-M} dt` and
//! the growing-dimension scan made possible by the duality.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::contour::{build_steepest_loop, SteepestKind, SteepestLoop};
use crate::error::Error;
use crate::hyperint::{corollary_ratio, integral_k_column, IntegralSettings};
use crate::integrand::{PowerProduct, Unit};
use crate::model::{CheckReport, ReportValue, WeightData};
use crate::quadrature::{integrate_multiloop, Chain, Integrand, QuadratureConfig, QuadratureResult};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SaddleParams {
    pub z: Complex64,
    pub m: f64,
    pub a: Complex64,
    pub kind: SteepestKind,
}

impl SaddleParams {
    pub fn new(z: Complex64, m: f64, a: Complex64, kind: SteepestKind) -> Result<Self, Error> {
        if !(z.im > 0.0) {
            return Err(Error::Config(format!("saddle integrals need Im z > 0, got z = {z}")));
        }
        if !(m >= 1.0) {
            return Err(Error::Config(format!("M = {m} must be at least 1")));
        }
        Ok(SaddleParams { z, m, a, kind })
    }

    /// `(-zM)^{1/2}` on the branch with `arg(-z)` in `(-π, 0)`.
    pub fn root(&self) -> Complex64 {
        (-self.z * self.m).sqrt()
    }
}

pub fn saddle_power(p: &SaddleParams) -> PowerProduct {
    PowerProduct {
        linear: Complex64::new(-1.0, 0.0),
        constant: Complex64::new(0.0, 0.0),
        points: vec![(Complex64::new(0.0, 0.0), p.a + p.m), (p.z, Complex64::new(-p.m, 0.0))],
        pair: Complex64::new(0.0, 0.0),
    }
}

/// The loop used for quadrature. The outer loop is a circle through both
/// saddle points `±(-zM)^{1/2}` (or wider, to clear `z`); the inner loop is a
/// keyhole whose ray leaves along `+(-zM)^{1/2}`, so the tail sweeps through
/// the saddle rather than cancelling against the other edge.
pub fn saddle_loop(p: &SaddleParams) -> Result<SteepestLoop, Error> {
    let base = build_steepest_loop(p.kind, p.z, crate::contour::PROVISIONAL_REACH.max(4.0 * p.z.norm() + 4.0))?;
    let looped = match p.kind {
        SteepestKind::Outer => {
            let radius = (p.z.norm() * p.m).sqrt().max(1.5 * p.z.norm() + 1.0);
            base.reshaped(radius, 0.0, PI / 4.0)?
        }
        SteepestKind::Inner => {
            let direction = if p.m > 0.0 { p.root().arg() } else { 0.0 };
            base.reshaped(base.path.radius, direction, 0.0)?
        }
    };
    Ok(looped)
}

/// `I_C` by quadrature, with `arg(-t) = 0` and `arg(z - t)` in `(0, π)` where
/// the loop crosses the negative axis.
pub fn steepest_numeric(p: &SaddleParams, cfg: &QuadratureConfig) -> Result<QuadratureResult, Error> {
    if !(p.z.im > 0.0) {
        return Err(Error::Config(format!("saddle integrals need Im z > 0, got z = {}", p.z)));
    }
    let lp = saddle_loop(p)?;
    let chain = Chain::single(lp.path, &[Complex64::new(0.0, 0.0), p.z]);
    let integrand = Integrand { power: saddle_power(p), features: &Unit };
    Ok(integrate_multiloop(&integrand, &chain, cfg)?)
}

/// Leading terms of `I_{C'}` and `I_{C''}` as `M -> ∞`.
pub fn steepest_asympt(p: &SaddleParams) -> Complex64 {
    let i = Complex64::i();
    let w = -p.z * p.m;
    let root = w.sqrt();
    let power = w.powc((2.0 * p.a + 1.0) / 4.0);
    let sqrt_pi = PI.sqrt();
    match p.kind {
        // counterclockwise C' crosses the saddle -(-zM)^{1/2} in the direction
        // of -i (-zM)^{1/4}
        SteepestKind::Outer => -i * sqrt_pi * power * (2.0 * root - p.z / 2.0).exp(),
        SteepestKind::Inner => {
            // (z - t)^{-M} has one branch on both edges, so only the edge
            // monodromy e^{-2πi(M+a)} of (-t)^{M+a} enters; for integer M
            // this is (e^{2πi(M+a)} - 1)
            let phase = (2.0 * PI * i * p.a).exp() - (-2.0 * PI * i * p.m).exp();
            sqrt_pi * phase * power * (-2.0 * root - p.z / 2.0 - PI * i * p.a).exp()
        }
    }
}

/// `|numeric/asymptotic - 1|` at `M` and `4M`; their ratio must fall in `band`.
pub fn saddle_check(kind: SteepestKind, z: Complex64, a: Complex64, m: f64, band: (f64, f64), cfg: &QuadratureConfig) -> Result<CheckReport, Error> {
    let params = json!({"kind": format!("{kind:?}"), "z": [z.re, z.im], "a": [a.re, a.im], "M": [m, 4.0 * m], "band": [band.0, band.1]});
    let mut report = CheckReport::new("saddle-check", params, 0.0);
    let mut dev = Vec::new();
    for mm in [m, 4.0 * m] {
        let p = SaddleParams::new(z, mm, a, kind)?;
        let num = steepest_numeric(&p, cfg)?;
        let asy = steepest_asympt(&p);
        let q = num.value / asy;
        report.push(ReportValue::new(format!("numeric M={mm}"), num.value, num.error * num.value.norm()));
        report.push(ReportValue::new(format!("asymptotic M={mm}"), asy, 0.0));
        report.push(ReportValue::new(format!("ratio M={mm}"), q, num.error * q.norm()));
        dev.push((q - 1.0).norm());
    }
    let ratio = dev[0] / dev[1];
    report.push(ReportValue::real("deviation ratio", ratio));
    report.record_error((band.0 - ratio).max(ratio - band.1).max(0.0));
    report.require("deviation ratio in band", ratio >= band.0 && ratio <= band.1);
    Ok(report)
}

/// One row of the dimension scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub l2: usize,
    pub l1: Complex64,
    /// `K_{a,b}` as an `l2`-fold integral (small `l2` only).
    pub direct: Option<Complex64>,
    /// `K_{a,b}` from the `m2`-fold dual integral times the corollary ratio.
    pub dual: Complex64,
    /// `dual / direct`.
    pub ratio: Option<Complex64>,
    /// Quadrature error estimate of `dual`, relative.
    pub err: f64,
    /// Leading saddle-point term for `m2 = 1`, `a = b = 0`.
    pub saddle: Option<Complex64>,
}

/// Settings of [`dimension_scan`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    pub a: usize,
    pub b: usize,
    /// Largest `l2` for which the direct integral is computed too.
    pub direct_max: usize,
    pub settings: IntegralSettings,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig { a: 0, b: 0, direct_max: 3, settings: IntegralSettings::default() }
    }
}

/// `K_{a,b}(z; m1, m2, l1, l2)` for growing `l2` with `l1 = m1 + m2 - l2`,
/// through the fixed-dimension dual side.
pub fn dimension_scan(m1: Complex64, m2: usize, kappa: f64, l2s: &[usize], z: Complex64, cfg: &ScanConfig) -> Result<Vec<ScanRow>, Error> {
    l2s.iter()
        .map(|&l2| {
            let l1 = m1 + m2 as f64 - l2 as f64;
            let wd = WeightData::new(m1, m2 as i64, l1, l2 as i64, kappa)?;
            wd.admissible(cfg.a as i64)?;
            wd.admissible(cfg.b as i64)?;
            let dual_side = integral_k_column(cfg.b, z, &wd.swapped(), &cfg.settings)?;
            let ratio = corollary_ratio(cfg.b, &wd)?;
            let dual = ratio * dual_side.values[cfg.a];
            let err = dual_side.abs_errors[cfg.a] / dual_side.values[cfg.a].norm();
            let direct = if l2 <= cfg.direct_max {
                Some(integral_k_column(cfg.b, z, &wd, &cfg.settings)?.values[cfg.a])
            } else {
                None
            };
            let saddle = if m2 == 1 && cfg.a == 0 && cfg.b == 0 && l2 > 0 {
                // the dual integral is κ^{-(m1+1)/κ} I_{C''} with M = l2/κ,
                // a = -(m1+1)/κ - 1 and z/κ in place of z
                let p = SaddleParams { z: z / kappa, m: l2 as f64 / kappa, a: -(m1 + 1.0) / kappa - 1.0, kind: SteepestKind::Inner };
                Some(ratio * Complex64::new(kappa, 0.0).powc(-(m1 + 1.0) / kappa) * steepest_asympt(&p))
            } else {
                None
            };
            Ok(ScanRow { l2, l1, direct, ratio: direct.map(|d| dual / d), dual, err, saddle })
        })
        .collect()
}

/// `a+bi` with full precision.
pub fn format_complex(z: Complex64) -> String {
    format!("{:e}{}{:e}i", z.re, if z.im.is_sign_negative() { "" } else { "+" }, z.im)
}

/// CSV with columns `l2,l1,direct,dual,ratio,err,saddle,dual_over_saddle`.
pub fn write_scan_csv<W: Write>(rows: &[ScanRow], out: W) -> Result<(), Error> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Config(format!("writing CSV: {e}"));
    w.write_record(["l2", "l1", "direct", "dual", "ratio", "err", "saddle", "dual_over_saddle"]).map_err(io)?;
    let opt = |z: Option<Complex64>| z.map(format_complex).unwrap_or_default();
    for r in rows {
        w.write_record([
            r.l2.to_string(),
            format_complex(r.l1),
            opt(r.direct),
            format_complex(r.dual),
            opt(r.ratio),
            format!("{:e}", r.err),
            opt(r.saddle),
            opt(r.saddle.map(|s| r.dual / s)),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| Error::Config(format!("writing CSV: {e}")))?;
    Ok(())
}

/// Cross-check rows must agree to `tolerance`.
pub fn scan_report(rows: &[ScanRow], params: serde_json::Value, tolerance: f64) -> CheckReport {
    let mut report = CheckReport::new("dim-scan", params, tolerance);
    for r in rows {
        report.push(ReportValue::new(format!("dual l2={}", r.l2), r.dual, r.err * r.dual.norm()));
        if let Some(q) = r.ratio {
            report.push(ReportValue::new(format!("dual/direct l2={}", r.l2), q, 0.0));
            report.record_error((q - 1.0).norm());
        }
        report.require(format!("finite l2={}", r.l2), r.dual.re.is_finite() && r.dual.im.is_finite());
    }
    report
}
