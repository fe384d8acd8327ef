//! The integrals `I_{a,b}`, `K_{a,b}`, the matrix `Î` and the duality between
//! the `l2`-dimensional and the `m2`-dimensional sides.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::contour::{build_multi_loop, GeometryConfig};
use crate::error::{Error, MathError};
use crate::integrand::{PowerProduct, WeightFeatures};
use crate::model::{CheckReport, ReportValue, WeightData};
use crate::quadrature::{integrate_multiloop, integrate_with_plan, Chain, Integrand, Plan, QuadratureConfig, QuadratureResult};
use crate::selberg::{selberg_closed, SelbergParams};
use crate::special::checked_gamma;

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn checked_sin(x: f64) -> Result<f64, MathError> {
    let s = (PI * x).sin();
    if s.abs() <= crate::model::GENERICITY_THRESHOLD {
        return Err(MathError::SinZero { arg: x });
    }
    Ok(s)
}

/// The normalizing constant `C_b(m1, m2, l1, l2)`.
pub fn constant_cb(b: usize, wd: &WeightData) -> Result<Complex64, MathError> {
    let k = wd.kappa;
    let l2 = wd.l2;
    let i = Complex64::i();
    let mut acc = ((wd.l1 + 1.0) * (l2 as f64) / k * k.ln()).exp() * (-i * PI * (b * l2) as f64 / k).exp();
    let g = checked_gamma(Complex64::new(-1.0 / k, 0.0))?;
    acc /= (2.0 * i * g).powu(l2 as u32);
    for j in 0..b {
        acc /= checked_sin((j + 1) as f64 / k)?;
    }
    for j in 0..l2.saturating_sub(b) {
        acc /= checked_sin((j + 1) as f64 / k)?;
    }
    for j in 0..l2 {
        acc *= checked_gamma(1.0 + (wd.m1 - j as f64) / k)? / checked_gamma(Complex64::new(1.0 + (j + 1) as f64 / k, 0.0))?;
    }
    Ok(acc)
}

/// Quadrature and contour settings for the integrals of this module.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct IntegralSettings {
    pub quadrature: QuadratureConfig,
    pub geometry: GeometryConfig,
}

impl IntegralSettings {
    pub fn new(quadrature: QuadratureConfig) -> Self {
        IntegralSettings { quadrature, geometry: GeometryConfig::default() }
    }
}

fn column_setup(b: usize, z: Complex64, wd: &WeightData, geometry: &GeometryConfig) -> Result<(Chain, PowerProduct, WeightFeatures), Error> {
    if !(z.im > 0.0) {
        return Err(Error::Config(format!("the integrals are defined for Im z > 0, got z = {z}")));
    }
    if b > wd.dim() {
        return Err(crate::error::ModelError::NotAdmissible { index: b as i64, max: wd.dim() }.into());
    }
    let contour = build_multi_loop(Some(z), wd.l2, b, &geometry.avoiding(z))?.assign_base_args()?;
    let chain = Chain::from_contour(&contour)?;
    let power = PowerProduct::master(z, wd.m1, wd.m2c(), wd.kappa);
    let features = WeightFeatures { first: Complex64::new(0.0, 0.0), second: z };
    Ok((chain, power, features))
}

/// `K_{a,b}` for all `a = 0..=min(m2, l2)` at once: one `l2`-fold integral
/// whose outputs are the weights `w_{l2-a,a}`.
pub fn integral_k_column(b: usize, z: Complex64, wd: &WeightData, settings: &IntegralSettings) -> Result<QuadratureResult, Error> {
    let (chain, power, features) = column_setup(b, z, wd, &settings.geometry)?;
    let mut r = integrate_multiloop(&Integrand { power, features: &features }, &chain, &settings.quadrature)?;
    r.values.truncate(wd.dim() + 1);
    r.abs_errors.truncate(wd.dim() + 1);
    Ok(r)
}

/// The column with a fixed node count and truncation.
pub fn integral_k_column_with_plan(b: usize, z: Complex64, wd: &WeightData, settings: &IntegralSettings, plan: &Plan) -> Result<Vec<Complex64>, Error> {
    let (chain, power, features) = column_setup(b, z, wd, &settings.geometry)?;
    let mut v = integrate_with_plan(&Integrand { power, features: &features }, &chain, plan, &settings.quadrature)?;
    v.truncate(wd.dim() + 1);
    Ok(v)
}

fn pick(mut r: QuadratureResult, a: usize, scale: Complex64) -> QuadratureResult {
    let v = r.values[a] * scale;
    r.error = r.abs_errors[a] * scale.norm() / v.norm();
    r.abs_errors = vec![r.abs_errors[a] * scale.norm()];
    r.values = vec![v];
    r.value = v;
    r
}

/// `K_{a,b}(z; m1, m2, l1, l2)`, the integral without the constant `C_b`.
pub fn integral_k(a: usize, b: usize, z: Complex64, wd: &WeightData, cfg: &QuadratureConfig) -> Result<QuadratureResult, Error> {
    wd.admissible(a as i64)?;
    let r = integral_k_column(b, z, wd, &IntegralSettings::new(*cfg))?;
    Ok(pick(r, a, Complex64::new(1.0, 0.0)))
}

/// `I_{a,b}(z; m1, m2, l1, l2) = C_b K_{a,b}`.
pub fn integral_i(a: usize, b: usize, z: Complex64, wd: &WeightData, cfg: &QuadratureConfig) -> Result<QuadratureResult, Error> {
    wd.admissible(a as i64)?;
    let cb = constant_cb(b, wd)?;
    let r = integral_k_column(b, z, wd, &IntegralSettings::new(*cfg))?;
    Ok(pick(r, a, cb))
}

/// The matrix `(I_{a,b})` over the admissible square.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegralMatrix {
    pub z: Complex64,
    pub wd: WeightData,
    /// `entries[a][b]`.
    pub entries: Vec<Vec<Complex64>>,
    /// Absolute error estimate per entry.
    pub errors: Vec<Vec<f64>>,
    /// Plan used for each column.
    pub plans: Vec<Plan>,
}

impl IntegralMatrix {
    pub fn size(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, a: usize, b: usize) -> Complex64 {
        self.entries[a][b]
    }

    pub fn to_matrix(&self) -> nalgebra::DMatrix<Complex64> {
        let n = self.size();
        nalgebra::DMatrix::from_fn(n, n, |a, b| self.entries[a][b])
    }

    /// Largest relative error estimate over the entries.
    pub fn max_rel_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (row, erow) in self.entries.iter().zip(&self.errors) {
            for (v, e) in row.iter().zip(erow) {
                worst = worst.max(e / v.norm().max(1e-300));
            }
        }
        worst
    }
}

fn assemble(z: Complex64, wd: &WeightData, columns: Vec<(Vec<Complex64>, Vec<f64>, Plan)>) -> Result<IntegralMatrix, Error> {
    let n = wd.dim() + 1;
    let mut entries = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    let mut errors = vec![vec![0.0; n]; n];
    let mut plans = Vec::with_capacity(n);
    for (b, (vals, errs, plan)) in columns.into_iter().enumerate() {
        let cb = constant_cb(b, wd)?;
        for a in 0..n {
            entries[a][b] = cb * vals[a];
            errors[a][b] = cb.norm() * errs[a];
        }
        plans.push(plan);
    }
    Ok(IntegralMatrix { z, wd: *wd, entries, errors, plans })
}

/// `Î(z; m1, m2, l1, l2)`.
pub fn matrix_ihat(z: Complex64, wd: &WeightData, cfg: &QuadratureConfig) -> Result<IntegralMatrix, Error> {
    matrix_ihat_with(z, wd, &IntegralSettings::new(*cfg))
}

pub fn matrix_ihat_with(z: Complex64, wd: &WeightData, settings: &IntegralSettings) -> Result<IntegralMatrix, Error> {
    let columns = (0..=wd.dim())
        .map(|b| {
            let r = integral_k_column(b, z, wd, settings)?;
            Ok((r.values, r.abs_errors, r.plan))
        })
        .collect::<Result<Vec<_>, Error>>()?;
    assemble(z, wd, columns)
}

/// `Î` with every column evaluated on a given plan. Values on nearby `z`
/// then carry a quadrature error that varies smoothly with `z`.
pub fn matrix_ihat_with_plans(z: Complex64, wd: &WeightData, settings: &IntegralSettings, plans: &[Plan]) -> Result<IntegralMatrix, Error> {
    if plans.len() != wd.dim() + 1 {
        return Err(Error::Config(format!("expected {} plans, got {}", wd.dim() + 1, plans.len())));
    }
    let columns = plans
        .iter()
        .enumerate()
        .map(|(b, plan)| {
            let v = integral_k_column_with_plan(b, z, wd, settings, plan)?;
            let n = v.len();
            Ok((v, vec![0.0; n], plan.clone()))
        })
        .collect::<Result<Vec<_>, Error>>()?;
    assemble(z, wd, columns)
}

fn selberg(l: usize, m: Complex64, kappa: f64) -> Result<Complex64, MathError> {
    selberg_closed(&SelbergParams::new(l, m, kappa)?)
}

/// The factor relating `K_{a,b}` on the two sides:
/// `K_{a,b}(z; m1, m2, l1, l2) = ratio · K_{a,b}(z; l1, l2, m1, m2)` with
/// `ratio = e^{πib(l2-m2)/κ} (l2-b)! J_{l2-b}(m1) J_b(m2) / ((m2-b)! J_{m2-b}(l1) J_b(l2))`.
pub fn corollary_ratio(b: usize, wd: &WeightData) -> Result<Complex64, Error> {
    let phase = (Complex64::i() * PI * b as f64 * (wd.l2 as f64 - wd.m2 as f64) / wd.kappa).exp();
    Ok(phase * selberg_part(b, wd)?)
}

/// The ratio with the phase `e^{πib(l2-m2)}` (no `1/κ`); it differs from
/// [`corollary_ratio`] unless `b (l2 - m2) (1 - 1/κ)` is an even integer.
pub fn corollary_ratio_unscaled_phase(b: usize, wd: &WeightData) -> Result<Complex64, Error> {
    let phase = (Complex64::i() * PI * b as f64 * (wd.l2 as f64 - wd.m2 as f64)).exp();
    Ok(phase * selberg_part(b, wd)?)
}

fn selberg_part(b: usize, wd: &WeightData) -> Result<Complex64, Error> {
    wd.admissible(b as i64)?;
    let k = wd.kappa;
    let num = factorial(wd.l2 - b) * selberg(wd.l2 - b, wd.m1, k)? * selberg(b, wd.m2c(), k)?;
    let den = factorial(wd.m2 - b) * selberg(wd.m2 - b, wd.l1, k)? * selberg(b, wd.l2c(), k)?;
    Ok(num / den)
}

/// Relative entrywise difference between `Î(z; m1, m2, l1, l2)` and
/// `Î(z; l1, l2, m1, m2)`.
pub fn duality_gap(z: Complex64, wd: &WeightData, settings: &IntegralSettings, tolerance: f64) -> Result<CheckReport, Error> {
    let params = json!({
        "m1": [wd.m1.re, wd.m1.im], "m2": wd.m2, "l1": [wd.l1.re, wd.l1.im], "l2": wd.l2,
        "kappa": wd.kappa, "z": [z.re, z.im], "target": settings.quadrature.target,
    });
    let mut report = CheckReport::new("duality-check", params, tolerance);
    let direct = matrix_ihat_with(z, wd, settings)?;
    let dual = if wd.swapped() == *wd { direct.clone() } else { matrix_ihat_with(z, &wd.swapped(), settings)? };
    let n = direct.size();
    for a in 0..n {
        for b in 0..n {
            let (x, y) = (direct.get(a, b), dual.get(a, b));
            report.push(ReportValue::new(format!("I[{a},{b}]"), x, direct.errors[a][b]));
            report.push(ReportValue::new(format!("I_dual[{a},{b}]"), y, dual.errors[a][b]));
            report.record_error((x - y).norm() / x.norm().max(1e-300));
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::gamma;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn wd(m1: Complex64, m2: i64, l1: Complex64, l2: i64) -> WeightData {
        WeightData::new(m1, m2, l1, l2, 2.5).unwrap()
    }

    #[test]
    fn cb_small_cases() {
        let w = wd(c(2.3, 0.0), 1, c(3.3, 0.0), 0);
        assert_eq!(constant_cb(0, &w).unwrap(), c(1.0, 0.0));
        let w = wd(c(2.3, 0.0), 1, c(2.3, 0.0), 1);
        let k: f64 = 2.5;
        let want = c(k, 0.0).powc((w.l1 + 1.0) / k) / (2.0 * Complex64::i() * gamma(c(-1.0 / k, 0.0)))
            / (PI / k).sin()
            * gamma(1.0 + w.m1 / k)
            / gamma(c(1.0 + 1.0 / k, 0.0));
        assert!((constant_cb(0, &w).unwrap() - want).norm() < 1e-13 * want.norm());
    }

    #[test]
    fn cb_ratio_is_the_corollary_ratio() {
        // I agrees on both sides, so K(m)/K(l) = C_b(l)/C_b(m)
        for &(m2, l2, l1) in &[(1, 2, c(1.3, 0.0)), (2, 3, c(0.8, 0.5)), (1, 3, c(0.8, 0.5))] {
            let m1 = l1 + (l2 - m2) as f64;
            let w = wd(m1, m2, l1, l2);
            for b in 0..=w.dim() {
                let want = constant_cb(b, &w.swapped()).unwrap() / constant_cb(b, &w).unwrap();
                let got = corollary_ratio(b, &w).unwrap();
                assert!((got - want).norm() < 1e-12 * want.norm(), "b={b}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn unscaled_phase_differs_for_positive_b() {
        let w = wd(c(2.3, 0.0), 1, c(1.3, 0.0), 2);
        assert_eq!(corollary_ratio(0, &w).unwrap(), corollary_ratio_unscaled_phase(0, &w).unwrap());
        let (x, y) = (corollary_ratio(1, &w).unwrap(), corollary_ratio_unscaled_phase(1, &w).unwrap());
        assert!((x - y).norm() > 0.1 * x.norm());
    }

    #[test]
    fn symmetric_ratio_is_one() {
        let w = wd(c(1.7, 0.2), 2, c(1.7, 0.2), 2);
        assert!((corollary_ratio(0, &w).unwrap() - 1.0).norm() < 1e-14);
    }

    #[test]
    fn empty_integral_is_one() {
        let w = wd(c(2.3, 0.0), 1, c(3.3, 0.0), 0);
        let m = matrix_ihat(c(1.0, 2.0), &w, &QuadratureConfig::default()).unwrap();
        assert_eq!(m.size(), 1);
        assert!((m.get(0, 0) - 1.0).norm() < 1e-15);
    }

    #[test]
    fn lower_half_plane_is_rejected() {
        let w = wd(c(2.3, 0.0), 1, c(1.3, 0.0), 2);
        assert!(matches!(integral_i(0, 0, c(1.0, -1.0), &w, &QuadratureConfig::default()), Err(Error::Config(_))));
    }

    #[test]
    fn one_dimensional_duality() {
        // (m2, l2) = (1, 1): both sides are 1-dimensional
        let w = wd(c(0.6, 0.3), 1, c(0.6, 0.3), 1);
        let r = duality_gap(c(1.0, 2.0), &w, &IntegralSettings::default(), 1e-12).unwrap();
        assert!(r.pass);
        let w = wd(c(1.6, 0.0), 1, c(0.6, 0.0), 2);
        let r = duality_gap(c(0.5, 1.5), &w, &IntegralSettings::default(), 1e-6).unwrap();
        assert!(r.pass, "gap {}", r.max_rel_err);
    }
}
