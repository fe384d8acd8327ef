//! The matrices `A`, `B`, the equation `(κ d/dz + B/z + A) Î = 0`, its
//! large-`z` asymptotics, and the scalar-argument equation for `Ψ(x)` that
//! produces solutions of the KZ and dynamical equations.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, IntegrandError, OdeError};
use crate::glrep::{casimir_matrix, solution_residual_check, Point, Slot, WeightBasis};
use crate::hyperint::{constant_cb, integral_k_column_with_plan, matrix_ihat_with, matrix_ihat_with_plans, IntegralMatrix, IntegralSettings};
use crate::model::{CheckReport, ReportValue, WeightData};
use crate::quadrature::Plan;
use crate::special::checked_gamma;

type Mat = DMatrix<Complex64>;

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// `A` and `B(m1, m2, l1, l2)` on the admissible square.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientMatrices {
    pub a: Mat,
    pub b: Mat,
}

pub fn coefficient_matrices(wd: &WeightData) -> CoefficientMatrices {
    let n = wd.dim() + 1;
    let (m1, m2, l2) = (wd.m1, wd.m2 as f64, wd.l2 as f64);
    let b = Mat::from_fn(n, n, |i, j| {
        let a = i as f64;
        if i == j {
            2.0 * a * a - a * (2.0 * l2 + m2 - m1) + m2 * l2
        } else if j + 1 == i {
            a * (l2 - m1 - a)
        } else if j == i + 1 {
            c(-(m2 - a) * (l2 - a))
        } else {
            c(0.0)
        }
    });
    let a = Mat::from_fn(n, n, |i, j| c(if i == j { i as f64 } else { 0.0 }));
    CoefficientMatrices { a, b }
}

fn max_abs(m: &Mat) -> f64 {
    m.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

fn wd_json(wd: &WeightData) -> serde_json::Value {
    json!({"m1": [wd.m1.re, wd.m1.im], "m2": wd.m2, "l1": [wd.l1.re, wd.l1.im], "l2": wd.l2, "kappa": wd.kappa})
}

/// Settings with the geometry frozen at `z` and the plans of an adaptive
/// evaluation there; stencils around `z` reuse both.
pub fn pinned(z: Complex64, wd: &WeightData, settings: &IntegralSettings) -> Result<(IntegralSettings, IntegralMatrix), Error> {
    let frozen = IntegralSettings { geometry: settings.geometry.frozen_at(z), ..*settings };
    let m = matrix_ihat_with(z, wd, &frozen)?;
    Ok((frozen, m))
}

fn matrix_of(m: &IntegralMatrix) -> Mat {
    m.to_matrix()
}

/// `max|κ Î' + (B/z + A) Î| / max|Î|` with a five-point difference of step
/// `h` along the real direction, on fixed plans.
pub fn stencil_residual(z: Complex64, wd: &WeightData, h: f64, settings: &IntegralSettings, plans: &[Plan]) -> Result<f64, Error> {
    if !(h > 0.0) || z.im <= 2.0 * h {
        return Err(Error::Config(format!("stencil of step {h} leaves the upper half-plane at z = {z}")));
    }
    let at = |k: f64| -> Result<Mat, Error> { Ok(matrix_of(&matrix_ihat_with_plans(z + k * h, wd, settings, plans)?)) };
    let i0 = at(0.0)?;
    let d = (at(-2.0)? - at(2.0)? + (at(1.0)? - at(-1.0)?) * c(8.0)) / c(12.0 * h);
    let cm = coefficient_matrices(wd);
    let res = d * c(wd.kappa) + (cm.b / z + cm.a) * &i0;
    Ok(max_abs(&res) / max_abs(&i0))
}

/// The equation for `Î` at `z` with one stencil step.
pub fn ode_residual(z: Complex64, wd: &WeightData, h: f64, settings: &IntegralSettings, tolerance: f64) -> Result<CheckReport, Error> {
    let (frozen, m) = pinned(z, wd, settings)?;
    let r = stencil_residual(z, wd, h, &frozen, &m.plans)?;
    let mut report = CheckReport::new("ode-residual", json!({"wd": wd_json(wd), "z": [z.re, z.im], "h": h}), tolerance);
    report.push(ReportValue::real(format!("residual h={h}"), r));
    report.record_error(r);
    Ok(report)
}

/// Rounding floor of the residual at step `h`: values carry relative
/// rounding `eps`, which the difference quotient divides by `h`.
pub fn stencil_floor(kappa: f64, eps: f64, h: f64) -> f64 {
    1.5 * kappa * eps / h
}

/// Relative rounding assumed for pinned quadrature values.
pub const QUADRATURE_ROUNDING: f64 = 1e-14;

/// Residuals over decreasing steps. Each halving must either cut the
/// residual by a factor in `[8, 32]` (fourth order) or land within ten
/// times the rounding floor; the smallest-step residual must meet `tolerance`.
pub fn ode_convergence(z: Complex64, wd: &WeightData, steps: &[f64], settings: &IntegralSettings, tolerance: f64) -> Result<CheckReport, Error> {
    let (frozen, m) = pinned(z, wd, settings)?;
    let mut report = CheckReport::new("ode-check", json!({"wd": wd_json(wd), "z": [z.re, z.im], "steps": steps}), tolerance);
    let mut prev: Option<(f64, f64)> = None;
    let mut last = f64::INFINITY;
    for &h in steps {
        let r = stencil_residual(z, wd, h, &frozen, &m.plans)?;
        let floor = stencil_floor(wd.kappa, QUADRATURE_ROUNDING, h);
        report.push(ReportValue::real(format!("residual h={h}"), r));
        report.push(ReportValue::real(format!("floor h={h}"), floor));
        if let Some((hp, rp)) = prev {
            let expected = (hp / h).powi(4);
            let ratio = rp / r;
            report.push(ReportValue::real(format!("ratio h={hp}/h={h}"), ratio));
            let fourth = ratio >= expected / 2.0 && ratio <= expected * 2.0;
            report.require(format!("h^4 or floor at h={h}"), fourth || r <= 10.0 * floor);
        }
        prev = Some((h, r));
        last = r;
    }
    report.record_error(last);
    Ok(report)
}

/// Leading term of `I_{a,b}` as `z -> ∞` in `ε < arg z < π - ε`.
pub fn asympt_leading(a: usize, b: usize, z: Complex64, wd: &WeightData) -> Result<Complex64, Error> {
    if a != b {
        return Ok(c(0.0));
    }
    wd.admissible(b as i64)?;
    let k = wd.kappa;
    let (m1, m2, l2) = (wd.m1, wd.m2 as f64, wd.l2 as f64);
    let bf = b as f64;
    let exponent = (2.0 * bf * bf - bf * (2.0 * l2 + m2 - m1) + m2 * l2) / k;
    let mut acc = (-bf * z / k).exp() * (c(k) / z).powc(exponent) * (Complex64::i() * PI * bf * (m1 - l2) / k).exp();
    for j in 0..b {
        let jf = j as f64;
        acc *= checked_gamma(c(1.0 + (jf + 1.0) / k))? * checked_gamma(1.0 + (m1 - l2 + jf + 1.0) / k)?
            / (checked_gamma(c(1.0 + (m2 - jf) / k))? * checked_gamma(c(1.0 + (l2 - jf) / k))?);
    }
    Ok(acc)
}

/// Compares `I_{a,b} / L_{b,b}` with `δ_{a,b}` at two points on a ray.
/// The deviations must shrink by a factor within `band` from `near` to `far`.
pub fn asymptotic_check(wd: &WeightData, near: Complex64, far: Complex64, band: (f64, f64), settings: &IntegralSettings) -> Result<CheckReport, Error> {
    let mut report = CheckReport::new(
        "asympt-check",
        json!({"wd": wd_json(wd), "near": [near.re, near.im], "far": [far.re, far.im], "band": [band.0, band.1]}),
        0.0,
    );
    let (mn, mf) = (matrix_ihat_with(near, wd, settings)?, matrix_ihat_with(far, wd, settings)?);
    for b in 0..=wd.dim() {
        let (ln, lf) = (asympt_leading(b, b, near, wd)?, asympt_leading(b, b, far, wd)?);
        for a in 0..=wd.dim() {
            let delta = if a == b { 1.0 } else { 0.0 };
            let (qn, qf) = (mn.get(a, b) / ln, mf.get(a, b) / lf);
            let (dn, df) = ((qn - delta).norm(), (qf - delta).norm());
            let ratio = dn / df;
            report.push(ReportValue::new(format!("I[{a},{b}]/L near"), qn, mn.errors[a][b] / ln.norm()));
            report.push(ReportValue::new(format!("I[{a},{b}]/L far"), qf, mf.errors[a][b] / lf.norm()));
            report.push(ReportValue::real(format!("deviation ratio [{a},{b}]"), ratio));
            report.record_error((band.0 - ratio).max(ratio - band.1).max(0.0));
            report.require(format!("ratio [{a},{b}] in band"), ratio >= band.0 && ratio <= band.1);
            if a != b {
                report.require(format!("off-diagonal [{a},{b}] decays"), df < dn);
            }
        }
    }
    Ok(report)
}

/// `Ω - m1 m2` and `E22^{(2)}` on the weight subspace.
pub fn psi_matrices(wd: &WeightData) -> (Mat, Mat) {
    let n = wd.dim() + 1;
    let omega = casimir_matrix(wd) - Mat::identity(n, n) * (wd.m1 * wd.m2 as f64);
    let e22 = WeightBasis::new(wd).diagonal(2, Slot::Second);
    (omega, e22)
}

/// Tolerances of the Dormand-Prince integrator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OdeTolerance {
    pub rtol: f64,
    /// Absolute tolerance relative to the initial vector's size.
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for OdeTolerance {
    fn default() -> Self {
        OdeTolerance { rtol: 1e-12, atol: 1e-14, max_steps: 100_000 }
    }
}

/// Solves `κ Ψ' = (M/x) Ψ - N Ψ` along the polyline `path`, starting from `psi0`
/// at `path[0]`.
pub fn solve_linear(path: &[Complex64], psi0: &[Complex64], m: &Mat, nmat: &Mat, kappa: f64, tol: &OdeTolerance) -> Result<Vec<Complex64>, OdeError> {
    let mut y = DVector::from_column_slice(psi0);
    let scale = y.iter().map(|x| x.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    for seg in path.windows(2) {
        let (x0, x1) = (seg[0], seg[1]);
        let d = x1 - x0;
        if d.norm() == 0.0 {
            continue;
        }
        // closest approach of the segment to 0
        let s = (-(x0 * d.conj()).re / d.norm_sqr()).clamp(0.0, 1.0);
        let gap = (x0 + d * s).norm();
        if gap < 1e-10 * x0.norm().max(x1.norm()) || gap == 0.0 {
            return Err(OdeError::SingularPath(gap));
        }
        let rhs = |s: f64, y: &DVector<Complex64>| -> DVector<Complex64> {
            let x = x0 + d * s;
            (m * y / x - nmat * y) * (d / kappa)
        };
        y = dopri5(&rhs, y, tol, scale)?;
    }
    Ok(y.iter().cloned().collect())
}

/// `κ Ψ' - ((Ω - m1 m2)/x) Ψ + E22^{(2)} Ψ = 0` along `path`.
pub fn solve_psi(path: &[Complex64], psi0: &[Complex64], wd: &WeightData, tol: &OdeTolerance) -> Result<Vec<Complex64>, Error> {
    if psi0.len() != wd.dim() + 1 {
        return Err(Error::Config(format!("initial vector has {} entries, expected {}", psi0.len(), wd.dim() + 1)));
    }
    let (m, n) = psi_matrices(wd);
    Ok(solve_linear(path, psi0, &m, &n, wd.kappa, tol)?)
}

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Fifth-order weights minus embedded fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Dormand-Prince 5(4) over `s in [0, 1]`.
fn dopri5(f: &dyn Fn(f64, &DVector<Complex64>) -> DVector<Complex64>, mut y: DVector<Complex64>, tol: &OdeTolerance, scale: f64) -> Result<DVector<Complex64>, OdeError> {
    let mut s = 0.0;
    let mut h: f64 = 0.01;
    let mut k1 = f(s, &y);
    for _ in 0..tol.max_steps {
        if s >= 1.0 {
            return Ok(y);
        }
        h = h.min(1.0 - s);
        let mut k = vec![k1.clone()];
        for i in 1..7 {
            let mut yi = y.clone();
            for (j, kj) in k.iter().enumerate() {
                if A[i][j] != 0.0 {
                    yi += kj * c(h * A[i][j]);
                }
            }
            k.push(f(s + C[i] * h, &yi));
        }
        // the seventh stage is evaluated at the fifth-order solution
        let mut ynew = y.clone();
        for (j, kj) in k.iter().enumerate().take(6) {
            if A[6][j] != 0.0 {
                ynew += kj * c(h * A[6][j]);
            }
        }
        let mut err: f64 = 0.0;
        for i in 0..y.len() {
            let e: Complex64 = (0..7).map(|j| k[j][i] * E[j]).sum::<Complex64>() * h;
            let sc = tol.atol * scale + tol.rtol * y[i].norm().max(ynew[i].norm());
            err = err.max(e.norm() / sc);
        }
        if err <= 1.0 {
            s += h;
            y = ynew;
            k1 = k.pop().unwrap();
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= factor;
        if h < 1e-14 {
            return Err(OdeError::StepUnderflow(s));
        }
    }
    Err(OdeError::StepUnderflow(s))
}

/// `x = -(λ1 - λ2)(z1 - z2)`.
pub fn scalar_argument(p: &Point) -> Complex64 {
    -(p.lambda1 - p.lambda2) * (p.z1 - p.z2)
}

/// `e^{(z1λ1(m1-l2) + z1λ2 l2 + z2λ1 m2)/κ} (z1-z2)^{m1 m2/κ} (λ1-λ2)^{l1 l2/κ}`
/// with principal powers.
pub fn solution_prefactor(p: &Point, wd: &WeightData) -> Result<Complex64, Error> {
    p.check()?;
    let k = wd.kappa;
    let (m2, l2) = (wd.m2 as f64, wd.l2 as f64);
    let e = (p.z1 * p.lambda1 * (wd.m1 - l2) + p.z1 * p.lambda2 * l2 + p.z2 * p.lambda1 * m2) / k;
    Ok(e.exp() * (p.z1 - p.z2).powc(wd.m1 * m2 / k) * (p.lambda1 - p.lambda2).powc(wd.l1 * l2 / k))
}

/// `U(z1, z2, λ1, λ2) = prefactor · Ψ(-(λ1-λ2)(z1-z2))`.
pub fn build_u_from_psi(p: &Point, psi: &dyn Fn(Complex64) -> Result<Vec<Complex64>, Error>, wd: &WeightData) -> Result<Vec<Complex64>, Error> {
    let pre = solution_prefactor(p, wd)?;
    Ok(psi(scalar_argument(p))?.into_iter().map(|v| pre * v).collect())
}

/// A point with `-(λ1-λ2)(z1-z2) = x`.
pub fn point_for_argument(x: Complex64) -> Point {
    let z1 = Complex64::new(0.5, 0.2);
    let z2 = Complex64::new(-0.3, 0.1);
    let lambda2 = Complex64::new(0.2, -0.1);
    Point::new(z1, z2, lambda2 - x / (z1 - z2), lambda2)
}

/// Steps and tolerances of the solution checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolutionCheckConfig {
    pub h: f64,
    pub tolerance: f64,
    pub ode: OdeTolerance,
}

impl Default for SolutionCheckConfig {
    fn default() -> Self {
        SolutionCheckConfig { h: 1e-3, tolerance: 1e-5, ode: OdeTolerance::default() }
    }
}

/// Checks that `U_b` built from column `b` of `Î` solves the KZ and
/// dynamical equations, and does the same for `U` built from `Ψ` transported
/// by the ODE from that column at the base point. Both are compared with each other too.
pub fn solution_check(wd: &WeightData, b: usize, p: &Point, settings: &IntegralSettings, cfg: &SolutionCheckConfig) -> Result<CheckReport, Error> {
    let x0 = scalar_argument(p);
    if !(x0.im > 0.0) {
        return Err(Error::Config(format!("-(λ1-λ2)(z1-z2) = {x0} must lie in the upper half-plane")));
    }
    wd.admissible(b as i64)?;
    let (frozen, m) = pinned(x0, wd, settings)?;
    let plan = m.plans[b].clone();
    let cb = constant_cb(b, wd)?;
    let column = |x: Complex64| -> Result<Vec<Complex64>, Error> {
        if !(x.im > 0.0) {
            return Err(IntegrandError::DegenerateParameters(format!("x = {x} left the upper half-plane")).into());
        }
        Ok(integral_k_column_with_plan(b, x, wd, &frozen, &plan)?.into_iter().map(|v| v * cb).collect())
    };
    let u_quad = |q: &Point| build_u_from_psi(q, &column, wd);
    let psi0: Vec<Complex64> = column(x0)?;
    let transported = |x: Complex64| solve_psi(&[x0, x], &psi0, wd, &cfg.ode);
    let u_ode = |q: &Point| build_u_from_psi(q, &transported, wd);

    let params = json!({"wd": wd_json(wd), "b": b, "x": [x0.re, x0.im], "h": cfg.h});
    let quad = solution_residual_check(&u_quad, p, cfg.h, wd, cfg.tolerance)?;
    let ode = solution_residual_check(&u_ode, p, cfg.h, wd, cfg.tolerance)?;
    let mut report = CheckReport::new("solution-check", params, cfg.tolerance);
    for (tag, part) in [("U_b", &quad), ("U_psi", &ode)] {
        for v in &part.values {
            report.push(ReportValue::real(format!("{tag} {}", v.label), v.re));
        }
        report.record_error(part.max_rel_err);
    }
    // transport of Ψ to a second argument against quadrature there
    let x1 = x0 * Complex64::new(1.3, 0.0) + Complex64::new(0.4, 0.3);
    let (via_ode, direct) = (transported(x1)?, matrix_ihat_with(x1, wd, settings)?);
    let scale = via_ode.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let gap = (0..via_ode.len()).map(|a| (via_ode[a] - direct.get(a, b)).norm()).fold(0.0, f64::max) / scale;
    report.push(ReportValue::real("transport vs quadrature", gap));
    report.record_error(gap);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::QuadratureConfig;

    fn cx(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn wd12() -> WeightData {
        WeightData::new(cx(2.3, 0.0), 1, cx(1.3, 0.0), 2, 2.5).unwrap()
    }

    #[test]
    fn matrices_small_cases() {
        let w = wd12();
        let cm = coefficient_matrices(&w);
        assert_eq!(cm.a, Mat::from_diagonal(&DVector::from_vec(vec![c(0.0), c(1.0)])));
        assert_eq!(cm.b[(0, 0)], c(2.0));
        assert_eq!(cm.b[(0, 1)], c(-2.0));
    }

    #[test]
    fn b_is_swap_symmetric() {
        for (m1, m2, l1, l2) in [(cx(2.3, 0.0), 1, cx(1.3, 0.0), 2), (cx(1.8, 0.5), 2, cx(0.8, 0.5), 3), (cx(0.3, 0.0), 3, cx(-0.7, 0.0), 4)] {
            let w = WeightData::new(m1, m2, l1, l2, 2.5).unwrap();
            assert!(max_abs(&(coefficient_matrices(&w).b - coefficient_matrices(&w.swapped()).b)) < 1e-12);
        }
    }

    #[test]
    fn leading_term_small_cases() {
        let w = wd12();
        let z = cx(1.0, 20.0);
        assert_eq!(asympt_leading(0, 1, z, &w).unwrap(), c(0.0));
        let want = (c(2.5) / z).powc(c(2.0 / 2.5));
        assert!((asympt_leading(0, 0, z, &w).unwrap() - want).norm() < 1e-14 * want.norm());
    }

    #[test]
    fn constant_path_leaves_psi_unchanged() {
        let w = wd12();
        let psi0 = vec![cx(1.0, 2.0), cx(-0.5, 0.1)];
        let out = solve_psi(&[cx(1.0, 1.0), cx(1.0, 1.0)], &psi0, &w, &OdeTolerance::default()).unwrap();
        assert_eq!(out, psi0);
    }

    #[test]
    fn scalar_equation_has_closed_form() {
        // κΨ' = (μ/x)Ψ - νΨ  =>  Ψ = Ψ0 (x/x0)^{μ/κ} e^{-ν(x-x0)/κ}
        let (mu, nu, k) = (cx(0.7, -0.3), cx(0.4, 0.2), 2.5);
        let m = Mat::from_element(1, 1, mu);
        let n = Mat::from_element(1, 1, nu);
        let (x0, x1) = (cx(1.0, 1.0), cx(-2.0, 3.0));
        let path = [x0, cx(0.0, 2.0), x1];
        let got = solve_linear(&path, &[c(1.0)], &m, &n, k, &OdeTolerance::default()).unwrap()[0];
        let want = (x1 / x0).powc(mu / k) * (-nu * (x1 - x0) / k).exp();
        assert!((got - want).norm() < 1e-10 * want.norm(), "{got} vs {want}");
    }

    #[test]
    fn path_through_zero_is_rejected() {
        let w = wd12();
        let err = solve_psi(&[cx(-1.0, 0.0), cx(1.0, 0.0)], &[c(1.0), c(0.0)], &w, &OdeTolerance::default()).unwrap_err();
        assert!(matches!(err, Error::Ode(OdeError::SingularPath(_))));
    }

    #[test]
    fn trivial_weight_subspace_is_constant() {
        let w = WeightData::new(cx(1.3, 0.0), 1, cx(2.3, 0.0), 0, 2.5).unwrap();
        let out = solve_psi(&[cx(1.0, 1.0), cx(3.0, 2.0)], &[c(1.0)], &w, &OdeTolerance::default()).unwrap();
        assert!((out[0] - 1.0).norm() < 1e-13);
    }

    #[test]
    fn prefactor_reduces_to_exponential() {
        // m1 = l1 = 0 turns both powers into 1
        let w = WeightData::new(c(0.0), 1, c(0.0), 1, 2.5).unwrap();
        let p = point_for_argument(cx(1.0, 2.0));
        let want = ((p.z1 * p.lambda1 * (-1.0) + p.z1 * p.lambda2 + p.z2 * p.lambda1) / 2.5).exp();
        assert!((solution_prefactor(&p, &w).unwrap() - want).norm() < 1e-14 * want.norm());
        assert!((scalar_argument(&p) - cx(1.0, 2.0)).norm() < 1e-14);
    }

    #[test]
    fn ode_matches_integral_transport() {
        // Ψ = column of Î transported in x reproduces Î elsewhere
        let w = wd12();
        let s = IntegralSettings::new(QuadratureConfig::default().with_target(1e-10));
        let (x0, x1) = (cx(1.0, 2.0), cx(2.0, 1.5));
        let (m0, m1) = (matrix_ihat_with(x0, &w, &s).unwrap(), matrix_ihat_with(x1, &w, &s).unwrap());
        for b in 0..2 {
            let psi0 = [m0.get(0, b), m0.get(1, b)];
            let out = solve_psi(&[x0, x1], &psi0, &w, &OdeTolerance::default()).unwrap();
            for a in 0..2 {
                assert!((out[a] - m1.get(a, b)).norm() < 1e-8 * m1.get(a, b).norm(), "a={a} b={b}");
            }
        }
    }
}
