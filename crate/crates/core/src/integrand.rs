//! Branch-consistent evaluation of master functions and weight functions.
//!
//! Every integrand here is a product of powers of linear factors,
//! `exp(c + k Σ t_u) ∏_{p,u} (c_p - t_u)^{e_p} ∏_{u<v} (t_u - t_v)^{e}`,
//! times a rational function. Powers are evaluated in log form from
//! continuously tracked arguments.

use std::f64::consts::{FRAC_PI_2, TAU};

use num_complex::Complex64;

use crate::contour::MultiLoopContour;
use crate::error::IntegrandError;
use crate::model::WeightData;

/// Factors smaller than this in modulus count as vanishing.
pub const VANISHING: f64 = 1e-14;
/// Recursion limit when a tracking step is bisected.
pub const MAX_BISECTIONS: usize = 40;

/// `log|f| + i arg f` of a branch-tracked value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogIntegrandValue {
    pub log_mag: f64,
    pub phase: f64,
}

impl LogIntegrandValue {
    pub fn from_log(l: Complex64) -> Self {
        LogIntegrandValue { log_mag: l.re, phase: l.im }
    }

    pub fn value(&self) -> Complex64 {
        Complex64::from_polar(self.log_mag.exp(), self.phase)
    }
}

/// Tracked arguments of every linear factor at a point `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchState {
    /// Centers `c_p` of the one-variable factors `c_p - t_u`.
    pub centers: Vec<Complex64>,
    pub t: Vec<Complex64>,
    /// `single[u][p] = arg(c_p - t_u)`.
    pub single: Vec<Vec<f64>>,
    /// `pair[u][v] = arg(t_u - t_v)` for `u < v`.
    pub pair: Vec<Vec<f64>>,
}

fn check_nonzero(x: Complex64, what: impl FnOnce() -> String) -> Result<(), IntegrandError> {
    if x.norm() < VANISHING || !x.is_finite() {
        Err(IntegrandError::FactorVanishes(what()))
    } else {
        Ok(())
    }
}

/// Shifts `approx` by a multiple of `2 pi` so that it agrees with `arg x`.
pub fn snap_arg(x: Complex64, approx: f64) -> f64 {
    let p = x.arg();
    p + TAU * ((approx - p) / TAU).round()
}

impl BranchState {
    /// Principal arguments everywhere.
    pub fn principal(centers: &[Complex64], t: &[Complex64]) -> Result<Self, IntegrandError> {
        let l = t.len();
        let mut single = vec![vec![0.0; centers.len()]; l];
        let mut pair = vec![vec![0.0; l]; l];
        for u in 0..l {
            for (p, &c) in centers.iter().enumerate() {
                let f = c - t[u];
                check_nonzero(f, || format!("center {p} - t_{}", u + 1))?;
                single[u][p] = f.arg();
            }
            for v in (u + 1)..l {
                let f = t[u] - t[v];
                check_nonzero(f, || format!("t_{} - t_{}", u + 1, v + 1))?;
                pair[u][v] = f.arg();
            }
        }
        Ok(BranchState { centers: centers.to_vec(), t: t.to_vec(), single, pair })
    }

    /// State at the reference point of a contour with base arguments assigned.
    /// Centers are `[0, z]`, or `[0]` when the contour carries no `z`.
    pub fn at_reference(contour: &MultiLoopContour) -> Result<Self, IntegrandError> {
        let base = contour
            .base_args
            .as_ref()
            .ok_or_else(|| IntegrandError::DegenerateParameters("contour has no base arguments".into()))?;
        let mut centers = vec![Complex64::new(0.0, 0.0)];
        if let Some(z) = contour.z {
            centers.push(z);
        }
        let t: Vec<Complex64> = contour.loops.iter().map(|lp| lp.reference_point()).collect();
        let single = (0..contour.l)
            .map(|u| {
                let mut row = vec![base.neg[u]];
                if contour.z.is_some() {
                    row.push(base.z_minus[u]);
                }
                row
            })
            .collect();
        Ok(BranchState { centers, t, single, pair: base.pair.clone() })
    }

    pub fn dim(&self) -> usize {
        self.t.len()
    }

    /// Moves to `new_t`, changing each argument by the principal argument of
    /// the factor ratio. Fails when any argument would jump by `pi/2` or more.
    pub fn step(&self, new_t: &[Complex64]) -> Result<Self, IntegrandError> {
        assert_eq!(new_t.len(), self.t.len(), "dimension mismatch in branch step");
        let mut next = self.clone();
        next.t = new_t.to_vec();
        let l = self.t.len();
        for u in 0..l {
            for (p, &c) in self.centers.iter().enumerate() {
                let f = c - new_t[u];
                check_nonzero(f, || format!("center {p} - t_{}", u + 1))?;
                next.single[u][p] += guarded((f / (c - self.t[u])).arg())?;
            }
            for v in (u + 1)..l {
                let f = new_t[u] - new_t[v];
                check_nonzero(f, || format!("t_{} - t_{}", u + 1, v + 1))?;
                next.pair[u][v] += guarded((f / (self.t[u] - self.t[v])).arg())?;
            }
        }
        Ok(next)
    }

    /// Moves to `target` along the straight segment, bisecting steps that are too large.
    pub fn transport(&self, target: &[Complex64]) -> Result<Self, IntegrandError> {
        let start = self.t.clone();
        let at = |s: f64| -> Vec<Complex64> { start.iter().zip(target).map(|(a, b)| a + (b - a) * s).collect() };
        self.transport_along(&at, 0.0, 1.0, MAX_BISECTIONS)
    }

    fn transport_along(&self, at: &dyn Fn(f64) -> Vec<Complex64>, s0: f64, s1: f64, depth: usize) -> Result<Self, IntegrandError> {
        match self.step(&at(s1)) {
            Ok(next) => Ok(next),
            Err(IntegrandError::StepTooLarge { jump }) => {
                if depth == 0 {
                    return Err(IntegrandError::StepTooLarge { jump });
                }
                let mid = 0.5 * (s0 + s1);
                self.transport_along(at, s0, mid, depth - 1)?.transport_along(at, mid, s1, depth - 1)
            }
            Err(e) => Err(e),
        }
    }

    /// Number of `2 pi` turns separating each tracked argument from its principal value.
    pub fn offsets(&self) -> (Vec<Vec<i64>>, Vec<Vec<i64>>) {
        let turns = |a: f64, f: Complex64| ((a - f.arg()) / TAU).round() as i64;
        let single = self
            .single
            .iter()
            .enumerate()
            .map(|(u, row)| row.iter().zip(&self.centers).map(|(&a, &c)| turns(a, c - self.t[u])).collect())
            .collect();
        let pair = (0..self.dim())
            .map(|u| (0..self.dim()).map(|v| if v > u { turns(self.pair[u][v], self.t[u] - self.t[v]) } else { 0 }).collect())
            .collect();
        (single, pair)
    }
}

fn guarded(jump: f64) -> Result<f64, IntegrandError> {
    if jump.abs() >= FRAC_PI_2 {
        Err(IntegrandError::StepTooLarge { jump })
    } else {
        Ok(jump)
    }
}

/// The `branch_track_step` operation.
pub fn branch_track_step(branch: &BranchState, new_t: &[Complex64]) -> Result<BranchState, IntegrandError> {
    branch.step(new_t)
}

/// Tracks `arg f(tau)` continuously from `(tau_ref, arg_ref)` to every
/// parameter in `taus` (ascending), bisecting any step whose argument
/// change reaches `pi/2`.
pub fn track_along(f: &dyn Fn(f64) -> Complex64, tau_ref: f64, arg_ref: f64, taus: &[f64]) -> Result<Vec<f64>, IntegrandError> {
    let v_ref = f(tau_ref);
    check_nonzero(v_ref, || format!("factor at tau = {tau_ref}"))?;
    let a_ref = snap_arg(v_ref, arg_ref);
    let mut out = vec![0.0; taus.len()];
    let split = taus.partition_point(|&t| t < tau_ref);
    let (mut tau, mut val, mut arg) = (tau_ref, v_ref, a_ref);
    for i in split..taus.len() {
        let v = f(taus[i]);
        arg = track_step(f, tau, val, arg, taus[i], v, MAX_BISECTIONS)?;
        tau = taus[i];
        val = v;
        out[i] = arg;
    }
    let (mut tau, mut val, mut arg) = (tau_ref, v_ref, a_ref);
    for i in (0..split).rev() {
        let v = f(taus[i]);
        arg = track_step(f, tau, val, arg, taus[i], v, MAX_BISECTIONS)?;
        tau = taus[i];
        val = v;
        out[i] = arg;
    }
    Ok(out)
}

fn track_step(f: &dyn Fn(f64) -> Complex64, t0: f64, v0: Complex64, a0: f64, t1: f64, v1: Complex64, depth: usize) -> Result<f64, IntegrandError> {
    check_nonzero(v1, || format!("factor at tau = {t1}"))?;
    let d = (v1 / v0).arg();
    if d.abs() < FRAC_PI_2 {
        return Ok(a0 + d);
    }
    if depth == 0 {
        return Err(IntegrandError::StepTooLarge { jump: d });
    }
    let tm = 0.5 * (t0 + t1);
    let vm = f(tm);
    check_nonzero(vm, || format!("factor at tau = {tm}"))?;
    let am = track_step(f, t0, v0, a0, tm, vm, depth - 1)?;
    track_step(f, tm, vm, am, t1, v1, depth - 1)
}

/// Exponents of an integrand of the form described in the module docs.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerProduct {
    /// Coefficient `k` of `Σ t_u` in the exponential.
    pub linear: Complex64,
    /// Additive constant `c` in the log.
    pub constant: Complex64,
    /// `(c_p, e_p)`: the factor `(c_p - t_u)^{e_p}` for every coordinate.
    pub points: Vec<(Complex64, Complex64)>,
    /// Exponent of `t_u - t_v`.
    pub pair: Complex64,
}

impl PowerProduct {
    /// `Φ_l(t, z; m1, m2)^{1/κ}`.
    pub fn master(z: Complex64, m1: Complex64, m2: Complex64, kappa: f64) -> Self {
        PowerProduct {
            linear: Complex64::new(-1.0 / kappa, 0.0),
            constant: Complex64::new(0.0, 0.0),
            points: vec![(Complex64::new(0.0, 0.0), -m1 / kappa), (z, -m2 / kappa)],
            pair: Complex64::new(2.0 / kappa, 0.0),
        }
    }

    /// The four-variable master function to the power `1/κ`, with the
    /// prefactor powers on principal branches.
    pub fn four_variable(z1: Complex64, z2: Complex64, lambda1: Complex64, lambda2: Complex64, wd: &WeightData) -> Result<Self, IntegrandError> {
        let lam = lambda1 - lambda2;
        let zz = z1 - z2;
        if lam.norm() < VANISHING {
            return Err(IntegrandError::DegenerateParameters("lambda1 = lambda2".into()));
        }
        if zz.norm() < VANISHING {
            return Err(IntegrandError::DegenerateParameters("z1 = z2".into()));
        }
        let k = wd.kappa;
        let m2 = wd.m2c();
        let constant = lambda1 * (wd.m1 * z1 + m2 * z2) / k - wd.l2 as f64 / k * lam.ln() + wd.m1 * m2 / k * zz.ln();
        Ok(PowerProduct {
            linear: -lam / k,
            constant,
            points: vec![(z1, -wd.m1 / k), (z2, -m2 / k)],
            pair: Complex64::new(2.0 / k, 0.0),
        })
    }

    /// Log of the one-variable part at `t` given `arg(c_p - t)`.
    pub fn single_log(&self, t: Complex64, args: &[f64]) -> Complex64 {
        let mut acc = self.linear * t;
        for (&(c, e), &a) in self.points.iter().zip(args) {
            if e != Complex64::new(0.0, 0.0) {
                acc += e * Complex64::new((c - t).norm().ln(), a);
            }
        }
        acc
    }

    pub fn pair_log(&self, d: Complex64, arg: f64) -> Complex64 {
        if self.pair == Complex64::new(0.0, 0.0) {
            return Complex64::new(0.0, 0.0);
        }
        self.pair * Complex64::new(d.norm().ln(), arg)
    }

    /// The full value at a tracked point. The branch centers must match `points`.
    pub fn log_value(&self, branch: &BranchState) -> Result<LogIntegrandValue, IntegrandError> {
        let l = branch.dim();
        let mut acc = self.constant;
        for u in 0..l {
            for (p, &(c, _)) in self.points.iter().enumerate() {
                check_nonzero(c - branch.t[u], || format!("center {p} - t_{}", u + 1))?;
            }
            acc += self.single_log(branch.t[u], &branch.single[u]);
            for v in (u + 1)..l {
                let d = branch.t[u] - branch.t[v];
                check_nonzero(d, || format!("t_{} - t_{}", u + 1, v + 1))?;
                acc += self.pair_log(d, branch.pair[u][v]);
            }
        }
        Ok(LogIntegrandValue::from_log(acc))
    }
}

/// `Φ_l(t, z; m1, m2)^{1/κ}` on the branch carried by `branch` (centers `[0, z]`).
pub fn master_phi_l(z: Complex64, wd: &WeightData, branch: &BranchState) -> Result<LogIntegrandValue, IntegrandError> {
    PowerProduct::master(z, wd.m1, wd.m2c(), wd.kappa).log_value(branch)
}

/// Four-variable master function to the power `1/κ` (centers `[z1, z2]`).
pub fn master_phi4(z1: Complex64, z2: Complex64, lambda1: Complex64, lambda2: Complex64, wd: &WeightData, branch: &BranchState) -> Result<LogIntegrandValue, IntegrandError> {
    PowerProduct::four_variable(z1, z2, lambda1, lambda2, wd)?.log_value(branch)
}

/// Plain symmetrization of `∏_{u<=l-a} 1/(first - t_u) ∏_{u>l-a} 1/(second - t_u)` over `S_l`.
fn symmetrized(t: &[Complex64], first: Complex64, second: Complex64, a: usize) -> Result<Complex64, IntegrandError> {
    let l = t.len();
    if a > l {
        return Err(IntegrandError::DegenerateParameters(format!("weight index {a} exceeds {l}")));
    }
    for (u, &x) in t.iter().enumerate() {
        check_nonzero(first - x, || format!("first center - t_{}", u + 1))?;
        check_nonzero(second - x, || format!("second center - t_{}", u + 1))?;
    }
    let mut perm: Vec<usize> = (0..l).collect();
    let mut total = Complex64::new(0.0, 0.0);
    let term = |p: &[usize]| -> Complex64 {
        p.iter()
            .enumerate()
            .map(|(pos, &u)| if pos < l - a { 1.0 / (first - t[u]) } else { 1.0 / (second - t[u]) })
            .product()
    };
    // Heap's algorithm
    let mut c = vec![0usize; l];
    total += term(&perm);
    let mut i = 0;
    while i < l {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            total += term(&perm);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    Ok(total)
}

/// `w_{l-a,a}(t, z)`.
pub fn weight_w(t: &[Complex64], z: Complex64, a: usize) -> Result<Complex64, IntegrandError> {
    symmetrized(t, Complex64::new(0.0, 0.0), z, a)
}

/// `w_{l2-a,a}(s, z1, z2)`.
pub fn weight_w4(s: &[Complex64], z1: Complex64, z2: Complex64, a: usize) -> Result<Complex64, IntegrandError> {
    symmetrized(s, z1, z2, a)
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// All weights `w_{l-a,a}`, `a = 0..=l`, at once: the coefficient of `X^a`
/// in `∏_u (p_u + X q_u)` times `(l-a)! a!`.
pub fn weights_all(t: &[Complex64], first: Complex64, second: Complex64) -> Vec<Complex64> {
    let l = t.len();
    let mut poly = vec![Complex64::new(1.0, 0.0)];
    for &x in t {
        let (p, q) = (1.0 / (first - x), 1.0 / (second - x));
        let mut next = vec![Complex64::new(0.0, 0.0); poly.len() + 1];
        for (k, &c) in poly.iter().enumerate() {
            next[k] += c * p;
            next[k + 1] += c * q;
        }
        poly = next;
    }
    poly.iter().enumerate().map(|(a, &c)| c * factorial(l - a) * factorial(a)).collect()
}

/// Per-node rational factor of an integrand. The integrand's rational part
/// is the polynomial `∏_u Σ_k f_k(t_u) X^k`; integration returns its coefficients.
pub trait Features: Sync + Send {
    fn len(&self) -> usize;
    fn eval(&self, t: Complex64, out: &mut [Complex64]);
    /// Scale applied to the coefficient of `X^k` in an `l`-fold integral.
    fn output_scale(&self, _l: usize, _k: usize) -> f64 {
        1.0
    }
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// No rational factor.
#[derive(Debug, Clone, Copy)]
pub struct Unit;

impl Features for Unit {
    fn len(&self) -> usize {
        1
    }
    fn eval(&self, _t: Complex64, out: &mut [Complex64]) {
        out[0] = Complex64::new(1.0, 0.0);
    }
}

/// Weight functions: coefficient `a` of the integral is `∫ ... w_{l-a,a}`.
#[derive(Debug, Clone, Copy)]
pub struct WeightFeatures {
    pub first: Complex64,
    pub second: Complex64,
}

impl Features for WeightFeatures {
    fn len(&self) -> usize {
        2
    }
    fn eval(&self, t: Complex64, out: &mut [Complex64]) {
        out[0] = 1.0 / (self.first - t);
        out[1] = 1.0 / (self.second - t);
    }
    fn output_scale(&self, l: usize, k: usize) -> f64 {
        factorial(l - k) * factorial(k)
    }
}

/// One-variable rational factor given by a closure.
pub struct FnFeature<F>(pub F);

impl<F: Fn(Complex64) -> Complex64 + Sync + Send> Features for FnFeature<F> {
    fn len(&self) -> usize {
        1
    }
    fn eval(&self, t: Complex64, out: &mut [Complex64]) {
        out[0] = (self.0)(t);
    }
}
