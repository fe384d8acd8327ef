//! gl(2) modules, the weight subspace `(M_{m1} ⊗ L_{m2})[l1, l2]`, and the
//! KZ and dynamical operators acting on functions with values in it.
//!
//! Vectors `E21^{d1} v_{m1} ⊗ E21^{d2} v_{m2}` are indexed by `(d1, d2)`; the
//! weight subspace is `d1 + d2 = l2` and its basis is
//! `F^a = E21^{l2-a} v_{m1} ⊗ E21^a v_{m2} / ((l2-a)! a!)`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, IntegrandError};
use crate::model::{CheckReport, ReportValue, WeightData};

type Mat = DMatrix<Complex64>;

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModuleKind {
    /// Basis `E21^d v_m`, `d >= 0`; kept up to a cutoff.
    Verma,
    /// `L_m`, `d = 0..=m` for a non-negative integer `m`.
    Irreducible,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModuleSpec {
    pub highest: Complex64,
    pub kind: ModuleKind,
    /// Largest `d` kept: `m` for `L_m`, the cutoff for a Verma module.
    pub top: usize,
}

impl ModuleSpec {
    pub fn verma(m: Complex64, cutoff: usize) -> Self {
        ModuleSpec { highest: m, kind: ModuleKind::Verma, top: cutoff }
    }

    pub fn irreducible(m: usize) -> Self {
        ModuleSpec { highest: c(m as f64), kind: ModuleKind::Irreducible, top: m }
    }

    pub fn dim(&self) -> usize {
        self.top + 1
    }
}

/// `E_{i,j} E21^d v_m` as `(coefficient, d')`; `None` when the result is zero
/// or leaves the kept range.
pub fn act_e(i: usize, j: usize, spec: &ModuleSpec, d: usize) -> Result<Option<(Complex64, usize)>, Error> {
    if d > spec.top {
        return Err(Error::Config(format!("basis index {d} outside 0..={}", spec.top)));
    }
    let m = spec.highest;
    let df = d as f64;
    Ok(match (i, j) {
        (1, 1) => Some((m - df, d)),
        (2, 2) => Some((c(df), d)),
        (2, 1) => (d < spec.top).then_some((c(1.0), d + 1)),
        (1, 2) => (d > 0).then(|| (df * (m - df + 1.0), d - 1)),
        _ => return Err(Error::Config(format!("no generator E_{{{i},{j}}} in gl(2)"))),
    })
}

/// Matrix of `E_{i,j}` on the kept basis of a module.
pub fn module_matrix(i: usize, j: usize, spec: &ModuleSpec) -> Mat {
    let n = spec.dim();
    let mut m = Mat::zeros(n, n);
    for d in 0..n {
        if let Some((coef, to)) = act_e(i, j, spec, d).expect("valid generator") {
            m[(to, d)] += coef;
        }
    }
    m
}

/// The tensor product of a Verma module (cut at `d <= l2`) and `L_{m2}`,
/// with operators restricted to the weight subspace in the `F` basis.
#[derive(Debug, Clone)]
pub struct WeightBasis {
    pub wd: WeightData,
    first: ModuleSpec,
    second: ModuleSpec,
}

/// Which factor of the tensor product an operator acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    First,
    Second,
    Both,
}

impl WeightBasis {
    pub fn new(wd: &WeightData) -> Self {
        WeightBasis { wd: *wd, first: ModuleSpec::verma(wd.m1, wd.l2), second: ModuleSpec::irreducible(wd.m2) }
    }

    pub fn dim(&self) -> usize {
        self.wd.dim() + 1
    }

    /// Labels `(d1, d2)` of `F^a`.
    pub fn labels(&self) -> Vec<(usize, usize)> {
        (0..self.dim()).map(|a| (self.wd.l2 - a, a)).collect()
    }

    fn index(&self, d1: usize, d2: usize) -> usize {
        d1 * self.second.dim() + d2
    }

    fn norm(&self, a: usize) -> f64 {
        1.0 / (factorial(self.wd.l2 - a) * factorial(a))
    }

    /// `E_{i,j}` on the full (cut) tensor product.
    pub fn tensor_e(&self, i: usize, j: usize, slot: Slot) -> Mat {
        let (p, q) = (self.first.dim(), self.second.dim());
        let one = |n| Mat::identity(n, n);
        let first = module_matrix(i, j, &self.first).kronecker(&one(q));
        let second = one(p).kronecker(&module_matrix(i, j, &self.second));
        match slot {
            Slot::First => first,
            Slot::Second => second,
            Slot::Both => first + second,
        }
    }

    /// Restriction of a weight-preserving operator to the `F` basis.
    pub fn restrict(&self, x: &Mat) -> Mat {
        let labels = self.labels();
        let n = self.dim();
        Mat::from_fn(n, n, |a, b| {
            let (ia, ib) = (self.index(labels[a].0, labels[a].1), self.index(labels[b].0, labels[b].1));
            x[(ia, ib)] * self.norm(b) / self.norm(a)
        })
    }

    /// `Ω = E11⊗E11 + E22⊗E22 + E12⊗E21 + E21⊗E12` on the full product.
    pub fn casimir_full(&self) -> Mat {
        let t = |i, j, s| self.tensor_e(i, j, s);
        t(1, 1, Slot::First) * t(1, 1, Slot::Second)
            + t(2, 2, Slot::First) * t(2, 2, Slot::Second)
            + t(1, 2, Slot::First) * t(2, 1, Slot::Second)
            + t(2, 1, Slot::First) * t(1, 2, Slot::Second)
    }

    /// `E21 E12 - E22` with the coproduct action on the product.
    pub fn dynamical_full(&self) -> Mat {
        self.tensor_e(2, 1, Slot::Both) * self.tensor_e(1, 2, Slot::Both) - self.tensor_e(2, 2, Slot::Both)
    }

    /// `E_{i,i}^{(slot)}` on the weight subspace.
    pub fn diagonal(&self, i: usize, slot: Slot) -> Mat {
        self.restrict(&self.tensor_e(i, i, slot))
    }
}

/// `Ω` on the weight subspace in the `F` basis.
pub fn casimir_matrix(wd: &WeightData) -> Mat {
    let basis = WeightBasis::new(wd);
    basis.restrict(&basis.casimir_full())
}

/// The variables `z1, z2, λ1, λ2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Var {
    Z1,
    Z2,
    L1,
    L2,
}

pub const VARS: [Var; 4] = [Var::Z1, Var::Z2, Var::L1, Var::L2];

/// An evaluation point `(z1, z2, λ1, λ2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub z1: Complex64,
    pub z2: Complex64,
    pub lambda1: Complex64,
    pub lambda2: Complex64,
}

impl Point {
    pub fn new(z1: Complex64, z2: Complex64, lambda1: Complex64, lambda2: Complex64) -> Self {
        Point { z1, z2, lambda1, lambda2 }
    }

    pub fn get(&self, v: Var) -> Complex64 {
        match v {
            Var::Z1 => self.z1,
            Var::Z2 => self.z2,
            Var::L1 => self.lambda1,
            Var::L2 => self.lambda2,
        }
    }

    pub fn shifted(&self, v: Var, h: Complex64) -> Self {
        let mut p = *self;
        match v {
            Var::Z1 => p.z1 += h,
            Var::Z2 => p.z2 += h,
            Var::L1 => p.lambda1 += h,
            Var::L2 => p.lambda2 += h,
        }
        p
    }

    /// The point with the roles of `z` and `λ` exchanged.
    pub fn dual(&self) -> Self {
        Point { z1: self.lambda1, z2: self.lambda2, lambda1: self.z1, lambda2: self.z2 }
    }

    pub fn check(&self) -> Result<(), IntegrandError> {
        if (self.z1 - self.z2).norm() < crate::integrand::VANISHING {
            return Err(IntegrandError::DegenerateParameters("z1 = z2".into()));
        }
        if (self.lambda1 - self.lambda2).norm() < crate::integrand::VANISHING {
            return Err(IntegrandError::DegenerateParameters("lambda1 = lambda2".into()));
        }
        Ok(())
    }
}

/// Scalar factors appearing in operator coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scalar {
    One,
    /// The variable itself.
    Value(Var),
    /// `1 / (x - y)`.
    InvDiff(Var, Var),
}

impl Scalar {
    pub fn eval(&self, p: &Point) -> Complex64 {
        match *self {
            Scalar::One => c(1.0),
            Scalar::Value(v) => p.get(v),
            Scalar::InvDiff(x, y) => 1.0 / (p.get(x) - p.get(y)),
        }
    }

    pub fn derivative(&self, by: Var, p: &Point) -> Complex64 {
        match *self {
            Scalar::One => c(0.0),
            Scalar::Value(v) => c(if v == by { 1.0 } else { 0.0 }),
            Scalar::InvDiff(x, y) => {
                let inv = 1.0 / (p.get(x) - p.get(y));
                if by == x {
                    -inv * inv
                } else if by == y {
                    inv * inv
                } else {
                    c(0.0)
                }
            }
        }
    }
}

/// `κ ∂/∂slot + Σ_k f_k(point) M_k`.
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    pub slot: Var,
    pub kappa: f64,
    pub terms: Vec<(Scalar, Mat)>,
}

impl OperatorMatrix {
    pub fn coefficient(&self, p: &Point) -> Mat {
        let n = self.terms[0].1.nrows();
        self.terms.iter().fold(Mat::zeros(n, n), |acc, (f, m)| acc + m * f.eval(p))
    }

    pub fn coefficient_derivative(&self, by: Var, p: &Point) -> Mat {
        let n = self.terms[0].1.nrows();
        self.terms.iter().fold(Mat::zeros(n, n), |acc, (f, m)| acc + m * f.derivative(by, p))
    }

    /// `κ U'(slot) + C U` from a derivative already computed.
    pub fn apply(&self, p: &Point, u: &[Complex64], du: &[Complex64]) -> Vec<Complex64> {
        let cu = self.coefficient(p) * nalgebra::DVector::from_column_slice(u);
        du.iter().zip(cu.iter()).map(|(d, x)| self.kappa * d + x).collect()
    }
}

/// Zero-order part of `[A, B]` for first-order operators `κ∂_x + A`, `κ∂_y + B`:
/// `κ(∂_x B - ∂_y A) + [A, B]`.
pub fn commutator(a: &OperatorMatrix, b: &OperatorMatrix, p: &Point) -> Mat {
    let (ca, cb) = (a.coefficient(p), b.coefficient(p));
    (b.coefficient_derivative(a.slot, p) - a.coefficient_derivative(b.slot, p)) * c(a.kappa) + &ca * &cb - &cb * &ca
}

/// `∇_a = κ∂/∂z_a - Ω/(z_a - z_b) - λ1 E11^{(a)} - λ2 E22^{(a)}`.
pub fn kz_operator(a: usize, wd: &WeightData) -> Result<OperatorMatrix, Error> {
    let basis = WeightBasis::new(wd);
    let (slot, other, s) = match a {
        1 => (Var::Z1, Var::Z2, Slot::First),
        2 => (Var::Z2, Var::Z1, Slot::Second),
        _ => return Err(Error::Config(format!("KZ operator index {a} not in {{1, 2}}"))),
    };
    let omega = casimir_matrix(wd);
    Ok(OperatorMatrix {
        slot,
        kappa: wd.kappa,
        terms: vec![
            (Scalar::InvDiff(slot, other), -omega),
            (Scalar::Value(Var::L1), -basis.diagonal(1, s)),
            (Scalar::Value(Var::L2), -basis.diagonal(2, s)),
        ],
    })
}

/// `D_i = κ∂/∂λ_i - (E21 E12 - E22)/(λ_i - λ_j) - z1 E_ii^{(1)} - z2 E_ii^{(2)}`.
pub fn dyn_operator(i: usize, wd: &WeightData) -> Result<OperatorMatrix, Error> {
    let basis = WeightBasis::new(wd);
    let (slot, other) = match i {
        1 => (Var::L1, Var::L2),
        2 => (Var::L2, Var::L1),
        _ => return Err(Error::Config(format!("dynamical operator index {i} not in {{1, 2}}"))),
    };
    let dynamical = basis.restrict(&basis.dynamical_full());
    Ok(OperatorMatrix {
        slot,
        kappa: wd.kappa,
        terms: vec![
            (Scalar::InvDiff(slot, other), -dynamical),
            (Scalar::Value(Var::Z1), -basis.diagonal(i, Slot::First)),
            (Scalar::Value(Var::Z2), -basis.diagonal(i, Slot::Second)),
        ],
    })
}

/// The four operators `∇_1, ∇_2, D_1, D_2`.
pub fn all_operators(wd: &WeightData) -> Result<[OperatorMatrix; 4], Error> {
    Ok([kz_operator(1, wd)?, kz_operator(2, wd)?, dyn_operator(1, wd)?, dyn_operator(2, wd)?])
}

const NAMES: [&str; 4] = ["nabla1", "nabla2", "D1", "D2"];

pub fn max_abs(m: &Mat) -> f64 {
    m.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

fn point_json(p: &Point) -> serde_json::Value {
    let v = |x: Complex64| json!([x.re, x.im]);
    json!({"z1": v(p.z1), "z2": v(p.z2), "lambda1": v(p.lambda1), "lambda2": v(p.lambda2)})
}

fn wd_json(wd: &WeightData) -> serde_json::Value {
    json!({"m1": [wd.m1.re, wd.m1.im], "m2": wd.m2, "l1": [wd.l1.re, wd.l1.im], "l2": wd.l2, "kappa": wd.kappa})
}

/// Pairwise commutators of `∇_1, ∇_2, D_1, D_2` at a point, each against
/// the size of its terms.
pub fn compatibility_check(p: &Point, wd: &WeightData, tolerance: f64) -> Result<CheckReport, Error> {
    p.check()?;
    let ops = all_operators(wd)?;
    let mut report = CheckReport::new("compatibility", json!({"wd": wd_json(wd), "point": point_json(p)}), tolerance);
    for x in 0..4 {
        for y in (x + 1)..4 {
            let (a, b) = (&ops[x], &ops[y]);
            let (ca, cb) = (a.coefficient(p), b.coefficient(p));
            let scale = (max_abs(&ca) * max_abs(&cb))
                .max(wd.kappa * max_abs(&b.coefficient_derivative(a.slot, p)))
                .max(wd.kappa * max_abs(&a.coefficient_derivative(b.slot, p)))
                .max(f64::MIN_POSITIVE);
            let norm = max_abs(&commutator(a, b, p));
            report.push(ReportValue::real(format!("[{},{}]", NAMES[x], NAMES[y]), norm));
            report.record_error(norm / scale);
        }
    }
    Ok(report)
}

/// `∇_a` on `(m1, m2, l1, l2)` at `p` against `D_a` on `(l1, l2, m1, m2)` at
/// the dual point, and the same with the roles exchanged.
pub fn duality_intertwine_check(p: &Point, wd: &WeightData, tolerance: f64) -> Result<CheckReport, Error> {
    p.check()?;
    let (ops, dual) = (all_operators(wd)?, all_operators(&wd.swapped())?);
    let mut report = CheckReport::new("duality-intertwining", json!({"wd": wd_json(wd), "point": point_json(p)}), tolerance);
    // index pairs: nabla_a <-> D_a
    for (x, y) in [(0, 2), (1, 3), (2, 0), (3, 1)] {
        let lhs = ops[x].coefficient(p);
        let rhs = dual[y].coefficient(&p.dual());
        let scale = max_abs(&lhs).max(max_abs(&rhs)).max(f64::MIN_POSITIVE);
        let diff = max_abs(&(lhs - rhs));
        report.push(ReportValue::real(format!("{} vs dual {}", NAMES[x], NAMES[y]), diff));
        report.record_error(diff / scale);
    }
    Ok(report)
}

/// Residuals `κ ∂U + C U` of all four equations by fourth-order central
/// differences with real step `h`, each relative to the larger of its terms.
pub fn solution_residual_check(
    u: &dyn Fn(&Point) -> Result<Vec<Complex64>, Error>,
    p: &Point,
    h: f64,
    wd: &WeightData,
    tolerance: f64,
) -> Result<CheckReport, Error> {
    p.check()?;
    let ops = all_operators(wd)?;
    let mut report = CheckReport::new("solution-residual", json!({"wd": wd_json(wd), "point": point_json(p), "h": h}), tolerance);
    let u0 = u(p)?;
    for (op, name) in ops.iter().zip(NAMES) {
        let at = |k: f64| u(&p.shifted(op.slot, c(k * h)));
        let (f2, f1, b1, b2) = (at(2.0)?, at(1.0)?, at(-1.0)?, at(-2.0)?);
        let du: Vec<Complex64> = (0..u0.len()).map(|i| (-f2[i] + 8.0 * f1[i] - 8.0 * b1[i] + b2[i]) / (12.0 * h)).collect();
        let res = op.apply(p, &u0, &du);
        let cu = op.coefficient(p) * nalgebra::DVector::from_column_slice(&u0);
        let scale = du
            .iter()
            .map(|x| op.kappa * x.norm())
            .chain(cu.iter().map(|x| x.norm()))
            .fold(0.0, f64::max);
        let norm = res.iter().map(|x| x.norm()).fold(0.0, f64::max);
        let rel = if scale > 0.0 { norm / scale } else { 0.0 };
        report.push(ReportValue::real(format!("residual {name}"), rel));
        report.record_error(rel);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cx(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn wd(m1: Complex64, m2: i64, l1: Complex64, l2: i64) -> WeightData {
        WeightData::new(m1, m2, l1, l2, 2.5).unwrap()
    }

    fn point() -> Point {
        Point::new(cx(0.3, 0.7), cx(-1.1, 0.2), cx(0.9, -0.4), cx(-0.5, 1.3))
    }

    #[test]
    fn highest_vector_is_killed_by_e12() {
        let spec = ModuleSpec::verma(cx(1.7, 0.3), 3);
        assert_eq!(act_e(1, 2, &spec, 0).unwrap(), None);
        // E12 E21 v = m v
        let (k, d) = act_e(2, 1, &spec, 0).unwrap().unwrap();
        let (k2, d2) = act_e(1, 2, &spec, d).unwrap().unwrap();
        assert_eq!(d2, 0);
        assert!((k * k2 - spec.highest).norm() < 1e-15);
        let l1 = ModuleSpec::irreducible(1);
        assert_eq!(act_e(2, 1, &l1, 1).unwrap(), None);
    }

    #[test]
    fn commutation_relation_below_the_cutoff() {
        let spec = ModuleSpec::verma(cx(0.8, -0.6), 4);
        let e = |i, j| module_matrix(i, j, &spec);
        let lhs = e(1, 2) * e(2, 1) - e(2, 1) * e(1, 2);
        let rhs = e(1, 1) - e(2, 2);
        // the cut removes E21 from the top vector only
        let n = spec.dim() - 1;
        assert!(max_abs(&(lhs.view((0, 0), (n, n)) - rhs.view((0, 0), (n, n)))) < 1e-14);
        let l = ModuleSpec::irreducible(3);
        let e = |i, j| module_matrix(i, j, &l);
        assert!(max_abs(&(e(1, 2) * e(2, 1) - e(2, 1) * e(1, 2) - e(1, 1) + e(2, 2))) < 1e-14);
    }

    #[test]
    fn casimir_on_the_top_vector() {
        let w = wd(cx(2.3, 0.0), 1, cx(3.3, 0.0), 0);
        let om = casimir_matrix(&w);
        assert_eq!(om.nrows(), 1);
        assert!((om[(0, 0)] - w.m1 * 1.0).norm() < 1e-14);
    }

    fn b_matrix(w: &WeightData) -> Mat {
        let n = w.dim() + 1;
        let (m1, m2, l2) = (w.m1, w.m2 as f64, w.l2 as f64);
        Mat::from_fn(n, n, |a, b| {
            let af = a as f64;
            if a == b {
                2.0 * af * af - af * (2.0 * l2 + m2 - m1) + m2 * l2
            } else if b + 1 == a {
                af * (l2 - m1 - af)
            } else if b == a + 1 {
                c(-(m2 - af) * (l2 - af))
            } else {
                c(0.0)
            }
        })
    }

    #[test]
    fn casimir_and_e22_give_the_ode_matrices() {
        for w in [wd(cx(2.3, 0.0), 1, cx(1.3, 0.0), 2), wd(cx(1.8, 0.5), 2, cx(0.8, 0.5), 3), wd(cx(0.4, 0.1), 3, cx(0.4, 0.1), 3)] {
            let n = w.dim() + 1;
            let shifted = casimir_matrix(&w) - Mat::identity(n, n) * (w.m1 * w.m2 as f64);
            assert!(max_abs(&(shifted + b_matrix(&w))) < 1e-12);
            let a = WeightBasis::new(&w).diagonal(2, Slot::Second);
            let want = Mat::from_fn(n, n, |i, j| c(if i == j { i as f64 } else { 0.0 }));
            assert!(max_abs(&(a - want)) < 1e-14);
        }
    }

    #[test]
    fn casimir_is_tridiagonal() {
        let om = casimir_matrix(&wd(cx(1.8, 0.5), 3, cx(0.8, 0.5), 4));
        for a in 0..om.nrows() {
            for b in 0..om.ncols() {
                if a.abs_diff(b) > 1 {
                    assert_eq!(om[(a, b)], c(0.0));
                }
            }
        }
    }

    #[test]
    fn weight_subspace_is_preserved() {
        let w = wd(cx(1.8, 0.5), 2, cx(0.8, 0.5), 3);
        let basis = WeightBasis::new(&w);
        let labels = basis.labels();
        let (p, q) = (w.l2 + 1, w.m2 + 1);
        for x in [basis.casimir_full(), basis.dynamical_full(), basis.tensor_e(1, 1, Slot::First)] {
            for &(d1, d2) in &labels {
                let col = d1 * q + d2;
                for row in 0..p * q {
                    let (r1, r2) = (row / q, row % q);
                    if r1 + r2 != w.l2 {
                        assert_eq!(x[(row, col)], c(0.0));
                    }
                }
            }
        }
    }

    #[test]
    fn scalar_operators_on_the_top_vector() {
        let w = wd(cx(2.3, 0.0), 1, cx(3.3, 0.0), 0);
        let p = point();
        let k1 = kz_operator(1, &w).unwrap().coefficient(&p)[(0, 0)];
        let want = -w.m1 * 1.0 / (p.z1 - p.z2) - p.lambda1 * w.m1;
        assert!((k1 - want).norm() < 1e-13);
        let d1 = dyn_operator(1, &w).unwrap().coefficient(&p)[(0, 0)];
        assert!((d1 + p.z1 * w.m1 + p.z2 * 1.0).norm() < 1e-13);
    }

    #[test]
    fn kz_pole_parts_cancel() {
        let w = wd(cx(2.3, 0.0), 1, cx(1.3, 0.0), 2);
        let (a, b) = (kz_operator(1, &w).unwrap(), kz_operator(2, &w).unwrap());
        let p = point();
        let pole = |o: &OperatorMatrix| o.terms[0].1.clone() * o.terms[0].0.eval(&p);
        assert!(max_abs(&(pole(&a) + pole(&b))) < 1e-14);
    }

    #[test]
    fn analytic_derivatives_match_differences() {
        let w = wd(cx(1.8, 0.5), 2, cx(0.8, 0.5), 3);
        let p = point();
        let h = 1e-6;
        for op in all_operators(&w).unwrap() {
            for v in VARS {
                let fd = (op.coefficient(&p.shifted(v, c(h))) - op.coefficient(&p.shifted(v, c(-h)))) / c(2.0 * h);
                assert!(max_abs(&(fd - op.coefficient_derivative(v, &p))) < 1e-7);
            }
        }
    }

    #[test]
    fn commutators_vanish() {
        for w in [wd(cx(2.3, 0.0), 1, cx(1.3, 0.0), 2), wd(cx(1.1, 0.4), 2, cx(1.1, 0.4), 2), wd(cx(1.8, 0.5), 2, cx(0.8, 0.5), 3)] {
            let r = compatibility_check(&point(), &w, 1e-10).unwrap();
            assert!(r.pass, "{}", r.max_rel_err);
        }
    }

    #[test]
    fn intertwining_holds() {
        for w in [wd(cx(2.3, 0.0), 1, cx(1.3, 0.0), 2), wd(cx(1.8, 0.5), 2, cx(0.8, 0.5), 3), wd(cx(0.7, 0.0), 0, cx(0.7, 0.0), 0)] {
            let r = duality_intertwine_check(&point(), &w, 1e-10).unwrap();
            assert!(r.pass, "{}", r.max_rel_err);
        }
    }

    #[test]
    fn intertwining_detects_a_wrong_casimir_sign() {
        let w = wd(cx(2.3, 0.0), 1, cx(1.3, 0.0), 2);
        let p = point();
        let mut op = kz_operator(1, &w).unwrap();
        op.terms[0].1 = -op.terms[0].1.clone();
        let d = dyn_operator(1, &w.swapped()).unwrap();
        assert!(max_abs(&(op.coefficient(&p) - d.coefficient(&p.dual()))) > 1e-3);
    }

    #[test]
    fn zero_function_has_zero_residual() {
        let w = wd(cx(2.3, 0.0), 1, cx(1.3, 0.0), 2);
        let r = solution_residual_check(&|_| Ok(vec![c(0.0); 2]), &point(), 1e-3, &w, 1e-5).unwrap();
        assert!(r.pass);
    }

    #[test]
    fn degenerate_points_are_rejected() {
        let w = wd(cx(2.3, 0.0), 1, cx(1.3, 0.0), 2);
        let mut p = point();
        p.z2 = p.z1;
        assert!(compatibility_check(&p, &w, 1e-10).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn compatible_at_random_points(
            re in proptest::collection::vec(-2.0f64..2.0, 8),
            m in -1.0f64..2.0,
            mi in -0.5f64..0.5,
        ) {
            let p = Point::new(cx(re[0], re[1]), cx(re[2] + 5.0, re[3]), cx(re[4], re[5]), cx(re[6] - 5.0, re[7]));
            let l1 = cx(m, mi);
            let w = WeightData::new(l1 + 1.0, 2, l1, 3, 2.5).unwrap();
            prop_assert!(compatibility_check(&p, &w, 1e-10).unwrap().pass);
            prop_assert!(duality_intertwine_check(&p, &w, 1e-10).unwrap().pass);
        }
    }
}
