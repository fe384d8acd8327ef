//! Tensor-product Gauss–Legendre quadrature over products of loops.
//!
//! The integrand factorizes into one-variable weights, pair factors and a
//! per-node polynomial (see [`crate::integrand::Features`]), so the sum over
//! the grid is a contraction evaluated loop by loop. Arguments of every
//! factor are tracked from the reference point of each loop, so the branch
//! is the continuous one on the parameter cube.

use std::ops::{Add, AddAssign, Mul};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::contour::{LoopPath, MultiLoopContour, PanelRule};
use crate::error::{GeometryError, IntegrandError, QuadratureError};
use crate::integrand::{track_along, Features, PowerProduct};

/// Quadrature settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    /// Gauss–Legendre nodes per panel at the coarsest level.
    pub nodes: usize,
    /// Refinement levels after the coarsest.
    pub levels: usize,
    /// Target relative error.
    pub target: f64,
    /// Fixed truncation distance for every loop.
    pub truncation: Option<f64>,
    /// Node growth factor between levels.
    pub growth: f64,
    pub ray_width: f64,
    pub arc_width: f64,
    /// Rays end where the integrand bound is this many e-folds below its peak.
    pub tail_efolds: f64,
    /// Evaluate once more with doubled truncation at the coarsest level.
    pub confirm_truncation: bool,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            nodes: 8,
            levels: 5,
            target: 1e-8,
            truncation: None,
            growth: 1.5,
            ray_width: 0.6,
            arc_width: 0.6,
            tail_efolds: 40.0,
            confirm_truncation: true,
        }
    }
}

impl QuadratureConfig {
    pub fn with_target(mut self, target: f64) -> Self {
        self.target = target;
        self
    }

    pub fn validate(&self) -> Result<(), QuadratureError> {
        if self.nodes < 4 {
            return Err(QuadratureError::Config(format!("need at least 4 nodes per panel, got {}", self.nodes)));
        }
        if !(self.target >= 1e-12) {
            return Err(QuadratureError::Config(format!("target {} below 1e-12", self.target)));
        }
        if !(self.growth > 1.0) || !(self.ray_width > 0.0) || !(self.arc_width > 0.0) || !(self.tail_efolds > 0.0) {
            return Err(QuadratureError::Config("growth, panel widths and tail must be positive".into()));
        }
        Ok(())
    }

    /// Nodes per panel at refinement level `k`.
    pub fn nodes_at(&self, k: usize) -> usize {
        (self.nodes as f64 * self.growth.powi(k as i32)).round() as usize
    }
}

/// Node count and truncation that a result was computed with. Reusing a
/// plan on a nearby chain gives values whose quadrature error varies smoothly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    pub nodes_per_panel: usize,
    pub reach: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureResult {
    /// First output.
    pub value: Complex64,
    /// All outputs (coefficients of the rational-part polynomial).
    pub values: Vec<Complex64>,
    /// Largest relative difference between the last two levels; outputs that
    /// are small against the integral of `|f|` are measured against that instead.
    pub error: f64,
    /// Absolute difference between the last two levels, per output.
    pub abs_errors: Vec<f64>,
    /// Grid points at the final level.
    pub nodes: usize,
    /// Largest truncation distance used.
    pub truncation: f64,
    pub plan: Plan,
}

/// One loop of an integration chain: `s = scale * t + shift` with `t` on `path`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainLoop {
    pub path: LoopPath,
    pub scale: Complex64,
    pub shift: Complex64,
}

impl ChainLoop {
    pub fn point(&self, tau: f64) -> Complex64 {
        self.scale * self.path.point(tau) + self.shift
    }
}

/// Loops plus the arguments of every factor at the reference point.
#[derive(Debug, Clone, PartialEq)]
pub struct Chain {
    pub loops: Vec<ChainLoop>,
    /// `single_base[u][p] = arg(c_p - s_u)` at the reference point of loop `u`.
    pub single_base: Vec<Vec<f64>>,
    /// `pair_base[u][v] = arg(s_u - s_v)`.
    pub pair_base: Vec<Vec<f64>>,
}

impl Chain {
    /// Chain of a contour with assigned base arguments; point factors are
    /// ordered `[0, z]` (or `[0]` without `z`).
    pub fn from_contour(contour: &MultiLoopContour) -> Result<Self, GeometryError> {
        let base = match &contour.base_args {
            Some(b) => b.clone(),
            None => contour.clone().assign_base_args()?.base_args.unwrap(),
        };
        let loops = contour
            .loops
            .iter()
            .map(|&path| ChainLoop { path, scale: Complex64::new(1.0, 0.0), shift: Complex64::new(0.0, 0.0) })
            .collect();
        let single_base = (0..contour.l)
            .map(|u| {
                let mut row = vec![base.neg[u]];
                if !base.z_minus.is_empty() {
                    row.push(base.z_minus[u]);
                }
                row
            })
            .collect();
        Ok(Chain { loops, single_base, pair_base: base.pair })
    }

    /// A single loop with principal arguments of `c_p - t` at its reference point.
    pub fn single(path: LoopPath, centers: &[Complex64]) -> Self {
        let t = path.reference_point();
        Chain {
            loops: vec![ChainLoop { path, scale: Complex64::new(1.0, 0.0), shift: Complex64::new(0.0, 0.0) }],
            single_base: vec![centers.iter().map(|c| (c - t).arg()).collect()],
            pair_base: vec![vec![0.0]],
        }
    }

    /// Image under `s = scale * t + shift`; factors `c' - s` with
    /// `c' = scale * c + shift` keep their arguments rotated by `Arg scale`.
    pub fn mapped(&self, scale: Complex64, shift: Complex64) -> Self {
        let rot = scale.arg();
        let mut out = self.clone();
        for lp in &mut out.loops {
            lp.shift = scale * lp.shift + shift;
            lp.scale *= scale;
        }
        for row in &mut out.single_base {
            for a in row.iter_mut() {
                *a += rot;
            }
        }
        for (u, row) in out.pair_base.iter_mut().enumerate() {
            for a in row.iter_mut().skip(u + 1) {
                *a += rot;
            }
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.loops.len()
    }

    pub fn with_reach(&self, reach: &[f64]) -> Result<Self, GeometryError> {
        let mut out = self.clone();
        for (lp, &r) in out.loops.iter_mut().zip(reach) {
            if !(r > lp.path.radius) {
                return Err(GeometryError::Invalid(format!("truncation {r} inside loop radius {}", lp.path.radius)));
            }
            lp.path.reach = r;
        }
        Ok(out)
    }
}

/// An integrand: power product times the per-node rational features.
pub struct Integrand<'a> {
    pub power: PowerProduct,
    pub features: &'a dyn Features,
}

/// Truncation distance for each loop: rays end where the bound on the
/// integrand (one-variable part plus a pair allowance) stays `efolds`
/// below its peak over the loop.
pub fn truncation_rule(power: &PowerProduct, chain: &Chain, efolds: f64) -> Result<Vec<f64>, QuadratureError> {
    let l = chain.dim();
    let pair_growth = (l.saturating_sub(1)) as f64 * power.pair.re.max(0.0);
    chain
        .loops
        .iter()
        .enumerate()
        .map(|(u, lp)| {
            let log_mag = |t: Complex64| {
                let s = lp.scale * t + lp.shift;
                let args: Vec<f64> = power.points.iter().map(|(c, _)| (c - s).arg()).collect();
                power.single_log(s, &args).re + pair_growth * (1.0 + (s - lp.shift).norm()).ln()
            };
            let path = lp.path;
            let mut peak = f64::NEG_INFINITY;
            for k in 0..128 {
                let phi = path.angle_in() + path.arc_span() * k as f64 / 127.0;
                peak = peak.max(log_mag(path.center + Complex64::from_polar(path.radius, phi)));
            }
            let grid: Vec<f64> = (0..)
                .map(|k| path.radius * 1.05f64.powi(k))
                .take_while(|&r| r < 1e6 * path.radius.max(1.0))
                .collect();
            let along = |angle: f64| -> Vec<f64> { grid.iter().map(|&r| log_mag(path.center + Complex64::from_polar(r, angle))).collect() };
            let (a, b) = (along(path.angle_in()), along(path.angle_out()));
            for v in a.iter().chain(&b) {
                peak = peak.max(*v);
            }
            let cut = peak - efolds;
            // last grid point where either ray is still above the cut
            let last = (0..grid.len()).rev().find(|&k| a[k] >= cut || b[k] >= cut);
            match last {
                Some(k) if k + 1 >= grid.len() => Err(QuadratureError::Config(format!("integrand does not decay along loop {u}"))),
                Some(k) => Ok(grid[k + 1].max(2.0 * path.radius)),
                None => Ok(2.0 * path.radius),
            }
        })
        .collect()
}

trait Scalar: Copy + Send + Sync + Add<Output = Self> + Mul<Output = Self> + AddAssign {
    const ZERO: Self;
    const ONE: Self;
}

impl Scalar for f64 {
    const ZERO: f64 = 0.0;
    const ONE: f64 = 1.0;
}

impl Scalar for Complex64 {
    const ZERO: Complex64 = Complex64::new(0.0, 0.0);
    const ONE: Complex64 = Complex64::new(1.0, 0.0);
}

/// Discretized integrand: one-variable weights, pair tables and features.
struct Grid<T> {
    l: usize,
    f: usize,
    /// `single[u][i]`: quadrature weight times the one-variable factors.
    single: Vec<Vec<T>>,
    /// `feats[u][i * f + k]`.
    feats: Vec<Vec<T>>,
    /// `pairs[u][v][i * n_v + j]` for `u < v`.
    pairs: Vec<Vec<Vec<T>>>,
}

impl<T: Scalar> Grid<T> {
    fn out_len(&self) -> usize {
        self.l * (self.f - 1) + 1
    }

    fn contract(&self) -> Vec<T> {
        let l = self.l;
        let out_len = self.out_len();
        if l == 0 {
            let mut out = vec![T::ZERO; out_len];
            out[0] = T::ONE;
            return out;
        }
        if l == 1 {
            let mut out = vec![T::ZERO; out_len];
            for (i, &s) in self.single[0].iter().enumerate() {
                for k in 0..self.f {
                    out[k] += s * self.feats[0][i * self.f + k];
                }
            }
            return out;
        }
        let n0 = self.single[0].len();
        let parts: Vec<Vec<T>> = if l == 2 {
            let g = self.inner_table(&self.single[1]);
            (0..n0)
                .into_par_iter()
                .map(|i| {
                    let mut out = vec![T::ZERO; out_len];
                    self.innermost_pair(0, i, &[T::ONE], self.single[0][i], &g, &mut out);
                    out
                })
                .collect()
        } else {
            (0..n0)
                .into_par_iter()
                .map(|i| {
                    let mut out = vec![T::ZERO; out_len];
                    let c = self.single[0][i];
                    let poly = self.scaled_features(0, i, c, &[T::ONE]);
                    let bufs: Vec<Vec<T>> = (1..l)
                        .map(|w| self.single[w].iter().zip(self.row(0, w, i)).map(|(&s, &p)| s * p).collect())
                        .collect();
                    self.descend(1, &poly, &bufs, &mut out);
                    out
                })
                .collect()
        };
        let mut out = vec![T::ZERO; out_len];
        for p in parts {
            for (o, v) in out.iter_mut().zip(p) {
                *o += v;
            }
        }
        out
    }

    fn row(&self, u: usize, w: usize, i: usize) -> &[T] {
        let n = self.single[w].len();
        &self.pairs[u][w][i * n..(i + 1) * n]
    }

    /// `poly * (c * f_u(i))` as a polynomial in `X`.
    fn scaled_features(&self, u: usize, i: usize, c: T, poly: &[T]) -> Vec<T> {
        let mut out = vec![T::ZERO; poly.len() + self.f - 1];
        for (a, &p) in poly.iter().enumerate() {
            let pc = p * c;
            for k in 0..self.f {
                out[a + k] += pc * self.feats[u][i * self.f + k];
            }
        }
        out
    }

    /// `g[k * f + γ] = weights[k] f_{l-1}(k)_γ` for the innermost loop.
    fn inner_table(&self, weights: &[T]) -> Vec<T> {
        let last = self.l - 1;
        let mut g = vec![T::ZERO; weights.len() * self.f];
        for (k, &w) in weights.iter().enumerate() {
            for q in 0..self.f {
                g[k * self.f + q] = w * self.feats[last][k * self.f + q];
            }
        }
        g
    }

    /// Adds the contribution of index `i` on loop `u = l - 2` with the innermost loop summed out.
    fn innermost_pair(&self, u: usize, i: usize, poly: &[T], c: T, g: &[T], out: &mut [T]) {
        let f = self.f;
        let row = self.row(u, self.l - 1, i);
        let mut acc = vec![T::ZERO; f];
        for (k, &p) in row.iter().enumerate() {
            for q in 0..f {
                acc[q] += p * g[k * f + q];
            }
        }
        let left = self.scaled_features(u, i, c, poly);
        for (a, &x) in left.iter().enumerate() {
            for (q, &y) in acc.iter().enumerate() {
                out[a + q] += x * y;
            }
        }
    }

    /// `bufs[w - u]` holds the partially multiplied weights of loop `w >= u`.
    fn descend(&self, u: usize, poly: &[T], bufs: &[Vec<T>], out: &mut [T]) {
        let l = self.l;
        if u == l - 2 {
            let g = self.inner_table(&bufs[1]);
            for (i, &c) in bufs[0].iter().enumerate() {
                self.innermost_pair(u, i, poly, c, &g, out);
            }
            return;
        }
        let mut next: Vec<Vec<T>> = bufs[1..].iter().map(|b| vec![T::ZERO; b.len()]).collect();
        for (i, &c) in bufs[0].iter().enumerate() {
            let p = self.scaled_features(u, i, c, poly);
            for (w_off, nb) in next.iter_mut().enumerate() {
                let w = u + 1 + w_off;
                for ((dst, &src), &pp) in nb.iter_mut().zip(&bufs[w_off + 1]).zip(self.row(u, w, i)) {
                    *dst = src * pp;
                }
            }
            self.descend(u + 1, &p, &next, out);
        }
    }
}

/// Nodes, tracked arguments and factor values of the chain at one node count.
struct Discretized {
    grid: Grid<Complex64>,
    nodes: usize,
}

fn discretize(integrand: &Integrand, chain: &Chain, n: usize, cfg: &QuadratureConfig) -> Result<Discretized, QuadratureError> {
    let power = &integrand.power;
    let l = chain.dim();
    let f = integrand.features.len();
    let mut single = Vec::with_capacity(l);
    let mut feats = Vec::with_capacity(l);
    let mut node_pts: Vec<Vec<Complex64>> = Vec::with_capacity(l);
    let mut node_taus: Vec<Vec<f64>> = Vec::with_capacity(l);
    for (u, lp) in chain.loops.iter().enumerate() {
        if chain.single_base[u].len() < power.points.len() {
            return Err(QuadratureError::Config("chain lacks base arguments for some factor".into()));
        }
        let rule = PanelRule {
            nodes_per_panel: n,
            ray_width: cfg.ray_width,
            arc_width: cfg.arc_width,
            decay: (power.linear * lp.scale).norm(),
        };
        let nodes = lp.path.discretize(&rule);
        let taus: Vec<f64> = nodes.iter().map(|x| x.tau).collect();
        let pts: Vec<Complex64> = nodes.iter().map(|x| lp.scale * x.t + lp.shift).collect();
        let tau_ref = lp.path.reference_tau();
        let mut args = vec![vec![0.0; power.points.len()]; nodes.len()];
        for (p, &(c, _)) in power.points.iter().enumerate() {
            let track = track_along(&|tau| c - lp.point(tau), tau_ref, chain.single_base[u][p], &taus)?;
            for (row, a) in args.iter_mut().zip(track) {
                row[p] = a;
            }
        }
        let mut s = Vec::with_capacity(nodes.len());
        let mut fv = vec![Complex64::new(0.0, 0.0); nodes.len() * f];
        for (i, node) in nodes.iter().enumerate() {
            s.push(node.w * lp.scale * power.single_log(pts[i], &args[i]).exp());
            integrand.features.eval(pts[i], &mut fv[i * f..(i + 1) * f]);
        }
        single.push(s);
        feats.push(fv);
        node_pts.push(pts);
        node_taus.push(taus);
    }
    let mut pairs = vec![vec![Vec::new(); l]; l];
    for u in 0..l {
        for v in (u + 1)..l {
            pairs[u][v] = pair_table(power, chain, u, v, &node_pts, &node_taus)?;
        }
    }
    let nodes = single.iter().map(Vec::len).product::<usize>();
    Ok(Discretized { grid: Grid { l, f, single, feats, pairs }, nodes })
}

/// `(s_u - s_v)^pair` on the node grid, with the argument tracked first
/// along loop `u` at the reference point of loop `v`, then along loop `v`.
fn pair_table(power: &PowerProduct, chain: &Chain, u: usize, v: usize, pts: &[Vec<Complex64>], taus: &[Vec<f64>]) -> Result<Vec<Complex64>, IntegrandError> {
    let (lu, lv) = (&chain.loops[u], &chain.loops[v]);
    let (ru, rv) = (lu.path.reference_tau(), lv.path.reference_tau());
    let sv_ref = lv.point(rv);
    let first = track_along(&|tau| lu.point(tau) - sv_ref, ru, chain.pair_base[u][v], &taus[u])?;
    let nv = pts[v].len();
    let mut out = vec![Complex64::new(0.0, 0.0); pts[u].len() * nv];
    for (i, &su) in pts[u].iter().enumerate() {
        let args = track_along(&|tau| su - lv.point(tau), rv, first[i], &taus[v])?;
        for j in 0..nv {
            let d = su - pts[v][j];
            out[i * nv + j] = power.pair_log(d, args[j]).exp();
        }
    }
    Ok(out)
}

fn finish(integrand: &Integrand, l: usize, raw: Vec<Complex64>) -> Vec<Complex64> {
    let c = integrand.power.constant.exp();
    raw.iter().enumerate().map(|(k, &v)| v * c * integrand.features.output_scale(l, k)).collect()
}

/// Integral of `|f|` with features replaced by the sum of their moduli;
/// the scale for outputs that nearly cancel.
fn magnitude_scale(integrand: &Integrand, d: &Discretized) -> f64 {
    let g = &d.grid;
    let abs_grid = Grid {
        l: g.l,
        f: 1,
        single: g.single.iter().map(|s| s.iter().map(|x| x.norm()).collect()).collect(),
        feats: g
            .feats
            .iter()
            .map(|fv| fv.chunks(g.f).map(|ch| ch.iter().map(|x| x.norm()).sum()).collect())
            .collect(),
        pairs: g.pairs.iter().map(|row| row.iter().map(|t| t.iter().map(|x| x.norm()).collect()).collect()).collect(),
    };
    let scale = (0..=g.l * (g.f - 1)).map(|k| integrand.features.output_scale(g.l, k)).fold(0.0, f64::max);
    abs_grid.contract()[0] * integrand.power.constant.exp().norm() * scale
}

/// Evaluates with a fixed node count and truncation.
pub fn integrate_with_plan(integrand: &Integrand, chain: &Chain, plan: &Plan, cfg: &QuadratureConfig) -> Result<Vec<Complex64>, QuadratureError> {
    let chain = chain.with_reach(&plan.reach)?;
    let d = discretize(integrand, &chain, plan.nodes_per_panel, cfg)?;
    Ok(finish(integrand, chain.dim(), d.grid.contract()))
}

/// Integrates over the chain, refining the node count until two successive
/// levels agree to the target.
pub fn integrate_multiloop(integrand: &Integrand, chain: &Chain, cfg: &QuadratureConfig) -> Result<QuadratureResult, QuadratureError> {
    cfg.validate()?;
    let l = chain.dim();
    let mut reach = match cfg.truncation {
        Some(t) => vec![t; l],
        None => truncation_rule(&integrand.power, chain, cfg.tail_efolds)?,
    };
    let mut current = chain.with_reach(&reach)?;
    let n0 = cfg.nodes_at(0);
    let d0 = discretize(integrand, &current, n0, cfg)?;
    let mut prev = finish(integrand, l, d0.grid.contract());
    let scale = magnitude_scale(integrand, &d0);
    if cfg.truncation.is_none() && cfg.confirm_truncation && l > 0 {
        // keep the rule's truncation unless doubling it moves the coarse value
        for _ in 0..4 {
            let doubled: Vec<f64> = reach.iter().map(|r| 2.0 * r).collect();
            let cand = chain.with_reach(&doubled)?;
            let v = finish(integrand, l, discretize(integrand, &cand, n0, cfg)?.grid.contract());
            if max_rel_change(&prev, &v, scale) <= 0.1 * cfg.target {
                break;
            }
            reach = doubled;
            current = cand;
            prev = v;
        }
    }
    let mut last_err = f64::INFINITY;
    let mut last_abs = vec![f64::INFINITY; prev.len()];
    let mut nodes = d0.nodes;
    let mut n_used = n0;
    for k in 1..=cfg.levels {
        let n = cfg.nodes_at(k);
        let d = discretize(integrand, &current, n, cfg)?;
        nodes = d.nodes;
        let v = finish(integrand, l, d.grid.contract());
        last_abs = prev.iter().zip(&v).map(|(a, b)| (a - b).norm()).collect();
        last_err = max_rel_change(&prev, &v, scale);
        prev = v;
        n_used = n;
        if last_err <= cfg.target {
            break;
        }
    }
    if l == 0 {
        last_err = 0.0;
        last_abs = vec![0.0; prev.len()];
    }
    if !(last_err <= cfg.target) {
        return Err(QuadratureError::NoConvergence { error: last_err, target: cfg.target, value: prev });
    }
    Ok(QuadratureResult {
        value: prev[0],
        values: prev,
        error: last_err,
        abs_errors: last_abs,
        nodes,
        truncation: reach.iter().cloned().fold(0.0, f64::max),
        plan: Plan { nodes_per_panel: n_used, reach },
    })
}

/// Per output: relative change, or change against `scale` when smaller.
fn max_rel_change(a: &[Complex64], b: &[Complex64], scale: f64) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = (x - y).norm();
            let rel = d / y.norm();
            let abs = if scale > 0.0 { d / scale } else { f64::INFINITY };
            let e = rel.min(abs);
            if e.is_nan() {
                f64::INFINITY
            } else {
                e
            }
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contour::{build_multi_loop, GeometryConfig};
    use crate::integrand::{FnFeature, Unit, WeightFeatures};
    use std::f64::consts::TAU;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn empty_power() -> PowerProduct {
        PowerProduct { linear: c(0.0, 0.0), constant: c(0.0, 0.0), points: vec![], pair: c(0.0, 0.0) }
    }

    #[test]
    fn constant_over_closed_keyhole_vanishes() {
        let path = LoopPath::new(c(0.0, 0.0), 0.5, 0.0, 0.0, 10.0).unwrap();
        let chain = Chain::single(path, &[]);
        let cfg = QuadratureConfig { truncation: Some(10.0), ..Default::default() };
        let r = integrate_multiloop(&Integrand { power: empty_power(), features: &Unit }, &chain, &cfg).unwrap();
        assert!(r.value.norm() < 1e-12);
    }

    #[test]
    fn simple_pole_gives_minus_two_pi_i() {
        let contour = build_multi_loop(None, 1, 0, &GeometryConfig::default()).unwrap().assign_base_args().unwrap();
        let chain = Chain::from_contour(&contour).unwrap();
        let power = PowerProduct {
            linear: c(-1.0, 0.0),
            constant: c(0.0, 0.0),
            points: vec![(c(0.0, 0.0), c(-1.0, 0.0))],
            pair: c(0.0, 0.0),
        };
        let r = integrate_multiloop(&Integrand { power, features: &Unit }, &chain, &QuadratureConfig::default()).unwrap();
        // e^{-t}/(-t) around 0 counterclockwise: -2 pi i times the residue of e^{-t}/t
        assert!((r.value - c(0.0, -TAU)).norm() < 1e-9, "{}", r.value);
    }

    #[test]
    fn integration_is_linear_on_shared_grids() {
        let contour = build_multi_loop(Some(c(1.0, 2.0)), 2, 1, &GeometryConfig::default()).unwrap().assign_base_args().unwrap();
        let chain = Chain::from_contour(&contour).unwrap();
        let power = PowerProduct::master(c(1.0, 2.0), c(2.3, 0.0), c(1.0, 0.0), 2.5);
        let plan = Plan { nodes_per_panel: 8, reach: vec![40.0, 40.0] };
        let cfg = QuadratureConfig::default();
        let (alpha, beta) = (c(0.3, -1.2), c(2.0, 0.5));
        let f = FnFeature(|t: Complex64| 1.0 / (0.5 - t));
        let g = FnFeature(|t: Complex64| t * t);
        let h = FnFeature(|t: Complex64| alpha / (0.5 - t) + beta * t * t);
        let run = |feat: &dyn Features| integrate_with_plan(&Integrand { power: power.clone(), features: feat }, &chain, &plan, &cfg).unwrap();
        // the product structure makes h ⊗ h, so compare one loop at a time via l = 1
        let one = build_multi_loop(Some(c(1.0, 2.0)), 1, 1, &GeometryConfig::default()).unwrap().assign_base_args().unwrap();
        let chain1 = Chain::from_contour(&one).unwrap();
        let plan1 = Plan { nodes_per_panel: 8, reach: vec![40.0] };
        let run1 = |feat: &dyn Features| integrate_with_plan(&Integrand { power: power.clone(), features: feat }, &chain1, &plan1, &cfg).unwrap()[0];
        let lhs = run1(&h);
        let rhs = alpha * run1(&f) + beta * run1(&g);
        assert!((lhs - rhs).norm() <= 1e-12 * lhs.norm());
        // weights: the X^1 coefficient is linear in the second feature
        let w = WeightFeatures { first: c(0.0, 0.0), second: c(1.0, 2.0) };
        let v = run(&w);
        assert_eq!(v.len(), 3);
    }

    #[test]
    fn doubled_truncation_is_stable() {
        let contour = build_multi_loop(Some(c(1.0, 2.0)), 2, 1, &GeometryConfig::default()).unwrap().assign_base_args().unwrap();
        let chain = Chain::from_contour(&contour).unwrap();
        let power = PowerProduct::master(c(1.0, 2.0), c(2.3, 0.0), c(1.0, 0.0), 2.5);
        let w = WeightFeatures { first: c(0.0, 0.0), second: c(1.0, 2.0) };
        let integrand = Integrand { power, features: &w };
        let cfg = QuadratureConfig::default();
        let r = integrate_multiloop(&integrand, &chain, &cfg).unwrap();
        let doubled: Vec<f64> = r.plan.reach.iter().map(|x| 2.0 * x).collect();
        let v = integrate_with_plan(&integrand, &chain, &Plan { nodes_per_panel: r.plan.nodes_per_panel, reach: doubled }, &cfg).unwrap();
        for (a, b) in r.values.iter().zip(&v) {
            assert!((a - b).norm() <= 1e-8 * a.norm());
        }
    }

    #[test]
    fn refinement_error_does_not_jump() {
        let contour = build_multi_loop(None, 2, 0, &GeometryConfig::default()).unwrap().assign_base_args().unwrap();
        let chain = Chain::from_contour(&contour).unwrap();
        let power = PowerProduct {
            linear: c(-0.4, 0.0),
            constant: c(0.0, 0.0),
            points: vec![(c(0.0, 0.0), c(-1.28, 0.0))],
            pair: c(0.8, 0.0),
        };
        let integrand = Integrand { power, features: &Unit };
        let cfg = QuadratureConfig::default();
        let reach = truncation_rule(&integrand.power, &chain, 40.0).unwrap();
        let mut prev: Option<Complex64> = None;
        let mut errs = Vec::new();
        for k in 0..4 {
            let v = integrate_with_plan(&integrand, &chain, &Plan { nodes_per_panel: cfg.nodes_at(k), reach: reach.clone() }, &cfg).unwrap()[0];
            if let Some(p) = prev {
                errs.push((v - p).norm() / v.norm());
            }
            prev = Some(v);
        }
        for w in errs.windows(2) {
            assert!(w[1] <= 10.0 * w[0], "{errs:?}");
        }
    }

    #[test]
    fn thread_count_does_not_change_bits() {
        let contour = build_multi_loop(None, 3, 0, &GeometryConfig::default()).unwrap().assign_base_args().unwrap();
        let chain = Chain::from_contour(&contour).unwrap();
        let power = PowerProduct {
            linear: c(-0.4, 0.0),
            constant: c(0.0, 0.0),
            points: vec![(c(0.0, 0.0), c(-1.28, 0.0))],
            pair: c(0.8, 0.0),
        };
        let integrand = Integrand { power, features: &Unit };
        let plan = Plan { nodes_per_panel: 6, reach: vec![30.0; 3] };
        let cfg = QuadratureConfig::default();
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let three = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let a = one.install(|| integrate_with_plan(&integrand, &chain, &plan, &cfg).unwrap());
        let b = three.install(|| integrate_with_plan(&integrand, &chain, &plan, &cfg).unwrap());
        assert_eq!(a, b);
    }
}
