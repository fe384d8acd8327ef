//! Truncated loop contours: nested multi-loops around `0` and `z`, and the
//! two single loops used for the saddle-point study.
//!
//! Every loop comes in from its truncation point along one ray, turns
//! counterclockwise around its center on a circular arc and leaves along a
//! second ray. Rays of nested loops leave the center at distinct angles so
//! that loops stay separated by a fixed angle all the way out; the group of
//! loops around `0` is tilted below the group around `z`.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::GeometryError;

/// Gauss–Legendre panel layout used to discretize a loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PanelRule {
    pub nodes_per_panel: usize,
    /// Panel width along a ray, measured in `ln |t - center|`.
    pub ray_width: f64,
    /// Panel width along the arc, in radians.
    pub arc_width: f64,
    /// Rate of the exponential factor `|d/dt log f|`; panels are narrowed so
    /// that the exponent changes by at most [`DECAY_STEP`] per panel. Zero disables.
    pub decay: f64,
}

/// Largest change of the exponential factor's exponent across one panel.
pub const DECAY_STEP: f64 = 4.0;

/// A quadrature node on a loop: position, complex weight (including `dt`)
/// and the loop parameter `tau` in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node {
    pub tau: f64,
    pub t: Complex64,
    pub w: Complex64,
}

/// One loop: incoming ray, counterclockwise arc of radius `radius`, outgoing ray.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoopPath {
    pub center: Complex64,
    pub radius: f64,
    /// Bisector of the two rays.
    pub direction: f64,
    /// Rays leave at `direction ± half_opening`.
    pub half_opening: f64,
    /// Distance from the center at which both rays are truncated.
    pub reach: f64,
}

impl LoopPath {
    pub fn new(center: Complex64, radius: f64, direction: f64, half_opening: f64, reach: f64) -> Result<Self, GeometryError> {
        let p = LoopPath { center, radius, direction, half_opening, reach };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<(), GeometryError> {
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(GeometryError::Invalid(format!("radius {} must be positive", self.radius)));
        }
        if !(self.reach > self.radius) {
            return Err(GeometryError::Invalid(format!(
                "truncation {} must exceed the loop radius {}",
                self.reach, self.radius
            )));
        }
        if self.half_opening < 0.0 || self.direction.abs() + self.half_opening >= PI / 2.0 {
            return Err(GeometryError::Invalid("rays must point into the right half-plane".into()));
        }
        Ok(())
    }

    pub fn angle_in(&self) -> f64 {
        self.direction + self.half_opening
    }

    pub fn angle_out(&self) -> f64 {
        self.direction - self.half_opening
    }

    pub fn arc_span(&self) -> f64 {
        TAU - 2.0 * self.half_opening
    }

    fn polar(&self, rho: f64, angle: f64) -> Complex64 {
        self.center + Complex64::from_polar(rho, angle)
    }

    /// Point at loop parameter `tau`: `[0, 1/3]` incoming ray, `[1/3, 2/3]`
    /// arc, `[2/3, 1]` outgoing ray. Rays are parametrized by `ln rho`.
    pub fn point(&self, tau: f64) -> Complex64 {
        let tau = tau.clamp(0.0, 1.0);
        let (lr, lt) = (self.radius.ln(), self.reach.ln());
        if tau <= 1.0 / 3.0 {
            let s = 3.0 * tau;
            self.polar((lt + (lr - lt) * s).exp(), self.angle_in())
        } else if tau <= 2.0 / 3.0 {
            let s = 3.0 * tau - 1.0;
            self.polar(self.radius, self.angle_in() + self.arc_span() * s)
        } else {
            let s = 3.0 * tau - 2.0;
            self.polar((lr + (lt - lr) * s).exp(), self.angle_out())
        }
    }

    /// Parameter of the arc point opposite the rays (angle pi from the center):
    /// the point where `center - t` is a positive real number.
    pub fn reference_tau(&self) -> f64 {
        let mut phi = PI;
        while phi < self.angle_in() {
            phi += TAU;
        }
        while phi > self.angle_in() + self.arc_span() {
            phi -= TAU;
        }
        1.0 / 3.0 + (phi - self.angle_in()) / self.arc_span() / 3.0
    }

    pub fn reference_point(&self) -> Complex64 {
        self.point(self.reference_tau())
    }

    /// Breakpoints in `ln rho` along a ray, from `ln radius` to `ln reach`.
    /// Panels shrink where `decay * rho` makes the exponential factor vary fast.
    fn ray_breaks(&self, rule: &PanelRule) -> Vec<f64> {
        let (lr, lt) = (self.radius.ln(), self.reach.ln());
        let mut out = vec![lr];
        let mut s = lr;
        while s < lt {
            let mut h = rule.ray_width;
            if rule.decay > 0.0 {
                h = h.min(DECAY_STEP / (rule.decay * s.exp()));
            }
            s = (s + h).min(lt);
            if lt - s < 0.25 * h {
                s = lt;
            }
            out.push(s);
        }
        out
    }

    /// Gauss–Legendre nodes in loop order (increasing `tau`).
    pub fn discretize(&self, rule: &PanelRule) -> Vec<Node> {
        let (x, w) = crate::special::gauss_legendre(rule.nodes_per_panel);
        let (lr, lt) = (self.radius.ln(), self.reach.ln());
        let ray_len = lt - lr;
        let breaks = self.ray_breaks(rule);
        let span = self.arc_span();
        let mut arc_panels = (span / rule.arc_width).ceil();
        if rule.decay > 0.0 {
            arc_panels = arc_panels.max((span * rule.decay * self.radius / DECAY_STEP).ceil());
        }
        let arc_panels = (arc_panels as usize).max(1);
        let mut out = Vec::with_capacity((2 * breaks.len() + arc_panels) * x.len());

        // incoming: ln rho decreasing from lt to lr
        for p in (0..breaks.len() - 1).rev() {
            let (a, b) = (breaks[p], breaks[p + 1]);
            for k in (0..x.len()).rev() {
                let s = a + 0.5 * (b - a) * (x[k] + 1.0);
                let t = self.polar(s.exp(), self.angle_in());
                let frac = (lt - s) / ray_len;
                out.push(Node { tau: frac / 3.0, t, w: -(0.5 * (b - a) * w[k]) * (t - self.center) });
            }
        }
        let ha = span / arc_panels as f64;
        for p in 0..arc_panels {
            for k in 0..x.len() {
                let phi = ha * (p as f64 + 0.5 * (x[k] + 1.0));
                let t = self.polar(self.radius, self.angle_in() + phi);
                let dt = Complex64::i() * (t - self.center);
                out.push(Node { tau: (1.0 + phi / span) / 3.0, t, w: 0.5 * ha * w[k] * dt });
            }
        }
        for p in 0..breaks.len() - 1 {
            let (a, b) = (breaks[p], breaks[p + 1]);
            for k in 0..x.len() {
                let s = a + 0.5 * (b - a) * (x[k] + 1.0);
                let t = self.polar(s.exp(), self.angle_out());
                let frac = (s - lr) / ray_len;
                out.push(Node { tau: (2.0 + frac) / 3.0, t, w: 0.5 * (b - a) * w[k] * (t - self.center) });
            }
        }
        out
    }

    /// Points along the loop, geometric on the rays, for separation checks.
    pub fn sample(&self, per_segment: usize) -> Vec<Complex64> {
        let n = per_segment.max(2);
        (0..=3 * n).map(|k| self.point(k as f64 / (3 * n) as f64)).collect()
    }

    /// Winding number about `p` of the loop closed by the far arc of radius `reach`.
    pub fn winding_number(&self, p: Complex64) -> i32 {
        let mut pts = self.sample(400);
        let far = 64;
        for k in 1..far {
            let a = self.angle_out() + 2.0 * self.half_opening * k as f64 / far as f64;
            pts.push(self.polar(self.reach, a));
        }
        pts.push(pts[0]);
        let mut total = 0.0;
        for pair in pts.windows(2) {
            let d = ((pair[1] - p) / (pair[0] - p)).arg();
            total += d;
        }
        (total / TAU).round() as i32
    }
}

/// Radii, angles and truncation of a multi-loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometryConfig {
    /// Radius of the innermost loop in each group; default `0.1 min(1, |z|)`.
    pub radius_base: Option<f64>,
    /// Ratio between consecutive radii in a group.
    pub radius_ratio: f64,
    /// All rays stay within `[-angle_budget, angle_budget]`.
    pub angle_budget: f64,
    /// Upper bound on the angle between rays of neighbouring loops.
    pub max_ray_spacing: f64,
    /// Fixed truncation distance; otherwise chosen from the integrand.
    pub truncation: Option<f64>,
    /// Angular window `(lo, hi)` for the rays of a lone group of `0`-loops.
    pub zero_window: Option<(f64, f64)>,
    /// Angular window for the rays of a lone group of `z`-loops.
    pub z_window: Option<(f64, f64)>,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        GeometryConfig {
            radius_base: None,
            radius_ratio: 1.8,
            angle_budget: 1.0,
            max_ray_spacing: 0.6,
            truncation: None,
            zero_window: None,
            z_window: None,
        }
    }
}

/// Smallest angle kept between the rays of a lone group and the direction
/// of the other center.
pub const CLEARANCE_ANGLE: f64 = 0.5;

impl GeometryConfig {
    /// Sets unset windows so that a lone group of loops sends its rays at
    /// least [`CLEARANCE_ANGLE`] away from the other center.
    pub fn avoiding(mut self, z: Complex64) -> Self {
        let t = self.angle_budget;
        if self.zero_window.is_none() {
            self.zero_window = Some((-t, t.min(z.arg() - CLEARANCE_ANGLE)));
        }
        if self.z_window.is_none() {
            self.z_window = Some(((-t).max((-z).arg() + CLEARANCE_ANGLE), t));
        }
        self
    }

    /// Fixes every `z`-dependent default at `z`, so that nearby points get
    /// congruent loops.
    pub fn frozen_at(mut self, z: Complex64) -> Self {
        if self.radius_base.is_none() {
            self.radius_base = Some(0.1 * z.norm().min(1.0));
        }
        self.avoiding(z)
    }
}

/// Provisional truncation before the integrand-driven rule is applied.
pub const PROVISIONAL_REACH: f64 = 50.0;

/// Branch arguments of every linear factor at the reference point, where
/// each loop sits opposite its rays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseArgs {
    /// `arg(-t_u)`.
    pub neg: Vec<f64>,
    /// `arg(z - t_u)`; empty when the contour has no `z`.
    pub z_minus: Vec<f64>,
    /// `arg(t_u - t_v)` for `u < v`, indexed `[u][v]`.
    pub pair: Vec<Vec<f64>>,
}

/// `l` nested loops: loops `0..b` around `z`, loops `b..l` around `0`
/// (zero-based; inner loops first within each group).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiLoopContour {
    pub z: Option<Complex64>,
    pub l: usize,
    pub b: usize,
    pub loops: Vec<LoopPath>,
    pub base_args: Option<BaseArgs>,
}

fn group_layout(count: usize, spacing: f64, direction: f64, center: Complex64, r0: f64, ratio: f64, reach: f64) -> Result<Vec<LoopPath>, GeometryError> {
    (0..count)
        .map(|k| {
            let radius = r0 * ratio.powi(k as i32);
            LoopPath::new(center, radius, direction, (k as f64 + 0.5) * spacing, reach.max(4.0 * radius))
        })
        .collect()
}

/// Builds `gamma_{l,b}(z)` (or `delta_l` when `z` is `None` and `b = 0`).
pub fn build_multi_loop(z: Option<Complex64>, l: usize, b: usize, geometry: &GeometryConfig) -> Result<MultiLoopContour, GeometryError> {
    if b > l {
        return Err(GeometryError::Invalid(format!("b = {b} exceeds l = {l}")));
    }
    if b > 0 {
        match z {
            Some(z) if z.im > 0.0 => {}
            Some(_) => return Err(GeometryError::Invalid("loops around z need Im z > 0".into())),
            None => return Err(GeometryError::Invalid("loops around z need a value of z".into())),
        }
    }
    if !(geometry.radius_ratio > 1.0) {
        return Err(GeometryError::Invalid("radius ratio must exceed 1".into()));
    }
    let r0 = geometry
        .radius_base
        .unwrap_or_else(|| 0.1 * z.map_or(1.0, |z| z.norm().min(1.0)));
    if !(r0 > 0.0) {
        return Err(GeometryError::Invalid(format!("radius base {r0} must be positive")));
    }
    let reach = geometry.truncation.unwrap_or(PROVISIONAL_REACH);
    let (nz, n0) = (b, l - b);
    let budget = geometry.angle_budget;
    let mut loops = Vec::with_capacity(l);
    if nz > 0 && n0 > 0 {
        let spacing = (2.0 * budget / (2 * l - 1) as f64).min(geometry.max_ray_spacing);
        let up = budget - (nz as f64 - 0.5) * spacing;
        let down = -budget + (n0 as f64 - 0.5) * spacing;
        loops.extend(group_layout(nz, spacing, up, z.unwrap(), r0, geometry.radius_ratio, reach)?);
        loops.extend(group_layout(n0, spacing, down, Complex64::new(0.0, 0.0), r0, geometry.radius_ratio, reach)?);
    } else if l > 0 {
        let (center, window) = if nz > 0 {
            (z.unwrap(), geometry.z_window)
        } else {
            (Complex64::new(0.0, 0.0), geometry.zero_window)
        };
        let (lo, hi) = window.unwrap_or((-budget, budget));
        if !(hi > lo && lo >= -budget && hi <= budget) {
            return Err(GeometryError::Invalid(format!("ray window ({lo}, {hi}) outside the angle budget {budget}")));
        }
        let spacing = ((hi - lo) / (2 * l - 1) as f64).min(geometry.max_ray_spacing);
        loops.extend(group_layout(l, spacing, 0.5 * (lo + hi), center, r0, geometry.radius_ratio, reach)?);
    }
    let contour = MultiLoopContour { z, l, b, loops, base_args: None };
    contour.check_separation()?;
    Ok(contour)
}

impl MultiLoopContour {
    /// The same loops with every ray truncated at `reach`.
    pub fn with_reach(&self, reach: &[f64]) -> Result<Self, GeometryError> {
        let mut out = self.clone();
        for (lp, &r) in out.loops.iter_mut().zip(reach) {
            lp.reach = r;
            lp.validate()?;
        }
        Ok(out)
    }

    /// Samples all loop pairs and rejects contours whose loops touch, and
    /// contours whose `0`-loops enclose `z` or whose `z`-loops enclose `0`.
    pub fn check_separation(&self) -> Result<(), GeometryError> {
        let samples: Vec<Vec<Complex64>> = self.loops.iter().map(|lp| lp.sample(200)).collect();
        for u in 0..self.l {
            for v in (u + 1)..self.l {
                let gap = (self.loops[u].radius - self.loops[v].radius).abs();
                let floor = if self.loops[u].center == self.loops[v].center {
                    0.1 * gap
                } else {
                    0.01 * self.loops[u].radius.min(self.loops[v].radius)
                };
                let mut min = f64::INFINITY;
                for p in &samples[u] {
                    for q in &samples[v] {
                        min = min.min((p - q).norm());
                    }
                }
                if min <= floor {
                    return Err(GeometryError::LoopsTooClose(u, v, min));
                }
            }
        }
        if let Some(z) = self.z {
            for (u, lp) in self.loops.iter().enumerate() {
                let other = if u < self.b { Complex64::new(0.0, 0.0) } else { z };
                if lp.winding_number(other) != 0 {
                    return Err(GeometryError::Invalid(format!("loop {u} encloses the other center")));
                }
                let clearance = samples[u].iter().map(|p| (p - other).norm()).fold(f64::INFINITY, f64::min);
                if clearance <= 0.1 * lp.radius {
                    return Err(GeometryError::Invalid(format!("loop {u} passes too close to the other center")));
                }
            }
        }
        Ok(())
    }

    /// Parameters of the reference point of every loop.
    pub fn reference_taus(&self) -> Vec<f64> {
        self.loops.iter().map(LoopPath::reference_tau).collect()
    }

    /// Fixes the branch of every factor at the reference point, where
    /// `z - t_u > 0` for loops around `z` and `-t_u > 0` for loops around `0`:
    ///
    /// * `arg(-t_u)` in `(-pi, 0)` on `z`-loops and `0` on `0`-loops;
    /// * `arg(z - t_u)` is `0` on `z`-loops and in `(0, pi)` on `0`-loops;
    /// * `arg(t_u - t_v)` is `0` within a group and in `(0, pi)` from a `z`-loop to a `0`-loop.
    ///
    /// All of these are principal values at that point.
    pub fn assign_base_args(mut self) -> Result<Self, GeometryError> {
        let pts: Vec<Complex64> = self.loops.iter().map(LoopPath::reference_point).collect();
        let neg: Vec<f64> = pts.iter().map(|t| (-t).arg()).collect();
        let z_minus: Vec<f64> = match self.z {
            Some(z) => pts.iter().map(|t| (z - t).arg()).collect(),
            None => Vec::new(),
        };
        let mut pair = vec![vec![0.0; self.l]; self.l];
        for u in 0..self.l {
            for v in (u + 1)..self.l {
                pair[u][v] = (pts[u] - pts[v]).arg();
            }
        }
        let eps = 1e-9;
        let open = |a: f64, lo: f64, hi: f64| a > lo && a < hi;
        for u in 0..self.l {
            let in_z = u < self.b;
            let ok_neg = if in_z { open(neg[u], -PI, 0.0) } else { neg[u].abs() < eps };
            let ok_z = z_minus.is_empty() || if in_z { z_minus[u].abs() < eps } else { open(z_minus[u], 0.0, PI) };
            if !(ok_neg && ok_z) {
                return Err(GeometryError::Invalid(format!("branch conditions fail at loop {u}")));
            }
            for v in (u + 1)..self.l {
                let ok = if (u < self.b) == (v < self.b) { pair[u][v].abs() < eps } else { open(pair[u][v], 0.0, PI) };
                if !ok {
                    return Err(GeometryError::Invalid(format!("branch condition fails for pair ({u}, {v})")));
                }
            }
        }
        // snap the conventional zeros
        let mut neg = neg;
        let mut z_minus = z_minus;
        for u in 0..self.l {
            if u < self.b {
                if !z_minus.is_empty() {
                    z_minus[u] = 0.0;
                }
            } else {
                neg[u] = 0.0;
            }
            for v in (u + 1)..self.l {
                if (u < self.b) == (v < self.b) {
                    pair[u][v] = 0.0;
                }
            }
        }
        self.base_args = Some(BaseArgs { neg, z_minus, pair });
        Ok(self)
    }
}

/// Which of the two saddle-point loops.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SteepestKind {
    /// Large loop around both `0` and `z`.
    Outer,
    /// Small loop around `0` only.
    Inner,
}

impl std::str::FromStr for SteepestKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "outer" | "C'" | "Cp" | "c1" => Ok(SteepestKind::Outer),
            "inner" | "C''" | "Cpp" | "c2" => Ok(SteepestKind::Inner),
            other => Err(format!("unknown loop kind {other:?} (expected outer or inner)")),
        }
    }
}

/// A single loop from `+infinity` around `0` (and `z` for the outer kind).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteepestLoop {
    pub kind: SteepestKind,
    pub z: Complex64,
    pub path: LoopPath,
}

/// Default loops: the inner loop is a keyhole around `0` along the positive
/// axis, radius `0.4 min(1, |z|)`; the outer loop has radius `1.5 |z| + 1`
/// and rays at `±pi/4`.
pub fn build_steepest_loop(kind: SteepestKind, z: Complex64, truncation: f64) -> Result<SteepestLoop, GeometryError> {
    if !(z.im > 0.0) {
        return Err(GeometryError::Invalid("saddle loops need Im z > 0".into()));
    }
    let path = match kind {
        SteepestKind::Inner => LoopPath::new(Complex64::new(0.0, 0.0), 0.4 * z.norm().min(1.0), 0.0, 0.0, truncation)?,
        SteepestKind::Outer => LoopPath::new(Complex64::new(0.0, 0.0), 1.5 * z.norm() + 1.0, 0.0, PI / 4.0, truncation)?,
    };
    SteepestLoop::from_path(kind, z, path)
}

impl SteepestLoop {
    pub fn from_path(kind: SteepestKind, z: Complex64, path: LoopPath) -> Result<Self, GeometryError> {
        let around_zero = path.winding_number(Complex64::new(0.0, 0.0));
        let around_z = path.winding_number(z);
        let clearance = path.sample(400).iter().map(|p| (p - z).norm()).fold(f64::INFINITY, f64::min);
        let want_z = match kind {
            SteepestKind::Outer => 1,
            SteepestKind::Inner => 0,
        };
        if around_zero != 1 || around_z != want_z || clearance < 1e-3 * z.norm() {
            return Err(GeometryError::Invalid(format!(
                "{kind:?} loop must wind once around 0 and {want_z} times around z"
            )));
        }
        Ok(SteepestLoop { kind, z, path })
    }

    /// Same loop with a new radius and ray bisector.
    pub fn reshaped(&self, radius: f64, direction: f64, half_opening: f64) -> Result<Self, GeometryError> {
        let path = LoopPath::new(self.path.center, radius, direction, half_opening, self.path.reach.max(2.0 * radius))?;
        SteepestLoop::from_path(self.kind, self.z, path)
    }
}
