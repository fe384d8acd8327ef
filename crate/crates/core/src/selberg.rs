//! Selberg-type loop integrals `J_l(m)`: closed form and quadrature.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::contour::{build_multi_loop, GeometryConfig};
use crate::error::{Error, MathError};
use crate::integrand::{PowerProduct, Unit};
use crate::quadrature::{integrate_multiloop, Chain, Integrand, QuadratureConfig, QuadratureResult};
use crate::special::checked_gamma;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelbergParams {
    pub l: usize,
    pub m: Complex64,
    pub kappa: f64,
}

impl SelbergParams {
    pub fn new(l: usize, m: Complex64, kappa: f64) -> Result<Self, MathError> {
        let p = SelbergParams { l, m, kappa };
        p.factors()?;
        Ok(p)
    }

    /// Gamma values `(Γ(1 + (m-j)/κ), Γ(1 - (j+1)/κ))` for `j < l`.
    fn factors(&self) -> Result<Vec<(Complex64, Complex64)>, MathError> {
        let k = self.kappa;
        (0..self.l)
            .map(|j| {
                let a = checked_gamma(1.0 + (self.m - j as f64) / k)?;
                let b = checked_gamma(Complex64::new(1.0 - (j as f64 + 1.0) / k, 0.0))?;
                Ok((a, b))
            })
            .collect()
    }
}

/// `J_l(m) = κ^{l(l-1-m)/κ} ∏_{j<l} (-2πi Γ(1-1/κ)) / (Γ(1+(m-j)/κ) Γ(1-(j+1)/κ))`.
pub fn selberg_closed(p: &SelbergParams) -> Result<Complex64, MathError> {
    let k = p.kappa;
    let l = p.l as f64;
    let g1 = checked_gamma(Complex64::new(1.0 - 1.0 / k, 0.0))?;
    let num = Complex64::new(0.0, -2.0 * PI) * g1;
    let mut acc = (k.ln() * l * (l - 1.0 - p.m) / k).exp();
    for (a, b) in p.factors()? {
        acc *= num / (a * b);
    }
    Ok(acc)
}

/// The Selberg integrand `e^{-Σs/κ} ∏(-s_u)^{-1-m/κ} ∏(s_u-s_v)^{2/κ}`.
pub fn selberg_power(p: &SelbergParams) -> PowerProduct {
    let k = p.kappa;
    PowerProduct {
        linear: Complex64::new(-1.0 / k, 0.0),
        constant: Complex64::new(0.0, 0.0),
        points: vec![(Complex64::new(0.0, 0.0), -1.0 - p.m / k)],
        pair: Complex64::new(2.0 / k, 0.0),
    }
}

/// `J_l(m)` by quadrature over nested loops around `0`.
pub fn selberg_numeric(p: &SelbergParams, cfg: &QuadratureConfig) -> Result<QuadratureResult, Error> {
    selberg_numeric_with(p, cfg, &GeometryConfig::default())
}

pub fn selberg_numeric_with(p: &SelbergParams, cfg: &QuadratureConfig, geometry: &GeometryConfig) -> Result<QuadratureResult, Error> {
    let contour = build_multi_loop(None, p.l, 0, geometry)?.assign_base_args()?;
    let chain = Chain::from_contour(&contour)?;
    let integrand = Integrand { power: selberg_power(p), features: &Unit };
    Ok(integrate_multiloop(&integrand, &chain, cfg)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::{digamma, gamma};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn empty_selberg_is_one() {
        let p = SelbergParams::new(0, c(0.7, 0.0), 2.5).unwrap();
        assert_eq!(selberg_closed(&p).unwrap(), c(1.0, 0.0));
        assert!((selberg_numeric(&p, &QuadratureConfig::default()).unwrap().value - 1.0).norm() < 1e-15);
    }

    #[test]
    fn one_loop_closed_form_reduces() {
        // the j = 0 Gamma(1 - 1/κ) factors cancel
        for &(m, k) in &[(c(0.7, 0.0), 2.5), (c(1.4, 0.3), 3.7)] {
            let p = SelbergParams::new(1, m, k).unwrap();
            let want = (-m / k * k.ln()).exp() * c(0.0, -2.0 * PI) / gamma(1.0 + m / k);
            assert!((selberg_closed(&p).unwrap() - want).norm() < 1e-14 * want.norm());
        }
    }

    #[test]
    fn one_and_two_loops_match_quadrature() {
        let cfg = QuadratureConfig::default();
        let p = SelbergParams::new(1, c(0.7, 0.0), 2.5).unwrap();
        let r = selberg_numeric(&p, &cfg).unwrap();
        let want = selberg_closed(&p).unwrap();
        assert!((r.value - want).norm() / want.norm() < 1e-8, "{} vs {want}", r.value);
        let p = SelbergParams::new(2, c(0.7, 0.0), 2.5).unwrap();
        let r = selberg_numeric(&p, &cfg).unwrap();
        let want = selberg_closed(&p).unwrap();
        assert!((r.value - want).norm() / want.norm() < 1e-6, "{} vs {want}", r.value);
    }

    #[test]
    fn closed_form_derivative_in_m_matches_digamma() {
        // d/dm log J_l = Σ_j [-ln κ / κ - ψ(1 + (m-j)/κ) / κ]
        let (l, k) = (3usize, 3.7);
        let m = c(1.4, 0.3);
        let p = |m| SelbergParams::new(l, m, k).unwrap();
        let h = 1e-5;
        let fd = (selberg_closed(&p(m + h)).unwrap() - selberg_closed(&p(m - h)).unwrap()) / (2.0 * h);
        let j0 = selberg_closed(&p(m)).unwrap();
        let mut dlog = c(-(l as f64) * k.ln() / k, 0.0);
        for j in 0..l {
            dlog -= digamma(1.0 + (m - j as f64) / k) / k;
        }
        let want = j0 * dlog;
        assert!((fd - want).norm() / want.norm() < 1e-6);
    }

    #[test]
    fn poles_are_rejected() {
        // 1 + (m - 0)/κ = 0
        assert!(SelbergParams::new(1, c(-2.5, 0.0), 2.5).is_err());
    }
}
