//! Plumbing shared by the `hyperdual` binary, the C ABI and the acceptance
//! suite: complex-number parsing, report envelopes, and the check runners.

use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::asympt::saddle_check;
use crate::contour::SteepestKind;
use crate::error::Error;
use crate::glrep::{compatibility_check, duality_intertwine_check, Point};
use crate::hyperint::{corollary_ratio, duality_gap, integral_k_column, IntegralSettings};
use crate::model::{CheckReport, ReportValue, WeightData};
use crate::ode::{asymptotic_check, ode_convergence, point_for_argument, solution_check, SolutionCheckConfig};
use crate::quadrature::QuadratureConfig;
use crate::selberg::{selberg_closed, selberg_numeric, SelbergParams};

pub const SCHEMA: u32 = 1;

/// Environment variable capping the number of worker threads.
pub const THREADS_VAR: &str = "HYPERDUAL_THREADS";

/// Parses `a`, `bi`, `a+bi` or `a-bi` (no whitespace; `i` alone means 1i).
pub fn parse_complex(s: &str) -> Result<Complex64, Error> {
    let bad = || Error::Config(format!("cannot parse complex number {s:?}; expected a+bi"));
    let num = |t: &str| t.parse::<f64>().map_err(|_| bad());
    let unit = |t: &str| match t {
        "" | "+" => Ok(1.0),
        "-" => Ok(-1.0),
        _ => num(t),
    };
    if s.is_empty() || s.chars().any(char::is_whitespace) {
        return Err(bad());
    }
    let Some(body) = s.strip_suffix('i') else {
        return Ok(Complex64::new(num(s)?, 0.0));
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len()).rev().find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    match split {
        Some(k) => Ok(Complex64::new(num(&body[..k])?, unit(&body[k..])?)),
        None => Ok(Complex64::new(0.0, unit(body)?)),
    }
}

/// Worker count from [`THREADS_VAR`], if set.
pub fn threads_from_env() -> Result<Option<usize>, Error> {
    match std::env::var(THREADS_VAR) {
        Ok(v) => v
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .map(Some)
            .ok_or_else(|| Error::Config(format!("{THREADS_VAR}={v:?} is not a positive integer"))),
        Err(_) => Ok(None),
    }
}

/// Runs `f` on a dedicated pool of `threads` workers.
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T, Error> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {threads} workers: {e}")))?;
    Ok(pool.install(f))
}

/// The JSON document written for one report.
pub fn report_json(report: &CheckReport, runtime: Duration) -> Value {
    let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let mut doc = json!({
        "schema": SCHEMA,
        "check": report.check,
        "params": report.params,
        "values": report.values,
        "max_rel_err": report.max_rel_err,
        "tolerance": report.tolerance,
        "pass": report.pass,
        "runtime_ms": runtime.as_millis() as u64,
        "timestamp": timestamp,
    });
    if !report.conditions.is_empty() {
        doc["conditions"] = json!(report.conditions);
    }
    doc
}

/// [`report_json`] rendered compactly.
pub fn report_json_string(report: &CheckReport, runtime: Duration) -> String {
    report_json(report, runtime).to_string()
}

/// Exit status for a failed run: 2 for rejected input, 1 otherwise.
pub fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::Model(_) | Error::Math(_) => 2,
        _ => 1,
    }
}

fn wd_json(wd: &WeightData) -> Value {
    json!({"m1": [wd.m1.re, wd.m1.im], "m2": wd.m2, "l1": [wd.l1.re, wd.l1.im], "l2": wd.l2, "kappa": wd.kappa})
}

pub fn selberg_check(l: usize, m: Complex64, kappa: f64, cfg: &QuadratureConfig, tolerance: f64) -> Result<CheckReport, Error> {
    let p = SelbergParams::new(l, m, kappa)?;
    let closed = selberg_closed(&p)?;
    let numeric = selberg_numeric(&p, cfg)?;
    let mut r = CheckReport::new("selberg-check", json!({"l": l, "m": [m.re, m.im], "kappa": kappa}), tolerance);
    r.push(ReportValue::new("numeric", numeric.value, numeric.error * numeric.value.norm()));
    r.push(ReportValue::new("closed", closed, 0.0));
    r.record_error((numeric.value - closed).norm() / closed.norm());
    Ok(r)
}

/// `K_{a,b}(m-side) / K_{a,b}(l-side)` against the closed-form ratio for every entry.
pub fn corollary_check(z: Complex64, wd: &WeightData, settings: &IntegralSettings, tolerance: f64) -> Result<CheckReport, Error> {
    let mut r = CheckReport::new("corollary-check", json!({"z": [z.re, z.im], "weights": wd_json(wd)}), tolerance);
    for b in 0..=wd.dim() {
        let direct = integral_k_column(b, z, wd, settings)?;
        let dual = integral_k_column(b, z, &wd.swapped(), settings)?;
        let want = corollary_ratio(b, wd)?;
        r.push(ReportValue::new(format!("ratio b={b}"), want, 0.0));
        for a in 0..=wd.dim() {
            let q = direct.values[a] / dual.values[a];
            r.push(ReportValue::new(format!("K[{a},{b}]/K_dual[{a},{b}]"), q, 0.0));
            r.record_error((q / want - 1.0).norm());
        }
    }
    Ok(r)
}

/// A random evaluation point with `|z1 - z2|, |λ1 - λ2| >= 0.5`.
pub fn random_point(rng: &mut ChaCha8Rng) -> Point {
    let draw = |rng: &mut ChaCha8Rng| Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
    let pair = |rng: &mut ChaCha8Rng| loop {
        let (u, v) = (draw(rng), draw(rng));
        if (u - v).norm() >= 0.5 {
            return (u, v);
        }
    };
    let (z1, z2) = pair(rng);
    let (lambda1, lambda2) = pair(rng);
    Point::new(z1, z2, lambda1, lambda2)
}

/// Compatibility and intertwining of the KZ and dynamical operators at random points.
pub fn glrep_check(wd: &WeightData, points: usize, seed: u64, tolerance: f64) -> Result<CheckReport, Error> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut parts = Vec::with_capacity(2 * points);
    for _ in 0..points {
        let p = random_point(&mut rng);
        parts.push(compatibility_check(&p, wd, tolerance)?);
        parts.push(duality_intertwine_check(&p, wd, tolerance)?);
    }
    let mut r = CheckReport::combine("glrep-check", json!({"weights": wd_json(wd), "points": points, "seed": seed}), &parts);
    for p in &parts {
        r.push(ReportValue::real(format!("{} scaled", p.check), p.max_rel_err / p.tolerance));
    }
    Ok(r)
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Weights `(m1, m2, l1, l2)` with `m1 = l1 + l2 - m2`.
pub fn balanced(l1: Complex64, m2: i64, l2: i64, kappa: f64) -> Result<WeightData, Error> {
    Ok(WeightData::new(l1 + (l2 - m2) as f64, m2, l1, l2, kappa)?)
}

/// Acceptance criteria 1 to 8 in order.
pub const CRITERIA: [(usize, &str); 8] = [
    (1, "Selberg calibration"),
    (2, "Duality"),
    (3, "ODE residual"),
    (4, "Large-z asymptotics"),
    (5, "Operator identities"),
    (6, "Solution property"),
    (7, "Corollary ratio"),
    (8, "Steepest descent"),
];

/// Wall-clock budget of a criterion, where one is set.
pub fn budget(n: usize) -> Option<Duration> {
    match n {
        1 => Some(Duration::from_secs(120)),
        2 => Some(Duration::from_secs(600)),
        5 => Some(Duration::from_secs(60)),
        _ => None,
    }
}

/// Runs acceptance criterion `n` (1..=8) at its stated tolerances.
pub fn criterion(n: usize) -> Result<CheckReport, Error> {
    let settings = IntegralSettings::default();
    let z0 = c(1.0, 2.0);
    let std_wd = || balanced(c(1.3, 0.0), 1, 2, 2.5);
    let name = format!("criterion-{n}");
    match n {
        1 => {
            let mut parts = Vec::new();
            for l in 1..=3 {
                for kappa in [2.5, 3.7] {
                    for m in [c(0.7, 0.0), c(1.4, 0.3)] {
                        let tol = if l <= 2 { 1e-6 } else { 1e-4 };
                        parts.push(selberg_check(l, m, kappa, &settings.quadrature, tol)?);
                    }
                }
            }
            Ok(summarize(&name, json!({"cases": parts.len()}), parts))
        }
        2 => {
            let mut parts = Vec::new();
            for (m2, l2) in [(1, 2), (1, 3), (2, 3)] {
                for l1 in [c(1.3, 0.0), c(0.8, 0.5)] {
                    for z in [z0, c(0.0, 3.0)] {
                        let wd = balanced(l1, m2, l2, 2.5)?;
                        let tol = if m2.max(l2) <= 2 { 1e-5 } else { 1e-4 };
                        parts.push(duality_gap(z, &wd, &settings, tol)?);
                    }
                }
            }
            Ok(summarize(&name, json!({"cases": parts.len()}), parts))
        }
        3 => {
            let r = ode_convergence(z0, &std_wd()?, &[1e-2, 5e-3, 2.5e-3], &settings, 1e-5)?;
            Ok(summarize(&name, json!({}), vec![r]))
        }
        4 => {
            let r = asymptotic_check(&std_wd()?, c(0.0, 40.0), c(0.0, 80.0), (1.5, 3.0), &settings)?;
            Ok(summarize(&name, json!({}), vec![r]))
        }
        5 => {
            let mut parts = Vec::new();
            for (m2, l2) in [(1, 2), (2, 2), (2, 3)] {
                parts.push(glrep_check(&balanced(c(1.3, 0.2), m2, l2, 2.5)?, 20, 5 + m2 as u64 * 10 + l2 as u64, 1e-10)?);
            }
            Ok(summarize(&name, json!({}), parts))
        }
        6 => {
            let wd = std_wd()?;
            let p = point_for_argument(z0);
            let mut parts = Vec::new();
            for b in 0..=1 {
                parts.push(solution_check(&wd, b, &p, &settings, &SolutionCheckConfig::default())?);
            }
            Ok(summarize(&name, json!({}), parts))
        }
        7 => Ok(summarize(&name, json!({}), vec![corollary_check(z0, &std_wd()?, &settings, 1e-5)?])),
        8 => {
            let cfg = &settings.quadrature;
            let parts = vec![
                saddle_check(SteepestKind::Outer, z0, c(0.0, 0.0), 100.0, (1.6, 2.6), cfg)?,
                saddle_check(SteepestKind::Inner, z0, c(0.25, 0.0), 100.0, (1.6, 2.6), cfg)?,
            ];
            Ok(summarize(&name, json!({}), parts))
        }
        _ => Err(Error::Config(format!("no acceptance criterion {n}"))),
    }
}

/// Folds parts into one report, keeping their values under prefixed labels.
fn summarize(name: &str, params: Value, parts: Vec<CheckReport>) -> CheckReport {
    let mut r = CheckReport::combine(name, json!({"params": params, "parts": parts.iter().map(|p| &p.params).collect::<Vec<_>>()}), &parts);
    for (k, p) in parts.iter().enumerate() {
        for v in &p.values {
            r.push(ReportValue { label: format!("{k}:{}:{}", p.check, v.label), ..v.clone() });
        }
        r.push(ReportValue::real(format!("{k}:{}:max_rel_err", p.check), p.max_rel_err));
    }
    r
}

/// Outcome of one criterion in [`run_all`].
#[derive(Debug, Clone)]
pub struct Outcome {
    pub number: usize,
    pub name: &'static str,
    pub report: Result<CheckReport, Error>,
    pub runtime: Duration,
}

impl Outcome {
    /// Passed its check and stayed within its budget.
    pub fn pass(&self) -> bool {
        self.report.as_ref().is_ok_and(|r| r.pass) && budget(self.number).is_none_or(|b| self.runtime <= b)
    }

    pub fn line(&self) -> String {
        let detail = match &self.report {
            Ok(r) => format!("max_rel_err/tol {:.2e}", r.max_rel_err),
            Err(e) => format!("error: {e}"),
        };
        let budget = budget(self.number).map(|b| format!(" (budget {} s)", b.as_secs())).unwrap_or_default();
        format!(
            "criterion {} [{}] {}: {detail}, {:.1} s{budget}",
            self.number,
            self.name,
            if self.pass() { "PASS" } else { "FAIL" },
            self.runtime.as_secs_f64()
        )
    }
}

/// Criteria 1 to 8, each timed; `progress` sees every outcome as it lands.
pub fn run_all(mut progress: impl FnMut(&Outcome)) -> Vec<Outcome> {
    CRITERIA
        .iter()
        .map(|&(number, name)| {
            let start = Instant::now();
            let report = criterion(number);
            let out = Outcome { number, name, report, runtime: start.elapsed() };
            progress(&out);
            out
        })
        .collect()
}

/// The single report written by `all`.
pub fn all_report(outcomes: &[Outcome]) -> CheckReport {
    let parts: Vec<CheckReport> = outcomes
        .iter()
        .map(|o| match &o.report {
            Ok(r) => {
                let mut r = r.clone();
                if let Some(b) = budget(o.number) {
                    r.require(format!("within {} s", b.as_secs()), o.runtime <= b);
                }
                r
            }
            Err(e) => {
                let mut r = CheckReport::new(format!("criterion-{}", o.number), json!({"error": e.to_string()}), 1.0);
                r.require("ran", false);
                r
            }
        })
        .collect();
    summarize("all", json!({"criteria": outcomes.len()}), parts)
}

/// Numeric fields of a report, for comparing runs.
pub fn numeric_fields(r: &CheckReport) -> Value {
    json!({"values": r.values, "max_rel_err": r.max_rel_err, "pass": r.pass})
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_the_complex_grammar() {
        assert_eq!(parse_complex("1+2i").unwrap(), c(1.0, 2.0));
        assert_eq!(parse_complex("0.8-0.5i").unwrap(), c(0.8, -0.5));
        assert_eq!(parse_complex("3i").unwrap(), c(0.0, 3.0));
        assert_eq!(parse_complex("-i").unwrap(), c(0.0, -1.0));
        assert_eq!(parse_complex("1+i").unwrap(), c(1.0, 1.0));
        assert_eq!(parse_complex("2.5").unwrap(), c(2.5, 0.0));
        assert_eq!(parse_complex("-1e-3+2E+1i").unwrap(), c(-1e-3, 20.0));
        assert_eq!(parse_complex("1e-3i").unwrap(), c(0.0, 1e-3));
        for bad in ["", "1 + 2i", "1+2j", "abc", "1+-2i", "i2"] {
            assert!(parse_complex(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn json_envelope_has_the_schema_fields() {
        let mut r = CheckReport::new("x", json!({}), 1e-6);
        r.push(ReportValue::new("v", c(1.0, -1.0), 0.0));
        let doc = report_json(&r, Duration::from_millis(12));
        for key in ["schema", "check", "params", "values", "max_rel_err", "tolerance", "pass", "runtime_ms", "timestamp"] {
            assert!(doc.get(key).is_some(), "{key}");
        }
        assert_eq!(doc["values"][0]["im"], json!(-1.0));
        assert_eq!(doc["runtime_ms"], json!(12));
    }

    #[test]
    fn config_errors_exit_with_two() {
        let wd = balanced(c(1.3, 0.0), 1, 2, 2.5).unwrap();
        let err = duality_gap(c(1.0, -2.0), &wd, &IntegralSettings::default(), 1e-5).unwrap_err();
        assert_eq!(exit_code_for(&err), 2);
        assert_eq!(exit_code_for(&Error::Ode(crate::error::OdeError::StepUnderflow(0.1))), 1);
    }

    #[test]
    fn random_points_are_separated_and_reproducible() {
        let mut a = ChaCha8Rng::seed_from_u64(3);
        let mut b = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let (p, q) = (random_point(&mut a), random_point(&mut b));
            assert_eq!(p, q);
            assert!((p.z1 - p.z2).norm() >= 0.5 && (p.lambda1 - p.lambda2).norm() >= 0.5);
        }
    }

    #[test]
    fn small_checks_pass() {
        assert!(selberg_check(1, c(0.7, 0.0), 2.5, &QuadratureConfig::default(), 1e-6).unwrap().pass);
        let wd = balanced(c(1.3, 0.0), 1, 2, 2.5).unwrap();
        assert!(glrep_check(&wd, 3, 1, 1e-10).unwrap().pass);
    }

    #[test]
    fn unknown_criterion_is_a_config_error() {
        assert_eq!(exit_code_for(&criterion(42).unwrap_err()), 2);
    }
}
