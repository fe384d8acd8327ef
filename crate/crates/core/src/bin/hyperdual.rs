use std::fs::File;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use hyperdual::asympt::{dimension_scan, saddle_check, scan_report, write_scan_csv, ScanConfig};
use hyperdual::cli::{
    all_report, balanced, corollary_check, exit_code_for, glrep_check, parse_complex, report_json, run_all, selberg_check, threads_from_env, with_threads,
};
use hyperdual::contour::SteepestKind;
use hyperdual::hyperint::{duality_gap, IntegralSettings};
use hyperdual::model::{CheckReport, WeightData};
use hyperdual::ode::{asymptotic_check, ode_convergence, point_for_argument, solution_check, SolutionCheckConfig};
use hyperdual::quadrature::QuadratureConfig;
use hyperdual::{Complex64, Error};

/// Verifies the identities around loop-contour hypergeometric integrals.
///
/// Complex arguments are written `a+bi` without spaces (`3i`, `-i`, `2.5` also work).
#[derive(Parser)]
#[command(name = "hyperdual", version)]
struct Cli {
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Target relative error of the quadrature.
    #[arg(long, global = true)]
    target: Option<f64>,
    /// Worker threads (overrides HYPERDUAL_THREADS).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Weights {
    /// Defaults to l1 + l2 - m2.
    #[arg(long, value_parser = complex)]
    m1: Option<Complex64>,
    #[arg(long, default_value_t = 1)]
    m2: i64,
    #[arg(long, value_parser = complex, default_value = "1.3")]
    l1: Complex64,
    #[arg(long, default_value_t = 2)]
    l2: i64,
    #[arg(long, default_value_t = 2.5)]
    kappa: f64,
}

impl Weights {
    fn data(&self) -> Result<WeightData, Error> {
        match self.m1 {
            Some(m1) => Ok(WeightData::new(m1, self.m2, self.l1, self.l2, self.kappa)?),
            None => balanced(self.l1, self.m2, self.l2, self.kappa),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    /// Large loop around 0 and z.
    Outer,
    /// Small loop around 0.
    Inner,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Loop-contour Selberg integral against its closed form.
    SelbergCheck {
        #[arg(long)]
        l: usize,
        #[arg(long, value_parser = complex)]
        m: Complex64,
        #[arg(long, default_value_t = 2.5)]
        kappa: f64,
        /// Defaults to 1e-6, or 1e-4 for l >= 3.
        #[arg(long)]
        tolerance: Option<f64>,
    },
    /// I_{a,b} on both sides of the dimension duality.
    DualityCheck {
        #[command(flatten)]
        weights: Weights,
        #[arg(long, value_parser = complex, default_value = "1+2i")]
        z: Complex64,
        /// Defaults to 1e-5, or 1e-4 when a side is 3-dimensional.
        #[arg(long)]
        tolerance: Option<f64>,
    },
    /// Finite-difference residual of the matrix ODE in z.
    OdeCheck {
        #[command(flatten)]
        weights: Weights,
        #[arg(long, value_parser = complex, default_value = "1+2i")]
        z: Complex64,
        #[arg(long, value_delimiter = ',', default_values_t = [1e-2, 5e-3, 2.5e-3])]
        steps: Vec<f64>,
        #[arg(long, default_value_t = 1e-5)]
        tolerance: f64,
    },
    /// Large-z behaviour of Î against its leading term.
    AsymptCheck {
        #[command(flatten)]
        weights: Weights,
        #[arg(long, value_parser = complex, default_value = "40i")]
        near: Complex64,
        #[arg(long, value_parser = complex, default_value = "80i")]
        far: Complex64,
        #[arg(long, default_value_t = 1.5)]
        band_low: f64,
        #[arg(long, default_value_t = 3.0)]
        band_high: f64,
    },
    /// Compatibility and duality of the KZ and dynamical operators.
    GlrepCheck {
        #[command(flatten)]
        weights: Weights,
        #[arg(long, default_value_t = 20)]
        points: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 1e-10)]
        tolerance: f64,
    },
    /// U_b and its ODE-transported counterpart solve the KZ and dynamical equations.
    SolutionCheck {
        #[command(flatten)]
        weights: Weights,
        #[arg(long, default_value_t = 0)]
        b: usize,
        /// Value of the scalar argument at the evaluation point.
        #[arg(long, value_parser = complex, default_value = "1+2i")]
        x: Complex64,
        #[arg(long, default_value_t = 1e-5)]
        tolerance: f64,
    },
    /// K ratios across the duality against the closed-form ratio.
    CorollaryCheck {
        #[command(flatten)]
        weights: Weights,
        #[arg(long, value_parser = complex, default_value = "1+2i")]
        z: Complex64,
        #[arg(long, default_value_t = 1e-5)]
        tolerance: f64,
    },
    /// Saddle-point integral against its leading term at M and 4M.
    SaddleCheck {
        #[arg(long, value_enum, default_value = "outer")]
        kind: Kind,
        #[arg(long, value_parser = complex, default_value = "1+2i")]
        z: Complex64,
        #[arg(long, value_parser = complex, default_value = "0")]
        a: Complex64,
        #[arg(long = "big-m", default_value_t = 100.0)]
        big_m: f64,
        #[arg(long, default_value_t = 1.6)]
        band_low: f64,
        #[arg(long, default_value_t = 2.6)]
        band_high: f64,
    },
    /// K_{a,b} for growing l2 through the fixed-dimension dual side.
    DimScan {
        #[arg(long, value_parser = complex, default_value = "1.3+0.2i")]
        m1: Complex64,
        #[arg(long, default_value_t = 1)]
        m2: usize,
        #[arg(long, default_value_t = 2.7)]
        kappa: f64,
        #[arg(long, value_delimiter = ',', default_values_t = [1, 2, 3, 4, 6, 8, 12, 16, 20])]
        l2: Vec<usize>,
        #[arg(long, value_parser = complex, default_value = "1+2i")]
        z: Complex64,
        #[arg(long, default_value_t = 0)]
        a: usize,
        #[arg(long, default_value_t = 0)]
        b: usize,
        #[arg(long, default_value_t = 3)]
        direct_max: usize,
        #[arg(long, default_value_t = 1e-5)]
        tolerance: f64,
        /// `csv` prints the table; `json` prints the report.
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
        /// Also write the table here.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// The acceptance suite.
    All,
}

fn complex(s: &str) -> Result<Complex64, String> {
    parse_complex(s).map_err(|e| e.to_string())
}

enum Output {
    Report(CheckReport),
    Text(String, bool),
}

fn settings(target: Option<f64>) -> IntegralSettings {
    let mut s = IntegralSettings::default();
    if let Some(t) = target {
        s.quadrature.target = t;
    }
    s
}

fn quadrature(target: Option<f64>) -> QuadratureConfig {
    settings(target).quadrature
}

fn run(command: &Command, target: Option<f64>) -> Result<Output, Error> {
    let report = match command {
        Command::SelbergCheck { l, m, kappa, tolerance } => {
            let tol = tolerance.unwrap_or(if *l <= 2 { 1e-6 } else { 1e-4 });
            selberg_check(*l, *m, *kappa, &quadrature(target), tol)?
        }
        Command::DualityCheck { weights, z, tolerance } => {
            let wd = weights.data()?;
            let tol = tolerance.unwrap_or(if wd.m2.max(wd.l2) <= 2 { 1e-5 } else { 1e-4 });
            duality_gap(*z, &wd, &settings(target), tol)?
        }
        Command::OdeCheck { weights, z, steps, tolerance } => ode_convergence(*z, &weights.data()?, steps, &settings(target), *tolerance)?,
        Command::AsymptCheck { weights, near, far, band_low, band_high } => {
            asymptotic_check(&weights.data()?, *near, *far, (*band_low, *band_high), &settings(target))?
        }
        Command::GlrepCheck { weights, points, seed, tolerance } => glrep_check(&weights.data()?, *points, *seed, *tolerance)?,
        Command::SolutionCheck { weights, b, x, tolerance } => {
            let cfg = SolutionCheckConfig { tolerance: *tolerance, ..Default::default() };
            solution_check(&weights.data()?, *b, &point_for_argument(*x), &settings(target), &cfg)?
        }
        Command::CorollaryCheck { weights, z, tolerance } => corollary_check(*z, &weights.data()?, &settings(target), *tolerance)?,
        Command::SaddleCheck { kind, z, a, big_m, band_low, band_high } => {
            let kind = match kind {
                Kind::Outer => SteepestKind::Outer,
                Kind::Inner => SteepestKind::Inner,
            };
            saddle_check(kind, *z, *a, *big_m, (*band_low, *band_high), &quadrature(target))?
        }
        Command::DimScan { m1, m2, kappa, l2, z, a, b, direct_max, tolerance, format, csv } => {
            let cfg = ScanConfig { a: *a, b: *b, direct_max: *direct_max, settings: settings(target) };
            let rows = dimension_scan(*m1, *m2, *kappa, l2, *z, &cfg)?;
            let io = |e: std::io::Error| Error::Config(format!("writing CSV: {e}"));
            if let Some(path) = csv {
                write_scan_csv(&rows, File::create(path).map_err(io)?)?;
            }
            let params = json!({"m1": [m1.re, m1.im], "m2": m2, "kappa": kappa, "l2": l2, "z": [z.re, z.im], "a": a, "b": b});
            let report = scan_report(&rows, params, *tolerance);
            if *format == Format::Csv {
                let mut buf = Vec::new();
                write_scan_csv(&rows, &mut buf)?;
                return Ok(Output::Text(String::from_utf8_lossy(&buf).into_owned(), report.pass));
            }
            report
        }
        Command::All => {
            let outcomes = run_all(|o| eprintln!("{}", o.line()));
            all_report(&outcomes)
        }
    };
    Ok(Output::Report(report))
}

fn emit(text: &str, path: Option<&PathBuf>) -> Result<(), Error> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::Config(format!("writing {}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            writeln!(out, "{text}").map_err(|e| Error::Config(format!("writing stdout: {e}")))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    let result = (|| {
        let threads = match cli.threads {
            Some(0) => return Err(Error::Config("--threads must be positive".into())),
            Some(n) => Some(n),
            None => threads_from_env()?,
        };
        let output = match threads {
            Some(n) => with_threads(n, || run(&cli.command, cli.target))??,
            None => run(&cli.command, cli.target)?,
        };
        let pass = match output {
            Output::Report(r) => {
                let doc = report_json(&r, start.elapsed());
                emit(&serde_json::to_string_pretty(&doc).expect("reports serialize"), cli.output.as_ref())?;
                r.pass
            }
            Output::Text(t, pass) => {
                emit(t.trim_end(), cli.output.as_ref())?;
                pass
            }
        };
        Ok(pass)
    })();
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("hyperdual: {e}");
            ExitCode::from(exit_code_for(&e) as u8)
        }
    }
}
