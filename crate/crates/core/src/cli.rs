//! Command-line surface: `check | lyapunov | estimate | verify`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimator::{
    compare, extract_sublevel, rasterize, translate_region, Raster, ValueMethod, Window,
};
use crate::io;
use crate::lyapunov::{orbit_sum, series_solve, LyapunovSeries};
use crate::map::{OrbitConfig, PolyMap};
use crate::spectral::{check_hypotheses, Certificate, SpectralConfig, SpectralInfo};
use crate::verify::{run_suites, VerifyConfig, VerifyReport};

#[derive(Debug, Parser)]
#[command(
    name = "lyapda",
    version,
    about = "Domain-of-attraction estimates for polynomial maps"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check f(0) = 0 and r(∂₀f) < 1 and print the spectral constants.
    Check(RunConfig),
    /// Solve for the Lyapunov series and write `<prefix>.V.json`.
    Lyapunov(RunConfig),
    /// Rasterize, extract the sublevel estimate and compare with the orbit oracle.
    Estimate(RunConfig),
    /// Run the seeded property suites and write `<prefix>.verify.json`.
    Verify(RunConfig),
}

pub type Point = Vec<f64>;
pub type PointList = Vec<Point>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Orbit,
    Series,
}

#[derive(Clone, Debug, Args)]
pub struct RunConfig {
    /// Map file (JSON).
    #[arg(long)]
    pub map: PathBuf,
    /// Fixed point to shift to the origin, e.g. "0.5,-1".
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    pub x0: Option<Point>,
    /// Degree of the Lyapunov series.
    #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u32).range(2..))]
    pub degree: u32,
    /// Window "a:b,c:d" in original coordinates; defaults to x0 ± 1 on every axis.
    #[arg(long, value_parser = parse_window, allow_hyphen_values = true)]
    pub window: Option<Window>,
    /// Cells per axis.
    #[arg(long, default_value_t = 200, value_parser = clap::value_parser!(u64).range(2..))]
    pub res: u64,
    #[arg(long, value_enum, default_value_t = MethodArg::Series)]
    pub method: MethodArg,
    /// Iteration budget of the orbit oracle.
    #[arg(long, default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(1..))]
    pub budget: u64,
    #[arg(long, default_value_t = 1e8, value_parser = parse_positive)]
    pub escape_radius: f64,
    /// Orbit-sum terms kept after capture.
    #[arg(long, default_value_t = 10)]
    pub n_tail: usize,
    #[arg(long, default_value = "out")]
    pub out_prefix: PathBuf,
    /// Worker threads for the cell loop (default: all cores).
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub threads: Option<u64>,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Also write `<prefix>.region.svg` (2-D maps only).
    #[arg(long)]
    pub svg: bool,
    /// Use this series file instead of solving for V.
    #[arg(long = "v-file")]
    pub v_file: Option<PathBuf>,
    /// Points "x,y;x,y" at which `lyapunov` writes orbit sums to `<prefix>.orbit.csv`.
    #[arg(long = "orbit-at", value_parser = parse_points, allow_hyphen_values = true)]
    pub orbit_at: Option<PointList>,
}

fn parse_positive(s: &str) -> std::result::Result<f64, String> {
    match s.trim().parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        _ => Err(format!("expected a positive number, got {s:?}")),
    }
}

pub fn parse_point(s: &str) -> std::result::Result<Point, String> {
    s.split(',')
        .map(|c| {
            c.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| format!("bad coordinate {c:?}"))
        })
        .collect()
}

fn parse_points(s: &str) -> std::result::Result<PointList, String> {
    s.split(';').map(parse_point).collect()
}

/// `"a:b,c:d"` → window with `min = [a, c]`, `max = [b, d]`.
pub fn parse_window(s: &str) -> std::result::Result<Window, String> {
    let mut min = Vec::new();
    let mut max = Vec::new();
    for axis in s.split(',') {
        let (a, b) = axis
            .split_once(':')
            .ok_or_else(|| format!("axis {axis:?} is not of the form a:b"))?;
        let lo: f64 = a.trim().parse().map_err(|_| format!("bad bound {a:?}"))?;
        let hi: f64 = b.trim().parse().map_err(|_| format!("bad bound {b:?}"))?;
        min.push(lo);
        max.push(hi);
    }
    Window::new(min, max).map_err(|e| e.to_string())
}

impl RunConfig {
    pub fn orbit_config(&self) -> OrbitConfig {
        OrbitConfig {
            budget: self.budget as usize,
            escape_radius: self.escape_radius,
            n_tail: self.n_tail,
        }
    }

    pub fn output(&self, suffix: &str) -> PathBuf {
        let mut s = self.out_prefix.clone().into_os_string();
        s.push(".");
        s.push(suffix);
        PathBuf::from(s)
    }

    /// The map shifted so that `x0` sits at the origin.
    pub fn load_shifted_map(&self) -> Result<PolyMap> {
        let map = io::load_map(&self.map)?;
        match &self.x0 {
            Some(x0) => map.shift_fixed_point(x0),
            None => Ok(map),
        }
    }

    fn x0(&self, dim: usize) -> Result<Vec<f64>> {
        match &self.x0 {
            Some(x0) if x0.len() != dim => Err(Error::DimensionMismatch {
                expected: dim,
                found: x0.len(),
            }),
            Some(x0) => Ok(x0.clone()),
            None => Ok(vec![0.0; dim]),
        }
    }

    /// Window in shifted coordinates.
    fn shifted_window(&self, dim: usize) -> Result<Window> {
        let x0 = self.x0(dim)?;
        let w = match &self.window {
            Some(w) => w.clone(),
            None => Window::cube(dim, -1.0, 1.0)?.translate(&x0),
        };
        if w.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: w.dim(),
            });
        }
        let neg: Vec<f64> = x0.iter().map(|c| -c).collect();
        Ok(w.translate(&neg))
    }

    fn series(&self, f: &PolyMap) -> Result<LyapunovSeries> {
        match &self.v_file {
            Some(path) => io::parse_series(&fs::read_to_string(path)?, f),
            None => series_solve(f, self.degree),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct CheckOutput {
    pub r: Option<f64>,
    pub c_bar: Option<f64>,
    pub alpha: Option<f64>,
    pub epsilon: Option<f64>,
    pub delta: Option<f64>,
    pub k_cert: Option<usize>,
    pub hypotheses_ok: bool,
    pub jacobian_norm: Option<f64>,
    pub certificate: Option<Certificate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
}

impl CheckOutput {
    fn from_info(info: &SpectralInfo) -> Self {
        CheckOutput {
            r: Some(info.r),
            c_bar: Some(info.c_bar),
            alpha: Some(info.alpha),
            epsilon: Some(info.epsilon),
            delta: Some(info.delta),
            k_cert: Some(info.k_cert),
            hypotheses_ok: true,
            jacobian_norm: Some(info.jacobian_norm),
            certificate: Some(info.certificate.clone()),
            diagnostic: None,
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents)?;
    Ok(())
}

/// Spectral constants of the map, or the failing hypothesis.
pub fn cmd_check(cfg: &RunConfig) -> Result<(CheckOutput, Option<SpectralInfo>)> {
    let f = cfg.load_shifted_map()?;
    let report = check_hypotheses(&f, &SpectralConfig::default())?;
    Ok(match &report.info {
        Some(info) => (CheckOutput::from_info(info), Some(info.clone())),
        None => (
            CheckOutput {
                r: report.r,
                c_bar: None,
                alpha: None,
                epsilon: None,
                delta: None,
                k_cert: None,
                hypotheses_ok: false,
                jacobian_norm: report.jacobian_norm,
                certificate: None,
                diagnostic: report.diagnostic.clone(),
            },
            None,
        ),
    })
}

fn require_hypotheses(cfg: &RunConfig) -> Result<(PolyMap, SpectralInfo)> {
    let (out, info) = cmd_check(cfg)?;
    match info {
        Some(info) => Ok((cfg.load_shifted_map()?, info)),
        None => Err(Error::Hypothesis(out.diagnostic.unwrap_or_default())),
    }
}

/// Writes `<prefix>.V.json` and, with `--orbit-at`, `<prefix>.orbit.csv`.
pub fn cmd_lyapunov(cfg: &RunConfig) -> Result<LyapunovSeries> {
    let (f, info) = require_hypotheses(cfg)?;
    let v = series_solve(&f, cfg.degree)?;
    write_file(
        &cfg.output("V.json"),
        &to_json(&io::series_to_json(&v, f.vars())),
    )?;
    if let Some(points) = &cfg.orbit_at {
        let x0 = cfg.x0(f.dim())?;
        let orbit = cfg.orbit_config();
        let rows = points
            .iter()
            .map(|p| {
                if p.len() != f.dim() {
                    return Err(Error::DimensionMismatch {
                        expected: f.dim(),
                        found: p.len(),
                    });
                }
                let shifted: Vec<f64> = p.iter().zip(&x0).map(|(a, b)| a - b).collect();
                Ok((p.clone(), orbit_sum(&f, &shifted, &info, &orbit)?))
            })
            .collect::<Result<Vec<_>>>()?;
        write_file(&cfg.output("orbit.csv"), &io::orbit_sum_csv(&rows))?;
    }
    Ok(v)
}

/// Writes the grid CSV, the region summary and optionally the SVG.
pub fn cmd_estimate(cfg: &RunConfig) -> Result<io::RegionSummary> {
    let (f, info) = require_hypotheses(cfg)?;
    let window = cfg.shifted_window(f.dim())?;
    if cfg.svg && f.dim() != 2 {
        return Err(Error::InvalidArgument("--svg needs a 2-D map".into()));
    }
    let raster = Raster::new(window, vec![cfg.res as usize; f.dim()])?;
    let v = cfg.series(&f)?;
    let method = match cfg.method {
        MethodArg::Orbit => ValueMethod::Orbit,
        MethodArg::Series => ValueMethod::Series,
    };
    let mut grid = rasterize(&f, &info, raster, method, Some(&v), &cfg.orbit_config())?;
    let sub = extract_sublevel(&grid.raster, &v, &f, &info)?;
    grid.apply_sublevel(sub);
    let stats = compare(
        &grid.raster,
        &grid.classes,
        grid.mask.as_deref().unwrap_or(&[]),
    )?;
    grid.stats = Some(stats.clone());
    let grid = translate_region(&grid, &cfg.x0(f.dim())?);

    let summary = io::region_summary(&grid, &stats, v.degree);
    write_file(&cfg.output("grid.csv"), &io::grid_csv(&grid))?;
    write_file(&cfg.output("region.json"), &to_json(&summary))?;
    if cfg.svg {
        write_file(&cfg.output("region.svg"), &io::region_svg(&grid)?)?;
    }
    Ok(summary)
}

/// Runs the property suites and writes `<prefix>.verify.json`.
pub fn cmd_verify(cfg: &RunConfig) -> Result<VerifyReport> {
    let (f, info) = require_hypotheses(cfg)?;
    let v = cfg.series(&f)?;
    let x0 = cfg.x0(f.dim())?;
    let vcfg = VerifyConfig {
        seed: cfg.seed,
        tail_window: cfg.window.as_ref().map(|w| {
            let neg: Vec<f64> = x0.iter().map(|c| -c).collect();
            w.translate(&neg)
        }),
        orbit: cfg.orbit_config(),
        ..VerifyConfig::default()
    };
    let report = run_suites(&f, &info, &v, &vcfg)?;
    write_file(&cfg.output("verify.json"), &to_json(&report))?;
    Ok(report)
}

fn with_threads<T: Send>(threads: Option<u64>, job: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(job()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n as usize)
                .build()
                .map_err(|e| Error::InvalidArgument(e.to_string()))?;
            Ok(pool.install(job))
        }
    }
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let result = match &cli.command {
        Command::Check(cfg) => cmd_check(cfg).map(|(out, _)| {
            let _ = stdout.write_all(to_json(&out).as_bytes());
            match &out.diagnostic {
                Some(d) => {
                    let _ = writeln!(stderr, "hypothesis failed: {d}");
                    1
                }
                None => 0,
            }
        }),
        Command::Lyapunov(cfg) => with_threads(cfg.threads, || cmd_lyapunov(cfg))
            .and_then(|r| r)
            .map(|v| {
                let _ = writeln!(stdout, "{}", cfg.output("V.json").display());
                let _ = writeln!(
                    stdout,
                    "degree {} residuals {:?}",
                    v.degree, v.residual_per_degree
                );
                0
            }),
        Command::Estimate(cfg) => with_threads(cfg.threads, || cmd_estimate(cfg))
            .and_then(|r| r)
            .map(|s| {
                let _ = stdout.write_all(to_json(&s).as_bytes());
                0
            }),
        Command::Verify(cfg) => with_threads(cfg.threads, || cmd_verify(cfg))
            .and_then(|r| r)
            .map(|report| {
                let _ = stdout.write_all(to_json(&report).as_bytes());
                if report.passed {
                    0
                } else {
                    let _ = writeln!(stderr, "failing suites: {}", report.failing().join(", "));
                    1
                }
            }),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}
