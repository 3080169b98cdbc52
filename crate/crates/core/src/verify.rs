//! Seeded property suites run by the `verify` subcommand.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::estimator::{classify_point, Class, Window};
use crate::linalg::norm2;
use crate::lyapunov::{orbit_sum, LyapunovSeries};
use crate::map::{OrbitConfig, PolyMap};
use crate::spectral::SpectralInfo;

/// Relative level below which a decrement residual counts as rounding noise.
pub const RESIDUAL_FLOOR: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct VerifyConfig {
    pub seed: u64,
    pub cross_samples: usize,
    /// Constant `C` in `|orbit − series| ≤ tail + C‖x‖^{D+1}`.
    pub cross_constant: f64,
    pub directions: usize,
    pub radii: usize,
    pub slope_slack: f64,
    pub tail_samples: usize,
    pub tail_extra_terms: usize,
    /// Region sampled for the tail suite.
    pub tail_window: Option<Window>,
    pub capture_samples: usize,
    pub capture_steps: usize,
    pub orbit: OrbitConfig,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            seed: 42,
            cross_samples: 100,
            cross_constant: 10.0,
            directions: 200,
            radii: 9,
            slope_slack: 0.2,
            tail_samples: 1000,
            tail_extra_terms: 50,
            tail_window: None,
            capture_samples: 1000,
            capture_steps: 100,
            orbit: OrbitConfig::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct SuiteResult {
    pub name: String,
    pub passed: bool,
    pub checked: usize,
    pub violations: usize,
    /// Largest ratio of observed error to allowed error.
    pub worst_ratio: f64,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct VerifyReport {
    pub seed: u64,
    pub degree: u32,
    pub passed: bool,
    pub suites: Vec<SuiteResult>,
}

impl VerifyReport {
    pub fn failing(&self) -> Vec<&str> {
        self.suites
            .iter()
            .filter(|s| !s.passed)
            .map(|s| s.name.as_str())
            .collect()
    }
}

/// Uniform point in the ball of radius `radius`.
pub fn sample_ball<R: Rng>(rng: &mut R, dim: usize, radius: f64) -> Vec<f64> {
    loop {
        let u: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let n = norm2(&u);
        if n <= 1.0 {
            return u.into_iter().map(|c| c * radius).collect();
        }
    }
}

/// Uniform unit vector.
pub fn sample_direction<R: Rng>(rng: &mut R, dim: usize) -> Vec<f64> {
    loop {
        let u: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let n = norm2(&u);
        if n > 1e-3 && n <= 1.0 {
            return u.into_iter().map(|c| c / n).collect();
        }
    }
}

pub fn sample_window<R: Rng>(rng: &mut R, w: &Window) -> Vec<f64> {
    w.min
        .iter()
        .zip(&w.max)
        .map(|(&lo, &hi)| rng.gen_range(lo..hi))
        .collect()
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct SlopeFit {
    /// Least-squares slope of `log|W|` against `log‖x‖`; `None` without data.
    pub slope: Option<f64>,
    pub points: usize,
    /// Largest `|W|/‖x‖²` seen.
    pub max_relative: f64,
}

/// Fits the decay of `|V(f(x)) − V(x) + ‖x‖²|` over `‖x‖ ∈ [r_min, r_max]`,
/// `radii` log-spaced radii along each of `directions` random directions.
pub fn residual_slope<R: Rng>(
    f: &PolyMap,
    v: &LyapunovSeries,
    rng: &mut R,
    directions: usize,
    radii: usize,
    (r_min, r_max): (f64, f64),
) -> Result<SlopeFit> {
    let w = v.decrement_poly(f)?;
    let (mut sx, mut sy, mut sxx, mut sxy, mut n) = (0.0, 0.0, 0.0, 0.0, 0usize);
    let mut max_relative: f64 = 0.0;
    let steps = radii.max(2) - 1;
    for _ in 0..directions {
        let dir = sample_direction(rng, f.dim());
        for i in 0..=steps {
            let t = i as f64 / steps as f64;
            let r = r_min * (r_max / r_min).powf(t);
            let x: Vec<f64> = dir.iter().map(|c| c * r).collect();
            let res = w.eval(&x).abs();
            max_relative = max_relative.max(res / (r * r));
            if res > 0.0 {
                let (lx, ly) = (r.ln(), res.ln());
                sx += lx;
                sy += ly;
                sxx += lx * lx;
                sxy += lx * ly;
                n += 1;
            }
        }
    }
    let slope = if n >= 2 {
        let nf = n as f64;
        let den = nf * sxx - sx * sx;
        (den > 0.0).then(|| (nf * sxy - sx * sy) / den)
    } else {
        None
    };
    Ok(SlopeFit {
        slope,
        points: n,
        max_relative,
    })
}

fn ratio(observed: f64, allowed: f64) -> f64 {
    if allowed > 0.0 {
        observed / allowed
    } else if observed > 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}

/// Orbit sum against the series on `‖x‖ ≤ δ/4`.
pub fn cross_construction<R: Rng>(
    f: &PolyMap,
    info: &SpectralInfo,
    v: &LyapunovSeries,
    rng: &mut R,
    cfg: &VerifyConfig,
) -> SuiteResult {
    let radius = info.delta / 4.0;
    let (mut violations, mut worst, mut failed_orbits) = (0, 0.0_f64, 0);
    for _ in 0..cfg.cross_samples {
        let x = sample_ball(rng, f.dim(), radius);
        let Ok(orbit) = orbit_sum(f, &x, info, &cfg.orbit) else {
            failed_orbits += 1;
            violations += 1;
            continue;
        };
        let series = v.eval(&x);
        let diff = (orbit.value - series).abs();
        let rounding = 4.0 * f64::EPSILON * (orbit.value.abs() + series.abs());
        let allowed =
            orbit.tail_bound + cfg.cross_constant * norm2(&x).powi(v.degree as i32 + 1) + rounding;
        worst = worst.max(ratio(diff, allowed));
        if diff > allowed {
            violations += 1;
        }
    }
    SuiteResult {
        name: "cross-construction".into(),
        passed: violations == 0,
        checked: cfg.cross_samples,
        violations,
        worst_ratio: worst,
        detail: format!(
            "|orbit_sum − V_{}| ≤ tail_bound + {}‖x‖^{} on ‖x‖ ≤ {:e}; {failed_orbits} orbits not captured",
            v.degree,
            cfg.cross_constant,
            v.degree + 1,
            radius
        ),
    }
}

/// Decay order of the decrement residual of the series.
pub fn decrement_suite<R: Rng>(
    f: &PolyMap,
    v: &LyapunovSeries,
    rng: &mut R,
    cfg: &VerifyConfig,
) -> Result<SuiteResult> {
    let fit = residual_slope(f, v, rng, cfg.directions, cfg.radii, (1e-3, 1e-1))?;
    let required = v.degree as f64 + 1.0 - cfg.slope_slack;
    let at_floor = fit.max_relative <= RESIDUAL_FLOOR;
    let passed = at_floor || fit.slope.is_some_and(|s| s >= required);
    Ok(SuiteResult {
        name: "decrement-residual".into(),
        passed,
        checked: cfg.directions * cfg.radii.max(2),
        violations: usize::from(!passed),
        worst_ratio: fit.slope.map_or(0.0, |s| required / s),
        detail: match fit.slope {
            _ if at_floor => format!(
                "residual at rounding level (max |W|/‖x‖² = {:e})",
                fit.max_relative
            ),
            Some(s) => format!("log-log slope {s:.4}, required ≥ {required}"),
            None => "no nonzero residual samples".into(),
        },
    })
}

/// Terms beyond the truncation stay below the reported tail bound.
pub fn tail_suite<R: Rng>(
    f: &PolyMap,
    info: &SpectralInfo,
    rng: &mut R,
    cfg: &VerifyConfig,
) -> Result<SuiteResult> {
    let window = match &cfg.tail_window {
        Some(w) => w.clone(),
        None => Window::cube(f.dim(), -1.0, 1.0)?,
    };
    let (mut checked, mut violations, mut worst) = (0, 0, 0.0_f64);
    let max_attempts = 20 * cfg.tail_samples;
    let mut attempts = 0;
    while checked < cfg.tail_samples && attempts < max_attempts {
        attempts += 1;
        let x = sample_window(rng, &window);
        if classify_point(f, info, &x, &cfg.orbit).class != Class::InDA {
            continue;
        }
        let Ok(value) = orbit_sum(f, &x, info, &cfg.orbit) else {
            continue;
        };
        checked += 1;
        let mut y = x.clone();
        for _ in 0..value.n_terms {
            y = f.eval_unchecked(&y);
        }
        let mut extra = 0.0;
        for _ in 0..cfg.tail_extra_terms {
            extra += y.iter().map(|c| c * c).sum::<f64>();
            y = f.eval_unchecked(&y);
        }
        let allowed = value.tail_bound * (1.0 + 1e-9);
        worst = worst.max(ratio(extra, allowed));
        if extra > allowed {
            violations += 1;
        }
    }
    Ok(SuiteResult {
        name: "tail-bound".into(),
        passed: violations == 0,
        checked,
        violations,
        worst_ratio: worst,
        detail: format!(
            "{} further terms against tail_bound on {checked} InDA samples from {attempts} draws",
            cfg.tail_extra_terms
        ),
    })
}

/// Orbits started in the capture ball stay in `B(0, δ)` under the rate envelope.
pub fn capture_suite<R: Rng>(
    f: &PolyMap,
    info: &SpectralInfo,
    rng: &mut R,
    cfg: &VerifyConfig,
) -> SuiteResult {
    let cert = &info.certificate;
    let (mut violations, mut worst) = (0, 0.0_f64);
    for _ in 0..cfg.capture_samples {
        let x = sample_ball(rng, f.dim(), cert.capture_radius);
        let x_norm = norm2(&x);
        let mut y = x.clone();
        let mut envelope = info.c_bar * x_norm;
        let mut bad = false;
        for _ in 0..=cfg.capture_steps {
            let n = norm2(&y);
            let allowed = (envelope * (1.0 + 1e-9)).min(cert.delta);
            worst = worst.max(ratio(n, allowed));
            if n > allowed || (n >= cert.delta && x_norm > 0.0) {
                bad = true;
            }
            y = f.eval_unchecked(&y);
            envelope *= cert.rate;
        }
        if bad {
            violations += 1;
        }
    }
    SuiteResult {
        name: "capture-certificate".into(),
        passed: violations == 0,
        checked: cfg.capture_samples,
        violations,
        worst_ratio: worst,
        detail: format!(
            "{} steps from ‖x‖ < {:e}: ‖y_k‖ ≤ c̄‖x‖·{}^k and ‖y_k‖ < {:e}",
            cfg.capture_steps, cert.capture_radius, cert.rate, cert.delta
        ),
    }
}

/// Runs every suite with one seeded generator, in a fixed order.
pub fn run_suites(
    f: &PolyMap,
    info: &SpectralInfo,
    v: &LyapunovSeries,
    cfg: &VerifyConfig,
) -> Result<VerifyReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let suites = vec![
        cross_construction(f, info, v, &mut rng, cfg),
        decrement_suite(f, v, &mut rng, cfg)?,
        tail_suite(f, info, &mut rng, cfg)?,
        capture_suite(f, info, &mut rng, cfg),
    ];
    Ok(VerifyReport {
        seed: cfg.seed,
        degree: v.degree,
        passed: suites.iter().all(|s| s.passed),
        suites,
    })
}
