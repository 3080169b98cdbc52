//! Basin classification on a raster, and sublevel-set estimates of the basin
//! extracted from a series Lyapunov function.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{norm2, norm2_squared};
use crate::lyapunov::{orbit_sum, LyapunovSeries};
use crate::map::{escaped, OrbitConfig, PolyMap};
use crate::spectral::SpectralInfo;
use crate::sum::CompensatedSum;

/// Slack factor for the decrement test `W(x) > γ‖x‖²`.
pub const DECREMENT_SLACK: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Class {
    InDA,
    Outside,
    Undecided,
}

impl Class {
    pub fn label(self) -> &'static str {
        match self {
            Class::InDA => "in",
            Class::Outside => "out",
            Class::Undecided => "undecided",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OrbitOutcome {
    pub class: Class,
    /// Index of the first orbit point inside the capture ball (InDA) or
    /// beyond the escape radius (Outside).
    pub index: Option<usize>,
    pub steps_used: usize,
}

/// Certified orbit oracle: InDA once the orbit enters the capture ball,
/// Outside once it leaves the escape ball, Undecided otherwise.
pub fn classify_point(
    f: &PolyMap,
    info: &SpectralInfo,
    x: &[f64],
    cfg: &OrbitConfig,
) -> OrbitOutcome {
    let capture = info.certificate.capture_radius;
    let mut y = x.to_vec();
    let mut k = 0;
    loop {
        if escaped(&y, cfg.escape_radius) {
            return OrbitOutcome {
                class: Class::Outside,
                index: Some(k),
                steps_used: k,
            };
        }
        if norm2(&y) < capture {
            return OrbitOutcome {
                class: Class::InDA,
                index: Some(k),
                steps_used: k,
            };
        }
        if k >= cfg.budget {
            return OrbitOutcome {
                class: Class::Undecided,
                index: None,
                steps_used: k,
            };
        }
        y = f.eval_unchecked(&y);
        k += 1;
    }
}

/// Axis-aligned box `[min_a, max_a]` in each coordinate.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Window {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl Window {
    pub fn new(min: Vec<f64>, max: Vec<f64>) -> Result<Self> {
        if min.len() != max.len() || min.is_empty() {
            return Err(Error::InvalidWindow("axis counts differ".into()));
        }
        for (a, (lo, hi)) in min.iter().zip(&max).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidWindow(format!(
                    "axis {a}: need min < max, got {lo}:{hi}"
                )));
            }
        }
        Ok(Window { min, max })
    }

    /// The same box in every one of `dim` axes.
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo; dim], vec![hi; dim])
    }

    pub fn dim(&self) -> usize {
        self.min.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.min.iter().zip(&self.max))
            .all(|(v, (lo, hi))| lo <= v && v <= hi)
    }

    pub fn translate(&self, by: &[f64]) -> Window {
        Window {
            min: self.min.iter().zip(by).map(|(a, b)| a + b).collect(),
            max: self.max.iter().zip(by).map(|(a, b)| a + b).collect(),
        }
    }
}

/// Cell layout of a raster: `resolution[a]` cells along axis `a`, flattened in
/// row-major order (last axis fastest), starting at the window minimum.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Raster {
    pub window: Window,
    pub resolution: Vec<usize>,
}

impl Raster {
    pub fn new(window: Window, resolution: Vec<usize>) -> Result<Self> {
        if resolution.len() != window.dim() {
            return Err(Error::DimensionMismatch {
                expected: window.dim(),
                found: resolution.len(),
            });
        }
        if resolution.iter().any(|&r| r < 2) {
            return Err(Error::InvalidArgument(
                "resolution must be ≥ 2 per axis".into(),
            ));
        }
        Ok(Raster { window, resolution })
    }

    pub fn dim(&self) -> usize {
        self.resolution.len()
    }

    pub fn len(&self) -> usize {
        self.resolution.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_size(&self, axis: usize) -> f64 {
        (self.window.max[axis] - self.window.min[axis]) / self.resolution[axis] as f64
    }

    pub fn unflatten(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.dim()];
        for a in (0..self.dim()).rev() {
            out[a] = idx % self.resolution[a];
            idx /= self.resolution[a];
        }
        out
    }

    pub fn flatten(&self, multi: &[usize]) -> usize {
        multi
            .iter()
            .zip(&self.resolution)
            .fold(0, |acc, (&i, &r)| acc * r + i)
    }

    pub fn center(&self, idx: usize) -> Vec<f64> {
        self.unflatten(idx)
            .iter()
            .enumerate()
            .map(|(a, &i)| self.window.min[a] + (i as f64 + 0.5) * self.cell_size(a))
            .collect()
    }

    /// Face-adjacent neighbours.
    pub fn neighbors(&self, idx: usize) -> Vec<usize> {
        let multi = self.unflatten(idx);
        let mut out = Vec::with_capacity(2 * self.dim());
        for a in 0..self.dim() {
            if multi[a] > 0 {
                let mut m = multi.clone();
                m[a] -= 1;
                out.push(self.flatten(&m));
            }
            if multi[a] + 1 < self.resolution[a] {
                let mut m = multi.clone();
                m[a] += 1;
                out.push(self.flatten(&m));
            }
        }
        out
    }

    pub fn on_boundary(&self, idx: usize) -> bool {
        self.unflatten(idx)
            .iter()
            .zip(&self.resolution)
            .any(|(&i, &r)| i == 0 || i + 1 == r)
    }

    /// Cell containing `x`, if it lies in the window.
    pub fn cell_of(&self, x: &[f64]) -> Option<usize> {
        if !self.window.contains(x) {
            return None;
        }
        let multi: Vec<usize> = (0..self.dim())
            .map(|a| {
                let i = ((x[a] - self.window.min[a]) / self.cell_size(a)).floor() as usize;
                i.min(self.resolution[a] - 1)
            })
            .collect();
        Some(self.flatten(&multi))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ValueMethod {
    Series,
    Orbit,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompareStats {
    pub soundness: f64,
    pub soundness_all_cells: f64,
    pub coverage: f64,
    pub undecided_fraction: f64,
    pub mask_cells: usize,
    pub mask_cells_outside: usize,
    pub band_cells: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridEstimate {
    pub raster: Raster,
    pub classes: Vec<Class>,
    pub method: ValueMethod,
    /// V per cell; `+∞` where the method could not evaluate it.
    pub values: Vec<f64>,
    /// `V(f(x)) − V(x) + ‖x‖²` from the series, once a sublevel set has been extracted.
    pub decrement: Option<Vec<f64>>,
    pub c_star: Option<f64>,
    pub mask: Option<Vec<bool>>,
    pub window_limited: bool,
    pub stats: Option<CompareStats>,
}

/// Classifies every cell centre and fills in V.
pub fn rasterize(
    f: &PolyMap,
    info: &SpectralInfo,
    raster: Raster,
    method: ValueMethod,
    series: Option<&LyapunovSeries>,
    cfg: &OrbitConfig,
) -> Result<GridEstimate> {
    if raster.dim() != f.dim() {
        return Err(Error::DimensionMismatch {
            expected: f.dim(),
            found: raster.dim(),
        });
    }
    if !raster.window.contains(&vec![0.0; f.dim()]) {
        return Err(Error::InvalidWindow(
            "window must contain the origin".into(),
        ));
    }
    if method == ValueMethod::Series && series.is_none() {
        return Err(Error::InvalidArgument(
            "series method needs a Lyapunov series".into(),
        ));
    }
    let cells: Vec<(Class, f64)> = (0..raster.len())
        .into_par_iter()
        .map(|idx| {
            let x = raster.center(idx);
            let outcome = classify_point(f, info, &x, cfg);
            let value = match method {
                ValueMethod::Series => series.map_or(f64::INFINITY, |v| v.eval(&x)),
                ValueMethod::Orbit if outcome.class == Class::InDA => orbit_sum(f, &x, info, cfg)
                    .map(|v| v.value)
                    .unwrap_or(f64::INFINITY),
                ValueMethod::Orbit => f64::INFINITY,
            };
            (outcome.class, value)
        })
        .collect();
    let (classes, values) = cells.into_iter().unzip();
    Ok(GridEstimate {
        raster,
        classes,
        method,
        values,
        decrement: None,
        c_star: None,
        mask: None,
        window_limited: false,
        stats: None,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sublevel {
    pub c_star: f64,
    pub mask: Vec<bool>,
    pub window_limited: bool,
    pub series_values: Vec<f64>,
    pub decrement: Vec<f64>,
}

/// Level `c*` and the face-connected component of `{V < c*}` containing the
/// origin cell.
///
/// A cell violates the decrease when `W(x) = V(f(x)) − V(x) + ‖x‖² > γ‖x‖²`;
/// cells with `‖x‖ < δ/2` are never counted. `c*` is the lowest level at which
/// the sublevel component around the origin touches a violating cell, so the
/// returned component contains none. Without any violating cell the level is
/// the smallest V on the window boundary and the estimate is flagged as
/// window-limited.
pub fn extract_sublevel(
    raster: &Raster,
    v: &LyapunovSeries,
    f: &PolyMap,
    info: &SpectralInfo,
) -> Result<Sublevel> {
    if raster.dim() != f.dim() || v.poly.dim() != f.dim() {
        return Err(Error::ShapeMismatch);
    }
    let exclusion = info.delta / 2.0;
    let evaluated: Vec<(f64, f64)> = (0..raster.len())
        .into_par_iter()
        .map(|idx| {
            let x = raster.center(idx);
            let vx = v.eval(&x);
            let fx = f.eval_unchecked(&x);
            let mut w = CompensatedSum::new();
            w.add(v.eval(&fx));
            w.add(-vx);
            w.add(norm2_squared(&x));
            (vx, w.value())
        })
        .collect();
    let (series_values, decrement): (Vec<f64>, Vec<f64>) = evaluated.into_iter().unzip();

    let origin = raster
        .cell_of(&vec![0.0; raster.dim()])
        .ok_or_else(|| Error::InvalidWindow("window must contain the origin".into()))?;
    let violated: Vec<bool> = (0..raster.len())
        .map(|idx| {
            let x = raster.center(idx);
            let n2 = norm2_squared(&x);
            let w = decrement[idx];
            n2.sqrt() >= exclusion && (w.is_nan() || w > DECREMENT_SLACK * n2)
        })
        .collect();
    let level = |idx: usize| {
        let v = series_values[idx];
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let (mut c_star, window_limited) = if violated.iter().any(|&b| b) {
        (
            first_violation_level(raster, origin, &violated, level),
            false,
        )
    } else {
        (boundary_minimum(raster, v), true)
    };
    if c_star.is_nan() {
        c_star = f64::NEG_INFINITY;
    }

    let below = |idx: usize| level(idx) < c_star;
    if !below(origin) {
        return Err(Error::EmptyMask);
    }
    let mut mask = vec![false; raster.len()];
    let mut queue = VecDeque::from([origin]);
    mask[origin] = true;
    while let Some(idx) = queue.pop_front() {
        for nb in raster.neighbors(idx) {
            if !mask[nb] && below(nb) {
                mask[nb] = true;
                queue.push_back(nb);
            }
        }
    }
    Ok(Sublevel {
        c_star,
        mask,
        window_limited,
        series_values,
        decrement,
    })
}

/// Smallest level `c` at which the face-connected component of `{V ≤ c}`
/// grown from `origin` reaches a violating cell: a bottleneck (minimax)
/// flood ordered by V.
fn first_violation_level<L>(raster: &Raster, origin: usize, violated: &[bool], level: L) -> f64
where
    L: Fn(usize) -> f64,
{
    let mut best = vec![f64::INFINITY; raster.len()];
    let mut heap = BinaryHeap::new();
    best[origin] = level(origin);
    heap.push(Reverse((OrdF64(best[origin]), origin)));
    while let Some(Reverse((OrdF64(b), idx))) = heap.pop() {
        if b > best[idx] {
            continue;
        }
        if violated[idx] {
            return b;
        }
        for nb in raster.neighbors(idx) {
            let nb_level = b.max(level(nb));
            if nb_level < best[nb] {
                best[nb] = nb_level;
                heap.push(Reverse((OrdF64(nb_level), nb)));
            }
        }
    }
    f64::INFINITY
}

#[derive(Clone, Copy, PartialEq)]
struct OrdF64(f64);

impl Eq for OrdF64 {}

impl PartialOrd for OrdF64 {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OrdF64 {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Minimum of V over the outer faces of the window, sampled at boundary
/// cell centres projected onto each face they touch.
fn boundary_minimum(raster: &Raster, v: &LyapunovSeries) -> f64 {
    let mut best = f64::INFINITY;
    for idx in 0..raster.len() {
        if !raster.on_boundary(idx) {
            continue;
        }
        let multi = raster.unflatten(idx);
        let center = raster.center(idx);
        for a in 0..raster.dim() {
            for (at_edge, edge) in [
                (multi[a] == 0, raster.window.min[a]),
                (multi[a] + 1 == raster.resolution[a], raster.window.max[a]),
            ] {
                if at_edge {
                    let mut p = center.clone();
                    p[a] = edge;
                    best = best.min(v.eval(&p));
                }
            }
        }
    }
    best
}

impl GridEstimate {
    /// Stores a sublevel extraction in the grid.
    pub fn apply_sublevel(&mut self, s: Sublevel) {
        if self.method == ValueMethod::Series {
            self.values = s.series_values;
        }
        self.decrement = Some(s.decrement);
        self.c_star = Some(s.c_star);
        self.mask = Some(s.mask);
        self.window_limited = s.window_limited;
    }

    pub fn center(&self, idx: usize) -> Vec<f64> {
        self.raster.center(idx)
    }
}

/// Shifts the window by `x0`; classes, values and mask are unchanged.
pub fn translate_region(grid: &GridEstimate, x0: &[f64]) -> GridEstimate {
    let mut out = grid.clone();
    out.raster.window = grid.raster.window.translate(x0);
    out
}

/// Cells whose oracle class differs from that of a face neighbour.
pub fn boundary_band(raster: &Raster, classes: &[Class]) -> Vec<bool> {
    (0..raster.len())
        .map(|idx| {
            raster
                .neighbors(idx)
                .into_iter()
                .any(|nb| classes[nb] != classes[idx])
        })
        .collect()
}

/// Soundness and coverage of `mask` against the oracle classes. Undecided
/// cells are left out of both denominators. `soundness` additionally skips the
/// one-cell band along the oracle's class boundary; `soundness_all_cells` does
/// not.
pub fn compare(raster: &Raster, classes: &[Class], mask: &[bool]) -> Result<CompareStats> {
    if classes.len() != raster.len() || mask.len() != raster.len() {
        return Err(Error::ShapeMismatch);
    }
    let band = boundary_band(raster, classes);
    let (mut mask_decided, mut mask_in) = (0usize, 0usize);
    let (mut core_decided, mut core_in) = (0usize, 0usize);
    let (mut oracle_in, mut undecided, mut mask_cells, mut outside) =
        (0usize, 0usize, 0usize, 0usize);
    for idx in 0..raster.len() {
        let class = classes[idx];
        if class == Class::Undecided {
            undecided += 1;
        }
        if class == Class::InDA {
            oracle_in += 1;
        }
        if !mask[idx] {
            continue;
        }
        mask_cells += 1;
        if class == Class::Outside {
            outside += 1;
        }
        if class == Class::Undecided {
            continue;
        }
        mask_decided += 1;
        if !band[idx] {
            core_decided += 1;
        }
        if class == Class::InDA {
            mask_in += 1;
            if !band[idx] {
                core_in += 1;
            }
        }
    }
    let ratio = |num: usize, den: usize| {
        if den == 0 {
            1.0
        } else {
            num as f64 / den as f64
        }
    };
    Ok(CompareStats {
        soundness: ratio(core_in, core_decided),
        soundness_all_cells: ratio(mask_in, mask_decided),
        coverage: if oracle_in == 0 {
            0.0
        } else {
            mask_in as f64 / oracle_in as f64
        },
        undecided_fraction: undecided as f64 / raster.len() as f64,
        mask_cells,
        mask_cells_outside: outside,
        band_cells: band.iter().filter(|&&b| b).count(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProbeReport {
    pub samples: Vec<(f64, f64)>,
    /// Parameter of the first path point that was not certified InDA.
    pub truncated_at: Option<f64>,
    pub truncation_class: Option<Class>,
    pub strictly_increasing: bool,
    /// `V_last / V_first`.
    pub growth_factor: f64,
    /// Growth of `V(x)/‖x‖²`, which stays 1 when V is just the first orbit term.
    pub normalized_growth: f64,
    /// `(threshold, t)`: first sample reaching each power of ten.
    pub crossings: Vec<(f64, f64)>,
    pub blow_up_detected: bool,
}

/// Orbit-sum V along a path `(t, x(t))` approaching the basin boundary.
/// Stops at the first point not certified InDA.
pub fn boundary_probe(
    f: &PolyMap,
    info: &SpectralInfo,
    path: &[(f64, Vec<f64>)],
    cfg: &OrbitConfig,
) -> Result<ProbeReport> {
    let mut samples = Vec::with_capacity(path.len());
    let mut normalized = Vec::with_capacity(path.len());
    let mut truncated_at = None;
    let mut truncation_class = None;
    for (t, x) in path {
        if x.len() != f.dim() {
            return Err(Error::DimensionMismatch {
                expected: f.dim(),
                found: x.len(),
            });
        }
        let outcome = classify_point(f, info, x, cfg);
        if outcome.class != Class::InDA {
            truncated_at = Some(*t);
            truncation_class = Some(outcome.class);
            break;
        }
        let v = orbit_sum(f, x, info, cfg)?.value;
        samples.push((*t, v));
        normalized.push(v / norm2_squared(x));
    }
    let strictly_increasing = samples.windows(2).all(|w| w[1].1 > w[0].1);
    let growth_factor = match (samples.first(), samples.last()) {
        (Some(first), Some(last)) if first.1 > 0.0 => last.1 / first.1,
        _ => 1.0,
    };
    let normalized_growth = match (normalized.first(), normalized.last()) {
        (Some(first), Some(last)) if first.is_finite() && *first > 0.0 => last / first,
        _ => 1.0,
    };
    let mut crossings = Vec::new();
    let mut threshold = 1.0;
    for &(t, v) in &samples {
        while v >= threshold {
            crossings.push((threshold, t));
            threshold *= 10.0;
        }
    }
    Ok(ProbeReport {
        blow_up_detected: samples.len() >= 2 && strictly_increasing && normalized_growth >= 10.0,
        samples,
        truncated_at,
        truncation_class,
        strictly_increasing,
        growth_factor,
        normalized_growth,
        crossings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::examples;
    use crate::lyapunov::series_solve;
    use crate::poly::Poly;
    use crate::spectral::{assemble_spectral_info, SpectralConfig};

    fn info(f: &PolyMap) -> SpectralInfo {
        assemble_spectral_info(f, &SpectralConfig::default()).unwrap()
    }

    #[test]
    fn classify_example_one() {
        let f = examples::example_one();
        let i = info(&f);
        let cfg = OrbitConfig::default();
        assert_eq!(classify_point(&f, &i, &[0.0, 0.5], &cfg).class, Class::InDA);
        assert_eq!(
            classify_point(&f, &i, &[0.0, 1.5], &cfg).class,
            Class::Outside
        );
        assert_eq!(classify_point(&f, &i, &[7.0, 0.9], &cfg).class, Class::InDA);
    }

    #[test]
    fn classify_undecided_with_tiny_budget() {
        let f = examples::example_one();
        let cfg = OrbitConfig {
            budget: 1,
            ..Default::default()
        };
        let out = classify_point(&f, &info(&f), &[0.0, 0.999], &cfg);
        assert_eq!(out.class, Class::Undecided);
        assert_eq!(out.steps_used, 1);
    }

    #[test]
    fn raster_geometry() {
        let r = Raster::new(
            Window::new(vec![-1.0, -2.0], vec![1.0, 2.0]).unwrap(),
            vec![4, 5],
        )
        .unwrap();
        assert_eq!(r.len(), 20);
        assert_eq!(r.center(0), vec![-0.75, -1.6]);
        assert_eq!(r.unflatten(7), vec![1, 2]);
        assert_eq!(r.flatten(&[1, 2]), 7);
        assert_eq!(r.neighbors(0).len(), 2);
        assert_eq!(r.neighbors(7).len(), 4);
        assert_eq!(r.cell_of(&[0.0, 0.0]), Some(r.flatten(&[2, 2])));
        assert!(r.on_boundary(0) && !r.on_boundary(7));
    }

    #[test]
    fn invalid_windows() {
        assert!(Window::new(vec![1.0], vec![-1.0]).is_err());
        assert!(Raster::new(Window::cube(2, -1.0, 1.0).unwrap(), vec![1, 5]).is_err());
        let f = examples::example_one();
        let r = Raster::new(
            Window::new(vec![1.0, 1.0], vec![2.0, 2.0]).unwrap(),
            vec![4, 4],
        )
        .unwrap();
        assert!(matches!(
            rasterize(
                &f,
                &info(&f),
                r,
                ValueMethod::Orbit,
                None,
                &OrbitConfig::default()
            ),
            Err(Error::InvalidWindow(_))
        ));
    }

    #[test]
    fn zero_map_all_in() {
        let f = PolyMap::zero(2);
        let r = Raster::new(Window::cube(2, -3.0, 3.0).unwrap(), vec![9, 9]).unwrap();
        let g = rasterize(
            &f,
            &info(&f),
            r,
            ValueMethod::Orbit,
            None,
            &OrbitConfig::default(),
        )
        .unwrap();
        assert!(g.classes.iter().all(|&c| c == Class::InDA));
    }

    #[test]
    fn example_two_raster_corners() {
        let f = examples::example_two();
        let r = Raster::new(Window::cube(2, -0.5, 0.5).unwrap(), vec![100, 100]).unwrap();
        let g = rasterize(
            &f,
            &info(&f),
            r.clone(),
            ValueMethod::Orbit,
            None,
            &OrbitConfig::default(),
        )
        .unwrap();
        let origin = r.cell_of(&[0.0, 0.0]).unwrap();
        assert_eq!(g.classes[origin], Class::InDA);
        let right = r.cell_of(&[0.4999, 0.0]).unwrap();
        assert_eq!(g.classes[right], Class::Outside);
    }

    #[test]
    fn scalar_linear_sublevel_is_window_limited() {
        let f = PolyMap::new(vec![Poly::from_terms(1, [(0.5, vec![1])]).unwrap()]).unwrap();
        let v = series_solve(&f, 4).unwrap();
        let r = Raster::new(Window::cube(1, -2.0, 2.0).unwrap(), vec![40]).unwrap();
        let s = extract_sublevel(&r, &v, &f, &info(&f)).unwrap();
        assert!(s.window_limited);
        assert!((s.c_star - 16.0 / 3.0).abs() < 1e-12);
        assert!(s.mask.iter().all(|&m| m));
        assert!(s.decrement.iter().all(|w| w.abs() < 1e-12));
    }

    #[test]
    fn zero_map_sublevel() {
        let f = PolyMap::zero(2);
        let v = series_solve(&f, 2).unwrap();
        let r = Raster::new(Window::cube(2, -1.0, 1.0).unwrap(), vec![10, 10]).unwrap();
        let s = extract_sublevel(&r, &v, &f, &info(&f)).unwrap();
        assert!(s.window_limited);
        assert!((s.c_star - 1.01).abs() < 1e-15);
        // level set {‖x‖² < c*} clipped by the window: everything but the corners
        for idx in 0..r.len() {
            assert_eq!(s.mask[idx], norm2_squared(&r.center(idx)) < s.c_star);
        }
        assert!(!s.mask[0]);
    }

    #[test]
    fn translate_identity() {
        let f = PolyMap::zero(2);
        let r = Raster::new(Window::cube(2, -1.0, 1.0).unwrap(), vec![4, 4]).unwrap();
        let g = rasterize(
            &f,
            &info(&f),
            r,
            ValueMethod::Orbit,
            None,
            &OrbitConfig::default(),
        )
        .unwrap();
        assert_eq!(translate_region(&g, &[0.0, 0.0]), g);
        let moved = translate_region(&g, &[1.0, 0.0]);
        assert_eq!(moved.raster.window.min, vec![0.0, -1.0]);
        assert_eq!(moved.raster.window.max, vec![2.0, 1.0]);
        assert_eq!(moved.classes, g.classes);
    }

    #[test]
    fn translate_scalar_interval() {
        let w = Window::new(vec![-1.0], vec![1.0])
            .unwrap()
            .translate(&[1.0]);
        assert_eq!((w.min[0], w.max[0]), (0.0, 2.0));
    }

    #[test]
    fn compare_conventions() {
        let r = Raster::new(Window::cube(1, -1.0, 1.0).unwrap(), vec![6]).unwrap();
        use Class::*;
        let classes = vec![Outside, InDA, InDA, InDA, InDA, Undecided];
        let empty = compare(&r, &classes, &[false; 6]).unwrap();
        assert_eq!((empty.soundness, empty.coverage), (1.0, 0.0));

        let inside = compare(&r, &classes, &[false, false, true, true, false, false]).unwrap();
        assert_eq!(inside.soundness, 1.0);
        assert_eq!(inside.coverage, 0.5);
        assert!((inside.undecided_fraction - 1.0 / 6.0).abs() < 1e-15);

        let leaky = compare(&r, &classes, &[true, true, true, false, false, false]).unwrap();
        // the Outside cell sits in the band, so only the all-cells figure sees it
        assert_eq!(leaky.soundness, 1.0);
        assert!((leaky.soundness_all_cells - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(leaky.mask_cells_outside, 1);

        assert!(compare(&r, &classes, &[true; 3]).is_err());
    }

    #[test]
    fn probe_example_one_vertical() {
        let f = examples::example_one();
        let path: Vec<_> = [0.9, 0.99, 0.999]
            .iter()
            .map(|&t| (t, vec![0.0, t]))
            .collect();
        let rep = boundary_probe(&f, &info(&f), &path, &OrbitConfig::default()).unwrap();
        assert_eq!(rep.samples.len(), 3);
        assert!(rep.strictly_increasing);
        assert!(rep.truncated_at.is_none());
    }

    #[test]
    fn probe_truncates_outside() {
        let f = examples::example_one();
        let path: Vec<_> = [0.5, 1.2, 0.9].iter().map(|&t| (t, vec![0.0, t])).collect();
        let rep = boundary_probe(&f, &info(&f), &path, &OrbitConfig::default()).unwrap();
        assert_eq!(rep.samples.len(), 1);
        assert_eq!(rep.truncated_at, Some(1.2));
        assert_eq!(rep.truncation_class, Some(Class::Outside));
    }

    #[test]
    fn probe_zero_map_no_blow_up() {
        let f = PolyMap::zero(2);
        let path: Vec<_> = (1..=10)
            .map(|j| (j as f64, vec![0.0, j as f64 / 10.0]))
            .collect();
        let rep = boundary_probe(&f, &info(&f), &path, &OrbitConfig::default()).unwrap();
        assert!(!rep.blow_up_detected);
        assert!((rep.normalized_growth - 1.0).abs() < 1e-12);
        assert!(rep
            .samples
            .iter()
            .all(|&(t, v)| (v - (t / 10.0).powi(2)).abs() < 1e-15));
    }

    #[test]
    fn probe_example_one_horizontal() {
        let f = examples::example_one();
        let path: Vec<_> = (0..=20)
            .map(|i| {
                let t = i as f64 * 0.5;
                (t, vec![t, 0.5])
            })
            .collect();
        let rep = boundary_probe(&f, &info(&f), &path, &OrbitConfig::default()).unwrap();
        assert!(rep.truncated_at.is_none());
        assert_eq!(rep.samples.len(), 21);
        assert!(rep.samples.last().unwrap().1 > rep.samples[0].1);
    }
}
