//! File formats: map and polynomial JSON, grid CSV, region JSON and SVG.
//!
//! A map document looks like
//!
//! ```json
//! {"dim": 2, "vars": ["x","y"],
//!  "components": [[{"coef": 1.0, "exp": [1,1]}, {"coef": 1.0, "exp": [0,1]}],
//!                 [{"coef": 1.0, "exp": [0,3]}]]}
//! ```
//!
//! `exp` is aligned with `vars`; duplicate exponents within a component are
//! summed on load. Polynomials use the same term objects plus `max_degree`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{Class, CompareStats, GridEstimate};
use crate::lyapunov::{DegreeWarning, LyapunovSeries, OrbitSumValue};
use crate::map::{default_var_names, PolyMap};
use crate::poly::Poly;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct TermJson {
    pub coef: f64,
    pub exp: Vec<u32>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct MapJson {
    pub dim: usize,
    #[serde(default)]
    pub vars: Option<Vec<String>>,
    pub components: Vec<Vec<TermJson>>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct PolyJson {
    pub dim: usize,
    #[serde(default)]
    pub vars: Option<Vec<String>>,
    pub max_degree: u32,
    pub terms: Vec<TermJson>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SeriesJson {
    pub dim: usize,
    #[serde(default)]
    pub vars: Option<Vec<String>>,
    pub max_degree: u32,
    pub terms: Vec<TermJson>,
    #[serde(default)]
    pub degree: Option<u32>,
    #[serde(default)]
    pub residual_per_degree: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<DegreeWarning>,
}

fn terms_of(p: &Poly) -> Vec<TermJson> {
    p.terms()
        .map(|(m, c)| TermJson {
            coef: c,
            exp: m.exponents().to_vec(),
        })
        .collect()
}

fn poly_from_terms(dim: usize, terms: &[TermJson]) -> Result<Poly> {
    for t in terms {
        if t.exp.len() != dim {
            return Err(Error::Format(format!(
                "exponent vector {:?} does not have length {dim}",
                t.exp
            )));
        }
    }
    Poly::from_terms(dim, terms.iter().map(|t| (t.coef, t.exp.clone())))
}

impl MapJson {
    pub fn from_map(map: &PolyMap) -> Self {
        MapJson {
            dim: map.dim(),
            vars: Some(map.vars().to_vec()),
            components: map.components().iter().map(terms_of).collect(),
        }
    }

    pub fn to_map(&self) -> Result<PolyMap> {
        if self.components.len() != self.dim {
            return Err(Error::Format(format!(
                "map has dim {} but {} components",
                self.dim,
                self.components.len()
            )));
        }
        let vars = self
            .vars
            .clone()
            .unwrap_or_else(|| default_var_names(self.dim));
        if vars.len() != self.dim {
            return Err(Error::Format(format!(
                "expected {} variable names",
                self.dim
            )));
        }
        let comps = self
            .components
            .iter()
            .map(|c| poly_from_terms(self.dim, c))
            .collect::<Result<Vec<_>>>()?;
        PolyMap::with_vars(vars, comps)
    }
}

pub fn parse_map(text: &str) -> Result<PolyMap> {
    serde_json::from_str::<MapJson>(text)?.to_map()
}

pub fn load_map(path: &Path) -> Result<PolyMap> {
    parse_map(&fs::read_to_string(path)?)
}

pub fn map_to_json(map: &PolyMap) -> String {
    serde_json::to_string(&MapJson::from_map(map)).expect("map serializes")
}

pub fn poly_to_json(p: &Poly, vars: &[String]) -> PolyJson {
    PolyJson {
        dim: p.dim(),
        vars: Some(vars.to_vec()),
        max_degree: p.max_degree(),
        terms: terms_of(p),
    }
}

pub fn poly_from_json(j: &PolyJson) -> Result<Poly> {
    Ok(poly_from_terms(j.dim, &j.terms)?.with_max_degree(j.max_degree))
}

pub fn series_to_json(v: &LyapunovSeries, vars: &[String]) -> SeriesJson {
    SeriesJson {
        dim: v.poly.dim(),
        vars: Some(vars.to_vec()),
        max_degree: v.poly.max_degree(),
        terms: terms_of(&v.poly),
        degree: Some(v.degree),
        residual_per_degree: v.residual_per_degree.clone(),
        warnings: v.warnings.clone(),
    }
}

/// Reads a series document; per-degree residuals are recomputed against `f`.
pub fn parse_series(text: &str, f: &PolyMap) -> Result<LyapunovSeries> {
    let j: SeriesJson = serde_json::from_str(text)?;
    if j.dim != f.dim() {
        return Err(Error::Format(format!(
            "series has dim {} but the map has dim {}",
            j.dim,
            f.dim()
        )));
    }
    let degree = j.degree.unwrap_or(j.max_degree);
    let poly = poly_from_terms(j.dim, &j.terms)?.with_max_degree(degree.max(j.max_degree));
    LyapunovSeries::from_poly(poly, f)
}

fn fmt_value(out: &mut String, v: Option<f64>) {
    if let Some(v) = v.filter(|v| v.is_finite()) {
        write!(out, "{v:e}").unwrap();
    }
}

/// Grid CSV: `x0,…,x{n-1},class,V,W`, one row per cell in raster order.
pub fn grid_csv(grid: &GridEstimate) -> String {
    let n = grid.raster.dim();
    let mut out = String::new();
    for a in 0..n {
        write!(out, "x{a},").unwrap();
    }
    out.push_str("class,V,W\n");
    for idx in 0..grid.raster.len() {
        for c in grid.center(idx) {
            write!(out, "{c:e},").unwrap();
        }
        out.push_str(grid.classes[idx].label());
        out.push(',');
        fmt_value(&mut out, Some(grid.values[idx]));
        out.push(',');
        fmt_value(&mut out, grid.decrement.as_ref().map(|w| w[idx]));
        out.push('\n');
    }
    out
}

/// Orbit-sum CSV: `x0,…,value,n_terms,tail_bound,capture_index`.
pub fn orbit_sum_csv(rows: &[(Vec<f64>, OrbitSumValue)]) -> String {
    let dim = rows.first().map_or(0, |(x, _)| x.len());
    let mut out = String::new();
    for a in 0..dim {
        write!(out, "x{a},").unwrap();
    }
    out.push_str("value,n_terms,tail_bound,capture_index\n");
    for (x, v) in rows {
        for c in x {
            write!(out, "{c:e},").unwrap();
        }
        write!(out, "{:e},{},{:e},", v.value, v.n_terms, v.tail_bound).unwrap();
        if let Some(k) = v.capture_index {
            write!(out, "{k}").unwrap();
        }
        out.push('\n');
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct WindowJson {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RegionSummary {
    pub c_star: Option<f64>,
    pub window: WindowJson,
    pub resolution: Vec<usize>,
    pub soundness: f64,
    pub coverage: f64,
    pub undecided_fraction: f64,
    pub window_limited: bool,
    pub soundness_all_cells: f64,
    pub mask_cells: usize,
    pub mask_cells_outside: usize,
    pub band_cells: usize,
    pub degree: u32,
    pub method: String,
}

pub fn region_summary(grid: &GridEstimate, stats: &CompareStats, degree: u32) -> RegionSummary {
    RegionSummary {
        c_star: grid.c_star,
        window: WindowJson {
            min: grid.raster.window.min.clone(),
            max: grid.raster.window.max.clone(),
        },
        resolution: grid.raster.resolution.clone(),
        soundness: stats.soundness,
        coverage: stats.coverage,
        undecided_fraction: stats.undecided_fraction,
        window_limited: grid.window_limited,
        soundness_all_cells: stats.soundness_all_cells,
        mask_cells: stats.mask_cells,
        mask_cells_outside: stats.mask_cells_outside,
        band_cells: stats.band_cells,
        degree,
        method: format!("{:?}", grid.method).to_lowercase(),
    }
}

/// Raster picture of a planar grid: mask cells filled, the boundary of the
/// oracle-InDA set drawn as an outline.
pub fn region_svg(grid: &GridEstimate) -> Result<String> {
    let r = &grid.raster;
    if r.dim() != 2 {
        return Err(Error::InvalidArgument("SVG output needs a 2-D grid".into()));
    }
    let (nx, ny) = (r.resolution[0], r.resolution[1]);
    const CELL: usize = 4;
    let (w, h) = (nx * CELL, ny * CELL);
    let mut out = String::new();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    )
    .unwrap();
    writeln!(out, r##"<rect width="{w}" height="{h}" fill="#ffffff"/>"##).unwrap();
    // screen y grows downwards; axis 1 grows upwards
    let px = |i: usize| i * CELL;
    let py = |j: usize| (ny - j) * CELL;

    if let Some(mask) = &grid.mask {
        out.push_str(r##"<path fill="#7fb3d5" stroke="none" d=""##);
        for i in 0..nx {
            for j in 0..ny {
                if mask[r.flatten(&[i, j])] {
                    write!(out, "M{} {}h{CELL}v{CELL}h-{CELL}z", px(i), py(j + 1)).unwrap();
                }
            }
        }
        out.push_str("\"/>\n");
    }

    let inside = |i: usize, j: usize| grid.classes[r.flatten(&[i, j])] == Class::InDA;
    out.push_str(r##"<path fill="none" stroke="#c0392b" stroke-width="1" d=""##);
    for i in 0..nx {
        for j in 0..ny {
            if !inside(i, j) {
                continue;
            }
            if i == 0 || !inside(i - 1, j) {
                write!(out, "M{} {}v{CELL}", px(i), py(j + 1)).unwrap();
            }
            if i + 1 == nx || !inside(i + 1, j) {
                write!(out, "M{} {}v{CELL}", px(i + 1), py(j + 1)).unwrap();
            }
            if j == 0 || !inside(i, j - 1) {
                write!(out, "M{} {}h{CELL}", px(i), py(j)).unwrap();
            }
            if j + 1 == ny || !inside(i, j + 1) {
                write!(out, "M{} {}h{CELL}", px(i), py(j + 1)).unwrap();
            }
        }
    }
    out.push_str("\"/>\n</svg>\n");
    Ok(out)
}
