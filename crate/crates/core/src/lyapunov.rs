//! Two constructions of the Lyapunov function `V` with `V(f(x)) − V(x) = −‖x‖²`,
//! `V(0) = 0`:
//!
//! * [`orbit_sum`]: the partial sum `Σ_{k≤N} ‖fᵏ(x)‖²` together with a
//!   certified bound on the remaining tail;
//! * [`series_solve`]: the Taylor polynomial of `V` up to a given degree,
//!   solved one homogeneous degree at a time.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{condition_number, norm2_squared, spectral_radius, Lu, Matrix};
use crate::map::{escaped, OrbitConfig, PolyMap};
use crate::poly::{homogeneous_basis, norm_squared_poly, Monomial, Poly};
use crate::spectral::SpectralInfo;
use crate::sum::CompensatedSum;

/// Condition number above which a degree solve is flagged.
pub const ILL_CONDITIONED: f64 = 1e12;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrbitSumValue {
    pub value: f64,
    pub n_terms: usize,
    pub tail_bound: f64,
    pub capture_index: Option<usize>,
}

/// Sums `‖fᵏ(x)‖²` until the orbit enters the certified capture ball, then
/// `cfg.n_tail` further terms.
///
/// Every computed point `y_j` inside the capture ball is a valid anchor for
/// `‖y_{j+i}‖ ≤ c̄‖y_j‖ rateⁱ`; the reported tail bound uses the best anchor:
/// `c̄² min_j ‖y_j‖² rate^{2(N+1−j)} / (1 − rate²)`.
pub fn orbit_sum(
    f: &PolyMap,
    x: &[f64],
    info: &SpectralInfo,
    cfg: &OrbitConfig,
) -> Result<OrbitSumValue> {
    if x.len() != f.dim() {
        return Err(Error::DimensionMismatch {
            expected: f.dim(),
            found: x.len(),
        });
    }
    let capture = info.certificate.capture_radius;
    let rate2 = info.certificate.rate * info.certificate.rate;

    let mut sum = CompensatedSum::new();
    let mut y = x.to_vec();
    let mut capture_index = None;
    // min over anchors j ≤ k of ‖y_j‖² rate^{2(k−j)}
    let mut anchor = f64::INFINITY;
    let mut k = 0;
    loop {
        if escaped(&y, cfg.escape_radius) {
            return Err(Error::Diverged {
                step: k,
                norm: norm2_squared(&y).sqrt(),
            });
        }
        let n2 = norm2_squared(&y);
        sum.add(n2);
        anchor *= rate2;
        if n2.sqrt() < capture {
            capture_index.get_or_insert(k);
            anchor = anchor.min(n2);
        }
        match capture_index {
            Some(kx) if k == kx + cfg.n_tail => break,
            None if k >= cfg.budget => return Err(Error::Undecided { steps: k }),
            _ => {}
        }
        y = f.eval_unchecked(&y);
        k += 1;
    }
    let tail_bound = info.c_bar * info.c_bar * anchor * rate2 / (1.0 - rate2);
    Ok(OrbitSumValue {
        value: sum.value(),
        n_terms: k + 1,
        tail_bound,
        capture_index,
    })
}

/// `V_N(x) = Σ_{k=0}^{N} ‖fᵏ(x)‖²` with `N` fixed.
pub fn partial_orbit_sum(f: &PolyMap, x: &[f64], n: usize) -> f64 {
    let mut sum = CompensatedSum::new();
    let mut y = x.to_vec();
    sum.add(norm2_squared(&y));
    for _ in 0..n {
        y = f.eval_unchecked(&y);
        sum.add(norm2_squared(&y));
    }
    sum.value()
}

/// `V(f(x)) − V(x) + ‖x‖²`.
pub fn decrement_residual<V>(f: &PolyMap, v: V, x: &[f64]) -> Result<f64>
where
    V: Fn(&[f64]) -> f64,
{
    let fx = f.eval(x)?;
    let mut sum = CompensatedSum::new();
    sum.add(v(&fx));
    sum.add(-v(x));
    sum.add(norm2_squared(x));
    Ok(sum.value())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegreeWarning {
    pub degree: u32,
    pub condition: f64,
}

/// Truncated power series of `V`, degrees `2..=degree`.
#[derive(Clone, Debug, PartialEq)]
pub struct LyapunovSeries {
    pub poly: Poly,
    pub degree: u32,
    /// Coefficient 2-norm of each slice `m = 0..=degree` of `V∘f − V + ‖x‖²`.
    pub residual_per_degree: Vec<f64>,
    pub warnings: Vec<DegreeWarning>,
}

impl LyapunovSeries {
    /// Wraps an existing polynomial (e.g. one read from disk) and recomputes
    /// its per-degree residuals against `f`.
    pub fn from_poly(poly: Poly, f: &PolyMap) -> Result<Self> {
        let degree = poly.max_degree();
        let residual_per_degree = per_degree_residual(&poly, f, degree)?;
        Ok(LyapunovSeries {
            poly,
            degree,
            residual_per_degree,
            warnings: Vec::new(),
        })
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.poly.eval(x)
    }

    /// `V∘f − V + ‖x‖²` as an untruncated polynomial. Evaluating this form avoids
    /// the cancellation of computing the three terms separately near the origin.
    pub fn decrement_poly(&self, f: &PolyMap) -> Result<Poly> {
        let full = self.poly.max_degree().max(2) * f.degree().max(1);
        let vf = self
            .poly
            .clone()
            .with_max_degree(full)
            .compose(f.components(), full)?;
        vf.sub(&self.poly)?.add(&norm_squared_poly(f.dim()))
    }
}

pub fn series_eval(v: &LyapunovSeries, x: &[f64]) -> f64 {
    v.eval(x)
}

fn per_degree_residual(v: &Poly, f: &PolyMap, degree: u32) -> Result<Vec<f64>> {
    let vf = v.compose(f.components(), degree)?;
    let r = vf.sub(v)?.add(&norm_squared_poly(f.dim()))?;
    Ok((0..=degree)
        .map(|m| {
            r.slice(m)
                .poly
                .terms()
                .fold(0.0, |acc, (_, c)| acc + c * c)
                .sqrt()
        })
        .collect())
}

/// Solves for the Taylor coefficients of `V` through degree `degree`.
pub fn series_solve(f: &PolyMap, degree: u32) -> Result<LyapunovSeries> {
    series_solve_with_ordering(f, degree, |basis| basis)
}

/// As [`series_solve`], with the monomial basis of every degree passed
/// through `reorder` before the linear system is assembled. The solution does
/// not depend on the ordering.
pub fn series_solve_with_ordering<R>(f: &PolyMap, degree: u32, reorder: R) -> Result<LyapunovSeries>
where
    R: Fn(Vec<Monomial>) -> Vec<Monomial>,
{
    if degree < 2 {
        return Err(Error::InvalidArgument("series degree must be ≥ 2".into()));
    }
    let a = f.jacobian_at_zero()?;
    let r = spectral_radius(&a, crate::linalg::STRUCTURE_TOLERANCE)?;
    if r >= 1.0 {
        return Err(Error::Hypothesis(format!("spectral radius {r} ≥ 1")));
    }
    let n = f.dim();
    let linear: Vec<Poly> = (0..n)
        .map(|i| {
            Poly::from_terms(
                n,
                (0..n).map(|j| (a[(i, j)], Monomial::var(n, j).exponents().to_vec())),
            )
        })
        .collect::<Result<_>>()?;
    let norm2 = norm_squared_poly(n);

    let mut v = Poly::zero(n, degree);
    // Σ_{j<m} V_j ∘ f, truncated at `degree`
    let mut composed = Poly::zero(n, degree);
    let mut warnings = Vec::new();

    for m in 2..=degree {
        let mut rhs_poly = composed.slice(m).poly.scale(-1.0);
        if m == 2 {
            rhs_poly = rhs_poly.sub(&norm2)?;
        }
        let basis = reorder(homogeneous_basis(n, m));
        let (values, condition) = solve_degree(&basis, &linear, &rhs_poly)?;
        if condition > ILL_CONDITIONED {
            warnings.push(DegreeWarning {
                degree: m,
                condition,
            });
        }
        let vm = Poly::from_terms(
            n,
            basis
                .iter()
                .zip(values)
                .map(|(b, c)| (c, b.exponents().to_vec())),
        )?
        .with_max_degree(degree);
        composed = composed.add(&vm.compose(f.components(), degree)?)?;
        v = v.add(&vm)?;
    }
    let v = v.with_max_degree(degree);
    let residual_per_degree = per_degree_residual(&v, f, degree)?;
    Ok(LyapunovSeries {
        poly: v,
        degree,
        residual_per_degree,
        warnings,
    })
}

/// Solves `q∘A − q = rhs` on homogeneous polynomials spanned by `basis`.
fn solve_degree(basis: &[Monomial], linear: &[Poly], rhs: &Poly) -> Result<(Vec<f64>, f64)> {
    let s = basis.len();
    let m = basis.first().map_or(0, Monomial::degree);
    let index = |mono: &Monomial| basis.iter().position(|b| b == mono);
    let mut op = vec![0.0; s * s];
    for (col, b) in basis.iter().enumerate() {
        let image = Poly::from_terms(b.dim(), [(1.0, b.exponents().to_vec())])?
            .with_max_degree(m)
            .compose(linear, m)?;
        for (mono, c) in image.terms() {
            let row = index(mono).expect("linear substitution preserves degree");
            op[row * s + col] += c;
        }
        op[col * s + col] -= 1.0;
    }
    let mut b = vec![0.0; s];
    for (mono, c) in rhs.terms() {
        let row = index(mono).expect("right-hand side is homogeneous of degree m");
        b[row] = c;
    }
    let lu = Lu::factor(s, op.clone())?;
    let cond = condition_number(s, &op, &lu);
    Ok((lu.solve(&b), cond))
}

/// `P` with `V₂(x) = xᵀPx`, read off the degree-2 coefficients.
pub fn quadratic_form(v: &LyapunovSeries) -> Matrix {
    let n = v.poly.dim();
    let mut p = Matrix::zeros(n);
    for (mono, c) in v.poly.slice(2).poly.terms() {
        let idx: Vec<usize> = mono
            .exponents()
            .iter()
            .enumerate()
            .flat_map(|(i, &e)| std::iter::repeat_n(i, e as usize))
            .collect();
        if idx[0] == idx[1] {
            p[(idx[0], idx[0])] = c;
        } else {
            p[(idx[0], idx[1])] = c / 2.0;
            p[(idx[1], idx[0])] = c / 2.0;
        }
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::examples;
    use crate::spectral::{assemble_spectral_info, SpectralConfig};

    fn scalar(a: f64, b: f64) -> PolyMap {
        PolyMap::new(vec![
            Poly::from_terms(1, [(a, vec![1]), (b, vec![2])]).unwrap()
        ])
        .unwrap()
    }

    fn info(f: &PolyMap) -> SpectralInfo {
        assemble_spectral_info(f, &SpectralConfig::default()).unwrap()
    }

    #[test]
    fn orbit_sum_geometric() {
        let f = scalar(0.5, 0.0);
        let cfg = OrbitConfig {
            n_tail: 60,
            ..Default::default()
        };
        let v = orbit_sum(&f, &[1.0], &info(&f), &cfg).unwrap();
        assert!(v.tail_bound < 1e-10);
        assert!((v.value - 4.0 / 3.0).abs() <= 1e-10);
        assert_eq!(v.capture_index, Some(1));
        assert_eq!(v.n_terms, 62);
    }

    #[test]
    fn orbit_sum_at_origin() {
        let f = examples::example_one();
        let v = orbit_sum(&f, &[0.0, 0.0], &info(&f), &OrbitConfig::default()).unwrap();
        assert_eq!(v.value, 0.0);
        assert_eq!(v.capture_index, Some(0));
        assert_eq!(v.tail_bound, 0.0);
    }

    #[test]
    fn orbit_sum_diverges_outside() {
        let f = examples::example_one();
        assert!(matches!(
            orbit_sum(&f, &[0.0, 1.5], &info(&f), &OrbitConfig::default()),
            Err(Error::Diverged { .. })
        ));
    }

    #[test]
    fn orbit_sum_undecided_on_small_budget() {
        let f = scalar(0.99, 0.0);
        let cfg = OrbitConfig {
            budget: 3,
            ..Default::default()
        };
        // capture radius is 1 for a linear map, so start outside it
        let err = orbit_sum(&f, &[50.0], &info(&f), &cfg).unwrap_err();
        assert!(matches!(err, Error::Undecided { steps: 3 }));
    }

    #[test]
    fn decrement_residual_examples() {
        let a: f64 = 0.6;
        let f = scalar(a, 0.0);
        let exact = |x: &[f64]| x[0] * x[0] / (1.0 - a * a);
        for x in [-3.0, 0.1, 2.5] {
            assert!(decrement_residual(&f, exact, &[x]).unwrap().abs() < 1e-12);
        }

        let z = PolyMap::zero(2);
        let v0 = |x: &[f64]| norm2_squared(x);
        assert_eq!(decrement_residual(&z, v0, &[1.0, 2.0]).unwrap(), 0.0);

        let half = scalar(0.5, 0.0);
        assert_eq!(decrement_residual(&half, v0, &[1.0]).unwrap(), 0.25);
    }

    #[test]
    fn series_scalar_linear() {
        let a = 0.3;
        let v = series_solve(&scalar(a, 0.0), 4).unwrap();
        assert!((v.poly.coeff(&[2]) - 1.0 / (1.0 - a * a)).abs() < 1e-14);
        assert_eq!(v.poly.coeff(&[3]), 0.0);
        assert_eq!(v.poly.coeff(&[4]), 0.0);
    }

    #[test]
    fn series_scalar_quadratic() {
        let v = series_solve(&scalar(0.5, 1.0), 3).unwrap();
        assert!((v.poly.coeff(&[2]) - 4.0 / 3.0).abs() < 1e-14);
        let want = 2.0 * 0.5 * 1.0 * (4.0 / 3.0) / (1.0 - 0.125);
        assert!((v.poly.coeff(&[3]) - want).abs() < 1e-14);
        assert!((v.poly.coeff(&[3]) - 1.523809523809524).abs() < 1e-12);
        let at = series_eval(&v, &[0.1]);
        assert!((at - (4.0 / 3.0 * 0.01 + want * 0.001)).abs() < 1e-15);
        assert!((at - 0.014857142857142857).abs() < 1e-12);
    }

    #[test]
    fn series_example_one_degree_two() {
        let v = series_solve(&examples::example_one(), 2).unwrap();
        assert_eq!(v.poly.len(), 2);
        assert_eq!(v.poly.coeff(&[2, 0]), 1.0);
        assert_eq!(v.poly.coeff(&[0, 2]), 2.0);
        assert_eq!(series_eval(&v, &[1.0, 1.0]), 3.0);
        assert_eq!(series_eval(&v, &[0.0, 0.0]), 0.0);
        assert!(v.residual_per_degree.iter().all(|&r| r == 0.0));
    }

    #[test]
    fn series_zero_map() {
        let v = series_solve(&PolyMap::zero(2), 4).unwrap();
        assert_eq!(v.poly, norm_squared_poly(2).with_max_degree(4));
    }

    #[test]
    fn series_rejects_bad_input() {
        assert!(series_solve(&scalar(1.5, 0.0), 4).is_err());
        assert!(series_solve(&examples::example_one(), 1).is_err());
    }

    #[test]
    fn quadratic_form_matches_stein() {
        let f = PolyMap::linear(&Matrix::from_rows(&[vec![0.2, 0.7], vec![-0.3, 0.1]])).unwrap();
        let v = series_solve(&f, 2).unwrap();
        let p = quadratic_form(&v);
        let stein = crate::spectral::solve_stein(&f.jacobian_at_zero().unwrap()).unwrap();
        assert!(p.sub(&stein).max_abs() < 1e-10);
    }
}
