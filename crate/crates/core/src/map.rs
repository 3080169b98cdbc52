//! Polynomial maps `x ↦ f(x)` on ℝⁿ and their orbits.

use crate::error::{Error, Result};
use crate::linalg::{norm2, Matrix};
use crate::poly::{Monomial, Poly, PowerTable};

/// Relative tolerance for accepting a user-supplied fixed point.
pub const FIXED_POINT_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct PolyMap {
    vars: Vec<String>,
    components: Vec<Poly>,
    max_exponents: Vec<u32>,
}

/// Iteration limits shared by the orbit-based routines.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrbitConfig {
    /// Maximum number of map applications before capture.
    pub budget: usize,
    pub escape_radius: f64,
    /// Extra steps taken after capture by orbit sums.
    pub n_tail: usize,
}

impl Default for OrbitConfig {
    fn default() -> Self {
        OrbitConfig {
            budget: 10_000,
            escape_radius: 1e8,
            n_tail: 10,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    Captured,
    Escaped,
    BudgetExhausted,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Orbit {
    pub points: Vec<Vec<f64>>,
    pub terminated_by: Termination,
}

pub fn default_var_names(dim: usize) -> Vec<String> {
    match dim {
        1 => vec!["x".into()],
        2 => vec!["x".into(), "y".into()],
        3 => vec!["x".into(), "y".into(), "z".into()],
        _ => (0..dim).map(|i| format!("x{i}")).collect(),
    }
}

impl PolyMap {
    pub fn new(components: Vec<Poly>) -> Result<Self> {
        let dim = components.len();
        Self::with_vars(default_var_names(dim), components)
    }

    pub fn with_vars(vars: Vec<String>, components: Vec<Poly>) -> Result<Self> {
        let dim = components.len();
        if dim == 0 {
            return Err(Error::InvalidArgument(
                "map must have at least one component".into(),
            ));
        }
        if vars.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: vars.len(),
            });
        }
        let mut max_exponents = vec![0; dim];
        for c in &components {
            if c.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: c.dim(),
                });
            }
            for (m, e) in max_exponents.iter_mut().zip(c.max_exponents()) {
                *m = (*m).max(e);
            }
        }
        Ok(PolyMap {
            vars,
            components,
            max_exponents,
        })
    }

    /// The map `x ↦ A x`.
    pub fn linear(a: &Matrix) -> Result<Self> {
        let n = a.n();
        let comps = (0..n)
            .map(|i| {
                Poly::from_terms(
                    n,
                    (0..n).map(|j| (a[(i, j)], Monomial::var(n, j).exponents().to_vec())),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(comps)
    }

    pub fn zero(dim: usize) -> Self {
        Self::new((0..dim).map(|_| Poly::zero(dim, 0)).collect()).expect("valid zero map")
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn components(&self) -> &[Poly] {
        &self.components
    }

    pub fn degree(&self) -> u32 {
        self.components.iter().map(Poly::degree).max().unwrap_or(0)
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        Ok(())
    }

    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_point(x)?;
        Ok(self.eval_unchecked(x))
    }

    pub(crate) fn eval_unchecked(&self, x: &[f64]) -> Vec<f64> {
        let powers = PowerTable::new(x, self.max_exponents.clone());
        self.components
            .iter()
            .map(|c| c.eval_with(&powers))
            .collect()
    }

    /// True when every component has a zero constant term.
    pub fn is_origin_fixed(&self) -> bool {
        self.first_constant().is_none()
    }

    fn first_constant(&self) -> Option<(usize, f64)> {
        let zero = vec![0; self.dim()];
        self.components
            .iter()
            .enumerate()
            .map(|(i, c)| (i, c.coeff(&zero)))
            .find(|&(_, c)| c != 0.0)
    }

    pub(crate) fn require_origin_fixed(&self) -> Result<()> {
        match self.first_constant() {
            None => Ok(()),
            Some((component, constant)) => Err(Error::NotOriginFixed {
                component,
                constant,
            }),
        }
    }

    /// Runs up to `budget` steps from `x`, stopping once `‖x_k‖ > escape_radius`
    /// or a coordinate becomes non-finite.
    pub fn iterate(&self, x: &[f64], budget: usize, escape_radius: f64) -> Result<Orbit> {
        self.iterate_with(x, budget, escape_radius, |_, _| false)
    }

    /// Like [`iterate`](Self::iterate), but `stop(k, x_k)` returning true ends the
    /// orbit with [`Termination::Captured`].
    pub fn iterate_with<F>(
        &self,
        x: &[f64],
        budget: usize,
        escape_radius: f64,
        mut stop: F,
    ) -> Result<Orbit>
    where
        F: FnMut(usize, &[f64]) -> bool,
    {
        self.check_point(x)?;
        if budget == 0 || escape_radius.is_nan() || escape_radius <= 0.0 {
            return Err(Error::InvalidArgument(
                "budget must be ≥ 1 and escape radius > 0".into(),
            ));
        }
        let mut points = vec![x.to_vec()];
        let mut k = 0;
        loop {
            let current = &points[k];
            if escaped(current, escape_radius) {
                return Ok(Orbit {
                    points,
                    terminated_by: Termination::Escaped,
                });
            }
            if stop(k, current) {
                return Ok(Orbit {
                    points,
                    terminated_by: Termination::Captured,
                });
            }
            if k == budget {
                return Ok(Orbit {
                    points,
                    terminated_by: Termination::BudgetExhausted,
                });
            }
            let next = self.eval_unchecked(current);
            points.push(next);
            k += 1;
        }
    }

    /// Moves the fixed point `x0` of `self` to the origin:
    /// `f(y) = g(y + x0) − x0`. The constant terms of `f` are set to exactly 0
    /// once the residual `‖g(x0) − x0‖` has been checked.
    pub fn shift_fixed_point(&self, x0: &[f64]) -> Result<PolyMap> {
        self.check_point(x0)?;
        let gx0 = self.eval_unchecked(x0);
        let residual = norm2(&gx0.iter().zip(x0).map(|(a, b)| a - b).collect::<Vec<_>>());
        let tolerance = FIXED_POINT_TOLERANCE * (1.0 + norm2(x0));
        if residual.is_nan() || residual > tolerance {
            return Err(Error::NotFixedPoint {
                residual,
                tolerance,
            });
        }
        if x0.iter().all(|&c| c == 0.0) {
            return Ok(self.clone());
        }

        let n = self.dim();
        let deg = self.degree().max(1);
        // y_j + x0_j
        let shifted_vars: Vec<Poly> = (0..n)
            .map(|j| {
                Poly::from_terms(
                    n,
                    [
                        (1.0, Monomial::var(n, j).exponents().to_vec()),
                        (x0[j], vec![0; n]),
                    ],
                )
                .map(|p| p.with_max_degree(deg))
            })
            .collect::<Result<_>>()?;

        let mut comps = Vec::with_capacity(n);
        for g in &self.components {
            let mut acc = Poly::zero(n, deg);
            for (m, c) in g.terms() {
                let mut term = Poly::constant(n, deg, c);
                for (j, &e) in m.exponents().iter().enumerate() {
                    for _ in 0..e {
                        term = term.mul_truncated(&shifted_vars[j], deg)?;
                    }
                }
                acc = acc.add(&term)?;
            }
            let without_constant: Vec<(f64, Vec<u32>)> = acc
                .terms()
                .filter(|(m, _)| m.degree() > 0)
                .map(|(m, c)| (c, m.exponents().to_vec()))
                .collect();
            comps.push(Poly::from_terms(n, without_constant)?);
        }
        PolyMap::with_vars(self.vars.clone(), comps)
    }

    /// Degree-one coefficients, read off exactly: `A[i][j] = ∂f_i/∂x_j (0)`.
    pub fn jacobian_at_zero(&self) -> Result<Matrix> {
        self.require_origin_fixed()?;
        let n = self.dim();
        let mut a = Matrix::zeros(n);
        for (i, c) in self.components.iter().enumerate() {
            for j in 0..n {
                a[(i, j)] = c.coeff(Monomial::var(n, j).exponents());
            }
        }
        Ok(a)
    }

    /// `h = f − A x`: every term of degree ≥ 2.
    pub fn nonlinear_part(&self) -> Result<PolyMap> {
        self.require_origin_fixed()?;
        let n = self.dim();
        let comps = self
            .components
            .iter()
            .map(|c| {
                Poly::from_terms(
                    n,
                    c.terms()
                        .filter(|(m, _)| m.degree() >= 2)
                        .map(|(m, c)| (c, m.exponents().to_vec())),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        PolyMap::with_vars(self.vars.clone(), comps)
    }
}

pub(crate) fn escaped(x: &[f64], escape_radius: f64) -> bool {
    let n = norm2(x);
    !n.is_finite() || n > escape_radius
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::examples;

    #[test]
    fn eval_example_one() {
        let f = examples::example_one();
        assert_eq!(f.eval(&[1.0, 0.5]).unwrap(), vec![1.0, 0.125]);
    }

    #[test]
    fn eval_example_two() {
        let f = examples::example_two();
        let y = f.eval(&[0.1, 0.2]).unwrap();
        assert!((y[0] - 0.24).abs() < 1e-15);
        assert!((y[1] - 0.02).abs() < 1e-15);
    }

    #[test]
    fn eval_zero_map() {
        let f = PolyMap::zero(3);
        assert_eq!(f.eval(&[1.0, -2.0, 7.0]).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn eval_dimension_mismatch() {
        let f = examples::example_one();
        assert!(matches!(
            f.eval(&[1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(f.iterate(&[1.0, 2.0, 3.0], 3, 10.0).is_err());
    }

    #[test]
    fn iterate_example_one_cubes_y() {
        let f = examples::example_one();
        let orbit = f.iterate(&[0.0, 0.5], 4, 1e6).unwrap();
        assert_eq!(orbit.terminated_by, Termination::BudgetExhausted);
        assert_eq!(orbit.points.len(), 5);
        let ys: Vec<f64> = orbit.points.iter().map(|p| p[1]).collect();
        assert_eq!(&ys[..3], &[0.5, 0.125, 0.001953125]);
        assert_eq!(ys[3], 0.001953125f64.powi(3));
    }

    #[test]
    fn iterate_linear_zero() {
        let f = PolyMap::linear(&Matrix::zeros(2)).unwrap();
        let orbit = f.iterate(&[3.0, -4.0], 5, 1e6).unwrap();
        assert!(orbit.points[1..].iter().all(|p| p == &vec![0.0, 0.0]));
    }

    #[test]
    fn iterate_example_one_escapes() {
        let f = examples::example_one();
        let orbit = f.iterate(&[0.0, 1.5], 100, 1e6).unwrap();
        assert_eq!(orbit.terminated_by, Termination::Escaped);
        // y_3 = 1.5^27 ≈ 5.7e4 is still inside; y_4 = 1.5^81 is not
        assert_eq!(orbit.points.len(), 5);
    }

    #[test]
    fn iterate_rejects_bad_args() {
        let f = examples::example_one();
        assert!(f.iterate(&[0.0, 0.5], 0, 1.0).is_err());
        assert!(f.iterate(&[0.0, 0.5], 3, 0.0).is_err());
    }

    #[test]
    fn shift_identity_at_origin() {
        let f = examples::example_one();
        assert_eq!(f.shift_fixed_point(&[0.0, 0.0]).unwrap(), f);
    }

    #[test]
    fn shift_scalar_square() {
        let g = PolyMap::new(vec![Poly::from_terms(1, [(1.0, vec![2])]).unwrap()]).unwrap();
        let f = g.shift_fixed_point(&[1.0]).unwrap();
        let c = &f.components()[0];
        assert_eq!(c.len(), 2);
        assert_eq!(c.coeff(&[1]), 2.0);
        assert_eq!(c.coeff(&[2]), 1.0);
        assert_eq!(c.coeff(&[0]), 0.0);
    }

    #[test]
    fn shift_rejects_non_fixed_point() {
        let g = PolyMap::new(vec![Poly::from_terms(1, [(1.0, vec![2])]).unwrap()]).unwrap();
        match g.shift_fixed_point(&[2.0]) {
            Err(Error::NotFixedPoint { residual, .. }) => assert_eq!(residual, 2.0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn jacobians_of_bundled_examples() {
        let nil = Matrix::from_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]);
        assert_eq!(examples::example_one().jacobian_at_zero().unwrap(), nil);
        assert_eq!(examples::example_two().jacobian_at_zero().unwrap(), nil);
        assert_eq!(
            PolyMap::zero(2).jacobian_at_zero().unwrap(),
            Matrix::zeros(2)
        );
    }

    #[test]
    fn jacobian_requires_origin_fixed() {
        let g = PolyMap::new(vec![
            Poly::from_terms(1, [(1.0, vec![2]), (0.5, vec![0])]).unwrap()
        ])
        .unwrap();
        assert!(matches!(
            g.jacobian_at_zero(),
            Err(Error::NotOriginFixed { .. })
        ));
    }

    #[test]
    fn nonlinear_parts() {
        let h = examples::example_one().nonlinear_part().unwrap();
        assert_eq!(
            h.components()[0],
            Poly::from_terms(2, [(1.0, vec![1, 1])]).unwrap()
        );
        assert_eq!(
            h.components()[1],
            Poly::from_terms(2, [(1.0, vec![0, 3])]).unwrap()
        );

        let h2 = examples::example_two().nonlinear_part().unwrap();
        assert_eq!(
            h2.components()[0],
            Poly::from_terms(2, [(4.0, vec![2, 0])]).unwrap()
        );
        assert_eq!(
            h2.components()[1],
            Poly::from_terms(2, [(1.0, vec![1, 1])]).unwrap()
        );

        let lin = PolyMap::linear(&Matrix::from_rows(&[vec![0.3, 1.0], vec![0.0, 0.2]])).unwrap();
        assert!(lin
            .nonlinear_part()
            .unwrap()
            .components()
            .iter()
            .all(Poly::is_zero));
    }
}
