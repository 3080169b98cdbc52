//! Sparse multivariate polynomials truncated by total degree.
//!
//! Terms are stored in a `BTreeMap` keyed by [`Monomial`], whose ordering is
//! graded lexicographic, so iteration, evaluation and serialization order are
//! reproducible. After every arithmetic operation coefficients with magnitude
//! below [`DROP_TOLERANCE`] are removed.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};

/// Coefficients smaller than this after arithmetic are dropped.
pub const DROP_TOLERANCE: f64 = 1e-14;

/// Exponent vector of a monomial.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Monomial(Vec<u32>);

impl Monomial {
    pub fn new(exponents: Vec<u32>) -> Self {
        Monomial(exponents)
    }

    pub fn one(dim: usize) -> Self {
        Monomial(vec![0; dim])
    }

    /// The monomial `x_var`.
    pub fn var(dim: usize, var: usize) -> Self {
        let mut e = vec![0; dim];
        e[var] = 1;
        Monomial(e)
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(x)
            .map(|(&e, &xi)| xi.powi(e as i32))
            .product()
    }
}

impl Ord for Monomial {
    // Ascending total degree; within a degree, larger exponent on earlier
    // variables first (x^2, xy, y^2).
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// All exponent vectors of total degree `degree` in `dim` variables, in
/// graded-lexicographic order.
pub fn homogeneous_basis(dim: usize, degree: u32) -> Vec<Monomial> {
    fn rec(dim: usize, remaining: u32, prefix: &mut Vec<u32>, out: &mut Vec<Monomial>) {
        if prefix.len() + 1 == dim {
            prefix.push(remaining);
            out.push(Monomial(prefix.clone()));
            prefix.pop();
            return;
        }
        for e in (0..=remaining).rev() {
            prefix.push(e);
            rec(dim, remaining - e, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if dim == 0 {
        return out;
    }
    rec(dim, degree, &mut Vec::with_capacity(dim), &mut out);
    out
}

/// A polynomial in `dim` variables with no terms above `max_degree`.
#[derive(Clone, PartialEq, Debug)]
pub struct Poly {
    dim: usize,
    max_degree: u32,
    terms: BTreeMap<Monomial, f64>,
}

/// The degree-`degree` part of a polynomial.
#[derive(Clone, PartialEq, Debug)]
pub struct HomogeneousSlice {
    pub degree: u32,
    pub poly: Poly,
}

impl Poly {
    pub fn zero(dim: usize, max_degree: u32) -> Self {
        Poly {
            dim,
            max_degree,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(dim: usize, max_degree: u32, c: f64) -> Self {
        let mut p = Poly::zero(dim, max_degree);
        p.add_term(Monomial::one(dim), c);
        p
    }

    /// The coordinate polynomial `x_var`.
    pub fn var(dim: usize, max_degree: u32, var: usize) -> Self {
        let mut p = Poly::zero(dim, max_degree);
        p.add_term(Monomial::var(dim, var), 1.0);
        p
    }

    /// Builds a polynomial from (coefficient, exponents) pairs. Duplicate
    /// exponents are summed and exact zeros dropped. `max_degree` becomes the
    /// actual total degree, so no term is lost.
    pub fn from_terms<I>(dim: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (f64, Vec<u32>)>,
    {
        let mut map: BTreeMap<Monomial, f64> = BTreeMap::new();
        for (c, e) in terms {
            if e.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: e.len(),
                });
            }
            if !c.is_finite() {
                return Err(Error::NonFinite("polynomial coefficient"));
            }
            *map.entry(Monomial(e)).or_insert(0.0) += c;
        }
        map.retain(|_, c| *c != 0.0);
        let max_degree = map.keys().map(Monomial::degree).max().unwrap_or(0);
        Ok(Poly {
            dim,
            max_degree,
            terms: map,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn max_degree(&self) -> u32 {
        self.max_degree
    }

    /// Highest total degree of a stored term (0 for the zero polynomial).
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    /// Lowest total degree of a stored term, `None` for zero.
    pub fn min_degree(&self) -> Option<u32> {
        self.terms.keys().map(Monomial::degree).min()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, f64)> + '_ {
        self.terms.iter().map(|(m, &c)| (m, c))
    }

    pub fn coeff(&self, exponents: &[u32]) -> f64 {
        self.terms
            .get(&Monomial(exponents.to_vec()))
            .copied()
            .unwrap_or(0.0)
    }

    /// Sum of absolute values of all coefficients.
    pub fn abs_sum(&self) -> f64 {
        self.terms.values().map(|c| c.abs()).sum()
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// Re-truncates at a new bound.
    pub fn with_max_degree(mut self, max_degree: u32) -> Self {
        self.max_degree = max_degree;
        self.terms.retain(|m, _| m.degree() <= max_degree);
        self
    }

    fn add_term(&mut self, m: Monomial, c: f64) {
        if m.degree() > self.max_degree {
            return;
        }
        *self.terms.entry(m).or_insert(0.0) += c;
    }

    fn canonicalize(mut self) -> Self {
        self.terms.retain(|_, c| c.abs() >= DROP_TOLERANCE);
        self
    }

    fn check_dim(&self, other: &Poly) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        Ok(())
    }

    /// `self + other`; the truncation bound is the larger of the two.
    pub fn add(&self, other: &Poly) -> Result<Poly> {
        self.check_dim(other)?;
        let mut out = self.clone();
        out.max_degree = self.max_degree.max(other.max_degree);
        for (m, &c) in &other.terms {
            out.add_term(m.clone(), c);
        }
        Ok(out.canonicalize())
    }

    pub fn sub(&self, other: &Poly) -> Result<Poly> {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, s: f64) -> Poly {
        let mut out = self.clone();
        for c in out.terms.values_mut() {
            *c *= s;
        }
        out.canonicalize()
    }

    /// Product truncated at the smaller of the two bounds.
    pub fn mul(&self, other: &Poly) -> Result<Poly> {
        self.mul_truncated(other, self.max_degree.min(other.max_degree))
    }

    pub fn mul_truncated(&self, other: &Poly, max_degree: u32) -> Result<Poly> {
        self.check_dim(other)?;
        let mut out = Poly::zero(self.dim, max_degree);
        for (ma, &ca) in &self.terms {
            let da = ma.degree();
            if da > max_degree {
                continue;
            }
            for (mb, &cb) in &other.terms {
                if da + mb.degree() <= max_degree {
                    out.add_term(ma.mul(mb), ca * cb);
                }
            }
        }
        Ok(out.canonicalize())
    }

    /// Exactly the degree-`m` terms.
    pub fn slice(&self, m: u32) -> HomogeneousSlice {
        let mut poly = Poly::zero(self.dim, self.max_degree);
        for (mono, &c) in &self.terms {
            if mono.degree() == m {
                poly.terms.insert(mono.clone(), c);
            }
        }
        HomogeneousSlice { degree: m, poly }
    }

    /// All nonempty homogeneous slices, lowest degree first.
    pub fn slices(&self) -> Vec<HomogeneousSlice> {
        let mut out: Vec<HomogeneousSlice> = Vec::new();
        for (mono, &c) in &self.terms {
            let d = mono.degree();
            if out.last().map(|s| s.degree) != Some(d) {
                out.push(HomogeneousSlice {
                    degree: d,
                    poly: Poly::zero(self.dim, self.max_degree),
                });
            }
            out.last_mut().unwrap().poly.terms.insert(mono.clone(), c);
        }
        out
    }

    /// Evaluates at `x`. Powers of each coordinate are computed once per call.
    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        let powers = PowerTable::new(x, self.max_exponents());
        self.eval_with(&powers)
    }

    pub(crate) fn eval_with(&self, powers: &PowerTable) -> f64 {
        self.terms
            .iter()
            .map(|(m, &c)| c * powers.monomial(m))
            .sum()
    }

    pub(crate) fn max_exponents(&self) -> Vec<u32> {
        let mut out = vec![0; self.dim];
        for m in self.terms.keys() {
            for (o, &e) in out.iter_mut().zip(&m.0) {
                *o = (*o).max(e);
            }
        }
        out
    }

    /// `self ∘ f`, truncated at `max_degree`. `components` must have no
    /// constant terms so that each term's degree can only grow.
    pub fn compose(&self, components: &[Poly], max_degree: u32) -> Result<Poly> {
        if components.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: components.len(),
            });
        }
        let inner_dim = components.first().map_or(self.dim, Poly::dim);
        for (i, c) in components.iter().enumerate() {
            if c.dim != inner_dim {
                return Err(Error::DimensionMismatch {
                    expected: inner_dim,
                    found: c.dim,
                });
            }
            let constant = c.coeff(&vec![0; inner_dim]);
            if constant != 0.0 {
                return Err(Error::NotOriginFixed {
                    component: i,
                    constant,
                });
            }
        }

        let max_exp = self.max_exponents();
        // powers[i][k] = f_i^k truncated at max_degree
        let mut powers: Vec<Vec<Poly>> = Vec::with_capacity(self.dim);
        for (i, comp) in components.iter().enumerate() {
            let comp = comp.clone().with_max_degree(max_degree);
            let mut row = vec![Poly::constant(inner_dim, max_degree, 1.0)];
            for k in 1..=max_exp[i].min(max_degree) {
                let next = row[k as usize - 1].mul_truncated(&comp, max_degree)?;
                row.push(next);
            }
            powers.push(row);
        }

        let mut out = Poly::zero(inner_dim, max_degree);
        for (m, &c) in &self.terms {
            if m.degree() > max_degree {
                continue;
            }
            let mut term = Poly::constant(inner_dim, max_degree, c);
            for (i, &e) in m.0.iter().enumerate() {
                if e > 0 {
                    term = term.mul_truncated(&powers[i][e as usize], max_degree)?;
                }
            }
            for (tm, tc) in term.terms {
                out.add_term(tm, tc);
            }
        }
        Ok(out.canonicalize())
    }
}

/// Σᵢ xᵢ², exact.
pub fn norm_squared_poly(dim: usize) -> Poly {
    let mut p = Poly::zero(dim, 2);
    for i in 0..dim {
        let mut e = vec![0; dim];
        e[i] = 2;
        p.add_term(Monomial(e), 1.0);
    }
    p
}

/// Per-point powers `x_i^k` for `k ≤ max_exponent[i]`.
pub(crate) struct PowerTable {
    rows: Vec<Vec<f64>>,
}

impl PowerTable {
    pub(crate) fn new(x: &[f64], max_exponent: Vec<u32>) -> Self {
        let rows = x
            .iter()
            .zip(max_exponent)
            .map(|(&xi, e)| {
                let mut row = Vec::with_capacity(e as usize + 1);
                row.push(1.0);
                for k in 1..=e as usize {
                    row.push(row[k - 1] * xi);
                }
                row
            })
            .collect();
        PowerTable { rows }
    }

    fn monomial(&self, m: &Monomial) -> f64 {
        m.0.iter()
            .zip(&self.rows)
            .map(|(&e, row)| row[e as usize])
            .product()
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (m, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{c}")?;
            for (v, &e) in m.0.iter().enumerate() {
                match e {
                    0 => {}
                    1 => write!(f, "*x{v}")?,
                    _ => write!(f, "*x{v}^{e}")?,
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(dim: usize, terms: &[(f64, &[u32])]) -> Poly {
        Poly::from_terms(dim, terms.iter().map(|(c, e)| (*c, e.to_vec()))).unwrap()
    }

    #[test]
    fn difference_of_squares() {
        let a = p(2, &[(1.0, &[1, 0]), (1.0, &[0, 1])]);
        let b = p(2, &[(1.0, &[1, 0]), (-1.0, &[0, 1])]);
        let prod = a.mul_truncated(&b, 4).unwrap();
        assert_eq!(prod.len(), 2);
        assert_eq!(prod.coeff(&[2, 0]), 1.0);
        assert_eq!(prod.coeff(&[0, 2]), -1.0);
        assert_eq!(prod.coeff(&[1, 1]), 0.0);
    }

    #[test]
    fn mul_by_zero() {
        let a = p(2, &[(3.0, &[1, 2]), (1.0, &[0, 1])]);
        let z = Poly::zero(2, 8);
        assert!(a.mul_truncated(&z, 8).unwrap().is_zero());
    }

    #[test]
    fn mul_truncates_by_total_degree() {
        let x2 = p(2, &[(1.0, &[2, 0])]).with_max_degree(4);
        let y3 = p(2, &[(1.0, &[0, 3])]).with_max_degree(4);
        assert!(x2.mul(&y3).unwrap().is_zero());
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let a = p(2, &[(1.0, &[1, 0])]);
        let b = p(1, &[(1.0, &[1])]);
        assert!(matches!(a.add(&b), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(a.mul(&b), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn compose_scalar_quadratic() {
        let (a, b) = (0.7, -1.3);
        let x2 = p(1, &[(1.0, &[2])]);
        let f = p(1, &[(a, &[1]), (b, &[2])]);
        let out = x2.compose(&[f], 3).unwrap();
        assert_eq!(out.len(), 2);
        assert!((out.coeff(&[2]) - a * a).abs() < 1e-15);
        assert!((out.coeff(&[3]) - 2.0 * a * b).abs() < 1e-15);
    }

    #[test]
    fn compose_with_identity() {
        let q = p(2, &[(1.5, &[2, 1]), (-2.0, &[0, 3]), (0.25, &[1, 0])]);
        let id = [Poly::var(2, 1, 0), Poly::var(2, 1, 1)];
        assert_eq!(q.compose(&id, 3).unwrap().terms, q.terms);
    }

    #[test]
    fn compose_y_squared_with_example_one() {
        let y2 = p(2, &[(1.0, &[0, 2])]);
        let f = [
            p(2, &[(1.0, &[1, 1]), (1.0, &[0, 1])]),
            p(2, &[(1.0, &[0, 3])]),
        ];
        let full = y2.compose(&f, 6).unwrap();
        assert_eq!(full.len(), 1);
        assert_eq!(full.coeff(&[0, 6]), 1.0);
        assert!(y2.compose(&f, 5).unwrap().is_zero());
    }

    #[test]
    fn compose_rejects_constant_terms() {
        let q = p(1, &[(1.0, &[2])]);
        let f = p(1, &[(1.0, &[0]), (1.0, &[1])]);
        assert!(matches!(
            q.compose(&[f], 4),
            Err(Error::NotOriginFixed { .. })
        ));
    }

    #[test]
    fn norm_squared() {
        for dim in 1..=3 {
            let n = norm_squared_poly(dim);
            assert_eq!(n.len(), dim);
            for i in 0..dim {
                let mut e = vec![0; dim];
                e[i] = 2;
                assert_eq!(n.coeff(&e), 1.0);
            }
        }
    }

    #[test]
    fn slice_and_eval() {
        let q = p(2, &[(1.0, &[2, 0]), (2.0, &[0, 2]), (1.0, &[3, 0])]);
        let s = q.slice(2);
        assert_eq!(
            s.poly,
            p(2, &[(1.0, &[2, 0]), (2.0, &[0, 2])]).with_max_degree(3)
        );
        assert_eq!(s.poly.eval(&[1.0, 1.0]), 3.0);
        assert!(q.slice(1).poly.is_zero());
        assert!(q.slice(0).poly.is_zero());
    }

    #[test]
    fn slices_reconstruct() {
        let q = p(
            2,
            &[
                (1.0, &[0, 0]),
                (2.0, &[0, 2]),
                (-1.0, &[3, 0]),
                (4.0, &[1, 1]),
            ],
        );
        let mut acc = Poly::zero(2, q.max_degree());
        for s in q.slices() {
            acc = acc.add(&s.poly).unwrap();
        }
        assert_eq!(acc, q);
    }

    #[test]
    fn dust_dropped() {
        let a = p(1, &[(1.0, &[1])]);
        let b = p(1, &[(-1.0 + 1e-16, &[1])]);
        assert!(a.add(&b).unwrap().is_zero());
    }

    #[test]
    fn graded_lex_order() {
        let basis = homogeneous_basis(2, 2);
        let exps: Vec<_> = basis.iter().map(|m| m.exponents().to_vec()).collect();
        assert_eq!(exps, vec![vec![2, 0], vec![1, 1], vec![0, 2]]);
        let mut sorted = homogeneous_basis(3, 3);
        let n = sorted.len();
        assert_eq!(n, 10);
        sorted.sort();
        assert_eq!(sorted, homogeneous_basis(3, 3));
        assert!(Monomial::new(vec![0, 1]) < Monomial::new(vec![2, 0]));
    }
}
