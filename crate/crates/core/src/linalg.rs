//! Small dense real matrices: products, powers, eigenvalues via Hessenberg
//! reduction and Francis double-shift QR, and pivoted Gaussian elimination.

#![allow(clippy::needless_range_loop)]

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};

/// Threshold below which matrix entries count as zero in the structural
/// pre-checks of [`spectral_radius`].
pub const STRUCTURE_TOLERANCE: f64 = 1e-14;

pub fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn norm2_squared(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

/// Square matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Matrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn diag(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len());
        for (i, &v) in d.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    /// Panics if the rows are ragged or not square.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for r in rows {
            assert_eq!(r.len(), n, "matrix must be square");
            data.extend_from_slice(r);
        }
        Matrix { n, data }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data
            .chunks(self.n.max(1))
            .map(<[f64]>::to_vec)
            .collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Self::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        Matrix {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        Matrix {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn scale(&self, s: f64) -> Matrix {
        Matrix {
            n: self.n,
            data: self.data.iter().map(|a| a * s).collect(),
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self[(i, j)] * x[j]).sum())
            .collect()
    }

    pub fn pow(&self, k: usize) -> Matrix {
        let mut out = Self::identity(self.n);
        for _ in 0..k {
            out = out.mul(self);
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn frobenius(&self) -> f64 {
        norm2(&self.data)
    }

    /// Maximum absolute column sum.
    pub fn norm1(&self) -> f64 {
        (0..self.n)
            .map(|j| (0..self.n).map(|i| self[(i, j)].abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn is_upper_triangular(&self, tol: f64) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| self[(i, j)].abs() <= tol))
    }

    pub fn is_lower_triangular(&self, tol: f64) -> bool {
        (0..self.n).all(|i| (i + 1..self.n).all(|j| self[(i, j)].abs() <= tol))
    }

    pub fn symmetric_part(&self) -> Matrix {
        self.add(&self.transpose()).scale(0.5)
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

/// Eigenvalues `(re, im)` of a real square matrix.
pub fn eigenvalues(a: &Matrix) -> Result<Vec<(f64, f64)>> {
    if !a.is_finite() {
        return Err(Error::NonFinite("matrix"));
    }
    let n = a.n();
    if n == 0 {
        return Ok(Vec::new());
    }
    // 1-based working copy, matching the classic formulation of the algorithm.
    let mut h = vec![vec![0.0; n + 1]; n + 1];
    for i in 0..n {
        for j in 0..n {
            h[i + 1][j + 1] = a[(i, j)];
        }
    }
    hessenberg(&mut h, n);
    hqr(&mut h, n)
}

/// Reduction to upper Hessenberg form by stabilized elementary similarity
/// transforms.
fn hessenberg(a: &mut [Vec<f64>], n: usize) {
    for m in 2..n {
        let mut x: f64 = 0.0;
        let mut i = m;
        for j in m..=n {
            if a[j][m - 1].abs() > x.abs() {
                x = a[j][m - 1];
                i = j;
            }
        }
        if i != m {
            for j in (m - 1)..=n {
                let t = a[i][j];
                a[i][j] = a[m][j];
                a[m][j] = t;
            }
            for row in a.iter_mut().take(n + 1).skip(1) {
                row.swap(i, m);
            }
        }
        if x != 0.0 {
            for i in (m + 1)..=n {
                let mut y = a[i][m - 1];
                if y != 0.0 {
                    y /= x;
                    a[i][m - 1] = y;
                    for j in m..=n {
                        a[i][j] -= y * a[m][j];
                    }
                    for j in 1..=n {
                        a[j][m] += y * a[j][i];
                    }
                }
            }
        }
    }
    for i in 3..=n {
        for j in 1..(i - 1) {
            a[i][j] = 0.0;
        }
    }
}

fn sign(a: f64, b: f64) -> f64 {
    if b >= 0.0 {
        a.abs()
    } else {
        -a.abs()
    }
}

/// Francis double-shift QR on an upper Hessenberg matrix (1-based storage).
fn hqr(a: &mut [Vec<f64>], n: usize) -> Result<Vec<(f64, f64)>> {
    let mut wr = vec![0.0; n + 1];
    let mut wi = vec![0.0; n + 1];
    let mut anorm = 0.0;
    for i in 1..=n {
        for j in (i.max(2) - 1)..=n {
            anorm += a[i][j].abs();
        }
    }
    let mut nn = n as isize;
    let mut t = 0.0;
    while nn >= 1 {
        let mut its = 0;
        loop {
            let nu = nn as usize;
            let mut l = nu;
            while l >= 2 {
                let mut s = a[l - 1][l - 1].abs() + a[l][l].abs();
                if s == 0.0 {
                    s = anorm;
                }
                if a[l][l - 1].abs() + s == s {
                    a[l][l - 1] = 0.0;
                    break;
                }
                l -= 1;
            }
            let mut x = a[nu][nu];
            if l == nu {
                wr[nu] = x + t;
                wi[nu] = 0.0;
                nn -= 1;
                break;
            }
            let mut y = a[nu - 1][nu - 1];
            let mut w = a[nu][nu - 1] * a[nu - 1][nu];
            if l == nu - 1 {
                let p = 0.5 * (y - x);
                let q = p * p + w;
                let mut z = q.abs().sqrt();
                x += t;
                if q >= 0.0 {
                    z = p + sign(z, p);
                    wr[nu - 1] = x + z;
                    wr[nu] = x + z;
                    if z != 0.0 {
                        wr[nu] = x - w / z;
                    }
                    wi[nu - 1] = 0.0;
                    wi[nu] = 0.0;
                } else {
                    wr[nu - 1] = x + p;
                    wr[nu] = x + p;
                    wi[nu - 1] = -z;
                    wi[nu] = z;
                }
                nn -= 2;
                break;
            }
            if its == 60 {
                return Err(Error::EigenNoConvergence);
            }
            if its == 10 || its == 20 || its == 40 {
                // exceptional shift
                t += x;
                for i in 1..=nu {
                    a[i][i] -= x;
                }
                let s = a[nu][nu - 1].abs() + a[nu - 1][nu - 2].abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            its += 1;
            let (mut p, mut q, mut r);
            let mut m = nu - 2;
            loop {
                let z = a[m][m];
                let r0 = x - z;
                let s0 = y - z;
                p = (r0 * s0 - w) / a[m + 1][m] + a[m][m + 1];
                q = a[m + 1][m + 1] - z - r0 - s0;
                r = a[m + 2][m + 1];
                let s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                let u = a[m][m - 1].abs() * (q.abs() + r.abs());
                let v = p.abs() * (a[m - 1][m - 1].abs() + z.abs() + a[m + 1][m + 1].abs());
                if u + v == v {
                    break;
                }
                m -= 1;
            }
            for i in (m + 2)..=nu {
                a[i][i - 2] = 0.0;
                if i != m + 2 {
                    a[i][i - 3] = 0.0;
                }
            }
            let mut k = m;
            while k < nu {
                if k != m {
                    p = a[k][k - 1];
                    q = a[k + 1][k - 1];
                    r = 0.0;
                    if k != nu - 1 {
                        r = a[k + 2][k - 1];
                    }
                    x = p.abs() + q.abs() + r.abs();
                    if x != 0.0 {
                        p /= x;
                        q /= x;
                        r /= x;
                    }
                }
                let s = sign((p * p + q * q + r * r).sqrt(), p);
                if s != 0.0 {
                    if k == m {
                        if l != m {
                            a[k][k - 1] = -a[k][k - 1];
                        }
                    } else {
                        a[k][k - 1] = -s * x;
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    let z = r / s;
                    q /= p;
                    r /= p;
                    for j in k..=nu {
                        p = a[k][j] + q * a[k + 1][j];
                        if k != nu - 1 {
                            p += r * a[k + 2][j];
                            a[k + 2][j] -= p * z;
                        }
                        a[k + 1][j] -= p * y;
                        a[k][j] -= p * x;
                    }
                    let mmin = if nu < k + 3 { nu } else { k + 3 };
                    for i in l..=mmin {
                        p = x * a[i][k] + y * a[i][k + 1];
                        if k != nu - 1 {
                            p += z * a[i][k + 2];
                            a[i][k + 2] -= p * r;
                        }
                        a[i][k + 1] -= p * q;
                        a[i][k] -= p;
                    }
                }
                k += 1;
            }
        }
    }
    Ok((1..=n).map(|i| (wr[i], wi[i])).collect())
}

/// Largest eigenvalue modulus.
///
/// Triangular inputs (off-triangle entries within `tol` relative to the largest
/// entry) return the largest diagonal magnitude, and inputs whose `n`-th power
/// vanishes to the same relative tolerance return exactly zero; everything else
/// goes through the QR iteration.
pub fn spectral_radius(a: &Matrix, tol: f64) -> Result<f64> {
    if !a.is_finite() {
        return Err(Error::NonFinite("matrix"));
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    let n = a.n();
    if n == 0 {
        return Ok(0.0);
    }
    let size = a.max_abs();
    if size == 0.0 {
        return Ok(0.0);
    }
    if a.is_upper_triangular(tol * size) || a.is_lower_triangular(tol * size) {
        return Ok((0..n).map(|i| a[(i, i)].abs()).fold(0.0, f64::max));
    }
    if a.pow(n).max_abs() <= tol * size.powi(n as i32) {
        return Ok(0.0);
    }
    let ev = eigenvalues(a)?;
    Ok(ev.iter().map(|&(re, im)| re.hypot(im)).fold(0.0, f64::max))
}

/// Operator 2-norm, `sqrt(r(AᵀA))`.
pub fn operator_norm(a: &Matrix) -> Result<f64> {
    let ata = a.transpose().mul(a).symmetric_part();
    Ok(spectral_radius(&ata, STRUCTURE_TOLERANCE)?.sqrt())
}

/// LU factorization with partial pivoting of a dense (row-major, `m × m`)
/// system matrix.
pub struct Lu {
    m: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
}

impl Lu {
    pub fn factor(m: usize, mut a: Vec<f64>) -> Result<Self> {
        assert_eq!(a.len(), m * m);
        let mut perm: Vec<usize> = (0..m).collect();
        for col in 0..m {
            let (pivot_row, pivot_val) =
                (col..m)
                    .map(|r| (r, a[r * m + col].abs()))
                    .fold(
                        (col, -1.0),
                        |best, cur| if cur.1 > best.1 { cur } else { best },
                    );
            if pivot_val == 0.0 || !pivot_val.is_finite() {
                return Err(Error::Singular(col));
            }
            if pivot_row != col {
                for j in 0..m {
                    a.swap(col * m + j, pivot_row * m + j);
                }
                perm.swap(col, pivot_row);
            }
            let d = a[col * m + col];
            for r in (col + 1)..m {
                let f = a[r * m + col] / d;
                a[r * m + col] = f;
                if f != 0.0 {
                    for j in (col + 1)..m {
                        a[r * m + j] -= f * a[col * m + j];
                    }
                }
            }
        }
        Ok(Lu { m, lu: a, perm })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let m = self.m;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..m {
            for j in 0..i {
                x[i] -= self.lu[i * m + j] * x[j];
            }
        }
        for i in (0..m).rev() {
            for j in (i + 1)..m {
                x[i] -= self.lu[i * m + j] * x[j];
            }
            x[i] /= self.lu[i * m + i];
        }
        x
    }

    /// `‖A⁻¹‖₁`, computed column by column.
    pub fn inverse_norm1(&self) -> f64 {
        let m = self.m;
        let mut best: f64 = 0.0;
        let mut e = vec![0.0; m];
        for j in 0..m {
            e.iter_mut().for_each(|v| *v = 0.0);
            e[j] = 1.0;
            let col = self.solve(&e);
            best = best.max(col.iter().map(|v| v.abs()).sum());
        }
        best
    }
}

/// 1-norm condition number of a dense `m × m` system.
pub fn condition_number(m: usize, a: &[f64], lu: &Lu) -> f64 {
    let norm = (0..m)
        .map(|j| (0..m).map(|i| a[i * m + j].abs()).sum::<f64>())
        .fold(0.0, f64::max);
    norm * lu.inverse_norm1()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sorted_moduli(a: &Matrix) -> Vec<f64> {
        let mut v: Vec<f64> = eigenvalues(a)
            .unwrap()
            .iter()
            .map(|&(re, im)| re.hypot(im))
            .collect();
        v.sort_by(f64::total_cmp);
        v
    }

    #[test]
    fn radius_of_nilpotent_is_exactly_zero() {
        let a = Matrix::from_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]);
        assert_eq!(spectral_radius(&a, 1e-14).unwrap(), 0.0);
        // not triangular, but A^3 = 0
        let b = Matrix::from_rows(&[
            vec![1.0, 1.0, 0.0],
            vec![-1.0, -1.0, 0.0],
            vec![0.0, 3.0, 0.0],
        ]);
        assert!(!b.is_upper_triangular(1e-14) && !b.is_lower_triangular(1e-14));
        assert_eq!(spectral_radius(&b, 1e-14).unwrap(), 0.0);
    }

    #[test]
    fn radius_of_diagonal_and_triangular() {
        assert_eq!(
            spectral_radius(&Matrix::identity(3).scale(0.5), 1e-14).unwrap(),
            0.5
        );
        let t = Matrix::from_rows(&[vec![0.3, 5.0], vec![0.0, 0.4]]);
        assert_eq!(spectral_radius(&t, 1e-14).unwrap(), 0.4);
    }

    #[test]
    fn radius_of_rotation() {
        let (c, s) = (0.6f64, 0.8f64);
        let a = Matrix::from_rows(&[vec![0.9 * c, -0.9 * s], vec![0.9 * s, 0.9 * c]]);
        assert!((spectral_radius(&a, 1e-14).unwrap() - 0.9).abs() < 1e-13);
    }

    #[test]
    fn eigenvalues_of_companion_matrix() {
        // roots 0.5, -0.25, 0.1, 0.8
        let roots = [0.5, -0.25, 0.1, 0.8];
        // x^4 + c3 x^3 + c2 x^2 + c1 x + c0
        let mut coeffs = vec![1.0];
        for r in roots {
            let mut next = vec![0.0; coeffs.len() + 1];
            for (i, c) in coeffs.iter().enumerate() {
                next[i] += c;
                next[i + 1] -= r * c;
            }
            coeffs = next;
        }
        let n = 4;
        let mut a = Matrix::zeros(n);
        for i in 0..n {
            a[(0, i)] = -coeffs[i + 1];
        }
        for i in 1..n {
            a[(i, i - 1)] = 1.0;
        }
        let got = sorted_moduli(&a);
        let mut want: Vec<f64> = roots.iter().map(|r: &f64| r.abs()).collect();
        want.sort_by(f64::total_cmp);
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-10, "{got:?} vs {want:?}");
        }
    }

    #[test]
    fn operator_norm_of_shift() {
        let a = Matrix::from_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]);
        assert_eq!(operator_norm(&a).unwrap(), 1.0);
        let b = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]);
        // largest singular value of [[1,2],[3,4]]
        assert!((operator_norm(&b).unwrap() - 5.464985704219043).abs() < 1e-12);
    }

    #[test]
    fn non_finite_rejected() {
        let a = Matrix::from_rows(&[vec![f64::NAN, 0.0], vec![0.0, 1.0]]);
        assert!(matches!(
            spectral_radius(&a, 1e-14),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn lu_solves() {
        let a = vec![2.0, 1.0, 1.0, 1.0, 3.0, 2.0, 1.0, 0.0, 0.0];
        let lu = Lu::factor(3, a.clone()).unwrap();
        let x = lu.solve(&[4.0, 5.0, 6.0]);
        for i in 0..3 {
            let bi: f64 = (0..3).map(|j| a[i * 3 + j] * x[j]).sum();
            assert!((bi - [4.0, 5.0, 6.0][i]).abs() < 1e-12);
        }
        assert!(Lu::factor(2, vec![1.0, 2.0, 2.0, 4.0]).is_err());
    }
}
