//! Linearization analysis: spectral radius, the growth constant `c̄` with
//! `‖Aᵏ‖ ≤ c̄ ρᵏ`, the contraction budget, the capture radius, and the Stein
//! solve `AᵀPA − P = −I`.
//!
//! Two sets of constants are kept. The reported ones (`alpha`, `epsilon`,
//! `delta`) use the spectral radius `r` directly. The [`Certificate`] uses the
//! certified rate `ρ ≥ r` that actually appears in `‖Aᵏ‖ ≤ c̄ ρᵏ`; only those
//! constants enter the capture test and the orbit-sum tail bounds.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{operator_norm, spectral_radius, Matrix, STRUCTURE_TOLERANCE};
use crate::map::PolyMap;

#[derive(Clone, Debug)]
pub struct SpectralConfig {
    /// Structural tolerance for the triangular and nilpotent short-circuits.
    pub tol: f64,
    /// Lower bound for the certified rate ρ.
    pub rho_floor: f64,
    /// ρ is at least `r + rho_margin·(1 − r)`, which keeps `‖Aᵏ‖/ρᵏ → 0`.
    pub rho_margin: f64,
    /// Largest power examined while certifying `c̄`.
    pub k_max: usize,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        SpectralConfig {
            tol: STRUCTURE_TOLERANCE,
            rho_floor: 0.5,
            rho_margin: 1.0 / 16.0,
            k_max: 100_000,
        }
    }
}

impl SpectralConfig {
    pub fn certified_rate(&self, r: f64) -> f64 {
        (r + self.rho_margin * (1.0 - r)).max(self.rho_floor)
    }
}

/// Constants under which entering the ball of radius `capture_radius` proves
/// convergence: with `‖Aᵏ‖ ≤ c̄ρᵏ`, `ε = (1−ρ)/(2c̄)` and `‖h(x)‖ < ε‖x‖` on
/// `B(0, delta)`, an orbit point `y₀` with `‖y₀‖ < delta/c̄` has
/// `‖y_k‖ ≤ c̄ ‖y₀‖ rateᵏ < delta` for all `k`, where `rate = (1+ρ)/2`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Certificate {
    pub rho: f64,
    pub rate: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub capture_radius: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectralInfo {
    pub r: f64,
    pub c_bar: f64,
    pub alpha: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub k_cert: usize,
    pub jacobian_norm: f64,
    pub certificate: Certificate,
}

/// Returns `(c̄, k_cert)` with `c̄ = max(1, max_{k<k_cert} ‖Aᵏ‖/ρᵏ)`.
///
/// The search stops at the first `K ≥ 1` with `‖Aᴷ‖ ≤ ρᴷ`: writing
/// `k = mK + j` and using submultiplicativity, no later power can exceed
/// the maximum already seen.
pub fn growth_constant(a: &Matrix, rho: f64, k_max: usize) -> Result<(f64, usize)> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::InvalidArgument(format!("rate {rho} outside (0, 1)")));
    }
    let mut c_bar: f64 = 1.0;
    let mut power = Matrix::identity(a.n());
    let mut rho_k = 1.0;
    for k in 1..=k_max {
        power = power.mul(a);
        rho_k *= rho;
        if !power.is_finite() {
            return Err(Error::NonFinite("matrix power"));
        }
        let ratio = if power.max_abs() == 0.0 {
            0.0
        } else {
            operator_norm(&power)? / rho_k
        };
        if ratio <= 1.0 {
            return Ok((c_bar, k));
        }
        c_bar = c_bar.max(ratio);
    }
    Err(Error::Uncertified {
        partial: c_bar,
        k_max,
    })
}

/// Largest `δ ≤ 1` with `‖h(x)‖ < ε‖x‖` on `0 < ‖x‖ < δ`, from the bound
/// `‖h(x)‖ ≤ M‖x‖²` (M the sum of absolute coefficients) on the unit ball.
pub fn capture_radius(h: &PolyMap, epsilon: f64) -> Result<f64> {
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(Error::InvalidArgument("epsilon must be positive".into()));
    }
    for (i, c) in h.components().iter().enumerate() {
        if c.min_degree().is_some_and(|d| d < 2) {
            return Err(Error::NotNonlinear { component: i });
        }
    }
    let m: f64 = h.components().iter().map(|c| c.abs_sum()).sum();
    if m == 0.0 {
        return Ok(1.0);
    }
    Ok((epsilon / m).min(1.0))
}

/// Unique solution of `AᵀPA − P = −I`, summed as `Σ (Aᵀ)ᵏ Aᵏ`.
pub fn solve_stein(a: &Matrix) -> Result<Matrix> {
    let r = spectral_radius(a, STRUCTURE_TOLERANCE)?;
    if r >= 1.0 {
        return Err(Error::Hypothesis(format!(
            "spectral radius {r} ≥ 1: Stein equation has no guaranteed solution"
        )));
    }
    let cfg = SpectralConfig::default();
    let rho = cfg.certified_rate(r);
    let (c_bar, _) = growth_constant(a, rho, cfg.k_max)?;
    // ‖(Aᵀ)ᵏAᵏ‖ ≤ c̄²ρ²ᵏ: enough terms to push the bound below 1e-17.
    let max_terms = ((1e-17 / (c_bar * c_bar)).ln() / (2.0 * rho.ln())).ceil() as usize + a.n() + 1;

    let at = a.transpose();
    let mut p = Matrix::identity(a.n());
    let mut term = Matrix::identity(a.n());
    for _ in 0..max_terms {
        term = at.mul(&term).mul(a);
        if term.max_abs() == 0.0 {
            break;
        }
        p = p.add(&term);
        if term.frobenius() < 1e-14 * p.frobenius() {
            break;
        }
    }
    Ok(p.symmetric_part())
}

pub fn stein_residual(a: &Matrix, p: &Matrix) -> f64 {
    a.transpose()
        .mul(p)
        .mul(a)
        .sub(p)
        .add(&Matrix::identity(a.n()))
        .max_abs()
}

/// Computes `A`, `r`, `c̄` and the derived constants for an origin-fixed map.
/// Fails with [`Error::Hypothesis`] when `r ≥ 1`.
pub fn assemble_spectral_info(f: &PolyMap, cfg: &SpectralConfig) -> Result<SpectralInfo> {
    let a = f.jacobian_at_zero()?;
    let r = spectral_radius(&a, cfg.tol)?;
    if r >= 1.0 {
        return Err(Error::Hypothesis(format!("spectral radius {r} ≥ 1")));
    }
    let jacobian_norm = operator_norm(&a)?;
    let rho = cfg.certified_rate(r);
    let (c_bar, k_cert) = growth_constant(&a, rho, cfg.k_max)?;
    let h = f.nonlinear_part()?;

    let alpha = (r + 1.0) / 2.0;
    let epsilon = (1.0 - r) / (2.0 * c_bar);
    let delta = capture_radius(&h, epsilon)?;

    let cert_epsilon = (1.0 - rho) / (2.0 * c_bar);
    let cert_delta = capture_radius(&h, cert_epsilon)?;
    Ok(SpectralInfo {
        r,
        c_bar,
        alpha,
        epsilon,
        delta,
        k_cert,
        jacobian_norm,
        certificate: Certificate {
            rho,
            rate: (1.0 + rho) / 2.0,
            epsilon: cert_epsilon,
            delta: cert_delta,
            capture_radius: cert_delta / c_bar,
        },
    })
}

/// Outcome of checking `f(0) = 0` and `r(∂₀f) < 1`.
#[derive(Clone, Debug)]
pub struct HypothesisReport {
    pub origin_fixed: bool,
    pub r: Option<f64>,
    pub jacobian_norm: Option<f64>,
    pub info: Option<SpectralInfo>,
    pub diagnostic: Option<String>,
}

impl HypothesisReport {
    pub fn ok(&self) -> bool {
        self.info.is_some()
    }
}

pub fn check_hypotheses(f: &PolyMap, cfg: &SpectralConfig) -> Result<HypothesisReport> {
    if let Err(Error::NotOriginFixed {
        component,
        constant,
    }) = f.jacobian_at_zero()
    {
        return Ok(HypothesisReport {
            origin_fixed: false,
            r: None,
            jacobian_norm: None,
            info: None,
            diagnostic: Some(format!(
                "f(0) = 0 fails: component {component} has constant term {constant}"
            )),
        });
    }
    let a = f.jacobian_at_zero()?;
    let r = spectral_radius(&a, cfg.tol)?;
    let jacobian_norm = operator_norm(&a)?;
    if r >= 1.0 {
        return Ok(HypothesisReport {
            origin_fixed: true,
            r: Some(r),
            jacobian_norm: Some(jacobian_norm),
            info: None,
            diagnostic: Some(format!("spectral radius {r} ≥ 1")),
        });
    }
    let info = assemble_spectral_info(f, cfg)?;
    Ok(HypothesisReport {
        origin_fixed: true,
        r: Some(r),
        jacobian_norm: Some(jacobian_norm),
        info: Some(info),
        diagnostic: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::examples;
    use crate::poly::Poly;

    fn nilpotent() -> Matrix {
        Matrix::from_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]])
    }

    #[test]
    fn growth_constant_examples() {
        assert_eq!(
            growth_constant(&Matrix::zeros(2), 0.5, 10).unwrap(),
            (1.0, 1)
        );
        assert_eq!(growth_constant(&nilpotent(), 0.5, 10).unwrap(), (2.0, 2));
        let half = Matrix::identity(2).scale(0.5);
        assert_eq!(growth_constant(&half, 0.5, 10).unwrap().0, 1.0);
    }

    #[test]
    fn growth_constant_uncertified() {
        // Jordan block at the certification rate itself never gets ‖Aᵏ‖ ≤ ρᵏ.
        let j = Matrix::from_rows(&[vec![0.6, 1.0], vec![0.0, 0.6]]);
        match growth_constant(&j, 0.6, 50) {
            Err(Error::Uncertified { partial, k_max }) => {
                assert_eq!(k_max, 50);
                assert!(partial > 1.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn growth_constant_non_normal_certifies_with_margin() {
        let a = Matrix::from_rows(&[vec![0.9, 5.0], vec![0.0, 0.4]]);
        let cfg = SpectralConfig::default();
        let rho = cfg.certified_rate(0.9);
        let (c_bar, k) = growth_constant(&a, rho, cfg.k_max).unwrap();
        assert!(c_bar > 1.0 && k > 1);
        let mut p = Matrix::identity(2);
        for k in 0..400 {
            assert!(operator_norm(&p).unwrap() <= c_bar * rho.powi(k) * (1.0 + 1e-12));
            p = p.mul(&a);
        }
    }

    #[test]
    fn capture_radius_examples() {
        assert_eq!(capture_radius(&PolyMap::zero(2), 0.25).unwrap(), 1.0);
        let sq = PolyMap::new(vec![Poly::from_terms(1, [(1.0, vec![2])]).unwrap()]).unwrap();
        assert_eq!(capture_radius(&sq, 0.25).unwrap(), 0.25);
        let h = examples::example_one().nonlinear_part().unwrap();
        assert_eq!(capture_radius(&h, 0.25).unwrap(), 0.125);
    }

    #[test]
    fn capture_radius_rejects_linear_terms() {
        assert!(matches!(
            capture_radius(&examples::example_one(), 0.25),
            Err(Error::NotNonlinear { component: 0 })
        ));
    }

    #[test]
    fn stein_examples() {
        let p = solve_stein(&nilpotent()).unwrap();
        assert_eq!(p, Matrix::diag(&[1.0, 2.0]));
        assert_eq!(solve_stein(&Matrix::zeros(3)).unwrap(), Matrix::identity(3));
        let a = 0.7;
        let p = solve_stein(&Matrix::diag(&[a])).unwrap();
        assert!((p[(0, 0)] - 1.0 / (1.0 - a * a)).abs() < 1e-12);
    }

    #[test]
    fn stein_rejects_unstable() {
        assert!(matches!(
            solve_stein(&Matrix::diag(&[1.5])),
            Err(Error::Hypothesis(_))
        ));
    }

    #[test]
    fn assemble_example_one() {
        let info =
            assemble_spectral_info(&examples::example_one(), &SpectralConfig::default()).unwrap();
        assert_eq!(info.r, 0.0);
        assert_eq!(info.alpha, 0.5);
        assert_eq!(info.c_bar, 2.0);
        assert_eq!(info.epsilon, 0.25);
        assert_eq!(info.delta, 0.125);
        assert_eq!(info.jacobian_norm, 1.0);
        assert_eq!(info.certificate.rho, 0.5);
        assert_eq!(info.certificate.rate, 0.75);
        assert_eq!(info.certificate.epsilon, 0.125);
        assert_eq!(info.certificate.capture_radius, 0.03125);
    }

    #[test]
    fn assemble_zero_and_linear() {
        let cfg = SpectralConfig::default();
        let z = assemble_spectral_info(&PolyMap::zero(2), &cfg).unwrap();
        assert_eq!(
            (z.r, z.c_bar, z.alpha, z.epsilon, z.delta),
            (0.0, 1.0, 0.5, 0.5, 1.0)
        );

        let lin = PolyMap::linear(&Matrix::diag(&[0.9])).unwrap();
        let l = assemble_spectral_info(&lin, &cfg).unwrap();
        assert_eq!(l.r, 0.9);
        assert!((l.alpha - 0.95).abs() < 1e-15);
        assert_eq!(l.c_bar, 1.0);
        assert!((l.epsilon - 0.05).abs() < 1e-15);
        assert_eq!(l.delta, 1.0);
    }

    #[test]
    fn assemble_rejects_unstable() {
        let lin = PolyMap::linear(&Matrix::diag(&[2.0])).unwrap();
        match assemble_spectral_info(&lin, &SpectralConfig::default()) {
            Err(Error::Hypothesis(msg)) => assert!(msg.contains("spectral radius 2")),
            other => panic!("unexpected {other:?}"),
        }
        let report = check_hypotheses(&lin, &SpectralConfig::default()).unwrap();
        assert!(!report.ok());
        assert_eq!(report.r, Some(2.0));
    }
}
