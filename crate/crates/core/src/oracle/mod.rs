//! Reference values computed independently of the finite element code:
//! roots of the 1D and disk transcendental equations (p = 2), the closed
//! forms `(p−1) π_p^p` on the interval, and a finite-difference brute force.

mod bessel;
mod brute_force;

use serde::Serialize;

pub use bessel::{bessel_j0, bessel_j1};
pub use brute_force::{brute_force_1d, BruteForceResult, BruteMode, End};

use crate::error::{Error, Result};

/// A root of a transcendental eigenvalue condition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Root {
    /// `μ` with `λ = μ²`.
    pub mu: f64,
    pub lambda: f64,
    /// Residual of the scaled condition at `mu`.
    pub residual: f64,
}

/// Bisection of a sign change on `[lo, hi]` down to adjacent floats (or a
/// relative width of 1e-15). `f(lo)` and `f(hi)` must have opposite signs.
pub(crate) fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> Option<f64> {
    let (flo, fhi) = (f(lo), f(hi));
    if !(flo * fhi <= 0.0) {
        return None;
    }
    if flo == 0.0 {
        return Some(lo);
    }
    if fhi == 0.0 {
        return Some(hi);
    }
    let neg_at_lo = flo < 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= 1e-15 * mid.abs() {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Some(mid);
        }
        if (fm < 0.0) == neg_at_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// First eigenvalue of `−u'' = λu` on (0,1) with `u'(0) = σ_L u(0)` and
/// `−u'(1) = σ_R u(1)`.
///
/// With `u = cos μx + (σ_L/μ) sin μx` the right-end condition becomes
/// `(μ² − σ_Lσ_R) sin μ − μ(σ_L + σ_R) cos μ = 0`, whose first positive root
/// lies in (0, π).
pub fn interval_robin_p2(sigma_left: f64, sigma_right: f64) -> Result<Root> {
    if !(sigma_left >= 0.0 && sigma_right >= 0.0) || !(sigma_left + sigma_right > 0.0) {
        return Err(Error::invalid("need σ_L, σ_R ≥ 0 with σ_L + σ_R > 0"));
    }
    let (a, b) = (sigma_left, sigma_right);
    let g = |mu: f64| (mu * mu - a * b) * mu.sin() - mu * (a + b) * mu.cos();
    let scale = |mu: f64| mu * mu + a * b + mu * (a + b);
    let mu = bisect(1e-300_f64.max(f64::EPSILON), std::f64::consts::PI, g)
        .ok_or_else(|| Error::Invariant("no sign change of the Robin condition in (0, π)".into()))?;
    Ok(Root {
        mu,
        lambda: mu * mu,
        residual: (g(mu) / scale(mu)).abs(),
    })
}

/// `π_p = 2π / (p sin(π/p))`.
pub fn pi_p(p: f64) -> f64 {
    2.0 * std::f64::consts::PI / (p * (std::f64::consts::PI / p).sin())
}

/// First Dirichlet eigenvalue of the 1D p-Laplacian on (0,1): `(p−1) π_p^p`.
pub fn interval_dirichlet_p(p: f64) -> Result<f64> {
    check_p(p)?;
    Ok((p - 1.0) * pi_p(p).powf(p))
}

/// Interval with `u(0) = 0` and a free right end: the minimizer is a quarter
/// of the Dirichlet profile on (0,2), so the value is `(p−1)(π_p/2)^p`.
pub fn interval_point_p(p: f64) -> Result<f64> {
    check_p(p)?;
    Ok((p - 1.0) * (0.5 * pi_p(p)).powf(p))
}

fn check_p(p: f64) -> Result<()> {
    if !(crate::params::P_MIN..=crate::params::P_MAX).contains(&p) {
        return Err(Error::invalid(format!("p = {p} outside [1.1, 10]")));
    }
    Ok(())
}

/// First zero of `J0`, by bisection of the series on (2, 3).
pub fn bessel_j0_first_zero() -> f64 {
    bisect(2.0, 3.0, bessel_j0).expect("J0 changes sign on (2, 3)")
}

/// First Robin eigenvalue on the unit disk, p = 2, constant `σ`:
/// radial `u = J0(μr)` with `μ J1(μ) = σ J0(μ)`, root in (0, j₀₁).
pub fn disk_robin_p2_const(sigma: f64) -> Result<Root> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::invalid("σ must be positive and finite"));
    }
    let h = |mu: f64| mu * bessel_j1(mu) - sigma * bessel_j0(mu);
    let j01 = bessel_j0_first_zero();
    let mu =
        bisect(f64::EPSILON, j01, h).ok_or_else(|| Error::Invariant("no sign change of the disk condition".into()))?;
    let scale = mu * bessel_j1(mu).abs() + sigma * bessel_j0(mu).abs();
    Ok(Root {
        mu,
        lambda: mu * mu,
        residual: (h(mu) / scale.max(f64::MIN_POSITIVE)).abs(),
    })
}

/// `ξ` with `2√ξ tan(√ξ/2) = m`: the maximizer value on the unit interval at
/// p = 2, identical to the symmetric Robin eigenvalue with σ = m/2 at each end.
pub fn interval_xi_of_m(m: f64) -> Result<Root> {
    if !(m > 0.0) {
        return Err(Error::invalid("m must be positive"));
    }
    let f = |mu: f64| 2.0 * mu * (0.5 * mu).tan() - m;
    let mu = bisect(f64::EPSILON, std::f64::consts::PI * (1.0 - 1e-15), f)
        .ok_or_else(|| Error::Invariant("no root of 2μ tan(μ/2) = m in (0, π)".into()))?;
    Ok(Root {
        mu,
        lambda: mu * mu,
        residual: (f(mu) / m).abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn robin_interval_roots() {
        let r = interval_robin_p2(1.0, 1.0).unwrap();
        assert!((r.mu - 1.30654).abs() < 1e-5 && (r.lambda - 1.70705).abs() < 1e-5);
        assert!(r.residual < 1e-12);
        assert!((r.mu * (r.mu / 2.0).tan() - 1.0).abs() < 1e-12);
        let r = interval_robin_p2(1.0, 0.0).unwrap();
        assert!((r.mu - 0.86033).abs() < 1e-5 && (r.lambda - 0.74017).abs() < 1e-5);
        assert!((r.mu * r.mu.tan() - 1.0).abs() < 1e-12);
        let r = interval_robin_p2(1e6, 1e6).unwrap();
        assert!((r.lambda - std::f64::consts::PI.powi(2)).abs() < 1e-4);
        assert!(interval_robin_p2(0.0, 0.0).is_err());
    }

    #[test]
    fn closed_forms() {
        assert!((interval_dirichlet_p(2.0).unwrap() - std::f64::consts::PI.powi(2)).abs() < 1e-12);
        assert!((interval_dirichlet_p(3.0).unwrap() - 28.29).abs() < 0.01);
        assert!((interval_point_p(2.0).unwrap() - std::f64::consts::PI.powi(2) / 4.0).abs() < 1e-12);
    }

    #[test]
    fn disk_roots() {
        let r = disk_robin_p2_const(1.0).unwrap();
        assert!((r.mu - 1.25578).abs() < 1e-5, "{}", r.mu);
        assert!((r.lambda - 1.576_993).abs() < 1e-6, "{}", r.lambda);
        assert!(r.residual < 1e-12);
        let j01 = bessel_j0_first_zero();
        assert!((j01 - 2.404_825_557_695_773).abs() < 1e-12);
        let big = disk_robin_p2_const(1e8).unwrap();
        assert!((big.lambda - j01 * j01).abs() < 1e-6);
        let small = disk_robin_p2_const(1e-6).unwrap();
        assert!((small.lambda / 1e-6 - 2.0).abs() < 1e-5);
    }

    #[test]
    fn xi_of_m_matches_symmetric_robin() {
        for m in [0.5, 1.0, 2.0, 8.0] {
            let a = interval_xi_of_m(m).unwrap().lambda;
            let b = interval_robin_p2(m / 2.0, m / 2.0).unwrap().lambda;
            assert!((a - b).abs() < 1e-10 * b);
        }
    }
}
