//! Closed-form estimates of `Λ(m)` and `λ(m)` and their check against
//! computed values.
//!
//! All bounds use the discrete `Λ₁^D_h` and discrete `λ₁(Ω)`: the variational
//! arguments behind them only use the min-max characterizations, which the
//! finite element space inherits, so they hold up to solver tolerance.

use serde::{Deserialize, Serialize};

use crate::eigensolver::solve_robin;
use crate::error::{Error, Result};
use crate::maximizer::AuxProblem;
use crate::mesh::Mesh;
use crate::minimizer::{lambda_inf_with, scan_point_eigen};
use crate::params::SolverParams;
use crate::weight::BoundaryWeight;

/// Relative slack on every checked inequality.
pub const SLACK: f64 = 1e-3;

/// Lower bound for `Λ(m)`: `m Λ / ((|Ω|Λ)^{1/(p−1)} + m^{1/(p−1)})^{p−1}`.
pub fn belsup(m: f64, lambda_d: f64, volume: f64, p: f64) -> f64 {
    let q = 1.0 / (p - 1.0);
    m * lambda_d / ((volume * lambda_d).powf(q) + m.powf(q)).powf(p - 1.0)
}

/// Lower bound for `λ(m)` when `p > n`: [`belsup`] with `λ₁(Ω)`. For `p ≤ n`
/// every quantity involved is 0 and so is the bound.
pub fn inflow(m: f64, lambda1_omega: f64, volume: f64, p: f64, n: usize) -> f64 {
    if p <= n as f64 {
        return 0.0;
    }
    belsup(m, lambda1_omega, volume, p)
}

/// Lower bound for `ℓ₁(σ)` with constant `σ` on a convex domain of inradius `R`:
/// `((p−1)/p)^p σ / (R(1 + σ^{1/(p−1)} R)^{p−1})`.
pub fn inradius_bound(sigma: f64, inradius: Option<f64>, p: f64) -> Result<f64> {
    let r = inradius.ok_or_else(|| Error::invalid("inradius bound needs a convex domain (inradius unset)"))?;
    if !(sigma >= 0.0 && r > 0.0) {
        return Err(Error::invalid("σ must be nonnegative and R positive"));
    }
    Ok(((p - 1.0) / p).powf(p) * sigma / (r * (1.0 + sigma.powf(1.0 / (p - 1.0)) * r).powf(p - 1.0)))
}

/// `lhs ≤ rhs` up to [`SLACK`] relative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

impl Check {
    fn le(name: &str, lhs: f64, rhs: f64) -> Self {
        let holds = lhs <= rhs + SLACK * lhs.abs().max(rhs.abs());
        Check {
            name: name.to_string(),
            lhs,
            rhs,
            holds,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub p: f64,
    pub m: f64,
    pub volume: f64,
    pub lambda_dirichlet_h: f64,
    pub lambda1_omega: Option<f64>,
    pub inradius: Option<f64>,
    pub belsup: f64,
    /// `Λ(m)`.
    pub big_lambda: f64,
    /// `min{Λ₁^D_h, m/|Ω|}`.
    pub upper: f64,
    pub inflow: f64,
    /// `λ(m)`; exactly 0 when `p ≤ n`.
    pub small_lambda: f64,
    /// `min{λ₁(Ω), m/|Ω|}` for `p > n`, else `m/|Ω|`.
    pub upper2: f64,
    /// Constant weight `σ = m/|∂Ω|`, convex domains only.
    pub sigma_const: Option<f64>,
    pub ell1_const: Option<f64>,
    pub inradius_bound: Option<f64>,
    pub slack: f64,
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
    pub pass: bool,
}

/// CSV with columns `m,belsup,Lambda,upper,inflow,lambda,upper2,pass`.
pub fn to_csv(reports: &[BoundsReport]) -> String {
    let mut s = String::from("m,belsup,Lambda,upper,inflow,lambda,upper2,pass\n");
    for r in reports {
        s.push_str(&format!(
            "{:e},{:e},{:e},{:e},{:e},{:e},{:e},{}\n",
            r.m, r.belsup, r.big_lambda, r.upper, r.inflow, r.small_lambda, r.upper2, r.pass
        ));
    }
    s
}

/// Runs the maximizer (and the minimizer when `p > n`) at every `m` and checks
/// `belsup ≤ Λ(m) ≤ min{Λ₁^D_h, m/|Ω|}`, `inflow ≤ λ(m) ≤ min{λ₁(Ω), m/|Ω|}`,
/// `λ(m) ≤ Λ(m)` and, on convex domains, the inradius bound for constant `σ`.
pub fn check_all(mesh: &Mesh, m_list: &[f64], params: &SolverParams) -> Result<Vec<BoundsReport>> {
    params.validate()?;
    if m_list.iter().any(|&m| !(m > 0.0 && m.is_finite())) {
        return Err(Error::invalid("every m must be positive and finite"));
    }
    let p = params.p;
    let n = mesh.dim();
    let volume = mesh.volume();
    let mut aux = AuxProblem::new(mesh, params)?;
    let lambda_d = aux.lambda_dirichlet();
    let scan = if p > n as f64 {
        Some(scan_point_eigen(mesh, params)?)
    } else {
        None
    };
    let mut out = Vec::with_capacity(m_list.len());
    for &m in m_list {
        let big_lambda = aux.invert(m)?.aux.xi;
        let mut notes = Vec::new();
        let mut checks = Vec::new();
        let b = belsup(m, lambda_d, volume, p);
        let upper = lambda_d.min(m / volume);
        checks.push(Check::le("belsup <= Lambda", b, big_lambda));
        checks.push(Check::le("Lambda <= Lambda_D", big_lambda, lambda_d));
        checks.push(Check::le("Lambda <= m/|Omega|", big_lambda, m / volume));
        let (lambda1_omega, small_lambda, infl, upper2) = match &scan {
            Some(scan) => {
                let rep = lambda_inf_with(mesh, m, params, scan)?;
                let infl = inflow(m, scan.lambda1_omega, volume, p, n);
                let upper2 = scan.lambda1_omega.min(m / volume);
                checks.push(Check::le("inflow <= lambda", infl, rep.lambda_inf));
                checks.push(Check::le("lambda <= lambda1", rep.lambda_inf, scan.lambda1_omega));
                checks.push(Check::le("lambda <= m/|Omega|", rep.lambda_inf, m / volume));
                (Some(scan.lambda1_omega), rep.lambda_inf, infl, upper2)
            }
            None => {
                notes.push(format!("p = {p} <= n = {n}: λ(m) = 0 and the inflow bound is trivial"));
                (None, 0.0, 0.0, m / volume)
            }
        };
        checks.push(Check::le("lambda <= Lambda", small_lambda, big_lambda));
        let (sigma_const, ell1_const, rbound) = match mesh.inradius() {
            Some(r) => {
                let sigma = m / mesh.boundary_measure();
                let ell = solve_robin(mesh, &BoundaryWeight::constant(mesh, sigma)?, params)?.lambda;
                let rb = inradius_bound(sigma, Some(r), p)?;
                checks.push(Check::le("inradius bound <= ell1(const)", rb, ell));
                checks.push(Check::le("ell1(const) <= Lambda", ell, big_lambda));
                (Some(sigma), Some(ell), Some(rb))
            }
            None => {
                notes.push("domain not marked convex: inradius bound skipped".into());
                (None, None, None)
            }
        };
        let pass = checks.iter().all(|c| c.holds);
        out.push(BoundsReport {
            p,
            m,
            volume,
            lambda_dirichlet_h: lambda_d,
            lambda1_omega,
            inradius: mesh.inradius(),
            belsup: b,
            big_lambda,
            upper,
            inflow: infl,
            small_lambda,
            upper2,
            sigma_const,
            ell1_const,
            inradius_bound: rbound,
            slack: SLACK,
            checks,
            notes,
            pass,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_interval;
    use std::f64::consts::PI;

    #[test]
    fn closed_form_values() {
        let pi2 = PI * PI;
        assert!((belsup(2.0, pi2, 1.0, 2.0) - 2.0 * pi2 / (pi2 + 2.0)).abs() < 1e-14);
        assert!((belsup(2.0, pi2, 1.0, 2.0) - 1.6630).abs() < 1e-4);
        assert!(belsup(1e-9, pi2, 1.0, 2.0) < 1e-8);
        let big = belsup(1e4, pi2, 1.0, 2.0);
        assert!((big - 1e4 * pi2 / (pi2 + 1e4)).abs() < 1e-12 && big / pi2 > 0.94);
        let l1 = pi2 / 4.0;
        assert!((inflow(1.0, l1, 1.0, 2.0, 1) - l1 / (l1 + 1.0)).abs() < 1e-14);
        assert!((inflow(1.0, l1, 1.0, 2.0, 1) - 0.7116).abs() < 1e-4);
        assert_eq!(inflow(1.0, l1, 1.0, 2.0, 2), 0.0);
        assert!((inflow(1e6, l1, 1.0, 2.0, 1) - l1).abs() < 5e-3 * l1);
        assert!((inradius_bound(1.0, Some(0.5), 2.0).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!(inradius_bound(1e-12, Some(0.5), 2.0).unwrap() < 1e-11);
        assert!(inradius_bound(1.0, None, 2.0).is_err());
    }

    #[test]
    fn interval_sandwiches() {
        let mesh = build_interval(200).unwrap();
        let reps = check_all(&mesh, &[0.1, 1.0, 2.0, 10.0, 100.0], &SolverParams::new(2.0)).unwrap();
        for r in &reps {
            assert!(r.pass, "{:?}", r.checks);
        }
        assert!(reps[0].big_lambda <= 0.1);
        let r100 = &reps[4];
        assert!(r100.big_lambda / r100.lambda_dirichlet_h >= r100.belsup / r100.lambda_dirichlet_h);
        let ld = r100.lambda_dirichlet_h;
        assert!((r100.belsup / ld - 100.0 / (ld + 100.0)).abs() < 1e-14);
        assert!(to_csv(&reps).lines().count() == 6);
    }
}
