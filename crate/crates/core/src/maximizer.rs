//! The maximizing weight of mass `m`.
//!
//! For `0 ≤ ξ < Λ₁^D` let `u_ξ ≥ 0` solve `−Δ_p v = (ξ^{1/(p−1)} v + 1)^{p−1}`
//! with `v = 0` on the boundary, and `F(ξ) = ξ ∫ (ξ^{1/(p−1)} u_ξ + 1)^{p−1}`.
//! `F` is increasing, and with `ξ(m) = F⁻¹(m)` the boundary flux
//! `σ_m = −ξ |∇u_ξ|^{p−2} ∂_ν u_ξ` has mass `m` and maximizes `ℓ₁` over
//! weights of mass `m`, with maximum `ξ(m)` and eigenfunction
//! `u_m = ξ^{1/(p−1)} u_ξ + 1`.
//!
//! Everything is discrete on one mesh: `Λ₁^D` is the P1 Dirichlet eigenvalue,
//! the auxiliary problem is solved by monotone Picard iteration and the flux
//! is the variational one (residual rows of the discrete equation).

use serde::{Deserialize, Serialize};

use crate::convex::ConvexSolver;
use crate::eigensolver::{solve_dirichlet, solve_robin, verify_weak_residual, EigenMode, EigenResult};
use crate::energy::{load_vector, lp_norm_p_raw, recover_flux_from_load};
use crate::error::{Error, Result};
use crate::field::NodalField;
use crate::mesh::Mesh;
use crate::par::map_ordered;
use crate::params::SolverParams;
use crate::weight::BoundaryWeight;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuxSolution {
    pub xi: f64,
    pub f_value: f64,
    pub picard_iters: usize,
    /// Boundary flux masses `(node, mass)` scaled by `ξ`, set by [`AuxSolution::with_flux`].
    pub sigma_flux: Option<Vec<(usize, f64)>>,
    pub u_xi: NodalField,
    #[serde(skip)]
    load: Vec<f64>,
}

impl AuxSolution {
    /// Recovers the variational boundary flux `ξ (load_i − A(u_ξ)_i)` at boundary nodes.
    pub fn with_flux(mut self, mesh: &Mesh, params: &SolverParams) -> Result<Self> {
        let tol = 1e-6
            * self
                .load
                .iter()
                .fold(0.0f64, |m, v| m.max(v.abs()))
                .max(f64::MIN_POSITIVE);
        let flux = recover_flux_from_load(mesh, self.u_xi.values(), &self.load, params.p, tol)?;
        self.sigma_flux = Some(flux.node_masses.into_iter().map(|(i, g)| (i, self.xi * g)).collect());
        Ok(self)
    }

    /// `u_m = ξ^{1/(p−1)} u_ξ + 1`.
    pub fn eigenfunction(&self, p: f64) -> NodalField {
        let a = self.xi.powf(1.0 / (p - 1.0));
        NodalField::from_vec(self.u_xi.values().iter().map(|v| a * v + 1.0).collect())
    }
}

/// Auxiliary-problem solver bound to one mesh, keeping the discrete Dirichlet
/// eigenvalue and the factorization workspace between calls.
pub struct AuxProblem<'a> {
    mesh: &'a Mesh,
    params: SolverParams,
    lambda_d: f64,
    solver: ConvexSolver<'a>,
}

impl<'a> AuxProblem<'a> {
    pub fn new(mesh: &'a Mesh, params: &SolverParams) -> Result<Self> {
        let lambda_d = solve_dirichlet(mesh, params)?.lambda;
        Self::with_ceiling(mesh, params, lambda_d)
    }

    /// Uses a previously computed discrete Dirichlet eigenvalue `lambda_d`.
    pub fn with_ceiling(mesh: &'a Mesh, params: &SolverParams, lambda_d: f64) -> Result<Self> {
        params.validate()?;
        let free: Vec<bool> = mesh.node_is_boundary().iter().map(|b| !b).collect();
        if !free.iter().any(|&f| f) {
            return Err(Error::invalid("mesh has no interior nodes"));
        }
        let solver = ConvexSolver::new(mesh, None, params.p, params.eps_reg, free);
        Ok(AuxProblem {
            mesh,
            params: params.clone(),
            lambda_d,
            solver,
        })
    }

    pub fn lambda_dirichlet(&self) -> f64 {
        self.lambda_d
    }

    pub fn solve(&mut self, xi: f64) -> Result<AuxSolution> {
        self.solve_from(xi, None)
    }

    fn load(&self, v: &[f64], a: f64) -> Vec<f64> {
        let q = self.params.p - 1.0;
        load_vector(self.mesh, v, |x| (a * x.max(0.0) + 1.0).powf(q))
    }

    /// Picard iteration from `start` (a subsolution, e.g. `u_ξ'` for `ξ' ≤ ξ`) or from 0.
    fn solve_from(&mut self, xi: f64, start: Option<&[f64]>) -> Result<AuxSolution> {
        if !(xi >= 0.0 && xi.is_finite()) {
            return Err(Error::invalid(format!("ξ = {xi} must be finite and nonnegative")));
        }
        if xi >= self.lambda_d {
            return Err(Error::Domain(format!(
                "ξ = {xi} is not below the discrete Dirichlet eigenvalue {}; the iteration would diverge",
                self.lambda_d
            )));
        }
        let p = self.params.p;
        let a = xi.powf(1.0 / (p - 1.0));
        let n = self.mesh.n_nodes();
        let mut v = start.map_or_else(|| vec![0.0; n], |s| s.to_vec());
        for k in 1..=self.params.max_picard {
            let load = self.load(&v, a);
            let next = self.solver.minimize(&load, &v)?.w;
            let scale = 1.0 + next.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            let mut diff: f64 = 0.0;
            for (i, (new, old)) in next.iter().zip(&v).enumerate() {
                if *new < *old - 1e-10 * scale {
                    return Err(Error::Invariant(format!(
                        "Picard iterate decreased at node {i}: {old} -> {new} (ξ = {xi}, step {k})"
                    )));
                }
                diff = diff.max((new - old).abs());
            }
            let prev_scale = 1.0 + v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            v = next;
            if !v.iter().all(|x| x.is_finite()) || scale > 1e150 {
                return Err(Error::Domain(format!("auxiliary iteration diverges at ξ = {xi}")));
            }
            if diff < self.params.tol_aux * prev_scale {
                let load = self.load(&v, a);
                let f_value = xi * load.iter().sum::<f64>();
                return Ok(AuxSolution {
                    xi,
                    f_value,
                    picard_iters: k,
                    sigma_flux: None,
                    u_xi: NodalField::from_vec(v),
                    load,
                });
            }
        }
        Err(Error::NoConvergence {
            iterations: self.params.max_picard,
            msg: format!("Picard iteration for the auxiliary problem at ξ = {xi}"),
            best: None,
        })
    }

    /// Solves `F(ξ) = m` by bisection on `(0, Λ₁^D_h)`.
    pub fn invert(&mut self, m: f64) -> Result<Inversion> {
        if !(m > 0.0 && m.is_finite()) {
            return Err(Error::invalid("m must be positive and finite"));
        }
        let lam = self.lambda_d;
        let mut evals = 0;
        // lower end: F(lo) ≤ m
        let mut lo_xi = 1e-6 * lam;
        let mut lo = self.solve(lo_xi)?;
        evals += 1;
        while lo.f_value > m {
            lo_xi /= 16.0;
            if lo_xi < 1e-300 {
                return Err(Error::Domain(format!("no ξ > 0 with F(ξ) ≤ m = {m}")));
            }
            lo = self.solve(lo_xi)?;
            evals += 1;
        }
        // upper end: F(hi) ≥ m, moving geometrically toward Λ₁^D_h
        let mut hi = None;
        for k in 1..=40 {
            let xi = lam * (1.0 - 0.5f64.powi(k));
            if xi <= lo.xi {
                continue;
            }
            let s = match self.solve_from(xi, Some(lo.u_xi.values())) {
                Ok(s) => s,
                Err(Error::NoConvergence { .. }) | Err(Error::Domain(_)) => break,
                Err(e) => return Err(e),
            };
            evals += 1;
            if s.f_value >= m {
                hi = Some(s);
                break;
            }
            lo = s;
        }
        let Some(mut hi) = hi else {
            return Err(Error::Domain(format!(
                "F did not reach m = {m} below the discrete Dirichlet eigenvalue {lam} (largest F = {}); \
                 refine the mesh or reduce m",
                lo.f_value
            )));
        };
        let mut bisections = 0;
        loop {
            let best_gap = (lo.f_value - m).abs().min((hi.f_value - m).abs());
            let width = (hi.xi - lo.xi) / hi.xi;
            let mid = 0.5 * (lo.xi + hi.xi);
            let exhausted = mid <= lo.xi || mid >= hi.xi;
            if (width < 1e-8 && best_gap <= 1e-10 * m) || exhausted || bisections >= 200 {
                break;
            }
            let s = self.solve_from(mid, Some(lo.u_xi.values()))?;
            bisections += 1;
            if s.f_value < m {
                lo = s;
            } else {
                hi = s;
            }
        }
        let best = if (lo.f_value - m).abs() <= (hi.f_value - m).abs() {
            lo
        } else {
            hi
        };
        Ok(Inversion {
            aux: best,
            bisections,
            evaluations: evals + bisections,
        })
    }
}

/// Result of [`invert_f`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Inversion {
    pub aux: AuxSolution,
    pub bisections: usize,
    pub evaluations: usize,
}

pub fn solve_aux(mesh: &Mesh, xi: f64, params: &SolverParams) -> Result<AuxSolution> {
    AuxProblem::new(mesh, params)?.solve(xi)
}

pub fn f_eval(mesh: &Mesh, xi: f64, params: &SolverParams) -> Result<f64> {
    Ok(solve_aux(mesh, xi, params)?.f_value)
}

/// `F` at several `ξ`, evaluated independently (in parallel when enabled).
pub fn f_eval_many(mesh: &Mesh, xis: &[f64], lambda_d: f64, params: &SolverParams) -> Vec<Result<AuxSolution>> {
    map_ordered(xis, |&xi| AuxProblem::with_ceiling(mesh, params, lambda_d)?.solve(xi))
}

pub fn invert_f(mesh: &Mesh, m: f64, params: &SolverParams) -> Result<f64> {
    Ok(AuxProblem::new(mesh, params)?.invert(m)?.aux.xi)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxReport {
    pub m: f64,
    pub p: f64,
    pub xi_m: f64,
    /// `Λ(m)`, equal to `xi_m`.
    pub lambda: f64,
    pub lambda_dirichlet_h: f64,
    pub f_value: f64,
    pub sigma_mass: f64,
    pub mass_rel_err: f64,
    pub sigma_min: f64,
    pub crosscheck_lambda: f64,
    pub crosscheck_rel_err: f64,
    pub crosscheck_ok: bool,
    /// Weak residual of `(ξ(m), u_m / ‖u_m‖_p)` under `σ_m`.
    pub eigen_residual: f64,
    pub boundary_one_max_dev: f64,
    pub picard_iters: usize,
    pub bisections: usize,
    pub flags: Vec<String>,
    /// `(boundary node, mass)` in node order.
    pub sigma_nodal: Vec<(usize, f64)>,
    /// Per-facet density carrying the same mass (nodal masses split by adjacent half-facets).
    pub sigma_facet_density: Vec<f64>,
    pub u_m: NodalField,
}

impl MaxReport {
    /// `σ_m` as point masses at the boundary nodes (negative roundoff clamped to 0).
    pub fn sigma_weight(&self, mesh: &Mesh) -> Result<BoundaryWeight> {
        BoundaryWeight::atoms_only(mesh, self.sigma_nodal.iter().map(|&(i, g)| (i, g.max(0.0))).collect())
    }

    pub fn sigma_density_weight(&self, mesh: &Mesh) -> Result<BoundaryWeight> {
        BoundaryWeight::from_facet_densities(mesh, self.sigma_facet_density.iter().map(|d| d.max(0.0)).collect())
    }
}

/// Spreads nodal masses onto facets: node `i` gives each adjacent facet the
/// share proportional to half its measure.
pub fn nodal_to_facet_density(mesh: &Mesh, nodal: &[(usize, f64)]) -> Vec<f64> {
    let node_facets = mesh.node_facets();
    let k = mesh.dim() as f64;
    let mut received = vec![0.0; mesh.n_facets()];
    for &(i, g) in nodal {
        let total: f64 = node_facets[i].iter().map(|&f| mesh.facet(f).measure / k).sum();
        for &f in &node_facets[i] {
            received[f] += g * (mesh.facet(f).measure / k) / total;
        }
    }
    received.iter().zip(mesh.facets()).map(|(r, f)| r / f.measure).collect()
}

/// Full pipeline: `ξ(m)`, `σ_m`, `u_m` and the eigensolver cross-check.
pub fn sigma_max(mesh: &Mesh, m: f64, params: &SolverParams) -> Result<MaxReport> {
    let mut aux = AuxProblem::new(mesh, params)?;
    sigma_max_with(&mut aux, m)
}

pub fn sigma_max_with(aux: &mut AuxProblem<'_>, m: f64) -> Result<MaxReport> {
    let mesh = aux.mesh;
    let params = aux.params.clone();
    let p = params.p;
    let inv = aux.invert(m)?;
    let sol = inv.aux.with_flux(mesh, &params)?;
    let sigma_nodal = sol.sigma_flux.clone().expect("flux recovered above");
    let sigma_mass: f64 = sigma_nodal.iter().map(|x| x.1).sum();
    let sigma_min = sigma_nodal.iter().fold(f64::INFINITY, |a, x| a.min(x.1));
    let mut flags = Vec::new();
    if sigma_min < -1e-10 * m {
        flags.push(format!("negative flux entry {sigma_min:e}"));
    }
    let u_m = sol.eigenfunction(p);
    let boundary_one_max_dev = mesh
        .boundary_nodes()
        .iter()
        .fold(0.0f64, |d, &i| d.max((u_m.values()[i] - 1.0).abs()));
    let sigma_facet_density = nodal_to_facet_density(mesh, &sigma_nodal);
    let mut report = MaxReport {
        m,
        p,
        xi_m: sol.xi,
        lambda: sol.xi,
        lambda_dirichlet_h: aux.lambda_d,
        f_value: sol.f_value,
        sigma_mass,
        mass_rel_err: (sigma_mass - m).abs() / m,
        sigma_min,
        crosscheck_lambda: f64::NAN,
        crosscheck_rel_err: f64::NAN,
        crosscheck_ok: false,
        eigen_residual: f64::NAN,
        boundary_one_max_dev,
        picard_iters: sol.picard_iters,
        bisections: inv.bisections,
        flags,
        sigma_nodal,
        sigma_facet_density,
        u_m,
    };
    let weight = report.sigma_weight(mesh)?;
    // u_m is an eigenfunction for σ_m with eigenvalue ξ(m): check the weak form directly
    let norm = lp_norm_p_raw(mesh, report.u_m.values(), p).powf(1.0 / p);
    let pair = EigenResult {
        lambda: sol.xi,
        mode: EigenMode::Robin,
        outer_iters: 0,
        residual: f64::NAN,
        rq_history: Vec::new(),
        warnings: Vec::new(),
        u: report.u_m.scaled(1.0 / norm),
    };
    report.eigen_residual = verify_weak_residual(mesh, &pair, Some(&weight), &params)?.max_residual;
    if report.eigen_residual >= params.tol_res {
        report
            .flags
            .push(format!("u_m weak residual {:e} above tolerance", report.eigen_residual));
    }
    let check = solve_robin(mesh, &weight, &params)?;
    report.crosscheck_lambda = check.lambda;
    report.crosscheck_rel_err = (check.lambda - sol.xi).abs() / sol.xi;
    report.crosscheck_ok = report.crosscheck_rel_err < 1e-3;
    if !report.crosscheck_ok {
        report.flags.push(format!(
            "cross-check mismatch: ℓ₁(σ_m) = {} vs ξ(m) = {} (relative {:e})",
            check.lambda, sol.xi, report.crosscheck_rel_err
        ));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_interval;

    #[test]
    fn torsion_limit() {
        let mesh = build_interval(200).unwrap();
        let s = solve_aux(&mesh, 0.0, &SolverParams::new(2.0)).unwrap();
        assert!((s.u_xi.max_abs() - 0.125).abs() < 1e-12);
        assert_eq!(s.f_value, 0.0);
    }

    #[test]
    fn closed_form_at_xi_one() {
        let mesh = build_interval(200).unwrap();
        let s = solve_aux(&mesh, 1.0, &SolverParams::new(2.0)).unwrap();
        let exact_max = 1.0 / 0.5f64.cos() - 1.0;
        assert!((s.u_xi.max_abs() - exact_max).abs() < 5e-3 * exact_max);
        let exact_f = 2.0 * 0.5f64.tan();
        assert!((s.f_value - exact_f).abs() < 5e-3 * exact_f);
        for &i in &mesh.boundary_nodes() {
            assert_eq!(s.u_xi.values()[i], 0.0);
        }
    }

    #[test]
    fn rejects_xi_above_ceiling() {
        let mesh = build_interval(50).unwrap();
        assert!(matches!(
            solve_aux(&mesh, 10.0, &SolverParams::new(2.0)),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn interval_pipeline() {
        let mesh = build_interval(200).unwrap();
        let r = sigma_max(&mesh, 2.0, &SolverParams::new(2.0)).unwrap();
        assert!((r.xi_m - 1.70705).abs() < 5e-3 * 1.70705, "{}", r.xi_m);
        assert!(r.mass_rel_err < 1e-9, "{}", r.mass_rel_err);
        assert!(r.crosscheck_ok, "{r:?}");
        assert_eq!(r.boundary_one_max_dev, 0.0);
        let (a, b) = (r.sigma_nodal[0].1, r.sigma_nodal[1].1);
        assert!((a - b).abs() < 1e-10 * a);
        assert!(r.flags.is_empty(), "{:?}", r.flags);
    }
}
