//! First eigenpair of the discrete Rayleigh quotient by an inverse-power
//! iteration. Each outer step solves the strictly convex problem
//! `min (1/p)(∫|∇w|^p + ∫|w|^p dσ) − ∫|u_k|^{p-2}u_k w` and renormalizes
//! the positive part of its minimizer.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::convex::ConvexSolver;
use crate::energy::{lp_norm_p_raw, mass_action, rayleigh_raw, weak_residual};
use crate::error::{Error, Result};
use crate::field::NodalField;
use crate::mesh::Mesh;
use crate::params::SolverParams;
use crate::weight::BoundaryWeight;

/// Constraint under which the quotient is minimized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EigenMode {
    Robin,
    Dirichlet,
    /// `u(x) = 0` at a single boundary node, no boundary term.
    Point {
        node: usize,
        x: [f64; 2],
    },
    /// Boundary term `m |u(x)|^p` from a point mass at a boundary node.
    Dirac {
        node: usize,
        x: [f64; 2],
        m: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenResult {
    pub lambda: f64,
    pub mode: EigenMode,
    pub outer_iters: usize,
    /// Max-norm of the Rayleigh-quotient gradient over unconstrained nodes.
    pub residual: f64,
    pub rq_history: Vec<f64>,
    pub warnings: Vec<String>,
    /// Nonnegative, normalized to `∫|u|^p = 1`.
    pub u: NodalField,
}

/// Initial guess of the outer iteration.
#[derive(Debug, Clone)]
pub enum Start {
    Constant,
    /// Independent uniform values in `[0.5, 1.5)` from the given seed.
    Random(u64),
    Field(NodalField),
}

pub fn solve_robin(mesh: &Mesh, w: &BoundaryWeight, params: &SolverParams) -> Result<EigenResult> {
    solve(mesh, &EigenMode::Robin, Some(w), params, &Start::Constant)
}

pub fn solve_dirichlet(mesh: &Mesh, params: &SolverParams) -> Result<EigenResult> {
    solve(mesh, &EigenMode::Dirichlet, None, params, &Start::Constant)
}

pub fn solve_point(mesh: &Mesh, node: usize, params: &SolverParams) -> Result<EigenResult> {
    check_boundary_node(mesh, node)?;
    solve(
        mesh,
        &EigenMode::Point {
            node,
            x: mesh.node(node),
        },
        None,
        params,
        &Start::Constant,
    )
}

pub fn solve_dirac(mesh: &Mesh, node: usize, m: f64, params: &SolverParams) -> Result<EigenResult> {
    check_boundary_node(mesh, node)?;
    solve(
        mesh,
        &EigenMode::Dirac {
            node,
            x: mesh.node(node),
            m,
        },
        None,
        params,
        &Start::Constant,
    )
}

fn check_boundary_node(mesh: &Mesh, node: usize) -> Result<()> {
    if node >= mesh.n_nodes() || !mesh.is_boundary(node) {
        return Err(Error::invalid(format!("node {node} is not a boundary node")));
    }
    Ok(())
}

/// Nodes whose values are free in the given mode.
pub fn free_mask(mesh: &Mesh, mode: &EigenMode) -> Vec<bool> {
    match mode {
        EigenMode::Robin | EigenMode::Dirac { .. } => vec![true; mesh.n_nodes()],
        EigenMode::Dirichlet => mesh.node_is_boundary().iter().map(|b| !b).collect(),
        EigenMode::Point { node, .. } => (0..mesh.n_nodes()).map(|i| i != *node).collect(),
    }
}

fn mode_weight(mesh: &Mesh, mode: &EigenMode, robin: Option<&BoundaryWeight>) -> Result<Option<BoundaryWeight>> {
    match mode {
        EigenMode::Robin => {
            let w = robin.ok_or_else(|| Error::invalid("Robin mode needs a boundary weight"))?;
            if !(w.mass() > 0.0) {
                return Err(Error::Domain(
                    "zero boundary mass: the first eigenvalue is 0 with constant eigenfunctions".into(),
                ));
            }
            Ok(Some(w.clone()))
        }
        EigenMode::Dirac { node, m, .. } => {
            if !(*m > 0.0 && m.is_finite()) {
                return Err(Error::invalid("Dirac mass must be positive and finite"));
            }
            Ok(Some(BoundaryWeight::dirac(mesh, *node, *m)?))
        }
        EigenMode::Dirichlet | EigenMode::Point { .. } => Ok(None),
    }
}

fn initial_guess(mesh: &Mesh, free: &[bool], start: &Start, p: f64) -> Result<Vec<f64>> {
    let raw: Vec<f64> = match start {
        Start::Constant => vec![1.0; mesh.n_nodes()],
        Start::Random(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            (0..mesh.n_nodes()).map(|_| rng.gen_range(0.5..1.5)).collect()
        }
        Start::Field(f) => {
            if f.len() != mesh.n_nodes() {
                return Err(Error::invalid("initial field does not match the mesh"));
            }
            f.values().iter().map(|v| v.max(0.0)).collect()
        }
    };
    let u: Vec<f64> = raw.iter().zip(free).map(|(&v, &f)| if f { v } else { 0.0 }).collect();
    normalize(mesh, u, p).ok_or_else(|| Error::invalid("initial guess vanishes on the free nodes"))
}

fn normalize(mesh: &Mesh, u: Vec<f64>, p: f64) -> Option<Vec<f64>> {
    let d = lp_norm_p_raw(mesh, &u, p);
    if !(d > 0.0 && d.is_finite()) {
        return None;
    }
    let n = d.powf(1.0 / p);
    Some(u.into_iter().map(|v| v / n).collect())
}

fn max_free(v: &[f64], free: &[bool]) -> f64 {
    v.iter()
        .zip(free)
        .filter(|(_, &f)| f)
        .fold(0.0f64, |m, (x, _)| m.max(x.abs()))
}

/// Relative increase of the quotient attributed to roundoff.
const ROUNDOFF_BAND: f64 = 1e-13;

/// General entry point: minimizes the quotient in `mode` from `start`.
pub fn solve(
    mesh: &Mesh,
    mode: &EigenMode,
    robin: Option<&BoundaryWeight>,
    params: &SolverParams,
    start: &Start,
) -> Result<EigenResult> {
    params.validate()?;
    let p = params.p;
    let weight = mode_weight(mesh, mode, robin)?;
    let free = free_mask(mesh, mode);
    if !free.iter().any(|&f| f) {
        return Err(Error::invalid("no free nodes"));
    }
    let mut warnings = Vec::new();
    if p <= mesh.dim() as f64 && matches!(mode, EigenMode::Point { .. } | EigenMode::Dirac { .. }) {
        warnings.push(format!(
            "p = {p} <= n = {}: points have zero capacity, the continuum value is 0 and this discrete value depends on the mesh",
            mesh.dim()
        ));
    }
    let mut u = initial_guess(mesh, &free, start, p)?;
    let w = weight.as_ref();
    let mut q = rayleigh_raw(mesh, &u, w, p);
    let mut history = vec![q];
    let mut solver = ConvexSolver::new(mesh, w, p, params.eps_reg, free.clone());
    let residual_of = |u: &[f64], q: f64| {
        let r = weak_residual(mesh, u, w, p, q, params.eps_reg);
        p * max_free(&r, &free)
    };
    let mut residual = residual_of(&u, q);

    for k in 1..=params.max_outer {
        let load = mass_action(mesh, &u, p);
        // warm start on the ray through u_k that minimizes the inner functional
        let t = (1.0 / q).powf(1.0 / (p - 1.0));
        let w0: Vec<f64> = u.iter().map(|v| t * v).collect();
        let out = solver.minimize(&load, &w0)?;
        let plus: Vec<f64> = out.w.iter().map(|v| v.max(0.0)).collect();
        let Some(next) = normalize(mesh, plus, p) else {
            return Err(Error::Invariant("inner minimizer has no positive part".into()));
        };
        let q_next = rayleigh_raw(mesh, &next, w, p);
        if !(q_next <= q * (1.0 + ROUNDOFF_BAND)) {
            // a genuine increase: no further descent is representable
            return finish(mode, q, u, k - 1, residual, history, warnings, params);
        }
        let stall = (q - q_next) / q_next;
        let r_next = residual_of(&next, q_next);
        if q_next > q && r_next >= residual {
            // inside the roundoff band the quotient carries no information; the residual must improve
            return finish(mode, q, u, k - 1, residual, history, warnings, params);
        }
        u = next;
        q = q_next;
        history.push(q);
        residual = r_next;
        if stall < params.tol_rq && residual < params.tol_res {
            return finish(mode, q, u, k, residual, history, warnings, params);
        }
    }
    Err(Error::NoConvergence {
        iterations: params.max_outer,
        msg: format!("outer iteration stalled with residual {residual:e}"),
        best: Some(Box::new((q, NodalField::from_vec(u)))),
    })
}

#[allow(clippy::too_many_arguments)]
fn finish(
    mode: &EigenMode,
    q: f64,
    u: Vec<f64>,
    iters: usize,
    residual: f64,
    history: Vec<f64>,
    warnings: Vec<String>,
    params: &SolverParams,
) -> Result<EigenResult> {
    if !(residual < params.tol_res) {
        return Err(Error::NoConvergence {
            iterations: iters,
            msg: format!(
                "Rayleigh quotient stopped decreasing with residual {residual:e} above {:e}",
                params.tol_res
            ),
            best: Some(Box::new((q, NodalField::from_vec(u)))),
        });
    }
    if q < 0.0 {
        return Err(Error::Invariant(format!("negative eigenvalue {q}")));
    }
    Ok(EigenResult {
        lambda: q,
        mode: mode.clone(),
        outer_iters: iters,
        residual,
        rq_history: history,
        warnings,
        u: NodalField::from_vec(u),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    /// Largest `|∫|∇u|^{p-2}∇u·∇φ_i + ∫|u|^{p-2}uφ_i dσ − λ∫|u|^{p-2}uφ_i|` over unconstrained nodes.
    pub max_residual: f64,
    pub worst_node: usize,
    pub tol: f64,
    pub passes: bool,
}

/// Weak-form residual of `(result.lambda, result.u)` against every nodal test
/// function not removed by the constraint. `w` is the Robin weight (ignored in
/// other modes; the Dirac weight is rebuilt from the mode).
pub fn verify_weak_residual(
    mesh: &Mesh,
    result: &EigenResult,
    w: Option<&BoundaryWeight>,
    params: &SolverParams,
) -> Result<ResidualReport> {
    let weight = mode_weight(mesh, &result.mode, w)?;
    let free = free_mask(mesh, &result.mode);
    let r = weak_residual(
        mesh,
        result.u.values(),
        weight.as_ref(),
        params.p,
        result.lambda,
        params.eps_reg,
    );
    let (mut worst_node, mut max_residual) = (0, 0.0);
    for (i, v) in r.iter().enumerate() {
        if free[i] && v.abs() > max_residual {
            max_residual = v.abs();
            worst_node = i;
        }
    }
    Ok(ResidualReport {
        max_residual,
        worst_node,
        tol: params.tol_res,
        passes: max_residual < params.tol_res,
    })
}
