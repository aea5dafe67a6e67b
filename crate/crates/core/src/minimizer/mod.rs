//! Infimum over weights of mass `m`.
//!
//! For `p > n` the infimum is attained by a point mass `m δ_x` at a boundary
//! point, so it is found by scanning Dirac weights over the boundary nodes.
//! The point-pinned eigenvalues `λ₁(x)` bound every `ℓ₁(m δ_x)` from above and
//! are the large-`m` limit. For `p ≤ n` points carry no capacity, the infimum
//! is 0 and is not attained; see [`concentration`].

pub mod concentration;
pub mod hoelder;

use serde::{Deserialize, Serialize};

use crate::eigensolver::{solve_dirac, solve_point};
use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::par::map_ordered;
use crate::params::SolverParams;

pub use concentration::{concentration_demo, ConcentrationRow, ConcentrationRun, Profile};
pub use hoelder::{hoelder_check, HoelderReport};

/// Relative tolerance under which two scan values count as tied.
pub const TIE_REL: f64 = 1e-8;

fn refuse_low_p(mesh: &Mesh, p: f64) -> Result<()> {
    let n = mesh.dim();
    if p <= n as f64 {
        return Err(Error::Refused(format!(
            "p = {p} <= n = {n}: λ(m,Ω) = 0 for every m > 0 and the infimum is not attained \
             (boundary points have zero p-capacity, so λ₁(x;Ω) = 0 as well); \
             use `concentrate` to see the minimizing sequence"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointEntry {
    pub node: usize,
    pub x: [f64; 2],
    pub lambda1: Option<f64>,
    pub error: Option<String>,
}

/// `λ₁(x;Ω)` at every boundary node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointScan {
    pub p: f64,
    pub lambda1_omega: f64,
    /// Lowest node index among the minimizers.
    pub argmin: usize,
    pub tie_set: Vec<usize>,
    pub entries: Vec<PointEntry>,
}

impl PointScan {
    pub fn value(&self, node: usize) -> Option<f64> {
        self.entries.iter().find(|e| e.node == node).and_then(|e| e.lambda1)
    }

    /// Nodes within relative `rel` of the minimum.
    pub fn near_minimizers(&self, rel: f64) -> Vec<usize> {
        tie_set(
            self.entries.iter().map(|e| (e.node, e.lambda1)),
            self.lambda1_omega,
            rel,
        )
    }
}

fn tie_set(values: impl Iterator<Item = (usize, Option<f64>)>, min: f64, rel: f64) -> Vec<usize> {
    values
        .filter(|(_, v)| v.is_some_and(|v| v <= min + rel * min.abs()))
        .map(|(i, _)| i)
        .collect()
}

fn argmin(values: &[(usize, Option<f64>)]) -> Option<(usize, f64)> {
    values
        .iter()
        .filter_map(|&(i, v)| v.map(|v| (i, v)))
        .fold(None, |best: Option<(usize, f64)>, (i, v)| match best {
            Some((_, b)) if b <= v => best,
            _ => Some((i, v)),
        })
}

/// Solves the point-pinned problem at every boundary node.
pub fn scan_point_eigen(mesh: &Mesh, params: &SolverParams) -> Result<PointScan> {
    params.validate()?;
    refuse_low_p(mesh, params.p)?;
    let nodes = mesh.boundary_nodes();
    let results = map_ordered(&nodes, |&i| solve_point(mesh, i, params));
    let entries: Vec<PointEntry> = nodes
        .iter()
        .zip(results)
        .map(|(&node, r)| match r {
            Ok(r) => PointEntry {
                node,
                x: mesh.node(node),
                lambda1: Some(r.lambda),
                error: None,
            },
            Err(e) => PointEntry {
                node,
                x: mesh.node(node),
                lambda1: None,
                error: Some(e.to_string()),
            },
        })
        .collect();
    let vals: Vec<(usize, Option<f64>)> = entries.iter().map(|e| (e.node, e.lambda1)).collect();
    let (argmin, min) = argmin(&vals).ok_or_else(|| Error::NoConvergence {
        iterations: 0,
        msg: "every point-pinned solve failed".into(),
        best: None,
    })?;
    let tie_set = tie_set(vals.into_iter(), min, TIE_REL);
    Ok(PointScan {
        p: params.p,
        lambda1_omega: min,
        argmin,
        tie_set,
        entries,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinEntry {
    pub node: usize,
    pub x: [f64; 2],
    pub ell1_dirac: Option<f64>,
    pub lambda1_x: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinReport {
    pub m: f64,
    pub p: f64,
    pub volume: f64,
    pub lambda_inf: f64,
    pub x_m: usize,
    pub x_m_coords: [f64; 2],
    pub tie_set: Vec<usize>,
    pub lambda1_omega: f64,
    pub lambda1_argmin: usize,
    pub lambda1_tie_set: Vec<usize>,
    /// Checked inequalities that failed (empty when all hold).
    pub violations: Vec<String>,
    pub entries: Vec<MinEntry>,
}

impl MinReport {
    /// CSV with columns `node,x,y,lambda1_x,ell1_dirac`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("node,x,y,lambda1_x,ell1_dirac\n");
        let opt = |v: Option<f64>| v.map_or(String::new(), |v| format!("{v:e}"));
        for e in &self.entries {
            s.push_str(&format!(
                "{},{:e},{:e},{},{}\n",
                e.node,
                e.x[0],
                e.x[1],
                opt(e.lambda1_x),
                opt(e.ell1_dirac)
            ));
        }
        s
    }
}

/// `λ(m,Ω)` and its point-pinned companion scan.
pub fn lambda_inf(mesh: &Mesh, m: f64, params: &SolverParams) -> Result<MinReport> {
    let scan = scan_point_eigen(mesh, params)?;
    lambda_inf_with(mesh, m, params, &scan)
}

/// As [`lambda_inf`], reusing a point-pinned scan of the same mesh and `p`.
pub fn lambda_inf_with(mesh: &Mesh, m: f64, params: &SolverParams, scan: &PointScan) -> Result<MinReport> {
    params.validate()?;
    refuse_low_p(mesh, params.p)?;
    if !(m > 0.0 && m.is_finite()) {
        return Err(Error::invalid("m must be positive and finite"));
    }
    if scan.p != params.p {
        return Err(Error::invalid("point scan computed for a different p"));
    }
    let nodes = mesh.boundary_nodes();
    let results = map_ordered(&nodes, |&i| solve_dirac(mesh, i, m, params));
    let entries: Vec<MinEntry> = nodes
        .iter()
        .zip(results)
        .map(|(&node, r)| {
            let lambda1_x = scan.value(node);
            match r {
                Ok(r) => MinEntry {
                    node,
                    x: mesh.node(node),
                    ell1_dirac: Some(r.lambda),
                    lambda1_x,
                    error: None,
                },
                Err(e) => MinEntry {
                    node,
                    x: mesh.node(node),
                    ell1_dirac: None,
                    lambda1_x,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    let vals: Vec<(usize, Option<f64>)> = entries.iter().map(|e| (e.node, e.ell1_dirac)).collect();
    let (x_m, lambda_inf) = argmin(&vals).ok_or_else(|| Error::NoConvergence {
        iterations: 0,
        msg: "every Dirac solve failed".into(),
        best: None,
    })?;
    let tie_set = tie_set(vals.into_iter(), lambda_inf, TIE_REL);
    let volume = mesh.volume();
    let mut violations = Vec::new();
    for e in &entries {
        if let (Some(d), Some(l)) = (e.ell1_dirac, e.lambda1_x) {
            if d > l + 1e-9 {
                violations.push(format!("node {}: ℓ₁(mδ_x) = {d} > λ₁(x) = {l}", e.node));
            }
        }
        if let Some(d) = e.ell1_dirac {
            if d > m / volume + 1e-9 {
                violations.push(format!("node {}: ℓ₁(mδ_x) = {d} > m/|Ω| = {}", e.node, m / volume));
            }
        }
    }
    if lambda_inf > scan.lambda1_omega.min(m / volume) + 1e-9 {
        violations.push(format!("λ(m) = {lambda_inf} exceeds min(λ₁(Ω), m/|Ω|)"));
    }
    Ok(MinReport {
        m,
        p: params.p,
        volume,
        lambda_inf,
        x_m,
        x_m_coords: mesh.node(x_m),
        tie_set,
        lambda1_omega: scan.lambda1_omega,
        lambda1_argmin: scan.argmin,
        lambda1_tie_set: scan.tie_set.clone(),
        violations,
        entries,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XmRow {
    pub m: f64,
    pub lambda_inf: f64,
    pub x_m: usize,
    pub x: [f64; 2],
    /// Distance from `x_m` to the nearest node of the `λ₁(·;Ω)` minimizer set.
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XmTrack {
    pub p: f64,
    /// Relative tolerance defining the minimizer set of `λ₁(·;Ω)`.
    pub tie_rel: f64,
    pub argmin_set: Vec<usize>,
    pub rows: Vec<XmRow>,
    /// Distances nonincreasing over the rows with `m ≥ m_max / 10`.
    pub nonincreasing_last_decade: bool,
}

/// `x_m` for each `m` and its distance to the minimizers of `λ₁(·;Ω)`.
pub fn track_xm(mesh: &Mesh, m_list: &[f64], params: &SolverParams, tie_rel: f64) -> Result<XmTrack> {
    if m_list.is_empty() || m_list.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::invalid("m list must be nonempty and strictly increasing"));
    }
    let scan = scan_point_eigen(mesh, params)?;
    let argmin_set = scan.near_minimizers(tie_rel);
    let mut rows = Vec::new();
    for &m in m_list {
        let rep = lambda_inf_with(mesh, m, params, &scan)?;
        let x = mesh.node(rep.x_m);
        let distance = argmin_set
            .iter()
            .map(|&i| {
                let y = mesh.node(i);
                ((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2)).sqrt()
            })
            .fold(f64::INFINITY, f64::min);
        rows.push(XmRow {
            m,
            lambda_inf: rep.lambda_inf,
            x_m: rep.x_m,
            x,
            distance,
        });
    }
    let m_max = *m_list.last().unwrap();
    let tail: Vec<f64> = rows
        .iter()
        .filter(|r| r.m >= m_max / 10.0)
        .map(|r| r.distance)
        .collect();
    let nonincreasing_last_decade = tail.windows(2).all(|w| w[1] <= w[0] + 1e-12);
    Ok(XmTrack {
        p: params.p,
        tie_rel,
        argmin_set,
        rows,
        nonincreasing_last_decade,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_interval, build_square};

    #[test]
    fn interval_scan_and_infimum() {
        let mesh = build_interval(200).unwrap();
        let params = SolverParams::new(2.0);
        let scan = scan_point_eigen(&mesh, &params).unwrap();
        let q = std::f64::consts::PI.powi(2) / 4.0;
        assert!((scan.lambda1_omega - q).abs() < 0.01 * q);
        assert_eq!(scan.tie_set.len(), 2);
        let rep = lambda_inf_with(&mesh, 1.0, &params, &scan).unwrap();
        assert!((rep.lambda_inf - 0.74017).abs() < 0.005 * 0.74017);
        assert!(rep.violations.is_empty(), "{:?}", rep.violations);
        assert!(rep.x_m == 0 || rep.x_m == mesh.n_nodes() - 1);
    }

    #[test]
    fn low_p_is_refused() {
        let mesh = build_square(0.25).unwrap();
        assert!(matches!(
            lambda_inf(&mesh, 1.0, &SolverParams::new(2.0)),
            Err(Error::Refused(_))
        ));
        assert!(matches!(
            scan_point_eigen(&mesh, &SolverParams::new(1.5)),
            Err(Error::Refused(_))
        ));
    }
}
