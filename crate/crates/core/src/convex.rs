//! Strictly convex inner problems
//!
//! `min_w (1/p)(∫|∇w|^p + ∫|w|^p dσ) − ⟨load, w⟩`, with `w = 0` on fixed nodes,
//! solved by damped Newton on the (regularized) Hessian. When the Newton
//! direction is unavailable or not a descent direction, a diagonally scaled
//! gradient step is taken. Both use Armijo backtracking (factor 0.5, slope 1e-4).

use crate::energy::{add_boundary_action, assemble_hessian, boundary_term_raw, grad_energy_raw, stiffness_action};
use crate::error::{Error, Result};
use crate::linalg::{CsrPattern, Envelope, Factor};
use crate::mesh::Mesh;
use crate::weight::BoundaryWeight;

const ARMIJO_SLOPE: f64 = 1e-4;
const MAX_NEWTON: usize = 200;

pub(crate) struct ConvexSolver<'a> {
    mesh: &'a Mesh,
    weight: Option<&'a BoundaryWeight>,
    p: f64,
    eps_reg: f64,
    free: Vec<bool>,
    pattern: CsrPattern,
    envelope: Envelope,
    hessian: Vec<f64>,
    /// For p = 2 the Hessian does not depend on `w`; its factor is kept.
    cached: Option<Factor>,
}

#[derive(Debug, Clone)]
pub(crate) struct ConvexOutcome {
    pub w: Vec<f64>,
}

impl<'a> ConvexSolver<'a> {
    pub(crate) fn new(
        mesh: &'a Mesh,
        weight: Option<&'a BoundaryWeight>,
        p: f64,
        eps_reg: f64,
        free: Vec<bool>,
    ) -> Self {
        let pattern = CsrPattern::from_mesh(mesh);
        let envelope = Envelope::new(&pattern, &free);
        let hessian = vec![0.0; pattern.nnz()];
        ConvexSolver {
            mesh,
            weight,
            p,
            eps_reg,
            free,
            pattern,
            envelope,
            hessian,
            cached: None,
        }
    }

    fn objective(&self, w: &[f64], load: &[f64]) -> f64 {
        let e = grad_energy_raw(self.mesh, w, self.p) + boundary_term_raw(self.mesh, w, self.weight, self.p);
        let lin: f64 = w
            .iter()
            .zip(load)
            .zip(&self.free)
            .filter(|(_, &f)| f)
            .map(|((a, b), _)| a * b)
            .sum();
        e / self.p - lin
    }

    fn gradient(&self, w: &[f64], load: &[f64]) -> Vec<f64> {
        let mut g = stiffness_action(self.mesh, w, self.p, self.eps_reg);
        add_boundary_action(self.mesh, w, self.weight, self.p, &mut g);
        for i in 0..g.len() {
            g[i] = if self.free[i] { g[i] - load[i] } else { 0.0 };
        }
        g
    }

    fn newton_direction(&mut self, w: &[f64], g: &[f64]) -> Option<Vec<f64>> {
        let neg: Vec<f64> = g.iter().map(|v| -v).collect();
        if self.p == 2.0 {
            if self.cached.is_none() {
                assemble_hessian(
                    self.mesh,
                    &self.pattern,
                    w,
                    self.weight,
                    self.p,
                    self.eps_reg,
                    &mut self.hessian,
                );
                self.cached = self.envelope.factor(&self.pattern, &self.hessian);
            }
            let f = self.cached.as_ref()?;
            return Some(self.envelope.solve(f, &neg));
        }
        assemble_hessian(
            self.mesh,
            &self.pattern,
            w,
            self.weight,
            self.p,
            self.eps_reg,
            &mut self.hessian,
        );
        let f = self.envelope.factor(&self.pattern, &self.hessian)?;
        Some(self.envelope.solve(&f, &neg))
    }

    fn diagonal(&self, i: usize) -> f64 {
        self.hessian[self.pattern.index(i, i)]
    }

    /// Minimizes from `w0`. Entries of `w0` on fixed nodes are ignored (set to zero).
    pub(crate) fn minimize(&mut self, load: &[f64], w0: &[f64]) -> Result<ConvexOutcome> {
        let mut w: Vec<f64> = w0
            .iter()
            .zip(&self.free)
            .map(|(&v, &f)| if f { v } else { 0.0 })
            .collect();
        let mut j = self.objective(&w, load);
        let mut g = self.gradient(&w, load);
        let load_scale = load.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for _ in 0..MAX_NEWTON {
            let gnorm = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if gnorm == 0.0 || gnorm <= 1e-15 * load_scale {
                return Ok(ConvexOutcome { w });
            }
            let mut dir = self.newton_direction(&w, &g);
            let mut slope = dir.as_ref().map_or(0.0, |d| dot(d, &g));
            let newton = dir.is_some() && slope < 0.0;
            if !newton {
                let d: Vec<f64> = (0..g.len())
                    .map(|i| {
                        if !self.free[i] {
                            return 0.0;
                        }
                        let h = self.diagonal(i);
                        if h > 0.0 {
                            -g[i] / h
                        } else {
                            -g[i]
                        }
                    })
                    .collect();
                slope = dot(&d, &g);
                dir = Some(d);
            }
            let d = dir.expect("direction set above");
            let wmax = w.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let dmax = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let mut t = 1.0;
            let mut accepted = None;
            if newton && self.p == 2.0 {
                // the quadratic model is exact: the Newton point is the minimizer
                let trial: Vec<f64> = w.iter().zip(&d).map(|(a, b)| a + b).collect();
                let jt = self.objective(&trial, load);
                accepted = Some((trial, jt));
            }
            while accepted.is_none() && t * dmax > 1e-17 * wmax.max(1e-300) {
                let trial: Vec<f64> = w.iter().zip(&d).map(|(a, b)| a + t * b).collect();
                let jt = self.objective(&trial, load);
                if jt <= j + ARMIJO_SLOPE * t * slope {
                    accepted = Some((trial, jt));
                    break;
                }
                t *= 0.5;
            }
            if accepted.is_none() && newton {
                // decrease below objective roundoff: judge the full step by the gradient instead
                let trial: Vec<f64> = w.iter().zip(&d).map(|(a, b)| a + b).collect();
                let gt = self.gradient(&trial, load);
                if gt.iter().fold(0.0f64, |m, v| m.max(v.abs())) < gnorm {
                    let jt = self.objective(&trial, load);
                    t = 1.0;
                    accepted = Some((trial, jt));
                }
            }
            let Some((trial, jt)) = accepted else {
                // no representable decrease left: at the roundoff floor
                return Ok(ConvexOutcome { w });
            };
            w = trial;
            j = jt;
            g = self.gradient(&w, load);
            let step = t * dmax;
            let exact_quadratic = self.p == 2.0 && newton && t == 1.0;
            if exact_quadratic || step <= 1e-13 * wmax.max(1e-300) {
                return Ok(ConvexOutcome { w });
            }
        }
        Err(Error::NoConvergence {
            iterations: MAX_NEWTON,
            msg: "inner convex solve did not converge".into(),
            best: None,
        })
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::load_vector_p1;
    use crate::mesh::{build_interval, build_square};

    #[test]
    fn torsion_interval_is_nodally_exact() {
        let mesh = build_interval(20).unwrap();
        let free: Vec<bool> = mesh.node_is_boundary().iter().map(|b| !b).collect();
        let mut s = ConvexSolver::new(&mesh, None, 2.0, 1e-10, free);
        let load = load_vector_p1(&mesh, &vec![1.0; mesh.n_nodes()]);
        let out = s.minimize(&load, &vec![0.0; mesh.n_nodes()]).unwrap();
        for (i, x) in mesh.nodes().iter().enumerate() {
            assert!((out.w[i] - 0.5 * x[0] * (1.0 - x[0])).abs() < 1e-13);
        }
    }

    #[test]
    fn nonlinear_solves_reach_stationarity() {
        let mesh = build_square(0.2).unwrap();
        let w = BoundaryWeight::constant(&mesh, 1.0).unwrap();
        for p in [1.5, 3.0, 6.0] {
            let mut s = ConvexSolver::new(&mesh, Some(&w), p, 1e-10, vec![true; mesh.n_nodes()]);
            let load = load_vector_p1(&mesh, &vec![1.0; mesh.n_nodes()]);
            let out = s.minimize(&load, &vec![1.0; mesh.n_nodes()]).unwrap();
            let g = s.gradient(&out.w, &load);
            let gn = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            assert!(gn < 1e-11, "p={p}: gradient {gn}");
        }
    }
}
