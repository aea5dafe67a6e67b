use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exponent and numerical knobs shared by every solver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverParams {
    pub p: f64,
    /// Relative Rayleigh-quotient stall tolerance of the outer iteration.
    pub tol_rq: f64,
    /// Max-norm tolerance on the Rayleigh-quotient gradient / weak residual.
    pub tol_res: f64,
    pub max_outer: usize,
    /// Gradient regularization used in derivative assembly for p < 2.
    pub eps_reg: f64,
    /// Relative stopping tolerance of the monotone Picard iteration for the auxiliary problem.
    pub tol_aux: f64,
    pub max_picard: usize,
    pub seed: u64,
}

pub const P_MIN: f64 = 1.1;
pub const P_MAX: f64 = 10.0;

impl SolverParams {
    pub fn new(p: f64) -> Self {
        SolverParams {
            p,
            tol_rq: 1e-9,
            tol_res: 1e-8,
            max_outer: 500,
            eps_reg: 1e-10,
            tol_aux: 1e-12,
            max_picard: 200_000,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p >= P_MIN && self.p <= P_MAX) {
            return Err(Error::invalid(format!(
                "p = {} outside the supported range [{P_MIN}, {P_MAX}]",
                self.p
            )));
        }
        for (name, v) in [
            ("tol_rq", self.tol_rq),
            ("tol_res", self.tol_res),
            ("eps_reg", self.eps_reg),
            ("tol_aux", self.tol_aux),
        ] {
            if !(v > 0.0) {
                return Err(Error::invalid(format!("{name} must be positive")));
            }
        }
        if self.max_outer == 0 || self.max_picard == 0 {
            return Err(Error::invalid("iteration caps must be positive"));
        }
        Ok(())
    }
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams::new(2.0)
    }
}
