//! Finite-difference Rayleigh quotient on a uniform grid of [0,1], minimized
//! by nonlinear conjugate gradients (Polak–Ribière+, restarted).
//!
//! The quotient is `(Σ h|Δu/h|^p + boundary) / (trapezoid Σ h|u|^p)`.
//! Grids are nested: each level starts from the linear interpolant of the
//! previous one, which removes most of the slow low-frequency error.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum End {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BruteMode {
    Robin {
        left: f64,
        right: f64,
    },
    Dirichlet,
    /// `u = 0` at one end, free elsewhere.
    Point {
        end: End,
    },
    Dirac {
        end: End,
        m: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BruteForceResult {
    pub lambda: f64,
    pub n_grid: usize,
    /// Quotient on every level, coarse to fine.
    pub levels: Vec<(usize, f64)>,
    pub iterations: usize,
}

struct Problem {
    p: f64,
    n: usize,
    h: f64,
    sigma: [f64; 2],
    fixed: [bool; 2],
}

impl Problem {
    fn parts(&self, u: &[f64]) -> (f64, f64) {
        let (p, h, n) = (self.p, self.h, self.n);
        let mut num = 0.0;
        for k in 0..n {
            num += h * ((u[k + 1] - u[k]) / h).abs().powf(p);
        }
        num += self.sigma[0] * u[0].abs().powf(p) + self.sigma[1] * u[n].abs().powf(p);
        let mut den = 0.0;
        for (i, v) in u.iter().enumerate() {
            let wt = if i == 0 || i == n { 0.5 } else { 1.0 };
            den += h * wt * v.abs().powf(p);
        }
        (num, den)
    }

    fn value(&self, u: &[f64]) -> f64 {
        let (a, b) = self.parts(u);
        a / b
    }

    fn gradient(&self, u: &[f64], g: &mut [f64]) -> f64 {
        let (p, h, n) = (self.p, self.h, self.n);
        let (num, den) = self.parts(u);
        let q = num / den;
        let phi = |s: f64| {
            if s == 0.0 {
                0.0
            } else {
                s.signum() * s.abs().powf(p - 1.0)
            }
        };
        g.iter_mut().for_each(|v| *v = 0.0);
        for k in 0..n {
            let f = p * phi((u[k + 1] - u[k]) / h);
            g[k] -= f;
            g[k + 1] += f;
        }
        g[0] += p * self.sigma[0] * phi(u[0]);
        g[n] += p * self.sigma[1] * phi(u[n]);
        for (i, gi) in g.iter_mut().enumerate() {
            let wt = if i == 0 || i == n { 0.5 } else { 1.0 };
            *gi = (*gi - q * p * h * wt * phi(u[i])) / den;
        }
        if self.fixed[0] {
            g[0] = 0.0;
        }
        if self.fixed[1] {
            g[n] = 0.0;
        }
        q
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimizes `φ(t) = Q(u + t d)` for a descent direction `d`, by bracketing a
/// sign change of `φ'` and refining it with safeguarded secant steps.
fn line_search(pr: &Problem, u: &[f64], d: &[f64], t0: f64, slope0: f64, g: &mut [f64]) -> Option<f64> {
    let mut trial = vec![0.0; u.len()];
    let mut dphi = |t: f64, g: &mut [f64]| {
        for i in 0..u.len() {
            trial[i] = u[i] + t * d[i];
        }
        pr.gradient(&trial, g);
        dot(g, d)
    };
    let (mut lo, mut slo) = (0.0, slope0);
    let mut hi = t0;
    let mut shi = dphi(hi, g);
    let mut expand = 0;
    while shi < 0.0 {
        lo = hi;
        slo = shi;
        hi *= 4.0;
        shi = dphi(hi, g);
        expand += 1;
        if expand > 60 || !shi.is_finite() {
            return None;
        }
    }
    let mut t = hi;
    for it in 0..60 {
        let secant = lo - slo * (hi - lo) / (shi - slo);
        t = if it % 3 == 2 || !(secant > lo && secant < hi) {
            0.5 * (lo + hi)
        } else {
            secant
        };
        let s = dphi(t, g);
        if s.abs() <= 1e-3 * slope0.abs() {
            break;
        }
        if s < 0.0 {
            lo = t;
            slo = s;
        } else {
            hi = t;
            shi = s;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    Some(t)
}

fn ncg(pr: &Problem, u: &mut [f64], max_iter: usize) -> Result<(f64, usize)> {
    let len = u.len();
    let mut g = vec![0.0; len];
    let mut q = pr.gradient(u, &mut g);
    let mut d: Vec<f64> = g.iter().map(|v| -v).collect();
    let mut g_new = vec![0.0; len];
    let mut t_prev: f64 = 1e-3;
    let mut window = vec![q];
    for it in 0..max_iter {
        let mut slope = dot(&g, &d);
        if slope >= 0.0 {
            d.iter_mut().zip(&g).for_each(|(di, gi)| *di = -gi);
            slope = dot(&g, &d);
        }
        if slope == 0.0 {
            return Ok((q, it));
        }
        let dn = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let un = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let t0 = t_prev.max(1e-12 * un / dn);
        let Some(t) = line_search(pr, u, &d, t0, slope, &mut g_new) else {
            return Err(Error::NoConvergence {
                iterations: it,
                msg: "brute force line search failed".into(),
                best: None,
            });
        };
        for i in 0..len {
            u[i] += t * d[i];
        }
        let q_new = pr.gradient(u, &mut g_new);
        let mut beta = (dot(&g_new, &g_new) - dot(&g_new, &g)) / dot(&g, &g);
        if it % len == len - 1 {
            beta = 0.0;
        }
        t_prev = t;
        // Q is scale invariant; rescale (and restart) only when the norm drifts
        let un = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if !(0.5..=2.0).contains(&un) {
            u.iter_mut().for_each(|v| *v /= un);
            g_new.iter_mut().for_each(|v| *v *= un);
            t_prev *= un * un;
            beta = 0.0;
        }
        let beta = beta.max(0.0);
        for i in 0..len {
            d[i] = -g_new[i] + beta * d[i];
        }
        std::mem::swap(&mut g, &mut g_new);
        q = q_new;
        window.push(q);
        if window.len() > 50 {
            let old = window[window.len() - 51];
            if old - q <= 1e-14 * q {
                return Ok((q, it + 1));
            }
        }
    }
    Ok((q, max_iter))
}

/// Finite-difference reference eigenvalue on [0,1] with `n_grid` cells.
pub fn brute_force_1d(p: f64, mode: BruteMode, n_grid: usize) -> Result<BruteForceResult> {
    if !(1.1..=10.0).contains(&p) {
        return Err(Error::invalid(format!("p = {p} outside [1.1, 10]")));
    }
    if n_grid < 100 {
        return Err(Error::invalid("brute force needs at least 100 grid cells"));
    }
    let (sigma, fixed) = match mode {
        BruteMode::Robin { left, right } => {
            if !(left >= 0.0 && right >= 0.0 && left + right > 0.0) {
                return Err(Error::invalid("Robin weights must be ≥ 0 with positive sum"));
            }
            ([left, right], [false, false])
        }
        BruteMode::Dirichlet => ([0.0, 0.0], [true, true]),
        BruteMode::Point { end: End::Left } => ([0.0, 0.0], [true, false]),
        BruteMode::Point { end: End::Right } => ([0.0, 0.0], [false, true]),
        BruteMode::Dirac { end, m } => {
            if !(m > 0.0) {
                return Err(Error::invalid("Dirac mass must be positive"));
            }
            (if end == End::Left { [m, 0.0] } else { [0.0, m] }, [false, false])
        }
    };
    let mut sizes = vec![n_grid];
    while sizes.last().copied().unwrap_or(0) / 2 >= 100 {
        let next = sizes.last().unwrap() / 2;
        sizes.push(next);
    }
    sizes.reverse();
    let init = |x: f64| -> f64 {
        match (fixed[0], fixed[1]) {
            (true, true) => x * (1.0 - x),
            (true, false) => x,
            (false, true) => 1.0 - x,
            (false, false) => 1.0,
        }
    };
    let mut u: Vec<f64> = (0..=sizes[0]).map(|i| init(i as f64 / sizes[0] as f64)).collect();
    let mut levels = Vec::new();
    let mut total = 0;
    let mut lambda = f64::NAN;
    for (li, &n) in sizes.iter().enumerate() {
        if li > 0 {
            // linear interpolation of the previous level onto the new grid
            let prev = std::mem::take(&mut u);
            let np = prev.len() - 1;
            u = (0..=n)
                .map(|i| {
                    let x = i as f64 / n as f64 * np as f64;
                    let k = (x.floor() as usize).min(np - 1);
                    let s = x - k as f64;
                    (1.0 - s) * prev[k] + s * prev[k + 1]
                })
                .collect();
        }
        let pr = Problem {
            p,
            n,
            h: 1.0 / n as f64,
            sigma,
            fixed,
        };
        let (q, iters) = ncg(&pr, &mut u, 20 * n + 2000)?;
        total += iters;
        lambda = pr.value(&u);
        debug_assert!((lambda - q).abs() <= 1e-12 * q.max(1.0));
        levels.push((n, lambda));
    }
    Ok(BruteForceResult {
        lambda,
        n_grid: *sizes.last().unwrap(),
        levels,
        iterations: total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{interval_dirichlet_p, interval_robin_p2};

    #[test]
    fn agrees_with_transcendental_root() {
        let bf = brute_force_1d(2.0, BruteMode::Robin { left: 1.0, right: 1.0 }, 2000).unwrap();
        let exact = interval_robin_p2(1.0, 1.0).unwrap().lambda;
        assert!((bf.lambda - exact).abs() < 1e-4 * exact, "{} vs {exact}", bf.lambda);
    }

    #[test]
    fn dirichlet_p3() {
        let bf = brute_force_1d(3.0, BruteMode::Dirichlet, 1000).unwrap();
        let exact = interval_dirichlet_p(3.0).unwrap();
        assert!((bf.lambda - exact).abs() < 0.01 * exact, "{} vs {exact}", bf.lambda);
    }
}
