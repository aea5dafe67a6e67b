//! Minimizing sequences for `p ≤ n` (n = 2): mass `m` squeezed onto the
//! boundary arc of radius `2^{-j}` around `x₀`, paired with test functions
//! that vanish at `x₀` and equal 1 outside `B_{1/j}(x₀)`:
//!
//! - `p < n`: the ramp `u_j = j|x − x₀|`;
//! - `p = n`: the log profile `u_j = log j / (−log |x − x₀|)`.
//!
//! `Q[σ_j, u_j]` is evaluated from its closed-form integrands on the half disk
//! `B_{1/j}(x₀) ∩ Ω` next to a flat boundary, by adaptive Gauss–Kronrod
//! quadrature after substitutions that keep every integrand bounded. No mesh
//! is involved, so `j` can be taken as large as 10⁶.

use std::f64::consts::{LN_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    Ramp,
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationRow {
    pub j: f64,
    /// `log10 α_j`, with `α_j = m / (2·2^{-j})` the density on the arc.
    pub log10_alpha: f64,
    pub gradient_term: f64,
    pub boundary_term: f64,
    pub denominator: f64,
    pub q: f64,
    pub bound: f64,
    pub below_bound: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationRun {
    pub n: usize,
    pub p: f64,
    pub m: f64,
    pub volume: f64,
    pub profile: Profile,
    pub rows: Vec<ConcentrationRow>,
    pub all_below_bound: bool,
    /// `Q_j` nonincreasing along the rows with `j ≥ 100`.
    pub decreasing_from_100: bool,
}

impl ConcentrationRun {
    /// CSV with columns `j,log10_alpha,gradient_term,boundary_term,denominator,q,bound,below_bound`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("j,log10_alpha,gradient_term,boundary_term,denominator,q,bound,below_bound\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{},{:e},{:e},{:e},{:e},{:e},{:e},{}\n",
                r.j, r.log10_alpha, r.gradient_term, r.boundary_term, r.denominator, r.q, r.bound, r.below_bound
            ));
        }
        s
    }
}

// Gauss–Kronrod 7/15 on [-1, 1]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for i in 0..7 {
        let s = f(c - h * XGK[i]) + f(c + h * XGK[i]);
        k += WGK[i] * s;
        if i % 2 == 1 {
            g += WG[i / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Adaptive integral of a bounded integrand on `[a, b]` to relative `tol`.
pub(crate) fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let mut parts = vec![(a, b, gk15(&f, a, b))];
    for _ in 0..2000 {
        let total: f64 = parts.iter().map(|p| p.2 .0).sum();
        let err: f64 = parts.iter().map(|p| p.2 .1).sum();
        if err <= tol * total.abs() || err == 0.0 {
            break;
        }
        let (k, _) = parts.iter().enumerate().fold(
            (0, -1.0),
            |(bi, be), (i, p)| if p.2 .1 > be { (i, p.2 .1) } else { (bi, be) },
        );
        let (lo, hi, _) = parts.swap_remove(k);
        let mid = 0.5 * (lo + hi);
        parts.push((lo, mid, gk15(&f, lo, mid)));
        parts.push((mid, hi, gk15(&f, mid, hi)));
    }
    parts.iter().map(|p| p.2 .0).sum()
}

const TOL: f64 = 1e-13;

/// `∫_0^∞ g(t) dt` through `t = x / (1 − x)`.
fn integrate_half_line(g: impl Fn(f64) -> f64) -> f64 {
    integrate(
        |x| {
            if x >= 1.0 {
                return 0.0;
            }
            let t = x / (1.0 - x);
            let v = g(t) / ((1.0 - x) * (1.0 - x));
            if v.is_finite() {
                v
            } else {
                0.0
            }
        },
        0.0,
        1.0,
        TOL,
    )
}

fn ramp_row(p: f64, m: f64, volume: f64, j: f64) -> (f64, f64, f64, f64) {
    // r = t / j on the half disk (angle π)
    let jp2 = (p - 2.0) * j.ln();
    let gradient = PI * jp2.exp() * integrate(|t| t, 0.0, 1.0, TOL);
    let inside = PI * j.powi(-2) * integrate(|t| t.powf(p) * t, 0.0, 1.0, TOL);
    let denominator = volume - 0.5 * PI * j.powi(-2) + inside;
    // boundary arc |s| < ε = 2^{-j}, s = ε t, u = j ε t
    let log_je = j.ln() - j * LN_2;
    let boundary = m * (p * log_je).exp() * integrate(|t| t.powf(p), 0.0, 1.0, TOL);
    let bound = ((p - 2.0) * j.ln()).exp() * PI + (p * log_je).exp() * m;
    (gradient, boundary, denominator, bound / volume)
}

fn log_row(p: f64, m: f64, volume: f64, j: f64) -> (f64, f64, f64, f64) {
    let l = j.ln();
    // |∇u| = L / (r log² r); with s = −log r = L / t the half-disk integral is
    // π L^{1−p} ∫_0^1 e^{(p−2)L/t} t^{2p−2} dt
    let gradient = PI
        * l.powf(1.0 - p)
        * integrate(
            |t| {
                if t == 0.0 {
                    0.0
                } else {
                    ((p - 2.0) * l / t).exp() * t.powf(2.0 * p - 2.0)
                }
            },
            0.0,
            1.0,
            TOL,
        );
    // ∫_{B∩Ω} u^p = π j^{-2} ∫_0^∞ (L/(L+t))^p e^{−2t} dt
    let inside = PI * j.powi(-2) * integrate_half_line(|t| (l / (l + t)).powf(p) * (-2.0 * t).exp());
    let denominator = volume - 0.5 * PI * j.powi(-2) + inside;
    // arc |s| < 2^{-j}: s = 2^{-j} e^{-t} turns (m/ε)∫_0^ε u^p ds into m ∫_0^∞ (L/(j ln2 + t))^p e^{−t} dt
    let s0 = j * LN_2;
    let boundary = m * integrate_half_line(|t| (l / (s0 + t)).powf(p) * (-t).exp());
    // whole-ball gradient integral (p = n = 2) plus the largest boundary value of u^p
    let bound = (2.0 * PI / (3.0 * l) + m * (l / s0).powf(p)) / volume;
    (gradient, boundary, denominator, bound)
}

/// `Q[σ_j, u_j]` for each `j`, with the explicit upper bound `B_j`.
pub fn concentration_demo(n: usize, volume: f64, p: f64, m: f64, j_list: &[f64]) -> Result<ConcentrationRun> {
    if n != 2 {
        return Err(Error::invalid("the concentration model is implemented for n = 2"));
    }
    if !(p > 1.0) {
        return Err(Error::invalid("p must exceed 1"));
    }
    if p > n as f64 {
        return Err(Error::Refused(format!(
            "p = {p} > n = {n}: the infimum is positive and attained by a boundary point mass; use `minimize`"
        )));
    }
    if !(m > 0.0 && volume > 0.0) {
        return Err(Error::invalid("m and |Ω| must be positive"));
    }
    if j_list.iter().any(|&j| !(j >= 2.0 && j.is_finite())) {
        return Err(Error::invalid(
            "every j must be finite and at least 2 (B_{1/j} must fit next to the flat side)",
        ));
    }
    let profile = if p < n as f64 { Profile::Ramp } else { Profile::Log };
    let rows: Vec<ConcentrationRow> = j_list
        .iter()
        .map(|&j| {
            let (gradient_term, boundary_term, denominator, bound) = match profile {
                Profile::Ramp => ramp_row(p, m, volume, j),
                Profile::Log => log_row(p, m, volume, j),
            };
            let q = (gradient_term + boundary_term) / denominator;
            ConcentrationRow {
                j,
                log10_alpha: m.log10() + (j - 1.0) * LN_2 / std::f64::consts::LN_10,
                gradient_term,
                boundary_term,
                denominator,
                q,
                bound,
                below_bound: q <= bound + 1e-9,
            }
        })
        .collect();
    let all_below_bound = rows.iter().all(|r| r.below_bound);
    let tail: Vec<f64> = rows.iter().filter(|r| r.j >= 100.0).map(|r| r.q).collect();
    let decreasing_from_100 = tail.windows(2).all(|w| w[1] <= w[0]);
    Ok(ConcentrationRun {
        n,
        p,
        m,
        volume,
        profile,
        rows,
        all_below_bound,
        decreasing_from_100,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrator_on_known_integrals() {
        assert!((integrate(|x| x.sqrt(), 0.0, 1.0, 1e-13) - 2.0 / 3.0).abs() < 1e-12);
        assert!((integrate_half_line(|t| (-t).exp()) - 1.0).abs() < 1e-12);
        assert!((integrate(|x| (10.0 * x).sin(), 0.0, 3.0, 1e-13) - (1.0 - 30f64.cos()) / 10.0).abs() < 1e-12);
    }

    #[test]
    fn ramp_value_at_ten_thousand() {
        let run = concentration_demo(2, 1.0, 1.5, 1.0, &[1e4]).unwrap();
        let r = &run.rows[0];
        assert!((r.q - PI / 2.0 * 1e-2).abs() < 1e-9, "{}", r.q);
        assert!(r.below_bound);
    }

    #[test]
    fn log_gradient_term() {
        let run = concentration_demo(2, 1.0, 2.0, 1.0, &[1e4]).unwrap();
        let r = &run.rows[0];
        let expect = PI / (3.0 * 1e4f64.ln());
        assert!((r.gradient_term - expect).abs() < 1e-12 * expect);
        assert!(r.q < 0.2 && r.below_bound);
    }

    #[test]
    fn refuses_large_p() {
        assert!(matches!(
            concentration_demo(2, 1.0, 3.0, 1.0, &[100.0]),
            Err(Error::Refused(_))
        ));
    }
}
