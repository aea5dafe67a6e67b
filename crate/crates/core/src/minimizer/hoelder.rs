//! Empirical Hölder exponent of `x ↦ λ₁(x;Ω)` along the boundary, to be
//! compared with `1 − n/p`.

use serde::{Deserialize, Serialize};

use super::PointScan;
use crate::mesh::Mesh;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoelderReport {
    pub p: f64,
    /// `1 − n/p`.
    pub exponent: f64,
    pub pairs_used: usize,
    /// Least-squares slope of `log|Δλ₁|` against `log|x − y|`.
    pub fitted_slope: Option<f64>,
    /// `max |Δλ₁| / |x − y|^{1−n/p}` over the pairs used.
    pub max_ratio: Option<f64>,
    /// Fewer than two usable pairs: nothing to fit.
    pub degenerate: bool,
}

/// Pairs of boundary nodes closer than a quarter of the diameter whose values
/// differ by more than `1e-9·max λ₁`; pairs with equal values carry no
/// information about the exponent.
pub fn hoelder_check(mesh: &Mesh, scan: &PointScan) -> HoelderReport {
    let n = mesh.dim() as f64;
    let exponent = 1.0 - n / scan.p;
    let vals: Vec<([f64; 2], f64)> = scan
        .entries
        .iter()
        .filter_map(|e| e.lambda1.map(|v| (e.x, v)))
        .collect();
    let vmax = vals.iter().map(|v| v.1.abs()).fold(0.0, f64::max);
    let noise = 1e-9 * vmax;
    let reach = mesh.diameter() / 4.0;
    let mut pts = Vec::new();
    let mut max_ratio: Option<f64> = None;
    for (a, (xa, va)) in vals.iter().enumerate() {
        for (xb, vb) in &vals[a + 1..] {
            let d = ((xa[0] - xb[0]).powi(2) + (xa[1] - xb[1]).powi(2)).sqrt();
            let dv = (va - vb).abs();
            if d > 0.0 && d < reach && dv > noise {
                pts.push((d.ln(), dv.ln()));
                let r = dv / d.powf(exponent);
                max_ratio = Some(max_ratio.map_or(r, |m| m.max(r)));
            }
        }
    }
    let degenerate = pts.len() < 2;
    let fitted_slope = if degenerate {
        None
    } else {
        let k = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        (sxx > 0.0).then(|| sxy / sxx)
    };
    HoelderReport {
        p: scan.p,
        exponent,
        pairs_used: pts.len(),
        fitted_slope,
        max_ratio,
        degenerate,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_interval;
    use crate::minimizer::scan_point_eigen;
    use crate::params::SolverParams;

    #[test]
    fn interval_is_degenerate() {
        let mesh = build_interval(100).unwrap();
        let scan = scan_point_eigen(&mesh, &SolverParams::new(2.0)).unwrap();
        let r = hoelder_check(&mesh, &scan);
        assert!(r.degenerate && r.fitted_slope.is_none());
        assert!((r.exponent - 0.5).abs() < 1e-15);
    }
}
