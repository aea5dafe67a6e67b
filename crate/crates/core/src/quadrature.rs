//! Fixed low-order Gauss rules on the reference simplex and facet, in
//! barycentric form `(coordinates, weight fraction)`. Weights sum to one.

const G: f64 = 0.211_324_865_405_187_1; // (1 - 1/sqrt(3)) / 2

/// 2-point Gauss on a segment: exact for cubics.
pub(crate) const SEGMENT: [([f64; 3], f64); 2] = [([1.0 - G, G, 0.0], 0.5), ([G, 1.0 - G, 0.0], 0.5)];

/// 3-point interior rule on a triangle: exact for quadratics.
pub(crate) const TRIANGLE: [([f64; 3], f64); 3] = [
    ([2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0], 1.0 / 3.0),
    ([1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0], 1.0 / 3.0),
    ([1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0], 1.0 / 3.0),
];

/// A 1D facet is a single point.
pub(crate) const POINT: [([f64; 3], f64); 1] = [([1.0, 0.0, 0.0], 1.0)];

pub(crate) fn cell_rule(dim: usize) -> &'static [([f64; 3], f64)] {
    if dim == 1 {
        &SEGMENT
    } else {
        &TRIANGLE
    }
}

pub(crate) fn facet_rule(dim: usize) -> &'static [([f64; 3], f64)] {
    if dim == 1 {
        &POINT
    } else {
        &SEGMENT
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rules_integrate_polynomials() {
        // ∫_0^1 x^3 dx = 1/4 on the segment, with x = second barycentric coordinate
        let s: f64 = SEGMENT.iter().map(|(b, w)| w * b[1].powi(3)).sum();
        assert!((s - 0.25).abs() < 1e-15);
        // mean of x^2 over the reference triangle (x = λ1) is 2 * 1/12 = 1/6
        let t: f64 = TRIANGLE.iter().map(|(b, w)| w * b[1] * b[1]).sum();
        assert!((t - 1.0 / 6.0).abs() < 1e-15);
        let t: f64 = TRIANGLE.iter().map(|(b, w)| w * b[1] * b[2]).sum();
        assert!((t - 1.0 / 12.0).abs() < 1e-15);
    }
}
