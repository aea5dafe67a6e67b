use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::Mesh;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightKind {
    FacetDensity,
    Dirac,
    Mixed,
}

/// A nonnegative boundary weight of total mass `m`: piecewise-constant facet
/// densities plus point masses ("atoms") at boundary nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryWeight {
    facet_density: Vec<f64>,
    atoms: Vec<(usize, f64)>,
    mass: f64,
}

impl BoundaryWeight {
    /// General constructor; validates signs and boundary membership and caches the mass.
    pub fn new(mesh: &Mesh, facet_density: Vec<f64>, mut atoms: Vec<(usize, f64)>) -> Result<Self> {
        if facet_density.len() != mesh.n_facets() {
            return Err(Error::invalid(format!(
                "{} facet densities given for {} facets",
                facet_density.len(),
                mesh.n_facets()
            )));
        }
        if facet_density.iter().any(|&d| !(d >= 0.0 && d.is_finite())) {
            return Err(Error::invalid("facet densities must be finite and nonnegative"));
        }
        for &(node, mass) in &atoms {
            if node >= mesh.n_nodes() || !mesh.is_boundary(node) {
                return Err(Error::invalid(format!(
                    "atom at node {node}, which is not a boundary node"
                )));
            }
            if !(mass >= 0.0 && mass.is_finite()) {
                return Err(Error::invalid("atom masses must be finite and nonnegative"));
            }
        }
        atoms.sort_by_key(|a| a.0);
        atoms.dedup_by(|b, a| {
            if a.0 == b.0 {
                a.1 += b.1;
                true
            } else {
                false
            }
        });
        let mass = facet_density
            .iter()
            .zip(mesh.facets())
            .map(|(d, f)| d * f.measure)
            .sum::<f64>()
            + atoms.iter().map(|a| a.1).sum::<f64>();
        Ok(BoundaryWeight {
            facet_density,
            atoms,
            mass,
        })
    }

    /// Constant density `sigma` on every facet.
    pub fn constant(mesh: &Mesh, sigma: f64) -> Result<Self> {
        Self::new(mesh, vec![sigma; mesh.n_facets()], Vec::new())
    }

    pub fn from_facet_densities(mesh: &Mesh, densities: Vec<f64>) -> Result<Self> {
        Self::new(mesh, densities, Vec::new())
    }

    /// Point mass `m` at boundary node `node`.
    pub fn dirac(mesh: &Mesh, node: usize, m: f64) -> Result<Self> {
        Self::new(mesh, vec![0.0; mesh.n_facets()], vec![(node, m)])
    }

    /// Point mass at the boundary node nearest to `x`; returns the snap distance too.
    pub fn dirac_near(mesh: &Mesh, x: [f64; 2], m: f64) -> Result<(Self, usize, f64)> {
        let (node, snap) = mesh.nearest_boundary_node(x);
        Ok((Self::dirac(mesh, node, m)?, node, snap))
    }

    pub fn atoms_only(mesh: &Mesh, atoms: Vec<(usize, f64)>) -> Result<Self> {
        Self::new(mesh, vec![0.0; mesh.n_facets()], atoms)
    }

    /// Random facet densities normalized to total mass `m`.
    pub fn random(mesh: &Mesh, m: f64, rng: &mut impl Rng) -> Result<Self> {
        let raw: Vec<f64> = (0..mesh.n_facets()).map(|_| rng.gen::<f64>()).collect();
        let mass: f64 = raw.iter().zip(mesh.facets()).map(|(d, f)| d * f.measure).sum();
        Self::from_facet_densities(mesh, raw.into_iter().map(|d| d * m / mass).collect())
    }

    /// Mass `m` spread uniformly over the given facets.
    pub fn on_facets(mesh: &Mesh, facets: &[usize], m: f64) -> Result<Self> {
        let len: f64 = facets.iter().map(|&f| mesh.facet(f).measure).sum();
        if !(len > 0.0) {
            return Err(Error::invalid("no facets to carry the mass"));
        }
        let mut d = vec![0.0; mesh.n_facets()];
        for &f in facets {
            d[f] = m / len;
        }
        Self::from_facet_densities(mesh, d)
    }

    pub fn kind(&self) -> WeightKind {
        let has_density = self.facet_density.iter().any(|&d| d > 0.0);
        match (has_density, self.atoms.is_empty()) {
            (_, true) => WeightKind::FacetDensity,
            (false, false) => WeightKind::Dirac,
            (true, false) => WeightKind::Mixed,
        }
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn facet_density(&self) -> &[f64] {
        &self.facet_density
    }

    pub fn atoms(&self) -> &[(usize, f64)] {
        &self.atoms
    }

    /// Total nodal mass per node: atoms plus each facet's mass split equally to its nodes.
    pub fn nodal_masses(&self, mesh: &Mesh) -> Vec<f64> {
        let mut out = vec![0.0; mesh.n_nodes()];
        for f in 0..mesh.n_facets() {
            let ids = mesh.facet_nodes(f);
            let share = self.facet_density[f] * mesh.facet(f).measure / ids.len() as f64;
            for &i in ids {
                out[i] += share;
            }
        }
        for &(i, m) in &self.atoms {
            out[i] += m;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_disk, build_interval};
    use rand::SeedableRng;

    #[test]
    fn masses_and_kinds() {
        let mesh = build_interval(10).unwrap();
        let w = BoundaryWeight::constant(&mesh, 1.0).unwrap();
        assert_eq!(w.mass(), 2.0);
        assert_eq!(w.kind(), WeightKind::FacetDensity);
        let d = BoundaryWeight::dirac(&mesh, 0, 3.0).unwrap();
        assert_eq!(d.kind(), WeightKind::Dirac);
        assert_eq!(d.mass(), 3.0);
        assert!(BoundaryWeight::dirac(&mesh, 5, 1.0).is_err());
        assert!(BoundaryWeight::constant(&mesh, -1.0).is_err());
        let mixed = BoundaryWeight::new(&mesh, vec![1.0, 0.0], vec![(10, 0.5), (10, 0.25)]).unwrap();
        assert_eq!(mixed.kind(), WeightKind::Mixed);
        assert_eq!(mixed.atoms(), &[(10, 0.75)]);
        assert_eq!(mixed.mass(), 1.75);
    }

    #[test]
    fn random_weights_have_prescribed_mass() {
        let mesh = build_disk(0.2).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..5 {
            let w = BoundaryWeight::random(&mesh, 2.5, &mut rng).unwrap();
            assert!((w.mass() - 2.5).abs() < 1e-12 * 2.5);
            let nodal: f64 = w.nodal_masses(&mesh).iter().sum();
            assert!((nodal - 2.5).abs() < 1e-12 * 2.5);
        }
    }
}
