//! Simplicial meshes of the working domains.
//!
//! A [`Mesh`] is immutable once built. All derived geometry (cell measures,
//! P1 basis gradients, facet normals, volume, boundary measure, inradius) is
//! computed in [`Mesh::from_parts`], which every builder and the file reader
//! go through, so a mesh read back from disk is bit-identical to the one that
//! was written.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// A boundary facet: a point (1D) or a segment (2D) owned by exactly one cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Facet {
    pub normal: [f64; 2],
    pub measure: f64,
    pub cell: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    dim: usize,
    nodes: Vec<[f64; 2]>,
    cells: Vec<usize>,
    facet_nodes: Vec<usize>,
    facets: Vec<Facet>,
    node_is_boundary: Vec<bool>,
    cell_measure: Vec<f64>,
    cell_grads: Vec<[f64; 2]>,
    volume: f64,
    boundary_measure: f64,
    inradius: Option<f64>,
}

impl Mesh {
    /// Builds a mesh from raw connectivity and validates it.
    ///
    /// `cells` is flat with stride `dim + 1`, `facet_nodes` flat with stride `dim`.
    /// The facet list must be exactly the set of cell faces owned by a single cell.
    pub fn from_parts(dim: usize, nodes: Vec<[f64; 2]>, cells: Vec<usize>, facet_nodes: Vec<usize>) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidMesh(format!("unsupported dimension {dim}")));
        }
        let nv = dim + 1;
        if cells.is_empty() || !cells.len().is_multiple_of(nv) {
            return Err(Error::InvalidMesh("cell list length is not a multiple of dim+1".into()));
        }
        if facet_nodes.is_empty() || !facet_nodes.len().is_multiple_of(dim) {
            return Err(Error::InvalidMesh("facet list length is not a multiple of dim".into()));
        }
        if let Some(&bad) = cells.iter().chain(facet_nodes.iter()).find(|&&i| i >= nodes.len()) {
            return Err(Error::InvalidMesh(format!("node index {bad} out of range")));
        }
        if nodes.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::InvalidMesh("non-finite node coordinate".into()));
        }

        let n_cells = cells.len() / nv;
        let mut cell_measure = Vec::with_capacity(n_cells);
        let mut cell_grads = Vec::with_capacity(cells.len());
        for c in 0..n_cells {
            let ids = &cells[c * nv..(c + 1) * nv];
            let (meas, grads) = simplex_geometry(dim, &nodes, ids)?;
            if !(meas > 0.0) {
                return Err(Error::InvalidMesh(format!("cell {c} is degenerate or inverted")));
            }
            cell_measure.push(meas);
            cell_grads.extend_from_slice(&grads[..nv]);
        }

        // face -> owning cells
        let mut owners: HashMap<Vec<usize>, Vec<usize>> = HashMap::new();
        for c in 0..n_cells {
            let ids = &cells[c * nv..(c + 1) * nv];
            for skip in 0..nv {
                let mut face: Vec<usize> = (0..nv).filter(|&k| k != skip).map(|k| ids[k]).collect();
                face.sort_unstable();
                owners.entry(face).or_default().push(c);
            }
        }
        let exterior = owners.values().filter(|v| v.len() == 1).count();
        if owners.values().any(|v| v.len() > 2) {
            return Err(Error::InvalidMesh("a face is shared by more than two cells".into()));
        }

        let n_facets = facet_nodes.len() / dim;
        if n_facets != exterior {
            return Err(Error::InvalidMesh(format!(
                "{n_facets} boundary facets listed but the cells have {exterior} exterior faces"
            )));
        }
        let mut facets = Vec::with_capacity(n_facets);
        let mut node_is_boundary = vec![false; nodes.len()];
        let mut seen = std::collections::HashSet::new();
        for f in 0..n_facets {
            let fnodes = &facet_nodes[f * dim..(f + 1) * dim];
            let mut key = fnodes.to_vec();
            key.sort_unstable();
            if !seen.insert(key.clone()) {
                return Err(Error::InvalidMesh(format!("facet {f} listed twice")));
            }
            let cell = match owners.get(&key) {
                Some(v) if v.len() == 1 => v[0],
                _ => {
                    return Err(Error::InvalidMesh(format!(
                        "facet {f} does not belong to exactly one cell"
                    )))
                }
            };
            let ids = &cells[cell * nv..(cell + 1) * nv];
            let centroid = centroid(&nodes, ids);
            let (normal, measure) = if dim == 1 {
                let x = nodes[fnodes[0]];
                let s = if x[0] > centroid[0] { 1.0 } else { -1.0 };
                ([s, 0.0], 1.0)
            } else {
                let a = nodes[fnodes[0]];
                let b = nodes[fnodes[1]];
                let t = [b[0] - a[0], b[1] - a[1]];
                let len = t[0].hypot(t[1]);
                if !(len > 0.0) {
                    return Err(Error::InvalidMesh(format!("facet {f} has zero length")));
                }
                let mut nrm = [t[1] / len, -t[0] / len];
                let mid = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
                if nrm[0] * (mid[0] - centroid[0]) + nrm[1] * (mid[1] - centroid[1]) < 0.0 {
                    nrm = [-nrm[0], -nrm[1]];
                }
                (nrm, len)
            };
            for &i in fnodes {
                node_is_boundary[i] = true;
            }
            facets.push(Facet { normal, measure, cell });
        }

        let volume = cell_measure.iter().sum();
        let boundary_measure = facets.iter().map(|f| f.measure).sum();
        let mut mesh = Mesh {
            dim,
            nodes,
            cells,
            facet_nodes,
            facets,
            node_is_boundary,
            cell_measure,
            cell_grads,
            volume,
            boundary_measure,
            inradius: None,
        };
        mesh.inradius = mesh.compute_inradius();
        Ok(mesh)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_cells(&self) -> usize {
        self.cell_measure.len()
    }

    pub fn n_facets(&self) -> usize {
        self.facets.len()
    }

    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> [f64; 2] {
        self.nodes[i]
    }

    pub fn cell(&self, c: usize) -> &[usize] {
        let nv = self.dim + 1;
        &self.cells[c * nv..(c + 1) * nv]
    }

    pub fn cell_measure(&self, c: usize) -> f64 {
        self.cell_measure[c]
    }

    /// Constant gradients of the local P1 basis functions of cell `c`.
    pub fn cell_basis_grads(&self, c: usize) -> &[[f64; 2]] {
        let nv = self.dim + 1;
        &self.cell_grads[c * nv..(c + 1) * nv]
    }

    pub fn facet(&self, f: usize) -> &Facet {
        &self.facets[f]
    }

    pub fn facets(&self) -> &[Facet] {
        &self.facets
    }

    pub fn facet_nodes(&self, f: usize) -> &[usize] {
        &self.facet_nodes[f * self.dim..(f + 1) * self.dim]
    }

    pub fn is_boundary(&self, i: usize) -> bool {
        self.node_is_boundary[i]
    }

    pub fn node_is_boundary(&self) -> &[bool] {
        &self.node_is_boundary
    }

    /// Boundary node indices in increasing order.
    pub fn boundary_nodes(&self) -> Vec<usize> {
        (0..self.n_nodes()).filter(|&i| self.node_is_boundary[i]).collect()
    }

    pub fn volume(&self) -> f64 {
        self.volume
    }

    pub fn boundary_measure(&self) -> f64 {
        self.boundary_measure
    }

    /// Inradius, set only for convex domains.
    pub fn inradius(&self) -> Option<f64> {
        self.inradius
    }

    pub fn diameter(&self) -> f64 {
        let b = self.boundary_nodes();
        let mut d: f64 = 0.0;
        for (k, &i) in b.iter().enumerate() {
            for &j in &b[k + 1..] {
                d = d.max(dist(self.nodes[i], self.nodes[j]));
            }
        }
        d
    }

    /// Boundary node closest to `x`, with the snap distance.
    pub fn nearest_boundary_node(&self, x: [f64; 2]) -> (usize, f64) {
        let mut best = (usize::MAX, f64::INFINITY);
        for i in 0..self.n_nodes() {
            if self.node_is_boundary[i] {
                let d = dist(self.nodes[i], x);
                if d < best.1 {
                    best = (i, d);
                }
            }
        }
        best
    }

    /// Facets incident to each boundary node (empty for interior nodes).
    pub fn node_facets(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n_nodes()];
        for f in 0..self.n_facets() {
            for &i in self.facet_nodes(f) {
                out[i].push(f);
            }
        }
        out
    }

    /// Sorted node adjacency (including the node itself), from cell connectivity.
    pub(crate) fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj: Vec<Vec<usize>> = (0..self.n_nodes()).map(|i| vec![i]).collect();
        for c in 0..self.n_cells() {
            let ids = self.cell(c);
            for &a in ids {
                for &b in ids {
                    if a != b {
                        adj[a].push(b);
                    }
                }
            }
        }
        for row in &mut adj {
            row.sort_unstable();
            row.dedup();
        }
        adj
    }

    fn compute_inradius(&self) -> Option<f64> {
        if self.dim == 1 {
            let (lo, hi) = self
                .nodes
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| {
                    (lo.min(x[0]), hi.max(x[0]))
                });
            // connected interval only
            return ((hi - lo - self.volume).abs() <= 1e-12 * (hi - lo)).then_some(0.5 * (hi - lo));
        }
        let half_planes: Vec<([f64; 2], f64)> = (0..self.n_facets())
            .map(|f| {
                let n = self.facets[f].normal;
                let a = self.nodes[self.facet_nodes(f)[0]];
                (n, n[0] * a[0] + n[1] * a[1])
            })
            .collect();
        let scale = self.diameter().max(f64::MIN_POSITIVE);
        for &(n, d) in &half_planes {
            for i in self.boundary_nodes() {
                let x = self.nodes[i];
                if n[0] * x[0] + n[1] * x[1] - d > 1e-10 * scale {
                    return None;
                }
            }
        }
        Some(convex_inradius(
            &half_planes,
            &self.boundary_nodes().iter().map(|&i| self.nodes[i]).collect::<Vec<_>>(),
        ))
    }
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn centroid(nodes: &[[f64; 2]], ids: &[usize]) -> [f64; 2] {
    let k = ids.len() as f64;
    let mut c = [0.0; 2];
    for &i in ids {
        c[0] += nodes[i][0] / k;
        c[1] += nodes[i][1] / k;
    }
    c
}

/// Measure and basis-function gradients of a simplex. Measure is signed in 2D
/// (negative for clockwise cells).
fn simplex_geometry(dim: usize, nodes: &[[f64; 2]], ids: &[usize]) -> Result<(f64, [[f64; 2]; 3])> {
    if dim == 1 {
        let (a, b) = (nodes[ids[0]][0], nodes[ids[1]][0]);
        let len = b - a;
        if len == 0.0 {
            return Ok((0.0, [[0.0; 2]; 3]));
        }
        return Ok((len.abs(), [[-1.0 / len, 0.0], [1.0 / len, 0.0], [0.0; 2]]));
    }
    let [x0, y0] = nodes[ids[0]];
    let [x1, y1] = nodes[ids[1]];
    let [x2, y2] = nodes[ids[2]];
    let det = (x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0);
    let area = 0.5 * det;
    if det <= 0.0 {
        return Ok((area, [[0.0; 2]; 3]));
    }
    let grads = [
        [(y1 - y2) / det, (x2 - x1) / det],
        [(y2 - y0) / det, (x0 - x2) / det],
        [(y0 - y1) / det, (x1 - x0) / det],
    ];
    Ok((area, grads))
}

/// Largest inscribed radius of the convex region `n·x <= d` (all half-planes),
/// by bisection on the radius with convex clipping of the offset region.
fn convex_inradius(half_planes: &[([f64; 2], f64)], boundary_pts: &[[f64; 2]]) -> f64 {
    let (mut lo_x, mut lo_y, mut hi_x, mut hi_y) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in boundary_pts {
        lo_x = lo_x.min(p[0]);
        lo_y = lo_y.min(p[1]);
        hi_x = hi_x.max(p[0]);
        hi_y = hi_y.max(p[1]);
    }
    let feasible = |r: f64| -> bool {
        let mut poly = vec![[lo_x, lo_y], [hi_x, lo_y], [hi_x, hi_y], [lo_x, hi_y]];
        for &(n, d) in half_planes {
            poly = clip(&poly, n, d - r);
            if poly.is_empty() {
                return false;
            }
        }
        true
    };
    let mut lo = 0.0;
    let mut hi = 0.5 * (hi_x - lo_x).min(hi_y - lo_y) * (1.0 + 1e-9);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if feasible(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Sutherland-Hodgman clip of a convex polygon against `n·x <= d`.
fn clip(poly: &[[f64; 2]], n: [f64; 2], d: f64) -> Vec<[f64; 2]> {
    let mut out = Vec::with_capacity(poly.len() + 1);
    let side = |p: [f64; 2]| n[0] * p[0] + n[1] * p[1] - d;
    for k in 0..poly.len() {
        let a = poly[k];
        let b = poly[(k + 1) % poly.len()];
        let (sa, sb) = (side(a), side(b));
        if sa <= 0.0 {
            out.push(a);
        }
        if (sa < 0.0 && sb > 0.0) || (sa > 0.0 && sb < 0.0) {
            let t = sa / (sa - sb);
            out.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
        }
    }
    out
}

/// Uniform mesh of (0, 1) with `n_cells` cells.
pub fn build_interval(n_cells: usize) -> Result<Mesh> {
    if n_cells < 2 {
        return Err(Error::invalid(format!(
            "interval needs at least 2 cells, got {n_cells}"
        )));
    }
    let nodes = (0..=n_cells).map(|i| [i as f64 / n_cells as f64, 0.0]).collect();
    let cells = (0..n_cells).flat_map(|i| [i, i + 1]).collect();
    Mesh::from_parts(1, nodes, cells, vec![0, n_cells])
}

/// Unit disk triangulated by concentric rings: ring `k` of `K = ceil(1/h)`
/// carries `6k` equally spaced nodes, and each annular strip is closed by an
/// angular merge of the two rings.
pub fn build_disk(h: f64) -> Result<Mesh> {
    if !(h > 0.0 && h < 1.0) {
        return Err(Error::invalid(format!("disk mesh size must lie in (0,1), got {h}")));
    }
    let rings = (1.0 / h).ceil() as usize;
    let mut nodes = vec![[0.0, 0.0]];
    let mut ring_start = vec![0usize];
    for k in 1..=rings {
        ring_start.push(nodes.len());
        let r = k as f64 / rings as f64;
        let count = 6 * k;
        for j in 0..count {
            let t = 2.0 * PI * j as f64 / count as f64;
            nodes.push([r * t.cos(), r * t.sin()]);
        }
    }
    let mut cells = Vec::new();
    let mut push_tri = |a: usize, b: usize, c: usize, nodes: &[[f64; 2]]| {
        let [x0, y0] = nodes[a];
        let [x1, y1] = nodes[b];
        let [x2, y2] = nodes[c];
        if (x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0) > 0.0 {
            cells.extend_from_slice(&[a, b, c]);
        } else {
            cells.extend_from_slice(&[a, c, b]);
        }
    };
    for j in 0..6 {
        push_tri(0, 1 + j, 1 + (j + 1) % 6, &nodes);
    }
    for k in 2..=rings {
        let (ni, no) = (6 * (k - 1), 6 * k);
        let inner = |i: usize| ring_start[k - 1] + i % ni;
        let outer = |j: usize| ring_start[k] + j % no;
        let (mut i, mut j) = (0, 0);
        while i < ni || j < no {
            // compare angles 2π(j+1)/no and 2π(i+1)/ni exactly
            let take_outer = j < no && (i == ni || (j + 1) * ni <= (i + 1) * no);
            if take_outer {
                push_tri(inner(i), outer(j), outer(j + 1), &nodes);
                j += 1;
            } else {
                push_tri(inner(i), outer(j), inner(i + 1), &nodes);
                i += 1;
            }
        }
    }
    let start = ring_start[rings];
    let count = 6 * rings;
    let facets = (0..count).flat_map(|j| [start + j, start + (j + 1) % count]).collect();
    Mesh::from_parts(2, nodes, cells, facets)
}

/// Unit square `[0,1]^2` with a criss-cross triangulation: `ceil(1/h)` grid
/// cells per side, each split into four triangles through its centre.
pub fn build_square(h: f64) -> Result<Mesh> {
    if !(h > 0.0 && h <= 1.0) {
        return Err(Error::invalid(format!("square mesh size must lie in (0,1], got {h}")));
    }
    let n = (1.0 / h).ceil() as usize;
    let grid = |i: usize, j: usize| j * (n + 1) + i;
    let mut nodes = Vec::with_capacity((n + 1) * (n + 1) + n * n);
    for j in 0..=n {
        for i in 0..=n {
            nodes.push([i as f64 / n as f64, j as f64 / n as f64]);
        }
    }
    let centre0 = nodes.len();
    for j in 0..n {
        for i in 0..n {
            nodes.push([(i as f64 + 0.5) / n as f64, (j as f64 + 0.5) / n as f64]);
        }
    }
    let mut cells = Vec::with_capacity(12 * n * n);
    for j in 0..n {
        for i in 0..n {
            let c = centre0 + j * n + i;
            let (ll, lr, ur, ul) = (grid(i, j), grid(i + 1, j), grid(i + 1, j + 1), grid(i, j + 1));
            cells.extend_from_slice(&[ll, lr, c, lr, ur, c, ur, ul, c, ul, ll, c]);
        }
    }
    let mut facets = Vec::with_capacity(8 * n);
    for i in 0..n {
        facets.extend_from_slice(&[grid(i, 0), grid(i + 1, 0)]);
    }
    for j in 0..n {
        facets.extend_from_slice(&[grid(n, j), grid(n, j + 1)]);
    }
    for i in (0..n).rev() {
        facets.extend_from_slice(&[grid(i + 1, n), grid(i, n)]);
    }
    for j in (0..n).rev() {
        facets.extend_from_slice(&[grid(0, j + 1), grid(0, j)]);
    }
    Mesh::from_parts(2, nodes, cells, facets)
}

/// Simple counter-clockwise polygon: ear-clipping triangulation followed by
/// uniform refinement until every edge is at most `h` long.
pub fn build_polygon(vertices: &[[f64; 2]], h: f64) -> Result<Mesh> {
    let n = vertices.len();
    if n < 3 {
        return Err(Error::invalid("polygon needs at least three vertices"));
    }
    if !(h > 0.0) {
        return Err(Error::invalid("mesh size must be positive"));
    }
    let signed_area: f64 = (0..n)
        .map(|k| {
            let a = vertices[k];
            let b = vertices[(k + 1) % n];
            0.5 * (a[0] * b[1] - b[0] * a[1])
        })
        .sum();
    if !(signed_area > 0.0) {
        return Err(Error::invalid("polygon must be counter-clockwise with positive area"));
    }
    for a in 0..n {
        for b in a + 1..n {
            let adjacent = b == a + 1 || (a == 0 && b == n - 1);
            if !adjacent && segments_intersect(vertices[a], vertices[(a + 1) % n], vertices[b], vertices[(b + 1) % n]) {
                return Err(Error::invalid(format!("polygon edges {a} and {b} intersect")));
            }
        }
    }
    let cells = ear_clip(vertices)?;
    let facets = (0..n).flat_map(|k| [k, (k + 1) % n]).collect();
    let mut mesh = Mesh::from_parts(2, vertices.to_vec(), cells, facets)?;
    while max_edge(&mesh) > h * (1.0 + 1e-12) {
        mesh = refine(&mesh);
    }
    Ok(mesh)
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn segments_intersect(p1: [f64; 2], p2: [f64; 2], q1: [f64; 2], q2: [f64; 2]) -> bool {
    let d1 = cross(q1, q2, p1);
    let d2 = cross(q1, q2, p2);
    let d3 = cross(p1, p2, q1);
    let d4 = cross(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    let on = |a: [f64; 2], b: [f64; 2], p: [f64; 2], d: f64| {
        d == 0.0 && p[0] >= a[0].min(b[0]) && p[0] <= a[0].max(b[0]) && p[1] >= a[1].min(b[1]) && p[1] <= a[1].max(b[1])
    };
    on(q1, q2, p1, d1) || on(q1, q2, p2, d2) || on(p1, p2, q1, d3) || on(p1, p2, q2, d4)
}

fn ear_clip(v: &[[f64; 2]]) -> Result<Vec<usize>> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    let mut cells = Vec::with_capacity(3 * (v.len() - 2));
    while idx.len() > 3 {
        let m = idx.len();
        let ear = (0..m).find(|&k| {
            let (a, b, c) = (idx[(k + m - 1) % m], idx[k], idx[(k + 1) % m]);
            if cross(v[a], v[b], v[c]) <= 0.0 {
                return false;
            }
            idx.iter().all(|&o| {
                o == a
                    || o == b
                    || o == c
                    || !(cross(v[a], v[b], v[o]) >= 0.0
                        && cross(v[b], v[c], v[o]) >= 0.0
                        && cross(v[c], v[a], v[o]) >= 0.0)
            })
        });
        let k = ear.ok_or_else(|| Error::invalid("polygon could not be triangulated"))?;
        cells.extend_from_slice(&[idx[(k + m - 1) % m], idx[k], idx[(k + 1) % m]]);
        idx.remove(k);
    }
    if cross(v[idx[0]], v[idx[1]], v[idx[2]]) <= 0.0 {
        return Err(Error::invalid("polygon has collinear or degenerate vertices"));
    }
    cells.extend_from_slice(&idx);
    Ok(cells)
}

fn max_edge(mesh: &Mesh) -> f64 {
    let mut h: f64 = 0.0;
    for c in 0..mesh.n_cells() {
        let ids = mesh.cell(c);
        for a in 0..ids.len() {
            for b in a + 1..ids.len() {
                h = h.max(dist(mesh.node(ids[a]), mesh.node(ids[b])));
            }
        }
    }
    h
}

/// Uniform refinement: every cell split at its edge midpoints (2 children in
/// 1D, 4 in 2D). Boundary facets are split consistently; new nodes are placed
/// on the straight facets, so polygonal volume and boundary length are kept.
pub fn refine(mesh: &Mesh) -> Mesh {
    let mut nodes = mesh.nodes.clone();
    let mut mid: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut midpoint = |a: usize, b: usize, nodes: &mut Vec<[f64; 2]>| -> usize {
        let key = (a.min(b), a.max(b));
        *mid.entry(key).or_insert_with(|| {
            let (p, q) = (nodes[a], nodes[b]);
            nodes.push([0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]);
            nodes.len() - 1
        })
    };
    let mut cells = Vec::with_capacity(mesh.cells.len() * (1 << mesh.dim));
    for c in 0..mesh.n_cells() {
        let ids = mesh.cell(c);
        if mesh.dim == 1 {
            let m = midpoint(ids[0], ids[1], &mut nodes);
            cells.extend_from_slice(&[ids[0], m, m, ids[1]]);
        } else {
            let (a, b, cc) = (ids[0], ids[1], ids[2]);
            let ab = midpoint(a, b, &mut nodes);
            let bc = midpoint(b, cc, &mut nodes);
            let ca = midpoint(cc, a, &mut nodes);
            cells.extend_from_slice(&[a, ab, ca, ab, b, bc, ca, bc, cc, ab, bc, ca]);
        }
    }
    let facets = if mesh.dim == 1 {
        mesh.facet_nodes.clone()
    } else {
        let mut f = Vec::with_capacity(2 * mesh.facet_nodes.len());
        for k in 0..mesh.n_facets() {
            let ids = mesh.facet_nodes(k);
            let m = mid[&(ids[0].min(ids[1]), ids[0].max(ids[1]))];
            f.extend_from_slice(&[ids[0], m, m, ids[1]]);
        }
        f
    };
    let mut refined = Mesh::from_parts(mesh.dim, nodes, cells, facets).expect("refinement of a valid mesh is valid");
    if mesh.dim == 1 {
        // keep node order monotone in x so the interval stays a plain sequence
        refined = reorder_interval(&refined);
    }
    refined
}

fn reorder_interval(mesh: &Mesh) -> Mesh {
    let mut order: Vec<usize> = (0..mesh.n_nodes()).collect();
    order.sort_by(|&a, &b| mesh.nodes[a][0].total_cmp(&mesh.nodes[b][0]));
    let mut new_index = vec![0; order.len()];
    for (k, &old) in order.iter().enumerate() {
        new_index[old] = k;
    }
    let nodes = order.iter().map(|&o| mesh.nodes[o]).collect();
    let mut cells: Vec<[usize; 2]> = mesh
        .cells
        .chunks(2)
        .map(|c| {
            let (a, b) = (new_index[c[0]], new_index[c[1]]);
            [a.min(b), a.max(b)]
        })
        .collect();
    cells.sort_unstable();
    let facets = mesh.facet_nodes.iter().map(|&i| new_index[i]).collect();
    Mesh::from_parts(1, nodes, cells.concat(), facets).expect("reordering keeps validity")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn interval_basic() {
        let m = build_interval(4).unwrap();
        let xs: Vec<f64> = m.nodes().iter().map(|x| x[0]).collect();
        assert_eq!(xs, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(m.boundary_nodes(), vec![0, 4]);
        assert_eq!(m.facet(0).normal, [-1.0, 0.0]);
        assert_eq!(m.facet(1).normal, [1.0, 0.0]);
        let m = build_interval(200).unwrap();
        assert_eq!(m.volume(), 1.0);
        assert_eq!(m.boundary_measure(), 2.0);
        assert_eq!(m.inradius(), Some(0.5));
        assert!(build_interval(1).is_err());
    }

    #[test]
    fn disk_geometry() {
        let m = build_disk(0.1).unwrap();
        assert!((m.volume() - PI).abs() < 0.01 * PI);
        assert!((m.inradius().unwrap() - 1.0).abs() < 0.02);
        let m = build_disk(0.05).unwrap();
        assert!((m.boundary_measure() - 2.0 * PI).abs() < 0.005 * 2.0 * PI);
        assert_eq!(m.n_cells(), 6 * 20 * 20);
        assert!(build_disk(0.0).is_err());
        assert!(build_disk(1.0).is_err());
    }

    #[test]
    fn square_geometry() {
        let m = build_square(0.125).unwrap();
        assert!((m.volume() - 1.0).abs() < 1e-12);
        assert!((m.boundary_measure() - 4.0).abs() < 1e-12);
        assert!((m.inradius().unwrap() - 0.5).abs() < 1e-9);
    }

    #[test]
    fn polygon_convexity_and_errors() {
        let l_shape = [[0.0, 0.0], [2.0, 0.0], [2.0, 1.0], [1.0, 1.0], [1.0, 2.0], [0.0, 2.0]];
        let m = build_polygon(&l_shape, 0.5).unwrap();
        assert!(m.inradius().is_none());
        assert!((m.volume() - 3.0).abs() < 1e-12);
        assert!((m.boundary_measure() - 8.0).abs() < 1e-12);

        let tri = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let m = build_polygon(&tri, 0.3).unwrap();
        let r = 1.0 / (2.0 + 2f64.sqrt());
        assert!((m.inradius().unwrap() - r).abs() < 1e-9);

        let bow = [[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]];
        assert!(build_polygon(&bow, 0.5).is_err());
        let cw = [[0.0, 0.0], [0.0, 1.0], [1.0, 0.0]];
        assert!(build_polygon(&cw, 0.5).is_err());
    }

    #[test]
    fn refinement_counts_and_measures() {
        let m = refine(&build_interval(4).unwrap());
        assert_eq!(m.n_cells(), 8);
        let xs: Vec<f64> = m.nodes().iter().map(|x| x[0]).collect();
        assert_eq!(xs, (0..=8).map(|i| i as f64 / 8.0).collect::<Vec<_>>());

        let d = build_disk(0.25).unwrap();
        let r = refine(&d);
        assert_eq!(r.n_cells(), 4 * d.n_cells());
        assert!(close(r.volume(), d.volume(), 1e-12));
        assert!(close(r.boundary_measure(), d.boundary_measure(), 1e-12));

        let s = build_square(0.25).unwrap();
        let r = refine(&s);
        assert!((r.volume() - 1.0).abs() < 1e-12);
        let flags_ok = (0..r.n_nodes()).all(|i| {
            let [x, y] = r.node(i);
            let on = x == 0.0 || y == 0.0 || x == 1.0 || y == 1.0;
            on == r.is_boundary(i)
        });
        assert!(flags_ok);
    }

    #[test]
    fn normals_point_outward_and_measures_sum() {
        for m in [
            build_disk(0.2).unwrap(),
            build_square(0.2).unwrap(),
            build_interval(7).unwrap(),
        ] {
            let cell_sum: f64 = (0..m.n_cells()).map(|c| m.cell_measure(c)).sum();
            assert!(close(cell_sum, m.volume(), 1e-10));
            for f in 0..m.n_facets() {
                let fc = m.facet(f);
                assert!(((fc.normal[0].hypot(fc.normal[1])) - 1.0).abs() < 1e-12);
                let cen = centroid(&m.nodes, m.cell(fc.cell));
                let ids = m.facet_nodes(f);
                let mut mid = [0.0; 2];
                for &i in ids {
                    mid[0] += m.node(i)[0] / ids.len() as f64;
                    mid[1] += m.node(i)[1] / ids.len() as f64;
                }
                assert!(fc.normal[0] * (mid[0] - cen[0]) + fc.normal[1] * (mid[1] - cen[1]) > 0.0);
            }
        }
    }

    #[test]
    fn rejects_inconsistent_parts() {
        // facet list missing one exterior face
        let nodes = vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        assert!(Mesh::from_parts(2, nodes.clone(), vec![0, 1, 2], vec![0, 1, 1, 2]).is_err());
        // inverted cell
        assert!(Mesh::from_parts(2, nodes, vec![0, 2, 1], vec![0, 1, 1, 2, 2, 0]).is_err());
    }
}
