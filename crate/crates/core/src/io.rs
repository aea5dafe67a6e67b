//! Plain-text formats for meshes, boundary weights and nodal fields.
//!
//! Floats are written with Rust's shortest round-trip formatting, so every
//! file reads back to bit-identical data. `#` starts a comment line.
//!
//! ```text
//! pmesh 1 <dim>
//! nodes <N>
//! <x> [<y>]            N lines
//! cells <C>
//! <i> <j> [<k>]        C lines, 0-based
//! bfacets <B>
//! <i> [<j>]            B lines
//! ```
//!
//! ```text
//! bw 1 <mass>
//! facet <index> <density>
//! atom <node> <mass>
//! ```

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::field::NodalField;
use crate::mesh::Mesh;
use crate::weight::BoundaryWeight;

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn new(s: &'a str) -> Self {
        Lines {
            inner: s.lines().enumerate(),
            last: 0,
        }
    }

    /// Next non-empty, non-comment line split on whitespace, with its 1-based number.
    fn next_tokens(&mut self) -> Option<(usize, Vec<&'a str>)> {
        for (i, l) in self.inner.by_ref() {
            let t = l.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            self.last = i + 1;
            return Some((i + 1, t.split_whitespace().collect()));
        }
        None
    }

    fn expect(&mut self, what: &str) -> Result<(usize, Vec<&'a str>)> {
        self.next_tokens()
            .ok_or_else(|| Error::parse(self.last + 1, format!("unexpected end of input, expected {what}")))
    }

    fn section(&mut self, name: &str) -> Result<usize> {
        let (ln, t) = self.expect(name)?;
        if t.len() != 2 || t[0] != name {
            return Err(Error::parse(ln, format!("expected `{name} <count>`")));
        }
        num(ln, t[1])
    }
}

fn num<T: std::str::FromStr>(line: usize, tok: &str) -> Result<T> {
    tok.parse()
        .map_err(|_| Error::parse(line, format!("cannot parse `{tok}`")))
}

pub fn write_mesh(mesh: &Mesh) -> String {
    let dim = mesh.dim();
    let mut s = format!("pmesh 1 {dim}\nnodes {}\n", mesh.n_nodes());
    for x in mesh.nodes() {
        if dim == 1 {
            let _ = writeln!(s, "{}", x[0]);
        } else {
            let _ = writeln!(s, "{} {}", x[0], x[1]);
        }
    }
    let _ = writeln!(s, "cells {}", mesh.n_cells());
    for c in 0..mesh.n_cells() {
        let ids: Vec<String> = mesh.cell(c).iter().map(|i| i.to_string()).collect();
        let _ = writeln!(s, "{}", ids.join(" "));
    }
    let _ = writeln!(s, "bfacets {}", mesh.n_facets());
    for f in 0..mesh.n_facets() {
        let ids: Vec<String> = mesh.facet_nodes(f).iter().map(|i| i.to_string()).collect();
        let _ = writeln!(s, "{}", ids.join(" "));
    }
    s
}

pub fn read_mesh(text: &str) -> Result<Mesh> {
    let mut lines = Lines::new(text);
    let (ln, head) = lines.expect("header")?;
    if head.len() != 3 || head[0] != "pmesh" {
        return Err(Error::parse(ln, "expected `pmesh 1 <dim>`"));
    }
    if head[1] != "1" {
        return Err(Error::parse(ln, format!("unsupported mesh format version {}", head[1])));
    }
    let dim: usize = num(ln, head[2])?;
    if dim != 1 && dim != 2 {
        return Err(Error::parse(ln, format!("unsupported dimension {dim}")));
    }
    let n = lines.section("nodes")?;
    let mut nodes = Vec::with_capacity(n);
    for _ in 0..n {
        let (ln, t) = lines.expect("node coordinates")?;
        if t.len() != dim {
            return Err(Error::parse(ln, format!("expected {dim} coordinates")));
        }
        let x: f64 = num(ln, t[0])?;
        let y: f64 = if dim == 2 { num(ln, t[1])? } else { 0.0 };
        nodes.push([x, y]);
    }
    let read_ids = |lines: &mut Lines, count: usize, width: usize, what: &str| -> Result<Vec<usize>> {
        let mut out = Vec::with_capacity(count * width);
        for _ in 0..count {
            let (ln, t) = lines.expect(what)?;
            if t.len() != width {
                return Err(Error::parse(ln, format!("expected {width} node indices")));
            }
            for tok in t {
                out.push(num(ln, tok)?);
            }
        }
        Ok(out)
    };
    let c = lines.section("cells")?;
    let cells = read_ids(&mut lines, c, dim + 1, "cell")?;
    let b = lines.section("bfacets")?;
    let facets = read_ids(&mut lines, b, dim, "boundary facet")?;
    if let Some((ln, _)) = lines.next_tokens() {
        return Err(Error::parse(ln, "trailing content after boundary facets"));
    }
    Mesh::from_parts(dim, nodes, cells, facets)
}

pub fn write_weight(w: &BoundaryWeight) -> String {
    let mut s = format!("bw 1 {}\n", w.mass());
    for (i, d) in w.facet_density().iter().enumerate() {
        if *d != 0.0 {
            let _ = writeln!(s, "facet {i} {d}");
        }
    }
    for (node, m) in w.atoms() {
        let _ = writeln!(s, "atom {node} {m}");
    }
    s
}

pub fn read_weight(mesh: &Mesh, text: &str) -> Result<BoundaryWeight> {
    let mut lines = Lines::new(text);
    let (ln, head) = lines.expect("header")?;
    if head.len() != 3 || head[0] != "bw" || head[1] != "1" {
        return Err(Error::parse(ln, "expected `bw 1 <mass>`"));
    }
    let declared: f64 = num(ln, head[2])?;
    let mut density = vec![0.0; mesh.n_facets()];
    let mut atoms = Vec::new();
    while let Some((ln, t)) = lines.next_tokens() {
        if t.len() != 3 {
            return Err(Error::parse(
                ln,
                "expected `facet <i> <density>` or `atom <node> <mass>`",
            ));
        }
        let i: usize = num(ln, t[1])?;
        let v: f64 = num(ln, t[2])?;
        match t[0] {
            "facet" => {
                let slot = density
                    .get_mut(i)
                    .ok_or_else(|| Error::parse(ln, format!("facet {i} out of range")))?;
                *slot = v;
            }
            "atom" => atoms.push((i, v)),
            other => return Err(Error::parse(ln, format!("unknown record `{other}`"))),
        }
    }
    let w = BoundaryWeight::new(mesh, density, atoms)?;
    if (w.mass() - declared).abs() > 1e-12 * declared.abs().max(1.0) {
        return Err(Error::invalid(format!(
            "declared mass {declared} but the records sum to {}",
            w.mass()
        )));
    }
    Ok(w)
}

/// CSV `node,x[,y],value`.
pub fn write_field(mesh: &Mesh, field: &NodalField) -> String {
    let mut s = if mesh.dim() == 1 {
        String::from("node,x,value\n")
    } else {
        String::from("node,x,y,value\n")
    };
    for (i, (x, v)) in mesh.nodes().iter().zip(field.values()).enumerate() {
        if mesh.dim() == 1 {
            let _ = writeln!(s, "{i},{},{v}", x[0]);
        } else {
            let _ = writeln!(s, "{i},{},{},{v}", x[0], x[1]);
        }
    }
    s
}

/// Reads the CSV written by [`write_field`]; rows may come in any order.
pub fn read_field(mesh: &Mesh, text: &str) -> Result<NodalField> {
    let mut vals = vec![None; mesh.n_nodes()];
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if k == 0 || line.is_empty() || line.starts_with('#') {
            continue;
        }
        let t: Vec<&str> = line.split(',').map(str::trim).collect();
        if t.len() != mesh.dim() + 2 {
            return Err(Error::parse(k + 1, format!("expected {} columns", mesh.dim() + 2)));
        }
        let i: usize = num(k + 1, t[0])?;
        let slot = vals
            .get_mut(i)
            .ok_or_else(|| Error::parse(k + 1, format!("node {i} out of range")))?;
        *slot = Some(num::<f64>(k + 1, t[t.len() - 1])?);
    }
    let values: Option<Vec<f64>> = vals.into_iter().collect();
    NodalField::new(
        mesh,
        values.ok_or_else(|| Error::invalid("field file misses some nodes"))?,
    )
}

pub fn load_mesh(path: &Path) -> Result<Mesh> {
    read_mesh(&std::fs::read_to_string(path)?)
}

pub fn save_mesh(path: &Path, mesh: &Mesh) -> Result<()> {
    Ok(std::fs::write(path, write_mesh(mesh))?)
}

pub fn load_weight(path: &Path, mesh: &Mesh) -> Result<BoundaryWeight> {
    read_weight(mesh, &std::fs::read_to_string(path)?)
}

pub fn save_weight(path: &Path, w: &BoundaryWeight) -> Result<()> {
    Ok(std::fs::write(path, write_weight(w))?)
}

pub fn load_field(path: &Path, mesh: &Mesh) -> Result<NodalField> {
    read_field(mesh, &std::fs::read_to_string(path)?)
}

pub fn save_field(path: &Path, mesh: &Mesh, field: &NodalField) -> Result<()> {
    Ok(std::fs::write(path, write_field(mesh, field))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_disk, build_interval};

    #[test]
    fn mesh_round_trip_is_exact() {
        for mesh in [build_interval(7).unwrap(), build_disk(0.3).unwrap()] {
            let back = read_mesh(&write_mesh(&mesh)).unwrap();
            assert_eq!(back, mesh);
            assert_eq!(write_mesh(&back), write_mesh(&mesh));
        }
    }

    #[test]
    fn weight_and_field_round_trip() {
        let mesh = build_disk(0.4).unwrap();
        let b = mesh.boundary_nodes()[3];
        let mut d = vec![0.0; mesh.n_facets()];
        d[1] = 0.1 + 0.2;
        let w = BoundaryWeight::new(&mesh, d, vec![(b, 1.0 / 3.0)]).unwrap();
        assert_eq!(read_weight(&mesh, &write_weight(&w)).unwrap(), w);
        let f = NodalField::from_fn(&mesh, |x| (x[0] * 7.1).sin() / 3.0);
        assert_eq!(read_field(&mesh, &write_field(&mesh, &f)).unwrap(), f);
    }

    #[test]
    fn malformed_inputs() {
        assert!(matches!(read_mesh("pmesh 2 1\n"), Err(Error::Parse { line: 1, .. })));
        let bad = "pmesh 1 1\nnodes 2\n0\n1\ncells 1\n0 1\nbfacets 2\n0\n";
        assert!(matches!(read_mesh(bad), Err(Error::Parse { .. })));
        let mesh = build_interval(4).unwrap();
        assert!(read_weight(&mesh, "bw 1 1\natom 2 1\n").is_err());
        assert!(read_weight(&mesh, "bw 1 2\natom 0 1\n").is_err());
        assert!(read_weight(&mesh, "bw 1 1\natom 4 1\n").is_ok());
    }
}
