//! Browser bindings: each export takes plain numbers and strings and returns a
//! JSON document that `www/index.html` draws on a canvas.

use robin_spectra::bounds::check_all;
use robin_spectra::domain::{parse_value_list, DomainSpec};
use robin_spectra::eigensolver::{solve_dirichlet, solve_robin};
use robin_spectra::maximizer::AuxProblem;
use robin_spectra::mesh::Mesh;
use robin_spectra::params::SolverParams;
use robin_spectra::weight::BoundaryWeight;
use serde::Serialize;
use wasm_bindgen::prelude::*;

// Anything finer makes the page unresponsive for seconds.
const MAX_NODES: usize = 4000;

#[derive(Serialize)]
struct Geometry {
    dim: usize,
    nodes: Vec<[f64; 2]>,
    cells: Vec<Vec<usize>>,
}

impl Geometry {
    fn of(mesh: &Mesh) -> Self {
        Geometry {
            dim: mesh.dim(),
            nodes: mesh.nodes().to_vec(),
            cells: (0..mesh.n_cells()).map(|c| mesh.cell(c).to_vec()).collect(),
        }
    }
}

#[derive(Serialize)]
struct RobinView {
    lambda: f64,
    lambda_dirichlet: f64,
    residual: f64,
    outer_iters: usize,
    mesh: Geometry,
    u: Vec<f64>,
}

#[derive(Serialize)]
struct MaxView {
    m: f64,
    xi_m: f64,
    lambda_dirichlet: f64,
    mass_rel_err: f64,
    /// `[x, y, mass]` per boundary node.
    sigma: Vec<[f64; 3]>,
    mesh: Geometry,
    u: Vec<f64>,
}

#[derive(Serialize)]
struct SweepRow {
    m: f64,
    belsup: f64,
    big_lambda: f64,
    upper: f64,
    small_lambda: f64,
    pass: bool,
}

fn builtin_mesh(domain: &str) -> Result<Mesh, String> {
    let spec: DomainSpec = domain.parse().map_err(|e| format!("{e}"))?;
    if matches!(spec, DomainSpec::File(_)) {
        return Err("only builtin domains are available in the browser".into());
    }
    let mesh = spec.build().map_err(|e| format!("{e}"))?;
    if mesh.n_nodes() > MAX_NODES {
        return Err(format!(
            "{} nodes is too fine for the demo (limit {MAX_NODES})",
            mesh.n_nodes()
        ));
    }
    Ok(mesh)
}

fn params(p: f64) -> Result<SolverParams, String> {
    let params = SolverParams::new(p);
    params.validate().map_err(|e| format!("{e}"))?;
    Ok(params)
}

fn json<T: Serialize>(v: &T) -> Result<String, String> {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

pub fn robin_json(domain: &str, p: f64, sigma: f64) -> Result<String, String> {
    let mesh = builtin_mesh(domain)?;
    let params = params(p)?;
    let w = BoundaryWeight::constant(&mesh, sigma).map_err(|e| format!("{e}"))?;
    let r = solve_robin(&mesh, &w, &params).map_err(|e| format!("{e}"))?;
    let d = solve_dirichlet(&mesh, &params).map_err(|e| format!("{e}"))?;
    json(&RobinView {
        lambda: r.lambda,
        lambda_dirichlet: d.lambda,
        residual: r.residual,
        outer_iters: r.outer_iters,
        mesh: Geometry::of(&mesh),
        u: r.u.into_vec(),
    })
}

pub fn maximize_json(domain: &str, p: f64, m: f64) -> Result<String, String> {
    let mesh = builtin_mesh(domain)?;
    let params = params(p)?;
    let mut aux = AuxProblem::new(&mesh, &params).map_err(|e| format!("{e}"))?;
    let r = robin_spectra::maximizer::sigma_max_with(&mut aux, m).map_err(|e| format!("{e}"))?;
    let sigma = r
        .sigma_nodal
        .iter()
        .map(|&(i, g)| {
            let x = mesh.node(i);
            [x[0], x[1], g]
        })
        .collect();
    json(&MaxView {
        m: r.m,
        xi_m: r.xi_m,
        lambda_dirichlet: r.lambda_dirichlet_h,
        mass_rel_err: r.mass_rel_err,
        sigma,
        mesh: Geometry::of(&mesh),
        u: r.u_m.into_vec(),
    })
}

pub fn sweep_json(domain: &str, p: f64, m_list: &str) -> Result<String, String> {
    let mesh = builtin_mesh(domain)?;
    let params = params(p)?;
    let ms = parse_value_list(m_list).map_err(|e| format!("{e}"))?;
    let reports = check_all(&mesh, &ms, &params).map_err(|e| format!("{e}"))?;
    let rows: Vec<SweepRow> = reports
        .iter()
        .map(|r| SweepRow {
            m: r.m,
            belsup: r.belsup,
            big_lambda: r.big_lambda,
            upper: r.upper,
            small_lambda: r.small_lambda,
            pass: r.pass,
        })
        .collect();
    json(&rows)
}

/// First Robin eigenpair for the constant weight `sigma`, next to the Dirichlet eigenvalue.
#[wasm_bindgen]
pub fn robin(domain: &str, p: f64, sigma: f64) -> Result<String, JsValue> {
    robin_json(domain, p, sigma).map_err(|e| JsValue::from_str(&e))
}

/// Optimal weight of mass `m` and the value `Λ(m)`.
#[wasm_bindgen]
pub fn maximize(domain: &str, p: f64, m: f64) -> Result<String, JsValue> {
    maximize_json(domain, p, m).map_err(|e| JsValue::from_str(&e))
}

/// `Λ(m)` and `λ(m)` against their closed-form bounds over a list of masses.
#[wasm_bindgen]
pub fn sweep(domain: &str, p: f64, m_list: &str) -> Result<String, JsValue> {
    sweep_json(domain, p, m_list).map_err(|e| JsValue::from_str(&e))
}
