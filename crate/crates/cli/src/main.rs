use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use robin_spectra::bounds::{check_all, BoundsReport};
use robin_spectra::domain::{parse_value_list, DomainSpec};
use robin_spectra::eigensolver::{solve_dirichlet, solve_robin};
use robin_spectra::io;
use robin_spectra::maximizer::sigma_max;
use robin_spectra::minimizer::{concentration_demo, hoelder_check, lambda_inf, scan_point_eigen};
use robin_spectra::oracle::{self, BruteMode, End};
use robin_spectra::{BoundaryWeight, Error, Mesh, SolverParams};

/// Environment variable holding the worker-thread count.
const THREADS_ENV: &str = "ROBIN_SPECTRA_THREADS";

const EXIT_USAGE: u8 = 2;
const EXIT_REFUSED: u8 = 3;
const EXIT_NO_CONVERGENCE: u8 = 4;
const EXIT_INVARIANT: u8 = 5;

#[derive(Parser)]
#[command(
    name = "robin-spectra",
    version,
    about = "First Robin eigenvalue of the p-Laplacian and its extremal boundary weights"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// builtin:interval:<n> | builtin:disk:<h> | builtin:square:<h> | file:<path>
    #[arg(long, global = true, default_value = "builtin:interval:200")]
    domain: String,
    #[arg(long, global = true, default_value_t = 2.0)]
    p: f64,
    #[arg(long, global = true)]
    tol_rq: Option<f64>,
    #[arg(long, global = true)]
    tol_res: Option<f64>,
    #[arg(long, global = true)]
    max_outer: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Run every job on one thread (bit-reproducible path).
    #[arg(long, global = true)]
    serial: bool,
    /// Write the main report here instead of stdout.
    #[arg(long, short, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Discrete Dirichlet eigenvalue Λ₁^D_h.
    Dirichlet,
    /// ℓ₁(σ) for a given weight.
    Robin {
        /// const:<v> | file:<path> | dirac:<x>[,<y>]:<m>
        #[arg(long)]
        sigma: String,
        /// CSV of the eigenfunction.
        #[arg(long)]
        field_out: Option<PathBuf>,
    },
    /// Λ(m) and the optimal weight σ_m.
    Maximize {
        #[arg(long)]
        m: f64,
        /// σ_m in the boundary-weight format.
        #[arg(long)]
        sigma_out: Option<PathBuf>,
        /// σ_m along the boundary: node, x, y, arclength, mass, density.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// λ(m) through boundary point masses (p > n only).
    Minimize {
        #[arg(long)]
        m: f64,
        /// Per-node CSV: node, x, y, lambda1_x, ell1_dirac.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// λ₁(x;Ω) at every boundary node, its minimum and the Hölder check.
    ScanLambda1,
    /// Closed-form bounds checked against computed values (CSV).
    Bounds {
        /// log:a:b:n | lin:a:b:n | comma list
        #[arg(long)]
        m_list: String,
        /// Full reports as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Λ(m), λ(m) and their bounds along an m sweep (CSV).
    Sweep {
        #[arg(long)]
        m_list: String,
    },
    /// Q along the concentrating sequence for p ≤ n (CSV).
    Concentrate {
        #[arg(long)]
        j_list: String,
        #[arg(long, default_value_t = 1.0)]
        m: f64,
        /// |Ω| of the 2D domain (default: area of --domain when it is 2D, else 1).
        #[arg(long)]
        volume: Option<f64>,
    },
    /// Reference values: interval-robin, interval-dirichlet, interval-point,
    /// pi-p, disk-robin, xi-of-m, j0-zero, brute-force.
    Oracle { name: String, args: Vec<String> },
}

fn params(c: &Common) -> SolverParams {
    let mut p = SolverParams::new(c.p);
    if let Some(v) = c.tol_rq {
        p.tol_rq = v;
    }
    if let Some(v) = c.tol_res {
        p.tol_res = v;
    }
    if let Some(v) = c.max_outer {
        p.max_outer = v;
    }
    if let Some(v) = c.seed {
        p.seed = v;
    }
    p
}

fn mesh(c: &Common) -> anyhow::Result<Mesh> {
    let spec: DomainSpec = c.domain.parse()?;
    spec.build().with_context(|| format!("building {spec}"))
}

fn emit(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn to_json<T: serde::Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("reports serialize");
    s.push('\n');
    s
}

fn parse_sigma(mesh: &Mesh, spec: &str) -> anyhow::Result<(BoundaryWeight, serde_json::Value)> {
    if let Some(v) = spec.strip_prefix("const:") {
        let v: f64 = v.parse().context("const:<value>")?;
        return Ok((
            BoundaryWeight::constant(mesh, v)?,
            json!({ "kind": "const", "value": v }),
        ));
    }
    if let Some(path) = spec.strip_prefix("file:") {
        let w = io::load_weight(Path::new(path), mesh)?;
        return Ok((w, json!({ "kind": "file", "path": path })));
    }
    if let Some(rest) = spec.strip_prefix("dirac:") {
        let (x, m) = rest.rsplit_once(':').ok_or_else(|| anyhow!("dirac:<x>[,<y>]:<m>"))?;
        let coords: Vec<f64> = x
            .split(',')
            .map(str::parse)
            .collect::<Result<_, _>>()
            .context("dirac coordinates")?;
        let point = match coords.as_slice() {
            [a] => [*a, 0.0],
            [a, b] => [*a, *b],
            _ => bail!("dirac point needs one or two coordinates"),
        };
        let m: f64 = m.parse().context("dirac mass")?;
        let (w, node, snap) = BoundaryWeight::dirac_near(mesh, point, m)?;
        return Ok((
            w,
            json!({ "kind": "dirac", "m": m, "node": node, "x": mesh.node(node), "snap_distance": snap }),
        ));
    }
    bail!("bad --sigma `{spec}` (const:<v> | file:<path> | dirac:<x>[,<y>]:<m>)")
}

/// Boundary nodes in walking order with their arclength from the first one.
fn boundary_walk(mesh: &Mesh) -> Vec<(usize, f64)> {
    let nodes = mesh.boundary_nodes();
    if mesh.dim() == 1 {
        return nodes.iter().map(|&i| (i, mesh.node(i)[0])).collect();
    }
    let nf = mesh.node_facets();
    let mut out = Vec::with_capacity(nodes.len());
    let mut seen = vec![false; mesh.n_nodes()];
    let mut s = 0.0;
    for &start in &nodes {
        if seen[start] {
            continue;
        }
        let mut cur = start;
        loop {
            seen[cur] = true;
            out.push((cur, s));
            let next = nf[cur].iter().find_map(|&f| {
                let other = mesh.facet_nodes(f).iter().copied().find(|&j| j != cur)?;
                (!seen[other]).then(|| (other, mesh.facet(f).measure))
            });
            match next {
                Some((j, len)) => {
                    s += len;
                    cur = j;
                }
                None => break,
            }
        }
    }
    out
}

fn sweep_csv(reports: &[BoundsReport]) -> String {
    let mut s = String::from("m,Lambda,lambda,belsup,inflow,upper,upper2,pass\n");
    for r in reports {
        let lambda = if r.lambda1_omega.is_some() {
            format!("{:e}", r.small_lambda)
        } else {
            String::new()
        };
        let _ = writeln!(
            s,
            "{:e},{:e},{lambda},{:e},{:e},{:e},{:e},{}",
            r.m, r.big_lambda, r.belsup, r.inflow, r.upper, r.upper2, r.pass
        );
    }
    s
}

fn oracle_value(name: &str, args: &[String]) -> anyhow::Result<serde_json::Value> {
    let num = |k: usize| -> anyhow::Result<f64> {
        args.get(k)
            .ok_or_else(|| anyhow!("oracle {name}: missing argument {}", k + 1))?
            .parse()
            .context("number")
    };
    Ok(match name {
        "interval-robin" => json!(oracle::interval_robin_p2(num(0)?, num(1)?)?),
        "interval-dirichlet" => json!({ "p": num(0)?, "lambda": oracle::interval_dirichlet_p(num(0)?)? }),
        "interval-point" => json!({ "p": num(0)?, "lambda": oracle::interval_point_p(num(0)?)? }),
        "pi-p" => json!({ "p": num(0)?, "pi_p": oracle::pi_p(num(0)?) }),
        "disk-robin" => json!(oracle::disk_robin_p2_const(num(0)?)?),
        "xi-of-m" => json!(oracle::interval_xi_of_m(num(0)?)?),
        "j0-zero" => json!({ "j0_1": oracle::bessel_j0_first_zero() }),
        "brute-force" => {
            let p = num(0)?;
            let mode = args.get(1).map(String::as_str).unwrap_or("dirichlet");
            let n_grid = args
                .get(2)
                .map(|s| s.parse())
                .transpose()
                .context("grid size")?
                .unwrap_or(2000);
            let end = |s: &str| match s {
                "left" | "0" => Ok(End::Left),
                "right" | "1" => Ok(End::Right),
                _ => Err(anyhow!("end must be left or right")),
            };
            let parts: Vec<&str> = mode.split(':').collect();
            let mode = match parts.as_slice() {
                ["dirichlet"] => BruteMode::Dirichlet,
                ["robin", a, b] => BruteMode::Robin {
                    left: a.parse()?,
                    right: b.parse()?,
                },
                ["point", e] => BruteMode::Point { end: end(e)? },
                ["dirac", e, m] => BruteMode::Dirac {
                    end: end(e)?,
                    m: m.parse()?,
                },
                _ => bail!("brute-force mode: dirichlet | robin:<a>:<b> | point:<end> | dirac:<end>:<m>"),
            };
            json!(oracle::brute_force_1d(p, mode, n_grid)?)
        }
        other => bail!("unknown oracle `{other}`"),
    })
}

/// Runs the command and returns the exit code for a completed run.
fn run(cli: Cli) -> anyhow::Result<u8> {
    let c = &cli.common;
    let out = c.out.as_deref();
    let prm = params(c);
    match cli.command {
        Command::Dirichlet => {
            let m = mesh(c)?;
            emit(out, &to_json(&solve_dirichlet(&m, &prm)?))?;
        }
        Command::Robin { sigma, field_out } => {
            let m = mesh(c)?;
            let (w, desc) = parse_sigma(&m, &sigma)?;
            let r = solve_robin(&m, &w, &prm)?;
            if let Some(path) = field_out {
                io::save_field(&path, &m, &r.u)?;
            }
            emit(out, &to_json(&json!({ "sigma": desc, "mass": w.mass(), "result": r })))?;
        }
        Command::Maximize {
            m: mass,
            sigma_out,
            csv,
        } => {
            let m = mesh(c)?;
            let rep = sigma_max(&m, mass, &prm)?;
            if let Some(path) = sigma_out {
                io::save_weight(&path, &rep.sigma_weight(&m)?)?;
            }
            if let Some(path) = csv {
                let nodal: std::collections::HashMap<usize, f64> = rep.sigma_nodal.iter().copied().collect();
                let nf = m.node_facets();
                let mut s = String::from("node,x,y,arclength,mass,density\n");
                for (i, arc) in boundary_walk(&m) {
                    let g = nodal.get(&i).copied().unwrap_or(0.0);
                    let share: f64 = nf[i].iter().map(|&f| m.facet(f).measure / m.dim() as f64).sum();
                    let x = m.node(i);
                    let _ = writeln!(s, "{i},{:e},{:e},{arc:e},{g:e},{:e}", x[0], x[1], g / share);
                }
                std::fs::write(&path, s)?;
            }
            emit(out, &to_json(&rep))?;
            if !rep.flags.is_empty() {
                eprintln!("invariant check failed: {}", rep.flags.join("; "));
                return Ok(EXIT_INVARIANT);
            }
        }
        Command::Minimize { m: mass, csv } => {
            let m = mesh(c)?;
            let rep = lambda_inf(&m, mass, &prm)?;
            if let Some(path) = csv {
                std::fs::write(&path, rep.to_csv())?;
            }
            emit(out, &to_json(&rep))?;
            if !rep.violations.is_empty() {
                eprintln!("invariant check failed: {}", rep.violations.join("; "));
                return Ok(EXIT_INVARIANT);
            }
        }
        Command::ScanLambda1 => {
            let m = mesh(c)?;
            let scan = scan_point_eigen(&m, &prm)?;
            let hoelder = hoelder_check(&m, &scan);
            emit(out, &to_json(&json!({ "scan": scan, "hoelder": hoelder })))?;
        }
        Command::Bounds {
            m_list,
            json: json_path,
        } => {
            let list = parse_value_list(&m_list)?;
            let m = mesh(c)?;
            let reps = check_all(&m, &list, &prm)?;
            if let Some(path) = json_path {
                std::fs::write(&path, to_json(&reps))?;
            }
            emit(out, &robin_spectra::bounds::to_csv(&reps))?;
            if reps.iter().any(|r| !r.pass) {
                eprintln!("a bound was violated beyond the recorded slack");
                return Ok(EXIT_INVARIANT);
            }
        }
        Command::Sweep { m_list } => {
            let list = parse_value_list(&m_list)?;
            let m = mesh(c)?;
            let reps = check_all(&m, &list, &prm)?;
            emit(out, &sweep_csv(&reps))?;
            if reps.iter().any(|r| !r.pass) {
                eprintln!("a bound was violated beyond the recorded slack");
                return Ok(EXIT_INVARIANT);
            }
        }
        Command::Concentrate {
            j_list,
            m: mass,
            volume,
        } => {
            let js = parse_value_list(&j_list)?;
            let volume = match volume {
                Some(v) => v,
                None => {
                    let spec: DomainSpec = c.domain.parse()?;
                    if matches!(spec, DomainSpec::Interval(_)) {
                        1.0
                    } else {
                        let m = spec.build()?;
                        if m.dim() != 2 {
                            bail!("concentration needs a 2D domain");
                        }
                        m.volume()
                    }
                }
            };
            let run = concentration_demo(2, volume, c.p, mass, &js)?;
            emit(out, &run.to_csv())?;
            if !run.all_below_bound {
                eprintln!("Q_j exceeded its bound B_j");
                return Ok(EXIT_INVARIANT);
            }
        }
        Command::Oracle { name, args } => {
            emit(out, &to_json(&oracle_value(&name, &args)?))?;
        }
    }
    Ok(0)
}

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.chain().find_map(|c| c.downcast_ref::<Error>()) {
        Some(Error::Refused(_)) => EXIT_REFUSED,
        Some(Error::NoConvergence { .. }) => EXIT_NO_CONVERGENCE,
        Some(Error::Invariant(_)) => EXIT_INVARIANT,
        _ => EXIT_USAGE,
    }
}

fn configure_threads(serial: bool) -> anyhow::Result<()> {
    let threads = if serial {
        Some(1)
    } else {
        match std::env::var(THREADS_ENV) {
            Ok(v) => Some(v.parse::<usize>().with_context(|| format!("{THREADS_ENV}={v}"))?),
            Err(_) => None,
        }
    };
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads(cli.common.serial).and_then(|_| run(cli));
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
