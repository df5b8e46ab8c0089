//! `qg` — command-line driver for metric-graph calculus checks.
//!
//! Exit codes: 0 when the requested check passes (or the artifact was
//! produced), 1 when a check fails or a solve diverges, 2 on usage, parse,
//! or i/o errors.

use std::fs;
use std::io::Read;
use std::path::Path;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use qg_core::calculus::{verify_ibp_compact, verify_ibp_weighted};
use qg_core::func::parse_function_table;
use qg_core::generators;
use qg_core::geodesics::{distance_field, DistanceField, EdgeCase};
use qg_core::growth::check_growth;
use qg_core::mollify::{
    c1_modified_distance, modified_distance, Mollifier, ModifiedDistanceField, StepFunctionTau,
    verify_mollifier, verify_modified_distance, verify_tau,
};
use qg_core::solver::{
    apriori_check_compact, apriori_check_weighted, check_supersolution, discretize,
    holder_chain_check, liouville_probe, radial_potential, solve_truncated, ChainMode,
    NewtonOptions, NodeLoc, ProbeFamily,
};
use qg_core::testfn::{compact_testfn, exp_testfn, verify_compact_bounds, verify_exp_bounds};
use qg_core::{EdgeEval, GraphFunction, MetricGraph, QgError, QuadratureRule};

#[derive(Parser)]
#[command(
    name = "qg",
    about = "Numerical calculus on metric graphs: distances, test functions, growth checks, and semilinear solves",
    version
)]
struct Cli {
    /// Emit the full report as JSON on standard output instead of text.
    #[arg(long, global = true)]
    json: bool,

    /// Write the subcommand's tabular output to this CSV file (atomically).
    #[arg(long, global = true)]
    out: Option<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Family {
    Path,
    Star,
    Tree,
    ParallelChain,
    Ladder,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum BridgeKind {
    Quintic,
    Bump,
    Tau,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum IbpMode {
    Compact,
    Weighted,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum ChainModeArg {
    Compact,
    Weighted,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum ProbeFamilyArg {
    Path,
    Tree,
}

#[derive(Subcommand)]
enum Command {
    /// Emit a generated graph family in the text format.
    Gen {
        #[arg(value_enum)]
        family: Family,
        /// Size parameter (edges for path/parallel-chain, rays for star,
        /// rungs for ladder).
        #[arg(long, default_value_t = 8)]
        n: usize,
        /// Branching factor (tree only).
        #[arg(long, default_value_t = 2)]
        branching: usize,
        /// Depth (tree only).
        #[arg(long, default_value_t = 4)]
        depth: usize,
    },
    /// Check the standing hypotheses on a graph.
    Validate {
        #[arg(long)]
        graph: String,
    },
    /// Per-vertex distances and per-edge case classification.
    Distance {
        #[arg(long)]
        graph: String,
    },
    /// Verify a mollifier bridge and the modified distance built from it.
    MollifyCheck {
        #[arg(long)]
        graph: String,
        #[arg(long, value_enum, default_value_t = BridgeKind::Quintic)]
        bridge: BridgeKind,
        #[arg(long, default_value_t = 128)]
        grid: usize,
        #[arg(long, default_value_t = 1e-4)]
        tol: f64,
    },
    /// Integration-by-parts identity check for a test function against a
    /// radial profile (or a user-supplied function table).
    IbpCheck {
        #[arg(long)]
        graph: String,
        #[arg(long = "R")]
        r: f64,
        #[arg(long, value_enum, default_value_t = IbpMode::Compact)]
        mode: IbpMode,
        /// Cutoff power (compact mode).
        #[arg(long, default_value_t = 3.0)]
        s: f64,
        /// Decay rate (weighted mode).
        #[arg(long, default_value_t = 0.75)]
        delta: f64,
        #[arg(long, default_value_t = 128)]
        panels: usize,
        /// Function table for u; defaults to the radial profile e^{-d~}.
        #[arg(long)]
        table: Option<String>,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Derivative-bound constants for both test-function families.
    TestfnCheck {
        #[arg(long)]
        graph: String,
        #[arg(long = "R")]
        r: f64,
        #[arg(long, default_value_t = 0.75)]
        delta: f64,
        #[arg(long, default_value_t = 256)]
        grid: usize,
    },
    /// Volume-growth ratio sweep for a generated family.
    GrowthCheck {
        #[arg(long, value_enum)]
        family: Family,
        /// Override the family truncation size chosen from --Rmax.
        #[arg(long)]
        size: Option<usize>,
        /// Potential: `const`, `const:<c>`, or `powerlaw:<beta>`.
        #[arg(long = "V", default_value = "const")]
        v: String,
        #[arg(long, default_value_t = 2.0)]
        sigma: f64,
        #[arg(long = "R0", default_value_t = 2.0)]
        r0: f64,
        #[arg(long = "Rmax", default_value_t = 16.0)]
        rmax: f64,
        #[arg(long = "Rsteps", default_value_t = 4)]
        rsteps: usize,
    },
    /// Supersolution certificate for a function table.
    Certify {
        #[arg(long)]
        graph: String,
        #[arg(long)]
        table: String,
        #[arg(long, default_value_t = 2.0)]
        sigma: f64,
        #[arg(long = "V", default_value = "const")]
        v: String,
        #[arg(long, default_value_t = 16)]
        n_per_edge: usize,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        /// Comma-separated vertex ids exempt from the vertex and flux
        /// checks (Dirichlet-type caps).
        #[arg(long)]
        cap: Option<String>,
    },
    /// Solve the truncated absorption problem on a metric ball.
    Solve {
        #[arg(long)]
        graph: String,
        #[arg(long = "R")]
        r: f64,
        #[arg(long, default_value_t = 2.0)]
        sigma: f64,
        #[arg(long = "V", default_value = "const")]
        v: String,
        #[arg(long, default_value_t = 1.0)]
        bv: f64,
        #[arg(long, default_value_t = 16)]
        n_per_edge: usize,
        /// Comma-separated vertex ids held at the boundary value even when
        /// they fall inside the ball (Dirichlet-type caps).
        #[arg(long)]
        cap: Option<String>,
    },
    /// Radius sweep of truncated solves on a probe family.
    Probe {
        #[arg(long, value_enum)]
        family: ProbeFamilyArg,
        #[arg(long = "V", default_value = "const")]
        v: String,
        #[arg(long, default_value_t = 2.0)]
        sigma: f64,
        #[arg(long, default_value_t = 1.0)]
        bv: f64,
        /// Comma-separated radii, e.g. `4,8,16,32`.
        #[arg(long, default_value = "4,8,16,32")]
        radii: String,
        #[arg(long, default_value_t = 16)]
        n_per_edge: usize,
    },
    /// Evaluate an a priori inequality chain on a function table.
    ChainCheck {
        #[arg(long)]
        graph: String,
        #[arg(long)]
        table: String,
        #[arg(long, value_enum)]
        mode: ChainModeArg,
        #[arg(long, default_value_t = 2.0)]
        sigma: f64,
        #[arg(long = "R")]
        r: f64,
        /// Cutoff power (compact mode).
        #[arg(long, default_value_t = 3.0)]
        s: f64,
        /// Decay rate (weighted mode).
        #[arg(long, default_value_t = 0.75)]
        delta: f64,
        #[arg(long = "V", default_value = "const")]
        v: String,
        #[arg(long, default_value_t = 128)]
        panels: usize,
    },
}

fn main() -> ExitCode {
    // Restore the default SIGPIPE disposition so piping into a pager that
    // exits early terminates this process quietly instead of panicking.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    if let Ok(threads) = std::env::var("QG_THREADS") {
        if let Ok(n) = threads.trim().parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build_global();
        }
    }
    let cli = Cli::parse();
    match run(&cli) {
        Ok(pass) => {
            if pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                QgError::NewtonDiverged { .. } => ExitCode::from(1),
                _ => ExitCode::from(2),
            }
        }
    }
}

fn read_text(path: &str) -> Result<String, QgError> {
    if path == "-" {
        let mut buf = String::new();
        std::io::stdin().read_to_string(&mut buf)?;
        Ok(buf)
    } else {
        Ok(fs::read_to_string(path)?)
    }
}

fn read_graph(path: &str) -> Result<MetricGraph, QgError> {
    MetricGraph::parse(&read_text(path)?)
}

/// Atomic CSV write: temp file in the destination directory, then rename.
fn write_csv(path: &str, header: Option<&str>, rows: &[Vec<String>]) -> Result<(), QgError> {
    let mut text = String::new();
    if let Some(h) = header {
        text.push_str(h);
        text.push('\n');
    }
    for row in rows {
        text.push_str(&row.join(","));
        text.push('\n');
    }
    let target = Path::new(path);
    let dir = target.parent().filter(|p| !p.as_os_str().is_empty());
    let mut tmp = match dir {
        Some(d) => tempfile::NamedTempFile::new_in(d)?,
        None => tempfile::NamedTempFile::new_in(".")?,
    };
    use std::io::Write;
    tmp.write_all(text.as_bytes())?;
    tmp.persist(target).map_err(|e| QgError::Io(e.error))?;
    Ok(())
}

fn maybe_csv(
    cli_out: &Option<String>,
    header: Option<&str>,
    rows: &[Vec<String>],
) -> Result<(), QgError> {
    if let Some(path) = cli_out {
        write_csv(path, header, rows)?;
    }
    Ok(())
}

fn fnum(v: f64) -> String {
    if v.is_nan() {
        "NaN".to_string()
    } else if v == 0.0 {
        "0".to_string()
    } else {
        format!("{v}")
    }
}

/// Builds a potential from the flag grammar `const`, `const:<c>`, or
/// `powerlaw:<beta>` (the latter decaying as `(1+d)^{-beta}`).
fn parse_potential(
    arg: &str,
    g: &MetricGraph,
    df: &DistanceField,
) -> Result<GraphFunction, QgError> {
    if arg == "const" {
        return Ok(GraphFunction::constant(g, 1.0));
    }
    if let Some(c) = arg.strip_prefix("const:") {
        let c: f64 = c
            .parse()
            .map_err(|_| QgError::InvalidArgument(format!("bad constant in --V `{arg}`")))?;
        if !(c > 0.0) {
            return Err(QgError::InvalidArgument(format!(
                "potential constant must be positive, got {c}"
            )));
        }
        return Ok(GraphFunction::constant(g, c));
    }
    if let Some(b) = arg.strip_prefix("powerlaw:") {
        let beta: f64 = b
            .parse()
            .map_err(|_| QgError::InvalidArgument(format!("bad exponent in --V `{arg}`")))?;
        return Ok(radial_potential(g, df, move |d| (1.0 + d).powf(-beta)));
    }
    Err(QgError::InvalidArgument(format!(
        "unknown potential `{arg}` (expected const, const:<c>, or powerlaw:<beta>)"
    )))
}

/// A closure form of the same grammar for the radial probe families.
fn parse_radial_potential(
    arg: &str,
) -> Result<std::sync::Arc<dyn Fn(f64) -> f64 + Send + Sync>, QgError> {
    if arg == "const" {
        return Ok(std::sync::Arc::new(|_| 1.0));
    }
    if let Some(c) = arg.strip_prefix("const:") {
        let c: f64 = c
            .parse()
            .map_err(|_| QgError::InvalidArgument(format!("bad constant in --V `{arg}`")))?;
        return Ok(std::sync::Arc::new(move |_| c));
    }
    if let Some(b) = arg.strip_prefix("powerlaw:") {
        let beta: f64 = b
            .parse()
            .map_err(|_| QgError::InvalidArgument(format!("bad exponent in --V `{arg}`")))?;
        return Ok(std::sync::Arc::new(move |d| (1.0 + d).powf(-beta)));
    }
    Err(QgError::InvalidArgument(format!(
        "unknown potential `{arg}` (expected const, const:<c>, or powerlaw:<beta>)"
    )))
}

fn gen_family(
    family: Family,
    n: usize,
    branching: usize,
    depth: usize,
) -> Result<MetricGraph, QgError> {
    match family {
        Family::Path => generators::path(n),
        Family::Star => generators::star(n),
        Family::Tree => generators::tree(branching, depth),
        Family::ParallelChain => generators::parallel_chain(n),
        Family::Ladder => generators::ladder(n),
    }
}

/// The radial profile `e^{-d~}`, smooth across every junction because the
/// regularized distance is flat there.
fn radial_exp_profile(g: &MetricGraph, mdf: &ModifiedDistanceField) -> GraphFunction {
    let vertex_values = (0..g.n_vertices())
        .map(|v| (-mdf.vertex_value(v)).exp())
        .collect();
    let mut breakpoints = vec![Vec::new(); g.n_edges()];
    let edges = (0..g.n_edges())
        .map(|e| {
            let ev = mdf.evaluator(e);
            let (e1, e2) = (ev.clone(), ev.clone());
            for &(pe, x) in &mdf.segment_points {
                if pe == e {
                    breakpoints[e].push(x);
                }
            }
            EdgeEval::analytic_with(
                move |x| (-ev.eval(x).0).exp(),
                move |x| {
                    let (v, d1, _) = e1.eval(x);
                    -(-v).exp() * d1
                },
                move |x| {
                    let (v, d1, d2) = e2.eval(x);
                    (-v).exp() * (d1 * d1 - d2)
                },
            )
        })
        .collect();
    GraphFunction::from_parts(vertex_values, edges, breakpoints)
}

fn parse_radii(arg: &str) -> Result<Vec<f64>, QgError> {
    arg.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<f64>()
                .map_err(|_| QgError::InvalidArgument(format!("bad radius `{tok}` in --radii")))
        })
        .collect()
}

fn geometric_radii(r0: f64, rmax: f64, steps: usize) -> Result<Vec<f64>, QgError> {
    if !(r0 > 0.0) || !(rmax >= r0) || steps == 0 {
        return Err(QgError::InvalidArgument(format!(
            "need 0 < R0 <= Rmax and Rsteps >= 1, got R0={r0}, Rmax={rmax}, Rsteps={steps}"
        )));
    }
    if steps == 1 {
        return Ok(vec![r0]);
    }
    Ok((0..steps)
        .map(|k| r0 * (rmax / r0).powf(k as f64 / (steps - 1) as f64))
        .collect())
}

fn run(cli: &Cli) -> Result<bool, QgError> {
    match &cli.command {
        Command::Gen {
            family,
            n,
            branching,
            depth,
        } => {
            let g = gen_family(*family, *n, *branching, *depth)?;
            let text = g.to_text();
            if let Some(path) = &cli.out {
                write_csv(path, None, &[vec![text.trim_end().to_string()]])?;
            } else {
                print!("{text}");
            }
            Ok(true)
        }

        Command::Validate { graph } => {
            let g = read_graph(graph)?;
            let rep = g.validate_hypotheses();
            let pass = rep.connected && rep.locally_finite && rep.no_loops && rep.r_inf > 0.0;
            if cli.json {
                println!("{}", serde_json::to_string_pretty(&rep).unwrap());
            } else {
                println!("connected:        {}", rep.connected);
                println!("locally finite:   {}", rep.locally_finite);
                println!("no loops:         {}", rep.no_loops);
                println!("j_sup:            {}", fnum(rep.j_sup));
                println!("r_inf:            {}", fnum(rep.r_inf));
                println!("weight ratio sup: {}", fnum(rep.weight_ratio_sup));
                println!("R0:               {}", fnum(rep.r0));
                println!("verdict:          {}", if pass { "PASS" } else { "FAIL" });
            }
            let rows = vec![
                vec!["connected".into(), rep.connected.to_string()],
                vec!["locally_finite".into(), rep.locally_finite.to_string()],
                vec!["no_loops".into(), rep.no_loops.to_string()],
                vec!["j_sup".into(), fnum(rep.j_sup)],
                vec!["r_inf".into(), fnum(rep.r_inf)],
                vec!["weight_ratio_sup".into(), fnum(rep.weight_ratio_sup)],
                vec!["r0".into(), fnum(rep.r0)],
            ];
            maybe_csv(&cli.out, Some("check,value"), &rows)?;
            Ok(pass)
        }

        Command::Distance { graph } => {
            let g = read_graph(graph)?;
            let df = distance_field(&g)?;
            let mut rows: Vec<Vec<String>> = Vec::new();
            for v in 0..g.n_vertices() {
                rows.push(vec![
                    "vertex".into(),
                    g.vertex_id(v).into(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    fnum(df.vertex_dist[v]),
                ]);
            }
            for e in 0..g.n_edges() {
                let (case, q) = match df.edge_case[e] {
                    EdgeCase::Rising => ("rising", String::new()),
                    EdgeCase::Falling => ("falling", String::new()),
                    EdgeCase::Peak(q) => ("peak", fnum(q)),
                };
                rows.push(vec![
                    "edge".into(),
                    g.edge_id(e).into(),
                    case.into(),
                    q,
                    fnum(df.vertex_dist[g.from(e)]),
                    fnum(df.vertex_dist[g.to(e)]),
                    String::new(),
                ]);
            }
            let header = "kind,id,case,q,d_i,d_j,dist";
            if cli.json {
                let j = json!({
                    "vertex_dist": (0..g.n_vertices())
                        .map(|v| json!({"id": g.vertex_id(v), "dist": df.vertex_dist[v]}))
                        .collect::<Vec<_>>(),
                    "edges": (0..g.n_edges()).map(|e| {
                        let (case, q) = match df.edge_case[e] {
                            EdgeCase::Rising => ("rising", None),
                            EdgeCase::Falling => ("falling", None),
                            EdgeCase::Peak(q) => ("peak", Some(q)),
                        };
                        json!({"id": g.edge_id(e), "case": case, "q": q})
                    }).collect::<Vec<_>>(),
                });
                println!("{}", serde_json::to_string_pretty(&j).unwrap());
            } else {
                println!("{header}");
                for row in &rows {
                    println!("{}", row.join(","));
                }
            }
            maybe_csv(&cli.out, Some(header), &rows)?;
            Ok(true)
        }

        Command::MollifyCheck {
            graph,
            bridge,
            grid,
            tol,
        } => {
            let g = read_graph(graph)?;
            let df = distance_field(&g)?;
            let (bridge_rep, mdf) = match bridge {
                BridgeKind::Quintic => {
                    let m = Mollifier::quintic();
                    (verify_mollifier(&m, *grid, 1e-12), modified_distance(&g, &df, &m))
                }
                BridgeKind::Bump => {
                    let m = Mollifier::bump();
                    (verify_mollifier(&m, *grid, 1e-10), modified_distance(&g, &df, &m))
                }
                BridgeKind::Tau => {
                    let t = StepFunctionTau::smoothstep();
                    (verify_tau(&t, *grid, 1e-12), c1_modified_distance(&g, &df, &t))
                }
            };
            let rep = verify_modified_distance(&mdf, *grid, *tol);
            // the C1 variant is allowed (indeed expected) to jump in the
            // second derivative at segment points
            let c1 = matches!(bridge, BridgeKind::Tau);
            let pass = bridge_rep.pass
                && rep.first_order_pass
                && rep.dev_pass
                && rep.d1_continuous_at_segments
                && (c1 || (rep.second_order_pass && rep.d2_continuous_at_segments));
            if cli.json {
                let j = json!({"bridge": bridge_rep, "modified_distance": rep, "pass": pass});
                println!("{}", serde_json::to_string_pretty(&j).unwrap());
            } else {
                println!("bridge:                {}", bridge_rep.name);
                println!("bridge checks:         {}", if bridge_rep.pass { "PASS" } else { "FAIL" });
                println!("first-order flatness:  {}", rep.first_order_pass);
                println!("second-order flatness: {}", rep.second_order_pass);
                println!("deviation bound:       {}", rep.dev_pass);
                println!("d1 continuity:         {}", rep.d1_continuous_at_segments);
                println!("d2 continuity:         {}", rep.d2_continuous_at_segments);
                println!("sup |d~'|:             {}", fnum(rep.sup_d1));
                println!("sup |d~''|:            {}", fnum(rep.sup_d2));
                println!("max segment d2 gap:    {}", fnum(rep.max_seg_d2_gap));
                println!("verdict:               {}", if pass { "PASS" } else { "FAIL" });
            }
            let rows = vec![
                vec!["bridge_pass".into(), bridge_rep.pass.to_string()],
                vec!["first_order_pass".into(), rep.first_order_pass.to_string()],
                vec!["second_order_pass".into(), rep.second_order_pass.to_string()],
                vec!["dev_pass".into(), rep.dev_pass.to_string()],
                vec!["d1_continuous".into(), rep.d1_continuous_at_segments.to_string()],
                vec!["d2_continuous".into(), rep.d2_continuous_at_segments.to_string()],
                vec!["sup_d1".into(), fnum(rep.sup_d1)],
                vec!["sup_d2".into(), fnum(rep.sup_d2)],
                vec!["max_seg_d2_gap".into(), fnum(rep.max_seg_d2_gap)],
            ];
            maybe_csv(&cli.out, Some("check,value"), &rows)?;
            Ok(pass)
        }

        Command::IbpCheck {
            graph,
            r,
            mode,
            s,
            delta,
            panels,
            table,
            tol,
        } => {
            let g = read_graph(graph)?;
            let df = distance_field(&g)?;
            let mdf = modified_distance(&g, &df, &Mollifier::quintic());
            let u = match table {
                Some(path) => parse_function_table(&g, &read_text(path)?)?,
                None => radial_exp_profile(&g, &mdf),
            };
            let rule = QuadratureRule::Simpson { panels: *panels };
            let rep = match mode {
                IbpMode::Compact => {
                    let phi = compact_testfn(&g, &mdf, *r)?;
                    verify_ibp_compact(&g, &u, &phi, *s, rule)
                }
                IbpMode::Weighted => {
                    let psi = exp_testfn(&g, &mdf, *r, *delta)?;
                    verify_ibp_weighted(&g, &u, &psi, rule)
                }
            };
            let pass = rep.residual <= *tol;
            if cli.json {
                let j = json!({"report": rep, "tol": tol, "pass": pass});
                println!("{}", serde_json::to_string_pretty(&j).unwrap());
            } else {
                println!("lhs:            {}", fnum(rep.lhs));
                println!("rhs:            {}", fnum(rep.rhs));
                println!("residual:       {}", fnum(rep.residual));
                println!("flux (u):       {}", fnum(rep.boundary_flux_u));
                println!("flux (test):    {}", fnum(rep.boundary_flux_test));
                println!("tolerance:      {}", fnum(*tol));
                println!("verdict:        {}", if pass { "PASS" } else { "FAIL" });
            }
            let rows = vec![
                vec!["lhs".into(), fnum(rep.lhs)],
                vec!["rhs".into(), fnum(rep.rhs)],
                vec!["residual".into(), fnum(rep.residual)],
                vec!["boundary_flux_u".into(), fnum(rep.boundary_flux_u)],
                vec!["boundary_flux_test".into(), fnum(rep.boundary_flux_test)],
            ];
            maybe_csv(&cli.out, Some("field,value"), &rows)?;
            Ok(pass)
        }

        Command::TestfnCheck {
            graph,
            r,
            delta,
            grid,
        } => {
            let g = read_graph(graph)?;
            let df = distance_field(&g)?;
            let mdf = modified_distance(&g, &df, &Mollifier::quintic());
            let compact = verify_compact_bounds(&g, &mdf, *r, *grid)?;
            let weighted = verify_exp_bounds(&g, &mdf, *r, *delta, *grid)?;
            let pass = compact.max_edge_dd_outside == 0.0
                && compact.max_vertex_lap_outside == 0.0
                && compact.max_kirchhoff.abs() <= 1e-12
                && weighted.max_kirchhoff.abs() <= 1e-12
                && compact.containment_annulus_in_shell
                && compact.containment_shell_in_union;
            if cli.json {
                let j = json!({"compact": compact, "weighted": weighted, "pass": pass});
                println!("{}", serde_json::to_string_pretty(&j).unwrap());
            } else {
                println!("R:                  {}", fnum(compact.r));
                println!("R0:                 {}", fnum(compact.r0));
                println!("c_a (edge, cutoff): {}", fnum(compact.c_a));
                println!("c_b (vertex):       {}", fnum(compact.c_b));
                println!("c_e (edge, decay):  {}", fnum(weighted.c_e));
                println!("c_v (vertex):       {}", fnum(weighted.c_v));
                println!("C1, C2 (envelope):  {}, {}", fnum(weighted.c1), fnum(weighted.c2));
                println!("max flux (cutoff):  {}", fnum(compact.max_kirchhoff));
                println!("max flux (decay):   {}", fnum(weighted.max_kirchhoff));
                println!("verdict:            {}", if pass { "PASS" } else { "FAIL" });
            }
            let rows = vec![
                vec!["r".into(), fnum(compact.r)],
                vec!["r0".into(), fnum(compact.r0)],
                vec!["c_a".into(), fnum(compact.c_a)],
                vec!["c_b".into(), fnum(compact.c_b)],
                vec!["c_e".into(), fnum(weighted.c_e)],
                vec!["c_v".into(), fnum(weighted.c_v)],
                vec!["c1".into(), fnum(weighted.c1)],
                vec!["c2".into(), fnum(weighted.c2)],
                vec!["max_kirchhoff_cutoff".into(), fnum(compact.max_kirchhoff)],
                vec!["max_kirchhoff_decay".into(), fnum(weighted.max_kirchhoff)],
            ];
            maybe_csv(&cli.out, Some("constant,value"), &rows)?;
            Ok(pass)
        }

        Command::GrowthCheck {
            family,
            size,
            v,
            sigma,
            r0,
            rmax,
            rsteps,
        } => {
            let radii = geometric_radii(*r0, *rmax, *rsteps)?;
            let span = 2.0 * rmax;
            let g = match family {
                Family::Path => generators::path(size.unwrap_or(span.ceil() as usize + 2))?,
                Family::Star => generators::star(size.unwrap_or(8))?,
                Family::Tree => {
                    let depth = size.unwrap_or(span.ceil() as usize + 1);
                    if depth > 20 {
                        return Err(QgError::InvalidArgument(format!(
                            "binary-tree truncation depth {depth} is too large; \
                             pass a smaller --Rmax or an explicit --size"
                        )));
                    }
                    generators::tree(2, depth)?
                }
                Family::ParallelChain => {
                    generators::parallel_chain(size.unwrap_or(span.ceil() as usize + 1))?
                }
                Family::Ladder => generators::ladder(size.unwrap_or(span.ceil() as usize + 1))?,
            };
            let df = distance_field(&g)?;
            let potential = parse_potential(v, &g, &df)?;
            let rep = check_growth(&g, &df, &potential, *sigma, &radii)?;
            if cli.json {
                println!("{}", serde_json::to_string_pretty(&rep).unwrap());
            } else {
                println!("R,vertex_sum,edge_sum,bound,vertex_ratio,edge_ratio");
                for row in &rep.rows {
                    println!(
                        "{},{},{},{},{},{}",
                        fnum(row.r),
                        fnum(row.vertex_sum),
                        fnum(row.edge_sum),
                        fnum(row.bound),
                        fnum(row.vertex_ratio),
                        fnum(row.edge_ratio)
                    );
                }
                println!("vertex last/median: {}", fnum(rep.vertex_last_over_median));
                println!("edge last/median:   {}", fnum(rep.edge_last_over_median));
                println!(
                    "fitted exponents:   vertex {}, edge {}",
                    fnum(rep.fitted_vertex_exponent),
                    fnum(rep.fitted_edge_exponent)
                );
                println!("verdict:            {}", if rep.holds { "HOLDS" } else { "FAILS" });
            }
            let rows: Vec<Vec<String>> = rep
                .rows
                .iter()
                .map(|row| {
                    vec![
                        fnum(row.r),
                        fnum(row.vertex_sum),
                        fnum(row.edge_sum),
                        fnum(row.bound),
                        fnum(row.vertex_ratio),
                        fnum(row.edge_ratio),
                    ]
                })
                .collect();
            maybe_csv(
                &cli.out,
                Some("R,vertex_sum,edge_sum,bound,vertex_ratio,edge_ratio"),
                &rows,
            )?;
            Ok(rep.holds)
        }

        Command::Certify {
            graph,
            table,
            sigma,
            v,
            n_per_edge,
            tol,
            cap,
        } => {
            let mut g = read_graph(graph)?;
            if let Some(arg) = cap {
                let ids: Result<Vec<usize>, QgError> = arg
                    .split(',')
                    .map(|id| g.vertex_index(id.trim()))
                    .collect();
                g.set_dirichlet_caps(ids?)?;
            }
            let df = distance_field(&g)?;
            let u = parse_function_table(&g, &read_text(table)?)?;
            let potential = parse_potential(v, &g, &df)?;
            let mesh = discretize(&g, *n_per_edge)?;
            let rep = check_supersolution(&g, &mesh, &potential, *sigma, &u, *tol);
            if cli.json {
                println!("{}", serde_json::to_string_pretty(&rep).unwrap());
            } else {
                println!("max edge residual:   {}", fnum(rep.max_edge_residual));
                println!("max vertex residual: {}", fnum(rep.max_vertex_residual));
                println!("max |flux|:          {}", fnum(rep.max_kirchhoff));
                println!("edge nodes checked:  {}", rep.edge_nodes_checked);
                println!("vertices checked:    {}", rep.vertices_checked);
                println!(
                    "verdict:             {}",
                    if rep.is_supersolution { "PASS" } else { "FAIL" }
                );
            }
            let rows = vec![
                vec!["max_edge_residual".into(), fnum(rep.max_edge_residual)],
                vec!["max_vertex_residual".into(), fnum(rep.max_vertex_residual)],
                vec!["max_kirchhoff".into(), fnum(rep.max_kirchhoff)],
                vec!["edge_pass".into(), rep.edge_pass.to_string()],
                vec!["vertex_pass".into(), rep.vertex_pass.to_string()],
                vec!["kirchhoff_pass".into(), rep.kirchhoff_pass.to_string()],
                vec!["is_supersolution".into(), rep.is_supersolution.to_string()],
            ];
            maybe_csv(&cli.out, Some("field,value"), &rows)?;
            Ok(rep.is_supersolution)
        }

        Command::Solve {
            graph,
            r,
            sigma,
            v,
            bv,
            n_per_edge,
            cap,
        } => {
            let mut g = read_graph(graph)?;
            if let Some(arg) = cap {
                let ids: Result<Vec<usize>, QgError> = arg
                    .split(',')
                    .map(|id| g.vertex_index(id.trim()))
                    .collect();
                g.set_dirichlet_caps(ids?)?;
            }
            let g = g;
            let df = distance_field(&g)?;
            let potential = parse_potential(v, &g, &df)?;
            let sol = solve_truncated(
                &g,
                &df,
                *r,
                &potential,
                *sigma,
                *bv,
                *n_per_edge,
                &NewtonOptions::default(),
            )?;
            let core = sol.core_sup(&g, &df, 2.0);
            let mass = sol.mass(&g, &potential, *sigma);
            if cli.json {
                let j = json!({
                    "core_sup": core,
                    "mass": mass,
                    "iterations": sol.iterations,
                    "residual": sol.residual,
                    "n_nodes": sol.values.len(),
                });
                println!("{}", serde_json::to_string_pretty(&j).unwrap());
            } else {
                println!("nodes:      {}", sol.values.len());
                println!("iterations: {}", sol.iterations);
                println!("residual:   {}", fnum(sol.residual));
                println!("core sup:   {}", fnum(core));
                println!("mass:       {}", fnum(mass));
            }
            // the CSV doubles as a function table: v:<id> / e:<id>:<x> rows
            let mut rows: Vec<Vec<String>> = Vec::new();
            for (k, loc) in sol.mesh.node_loc.iter().enumerate() {
                let key = match *loc {
                    NodeLoc::Vertex(vi) => format!("v:{}", g.vertex_id(vi)),
                    NodeLoc::Edge(e, x) => format!("e:{}:{}", g.edge_id(e), fnum(x)),
                };
                rows.push(vec![key, fnum(sol.values[k])]);
            }
            rows.sort();
            maybe_csv(&cli.out, None, &rows)?;
            Ok(true)
        }

        Command::Probe {
            family,
            v,
            sigma,
            bv,
            radii,
            n_per_edge,
        } => {
            let r_list = parse_radii(radii)?;
            let pot = parse_radial_potential(v)?;
            let fam = match family {
                ProbeFamilyArg::Path => ProbeFamily::Path,
                ProbeFamilyArg::Tree => ProbeFamily::BinaryTree,
            };
            let table = liouville_probe(
                fam,
                move |d| pot(d),
                *sigma,
                &r_list,
                *bv,
                *n_per_edge,
                &NewtonOptions::default(),
            )?;
            let ok = table.rows.iter().all(|row| row.error.is_none());
            let header = "R,core_sup,mass,iterations,residual,n_nodes,error";
            if cli.json {
                println!("{}", serde_json::to_string_pretty(&table).unwrap());
            } else {
                println!("{header}");
                for row in &table.rows {
                    println!(
                        "{},{},{},{},{},{},{}",
                        fnum(row.r),
                        fnum(row.core_sup),
                        fnum(row.mass),
                        row.iterations,
                        fnum(row.residual),
                        row.n_nodes,
                        row.error.clone().unwrap_or_default()
                    );
                }
            }
            let rows: Vec<Vec<String>> = table
                .rows
                .iter()
                .map(|row| {
                    vec![
                        fnum(row.r),
                        fnum(row.core_sup),
                        fnum(row.mass),
                        row.iterations.to_string(),
                        fnum(row.residual),
                        row.n_nodes.to_string(),
                        row.error.clone().unwrap_or_default(),
                    ]
                })
                .collect();
            maybe_csv(&cli.out, Some(header), &rows)?;
            Ok(ok)
        }

        Command::ChainCheck {
            graph,
            table,
            mode,
            sigma,
            r,
            s,
            delta,
            v,
            panels,
        } => {
            let g = read_graph(graph)?;
            let df = distance_field(&g)?;
            let mdf = modified_distance(&g, &df, &Mollifier::quintic());
            let u = parse_function_table(&g, &read_text(table)?)?;
            let potential = parse_potential(v, &g, &df)?;
            let rule = QuadratureRule::Simpson { panels: *panels };
            let (rep, holder) = match mode {
                ChainModeArg::Compact => (
                    apriori_check_compact(&g, &mdf, &u, &potential, *sigma, *r, *s, rule)?,
                    holder_chain_check(
                        &g, &mdf, &u, &potential, *sigma, *r, *s, ChainMode::Compact, rule,
                    )?,
                ),
                ChainModeArg::Weighted => (
                    apriori_check_weighted(&g, &mdf, &u, &potential, *sigma, *r, *delta, rule)?,
                    holder_chain_check(
                        &g, &mdf, &u, &potential, *sigma, *r, *delta, ChainMode::Weighted, rule,
                    )?,
                ),
            };
            let pass = rep.all_pass && holder.all_pass;
            if cli.json {
                let j = json!({"chain": rep, "holder": holder, "pass": pass});
                println!("{}", serde_json::to_string_pretty(&j).unwrap());
            } else {
                println!("chain: {} (certified input: {})", rep.chain, rep.certified);
                println!("line,lhs,rhs,slack,pass");
                for line in rep.lines.iter().chain(holder.lines.iter()) {
                    println!(
                        "{},{},{},{},{}",
                        line.label,
                        fnum(line.lhs),
                        fnum(line.rhs),
                        fnum(line.slack),
                        line.pass
                    );
                }
                for note in rep.notes.iter().chain(holder.notes.iter()) {
                    println!("note: {note}");
                }
                println!("tolerance budget: {}", fnum(rep.tol));
                println!("verdict: {}", if pass { "PASS" } else { "FAIL" });
            }
            let rows: Vec<Vec<String>> = rep
                .lines
                .iter()
                .chain(holder.lines.iter())
                .map(|line| {
                    vec![
                        line.label.clone(),
                        fnum(line.lhs),
                        fnum(line.rhs),
                        fnum(line.slack),
                        line.pass.to_string(),
                    ]
                })
                .collect();
            maybe_csv(&cli.out, Some("line,lhs,rhs,slack,pass"), &rows)?;
            Ok(pass)
        }
    }
}
