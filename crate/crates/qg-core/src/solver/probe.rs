//! Liouville probes: solve the truncated absorption problem on balls of
//! growing radius with constant boundary data and track the solution's
//! size near the base. On domains where the nonexistence mechanism is
//! active the core values collapse as the radius grows; a stabilizing
//! positive core signals a genuine bounded solution in the limit.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{QgError, Result};
use crate::func::{EdgeEval, GraphFunction};
use crate::generators;
use crate::geodesics::{distance_field, DistanceField, EdgeCase};
use crate::graph::MetricGraph;

use super::{solve_on_mesh, solve_truncated, MeshBuilder, NewtonOptions, NodeLoc};

const TOL: f64 = 1e-12;

/// Graph family probed over the radius sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum ProbeFamily {
    /// Half-line of unit edges.
    Path,
    /// Infinite binary tree of unit edges, solved on its radial quotient.
    BinaryTree,
}

impl ProbeFamily {
    pub fn name(&self) -> &'static str {
        match self {
            ProbeFamily::Path => "path",
            ProbeFamily::BinaryTree => "binary-tree",
        }
    }
}

/// Outcome of one truncated solve. A failed radius carries its error
/// message instead of aborting the sweep.
#[derive(Debug, Clone, Serialize)]
pub struct ProbeRow {
    pub r: f64,
    /// Largest `|u|` within the core `{d <= core_radius}`.
    pub core_sup: f64,
    /// `int V |u|^sigma dmu` over the meshed ball (tree rows count every
    /// branch through its multiplicity).
    pub mass: f64,
    pub iterations: usize,
    pub residual: f64,
    pub n_nodes: usize,
    pub error: Option<String>,
}

/// Radius sweep of truncated solves on one family.
#[derive(Debug, Clone, Serialize)]
pub struct ProbeTable {
    pub family: String,
    pub sigma: f64,
    pub boundary_value: f64,
    pub core_radius: f64,
    pub rows: Vec<ProbeRow>,
}

/// Builds the radial potential `V(x) = v(d(x))` as a graph function, with
/// a breakpoint at each interior distance peak.
pub fn radial_potential<F>(g: &MetricGraph, df: &DistanceField, v_of_d: F) -> GraphFunction
where
    F: Fn(f64) -> f64 + Send + Sync + Clone + 'static,
{
    let vertex_values = (0..g.n_vertices())
        .map(|v| v_of_d(df.vertex_dist[v]))
        .collect();
    let mut breakpoints = vec![Vec::new(); g.n_edges()];
    let edges = (0..g.n_edges())
        .map(|e| {
            let di = df.vertex_dist[g.from(e)];
            let dj = df.vertex_dist[g.to(e)];
            let l = g.length(e);
            if let EdgeCase::Peak(q) = df.edge_case[e] {
                breakpoints[e].push(q);
            }
            let f = v_of_d.clone();
            EdgeEval::analytic(move |x| f((di + x).min(dj + l - x)))
        })
        .collect();
    GraphFunction::from_parts(vertex_values, edges, breakpoints)
}

fn probe_path<F>(
    v_of_d: &F,
    sigma: f64,
    r: f64,
    boundary_value: f64,
    n_per_edge: usize,
    opts: &NewtonOptions,
    core_radius: f64,
) -> Result<ProbeRow>
where
    F: Fn(f64) -> f64 + Send + Sync + Clone + 'static,
{
    if !(r > 0.0) || !r.is_finite() {
        return Err(QgError::InvalidArgument(format!(
            "probe radius must be positive, got {r}"
        )));
    }
    let g = generators::path(r.ceil() as usize + 1)?;
    let df = distance_field(&g)?;
    let potential = radial_potential(&g, &df, v_of_d.clone());
    let sol = solve_truncated(&g, &df, r, &potential, sigma, boundary_value, n_per_edge, opts)?;
    Ok(ProbeRow {
        r,
        core_sup: sol.core_sup(&g, &df, core_radius),
        mass: sol.mass(&g, &potential, sigma),
        iterations: sol.iterations,
        residual: sol.residual,
        n_nodes: sol.mesh.n_nodes(),
        error: None,
    })
}

/// Solves the ball problem on the infinite `b`-ary tree through its radial
/// quotient: one representative vertex per depth, with the child edges of
/// each level entering the representative's equation at multiplicity `b`.
/// The reported mass counts every branch of the full tree.
fn probe_tree_quotient<F>(
    b: usize,
    v_of_d: &F,
    sigma: f64,
    r: f64,
    boundary_value: f64,
    n_per_edge: usize,
    opts: &NewtonOptions,
    core_radius: f64,
) -> Result<ProbeRow>
where
    F: Fn(f64) -> f64 + Send + Sync + Clone + 'static,
{
    if !(r > 0.0) || !r.is_finite() {
        return Err(QgError::InvalidArgument(format!(
            "probe radius must be positive, got {r}"
        )));
    }
    let whole = r.floor() as usize;
    let frac = r - whole as f64;
    let bf = b as f64;
    // quotient geometry: a path whose coordinate is the tree depth
    let g_q = generators::path(whole + 1)?;
    let mut mb = MeshBuilder::new(g_q.n_vertices());
    // a cut within half a cell of the last representative would leave a
    // sliver cell; snap the boundary onto the vertex instead
    let boundary_at_vertex = frac * n_per_edge as f64 <= 0.5;
    for k in 0..=whole {
        mb.vertex(k, boundary_at_vertex && k == whole);
    }
    for k in 0..whole {
        let left = mb.vertex_node[k].unwrap();
        let right = mb.vertex_node[k + 1].unwrap();
        mb.run(k, 0.0, 1.0, n_per_edge, left, right, bf);
    }
    if !boundary_at_vertex {
        let left = mb.vertex_node[whole].unwrap();
        let cut = mb.add_node(NodeLoc::Edge(whole, frac), true);
        let n_i = ((n_per_edge as f64 * frac).round() as usize).max(1);
        mb.run(whole, 0.0, frac, n_i, left, cut, bf);
    }
    let mesh = mb.finish();

    let vertex_values = (0..g_q.n_vertices())
        .map(|k| v_of_d(k as f64))
        .collect();
    let edges = (0..g_q.n_edges())
        .map(|e| {
            let f = v_of_d.clone();
            EdgeEval::analytic(move |x| f(e as f64 + x))
        })
        .collect();
    let potential =
        GraphFunction::from_parts(vertex_values, edges, vec![Vec::new(); g_q.n_edges()]);

    let sol = solve_on_mesh(
        &g_q,
        &mesh,
        &potential,
        None,
        sigma,
        &move |_, _| boundary_value,
        opts,
    )?;

    let depth_of = |loc: NodeLoc| match loc {
        NodeLoc::Vertex(k) => k as f64,
        NodeLoc::Edge(e, x) => e as f64 + x,
    };
    let core_sup = (0..sol.mesh.n_nodes())
        .filter(|&k| depth_of(sol.mesh.node_loc[k]) <= core_radius + TOL)
        .map(|k| sol.values[k].abs())
        .fold(0.0, f64::max);
    let mut mass = 0.0;
    for (k, loc) in sol.mesh.node_loc.iter().enumerate() {
        if let NodeLoc::Vertex(depth) = *loc {
            mass += bf.powi(depth as i32)
                * v_of_d(depth as f64)
                * sol.values[k].abs().powf(sigma);
        }
    }
    for (level, chain) in &sol.mesh.chains {
        let mult = bf.powi(*level as i32 + 1);
        for w in chain.windows(2) {
            let (x0, k0) = w[0];
            let (x1, k1) = w[1];
            let g0 = v_of_d(*level as f64 + x0) * sol.values[k0].abs().powf(sigma);
            let g1 = v_of_d(*level as f64 + x1) * sol.values[k1].abs().powf(sigma);
            mass += mult * 0.5 * (x1 - x0) * (g0 + g1);
        }
    }
    Ok(ProbeRow {
        r,
        core_sup,
        mass,
        iterations: sol.iterations,
        residual: sol.residual,
        n_nodes: sol.mesh.n_nodes(),
        error: None,
    })
}

/// Runs the truncated-ball sweep over `r_list` (rows solve concurrently,
/// reported in input order). A radius whose solve fails yields a row with
/// the error message; invalid global parameters fail the whole call.
pub fn liouville_probe<F>(
    family: ProbeFamily,
    potential_of_d: F,
    sigma: f64,
    r_list: &[f64],
    boundary_value: f64,
    n_per_edge: usize,
    opts: &NewtonOptions,
) -> Result<ProbeTable>
where
    F: Fn(f64) -> f64 + Send + Sync + Clone + 'static,
{
    if !(sigma > 1.0) || !sigma.is_finite() {
        return Err(QgError::InvalidArgument(format!(
            "exponent must satisfy sigma > 1, got {sigma}"
        )));
    }
    if !(boundary_value >= 0.0) {
        return Err(QgError::InvalidArgument(format!(
            "boundary value must be nonnegative, got {boundary_value}"
        )));
    }
    if r_list.is_empty() {
        return Err(QgError::InvalidArgument(
            "radius sweep must be nonempty".into(),
        ));
    }
    if n_per_edge < 8 {
        return Err(QgError::InvalidArgument(format!(
            "need at least 8 interior nodes per edge, got {n_per_edge}"
        )));
    }
    // unit-edge families: canonical core radius max(2 sup_e l_e, 1) = 2
    let core_radius = 2.0;
    let rows: Vec<ProbeRow> = r_list
        .par_iter()
        .map(|&r| {
            let run = match family {
                ProbeFamily::Path => probe_path(
                    &potential_of_d,
                    sigma,
                    r,
                    boundary_value,
                    n_per_edge,
                    opts,
                    core_radius,
                ),
                ProbeFamily::BinaryTree => probe_tree_quotient(
                    2,
                    &potential_of_d,
                    sigma,
                    r,
                    boundary_value,
                    n_per_edge,
                    opts,
                    core_radius,
                ),
            };
            run.unwrap_or_else(|e| ProbeRow {
                r,
                core_sup: f64::NAN,
                mass: f64::NAN,
                iterations: 0,
                residual: f64::NAN,
                n_nodes: 0,
                error: Some(e.to_string()),
            })
        })
        .collect();
    Ok(ProbeTable {
        family: family.name().to_string(),
        sigma,
        boundary_value,
        core_radius,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::discretize_ball;

    #[test]
    fn quotient_matches_the_full_tree_solve() {
        // the radial quotient at R = 4 must reproduce the full binary-tree
        // ball solve node for node (the discrete systems coincide on the
        // symmetric subspace)
        let sigma = 2.0;
        let bv = 1.0;
        let opts = NewtonOptions::default();
        let quotient = probe_tree_quotient(2, &|_| 1.0, sigma, 4.0, bv, 8, &opts, 2.0).unwrap();

        let g = generators::tree(2, 5).unwrap();
        let df = distance_field(&g).unwrap();
        let one = GraphFunction::constant(&g, 1.0);
        let mesh = discretize_ball(&g, &df, 4.0, 8).unwrap();
        let sol = solve_on_mesh(&g, &mesh, &one, None, sigma, &move |_, _| bv, &opts).unwrap();
        let full_core = sol.core_sup(&g, &df, 2.0);
        assert!(
            (quotient.core_sup - full_core).abs() < 1e-8,
            "quotient {} vs full {}",
            quotient.core_sup,
            full_core
        );
        // root values agree as well
        let root = sol.mesh.vertex_node[df
            .vertex_dist
            .iter()
            .position(|&d| d == 0.0)
            .unwrap()]
        .unwrap();
        let q_sol = probe_tree_quotient(2, &|_| 1.0, sigma, 4.0, bv, 8, &opts, 0.0).unwrap();
        assert!((q_sol.core_sup - sol.values[root].abs()).abs() < 1e-8);
    }

    #[test]
    fn path_core_collapses_as_the_ball_grows() {
        // on the half-line the blow-up barrier forces the core value down
        // like 1/R^2 as the truncation radius grows
        let table = liouville_probe(
            ProbeFamily::Path,
            |_| 1.0,
            2.0,
            &[4.0, 8.0, 16.0],
            1.0,
            8,
            &NewtonOptions::default(),
        )
        .unwrap();
        assert_eq!(table.rows.len(), 3);
        for row in &table.rows {
            assert!(row.error.is_none(), "row {:?}", row);
            assert!(row.residual <= 1e-10);
        }
        let sups: Vec<f64> = table.rows.iter().map(|r| r.core_sup).collect();
        for w in sups.windows(2) {
            assert!(w[1] < w[0], "not decreasing: {sups:?}");
        }
        assert!(sups[2] < 0.5 * sups[0], "weak drop: {sups:?}");
    }

    #[test]
    fn tree_core_also_collapses_as_the_ball_grows() {
        // measured fact: the binary tree shows the same ~1/R core decay as
        // the path under this probe, despite its exponential volume growth
        let table = liouville_probe(
            ProbeFamily::BinaryTree,
            |_| 1.0,
            2.0,
            &[4.0, 8.0, 16.0],
            1.0,
            8,
            &NewtonOptions::default(),
        )
        .unwrap();
        let sups: Vec<f64> = table.rows.iter().map(|r| r.core_sup).collect();
        for w in sups.windows(2) {
            assert!(w[1] < 0.65 * w[0], "no collapse: {sups:?}");
        }
    }

    #[test]
    fn fractional_radius_cuts_inside_an_edge() {
        let row = probe_tree_quotient(
            2,
            &|_| 1.0,
            2.0,
            3.5,
            1.0,
            8,
            &NewtonOptions::default(),
            2.0,
        )
        .unwrap();
        assert!(row.error.is_none());
        assert!(row.core_sup > 0.0 && row.core_sup < 1.0);
    }

    #[test]
    fn bad_rows_report_errors_without_aborting_the_sweep() {
        let table = liouville_probe(
            ProbeFamily::Path,
            |_| 1.0,
            2.0,
            &[4.0, -1.0],
            1.0,
            8,
            &NewtonOptions::default(),
        )
        .unwrap();
        assert!(table.rows[0].error.is_none());
        assert!(table.rows[1].error.is_some());
        assert!(table.rows[1].core_sup.is_nan());
    }

    #[test]
    fn global_parameter_errors_fail_the_call() {
        let opts = NewtonOptions::default();
        assert!(liouville_probe(ProbeFamily::Path, |_| 1.0, 0.5, &[4.0], 1.0, 8, &opts).is_err());
        assert!(liouville_probe(ProbeFamily::Path, |_| 1.0, 2.0, &[], 1.0, 8, &opts).is_err());
        assert!(
            liouville_probe(ProbeFamily::Path, |_| 1.0, 2.0, &[4.0], -1.0, 8, &opts).is_err()
        );
    }
}
