//! Finite-volume discretization of the semilinear problem on the graph or
//! on truncated balls, with a damped Newton iteration over a deterministic
//! sparse direct solve.
//!
//! The discrete unknowns live at vertices and at uniformly spaced interior
//! edge nodes. Every non-boundary node carries the same equation
//! `(1/m) sum_k w_k (u_k - u) - V u_+^sigma + f = 0`: at interior edge
//! nodes this is the central difference for `u'' = V u_+^sigma - f`, and at
//! vertices it is the flux (Kirchhoff) closure over the incident half
//! cells. The pointwise vertex-Laplacian inequality is *not* imposed by the
//! solve; it is reported after the fact by the certificate checker.

pub mod certify;
pub mod chains;
pub mod probe;

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::Serialize;

use crate::balls::ball_and_annulus;
use crate::error::{QgError, Result};
use crate::func::{EdgeEval, GraphFunction};
use crate::geodesics::DistanceField;
use crate::graph::MetricGraph;

pub use certify::{check_supersolution, CertificateReport};
pub use chains::{
    apriori_check_compact, apriori_check_weighted, holder_chain_check, ChainLine, ChainMode,
    ChainReport,
};
pub use probe::{liouville_probe, radial_potential, ProbeFamily, ProbeRow, ProbeTable};

const GEOM_TOL: f64 = 1e-12;

/// Where a mesh node lives on the graph.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum NodeLoc {
    Vertex(usize),
    /// Edge index and coordinate in `(0, l_e)` (cut nodes included).
    Edge(usize, f64),
}

/// Finite-volume mesh over the whole graph or a sub-domain of it.
#[derive(Debug, Clone)]
pub struct Mesh {
    pub node_loc: Vec<NodeLoc>,
    /// Per node: `(neighbor, w)` with conductance `w = 1/h` (scaled by the
    /// branch multiplicity on quotient meshes).
    pub adj: Vec<Vec<(usize, f64)>>,
    /// Finite-volume cell size of each node.
    pub measure: Vec<f64>,
    /// Nodes carrying Dirichlet data instead of an equation.
    pub boundary: Vec<bool>,
    /// Graph vertex -> mesh node (when the vertex is in the domain).
    pub vertex_node: Vec<Option<usize>>,
    /// Covered edge runs: `(edge, [(coord, node), ...])` ascending,
    /// including both run endpoints.
    pub chains: Vec<(usize, Vec<(f64, usize)>)>,
    pub h_max: f64,
}

impl Mesh {
    pub fn n_nodes(&self) -> usize {
        self.node_loc.len()
    }

    /// Base distance of a node's location.
    pub fn node_distance(&self, g: &MetricGraph, df: &DistanceField, k: usize) -> f64 {
        match self.node_loc[k] {
            NodeLoc::Vertex(v) => df.vertex_dist[v],
            NodeLoc::Edge(e, x) => df.dist_on_edge(g, e, x).unwrap_or(f64::INFINITY),
        }
    }
}

struct MeshBuilder {
    node_loc: Vec<NodeLoc>,
    adj: Vec<Vec<(usize, f64)>>,
    measure: Vec<f64>,
    boundary: Vec<bool>,
    vertex_node: Vec<Option<usize>>,
    chains: Vec<(usize, Vec<(f64, usize)>)>,
    h_max: f64,
}

impl MeshBuilder {
    fn new(n_vertices: usize) -> Self {
        MeshBuilder {
            node_loc: Vec::new(),
            adj: Vec::new(),
            measure: Vec::new(),
            boundary: Vec::new(),
            vertex_node: vec![None; n_vertices],
            chains: Vec::new(),
            h_max: 0.0,
        }
    }

    fn add_node(&mut self, loc: NodeLoc, boundary: bool) -> usize {
        let k = self.node_loc.len();
        self.node_loc.push(loc);
        self.adj.push(Vec::new());
        self.measure.push(0.0);
        self.boundary.push(boundary);
        k
    }

    fn vertex(&mut self, v: usize, boundary: bool) -> usize {
        if let Some(k) = self.vertex_node[v] {
            return k;
        }
        let k = self.add_node(NodeLoc::Vertex(v), boundary);
        self.vertex_node[v] = Some(k);
        k
    }

    /// Demotes an already-registered node to a Dirichlet boundary node.
    fn force_boundary(&mut self, k: usize) {
        self.boundary[k] = true;
    }

    fn link(&mut self, a: usize, b: usize, w: f64) {
        self.adj[a].push((b, w));
        self.adj[b].push((a, w));
    }

    /// Lays `n_interior` uniformly spaced nodes over `[lo, hi]` of edge `e`
    /// between the endpoint nodes `left` and `right`. On a radial quotient
    /// mesh `mult` is the branch multiplicity of this run as seen from its
    /// left end: the left node's conductance toward the run and its
    /// half-cell are scaled by `mult`, while all nodes along and right of
    /// the run see plain `1/h` weights. Plain meshes pass 1.0.
    fn run(
        &mut self,
        e: usize,
        lo: f64,
        hi: f64,
        n_interior: usize,
        left: usize,
        right: usize,
        mult: f64,
    ) {
        let h = (hi - lo) / (n_interior + 1) as f64;
        self.h_max = self.h_max.max(h);
        let mut chain = vec![(lo, left)];
        let mut prev = left;
        for i in 1..=n_interior {
            let x = lo + h * i as f64;
            let k = self.add_node(NodeLoc::Edge(e, x), false);
            self.measure[k] = h;
            if prev == left {
                self.adj[prev].push((k, mult / h));
                self.adj[k].push((prev, 1.0 / h));
            } else {
                self.link(prev, k, 1.0 / h);
            }
            chain.push((x, k));
            prev = k;
        }
        if prev == left {
            self.adj[left].push((right, mult / h));
            self.adj[right].push((left, 1.0 / h));
        } else {
            self.link(prev, right, 1.0 / h);
        }
        chain.push((hi, right));
        self.measure[left] += mult * h / 2.0;
        self.measure[right] += h / 2.0;
        self.chains.push((e, chain));
    }

    fn finish(self) -> Mesh {
        Mesh {
            node_loc: self.node_loc,
            adj: self.adj,
            measure: self.measure,
            boundary: self.boundary,
            vertex_node: self.vertex_node,
            chains: self.chains,
            h_max: self.h_max,
        }
    }
}

/// Uniform mesh over the whole graph with `n_per_edge >= 8` interior nodes
/// per edge. Dirichlet boundary nodes are exactly the graph's capped
/// vertices.
pub fn discretize(g: &MetricGraph, n_per_edge: usize) -> Result<Mesh> {
    if n_per_edge < 8 {
        return Err(QgError::InvalidArgument(format!(
            "need at least 8 interior nodes per edge, got {n_per_edge}"
        )));
    }
    let mut b = MeshBuilder::new(g.n_vertices());
    for v in 0..g.n_vertices() {
        b.vertex(v, g.is_capped(v));
    }
    for e in 0..g.n_edges() {
        let (left, right) = (b.vertex_node[g.from(e)], b.vertex_node[g.to(e)]);
        b.run(
            e,
            0.0,
            g.length(e),
            n_per_edge,
            left.unwrap(),
            right.unwrap(),
            1.0,
        );
    }
    Ok(b.finish())
}

/// Mesh over the metric ball of radius `r`: vertices strictly inside keep
/// their equations, while vertices at distance exactly `r` and interior cut
/// points become Dirichlet boundary nodes. Capped vertices inside the ball
/// stay Dirichlet.
pub fn discretize_ball(
    g: &MetricGraph,
    df: &DistanceField,
    r: f64,
    n_per_edge: usize,
) -> Result<Mesh> {
    if n_per_edge < 8 {
        return Err(QgError::InvalidArgument(format!(
            "need at least 8 interior nodes per edge, got {n_per_edge}"
        )));
    }
    let (ball, _) = ball_and_annulus(g, df, r)?;
    let inside: BTreeSet<usize> = ball.vertices.iter().copied().collect();
    let mut b = MeshBuilder::new(g.n_vertices());
    for &v in &ball.vertices {
        b.vertex(v, g.is_capped(v));
    }
    // merge ball intervals that meet at an interior distance peak
    let mut per_edge: BTreeMap<usize, Vec<(f64, f64)>> = BTreeMap::new();
    for &(e, lo, hi) in &ball.intervals {
        per_edge.entry(e).or_default().push((lo, hi));
    }
    for (&e, runs) in per_edge.iter_mut() {
        runs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::new();
        for &(lo, hi) in runs.iter() {
            if let Some(last) = merged.last_mut() {
                if lo - last.1 <= GEOM_TOL {
                    last.1 = hi;
                    continue;
                }
            }
            merged.push((lo, hi));
        }
        let l = g.length(e);
        // A cut landing within half a regular cell of a vertex would leave
        // a sliver cell whose conductance dwarfs the rest of the system and
        // stalls the iteration at its rounding floor; absorb such runs by
        // moving the Dirichlet condition onto the vertex itself.
        let snap = 0.5 * l / n_per_edge as f64;
        for &(lo, hi) in &merged {
            let at_from = lo <= GEOM_TOL;
            let at_to = hi >= l - GEOM_TOL;
            if hi - lo < snap && at_from != at_to {
                let v = if at_from { g.from(e) } else { g.to(e) };
                let k = b.vertex(v, true);
                b.force_boundary(k);
                continue;
            }
            let left = if lo <= GEOM_TOL {
                let v = g.from(e);
                b.vertex(v, !inside.contains(&v) || g.is_capped(v))
            } else {
                b.add_node(NodeLoc::Edge(e, lo), true)
            };
            let right = if hi >= l - GEOM_TOL {
                let v = g.to(e);
                b.vertex(v, !inside.contains(&v) || g.is_capped(v))
            } else {
                b.add_node(NodeLoc::Edge(e, hi), true)
            };
            let frac = (hi - lo) / l;
            let n_i = ((n_per_edge as f64 * frac).round() as usize).max(1);
            b.run(e, lo, hi, n_i, left, right, 1.0);
        }
    }
    let mesh = b.finish();
    if mesh.n_nodes() == 0 {
        return Err(QgError::InvalidArgument(format!(
            "ball of radius {r} contains no mesh nodes"
        )));
    }
    Ok(mesh)
}

/// Options for the damped Newton iteration.
#[derive(Debug, Clone, Serialize)]
pub struct NewtonOptions {
    pub max_iters: usize,
    pub tol: f64,
    pub min_step: f64,
    /// Starting value for all non-Dirichlet unknowns; defaults to the mean
    /// of the Dirichlet data.
    pub initial: Option<f64>,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            max_iters: 50,
            tol: 1e-10,
            min_step: 1e-6,
            initial: None,
        }
    }
}

/// Deterministic sparse Gaussian elimination with minimum-degree diagonal
/// pivoting (ties broken by lowest index). Rows are maps column -> value.
pub(crate) fn sparse_solve(
    mut rows: Vec<BTreeMap<usize, f64>>,
    mut rhs: Vec<f64>,
) -> Result<Vec<f64>> {
    let n = rows.len();
    let mut in_col: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for (i, row) in rows.iter().enumerate() {
        for &j in row.keys() {
            in_col[j].insert(i);
        }
    }
    let mut eliminated = vec![false; n];
    let mut order = Vec::with_capacity(n);
    for _ in 0..n {
        // pick the uneliminated variable whose row is sparsest
        let mut best: Option<(usize, usize)> = None;
        for k in 0..n {
            if eliminated[k] {
                continue;
            }
            let deg = rows[k].len();
            if best.map(|(d, _)| deg < d).unwrap_or(true) {
                best = Some((deg, k));
            }
        }
        let (_, p) = best.ok_or_else(|| QgError::LinearSolve("empty system".into()))?;
        let pivot = *rows[p]
            .get(&p)
            .ok_or_else(|| QgError::LinearSolve(format!("missing diagonal at {p}")))?;
        if pivot.abs() < 1e-300 {
            return Err(QgError::LinearSolve(format!("zero pivot at {p}")));
        }
        let pivot_row: Vec<(usize, f64)> = rows[p].iter().map(|(&j, &v)| (j, v)).collect();
        let users: Vec<usize> = in_col[p].iter().copied().filter(|&r| r != p).collect();
        for r in users {
            if eliminated[r] {
                continue;
            }
            let factor = match rows[r].remove(&p) {
                Some(v) => v / pivot,
                None => continue,
            };
            in_col[p].remove(&r);
            for &(j, v) in &pivot_row {
                if j == p {
                    continue;
                }
                let entry = rows[r].entry(j).or_insert(0.0);
                *entry -= factor * v;
                in_col[j].insert(r);
            }
            rhs[r] -= factor * rhs[p];
        }
        eliminated[p] = true;
        order.push(p);
    }
    let mut x = vec![0.0; n];
    for &p in order.iter().rev() {
        let mut acc = rhs[p];
        let mut diag = 0.0;
        for (&j, &v) in rows[p].iter() {
            if j == p {
                diag = v;
            } else {
                acc -= v * x[j];
            }
        }
        x[p] = acc / diag;
    }
    Ok(x)
}

fn relu_pow(u: f64, p: f64) -> f64 {
    if u <= 0.0 {
        0.0
    } else {
        u.powf(p)
    }
}

fn sample_potential(mesh: &Mesh, f: &GraphFunction) -> Vec<f64> {
    mesh.node_loc
        .iter()
        .map(|loc| match *loc {
            NodeLoc::Vertex(v) => f.vertex(v),
            NodeLoc::Edge(e, x) => f.value(e, x),
        })
        .collect()
}

/// Nonlinear solution on a mesh.
#[derive(Debug, Clone)]
pub struct Solution {
    pub mesh: Mesh,
    pub values: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

impl Solution {
    /// Largest `|u|` over nodes within the given base distance.
    pub fn core_sup(&self, g: &MetricGraph, df: &DistanceField, radius: f64) -> f64 {
        (0..self.mesh.n_nodes())
            .filter(|&k| self.mesh.node_distance(g, df, k) <= radius + GEOM_TOL)
            .map(|k| self.values[k].abs())
            .fold(0.0, f64::max)
    }

    /// `int V |u|^sigma dmu_G` over the meshed domain: exact point masses
    /// at vertices plus the trapezoid rule along each covered edge run.
    pub fn mass(&self, g: &MetricGraph, potential: &GraphFunction, sigma: f64) -> f64 {
        let mut total = 0.0;
        for (k, loc) in self.mesh.node_loc.iter().enumerate() {
            if let NodeLoc::Vertex(v) = *loc {
                total += g.mu(v) * potential.vertex(v) * self.values[k].abs().powf(sigma);
            }
        }
        for (e, chain) in &self.mesh.chains {
            for w in chain.windows(2) {
                let (x0, k0) = w[0];
                let (x1, k1) = w[1];
                let g0 = potential.value(*e, x0) * self.values[k0].abs().powf(sigma);
                let g1 = potential.value(*e, x1) * self.values[k1].abs().powf(sigma);
                total += 0.5 * (x1 - x0) * (g0 + g1);
            }
        }
        total
    }

    /// Piecewise-linear graph function through the node values; parts of
    /// the graph not covered by the mesh evaluate to `fill`.
    pub fn to_function(&self, g: &MetricGraph, fill: f64) -> GraphFunction {
        let mut vertex_values = vec![fill; g.n_vertices()];
        for (val, node) in vertex_values.iter_mut().zip(&self.mesh.vertex_node) {
            if let Some(k) = node {
                *val = self.values[*k];
            }
        }
        let mut samples: Vec<Vec<(f64, f64)>> = vec![Vec::new(); g.n_edges()];
        for (e, chain) in &self.mesh.chains {
            for &(x, k) in chain {
                samples[*e].push((x, self.values[k]));
            }
        }
        let mut edges = Vec::with_capacity(g.n_edges());
        let mut breakpoints = Vec::with_capacity(g.n_edges());
        for (e, s) in samples.iter_mut().enumerate() {
            let l = g.length(e);
            s.sort_by(|a, b| a.0.total_cmp(&b.0));
            s.dedup_by(|a, b| (a.0 - b.0).abs() <= GEOM_TOL);
            if s.first().map(|p| p.0 > GEOM_TOL).unwrap_or(true) {
                s.insert(0, (0.0, fill));
            }
            if s.last().map(|p| p.0 < l - GEOM_TOL).unwrap_or(true) {
                s.push((l, fill));
            }
            let xs: Vec<f64> = s.iter().map(|p| p.0).collect();
            let ys: Vec<f64> = s.iter().map(|p| p.1).collect();
            breakpoints.push(xs[1..xs.len() - 1].to_vec());
            edges.push(EdgeEval::Samples { xs, ys });
        }
        GraphFunction::from_parts(vertex_values, edges, breakpoints)
    }
}

/// Solves `(1/m) sum w (u_k - u) - V u_+^sigma + f = 0` on the mesh with
/// Dirichlet data from `bv`, by damped Newton from a constant start.
pub fn solve_on_mesh(
    g: &MetricGraph,
    mesh: &Mesh,
    potential: &GraphFunction,
    forcing: Option<&GraphFunction>,
    sigma: f64,
    bv: &(dyn Fn(&MetricGraph, NodeLoc) -> f64 + Sync),
    opts: &NewtonOptions,
) -> Result<Solution> {
    if !(sigma > 1.0) {
        return Err(QgError::InvalidArgument(format!(
            "exponent must satisfy sigma > 1, got {sigma}"
        )));
    }
    let n = mesh.n_nodes();
    let v_node = sample_potential(mesh, potential);
    if let Some((k, &bad)) = v_node
        .iter()
        .enumerate()
        .find(|&(k, &v)| !mesh.boundary[k] && !(v > 0.0))
    {
        return Err(QgError::InvalidArgument(format!(
            "potential must be positive at every node; got {bad} at node {k}"
        )));
    }
    let f_node: Vec<f64> = match forcing {
        Some(f) => sample_potential(mesh, f),
        None => vec![0.0; n],
    };
    let dirichlet: Vec<Option<f64>> = (0..n)
        .map(|k| {
            if mesh.boundary[k] {
                Some(bv(g, mesh.node_loc[k]))
            } else {
                None
            }
        })
        .collect();

    let residual = |u: &[f64]| -> Vec<f64> {
        (0..n)
            .into_par_iter()
            .map(|k| match dirichlet[k] {
                Some(val) => u[k] - val,
                None => {
                    let mut flux = 0.0;
                    for &(nb, w) in &mesh.adj[k] {
                        flux += w * (u[nb] - u[k]);
                    }
                    flux / mesh.measure[k] - v_node[k] * relu_pow(u[k], sigma) + f_node[k]
                }
            })
            .collect()
    };
    let jacobian = |u: &[f64]| -> Vec<BTreeMap<usize, f64>> {
        (0..n)
            .into_par_iter()
            .map(|k| {
                let mut row = BTreeMap::new();
                match dirichlet[k] {
                    Some(_) => {
                        row.insert(k, 1.0);
                    }
                    None => {
                        let m = mesh.measure[k];
                        let mut diag = -v_node[k] * sigma * relu_pow(u[k], sigma - 1.0);
                        for &(nb, w) in &mesh.adj[k] {
                            diag -= w / m;
                            *row.entry(nb).or_insert(0.0) += w / m;
                        }
                        *row.entry(k).or_insert(0.0) += diag;
                    }
                }
                row
            })
            .collect()
    };
    let inf_norm = |v: &[f64]| v.iter().fold(0.0f64, |a, &b| a.max(b.abs()));

    let start = opts.initial.unwrap_or_else(|| {
        let vals: Vec<f64> = dirichlet.iter().flatten().copied().collect();
        if vals.is_empty() {
            0.0
        } else {
            vals.iter().sum::<f64>() / vals.len() as f64
        }
    });
    let mut u: Vec<f64> = (0..n)
        .map(|k| dirichlet[k].unwrap_or(start))
        .collect();
    let mut res = residual(&u);
    let mut rnorm = inf_norm(&res);
    let mut iterations = 0;
    while rnorm > opts.tol {
        if iterations >= opts.max_iters {
            return Err(QgError::NewtonDiverged {
                iterations,
                residual: rnorm,
            });
        }
        let neg_res: Vec<f64> = res.iter().map(|r| -r).collect();
        let delta = sparse_solve(jacobian(&u), neg_res)?;
        let mut t = 1.0;
        loop {
            let trial: Vec<f64> = u
                .iter()
                .zip(&delta)
                .map(|(&uk, &dk)| uk + t * dk)
                .collect();
            let trial_res = residual(&trial);
            let trial_norm = inf_norm(&trial_res);
            if trial_norm <= (1.0 - 1e-4 * t) * rnorm {
                u = trial;
                res = trial_res;
                rnorm = trial_norm;
                break;
            }
            t *= 0.5;
            if t < opts.min_step {
                return Err(QgError::NewtonDiverged {
                    iterations,
                    residual: rnorm,
                });
            }
        }
        iterations += 1;
    }
    Ok(Solution {
        mesh: mesh.clone(),
        values: u,
        iterations,
        residual: rnorm,
    })
}

/// Solves the truncated absorption problem `u'' = V u_+^sigma` on the ball
/// of radius `r` with constant Dirichlet data on every cut point and
/// boundary vertex.
pub fn solve_truncated(
    g: &MetricGraph,
    df: &DistanceField,
    r: f64,
    potential: &GraphFunction,
    sigma: f64,
    boundary_value: f64,
    n_per_edge: usize,
    opts: &NewtonOptions,
) -> Result<Solution> {
    if !(boundary_value >= 0.0) {
        return Err(QgError::InvalidArgument(format!(
            "boundary value must be nonnegative, got {boundary_value}"
        )));
    }
    let mesh = discretize_ball(g, df, r, n_per_edge)?;
    solve_on_mesh(
        g,
        &mesh,
        potential,
        None,
        sigma,
        &move |_, _| boundary_value,
        opts,
    )
}

/// One refinement level of the manufactured-solution study.
#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceRow {
    pub n_per_edge: usize,
    pub h_max: f64,
    pub max_error: f64,
    pub max_kirchhoff: f64,
    pub iterations: usize,
}

/// Mesh-refinement study against a closed-form solution.
#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
    /// Error ratios between consecutive refinements (expected near 4).
    pub ratios: Vec<f64>,
    pub second_order: bool,
}

/// Manufactured-solution convergence study on a two-edge path: the exact
/// solution `u* = cos(pi d / 4)` is imposed through the forcing term and
/// Dirichlet data at both path ends, and the discrete error is measured at
/// every node across a sweep of refinements.
pub fn manufactured_convergence(ns: &[usize]) -> Result<ConvergenceReport> {
    let mut g = crate::generators::path(2)?;
    let ends = [g.vertex_index("v0")?, g.vertex_index("v2")?];
    g.set_dirichlet_caps(ends)?;
    let sigma = 2.0;
    let exact = |d: f64| (std::f64::consts::PI * d / 4.0).cos();
    let u_star = |loc: NodeLoc| -> f64 {
        match loc {
            NodeLoc::Vertex(v) => exact(v as f64),
            NodeLoc::Edge(e, x) => exact(e as f64 + x),
        }
    };
    let potential = GraphFunction::constant(&g, 1.0);
    // forcing chosen so that u* solves u'' - V u_+^sigma + f = 0
    let c = (std::f64::consts::PI / 4.0).powi(2);
    let f_of = move |d: f64| {
        let u = exact(d);
        u * u + c * u
    };
    let forcing = GraphFunction::from_parts(
        (0..g.n_vertices()).map(|v| f_of(v as f64)).collect(),
        (0..g.n_edges())
            .map(|e| EdgeEval::analytic(move |x| f_of(e as f64 + x)))
            .collect(),
        vec![Vec::new(); g.n_edges()],
    );

    let mut rows = Vec::new();
    for &n in ns {
        let mesh = discretize(&g, n)?;
        let opts = NewtonOptions {
            initial: Some(0.5),
            ..NewtonOptions::default()
        };
        let sol = solve_on_mesh(
            &g,
            &mesh,
            &potential,
            Some(&forcing),
            sigma,
            &move |_, loc| u_star(loc),
            &opts,
        )?;
        let max_error = (0..mesh.n_nodes())
            .map(|k| (sol.values[k] - u_star(mesh.node_loc[k])).abs())
            .fold(0.0, f64::max);
        let func = sol.to_function(&g, 0.0);
        let kir = crate::calculus::kirchhoff(&g, &func);
        let max_kirchhoff = (0..g.n_vertices())
            .filter(|&v| !g.is_capped(v))
            .map(|v| kir[v].abs())
            .fold(0.0, f64::max);
        rows.push(ConvergenceRow {
            n_per_edge: n,
            h_max: mesh.h_max,
            max_error,
            max_kirchhoff,
            iterations: sol.iterations,
        });
    }
    let ratios: Vec<f64> = rows
        .windows(2)
        .map(|w| w[0].max_error / w[1].max_error)
        .collect();
    let second_order = !ratios.is_empty() && ratios.iter().all(|&r| (3.5..=4.5).contains(&r));
    Ok(ConvergenceReport {
        rows,
        ratios,
        second_order,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators;
    use crate::geodesics::distance_field;
    use nalgebra::{DMatrix, DVector};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn mesh_counts_on_a_path() {
        let g = generators::path(2).unwrap();
        let mesh = discretize(&g, 8).unwrap();
        assert_eq!(mesh.n_nodes(), 2 * 8 + 3);
        assert!((mesh.h_max - 1.0 / 9.0).abs() < 1e-15);
        // no Dirichlet nodes without caps
        assert!(mesh.boundary.iter().all(|&b| !b));
        // total finite-volume measure equals total edge length
        let total: f64 = mesh.measure.iter().sum();
        assert!((total - 2.0).abs() < 1e-12);
    }

    #[test]
    fn mesh_counts_on_a_star() {
        let g = generators::star(3).unwrap();
        let mesh = discretize(&g, 8).unwrap();
        assert_eq!(mesh.n_nodes(), 24 + 4);
    }

    #[test]
    fn too_coarse_mesh_rejected() {
        let g = generators::path(2).unwrap();
        assert!(discretize(&g, 7).is_err());
    }

    #[test]
    fn ball_mesh_cuts_at_the_radius() {
        let g = generators::path(4).unwrap();
        let df = distance_field(&g).unwrap();
        let mesh = discretize_ball(&g, &df, 2.5, 8).unwrap();
        // vertices 0,1,2 inside; cut node on edge 2 at x = 0.5
        let cut: Vec<_> = (0..mesh.n_nodes())
            .filter(|&k| mesh.boundary[k])
            .collect();
        assert_eq!(cut.len(), 1);
        match mesh.node_loc[cut[0]] {
            NodeLoc::Edge(e, x) => {
                assert_eq!(e, 2);
                assert!((x - 0.5).abs() < 1e-12);
            }
            _ => panic!("cut node should sit on an edge"),
        }
        assert!(mesh.vertex_node[4].is_none());
    }

    #[test]
    fn ball_mesh_boundary_vertex_at_exact_radius() {
        let g = generators::path(4).unwrap();
        let df = distance_field(&g).unwrap();
        let mesh = discretize_ball(&g, &df, 2.0, 8).unwrap();
        let k = mesh.vertex_node[2].unwrap();
        assert!(mesh.boundary[k]);
        assert!(mesh.vertex_node[3].is_none());
    }

    #[test]
    fn ball_mesh_merges_through_a_peak() {
        // radius beyond the peak distance: the long parallel edge is fully
        // inside and must be meshed as one run
        let g = generators::parallel_chain(1).unwrap();
        let df = distance_field(&g).unwrap();
        let mesh = discretize_ball(&g, &df, 2.5, 8).unwrap();
        let long = g.edge_index("b1").unwrap();
        let runs: Vec<_> = mesh.chains.iter().filter(|(e, _)| *e == long).collect();
        assert_eq!(runs.len(), 1);
        let chain = &runs[0].1;
        assert!((chain.first().unwrap().0 - 0.0).abs() < 1e-12);
        assert!((chain.last().unwrap().0 - 3.0).abs() < 1e-12);
        assert!(mesh.boundary.iter().all(|&b| !b));
    }

    #[test]
    fn sparse_solve_matches_dense_lu() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for trial in 0..20 {
            let n = 5 + (trial % 11);
            let mut dense = DMatrix::<f64>::zeros(n, n);
            let mut rows: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); n];
            for i in 0..n {
                for j in 0..n {
                    let keep = i == j || rng.gen_bool(0.3);
                    if keep {
                        let v: f64 = rng.gen_range(-1.0..1.0)
                            + if i == j { 4.0 } else { 0.0 };
                        dense[(i, j)] = v;
                        rows[i].insert(j, v);
                    }
                }
            }
            let rhs: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let x = sparse_solve(rows, rhs.clone()).unwrap();
            let lu = dense.lu();
            let y = lu.solve(&DVector::from_vec(rhs)).unwrap();
            for i in 0..n {
                assert!((x[i] - y[i]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn zero_boundary_recovers_zero() {
        let g = generators::path(6).unwrap();
        let df = distance_field(&g).unwrap();
        let one = GraphFunction::constant(&g, 1.0);
        let sol = solve_truncated(&g, &df, 4.0, &one, 2.0, 0.0, 8, &NewtonOptions::default())
            .unwrap();
        assert_eq!(sol.iterations, 0);
        assert!(sol.values.iter().all(|&u| u == 0.0));
    }

    #[test]
    fn single_edge_absorption_is_convex_and_bounded() {
        let g = crate::graph::GraphBuilder::new()
            .vertex("a", 1.0)
            .vertex("b", 1.0)
            .edge("e", "a", "b", 1.0, 1.0)
            .base("a")
            .build()
            .unwrap();
        let mut g = g;
        let caps = [g.vertex_index("a").unwrap(), g.vertex_index("b").unwrap()];
        g.set_dirichlet_caps(caps).unwrap();
        let mesh = discretize(&g, 32).unwrap();
        let one = GraphFunction::constant(&g, 1.0);
        let eps = 0.3;
        let sol = solve_on_mesh(
            &g,
            &mesh,
            &one,
            None,
            2.0,
            &move |_, _| eps,
            &NewtonOptions::default(),
        )
        .unwrap();
        // bounded by the boundary data and nonnegative
        assert!(sol.values.iter().all(|&u| u >= -1e-12 && u <= eps + 1e-12));
        // discrete convexity along the edge chain
        let chain = &sol.mesh.chains[0].1;
        for w in chain.windows(3) {
            let (u0, u1, u2) = (
                sol.values[w[0].1],
                sol.values[w[1].1],
                sol.values[w[2].1],
            );
            assert!(u0 - 2.0 * u1 + u2 >= -1e-12);
        }
    }

    #[test]
    fn truncated_solution_is_nonnegative_and_below_boundary() {
        let g = generators::path(10).unwrap();
        let df = distance_field(&g).unwrap();
        let one = GraphFunction::constant(&g, 1.0);
        let sol =
            solve_truncated(&g, &df, 6.0, &one, 2.0, 1.0, 8, &NewtonOptions::default()).unwrap();
        assert!(sol.residual <= 1e-10);
        assert!(sol.values.iter().all(|&u| (-1e-12..=1.0 + 1e-12).contains(&u)));
        // interior is strictly below the boundary data
        let base = sol.mesh.vertex_node[0].unwrap();
        assert!(sol.values[base] < 0.5);
    }

    #[test]
    fn manufactured_solution_converges_at_second_order() {
        let rep = manufactured_convergence(&[8, 16, 32]).unwrap();
        assert_eq!(rep.rows.len(), 3);
        for r in &rep.ratios {
            assert!((3.5..=4.5).contains(r), "ratios {:?}", rep.ratios);
        }
        assert!(rep.second_order);
        // discrete flux mismatch at the interior vertex shrinks with h
        assert!(rep.rows[2].max_kirchhoff < rep.rows[0].max_kirchhoff);
    }

    #[test]
    fn solution_reconstruction_and_mass() {
        let g = generators::path(4).unwrap();
        let df = distance_field(&g).unwrap();
        let one = GraphFunction::constant(&g, 1.0);
        let sol =
            solve_truncated(&g, &df, 2.5, &one, 2.0, 1.0, 8, &NewtonOptions::default()).unwrap();
        let f = sol.to_function(&g, 1.0);
        // node values reproduced through the samples
        for (e, chain) in &sol.mesh.chains {
            for &(x, k) in chain {
                assert!((f.value(*e, x) - sol.values[k]).abs() < 1e-12);
            }
        }
        let m = sol.mass(&g, &one, 2.0);
        assert!(m > 0.0);
        let sup = sol.core_sup(&g, &df, 2.0);
        assert!(sup <= 1.0 + 1e-12);
    }
}
