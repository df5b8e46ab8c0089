//! The hybrid calculus: vertex and edge measures, the vertex (weighted
//! graph) Laplacian, edge second derivatives, Kirchhoff sums, the pairing
//! of a function against the full Laplacian, and numerical verification of
//! the integration-by-parts identities.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{QgError, Result};
use crate::func::{EdgeEval, GraphFunction};
use crate::graph::MetricGraph;
use crate::quad::{integrate_with_breakpoints, QuadratureRule};

/// `sum_v mu(v) f(v)` — integral against the vertex measure.
pub fn integrate_vertex(g: &MetricGraph, f: &GraphFunction) -> f64 {
    (0..g.n_vertices()).map(|v| g.mu(v) * f.vertex(v)).sum()
}

/// `sum_e int_0^{l_e} f_e dx` — integral against the edge (length) measure,
/// with quadrature panels aligned to the function's breakpoints.
pub fn integrate_edge(g: &MetricGraph, f: &GraphFunction, rule: QuadratureRule) -> f64 {
    let parts: Vec<f64> = (0..g.n_edges())
        .into_par_iter()
        .map(|e| {
            integrate_with_breakpoints(&|x| f.value(e, x), 0.0, g.length(e), &f.breakpoints[e], rule)
        })
        .collect();
    parts.iter().sum()
}

/// Integral over the whole graph: vertex part plus edge part.
pub fn integrate_graph(g: &MetricGraph, f: &GraphFunction, rule: QuadratureRule) -> f64 {
    integrate_vertex(g, f) + integrate_edge(g, f, rule)
}

/// Weighted vertex sum `sum_v mu(v) f(v)` for an arbitrary integrand.
pub fn vertex_sum(g: &MetricGraph, f: impl Fn(usize) -> f64) -> f64 {
    (0..g.n_vertices()).map(|v| g.mu(v) * f(v)).sum()
}

/// Edge integral `sum_e int f(e, x) dx` for an arbitrary integrand, split
/// at the given per-edge breakpoints. Edges are integrated in parallel and
/// summed in index order, so the result is deterministic.
pub fn edge_integral(
    g: &MetricGraph,
    breaks: &[Vec<f64>],
    rule: QuadratureRule,
    f: impl Fn(usize, f64) -> f64 + Sync,
) -> f64 {
    let parts: Vec<f64> = (0..g.n_edges())
        .into_par_iter()
        .map(|e| {
            let empty: &[f64] = &[];
            let b = breaks.get(e).map(|v| v.as_slice()).unwrap_or(empty);
            integrate_with_breakpoints(&|x| f(e, x), 0.0, g.length(e), b, rule)
        })
        .collect();
    parts.iter().sum()
}

/// Vertex Laplacian `(1/mu(v)) sum_{e ~ v} omega_e (f(other) - f(v))`,
/// using vertex values only. Parallel edges contribute separately.
pub fn vertex_laplacian(g: &MetricGraph, f: &GraphFunction) -> Vec<f64> {
    vertex_laplacian_values(g, &f.vertex_values)
}

/// Vertex Laplacian on a plain value vector.
pub fn vertex_laplacian_values(g: &MetricGraph, vals: &[f64]) -> Vec<f64> {
    (0..g.n_vertices())
        .map(|v| {
            let mut acc = 0.0;
            for &(e, w) in g.adjacency(v) {
                acc += g.omega(e) * (vals[w] - vals[v]);
            }
            acc / g.mu(v)
        })
        .collect()
}

/// Second derivative of the edge profile at a coordinate.
pub fn edge_second_derivative(g: &MetricGraph, f: &GraphFunction, e: usize, x: f64) -> Result<f64> {
    let l = g.length(e);
    if !(0.0..=l).contains(&x) {
        return Err(QgError::CoordOutOfRange {
            edge: g.edge_id(e).to_string(),
            coord: x,
            len: l,
        });
    }
    Ok(f.d2(e, x))
}

/// Inward normal derivative of edge `e` at vertex `v` (the derivative along
/// the edge pointing away from `v`). `v` must be an endpoint of `e`.
pub fn normal_derivative(g: &MetricGraph, f: &GraphFunction, e: usize, v: usize) -> Result<f64> {
    if g.from(e) == v {
        Ok(f.d1(e, 0.0))
    } else if g.to(e) == v {
        Ok(-f.d1(e, g.length(e)))
    } else {
        Err(QgError::InvalidArgument(format!(
            "vertex `{}` is not an endpoint of edge `{}`",
            g.vertex_id(v),
            g.edge_id(e)
        )))
    }
}

/// Kirchhoff sum at each vertex: total inward normal derivative over all
/// incident edges. Zero everywhere is the flux (current-conservation)
/// condition.
pub fn kirchhoff(g: &MetricGraph, f: &GraphFunction) -> Vec<f64> {
    (0..g.n_vertices())
        .map(|v| {
            g.adjacency(v)
                .iter()
                .map(|&(e, _)| {
                    if g.from(e) == v {
                        f.d1(e, 0.0)
                    } else {
                        -f.d1(e, g.length(e))
                    }
                })
                .sum()
        })
        .collect()
}

/// The distributional pairing of `Delta u` against a test function:
/// `int phi (Delta_V u) dmu_V + sum_e int phi_e u_e'' dx`.
pub fn pairing(
    g: &MetricGraph,
    u: &GraphFunction,
    phi: &GraphFunction,
    rule: QuadratureRule,
) -> f64 {
    let lap = vertex_laplacian(g, u);
    let vertex_part = vertex_sum(g, |v| phi.vertex(v) * lap[v]);
    let breaks = merged_breakpoints(u, phi);
    let edge_part = edge_integral(g, &breaks, rule, |e, x| phi.value(e, x) * u.d2(e, x));
    vertex_part + edge_part
}

/// Union of the two functions' breakpoint lists, per edge.
pub fn merged_breakpoints(a: &GraphFunction, b: &GraphFunction) -> Vec<Vec<f64>> {
    a.breakpoints
        .iter()
        .zip(&b.breakpoints)
        .map(|(x, y)| {
            let mut m: Vec<f64> = x.iter().chain(y.iter()).copied().collect();
            m.sort_by(f64::total_cmp);
            m.dedup_by(|p, q| (*p - *q).abs() <= 1e-12);
            m
        })
        .collect()
}

fn safe_pow(p: f64, s: f64) -> f64 {
    if p <= 0.0 {
        0.0
    } else {
        p.powf(s)
    }
}

/// `phi^s` with chain-rule derivatives, treating nonpositive base values
/// as exactly zero (valid for cutoffs, whose derivatives vanish where the
/// function does).
pub fn power_function(g: &MetricGraph, phi: &GraphFunction, s: f64) -> GraphFunction {
    let vertex_values = phi.vertex_values.iter().map(|&p| safe_pow(p, s)).collect();
    let h = 1e-6;
    let edges = (0..g.n_edges())
        .map(|e| {
            let (e0, e1, e2) = (
                phi.edges[e].clone(),
                phi.edges[e].clone(),
                phi.edges[e].clone(),
            );
            EdgeEval::analytic_with(
                move |x| safe_pow(e0.value_at(x), s),
                move |x| {
                    let p = e1.value_at(x);
                    if p <= 0.0 {
                        0.0
                    } else {
                        s * p.powf(s - 1.0) * e1.d1_at(x, h)
                    }
                },
                move |x| {
                    let p = e2.value_at(x);
                    if p <= 0.0 {
                        0.0
                    } else {
                        let d1 = e2.d1_at(x, h);
                        let d2 = e2.d2_at(x, h);
                        s * (s - 1.0) * p.powf(s - 2.0) * d1 * d1 + s * p.powf(s - 1.0) * d2
                    }
                },
            )
        })
        .collect();
    GraphFunction::from_parts(vertex_values, edges, phi.breakpoints.clone())
}

/// Two evaluations of the same distributional pairing, which the
/// integration-by-parts identity says must agree, together with the
/// boundary sums that explain any discrepancy.
#[derive(Debug, Clone, Serialize)]
pub struct IbpReport {
    /// `int phi^s (Delta_V u) dmu_V + sum_e int phi^s u''`.
    pub lhs: f64,
    /// `int u Delta_V(phi^s) dmu_V + sum_e int u (phi^s)''`.
    pub rhs: f64,
    pub residual: f64,
    pub lhs_vertex: f64,
    pub lhs_edge: f64,
    pub rhs_vertex: f64,
    pub rhs_edge: f64,
    /// `sum_v phi^s(v) K(u)(v)` — vanishes when `u` satisfies the flux
    /// condition wherever the test function lives.
    pub boundary_flux_u: f64,
    /// `sum_v u(v) K(phi^s)(v)` — vanishes because test functions have
    /// flat edge derivatives at vertices.
    pub boundary_flux_test: f64,
    pub rule: QuadratureRule,
}

fn ibp_report(
    g: &MetricGraph,
    u: &GraphFunction,
    test: &GraphFunction,
    rule: QuadratureRule,
) -> IbpReport {
    let lap_u = vertex_laplacian(g, u);
    let lap_t = vertex_laplacian(g, test);
    let breaks = merged_breakpoints(u, test);

    let lhs_vertex = vertex_sum(g, |v| test.vertex(v) * lap_u[v]);
    let lhs_edge = edge_integral(g, &breaks, rule, |e, x| test.value(e, x) * u.d2(e, x));
    let rhs_vertex = vertex_sum(g, |v| u.vertex(v) * lap_t[v]);
    let rhs_edge = edge_integral(g, &breaks, rule, |e, x| u.value(e, x) * test.d2(e, x));

    let ku = kirchhoff(g, u);
    let kt = kirchhoff(g, test);
    let boundary_flux_u = (0..g.n_vertices()).map(|v| test.vertex(v) * ku[v]).sum();
    let boundary_flux_test = (0..g.n_vertices()).map(|v| u.vertex(v) * kt[v]).sum();

    let lhs = lhs_vertex + lhs_edge;
    let rhs = rhs_vertex + rhs_edge;
    IbpReport {
        lhs,
        rhs,
        residual: (lhs - rhs).abs(),
        lhs_vertex,
        lhs_edge,
        rhs_vertex,
        rhs_edge,
        boundary_flux_u,
        boundary_flux_test,
        rule,
    }
}

/// Verifies the integration-by-parts identity for a compactly supported
/// test function raised to the power `s` (`s > 2`): both pairings are
/// computed independently and should agree up to quadrature error.
pub fn verify_ibp_compact(
    g: &MetricGraph,
    u: &GraphFunction,
    phi: &GraphFunction,
    s: f64,
    rule: QuadratureRule,
) -> IbpReport {
    let test = power_function(g, phi, s);
    ibp_report(g, u, &test, rule)
}

/// Verifies the integration-by-parts identity for a globally supported
/// weight (the exponential test function): same two-sided evaluation, with
/// the Kirchhoff boundary sums reported so a violation can be attributed.
pub fn verify_ibp_weighted(
    g: &MetricGraph,
    u: &GraphFunction,
    psi: &GraphFunction,
    rule: QuadratureRule,
) -> IbpReport {
    ibp_report(g, u, psi, rule)
}
