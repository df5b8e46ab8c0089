//! Test functions built from the modified distance: a compactly supported
//! cutoff and a globally supported exponentially decaying weight, together
//! with numerical verification of their scaled derivative bounds.

use serde::Serialize;

use crate::calculus::vertex_laplacian_values;
use crate::error::{QgError, Result};
use crate::func::{EdgeEval, GraphFunction};
use crate::geodesics::EdgeCase;
use crate::graph::MetricGraph;
use crate::mollify::{EdgeDistEval, ModifiedDistanceField, Mollifier, StepFunctionTau};

/// Scalar cutoff profile: identically 1 on `[0,1]`, identically 0 on
/// `[2, inf)`, bridged monotonically in between with flat joints.
#[derive(Clone)]
pub struct CutoffPhi {
    bridge: CutBridge,
}

#[derive(Clone)]
enum CutBridge {
    C3(Mollifier),
    C1(StepFunctionTau),
}

impl CutoffPhi {
    pub fn new(m: &Mollifier) -> Self {
        CutoffPhi {
            bridge: CutBridge::C3(m.clone()),
        }
    }

    pub fn from_tau(t: &StepFunctionTau) -> Self {
        CutoffPhi {
            bridge: CutBridge::C1(t.clone()),
        }
    }

    /// `(phi, phi', phi'')` at radius `r >= 0`.
    pub fn eval(&self, r: f64) -> (f64, f64, f64) {
        if r <= 1.0 {
            (1.0, 0.0, 0.0)
        } else if r >= 2.0 {
            (0.0, 0.0, 0.0)
        } else {
            let (v, d1, d2) = match &self.bridge {
                CutBridge::C3(m) => m.eval(r - 1.0),
                CutBridge::C1(t) => t.eval(r - 1.0),
            };
            ((1.0 - v).clamp(0.0, 1.0), -d1, -d2)
        }
    }
}

/// Builds the standard cutoff profile from a flat mollifier.
pub fn make_cutoff_phi(m: &Mollifier) -> CutoffPhi {
    CutoffPhi::new(m)
}

/// Scalar exponential profile: identically 1 up to 1, exactly `e^{-delta r}`
/// from 2 on, joined by a quintic Hermite bridge matching value, slope, and
/// curvature at both ends. Construction fails if the bridge is not
/// monotonically decreasing.
#[derive(Clone, Debug)]
pub struct ExpPsi {
    pub delta: f64,
    c: [f64; 6],
}

impl ExpPsi {
    pub fn new(delta: f64) -> Result<Self> {
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(QgError::InvalidArgument(format!(
                "decay rate must be positive, got {delta}"
            )));
        }
        let y0 = 1.0;
        let (m0, a0) = (0.0, 0.0);
        let y1 = (-2.0 * delta).exp();
        let m1 = -delta * y1;
        let a1 = delta * delta * y1;
        let dy = y1 - y0;
        let c3 = 10.0 * dy - 6.0 * m0 - 4.0 * m1 + 0.5 * (a1 - 3.0 * a0);
        let c4 = -15.0 * dy + 8.0 * m0 + 7.0 * m1 + 0.5 * (3.0 * a0 - 2.0 * a1);
        let c5 = 6.0 * dy - 3.0 * (m0 + m1) + 0.5 * (a1 - a0);
        let psi = ExpPsi {
            delta,
            c: [y0, m0, 0.5 * a0, c3, c4, c5],
        };
        for i in 0..=4096 {
            let r = 1.0 + i as f64 / 4096.0;
            if psi.eval(r).1 > 1e-12 {
                return Err(QgError::BridgeNotMonotone { delta });
            }
        }
        Ok(psi)
    }

    /// `(psi, psi', psi'')` at radius `r` (plateau continues left of the
    /// domain edge).
    pub fn eval(&self, r: f64) -> (f64, f64, f64) {
        if r <= 1.0 {
            (1.0, 0.0, 0.0)
        } else if r >= 2.0 {
            let v = (-self.delta * r).exp();
            (v, -self.delta * v, self.delta * self.delta * v)
        } else {
            let t = r - 1.0;
            let c = &self.c;
            let v = c[0] + t * (c[1] + t * (c[2] + t * (c[3] + t * (c[4] + t * c[5]))));
            let d1 = c[1]
                + t * (2.0 * c[2] + t * (3.0 * c[3] + t * (4.0 * c[4] + t * 5.0 * c[5])));
            let d2 = 2.0 * c[2] + t * (6.0 * c[3] + t * (12.0 * c[4] + t * 20.0 * c[5]));
            (v, d1, d2)
        }
    }

    /// Envelope constants `(C1, C2)` with
    /// `C2 e^{-delta r} <= psi(r) <= C1 e^{-delta r}` for `r >= r_min`.
    pub fn envelope_constants(&self, r_min: f64) -> (f64, f64) {
        let mut c1 = 1.0f64; // ratio is exactly 1 from 2 on
        let mut c2 = 1.0f64;
        let lo = r_min.min(1.0);
        for i in 0..=4096 {
            let r = lo + (2.0 - lo) * i as f64 / 4096.0;
            let ratio = self.eval(r).0 * (self.delta * r).exp();
            c1 = c1.max(ratio);
            c2 = c2.min(ratio);
        }
        (c1, c2)
    }
}

/// Builds the exponential profile, rejecting non-monotone bridges.
pub fn make_exp_psi(delta: f64) -> Result<ExpPsi> {
    ExpPsi::new(delta)
}

/// Finds all solutions of `d~ = target` on an edge by bisection on each
/// monotone branch.
fn threshold_crossings(
    ev: &EdgeDistEval,
    l: f64,
    case: EdgeCase,
    target: f64,
) -> Vec<f64> {
    let branches: Vec<(f64, f64)> = match case {
        EdgeCase::Peak(_) => vec![(0.0, 0.5 * l), (0.5 * l, l)],
        _ => vec![(0.0, l)],
    };
    let mut out = Vec::new();
    for (a, b) in branches {
        let fa = ev.eval(a).0 - target;
        let fb = ev.eval(b).0 - target;
        if fa == 0.0 {
            out.push(a);
            continue;
        }
        if fb == 0.0 {
            out.push(b);
            continue;
        }
        if fa * fb > 0.0 {
            continue;
        }
        let (mut lo, mut hi) = (a, b);
        let mut flo = fa;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let fm = ev.eval(mid).0 - target;
            if fm == 0.0 {
                lo = mid;
                hi = mid;
                break;
            }
            if flo * fm < 0.0 {
                hi = mid;
            } else {
                lo = mid;
                flo = fm;
            }
            if hi - lo <= f64::EPSILON * l.max(1.0) {
                break;
            }
        }
        out.push(0.5 * (lo + hi));
    }
    out.sort_by(f64::total_cmp);
    out.dedup_by(|x, y| (*x - *y).abs() <= 1e-12);
    out
}

/// Per-edge breakpoints where a profile composed with the modified
/// distance loses higher-order smoothness: peak midpoints plus the
/// coordinates where `d~` crosses the given thresholds.
fn composition_breakpoints(
    mdf: &ModifiedDistanceField,
    e: usize,
    thresholds: &[f64],
) -> Vec<f64> {
    let ev = mdf.evaluator(e);
    let l = mdf.edge_length(e);
    let case = mdf.df.edge_case[e];
    let mut pts = Vec::new();
    if matches!(case, EdgeCase::Peak(_)) {
        pts.push(0.5 * l);
    }
    for &t in thresholds {
        pts.extend(threshold_crossings(&ev, l, case, t));
    }
    pts.retain(|&x| x > 1e-12 && x < l - 1e-12);
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|x, y| (*x - *y).abs() <= 1e-12);
    pts
}

/// Composes a scalar profile `F` (with derivatives) with the modified
/// distance: `u(x) = F(d~(x))`. The result automatically has zero flux at
/// every vertex because the modified distance is flat there.
pub fn compose_with_modified_distance<F, F1, F2>(
    g: &MetricGraph,
    mdf: &ModifiedDistanceField,
    f: F,
    f1: F1,
    f2: F2,
) -> GraphFunction
where
    F: Fn(f64) -> f64 + Send + Sync + Clone + 'static,
    F1: Fn(f64) -> f64 + Send + Sync + Clone + 'static,
    F2: Fn(f64) -> f64 + Send + Sync + Clone + 'static,
{
    let vertex_values = (0..g.n_vertices())
        .map(|v| f(mdf.vertex_value(v)))
        .collect();
    let mut edges = Vec::with_capacity(g.n_edges());
    let mut breakpoints = Vec::with_capacity(g.n_edges());
    for e in 0..g.n_edges() {
        let (eva, evb, evc) = (mdf.evaluator(e), mdf.evaluator(e), mdf.evaluator(e));
        let fa = f.clone();
        let fb = f1.clone();
        let (fc_second, fc_first) = (f2.clone(), f1.clone());
        edges.push(EdgeEval::analytic_with(
            move |x| fa(eva.eval(x).0),
            move |x| {
                let (d, d1, _) = evb.eval(x);
                fb(d) * d1
            },
            move |x| {
                let (d, d1, d2) = evc.eval(x);
                fc_second(d) * d1 * d1 + fc_first(d) * d2
            },
        ));
        breakpoints.push(composition_breakpoints(mdf, e, &[]));
    }
    GraphFunction::from_parts(vertex_values, edges, breakpoints)
}

/// The compactly supported test function `phi(d~(x)/R)` built from the
/// quintic-bridged cutoff profile.
pub fn compact_testfn(
    g: &MetricGraph,
    mdf: &ModifiedDistanceField,
    r: f64,
) -> Result<GraphFunction> {
    compact_testfn_with(g, mdf, r, &CutoffPhi::new(&Mollifier::quintic()))
}

/// The compactly supported test function with an explicit cutoff profile.
pub fn compact_testfn_with(
    g: &MetricGraph,
    mdf: &ModifiedDistanceField,
    r: f64,
    phi: &CutoffPhi,
) -> Result<GraphFunction> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(QgError::InvalidArgument(format!(
            "cutoff radius must be positive, got {r}"
        )));
    }
    let vertex_values = (0..g.n_vertices())
        .map(|v| phi.eval(mdf.vertex_value(v) / r).0)
        .collect();
    let mut edges = Vec::with_capacity(g.n_edges());
    let mut breakpoints = Vec::with_capacity(g.n_edges());
    for e in 0..g.n_edges() {
        let (eva, evb, evc) = (mdf.evaluator(e), mdf.evaluator(e), mdf.evaluator(e));
        let (pa, pb, pc) = (phi.clone(), phi.clone(), phi.clone());
        edges.push(EdgeEval::analytic_with(
            move |x| pa.eval(eva.eval(x).0 / r).0,
            move |x| {
                let (d, d1, _) = evb.eval(x);
                pb.eval(d / r).1 * d1 / r
            },
            move |x| {
                let (d, d1, d2) = evc.eval(x);
                let (_, p1, p2) = pc.eval(d / r);
                p2 * d1 * d1 / (r * r) + p1 * d2 / r
            },
        ));
        breakpoints.push(composition_breakpoints(mdf, e, &[r, 2.0 * r]));
    }
    Ok(GraphFunction::from_parts(vertex_values, edges, breakpoints))
}

/// The globally supported exponential test function
/// `psi((d~(x) - j)/R)` with decay rate `delta`.
pub fn exp_testfn(
    g: &MetricGraph,
    mdf: &ModifiedDistanceField,
    r: f64,
    delta: f64,
) -> Result<GraphFunction> {
    let psi = ExpPsi::new(delta)?;
    exp_testfn_with(g, mdf, r, &psi)
}

/// The exponential test function with an explicit profile.
pub fn exp_testfn_with(
    g: &MetricGraph,
    mdf: &ModifiedDistanceField,
    r: f64,
    psi: &ExpPsi,
) -> Result<GraphFunction> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(QgError::InvalidArgument(format!(
            "radius must be positive, got {r}"
        )));
    }
    let j = mdf.j_sup;
    let vertex_values = (0..g.n_vertices())
        .map(|v| psi.eval((mdf.vertex_value(v) - j) / r).0)
        .collect();
    let mut edges = Vec::with_capacity(g.n_edges());
    let mut breakpoints = Vec::with_capacity(g.n_edges());
    for e in 0..g.n_edges() {
        let (eva, evb, evc) = (mdf.evaluator(e), mdf.evaluator(e), mdf.evaluator(e));
        let (pa, pb, pc) = (psi.clone(), psi.clone(), psi.clone());
        edges.push(EdgeEval::analytic_with(
            move |x| pa.eval((eva.eval(x).0 - j) / r).0,
            move |x| {
                let (d, d1, _) = evb.eval(x);
                pb.eval((d - j) / r).1 * d1 / r
            },
            move |x| {
                let (d, d1, d2) = evc.eval(x);
                let (_, p1, p2) = pc.eval((d - j) / r);
                p2 * d1 * d1 / (r * r) + p1 * d2 / r
            },
        ));
        breakpoints.push(composition_breakpoints(mdf, e, &[r + j, 2.0 * r + j]));
    }
    Ok(GraphFunction::from_parts(vertex_values, edges, breakpoints))
}

/// How the closed support of the cutoff decomposes: vertices strictly
/// inside, vertices exactly on the boundary sphere, interior cut points,
/// and the per-edge sub-intervals of the support.
#[derive(Debug, Clone, Serialize)]
pub struct SupportPartition {
    /// Vertices with `d <= 2R`.
    pub v1: Vec<usize>,
    /// Vertices with `d = 2R` exactly (within tolerance).
    pub boundary_v1: Vec<usize>,
    /// Non-vertex cut points where `d~ = 2R`, as `(edge, coord)`.
    pub v2: Vec<(usize, f64)>,
    /// Vertices of the closed support: interior vertices plus boundary.
    pub v_prime: Vec<usize>,
    /// Per-edge sub-intervals of `{d~ <= 2R}` (at most two per edge).
    pub edge_intervals: Vec<Vec<(f64, f64)>>,
}

/// Computes the support decomposition of the cutoff at radius `R`.
pub fn support_partition(
    g: &MetricGraph,
    mdf: &ModifiedDistanceField,
    r: f64,
) -> Result<SupportPartition> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(QgError::InvalidArgument(format!(
            "radius must be positive, got {r}"
        )));
    }
    let tol = 1e-12;
    let two_r = 2.0 * r;
    let mut v1 = Vec::new();
    let mut boundary_v1 = Vec::new();
    for v in 0..g.n_vertices() {
        let d = mdf.vertex_value(v);
        if d <= two_r + tol {
            v1.push(v);
            if (d - two_r).abs() <= tol {
                boundary_v1.push(v);
            }
        }
    }
    let mut v2 = Vec::new();
    let mut edge_intervals = vec![Vec::new(); g.n_edges()];
    for (e, intervals) in edge_intervals.iter_mut().enumerate() {
        let ev = mdf.evaluator(e);
        let l = mdf.edge_length(e);
        let case = mdf.df.edge_case[e];
        for x in threshold_crossings(&ev, l, case, two_r) {
            if x > tol && x < l - tol {
                v2.push((e, x));
            }
        }
        // sub-intervals of {d~ <= 2R}: scan the monotone branches
        let branches: Vec<(f64, f64)> = match case {
            EdgeCase::Peak(_) => vec![(0.0, 0.5 * l), (0.5 * l, l)],
            _ => vec![(0.0, l)],
        };
        let mut spans: Vec<(f64, f64)> = Vec::new();
        for (a, b) in branches {
            let (va, vb) = (ev.eval(a).0, ev.eval(b).0);
            let span = if va <= two_r + tol && vb <= two_r + tol {
                Some((a, b))
            } else if va <= two_r + tol || vb <= two_r + tol {
                let c = threshold_crossings(&ev, l, case, two_r)
                    .into_iter()
                    .find(|&x| x >= a - tol && x <= b + tol);
                match c {
                    Some(c) => {
                        if va <= two_r + tol {
                            Some((a, c))
                        } else {
                            Some((c, b))
                        }
                    }
                    None => None,
                }
            } else {
                None
            };
            if let Some((x0, x1)) = span {
                if x1 - x0 > tol {
                    spans.push((x0, x1));
                }
            }
        }
        // merge branches that meet at the peak midpoint
        spans.sort_by(|p, q| p.0.total_cmp(&q.0));
        let mut merged: Vec<(f64, f64)> = Vec::new();
        for s in spans {
            if let Some(last) = merged.last_mut() {
                if (s.0 - last.1).abs() <= tol {
                    last.1 = s.1;
                    continue;
                }
            }
            merged.push(s);
        }
        *intervals = merged;
    }
    let v_prime = v1.clone();
    Ok(SupportPartition {
        v1,
        boundary_v1,
        v2,
        v_prime,
        edge_intervals,
    })
}

/// Measured constants for the scaled derivative bounds of the compact
/// cutoff, with exactness checks outside the active regions.
#[derive(Debug, Clone, Serialize)]
pub struct CompactBoundReport {
    pub r: f64,
    pub r0: f64,
    pub r_ge_r0: bool,
    /// `sup R |phi''|` over the modified annulus `{R <= d~ <= 2R}`.
    pub c_a: f64,
    /// `sup R (-lap phi)_+` over the vertex shell `{R-j <= d <= 2R+j}`.
    pub c_b: f64,
    /// Largest `|phi''|` found strictly outside the modified annulus.
    pub max_edge_dd_outside: f64,
    /// Largest `|lap phi|` at vertices strictly outside the shell.
    pub max_vertex_lap_outside: f64,
    /// Largest Kirchhoff sum of the cutoff over support vertices.
    pub max_kirchhoff: f64,
    /// Every sampled annulus point lies in the vertex shell.
    pub containment_annulus_in_shell: bool,
    /// Every shell member has `d` within `[R/2, 3R]`.
    pub containment_shell_in_union: bool,
    pub n_samples: usize,
}

/// Scans the compact cutoff's second derivatives and vertex Laplacian,
/// measuring the scaled sup constants and checking support exactness.
pub fn verify_compact_bounds(
    g: &MetricGraph,
    mdf: &ModifiedDistanceField,
    r: f64,
    n_samples: usize,
) -> Result<CompactBoundReport> {
    let phi = compact_testfn(g, mdf, r)?;
    let n = n_samples.max(32);
    let j = mdf.j_sup;
    let r0 = (2.0 * j).max(1.0);
    let slack = 1e-9;

    let mut c_a = 0.0f64;
    let mut outside = 0.0f64;
    let mut annulus_in_shell = true;
    for e in 0..g.n_edges() {
        let l = g.length(e);
        let ev = mdf.evaluator(e);
        let mut xs: Vec<f64> = (0..=n).map(|i| l * i as f64 / n as f64).collect();
        xs.extend(phi.breakpoints[e].iter().copied());
        for x in xs {
            let dmod = ev.eval(x).0;
            let dd = phi.d2(e, x).abs();
            if dmod >= r - slack && dmod <= 2.0 * r + slack {
                c_a = c_a.max(r * dd);
                let d = ev.dist(x);
                if d < r - j - slack || d > 2.0 * r + j + slack {
                    annulus_in_shell = false;
                }
            } else if dmod < r - 1e-6 || dmod > 2.0 * r + 1e-6 {
                outside = outside.max(dd);
            }
        }
    }

    let lap = vertex_laplacian_values(g, &phi.vertex_values);
    let mut c_b = 0.0f64;
    let mut lap_outside = 0.0f64;
    let mut shell_in_union = true;
    for (v, &lv) in lap.iter().enumerate() {
        let d = mdf.vertex_value(v);
        if d >= r - j - slack && d <= 2.0 * r + j + slack {
            c_b = c_b.max(r * (-lv).max(0.0));
            if r >= r0 && (d < 0.5 * r - slack || d > 3.0 * r + slack) {
                shell_in_union = false;
            }
        } else {
            lap_outside = lap_outside.max(lv.abs());
        }
    }

    let kir = crate::calculus::kirchhoff(g, &phi);
    let part = support_partition(g, mdf, r)?;
    let max_kirchhoff = part
        .v_prime
        .iter()
        .map(|&v| kir[v].abs())
        .fold(0.0, f64::max);

    Ok(CompactBoundReport {
        r,
        r0,
        r_ge_r0: r >= r0,
        c_a,
        c_b,
        max_edge_dd_outside: outside,
        max_vertex_lap_outside: lap_outside,
        max_kirchhoff,
        containment_annulus_in_shell: annulus_in_shell,
        containment_shell_in_union: shell_in_union,
        n_samples: n,
    })
}

/// Measured constants for the exponential test function's scaled,
/// exponentially weighted derivative bounds.
#[derive(Debug, Clone, Serialize)]
pub struct ExpBoundReport {
    pub r: f64,
    pub delta: f64,
    /// `sup R |Psi''| e^{delta d~ / R}` over `{d~ >= R+j}`.
    pub c_e: f64,
    /// `sup R |lap Psi| e^{delta d / R}` over vertices with `d >= R`.
    pub c_v: f64,
    /// Envelope constants of the scalar profile.
    pub c1: f64,
    pub c2: f64,
    /// Largest `|Psi''|` strictly inside `{d~ < R+j}` (exactly zero there).
    pub max_edge_dd_inside: f64,
    /// Largest `|lap Psi|` at vertices with `d < R` (exactly zero there).
    pub max_vertex_lap_inside: f64,
    /// Largest Kirchhoff sum over all vertices (zero everywhere).
    pub max_kirchhoff: f64,
    pub n_samples: usize,
}

/// Scans the exponential test function, measuring the scaled weighted sup
/// constants and the interior exactness.
pub fn verify_exp_bounds(
    g: &MetricGraph,
    mdf: &ModifiedDistanceField,
    r: f64,
    delta: f64,
    n_samples: usize,
) -> Result<ExpBoundReport> {
    let psi_profile = ExpPsi::new(delta)?;
    let psi = exp_testfn_with(g, mdf, r, &psi_profile)?;
    let n = n_samples.max(32);
    let j = mdf.j_sup;
    let slack = 1e-9;

    let mut c_e = 0.0f64;
    let mut inside = 0.0f64;
    for e in 0..g.n_edges() {
        let l = g.length(e);
        let ev = mdf.evaluator(e);
        let mut xs: Vec<f64> = (0..=n).map(|i| l * i as f64 / n as f64).collect();
        xs.extend(psi.breakpoints[e].iter().copied());
        for x in xs {
            let dmod = ev.eval(x).0;
            let dd = psi.d2(e, x).abs();
            if dmod >= r + j - slack {
                c_e = c_e.max(r * dd * (delta * dmod / r).exp());
            } else if dmod < r + j - 1e-6 {
                inside = inside.max(dd);
            }
        }
    }

    let lap = vertex_laplacian_values(g, &psi.vertex_values);
    let mut c_v = 0.0f64;
    let mut lap_inside = 0.0f64;
    for (v, &lv) in lap.iter().enumerate() {
        let d = mdf.vertex_value(v);
        if d >= r - slack {
            c_v = c_v.max(r * lv.abs() * (delta * d / r).exp());
        } else {
            lap_inside = lap_inside.max(lv.abs());
        }
    }

    let kir = crate::calculus::kirchhoff(g, &psi);
    let max_kirchhoff = kir.iter().map(|k| k.abs()).fold(0.0, f64::max);
    let (c1, c2) = psi_profile.envelope_constants(-j / r);

    Ok(ExpBoundReport {
        r,
        delta,
        c_e,
        c_v,
        c1,
        c2,
        max_edge_dd_inside: inside,
        max_vertex_lap_inside: lap_inside,
        max_kirchhoff,
        n_samples: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators;
    use crate::geodesics::distance_field;
    use crate::mollify::modified_distance;

    fn mdf_for(g: &MetricGraph) -> ModifiedDistanceField {
        let df = distance_field(g).unwrap();
        modified_distance(g, &df, &Mollifier::quintic())
    }

    #[test]
    fn cutoff_profile_shape() {
        let phi = make_cutoff_phi(&Mollifier::quintic());
        assert_eq!(phi.eval(0.0), (1.0, 0.0, 0.0));
        assert_eq!(phi.eval(0.999), (1.0, 0.0, 0.0));
        assert_eq!(phi.eval(2.0), (0.0, 0.0, 0.0));
        assert_eq!(phi.eval(5.0), (0.0, 0.0, 0.0));
        let (v, d1, _) = phi.eval(1.5);
        assert!((v - 0.5).abs() < 1e-15);
        assert!((d1 + 1.875).abs() < 1e-15, "descends at the quintic rate");
        // monotone nonincreasing across the bridge
        let mut prev = 1.0;
        for i in 0..=100 {
            let r = 1.0 + i as f64 / 100.0;
            let v = phi.eval(r).0;
            assert!(v <= prev + 1e-15);
            prev = v;
        }
    }

    #[test]
    fn exp_profile_joins_smoothly() {
        let psi = make_exp_psi(0.75).unwrap();
        let h = 1e-7;
        for r in [1.0, 2.0] {
            let (va, d1a, d2a) = psi.eval(r - h);
            let (vb, d1b, d2b) = psi.eval(r + h);
            // straddling values differ by 2h|psi'| even across a C^2 join
            assert!((va - vb).abs() < 2.5 * h * 0.75);
            assert!((d1a - d1b).abs() < 1e-6);
            assert!((d2a - d2b).abs() < 1e-4, "{r}: {d2a} vs {d2b}");
        }
        let (v, d1, d2) = psi.eval(3.0);
        let e = (-0.75 * 3.0f64).exp();
        assert!((v - e).abs() < 1e-15);
        assert!((d1 + 0.75 * e).abs() < 1e-15);
        assert!((d2 - 0.5625 * e).abs() < 1e-15);
    }

    #[test]
    fn exp_profile_monotone_fence_is_self_consistent() {
        // wherever construction succeeds, the profile must actually be
        // nonincreasing; wherever it fails, the error names the rate
        let mut saw_ok = false;
        for k in 1..=60 {
            let delta = k as f64 * 0.1;
            match ExpPsi::new(delta) {
                Ok(psi) => {
                    saw_ok = true;
                    let mut prev = f64::INFINITY;
                    for i in 0..=500 {
                        let r = i as f64 * 3.0 / 500.0;
                        let v = psi.eval(r).0;
                        assert!(v <= prev + 1e-12, "delta={delta} r={r}");
                        assert!(v > 0.0);
                        prev = v;
                    }
                }
                Err(QgError::BridgeNotMonotone { delta: d }) => assert_eq!(d, delta),
                Err(other) => panic!("unexpected error {other}"),
            }
        }
        assert!(saw_ok);
        assert!(ExpPsi::new(0.75).is_ok());
    }

    #[test]
    fn envelope_constants_bracket_the_profile() {
        let psi = make_exp_psi(0.75).unwrap();
        let (c1, c2) = psi.envelope_constants(-0.5);
        assert!(c2 > 0.0 && c2 <= 1.0 && c1 >= 1.0);
        for i in 0..=300 {
            let r = -0.5 + i as f64 * 4.0 / 300.0;
            let v = psi.eval(r).0;
            let e = (-0.75 * r).exp();
            assert!(v <= c1 * e + 1e-12);
            assert!(v >= c2 * e - 1e-12);
        }
    }

    #[test]
    fn compact_testfn_plateau_and_support() {
        let g = generators::path(6).unwrap();
        let mdf = mdf_for(&g);
        let phi = compact_testfn(&g, &mdf, 2.0).unwrap();
        assert_eq!(phi.vertex(0), 1.0);
        assert_eq!(phi.vertex(1), 1.0);
        assert_eq!(phi.vertex(2), 1.0);
        assert_eq!(phi.vertex(4), 0.0, "d=4 = 2R is already zero");
        assert_eq!(phi.vertex(6), 0.0);
        assert_eq!(phi.value(5, 0.5), 0.0);
        // flux is exactly zero at every vertex
        let k = crate::calculus::kirchhoff(&g, &phi);
        assert!(k.iter().all(|x| x.abs() == 0.0), "{k:?}");
    }

    #[test]
    fn support_partition_on_a_path() {
        let g = generators::path(6).unwrap();
        let mdf = mdf_for(&g);
        let part = support_partition(&g, &mdf, 1.25).unwrap();
        // 2R = 2.5: vertices 0,1,2 inside, none exactly on the sphere
        assert_eq!(part.v1, vec![0, 1, 2]);
        assert!(part.boundary_v1.is_empty());
        assert_eq!(part.v2.len(), 1);
        let (e, x) = part.v2[0];
        assert_eq!(e, 2);
        let d_at_cut = mdf.eval(e, x).0;
        assert!((d_at_cut - 2.5).abs() < 1e-9);
        // support intervals: edges 0,1 whole, edge 2 partial, rest empty
        assert_eq!(part.edge_intervals[0], vec![(0.0, 1.0)]);
        assert_eq!(part.edge_intervals[1], vec![(0.0, 1.0)]);
        assert_eq!(part.edge_intervals[2].len(), 1);
        assert!(part.edge_intervals[3].is_empty() || part.edge_intervals[3][0].1 < 1e-9);
    }

    #[test]
    fn support_partition_splits_at_a_peak() {
        // long edge rises to its peak above the threshold and comes back
        let g = generators::parallel_chain(1).unwrap();
        let mdf = mdf_for(&g);
        let part = support_partition(&g, &mdf, 0.9).unwrap();
        let long = g.edge_index("b1").unwrap();
        assert_eq!(part.edge_intervals[long].len(), 2, "{:?}", part.edge_intervals[long]);
        let (a, b) = (part.edge_intervals[long][0], part.edge_intervals[long][1]);
        assert_eq!(a.0, 0.0);
        assert_eq!(b.1, 3.0);
        assert!((mdf.eval(long, a.1).0 - 1.8).abs() < 1e-9);
        assert!((mdf.eval(long, b.0).0 - 1.8).abs() < 1e-9);
        // two interior cut points on the long edge
        let cuts_on_long = part.v2.iter().filter(|&&(e, _)| e == long).count();
        assert_eq!(cuts_on_long, 2);
    }

    #[test]
    fn support_partition_merges_through_a_low_peak() {
        // threshold above the peak: one interval covering the whole edge
        let g = generators::parallel_chain(1).unwrap();
        let mdf = mdf_for(&g);
        let part = support_partition(&g, &mdf, 1.5).unwrap();
        let long = g.edge_index("b1").unwrap();
        assert_eq!(part.edge_intervals[long], vec![(0.0, 3.0)]);
    }

    #[test]
    fn compact_bound_constants_on_fixtures() {
        for g in [
            generators::path(12).unwrap(),
            generators::tree(2, 5).unwrap(),
            // long enough that the annulus at r0 = 2 j_sup = 6 is nonempty
            generators::parallel_chain(6).unwrap(),
        ] {
            let mdf = mdf_for(&g);
            let r0 = (2.0 * mdf.j_sup).max(1.0);
            let rep = verify_compact_bounds(&g, &mdf, r0, 256).unwrap();
            assert!(rep.r_ge_r0);
            assert!(rep.c_a.is_finite() && rep.c_a > 0.0);
            assert!(rep.c_b.is_finite());
            assert_eq!(rep.max_edge_dd_outside, 0.0, "exact zero off the annulus");
            assert_eq!(rep.max_vertex_lap_outside, 0.0, "exact zero off the shell");
            assert_eq!(rep.max_kirchhoff, 0.0);
            assert!(rep.containment_annulus_in_shell);
            assert!(rep.containment_shell_in_union);
        }
    }

    #[test]
    fn exp_bound_constants_on_fixtures() {
        for g in [
            generators::path(12).unwrap(),
            generators::tree(2, 5).unwrap(),
        ] {
            let mdf = mdf_for(&g);
            let r0 = (2.0 * mdf.j_sup).max(1.0);
            let rep = verify_exp_bounds(&g, &mdf, r0, 0.75, 256).unwrap();
            assert!(rep.c_e.is_finite() && rep.c_v.is_finite());
            assert!(rep.c1 >= 1.0 && rep.c2 > 0.0 && rep.c2 <= 1.0);
            assert_eq!(rep.max_edge_dd_inside, 0.0);
            assert_eq!(rep.max_vertex_lap_inside, 0.0);
            assert_eq!(rep.max_kirchhoff, 0.0);
        }
    }

    #[test]
    fn threshold_crossings_find_both_sides_of_a_peak() {
        let g = generators::parallel_chain(1).unwrap();
        let mdf = mdf_for(&g);
        let long = g.edge_index("b1").unwrap();
        let ev = mdf.evaluator(long);
        let case = mdf.df.edge_case[long];
        let xs = threshold_crossings(&ev, 3.0, case, 1.5);
        assert_eq!(xs.len(), 2);
        for x in xs {
            assert!((mdf.eval(long, x).0 - 1.5).abs() < 1e-10);
        }
    }
}
