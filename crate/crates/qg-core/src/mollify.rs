//! Flat mollifiers and modified distance fields.
//!
//! The geodesic distance restricted to one edge is piecewise linear with
//! slope ±1 and is not differentiable at vertices or at interior peaks. A
//! flat mollifier `eta: [0,1] -> [0,1]` (monotone, with derivatives
//! vanishing at both endpoints) induces a per-edge coordinate change that
//! composes with the distance into a field that is C² across the whole
//! graph, has vanishing one-sided derivatives at every vertex and at the
//! midpoint of every peak edge, and deviates from the true distance by at
//! most the longest edge length.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{QgError, Result};
use crate::geodesics::{DistanceField, EdgeCase};
use crate::graph::MetricGraph;

/// Smooth kernel `exp(-1/(t(1-t)))` on (0,1), zero outside.
fn bump_kernel(t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        0.0
    } else {
        (-1.0 / (t * (1.0 - t))).exp()
    }
}

/// Derivative of the kernel; flat to all orders at both endpoints.
fn bump_kernel_d1(t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        0.0
    } else {
        let s = t * (1.0 - t);
        bump_kernel(t) * (1.0 - 2.0 * t) / (s * s)
    }
}

fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(a: f64, fa: f64, b: f64, fb: f64, fm: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn rec(
        f: &impl Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(a, fa, m, fm, flm);
        let right = simpson(m, fm, b, fb, frm);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            rec(f, a, fa, m, fm, flm, left, tol * 0.5, depth - 1)
                + rec(f, m, fm, b, fb, frm, right, tol * 0.5, depth - 1)
        }
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = simpson(a, fa, b, fb, fm);
    rec(f, a, fa, b, fb, fm, whole, tol, 48)
}

/// Precomputed antiderivative table for the bump-integral mollifier:
/// normalization constant, Chebyshev-spaced nodes, cumulative values, and
/// exact kernel slopes for cubic Hermite interpolation.
pub struct BumpTable {
    pub c0: f64,
    xs: Vec<f64>,
    ys: Vec<f64>,
    ms: Vec<f64>,
}

const BUMP_NODES: usize = 1024;

impl BumpTable {
    fn build() -> Self {
        let n = BUMP_NODES;
        let xs: Vec<f64> = (0..n)
            .map(|i| 0.5 * (1.0 - (std::f64::consts::PI * i as f64 / (n - 1) as f64).cos()))
            .collect();
        let mut cum = vec![0.0; n];
        for i in 1..n {
            cum[i] = cum[i - 1] + adaptive_simpson(&bump_kernel, xs[i - 1], xs[i], 1e-16);
        }
        let c0 = cum[n - 1];
        let ys: Vec<f64> = cum.iter().map(|c| c / c0).collect();
        // exact nodal slopes: the antiderivative's derivative is the kernel
        let ms: Vec<f64> = xs.iter().map(|&x| bump_kernel(x) / c0).collect();
        BumpTable { c0, xs, ys, ms }
    }

    /// Interpolated antiderivative value; derivatives come from the kernel
    /// in closed form, so only the value needs the table.
    fn value(&self, t: f64) -> f64 {
        let xs = &self.xs;
        if t <= 0.0 {
            return 0.0;
        }
        if t >= 1.0 {
            return 1.0;
        }
        let mut i = match xs.binary_search_by(|x| x.total_cmp(&t)) {
            Ok(i) => return self.ys[i],
            Err(i) => i - 1,
        };
        if i >= xs.len() - 1 {
            i = xs.len() - 2;
        }
        let h = xs[i + 1] - xs[i];
        let s = (t - xs[i]) / h;
        let (y0, y1) = (self.ys[i], self.ys[i + 1]);
        let (m0, m1) = (self.ms[i] * h, self.ms[i + 1] * h);
        let s2 = s * s;
        let s3 = s2 * s;
        y0 * (2.0 * s3 - 3.0 * s2 + 1.0)
            + m0 * (s3 - 2.0 * s2 + s)
            + y1 * (-2.0 * s3 + 3.0 * s2)
            + m1 * (s3 - s2)
    }
}

/// A C³-flat mollifier: monotone `[0,1] -> [0,1]` bridge with value 0/1 and
/// vanishing first and second derivatives at the endpoints.
#[derive(Clone)]
pub enum Mollifier {
    /// `10t^3 - 15t^4 + 6t^5`, the polynomial flat bridge.
    QuinticPoly,
    /// Normalized antiderivative of the smooth bump kernel; flat to all
    /// orders at both endpoints.
    BumpIntegral(Arc<BumpTable>),
    /// Caller-supplied `(value, d1, d2)` evaluator. Verified, not trusted.
    UserC3(Arc<dyn Fn(f64) -> (f64, f64, f64) + Send + Sync>),
}

impl fmt::Debug for Mollifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Mollifier {
    pub fn quintic() -> Self {
        Mollifier::QuinticPoly
    }

    /// Builds the bump-integral mollifier; the antiderivative table is
    /// computed once and shared by clones.
    pub fn bump() -> Self {
        Mollifier::BumpIntegral(Arc::new(BumpTable::build()))
    }

    pub fn user_c3(f: impl Fn(f64) -> (f64, f64, f64) + Send + Sync + 'static) -> Self {
        Mollifier::UserC3(Arc::new(f))
    }

    pub fn name(&self) -> &'static str {
        match self {
            Mollifier::QuinticPoly => "quintic",
            Mollifier::BumpIntegral(_) => "bump",
            Mollifier::UserC3(_) => "user-c3",
        }
    }

    /// Endpoint-flatness order this kind promises (second derivatives
    /// vanish at 0 and 1 for all built-in kinds).
    pub fn smoothness_class(&self) -> u8 {
        match self {
            Mollifier::UserC3(_) => 2,
            _ => 3,
        }
    }

    /// `(eta, eta', eta'')` at `t`, clamping roundoff-level excursions
    /// outside `[0,1]`.
    pub fn eval(&self, t: f64) -> (f64, f64, f64) {
        let t = t.clamp(0.0, 1.0);
        match self {
            Mollifier::QuinticPoly => {
                let v = t * t * t * (10.0 - 15.0 * t + 6.0 * t * t);
                let d1 = 30.0 * t * t * (1.0 - t) * (1.0 - t);
                let d2 = 60.0 * t * (1.0 - t) * (1.0 - 2.0 * t);
                (v, d1, d2)
            }
            Mollifier::BumpIntegral(tab) => {
                let v = tab.value(t);
                let d1 = bump_kernel(t) / tab.c0;
                let d2 = bump_kernel_d1(t) / tab.c0;
                (v, d1, d2)
            }
            Mollifier::UserC3(f) => f(t),
        }
    }
}

/// Evaluates a mollifier with a domain check.
pub fn eval_mollifier(m: &Mollifier, t: f64) -> Result<(f64, f64, f64)> {
    if !(-1e-12..=1.0 + 1e-12).contains(&t) {
        return Err(QgError::InvalidArgument(format!(
            "mollifier argument {t} outside [0, 1]"
        )));
    }
    Ok(m.eval(t))
}

/// A step bridge with only first-order endpoint flatness; produces a C¹
/// modified distance whose second derivative jumps at peak midpoints.
#[derive(Clone)]
pub struct StepFunctionTau {
    f: Arc<dyn Fn(f64) -> (f64, f64, f64) + Send + Sync>,
    name: &'static str,
}

impl fmt::Debug for StepFunctionTau {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name)
    }
}

impl StepFunctionTau {
    /// The cubic smoothstep `3t^2 - 2t^3`: monotone, C¹-flat at the ends,
    /// with nonvanishing second derivative there.
    pub fn smoothstep() -> Self {
        StepFunctionTau {
            f: Arc::new(|t: f64| {
                let v = t * t * (3.0 - 2.0 * t);
                let d1 = 6.0 * t * (1.0 - t);
                let d2 = 6.0 - 12.0 * t;
                (v, d1, d2)
            }),
            name: "tau-smoothstep",
        }
    }

    pub fn custom(
        name: &'static str,
        f: impl Fn(f64) -> (f64, f64, f64) + Send + Sync + 'static,
    ) -> Self {
        StepFunctionTau { f: Arc::new(f), name }
    }

    pub fn name(&self) -> &'static str {
        self.name
    }

    pub fn smoothness_class(&self) -> u8 {
        1
    }

    pub fn eval(&self, t: f64) -> (f64, f64, f64) {
        (self.f)(t.clamp(0.0, 1.0))
    }
}

/// Either bridge kind, used uniformly by the coordinate transform.
#[derive(Clone, Debug)]
pub enum Bridge {
    C3(Mollifier),
    C1(StepFunctionTau),
}

impl Bridge {
    fn eval(&self, t: f64) -> (f64, f64, f64) {
        match self {
            Bridge::C3(m) => m.eval(t),
            Bridge::C1(t0) => t0.eval(t),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Bridge::C3(m) => m.name(),
            Bridge::C1(t) => t.name(),
        }
    }

    pub fn smoothness_class(&self) -> u8 {
        match self {
            Bridge::C3(m) => m.smoothness_class(),
            Bridge::C1(t) => t.smoothness_class(),
        }
    }
}

/// Checks one bridge function against its defining conditions.
#[derive(Debug, Clone, Serialize)]
pub struct MollifierReport {
    pub name: String,
    pub smoothness_class: u8,
    /// `(value, d1, d2)` residuals at t=0: value, slope, curvature should
    /// all vanish there.
    pub residual_at_0: (f64, f64, f64),
    /// Residuals at t=1: value-1, slope, curvature.
    pub residual_at_1: (f64, f64, f64),
    pub endpoint_pass: bool,
    pub monotone: bool,
    pub sup_d1: f64,
    pub sup_d2: f64,
    pub max_fd_mismatch_d1: f64,
    pub max_fd_mismatch_d2: f64,
    pub fd_pass: bool,
    pub pass: bool,
}

fn verify_bridge(
    eval: &dyn Fn(f64) -> (f64, f64, f64),
    name: &str,
    class: u8,
    n_samples: usize,
    tol: f64,
) -> MollifierReport {
    let n = n_samples.max(16);
    let (v0, a0, b0) = eval(0.0);
    let (v1, a1, b1) = eval(1.0);
    let residual_at_0 = (v0.abs(), a0.abs(), b0.abs());
    let residual_at_1 = ((v1 - 1.0).abs(), a1.abs(), b1.abs());
    let mut endpoint_pass = residual_at_0.0 <= tol
        && residual_at_0.1 <= tol
        && residual_at_1.0 <= tol
        && residual_at_1.1 <= tol;
    if class >= 2 {
        endpoint_pass &= residual_at_0.2 <= tol && residual_at_1.2 <= tol;
    }

    let mut monotone = true;
    let (mut sup_d1, mut sup_d2) = (0.0f64, 0.0f64);
    let (mut mis1, mut mis2) = (0.0f64, 0.0f64);
    let h = 1e-5;
    for i in 0..=n {
        let t = i as f64 / n as f64;
        let (_, d1, d2) = eval(t);
        monotone &= d1 >= -tol;
        sup_d1 = sup_d1.max(d1.abs());
        sup_d2 = sup_d2.max(d2.abs());
        if t >= 2.0 * h && t <= 1.0 - 2.0 * h {
            let (vm, d1m, _) = eval(t - h);
            let (vp, d1p, _) = eval(t + h);
            let fd1 = (vp - vm) / (2.0 * h);
            let fd2 = (d1p - d1m) / (2.0 * h);
            mis1 = mis1.max((fd1 - d1).abs() / d1.abs().max(1.0));
            mis2 = mis2.max((fd2 - d2).abs() / d2.abs().max(1.0));
        }
    }
    let fd_pass = mis1 <= 1e-4 && mis2 <= 1e-4;
    MollifierReport {
        name: name.to_string(),
        smoothness_class: class,
        residual_at_0,
        residual_at_1,
        endpoint_pass,
        monotone,
        sup_d1,
        sup_d2,
        max_fd_mismatch_d1: mis1,
        max_fd_mismatch_d2: mis2,
        fd_pass,
        pass: endpoint_pass && monotone && fd_pass && sup_d1.is_finite() && sup_d2.is_finite(),
    }
}

/// Verifies endpoint values and flatness, monotonicity, boundedness, and
/// agreement of the analytic derivatives with central differences.
pub fn verify_mollifier(m: &Mollifier, n_samples: usize, tol: f64) -> MollifierReport {
    verify_bridge(&|t| m.eval(t), m.name(), m.smoothness_class(), n_samples, tol)
}

/// Same checks for a C¹ step bridge (second-derivative flatness exempt).
pub fn verify_tau(t: &StepFunctionTau, n_samples: usize, tol: f64) -> MollifierReport {
    verify_bridge(&|x| t.eval(x), t.name(), t.smoothness_class(), n_samples, tol)
}

fn xform(l: f64, case: EdgeCase, bridge: &Bridge, x: f64) -> (f64, f64, f64) {
    match case {
        EdgeCase::Rising | EdgeCase::Falling => {
            let (v, d1, d2) = bridge.eval(x / l);
            (l * v, d1, d2 / l)
        }
        EdgeCase::Peak(q) => {
            let half = 0.5 * l;
            if x <= half {
                let (v, d1, d2) = bridge.eval(2.0 * x / l);
                (q * v, q * d1 * 2.0 / l, q * d2 * 4.0 / (l * l))
            } else {
                let (v, d1, d2) = bridge.eval((2.0 * x - l) / l);
                let r = l - q;
                (q + r * v, r * d1 * 2.0 / l, r * d2 * 4.0 / (l * l))
            }
        }
    }
}

/// The per-edge coordinate change `x -> x~` and its derivatives.
///
/// Monotone edges stretch the whole interval through the bridge; peak edges
/// map each half onto its side of the peak so that the peak lands exactly at
/// the midpoint and the transform is flat at both vertices and the midpoint.
pub fn coordinate_transform(
    g: &MetricGraph,
    e: usize,
    case: EdgeCase,
    m: &Mollifier,
    x: f64,
) -> Result<(f64, f64, f64)> {
    let l = g.length(e);
    if !(0.0..=l).contains(&x) {
        return Err(QgError::CoordOutOfRange {
            edge: g.edge_id(e).to_string(),
            coord: x,
            len: l,
        });
    }
    Ok(xform(l, case, &Bridge::C3(m.clone()), x))
}

#[derive(Clone, Copy, Debug)]
struct EdgeMd {
    di: f64,
    dj: f64,
    l: f64,
    case: EdgeCase,
}

/// Cloneable single-edge evaluator of the modified distance, for embedding
/// in function closures.
#[derive(Clone)]
pub struct EdgeDistEval {
    md: EdgeMd,
    bridge: Bridge,
}

impl EdgeDistEval {
    /// `(d~, d~', d~'')` at edge coordinate `x`.
    pub fn eval(&self, x: f64) -> (f64, f64, f64) {
        let EdgeMd { di, dj, l, case } = self.md;
        let (xt, xd1, xd2) = xform(l, case, &self.bridge, x);
        match case {
            EdgeCase::Rising => (di + xt, xd1, xd2),
            EdgeCase::Falling => (di - xt, -xd1, -xd2),
            EdgeCase::Peak(_) => {
                if x <= 0.5 * l {
                    (di + xt, xd1, xd2)
                } else {
                    (dj + l - xt, -xd1, -xd2)
                }
            }
        }
    }

    /// Unmodified distance profile at `x` on this edge.
    pub fn dist(&self, x: f64) -> f64 {
        let EdgeMd { di, dj, l, .. } = self.md;
        (di + x).min(dj + l - x)
    }
}

/// Modified distance field: the geodesic distances composed with per-edge
/// flat coordinate changes, carrying analytic first and second derivatives.
#[derive(Clone)]
pub struct ModifiedDistanceField {
    pub df: DistanceField,
    bridge: Bridge,
    edges: Vec<EdgeMd>,
    /// Midpoints of peak edges, where the peak is repositioned.
    pub segment_points: Vec<(usize, f64)>,
    pub smoothness_class: u8,
    pub j_sup: f64,
}

fn build_mdf(g: &MetricGraph, df: &DistanceField, bridge: Bridge) -> ModifiedDistanceField {
    let edges: Vec<EdgeMd> = (0..g.n_edges())
        .map(|e| EdgeMd {
            di: df.vertex_dist[g.from(e)],
            dj: df.vertex_dist[g.to(e)],
            l: g.length(e),
            case: df.edge_case[e],
        })
        .collect();
    let segment_points = (0..g.n_edges())
        .filter(|&e| matches!(df.edge_case[e], EdgeCase::Peak(_)))
        .map(|e| (e, 0.5 * g.length(e)))
        .collect();
    let smoothness_class = bridge.smoothness_class();
    let j_sup = (0..g.n_edges()).map(|e| g.length(e)).fold(0.0, f64::max);
    ModifiedDistanceField {
        df: df.clone(),
        bridge,
        edges,
        segment_points,
        smoothness_class,
        j_sup,
    }
}

/// Builds the C² modified distance field from a C³-flat mollifier.
pub fn modified_distance(
    g: &MetricGraph,
    df: &DistanceField,
    m: &Mollifier,
) -> ModifiedDistanceField {
    build_mdf(g, df, Bridge::C3(m.clone()))
}

/// Builds the C¹ modified distance field from a step bridge; the second
/// derivative is only piecewise continuous.
pub fn c1_modified_distance(
    g: &MetricGraph,
    df: &DistanceField,
    tau: &StepFunctionTau,
) -> ModifiedDistanceField {
    build_mdf(g, df, Bridge::C1(tau.clone()))
}

impl ModifiedDistanceField {
    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        self.edges[e].l
    }

    /// `(d~, d~', d~'')` at coordinate `x` of edge `e`.
    pub fn eval(&self, e: usize, x: f64) -> (f64, f64, f64) {
        EdgeDistEval {
            md: self.edges[e],
            bridge: self.bridge.clone(),
        }
        .eval(x)
    }

    /// The modified distance agrees with the true distance at vertices.
    pub fn vertex_value(&self, v: usize) -> f64 {
        self.df.vertex_dist[v]
    }

    /// Cheap cloneable evaluator for one edge.
    pub fn evaluator(&self, e: usize) -> EdgeDistEval {
        EdgeDistEval {
            md: self.edges[e],
            bridge: self.bridge.clone(),
        }
    }

    pub fn bridge_name(&self) -> &'static str {
        self.bridge.name()
    }
}

/// Per-edge summary from [`verify_modified_distance`].
#[derive(Debug, Clone, Serialize)]
pub struct ModifiedDistanceRow {
    pub edge: usize,
    pub sup_d1: f64,
    pub sup_d2: f64,
    pub max_dev: f64,
    /// Largest one-sided first-difference magnitude at the edge's vertices
    /// and (for peak edges) at the midpoint.
    pub max_fd1_onesided: f64,
    /// Same stencil applied to the first derivative, estimating the
    /// one-sided second derivative.
    pub max_fd2_onesided: f64,
    pub seg_value_gap: f64,
    pub seg_d1_gap: f64,
    pub seg_d2_gap: f64,
}

/// Numerical verification of the modified-distance conclusions: one-sided
/// flatness, uniform derivative bounds, distance deviation, and continuity
/// across peak midpoints.
#[derive(Debug, Clone, Serialize)]
pub struct ModifiedDistanceReport {
    pub bridge: String,
    pub smoothness_class: u8,
    pub rows: Vec<ModifiedDistanceRow>,
    pub sup_d1: f64,
    pub sup_d2: f64,
    pub max_dev: f64,
    pub j_sup: f64,
    pub max_fd1_onesided: f64,
    pub max_fd2_onesided: f64,
    pub max_seg_d2_gap: f64,
    pub first_order_pass: bool,
    pub second_order_pass: bool,
    pub dev_pass: bool,
    pub d1_continuous_at_segments: bool,
    pub d2_continuous_at_segments: bool,
    pub grid: usize,
    pub tol: f64,
    pub fd_h: f64,
}

/// One-sided difference checks with step `h = 1e-6`, derivative sups on a
/// per-edge grid, and the deviation bound against the longest edge.
pub fn verify_modified_distance(mdf: &ModifiedDistanceField, grid: usize, tol: f64) -> ModifiedDistanceReport {
    let h = 1e-6;
    let grid = grid.max(16);
    let mut rows = Vec::with_capacity(mdf.n_edges());
    for e in 0..mdf.n_edges() {
        let ev = mdf.evaluator(e);
        let l = mdf.edges[e].l;
        let f = |x: f64| ev.eval(x).0;

        let (mut sup_d1, mut sup_d2, mut max_dev) = (0.0f64, 0.0f64, 0.0f64);
        for i in 0..=grid {
            let x = l * i as f64 / grid as f64;
            let (v, d1, d2) = ev.eval(x);
            sup_d1 = sup_d1.max(d1.abs());
            sup_d2 = sup_d2.max(d2.abs());
            max_dev = max_dev.max((v - ev.dist(x)).abs());
        }

        // one-sided stencils pointing into the edge from each flat point
        let mut pts: Vec<(f64, f64)> = vec![(0.0, 1.0), (l, -1.0)];
        let is_peak = matches!(mdf.edges[e].case, EdgeCase::Peak(_));
        if is_peak {
            pts.push((0.5 * l, 1.0));
            pts.push((0.5 * l, -1.0));
        }
        // first difference of values for d~', first difference of the
        // derivative for d~'': a value-based second difference at this step
        // size sits on the cancellation floor (~eps |f| / h^2 > 1e-3) and
        // cannot resolve flatness at all
        let (mut fd1m, mut fd2m) = (0.0f64, 0.0f64);
        for (x0, dir) in pts {
            let (f0, f1) = (f(x0), f(x0 + dir * h));
            let g0 = ev.eval(x0).1;
            let g1 = ev.eval(x0 + dir * h).1;
            fd1m = fd1m.max(((f1 - f0) / (dir * h)).abs());
            fd2m = fd2m.max(((g1 - g0) / (dir * h)).abs());
        }

        let (mut sv, mut s1, mut s2) = (0.0, 0.0, 0.0);
        if is_peak {
            let s = 0.5 * l;
            let eps = 1e-12 * l.max(1.0);
            let (va, d1a, d2a) = ev.eval(s - eps);
            let (vb, d1b, d2b) = ev.eval(s + eps);
            sv = (va - vb).abs();
            s1 = (d1a - d1b).abs();
            s2 = (d2a - d2b).abs();
        }

        rows.push(ModifiedDistanceRow {
            edge: e,
            sup_d1,
            sup_d2,
            max_dev,
            max_fd1_onesided: fd1m,
            max_fd2_onesided: fd2m,
            seg_value_gap: sv,
            seg_d1_gap: s1,
            seg_d2_gap: s2,
        });
    }

    let agg = |f: &dyn Fn(&ModifiedDistanceRow) -> f64| rows.iter().map(f).fold(0.0, f64::max);
    let sup_d1 = agg(&|r| r.sup_d1);
    let sup_d2 = agg(&|r| r.sup_d2);
    let max_dev = agg(&|r| r.max_dev);
    let max_fd1 = agg(&|r| r.max_fd1_onesided);
    let max_fd2 = agg(&|r| r.max_fd2_onesided);
    let seg_d2 = agg(&|r| r.seg_d2_gap);
    let seg_ok = |v: f64| v <= tol;
    ModifiedDistanceReport {
        bridge: mdf.bridge_name().to_string(),
        smoothness_class: mdf.smoothness_class,
        sup_d1,
        sup_d2,
        max_dev,
        j_sup: mdf.j_sup,
        max_fd1_onesided: max_fd1,
        max_fd2_onesided: max_fd2,
        max_seg_d2_gap: seg_d2,
        first_order_pass: max_fd1 <= tol,
        second_order_pass: max_fd2 <= tol,
        dev_pass: max_dev <= mdf.j_sup + 1e-9,
        d1_continuous_at_segments: rows.iter().all(|r| seg_ok(r.seg_d1_gap) && seg_ok(r.seg_value_gap)),
        d2_continuous_at_segments: rows.iter().all(|r| seg_ok(r.seg_d2_gap)),
        rows,
        grid,
        tol,
        fd_h: h,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators;
    use crate::geodesics::distance_field;

    #[test]
    fn quintic_values() {
        let m = Mollifier::quintic();
        assert_eq!(m.eval(0.0), (0.0, 0.0, 0.0));
        let (v1, d1, d2) = m.eval(1.0);
        assert!((v1 - 1.0).abs() < 1e-15 && d1.abs() < 1e-15 && d2.abs() < 1e-15);
        let (v, d1, _) = m.eval(0.5);
        assert!((v - 0.5).abs() < 1e-15);
        assert!((d1 - 1.875).abs() < 1e-15);
    }

    #[test]
    fn quintic_report_passes() {
        let rep = verify_mollifier(&Mollifier::quintic(), 256, 1e-12);
        assert!(rep.pass, "{rep:?}");
    }

    #[test]
    fn bump_normalization_and_report() {
        let m = Mollifier::bump();
        let (v, _, _) = m.eval(1.0);
        assert!((v - 1.0).abs() <= 1e-10);
        let rep = verify_mollifier(&m, 256, 1e-10);
        assert!(rep.pass, "{rep:?}");
        // antisymmetry of the kernel makes the midpoint exact
        let (vm, _, _) = m.eval(0.5);
        assert!((vm - 0.5).abs() < 1e-10);
    }

    #[test]
    fn bump_interpolation_against_direct_quadrature() {
        let m = Mollifier::bump();
        let tab = match &m {
            Mollifier::BumpIntegral(t) => t.clone(),
            _ => unreachable!(),
        };
        for &t in &[0.03, 0.2, 0.37, 0.5, 0.61, 0.84, 0.97] {
            let direct = adaptive_simpson(&bump_kernel, 0.0, t, 1e-15) / tab.c0;
            let (v, _, _) = m.eval(t);
            assert!((v - direct).abs() < 1e-10, "t={t}: {v} vs {direct}");
        }
    }

    #[test]
    fn broken_mollifier_detected() {
        let broken = Mollifier::user_c3(|t| (t, 1.0, 0.0));
        let rep = verify_mollifier(&broken, 64, 1e-12);
        assert!(!rep.endpoint_pass && !rep.pass);
    }

    #[test]
    fn tau_passes_its_own_class() {
        let rep = verify_tau(&StepFunctionTau::smoothstep(), 128, 1e-12);
        assert!(rep.pass, "{rep:?}");
        assert_eq!(rep.smoothness_class, 1);
    }

    #[test]
    fn transform_endpoints_and_peak_midpoint() {
        let g = generators::parallel_chain(1).unwrap();
        let df = distance_field(&g).unwrap();
        let m = Mollifier::quintic();
        let long = g.edge_index("b1").unwrap();
        let case = df.edge_case[long];
        let (x0, _, _) = coordinate_transform(&g, long, case, &m, 0.0).unwrap();
        let (xm, d1m, _) = coordinate_transform(&g, long, case, &m, 1.5).unwrap();
        let (xl, _, _) = coordinate_transform(&g, long, case, &m, 3.0).unwrap();
        assert_eq!(x0, 0.0);
        assert!((xm - 2.0).abs() < 1e-15, "midpoint maps to the peak");
        assert!((xl - 3.0).abs() < 1e-15);
        assert!(d1m.abs() < 1e-15);
        let short = g.edge_index("a1").unwrap();
        let (y0, _, _) = coordinate_transform(&g, short, df.edge_case[short], &m, 0.0).unwrap();
        let (y1, _, _) = coordinate_transform(&g, short, df.edge_case[short], &m, 1.0).unwrap();
        assert_eq!((y0, y1), (0.0, 1.0));
    }

    #[test]
    fn modified_distance_matches_displayed_case_formulas() {
        // closed-form per-case values for the quintic bridge
        let g = generators::parallel_chain(1).unwrap();
        let df = distance_field(&g).unwrap();
        let m = Mollifier::quintic();
        let mdf = modified_distance(&g, &df, &m);
        let long = g.edge_index("b1").unwrap();
        let (l, q, di) = (3.0, 2.0, 0.0);
        let eta = |t: f64| m.eval(t).0;
        for i in 0..=40 {
            let x = l * i as f64 / 40.0;
            let expect = if x <= 0.5 * l {
                di + q * eta(2.0 * x / l)
            } else {
                di + q + (q - l) * eta((2.0 * x - l) / l)
            };
            let got = mdf.eval(long, x).0;
            assert!((got - expect).abs() < 1e-12, "x={x}: {got} vs {expect}");
        }
        let short = g.edge_index("a1").unwrap();
        for i in 0..=10 {
            let x = i as f64 / 10.0;
            let got = mdf.eval(short, x).0;
            assert!((got - eta(x)).abs() < 1e-14);
        }
        // vertices and the repositioned peak
        assert_eq!(mdf.vertex_value(0), 0.0);
        assert_eq!(mdf.vertex_value(1), 1.0);
        assert!((mdf.eval(long, 1.5).0 - 2.0).abs() < 1e-15);
        assert_eq!(mdf.segment_points, vec![(long, 1.5)]);
    }

    #[test]
    fn rising_edge_on_a_path() {
        let g = generators::path(2).unwrap();
        let df = distance_field(&g).unwrap();
        let mdf = modified_distance(&g, &df, &Mollifier::quintic());
        assert!((mdf.eval(0, 0.5).0 - 0.5).abs() < 1e-15);
        assert!((mdf.eval(1, 0.5).0 - 1.5).abs() < 1e-15);
    }

    #[test]
    fn falling_edge_orientation() {
        // edge written pointing back toward the base
        let g = crate::graph::GraphBuilder::new()
            .vertex("a", 1.0)
            .vertex("b", 1.0)
            .edge("e", "b", "a", 1.0, 1.0)
            .base("a")
            .build()
            .unwrap();
        let df = distance_field(&g).unwrap();
        assert_eq!(df.edge_case[0], EdgeCase::Falling);
        let mdf = modified_distance(&g, &df, &Mollifier::quintic());
        let (v, d1, _) = mdf.eval(0, 0.5);
        assert!((v - 0.5).abs() < 1e-15);
        assert!(d1 < 0.0);
        assert!((mdf.eval(0, 0.0).0 - 1.0).abs() < 1e-15);
        assert!(mdf.eval(0, 1.0).0.abs() < 1e-15);
    }

    fn fixtures() -> Vec<crate::graph::MetricGraph> {
        vec![
            generators::path(6).unwrap(),
            generators::star(4).unwrap(),
            generators::tree(2, 4).unwrap(),
            generators::parallel_chain(1).unwrap(),
        ]
    }

    #[test]
    fn modified_distance_checks_pass_for_c3_bridges() {
        for g in fixtures() {
            let df = distance_field(&g).unwrap();
            for m in [Mollifier::quintic(), Mollifier::bump()] {
                let mdf = modified_distance(&g, &df, &m);
                let rep = verify_modified_distance(&mdf, 128, 1e-4);
                assert!(
                    rep.first_order_pass && rep.second_order_pass,
                    "{} fd1={} fd2={}",
                    m.name(),
                    rep.max_fd1_onesided,
                    rep.max_fd2_onesided
                );
                assert!(rep.dev_pass, "dev {} vs j {}", rep.max_dev, rep.j_sup);
                assert!(rep.d1_continuous_at_segments && rep.d2_continuous_at_segments);
                assert!(rep.sup_d1.is_finite() && rep.sup_d2.is_finite());
            }
        }
    }

    #[test]
    fn tau_variant_jumps_at_the_segment_point() {
        let g = generators::parallel_chain(1).unwrap();
        let df = distance_field(&g).unwrap();
        let mdf = c1_modified_distance(&g, &df, &StepFunctionTau::smoothstep());
        let rep = verify_modified_distance(&mdf, 128, 1e-4);
        assert!(rep.first_order_pass, "first-order flatness survives");
        assert!(rep.d1_continuous_at_segments);
        assert!(!rep.d2_continuous_at_segments, "expected curvature jump");
        // jump magnitude: |q - (l-q)| * tau''(1) * 4/l^2 = 1 * 6 * 4/9
        assert!((rep.max_seg_d2_gap - 8.0 / 3.0).abs() < 1e-9, "{}", rep.max_seg_d2_gap);
    }

    #[test]
    fn chain_rule_against_central_differences() {
        let g = generators::parallel_chain(1).unwrap();
        let df = distance_field(&g).unwrap();
        for m in [Mollifier::quintic(), Mollifier::bump()] {
            let mdf = modified_distance(&g, &df, &m);
            let h = 1e-5;
            for e in 0..g.n_edges() {
                let l = g.length(e);
                let ev = mdf.evaluator(e);
                for i in 1..64 {
                    let x = l * i as f64 / 64.0;
                    if (x - 0.5 * l).abs() < 2.0 * h || x < 2.0 * h || x > l - 2.0 * h {
                        continue;
                    }
                    let (_, d1, d2) = ev.eval(x);
                    let fd1 = (ev.eval(x + h).0 - ev.eval(x - h).0) / (2.0 * h);
                    let fd2 = (ev.eval(x + h).1 - ev.eval(x - h).1) / (2.0 * h);
                    assert!((fd1 - d1).abs() <= 1e-4 * d1.abs().max(1.0), "{} x={x}", m.name());
                    assert!((fd2 - d2).abs() <= 1e-4 * d2.abs().max(1.0), "{} x={x}", m.name());
                }
            }
        }
    }
}
