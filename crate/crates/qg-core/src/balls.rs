use crate::error::{QgError, Result};
use crate::geodesics::DistanceField;
use crate::graph::MetricGraph;

/// A region of the graph: whole vertices plus closed edge sub-intervals
/// `(edge, lo, hi)` in edge coordinates. Sub-intervals never straddle an
/// interior distance peak; an interval that would contain one is reported
/// as the two pieces meeting at the peak coordinate.
#[derive(Debug, Clone, Default)]
pub struct PointSet {
    pub vertices: Vec<usize>,
    pub intervals: Vec<(usize, f64, f64)>,
}

impl PointSet {
    /// Total length of the edge part.
    pub fn edge_length(&self) -> f64 {
        self.intervals.iter().map(|&(_, lo, hi)| hi - lo).sum()
    }

    /// Total measure of the vertex part.
    pub fn vertex_measure(&self, g: &MetricGraph) -> f64 {
        self.vertices.iter().map(|&v| g.mu(v)).sum()
    }
}

const DEGENERATE: f64 = 1e-12;

/// Returns the sub-intervals of edge `e` on which the base distance lies in
/// `[v_lo, v_hi]`, split at the interior peak if the edge has one.
pub fn edge_level_intervals(
    g: &MetricGraph,
    df: &DistanceField,
    e: usize,
    v_lo: f64,
    v_hi: f64,
) -> Vec<(f64, f64)> {
    let l = g.length(e);
    let di = df.vertex_dist[g.from(e)];
    let dj = df.vertex_dist[g.to(e)];
    let m = df.apex(g, e);
    let mut out = Vec::new();
    // rising part [0, m]: distance di + x
    if m > 0.0 {
        let lo = (v_lo - di).max(0.0);
        let hi = (v_hi - di).min(m);
        if hi - lo > DEGENERATE {
            out.push((lo, hi));
        }
    }
    // falling part [m, l]: distance dj + l - x
    if m < l {
        let lo = (l + dj - v_hi).max(m);
        let hi = (l + dj - v_lo).min(l);
        if hi - lo > DEGENERATE {
            out.push((lo, hi));
        }
    }
    out
}

/// Metric ball `B_R` (distance < R) and closed annulus `E_R`
/// (R <= distance <= 2R) as vertex sets plus edge sub-intervals.
///
/// Ball edge intervals are reported closed; their interiors satisfy the
/// strict inequality. Vertices with distance exactly `R` belong to the
/// annulus, not the ball.
pub fn ball_and_annulus(
    g: &MetricGraph,
    df: &DistanceField,
    r: f64,
) -> Result<(PointSet, PointSet)> {
    if !(r > 0.0) {
        return Err(QgError::InvalidArgument(format!(
            "radius must be positive, got {r}"
        )));
    }
    let mut ball = PointSet::default();
    let mut annulus = PointSet::default();
    for v in 0..g.n_vertices() {
        let d = df.vertex_dist[v];
        if d < r {
            ball.vertices.push(v);
        }
        if d >= r - DEGENERATE && d <= 2.0 * r + DEGENERATE {
            annulus.vertices.push(v);
        }
    }
    for e in 0..g.n_edges() {
        for (lo, hi) in edge_level_intervals(g, df, e, f64::NEG_INFINITY, r) {
            ball.intervals.push((e, lo, hi));
        }
        for (lo, hi) in edge_level_intervals(g, df, e, r, 2.0 * r) {
            annulus.intervals.push((e, lo, hi));
        }
    }
    Ok((ball, annulus))
}
