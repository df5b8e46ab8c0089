use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::Serialize;

use crate::error::{QgError, Result};
use crate::graph::{GraphPoint, MetricGraph};

/// Tolerance below which a length tie is classified as monotone rather than
/// as an interior peak.
pub const TIE_TOL: f64 = 1e-12;

/// How the base distance behaves along one edge, read in coordinate
/// direction from `i(e)` to `j(e)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum EdgeCase {
    /// `d(j) = d(i) + l_e`: distance increases along the whole edge.
    Rising,
    /// `d(i) = d(j) + l_e`: distance decreases along the whole edge.
    Falling,
    /// Shortest paths from both endpoints meet strictly inside, at the given
    /// coordinate: the distance rises to a peak there and falls beyond.
    Peak(f64),
}

/// Geodesic distances to the base vertex plus the per-edge classification.
#[derive(Debug, Clone)]
pub struct DistanceField {
    pub vertex_dist: Vec<f64>,
    pub edge_case: Vec<EdgeCase>,
}

#[derive(Copy, Clone, PartialEq)]
struct HeapItem {
    dist: f64,
    v: usize,
}

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap with deterministic vertex-index tie break
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.v.cmp(&self.v))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Exact shortest-path distances from the base by Dijkstra over edge
/// lengths. Fails if any vertex is unreachable.
pub fn vertex_distances(g: &MetricGraph) -> Result<Vec<f64>> {
    let n = g.n_vertices();
    let mut dist = vec![f64::INFINITY; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    dist[g.base()] = 0.0;
    heap.push(HeapItem { dist: 0.0, v: g.base() });
    while let Some(HeapItem { dist: d, v }) = heap.pop() {
        if done[v] {
            continue;
        }
        done[v] = true;
        for &(e, w) in g.adjacency(v) {
            let nd = d + g.length(e);
            if nd < dist[w] {
                dist[w] = nd;
                heap.push(HeapItem { dist: nd, v: w });
            }
        }
    }
    if let Some(v) = (0..n).find(|&v| !done[v]) {
        return Err(QgError::Disconnected(g.vertex_id(v).to_string()));
    }
    Ok(dist)
}

/// Labels every edge Rising, Falling, or Peak from the vertex distances.
///
/// The peak coordinate solves `d(i) + q = d(j) + l - q`; ties with
/// `|d(j) - d(i)| = l` within [`TIE_TOL`] stay monotone so that peaks are
/// always strictly interior.
pub fn classify_edges(g: &MetricGraph, vertex_dist: Vec<f64>) -> DistanceField {
    let edge_case = (0..g.n_edges())
        .map(|e| {
            let (di, dj, l) = (vertex_dist[g.from(e)], vertex_dist[g.to(e)], g.length(e));
            if l - (dj - di).abs() <= TIE_TOL {
                if dj >= di {
                    EdgeCase::Rising
                } else {
                    EdgeCase::Falling
                }
            } else {
                EdgeCase::Peak((dj - di + l) / 2.0)
            }
        })
        .collect();
    DistanceField {
        vertex_dist,
        edge_case,
    }
}

/// Convenience: distances plus classification in one call.
pub fn distance_field(g: &MetricGraph) -> Result<DistanceField> {
    Ok(classify_edges(g, vertex_distances(g)?))
}

impl DistanceField {
    /// Distance of an edge point at coordinate `x in [0, l_e]` to the base:
    /// the smaller of the two endpoint routes.
    pub fn dist_on_edge(&self, g: &MetricGraph, e: usize, x: f64) -> Result<f64> {
        let l = g.length(e);
        if !(0.0..=l).contains(&x) {
            return Err(QgError::CoordOutOfRange {
                edge: g.edge_id(e).to_string(),
                coord: x,
                len: l,
            });
        }
        let di = self.vertex_dist[g.from(e)];
        let dj = self.vertex_dist[g.to(e)];
        Ok((di + x).min(dj + l - x))
    }

    /// Distance of a graph point to the base.
    pub fn point_distance(&self, g: &MetricGraph, p: GraphPoint) -> Result<f64> {
        match p {
            GraphPoint::Vertex(v) => Ok(self.vertex_dist[v]),
            GraphPoint::EdgeInterior(e, x) => {
                let l = g.length(e);
                if !(x > 0.0 && x < l) {
                    return Err(QgError::CoordOutOfRange {
                        edge: g.edge_id(e).to_string(),
                        coord: x,
                        len: l,
                    });
                }
                self.dist_on_edge(g, e, x)
            }
        }
    }

    /// Coordinate of the distance maximum on the edge: the peak coordinate
    /// on peak edges, otherwise the far endpoint.
    pub fn apex(&self, g: &MetricGraph, e: usize) -> f64 {
        match self.edge_case[e] {
            EdgeCase::Rising => g.length(e),
            EdgeCase::Falling => 0.0,
            EdgeCase::Peak(q) => q,
        }
    }

    /// All interior peak points as `(edge, coordinate)` pairs.
    pub fn singular_points(&self) -> Vec<(usize, f64)> {
        self.edge_case
            .iter()
            .enumerate()
            .filter_map(|(e, c)| match c {
                EdgeCase::Peak(q) => Some((e, *q)),
                _ => None,
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators;
    use crate::graph::GraphBuilder;

    fn parallel() -> MetricGraph {
        generators::parallel_chain(1).unwrap()
    }

    #[test]
    fn path_distances_are_arclengths() {
        let g = generators::path(3).unwrap();
        let df = distance_field(&g).unwrap();
        assert_eq!(df.vertex_dist, vec![0.0, 1.0, 2.0, 3.0]);
        assert!(df.edge_case.iter().all(|c| *c == EdgeCase::Rising));
    }

    #[test]
    fn parallel_edges_take_min_and_peak() {
        let g = parallel();
        let df = distance_field(&g).unwrap();
        assert_eq!(df.vertex_dist[1], 1.0);
        let long = g.edge_index("b1").unwrap();
        assert_eq!(df.edge_case[long], EdgeCase::Peak(2.0));
        let short = g.edge_index("a1").unwrap();
        assert_eq!(df.edge_case[short], EdgeCase::Rising);
    }

    #[test]
    fn star_leaves_equidistant() {
        let g = generators::star(3).unwrap();
        let df = distance_field(&g).unwrap();
        assert!(df.vertex_dist[1..].iter().all(|&d| d == 1.0));
    }

    #[test]
    fn point_distance_on_the_peak_edge() {
        let g = parallel();
        let df = distance_field(&g).unwrap();
        let long = g.edge_index("b1").unwrap();
        let at = |x| df.dist_on_edge(&g, long, x).unwrap();
        assert_eq!(at(2.0), 2.0);
        assert_eq!(at(2.5), 1.5);
        assert_eq!(at(0.25), 0.25);
        assert!(df
            .point_distance(&g, GraphPoint::EdgeInterior(long, 3.5))
            .is_err());
    }

    #[test]
    fn boundary_tie_is_monotone_not_peak() {
        // triangle a-b (len 1), b-c (len 1), a-c (len 2): on edge a-c the
        // difference |d(c)-d(a)| equals the length exactly
        let g = GraphBuilder::new()
            .vertex("a", 1.0)
            .vertex("b", 1.0)
            .vertex("c", 1.0)
            .edge("ab", "a", "b", 1.0, 1.0)
            .edge("bc", "b", "c", 1.0, 1.0)
            .edge("ac", "a", "c", 2.0, 1.0)
            .base("a")
            .build()
            .unwrap();
        let df = distance_field(&g).unwrap();
        assert_eq!(df.edge_case[g.edge_index("ac").unwrap()], EdgeCase::Rising);
    }

    #[test]
    fn disconnected_is_an_error() {
        let g = GraphBuilder::new()
            .vertex("a", 1.0)
            .vertex("b", 1.0)
            .vertex("z", 1.0)
            .edge("e", "a", "b", 1.0, 1.0)
            .base("a")
            .build()
            .unwrap();
        let err = vertex_distances(&g).unwrap_err();
        assert!(err.to_string().contains("`z`"));
    }

    #[test]
    fn peak_slopes_are_unit() {
        let g = parallel();
        let df = distance_field(&g).unwrap();
        let long = g.edge_index("b1").unwrap();
        let h = 1e-6;
        let left = (df.dist_on_edge(&g, long, 2.0).unwrap()
            - df.dist_on_edge(&g, long, 2.0 - h).unwrap())
            / h;
        let right = (df.dist_on_edge(&g, long, 2.0 + h).unwrap()
            - df.dist_on_edge(&g, long, 2.0).unwrap())
            / h;
        assert!((left - 1.0).abs() < 1e-4);
        assert!((right + 1.0).abs() < 1e-4);
    }
}
