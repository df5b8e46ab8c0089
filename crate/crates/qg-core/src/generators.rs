//! Generators for the standard graph families.
//!
//! Each generator produces a finite truncation of an infinite family with
//! unit measures and weights unless stated otherwise; the truncation
//! parameter is the family size, and the base vertex is always the natural
//! origin (path end, star center, tree root, chain end, ladder corner).
//! Lengths are rational so that distance arithmetic stays exact at machine
//! precision.

use crate::error::Result;
use crate::graph::{GraphBuilder, MetricGraph};

/// Path `P_n`: vertices `v0..vn` joined by `n` unit edges, base `v0`.
///
/// Truncates the half-infinite path; distances are the integers `0..=n`.
pub fn path(n: usize) -> Result<MetricGraph> {
    let mut b = GraphBuilder::new().vertex("v0", 1.0).base("v0");
    for k in 1..=n {
        b = b
            .vertex(&format!("v{k}"), 1.0)
            .edge(&format!("e{k}"), &format!("v{}", k - 1), &format!("v{k}"), 1.0, 1.0);
    }
    b.build()
}

/// Star `S_n`: a center `c` with `n` unit spokes to leaves `l1..ln`, base `c`.
pub fn star(n: usize) -> Result<MetricGraph> {
    let mut b = GraphBuilder::new().vertex("c", 1.0).base("c");
    for k in 1..=n {
        let leaf = format!("l{k}");
        b = b.vertex(&leaf, 1.0).edge(&format!("s{k}"), "c", &leaf, 1.0, 1.0);
    }
    b.build()
}

/// Rooted `b`-ary tree of the given depth with unit edges, base at the root.
///
/// Level `k` holds `b^k` vertices; the truncation cuts the infinite tree
/// below level `depth`. Vertex ids are `n<index>` in breadth-first order.
pub fn tree(branching: usize, depth: usize) -> Result<MetricGraph> {
    assert!(branching >= 1, "branching must be at least 1");
    let mut g = GraphBuilder::new().vertex("n0", 1.0).base("n0");
    let mut next = 1usize;
    let mut level: Vec<usize> = vec![0];
    for _ in 0..depth {
        let mut below = Vec::with_capacity(level.len() * branching);
        for &parent in &level {
            for _ in 0..branching {
                let id = format!("n{next}");
                g = g
                    .vertex(&id, 1.0)
                    .edge(&format!("e{next}"), &format!("n{parent}"), &id, 1.0, 1.0);
                below.push(next);
                next += 1;
            }
        }
        level = below;
    }
    g.build()
}

/// Chain of `n` parallel-edge pairs: consecutive vertices `p0..pn` joined by
/// a unit edge `a<k>` and a length-3 edge `b<k>`, base `p0`.
///
/// `parallel_chain(1)` is the canonical two-edge multigraph whose long edge
/// carries an interior distance peak at coordinate 2.
pub fn parallel_chain(n: usize) -> Result<MetricGraph> {
    let mut b = GraphBuilder::new().vertex("p0", 1.0).base("p0");
    for k in 1..=n {
        let (prev, cur) = (format!("p{}", k - 1), format!("p{k}"));
        b = b
            .vertex(&cur, 1.0)
            .edge(&format!("a{k}"), &prev, &cur, 1.0, 1.0)
            .edge(&format!("b{k}"), &prev, &cur, 3.0, 1.0);
    }
    b.build()
}

/// Ladder of `n` unit squares: rails `u0..un`, `w0..wn`, rungs at each index,
/// base `u0`.
pub fn ladder(n: usize) -> Result<MetricGraph> {
    let mut b = GraphBuilder::new()
        .vertex("u0", 1.0)
        .vertex("w0", 1.0)
        .edge("r0", "u0", "w0", 1.0, 1.0)
        .base("u0");
    for k in 1..=n {
        let (pu, pw) = (format!("u{}", k - 1), format!("w{}", k - 1));
        let (u, w) = (format!("u{k}"), format!("w{k}"));
        b = b
            .vertex(&u, 1.0)
            .vertex(&w, 1.0)
            .edge(&format!("tu{k}"), &pu, &u, 1.0, 1.0)
            .edge(&format!("tw{k}"), &pw, &w, 1.0, 1.0)
            .edge(&format!("r{k}"), &u, &w, 1.0, 1.0);
    }
    b.build()
}
