use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{QgError, Result};

/// A point of a metric graph: a vertex, or a point strictly inside an edge.
///
/// Edge coordinates measure arclength from the initial vertex `i(e)`, so the
/// interior variant requires `0 < x < l_e`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GraphPoint {
    Vertex(usize),
    EdgeInterior(usize, f64),
}

/// Finite weighted metric graph with a distinguished base vertex.
///
/// Vertices carry positive measures `mu`, edges carry positive lengths and
/// positive symmetric weights `omega`, and every edge is oriented from
/// `from(e)` to `to(e)` purely to give its interval a coordinate direction.
/// Loops are rejected at build time; parallel edges are allowed. The graph
/// is immutable after construction apart from the optional Dirichlet cap
/// set, which marks vertices exempted from interior vertex conditions by
/// certificate checks.
#[derive(Debug, Clone)]
pub struct MetricGraph {
    vertex_ids: Vec<String>,
    vertex_index: BTreeMap<String, usize>,
    mu: Vec<f64>,
    edge_ids: Vec<String>,
    edge_index: BTreeMap<String, usize>,
    efrom: Vec<usize>,
    eto: Vec<usize>,
    length: Vec<f64>,
    omega: Vec<f64>,
    base: usize,
    /// Per vertex: (incident edge, opposite endpoint), edge-sorted.
    adj: Vec<Vec<(usize, usize)>>,
    caps: BTreeSet<usize>,
}

/// Incremental construction of a [`MetricGraph`]; `build` validates.
#[derive(Debug, Default)]
pub struct GraphBuilder {
    vertices: Vec<(String, f64)>,
    edges: Vec<(String, String, String, f64, f64)>,
    base: Option<String>,
}

/// Evaluation of the standing structural hypotheses on a finite graph.
///
/// `j_sup` and `r_inf` are the extreme edge lengths, `weight_ratio_sup` is
/// the largest ratio of total incident edge weight to vertex measure, and
/// `r0 = max(2 j_sup, 1)` is the smallest radius at which the test-function
/// machinery is guaranteed to behave.
#[derive(Debug, Clone, Serialize)]
pub struct HypothesisReport {
    pub connected: bool,
    pub locally_finite: bool,
    pub no_loops: bool,
    pub j_sup: f64,
    pub r_inf: f64,
    pub weight_ratio_sup: f64,
    pub r0: f64,
}

fn check_id(id: &str) -> Result<()> {
    if id.is_empty() {
        return Err(QgError::InvalidArgument("empty id".into()));
    }
    if id
        .chars()
        .any(|c| c.is_whitespace() || c == '#' || c == '=' || c == ',' || c == ':')
    {
        return Err(QgError::InvalidArgument(format!(
            "id `{id}` contains whitespace or a reserved character (# = , :)"
        )));
    }
    Ok(())
}

fn positive(what: &str, id: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(QgError::InvalidArgument(format!(
            "{what} of `{id}` must be positive and finite, got {v}"
        )))
    }
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn vertex(mut self, id: &str, mu: f64) -> Self {
        self.vertices.push((id.to_string(), mu));
        self
    }

    pub fn edge(mut self, id: &str, from: &str, to: &str, length: f64, omega: f64) -> Self {
        self.edges
            .push((id.to_string(), from.to_string(), to.to_string(), length, omega));
        self
    }

    pub fn base(mut self, id: &str) -> Self {
        self.base = Some(id.to_string());
        self
    }

    pub fn build(self) -> Result<MetricGraph> {
        let mut vertex_ids = Vec::with_capacity(self.vertices.len());
        let mut vertex_index = BTreeMap::new();
        let mut mu = Vec::with_capacity(self.vertices.len());
        for (id, m) in &self.vertices {
            check_id(id)?;
            if vertex_index.insert(id.clone(), vertex_ids.len()).is_some() {
                return Err(QgError::InvalidArgument(format!(
                    "duplicate vertex id `{id}`"
                )));
            }
            vertex_ids.push(id.clone());
            mu.push(positive("measure mu", id, *m)?);
        }
        if vertex_ids.is_empty() {
            return Err(QgError::InvalidArgument("graph has no vertices".into()));
        }

        let mut edge_ids = Vec::with_capacity(self.edges.len());
        let mut edge_index = BTreeMap::new();
        let (mut efrom, mut eto, mut length, mut omega) =
            (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        for (id, from, to, l, w) in &self.edges {
            check_id(id)?;
            if edge_index.insert(id.clone(), edge_ids.len()).is_some() {
                return Err(QgError::InvalidArgument(format!("duplicate edge id `{id}`")));
            }
            let fi = *vertex_index
                .get(from)
                .ok_or_else(|| QgError::UnknownVertex(from.clone()))?;
            let ti = *vertex_index
                .get(to)
                .ok_or_else(|| QgError::UnknownVertex(to.clone()))?;
            if fi == ti {
                return Err(QgError::InvalidArgument(format!(
                    "edge `{id}` is a loop at vertex `{from}`"
                )));
            }
            edge_ids.push(id.clone());
            efrom.push(fi);
            eto.push(ti);
            length.push(positive("length", id, *l)?);
            omega.push(positive("weight omega", id, *w)?);
        }

        let base_id = self
            .base
            .ok_or_else(|| QgError::InvalidArgument("no base vertex declared".into()))?;
        let base = *vertex_index
            .get(&base_id)
            .ok_or(QgError::UnknownVertex(base_id))?;

        let mut adj = vec![Vec::new(); vertex_ids.len()];
        for e in 0..edge_ids.len() {
            adj[efrom[e]].push((e, eto[e]));
            adj[eto[e]].push((e, efrom[e]));
        }

        Ok(MetricGraph {
            vertex_ids,
            vertex_index,
            mu,
            edge_ids,
            edge_index,
            efrom,
            eto,
            length,
            omega,
            base,
            adj,
            caps: BTreeSet::new(),
        })
    }
}

impl MetricGraph {
    /// Parses the line-oriented graph text format.
    ///
    /// Lines are `vertex <id> mu=<float>`, `edge <id> <from> <to>
    /// length=<float> omega=<float>`, or `base <id>`; `#` starts a comment.
    pub fn parse(text: &str) -> Result<MetricGraph> {
        let mut b = GraphBuilder::new();
        let mut saw_base = false;
        for (n, raw) in text.lines().enumerate() {
            let line = n + 1;
            let body = match raw.find('#') {
                Some(i) => &raw[..i],
                None => raw,
            };
            let toks: Vec<&str> = body.split_whitespace().collect();
            if toks.is_empty() {
                continue;
            }
            let err = |msg: String| QgError::Parse { line, msg };
            let kv = |tok: &str, key: &str| -> Result<f64> {
                let val = tok
                    .strip_prefix(key)
                    .and_then(|r| r.strip_prefix('='))
                    .ok_or_else(|| err(format!("expected `{key}=<float>`, got `{tok}`")))?;
                val.parse::<f64>()
                    .map_err(|_| err(format!("`{val}` is not a number")))
            };
            match toks[0] {
                "vertex" => {
                    if toks.len() != 3 {
                        return Err(err("expected `vertex <id> mu=<float>`".into()));
                    }
                    b = b.vertex(toks[1], kv(toks[2], "mu")?);
                }
                "edge" => {
                    if toks.len() != 6 {
                        return Err(err(
                            "expected `edge <id> <from> <to> length=<float> omega=<float>`".into(),
                        ));
                    }
                    b = b.edge(
                        toks[1],
                        toks[2],
                        toks[3],
                        kv(toks[4], "length")?,
                        kv(toks[5], "omega")?,
                    );
                }
                "base" => {
                    if toks.len() != 2 {
                        return Err(err("expected `base <vertex-id>`".into()));
                    }
                    if saw_base {
                        return Err(err("duplicate base declaration".into()));
                    }
                    saw_base = true;
                    b = b.base(toks[1]);
                }
                other => {
                    return Err(err(format!(
                        "unknown directive `{other}` (expected vertex/edge/base)"
                    )))
                }
            }
        }
        b.build().map_err(|e| match e {
            QgError::Parse { .. } => e,
            other => QgError::Parse {
                line: 0,
                msg: other.to_string(),
            },
        })
    }

    /// Serializes back to the text format; `parse` of the output rebuilds an
    /// identical graph, id for id.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (v, id) in self.vertex_ids.iter().enumerate() {
            let _ = writeln!(s, "vertex {id} mu={}", self.mu[v]);
        }
        for e in 0..self.n_edges() {
            let _ = writeln!(
                s,
                "edge {} {} {} length={} omega={}",
                self.edge_ids[e],
                self.vertex_ids[self.efrom[e]],
                self.vertex_ids[self.eto[e]],
                self.length[e],
                self.omega[e]
            );
        }
        let _ = writeln!(s, "base {}", self.vertex_ids[self.base]);
        s
    }

    pub fn n_vertices(&self) -> usize {
        self.vertex_ids.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edge_ids.len()
    }

    pub fn vertex_id(&self, v: usize) -> &str {
        &self.vertex_ids[v]
    }

    pub fn edge_id(&self, e: usize) -> &str {
        &self.edge_ids[e]
    }

    pub fn vertex_index(&self, id: &str) -> Result<usize> {
        self.vertex_index
            .get(id)
            .copied()
            .ok_or_else(|| QgError::UnknownVertex(id.to_string()))
    }

    pub fn edge_index(&self, id: &str) -> Result<usize> {
        self.edge_index
            .get(id)
            .copied()
            .ok_or_else(|| QgError::UnknownEdge(id.to_string()))
    }

    pub fn mu(&self, v: usize) -> f64 {
        self.mu[v]
    }

    pub fn from(&self, e: usize) -> usize {
        self.efrom[e]
    }

    pub fn to(&self, e: usize) -> usize {
        self.eto[e]
    }

    pub fn length(&self, e: usize) -> f64 {
        self.length[e]
    }

    pub fn omega(&self, e: usize) -> f64 {
        self.omega[e]
    }

    pub fn base(&self) -> usize {
        self.base
    }

    /// Incident `(edge, opposite endpoint)` pairs, in edge order.
    pub fn adjacency(&self, v: usize) -> &[(usize, usize)] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    /// Marks vertices as Dirichlet-type caps: boundary vertices at which
    /// certificate checks do not impose the interior vertex inequality or
    /// the Kirchhoff condition. Unknown indices are rejected.
    pub fn set_dirichlet_caps<I: IntoIterator<Item = usize>>(&mut self, caps: I) -> Result<()> {
        let mut set = BTreeSet::new();
        for v in caps {
            if v >= self.n_vertices() {
                return Err(QgError::InvalidArgument(format!(
                    "cap vertex index {v} out of range"
                )));
            }
            set.insert(v);
        }
        self.caps = set;
        Ok(())
    }

    pub fn dirichlet_caps(&self) -> &BTreeSet<usize> {
        &self.caps
    }

    pub fn is_capped(&self, v: usize) -> bool {
        self.caps.contains(&v)
    }

    /// Total measure of the vertex set.
    pub fn total_vertex_measure(&self) -> f64 {
        self.mu.iter().sum()
    }

    /// Total length of the edge set.
    pub fn total_edge_length(&self) -> f64 {
        self.length.iter().sum()
    }

    /// Resolves a `v:<id>` or `e:<id>:<coord>` location to a point.
    pub fn resolve_point(&self, loc: &str) -> Result<GraphPoint> {
        if let Some(id) = loc.strip_prefix("v:") {
            return Ok(GraphPoint::Vertex(self.vertex_index(id)?));
        }
        if let Some(rest) = loc.strip_prefix("e:") {
            let (id, coord) = rest.rsplit_once(':').ok_or_else(|| {
                QgError::InvalidArgument(format!("location `{loc}` is not `e:<id>:<coord>`"))
            })?;
            let e = self.edge_index(id)?;
            let x: f64 = coord.parse().map_err(|_| {
                QgError::InvalidArgument(format!("coordinate `{coord}` is not a number"))
            })?;
            if !(x > 0.0 && x < self.length[e]) {
                return Err(QgError::CoordOutOfRange {
                    edge: id.to_string(),
                    coord: x,
                    len: self.length[e],
                });
            }
            return Ok(GraphPoint::EdgeInterior(e, x));
        }
        Err(QgError::InvalidArgument(format!(
            "location `{loc}` must start with `v:` or `e:`"
        )))
    }

    /// Evaluates the six standing hypotheses on this finite instance.
    ///
    /// Local finiteness and loop-freeness are build invariants and always
    /// report true; connectivity, the length extremes, and the
    /// weight-to-measure ratio are computed.
    pub fn validate_hypotheses(&self) -> HypothesisReport {
        let mut seen = vec![false; self.n_vertices()];
        let mut stack = vec![self.base];
        seen[self.base] = true;
        while let Some(v) = stack.pop() {
            for &(_, w) in &self.adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        let connected = seen.iter().all(|&s| s);
        let j_sup = self.length.iter().cloned().fold(0.0, f64::max);
        let r_inf = self.length.iter().cloned().fold(f64::INFINITY, f64::min);
        let weight_ratio_sup = (0..self.n_vertices())
            .map(|v| {
                let total: f64 = self.adj[v].iter().map(|&(e, _)| self.omega[e]).sum();
                total / self.mu[v]
            })
            .fold(0.0, f64::max);
        HypothesisReport {
            connected,
            locally_finite: true,
            no_loops: true,
            j_sup,
            r_inf,
            weight_ratio_sup,
            r0: (2.0 * j_sup).max(1.0),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_vertex() -> MetricGraph {
        GraphBuilder::new()
            .vertex("a", 1.0)
            .vertex("b", 1.0)
            .edge("e", "a", "b", 1.0, 1.0)
            .base("a")
            .build()
            .unwrap()
    }

    #[test]
    fn single_edge_extremes() {
        let g = two_vertex();
        let rep = g.validate_hypotheses();
        assert_eq!(rep.j_sup, 1.0);
        assert_eq!(rep.r_inf, 1.0);
        assert_eq!(rep.r0, 2.0);
        assert!(rep.connected && rep.no_loops && rep.locally_finite);
    }

    #[test]
    fn parse_round_trip() {
        let text = "\
# demo graph
vertex a mu=1.5
vertex b mu=2
edge e1 a b length=0.75 omega=3
base a
";
        let g = MetricGraph::parse(text).unwrap();
        let again = MetricGraph::parse(&g.to_text()).unwrap();
        assert_eq!(g.n_vertices(), again.n_vertices());
        assert_eq!(g.n_edges(), again.n_edges());
        assert_eq!(g.vertex_id(0), again.vertex_id(0));
        assert_eq!(g.mu(1), again.mu(1));
        assert_eq!(g.length(0), again.length(0));
        assert_eq!(g.omega(0), again.omega(0));
        assert_eq!(g.base(), again.base());
    }

    #[test]
    fn unknown_vertex_named_in_error() {
        let text = "vertex a mu=1\nedge e a z length=1 omega=1\nbase a\n";
        let err = MetricGraph::parse(text).unwrap_err();
        assert!(err.to_string().contains("`z`"), "{err}");
    }

    #[test]
    fn loops_rejected() {
        let err = GraphBuilder::new()
            .vertex("a", 1.0)
            .vertex("b", 1.0)
            .edge("e", "a", "a", 1.0, 1.0)
            .base("a")
            .build()
            .unwrap_err();
        assert!(err.to_string().contains("loop"));
    }

    #[test]
    fn nonpositive_data_rejected() {
        for (mu, len, om) in [(0.0, 1.0, 1.0), (1.0, -2.0, 1.0), (1.0, 1.0, f64::NAN)] {
            let r = GraphBuilder::new()
                .vertex("a", mu)
                .vertex("b", 1.0)
                .edge("e", "a", "b", len, om)
                .base("a")
                .build();
            assert!(r.is_err(), "mu={mu} len={len} om={om}");
        }
    }

    #[test]
    fn parallel_edges_allowed() {
        let g = GraphBuilder::new()
            .vertex("a", 1.0)
            .vertex("b", 1.0)
            .edge("short", "a", "b", 1.0, 1.0)
            .edge("long", "a", "b", 3.0, 1.0)
            .base("a")
            .build()
            .unwrap();
        assert_eq!(g.degree(0), 2);
        assert_eq!(g.validate_hypotheses().j_sup, 3.0);
    }

    #[test]
    fn disconnected_reported_not_rejected() {
        let g = GraphBuilder::new()
            .vertex("a", 1.0)
            .vertex("b", 1.0)
            .vertex("c", 1.0)
            .edge("e", "a", "b", 1.0, 1.0)
            .base("a")
            .build()
            .unwrap();
        assert!(!g.validate_hypotheses().connected);
    }

    #[test]
    fn weight_ratio_at_hub() {
        // star with 4 spokes: ratio 4 at the center
        let mut b = GraphBuilder::new().vertex("c", 1.0).base("c");
        for i in 0..4 {
            let leaf = format!("l{i}");
            b = b.vertex(&leaf, 1.0).edge(&format!("s{i}"), "c", &leaf, 1.0, 1.0);
        }
        let g = b.build().unwrap();
        assert_eq!(g.validate_hypotheses().weight_ratio_sup, 4.0);
    }

    #[test]
    fn resolve_point_forms() {
        let g = two_vertex();
        assert!(matches!(g.resolve_point("v:b").unwrap(), GraphPoint::Vertex(1)));
        match g.resolve_point("e:e:0.25").unwrap() {
            GraphPoint::EdgeInterior(0, x) => assert_eq!(x, 0.25),
            other => panic!("{other:?}"),
        }
        assert!(g.resolve_point("e:e:1.5").is_err());
        assert!(g.resolve_point("w:q").is_err());
    }

    #[test]
    fn caps_validated() {
        let mut g = two_vertex();
        assert!(g.set_dirichlet_caps([1]).is_ok());
        assert!(g.is_capped(1) && !g.is_capped(0));
        assert!(g.set_dirichlet_caps([7]).is_err());
    }
}
