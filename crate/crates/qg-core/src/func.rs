//! Functions on a metric graph: one value per vertex plus a profile on
//! each edge interval, with optional analytic derivatives and a plain-text
//! table format for interchange.

use std::sync::Arc;

use crate::error::{QgError, Result};
use crate::graph::MetricGraph;

type EdgeFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Profile of a function on a single edge interval `[0, l]`.
#[derive(Clone)]
pub enum EdgeEval {
    /// Constant profile.
    Const(f64),
    /// Closed-form profile with optional closed-form derivatives; missing
    /// derivatives fall back to finite differences.
    Analytic {
        f: EdgeFn,
        d1: Option<EdgeFn>,
        d2: Option<EdgeFn>,
    },
    /// Piecewise-linear interpolation through a closed sample grid
    /// (`xs[0] = 0`, `xs[last] = l`, strictly increasing).
    Samples { xs: Vec<f64>, ys: Vec<f64> },
}

impl std::fmt::Debug for EdgeEval {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EdgeEval::Const(c) => f.debug_tuple("Const").field(c).finish(),
            EdgeEval::Analytic { d1, d2, .. } => f
                .debug_struct("Analytic")
                .field("d1", &d1.is_some())
                .field("d2", &d2.is_some())
                .finish_non_exhaustive(),
            EdgeEval::Samples { xs, ys } => f
                .debug_struct("Samples")
                .field("xs", xs)
                .field("ys", ys)
                .finish(),
        }
    }
}

impl EdgeEval {
    pub fn analytic(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        EdgeEval::Analytic {
            f: Arc::new(f),
            d1: None,
            d2: None,
        }
    }

    /// Profile value at `x`.
    pub fn value_at(&self, x: f64) -> f64 {
        match self {
            EdgeEval::Const(c) => *c,
            EdgeEval::Analytic { f, .. } => f(x),
            EdgeEval::Samples { xs, ys } => sample_value(xs, ys, x),
        }
    }

    /// First derivative at `x`; `h` is the fallback difference step.
    pub fn d1_at(&self, x: f64, h: f64) -> f64 {
        match self {
            EdgeEval::Const(_) => 0.0,
            EdgeEval::Analytic { f, d1, .. } => match d1 {
                Some(d) => d(x),
                None => fd1(&**f, x, h),
            },
            EdgeEval::Samples { xs, ys } => sample_d1(xs, ys, x),
        }
    }

    /// Second derivative at `x`; `h` is the fallback difference step.
    pub fn d2_at(&self, x: f64, h: f64) -> f64 {
        match self {
            EdgeEval::Const(_) => 0.0,
            EdgeEval::Analytic { f, d2, .. } => match d2 {
                Some(d) => d(x),
                None => fd2(&**f, x, h),
            },
            EdgeEval::Samples { xs, ys } => sample_d2(xs, ys, x),
        }
    }

    pub fn analytic_with(
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        d1: impl Fn(f64) -> f64 + Send + Sync + 'static,
        d2: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        EdgeEval::Analytic {
            f: Arc::new(f),
            d1: Some(Arc::new(d1)),
            d2: Some(Arc::new(d2)),
        }
    }
}

/// A function on the whole graph: vertex values plus per-edge profiles.
///
/// Edge profiles are continuous representatives; whether they match the
/// vertex values at the endpoints is a property checked by validators, not
/// enforced here.
#[derive(Clone, Debug)]
pub struct GraphFunction {
    pub vertex_values: Vec<f64>,
    pub edges: Vec<EdgeEval>,
    /// Interior coordinates where an edge profile loses smoothness;
    /// quadrature panels are aligned to these.
    pub breakpoints: Vec<Vec<f64>>,
}

impl GraphFunction {
    /// Constant function `c` everywhere.
    pub fn constant(g: &MetricGraph, c: f64) -> Self {
        GraphFunction {
            vertex_values: vec![c; g.n_vertices()],
            edges: vec![EdgeEval::Const(c); g.n_edges()],
            breakpoints: vec![Vec::new(); g.n_edges()],
        }
    }

    /// Builds from per-vertex values and a per-edge profile factory.
    pub fn from_parts(
        vertex_values: Vec<f64>,
        edges: Vec<EdgeEval>,
        breakpoints: Vec<Vec<f64>>,
    ) -> Self {
        GraphFunction {
            vertex_values,
            edges,
            breakpoints,
        }
    }

    pub fn vertex(&self, v: usize) -> f64 {
        self.vertex_values[v]
    }

    /// Profile value at coordinate `x` on edge `e`.
    pub fn value(&self, e: usize, x: f64) -> f64 {
        self.edges[e].value_at(x)
    }

    /// First derivative along edge `e`; finite-difference fallback when no
    /// closed form is attached.
    pub fn d1(&self, e: usize, x: f64) -> f64 {
        self.edges[e].d1_at(x, self.fd_step(e))
    }

    /// Second derivative along edge `e`; finite-difference fallback when no
    /// closed form is attached.
    pub fn d2(&self, e: usize, x: f64) -> f64 {
        self.edges[e].d2_at(x, self.fd_step(e))
    }

    /// True when the first derivative on `e` comes from finite differences
    /// rather than a closed form.
    pub fn d1_is_fd(&self, e: usize) -> bool {
        matches!(&self.edges[e], EdgeEval::Analytic { d1: None, .. })
            || matches!(&self.edges[e], EdgeEval::Samples { .. })
    }

    /// True when the second derivative on `e` comes from finite
    /// differences.
    pub fn d2_is_fd(&self, e: usize) -> bool {
        matches!(&self.edges[e], EdgeEval::Analytic { d2: None, .. })
            || matches!(&self.edges[e], EdgeEval::Samples { .. })
    }

    /// True when any edge derivative anywhere relies on a fallback.
    pub fn any_fd_fallback(&self) -> bool {
        (0..self.edges.len()).any(|e| self.d1_is_fd(e) || self.d2_is_fd(e))
    }

    fn fd_step(&self, e: usize) -> f64 {
        let span = match &self.edges[e] {
            EdgeEval::Samples { xs, .. } => *xs.last().unwrap_or(&1.0),
            _ => 1.0,
        };
        1e-6 * span.max(1.0)
    }

    pub fn add_breakpoint(&mut self, e: usize, x: f64) {
        let bp = &mut self.breakpoints[e];
        if !bp.iter().any(|&b| (b - x).abs() <= 1e-12) {
            bp.push(x);
            bp.sort_by(f64::total_cmp);
        }
    }
}

fn locate(xs: &[f64], x: f64) -> usize {
    // containing segment index i with xs[i] <= x <= xs[i+1]
    match xs.binary_search_by(|p| p.total_cmp(&x)) {
        Ok(i) => i.min(xs.len() - 2),
        Err(i) => i.saturating_sub(1).min(xs.len() - 2),
    }
}

fn sample_value(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    if xs.len() == 1 {
        return ys[0];
    }
    let x = x.clamp(xs[0], *xs.last().unwrap());
    let i = locate(xs, x);
    let t = (x - xs[i]) / (xs[i + 1] - xs[i]);
    ys[i] + t * (ys[i + 1] - ys[i])
}

fn sample_d1(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let x = x.clamp(xs[0], *xs.last().unwrap());
    let i = locate(xs, x);
    (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i])
}

fn sample_d2(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    // three-point nonuniform second difference around the containing segment
    if xs.len() < 3 {
        return 0.0;
    }
    let x = x.clamp(xs[0], *xs.last().unwrap());
    let i = locate(xs, x).clamp(1, xs.len() - 2) - 1;
    let (x0, x1, x2) = (xs[i], xs[i + 1], xs[i + 2]);
    let (y0, y1, y2) = (ys[i], ys[i + 1], ys[i + 2]);
    let (h0, h1) = (x1 - x0, x2 - x1);
    2.0 * (h0 * y2 - (h0 + h1) * y1 + h1 * y0) / (h0 * h1 * (h0 + h1))
}

fn fd1(f: &dyn Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

fn fd2(f: &dyn Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h)
}

/// Parses the plain-text function-table format.
///
/// Each non-comment line is either `v:<vertex-id>,<value>` or
/// `e:<edge-id>:<coord>,<value>` with a strictly interior coordinate.
/// Every vertex needs a value; edge profiles are linearly interpolated
/// through the given samples with endpoints taken from the vertex values.
pub fn parse_function_table(g: &MetricGraph, text: &str) -> Result<GraphFunction> {
    let mut vvals: Vec<Option<f64>> = vec![None; g.n_vertices()];
    let mut esamples: Vec<Vec<(f64, f64)>> = vec![Vec::new(); g.n_edges()];

    for (ln, raw) in text.lines().enumerate() {
        let line_no = ln + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |msg: String| QgError::Parse {
            line: line_no,
            msg,
        };
        let (key, val) = line
            .rsplit_once(',')
            .ok_or_else(|| err("expected `<key>,<value>`".into()))?;
        let value: f64 = val
            .trim()
            .parse()
            .map_err(|_| err(format!("bad numeric value `{}`", val.trim())))?;
        if !value.is_finite() {
            return Err(err(format!("non-finite value `{value}`")));
        }
        let key = key.trim();
        if let Some(id) = key.strip_prefix("v:") {
            let v = g
                .vertex_index(id)
                .map_err(|_| err(format!("unknown vertex `{id}`")))?;
            if vvals[v].is_some() {
                return Err(err(format!("duplicate value for vertex `{id}`")));
            }
            vvals[v] = Some(value);
        } else if let Some(rest) = key.strip_prefix("e:") {
            let (id, coord) = rest
                .rsplit_once(':')
                .ok_or_else(|| err("expected `e:<id>:<coord>`".into()))?;
            let e = g
                .edge_index(id)
                .map_err(|_| err(format!("unknown edge `{id}`")))?;
            let x: f64 = coord
                .trim()
                .parse()
                .map_err(|_| err(format!("bad coordinate `{}`", coord.trim())))?;
            let l = g.length(e);
            if !x.is_finite() || x <= 0.0 || x >= l {
                return Err(err(format!(
                    "coordinate {x} not strictly inside (0, {l}) on edge `{id}`"
                )));
            }
            esamples[e].push((x, value));
        } else {
            return Err(err(format!("unknown row kind `{key}`")));
        }
    }

    for (v, val) in vvals.iter().enumerate() {
        if val.is_none() {
            return Err(QgError::Parse {
                line: 0,
                msg: format!("missing value for vertex `{}`", g.vertex_id(v)),
            });
        }
    }
    let vertex_values: Vec<f64> = vvals.into_iter().map(|v| v.unwrap()).collect();

    let mut edges = Vec::with_capacity(g.n_edges());
    let mut breakpoints = Vec::with_capacity(g.n_edges());
    for (e, mut samples) in esamples.into_iter().enumerate() {
        samples.sort_by(|a, b| a.0.total_cmp(&b.0));
        for w in samples.windows(2) {
            if (w[1].0 - w[0].0).abs() <= 1e-12 {
                return Err(QgError::Parse {
                    line: 0,
                    msg: format!(
                        "duplicate coordinate {} on edge `{}`",
                        w[0].0,
                        g.edge_id(e)
                    ),
                });
            }
        }
        let l = g.length(e);
        let mut xs = Vec::with_capacity(samples.len() + 2);
        let mut ys = Vec::with_capacity(samples.len() + 2);
        xs.push(0.0);
        ys.push(vertex_values[g.from(e)]);
        for (x, y) in &samples {
            xs.push(*x);
            ys.push(*y);
        }
        xs.push(l);
        ys.push(vertex_values[g.to(e)]);
        breakpoints.push(xs[1..xs.len() - 1].to_vec());
        edges.push(EdgeEval::Samples { xs, ys });
    }

    Ok(GraphFunction {
        vertex_values,
        edges,
        breakpoints,
    })
}

/// Writes a function table with `per_edge` interior samples per edge.
pub fn write_function_table(g: &MetricGraph, f: &GraphFunction, per_edge: usize) -> String {
    let mut out = String::new();
    for v in 0..g.n_vertices() {
        out.push_str(&format!("v:{},{}\n", g.vertex_id(v), f.vertex(v)));
    }
    for e in 0..g.n_edges() {
        let l = g.length(e);
        for k in 1..=per_edge {
            let x = l * k as f64 / (per_edge + 1) as f64;
            out.push_str(&format!("e:{}:{},{}\n", g.edge_id(e), x, f.value(e, x)));
        }
    }
    out
}
