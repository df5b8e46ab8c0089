//! Composite quadrature on edge intervals with panels aligned to
//! integrand breakpoints, so piecewise-smooth integrands keep full order.

use serde::Serialize;

use crate::func::GraphFunction;
use crate::graph::MetricGraph;

/// Base rule applied on each panel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum QuadratureRule {
    /// Composite Simpson with the given number of equal panels
    /// (3-point rule per panel).
    Simpson { panels: usize },
    /// Composite 5-point Gauss-Legendre with the given number of panels.
    GaussLegendre5 { panels: usize },
}

impl QuadratureRule {
    pub fn default_simpson() -> Self {
        QuadratureRule::Simpson { panels: 64 }
    }

    pub fn default_gauss() -> Self {
        QuadratureRule::GaussLegendre5 { panels: 16 }
    }

    pub fn panels(&self) -> usize {
        match self {
            QuadratureRule::Simpson { panels } | QuadratureRule::GaussLegendre5 { panels } => {
                (*panels).max(1)
            }
        }
    }

    pub fn with_panels(&self, panels: usize) -> Self {
        match self {
            QuadratureRule::Simpson { .. } => QuadratureRule::Simpson { panels },
            QuadratureRule::GaussLegendre5 { .. } => QuadratureRule::GaussLegendre5 { panels },
        }
    }
}

const GL5_NODES: [f64; 5] = [
    -0.906179845938664,
    -0.5384693101056831,
    0.0,
    0.5384693101056831,
    0.906179845938664,
];
const GL5_WEIGHTS: [f64; 5] = [
    0.23692688505618908,
    0.47862867049936647,
    0.5688888888888889,
    0.47862867049936647,
    0.23692688505618908,
];

fn simpson_panel(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b))
}

fn gl5_panel(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut acc = 0.0;
    for k in 0..5 {
        acc += GL5_WEIGHTS[k] * f(c + h * GL5_NODES[k]);
    }
    acc * h
}

/// Integrates `f` over `[a, b]` with the composite rule (no breakpoints).
pub fn integrate_interval(f: &dyn Fn(f64) -> f64, a: f64, b: f64, rule: QuadratureRule) -> f64 {
    if b <= a {
        return 0.0;
    }
    let p = rule.panels();
    let h = (b - a) / p as f64;
    let mut acc = 0.0;
    for i in 0..p {
        let x0 = a + h * i as f64;
        let x1 = if i + 1 == p { b } else { a + h * (i + 1) as f64 };
        acc += match rule {
            QuadratureRule::Simpson { .. } => simpson_panel(f, x0, x1),
            QuadratureRule::GaussLegendre5 { .. } => gl5_panel(f, x0, x1),
        };
    }
    acc
}

/// Integrates `f` over `[a, b]` splitting first at the interior
/// breakpoints, with panels divided among the pieces in proportion to
/// their length (at least 4 per piece).
pub fn integrate_with_breakpoints(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    breaks: &[f64],
    rule: QuadratureRule,
) -> f64 {
    if b <= a {
        return 0.0;
    }
    let mut cuts: Vec<f64> = vec![a];
    for &x in breaks {
        if x > a + 1e-12 && x < b - 1e-12 {
            cuts.push(x);
        }
    }
    cuts.push(b);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|x, y| (*x - *y).abs() <= 1e-12);

    let span = b - a;
    let total = rule.panels().max(4 * (cuts.len() - 1));
    let mut acc = 0.0;
    for w in cuts.windows(2) {
        let (x0, x1) = (w[0], w[1]);
        let share = ((x1 - x0) / span * total as f64).ceil() as usize;
        let p = share.max(4);
        acc += integrate_interval(f, x0, x1, rule.with_panels(p));
    }
    acc
}

/// Integral of a graph function's profile over one full edge, split at the
/// function's breakpoints.
pub fn integrate_edge_function(
    g: &MetricGraph,
    f: &GraphFunction,
    e: usize,
    rule: QuadratureRule,
) -> f64 {
    let l = g.length(e);
    integrate_with_breakpoints(&|x| f.value(e, x), 0.0, l, &f.breakpoints[e], rule)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::func::EdgeEval;
    use crate::generators;

    #[test]
    fn polynomial_exactness() {
        // Simpson is exact through cubics, GL5 through degree 9
        let cubic = |x: f64| 1.0 + x - 2.0 * x * x + 3.0 * x * x * x;
        let exact_cubic = 1.0 + 0.5 - 2.0 / 3.0 + 3.0 / 4.0;
        let s = integrate_interval(&cubic, 0.0, 1.0, QuadratureRule::Simpson { panels: 1 });
        assert!((s - exact_cubic).abs() < 1e-14);

        let deg9 = |x: f64| x.powi(9);
        let gl = integrate_interval(&deg9, 0.0, 1.0, QuadratureRule::GaussLegendre5 { panels: 1 });
        assert!((gl - 0.1).abs() < 1e-14, "{gl}");
    }

    #[test]
    fn simpson_fourth_order_convergence() {
        let f = |x: f64| (3.0 * x).sin().exp();
        let reference = integrate_interval(&f, 0.0, 2.0, QuadratureRule::GaussLegendre5 { panels: 256 });
        let e1 = (integrate_interval(&f, 0.0, 2.0, QuadratureRule::Simpson { panels: 16 }) - reference).abs();
        let e2 = (integrate_interval(&f, 0.0, 2.0, QuadratureRule::Simpson { panels: 32 }) - reference).abs();
        let ratio = e1 / e2;
        assert!(ratio > 12.0 && ratio < 20.0, "ratio {ratio}");
    }

    #[test]
    fn breakpoint_alignment_restores_accuracy_for_kinks() {
        // |x - c| has a kink; aligned panels integrate it exactly at c
        let c = 0.3_f64;
        let f = move |x: f64| (x - c).abs();
        let exact = c * c / 2.0 + (1.0 - c) * (1.0 - c) / 2.0;
        let aligned =
            integrate_with_breakpoints(&f, 0.0, 1.0, &[c], QuadratureRule::Simpson { panels: 8 });
        assert!((aligned - exact).abs() < 1e-14, "{aligned} vs {exact}");
        let naive = integrate_interval(&f, 0.0, 1.0, QuadratureRule::Simpson { panels: 8 });
        assert!((naive - exact).abs() > 1e-6, "unaligned rule should miss");
    }

    #[test]
    fn edge_function_integral_uses_breakpoints() {
        let g = generators::path(1).unwrap();
        let c = 0.3_f64;
        let mut f = crate::func::GraphFunction::from_parts(
            vec![c, 1.0 - c],
            vec![EdgeEval::analytic(move |x| (x - c).abs())],
            vec![vec![]],
        );
        f.add_breakpoint(0, c);
        let exact = c * c / 2.0 + (1.0 - c) * (1.0 - c) / 2.0;
        let got = integrate_edge_function(&g, &f, 0, QuadratureRule::Simpson { panels: 8 });
        assert!((got - exact).abs() < 1e-14);
    }

    #[test]
    fn zero_width_interval() {
        assert_eq!(
            integrate_interval(&|x| x, 1.0, 1.0, QuadratureRule::default_simpson()),
            0.0
        );
        assert_eq!(
            integrate_with_breakpoints(&|x| x, 2.0, 1.0, &[], QuadratureRule::default_simpson()),
            0.0
        );
    }
}
