//! Volume-growth functionals: annulus sums of the reciprocal potential
//! power, the growth criterion over a radius sweep, exponentially weighted
//! tail sums, and the weighted decay norm.

use serde::Serialize;

use crate::balls::edge_level_intervals;
use crate::error::{QgError, Result};
use crate::func::GraphFunction;
use crate::geodesics::{DistanceField, EdgeCase};
use crate::graph::MetricGraph;
use crate::quad::{integrate_with_breakpoints, QuadratureRule};

const TOL: f64 = 1e-12;

/// Annulus sums at one radius: vertex and edge integrals of
/// `V^{-1/(sigma-1)}` over `{R <= d <= 2R}`, against the reference bound
/// `R^{sigma/(sigma-1)}`.
#[derive(Debug, Clone, Serialize)]
pub struct AnnulusSums {
    pub r: f64,
    pub vertex_sum: f64,
    pub edge_sum: f64,
    pub bound: f64,
    pub vertex_ratio: f64,
    pub edge_ratio: f64,
}

fn recip_power(v: f64, sigma: f64) -> f64 {
    v.powf(-1.0 / (sigma - 1.0))
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma > 1.0) || !sigma.is_finite() {
        return Err(QgError::InvalidArgument(format!(
            "exponent must satisfy sigma > 1, got {sigma}"
        )));
    }
    Ok(())
}

/// Computes the annulus sums of `V^{-1/(sigma-1)}` at radius `r`.
pub fn annulus_sums(
    g: &MetricGraph,
    df: &DistanceField,
    potential: &GraphFunction,
    sigma: f64,
    r: f64,
) -> Result<AnnulusSums> {
    check_sigma(sigma)?;
    if !(r > 0.0) || !r.is_finite() {
        return Err(QgError::InvalidArgument(format!(
            "radius must be positive, got {r}"
        )));
    }
    let rule = QuadratureRule::Simpson { panels: 64 };
    let mut vertex_sum = 0.0;
    for v in 0..g.n_vertices() {
        let d = df.vertex_dist[v];
        if d >= r - TOL && d <= 2.0 * r + TOL {
            vertex_sum += g.mu(v) * recip_power(potential.vertex(v), sigma);
        }
    }
    let mut edge_sum = 0.0;
    for e in 0..g.n_edges() {
        for (a, b) in edge_level_intervals(g, df, e, r, 2.0 * r) {
            edge_sum += integrate_with_breakpoints(
                &|x| recip_power(potential.value(e, x), sigma),
                a,
                b,
                &potential.breakpoints[e],
                rule,
            );
        }
    }
    let bound = r.powf(sigma / (sigma - 1.0));
    Ok(AnnulusSums {
        r,
        vertex_sum,
        edge_sum,
        bound,
        vertex_ratio: vertex_sum / bound,
        edge_ratio: edge_sum / bound,
    })
}

/// Growth-criterion verdict over a radius sweep.
///
/// The criterion asks for `sum <= C * R^{sigma/(sigma-1)}` with `C`
/// independent of `R`; numerically the sweep holds when the final ratio
/// does not exceed 1.5 times the median ratio, separately for the vertex
/// and edge columns.
#[derive(Debug, Clone, Serialize)]
pub struct GrowthReport {
    pub sigma: f64,
    pub r0: f64,
    pub rows: Vec<AnnulusSums>,
    pub vertex_last_over_median: f64,
    pub edge_last_over_median: f64,
    pub vertex_holds: bool,
    pub edge_holds: bool,
    pub holds: bool,
    /// Least-squares slope of `ln(sum)` against `ln(R)` (decay/growth
    /// exponent of the raw sums), per column.
    pub fitted_vertex_exponent: f64,
    pub fitted_edge_exponent: f64,
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

fn loglog_slope(rows: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|&&(_, s)| s > 0.0)
        .map(|&(r, s)| (r.ln(), s.ln()))
        .collect();
    if pts.len() < 2 {
        return f64::NAN;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    sxy / sxx
}

/// Evaluates the growth criterion across a radius sweep. All radii must be
/// at least `R0 = max(2 j, 1)` where `j` is the longest edge.
pub fn check_growth(
    g: &MetricGraph,
    df: &DistanceField,
    potential: &GraphFunction,
    sigma: f64,
    r_list: &[f64],
) -> Result<GrowthReport> {
    check_sigma(sigma)?;
    if r_list.is_empty() {
        return Err(QgError::InvalidArgument(
            "radius sweep must be nonempty".into(),
        ));
    }
    let j = (0..g.n_edges()).map(|e| g.length(e)).fold(0.0, f64::max);
    let r0 = (2.0 * j).max(1.0);
    for &r in r_list {
        if r < r0 - TOL {
            return Err(QgError::InvalidArgument(format!(
                "radius {r} is below the admissible threshold {r0}"
            )));
        }
    }
    let mut rows = Vec::with_capacity(r_list.len());
    for &r in r_list {
        rows.push(annulus_sums(g, df, potential, sigma, r)?);
    }
    let vratios: Vec<f64> = rows.iter().map(|a| a.vertex_ratio).collect();
    let eratios: Vec<f64> = rows.iter().map(|a| a.edge_ratio).collect();
    let vmed = median(vratios.clone());
    let emed = median(eratios.clone());
    let vlast = *vratios.last().unwrap();
    let elast = *eratios.last().unwrap();
    let ratio_or = |last: f64, med: f64| {
        if med > 0.0 {
            last / med
        } else if last == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    };
    let vertex_last_over_median = ratio_or(vlast, vmed);
    let edge_last_over_median = ratio_or(elast, emed);
    let vertex_holds = vertex_last_over_median <= 1.5;
    let edge_holds = edge_last_over_median <= 1.5;
    let fitted_vertex_exponent = loglog_slope(
        &rows.iter().map(|a| (a.r, a.vertex_sum)).collect::<Vec<_>>(),
    );
    let fitted_edge_exponent =
        loglog_slope(&rows.iter().map(|a| (a.r, a.edge_sum)).collect::<Vec<_>>());
    Ok(GrowthReport {
        sigma,
        r0,
        rows,
        vertex_last_over_median,
        edge_last_over_median,
        vertex_holds,
        edge_holds,
        holds: vertex_holds && edge_holds,
        fitted_vertex_exponent,
        fitted_edge_exponent,
    })
}

/// Exponentially weighted tail sums of `V^{-1/(sigma-1)}` over the
/// complement of the ball of radius `r`.
#[derive(Debug, Clone, Serialize)]
pub struct WeightedTailSums {
    pub r: f64,
    pub delta: f64,
    /// `sum_{d(v) >= r} mu(v) V^{-1/(sigma-1)}(v) e^{-delta d(v)/r}`.
    pub vertex: f64,
    /// Same integral over the edge parts of the ball complement.
    pub edge: f64,
}

/// Computes the weighted tail sums that bound the remainder terms in the
/// exponential-test-function estimates.
pub fn weighted_tail_sums(
    g: &MetricGraph,
    df: &DistanceField,
    potential: &GraphFunction,
    sigma: f64,
    r: f64,
    delta: f64,
) -> Result<WeightedTailSums> {
    check_sigma(sigma)?;
    if !(r > 0.0) || !(delta > 0.0) {
        return Err(QgError::InvalidArgument(format!(
            "radius and decay rate must be positive, got r={r}, delta={delta}"
        )));
    }
    let rule = QuadratureRule::Simpson { panels: 64 };
    let mut vertex = 0.0;
    for v in 0..g.n_vertices() {
        let d = df.vertex_dist[v];
        if d >= r - TOL {
            vertex += g.mu(v) * recip_power(potential.vertex(v), sigma) * (-delta * d / r).exp();
        }
    }
    let mut edge = 0.0;
    for e in 0..g.n_edges() {
        let (di, dj, l) = (
            df.vertex_dist[g.from(e)],
            df.vertex_dist[g.to(e)],
            g.length(e),
        );
        for (a, b) in edge_level_intervals(g, df, e, r, f64::INFINITY) {
            edge += integrate_with_breakpoints(
                &|x| {
                    let d = (di + x).min(dj + l - x);
                    recip_power(potential.value(e, x), sigma) * (-delta * d / r).exp()
                },
                a,
                b,
                &potential.breakpoints[e],
                rule,
            );
        }
    }
    Ok(WeightedTailSums {
        r,
        delta,
        vertex,
        edge,
    })
}

/// The weighted decay norm
/// `sum_v mu(v) |u(v)| e^{-alpha d(v)} + sum_e int |u_e| e^{-alpha d} dx`.
pub fn xalpha_norm(
    g: &MetricGraph,
    df: &DistanceField,
    f: &GraphFunction,
    alpha: f64,
) -> Result<f64> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(QgError::InvalidArgument(format!(
            "decay rate must be positive, got {alpha}"
        )));
    }
    let rule = QuadratureRule::Simpson { panels: 256 };
    let mut total = 0.0;
    for v in 0..g.n_vertices() {
        total += g.mu(v) * f.vertex(v).abs() * (-alpha * df.vertex_dist[v]).exp();
    }
    for e in 0..g.n_edges() {
        let (di, dj, l) = (
            df.vertex_dist[g.from(e)],
            df.vertex_dist[g.to(e)],
            g.length(e),
        );
        let mut breaks = f.breakpoints[e].clone();
        if let EdgeCase::Peak(q) = df.edge_case[e] {
            breaks.push(q);
        }
        total += integrate_with_breakpoints(
            &|x| {
                let d = (di + x).min(dj + l - x);
                f.value(e, x).abs() * (-alpha * d).exp()
            },
            0.0,
            l,
            &breaks,
            rule,
        );
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators;
    use crate::geodesics::distance_field;

    #[test]
    fn annulus_sums_on_a_path() {
        let g = generators::path(5).unwrap();
        let df = distance_field(&g).unwrap();
        let one = GraphFunction::constant(&g, 1.0);
        let a = annulus_sums(&g, &df, &one, 2.0, 2.5).unwrap();
        // vertices with d in [2.5, 5]: d = 3, 4, 5
        assert!((a.vertex_sum - 3.0).abs() < 1e-12);
        // edge part of the annulus has total length 2.5
        assert!((a.edge_sum - 2.5).abs() < 1e-10);
        assert!((a.bound - 2.5f64.powi(2)).abs() < 1e-12);
    }

    #[test]
    fn reciprocal_power_scales_the_edge_sum() {
        let g = generators::path(5).unwrap();
        let df = distance_field(&g).unwrap();
        let v4 = GraphFunction::constant(&g, 4.0);
        let a = annulus_sums(&g, &df, &v4, 3.0, 2.0).unwrap();
        // V^{-1/2} = 0.5 on an annulus of edge length 2 and vertex count 3
        assert!((a.edge_sum - 1.0).abs() < 1e-10, "{}", a.edge_sum);
        assert!((a.vertex_sum - 1.5).abs() < 1e-12);
    }

    #[test]
    fn growth_holds_on_a_path_and_ratios_decay() {
        let g = generators::path(40).unwrap();
        let df = distance_field(&g).unwrap();
        let one = GraphFunction::constant(&g, 1.0);
        let rep = check_growth(&g, &df, &one, 2.0, &[2.0, 4.0, 8.0, 16.0]).unwrap();
        assert!(rep.holds, "{rep:?}");
        // with sigma = 2 the bound is R^2 while sums grow like R
        for w in rep.rows.windows(2) {
            assert!(w[1].vertex_ratio <= w[0].vertex_ratio + 1e-12);
            assert!(w[1].edge_ratio <= w[0].edge_ratio + 1e-12);
        }
        assert!((rep.fitted_vertex_exponent - 1.0).abs() < 0.25);
        assert!((rep.fitted_edge_exponent - 1.0).abs() < 0.1);
    }

    #[test]
    fn growth_fails_on_a_binary_tree() {
        let g = generators::tree(2, 8).unwrap();
        let df = distance_field(&g).unwrap();
        let one = GraphFunction::constant(&g, 1.0);
        let rep = check_growth(&g, &df, &one, 2.0, &[2.0, 4.0]).unwrap();
        assert!(!rep.holds, "{rep:?}");
        assert!(rep.vertex_last_over_median > 1.5);
    }

    #[test]
    fn radius_below_threshold_rejected() {
        let g = generators::parallel_chain(2).unwrap(); // longest edge 3
        let df = distance_field(&g).unwrap();
        let one = GraphFunction::constant(&g, 1.0);
        let err = check_growth(&g, &df, &one, 2.0, &[4.0, 5.0]).unwrap_err();
        assert!(err.to_string().contains('6'), "{err}");
        assert!(check_growth(&g, &df, &one, 2.0, &[6.0]).is_ok());
    }

    #[test]
    fn weighted_tail_sums_small_case() {
        let g = generators::path(2).unwrap();
        let df = distance_field(&g).unwrap();
        let one = GraphFunction::constant(&g, 1.0);
        let delta = 0.75;
        let t = weighted_tail_sums(&g, &df, &one, 2.0, 1.0, delta).unwrap();
        let expect_v = (-delta).exp() + (-2.0 * delta).exp();
        assert!((t.vertex - expect_v).abs() < 1e-12);
        // edge part: only the far edge [1,2] survives; closed-form integral
        let expect_e = ((-delta).exp() - (-2.0 * delta).exp()) / delta;
        assert!((t.edge - expect_e).abs() < 1e-9, "{} vs {}", t.edge, expect_e);
    }

    #[test]
    fn xalpha_norm_closed_form() {
        let g = generators::path(2).unwrap();
        let df = distance_field(&g).unwrap();
        let one = GraphFunction::constant(&g, 1.0);
        let a = 0.5;
        let n = xalpha_norm(&g, &df, &one, a).unwrap();
        let vpart = 1.0 + (-a).exp() + (-2.0 * a).exp();
        let epart = (1.0 - (-a).exp()) / a * (1.0 + (-a).exp());
        assert!((n - vpart - epart).abs() < 1e-9, "{n}");
    }

    #[test]
    fn xalpha_norm_handles_peaks() {
        // u = 1 on the long parallel edge: the distance kink at the apex
        // must be integrated exactly
        let g = generators::parallel_chain(1).unwrap();
        let df = distance_field(&g).unwrap();
        let one = GraphFunction::constant(&g, 1.0);
        let a = 1.0;
        let n = xalpha_norm(&g, &df, &one, a).unwrap();
        // vertices: e^0 + e^-1; short edge: int_0^1 e^{-x};
        // long edge rises to d = 2 at x = 2, then falls back to d = 1
        let expect = 1.0
            + (-1.0f64).exp()
            + (1.0 - (-1.0f64).exp())
            + (1.0 - (-2.0f64).exp())
            + ((-1.0f64).exp() - (-2.0f64).exp());
        assert!((n - expect).abs() < 1e-9, "{n} vs {expect}");
    }
}
