//! Time correlations C(t) = ∫ ψ1(φ^{-t}x) ψ2(x) dA and their decay.

use super::{advance, BasinMasks, Direction, FlowState, OdeOptions};
use crate::critical::CriticalPoint;
use crate::error::{Error, Result};
use crate::geometry::quadrature::{flat_triangle_nodes, pairwise_sum};
use crate::geometry::vec3::{self, P3};
use crate::geometry::{integrate_form, MorseModel, TriMesh};
use rayon::prelude::*;
use serde::Serialize;

pub type Observable<'a> = &'a (dyn Fn(P3) -> f64 + Sync);

#[derive(Clone, Copy, Debug)]
pub struct CorrelationOptions {
    pub ode: OdeOptions,
    /// Absolute tolerance per cell for the parent/children comparison.
    pub cell_tol: f64,
    pub max_depth: u32,
}

impl Default for CorrelationOptions {
    fn default() -> Self {
        CorrelationOptions { ode: OdeOptions::default(), cell_tol: 1e-9, max_depth: 12 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CorrelationSeries {
    pub t_grid: Vec<f64>,
    pub values: Vec<f64>,
    pub limit_prediction: Option<f64>,
    pub fitted_rate: Option<f64>,
    pub cells: usize,
    /// Cells accepted at the depth limit without meeting the tolerance.
    pub unresolved_cells: usize,
    /// Sum of the final parent/children discrepancies, an error indicator.
    pub error_estimate: f64,
}

struct Ctx<'a> {
    model: &'a MorseModel,
    psi1: Observable<'a>,
    psi2: Observable<'a>,
    t_grid: &'a [f64],
    ode: OdeOptions,
}

impl Ctx<'_> {
    /// ψ1 along the downhill trajectory of a node, one value per grid time.
    /// The node is nudged off symmetric separatrices first.
    fn trajectory(&self, x: P3) -> Result<Vec<f64>> {
        let mut st = FlowState::new(self.model.nudge(x, 1.0));
        let mut out = Vec::with_capacity(self.t_grid.len());
        for &t in self.t_grid {
            advance(self.model, Direction::Downhill, &mut st, t, &self.ode, |_, _| false)?;
            out.push((self.psi1)(self.model.canonical_point(st.p)?));
        }
        Ok(out)
    }

    fn cell(&self, corners: &[P3; 3]) -> Result<Vec<f64>> {
        let mut acc = vec![0.0; self.t_grid.len()];
        for q in flat_triangle_nodes(self.model.kind, *corners) {
            let w = q.weight * (self.psi2)(q.point);
            if w == 0.0 {
                continue;
            }
            for (a, v) in acc.iter_mut().zip(self.trajectory(q.point)?) {
                *a += w * v;
            }
        }
        Ok(acc)
    }
}

fn children(c: &[P3; 3]) -> [[P3; 3]; 4] {
    let m = |a: P3, b: P3| vec3::scale(vec3::add(a, b), 0.5);
    let (m01, m12, m20) = (m(c[0], c[1]), m(c[1], c[2]), m(c[2], c[0]));
    [[c[0], m01, m20], [m01, c[1], m12], [m20, m12, c[2]], [m12, m20, m01]]
}

enum Step {
    Accept(Vec<f64>, f64, bool),
    Refine(Vec<([P3; 3], Vec<f64>)>),
}

/// Adaptive quadrature of the correlation: each mesh triangle is compared
/// with its four children (maximum discrepancy over the time grid) and split
/// until the discrepancy is below `cell_tol` or the depth limit is reached.
pub fn correlation(
    model: &MorseModel,
    mesh: &TriMesh,
    psi1: Observable,
    psi2: Observable,
    t_grid: &[f64],
    opts: &CorrelationOptions,
) -> Result<CorrelationSeries> {
    if t_grid.is_empty() || t_grid[0] < 0.0 || t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config("t_grid must be nonnegative and strictly increasing".into()));
    }
    let ctx = Ctx { model, psi1, psi2, t_grid, ode: opts.ode };
    let mut queue: Vec<([P3; 3], Vec<f64>)> = (0..mesh.n_triangles())
        .into_par_iter()
        .map(|t| {
            let c = mesh.tri_points(t);
            ctx.cell(&c).map(|v| (c, v))
        })
        .collect::<Result<_>>()?;
    let mut parts: Vec<Vec<f64>> = Vec::new();
    let mut cells = queue.len();
    let mut unresolved_cells = 0;
    let mut error_estimate = 0.0;
    let mut depth = 0;
    while !queue.is_empty() {
        depth += 1;
        let steps: Vec<Step> = queue
            .par_iter()
            .map(|(c, parent)| -> Result<Step> {
                let kids: Vec<([P3; 3], Vec<f64>)> =
                    children(c).iter().map(|k| ctx.cell(k).map(|v| (*k, v))).collect::<Result<_>>()?;
                let mut sum = vec![0.0; t_grid.len()];
                for (_, v) in &kids {
                    for (s, x) in sum.iter_mut().zip(v) {
                        *s += x;
                    }
                }
                let diff = sum.iter().zip(parent).map(|(s, p)| (s - p).abs()).fold(0.0, f64::max);
                if diff <= opts.cell_tol {
                    Ok(Step::Accept(sum, diff, false))
                } else if depth >= opts.max_depth {
                    Ok(Step::Accept(sum, diff, true))
                } else {
                    Ok(Step::Refine(kids))
                }
            })
            .collect::<Result<_>>()?;
        queue = Vec::new();
        for s in steps {
            match s {
                Step::Accept(v, diff, limited) => {
                    parts.push(v);
                    error_estimate += diff;
                    if limited {
                        unresolved_cells += 1;
                    }
                }
                Step::Refine(kids) => {
                    cells += 4;
                    queue.extend(kids);
                }
            }
        }
    }
    let values = (0..t_grid.len())
        .map(|i| pairwise_sum(&parts.iter().map(|p| p[i]).collect::<Vec<_>>()))
        .collect();
    if unresolved_cells > 0 {
        log::warn!("{unresolved_cells} correlation cells reached the depth limit");
    }
    Ok(CorrelationSeries {
        t_grid: t_grid.to_vec(),
        values,
        limit_prediction: None,
        fitted_rate: None,
        cells,
        unresolved_cells,
        error_estimate,
    })
}

/// Σ over minima of ψ1(min) times the quadrature of ψ2 over its basin.
pub fn correlation_limit_prediction(
    model: &MorseModel,
    mesh: &TriMesh,
    crits: &[CriticalPoint],
    basins: &BasinMasks,
    psi1: Observable,
    psi2: Observable,
) -> f64 {
    basins
        .minima
        .iter()
        .zip(&basins.masks)
        .map(|(&id, mask)| psi1(crits[id].position) * integrate_form(mesh, model, psi2, Some(mask)))
        .sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitStatus {
    Fitted,
    AlreadyConverged,
}

#[derive(Clone, Debug, Serialize)]
pub struct FitResult {
    pub status: FitStatus,
    pub fitted_rate: Option<f64>,
    pub gap_prediction: f64,
    pub relative_deviation: Option<f64>,
    pub window: Option<(f64, f64)>,
    pub points_used: usize,
    /// Largest |log residual − fitted line| in the window.
    pub misfit: f64,
}

pub const FIT_BAND: (f64, f64) = (1e-8, 1e-2);

/// Least-squares slope of log|C(t) − limit| over the grid points whose
/// residual lies in the band relative to the largest residual.
pub fn decay_rate_fit(series: &CorrelationSeries, limit: f64, gap_prediction: f64) -> Result<FitResult> {
    let res: Vec<f64> = series.values.iter().map(|c| (c - limit).abs()).collect();
    let scale = res.iter().cloned().fold(0.0, f64::max);
    let gap = gap_prediction.abs();
    if scale < 1e-12 {
        return Ok(FitResult {
            status: FitStatus::AlreadyConverged,
            fitted_rate: None,
            gap_prediction: gap,
            relative_deviation: None,
            window: None,
            points_used: 0,
            misfit: 0.0,
        });
    }
    let first_peak = res.iter().position(|&r| r == scale).unwrap();
    let idx: Vec<usize> = (first_peak..res.len())
        .filter(|&i| res[i] >= FIT_BAND.0 * scale && res[i] <= FIT_BAND.1 * scale)
        .collect();
    if idx.len() < 3 {
        return Err(Error::FitWindow(format!(
            "only {} grid points with residual in [{:e}, {:e}] x {scale:e}",
            idx.len(),
            FIT_BAND.0,
            FIT_BAND.1
        )));
    }
    for w in idx.windows(2) {
        if res[w[1]] > res[w[0]] * (1.0 + 1e-3) {
            return Err(Error::FitWindow(format!(
                "residual increases from {:e} at t = {} to {:e} at t = {}",
                res[w[0]], series.t_grid[w[0]], res[w[1]], series.t_grid[w[1]]
            )));
        }
    }
    let n = idx.len() as f64;
    let ts: Vec<f64> = idx.iter().map(|&i| series.t_grid[i]).collect();
    let ys: Vec<f64> = idx.iter().map(|&i| res[i].ln()).collect();
    let tm = ts.iter().sum::<f64>() / n;
    let ym = ys.iter().sum::<f64>() / n;
    let sxy: f64 = ts.iter().zip(&ys).map(|(t, y)| (t - tm) * (y - ym)).sum();
    let sxx: f64 = ts.iter().map(|t| (t - tm) * (t - tm)).sum();
    let slope = sxy / sxx;
    let misfit = ts.iter().zip(&ys).map(|(t, y)| (y - ym - slope * (t - tm)).abs()).fold(0.0, f64::max);
    let rate = -slope;
    Ok(FitResult {
        status: FitStatus::Fitted,
        fitted_rate: Some(rate),
        gap_prediction: gap,
        relative_deviation: Some((rate - gap).abs() / gap),
        window: Some((ts[0], ts[ts.len() - 1])),
        points_used: idx.len(),
        misfit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::critical::find_critical_points;
    use crate::flow::basin_masks;
    use crate::geometry::build_mesh;
    use crate::geometry::field::FieldExpr;
    use std::f64::consts::PI;

    fn synthetic(f: impl Fn(f64) -> f64) -> CorrelationSeries {
        let t_grid: Vec<f64> = (0..=40).map(|i| 0.25 * i as f64).collect();
        let values = t_grid.iter().map(|&t| f(t)).collect();
        CorrelationSeries {
            t_grid,
            values,
            limit_prediction: None,
            fitted_rate: None,
            cells: 0,
            unresolved_cells: 0,
            error_estimate: 0.0,
        }
    }

    #[test]
    fn exact_exponential_rate() {
        let s = synthetic(|t| 0.7 + 3.0 * (-2.0 * t).exp());
        let fit = decay_rate_fit(&s, 0.7, 2.0).unwrap();
        assert!((fit.fitted_rate.unwrap() - 2.0).abs() < 1e-6);
    }

    #[test]
    fn constant_series_is_already_converged() {
        let s = synthetic(|_| 1.0);
        let fit = decay_rate_fit(&s, 1.0, 1.0).unwrap();
        assert_eq!(fit.status, FitStatus::AlreadyConverged);
    }

    #[test]
    fn oscillating_floor_is_rejected() {
        let s = synthetic(|t| (-t).exp() * (1.0 + 0.9 * (6.0 * t).cos()));
        assert!(matches!(decay_rate_fit(&s, 0.0, 1.0), Err(Error::FitWindow(_))));
    }

    #[test]
    fn constant_observable_is_conserved() {
        let m = MorseModel::torus(FieldExpr::torus_cosine(1.0, [0.0, 0.0]));
        let mesh = build_mesh(&m, 2).unwrap();
        let one = |_: P3| 1.0;
        let psi2 = |p: P3| 1.0 + 0.5 * (2.0 * PI * p[1]).sin();
        let s = correlation(&m, &mesh, &one, &psi2, &[0.0, 1.0, 2.0], &CorrelationOptions::default()).unwrap();
        for v in &s.values {
            assert!((v - 1.0).abs() < 1e-10, "{v}");
        }
    }

    #[test]
    fn limit_prediction_single_basin() {
        let m = MorseModel::torus(FieldExpr::torus_cosine(1.0, [0.0, 0.0]));
        let c = find_critical_points(&m, 16).unwrap();
        let mesh = build_mesh(&m, 2).unwrap();
        let b = basin_masks(&m, &mesh, &c).unwrap();
        let psi1 = |p: P3| (2.0 * PI * p[0]).cos();
        let one = |_: P3| 1.0;
        assert!((correlation_limit_prediction(&m, &mesh, &c, &b, &psi1, &one) + 1.0).abs() < 1e-12);
    }
}
