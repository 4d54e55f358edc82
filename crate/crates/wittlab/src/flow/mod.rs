//! Gradient flow: integration, limits, basins, correlations and decay fits.

pub mod correlation;
pub mod ode;

pub use correlation::{
    correlation, correlation_limit_prediction, decay_rate_fit, CorrelationOptions, CorrelationSeries, FitResult,
    FitStatus,
};
pub use ode::{advance, flow_map, Direction, FlowState, OdeOptions};

use crate::critical::CriticalPoint;
use crate::error::{Error, Result};
use crate::geometry::quadrature::triangle_nodes;
use crate::geometry::vec3::{self, P3};
use crate::geometry::{MorseModel, SurfaceKind, TriMesh};
use rayon::prelude::*;
use serde::Serialize;

#[derive(Clone, Copy, Debug)]
pub struct LimitOptions {
    pub grad_tol: f64,
    pub capture_radius: f64,
    /// Early exit radius around an attracting critical point.
    pub sink_radius: f64,
    pub fast_sink: bool,
    pub t_max: f64,
    /// Distance from a critical point at which separatrices are seeded.
    pub seed_offset: f64,
}

impl Default for LimitOptions {
    fn default() -> Self {
        LimitOptions {
            grad_tol: 1e-8,
            capture_radius: 1e-4,
            sink_radius: 1e-3,
            fast_sink: false,
            t_max: 400.0,
            seed_offset: 1e-6,
        }
    }
}

impl LimitOptions {
    pub fn classification() -> LimitOptions {
        LimitOptions { fast_sink: true, ..LimitOptions::default() }
    }
}

/// A traced trajectory. On the torus the points are unwrapped so that
/// consecutive points are close in the plane.
#[derive(Clone, Debug, Serialize)]
pub struct Trace {
    pub points: Vec<P3>,
    pub limit: usize,
    pub time: f64,
}

fn is_sink(cp: &CriticalPoint, dir: Direction) -> bool {
    match dir {
        Direction::Downhill => cp.index_r == 0,
        Direction::Uphill => cp.index_r == 2,
    }
}

fn nearest(model: &MorseModel, crits: &[CriticalPoint], p: P3) -> Option<(usize, f64)> {
    crits
        .iter()
        .map(|c| (c.id, model.distance(p, c.position)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
}

/// Flows from `start` until it settles at a critical point. With `record`
/// the accepted steps are kept and the exact critical point is appended.
pub fn trace_to_limit(
    model: &MorseModel,
    crits: &[CriticalPoint],
    start: P3,
    dir: Direction,
    ode: &OdeOptions,
    lim: &LimitOptions,
    record: bool,
) -> Result<Trace> {
    let mut st = FlowState::new(start);
    let mut points = if record { vec![start] } else { Vec::new() };
    let mut hit: Option<usize> = None;
    let check = |p: P3, v: P3| -> Option<usize> {
        let (id, d) = nearest(model, crits, p)?;
        let cp = &crits[id];
        if (vec3::norm(v) < lim.grad_tol && d < lim.capture_radius)
            || (lim.fast_sink && d < lim.sink_radius && is_sink(cp, dir))
        {
            Some(id)
        } else {
            None
        }
    };
    if let Some(id) = check(start, model.gradient(start)) {
        hit = Some(id);
    }
    if hit.is_none() {
        advance(model, dir, &mut st, lim.t_max, ode, |p, v| {
            if record {
                points.push(p);
            }
            hit = check(p, v);
            hit.is_some()
        })?;
    }
    let limit = hit.ok_or_else(|| {
        Error::Integration(format!("unresolved limit from {:?} after t = {}", start, lim.t_max))
    })?;
    if record {
        let last = *points.last().unwrap();
        let end = vec3::add(last, model.displacement(last, crits[limit].position));
        points.push(if model.is_sphere() { crits[limit].position } else { end });
    }
    Ok(Trace { points, limit, time: st.t })
}

/// Id of the critical point reached from x0.
pub fn omega_limit(model: &MorseModel, crits: &[CriticalPoint], x0: P3, dir: Direction) -> Result<usize> {
    let x0 = model.canonical_point(x0)?;
    Ok(trace_to_limit(model, crits, x0, dir, &OdeOptions::default(), &LimitOptions::classification(), false)?.limit)
}

/// Downhill limit of the nudged point, or None if it is not a minimum or
/// the budget runs out.
pub fn classify_downhill(model: &MorseModel, crits: &[CriticalPoint], p: P3) -> Option<usize> {
    let q = model.nudge(p, 1.0);
    let q = if model.kind == SurfaceKind::UnitSphereEmbedded { vec3::normalize(q) } else { q };
    match trace_to_limit(model, crits, q, Direction::Downhill, &OdeOptions::default(), &LimitOptions::classification(), false) {
        Ok(t) if crits[t.limit].index_r == 0 => Some(t.limit),
        _ => None,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BasinMasks {
    pub minima: Vec<usize>,
    /// masks[i][t]: fraction of triangle t's quadrature nodes attracted to minima[i].
    pub masks: Vec<Vec<f64>>,
    pub unresolved_fraction: f64,
}

pub fn basin_masks(model: &MorseModel, mesh: &TriMesh, crits: &[CriticalPoint]) -> Result<BasinMasks> {
    let minima: Vec<usize> = crits.iter().filter(|c| c.index_r == 0).map(|c| c.id).collect();
    let per_tri: Vec<[Option<usize>; 6]> = (0..mesh.n_triangles())
        .into_par_iter()
        .map(|t| {
            let nodes = triangle_nodes(mesh, t);
            let mut out = [None; 6];
            for (k, q) in nodes.iter().enumerate() {
                out[k] = classify_downhill(model, crits, q.point);
            }
            out
        })
        .collect();
    let mut hits = vec![vec![0u8; mesh.n_triangles()]; minima.len()];
    let mut unresolved = 0usize;
    for (t, cls) in per_tri.iter().enumerate() {
        for c in cls {
            match c.and_then(|id| minima.iter().position(|&m| m == id)) {
                Some(i) => hits[i][t] += 1,
                None => unresolved += 1,
            }
        }
    }
    let masks = hits.iter().map(|h| h.iter().map(|&k| k as f64 / 6.0).collect()).collect();
    let unresolved_fraction = unresolved as f64 / (6 * mesh.n_triangles()) as f64;
    if unresolved_fraction >= 1e-3 {
        return Err(Error::Integration(format!(
            "basin classification left {:.3}% of nodes unresolved",
            100.0 * unresolved_fraction
        )));
    }
    Ok(BasinMasks { minima, masks, unresolved_fraction })
}
