//! Morse complex from flow lines, and its realization as mesh cochains.
//!
//! The unstable manifold of a critical point is the set of points whose
//! downhill flow ends there: basins for minima, the two uphill separatrices
//! for saddles, the point itself for maxima. Each is turned into a cochain
//! of matching degree (basin indicator, signed crossing count, unit
//! triangle), and the coefficients of the flow-line complex are exactly the
//! ones that make d act on these cochains.

pub mod crossing;

use crate::critical::CriticalPoint;
use crate::error::{Error, Result};
use crate::flow::{trace_to_limit, Direction, LimitOptions, OdeOptions, Trace};
use crate::geometry::vec3::{self, P3};
use crate::geometry::{MorseModel, TriMesh};
use crate::linalg::snf::{cohomology, Cohomology, IntMatrix};
use crate::whitney::wedge_integral;
use crossing::{crossing_cochain, SegmentIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

/// Orientation signs of the unstable manifolds, one per critical point.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Orientations {
    pub signs: Vec<i8>,
}

impl Orientations {
    pub fn canonical(n: usize) -> Orientations {
        Orientations { signs: vec![1; n] }
    }

    pub fn random(n: usize, seed: u64) -> Orientations {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Orientations { signs: (0..n).map(|_| if rng.random_bool(0.5) { 1 } else { -1 }).collect() }
    }
}

/// A flow line between critical points of adjacent index. The polyline
/// runs uphill from `from` to `to`; torus polylines are unwrapped.
#[derive(Clone, Debug, Serialize)]
pub struct Instanton {
    pub from: usize,
    pub to: usize,
    /// Which eigen-direction branch of the saddle carries the line.
    pub branch: i8,
    pub sign: i8,
    pub polyline: Vec<P3>,
}

pub fn curve_ode() -> OdeOptions {
    OdeOptions { max_spatial_step: 1e-4, ..OdeOptions::default() }
}

/// Branch of a saddle's separatrix leaving along `sign · axis`, traced in
/// direction `dir`, with the saddle itself prepended.
pub fn saddle_branch(
    model: &MorseModel,
    crits: &[CriticalPoint],
    saddle: &CriticalPoint,
    axis: P3,
    sign: i8,
    dir: Direction,
) -> Result<Trace> {
    let lim = LimitOptions::default();
    let start = model.retract(saddle.position, vec3::scale(axis, sign as f64 * lim.seed_offset));
    let mut tr = trace_to_limit(model, crits, start, dir, &curve_ode(), &lim, true)?;
    tr.points.insert(0, saddle.position);
    Ok(tr)
}

/// All flow lines between adjacent indices, with signs left at zero.
pub fn find_instantons(model: &MorseModel, crits: &[CriticalPoint]) -> Result<Vec<Instanton>> {
    let saddles: Vec<&CriticalPoint> = crits.iter().filter(|c| c.index_r == 1).collect();
    let per_saddle: Vec<Result<Vec<Instanton>>> = saddles
        .par_iter()
        .map(|s| {
            let mut out = Vec::new();
            for sign in [1i8, -1] {
                let down = saddle_branch(model, crits, s, s.stable_dir(), sign, Direction::Downhill)?;
                if crits[down.limit].index_r != 0 {
                    return Err(Error::Transversality(format!(
                        "downhill separatrix of saddle {} ends at critical point {}",
                        s.id, down.limit
                    )));
                }
                let mut poly = down.points;
                poly.reverse();
                out.push(Instanton { from: down.limit, to: s.id, branch: sign, sign: 0, polyline: poly });
            }
            for sign in [1i8, -1] {
                let up = saddle_branch(model, crits, s, s.unstable_dir(), sign, Direction::Uphill)?;
                if crits[up.limit].index_r != 2 {
                    return Err(Error::Transversality(format!(
                        "uphill separatrix of saddle {} ends at critical point {}",
                        s.id, up.limit
                    )));
                }
                out.push(Instanton { from: s.id, to: up.limit, branch: sign, sign: 0, polyline: up.points });
            }
            Ok(out)
        })
        .collect();
    let mut all = Vec::new();
    for r in per_saddle {
        all.extend(r?);
    }
    all.sort_by_key(|i| (i.from, i.to, -i.branch));
    Ok(all)
}

/// Sign of a flow line for the given orientations.
///
/// Into a saddle b from a minimum a: ε_a times the orientation of
/// (branch direction out of b, oriented unstable axis of b). Out of a saddle
/// a into a maximum b: ω_b times the sign of the branch against the oriented
/// unstable axis of a.
pub fn orientation_sign(model: &MorseModel, crits: &[CriticalPoint], inst: &Instanton, o: &Orientations) -> i8 {
    let from = &crits[inst.from];
    let to = &crits[inst.to];
    if from.index_r == 0 {
        let b = to;
        let out = vec3::scale(b.stable_dir(), inst.branch as f64);
        let ou = vec3::scale(b.unstable_dir(), o.signs[b.id] as f64);
        let det = model.tangent_det(b.position, out, ou);
        o.signs[from.id] * det.signum() as i8
    } else {
        o.signs[to.id] * o.signs[from.id] * inst.branch
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MorseComplex {
    pub orientations: Orientations,
    /// Critical point ids by index.
    pub by_index: [Vec<usize>; 3],
    pub instantons: Vec<Instanton>,
    /// boundary[k][i][j]: coefficient of the j-th index-(k+1) point in the
    /// coboundary of the i-th index-k point.
    pub boundary: Vec<IntMatrix>,
    /// Global sign factor (-1)^n with n the surface dimension.
    pub sign_factor: i64,
    pub cohomology: Cohomology,
}

impl MorseComplex {
    pub fn coefficient(&self, a: usize, b: usize) -> i64 {
        for k in 0..2 {
            if let (Some(i), Some(j)) =
                (self.by_index[k].iter().position(|&x| x == a), self.by_index[k + 1].iter().position(|&x| x == b))
            {
                return self.boundary[k][i][j];
            }
        }
        0
    }

    pub fn dims(&self) -> [usize; 3] {
        [self.by_index[0].len(), self.by_index[1].len(), self.by_index[2].len()]
    }
}

/// Signs the flow lines and assembles the boundary matrices.
pub fn assemble(model: &MorseModel, crits: &[CriticalPoint], instantons: &[Instanton], o: &Orientations) -> MorseComplex {
    let by_index: [Vec<usize>; 3] =
        std::array::from_fn(|k| crits.iter().filter(|c| c.index_r == k).map(|c| c.id).collect());
    let sign_factor = 1i64; // (-1)^2
    let mut instantons = instantons.to_vec();
    let mut boundary: Vec<IntMatrix> =
        (0..2).map(|k| vec![vec![0i64; by_index[k + 1].len()]; by_index[k].len()]).collect();
    for inst in instantons.iter_mut() {
        inst.sign = orientation_sign(model, crits, inst, o);
        let k = crits[inst.from].index_r;
        let i = by_index[k].iter().position(|&x| x == inst.from).unwrap();
        let j = by_index[k + 1].iter().position(|&x| x == inst.to).unwrap();
        boundary[k][i][j] += sign_factor * inst.sign as i64;
    }
    let cohomology = verify_complex(&by_index, &boundary);
    MorseComplex { orientations: o.clone(), by_index, instantons, boundary, sign_factor, cohomology }
}

pub fn verify_complex(by_index: &[Vec<usize>; 3], boundary: &[IntMatrix]) -> Cohomology {
    cohomology(&[by_index[0].len(), by_index[1].len(), by_index[2].len()], boundary)
}

pub fn boundary_matrices(model: &MorseModel, crits: &[CriticalPoint], o: &Orientations) -> Result<MorseComplex> {
    let inst = find_instantons(model, crits)?;
    Ok(assemble(model, crits, &inst, o))
}

/// Curve through a saddle made of two traced branches, running from the end
/// of the `-` branch to the end of the `+` branch, reversed if `sign < 0`.
pub fn joined_curve(minus: &Trace, plus: &Trace, sign: i8) -> Vec<P3> {
    let mut c: Vec<P3> = minus.points.iter().rev().cloned().collect();
    c.extend_from_slice(&plus.points[1..]);
    if sign < 0 {
        c.reverse();
    }
    c
}

/// Mesh cochains realizing unstable (or stable) manifolds.
pub struct CochainRealization<'a> {
    model: &'a MorseModel,
    mesh: &'a TriMesh,
    crits: &'a [CriticalPoint],
    edges: SegmentIndex,
    /// Downhill limits of the nudged vertices.
    vertex_down: Vec<usize>,
    /// Uphill limits of the nudged vertices.
    vertex_up: Vec<usize>,
    /// Uphill separatrix branches (+, -) per saddle id.
    up_branches: Vec<Option<(Trace, Trace)>>,
    /// Downhill separatrix branches (+, -) per saddle id.
    down_branches: Vec<Option<(Trace, Trace)>>,
}

fn classify_vertices(model: &MorseModel, mesh: &TriMesh, crits: &[CriticalPoint], dir: Direction) -> Result<Vec<usize>> {
    let sink = if dir == Direction::Downhill { 0 } else { 2 };
    mesh.vertices
        .par_iter()
        .map(|&v| {
            let q = model.canonical_point(model.nudge(v, 1.0))?;
            let tr = trace_to_limit(model, crits, q, dir, &OdeOptions::default(), &LimitOptions::classification(), false)?;
            if crits[tr.limit].index_r != sink {
                return Err(Error::Integration(format!("vertex {v:?} settles at critical point {}", tr.limit)));
            }
            Ok(tr.limit)
        })
        .collect()
}

impl<'a> CochainRealization<'a> {
    pub fn new(model: &'a MorseModel, mesh: &'a TriMesh, crits: &'a [CriticalPoint]) -> Result<Self> {
        let vertex_down = classify_vertices(model, mesh, crits, Direction::Downhill)?;
        let vertex_up = classify_vertices(model, mesh, crits, Direction::Uphill)?;
        let mut up_branches = vec![None; crits.len()];
        let mut down_branches = vec![None; crits.len()];
        let traced: Vec<Result<(usize, (Trace, Trace), (Trace, Trace))>> = crits
            .par_iter()
            .filter(|c| c.index_r == 1)
            .map(|s| {
                let up = (
                    saddle_branch(model, crits, s, s.unstable_dir(), 1, Direction::Uphill)?,
                    saddle_branch(model, crits, s, s.unstable_dir(), -1, Direction::Uphill)?,
                );
                let down = (
                    saddle_branch(model, crits, s, s.stable_dir(), 1, Direction::Downhill)?,
                    saddle_branch(model, crits, s, s.stable_dir(), -1, Direction::Downhill)?,
                );
                Ok((s.id, up, down))
            })
            .collect();
        for r in traced {
            let (id, up, down) = r?;
            up_branches[id] = Some(up);
            down_branches[id] = Some(down);
        }
        Ok(CochainRealization {
            model,
            mesh,
            crits,
            edges: SegmentIndex::for_mesh_edges(mesh),
            vertex_down,
            vertex_up,
            up_branches,
            down_branches,
        })
    }

    fn shifted(&self, curve: &[P3]) -> Vec<P3> {
        curve.iter().map(|&p| self.model.nudge(p, -1.0)).collect()
    }

    fn point_cochain(&self, p: P3) -> Result<Vec<f64>> {
        let t = self
            .mesh
            .locate(self.model.nudge(p, -1.0))
            .ok_or_else(|| Error::Mesh(format!("no triangle contains {p:?}")))?;
        let mut c = vec![0.0; self.mesh.n_triangles()];
        c[t] = 1.0;
        Ok(c)
    }

    pub fn degree(&self, id: usize) -> usize {
        self.crits[id].index_r
    }

    /// Unstable cochain of critical point `id` under orientations `o`.
    pub fn unstable(&self, id: usize, o: &Orientations) -> Result<Vec<f64>> {
        let s = o.signs[id] as f64;
        let cp = &self.crits[id];
        let c = match cp.index_r {
            0 => self.vertex_down.iter().map(|&l| if l == id { 1.0 } else { 0.0 }).collect(),
            1 => {
                let (plus, minus) = self.up_branches[id].as_ref().unwrap();
                crossing_cochain(self.mesh, &self.edges, &self.shifted(&joined_curve(minus, plus, 1)))
            }
            _ => self.point_cochain(cp.position)?,
        };
        Ok(c.into_iter().map(|x| s * x).collect())
    }

    /// Stable cochain of `id`, unnormalized: uphill basin indicator for a
    /// maximum, the downhill separatrix oriented along the stable axis for a
    /// saddle, and the triangle at a minimum.
    pub fn stable_raw(&self, id: usize) -> Result<Vec<f64>> {
        let cp = &self.crits[id];
        Ok(match cp.index_r {
            2 => self.vertex_up.iter().map(|&l| if l == id { 1.0 } else { 0.0 }).collect(),
            1 => {
                let (plus, minus) = self.down_branches[id].as_ref().unwrap();
                crossing_cochain(self.mesh, &self.edges, &self.shifted(&joined_curve(minus, plus, 1)))
            }
            _ => self.point_cochain(cp.position)?,
        })
    }

    /// Stable cochain scaled so its pairing with the unstable one is
    /// positive; also returns the raw pairing.
    pub fn stable(&self, id: usize, o: &Orientations) -> Result<(Vec<f64>, f64)> {
        let u = self.unstable(id, o)?;
        let s = self.stable_raw(id)?;
        let k = self.degree(id);
        let p = wedge_integral(self.mesh, &[(k, &u), (2 - k, &s)]);
        let sign = if p < 0.0 { -1.0 } else { 1.0 };
        Ok((s.into_iter().map(|x| sign * x).collect(), p * sign))
    }

    pub fn vertex_basins(&self) -> &[usize] {
        &self.vertex_down
    }

    pub fn up_branches(&self, id: usize) -> Option<&(Trace, Trace)> {
        self.up_branches[id].as_ref()
    }

    pub fn mesh(&self) -> &TriMesh {
        self.mesh
    }
}

/// Convenience wrapper for a single critical point.
pub fn discrete_unstable_cochain(
    model: &MorseModel,
    mesh: &TriMesh,
    crits: &[CriticalPoint],
    o: &Orientations,
    id: usize,
) -> Result<Vec<f64>> {
    CochainRealization::new(model, mesh, crits)?.unstable(id, o)
}
