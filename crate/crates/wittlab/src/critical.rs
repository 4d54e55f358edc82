//! Critical points, Lyapunov exponents and the Morse–Smale checks.

use crate::error::{Error, Result};
use crate::flow::{trace_to_limit, Direction, LimitOptions, OdeOptions};
use crate::geometry::vec3::{self, P3};
use crate::geometry::{MorseModel, SurfaceKind};
use rayon::prelude::*;
use serde::Serialize;

#[derive(Clone, Debug, Serialize)]
pub struct CriticalPoint {
    pub id: usize,
    pub position: P3,
    pub index_r: usize,
    /// χ_1 ≤ χ_2, eigenvalues of the metric-raised Hessian.
    pub lyapunov: [f64; 2],
    /// Unit tangent eigenvectors matching `lyapunov`, sign-normalized.
    pub eigvecs: [P3; 2],
    pub f_value: f64,
}

impl CriticalPoint {
    /// Direction along which the uphill flow leaves a saddle.
    pub fn unstable_dir(&self) -> P3 {
        self.eigvecs[1]
    }

    /// Direction along which the uphill flow enters a saddle.
    pub fn stable_dir(&self) -> P3 {
        self.eigvecs[0]
    }

    pub fn dim_unstable(&self) -> usize {
        2 - self.index_r
    }
}

/// Number of negative exponents.
pub fn morse_index(lyapunov: &[f64]) -> usize {
    lyapunov.iter().filter(|&&c| c < 0.0).count()
}

/// c_k = number of critical points of index k.
pub fn critical_counts(crits: &[CriticalPoint]) -> [usize; 3] {
    let mut c = [0usize; 3];
    for cp in crits {
        c[cp.index_r] += 1;
    }
    c
}

#[derive(Clone, Debug, Serialize)]
pub struct CriticalSearch {
    pub points: Vec<CriticalPoint>,
    pub failed_seeds: usize,
    pub warnings: Vec<String>,
}

pub const DEFAULT_SEED_DENSITY: usize = 32;
const DEDUP_RADIUS: f64 = 1e-6;
const DEGENERACY: f64 = 1e-8;

fn seeds(model: &MorseModel, density: usize) -> Vec<P3> {
    let n = density.max(2);
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let u = (i as f64 + 0.5) / n as f64;
            let v = (j as f64 + 0.5) / n as f64;
            out.push(match model.kind {
                SurfaceKind::UnitSphereEmbedded => {
                    let th = std::f64::consts::PI * u;
                    let ph = 2.0 * std::f64::consts::PI * v;
                    [th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos()]
                }
                _ => [u, v, 0.0],
            });
        }
    }
    out
}

/// Tangent-frame gradient and Hessian at p.
fn local_jet(model: &MorseModel, p: P3) -> ([f64; 2], [[f64; 2]; 2], (P3, P3)) {
    let s = model.sample(p);
    let (t1, t2) = model.tangent_frame(p);
    let g = [vec3::dot(s.grad, t1), vec3::dot(s.grad, t2)];
    let h11 = vec3::bilinear(&s.hess, t1, t1);
    let h12 = vec3::bilinear(&s.hess, t1, t2);
    let h22 = vec3::bilinear(&s.hess, t2, t2);
    (g, [[h11, h12], [h12, h22]], (t1, t2))
}

fn newton(model: &MorseModel, seed: P3) -> Option<P3> {
    let mut p = seed;
    for _ in 0..100 {
        let (g, h, (t1, t2)) = local_jet(model, p);
        let gn = (g[0] * g[0] + g[1] * g[1]).sqrt();
        if gn < 1e-14 {
            break;
        }
        // pseudo-inverse step
        let (mu, vecs) = vec3::sym2_eigen(h[0][0], h[0][1], h[1][1]);
        let scale = mu[0].abs().max(mu[1].abs());
        let mut s = [0.0; 2];
        for k in 0..2 {
            if mu[k].abs() > 1e-12 * scale.max(1e-300) {
                let c = (vecs[k][0] * g[0] + vecs[k][1] * g[1]) / mu[k];
                s[0] -= c * vecs[k][0];
                s[1] -= c * vecs[k][1];
            }
        }
        let len = (s[0] * s[0] + s[1] * s[1]).sqrt();
        if len > 0.1 {
            s = [s[0] * 0.1 / len, s[1] * 0.1 / len];
        }
        let step = vec3::add(vec3::scale(t1, s[0]), vec3::scale(t2, s[1]));
        let q = model.retract(p, step);
        if len < 1e-17 {
            p = q;
            break;
        }
        p = q;
    }
    let (g, _, _) = local_jet(model, p);
    let gn = (g[0] * g[0] + g[1] * g[1]).sqrt();
    if gn < 1e-10 {
        model.canonical_point(p).ok()
    } else {
        None
    }
}

fn canonical_sign(v: P3) -> P3 {
    for &c in &v {
        if c.abs() > 1e-12 {
            return if c < 0.0 { vec3::scale(v, -1.0) } else { v };
        }
    }
    v
}

/// Lyapunov data at a point already known to be critical.
pub fn classify_point(model: &MorseModel, p: P3) -> Result<([f64; 2], [P3; 2])> {
    let (_, h, (t1, t2)) = local_jet(model, p);
    let (mu, vecs) = vec3::sym2_eigen(h[0][0], h[0][1], h[1][1]);
    if mu[0].abs() < DEGENERACY || mu[1].abs() < DEGENERACY {
        return Err(Error::MorseViolation(format!(
            "degenerate critical point at {:?}: exponents {:?}",
            p, mu
        )));
    }
    let e = |v: [f64; 2]| canonical_sign(vec3::add(vec3::scale(t1, v[0]), vec3::scale(t2, v[1])));
    Ok((mu, [e(vecs[0]), e(vecs[1])]))
}

/// Newton search from a uniform seed grid with deduplication.
pub fn search_critical_points(model: &MorseModel, seed_grid_density: usize) -> Result<CriticalSearch> {
    let seeds = seeds(model, seed_grid_density);
    let found: Vec<Option<P3>> = seeds.par_iter().map(|&s| newton(model, s)).collect();
    let failed_seeds = found.iter().filter(|f| f.is_none()).count();
    let mut reps: Vec<P3> = Vec::new();
    for p in found.into_iter().flatten() {
        if !reps.iter().any(|&r| model.distance(r, p) < DEDUP_RADIUS) {
            reps.push(p);
        }
    }
    let mut points = Vec::with_capacity(reps.len());
    for p in reps {
        let (lyapunov, eigvecs) = classify_point(model, p)?;
        points.push(CriticalPoint {
            id: 0,
            position: p,
            index_r: morse_index(&lyapunov),
            lyapunov,
            eigvecs,
            f_value: model.value(p),
        });
    }
    points.sort_by(|a, b| {
        a.index_r
            .cmp(&b.index_r)
            .then(a.f_value.total_cmp(&b.f_value))
            .then(a.position[0].total_cmp(&b.position[0]))
            .then(a.position[1].total_cmp(&b.position[1]))
            .then(a.position[2].total_cmp(&b.position[2]))
    });
    for (i, p) in points.iter_mut().enumerate() {
        p.id = i;
    }
    let mut warnings = Vec::new();
    let euler: i64 = points.iter().map(|p| if p.index_r % 2 == 0 { 1 } else { -1 }).sum();
    if euler != model.kind.euler_characteristic() {
        warnings.push(format!(
            "possible missed critical point: alternating count {euler}, Euler characteristic {}",
            model.kind.euler_characteristic()
        ));
    }
    if failed_seeds > 0 {
        warnings.push(format!("{failed_seeds} Newton seeds did not converge"));
    }
    for w in &warnings {
        log::warn!("{w}");
    }
    Ok(CriticalSearch { points, failed_seeds, warnings })
}

pub fn find_critical_points(model: &MorseModel, seed_grid_density: usize) -> Result<Vec<CriticalPoint>> {
    Ok(search_critical_points(model, seed_grid_density)?.points)
}

/// Residual of the eigenpair relation Hess·v = χ v per exponent.
pub fn lyapunov_residual(model: &MorseModel, cp: &CriticalPoint) -> f64 {
    let s = model.sample(cp.position);
    (0..2)
        .map(|k| {
            let hv = vec3::mat_vec(&s.hess, cp.eigvecs[k]);
            vec3::norm(vec3::sub(hv, vec3::scale(cp.eigvecs[k], cp.lyapunov[k])))
        })
        .fold(0.0, f64::max)
}

#[derive(Clone, Debug, Serialize)]
pub struct SuspectPair {
    pub saddle: usize,
    pub other: usize,
    pub reason: String,
    pub min_distance: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SmaleReport {
    pub ok: bool,
    pub suspects: Vec<SuspectPair>,
}

/// On surfaces transversality can only fail through saddle–saddle
/// connections: each unstable separatrix is traced uphill and flagged if it
/// passes within `tolerance` of another saddle or does not end at a
/// critical point of strictly higher f.
pub fn check_smale_transversality(model: &MorseModel, crits: &[CriticalPoint], tolerance: f64) -> Result<SmaleReport> {
    let ode = OdeOptions { max_spatial_step: 1e-2, ..OdeOptions::default() };
    let lim = LimitOptions::default();
    let saddles: Vec<&CriticalPoint> = crits.iter().filter(|c| c.index_r == 1).collect();
    let mut suspects = Vec::new();
    for s in &saddles {
        for sign in [1.0, -1.0] {
            let start = model.retract(s.position, vec3::scale(s.unstable_dir(), sign * lim.seed_offset));
            let tr = trace_to_limit(model, crits, start, Direction::Uphill, &ode, &lim, true)?;
            for o in &saddles {
                if o.id == s.id {
                    continue;
                }
                let d = tr.points.iter().map(|&p| model.distance(p, o.position)).fold(f64::INFINITY, f64::min);
                if d < tolerance {
                    suspects.push(SuspectPair {
                        saddle: s.id,
                        other: o.id,
                        reason: "separatrix passes near another saddle".into(),
                        min_distance: d,
                    });
                }
            }
            let end = &crits[tr.limit];
            if end.f_value <= s.f_value || end.index_r != 2 {
                suspects.push(SuspectPair {
                    saddle: s.id,
                    other: end.id,
                    reason: format!("separatrix ends at index-{} point", end.index_r),
                    min_distance: 0.0,
                });
            }
        }
    }
    suspects.sort_by(|a, b| (a.saddle, a.other, &a.reason).cmp(&(b.saddle, b.other, &b.reason)));
    suspects.dedup_by(|a, b| a.saddle == b.saddle && a.other == b.other && a.reason == b.reason);
    Ok(SmaleReport { ok: suspects.is_empty(), suspects })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::field::FieldExpr;

    fn near(p: P3, q: [f64; 3], model: &MorseModel) -> bool {
        model.distance(p, q) < 1e-9
    }

    #[test]
    fn sphere_height_has_two_poles() {
        let m = MorseModel::sphere(FieldExpr::sphere_linear([0.0, 0.0, 1.0]));
        let c = find_critical_points(&m, 32).unwrap();
        assert_eq!(c.len(), 2);
        assert!(near(c[0].position, [0.0, 0.0, -1.0], &m) && c[0].index_r == 0);
        assert!((c[0].lyapunov[0] - 1.0).abs() < 1e-12 && (c[0].lyapunov[1] - 1.0).abs() < 1e-12);
        assert!(near(c[1].position, [0.0, 0.0, 1.0], &m) && c[1].index_r == 2);
        assert!((c[1].lyapunov[0] + 1.0).abs() < 1e-12);
        assert_eq!(critical_counts(&c), [1, 0, 1]);
    }

    #[test]
    fn torus_cosine_has_four_points() {
        let m = MorseModel::torus(FieldExpr::torus_cosine(1.0, [0.0, 0.0]));
        let c = find_critical_points(&m, 32).unwrap();
        assert_eq!(critical_counts(&c), [1, 2, 1]);
        assert!(near(c[0].position, [0.5, 0.5, 0.0], &m));
        assert!(near(c[3].position, [0.0, 0.0, 0.0], &m));
        for s in &c[1..3] {
            assert!((s.lyapunov[0] + 1.0).abs() < 1e-12 && (s.lyapunov[1] - 1.0).abs() < 1e-12);
        }
        for cp in &c {
            assert!(lyapunov_residual(&m, cp) < 1e-8);
        }
    }

    #[test]
    fn bumped_sphere_counts() {
        let m = MorseModel::sphere(FieldExpr::sphere_bumped(1.0));
        let c = find_critical_points(&m, 32).unwrap();
        assert_eq!(critical_counts(&c), [2, 1, 1]);
        assert!((c[0].f_value + 1.25).abs() < 1e-12);
        assert!((c[0].lyapunov[0] - 1.5).abs() < 1e-10 && (c[0].lyapunov[1] - 2.0).abs() < 1e-10);
        assert!(near(c[2].position, [0.0, 0.0, -1.0], &m));
    }

    #[test]
    fn index_from_exponents() {
        assert_eq!(morse_index(&[1.0, 1.0]), 0);
        assert_eq!(morse_index(&[-1.0, 1.0]), 1);
        assert_eq!(morse_index(&[-1.0, -1.0]), 2);
    }

    #[test]
    fn degenerate_function_is_a_morse_violation() {
        let m = MorseModel::torus(FieldExpr::torus_x_only());
        assert!(matches!(find_critical_points(&m, 16), Err(Error::MorseViolation(_))));
    }

    #[test]
    fn transversality_reports() {
        let s = MorseModel::sphere(FieldExpr::sphere_linear([0.0, 0.0, 1.0]));
        let c = find_critical_points(&s, 16).unwrap();
        assert!(check_smale_transversality(&s, &c, 1e-3).unwrap().ok);
        let t = MorseModel::torus(FieldExpr::torus_cosine(1.0, [0.0, 0.0]));
        let c = find_critical_points(&t, 16).unwrap();
        assert!(check_smale_transversality(&t, &c, 1e-3).unwrap().ok);
        let bad = MorseModel::torus(FieldExpr::torus_saddle_connection());
        let c = find_critical_points(&bad, 16).unwrap();
        assert_eq!(critical_counts(&c), [1, 2, 1]);
        let rep = check_smale_transversality(&bad, &c, 1e-3).unwrap();
        assert!(!rep.ok);
        assert!(rep.suspects.iter().all(|p| c[p.saddle].index_r == 1 && c[p.other].index_r == 1));
    }
}
