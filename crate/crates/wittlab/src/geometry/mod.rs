//! Model surfaces, Morse functions, triangulations and quadrature.

pub mod field;
pub mod mesh;
pub mod quadrature;
pub mod vec3;

use crate::error::{Error, Result};
use field::FieldExpr;
use serde::{Deserialize, Serialize};
use vec3::{M3, P3};

pub use mesh::{build_mesh, TriMesh};
pub use quadrature::{integrate_form, QUAD_RULE};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SurfaceKind {
    UnitSphereEmbedded,
    FlatTorusUnitSquare,
    ChartParameterized,
}

impl SurfaceKind {
    pub fn euler_characteristic(self) -> i64 {
        match self {
            SurfaceKind::UnitSphereEmbedded => 2,
            SurfaceKind::FlatTorusUnitSquare => 0,
            SurfaceKind::ChartParameterized => 0,
        }
    }

    pub fn betti(self) -> [usize; 3] {
        match self {
            SurfaceKind::UnitSphereEmbedded => [1, 0, 1],
            _ => [1, 2, 1],
        }
    }
}

/// f, evaluated intrinsically. For the torus the third coordinate is unused.
#[derive(Clone, Copy, Debug)]
pub struct FieldSample {
    pub value: f64,
    /// Intrinsic gradient as an ambient tangent vector.
    pub grad: P3,
    /// Intrinsic Hessian as a symmetric ambient matrix acting on tangent vectors.
    pub hess: M3,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MorseModel {
    pub kind: SurfaceKind,
    pub f: FieldExpr,
    pub normalization: f64,
}

/// Fixed generic offset used to keep classification points off
/// symmetric separatrices and mesh lines.
const TORUS_NUDGE: [f64; 2] = [1.0e-7, 0.318_309_886e-7];
const SPHERE_NUDGE_ANGLE: f64 = 1.0e-7;
const SPHERE_NUDGE_AXIS: P3 = [0.267_261_241_912_424_4, 0.534_522_483_824_848_8, 0.801_783_725_737_273_2];

impl MorseModel {
    pub fn new(kind: SurfaceKind, f: FieldExpr, normalization: f64) -> Result<MorseModel> {
        if !(normalization > 0.0) || !normalization.is_finite() {
            return Err(Error::Config(format!("normalization must be positive, got {normalization}")));
        }
        match (&kind, &f) {
            (SurfaceKind::UnitSphereEmbedded, FieldExpr::Quadratic { .. }) => {}
            (SurfaceKind::FlatTorusUnitSquare, FieldExpr::Trig(_)) => {}
            (SurfaceKind::ChartParameterized, _) => {}
            _ => return Err(Error::Config("field family does not match surface kind".into())),
        }
        Ok(MorseModel { kind, f, normalization })
    }

    pub fn sphere(f: FieldExpr) -> MorseModel {
        MorseModel::new(SurfaceKind::UnitSphereEmbedded, f, 1.0).expect("sphere model")
    }

    pub fn torus(f: FieldExpr) -> MorseModel {
        MorseModel::new(SurfaceKind::FlatTorusUnitSquare, f, 1.0).expect("torus model")
    }

    /// Same surface, different function.
    pub fn with_field(&self, f: FieldExpr) -> MorseModel {
        MorseModel { kind: self.kind, f, normalization: 1.0 }
    }

    /// The effective function `normalization * f` as a bare expression.
    pub fn effective_field(&self) -> FieldExpr {
        self.f.scaled(self.normalization)
    }

    pub fn is_sphere(&self) -> bool {
        self.kind == SurfaceKind::UnitSphereEmbedded
    }

    /// Checks that `p` lies on the surface and returns its canonical form.
    pub fn canonical_point(&self, p: P3) -> Result<P3> {
        match self.kind {
            SurfaceKind::UnitSphereEmbedded => {
                let r = vec3::norm(p);
                if (r - 1.0).abs() > 1e-10 || !r.is_finite() {
                    return Err(Error::Domain(format!("point off the unit sphere (|p| = {r})")));
                }
                Ok(p)
            }
            SurfaceKind::FlatTorusUnitSquare => {
                if !p[0].is_finite() || !p[1].is_finite() {
                    return Err(Error::Domain("non-finite torus coordinate".into()));
                }
                Ok([wrap01(p[0]), wrap01(p[1]), 0.0])
            }
            SurfaceKind::ChartParameterized => {
                Err(Error::Config("chart-parameterized models are not supported".into()))
            }
        }
    }

    pub fn value(&self, p: P3) -> f64 {
        self.normalization * self.f.value(p)
    }

    /// Intrinsic value, gradient and Hessian without the on-surface check.
    pub fn sample(&self, p: P3) -> FieldSample {
        let jet = self.f.jet(p);
        let s = self.normalization;
        match self.kind {
            SurfaceKind::UnitSphereEmbedded => {
                // tangential projection; Hessian corrected by the second
                // fundamental form of the unit sphere
                let g = jet.grad;
                let radial = vec3::dot(g, p);
                let grad = vec3::axpy(g, -radial, p);
                let mut proj = [[0.0; 3]; 3];
                for i in 0..3 {
                    for j in 0..3 {
                        proj[i][j] = if i == j { 1.0 } else { 0.0 } - p[i] * p[j];
                    }
                }
                let mut hp = [[0.0; 3]; 3];
                for i in 0..3 {
                    for j in 0..3 {
                        let mut acc = 0.0;
                        for k in 0..3 {
                            for l in 0..3 {
                                acc += proj[i][k] * jet.hess[k][l] * proj[l][j];
                            }
                        }
                        hp[i][j] = s * (acc - radial * proj[i][j]);
                    }
                }
                FieldSample { value: s * jet.value, grad: vec3::scale(grad, s), hess: hp }
            }
            _ => {
                let mut h = jet.hess;
                for row in h.iter_mut() {
                    for v in row.iter_mut() {
                        *v *= s;
                    }
                }
                FieldSample { value: s * jet.value, grad: vec3::scale(jet.grad, s), hess: h }
            }
        }
    }

    /// Ascending gradient field V_f.
    #[inline]
    pub fn gradient(&self, p: P3) -> P3 {
        let g = self.f.jet(p).grad;
        let g = match self.kind {
            SurfaceKind::UnitSphereEmbedded => vec3::axpy(g, -vec3::dot(g, p), p),
            _ => [g[0], g[1], 0.0],
        };
        vec3::scale(g, self.normalization)
    }

    /// Oriented orthonormal tangent frame (t1, t2) at p; t1 × t2 is the
    /// outward normal on the sphere and e_z on the torus.
    pub fn tangent_frame(&self, p: P3) -> (P3, P3) {
        match self.kind {
            SurfaceKind::UnitSphereEmbedded => {
                let helper = if p[2].abs() < 0.9 { [0.0, 0.0, 1.0] } else { [1.0, 0.0, 0.0] };
                let t1 = vec3::normalize(vec3::cross(helper, p));
                let t2 = vec3::cross(p, t1);
                (t1, t2)
            }
            _ => ([1.0, 0.0, 0.0], [0.0, 1.0, 0.0]),
        }
    }

    /// Unit normal defining the surface orientation at p.
    pub fn normal(&self, p: P3) -> P3 {
        match self.kind {
            SurfaceKind::UnitSphereEmbedded => p,
            _ => [0.0, 0.0, 1.0],
        }
    }

    /// Oriented area determinant of two tangent vectors at p.
    pub fn tangent_det(&self, p: P3, a: P3, b: P3) -> f64 {
        vec3::det3(self.normal(p), a, b)
    }

    /// Moves from p by the tangent displacement v and returns to the surface.
    pub fn retract(&self, p: P3, v: P3) -> P3 {
        match self.kind {
            SurfaceKind::UnitSphereEmbedded => vec3::normalize(vec3::add(p, v)),
            _ => [p[0] + v[0], p[1] + v[1], 0.0],
        }
    }

    /// Shortest displacement from a to b (minimum image on the torus).
    pub fn displacement(&self, a: P3, b: P3) -> P3 {
        match self.kind {
            SurfaceKind::UnitSphereEmbedded => vec3::sub(b, a),
            _ => {
                let dx = b[0] - a[0];
                let dy = b[1] - a[1];
                [dx - dx.round(), dy - dy.round(), 0.0]
            }
        }
    }

    pub fn distance(&self, a: P3, b: P3) -> f64 {
        match self.kind {
            SurfaceKind::UnitSphereEmbedded => {
                let c = vec3::dot(a, b).clamp(-1.0, 1.0);
                let s = vec3::norm(vec3::cross(a, b));
                s.atan2(c)
            }
            _ => vec3::norm(self.displacement(a, b)),
        }
    }

    /// Applies (sign = +1) or undoes (sign = -1) the fixed generic nudge.
    pub fn nudge(&self, p: P3, sign: f64) -> P3 {
        match self.kind {
            SurfaceKind::UnitSphereEmbedded => rotate(p, SPHERE_NUDGE_AXIS, sign * SPHERE_NUDGE_ANGLE),
            _ => [p[0] + sign * TORUS_NUDGE[0], p[1] + sign * TORUS_NUDGE[1], p[2]],
        }
    }

    pub fn area(&self) -> f64 {
        match self.kind {
            SurfaceKind::UnitSphereEmbedded => 4.0 * std::f64::consts::PI,
            _ => 1.0,
        }
    }
}

/// Checks the gradient evaluator against central differences of the value.
/// Returns the largest discrepancy over the given points.
pub fn gradient_consistency(model: &MorseModel, points: &[P3], step: f64) -> f64 {
    let mut worst: f64 = 0.0;
    for &p in points {
        let s = model.sample(p);
        let (t1, t2) = model.tangent_frame(p);
        for t in [t1, t2] {
            let fp = model.value(model.retract(p, vec3::scale(t, step)));
            let fm = model.value(model.retract(p, vec3::scale(t, -step)));
            let fd = (fp - fm) / (2.0 * step);
            worst = worst.max((fd - vec3::dot(s.grad, t)).abs());
        }
    }
    worst
}

/// Evaluates f at a surface point: value, intrinsic gradient and Hessian.
pub fn field_eval(model: &MorseModel, p: P3) -> Result<FieldSample> {
    let q = model.canonical_point(p)?;
    Ok(model.sample(q))
}

#[inline]
pub fn wrap01(x: f64) -> f64 {
    let w = x - x.floor();
    if w >= 1.0 {
        0.0
    } else {
        w
    }
}

fn rotate(p: P3, axis: P3, angle: f64) -> P3 {
    let (s, c) = angle.sin_cos();
    let kxp = vec3::cross(axis, p);
    let kdp = vec3::dot(axis, p);
    [
        p[0] * c + kxp[0] * s + axis[0] * kdp * (1.0 - c),
        p[1] * c + kxp[1] * s + axis[1] * kdp * (1.0 - c),
        p[2] * c + kxp[2] * s + axis[2] * kdp * (1.0 - c),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn sphere_height_at_north_pole_is_critical() {
        let m = MorseModel::sphere(FieldExpr::sphere_linear([0.0, 0.0, 1.0]));
        let s = field_eval(&m, [0.0, 0.0, 1.0]).unwrap();
        assert!((s.value - 1.0).abs() < 1e-15);
        assert!(vec3::norm(s.grad) < 1e-15);
    }

    #[test]
    fn torus_cosine_gradient_at_quarter() {
        let m = MorseModel::torus(FieldExpr::torus_cosine(1.0, [0.0, 0.0]));
        let s = field_eval(&m, [0.25, 0.0, 0.0]).unwrap();
        assert!((s.value - 1.0 / (4.0 * PI * PI)).abs() < 1e-15);
        assert!((s.grad[0] + 1.0 / (2.0 * PI)).abs() < 1e-15);
        assert!(s.grad[1].abs() < 1e-15);
    }

    #[test]
    fn sphere_equator_gradient_points_up() {
        let m = MorseModel::sphere(FieldExpr::sphere_linear([0.0, 0.0, 1.0]));
        let s = field_eval(&m, [1.0, 0.0, 0.0]).unwrap();
        assert!((vec3::norm(s.grad) - 1.0).abs() < 1e-15);
        assert!((s.grad[2] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn off_sphere_point_is_rejected() {
        let m = MorseModel::sphere(FieldExpr::sphere_linear([0.0, 0.0, 1.0]));
        assert!(matches!(field_eval(&m, [1.0, 0.1, 0.0]), Err(Error::Domain(_))));
    }

    #[test]
    fn torus_points_are_wrapped() {
        let m = MorseModel::torus(FieldExpr::torus_cosine(1.0, [0.0, 0.0]));
        let q = m.canonical_point([1.25, -0.5, 0.0]).unwrap();
        assert!((q[0] - 0.25).abs() < 1e-15 && (q[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn sphere_hessian_at_pole_of_height() {
        // f = z near the south pole: f ≈ -1 + |u|²/2
        let m = MorseModel::sphere(FieldExpr::sphere_linear([0.0, 0.0, 1.0]));
        let s = m.sample([0.0, 0.0, -1.0]);
        assert!((s.hess[0][0] - 1.0).abs() < 1e-15 && (s.hess[1][1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn nudge_round_trips() {
        let m = MorseModel::sphere(FieldExpr::sphere_linear([0.0, 0.0, 1.0]));
        let p = vec3::normalize([0.3, -0.2, 0.9]);
        let q = m.nudge(m.nudge(p, 1.0), -1.0);
        assert!(vec3::norm(vec3::sub(p, q)) < 1e-15);
        assert!(m.distance(p, m.nudge(p, 1.0)) < 2e-7);
    }
}
