//! Scalar fields with closed-form derivatives.

use super::vec3::{self, M3, P3};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// `amp * cos(2π(p x + q y) - phase)` on the unit-square torus.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrigTerm {
    pub amp: f64,
    pub p: f64,
    pub q: f64,
    pub phase: f64,
}

/// Field expression in chart (torus) or ambient (sphere) coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum FieldExpr {
    /// Trigonometric polynomial in (x, y).
    Trig(Vec<TrigTerm>),
    /// `c + b·p + ½ pᵀ q p` restricted to the unit sphere.
    Quadratic { c: f64, b: P3, q: M3 },
}

/// Ambient value, gradient and Hessian before any tangential correction.
#[derive(Clone, Copy, Debug)]
pub struct RawJet {
    pub value: f64,
    pub grad: P3,
    pub hess: M3,
}

impl FieldExpr {
    pub fn constant(c: f64) -> FieldExpr {
        FieldExpr::Trig(vec![TrigTerm { amp: c, p: 0.0, q: 0.0, phase: 0.0 }])
    }

    /// `amp (cos 2π(x - sx) + cos 2π(y - sy)) / 4π²`
    pub fn torus_cosine(amp: f64, shift: [f64; 2]) -> FieldExpr {
        let a = amp / (4.0 * PI * PI);
        FieldExpr::Trig(vec![
            TrigTerm { amp: a, p: 1.0, q: 0.0, phase: 2.0 * PI * shift[0] },
            TrigTerm { amp: a, p: 0.0, q: 1.0, phase: 2.0 * PI * shift[1] },
        ])
    }

    /// `cos 2πx (1 - ½ cos 2πy) / 4π²`: the two saddles at (0,0) and (½,0)
    /// are joined by a flow line along y = 0.
    pub fn torus_saddle_connection() -> FieldExpr {
        let a = 1.0 / (4.0 * PI * PI);
        FieldExpr::Trig(vec![
            TrigTerm { amp: a, p: 1.0, q: 0.0, phase: 0.0 },
            TrigTerm { amp: -0.25 * a, p: 1.0, q: 1.0, phase: 0.0 },
            TrigTerm { amp: -0.25 * a, p: 1.0, q: -1.0, phase: 0.0 },
        ])
    }

    /// `cos 2πx / 4π²`, degenerate along whole circles.
    pub fn torus_x_only() -> FieldExpr {
        FieldExpr::Trig(vec![TrigTerm { amp: 1.0 / (4.0 * PI * PI), p: 1.0, q: 0.0, phase: 0.0 }])
    }

    pub fn sphere_linear(b: P3) -> FieldExpr {
        FieldExpr::Quadratic { c: 0.0, b, q: [[0.0; 3]; 3] }
    }

    /// `z - bump x²`
    pub fn sphere_bumped(bump: f64) -> FieldExpr {
        let mut q = [[0.0; 3]; 3];
        q[0][0] = -2.0 * bump;
        FieldExpr::Quadratic { c: 0.0, b: [0.0, 0.0, 1.0], q }
    }

    pub fn scaled(&self, s: f64) -> FieldExpr {
        match self {
            FieldExpr::Trig(terms) => FieldExpr::Trig(
                terms.iter().map(|t| TrigTerm { amp: t.amp * s, ..t.clone() }).collect(),
            ),
            FieldExpr::Quadratic { c, b, q } => {
                let mut qs = *q;
                for row in qs.iter_mut() {
                    for v in row.iter_mut() {
                        *v *= s;
                    }
                }
                FieldExpr::Quadratic { c: c * s, b: vec3::scale(*b, s), q: qs }
            }
        }
    }

    /// Sum of two expressions of the same family.
    pub fn plus(&self, other: &FieldExpr) -> Option<FieldExpr> {
        match (self, other) {
            (FieldExpr::Trig(a), FieldExpr::Trig(b)) => {
                let mut t = a.clone();
                t.extend(b.iter().cloned());
                Some(FieldExpr::Trig(t))
            }
            (FieldExpr::Quadratic { c: c1, b: b1, q: q1 }, FieldExpr::Quadratic { c: c2, b: b2, q: q2 }) => {
                let mut q = *q1;
                for i in 0..3 {
                    for j in 0..3 {
                        q[i][j] += q2[i][j];
                    }
                }
                Some(FieldExpr::Quadratic { c: c1 + c2, b: vec3::add(*b1, *b2), q })
            }
            _ => None,
        }
    }

    pub fn jet(&self, p: P3) -> RawJet {
        match self {
            FieldExpr::Trig(terms) => {
                let mut value = 0.0;
                let mut grad = [0.0; 3];
                let mut hess = [[0.0; 3]; 3];
                let tau = 2.0 * PI;
                for t in terms {
                    let arg = tau * (t.p * p[0] + t.q * p[1]) - t.phase;
                    let (s, c) = arg.sin_cos();
                    value += t.amp * c;
                    let k = [tau * t.p, tau * t.q];
                    grad[0] -= t.amp * s * k[0];
                    grad[1] -= t.amp * s * k[1];
                    for i in 0..2 {
                        for j in 0..2 {
                            hess[i][j] -= t.amp * c * k[i] * k[j];
                        }
                    }
                }
                RawJet { value, grad, hess }
            }
            FieldExpr::Quadratic { c, b, q } => {
                let qp = vec3::mat_vec(q, p);
                RawJet {
                    value: c + vec3::dot(*b, p) + 0.5 * vec3::dot(p, qp),
                    grad: vec3::add(*b, qp),
                    hess: *q,
                }
            }
        }
    }

    pub fn value(&self, p: P3) -> f64 {
        match self {
            FieldExpr::Trig(terms) => {
                let tau = 2.0 * PI;
                terms
                    .iter()
                    .map(|t| t.amp * (tau * (t.p * p[0] + t.q * p[1]) - t.phase).cos())
                    .sum()
            }
            FieldExpr::Quadratic { c, b, q } => {
                c + vec3::dot(*b, p) + 0.5 * vec3::dot(p, vec3::mat_vec(q, p))
            }
        }
    }
}
