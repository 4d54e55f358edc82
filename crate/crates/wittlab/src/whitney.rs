//! Cochains on a triangle mesh: coboundaries and Whitney interpolation.
//!
//! Inside a triangle with corners 0, 1, 2 forms are written in the
//! barycentric coordinates, with 1-forms on the basis (dλ1, dλ2) and 2-forms
//! as multiples of dλ1∧dλ2. Top-degree integrals need no metric:
//! ∫_T g dλ1∧dλ2 = ½ Σ_q w_q g(q) for the positively oriented triangle.

use crate::geometry::quadrature::{pairwise_sum, QUAD_RULE};
use crate::geometry::TriMesh;

/// d of a k-cochain (k = 0 or 1).
pub fn coboundary(mesh: &TriMesh, degree: usize, c: &[f64]) -> Vec<f64> {
    match degree {
        0 => mesh.edges.iter().map(|&[i, j]| c[j] - c[i]).collect(),
        1 => mesh
            .tri_edges
            .iter()
            .map(|te| te.iter().map(|&(e, s)| s as f64 * c[e]).sum())
            .collect(),
        _ => vec![0.0; 0],
    }
}

pub fn cell_count(mesh: &TriMesh, degree: usize) -> usize {
    match degree {
        0 => mesh.n_vertices(),
        1 => mesh.n_edges(),
        _ => mesh.n_triangles(),
    }
}

/// Whitney form evaluated at a barycentric point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalForm {
    pub degree: usize,
    pub coef: [f64; 2],
}

const DLAMBDA: [[f64; 2]; 3] = [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]];

impl LocalForm {
    pub fn wedge(self, other: LocalForm) -> Option<LocalForm> {
        match (self.degree, other.degree) {
            (0, _) => Some(LocalForm { degree: other.degree, coef: other.coef.map(|c| c * self.coef[0]) }),
            (_, 0) => Some(LocalForm { degree: self.degree, coef: self.coef.map(|c| c * other.coef[0]) }),
            (1, 1) => Some(LocalForm {
                degree: 2,
                coef: [self.coef[0] * other.coef[1] - self.coef[1] * other.coef[0], 0.0],
            }),
            _ => None,
        }
    }
}

/// Values of a cochain on the cells of triangle t, in local orientation.
/// Degree 1: entry k belongs to the edge from corner k to corner k+1.
pub fn local_values(mesh: &TriMesh, t: usize, degree: usize, c: &[f64]) -> [f64; 3] {
    match degree {
        0 => mesh.triangles[t].map(|v| c[v]),
        1 => mesh.tri_edges[t].map(|(e, s)| s as f64 * c[e]),
        _ => [c[t], 0.0, 0.0],
    }
}

/// Whitney interpolant of local cochain values at barycentric point l.
pub fn interpolate(degree: usize, vals: [f64; 3], l: [f64; 3]) -> LocalForm {
    match degree {
        0 => LocalForm { degree: 0, coef: [vals[0] * l[0] + vals[1] * l[1] + vals[2] * l[2], 0.0] },
        1 => {
            let mut coef = [0.0; 2];
            for k in 0..3 {
                let (i, j) = (k, (k + 1) % 3);
                for d in 0..2 {
                    coef[d] += vals[k] * (l[i] * DLAMBDA[j][d] - l[j] * DLAMBDA[i][d]);
                }
            }
            LocalForm { degree: 1, coef }
        }
        // unit cochain integrates to one: 2 dλ1∧dλ2
        _ => LocalForm { degree: 2, coef: [2.0 * vals[0], 0.0] },
    }
}

/// ∫_M W(c_1) ∧ … ∧ W(c_n) for cochains whose degrees sum to 2, with
/// per-triangle weights g (applied to the integrand at each node).
pub fn wedge_integral_weighted<G>(mesh: &TriMesh, factors: &[(usize, &[f64])], g: G) -> f64
where
    G: Fn(usize, [f64; 3]) -> f64,
{
    assert_eq!(factors.iter().map(|f| f.0).sum::<usize>(), 2, "degrees must sum to two");
    let per_tri: Vec<f64> = (0..mesh.n_triangles())
        .map(|t| {
            let locals: Vec<(usize, [f64; 3])> =
                factors.iter().map(|&(d, c)| (d, local_values(mesh, t, d, c))).collect();
            let mut acc = 0.0;
            for &(l, w) in QUAD_RULE.iter() {
                let mut form = LocalForm { degree: 0, coef: [1.0, 0.0] };
                for &(d, v) in &locals {
                    form = form.wedge(interpolate(d, v, l)).expect("degree overflow");
                }
                acc += w * form.coef[0] * g(t, l);
            }
            0.5 * acc
        })
        .collect();
    pairwise_sum(&per_tri)
}

pub fn wedge_integral(mesh: &TriMesh, factors: &[(usize, &[f64])]) -> f64 {
    wedge_integral_weighted(mesh, factors, |_, _| 1.0)
}

/// Alexander–Whitney cup product α ∪ β ∪ γ evaluated on the fundamental
/// class, with vertices ordered by index. Degrees must sum to 2.
pub fn cup_product_integral(mesh: &TriMesh, factors: [(usize, &[f64]); 3]) -> f64 {
    assert_eq!(factors.iter().map(|f| f.0).sum::<usize>(), 2, "degrees must sum to two");
    let edge_of = |a: usize, b: usize, t: usize| -> usize {
        mesh.tri_edges[t]
            .iter()
            .map(|&(e, _)| e)
            .find(|&e| mesh.edges[e] == [a.min(b), a.max(b)])
            .expect("edge of triangle")
    };
    let per_tri: Vec<f64> = (0..mesh.n_triangles())
        .map(|t| {
            let tri = mesh.triangles[t];
            let mut w = tri;
            w.sort_unstable();
            // parity of the sorting permutation relative to the ccw order
            let pos = |v: usize| tri.iter().position(|&x| x == v).unwrap();
            let (p0, p1, p2) = (pos(w[0]), pos(w[1]), pos(w[2]));
            let orient = if (p1 + 3 - p0) % 3 == 1 && (p2 + 3 - p1) % 3 == 1 { 1.0 } else { -1.0 };
            // value of a face [w_i .. w_j] of the ordered simplex
            let face = |deg: usize, c: &[f64], start: usize| -> f64 {
                match deg {
                    0 => c[w[start]],
                    1 => c[edge_of(w[start], w[start + 1], t)],
                    _ => orient * c[t],
                }
            };
            let mut start = 0;
            let mut val = orient;
            for &(d, c) in &factors {
                val *= face(d, c, start);
                start += d;
            }
            val
        })
        .collect();
    pairwise_sum(&per_tri)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::mesh::torus_grid;
    use crate::geometry::{build_mesh, MorseModel};
    use crate::geometry::field::FieldExpr;

    #[test]
    fn coboundary_squares_to_zero() {
        let m = build_mesh(&MorseModel::sphere(FieldExpr::sphere_linear([0.0, 0.0, 1.0])), 1).unwrap();
        let u: Vec<f64> = (0..m.n_vertices()).map(|i| (i as f64 * 0.37).sin()).collect();
        let du = coboundary(&m, 0, &u);
        assert!(coboundary(&m, 1, &du).iter().all(|x| x.abs() < 1e-14));
    }

    #[test]
    fn unit_two_cochain_integrates_to_one() {
        let m = torus_grid(8);
        let mut w = vec![0.0; m.n_triangles()];
        w[5] = 1.0;
        let one = vec![1.0; m.n_vertices()];
        assert!((wedge_integral(&m, &[(0, &one), (2, &w)]) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn exact_forms_wedge_to_zero() {
        // ∫ du ∧ dv = 0 on a closed surface
        let m = torus_grid(8);
        let u: Vec<f64> = m.vertices.iter().map(|p| (6.0 * p[0]).sin() + p[1]).collect();
        let v: Vec<f64> = m.vertices.iter().map(|p| (2.0 * std::f64::consts::PI * p[1]).cos()).collect();
        let du = coboundary(&m, 0, &u);
        let dv = coboundary(&m, 0, &v);
        assert!(wedge_integral(&m, &[(1, &du), (1, &dv)]).abs() < 1e-12);
    }

    #[test]
    fn cup_product_obeys_leibniz() {
        let m = build_mesh(&MorseModel::sphere(FieldExpr::sphere_linear([0.0, 0.0, 1.0])), 1).unwrap();
        let a: Vec<f64> = (0..m.n_vertices()).map(|i| (i as f64 * 0.71).cos()).collect();
        let b: Vec<f64> = (0..m.n_vertices()).map(|i| (i as f64 * 1.3).sin()).collect();
        let g: Vec<f64> = (0..m.n_edges()).map(|i| (i as f64 * 0.23).sin()).collect();
        // ∫ d(a ∪ b ∪ g) = 0 expands into three terms
        let da = coboundary(&m, 0, &a);
        let db = coboundary(&m, 0, &b);
        let dg = coboundary(&m, 1, &g);
        let lhs = cup_product_integral(&m, [(1, &da), (0, &b), (1, &g)])
            + cup_product_integral(&m, [(0, &a), (1, &db), (1, &g)])
            + cup_product_integral(&m, [(0, &a), (0, &b), (2, &dg)]);
        assert!(lhs.abs() < 1e-12, "{lhs}");
        let one = vec![1.0; m.n_vertices()];
        let mut unit = vec![0.0; m.n_triangles()];
        unit[3] = 1.0;
        assert_eq!(cup_product_integral(&m, [(0, &one), (2, &unit), (0, &one)]), 1.0);
    }

    #[test]
    fn whitney_one_form_reproduces_edge_values() {
        // the interpolant of a single edge integrates to one along it
        let vals = [1.0, 0.0, 0.0];
        let n = 200;
        let mut s = 0.0;
        for i in 0..n {
            let a = (i as f64 + 0.5) / n as f64;
            let f = interpolate(1, vals, [1.0 - a, a, 0.0]);
            // tangent of edge 0→1 is dλ1 = 1, dλ2 = 0
            s += f.coef[0] / n as f64;
        }
        assert!((s - 1.0).abs() < 1e-12);
    }
}
