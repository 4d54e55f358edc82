//! Degree-4 symmetric triangle quadrature on flat and projected triangles.

use super::mesh::TriMesh;
use super::vec3::{self, P3};
use super::{wrap01, MorseModel, SurfaceKind};
use rayon::prelude::*;

/// Six-point rule exact for polynomials of total degree 4;
/// entries are (barycentric coordinates, weight), weights sum to 1.
pub const QUAD_RULE: [([f64; 3], f64); 6] = {
    const A: f64 = 0.445_948_490_915_964_9;
    const B: f64 = 0.091_576_213_509_770_74;
    const WA: f64 = 0.223_381_589_678_011_47;
    const WB: f64 = 0.109_951_743_655_321_87;
    [
        ([A, A, 1.0 - 2.0 * A], WA),
        ([A, 1.0 - 2.0 * A, A], WA),
        ([1.0 - 2.0 * A, A, A], WA),
        ([B, B, 1.0 - 2.0 * B], WB),
        ([B, 1.0 - 2.0 * B, B], WB),
        ([1.0 - 2.0 * B, B, B], WB),
    ]
};

#[derive(Clone, Copy, Debug)]
pub struct QuadNode {
    /// Point on the surface (wrapped on the torus).
    pub point: P3,
    /// Riemannian area weight.
    pub weight: f64,
    pub bary: [f64; 3],
}

/// Quadrature nodes of a flat triangle given by unwrapped corners. On the
/// sphere the triangle is radially projected and the weights carry the
/// projection Jacobian, so constants integrate to the spherical area.
pub fn flat_triangle_nodes(kind: SurfaceKind, corners: [P3; 3]) -> [QuadNode; 6] {
    let e1 = vec3::sub(corners[1], corners[0]);
    let e2 = vec3::sub(corners[2], corners[0]);
    let n = vec3::cross(e1, e2);
    let area = 0.5 * vec3::norm(n);
    let mut out = [QuadNode { point: [0.0; 3], weight: 0.0, bary: [0.0; 3] }; 6];
    let plane_dist = match kind {
        SurfaceKind::UnitSphereEmbedded => vec3::dot(vec3::normalize(n), corners[0]).abs(),
        _ => 0.0,
    };
    for (k, &(l, w)) in QUAD_RULE.iter().enumerate() {
        let p = [
            l[0] * corners[0][0] + l[1] * corners[1][0] + l[2] * corners[2][0],
            l[0] * corners[0][1] + l[1] * corners[1][1] + l[2] * corners[2][1],
            l[0] * corners[0][2] + l[1] * corners[1][2] + l[2] * corners[2][2],
        ];
        out[k] = match kind {
            SurfaceKind::UnitSphereEmbedded => {
                let r = vec3::norm(p);
                QuadNode { point: vec3::scale(p, 1.0 / r), weight: w * area * plane_dist / (r * r * r), bary: l }
            }
            _ => QuadNode { point: [wrap01(p[0]), wrap01(p[1]), 0.0], weight: w * area, bary: l },
        };
    }
    out
}

pub fn triangle_nodes(mesh: &TriMesh, t: usize) -> [QuadNode; 6] {
    flat_triangle_nodes(mesh.kind, mesh.tri_points(t))
}

/// Pairwise summation in a fixed order.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 16 {
        return v.iter().sum();
    }
    let mid = v.len() / 2;
    pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
}

/// Area-weighted integral of a density over the surface. `mask` scales
/// each triangle's contribution.
pub fn integrate_form<F>(mesh: &TriMesh, _model: &MorseModel, density: F, mask: Option<&[f64]>) -> f64
where
    F: Fn(P3) -> f64 + Sync,
{
    let per_tri: Vec<f64> = (0..mesh.n_triangles())
        .into_par_iter()
        .map(|t| {
            let m = mask.map_or(1.0, |m| m[t]);
            if m == 0.0 {
                return 0.0;
            }
            let s: f64 = triangle_nodes(mesh, t).iter().map(|q| q.weight * density(q.point)).sum();
            m * s
        })
        .collect();
    pairwise_sum(&per_tri)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::field::FieldExpr;
    use crate::geometry::mesh::{icosphere, torus_grid};
    use std::f64::consts::PI;

    #[test]
    fn rule_is_exact_to_degree_four() {
        // reference triangle (0,0),(1,0),(0,1); ∫ x^a y^b = a! b! / (a+b+2)!
        let fact = |n: u32| (1..=n).map(|k| k as f64).product::<f64>();
        for a in 0..=4u32 {
            for b in 0..=(4 - a) {
                let exact = fact(a) * fact(b) / fact(a + b + 2);
                let q: f64 = QUAD_RULE
                    .iter()
                    .map(|(l, w)| 0.5 * w * l[1].powi(a as i32) * l[2].powi(b as i32))
                    .sum();
                assert!((q - exact).abs() < 1e-15, "x^{a} y^{b}: {q} vs {exact}");
            }
        }
    }

    #[test]
    fn sphere_area_at_level_three() {
        let model = MorseModel::sphere(FieldExpr::sphere_linear([0.0, 0.0, 1.0]));
        let mesh = icosphere(3);
        let a = integrate_form(&mesh, &model, |_| 1.0, None);
        assert!((a - 4.0 * PI).abs() / (4.0 * PI) < 5e-3, "area {a}");
    }

    #[test]
    fn torus_area_and_cosine() {
        let model = MorseModel::torus(FieldExpr::torus_cosine(1.0, [0.0, 0.0]));
        let mesh = torus_grid(8);
        let a = integrate_form(&mesh, &model, |_| 1.0, None);
        assert!((a - 1.0).abs() < 1e-14);
        let c = integrate_form(&mesh, &model, |p| (2.0 * PI * p[0]).cos(), None);
        assert!(c.abs() < 1e-10);
    }

    #[test]
    fn masked_integral_scales() {
        let model = MorseModel::torus(FieldExpr::constant(0.0));
        let mesh = torus_grid(4);
        let mask: Vec<f64> = (0..mesh.n_triangles()).map(|t| if t % 2 == 0 { 1.0 } else { 0.0 }).collect();
        let a = integrate_form(&mesh, &model, |_| 1.0, Some(&mask));
        assert!((a - 0.5).abs() < 1e-14);
    }
}
