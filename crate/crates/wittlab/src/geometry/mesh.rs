//! Closed oriented triangulations of the model surfaces.

use super::vec3::{self, P3};
use super::{wrap01, MorseModel, SurfaceKind};
use crate::error::{Error, Result};
use std::collections::HashMap;
use std::io::Write;

#[derive(Clone, Debug)]
pub struct TriMesh {
    pub kind: SurfaceKind,
    pub level: u32,
    /// Unit vectors on the sphere; chart coordinates (x, y, 0) on the torus.
    pub vertices: Vec<P3>,
    /// Edges stored with the smaller vertex index first.
    pub edges: Vec<[usize; 2]>,
    /// Counter-clockwise with respect to the surface orientation.
    pub triangles: Vec<[usize; 3]>,
    /// For each triangle, its edges (v0v1, v1v2, v2v0) with +1 if the
    /// stored edge direction agrees with the triangle boundary.
    pub tri_edges: Vec<[(usize, i8); 3]>,
    pub mesh_size_h: f64,
    /// Grid resolution on the torus, 0 on the sphere.
    pub grid_n: usize,
}

/// Builds the icosphere (sphere) or the periodic offset-row grid (torus).
///
/// Torus level `l` has `N = 2^(l+1)` vertices per row; odd rows are shifted
/// by half a cell so every triangle is acute.
pub fn build_mesh(model: &MorseModel, level: u32) -> Result<TriMesh> {
    match model.kind {
        SurfaceKind::UnitSphereEmbedded => Ok(icosphere(level)),
        SurfaceKind::FlatTorusUnitSquare => {
            if level > 12 {
                return Err(Error::Config(format!("torus level {level} too large")));
            }
            Ok(torus_grid(1usize << (level + 1)))
        }
        SurfaceKind::ChartParameterized => {
            Err(Error::Config("no mesher for chart-parameterized models".into()))
        }
    }
}

pub fn icosphere(level: u32) -> TriMesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let raw: [P3; 12] = [
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ];
    let mut verts: Vec<P3> = raw.iter().map(|&v| vec3::normalize(v)).collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for f in faces.iter_mut() {
        let n = vec3::cross(vec3::sub(verts[f[1]], verts[f[0]]), vec3::sub(verts[f[2]], verts[f[0]]));
        if vec3::dot(n, verts[f[0]]) < 0.0 {
            f.swap(1, 2);
        }
    }
    for _ in 0..level {
        let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
        let mut next = Vec::with_capacity(faces.len() * 4);
        let mut midpoint = |a: usize, b: usize, verts: &mut Vec<P3>| -> usize {
            let key = (a.min(b), a.max(b));
            *mid.entry(key).or_insert_with(|| {
                verts.push(vec3::normalize(vec3::add(verts[a], verts[b])));
                verts.len() - 1
            })
        };
        for &[a, b, c] in &faces {
            let ab = midpoint(a, b, &mut verts);
            let bc = midpoint(b, c, &mut verts);
            let ca = midpoint(c, a, &mut verts);
            next.push([a, ab, ca]);
            next.push([b, bc, ab]);
            next.push([c, ca, bc]);
            next.push([ab, bc, ca]);
        }
        faces = next;
    }
    finish(SurfaceKind::UnitSphereEmbedded, level, verts, faces, 0)
}

pub fn torus_grid(n: usize) -> TriMesh {
    let h = 1.0 / n as f64;
    let idx = |i: usize, j: usize| (j % n) * n + (i % n);
    let mut verts = Vec::with_capacity(n * n);
    for j in 0..n {
        let shift = if j % 2 == 1 { 0.5 } else { 0.0 };
        for i in 0..n {
            verts.push([wrap01((i as f64 + shift) * h), j as f64 * h, 0.0]);
        }
    }
    let mut faces = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            if j % 2 == 0 {
                faces.push([idx(i, j), idx(i + 1, j), idx(i, j + 1)]);
                faces.push([idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1)]);
            } else {
                faces.push([idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)]);
                faces.push([idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)]);
            }
        }
    }
    let level = n.trailing_zeros().saturating_sub(1);
    finish(SurfaceKind::FlatTorusUnitSquare, level, verts, faces, n)
}

fn finish(kind: SurfaceKind, level: u32, vertices: Vec<P3>, triangles: Vec<[usize; 3]>, grid_n: usize) -> TriMesh {
    let mut edge_index: HashMap<(usize, usize), usize> = HashMap::new();
    let mut edges = Vec::new();
    let mut tri_edges = Vec::with_capacity(triangles.len());
    for t in &triangles {
        let mut te = [(0usize, 0i8); 3];
        for k in 0..3 {
            let a = t[k];
            let b = t[(k + 1) % 3];
            let key = (a.min(b), a.max(b));
            let e = *edge_index.entry(key).or_insert_with(|| {
                edges.push([key.0, key.1]);
                edges.len() - 1
            });
            te[k] = (e, if a < b { 1 } else { -1 });
        }
        tri_edges.push(te);
    }
    let mut mesh = TriMesh { kind, level, vertices, edges, triangles, tri_edges, mesh_size_h: 0.0, grid_n };
    mesh.mesh_size_h = (0..mesh.edges.len()).map(|e| vec3::norm(mesh.edge_vector(e))).fold(0.0, f64::max);
    mesh
}

impl TriMesh {
    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.n_vertices() as i64 - self.n_edges() as i64 + self.n_triangles() as i64
    }

    fn min_image(&self, from: P3, to: P3) -> P3 {
        match self.kind {
            SurfaceKind::UnitSphereEmbedded => to,
            _ => {
                let dx = to[0] - from[0];
                let dy = to[1] - from[1];
                [from[0] + dx - dx.round(), from[1] + dy - dy.round(), 0.0]
            }
        }
    }

    /// Edge vector from the first to the second vertex (chord on the sphere).
    pub fn edge_vector(&self, e: usize) -> P3 {
        let [a, b] = self.edges[e];
        let pa = self.vertices[a];
        vec3::sub(self.min_image(pa, self.vertices[b]), pa)
    }

    /// Triangle corners, unwrapped around the first corner on the torus.
    pub fn tri_points(&self, t: usize) -> [P3; 3] {
        let [a, b, c] = self.triangles[t];
        let pa = self.vertices[a];
        [pa, self.min_image(pa, self.vertices[b]), self.min_image(pa, self.vertices[c])]
    }

    /// Flat (chordal) triangle area.
    pub fn tri_area(&self, t: usize) -> f64 {
        let [p0, p1, p2] = self.tri_points(t);
        0.5 * vec3::norm(vec3::cross(vec3::sub(p1, p0), vec3::sub(p2, p0)))
    }

    /// Signed flat area relative to the surface orientation.
    pub fn tri_signed_area(&self, t: usize) -> f64 {
        let [p0, p1, p2] = self.tri_points(t);
        let n = vec3::cross(vec3::sub(p1, p0), vec3::sub(p2, p0));
        let c = match self.kind {
            SurfaceKind::UnitSphereEmbedded => vec3::add(vec3::add(p0, p1), p2),
            _ => [0.0, 0.0, 1.0],
        };
        0.5 * vec3::norm(n) * vec3::dot(n, c).signum()
    }

    /// Checks that every edge borders exactly two triangles with opposite
    /// induced orientations.
    pub fn check_closed_oriented(&self) -> Result<()> {
        let mut count = vec![(0u32, 0i32); self.n_edges()];
        for te in &self.tri_edges {
            for &(e, s) in te {
                count[e].0 += 1;
                count[e].1 += s as i32;
            }
        }
        for (e, &(c, s)) in count.iter().enumerate() {
            if c != 2 || s != 0 {
                return Err(Error::Mesh(format!("edge {e} has {c} triangles, orientation sum {s}")));
            }
        }
        for t in 0..self.n_triangles() {
            if self.tri_signed_area(t) <= 0.0 {
                return Err(Error::Mesh(format!("triangle {t} is inverted")));
            }
        }
        Ok(())
    }

    /// Triangle containing the surface point p (first match).
    pub fn locate(&self, p: P3) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for t in 0..self.n_triangles() {
            let m = self.containment_margin(t, p);
            if m >= 0.0 {
                return Some(t);
            }
            if best.is_none_or(|(_, b)| m > b) {
                best = Some((t, m));
            }
        }
        // only reached through rounding right on an edge
        best.filter(|&(_, m)| m > -1e-14).map(|(t, _)| t)
    }

    /// Smallest signed barycentric-type coordinate of p in triangle t;
    /// non-negative iff p lies in t.
    pub fn containment_margin(&self, t: usize, p: P3) -> f64 {
        match self.kind {
            SurfaceKind::UnitSphereEmbedded => {
                let [a, b, c] = self.triangles[t].map(|i| self.vertices[i]);
                if vec3::dot(p, vec3::add(vec3::add(a, b), c)) <= 0.0 {
                    return -1.0;
                }
                vec3::det3(a, b, p).min(vec3::det3(b, c, p)).min(vec3::det3(c, a, p))
            }
            _ => {
                let [p0, p1, p2] = self.tri_points(t);
                let q = self.min_image(p0, p);
                let l = barycentric_2d(p0, p1, p2, q);
                l[0].min(l[1]).min(l[2])
            }
        }
    }

    pub fn write_off<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "OFF")?;
        writeln!(w, "{} {} {}", self.n_vertices(), self.n_triangles(), self.n_edges())?;
        for v in &self.vertices {
            writeln!(w, "{:.17e} {:.17e} {:.17e}", v[0], v[1], v[2])?;
        }
        for t in &self.triangles {
            writeln!(w, "3 {} {} {}", t[0], t[1], t[2])?;
        }
        Ok(())
    }
}

pub fn barycentric_2d(p0: P3, p1: P3, p2: P3, q: P3) -> [f64; 3] {
    let d = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
    let l1 = ((q[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (q[1] - p0[1])) / d;
    let l2 = ((p1[0] - p0[0]) * (q[1] - p0[1]) - (q[0] - p0[0]) * (p1[1] - p0[1])) / d;
    [1.0 - l1 - l2, l1, l2]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::field::FieldExpr;

    #[test]
    fn icosahedron_counts() {
        let m = icosphere(0);
        assert_eq!((m.n_vertices(), m.n_edges(), m.n_triangles()), (12, 30, 20));
        assert_eq!(m.euler_characteristic(), 2);
        m.check_closed_oriented().unwrap();
    }

    #[test]
    fn torus_eight_grid_counts() {
        let m = torus_grid(8);
        assert_eq!((m.n_vertices(), m.n_edges(), m.n_triangles()), (64, 192, 128));
        assert_eq!(m.euler_characteristic(), 0);
        m.check_closed_oriented().unwrap();
        assert_eq!(m.level, 2);
    }

    #[test]
    fn icosphere_level_three() {
        let m = icosphere(3);
        assert_eq!(m.n_vertices(), 642);
        assert!(m.mesh_size_h < 0.30);
        m.check_closed_oriented().unwrap();
    }

    #[test]
    fn mesh_size_halves() {
        let t = MorseModel::torus(FieldExpr::torus_cosine(1.0, [0.0, 0.0]));
        let h: Vec<f64> = (1..4).map(|l| build_mesh(&t, l).unwrap().mesh_size_h).collect();
        assert!((h[0] / h[1] - 2.0).abs() < 1e-12 && (h[1] / h[2] - 2.0).abs() < 1e-12);
        let s: Vec<f64> = (1..5).map(|l| icosphere(l).mesh_size_h).collect();
        for w in s.windows(2) {
            let r = w[0] / w[1];
            assert!(r > 1.8 && r < 2.2, "ratio {r}");
        }
    }

    #[test]
    fn chart_models_are_rejected() {
        let m = MorseModel {
            kind: SurfaceKind::ChartParameterized,
            f: FieldExpr::constant(0.0),
            normalization: 1.0,
        };
        assert!(matches!(build_mesh(&m, 1), Err(Error::Config(_))));
    }

    #[test]
    fn locate_finds_containing_triangle() {
        let m = icosphere(2);
        let p = vec3::normalize([0.3, -0.4, 0.8]);
        let t = m.locate(p).unwrap();
        assert!(m.containment_margin(t, p) >= 0.0);
        let g = torus_grid(8);
        let t = g.locate([0.99, 0.01, 0.0]).unwrap();
        assert!(g.containment_margin(t, [0.99, 0.01, 0.0]) >= 0.0);
    }

    #[test]
    fn off_export_has_header_and_counts() {
        let m = icosphere(0);
        let mut buf = Vec::new();
        m.write_off(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        let mut lines = s.lines();
        assert_eq!(lines.next(), Some("OFF"));
        assert_eq!(lines.next(), Some("12 20 30"));
        assert_eq!(s.lines().count(), 2 + 12 + 20);
    }
}
