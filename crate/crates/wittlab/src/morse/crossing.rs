//! Signed crossings between polylines and segment sets.
//!
//! Segments are straight on the torus (in unwrapped coordinates) and great
//! arcs on the sphere. Predicates treat an exact zero as positive so that
//! every query has a definite answer.

use crate::geometry::vec3::{self, P3};
use crate::geometry::{SurfaceKind, TriMesh};
use std::collections::HashMap;

#[derive(Clone, Copy, Debug)]
pub struct Crossing {
    /// Index of the stored segment that was crossed.
    pub id: usize,
    /// +1 when the query passes from the right to the left of the stored
    /// segment.
    pub sign: i8,
    pub point: P3,
}

fn orient(kind: SurfaceKind, a: P3, b: P3, p: P3) -> f64 {
    match kind {
        SurfaceKind::UnitSphereEmbedded => vec3::det3(a, b, p),
        _ => (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]),
    }
}

fn positive(x: f64) -> bool {
    x >= 0.0
}

/// Crossing test for stored segment ab and query pq.
pub fn segment_crossing(kind: SurfaceKind, a: P3, b: P3, p: P3, q: P3) -> Option<(i8, P3)> {
    if kind == SurfaceKind::UnitSphereEmbedded && vec3::dot(vec3::add(a, b), vec3::add(p, q)) <= 0.0 {
        return None;
    }
    let op = orient(kind, a, b, p);
    let oq = orient(kind, a, b, q);
    if positive(op) == positive(oq) {
        return None;
    }
    let oa = orient(kind, p, q, a);
    let ob = orient(kind, p, q, b);
    if positive(oa) == positive(ob) {
        return None;
    }
    let s = op / (op - oq);
    let mut x = vec3::axpy(p, s, vec3::sub(q, p));
    if kind == SurfaceKind::UnitSphereEmbedded {
        x = vec3::normalize(x);
    }
    Some((if positive(oq) { 1 } else { -1 }, x))
}

/// Uniform hash of short segments. On the torus cells are taken modulo the
/// period and segments are matched through the nearest periodic image.
pub struct SegmentIndex {
    kind: SurfaceKind,
    cell: f64,
    period_cells: i64,
    segments: Vec<[P3; 2]>,
    buckets: HashMap<[i64; 3], Vec<usize>>,
}

impl SegmentIndex {
    pub fn new(kind: SurfaceKind, cell: f64) -> SegmentIndex {
        let (cell, period_cells) = match kind {
            SurfaceKind::UnitSphereEmbedded => (cell, 0),
            _ => {
                let g = (1.0 / cell).floor().max(1.0);
                (1.0 / g, g as i64)
            }
        };
        SegmentIndex { kind, cell, period_cells, segments: Vec::new(), buckets: HashMap::new() }
    }

    pub fn for_mesh_edges(mesh: &TriMesh) -> SegmentIndex {
        let longest = (0..mesh.n_edges()).map(|e| vec3::norm(mesh.edge_vector(e))).fold(0.0, f64::max);
        let mut idx = SegmentIndex::new(mesh.kind, longest);
        for e in 0..mesh.n_edges() {
            let a = mesh.vertices[mesh.edges[e][0]];
            idx.push(a, vec3::add(a, mesh.edge_vector(e)));
        }
        idx
    }

    pub fn for_polyline(kind: SurfaceKind, points: &[P3], cell: f64) -> SegmentIndex {
        let mut idx = SegmentIndex::new(kind, cell);
        for w in points.windows(2) {
            idx.push(w[0], w[1]);
        }
        idx
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn segment(&self, id: usize) -> [P3; 2] {
        self.segments[id]
    }

    fn margin(&self, a: P3, b: P3) -> f64 {
        match self.kind {
            // arc sagitta plus slack
            SurfaceKind::UnitSphereEmbedded => vec3::norm(vec3::sub(a, b)).powi(2) + 1e-12,
            _ => 1e-12,
        }
    }

    fn cells(&self, a: P3, b: P3) -> Vec<[i64; 3]> {
        let m = self.margin(a, b);
        let dims = if self.kind == SurfaceKind::UnitSphereEmbedded { 3 } else { 2 };
        let mut lo = [0i64; 3];
        let mut hi = [0i64; 3];
        for d in 0..dims {
            lo[d] = ((a[d].min(b[d]) - m) / self.cell).floor() as i64;
            hi[d] = ((a[d].max(b[d]) + m) / self.cell).floor() as i64;
        }
        let mut out = Vec::new();
        for i in lo[0]..=hi[0] {
            for j in lo[1]..=hi[1] {
                for k in lo[2]..=hi[2] {
                    let key = if self.period_cells > 0 {
                        [i.rem_euclid(self.period_cells), j.rem_euclid(self.period_cells), 0]
                    } else {
                        [i, j, k]
                    };
                    out.push(key);
                }
            }
        }
        out
    }

    pub fn push(&mut self, a: P3, b: P3) -> usize {
        let id = self.segments.len();
        self.segments.push([a, b]);
        for key in self.cells(a, b) {
            self.buckets.entry(key).or_default().push(id);
        }
        id
    }

    /// Crossings of the query segment pq with stored segments, sorted by id.
    pub fn query(&self, p: P3, q: P3) -> Vec<Crossing> {
        let mut cand: Vec<usize> = Vec::new();
        for key in self.cells(p, q) {
            if let Some(v) = self.buckets.get(&key) {
                cand.extend_from_slice(v);
            }
        }
        cand.sort_unstable();
        cand.dedup();
        let mut out = Vec::new();
        for id in cand {
            let [mut a, mut b] = self.segments[id];
            if self.period_cells > 0 {
                let ox = (0.5 * (p[0] + q[0] - a[0] - b[0])).round();
                let oy = (0.5 * (p[1] + q[1] - a[1] - b[1])).round();
                a = [a[0] + ox, a[1] + oy, 0.0];
                b = [b[0] + ox, b[1] + oy, 0.0];
            }
            if let Some((sign, point)) = segment_crossing(self.kind, a, b, p, q) {
                out.push(Crossing { id, sign, point });
            }
        }
        out
    }

    /// All crossings of a polyline, in order along the polyline.
    pub fn polyline_crossings(&self, points: &[P3]) -> Vec<(usize, Crossing)> {
        let mut out = Vec::new();
        for (k, w) in points.windows(2).enumerate() {
            for c in self.query(w[0], w[1]) {
                out.push((k, c));
            }
        }
        out
    }
}

/// Edge cochain counting signed crossings of a curve with each mesh edge:
/// +1 when the curve passes the edge from its right to its left.
pub fn crossing_cochain(mesh: &TriMesh, edges: &SegmentIndex, curve: &[P3]) -> Vec<f64> {
    let mut c = vec![0.0; mesh.n_edges()];
    for (_, x) in edges.polyline_crossings(curve) {
        c[x.id] += x.sign as f64;
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::mesh::torus_grid;

    #[test]
    fn straight_crossing_signs() {
        let k = SurfaceKind::FlatTorusUnitSquare;
        let (s, x) = segment_crossing(k, [0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.5, -1.0, 0.0], [0.5, 1.0, 0.0]).unwrap();
        assert_eq!(s, 1);
        assert!((x[0] - 0.5).abs() < 1e-15 && x[1].abs() < 1e-15);
        let (s, _) = segment_crossing(k, [0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.5, 1.0, 0.0], [0.5, -1.0, 0.0]).unwrap();
        assert_eq!(s, -1);
        assert!(segment_crossing(k, [0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.5, -1.0, 0.0], [1.5, 1.0, 0.0]).is_none());
    }

    #[test]
    fn periodic_images_are_found() {
        let mut idx = SegmentIndex::new(SurfaceKind::FlatTorusUnitSquare, 0.1);
        idx.push([0.95, 0.5, 0.0], [1.05, 0.5, 0.0]);
        let c = idx.query([0.02, 0.45, 0.0], [0.02, 0.55, 0.0]);
        assert_eq!(c.len(), 1);
        let c = idx.query([2.02, -0.55, 0.0], [2.02, -0.45, 0.0]);
        assert_eq!(c.len(), 1);
    }

    #[test]
    fn closed_loop_gives_closed_cochain() {
        // a closed horizontal loop on the torus gives a closed cochain
        let m = torus_grid(8);
        let idx = SegmentIndex::for_mesh_edges(&m);
        let curve: Vec<P3> = (0..=200).map(|i| [i as f64 / 200.0, 0.3011, 0.0]).collect();
        let c = crossing_cochain(&m, &idx, &curve);
        let dc = crate::whitney::coboundary(&m, 1, &c);
        assert!(dc.iter().all(|&x| x == 0.0));
        // it pairs with vertical closed loops once
        let total: f64 = c.iter().map(|x| x.abs()).sum();
        assert!(total >= 8.0);
    }
}
