//! Discrete exterior calculus on a triangulated surface and the twisted
//! (Witten) Laplacians built from it.
//!
//! The twisted differential is D_k = E_{k+1}^{-1} d_k E_k with E = e^{f/ħ}
//! applied cellwise, so D_{k+1} D_k = 0 holds exactly. Operators are stored
//! in coordinates scaled by S_k = (⋆_k)^{1/2}, where they are symmetric:
//! B_k = S_{k+1} D_k S_k^{-1} and Ŵ_k = (ħ/2)(B_kᵀ B_k + B_{k−1} B_{k−1}ᵀ).

use crate::error::{Error, Result};
use crate::geometry::vec3::{self, P3};
use crate::geometry::{MorseModel, SurfaceKind, TriMesh};
use crate::linalg::{dense_eigenvalues, smallest_eigenpairs, Csr, EigenOptions, Eigenpairs};
use serde::Serialize;

pub const OVERFLOW_EXPONENT: f64 = 700.0;
const DEGENERATE_AREA: f64 = 1e-14;

#[derive(Clone, Debug)]
pub struct DecComplex {
    pub kind: SurfaceKind,
    pub d0: Csr,
    pub d1: Csr,
    pub star0: Vec<f64>,
    pub star1: Vec<f64>,
    pub star2: Vec<f64>,
    pub f_vertex: Vec<f64>,
    pub f_edge: Vec<f64>,
    pub f_tri: Vec<f64>,
    pub warnings: Vec<String>,
}

impl DecComplex {
    pub fn dims(&self) -> [usize; 3] {
        [self.star0.len(), self.star1.len(), self.star2.len()]
    }

    pub fn star(&self, k: usize) -> &[f64] {
        match k {
            0 => &self.star0,
            1 => &self.star1,
            _ => &self.star2,
        }
    }

    pub fn f_cells(&self, k: usize) -> &[f64] {
        match k {
            0 => &self.f_vertex,
            1 => &self.f_edge,
            _ => &self.f_tri,
        }
    }

    pub fn sqrt_star(&self, k: usize) -> Vec<f64> {
        self.star(k).iter().map(|s| s.sqrt()).collect()
    }

    /// Same complex with a different function on the cells.
    pub fn with_function(&self, mesh: &TriMesh, model: &MorseModel) -> DecComplex {
        let mut d = self.clone();
        let (fv, fe, ft) = cell_values(mesh, model);
        d.f_vertex = fv;
        d.f_edge = fe;
        d.f_tri = ft;
        d
    }

    /// ⋆-weighted inner product of two k-cochains.
    pub fn inner(&self, k: usize, a: &[f64], b: &[f64]) -> f64 {
        self.star(k).iter().zip(a.iter().zip(b)).map(|(s, (x, y))| s * x * y).sum()
    }

    pub fn norm(&self, k: usize, a: &[f64]) -> f64 {
        self.inner(k, a, a).sqrt()
    }

    /// Smallest ħ at which the exponential entries stay O(1): four times the
    /// largest f difference between incident cells.
    pub fn hbar_resolution(&self) -> f64 {
        4.0 * self.max_incident_difference()
    }

    pub fn max_incident_difference(&self) -> f64 {
        let mut m: f64 = 0.0;
        for (d, lo, hi) in [(&self.d0, &self.f_vertex, &self.f_edge), (&self.d1, &self.f_edge, &self.f_tri)] {
            for r in 0..d.n_rows {
                for (c, _) in d.row(r) {
                    m = m.max((hi[r] - lo[c]).abs());
                }
            }
        }
        m
    }
}

fn cell_values(mesh: &TriMesh, model: &MorseModel) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let fv: Vec<f64> = mesh.vertices.iter().map(|&p| model.value(p)).collect();
    let fe = mesh.edges.iter().map(|&[a, b]| 0.5 * (fv[a] + fv[b])).collect();
    let ft = mesh.triangles.iter().map(|t| (fv[t[0]] + fv[t[1]] + fv[t[2]]) / 3.0).collect();
    (fv, fe, ft)
}

fn cot(a: P3, b: P3) -> f64 {
    vec3::dot(a, b) / vec3::norm(vec3::cross(a, b))
}

pub fn build_dec(mesh: &TriMesh, model: &MorseModel) -> Result<DecComplex> {
    mesh.check_closed_oriented()?;
    let (nv, ne, nf) = (mesh.n_vertices(), mesh.n_edges(), mesh.n_triangles());
    let mut t0 = Vec::with_capacity(2 * ne);
    for (e, &[a, b]) in mesh.edges.iter().enumerate() {
        t0.push((e, a, -1.0));
        t0.push((e, b, 1.0));
    }
    let d0 = Csr::from_triplets(ne, nv, t0);
    let mut t1 = Vec::with_capacity(3 * nf);
    for (t, te) in mesh.tri_edges.iter().enumerate() {
        for &(e, s) in te {
            t1.push((t, e, s as f64));
        }
    }
    let d1 = Csr::from_triplets(nf, ne, t1);

    let mut star0 = vec![0.0; nv];
    let mut star1 = vec![0.0; ne];
    let mut dual_bary = vec![0.0; ne];
    let mut star2 = vec![0.0; nf];
    for t in 0..nf {
        let p = mesh.tri_points(t);
        let area = mesh.tri_area(t);
        if area < DEGENERATE_AREA {
            return Err(Error::Mesh(format!("triangle {t} is degenerate (area {area:e})")));
        }
        star2[t] = 1.0 / area;
        let centroid = vec3::scale(vec3::add(vec3::add(p[0], p[1]), p[2]), 1.0 / 3.0);
        for k in 0..3 {
            star0[mesh.triangles[t][k]] += area / 3.0;
            // edge k joins corners k and k+1; the opposite corner is k+2
            let (i, j, o) = (k, (k + 1) % 3, (k + 2) % 3);
            let e = mesh.tri_edges[t][k].0;
            star1[e] += 0.5 * cot(vec3::sub(p[i], p[o]), vec3::sub(p[j], p[o]));
            let mid = vec3::scale(vec3::add(p[i], p[j]), 0.5);
            dual_bary[e] += vec3::norm(vec3::sub(centroid, mid));
        }
    }
    let mut warnings = Vec::new();
    let bad = star1.iter().filter(|&&w| !(w > 0.0)).count();
    if bad > 0 {
        let msg = format!("{bad} nonpositive cotangent weights; using barycentric dual edge ratios");
        log::warn!("{msg}");
        warnings.push(msg);
        for e in 0..ne {
            star1[e] = dual_bary[e] / vec3::norm(mesh.edge_vector(e));
        }
    }
    let (f_vertex, f_edge, f_tri) = cell_values(mesh, model);
    Ok(DecComplex { kind: mesh.kind, d0, d1, star0, star1, star2, f_vertex, f_edge, f_tri, warnings })
}

fn check_hbar(hbar: f64) -> Result<()> {
    if !(hbar > 0.0) || !hbar.is_finite() {
        return Err(Error::Domain(format!("hbar must be positive, got {hbar}")));
    }
    Ok(())
}

/// D_k with entries ±e^{(f(c) − f(c'))/ħ}, c the lower and c' the upper cell.
pub fn twisted_differential(dec: &DecComplex, hbar: f64, k: usize) -> Result<Csr> {
    check_hbar(hbar)?;
    let (d, lo, hi) = match k {
        0 => (&dec.d0, &dec.f_vertex, &dec.f_edge),
        1 => (&dec.d1, &dec.f_edge, &dec.f_tri),
        2 => return Ok(Csr::zeros(0, dec.dims()[2])),
        _ => return Err(Error::Domain(format!("degree {k} out of range on a surface"))),
    };
    let mut worst: f64 = 0.0;
    let mut t = Vec::with_capacity(d.nnz());
    for r in 0..d.n_rows {
        for (c, s) in d.row(r) {
            let x = (lo[c] - hi[r]) / hbar;
            worst = worst.max(x.abs());
            t.push((r, c, s * x.exp()));
        }
    }
    if worst > OVERFLOW_EXPONENT {
        return Err(Error::HbarTooSmall { ratio: worst });
    }
    Ok(Csr::from_triplets(d.n_rows, d.n_cols, t))
}

/// B_k = S_{k+1} D_k S_k^{-1}.
pub fn scaled_differential(dec: &DecComplex, hbar: f64, k: usize) -> Result<Csr> {
    let d = twisted_differential(dec, hbar, k)?;
    if k == 2 {
        return Ok(d);
    }
    let left = dec.sqrt_star(k + 1);
    let right: Vec<f64> = dec.sqrt_star(k).iter().map(|s| 1.0 / s).collect();
    Ok(d.scale_rows_cols(&left, &right))
}

#[derive(Clone, Debug)]
pub struct WittenOperator {
    pub degree_k: usize,
    pub hbar: f64,
    /// Ŵ_k in ⋆^{1/2}-scaled coordinates.
    pub matrix: Csr,
    /// B_k (None for k = 2).
    pub b_out: Option<Csr>,
    /// B_{k−1} (None for k = 0).
    pub b_in: Option<Csr>,
    pub sqrt_star: Vec<f64>,
    pub under_resolved: bool,
}

impl WittenOperator {
    pub fn dim(&self) -> usize {
        self.matrix.n_rows
    }

    /// Cochain → scaled coordinates.
    pub fn to_scaled(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.sqrt_star).map(|(a, s)| a * s).collect()
    }

    pub fn from_scaled(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.sqrt_star).map(|(a, s)| a / s).collect()
    }
}

pub fn witten_matrix(dec: &DecComplex, hbar: f64, k: usize) -> Result<WittenOperator> {
    check_hbar(hbar)?;
    if k > 2 {
        return Err(Error::Domain(format!("degree {k} out of range on a surface")));
    }
    let n = dec.dims()[k];
    let b_out = if k < 2 { Some(scaled_differential(dec, hbar, k)?) } else { None };
    let b_in = if k > 0 { Some(scaled_differential(dec, hbar, k - 1)?) } else { None };
    let mut m = Csr::zeros(n, n);
    if let Some(b) = &b_out {
        m = m.lin_comb(1.0, &b.transpose().matmul(b), 1.0);
    }
    if let Some(b) = &b_in {
        m = m.lin_comb(1.0, &b.matmul(&b.transpose()), 1.0);
    }
    let matrix = m.scale(0.5 * hbar);
    Ok(WittenOperator {
        degree_k: k,
        hbar,
        matrix,
        b_out,
        b_in,
        sqrt_star: dec.sqrt_star(k),
        under_resolved: hbar < dec.hbar_resolution(),
    })
}

pub fn low_spectrum(op: &WittenOperator, m: usize, opts: &EigenOptions) -> Result<Eigenpairs> {
    smallest_eigenpairs(&op.matrix, m.min(op.dim()), opts)
}

/// Eigenpairs with λ ≤ upper, plus the first one above it (if any).
pub fn spectrum_below(op: &WittenOperator, upper: f64, hint: usize, opts: &EigenOptions) -> Result<Eigenpairs> {
    let n = op.dim();
    let mut m = hint.max(1).min(n);
    loop {
        let p = smallest_eigenpairs(&op.matrix, m, opts)?;
        if m == n || p.values.last().is_some_and(|&v| v > upper) {
            return Ok(p);
        }
        m = (2 * m).min(n);
    }
}

/// Number of eigenvalues strictly below ε₀.
pub fn count_below(op: &WittenOperator, eps0: f64, hint: usize, opts: &EigenOptions) -> Result<usize> {
    if op.dim() == 0 {
        return Ok(0);
    }
    let p = spectrum_below(op, eps0, hint + 2, opts)?;
    Ok(p.values.iter().filter(|&&v| v < eps0).count())
}

/// Kernel dimension via the threshold 1e-10·‖W‖.
pub fn kernel_dimension(op: &WittenOperator, opts: &EigenOptions) -> Result<usize> {
    if op.dim() == 0 {
        return Ok(0);
    }
    let thr = 1e-10 * op.matrix.norm_inf();
    let p = spectrum_below(op, thr, 4, opts)?;
    Ok(p.values.iter().filter(|&&v| v <= thr).count())
}

/// Orthogonal projector (in scaled coordinates) onto the eigenvectors with
/// eigenvalue in [lo, hi].
#[derive(Clone, Debug)]
pub struct SpectralProjector {
    pub degree_k: usize,
    pub window: (f64, f64),
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    pub sqrt_star: Vec<f64>,
}

impl SpectralProjector {
    pub fn rank(&self) -> usize {
        self.vectors.len()
    }

    pub fn apply_scaled(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        for v in &self.vectors {
            let c: f64 = v.iter().zip(x).map(|(a, b)| a * b).sum();
            for (o, a) in out.iter_mut().zip(v) {
                *o += c * a;
            }
        }
        out
    }

    /// Π on cochains: S^{-1} Π̂ S.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let xs: Vec<f64> = x.iter().zip(&self.sqrt_star).map(|(a, s)| a * s).collect();
        self.apply_scaled(&xs).iter().zip(&self.sqrt_star).map(|(a, s)| a / s).collect()
    }
}

/// Projector onto eigenspaces with eigenvalue λ in [lo, hi].
pub fn projector_for_eigenvalues(op: &WittenOperator, lo: f64, hi: f64, opts: &EigenOptions) -> Result<SpectralProjector> {
    if !(hi > lo) {
        return Err(Error::Window(format!("empty window [{lo}, {hi}]")));
    }
    let p = spectrum_below(op, hi, 4, opts)?;
    for &v in &p.values {
        if (v - lo).abs() < 1e-8 || (v - hi).abs() < 1e-8 {
            return Err(Error::Window(format!("eigenvalue {v} within 1e-8 of the window [{lo}, {hi}]")));
        }
    }
    let mut values = Vec::new();
    let mut vectors = Vec::new();
    for (v, x) in p.values.iter().zip(p.vectors) {
        if *v >= lo && *v <= hi {
            values.push(*v);
            vectors.push(x);
        }
    }
    Ok(SpectralProjector { degree_k: op.degree_k, window: (lo, hi), values, vectors, sqrt_star: op.sqrt_star.clone() })
}

/// Projector onto the eigenspaces whose resonance −λ lies in [z − ε, z + ε].
pub fn spectral_projector_pair(op: &WittenOperator, z: f64, eps: f64, opts: &EigenOptions) -> Result<SpectralProjector> {
    projector_for_eigenvalues(op, -z - eps, -z + eps, opts)
}

/// max |D_{k+1} D_k| relative to the largest product of entry magnitudes.
pub fn complex_defect(dec: &DecComplex, hbar: f64) -> Result<f64> {
    let d0 = twisted_differential(dec, hbar, 0)?;
    let d1 = twisted_differential(dec, hbar, 1)?;
    Ok(d1.matmul(&d0).max_abs() / (d0.max_abs() * d1.max_abs()))
}

/// ‖B_k Ŵ_k − Ŵ_{k+1} B_k‖_max together with the scale ‖B_k‖∞·max(‖Ŵ_k‖∞, ‖Ŵ_{k+1}‖∞).
pub fn intertwining_defect(dec: &DecComplex, hbar: f64, k: usize) -> Result<(f64, f64)> {
    let wk = witten_matrix(dec, hbar, k)?;
    let wk1 = witten_matrix(dec, hbar, k + 1)?;
    let b = wk.b_out.as_ref().ok_or_else(|| Error::Domain("no differential out of the top degree".into()))?;
    let lhs = b.matmul(&wk.matrix);
    let rhs = wk1.matrix.matmul(b);
    let defect = lhs.lin_comb(1.0, &rhs, -1.0).max_abs();
    let scale = b.norm_inf() * wk.matrix.norm_inf().max(wk1.matrix.norm_inf());
    Ok((defect, scale))
}

#[derive(Clone, Debug, Serialize)]
pub struct SusyReport {
    pub nonzero_counts: [usize; 3],
    pub max_relative_deviation: f64,
}

/// Compares the nonzero spectrum of Ŵ_1 with the union of those of Ŵ_0 and
/// Ŵ_2 (dense solves).
pub fn susy_pairing(dec: &DecComplex, hbar: f64) -> Result<SusyReport> {
    let mut nz: Vec<Vec<f64>> = Vec::new();
    for k in 0..3 {
        let w = witten_matrix(dec, hbar, k)?;
        let thr = 1e-10 * w.matrix.norm_inf();
        nz.push(dense_eigenvalues(&w.matrix)?.into_iter().filter(|&v| v > thr).collect());
    }
    let mut union: Vec<f64> = nz[0].iter().chain(&nz[2]).cloned().collect();
    union.sort_by(f64::total_cmp);
    let counts = [nz[0].len(), nz[1].len(), nz[2].len()];
    if union.len() != nz[1].len() {
        return Ok(SusyReport { nonzero_counts: counts, max_relative_deviation: f64::INFINITY });
    }
    let dev = union.iter().zip(&nz[1]).map(|(a, b)| (a - b).abs() / a.abs().max(b.abs())).fold(0.0, f64::max);
    Ok(SusyReport { nonzero_counts: counts, max_relative_deviation: dev })
}

/// Relative ⋆-norm residual of E W E^{-1} u against the continuum operator
/// applied to u, on one mesh. `target` must return ∇f·∇u − (ħ/2)∇²u.
pub fn conjugation_residual(
    mesh: &TriMesh,
    model: &MorseModel,
    hbar: f64,
    u: &dyn Fn(P3) -> f64,
    target: &dyn Fn(P3) -> f64,
) -> Result<f64> {
    check_hbar(hbar)?;
    let dec = build_dec(mesh, model)?;
    let uv: Vec<f64> = mesh.vertices.iter().map(|&p| u(p)).collect();
    let du = dec.d0.matvec(&uv);
    let mut lhs = vec![0.0; mesh.n_vertices()];
    for e in 0..mesh.n_edges() {
        for (v, s) in dec.d0.row(e) {
            let x = 2.0 * (dec.f_vertex[v] - dec.f_edge[e]) / hbar;
            if x.abs() > OVERFLOW_EXPONENT {
                return Err(Error::HbarTooSmall { ratio: x.abs() });
            }
            lhs[v] += s * dec.star1[e] * x.exp() * du[e];
        }
    }
    let mut diff = vec![0.0; lhs.len()];
    for v in 0..lhs.len() {
        lhs[v] *= 0.5 * hbar / dec.star0[v];
        diff[v] = lhs[v] - target(mesh.vertices[v]);
    }
    Ok(dec.norm(0, &diff) / dec.norm(0, &uv))
}

pub fn conjugation_consistency(
    model: &MorseModel,
    hbar: f64,
    levels: &[u32],
    u: &dyn Fn(P3) -> f64,
    target: &dyn Fn(P3) -> f64,
) -> Result<Vec<f64>> {
    levels
        .iter()
        .map(|&l| {
            let mesh = crate::geometry::build_mesh(model, l)?;
            conjugation_residual(&mesh, model, hbar, u, target)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_mesh;
    use crate::geometry::field::FieldExpr;
    use std::f64::consts::PI;

    fn torus() -> MorseModel {
        MorseModel::torus(FieldExpr::torus_cosine(1.0, [0.0, 0.0]))
    }

    #[test]
    fn incidence_complex_is_exact() {
        for (m, l) in [(torus(), 2), (MorseModel::sphere(FieldExpr::sphere_linear([0.0, 0.0, 1.0])), 2)] {
            let mesh = build_mesh(&m, l).unwrap();
            let dec = build_dec(&mesh, &m).unwrap();
            assert_eq!(dec.d1.matmul(&dec.d0).max_abs(), 0.0);
            assert!(dec.star0.iter().chain(&dec.star1).chain(&dec.star2).all(|&s| s > 0.0));
        }
    }

    #[test]
    fn torus_weights_by_edge_direction() {
        let m = torus();
        let mesh = build_mesh(&m, 2).unwrap();
        let dec = build_dec(&mesh, &m).unwrap();
        for e in 0..mesh.n_edges() {
            let v = mesh.edge_vector(e);
            let expect = if v[1].abs() < 1e-12 { 0.75 } else { 0.5 };
            assert!((dec.star1[e] - expect).abs() < 1e-12, "{e}: {}", dec.star1[e]);
        }
        let h = 1.0 / mesh.grid_n as f64;
        assert!(dec.star0.iter().all(|&a| (a - h * h).abs() < 1e-15));
    }

    #[test]
    fn constant_function_gives_plain_differential() {
        let m = MorseModel::torus(FieldExpr::constant(0.3));
        let mesh = build_mesh(&m, 1).unwrap();
        let dec = build_dec(&mesh, &m).unwrap();
        assert_eq!(twisted_differential(&dec, 0.2, 0).unwrap(), dec.d0);
        assert_eq!(twisted_differential(&dec, 0.2, 1).unwrap(), dec.d1);
    }

    #[test]
    fn entries_tend_to_signs_for_large_hbar() {
        let m = torus();
        let mesh = build_mesh(&m, 1).unwrap();
        let dec = build_dec(&mesh, &m).unwrap();
        let d = twisted_differential(&dec, 1e8, 0).unwrap();
        assert!(d.lin_comb(1.0, &dec.d0, -1.0).max_abs() < 1e-9);
    }

    #[test]
    fn entry_audit_near_minimum() {
        let m = torus();
        let mesh = build_mesh(&m, 2).unwrap();
        let dec = build_dec(&mesh, &m).unwrap();
        let d = twisted_differential(&dec, 0.2, 0).unwrap();
        let vmin = mesh.vertices.iter().position(|p| (p[0] - 0.5).abs() < 1e-12 && (p[1] - 0.5).abs() < 1e-12).unwrap();
        let mut seen = 0;
        for (e, &[a, b]) in mesh.edges.iter().enumerate() {
            if a != vmin && b != vmin {
                continue;
            }
            let other = if a == vmin { b } else { a };
            let fe = 0.5 * (m.value(mesh.vertices[vmin]) + m.value(mesh.vertices[other]));
            for v in [vmin, other] {
                let expect = ((m.value(mesh.vertices[v]) - fe) / 0.2).exp();
                assert!((d.get(e, v).abs() - expect).abs() < 1e-15);
            }
            seen += 1;
        }
        assert_eq!(seen, 6);
    }

    #[test]
    fn overflow_guard() {
        let m = torus();
        let mesh = build_mesh(&m, 1).unwrap();
        let dec = build_dec(&mesh, &m).unwrap();
        assert!(matches!(twisted_differential(&dec, 1e-6, 0), Err(Error::HbarTooSmall { .. })));
        assert!(matches!(twisted_differential(&dec, 0.0, 0), Err(Error::Domain(_))));
    }

    #[test]
    fn witten_matrix_is_symmetric_psd_and_constant_case_is_hodge() {
        let m = torus();
        let mesh = build_mesh(&m, 2).unwrap();
        let dec = build_dec(&mesh, &m).unwrap();
        for k in 0..3 {
            let w = witten_matrix(&dec, 0.3, k).unwrap();
            assert!(w.matrix.asymmetry() <= 1e-14 * w.matrix.max_abs());
            let ev = dense_eigenvalues(&w.matrix).unwrap();
            assert!(ev[0] >= -1e-12 * w.matrix.norm_inf());
        }
        let c = MorseModel::torus(FieldExpr::constant(0.0));
        let dc = build_dec(&mesh, &c).unwrap();
        let w = witten_matrix(&dc, 0.4, 0).unwrap();
        let s = dc.sqrt_star(0);
        let lap = dc.d0.transpose().matmul(&Csr::diagonal(&dc.star1)).matmul(&dc.d0);
        let inv: Vec<f64> = s.iter().map(|x| 1.0 / x).collect();
        let expect = lap.scale_rows_cols(&inv, &inv).scale(0.2);
        assert!(w.matrix.lin_comb(1.0, &expect, -1.0).max_abs() < 1e-12 * expect.max_abs());
    }

    #[test]
    fn kernels_match_betti_on_coarse_meshes() {
        let opts = EigenOptions::default();
        for (m, betti) in [
            (MorseModel::sphere(FieldExpr::sphere_linear([0.0, 0.0, 1.0])), [1, 0, 1]),
            (torus(), [1, 2, 1]),
        ] {
            let mesh = build_mesh(&m, 2).unwrap();
            let dec = build_dec(&mesh, &m).unwrap();
            for k in 0..3 {
                let w = witten_matrix(&dec, 0.3, k).unwrap();
                assert_eq!(kernel_dimension(&w, &opts).unwrap(), betti[k]);
            }
        }
    }

    #[test]
    fn projector_windows() {
        let m = MorseModel::sphere(FieldExpr::sphere_linear([0.0, 0.0, 1.0]));
        let mesh = build_mesh(&m, 2).unwrap();
        let dec = build_dec(&mesh, &m).unwrap();
        let w = witten_matrix(&dec, 0.3, 0).unwrap();
        let opts = EigenOptions::default();
        let p0 = spectral_projector_pair(&w, 0.0, 0.5, &opts).unwrap();
        assert_eq!(p0.rank(), 1);
        let p1 = spectral_projector_pair(&w, -1.0, 0.4, &opts).unwrap();
        let x: Vec<f64> = (0..w.dim()).map(|i| ((i * 7919) % 13) as f64 - 6.0).collect();
        let a = p0.apply_scaled(&p1.apply_scaled(&x));
        assert!(a.iter().all(|v| v.abs() < 1e-10));
        let y = p1.apply_scaled(&x);
        let yy = p1.apply_scaled(&y);
        assert!(y.iter().zip(&yy).all(|(a, b)| (a - b).abs() < 1e-10));
    }

    #[test]
    fn conjugation_constant_function_is_laplacian_consistency() {
        let m = MorseModel::torus(FieldExpr::constant(0.0));
        let u = |p: P3| (2.0 * PI * p[0]).cos();
        let t = |p: P3| 0.5 * 0.3 * 4.0 * PI * PI * (2.0 * PI * p[0]).cos();
        let r = conjugation_consistency(&m, 0.3, &[2, 3], &u, &t).unwrap();
        assert!(r[1] < r[0]);
    }
}
