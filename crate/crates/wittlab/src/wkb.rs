//! WKB states, the tunneling identity and triple products.
//!
//! A WKB state is the low-cluster spectral projection of the exponentially
//! weighted unstable cochain e^{(f(a) − f)/ħ}·u_a. Because the twisted
//! differential commutes with the spectral projectors and satisfies
//! D e^{−f/ħ} = e^{−f/ħ} d, the tunneling coefficients of the states are the
//! integers of the flow-line complex.

use crate::critical::{check_smale_transversality, find_critical_points, CriticalPoint};
use crate::error::{Error, Result};
use crate::flow::{trace_to_limit, Direction, LimitOptions, OdeOptions};
use crate::geometry::field::FieldExpr;
use crate::geometry::vec3::{self, P3};
use crate::geometry::{MorseModel, TriMesh};
use crate::linalg::{Csr, EigenOptions};
use crate::morse::crossing::SegmentIndex;
use crate::morse::{boundary_matrices, joined_curve, saddle_branch, CochainRealization, MorseComplex, Orientations};
use crate::resonance::spectral_gap;
use crate::whitney::{cup_product_integral, wedge_integral};
use crate::witten::{projector_for_eigenvalues, scaled_differential, twisted_differential, witten_matrix, DecComplex, SpectralProjector};
use faer::linalg::solvers::Solve;
use faer::{Mat, Side};
use serde::Serialize;

/// Spectral projectors onto the low clusters of one function.
pub struct LowCluster {
    pub hbar: f64,
    pub epsilon0: [f64; 3],
    pub projectors: Vec<SpectralProjector>,
    /// Twisted differentials D_0, D_1 in cochain coordinates.
    pub differentials: Vec<Csr>,
    /// Bounds on the ⋆-operator norms of D_0, D_1.
    pub differential_norms: [f64; 2],
    pub under_resolved: bool,
}

/// Default window: half the distance to the first nonzero resonance of
/// each degree.
pub fn default_epsilon0(crits: &[CriticalPoint]) -> Result<[f64; 3]> {
    let mut out = [0.0; 3];
    for (k, o) in out.iter_mut().enumerate() {
        *o = 0.5 * spectral_gap(crits, k)?.abs();
    }
    Ok(out)
}

pub fn low_cluster(
    dec: &DecComplex,
    crits: &[CriticalPoint],
    hbar: f64,
    epsilon0: [f64; 3],
    opts: &EigenOptions,
) -> Result<LowCluster> {
    let counts = crate::critical::critical_counts(crits);
    let mut projectors = Vec::new();
    let mut under_resolved = false;
    for k in 0..3 {
        let op = witten_matrix(dec, hbar, k)?;
        under_resolved |= op.under_resolved;
        let p = projector_for_eigenvalues(&op, -1.0, epsilon0[k], opts)?;
        if p.rank() != counts[k] {
            return Err(Error::Window(format!(
                "degree {k}: {} eigenvalues below {} but {} critical points at ħ = {hbar}",
                p.rank(),
                epsilon0[k],
                counts[k]
            )));
        }
        projectors.push(p);
    }
    let differentials = vec![twisted_differential(dec, hbar, 0)?, twisted_differential(dec, hbar, 1)?];
    let mut differential_norms = [0.0; 2];
    for (k, n) in differential_norms.iter_mut().enumerate() {
        let b = scaled_differential(dec, hbar, k)?;
        *n = (b.norm_inf() * b.transpose().norm_inf()).sqrt();
    }
    Ok(LowCluster { hbar, epsilon0, projectors, differentials, differential_norms, under_resolved })
}

#[derive(Clone, Debug, Serialize)]
pub struct WkbState {
    pub crit_id: usize,
    pub degree: usize,
    pub hbar: f64,
    pub epsilon0: f64,
    pub cochain: Vec<f64>,
    /// ⋆-norm of the weighted cochain before projection.
    pub raw_norm: f64,
    pub norm: f64,
    /// ‖Π U − U‖ / ‖U‖.
    pub projector_residual: f64,
}

pub fn wkb_state(
    dec: &DecComplex,
    cluster: &LowCluster,
    real: &CochainRealization,
    o: &Orientations,
    crits: &[CriticalPoint],
    a: usize,
) -> Result<WkbState> {
    let k = crits[a].index_r;
    let fa = crits[a].f_value;
    let u = real.unstable(a, o)?;
    let weighted: Vec<f64> =
        u.iter().zip(dec.f_cells(k)).map(|(&x, &f)| if x == 0.0 { 0.0 } else { x * ((fa - f) / cluster.hbar).exp() }).collect();
    let p = &cluster.projectors[k];
    let cochain = p.apply(&weighted);
    let again = p.apply(&cochain);
    let norm = dec.norm(k, &cochain);
    let diff: Vec<f64> = again.iter().zip(&cochain).map(|(x, y)| x - y).collect();
    Ok(WkbState {
        crit_id: a,
        degree: k,
        hbar: cluster.hbar,
        epsilon0: cluster.epsilon0[k],
        raw_norm: dec.norm(k, &weighted),
        projector_residual: if norm > 0.0 { dec.norm(k, &diff) / norm } else { 0.0 },
        norm,
        cochain,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct TunnelingReport {
    pub a: usize,
    pub targets: Vec<usize>,
    pub residual: f64,
    /// Part of D U_a outside the next low cluster, relative to ‖D‖·‖U_a‖.
    pub leakage: f64,
    pub n_hat: Vec<f64>,
    pub n_rounded: Vec<i64>,
    pub n_reference: Vec<i64>,
    pub gram_condition: f64,
}

/// Least-squares coefficients of D U_a against e^{(f(a) − f(b))/ħ} U_b.
pub fn tunneling_check(
    dec: &DecComplex,
    cluster: &LowCluster,
    crits: &[CriticalPoint],
    complex: &MorseComplex,
    states: &[WkbState],
    a: usize,
) -> Result<TunnelingReport> {
    let sa = states.iter().find(|s| s.crit_id == a).ok_or_else(|| Error::Domain(format!("no state for {a}")))?;
    let k = sa.degree;
    if k >= 2 {
        return Err(Error::Domain("tunneling needs a state of degree 0 or 1".into()));
    }
    let du = cluster.differentials[k].matvec(&sa.cochain);
    let targets: Vec<usize> = complex.by_index[k + 1].clone();
    let basis: Vec<Vec<f64>> = targets
        .iter()
        .map(|&b| {
            let sb = states.iter().find(|s| s.crit_id == b).ok_or_else(|| Error::Domain(format!("no state for {b}")))?;
            let w = ((crits[a].f_value - crits[b].f_value) / cluster.hbar).exp();
            Ok(sb.cochain.iter().map(|x| w * x).collect())
        })
        .collect::<Result<_>>()?;
    let m = basis.len();
    let projected = cluster.projectors[k + 1].apply(&du);
    let out: Vec<f64> = du.iter().zip(&projected).map(|(x, y)| x - y).collect();
    let leakage = dec.norm(k + 1, &out) / (cluster.differential_norms[k] * sa.norm);
    let (n_hat, gram_condition) = if m == 0 {
        (Vec::new(), 1.0)
    } else {
        let g = Mat::<f64>::from_fn(m, m, |i, j| dec.inner(k + 1, &basis[i], &basis[j]));
        let ev = g.self_adjoint_eigenvalues(Side::Lower).map_err(|e| Error::Numerical(format!("{e:?}")))?;
        let cond = ev[m - 1] / ev[0].max(0.0);
        if !(cond < 1e12) {
            return Err(Error::Conditioning(format!("Gram matrix of target states has condition {cond:.3e}: {g:?}")));
        }
        let mut rhs = Mat::<f64>::from_fn(m, 1, |i, _| dec.inner(k + 1, &basis[i], &du));
        let llt = g.llt(Side::Lower).map_err(|e| Error::Conditioning(format!("{e:?}")))?;
        llt.solve_in_place(rhs.as_mut());
        ((0..m).map(|i| rhs[(i, 0)]).collect::<Vec<f64>>(), cond)
    };
    let mut resid = du.clone();
    for (c, v) in n_hat.iter().zip(&basis) {
        for (r, x) in resid.iter_mut().zip(v) {
            *r -= c * x;
        }
    }
    let residual = dec.norm(k + 1, &resid) / sa.norm;
    let n_reference: Vec<i64> = targets.iter().map(|&b| complex.coefficient(a, b)).collect();
    Ok(TunnelingReport {
        a,
        residual,
        leakage,
        n_rounded: n_hat.iter().map(|x| x.round() as i64).collect(),
        n_hat,
        n_reference,
        targets,
        gram_condition,
    })
}

/// One of the three difference functions of a triple problem.
pub struct PairFunction {
    pub model: MorseModel,
    pub crits: Vec<CriticalPoint>,
    pub orientations: Orientations,
    pub complex: MorseComplex,
}

impl PairFunction {
    pub fn new(model: MorseModel, seed_density: usize, o: Option<Orientations>) -> Result<PairFunction> {
        let crits = find_critical_points(&model, seed_density)?;
        let rep = check_smale_transversality(&model, &crits, 1e-4)?;
        if !rep.ok {
            return Err(Error::Transversality(format!("{:?}", rep.suspects)));
        }
        let orientations = o.unwrap_or_else(|| Orientations::canonical(crits.len()));
        let complex = boundary_matrices(&model, &crits, &orientations)?;
        Ok(PairFunction { model, crits, orientations, complex })
    }
}

/// Differences f12 = f2 − f1, f23 = f3 − f2, f31 = f1 − f3 of three
/// functions on one surface with one metric.
pub struct TripleProblem {
    pub pairs: [PairFunction; 3],
}

impl TripleProblem {
    pub fn from_functions(base: &MorseModel, f: [FieldExpr; 3], seed_density: usize) -> Result<TripleProblem> {
        let diff = |a: &FieldExpr, b: &FieldExpr| -> Result<FieldExpr> {
            a.plus(&b.scaled(-1.0)).ok_or_else(|| Error::Config("field families do not combine".into()))
        };
        let f12 = diff(&f[1], &f[0])?;
        let f23 = diff(&f[2], &f[1])?;
        let f31 = diff(&f[0], &f[2])?;
        let total = f12.plus(&f23).and_then(|s| s.plus(&f31)).unwrap();
        let probe: [P3; 3] = if base.is_sphere() {
            [[0.6, 0.0, 0.8], [0.0, -0.28, 0.96], [-0.48, 0.6, 0.64]]
        } else {
            [[0.13, 0.71, 0.0], [0.52, 0.05, 0.0], [0.91, 0.38, 0.0]]
        };
        for p in probe {
            if total.value(p).abs() > 1e-12 {
                return Err(Error::Config("pair functions do not sum to zero".into()));
            }
        }
        let mk = |g: FieldExpr| PairFunction::new(base.with_field(g), seed_density, None);
        Ok(TripleProblem { pairs: [mk(f12)?, mk(f23)?, mk(f31)?] })
    }

    pub fn degrees(&self, ids: [usize; 3]) -> [usize; 3] {
        [0, 1, 2].map(|i| self.pairs[i].crits[ids[i]].index_r)
    }

    /// Σ f_ij(a_ij), the exponent of the scaling prefactor.
    pub fn critical_value_sum(&self, ids: [usize; 3]) -> f64 {
        (0..3).map(|i| self.pairs[i].crits[ids[i]].f_value).sum()
    }
}

fn sink_class(pf: &PairFunction, p: P3) -> Result<usize> {
    let tr = trace_to_limit(
        &pf.model,
        &pf.crits,
        p,
        Direction::Downhill,
        &OdeOptions::default(),
        &LimitOptions::classification(),
        false,
    )?;
    if pf.crits[tr.limit].index_r != 0 {
        return Err(Error::Transversality(format!("point {p:?} lies on a separatrix of a pair function")));
    }
    Ok(tr.limit)
}

fn oriented_unstable_curve(pf: &PairFunction, id: usize) -> Result<Vec<P3>> {
    let s = &pf.crits[id];
    let plus = saddle_branch(&pf.model, &pf.crits, s, s.unstable_dir(), 1, Direction::Uphill)?;
    let minus = saddle_branch(&pf.model, &pf.crits, s, s.unstable_dir(), -1, Direction::Uphill)?;
    Ok(joined_curve(&minus, &plus, pf.orientations.signs[id]))
}

/// Minimum |sin| of the crossing angle accepted as transversal.
pub const CROSSING_ANGLE_TOL: f64 = 1e-3;

/// Signed count of configurations where the three unstable manifolds meet.
/// Degrees must sum to two; 0-forms contribute basin membership, 1-forms
/// oriented separatrix crossings, 2-forms the maximum itself.
pub fn triple_intersection_count(problem: &TripleProblem, ids: [usize; 3]) -> Result<i64> {
    let deg = problem.degrees(ids);
    if deg.iter().sum::<usize>() != 2 {
        return Err(Error::Domain(format!("degrees {deg:?} do not sum to the surface dimension")));
    }
    let eps = |i: usize| problem.pairs[i].orientations.signs[ids[i]] as i64;
    let kind = problem.pairs[0].model.kind;
    let ones: Vec<usize> = (0..3).filter(|&i| deg[i] == 1).collect();
    if ones.len() == 2 {
        let z = (0..3).find(|&i| deg[i] == 0).unwrap();
        let (i, j) = (ones[0], ones[1]);
        let ci = oriented_unstable_curve(&problem.pairs[i], ids[i])?;
        let cj = oriented_unstable_curve(&problem.pairs[j], ids[j])?;
        let idx = SegmentIndex::for_polyline(kind, &cj, 1.0 / 64.0);
        let mut count = 0i64;
        for (k, x) in idx.polyline_crossings(&ci) {
            let [a, b] = idx.segment(x.id);
            let ti = vec3::normalize(vec3::sub(ci[k + 1], ci[k]));
            let tj = vec3::normalize(vec3::sub(b, a));
            let sin = problem.pairs[0].model.tangent_det(x.point, ti, tj);
            if sin.abs() < CROSSING_ANGLE_TOL {
                return Err(Error::Transversality(format!("near-tangential crossing at {:?}", x.point)));
            }
            if sink_class(&problem.pairs[z], x.point)? == ids[z] {
                // query sign +1 means ci passes from the right of cj to its left
                count -= x.sign as i64;
            }
        }
        Ok(eps(z) * count)
    } else {
        let m = (0..3).find(|&i| deg[i] == 2).unwrap();
        let p = problem.pairs[m].crits[ids[m]].position;
        let mut v = eps(m);
        for z in (0..3).filter(|&i| i != m) {
            if sink_class(&problem.pairs[z], p)? != ids[z] {
                return Ok(0);
            }
            v *= eps(z);
        }
        Ok(v)
    }
}

/// Discrete cup product of the realized unstable cochains; agrees with the
/// geometric count once the mesh resolves the configuration.
pub fn triple_cup_count(reals: [&CochainRealization; 3], problem: &TripleProblem, ids: [usize; 3]) -> Result<f64> {
    let deg = problem.degrees(ids);
    let c: Vec<Vec<f64>> =
        (0..3).map(|i| reals[i].unstable(ids[i], &problem.pairs[i].orientations)).collect::<Result<_>>()?;
    Ok(cup_product_integral(reals[0].mesh(), [(deg[0], &c[0]), (deg[1], &c[1]), (deg[2], &c[2])]))
}

#[derive(Clone, Debug, Serialize)]
pub struct WittenTriple {
    pub hbar: f64,
    pub raw_value: f64,
    pub scaled_value: f64,
    pub prefactor_exponent: f64,
    pub under_resolved: bool,
}

/// e^{−Σ f_ij(a_ij)/ħ} ∫ W(U_12) ∧ W(U_23) ∧ W(U_31) with Whitney
/// interpolation and the degree-4 rule.
pub fn triple_product_witten(
    problem: &TripleProblem,
    mesh: &TriMesh,
    ids: [usize; 3],
    hbar: f64,
    epsilon0: Option<[[f64; 3]; 3]>,
    opts: &EigenOptions,
) -> Result<WittenTriple> {
    let deg = problem.degrees(ids);
    if deg.iter().sum::<usize>() != 2 {
        return Err(Error::Domain(format!("degrees {deg:?} do not sum to the surface dimension")));
    }
    let base = crate::witten::build_dec(mesh, &problem.pairs[0].model)?;
    let mut states = Vec::new();
    let mut under_resolved = false;
    for i in 0..3 {
        let pf = &problem.pairs[i];
        let dec = base.with_function(mesh, &pf.model);
        let eps = match epsilon0 {
            Some(e) => e[i],
            None => default_epsilon0(&pf.crits)?,
        };
        let cluster = low_cluster(&dec, &pf.crits, hbar, eps, opts)?;
        under_resolved |= cluster.under_resolved;
        let real = CochainRealization::new(&pf.model, mesh, &pf.crits)?;
        states.push(wkb_state(&dec, &cluster, &real, &pf.orientations, &pf.crits, ids[i])?);
    }
    let raw_value =
        wedge_integral(mesh, &[(deg[0], &states[0].cochain), (deg[1], &states[1].cochain), (deg[2], &states[2].cochain)]);
    let prefactor_exponent = -problem.critical_value_sum(ids) / hbar;
    Ok(WittenTriple { hbar, raw_value, scaled_value: prefactor_exponent.exp() * raw_value, prefactor_exponent, under_resolved })
}

#[derive(Clone, Debug, Serialize)]
pub struct CupIdentityRow {
    /// Base triple with degrees summing to one.
    pub base: [usize; 3],
    /// The three terms of d applied in each slot.
    pub terms: [i64; 3],
    pub holds: bool,
}

/// Checks Σ_b n(a12,b) T(b,a23,a31) + (−1)^{|a12|} Σ_b n(a23,b) T(a12,b,a31)
/// + (−1)^{|a12|+|a23|} Σ_b n(a31,b) T(a12,a23,b) = 0 over all base triples,
/// with T the count returned by `count`.
pub fn cup_chain_map_check<F>(problem: &TripleProblem, mut count: F) -> Result<Vec<CupIdentityRow>>
where
    F: FnMut([usize; 3]) -> Result<i64>,
{
    let n = [0, 1, 2].map(|i| problem.pairs[i].crits.len());
    let mut rows = Vec::new();
    for a in 0..n[0] {
        for b in 0..n[1] {
            for c in 0..n[2] {
                let base = [a, b, c];
                let deg = problem.degrees(base);
                if deg.iter().sum::<usize>() != 1 {
                    continue;
                }
                let mut terms = [0i64; 3];
                let mut sign = 1i64;
                for slot in 0..3 {
                    let pf = &problem.pairs[slot];
                    for &t in &pf.complex.by_index[deg[slot] + 1] {
                        let nab = pf.complex.coefficient(base[slot], t);
                        if nab == 0 {
                            continue;
                        }
                        let mut ids = base;
                        ids[slot] = t;
                        terms[slot] += sign * nab * count(ids)?;
                    }
                    if deg[slot] % 2 == 1 {
                        sign = -sign;
                    }
                }
                rows.push(CupIdentityRow { base, terms, holds: terms.iter().sum::<i64>() == 0 });
            }
        }
    }
    Ok(rows)
}

/// Torus triple: f1 = 0, f2 = cosine, f3 = cosine shifted by (⅓, ⅓).
pub fn torus_triple() -> Result<TripleProblem> {
    let base = MorseModel::torus(FieldExpr::torus_cosine(1.0, [0.0, 0.0]));
    TripleProblem::from_functions(
        &base,
        [FieldExpr::constant(0.0), FieldExpr::torus_cosine(1.0, [0.0, 0.0]), FieldExpr::torus_cosine(1.0, [1.0 / 3.0, 1.0 / 3.0])],
        24,
    )
}

/// (minimum of f12, saddle of f23 with the horizontal separatrix, saddle of
/// f31 with the vertical separatrix) in the torus triple.
pub fn torus_triple_ids(problem: &TripleProblem) -> [usize; 3] {
    let pick = |i: usize, want: fn(&CriticalPoint) -> bool| problem.pairs[i].crits.iter().find(|c| want(c)).unwrap().id;
    [
        pick(0, |c| c.index_r == 0),
        pick(1, |c| c.index_r == 1 && c.unstable_dir()[0].abs() > 0.9),
        pick(2, |c| c.index_r == 1 && c.unstable_dir()[1].abs() > 0.9),
    ]
}

/// Sphere triple: f1 = 0, f2 = bumped height, f3 a generic quadratic. The
/// pairwise differences have nonzero differentials, unlike the torus case.
pub fn sphere_triple() -> Result<TripleProblem> {
    let base = MorseModel::sphere(FieldExpr::sphere_bumped(1.0));
    let f3 = FieldExpr::Quadratic {
        c: 0.0,
        b: [0.2, 0.25, -0.3],
        q: [[0.8, 0.1, 0.3], [0.1, -1.2, 0.0], [0.3, 0.0, 0.2]],
    };
    TripleProblem::from_functions(&base, [FieldExpr::sphere_linear([0.0; 3]), FieldExpr::sphere_bumped(1.0), f3], 32)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_mesh;
    use crate::witten::build_dec;

    fn states_for(model: &MorseModel, level: u32, hbar: f64) -> (DecComplex, LowCluster, Vec<CriticalPoint>, MorseComplex, Vec<WkbState>) {
        let crits = find_critical_points(model, 32).unwrap();
        let mesh = build_mesh(model, level).unwrap();
        let dec = build_dec(&mesh, model).unwrap();
        let eps = default_epsilon0(&crits).unwrap();
        let cl = low_cluster(&dec, &crits, hbar, eps, &EigenOptions::default()).unwrap();
        let o = Orientations::random(crits.len(), 3);
        let mc = boundary_matrices(model, &crits, &o).unwrap();
        let real = CochainRealization::new(model, &mesh, &crits).unwrap();
        let st = crits.iter().map(|c| wkb_state(&dec, &cl, &real, &o, &crits, c.id).unwrap()).collect();
        (dec, cl, crits, mc, st)
    }

    #[test]
    fn sphere_minimum_state_has_no_leakage() {
        let m = MorseModel::sphere(FieldExpr::sphere_linear([0.0, 0.0, 1.0]));
        let (dec, cl, crits, mc, st) = states_for(&m, 2, 0.3);
        assert!(st[0].projector_residual < 1e-10);
        assert!(st[0].norm > 0.0);
        let r = tunneling_check(&dec, &cl, &crits, &mc, &st, 0).unwrap();
        assert!(r.targets.is_empty());
        assert!(r.residual <= 1e-8, "{}", r.residual);
    }

    #[test]
    fn bumped_sphere_tunneling_is_integral() {
        let m = MorseModel::sphere(FieldExpr::sphere_bumped(1.0));
        let (dec, cl, crits, mc, st) = states_for(&m, 2, 0.3);
        for a in [0usize, 1, 2] {
            let r = tunneling_check(&dec, &cl, &crits, &mc, &st, a).unwrap();
            assert_eq!(r.n_rounded, r.n_reference);
            for (x, n) in r.n_hat.iter().zip(&r.n_reference) {
                assert!((x - *n as f64).abs() < 1e-6, "{r:?}");
            }
            assert!(r.leakage < 1e-8, "{r:?}");
        }
    }

    #[test]
    fn torus_minimum_state_is_a_kernel_vector() {
        let m = MorseModel::torus(FieldExpr::torus_cosine(1.0, [0.0, 0.0]));
        let crits = find_critical_points(&m, 16).unwrap();
        let mesh = build_mesh(&m, 2).unwrap();
        let dec = build_dec(&mesh, &m).unwrap();
        let cl = low_cluster(&dec, &crits, 0.2, default_epsilon0(&crits).unwrap(), &EigenOptions::default()).unwrap();
        let real = CochainRealization::new(&m, &mesh, &crits).unwrap();
        let o = Orientations::canonical(crits.len());
        let s = wkb_state(&dec, &cl, &real, &o, &crits, 0).unwrap();
        // kernel of D_0 is spanned by e^{-f/ħ}, which is the weighted basin indicator
        assert!((s.norm - s.raw_norm).abs() < 1e-9 * s.raw_norm);
    }

    #[test]
    fn torus_triple_counts() {
        let p = torus_triple().unwrap();
        let ids = torus_triple_ids(&p);
        assert_eq!(p.degrees(ids), [0, 1, 1]);
        let t = triple_intersection_count(&p, ids).unwrap();
        assert_eq!(t.abs(), 1);
        // parallel separatrices never meet
        let mut other = ids;
        other[2] = p.pairs[2].crits.iter().find(|c| c.index_r == 1 && c.id != ids[2]).unwrap().id;
        assert_eq!(triple_intersection_count(&p, other).unwrap(), 0);
        // degree sum must be two
        let mut bad = ids;
        bad[1] = p.pairs[1].crits.iter().find(|c| c.index_r == 0).unwrap().id;
        assert!(matches!(triple_intersection_count(&p, bad), Err(Error::Domain(_))));
        // discrete cup product agrees at two resolutions
        for level in [2, 3] {
            let mesh = build_mesh(&p.pairs[0].model, level).unwrap();
            let reals: Vec<CochainRealization> =
                p.pairs.iter().map(|pf| CochainRealization::new(&pf.model, &mesh, &pf.crits).unwrap()).collect();
            let c = triple_cup_count([&reals[0], &reals[1], &reals[2]], &p, ids).unwrap();
            assert_eq!(c, t as f64);
        }
        let rows = cup_chain_map_check(&p, |ids| triple_intersection_count(&p, ids)).unwrap();
        assert!(rows.iter().all(|r| r.terms == [0, 0, 0]));
    }

    #[test]
    fn sphere_triple_cup_identity() {
        let p = sphere_triple().unwrap();
        let rows = cup_chain_map_check(&p, |ids| triple_intersection_count(&p, ids)).unwrap();
        assert!(rows.iter().all(|r| r.holds));
        assert!(rows.iter().any(|r| r.terms != [0, 0, 0]));
        let mesh = build_mesh(&p.pairs[0].model, 3).unwrap();
        let reals: Vec<CochainRealization> =
            p.pairs.iter().map(|pf| CochainRealization::new(&pf.model, &mesh, &pf.crits).unwrap()).collect();
        let n = [0, 1, 2].map(|i| p.pairs[i].crits.len());
        for a in 0..n[0] {
            for b in 0..n[1] {
                for c in 0..n[2] {
                    let ids = [a, b, c];
                    if p.degrees(ids).iter().sum::<usize>() != 2 {
                        continue;
                    }
                    let g = triple_intersection_count(&p, ids).unwrap();
                    let d = triple_cup_count([&reals[0], &reals[1], &reals[2]], &p, ids).unwrap();
                    assert_eq!(d, g as f64, "{ids:?}");
                }
            }
        }
    }
}
