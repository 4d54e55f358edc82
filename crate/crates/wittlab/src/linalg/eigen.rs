//! Smallest eigenpairs of sparse symmetric positive semidefinite matrices.
//!
//! Small problems go to a dense symmetric solver. Larger ones use a block
//! Krylov method on the shifted inverse (A + σI)^{-1}, applied through a
//! sparse Cholesky factorization, with full reorthogonalization and
//! Rayleigh–Ritz extraction on A itself.

use super::sparse::{dot, Csr};
use crate::error::{Error, Result};
use faer::linalg::solvers::Solve;
use faer::{Mat, Par, Side};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, Debug)]
pub struct EigenOptions {
    /// Residual tolerance relative to the ∞-norm of the matrix.
    pub tol: f64,
    /// Shift σ; None picks 1e-3·‖A‖∞.
    pub shift: Option<f64>,
    pub block: usize,
    pub max_basis: usize,
    pub max_restarts: usize,
    pub seed: u64,
    pub dense_limit: usize,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions {
            tol: 1e-11,
            shift: None,
            block: 6,
            max_basis: 120,
            max_restarts: 60,
            seed: 0x5eed_0001,
            dense_limit: 3000,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Eigenpairs {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
    pub norm: f64,
    pub dense: bool,
}

fn residual(a: &Csr, v: &[f64], lambda: f64) -> f64 {
    let av = a.matvec(v);
    av.iter().zip(v).map(|(x, y)| (x - lambda * y).powi(2)).sum::<f64>().sqrt()
}

/// All eigenvalues, ascending.
pub fn dense_eigenvalues(a: &Csr) -> Result<Vec<f64>> {
    faer::set_global_parallelism(Par::Seq);
    a.to_dense()
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Numerical(format!("dense eigensolver failed: {e:?}")))
}

fn dense_pairs(a: &Csr, m: usize) -> Result<Eigenpairs> {
    faer::set_global_parallelism(Par::Seq);
    let evd = a
        .to_dense()
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Numerical(format!("dense eigensolver failed: {e:?}")))?;
    let s = evd.S().column_vector();
    let u = evd.U();
    let mut values = Vec::with_capacity(m);
    let mut vectors = Vec::with_capacity(m);
    for j in 0..m {
        values.push(s[j]);
        vectors.push((0..a.n_rows).map(|i| u[(i, j)]).collect::<Vec<f64>>());
    }
    let residuals = values.iter().zip(&vectors).map(|(&l, v)| residual(a, v, l)).collect();
    Ok(Eigenpairs { values, vectors, residuals, norm: a.norm_inf(), dense: true })
}

/// The m smallest eigenpairs, ascending.
pub fn smallest_eigenpairs(a: &Csr, m: usize, opts: &EigenOptions) -> Result<Eigenpairs> {
    let n = a.n_rows;
    if a.n_cols != n {
        return Err(Error::Numerical("eigenproblem matrix is not square".into()));
    }
    if m > n {
        return Err(Error::Numerical(format!("requested {m} eigenpairs of a {n}x{n} matrix")));
    }
    if m == 0 {
        return Ok(Eigenpairs { values: vec![], vectors: vec![], residuals: vec![], norm: a.norm_inf(), dense: n < opts.dense_limit });
    }
    if n < opts.dense_limit {
        dense_pairs(a, m)
    } else {
        krylov(a, m, opts)
    }
}

struct Basis {
    q: Vec<Vec<f64>>,
    aq: Vec<Vec<f64>>,
}

impl Basis {
    /// CGS2 against the basis; returns false on rank loss.
    fn push(&mut self, a: &Csr, mut v: Vec<f64>) -> bool {
        let orig = dot(&v, &v).sqrt();
        if orig == 0.0 {
            return false;
        }
        for _ in 0..2 {
            let coef: Vec<f64> = self.q.iter().map(|q| dot(q, &v)).collect();
            for (q, c) in self.q.iter().zip(coef) {
                for (x, y) in v.iter_mut().zip(q) {
                    *x -= c * y;
                }
            }
        }
        let nv = dot(&v, &v).sqrt();
        if nv < 1e-10 * orig {
            return false;
        }
        v.iter_mut().for_each(|x| *x /= nv);
        self.aq.push(a.matvec(&v));
        self.q.push(v);
        true
    }
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random::<f64>() - 0.5).collect()
}

struct Ritz {
    values: Vec<f64>,
    coeffs: Mat<f64>,
}

fn rayleigh_ritz(b: &Basis) -> Result<Ritz> {
    let k = b.q.len();
    let mut h = Mat::<f64>::zeros(k, k);
    for i in 0..k {
        for j in 0..=i {
            let v = 0.5 * (dot(&b.q[i], &b.aq[j]) + dot(&b.q[j], &b.aq[i]));
            h[(i, j)] = v;
            h[(j, i)] = v;
        }
    }
    let evd = h
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Numerical(format!("Rayleigh-Ritz eigensolve failed: {e:?}")))?;
    let s = evd.S().column_vector();
    Ok(Ritz { values: (0..k).map(|i| s[i]).collect(), coeffs: evd.U().to_owned() })
}

fn combine(cols: &[Vec<f64>], y: &Mat<f64>, j: usize) -> Vec<f64> {
    let n = cols[0].len();
    let mut out = vec![0.0; n];
    for (i, c) in cols.iter().enumerate() {
        let w = y[(i, j)];
        if w != 0.0 {
            for (o, x) in out.iter_mut().zip(c) {
                *o += w * x;
            }
        }
    }
    out
}

fn krylov(a: &Csr, m: usize, opts: &EigenOptions) -> Result<Eigenpairs> {
    faer::set_global_parallelism(Par::Seq);
    let n = a.n_rows;
    let norm = a.norm_inf();
    let sigma = opts.shift.unwrap_or(1e-3 * norm.max(f64::MIN_POSITIVE));
    let shifted = a.lin_comb(1.0, &Csr::identity(n), sigma).to_faer();
    let llt = shifted
        .sp_cholesky(Side::Lower)
        .map_err(|e| Error::Numerical(format!("sparse Cholesky of the shifted operator failed: {e:?}")))?;
    let solve = |block: &[Vec<f64>]| -> Vec<Vec<f64>> {
        let mut rhs = Mat::<f64>::zeros(n, block.len());
        for (j, v) in block.iter().enumerate() {
            for i in 0..n {
                rhs[(i, j)] = v[i];
            }
        }
        llt.solve_in_place(rhs.as_mut());
        (0..block.len()).map(|j| (0..n).map(|i| rhs[(i, j)]).collect()).collect()
    };
    let bsize = opts.block.max(1).max(m.min(opts.block * 2));
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut basis = Basis { q: Vec::new(), aq: Vec::new() };
    let mut last: Vec<Vec<f64>> = Vec::new();
    while last.len() < bsize {
        let v = random_vec(&mut rng, n);
        if basis.push(a, v) {
            last.push(basis.q.last().unwrap().clone());
        }
    }
    let target = opts.tol * norm;
    let mut restarts = 0;
    let mut expansions = 0;
    loop {
        let images = solve(&last);
        last.clear();
        for v in images {
            let mut v = v;
            let mut tries = 0;
            while !basis.push(a, v) {
                tries += 1;
                if tries > 3 {
                    break;
                }
                v = random_vec(&mut rng, n);
            }
            if tries <= 3 {
                last.push(basis.q.last().unwrap().clone());
            }
        }
        expansions += 1;
        let full = basis.q.len() + bsize > opts.max_basis.max(m + 2 * bsize) || basis.q.len() >= n;
        if expansions % 2 == 0 || full || last.is_empty() {
            let rr = rayleigh_ritz(&basis)?;
            let mut res = Vec::with_capacity(m);
            for j in 0..m.min(rr.values.len()) {
                let x = combine(&basis.q, &rr.coeffs, j);
                let ax = combine(&basis.aq, &rr.coeffs, j);
                let r = ax.iter().zip(&x).map(|(p, q)| (p - rr.values[j] * q).powi(2)).sum::<f64>().sqrt();
                res.push(r);
            }
            if res.len() == m && res.iter().all(|&r| r <= target) {
                let vectors: Vec<Vec<f64>> = (0..m).map(|j| combine(&basis.q, &rr.coeffs, j)).collect();
                let values = rr.values[..m].to_vec();
                let residuals = values.iter().zip(&vectors).map(|(&l, v)| residual(a, v, l)).collect();
                return Ok(Eigenpairs { values, vectors, residuals, norm, dense: false });
            }
            if full || last.is_empty() {
                restarts += 1;
                if restarts > opts.max_restarts {
                    return Err(Error::Numerical(format!(
                        "shift-invert eigensolver did not converge: worst residual {:e} > {:e}",
                        res.iter().cloned().fold(0.0, f64::max),
                        target
                    )));
                }
                let keep = (m + bsize).min(rr.values.len());
                let q: Vec<Vec<f64>> = (0..keep).map(|j| combine(&basis.q, &rr.coeffs, j)).collect();
                basis = Basis { q: Vec::new(), aq: Vec::new() };
                for v in q {
                    basis.push(a, v);
                }
                last = basis.q[..bsize.min(basis.q.len())].to_vec();
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path_laplacian(n: usize) -> Csr {
        let mut t = Vec::new();
        for i in 0..n {
            let j = (i + 1) % n;
            t.push((i, i, 1.0));
            t.push((j, j, 1.0));
            t.push((i, j, -1.0));
            t.push((j, i, -1.0));
        }
        Csr::from_triplets(n, n, t)
    }

    #[test]
    fn dense_and_krylov_agree_on_cycle_graph() {
        let n = 400;
        let a = path_laplacian(n);
        let d = smallest_eigenpairs(&a, 5, &EigenOptions::default()).unwrap();
        let k = smallest_eigenpairs(&a, 5, &EigenOptions { dense_limit: 10, ..EigenOptions::default() }).unwrap();
        assert!(d.dense && !k.dense);
        for j in 0..5 {
            let exact = 2.0 - 2.0 * (2.0 * std::f64::consts::PI * ((j + 1) / 2) as f64 / n as f64).cos();
            assert!((d.values[j] - exact).abs() < 1e-12);
            assert!((k.values[j] - exact).abs() < 1e-10, "{} vs {exact}", k.values[j]);
            assert!(k.residuals[j] <= 1e-9 * k.norm);
        }
    }

    #[test]
    fn krylov_is_deterministic() {
        let a = path_laplacian(300);
        let o = EigenOptions { dense_limit: 10, ..EigenOptions::default() };
        let x = smallest_eigenpairs(&a, 3, &o).unwrap();
        let y = smallest_eigenpairs(&a, 3, &o).unwrap();
        assert_eq!(x.values, y.values);
        assert_eq!(x.vectors, y.vectors);
    }
}
