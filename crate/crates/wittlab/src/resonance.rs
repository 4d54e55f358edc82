//! Resonance lattice of a Morse gradient flow and its Ruelle determinant.
//!
//! For a critical point with exponents χ_1 ≤ … ≤ χ_n (the first r negative)
//! and a subset J of size k, base(J) sums |χ_j| over the expanding
//! directions in J and the contracting directions outside J. The degree-k
//! resonances are −(base(J) + α·|χ|) for α ∈ ℕⁿ.

use crate::critical::CriticalPoint;
use crate::error::{Error, Result};
use num_complex::Complex64;
use num_rational::Ratio;
use num_traits::Zero;
use serde::Serialize;
use std::ops::Add;

pub const DEFAULT_ENTRY_LIMIT: usize = 1_000_000;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Witness {
    pub crit_id: usize,
    /// Bit j set when direction j (sorted exponent order) belongs to J.
    pub j_mask: u32,
    pub alpha: Vec<u32>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ResonanceEntry {
    pub value: f64,
    /// Exact value as "p/q" when computed from rational exponents.
    pub exact: Option<String>,
    pub multiplicity: usize,
    pub witnesses: Vec<Witness>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ResonanceSet {
    pub degree_k: usize,
    pub cutoff_lambda: f64,
    pub entries: Vec<ResonanceEntry>,
}

impl ResonanceSet {
    pub fn multiplicity_at(&self, v: f64) -> usize {
        self.entries
            .iter()
            .filter(|e| (e.value - v).abs() <= merge_tol(v))
            .map(|e| e.multiplicity)
            .sum()
    }

    pub fn total_multiplicity(&self) -> usize {
        self.entries.iter().map(|e| e.multiplicity).sum()
    }
}

pub const DEFAULT_MERGE_REL: f64 = 1e-9;

pub fn merge_tol(v: f64) -> f64 {
    merge_tol_with(v, DEFAULT_MERGE_REL)
}

fn merge_tol_with(v: f64, rel: f64) -> f64 {
    rel * v.abs().max(1.0)
}

/// Exponent data of one critical point, generic over the number type.
#[derive(Clone, Debug)]
pub struct LyapunovData<T> {
    pub crit_id: usize,
    pub index_r: usize,
    pub abs_chi: Vec<T>,
}

impl LyapunovData<f64> {
    pub fn from_crit(cp: &CriticalPoint) -> Self {
        LyapunovData { crit_id: cp.id, index_r: cp.index_r, abs_chi: cp.lyapunov.iter().map(|c| c.abs()).collect() }
    }
}

impl LyapunovData<Ratio<i64>> {
    /// Sorted signed rational exponents.
    pub fn from_rational(crit_id: usize, chi: &[Ratio<i64>]) -> Self {
        let mut c = chi.to_vec();
        c.sort();
        let index_r = c.iter().filter(|x| **x < Ratio::zero()).count();
        LyapunovData { crit_id, index_r, abs_chi: c.iter().map(|x| if *x < Ratio::zero() { -*x } else { *x }).collect() }
    }
}

fn subsets(n: usize, k: usize) -> Vec<u32> {
    let mut v: Vec<u32> = (0u32..(1u32 << n)).filter(|m| m.count_ones() as usize == k).collect();
    v.sort_by_key(|m| m.reverse_bits());
    v
}

fn base<T: Copy + Zero + Add<Output = T>>(d: &LyapunovData<T>, mask: u32) -> T {
    let mut b = T::zero();
    for (j, &c) in d.abs_chi.iter().enumerate() {
        let in_j = mask & (1 << j) != 0;
        if (in_j && j >= d.index_r) || (!in_j && j < d.index_r) {
            b = b + c;
        }
    }
    b
}

/// All (J, α) with base(J) + α·|χ| ≤ cutoff, as (c, witness) pairs in
/// enumeration order: J by increasing base, then α lexicographically.
fn enumerate<T>(d: &LyapunovData<T>, k: usize, cutoff: T, limit: usize, out: &mut Vec<(T, Witness)>) -> Result<()>
where
    T: Copy + Zero + Add<Output = T> + PartialOrd,
{
    let n = d.abs_chi.len();
    if k > n {
        return Ok(());
    }
    let mut masks: Vec<(T, u32)> = subsets(n, k).into_iter().map(|m| (base(d, m), m)).collect();
    masks.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
    for (b, mask) in masks {
        if b > cutoff {
            continue;
        }
        let mut alpha = vec![0u32; n];
        dfs(d, mask, 0, b, cutoff, &mut alpha, limit, out)?;
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn dfs<T>(
    d: &LyapunovData<T>,
    mask: u32,
    j: usize,
    acc: T,
    cutoff: T,
    alpha: &mut Vec<u32>,
    limit: usize,
    out: &mut Vec<(T, Witness)>,
) -> Result<()>
where
    T: Copy + Zero + Add<Output = T> + PartialOrd,
{
    if j == alpha.len() {
        if out.len() >= limit {
            return Err(Error::CutoffTooLarge { limit });
        }
        out.push((acc, Witness { crit_id: d.crit_id, j_mask: mask, alpha: alpha.clone() }));
        return Ok(());
    }
    let mut v = acc;
    let mut a = 0u32;
    while v <= cutoff {
        alpha[j] = a;
        dfs(d, mask, j + 1, v, cutoff, alpha, limit, out)?;
        v = v + d.abs_chi[j];
        a += 1;
    }
    alpha[j] = 0;
    Ok(())
}

fn check_cutoff(lambda: f64) -> Result<()> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::Domain(format!("cutoff must be positive, got {lambda}")));
    }
    Ok(())
}

/// Sorts descending by value, clusters within the merge tolerance and keeps
/// witnesses in enumeration order inside each cluster.
fn merge(mut cands: Vec<(f64, Option<String>, Witness)>, rel: f64) -> Vec<ResonanceEntry> {
    let order: Vec<usize> = {
        let mut idx: Vec<usize> = (0..cands.len()).collect();
        idx.sort_by(|&a, &b| cands[b].0.total_cmp(&cands[a].0).then(a.cmp(&b)));
        idx
    };
    let mut entries: Vec<(Vec<usize>, f64)> = Vec::new();
    for i in order {
        let v = cands[i].0;
        match entries.last_mut() {
            Some((members, head)) if (*head - v).abs() <= merge_tol_with(*head, rel) => members.push(i),
            _ => entries.push((vec![i], v)),
        }
    }
    let mut taken: Vec<Option<(f64, Option<String>, Witness)>> = cands.drain(..).map(Some).collect();
    entries
        .into_iter()
        .map(|(mut members, _)| {
            members.sort();
            let items: Vec<_> = members.iter().map(|&i| taken[i].take().unwrap()).collect();
            ResonanceEntry {
                value: items[0].0,
                exact: items[0].1.clone(),
                multiplicity: items.len(),
                witnesses: items.into_iter().map(|x| x.2).collect(),
            }
        })
        .collect()
}

fn float_set(data: &[LyapunovData<f64>], k: usize, lambda: f64, limit: usize, rel: f64) -> Result<ResonanceSet> {
    check_cutoff(lambda)?;
    let mut raw = Vec::new();
    for d in data {
        if d.abs_chi.iter().any(|&c| !(c > 0.0)) {
            return Err(Error::MorseViolation(format!("zero exponent at critical point {}", d.crit_id)));
        }
        enumerate(d, k, lambda, limit, &mut raw)?;
    }
    let cands = raw.into_iter().map(|(c, w)| (if c == 0.0 { 0.0 } else { -c }, None, w)).collect();
    Ok(ResonanceSet { degree_k: k, cutoff_lambda: lambda, entries: merge(cands, rel) })
}

pub fn local_resonances(cp: &CriticalPoint, k: usize, lambda: f64) -> Result<ResonanceSet> {
    float_set(&[LyapunovData::from_crit(cp)], k, lambda, DEFAULT_ENTRY_LIMIT, DEFAULT_MERGE_REL)
}

pub fn global_resonances(crits: &[CriticalPoint], k: usize, lambda: f64) -> Result<ResonanceSet> {
    global_resonances_limited(crits, k, lambda, DEFAULT_ENTRY_LIMIT)
}

pub fn global_resonances_limited(crits: &[CriticalPoint], k: usize, lambda: f64, limit: usize) -> Result<ResonanceSet> {
    global_resonances_merged(crits, k, lambda, limit, DEFAULT_MERGE_REL)
}

/// As above with a relative merge tolerance (values within rel·max(1, |v|)
/// of a cluster head join it).
pub fn global_resonances_merged(
    crits: &[CriticalPoint],
    k: usize,
    lambda: f64,
    limit: usize,
    merge_rel: f64,
) -> Result<ResonanceSet> {
    if crits.is_empty() {
        return Err(Error::Domain("no critical points".into()));
    }
    if !(merge_rel > 0.0) {
        return Err(Error::Domain(format!("merge tolerance must be positive, got {merge_rel}")));
    }
    let data: Vec<_> = crits.iter().map(LyapunovData::from_crit).collect();
    float_set(&data, k, lambda, limit, merge_rel)
}

/// Exact enumeration and merging from rational exponents.
pub fn resonances_exact(data: &[LyapunovData<Ratio<i64>>], k: usize, lambda: Ratio<i64>) -> Result<ResonanceSet> {
    if lambda <= Ratio::zero() {
        return Err(Error::Domain("cutoff must be positive".into()));
    }
    let mut raw = Vec::new();
    for d in data {
        if d.abs_chi.iter().any(|c| c.is_zero()) {
            return Err(Error::MorseViolation(format!("zero exponent at critical point {}", d.crit_id)));
        }
        enumerate(d, k, lambda, DEFAULT_ENTRY_LIMIT, &mut raw)?;
    }
    let mut entries: Vec<ResonanceEntry> = Vec::new();
    let mut idx: Vec<usize> = (0..raw.len()).collect();
    idx.sort_by(|&a, &b| raw[a].0.cmp(&raw[b].0).then(a.cmp(&b)));
    let mut i = 0;
    while i < idx.len() {
        let c = raw[idx[i]].0;
        let mut witnesses = Vec::new();
        while i < idx.len() && raw[idx[i]].0 == c {
            witnesses.push(raw[idx[i]].1.clone());
            i += 1;
        }
        let v = -c;
        entries.push(ResonanceEntry {
            value: *v.numer() as f64 / *v.denom() as f64,
            exact: Some(format!("{}/{}", v.numer(), v.denom())),
            multiplicity: witnesses.len(),
            witnesses,
        });
    }
    let lam = *lambda.numer() as f64 / *lambda.denom() as f64;
    Ok(ResonanceSet { degree_k: k, cutoff_lambda: lam, entries })
}

/// c_k(f) as seen by the resonance lattice: multiplicity of the value 0.
pub fn kernel_multiplicity(crits: &[CriticalPoint], k: usize) -> Result<usize> {
    let lam = 0.5 * min_abs_exponent(crits);
    Ok(global_resonances(crits, k, lam)?.multiplicity_at(0.0))
}

fn min_abs_exponent(crits: &[CriticalPoint]) -> f64 {
    crits.iter().flat_map(|c| c.lyapunov.iter().map(|x| x.abs())).fold(f64::INFINITY, f64::min)
}

/// Largest strictly negative resonance below the given cutoff.
pub fn spectral_gap_with_cutoff(crits: &[CriticalPoint], k: usize, lambda: f64) -> Result<f64> {
    let set = global_resonances(crits, k, lambda)?;
    set.entries
        .iter()
        .map(|e| e.value)
        .find(|&v| v < -merge_tol(v))
        .ok_or_else(|| Error::Domain(format!("no nonzero resonance above -{lambda}; enlarge the cutoff")))
}

pub fn spectral_gap(crits: &[CriticalPoint], k: usize) -> Result<f64> {
    let lam = crits
        .iter()
        .map(|c| c.lyapunov.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
        + min_abs_exponent(crits);
    spectral_gap_with_cutoff(crits, k, lam)
}

#[derive(Clone, Copy, Debug)]
pub struct ZetaEval {
    pub log_value: Complex64,
    /// Bound (series) or estimate (product) of the truncated remainder.
    pub tail: f64,
}

/// Trace term Σ_a Σ_{|J|=k} e^{−l·base(J)} Π_j (1 − e^{−l|χ_j|})^{−1}.
fn trace_term(data: &[LyapunovData<f64>], k: usize, l: f64) -> f64 {
    let mut total = 0.0;
    for d in data {
        let inv_det: f64 = d.abs_chi.iter().map(|&c| 1.0 / (-(-l * c).exp_m1())).product();
        for mask in subsets(d.abs_chi.len(), k) {
            total += (-l * base(d, mask)).exp() * inv_det;
        }
    }
    total
}

pub fn zeta_series_eval(crits: &[CriticalPoint], k: usize, z: Complex64, l_max: usize) -> Result<ZetaEval> {
    if !(z.re > 0.0) {
        return Err(Error::Domain(format!("series needs Re z > 0, got {z}; use the product form")));
    }
    if l_max == 0 {
        return Err(Error::Domain("l_max must be at least 1".into()));
    }
    let data: Vec<_> = crits.iter().map(LyapunovData::from_crit).collect();
    let mut terms: Vec<Complex64> = Vec::with_capacity(l_max);
    for l in 1..=l_max {
        let lf = l as f64;
        terms.push(-(-lf * z).exp() / lf * trace_term(&data, k, lf));
    }
    // smallest terms first
    let log_value = terms.iter().rev().fold(Complex64::new(0.0, 0.0), |a, &t| a + t);
    let next = (l_max + 1) as f64;
    let x = z.re;
    let tail = trace_term(&data, k, next) * (-next * x).exp() / (next * (-(-x).exp_m1()));
    Ok(ZetaEval { log_value, tail })
}

fn gamma_tail(s: f64, n: usize) -> f64 {
    // ∫_{Σ t_i > s, t ≥ 0} e^{−Σ t_i} dt = e^{−s} Σ_{i<n} s^i / i!
    let mut term = 1.0;
    let mut sum = 0.0;
    for i in 0..n {
        if i > 0 {
            term *= s / i as f64;
        }
        sum += term;
    }
    (-s).exp() * sum
}

pub fn zeta_product_eval(crits: &[CriticalPoint], k: usize, z: Complex64, lambda_trunc: f64) -> Result<ZetaEval> {
    check_cutoff(lambda_trunc)?;
    let data: Vec<_> = crits.iter().map(LyapunovData::from_crit).collect();
    let mut raw = Vec::new();
    let mut tail = 0.0;
    for d in &data {
        enumerate(d, k, lambda_trunc, DEFAULT_ENTRY_LIMIT, &mut raw)?;
        let jac: f64 = d.abs_chi.iter().product();
        for mask in subsets(d.abs_chi.len(), k) {
            let b = base(d, mask);
            let s = (lambda_trunc - b).max(0.0);
            tail += (-(z.re + b)).exp() * gamma_tail(s * 1.0, d.abs_chi.len()) / jac;
        }
    }
    let mut parts: Vec<Complex64> = Vec::with_capacity(raw.len());
    for (c, w) in &raw {
        let e = (-(z + *c)).exp();
        let one_minus = Complex64::new(1.0, 0.0) - e;
        if one_minus.norm() < 1e-12 {
            return Err(Error::Domain(format!(
                "z = {z} is within 1e-12 of the resonance -{c} (critical point {})",
                w.crit_id
            )));
        }
        parts.push(if e.norm() < 1e-3 { -(e + e * e / 2.0 + e * e * e / 3.0 + e * e * e * e / 4.0) } else { one_minus.ln() });
    }
    let log_value = parts.iter().rev().fold(Complex64::new(0.0, 0.0), |a, &t| a + t);
    Ok(ZetaEval { log_value, tail })
}

/// Winding number of ζ around a circle, counting zeros inside.
pub fn winding_number(crits: &[CriticalPoint], k: usize, center: f64, radius: f64, samples: usize, lambda_trunc: f64) -> Result<f64> {
    let mut prev: Option<f64> = None;
    let mut total = 0.0;
    for i in 0..=samples {
        let th = 2.0 * std::f64::consts::PI * i as f64 / samples as f64;
        let z = Complex64::new(center + radius * th.cos(), radius * th.sin());
        let arg = zeta_product_eval(crits, k, z, lambda_trunc)?.log_value.im;
        if let Some(p) = prev {
            let mut d = arg - p;
            d -= 2.0 * std::f64::consts::PI * (d / (2.0 * std::f64::consts::PI)).round();
            total += d;
        }
        prev = Some(arg);
    }
    Ok(total / (2.0 * std::f64::consts::PI))
}
