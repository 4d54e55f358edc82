//! Matching of −λ_j against resonances for a finished run directory.

use crate::output::{read_csv, Bundle, Cell, Csv};
use serde::Serialize;
use std::collections::BTreeMap;
use std::path::Path;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Match {
    pub degree: usize,
    pub hbar: f64,
    pub mesh_level: u32,
    pub j: usize,
    pub neg_lambda: f64,
    pub resonance: Option<f64>,
    pub deviation: Option<f64>,
}

/// Greedy nearest matching in order of j. Each resonance value can absorb
/// as many eigenvalues as its multiplicity.
pub fn match_group(neg_lambdas: &[f64], resonances: &[(f64, usize)]) -> Vec<(Option<f64>, Option<f64>)> {
    let mut left: Vec<(f64, usize)> = resonances.to_vec();
    neg_lambdas
        .iter()
        .map(|&x| {
            let best = left
                .iter()
                .enumerate()
                .filter(|(_, r)| r.1 > 0)
                .min_by(|a, b| (a.1 .0 - x).abs().total_cmp(&(b.1 .0 - x).abs()).then(a.0.cmp(&b.0)))
                .map(|(i, _)| i);
            match best {
                Some(i) => {
                    left[i].1 -= 1;
                    (Some(left[i].0), Some(x - left[i].0))
                }
                None => (None, None),
            }
        })
        .collect()
}

fn col(header: &[String], name: &str) -> Result<usize, String> {
    header.iter().position(|h| h == name).ok_or_else(|| format!("missing column {name}"))
}

fn parse<T: std::str::FromStr>(s: &str) -> Result<T, String> {
    s.parse().map_err(|_| format!("cannot parse {s:?}"))
}

pub enum CompareError {
    HashMismatch(String, String),
    Input(String),
}

impl std::fmt::Display for CompareError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CompareError::HashMismatch(a, b) => write!(f, "config hash mismatch: spectrum {a}, resonances {b}"),
            CompareError::Input(s) => write!(f, "{s}"),
        }
    }
}

pub fn compare_dir(dir: &Path) -> Result<Vec<Match>, CompareError> {
    let (hs, hdr_s, rows_s) = read_csv(&dir.join("spectrum.csv")).map_err(CompareError::Input)?;
    let (hr, hdr_r, rows_r) = read_csv(&dir.join("resonances.csv")).map_err(CompareError::Input)?;
    if hs != hr {
        return Err(CompareError::HashMismatch(hs, hr));
    }
    let inner = || -> Result<Vec<Match>, String> {
        let (rd, rv, rm) = (col(&hdr_r, "degree")?, col(&hdr_r, "value")?, col(&hdr_r, "multiplicity")?);
        let mut res: BTreeMap<usize, Vec<(f64, usize)>> = BTreeMap::new();
        for r in &rows_r {
            let d: usize = parse(&r[rd])?;
            let v: f64 = parse(&r[rv])?;
            let m: usize = parse(&r[rm])?;
            let list = res.entry(d).or_default();
            // one row per witness: keep each value once
            if list.last().is_none_or(|l| l.0 != v) {
                list.push((v, m));
            }
        }
        let (sd, sh, sl, sj, sv) = (
            col(&hdr_s, "degree")?,
            col(&hdr_s, "hbar")?,
            col(&hdr_s, "mesh_level")?,
            col(&hdr_s, "j")?,
            col(&hdr_s, "lambda")?,
        );
        // group key keeps file order of first appearance
        let mut groups: Vec<((usize, u64, u32), Vec<(usize, f64)>)> = Vec::new();
        for r in &rows_s {
            let d: usize = parse(&r[sd])?;
            let h: f64 = parse(&r[sh])?;
            let l: u32 = parse(&r[sl])?;
            let key = (d, h.to_bits(), l);
            let item = (parse(&r[sj])?, parse::<f64>(&r[sv])?);
            match groups.iter_mut().find(|g| g.0 == key) {
                Some(g) => {
                    if !g.1.iter().any(|x| x.0 == item.0) {
                        g.1.push(item)
                    }
                }
                None => groups.push((key, vec![item])),
            }
        }
        let mut out = Vec::new();
        for ((d, hb, l), mut items) in groups {
            items.sort_by_key(|x| x.0);
            let neg: Vec<f64> = items.iter().map(|x| -x.1).collect();
            let empty = Vec::new();
            let matched = match_group(&neg, res.get(&d).unwrap_or(&empty));
            for ((j, _), (x, (r, dev))) in items.iter().zip(neg.iter().zip(matched)) {
                out.push(Match {
                    degree: d,
                    hbar: f64::from_bits(hb),
                    mesh_level: l,
                    j: *j,
                    neg_lambda: *x,
                    resonance: r,
                    deviation: dev,
                });
            }
        }
        Ok(out)
    };
    inner().map_err(CompareError::Input)
}

/// Writes comparison.csv into the directory (hash carried over).
pub fn write_comparison(dir: &Path, matches: &[Match]) -> std::io::Result<String> {
    let (hash, _, _) = read_csv(&dir.join("spectrum.csv")).map_err(std::io::Error::other)?;
    let mut csv = Csv::new(&["degree", "hbar", "mesh_level", "j", "neg_lambda", "resonance", "deviation"]);
    for m in matches {
        csv.push(vec![
            m.degree.into(),
            m.hbar.into(),
            (m.mesh_level as usize).into(),
            m.j.into(),
            m.neg_lambda.into(),
            m.resonance.into(),
            m.deviation.map_or(Cell::Blank, Cell::Num),
        ]);
    }
    let mut b = Bundle::new(dir, &hash);
    b.add_csv("comparison.csv", "compare", &csv);
    b.write_all()?;
    Ok(hash)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn multiplicity_is_respected() {
        let r = [(0.0, 1), (-1.0, 2), (-2.0, 3)];
        let m = match_group(&[1e-13, -0.9, -1.2, -1.4], &r);
        let vals: Vec<f64> = m.iter().map(|x| x.0.unwrap()).collect();
        assert_eq!(vals, vec![0.0, -1.0, -1.0, -2.0]);
        assert!((m[3].1.unwrap() - 0.6).abs() < 1e-12);
    }

    #[test]
    fn exhausted_resonances_leave_blanks() {
        let m = match_group(&[0.0, -0.5], &[(0.0, 1)]);
        assert_eq!(m[1], (None, None));
    }
}
