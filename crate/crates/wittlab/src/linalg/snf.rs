//! Integer linear algebra: Smith normal form, rank and cohomology of small
//! integer cochain complexes.

use serde::Serialize;

pub type IntMatrix = Vec<Vec<i64>>;

/// Nonzero invariant factors d_1 | d_2 | … of an integer matrix.
pub fn invariant_factors(m: &[Vec<i64>]) -> Vec<i64> {
    let rows = m.len();
    let cols = m.first().map_or(0, |r| r.len());
    let mut a: Vec<Vec<i128>> = m.iter().map(|r| r.iter().map(|&x| x as i128).collect()).collect();
    let mut diag = Vec::new();
    let mut t = 0;
    while t < rows.min(cols) {
        // pivot: smallest nonzero magnitude in the trailing block
        let mut piv: Option<(usize, usize)> = None;
        for i in t..rows {
            for j in t..cols {
                if a[i][j] != 0 && piv.is_none_or(|(pi, pj)| a[i][j].abs() < a[pi][pj].abs()) {
                    piv = Some((i, j));
                }
            }
        }
        let Some((pi, pj)) = piv else { break };
        a.swap(t, pi);
        for r in a.iter_mut() {
            r.swap(t, pj);
        }
        loop {
            let p = a[t][t];
            let mut clean = true;
            for i in t + 1..rows {
                let q = a[i][t] / p;
                if q != 0 {
                    for j in t..cols {
                        a[i][j] -= q * a[t][j];
                    }
                }
                if a[i][t] != 0 {
                    clean = false;
                }
            }
            for j in t + 1..cols {
                let q = a[t][j] / p;
                if q != 0 {
                    for i in t..rows {
                        a[i][j] -= q * a[i][t];
                    }
                }
                if a[t][j] != 0 {
                    clean = false;
                }
            }
            if clean {
                // divisibility of the trailing block
                let bad = (t + 1..rows).flat_map(|i| (t + 1..cols).map(move |j| (i, j))).find(|&(i, j)| a[i][j] % p != 0);
                match bad {
                    None => break,
                    Some((i, _)) => {
                        for j in t..cols {
                            a[t][j] += a[i][j];
                        }
                        continue;
                    }
                }
            }
            // move the smallest remaining entry of row/column t to the pivot
            let mut best = (t, t);
            for i in t..rows {
                if a[i][t] != 0 && a[i][t].abs() < a[best.0][best.1].abs() {
                    best = (i, t);
                }
            }
            for j in t..cols {
                if a[t][j] != 0 && a[t][j].abs() < a[best.0][best.1].abs() {
                    best = (t, j);
                }
            }
            a.swap(t, best.0);
            for r in a.iter_mut() {
                r.swap(t, best.1);
            }
        }
        diag.push(a[t][t].abs() as i64);
        t += 1;
    }
    diag
}

pub fn integer_rank(m: &[Vec<i64>]) -> usize {
    invariant_factors(m).len()
}

pub fn matmul(a: &[Vec<i64>], b: &[Vec<i64>]) -> IntMatrix {
    let inner = b.len();
    let cols = b.first().map_or(0, |r| r.len());
    a.iter()
        .map(|row| {
            assert_eq!(row.len(), inner);
            (0..cols).map(|j| (0..inner).map(|k| row[k] * b[k][j]).sum()).collect()
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Cohomology {
    pub d2_zero: bool,
    pub betti: Vec<usize>,
    /// Torsion coefficients (> 1) per degree.
    pub torsion: Vec<Vec<i64>>,
}

/// Cohomology of C^0 → C^1 → … with d_k given as a dims[k] × dims[k+1]
/// matrix whose row a lists the coefficients of d(e_a).
pub fn cohomology(dims: &[usize], d: &[IntMatrix]) -> Cohomology {
    assert_eq!(d.len() + 1, dims.len());
    let mut d2_zero = true;
    for k in 0..d.len().saturating_sub(1) {
        if dims[k] > 0 && dims[k + 2] > 0 && dims[k + 1] > 0 {
            let p = matmul(&d[k], &d[k + 1]);
            d2_zero &= p.iter().all(|r| r.iter().all(|&x| x == 0));
        }
    }
    let ranks: Vec<usize> = d.iter().map(|m| integer_rank(m)).collect();
    let factors: Vec<Vec<i64>> = d.iter().map(|m| invariant_factors(m)).collect();
    let mut betti = Vec::new();
    let mut torsion = Vec::new();
    for k in 0..dims.len() {
        let out = if k < d.len() { ranks[k] } else { 0 };
        let inc = if k > 0 { ranks[k - 1] } else { 0 };
        betti.push(dims[k] - out - inc);
        torsion.push(if k > 0 { factors[k - 1].iter().cloned().filter(|&x| x > 1).collect() } else { vec![] });
    }
    Cohomology { d2_zero, betti, torsion }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn invariant_factors_examples() {
        assert_eq!(invariant_factors(&[vec![2, 4, 4], vec![-6, 6, 12], vec![10, -4, -16]]), vec![2, 6, 12]);
        assert_eq!(invariant_factors(&[vec![1, -1]]), vec![1]);
        assert_eq!(invariant_factors(&[vec![0, 0], vec![0, 0]]), Vec::<i64>::new());
        assert_eq!(invariant_factors(&[vec![2, 0], vec![0, 3]]), vec![1, 6]);
    }

    #[test]
    fn projective_plane_has_torsion() {
        // cellular cochains of RP^2: d0 = 0, d1 = 2
        let c = cohomology(&[1, 1, 1], &[vec![vec![0]], vec![vec![2]]]);
        assert_eq!(c.betti, vec![1, 0, 0]);
        assert_eq!(c.torsion[2], vec![2]);
    }
}
