use num_rational::Ratio;
use proptest::prelude::*;
use wittlab::geometry::field::FieldExpr;
use wittlab::geometry::{build_mesh, MorseModel, SurfaceKind};
use wittlab::linalg::snf::{invariant_factors, matmul};
use wittlab::linalg::sparse::{dot, Csr};
use wittlab::morse::crossing::segment_crossing;
use wittlab::resonance::{resonances_exact, LyapunovData};
use wittlab::whitney::coboundary;

fn exponents() -> impl Strategy<Value = Vec<LyapunovData<Ratio<i64>>>> {
    let chi = (1i64..12, 1i64..5, any::<bool>()).prop_map(|(p, q, neg)| Ratio::new(if neg { -p } else { p }, q));
    prop::collection::vec(prop::collection::vec(chi, 2), 1..4).prop_map(|pts| {
        pts.iter().enumerate().map(|(i, c)| LyapunovData::from_rational(i, c)).collect()
    })
}

fn triplets(n: usize, m: usize) -> impl Strategy<Value = Vec<(usize, usize, f64)>> {
    prop::collection::vec((0..n, 0..m, -10.0f64..10.0), 0..40)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn raising_the_cutoff_extends_the_resonance_list(data in exponents(), k in 0usize..3, lo in 1i64..6, extra in 1i64..6) {
        let a = resonances_exact(&data, k, Ratio::from_integer(lo)).unwrap();
        let b = resonances_exact(&data, k, Ratio::from_integer(lo + extra)).unwrap();
        prop_assert!(a.entries.len() <= b.entries.len());
        for (x, y) in a.entries.iter().zip(&b.entries) {
            prop_assert_eq!(&x.exact, &y.exact);
            prop_assert_eq!(x.multiplicity, y.multiplicity);
        }
        prop_assert!(b.entries.windows(2).all(|w| w[1].value < w[0].value));
        prop_assert!(b.entries.iter().all(|e| e.value <= 0.0 && e.value >= -((lo + extra) as f64)));
        prop_assert!(b.entries.iter().all(|e| e.multiplicity == e.witnesses.len()));
    }

    #[test]
    fn zero_resonance_counts_points_of_matching_index(data in exponents(), k in 0usize..3) {
        let set = resonances_exact(&data, k, Ratio::from_integer(1)).unwrap();
        let zero = set.entries.iter().find(|e| e.value == 0.0).map_or(0, |e| e.multiplicity);
        prop_assert_eq!(zero, data.iter().filter(|d| d.index_r == k).count());
    }

    #[test]
    fn transpose_is_the_adjoint(t in triplets(7, 5), x in prop::collection::vec(-1.0f64..1.0, 5), y in prop::collection::vec(-1.0f64..1.0, 7)) {
        let a = Csr::from_triplets(7, 5, t);
        let at = a.transpose();
        prop_assert_eq!(at.transpose(), a.clone());
        let lhs = dot(&y, &a.matvec(&x));
        let rhs = dot(&at.matvec(&y), &x);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
    }

    #[test]
    fn unimodular_moves_keep_invariant_factors(
        m in prop::collection::vec(prop::collection::vec(-6i64..7, 3), 3),
        i in 0usize..3, j in 0usize..3, c in -3i64..4,
    ) {
        prop_assume!(i != j);
        let mut e = vec![vec![0i64; 3]; 3];
        for (r, row) in e.iter_mut().enumerate() {
            row[r] = 1;
        }
        e[i][j] = c;
        prop_assert_eq!(invariant_factors(&matmul(&e, &m)), invariant_factors(&m));
        prop_assert_eq!(invariant_factors(&matmul(&m, &e)), invariant_factors(&m));
    }

    #[test]
    fn swapping_segments_flips_the_crossing_sign(
        a in prop::array::uniform3(-1.0f64..1.0), b in prop::array::uniform3(-1.0f64..1.0),
        p in prop::array::uniform3(-1.0f64..1.0), q in prop::array::uniform3(-1.0f64..1.0),
    ) {
        let kind = SurfaceKind::FlatTorusUnitSquare;
        let flat = |v: [f64; 3]| [v[0], v[1], 0.0];
        let (a, b, p, q) = (flat(a), flat(b), flat(p), flat(q));
        let ab = segment_crossing(kind, a, b, p, q);
        let pq = segment_crossing(kind, p, q, a, b);
        let qp = segment_crossing(kind, a, b, q, p);
        prop_assert_eq!(ab.is_some(), pq.is_some());
        if let (Some((s1, x1)), Some((s2, _)), Some((s3, _))) = (ab, pq, qp) {
            prop_assert_eq!(s1, -s2);
            prop_assert_eq!(s1, -s3);
            prop_assert!(((x1[0] - a[0]) * (b[1] - a[1]) - (x1[1] - a[1]) * (b[0] - a[0])).abs() < 1e-9);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn coboundary_squares_to_zero(values in prop::collection::vec(-1.0f64..1.0, 162), torus in any::<bool>()) {
        let model = if torus {
            MorseModel::torus(FieldExpr::torus_cosine(1.0, [0.0, 0.0]))
        } else {
            MorseModel::sphere(FieldExpr::sphere_linear([0.0, 0.0, 1.0]))
        };
        let mesh = build_mesh(&model, 2).unwrap();
        prop_assert!(mesh.n_vertices() <= values.len());
        let c = &values[..mesh.n_vertices()];
        let dd = coboundary(&mesh, 1, &coboundary(&mesh, 0, c));
        prop_assert!(dd.iter().all(|x| x.abs() < 1e-15));
    }
}
