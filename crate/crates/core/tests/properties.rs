use proptest::prelude::*;

use pairmix::distributions::nb2_pmf;
use pairmix::model::{
    conditional_mixture_weights, corr_pdgsbp, corr_rpddp, d12, d12_case, geometric_weight, pair_count,
    CorrelationOrder, PairIndex, PairMatrix, SelectionMatrix, SymmetricMatrix,
};
use pairmix::rpddp::{build_slice_set, stick_weights};
use pairmix::sampling::{block_probabilities, draw_from_log_weights};

fn prob_row(m: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..1.0, m).prop_map(|raw| {
        let s: f64 = raw.iter().sum();
        raw.iter().map(|v| v / s).collect()
    })
}

fn selection(m: usize) -> impl Strategy<Value = SelectionMatrix> {
    prop::collection::vec(prob_row(m), m).prop_map(|rows| SelectionMatrix::from_rows(&rows).unwrap())
}

proptest! {
    #[test]
    fn conditional_weights_form_a_distribution(
        (p, lam) in (1usize..6).prop_flat_map(|m| (prob_row(m), prop::collection::vec(0.01f64..0.99, m))),
        r in 1u64..400,
    ) {
        let w = conditional_mixture_weights(r, &p, &lam).unwrap();
        prop_assert_eq!(w.len(), p.len());
        prop_assert!(w.iter().all(|&v| (0.0..=1.0).contains(&v)));
        prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn conditional_weights_follow_nb2_ratio(p in prob_row(2), l0 in 0.05f64..0.95, l1 in 0.05f64..0.95, r in 1u64..60) {
        let w = conditional_mixture_weights(r, &p, &[l0, l1]).unwrap();
        let a = p[0] * nb2_pmf(r, l0).unwrap();
        let b = p[1] * nb2_pmf(r, l1).unwrap();
        prop_assert!((w[0] - a / (a + b)).abs() < 1e-10);
    }

    #[test]
    fn geometric_weights_sum_below_one(lambda in 0.01f64..1.0, k in 1u64..200) {
        let partial: f64 = (1..=k).map(|i| geometric_weight(lambda, i).unwrap()).sum();
        let tail = (1.0 - lambda).powi(k as i32);
        prop_assert!((partial + tail - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pair_storage_is_symmetric(m in 1usize..8, j in 0usize..8, l in 0usize..8) {
        prop_assume!(j < m && l < m);
        let mut pm = PairMatrix::from_fn(m, |p| p.slot(m));
        prop_assert_eq!(pm.get(j, l), pm.get(l, j));
        pm.set(j, l, usize::MAX);
        prop_assert_eq!(*pm.get(l, j), usize::MAX);
        prop_assert!(PairIndex::new(j, l).slot(m) < pair_count(m));

        let mut s = SymmetricMatrix::constant(m, 0.5);
        s.set(l, j, 0.25);
        prop_assert_eq!(s.get(j, l), 0.25);
    }

    #[test]
    fn pair_slots_are_a_bijection(m in 1usize..10) {
        let mut seen = vec![false; pair_count(m)];
        for lo in 0..m {
            for hi in lo..m {
                let s = PairIndex::new(hi, lo).slot(m);
                prop_assert!(!seen[s]);
                seen[s] = true;
            }
        }
        prop_assert!(seen.iter().all(|&b| b));
    }

    #[test]
    fn d12_case_matches_sign(c in prop::array::uniform3(0.01f64..10.0), p in selection(2)) {
        let [l11, l22, l12] = c.map(|v| 1.0 / (1.0 + v));
        let pm = [[p.get(0, 0), p.get(0, 1)], [p.get(1, 0), p.get(1, 1)]];
        let v = d12(l11, l22, l12, pm);
        let mut lam = SymmetricMatrix::constant(2, l11);
        lam.set(0, 1, l12);
        lam.set(1, 1, l22);
        let mut cm = SymmetricMatrix::constant(2, c[0]);
        cm.set(0, 1, c[2]);
        cm.set(1, 1, c[1]);
        let gap = corr_rpddp(&p, &cm, 0, 1).unwrap() - corr_pdgsbp(&p, &lam, 0, 1).unwrap();
        match d12_case(l11, l22, l12, pm) {
            CorrelationOrder::DpGreater => prop_assert!(v > 0.0 && gap > -1e-12),
            CorrelationOrder::GsbGreater => prop_assert!(v < 0.0 && gap < 1e-12),
            CorrelationOrder::Equal => prop_assert!(gap.abs() < 1e-9),
        }
    }

    #[test]
    fn constant_parameters_give_equal_correlations(m in 2usize..5, lam in 0.05f64..0.95, c in 0.05f64..20.0, seed in any::<u64>()) {
        let rows: Vec<Vec<f64>> = (0..m)
            .map(|j| {
                let raw: Vec<f64> = (0..m).map(|l| 0.05 + ((seed >> ((j * m + l) % 60)) & 0xff) as f64).collect();
                let s: f64 = raw.iter().sum();
                raw.iter().map(|v| v / s).collect()
            })
            .collect();
        let p = SelectionMatrix::from_rows(&rows).unwrap();
        let a = corr_pdgsbp(&p, &SymmetricMatrix::constant(m, lam), 0, 1).unwrap();
        let b = corr_rpddp(&p, &SymmetricMatrix::constant(m, c), 0, 1).unwrap();
        prop_assert!((a - b).abs() < 1e-14);
    }

    #[test]
    fn block_probabilities_normalize(
        (p, ks) in (1usize..5).prop_flat_map(|m| (prob_row(m), prop::collection::vec(prop::collection::vec(1e-6f64..5.0, 1..6), m))),
    ) {
        let q = block_probabilities(&p, &ks);
        prop_assert_eq!(q.len(), ks.iter().map(Vec::len).sum::<usize>());
        prop_assert!((q.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn log_weight_draw_in_range(mut w in prop::collection::vec(-700.0f64..10.0, 1..40), u in 0.0f64..1.0) {
        let n = w.len();
        let (i, steps) = draw_from_log_weights(&mut w, u);
        prop_assert!(i < n);
        prop_assert!(steps >= 1 && steps as usize <= n);
        prop_assert!(w[i] > 0.0);
    }

    #[test]
    fn sticks_conserve_mass(v in prop::collection::vec(0.001f64..0.999, 1..50)) {
        let (w, rest) = stick_weights(&v);
        prop_assert!((w.iter().sum::<f64>() + rest - 1.0).abs() < 1e-12);
        prop_assert!(rest > 0.0);
    }

    #[test]
    fn slice_set_members_exceed_threshold(v in prop::collection::vec(0.01f64..0.99, 1..40), frac in 0.0f64..1.0) {
        let (w, _) = stick_weights(&v);
        let top = w.iter().copied().fold(0.0, f64::max);
        let u = frac * top;
        prop_assume!(u < top);
        let s = build_slice_set(&w, u).unwrap();
        prop_assert!(!s.members.is_empty());
        for (k, &wk) in w.iter().enumerate() {
            prop_assert_eq!(s.members.contains(&k), wk > u);
        }
        prop_assert!(build_slice_set(&w, top).is_err());
    }
}
