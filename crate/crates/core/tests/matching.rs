mod common;

use fourier_contour::loss::{l_bbox, l_fd, l_sd, RegressionWeights};
use fourier_contour::matching::{
    build_cost_matrix, dense_match, dense_match_rounds, hungarian, pair_cost, CostMatrix, Proposal,
};
use proptest::prelude::*;
use rand::Rng;

use common::*;

fn random_matrix(rng: &mut impl Rng, rows: usize, cols: usize, integer: bool) -> Vec<Vec<f64>> {
    (0..rows)
        .map(|_| {
            (0..cols)
                .map(|_| {
                    if integer {
                        rng.gen_range(0..20) as f64
                    } else {
                        rng.gen_range(0.0..10.0)
                    }
                })
                .collect()
        })
        .collect()
}

#[test]
fn tall_example_matches_brute_force() {
    let rows = vec![vec![1.0, 9.0], vec![9.0, 1.0], vec![5.0, 5.0]];
    assert_eq!(brute_force_assignment(&rows), 2.0);
    let a = hungarian(&CostMatrix::from_rows(&rows).unwrap()).unwrap();
    assert_eq!(a.total, 2.0);
    assert_eq!(a.pairs, vec![(0, 0), (1, 1)]);
}

#[test]
fn hungarian_equals_brute_force() {
    let mut rng = rng(30);
    for trial in 0..600 {
        let (r, c) = (rng.gen_range(1..=7), rng.gen_range(1..=7));
        let rows = random_matrix(&mut rng, r, c, trial % 2 == 0);
        let a = hungarian(&CostMatrix::from_rows(&rows).unwrap()).unwrap();
        assert_eq!(a.pairs.len(), r.min(c));
        let best = brute_force_assignment(&rows);
        if trial % 2 == 0 {
            assert_eq!(a.total, best, "{rows:?}");
        } else {
            assert!((a.total - best).abs() <= 1e-12 * best.max(1.0));
        }
        let mut used_rows: Vec<_> = a.pairs.iter().map(|p| p.0).collect();
        let mut used_cols: Vec<_> = a.pairs.iter().map(|p| p.1).collect();
        used_rows.dedup();
        used_cols.sort_unstable();
        used_cols.dedup();
        assert_eq!(used_rows.len(), a.pairs.len());
        assert_eq!(used_cols.len(), a.pairs.len());
    }
}

#[test]
fn hungarian_is_deterministic_on_ties() {
    let zeros = CostMatrix::from_rows(&vec![vec![0.0; 4]; 4]).unwrap();
    let first = hungarian(&zeros).unwrap();
    for _ in 0..5 {
        assert_eq!(hungarian(&zeros).unwrap(), first);
    }
}

#[test]
fn dense_with_single_round_is_hungarian() {
    let mut rng = rng(31);
    for _ in 0..100 {
        let (r, c) = (rng.gen_range(1..=9), rng.gen_range(1..=4));
        let cost = CostMatrix::from_rows(&random_matrix(&mut rng, r, c, false)).unwrap();
        let plain = hungarian(&cost).unwrap();
        let dense = dense_match(&cost, 1).unwrap();
        assert_eq!(dense.positives, plain.pairs);
        let matched: Vec<usize> = plain.pairs.iter().map(|p| p.0).collect();
        let expected_neg: Vec<usize> = (0..r).filter(|i| !matched.contains(i)).collect();
        assert_eq!(dense.negatives, expected_neg);
    }
}

#[test]
fn round_costs_do_not_decrease() {
    let mut rng = rng(32);
    for _ in 0..200 {
        let gts = rng.gen_range(1..=4);
        let n_m = rng.gen_range(1..=4);
        let rows = n_m * gts + rng.gen_range(0..4);
        let cost = CostMatrix::from_rows(&random_matrix(&mut rng, rows, gts, false)).unwrap();
        let rounds = dense_match_rounds(&cost, n_m).unwrap();
        for w in rounds.windows(2) {
            assert!(w[1].total >= w[0].total - 1e-12);
        }
    }
}

#[test]
fn pair_cost_composes_from_loss_primitives() {
    let mut rng = rng(33);
    let w = RegressionWeights::default();
    for _ in 0..50 {
        let pred = random_descriptor(&mut rng, 5);
        let gt = random_descriptor(&mut rng, 5);
        let s = rng.gen_range(0.01..0.99);
        let p = Proposal::new(pred.clone(), s).unwrap();
        let expected = -f64::ln(s)
            + 0.25
                * (l_sd(&pred, &gt, 400).unwrap()
                    + 5.0 * l_fd(&pred, &gt).unwrap()
                    + 0.4 * l_bbox(&pred, &gt, 400).unwrap());
        assert_eq!(pair_cost(&p, &gt, &w, 400).unwrap(), expected);
    }
}

#[test]
fn perfect_prediction_costs_almost_nothing() {
    let mut rng = rng(34);
    let fd = random_descriptor(&mut rng, 5);
    let p = Proposal::new(fd.clone(), 1.0 - 1e-12).unwrap();
    assert!(pair_cost(&p, &fd, &RegressionWeights::default(), 400).unwrap() < 1e-11);
}

#[test]
fn dense_match_over_descriptor_costs() {
    let mut rng = rng(35);
    let gts: Vec<_> = (0..3).map(|_| random_descriptor(&mut rng, 5)).collect();
    let preds: Vec<_> = (0..12)
        .map(|_| Proposal::new(random_descriptor(&mut rng, 5), rng.gen_range(0.05..0.95)).unwrap())
        .collect();
    let cost = build_cost_matrix(&preds, &gts, &RegressionWeights::default(), 400).unwrap();
    let m = dense_match(&cost, 3).unwrap();
    assert_eq!(m.positives.len(), 9);
    assert_eq!(m.negatives.len(), 3);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn every_gt_gets_n_m_matches(seed in any::<u64>(), gts in 1usize..5, n_m in 1usize..5, extra in 0usize..5) {
        let mut r = rng(seed);
        let rows = n_m * gts + extra;
        let cost = CostMatrix::from_rows(&random_matrix(&mut r, rows, gts, false)).unwrap();
        let m = dense_match(&cost, n_m).unwrap();
        prop_assert_eq!(m.positives.len(), n_m * gts);
        for g in 0..gts {
            prop_assert_eq!(m.positives.iter().filter(|p| p.1 == g).count(), n_m);
        }
        let mut preds: Vec<usize> = m.positives.iter().map(|p| p.0).collect();
        preds.sort_unstable();
        preds.dedup();
        prop_assert_eq!(preds.len(), m.positives.len());
        prop_assert_eq!(preds.len() + m.negatives.len(), rows);
        prop_assert!(m.negatives.iter().all(|n| !preds.contains(n)));
    }

    #[test]
    fn short_supply_matches_what_remains(seed in any::<u64>(), gts in 1usize..5, rows in 1usize..8, n_m in 1usize..5) {
        let mut r = rng(seed);
        let cost = CostMatrix::from_rows(&random_matrix(&mut r, rows, gts, false)).unwrap();
        let m = dense_match(&cost, n_m).unwrap();
        let mut remaining = rows;
        let mut expected = 0;
        for _ in 0..n_m {
            let k = remaining.min(gts);
            expected += k;
            remaining -= k;
        }
        prop_assert_eq!(m.positives.len(), expected);
    }
}
