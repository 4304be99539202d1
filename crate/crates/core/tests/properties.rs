use l20fs::baseline::row_soft_threshold;
use l20fs::data::{center_rows, stratified_split_indices, train_quota};
use l20fs::evaluation::{accuracy, knn_predict, restrict_features, softmax_predict, SoftmaxModel};
use l20fs::harness::csv_io::{parse_csv, render_csv, LoadOptions};
use l20fs::harness::oracle::brute_force_oracle;
use l20fs::harness::synthetic::{generate_synthetic, SyntheticSpec};
use l20fs::objective::{loss, objective_value};
use l20fs::thresholding::row_hard_threshold;
use l20fs::*;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use std::path::Path;

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-10.0f64..10.0, rows * cols)
        .prop_map(move |v| DMatrix::from_column_slice(rows, cols, &v))
}

fn sized_matrix(max_rows: usize, max_cols: usize) -> impl Strategy<Value = DMatrix<f64>> {
    (1..=max_rows, 1..=max_cols).prop_flat_map(|(r, c)| matrix(r, c))
}

/// Labels covering every class at least twice.
fn labelled(max_classes: usize, max_extra: usize) -> impl Strategy<Value = (Vec<usize>, usize)> {
    (2..=max_classes, 0..=max_extra).prop_flat_map(|(c, extra)| {
        prop::collection::vec(0..c, extra).prop_map(move |tail| {
            let mut labels: Vec<usize> = (0..c).chain(0..c).collect();
            labels.extend(tail);
            (labels, c)
        })
    })
}

fn centered_instance(d: usize, n: usize, c: usize) -> impl Strategy<Value = CenteredData> {
    (matrix(d, n), matrix(c, n)).prop_map(|(x, y)| {
        let (x, _) = center_rows(&x);
        let (y, _) = center_rows(&y);
        CenteredData::from_centered(x, y).unwrap()
    })
}

proptest! {
    #[test]
    fn centering_is_idempotent_with_zero_row_sums(x in sized_matrix(6, 12)) {
        let (once, _) = center_rows(&x);
        let (twice, _) = center_rows(&once);
        let scale = x.amax().max(1.0);
        prop_assert!((&once - &twice).amax() <= 1e-12 * scale);
        for row in once.row_iter() {
            prop_assert!(row.sum().abs() <= 1e-9 * scale * x.ncols() as f64);
        }
    }

    #[test]
    fn one_hot_columns_sum_to_one((labels, c) in labelled(5, 20)) {
        let y = one_hot_encode(&labels, c).unwrap();
        for col in y.values().column_iter() {
            prop_assert_eq!(col.sum(), 1.0);
        }
    }

    #[test]
    fn split_partitions_and_keeps_proportions(
        (labels, c) in labelled(4, 30),
        fraction in 0.2f64..0.8,
        seed in any::<u64>(),
    ) {
        let n = labels.len();
        let x = DMatrix::from_fn(2, n, |i, j| (i * n + j) as f64);
        let ds = Dataset::new(x, labels.clone(), c).unwrap();
        let (train, test) = stratified_split_indices(&ds, fraction, seed).unwrap();
        let mut all: Vec<usize> = train.iter().chain(&test).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        for class in 0..c {
            let size = labels.iter().filter(|&&l| l == class).count();
            let in_train = train.iter().filter(|&&j| labels[j] == class).count();
            prop_assert_eq!(in_train, train_quota(size, fraction));
            prop_assert!((in_train as f64 - fraction * size as f64).abs() <= 1.0);
        }
    }

    #[test]
    fn loss_is_convex(data in centered_instance(4, 7, 2), a in matrix(4, 2), b in matrix(4, 2)) {
        let wa = WeightMatrix::new(a.clone()).unwrap();
        let wb = WeightMatrix::new(b.clone()).unwrap();
        let mid = WeightMatrix::new((a + b) * 0.5).unwrap();
        let lhs = loss(&mid, &data).unwrap();
        let rhs = 0.5 * loss(&wa, &data).unwrap() + 0.5 * loss(&wb, &data).unwrap();
        prop_assert!(lhs <= rhs * (1.0 + 1e-12) + 1e-12);
    }

    #[test]
    fn objective_gap_is_linear_in_support(
        data in centered_instance(5, 6, 2),
        w in matrix(5, 2),
        zero_rows in prop::collection::vec(any::<bool>(), 5),
        lambda in 0.0f64..5.0,
        smaller in 0.0f64..1.0,
    ) {
        let mut w = w;
        for (i, z) in zero_rows.iter().enumerate() {
            if *z {
                w.row_mut(i).fill(0.0);
            }
        }
        let w = WeightMatrix::new(w).unwrap();
        let lower = lambda * smaller;
        let hi = objective_value(&w, lambda, &data).unwrap();
        let lo = objective_value(&w, lower, &data).unwrap();
        prop_assert!(lo <= hi);
        let expected = (lambda - lower) * w.support_size() as f64;
        prop_assert!(((hi - lo) - expected).abs() <= 1e-12 * hi.abs().max(1.0));
    }

    #[test]
    fn hard_threshold_rows_are_input_or_zero(
        g in sized_matrix(8, 4),
        lambda in 0.0f64..50.0,
        l in 0.01f64..10.0,
    ) {
        let out = row_hard_threshold(&g, lambda, l).unwrap();
        for (orig, row) in g.row_iter().zip(out.values().row_iter()) {
            let same = orig.iter().zip(row.iter()).all(|(a, b)| a.to_bits() == b.to_bits());
            let zero = row.iter().all(|v| v.to_bits() == 0.0f64.to_bits());
            prop_assert!(same || zero);
        }
    }

    #[test]
    fn hard_threshold_support_shrinks_with_lambda(
        g in sized_matrix(8, 3),
        a in 0.0f64..30.0,
        b in 0.0f64..30.0,
        l in 0.1f64..5.0,
    ) {
        let (small, large) = if a <= b { (a, b) } else { (b, a) };
        let wide = row_hard_threshold(&g, small, l).unwrap().support();
        let narrow = row_hard_threshold(&g, large, l).unwrap().support();
        prop_assert!(narrow.iter().all(|i| wide.contains(i)));
    }

    #[test]
    fn zero_lambda_threshold_is_identity(g in sized_matrix(6, 3), l in 0.1f64..5.0) {
        prop_assume!(g.row_iter().all(|r| r.norm_squared() > 0.0));
        let out = row_hard_threshold(&g, 0.0, l).unwrap();
        prop_assert_eq!(out.values(), &g);
    }

    #[test]
    fn soft_threshold_is_nonexpansive(a in matrix(5, 3), b in matrix(5, 3), tau in 0.0f64..20.0) {
        let pa = row_soft_threshold(&a, tau).unwrap();
        let pb = row_soft_threshold(&b, tau).unwrap();
        let lhs = (pa.values() - pb.values()).norm();
        prop_assert!(lhs <= (a - b).norm() * (1.0 + 1e-12) + 1e-12);
    }

    #[test]
    fn soft_threshold_zeroes_exactly_the_short_rows(g in matrix(6, 3), tau in 0.0f64..20.0) {
        let out = row_soft_threshold(&g, tau).unwrap();
        for (orig, row) in g.row_iter().zip(out.values().row_iter()) {
            let zero = row.iter().all(|&v| v == 0.0);
            prop_assert_eq!(zero, orig.norm() <= tau);
        }
    }

    #[test]
    fn restricted_rows_are_ascending_copies(x in matrix(7, 4), pick in prop::collection::btree_set(0usize..7, 0..7)) {
        let mut support: Vec<usize> = pick.into_iter().collect();
        support.reverse();
        let out = restrict_features(&x, &support).unwrap();
        support.sort_unstable();
        for (r, &i) in support.iter().enumerate() {
            prop_assert_eq!(out.row(r), x.row(i));
        }
    }

    #[test]
    fn accuracy_is_permutation_equivariant(
        pairs in prop::collection::vec((0usize..4, 0usize..4), 1..40),
        seed in any::<u64>(),
    ) {
        use rand::{seq::SliceRandom, SeedableRng};
        let (p, t): (Vec<usize>, Vec<usize>) = pairs.iter().copied().unzip();
        let mut shuffled = pairs.clone();
        shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        let (ps, ts): (Vec<usize>, Vec<usize>) = shuffled.into_iter().unzip();
        prop_assert_eq!(accuracy(&p, &t).unwrap(), accuracy(&ps, &ts).unwrap());
    }

    #[test]
    fn knn_one_on_training_set_is_exact(x in matrix(3, 15), labels in prop::collection::vec(0usize..3, 15)) {
        // distinct columns almost surely; guard anyway
        let distinct = (0..15).all(|a| (0..a).all(|b| x.column(a) != x.column(b)));
        prop_assume!(distinct);
        prop_assert_eq!(knn_predict(&x, &labels, &x, 1).unwrap(), labels);
    }

    #[test]
    fn softmax_argmax_ignores_common_shift(
        w in matrix(3, 4),
        b in prop::collection::vec(-5.0f64..5.0, 4),
        x in matrix(3, 10),
        shift in -100.0f64..100.0,
    ) {
        let model = SoftmaxModel { weights: w.clone(), bias: DVector::from_vec(b.clone()) };
        let shifted = SoftmaxModel {
            weights: w,
            bias: DVector::from_vec(b.iter().map(|v| v + shift).collect()),
        };
        let a = softmax_predict(&model, &x).unwrap();
        let s = softmax_predict(&shifted, &x).unwrap();
        // shifting can only change the outcome through roundoff at near-ties
        let scores = model.weights.tr_mul(&x);
        for j in 0..10 {
            if a[j] != s[j] {
                let gap = (scores[(a[j], j)] + b[a[j]]) - (scores[(s[j], j)] + b[s[j]]);
                prop_assert!(gap.abs() <= 1e-12 * shift.abs().max(1.0) * 10.0);
            }
        }
    }

    #[test]
    fn csv_round_trip(x in sized_matrix(4, 10), seed in 0u64..1000) {
        let n = x.ncols();
        prop_assume!(n >= 2);
        let labels: Vec<usize> = (0..n).map(|j| ((j as u64 + seed) % 2) as usize).collect();
        let ds = Dataset::new(x, labels, 2).unwrap();
        for header in [false, true] {
            let text = render_csv(&ds, header);
            let back = parse_csv(&text, Path::new("mem"), &LoadOptions { has_header: header, ..Default::default() }).unwrap();
            prop_assert_eq!(back.features(), ds.features());
            prop_assert_eq!(back.sample_count(), ds.sample_count());
            // first-appearance relabelling is a bijection on the original labels
            let first = ds.labels()[0];
            for (a, b) in ds.labels().iter().zip(back.labels()) {
                prop_assert_eq!(*a == first, *b == 0);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn synthetic_is_deterministic(seed in any::<u64>(), s in 0usize..6) {
        let spec = SyntheticSpec { features: 10, samples: 40, classes: 3, support_size: s, noise_sigma: 0.1, seed };
        let a = generate_synthetic(&spec).unwrap();
        let b = generate_synthetic(&spec).unwrap();
        prop_assert_eq!(a.dataset.features(), b.dataset.features());
        prop_assert_eq!(a.dataset.labels(), b.dataset.labels());
        prop_assert_eq!(a.support().len(), s);
    }

    #[test]
    fn oracle_lower_bounds_every_path_point(seed in any::<u64>(), algorithm in prop_oneof![Just(Algorithm::Hiht), Just(Algorithm::Ahiht)]) {
        let spec = SyntheticSpec { features: 6, samples: 24, classes: 3, support_size: 2, noise_sigma: 0.1, seed };
        let data = generate_synthetic(&spec).unwrap();
        let centered = center(&data.dataset).unwrap();
        let config = resolve_config(&SolverConfig::default(), &centered).unwrap();
        let path = l20fs::solver::solve(algorithm, &centered, &config).unwrap();
        for p in &path.points {
            let oracle = brute_force_oracle(&centered, p.lambda, 12).unwrap();
            prop_assert!(oracle.objective <= p.objective + 1e-9 * p.objective.abs().max(1.0));
        }
    }

    #[test]
    fn homotopy_steps_never_end_above_their_warm_start(seed in any::<u64>()) {
        let spec = SyntheticSpec { features: 12, samples: 30, classes: 2, support_size: 3, noise_sigma: 0.2, seed };
        let data = generate_synthetic(&spec).unwrap();
        let centered = center(&data.dataset).unwrap();
        let config = resolve_config(&SolverConfig::default(), &centered).unwrap();
        let path = hiht_solve(&centered, &config).unwrap();
        for pair in path.points.windows(2) {
            let next = &pair[1];
            let warm = objective_value(&pair[0].weights, next.lambda, &centered).unwrap();
            prop_assert!(next.objective <= warm + 1e-10 * warm.abs());
            prop_assert_eq!(next.trace[0], warm);
        }
    }
}
