mod common;

use btgf::bounds::{definiteness, inner_product_matrix, Definiteness, DEFINITENESS_TOLERANCE};
use btgf::filter::{solve_filter_naive, solve_filter_woodbury, FilterConfig};
use btgf::graph::{laplacian, low_pass_filter, mix_pass_filter, normalize_adjacency};
use btgf::losses::{
    barlow_twins, cross_correlation, kl_clustering_loss, soft_assignment, target_distribution, BARLOW_LAMBDA,
};
use btgf::metrics::{ari, hungarian_accuracy, nmi};
use btgf::model::assign_labels;
use btgf::DenseMatrix;
use common::{gaussian, random_graph, rel_err, rng};
use proptest::prelude::*;

fn graph(n: usize, p: f64, seed: u64) -> DenseMatrix {
    random_graph(n, p, &mut rng(seed))
}

fn sym_err(m: &DenseMatrix) -> f64 {
    (m - m.transpose()).amax()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn normalized_adjacency_spectrum(n in 2usize..20, p in 0.0f64..1.0, seed in any::<u64>()) {
        let a = normalize_adjacency(&graph(n, p, seed)).unwrap();
        prop_assert!(sym_err(&a) < 1e-10);
        let eig = a.clone().symmetric_eigen().eigenvalues;
        prop_assert!(eig.amax() <= 1.0 + 1e-9);
        let l_eig = laplacian(&a).unwrap().symmetric_eigen().eigenvalues;
        prop_assert!(l_eig.iter().all(|&e| (-1e-9..=2.0 + 1e-9).contains(&e)));
        prop_assert!(a.diagonal().iter().all(|&d| d > 0.0));
    }

    #[test]
    fn low_pass_orders_compose(n in 2usize..15, k1 in 1usize..4, k2 in 1usize..4, seed in any::<u64>()) {
        let l = laplacian(&normalize_adjacency(&graph(n, 0.4, seed)).unwrap()).unwrap();
        let lhs = low_pass_filter(&l, k1 + k2).unwrap();
        let rhs = low_pass_filter(&l, k1).unwrap() * low_pass_filter(&l, k2).unwrap();
        prop_assert!((&lhs - &rhs).amax() < 1e-10);
        prop_assert!(sym_err(&lhs) < 1e-10);
        prop_assert!(sym_err(&mix_pass_filter(&l).unwrap()) < 1e-10);
    }

    #[test]
    fn woodbury_matches_naive(n in 2usize..30, f in 1usize..10, g in 0usize..4, seed in any::<u64>()) {
        let mut r = rng(seed);
        let x = gaussian(n, f, &mut r);
        let l = laplacian(&normalize_adjacency(&random_graph(n, 0.3, &mut r)).unwrap()).unwrap();
        let cfg = FilterConfig::learned([0.1, 1.0, 10.0, 100.0][g], 2);
        let naive = solve_filter_naive(&x, &l, &cfg).unwrap();
        let wood = solve_filter_woodbury(&x, &l, &cfg).unwrap();
        prop_assert!(rel_err(&wood, &naive) < 1e-8);
    }

    #[test]
    fn correlation_entries_are_cosines(n in 3usize..20, d in 1usize..5, seed in any::<u64>()) {
        let mut r = rng(seed);
        let (z1, z2) = (gaussian(n, d, &mut r), gaussian(n, d, &mut r));
        let m = cross_correlation(&z1, &z2).unwrap();
        prop_assert!(m.iter().all(|v| v.abs() <= 1.0 + 1e-9));
        prop_assert!(barlow_twins(&z1, &z2, BARLOW_LAMBDA).unwrap() >= 0.0);
        // Mᵀ leaves the loss unchanged
        let swapped = barlow_twins(&z2, &z1, BARLOW_LAMBDA).unwrap();
        prop_assert!((swapped - barlow_twins(&z1, &z2, BARLOW_LAMBDA).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn self_correlation_off_diagonal_vanishes_for_orthogonal_columns(n in 3usize..12, d in 1usize..4, seed in any::<u64>()) {
        prop_assume!(d <= n);
        let q = gaussian(n, d, &mut rng(seed)).qr().q();
        prop_assert!(barlow_twins(&q, &q, BARLOW_LAMBDA).unwrap() < 1e-20);
    }

    #[test]
    fn assignments_are_distributions(n in 1usize..20, c in 2usize..5, seed in any::<u64>()) {
        let mut r = rng(seed);
        let q = soft_assignment(&gaussian(n, 4, &mut r), &gaussian(c, 4, &mut r)).unwrap();
        let p = target_distribution(&q).unwrap();
        for m in [&q, &p] {
            prop_assert!(m.row_iter().all(|row| (row.sum() - 1.0).abs() < 1e-9));
            prop_assert!(m.iter().all(|&v| v > 0.0 && v <= 1.0));
        }
        prop_assert!(kl_clustering_loss(&p, &q).unwrap() >= -1e-15);
        prop_assert!(kl_clustering_loss(&q, &q).unwrap().abs() < 1e-12);
        prop_assert_eq!(assign_labels(&q).len(), n);
    }

    #[test]
    fn gram_matrices_are_psd(n in 1usize..20, f in 1usize..6, seed in any::<u64>()) {
        let x = gaussian(n, f, &mut rng(seed));
        let h = inner_product_matrix(&x, &x).unwrap();
        prop_assert_eq!(definiteness(&h, DEFINITENESS_TOLERANCE).unwrap(), Definiteness::PositiveSemiDefinite);
    }

    #[test]
    fn metrics_are_permutation_invariant(labels in proptest::collection::vec((0usize..4, 0usize..4), 2..30)) {
        let (pred, truth): (Vec<usize>, Vec<usize>) = labels.into_iter().unzip();
        let relabeled: Vec<usize> = pred.iter().map(|&p| 3 - p).collect();
        let acc = hungarian_accuracy(&pred, &truth).unwrap().0;
        prop_assert_eq!(acc, hungarian_accuracy(&relabeled, &truth).unwrap().0);
        prop_assert!((nmi(&pred, &truth).unwrap() - nmi(&relabeled, &truth).unwrap()).abs() < 1e-12);
        prop_assert!((ari(&pred, &truth).unwrap() - ari(&truth, &pred).unwrap()).abs() < 1e-12);
    }
}
