mod common;

use btgf::bounds::{constructed_pair, trace_bounds};
use btgf::data::{generate_sbm, SbmConfig};
use btgf::filter::{smoothed_views, FilterConfig, FilterKind};
use btgf::metrics::ClusterEvaluation;
use btgf::model::{train, train_on_views, LossTerms, Objective, Parameters, TrainConfig};
use btgf::{DenseMatrix, Error, MultiRelationalGraph};
use common::{gaussian, rng};

fn fixture() -> MultiRelationalGraph {
    generate_sbm(&SbmConfig::default()).unwrap()
}

fn short(epochs: usize) -> TrainConfig {
    TrainConfig {
        epochs,
        ..TrainConfig::default()
    }
}

#[test]
fn history_covers_every_epoch_and_loss_falls() {
    let out = train(&fixture(), &TrainConfig::default()).unwrap();
    assert_eq!(out.history.len(), 400);
    assert!(out.history.iter().enumerate().all(|(i, r)| r.epoch == i));
    let (first, last) = (&out.history[0], out.history.last().unwrap());
    assert!(last.total < first.total, "{} -> {}", first.total, last.total);
    for r in &out.history {
        let sum = r.feature_decorrelation + r.reconstruction + r.clustering;
        assert!((r.total - sum).abs() < 1e-9 * r.total.abs().max(1.0));
    }
    assert_eq!(out.state.epoch, 400);
    assert_eq!(out.embedding.shape(), (150, 20));
    assert_eq!(out.labels.len(), 150);
}

#[test]
fn training_is_deterministic() {
    let g = fixture();
    let a = train(&g, &short(60)).unwrap();
    let b = train(&g, &short(60)).unwrap();
    assert_eq!(a.labels, b.labels);
    assert_eq!(a.state, b.state);
    assert_eq!(a.history, b.history);
    let c = train(&g, &TrainConfig { seed: 9, ..short(60) }).unwrap();
    assert_ne!(a.state.params, c.state.params);
}

#[test]
fn encoder_is_shared_across_views() {
    let mut r = rng(0);
    let views: Vec<DenseMatrix> = (0..3).map(|_| gaussian(10, 4, &mut r)).collect();
    let objective = Objective::new(views, LossTerms::FULL).unwrap();
    let mut params = Parameters {
        encoder: gaussian(4, 2, &mut r),
        decoder: gaussian(2, 4, &mut r),
        centers: gaussian(2, 6, &mut r),
    };
    let before: Vec<DenseMatrix> = {
        let fwd = objective.forward(&params).unwrap();
        (0..3).map(|v| fwd.view_embedding(v).clone()).collect()
    };
    params.encoder[(0, 0)] += 1.0;
    let fwd = objective.forward(&params).unwrap();
    for (v, z) in before.iter().enumerate() {
        assert_ne!(fwd.view_embedding(v), z, "view {v}");
        assert_eq!(fwd.view_embedding(v), &(&objective.smoothed()[v] * &params.encoder));
    }
}

#[test]
#[ignore = "does not reproduce: on the SBM fixture the (I - L/2)^2 filter ends with lower L_FD for every gamma in the grid"]
fn learned_filter_decorrelates_better_than_low_pass() {
    let g = fixture();
    let learned = train(&g, &TrainConfig::default()).unwrap();
    let low_pass = train(
        &g,
        &TrainConfig {
            filter: FilterConfig::of_kind(FilterKind::LowPass),
            ..TrainConfig::default()
        },
    )
    .unwrap();
    let fd = |h: &[btgf::model::LossReport]| h.last().unwrap().feature_decorrelation;
    assert!(fd(&learned.history) < fd(&low_pass.history), "{} vs {}", fd(&learned.history), fd(&low_pass.history));
}

#[test]
fn bound_traces_on_constructed_views() {
    let g = fixture();
    let x = smoothed_views(&g, &FilterConfig::default()).unwrap().remove(0);
    let mut r = rng(1);
    let cfg = short(80);

    let negated = vec![x.clone(), constructed_pair(&x, -1.0, 0.5, &mut r)];
    let out = train_on_views(negated, 3, &cfg).unwrap();
    assert!(out.pair_min_eigs[0] <= 0.0);
    let trace = trace_bounds(&out.history, &out.pair_min_eigs).unwrap();
    assert_eq!(trace.epochs.len(), 80);
    assert!(trace.records.iter().all(|rec| rec.barlow_twins >= rec.lower - 1e-9));

    let same = vec![x.clone(), constructed_pair(&x, 1.0, 0.5, &mut r)];
    let out = train_on_views(same, 3, &cfg).unwrap();
    assert!(out.pair_min_eigs[0] >= 0.0);
    let trace = trace_bounds(&out.history, &out.pair_min_eigs).unwrap();
    assert!(trace.records.iter().all(|rec| rec.barlow_twins <= rec.upper + 1e-9));
}

#[test]
fn single_view_omits_decorrelation() {
    let g = fixture().select_views(&[0]).unwrap();
    let out = train(&g, &short(50)).unwrap();
    assert!(out.decorrelation_omitted);
    assert!(out.history.iter().all(|r| r.feature_decorrelation == 0.0 && r.pairs.is_empty()));
}

#[test]
fn without_decorrelation_still_trains_multi_view() {
    let g = fixture();
    let cfg = TrainConfig {
        terms: LossTerms::WITHOUT_DECORRELATION,
        ..short(50)
    };
    let out = train(&g, &cfg).unwrap();
    assert!(!out.decorrelation_omitted);
    assert!(out.history.iter().all(|r| r.feature_decorrelation == 0.0));
    // bounds are still traced for diagnostics
    assert_eq!(out.history[0].pairs.len(), 1);
}

#[test]
fn target_refresh_interval_is_respected() {
    let g = fixture();
    let cfg = TrainConfig {
        target_refresh_interval: 25,
        ..short(100)
    };
    let out = train(&g, &cfg).unwrap();
    let truth = g.labels().unwrap();
    assert!(ClusterEvaluation::evaluate(&out.labels, truth).unwrap().acc > 0.9);
}

#[test]
fn zero_attributes_collapse_with_degenerate_column() {
    let g = fixture();
    let zero = DenseMatrix::zeros(g.n_nodes(), g.n_features());
    let g = g.with_attributes(zero).unwrap();
    assert!(matches!(train(&g, &short(10)), Err(Error::DegenerateColumn { .. })));
}

#[test]
fn constant_attributes_never_produce_nan() {
    let g = fixture();
    let constant = DenseMatrix::from_element(g.n_nodes(), g.n_features(), 0.7);
    let g = g.with_attributes(constant).unwrap();
    match train(&g, &short(20)) {
        Ok(out) => {
            let eval = ClusterEvaluation::evaluate(&out.labels, g.labels().unwrap()).unwrap();
            assert!([eval.acc, eval.f1, eval.nmi, eval.ari].iter().all(|v| v.is_finite()));
        }
        Err(e) => assert!(e.exit_code() == 3, "{e}"),
    }
}

#[test]
fn invalid_configs_are_rejected() {
    let g = fixture();
    assert!(matches!(train(&g, &short(0)), Err(Error::Config(_))));
    let bad = TrainConfig {
        filter: FilterConfig::learned(-1.0, 2),
        ..short(5)
    };
    assert!(matches!(train(&g, &bad), Err(Error::Parameter(_))));
}
