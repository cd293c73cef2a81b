//! End-to-end training checks: a small regression task the model must
//! overfit, and grid-search determinism across parallel runs.

use adgn_core::graph::{generate_dataset, DatasetScale, GraphTask};
use adgn_core::training::{
    grid_search_gpp, AdamConfig, GridSpec, ModelHyper, ModelKind, TrainSettings,
};

#[test]
fn overfits_four_shortest_path_graphs() {
    let dataset = generate_dataset(GraphTask::Sssp, DatasetScale::Reduced(4), 90).unwrap();
    let hyper = ModelHyper {
        kind: ModelKind::AdgnSimple,
        layers: 10,
        dim: 20,
        epsilon: 0.1,
        gamma: 0.1,
    };
    let settings = TrainSettings::new(5000, 5000, 8, AdamConfig::new(0.02));
    let outcome =
        adgn_core::training::train_gpp(&dataset, &hyper, &settings, 3, "overfit").unwrap();
    assert!(!outcome.report.diverged);
    let first = outcome.report.epochs.first().unwrap().train_loss;
    let best = outcome
        .report
        .epochs
        .iter()
        .map(|e| e.train_loss)
        .fold(f64::INFINITY, f64::min);
    println!("four-graph overfit: epoch-1 mse {first:e}, best mse {best:e}");
    assert!(
        best < 5e-3,
        "expected training MSE below 5e-3 on four graphs, got {best:e}"
    );
    assert!(best < first, "loss never improved from {first:e}");
}

#[test]
fn grid_search_is_deterministic_across_parallel_runs() {
    let dataset = generate_dataset(GraphTask::Sssp, DatasetScale::Reduced(6), 91).unwrap();
    let spec = GridSpec {
        layers: vec![1, 2],
        dims: vec![4],
        epsilons: vec![0.1],
        gammas: vec![0.1],
        learning_rates: vec![0.003],
    };
    let settings = TrainSettings::new(3, 3, 8, AdamConfig::new(0.003));
    let run = || {
        grid_search_gpp(
            &dataset,
            &spec,
            ModelKind::AdgnSimple,
            &[1, 2],
            &settings,
            "grid",
        )
        .unwrap()
    };
    let a = run();
    let b = run();
    assert_eq!(
        serde_json::to_string(&a.ranked).unwrap(),
        serde_json::to_string(&b.ranked).unwrap()
    );
    assert_eq!(a.ranked.len(), 2);
    for point in &a.ranked {
        assert_eq!(point.total_runs, 2);
        assert_eq!(point.reports.len(), 2);
        assert!(point.best_params.is_some());
    }
    // Ranking is by mean validation MSE.
    assert!(a.ranked[0].validation_mean <= a.ranked[1].validation_mean);
}
