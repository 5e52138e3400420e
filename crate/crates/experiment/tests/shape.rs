use std::fs;

use tfpaas_experiment::{
    emit_plot_files, run_modes_experiment, ExperimentConfig, ExperimentRow, StubService,
    Submitter, ValidationMode, EXPERIMENT_SCRIPT,
};

fn time_of(rows: &[ExperimentRow], mode: ValidationMode, n: u32) -> f64 {
    rows.iter()
        .find(|r| r.mode == mode && r.n_requests == n)
        .unwrap()
        .total_time_ms
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn small_rest_separates_modes() {
    let cfg = ExperimentConfig {
        request_counts: vec![10],
        validation_delay_ms: 50,
        rest_delay_ms: 10,
        repetitions: 3,
    };
    let rows = run_modes_experiment(&cfg).await.unwrap();
    let cloud = time_of(&rows, ValidationMode::Cloud, 10);
    let plugin = time_of(&rows, ValidationMode::Plugin, 10);
    // Analytic model: 10 x 60 ms against 10 x 10 ms.
    assert!(cloud >= 600.0, "{cloud}");
    assert!(plugin >= 100.0, "{plugin}");
    assert!(cloud / plugin >= 1.5, "{cloud} / {plugin}");
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn zero_validation_cost_makes_modes_agree() {
    let cfg = ExperimentConfig {
        request_counts: vec![10],
        validation_delay_ms: 0,
        rest_delay_ms: 20,
        repetitions: 3,
    };
    let rows = run_modes_experiment(&cfg).await.unwrap();
    let cloud = time_of(&rows, ValidationMode::Cloud, 10);
    let plugin = time_of(&rows, ValidationMode::Plugin, 10);
    assert!((cloud - plugin).abs() / plugin <= 0.2, "{cloud} vs {plugin}");
}

#[tokio::test]
async fn plugin_mode_never_sends_invalid_scripts() {
    let stub = StubService::start(
        ValidationMode::Plugin,
        std::time::Duration::ZERO,
        std::time::Duration::ZERO,
    )
    .await
    .unwrap();
    let broken = EXPERIMENT_SCRIPT.replace("<response>1000</response>", "<response>0</response>");
    let err = Submitter::default().submit(&stub, &broken).await.unwrap_err();
    assert_eq!(err.code(), "E_INVALID_SCRIPT");
    assert_eq!(stub.received(), 0);
    Submitter::default().submit(&stub, EXPERIMENT_SCRIPT).await.unwrap();
    assert_eq!(stub.received(), 1);
}

#[tokio::test]
async fn cloud_mode_rejects_on_the_service() {
    let stub = StubService::start(
        ValidationMode::Cloud,
        std::time::Duration::ZERO,
        std::time::Duration::ZERO,
    )
    .await
    .unwrap();
    let broken = EXPERIMENT_SCRIPT.replace("<response>1000</response>", "<response>0</response>");
    assert!(Submitter::default().submit(&stub, &broken).await.is_err());
    assert_eq!(stub.received(), 1);
}

fn row(n: u32, mode: ValidationMode, t: f64) -> ExperimentRow {
    ExperimentRow {
        n_requests: n,
        mode,
        total_time_ms: t,
    }
}

#[test]
fn plot_files_are_sorted_and_deterministic() {
    let rows = vec![
        row(20, ValidationMode::Cloud, 1200.0),
        row(10, ValidationMode::Cloud, 600.5),
        row(10, ValidationMode::Plugin, 100.25),
        row(20, ValidationMode::Plugin, 200.0),
    ];
    let a = tempfile::tempdir().unwrap();
    let paths = emit_plot_files(&rows, a.path()).unwrap();
    assert_eq!(paths.len(), 3);
    assert_eq!(
        fs::read_to_string(a.path().join("cloud.dat")).unwrap(),
        "10 600.500\n20 1200.000\n"
    );
    assert_eq!(
        fs::read_to_string(a.path().join("plugin.dat")).unwrap(),
        "10 100.250\n20 200.000\n"
    );
    let gp = fs::read_to_string(a.path().join("response_time.gp")).unwrap();
    assert!(gp.contains("'cloud.dat'") && gp.contains("'plugin.dat'"));

    let b = tempfile::tempdir().unwrap();
    let mut reversed = rows.clone();
    reversed.reverse();
    emit_plot_files(&reversed, b.path()).unwrap();
    for name in ["cloud.dat", "plugin.dat", "response_time.gp"] {
        assert_eq!(
            fs::read(a.path().join(name)).unwrap(),
            fs::read(b.path().join(name)).unwrap()
        );
    }
    assert_eq!(emit_plot_files(&[], b.path()).unwrap_err().code(), "E_CONFIG");
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn relative_gap_shrinks_as_rest_grows() {
    let mut gaps = Vec::new();
    for rest in [10, 100, 400] {
        let cfg = ExperimentConfig {
            request_counts: vec![5],
            validation_delay_ms: 50,
            rest_delay_ms: rest,
            repetitions: 3,
        };
        let rows = run_modes_experiment(&cfg).await.unwrap();
        let cloud = time_of(&rows, ValidationMode::Cloud, 5);
        let plugin = time_of(&rows, ValidationMode::Plugin, 5);
        gaps.push((cloud - plugin) / plugin);
    }
    assert!(gaps.windows(2).all(|w| w[1] <= w[0]), "{gaps:?}");
}
