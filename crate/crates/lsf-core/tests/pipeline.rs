//! Integration tests for the stage runner: artifact idempotence, actionable
//! missing-artifact errors, benchmark contract, and report consistency.

use lsf_core::dataset::Task;
use lsf_core::pipeline::{
    benchmark, comparison_report, run_stage, run_through, PipelineConfig, PipelineError, Stage,
};
use lsf_core::synth::{arrhythmia_demo_names, write_synth_dataset, SynthSpec};
use std::path::PathBuf;

fn temp_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("lsf_pipe_{name}_{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn small_dataset(name: &str) -> PathBuf {
    let data_dir = temp_dir(name);
    let spec = SynthSpec {
        windows_per_record: 6,
        positive_fraction: 0.5,
        seed: 21,
        ..SynthSpec::default()
    };
    write_synth_dataset(&data_dir, &arrhythmia_demo_names(2), &spec).unwrap();
    data_dir
}

fn small_config(data_dir: PathBuf, out_dir: PathBuf) -> PipelineConfig {
    let mut config = PipelineConfig::new(data_dir, out_dir, Task::Arrhythmia, 3);
    config.hidden_size = 6;
    config.max_epochs = 3;
    config.batch_size = 16;
    config
}

#[test]
fn rerun_with_unchanged_inputs_is_byte_identical() {
    let data_dir = small_dataset("idem_data");
    let out_dir = temp_dir("idem_out");
    let config = small_config(data_dir, out_dir.clone());

    run_stage(Stage::Ingest, &config).unwrap();
    run_stage(Stage::Preprocess, &config).unwrap();
    let manifest_1 = std::fs::read(out_dir.join("features/manifest.txt")).unwrap();
    let segments_1 = std::fs::read(out_dir.join("features/segments.csv")).unwrap();

    run_stage(Stage::Preprocess, &config).unwrap();
    let manifest_2 = std::fs::read(out_dir.join("features/manifest.txt")).unwrap();
    let segments_2 = std::fs::read(out_dir.join("features/segments.csv")).unwrap();
    assert_eq!(manifest_1, manifest_2);
    assert_eq!(segments_1, segments_2);
}

#[test]
fn preprocess_manifest_counts_match_dataset() {
    let data_dir = small_dataset("count_data");
    let out_dir = temp_dir("count_out");
    let config = small_config(data_dir, out_dir.clone());
    run_stage(Stage::Ingest, &config).unwrap();
    run_stage(Stage::Preprocess, &config).unwrap();
    let text = std::fs::read_to_string(out_dir.join("features/segments.csv")).unwrap();
    // 9 records (2 train + 7 test) x 6 windows, plus the header line.
    assert_eq!(text.lines().count(), 1 + 9 * 6);
}

#[test]
fn evaluate_without_model_names_the_missing_stage() {
    let data_dir = small_dataset("missing_data");
    let out_dir = temp_dir("missing_out");
    let config = small_config(data_dir, out_dir);
    run_stage(Stage::Ingest, &config).unwrap();
    run_stage(Stage::Preprocess, &config).unwrap();
    run_stage(Stage::Split, &config).unwrap();
    match run_stage(Stage::Evaluate, &config) {
        Err(PipelineError::MissingArtifact { run_first, .. }) => {
            assert_eq!(run_first, "train-lstm");
        }
        other => panic!("expected missing-artifact error, got {other:?}"),
    }
    let err = run_stage(Stage::Evaluate, &config).unwrap_err();
    assert!(err.to_string().contains("run train-lstm first"), "{err}");
}

#[test]
fn stages_require_upstream_artifacts_in_order() {
    let data_dir = small_dataset("order_data");
    let out_dir = temp_dir("order_out");
    let config = small_config(data_dir, out_dir);
    match run_stage(Stage::Preprocess, &config) {
        Err(PipelineError::MissingArtifact { run_first, .. }) => assert_eq!(run_first, "ingest"),
        other => panic!("expected missing-artifact error, got {other:?}"),
    }
    run_stage(Stage::Ingest, &config).unwrap();
    match run_stage(Stage::Split, &config) {
        Err(PipelineError::MissingArtifact { run_first, .. }) => {
            assert_eq!(run_first, "preprocess")
        }
        other => panic!("expected missing-artifact error, got {other:?}"),
    }
}

#[test]
fn benchmark_rejects_tiny_sample_counts() {
    let data_dir = small_dataset("benchn_data");
    let out_dir = temp_dir("benchn_out");
    let config = small_config(data_dir, out_dir);
    run_through(Stage::Evaluate, &config).unwrap();
    assert!(matches!(
        benchmark(&config, 99),
        Err(PipelineError::InvalidParam(_))
    ));
    assert!(benchmark(&config, 100).is_ok());
}

#[test]
fn benchmark_runs_agree_on_mean_within_20_percent() {
    let data_dir = small_dataset("bench2_data");
    let out_dir = temp_dir("bench2_out");
    let config = small_config(data_dir, out_dir);
    run_through(Stage::Evaluate, &config).unwrap();
    let a = benchmark(&config, 300).unwrap();
    let b = benchmark(&config, 300).unwrap();
    let ratio = a.total.mean / b.total.mean;
    assert!(
        (0.8..=1.25).contains(&ratio),
        "means {} vs {} (ratio {ratio})",
        a.total.mean,
        b.total.mean
    );
    // The forward pass dominates; report the ordering rather than assert it.
    println!(
        "stage means: preprocess {:.6} lstm {:.6} pool {:.6} svm {:.6}",
        a.preprocess.mean, a.lstm_forward.mean, a.pooling.mean, a.svm_score.mean
    );
}

#[test]
fn report_markdown_and_csv_agree_numerically() {
    let data_dir = small_dataset("report_data");
    let out_dir = temp_dir("report_out");
    let config = small_config(data_dir, out_dir.clone());
    run_through(Stage::Evaluate, &config).unwrap();
    run_stage(Stage::Report, &config).unwrap();

    let comparison = comparison_report(&config).unwrap();
    let md = std::fs::read_to_string(out_dir.join("report/report.md")).unwrap();
    let csv = std::fs::read_to_string(out_dir.join("report/report.csv")).unwrap();
    // Five metric columns for both rows in both formats.
    for row in &comparison.rows {
        let ap = format!("{:.4}", row.ap);
        let auc = format!("{:.4}", row.auc_roc);
        assert!(md.contains(&ap) && csv.contains(&ap), "ap {ap}");
        assert!(md.contains(&auc) && csv.contains(&auc), "auc {auc}");
    }
    assert!(md.contains("| LSF |") && md.contains("| baseline |"));
    let header = csv.lines().next().unwrap();
    assert_eq!(header, "model,accuracy,recall,specificity,auc_roc,ap");
}

#[test]
fn export_features_emits_vectors_for_every_split() {
    let data_dir = small_dataset("export_data");
    let out_dir = temp_dir("export_out");
    let config = small_config(data_dir, out_dir.clone());
    run_through(Stage::Evaluate, &config).unwrap();
    run_stage(Stage::ExportFeatures, &config).unwrap();
    let csv = std::fs::read_to_string(out_dir.join("export/vectors.csv")).unwrap();
    let mut lines = csv.lines();
    let header = lines.next().unwrap();
    // split,row,label + hidden_size feature columns.
    assert_eq!(header.split(',').count(), 3 + config.hidden_size);
    let mut split_seen = [false; 3];
    for line in lines {
        match line.split(',').next().unwrap() {
            "train" => split_seen[0] = true,
            "val" => split_seen[1] = true,
            "test" => split_seen[2] = true,
            other => panic!("unexpected split {other}"),
        }
    }
    assert_eq!(split_seen, [true, true, true]);
}

#[test]
fn annotation_only_record_is_excluded_with_warning() {
    let data_dir = small_dataset("annonly_data");
    // A header plus annotations but no signal data, as the AFIB database
    // ships for two of its records.
    std::fs::write(data_dir.join("00735.hea"), "00735 2 250 100\n00735.dat 212 200 12 0 0 0 0\n00735.dat 212 200 12 0 0 0 0\n").unwrap();
    std::fs::write(data_dir.join("00735.atr"), [0u8, 0u8]).unwrap();
    let out_dir = temp_dir("annonly_out");
    let config = small_config(data_dir, out_dir.clone());
    let report = run_stage(Stage::Ingest, &config).unwrap();
    assert!(
        report.messages.iter().any(|m| m.contains("00735") && m.contains("excluded")),
        "{:?}",
        report.messages
    );
    let records = std::fs::read_to_string(out_dir.join("ingest/records.csv")).unwrap();
    assert!(!records.contains("00735"));
}

#[test]
fn afib_task_runs_end_to_end() {
    let data_dir = temp_dir("afib_data");
    let spec = SynthSpec {
        windows_per_record: 8,
        positive_fraction: 0.5,
        task: Task::Afib,
        seed: 12,
        ..SynthSpec::default()
    };
    write_synth_dataset(
        &data_dir,
        &lsf_core::synth::afib_demo_names(3),
        &spec,
    )
    .unwrap();
    let out_dir = temp_dir("afib_out");
    let mut config = PipelineConfig::new(data_dir, out_dir.clone(), Task::Afib, 12);
    config.hidden_size = 6;
    config.max_epochs = 3;
    config.batch_size = 16;
    run_through(Stage::Evaluate, &config).unwrap();
    let split = std::fs::read_to_string(out_dir.join("split/split.txt")).unwrap();
    assert!(split.contains("test 04746 05121 06453 07879"));
    assert!(out_dir.join("eval/lsf.txt").exists());
}

#[test]
fn convergence_warning_surfaces_in_stage_report() {
    let data_dir = small_dataset("conv_data");
    let out_dir = temp_dir("conv_out");
    let mut config = small_config(data_dir, out_dir);
    run_through(Stage::ExtractFeatures, &config).unwrap();
    // Starve the solver so candidates hit the iteration cap.
    config.svm_max_iterations = 1;
    let report = run_stage(Stage::TrainSvm, &config).unwrap();
    assert!(report.convergence_warning);
}
