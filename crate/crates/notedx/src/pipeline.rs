//! End-to-end experiment orchestration: preprocess → embed-train → train →
//! baselines → evaluate → compare → visualize-filters, writing every
//! artifact plus a manifest into one output directory.
//!
//! Stage failures are reported with the stage name; artifacts from completed
//! stages are left in place. The manifest carries the config hash, crate
//! version, and seeds — no timestamps — so a deterministic rerun is
//! byte-identical.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::baselines::{run_baseline_experiment, BaselineKind};
use crate::cnn::{corpus_classes_and_len, run_experiment, SeedRun};
use crate::config::RunConfig;
use crate::embed::{train_skipgram, EmbeddingStore};
use crate::error::{Error, Result};
use crate::interpret;
use crate::metrics::{self, welch_t_test, MetricsReport, WelchTest};
use crate::textprep::{self, Document};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub config_hash: String,
    pub crate_version: String,
    pub format_version: u32,
    pub seeds: Vec<u64>,
    pub deterministic: bool,
    pub stages: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ModelReportFile {
    model: String,
    per_seed: Vec<MetricsReport>,
    aggregate: metrics::AggregateReport,
}

#[derive(Debug, Serialize, Deserialize)]
struct CompareFile {
    metric: String,
    comparisons: Vec<CompareEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CompareEntry {
    a: String,
    b: String,
    a_mean: f64,
    b_mean: f64,
    test: WelchTest,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

fn stage<T>(name: &'static str, result: Result<T>) -> Result<T> {
    result.map_err(|e| e.in_stage(name))
}

/// Artifacts produced by [`run`], for callers that keep going in-process.
pub struct PipelineOutcome {
    pub out_dir: PathBuf,
    pub cnn_runs: Vec<SeedRun>,
    pub manifest: Manifest,
}

/// Run the whole experiment described by `config`.
pub fn run(config: &RunConfig) -> Result<PipelineOutcome> {
    config.validate()?;
    // stage 0: the corpus must exist before anything is written
    let corpus_path = Path::new(&config.corpus);
    if config.corpus.is_empty() || !corpus_path.exists() {
        return Err(Error::InvalidArgument(format!(
            "corpus file {:?} does not exist",
            config.corpus
        ))
        .in_stage("corpus"));
    }
    let out_dir = PathBuf::from(&config.out_dir);
    std::fs::create_dir_all(&out_dir)?;
    let seeds: Vec<u64> = (0..config.n_seeds).map(|i| config.seed + i as u64).collect();
    let mut stages_done: Vec<String> = Vec::new();
    let manifest_path = out_dir.join("manifest.json");
    let mut manifest = Manifest {
        config_hash: config.hash(),
        crate_version: env!("CARGO_PKG_VERSION").to_string(),
        format_version: crate::FORMAT_VERSION,
        seeds: seeds.clone(),
        deterministic: config.deterministic,
        stages: Vec::new(),
    };
    std::fs::write(out_dir.join("config.resolved"), config.canonical())?;

    // preprocess
    let preprocessed: Vec<Document> = {
        let notes = stage("preprocess", textprep::read_raw_corpus(corpus_path))?;
        let opts = stage("preprocess", config.preprocess_options())?;
        let out = stage("preprocess", textprep::preprocess_corpus(&notes, &opts))?;
        stage(
            "preprocess",
            textprep::write_documents(&out_dir.join("preprocessed.jsonl"), &out.documents),
        )?;
        write_json(
            &out_dir.join("preprocess_meta.json"),
            &serde_json::json!({"l_max": out.l_max, "labels": out.labels}),
        )?;
        out.documents
    };
    stages_done.push("preprocess".into());
    manifest.stages = stages_done.clone();
    write_json(&manifest_path, &manifest)?;

    // embed-train
    let store: EmbeddingStore = {
        let sentences: Vec<Vec<String>> =
            preprocessed.iter().map(|d| d.tokens.clone()).collect();
        let outcome = stage("embed-train", train_skipgram(&sentences, &config.skipgram_config()))?;
        stage("embed-train", outcome.store.save(&out_dir.join("embeddings.bin")))?;
        stage(
            "embed-train",
            outcome.store.save_text(&out_dir.join("embeddings.txt")),
        )?;
        let losses = outcome.epoch_losses;
        write_json(&out_dir.join("embed_history.json"), &losses)?;
        outcome.store
    };
    stages_done.push("embed-train".into());
    manifest.stages = stages_done.clone();
    write_json(&manifest_path, &manifest)?;

    // train (n seeds)
    let cnn_config = stage("train", config.cnn_config())?;
    let cnn_runs = stage(
        "train",
        run_experiment(
            &preprocessed,
            &cnn_config,
            Some(&store),
            config.n_seeds,
            config.ratios(),
        ),
    )?;
    for run in &cnn_runs {
        stage(
            "train",
            run.model
                .save(&out_dir.join(format!("cnn_seed{}.ckpt", run.seed))),
        )?;
        stage(
            "train",
            run.model
                .write_history_csv(&out_dir.join(format!("history_seed{}.csv", run.seed))),
        )?;
        stage(
            "train",
            metrics::write_predictions(
                &out_dir.join(format!("pred_cnn_seed{}.jsonl", run.seed)),
                &run.predictions,
            ),
        )?;
    }
    stages_done.push("train".into());
    manifest.stages = stages_done.clone();
    write_json(&manifest_path, &manifest)?;

    // baselines
    let (classes, _) = stage("baseline", corpus_classes_and_len(&preprocessed, config.top_k))?;
    let mut baseline_reports: Vec<(&'static str, Vec<MetricsReport>)> = Vec::new();
    for (name, kind) in [("logreg", BaselineKind::Logreg), ("mlp", BaselineKind::Mlp)] {
        let bl_config = stage("baseline", config.baseline_config(kind))?;
        let runs = stage(
            "baseline",
            run_baseline_experiment(
                &preprocessed,
                &classes,
                &bl_config,
                config.n_seeds,
                config.ratios(),
            ),
        )?;
        for run in &runs {
            stage(
                "baseline",
                metrics::write_predictions(
                    &out_dir.join(format!("pred_{name}_seed{}.jsonl", run.seed)),
                    &run.predictions,
                ),
            )?;
        }
        baseline_reports.push((name, runs.into_iter().map(|r| r.report).collect()));
    }
    stages_done.push("baseline".into());
    manifest.stages = stages_done.clone();
    write_json(&manifest_path, &manifest)?;

    // evaluate: per-seed reports plus multi-seed aggregates per model
    let cnn_reports: Vec<MetricsReport> = cnn_runs.iter().map(|r| r.report.clone()).collect();
    let mut all_models: Vec<(&str, &[MetricsReport])> = vec![("cnn", &cnn_reports)];
    for (name, reports) in &baseline_reports {
        all_models.push((name, reports));
    }
    for (name, reports) in &all_models {
        let aggregate = stage("evaluate", metrics::aggregate_seeds(reports))?;
        write_json(
            &out_dir.join(format!("report_{name}.json")),
            &ModelReportFile {
                model: name.to_string(),
                per_seed: reports.to_vec(),
                aggregate,
            },
        )?;
    }
    stages_done.push("evaluate".into());
    manifest.stages = stages_done.clone();
    write_json(&manifest_path, &manifest)?;

    // compare: Welch's t-test on weighted F1 across seeds
    let wf1 = |reports: &[MetricsReport]| -> Vec<f64> {
        reports.iter().map(|r| r.weighted_avg.f1).collect()
    };
    let cnn_wf1 = wf1(&cnn_reports);
    let mut comparisons = Vec::new();
    for (name, reports) in &baseline_reports {
        let other = wf1(reports);
        let test = stage("compare", welch_t_test(&cnn_wf1, &other))?;
        comparisons.push(CompareEntry {
            a: "cnn".into(),
            b: name.to_string(),
            a_mean: cnn_wf1.iter().sum::<f64>() / cnn_wf1.len() as f64,
            b_mean: other.iter().sum::<f64>() / other.len() as f64,
            test,
        });
    }
    write_json(
        &out_dir.join("ttest.json"),
        &CompareFile {
            metric: "weighted_f1".into(),
            comparisons,
        },
    )?;
    stages_done.push("compare".into());
    manifest.stages = stages_done.clone();
    write_json(&manifest_path, &manifest)?;

    // visualize-filters on the first seed's model over its test partition
    {
        let first = &cnn_runs[0];
        let split = stage(
            "visualize-filters",
            textprep::split_dataset(&preprocessed, first.seed, config.ratios()),
        )?;
        let picks = interpret::sample_filters(&first.model, 2, config.seed);
        let rankings = stage(
            "visualize-filters",
            interpret::rank_ngrams(&first.model, &split.test, 10, Some(&picks)),
        )?;
        std::fs::write(out_dir.join("filters.txt"), interpret::render_table(&rankings))?;
        std::fs::write(
            out_dir.join("filters.json"),
            stage("visualize-filters", interpret::render_json(&rankings))?,
        )?;
    }
    stages_done.push("visualize-filters".into());
    manifest.stages = stages_done;
    write_json(&manifest_path, &manifest)?;

    Ok(PipelineOutcome {
        out_dir,
        cnn_runs,
        manifest,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth;

    #[allow(clippy::field_reassign_with_default)]
    fn small_config(dir: &Path) -> RunConfig {
        let mut c = RunConfig::default();
        c.corpus = dir.join("corpus.jsonl").to_string_lossy().into_owned();
        c.out_dir = dir.join("out").to_string_lossy().into_owned();
        c.top_k = 3;
        c.n_seeds = 2;
        c.seed = 5;
        c.deterministic = true;
        c.embed_dim = 12;
        c.embed_epochs = 2;
        c.embed_buckets = 1 << 14;
        c.cnn_filters = "3:4,4:4,5:4".into();
        c.cnn_max_epochs = 2;
        c.cnn_batch_size = 16;
        c.cnn_lr = 1e-3;
        c.pca_dim = 16;
        c.mlp_max_epochs = 3;
        c.synth_classes = 3;
        c.synth_docs_per_class = 60;
        c.synth_imbalanced = false;
        c.synth_len_min = 12;
        c.synth_len_max = 20;
        c.synth_noise_vocab = 40;
        c
    }

    #[test]
    fn pipeline_writes_every_artifact() {
        let dir = std::env::temp_dir().join("notedx_pipeline_test");
        let _ = std::fs::remove_dir_all(&dir);
        std::fs::create_dir_all(&dir).unwrap();
        let config = small_config(&dir);
        let spec = config.synthetic_spec();
        let notes = synth::generate(&spec).unwrap();
        synth::write_corpus(Path::new(&config.corpus), &notes).unwrap();

        let outcome = run(&config).unwrap();
        let out = &outcome.out_dir;
        for file in [
            "manifest.json",
            "config.resolved",
            "preprocessed.jsonl",
            "preprocess_meta.json",
            "embeddings.bin",
            "embeddings.txt",
            "embed_history.json",
            "cnn_seed5.ckpt",
            "cnn_seed6.ckpt",
            "history_seed5.csv",
            "pred_cnn_seed5.jsonl",
            "pred_logreg_seed5.jsonl",
            "pred_mlp_seed6.jsonl",
            "report_cnn.json",
            "report_logreg.json",
            "report_mlp.json",
            "ttest.json",
            "filters.txt",
            "filters.json",
        ] {
            assert!(out.join(file).exists(), "missing {file}");
        }
        assert_eq!(outcome.manifest.stages.len(), 7);
        assert_eq!(outcome.manifest.seeds, vec![5, 6]);
        let _ = std::fs::remove_dir_all(&dir);
    }

    #[test]
    fn missing_corpus_fails_in_stage_zero_without_writing() {
        let dir = std::env::temp_dir().join("notedx_pipeline_missing");
        let _ = std::fs::remove_dir_all(&dir);
        std::fs::create_dir_all(&dir).unwrap();
        let config = small_config(&dir);
        let err = match run(&config) {
            Err(e) => e,
            Ok(_) => panic!("pipeline should fail without a corpus"),
        };
        match &err {
            Error::Stage { stage, .. } => assert_eq!(*stage, "corpus"),
            other => panic!("unexpected error {other:?}"),
        }
        assert!(!Path::new(&config.out_dir).exists());
        let _ = std::fs::remove_dir_all(&dir);
    }

    #[test]
    fn rerun_with_same_config_reproduces_manifest_hash() {
        let dir = std::env::temp_dir().join("notedx_pipeline_rerun");
        let _ = std::fs::remove_dir_all(&dir);
        std::fs::create_dir_all(&dir).unwrap();
        let config = small_config(&dir);
        let notes = synth::generate(&config.synthetic_spec()).unwrap();
        synth::write_corpus(Path::new(&config.corpus), &notes).unwrap();
        let first = run(&config).unwrap();
        let manifest_a: Manifest = serde_json::from_str(
            &std::fs::read_to_string(first.out_dir.join("manifest.json")).unwrap(),
        )
        .unwrap();
        let second = run(&config).unwrap();
        let manifest_b: Manifest = serde_json::from_str(
            &std::fs::read_to_string(second.out_dir.join("manifest.json")).unwrap(),
        )
        .unwrap();
        assert_eq!(manifest_a.config_hash, manifest_b.config_hash);
        assert_eq!(manifest_a.config_hash, config.hash());
        let _ = std::fs::remove_dir_all(&dir);
    }
}
