//! `notedx` command-line interface.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use notedx::baselines::BaselineKind;
use notedx::cnn::{corpus_classes_and_len, run_experiment, CnnModel};
use notedx::config::RunConfig;
use notedx::embed::{train_skipgram, EmbeddingStore};
use notedx::error::{Error, Result};
use notedx::metrics::{self, MetricsReport};
use notedx::synth::SyntheticSpec;
use notedx::textprep;
use notedx::{baselines, interpret, pipeline, synth};

#[derive(Parser)]
#[command(
    name = "notedx",
    version,
    about = "Diagnosis prediction from admission notes: preprocessing, embeddings, a convolutional classifier, baselines, and evaluation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Clean and label a raw corpus, truncate, and keep the top-K classes.
    Preprocess {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Alias map file: canonical<TAB>alias1<TAB>alias2...
        #[arg(long)]
        alias: Option<PathBuf>,
        /// Comma-separated admission section names (default: whole text).
        #[arg(long)]
        sections: Option<String>,
        /// Comma-separated diagnosis headers.
        #[arg(long)]
        headers: Option<String>,
        #[arg(long, default_value_t = 10)]
        top_k: usize,
        #[arg(long, default_value_t = 0.90)]
        quantile: f64,
        #[arg(long)]
        deterministic: bool,
    },
    /// Pretrain skip-gram embeddings with subword n-grams.
    EmbedTrain {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 128)]
        dim: usize,
        #[arg(long, default_value_t = 5)]
        window: usize,
        #[arg(long, default_value_t = 5)]
        negatives: usize,
        #[arg(long, default_value_t = 5)]
        epochs: usize,
        #[arg(long, default_value_t = 2)]
        min_count: u64,
        #[arg(long, default_value_t = 0.025)]
        lr: f64,
        #[arg(long, default_value_t = 1e-4)]
        subsample: f64,
        #[arg(long, default_value_t = 3)]
        min_n: usize,
        #[arg(long, default_value_t = 6)]
        max_n: usize,
        #[arg(long, default_value_t = 1 << 21)]
        buckets: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        deterministic: bool,
    },
    /// Train the convolutional classifier over several seeds.
    Train {
        #[arg(long)]
        corpus: PathBuf,
        /// Pretrained embedding store; omitted = random initialization.
        #[arg(long)]
        embeddings: Option<PathBuf>,
        /// Run-config file for hyperparameters (cnn_* keys and ratios).
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 5)]
        seeds: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        deterministic: bool,
    },
    /// Train a tf-idf/PCA baseline over several seeds.
    Baseline {
        /// `logreg` or `mlp`.
        #[arg(long)]
        model: String,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value_t = 256)]
        pca_dim: usize,
        #[arg(long, default_value_t = 5)]
        seeds: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Score prediction files and write a metrics report.
    Evaluate {
        /// One or more prediction JSON-lines files (repeatable).
        #[arg(long, required = true)]
        pred: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Welch's t-test between two models' per-seed metric samples.
    Compare {
        /// Directory of prediction files, or a file-name prefix.
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        /// `wf1` (weighted F1), `f1` (macro), or `acc`.
        #[arg(long, default_value = "wf1")]
        metric: String,
    },
    /// Rank n-gram windows by filter activation.
    VisualizeFilters {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value_t = 2)]
        per_size: usize,
        #[arg(long, default_value_t = 10)]
        top: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Optional JSON output path (the table always prints to stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a synthetic labeled corpus.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 10)]
        classes: usize,
        #[arg(long, default_value_t = 1314)]
        docs_per_class: usize,
        /// Equal class sizes instead of the default imbalanced 10-class mix.
        #[arg(long)]
        balanced: bool,
        /// Word-order-dependent signal (balanced signature pairs).
        #[arg(long)]
        order_signal: bool,
        #[arg(long, default_value_t = 300)]
        noise_vocab: usize,
        #[arg(long, default_value_t = 18)]
        len_min: usize,
        #[arg(long, default_value_t = 34)]
        len_max: usize,
        #[arg(long, default_value_t = 2)]
        inserts: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Run the whole experiment from one config file.
    Pipeline {
        #[arg(long)]
        config: PathBuf,
        /// Override the corpus path from the config.
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Override the output directory from the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    Ok(())
}

fn comma_list(raw: &Option<String>) -> Vec<String> {
    raw.as_deref()
        .unwrap_or("")
        .split(',')
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect()
}

fn load_run_config(path: &Option<PathBuf>) -> Result<RunConfig> {
    match path {
        Some(p) => RunConfig::load(p),
        None => Ok(RunConfig::default()),
    }
}

fn write_model_report(out_dir: &Path, model: &str, reports: &[MetricsReport]) -> Result<()> {
    let aggregate = metrics::aggregate_seeds(reports)?;
    let value = serde_json::json!({
        "model": model,
        "per_seed": reports,
        "aggregate": aggregate,
    });
    let path = out_dir.join(format!("report_{model}.json"));
    std::fs::write(&path, format!("{value:#}\n"))?;
    Ok(())
}

/// Prediction files named by `--a dir` (all `pred_*.jsonl` inside) or by a
/// path prefix (`dir/pred_cnn` matches `dir/pred_cnn_seed3.jsonl`).
fn prediction_files(spec: &Path) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    let (dir, prefix) = if spec.is_dir() {
        (spec.to_path_buf(), "pred_".to_string())
    } else {
        let dir = spec
            .parent()
            .filter(|p| !p.as_os_str().is_empty())
            .map(Path::to_path_buf)
            .unwrap_or_else(|| ".".into());
        let prefix = spec
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        (dir, prefix)
    };
    for entry in std::fs::read_dir(&dir)? {
        let path = entry?.path();
        let name = path.file_name().map(|s| s.to_string_lossy().into_owned());
        if let Some(name) = name {
            if name.starts_with(&prefix) && name.ends_with(".jsonl") {
                files.push(path);
            }
        }
    }
    files.sort();
    if files.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "no prediction files matching {spec:?}"
        )));
    }
    Ok(files)
}

fn metric_of(report: &MetricsReport, metric: &str) -> Result<f64> {
    Ok(match metric {
        "wf1" => report.weighted_avg.f1,
        "f1" => report.macro_avg.f1,
        "acc" => report.overall_accuracy,
        other => {
            return Err(Error::InvalidArgument(format!(
                "unknown metric {other:?} (expected wf1, f1, or acc)"
            )))
        }
    })
}

fn count_labels(docs: &[textprep::Document]) -> usize {
    docs.iter()
        .filter_map(|d| d.label.as_deref())
        .collect::<std::collections::BTreeSet<_>>()
        .len()
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Preprocess {
            corpus,
            out,
            alias,
            sections,
            headers,
            top_k,
            quantile,
            deterministic,
        } => {
            let notes = textprep::read_raw_corpus(&corpus)?;
            let mut opts = textprep::PreprocessOptions {
                admission_sections: comma_list(&sections),
                top_k,
                truncation_quantile: quantile,
                sequential: deterministic,
                ..Default::default()
            };
            if let Some(headers) = &headers {
                opts.diagnosis.headers = comma_list(&Some(headers.clone()));
            }
            if let Some(alias) = &alias {
                opts.alias = textprep::AliasMap::load(alias)?;
            }
            let result = textprep::preprocess_corpus(&notes, &opts)?;
            ensure_parent(&out)?;
            textprep::write_documents(&out, &result.documents)?;
            println!(
                "preprocessed {} documents, l_max={}, classes: {}",
                result.documents.len(),
                result.l_max,
                result.labels.join(", ")
            );
            Ok(())
        }
        Command::EmbedTrain {
            corpus,
            out,
            dim,
            window,
            negatives,
            epochs,
            min_count,
            lr,
            subsample,
            min_n,
            max_n,
            buckets,
            seed,
            deterministic,
        } => {
            let sentences = notedx::embed::read_training_sentences(&corpus)?;
            let config = notedx::embed::SkipgramConfig {
                dim,
                window,
                negatives,
                epochs,
                learning_rate: lr,
                subsample,
                min_count,
                min_n,
                max_n,
                buckets,
                seed,
                deterministic,
            };
            let outcome = train_skipgram(&sentences, &config)?;
            ensure_parent(&out)?;
            outcome.store.save(&out)?;
            outcome.store.save_text(&out.with_extension("txt"))?;
            for (epoch, loss) in outcome.epoch_losses.iter().enumerate() {
                println!("epoch {epoch}: loss {loss:.6}");
            }
            println!(
                "trained {} words (dim {}) -> {}",
                outcome.store.vocab.len(),
                outcome.store.dim,
                out.display()
            );
            Ok(())
        }
        Command::Train {
            corpus,
            embeddings,
            config,
            seeds,
            seed,
            out,
            deterministic,
        } => {
            let mut run_config = load_run_config(&config)?;
            run_config.n_seeds = seeds;
            run_config.seed = seed;
            if deterministic {
                run_config.deterministic = true;
            }
            let docs = textprep::read_documents(&corpus)?;
            let store = match &embeddings {
                Some(path) => Some(EmbeddingStore::load(path)?),
                None => None,
            };
            let mut cnn_config = run_config.cnn_config()?;
            cnn_config.n_classes = run_config.top_k.min(count_labels(&docs));
            if let Some(store) = &store {
                cnn_config.embed_dim = store.dim;
            }
            std::fs::create_dir_all(&out)?;
            let runs = run_experiment(
                &docs,
                &cnn_config,
                store.as_ref(),
                run_config.n_seeds,
                run_config.ratios(),
            )?;
            let mut reports = Vec::new();
            for r in &runs {
                r.model.save(&out.join(format!("cnn_seed{}.ckpt", r.seed)))?;
                r.model
                    .write_history_csv(&out.join(format!("history_seed{}.csv", r.seed)))?;
                metrics::write_predictions(
                    &out.join(format!("pred_cnn_seed{}.jsonl", r.seed)),
                    &r.predictions,
                )?;
                println!(
                    "seed {}: test weighted F1 {:.4}, accuracy {:.4}",
                    r.seed, r.report.weighted_avg.f1, r.report.overall_accuracy
                );
                reports.push(r.report.clone());
            }
            write_model_report(&out, "cnn", &reports)?;
            Ok(())
        }
        Command::Baseline {
            model,
            corpus,
            pca_dim,
            seeds,
            seed,
            out,
            config,
        } => {
            let kind: BaselineKind = model.parse()?;
            let mut run_config = load_run_config(&config)?;
            run_config.pca_dim = pca_dim;
            run_config.n_seeds = seeds;
            run_config.seed = seed;
            let docs = textprep::read_documents(&corpus)?;
            let (classes, _) =
                corpus_classes_and_len(&docs, run_config.top_k.min(count_labels(&docs)))?;
            let bl_config = run_config.baseline_config(kind)?;
            std::fs::create_dir_all(&out)?;
            let runs = baselines::run_baseline_experiment(
                &docs,
                &classes,
                &bl_config,
                run_config.n_seeds,
                run_config.ratios(),
            )?;
            let mut reports = Vec::new();
            for r in &runs {
                metrics::write_predictions(
                    &out.join(format!("pred_{model}_seed{}.jsonl", r.seed)),
                    &r.predictions,
                )?;
                println!(
                    "seed {}: test weighted F1 {:.4}, accuracy {:.4}",
                    r.seed, r.report.weighted_avg.f1, r.report.overall_accuracy
                );
                reports.push(r.report.clone());
            }
            write_model_report(&out, &model, &reports)?;
            Ok(())
        }
        Command::Evaluate { pred, out } => {
            let mut per_seed = Vec::new();
            for path in &pred {
                let records = metrics::read_predictions(path)?;
                let report = metrics::report_from_predictions(&records, None, None)?;
                println!(
                    "{}: accuracy {:.4}, weighted F1 {:.4}",
                    path.display(),
                    report.overall_accuracy,
                    report.weighted_avg.f1
                );
                per_seed.push(report);
            }
            let aggregate = if per_seed.len() > 1 {
                Some(metrics::aggregate_seeds(&per_seed)?)
            } else {
                None
            };
            ensure_parent(&out)?;
            let value = serde_json::json!({
                "files": pred,
                "per_seed": per_seed,
                "aggregate": aggregate,
            });
            std::fs::write(&out, format!("{value:#}\n"))?;
            Ok(())
        }
        Command::Compare { a, b, metric } => {
            let collect = |spec: &Path| -> Result<Vec<f64>> {
                prediction_files(spec)?
                    .iter()
                    .map(|path| {
                        let records = metrics::read_predictions(path)?;
                        let report = metrics::report_from_predictions(&records, None, None)?;
                        metric_of(&report, &metric)
                    })
                    .collect()
            };
            let sa = collect(&a)?;
            let sb = collect(&b)?;
            let test = metrics::welch_t_test(&sa, &sb)?;
            let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
            println!(
                "metric={} a_mean={:.6} b_mean={:.6} t={:.6} df={:.4} p={:.6e}",
                metric,
                mean(&sa),
                mean(&sb),
                test.t,
                test.df,
                test.p
            );
            Ok(())
        }
        Command::VisualizeFilters {
            model,
            corpus,
            per_size,
            top,
            seed,
            out,
        } => {
            let model = CnnModel::load(&model)?;
            let docs = textprep::read_documents(&corpus)?;
            let picks = interpret::sample_filters(&model, per_size, seed);
            let rankings = interpret::rank_ngrams(&model, &docs, top, Some(&picks))?;
            print!("{}", interpret::render_table(&rankings));
            if let Some(out) = out {
                ensure_parent(&out)?;
                std::fs::write(&out, interpret::render_json(&rankings)?)?;
            }
            Ok(())
        }
        Command::Synth {
            out,
            classes,
            docs_per_class,
            balanced,
            order_signal,
            noise_vocab,
            len_min,
            len_max,
            inserts,
            seed,
        } => {
            let mut spec = if order_signal {
                SyntheticSpec::order_dependent(classes, docs_per_class, seed)
            } else if !balanced && classes == 10 {
                SyntheticSpec::imbalanced_10_class(seed)
            } else {
                SyntheticSpec::balanced(classes, docs_per_class, seed)
            };
            spec.noise_vocab = noise_vocab;
            spec.len_min = len_min;
            spec.len_max = len_max;
            spec.inserts_per_doc = inserts;
            let notes = synth::generate(&spec)?;
            ensure_parent(&out)?;
            synth::write_corpus(&out, &notes)?;
            println!("wrote {} documents to {}", notes.len(), out.display());
            Ok(())
        }
        Command::Pipeline { config, corpus, out } => {
            let mut run_config = RunConfig::load(&config)?;
            if let Some(corpus) = corpus {
                run_config.corpus = corpus.to_string_lossy().into_owned();
            }
            if let Some(out) = out {
                run_config.out_dir = out.to_string_lossy().into_owned();
            }
            let outcome = pipeline::run(&run_config)?;
            println!(
                "pipeline complete: {} (config hash {})",
                outcome.out_dir.display(),
                outcome.manifest.config_hash
            );
            Ok(())
        }
    }
}

fn main() {
    notedx::parallel::init_workers();
    let cli = Cli::parse();
    if let Err(err) = run(cli) {
        eprintln!("error[{}]: {err}", err.code());
        std::process::exit(1);
    }
}
