//! End-to-end checks of the command-line surface: every subcommand runs
//! against a small synthetic corpus, outputs land where they should, and
//! failures exit nonzero with a machine-parsable code.

use std::path::{Path, PathBuf};
use std::process::Command;

fn notedx() -> Command {
    Command::new(env!("CARGO_BIN_EXE_notedx"))
}

fn workdir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("notedx_cli_{name}"));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run_ok(cmd: &mut Command) -> String {
    let output = cmd.output().expect("spawn notedx");
    assert!(
        output.status.success(),
        "command failed\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn path_arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn full_command_chain() {
    let dir = workdir("chain");
    let corpus = dir.join("corpus.jsonl");
    let pre = dir.join("pre.jsonl");
    let emb = dir.join("emb.bin");
    let train_dir = dir.join("cnn");
    let base_dir = dir.join("logreg");

    // synth: small balanced corpus
    let out = run_ok(notedx().args([
        "synth",
        "--out",
        path_arg(&corpus),
        "--classes",
        "3",
        "--docs-per-class",
        "50",
        "--balanced",
        "--noise-vocab",
        "40",
        "--len-min",
        "12",
        "--len-max",
        "20",
        "--seed",
        "3",
    ]));
    assert!(out.contains("150 documents"));

    // byte-identical regeneration with the same seed
    let corpus2 = dir.join("corpus2.jsonl");
    run_ok(notedx().args([
        "synth",
        "--out",
        path_arg(&corpus2),
        "--classes",
        "3",
        "--docs-per-class",
        "50",
        "--balanced",
        "--noise-vocab",
        "40",
        "--len-min",
        "12",
        "--len-max",
        "20",
        "--seed",
        "3",
    ]));
    assert_eq!(
        std::fs::read(&corpus).unwrap(),
        std::fs::read(&corpus2).unwrap()
    );

    // preprocess
    let out = run_ok(notedx().args([
        "preprocess",
        "--corpus",
        path_arg(&corpus),
        "--out",
        path_arg(&pre),
        "--top-k",
        "3",
    ]));
    assert!(out.contains("preprocessed 150 documents"));

    // embed-train (tiny settings)
    run_ok(notedx().args([
        "embed-train",
        "--corpus",
        path_arg(&pre),
        "--out",
        path_arg(&emb),
        "--dim",
        "16",
        "--epochs",
        "2",
        "--buckets",
        "16384",
        "--deterministic",
        "--seed",
        "7",
    ]));
    assert!(emb.exists());
    assert!(emb.with_extension("txt").exists());

    // train 2 seeds with a config file shrinking the model
    let config = dir.join("run.conf");
    std::fs::write(
        &config,
        "embed_dim=16\ncnn_filters=3:4,4:4,5:4\ncnn_max_epochs=3\ncnn_lr=0.001\ncnn_batch_size=16\ntop_k=3\n",
    )
    .unwrap();
    let out = run_ok(notedx().args([
        "train",
        "--corpus",
        path_arg(&pre),
        "--embeddings",
        path_arg(&emb),
        "--config",
        path_arg(&config),
        "--seeds",
        "2",
        "--seed",
        "5",
        "--out",
        path_arg(&train_dir),
        "--deterministic",
    ]));
    assert!(out.contains("seed 5"));
    assert!(train_dir.join("cnn_seed5.ckpt").exists());
    assert!(train_dir.join("history_seed6.csv").exists());
    assert!(train_dir.join("pred_cnn_seed5.jsonl").exists());
    assert!(train_dir.join("report_cnn.json").exists());

    // baseline
    run_ok(notedx().args([
        "baseline",
        "--model",
        "logreg",
        "--corpus",
        path_arg(&pre),
        "--pca-dim",
        "8",
        "--seeds",
        "2",
        "--seed",
        "5",
        "--out",
        path_arg(&base_dir),
    ]));
    assert!(base_dir.join("pred_logreg_seed5.jsonl").exists());
    assert!(base_dir.join("report_logreg.json").exists());

    // evaluate the CNN prediction files
    let report = dir.join("report.json");
    let out = run_ok(notedx().args([
        "evaluate",
        "--pred",
        path_arg(&train_dir.join("pred_cnn_seed5.jsonl")),
        "--pred",
        path_arg(&train_dir.join("pred_cnn_seed6.jsonl")),
        "--out",
        path_arg(&report),
    ]));
    assert!(out.contains("weighted F1"));
    let parsed: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(parsed["per_seed"].as_array().unwrap().len(), 2);
    assert!(parsed["aggregate"]["weighted_avg"]["F1"]["mean"].is_number());

    // compare cnn vs logreg on weighted F1
    let out = run_ok(notedx().args([
        "compare",
        "--a",
        path_arg(&train_dir),
        "--b",
        path_arg(&base_dir),
        "--metric",
        "wf1",
    ]));
    assert!(out.contains("t="), "{out}");
    assert!(out.contains("p="), "{out}");

    // visualize-filters from a checkpoint
    let filters_json = dir.join("filters.json");
    let out = run_ok(notedx().args([
        "visualize-filters",
        "--model",
        path_arg(&train_dir.join("cnn_seed5.ckpt")),
        "--corpus",
        path_arg(&pre),
        "--per-size",
        "1",
        "--top",
        "5",
        "--seed",
        "2",
        "--out",
        path_arg(&filters_json),
    ]));
    assert!(out.lines().count() >= 2, "table missing: {out}");
    assert!(filters_json.exists());

    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn pipeline_command_runs_from_config() {
    let dir = workdir("pipeline");
    let corpus = dir.join("synth.jsonl");
    run_ok(notedx().args([
        "synth",
        "--out",
        path_arg(&corpus),
        "--classes",
        "3",
        "--docs-per-class",
        "40",
        "--balanced",
        "--noise-vocab",
        "30",
        "--len-min",
        "12",
        "--len-max",
        "18",
        "--seed",
        "9",
    ]));
    let config = dir.join("pipe.conf");
    std::fs::write(
        &config,
        format!(
            "corpus={}\nout_dir={}\ntop_k=3\nn_seeds=2\nseed=4\ndeterministic=true\n\
             embed_dim=12\nembed_epochs=2\nembed_buckets=16384\n\
             cnn_filters=3:4,4:4,5:4\ncnn_max_epochs=2\ncnn_batch_size=16\ncnn_lr=0.001\n\
             pca_dim=12\nmlp_max_epochs=2\n",
            corpus.display(),
            dir.join("out").display()
        ),
    )
    .unwrap();
    let out = run_ok(notedx().args(["pipeline", "--config", path_arg(&config)]));
    assert!(out.contains("pipeline complete"));
    for artifact in ["manifest.json", "report_cnn.json", "report_mlp.json", "ttest.json", "filters.txt"] {
        assert!(dir.join("out").join(artifact).exists(), "missing {artifact}");
    }
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn errors_exit_nonzero_with_machine_parsable_codes() {
    let dir = workdir("errors");

    // missing corpus file
    let output = notedx()
        .args([
            "preprocess",
            "--corpus",
            path_arg(&dir.join("nope.jsonl")),
            "--out",
            path_arg(&dir.join("out.jsonl")),
        ])
        .output()
        .unwrap();
    assert!(!output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr);
    let line = stderr.lines().next().unwrap_or_default();
    assert!(
        line.starts_with("error[E_") && line.contains("]:"),
        "stderr not machine-parsable: {line:?}"
    );

    // pipeline with missing corpus reports the stage
    let config = dir.join("bad.conf");
    std::fs::write(&config, format!("corpus={}\n", dir.join("absent.jsonl").display())).unwrap();
    let output = notedx()
        .args(["pipeline", "--config", path_arg(&config)])
        .output()
        .unwrap();
    assert!(!output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.starts_with("error[E_STAGE]"), "{stderr}");
    assert!(stderr.contains("corpus"), "{stderr}");

    // unknown config key is rejected
    let config = dir.join("unknown.conf");
    std::fs::write(&config, "definitely_not_a_key=1\n").unwrap();
    let output = notedx()
        .args(["pipeline", "--config", path_arg(&config)])
        .output()
        .unwrap();
    assert!(!output.status.success());
    assert!(String::from_utf8_lossy(&output.stderr).starts_with("error[E_CONFIG]"));

    // corrupt checkpoint
    let ckpt = dir.join("bad.ckpt");
    std::fs::write(&ckpt, b"XXXXXXXX").unwrap();
    let pre = dir.join("pre.jsonl");
    std::fs::write(&pre, "{\"id\":\"a\",\"tokens\":[\"x\"],\"label\":\"l\"}\n").unwrap();
    let output = notedx()
        .args([
            "visualize-filters",
            "--model",
            path_arg(&ckpt),
            "--corpus",
            path_arg(&pre),
        ])
        .output()
        .unwrap();
    assert!(!output.status.success());
    assert!(String::from_utf8_lossy(&output.stderr).starts_with("error[E_CORRUPT]"));

    let _ = std::fs::remove_dir_all(&dir);
}
