//! Run configuration: every tunable of every stage as one flat key=value
//! document. Unknown keys are rejected; every field has a default. The
//! canonical serialization (fixed key order) feeds the manifest hash, so
//! the hash changes exactly when some field changes.

use std::path::Path;

use crate::baselines::{BaselineConfig, BaselineKind, LogRegConfig, MlpConfig};
use crate::cnn::CnnConfig;
use crate::embed::SkipgramConfig;
use crate::error::{Error, Result};
use crate::nn::Activation;
use crate::synth::SyntheticSpec;
use crate::textprep::{AliasMap, DiagnosisRules, PreprocessOptions};

macro_rules! run_config {
    ($(($field:ident, $key:literal, $ty:ty, $default:expr)),+ $(,)?) => {
        /// Flat record of every tunable. See `RunConfig::set` for the
        /// key names accepted in config files.
        #[derive(Debug, Clone, PartialEq)]
        pub struct RunConfig {
            $(pub $field: $ty),+
        }

        impl Default for RunConfig {
            fn default() -> Self {
                RunConfig { $($field: $default),+ }
            }
        }

        impl RunConfig {
            /// Set one field from its key=value form.
            pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
                match key {
                    $($key => {
                        self.$field = value.parse::<$ty>().map_err(|e| {
                            Error::Config(format!("key {key:?}: cannot parse {value:?}: {e}"))
                        })?;
                        Ok(())
                    })+
                    other => Err(Error::Config(format!("unknown config key {other:?}"))),
                }
            }

            /// Fixed-order `key=value` lines covering every field.
            pub fn canonical(&self) -> String {
                let mut out = String::new();
                $(
                    out.push_str($key);
                    out.push('=');
                    out.push_str(&self.$field.to_string());
                    out.push('\n');
                )+
                out
            }
        }
    };
}

run_config![
    (corpus, "corpus", String, String::new()),
    (out_dir, "out_dir", String, "runs/exp".to_string()),
    (alias_file, "alias_file", String, String::new()),
    (admission_sections, "admission_sections", String, String::new()),
    (
        diagnosis_headers,
        "diagnosis_headers",
        String,
        "discharge diagnosis,primary diagnosis,diagnosis".to_string()
    ),
    (top_k, "top_k", usize, 10),
    (truncation_quantile, "truncation_quantile", f64, 0.90),
    (ratio_train, "ratio_train", f64, 0.70),
    (ratio_val, "ratio_val", f64, 0.15),
    (ratio_test, "ratio_test", f64, 0.15),
    (n_seeds, "n_seeds", usize, 5),
    (seed, "seed", u64, 1),
    (deterministic, "deterministic", bool, false),
    (embed_dim, "embed_dim", usize, 128),
    (embed_window, "embed_window", usize, 5),
    (embed_negatives, "embed_negatives", usize, 5),
    (embed_epochs, "embed_epochs", usize, 5),
    (embed_lr, "embed_lr", f64, 0.025),
    (embed_subsample, "embed_subsample", f64, 1e-4),
    (embed_min_count, "embed_min_count", u64, 2),
    (embed_min_n, "embed_min_n", usize, 3),
    (embed_max_n, "embed_max_n", usize, 6),
    (embed_buckets, "embed_buckets", usize, 1 << 21),
    (cnn_filters, "cnn_filters", String, "3:64,4:64,5:64".to_string()),
    (cnn_p_keep, "cnn_p_keep", f64, 0.5),
    (cnn_lr, "cnn_lr", f64, 1e-4),
    (cnn_batch_size, "cnn_batch_size", usize, 64),
    (cnn_max_epochs, "cnn_max_epochs", usize, 50),
    (cnn_patience, "cnn_patience", usize, 5),
    (cnn_fine_tune, "cnn_fine_tune", bool, true),
    (cnn_activation, "cnn_activation", String, "relu".to_string()),
    (pca_dim, "pca_dim", usize, 256),
    (logreg_l2, "logreg_l2", f64, 1e-4),
    (logreg_max_iters, "logreg_max_iters", usize, 5000),
    (logreg_tol, "logreg_tol", f64, 1e-5),
    (mlp_hidden, "mlp_hidden", String, "100,10".to_string()),
    (mlp_lr, "mlp_lr", f64, 1e-3),
    (mlp_batch_size, "mlp_batch_size", usize, 32),
    (mlp_max_epochs, "mlp_max_epochs", usize, 100),
    (mlp_patience, "mlp_patience", usize, 5),
    (mlp_holdout, "mlp_holdout", f64, 0.1),
    (synth_classes, "synth_classes", usize, 10),
    (synth_docs_per_class, "synth_docs_per_class", usize, 1314),
    (synth_noise_vocab, "synth_noise_vocab", usize, 300),
    (synth_len_min, "synth_len_min", usize, 18),
    (synth_len_max, "synth_len_max", usize, 34),
    (synth_inserts, "synth_inserts", usize, 2),
    (synth_order_mode, "synth_order_mode", bool, false),
    (synth_imbalanced, "synth_imbalanced", bool, true),
];

impl RunConfig {
    /// Parse key=value lines; `#` lines and blanks are skipped. Unknown keys
    /// are an error.
    pub fn parse(text: &str) -> Result<RunConfig> {
        let mut config = RunConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Config(format!(
                    "line {}: expected key=value, got {line:?}",
                    lineno + 1
                )));
            };
            config.set(key.trim(), value.trim())?;
        }
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<RunConfig> {
        RunConfig::parse(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let sum = self.ratio_train + self.ratio_val + self.ratio_test;
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("split ratios sum to {sum}, not 1")));
        }
        if self.n_seeds == 0 {
            return Err(Error::Config("n_seeds must be at least 1".into()));
        }
        self.parse_filters()?;
        self.parse_hidden()?;
        self.cnn_activation.parse::<Activation>()?;
        Ok(())
    }

    /// FNV-1a hash of the canonical serialization, as 16 hex digits.
    pub fn hash(&self) -> String {
        let mut h = 0xcbf29ce484222325u64;
        for b in self.canonical().bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
        format!("{h:016x}")
    }

    fn parse_filters(&self) -> Result<Vec<(usize, usize)>> {
        self.cnn_filters
            .split(',')
            .map(|spec| {
                let Some((h, f)) = spec.trim().split_once(':') else {
                    return Err(Error::Config(format!(
                        "cnn_filters entry {spec:?} is not H:F"
                    )));
                };
                let parse = |s: &str| {
                    s.trim()
                        .parse::<usize>()
                        .map_err(|e| Error::Config(format!("cnn_filters {spec:?}: {e}")))
                };
                Ok((parse(h)?, parse(f)?))
            })
            .collect()
    }

    fn parse_hidden(&self) -> Result<Vec<usize>> {
        self.mlp_hidden
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<usize>()
                    .map_err(|e| Error::Config(format!("mlp_hidden {s:?}: {e}")))
            })
            .collect()
    }

    fn comma_list(raw: &str) -> Vec<String> {
        raw.split(',')
            .map(|s| s.trim().to_string())
            .filter(|s| !s.is_empty())
            .collect()
    }

    pub fn ratios(&self) -> (f64, f64, f64) {
        (self.ratio_train, self.ratio_val, self.ratio_test)
    }

    pub fn preprocess_options(&self) -> Result<PreprocessOptions> {
        let alias = if self.alias_file.is_empty() {
            AliasMap::empty()
        } else {
            AliasMap::load(Path::new(&self.alias_file))?
        };
        Ok(PreprocessOptions {
            admission_sections: Self::comma_list(&self.admission_sections),
            diagnosis: DiagnosisRules {
                headers: Self::comma_list(&self.diagnosis_headers),
                ..Default::default()
            },
            alias,
            top_k: self.top_k,
            truncation_quantile: self.truncation_quantile,
            sequential: self.deterministic,
        })
    }

    pub fn skipgram_config(&self) -> SkipgramConfig {
        SkipgramConfig {
            dim: self.embed_dim,
            window: self.embed_window,
            negatives: self.embed_negatives,
            epochs: self.embed_epochs,
            learning_rate: self.embed_lr,
            subsample: self.embed_subsample,
            min_count: self.embed_min_count,
            min_n: self.embed_min_n,
            max_n: self.embed_max_n,
            buckets: self.embed_buckets,
            seed: self.seed,
            deterministic: self.deterministic,
        }
    }

    pub fn cnn_config(&self) -> Result<CnnConfig> {
        Ok(CnnConfig {
            embed_dim: self.embed_dim,
            filters: self.parse_filters()?,
            n_classes: self.top_k,
            p_keep: self.cnn_p_keep,
            learning_rate: self.cnn_lr,
            batch_size: self.cnn_batch_size,
            max_epochs: self.cnn_max_epochs,
            patience: self.cnn_patience,
            fine_tune_embeddings: self.cnn_fine_tune,
            activation: self.cnn_activation.parse()?,
            seed: self.seed,
            deterministic: self.deterministic,
        })
    }

    pub fn baseline_config(&self, kind: BaselineKind) -> Result<BaselineConfig> {
        Ok(BaselineConfig {
            kind,
            pca_dim: self.pca_dim,
            min_count: self.embed_min_count,
            logreg: LogRegConfig {
                l2: self.logreg_l2,
                max_iters: self.logreg_max_iters,
                tol: self.logreg_tol,
            },
            mlp: MlpConfig {
                hidden: self.parse_hidden()?,
                learning_rate: self.mlp_lr,
                batch_size: self.mlp_batch_size,
                max_epochs: self.mlp_max_epochs,
                patience: self.mlp_patience,
                holdout: self.mlp_holdout,
                seed: self.seed,
            },
            seed: self.seed,
        })
    }

    pub fn synthetic_spec(&self) -> SyntheticSpec {
        let mut spec = if self.synth_order_mode {
            SyntheticSpec::order_dependent(self.synth_classes, self.synth_docs_per_class, self.seed)
        } else if self.synth_imbalanced && self.synth_classes == 10 {
            SyntheticSpec::imbalanced_10_class(self.seed)
        } else {
            SyntheticSpec::balanced(self.synth_classes, self.synth_docs_per_class, self.seed)
        };
        spec.noise_vocab = self.synth_noise_vocab;
        spec.len_min = self.synth_len_min;
        spec.len_max = self.synth_len_max;
        spec.inserts_per_doc = self.synth_inserts;
        spec
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_declared_values() {
        let c = RunConfig::default();
        assert_eq!(c.embed_dim, 128);
        assert_eq!(c.cnn_filters, "3:64,4:64,5:64");
        assert_eq!(c.parse_filters().unwrap(), vec![(3, 64), (4, 64), (5, 64)]);
        assert_eq!(c.cnn_p_keep, 0.5);
        assert_eq!(c.cnn_lr, 1e-4);
        assert_eq!(c.ratios(), (0.70, 0.15, 0.15));
        assert_eq!(c.n_seeds, 5);
        assert_eq!(c.embed_min_count, 2);
        assert_eq!(c.top_k, 10);
        assert_eq!(c.embed_buckets, 1 << 21);
        assert_eq!(c.mlp_hidden, "100,10");
    }

    #[test]
    fn parse_round_trip_and_comments() {
        let text = "# a comment\n\ncnn_lr = 0.001\nseed=9\ndeterministic=true\n";
        let c = RunConfig::parse(text).unwrap();
        assert_eq!(c.cnn_lr, 0.001);
        assert_eq!(c.seed, 9);
        assert!(c.deterministic);
        let again = RunConfig::parse(&c.canonical()).unwrap();
        assert_eq!(again, c);
    }

    #[test]
    fn unknown_keys_and_bad_values_are_rejected() {
        assert!(matches!(
            RunConfig::parse("not_a_key=1"),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            RunConfig::parse("cnn_lr=fast"),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            RunConfig::parse("ratio_train=0.9"),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            RunConfig::parse("cnn_filters=3x64"),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn hash_changes_iff_any_field_changes() {
        let base = RunConfig::default();
        let h0 = base.hash();
        assert_eq!(h0, RunConfig::default().hash());
        // mutate every line of the canonical form via set()
        for line in base.canonical().lines() {
            let (key, value) = line.split_once('=').unwrap();
            let new_value = match value {
                "" => "changed".to_string(),
                "true" => "false".to_string(),
                "false" => "true".to_string(),
                v if v.parse::<f64>().is_ok() => {
                    format!("{}", v.parse::<f64>().unwrap() + 1.0)
                }
                v => format!("{v}x"),
            };
            let mut changed = base.clone();
            changed.set(key, &new_value).unwrap();
            assert_ne!(changed.hash(), h0, "key {key} did not change the hash");
        }
    }

    #[test]
    fn stage_configs_inherit_shared_fields() {
        let mut c = RunConfig::default();
        c.set("seed", "77").unwrap();
        c.set("deterministic", "true").unwrap();
        c.set("embed_dim", "32").unwrap();
        let sg = c.skipgram_config();
        assert_eq!(sg.seed, 77);
        assert!(sg.deterministic);
        assert_eq!(sg.dim, 32);
        let cnn = c.cnn_config().unwrap();
        assert_eq!(cnn.embed_dim, 32);
        assert_eq!(cnn.seed, 77);
        assert!(cnn.deterministic);
        let bl = c.baseline_config(BaselineKind::Mlp).unwrap();
        assert_eq!(bl.mlp.hidden, vec![100, 10]);
        assert_eq!(bl.seed, 77);
    }
}
