//! Evaluation protocol: one-vs-rest per-class metrics, macro and
//! support-weighted averages, multi-seed aggregation with standard errors,
//! and Welch's t-test between models.
//!
//! Degenerate 0/0 cells are defined as 0 and flagged per class, matching how
//! all-zero rows are reported. `FPR` is computed as `1 − TNR` and `FNR` as
//! `1 − recall` so the rate identities hold exactly in floating point.

pub mod stat;

use std::collections::BTreeSet;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// K×K counts, rows = gold class, columns = predicted class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub classes: Vec<String>,
    /// row-major K×K
    pub counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn k(&self) -> usize {
        self.classes.len()
    }

    pub fn at(&self, gold: usize, pred: usize) -> u64 {
        self.counts[gold * self.k() + pred]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.k()).map(|i| self.at(i, i)).sum()
    }

    /// Gold count of class `i`.
    pub fn support(&self, i: usize) -> u64 {
        (0..self.k()).map(|p| self.at(i, p)).sum()
    }
}

/// Count (gold, predicted) label pairs over a fixed class list.
pub fn confusion(gold: &[String], pred: &[String], classes: &[String]) -> Result<ConfusionMatrix> {
    if gold.len() != pred.len() {
        return Err(Error::Shape(format!(
            "{} gold labels vs {} predictions",
            gold.len(),
            pred.len()
        )));
    }
    let k = classes.len();
    let index = |label: &String| -> Result<usize> {
        classes
            .iter()
            .position(|c| c == label)
            .ok_or_else(|| Error::UnknownLabel(label.clone()))
    };
    let mut counts = vec![0u64; k * k];
    for (g, p) in gold.iter().zip(pred) {
        counts[index(g)? * k + index(p)?] += 1;
    }
    Ok(ConfusionMatrix {
        classes: classes.to_vec(),
        counts,
    })
}

/// One-vs-rest metrics of a single class.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub label: String,
    pub support: u64,
    #[serde(rename = "ACC")]
    pub acc: f64,
    #[serde(rename = "TNR")]
    pub tnr: f64,
    #[serde(rename = "FPR")]
    pub fpr: f64,
    #[serde(rename = "FNR")]
    pub fnr: f64,
    #[serde(rename = "Precision")]
    pub precision: f64,
    #[serde(rename = "Recall")]
    pub recall: f64,
    #[serde(rename = "F1")]
    pub f1: f64,
    /// Names of metrics that were 0/0 and defined as 0.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub degenerate: Vec<String>,
}

/// The seven metrics as one record (used for macro and weighted averages).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    #[serde(rename = "ACC")]
    pub acc: f64,
    #[serde(rename = "TNR")]
    pub tnr: f64,
    #[serde(rename = "FPR")]
    pub fpr: f64,
    #[serde(rename = "FNR")]
    pub fnr: f64,
    #[serde(rename = "Precision")]
    pub precision: f64,
    #[serde(rename = "Recall")]
    pub recall: f64,
    #[serde(rename = "F1")]
    pub f1: f64,
}

impl MetricSet {
    pub const NAMES: [&'static str; 7] =
        ["ACC", "TNR", "FPR", "FNR", "Precision", "Recall", "F1"];

    pub fn values(&self) -> [f64; 7] {
        [
            self.acc,
            self.tnr,
            self.fpr,
            self.fnr,
            self.precision,
            self.recall,
            self.f1,
        ]
    }

    fn from_values(v: [f64; 7]) -> Self {
        MetricSet {
            acc: v[0],
            tnr: v[1],
            fpr: v[2],
            fnr: v[3],
            precision: v[4],
            recall: v[5],
            f1: v[6],
        }
    }
}

/// Full per-seed evaluation report (Tables 2–3 shape).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsReport {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub n_documents: u64,
    /// trace / total
    pub overall_accuracy: f64,
    pub per_class: Vec<ClassMetrics>,
    #[serde(rename = "macro")]
    pub macro_avg: MetricSet,
    pub weighted_avg: MetricSet,
}

fn ratio(num: f64, den: f64, name: &str, degenerate: &mut Vec<String>) -> f64 {
    if den == 0.0 {
        degenerate.push(name.to_string());
        0.0
    } else {
        num / den
    }
}

/// Per-class one-vs-rest metrics of a confusion matrix.
pub fn per_class_metrics(cm: &ConfusionMatrix) -> Result<Vec<ClassMetrics>> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::InsufficientData("empty confusion matrix".into()));
    }
    let k = cm.k();
    let mut out = Vec::with_capacity(k);
    for i in 0..k {
        let tp = cm.at(i, i) as f64;
        let support = cm.support(i) as f64;
        let fn_ = support - tp;
        let fp = (0..k).map(|g| cm.at(g, i)).sum::<u64>() as f64 - tp;
        let tn = total as f64 - tp - fn_ - fp;
        let mut degenerate = Vec::new();
        let acc = (tp + tn) / total as f64;
        let tnr = ratio(tn, tn + fp, "TNR", &mut degenerate);
        // 1 - x keeps FPR + TNR = 1 exact; degenerate cells stay flagged zeros
        let fpr = if tn + fp == 0.0 {
            degenerate.push("FPR".to_string());
            0.0
        } else {
            1.0 - tnr
        };
        let recall = ratio(tp, tp + fn_, "Recall", &mut degenerate);
        let fnr = if tp + fn_ == 0.0 {
            degenerate.push("FNR".to_string());
            0.0
        } else {
            1.0 - recall
        };
        let precision = ratio(tp, tp + fp, "Precision", &mut degenerate);
        let f1 = if precision + recall == 0.0 {
            degenerate.push("F1".to_string());
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        out.push(ClassMetrics {
            label: cm.classes[i].clone(),
            support: cm.support(i),
            acc,
            tnr,
            fpr,
            fnr,
            precision,
            recall,
            f1,
            degenerate,
        });
    }
    Ok(out)
}

/// Macro (unweighted) and support-weighted averages of per-class values.
///
/// Weights are `support_i / Σ support`; `values` and `supports` are indexed
/// by class.
pub fn aggregate(values: &[f64], supports: &[u64]) -> Result<(f64, f64)> {
    if values.is_empty() || values.len() != supports.len() {
        return Err(Error::Shape(format!(
            "{} values vs {} supports",
            values.len(),
            supports.len()
        )));
    }
    let total: u64 = supports.iter().sum();
    if total == 0 {
        return Err(Error::InsufficientData("all supports are zero".into()));
    }
    let macro_avg = values.iter().sum::<f64>() / values.len() as f64;
    let weighted = values
        .iter()
        .zip(supports)
        .map(|(v, &s)| v * (s as f64 / total as f64))
        .sum();
    Ok((macro_avg, weighted))
}

fn average_sets(per_class: &[ClassMetrics]) -> Result<(MetricSet, MetricSet)> {
    let supports: Vec<u64> = per_class.iter().map(|c| c.support).collect();
    let mut macro_vals = [0.0; 7];
    let mut weighted_vals = [0.0; 7];
    for (slot, pick) in [
        |c: &ClassMetrics| c.acc,
        |c: &ClassMetrics| c.tnr,
        |c: &ClassMetrics| c.fpr,
        |c: &ClassMetrics| c.fnr,
        |c: &ClassMetrics| c.precision,
        |c: &ClassMetrics| c.recall,
        |c: &ClassMetrics| c.f1,
    ]
    .iter()
    .enumerate()
    {
        let values: Vec<f64> = per_class.iter().map(pick).collect();
        let (m, w) = aggregate(&values, &supports)?;
        macro_vals[slot] = m;
        weighted_vals[slot] = w;
    }
    Ok((
        MetricSet::from_values(macro_vals),
        MetricSet::from_values(weighted_vals),
    ))
}

impl MetricsReport {
    pub fn from_confusion(cm: &ConfusionMatrix, seed: Option<u64>) -> Result<Self> {
        let per_class = per_class_metrics(cm)?;
        let (macro_avg, weighted_avg) = average_sets(&per_class)?;
        Ok(MetricsReport {
            seed,
            n_documents: cm.total(),
            overall_accuracy: cm.trace() as f64 / cm.total() as f64,
            per_class,
            macro_avg,
            weighted_avg,
        })
    }

    pub fn weighted_f1(&self) -> f64 {
        self.weighted_avg.f1
    }
}

/// Mean and standard error over seeds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    /// `s/√n` with the n−1 sample standard deviation; absent when n = 1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub se: Option<f64>,
}

pub fn mean_and_se(samples: &[f64]) -> Stat {
    let n = samples.len();
    let mean = samples.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return Stat { mean, se: None };
    }
    let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    Stat {
        mean,
        se: Some(var.sqrt() / (n as f64).sqrt()),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricSetStats {
    #[serde(rename = "ACC")]
    pub acc: Stat,
    #[serde(rename = "TNR")]
    pub tnr: Stat,
    #[serde(rename = "FPR")]
    pub fpr: Stat,
    #[serde(rename = "FNR")]
    pub fnr: Stat,
    #[serde(rename = "Precision")]
    pub precision: Stat,
    #[serde(rename = "Recall")]
    pub recall: Stat,
    #[serde(rename = "F1")]
    pub f1: Stat,
}

fn stats_over<F: Fn(&MetricSet) -> f64>(sets: &[MetricSet], pick: F) -> Stat {
    let samples: Vec<f64> = sets.iter().map(&pick).collect();
    mean_and_se(&samples)
}

fn metric_set_stats(sets: &[MetricSet]) -> MetricSetStats {
    MetricSetStats {
        acc: stats_over(sets, |m| m.acc),
        tnr: stats_over(sets, |m| m.tnr),
        fpr: stats_over(sets, |m| m.fpr),
        fnr: stats_over(sets, |m| m.fnr),
        precision: stats_over(sets, |m| m.precision),
        recall: stats_over(sets, |m| m.recall),
        f1: stats_over(sets, |m| m.f1),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassStats {
    pub label: String,
    pub metrics: MetricSetStats,
}

/// Per-metric mean ± standard error over multiple seed reports.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AggregateReport {
    pub n_seeds: usize,
    pub overall_accuracy: Stat,
    #[serde(rename = "macro")]
    pub macro_avg: MetricSetStats,
    pub weighted_avg: MetricSetStats,
    pub per_class: Vec<ClassStats>,
}

/// Aggregate reports from repeated runs. All reports must share a class set.
pub fn aggregate_seeds(reports: &[MetricsReport]) -> Result<AggregateReport> {
    if reports.is_empty() {
        return Err(Error::InsufficientData("no reports to aggregate".into()));
    }
    let classes: Vec<&str> = reports[0]
        .per_class
        .iter()
        .map(|c| c.label.as_str())
        .collect();
    for r in reports {
        let c: Vec<&str> = r.per_class.iter().map(|c| c.label.as_str()).collect();
        if c != classes {
            return Err(Error::InvalidArgument(
                "reports have mismatched class sets".into(),
            ));
        }
    }
    let overall: Vec<f64> = reports.iter().map(|r| r.overall_accuracy).collect();
    let macro_sets: Vec<MetricSet> = reports.iter().map(|r| r.macro_avg).collect();
    let weighted_sets: Vec<MetricSet> = reports.iter().map(|r| r.weighted_avg).collect();
    let per_class = (0..classes.len())
        .map(|i| {
            let sets: Vec<MetricSet> = reports
                .iter()
                .map(|r| {
                    let c = &r.per_class[i];
                    MetricSet {
                        acc: c.acc,
                        tnr: c.tnr,
                        fpr: c.fpr,
                        fnr: c.fnr,
                        precision: c.precision,
                        recall: c.recall,
                        f1: c.f1,
                    }
                })
                .collect();
            ClassStats {
                label: classes[i].to_string(),
                metrics: metric_set_stats(&sets),
            }
        })
        .collect();
    Ok(AggregateReport {
        n_seeds: reports.len(),
        overall_accuracy: mean_and_se(&overall),
        macro_avg: metric_set_stats(&macro_sets),
        weighted_avg: metric_set_stats(&weighted_sets),
        per_class,
    })
}

/// Welch's t-test result.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct WelchTest {
    pub t: f64,
    pub df: f64,
    pub p: f64,
}

/// Welch's unequal-variance t-test with Welch–Satterthwaite degrees of
/// freedom and a two-sided p-value.
pub fn welch_t_test(a: &[f64], b: &[f64]) -> Result<WelchTest> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::InsufficientData(
            "each sample needs at least 2 values".into(),
        ));
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let var = |v: &[f64], m: f64| v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64;
    let (ma, mb) = (mean(a), mean(b));
    let (va, vb) = (var(a, ma), var(b, mb));
    let sa = va / na;
    let sb = vb / nb;
    let se = (sa + sb).sqrt();
    if se == 0.0 {
        // zero variance in both samples
        let diff = ma - mb;
        let df = na + nb - 2.0;
        return Ok(if diff == 0.0 {
            WelchTest { t: 0.0, df, p: 1.0 }
        } else {
            WelchTest {
                t: diff.signum() * f64::INFINITY,
                df,
                p: 0.0,
            }
        });
    }
    let t = (ma - mb) / se;
    let df = (sa + sb) * (sa + sb)
        / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
    Ok(WelchTest {
        t,
        df,
        p: stat::t_two_sided_p(t, df),
    })
}

// -- prediction files ---------------------------------------------------------

/// One prediction line: `{"id", "gold", "pred", "probs"}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PredRecord {
    pub id: String,
    pub gold: String,
    pub pred: String,
    pub probs: Vec<f64>,
}

pub fn write_predictions(path: &Path, records: &[PredRecord]) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_predictions(path: &Path) -> Result<Vec<PredRecord>> {
    let file = std::fs::File::open(path)?;
    let mut records = Vec::new();
    for (lineno, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        records.push(serde_json::from_str(&line).map_err(|e| {
            Error::Corrupt(format!("{}:{}: {e}", path.display(), lineno + 1))
        })?);
    }
    Ok(records)
}

/// Build a report from prediction records. When `classes` is absent the
/// sorted union of gold and predicted labels is used.
pub fn report_from_predictions(
    records: &[PredRecord],
    classes: Option<&[String]>,
    seed: Option<u64>,
) -> Result<MetricsReport> {
    if records.is_empty() {
        return Err(Error::InsufficientData("no predictions".into()));
    }
    let classes: Vec<String> = match classes {
        Some(c) => c.to_vec(),
        None => {
            let set: BTreeSet<&str> = records
                .iter()
                .flat_map(|r| [r.gold.as_str(), r.pred.as_str()])
                .collect();
            set.into_iter().map(String::from).collect()
        }
    };
    let gold: Vec<String> = records.iter().map(|r| r.gold.clone()).collect();
    let pred: Vec<String> = records.iter().map(|r| r.pred.clone()).collect();
    let cm = confusion(&gold, &pred, &classes)?;
    MetricsReport::from_confusion(&cm, seed)
}
