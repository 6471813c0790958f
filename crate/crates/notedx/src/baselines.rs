//! Bag-of-words baselines: tf-idf features, PCA reduction, multinomial
//! logistic regression, and a small MLP — all evaluated under the same
//! protocol as the convolutional model.
//!
//! tf is the raw in-document count and idf is the smoothed
//! `ln((1+T)/(1+df)) + 1`, so a word present in every document gets weight 1.
//! PCA centers the data and finds the top-V′ eigenvectors of the covariance
//! by block power iteration with a Rayleigh–Ritz step (a full decomposition
//! is never materialized; the covariance only acts on V′ vectors at a time).
//! Fitting is single-threaded per model, which also makes it deterministic.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{self, MetricsReport, PredRecord};
use crate::nn::{
    adam_step, cross_entropy, dense, dense_backward, softmax, softmax_ce_grad, AdamState, Tensor,
};
use crate::rng::Rng;
use crate::textprep::Document;
use crate::vocab::Vocabulary;

const PCA_STREAM: u64 = 0x50434131; // "PCA1"
const MLP_STREAM: u64 = 0x4d4c5031; // "MLP1"

// -- tf-idf --------------------------------------------------------------------

/// Inverse-document-frequency table over a training vocabulary.
#[derive(Debug, Clone)]
pub struct TfidfModel {
    pub vocab: Vocabulary,
    /// Documents containing each word at least once.
    pub df: Vec<u64>,
    pub idf: Vec<f64>,
    pub n_documents: u64,
}

/// Row-sparse T×V matrix; each row holds ascending `(column, value)` pairs.
#[derive(Debug, Clone)]
pub struct SparseMatrix {
    pub rows: Vec<Vec<(u32, f64)>>,
    pub cols: usize,
}

impl TfidfModel {
    /// Fit document frequencies on the training split only.
    pub fn fit(train: &[Document], min_count: u64) -> Result<Self> {
        let vocab = Vocabulary::build(
            train.iter().map(|d| d.tokens.iter().map(String::as_str)),
            min_count,
        )?;
        let mut df = vec![0u64; vocab.len()];
        let mut seen = vec![u32::MAX; vocab.len()];
        for (di, doc) in train.iter().enumerate() {
            for tok in &doc.tokens {
                if let Some(idx) = vocab.get(tok) {
                    if seen[idx] != di as u32 {
                        seen[idx] = di as u32;
                        df[idx] += 1;
                    }
                }
            }
        }
        let t = train.len() as u64;
        let idf = df
            .iter()
            .map(|&d| ((1.0 + t as f64) / (1.0 + d as f64)).ln() + 1.0)
            .collect();
        Ok(TfidfModel {
            vocab,
            df,
            idf,
            n_documents: t,
        })
    }

    /// Sparse tf-idf vector of one document; absent words are exact zeros.
    pub fn features_of(&self, doc: &Document) -> Vec<(u32, f64)> {
        let mut counts: std::collections::BTreeMap<u32, u64> = std::collections::BTreeMap::new();
        for tok in &doc.tokens {
            if let Some(idx) = self.vocab.get(tok) {
                *counts.entry(idx as u32).or_insert(0) += 1;
            }
        }
        counts
            .into_iter()
            .map(|(idx, tf)| (idx, tf as f64 * self.idf[idx as usize]))
            .collect()
    }

    pub fn feature_matrix(&self, docs: &[Document]) -> SparseMatrix {
        SparseMatrix {
            rows: docs.iter().map(|d| self.features_of(d)).collect(),
            cols: self.vocab.len(),
        }
    }
}

// -- PCA -----------------------------------------------------------------------

/// Mean vector plus orthonormal principal axes with their variances.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// V′×V row-major; each row is one component.
    pub components: Vec<f64>,
    /// Non-increasing variances along the components.
    pub explained_variance: Vec<f64>,
    pub dim_in: usize,
    pub dim_out: usize,
}

/// Cyclic Jacobi eigendecomposition of a symmetric n×n matrix.
/// Returns eigenvalues (descending) and eigenvectors as row-major columns.
fn jacobi_eigh(a: &mut [f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += a[p * n + q] * a[p * n + q];
            }
        }
        if off < 1e-28 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for i in 0..n {
                    let aip = a[i * n + p];
                    let aiq = a[i * n + q];
                    a[i * n + p] = c * aip - s * aiq;
                    a[i * n + q] = s * aip + c * aiq;
                }
                for i in 0..n {
                    let api = a[p * n + i];
                    let aqi = a[q * n + i];
                    a[p * n + i] = c * api - s * aqi;
                    a[q * n + i] = s * api + c * aqi;
                }
                for i in 0..n {
                    let vip = v[i * n + p];
                    let viq = v[i * n + q];
                    v[i * n + p] = c * vip - s * viq;
                    v[i * n + q] = s * vip + c * viq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        a[j * n + j]
            .partial_cmp(&a[i * n + i])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values: Vec<f64> = order.iter().map(|&i| a[i * n + i]).collect();
    let mut vectors = vec![0.0; n * n];
    for (new_col, &old_col) in order.iter().enumerate() {
        for i in 0..n {
            vectors[i * n + new_col] = v[i * n + old_col];
        }
    }
    (values, vectors)
}

/// Modified Gram–Schmidt over the rows of `q` (each row length `dim`),
/// replacing rank-deficient rows with fresh random directions.
fn orthonormalize_rows(q: &mut [f64], rows: usize, dim: usize, rng: &mut Rng) {
    for r in 0..rows {
        for _attempt in 0..4 {
            for prev in 0..r {
                let mut proj = 0.0;
                for j in 0..dim {
                    proj += q[prev * dim + j] * q[r * dim + j];
                }
                for j in 0..dim {
                    q[r * dim + j] -= proj * q[prev * dim + j];
                }
            }
            let norm: f64 = (0..dim).map(|j| q[r * dim + j] * q[r * dim + j]).sum::<f64>().sqrt();
            if norm > 1e-10 {
                for j in 0..dim {
                    q[r * dim + j] /= norm;
                }
                break;
            }
            for j in 0..dim {
                q[r * dim + j] = rng.uniform(-1.0, 1.0);
            }
        }
    }
}

/// Apply the centered covariance to the rows of `q`: returns `C·qᵀ` as rows.
fn covariance_times(features: &SparseMatrix, mean: &[f64], q: &[f64], v_prime: usize) -> Vec<f64> {
    let v = features.cols;
    let t = features.rows.len();
    // q_mu[i] = q_i · μ
    let q_mu: Vec<f64> = (0..v_prime)
        .map(|i| q[i * v..(i + 1) * v].iter().zip(mean).map(|(a, b)| a * b).sum())
        .collect();
    let mut y = vec![0.0; v_prime * v];
    let mut c_sum = vec![0.0; v_prime];
    let mut c_d = vec![0.0; v_prime];
    for row in &features.rows {
        for i in 0..v_prime {
            let mut dot = -q_mu[i];
            for &(j, val) in row {
                dot += q[i * v + j as usize] * val;
            }
            c_d[i] = dot;
            c_sum[i] += dot;
        }
        for &(j, val) in row {
            let j = j as usize;
            for i in 0..v_prime {
                y[i * v + j] += c_d[i] * val;
            }
        }
    }
    let denom = (t as f64 - 1.0).max(1.0);
    for i in 0..v_prime {
        for j in 0..v {
            y[i * v + j] = (y[i * v + j] - c_sum[i] * mean[j]) / denom;
        }
    }
    y
}

/// Top-V′ principal components of the centered feature matrix.
pub fn fit_pca(features: &SparseMatrix, v_prime: usize) -> Result<PcaModel> {
    let t = features.rows.len();
    let v = features.cols;
    if t == 0 || v == 0 {
        return Err(Error::EmptyCorpus);
    }
    if v_prime == 0 || v_prime > t.min(v) {
        return Err(Error::InvalidArgument(format!(
            "V'={v_prime} must be in 1..=min(T={t}, V={v})"
        )));
    }
    let mut mean = vec![0.0; v];
    for row in &features.rows {
        for &(j, val) in row {
            mean[j as usize] += val;
        }
    }
    for m in mean.iter_mut() {
        *m /= t as f64;
    }

    let mut rng = Rng::with_stream(1, PCA_STREAM);
    let mut q = vec![0.0; v_prime * v];
    for x in q.iter_mut() {
        *x = rng.uniform(-1.0, 1.0);
    }
    orthonormalize_rows(&mut q, v_prime, v, &mut rng);

    let mut last_spectrum = vec![f64::INFINITY; v_prime];
    let mut eigenvalues = vec![0.0; v_prime];
    for _iter in 0..200 {
        let y = covariance_times(features, &mean, &q, v_prime);
        q = y;
        orthonormalize_rows(&mut q, v_prime, v, &mut rng);
        // Rayleigh–Ritz on the current subspace
        let cq = covariance_times(features, &mean, &q, v_prime);
        let mut b = vec![0.0; v_prime * v_prime];
        for i in 0..v_prime {
            for k in 0..v_prime {
                let mut dot = 0.0;
                for j in 0..v {
                    dot += q[i * v + j] * cq[k * v + j];
                }
                b[i * v_prime + k] = dot;
            }
        }
        // symmetrize against iteration noise
        for i in 0..v_prime {
            for k in i + 1..v_prime {
                let avg = 0.5 * (b[i * v_prime + k] + b[k * v_prime + i]);
                b[i * v_prime + k] = avg;
                b[k * v_prime + i] = avg;
            }
        }
        let (values, vectors) = jacobi_eigh(&mut b, v_prime);
        // rotate the basis to the Ritz vectors: new_q = vectorsᵀ · q
        let mut rotated = vec![0.0; v_prime * v];
        for new_i in 0..v_prime {
            for old_i in 0..v_prime {
                let w = vectors[old_i * v_prime + new_i];
                if w == 0.0 {
                    continue;
                }
                for j in 0..v {
                    rotated[new_i * v + j] += w * q[old_i * v + j];
                }
            }
        }
        q = rotated;
        orthonormalize_rows(&mut q, v_prime, v, &mut rng);
        eigenvalues = values;
        let scale = eigenvalues
            .iter()
            .map(|x| x.abs())
            .fold(f64::MIN_POSITIVE, f64::max);
        let drift = eigenvalues
            .iter()
            .zip(&last_spectrum)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if drift / scale < 1e-13 {
            break;
        }
        last_spectrum = eigenvalues.clone();
    }
    let explained_variance = eigenvalues.iter().map(|&x| x.max(0.0)).collect();
    Ok(PcaModel {
        mean,
        components: q,
        explained_variance,
        dim_in: v,
        dim_out: v_prime,
    })
}

impl PcaModel {
    /// Project one sparse row onto the components (centering included).
    pub fn transform_row(&self, row: &[(u32, f64)]) -> Vec<f64> {
        let v = self.dim_in;
        (0..self.dim_out)
            .map(|i| {
                let comp = &self.components[i * v..(i + 1) * v];
                let mut dot: f64 = row
                    .iter()
                    .map(|&(j, val)| comp[j as usize] * val)
                    .sum();
                dot -= comp.iter().zip(&self.mean).map(|(c, m)| c * m).sum::<f64>();
                dot
            })
            .collect()
    }

    pub fn transform(&self, features: &SparseMatrix) -> Vec<Vec<f64>> {
        features.rows.iter().map(|r| self.transform_row(r)).collect()
    }

    /// Back-projection `mean + componentsᵀ·z` of a transformed row.
    pub fn reconstruct(&self, z: &[f64]) -> Vec<f64> {
        let v = self.dim_in;
        let mut x = self.mean.clone();
        for (i, &zi) in z.iter().enumerate() {
            for j in 0..v {
                x[j] += zi * self.components[i * v + j];
            }
        }
        x
    }
}

// -- logistic regression ----------------------------------------------------------

#[derive(Debug, Clone)]
pub struct LogRegConfig {
    /// L2 penalty on weights (biases are unpenalized).
    pub l2: f64,
    pub max_iters: usize,
    /// Convergence threshold on the gradient norm.
    pub tol: f64,
}

impl Default for LogRegConfig {
    fn default() -> Self {
        LogRegConfig {
            l2: 1e-4,
            max_iters: 5000,
            tol: 1e-5,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LogRegModel {
    /// K×D weights.
    pub w: Tensor,
    pub b: Vec<f64>,
    /// Final gradient norm; below `tol` when converged.
    pub grad_norm: f64,
    pub converged: bool,
}

fn check_finite(features: &[Vec<f64>]) -> Result<()> {
    for row in features {
        if row.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("non-finite feature value".into()));
        }
    }
    Ok(())
}

/// Multinomial logistic regression by full-batch gradient descent with an
/// adaptive step size.
pub fn train_logreg(
    features: &[Vec<f64>],
    labels: &[usize],
    k: usize,
    config: &LogRegConfig,
) -> Result<LogRegModel> {
    if features.is_empty() || features.len() != labels.len() {
        return Err(Error::Shape(format!(
            "{} feature rows vs {} labels",
            features.len(),
            labels.len()
        )));
    }
    check_finite(features)?;
    let d = features[0].len();
    let t = features.len();
    if labels.iter().any(|&y| y >= k) {
        return Err(Error::InvalidArgument("label out of range".into()));
    }

    let loss_and_grad = |w: &Tensor, b: &[f64]| -> (f64, Tensor, Vec<f64>) {
        let mut loss = 0.0;
        let mut gw = Tensor::zeros(&[k, d]);
        let mut gb = vec![0.0; k];
        for (x, &y) in features.iter().zip(labels) {
            let logits = dense(x, w, b).expect("shape checked");
            let probs = softmax(&logits);
            loss -= probs[y].max(1e-300).ln();
            for c in 0..k {
                let g = probs[c] - if c == y { 1.0 } else { 0.0 };
                gb[c] += g;
                let grow = gw.row_mut(c);
                for j in 0..d {
                    grow[j] += g * x[j];
                }
            }
        }
        let tf = t as f64;
        loss /= tf;
        gw.scale(1.0 / tf);
        gb.iter_mut().for_each(|g| *g /= tf);
        // L2 on weights only
        let mut penalty = 0.0;
        for (g, &wv) in gw.data_mut().iter_mut().zip(w.data()) {
            *g += config.l2 * wv;
            penalty += wv * wv;
        }
        (loss + 0.5 * config.l2 * penalty, gw, gb)
    };

    let mut w = Tensor::zeros(&[k, d]);
    let mut b = vec![0.0; k];
    let mut lr = 1.0;
    // the penalty adds λ to the curvature of the weight block, so its
    // gradient is preconditioned by 1/(1+λ); otherwise a large λ forces a
    // step size too small for the biases to ever move
    let w_precond = 1.0 / (1.0 + config.l2);
    let (mut loss, mut gw, mut gb) = loss_and_grad(&w, &b);
    let mut grad_norm = f64::INFINITY;
    let mut converged = false;
    for _iter in 0..config.max_iters {
        grad_norm = gw
            .data()
            .iter()
            .chain(&gb)
            .map(|g| g * g)
            .sum::<f64>()
            .sqrt();
        if grad_norm < config.tol {
            converged = true;
            break;
        }
        // adaptive step: accept if loss went down, otherwise halve and retry
        let mut accepted = false;
        for _half in 0..60 {
            let mut w2 = w.clone();
            for (x, g) in w2.data_mut().iter_mut().zip(gw.data()) {
                *x -= lr * w_precond * g;
            }
            let b2: Vec<f64> = b.iter().zip(&gb).map(|(x, g)| x - lr * g).collect();
            let (loss2, gw2, gb2) = loss_and_grad(&w2, &b2);
            if loss2 <= loss {
                w = w2;
                b = b2;
                loss = loss2;
                gw = gw2;
                gb = gb2;
                lr *= 1.1;
                accepted = true;
                break;
            }
            lr *= 0.5;
        }
        if !accepted {
            break; // step size underflow: at numerical optimum
        }
    }
    Ok(LogRegModel {
        w,
        b,
        grad_norm,
        converged,
    })
}

impl LogRegModel {
    pub fn predict_proba(&self, x: &[f64]) -> Vec<f64> {
        softmax(&dense(x, &self.w, &self.b).expect("shape"))
    }
}

// -- MLP -----------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct MlpConfig {
    /// Hidden layer widths (ReLU between layers).
    pub hidden: Vec<usize>,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Early-stopping patience on held-out accuracy.
    pub patience: usize,
    /// Fraction of the training data held out for early stopping.
    pub holdout: f64,
    pub seed: u64,
}

impl Default for MlpConfig {
    fn default() -> Self {
        MlpConfig {
            hidden: vec![100, 10],
            learning_rate: 1e-3,
            batch_size: 32,
            max_epochs: 100,
            patience: 5,
            holdout: 0.1,
            seed: 1,
        }
    }
}

/// Dense feed-forward network `input → hidden… → K` with ReLU activations
/// between layers and softmax on the output.
#[derive(Debug, Clone)]
pub struct MlpModel {
    /// Per layer: (K_out×K_in weights, K_out biases).
    pub layers: Vec<(Tensor, Vec<f64>)>,
}

impl MlpModel {
    fn init(dims: &[usize], rng: &mut Rng) -> Self {
        let mut layers = Vec::with_capacity(dims.len() - 1);
        for win in dims.windows(2) {
            let (input, output) = (win[0], win[1]);
            let bound = (3.0 / input as f64).sqrt();
            let mut w = Tensor::zeros(&[output, input]);
            for x in w.data_mut() {
                *x = rng.uniform(-bound, bound);
            }
            layers.push((w, vec![0.0; output]));
        }
        MlpModel { layers }
    }

    /// Activations after every layer (ReLU applied to all but the last).
    fn forward_trace(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut acts: Vec<Vec<f64>> = vec![x.to_vec()];
        for (li, (w, b)) in self.layers.iter().enumerate() {
            let mut z = dense(acts.last().unwrap(), w, b).expect("shape");
            if li + 1 < self.layers.len() {
                z.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            acts.push(z);
        }
        acts
    }

    pub fn predict_proba(&self, x: &[f64]) -> Vec<f64> {
        softmax(self.forward_trace(x).last().unwrap())
    }

    /// Loss and parameter gradients for one example.
    fn backward(
        &self,
        x: &[f64],
        y: usize,
        grads: &mut [(Tensor, Vec<f64>)],
    ) -> f64 {
        let acts = self.forward_trace(x);
        let logits = acts.last().unwrap();
        let probs = softmax(logits);
        let k = probs.len();
        let mut hot = vec![0.0; k];
        hot[y] = 1.0;
        let loss = cross_entropy(&hot, &probs).expect("one-hot");
        let mut delta = softmax_ce_grad(&probs, &hot);
        for li in (0..self.layers.len()).rev() {
            let input = &acts[li];
            let (w, _) = &self.layers[li];
            let dg = dense_backward(input, w, &delta);
            grads[li].0.add_assign(&dg.d_w);
            for (a, g) in grads[li].1.iter_mut().zip(&dg.d_b) {
                *a += g;
            }
            if li > 0 {
                // ReLU mask from the recorded activations
                delta = dg
                    .d_input
                    .iter()
                    .zip(&acts[li])
                    .map(|(d, &a)| if a > 0.0 { *d } else { 0.0 })
                    .collect();
            }
        }
        loss
    }
}

/// Train the MLP with Adam and early stopping on a held-out slice of the
/// training data. `max_epochs = 0` returns the initialized network.
pub fn train_mlp(
    features: &[Vec<f64>],
    labels: &[usize],
    k: usize,
    config: &MlpConfig,
) -> Result<MlpModel> {
    if features.is_empty() || features.len() != labels.len() {
        return Err(Error::Shape(format!(
            "{} feature rows vs {} labels",
            features.len(),
            labels.len()
        )));
    }
    check_finite(features)?;
    if labels.iter().any(|&y| y >= k) {
        return Err(Error::InvalidArgument("label out of range".into()));
    }
    let d = features[0].len();
    let mut dims = vec![d];
    dims.extend_from_slice(&config.hidden);
    dims.push(k);
    let mut rng = Rng::with_stream(config.seed, MLP_STREAM);
    let mut model = MlpModel::init(&dims, &mut rng);

    // held-out slice for early stopping
    let mut order: Vec<usize> = (0..features.len()).collect();
    rng.shuffle(&mut order);
    let n_hold = ((features.len() as f64 * config.holdout) as usize)
        .min(features.len().saturating_sub(1));
    let (hold_idx, train_idx) = order.split_at(n_hold);

    let mut states: Vec<(AdamState, AdamState)> = model
        .layers
        .iter()
        .map(|(w, b)| {
            (
                AdamState::new(w.len(), config.learning_rate),
                AdamState::new(b.len(), config.learning_rate),
            )
        })
        .collect();
    let holdout_accuracy = |m: &MlpModel| -> f64 {
        if hold_idx.is_empty() {
            return 0.0;
        }
        let correct = hold_idx
            .iter()
            .filter(|&&i| {
                let p = m.predict_proba(&features[i]);
                let mut best = 0;
                for (c, &v) in p.iter().enumerate() {
                    if v > p[best] {
                        best = c;
                    }
                }
                best == labels[i]
            })
            .count();
        correct as f64 / hold_idx.len() as f64
    };

    let mut best_acc = f64::NEG_INFINITY;
    let mut best_model = model.clone();
    let mut stale = 0;
    let mut train_order: Vec<usize> = train_idx.to_vec();
    for _epoch in 0..config.max_epochs {
        rng.shuffle(&mut train_order);
        for batch in train_order.chunks(config.batch_size.max(1)) {
            let mut grads: Vec<(Tensor, Vec<f64>)> = model
                .layers
                .iter()
                .map(|(w, b)| (Tensor::zeros(w.shape()), vec![0.0; b.len()]))
                .collect();
            for &i in batch {
                model.backward(&features[i], labels[i], &mut grads);
            }
            let scale = 1.0 / batch.len() as f64;
            for (li, (gw, gb)) in grads.iter_mut().enumerate() {
                gw.scale(scale);
                gb.iter_mut().for_each(|g| *g *= scale);
                let (st_w, st_b) = &mut states[li];
                adam_step(model.layers[li].0.data_mut(), gw.data(), st_w)?;
                adam_step(&mut model.layers[li].1, gb, st_b)?;
            }
        }
        let acc = holdout_accuracy(&model);
        if acc > best_acc {
            best_acc = acc;
            best_model = model.clone();
            stale = 0;
        } else {
            stale += 1;
            if stale >= config.patience {
                break;
            }
        }
    }
    Ok(if config.max_epochs == 0 { model } else { best_model })
}

// -- seeded experiment runner ------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineKind {
    Logreg,
    Mlp,
}

impl std::str::FromStr for BaselineKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "logreg" => Ok(BaselineKind::Logreg),
            "mlp" => Ok(BaselineKind::Mlp),
            other => Err(Error::Config(format!("unknown baseline model {other:?}"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BaselineConfig {
    pub kind: BaselineKind,
    pub pca_dim: usize,
    pub min_count: u64,
    pub logreg: LogRegConfig,
    pub mlp: MlpConfig,
    pub seed: u64,
}

pub struct BaselineRun {
    pub seed: u64,
    pub report: MetricsReport,
    pub predictions: Vec<PredRecord>,
}

/// The full baseline protocol per seed: split, fit tf-idf and PCA on the
/// training split only, train, and evaluate on the test split over the
/// corpus-wide class set.
pub fn run_baseline_experiment(
    corpus: &[Document],
    classes: &[String],
    config: &BaselineConfig,
    n_seeds: usize,
    ratios: (f64, f64, f64),
) -> Result<Vec<BaselineRun>> {
    if n_seeds == 0 {
        return Err(Error::InvalidArgument("n_seeds must be at least 1".into()));
    }
    let class_of = |doc: &Document| -> Result<usize> {
        let label = doc.label.as_deref().unwrap_or("");
        classes
            .iter()
            .position(|c| c == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    };
    let k = classes.len();
    let mut runs = Vec::with_capacity(n_seeds);
    for i in 0..n_seeds {
        let seed = config.seed + i as u64;
        let split = crate::textprep::split_dataset(corpus, seed, ratios)?;
        let tfidf = TfidfModel::fit(&split.train, config.min_count)?;
        let train_features = tfidf.feature_matrix(&split.train);
        let pca = fit_pca(&train_features, config.pca_dim)?;
        let x_train = pca.transform(&train_features);
        let y_train: Vec<usize> = split
            .train
            .iter()
            .map(&class_of)
            .collect::<Result<_>>()?;
        let test_features = tfidf.feature_matrix(&split.test);
        let x_test = pca.transform(&test_features);

        type Predictor = Box<dyn Fn(&[f64]) -> Vec<f64>>;
        let predict: Predictor = match config.kind {
            BaselineKind::Logreg => {
                let model = train_logreg(&x_train, &y_train, k, &config.logreg)?;
                Box::new(move |x| model.predict_proba(x))
            }
            BaselineKind::Mlp => {
                let mut mlp_config = config.mlp.clone();
                mlp_config.seed = seed;
                let model = train_mlp(&x_train, &y_train, k, &mlp_config)?;
                Box::new(move |x| model.predict_proba(x))
            }
        };
        let predictions: Vec<PredRecord> = split
            .test
            .iter()
            .zip(&x_test)
            .map(|(doc, x)| {
                let probs = predict(x);
                let mut best = 0;
                for (c, &p) in probs.iter().enumerate() {
                    if p > probs[best] {
                        best = c;
                    }
                }
                PredRecord {
                    id: doc.id.clone(),
                    gold: doc.label.clone().unwrap_or_default(),
                    pred: classes[best].clone(),
                    probs,
                }
            })
            .collect();
        let report = metrics::report_from_predictions(&predictions, Some(classes), Some(seed))?;
        runs.push(BaselineRun {
            seed,
            report,
            predictions,
        });
    }
    Ok(runs)
}
