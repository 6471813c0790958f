//! Forward and analytic backward passes for every layer of the classifier:
//! embedding lookup, same-length 1-D convolution, max-over-time pooling,
//! dense affine map, inverted dropout, softmax, and cross-entropy.
//!
//! Layers are pure functions of explicit tensors. Each `*_backward` takes the
//! upstream gradient and returns gradients for inputs and parameters; nothing
//! here owns state, so callers decide what is trainable.

use crate::error::{Error, Result};
use crate::nn::Tensor;
use crate::rng::Rng;

/// Nonlinearity applied after the convolution's affine map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => {
                if x > 0.0 {
                    x
                } else {
                    0.0
                }
            }
            Activation::Identity => x,
        }
    }

    /// Derivative recovered from the *post-activation* value.
    /// For ReLU the output determines the active mask (ties at 0 get slope 0).
    #[inline]
    pub fn grad_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
        }
    }
}

impl std::str::FromStr for Activation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "relu" => Ok(Activation::Relu),
            "identity" => Ok(Activation::Identity),
            other => Err(Error::Config(format!("unknown activation {other:?}"))),
        }
    }
}

/// One bank of convolution filters: `f` filters, each an `h`×`e` window.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterBank {
    pub h: usize,
    pub e: usize,
    pub f: usize,
    /// `[f, h, e]` row-major.
    pub weights: Tensor,
    pub biases: Vec<f64>,
}

impl FilterBank {
    pub fn zeros(h: usize, e: usize, f: usize) -> Self {
        FilterBank {
            h,
            e,
            f,
            weights: Tensor::zeros(&[f, h, e]),
            biases: vec![0.0; f],
        }
    }

    #[inline]
    fn filter_row(&self, fi: usize, hi: usize) -> &[f64] {
        let base = (fi * self.h + hi) * self.e;
        &self.weights.data()[base..base + self.e]
    }
}

/// Look up embedding rows for a sequence of token ids.
///
/// Index 0 is the padding id: it always yields a zero row and never receives
/// gradient, regardless of the table contents.
pub fn embedding_lookup(ids: &[usize], table: &Tensor) -> Result<Tensor> {
    let v = table.rows();
    let e = table.cols();
    let mut out = Tensor::zeros(&[ids.len(), e]);
    for (i, &id) in ids.iter().enumerate() {
        if id >= v {
            return Err(Error::Shape(format!("token id {id} out of range (V={v})")));
        }
        if id != 0 {
            out.row_mut(i).copy_from_slice(table.row(id));
        }
    }
    Ok(out)
}

/// Accumulate `d_output` into the rows of `d_table` named by `ids`.
pub fn embedding_lookup_backward(ids: &[usize], d_output: &Tensor, d_table: &mut Tensor) {
    for (i, &id) in ids.iter().enumerate() {
        if id == 0 {
            continue;
        }
        let src = d_output.row(i);
        for (dst, g) in d_table.row_mut(id).iter_mut().zip(src) {
            *dst += g;
        }
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Same-length 1-D convolution over an `L`×`E` input.
///
/// The input is implicitly padded with `h/2` zero rows before and `(h-1)/2`
/// after (`h-1` total), so the output has exactly `L` rows of `f` columns.
/// `act` is applied after the affine map.
pub fn conv1d_same(input: &Tensor, bank: &FilterBank, act: Activation) -> Result<Tensor> {
    if input.cols() != bank.e {
        return Err(Error::Shape(format!(
            "conv input width {} != filter width {}",
            input.cols(),
            bank.e
        )));
    }
    let l = input.rows();
    let pad_left = bank.h / 2;
    let mut out = Tensor::zeros(&[l, bank.f]);
    for t in 0..l {
        let out_row = out.row_mut(t);
        #[allow(clippy::needless_range_loop)]
        for fi in 0..bank.f {
            let mut acc = bank.biases[fi];
            for hi in 0..bank.h {
                let r = t as isize + hi as isize - pad_left as isize;
                if r < 0 || r >= l as isize {
                    continue;
                }
                acc += dot(bank.filter_row(fi, hi), input.row(r as usize));
            }
            out_row[fi] = act.apply(acc);
        }
    }
    Ok(out)
}

/// Gradients produced by [`conv1d_same_backward`].
pub struct ConvGrads {
    pub d_input: Tensor,
    pub d_weights: Tensor,
    pub d_biases: Vec<f64>,
}

/// Backward pass of [`conv1d_same`]. `output` must be the forward result for
/// the same `(input, bank, act)` so the activation mask can be recovered.
pub fn conv1d_same_backward(
    input: &Tensor,
    bank: &FilterBank,
    act: Activation,
    output: &Tensor,
    d_output: &Tensor,
) -> ConvGrads {
    let l = input.rows();
    let pad_left = bank.h / 2;
    let mut d_input = Tensor::zeros(&[l, bank.e]);
    let mut d_weights = Tensor::zeros(&[bank.f, bank.h, bank.e]);
    let mut d_biases = vec![0.0; bank.f];
    for t in 0..l {
        let out_row = output.row(t);
        let d_row = d_output.row(t);
        for fi in 0..bank.f {
            let g = d_row[fi] * act.grad_from_output(out_row[fi]);
            if g == 0.0 {
                continue;
            }
            d_biases[fi] += g;
            for hi in 0..bank.h {
                let r = t as isize + hi as isize - pad_left as isize;
                if r < 0 || r >= l as isize {
                    continue;
                }
                let in_row = input.row(r as usize);
                let wbase = (fi * bank.h + hi) * bank.e;
                let w_row = &bank.weights.data()[wbase..wbase + bank.e];
                let dw_row = &mut d_weights.data_mut()[wbase..wbase + bank.e];
                let di_row = d_input.row_mut(r as usize);
                for e in 0..bank.e {
                    dw_row[e] += g * in_row[e];
                    di_row[e] += g * w_row[e];
                }
            }
        }
    }
    ConvGrads {
        d_input,
        d_weights,
        d_biases,
    }
}

/// Max over time: per column, the maximum value and the row index where it
/// first occurs.
pub fn max_pool_time(input: &Tensor) -> (Vec<f64>, Vec<usize>) {
    let (l, f) = (input.rows(), input.cols());
    let mut best = input.row(0).to_vec();
    let mut arg = vec![0usize; f];
    for t in 1..l {
        let row = input.row(t);
        for fi in 0..f {
            if row[fi] > best[fi] {
                best[fi] = row[fi];
                arg[fi] = t;
            }
        }
    }
    (best, arg)
}

/// Backward pass of [`max_pool_time`]: each pooled gradient lands on the
/// argmax row of its column, all other cells get zero.
pub fn max_pool_time_backward(l: usize, argmax: &[usize], d_pooled: &[f64]) -> Tensor {
    let f = d_pooled.len();
    let mut d_input = Tensor::zeros(&[l, f]);
    for (fi, (&t, &g)) in argmax.iter().zip(d_pooled).enumerate() {
        d_input.row_mut(t)[fi] = g;
    }
    d_input
}

/// Affine map `w·x + b` where `w` is `K`×`F`.
pub fn dense(input: &[f64], w: &Tensor, b: &[f64]) -> Result<Vec<f64>> {
    if w.cols() != input.len() || w.rows() != b.len() {
        return Err(Error::Shape(format!(
            "dense {}x{} with input {} bias {}",
            w.rows(),
            w.cols(),
            input.len(),
            b.len()
        )));
    }
    Ok((0..w.rows())
        .map(|k| b[k] + dot(w.row(k), input))
        .collect())
}

pub struct DenseGrads {
    pub d_input: Vec<f64>,
    pub d_w: Tensor,
    pub d_b: Vec<f64>,
}

pub fn dense_backward(input: &[f64], w: &Tensor, d_output: &[f64]) -> DenseGrads {
    let (k, f) = (w.rows(), w.cols());
    let mut d_w = Tensor::zeros(&[k, f]);
    let mut d_input = vec![0.0; f];
    #[allow(clippy::needless_range_loop)]
    for ki in 0..k {
        let g = d_output[ki];
        let w_row = w.row(ki);
        let dw_row = d_w.row_mut(ki);
        for j in 0..f {
            dw_row[j] = g * input[j];
            d_input[j] += g * w_row[j];
        }
    }
    DenseGrads {
        d_input,
        d_w,
        d_b: d_output.to_vec(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DropoutMode {
    Train,
    Infer,
}

/// Inverted dropout. In train mode each entry is kept with probability
/// `p_keep` and scaled by `1/p_keep`; inference is the identity. The returned
/// scale vector is the mask the backward pass must reuse.
pub fn dropout(
    input: &[f64],
    p_keep: f64,
    mode: DropoutMode,
    rng: &mut Rng,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(p_keep > 0.0 && p_keep <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "p_keep must be in (0, 1], got {p_keep}"
        )));
    }
    match mode {
        DropoutMode::Infer => Ok((input.to_vec(), vec![1.0; input.len()])),
        DropoutMode::Train => {
            let scales: Vec<f64> = (0..input.len())
                .map(|_| {
                    if rng.bernoulli(p_keep) {
                        1.0 / p_keep
                    } else {
                        0.0
                    }
                })
                .collect();
            let out = input.iter().zip(&scales).map(|(x, s)| x * s).collect();
            Ok((out, scales))
        }
    }
}

pub fn dropout_backward(d_output: &[f64], scales: &[f64]) -> Vec<f64> {
    d_output.iter().zip(scales).map(|(g, s)| g * s).collect()
}

/// Numerically stable softmax (max subtraction).
pub fn softmax(x: &[f64]) -> Vec<f64> {
    let max = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = x.iter().map(|&v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Cross-entropy of a one-hot target against a probability vector:
/// `-log pi[k]` for the hot index `k`.
pub fn cross_entropy(y: &[f64], pi: &[f64]) -> Result<f64> {
    if y.len() != pi.len() {
        return Err(Error::Shape(format!(
            "target length {} != distribution length {}",
            y.len(),
            pi.len()
        )));
    }
    let mut hot = None;
    for (i, &v) in y.iter().enumerate() {
        if v == 1.0 {
            if hot.is_some() {
                return Err(Error::InvalidArgument("target is not one-hot".into()));
            }
            hot = Some(i);
        } else if v != 0.0 {
            return Err(Error::InvalidArgument("target is not one-hot".into()));
        }
    }
    let hot = hot.ok_or_else(|| Error::InvalidArgument("target is not one-hot".into()))?;
    Ok(-pi[hot].ln())
}

/// Gradient of `cross_entropy(softmax(x), y)` with respect to the logits `x`.
pub fn softmax_ce_grad(pi: &[f64], y: &[f64]) -> Vec<f64> {
    pi.iter().zip(y).map(|(p, t)| p - t).collect()
}
