//! Finite-difference gradient checking.
//!
//! `grad_check` perturbs every coordinate of a flat parameter vector with
//! central differences and compares against an analytic gradient, returning
//! the worst relative error. Test suites use it as the oracle for every
//! layer's backward pass and for the assembled classifier.

/// Max relative error between `analytic` and central differences of `f` at `x`.
///
/// Relative error per coordinate is `|a - n| / max(|a|, |n|, 1)`, which keeps
/// near-zero gradients from blowing up the ratio.
pub fn grad_check<F>(mut f: F, x: &[f64], analytic: &[f64], eps: f64) -> f64
where
    F: FnMut(&[f64]) -> f64,
{
    assert_eq!(x.len(), analytic.len());
    let mut worst = 0.0f64;
    let mut probe = x.to_vec();
    for i in 0..x.len() {
        probe[i] = x[i] + eps;
        let fp = f(&probe);
        probe[i] = x[i] - eps;
        let fm = f(&probe);
        probe[i] = x[i];
        let numeric = (fp - fm) / (2.0 * eps);
        let a = analytic[i];
        let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1.0);
        if rel > worst {
            worst = rel;
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::layers::*;
    use crate::nn::Tensor;
    use crate::rng::Rng;

    #[test]
    fn dense_layer_below_1e6() {
        let mut r = Rng::new(42);
        // flatten (w, b, input) into one vector; objective is a fixed random
        // projection of the dense output
        let (k, f) = (3, 4);
        let n = k * f + k + f;
        let x: Vec<f64> = (0..n).map(|_| r.uniform(-1.0, 1.0)).collect();
        let proj: Vec<f64> = (0..k).map(|_| r.uniform(-1.0, 1.0)).collect();
        let eval = |p: &[f64]| -> f64 {
            let w = Tensor::from_vec(&[k, f], p[..k * f].to_vec()).unwrap();
            let b = &p[k * f..k * f + k];
            let input = &p[k * f + k..];
            dense(input, &w, b)
                .unwrap()
                .iter()
                .zip(&proj)
                .map(|(o, c)| o * c)
                .sum()
        };
        let w = Tensor::from_vec(&[k, f], x[..k * f].to_vec()).unwrap();
        let input = &x[k * f + k..];
        let g = dense_backward(input, &w, &proj);
        let mut analytic = Vec::with_capacity(n);
        analytic.extend_from_slice(g.d_w.data());
        analytic.extend_from_slice(&g.d_b);
        analytic.extend_from_slice(&g.d_input);
        let err = grad_check(eval, &x, &analytic, 1e-5);
        assert!(err < 1e-6, "max rel err {err}");
    }

    #[test]
    fn conv_relu_away_from_kink_below_1e5() {
        let mut r = Rng::new(7);
        let (l, e, h, f) = (5, 3, 3, 2);
        loop {
            let input = Tensor::from_vec(
                &[l, e],
                (0..l * e).map(|_| r.uniform(-1.0, 1.0)).collect(),
            )
            .unwrap();
            let mut bank = FilterBank::zeros(h, e, f);
            for w in bank.weights.data_mut() {
                *w = r.uniform(-1.0, 1.0);
            }
            for b in bank.biases.iter_mut() {
                *b = r.uniform(-0.5, 0.5);
            }
            // reject draws with a pre-activation near the ReLU kink
            let pre = conv1d_same(&input, &bank, Activation::Identity).unwrap();
            let eps = 1e-5;
            if pre.data().iter().any(|&z| z.abs() <= 10.0 * eps) {
                continue;
            }
            let out = conv1d_same(&input, &bank, Activation::Relu).unwrap();
            let proj: Vec<f64> = (0..l * f).map(|_| r.uniform(-1.0, 1.0)).collect();
            let d_out = Tensor::from_vec(&[l, f], proj.clone()).unwrap();
            let g = conv1d_same_backward(&input, &bank, Activation::Relu, &out, &d_out);

            let n = l * e + f * h * e + f;
            let mut x = Vec::with_capacity(n);
            x.extend_from_slice(input.data());
            x.extend_from_slice(bank.weights.data());
            x.extend_from_slice(&bank.biases);
            let mut analytic = Vec::with_capacity(n);
            analytic.extend_from_slice(g.d_input.data());
            analytic.extend_from_slice(g.d_weights.data());
            analytic.extend_from_slice(&g.d_biases);
            let eval = |p: &[f64]| -> f64 {
                let inp = Tensor::from_vec(&[l, e], p[..l * e].to_vec()).unwrap();
                let mut bk = FilterBank::zeros(h, e, f);
                bk.weights =
                    Tensor::from_vec(&[f, h, e], p[l * e..l * e + f * h * e].to_vec()).unwrap();
                bk.biases = p[l * e + f * h * e..].to_vec();
                conv1d_same(&inp, &bk, Activation::Relu)
                    .unwrap()
                    .data()
                    .iter()
                    .zip(&proj)
                    .map(|(o, c)| o * c)
                    .sum()
            };
            let err = grad_check(eval, &x, &analytic, eps);
            assert!(err < 1e-5, "max rel err {err}");
            break;
        }
    }

    #[test]
    fn softmax_cross_entropy_composite_below_1e6() {
        let mut r = Rng::new(99);
        let k = 5;
        let logits: Vec<f64> = (0..k).map(|_| r.uniform(-2.0, 2.0)).collect();
        let hot = r.below(k);
        let y: Vec<f64> = (0..k).map(|i| if i == hot { 1.0 } else { 0.0 }).collect();
        let pi = softmax(&logits);
        let analytic = softmax_ce_grad(&pi, &y);
        let eval = |p: &[f64]| cross_entropy(&y, &softmax(p)).unwrap();
        let err = grad_check(eval, &logits, &analytic, 1e-5);
        assert!(err < 1e-6, "max rel err {err}");
    }
}
