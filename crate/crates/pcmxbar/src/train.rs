//! Minimal host-side trainer for bias-free two-layer perceptrons.
//!
//! Single-precision SGD on softmax cross-entropy with a ReLU hidden layer.
//! Deterministic for a fixed seed.

use pcmxbar_core::inference::{argmax, MlpModel};
use pcmxbar_core::mapping::Activation;
use pcmxbar_core::rng;
use pcmxbar_core::Matrix;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{AppError, AppResult};
use crate::idx::Dataset;

/// Substream domain for weight initialisation and shuffling.
const DOMAIN_TRAIN: u64 = 0x7472_6169_6e5f_7631;

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub hidden: usize,
    pub epochs: usize,
    pub batch: usize,
    pub learning_rate: f32,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            hidden: 250,
            epochs: 5,
            batch: 32,
            learning_rate: 0.1,
            seed: 0,
        }
    }
}

struct Net {
    inputs: usize,
    hidden: usize,
    outputs: usize,
    w1: Vec<f32>,
    w2: Vec<f32>,
}

impl Net {
    fn hidden_out(&self, x: &[f32], h: &mut [f32]) {
        for (j, hj) in h.iter_mut().enumerate() {
            let row = &self.w1[j * self.inputs..(j + 1) * self.inputs];
            *hj = row.iter().zip(x).map(|(w, v)| w * v).sum::<f32>().max(0.0);
        }
    }

    fn logits(&self, h: &[f32], o: &mut [f32]) {
        for (k, ok) in o.iter_mut().enumerate() {
            let row = &self.w2[k * self.hidden..(k + 1) * self.hidden];
            *ok = row.iter().zip(h).map(|(w, v)| w * v).sum();
        }
    }
}

/// Trains a `inputs-hidden-classes` network on `data`.
///
/// The layer-2 calibration constant is the largest hidden activation over
/// the training set, evaluated in `f64` with the exported weights.
pub fn train_mlp(data: &Dataset, classes: usize, cfg: &TrainConfig) -> AppResult<MlpModel> {
    if data.is_empty() {
        return Err(AppError::Data("training set is empty".into()));
    }
    if cfg.hidden == 0 || cfg.batch == 0 || classes < 2 {
        return Err(AppError::Config("hidden, batch and classes must be positive".into()));
    }
    if let Some(l) = data.labels.iter().find(|l| **l as usize >= classes) {
        return Err(AppError::Data(format!("label {l} exceeds {classes} classes")));
    }
    let inputs = data.images.cols();
    let mut init = rng::substream(cfg.seed, DOMAIN_TRAIN, 0, 0);
    let mut uniform = |n: usize, fan_in: usize| -> Vec<f32> {
        let a = (6.0 / fan_in as f32).sqrt();
        (0..n).map(|_| init.random_range(-a..a)).collect()
    };
    let mut net = Net {
        inputs,
        hidden: cfg.hidden,
        outputs: classes,
        w1: uniform(cfg.hidden * inputs, inputs),
        w2: uniform(classes * cfg.hidden, cfg.hidden),
    };

    let xs: Vec<f32> = data.images.as_slice().iter().map(|v| *v as f32).collect();
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut g1 = vec![0.0f32; net.w1.len()];
    let mut g2 = vec![0.0f32; net.w2.len()];
    let mut h = vec![0.0f32; cfg.hidden];
    let mut o = vec![0.0f32; classes];
    let mut dh = vec![0.0f32; cfg.hidden];
    for epoch in 0..cfg.epochs {
        let mut shuffle = rng::substream(cfg.seed, DOMAIN_TRAIN, 1, epoch as u64);
        order.shuffle(&mut shuffle);
        for batch in order.chunks(cfg.batch) {
            g1.iter_mut().for_each(|g| *g = 0.0);
            g2.iter_mut().for_each(|g| *g = 0.0);
            for &n in batch {
                let x = &xs[n * inputs..(n + 1) * inputs];
                net.hidden_out(x, &mut h);
                net.logits(&h, &mut o);
                let m = o.iter().copied().fold(f32::NEG_INFINITY, f32::max);
                let z: f32 = o.iter().map(|v| (v - m).exp()).sum();
                for (k, ok) in o.iter_mut().enumerate() {
                    *ok = (*ok - m).exp() / z - if k == data.labels[n] as usize { 1.0 } else { 0.0 };
                }
                dh.iter_mut().for_each(|d| *d = 0.0);
                for (k, dk) in o.iter().enumerate() {
                    let row = k * net.hidden..(k + 1) * net.hidden;
                    for ((g, w), (d, hj)) in g2[row.clone()].iter_mut().zip(&net.w2[row]).zip(dh.iter_mut().zip(&h)) {
                        *g += dk * hj;
                        *d += dk * w;
                    }
                }
                for (j, (d, hj)) in dh.iter().zip(&h).enumerate() {
                    if *hj > 0.0 {
                        for (g, v) in g1[j * inputs..(j + 1) * inputs].iter_mut().zip(x) {
                            *g += d * v;
                        }
                    }
                }
            }
            let step = cfg.learning_rate / batch.len() as f32;
            for (w, g) in net.w1.iter_mut().zip(&g1) {
                *w -= step * g;
            }
            for (w, g) in net.w2.iter_mut().zip(&g2) {
                *w -= step * g;
            }
        }
    }

    let w1 = Matrix::from_vec(net.hidden, inputs, net.w1.iter().map(|v| *v as f64).collect())?;
    let w2 = Matrix::from_vec(net.outputs, net.hidden, net.w2.iter().map(|v| *v as f64).collect())?;
    let mut peak = 0.0f64;
    for n in 0..data.len() {
        for z in w1.mul_vec(data.images.row(n))? {
            peak = peak.max(z);
        }
    }
    if !(peak > 0.0) {
        return Err(AppError::Data("trained network has no active hidden unit".into()));
    }
    Ok(MlpModel::new(w1, w2, [Activation::Relu, Activation::Identity], [1.0, peak])?)
}

/// Fraction of `data` classified correctly by the float reference and the
/// predictions themselves.
pub fn reference_accuracy(model: &MlpModel, data: &Dataset) -> AppResult<(f64, Vec<usize>)> {
    let mut preds = Vec::with_capacity(data.len());
    let mut correct = 0;
    for n in 0..data.len() {
        let p = argmax(&model.reference_logits(data.images.row(n))?);
        if p == data.labels[n] as usize {
            correct += 1;
        }
        preds.push(p);
    }
    Ok((correct as f64 / data.len().max(1) as f64, preds))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Two separable blobs in four dimensions.
    fn toy() -> Dataset {
        let n = 200;
        let images = Matrix::from_fn(n, 4, |i, j| {
            let class = i % 2;
            let base = if (j < 2) == (class == 0) { 0.8 } else { 0.1 };
            base + 0.1 * ((i * 7 + j * 3) % 5) as f64 / 5.0
        });
        Dataset {
            images,
            labels: (0..n).map(|i| (i % 2) as u8).collect(),
        }
    }

    #[test]
    fn learns_a_separable_problem() {
        let d = toy();
        let cfg = TrainConfig {
            hidden: 8,
            epochs: 30,
            batch: 10,
            learning_rate: 0.5,
            seed: 3,
        };
        let m = train_mlp(&d, 2, &cfg).unwrap();
        let (acc, _) = reference_accuracy(&m, &d).unwrap();
        assert!(acc > 0.95, "accuracy {acc}");
        assert!(m.input_scales[1] > 0.0);
        assert_eq!(train_mlp(&d, 2, &cfg).unwrap(), m);
    }

    #[test]
    fn rejects_bad_labels() {
        let d = toy();
        assert!(train_mlp(&d, 1, &TrainConfig::default()).is_err());
    }
}
