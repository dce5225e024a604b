//! Two-layer perceptron inference on a single emulated crossbar.
//!
//! Both layers share one array: layer 1 occupies the top-left block (one row
//! per input, one column pair per hidden unit) and layer 2 the bottom-right
//! block (one row per hidden unit, one column pair per output). All other
//! cells are programmed to zero conductance. A forward pass drives the
//! layer-1 rows, decodes the hidden pre-activations, applies the activation
//! and calibration, then drives the layer-2 rows with the result.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use crate::crossbar::{Crossbar, CrossbarConfig, Drive, Window};
use crate::drift::{check_time, DriftParams, DEFAULT_T0};
use crate::error::{bail, Error, Result};
use crate::mapping::{decode_currents, encode_weights, Activation, WeightMapping};
use crate::math;
use crate::matrix::Matrix;

/// Fully connected network without bias terms.
#[derive(Clone, Debug, PartialEq)]
pub struct MlpModel {
    /// `hidden × input`.
    pub w1: Matrix,
    /// `output × hidden`.
    pub w2: Matrix,
    pub activations: [Activation; 2],
    /// Calibration divisor applied to each layer's input before clipping to
    /// `[0, 1]`: 1 for normalised pixels, the largest hidden activation seen on
    /// the training set for layer 2.
    pub input_scales: [f64; 2],
}

impl MlpModel {
    pub fn new(w1: Matrix, w2: Matrix, activations: [Activation; 2], input_scales: [f64; 2]) -> Result<Self> {
        let m = MlpModel {
            w1,
            w2,
            activations,
            input_scales,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if self.w1.rows() == 0 || self.w1.cols() == 0 || self.w2.rows() == 0 {
            bail!(Config, "model layers must be non-empty");
        }
        if self.w2.cols() != self.w1.rows() {
            bail!(
                Config,
                "layer 2 expects {} inputs but layer 1 has {} outputs",
                self.w2.cols(),
                self.w1.rows()
            );
        }
        if let Some(s) = self.input_scales.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
            bail!(Config, "calibration constants must be positive, got {s}");
        }
        Ok(())
    }

    /// `(inputs, hidden, outputs)`.
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.w1.cols(), self.w1.rows(), self.w2.rows())
    }

    /// Floating-point forward pass with the same normalisation the crossbar
    /// path uses.
    pub fn reference_logits(&self, x: &[f64]) -> Result<Vec<f64>> {
        let u0: Vec<f64> = x.iter().map(|v| calibrate(*v, self.input_scales[0])).collect();
        let z1 = self.w1.mul_vec(&u0)?;
        let u1: Vec<f64> = z1
            .iter()
            .map(|z| calibrate(self.activations[0].apply(*z), self.input_scales[1]))
            .collect();
        let z2 = self.w2.mul_vec(&u1)?;
        Ok(z2.iter().map(|z| self.activations[1].apply(*z)).collect())
    }
}

/// `clamp(value / scale, 0, 1)`.
#[inline]
pub fn calibrate(value: f64, scale: f64) -> f64 {
    (value / scale).clamp(0.0, 1.0)
}

/// Index of the largest value; the lowest index wins ties.
pub fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in xs.iter().enumerate().skip(1) {
        if *x > xs[best] {
            best = i;
        }
    }
    best
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Block {
    pub rows: Range<usize>,
    pub cols: Range<usize>,
}

impl Block {
    pub fn cells(&self) -> usize {
        self.rows.len() * self.cols.len()
    }

    fn window(&self) -> Window {
        Window::new(self.rows.clone(), self.cols.clone())
    }
}

/// Placement of both layers in one crossbar.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LayoutPlan {
    pub rows: usize,
    pub cols: usize,
    pub layer1: Block,
    pub layer2: Block,
}

impl LayoutPlan {
    /// Cells outside both weight blocks.
    pub fn padding_cells(&self) -> usize {
        self.rows * self.cols - self.layer1.cells() - self.layer2.cells()
    }
}

/// Block-diagonal layout: `(d_in + d_hidden) × (2·d_hidden + 2·d_out)`.
pub fn plan_layout_dims(d_in: usize, d_hidden: usize, d_out: usize) -> LayoutPlan {
    LayoutPlan {
        rows: d_in + d_hidden,
        cols: 2 * d_hidden + 2 * d_out,
        layer1: Block {
            rows: 0..d_in,
            cols: 0..2 * d_hidden,
        },
        layer2: Block {
            rows: d_in..d_in + d_hidden,
            cols: 2 * d_hidden..2 * d_hidden + 2 * d_out,
        },
    }
}

pub fn plan_layout(model: &MlpModel) -> LayoutPlan {
    let (i, h, o) = model.dims();
    plan_layout_dims(i, h, o)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    pub logits: Vec<f64>,
    pub class: usize,
}

/// A model encoded onto a crossbar layout.
#[derive(Clone, Debug)]
pub struct MappedMlp {
    pub model: MlpModel,
    pub layout: LayoutPlan,
    pub mapping: WeightMapping,
    /// µS per weight unit of each layer.
    pub scales: [f64; 2],
    /// Target conductances for the whole array, µS.
    pub conductances: Matrix,
}

impl MappedMlp {
    pub fn new(model: MlpModel, mapping: WeightMapping) -> Result<Self> {
        model.validate()?;
        let layout = plan_layout(&model);
        let e1 = encode_weights(&model.w1, &mapping)?;
        let e2 = encode_weights(&model.w2, &mapping)?;
        let mut g = Matrix::zeros(layout.rows, layout.cols);
        for (block, enc) in [(&layout.layer1, &e1), (&layout.layer2, &e2)] {
            for (r, row) in block.rows.clone().enumerate() {
                for (c, col) in block.cols.clone().enumerate() {
                    g.set(row, col, enc.g.get(r, c));
                }
            }
        }
        Ok(MappedMlp {
            model,
            scales: [e1.scale, e2.scale],
            layout,
            mapping,
            conductances: g,
        })
    }

    /// `base` resized to this layout.
    pub fn crossbar_config(&self, base: &CrossbarConfig) -> CrossbarConfig {
        CrossbarConfig {
            rows: self.layout.rows,
            cols: self.layout.cols,
            k_factor: base.k_factor.min(self.layout.rows),
            ..base.clone()
        }
    }

    /// Builds a crossbar from `base` and programs the network into it.
    pub fn build_crossbar(&self, base: &CrossbarConfig, drift: &DriftParams) -> Result<Crossbar> {
        let mut x = Crossbar::new(self.crossbar_config(base))?;
        x.load_conductances(&self.conductances, drift)?;
        Ok(x)
    }

    fn check_crossbar(&self, xbar: &Crossbar) -> Result<()> {
        if !xbar.is_loaded() {
            bail!(State, "crossbar has not been programmed with the network");
        }
        if (xbar.rows(), xbar.cols()) != (self.layout.rows, self.layout.cols) {
            bail!(
                State,
                "crossbar is {}x{}, layout needs {}x{}",
                xbar.rows(),
                xbar.cols(),
                self.layout.rows,
                self.layout.cols
            );
        }
        Ok(())
    }

    pub fn forward(&self, xbar: &mut Crossbar, image: &[f64], t: f64) -> Result<Prediction> {
        let images = Matrix::from_vec(1, image.len(), image.to_vec())?;
        let mut out = self.forward_batch(xbar, &images, &[t])?;
        Ok(out.remove(0).remove(0))
    }

    /// Predictions for every image (one per row of `images`) at every time.
    ///
    /// All time points are evaluated in one crossbar call per layer, which
    /// consumes the same noise positions as evaluating the times one after
    /// another.
    pub fn forward_batch(&self, xbar: &mut Crossbar, images: &Matrix, times: &[f64]) -> Result<Vec<Vec<Prediction>>> {
        self.check_crossbar(xbar)?;
        let (d_in, d_hidden, d_out) = self.model.dims();
        if images.cols() != d_in {
            bail!(
                Argument,
                "images have {} values, network expects {d_in}",
                images.cols()
            );
        }
        if images.rows() == 0 {
            bail!(Argument, "no images to evaluate");
        }
        if let Some(v) = images.as_slice().iter().find(|v| !(**v >= 0.0 && **v <= 1.0)) {
            bail!(Argument, "image value {v} lies outside [0, 1]");
        }
        for &t in times {
            check_time(xbar.t0(), t)?;
        }
        let b = images.rows();
        let v_read = self.mapping.v_read;
        let s0 = self.model.input_scales[0];
        let v1 = Matrix::from_fn(d_in, b, |i, n| calibrate(images.get(n, i), s0) * v_read);
        let i1 = xbar.mvm_window(&self.layout.layer1.window(), Drive::Shared(&v1), times)?;

        let s1 = self.model.input_scales[1];
        let act1 = self.model.activations[0];
        let lanes = times.len() * b;
        let mut v2 = Matrix::zeros(d_hidden, lanes);
        let mut pair = vec![0.0; 2 * d_hidden];
        for (p, cur) in i1.iter().enumerate() {
            for n in 0..b {
                for (k, slot) in pair.iter_mut().enumerate() {
                    *slot = cur.get(k, n);
                }
                let z = decode_currents(&pair, self.scales[0], v_read)?;
                for (h, zh) in z.iter().enumerate() {
                    v2.set(h, p * b + n, calibrate(act1.apply(*zh), s1) * v_read);
                }
            }
        }
        let i2 = xbar.mvm_window(&self.layout.layer2.window(), Drive::PerTime(&v2), times)?;

        let act2 = self.model.activations[1];
        let mut pair = vec![0.0; 2 * d_out];
        let mut out = Vec::with_capacity(times.len());
        for cur in &i2 {
            let mut preds = Vec::with_capacity(b);
            for n in 0..b {
                for (k, slot) in pair.iter_mut().enumerate() {
                    *slot = cur.get(k, n);
                }
                let logits: Vec<f64> = decode_currents(&pair, self.scales[1], v_read)?
                    .into_iter()
                    .map(|z| act2.apply(z))
                    .collect();
                let class = argmax(&logits);
                preds.push(Prediction { logits, class });
            }
            out.push(preds);
        }
        Ok(out)
    }
}

/// Emulated times at which the network is evaluated.
#[derive(Clone, Debug, PartialEq)]
pub struct InferenceSchedule {
    pub t0: f64,
    pub time_points: Vec<f64>,
}

impl InferenceSchedule {
    pub fn new(t0: f64, time_points: Vec<f64>) -> Result<Self> {
        if !(t0 > 0.0) {
            bail!(Config, "t0 must be > 0, got {t0}");
        }
        if time_points.is_empty() {
            bail!(Config, "schedule needs at least one time point");
        }
        if !(time_points[0] >= t0) {
            bail!(Config, "first time point {} precedes t0 = {t0}", time_points[0]);
        }
        if time_points.windows(2).any(|w| !(w[1] > w[0])) {
            bail!(Config, "time points must be strictly increasing");
        }
        Ok(InferenceSchedule { t0, time_points })
    }

    /// `n` points from `t0` to `t_end`, evenly spaced in `ln t`.
    pub fn log_spaced(t0: f64, t_end: f64, n: usize) -> Result<Self> {
        if n < 2 || !(t_end > t0) {
            bail!(Config, "log spacing needs n >= 2 and t_end > t0");
        }
        let span = math::ln(t_end / t0);
        let mut pts: Vec<f64> = (0..n)
            .map(|k| t0 * math::exp(span * k as f64 / (n - 1) as f64))
            .collect();
        pts[0] = t0;
        pts[n - 1] = t_end;
        Self::new(t0, pts)
    }
}

impl Default for InferenceSchedule {
    /// 20 points from 23 µs to 30 h.
    fn default() -> Self {
        Self::log_spaced(DEFAULT_T0, 30.0 * 3600.0, 20).expect("valid default schedule")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AccuracyRow {
    pub t: f64,
    pub correct: usize,
    pub n_images: usize,
    pub accuracy: f64,
    /// Row-major `classes × classes` counts: `[true][predicted]`.
    pub confusion: Vec<u32>,
}

impl AccuracyRow {
    /// Recall of every class.
    pub fn per_class_accuracy(&self, classes: usize) -> Vec<f64> {
        (0..classes)
            .map(|c| {
                let row = &self.confusion[c * classes..(c + 1) * classes];
                let total: u32 = row.iter().sum();
                if total == 0 {
                    0.0
                } else {
                    row[c] as f64 / total as f64
                }
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AccuracyTable {
    pub seed: u64,
    pub classes: usize,
    pub rows: Vec<AccuracyRow>,
}

/// Lanes (images × time points) handed to one crossbar call.
pub const MAX_LANES: usize = 1 << 15;

/// Accuracy at every scheduled time.
///
/// Time points are evaluated in order with cursors carried over, grouped so
/// that each crossbar call covers at most [`MAX_LANES`] lanes.
pub fn evaluate_over_time(
    mapped: &MappedMlp,
    xbar: &mut Crossbar,
    schedule: &InferenceSchedule,
    images: &Matrix,
    labels: &[u8],
) -> Result<AccuracyTable> {
    if images.rows() == 0 {
        bail!(Argument, "dataset is empty");
    }
    if labels.len() != images.rows() {
        bail!(
            Argument,
            "{} labels for {} images",
            labels.len(),
            images.rows()
        );
    }
    let classes = mapped.model.dims().2;
    if let Some(l) = labels.iter().find(|l| **l as usize >= classes) {
        bail!(Argument, "label {l} exceeds {classes} classes");
    }
    let n = images.rows();
    let group = (MAX_LANES / n).max(1);
    let mut rows = Vec::with_capacity(schedule.time_points.len());
    for times in schedule.time_points.chunks(group) {
        let preds = mapped.forward_batch(xbar, images, times)?;
        for (t, per_time) in times.iter().zip(preds) {
            let mut confusion = vec![0u32; classes * classes];
            let mut correct = 0;
            for (p, &l) in per_time.iter().zip(labels) {
                confusion[l as usize * classes + p.class] += 1;
                if p.class == l as usize {
                    correct += 1;
                }
            }
            rows.push(AccuracyRow {
                t: *t,
                correct,
                n_images: n,
                accuracy: correct as f64 / n as f64,
                confusion,
            });
        }
    }
    Ok(AccuracyTable {
        seed: xbar.config().noise.seed,
        classes,
        rows,
    })
}

/// Runs [`evaluate_over_time`] once per seed on freshly programmed arrays.
pub fn evaluate_seeds(
    mapped: &MappedMlp,
    base: &CrossbarConfig,
    drift: &DriftParams,
    schedule: &InferenceSchedule,
    images: &Matrix,
    labels: &[u8],
    seeds: &[u64],
) -> Result<Vec<AccuracyTable>> {
    seeds
        .iter()
        .map(|&seed| {
            let mut cfg = base.clone();
            cfg.noise.seed = seed;
            let mut xbar = mapped.build_crossbar(&cfg, drift)?;
            evaluate_over_time(mapped, &mut xbar, schedule, images, labels)
        })
        .collect()
}

/// Statistics of accuracy across seeds at one time point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeedBand {
    pub t: f64,
    pub mean: f64,
    pub std: f64,
    pub median: f64,
    pub min: f64,
    pub max: f64,
}

pub fn seed_bands(tables: &[AccuracyTable]) -> Result<Vec<SeedBand>> {
    let Some(first) = tables.first() else {
        bail!(Argument, "no accuracy tables");
    };
    let points = first.rows.len();
    if tables.iter().any(|t| t.rows.len() != points) {
        return Err(Error::Argument("tables cover different schedules".into()));
    }
    Ok((0..points)
        .map(|p| {
            let mut acc: Vec<f64> = tables.iter().map(|t| t.rows[p].accuracy).collect();
            acc.sort_by(f64::total_cmp);
            let n = acc.len() as f64;
            let mean = acc.iter().sum::<f64>() / n;
            let var = if acc.len() > 1 {
                acc.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / (n - 1.0)
            } else {
                0.0
            };
            let mid = acc.len() / 2;
            let median = if acc.len() % 2 == 1 {
                acc[mid]
            } else {
                0.5 * (acc[mid - 1] + acc[mid])
            };
            SeedBand {
                t: first.rows[p].t,
                mean,
                std: math::sqrt(var),
                median,
                min: acc[0],
                max: acc[acc.len() - 1],
            }
        })
        .collect())
}

/// Target-conductance range `(lo, hi]` defining a histogram group, µS.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TargetGroup {
    pub lo: f64,
    pub hi: f64,
}

impl TargetGroup {
    pub fn contains(&self, g: f64) -> bool {
        g > self.lo && g <= self.hi
    }

    /// Three ranges spanning the default 0–5 µS weight encoding.
    pub fn defaults() -> Vec<TargetGroup> {
        vec![
            TargetGroup { lo: 0.0, hi: 1.0 },
            TargetGroup { lo: 1.0, hi: 2.5 },
            TargetGroup {
                lo: 2.5,
                hi: f64::INFINITY,
            },
        ]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroupHistogram {
    pub group: TargetGroup,
    pub count: usize,
    pub mean: f64,
    /// `bins + 1` edges spanning the group's minimum to maximum.
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

/// Histograms of noise-free conductances at `t`, grouped by programmed
/// target.
pub fn conductance_snapshot(
    xbar: &Crossbar,
    t: f64,
    bins: usize,
    groups: &[TargetGroup],
) -> Result<Vec<GroupHistogram>> {
    if bins == 0 {
        bail!(Argument, "histogram needs at least one bin");
    }
    let g = xbar.conductances_at(t)?;
    let rows = xbar.rows();
    let cols = xbar.cols();
    let mut out = Vec::with_capacity(groups.len());
    for group in groups {
        let mut values = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                if group.contains(xbar.cell(r, c).target_g) {
                    values.push(g.get(r, c));
                }
            }
        }
        out.push(histogram(*group, &values, bins));
    }
    Ok(out)
}

fn histogram(group: TargetGroup, values: &[f64], bins: usize) -> GroupHistogram {
    let mut counts = vec![0u64; bins];
    if values.is_empty() {
        return GroupHistogram {
            group,
            count: 0,
            mean: 0.0,
            edges: vec![0.0; bins + 1],
            counts,
        };
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = (hi - lo) / bins as f64;
    let edges: Vec<f64> = (0..=bins)
        .map(|k| if k == bins { hi } else { lo + width * k as f64 })
        .collect();
    for v in values {
        let idx = if width > 0.0 {
            (((v - lo) / width) as usize).min(bins - 1)
        } else {
            bins - 1
        };
        counts[idx] += 1;
    }
    GroupHistogram {
        group,
        count: values.len(),
        mean: values.iter().sum::<f64>() / values.len() as f64,
        edges,
        counts,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_formula() {
        let l = plan_layout_dims(784, 250, 10);
        assert_eq!((l.rows, l.cols), (1034, 520));
        assert_eq!(l.padding_cells(), 140_680);
        let l = plan_layout_dims(4, 3, 2);
        assert_eq!((l.rows, l.cols), (7, 10));
        assert_eq!(l.layer2.rows, 4..7);
        assert_eq!(l.layer2.cols, 6..10);
    }

    #[test]
    fn argmax_ties_pick_lowest() {
        assert_eq!(argmax(&[0.0, 0.0, 0.0]), 0);
        assert_eq!(argmax(&[1.0, 3.0, 3.0]), 1);
    }

    #[test]
    fn schedules() {
        let s = InferenceSchedule::default();
        assert_eq!(s.time_points.len(), 20);
        assert_eq!(s.time_points[0], DEFAULT_T0);
        assert_eq!(s.time_points[19], 108_000.0);
        assert!(InferenceSchedule::new(1.0, vec![0.5, 2.0]).is_err());
        assert!(InferenceSchedule::new(1.0, vec![2.0, 2.0]).is_err());
    }

    #[test]
    fn model_shape_validation() {
        let w1 = Matrix::zeros(3, 4);
        let w2 = Matrix::zeros(2, 2);
        assert!(MlpModel::new(w1, w2, [Activation::Relu, Activation::Identity], [1.0, 1.0]).is_err());
    }
}
