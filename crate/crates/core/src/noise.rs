//! 1/f read-noise synthesis and spectral estimation.
//!
//! Noise is produced in blocks of `n_fft` samples. Each block is drawn in the
//! frequency domain: two independent standard-normal vectors of length
//! `n_fft/2 + 1` form a complex Gaussian spectrum, every bin is scaled by the
//! square root of the target PSD `Q/f`, the negative-frequency half is filled
//! with complex conjugates, and an `n_fft`-point inverse transform returns a
//! real time series. The samples are *relative* fluctuations: a read current
//! is `I_read · (1 + x)`.
//!
//! Amplitudes are chosen so that the expected single-sided periodogram of a
//! block equals `Q/f` at each bin frequency `k·fs/n_fft`. The DC bin is zero,
//! so every block has exactly zero mean.
//!
//! Blocks are addressed by `(seed, stream, block_index)` and do not join
//! continuously; a stream longer than one block is a sequence of independent
//! realisations.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{bail, Result};
use crate::fft::{Direction, Fft, RealInverse};
use crate::fit::fit_line;
use crate::math;
use crate::rng::{self, DOMAIN_NOISE};

/// Block length used by the reference configuration.
pub const DEFAULT_N_FFT: usize = 1024;
/// Sampling rate of the reference read measurements, Hz.
pub const DEFAULT_FS: f64 = 112_000.0;
/// PSD coefficient of the 5 µS reference level.
pub const DEFAULT_Q: f64 = 4e-4;

/// Parameters of the 1/f noise generator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseModel {
    /// Relative noise power per unit `ln f`; the PSD is `q / f`.
    pub q: f64,
    /// Samples per synthesised block; a power of two, at least 8.
    pub n_fft: usize,
    /// Sampling rate in Hz.
    pub fs: f64,
    pub seed: u64,
}

impl NoiseModel {
    pub fn new(q: f64, n_fft: usize, fs: f64, seed: u64) -> Result<Self> {
        let m = NoiseModel { q, n_fft, fs, seed };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.q > 0.0 && self.q.is_finite()) {
            bail!(Config, "noise Q must be positive and finite, got {}", self.q);
        }
        if self.n_fft < 8 || !self.n_fft.is_power_of_two() {
            bail!(
                Config,
                "n_fft must be a power of two >= 8, got {}",
                self.n_fft
            );
        }
        if !(self.fs > 0.0 && self.fs.is_finite()) {
            bail!(Config, "sampling rate must be positive, got {}", self.fs);
        }
        Ok(())
    }

    /// Frequency of spectral bin `k`.
    pub fn bin_frequency(&self, k: usize) -> f64 {
        k as f64 * self.fs / self.n_fft as f64
    }

    /// Target single-sided PSD at `f`.
    pub fn psd(&self, f: f64) -> f64 {
        self.q / f
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel {
            q: DEFAULT_Q,
            n_fft: DEFAULT_N_FFT,
            fs: DEFAULT_FS,
            seed: 0,
        }
    }
}

/// One synthesised block of relative fluctuations.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseBlock {
    pub samples: Vec<f64>,
    pub block_index: u64,
    /// Largest imaginary part left by the inverse transform, relative to the
    /// RMS of the real output.
    pub imag_residue: f64,
}

/// Reusable block synthesiser.
///
/// Internally blocks are generated for `Q = 1` and scaled by `√Q` by the
/// caller; [`NoiseSynth::block`] and [`synthesize_block`] apply the scale.
/// The most recent unit block is cached, so sequential single-sample reads
/// along one stream cost one synthesis per `n_fft` samples.
#[derive(Clone)]
pub struct NoiseSynth {
    n_fft: usize,
    seed: u64,
    /// Per-bin amplitude for `Q = 1`, including the `1/n_fft` inverse scale.
    amplitude: Vec<f64>,
    fft: RealInverse,
    spectrum: Vec<Complex64>,
    normals: Vec<f64>,
    cached: Option<(u64, u64)>,
    cache: Vec<f64>,
}

impl NoiseSynth {
    pub fn new(model: &NoiseModel) -> Result<Self> {
        model.validate()?;
        let n = model.n_fft;
        let nf = n as f64;
        let half = n / 2;
        let mut amplitude = vec![0.0; half + 1];
        for (k, a) in amplitude.iter_mut().enumerate().skip(1) {
            let s_unit = 1.0 / model.bin_frequency(k);
            let var = if k == half {
                nf * model.fs * s_unit
            } else {
                nf * model.fs * s_unit / 4.0
            };
            *a = math::sqrt(var) / nf;
        }
        Ok(NoiseSynth {
            n_fft: n,
            seed: model.seed,
            amplitude,
            fft: RealInverse::new(n),
            spectrum: vec![Complex64::new(0.0, 0.0); half + 1],
            normals: vec![0.0; 2 * (half + 1)],
            cached: None,
            cache: vec![0.0; n],
        })
    }

    pub fn n_fft(&self) -> usize {
        self.n_fft
    }

    /// Non-negative half of the `Q = 1` spectrum of block `(stream, block)`.
    fn fill_spectrum(&mut self, stream: u64, block: u64) {
        let half = self.n_fft / 2;
        let mut rng = rng::substream(self.seed, DOMAIN_NOISE, stream, block);
        for z in self.normals.iter_mut() {
            *z = rng::standard_normal(&mut rng);
        }
        let (re, im) = self.normals.split_at(half + 1);
        let bins = &mut self.spectrum;
        bins[0] = Complex64::new(0.0, 0.0);
        for k in 1..half {
            let a = self.amplitude[k];
            bins[k] = Complex64::new(re[k] * a, im[k] * a);
        }
        bins[half] = Complex64::new(re[half] * self.amplitude[half], 0.0);
    }

    /// Writes the `Q = 1` block `(stream, block)` into `out`.
    pub fn unit_block(&mut self, stream: u64, block: u64, out: &mut [f64]) {
        assert_eq!(out.len(), self.n_fft, "output buffer must hold one block");
        self.fill_spectrum(stream, block);
        self.fft.process(&mut self.spectrum, out);
    }

    /// Largest imaginary part left by a full complex inverse transform of the
    /// mirrored spectrum, relative to the RMS of the real part.
    fn imag_residue(&mut self, stream: u64, block: u64) -> f64 {
        let n = self.n_fft;
        self.fill_spectrum(stream, block);
        let mut re = vec![0.0; n];
        let max_im = RealInverse::via_complex(n).process(&mut self.spectrum, &mut re);
        let rms = math::sqrt(re.iter().map(|x| x * x).sum::<f64>() / n as f64);
        if rms > 0.0 {
            max_im / rms
        } else {
            0.0
        }
    }

    /// Block `(stream, block)` for PSD coefficient `q`.
    pub fn block(&mut self, q: f64, stream: u64, block: u64) -> NoiseBlock {
        let mut samples = vec![0.0; self.n_fft];
        self.unit_block(stream, block, &mut samples);
        let imag_residue = self.imag_residue(stream, block);
        let scale = math::sqrt(q);
        for s in samples.iter_mut() {
            *s *= scale;
        }
        NoiseBlock {
            samples,
            block_index: block,
            imag_residue,
        }
    }

    fn load(&mut self, stream: u64, block: u64) {
        if self.cached != Some((stream, block)) {
            let mut buf = core::mem::take(&mut self.cache);
            self.unit_block(stream, block, &mut buf);
            self.cache = buf;
            self.cached = Some((stream, block));
        }
    }

    /// Unit-Q sample at absolute position `cursor` of `stream`.
    pub fn unit_sample(&mut self, stream: u64, cursor: u64) -> f64 {
        let n = self.n_fft as u64;
        self.load(stream, cursor / n);
        self.cache[(cursor % n) as usize]
    }

    /// Fills `out` with unit-Q samples `cursor .. cursor + out.len()` of
    /// `stream`.
    pub fn fill_unit(&mut self, stream: u64, cursor: u64, out: &mut [f64]) {
        let n = self.n_fft as u64;
        let mut pos = cursor;
        let mut done = 0;
        while done < out.len() {
            let block = pos / n;
            let offset = (pos % n) as usize;
            let take = (self.n_fft - offset).min(out.len() - done);
            self.load(stream, block);
            out[done..done + take].copy_from_slice(&self.cache[offset..offset + take]);
            done += take;
            pos += take as u64;
        }
    }
}

/// Synthesises block `block_index` of noise stream `stream_id`.
///
/// A pure function of `(model.seed, stream_id, block_index)` and the model
/// parameters.
pub fn synthesize_block(model: &NoiseModel, stream_id: u64, block_index: u64) -> Result<NoiseBlock> {
    let mut synth = NoiseSynth::new(model)?;
    Ok(synth.block(model.q, stream_id, block_index))
}

/// Piecewise-constant `Q` keyed by programmed target conductance.
#[derive(Clone, Debug, PartialEq)]
pub struct QTable {
    /// `(lower bound in µS, Q)`, sorted by lower bound; the first bound is 0.
    bands: Vec<(f64, f64)>,
}

impl QTable {
    pub fn new(mut bands: Vec<(f64, f64)>) -> Result<Self> {
        if bands.is_empty() {
            bail!(Config, "Q table needs at least one band");
        }
        bands.sort_by(|a, b| a.0.total_cmp(&b.0));
        if bands[0].0 != 0.0 {
            bail!(Config, "first Q band must start at 0 µS, got {}", bands[0].0);
        }
        for w in bands.windows(2) {
            if w[0].0 == w[1].0 {
                bail!(Config, "duplicate Q band bound {}", w[0].0);
            }
        }
        if let Some(&(_, q)) = bands.iter().find(|(_, q)| !(*q > 0.0 && q.is_finite())) {
            bail!(Config, "Q table values must be positive, got {q}");
        }
        Ok(QTable { bands })
    }

    /// Default table anchored on the measured range: low-conductance states
    /// are noisier.
    pub fn measured_anchors() -> Self {
        QTable {
            bands: vec![(0.0, 1.1e-3), (3.5, 4e-4), (20.0, 5.1e-5)],
        }
    }

    pub fn bands(&self) -> &[(f64, f64)] {
        &self.bands
    }

    pub fn lookup(&self, target_g: f64) -> f64 {
        let idx = self.bands.partition_point(|(lo, _)| *lo <= target_g);
        self.bands[idx.saturating_sub(1)].1
    }
}

/// Single-sided PSD estimate.
#[derive(Clone, Debug, PartialEq)]
pub struct Psd {
    /// Bin frequencies `k·fs/len`, starting at DC.
    pub freqs: Vec<f64>,
    pub psd: Vec<f64>,
    /// Frequency resolution.
    pub df: f64,
    pub segments: usize,
}

impl Psd {
    /// The bins above DC, as `(freqs, psd)`.
    pub fn positive(&self) -> (&[f64], &[f64]) {
        (&self.freqs[1..], &self.psd[1..])
    }

    /// `Σ psd · Δf`, the total power captured by the estimate.
    pub fn total_power(&self) -> f64 {
        self.psd.iter().sum::<f64>() * self.df
    }
}

/// Averaged periodogram over `segments` non-overlapping rectangular segments.
///
/// Each segment has its mean removed before transforming. Samples beyond
/// `segments · ⌊len/segments⌋` are ignored. The scaling is single-sided:
/// interior bins carry `2|X_k|²/(fs·L)`, DC and (for even `L`) Nyquist carry
/// `|X_k|²/(fs·L)`, so `Σ psd · Δf` equals the mean segment variance.
pub fn estimate_psd(samples: &[f64], fs: f64, segments: usize) -> Result<Psd> {
    if segments == 0 {
        bail!(Argument, "segment count must be at least 1");
    }
    if samples.len() < 2 * segments {
        bail!(
            Argument,
            "{} samples are too few for {segments} segments",
            samples.len()
        );
    }
    if !(fs > 0.0 && fs.is_finite()) {
        bail!(Argument, "sampling rate must be positive, got {fs}");
    }
    let len = samples.len() / segments;
    let bins = len / 2 + 1;
    let mut fft = Fft::new(len, Direction::Forward);
    let mut buf = vec![Complex64::new(0.0, 0.0); len];
    let mut acc = vec![0.0; bins];
    for seg in samples.chunks_exact(len).take(segments) {
        let mean = seg.iter().sum::<f64>() / len as f64;
        for (b, s) in buf.iter_mut().zip(seg) {
            *b = Complex64::new(s - mean, 0.0);
        }
        fft.process(&mut buf);
        for (a, x) in acc.iter_mut().zip(&buf) {
            *a += x.norm_sqr();
        }
    }
    debug_assert_eq!(fft.len(), len);
    let base = 1.0 / (fs * len as f64 * segments as f64);
    let psd = acc
        .iter()
        .enumerate()
        .map(|(k, p)| {
            let single = k == 0 || (len % 2 == 0 && k == len / 2);
            if single {
                p * base
            } else {
                2.0 * p * base
            }
        })
        .collect();
    let df = fs / len as f64;
    Ok(Psd {
        freqs: (0..bins).map(|k| k as f64 * df).collect(),
        psd,
        df,
        segments,
    })
}

/// Result of fitting `psd ≈ Q / f^γ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QFit {
    /// `Q` with `γ` held at 1.
    pub q_hat: f64,
    /// Free log-log slope estimate of `γ`.
    pub gamma_hat: f64,
    /// Intercept of the free fit, `Q` at `f = 1 Hz`.
    pub q_free: f64,
}

/// Least-squares fit of `ln psd = ln Q − γ ln f`.
pub fn fit_q(freqs: &[f64], psd: &[f64]) -> Result<QFit> {
    if freqs.len() != psd.len() {
        bail!(
            Argument,
            "{} frequencies but {} PSD values",
            freqs.len(),
            psd.len()
        );
    }
    if freqs.len() < 8 {
        bail!(Argument, "PSD fit needs at least 8 points, got {}", freqs.len());
    }
    if let Some((f, p)) = freqs
        .iter()
        .zip(psd)
        .find(|(f, p)| !(**f > 0.0 && **p > 0.0 && f.is_finite() && p.is_finite()))
    {
        bail!(Argument, "PSD fit needs positive values, got f={f}, psd={p}");
    }
    let lf: Vec<f64> = freqs.iter().map(|f| math::ln(*f)).collect();
    let lp: Vec<f64> = psd.iter().map(|p| math::ln(*p)).collect();
    let line = fit_line(&lf, &lp)?;
    let ln_q = lf.iter().zip(&lp).map(|(f, p)| p + f).sum::<f64>() / lf.len() as f64;
    Ok(QFit {
        q_hat: math::exp(ln_q),
        gamma_hat: -line.slope,
        q_free: math::exp(line.intercept),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(q: f64) -> NoiseModel {
        NoiseModel::new(q, 1024, DEFAULT_FS, 42).unwrap()
    }

    #[test]
    fn rejects_bad_configuration() {
        assert!(NoiseModel::new(4e-4, 1000, DEFAULT_FS, 0).is_err());
        assert!(NoiseModel::new(4e-4, 4, DEFAULT_FS, 0).is_err());
        assert!(NoiseModel::new(0.0, 1024, DEFAULT_FS, 0).is_err());
        assert!(NoiseModel::new(4e-4, 1024, 0.0, 0).is_err());
        let bad = NoiseModel {
            n_fft: 1000,
            ..NoiseModel::default()
        };
        assert!(matches!(
            synthesize_block(&bad, 0, 0),
            Err(crate::Error::Config(_))
        ));
    }

    #[test]
    fn block_is_real_finite_and_zero_mean() {
        let b = synthesize_block(&model(4e-4), 3, 0).unwrap();
        assert_eq!(b.samples.len(), 1024);
        assert!(b.samples.iter().all(|x| x.is_finite()));
        assert!(b.imag_residue < 1e-9, "residue {}", b.imag_residue);
        let mean: f64 = b.samples.iter().sum::<f64>() / 1024.0;
        let rms = (b.samples.iter().map(|x| x * x).sum::<f64>() / 1024.0).sqrt();
        assert!(mean.abs() < 1e-12 * rms);
    }

    #[test]
    fn vanishing_q_gives_vanishing_noise() {
        let b = synthesize_block(&model(1e-30), 0, 0).unwrap();
        assert!(b.samples.iter().all(|x| x.abs() < 1e-10));
    }

    #[test]
    fn synthesis_is_deterministic() {
        let m = model(4e-4);
        let a = synthesize_block(&m, 9, 4).unwrap();
        let b = synthesize_block(&m, 9, 4).unwrap();
        assert_eq!(a, b);
        let c = synthesize_block(&m, 10, 4).unwrap();
        assert_ne!(a.samples, c.samples);
        let d = synthesize_block(&m.with_seed(43), 9, 4).unwrap();
        assert_ne!(a.samples, d.samples);
    }

    #[test]
    fn fill_unit_spans_blocks() {
        let m = model(1.0);
        let mut synth = NoiseSynth::new(&m).unwrap();
        let mut out = vec![0.0; 3000];
        synth.fill_unit(5, 1000, &mut out);
        let b0 = synthesize_block(&m, 5, 0).unwrap();
        let b1 = synthesize_block(&m, 5, 1).unwrap();
        let b3 = synthesize_block(&m, 5, 3).unwrap();
        assert_eq!(out[0], b0.samples[1000]);
        assert_eq!(out[24], b1.samples[0]);
        assert_eq!(out[2999], b3.samples[3999 - 3072]);
        assert_eq!(synth.unit_sample(5, 1030), b1.samples[6]);
    }

    #[test]
    fn q_table_lookup() {
        let t = QTable::measured_anchors();
        assert_eq!(t.lookup(0.0), 1.1e-3);
        assert_eq!(t.lookup(2.0), 1.1e-3);
        assert_eq!(t.lookup(5.0), 4e-4);
        assert_eq!(t.lookup(40.0), 5.1e-5);
        assert!(QTable::new(vec![(1.0, 1e-4)]).is_err());
        assert!(QTable::new(vec![(0.0, -1e-4)]).is_err());
        assert!(QTable::new(vec![]).is_err());
    }

    #[test]
    fn psd_of_single_tone() {
        let fs = 1000.0;
        let len = 256;
        let k = 17;
        let amp = 0.7;
        let x: Vec<f64> = (0..len * 4)
            .map(|i| amp * (2.0 * core::f64::consts::PI * k as f64 * i as f64 / len as f64).sin())
            .collect();
        let p = estimate_psd(&x, fs, 4).unwrap();
        let peak = p
            .psd
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        assert_eq!(peak, k);
        let power = p.psd[k] * p.df;
        assert!((power / (amp * amp / 2.0) - 1.0).abs() < 0.05);
    }

    #[test]
    fn psd_argument_errors() {
        assert!(estimate_psd(&[1.0; 3], 1.0, 2).is_err());
        assert!(estimate_psd(&[1.0; 8], 1.0, 0).is_err());
        assert!(estimate_psd(&[1.0; 8], -1.0, 1).is_err());
    }

    #[test]
    fn fit_q_recovers_noiseless_models() {
        let f: Vec<f64> = (1..=64).map(|k| k as f64 * 109.375).collect();
        let p: Vec<f64> = f.iter().map(|f| 2e-4 / f).collect();
        let r = fit_q(&f, &p).unwrap();
        assert!((r.q_hat - 2e-4).abs() < 1e-12);
        assert!((r.gamma_hat - 1.0).abs() < 1e-9);

        let p: Vec<f64> = f.iter().map(|f| 1e-4 / f.powf(1.1)).collect();
        let r = fit_q(&f, &p).unwrap();
        assert!((r.gamma_hat - 1.1).abs() < 1e-6);
        assert!((r.q_free - 1e-4).abs() < 1e-9);
    }

    #[test]
    fn fit_q_rejects_nonpositive() {
        let f: Vec<f64> = (0..10).map(|k| k as f64).collect();
        let p = vec![1.0; 10];
        assert!(fit_q(&f, &p).is_err());
        let f: Vec<f64> = (1..=10).map(|k| k as f64).collect();
        let mut p = vec![1.0; 10];
        p[3] = -1.0;
        assert!(fit_q(&f, &p).is_err());
        assert!(fit_q(&f[..5], &p[..5]).is_err());
    }
}
