#![allow(dead_code)]

use pcmxbar_core::rng;
use pcmxbar_core::Matrix;
use rand_core::RngCore;

/// Deterministic uniform values in `[lo, hi)` for test fixtures.
pub struct Uniform(rng::Substream);

impl Uniform {
    pub fn new(seed: u64) -> Self {
        Uniform(rng::substream(seed, 0x7465_7374, 0, 0))
    }

    pub fn next(&mut self, lo: f64, hi: f64) -> f64 {
        let u = (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        lo + (hi - lo) * u
    }

    pub fn matrix(&mut self, rows: usize, cols: usize, lo: f64, hi: f64) -> Matrix {
        Matrix::from_fn(rows, cols, |_, _| self.next(lo, hi))
    }

    pub fn vec(&mut self, n: usize, lo: f64, hi: f64) -> Vec<f64> {
        (0..n).map(|_| self.next(lo, hi)).collect()
    }
}

/// Textbook `O(n·m)` product.
pub fn naive_matmul(a: &Matrix, b: &Matrix) -> Matrix {
    Matrix::from_fn(a.rows(), b.cols(), |i, j| {
        (0..a.cols()).map(|k| a.get(i, k) * b.get(k, j)).sum()
    })
}

/// One-sided periodogram by direct DFT: `2|X_k|²/(fs·n)` for interior bins.
pub fn dft_periodogram(x: &[f64], fs: f64) -> Vec<f64> {
    let n = x.len();
    (0..=n / 2)
        .map(|k| {
            let (mut re, mut im) = (0.0, 0.0);
            for (t, v) in x.iter().enumerate() {
                let a = -2.0 * std::f64::consts::PI * (k * t) as f64 / n as f64;
                re += v * a.cos();
                im += v * a.sin();
            }
            let p = (re * re + im * im) / (fs * n as f64);
            if k == 0 || (n % 2 == 0 && k == n / 2) {
                p
            } else {
                2.0 * p
            }
        })
        .collect()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}
