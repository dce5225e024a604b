//! Unnormalised FFTs.
//!
//! With `std` the transforms are planned by `rustfft` and `realfft`. Without
//! it, a radix-2 transform handles power-of-two lengths and a direct DFT
//! covers the rest.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::math;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Direction {
    Forward,
    Inverse,
}

impl Direction {
    fn sign(self) -> f64 {
        match self {
            Direction::Forward => -1.0,
            Direction::Inverse => 1.0,
        }
    }
}

#[derive(Clone)]
enum Backend {
    #[cfg(feature = "std")]
    Planned(std::sync::Arc<dyn rustfft::Fft<f64>>, Vec<Complex64>),
    #[cfg_attr(feature = "std", allow(dead_code))]
    Radix2(Radix2),
    #[cfg_attr(feature = "std", allow(dead_code))]
    Direct(Vec<Complex64>, Direction),
}

/// A planned transform of fixed length; `process` works in place.
#[derive(Clone)]
pub(crate) struct Fft {
    len: usize,
    backend: Backend,
}

impl Fft {
    pub(crate) fn new(len: usize, direction: Direction) -> Self {
        #[cfg(feature = "std")]
        {
            let mut planner = rustfft::FftPlanner::new();
            let plan = match direction {
                Direction::Forward => planner.plan_fft_forward(len),
                Direction::Inverse => planner.plan_fft_inverse(len),
            };
            let scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
            Fft {
                len,
                backend: Backend::Planned(plan, scratch),
            }
        }
        #[cfg(not(feature = "std"))]
        {
            Self::portable(len, direction)
        }
    }

    /// Transform built without `rustfft`, regardless of features.
    #[cfg_attr(feature = "std", allow(dead_code))]
    pub(crate) fn portable(len: usize, direction: Direction) -> Self {
        let backend = if len.is_power_of_two() {
            Backend::Radix2(Radix2::new(len, direction))
        } else {
            Backend::Direct(vec![Complex64::new(0.0, 0.0); len], direction)
        };
        Fft { len, backend }
    }

    pub(crate) fn len(&self) -> usize {
        self.len
    }

    pub(crate) fn process(&mut self, buf: &mut [Complex64]) {
        debug_assert_eq!(buf.len(), self.len);
        match &mut self.backend {
            #[cfg(feature = "std")]
            Backend::Planned(plan, scratch) => plan.process_with_scratch(buf, scratch),
            Backend::Radix2(r) => r.process(buf),
            Backend::Direct(tmp, dir) => direct_dft(buf, tmp, *dir),
        }
    }
}

/// Inverse transform of a Hermitian spectrum given by bins `0..=len/2`.
///
/// The imaginary parts of the DC bin and (for even `len`) the Nyquist bin
/// must be zero.
#[derive(Clone)]
pub(crate) struct RealInverse {
    len: usize,
    backend: RealBackend,
}

#[derive(Clone)]
enum RealBackend {
    #[cfg(feature = "std")]
    Planned(std::sync::Arc<dyn realfft::ComplexToReal<f64>>, Vec<Complex64>),
    #[cfg_attr(feature = "std", allow(dead_code))]
    Full(Fft, Vec<Complex64>),
}

impl RealInverse {
    pub(crate) fn new(len: usize) -> Self {
        #[cfg(feature = "std")]
        {
            let plan = realfft::RealFftPlanner::<f64>::new().plan_fft_inverse(len);
            let scratch = plan.make_scratch_vec();
            RealInverse {
                len,
                backend: RealBackend::Planned(plan, scratch),
            }
        }
        #[cfg(not(feature = "std"))]
        {
            Self::via_complex(len)
        }
    }

    /// Mirrors the spectrum and runs a full complex inverse transform.
    pub(crate) fn via_complex(len: usize) -> Self {
        RealInverse {
            len,
            backend: RealBackend::Full(
                Fft::new(len, Direction::Inverse),
                vec![Complex64::new(0.0, 0.0); len],
            ),
        }
    }

    /// Writes the real signal into `out` and returns the largest imaginary
    /// magnitude left by the transform (always zero for the planned backend).
    /// `half` is used as scratch.
    pub(crate) fn process(&mut self, half: &mut [Complex64], out: &mut [f64]) -> f64 {
        let n = self.len;
        debug_assert_eq!(half.len(), n / 2 + 1);
        debug_assert_eq!(out.len(), n);
        match &mut self.backend {
            #[cfg(feature = "std")]
            RealBackend::Planned(plan, scratch) => {
                plan.process_with_scratch(half, out, scratch)
                    .expect("Hermitian spectrum with real DC and Nyquist bins");
                0.0
            }
            RealBackend::Full(fft, buf) => {
                buf[..half.len()].copy_from_slice(half);
                for k in 1..n - n / 2 {
                    buf[n - k] = half[k].conj();
                }
                fft.process(buf);
                let mut max_im = 0.0f64;
                for (o, c) in out.iter_mut().zip(buf.iter()) {
                    *o = c.re;
                    max_im = max_im.max(c.im.abs());
                }
                max_im
            }
        }
    }
}

#[derive(Clone)]
struct Radix2 {
    twiddles: Vec<Complex64>,
    bitrev: Vec<u32>,
}

impl Radix2 {
    fn new(len: usize, direction: Direction) -> Self {
        let bits = len.trailing_zeros();
        let twiddles = (0..len / 2)
            .map(|k| {
                let (s, c) = math::sin_cos(direction.sign() * 2.0 * PI * k as f64 / len as f64);
                Complex64::new(c, s)
            })
            .collect();
        let bitrev = (0..len as u32)
            .map(|i| if bits == 0 { 0 } else { i.reverse_bits() >> (32 - bits) })
            .collect();
        Radix2 { twiddles, bitrev }
    }

    fn process(&self, buf: &mut [Complex64]) {
        let n = buf.len();
        for (i, &j) in self.bitrev.iter().enumerate() {
            let j = j as usize;
            if i < j {
                buf.swap(i, j);
            }
        }
        let mut half = 1;
        while half < n {
            let stride = n / (2 * half);
            for start in (0..n).step_by(2 * half) {
                for k in 0..half {
                    let w = self.twiddles[k * stride];
                    let a = buf[start + k];
                    let b = buf[start + k + half] * w;
                    buf[start + k] = a + b;
                    buf[start + k + half] = a - b;
                }
            }
            half *= 2;
        }
    }
}

fn direct_dft(buf: &mut [Complex64], tmp: &mut [Complex64], direction: Direction) {
    let n = buf.len();
    for (k, out) in tmp.iter_mut().enumerate() {
        let mut acc = Complex64::new(0.0, 0.0);
        for (t, x) in buf.iter().enumerate() {
            let phase = direction.sign() * 2.0 * PI * ((k * t) % n) as f64 / n as f64;
            let (s, c) = math::sin_cos(phase);
            acc += x * Complex64::new(c, s);
        }
        *out = acc;
    }
    buf.copy_from_slice(tmp);
}

#[cfg(test)]
mod tests {
    use super::*;

    fn signal(n: usize) -> Vec<Complex64> {
        (0..n)
            .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 1.3).cos() - 0.2))
            .collect()
    }

    fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn radix2_matches_direct() {
        for &n in &[1usize, 2, 8, 64, 1024] {
            let x = signal(n);
            let mut a = x.clone();
            let mut b = x.clone();
            Fft::portable(n, Direction::Forward).process(&mut a);
            let mut tmp = vec![Complex64::new(0.0, 0.0); n];
            direct_dft(&mut b, &mut tmp, Direction::Forward);
            assert!(max_diff(&a, &b) < 1e-9 * n as f64, "n={n}");
        }
    }

    #[test]
    fn planned_matches_portable() {
        for &n in &[16usize, 1024, 100] {
            let x = signal(n);
            let mut a = x.clone();
            let mut b = x.clone();
            Fft::new(n, Direction::Inverse).process(&mut a);
            Fft::portable(n, Direction::Inverse).process(&mut b);
            assert!(max_diff(&a, &b) < 1e-10 * n as f64, "n={n}");
        }
    }

    #[test]
    fn inverse_undoes_forward() {
        let n = 256;
        let x = signal(n);
        let mut y = x.clone();
        Fft::new(n, Direction::Forward).process(&mut y);
        Fft::new(n, Direction::Inverse).process(&mut y);
        for v in y.iter_mut() {
            *v /= n as f64;
        }
        assert!(max_diff(&x, &y) < 1e-12);
    }

    #[test]
    fn real_inverse_matches_complex() {
        for &n in &[16usize, 1024, 10] {
            let mut half: Vec<Complex64> = signal(n / 2 + 1);
            half[0].im = 0.0;
            if n % 2 == 0 {
                half[n / 2].im = 0.0;
            }
            let mut a = vec![0.0; n];
            let mut b = vec![0.0; n];
            RealInverse::new(n).process(&mut half.clone(), &mut a);
            let residue = RealInverse::via_complex(n).process(&mut half.clone(), &mut b);
            assert!(residue < 1e-12 * n as f64, "n={n}");
            let d = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            assert!(d < 1e-12 * n as f64, "n={n}");
        }
    }
}
