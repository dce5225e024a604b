//! Power-law conductance drift.
//!
//! `G(t) = G(t0) · (t/t0)^(−ν)`, evaluated as `G(t0) · exp(−ν · ln(t/t0))`.
//! Drift exponents are drawn per device from a Gaussian clamped at zero.

use alloc::vec::Vec;

use crate::error::{bail, Result};
use crate::fit::fit_line;
use crate::math;
use crate::rng::{self, DOMAIN_DRIFT};

/// Reference time of the stored conductance in the inference experiment, s.
pub const DEFAULT_T0: f64 = 23e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DriftParams {
    pub nu_mean: f64,
    pub nu_std: f64,
    /// Reference time of the programmed conductance, s.
    pub t0: f64,
}

impl DriftParams {
    pub fn new(nu_mean: f64, nu_std: f64, t0: f64) -> Result<Self> {
        let p = DriftParams { nu_mean, nu_std, t0 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nu_mean >= 0.0 && self.nu_mean.is_finite()) {
            bail!(Config, "nu_mean must be >= 0, got {}", self.nu_mean);
        }
        if !(self.nu_std >= 0.0 && self.nu_std.is_finite()) {
            bail!(Config, "nu_std must be >= 0, got {}", self.nu_std);
        }
        if !(self.t0 > 0.0 && self.t0.is_finite()) {
            bail!(Config, "t0 must be > 0, got {}", self.t0);
        }
        Ok(())
    }
}

impl Default for DriftParams {
    /// Parameters of the 5 µS reference level.
    fn default() -> Self {
        DriftParams {
            nu_mean: 0.06,
            nu_std: 0.02,
            t0: DEFAULT_T0,
        }
    }
}

/// Checks `t ≥ t0 > 0`.
pub fn check_time(t0: f64, t: f64) -> Result<()> {
    if !(t0 > 0.0) {
        bail!(Domain, "t0 must be > 0, got {t0}");
    }
    if !(t >= t0) || !t.is_finite() {
        bail!(Domain, "time {t} precedes reference time {t0}");
    }
    Ok(())
}

/// `g0 · exp(−nu · ln_ratio)` with `ln_ratio = ln(t/t0)` precomputed.
#[inline]
pub(crate) fn drift_from_log(g0: f64, ln_ratio: f64, nu: f64) -> f64 {
    g0 * math::exp(-nu * ln_ratio)
}

/// Conductance at `t` of a device holding `g0` at `t0`.
pub fn drift_conductance(g0: f64, t0: f64, t: f64, nu: f64) -> Result<f64> {
    check_time(t0, t)?;
    if !(g0 >= 0.0) {
        bail!(Domain, "conductance must be >= 0, got {g0}");
    }
    if !(nu >= 0.0) {
        bail!(Domain, "drift exponent must be >= 0, got {nu}");
    }
    Ok(drift_from_log(g0, math::ln(t / t0), nu))
}

/// Same model through the direct power form, `g0 · (t/t0)^(−nu)`.
pub fn drift_conductance_pow(g0: f64, t0: f64, t: f64, nu: f64) -> Result<f64> {
    check_time(t0, t)?;
    Ok(g0 * math::powf(t / t0, -nu))
}

/// Drift exponent of device `stream`, `max(0, N(nu_mean, nu_std²))`.
pub fn sample_nu(params: &DriftParams, seed: u64, stream: u64) -> f64 {
    let mut r = rng::substream(seed, DOMAIN_DRIFT, stream, 0);
    let z = rng::standard_normal(&mut r);
    (params.nu_mean + params.nu_std * z).max(0.0)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DriftFit {
    pub nu_hat: f64,
    /// Fitted conductance at `t0`, µS.
    pub g0_hat: f64,
}

/// Fits `ln g = ln g0 − ν · ln(t/t0)` by unweighted least squares.
pub fn fit_nu(times: &[f64], mean_g: &[f64], t0: f64) -> Result<DriftFit> {
    if times.len() != mean_g.len() {
        bail!(
            Argument,
            "{} times but {} conductances",
            times.len(),
            mean_g.len()
        );
    }
    if times.len() < 3 {
        bail!(Argument, "drift fit needs at least 3 points, got {}", times.len());
    }
    if !(t0 > 0.0) {
        bail!(Argument, "t0 must be > 0, got {t0}");
    }
    if let Some(t) = times.iter().find(|t| !(**t >= t0)) {
        bail!(Argument, "time {t} precedes t0 = {t0}");
    }
    if let Some(g) = mean_g.iter().find(|g| !(**g > 0.0 && g.is_finite())) {
        bail!(Argument, "conductance must be positive for a log fit, got {g}");
    }
    let x: Vec<f64> = times.iter().map(|t| math::ln(t / t0)).collect();
    let y: Vec<f64> = mean_g.iter().map(|g| math::ln(*g)).collect();
    let line = fit_line(&x, &y)?;
    Ok(DriftFit {
        nu_hat: -line.slope,
        g0_hat: math::exp(line.intercept),
    })
}

/// Expected value of `exp(−ν · L)` for `ν = max(0, N(μ, σ²))`.
///
/// Closed form of the ensemble mean of the clamped-Gaussian drift model:
/// `Φ(−μ/σ) + exp(−μL + σ²L²/2) · Φ((μ − σ²L)/σ)`.
pub fn clamped_gaussian_drift_mean(nu_mean: f64, nu_std: f64, ln_ratio: f64) -> f64 {
    if nu_std == 0.0 {
        return math::exp(-nu_mean.max(0.0) * ln_ratio);
    }
    let phi = |x: f64| 0.5 * math::erfc(-x / core::f64::consts::SQRT_2);
    let l = ln_ratio;
    phi(-nu_mean / nu_std)
        + math::exp(-nu_mean * l + 0.5 * nu_std * nu_std * l * l)
            * phi((nu_mean - nu_std * nu_std * l) / nu_std)
}
