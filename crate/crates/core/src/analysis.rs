//! Device cohorts and the statistics used to validate the device model.
//!
//! A cohort is a set of devices programmed to a few target levels and read
//! continuously at a fixed sampling rate. Only a decimated view of each trace
//! is kept: log-spaced samples for drift fitting and the final stretch at full
//! rate for spectral estimation.

use alloc::vec::Vec;

use crate::cell::{program_cell, CellState, NoiseReader};
use crate::drift::{fit_nu, DriftFit, DriftParams};
use crate::error::{bail, Result};
use crate::fit::fit_line;
use crate::math;
use crate::noise::{estimate_psd, fit_q, NoiseModel, Psd, QTable};

/// Settings shared by every device of a cohort.
#[derive(Clone, Debug)]
pub struct CohortParams {
    pub drift: DriftParams,
    /// Supplies `Q` (unless `q_table` is set), the block length and the seed.
    pub noise: NoiseModel,
    pub q_table: Option<QTable>,
    pub enable_noise: bool,
    pub prog_err_std: f64,
    /// Number of log-spaced sample indices kept before the full-rate tail.
    pub log_points: usize,
    /// Length of the full-rate tail, s. Zero keeps no tail.
    pub tail_seconds: f64,
}

impl Default for CohortParams {
    fn default() -> Self {
        CohortParams {
            drift: DriftParams::default(),
            noise: NoiseModel::default(),
            q_table: Some(QTable::measured_anchors()),
            enable_noise: true,
            prog_err_std: 0.0,
            log_points: 1000,
            tail_seconds: 1.0,
        }
    }
}

/// Decimated read-out of one device, conductances in µS.
#[derive(Clone, Debug, PartialEq)]
pub struct DeviceTrace {
    pub stream: u64,
    pub g_t0: f64,
    pub nu: f64,
    /// Sample indices of `times`/`g`; sample `n` is read at `t0 + n/fs`.
    pub indices: Vec<u64>,
    pub times: Vec<f64>,
    pub g: Vec<f64>,
    /// Index of the first full-rate tail sample.
    pub tail_start: u64,
    pub tail: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LevelTraces {
    /// Programmed target, µS.
    pub level: f64,
    pub devices: Vec<DeviceTrace>,
}

impl LevelTraces {
    /// Device-averaged conductance at each retained time.
    pub fn mean_trace(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        let Some(first) = self.devices.first() else {
            bail!(State, "level {} has no devices", self.level);
        };
        let n = first.times.len();
        if self.devices.iter().any(|d| d.g.len() != n) {
            bail!(State, "traces of level {} differ in length", self.level);
        }
        let mut mean = alloc::vec![0.0; n];
        for d in &self.devices {
            for (m, g) in mean.iter_mut().zip(&d.g) {
                *m += g;
            }
        }
        let k = self.devices.len() as f64;
        mean.iter_mut().for_each(|m| *m /= k);
        Ok((first.times.clone(), mean))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceStore {
    pub t0: f64,
    pub fs: f64,
    pub duration: f64,
    pub n_fft: usize,
    pub levels: Vec<LevelTraces>,
}

/// `points` distinct sample indices in `[0, head)` spaced roughly evenly in
/// `ln(n + 1)`; the first is 0 and the last `head - 1`.
fn log_indices(head: u64, points: usize) -> Vec<u64> {
    if points as u64 >= head {
        return (0..head).collect();
    }
    if points == 1 {
        return alloc::vec![0];
    }
    let span = math::ln(head as f64);
    let mut out: Vec<u64> = (0..points)
        .map(|k| (math::exp(span * k as f64 / (points - 1) as f64) as u64).max(1) - 1)
        .collect();
    out[points - 1] = head - 1;
    for k in 1..points {
        out[k] = out[k].max(out[k - 1] + 1);
    }
    for k in (0..points - 1).rev() {
        out[k] = out[k].min(out[k + 1] - 1);
    }
    out
}

struct Grid<'a> {
    t0: f64,
    fs: f64,
    head: &'a [u64],
    tail_start: u64,
    total: u64,
}

fn emulate_device(cell: CellState, grid: &Grid<'_>, reader: &mut NoiseReader, noise: bool) -> Result<DeviceTrace> {
    let scale = math::sqrt(reader.q_for(cell.target_g));
    let mut read = |n: u64| -> Result<(f64, f64)> {
        let t = grid.t0 + n as f64 / grid.fs;
        let g = cell.conductance_at(t)?;
        let g = if noise {
            g * (1.0 + scale * reader.synth_mut().unit_sample(cell.noise_stream, n))
        } else {
            g
        };
        Ok((t, g))
    };
    let mut times = Vec::with_capacity(grid.head.len());
    let mut g = Vec::with_capacity(grid.head.len());
    for &n in grid.head {
        let (t, v) = read(n)?;
        times.push(t);
        g.push(v);
    }
    let tail = (grid.tail_start..grid.total)
        .map(|n| read(n).map(|(_, v)| v))
        .collect::<Result<Vec<f64>>>()?;
    Ok(DeviceTrace {
        stream: cell.noise_stream,
        g_t0: cell.g_t0,
        nu: cell.nu,
        indices: grid.head.to_vec(),
        times,
        g,
        tail_start: grid.tail_start,
        tail,
    })
}

/// Reads `devices_per_level` devices at each target level for `duration`
/// seconds at `fs`.
///
/// Device `d` of level `l` uses stream `l · devices_per_level + d`, so the
/// store is a pure function of the arguments.
pub fn emulate_cohort(
    levels: &[f64],
    devices_per_level: usize,
    duration: f64,
    fs: f64,
    params: &CohortParams,
) -> Result<TraceStore> {
    if levels.is_empty() || devices_per_level == 0 {
        bail!(Argument, "cohort needs at least one level and one device");
    }
    if let Some(l) = levels.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
        bail!(Argument, "levels must be positive, got {l}");
    }
    if !(duration > 0.0 && duration.is_finite()) {
        bail!(Argument, "duration must be positive, got {duration}");
    }
    if !(params.tail_seconds >= 0.0 && params.tail_seconds <= duration) {
        bail!(Argument, "tail length must lie in [0, duration]");
    }
    params.drift.validate()?;
    let model = NoiseModel { fs, ..params.noise };
    model.validate()?;
    let reader = NoiseReader::new(&model, params.q_table.clone())?;

    let total = math::round(duration * fs) as u64;
    if total < 2 {
        bail!(Argument, "duration covers fewer than two samples");
    }
    let tail_len = (math::round(params.tail_seconds * fs) as u64).min(total);
    let tail_start = total - tail_len;
    let head = log_indices(tail_start, params.log_points);
    let grid = Grid {
        t0: params.drift.t0,
        fs,
        head: &head,
        tail_start,
        total,
    };

    let mut cells = Vec::with_capacity(levels.len() * devices_per_level);
    for (l, &level) in levels.iter().enumerate() {
        for d in 0..devices_per_level {
            let stream = (l * devices_per_level + d) as u64;
            cells.push(program_cell(
                level,
                params.drift.t0,
                &params.drift,
                model.seed,
                stream,
                params.prog_err_std,
            )?);
        }
    }

    let noise = params.enable_noise;
    #[cfg(feature = "std")]
    let traces: Vec<DeviceTrace> = {
        use rayon::prelude::*;
        cells
            .into_par_iter()
            .map_init(|| reader.clone(), |r, c| emulate_device(c, &grid, r, noise))
            .collect::<Result<_>>()?
    };
    #[cfg(not(feature = "std"))]
    let traces: Vec<DeviceTrace> = {
        let mut r = reader;
        cells
            .into_iter()
            .map(|c| emulate_device(c, &grid, &mut r, noise))
            .collect::<Result<_>>()?
    };

    let mut it = traces.into_iter();
    let levels = levels
        .iter()
        .map(|&level| LevelTraces {
            level,
            devices: it.by_ref().take(devices_per_level).collect(),
        })
        .collect();
    Ok(TraceStore {
        t0: params.drift.t0,
        fs,
        duration,
        n_fft: model.n_fft,
        levels,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LevelDriftFit {
    pub level: f64,
    pub fit: DriftFit,
}

/// Power-law fit of every level's mean trace.
pub fn fit_drift_per_level(store: &TraceStore) -> Result<Vec<LevelDriftFit>> {
    store
        .levels
        .iter()
        .map(|l| {
            let (t, g) = l.mean_trace()?;
            Ok(LevelDriftFit {
                level: l.level,
                fit: fit_nu(&t, &g, store.t0)?,
            })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LevelPsd {
    pub level: f64,
    /// Mean of the per-device `Q` estimates; zero for noise-free traces.
    pub q_hat: f64,
    /// Mean of the per-device slopes, NaN when no device had a spectrum.
    pub gamma_hat: f64,
    pub devices: usize,
}

/// Relative fluctuation of the tail about its own power-law trend.
fn detrended_tail(store: &TraceStore, d: &DeviceTrace) -> Result<Vec<f64>> {
    let ln_t: Vec<f64> = (0..d.tail.len() as u64)
        .map(|k| math::ln(1.0 + (d.tail_start + k) as f64 / (store.fs * store.t0)))
        .collect();
    if let Some(g) = d.tail.iter().find(|g| !(**g > 0.0)) {
        bail!(Domain, "tail conductance {g} is not positive");
    }
    let ln_g: Vec<f64> = d.tail.iter().map(|g| math::ln(*g)).collect();
    let line = fit_line(&ln_t, &ln_g)?;
    Ok(d
        .tail
        .iter()
        .zip(&ln_t)
        .map(|(g, x)| g / math::exp(line.intercept + line.slope * x) - 1.0)
        .collect())
}

/// Averaged periodogram of one device's detrended tail.
///
/// The tail is divided by its fitted power-law trend so drift does not leak
/// into the spectrum, then cut into block-aligned segments of the noise block
/// length.
pub fn device_spectrum(store: &TraceStore, d: &DeviceTrace) -> Result<Psd> {
    let n = store.n_fft as u64;
    let skip = ((n - d.tail_start % n) % n) as usize;
    let segments = d.tail.len().saturating_sub(skip) / store.n_fft;
    if segments == 0 {
        bail!(
            State,
            "device {} has no full-rate tail of at least {} samples",
            d.stream,
            store.n_fft
        );
    }
    let x = detrended_tail(store, d)?;
    estimate_psd(&x[skip..skip + segments * store.n_fft], store.fs, segments)
}

/// Device-averaged tail spectrum of every level.
pub fn level_spectra(store: &TraceStore) -> Result<Vec<(f64, Psd)>> {
    store
        .levels
        .iter()
        .map(|level| {
            let mut mean: Option<Psd> = None;
            for d in &level.devices {
                let p = device_spectrum(store, d)?;
                match &mut mean {
                    None => mean = Some(p),
                    Some(m) => m.psd.iter_mut().zip(&p.psd).for_each(|(a, b)| *a += b),
                }
            }
            let Some(mut m) = mean else {
                bail!(State, "level {} has no devices", level.level);
            };
            let k = level.devices.len() as f64;
            m.psd.iter_mut().for_each(|v| *v /= k);
            Ok((level.level, m))
        })
        .collect()
}

/// `Q` and `γ` of the full-rate tail of every device, averaged per level.
pub fn last_second_psd(store: &TraceStore) -> Result<Vec<LevelPsd>> {
    let mut out = Vec::with_capacity(store.levels.len());
    for level in &store.levels {
        let mut q_sum = 0.0;
        let mut gamma_sum = 0.0;
        let mut fitted = 0usize;
        for d in &level.devices {
            let psd = device_spectrum(store, d)?;
            let (f, p) = psd.positive();
            let (f, p): (Vec<f64>, Vec<f64>) = f.iter().zip(p).filter(|(_, p)| **p > 0.0).unzip();
            if f.len() < 8 {
                continue;
            }
            let fit = fit_q(&f, &p)?;
            q_sum += fit.q_hat;
            gamma_sum += fit.gamma_hat;
            fitted += 1;
        }
        out.push(LevelPsd {
            level: level.level,
            q_hat: q_sum / level.devices.len().max(1) as f64,
            gamma_hat: if fitted > 0 {
                gamma_sum / fitted as f64
            } else {
                f64::NAN
            },
            devices: level.devices.len(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drift::drift_conductance;

    fn params(noise: bool) -> CohortParams {
        CohortParams {
            drift: DriftParams::new(0.06, 0.0, 23e-6).unwrap(),
            q_table: None,
            enable_noise: noise,
            log_points: 200,
            tail_seconds: 0.1,
            ..CohortParams::default()
        }
    }

    #[test]
    fn log_indices_are_sorted_and_bounded() {
        let idx = log_indices(896_000, 1000);
        assert_eq!(idx[0], 0);
        assert_eq!(*idx.last().unwrap(), 895_999);
        assert!(idx.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(idx.len(), 1000);
        assert_eq!(log_indices(5, 10), vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn noiseless_trace_is_the_drift_curve() {
        let s = emulate_cohort(&[10.0], 1, 1.0, 112_000.0, &params(false)).unwrap();
        let d = &s.levels[0].devices[0];
        for (t, g) in d.times.iter().zip(&d.g) {
            assert_eq!(*g, drift_conductance(10.0, 23e-6, *t, 0.06).unwrap());
        }
        assert_eq!(d.tail.len(), 11_200);
        let fit = fit_drift_per_level(&s).unwrap();
        assert!((fit[0].fit.nu_hat - 0.06).abs() < 1e-9);
    }

    #[test]
    fn noiseless_tail_has_no_spectrum() {
        let s = emulate_cohort(&[10.0], 2, 1.0, 112_000.0, &params(false)).unwrap();
        let psd = last_second_psd(&s).unwrap();
        assert!(psd[0].q_hat < 1e-12);
    }

    #[test]
    fn missing_tail_is_a_state_error() {
        let p = CohortParams {
            tail_seconds: 0.0,
            ..params(true)
        };
        let s = emulate_cohort(&[10.0], 1, 0.5, 112_000.0, &p).unwrap();
        assert!(matches!(last_second_psd(&s), Err(crate::Error::State(_))));
    }

    #[test]
    fn deterministic() {
        let a = emulate_cohort(&[5.0, 20.0], 2, 0.2, 112_000.0, &params(true)).unwrap();
        let b = emulate_cohort(&[5.0, 20.0], 2, 0.2, 112_000.0, &params(true)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.levels[0].devices[0].tail, a.levels[0].devices[1].tail);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(emulate_cohort(&[], 1, 1.0, 112_000.0, &params(true)).is_err());
        assert!(emulate_cohort(&[-1.0], 1, 1.0, 112_000.0, &params(true)).is_err());
        assert!(emulate_cohort(&[1.0], 1, 1.0, 0.0, &params(true)).is_err());
    }
}
