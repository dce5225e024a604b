//! A single emulated PCM device.

use crate::drift::{self, check_time, DriftParams};
use crate::error::{bail, Result};
use crate::math;
use crate::noise::{NoiseModel, NoiseSynth, QTable};
use crate::rng::{self, DOMAIN_PROGRAM};
use crate::MICRO;

/// Largest read-bias magnitude accepted, V.
pub const READ_VOLTAGE_LIMIT: f64 = 0.3;
/// Read voltage of the reference measurements, V.
pub const DEFAULT_READ_VOLTAGE: f64 = 0.2;

/// State of one device. Reads advance only `noise_cursor`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CellState {
    /// Conductance the device was programmed towards, µS.
    pub target_g: f64,
    /// Conductance at `t0`, µS.
    pub g_t0: f64,
    pub t0: f64,
    pub nu: f64,
    pub noise_stream: u64,
    pub noise_cursor: u64,
}

impl CellState {
    /// Noise-free conductance at `t`, µS.
    pub fn conductance_at(&self, t: f64) -> Result<f64> {
        drift::drift_conductance(self.g_t0, self.t0, t, self.nu)
    }

    /// Current through the device under bias `v` at time `t`, in amperes.
    ///
    /// The mean current `G(t)·v` is multiplied by `1 + x`, where `x` is the
    /// next sample of this device's noise stream (`x = 0` with noise
    /// disabled). The cursor advances by one either way.
    pub fn read_current(
        &mut self,
        v: f64,
        t: f64,
        noise: &mut NoiseReader,
        enable_noise: bool,
    ) -> Result<f64> {
        check_read_voltage(v)?;
        check_time(self.t0, t)?;
        let i_read = drift::drift_from_log(self.g_t0, math::ln(t / self.t0), self.nu) * v;
        let out = if enable_noise {
            i_read * (1.0 + noise.relative_sample(self))
        } else {
            i_read
        };
        self.noise_cursor += 1;
        Ok(out * MICRO)
    }
}

pub(crate) fn check_read_voltage(v: f64) -> Result<()> {
    if !(v.abs() <= READ_VOLTAGE_LIMIT) {
        bail!(
            Domain,
            "read voltage {v} V is outside ±{READ_VOLTAGE_LIMIT} V"
        );
    }
    Ok(())
}

/// Noise sampler shared by the cells of one array.
#[derive(Clone)]
pub struct NoiseReader {
    synth: NoiseSynth,
    q: f64,
    q_table: Option<QTable>,
}

impl NoiseReader {
    pub fn new(model: &NoiseModel, q_table: Option<QTable>) -> Result<Self> {
        Ok(NoiseReader {
            synth: NoiseSynth::new(model)?,
            q: model.q,
            q_table,
        })
    }

    /// `Q` applied to a cell programmed towards `target_g`.
    pub fn q_for(&self, target_g: f64) -> f64 {
        match &self.q_table {
            Some(t) => t.lookup(target_g),
            None => self.q,
        }
    }

    /// Relative fluctuation at the cell's current cursor.
    pub fn relative_sample(&mut self, cell: &CellState) -> f64 {
        let scale = math::sqrt(self.q_for(cell.target_g));
        scale * self.synth.unit_sample(cell.noise_stream, cell.noise_cursor)
    }

    pub(crate) fn synth_mut(&mut self) -> &mut NoiseSynth {
        &mut self.synth
    }
}

/// Programs a device towards `target_g`.
///
/// `g_t0 = max(0, target_g + N(0, prog_err_std²))`; the drift exponent is
/// drawn from `drift`. Both draws come from substreams keyed by
/// `(seed, noise_stream)`.
pub fn program_cell(
    target_g: f64,
    t0: f64,
    drift: &DriftParams,
    seed: u64,
    noise_stream: u64,
    prog_err_std: f64,
) -> Result<CellState> {
    if !(target_g >= 0.0 && target_g.is_finite()) {
        bail!(Argument, "target conductance must be >= 0, got {target_g}");
    }
    if !(prog_err_std >= 0.0 && prog_err_std.is_finite()) {
        bail!(Argument, "programming error must be >= 0, got {prog_err_std}");
    }
    if !(t0 > 0.0) {
        bail!(Argument, "t0 must be > 0, got {t0}");
    }
    let g_t0 = if prog_err_std > 0.0 {
        let mut r = rng::substream(seed, DOMAIN_PROGRAM, noise_stream, 0);
        (target_g + prog_err_std * rng::standard_normal(&mut r)).max(0.0)
    } else {
        target_g
    };
    Ok(CellState {
        target_g,
        g_t0,
        t0,
        nu: drift::sample_nu(drift, seed, noise_stream),
        noise_stream,
        noise_cursor: 0,
    })
}
