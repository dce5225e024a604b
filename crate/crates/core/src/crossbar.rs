//! Emulated crossbar arrays.
//!
//! An `R × C` grid of devices evaluates `I_j = Σ_i G_ij(t) · v_i · (1 + x_ij)`
//! for a voltage vector on the rows. Each column's dot product is split into
//! chunks of `k_factor` rows; a chunk is reduced by a pairwise adder tree and
//! the chunk sums are combined by a running accumulator. Chunk boundaries are
//! aligned to row 0 of the array, also when only a window of rows is driven,
//! so windowed and full evaluations agree bit for bit.
//!
//! Cells are stored column-major. Columns are independent, so with `std` they
//! are spread over the rayon pool; every cell's noise position is fixed before
//! dispatch, so results do not depend on scheduling or worker count.
//!
//! Batched calls follow a cursor contract: within one call with `T` time
//! points and `B` input vectors, lane `p·B + b` of a cell reads noise sample
//! `cursor + p·B + b`, and every evaluated cell's cursor then advances by
//! `T·B`. A batch is therefore bit-identical to the equivalent sequence of
//! single-vector calls.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use crate::cell::{self, CellState, NoiseReader};
use crate::drift::{self, check_time, DriftParams};
use crate::error::{bail, Result};
use crate::math;
use crate::matrix::Matrix;
use crate::noise::{NoiseModel, QTable};
use crate::reduce::{ChunkedTreeSum, Lane};
use crate::MICRO;

/// Arithmetic precision of the analog accumulation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Precision {
    #[default]
    Double,
    /// Terms and sums rounded to `f32`, for word-length studies.
    Single,
}

/// Default dot-product chunk length.
pub const DEFAULT_K_FACTOR: usize = 64;

#[derive(Clone, Debug, PartialEq)]
pub struct CrossbarConfig {
    pub rows: usize,
    pub cols: usize,
    pub k_factor: usize,
    pub noise: NoiseModel,
    /// Per-level `Q`; overrides `noise.q` when set.
    pub q_table: Option<QTable>,
    pub enable_noise: bool,
    pub enable_drift: bool,
    pub precision: Precision,
    /// Standard deviation of the programming error, µS.
    pub prog_err_std: f64,
}

impl CrossbarConfig {
    pub fn new(rows: usize, cols: usize) -> Self {
        CrossbarConfig {
            rows,
            cols,
            k_factor: DEFAULT_K_FACTOR.min(rows.max(1)),
            noise: NoiseModel::default(),
            q_table: None,
            enable_noise: true,
            enable_drift: true,
            precision: Precision::Double,
            prog_err_std: 0.0,
        }
    }

    /// Same array with noise and drift switched off.
    pub fn ideal(rows: usize, cols: usize) -> Self {
        CrossbarConfig {
            enable_noise: false,
            enable_drift: false,
            ..Self::new(rows, cols)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows == 0 || self.cols == 0 {
            bail!(Config, "crossbar must be at least 1x1, got {}x{}", self.rows, self.cols);
        }
        if self.k_factor == 0 || self.k_factor > self.rows {
            bail!(
                Config,
                "k_factor must lie in 1..={}, got {}",
                self.rows,
                self.k_factor
            );
        }
        if !(self.prog_err_std >= 0.0 && self.prog_err_std.is_finite()) {
            bail!(Config, "prog_err_std must be >= 0, got {}", self.prog_err_std);
        }
        self.noise.validate()
    }
}

/// Rectangular sub-array addressed by global row and column ranges.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Window {
    pub rows: Range<usize>,
    pub cols: Range<usize>,
}

impl Window {
    pub fn new(rows: Range<usize>, cols: Range<usize>) -> Self {
        Window { rows, cols }
    }
}

/// Row voltages for a windowed call.
#[derive(Clone, Copy, Debug)]
pub enum Drive<'a> {
    /// `window_rows × B`; the same inputs at every time point.
    Shared(&'a Matrix),
    /// `window_rows × (T·B)`; column `p·B + b` is input `b` at time `p`.
    PerTime(&'a Matrix),
}

impl Drive<'_> {
    fn matrix(&self) -> &Matrix {
        match self {
            Drive::Shared(m) | Drive::PerTime(m) => m,
        }
    }
}

pub struct Crossbar {
    config: CrossbarConfig,
    cells: Vec<CellState>,
    t0: f64,
    loaded: bool,
    reader: NoiseReader,
}

impl core::fmt::Debug for Crossbar {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("Crossbar")
            .field("rows", &self.config.rows)
            .field("cols", &self.config.cols)
            .field("k_factor", &self.config.k_factor)
            .field("loaded", &self.loaded)
            .finish()
    }
}

struct ColumnJob<'a> {
    window_rows: Range<usize>,
    k: usize,
    ln_ratios: &'a [f64],
    drive: Drive<'a>,
    batch: usize,
    enable_noise: bool,
    enable_drift: bool,
}

impl Crossbar {
    pub fn new(config: CrossbarConfig) -> Result<Self> {
        config.validate()?;
        let reader = NoiseReader::new(&config.noise, config.q_table.clone())?;
        let blank = CellState {
            target_g: 0.0,
            g_t0: 0.0,
            t0: 1.0,
            nu: 0.0,
            noise_stream: 0,
            noise_cursor: 0,
        };
        Ok(Crossbar {
            cells: vec![blank; config.rows * config.cols],
            t0: 1.0,
            loaded: false,
            reader,
            config,
        })
    }

    pub fn config(&self) -> &CrossbarConfig {
        &self.config
    }

    pub fn rows(&self) -> usize {
        self.config.rows
    }

    pub fn cols(&self) -> usize {
        self.config.cols
    }

    pub fn is_loaded(&self) -> bool {
        self.loaded
    }

    /// Reference time of the loaded conductances.
    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn set_enable_noise(&mut self, on: bool) {
        self.config.enable_noise = on;
    }

    pub fn set_enable_drift(&mut self, on: bool) {
        self.config.enable_drift = on;
    }

    pub fn cell(&self, row: usize, col: usize) -> &CellState {
        &self.cells[col * self.config.rows + row]
    }

    pub fn cells(&self) -> impl Iterator<Item = &CellState> {
        self.cells.iter()
    }

    /// Programs every cell from `g` (µS, `R × C`) and resets all cursors.
    ///
    /// Cell `(r, c)` uses noise stream `r·C + c`.
    pub fn load_conductances(&mut self, g: &Matrix, drift: &DriftParams) -> Result<()> {
        let (rows, cols) = (self.config.rows, self.config.cols);
        if g.shape() != (rows, cols) {
            bail!(
                Argument,
                "conductance matrix is {}x{}, crossbar is {rows}x{cols}",
                g.rows(),
                g.cols()
            );
        }
        drift.validate()?;
        let seed = self.config.noise.seed;
        for c in 0..cols {
            for r in 0..rows {
                let stream = (r * cols + c) as u64;
                self.cells[c * rows + r] = cell::program_cell(
                    g.get(r, c),
                    drift.t0,
                    drift,
                    seed,
                    stream,
                    self.config.prog_err_std,
                )?;
            }
        }
        self.t0 = drift.t0;
        self.loaded = true;
        Ok(())
    }

    /// Noise-free conductances at `t`, µS.
    pub fn conductances_at(&self, t: f64) -> Result<Matrix> {
        self.require_loaded()?;
        check_time(self.t0, t)?;
        let lr = math::ln(t / self.t0);
        let rows = self.config.rows;
        Ok(Matrix::from_fn(rows, self.config.cols, |r, c| {
            let cell = &self.cells[c * rows + r];
            self.drifted(cell, lr)
        }))
    }

    fn drifted(&self, cell: &CellState, ln_ratio: f64) -> f64 {
        if self.config.enable_drift {
            drift::drift_from_log(cell.g_t0, ln_ratio, cell.nu)
        } else {
            cell.g_t0
        }
    }

    fn require_loaded(&self) -> Result<()> {
        if !self.loaded {
            bail!(State, "crossbar has no conductances loaded");
        }
        Ok(())
    }

    /// Column currents (A) for row voltages `v` at time `t`.
    pub fn mvm(&mut self, v: &[f64], t: f64) -> Result<Vec<f64>> {
        if v.len() != self.config.rows {
            bail!(
                Argument,
                "voltage vector has length {}, crossbar has {} rows",
                v.len(),
                self.config.rows
            );
        }
        let out = self.mvm_batch(&Matrix::column(v), t)?;
        Ok(out.into_vec())
    }

    /// `C × B` currents for the `R × B` voltage matrix `v`.
    pub fn mvm_batch(&mut self, v: &Matrix, t: f64) -> Result<Matrix> {
        let full = Window::new(0..self.config.rows, 0..self.config.cols);
        let mut out = self.mvm_window(&full, Drive::Shared(v), &[t])?;
        Ok(out.pop().expect("one time point"))
    }

    /// Evaluates the cells in `window` for every time in `times`.
    ///
    /// Rows outside the window are held at 0 V and columns outside it are
    /// neither evaluated nor advanced. Returns one `window_cols × B` current
    /// matrix per time point.
    pub fn mvm_window(&mut self, window: &Window, drive: Drive<'_>, times: &[f64]) -> Result<Vec<Matrix>> {
        self.require_loaded()?;
        let (rows, cols) = (self.config.rows, self.config.cols);
        if window.rows.start >= window.rows.end
            || window.rows.end > rows
            || window.cols.start >= window.cols.end
            || window.cols.end > cols
        {
            bail!(
                Argument,
                "window {:?}x{:?} does not fit a {rows}x{cols} crossbar",
                window.rows,
                window.cols
            );
        }
        if times.is_empty() {
            bail!(Argument, "at least one time point is required");
        }
        for &t in times {
            check_time(self.t0, t)?;
        }
        let m = drive.matrix();
        let wr = window.rows.len();
        if m.rows() != wr {
            bail!(
                Argument,
                "drive has {} rows, window has {wr}",
                m.rows()
            );
        }
        let batch = match drive {
            Drive::Shared(m) => m.cols(),
            Drive::PerTime(m) => {
                if m.cols() % times.len() != 0 {
                    bail!(
                        Argument,
                        "per-time drive width {} is not a multiple of {} time points",
                        m.cols(),
                        times.len()
                    );
                }
                m.cols() / times.len()
            }
        };
        if batch == 0 {
            bail!(Argument, "empty input batch");
        }
        for &v in m.as_slice() {
            cell::check_read_voltage(v)?;
        }

        let ln_ratios: Vec<f64> = times.iter().map(|t| math::ln(t / self.t0)).collect();
        let job = ColumnJob {
            window_rows: window.rows.clone(),
            k: self.config.k_factor,
            ln_ratios: &ln_ratios,
            drive,
            batch,
            enable_noise: self.config.enable_noise,
            enable_drift: self.config.enable_drift,
        };
        let precision = self.config.precision;
        let reader = &self.reader;
        let columns = self
            .cells
            .chunks_mut(rows)
            .skip(window.cols.start)
            .take(window.cols.len());

        let run = |reader: &mut NoiseReader, column: &mut [CellState]| match precision {
            Precision::Double => column_kernel::<f64>(&job, column, reader),
            Precision::Single => column_kernel::<f32>(&job, column, reader),
        };

        #[cfg(feature = "std")]
        let sums: Vec<Vec<f64>> = {
            use rayon::prelude::*;
            let columns: Vec<&mut [CellState]> = columns.collect();
            columns
                .into_par_iter()
                .map_init(|| reader.clone(), |r, col| run(r, col))
                .collect()
        };
        #[cfg(not(feature = "std"))]
        let sums: Vec<Vec<f64>> = {
            let mut r = reader.clone();
            columns.map(|col| run(&mut r, col)).collect()
        };

        let wc = window.cols.len();
        let mut out: Vec<Matrix> = times.iter().map(|_| Matrix::zeros(wc, batch)).collect();
        for (j, s) in sums.iter().enumerate() {
            for (p, o) in out.iter_mut().enumerate() {
                for (dst, src) in o.row_mut(j).iter_mut().zip(&s[p * batch..(p + 1) * batch]) {
                    *dst = src * MICRO;
                }
            }
        }
        Ok(out)
    }
}

/// Sum for one column over all lanes, in µA.
fn column_kernel<T: Lane>(job: &ColumnJob<'_>, column: &mut [CellState], reader: &mut NoiseReader) -> Vec<f64> {
    let times = job.ln_ratios.len();
    let batch = job.batch;
    let width = times * batch;
    let per_time = matches!(job.drive, Drive::PerTime(_));
    let drive = job.drive.matrix();
    let mut sum = ChunkedTreeSum::<T>::new(width, job.k);
    let mut noise = vec![0.0f64; if job.enable_noise { width } else { 0 }];
    let mut g_t = vec![0.0f64; times];

    let first = (job.window_rows.start / job.k) * job.k;
    for _ in first..job.window_rows.start {
        sum.push_zero();
    }
    for (k, cell) in column[job.window_rows.clone()].iter_mut().enumerate() {
        let v = drive.row(k);
        // Zero conductance or zero drive gives exactly zero current.
        if cell.g_t0 == 0.0 || v.iter().all(|x| *x == 0.0) {
            sum.push_zero();
        } else {
            for (g, lr) in g_t.iter_mut().zip(job.ln_ratios) {
                *g = if job.enable_drift {
                    drift::drift_from_log(cell.g_t0, *lr, cell.nu)
                } else {
                    cell.g_t0
                };
            }
            let term = sum.term_buf();
            if job.enable_noise {
                let scale = math::sqrt(reader.q_for(cell.target_g));
                reader
                    .synth_mut()
                    .fill_unit(cell.noise_stream, cell.noise_cursor, &mut noise);
                for (p, g) in g_t.iter().enumerate() {
                    let lanes = p * batch..(p + 1) * batch;
                    let vs = if per_time { &v[lanes.clone()] } else { v };
                    for ((t, vb), u) in term[lanes.clone()].iter_mut().zip(vs).zip(&noise[lanes]) {
                        let i_read = g * vb;
                        *t = T::from_f64(i_read * (1.0 + scale * u));
                    }
                }
            } else {
                for (p, g) in g_t.iter().enumerate() {
                    let lanes = p * batch..(p + 1) * batch;
                    let vs = if per_time { &v[lanes.clone()] } else { v };
                    for (t, vb) in term[lanes].iter_mut().zip(vs) {
                        *t = T::from_f64(g * vb);
                    }
                }
            }
            sum.push_carry();
        }
        cell.noise_cursor += width as u64;
    }
    sum.finish().into_iter().map(T::to_f64).collect()
}
