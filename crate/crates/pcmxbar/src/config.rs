//! Versioned JSON run configuration.
//!
//! Every section and field is optional; omitted values take the emulator
//! defaults. Unknown keys are rejected.

use std::fs;
use std::path::{Path, PathBuf};

use pcmxbar_core::analysis::CohortParams;
use pcmxbar_core::crossbar::{CrossbarConfig, Precision, DEFAULT_K_FACTOR};
use pcmxbar_core::drift::{DriftParams, DEFAULT_T0};
use pcmxbar_core::inference::{InferenceSchedule, TargetGroup};
use pcmxbar_core::mapping::WeightMapping;
use pcmxbar_core::noise::{NoiseModel, QTable, DEFAULT_FS, DEFAULT_N_FFT, DEFAULT_Q};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{AppError, AppResult};

pub const SCHEMA: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub schema: u32,
    pub seed: Option<u64>,
    pub drift: DriftSection,
    pub noise: NoiseSection,
    pub crossbar: CrossbarSection,
    pub mapping: MappingSection,
    pub schedule: ScheduleSection,
    pub infer: InferSection,
    pub cohort: CohortSection,
    pub snapshot: SnapshotSection,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            schema: SCHEMA,
            seed: None,
            drift: DriftSection::default(),
            noise: NoiseSection::default(),
            crossbar: CrossbarSection::default(),
            mapping: MappingSection::default(),
            schedule: ScheduleSection::default(),
            infer: InferSection::default(),
            cohort: CohortSection::default(),
            snapshot: SnapshotSection::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DriftSection {
    pub enabled: bool,
    pub nu_mean: f64,
    pub nu_std: f64,
    pub t0: f64,
}

impl Default for DriftSection {
    fn default() -> Self {
        let d = DriftParams::default();
        DriftSection {
            enabled: true,
            nu_mean: d.nu_mean,
            nu_std: d.nu_std,
            t0: d.t0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseSection {
    pub enabled: bool,
    pub q: f64,
    pub n_fft: usize,
    pub fs: f64,
    /// `[lower bound µS, Q]` bands. When absent, crossbars use the uniform
    /// `q` and cohorts use the built-in per-level table.
    pub q_table: Option<Vec<[f64; 2]>>,
}

impl Default for NoiseSection {
    fn default() -> Self {
        NoiseSection {
            enabled: true,
            q: DEFAULT_Q,
            n_fft: DEFAULT_N_FFT,
            fs: DEFAULT_FS,
            q_table: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CrossbarSection {
    pub k_factor: usize,
    /// `"double"` or `"single"`.
    pub precision: String,
    pub prog_err_std: f64,
}

impl Default for CrossbarSection {
    fn default() -> Self {
        CrossbarSection {
            k_factor: DEFAULT_K_FACTOR,
            precision: "double".into(),
            prog_err_std: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MappingSection {
    pub g_max: f64,
    pub v_read: f64,
    pub g_off: f64,
}

impl Default for MappingSection {
    fn default() -> Self {
        let m = WeightMapping::default();
        MappingSection {
            g_max: m.g_max,
            v_read: m.v_read,
            g_off: m.g_off,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScheduleSection {
    /// Explicit times, s. Overrides `t_end`/`points`.
    pub time_points: Option<Vec<f64>>,
    pub t_end: f64,
    pub points: usize,
}

impl Default for ScheduleSection {
    fn default() -> Self {
        ScheduleSection {
            time_points: None,
            t_end: 30.0 * 3600.0,
            points: 20,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InferSection {
    pub model: Option<PathBuf>,
    pub mnist_dir: Option<PathBuf>,
    pub limit: Option<usize>,
    /// Number of consecutive seeds starting at the run seed.
    pub seeds: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CohortSection {
    pub levels: Vec<f64>,
    pub devices_per_level: usize,
    pub duration: f64,
    pub log_points: usize,
    pub tail_seconds: f64,
}

impl Default for CohortSection {
    fn default() -> Self {
        CohortSection {
            levels: vec![2.0, 5.0, 10.0, 20.0, 40.0],
            devices_per_level: 20,
            duration: 9.0,
            log_points: 1000,
            tail_seconds: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SnapshotSection {
    pub bins: usize,
    /// `[lo, hi]` target ranges in µS; `null` for an open upper end.
    pub groups: Vec<(f64, Option<f64>)>,
    pub times: Vec<f64>,
}

impl Default for SnapshotSection {
    fn default() -> Self {
        SnapshotSection {
            bins: 50,
            groups: TargetGroup::defaults()
                .into_iter()
                .map(|g| (g.lo, g.hi.is_finite().then_some(g.hi)))
                .collect(),
            times: vec![DEFAULT_T0, 3600.0, 27.0 * 3600.0],
        }
    }
}

fn cfg_err(e: impl std::fmt::Display) -> AppError {
    AppError::Config(e.to_string())
}

impl Config {
    pub fn parse(text: &str) -> AppResult<Config> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(cfg_err)?;
        match value.get("schema").and_then(|s| s.as_u64()) {
            Some(1) => {}
            Some(v) => return Err(cfg_err(format!("unsupported config schema {v}"))),
            None => return Err(cfg_err("config must declare \"schema\": 1")),
        }
        serde_json::from_value(value).map_err(cfg_err)
    }

    pub fn load(path: &Path) -> AppResult<Config> {
        let text = fs::read_to_string(path).map_err(|e| AppError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// SHA-256 of the normalised configuration, hex encoded.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serialises");
        format!("{:x}", Sha256::digest(bytes))
    }

    pub fn drift_params(&self) -> AppResult<DriftParams> {
        Ok(DriftParams::new(self.drift.nu_mean, self.drift.nu_std, self.drift.t0)?)
    }

    pub fn noise_model(&self, seed: u64) -> AppResult<NoiseModel> {
        Ok(NoiseModel::new(self.noise.q, self.noise.n_fft, self.noise.fs, seed)?)
    }

    pub fn q_table(&self) -> AppResult<Option<QTable>> {
        match &self.noise.q_table {
            None => Ok(None),
            Some(b) => Ok(Some(QTable::new(b.iter().map(|[g, q]| (*g, *q)).collect())?)),
        }
    }

    pub fn precision(&self) -> AppResult<Precision> {
        match self.crossbar.precision.as_str() {
            "double" => Ok(Precision::Double),
            "single" => Ok(Precision::Single),
            p => Err(cfg_err(format!("precision must be \"double\" or \"single\", got {p:?}"))),
        }
    }

    /// Crossbar settings for a `rows × cols` array.
    pub fn crossbar(&self, rows: usize, cols: usize, seed: u64) -> AppResult<CrossbarConfig> {
        let cfg = CrossbarConfig {
            rows,
            cols,
            k_factor: self.crossbar.k_factor.min(rows.max(1)),
            noise: self.noise_model(seed)?,
            q_table: self.q_table()?,
            enable_noise: self.noise.enabled,
            enable_drift: self.drift.enabled,
            precision: self.precision()?,
            prog_err_std: self.crossbar.prog_err_std,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn mapping(&self) -> AppResult<WeightMapping> {
        Ok(WeightMapping::new(self.mapping.g_max, self.mapping.v_read, self.mapping.g_off)?)
    }

    pub fn schedule(&self) -> AppResult<InferenceSchedule> {
        let s = &self.schedule;
        Ok(match &s.time_points {
            Some(t) => InferenceSchedule::new(self.drift.t0, t.clone())?,
            None => InferenceSchedule::log_spaced(self.drift.t0, s.t_end, s.points)?,
        })
    }

    pub fn cohort_params(&self, seed: u64) -> AppResult<CohortParams> {
        let drift = if self.drift.enabled {
            self.drift_params()?
        } else {
            DriftParams::new(0.0, 0.0, self.drift.t0)?
        };
        Ok(CohortParams {
            drift,
            noise: self.noise_model(seed)?,
            q_table: Some(self.q_table()?.unwrap_or_else(QTable::measured_anchors)),
            enable_noise: self.noise.enabled,
            prog_err_std: self.crossbar.prog_err_std,
            log_points: self.cohort.log_points,
            tail_seconds: self.cohort.tail_seconds,
        })
    }

    pub fn groups(&self) -> AppResult<Vec<TargetGroup>> {
        self.snapshot
            .groups
            .iter()
            .map(|&(lo, hi)| {
                let hi = hi.unwrap_or(f64::INFINITY);
                if !(hi > lo) {
                    return Err(cfg_err(format!("snapshot group ({lo}, {hi}] is empty")));
                }
                Ok(TargetGroup { lo, hi })
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_uses_defaults() {
        let c = Config::parse(r#"{"schema": 1}"#).unwrap();
        assert_eq!(c, Config::default());
        assert_eq!(c.schedule().unwrap().time_points.len(), 20);
        assert_eq!(c.groups().unwrap().len(), 3);
    }

    #[test]
    fn rejects_unknown_keys_and_schemas() {
        assert!(matches!(Config::parse(r#"{"schema": 1, "nosie": {}}"#), Err(AppError::Config(_))));
        assert!(Config::parse(r#"{"schema": 1, "noise": {"Q": 1}}"#).is_err());
        assert!(Config::parse(r#"{"schema": 2}"#).is_err());
        assert!(Config::parse(r#"{}"#).is_err());
        assert!(Config::parse("not json").is_err());
    }

    #[test]
    fn hash_tracks_content() {
        let a = Config::default();
        let mut b = Config::default();
        assert_eq!(a.hash(), b.hash());
        b.noise.q = 1e-3;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn invalid_values_are_config_errors() {
        let c = Config::parse(r#"{"schema": 1, "noise": {"n_fft": 1000}}"#).unwrap();
        assert!(matches!(c.crossbar(4, 4, 0), Err(AppError::Config(_))));
        let c = Config::parse(r#"{"schema": 1, "crossbar": {"precision": "half"}}"#).unwrap();
        assert!(c.precision().is_err());
    }
}
