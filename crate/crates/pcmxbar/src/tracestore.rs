//! Cohort traces on disk.
//!
//! ```text
//! store.json               metadata
//! level_00/device_000.csv  sample_index,t_seconds,g_us (decimated)
//! level_00/device_000.bin  XBART1 full-rate tail, µS
//! ```

use std::fs;
use std::path::Path;

use pcmxbar_core::analysis::{DeviceTrace, LevelTraces, TraceStore};
use serde::{Deserialize, Serialize};

use crate::binfmt::{read_trace, write_trace};
use crate::error::{AppError, AppResult};

pub const STORE_MANIFEST: &str = "store.json";

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StoreMeta {
    schema: u32,
    t0: f64,
    fs: f64,
    duration: f64,
    n_fft: usize,
    levels: Vec<LevelMeta>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LevelMeta {
    level: f64,
    dir: String,
    devices: Vec<DeviceMeta>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DeviceMeta {
    stream: u64,
    g_t0: f64,
    nu: f64,
    tail_start: u64,
    tail_len: usize,
}

fn names(level: usize, device: usize) -> (String, String, String) {
    let dir = format!("level_{level:02}");
    (
        dir,
        format!("device_{device:03}.csv"),
        format!("device_{device:03}.bin"),
    )
}

pub fn write_store(dir: &Path, store: &TraceStore) -> AppResult<()> {
    let mut levels = Vec::new();
    for (l, level) in store.levels.iter().enumerate() {
        let mut devices = Vec::new();
        for (d, dev) in level.devices.iter().enumerate() {
            let (sub, csv_name, bin_name) = names(l, d);
            let sub = dir.join(sub);
            fs::create_dir_all(&sub).map_err(|e| AppError::io(&sub, e))?;
            let path = sub.join(csv_name);
            let mut w = csv::Writer::from_path(&path)?;
            w.write_record(["sample_index", "t_seconds", "g_us"])?;
            for ((n, t), g) in dev.indices.iter().zip(&dev.times).zip(&dev.g) {
                w.write_record([n.to_string(), t.to_string(), g.to_string()])?;
            }
            w.flush().map_err(|e| AppError::io(&path, e))?;
            if !dev.tail.is_empty() {
                write_trace(&sub.join(bin_name), store.fs, &dev.tail)?;
            }
            devices.push(DeviceMeta {
                stream: dev.stream,
                g_t0: dev.g_t0,
                nu: dev.nu,
                tail_start: dev.tail_start,
                tail_len: dev.tail.len(),
            });
        }
        levels.push(LevelMeta {
            level: level.level,
            dir: names(l, 0).0,
            devices,
        });
    }
    let meta = StoreMeta {
        schema: 1,
        t0: store.t0,
        fs: store.fs,
        duration: store.duration,
        n_fft: store.n_fft,
        levels,
    };
    let path = dir.join(STORE_MANIFEST);
    let text = serde_json::to_string_pretty(&meta).expect("store metadata serialises");
    fs::write(&path, text + "\n").map_err(|e| AppError::io(&path, e))
}

pub fn read_store(dir: &Path) -> AppResult<TraceStore> {
    let path = dir.join(STORE_MANIFEST);
    let text = fs::read_to_string(&path).map_err(|e| AppError::io(&path, e))?;
    let meta: StoreMeta =
        serde_json::from_str(&text).map_err(|e| AppError::Data(format!("{}: {e}", path.display())))?;
    if meta.schema != 1 {
        return Err(AppError::Data(format!("unsupported trace store schema {}", meta.schema)));
    }
    let mut levels = Vec::new();
    for (l, lm) in meta.levels.iter().enumerate() {
        let mut devices = Vec::new();
        for (d, dm) in lm.devices.iter().enumerate() {
            let (_, csv_name, bin_name) = names(l, d);
            let sub = dir.join(&lm.dir);
            let mut r = csv::Reader::from_path(sub.join(csv_name))?;
            let (mut indices, mut times, mut g) = (Vec::new(), Vec::new(), Vec::new());
            for rec in r.deserialize() {
                let (n, t, v): (u64, f64, f64) = rec?;
                indices.push(n);
                times.push(t);
                g.push(v);
            }
            let tail = if dm.tail_len > 0 {
                let (fs, tail) = read_trace(&sub.join(bin_name))?;
                if fs != meta.fs || tail.len() != dm.tail_len {
                    return Err(AppError::Data(format!(
                        "tail of device {} disagrees with the store metadata",
                        dm.stream
                    )));
                }
                tail
            } else {
                Vec::new()
            };
            devices.push(DeviceTrace {
                stream: dm.stream,
                g_t0: dm.g_t0,
                nu: dm.nu,
                indices,
                times,
                g,
                tail_start: dm.tail_start,
                tail,
            });
        }
        levels.push(LevelTraces {
            level: lm.level,
            devices,
        });
    }
    Ok(TraceStore {
        t0: meta.t0,
        fs: meta.fs,
        duration: meta.duration,
        n_fft: meta.n_fft,
        levels,
    })
}
