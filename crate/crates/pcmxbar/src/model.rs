//! Model directory: `model.json` plus one `XBARG1` blob of raw weights per
//! layer.

use std::fs;
use std::path::Path;

use pcmxbar_core::inference::MlpModel;
use pcmxbar_core::mapping::Activation;
use serde::{Deserialize, Serialize};

use crate::binfmt::{read_matrix, write_matrix};
use crate::error::{AppError, AppResult};

pub const MANIFEST: &str = "model.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelManifest {
    pub schema: u32,
    /// `[inputs, hidden, outputs]`.
    pub dims: [usize; 3],
    pub activations: [String; 2],
    pub calibration: [f64; 2],
    /// Weight blob file names, relative to the manifest.
    pub layers: [String; 2],
    /// Float accuracy on the test split, if measured at export.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_accuracy: Option<f64>,
}

pub fn save_model(dir: &Path, model: &MlpModel, test_accuracy: Option<f64>) -> AppResult<()> {
    fs::create_dir_all(dir).map_err(|e| AppError::io(dir, e))?;
    let (i, h, o) = model.dims();
    let manifest = ModelManifest {
        schema: 1,
        dims: [i, h, o],
        activations: model.activations.map(|a| a.name().to_string()),
        calibration: model.input_scales,
        layers: ["w1.xbarg".into(), "w2.xbarg".into()],
        test_accuracy,
    };
    write_matrix(&dir.join(&manifest.layers[0]), &model.w1)?;
    write_matrix(&dir.join(&manifest.layers[1]), &model.w2)?;
    let path = dir.join(MANIFEST);
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serialises");
    fs::write(&path, text + "\n").map_err(|e| AppError::io(&path, e))
}

pub fn read_manifest(dir: &Path) -> AppResult<ModelManifest> {
    let path = dir.join(MANIFEST);
    let text = fs::read_to_string(&path).map_err(|e| AppError::io(&path, e))?;
    let m: ModelManifest = serde_json::from_str(&text)
        .map_err(|e| AppError::Data(format!("{}: {e}", path.display())))?;
    if m.schema != 1 {
        return Err(AppError::Data(format!("unsupported model schema {}", m.schema)));
    }
    Ok(m)
}

pub fn load_model(dir: &Path) -> AppResult<MlpModel> {
    let m = read_manifest(dir)?;
    let w1 = read_matrix(&dir.join(&m.layers[0]))?;
    let w2 = read_matrix(&dir.join(&m.layers[1]))?;
    if w1.shape() != (m.dims[1], m.dims[0]) || w2.shape() != (m.dims[2], m.dims[1]) {
        return Err(AppError::Data(format!(
            "weight shapes {:?} and {:?} do not match dims {:?}",
            w1.shape(),
            w2.shape(),
            m.dims
        )));
    }
    let act = |s: &str| {
        Activation::parse(s).ok_or_else(|| AppError::Data(format!("unknown activation {s:?}")))
    };
    let activations = [act(&m.activations[0])?, act(&m.activations[1])?];
    MlpModel::new(w1, w2, activations, m.calibration).map_err(|e| AppError::Data(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use pcmxbar_core::Matrix;

    #[test]
    fn roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let w1 = Matrix::from_fn(3, 4, |i, j| i as f64 - j as f64 * 0.25);
        let w2 = Matrix::from_fn(2, 3, |i, j| (i + j) as f64);
        let m = MlpModel::new(w1, w2, [Activation::Relu, Activation::Identity], [1.0, 7.5]).unwrap();
        save_model(dir.path(), &m, Some(0.5)).unwrap();
        assert_eq!(load_model(dir.path()).unwrap(), m);
        assert_eq!(read_manifest(dir.path()).unwrap().test_accuracy, Some(0.5));
    }

    #[test]
    fn rejects_unknown_keys() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(
            dir.path().join(MANIFEST),
            r#"{"schema":1,"dims":[1,1,1],"activations":["relu","identity"],"calibration":[1,1],"layers":["a","b"],"bias":true}"#,
        )
        .unwrap();
        assert!(matches!(read_manifest(dir.path()), Err(AppError::Data(_))));
    }
}
