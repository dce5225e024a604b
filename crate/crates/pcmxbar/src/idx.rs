//! IDX files as distributed with the MNIST digits.
//!
//! Big-endian header: two zero bytes, a type code (`0x08` for unsigned
//! bytes), the number of dimensions, then one `u32` per dimension.

use std::fs;
use std::path::{Path, PathBuf};

use pcmxbar_core::Matrix;

use crate::error::{AppError, AppResult};

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IdxImages {
    pub count: usize,
    pub rows: usize,
    pub cols: usize,
    pub pixels: Vec<u8>,
}

fn be_u32(bytes: &[u8], at: usize) -> AppResult<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| AppError::Data("IDX header is truncated".into()))
}

pub fn parse_images(bytes: &[u8]) -> AppResult<IdxImages> {
    let magic = be_u32(bytes, 0)?;
    if magic != IMAGES_MAGIC {
        return Err(AppError::Data(format!(
            "IDX image magic is {magic:#010x}, expected {IMAGES_MAGIC:#010x}"
        )));
    }
    let count = be_u32(bytes, 4)? as usize;
    let rows = be_u32(bytes, 8)? as usize;
    let cols = be_u32(bytes, 12)? as usize;
    let body = &bytes[16..];
    let want = count * rows * cols;
    if body.len() != want {
        return Err(AppError::Data(format!(
            "IDX image payload has {} bytes, header promises {want}",
            body.len()
        )));
    }
    Ok(IdxImages {
        count,
        rows,
        cols,
        pixels: body.to_vec(),
    })
}

pub fn parse_labels(bytes: &[u8]) -> AppResult<Vec<u8>> {
    let magic = be_u32(bytes, 0)?;
    if magic != LABELS_MAGIC {
        return Err(AppError::Data(format!(
            "IDX label magic is {magic:#010x}, expected {LABELS_MAGIC:#010x}"
        )));
    }
    let count = be_u32(bytes, 4)? as usize;
    let body = &bytes[8..];
    if body.len() != count {
        return Err(AppError::Data(format!(
            "IDX label payload has {} bytes, header promises {count}",
            body.len()
        )));
    }
    Ok(body.to_vec())
}

/// Images scaled to `[0, 1]` (one per row) with their labels.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub images: Matrix,
    pub labels: Vec<u8>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// The first `n` examples.
    pub fn head(&self, n: usize) -> Dataset {
        let n = n.min(self.len());
        let cols = self.images.cols();
        Dataset {
            images: Matrix::from_vec(n, cols, self.images.as_slice()[..n * cols].to_vec())
                .expect("prefix of a valid matrix"),
            labels: self.labels[..n].to_vec(),
        }
    }
}

pub fn dataset(images: &IdxImages, labels: Vec<u8>) -> AppResult<Dataset> {
    if images.count != labels.len() {
        return Err(AppError::Data(format!(
            "{} images but {} labels",
            images.count,
            labels.len()
        )));
    }
    let px = images.rows * images.cols;
    let data = images.pixels.iter().map(|p| *p as f64 / 255.0).collect();
    Ok(Dataset {
        images: Matrix::from_vec(images.count, px, data)?,
        labels,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

impl Split {
    fn prefix(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "t10k",
        }
    }
}

fn read(path: &Path) -> AppResult<Vec<u8>> {
    fs::read(path).map_err(|e| AppError::io(path, e))
}

/// Loads one split from `dir` (`train-*` or `t10k-*` IDX files).
pub fn load_mnist(dir: &Path, split: Split) -> AppResult<Dataset> {
    let images = dir.join(format!("{}-images-idx3-ubyte", split.prefix()));
    let labels = dir.join(format!("{}-labels-idx1-ubyte", split.prefix()));
    dataset(&parse_images(&read(&images)?)?, parse_labels(&read(&labels)?)?)
}

/// `$PCMXBAR_MNIST_DIR`, else `data/mnist` under the workspace root, if it
/// holds the test split.
pub fn default_mnist_dir() -> Option<PathBuf> {
    let candidates = [
        std::env::var_os("PCMXBAR_MNIST_DIR").map(PathBuf::from),
        Some(Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist")),
        Some(PathBuf::from("data/mnist")),
    ];
    candidates
        .into_iter()
        .flatten()
        .find(|d| d.join("t10k-images-idx3-ubyte").is_file())
}
