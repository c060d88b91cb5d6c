//! Dataset sources: Gaussian blobs and MNIST IDX files.

use std::fs::File;
use std::io::{BufReader, Read};
use std::path::{Path, PathBuf};

use flate2::read::GzDecoder;
use rand::seq::SliceRandom;
use rand_distr::{Distribution, Normal};

use super::{FlError, Sample};
use crate::seed::{derive_seed, rng_from_seed};

pub const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
pub const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

/// Isotropic Gaussian blobs, one per class.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticBlobs {
    pub num_classes: usize,
    pub dim: usize,
    pub samples_per_class: usize,
    /// Per-coordinate standard deviation.
    pub noise_std: f64,
    /// Class means; `None` places mean `c` at `separation / sqrt(2) * e_c`
    /// so every pair of means is `separation` apart.
    pub means: Option<Vec<Vec<f64>>>,
    pub separation: f64,
    pub seed: u64,
}

impl SyntheticBlobs {
    pub fn new(num_classes: usize, dim: usize, samples_per_class: usize, seed: u64) -> Self {
        Self {
            num_classes,
            dim,
            samples_per_class,
            noise_std: 1.0,
            means: None,
            separation: 3.0,
            seed,
        }
    }

    pub fn class_means(&self) -> Vec<Vec<f64>> {
        if let Some(means) = &self.means {
            return means.clone();
        }
        assert!(
            self.dim >= self.num_classes,
            "default means need dim >= num_classes"
        );
        let offset = self.separation / std::f64::consts::SQRT_2;
        (0..self.num_classes)
            .map(|c| {
                let mut m = vec![0.0; self.dim];
                m[c] = offset;
                m
            })
            .collect()
    }

    /// Samples in class-major order.
    pub fn generate(&self) -> Vec<Sample> {
        let means = self.class_means();
        let noise = Normal::new(0.0, self.noise_std).expect("noise_std must be finite and >= 0");
        let mut rng = rng_from_seed(derive_seed(self.seed, "blobs", &[]));
        let mut out = Vec::with_capacity(self.num_classes * self.samples_per_class);
        for (label, mean) in means.iter().enumerate() {
            for _ in 0..self.samples_per_class {
                let features = mean.iter().map(|m| m + noise.sample(&mut rng)).collect();
                out.push(Sample::new(features, label));
            }
        }
        out
    }
}

/// Seeded shuffle, then hold out the last `fraction` of samples.
/// Returns `(train, holdout)`.
pub fn split_holdout(dataset: Vec<Sample>, fraction: f64, seed: u64) -> (Vec<Sample>, Vec<Sample>) {
    assert!((0.0..1.0).contains(&fraction), "holdout fraction must be in [0, 1)");
    let mut data = dataset;
    data.shuffle(&mut rng_from_seed(seed));
    let held = (data.len() as f64 * fraction).round() as usize;
    let eval = data.split_off(data.len() - held);
    (data, eval)
}

fn open_maybe_gz(path: &Path) -> Result<Vec<u8>, FlError> {
    let mut raw = Vec::new();
    BufReader::new(File::open(path)?).read_to_end(&mut raw)?;
    if raw.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        GzDecoder::new(raw.as_slice()).read_to_end(&mut out)?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

fn idx_err(path: &Path, reason: impl Into<String>) -> FlError {
    FlError::Idx {
        path: path.display().to_string(),
        reason: reason.into(),
    }
}

fn be_u32(bytes: &[u8], at: usize, path: &Path) -> Result<u32, FlError> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| idx_err(path, "truncated header"))
}

/// Read an IDX3 image file (plain or gzip), scaling pixels to `[0, 1]`.
pub fn read_idx_images(path: &Path) -> Result<Vec<Vec<f64>>, FlError> {
    let bytes = open_maybe_gz(path)?;
    let magic = be_u32(&bytes, 0, path)?;
    if magic != IDX_IMAGES_MAGIC {
        return Err(idx_err(path, format!("bad magic {magic:#010x}, expected {IDX_IMAGES_MAGIC:#010x}")));
    }
    let count = be_u32(&bytes, 4, path)? as usize;
    let rows = be_u32(&bytes, 8, path)? as usize;
    let cols = be_u32(&bytes, 12, path)? as usize;
    let pixels = rows * cols;
    let body = &bytes[16..];
    if body.len() != count * pixels {
        return Err(idx_err(
            path,
            format!("expected {} pixel bytes, found {}", count * pixels, body.len()),
        ));
    }
    Ok(body
        .chunks_exact(pixels.max(1))
        .take(count)
        .map(|img| img.iter().map(|&p| f64::from(p) / 255.0).collect())
        .collect())
}

/// Read an IDX1 label file (plain or gzip).
pub fn read_idx_labels(path: &Path) -> Result<Vec<usize>, FlError> {
    let bytes = open_maybe_gz(path)?;
    let magic = be_u32(&bytes, 0, path)?;
    if magic != IDX_LABELS_MAGIC {
        return Err(idx_err(path, format!("bad magic {magic:#010x}, expected {IDX_LABELS_MAGIC:#010x}")));
    }
    let count = be_u32(&bytes, 4, path)? as usize;
    let body = &bytes[8..];
    if body.len() != count {
        return Err(idx_err(path, format!("expected {count} labels, found {}", body.len())));
    }
    Ok(body.iter().map(|&l| usize::from(l)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MnistSplit {
    Train,
    Test,
}

fn find_file(dir: &Path, stem: &str) -> Result<PathBuf, FlError> {
    [stem.to_owned(), format!("{stem}.gz")]
        .into_iter()
        .map(|name| dir.join(name))
        .find(|p| p.is_file())
        .ok_or_else(|| idx_err(&dir.join(stem), "not found (also tried .gz)"))
}

/// Load the standard MNIST files from `dir`. `limit` keeps the first N samples.
pub fn load_mnist(dir: &Path, split: MnistSplit, limit: Option<usize>) -> Result<Vec<Sample>, FlError> {
    let prefix = match split {
        MnistSplit::Train => "train",
        MnistSplit::Test => "t10k",
    };
    let images_path = find_file(dir, &format!("{prefix}-images-idx3-ubyte"))?;
    let labels_path = find_file(dir, &format!("{prefix}-labels-idx1-ubyte"))?;
    let images = read_idx_images(&images_path)?;
    let labels = read_idx_labels(&labels_path)?;
    if images.len() != labels.len() {
        return Err(idx_err(
            &labels_path,
            format!("{} labels for {} images", labels.len(), images.len()),
        ));
    }
    let n = limit.map_or(images.len(), |l| l.min(images.len()));
    Ok(images
        .into_iter()
        .zip(labels)
        .take(n)
        .map(|(f, l)| Sample::new(f, l))
        .collect())
}
