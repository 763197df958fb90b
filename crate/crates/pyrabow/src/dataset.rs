//! Corpus ingestion: class-per-directory scanning, grayscale decoding, and
//! deterministic stratified splits and folds.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Schema version written into serialized dataset indices.
pub const INDEX_SCHEMA_VERSION: u32 = 1;

const SUPPORTED_EXTENSIONS: &[&str] = &["pgm", "png", "jpg", "jpeg"];

/// One image in the corpus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageRecord {
    pub path: PathBuf,
    pub class_id: usize,
    pub class_name: String,
}

/// An ordered view of a class-per-directory corpus.
///
/// Class order is lexicographic and `class_id` indexes into `classes`, so the
/// same corpus scans to the same index on any machine.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetIndex {
    pub classes: Vec<String>,
    pub records: Vec<ImageRecord>,
    pub counts: Vec<usize>,
}

impl DatasetIndex {
    /// Build an index from explicit parts, recomputing per-class counts.
    pub fn from_records(classes: Vec<String>, records: Vec<ImageRecord>) -> Result<Self> {
        let mut counts = vec![0usize; classes.len()];
        for rec in &records {
            if rec.class_id >= classes.len() {
                return Err(Error::dataset(format!(
                    "record {} has class_id {} out of range",
                    rec.path.display(),
                    rec.class_id
                )));
            }
            counts[rec.class_id] += 1;
        }
        Ok(DatasetIndex {
            classes,
            records,
            counts,
        })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Labels in record order.
    pub fn labels(&self) -> Vec<usize> {
        self.records.iter().map(|r| r.class_id).collect()
    }

    /// Serialize as a versioned JSON document.
    pub fn to_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Doc<'a> {
            schema_version: u32,
            classes: &'a [String],
            records: &'a [ImageRecord],
        }
        Ok(serde_json::to_string_pretty(&Doc {
            schema_version: INDEX_SCHEMA_VERSION,
            classes: &self.classes,
            records: &self.records,
        })?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Doc {
            schema_version: u32,
            classes: Vec<String>,
            records: Vec<ImageRecord>,
        }
        let doc: Doc = serde_json::from_str(text)?;
        if doc.schema_version != INDEX_SCHEMA_VERSION {
            return Err(Error::dataset(format!(
                "unsupported index schema_version {}",
                doc.schema_version
            )));
        }
        DatasetIndex::from_records(doc.classes, doc.records)
    }
}

/// A row-major luminance image with values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<f32>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<f32>) -> Result<Self> {
        if pixels.len() != width * height {
            return Err(Error::invalid(format!(
                "pixel buffer length {} does not match {}x{}",
                pixels.len(),
                width,
                height
            )));
        }
        Ok(GrayImage {
            width,
            height,
            pixels,
        })
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.pixels[y * self.width + x]
    }
}

/// Fold labels for every record of an index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldAssignment {
    pub k: usize,
    pub fold_of: Vec<usize>,
}

impl FoldAssignment {
    /// Record indices of the held-out fold and of its complement.
    pub fn split(&self, fold: usize) -> (Vec<usize>, Vec<usize>) {
        let mut train = Vec::new();
        let mut test = Vec::new();
        for (i, &f) in self.fold_of.iter().enumerate() {
            if f == fold {
                test.push(i);
            } else {
                train.push(i);
            }
        }
        (train, test)
    }
}

/// Scan a `<root>/<class>/<image>` corpus into a sorted index.
///
/// Classes are the immediate subdirectories of `root`, ordered
/// lexicographically; files within a class are ordered by file name. Files
/// without a supported raster extension are ignored.
pub fn scan_dataset(root: &Path) -> Result<DatasetIndex> {
    if !root.is_dir() {
        return Err(Error::dataset(format!(
            "dataset root {} is not a directory",
            root.display()
        )));
    }
    let mut class_dirs: Vec<(String, PathBuf)> = Vec::new();
    for entry in fs::read_dir(root)? {
        let entry = entry?;
        if entry.file_type()?.is_dir() {
            let name = entry.file_name().to_string_lossy().into_owned();
            class_dirs.push((name, entry.path()));
        }
    }
    class_dirs.sort_by(|a, b| a.0.cmp(&b.0));
    if class_dirs.is_empty() {
        return Err(Error::dataset(format!(
            "no classes found under {}",
            root.display()
        )));
    }

    let classes: Vec<String> = class_dirs.iter().map(|(n, _)| n.clone()).collect();
    let mut records = Vec::new();
    for (class_id, (class_name, dir)) in class_dirs.iter().enumerate() {
        let mut files: Vec<PathBuf> = fs::read_dir(dir)?
            .filter_map(|e| e.ok())
            .map(|e| e.path())
            .filter(|p| p.is_file() && has_supported_extension(p))
            .collect();
        files.sort();
        for path in files {
            records.push(ImageRecord {
                path,
                class_id,
                class_name: class_name.clone(),
            });
        }
    }
    if records.is_empty() {
        return Err(Error::dataset(format!(
            "no images found under {}",
            root.display()
        )));
    }
    DatasetIndex::from_records(classes, records)
}

fn has_supported_extension(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .map(|e| {
            let e = e.to_ascii_lowercase();
            SUPPORTED_EXTENSIONS.contains(&e.as_str())
        })
        .unwrap_or(false)
}

/// Decode a raster file (PGM/PNG/JPEG) to luminance in `[0, 1]`.
///
/// Already-gray sources map as `value / max`; color sources use the BT.601
/// weights `0.299 R + 0.587 G + 0.114 B`.
pub fn load_grayscale(path: &Path) -> Result<GrayImage> {
    let img = image::open(path).map_err(|e| Error::Decode {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    Ok(dynamic_to_gray(&img))
}

/// Decode from an in-memory encoded buffer (format sniffed from content).
pub fn load_grayscale_bytes(bytes: &[u8], origin: &Path) -> Result<GrayImage> {
    let img = image::load_from_memory(bytes).map_err(|e| Error::Decode {
        path: origin.to_path_buf(),
        reason: e.to_string(),
    })?;
    Ok(dynamic_to_gray(&img))
}

fn dynamic_to_gray(img: &image::DynamicImage) -> GrayImage {
    use image::DynamicImage::*;
    let (width, height) = (img.width() as usize, img.height() as usize);
    let pixels: Vec<f32> = match img {
        ImageLuma8(buf) => buf.pixels().map(|p| p.0[0] as f32 / 255.0).collect(),
        ImageLuma16(buf) => buf.pixels().map(|p| p.0[0] as f32 / 65535.0).collect(),
        ImageLumaA8(buf) => buf.pixels().map(|p| p.0[0] as f32 / 255.0).collect(),
        ImageRgb8(buf) => buf.pixels().map(|p| luminance_u8(p.0)).collect(),
        ImageRgba8(buf) => buf
            .pixels()
            .map(|p| luminance_u8([p.0[0], p.0[1], p.0[2]]))
            .collect(),
        other => other
            .to_rgb8()
            .pixels()
            .map(|p| luminance_u8(p.0))
            .collect(),
    };
    GrayImage {
        width,
        height,
        pixels,
    }
}

#[inline]
fn luminance_u8(rgb: [u8; 3]) -> f32 {
    (0.299 * rgb[0] as f32 + 0.587 * rgb[1] as f32 + 0.114 * rgb[2] as f32) / 255.0
}

/// Split per class: `floor(count * train_fraction)` records to train, the rest
/// to test, after a shuffle seeded by `seed`. Record order within each part
/// follows the original index order.
pub fn stratified_split(
    index: &DatasetIndex,
    train_fraction: f64,
    seed: u64,
) -> Result<(DatasetIndex, DatasetIndex)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::invalid(format!(
            "train_fraction must be in (0, 1), got {train_fraction}"
        )));
    }
    let by_class = indices_by_class(index);
    for (class_id, members) in &by_class {
        if members.len() < 2 {
            return Err(Error::dataset(format!(
                "class `{}` has {} sample(s); at least 2 are required to stratify",
                index.classes[*class_id],
                members.len()
            )));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train_idx = Vec::new();
    let mut test_idx = Vec::new();
    for (_, members) in by_class {
        let mut shuffled = members;
        shuffled.shuffle(&mut rng);
        let n_train = (shuffled.len() as f64 * train_fraction).floor() as usize;
        train_idx.extend_from_slice(&shuffled[..n_train]);
        test_idx.extend_from_slice(&shuffled[n_train..]);
    }
    train_idx.sort_unstable();
    test_idx.sort_unstable();
    let subset = |ids: &[usize]| -> Result<DatasetIndex> {
        DatasetIndex::from_records(
            index.classes.clone(),
            ids.iter().map(|&i| index.records[i].clone()).collect(),
        )
    };
    Ok((subset(&train_idx)?, subset(&test_idx)?))
}

/// Assign every record to one of `k` folds, round-robin within each class
/// after a seeded shuffle, so per-class fold sizes differ by at most one.
pub fn stratified_folds(index: &DatasetIndex, k: usize, seed: u64) -> Result<FoldAssignment> {
    if k < 2 {
        return Err(Error::invalid(format!("fold count must be >= 2, got {k}")));
    }
    let by_class = indices_by_class(index);
    for (class_id, members) in &by_class {
        if members.len() < k {
            return Err(Error::dataset(format!(
                "class `{}` has {} sample(s), fewer than {} folds",
                index.classes[*class_id],
                members.len(),
                k
            )));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fold_of = vec![0usize; index.records.len()];
    for (_, members) in by_class {
        let mut shuffled = members;
        shuffled.shuffle(&mut rng);
        for (i, rec_idx) in shuffled.into_iter().enumerate() {
            fold_of[rec_idx] = i % k;
        }
    }
    Ok(FoldAssignment { k, fold_of })
}

/// Record indices grouped by class, in class order (BTreeMap keeps it stable).
fn indices_by_class(index: &DatasetIndex) -> BTreeMap<usize, Vec<usize>> {
    let mut map: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, rec) in index.records.iter().enumerate() {
        map.entry(rec.class_id).or_default().push(i);
    }
    map
}
