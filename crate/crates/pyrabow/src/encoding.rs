//! Spatial-pyramid histograms, feature-vector normalization, and PCA.
//!
//! L2 and sum normalization run per region block so every sub-region
//! histogram contributes equally to the concatenated vector; standard
//! scaling is per dimension using statistics fit on the training set.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::Keypoint;

/// Pyramid partition family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PyramidShape {
    /// Level `l` splits the image into a `2^l x 2^l` grid.
    Square,
    /// Level 0 is the whole image; level `l >= 1` adds `3l` full-width strips.
    Horizontal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PyramidSpec {
    pub shape: PyramidShape,
    pub level: usize,
}

impl Default for PyramidSpec {
    fn default() -> Self {
        PyramidSpec {
            shape: PyramidShape::Horizontal,
            level: 1,
        }
    }
}

impl PyramidSpec {
    /// Total region count over levels `0..=level`.
    pub fn region_count(&self) -> usize {
        match self.shape {
            PyramidShape::Square => (0..=self.level).map(|l| 4usize.pow(l as u32)).sum(),
            PyramidShape::Horizontal => 1 + (1..=self.level).map(|l| 3 * l).sum::<usize>(),
        }
    }
}

/// Half-open pixel rectangle `[x0, x1) x [y0, y1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Region {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
}

impl Region {
    pub fn area(&self) -> usize {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }
}

/// Concatenated regions of all pyramid levels, level-major then row-major.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionLayout {
    pub width: usize,
    pub height: usize,
    pub regions: Vec<Region>,
}

/// `[floor(i*len/n), floor((i+1)*len/n))` boundaries tile any length exactly.
fn axis_bounds(len: usize, n: usize, i: usize) -> (usize, usize) {
    (i * len / n, (i + 1) * len / n)
}

pub fn pyramid_regions(spec: &PyramidSpec, width: usize, height: usize) -> Result<RegionLayout> {
    let check = |len: usize, n: usize, axis: &str| {
        if len < n {
            Err(Error::invalid(format!(
                "{axis} of {len}px cannot form {n} non-empty regions"
            )))
        } else {
            Ok(())
        }
    };
    let mut regions = Vec::with_capacity(spec.region_count());
    match spec.shape {
        PyramidShape::Square => {
            let n_top = 1usize << spec.level;
            check(width, n_top, "width")?;
            check(height, n_top, "height")?;
            for level in 0..=spec.level {
                let n = 1usize << level;
                for row in 0..n {
                    let (y0, y1) = axis_bounds(height, n, row);
                    for col in 0..n {
                        let (x0, x1) = axis_bounds(width, n, col);
                        regions.push(Region { x0, y0, x1, y1 });
                    }
                }
            }
        }
        PyramidShape::Horizontal => {
            if spec.level >= 1 {
                check(height, 3 * spec.level, "height")?;
            }
            regions.push(Region {
                x0: 0,
                y0: 0,
                x1: width,
                y1: height,
            });
            for level in 1..=spec.level {
                let strips = 3 * level;
                for s in 0..strips {
                    let (y0, y1) = axis_bounds(height, strips, s);
                    regions.push(Region {
                        x0: 0,
                        y0,
                        x1: width,
                        y1,
                    });
                }
            }
        }
    }
    if width == 0 || height == 0 {
        return Err(Error::invalid("image has zero area"));
    }
    Ok(RegionLayout {
        width,
        height,
        regions,
    })
}

/// What produced a feature vector; determines its length formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EncodingTag {
    Bovw,
    BovwPca,
    Fisher,
}

/// A concatenated per-region histogram (or its PCA/Fisher transform).
///
/// `blocks` records how many equal-length region blocks the vector holds so
/// block-wise normalization stays possible after construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub tag: EncodingTag,
    pub blocks: usize,
}

impl FeatureVector {
    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

/// Per-region k-bin count histograms, concatenated in layout order.
///
/// A keypoint belongs to a region when `x0 <= x < x1` and `y0 <= y < y1`;
/// the last region along each axis also accepts the closing boundary.
pub fn encode_bovw(
    kps: &[Keypoint],
    words: &[usize],
    layout: &RegionLayout,
    k: usize,
) -> Result<FeatureVector> {
    if kps.len() != words.len() {
        return Err(Error::invalid(format!(
            "{} keypoints vs {} word indices",
            kps.len(),
            words.len()
        )));
    }
    if let Some(&w) = words.iter().find(|&&w| w >= k) {
        return Err(Error::invalid(format!("word index {w} >= codebook size {k}")));
    }
    let mut values = vec![0f64; layout.regions.len() * k];
    for (r, region) in layout.regions.iter().enumerate() {
        let hist = &mut values[r * k..(r + 1) * k];
        for (kp, &w) in kps.iter().zip(words.iter()) {
            let in_x = kp.x >= region.x0 as f32
                && (kp.x < region.x1 as f32
                    || (region.x1 == layout.width && kp.x <= region.x1 as f32));
            let in_y = kp.y >= region.y0 as f32
                && (kp.y < region.y1 as f32
                    || (region.y1 == layout.height && kp.y <= region.y1 as f32));
            if in_x && in_y {
                hist[w] += 1.0;
            }
        }
    }
    Ok(FeatureVector {
        values,
        tag: EncodingTag::Bovw,
        blocks: layout.regions.len(),
    })
}

/// Normalization applied to encoded vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormKind {
    None,
    /// Unit Euclidean norm per region block.
    L2,
    /// Values of each region block sum to one.
    Sum,
    /// `(x - mean) / std` per dimension with training-set statistics.
    Standard,
}

/// Per-dimension population mean and standard deviation of training vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalerStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

pub fn fit_scaler(train: &[FeatureVector]) -> Result<ScalerStats> {
    if train.len() < 2 {
        return Err(Error::invalid(format!(
            "scaler needs at least 2 training vectors, got {}",
            train.len()
        )));
    }
    let dim = train[0].dim();
    if train.iter().any(|v| v.dim() != dim) {
        return Err(Error::invalid("training vectors differ in dimension"));
    }
    let n = train.len() as f64;
    let mut mean = vec![0f64; dim];
    for v in train {
        for (m, x) in mean.iter_mut().zip(v.values.iter()) {
            *m += x;
        }
    }
    for m in mean.iter_mut() {
        *m /= n;
    }
    let mut var = vec![0f64; dim];
    for v in train {
        for ((s, x), m) in var.iter_mut().zip(v.values.iter()).zip(mean.iter()) {
            let d = x - m;
            *s += d * d;
        }
    }
    let std = var.into_iter().map(|s| (s / n).sqrt()).collect();
    Ok(ScalerStats { mean, std })
}

/// Apply one of the normalizations. `stats` is required for
/// [`NormKind::Standard`] and ignored otherwise. Zero blocks and zero-std
/// dimensions map to zero.
pub fn normalize(
    v: &FeatureVector,
    kind: NormKind,
    stats: Option<&ScalerStats>,
) -> Result<FeatureVector> {
    let mut out = v.clone();
    match kind {
        NormKind::None => {}
        NormKind::L2 | NormKind::Sum => {
            let blocks = v.blocks.max(1);
            if v.values.len() % blocks != 0 {
                return Err(Error::invalid(format!(
                    "vector length {} is not divisible into {} blocks",
                    v.values.len(),
                    blocks
                )));
            }
            let block_len = v.values.len() / blocks;
            for chunk in out.values.chunks_mut(block_len) {
                let denom = match kind {
                    NormKind::L2 => chunk.iter().map(|x| x * x).sum::<f64>().sqrt(),
                    _ => chunk.iter().sum::<f64>(),
                };
                if denom != 0.0 {
                    for x in chunk.iter_mut() {
                        *x /= denom;
                    }
                } else {
                    chunk.fill(0.0);
                }
            }
        }
        NormKind::Standard => {
            let stats = stats
                .ok_or_else(|| Error::invalid("standard normalization requires fitted stats"))?;
            if stats.mean.len() != v.dim() {
                return Err(Error::DimensionMismatch {
                    expected: stats.mean.len(),
                    got: v.dim(),
                });
            }
            for ((x, m), s) in out
                .values
                .iter_mut()
                .zip(stats.mean.iter())
                .zip(stats.std.iter())
            {
                *x = if *s > 0.0 { (*x - m) / s } else { 0.0 };
            }
        }
    }
    Ok(out)
}

/// Orthonormal principal basis fit on training vectors.
///
/// `explained_variance` holds the population covariance eigenvalues in
/// non-increasing order; each basis vector's largest-magnitude entry is
/// oriented positive so fits are sign-stable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// `num_components` rows of length `dim`.
    pub components: Vec<Vec<f64>>,
    pub explained_variance: Vec<f64>,
}

impl PcaModel {
    pub fn num_components(&self) -> usize {
        self.components.len()
    }

    pub fn input_dim(&self) -> usize {
        self.mean.len()
    }
}

pub fn fit_pca(train: &[FeatureVector], num_components: usize) -> Result<PcaModel> {
    let n = train.len();
    if n < 2 {
        return Err(Error::invalid("PCA needs at least 2 training vectors"));
    }
    let dim = train[0].dim();
    if train.iter().any(|v| v.dim() != dim) {
        return Err(Error::invalid("training vectors differ in dimension"));
    }
    let max_components = dim.min(n - 1);
    if num_components == 0 || num_components > max_components {
        return Err(Error::invalid(format!(
            "num_components {num_components} outside [1, min(dim, n-1)] = [1, {max_components}]"
        )));
    }

    let mut mean = vec![0f64; dim];
    for v in train {
        for (m, x) in mean.iter_mut().zip(v.values.iter()) {
            *m += x;
        }
    }
    for m in mean.iter_mut() {
        *m /= n as f64;
    }
    let centered = DMatrix::from_fn(n, dim, |i, j| train[i].values[j] - mean[j]);

    // eigendecompose whichever of X^T X / n (dim x dim) or X X^T / n (n x n)
    // is smaller; both yield the same principal directions
    let mut pairs: Vec<(f64, Vec<f64>)>;
    if dim <= n {
        let cov = centered.transpose() * &centered / n as f64;
        let eig = SymmetricEigen::new(cov);
        pairs = (0..dim)
            .map(|j| {
                (
                    eig.eigenvalues[j],
                    eig.eigenvectors.column(j).iter().cloned().collect(),
                )
            })
            .collect();
    } else {
        let gram = &centered * centered.transpose() / n as f64;
        let eig = SymmetricEigen::new(gram);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        pairs = Vec::with_capacity(num_components);
        for &j in order.iter().take(num_components) {
            let lambda = eig.eigenvalues[j];
            if lambda <= 1e-12 * eig.eigenvalues[order[0]].max(1e-300) {
                return Err(Error::invalid(format!(
                    "num_components {num_components} exceeds the numerical rank of the data"
                )));
            }
            // dim-space direction: X^T u / sqrt(n * lambda)
            let u = eig.eigenvectors.column(j);
            let dir = centered.transpose() * u / (n as f64 * lambda).sqrt();
            pairs.push((lambda, dir.iter().cloned().collect()));
        }
    }
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    pairs.truncate(num_components);

    let mut components = Vec::with_capacity(num_components);
    let mut explained_variance = Vec::with_capacity(num_components);
    for (lambda, mut dir) in pairs {
        let (mut idx, mut best) = (0usize, 0f64);
        for (i, &x) in dir.iter().enumerate() {
            if x.abs() > best {
                best = x.abs();
                idx = i;
            }
        }
        if dir[idx] < 0.0 {
            for x in dir.iter_mut() {
                *x = -*x;
            }
        }
        components.push(dir);
        explained_variance.push(lambda.max(0.0));
    }
    Ok(PcaModel {
        mean,
        components,
        explained_variance,
    })
}

/// Project `(v - mean)` onto the principal basis.
pub fn project_pca(model: &PcaModel, v: &FeatureVector) -> Result<FeatureVector> {
    if v.dim() != model.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: model.input_dim(),
            got: v.dim(),
        });
    }
    let values = model
        .components
        .iter()
        .map(|comp| {
            comp.iter()
                .zip(v.values.iter().zip(model.mean.iter()))
                .map(|(c, (x, m))| c * (x - m))
                .sum()
        })
        .collect();
    Ok(FeatureVector {
        values,
        tag: EncodingTag::BovwPca,
        blocks: 1,
    })
}

/// Reconstruct from a projection: `mean + sum_j p_j * component_j`.
pub fn reconstruct_pca(model: &PcaModel, projected: &[f64]) -> Result<Vec<f64>> {
    if projected.len() != model.num_components() {
        return Err(Error::DimensionMismatch {
            expected: model.num_components(),
            got: projected.len(),
        });
    }
    let mut out = model.mean.clone();
    for (p, comp) in projected.iter().zip(model.components.iter()) {
        for (o, c) in out.iter_mut().zip(comp.iter()) {
            *o += p * c;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn fv(values: Vec<f64>, blocks: usize) -> FeatureVector {
        FeatureVector {
            values,
            tag: EncodingTag::Bovw,
            blocks,
        }
    }

    #[test]
    fn square_level2_has_21_regions() {
        let layout = pyramid_regions(
            &PyramidSpec {
                shape: PyramidShape::Square,
                level: 2,
            },
            100,
            80,
        )
        .unwrap();
        assert_eq!(layout.regions.len(), 21);
    }

    #[test]
    fn horizontal_level2_has_10_regions() {
        let layout = pyramid_regions(
            &PyramidSpec {
                shape: PyramidShape::Horizontal,
                level: 2,
            },
            100,
            80,
        )
        .unwrap();
        assert_eq!(layout.regions.len(), 10);
    }

    #[test]
    fn level0_is_full_image() {
        for shape in [PyramidShape::Square, PyramidShape::Horizontal] {
            let layout = pyramid_regions(&PyramidSpec { shape, level: 0 }, 64, 48).unwrap();
            assert_eq!(
                layout.regions,
                vec![Region {
                    x0: 0,
                    y0: 0,
                    x1: 64,
                    y1: 48
                }]
            );
        }
    }

    #[test]
    fn regions_tile_exactly_per_level() {
        // per level: areas sum to the image area and rows/cols are disjoint
        for (w, h) in [(63, 41), (16, 16), (100, 7)] {
            let layout = pyramid_regions(
                &PyramidSpec {
                    shape: PyramidShape::Square,
                    level: 2,
                },
                w,
                h,
            );
            let Ok(layout) = layout else { continue };
            let area = w * h;
            // level offsets: 1 region, then 4, then 16
            for (start, count) in [(0usize, 1usize), (1, 4), (5, 16)] {
                let total: usize = layout.regions[start..start + count]
                    .iter()
                    .map(|r| r.area())
                    .sum();
                assert_eq!(total, area, "{w}x{h} level starting at {start}");
            }
        }
        let layout = pyramid_regions(
            &PyramidSpec {
                shape: PyramidShape::Horizontal,
                level: 2,
            },
            40,
            33,
        )
        .unwrap();
        for (start, count) in [(0usize, 1usize), (1, 3), (4, 6)] {
            let total: usize = layout.regions[start..start + count]
                .iter()
                .map(|r| r.area())
                .sum();
            assert_eq!(total, 40 * 33);
        }
    }

    #[test]
    fn too_small_image_errors() {
        let spec = PyramidSpec {
            shape: PyramidShape::Square,
            level: 3,
        };
        assert!(pyramid_regions(&spec, 4, 100).is_err());
        let spec = PyramidSpec {
            shape: PyramidShape::Horizontal,
            level: 2,
        };
        assert!(pyramid_regions(&spec, 100, 5).is_err());
    }

    fn kp(x: f32, y: f32) -> Keypoint {
        Keypoint { x, y, scale: 1.0 }
    }

    #[test]
    fn bovw_single_region_counts() {
        let layout = pyramid_regions(
            &PyramidSpec {
                shape: PyramidShape::Square,
                level: 0,
            },
            10,
            10,
        )
        .unwrap();
        let kps: Vec<Keypoint> = (0..5).map(|i| kp(i as f32, i as f32)).collect();
        let words = vec![2usize; 5];
        let v = encode_bovw(&kps, &words, &layout, 4).unwrap();
        assert_eq!(v.values, vec![0.0, 0.0, 5.0, 0.0]);
    }

    #[test]
    fn bovw_word_out_of_range_errors() {
        let layout = pyramid_regions(
            &PyramidSpec {
                shape: PyramidShape::Square,
                level: 0,
            },
            10,
            10,
        )
        .unwrap();
        assert!(encode_bovw(&[kp(1.0, 1.0)], &[4], &layout, 4).is_err());
    }

    #[test]
    fn bovw_matches_brute_force_recount() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let layout = pyramid_regions(
            &PyramidSpec {
                shape: PyramidShape::Square,
                level: 1,
            },
            32,
            24,
        )
        .unwrap();
        let kps: Vec<Keypoint> = (0..10)
            .map(|_| kp(rng.gen_range(0.0..32.0), rng.gen_range(0.0..24.0)))
            .collect();
        let words: Vec<usize> = (0..10).map(|_| rng.gen_range(0..3)).collect();
        let k = 3;
        let v = encode_bovw(&kps, &words, &layout, k).unwrap();
        // oracle: per-region exhaustive membership recount
        for (r, region) in layout.regions.iter().enumerate() {
            for word in 0..k {
                let expect = kps
                    .iter()
                    .zip(words.iter())
                    .filter(|(p, &w)| {
                        w == word
                            && p.x >= region.x0 as f32
                            && (p.x < region.x1 as f32
                                || (region.x1 == 32 && p.x <= region.x1 as f32))
                            && p.y >= region.y0 as f32
                            && (p.y < region.y1 as f32
                                || (region.y1 == 24 && p.y <= region.y1 as f32))
                    })
                    .count() as f64;
                assert_eq!(v.values[r * k + word], expect);
            }
        }
        // conservation on the level-0 block
        let total: f64 = v.values[0..k].iter().sum();
        assert_eq!(total, 10.0);
        // per-level conservation as well
        let level1: f64 = v.values[k..].iter().sum();
        assert_eq!(level1, 10.0);
    }

    #[test]
    fn l2_norm_example() {
        let v = fv(vec![3.0, 4.0], 1);
        let out = normalize(&v, NormKind::L2, None).unwrap();
        assert_eq!(out.values, vec![0.6, 0.8]);
    }

    #[test]
    fn sum_norm_example() {
        let v = fv(vec![1.0, 3.0], 1);
        let out = normalize(&v, NormKind::Sum, None).unwrap();
        assert_eq!(out.values, vec![0.25, 0.75]);
    }

    #[test]
    fn standard_norm_example() {
        let stats = ScalerStats {
            mean: vec![2.0, 2.0],
            std: vec![1.0, 1.0],
        };
        let v = fv(vec![1.0, 3.0], 1);
        let out = normalize(&v, NormKind::Standard, Some(&stats)).unwrap();
        assert_eq!(out.values, vec![-1.0, 1.0]);
    }

    #[test]
    fn block_normalization_is_per_region() {
        let v = fv(vec![3.0, 4.0, 0.0, 0.0, 1.0, 1.0], 3);
        let out = normalize(&v, NormKind::L2, None).unwrap();
        assert_eq!(out.values[0..2], [0.6, 0.8]);
        assert_eq!(out.values[2..4], [0.0, 0.0], "zero block stays zero");
        let n: f64 = out.values[4..6].iter().map(|x| x * x).sum::<f64>().sqrt();
        assert_relative_eq!(n, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn scaler_two_point_example() {
        let train = vec![fv(vec![0.0], 1), fv(vec![2.0], 1)];
        let stats = fit_scaler(&train).unwrap();
        assert_eq!(stats.mean, vec![1.0]);
        assert_eq!(stats.std, vec![1.0]);
    }

    #[test]
    fn scaler_constant_dimension_maps_to_zero() {
        let train = vec![fv(vec![5.0, 1.0], 1), fv(vec![5.0, 3.0], 1)];
        let stats = fit_scaler(&train).unwrap();
        assert_eq!(stats.std[0], 0.0);
        let out = normalize(&train[0], NormKind::Standard, Some(&stats)).unwrap();
        assert_eq!(out.values[0], 0.0);
    }

    #[test]
    fn scaler_matches_two_pass_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let train: Vec<FeatureVector> = (0..5)
            .map(|_| fv((0..3).map(|_| rng.gen_range(-2.0..2.0)).collect(), 1))
            .collect();
        let stats = fit_scaler(&train).unwrap();
        for d in 0..3 {
            let vals: Vec<f64> = train.iter().map(|v| v.values[d]).collect();
            let mean = vals.iter().sum::<f64>() / 5.0;
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 5.0;
            assert_relative_eq!(stats.mean[d], mean, epsilon = 1e-12);
            assert_relative_eq!(stats.std[d], var.sqrt(), epsilon = 1e-12);
        }
    }

    #[test]
    fn scaler_applied_to_its_training_set_standardizes() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let train: Vec<FeatureVector> = (0..12)
            .map(|_| fv((0..4).map(|_| rng.gen_range(0.0..9.0)).collect(), 1))
            .collect();
        let stats = fit_scaler(&train).unwrap();
        let scaled: Vec<FeatureVector> = train
            .iter()
            .map(|v| normalize(v, NormKind::Standard, Some(&stats)).unwrap())
            .collect();
        for d in 0..4 {
            let vals: Vec<f64> = scaled.iter().map(|v| v.values[d]).collect();
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / vals.len() as f64;
            assert!(mean.abs() < 1e-8);
            assert!((var - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn scaler_empty_input_errors() {
        assert!(fit_scaler(&[]).is_err());
        assert!(fit_scaler(&[fv(vec![1.0], 1)]).is_err());
    }

    #[test]
    fn pca_rank_one_line() {
        // points on y = 2x: one direction carries all variance
        let train: Vec<FeatureVector> = (0..6)
            .map(|i| {
                let x = i as f64 - 2.5;
                fv(vec![x, 2.0 * x], 1)
            })
            .collect();
        let model = fit_pca(&train, 2).unwrap();
        assert!(model.explained_variance[0] > 0.0);
        assert!(model.explained_variance[1].abs() < 1e-10);
        let frac = model.explained_variance[0]
            / (model.explained_variance[0] + model.explained_variance[1].max(0.0));
        assert_relative_eq!(frac, 1.0, epsilon = 1e-9);
        // first component is parallel to (1, 2)/sqrt(5)
        let c = &model.components[0];
        let expect = [1.0 / 5f64.sqrt(), 2.0 / 5f64.sqrt()];
        for (a, b) in c.iter().zip(expect.iter()) {
            assert_relative_eq!(a, b, epsilon = 1e-9);
        }
    }

    #[test]
    fn pca_full_dimension_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let train: Vec<FeatureVector> = (0..20)
            .map(|_| fv((0..5).map(|_| rng.gen_range(-1.0..1.0)).collect(), 1))
            .collect();
        let model = fit_pca(&train, 5).unwrap();
        for v in &train {
            let p = project_pca(&model, v).unwrap();
            let r = reconstruct_pca(&model, &p.values).unwrap();
            for (a, b) in r.iter().zip(v.values.iter()) {
                assert_relative_eq!(a, b, epsilon = 1e-8);
            }
        }
    }

    /// Cyclic Jacobi eigensolver used as an independent oracle.
    fn jacobi_eigen(mut a: Vec<Vec<f64>>) -> Vec<f64> {
        let n = a.len();
        for _sweep in 0..100 {
            let mut off = 0.0;
            for i in 0..n {
                for j in (i + 1)..n {
                    off += a[i][j] * a[i][j];
                }
            }
            if off < 1e-24 {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    if a[p][q].abs() < 1e-18 {
                        continue;
                    }
                    let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[k][p];
                        let akq = a[k][q];
                        a[k][p] = c * akp - s * akq;
                        a[k][q] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[p][k];
                        let aqk = a[q][k];
                        a[p][k] = c * apk - s * aqk;
                        a[q][k] = s * apk + c * aqk;
                    }
                }
            }
        }
        let mut eig: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
        eig.sort_by(|x, y| y.total_cmp(x));
        eig
    }

    #[test]
    fn pca_matches_jacobi_oracle_and_reconstruction_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(30);
        let n = 20;
        let dim = 6;
        let train: Vec<FeatureVector> = (0..n)
            .map(|_| fv((0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect(), 1))
            .collect();
        let model = fit_pca(&train, 3).unwrap();

        // oracle: population covariance eigendecomposed with Jacobi rotations
        let mean: Vec<f64> = (0..dim)
            .map(|d| train.iter().map(|v| v.values[d]).sum::<f64>() / n as f64)
            .collect();
        let mut cov = vec![vec![0f64; dim]; dim];
        for v in &train {
            for i in 0..dim {
                for j in 0..dim {
                    cov[i][j] += (v.values[i] - mean[i]) * (v.values[j] - mean[j]) / n as f64;
                }
            }
        }
        let oracle_eig = jacobi_eigen(cov);
        for (got, want) in model.explained_variance.iter().zip(oracle_eig.iter()) {
            assert_relative_eq!(got, want, epsilon = 1e-8);
        }

        // mean squared reconstruction error equals the discarded eigenvalue mass
        // (population covariance convention: divide by n)
        let mse: f64 = train
            .iter()
            .map(|v| {
                let p = project_pca(&model, v).unwrap();
                let r = reconstruct_pca(&model, &p.values).unwrap();
                r.iter()
                    .zip(v.values.iter())
                    .map(|(a, b)| (a - b).powi(2))
                    .sum::<f64>()
            })
            .sum::<f64>()
            / n as f64;
        let discarded: f64 = oracle_eig[3..].iter().sum();
        assert_relative_eq!(mse, discarded, epsilon = 1e-8);
    }

    #[test]
    fn pca_gram_route_matches_covariance_route() {
        // dim > n forces the Gram-matrix route; spot-check against a
        // same-data covariance fit done by padding with extra samples is not
        // possible, so check orthonormality + projection consistency instead
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let train: Vec<FeatureVector> = (0..8)
            .map(|_| fv((0..20).map(|_| rng.gen_range(-1.0..1.0)).collect(), 1))
            .collect();
        let model = fit_pca(&train, 4).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let dot: f64 = model.components[i]
                    .iter()
                    .zip(model.components[j].iter())
                    .map(|(a, b)| a * b)
                    .sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_relative_eq!(dot, expect, epsilon = 1e-8);
            }
        }
        // total projected variance matches the eigenvalues
        for c in 0..4 {
            let scores: Vec<f64> = train
                .iter()
                .map(|v| project_pca(&model, v).unwrap().values[c])
                .collect();
            let mean = scores.iter().sum::<f64>() / scores.len() as f64;
            let var = scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / scores.len() as f64;
            assert_relative_eq!(var, model.explained_variance[c], epsilon = 1e-8);
        }
    }

    #[test]
    fn pca_projection_basics() {
        let train: Vec<FeatureVector> = vec![
            fv(vec![1.0, 0.0], 1),
            fv(vec![-1.0, 0.0], 1),
            fv(vec![2.0, 0.0], 1),
            fv(vec![-2.0, 0.0], 1),
        ];
        let model = fit_pca(&train, 1).unwrap();
        // projecting the mean gives zero
        let p = project_pca(&model, &fv(model.mean.clone(), 1)).unwrap();
        assert!(p.values[0].abs() < 1e-12);
        assert_eq!(p.tag, EncodingTag::BovwPca);
        // a basis-aligned point projects to its coordinate
        let p = project_pca(&model, &fv(vec![1.5, 0.0], 1)).unwrap();
        assert_relative_eq!(p.values[0], 1.5, epsilon = 1e-9);
        // explicit dot-product oracle on a random vector
        let q = fv(vec![0.3, -0.7], 1);
        let p = project_pca(&model, &q).unwrap();
        let manual: f64 = model.components[0]
            .iter()
            .zip(q.values.iter().zip(model.mean.iter()))
            .map(|(c, (x, m))| c * (x - m))
            .sum();
        assert_relative_eq!(p.values[0], manual, epsilon = 1e-12);
    }

    #[test]
    fn pca_too_many_components_errors() {
        let train: Vec<FeatureVector> = vec![fv(vec![1.0, 2.0], 1), fv(vec![2.0, 1.0], 1)];
        // n-1 = 1, so 2 components must be rejected
        assert!(fit_pca(&train, 2).is_err());
        assert!(project_pca(
            &fit_pca(&train, 1).unwrap(),
            &fv(vec![1.0, 2.0, 3.0], 1)
        )
        .is_err());
    }

    #[test]
    fn explained_variance_is_sorted() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let train: Vec<FeatureVector> = (0..30)
            .map(|_| fv((0..6).map(|_| rng.gen_range(-3.0..3.0)).collect(), 1))
            .collect();
        let model = fit_pca(&train, 5).unwrap();
        for w in model.explained_variance.windows(2) {
            assert!(w[0] >= w[1] - 1e-12);
        }
    }

    proptest::proptest! {
        #[test]
        fn norm_invariants(values in proptest::collection::vec(0.0f64..50.0, 8)) {
            let v = fv(values, 2);
            let l2 = normalize(&v, NormKind::L2, None).unwrap();
            for chunk in l2.values.chunks(4) {
                let n: f64 = chunk.iter().map(|x| x * x).sum::<f64>().sqrt();
                proptest::prop_assert!(n.abs() < 1e-9 || (n - 1.0).abs() < 1e-9);
            }
            let sum = normalize(&v, NormKind::Sum, None).unwrap();
            for chunk in sum.values.chunks(4) {
                let s: f64 = chunk.iter().sum();
                proptest::prop_assert!(s.abs() < 1e-9 || (s - 1.0).abs() < 1e-9);
            }
        }
    }
}
