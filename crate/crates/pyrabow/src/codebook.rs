//! Visual-word codebooks: k-means training and nearest-centroid quantization.

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::index::sample;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::Descriptor;
use crate::par;

/// Centroid seeding strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KMeansInit {
    /// D^2-weighted seeding.
    KmeansPlusPlus,
    /// k distinct points chosen uniformly.
    RandomPoints,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansConfig {
    pub k: usize,
    pub max_iter: usize,
    /// Stop when the relative objective improvement drops below this.
    pub tol: f64,
    pub seed: u64,
    pub init: KMeansInit,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        KMeansConfig {
            k: 512,
            max_iter: 100,
            tol: 1e-4,
            seed: 0,
            init: KMeansInit::KmeansPlusPlus,
        }
    }
}

impl KMeansConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k < 1 {
            return Err(Error::invalid("k must be >= 1"));
        }
        if self.max_iter < 1 {
            return Err(Error::invalid("max_iter must be >= 1"));
        }
        if self.tol < 0.0 {
            return Err(Error::invalid("tol must be >= 0"));
        }
        Ok(())
    }
}

/// k centroids in descriptor space plus the final clustering objective
/// (within-cluster sum of squared distances).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Codebook {
    pub k: usize,
    pub dim: usize,
    /// Row-major `k x dim`.
    pub centroids: Vec<f64>,
    pub objective: f64,
}

impl Codebook {
    #[inline]
    pub fn centroid(&self, i: usize) -> &[f64] {
        &self.centroids[i * self.dim..(i + 1) * self.dim]
    }
}

#[inline]
fn sq_dist(point: &[f32], centroid: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (a, b) in point.iter().zip(centroid.iter()) {
        let d = *a as f64 - *b;
        acc += d * d;
    }
    acc
}

fn nearest(centroids: &[f64], dim: usize, k: usize, point: &[f32]) -> (usize, f64) {
    let mut best = 0usize;
    let mut best_d = f64::INFINITY;
    for c in 0..k {
        let d = sq_dist(point, &centroids[c * dim..(c + 1) * dim]);
        if d < best_d {
            best_d = d;
            best = c;
        }
    }
    (best, best_d)
}

fn seed_centroids(points: &[Descriptor], cfg: &KMeansConfig, dim: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = points.len();
    let mut centroids = vec![0f64; cfg.k * dim];
    match cfg.init {
        KMeansInit::RandomPoints => {
            let mut chosen: Vec<usize> = sample(&mut rng, n, cfg.k).into_vec();
            chosen.sort_unstable();
            for (c, &i) in chosen.iter().enumerate() {
                for d in 0..dim {
                    centroids[c * dim + d] = points[i].values[d] as f64;
                }
            }
        }
        KMeansInit::KmeansPlusPlus => {
            let first = rng.gen_range(0..n);
            for d in 0..dim {
                centroids[d] = points[first].values[d] as f64;
            }
            let mut dist: Vec<f64> = points
                .iter()
                .map(|p| sq_dist(&p.values, &centroids[0..dim]))
                .collect();
            for c in 1..cfg.k {
                let total: f64 = dist.iter().sum();
                let idx = if total > 0.0 {
                    WeightedIndex::new(dist.iter().cloned())
                        .expect("non-negative weights")
                        .sample(&mut rng)
                } else {
                    // all remaining points coincide with chosen centroids
                    rng.gen_range(0..n)
                };
                let row = &mut centroids[c * dim..(c + 1) * dim];
                for d in 0..dim {
                    row[d] = points[idx].values[d] as f64;
                }
                for (i, p) in points.iter().enumerate() {
                    let d = sq_dist(&p.values, &centroids[c * dim..(c + 1) * dim]);
                    if d < dist[i] {
                        dist[i] = d;
                    }
                }
            }
        }
    }
    centroids
}

/// Lloyd's algorithm from seeded centroids. Empty clusters are re-seeded with
/// the point currently farthest from its centroid. The objective is asserted
/// non-increasing on every iteration.
pub fn train_codebook(descriptors: &[Descriptor], cfg: &KMeansConfig) -> Result<Codebook> {
    cfg.validate()?;
    if descriptors.is_empty() {
        return Err(Error::invalid("cannot train a codebook on zero descriptors"));
    }
    if descriptors.len() < cfg.k {
        return Err(Error::invalid(format!(
            "k = {} exceeds the {} available descriptors",
            cfg.k,
            descriptors.len()
        )));
    }
    let dim = crate::features::DESCRIPTOR_DIM;
    let k = cfg.k;
    let mut centroids = seed_centroids(descriptors, cfg, dim);
    let mut assignment = vec![0usize; descriptors.len()];
    let mut prev_objective = f64::INFINITY;
    let mut objective = f64::INFINITY;

    for _iter in 0..cfg.max_iter {
        // assignment step (parallel, order-stable)
        let assigned: Vec<(usize, f64)> =
            par::map_ordered(descriptors, |p| nearest(&centroids, dim, k, &p.values));
        objective = assigned.iter().map(|(_, d)| d).sum();
        for (slot, (c, _)) in assignment.iter_mut().zip(assigned.iter()) {
            *slot = *c;
        }
        assert!(
            objective <= prev_objective + 1e-9 * prev_objective.abs().max(1.0),
            "k-means objective increased: {prev_objective} -> {objective}"
        );
        let converged = if prev_objective.is_finite() {
            if prev_objective == 0.0 {
                true
            } else {
                (prev_objective - objective) / prev_objective < cfg.tol
            }
        } else {
            false
        };
        if converged {
            break;
        }
        prev_objective = objective;

        // update step: means accumulated in point-index order
        let mut sums = vec![0f64; k * dim];
        let mut counts = vec![0usize; k];
        for (p, &c) in descriptors.iter().zip(assignment.iter()) {
            counts[c] += 1;
            let row = &mut sums[c * dim..(c + 1) * dim];
            for (s, v) in row.iter_mut().zip(p.values.iter()) {
                *s += *v as f64;
            }
        }
        // re-seed empty clusters before computing means; only steal from
        // clusters that keep at least one member
        let mut point_dist: Vec<f64> = assigned.iter().map(|(_, d)| *d).collect();
        for c in 0..k {
            if counts[c] > 0 {
                continue;
            }
            let (far_idx, _) = point_dist
                .iter()
                .enumerate()
                .filter(|(i, _)| counts[assignment[*i]] >= 2)
                .max_by(|a, b| a.1.partial_cmp(b.1).expect("finite distances"))
                .expect("some cluster has at least two members");
            let old = assignment[far_idx];
            counts[old] -= 1;
            let row = &mut sums[old * dim..(old + 1) * dim];
            for (s, v) in row.iter_mut().zip(descriptors[far_idx].values.iter()) {
                *s -= *v as f64;
            }
            assignment[far_idx] = c;
            counts[c] = 1;
            let row = &mut sums[c * dim..(c + 1) * dim];
            for (s, v) in row.iter_mut().zip(descriptors[far_idx].values.iter()) {
                *s = *v as f64;
            }
            point_dist[far_idx] = 0.0;
        }
        for c in 0..k {
            let row = &mut centroids[c * dim..(c + 1) * dim];
            for d in 0..dim {
                row[d] = sums[c * dim + d] / counts[c] as f64;
            }
        }
    }

    Ok(Codebook {
        k,
        dim,
        centroids,
        objective,
    })
}

/// Index of the nearest centroid; ties break to the lowest index.
pub fn assign(cb: &Codebook, point: &[f32]) -> Result<usize> {
    if point.len() != cb.dim {
        return Err(Error::DimensionMismatch {
            expected: cb.dim,
            got: point.len(),
        });
    }
    Ok(nearest(&cb.centroids, cb.dim, cb.k, point).0)
}

/// Quantize every descriptor, preserving order.
pub fn quantize_image(cb: &Codebook, descs: &[Descriptor]) -> Result<Vec<usize>> {
    descs.iter().map(|d| assign(cb, &d.values)).collect()
}

/// Seeded uniform subsample without replacement, at most `budget` items,
/// returned in ascending source order.
pub fn subsample_descriptors(pool: &[Descriptor], budget: usize, seed: u64) -> Vec<Descriptor> {
    if pool.len() <= budget {
        return pool.to_vec();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen: Vec<usize> = sample(&mut rng, pool.len(), budget).into_vec();
    chosen.sort_unstable();
    chosen.into_iter().map(|i| pool[i].clone()).collect()
}
