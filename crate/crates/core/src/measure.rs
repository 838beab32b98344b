//! Directed surface-to-surface measures.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bvh::SpatialIndex;
use crate::mesh::{MeshError, TexturedMesh};
use crate::sampling::{sample_one, AreaTable};

/// Aggregate of one directed pass from a source surface onto a target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirectedMeasure {
    /// Mean of `d0 + d1` over all samples, hits and misses alike.
    pub mean_shape_distance: f64,
    /// Mean Euclidean RGB distance over all samples.
    pub mean_texture_distance: f64,
    pub hit_rate: f64,
    pub hits: usize,
    pub samples: usize,
}

/// Per-sample outcome of a directed pass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleOutcome {
    pub shape_distance: f64,
    pub texture_distance: f64,
    pub hit: bool,
}

/// Samples `n` points on `source` and matches each against `target`.
pub fn directed_measure(
    source: &TexturedMesh,
    target: &SpatialIndex,
    n: usize,
    seed: u64,
) -> Result<DirectedMeasure, MeshError> {
    let outcomes = directed_outcomes(source, target, n, seed)?;
    let shape: Vec<f64> = outcomes.iter().map(|o| o.shape_distance).collect();
    let texture: Vec<f64> = outcomes.iter().map(|o| o.texture_distance).collect();
    let hits = outcomes.iter().filter(|o| o.hit).count();
    let denom = n.max(1) as f64;
    Ok(DirectedMeasure {
        mean_shape_distance: pairwise_sum(&shape) / denom,
        mean_texture_distance: pairwise_sum(&texture) / denom,
        hit_rate: hits as f64 / denom,
        hits,
        samples: n,
    })
}

/// Per-sample distances and hit flags, in sample order.
pub fn directed_outcomes(
    source: &TexturedMesh,
    target: &SpatialIndex,
    n: usize,
    seed: u64,
) -> Result<Vec<SampleOutcome>, MeshError> {
    if target.is_empty() {
        return Err(MeshError::EmptyIndex);
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let table = AreaTable::new(source);
    if !(table.total() > 0.0) {
        return Err(MeshError::ZeroArea);
    }
    (0..n)
        .into_par_iter()
        .map(|i| {
            let sample = sample_one(source, &table, seed, i as u64);
            let corr = target.closest(&sample.position)?;
            let texture_distance = match (sample.color, corr.color) {
                (Some(a), Some(b)) => (a - b).norm(),
                _ => 0.0,
            };
            Ok(SampleOutcome {
                shape_distance: corr.distance,
                texture_distance,
                hit: corr.hit,
            })
        })
        .collect()
}

/// Fixed-shape pairwise summation; the result depends only on the input order.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if values.len() <= BLOCK {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}
