//! Area-weighted uniform sampling of mesh surfaces.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::mesh::{MeshError, Point, Rgb, TexturedMesh};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceSample {
    pub position: Point,
    pub triangle: usize,
    pub barycentric: [f64; 3],
    /// `None` for untextured meshes.
    pub color: Option<Rgb>,
}

/// Cumulative triangle areas, ready for inverse-CDF triangle picks.
#[derive(Debug, Clone)]
pub struct AreaTable {
    cumulative: Vec<f64>,
}

impl AreaTable {
    pub fn new(mesh: &TexturedMesh) -> Self {
        let mut total = 0.0;
        let cumulative = (0..mesh.triangle_count())
            .map(|t| {
                total += mesh.triangle_area(t);
                total
            })
            .collect();
        Self { cumulative }
    }

    pub fn total(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }

    /// Triangle owning `u ∈ [0, 1)` of the total area. Zero-area triangles
    /// own an empty interval and are never returned.
    pub fn pick(&self, u: f64) -> usize {
        let x = u * self.total();
        let t = self.cumulative.partition_point(|&c| c <= x);
        if t < self.cumulative.len() {
            return t;
        }
        // x rounded onto the total: fall back to the last positive-area triangle.
        let total = self.total();
        self.cumulative.iter().position(|&c| c == total).unwrap()
    }
}

/// Random stream for sample `ordinal`, independent of evaluation order.
pub(crate) fn sample_rng(seed: u64, ordinal: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(ordinal);
    rng
}

/// Draws `n` points uniformly over the surface of `mesh`.
///
/// Triangles are picked with probability proportional to area; inside a
/// triangle the weights are `(1 - √r1, √r1 (1 - r2), √r1 r2)`. Sample `i`
/// uses its own random stream derived from `(seed, i)`, so the result does
/// not depend on thread count.
pub fn sample_surface(mesh: &TexturedMesh, n: usize, seed: u64) -> Result<Vec<SurfaceSample>, MeshError> {
    if n == 0 {
        return Ok(Vec::new());
    }
    let table = AreaTable::new(mesh);
    if !(table.total() > 0.0) {
        return Err(MeshError::ZeroArea);
    }
    Ok((0..n)
        .into_par_iter()
        .map(|i| sample_one(mesh, &table, seed, i as u64))
        .collect())
}

pub(crate) fn sample_one(mesh: &TexturedMesh, table: &AreaTable, seed: u64, ordinal: u64) -> SurfaceSample {
    let mut rng = sample_rng(seed, ordinal);
    let triangle = table.pick(rng.random::<f64>());
    let r1: f64 = rng.random();
    let r2: f64 = rng.random();
    let s = r1.sqrt();
    let barycentric = [1.0 - s, s * (1.0 - r2), s * r2];
    let [a, b, c] = mesh.triangle_positions(triangle);
    let position = Point::from(a.coords * barycentric[0] + b.coords * barycentric[1] + c.coords * barycentric[2]);
    SurfaceSample {
        position,
        triangle,
        barycentric,
        color: mesh.color_at(triangle, barycentric),
    }
}
