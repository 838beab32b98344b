//! Synthetic degradations: hole cutting for partial scans, Gaussian noise on
//! shape and texture, and a centroid-fan hole-filling baseline.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::mesh::{
    boundary_loops, keep_vertices, knn_among, remove_vertices, vertex_knn, MeshError, Point, RegionMask,
    TextureImage, TexturedMesh, Uv,
};

/// Parameters of the partial-scan generator.
#[derive(Debug, Clone, PartialEq)]
pub struct HoleSpec {
    pub holes: usize,
    /// Vertices removed per hole, as a fraction of the original vertex count.
    pub fraction: f64,
    pub seed: u64,
    pub mask: Option<RegionMask>,
}

impl Default for HoleSpec {
    fn default() -> Self {
        Self {
            holes: 40,
            fraction: 0.02,
            seed: 0,
            mask: None,
        }
    }
}

impl HoleSpec {
    pub fn validate(&self) -> Result<(), MeshError> {
        if !(self.fraction > 0.0 && self.fraction <= 1.0) {
            return Err(MeshError::InvalidParameter(format!(
                "hole fraction must be in (0, 1], got {}",
                self.fraction
            )));
        }
        Ok(())
    }

    /// Vertices per hole for a mesh of `vertex_count` vertices.
    pub fn hole_size(&self, vertex_count: usize) -> usize {
        (self.fraction * vertex_count as f64).round() as usize
    }
}

/// Removes the `k` nearest eligible vertices around `center` together with
/// every triangle touching them.
pub fn cut_hole(
    mesh: &TexturedMesh,
    center: usize,
    k: usize,
    mask: Option<&RegionMask>,
) -> Result<TexturedMesh, MeshError> {
    let doomed = vertex_knn(mesh, center, k, mask)?;
    remove_vertices(mesh, &doomed)
}

/// One cut made by [`generate_partial_traced`], in original vertex indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HoleRecord {
    pub center: usize,
    pub removed: Vec<usize>,
}

pub fn generate_partial(mesh: &TexturedMesh, spec: &HoleSpec) -> Result<TexturedMesh, MeshError> {
    Ok(generate_partial_traced(mesh, spec)?.0)
}

/// Cuts `spec.holes` holes in sequence and reports every cut.
///
/// The hole size is fixed from the original vertex count. Each center is
/// drawn uniformly among the eligible vertices still present, and each hole
/// removes the nearest still-present eligible vertices, so overlapping holes
/// never re-select removed vertices. Stops early once no eligible vertex is
/// left.
pub fn generate_partial_traced(
    mesh: &TexturedMesh,
    spec: &HoleSpec,
) -> Result<(TexturedMesh, Vec<HoleRecord>), MeshError> {
    spec.validate()?;
    if let Some(mask) = &spec.mask {
        mask.check(mesh.vertex_count())?;
    }
    let k = spec.hole_size(mesh.vertex_count());
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut alive = vec![true; mesh.vertex_count()];
    let mut eligible: Vec<usize> = (0..mesh.vertex_count())
        .filter(|&v| spec.mask.as_ref().is_none_or(|m| m.is_eligible(v)))
        .collect();
    let mut records = Vec::with_capacity(spec.holes);
    for _ in 0..spec.holes {
        if eligible.is_empty() || k == 0 {
            break;
        }
        let center = eligible[rng.random_range(0..eligible.len())];
        let removed = knn_among(mesh.vertices(), center, k, eligible.iter().copied());
        for &v in &removed {
            alive[v] = false;
        }
        eligible.retain(|&v| alive[v]);
        records.push(HoleRecord { center, removed });
    }
    Ok((keep_vertices(mesh, &alive), records))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseMode {
    /// Every vertex is displaced.
    Global,
    /// Only vertices within `radius` of one of `regions` randomly chosen
    /// vertices are displaced.
    Local { radius: f64, regions: usize },
}

fn normal(sigma: f64) -> Result<Normal<f64>, MeshError> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(MeshError::InvalidParameter(format!(
            "noise level must be non-negative, got {sigma}"
        )));
    }
    Normal::new(0.0, sigma).map_err(|e| MeshError::InvalidParameter(e.to_string()))
}

/// White Gaussian noise on vertex positions, i.i.d. per coordinate.
pub fn add_shape_noise(
    mesh: &TexturedMesh,
    sigma: f64,
    mode: NoiseMode,
    seed: u64,
) -> Result<TexturedMesh, MeshError> {
    let dist = normal(sigma)?;
    if sigma == 0.0 {
        return Ok(mesh.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let affected: Vec<bool> = match mode {
        NoiseMode::Global => vec![true; mesh.vertex_count()],
        NoiseMode::Local { radius, regions } => {
            if !(radius >= 0.0) {
                return Err(MeshError::InvalidParameter(format!("region radius must be non-negative, got {radius}")));
            }
            let mut affected = vec![false; mesh.vertex_count()];
            if mesh.vertex_count() > 0 {
                let centers: Vec<Point> = (0..regions)
                    .map(|_| mesh.vertices()[rng.random_range(0..mesh.vertex_count())])
                    .collect();
                let r2 = radius * radius;
                for (v, p) in mesh.vertices().iter().enumerate() {
                    affected[v] = centers.iter().any(|c| (p - c).norm_squared() <= r2);
                }
            }
            affected
        }
    };
    let vertices = mesh
        .vertices()
        .iter()
        .zip(&affected)
        .map(|(p, &hit)| {
            if hit {
                p + nalgebra::Vector3::new(dist.sample(&mut rng), dist.sample(&mut rng), dist.sample(&mut rng))
            } else {
                *p
            }
        })
        .collect();
    mesh.with_vertices(vertices)
}

/// White Gaussian noise on every texel channel, clamped to `[0, 1]`.
pub fn add_texture_noise(texture: &TextureImage, sigma: f64, seed: u64) -> Result<TextureImage, MeshError> {
    let dist = normal(sigma)?;
    if sigma == 0.0 {
        return Ok(texture.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pixels = texture
        .pixels()
        .iter()
        .map(|c| c.map(|v| (v + dist.sample(&mut rng)).clamp(0.0, 1.0)))
        .collect();
    TextureImage::new(texture.width(), texture.height(), pixels)
}

/// Applies [`add_texture_noise`] to a mesh's atlas; untextured meshes pass
/// through unchanged.
pub fn add_mesh_texture_noise(mesh: &TexturedMesh, sigma: f64, seed: u64) -> Result<TexturedMesh, MeshError> {
    match mesh.texture() {
        Some(texture) => mesh.with_texture(Some(Arc::new(add_texture_noise(texture, sigma, seed)?))),
        None => {
            normal(sigma)?;
            Ok(mesh.clone())
        }
    }
}

/// Closes every boundary loop with a fan around the loop centroid.
///
/// The centroid's position and UV are the means over the loop. Fan
/// triangles run against the boundary edge orientation so the patch matches
/// the surrounding surface. Existing vertices and triangles are untouched.
/// On open surfaces the outer rim is a loop too; see [`fill_holes_up_to`].
pub fn fill_holes_baseline(mesh: &TexturedMesh) -> Result<TexturedMesh, MeshError> {
    fill_holes_up_to(mesh, usize::MAX)
}

/// [`fill_holes_baseline`] restricted to loops of at most `max_loop_len`
/// edges.
pub fn fill_holes_up_to(mesh: &TexturedMesh, max_loop_len: usize) -> Result<TexturedMesh, MeshError> {
    let loops: Vec<_> = boundary_loops(mesh)?
        .into_iter()
        .filter(|l| l.len() <= max_loop_len)
        .collect();
    if loops.is_empty() {
        return Ok(mesh.clone());
    }
    let textured = mesh.has_uvs();
    let (mut vertices, mut triangles, mut uvs, texture) = mesh.clone().into_parts();
    for boundary in &loops {
        let n = boundary.len() as f64;
        let centroid = boundary
            .vertices
            .iter()
            .fold(nalgebra::Vector3::zeros(), |acc, &v| acc + vertices[v].coords)
            / n;
        let center = vertices.len();
        vertices.push(Point::from(centroid));
        let center_uv = if textured {
            boundary.corner_uvs.iter().fold(Uv::zeros(), |acc, uv| acc + uv) / n
        } else {
            Uv::zeros()
        };
        for i in 0..boundary.len() {
            let j = (i + 1) % boundary.len();
            let (a, b) = (boundary.vertices[i], boundary.vertices[j]);
            triangles.push([b, a, center]);
            if textured {
                uvs.push([boundary.corner_uvs[j], boundary.corner_uvs[i], center_uv]);
            }
        }
    }
    TexturedMesh::new(vertices, triangles, uvs, texture)
}
