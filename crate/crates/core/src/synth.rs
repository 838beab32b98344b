//! Procedural meshes and textures for tests, demos and calibration runs.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::mesh::{Point, Rgb, TextureImage, TexturedMesh, Uv};

/// Axis-aligned unit cube with outward-facing triangles, untextured.
pub fn unit_cube() -> TexturedMesh {
    let vertices = (0..8)
        .map(|i| Point::new((i & 1) as f64, ((i >> 1) & 1) as f64, ((i >> 2) & 1) as f64))
        .collect();
    let triangles = vec![
        [0, 2, 3],
        [0, 3, 1],
        [4, 5, 7],
        [4, 7, 6],
        [0, 1, 5],
        [0, 5, 4],
        [2, 6, 7],
        [2, 7, 3],
        [0, 4, 6],
        [0, 6, 2],
        [1, 3, 7],
        [1, 7, 5],
    ];
    TexturedMesh::untextured(vertices, triangles).expect("cube is well formed")
}

/// `nx` by `ny` vertex grid in the z = 0 plane, normal +z, with UVs spanning
/// `[0, 1]²` and no texture. Vertex `(i, j)` has index `j * nx + i`.
pub fn planar_grid(nx: usize, ny: usize, spacing: f64) -> TexturedMesh {
    assert!(nx >= 2 && ny >= 2, "grid needs at least 2x2 vertices");
    let mut vertices = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            vertices.push(Point::new(i as f64 * spacing, j as f64 * spacing, 0.0));
        }
    }
    let uv = |i: usize, j: usize| Uv::new(i as f64 / (nx - 1) as f64, j as f64 / (ny - 1) as f64);
    let mut triangles = Vec::new();
    let mut uvs = Vec::new();
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            let a = j * nx + i;
            let b = a + 1;
            let c = a + nx;
            let d = c + 1;
            triangles.push([a, b, d]);
            uvs.push([uv(i, j), uv(i + 1, j), uv(i + 1, j + 1)]);
            triangles.push([a, d, c]);
            uvs.push([uv(i, j), uv(i + 1, j + 1), uv(i, j + 1)]);
        }
    }
    TexturedMesh::new(vertices, triangles, uvs, None).expect("grid is well formed")
}

/// Closed latitude/longitude sphere with `rings * segments` vertices and no
/// pole vertices; each polar ring is capped by a fan from its first vertex.
/// Carries [`pattern_texture`].
pub fn uv_sphere(rings: usize, segments: usize, radius: f64) -> TexturedMesh {
    uv_sphere_with_texture(rings, segments, radius, Arc::new(pattern_texture(64, 64, 0)))
}

pub fn uv_sphere_with_texture(
    rings: usize,
    segments: usize,
    radius: f64,
    texture: Arc<TextureImage>,
) -> TexturedMesh {
    assert!(rings >= 2 && segments >= 3, "sphere needs at least 2 rings of 3");
    let mut vertices = Vec::with_capacity(rings * segments);
    for i in 0..rings {
        let theta = PI * (i as f64 + 0.5) / rings as f64;
        for j in 0..segments {
            let phi = 2.0 * PI * j as f64 / segments as f64;
            vertices.push(Point::new(
                radius * theta.sin() * phi.cos(),
                radius * theta.sin() * phi.sin(),
                radius * theta.cos(),
            ));
        }
    }
    let index = |i: usize, j: usize| i * segments + j % segments;
    // The seam corner of the last column uses u = 1 rather than wrapping to 0.
    let uv = |i: usize, j: usize| {
        Uv::new(j as f64 / segments as f64, 1.0 - (i as f64 + 0.5) / rings as f64)
    };
    let mut triangles = Vec::new();
    let mut uvs = Vec::new();
    for i in 0..rings - 1 {
        for j in 0..segments {
            let (a, b, c, d) = (index(i, j), index(i, j + 1), index(i + 1, j), index(i + 1, j + 1));
            triangles.push([a, c, d]);
            uvs.push([uv(i, j), uv(i + 1, j), uv(i + 1, j + 1)]);
            triangles.push([a, d, b]);
            uvs.push([uv(i, j), uv(i + 1, j + 1), uv(i, j + 1)]);
        }
    }
    let last = rings - 1;
    for j in 1..segments - 1 {
        triangles.push([index(0, 0), index(0, j), index(0, j + 1)]);
        uvs.push([uv(0, 0), uv(0, j), uv(0, j + 1)]);
        triangles.push([index(last, 0), index(last, j + 1), index(last, j)]);
        uvs.push([uv(last, 0), uv(last, j + 1), uv(last, j)]);
    }
    TexturedMesh::new(vertices, triangles, uvs, Some(texture)).expect("sphere is well formed")
}

/// Smooth multi-frequency color pattern; `variant` shifts the phases so
/// different test subjects get different textures.
pub fn pattern_texture(width: usize, height: usize, variant: u64) -> TextureImage {
    let shift = variant as f64 * 0.37;
    let mut pixels = Vec::with_capacity(width * height);
    for y in 0..height {
        for x in 0..width {
            let u = (x as f64 + 0.5) / width as f64;
            let v = (y as f64 + 0.5) / height as f64;
            pixels.push(Rgb::new(
                0.5 + 0.4 * (2.0 * PI * (3.0 * u + shift)).sin(),
                0.5 + 0.4 * (2.0 * PI * (2.0 * v - shift)).cos(),
                0.1 + 0.8 * (0.5 * (u + v) + 0.25 * (2.0 * PI * (u - v + shift)).sin()).clamp(0.0, 1.0),
            ));
        }
    }
    TextureImage::new(width, height, pixels).expect("pattern channels stay in [0, 1]")
}

/// Triangle soup of `count` independent random triangles inside the unit
/// cube, untextured. A fraction of triangles share a common plane so that
/// coplanar and tie cases get exercised.
pub fn random_soup(count: usize, seed: u64) -> TexturedMesh {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut vertices = Vec::with_capacity(3 * count);
    let mut triangles = Vec::with_capacity(count);
    for t in 0..count {
        let coplanar = rng.random_bool(0.2);
        for _ in 0..3 {
            let z = if coplanar { 0.5 } else { rng.random::<f64>() };
            vertices.push(Point::new(rng.random(), rng.random(), z));
        }
        triangles.push([3 * t, 3 * t + 1, 3 * t + 2]);
    }
    TexturedMesh::untextured(vertices, triangles).expect("soup is well formed")
}

/// Signed enclosed volume; positive for closed outward-oriented meshes.
pub fn signed_volume(mesh: &TexturedMesh) -> f64 {
    (0..mesh.triangle_count())
        .map(|t| {
            let [a, b, c] = mesh.triangle_positions(t);
            a.coords.dot(&b.coords.cross(&c.coords)) / 6.0
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{boundary_loops, mesh_surface_area};

    #[test]
    fn sphere_is_closed_and_outward() {
        let s = uv_sphere(100, 100, 1.0);
        assert_eq!(s.vertex_count(), 10_000);
        assert!(boundary_loops(&s).unwrap().is_empty());
        let vol = signed_volume(&s);
        assert!((vol - 4.0 / 3.0 * PI).abs() < 0.01, "volume {vol}");
        assert!((mesh_surface_area(&s) - 4.0 * PI).abs() < 0.01);
    }

    #[test]
    fn cube_is_outward() {
        assert!((signed_volume(&unit_cube()) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn grid_counts() {
        let g = planar_grid(10, 10, 0.5);
        assert_eq!(g.vertex_count(), 100);
        assert_eq!(g.triangle_count(), 162);
        assert!((mesh_surface_area(&g) - 4.5 * 4.5).abs() < 1e-12);
    }
}
