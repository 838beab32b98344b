//! Textured triangle meshes and the elementary queries every other module
//! builds on.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use nalgebra::{Point3, Vector2, Vector3};
use thiserror::Error;

pub type Point = Point3<f64>;
pub type Uv = Vector2<f64>;
/// Linear RGB with every channel in `[0, 1]`.
pub type Rgb = Vector3<f64>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("triangle {triangle} references vertex {index} but the mesh has {vertex_count} vertices")]
    IndexOutOfRange {
        triangle: usize,
        index: usize,
        vertex_count: usize,
    },
    #[error("triangle {0} repeats a vertex index")]
    RepeatedIndex(usize),
    #[error("{uvs} UV triples supplied for {triangles} triangles")]
    UvCountMismatch { triangles: usize, uvs: usize },
    #[error("vertex index {index} is out of range ({vertex_count} vertices)")]
    InvalidVertex { index: usize, vertex_count: usize },
    #[error("vertex {0} is not eligible under the region mask")]
    IneligibleCenter(usize),
    #[error("region mask has {mask} entries but the mesh has {vertices} vertices")]
    MaskLength { mask: usize, vertices: usize },
    #[error("edge ({0}, {1}) has a non-manifold boundary configuration")]
    NonManifold(usize, usize),
    #[error("invalid texture: {0}")]
    InvalidTexture(String),
    #[error("mesh has zero surface area")]
    ZeroArea,
    #[error("spatial index is empty")]
    EmptyIndex,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// An RGB texture atlas. Row 0 is the top row of the image; texture
/// coordinate `v = 0` addresses the bottom row.
#[derive(Debug, Clone, PartialEq)]
pub struct TextureImage {
    width: usize,
    height: usize,
    pixels: Vec<Rgb>,
}

impl TextureImage {
    pub fn new(width: usize, height: usize, pixels: Vec<Rgb>) -> Result<Self, MeshError> {
        if width == 0 || height == 0 {
            return Err(MeshError::InvalidTexture(format!(
                "dimensions must be positive, got {width}x{height}"
            )));
        }
        if pixels.len() != width * height {
            return Err(MeshError::InvalidTexture(format!(
                "{} pixels supplied for a {width}x{height} image",
                pixels.len()
            )));
        }
        if let Some(bad) = pixels
            .iter()
            .find(|c| c.iter().any(|v| !(0.0..=1.0).contains(v)))
        {
            return Err(MeshError::InvalidTexture(format!(
                "channel value outside [0, 1]: {bad:?}"
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, color: Rgb) -> Result<Self, MeshError> {
        Self::new(width, height, vec![color; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[Rgb] {
        &self.pixels
    }

    /// Texel at column `x`, row `y` (row 0 at the top).
    pub fn texel(&self, x: usize, y: usize) -> Rgb {
        self.pixels[y * self.width + x]
    }

    /// Bilinear lookup with clamp-to-border addressing.
    pub fn lookup(&self, uv: Uv) -> Rgb {
        let u = uv.x.clamp(0.0, 1.0);
        let v = uv.y.clamp(0.0, 1.0);
        let (x0, x1, tx) = texel_span(u * self.width as f64 - 0.5, self.width);
        let (y0, y1, ty) = texel_span((1.0 - v) * self.height as f64 - 0.5, self.height);
        let top = lerp(self.texel(x0, y0), self.texel(x1, y0), tx);
        let bottom = lerp(self.texel(x0, y1), self.texel(x1, y1), tx);
        lerp(top, bottom, ty)
    }
}

/// Splits a continuous texel coordinate into the two neighbouring texels and
/// the blend weight of the second one.
fn texel_span(coord: f64, size: usize) -> (usize, usize, f64) {
    let max = (size - 1) as f64;
    let mut c = coord.clamp(0.0, max);
    // Snap rounding noise so texel centers reproduce texels exactly.
    let nearest = c.round();
    if (c - nearest).abs() < 1e-9 {
        c = nearest;
    }
    let lo = (c.floor() as usize).min(size - 1);
    let hi = (lo + 1).min(size - 1);
    (lo, hi, c - lo as f64)
}

fn lerp(a: Rgb, b: Rgb, t: f64) -> Rgb {
    a + (b - a) * t
}

/// Convenience free function mirroring [`TextureImage::lookup`].
pub fn texture_lookup(texture: &TextureImage, uv: Uv) -> Rgb {
    texture.lookup(uv)
}

/// Per-vertex eligibility for hole cutting and local perturbation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegionMask(Vec<bool>);

impl RegionMask {
    pub fn new(eligible: Vec<bool>) -> Self {
        Self(eligible)
    }

    pub fn all(len: usize) -> Self {
        Self(vec![true; len])
    }

    /// Builds a mask from a list of eligible vertex indices.
    pub fn from_indices(len: usize, indices: &[usize]) -> Result<Self, MeshError> {
        let mut mask = vec![false; len];
        for &i in indices {
            if i >= len {
                return Err(MeshError::InvalidVertex {
                    index: i,
                    vertex_count: len,
                });
            }
            mask[i] = true;
        }
        Ok(Self(mask))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_eligible(&self, vertex: usize) -> bool {
        self.0.get(vertex).copied().unwrap_or(false)
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.0
    }

    pub(crate) fn check(&self, vertex_count: usize) -> Result<(), MeshError> {
        if self.0.len() != vertex_count {
            return Err(MeshError::MaskLength {
                mask: self.0.len(),
                vertices: vertex_count,
            });
        }
        Ok(())
    }
}

/// Indexed triangle mesh with per-corner UVs and an optional texture atlas.
///
/// Immutable after construction; all editing operations return new meshes.
/// `corner_uvs` is either empty or holds one UV triple per triangle.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TexturedMesh {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    corner_uvs: Vec<[Uv; 3]>,
    texture: Option<Arc<TextureImage>>,
}

impl TexturedMesh {
    pub fn new(
        vertices: Vec<Point>,
        triangles: Vec<[usize; 3]>,
        corner_uvs: Vec<[Uv; 3]>,
        texture: Option<Arc<TextureImage>>,
    ) -> Result<Self, MeshError> {
        for (t, tri) in triangles.iter().enumerate() {
            for &index in tri {
                if index >= vertices.len() {
                    return Err(MeshError::IndexOutOfRange {
                        triangle: t,
                        index,
                        vertex_count: vertices.len(),
                    });
                }
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(MeshError::RepeatedIndex(t));
            }
        }
        let uvs_ok = if texture.is_some() {
            corner_uvs.len() == triangles.len()
        } else {
            corner_uvs.is_empty() || corner_uvs.len() == triangles.len()
        };
        if !uvs_ok {
            return Err(MeshError::UvCountMismatch {
                triangles: triangles.len(),
                uvs: corner_uvs.len(),
            });
        }
        Ok(Self {
            vertices,
            triangles,
            corner_uvs,
            texture,
        })
    }

    /// Geometry-only mesh.
    pub fn untextured(vertices: Vec<Point>, triangles: Vec<[usize; 3]>) -> Result<Self, MeshError> {
        Self::new(vertices, triangles, Vec::new(), None)
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn corner_uvs(&self) -> &[[Uv; 3]] {
        &self.corner_uvs
    }

    pub fn texture(&self) -> Option<&Arc<TextureImage>> {
        self.texture.as_ref()
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn has_uvs(&self) -> bool {
        !self.corner_uvs.is_empty()
    }

    /// True when colors can be evaluated on the surface.
    pub fn is_textured(&self) -> bool {
        self.texture.is_some() && self.has_uvs()
    }

    pub fn triangle_positions(&self, t: usize) -> [Point; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_positions(t);
        triangle_area(&a, &b, &c)
    }

    /// Color at barycentric coordinates inside triangle `t`, if textured.
    pub fn color_at(&self, t: usize, bary: [f64; 3]) -> Option<Rgb> {
        let texture = self.texture.as_ref()?;
        let uvs = self.corner_uvs.get(t)?;
        let uv = uvs[0] * bary[0] + uvs[1] * bary[1] + uvs[2] * bary[2];
        Some(texture.lookup(uv))
    }

    /// Replaces vertex positions, keeping connectivity, UVs and texture.
    pub fn with_vertices(&self, vertices: Vec<Point>) -> Result<Self, MeshError> {
        if vertices.len() != self.vertices.len() {
            return Err(MeshError::InvalidParameter(format!(
                "expected {} vertices, got {}",
                self.vertices.len(),
                vertices.len()
            )));
        }
        Ok(Self {
            vertices,
            ..self.clone()
        })
    }

    pub fn with_texture(&self, texture: Option<Arc<TextureImage>>) -> Result<Self, MeshError> {
        Self::new(
            self.vertices.clone(),
            self.triangles.clone(),
            self.corner_uvs.clone(),
            texture,
        )
    }

    pub(crate) fn into_parts(self) -> (Vec<Point>, Vec<[usize; 3]>, Vec<[Uv; 3]>, Option<Arc<TextureImage>>) {
        (self.vertices, self.triangles, self.corner_uvs, self.texture)
    }

    pub(crate) fn check_vertex(&self, index: usize) -> Result<(), MeshError> {
        if index >= self.vertices.len() {
            return Err(MeshError::InvalidVertex {
                index,
                vertex_count: self.vertices.len(),
            });
        }
        Ok(())
    }
}

/// Half the magnitude of the edge cross product.
pub fn triangle_area(p0: &Point, p1: &Point, p2: &Point) -> f64 {
    0.5 * (p1 - p0).cross(&(p2 - p0)).norm()
}

pub fn mesh_surface_area(mesh: &TexturedMesh) -> f64 {
    (0..mesh.triangle_count()).map(|t| mesh.triangle_area(t)).sum()
}

/// The `k` eligible vertices nearest to `center`, nearest first.
///
/// The center itself is always first. Ties are broken by lower vertex index.
pub fn vertex_knn(
    mesh: &TexturedMesh,
    center: usize,
    k: usize,
    mask: Option<&RegionMask>,
) -> Result<Vec<usize>, MeshError> {
    mesh.check_vertex(center)?;
    if let Some(mask) = mask {
        mask.check(mesh.vertex_count())?;
        if !mask.is_eligible(center) {
            return Err(MeshError::IneligibleCenter(center));
        }
    }
    let candidates = (0..mesh.vertex_count()).filter(|&v| mask.is_none_or(|m| m.is_eligible(v)));
    Ok(knn_among(mesh.vertices(), center, k, candidates))
}

/// kNN over an arbitrary candidate set; `center` is assumed to be a candidate.
pub(crate) fn knn_among(
    positions: &[Point],
    center: usize,
    k: usize,
    candidates: impl Iterator<Item = usize>,
) -> Vec<usize> {
    if k == 0 {
        return Vec::new();
    }
    let c = positions[center];
    let mut others: Vec<(f64, usize)> = candidates
        .filter(|&v| v != center)
        .map(|v| ((positions[v] - c).norm_squared(), v))
        .collect();
    let by_key = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    let wanted = (k - 1).min(others.len());
    if wanted < others.len() && wanted > 0 {
        others.select_nth_unstable_by(wanted - 1, by_key);
    }
    others.truncate(wanted);
    others.sort_unstable_by(by_key);
    std::iter::once(center)
        .chain(others.into_iter().map(|(_, v)| v))
        .collect()
}

/// Drops `doomed` vertices and every triangle touching one of them.
pub fn remove_vertices(mesh: &TexturedMesh, doomed: &[usize]) -> Result<TexturedMesh, MeshError> {
    let mut alive = vec![true; mesh.vertex_count()];
    for &v in doomed {
        mesh.check_vertex(v)?;
        alive[v] = false;
    }
    Ok(keep_vertices(mesh, &alive))
}

/// Keeps exactly the vertices flagged alive, re-indexing in original order.
pub(crate) fn keep_vertices(mesh: &TexturedMesh, alive: &[bool]) -> TexturedMesh {
    let mut remap = vec![usize::MAX; mesh.vertex_count()];
    let mut vertices = Vec::new();
    for (v, p) in mesh.vertices().iter().enumerate() {
        if alive[v] {
            remap[v] = vertices.len();
            vertices.push(*p);
        }
    }
    let mut triangles = Vec::new();
    let mut corner_uvs = Vec::new();
    for (t, tri) in mesh.triangles().iter().enumerate() {
        if tri.iter().all(|&v| alive[v]) {
            triangles.push(tri.map(|v| remap[v]));
            if mesh.has_uvs() {
                corner_uvs.push(mesh.corner_uvs()[t]);
            }
        }
    }
    TexturedMesh {
        vertices,
        triangles,
        corner_uvs,
        texture: mesh.texture.clone(),
    }
}

/// A closed cycle of boundary edges. `vertices[i] -> vertices[i + 1]` (wrapping)
/// follows the orientation of the triangle owning each edge; `corner_uvs[i]`
/// is the UV of `vertices[i]` in that triangle, when the mesh has UVs.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryLoop {
    pub vertices: Vec<usize>,
    pub corner_uvs: Vec<Uv>,
}

impl BoundaryLoop {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }
}

/// Every edge used by exactly one triangle, as directed half-edges
/// `(from, to, (triangle, corner of from))`.
fn boundary_half_edges(mesh: &TexturedMesh) -> Result<Vec<(usize, usize, (usize, usize))>, MeshError> {
    let mut incidence: HashMap<(usize, usize), (u32, usize, usize, usize, usize)> = HashMap::new();
    for (t, tri) in mesh.triangles().iter().enumerate() {
        for corner in 0..3 {
            let a = tri[corner];
            let b = tri[(corner + 1) % 3];
            let key = (a.min(b), a.max(b));
            let entry = incidence.entry(key).or_insert((0, a, b, t, corner));
            entry.0 += 1;
        }
    }
    let mut edges = Vec::new();
    for (&(lo, hi), &(count, a, b, t, corner)) in &incidence {
        if count > 2 {
            return Err(MeshError::NonManifold(lo, hi));
        }
        if count == 1 {
            edges.push((a, b, (t, corner)));
        }
    }
    edges.sort_unstable();
    Ok(edges)
}

/// Boundary loops of the mesh, in deterministic order.
///
/// Every loop is a simple cycle: a vertex where several holes touch appears
/// once in each of the loops meeting there.
pub fn boundary_loops(mesh: &TexturedMesh) -> Result<Vec<BoundaryLoop>, MeshError> {
    let edges = boundary_half_edges(mesh)?;
    let mut outgoing: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    let mut in_degree: HashMap<usize, usize> = HashMap::new();
    for (i, &(a, b, _)) in edges.iter().enumerate() {
        outgoing.entry(a).or_default().push(i);
        *in_degree.entry(b).or_default() += 1;
    }
    for (&v, out) in &outgoing {
        if in_degree.get(&v).copied().unwrap_or(0) != out.len() {
            let (a, b, _) = edges[out[0]];
            return Err(MeshError::NonManifold(a, b));
        }
    }
    if in_degree.keys().any(|v| !outgoing.contains_key(v)) {
        let v = *in_degree.keys().find(|v| !outgoing.contains_key(v)).unwrap();
        return Err(MeshError::NonManifold(v, v));
    }

    let make_loop = |cycle: &[usize]| {
        let vertices = cycle.iter().map(|&e| edges[e].0).collect();
        let corner_uvs = if mesh.has_uvs() {
            cycle
                .iter()
                .map(|&e| {
                    let (t, corner) = edges[e].2;
                    mesh.corner_uvs()[t][corner]
                })
                .collect()
        } else {
            Vec::new()
        };
        BoundaryLoop { vertices, corner_uvs }
    };

    // Walk unused half-edges, splitting off a simple cycle whenever the walk
    // returns to a vertex already on the current path.
    let mut used = vec![false; edges.len()];
    let mut loops = Vec::new();
    for start in 0..edges.len() {
        if used[start] {
            continue;
        }
        let mut path: Vec<usize> = Vec::new();
        let mut on_path: HashMap<usize, usize> = HashMap::new();
        let mut current = start;
        loop {
            used[current] = true;
            let (a, b, _) = edges[current];
            on_path.insert(a, path.len());
            path.push(current);
            if let Some(&pos) = on_path.get(&b) {
                let cycle: Vec<usize> = path.drain(pos..).collect();
                for &e in &cycle {
                    on_path.remove(&edges[e].0);
                }
                loops.push(make_loop(&cycle));
            }
            match outgoing[&b].iter().copied().find(|&e| !used[e]) {
                Some(e) => current = e,
                None if path.is_empty() => break,
                None => return Err(MeshError::NonManifold(a, b)),
            }
        }
    }
    Ok(loops)
}

/// Number of undirected edges used by exactly one triangle.
pub fn boundary_edge_count(mesh: &TexturedMesh) -> Result<usize, MeshError> {
    Ok(boundary_half_edges(mesh)?.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} != {b} (tol {tol})");
    }

    fn p(x: f64, y: f64, z: f64) -> Point {
        Point::new(x, y, z)
    }

    #[test]
    fn triangle_area_examples() {
        assert_eq!(triangle_area(&p(0., 0., 0.), &p(1., 0., 0.), &p(0., 1., 0.)), 0.5);
        assert_eq!(triangle_area(&p(0., 0., 0.), &p(1., 0., 0.), &p(2., 0., 0.)), 0.0);
        let h = 3f64.sqrt();
        assert_close(triangle_area(&p(0., 0., 0.), &p(2., 0., 0.), &p(1., h, 0.)), 3f64.sqrt(), 1e-12);
    }

    #[test]
    fn surface_area_examples() {
        let tri = TexturedMesh::untextured(vec![p(0., 0., 0.), p(1., 0., 0.), p(0., 1., 0.)], vec![[0, 1, 2]]).unwrap();
        assert_eq!(mesh_surface_area(&tri), 0.5);
        assert_eq!(mesh_surface_area(&TexturedMesh::empty()), 0.0);
        assert_close(mesh_surface_area(&synth::unit_cube()), 6.0, 1e-12);
    }

    #[test]
    fn construction_rejects_bad_indices() {
        let verts = vec![p(0., 0., 0.), p(1., 0., 0.), p(0., 1., 0.)];
        assert_eq!(
            TexturedMesh::untextured(verts.clone(), vec![[0, 1, 3]]),
            Err(MeshError::IndexOutOfRange { triangle: 0, index: 3, vertex_count: 3 })
        );
        assert_eq!(TexturedMesh::untextured(verts.clone(), vec![[0, 1, 1]]), Err(MeshError::RepeatedIndex(0)));
        let tex = Arc::new(TextureImage::filled(1, 1, Rgb::new(1., 1., 1.)).unwrap());
        assert!(matches!(
            TexturedMesh::new(verts, vec![[0, 1, 2]], vec![], Some(tex)),
            Err(MeshError::UvCountMismatch { .. })
        ));
    }

    #[test]
    fn texture_rejects_out_of_range_channels() {
        assert!(TextureImage::new(1, 1, vec![Rgb::new(1.5, 0., 0.)]).is_err());
        assert!(TextureImage::new(0, 1, vec![]).is_err());
    }

    #[test]
    fn knn_examples() {
        let grid = synth::planar_grid(10, 10, 1.0);
        assert_eq!(vertex_knn(&grid, 37, 1, None).unwrap(), vec![37]);
        let mut all = vertex_knn(&grid, 0, 100, None).unwrap();
        all.sort_unstable();
        assert_eq!(all, (0..100).collect::<Vec<_>>());
        // Corner (0,0) with its two axis neighbours (1,0) and (0,1).
        let mut near = vertex_knn(&grid, 0, 3, None).unwrap();
        near.sort_unstable();
        assert_eq!(near, vec![0, 1, 10]);
    }

    #[test]
    fn knn_respects_mask_and_errors() {
        let grid = synth::planar_grid(4, 4, 1.0);
        let mask = RegionMask::from_indices(16, &[0, 5, 10, 15]).unwrap();
        assert_eq!(vertex_knn(&grid, 0, 10, Some(&mask)).unwrap(), vec![0, 5, 10, 15]);
        assert_eq!(vertex_knn(&grid, 1, 2, Some(&mask)), Err(MeshError::IneligibleCenter(1)));
        assert!(matches!(vertex_knn(&grid, 99, 2, None), Err(MeshError::InvalidVertex { .. })));
    }

    #[test]
    fn remove_vertices_examples() {
        let grid = synth::planar_grid(3, 3, 1.0);
        assert_eq!(remove_vertices(&grid, &[]).unwrap(), grid);
        let all: Vec<usize> = (0..9).collect();
        let gone = remove_vertices(&grid, &all).unwrap();
        assert_eq!(gone.vertex_count(), 0);
        assert_eq!(gone.triangle_count(), 0);

        let tri = TexturedMesh::untextured(vec![p(0., 0., 0.), p(1., 0., 0.), p(0., 1., 0.)], vec![[0, 1, 2]]).unwrap();
        let out = remove_vertices(&tri, &[1]).unwrap();
        assert_eq!(out.vertex_count(), 2);
        assert_eq!(out.triangle_count(), 0);
        assert_eq!(out.vertices(), &[p(0., 0., 0.), p(0., 1., 0.)]);
        assert!(remove_vertices(&tri, &[3]).is_err());
    }

    #[test]
    fn texture_lookup_examples() {
        let c = Rgb::new(0.3, 0.6, 0.9);
        let one = TextureImage::filled(1, 1, c).unwrap();
        for uv in [Uv::new(0.1, 0.7), Uv::new(0.0, 1.0), Uv::new(0.5, 0.5)] {
            assert_eq!(one.lookup(uv), c);
        }

        let c0 = Rgb::new(0.0, 0.2, 1.0);
        let c1 = Rgb::new(1.0, 0.4, 0.0);
        let two = TextureImage::new(2, 1, vec![c0, c1]).unwrap();
        // Texel centers sit at u = 0.25 and u = 0.75.
        let mid = two.lookup(Uv::new(0.5, 0.5));
        assert!((mid - (c0 + c1) / 2.0).norm() < 1e-15);
        assert_eq!(two.lookup(Uv::new(-0.5, 0.5)), two.lookup(Uv::new(0.0, 0.5)));
        assert_eq!(two.lookup(Uv::new(0.25, 0.3)), c0);
    }

    #[test]
    fn v_zero_is_bottom_row() {
        let top = Rgb::new(1.0, 0.0, 0.0);
        let bottom = Rgb::new(0.0, 0.0, 1.0);
        let tex = TextureImage::new(1, 2, vec![top, bottom]).unwrap();
        assert_eq!(tex.lookup(Uv::new(0.5, 0.0)), bottom);
        assert_eq!(tex.lookup(Uv::new(0.5, 1.0)), top);
    }

    #[test]
    fn texel_centers_are_exact() {
        let pixels: Vec<Rgb> = (0..21)
            .map(|i| Rgb::new(i as f64 / 21.0, 1.0 - i as f64 / 21.0, (i % 5) as f64 / 5.0))
            .collect();
        let tex = TextureImage::new(7, 3, pixels).unwrap();
        for y in 0..3 {
            for x in 0..7 {
                let uv = Uv::new((x as f64 + 0.5) / 7.0, 1.0 - (y as f64 + 0.5) / 3.0);
                assert_eq!(tex.lookup(uv), tex.texel(x, y), "texel ({x}, {y})");
            }
        }
    }

    #[test]
    fn boundary_loop_examples() {
        assert!(boundary_loops(&synth::unit_cube()).unwrap().is_empty());
        assert!(boundary_loops(&synth::uv_sphere(12, 16, 1.0)).unwrap().is_empty());

        let tri = TexturedMesh::untextured(vec![p(0., 0., 0.), p(1., 0., 0.), p(0., 1., 0.)], vec![[0, 1, 2]]).unwrap();
        let loops = boundary_loops(&tri).unwrap();
        assert_eq!(loops.len(), 1);
        assert_eq!(loops[0].vertices, vec![0, 1, 2]);
    }

    #[test]
    fn removing_interior_grid_vertex_leaves_ring_of_neighbours() {
        let grid = synth::planar_grid(5, 5, 1.0);
        let center = 12;
        // Enumerate the vertices sharing a triangle with the removed one.
        let mut neighbours: Vec<usize> = grid
            .triangles()
            .iter()
            .filter(|t| t.contains(&center))
            .flat_map(|t| t.iter().copied())
            .filter(|&v| v != center)
            .collect();
        neighbours.sort_unstable();
        neighbours.dedup();
        let holed = remove_vertices(&grid, &[center]).unwrap();
        let loops = boundary_loops(&holed).unwrap();
        // Outer rim plus the hole rim.
        assert_eq!(loops.len(), 2);
        let remapped: Vec<usize> = neighbours.iter().map(|&v| if v > center { v - 1 } else { v }).collect();
        let hole = loops.iter().find(|l| l.len() == remapped.len()).unwrap();
        let mut got = hole.vertices.clone();
        got.sort_unstable();
        assert_eq!(got, remapped);
    }

    #[test]
    fn watertight_mesh_with_one_vertex_removed_has_one_loop() {
        let sphere = synth::uv_sphere(10, 12, 1.0);
        let holed = remove_vertices(&sphere, &[40]).unwrap();
        assert_eq!(boundary_loops(&holed).unwrap().len(), 1);
    }

    #[test]
    fn non_manifold_edge_is_rejected() {
        let verts = vec![p(0., 0., 0.), p(1., 0., 0.), p(0., 1., 0.), p(0., -1., 0.), p(0., 0., 1.)];
        let mesh = TexturedMesh::untextured(verts, vec![[0, 1, 2], [1, 0, 3], [0, 1, 4]]).unwrap();
        assert_eq!(boundary_loops(&mesh), Err(MeshError::NonManifold(0, 1)));
    }

    #[test]
    fn bowtie_vertex_splits_into_simple_loops() {
        // Two triangles touching only at vertex 0.
        let verts = vec![p(0., 0., 0.), p(1., 0., 0.), p(1., 1., 0.), p(-1., 0., 0.), p(-1., -1., 0.)];
        let mesh = TexturedMesh::untextured(verts, vec![[0, 1, 2], [0, 3, 4]]).unwrap();
        let loops = boundary_loops(&mesh).unwrap();
        assert_eq!(loops.len(), 2);
        for l in &loops {
            assert_eq!(l.len(), 3);
            let mut unique = l.vertices.clone();
            unique.sort_unstable();
            unique.dedup();
            assert_eq!(unique.len(), 3);
            assert!(l.vertices.contains(&0));
        }
    }
}
