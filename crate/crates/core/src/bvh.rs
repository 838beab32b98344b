//! Bounding volume hierarchy over a mesh's triangles for closest-triangle
//! queries under the additive distance.
//!
//! Pruning uses the Euclidean point-box distance. It never exceeds the
//! Euclidean point-triangle distance, which in turn never exceeds `d0 + d1`,
//! so the bound stays admissible for the additive metric.

use nalgebra::Vector3;

use crate::distance::{closest_point_triangle, Correspondence};
use crate::mesh::{MeshError, Point, TexturedMesh};

const LEAF_SIZE: usize = 4;

#[derive(Debug, Clone, Copy)]
struct Aabb {
    min: Point,
    max: Point,
}

impl Aabb {
    fn empty() -> Self {
        Self {
            min: Point::new(f64::INFINITY, f64::INFINITY, f64::INFINITY),
            max: Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY),
        }
    }

    fn grow(&mut self, p: &Point) {
        self.min = self.min.inf(p);
        self.max = self.max.sup(p);
    }

    fn merge(&mut self, other: &Aabb) {
        self.min = self.min.inf(&other.min);
        self.max = self.max.sup(&other.max);
    }

    fn distance_squared(&self, p: &Point) -> f64 {
        let below = self.min - p;
        let above = p - self.max;
        let gap = Vector3::new(
            below.x.max(above.x).max(0.0),
            below.y.max(above.y).max(0.0),
            below.z.max(above.z).max(0.0),
        );
        gap.norm_squared()
    }
}

#[derive(Debug, Clone)]
enum Node {
    Leaf { bounds: Aabb, start: usize, end: usize },
    Inner { bounds: Aabb, left: usize, right: usize },
}

impl Node {
    fn bounds(&self) -> &Aabb {
        match self {
            Node::Leaf { bounds, .. } | Node::Inner { bounds, .. } => bounds,
        }
    }
}

/// Immutable acceleration structure owning a copy of its mesh.
#[derive(Debug, Clone)]
pub struct SpatialIndex {
    mesh: TexturedMesh,
    nodes: Vec<Node>,
    order: Vec<usize>,
}

/// Builds the hierarchy with median splits along the widest centroid axis.
pub fn build_index(mesh: &TexturedMesh) -> SpatialIndex {
    let n = mesh.triangle_count();
    let boxes: Vec<Aabb> = (0..n)
        .map(|t| {
            let mut b = Aabb::empty();
            for p in mesh.triangle_positions(t) {
                b.grow(&p);
            }
            b
        })
        .collect();
    let centroids: Vec<Point> = boxes.iter().map(|b| nalgebra::center(&b.min, &b.max)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    let mut nodes = Vec::with_capacity(2 * n / LEAF_SIZE + 1);
    if n > 0 {
        build_node(&mut nodes, &mut order, 0, n, &boxes, &centroids);
    }
    SpatialIndex {
        mesh: mesh.clone(),
        nodes,
        order,
    }
}

fn build_node(
    nodes: &mut Vec<Node>,
    order: &mut [usize],
    start: usize,
    end: usize,
    boxes: &[Aabb],
    centroids: &[Point],
) -> usize {
    let mut bounds = Aabb::empty();
    let mut spread = Aabb::empty();
    for &t in &order[start..end] {
        bounds.merge(&boxes[t]);
        spread.grow(&centroids[t]);
    }
    let slot = nodes.len();
    if end - start <= LEAF_SIZE {
        nodes.push(Node::Leaf { bounds, start, end });
        return slot;
    }
    let extent = spread.max - spread.min;
    let axis = extent.imax();
    let mid = start + (end - start) / 2;
    order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
        centroids[a][axis].total_cmp(&centroids[b][axis]).then(a.cmp(&b))
    });
    // Placeholder until both children exist.
    nodes.push(Node::Leaf { bounds, start, end });
    let left = build_node(nodes, order, start, mid, boxes, centroids);
    let right = build_node(nodes, order, mid, end, boxes, centroids);
    nodes[slot] = Node::Inner { bounds, left, right };
    slot
}

impl SpatialIndex {
    pub fn mesh(&self) -> &TexturedMesh {
        &self.mesh
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Correspondence minimizing `d0 + d1` over all triangles. Ties, meaning
    /// distances within [`tie_tolerance`] of the minimum, go to the lowest
    /// triangle index. The color is evaluated at the foot point.
    pub fn closest(&self, p: &Point) -> Result<Correspondence, MeshError> {
        if self.nodes.is_empty() {
            return Err(MeshError::EmptyIndex);
        }
        // Track the exact minimum, and every candidate that could still tie
        // with it, then resolve ties by index once the minimum is final. This
        // keeps the result independent of traversal order.
        let mut best = f64::INFINITY;
        let mut candidates: Vec<Correspondence> = Vec::new();
        let mut stack = vec![0usize];
        while let Some(node) = stack.pop() {
            let bound = self.nodes[node].bounds().distance_squared(p);
            let reach = best + tie_tolerance(best);
            // Relative slack keeps rounding in the box bound from pruning a
            // tie.
            if bound > reach * reach * (1.0 + 1e-9) {
                continue;
            }
            match &self.nodes[node] {
                Node::Leaf { start, end, .. } => {
                    for &t in &self.order[*start..*end] {
                        let mut c = closest_point_triangle(p, &self.mesh.triangle_positions(t));
                        if c.distance <= best + tie_tolerance(best) {
                            c.triangle = t;
                            best = best.min(c.distance);
                            candidates.push(c);
                        }
                    }
                }
                Node::Inner { left, right, .. } => {
                    let dl = self.nodes[*left].bounds().distance_squared(p);
                    let dr = self.nodes[*right].bounds().distance_squared(p);
                    // Visit the nearer child first.
                    if dl <= dr {
                        stack.push(*right);
                        stack.push(*left);
                    } else {
                        stack.push(*left);
                        stack.push(*right);
                    }
                }
            }
        }
        let limit = best + tie_tolerance(best);
        let mut best = candidates
            .into_iter()
            .filter(|c| c.distance <= limit)
            .min_by_key(|c| c.triangle)
            .expect("non-empty index yields a candidate");
        best.color = self.mesh.color_at(best.triangle, best.barycentric);
        Ok(best)
    }
}

/// Distances closer than this to the minimum count as ties, so shared edges
/// and vertices resolve to the lowest triangle index despite rounding.
pub fn tie_tolerance(distance: f64) -> f64 {
    1e-12 * distance + 1e-15
}

/// Free-function form of [`SpatialIndex::closest`].
pub fn closest_on_mesh(index: &SpatialIndex, p: &Point) -> Result<Correspondence, MeshError> {
    index.closest(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute_force(mesh: &TexturedMesh, p: &Point) -> Correspondence {
        let all: Vec<Correspondence> = (0..mesh.triangle_count())
            .map(|t| Correspondence {
                triangle: t,
                ..closest_point_triangle(p, &mesh.triangle_positions(t))
            })
            .collect();
        let min = all.iter().map(|c| c.distance).fold(f64::INFINITY, f64::min);
        *all.iter().find(|c| c.distance <= min + tie_tolerance(min)).unwrap()
    }

    #[test]
    fn single_triangle_matches_kernel() {
        let mesh = TexturedMesh::untextured(
            vec![Point::new(0., 0., 0.), Point::new(1., 0., 0.), Point::new(0., 1., 0.)],
            vec![[0, 1, 2]],
        )
        .unwrap();
        let index = build_index(&mesh);
        for p in [Point::new(0.2, 0.2, 3.0), Point::new(-4.0, 1.0, 2.0), Point::new(2.0, 0.0, 1.0)] {
            let direct = closest_point_triangle(&p, &mesh.triangle_positions(0));
            assert_eq!(index.closest(&p).unwrap(), direct);
        }
    }

    #[test]
    fn empty_mesh_reports_no_correspondence() {
        let index = build_index(&TexturedMesh::empty());
        assert!(index.is_empty());
        assert_eq!(index.closest(&Point::origin()), Err(MeshError::EmptyIndex));
    }

    #[test]
    fn coplanar_disjoint_triangles() {
        let mesh = TexturedMesh::untextured(
            vec![
                Point::new(0., 0., 0.),
                Point::new(1., 0., 0.),
                Point::new(0., 1., 0.),
                Point::new(5., 0., 0.),
                Point::new(6., 0., 0.),
                Point::new(5., 1., 0.),
            ],
            vec![[0, 1, 2], [3, 4, 5]],
        )
        .unwrap();
        let c = build_index(&mesh).closest(&Point::new(0.2, 0.2, 0.5)).unwrap();
        assert!(c.hit);
        assert_eq!(c.triangle, 0);
    }

    #[test]
    fn ties_go_to_lower_triangle_index() {
        // Mirror-image triangles on either side of x = 0; the query on the
        // mirror plane is equidistant from both.
        let mesh = TexturedMesh::untextured(
            vec![
                Point::new(1., 0., 0.),
                Point::new(2., 0., 0.),
                Point::new(1., 1., 0.),
                Point::new(-1., 0., 0.),
                Point::new(-1., 1., 0.),
                Point::new(-2., 0., 0.),
            ],
            vec![[3, 4, 5], [0, 1, 2]],
        )
        .unwrap();
        let c = build_index(&mesh).closest(&Point::new(0.0, 0.3, 0.4)).unwrap();
        let d0 = closest_point_triangle(&Point::new(0.0, 0.3, 0.4), &mesh.triangle_positions(0)).distance;
        let d1 = closest_point_triangle(&Point::new(0.0, 0.3, 0.4), &mesh.triangle_positions(1)).distance;
        assert_eq!(d0, d1);
        assert_eq!(c.triangle, 0);
    }

    #[test]
    fn surface_points_are_hits_at_zero() {
        let mesh = synth::unit_cube();
        let c = build_index(&mesh).closest(&Point::new(0.3, 0.6, 1.0)).unwrap();
        assert!(c.hit);
        assert_eq!(c.distance, 0.0);
    }

    #[test]
    fn matches_brute_force_on_random_soups() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for config in 0..100 {
            let mesh = synth::random_soup(rng.random_range(1..200), config);
            let index = build_index(&mesh);
            for _ in 0..20 {
                let p = Point::new(
                    rng.random_range(-0.5..1.5),
                    rng.random_range(-0.5..1.5),
                    rng.random_range(-0.5..1.5),
                );
                let fast = index.closest(&p).unwrap();
                let slow = brute_force(&mesh, &p);
                assert_eq!(fast.triangle, slow.triangle, "config {config}");
                assert_eq!(fast.distance, slow.distance);
            }
        }
    }

    #[test]
    fn color_is_sampled_at_the_foot_point() {
        let sphere = synth::uv_sphere(20, 24, 1.0);
        let index = build_index(&sphere);
        let c = index.closest(&Point::new(0.3, 0.2, 1.5)).unwrap();
        assert_eq!(c.color, sphere.color_at(c.triangle, c.barycentric));
        assert!(c.color.is_some());
    }
}
