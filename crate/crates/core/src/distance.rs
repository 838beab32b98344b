//! Two-component point-to-triangle distance.
//!
//! For a query point `p` and a triangle, `d0` is the distance from `p` to its
//! orthogonal projection `p0` on the triangle's plane and `d1` the in-plane
//! distance from `p0` to the nearest point `p1` of the triangle. The reported
//! distance is `d = d0 + d1`, which exceeds the Euclidean point-triangle
//! distance whenever the projection misses the triangle.

use crate::mesh::{Point, Rgb};

/// Result of a closest-point query against a triangle or a mesh.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correspondence {
    /// `p1`, the nearest point of the triangle to the projection.
    pub foot: Point,
    /// `p0`, the orthogonal projection onto the triangle's plane.
    pub projection: Point,
    pub plane_distance: f64,
    pub in_plane_distance: f64,
    /// `plane_distance + in_plane_distance`.
    pub distance: f64,
    pub hit: bool,
    pub triangle: usize,
    /// Barycentric coordinates of `foot` within the triangle.
    pub barycentric: [f64; 3],
    /// Texture color at `foot`, when the target is textured.
    pub color: Option<Rgb>,
}

impl Correspondence {
    /// Plain Euclidean distance from the query to the foot point.
    pub fn euclidean_to_foot(&self, query: &Point) -> f64 {
        (self.foot - query).norm()
    }
}

/// Relative cross-product magnitude below which a triangle counts as degenerate.
const DEGENERATE_EPS: f64 = 1e-14;

/// Closest point of one triangle to `p` under `d = d0 + d1`.
///
/// A zero-area triangle has no plane: the query is then treated as a miss
/// with `p0 = p`, `d0 = 0` and `p1` the nearest point on the longest edge.
/// The returned `triangle` is 0 and `color` is `None`; mesh queries fill
/// both in.
pub fn closest_point_triangle(p: &Point, tri: &[Point; 3]) -> Correspondence {
    let [a, b, c] = *tri;
    let ab = b - a;
    let ac = c - a;
    let normal = ab.cross(&ac);
    let longest = ab.norm_squared().max(ac.norm_squared()).max((c - b).norm_squared());
    let area2 = normal.norm();
    if area2 <= DEGENERATE_EPS * longest || longest == 0.0 {
        return degenerate(p, tri);
    }
    let unit = normal / area2;
    let height = (p - a).dot(&unit);
    let projection = p - unit * height;
    let plane_distance = height.abs();

    // Signed sub-triangle areas give the barycentric coordinates of p0.
    let w0 = (c - b).cross(&(projection - b)).dot(&unit) / area2;
    let w1 = (a - c).cross(&(projection - c)).dot(&unit) / area2;
    let w2 = ab.cross(&(projection - a)).dot(&unit) / area2;
    if w0 >= 0.0 && w1 >= 0.0 && w2 >= 0.0 {
        let sum = w0 + w1 + w2;
        return Correspondence {
            foot: projection,
            projection,
            plane_distance,
            in_plane_distance: 0.0,
            distance: plane_distance,
            hit: true,
            triangle: 0,
            barycentric: [w0 / sum, w1 / sum, w2 / sum],
            color: None,
        };
    }

    let (foot, barycentric) = nearest_on_edges(&projection, tri);
    let in_plane_distance = (projection - foot).norm();
    Correspondence {
        foot,
        projection,
        plane_distance,
        in_plane_distance,
        distance: plane_distance + in_plane_distance,
        hit: in_plane_distance == 0.0,
        triangle: 0,
        barycentric,
        color: None,
    }
}

fn degenerate(p: &Point, tri: &[Point; 3]) -> Correspondence {
    let mut edge = (0, 1);
    let mut longest = (tri[1] - tri[0]).norm_squared();
    for (i, j) in [(1, 2), (2, 0)] {
        let len = (tri[j] - tri[i]).norm_squared();
        if len > longest {
            longest = len;
            edge = (i, j);
        }
    }
    let (i, j) = edge;
    let (foot, t) = nearest_on_segment(p, &tri[i], &tri[j]);
    let mut barycentric = [0.0; 3];
    barycentric[i] = 1.0 - t;
    barycentric[j] += t;
    let in_plane_distance = (p - foot).norm();
    Correspondence {
        foot,
        projection: *p,
        plane_distance: 0.0,
        in_plane_distance,
        distance: in_plane_distance,
        hit: false,
        triangle: 0,
        barycentric,
        color: None,
    }
}

/// Nearest point to `q` on the boundary of the triangle; first edge wins ties.
fn nearest_on_edges(q: &Point, tri: &[Point; 3]) -> (Point, [f64; 3]) {
    let mut best: Option<(f64, Point, [f64; 3])> = None;
    for (i, j) in [(0, 1), (1, 2), (2, 0)] {
        let (foot, t) = nearest_on_segment(q, &tri[i], &tri[j]);
        let dist = (q - foot).norm_squared();
        if best.as_ref().is_none_or(|(d, _, _)| dist < *d) {
            let mut bary = [0.0; 3];
            bary[i] = 1.0 - t;
            bary[j] = t;
            best = Some((dist, foot, bary));
        }
    }
    let (_, foot, bary) = best.unwrap();
    (foot, bary)
}

fn nearest_on_segment(q: &Point, a: &Point, b: &Point) -> (Point, f64) {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return (*a, 0.0);
    }
    let t = ((q - a).dot(&ab) / len2).clamp(0.0, 1.0);
    (a + ab * t, t)
}

/// Euclidean point-triangle distance, used to cross-check the additive metric.
pub fn euclidean_point_triangle(p: &Point, tri: &[Point; 3]) -> f64 {
    let c = closest_point_triangle(p, tri);
    if c.hit {
        return c.plane_distance;
    }
    let (foot, _) = nearest_on_edges(p, tri);
    (p - foot).norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit_tri() -> [Point; 3] {
        [Point::new(0., 0., 0.), Point::new(1., 0., 0.), Point::new(0., 1., 0.)]
    }

    #[test]
    fn hit_over_interior() {
        let c = closest_point_triangle(&Point::new(0.25, 0.25, 1.0), &unit_tri());
        assert!(c.hit);
        assert_eq!(c.plane_distance, 1.0);
        assert_eq!(c.in_plane_distance, 0.0);
        assert_eq!(c.distance, 1.0);
        assert_eq!(c.foot, Point::new(0.25, 0.25, 0.0));
    }

    #[test]
    fn in_plane_miss() {
        let c = closest_point_triangle(&Point::new(2., 0., 0.), &unit_tri());
        assert!(!c.hit);
        assert_eq!(c.plane_distance, 0.0);
        assert_eq!(c.projection, Point::new(2., 0., 0.));
        assert_eq!(c.foot, Point::new(1., 0., 0.));
        assert_eq!(c.in_plane_distance, 1.0);
        assert_eq!(c.distance, 1.0);
    }

    #[test]
    fn off_plane_miss_adds_components() {
        let c = closest_point_triangle(&Point::new(2., 0., 1.), &unit_tri());
        assert!(!c.hit);
        assert_eq!(c.plane_distance, 1.0);
        assert_eq!(c.foot, Point::new(1., 0., 0.));
        assert_eq!(c.in_plane_distance, 1.0);
        assert_eq!(c.distance, 2.0);
        assert!((c.euclidean_to_foot(&Point::new(2., 0., 1.)) - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn degenerate_triangle_uses_longest_edge() {
        let tri = [Point::new(0., 0., 0.), Point::new(1., 0., 0.), Point::new(3., 0., 0.)];
        let c = closest_point_triangle(&Point::new(2., 1., 0.), &tri);
        assert!(!c.hit);
        assert_eq!(c.plane_distance, 0.0);
        assert_eq!(c.foot, Point::new(2., 0., 0.));
        assert_eq!(c.distance, 1.0);
        let bary = c.barycentric;
        assert!((bary.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    /// Nearest boundary point by dense sampling of the three edges.
    fn sampled_boundary_distance(q: &Point, tri: &[Point; 3]) -> f64 {
        let steps = 4000;
        let mut best = f64::INFINITY;
        for (i, j) in [(0, 1), (1, 2), (2, 0)] {
            for s in 0..=steps {
                let t = s as f64 / steps as f64;
                let x = tri[i] + (tri[j] - tri[i]) * t;
                best = best.min((q - x).norm());
            }
        }
        best
    }

    fn point() -> impl Strategy<Value = Point> {
        (-2.0..2.0f64, -2.0..2.0f64, -2.0..2.0f64).prop_map(|(x, y, z)| Point::new(x, y, z))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn components_are_consistent(p in point(), a in point(), b in point(), c in point()) {
            let tri = [a, b, c];
            prop_assume!((b - a).cross(&(c - a)).norm() > 1e-3);
            let corr = closest_point_triangle(&p, &tri);
            prop_assert!(corr.plane_distance >= 0.0 && corr.in_plane_distance >= 0.0);
            prop_assert_eq!(corr.distance, corr.plane_distance + corr.in_plane_distance);
            prop_assert_eq!(corr.hit, corr.in_plane_distance == 0.0);
            prop_assert!((corr.projection - p).norm() - corr.plane_distance < 1e-9);
            // Foot point agrees with its barycentric coordinates.
            let w = corr.barycentric;
            prop_assert!(w.iter().all(|&x| x >= -1e-12));
            let rebuilt = a.coords * w[0] + b.coords * w[1] + c.coords * w[2];
            prop_assert!((rebuilt - corr.foot.coords).norm() < 1e-9);

            let euclid = euclidean_point_triangle(&p, &tri);
            prop_assert!(corr.distance >= euclid - 1e-12);
            if corr.hit {
                prop_assert!((corr.distance - euclid).abs() < 1e-12);
            } else {
                let sampled = sampled_boundary_distance(&corr.projection, &tri);
                prop_assert!(corr.in_plane_distance <= sampled + 1e-12);
                prop_assert!(sampled - corr.in_plane_distance < 2e-3);
            }
        }

        #[test]
        fn in_plane_queries_are_euclidean(u in -1.0..2.0f64, v in -1.0..2.0f64) {
            let p = Point::new(u, v, 0.0);
            let corr = closest_point_triangle(&p, &unit_tri());
            prop_assert_eq!(corr.plane_distance, 0.0);
            prop_assert!((corr.distance - euclidean_point_triangle(&p, &unit_tri())).abs() < 1e-12);
        }
    }
}
