//! Integer lattice points and an exact monotone-chain convex hull.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Point {
    pub x: i64,
    pub y: i64,
}

impl Point {
    pub const fn new(x: i64, y: i64) -> Self {
        Point { x, y }
    }
}

impl From<(i64, i64)> for Point {
    fn from((x, y): (i64, i64)) -> Self {
        Point { x, y }
    }
}

/// Twice the signed area of `o, a, b`; positive for a counter-clockwise turn.
#[inline]
pub fn cross(o: Point, a: Point, b: Point) -> i128 {
    let (ax, ay) = (a.x as i128 - o.x as i128, a.y as i128 - o.y as i128);
    let (bx, by) = (b.x as i128 - o.x as i128, b.y as i128 - o.y as i128);
    ax * by - ay * bx
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConvexHull {
    /// Strictly extreme points, counter-clockwise from the lexicographically
    /// smallest point. For a collinear input this holds the one or two
    /// extreme points instead.
    pub vertices: Vec<Point>,
    /// All input points are collinear (or there is only one).
    pub degenerate: bool,
}

/// Convex hull of an arbitrary point set.
pub fn convex_hull(points: &[Point]) -> ConvexHull {
    let mut pts = points.to_vec();
    pts.sort_unstable();
    pts.dedup();
    convex_hull_sorted(&pts)
}

/// Convex hull of points that are already sorted lexicographically and
/// free of duplicates. Collinear boundary points are dropped.
pub fn convex_hull_sorted(pts: &[Point]) -> ConvexHull {
    debug_assert!(pts.windows(2).all(|w| w[0] < w[1]));
    if pts.len() <= 2 {
        return ConvexHull {
            vertices: pts.to_vec(),
            degenerate: true,
        };
    }
    let mut hull: Vec<Point> = Vec::with_capacity(pts.len() / 4 + 8);
    for &p in pts {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower_len = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        while hull.len() >= lower_len && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0 {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    if hull.len() < 3 {
        // Collinear input: the chain collapses onto its two endpoints.
        return ConvexHull {
            vertices: vec![pts[0], pts[pts.len() - 1]],
            degenerate: true,
        };
    }
    ConvexHull {
        vertices: hull,
        degenerate: false,
    }
}

/// True when `p` lies strictly inside the counter-clockwise convex polygon.
pub fn strictly_inside(polygon: &[Point], p: Point) -> bool {
    if polygon.len() < 3 {
        return false;
    }
    (0..polygon.len()).all(|i| cross(polygon[i], polygon[(i + 1) % polygon.len()], p) > 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pts(v: &[(i64, i64)]) -> Vec<Point> {
        v.iter().copied().map(Point::from).collect()
    }

    #[test]
    fn square_with_edge_and_interior_points() {
        let input = pts(&[(0, 0), (2, 0), (2, 2), (0, 2), (1, 0), (1, 1), (0, 1)]);
        let h = convex_hull(&input);
        assert!(!h.degenerate);
        assert_eq!(h.vertices, pts(&[(0, 0), (2, 0), (2, 2), (0, 2)]));
    }

    #[test]
    fn collinear_input() {
        let h = convex_hull(&pts(&[(3, 3), (1, 1), (2, 2)]));
        assert!(h.degenerate);
        assert_eq!(h.vertices, pts(&[(1, 1), (3, 3)]));
        let h = convex_hull(&pts(&[(5, 5)]));
        assert!(h.degenerate);
        assert_eq!(h.vertices.len(), 1);
    }

    #[test]
    fn large_coordinates_do_not_overflow() {
        let m = 1i64 << 62;
        let h = convex_hull(&pts(&[
            (0, 0),
            (m, 1),
            (m - 1, m),
            (1, m - 1),
            (m / 2, m / 2),
        ]));
        assert_eq!(h.vertices.len(), 4);
    }

    fn brute_extreme(points: &[Point]) -> Vec<Point> {
        // p is a vertex iff it is not in the closed hull of the others, which
        // for lattice sets we test via: some direction makes p the unique maximizer.
        let mut uniq = points.to_vec();
        uniq.sort();
        uniq.dedup();
        let mut out = Vec::new();
        for &p in &uniq {
            let others: Vec<Point> = uniq.iter().copied().filter(|&q| q != p).collect();
            let inside = others.iter().enumerate().any(|(i, &a)| {
                others[i + 1..].iter().enumerate().any(|(j, &b)| {
                    // segment containment
                    if cross(a, b, p) == 0
                        && p.x >= a.x.min(b.x)
                        && p.x <= a.x.max(b.x)
                        && p.y >= a.y.min(b.y)
                        && p.y <= a.y.max(b.y)
                    {
                        return true;
                    }
                    others[i + j + 2..].iter().any(|&c| {
                        let (d1, d2, d3) = (cross(a, b, p), cross(b, c, p), cross(c, a, p));
                        let neg = d1 < 0 || d2 < 0 || d3 < 0;
                        let pos = d1 > 0 || d2 > 0 || d3 > 0;
                        !(neg && pos) && cross(a, b, c) != 0
                    })
                })
            });
            if !inside {
                out.push(p);
            }
        }
        out
    }

    proptest! {
        #[test]
        fn matches_brute_force_extreme_points(raw in prop::collection::vec((0i64..12, 0i64..12), 3..14)) {
            let input = pts(&raw);
            let h = convex_hull(&input);
            let mut got = h.vertices.clone();
            got.sort();
            if !h.degenerate {
                prop_assert_eq!(got, brute_extreme(&input));
                for i in 0..h.vertices.len() {
                    let n = h.vertices.len();
                    prop_assert!(cross(h.vertices[i], h.vertices[(i + 1) % n], h.vertices[(i + 2) % n]) > 0);
                }
            }
        }
    }
}
