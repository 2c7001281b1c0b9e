//! Planar polygon predicates in workshop meters.
//!
//! All tolerance handling uses one absolute distance, [`EPSILON`]. Boundary
//! points count as inside and touching polygons count as overlapping.

use serde::{Deserialize, Serialize};

/// Absolute tolerance in meters for on-edge and intersection tests.
pub const EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    fn sub(self, other: Point) -> (f64, f64) {
        (self.x - other.x, self.y - other.y)
    }
}

impl From<[f64; 2]> for Point {
    fn from([x, y]: [f64; 2]) -> Self {
        Point { x, y }
    }
}

impl From<Point> for [f64; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PolygonDefect {
    TooFewVertices(usize),
    NonFinite(usize),
    ZeroLengthEdge(usize),
    SelfIntersecting(usize, usize),
    ZeroArea,
}

impl std::fmt::Display for PolygonDefect {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PolygonDefect::TooFewVertices(n) => write!(f, "polygon needs at least 3 vertices, got {n}"),
            PolygonDefect::NonFinite(i) => write!(f, "vertex {i} is not a finite coordinate"),
            PolygonDefect::ZeroLengthEdge(i) => write!(f, "edge {i} has zero length"),
            PolygonDefect::SelfIntersecting(i, j) => write!(f, "edges {i} and {j} intersect"),
            PolygonDefect::ZeroArea => f.write_str("polygon has zero area"),
        }
    }
}

/// Twice the signed area; positive for counterclockwise rings.
pub fn signed_area2(ring: &[Point]) -> f64 {
    let n = ring.len();
    (0..n)
        .map(|i| {
            let a = ring[i];
            let b = ring[(i + 1) % n];
            a.x * b.y - b.x * a.y
        })
        .sum()
}

fn edges(ring: &[Point]) -> impl Iterator<Item = (Point, Point)> + '_ {
    let n = ring.len();
    (0..n).map(move |i| (ring[i], ring[(i + 1) % n]))
}

/// Signed distance of `p` from the directed line through `a` and `b`.
fn side(a: Point, b: Point, p: Point) -> f64 {
    let (abx, aby) = b.sub(a);
    let (apx, apy) = p.sub(a);
    let len = abx.hypot(aby);
    if len == 0.0 {
        return apx.hypot(apy);
    }
    (abx * apy - aby * apx) / len
}

fn sign(d: f64) -> i8 {
    if d > EPSILON {
        1
    } else if d < -EPSILON {
        -1
    } else {
        0
    }
}

pub fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let (abx, aby) = b.sub(a);
    let (apx, apy) = p.sub(a);
    let len2 = abx * abx + aby * aby;
    let t = if len2 == 0.0 {
        0.0
    } else {
        ((apx * abx + apy * aby) / len2).clamp(0.0, 1.0)
    };
    let cx = a.x + t * abx;
    let cy = a.y + t * aby;
    (p.x - cx).hypot(p.y - cy)
}

/// Closed-segment intersection, including touching and collinear overlap.
pub fn segments_intersect(a: Point, b: Point, c: Point, d: Point) -> bool {
    let d1 = sign(side(c, d, a));
    let d2 = sign(side(c, d, b));
    let d3 = sign(side(a, b, c));
    let d4 = sign(side(a, b, d));
    if d1 * d2 < 0 && d3 * d4 < 0 {
        return true;
    }
    point_segment_distance(a, c, d) <= EPSILON
        || point_segment_distance(b, c, d) <= EPSILON
        || point_segment_distance(c, a, b) <= EPSILON
        || point_segment_distance(d, a, b) <= EPSILON
}

/// Checks the ring and returns it in counterclockwise order.
pub fn normalize_ring(mut ring: Vec<Point>) -> Result<Vec<Point>, PolygonDefect> {
    let n = ring.len();
    if n < 3 {
        return Err(PolygonDefect::TooFewVertices(n));
    }
    if let Some(i) = ring.iter().position(|p| !p.is_finite()) {
        return Err(PolygonDefect::NonFinite(i));
    }
    for (i, (a, b)) in edges(&ring).enumerate() {
        if a.sub(b).0.hypot(a.sub(b).1) <= EPSILON {
            return Err(PolygonDefect::ZeroLengthEdge(i));
        }
    }
    for i in 0..n {
        let (a, b) = (ring[i], ring[(i + 1) % n]);
        for j in (i + 1)..n {
            let (c, d) = (ring[j], ring[(j + 1) % n]);
            let crosses = if j == i + 1 {
                // shares b == c; only a collinear fold-back is a defect
                point_segment_distance(d, a, b) <= EPSILON
                    || point_segment_distance(a, c, d) <= EPSILON
            } else if i == 0 && j == n - 1 {
                // shares a == d
                point_segment_distance(c, a, b) <= EPSILON
                    || point_segment_distance(b, c, d) <= EPSILON
            } else {
                segments_intersect(a, b, c, d)
            };
            if crosses {
                return Err(PolygonDefect::SelfIntersecting(i, j));
            }
        }
    }
    let area2 = signed_area2(&ring);
    if area2.abs() <= EPSILON {
        return Err(PolygonDefect::ZeroArea);
    }
    if area2 < 0.0 {
        ring.reverse();
    }
    Ok(ring)
}

/// True when `p` lies within [`EPSILON`] of any edge.
pub fn on_boundary(p: Point, ring: &[Point]) -> bool {
    edges(ring).any(|(a, b)| point_segment_distance(p, a, b) <= EPSILON)
}

/// Boundary-inclusive containment by ray casting.
pub fn contains_point(ring: &[Point], p: Point) -> bool {
    if on_boundary(p, ring) {
        return true;
    }
    let mut inside = false;
    for (a, b) in edges(ring) {
        if (a.y > p.y) != (b.y > p.y) {
            let x_cross = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x_cross {
                inside = !inside;
            }
        }
    }
    inside
}

/// Shared interior, crossing boundaries, or a single touching point.
pub fn rings_overlap(a: &[Point], b: &[Point]) -> bool {
    for (p, q) in edges(a) {
        for (r, s) in edges(b) {
            if segments_intersect(p, q, r, s) {
                return true;
            }
        }
    }
    // no boundary contact: either disjoint or one strictly inside the other
    contains_point(b, a[0]) || contains_point(a, b[0])
}
