//! Planar polygons, triangles and the (piecewise) affine maps that move them.

mod map;
mod triangulate;

pub use map::{AffineMap, HalfPlane, PiecewiseAffine, PlaneMap};

use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Neg, Sub};
use thiserror::Error;

/// Three consecutive vertices spanning less than this fraction of diam² count as collinear.
pub const COLLINEAR_TOL: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("polygon needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("vertex {0} has a non-finite coordinate")]
    NonFinite(usize),
    #[error("vertex {0} repeats an earlier vertex")]
    RepeatedVertex(usize),
    #[error("polygon has (near) zero area")]
    DegenerateArea,
    #[error("vertices {0}, {1}, {2} are collinear")]
    CollinearVertices(usize, usize, usize),
    #[error("edges {0} and {1} intersect")]
    SelfIntersecting(usize, usize),
    #[error("triangulation failed: {0}")]
    TriangulationFailed(String),
    #[error("apex ({0}, {1}) lies outside the polygon")]
    ApexOutside(f64, f64),
    #[error("linear part of the map is singular")]
    SingularMap,
    #[error("piecewise map is discontinuous at vertex {0} (mismatch {1:e})")]
    MapDiscontinuous(usize, f64),
    #[error("image polygon is degenerate: {0}")]
    ImageDegenerate(Box<GeometryError>),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl From<[f64; 2]> for Point {
    fn from(v: [f64; 2]) -> Self {
        Point { x: v[0], y: v[1] }
    }
}

impl From<Point> for [f64; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }
    pub fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y
    }
    pub fn cross(self, o: Point) -> f64 {
        self.x * o.y - self.y * o.x
    }
    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }
    pub fn dist(self, o: Point) -> f64 {
        (self - o).norm()
    }
    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
    /// Midpoint written symmetrically so that `a.mid(b)` and `b.mid(a)` agree bit for bit.
    pub fn mid(self, o: Point) -> Point {
        Point::new((self.x + o.x) * 0.5, (self.y + o.y) * 0.5)
    }
    /// Counterclockwise rotation by a right angle.
    pub fn perp(self) -> Point {
        Point::new(-self.y, self.x)
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }
}

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point::new(-self.x, -self.y)
    }
}

/// Twice the signed area of (a, b, c); positive when counterclockwise.
pub fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b - a).cross(c - a)
}

/// Distance from `p` to the closed segment [a, b].
pub fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let d = b - a;
    let len2 = d.dot(d);
    if len2 == 0.0 {
        return p.dist(a);
    }
    let s = ((p - a).dot(d) / len2).clamp(0.0, 1.0);
    p.dist(a + d * s)
}

fn on_segment(p: Point, a: Point, b: Point) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

/// Closed segment intersection test (touching counts).
pub fn segments_intersect(p1: Point, p2: Point, q1: Point, q2: Point) -> bool {
    if p1.x.max(p2.x) < q1.x.min(q2.x)
        || q1.x.max(q2.x) < p1.x.min(p2.x)
        || p1.y.max(p2.y) < q1.y.min(q2.y)
        || q1.y.max(q2.y) < p1.y.min(p2.y)
    {
        return false;
    }
    // orientations within roundoff of zero count as collinear
    let eps = 1e-14 * (p2 - p1).norm() * (q2 - q1).norm();
    let snap = |d: f64| if d.abs() <= eps { 0.0 } else { d };
    let d1 = snap(orient(q1, q2, p1));
    let d2 = snap(orient(q1, q2, p2));
    let d3 = snap(orient(p1, p2, q1));
    let d4 = snap(orient(p1, p2, q2));
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(p1, q1, q2))
        || (d2 == 0.0 && on_segment(p2, q1, q2))
        || (d3 == 0.0 && on_segment(q1, p1, p2))
        || (d4 == 0.0 && on_segment(q2, p1, p2))
}

pub fn segment_distance(p1: Point, p2: Point, q1: Point, q2: Point) -> f64 {
    if segments_intersect(p1, p2, q1, q2) {
        return 0.0;
    }
    point_segment_distance(p1, q1, q2)
        .min(point_segment_distance(p2, q1, q2))
        .min(point_segment_distance(q1, p1, p2))
        .min(point_segment_distance(q2, p1, p2))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Triangle {
    pub a: Point,
    pub b: Point,
    pub c: Point,
}

impl Triangle {
    pub const fn new(a: Point, b: Point, c: Point) -> Self {
        Triangle { a, b, c }
    }

    /// Builds a counterclockwise triangle, reordering if needed.
    pub fn ccw(a: Point, b: Point, c: Point) -> Self {
        if orient(a, b, c) < 0.0 {
            Triangle::new(a, c, b)
        } else {
            Triangle::new(a, b, c)
        }
    }

    pub fn vertices(&self) -> [Point; 3] {
        [self.a, self.b, self.c]
    }

    pub fn signed_area(&self) -> f64 {
        0.5 * orient(self.a, self.b, self.c)
    }

    pub fn area(&self) -> f64 {
        self.signed_area().abs()
    }

    pub fn centroid(&self) -> Point {
        (self.a + self.b + self.c) * (1.0 / 3.0)
    }

    pub fn diameter(&self) -> f64 {
        self.a.dist(self.b).max(self.b.dist(self.c)).max(self.c.dist(self.a))
    }

    /// Maps reference coordinates (s, t) on the unit right triangle to the triangle.
    pub fn from_reference(&self, s: f64, t: f64) -> Point {
        self.a + (self.b - self.a) * s + (self.c - self.a) * t
    }

    /// The four midpoint children; child `i < 3` keeps vertex `i`, child 3 is the middle one.
    pub fn quadrisect(&self) -> [Triangle; 4] {
        let ab = self.a.mid(self.b);
        let bc = self.b.mid(self.c);
        let ca = self.c.mid(self.a);
        [
            Triangle::new(self.a, ab, ca),
            Triangle::new(ab, self.b, bc),
            Triangle::new(ca, bc, self.c),
            Triangle::new(bc, ca, ab),
        ]
    }

    /// Closed containment, with a relative slack for points on the boundary.
    pub fn contains(&self, p: Point) -> bool {
        let scale = self.diameter().powi(2) * 1e-13;
        let s = self.signed_area().signum();
        let d1 = orient(self.a, self.b, p) * s;
        let d2 = orient(self.b, self.c, p) * s;
        let d3 = orient(self.c, self.a, p) * s;
        d1 >= -scale && d2 >= -scale && d3 >= -scale
    }

    /// Euclidean distance between the two closed triangles.
    pub fn distance(&self, o: &Triangle) -> f64 {
        let e1 = [(self.a, self.b), (self.b, self.c), (self.c, self.a)];
        let e2 = [(o.a, o.b), (o.b, o.c), (o.c, o.a)];
        let mut best = f64::INFINITY;
        for &(p, q) in &e1 {
            for &(r, s) in &e2 {
                best = best.min(segment_distance(p, q, r, s));
                if best == 0.0 {
                    return 0.0;
                }
            }
        }
        if self.contains(o.a) || o.contains(self.a) {
            return 0.0;
        }
        best
    }
}

/// Where a point sits relative to a polygon.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    Inside,
    Boundary,
    Outside,
}

/// A simple, counterclockwise polygon. Only constructible through validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPolygon", into = "RawPolygon")]
pub struct Polygon {
    vertices: Vec<Point>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawPolygon {
    pub vertices: Vec<Point>,
}

impl TryFrom<RawPolygon> for Polygon {
    type Error = GeometryError;
    fn try_from(raw: RawPolygon) -> Result<Self, GeometryError> {
        Polygon::new(raw.vertices)
    }
}

impl From<Polygon> for RawPolygon {
    fn from(p: Polygon) -> Self {
        RawPolygon { vertices: p.vertices }
    }
}

fn signed_area_of(v: &[Point]) -> f64 {
    let n = v.len();
    let mut s = 0.0;
    for i in 0..n {
        s += v[i].cross(v[(i + 1) % n]);
    }
    0.5 * s
}

fn diameter_of(v: &[Point]) -> f64 {
    let mut d: f64 = 0.0;
    for i in 0..v.len() {
        for j in i + 1..v.len() {
            d = d.max(v[i].dist(v[j]));
        }
    }
    d
}

/// Checks a raw vertex list and returns the counterclockwise polygon.
pub fn validate(raw: &[Point]) -> Result<Polygon, GeometryError> {
    Polygon::new(raw.to_vec())
}

impl Polygon {
    pub fn new(mut v: Vec<Point>) -> Result<Self, GeometryError> {
        let n = v.len();
        if n < 3 {
            return Err(GeometryError::TooFewVertices(n));
        }
        if let Some(i) = v.iter().position(|p| !p.is_finite()) {
            return Err(GeometryError::NonFinite(i));
        }
        for i in 1..n {
            if v[..i].contains(&v[i]) {
                return Err(GeometryError::RepeatedVertex(i));
            }
        }
        let diam = diameter_of(&v);
        let area = signed_area_of(&v);
        if area.abs() <= COLLINEAR_TOL * diam * diam {
            return Err(GeometryError::DegenerateArea);
        }
        if area < 0.0 {
            v[1..].reverse();
        }
        for i in 0..n {
            let (p, q, r) = (v[(i + n - 1) % n], v[i], v[(i + 1) % n]);
            if 0.5 * orient(p, q, r).abs() < COLLINEAR_TOL * diam * diam {
                return Err(GeometryError::CollinearVertices((i + n - 1) % n, i, (i + 1) % n));
            }
        }
        for i in 0..n {
            for j in i + 1..n {
                // adjacent edges share a vertex; the collinearity check covers their overlap
                if j == i + 1 || (i == 0 && j == n - 1) {
                    continue;
                }
                if segments_intersect(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n]) {
                    return Err(GeometryError::SelfIntersecting(i, j));
                }
            }
        }
        Ok(Polygon { vertices: v })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn vertex(&self, i: usize) -> Point {
        self.vertices[i % self.vertices.len()]
    }

    /// Directed edges (v_i, v_{i+1}) in counterclockwise order.
    pub fn edges(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn area(&self) -> f64 {
        signed_area_of(&self.vertices)
    }

    pub fn perimeter(&self) -> f64 {
        self.edges().map(|(p, q)| p.dist(q)).sum()
    }

    pub fn diameter(&self) -> f64 {
        diameter_of(&self.vertices)
    }

    pub fn centroid(&self) -> Point {
        let a = self.area();
        let mut c = Point::default();
        for (p, q) in self.edges() {
            let w = p.cross(q);
            c = c + (p + q) * w;
        }
        c * (1.0 / (6.0 * a))
    }

    pub fn bounding_box(&self) -> (Point, Point) {
        let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in &self.vertices {
            lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        (lo, hi)
    }

    pub fn is_convex(&self) -> bool {
        let n = self.len();
        (0..n).all(|i| orient(self.vertex(i + n - 1), self.vertex(i), self.vertex(i + 1)) > 0.0)
    }

    /// Inside / on the boundary / outside, with a boundary slack relative to the diameter.
    pub fn locate(&self, p: Point) -> Location {
        let tol = 1e-12 * self.diameter();
        if self.edges().any(|(a, b)| point_segment_distance(p, a, b) <= tol) {
            return Location::Boundary;
        }
        // crossing-number test
        let mut inside = false;
        for (a, b) in self.edges() {
            if (a.y > p.y) != (b.y > p.y) {
                let x = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
                if x > p.x {
                    inside = !inside;
                }
            }
        }
        if inside {
            Location::Inside
        } else {
            Location::Outside
        }
    }

    pub fn contains(&self, p: Point) -> bool {
        self.locate(p) != Location::Outside
    }

    pub fn translated(&self, d: Point) -> Polygon {
        Polygon { vertices: self.vertices.iter().map(|&p| p + d).collect() }
    }

    /// Uniform scaling about the origin; orientation is kept for `s > 0`.
    pub fn scaled(&self, s: f64) -> Result<Polygon, GeometryError> {
        Polygon::new(self.vertices.iter().map(|&p| p * s).collect())
    }

    /// Rescales about the centroid to the requested area.
    pub fn with_area(&self, target: f64) -> Result<Polygon, GeometryError> {
        let c = self.centroid();
        let s = (target / self.area()).sqrt();
        Polygon::new(self.vertices.iter().map(|&p| c + (p - c) * s).collect())
    }

    pub fn triangulate(&self) -> Result<Vec<Triangle>, GeometryError> {
        triangulate::triangulate(self)
    }

    pub fn triangulate_with_star(&self, apex: Point) -> Result<Vec<Triangle>, GeometryError> {
        triangulate::triangulate_with_star(self, apex)
    }

    /// True when every point of the polygon is visible from `apex`.
    pub fn is_star_visible_from(&self, apex: Point) -> bool {
        triangulate::star_fan(self, apex).is_some()
    }

    pub fn apply_map(&self, map: &PlaneMap) -> Result<Polygon, GeometryError> {
        map.apply_polygon(self)
    }
}

pub fn triangulate(p: &Polygon) -> Result<Vec<Triangle>, GeometryError> {
    p.triangulate()
}

pub fn triangulate_with_star(p: &Polygon, apex: Point) -> Result<Vec<Triangle>, GeometryError> {
    p.triangulate_with_star(apex)
}

pub fn area(p: &Polygon) -> f64 {
    p.area()
}

pub fn apply_map(map: &PlaneMap, p: &Polygon) -> Result<Polygon, GeometryError> {
    map.apply_polygon(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(v: &[(f64, f64)]) -> Vec<Point> {
        v.iter().map(|&(x, y)| Point::new(x, y)).collect()
    }

    #[test]
    fn square_validates_in_both_orientations() {
        let ccw = validate(&pts(&[(0., 0.), (1., 0.), (1., 1.), (0., 1.)])).unwrap();
        assert_eq!(ccw.area(), 1.0);
        let cw = validate(&pts(&[(0., 0.), (0., 1.), (1., 1.), (1., 0.)])).unwrap();
        assert_eq!(cw.area(), 1.0);
        assert_eq!(cw.vertex(0), Point::new(0., 0.));
        assert_eq!(cw, ccw);
    }

    #[test]
    fn collinear_input_is_degenerate() {
        let e = validate(&pts(&[(0., 0.), (1., 0.), (0.5, 0.)])).unwrap_err();
        assert_eq!(e, GeometryError::DegenerateArea);
    }

    #[test]
    fn rejects_bad_lists() {
        assert_eq!(validate(&pts(&[(0., 0.), (1., 0.)])), Err(GeometryError::TooFewVertices(2)));
        assert!(matches!(
            validate(&pts(&[(0., 0.), (2., 2.), (2., 0.), (0., 1.)])),
            Err(GeometryError::SelfIntersecting(..))
        ));
        assert!(matches!(
            validate(&pts(&[(0., 0.), (0.5, 0.), (1., 0.), (1., 1.)])),
            Err(GeometryError::CollinearVertices(..))
        ));
        assert!(matches!(
            validate(&pts(&[(0., 0.), (1., 0.), (0., 0.), (0., 1.)])),
            Err(GeometryError::RepeatedVertex(2))
        ));
        assert!(matches!(
            validate(&pts(&[(0., 0.), (f64::NAN, 0.), (0., 1.)])),
            Err(GeometryError::NonFinite(1))
        ));
    }

    #[test]
    fn triangle_area_and_scaling() {
        let t = validate(&pts(&[(0., 0.), (1., 0.), (0., 1.)])).unwrap();
        assert_eq!(t.area(), 0.5);
        assert!((t.scaled(3.0).unwrap().area() - 4.5).abs() < 1e-15);
    }

    #[test]
    fn locate_points() {
        let sq = validate(&pts(&[(0., 0.), (1., 0.), (1., 1.), (0., 1.)])).unwrap();
        assert_eq!(sq.locate(Point::new(0.5, 0.5)), Location::Inside);
        assert_eq!(sq.locate(Point::new(0.5, 0.0)), Location::Boundary);
        assert_eq!(sq.locate(Point::new(1.0, 1.0)), Location::Boundary);
        assert_eq!(sq.locate(Point::new(1.5, 0.5)), Location::Outside);
    }

    #[test]
    fn quadrisect_children_partition() {
        let t = Triangle::new(Point::new(0., 0.), Point::new(2., 0.3), Point::new(0.4, 1.7));
        let kids = t.quadrisect();
        let s: f64 = kids.iter().map(|k| k.signed_area()).sum();
        assert!((s - t.signed_area()).abs() < 1e-15);
        assert!(kids.iter().all(|k| k.signed_area() > 0.0));
    }

    #[test]
    fn triangle_distance() {
        let t1 = Triangle::new(Point::new(0., 0.), Point::new(1., 0.), Point::new(0., 1.));
        let t2 = Triangle::new(Point::new(3., 0.), Point::new(4., 0.), Point::new(3., 1.));
        assert!((t1.distance(&t2) - 2.0).abs() < 1e-15);
        let t3 = Triangle::new(Point::new(1., 0.), Point::new(2., 0.), Point::new(1., 1.));
        assert_eq!(t1.distance(&t3), 0.0);
    }
}
