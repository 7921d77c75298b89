use super::{orient, GeometryError, Point, Polygon};
use serde::{Deserialize, Serialize};

/// x ↦ linear·x + shift with an invertible linear part.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineMap {
    linear: [[f64; 2]; 2],
    shift: Point,
}

impl AffineMap {
    pub fn new(linear: [[f64; 2]; 2], shift: Point) -> Result<Self, GeometryError> {
        let m = AffineMap { linear, shift };
        let d = m.det();
        if !(d.is_finite() && d != 0.0) || !shift.is_finite() {
            return Err(GeometryError::SingularMap);
        }
        Ok(m)
    }

    pub fn identity() -> Self {
        AffineMap { linear: [[1.0, 0.0], [0.0, 1.0]], shift: Point::default() }
    }

    pub fn translation(d: Point) -> Self {
        AffineMap { linear: [[1.0, 0.0], [0.0, 1.0]], shift: d }
    }

    pub fn rotation(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        AffineMap { linear: [[c, -s], [s, c]], shift: Point::default() }
    }

    /// Reflection across the x-axis.
    pub fn flip_y() -> Self {
        AffineMap { linear: [[1.0, 0.0], [0.0, -1.0]], shift: Point::default() }
    }

    pub fn diagonal(sx: f64, sy: f64) -> Result<Self, GeometryError> {
        AffineMap::new([[sx, 0.0], [0.0, sy]], Point::default())
    }

    /// Rigid motion sending `origin` to 0 and the direction `dir` to the positive x-axis.
    pub fn frame(origin: Point, dir: Point) -> Self {
        let u = dir * (1.0 / dir.norm());
        let lin = [[u.x, u.y], [-u.y, u.x]];
        let m = AffineMap { linear: lin, shift: Point::default() };
        let o = m.linear_apply(origin);
        AffineMap { linear: lin, shift: -o }
    }

    pub fn linear(&self) -> [[f64; 2]; 2] {
        self.linear
    }

    pub fn shift(&self) -> Point {
        self.shift
    }

    pub fn det(&self) -> f64 {
        self.linear[0][0] * self.linear[1][1] - self.linear[0][1] * self.linear[1][0]
    }

    pub fn linear_apply(&self, p: Point) -> Point {
        Point::new(
            self.linear[0][0] * p.x + self.linear[0][1] * p.y,
            self.linear[1][0] * p.x + self.linear[1][1] * p.y,
        )
    }

    pub fn apply(&self, p: Point) -> Point {
        self.linear_apply(p) + self.shift
    }

    /// self ∘ other
    pub fn compose(&self, other: &AffineMap) -> AffineMap {
        let a = self.linear;
        let b = other.linear;
        let lin = [
            [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
            [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
        ];
        AffineMap { linear: lin, shift: self.apply(other.shift) }
    }

    pub fn inverse(&self) -> AffineMap {
        let d = self.det();
        let a = self.linear;
        let lin = [[a[1][1] / d, -a[0][1] / d], [-a[1][0] / d, a[0][0] / d]];
        let m = AffineMap { linear: lin, shift: Point::default() };
        let s = m.linear_apply(self.shift);
        AffineMap { linear: lin, shift: -s }
    }
}

/// The closed half-plane normal·x ≥ offset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HalfPlane {
    pub normal: Point,
    pub offset: f64,
}

impl HalfPlane {
    pub fn upper() -> Self {
        HalfPlane { normal: Point::new(0.0, 1.0), offset: 0.0 }
    }
    pub fn signed(&self, p: Point) -> f64 {
        self.normal.dot(p) - self.offset
    }
}

/// Two affine pieces glued along a line: `inner` on the half-plane, `outer` off it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseAffine {
    pub plane: HalfPlane,
    pub inner: AffineMap,
    pub outer: AffineMap,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PlaneMap {
    Affine(AffineMap),
    Piecewise(PiecewiseAffine),
}

impl PlaneMap {
    pub fn apply(&self, p: Point) -> Point {
        match self {
            PlaneMap::Affine(m) => m.apply(p),
            PlaneMap::Piecewise(pw) => {
                if pw.plane.signed(p) >= 0.0 {
                    pw.inner.apply(p)
                } else {
                    pw.outer.apply(p)
                }
            }
        }
    }

    /// outer ∘ self ∘ inner, e.g. a canonical-frame map moved to world coordinates.
    pub fn conjugate(&self, to_frame: &AffineMap) -> PlaneMap {
        let back = to_frame.inverse();
        match self {
            PlaneMap::Affine(m) => PlaneMap::Affine(back.compose(&m.compose(to_frame))),
            PlaneMap::Piecewise(pw) => {
                // pull the half-plane back through to_frame: n·(Lx + s) ≥ c
                let l = to_frame.linear();
                let n = pw.plane.normal;
                let normal = Point::new(n.x * l[0][0] + n.y * l[1][0], n.x * l[0][1] + n.y * l[1][1]);
                let offset = pw.plane.offset - n.dot(to_frame.shift());
                PlaneMap::Piecewise(PiecewiseAffine {
                    plane: HalfPlane { normal, offset },
                    inner: back.compose(&pw.inner.compose(to_frame)),
                    outer: back.compose(&pw.outer.compose(to_frame)),
                })
            }
        }
    }

    pub fn apply_polygon(&self, poly: &Polygon) -> Result<Polygon, GeometryError> {
        let degenerate = |e| GeometryError::ImageDegenerate(Box::new(e));
        match self {
            PlaneMap::Affine(m) => {
                Polygon::new(poly.vertices().iter().map(|&p| m.apply(p)).collect()).map_err(degenerate)
            }
            PlaneMap::Piecewise(pw) => {
                let scale = poly.diameter().max(poly.vertices().iter().map(|p| p.norm()).fold(0.0, f64::max));
                let on_line = 1e-14 * scale;
                let n = poly.len();
                let mut out: Vec<(Point, bool)> = Vec::with_capacity(n + 2);
                for i in 0..n {
                    let (p, q) = (poly.vertex(i), poly.vertex(i + 1));
                    let (sp, sq) = (pw.plane.signed(p), pw.plane.signed(q));
                    let img = if sp.abs() <= on_line {
                        let (a, b) = (pw.inner.apply(p), pw.outer.apply(p));
                        let gap = a.dist(b);
                        if gap > 1e-12 * scale.max(1.0) {
                            return Err(GeometryError::MapDiscontinuous(i, gap));
                        }
                        a
                    } else {
                        self.apply(p)
                    };
                    out.push((img, false));
                    if (sp > on_line && sq < -on_line) || (sp < -on_line && sq > on_line) {
                        // the edge crosses the dividing line between vertices
                        let x = p + (q - p) * (sp / (sp - sq));
                        out.push((pw.inner.apply(x), true));
                    }
                }
                let imgs: Vec<Point> = out.iter().map(|v| v.0).collect();
                let d = imgs.iter().enumerate().fold(0.0f64, |m, (i, a)| {
                    imgs[i + 1..].iter().fold(m, |m, b| m.max(a.dist(*b)))
                });
                let m = out.len();
                let kept: Vec<Point> = (0..m)
                    .filter(|&k| {
                        !out[k].1
                            || orient(out[(k + m - 1) % m].0, out[k].0, out[(k + 1) % m].0).abs()
                                > 2e-14 * d * d
                    })
                    .map(|k| out[k].0)
                    .collect();
                Polygon::new(kept).map_err(degenerate)
            }
        }
    }
}
