//! Area-preserving deformation families. Each family is defined in a canonical pose
//! (a side or diagonal on the x-axis, the moving vertex above it); a prepared [`Flow`]
//! remembers the rigid motion from the caller's coordinates to that pose.

mod pipeline;

pub use pipeline::{compose_pipeline, Stage};

use crate::geometry::{AffineMap, GeometryError, HalfPlane, PiecewiseAffine, PlaneMap, Point, Polygon};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FlowError {
    #[error("time {t} outside the flow interval [{lo}, {hi}]")]
    FlowTimeOutOfRange { t: f64, lo: f64, hi: f64 },
    #[error("premise violated: {0}")]
    PremiseViolated(String),
    #[error("flow has no critical time")]
    NoCriticalTime,
    #[error("not a simple quadrilateral: {0}")]
    NotSimpleQuadrilateral(String),
    #[error("no diagonal separates the other two vertices")]
    NoInteriorDiagonal,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum FlowFamily {
    /// Stretch the height onto the strictly longest side, rescaling to keep the area.
    HeightStretch,
    /// Compress the height onto the strictly shortest side of a non-obtuse triangle.
    HeightCompress,
    /// Stretch the longer leg at the vertex with angle `alpha` (radians). Without an
    /// angle the vertex whose two legs are closest to equal is used.
    LegStretch {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        alpha: Option<f64>,
    },
    /// Horizontal shear above (and optionally below) an axis through two vertices:
    /// a side of a triangle or a diagonal of a quadrilateral. The vertex left of the
    /// directed axis moves onto the axis' perpendicular bisector at t = 1.
    VertexShear {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        axis: Option<[usize; 2]>,
        #[serde(default)]
        two_sided: bool,
    },
    /// Rhombus with its longer diagonal stretched further, or compressed toward the
    /// square when `compress` is set.
    RhombusDiagonal {
        #[serde(default)]
        compress: bool,
    },
    /// Rectangle with its longer side stretched further.
    RectangleStretch,
}

impl FlowFamily {
    pub const IDS: [&'static str; 6] =
        ["height_stretch", "height_compress", "leg_stretch", "vertex_shear", "rhombus_diagonal", "rectangle_stretch"];

    /// Family with default parameters from its identifier.
    pub fn from_id(id: &str) -> Option<FlowFamily> {
        Some(match id {
            "height_stretch" => FlowFamily::HeightStretch,
            "height_compress" => FlowFamily::HeightCompress,
            "leg_stretch" => FlowFamily::LegStretch { alpha: None },
            "vertex_shear" => FlowFamily::VertexShear { axis: None, two_sided: false },
            "rhombus_diagonal" => FlowFamily::RhombusDiagonal { compress: false },
            "rectangle_stretch" => FlowFamily::RectangleStretch,
            _ => return None,
        })
    }

    pub fn id(&self) -> &'static str {
        match self {
            FlowFamily::HeightStretch => "height_stretch",
            FlowFamily::HeightCompress => "height_compress",
            FlowFamily::LegStretch { .. } => "leg_stretch",
            FlowFamily::VertexShear { .. } => "vertex_shear",
            FlowFamily::RhombusDiagonal { .. } => "rhombus_diagonal",
            FlowFamily::RectangleStretch => "rectangle_stretch",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowSpec {
    #[serde(flatten)]
    pub family: FlowFamily,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
}

impl FlowSpec {
    pub fn new(family: FlowFamily) -> Self {
        FlowSpec { family, t_min: None, t_max: None }
    }

    pub fn with_range(family: FlowFamily, t_min: f64, t_max: f64) -> Self {
        FlowSpec { family, t_min: Some(t_min), t_max: Some(t_max) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Increasing,
    Decreasing,
}

/// The canonical-frame map family.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Kind {
    /// (x, y) ↦ (x/√(1+t), √(1+t)·y)
    Stretch,
    /// (x, y) ↦ (x/√(1−t), √(1−t)·y)
    Compress,
    /// (x, y) ↦ ((1+t)x − t·cot·y, y)/√(1+t)
    Leg { cot: f64 },
    /// (x, y) ↦ (x + σ(y)·t, y) with σ(y) = up·y above the axis and low·|y| below
    Shear { up: f64, low: f64 },
}

impl Kind {
    fn defined_at(&self, t: f64) -> bool {
        t.is_finite()
            && match self {
                Kind::Stretch | Kind::Leg { .. } => t > -1.0,
                Kind::Compress => t < 1.0,
                Kind::Shear { .. } => true,
            }
    }

    fn map(&self, t: f64) -> PlaneMap {
        let lin = |m: [[f64; 2]; 2]| AffineMap::new(m, Point::default()).expect("flow maps are unimodular");
        match *self {
            Kind::Stretch => {
                let s = (1.0 + t).sqrt();
                PlaneMap::Affine(lin([[1.0 / s, 0.0], [0.0, s]]))
            }
            Kind::Compress => {
                let s = (1.0 - t).sqrt();
                PlaneMap::Affine(lin([[1.0 / s, 0.0], [0.0, s]]))
            }
            Kind::Leg { cot } => {
                let s = (1.0 + t).sqrt();
                PlaneMap::Affine(lin([[(1.0 + t) / s, -t * cot / s], [0.0, 1.0 / s]]))
            }
            Kind::Shear { up, low } => PlaneMap::Piecewise(PiecewiseAffine {
                plane: HalfPlane::upper(),
                inner: lin([[1.0, up * t], [0.0, 1.0]]),
                outer: lin([[1.0, -low * t], [0.0, 1.0]]),
            }),
        }
    }

    fn field(&self, t: f64, p: Point) -> Point {
        match *self {
            Kind::Stretch => Point::new(-p.x, p.y) * (0.5 / (1.0 + t)),
            Kind::Compress => Point::new(p.x, -p.y) * (0.5 / (1.0 - t)),
            Kind::Leg { cot } => Point::new(p.x - 2.0 * cot * p.y, -p.y) * (0.5 / (1.0 + t)),
            Kind::Shear { up, low } => Point::new(sigma(up, low, p.y), 0.0),
        }
    }
}

#[inline]
fn sigma(up: f64, low: f64, y: f64) -> f64 {
    if y >= 0.0 {
        up * y
    } else {
        -low * y
    }
}

/// Horizontal velocity profile of a shear flow in its canonical frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShearProfile {
    pub up: f64,
    pub low: f64,
}

impl ShearProfile {
    pub fn sigma(&self, y: f64) -> f64 {
        sigma(self.up, self.low, y)
    }
}

/// A flow family bound to a base polygon.
#[derive(Debug, Clone)]
pub struct Flow {
    spec: FlowSpec,
    base: Polygon,
    /// world → canonical
    pose: AffineMap,
    kind: Kind,
    lo: f64,
    hi: f64,
    critical: f64,
    direction: Direction,
}

fn premise(msg: impl Into<String>) -> FlowError {
    FlowError::PremiseViolated(msg.into())
}

fn angle_at(p: &Polygon, i: usize) -> f64 {
    let n = p.len();
    let a = p.vertex(i + n - 1) - p.vertex(i);
    let b = p.vertex(i + 1) - p.vertex(i);
    a.cross(b).abs().atan2(a.dot(b))
}

fn side(p: &Polygon, i: usize) -> f64 {
    p.vertex(i).dist(p.vertex(i + 1))
}

/// Foot of the perpendicular from c onto the line ab.
fn foot(a: Point, b: Point, c: Point) -> Point {
    let d = b - a;
    a + d * ((c - a).dot(d) / d.dot(d))
}

impl Flow {
    pub fn prepare(spec: &FlowSpec, base: &Polygon) -> Result<Flow, FlowError> {
        let tie = 1e-12;
        let (pose, kind, lo, hi, critical, direction) = match spec.family {
            FlowFamily::HeightStretch | FlowFamily::HeightCompress => {
                if base.len() != 3 {
                    return Err(premise("triangle required"));
                }
                let stretch = spec.family == FlowFamily::HeightStretch;
                let lens = [side(base, 0), side(base, 1), side(base, 2)];
                // index i: side from vertex i to i+1
                let pick = (0..3)
                    .max_by(|&a, &b| {
                        let (x, y) = if stretch { (lens[a], lens[b]) } else { (lens[b], lens[a]) };
                        x.partial_cmp(&y).unwrap()
                    })
                    .unwrap();
                let others = [lens[(pick + 1) % 3], lens[(pick + 2) % 3]];
                let strict = others.iter().all(|&o| {
                    if stretch {
                        lens[pick] > o * (1.0 + tie)
                    } else {
                        lens[pick] < o * (1.0 - tie)
                    }
                });
                if !strict {
                    return Err(premise(if stretch { "|AB| must be strictly longest" } else { "|AB| must be strictly shortest" }));
                }
                if !stretch && (0..3).any(|i| angle_at(base, i) > std::f64::consts::FRAC_PI_2 * (1.0 + 1e-12)) {
                    return Err(premise("non-obtuse triangle required"));
                }
                let (a, b, c) = (base.vertex(pick), base.vertex(pick + 1), base.vertex(pick + 2));
                let pose = AffineMap::frame(foot(a, b, c), b - a);
                let (ca, cb, cc) = (pose.apply(a), pose.apply(b), pose.apply(c));
                let ab = lens[pick];
                let yc = cc.y;
                if stretch {
                    // B is the endpoint farther from C
                    let xb = ca.x.abs().max(cb.x.abs());
                    let t1 = (ab * ab - xb * xb).sqrt() / yc - 1.0;
                    let lo = spec.t_min.unwrap_or(-1.0).max(-1.0);
                    (pose, Kind::Stretch, lo, spec.t_max.unwrap_or(t1), t1, Direction::Increasing)
                } else {
                    let xb = ca.x.abs().min(cb.x.abs());
                    let t2 = 1.0 - (ab * ab - xb * xb).sqrt() / yc;
                    (pose, Kind::Compress, spec.t_min.unwrap_or(f64::NEG_INFINITY), spec.t_max.unwrap_or(t2).min(1.0), t2, Direction::Increasing)
                }
            }
            FlowFamily::LegStretch { alpha } => {
                if base.len() != 3 {
                    return Err(premise("triangle required"));
                }
                let apex = match alpha {
                    Some(al) => (0..3)
                        .filter(|&i| (angle_at(base, i) - al).abs() < 1e-9)
                        .min_by(|&a, &b| leg_ratio(base, a).partial_cmp(&leg_ratio(base, b)).unwrap())
                        .ok_or_else(|| premise(format!("no vertex has angle {al}")))?,
                    None => (0..3).min_by(|&a, &b| leg_ratio(base, a).partial_cmp(&leg_ratio(base, b)).unwrap()).unwrap(),
                };
                let a = base.vertex(apex);
                let (next, prev) = (base.vertex(apex + 1), base.vertex(apex + 2));
                // the longer leg lies on the positive x-axis and is the one stretched
                let pose = if next.dist(a) >= prev.dist(a) {
                    AffineMap::frame(a, next - a)
                } else {
                    AffineMap::flip_y().compose(&AffineMap::frame(a, prev - a))
                };
                let ang = angle_at(base, apex);
                let kind = Kind::Leg { cot: ang.cos() / ang.sin() };
                (pose, kind, spec.t_min.unwrap_or(0.0).max(-1.0), spec.t_max.unwrap_or(f64::INFINITY), f64::INFINITY, Direction::Decreasing)
            }
            FlowFamily::VertexShear { axis, two_sided } => {
                let n = base.len();
                if n != 3 && n != 4 {
                    return Err(premise("triangle or quadrilateral required"));
                }
                let [i, j] = axis.unwrap_or(if n == 3 { [0, 1] } else { [0, 2] });
                if i >= n || j >= n || i == j {
                    return Err(premise("axis must name two distinct vertices"));
                }
                let gap = (j + n - i) % n;
                if n == 3 && gap != 1 && gap != 2 {
                    return Err(premise("axis must be a side"));
                }
                if n == 4 && gap != 2 {
                    return Err(premise("axis must be a diagonal"));
                }
                let (p, q) = (base.vertex(i), base.vertex(j));
                let pose = AffineMap::frame(p.mid(q), q - p);
                let scale = base.diameter();
                let mut upper = None;
                let mut lower = None;
                for k in (0..n).filter(|&k| k != i && k != j) {
                    let c = pose.apply(base.vertex(k));
                    if c.y > 1e-12 * scale {
                        upper = Some(c);
                    } else if c.y < -1e-12 * scale {
                        lower = Some(c);
                    } else {
                        return Err(premise("off-axis vertices must not lie on the axis"));
                    }
                }
                let u = upper.ok_or_else(|| premise("a vertex must lie left of the directed axis"))?;
                let up = -u.x / u.y;
                let low = match lower {
                    None if n == 4 => return Err(premise("the axis diagonal must separate the other two vertices")),
                    None => 0.0,
                    Some(l) if two_sided => l.x / l.y,
                    Some(l) => {
                        if u.x * l.x > 1e-24 * scale * scale {
                            return Err(premise("the fixed vertex must not lie on the moving vertex's side of the bisector"));
                        }
                        0.0
                    }
                };
                (pose, Kind::Shear { up, low }, spec.t_min.unwrap_or(f64::NEG_INFINITY), spec.t_max.unwrap_or(1.0), 1.0, Direction::Increasing)
            }
            FlowFamily::RhombusDiagonal { compress } => {
                if base.len() != 4 {
                    return Err(premise("rhombus required"));
                }
                let s0 = side(base, 0);
                if (1..4).any(|i| (side(base, i) - s0).abs() > 1e-9 * s0) {
                    return Err(premise("rhombus required"));
                }
                let d1 = base.vertex(2) - base.vertex(0);
                let d2 = base.vertex(3) - base.vertex(1);
                let (short, long) = if d1.norm() <= d2.norm() { (d1, d2) } else { (d2, d1) };
                let center = base.vertex(0).mid(base.vertex(2));
                let pose = AffineMap::frame(center, short);
                if compress {
                    let tc = 1.0 - short.norm() / long.norm();
                    let hi = spec.t_max.unwrap_or(tc).min(1.0);
                    (pose, Kind::Compress, spec.t_min.unwrap_or(0.0), hi, tc, Direction::Increasing)
                } else {
                    (pose, Kind::Stretch, spec.t_min.unwrap_or(0.0).max(-1.0), spec.t_max.unwrap_or(f64::INFINITY), f64::INFINITY, Direction::Decreasing)
                }
            }
            FlowFamily::RectangleStretch => {
                if base.len() != 4 || (0..4).any(|i| (angle_at(base, i) - std::f64::consts::FRAC_PI_2).abs() > 1e-9) {
                    return Err(premise("rectangle required"));
                }
                let e0 = base.vertex(1) - base.vertex(0);
                let e1 = base.vertex(2) - base.vertex(1);
                let short = if e0.norm() >= e1.norm() { e1 } else { e0 };
                let pose = AffineMap::frame(base.centroid(), short);
                (pose, Kind::Stretch, spec.t_min.unwrap_or(0.0).max(-1.0), spec.t_max.unwrap_or(f64::INFINITY), f64::INFINITY, Direction::Decreasing)
            }
        };
        if !(lo <= hi) {
            return Err(FlowError::FlowTimeOutOfRange { t: lo, lo, hi });
        }
        Ok(Flow { spec: spec.clone(), base: base.clone(), pose, kind, lo, hi, critical, direction })
    }

    pub fn spec(&self) -> &FlowSpec {
        &self.spec
    }

    pub fn base(&self) -> &Polygon {
        &self.base
    }

    /// Closed interval of admissible times (an open end where the map degenerates).
    pub fn interval(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    /// Direction in which D moves as t increases over the interval.
    pub fn direction(&self) -> Direction {
        self.direction
    }

    /// The time at which the family reaches its terminal shape; +∞ when unbounded.
    pub fn critical_time(&self) -> f64 {
        self.critical
    }

    /// Rigid motion from caller coordinates to the canonical pose.
    pub fn pose(&self) -> &AffineMap {
        &self.pose
    }

    pub fn shear_profile(&self) -> Option<ShearProfile> {
        match self.kind {
            Kind::Shear { up, low } => Some(ShearProfile { up, low }),
            _ => None,
        }
    }

    pub fn check_time(&self, t: f64) -> Result<(), FlowError> {
        if t >= self.lo && t <= self.hi && self.kind.defined_at(t) {
            Ok(())
        } else {
            Err(FlowError::FlowTimeOutOfRange { t, lo: self.lo, hi: self.hi })
        }
    }

    /// F_t in caller coordinates.
    pub fn map_at(&self, t: f64) -> Result<PlaneMap, FlowError> {
        self.check_time(t)?;
        Ok(self.kind.map(t).conjugate(&self.pose))
    }

    pub fn domain_at(&self, t: f64) -> Result<Polygon, FlowError> {
        self.check_time(t)?;
        self.domain_at_unchecked(t)
    }

    /// F_t(base) for any t where the map is defined, ignoring the theorem interval.
    /// Used for finite differences straddling an interval end.
    pub fn domain_at_unchecked(&self, t: f64) -> Result<Polygon, FlowError> {
        if !self.kind.defined_at(t) {
            return Err(FlowError::FlowTimeOutOfRange { t, lo: self.lo, hi: self.hi });
        }
        Ok(self.kind.map(t).conjugate(&self.pose).apply_polygon(&self.base)?)
    }

    /// η(t, x) in caller coordinates.
    pub fn field_at(&self, t: f64, x: Point) -> Result<Point, FlowError> {
        self.check_time(t)?;
        let v = self.kind.field(t, self.pose.apply(x));
        Ok(self.pose.inverse().linear_apply(v))
    }
}

fn leg_ratio(p: &Polygon, i: usize) -> f64 {
    let a = p.vertex(i);
    let (l1, l2) = (a.dist(p.vertex(i + 1)), a.dist(p.vertex(i + 2)));
    l1.max(l2) / l1.min(l2)
}

/// Free-function form of [`Flow::domain_at`].
pub fn domain_at(spec: &FlowSpec, base: &Polygon, t: f64) -> Result<Polygon, FlowError> {
    Flow::prepare(spec, base)?.domain_at(t)
}

/// Free-function form of [`Flow::field_at`].
pub fn field_at(spec: &FlowSpec, base: &Polygon, t: f64, x: Point) -> Result<Point, FlowError> {
    Flow::prepare(spec, base)?.field_at(t, x)
}

/// The family's terminal time, or `NoCriticalTime` for families that run forever.
pub fn critical_time(spec: &FlowSpec, base: &Polygon) -> Result<f64, FlowError> {
    let t = Flow::prepare(spec, base)?.critical_time();
    if t.is_finite() {
        Ok(t)
    } else {
        Err(FlowError::NoCriticalTime)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::validate;

    fn poly(v: &[(f64, f64)]) -> Polygon {
        validate(&v.iter().map(|&(x, y)| Point::new(x, y)).collect::<Vec<_>>()).unwrap()
    }

    fn fig1() -> Polygon {
        poly(&[(-0.4, 0.0), (1.2, 0.0), (0.0, 0.5)])
    }

    fn shear_tri() -> Polygon {
        // A = (-b, h) with b = 1, h = 2 over the side from (-a, 0) to (a, 0)
        poly(&[(-1.5, 0.0), (1.5, 0.0), (-1.0, 2.0)])
    }

    fn all_flows() -> Vec<(FlowSpec, Polygon)> {
        let rh = poly(&[(0.0, -1.4), (0.8, 0.0), (0.0, 1.4), (-0.8, 0.0)]);
        vec![
            (FlowSpec::new(FlowFamily::HeightStretch), fig1()),
            (FlowSpec::new(FlowFamily::HeightCompress), poly(&[(-0.3, 0.0), (0.25, 0.0), (0.05, 1.0)])),
            (FlowSpec::new(FlowFamily::LegStretch { alpha: None }), poly(&[(0.0, 0.0), (1.0, 0.0), (0.6, 0.8)])),
            (FlowSpec::new(FlowFamily::VertexShear { axis: None, two_sided: false }), shear_tri()),
            (
                FlowSpec::new(FlowFamily::VertexShear { axis: None, two_sided: true }),
                poly(&[(-1.0, 0.0), (-0.3, -2.0), (1.0, 0.0), (-0.5, 1.0)]),
            ),
            (FlowSpec::new(FlowFamily::RhombusDiagonal { compress: false }), rh.clone()),
            (FlowSpec::new(FlowFamily::RhombusDiagonal { compress: true }), rh),
            (FlowSpec::new(FlowFamily::RectangleStretch), poly(&[(0.0, 0.0), (2.0, 0.0), (2.0, 1.0), (0.0, 1.0)])),
        ]
    }

    #[test]
    fn identity_at_zero_and_area_preserved() {
        for (spec, base) in all_flows() {
            let f = Flow::prepare(&spec, &base).unwrap();
            let d0 = f.domain_at(0.0).unwrap();
            for (a, b) in d0.vertices().iter().zip(base.vertices()) {
                assert!(a.dist(*b) < 1e-12, "{spec:?}");
            }
            let (lo, hi) = f.interval();
            let t = if hi.is_finite() { 0.5 * hi.max(0.0) + 0.5 * lo.max(-0.5) } else { 0.7 };
            let dt = f.domain_at(t).unwrap();
            assert!((dt.area() / base.area() - 1.0).abs() < 1e-12, "{spec:?}");
        }
    }

    #[test]
    fn field_generates_map() {
        for (spec, base) in all_flows() {
            let f = Flow::prepare(&spec, &base).unwrap();
            let (lo, hi) = f.interval();
            let t = if hi.is_finite() { 0.5 * hi.max(0.0) + 0.5 * lo.max(-0.5) } else { 0.7 };
            let h = 1e-6;
            let (m0, mp, mm) = (f.map_at(t).unwrap(), f.kind.map(t + h).conjugate(&f.pose), f.kind.map(t - h).conjugate(&f.pose));
            for k in 0..20 {
                let x = base.centroid() + Point::new((k as f64 * 0.77).sin(), (k as f64 * 1.3).cos()) * 0.3;
                let fd = (mp.apply(x) - mm.apply(x)) * (0.5 / h);
                let eta = f.field_at(t, m0.apply(x)).unwrap();
                assert!((fd - eta).norm() <= 1e-7 * eta.norm().max(1e-3), "{spec:?}: {fd:?} vs {eta:?}");
            }
        }
    }

    #[test]
    fn height_stretch_critical_time() {
        let f = Flow::prepare(&FlowSpec::new(FlowFamily::HeightStretch), &fig1()).unwrap();
        let t1 = f.critical_time();
        assert!((t1 - (4.48f64.sqrt() - 1.0)).abs() < 1e-12);
        let p = f.domain_at(t1).unwrap();
        let l: Vec<f64> = (0..3).map(|i| side(&p, i)).collect();
        let mut s = l.clone();
        s.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((s[2] - s[1]).abs() < 1e-10);
    }

    #[test]
    fn equilateral_is_rejected() {
        let eq = poly(&[(0.0, 0.0), (1.0, 0.0), (0.5, 3f64.sqrt() / 2.0)]);
        let e = Flow::prepare(&FlowSpec::new(FlowFamily::HeightStretch), &eq).unwrap_err();
        assert!(matches!(e, FlowError::PremiseViolated(ref m) if m.contains("strictly longest")));
    }

    #[test]
    fn obtuse_rejected_by_compress() {
        let t = poly(&[(0.0, 0.0), (1.0, 0.0), (-0.8, 1.5)]);
        let e = Flow::prepare(&FlowSpec::new(FlowFamily::HeightCompress), &t).unwrap_err();
        assert!(e.to_string().contains("non-obtuse triangle required"), "{e}");
    }

    #[test]
    fn shear_field_and_terminal_shape() {
        let spec = FlowSpec::new(FlowFamily::VertexShear { axis: None, two_sided: false });
        let f = Flow::prepare(&spec, &shear_tri()).unwrap();
        let v = f.field_at(0.0, Point::new(0.3, 1.0)).unwrap();
        assert!((v - Point::new(0.5, 0.0)).norm() < 1e-15);
        assert_eq!(f.critical_time(), 1.0);
        let p = f.domain_at(1.0).unwrap();
        let apex = p.vertex(2);
        assert!((apex.dist(p.vertex(0)) - apex.dist(p.vertex(1))).abs() < 1e-12);
    }

    #[test]
    fn time_range_enforced() {
        let f = Flow::prepare(&FlowSpec::new(FlowFamily::HeightStretch), &fig1()).unwrap();
        assert!(matches!(f.domain_at(5.0), Err(FlowError::FlowTimeOutOfRange { .. })));
        assert!(f.domain_at(-1.0).is_err());
        assert!(f.domain_at_unchecked(f.critical_time() + 0.1).is_ok());
    }

    #[test]
    fn spec_json_round_trip() {
        let s = FlowSpec::with_range(FlowFamily::VertexShear { axis: Some([1, 3]), two_sided: true }, -1.0, 1.0);
        let j = serde_json::to_string(&s).unwrap();
        assert!(j.contains("\"family\":\"vertex_shear\""));
        assert_eq!(serde_json::from_str::<FlowSpec>(&j).unwrap(), s);
        let h: FlowSpec = serde_json::from_str(r#"{"family":"height_stretch"}"#).unwrap();
        assert_eq!(h, FlowSpec::new(FlowFamily::HeightStretch));
    }
}
