//! Seeded shape generators for the theorem checks.

use crate::geometry::{validate, AffineMap, GeometryError, Point, Polygon};
use rand::Rng;

pub fn poly(v: &[(f64, f64)]) -> Polygon {
    validate(&v.iter().map(|&(x, y)| Point::new(x, y)).collect::<Vec<_>>()).expect("built-in shape is valid")
}

/// Random rotation and translation; D and V are invariant under it.
pub fn rigid<R: Rng>(rng: &mut R, p: &Polygon) -> Polygon {
    let m = AffineMap::translation(Point::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .compose(&AffineMap::rotation(rng.gen_range(0.0..std::f64::consts::TAU)));
    validate(&p.vertices().iter().map(|&v| m.apply(v)).collect::<Vec<_>>()).expect("rigid image of a valid polygon")
}

fn sym<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    let x = rng.gen_range(lo..hi);
    if rng.gen_bool(0.5) {
        x
    } else {
        -x
    }
}

/// Star-shaped polygon with n vertices at sorted random angles, scaled to area 1.
pub fn random_polygon<R: Rng>(rng: &mut R, n: usize) -> Polygon {
    loop {
        let mut th: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect();
        th.sort_by(f64::total_cmp);
        let v: Vec<Point> = th
            .iter()
            .map(|&a| {
                let r = rng.gen_range(0.4..1.6);
                Point::new(r * a.cos(), r * a.sin())
            })
            .collect();
        let ok = validate(&v).and_then(|p| {
            // keep every interior angle away from 0 and π so the shape is not needle-like
            let n = p.len();
            for i in 0..n {
                let a = p.vertex(i + n - 1) - p.vertex(i);
                let b = p.vertex(i + 1) - p.vertex(i);
                let ang = a.cross(b).abs().atan2(a.dot(b));
                if ang < 0.15 || ang > std::f64::consts::PI - 0.05 {
                    return Err(GeometryError::DegenerateArea);
                }
            }
            p.with_area(1.0)
        });
        if let Ok(p) = ok {
            return p;
        }
    }
}

/// Isosceles triangle with apex angle `aperture` and the given area, apex on the y-axis.
pub fn isosceles(aperture: f64, area: f64) -> Polygon {
    let leg = (2.0 * area / aperture.sin()).sqrt();
    let (s, c) = (0.5 * aperture).sin_cos();
    poly(&[(-leg * s, 0.0), (leg * s, 0.0), (0.0, leg * c)])
}

/// Triangle with vertices A=(−a,0), B=(b,0), C=(0,h).
pub fn axis_triangle(a: f64, b: f64, h: f64) -> Polygon {
    poly(&[(-a, 0.0), (b, 0.0), (0.0, h)])
}

/// Quadrilateral D=(−a,0), C, B=(a,0), A with A above and C below the x-axis; the
/// diagonal DB is vertices (0, 2).
pub fn diagonal_quad(a: f64, c: (f64, f64), top: (f64, f64)) -> Polygon {
    poly(&[(-a, 0.0), c, (a, 0.0), top])
}

/// Off-diagonal x-offsets for the quadrilateral checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Offsets {
    /// both nonzero, any signs
    Any,
    /// both on the same side of the bisector
    Same,
    /// on opposite sides (the lower one may sit on the bisector)
    Opposite,
}

pub fn random_diagonal_quad<R: Rng>(rng: &mut R, offsets: Offsets) -> Polygon {
    let a = rng.gen_range(0.5..1.5);
    let xa = sym(rng, 0.1, 1.5);
    let xc = match offsets {
        Offsets::Any => sym(rng, 0.1, 1.5),
        Offsets::Same => xa.signum() * rng.gen_range(0.1..1.5),
        Offsets::Opposite => -xa.signum() * rng.gen_range(0.0..1.5),
    };
    let top = (xa, rng.gen_range(0.3..1.5));
    let bottom = (xc, -rng.gen_range(0.3..1.5));
    diagonal_quad(a, bottom, top)
}

pub fn rhombus(half_short: f64, half_long: f64) -> Polygon {
    poly(&[(0.0, -half_long), (half_short, 0.0), (0.0, half_long), (-half_short, 0.0)])
}

pub fn rectangle(w: f64, h: f64) -> Polygon {
    poly(&[(0.0, 0.0), (w, 0.0), (w, h), (0.0, h)])
}

/// Relabels a triangle so that side lengths satisfy |BC| > |AC| (strictly, by at least
/// 1%); returns (A, B, C) or None when the two candidate sides are too close.
pub fn label_bc_longer(p: &Polygon) -> Option<(Point, Point, Point)> {
    let v = p.vertices();
    let (a, b, c) = (v[0], v[1], v[2]);
    let (bc, ac) = (b.dist(c), a.dist(c));
    if (bc - ac).abs() < 0.01 * bc.max(ac) {
        None
    } else if bc > ac {
        Some((a, b, c))
    } else {
        Some((b, a, c))
    }
}

/// Relabels so that |AB| > |AC| strictly (at least 1%).
pub fn label_ab_longer(p: &Polygon) -> Option<(Point, Point, Point)> {
    let v = p.vertices();
    let (a, b, c) = (v[0], v[1], v[2]);
    let (ab, ac) = (a.dist(b), a.dist(c));
    if (ab - ac).abs() < 0.01 * ab.max(ac) {
        None
    } else if ab > ac {
        Some((a, b, c))
    } else {
        Some((a, c, b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn generators_are_valid_and_seeded() {
        let mut r1 = ChaCha8Rng::seed_from_u64(4);
        let mut r2 = ChaCha8Rng::seed_from_u64(4);
        for n in 3..=6 {
            let p = random_polygon(&mut r1, n);
            assert_eq!(p, random_polygon(&mut r2, n));
            assert!((p.area() - 1.0).abs() < 1e-12);
        }
        let t = isosceles(std::f64::consts::FRAC_PI_3, 1.0);
        let s: Vec<f64> = (0..3).map(|i| t.vertex(i).dist(t.vertex(i + 1))).collect();
        assert!((s[0] - s[1]).abs() < 1e-12 && (s[1] - s[2]).abs() < 1e-12);
        assert!((t.area() - 1.0).abs() < 1e-12);
        for o in [Offsets::Any, Offsets::Same, Offsets::Opposite] {
            let q = random_diagonal_quad(&mut r1, o);
            assert_eq!(q.len(), 4);
        }
    }
}
