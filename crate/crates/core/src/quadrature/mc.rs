//! Monte-Carlo oracles. Sampling is split into fixed-size chunks; chunk `c` draws from
//! ChaCha8 keyed by the seed with stream number `c`, so results do not depend on the
//! number of worker threads.

use super::CompensatedSum;
use crate::geometry::{Point, Polygon};
use crate::kernel::KernelSpec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

const CHUNK: u64 = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: u64,
    pub seed: u64,
}

/// Uniform point in the polygon by rejection from its bounding box.
pub fn sample_in_polygon<R: Rng>(poly: &Polygon, rng: &mut R) -> Point {
    let (lo, hi) = poly.bounding_box();
    loop {
        let p = Point::new(rng.gen_range(lo.x..hi.x), rng.gen_range(lo.y..hi.y));
        if inside(poly, p) {
            return p;
        }
    }
}

// plain crossing test; the boundary has measure zero
fn inside(poly: &Polygon, p: Point) -> bool {
    let mut c = false;
    for (a, b) in poly.edges() {
        if (a.y > p.y) != (b.y > p.y) && p.x < a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x) {
            c = !c;
        }
    }
    c
}

fn chunked<F>(samples: u64, seed: u64, scale: f64, draw: F) -> McEstimate
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    let chunks = samples.div_ceil(CHUNK);
    let parts: Vec<(f64, f64, u64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c);
            let n = CHUNK.min(samples - c * CHUNK);
            let mut s = CompensatedSum::new();
            let mut s2 = CompensatedSum::new();
            for _ in 0..n {
                let v = draw(&mut rng);
                s.add(v);
                s2.add(v * v);
            }
            (s.value(), s2.value(), n)
        })
        .collect();
    let mut s = CompensatedSum::new();
    let mut s2 = CompensatedSum::new();
    for (a, b, _) in &parts {
        s.add(*a);
        s2.add(*b);
    }
    let n = samples as f64;
    let mean = s.value() / n;
    let var = ((s2.value() / n - mean * mean) * n / (n - 1.0)).max(0.0);
    McEstimate { mean: scale * mean, std_error: scale * (var / n).sqrt(), samples, seed }
}

/// Distances along the ray x + r·u (r > 0) at which it crosses the boundary, sorted.
fn crossings(poly: &Polygon, x: Point, u: Point, out: &mut Vec<f64>) {
    out.clear();
    for (a, b) in poly.edges() {
        let e = b - a;
        let den = u.cross(e);
        if den == 0.0 {
            continue;
        }
        let w = a - x;
        let r = w.cross(e) / den;
        let s = w.cross(u) / den;
        if r > 0.0 && (0.0..1.0).contains(&s) {
            out.push(r);
        }
    }
    out.sort_by(f64::total_cmp);
}

/// ∫ K(r) r dr over the part of the ray inside the polygon, as a signed sum of radial
/// moments Φ at the crossings. `inside` says whether the ray starts inside.
fn ray_moment(kernel: &KernelSpec, rs: &[f64], inside: bool) -> f64 {
    let mut s = 0.0;
    let mut sign = if inside { 1.0 } else { -1.0 };
    for &r in rs {
        s += sign * kernel.radial_moment(r);
        sign = -sign;
    }
    s
}

fn direction<R: Rng>(rng: &mut R) -> Point {
    let th = rng.gen_range(0.0..std::f64::consts::TAU);
    Point::new(th.cos(), th.sin())
}

/// D(Ω) = |Ω| · 2π · E[Φ-sum along a random ray from a uniform interior point]. Each
/// sample is bounded for every admissible kernel, unlike K(|X − Y|) for Riesz α ≥ 1.
pub fn mc_energy(poly: &Polygon, kernel: &KernelSpec, samples: u64, seed: u64) -> McEstimate {
    let a = poly.area();
    chunked(samples, seed, a * std::f64::consts::TAU, |rng| {
        let mut rs = Vec::with_capacity(8);
        let x = sample_in_polygon(poly, rng);
        crossings(poly, x, direction(rng), &mut rs);
        ray_moment(kernel, &rs, true)
    })
}

/// V_Ω(x) = 2π · E[Φ-sum along a random ray from x]; x may lie anywhere, including
/// on the boundary.
pub fn mc_potential(x: Point, poly: &Polygon, kernel: &KernelSpec, samples: u64, seed: u64) -> McEstimate {
    let eps = 1e-12 * poly.diameter();
    chunked(samples, seed, std::f64::consts::TAU, |rng| {
        let mut rs = Vec::with_capacity(8);
        let u = direction(rng);
        crossings(poly, x, u, &mut rs);
        rs.retain(|&r| r > eps);
        let first = rs.first().copied().unwrap_or(1.0);
        ray_moment(kernel, &rs, inside(poly, x + u * (0.5 * first)))
    })
}
