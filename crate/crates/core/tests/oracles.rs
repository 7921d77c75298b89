//! Quadrature results against independent estimates: Monte Carlo, radial reductions
//! and closed-form constants.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use riesz_shapeflow::energy::{energy, potential};
use riesz_shapeflow::geometry::{validate, Point, Polygon, Triangle};
use riesz_shapeflow::kernel::KernelSpec;
use riesz_shapeflow::quadrature::{mc_energy, mc_potential, pair_integral, QuadratureConfig};
use riesz_shapeflow::verify::instances::random_polygon;

fn poly(v: &[(f64, f64)]) -> Polygon {
    validate(&v.iter().map(|&(x, y)| Point::new(x, y)).collect::<Vec<_>>()).unwrap()
}

fn square() -> Polygon {
    poly(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)])
}

fn kernels() -> Vec<KernelSpec> {
    vec![
        KernelSpec::riesz(0.5).unwrap(),
        KernelSpec::riesz(1.0).unwrap(),
        KernelSpec::riesz(1.5).unwrap(),
        KernelSpec::NegLinear,
        KernelSpec::exp_decay(1.0).unwrap(),
    ]
}

// uniform point in a triangle by folding the unit square
fn in_triangle(t: &Triangle, rng: &mut ChaCha8Rng) -> Point {
    let (mut s, mut u): (f64, f64) = (rng.gen(), rng.gen());
    if s + u > 1.0 {
        s = 1.0 - s;
        u = 1.0 - u;
    }
    t.from_reference(s, u)
}

#[test]
fn unit_square_neglinear_closed_form() {
    let exact = -(2.0 + 2f64.sqrt() + 5.0 * 1f64.asinh()) / 15.0;
    let e = energy(&square(), &KernelSpec::NegLinear, &QuadratureConfig::default()).unwrap();
    assert!((e.value - exact).abs() <= 1e-9 * exact.abs(), "{} vs {exact}", e.value);
}

#[test]
fn far_pair_matches_six_dimensional_sampling() {
    let t1 = Triangle::ccw(Point::new(0.0, 0.0), Point::new(1.0, 0.2), Point::new(0.3, 0.9));
    let t2 = Triangle::ccw(Point::new(4.0, 1.0), Point::new(5.2, 1.5), Point::new(4.4, 2.7));
    let k = KernelSpec::NegLinear;
    let q = pair_integral(&t1, &t2, &k, &QuadratureConfig::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let n = 400_000;
    let (mut s, mut s2) = (0.0, 0.0);
    for _ in 0..n {
        let v = k.value(in_triangle(&t1, &mut rng).dist(in_triangle(&t2, &mut rng)));
        s += v;
        s2 += v * v;
    }
    let area = t1.area() * t2.area();
    let mean = s / n as f64;
    let se = ((s2 / n as f64 - mean * mean) / n as f64).sqrt();
    assert!((q.value - area * mean).abs() <= 3.0 * area * se + q.error_estimate, "{} vs {}", q.value, area * mean);
}

#[test]
fn reference_self_pair_matches_monte_carlo() {
    let t = Triangle::new(Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.0, 1.0));
    let k = KernelSpec::riesz(0.5).unwrap();
    let q = pair_integral(&t, &t, &k, &QuadratureConfig::default()).unwrap();
    let mc = mc_energy(&poly(&[(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)]), &k, 1_000_000, 3);
    assert!((q.value - mc.mean).abs() <= 3.0 * mc.std_error + q.error_estimate, "{} vs {} ± {}", q.value, mc.mean, mc.std_error);
}

#[test]
fn energy_agrees_with_monte_carlo_on_random_polygons() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let cfg = QuadratureConfig { rel_tol: 1e-6, ..QuadratureConfig::default() };
    for i in 0..4 {
        let p = random_polygon(&mut rng, 3 + i);
        for (j, k) in kernels().iter().enumerate() {
            let e = energy(&p, k, &cfg).unwrap();
            let mc = mc_energy(&p, k, 200_000, (10 * i + j) as u64);
            let gap = (e.value - mc.mean).abs();
            // twenty comparisons at once: 4σ keeps the family-wise false alarm rate near 0.1%
            assert!(gap <= 4.0 * mc.std_error + e.error_estimate, "{} {:?}: {} vs {} ± {}", k.name(), p, e.value, mc.mean, mc.std_error);
        }
    }
}

#[test]
fn potential_agrees_with_monte_carlo() {
    let p = poly(&[(-1.0, 0.0), (1.4, 0.0), (0.3, 1.2), (-0.6, 0.9)]);
    let probes = [Point::new(0.1, 0.4), Point::new(-1.0, 0.0), Point::new(0.2, 0.0), Point::new(2.0, 1.5)];
    let cfg = QuadratureConfig::default();
    for k in kernels() {
        for (i, x) in probes.iter().enumerate() {
            let v = potential(*x, &p, &k, &cfg).unwrap();
            let mc = mc_potential(*x, &p, &k, 200_000, i as u64);
            assert!((v.value - mc.mean).abs() <= 3.0 * mc.std_error + v.error_estimate, "{} at {x:?}: {} vs {} ± {}", k.name(), v.value, mc.mean, mc.std_error);
        }
    }
}

// −∫ r dA over the unit square seen from its center, in polar form: −∫ R(θ)³/3 dθ
fn center_radial_oracle() -> f64 {
    let n = 20_000;
    let h = std::f64::consts::FRAC_PI_4 / n as f64;
    let f = |th: f64| -(0.5 / th.cos()).powi(3) / 3.0;
    let mut s = f(0.0) + f(std::f64::consts::FRAC_PI_4);
    for i in 1..n {
        s += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    8.0 * s * h / 3.0
}

#[test]
fn square_center_potential_radial_oracle() {
    let oracle = center_radial_oracle();
    let c = Point::new(0.5, 0.5);
    let v = potential(c, &square(), &KernelSpec::NegLinear, &QuadratureConfig::default()).unwrap();
    assert!((v.value - oracle).abs() < 1e-10 * oracle.abs());
    let mc = mc_potential(c, &square(), &KernelSpec::NegLinear, 200_000, 1);
    assert!((mc.mean - oracle).abs() <= 3.0 * mc.std_error);
}

#[test]
fn monte_carlo_is_stable_for_strong_singularity() {
    let p = poly(&[(0.0, 0.0), (2.0, 0.0), (1.3, 1.1)]);
    let k = KernelSpec::riesz(1.5).unwrap();
    let a = mc_energy(&p, &k, 200_000, 1);
    let b = mc_energy(&p, &k, 200_000, 2);
    assert!(a.mean.is_finite() && a.std_error > 0.0);
    assert!((a.mean - b.mean).abs() <= 4.0 * (a.std_error.powi(2) + b.std_error.powi(2)).sqrt());
    let again = mc_energy(&p, &k, 200_000, 1);
    assert_eq!(a.mean.to_bits(), again.mean.to_bits());
    assert_eq!(a.std_error.to_bits(), again.std_error.to_bits());
}

#[test]
fn mirror_points_of_square_agree() {
    let k = KernelSpec::riesz(1.0).unwrap();
    let a = mc_potential(Point::new(0.2, 0.7), &square(), &k, 200_000, 4);
    let b = mc_potential(Point::new(0.7, 0.2), &square(), &k, 200_000, 5);
    assert!((a.mean - b.mean).abs() <= 3.0 * (a.std_error.powi(2) + b.std_error.powi(2)).sqrt());
}
