use super::QuadratureError;
use std::sync::OnceLock;

/// Nodes and weights on [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Largest order computed internally (the public entry point is limited to 30).
pub const MAX_INTERNAL_ORDER: usize = 64;

fn legendre_rule(n: usize) -> GaussRule {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess, then Newton on P_n
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pm) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    GaussRule { nodes, weights }
}

fn table() -> &'static Vec<GaussRule> {
    static TABLE: OnceLock<Vec<GaussRule>> = OnceLock::new();
    TABLE.get_or_init(|| (0..=MAX_INTERNAL_ORDER).map(|n| if n == 0 { GaussRule { nodes: vec![], weights: vec![] } } else { legendre_rule(n) }).collect())
}

/// Internal access for orders 1..=64.
pub(crate) fn rule(n: usize) -> &'static GaussRule {
    &table()[n.clamp(1, MAX_INTERNAL_ORDER)]
}

/// Gauss-Legendre rule with 2 ≤ n ≤ 30 points.
pub fn gauss_segment(n: usize) -> Result<&'static GaussRule, QuadratureError> {
    if !(2..=30).contains(&n) {
        return Err(QuadratureError::OrderOutOfRange(n));
    }
    Ok(rule(n))
}

/// Collapsed-square (Duffy) tensor rule on the reference triangle (0,0),(1,0),(0,1).
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleRule {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

fn build_triangle_rule(n: usize) -> TriangleRule {
    let g = rule(n);
    let mut points = Vec::with_capacity(n * n);
    let mut weights = Vec::with_capacity(n * n);
    for i in 0..n {
        // u runs away from the collapsed vertex at the origin
        let u = 0.5 * (g.nodes[i] + 1.0);
        let wu = 0.5 * g.weights[i];
        for j in 0..n {
            let v = 0.5 * (g.nodes[j] + 1.0);
            let wv = 0.5 * g.weights[j];
            points.push([u * (1.0 - v), u * v]);
            weights.push(wu * wv * u);
        }
    }
    TriangleRule { points, weights }
}

fn tri_table() -> &'static Vec<TriangleRule> {
    static TABLE: OnceLock<Vec<TriangleRule>> = OnceLock::new();
    TABLE.get_or_init(|| (0..=30).map(|n| if n == 0 { TriangleRule { points: vec![], weights: vec![] } } else { build_triangle_rule(n) }).collect())
}

pub(crate) fn tri_rule(n: usize) -> &'static TriangleRule {
    &tri_table()[n.clamp(1, 30)]
}

pub fn triangle_rule(order: usize) -> Result<&'static TriangleRule, QuadratureError> {
    if !(2..=30).contains(&order) {
        return Err(QuadratureError::OrderOutOfRange(order));
    }
    Ok(tri_rule(order))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_point_rule() {
        let g = gauss_segment(2).unwrap();
        assert!((g.nodes[1] - 1.0 / 3f64.sqrt()).abs() < 4.0 * f64::EPSILON);
        assert!((g.nodes[0] + 1.0 / 3f64.sqrt()).abs() < 4.0 * f64::EPSILON);
        assert!(g.weights.iter().all(|w| (w - 1.0).abs() < 4.0 * f64::EPSILON));
        let cubic: f64 = g.nodes.iter().zip(&g.weights).map(|(x, w)| w * x.powi(3)).sum();
        assert_eq!(cubic, 0.0);
    }

    #[test]
    fn exactness_degree() {
        let g3 = gauss_segment(3).unwrap();
        let q: f64 = g3.nodes.iter().zip(&g3.weights).map(|(x, w)| w * x.powi(4)).sum();
        assert!((q - 0.4).abs() < 1e-14);
        for n in 2..=30 {
            let g = gauss_segment(n).unwrap();
            let s: f64 = g.weights.iter().sum();
            assert!((s - 2.0).abs() < 1e-13, "n={n}");
            for k in 0..2 * n {
                let q: f64 = g.nodes.iter().zip(&g.weights).map(|(x, w)| w * x.powi(k as i32)).sum();
                let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
                assert!((q - exact).abs() < 1e-13, "n={n} k={k}");
            }
        }
        assert_eq!(gauss_segment(1), Err(QuadratureError::OrderOutOfRange(1)));
        assert_eq!(gauss_segment(31), Err(QuadratureError::OrderOutOfRange(31)));
    }

    #[test]
    fn triangle_moments() {
        let t = triangle_rule(4).unwrap();
        let area: f64 = t.weights.iter().sum();
        assert!((area - 0.5).abs() < 1e-15);
        let mx: f64 = t.points.iter().zip(&t.weights).map(|(p, w)| w * p[0]).sum();
        assert!((mx - 1.0 / 6.0).abs() < 1e-14);
        // x^a y^b over the reference triangle is a! b! / (a+b+2)!
        let fact = |k: u32| (1..=k).map(|i| i as f64).product::<f64>();
        for a in 0..5u32 {
            for b in 0..5u32 - a {
                let q: f64 = t.points.iter().zip(&t.weights).map(|(p, w)| w * p[0].powi(a as i32) * p[1].powi(b as i32)).sum();
                let exact = fact(a) * fact(b) / fact(a + b + 2);
                assert!((q - exact).abs() < 1e-14, "{a} {b}");
            }
        }
    }
}
