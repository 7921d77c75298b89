//! Integration rules: Gauss on segments and triangles, graded segment rules,
//! singular triangle-pair integrals, adaptive 1-D integration and Monte-Carlo oracles.

pub mod adaptive;
mod gauss;
mod mc;
mod pair;
mod sum;

pub use gauss::{gauss_segment, triangle_rule, GaussRule, TriangleRule};
pub use mc::{mc_energy, mc_potential, sample_in_polygon, McEstimate};
pub use pair::pair_integral;
pub use sum::{compensated_sum, CompensatedSum};

pub(crate) use gauss::{rule as gauss_rule, tri_rule};

use crate::geometry::Point;
use serde::{Deserialize, Serialize};
use std::sync::OnceLock;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadratureError {
    #[error("quadrature order {0} outside [2, 30]")]
    OrderOutOfRange(usize),
    #[error("invalid quadrature config: {0}")]
    InvalidConfig(String),
    #[error("tolerance not reached: value {value:e} with error estimate {error:e}", value = .0.value, error = .0.error_estimate)]
    ToleranceNotReached(IntegralResult),
    #[error("integrand returned a non-finite value at ({0}, {1})")]
    NonFiniteSample(f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    pub gauss_order: usize,
    pub max_depth: usize,
    pub rel_tol: f64,
    pub admissibility_eta: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig { gauss_order: 6, max_depth: 24, rel_tol: 1e-7, admissibility_eta: 1.0 }
    }
}

impl QuadratureConfig {
    pub fn validated(self) -> Result<Self, QuadratureError> {
        if !(2..=30).contains(&self.gauss_order) {
            return Err(QuadratureError::OrderOutOfRange(self.gauss_order));
        }
        if !(1e-12..=1e-2).contains(&self.rel_tol) {
            return Err(QuadratureError::InvalidConfig(format!("rel_tol must lie in [1e-12, 1e-2], got {}", self.rel_tol)));
        }
        if !(self.admissibility_eta > 0.0 && self.admissibility_eta.is_finite()) {
            return Err(QuadratureError::InvalidConfig("admissibility_eta must be positive".into()));
        }
        if self.max_depth == 0 || self.max_depth > 60 {
            return Err(QuadratureError::InvalidConfig("max_depth must lie in [1, 60]".into()));
        }
        Ok(self)
    }

    pub fn with_rel_tol(self, rel_tol: f64) -> Self {
        QuadratureConfig { rel_tol, ..self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegralResult {
    pub value: f64,
    pub error_estimate: f64,
    pub cells_evaluated: usize,
}

impl IntegralResult {
    pub fn new(value: f64, error_estimate: f64, cells_evaluated: usize) -> Self {
        IntegralResult { value, error_estimate, cells_evaluated }
    }

    pub fn within(&self, rel_tol: f64) -> bool {
        self.error_estimate <= rel_tol * self.value.abs() + 1e-15
    }
}

/// Ratio of consecutive panel lengths toward each endpoint.
const GRADING: f64 = 0.15;
/// Number of geometric panels toward each endpoint.
const GRADED_LEVELS: i32 = 12;

#[derive(Debug)]
struct GradedRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

fn build_graded(n: usize) -> GradedRule {
    let mut cuts = vec![0.0];
    for k in (0..=GRADED_LEVELS).rev() {
        cuts.push(0.5 * GRADING.powi(k));
    }
    for k in 1..=GRADED_LEVELS {
        cuts.push(1.0 - 0.5 * GRADING.powi(k));
    }
    cuts.push(1.0);
    let g = gauss_rule(n);
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        for (x, wt) in g.nodes.iter().zip(&g.weights) {
            nodes.push(0.5 * (a + b) + 0.5 * (b - a) * x);
            weights.push(0.5 * (b - a) * wt);
        }
    }
    GradedRule { nodes, weights }
}

fn graded(n: usize) -> &'static GradedRule {
    static TABLE: OnceLock<Vec<GradedRule>> = OnceLock::new();
    &TABLE.get_or_init(|| (0..=30).map(|n| build_graded(n.max(1))).collect())[n.clamp(1, 30)]
}

/// Open composite rule on [p, q], geometrically graded toward both endpoints.
pub fn segment_integral<F: FnMut(Point) -> f64>(mut f: F, p: Point, q: Point, n: usize) -> Result<f64, QuadratureError> {
    if !(2..=30).contains(&n) {
        return Err(QuadratureError::OrderOutOfRange(n));
    }
    let len = p.dist(q);
    let rule = graded(n);
    let mut s = CompensatedSum::new();
    for (t, w) in rule.nodes.iter().zip(&rule.weights) {
        let x = p + (q - p) * *t;
        let v = f(x);
        if !v.is_finite() {
            return Err(QuadratureError::NonFiniteSample(x.x, x.y));
        }
        s.add(w * v);
    }
    Ok(s.value() * len)
}

/// Graded segment rule for integrands that carry their own error, with an
/// order-comparison estimate for the rule itself.
pub fn segment_integral_with_error<E, F>(mut f: F, p: Point, q: Point, n: usize) -> Result<IntegralResult, E>
where
    E: From<QuadratureError>,
    F: FnMut(Point) -> Result<(f64, f64), E>,
{
    if !(3..=30).contains(&n) {
        return Err(QuadratureError::OrderOutOfRange(n).into());
    }
    let len = p.dist(q);
    let mut run = |rule: &GradedRule| -> Result<(f64, f64), E> {
        let mut s = CompensatedSum::new();
        let mut e = 0.0;
        for (t, w) in rule.nodes.iter().zip(&rule.weights) {
            let x = p + (q - p) * *t;
            let (v, err) = f(x)?;
            if !v.is_finite() {
                return Err(QuadratureError::NonFiniteSample(x.x, x.y).into());
            }
            s.add(w * v);
            e += w * err;
        }
        Ok((s.value() * len, e * len))
    };
    let hi = run(graded(n))?;
    let lo = run(graded(n - 1))?;
    let cells = graded(n).nodes.len() + graded(n - 1).nodes.len();
    Ok(IntegralResult::new(hi.0, (hi.0 - lo.0).abs() + hi.1, cells))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        assert!(QuadratureConfig::default().validated().is_ok());
        assert!(QuadratureConfig { gauss_order: 1, ..Default::default() }.validated().is_err());
        assert!(QuadratureConfig { rel_tol: 0.1, ..Default::default() }.validated().is_err());
        assert!(QuadratureConfig { admissibility_eta: 0.0, ..Default::default() }.validated().is_err());
    }

    #[test]
    fn segment_rules() {
        let v = segment_integral(|_| 1.0, Point::new(0.0, 0.0), Point::new(3.0, 0.0), 4).unwrap();
        assert!((v - 3.0).abs() < 1e-14);
        for n in 2..8 {
            let v = segment_integral(|p| p.x, Point::new(0.0, 0.0), Point::new(1.0, 0.0), n).unwrap();
            assert!((v - 0.5).abs() < 1e-15);
        }
        assert_eq!(
            segment_integral(|_| f64::NAN, Point::new(0.0, 0.0), Point::new(1.0, 0.0), 4),
            Err(QuadratureError::NonFiniteSample(segment_node(4), 0.0))
        );
    }

    fn segment_node(n: usize) -> f64 {
        graded(n).nodes[0]
    }

    #[test]
    fn endpoint_singularity_matches_adaptive() {
        let f = |x: f64| 1.0 / x.sqrt() + 1.0 / (2.0 - x).sqrt() * x.cos();
        let graded = segment_integral(|p| f(p.x), Point::new(0.0, 0.0), Point::new(2.0, 0.0), 8).unwrap();
        // x = 2 - u² removes the right singularity; the left one integrates to 2√2
        let smooth = adaptive::integrate(|u: f64| 2.0 * (2.0 - u * u).cos(), 0.0, 2f64.sqrt(), 0.0, 1e-13, 200);
        let oracle = 2.0 * 2f64.sqrt() + smooth.value;
        assert!((graded - oracle).abs() < 1e-6 * oracle.abs(), "{graded} vs {oracle}");
    }
}
