//! Quadrilateral → kite → rhombus → square, as a chain of monotone flows.

use super::{Flow, FlowError, FlowFamily, FlowSpec};
use crate::geometry::{orient, AffineMap, Polygon};
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct Stage {
    pub name: String,
    pub flow: FlowSpec,
    pub base: Polygon,
    pub t_start: f64,
    pub t_end: f64,
}

impl Stage {
    pub fn prepared(&self) -> Result<Flow, FlowError> {
        Flow::prepare(&self.flow, &self.base)
    }

    pub fn end_polygon(&self) -> Result<Polygon, FlowError> {
        self.prepared()?.domain_at(self.t_end)
    }
}

fn is_square(p: &Polygon) -> bool {
    let s = p.vertex(0).dist(p.vertex(1));
    let d1 = p.vertex(0).dist(p.vertex(2));
    let d2 = p.vertex(1).dist(p.vertex(3));
    (1..4).all(|i| (p.vertex(i).dist(p.vertex(i + 1)) - s).abs() <= 1e-12 * s) && (d1 - d2).abs() <= 1e-12 * d1
}

/// Canonical x-coordinates of the two off-diagonal vertices for diagonal (i, i+2):
/// (vertex i+3, vertex i+1), i.e. (left of i→i+2, right of it).
fn offsets(p: &Polygon, i: usize) -> (f64, f64) {
    let (a, c) = (p.vertex(i), p.vertex(i + 2));
    let pose = AffineMap::frame(a.mid(c), c - a);
    (pose.apply(p.vertex(i + 3)).x, pose.apply(p.vertex(i + 1)).x)
}

fn separates(p: &Polygon, i: usize) -> bool {
    let (a, c) = (p.vertex(i), p.vertex(i + 2));
    let s1 = orient(a, c, p.vertex(i + 1));
    let s3 = orient(a, c, p.vertex(i + 3));
    s1 * s3 < 0.0
}

/// Symmetrizes the two vertices off diagonal (i, i+2) onto its perpendicular bisector.
fn symmetrize(p: &Polygon, i: usize, stages: &mut Vec<Stage>, label: &str) -> Result<Polygon, FlowError> {
    let tol = 1e-12 * p.diameter();
    let (xu, xl) = offsets(p, i);
    let (mu, ml) = (xu.abs() > tol, xl.abs() > tol);
    let mut cur = p.clone();
    let mut push = |cur: &mut Polygon, name: String, axis: [usize; 2], two_sided: bool| -> Result<(), FlowError> {
        let st = Stage {
            name,
            flow: FlowSpec::with_range(FlowFamily::VertexShear { axis: Some(axis), two_sided }, 0.0, 1.0),
            base: cur.clone(),
            t_start: 0.0,
            t_end: 1.0,
        };
        *cur = st.end_polygon()?;
        stages.push(st);
        Ok(())
    };
    let (a, c) = (i % 4, (i + 2) % 4);
    if mu && ml && xu * xl > 0.0 {
        push(&mut cur, format!("{label}_both"), [a, c], true)?;
    } else {
        // opposite sides: one vertex at a time, the other held fixed
        if mu {
            push(&mut cur, format!("{label}_vertex_{}", (i + 3) % 4), [a, c], false)?;
        }
        if ml {
            push(&mut cur, format!("{label}_vertex_{}", (i + 1) % 4), [c, a], false)?;
        }
    }
    Ok(cur)
}

/// Stages deforming `quad` into a square with D increasing throughout. The first
/// symmetrization uses the shorter separating diagonal; ties go to the diagonal
/// through vertex 0.
pub fn compose_pipeline(quad: &Polygon) -> Result<Vec<Stage>, FlowError> {
    if quad.len() != 4 {
        return Err(FlowError::NotSimpleQuadrilateral(format!("{} vertices", quad.len())));
    }
    if is_square(quad) {
        return Ok(vec![]);
    }
    let cands: Vec<usize> = (0..2).filter(|&i| separates(quad, i)).collect();
    let first = match cands.as_slice() {
        [] => return Err(FlowError::NoInteriorDiagonal),
        [i] => *i,
        _ => {
            let l0 = quad.vertex(0).dist(quad.vertex(2));
            let l1 = quad.vertex(1).dist(quad.vertex(3));
            if l1 < l0 * (1.0 - 1e-12) {
                1
            } else {
                0
            }
        }
    };
    let mut stages = Vec::new();
    let kite = symmetrize(quad, first, &mut stages, "kite")?;
    let rhombus = symmetrize(&kite, first + 1, &mut stages, "rhombus")?;
    if !is_square(&rhombus) {
        let spec = FlowSpec::new(FlowFamily::RhombusDiagonal { compress: true });
        let f = Flow::prepare(&spec, &rhombus)?;
        let t_end = f.critical_time();
        stages.push(Stage {
            name: "square".into(),
            flow: FlowSpec::with_range(FlowFamily::RhombusDiagonal { compress: true }, 0.0, t_end),
            base: rhombus,
            t_start: 0.0,
            t_end,
        });
    }
    Ok(stages)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{validate, Point};

    fn poly(v: &[(f64, f64)]) -> Polygon {
        validate(&v.iter().map(|&(x, y)| Point::new(x, y)).collect::<Vec<_>>()).unwrap()
    }

    fn check_chain(stages: &[Stage]) -> Polygon {
        for w in stages.windows(2) {
            let end = w[0].end_polygon().unwrap();
            for (a, b) in end.vertices().iter().zip(w[1].base.vertices()) {
                assert!(a.dist(*b) < 1e-12);
            }
        }
        stages.last().unwrap().end_polygon().unwrap()
    }

    fn assert_square(p: &Polygon) {
        let s = p.vertex(0).dist(p.vertex(1));
        for i in 0..4 {
            assert!((p.vertex(i).dist(p.vertex(i + 1)) - s).abs() < 1e-8);
            let u = p.vertex(i + 1) - p.vertex(i);
            let v = p.vertex(i + 2) - p.vertex(i + 1);
            assert!(u.dot(v).abs() < 1e-8 * s * s);
        }
    }

    #[test]
    fn figure_quads() {
        let type1 = poly(&[(-1.0, 0.0), (0.3, -2.0), (1.0, 0.0), (-0.5, 1.0)]);
        let st = compose_pipeline(&type1).unwrap();
        assert_eq!(st.len(), 4);
        let end = check_chain(&st);
        assert_square(&end);
        assert!((end.area() - type1.area()).abs() < 1e-12);

        let cmd2 = poly(&[(-1.0, 0.0), (-0.3, -2.0), (1.0, 0.0), (-0.5, 1.0)]);
        let st = compose_pipeline(&cmd2).unwrap();
        assert_eq!(st.len(), 3);
        assert_square(&check_chain(&st));
    }

    #[test]
    fn kite_and_square() {
        let sq = poly(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]);
        assert!(compose_pipeline(&sq).unwrap().is_empty());
        let kite = poly(&[(0.0, -1.0), (1.0, 0.0), (0.0, 2.0), (-1.0, 0.0)]);
        let st = compose_pipeline(&kite).unwrap();
        assert_eq!(st.len(), 2);
        assert_square(&check_chain(&st));
    }

    #[test]
    fn triangle_rejected() {
        let t = poly(&[(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)]);
        assert!(matches!(compose_pipeline(&t), Err(FlowError::NotSimpleQuadrilateral(_))));
    }
}
