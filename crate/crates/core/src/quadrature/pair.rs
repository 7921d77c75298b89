//! ∬_{T1×T2} K(|x−y|) dx dy for triangle pairs.
//!
//! Separated pairs (dist ≥ η·max diam) get a tensor Duffy rule, compared against the
//! next lower order for the error estimate, and are quadrisected (larger triangle first)
//! until that estimate is small. Pairs that share a vertex, an edge or coincide are
//! handled through self-similarity: splitting both triangles at edge midpoints yields
//! separated child pairs plus touching child pairs, and every touching child pair is a
//! scaled copy of one of finitely many configurations. For a power kernel r^p the
//! integral over a copy scaled by λ is λ^(4+p) times the original, so the unknown
//! touching integrals satisfy a small linear system with the separated integrals as
//! right-hand side. Non-power kernels are split into power terms plus a smooth remainder.

use super::{tri_rule, CompensatedSum, IntegralResult, QuadratureConfig, QuadratureError, TriangleRule};
use crate::geometry::{Point, Triangle};
use crate::kernel::KernelSpec;
use std::collections::HashMap;

/// Cap on distinct touching configurations per solve; beyond it touching pairs are
/// evaluated directly with a conservative error.
const MAX_TYPES: usize = 600;

/// Odd powers of r taken out of e^{-βr}; what is left is C⁸ at r = 0.
const EXP_POWERS: [f64; 4] = [1.0, 3.0, 5.0, 7.0];
/// Touching pairs are split only once β times their extent is below this.
const EXP_SPLIT_EXTENT: f64 = 4.0;

fn exp_coef(b: f64, pw: f64) -> f64 {
    let k = pw as i32;
    let fact: f64 = (1..=k).map(f64::from).product();
    -b.powi(k) / fact
}

fn exp_combine(b: f64, parts: &[(f64, f64)], (mut v, mut e): (f64, f64)) -> (f64, f64) {
    for (&pw, &(pv, pe)) in EXP_POWERS.iter().zip(parts) {
        let c = exp_coef(b, pw);
        v += c * pv;
        e += c.abs() * pe;
    }
    (v, e)
}

#[inline]
fn exp_remainder(x: f64) -> f64 {
    let x2 = x * x;
    (-x).exp() + x * (1.0 + x2 / 6.0 * (1.0 + x2 / 20.0 * (1.0 + x2 / 42.0)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Integrand {
    Power(f64),
    Exp(f64),
    /// e^{-βr} with its odd Taylor terms removed: smooth enough for plain tensor rules
    ExpRemainder(f64),
}

impl Integrand {
    #[inline]
    fn eval_r2(&self, r2: f64) -> f64 {
        match *self {
            Integrand::Power(p) => {
                if p == -1.0 {
                    1.0 / r2.sqrt()
                } else if p == 1.0 {
                    r2.sqrt()
                } else if p == 3.0 {
                    r2 * r2.sqrt()
                } else {
                    r2.powf(0.5 * p)
                }
            }
            Integrand::Exp(b) => (-b * r2.sqrt()).exp(),
            Integrand::ExpRemainder(b) => exp_remainder(b * r2.sqrt()),
        }
    }

    fn tag(&self) -> (u8, u64) {
        match *self {
            Integrand::Power(p) => (0, p.to_bits()),
            Integrand::Exp(b) => (1, b.to_bits()),
            Integrand::ExpRemainder(b) => (2, b.to_bits()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Contact {
    Same,
    Shared,
    Apart,
    Overlap,
}

fn contact(a: &Triangle, b: &Triangle) -> Contact {
    let av = a.vertices();
    let bv = b.vertices();
    let shared = av.iter().filter(|v| bv.contains(v)).count();
    if shared == 3 {
        Contact::Same
    } else if shared > 0 {
        Contact::Shared
    } else if a.distance(b) > 0.0 {
        Contact::Apart
    } else {
        Contact::Overlap
    }
}

type Key = [i64; 8];

fn frame_key(p: &Triangle, q: &Triangle) -> (Key, f64) {
    let d = p.b - p.a;
    let s = d.norm();
    let u = d * (1.0 / s);
    let inv = 1.0 / s;
    let map = |x: Point| {
        let w = x - p.a;
        (w.dot(u) * inv, u.cross(w) * inv)
    };
    let pts = [map(p.c), map(q.a), map(q.b), map(q.c)];
    let mut key = [0i64; 8];
    for (i, (x, y)) in pts.iter().enumerate() {
        key[2 * i] = (x * 1e9).round() as i64;
        key[2 * i + 1] = (y * 1e9).round() as i64;
    }
    (key, s)
}

/// Similarity key of the unordered pair plus the length scale it was normalised by.
fn pair_key(p: &Triangle, q: &Triangle) -> (Key, f64) {
    let k1 = frame_key(p, q);
    let k2 = frame_key(q, p);
    if k2.0 < k1.0 {
        k2
    } else {
        k1
    }
}

struct TouchType {
    p: Triangle,
    q: Triangle,
    scale: f64,
    level: usize,
}

struct Solver<'a> {
    cfg: QuadratureConfig,
    hi: &'a TriangleRule,
    lo: &'a TriangleRule,
    leaf_rel: f64,
    abs_density: f64,
    cells: usize,
    cache: HashMap<((u8, u64), Key), (f64, f64)>,
    xs: Vec<(Point, f64)>,
    ys: Vec<(Point, f64)>,
}

impl<'a> Solver<'a> {
    fn map_rule(rule: &TriangleRule, t: &Triangle, out: &mut Vec<(Point, f64)>) {
        out.clear();
        let jac = 2.0 * t.area();
        for (pt, w) in rule.points.iter().zip(&rule.weights) {
            out.push((t.from_reference(pt[0], pt[1]), w * jac));
        }
    }

    fn tensor(&mut self, f: Integrand, p: &Triangle, q: &Triangle, high: bool) -> f64 {
        let rule = if high { self.hi } else { self.lo };
        let mut xs = std::mem::take(&mut self.xs);
        let mut ys = std::mem::take(&mut self.ys);
        Self::map_rule(rule, p, &mut xs);
        Self::map_rule(rule, q, &mut ys);
        let mut total = 0.0;
        for &(x, wx) in &xs {
            let mut inner = 0.0;
            for &(y, wy) in &ys {
                let dx = x.x - y.x;
                let dy = x.y - y.y;
                inner += wy * f.eval_r2(dx * dx + dy * dy);
            }
            total += wx * inner;
        }
        self.xs = xs;
        self.ys = ys;
        total
    }

    fn leaf(&mut self, f: Integrand, p: &Triangle, q: &Triangle) -> (f64, f64) {
        self.cells += 1;
        let hi = self.tensor(f, p, q, true);
        let lo = self.tensor(f, p, q, false);
        (hi, (hi - lo).abs())
    }

    fn acceptable(&self, v: f64, e: f64, p: &Triangle, q: &Triangle) -> bool {
        e <= self.leaf_rel * v.abs() || e <= self.abs_density * p.area() * q.area()
    }

    fn dispatch(&mut self, f: Integrand, p: &Triangle, q: &Triangle, depth: usize) -> (f64, f64) {
        match contact(p, q) {
            Contact::Apart => self.separated(f, p, q, depth),
            Contact::Overlap => self.overlap(f, p, q, depth),
            Contact::Same | Contact::Shared => match f {
                Integrand::Power(pw) => self.touching_power(&[pw], p, q, depth)[0],
                // the split cancels badly once βr is large, so coarse pairs are refined first
                Integrand::Exp(b) if b * (p.diameter() + q.diameter()) > EXP_SPLIT_EXTENT && depth < self.cfg.max_depth => {
                    self.refine(f, p, q, depth)
                }
                Integrand::Exp(b) => {
                    let parts = self.touching_power(&EXP_POWERS, p, q, depth);
                    let rest = self.touching_smooth(Integrand::ExpRemainder(b), p, q, depth);
                    exp_combine(b, &parts, rest)
                }
                Integrand::ExpRemainder(_) => self.touching_smooth(f, p, q, depth),
            },
        }
    }

    fn separated(&mut self, f: Integrand, p: &Triangle, q: &Triangle, depth: usize) -> (f64, f64) {
        if let Integrand::Exp(b) = f {
            // near pairs of small extent go through the split, whose power parts are cached by shape
            let d = p.distance(q);
            if d < self.cfg.admissibility_eta * p.diameter().max(q.diameter()) && b * (d + p.diameter() + q.diameter()) <= EXP_SPLIT_EXTENT {
                let parts: Vec<(f64, f64)> = EXP_POWERS.iter().map(|&pw| self.separated(Integrand::Power(pw), p, q, depth)).collect();
                let rest = self.separated_direct(Integrand::ExpRemainder(b), p, q, depth);
                return exp_combine(b, &parts, rest);
            }
        }
        if let Integrand::Power(pw) = f {
            let (key, s) = pair_key(p, q);
            let sc = s.powf(4.0 + pw);
            if let Some(&(v, e)) = self.cache.get(&(f.tag(), key)) {
                return (v * sc, e * sc);
            }
            let (v, e) = self.separated_direct(f, p, q, depth);
            self.cache.insert((f.tag(), key), (v / sc, e / sc));
            return (v, e);
        }
        self.separated_direct(f, p, q, depth)
    }

    fn separated_direct(&mut self, f: Integrand, p: &Triangle, q: &Triangle, depth: usize) -> (f64, f64) {
        let m = p.diameter().max(q.diameter());
        // the remainder is smooth enough that nearness alone does not force refinement
        let smooth = matches!(f, Integrand::ExpRemainder(_));
        if smooth || p.distance(q) >= self.cfg.admissibility_eta * m || depth >= self.cfg.max_depth {
            let (v, e) = self.leaf(f, p, q);
            if self.acceptable(v, e, p, q) || depth >= self.cfg.max_depth {
                return (v, e);
            }
        }
        let mut s = CompensatedSum::new();
        let mut err = 0.0;
        if p.diameter() >= q.diameter() {
            for c in p.quadrisect() {
                let (v, e) = self.separated(f, &c, q, depth + 1);
                s.add(v);
                err += e;
            }
        } else {
            for c in q.quadrisect() {
                let (v, e) = self.separated(f, p, &c, depth + 1);
                s.add(v);
                err += e;
            }
        }
        (s.value(), err)
    }

    /// Touching pairs that do not share vertices exactly: plain subdivision.
    fn overlap(&mut self, f: Integrand, p: &Triangle, q: &Triangle, depth: usize) -> (f64, f64) {
        if depth >= self.cfg.max_depth {
            let (v, e) = self.leaf(f, p, q);
            return (v, e + v.abs());
        }
        let mut s = CompensatedSum::new();
        let mut err = 0.0;
        let (big, small, swap) = if p.diameter() >= q.diameter() { (p, q, false) } else { (q, p, true) };
        for c in big.quadrisect() {
            let (a, b) = if swap { (small, &c) } else { (&c, small) };
            let (v, e) = self.dispatch(f, a, b, depth + 1);
            s.add(v);
            err += e;
        }
        (s.value(), err)
    }

    /// Bounded integrand on a touching pair: tensor rule, refined by subdivision.
    fn touching_smooth(&mut self, f: Integrand, p: &Triangle, q: &Triangle, depth: usize) -> (f64, f64) {
        let (v, e) = self.leaf(f, p, q);
        if self.acceptable(v, e, p, q) || depth >= self.cfg.max_depth {
            return (v, e);
        }
        self.refine(f, p, q, depth)
    }

    fn refine(&mut self, f: Integrand, p: &Triangle, q: &Triangle, depth: usize) -> (f64, f64) {
        let mut s = CompensatedSum::new();
        let mut err = 0.0;
        let pk = p.quadrisect();
        let qk = if contact(p, q) == Contact::Same { pk } else { q.quadrisect() };
        for a in &pk {
            for b in &qk {
                let (v, e) = self.dispatch(f, a, b, depth + 1);
                s.add(v);
                err += e;
            }
        }
        (s.value(), err)
    }

    /// Integrals of r^p over a touching pair for each exponent in `powers`.
    fn touching_power(&mut self, powers: &[f64], p: &Triangle, q: &Triangle, depth: usize) -> Vec<(f64, f64)> {
        let (root_key, root_scale) = pair_key(p, q);
        let mut types = vec![TouchType { p: *p, q: *q, scale: root_scale, level: depth }];
        let mut index: HashMap<Key, usize> = HashMap::new();
        index.insert(root_key, 0);
        let mut links: Vec<Vec<(usize, f64)>> = Vec::new();
        let mut apart: Vec<Vec<(Triangle, Triangle, usize)>> = Vec::new();
        let mut other: Vec<Vec<(Triangle, Triangle, usize)>> = Vec::new();
        let mut i = 0;
        while i < types.len() {
            let (tp, tq, level) = (types[i].p, types[i].q, types[i].level);
            let pk = tp.quadrisect();
            let qk = if contact(&tp, &tq) == Contact::Same { pk } else { tq.quadrisect() };
            let mut my_links = Vec::new();
            let mut my_apart = Vec::new();
            let mut my_other = Vec::new();
            for a in &pk {
                for b in &qk {
                    match contact(a, b) {
                        Contact::Apart => my_apart.push((*a, *b, level + 1)),
                        Contact::Overlap => my_other.push((*a, *b, level + 1)),
                        Contact::Same | Contact::Shared => {
                            let (key, s) = pair_key(a, b);
                            let j = match index.get(&key) {
                                Some(&j) => Some(j),
                                None if types.len() < MAX_TYPES && level < self.cfg.max_depth => {
                                    types.push(TouchType { p: *a, q: *b, scale: s, level: level + 1 });
                                    index.insert(key, types.len() - 1);
                                    Some(types.len() - 1)
                                }
                                None => None,
                            };
                            match j {
                                Some(j) => my_links.push((j, s / types[j].scale)),
                                None => my_other.push((*a, *b, level + 1)),
                            }
                        }
                    }
                }
            }
            links.push(my_links);
            apart.push(my_apart);
            other.push(my_other);
            i += 1;
        }

        let n = types.len();
        powers
            .iter()
            .map(|&pw| {
                let f = Integrand::Power(pw);
                let mut rhs = vec![0.0; n];
                let mut rhs_err = vec![0.0; n];
                for t in 0..n {
                    let mut s = CompensatedSum::new();
                    let mut e = 0.0;
                    for (a, b, lv) in &apart[t] {
                        let (v, er) = self.separated(f, a, b, *lv);
                        s.add(v);
                        e += er;
                    }
                    for (a, b, _) in &other[t] {
                        // touching pairs left out of the system: direct rule, error as large as the value
                        let (v, er) = self.leaf(f, a, b);
                        s.add(v);
                        e += er + v.abs();
                    }
                    rhs[t] = s.value();
                    rhs_err[t] = e;
                }
                let mut m = vec![vec![0.0; n]; n];
                for t in 0..n {
                    m[t][t] += 1.0;
                    for &(j, lam) in &links[t] {
                        m[t][j] -= lam.powf(4.0 + pw);
                    }
                }
                let sol = solve_two(m, rhs, rhs_err);
                (sol.0[0], sol.1[0].abs())
            })
            .collect()
    }
}

/// Solves M x = b and M y = c by Gaussian elimination with partial pivoting.
fn solve_two(mut m: Vec<Vec<f64>>, mut b: Vec<f64>, mut c: Vec<f64>) -> (Vec<f64>, Vec<f64>) {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).fold(col, |best, r| if m[r][col].abs() > m[best][col].abs() { r } else { best });
        m.swap(col, piv);
        b.swap(col, piv);
        c.swap(col, piv);
        let d = m[col][col];
        for r in col + 1..n {
            let factor = m[r][col] / d;
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                m[r][k] -= factor * m[col][k];
            }
            b[r] -= factor * b[col];
            c[r] -= factor * c[col];
        }
    }
    for col in (0..n).rev() {
        for k in col + 1..n {
            b[col] -= m[col][k] * b[k];
            c[col] -= m[col][k] * c[k];
        }
        b[col] /= m[col][col];
        c[col] /= m[col][col];
    }
    (b, c)
}

fn lex_less(a: &Triangle, b: &Triangle) -> bool {
    let ka = [a.a.x, a.a.y, a.b.x, a.b.y, a.c.x, a.c.y];
    let kb = [b.a.x, b.a.y, b.b.x, b.b.y, b.c.x, b.c.y];
    ka.partial_cmp(&kb) == Some(std::cmp::Ordering::Less)
}

/// ∬_{T1×T2} K(|x−y|) dx dy with an absolute error estimate. The result is exactly
/// symmetric in its two triangle arguments.
pub fn pair_integral(t1: &Triangle, t2: &Triangle, kernel: &KernelSpec, cfg: &QuadratureConfig) -> Result<IntegralResult, QuadratureError> {
    let cfg = cfg.validated()?;
    let (p, q) = if lex_less(t2, t1) { (t2, t1) } else { (t1, t2) };
    let (p, q) = (Triangle::ccw(p.a, p.b, p.c), Triangle::ccw(q.a, q.b, q.c));
    let (coef, f) = match *kernel {
        KernelSpec::RieszPower { alpha } => (1.0, Integrand::Power(-alpha)),
        KernelSpec::NegLinear => (-1.0, Integrand::Power(1.0)),
        KernelSpec::ExpDecay { beta } => (1.0, Integrand::Exp(beta)),
    };
    let diam = p.diameter().max(q.diameter()).max(p.distance(&q) + p.diameter() + q.diameter());
    // leaves are held to a tighter budget than the total so that summation cannot exceed it
    let leaf_rel = 0.25 * cfg.rel_tol;
    let mut solver = Solver {
        cfg,
        hi: tri_rule(cfg.gauss_order),
        lo: tri_rule(cfg.gauss_order - 1),
        leaf_rel,
        abs_density: 1e-3 * leaf_rel * f.eval_r2(diam * diam).abs(),
        cells: 0,
        cache: HashMap::new(),
        xs: Vec::new(),
        ys: Vec::new(),
    };
    let (v, e) = solver.dispatch(f, &p, &q, 0);
    let res = IntegralResult::new(coef * v, e, solver.cells.max(1));
    if !res.value.is_finite() || !res.error_estimate.is_finite() || !res.within(cfg.rel_tol) {
        return Err(QuadratureError::ToleranceNotReached(res));
    }
    Ok(res)
}
