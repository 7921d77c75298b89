//! Derivative of D along a horizontal shear, reduced to interactions between
//! horizontal slices.
//!
//! For slices [ax, bx] at height x₂ and [ay, by] at height y₂ with l = |x₂ − y₂|,
//! the inner integral of ∂ₓK_l(x₁ − y₁) is J = G(bx−ay) − G(bx−by) − G(ax−ay) + G(ax−by)
//! where G_l(u) = ∫₀ᵘ K(√(l²+v²)) dv. Then dD/dt = 2 ∬_{x₂>y₂} (σ(x₂) − σ(y₂)) J.

use super::EnergyError;
use crate::flow::{Flow, FlowSpec, ShearProfile};
use crate::geometry::{Point, Polygon};
use crate::kernel::KernelSpec;
use crate::quadrature::{gauss_segment, GaussRule, IntegralResult, QuadratureConfig, QuadratureError};
use rayon::prelude::*;

const GRADING: f64 = 0.2;
const LEVELS: usize = 12;

/// Terms kept in the large-argument expansion of ∫ (1+v²)^(-α/2) dv.
const SERIES_TERMS: usize = 28;
/// Above this ratio u/l the expansion is used; its ratio is at most 1/4.
const SERIES_FROM: f64 = 2.0;

/// G_l(u) = ∫₀ᵘ K(√(l²+v²)) dv, odd in u.
#[derive(Debug, Clone)]
enum SliceIntegral {
    NegLinear,
    /// asinh(u/l)
    Riesz1,
    /// l^(1−α) ĝ(u/l) with ĝ(z) = ∫₀ᶻ (1+v²)^(-α/2) dv
    Riesz { alpha: f64, offset: f64, coef: Vec<f64> },
    General(KernelSpec),
}

/// ∫₀^{asinh z} cosh^(1−α) s ds on one Gauss panel; accurate for z ≤ 2.
fn ghat_near(alpha: f64, z: f64, rule: &GaussRule) -> f64 {
    let top = z.asinh();
    let mut s = 0.0;
    for (x, w) in rule.nodes.iter().zip(&rule.weights) {
        s += w * (0.5 * top * (x + 1.0)).cosh().powf(1.0 - alpha);
    }
    0.5 * top * s
}

impl SliceIntegral {
    fn new(kernel: &KernelSpec) -> Self {
        match *kernel {
            KernelSpec::NegLinear => SliceIntegral::NegLinear,
            KernelSpec::RieszPower { alpha } if alpha == 1.0 => SliceIntegral::Riesz1,
            KernelSpec::RieszPower { alpha } => {
                // (1+v²)^(-α/2) = Σ c_k v^(-α-2k), integrated termwise from SERIES_FROM
                let mut coef = Vec::with_capacity(SERIES_TERMS);
                let mut c = 1.0;
                for k in 0..SERIES_TERMS {
                    coef.push(c / (1.0 - alpha - 2.0 * k as f64));
                    c *= (-0.5 * alpha - k as f64) / (k as f64 + 1.0);
                }
                let fine = gauss_segment(30).expect("order 30 is tabulated");
                let offset = ghat_near(alpha, SERIES_FROM, fine) - Self::series(alpha, 0.0, &coef, SERIES_FROM);
                SliceIntegral::Riesz { alpha, offset, coef }
            }
            k => SliceIntegral::General(k),
        }
    }

    fn series(alpha: f64, offset: f64, coef: &[f64], z: f64) -> f64 {
        let zi2 = 1.0 / (z * z);
        let mut p = z.powf(1.0 - alpha);
        let mut s = 0.0;
        for c in coef {
            s += c * p;
            p *= zi2;
        }
        offset + s
    }

    fn g(&self, l: f64, lpow: f64, u: f64) -> f64 {
        if u == 0.0 {
            return 0.0;
        }
        let a = u.abs();
        let v = match self {
            SliceIntegral::NegLinear => -0.5 * (a * (l * l + a * a).sqrt() + l * l * (a / l).asinh()),
            SliceIntegral::Riesz1 => (a / l).asinh(),
            SliceIntegral::Riesz { alpha, offset, coef } => {
                let z = a / l;
                let gh = if z <= SERIES_FROM {
                    ghat_near(*alpha, z, gauss_segment(12).expect("order 12 is tabulated"))
                } else {
                    Self::series(*alpha, *offset, coef, z)
                };
                lpow * gh
            }
            SliceIntegral::General(kernel) => general(kernel, l, a),
        };
        v * u.signum()
    }

    /// l^(1−α) for the homogeneous case, unused otherwise.
    fn prefactor(&self, l: f64) -> f64 {
        match self {
            SliceIntegral::Riesz { alpha, .. } => l.powf(1.0 - alpha),
            _ => 1.0,
        }
    }
}

/// ∫₀^{asinh(a/l)} K(l cosh s) l cosh s ds on unit-width Gauss panels.
fn general(kernel: &KernelSpec, l: f64, a: f64) -> f64 {
    let top = (a / l).asinh();
    let rule = gauss_segment(10).expect("order 10 is tabulated");
    let panels = top.ceil().max(1.0) as usize;
    let w = top / panels as f64;
    let mut s = 0.0;
    for k in 0..panels {
        let s0 = k as f64 * w;
        if let KernelSpec::ExpDecay { beta } = *kernel {
            // the remaining tail is below e^-45 of the total
            if beta * l * s0.cosh() > 45.0 {
                break;
            }
        }
        let mut p = 0.0;
        for (x, wt) in rule.nodes.iter().zip(&rule.weights) {
            let c = (s0 + 0.5 * w * (x + 1.0)).cosh() * l;
            p += wt * kernel.value(c) * c;
        }
        s += 0.5 * w * p;
    }
    s
}

/// One horizontal band between consecutive critical heights; each slice end moves
/// along a single edge inside it.
#[derive(Debug, Clone, Copy)]
struct Band {
    lo: f64,
    hi: f64,
    left: (Point, Point),
    right: (Point, Point),
}

fn edge_x((p, q): (Point, Point), y: f64) -> f64 {
    p.x + (y - p.y) / (q.y - p.y) * (q.x - p.x)
}

impl Band {
    fn slice(&self, y: f64) -> (f64, f64) {
        (edge_x(self.left, y), edge_x(self.right, y))
    }
}

fn bands(verts: &[Point], with_zero: bool) -> Result<Vec<Band>, EnergyError> {
    let ymin = verts.iter().map(|p| p.y).fold(f64::INFINITY, f64::min);
    let ymax = verts.iter().map(|p| p.y).fold(f64::NEG_INFINITY, f64::max);
    let tol = 1e-13 * (ymax - ymin);
    let mut hs: Vec<f64> = verts.iter().map(|p| p.y).collect();
    if with_zero && ymin < 0.0 && ymax > 0.0 {
        hs.push(0.0);
    }
    hs.sort_by(f64::total_cmp);
    hs.dedup_by(|a, b| (*a - *b).abs() <= tol);
    let n = verts.len();
    let mut out = Vec::new();
    for w in hs.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let y = 0.5 * (lo + hi);
        let mut cross: Vec<(f64, (Point, Point))> = (0..n)
            .map(|i| (verts[i], verts[(i + 1) % n]))
            .filter(|(p, q)| (p.y - y) * (q.y - y) < 0.0)
            .map(|e| (edge_x(e, y), e))
            .collect();
        if cross.len() != 2 {
            return Err(EnergyError::SliceNotInterval(y));
        }
        cross.sort_by(|a, b| a.0.total_cmp(&b.0));
        out.push(Band { lo, hi, left: cross[0].1, right: cross[1].1 });
    }
    Ok(out)
}

/// Parametrization of a cell of the (x₂, y₂) domain: (u, v) ↦ (x₂, y₂, jacobian).
#[derive(Debug, Clone, Copy)]
enum CellMap {
    Direct,
    /// l = u, y₂ = h0 + v (h − l)
    Diagonal { h0: f64, h: f64 },
    /// Duffy halves around the corner (c, c) of two stacked bands
    Corner { c: f64, hx: f64, hy: f64, upper: bool },
}

impl CellMap {
    fn apply(&self, u: f64, v: f64) -> (f64, f64, f64) {
        match *self {
            CellMap::Direct => (u, v, 1.0),
            CellMap::Diagonal { h0, h } => {
                let s = h0 + v * (h - u);
                (s + u, s, h - u)
            }
            CellMap::Corner { c, hx, hy, upper } => {
                let (p, q) = if upper { (u * hx, u * v * hy) } else { (u * v * hx, u * hy) };
                (c + p, c - q, hx * hy * u)
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Piece {
    xb: usize,
    yb: usize,
    map: CellMap,
    u: (f64, f64),
    v: (f64, f64),
}

struct Integrand<'a> {
    g: SliceIntegral,
    bands: &'a [Band],
    sigma: ShearProfile,
}

impl Integrand<'_> {
    /// The integrand, or with `magnitude` an upper bound built from absolute values of
    /// its terms; the latter stays nonzero when cancellation makes the integral vanish.
    fn eval(&self, xb: usize, yb: usize, x2: f64, y2: f64, magnitude: bool) -> f64 {
        let (ax, bx) = self.bands[xb].slice(x2);
        let (ay, by) = self.bands[yb].slice(y2);
        let l = x2 - y2;
        let (g, lp) = (&self.g, self.g.prefactor(l));
        let gs = [g.g(l, lp, bx - ay), g.g(l, lp, bx - by), g.g(l, lp, ax - ay), g.g(l, lp, ax - by)];
        let ds = self.sigma.sigma(x2) - self.sigma.sigma(y2);
        if magnitude {
            ds.abs() * gs.iter().map(|v| v.abs()).sum::<f64>()
        } else {
            ds * (gs[0] - gs[1] - gs[2] + gs[3])
        }
    }

    fn tensor(&self, p: &Piece, rule: &GaussRule) -> f64 {
        self.tensor_with(p, rule, false)
    }

    fn tensor_with(&self, p: &Piece, rule: &GaussRule, magnitude: bool) -> f64 {
        let (hu, hv) = (0.5 * (p.u.1 - p.u.0), 0.5 * (p.v.1 - p.v.0));
        let mut s = 0.0;
        for (xu, wu) in rule.nodes.iter().zip(&rule.weights) {
            let u = p.u.0 + hu * (xu + 1.0);
            let mut row = 0.0;
            for (xv, wv) in rule.nodes.iter().zip(&rule.weights) {
                let v = p.v.0 + hv * (xv + 1.0);
                let (x2, y2, jac) = p.map.apply(u, v);
                row += wv * self.eval(p.xb, p.yb, x2, y2, magnitude) * jac;
            }
            s += wu * row;
        }
        s * hu * hv
    }

    fn estimate(&self, p: &Piece, n: usize) -> Result<(f64, f64), QuadratureError> {
        let hi = self.tensor(p, gauss_segment(n)?);
        let lo = self.tensor(p, gauss_segment(n - 1)?);
        Ok((hi, (hi - lo).abs()))
    }

    /// Quadrisects until the order comparison meets the local or the absolute tolerance.
    fn adapt(&self, p: Piece, n: usize, rel: f64, floor: f64, depth: usize) -> Result<(f64, f64, usize), QuadratureError> {
        let (v, e) = self.estimate(&p, n)?;
        if e <= rel * v.abs() || e <= floor || depth == 0 {
            return Ok((v, e, 1));
        }
        let um = 0.5 * (p.u.0 + p.u.1);
        let vm = 0.5 * (p.v.0 + p.v.1);
        let mut acc = (0.0, 0.0, 0);
        for (u, w) in [((p.u.0, um), (p.v.0, vm)), ((um, p.u.1), (p.v.0, vm)), ((p.u.0, um), (vm, p.v.1)), ((um, p.u.1), (vm, p.v.1))] {
            let r = self.adapt(Piece { u, v: w, ..p }, n, rel, 0.25 * floor, depth - 1)?;
            acc = (acc.0 + r.0, acc.1 + r.1, acc.2 + r.2);
        }
        Ok(acc)
    }
}

fn graded(a: f64, b: f64) -> Vec<(f64, f64)> {
    let h = b - a;
    let mut cuts: Vec<f64> = (0..=LEVELS).map(|k| a + h * GRADING.powi(k as i32)).collect();
    cuts.push(a);
    cuts.windows(2).map(|w| (w[1], w[0])).collect()
}

fn pieces(bands: &[Band]) -> Vec<Piece> {
    let mut out = Vec::new();
    for i in 0..bands.len() {
        let bi = bands[i];
        let hi = bi.hi - bi.lo;
        for (j, bj) in bands.iter().enumerate().take(i + 1) {
            let hj = bj.hi - bj.lo;
            if i == j {
                for u in graded(0.0, hi) {
                    out.push(Piece { xb: i, yb: i, map: CellMap::Diagonal { h0: bi.lo, h: hi }, u, v: (0.0, 1.0) });
                }
            } else if i == j + 1 {
                for upper in [true, false] {
                    let map = CellMap::Corner { c: bi.lo, hx: hi, hy: hj, upper };
                    for u in graded(0.0, 1.0) {
                        out.push(Piece { xb: i, yb: j, map, u, v: (0.0, 1.0) });
                    }
                }
            } else {
                out.push(Piece { xb: i, yb: j, map: CellMap::Direct, u: (bi.lo, bi.hi), v: (bj.lo, bj.hi) });
            }
        }
    }
    out
}

/// dD/dt along a horizontal shear flow at time t, computed slice by slice in the
/// flow's canonical frame. `quad` is the base (time 0) domain of the flow.
pub fn shear_derivative_slice(quad: &Polygon, kernel: &KernelSpec, shear: &FlowSpec, t: f64, cfg: &QuadratureConfig) -> Result<IntegralResult, EnergyError> {
    let cfg = cfg.validated()?;
    let flow = Flow::prepare(shear, quad)?;
    let sigma = flow.shear_profile().ok_or(EnergyError::NotShearFlow)?;
    let dom = flow.domain_at(t)?;
    let verts: Vec<Point> = dom.vertices().iter().map(|&p| flow.pose().apply(p)).collect();
    let bands = bands(&verts, true)?;
    let f = Integrand { g: SliceIntegral::new(kernel), bands: &bands, sigma };
    let n = cfg.gauss_order.clamp(3, 30);
    let ps = pieces(&bands);

    let rule = gauss_segment(n)?;
    let scale: f64 = ps.par_iter().map(|p| f.tensor_with(p, rule, true).abs()).collect::<Vec<_>>().iter().sum();
    let floor = 0.1 * cfg.rel_tol * scale / ps.len() as f64;
    let depth = cfg.max_depth.min(8);
    let parts = ps
        .par_iter()
        .map(|p| f.adapt(*p, n, 0.5 * cfg.rel_tol, floor, depth))
        .collect::<Result<Vec<_>, _>>()?;

    let mut sum = crate::quadrature::CompensatedSum::new();
    let (mut err, mut cells) = (0.0, 0);
    for (v, e, c) in parts {
        sum.add(2.0 * v);
        err += 2.0 * e;
        cells += c * (n * n + (n - 1) * (n - 1));
    }
    let res = IntegralResult::new(sum.value(), err, cells);
    if !res.value.is_finite() || err > cfg.rel_tol * (res.value.abs() + 2.0 * scale) {
        return Err(QuadratureError::ToleranceNotReached(res).into());
    }
    Ok(res)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::FlowFamily;
    use crate::geometry::validate;

    #[test]
    fn g_matches_direct_integration() {
        for k in [KernelSpec::riesz(0.5).unwrap(), KernelSpec::riesz(1.0).unwrap(), KernelSpec::riesz(1.5).unwrap(), KernelSpec::riesz(1.9).unwrap(), KernelSpec::exp_decay(2.0).unwrap()] {
            let s = SliceIntegral::new(&k);
            for &(l, u) in &[(0.3f64, 1.2f64), (0.01, -0.7), (1.0, 3.0), (0.5, 0.999), (0.5, 1.001), (1.0, 0.01), (1e-6, 2.0)] {
                let r = crate::quadrature::adaptive::integrate(|v: f64| k.value((l * l + v * v).sqrt()), 0.0, u.abs(), 0.0, 1e-13, 2000);
                let got = s.g(l, s.prefactor(l), u);
                assert!((got - r.value.copysign(u)).abs() < 1e-11 * r.value.abs(), "{k:?} {l} {u}: {got} vs {}", r.value);
            }
        }
        let nl = KernelSpec::NegLinear;
        let r = crate::quadrature::adaptive::integrate(|v: f64| -(0.25 + v * v).sqrt(), 0.0, 2.0, 0.0, 1e-14, 200);
        let s = SliceIntegral::new(&nl);
        assert!((s.g(0.5, 1.0, 2.0) - r.value).abs() < 1e-13);
    }

    #[test]
    fn slice_agrees_with_boundary_formula() {
        let quad = validate(&[Point::new(-1.5, 0.0), Point::new(1.5, 0.0), Point::new(-1.0, 2.0)]).unwrap();
        let spec = FlowSpec::new(FlowFamily::VertexShear { axis: None, two_sided: false });
        let flow = Flow::prepare(&spec, &quad).unwrap();
        let k = KernelSpec::riesz(0.5).unwrap();
        let cfg = QuadratureConfig::default();
        let t = 0.4;
        let s = shear_derivative_slice(&quad, &k, &spec, t, &cfg).unwrap();
        let b = super::super::shape_derivative(&flow.domain_at(t).unwrap(), &k, &flow, t, &cfg).unwrap();
        assert!((s.value - b.value).abs() < 1e-6 * b.value.abs(), "{} vs {}", s.value, b.value);
    }
}
