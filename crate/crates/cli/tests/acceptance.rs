//! Acceptance run: one [PASS]/[FAIL] line per criterion, nonzero exit if any fails.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use riesz_shapeflow::energy::{energy, fd_derivative, shape_derivative, shear_derivative_slice};
use riesz_shapeflow::flow::{Flow, FlowFamily, FlowSpec};
use riesz_shapeflow::geometry::{validate, Point, Polygon};
use riesz_shapeflow::kernel::KernelSpec;
use riesz_shapeflow::quadrature::{mc_energy, QuadratureConfig};
use riesz_shapeflow::verify::instances::random_polygon;
use riesz_shapeflow::verify::{derivative_mismatch, maximality_check, run_pipeline_check, ShapeClass, FD_REL_TOL, FD_STEP};
use serde_json::Value;
use std::process::Command;
use std::time::Instant;

fn poly(v: &[(f64, f64)]) -> Polygon {
    validate(&v.iter().map(|&(x, y)| Point::new(x, y)).collect::<Vec<_>>()).unwrap()
}

fn cfg(rel_tol: f64) -> QuadratureConfig {
    QuadratureConfig { rel_tol, ..QuadratureConfig::default() }
}

type Outcome = Result<String, String>;

fn check(cond: bool, ok: String, bad: String) -> Outcome {
    if cond {
        Ok(ok)
    } else {
        Err(bad)
    }
}

fn energy_vs_monte_carlo() -> Outcome {
    let kernels = [
        KernelSpec::riesz(0.5).unwrap(),
        KernelSpec::riesz(1.0).unwrap(),
        KernelSpec::riesz(1.5).unwrap(),
        KernelSpec::NegLinear,
        KernelSpec::exp_decay(1.0).unwrap(),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut worst, mut bad) = (0.0f64, Vec::new());
    for i in 0..20 {
        let p = random_polygon(&mut rng, 3 + i % 4);
        for (j, k) in kernels.iter().enumerate() {
            let e = energy(&p, k, &cfg(1e-6)).map_err(|e| format!("polygon {i} {}: {e}", k.name()))?;
            let mc = mc_energy(&p, k, 10_000_000, (100 * i + j) as u64);
            let r = (e.value - mc.mean).abs() / (3.0 * mc.std_error + e.error_estimate);
            worst = worst.max(r);
            if r > 1.0 {
                bad.push(format!("polygon {i} {}: D={} MC={}±{}", k.name(), e.value, mc.mean, mc.std_error));
            }
        }
    }
    check(bad.is_empty(), format!("100 cases, worst |D−MC|/(3σ+err) = {worst:.3}"), bad.join("; "))
}

fn closed_form_square() -> Outcome {
    let exact = -(2.0 + 2f64.sqrt() + 5.0 * 1f64.asinh()) / 15.0;
    let sq = poly(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]);
    let e = energy(&sq, &KernelSpec::NegLinear, &cfg(1e-6)).map_err(|e| e.to_string())?;
    let rel = (e.value - exact).abs() / exact.abs();
    check(rel <= 1e-6, format!("D = {:.12}, relative error {rel:.1e}", e.value), format!("D = {} vs {exact}, relative error {rel:.1e}", e.value))
}

fn scaling_law() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut worst = 0.0f64;
    for _ in 0..5 {
        let p = random_polygon(&mut rng, 5);
        for alpha in [0.5, 1.0, 1.5] {
            let k = KernelSpec::riesz(alpha).unwrap();
            let d = energy(&p, &k, &cfg(1e-6)).map_err(|e| e.to_string())?.value;
            for lam in [0.5, 2.0] {
                let dl = energy(&p.scaled(lam).unwrap(), &k, &cfg(1e-6)).map_err(|e| e.to_string())?.value;
                worst = worst.max((dl / d / lam.powf(4.0 - alpha) - 1.0).abs());
            }
        }
    }
    check(worst <= 1e-6, format!("30 ratios, worst relative deviation {worst:.1e}"), format!("worst relative deviation {worst:.1e}"))
}

fn derivative_cases() -> Vec<(FlowSpec, Polygon, f64, f64)> {
    let rh = poly(&[(0.0, -1.4), (0.8, 0.0), (0.0, 1.4), (-0.8, 0.0)]);
    vec![
        (FlowSpec::new(FlowFamily::HeightStretch), poly(&[(-0.4, 0.0), (1.2, 0.0), (0.0, 0.5)]), -0.5, 1.1),
        (FlowSpec::new(FlowFamily::HeightCompress), poly(&[(-0.3, 0.0), (0.25, 0.0), (0.05, 1.0)]), -1.0, 0.4),
        (FlowSpec::new(FlowFamily::LegStretch { alpha: None }), poly(&[(0.0, 0.0), (1.0, 0.0), (0.6, 0.8)]), 0.0, 2.0),
        (FlowSpec::new(FlowFamily::VertexShear { axis: None, two_sided: false }), poly(&[(-1.5, 0.0), (1.5, 0.0), (-1.0, 2.0)]), -1.0, 1.0),
        (
            FlowSpec::new(FlowFamily::VertexShear { axis: Some([0, 2]), two_sided: true }),
            poly(&[(-1.0, 0.0), (-0.3, -2.0), (1.0, 0.0), (-0.5, 1.0)]),
            0.0,
            1.0,
        ),
        (FlowSpec::new(FlowFamily::RhombusDiagonal { compress: false }), rh, 0.0, 2.0),
        (FlowSpec::new(FlowFamily::RectangleStretch), poly(&[(0.0, 0.0), (2.0, 0.0), (2.0, 1.0), (0.0, 1.0)]), 0.0, 2.0),
    ]
}

fn derivatives() -> Outcome {
    let k = KernelSpec::riesz(1.0).unwrap();
    let c = cfg(1e-7);
    let fd_cfg = cfg(FD_REL_TOL);
    let (mut worst_fd, mut worst_slice, mut n) = (0.0f64, 0.0f64, 0);
    let mut bad = Vec::new();
    for (spec, base, lo, hi) in derivative_cases() {
        let f = Flow::prepare(&spec, &base).map_err(|e| e.to_string())?;
        let hi = hi.min(f.interval().1);
        for i in 1..=5 {
            let t = lo + (hi - lo) * i as f64 / 6.0;
            let dom = f.domain_at(t).map_err(|e| e.to_string())?;
            let d = energy(&dom, &k, &c).map_err(|e| e.to_string())?.value;
            let b = shape_derivative(&dom, &k, &f, t, &c).map_err(|e| e.to_string())?.value;
            let (fd, _) = fd_derivative(&f, &k, t, FD_STEP, &fd_cfg).map_err(|e| e.to_string())?;
            let mut analytic = b;
            if f.shear_profile().is_some() {
                let s = shear_derivative_slice(&base, &k, &spec, t, &c).map_err(|e| e.to_string())?.value;
                let r = (s - b).abs() / (1e-4 * b.abs());
                worst_slice = worst_slice.max(r);
                if r > 1.0 {
                    bad.push(format!("{} t={t:.3}: slice {s} vs boundary {b}", spec.family.id()));
                }
                analytic = s;
            }
            let m = derivative_mismatch(analytic, fd, d);
            worst_fd = worst_fd.max(m);
            if m > 1.0 {
                bad.push(format!("{} t={t:.3}: analytic {analytic} vs FD {fd}", spec.family.id()));
            }
            n += 1;
        }
    }
    check(
        bad.is_empty(),
        format!("{n} points, worst FD mismatch {worst_fd:.3} and slice/boundary {worst_slice:.3} (tolerance units)"),
        bad.join("; "),
    )
}

fn critical_points() -> Outcome {
    let k = KernelSpec::riesz(1.0).unwrap();
    let c = cfg(1e-7);
    let sq = poly(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]);
    let diamond = poly(&[(0.0, -1.0), (1.0, 0.0), (0.0, 1.0), (-1.0, 0.0)]);
    let mut lines = Vec::new();
    let mut ok = true;
    for (name, fam, base) in [
        ("rhombus_diagonal t=0", FlowFamily::RhombusDiagonal { compress: false }, diamond),
        ("rectangle_stretch t=0", FlowFamily::RectangleStretch, sq),
    ] {
        let f = Flow::prepare(&FlowSpec::new(fam), &base).map_err(|e| e.to_string())?;
        let r = shape_derivative(&base, &k, &f, 0.0, &c).map_err(|e| e.to_string())?;
        let zero = r.value.abs() <= r.error_estimate;
        ok &= zero;
        lines.push(format!("{name}: {:.1e} (err {:.1e})", r.value, r.error_estimate));
    }
    let tri = poly(&[(-1.5, 0.0), (1.5, 0.0), (-1.0, 2.0)]);
    let spec = FlowSpec::new(FlowFamily::VertexShear { axis: None, two_sided: false });
    let s = shear_derivative_slice(&tri, &k, &spec, 1.0, &c).map_err(|e| e.to_string())?;
    ok &= s.value.abs() <= s.error_estimate;
    lines.push(format!("vertex_shear t=1: {:.1e} (err {:.1e})", s.value, s.error_estimate));
    check(ok, lines.join(", "), lines.join(", "))
}

/// Runs `verify all --seed 7` through the binary and returns its stdout.
fn verify_all() -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_riesz-shapeflow"))
        .args(["verify", "all", "--seed", "7"])
        .output()
        .map_err(|e| e.to_string())?;
    if !matches!(out.status.code(), Some(0) | Some(3)) {
        return Err(format!("exit {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr)));
    }
    Ok(out.stdout)
}

fn verdicts_pass(all: &[Value], ids: &[&str], min_instances: usize) -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for id in ids {
        let v = all.iter().find(|v| v["check"] == *id).ok_or(format!("{id} missing from the report"))?;
        let pass = v["pass"].as_bool() == Some(true);
        let count = v["instances"].as_array().map_or(0, Vec::len);
        ok &= pass && count >= min_instances;
        lines.push(format!("{id} {} ({count} instances, margin {:.3})", if pass { "ok" } else { "FAILED" }, v["min_margin"].as_f64().unwrap_or(f64::NAN)));
    }
    check(ok, lines.join(", "), lines.join(", "))
}

fn pipelines_and_maximality() -> Outcome {
    let k = KernelSpec::riesz(1.0).unwrap();
    let c = cfg(1e-7);
    let mut lines = Vec::new();
    let mut ok = true;
    for (name, q, stages) in [
        ("type1", poly(&[(-1.0, 0.0), (0.3, -2.0), (1.0, 0.0), (-0.5, 1.0)]), 4),
        ("cmd2", poly(&[(-1.0, 0.0), (-0.3, -2.0), (1.0, 0.0), (-0.5, 1.0)]), 3),
    ] {
        let r = run_pipeline_check(&q, &k, &c).map_err(|e| format!("{name}: {e}"))?;
        ok &= r.verdict.pass && r.stages.len() == stages;
        lines.push(format!("{name}: {} stages, {}", r.stages.len(), if r.verdict.pass { "monotone" } else { "NOT monotone" }));
    }
    for class in [ShapeClass::Triangles, ShapeClass::Quadrilaterals] {
        let v = maximality_check(class, &k, 50, 7, &c).map_err(|e| e.to_string())?;
        ok &= v.pass;
        lines.push(format!("{}: {} (margin {:.3})", v.check, if v.pass { "ok" } else { "FAILED" }, v.min_margin));
    }
    check(ok, lines.join(", "), lines.join(", "))
}

fn main() {
    let mut failed = 0;
    let mut report = |id: &str, name: &str, f: &mut dyn FnMut() -> Outcome| {
        let t0 = Instant::now();
        let r = f();
        let secs = t0.elapsed().as_secs_f64();
        match r {
            Ok(msg) => println!("[PASS] {id} {name}: {msg} ({secs:.1}s)"),
            Err(msg) => {
                failed += 1;
                println!("[FAIL] {id} {name}: {msg} ({secs:.1}s)");
            }
        }
    };
    report("C1", "energy vs Monte Carlo", &mut energy_vs_monte_carlo);
    report("C2", "unit square closed form", &mut closed_form_square);
    report("C3", "Riesz scaling law", &mut scaling_law);
    report("C4", "shape derivative vs finite differences", &mut derivatives);

    let runs = [verify_all(), verify_all()];
    let parsed: Result<Vec<Value>, String> = match &runs[0] {
        Ok(bytes) => serde_json::from_slice(bytes).map_err(|e| e.to_string()),
        Err(e) => Err(e.clone()),
    };
    let with = |ids: &'static [&'static str], min: usize| {
        let parsed = parsed.clone();
        move || parsed.clone().and_then(|all| verdicts_pass(&all, ids, min))
    };
    report(
        "C5",
        "monotonicity suite",
        &mut with(&["thm_1_2", "thm_1_3", "thm_1_5", "thm_1_6", "thm_1_7", "thm_1_8", "thm_1_9"], 11),
    );
    report("C6", "critical points", &mut critical_points);
    report("C7", "aperture argmax", &mut with(&["cor_1_4"], 1));
    report("C8", "boundary comparisons", &mut with(&["prop_2_1", "prop_2_2", "prop_2_4", "side_average_equality"], 11));
    report("C9", "pipelines and maximality", &mut pipelines_and_maximality);
    report("C10", "determinism of verify all", &mut || match (&runs[0], &runs[1]) {
        (Ok(a), Ok(b)) => check(a == b, format!("two runs, {} identical bytes", a.len()), "reports differ".into()),
        (Err(e), _) | (_, Err(e)) => Err(e.clone()),
    });
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
