//! riesz-shapeflow: energies, potentials, shape derivatives, sweeps and checks from the shell.
//!
//! Exit codes: 0 success, 1 input error, 2 tolerance not reached (the result is still
//! written), 3 an expectation or check failed.

use clap::{Args, Parser, Subcommand, ValueEnum};
use riesz_shapeflow::energy::{self, EnergyError, EnergyResult};
use riesz_shapeflow::flow::{Flow, FlowFamily, FlowSpec};
use riesz_shapeflow::geometry::{Point, Polygon, RawPolygon};
use riesz_shapeflow::kernel::KernelSpec;
use riesz_shapeflow::quadrature::{IntegralResult, QuadratureConfig, QuadratureError};
use riesz_shapeflow::verify::{self, Monotonicity, SweepRow, VerifyError, THEOREM_IDS};
use serde::Serialize;
use std::fmt::Display;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "riesz-shapeflow", version, about = "Nonlocal energies of planar polygons along monotone shape flows")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Energy D of a polygon
    Energy {
        #[arg(long)]
        polygon: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Potential V at a point
    Potential {
        #[arg(long)]
        polygon: PathBuf,
        /// probe point as "x,y"
        #[arg(long, allow_hyphen_values = true)]
        point: String,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Analytic dD/dt along a flow, checked against a central difference
    Derivative {
        #[arg(long)]
        polygon: PathBuf,
        #[command(flatten)]
        flow: FlowArgs,
        #[arg(long, allow_hyphen_values = true)]
        t: f64,
        #[command(flatten)]
        run: RunArgs,
    },
    /// D and dD/dt on a time grid with a monotonicity verdict
    Sweep {
        #[arg(long)]
        polygon: PathBuf,
        #[command(flatten)]
        flow: FlowArgs,
        #[arg(long, allow_hyphen_values = true)]
        t_min: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        t_max: Option<f64>,
        #[arg(long, default_value_t = verify::SWEEP_POINTS)]
        steps: usize,
        #[arg(long, value_enum)]
        expect: Option<Expect>,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Runs one canned check, or all of them
    Verify {
        /// check id or "all"
        id: String,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Deforms a quadrilateral into a square and checks D increases throughout
    Pipeline {
        #[arg(long)]
        polygon: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
}

#[derive(Args)]
struct FlowArgs {
    /// family id (height_stretch, ...) or an inline JSON flow spec
    #[arg(long)]
    flow: String,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, value_enum, default_value_t = KernelKind::Riesz)]
    kernel: KernelKind,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    beta: f64,
    /// Gauss order per panel
    #[arg(long)]
    order: Option<usize>,
    #[arg(long, default_value_t = 1e-7)]
    rel_tol: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// worker threads; results do not depend on it
    #[arg(long, env = "RIESZ_SHAPEFLOW_THREADS")]
    threads: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Clone, Copy, ValueEnum)]
enum KernelKind {
    Riesz,
    Neglinear,
    Expdecay,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum Expect {
    Increasing,
    Decreasing,
}

/// Failure carrying its exit code.
struct Fail {
    code: u8,
    msg: String,
}

fn input(msg: impl Display) -> Fail {
    Fail { code: 1, msg: msg.to_string() }
}

type Outcome = Result<u8, Fail>;

struct Run {
    kernel: KernelSpec,
    cfg: QuadratureConfig,
    seed: u64,
    out: Option<PathBuf>,
    format: Format,
}

impl RunArgs {
    fn resolve(&self) -> Result<Run, Fail> {
        let kernel = match self.kernel {
            KernelKind::Riesz => KernelSpec::riesz(self.alpha),
            KernelKind::Neglinear => Ok(KernelSpec::NegLinear),
            KernelKind::Expdecay => KernelSpec::exp_decay(self.beta),
        }
        .map_err(input)?;
        let mut cfg = QuadratureConfig { rel_tol: self.rel_tol, ..QuadratureConfig::default() };
        if let Some(n) = self.order {
            cfg.gauss_order = n;
        }
        let cfg = cfg.validated().map_err(input)?;
        if let Some(n) = self.threads {
            if n == 0 {
                return Err(input("threads must be at least 1"));
            }
            // fails only if a pool already exists, which cannot happen this early
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
        Ok(Run { kernel, cfg, seed: self.seed, out: self.out.clone(), format: self.format })
    }
}

impl Run {
    fn emit(&self, text: &str) -> Result<(), Fail> {
        match &self.out {
            Some(p) => std::fs::write(p, text).map_err(|e| input(format!("{}: {e}", p.display()))),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    }

    fn emit_json<T: Serialize>(&self, v: &T) -> Result<(), Fail> {
        let mut s = serde_json::to_string_pretty(v).map_err(input)?;
        s.push('\n');
        self.emit(&s)
    }
}

fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    let before: usize = text.split_inclusive('\n').take(line.saturating_sub(1)).map(str::len).sum();
    before + column.saturating_sub(1)
}

fn read_polygon(path: &PathBuf) -> Result<Polygon, Fail> {
    let text = std::fs::read_to_string(path).map_err(|e| input(format!("{}: {e}", path.display())))?;
    let raw: RawPolygon = serde_json::from_str(&text).map_err(|e| {
        input(format!(
            "{}: invalid polygon JSON at byte offset {} (line {}, column {}): {e}",
            path.display(),
            byte_offset(&text, e.line(), e.column()),
            e.line(),
            e.column()
        ))
    })?;
    Polygon::try_from(raw).map_err(|e| input(format!("{}: vertices: {e}", path.display())))
}

fn parse_flow(s: &str) -> Result<FlowSpec, Fail> {
    if s.trim_start().starts_with('{') {
        return serde_json::from_str(s).map_err(|e| input(format!("flow: invalid JSON at byte offset {}: {e}", byte_offset(s, e.line(), e.column()))));
    }
    FlowFamily::from_id(s)
        .map(FlowSpec::new)
        .ok_or_else(|| input(format!("flow: unknown family {s:?}; valid: {}", FlowFamily::IDS.join(", "))))
}

fn parse_point(s: &str) -> Result<Point, Fail> {
    let parts: Vec<&str> = s.split(',').collect();
    let [x, y] = parts.as_slice() else {
        return Err(input(format!("point: expected \"x,y\", got {s:?}")));
    };
    let num = |v: &str| v.trim().parse::<f64>().map_err(|e| input(format!("point: {v:?}: {e}")));
    Ok(Point::new(num(x)?, num(y)?))
}

/// Tolerance failures keep their partial result; everything else is an input error.
fn energy_fail(e: EnergyError) -> Result<(f64, f64), Fail> {
    match e {
        EnergyError::ToleranceNotReached(r) => Ok((r.value, r.error_estimate)),
        EnergyError::Quadrature(QuadratureError::ToleranceNotReached(r)) => Ok((r.value, r.error_estimate)),
        e => Err(input(e)),
    }
}

fn verify_fail(e: VerifyError) -> Fail {
    match e {
        VerifyError::Energy(EnergyError::ToleranceNotReached(_) | EnergyError::Quadrature(QuadratureError::ToleranceNotReached(_))) => {
            Fail { code: 2, msg: e.to_string() }
        }
        e => input(e),
    }
}

#[derive(Serialize)]
struct ValueReport {
    value: f64,
    error_estimate: f64,
    converged: bool,
}

fn write_value(run: &Run, r: Result<(f64, f64), EnergyError>) -> Outcome {
    let (ok, (value, error_estimate)) = match r {
        Ok(v) => (true, v),
        Err(e) => (false, energy_fail(e)?),
    };
    let rep = ValueReport { value, error_estimate, converged: ok };
    match run.format {
        Format::Json => run.emit_json(&rep)?,
        Format::Csv => run.emit(&format!("value,error_estimate,converged\n{value:e},{error_estimate:e},{ok}\n"))?,
    }
    if ok {
        Ok(0)
    } else {
        eprintln!("warning: tolerance {:e} not reached", run.cfg.rel_tol);
        Ok(2)
    }
}

fn cmd_energy(polygon: &PathBuf, run: &Run) -> Outcome {
    let p = read_polygon(polygon)?;
    write_value(run, energy::energy(&p, &run.kernel, &run.cfg).map(|r: EnergyResult| (r.value, r.error_estimate)))
}

fn cmd_potential(polygon: &PathBuf, point: &str, run: &Run) -> Outcome {
    let p = read_polygon(polygon)?;
    let x = parse_point(point)?;
    write_value(run, energy::potential(x, &p, &run.kernel, &run.cfg).map(|r: IntegralResult| (r.value, r.error_estimate)))
}

#[derive(Serialize)]
struct DerivativeReport {
    t: f64,
    method: &'static str,
    analytic: f64,
    analytic_error: f64,
    finite_difference: f64,
    step: f64,
    energy: f64,
    /// in units of the tolerance; above 1 is a mismatch
    mismatch: f64,
}

fn cmd_derivative(polygon: &PathBuf, flow: &str, t: f64, run: &Run) -> Outcome {
    let base = read_polygon(polygon)?;
    let spec = parse_flow(flow)?;
    let f = Flow::prepare(&spec, &base).map_err(input)?;
    f.check_time(t).map_err(input)?;
    let mut code = 0;
    let mut soft = |r: Result<(f64, f64), EnergyError>| -> Result<(f64, f64), Fail> {
        r.or_else(|e| {
            code = 2;
            energy_fail(e)
        })
    };
    let a = soft(verify::analytic_derivative(&f, &run.kernel, t, &run.cfg).map(|r| (r.value, r.error_estimate)))?;
    let fd_cfg = QuadratureConfig { rel_tol: run.cfg.rel_tol.min(verify::FD_REL_TOL), ..run.cfg };
    let fd = soft(energy::fd_derivative(&f, &run.kernel, t, verify::FD_STEP, &fd_cfg))?;
    let d = soft(f.domain_at(t).map_err(EnergyError::from).and_then(|p| energy::energy(&p, &run.kernel, &run.cfg)).map(|r| (r.value, r.error_estimate)))?;
    let rep = DerivativeReport {
        t,
        method: if f.shear_profile().is_some() { "slice" } else { "boundary" },
        analytic: a.0,
        analytic_error: a.1,
        finite_difference: fd.0,
        step: verify::FD_STEP,
        energy: d.0,
        mismatch: verify::derivative_mismatch(a.0, fd.0, d.0),
    };
    match run.format {
        Format::Json => run.emit_json(&rep)?,
        Format::Csv => run.emit(&format!(
            "t,method,analytic,analytic_error,finite_difference,step,energy,mismatch\n{:e},{},{:e},{:e},{:e},{:e},{:e},{:e}\n",
            rep.t, rep.method, rep.analytic, rep.analytic_error, rep.finite_difference, rep.step, rep.energy, rep.mismatch
        ))?,
    }
    if code == 0 && rep.mismatch > 1.0 {
        code = 3;
    }
    Ok(code)
}

fn rows_csv(rows: &[SweepRow]) -> Result<String, Fail> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(input)?;
    }
    String::from_utf8(w.into_inner().map_err(input)?).map_err(input)
}

fn cmd_sweep(polygon: &PathBuf, flow: &str, lo: Option<f64>, hi: Option<f64>, steps: usize, expect: Option<Expect>, run: &Run) -> Outcome {
    let base = read_polygon(polygon)?;
    let spec = parse_flow(flow)?;
    let f = Flow::prepare(&spec, &base).map_err(input)?;
    let (flo, fhi) = f.interval();
    let (lo, lo_given) = lo.or(spec.t_min).map_or((flo, false), |t| (t, true));
    let (hi, hi_given) = hi.or(spec.t_max).map_or((fhi, false), |t| (t, true));
    if !lo.is_finite() || !hi.is_finite() {
        return Err(input(format!("flow interval [{flo}, {fhi}] is unbounded; pass --t-min and --t-max")));
    }
    for (t, flag, given) in [(lo, "--t-min", lo_given), (hi, "--t-max", hi_given)] {
        if !given && f.domain_at(t).is_err() {
            return Err(input(format!("the shape degenerates at the interval end t = {t}; pass {flag} strictly inside [{flo}, {fhi}]")));
        }
    }
    if steps < 5 || !(hi > lo) {
        return Err(input(format!("need --steps >= 5 and --t-max > --t-min, got {steps} points on [{lo}, {hi}]")));
    }
    let s = verify::sweep(&spec, &base, &run.kernel, &verify::cosine_grid(lo, hi, steps), &run.cfg).map_err(verify_fail)?;
    match run.format {
        Format::Json => run.emit_json(&s)?,
        Format::Csv => run.emit(&rows_csv(&s.grid)?)?,
    }
    if !s.derivatives_agree() {
        eprintln!("derivative mismatch {:.3} (tolerance units)", s.max_derivative_mismatch);
        return Ok(3);
    }
    let want = match expect {
        None => return Ok(0),
        Some(Expect::Increasing) => Monotonicity::StrictlyIncreasing,
        Some(Expect::Decreasing) => Monotonicity::StrictlyDecreasing,
    };
    if s.verdict == want {
        Ok(0)
    } else {
        eprintln!("expected {want:?}, sweep says {:?}", s.verdict);
        Ok(3)
    }
}

fn cmd_verify(id: &str, run: &Run) -> Outcome {
    let ids: Vec<&str> = if id == "all" {
        THEOREM_IDS.to_vec()
    } else if THEOREM_IDS.contains(&id) {
        vec![id]
    } else {
        return Err(input(VerifyError::UnknownTheorem(id.into())));
    };
    let mut verdicts = Vec::new();
    for i in &ids {
        verdicts.push(verify::verify_theorem(i, &run.kernel, &run.cfg, run.seed).map_err(verify_fail)?);
    }
    match run.format {
        Format::Json if id == "all" => run.emit_json(&verdicts)?,
        Format::Json => run.emit_json(&verdicts[0])?,
        Format::Csv => {
            let mut s = String::from("check,pass,min_margin,max_derivative_mismatch\n");
            for v in &verdicts {
                let m = v.max_derivative_mismatch.map(|m| format!("{m:e}")).unwrap_or_default();
                s.push_str(&format!("{},{},{:e},{}\n", v.check, v.pass, v.min_margin, m));
            }
            run.emit(&s)?
        }
    }
    for v in verdicts.iter().filter(|v| !v.pass) {
        eprintln!("{}: FAIL", v.check);
    }
    Ok(if verdicts.iter().all(|v| v.pass) { 0 } else { 3 })
}

fn stages_csv(rep: &verify::PipelineReport) -> Result<String, Fail> {
    #[derive(Serialize)]
    struct Row<'a> {
        stage: &'a str,
        #[serde(flatten)]
        row: SweepRow,
    }
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(["stage", "t", "D", "D_err", "dDdt_analytic", "dDdt_fd"]).map_err(input)?;
    for (st, s) in rep.stages.iter().zip(&rep.sweeps) {
        for r in &s.grid {
            w.serialize(Row { stage: &st.name, row: *r }).map_err(input)?;
        }
    }
    String::from_utf8(w.into_inner().map_err(input)?).map_err(input)
}

fn cmd_pipeline(polygon: &PathBuf, run: &Run) -> Outcome {
    let quad = read_polygon(polygon)?;
    let rep = verify::run_pipeline_check(&quad, &run.kernel, &run.cfg).map_err(verify_fail)?;
    match run.format {
        Format::Json => run.emit_json(&rep)?,
        Format::Csv => run.emit(&stages_csv(&rep)?)?,
    }
    Ok(if rep.verdict.pass { 0 } else { 3 })
}

fn dispatch(cmd: Command) -> Outcome {
    match cmd {
        Command::Energy { polygon, run } => cmd_energy(&polygon, &run.resolve()?),
        Command::Potential { polygon, point, run } => cmd_potential(&polygon, &point, &run.resolve()?),
        Command::Derivative { polygon, flow, t, run } => cmd_derivative(&polygon, &flow.flow, t, &run.resolve()?),
        Command::Sweep { polygon, flow, t_min, t_max, steps, expect, run } => {
            cmd_sweep(&polygon, &flow.flow, t_min, t_max, steps, expect, &run.resolve()?)
        }
        Command::Verify { id, run } => cmd_verify(&id, &run.resolve()?),
        Command::Pipeline { polygon, run } => cmd_pipeline(&polygon, &run.resolve()?),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            // help and version are not errors; every usage error is an input error
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match dispatch(cli.cmd) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
