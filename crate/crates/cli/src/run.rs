//! Dispatch from a validated scenario to the solvers, and the run report.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use evofam_core::axioms::{check_axioms, AxiomDefects, AxiomSample, AxiomTolerances};
use evofam_core::green::solution_signal;
use evofam_core::stepanov::{ergodic_mean, shift_defect, stepanov_norm};
use evofam_core::{
    bi_aa_family_defect, picard_iterate, residual_check, solve_linear_many, verify_mild_solution, ContractionReport,
    FamilySpec, FunctionClass, LinearProblem, PicardOptions, SemilinearProblem, SeriesControl, StepanovParams,
    WindowGrid,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{default_defect_shifts, family_arc, parse_range, Format, Problem, ScenarioConfig};
use crate::error::CliError;
use crate::output::{self, Extra, Table};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    SolveLinear,
    SolveSemilinear,
    RdDemo,
    StepanovNorm,
    ErgodicMean,
    ShiftDefect,
    DichotomyCheck,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::SolveLinear => "solve-linear",
            Command::SolveSemilinear => "solve-semilinear",
            Command::RdDemo => "rd-demo",
            Command::StepanovNorm => "stepanov-norm",
            Command::ErgodicMean => "ergodic-mean",
            Command::ShiftDefect => "shift-defect",
            Command::DichotomyCheck => "dichotomy-check",
        }
    }

    fn expects(self) -> Option<&'static str> {
        match self {
            Command::SolveLinear => Some("linear"),
            Command::SolveSemilinear => Some("semilinear"),
            Command::RdDemo => Some("rd_demo"),
            Command::StepanovNorm | Command::ErgodicMean | Command::ShiftDefect => Some("diagnostics"),
            Command::DichotomyCheck => None,
        }
    }
}

/// Command-line values that take precedence over the config file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub times: Option<String>,
    pub window: Option<String>,
    pub tol: Option<f64>,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    NotConverged,
    HypothesisFailed,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Certificates {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tail_bound: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_windows: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g_norm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub contraction: Option<ContractionReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub converged: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sup_deltas: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a_posteriori_bound: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solution_class: Option<FunctionClass>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub relative_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub axioms: Option<AxiomDefects>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub axiom_tolerances: Option<AxiomTolerances>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub command: &'static str,
    pub status: Status,
    pub seed: u64,
    pub scenario: ScenarioConfig,
    pub timings_ms: BTreeMap<&'static str, f64>,
    pub certificates: Certificates,
    pub outputs: Vec<PathBuf>,
}

struct Outcome {
    title: String,
    main: Table,
    extras: Vec<Extra>,
    certificates: Certificates,
    status: Status,
}

fn ms(clock: Instant) -> f64 {
    clock.elapsed().as_secs_f64() * 1e3
}

/// Folds the command-line overrides into the scenario.
pub fn apply_overrides(cmd: Command, cfg: &mut ScenarioConfig, ov: &Overrides) -> Result<(), CliError> {
    if let Some(out) = &ov.out {
        cfg.output.path = Some(out.clone());
    }
    if let Some(text) = &ov.times {
        let (a, b, step) = parse_range("--times", text)?;
        cfg.solver.window = [a, b];
        cfg.solver.step = step;
    }
    if let Some(text) = &ov.window {
        let (a, b, step) = parse_range("--window", text)?;
        match (&mut cfg.problem, cmd) {
            (Problem::RdDemo { demo, .. }, _) => {
                demo.window = [a, b];
                demo.time_step = step;
            }
            (_, Command::StepanovNorm | Command::ShiftDefect) => {
                cfg.solver.range = WindowGrid {
                    start: a,
                    end: b,
                    step,
                };
            }
            _ => {
                cfg.solver.window = [a, b];
                cfg.solver.step = step;
            }
        }
    }
    if let Some(tol) = ov.tol {
        match (&mut cfg.problem, cmd) {
            (Problem::RdDemo { demo, .. }, _) => demo.picard_tol = tol,
            (_, Command::SolveSemilinear) => cfg.solver.picard_tol = tol,
            _ => cfg.solver.tolerance = tol,
        }
    }
    Ok(())
}

/// Validates, computes and writes; returns the report and the exit code.
pub fn run(cmd: Command, mut cfg: ScenarioConfig, ov: &Overrides) -> Result<(RunReport, i32), CliError> {
    let clock = Instant::now();
    apply_overrides(cmd, &mut cfg, ov)?;
    if let Some(kind) = cmd.expects() {
        if cfg.problem.kind() != kind {
            return Err(CliError::invalid(
                "problem.kind",
                format!("{} needs a {kind:?} problem, got {:?}", cmd.name(), cfg.problem.kind()),
            ));
        }
    } else if cfg.problem.family().is_none() {
        return Err(CliError::invalid("problem.family", format!("{} needs a family", cmd.name())));
    }
    cfg.validate()?;
    let mut timings = BTreeMap::new();
    timings.insert("validate", ms(clock));

    let clock = Instant::now();
    let outcome = match cmd {
        Command::SolveLinear => solve_linear_cmd(&cfg)?,
        Command::SolveSemilinear => solve_semilinear_cmd(&cfg)?,
        Command::RdDemo => rd_demo_cmd(&cfg, ov.seed, &mut timings)?,
        Command::StepanovNorm => stepanov_norm_cmd(&cfg)?,
        Command::ErgodicMean => ergodic_mean_cmd(&cfg)?,
        Command::ShiftDefect => shift_defect_cmd(&cfg, ov.seed)?,
        Command::DichotomyCheck => dichotomy_check_cmd(&cfg, ov.seed)?,
    };
    timings.insert("compute", ms(clock));

    let clock = Instant::now();
    let outputs = emit(&cfg, &outcome)?;
    timings.insert("write", ms(clock));
    let code = match outcome.status {
        Status::Ok => 0,
        Status::HypothesisFailed => 3,
        Status::NotConverged => 4,
    };
    let report = RunReport {
        command: cmd.name(),
        status: outcome.status,
        seed: ov.seed,
        scenario: cfg.clone(),
        timings_ms: timings,
        certificates: outcome.certificates,
        outputs: outputs.clone(),
    };
    if let Some(path) = &cfg.output.path {
        let json = serde_json::to_vec_pretty(&report).map_err(|e| CliError::Output(e.to_string()))?;
        output::write(&output::sibling(path, "report", "json"), &json)?;
    }
    Ok((report, code))
}

/// Writes the artifacts; with no output path the main table goes to stdout.
fn emit(cfg: &ScenarioConfig, outcome: &Outcome) -> Result<Vec<PathBuf>, CliError> {
    let Some(path) = &cfg.output.path else {
        print!("{}", String::from_utf8_lossy(&outcome.main.to_csv()?));
        return Ok(Vec::new());
    };
    let mut written = Vec::new();
    let csv = outcome.main.to_csv()?;
    match cfg.output.resolved_format()? {
        Format::Csv => {
            output::write(path, &csv)?;
            written.push(path.clone());
        }
        Format::Svg => {
            let csv_path = output::sibling(path, "", "csv");
            output::write(&csv_path, &csv)?;
            output::write(path, output::svg_from_csv(&csv, &outcome.title)?.as_bytes())?;
            written.extend([csv_path, path.clone()]);
        }
        Format::Json => {
            let mut doc = BTreeMap::new();
            doc.insert("main", &outcome.main);
            for e in &outcome.extras {
                doc.insert(e.suffix, &e.table);
            }
            let json = serde_json::to_vec_pretty(&doc).map_err(|e| CliError::Output(e.to_string()))?;
            output::write(path, &json)?;
            return Ok(vec![path.clone()]);
        }
    }
    for e in &outcome.extras {
        let p = output::sibling(path, e.suffix, "csv");
        output::write(&p, &e.table.to_csv()?)?;
        written.push(p);
    }
    Ok(written)
}

fn series_control(cfg: &ScenarioConfig) -> SeriesControl {
    let s = &cfg.solver;
    let base = if s.tolerance > 0.0 {
        SeriesControl::with_tolerance(s.tolerance)
    } else {
        SeriesControl::fixed(s.n_windows)
    };
    base.nodes(s.nodes_per_window).cap(s.max_windows)
}

fn consecutive_pairs(times: &[f64]) -> Vec<(f64, f64)> {
    times.windows(2).take(5).map(|w| (w[0], w[1])).collect()
}

fn solve_linear_cmd(cfg: &ScenarioConfig) -> Result<Outcome, CliError> {
    let Problem::Linear {
        family,
        forcing,
        p,
        g_norm,
    } = &cfg.problem
    else {
        unreachable!("checked by run")
    };
    let green = evofam_core::GreenFunction::new(family_arc(family)?);
    let dim = green.dim();
    let forcing = forcing.build().map_err(CliError::at("problem.forcing"))?;
    let params = StepanovParams::new(*p).map_err(CliError::at("problem.p"))?;
    let prob = match g_norm {
        Some(g) => LinearProblem::new(green, forcing, params, *g),
        None => LinearProblem::with_probed_norm(green, forcing, params, &cfg.solver.probe_grid()?),
    }
    .map_err(CliError::at("problem.forcing"))?;
    let ctrl = series_control(cfg);
    let times = cfg.solver.grid()?.points();
    let sols = solve_linear_many(&prob, &ctrl, &times)?;

    let mut main = Table::new(std::iter::once("t".to_string()).chain((0..dim).map(|i| format!("u{i}"))).chain(["tail_bound".to_string()]));
    for (t, sol) in times.iter().zip(&sols) {
        let mut row = vec![*t];
        row.extend(&sol.value);
        row.push(sol.tail_bound);
        main.push(row);
    }
    let pairs = consecutive_pairs(&times);
    let residual = if pairs.is_empty() {
        None
    } else {
        let u = solution_signal(&prob, &ctrl)?;
        let mut worst = 0.0_f64;
        for (s, t) in pairs {
            worst = worst.max(verify_mild_solution(&prob, &u, t, s, 2 * ctrl.nodes_per_window)?);
        }
        Some(worst)
    };
    let first = sols.first();
    Ok(Outcome {
        title: "bounded mild solution".into(),
        main,
        extras: Vec::new(),
        certificates: Certificates {
            tail_bound: first.map(|s| s.tail_bound),
            n_windows: first.map(|s| s.n_windows),
            g_norm: Some(prob.g_norm()),
            residual,
            ..Default::default()
        },
        status: Status::Ok,
    })
}

fn contraction_certificates(c: &mut Certificates, r: ContractionReport) {
    c.kappa = Some(r.kappa);
    c.threshold = Some(r.threshold);
    c.contraction = Some(r);
}

fn deltas_table(deltas: &[f64]) -> Extra {
    let mut t = Table::new(["iteration", "sup_delta"]);
    for (i, d) in deltas.iter().enumerate() {
        t.push(vec![(i + 1) as f64, *d]);
    }
    Extra {
        suffix: "deltas",
        table: t,
    }
}

fn solve_semilinear_cmd(cfg: &ScenarioConfig) -> Result<Outcome, CliError> {
    let Problem::Semilinear {
        family,
        nonlinearity,
        p,
        lip_norm,
        measure,
        allow_non_admissible,
    } = &cfg.problem
    else {
        unreachable!("checked by run")
    };
    let fam = family_arc(family)?;
    let dim = fam.dim();
    let green = evofam_core::GreenFunction::new(fam);
    let f = nonlinearity.build(dim)?;
    let params = StepanovParams::new(*p).map_err(CliError::at("problem.p"))?;
    let mut prob = match lip_norm {
        Some(l) => SemilinearProblem::new(green, f, params, *l),
        None => SemilinearProblem::with_probed_lip_norm(green, f, params, &cfg.solver.probe_grid()?),
    }
    .map_err(CliError::at("problem.nonlinearity"))?;
    if let Some(m) = measure {
        prob = prob.with_measure(m.build());
    }
    let opts = PicardOptions {
        max_iter: cfg.solver.max_iter,
        tol: cfg.solver.picard_tol,
        allow_non_admissible: *allow_non_admissible,
        burn_in: None,
    };
    let ctrl = series_control(cfg);
    let trace = picard_iterate(&prob, &ctrl, &cfg.solver.grid()?, None, &opts)?;
    let samples = trace.window_samples();
    let mut main = Table::new(std::iter::once("t".to_string()).chain((0..dim).map(|i| format!("u{i}"))));
    for (t, u) in &samples {
        let mut row = vec![*t];
        row.extend(u);
        main.push(row);
    }
    let times: Vec<f64> = samples.iter().map(|(t, _)| *t).collect();
    let pairs = consecutive_pairs(&times);
    let residual = if pairs.is_empty() {
        None
    } else {
        Some(residual_check(&prob, &trace.solution(), &pairs, 2 * ctrl.nodes_per_window)?)
    };
    let mut certs = Certificates {
        tail_bound: Some(trace.tail_bound),
        n_windows: Some(trace.n_windows),
        residual,
        converged: Some(trace.converged),
        sup_deltas: Some(trace.sup_deltas.clone()),
        a_posteriori_bound: trace.a_posteriori_bound(),
        solution_class: trace.solution().class(),
        ..Default::default()
    };
    contraction_certificates(&mut certs, trace.report);
    Ok(Outcome {
        title: "Picard fixed point".into(),
        main,
        extras: vec![deltas_table(&trace.sup_deltas)],
        certificates: certs,
        status: if trace.converged { Status::Ok } else { Status::NotConverged },
    })
}

fn rd_demo_cmd(cfg: &ScenarioConfig, seed: u64, timings: &mut BTreeMap<&'static str, f64>) -> Result<Outcome, CliError> {
    let Problem::RdDemo {
        demo,
        defect_shifts,
        defect_samples,
    } = &cfg.problem
    else {
        unreachable!("checked by run")
    };
    let out = demo.run()?;
    timings.insert("picard", out.picard_ms);
    timings.insert("oracle", out.oracle_ms);
    let grid = &out.grid;
    let samples = out.samples();

    let mut spacetime = Table::new(["t", "x", "picard", "oracle"]);
    for (t, u, v) in &samples {
        for i in 0..grid.n_points() {
            spacetime.push(vec![*t, grid.x(i), u[i], v[i]]);
        }
    }
    let picks = [0, samples.len() / 2, samples.len() - 1];
    let mut cols = vec!["x".to_string()];
    for &k in &picks {
        cols.push(format!("picard@t={}", samples[k].0));
        cols.push(format!("oracle@t={}", samples[k].0));
    }
    let mut slices = Table::new(cols);
    for i in 0..grid.n_points() {
        let mut row = vec![grid.x(i)];
        for &k in &picks {
            row.push(samples[k].1[i]);
            row.push(samples[k].2[i]);
        }
        slices.push(row);
    }

    let clock = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let probes: Vec<(f64, f64, Vec<f64>)> = (0..*defect_samples)
        .map(|_| {
            let s: f64 = rng.gen_range(-10.0..10.0);
            let t = s + rng.gen_range(0.0..3.0);
            let (a, c, w) = (rng.gen_range(-2.0..2.0), rng.gen_range(-3.0..3.0), rng.gen_range(0.5..2.0));
            (t, s, grid.sample(|x| a * (-((x - c) / w).powi(2)).exp()))
        })
        .collect();
    let shifts = defect_shifts.clone().unwrap_or_else(default_defect_shifts);
    let mut defects = Table::new(["tau", "defect"]);
    for tau in shifts {
        defects.push(vec![tau, bi_aa_family_defect(&out.family, tau, &probes)?]);
    }
    timings.insert("defects", ms(clock));

    let mut certs = Certificates {
        tail_bound: Some(out.trace.tail_bound),
        n_windows: Some(out.trace.n_windows),
        converged: Some(out.trace.converged),
        sup_deltas: Some(out.trace.sup_deltas.clone()),
        a_posteriori_bound: out.trace.a_posteriori_bound(),
        solution_class: out.trace.solution().class(),
        relative_error: Some(out.relative_error),
        ..Default::default()
    };
    contraction_certificates(&mut certs, out.trace.report);
    Ok(Outcome {
        title: "reaction-diffusion slices: Picard vs finite differences".into(),
        main: slices,
        extras: vec![
            Extra {
                suffix: "spacetime",
                table: spacetime,
            },
            deltas_table(&out.trace.sup_deltas),
            Extra {
                suffix: "defects",
                table: defects,
            },
        ],
        certificates: certs,
        status: if out.trace.converged { Status::Ok } else { Status::NotConverged },
    })
}

struct Diagnostics<'a> {
    signal: evofam_core::TimeSignal,
    measure: evofam_core::WeightedMeasure,
    ps: &'a [f64],
    radii: &'a [f64],
    shifts: &'a [f64],
}

fn diagnostics(cfg: &ScenarioConfig) -> Result<Diagnostics<'_>, CliError> {
    let Problem::Diagnostics {
        signal,
        measure,
        p,
        radii,
        shifts,
        ..
    } = &cfg.problem
    else {
        unreachable!("checked by run")
    };
    Ok(Diagnostics {
        signal: signal.build().map_err(CliError::at("problem.signal"))?,
        measure: measure.build(),
        ps: p,
        radii,
        shifts,
    })
}

fn range(cfg: &ScenarioConfig) -> Result<WindowGrid, CliError> {
    let r = cfg.solver.range;
    WindowGrid::new(r.start, r.end, r.step).map_err(CliError::at("solver.range"))
}

fn plain(title: &str, main: Table) -> Outcome {
    Outcome {
        title: title.into(),
        main,
        extras: Vec::new(),
        certificates: Certificates::default(),
        status: Status::Ok,
    }
}

fn stepanov_norm_cmd(cfg: &ScenarioConfig) -> Result<Outcome, CliError> {
    let d = diagnostics(cfg)?;
    let grid = range(cfg)?;
    let mut t = Table::new(["p", "norm"]);
    for &p in d.ps {
        let params = StepanovParams::new(p).map_err(CliError::at("problem.p"))?;
        t.push(vec![p, stepanov_norm(&d.signal, &params, &grid)?]);
    }
    Ok(plain("Stepanov norm", t))
}

fn ergodic_mean_cmd(cfg: &ScenarioConfig) -> Result<Outcome, CliError> {
    let d = diagnostics(cfg)?;
    let mut t = Table::new(["r", "mean"]);
    for &r in d.radii {
        t.push(vec![r, ergodic_mean(&d.signal, &d.measure, r, cfg.solver.grid_step)?]);
    }
    Ok(plain("weighted ergodic mean", t))
}

fn shift_defect_cmd(cfg: &ScenarioConfig, seed: u64) -> Result<Outcome, CliError> {
    let d = diagnostics(cfg)?;
    let grid = range(cfg)?;
    let params = StepanovParams::new(d.ps[0]).map_err(CliError::at("problem.p"))?;
    let shifts: Vec<f64> = if d.shifts.is_empty() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut v: Vec<f64> = (0..8).map(|_| rng.gen_range(1.0..100.0)).collect();
        v.sort_by(f64::total_cmp);
        v
    } else {
        d.shifts.to_vec()
    };
    let mut t = Table::new(["tau", "defect"]);
    for tau in shifts {
        t.push(vec![tau, shift_defect(&d.signal, tau, &params, &grid)?]);
    }
    Ok(plain("Stepanov shift defect", t))
}

fn dichotomy_check_cmd(cfg: &ScenarioConfig, seed: u64) -> Result<Outcome, CliError> {
    let spec = cfg.problem.family().expect("checked by run");
    let fam = family_arc(spec)?;
    let (trials, span) = match &cfg.problem {
        Problem::Diagnostics { trials, span, .. } => (*trials, Some(*span)),
        _ => (1000, None),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let heat_grid = match spec {
        FamilySpec::HeatSec4 { .. } => Some(spec.build_heat().map_err(CliError::at("problem.family"))?.grid().clone()),
        _ => None,
    };
    let (span, tol) = match heat_grid {
        Some(_) => (
            span.unwrap_or(2.0),
            AxiomTolerances {
                relative: 1e-6,
                slack: 1e-8,
            },
        ),
        None => (span.unwrap_or(10.0), AxiomTolerances::default()),
    };
    let dim = fam.dim();
    let samples: Vec<AxiomSample> = (0..trials)
        .map(|_| {
            let s: f64 = rng.gen_range(-10.0..10.0);
            let r = s + rng.gen_range(0.0..span / 2.0);
            let t = r + rng.gen_range(0.0..span / 2.0);
            let x = match &heat_grid {
                Some(g) => {
                    let (a, c, w) = (rng.gen_range(-2.0..2.0), rng.gen_range(-3.0..3.0), rng.gen_range(1.5..3.0));
                    g.sample(|x| a * (-((x - c) / w).powi(2)).exp())
                }
                None => (0..dim).map(|_| rng.gen_range(-5.0..5.0)).collect(),
            };
            AxiomSample { s, r, t, x }
        })
        .collect();
    let defects = check_axioms(&fam, &samples);
    let mut t = Table::new(["axiom", "defect", "tolerance", "pass"]);
    for (name, d, tl) in defects.rows(tol) {
        t.push_labeled(name, vec![d, tl, if d <= tl { 1.0 } else { 0.0 }]);
    }
    Ok(Outcome {
        title: "dichotomy axiom defects".into(),
        main: t,
        extras: Vec::new(),
        certificates: Certificates {
            axioms: Some(defects),
            axiom_tolerances: Some(tol),
            ..Default::default()
        },
        status: if defects.within(tol) { Status::Ok } else { Status::HypothesisFailed },
    })
}
