//! Versioned scenario configuration.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use evofam_core::demo::RdDemoSpec;
use evofam_core::{FamilySpec, MeasureSpec, Nonlinearity, SignalSpec, TimeSignal, WindowGrid};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema: u32,
    pub problem: Problem,
    #[serde(default)]
    pub solver: SolverControls,
    #[serde(default)]
    pub output: OutputSpec,
}

fn one() -> f64 {
    1.0
}

fn default_ps() -> Vec<f64> {
    vec![1.0]
}

fn default_radii() -> Vec<f64> {
    vec![10.0, 100.0, 1000.0]
}

fn default_trials() -> usize {
    1000
}

fn default_span() -> f64 {
    10.0
}

fn default_defect_samples() -> usize {
    20
}

fn weighted_measure() -> MeasureSpec {
    MeasureSpec::PaperSec4
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Problem {
    Linear {
        family: FamilySpec,
        forcing: SignalSpec,
        #[serde(default = "one")]
        p: f64,
        /// Analytic `‖g‖_{BS^p}`; probed when absent.
        #[serde(default)]
        g_norm: Option<f64>,
    },
    Semilinear {
        family: FamilySpec,
        nonlinearity: NonlinearitySpec,
        #[serde(default = "one")]
        p: f64,
        /// Analytic `‖L_f‖_{BS^p}`; probed when absent.
        #[serde(default)]
        lip_norm: Option<f64>,
        #[serde(default)]
        measure: Option<MeasureSpec>,
        #[serde(default)]
        allow_non_admissible: bool,
    },
    RdDemo {
        #[serde(default)]
        demo: RdDemoSpec,
        /// Shifts for the bi-AA defect table; defaults to `2π` and near common periods of `sin t` and `sin √2 t`.
        #[serde(default)]
        defect_shifts: Option<Vec<f64>>,
        #[serde(default = "default_defect_samples")]
        defect_samples: usize,
    },
    Diagnostics {
        signal: SignalSpec,
        #[serde(default = "weighted_measure")]
        measure: MeasureSpec,
        #[serde(default = "default_ps")]
        p: Vec<f64>,
        #[serde(default = "default_radii")]
        radii: Vec<f64>,
        /// Shifts for `shift-defect`; sampled from the seed when empty.
        #[serde(default)]
        shifts: Vec<f64>,
        #[serde(default)]
        family: Option<FamilySpec>,
        #[serde(default = "default_trials")]
        trials: usize,
        /// Largest `t − s` in `dichotomy-check` trials.
        #[serde(default = "default_span")]
        span: f64,
    },
}

impl Problem {
    pub fn kind(&self) -> &'static str {
        match self {
            Problem::Linear { .. } => "linear",
            Problem::Semilinear { .. } => "semilinear",
            Problem::RdDemo { .. } => "rd_demo",
            Problem::Diagnostics { .. } => "diagnostics",
        }
    }

    pub fn family(&self) -> Option<&FamilySpec> {
        match self {
            Problem::Linear { family, .. } | Problem::Semilinear { family, .. } => Some(family),
            Problem::RdDemo { demo, .. } => Some(&demo.family),
            Problem::Diagnostics { family, .. } => family.as_ref(),
        }
    }
}

/// `f(t, x) = gain(t)·h(x) + forcing(t)` with `h` the identity or `tanh`, so `L_f = |gain|`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NonlinearitySpec {
    Affine { gain: SignalSpec, forcing: SignalSpec },
    Tanh { gain: SignalSpec, forcing: SignalSpec },
}

impl NonlinearitySpec {
    pub fn build(&self, dim: usize) -> Result<Nonlinearity, CliError> {
        let (gain, forcing, saturate) = match self {
            NonlinearitySpec::Affine { gain, forcing } => (gain, forcing, false),
            NonlinearitySpec::Tanh { gain, forcing } => (gain, forcing, true),
        };
        let gain = gain.build().map_err(CliError::at("problem.nonlinearity.gain"))?;
        let forcing = forcing.build().map_err(CliError::at("problem.nonlinearity.forcing"))?;
        if gain.dim() != 1 {
            return Err(CliError::invalid("problem.nonlinearity.gain", "must be scalar"));
        }
        if forcing.dim() != dim {
            return Err(CliError::invalid(
                "problem.nonlinearity.forcing",
                format!("dimension {} does not match the family dimension {dim}", forcing.dim()),
            ));
        }
        let g = gain.clone();
        let lip = TimeSignal::scalar(move |t| g.eval_scalar(t).abs());
        let nl = Nonlinearity::new(dim, lip, move |t, x| {
            let a = gain.eval_scalar(t);
            forcing
                .eval(t)
                .into_iter()
                .zip(x)
                .map(|(b, &v)| a * if saturate { v.tanh() } else { v } + b)
                .collect()
        })?;
        Ok(nl)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverControls {
    /// Evaluation window `[T0, T1]`.
    pub window: [f64; 2],
    /// Spacing of the evaluation grid.
    pub step: f64,
    /// Series truncation tolerance; `0` keeps `n_windows` fixed.
    pub tolerance: f64,
    pub n_windows: usize,
    /// Cap on the automatically selected number of windows.
    pub max_windows: usize,
    pub nodes_per_window: usize,
    pub picard_tol: f64,
    pub max_iter: usize,
    /// Probe grid for norms that are not supplied analytically.
    pub probe: Option<WindowGrid>,
    /// Window starts scanned by `stepanov-norm` and `shift-defect`.
    pub range: WindowGrid,
    /// Quadrature spacing of the ergodic means.
    pub grid_step: f64,
}

impl Default for SolverControls {
    fn default() -> Self {
        SolverControls {
            window: [-5.0, 5.0],
            step: 0.1,
            tolerance: 1e-8,
            n_windows: 20,
            max_windows: 2000,
            nodes_per_window: 64,
            picard_tol: 1e-8,
            max_iter: 50,
            probe: None,
            range: WindowGrid {
                start: -50.0,
                end: 50.0,
                step: 0.1,
            },
            grid_step: 0.01,
        }
    }
}

impl SolverControls {
    pub fn grid(&self) -> Result<WindowGrid, CliError> {
        WindowGrid::new(self.window[0], self.window[1], self.step).map_err(CliError::at("solver.window"))
    }

    /// The configured probe, or the window widened by 20 on each side.
    pub fn probe_grid(&self) -> Result<WindowGrid, CliError> {
        let p = self.probe.unwrap_or(WindowGrid {
            start: self.window[0] - 20.0,
            end: self.window[1] + 20.0,
            step: 0.05,
        });
        WindowGrid::new(p.start, p.end, p.step).map_err(CliError::at("solver.probe"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default)]
    pub format: Option<Format>,
    #[serde(default)]
    pub path: Option<PathBuf>,
}

impl OutputSpec {
    /// Explicit format, else the path extension, else CSV.
    pub fn resolved_format(&self) -> Result<Format, CliError> {
        if let Some(f) = self.format {
            return Ok(f);
        }
        match self.path.as_deref().and_then(Path::extension).and_then(|e| e.to_str()) {
            None | Some("csv") => Ok(Format::Csv),
            Some("json") => Ok(Format::Json),
            Some("svg") => Ok(Format::Svg),
            Some(other) => Err(CliError::invalid("output.path", format!("unknown extension .{other}"))),
        }
    }
}

/// Parses `a:b:step`.
pub fn parse_range(key: &str, text: &str) -> Result<(f64, f64, f64), CliError> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(CliError::invalid(key, format!("expected a:b:step, got {text:?}")));
    }
    let mut v = [0.0; 3];
    for (slot, p) in v.iter_mut().zip(&parts) {
        *slot = p
            .trim()
            .parse()
            .map_err(|_| CliError::invalid(key, format!("{p:?} is not a number")))?;
    }
    Ok((v[0], v[1], v[2]))
}

fn nonneg(key: &str, v: f64) -> Result<(), CliError> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CliError::invalid(key, format!("must be finite and >= 0, got {v}")))
    }
}

fn positive(key: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CliError::invalid(key, format!("must be finite and > 0, got {v}")))
    }
}

fn exponent(key: &str, p: f64) -> Result<(), CliError> {
    if p >= 1.0 && p.is_finite() {
        Ok(())
    } else {
        Err(CliError::invalid(key, format!("Stepanov exponent must be finite and >= 1, got {p}")))
    }
}

/// Near common periods of `sin t` and `sin √2 t`, plus `2π` itself.
pub fn default_defect_shifts() -> Vec<f64> {
    let mut out = vec![2.0 * PI];
    for min in [10.0, 100.0, 1000.0] {
        if let Ok(np) = evofam_core::near_common_period(2.0 * PI, 2.0 * PI / 2f64.sqrt(), min) {
            out.push(np.tau);
        }
    }
    out
}

impl ScenarioConfig {
    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Validation(format!("config: {e}")))
    }

    /// Checks every key; nothing is computed or written before this passes.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.schema != SCHEMA_VERSION {
            return Err(CliError::invalid("schema", format!("expected {SCHEMA_VERSION}, got {}", self.schema)));
        }
        let s = &self.solver;
        s.grid()?;
        s.probe_grid()?;
        nonneg("solver.tolerance", s.tolerance)?;
        nonneg("solver.picard_tol", s.picard_tol)?;
        positive("solver.grid_step", s.grid_step)?;
        WindowGrid::new(s.range.start, s.range.end, s.range.step).map_err(CliError::at("solver.range"))?;
        for (key, v) in [
            ("solver.n_windows", s.n_windows),
            ("solver.max_windows", s.max_windows),
            ("solver.nodes_per_window", s.nodes_per_window),
            ("solver.max_iter", s.max_iter),
        ] {
            if v == 0 {
                return Err(CliError::invalid(key, "must be >= 1"));
            }
        }
        self.output.resolved_format()?;
        if let Some(f) = self.problem.family() {
            f.build().map_err(CliError::at("problem.family"))?;
        }
        match &self.problem {
            Problem::Linear { forcing, p, g_norm, .. } => {
                exponent("problem.p", *p)?;
                forcing.build().map_err(CliError::at("problem.forcing"))?;
                if let Some(g) = g_norm {
                    nonneg("problem.g_norm", *g)?;
                }
            }
            Problem::Semilinear {
                nonlinearity,
                p,
                lip_norm,
                family,
                ..
            } => {
                exponent("problem.p", *p)?;
                let dim = family.build().map_err(CliError::at("problem.family"))?.dim();
                nonlinearity.build(dim)?;
                if let Some(l) = lip_norm {
                    nonneg("problem.lip_norm", *l)?;
                }
            }
            Problem::RdDemo {
                demo,
                defect_shifts,
                defect_samples,
            } => {
                demo.validate().map_err(CliError::at("problem.demo"))?;
                demo.family.build_heat().map_err(CliError::at("problem.demo.family"))?;
                demo.amplitude.build().map_err(CliError::at("problem.demo.amplitude"))?;
                for &tau in defect_shifts.iter().flatten() {
                    if !tau.is_finite() {
                        return Err(CliError::invalid("problem.defect_shifts", "shifts must be finite"));
                    }
                }
                if *defect_samples == 0 {
                    return Err(CliError::invalid("problem.defect_samples", "must be >= 1"));
                }
            }
            Problem::Diagnostics {
                signal,
                p,
                radii,
                shifts,
                trials,
                span,
                ..
            } => {
                signal.build().map_err(CliError::at("problem.signal"))?;
                if p.is_empty() {
                    return Err(CliError::invalid("problem.p", "needs at least one exponent"));
                }
                for &v in p {
                    exponent("problem.p", v)?;
                }
                for &r in radii {
                    positive("problem.radii", r)?;
                }
                for &tau in shifts {
                    if !tau.is_finite() {
                        return Err(CliError::invalid("problem.shifts", "shifts must be finite"));
                    }
                }
                if *trials == 0 {
                    return Err(CliError::invalid("problem.trials", "must be >= 1"));
                }
                positive("problem.span", *span)?;
            }
        }
        Ok(())
    }
}

pub fn family_arc(spec: &FamilySpec) -> Result<Arc<dyn evofam_core::DichotomyFamily>, CliError> {
    spec.build().map_err(CliError::at("problem.family"))
}

#[cfg(test)]
mod tests {
    use super::*;

    const LINEAR: &str = r#"{
        "schema": 1,
        "problem": {
            "kind": "linear",
            "family": {"kind": "scalar_alpha", "alpha": {"kind": "const", "value": -1}, "omega": 1},
            "forcing": {"kind": "sin"}
        },
        "solver": {"window": [0, 1], "step": 0.5, "tolerance": 1e-8},
        "output": {"path": "out.csv"}
    }"#;

    #[test]
    fn round_trip_is_lossless() {
        let cfg = ScenarioConfig::from_json(LINEAR).unwrap();
        cfg.validate().unwrap();
        let back = ScenarioConfig::from_json(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
        let demo = ScenarioConfig {
            schema: 1,
            problem: Problem::RdDemo {
                demo: RdDemoSpec::default(),
                defect_shifts: None,
                defect_samples: 5,
            },
            solver: SolverControls::default(),
            output: OutputSpec::default(),
        };
        let back = ScenarioConfig::from_json(&serde_json::to_string(&demo).unwrap()).unwrap();
        assert_eq!(back, demo);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let bad = LINEAR.replace("\"step\": 0.5", "\"step\": 0.5, \"stepp\": 1");
        assert!(matches!(ScenarioConfig::from_json(&bad), Err(CliError::Validation(_))));
        let bad = LINEAR.replace("\"forcing\": {\"kind\": \"sin\"}", "\"forcing\": {\"kind\": \"sin\"}, \"extra\": 0");
        assert!(ScenarioConfig::from_json(&bad).is_err());
    }

    #[test]
    fn validation_names_the_key() {
        let bad = ScenarioConfig::from_json(&LINEAR.replace("1e-8", "-1")).unwrap();
        match bad.validate() {
            Err(CliError::Validation(msg)) => assert!(msg.starts_with("solver.tolerance"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
        let bad = ScenarioConfig::from_json(&LINEAR.replace("\"schema\": 1", "\"schema\": 2")).unwrap();
        assert!(matches!(bad.validate(), Err(CliError::Validation(m)) if m.starts_with("schema")));
    }

    #[test]
    fn ranges_parse() {
        assert_eq!(parse_range("--times", "-1:2:0.5").unwrap(), (-1.0, 2.0, 0.5));
        assert!(parse_range("--times", "1:2").is_err());
        assert!(parse_range("--times", "a:2:1").is_err());
    }

    #[test]
    fn format_from_extension() {
        let spec = |p: &str| OutputSpec {
            format: None,
            path: Some(p.into()),
        };
        assert_eq!(spec("a/b.svg").resolved_format().unwrap(), Format::Svg);
        assert_eq!(spec("b.json").resolved_format().unwrap(), Format::Json);
        assert!(spec("b.txt").resolved_format().is_err());
    }
}
