//! Serializable descriptors for the named signals, measures and families.

use std::f64::consts::FRAC_PI_2;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::{DiagonalFamily, DichotomyConstants, DichotomyFamily, ScalarAlphaFamily};
use crate::heat::{build_heat_family, HeatCoefficients, HeatFamily, SpatialGrid};
use crate::measure::WeightedMeasure;
use crate::signal::{FunctionClass, TimeSignal};
use crate::stepanov::WindowGrid;

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrigTerm {
    pub amplitude: f64,
    pub frequency: f64,
    #[serde(default)]
    pub phase: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SignalSpec {
    Const {
        value: f64,
    },
    /// Stacks scalar signals into a vector signal.
    Vector {
        components: Vec<SignalSpec>,
    },
    Sin {
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default = "one")]
        frequency: f64,
        #[serde(default)]
        phase: f64,
    },
    TrigSum {
        #[serde(default)]
        offset: f64,
        terms: Vec<TrigTerm>,
    },
    /// `sin(1/(2 + cos t + cos √2 t))`.
    AaExample,
    /// `arctan t − π/2`.
    ArctanDrift,
    Sum {
        terms: Vec<SignalSpec>,
    },
    Product {
        factors: Vec<SignalSpec>,
    },
}

impl SignalSpec {
    pub fn build(&self) -> Result<TimeSignal> {
        Ok(match self {
            SignalSpec::Const { value } => {
                finite("value", *value)?;
                TimeSignal::constant(vec![*value]).with_class(FunctionClass::Ap)
            }
            SignalSpec::Vector { components } => {
                let parts = components.iter().map(|c| c.build()).collect::<Result<Vec<_>>>()?;
                if parts.is_empty() {
                    return Err(Error::invalid("vector signal needs at least one component"));
                }
                if let Some(p) = parts.iter().find(|p| p.dim() != 1) {
                    return Err(Error::DimensionMismatch { expected: 1, got: p.dim() });
                }
                TimeSignal::new(parts.len(), move |t| parts.iter().map(|p| p.eval_scalar(t)).collect())
            }
            SignalSpec::Sin {
                amplitude,
                frequency,
                phase,
            } => {
                let (a, w, ph) = (*amplitude, *frequency, *phase);
                for (k, v) in [("amplitude", a), ("frequency", w), ("phase", ph)] {
                    finite(k, v)?;
                }
                TimeSignal::scalar(move |t| a * (w * t + ph).sin()).with_class(FunctionClass::Ap)
            }
            SignalSpec::TrigSum { offset, terms } => {
                finite("offset", *offset)?;
                for term in terms {
                    for (k, v) in [("amplitude", term.amplitude), ("frequency", term.frequency), ("phase", term.phase)] {
                        finite(k, v)?;
                    }
                }
                let (c, terms) = (*offset, terms.clone());
                TimeSignal::scalar(move |t| {
                    c + terms
                        .iter()
                        .map(|k| k.amplitude * (k.frequency * t + k.phase).sin())
                        .sum::<f64>()
                })
                .with_class(FunctionClass::Ap)
            }
            SignalSpec::AaExample => TimeSignal::scalar(|t: f64| (1.0 / (2.0 + t.cos() + (2f64.sqrt() * t).cos())).sin())
                .with_class(FunctionClass::Aa),
            SignalSpec::ArctanDrift => {
                TimeSignal::scalar(|t: f64| t.atan() - FRAC_PI_2).with_class(FunctionClass::MuErgodic)
            }
            SignalSpec::Sum { terms } => fold(terms, "sum", |a, b| a.sum(b))?,
            SignalSpec::Product { factors } => fold(factors, "product", |a, b| a.product(b))?,
        })
    }
}

fn finite(key: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("{key} must be finite")))
    }
}

fn fold<F>(specs: &[SignalSpec], what: &str, op: F) -> Result<TimeSignal>
where
    F: Fn(&TimeSignal, &TimeSignal) -> Result<TimeSignal>,
{
    let mut it = specs.iter();
    let first = it
        .next()
        .ok_or_else(|| Error::invalid(format!("{what} needs at least one operand")))?
        .build()?;
    it.try_fold(first, |acc, s| op(&acc, &s.build()?))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeasureSpec {
    Lebesgue,
    /// Density `e^t` on `t ≤ 0` and `1` on `t > 0`.
    PaperSec4,
}

impl MeasureSpec {
    pub fn build(&self) -> WeightedMeasure {
        match self {
            MeasureSpec::Lebesgue => WeightedMeasure::lebesgue(),
            MeasureSpec::PaperSec4 => WeightedMeasure::exp_left(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub half_width: f64,
    pub n_points: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            half_width: 20.0,
            n_points: 2001,
        }
    }
}

impl GridSpec {
    pub fn build(&self) -> Result<SpatialGrid> {
        SpatialGrid::new(self.half_width, self.n_points)
    }
}

fn default_probe() -> WindowGrid {
    WindowGrid {
        start: -100.0,
        end: 100.0,
        step: 0.01,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilySpec {
    Diagonal {
        rates: Vec<f64>,
        #[serde(default)]
        constants: Option<DichotomyConstants>,
    },
    ScalarAlpha {
        alpha: SignalSpec,
        omega: f64,
        #[serde(default = "default_probe")]
        probe: WindowGrid,
        #[serde(default)]
        constants: Option<DichotomyConstants>,
    },
    HeatSec4 {
        diffusion: SignalSpec,
        reaction: SignalSpec,
        diffusion_floor: f64,
        omega: f64,
        #[serde(default)]
        grid: GridSpec,
        #[serde(default = "default_probe")]
        probe: WindowGrid,
        #[serde(default)]
        constants: Option<DichotomyConstants>,
    },
}

fn check_declared(declared: &Option<DichotomyConstants>, actual: DichotomyConstants) -> Result<()> {
    match declared {
        Some(c) if (c.amplitude - actual.amplitude).abs() > 1e-12 || (c.rate - actual.rate).abs() > 1e-12 => {
            Err(Error::invalid(format!(
                "declared constants (M = {}, delta = {}) differ from the family's (M = {}, delta = {})",
                c.amplitude, c.rate, actual.amplitude, actual.rate
            )))
        }
        _ => Ok(()),
    }
}

impl FamilySpec {
    pub fn build(&self) -> Result<Arc<dyn DichotomyFamily>> {
        let fam: Arc<dyn DichotomyFamily> = match self {
            FamilySpec::Diagonal { rates, .. } => Arc::new(DiagonalFamily::new(rates.clone())?),
            FamilySpec::ScalarAlpha {
                alpha, omega, probe, ..
            } => {
                let probe = WindowGrid::new(probe.start, probe.end, probe.step)?;
                Arc::new(ScalarAlphaFamily::new(alpha.build()?, *omega, &probe, 1)?)
            }
            FamilySpec::HeatSec4 { .. } => self.build_heat()?,
        };
        let declared = match self {
            FamilySpec::Diagonal { constants, .. }
            | FamilySpec::ScalarAlpha { constants, .. }
            | FamilySpec::HeatSec4 { constants, .. } => constants,
        };
        check_declared(declared, fam.constants())?;
        Ok(fam)
    }

    pub fn build_heat(&self) -> Result<Arc<HeatFamily>> {
        match self {
            FamilySpec::HeatSec4 {
                diffusion,
                reaction,
                diffusion_floor,
                omega,
                grid,
                probe,
                constants,
            } => {
                let probe = WindowGrid::new(probe.start, probe.end, probe.step)?;
                let coeffs = HeatCoefficients::new(diffusion.build()?, reaction.build()?, *diffusion_floor, *omega, &probe)?;
                let fam = build_heat_family(grid.build()?, coeffs)?;
                check_declared(constants, fam.constants())?;
                Ok(Arc::new(fam))
            }
            _ => Err(Error::invalid("not a heat_sec4 family descriptor")),
        }
    }
}
