//! Bounded mild solutions of nonautonomous evolution equations with an
//! exponential dichotomy, computed by Green's-function window series and
//! Picard iteration, plus Stepanov and weighted-ergodic diagnostics.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod axioms;
pub mod catalog;
pub mod demo;
pub mod error;
pub mod fd;
pub mod evolution;
pub mod green;
pub mod heat;
pub mod interp;
pub mod measure;
pub mod near_period;
pub mod picard;
pub mod quad;
pub mod signal;
pub mod space;
pub mod stepanov;

pub use error::{Error, Result};
pub use evolution::{
    green_apply, make_diagonal_family, make_scalar_timevarying_family, CoefficientIntegral, DiagonalFamily,
    DichotomyConstants, DichotomyFamily, GreenFunction, MatrixFamily, ScalarAlphaFamily,
};
pub use green::{solve_linear, solve_linear_many, verify_mild_solution, window_term, window_term_bound, LinearProblem, SeriesControl};
pub use interp::GridSignal;
pub use measure::WeightedMeasure;
pub use picard::{contraction_factor, picard_iterate, residual_check, ContractionReport, PicardOptions, SemilinearProblem};
pub use signal::{compose, ClassDecomposition, FunctionClass, Nonlinearity, TimeSignal};
pub use space::Norm;
pub use stepanov::{StepanovParams, WindowGrid};
pub use catalog::{FamilySpec, MeasureSpec, SignalSpec};
pub use fd::fd_oracle;
pub use heat::{
    bi_aa_family_defect, build_heat_family, build_sec4_problem, heat_semigroup_apply, HeatCoefficients, HeatFamily,
    LipNormSource, Sec4Nonlinearity, SpatialGrid,
};
pub use near_period::{near_common_period, NearPeriod};
