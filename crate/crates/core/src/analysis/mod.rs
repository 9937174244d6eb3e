//! Termination verdicts, critical-point oracles and the Monte-Carlo
//! experiments built on top of the drivers.

mod critical;
mod experiments;
mod model;

use serde::{Deserialize, Serialize};

pub use critical::{
    classify_critical_point, find_critical_points_1d, CatalogEntry, CriticalPointCatalog,
    CriticalPointClass, CriticalPointKind, EigenSign, DEFAULT_HESSIAN_STEP, DEFAULT_HESSIAN_TOL,
};
pub use experiments::{
    claim6_dichotomy_check, classify_dichotomy, convergence_basin_experiment,
    line_search_property_suite, remark_inequality_experiment, BasinConfig, BasinOutcome,
    BasinReport, Claim6Case, Claim6Config, Claim6Outcome, Claim6Report, ObjectiveTag,
    PropertyResult, RemarkInstance, RemarkReport, ORIGIN_RADIUS,
};
pub use model::{example_smoothness_model, ExampleModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum VerdictKind {
    CriticalPoint,
    DivergedToInfinity,
    MaxIterations,
    NumericalBreakdown,
}

impl VerdictKind {
    pub const ALL: [VerdictKind; 4] = [
        VerdictKind::CriticalPoint,
        VerdictKind::DivergedToInfinity,
        VerdictKind::MaxIterations,
        VerdictKind::NumericalBreakdown,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            VerdictKind::CriticalPoint => "CriticalPoint",
            VerdictKind::DivergedToInfinity => "DivergedToInfinity",
            VerdictKind::MaxIterations => "MaxIterations",
            VerdictKind::NumericalBreakdown => "NumericalBreakdown",
        }
    }
}

/// How a trajectory ended. `limit_point` is present iff `kind` is
/// [`VerdictKind::CriticalPoint`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub kind: VerdictKind,
    pub limit_point: Option<Vec<f64>>,
    pub final_gradient_norm: f64,
}

impl Verdict {
    pub fn new(kind: VerdictKind, final_point: &[f64], final_gradient_norm: f64) -> Self {
        let limit_point = (kind == VerdictKind::CriticalPoint).then(|| final_point.to_vec());
        Self {
            kind,
            limit_point,
            final_gradient_norm,
        }
    }
}
