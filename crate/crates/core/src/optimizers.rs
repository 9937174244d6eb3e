//! Iteration drivers.
//!
//! Every driver runs the same loop: check the termination rules at `z_n`,
//! select a learning rate (or a pair of them), step, repeat. The loop records
//! one [`IterateRecord`] per iterate (subject to thinning) and always records
//! the final iterate.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::analysis::{Verdict, VerdictKind};
use crate::error::{invalid, Error, Result};
use crate::line_search::{
    backtracking_with_gradient, gdnew_block, select_blocks, two_way_with_gradient, BlockRule,
    LineSearchParams, SmoothnessModel, DEFAULT_MAX_HALVINGS,
};
use crate::objective::{norm, DifferentiableFunction, Point, SeparableObjective, SharedFunction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    StandardGd,
    Backtracking,
    TwoWayBacktracking,
    CoordinatewiseBacktracking,
    CoordinatewiseTwoWay,
    CoordinatewiseGdnew,
    /// Full-space GD-New with a single model on the whole product space.
    Gdnew,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::StandardGd,
        Method::Backtracking,
        Method::TwoWayBacktracking,
        Method::CoordinatewiseBacktracking,
        Method::CoordinatewiseTwoWay,
        Method::CoordinatewiseGdnew,
        Method::Gdnew,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::StandardGd => "standard-gd",
            Method::Backtracking => "backtracking",
            Method::TwoWayBacktracking => "two-way-backtracking",
            Method::CoordinatewiseBacktracking => "coordinatewise-backtracking",
            Method::CoordinatewiseTwoWay => "coordinatewise-two-way",
            Method::CoordinatewiseGdnew => "coordinatewise-gdnew",
            Method::Gdnew => "gdnew",
        }
    }

    pub fn is_coordinatewise(self) -> bool {
        matches!(
            self,
            Method::CoordinatewiseBacktracking
                | Method::CoordinatewiseTwoWay
                | Method::CoordinatewiseGdnew
        )
    }

    pub fn needs_model(self) -> bool {
        matches!(self, Method::CoordinatewiseGdnew | Method::Gdnew)
    }

    /// Methods whose accepted steps satisfy an Armijo inequality.
    pub fn is_armijo_family(self) -> bool {
        matches!(
            self,
            Method::Backtracking
                | Method::TwoWayBacktracking
                | Method::CoordinatewiseBacktracking
                | Method::CoordinatewiseTwoWay
        )
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Method::ALL
            .iter()
            .copied()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Method::ALL.iter().map(|m| m.as_str()).collect();
                format!(
                    "unknown method `{s}` (expected one of: {})",
                    names.join(", ")
                )
            })
    }
}

/// Finite proxies for "converges" / "goes to infinity".
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StoppingRule {
    pub max_iterations: usize,
    pub gradient_tolerance: f64,
    pub divergence_radius: f64,
    /// A step shorter than this ends the run as a breakdown. `0` disables.
    pub stall_step_tolerance: f64,
}

impl Default for StoppingRule {
    fn default() -> Self {
        Self {
            max_iterations: 100_000,
            gradient_tolerance: 1e-8,
            divergence_radius: 1e8,
            stall_step_tolerance: 0.0,
        }
    }
}

impl StoppingRule {
    pub fn new(
        max_iterations: usize,
        gradient_tolerance: f64,
        divergence_radius: f64,
        stall_step_tolerance: f64,
    ) -> Result<Self> {
        let rule = Self {
            max_iterations,
            gradient_tolerance,
            divergence_radius,
            stall_step_tolerance,
        };
        rule.validate()?;
        Ok(rule)
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(invalid("max_iterations", "must be positive"));
        }
        if !(self.gradient_tolerance > 0.0) {
            return Err(invalid("gradient_tolerance", "must be positive"));
        }
        if !(self.divergence_radius > 0.0) {
            return Err(invalid("divergence_radius", "must be positive"));
        }
        if !(self.stall_step_tolerance >= 0.0) {
            return Err(invalid("stall_step_tolerance", "must be non-negative"));
        }
        Ok(())
    }

    pub fn with_max_iterations(mut self, n: usize) -> Self {
        self.max_iterations = n;
        self
    }

    pub fn with_gradient_tolerance(mut self, tol: f64) -> Self {
        self.gradient_tolerance = tol;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub stop: StoppingRule,
    pub max_halvings: usize,
    /// Record every `thinning`-th iterate (the last one is always kept).
    pub thinning: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            stop: StoppingRule::default(),
            max_halvings: DEFAULT_MAX_HALVINGS,
            thinning: 1,
        }
    }
}

impl From<StoppingRule> for RunOptions {
    fn from(stop: StoppingRule) -> Self {
        Self {
            stop,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum StepSize {
    Single(f64),
    Blockwise(f64, f64),
}

impl StepSize {
    pub fn first(self) -> f64 {
        match self {
            StepSize::Single(d) | StepSize::Blockwise(d, _) => d,
        }
    }

    pub fn second(self) -> Option<f64> {
        match self {
            StepSize::Single(_) => None,
            StepSize::Blockwise(_, d) => Some(d),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterateRecord {
    pub n: usize,
    pub point: Vec<f64>,
    pub value: f64,
    pub grad_norm: f64,
    /// Learning rate(s) used to leave this iterate; absent on the final record.
    pub step_size: Option<StepSize>,
    pub candidates_tested: usize,
    /// `‖z_{n+1} − z_n‖`; absent on the final record.
    pub step_norm: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ParamsUsed {
    Fixed { delta0: f64 },
    LineSearch(LineSearchParams),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub records: Vec<IterateRecord>,
    pub verdict: Verdict,
    pub method: Method,
    pub params: ParamsUsed,
}

impl Trajectory {
    pub fn last(&self) -> &IterateRecord {
        self.records
            .last()
            .expect("trajectory has at least one record")
    }

    /// Number of steps taken.
    pub fn iterations(&self) -> usize {
        self.last().n
    }

    pub fn final_point(&self) -> &[f64] {
        &self.last().point
    }
}

/// Termination check at the latest iterate. `None` means keep going.
///
/// Order of precedence: non-finite state, critical point, divergence, budget.
pub fn classify_termination(latest: &IterateRecord, stop: &StoppingRule) -> Option<VerdictKind> {
    let point_finite = latest.point.iter().all(|c| c.is_finite());
    if !point_finite || !latest.value.is_finite() || !latest.grad_norm.is_finite() {
        return Some(VerdictKind::NumericalBreakdown);
    }
    if latest.grad_norm < stop.gradient_tolerance {
        return Some(VerdictKind::CriticalPoint);
    }
    if norm(&latest.point) > stop.divergence_radius {
        return Some(VerdictKind::DivergedToInfinity);
    }
    if latest.n >= stop.max_iterations {
        return Some(VerdictKind::MaxIterations);
    }
    None
}

struct Selected {
    size: StepSize,
    candidates: usize,
}

fn drive<S>(
    f: &dyn DifferentiableFunction,
    z0: &[f64],
    m1: usize,
    opts: &RunOptions,
    method: Method,
    params: ParamsUsed,
    mut select: S,
) -> Trajectory
where
    S: FnMut(&[f64], &[f64]) -> Option<Selected>,
{
    let stop = &opts.stop;
    let thinning = opts.thinning.max(1);
    let mut z = z0.to_vec();
    let mut value = f.value(&z);
    let mut gradient = f.gradient(&z);
    let mut records = Vec::new();
    let mut n = 0;

    let finish = |mut records: Vec<IterateRecord>, last: IterateRecord, kind: VerdictKind| {
        let verdict = Verdict::new(kind, &last.point, last.grad_norm);
        records.push(last);
        Trajectory {
            records,
            verdict,
            method,
            params,
        }
    };

    loop {
        let mut record = IterateRecord {
            n,
            point: z.clone(),
            value,
            grad_norm: norm(&gradient),
            step_size: None,
            candidates_tested: 0,
            step_norm: None,
        };
        if let Some(kind) = classify_termination(&record, stop) {
            return finish(records, record, kind);
        }
        let Some(sel) = select(&z, &gradient) else {
            return finish(records, record, VerdictKind::NumericalBreakdown);
        };
        let next: Vec<f64> = match sel.size {
            StepSize::Single(d) => z
                .iter()
                .zip(&gradient)
                .map(|(zi, gi)| zi - d * gi)
                .collect(),
            StepSize::Blockwise(d1, d2) => z
                .iter()
                .zip(&gradient)
                .enumerate()
                .map(|(i, (zi, gi))| zi - if i < m1 { d1 } else { d2 } * gi)
                .collect(),
        };
        let step_norm = next
            .iter()
            .zip(&z)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        if step_norm < stop.stall_step_tolerance {
            return finish(records, record, VerdictKind::NumericalBreakdown);
        }
        record.step_size = Some(sel.size);
        record.candidates_tested = sel.candidates;
        record.step_norm = Some(step_norm);
        if n % thinning == 0 {
            records.push(record);
        }
        z = next;
        value = f.value(&z);
        gradient = f.gradient(&z);
        n += 1;
    }
}

fn check_dimension(f: &dyn DifferentiableFunction, z0: &Point) -> Result<()> {
    if z0.len() != f.dimension() {
        return Err(Error::DimensionMismatch {
            expected: f.dimension(),
            got: z0.len(),
        });
    }
    Ok(())
}

fn check_separable(f: &SeparableObjective, z0: &Point) -> Result<()> {
    if z0.split().is_none() {
        return Err(Error::MissingBlockSplit);
    }
    f.check_point(z0)
}

/// `z_{n+1} = z_n − δ₀∇f(z_n)`.
pub fn run_standard_gd(
    f: &dyn DifferentiableFunction,
    z0: &Point,
    delta0: f64,
    opts: &RunOptions,
) -> Result<Trajectory> {
    check_dimension(f, z0)?;
    if !(delta0 > 0.0 && delta0.is_finite()) {
        return Err(invalid("delta0", "delta0 must be positive and finite"));
    }
    Ok(drive(
        f,
        z0.coords(),
        z0.len(),
        opts,
        Method::StandardGd,
        ParamsUsed::Fixed { delta0 },
        |_, _| {
            Some(Selected {
                size: StepSize::Single(delta0),
                candidates: 0,
            })
        },
    ))
}

/// Backtracking GD: `z_{n+1} = z_n − δ(z_n)∇f(z_n)` with `δ` from
/// [`crate::line_search::backtracking_delta`].
pub fn run_backtracking_gd(
    f: &dyn DifferentiableFunction,
    z0: &Point,
    params: &LineSearchParams,
    opts: &RunOptions,
) -> Result<Trajectory> {
    check_dimension(f, z0)?;
    Ok(drive(
        f,
        z0.coords(),
        z0.len(),
        opts,
        Method::Backtracking,
        ParamsUsed::LineSearch(*params),
        |z, g| {
            let s = backtracking_with_gradient(f, z, g, params, opts.max_halvings);
            (!s.exhausted).then_some(Selected {
                size: StepSize::Single(s.delta),
                candidates: s.candidates_tested,
            })
        },
    ))
}

/// Two-way backtracking GD. The first search starts at `δ₀`, later ones at
/// the previously accepted rate.
pub fn run_two_way_backtracking_gd(
    f: &dyn DifferentiableFunction,
    z0: &Point,
    params: &LineSearchParams,
    opts: &RunOptions,
) -> Result<Trajectory> {
    check_dimension(f, z0)?;
    let mut previous = params.delta0();
    Ok(drive(
        f,
        z0.coords(),
        z0.len(),
        opts,
        Method::TwoWayBacktracking,
        ParamsUsed::LineSearch(*params),
        |z, g| {
            let s = two_way_with_gradient(f, z, g, previous, params, opts.max_halvings);
            if s.exhausted {
                return None;
            }
            previous = s.delta;
            Some(Selected {
                size: StepSize::Single(s.delta),
                candidates: s.candidates_tested,
            })
        },
    ))
}

fn run_blockwise(
    f: &SeparableObjective,
    z0: &Point,
    params: &LineSearchParams,
    rule: BlockRule,
    models: Option<[&dyn SmoothnessModel; 2]>,
    method: Method,
    opts: &RunOptions,
) -> Result<Trajectory> {
    check_separable(f, z0)?;
    if rule == BlockRule::GdNew && models.is_none() {
        return Err(Error::MissingSmoothnessModel);
    }
    let (m1, _) = f.dims();
    let mut previous = (params.delta0(), params.delta0());
    Ok(drive(
        f,
        z0.coords(),
        m1,
        opts,
        method,
        ParamsUsed::LineSearch(*params),
        |z, g| {
            let (x, y) = z.split_at(m1);
            let (g1, g2) = g.split_at(m1);
            let (s1, s2) = select_blocks(
                f,
                x,
                y,
                g1,
                g2,
                rule,
                params,
                models,
                Some(previous),
                opts.max_halvings,
            )
            .ok()?;
            if s1.exhausted || s2.exhausted {
                return None;
            }
            previous = (s1.delta, s2.delta);
            Some(Selected {
                size: StepSize::Blockwise(s1.delta, s2.delta),
                candidates: s1.candidates_tested + s2.candidates_tested,
            })
        },
    ))
}

/// Coordinate-wise backtracking GD: both blocks step simultaneously with
/// their own backtracking rates.
pub fn run_coordinatewise_backtracking_gd(
    f: &SeparableObjective,
    z0: &Point,
    params: &LineSearchParams,
    opts: &RunOptions,
) -> Result<Trajectory> {
    run_blockwise(
        f,
        z0,
        params,
        BlockRule::PlainBacktracking,
        None,
        Method::CoordinatewiseBacktracking,
        opts,
    )
}

/// Coordinate-wise two-way backtracking; each block keeps its own previous rate.
pub fn run_coordinatewise_two_way_gd(
    f: &SeparableObjective,
    z0: &Point,
    params: &LineSearchParams,
    opts: &RunOptions,
) -> Result<Trajectory> {
    run_blockwise(
        f,
        z0,
        params,
        BlockRule::TwoWay,
        None,
        Method::CoordinatewiseTwoWay,
        opts,
    )
}

/// Coordinate-wise backtracking GD-New. A model returning a non-positive or
/// non-finite `r`/`L` at a block with nonzero gradient ends the run with
/// [`VerdictKind::NumericalBreakdown`].
pub fn run_coordinatewise_gdnew(
    f: &SeparableObjective,
    z0: &Point,
    params: &LineSearchParams,
    models: [&dyn SmoothnessModel; 2],
    opts: &RunOptions,
) -> Result<Trajectory> {
    run_blockwise(
        f,
        z0,
        params,
        BlockRule::GdNew,
        Some(models),
        Method::CoordinatewiseGdnew,
        opts,
    )
}

/// Full-space GD-New: one `(r, L)` model on the whole space.
pub fn run_gdnew(
    f: &dyn DifferentiableFunction,
    z0: &Point,
    params: &LineSearchParams,
    model: &dyn SmoothnessModel,
    opts: &RunOptions,
) -> Result<Trajectory> {
    check_dimension(f, z0)?;
    Ok(drive(
        f,
        z0.coords(),
        z0.len(),
        opts,
        Method::Gdnew,
        ParamsUsed::LineSearch(*params),
        |z, g| {
            let s = gdnew_block(model, z, norm(g), params, opts.max_halvings).ok()?;
            (!s.exhausted).then_some(Selected {
                size: StepSize::Single(s.delta),
                candidates: s.candidates_tested,
            })
        },
    ))
}

/// An objective handed to [`run_method`]: coordinate-wise methods need the
/// separable form.
#[derive(Clone)]
pub enum Objective {
    Plain(SharedFunction),
    Separable(SeparableObjective),
}

impl Objective {
    pub fn function(&self) -> &dyn DifferentiableFunction {
        match self {
            Objective::Plain(f) => f.as_ref(),
            Objective::Separable(f) => f,
        }
    }

    pub fn separable(&self) -> Option<&SeparableObjective> {
        match self {
            Objective::Plain(_) => None,
            Objective::Separable(f) => Some(f),
        }
    }

    pub fn dimension(&self) -> usize {
        self.function().dimension()
    }

    /// Attaches this objective's block split to `z0` when it has none.
    pub fn point(&self, coords: Vec<f64>) -> Result<Point> {
        match self {
            Objective::Plain(_) => Ok(Point::new(coords)),
            Objective::Separable(f) => {
                let (m1, m2) = f.dims();
                Point::with_split(coords, m1, m2)
            }
        }
    }
}

/// Runs `method` from `z0`. Standard GD uses `params.delta0()` as its fixed
/// rate; GD-New methods need `model`.
pub fn run_method(
    method: Method,
    objective: &Objective,
    z0: &Point,
    params: &LineSearchParams,
    model: Option<&dyn SmoothnessModel>,
    opts: &RunOptions,
) -> Result<Trajectory> {
    let f = objective.function();
    if method.needs_model() && model.is_none() {
        return Err(Error::MissingSmoothnessModel);
    }
    let separable = || objective.separable().ok_or(Error::MissingBlockSplit);
    let split_point = |f: &SeparableObjective| -> Result<Point> {
        match z0.split() {
            Some(_) => Ok(z0.clone()),
            None => {
                let (m1, m2) = f.dims();
                Point::with_split(z0.coords().to_vec(), m1, m2)
            }
        }
    };
    match method {
        Method::StandardGd => run_standard_gd(f, z0, params.delta0(), opts),
        Method::Backtracking => run_backtracking_gd(f, z0, params, opts),
        Method::TwoWayBacktracking => run_two_way_backtracking_gd(f, z0, params, opts),
        Method::Gdnew => run_gdnew(f, z0, params, model.unwrap(), opts),
        Method::CoordinatewiseBacktracking => {
            let s = separable()?;
            run_coordinatewise_backtracking_gd(s, &split_point(s)?, params, opts)
        }
        Method::CoordinatewiseTwoWay => {
            let s = separable()?;
            run_coordinatewise_two_way_gd(s, &split_point(s)?, params, opts)
        }
        Method::CoordinatewiseGdnew => {
            let s = separable()?;
            let m = model.unwrap();
            run_coordinatewise_gdnew(s, &split_point(s)?, params, [m, m], opts)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::line_search::{armijo_holds, ConstantModel};
    use crate::objective::{DiagonalQuadratic, ExampleG};
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn params(alpha: f64, beta: f64, delta0: f64) -> LineSearchParams {
        LineSearchParams::new(alpha, beta, delta0).unwrap()
    }

    fn half_square() -> DiagonalQuadratic {
        DiagonalQuadratic::isotropic(1, 1.0)
    }

    #[test]
    fn standard_gd_contracts_geometrically() {
        let t = run_standard_gd(
            &half_square(),
            &vec![1.0].into(),
            0.5,
            &RunOptions::default(),
        )
        .unwrap();
        assert_eq!(t.verdict.kind, VerdictKind::CriticalPoint);
        assert_eq!(t.iterations(), 27);
        for r in &t.records {
            assert_eq!(r.point[0], 0.5f64.powi(r.n as i32));
        }
    }

    #[test]
    fn standard_gd_diverges_with_large_rate() {
        let t = run_standard_gd(
            &half_square(),
            &vec![1.0].into(),
            2.5,
            &RunOptions::default(),
        )
        .unwrap();
        assert_eq!(t.verdict.kind, VerdictKind::DivergedToInfinity);
        assert!(t.verdict.limit_point.is_none());
        assert!(norm(t.final_point()) > 1e8);
    }

    #[test]
    fn critical_initial_point_gives_single_record() {
        let t = run_standard_gd(
            &half_square(),
            &vec![0.0].into(),
            0.5,
            &RunOptions::default(),
        )
        .unwrap();
        assert_eq!(t.records.len(), 1);
        assert_eq!(t.verdict.kind, VerdictKind::CriticalPoint);
        assert_eq!(t.verdict.limit_point, Some(vec![0.0]));

        let t = run_backtracking_gd(
            &half_square(),
            &vec![0.0].into(),
            &params(0.5, 0.5, 2.0),
            &RunOptions::default(),
        )
        .unwrap();
        assert_eq!(t.records.len(), 1);
    }

    #[test]
    fn backtracking_quadratic_converges_in_one_step() {
        let t = run_backtracking_gd(
            &half_square(),
            &vec![1.0].into(),
            &params(0.5, 0.5, 2.0),
            &RunOptions::default(),
        )
        .unwrap();
        assert_eq!(t.records.len(), 2);
        assert_eq!(t.records[0].step_size, Some(StepSize::Single(1.0)));
        assert_eq!(t.records[1].point, vec![0.0]);
        assert_eq!(t.verdict.kind, VerdictKind::CriticalPoint);
    }

    #[test]
    fn backtracking_on_example_g_descends_to_a_critical_point() {
        let g = ExampleG;
        let t = run_backtracking_gd(
            &g,
            &vec![2.0 / PI].into(),
            &params(0.5, 0.5, 1.0),
            &RunOptions::default(),
        )
        .unwrap();
        assert_eq!(t.verdict.kind, VerdictKind::CriticalPoint);
        assert!(t.records.windows(2).all(|w| w[1].value <= w[0].value));
        assert!(crate::objective::g_derivative(t.final_point()[0]).abs() < 1e-8);
    }

    #[test]
    fn two_way_matches_backtracking_first_step_and_saves_work() {
        let f = DiagonalQuadratic::isotropic(1, 100.0);
        let p = params(0.5, 0.5, 1.0);
        let opts = RunOptions::default();
        let a = run_backtracking_gd(&f, &vec![1.0].into(), &p, &opts).unwrap();
        let b = run_two_way_backtracking_gd(&f, &vec![1.0].into(), &p, &opts).unwrap();
        assert_eq!(a.records[0], b.records[0]);
        assert!(b.records[1..]
            .iter()
            .filter(|r| r.step_size.is_some())
            .all(|r| r.candidates_tested <= 2));
        for r in &b.records {
            if let Some(StepSize::Single(d)) = r.step_size {
                assert!(armijo_holds(&f, &r.point, d, p.alpha()));
            }
        }
    }

    fn quad_pair() -> SeparableObjective {
        SeparableObjective::new(
            Arc::new(DiagonalQuadratic::isotropic(1, 1.0)),
            Arc::new(DiagonalQuadratic::isotropic(1, 100.0)),
        )
    }

    #[test]
    fn coordinatewise_first_step() {
        let f = quad_pair();
        let t = run_coordinatewise_backtracking_gd(
            &f,
            &Point::from_blocks(&[1.0], &[1.0]),
            &params(0.5, 0.5, 2.0),
            &RunOptions::default().stop.with_max_iterations(1).into(),
        )
        .unwrap();
        assert_eq!(
            t.records[0].step_size,
            Some(StepSize::Blockwise(1.0, 1.0 / 128.0))
        );
        assert_eq!(t.records[1].point, vec![0.0, 0.21875]);
    }

    #[test]
    fn coordinatewise_requires_block_split() {
        let f = quad_pair();
        let err = run_coordinatewise_backtracking_gd(
            &f,
            &vec![1.0, 1.0].into(),
            &params(0.5, 0.5, 2.0),
            &RunOptions::default(),
        )
        .unwrap_err();
        assert_eq!(err, Error::MissingBlockSplit);
    }

    #[test]
    fn coordinatewise_symmetric_blocks_stay_identical() {
        let f = SeparableObjective::example_g_2d();
        let t = run_coordinatewise_backtracking_gd(
            &f,
            &Point::from_blocks(&[0.61], &[0.61]),
            &params(0.5, 0.5, 1.0),
            &RunOptions::default(),
        )
        .unwrap();
        assert!(t.records.iter().all(|r| r.point[0] == r.point[1]));
    }

    #[test]
    fn critical_block_stays_fixed() {
        let f = quad_pair();
        let t = run_coordinatewise_backtracking_gd(
            &f,
            &Point::from_blocks(&[0.0], &[0.7]),
            &params(0.5, 0.5, 2.0),
            &RunOptions::default(),
        )
        .unwrap();
        assert!(t.records.iter().all(|r| r.point[0] == 0.0));
        let solo = run_backtracking_gd(
            f.block2(),
            &vec![0.7].into(),
            &params(0.5, 0.5, 2.0),
            &RunOptions::default(),
        )
        .unwrap();
        let ys: Vec<f64> = t.records.iter().map(|r| r.point[1]).collect();
        let solo_ys: Vec<f64> = solo.records.iter().map(|r| r.point[0]).collect();
        assert_eq!(ys, solo_ys);
    }

    #[test]
    fn coordinatewise_gdnew_constant_model_rate() {
        let f = SeparableObjective::new(
            Arc::new(DiagonalQuadratic::isotropic(1, 1.0)),
            Arc::new(DiagonalQuadratic::isotropic(1, 1.0)),
        );
        let m = ConstantModel {
            radius: 1.0,
            lipschitz: 1.0,
        };
        let t = run_coordinatewise_gdnew(
            &f,
            &Point::from_blocks(&[1.0], &[-2.0]),
            &params(0.5, 0.5, 1.0),
            [&m, &m],
            &RunOptions::default(),
        )
        .unwrap();
        assert_eq!(t.verdict.kind, VerdictKind::CriticalPoint);
        for w in t.records.windows(2) {
            assert_eq!(w[0].step_size, Some(StepSize::Blockwise(0.25, 0.25)));
            assert_eq!(w[1].point[0], 0.75 * w[0].point[0]);
        }
    }

    #[test]
    fn gdnew_with_invalid_model_breaks_down() {
        struct Broken;
        impl SmoothnessModel for Broken {
            fn radius(&self, _: &[f64]) -> f64 {
                -1.0
            }
            fn lipschitz(&self, _: &[f64]) -> f64 {
                1.0
            }
        }
        let f = SeparableObjective::example_g_2d();
        let t = run_coordinatewise_gdnew(
            &f,
            &Point::from_blocks(&[0.5], &[0.5]),
            &params(0.5, 0.5, 1.0),
            [&Broken, &Broken],
            &RunOptions::default(),
        )
        .unwrap();
        assert_eq!(t.verdict.kind, VerdictKind::NumericalBreakdown);
        assert_eq!(t.records.len(), 1);
    }

    #[test]
    fn classify_termination_examples() {
        let stop = StoppingRule::default()
            .with_max_iterations(1000)
            .with_gradient_tolerance(1e-8);
        let stop = StoppingRule {
            divergence_radius: 1e6,
            ..stop
        };
        let rec = |n, point: f64, grad_norm| IterateRecord {
            n,
            point: vec![point],
            value: 0.0,
            grad_norm,
            step_size: None,
            candidates_tested: 0,
            step_norm: None,
        };
        assert_eq!(
            classify_termination(&rec(3, 1.0, 1e-12), &stop),
            Some(VerdictKind::CriticalPoint)
        );
        assert_eq!(
            classify_termination(&rec(3, 1e7, 1.0), &stop),
            Some(VerdictKind::DivergedToInfinity)
        );
        assert_eq!(
            classify_termination(&rec(1000, 1.0, 0.1), &stop),
            Some(VerdictKind::MaxIterations)
        );
        assert_eq!(classify_termination(&rec(5, 1.0, 0.1), &stop), None);
        assert_eq!(
            classify_termination(&rec(5, f64::NAN, 0.1), &stop),
            Some(VerdictKind::NumericalBreakdown)
        );
    }

    #[test]
    fn stopping_rule_validation() {
        assert!(StoppingRule::new(0, 1e-8, 1e8, 0.0).is_err());
        assert!(StoppingRule::new(10, 0.0, 1e8, 0.0).is_err());
        assert!(StoppingRule::new(10, 1e-8, -1.0, 0.0).is_err());
        assert!(StoppingRule::new(10, 1e-8, 1e8, -1.0).is_err());
        assert!(StoppingRule::new(10, 1e-8, 1e8, 0.0).is_ok());
    }

    #[test]
    fn stall_tolerance_ends_run() {
        let stop = StoppingRule {
            stall_step_tolerance: 1e-3,
            ..StoppingRule::default()
        };
        let t = run_standard_gd(&half_square(), &vec![1.0].into(), 0.5, &stop.into()).unwrap();
        assert_eq!(t.verdict.kind, VerdictKind::NumericalBreakdown);
        assert!(t
            .records
            .iter()
            .filter_map(|r| r.step_norm)
            .all(|s| s >= 1e-3));
    }

    #[test]
    fn thinning_keeps_final_record() {
        let opts = RunOptions {
            thinning: 10,
            ..RunOptions::default()
        };
        let t = run_standard_gd(&half_square(), &vec![1.0].into(), 0.5, &opts).unwrap();
        let ns: Vec<usize> = t.records.iter().map(|r| r.n).collect();
        assert_eq!(ns, vec![0, 10, 20, 27]);
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.as_str().parse::<Method>().unwrap(), m);
        }
        assert!("newton".parse::<Method>().is_err());
    }
}
