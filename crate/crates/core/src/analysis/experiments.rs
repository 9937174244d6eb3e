//! Seeded Monte-Carlo experiments.
//!
//! Every trajectory or instance `i` draws from its own ChaCha stream
//! `(seed, i)`, so results do not depend on how rayon schedules the work.
//! Outcomes are collected in index order and aggregated by counting.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::critical::{classify_critical_point, CriticalPointKind};
use super::model::ExampleModel;
use super::VerdictKind;
use crate::error::{invalid, Result};
use crate::line_search::{
    armijo_holds, backtracking_delta, coordinatewise_armijo_holds, coordinatewise_deltas,
    gdnew_delta, two_way_backtracking_delta, BlockRule, LineSearchParams, SmoothnessModel,
    DEFAULT_MAX_HALVINGS,
};
use crate::objective::{
    norm, DiagonalQuadratic, ExampleG, Point, SeparableObjective, SharedFunction,
};
use crate::optimizers::{run_gdnew, run_method, Method, Objective, RunOptions, Trajectory};

/// Limits closer than this to `(0, 0)` are classified as the origin.
pub const ORIGIN_RADIUS: f64 = 1e-4;

pub(crate) fn stream_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

fn sample_params(rng: &mut ChaCha8Rng) -> LineSearchParams {
    let alpha = rng.gen_range(0.05..0.95);
    let beta = rng.gen_range(0.1..0.9);
    let delta0 = rng.gen_range(0.1..10.0);
    LineSearchParams::new(alpha, beta, delta0).expect("sampled ranges are valid")
}

fn sample_quadratic(rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>) {
    let dim = rng.gen_range(1..=5);
    let coeffs = (0..dim).map(|_| rng.gen_range(0.1..100.0)).collect();
    let point = (0..dim).map(|_| rng.gen_range(-10.0..10.0)).collect();
    (coeffs, point)
}

/// One separable instance of the remark experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RemarkInstance {
    pub index: usize,
    pub coeffs1: Vec<f64>,
    pub coeffs2: Vec<f64>,
    pub z: Vec<f64>,
    pub params: LineSearchParams,
    pub delta_full: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub exhausted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RemarkReport {
    pub instances: usize,
    pub checked: usize,
    pub exhausted: usize,
    /// Instances with `δ(x, y) > max{δ₁, δ₂}`.
    pub violations: Vec<RemarkInstance>,
    pub exceeds_min: usize,
    pub exceeds_min_frequency: f64,
}

impl RemarkReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

fn remark_instance(index: usize, seed: u64) -> RemarkInstance {
    let mut rng = stream_rng(seed, index);
    let (coeffs1, x) = sample_quadratic(&mut rng);
    let (coeffs2, y) = sample_quadratic(&mut rng);
    let params = sample_params(&mut rng);
    let f = SeparableObjective::new(
        Arc::new(DiagonalQuadratic::new(coeffs1.clone())),
        Arc::new(DiagonalQuadratic::new(coeffs2.clone())),
    );
    let z = Point::from_blocks(&x, &y);
    let full = backtracking_delta(&f, z.coords(), &params, DEFAULT_MAX_HALVINGS);
    let (d1, d2) = coordinatewise_deltas(
        &f,
        z.coords(),
        BlockRule::PlainBacktracking,
        &params,
        None,
        None,
        DEFAULT_MAX_HALVINGS,
    )
    .expect("plain backtracking needs no models");
    RemarkInstance {
        index,
        coeffs1,
        coeffs2,
        z: z.into_coords(),
        params,
        delta_full: full.delta,
        delta1: d1.delta,
        delta2: d2.delta,
        exhausted: full.exhausted || d1.exhausted || d2.exhausted,
    }
}

/// Falsification harness for `δ(x, y) ≤ max{δ₁(x), δ₂(y)}` on random
/// separable diagonal quadratics (1–5 dimensions per block). Also counts how
/// often `δ(x, y) > min{δ₁, δ₂}`.
pub fn remark_inequality_experiment(instance_count: usize, seed: u64) -> Result<RemarkReport> {
    if instance_count == 0 {
        return Err(invalid("instance_count", "must be at least 1"));
    }
    let instances: Vec<RemarkInstance> = (0..instance_count)
        .into_par_iter()
        .map(|i| remark_instance(i, seed))
        .collect();
    let checked: Vec<&RemarkInstance> = instances.iter().filter(|r| !r.exhausted).collect();
    let violations = checked
        .iter()
        .filter(|r| r.delta_full > r.delta1.max(r.delta2))
        .map(|r| (*r).clone())
        .collect();
    let exceeds_min = checked
        .iter()
        .filter(|r| r.delta_full > r.delta1.min(r.delta2))
        .count();
    Ok(RemarkReport {
        instances: instance_count,
        checked: checked.len(),
        exhausted: instance_count - checked.len(),
        violations,
        exceeds_min,
        exceeds_min_frequency: exceeds_min as f64 / checked.len().max(1) as f64,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyResult {
    pub name: &'static str,
    pub checked: usize,
    pub violations: usize,
}

impl PropertyResult {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

fn random_block(rng: &mut ChaCha8Rng) -> (SharedFunction, Vec<f64>) {
    if rng.gen_bool(0.5) {
        let (coeffs, point) = sample_quadratic(rng);
        (Arc::new(DiagonalQuadratic::new(coeffs)), point)
    } else {
        let mut t = 0.0;
        while t == 0.0 {
            t = rng.gen_range(-2.0..2.0);
        }
        (Arc::new(ExampleG), vec![t])
    }
}

/// Randomized check of the line-search invariants: ladder membership,
/// maximality, two-way consistency, GD-New caps, coordinate-wise Armijo
/// satisfaction and the max-inequality. Blocks are random diagonal
/// quadratics or `g`.
pub fn line_search_property_suite(instances: usize, seed: u64) -> Vec<PropertyResult> {
    const NAMES: [&str; 6] = [
        "membership",
        "maximality",
        "two-way-consistency",
        "gdnew-caps",
        "coordinatewise-armijo",
        "remark-inequality",
    ];
    let per_instance: Vec<[(usize, usize); 6]> = (0..instances)
        .into_par_iter()
        .map(|i| {
            let mut out = [(0usize, 0usize); 6];
            let mut tally = |k: usize, ok: bool| {
                out[k].0 += 1;
                if !ok {
                    out[k].1 += 1;
                }
            };
            let mut rng = stream_rng(seed, i);
            let (b1, x) = random_block(&mut rng);
            let (b2, y) = random_block(&mut rng);
            let params = sample_params(&mut rng);
            let f = SeparableObjective::new(b1, b2);
            let z = Point::from_blocks(&x, &y);
            let z = z.coords();
            let max = DEFAULT_MAX_HALVINGS;

            let full = backtracking_delta(&f, z, &params, max);
            if !full.exhausted {
                tally(
                    0,
                    full.delta == params.candidate(full.candidates_tested - 1)
                        && full.exponent + 1 == full.candidates_tested,
                );
                if full.exponent > 0 {
                    let above = params.candidate(full.exponent - 1);
                    tally(1, !armijo_holds(&f, z, above, params.alpha()));
                }
                let two_way = two_way_backtracking_delta(&f, z, params.delta0(), &params, max - 1);
                tally(2, two_way.delta == full.delta && !two_way.exhausted);
            }

            let gn: f64 = rng.gen_range(0.0..50.0);
            let r: f64 = rng.gen_range(0.01..5.0);
            let l: f64 = rng.gen_range(0.01..1000.0);
            if let Ok(s) = gdnew_delta(gn, r, l, &params, max) {
                if !s.exhausted {
                    let caps = |d: f64| d < params.alpha() / l && d * gn < r;
                    let upper_fails = s.exponent == 0 || !caps(params.candidate(s.exponent - 1));
                    tally(3, caps(s.delta) && upper_fails);
                }
            }

            let (d1, d2) = coordinatewise_deltas(
                &f,
                z,
                BlockRule::PlainBacktracking,
                &params,
                None,
                None,
                max,
            )
            .expect("plain backtracking needs no models");
            if !d1.exhausted && !d2.exhausted {
                let (xs, ys) = f.split(z);
                tally(
                    4,
                    coordinatewise_armijo_holds(&f, xs, ys, d1.delta, d2.delta, params.alpha()),
                );
                if !full.exhausted {
                    tally(5, full.delta <= d1.delta.max(d2.delta));
                }
            }
            out
        })
        .collect();

    NAMES
        .iter()
        .enumerate()
        .map(|(k, &name)| PropertyResult {
            name,
            checked: per_instance.iter().map(|o| o[k].0).sum(),
            violations: per_instance.iter().map(|o| o[k].1).sum(),
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObjectiveTag {
    ExampleG2d,
    Custom,
}

/// Configuration for [`convergence_basin_experiment`].
#[derive(Clone)]
pub struct BasinConfig {
    pub method: Method,
    pub objective_tag: ObjectiveTag,
    pub objective: Objective,
    /// Used by the GD-New methods, on each block and on the full space.
    pub model: Option<Arc<dyn SmoothnessModel>>,
    pub samples: usize,
    /// One `(lo, hi)` interval per coordinate.
    pub init_box: Vec<(f64, f64)>,
    pub base_params: LineSearchParams,
    /// Relative half-width of the uniform perturbation of `(α, β, δ₀)`;
    /// `None` keeps the base parameters.
    pub perturbation: Option<f64>,
    pub run: RunOptions,
    /// Classify critical-point limits through the Hessian.
    pub classify: bool,
    pub hessian_step: f64,
    pub hessian_tol: f64,
    pub seed: u64,
}

impl BasinConfig {
    /// Coordinate-wise GD-New on `g(x) + g(y)` over `[−1, 1]²` with ±10%
    /// parameter randomization.
    pub fn example(
        samples: usize,
        base_params: LineSearchParams,
        model: ExampleModel,
        seed: u64,
    ) -> Self {
        Self {
            method: Method::CoordinatewiseGdnew,
            objective_tag: ObjectiveTag::ExampleG2d,
            objective: Objective::Separable(SeparableObjective::example_g_2d()),
            model: Some(Arc::new(model)),
            samples,
            init_box: vec![(-1.0, 1.0), (-1.0, 1.0)],
            base_params,
            perturbation: Some(0.1),
            run: RunOptions::default(),
            classify: true,
            hessian_step: super::DEFAULT_HESSIAN_STEP,
            hessian_tol: super::DEFAULT_HESSIAN_TOL,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BasinOutcome {
    pub index: usize,
    pub z0: Vec<f64>,
    pub params: LineSearchParams,
    pub verdict: VerdictKind,
    pub iterations: usize,
    pub final_point: Vec<f64>,
    pub final_gradient_norm: f64,
    /// Present for critical-point verdicts that could be classified.
    pub class: Option<CriticalPointKind>,
    pub near_singular: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BasinReport {
    pub method: Method,
    pub objective: ObjectiveTag,
    pub samples: usize,
    pub verdict_counts: BTreeMap<VerdictKind, usize>,
    pub class_counts: BTreeMap<CriticalPointKind, usize>,
    pub outcomes: Vec<BasinOutcome>,
}

impl BasinReport {
    pub fn verdict_count(&self, kind: VerdictKind) -> usize {
        self.verdict_counts.get(&kind).copied().unwrap_or(0)
    }

    pub fn class_count(&self, kind: CriticalPointKind) -> usize {
        self.class_counts.get(&kind).copied().unwrap_or(0)
    }

    pub fn critical_fraction(&self) -> f64 {
        self.verdict_count(VerdictKind::CriticalPoint) as f64 / self.samples as f64
    }

    /// Share of critical-point limits that are local minima or the origin.
    pub fn minimum_or_origin_fraction(&self) -> f64 {
        let critical = self.verdict_count(VerdictKind::CriticalPoint);
        if critical == 0 {
            return 0.0;
        }
        (self.class_count(CriticalPointKind::LocalMinimum)
            + self.class_count(CriticalPointKind::Origin)) as f64
            / critical as f64
    }
}

fn perturb(
    rng: &mut ChaCha8Rng,
    base: &LineSearchParams,
    p: Option<f64>,
) -> Result<LineSearchParams> {
    match p {
        None => Ok(*base),
        Some(p) => {
            let mut scale = || rng.gen_range(1.0 - p..=1.0 + p);
            let (a, b, d) = (scale(), scale(), scale());
            LineSearchParams::new(base.alpha() * a, base.beta() * b, base.delta0() * d)
        }
    }
}

fn sample_box(rng: &mut ChaCha8Rng, init_box: &[(f64, f64)]) -> Vec<f64> {
    init_box
        .iter()
        .map(|&(lo, hi)| {
            // Axes have measure zero; redraw the (practically impossible) exact zero.
            loop {
                let v = if lo < hi { rng.gen_range(lo..hi) } else { lo };
                if v != 0.0 || lo == hi {
                    break v;
                }
            }
        })
        .collect()
}

fn validate_sampling(
    samples: usize,
    init_box: &[(f64, f64)],
    dim: usize,
    perturbation: Option<f64>,
    base: &LineSearchParams,
) -> Result<()> {
    if samples == 0 {
        return Err(invalid("samples", "must be at least 1"));
    }
    if init_box.len() != dim {
        return Err(invalid(
            "init_box",
            format!("needs {dim} intervals, got {}", init_box.len()),
        ));
    }
    if init_box
        .iter()
        .any(|&(lo, hi)| !(lo.is_finite() && hi.is_finite() && lo <= hi))
    {
        return Err(invalid(
            "init_box",
            "intervals must be bounded with lo <= hi",
        ));
    }
    if let Some(p) = perturbation {
        if !(0.0..1.0).contains(&p) {
            return Err(invalid("perturbation", "must lie in [0,1)"));
        }
        if base.alpha() * (1.0 + p) >= 1.0 || base.beta() * (1.0 + p) >= 1.0 {
            return Err(invalid(
                "perturbation",
                "perturbed alpha/beta could leave (0,1)",
            ));
        }
    }
    Ok(())
}

/// Hessian step for classifying a limit of `g(x) + g(y)`: the default step,
/// shrunk near the axes where `sin(1/t)` oscillates on the scale `t²`.
fn example_hessian_step(default: f64, z: &[f64]) -> f64 {
    let nearest = z.iter().fold(f64::INFINITY, |m, c| m.min(c.abs()));
    default.min(0.01 * nearest * nearest)
}

/// Samples initial points uniformly from `init_box`, optionally perturbs the
/// parameters, runs `method`, and classifies every critical-point limit.
///
/// `on_trajectory` sees each finished trajectory and its wall-clock time
/// (e.g. to write it out) before it is dropped.
pub fn convergence_basin_experiment<F>(cfg: &BasinConfig, on_trajectory: F) -> Result<BasinReport>
where
    F: Fn(usize, &Trajectory, Duration) + Sync,
{
    validate_sampling(
        cfg.samples,
        &cfg.init_box,
        cfg.objective.dimension(),
        cfg.perturbation,
        &cfg.base_params,
    )?;
    let objective = &cfg.objective;
    let outcomes: Vec<BasinOutcome> = (0..cfg.samples)
        .into_par_iter()
        .map(|i| -> Result<BasinOutcome> {
            let mut rng = stream_rng(cfg.seed, i);
            let z0 = sample_box(&mut rng, &cfg.init_box);
            let params = perturb(&mut rng, &cfg.base_params, cfg.perturbation)?;
            let point = objective.point(z0.clone())?;
            let start = Instant::now();
            let traj = run_method(
                cfg.method,
                objective,
                &point,
                &params,
                cfg.model.as_deref(),
                &cfg.run,
            )?;
            on_trajectory(i, &traj, start.elapsed());

            let final_point = traj.final_point().to_vec();
            let mut class = None;
            let mut near_singular = false;
            if cfg.classify && traj.verdict.kind == VerdictKind::CriticalPoint {
                if cfg.objective_tag == ObjectiveTag::ExampleG2d
                    && norm(&final_point) < ORIGIN_RADIUS
                {
                    class = Some(CriticalPointKind::Origin);
                    near_singular = true;
                } else {
                    let h = match cfg.objective_tag {
                        ObjectiveTag::ExampleG2d => {
                            example_hessian_step(cfg.hessian_step, &final_point)
                        }
                        ObjectiveTag::Custom => cfg.hessian_step,
                    };
                    if let Ok(c) = classify_critical_point(
                        objective.function(),
                        &final_point,
                        h,
                        cfg.hessian_tol,
                    ) {
                        near_singular = c.near_singular;
                        class = Some(c.kind);
                    }
                }
            }
            Ok(BasinOutcome {
                index: i,
                z0,
                params,
                verdict: traj.verdict.kind,
                iterations: traj.iterations(),
                final_point,
                final_gradient_norm: traj.verdict.final_gradient_norm,
                class,
                near_singular,
            })
        })
        .collect::<Result<_>>()?;

    let mut verdict_counts = BTreeMap::new();
    let mut class_counts = BTreeMap::new();
    for o in &outcomes {
        *verdict_counts.entry(o.verdict).or_insert(0) += 1;
        if let Some(c) = o.class {
            *class_counts.entry(c).or_insert(0) += 1;
        }
    }
    Ok(BasinReport {
        method: cfg.method,
        objective: cfg.objective_tag,
        samples: cfg.samples,
        verdict_counts,
        class_counts,
        outcomes,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Claim6Case {
    /// Converged to a critical point away from both axes.
    OffAxisLimit,
    /// Late iterates cluster on one axis.
    AxisCluster,
    Anomaly,
}

/// Configuration for [`claim6_dichotomy_check`] (full-space GD-New on
/// `g(x) + g(y)`).
#[derive(Debug, Clone)]
pub struct Claim6Config {
    pub samples: usize,
    pub init_box: Vec<(f64, f64)>,
    pub params: LineSearchParams,
    pub model: ExampleModel,
    pub run: RunOptions,
    /// Distance to an axis below which a point counts as on the axis.
    pub axis_tol: f64,
    /// Trailing share of the iterates treated as cluster points.
    pub late_fraction: f64,
    pub seed: u64,
}

impl Claim6Config {
    pub fn new(samples: usize, params: LineSearchParams, model: ExampleModel, seed: u64) -> Self {
        Self {
            samples,
            init_box: vec![(-1.0, 1.0), (-1.0, 1.0)],
            params,
            model,
            run: RunOptions::default(),
            axis_tol: 1e-3,
            late_fraction: 0.05,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Claim6Outcome {
    pub index: usize,
    pub z0: Vec<f64>,
    pub verdict: VerdictKind,
    pub iterations: usize,
    pub final_point: Vec<f64>,
    pub case: Claim6Case,
    /// Axis (coordinate index) the late iterates cluster on, for the axis case.
    pub axis: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Claim6Report {
    pub samples: usize,
    pub off_axis_limit: usize,
    pub axis_cluster: usize,
    pub anomalies: usize,
    pub outcomes: Vec<Claim6Outcome>,
}

impl Claim6Report {
    pub fn passed(&self) -> bool {
        self.anomalies == 0
    }
}

/// Decides which side of the dichotomy a trajectory falls on.
///
/// The axis case requires every late iterate (the trailing `late_fraction`
/// of the records) within `axis_tol` of one coordinate axis, and the sorted
/// projections of those iterates onto the axis must have no gap wider than
/// the longest late step.
pub fn classify_dichotomy(
    traj: &Trajectory,
    axis_tol: f64,
    late_fraction: f64,
) -> (Claim6Case, Option<usize>) {
    if traj.verdict.kind == VerdictKind::CriticalPoint
        && traj.final_point().iter().all(|c| c.abs() > axis_tol)
    {
        return (Claim6Case::OffAxisLimit, None);
    }
    let records = &traj.records;
    let late = ((records.len() as f64 * late_fraction).ceil() as usize).clamp(1, records.len());
    let window = &records[records.len() - late..];
    let max_step = window
        .iter()
        .filter_map(|r| r.step_norm)
        .fold(0.0_f64, f64::max);
    let dim = traj.final_point().len();
    for axis in 0..dim {
        if !window.iter().all(|r| r.point[axis].abs() <= axis_tol) {
            continue;
        }
        let connected = (0..dim).filter(|&k| k != axis).all(|k| {
            let mut proj: Vec<f64> = window.iter().map(|r| r.point[k]).collect();
            proj.sort_by(|a, b| a.total_cmp(b));
            proj.windows(2).all(|w| w[1] - w[0] <= max_step)
        });
        if connected {
            return (Claim6Case::AxisCluster, Some(axis));
        }
    }
    (Claim6Case::Anomaly, None)
}

/// Runs full-space GD-New on `g(x) + g(y)` from random initial points and
/// sorts every trajectory into the off-axis-limit case, the axis-cluster
/// case, or an anomaly.
pub fn claim6_dichotomy_check<F>(cfg: &Claim6Config, on_trajectory: F) -> Result<Claim6Report>
where
    F: Fn(usize, &Trajectory, Duration) + Sync,
{
    validate_sampling(cfg.samples, &cfg.init_box, 2, None, &cfg.params)?;
    if !(cfg.late_fraction > 0.0 && cfg.late_fraction <= 1.0) {
        return Err(invalid("late_fraction", "must lie in (0,1]"));
    }
    let f = SeparableObjective::example_g_2d();
    let mut run = cfg.run;
    run.thinning = 1;
    let outcomes: Vec<Claim6Outcome> = (0..cfg.samples)
        .into_par_iter()
        .map(|i| -> Result<Claim6Outcome> {
            let mut rng = stream_rng(cfg.seed, i);
            let z0 = sample_box(&mut rng, &cfg.init_box);
            let start = Instant::now();
            let traj = run_gdnew(&f, &Point::new(z0.clone()), &cfg.params, &cfg.model, &run)?;
            on_trajectory(i, &traj, start.elapsed());
            let (case, axis) = classify_dichotomy(&traj, cfg.axis_tol, cfg.late_fraction);
            Ok(Claim6Outcome {
                index: i,
                z0,
                verdict: traj.verdict.kind,
                iterations: traj.iterations(),
                final_point: traj.final_point().to_vec(),
                case,
                axis,
            })
        })
        .collect::<Result<_>>()?;
    let count = |c: Claim6Case| outcomes.iter().filter(|o| o.case == c).count();
    Ok(Claim6Report {
        samples: cfg.samples,
        off_axis_limit: count(Claim6Case::OffAxisLimit),
        axis_cluster: count(Claim6Case::AxisCluster),
        anomalies: count(Claim6Case::Anomaly),
        outcomes,
    })
}
