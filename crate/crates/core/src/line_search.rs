//! Armijo conditions and the learning-rate selection procedures.
//!
//! All procedures pick learning rates from the ladder `{βⁿδ₀ : n ≥ 0}`. Ladder
//! values are produced by repeated multiplication from `δ₀`, so the n-th
//! candidate is bit-identical no matter which procedure reaches it.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::objective::{norm_squared, DifferentiableFunction, SeparableObjective};

pub const DEFAULT_MAX_HALVINGS: usize = 100;

/// `(α, β, δ₀)` with `0 < α, β < 1` and `δ₀ > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineSearchParams {
    alpha: f64,
    beta: f64,
    delta0: f64,
}

impl LineSearchParams {
    pub fn new(alpha: f64, beta: f64, delta0: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(invalid("alpha", "alpha must lie in (0,1)"));
        }
        if !(beta > 0.0 && beta < 1.0) {
            return Err(invalid("beta", "beta must lie in (0,1)"));
        }
        if !(delta0 > 0.0 && delta0.is_finite()) {
            return Err(invalid("delta0", "delta0 must be positive and finite"));
        }
        Ok(Self {
            alpha,
            beta,
            delta0,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn delta0(&self) -> f64 {
        self.delta0
    }

    /// `βⁿδ₀`, computed by `n` successive multiplications.
    pub fn candidate(&self, n: usize) -> f64 {
        let mut d = self.delta0;
        for _ in 0..n {
            d *= self.beta;
        }
        d
    }
}

/// Local smoothness data for one block: the gradient is `L(x)`-Lipschitz on
/// the ball `B(x, r(x))`.
pub trait SmoothnessModel: Send + Sync {
    fn radius(&self, x: &[f64]) -> f64;

    fn lipschitz(&self, x: &[f64]) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantModel {
    pub radius: f64,
    pub lipschitz: f64,
}

impl SmoothnessModel for ConstantModel {
    fn radius(&self, _x: &[f64]) -> f64 {
        self.radius
    }

    fn lipschitz(&self, _x: &[f64]) -> f64 {
        self.lipschitz
    }
}

/// Replaces `L(x)` by `max{L(x), L₀}`.
#[derive(Debug, Clone)]
pub struct LipschitzFloor<M> {
    pub inner: M,
    pub floor: f64,
}

impl<M: SmoothnessModel> SmoothnessModel for LipschitzFloor<M> {
    fn radius(&self, x: &[f64]) -> f64 {
        self.inner.radius(x)
    }

    fn lipschitz(&self, x: &[f64]) -> f64 {
        self.inner.lipschitz(x).max(self.floor)
    }
}

/// Evaluates `(r(x), L(x))`, or `None` when either is not a positive finite number.
pub fn query_model(model: &dyn SmoothnessModel, x: &[f64]) -> Option<(f64, f64)> {
    let r = model.radius(x);
    let l = model.lipschitz(x);
    let ok = |v: f64| v > 0.0 && v.is_finite();
    (ok(r) && ok(l)).then_some((r, l))
}

/// Outcome of a learning-rate search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeltaSelection {
    pub delta: f64,
    /// Ladder index `n` of `delta = βⁿδ₀`.
    pub exponent: usize,
    pub candidates_tested: usize,
    /// The cap was hit before any candidate qualified.
    pub exhausted: bool,
}

fn trial_point(z: &[f64], g: &[f64], delta: f64, out: &mut Vec<f64>) {
    out.clear();
    out.extend(z.iter().zip(g).map(|(zi, gi)| zi - delta * gi));
}

/// `f(z − δg) − f(z) ≤ −αδ‖g‖²` for a precomputed gradient `g`.
pub(crate) fn armijo_with_gradient(
    f: &dyn DifferentiableFunction,
    z: &[f64],
    g: &[f64],
    grad_norm_sq: f64,
    delta: f64,
    alpha: f64,
    scratch: &mut Vec<f64>,
) -> bool {
    trial_point(z, g, delta, scratch);
    let lhs = f.value_difference(scratch, z);
    lhs.is_finite() && lhs <= -alpha * delta * grad_norm_sq
}

/// Armijo's condition `f(z − δ∇f(z)) − f(z) ≤ −αδ‖∇f(z)‖²`.
///
/// A non-finite value at the trial point counts as a failure. Equality counts
/// as success.
pub fn armijo_holds(f: &dyn DifferentiableFunction, z: &[f64], delta: f64, alpha: f64) -> bool {
    assert!(delta > 0.0, "delta must be positive");
    let g = f.gradient(z);
    let gn2 = norm_squared(&g);
    armijo_with_gradient(
        f,
        z,
        &g,
        gn2,
        delta,
        alpha,
        &mut Vec::with_capacity(z.len()),
    )
}

/// Coordinate-wise Armijo's condition for `f(x, y) = f₁(x) + f₂(y)`:
///
/// `f(x − δ₁∇f₁(x), y − δ₂∇f₂(y)) − f(x, y) ≤ −α[δ₁‖∇f₁(x)‖² + δ₂‖∇f₂(y)‖²]`.
pub fn coordinatewise_armijo_holds(
    f: &SeparableObjective,
    x: &[f64],
    y: &[f64],
    delta1: f64,
    delta2: f64,
    alpha: f64,
) -> bool {
    assert!(delta1 > 0.0 && delta2 > 0.0, "deltas must be positive");
    let g1 = f.block1().gradient(x);
    let g2 = f.block2().gradient(y);
    let mut x1 = Vec::with_capacity(x.len());
    let mut y1 = Vec::with_capacity(y.len());
    trial_point(x, &g1, delta1, &mut x1);
    trial_point(y, &g2, delta2, &mut y1);
    let lhs = f.block1().value_difference(&x1, x) + f.block2().value_difference(&y1, y);
    // Same per-block products as `armijo_holds`, so two satisfied block
    // inequalities always sum to a satisfied one.
    let rhs = -alpha * delta1 * norm_squared(&g1) + -alpha * delta2 * norm_squared(&g2);
    lhs.is_finite() && lhs <= rhs
}

pub(crate) fn backtracking_with_gradient(
    f: &dyn DifferentiableFunction,
    z: &[f64],
    g: &[f64],
    params: &LineSearchParams,
    max_halvings: usize,
) -> DeltaSelection {
    let gn2 = norm_squared(g);
    let mut scratch = Vec::with_capacity(z.len());
    let mut delta = params.delta0;
    let max_halvings = max_halvings.max(1);
    for n in 0..max_halvings {
        if armijo_with_gradient(f, z, g, gn2, delta, params.alpha, &mut scratch) {
            return DeltaSelection {
                delta,
                exponent: n,
                candidates_tested: n + 1,
                exhausted: false,
            };
        }
        if n + 1 < max_halvings {
            delta *= params.beta;
        }
    }
    DeltaSelection {
        delta,
        exponent: max_halvings - 1,
        candidates_tested: max_halvings,
        exhausted: true,
    }
}

/// Backtracking: the first of `δ₀, βδ₀, β²δ₀, …` satisfying Armijo's condition.
pub fn backtracking_delta(
    f: &dyn DifferentiableFunction,
    z: &[f64],
    params: &LineSearchParams,
    max_halvings: usize,
) -> DeltaSelection {
    let g = f.gradient(z);
    backtracking_with_gradient(f, z, &g, params, max_halvings)
}

/// Ladder index closest to `delta` (in log scale), never negative.
fn ladder_index(params: &LineSearchParams, delta: f64) -> usize {
    let n = ((delta / params.delta0).ln() / params.beta.ln()).round();
    if n.is_finite() && n > 0.0 {
        n as usize
    } else {
        0
    }
}

pub(crate) fn two_way_with_gradient(
    f: &dyn DifferentiableFunction,
    z: &[f64],
    g: &[f64],
    previous_delta: f64,
    params: &LineSearchParams,
    max_moves: usize,
) -> DeltaSelection {
    let gn2 = norm_squared(g);
    let mut scratch = Vec::with_capacity(z.len());
    let mut n = ladder_index(params, previous_delta);
    let mut delta = params.candidate(n);
    let mut tested = 1;
    let holds = |d: f64, s: &mut Vec<f64>| armijo_with_gradient(f, z, g, gn2, d, params.alpha, s);

    if holds(delta, &mut scratch) {
        let mut moves = 0;
        while n > 0 && moves < max_moves {
            let up = params.candidate(n - 1);
            tested += 1;
            moves += 1;
            if !holds(up, &mut scratch) {
                break;
            }
            n -= 1;
            delta = up;
        }
        return DeltaSelection {
            delta,
            exponent: n,
            candidates_tested: tested,
            exhausted: false,
        };
    }
    for _ in 0..max_moves {
        n += 1;
        delta *= params.beta;
        tested += 1;
        if holds(delta, &mut scratch) {
            return DeltaSelection {
                delta,
                exponent: n,
                candidates_tested: tested,
                exhausted: false,
            };
        }
    }
    DeltaSelection {
        delta,
        exponent: n,
        candidates_tested: tested,
        exhausted: true,
    }
}

/// Two-way backtracking: start at the previous step's rate and move up the
/// ladder while Armijo keeps holding (never above `δ₀`), or down until it
/// holds.
///
/// `previous_delta` is snapped to the nearest ladder value first.
pub fn two_way_backtracking_delta(
    f: &dyn DifferentiableFunction,
    z: &[f64],
    previous_delta: f64,
    params: &LineSearchParams,
    max_moves: usize,
) -> DeltaSelection {
    let g = f.gradient(z);
    two_way_with_gradient(f, z, &g, previous_delta, params, max_moves)
}

/// GD-New selection: the largest `βⁿδ₀` with `δ < α/L` and `δ‖∇f‖ < r`,
/// both strict.
pub fn gdnew_delta(
    gradient_norm: f64,
    r_at_x: f64,
    l_at_x: f64,
    params: &LineSearchParams,
    max_halvings: usize,
) -> Result<DeltaSelection> {
    if !(r_at_x > 0.0 && r_at_x.is_finite()) {
        return Err(invalid("r", "radius must be positive and finite"));
    }
    if !(l_at_x > 0.0 && l_at_x.is_finite()) {
        return Err(invalid("L", "Lipschitz bound must be positive and finite"));
    }
    let cap = params.alpha / l_at_x;
    let max_halvings = max_halvings.max(1);
    let mut delta = params.delta0;
    for n in 0..max_halvings {
        if delta < cap && delta * gradient_norm < r_at_x {
            return Ok(DeltaSelection {
                delta,
                exponent: n,
                candidates_tested: n + 1,
                exhausted: false,
            });
        }
        if n + 1 < max_halvings {
            delta *= params.beta;
        }
    }
    Ok(DeltaSelection {
        delta,
        exponent: max_halvings - 1,
        candidates_tested: max_halvings,
        exhausted: true,
    })
}

/// GD-New on one block. A block whose model is undefined at `x` but whose
/// gradient vanishes (the example's `t = 0`) gets the sentinel `δ₀` with zero
/// candidates tested; the step is zero either way.
pub(crate) fn gdnew_block(
    model: &dyn SmoothnessModel,
    x: &[f64],
    gradient_norm: f64,
    params: &LineSearchParams,
    max_halvings: usize,
) -> Result<DeltaSelection> {
    match query_model(model, x) {
        Some((r, l)) => gdnew_delta(gradient_norm, r, l, params, max_halvings),
        None if gradient_norm == 0.0 => Ok(DeltaSelection {
            delta: params.delta0,
            exponent: 0,
            candidates_tested: 0,
            exhausted: false,
        }),
        None => Err(invalid(
            "model",
            "smoothness model returned a non-positive or non-finite value",
        )),
    }
}

/// Per-block selection rule used by the coordinate-wise procedures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockRule {
    PlainBacktracking,
    /// Two-way search; each block carries its own previous rate.
    TwoWay,
    GdNew,
}

/// Selects `(δ₁(x), δ₂(y))` by applying `rule` to each block independently.
///
/// `models` is required for [`BlockRule::GdNew`]; `previous` seeds
/// [`BlockRule::TwoWay`] (defaults to `(δ₀, δ₀)`).
pub fn coordinatewise_deltas(
    f: &SeparableObjective,
    z: &[f64],
    rule: BlockRule,
    params: &LineSearchParams,
    models: Option<[&dyn SmoothnessModel; 2]>,
    previous: Option<(f64, f64)>,
    max_halvings: usize,
) -> Result<(DeltaSelection, DeltaSelection)> {
    if z.len() != f.dimension() {
        return Err(Error::DimensionMismatch {
            expected: f.dimension(),
            got: z.len(),
        });
    }
    let (x, y) = f.split(z);
    let g1 = f.block1().gradient(x);
    let g2 = f.block2().gradient(y);
    select_blocks(
        f,
        x,
        y,
        &g1,
        &g2,
        rule,
        params,
        models,
        previous,
        max_halvings,
    )
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn select_blocks(
    f: &SeparableObjective,
    x: &[f64],
    y: &[f64],
    g1: &[f64],
    g2: &[f64],
    rule: BlockRule,
    params: &LineSearchParams,
    models: Option<[&dyn SmoothnessModel; 2]>,
    previous: Option<(f64, f64)>,
    max_halvings: usize,
) -> Result<(DeltaSelection, DeltaSelection)> {
    match rule {
        BlockRule::PlainBacktracking => Ok((
            backtracking_with_gradient(f.block1(), x, g1, params, max_halvings),
            backtracking_with_gradient(f.block2(), y, g2, params, max_halvings),
        )),
        BlockRule::TwoWay => {
            let (p1, p2) = previous.unwrap_or((params.delta0, params.delta0));
            Ok((
                two_way_with_gradient(f.block1(), x, g1, p1, params, max_halvings),
                two_way_with_gradient(f.block2(), y, g2, p2, params, max_halvings),
            ))
        }
        BlockRule::GdNew => {
            let [m1, m2] = models.ok_or(Error::MissingSmoothnessModel)?;
            Ok((
                gdnew_block(m1, x, norm_squared(g1).sqrt(), params, max_halvings)?,
                gdnew_block(m2, y, norm_squared(g2).sqrt(), params, max_halvings)?,
            ))
        }
    }
}
