//! Objective functions, points and finite-difference validation.
//!
//! Everything that the line searches and drivers evaluate goes through the
//! [`DifferentiableFunction`] trait. Separable sums `f(x, y) = f₁(x) + f₂(y)`
//! are built with [`SeparableObjective`], which is itself a differentiable
//! function on the product space.

use std::sync::Arc;

use crate::error::{invalid, Error, Result};

/// A real-valued C¹ function on `ℝ^d` with an analytic gradient.
pub trait DifferentiableFunction: Send + Sync {
    fn dimension(&self) -> usize;

    fn value(&self, z: &[f64]) -> f64;

    fn gradient(&self, z: &[f64]) -> Vec<f64>;

    /// `f(a) − f(b)`.
    ///
    /// Separable objectives override this to difference block by block,
    /// which keeps sufficient-decrease tests meaningful when the blocks have
    /// very different magnitudes.
    fn value_difference(&self, a: &[f64], b: &[f64]) -> f64 {
        self.value(a) - self.value(b)
    }

    /// Distance from `z` to the set where the function stops being C²,
    /// if the function knows it. `None` means smooth everywhere.
    fn singular_distance(&self, _z: &[f64]) -> Option<f64> {
        None
    }
}

pub type SharedFunction = Arc<dyn DifferentiableFunction>;

/// Coordinates plus an optional `(m₁, m₂)` split into the `(x, y)` blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    coords: Vec<f64>,
    split: Option<(usize, usize)>,
}

impl Point {
    pub fn new(coords: Vec<f64>) -> Self {
        Self {
            coords,
            split: None,
        }
    }

    pub fn with_split(coords: Vec<f64>, m1: usize, m2: usize) -> Result<Self> {
        if m1 + m2 != coords.len() {
            return Err(Error::DimensionMismatch {
                expected: m1 + m2,
                got: coords.len(),
            });
        }
        Ok(Self {
            coords,
            split: Some((m1, m2)),
        })
    }

    pub fn from_blocks(x: &[f64], y: &[f64]) -> Self {
        let mut coords = Vec::with_capacity(x.len() + y.len());
        coords.extend_from_slice(x);
        coords.extend_from_slice(y);
        Self {
            coords,
            split: Some((x.len(), y.len())),
        }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    pub fn split(&self) -> Option<(usize, usize)> {
        self.split
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    /// The `x` block, or the whole point when there is no split.
    pub fn x(&self) -> &[f64] {
        match self.split {
            Some((m1, _)) => &self.coords[..m1],
            None => &self.coords,
        }
    }

    /// The `y` block, empty when there is no split.
    pub fn y(&self) -> &[f64] {
        match self.split {
            Some((m1, _)) => &self.coords[m1..],
            None => &[],
        }
    }
}

impl From<Vec<f64>> for Point {
    fn from(coords: Vec<f64>) -> Self {
        Point::new(coords)
    }
}

pub fn norm(v: &[f64]) -> f64 {
    norm_squared(v).sqrt()
}

pub fn norm_squared(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum()
}

fn check_dimension(f: &dyn DifferentiableFunction, p: &Point) -> Result<()> {
    if p.len() != f.dimension() {
        return Err(Error::DimensionMismatch {
            expected: f.dimension(),
            got: p.len(),
        });
    }
    Ok(())
}

pub fn eval(f: &dyn DifferentiableFunction, p: &Point) -> Result<f64> {
    check_dimension(f, p)?;
    Ok(f.value(p.coords()))
}

pub fn grad(f: &dyn DifferentiableFunction, p: &Point) -> Result<Vec<f64>> {
    check_dimension(f, p)?;
    Ok(f.gradient(p.coords()))
}

/// Largest coordinate-wise discrepancy between the analytic gradient and a
/// central difference with step `h`, relative to the gradient's magnitude
/// (`max(‖∇f‖∞, ‖fd‖∞)`).
///
/// Points closer than `10h` to a non-differentiable locus are rejected.
pub fn fd_gradient_check(f: &dyn DifferentiableFunction, p: &Point, h: f64) -> Result<f64> {
    check_dimension(f, p)?;
    if !(h > 0.0 && h.is_finite()) {
        return Err(invalid("h", "must be a positive finite step"));
    }
    if let Some(d) = f.singular_distance(p.coords()) {
        if d <= 10.0 * h {
            return Err(invalid(
                "p",
                format!("point lies within 10h of a non-differentiable locus (distance {d})"),
            ));
        }
    }
    let analytic = f.gradient(p.coords());
    let mut probe = p.coords().to_vec();
    let mut fd = Vec::with_capacity(analytic.len());
    for i in 0..probe.len() {
        let orig = probe[i];
        probe[i] = orig + h;
        let fp = f.value(&probe);
        probe[i] = orig - h;
        let fm = f.value(&probe);
        probe[i] = orig;
        fd.push((fp - fm) / (2.0 * h));
    }
    let scale = analytic
        .iter()
        .chain(fd.iter())
        .fold(0.0_f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return Ok(0.0);
    }
    Ok(analytic
        .iter()
        .zip(&fd)
        .map(|(a, d)| (a - d).abs() / scale)
        .fold(0.0, f64::max))
}

/// `½ Σ λᵢ (zᵢ − cᵢ)²`. Coefficients may be negative (saddles).
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalQuadratic {
    coeffs: Vec<f64>,
    center: Vec<f64>,
}

impl DiagonalQuadratic {
    pub fn new(coeffs: Vec<f64>) -> Self {
        let center = vec![0.0; coeffs.len()];
        Self { coeffs, center }
    }

    pub fn isotropic(dimension: usize, lambda: f64) -> Self {
        Self::new(vec![lambda; dimension])
    }

    pub fn with_center(coeffs: Vec<f64>, center: Vec<f64>) -> Result<Self> {
        if coeffs.len() != center.len() {
            return Err(Error::DimensionMismatch {
                expected: coeffs.len(),
                got: center.len(),
            });
        }
        Ok(Self { coeffs, center })
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }
}

impl DifferentiableFunction for DiagonalQuadratic {
    fn dimension(&self) -> usize {
        self.coeffs.len()
    }

    fn value(&self, z: &[f64]) -> f64 {
        0.5 * z
            .iter()
            .zip(&self.center)
            .zip(&self.coeffs)
            .map(|((zi, ci), l)| l * (zi - ci) * (zi - ci))
            .sum::<f64>()
    }

    fn gradient(&self, z: &[f64]) -> Vec<f64> {
        z.iter()
            .zip(&self.center)
            .zip(&self.coeffs)
            .map(|((zi, ci), l)| l * (zi - ci))
            .collect()
    }
}

/// `g(t) = t³ sin(1/t)`, extended by `g(0) = 0`.
pub fn g_value(t: f64) -> f64 {
    if t == 0.0 {
        0.0
    } else {
        t * t * t * (1.0 / t).sin()
    }
}

/// `g′(t) = 3t² sin(1/t) − t cos(1/t)`, extended by `g′(0) = 0`.
pub fn g_derivative(t: f64) -> f64 {
    if t == 0.0 {
        0.0
    } else {
        let inv = 1.0 / t;
        3.0 * t * t * inv.sin() - t * inv.cos()
    }
}

/// `g″(t) = 6t sin(1/t) − 4 cos(1/t) − sin(1/t)/t` for `t ≠ 0`.
pub fn g_second_derivative(t: f64) -> Result<f64> {
    if t == 0.0 {
        return Err(Error::SecondDerivativeUndefined);
    }
    let inv = 1.0 / t;
    let (s, c) = inv.sin_cos();
    Ok(6.0 * t * s - 4.0 * c - s * inv)
}

/// The one-dimensional block `g(t) = t³ sin(1/t)`. C¹ everywhere, C² off 0.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ExampleG;

impl DifferentiableFunction for ExampleG {
    fn dimension(&self) -> usize {
        1
    }

    fn value(&self, z: &[f64]) -> f64 {
        g_value(z[0])
    }

    fn gradient(&self, z: &[f64]) -> Vec<f64> {
        vec![g_derivative(z[0])]
    }

    fn singular_distance(&self, z: &[f64]) -> Option<f64> {
        Some(z[0].abs())
    }
}

pub fn make_example_g() -> ExampleG {
    ExampleG
}

/// `f(x, y) = f₁(x) + f₂(y)`.
#[derive(Clone)]
pub struct SeparableObjective {
    block1: SharedFunction,
    block2: SharedFunction,
}

impl std::fmt::Debug for SeparableObjective {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SeparableObjective")
            .field("m1", &self.block1.dimension())
            .field("m2", &self.block2.dimension())
            .finish()
    }
}

impl SeparableObjective {
    pub fn new(block1: SharedFunction, block2: SharedFunction) -> Self {
        Self { block1, block2 }
    }

    /// `g(x) + g(y)` on `ℝ²`.
    pub fn example_g_2d() -> Self {
        Self::new(Arc::new(ExampleG), Arc::new(ExampleG))
    }

    pub fn block1(&self) -> &dyn DifferentiableFunction {
        self.block1.as_ref()
    }

    pub fn block2(&self) -> &dyn DifferentiableFunction {
        self.block2.as_ref()
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.block1.dimension(), self.block2.dimension())
    }

    /// Splits a flat coordinate vector into `(x, y)`.
    pub fn split<'a>(&self, z: &'a [f64]) -> (&'a [f64], &'a [f64]) {
        z.split_at(self.block1.dimension())
    }

    /// Checks that `p` has the right length and, if it carries a split,
    /// that the split matches `(m₁, m₂)`.
    pub fn check_point(&self, p: &Point) -> Result<()> {
        let (m1, m2) = self.dims();
        if p.len() != m1 + m2 {
            return Err(Error::DimensionMismatch {
                expected: m1 + m2,
                got: p.len(),
            });
        }
        if let Some((a, _)) = p.split() {
            if a != m1 {
                return Err(Error::DimensionMismatch {
                    expected: m1,
                    got: a,
                });
            }
        }
        Ok(())
    }
}

impl DifferentiableFunction for SeparableObjective {
    fn dimension(&self) -> usize {
        self.block1.dimension() + self.block2.dimension()
    }

    fn value(&self, z: &[f64]) -> f64 {
        let (x, y) = self.split(z);
        self.block1.value(x) + self.block2.value(y)
    }

    fn gradient(&self, z: &[f64]) -> Vec<f64> {
        let (x, y) = self.split(z);
        let mut g = self.block1.gradient(x);
        g.extend(self.block2.gradient(y));
        g
    }

    fn value_difference(&self, a: &[f64], b: &[f64]) -> f64 {
        let (ax, ay) = self.split(a);
        let (bx, by) = self.split(b);
        self.block1.value_difference(ax, bx) + self.block2.value_difference(ay, by)
    }

    fn singular_distance(&self, z: &[f64]) -> Option<f64> {
        let (x, y) = self.split(z);
        match (
            self.block1.singular_distance(x),
            self.block2.singular_distance(y),
        ) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn quadratic_value_and_gradient() {
        let f = DiagonalQuadratic::isotropic(2, 1.0);
        assert_eq!(eval(&f, &Point::new(vec![0.0, 0.0])).unwrap(), 0.0);
        assert_eq!(
            grad(&f, &Point::new(vec![3.0, 4.0])).unwrap(),
            vec![3.0, 4.0]
        );
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let f = DiagonalQuadratic::isotropic(2, 1.0);
        let err = eval(&f, &Point::new(vec![1.0])).unwrap_err();
        assert_eq!(
            err,
            Error::DimensionMismatch {
                expected: 2,
                got: 1
            }
        );
        assert!(grad(&f, &Point::new(vec![1.0, 2.0, 3.0])).is_err());
    }

    #[test]
    fn example_g_reference_values() {
        let g = make_example_g();
        let t = 2.0 / PI;
        assert!(close(
            eval(&g, &Point::new(vec![t])).unwrap(),
            t.powi(3),
            1e-15
        ));
        assert!(close(t.powi(3), 0.258012, 1e-6));
        assert_eq!(g.value(&[0.0]), 0.0);

        assert!(close(g.gradient(&[1.0 / PI])[0], 1.0 / PI, 1e-14));
        assert_eq!(g.gradient(&[0.0]), vec![0.0]);

        let t = 1.0 / (2.0 * PI);
        assert!(g.value(&[t]).abs() < 1e-17);
        assert!(close(g.gradient(&[t])[0], -1.0 / (2.0 * PI), 1e-14));
    }

    #[test]
    fn g_is_even_and_derivative_odd() {
        for &t in &[0.013, 0.2, 0.77, 1.5, 12.0] {
            assert_eq!(g_value(-t), g_value(t));
            assert_eq!(g_derivative(-t), -g_derivative(t));
        }
    }

    #[test]
    fn second_derivative_reference_and_zero() {
        assert!(close(g_second_derivative(1.0 / PI).unwrap(), 4.0, 1e-12));
        assert_eq!(
            g_second_derivative(0.0),
            Err(Error::SecondDerivativeUndefined)
        );
    }

    #[test]
    fn second_derivative_matches_central_difference_of_derivative() {
        let h = 1e-5;
        for &t in &[0.3, -0.3, 0.8, 2.5] {
            let fd = (g_derivative(t + h) - g_derivative(t - h)) / (2.0 * h);
            let exact = g_second_derivative(t).unwrap();
            assert!(
                (fd - exact).abs() <= 1e-4 * exact.abs(),
                "t={t}: {fd} vs {exact}"
            );
        }
    }

    #[test]
    fn fd_check_examples() {
        let q = DiagonalQuadratic::new(vec![1.0, 3.0, 0.5]);
        let err = fd_gradient_check(&q, &Point::new(vec![1.0, -2.0, 0.25]), 1e-6).unwrap();
        assert!(err < 1e-8, "{err}");

        let g = ExampleG;
        assert!(fd_gradient_check(&g, &Point::new(vec![0.5]), 1e-6).unwrap() < 1e-5);
        assert!(fd_gradient_check(&g, &Point::new(vec![0.01]), 1e-6).unwrap() < 1e-3);
    }

    #[test]
    fn fd_check_rejects_points_near_the_singular_axis() {
        let g = ExampleG;
        assert!(fd_gradient_check(&g, &Point::new(vec![5e-6]), 1e-6).is_err());
        assert!(fd_gradient_check(&g, &Point::new(vec![0.5]), 0.0).is_err());
    }

    #[test]
    fn separable_value_and_gradient_concatenate() {
        let f = SeparableObjective::new(
            Arc::new(DiagonalQuadratic::new(vec![1.0, 2.0])),
            Arc::new(ExampleG),
        );
        let z = [0.5, -1.0, 0.3];
        assert_eq!(
            f.value(&z),
            f.block1().value(&z[..2]) + f.block2().value(&z[2..])
        );
        let mut expected = f.block1().gradient(&z[..2]);
        expected.extend(f.block2().gradient(&z[2..]));
        assert_eq!(f.gradient(&z), expected);
        assert_eq!(f.singular_distance(&z), Some(0.3));
    }

    #[test]
    fn point_blocks() {
        let p = Point::from_blocks(&[1.0, 2.0], &[3.0]);
        assert_eq!(p.x(), &[1.0, 2.0]);
        assert_eq!(p.y(), &[3.0]);
        assert!(Point::with_split(vec![1.0, 2.0], 2, 1).is_err());
        let f = SeparableObjective::example_g_2d();
        assert!(f
            .check_point(&Point::with_split(vec![1.0, 2.0], 1, 1).unwrap())
            .is_ok());
        assert!(f.check_point(&Point::new(vec![1.0])).is_err());
    }
}
