use crate::error::{invalid, Result};
use crate::line_search::SmoothnessModel;

/// Smoothness model for `g(t) = t³ sin(1/t)` and its separable sums.
///
/// `r(z) = shrink · min_i |z_i|`, and `L(z)` is the largest value of the
/// envelope `e(s) = 6s + 4 + 1/s ≥ |g″(s)|` over the coordinate intervals
/// `[|z_i| − r, |z_i| + r]`. `e` is convex on `(0, ∞)`, so its maximum on an
/// interval sits at an endpoint. On `ℝ` this is the one-block model; on `ℝ²`
/// it bounds the diagonal Hessian of `g(x) + g(y)` on `B(z, r(z))`.
///
/// At a point with a zero coordinate `r = 0` and `L = ∞`: the model is
/// undefined there and the drivers fall back to their zero-gradient sentinel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExampleModel {
    shrink: f64,
    lipschitz_floor: Option<f64>,
}

fn envelope(s: f64) -> f64 {
    6.0 * s + 4.0 + 1.0 / s
}

impl ExampleModel {
    pub fn shrink(&self) -> f64 {
        self.shrink
    }

    /// Replaces `L` by `max{L, L₀}`.
    pub fn with_lipschitz_floor(mut self, floor: f64) -> Result<Self> {
        if !(floor > 0.0 && floor.is_finite()) {
            return Err(invalid("l_floor", "must be positive and finite"));
        }
        self.lipschitz_floor = Some(floor);
        Ok(self)
    }

    pub fn lipschitz_floor(&self) -> Option<f64> {
        self.lipschitz_floor
    }
}

pub fn example_smoothness_model(shrink: f64) -> Result<ExampleModel> {
    if !(shrink > 0.0 && shrink < 1.0) {
        return Err(invalid("shrink", "shrink must lie in (0,1)"));
    }
    Ok(ExampleModel {
        shrink,
        lipschitz_floor: None,
    })
}

impl SmoothnessModel for ExampleModel {
    fn radius(&self, z: &[f64]) -> f64 {
        self.shrink * z.iter().fold(f64::INFINITY, |m, c| m.min(c.abs()))
    }

    fn lipschitz(&self, z: &[f64]) -> f64 {
        let r = self.radius(z);
        let l = z
            .iter()
            .map(|c| {
                let a = c.abs();
                envelope(a - r).max(envelope(a + r))
            })
            .fold(0.0, f64::max);
        match self.lipschitz_floor {
            Some(floor) => l.max(floor),
            None => l,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::line_search::query_model;
    use crate::objective::g_second_derivative;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn reference_values() {
        let m = example_smoothness_model(0.5).unwrap();
        assert_eq!(m.radius(&[1.0]), 0.5);
        let l = m.lipschitz(&[1.0]);
        assert!((l - (9.0 + 4.0 + 2.0 / 3.0)).abs() < 1e-12, "{l}");
        assert!((l - 13.667).abs() < 1e-3);
    }

    #[test]
    fn undefined_on_the_axis() {
        let m = example_smoothness_model(0.5).unwrap();
        assert_eq!(query_model(&m, &[0.0]), None);
        assert_eq!(query_model(&m, &[0.3, 0.0]), None);
    }

    #[test]
    fn shrink_validation_and_floor() {
        assert!(example_smoothness_model(0.0).is_err());
        assert!(example_smoothness_model(1.0).is_err());
        let m = example_smoothness_model(0.5)
            .unwrap()
            .with_lipschitz_floor(100.0)
            .unwrap();
        assert_eq!(m.lipschitz(&[1.0]), 100.0);
        assert!(example_smoothness_model(0.5)
            .unwrap()
            .with_lipschitz_floor(0.0)
            .is_err());
    }

    #[test]
    fn gdnew_rate_is_bounded_below_on_compacts_away_from_zero() {
        use crate::line_search::{gdnew_delta, LineSearchParams};
        use crate::objective::g_derivative;
        let p = LineSearchParams::new(0.5, 0.5, 1.0).unwrap();
        let m = example_smoothness_model(0.5).unwrap();
        for &(a, b) in &[(0.01, 0.1), (0.1, 1.0), (-2.0, -0.5)] {
            let grid: Vec<f64> = (0..=10_000).map(|i| a + (b - a) * i as f64 / 1e4).collect();
            let (mut inf, mut l_max, mut r_min, mut g_max) =
                (f64::INFINITY, 0.0_f64, f64::INFINITY, 0.0_f64);
            for &t in &grid {
                let (r, l) = (m.radius(&[t]), m.lipschitz(&[t]));
                let gn = g_derivative(t).abs();
                inf = inf.min(gdnew_delta(gn, r, l, &p, 200).unwrap().delta);
                l_max = l_max.max(l);
                r_min = r_min.min(r);
                g_max = g_max.max(gn);
            }
            // The chosen rung is at least β times the tighter cap.
            let floor = p
                .delta0()
                .min(p.beta() * (p.alpha() / l_max).min(r_min / g_max));
            assert!(inf >= floor && floor > 0.0, "[{a},{b}]: {inf} < {floor}");
        }
    }

    #[test]
    fn dominates_second_derivative_on_sampled_balls() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for &shrink in &[0.1, 0.5, 0.9] {
            let m = example_smoothness_model(shrink).unwrap();
            for _ in 0..100 {
                let t: f64 = rng.gen_range(0.001..3.0) * if rng.gen() { 1.0 } else { -1.0 };
                let r = m.radius(&[t]);
                assert!(r < t.abs());
                let l = m.lipschitz(&[t]);
                for _ in 0..100 {
                    let s = t + rng.gen_range(-r..r);
                    let g2 = g_second_derivative(s).unwrap().abs();
                    assert!(g2 <= l, "t={t} s={s}: |g''|={g2} > L={l}");
                }
            }
        }
    }
}
