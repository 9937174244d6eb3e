use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::objective::{norm, DifferentiableFunction};

pub const DEFAULT_HESSIAN_STEP: f64 = 1e-4;
/// Relative zero-eigenvalue tolerance: `|λ| ≤ tol·(1 + max|λ|)` counts as zero.
pub const DEFAULT_HESSIAN_TOL: f64 = 1e-4;

const BISECTION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CriticalPointKind {
    LocalMinimum,
    GeneralizedSaddle,
    Degenerate,
    /// The example's non-isolated critical point `(0, 0)`.
    Origin,
}

impl CriticalPointKind {
    pub const ALL: [CriticalPointKind; 4] = [
        CriticalPointKind::LocalMinimum,
        CriticalPointKind::GeneralizedSaddle,
        CriticalPointKind::Degenerate,
        CriticalPointKind::Origin,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CriticalPointKind::LocalMinimum => "LocalMinimum",
            CriticalPointKind::GeneralizedSaddle => "GeneralizedSaddle",
            CriticalPointKind::Degenerate => "Degenerate",
            CriticalPointKind::Origin => "Origin",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EigenSign {
    Negative,
    Zero,
    Positive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalPointClass {
    pub kind: CriticalPointKind,
    pub eigen_signs: Vec<EigenSign>,
    pub eigenvalues: Vec<f64>,
    pub tolerance_used: f64,
    /// The point was too close to a non-C² locus for a Hessian estimate.
    pub near_singular: bool,
}

impl CriticalPointClass {
    pub fn origin() -> Self {
        Self {
            kind: CriticalPointKind::Origin,
            eigen_signs: Vec::new(),
            eigenvalues: Vec::new(),
            tolerance_used: 0.0,
            near_singular: true,
        }
    }

    fn from_eigenvalues(mut eigenvalues: Vec<f64>, tol: f64) -> Self {
        eigenvalues.sort_by(|a, b| a.total_cmp(b));
        let largest = eigenvalues.iter().fold(0.0_f64, |m, l| m.max(l.abs()));
        let threshold = tol * (1.0 + largest);
        let eigen_signs: Vec<EigenSign> = eigenvalues
            .iter()
            .map(|&l| {
                if l.abs() <= threshold {
                    EigenSign::Zero
                } else if l < 0.0 {
                    EigenSign::Negative
                } else {
                    EigenSign::Positive
                }
            })
            .collect();
        let kind = if eigen_signs.contains(&EigenSign::Negative) {
            CriticalPointKind::GeneralizedSaddle
        } else if eigen_signs.contains(&EigenSign::Zero) {
            CriticalPointKind::Degenerate
        } else {
            CriticalPointKind::LocalMinimum
        };
        Self {
            kind,
            eigen_signs,
            eigenvalues,
            tolerance_used: threshold,
            near_singular: false,
        }
    }
}

/// Classifies a critical point from the eigenvalues of a symmetrized
/// central-difference Hessian (differences of the analytic gradient).
///
/// Requires `‖∇f(z)‖ < tol`. Points within `10h` of a non-C² locus come back
/// as [`CriticalPointKind::Degenerate`] with `near_singular` set.
pub fn classify_critical_point(
    f: &dyn DifferentiableFunction,
    z: &[f64],
    h: f64,
    tol: f64,
) -> Result<CriticalPointClass> {
    if z.len() != f.dimension() {
        return Err(Error::DimensionMismatch {
            expected: f.dimension(),
            got: z.len(),
        });
    }
    if !(h > 0.0) {
        return Err(invalid("h", "must be positive"));
    }
    let grad_norm = norm(&f.gradient(z));
    if !(grad_norm < tol) {
        return Err(Error::NotCritical { grad_norm, tol });
    }
    if f.singular_distance(z).is_some_and(|d| d <= 10.0 * h) {
        return Ok(CriticalPointClass {
            kind: CriticalPointKind::Degenerate,
            eigen_signs: Vec::new(),
            eigenvalues: Vec::new(),
            tolerance_used: tol,
            near_singular: true,
        });
    }

    let d = z.len();
    let mut hessian = DMatrix::<f64>::zeros(d, d);
    let mut probe = z.to_vec();
    for i in 0..d {
        probe[i] = z[i] + h;
        let gp = f.gradient(&probe);
        probe[i] = z[i] - h;
        let gm = f.gradient(&probe);
        probe[i] = z[i];
        for j in 0..d {
            hessian[(i, j)] = (gp[j] - gm[j]) / (2.0 * h);
        }
    }
    let symmetric = (&hessian + hessian.transpose()) * 0.5;
    let eigen = SymmetricEigen::new(symmetric);
    Ok(CriticalPointClass::from_eigenvalues(
        eigen.eigenvalues.iter().copied().collect(),
        tol,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatalogEntry {
    pub location: f64,
    pub class: CriticalPointClass,
}

/// Critical points of a one-dimensional function on a window, in increasing order.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CriticalPointCatalog {
    pub entries: Vec<CatalogEntry>,
}

impl CriticalPointCatalog {
    pub fn locations(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.location).collect()
    }

    pub fn kinds(&self) -> Vec<CriticalPointKind> {
        self.entries.iter().map(|e| e.class.kind).collect()
    }
}

fn derivative(f: &dyn DifferentiableFunction, t: f64) -> f64 {
    f.gradient(&[t])[0]
}

fn bisect(f: &dyn DifferentiableFunction, mut lo: f64, mut hi: f64) -> f64 {
    let mut d_lo = derivative(f, lo);
    for _ in 0..200 {
        if hi - lo <= BISECTION_TOL {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let d_mid = derivative(f, mid);
        if d_mid == 0.0 {
            return mid;
        }
        if (d_mid < 0.0) == (d_lo < 0.0) {
            lo = mid;
            d_lo = d_mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Sign-change scan of `f′` on `grid` equal cells of `window`, refined by
/// bisection to `1e-12`. Each root is classified by a central-difference
/// second derivative.
///
/// Roots closer together than one grid cell can be missed; for
/// `t³ sin(1/t)` keep the window away from `0`, where critical points
/// accumulate.
pub fn find_critical_points_1d(
    f: &dyn DifferentiableFunction,
    window: (f64, f64),
    grid: usize,
) -> Result<CriticalPointCatalog> {
    if f.dimension() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: f.dimension(),
        });
    }
    let (a, b) = window;
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(invalid("window", "must be a bounded interval with a < b"));
    }
    if grid < 2 {
        return Err(invalid("grid", "must be at least 2"));
    }
    let nodes: Vec<f64> = (0..=grid)
        .map(|i| a + (b - a) * (i as f64 / grid as f64))
        .collect();
    let values: Vec<f64> = nodes.iter().map(|&t| derivative(f, t)).collect();

    let mut roots = Vec::new();
    for i in 0..=grid {
        if values[i] == 0.0 {
            roots.push(nodes[i]);
        } else if i < grid && values[i + 1] != 0.0 && (values[i] < 0.0) != (values[i + 1] < 0.0) {
            roots.push(bisect(f, nodes[i], nodes[i + 1]));
        }
    }

    let entries = roots
        .into_iter()
        .map(|t| {
            let h = 1e-6 * t.abs().max(1e-3);
            let class = match f.singular_distance(&[t]) {
                Some(dist) if dist <= 10.0 * h => CriticalPointClass {
                    kind: CriticalPointKind::Degenerate,
                    eigen_signs: Vec::new(),
                    eigenvalues: Vec::new(),
                    tolerance_used: DEFAULT_HESSIAN_TOL,
                    near_singular: true,
                },
                _ => {
                    let second = (derivative(f, t + h) - derivative(f, t - h)) / (2.0 * h);
                    CriticalPointClass::from_eigenvalues(vec![second], DEFAULT_HESSIAN_TOL)
                }
            };
            CatalogEntry { location: t, class }
        })
        .collect();
    Ok(CriticalPointCatalog { entries })
}
