//! Shared test corpus: objectives, starting points and parameter sets.
#![allow(dead_code)]

use std::sync::Arc;

use cwarmijo::analysis::example_smoothness_model;
use cwarmijo::line_search::{ConstantModel, LineSearchParams, SmoothnessModel};
use cwarmijo::objective::{DiagonalQuadratic, ExampleG, SeparableObjective};
use cwarmijo::{run_method, Method, Objective, RunOptions, Trajectory};

pub struct CorpusEntry {
    pub name: &'static str,
    pub objective: Objective,
    pub model: Arc<dyn SmoothnessModel>,
    pub starts: Vec<Vec<f64>>,
}

impl CorpusEntry {
    pub fn methods(&self) -> Vec<Method> {
        Method::ALL
            .into_iter()
            .filter(|m| *m != Method::StandardGd)
            .filter(|m| !m.is_coordinatewise() || self.objective.separable().is_some())
            .collect()
    }
}

fn quadratic_model(coeffs: &[f64]) -> Arc<dyn SmoothnessModel> {
    Arc::new(ConstantModel {
        radius: 1e12,
        lipschitz: coeffs.iter().cloned().fold(0.0, f64::max),
    })
}

fn separable_quadratic(a: &[f64], b: &[f64]) -> Objective {
    Objective::Separable(SeparableObjective::new(
        Arc::new(DiagonalQuadratic::new(a.to_vec())),
        Arc::new(DiagonalQuadratic::new(b.to_vec())),
    ))
}

pub fn corpus() -> Vec<CorpusEntry> {
    let g_model: Arc<dyn SmoothnessModel> = Arc::new(example_smoothness_model(0.5).unwrap());
    vec![
        CorpusEntry {
            name: "quadratic-1d",
            objective: Objective::Plain(Arc::new(DiagonalQuadratic::new(vec![3.0]))),
            model: quadratic_model(&[3.0]),
            starts: vec![vec![1.0], vec![-2.5], vec![0.3]],
        },
        CorpusEntry {
            name: "quadratic-4d",
            objective: separable_quadratic(&[1.0, 2.0], &[0.5, 4.0]),
            model: quadratic_model(&[1.0, 2.0, 0.5, 4.0]),
            starts: vec![vec![1.0, -1.0, 2.0, 0.5], vec![-3.0, 0.2, 1.0, 1.0]],
        },
        CorpusEntry {
            name: "ill-conditioned-separable",
            objective: separable_quadratic(&[1.0], &[100.0]),
            model: quadratic_model(&[1.0, 100.0]),
            starts: vec![vec![1.0, 1.0], vec![-2.0, 0.5]],
        },
        CorpusEntry {
            name: "ill-conditioned-plain",
            objective: Objective::Plain(Arc::new(DiagonalQuadratic::new(vec![1.0, 100.0]))),
            model: quadratic_model(&[1.0, 100.0]),
            starts: vec![vec![1.0, 1.0], vec![0.5, -0.01]],
        },
        CorpusEntry {
            name: "g",
            objective: Objective::Plain(Arc::new(ExampleG)),
            model: g_model.clone(),
            starts: vec![vec![0.7], vec![-0.4], vec![1.5], vec![0.05]],
        },
        CorpusEntry {
            name: "g+g",
            objective: Objective::Separable(SeparableObjective::example_g_2d()),
            model: g_model,
            starts: vec![
                vec![0.5, 0.5],
                vec![-0.7, 0.3],
                vec![0.21, -0.9],
                vec![0.05, 0.8],
                vec![-0.33, -0.44],
            ],
        },
    ]
}

pub fn corpus_params() -> Vec<LineSearchParams> {
    [(0.5, 0.5, 1.0), (0.1, 0.8, 10.0), (0.9, 0.3, 0.5)]
        .into_iter()
        .map(|(a, b, d)| LineSearchParams::new(a, b, d).unwrap())
        .collect()
}

pub struct CorpusRun {
    pub entry: &'static str,
    pub method: Method,
    pub params: LineSearchParams,
    pub start: Vec<f64>,
    pub trajectory: Trajectory,
}

/// Every corpus method from every start under every parameter set.
pub fn corpus_runs(opts: &RunOptions) -> Vec<(CorpusRun, Objective)> {
    let mut out = Vec::new();
    for entry in corpus() {
        for method in entry.methods() {
            for params in corpus_params() {
                for start in &entry.starts {
                    let z0 = entry.objective.point(start.clone()).unwrap();
                    let trajectory = run_method(
                        method,
                        &entry.objective,
                        &z0,
                        &params,
                        Some(entry.model.as_ref()),
                        opts,
                    )
                    .unwrap();
                    out.push((
                        CorpusRun {
                            entry: entry.name,
                            method,
                            params,
                            start: start.clone(),
                            trajectory,
                        },
                        entry.objective.clone(),
                    ));
                }
            }
        }
    }
    out
}
