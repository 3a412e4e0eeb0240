//! Gradient-descent training loop.
//!
//! Each iteration recomputes the active hinge sets at the current model,
//! takes a simultaneous step on `U` and `V` from gradients evaluated at the
//! start of the iteration, and optionally backtracks (halving both step
//! sizes, up to 30 times) while the step would increase the objective.
//! Training stops when the relative objective change drops below `tol` or
//! after `max_iter` iterations.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::SignedGraph;
use crate::model::{
    gradients, objective, ActiveSets, Candidates, FactorModel, Hyperparams, MarginRule,
};
use crate::scalar::Scalar;
use crate::scores::PersonalityScores;

const MAX_HALVINGS: u32 = 30;

/// Outcome of one training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport<T> {
    /// Number of update steps taken.
    pub iterations: usize,
    /// Objective value at initialization and after every step.
    pub objective_trace: Vec<T>,
    /// Whether the relative-change test fired before `max_iter`.
    pub converged: bool,
    /// `(gamma, delta)` active-pair counts at the final model.
    pub final_active_counts: (usize, usize),
}

/// Factors drawn i.i.d. uniform on (-0.01, 0.01) from a seeded generator.
/// Identical `(n, d, seed)` always produces the identical model.
pub fn init_model<T: Scalar>(n: usize, d: usize, seed: u64) -> FactorModel<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |count: usize| -> Vec<T> {
        (0..count)
            .map(|_| T::from_f64_lossy((rng.random::<f64>() - 0.5) * 0.02))
            .collect()
    };
    let u = draw(n * d);
    let v = draw(d * d);
    FactorModel::from_parts(n, d, u, v).expect("init shapes are consistent")
}

/// Train the personality-regularized factorization on `graph`.
pub fn train<T: Scalar>(
    graph: &SignedGraph,
    scores: &PersonalityScores<T>,
    hyper: &Hyperparams<T>,
    rule: &MarginRule<T>,
) -> Result<(FactorModel<T>, TrainReport<T>)> {
    hyper.validate()?;
    rule.validate()?;
    if scores.n() != graph.n() {
        return Err(Error::validation(format!(
            "scores cover {} users, graph has {}",
            scores.n(),
            graph.n()
        )));
    }
    let cand = Candidates::build(scores, hyper, rule);
    run_descent(graph, &cand, hyper)
}

/// Plain matrix-factorization baseline: identical to [`train`] with both
/// personality weights forced to zero.
pub fn train_mf_baseline<T: Scalar>(
    graph: &SignedGraph,
    hyper: &Hyperparams<T>,
) -> Result<(FactorModel<T>, TrainReport<T>)> {
    let hyper = hyper.without_penalties();
    hyper.validate()?;
    run_descent(graph, &Candidates::empty(), &hyper)
}

fn run_descent<T: Scalar>(
    graph: &SignedGraph,
    cand: &Candidates<T>,
    hyper: &Hyperparams<T>,
) -> Result<(FactorModel<T>, TrainReport<T>)> {
    let n = graph.n();
    let mut model = init_model::<T>(n, hyper.d, hyper.seed);
    let (mut j_current, mut active) = objective(&model, graph, cand, hyper)?;
    check_finite_objective(j_current, 0)?;

    let mut trace = vec![j_current];
    let mut converged = false;
    let mut iterations = 0;
    let tiny = T::from_f64_lossy(1e-12);

    for iter in 1..=hyper.max_iter {
        let (gu, gv) = gradients(&model, graph, hyper, &active)?;
        if gu.iter().chain(gv.iter()).any(|g| !g.is_finite()) {
            return Err(Error::Train {
                iteration: iter,
                msg: "gradient is not finite".into(),
            });
        }

        let two = T::one() + T::one();
        let mut step_u = hyper.lr_u;
        let mut step_v = hyper.lr_v;
        let mut halvings = 0u32;
        let (next_model, j_next, next_active) = loop {
            let trial = stepped(&model, &gu, &gv, step_u, step_v);
            let (j_trial, active_trial) = objective(&trial, graph, cand, hyper)?;
            let acceptable = j_trial.is_finite() && j_trial <= j_current;
            if !hyper.backtracking || acceptable {
                // Only an accepted step may fail the finiteness check; a
                // non-finite trial mid-search just halves the step.
                check_finite_objective(j_trial, iter)?;
                break (trial, j_trial, active_trial);
            }
            if halvings == MAX_HALVINGS {
                // Even the smallest step increases J: hold position so the
                // trace stays non-increasing; the relative-change test will
                // stop the run.
                break (model.clone(), j_current, active.clone());
            }
            halvings += 1;
            step_u = step_u / two;
            step_v = step_v / two;
        };

        model = next_model;
        active = next_active;
        iterations = iter;
        trace.push(j_next);

        let change = (j_next - j_current).abs() / j_current.max(tiny);
        j_current = j_next;
        if change < hyper.tol {
            converged = true;
            break;
        }
    }

    let report = TrainReport {
        iterations,
        objective_trace: trace,
        converged,
        final_active_counts: active.counts(),
    };
    Ok((model, report))
}

fn check_finite_objective<T: Scalar>(j: T, iteration: usize) -> Result<()> {
    if !j.is_finite() {
        return Err(Error::Train {
            iteration,
            msg: "objective is not finite".into(),
        });
    }
    Ok(())
}

fn stepped<T: Scalar>(
    model: &FactorModel<T>,
    gu: &[T],
    gv: &[T],
    step_u: T,
    step_v: T,
) -> FactorModel<T> {
    let u = model
        .u()
        .iter()
        .zip(gu)
        .map(|(&x, &g)| x - step_u * g)
        .collect();
    let v = model
        .v()
        .iter()
        .zip(gv)
        .map(|(&x, &g)| x - step_v * g)
        .collect();
    FactorModel::from_parts_unchecked(model.n(), model.d(), u, v)
}

/// Active sets realized by a model, exposed for callers that inspect the
/// final state.
pub fn realized_active_sets<T: Scalar>(
    model: &FactorModel<T>,
    scores: &PersonalityScores<T>,
    hyper: &Hyperparams<T>,
    rule: &MarginRule<T>,
) -> ActiveSets<T> {
    let cand = Candidates::build(scores, hyper, rule);
    let degrees = crate::model::predicted_degrees(model);
    crate::model::active_sets(&cand, &degrees)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::objective_frozen;

    fn small_graph() -> SignedGraph {
        SignedGraph::from_edges(
            6,
            [
                (0, 1, 1),
                (1, 2, 1),
                (2, 3, -1),
                (3, 4, 1),
                (4, 5, -1),
                (5, 0, 1),
                (0, 3, -1),
                (2, 5, 1),
            ],
        )
        .unwrap()
    }

    fn small_hyper() -> Hyperparams<f64> {
        Hyperparams {
            d: 2,
            alpha: 0.0,
            beta: 0.0,
            max_iter: 500,
            ..Hyperparams::default()
        }
    }

    #[test]
    fn init_is_deterministic_and_bounded() {
        let a = init_model::<f64>(5, 3, 99);
        let b = init_model::<f64>(5, 3, 99);
        assert_eq!(a, b);
        assert!(a.u().iter().chain(a.v().iter()).all(|&x| x.abs() < 0.01));
        let c = init_model::<f64>(5, 3, 100);
        assert_ne!(a, c);
    }

    #[test]
    fn descent_reduces_reconstruction_error() {
        let graph = small_graph();
        let scores = PersonalityScores::zeros(6);
        let hyper = small_hyper();
        let rule = MarginRule::default();
        let (model, report) = train(&graph, &scores, &hyper, &rule).unwrap();
        let init = init_model::<f64>(6, 2, hyper.seed);
        let recon = |m: &FactorModel<f64>| {
            graph
                .edges()
                .iter()
                .map(|&(i, j, s)| {
                    let r = f64::from(s) - m.predict_pair(i, j).unwrap();
                    r * r
                })
                .sum::<f64>()
        };
        assert!(recon(&model) < recon(&init));
        assert!(report.iterations > 0);
    }

    #[test]
    fn empty_problem_shrinks_factors() {
        let graph = SignedGraph::empty(4);
        let scores = PersonalityScores::zeros(4);
        let hyper = small_hyper();
        let (model, report) = train(&graph, &scores, &hyper, &MarginRule::default()).unwrap();
        let norm = |m: &FactorModel<f64>| {
            m.u().iter().chain(m.v().iter()).map(|x| x * x).sum::<f64>()
        };
        assert!(norm(&model) < norm(&init_model::<f64>(4, 2, hyper.seed)));
        for w in report.objective_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-9);
        }
    }

    #[test]
    fn training_is_deterministic() {
        let graph = small_graph();
        let scores =
            PersonalityScores::new(vec![0.9, 0.1, 0.8, 0.2, 0.5, 0.0], vec![0.1; 6]).unwrap();
        let mut hyper = small_hyper();
        hyper.alpha = 1.0;
        hyper.beta = 1.0;
        let rule = MarginRule::default();
        let (m1, r1) = train(&graph, &scores, &hyper, &rule).unwrap();
        let (m2, r2) = train(&graph, &scores, &hyper, &rule).unwrap();
        assert_eq!(m1, m2);
        assert_eq!(r1, r2);
    }

    #[test]
    fn baseline_equals_zero_weight_training_bitwise() {
        let graph = small_graph();
        let scores =
            PersonalityScores::new(vec![0.9, 0.1, 0.8, 0.2, 0.5, 0.0], vec![0.1; 6]).unwrap();
        let hyper = small_hyper(); // alpha = beta = 0 already
        let rule = MarginRule::default();
        let (m1, r1) = train(&graph, &scores, &hyper, &rule).unwrap();
        let (m2, r2) = train_mf_baseline(&graph, &hyper).unwrap();
        assert_eq!(m1, m2);
        assert_eq!(r1.objective_trace, r2.objective_trace);
    }

    #[test]
    fn trace_is_non_increasing_with_backtracking() {
        let graph = small_graph();
        let scores =
            PersonalityScores::new(vec![0.9, 0.1, 0.8, 0.2, 0.5, 0.0], vec![0.2; 6]).unwrap();
        let mut hyper = small_hyper();
        hyper.alpha = 5.0;
        hyper.beta = 5.0;
        hyper.lr_u = 0.05; // deliberately too large; backtracking must rescue
        hyper.lr_v = 0.05;
        let (_, report) = train(&graph, &scores, &hyper, &MarginRule::default()).unwrap();
        for w in report.objective_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-9, "{} then {}", w[0], w[1]);
        }
    }

    #[test]
    fn single_small_step_descends_frozen_objective() {
        let graph = small_graph();
        let scores = PersonalityScores::zeros(6);
        let mut hyper = small_hyper();
        hyper.max_iter = 1;
        hyper.lr_u = 1e-6;
        hyper.lr_v = 1e-6;
        hyper.backtracking = false;
        let rule = MarginRule::default();
        let cand = Candidates::build(&scores, &hyper, &rule);
        let init = init_model::<f64>(6, 2, hyper.seed);
        let (j0, active) = objective(&init, &graph, &cand, &hyper).unwrap();
        let (gu, gv) = gradients(&init, &graph, &hyper, &active).unwrap();
        let gnorm: f64 = gu.iter().chain(gv.iter()).map(|g| g * g).sum::<f64>();
        let (model, _) = train(&graph, &scores, &hyper, &rule).unwrap();
        let j1 = objective_frozen(&model, &graph, &hyper, &active).unwrap();
        if gnorm.sqrt() >= 1e-12 {
            assert!(j1 < j0);
        }
    }

    #[test]
    fn divergence_is_reported_with_iteration() {
        let graph = small_graph();
        let scores = PersonalityScores::zeros(6);
        let mut hyper = small_hyper();
        hyper.lr_u = 1e6; // guaranteed blow-up without backtracking
        hyper.lr_v = 1e6;
        hyper.backtracking = false;
        match train(&graph, &scores, &hyper, &MarginRule::default()) {
            Err(Error::Train { iteration, .. }) => assert!(iteration >= 1),
            other => panic!("expected training error, got {other:?}"),
        }
    }
}
