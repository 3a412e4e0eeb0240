//! Cross-validated evaluation: stratified splits, rank-based AUC, baselines
//! and the experiment drivers (training-fraction sweep, personality-group
//! ablation, penalty-weight sensitivity grid).
//!
//! Fold jobs are independent pure functions of `(inputs, seed)` and may run
//! concurrently; result assembly is order-independent, so every driver is
//! deterministic regardless of worker count.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::SignedGraph;
use crate::model::{FactorModel, Hyperparams, MarginRule};
use crate::scalar::Scalar;
use crate::scores::PersonalityScores;
use crate::train::{train, train_mf_baseline};

/// Cross-validation configuration.
#[derive(Debug, Clone, Copy)]
pub struct SplitPlan {
    pub folds: usize,
    /// Percentage of the non-test links sampled into the training set.
    pub train_fraction: u32,
    pub seed: u64,
}

impl Default for SplitPlan {
    fn default() -> Self {
        Self {
            folds: 5,
            train_fraction: 100,
            seed: 7,
        }
    }
}

impl SplitPlan {
    pub fn validate(&self) -> Result<()> {
        if self.folds < 2 {
            return Err(Error::validation("need at least 2 folds"));
        }
        if !(1..=100).contains(&self.train_fraction) {
            return Err(Error::validation(format!(
                "training fraction {}% must lie in 1..=100",
                self.train_fraction
            )));
        }
        Ok(())
    }

    fn with_fraction(&self, x: u32) -> Self {
        Self {
            train_fraction: x,
            ..*self
        }
    }
}

/// One cross-validation fold: the training graph (test pairs and unsampled
/// links removed) and the held-out test edges.
#[derive(Debug, Clone)]
pub struct Split {
    pub train: SignedGraph,
    pub test: Vec<(usize, usize, i8)>,
}

/// Evaluation outcome of one fold.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldResult<T> {
    pub fold: usize,
    pub auc: T,
    pub train_pos: usize,
    pub train_neg: usize,
    pub test_pos: usize,
    pub test_neg: usize,
}

/// Stratified folds: positives and negatives are partitioned independently
/// with a seeded shuffle, then each fold's training set samples
/// `train_fraction`% of the remaining links of each sign.
pub fn make_splits(graph: &SignedGraph, plan: &SplitPlan) -> Result<Vec<Split>> {
    plan.validate()?;
    let mut pos: Vec<(usize, usize, i8)> =
        graph.edges().iter().copied().filter(|e| e.2 > 0).collect();
    let mut neg: Vec<(usize, usize, i8)> =
        graph.edges().iter().copied().filter(|e| e.2 < 0).collect();
    if pos.len() < plan.folds || neg.len() < plan.folds {
        return Err(Error::validation(format!(
            "{} positive and {} negative links cannot fill {} stratified folds",
            pos.len(),
            neg.len(),
            plan.folds
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);

    let folds = plan.folds;
    let x = plan.train_fraction as usize;
    let mut splits = Vec::with_capacity(folds);
    for fold in 0..folds {
        let held = |edges: &[(usize, usize, i8)], keep_fold: bool| -> Vec<(usize, usize, i8)> {
            edges
                .iter()
                .enumerate()
                .filter(|(idx, _)| (idx % folds == fold) == keep_fold)
                .map(|(_, &e)| e)
                .collect()
        };
        let mut test = held(&pos, true);
        test.extend(held(&neg, true));

        let mut sample = |pool: Vec<(usize, usize, i8)>| -> Vec<(usize, usize, i8)> {
            if x == 100 {
                return pool;
            }
            let take = pool.len() * x / 100;
            let mut pool = pool;
            pool.shuffle(&mut rng);
            pool.truncate(take);
            pool
        };
        let mut train_edges = sample(held(&pos, false));
        train_edges.extend(sample(held(&neg, false)));

        splits.push(Split {
            train: SignedGraph::from_edges(graph.n(), train_edges)?,
            test,
        });
    }
    Ok(splits)
}

/// Probability that a positive-labeled score ranks above a negative-labeled
/// one, ties counting one half. Computed from rank statistics in
/// `O(m log m)`.
pub fn auc<T: Scalar>(scored: &[(T, i8)]) -> Result<T> {
    let mut pos = 0u64;
    let mut neg = 0u64;
    for &(score, label) in scored {
        if !score.is_finite() {
            return Err(Error::validation("scores must be finite"));
        }
        match label {
            1 => pos += 1,
            -1 => neg += 1,
            other => {
                return Err(Error::validation(format!(
                    "label {other} is not in {{1, -1}}"
                )))
            }
        }
    }
    if pos == 0 || neg == 0 {
        return Err(Error::validation(
            "AUC needs at least one positive and one negative label",
        ));
    }

    let m = scored.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| scored[a].0.partial_cmp(&scored[b].0).expect("finite"));

    // Sum of average 1-based ranks over the positive labels; halves and
    // small integers are exact in f64, which makes the result identical to
    // brute-force pair counting.
    let mut rank_sum_pos = 0.0f64;
    let mut start = 0;
    while start < m {
        let mut end = start + 1;
        while end < m && scored[order[end]].0 == scored[order[start]].0 {
            end += 1;
        }
        let avg_rank = (start + end + 1) as f64 / 2.0;
        for &idx in &order[start..end] {
            if scored[idx].1 == 1 {
                rank_sum_pos += avg_rank;
            }
        }
        start = end;
    }

    let p = pos as f64;
    let n = neg as f64;
    Ok(T::from_f64_lossy(
        (rank_sum_pos - p * (p + 1.0) / 2.0) / (p * n),
    ))
}

/// Score the test pairs with the model and compute fold AUC. The caller
/// fills in the fold index and training counts.
pub fn evaluate_model<T: Scalar>(
    model: &FactorModel<T>,
    test: &[(usize, usize, i8)],
) -> Result<FoldResult<T>> {
    let scored: Vec<(T, i8)> = test
        .iter()
        .map(|&(i, j, sign)| Ok((model.predict_pair(i, j)?, sign)))
        .collect::<Result<_>>()?;
    Ok(FoldResult {
        fold: 0,
        auc: auc(&scored)?,
        train_pos: 0,
        train_neg: 0,
        test_pos: test.iter().filter(|e| e.2 > 0).count(),
        test_neg: test.iter().filter(|e| e.2 < 0).count(),
    })
}

/// Baseline scoring every test pair uniformly at random in (-1, 1).
pub fn random_baseline<T: Scalar>(test: &[(usize, usize, i8)], seed: u64) -> Result<FoldResult<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scored: Vec<(T, i8)> = test
        .iter()
        .map(|&(_, _, sign)| {
            (
                T::from_f64_lossy(rng.random::<f64>() * 2.0 - 1.0),
                sign,
            )
        })
        .collect();
    Ok(FoldResult {
        fold: 0,
        auc: auc(&scored)?,
        train_pos: 0,
        train_neg: 0,
        test_pos: test.iter().filter(|e| e.2 > 0).count(),
        test_neg: test.iter().filter(|e| e.2 < 0).count(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Slp,
    Mf,
    Random,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Slp => "slp",
            Method::Mf => "mf",
            Method::Random => "random",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow<T> {
    pub method: Method,
    pub x: u32,
    pub fold: usize,
    pub auc: T,
}

/// Per-fold AUC of every method at every training fraction.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable<T> {
    pub rows: Vec<SweepRow<T>>,
}

impl<T: Scalar> SweepTable<T> {
    /// Mean AUC over folds for one `(method, x)` cell.
    pub fn mean(&self, method: Method, x: u32) -> Option<T> {
        let values: Vec<T> = self
            .rows
            .iter()
            .filter(|r| r.method == method && r.x == x)
            .map(|r| r.auc)
            .collect();
        mean(&values)
    }

    /// CSV with header `method,x,fold,auc`: per-fold rows at full precision
    /// followed by per-(method, x) mean rows (fold column `mean`, four
    /// decimals).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("method,x,fold,auc\n");
        for row in &self.rows {
            out.push_str(&format!(
                "{},{},{},{}\n",
                row.method.as_str(),
                row.x,
                row.fold,
                row.auc
            ));
        }
        let mut seen = Vec::new();
        for row in &self.rows {
            let key = (row.method, row.x);
            if !seen.contains(&key) {
                seen.push(key);
            }
        }
        for (method, x) in seen {
            if let Some(m) = self.mean(method, x) {
                out.push_str(&format!("{},{x},mean,{m:.4}\n", method.as_str()));
            }
        }
        out
    }
}

fn mean<T: Scalar>(values: &[T]) -> Option<T> {
    if values.is_empty() {
        return None;
    }
    let sum = values.iter().copied().fold(T::zero(), |s, v| s + v);
    Some(sum / T::from_usize(values.len()).unwrap())
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic per-job seed. The training stream depends only on
/// `(base, fold)` so that every driver trains identical models on the same
/// fold.
pub(crate) fn derive_seed(base: u64, stream: u64, index: u64) -> u64 {
    splitmix64(base ^ splitmix64(stream.wrapping_mul(0x9E37).wrapping_add(index)))
}

const TRAIN_STREAM: u64 = 1;
const RANDOM_STREAM: u64 = 2;

fn hyper_for_fold<T: Scalar>(hyper: &Hyperparams<T>, fold: usize) -> Hyperparams<T> {
    let mut h = hyper.clone();
    h.seed = derive_seed(hyper.seed, TRAIN_STREAM, fold as u64);
    h
}

fn finish<T: Scalar>(mut result: FoldResult<T>, split: &Split, fold: usize) -> FoldResult<T> {
    result.fold = fold;
    result.train_pos = split.train.positive_count();
    result.train_neg = split.train.negative_count();
    result
}

/// Train and evaluate the personality model, the plain factorization and the
/// random baseline at every training fraction in `xs`.
pub fn sweep_training_fraction<T: Scalar>(
    graph: &SignedGraph,
    scores: &PersonalityScores<T>,
    hyper: &Hyperparams<T>,
    rule: &MarginRule<T>,
    plan: &SplitPlan,
    xs: &[u32],
) -> Result<SweepTable<T>> {
    if xs.is_empty() {
        return Err(Error::validation("no training fractions requested"));
    }
    let splits_per_x: Vec<Vec<Split>> = xs
        .iter()
        .map(|&x| make_splits(graph, &plan.with_fraction(x)))
        .collect::<Result<_>>()?;

    let jobs: Vec<(usize, usize)> = (0..xs.len())
        .flat_map(|xi| (0..plan.folds).map(move |fold| (xi, fold)))
        .collect();
    let plan_seed = plan.seed;
    let per_job: Vec<Vec<SweepRow<T>>> = jobs
        .into_par_iter()
        .map(|(xi, fold)| -> Result<Vec<SweepRow<T>>> {
            let x = xs[xi];
            let split = &splits_per_x[xi][fold];
            let h = hyper_for_fold(hyper, fold);

            let (slp_model, _) = train(&split.train, scores, &h, rule)?;
            let slp = finish(evaluate_model(&slp_model, &split.test)?, split, fold);

            let (mf_model, _) = train_mf_baseline(&split.train, &h)?;
            let mf = finish(evaluate_model(&mf_model, &split.test)?, split, fold);

            let rnd_seed = derive_seed(plan_seed, RANDOM_STREAM, ((x as u64) << 32) | fold as u64);
            let rnd = finish(random_baseline(&split.test, rnd_seed)?, split, fold);

            Ok(vec![
                SweepRow {
                    method: Method::Slp,
                    x,
                    fold,
                    auc: slp.auc,
                },
                SweepRow {
                    method: Method::Mf,
                    x,
                    fold,
                    auc: mf.auc,
                },
                SweepRow {
                    method: Method::Random,
                    x,
                    fold,
                    auc: rnd.auc,
                },
            ])
        })
        .collect::<Result<_>>()?;

    Ok(SweepTable {
        rows: per_job.into_iter().flatten().collect(),
    })
}

/// Partition users into a strong-personality and an indifferent cluster by
/// 2-means on `(optimism, pessimism)`, seeded with the two points farthest
/// apart. Returns `None` when every user has identical scores.
pub fn strong_indifferent_split<T: Scalar>(scores: &PersonalityScores<T>) -> Option<Vec<bool>> {
    let points: Vec<(f64, f64)> = scores
        .optimism()
        .iter()
        .zip(scores.pessimism())
        .map(|(&o, &p)| (o.to_f64_lossy(), p.to_f64_lossy()))
        .collect();
    let n = points.len();
    if n < 2 {
        return None;
    }

    let dist2 = |a: (f64, f64), b: (f64, f64)| {
        let dx = a.0 - b.0;
        let dy = a.1 - b.1;
        dx * dx + dy * dy
    };

    let mut best = (0usize, 1usize, -1.0f64);
    for i in 0..n {
        for j in (i + 1)..n {
            let d = dist2(points[i], points[j]);
            if d > best.2 {
                best = (i, j, d);
            }
        }
    }
    if best.2 <= 0.0 {
        return None; // all users identical
    }

    let mut centroids = [points[best.0], points[best.1]];
    let mut assignment = vec![false; n];
    for _ in 0..100 {
        let mut changed = false;
        for (idx, &pt) in points.iter().enumerate() {
            let to_second = dist2(pt, centroids[1]) < dist2(pt, centroids[0]);
            if assignment[idx] != to_second {
                assignment[idx] = to_second;
                changed = true;
            }
        }
        for cluster in 0..2 {
            let members: Vec<(f64, f64)> = points
                .iter()
                .zip(&assignment)
                .filter(|&(_, &a)| a == (cluster == 1))
                .map(|(&p, _)| p)
                .collect();
            if !members.is_empty() {
                let count = members.len() as f64;
                centroids[cluster] = (
                    members.iter().map(|p| p.0).sum::<f64>() / count,
                    members.iter().map(|p| p.1).sum::<f64>() / count,
                );
            }
        }
        if !changed {
            break;
        }
    }

    let norm = |c: (f64, f64)| c.0 * c.0 + c.1 * c.1;
    let strong_cluster = norm(centroids[1]) > norm(centroids[0]);
    Some(
        assignment
            .into_iter()
            .map(|a| a == strong_cluster)
            .collect(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AblationGroup {
    /// Personality kept for the strong cluster only.
    StrongOnly,
    /// Personality kept for the indifferent cluster only.
    IndifferentOnly,
    /// Original scores for everyone.
    All,
}

impl AblationGroup {
    pub fn as_str(self) -> &'static str {
        match self {
            AblationGroup::StrongOnly => "strong_only",
            AblationGroup::IndifferentOnly => "indifferent_only",
            AblationGroup::All => "all",
        }
    }
}

const ABLATION_GROUPS: [AblationGroup; 3] = [
    AblationGroup::StrongOnly,
    AblationGroup::IndifferentOnly,
    AblationGroup::All,
];

#[derive(Debug, Clone, PartialEq)]
pub struct AblationTable<T> {
    pub per_fold: Vec<(AblationGroup, usize, T)>,
    pub strong_users: usize,
    pub indifferent_users: usize,
}

impl<T: Scalar> AblationTable<T> {
    pub fn mean(&self, group: AblationGroup) -> Option<T> {
        let values: Vec<T> = self
            .per_fold
            .iter()
            .filter(|r| r.0 == group)
            .map(|r| r.2)
            .collect();
        mean(&values)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("group,fold,auc\n");
        for &(group, fold, auc) in &self.per_fold {
            out.push_str(&format!("{},{fold},{auc}\n", group.as_str()));
        }
        for group in ABLATION_GROUPS {
            if let Some(m) = self.mean(group) {
                out.push_str(&format!("{},mean,{m:.4}\n", group.as_str()));
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AblationOutcome<T> {
    /// All users carry identical scores; no clustering is possible.
    Skipped { reason: String },
    Completed(AblationTable<T>),
}

/// Retrain with personality kept for only one user cluster at a time
/// (training fraction fixed at 100%).
pub fn personality_group_ablation<T: Scalar>(
    graph: &SignedGraph,
    scores: &PersonalityScores<T>,
    hyper: &Hyperparams<T>,
    rule: &MarginRule<T>,
    plan: &SplitPlan,
) -> Result<AblationOutcome<T>> {
    let Some(is_strong) = strong_indifferent_split(scores) else {
        return Ok(AblationOutcome::Skipped {
            reason: "all users have identical personality scores".into(),
        });
    };
    let strong_users = is_strong.iter().filter(|&&s| s).count();
    let indifferent_users = is_strong.len() - strong_users;

    let splits = make_splits(graph, &plan.with_fraction(100))?;
    let is_indifferent: Vec<bool> = is_strong.iter().map(|&s| !s).collect();
    let variants: Vec<(AblationGroup, PersonalityScores<T>)> = vec![
        (AblationGroup::StrongOnly, scores.retained(&is_strong)),
        (
            AblationGroup::IndifferentOnly,
            scores.retained(&is_indifferent),
        ),
        (AblationGroup::All, scores.clone()),
    ];

    let jobs: Vec<(usize, usize)> = (0..variants.len())
        .flat_map(|v| (0..plan.folds).map(move |fold| (v, fold)))
        .collect();
    let per_fold: Vec<(AblationGroup, usize, T)> = jobs
        .into_par_iter()
        .map(|(v, fold)| -> Result<(AblationGroup, usize, T)> {
            let (group, variant_scores) = &variants[v];
            let split = &splits[fold];
            let h = hyper_for_fold(hyper, fold);
            let (model, _) = train(&split.train, variant_scores, &h, rule)?;
            let result = evaluate_model(&model, &split.test)?;
            Ok((*group, fold, result.auc))
        })
        .collect::<Result<_>>()?;

    Ok(AblationOutcome::Completed(AblationTable {
        per_fold,
        strong_users,
        indifferent_users,
    }))
}

/// Mean AUC per `(alpha, beta)` cell (training fraction fixed at 100%).
#[derive(Debug, Clone, PartialEq)]
pub struct GridTable<T> {
    pub rows: Vec<(T, T, T)>,
}

impl<T: Scalar> GridTable<T> {
    pub fn cell(&self, alpha: T, beta: T) -> Option<T> {
        self.rows
            .iter()
            .find(|&&(a, b, _)| a == alpha && b == beta)
            .map(|&(_, _, m)| m)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("alpha,beta,mean_auc\n");
        for &(a, b, m) in &self.rows {
            out.push_str(&format!("{a},{b},{m:.4}\n"));
        }
        out
    }
}

pub fn sensitivity_grid<T: Scalar>(
    graph: &SignedGraph,
    scores: &PersonalityScores<T>,
    hyper: &Hyperparams<T>,
    rule: &MarginRule<T>,
    plan: &SplitPlan,
    grid: &[(T, T)],
) -> Result<GridTable<T>> {
    if grid.is_empty() {
        return Err(Error::validation("empty sensitivity grid"));
    }
    let splits = make_splits(graph, &plan.with_fraction(100))?;

    let jobs: Vec<(usize, usize)> = (0..grid.len())
        .flat_map(|cell| (0..plan.folds).map(move |fold| (cell, fold)))
        .collect();
    let per_job: Vec<(usize, T)> = jobs
        .into_par_iter()
        .map(|(cell, fold)| -> Result<(usize, T)> {
            let (alpha, beta) = grid[cell];
            let split = &splits[fold];
            let mut h = hyper_for_fold(hyper, fold);
            h.alpha = alpha;
            h.beta = beta;
            let (model, _) = train(&split.train, scores, &h, rule)?;
            let result = evaluate_model(&model, &split.test)?;
            Ok((cell, result.auc))
        })
        .collect::<Result<_>>()?;

    let rows = grid
        .iter()
        .enumerate()
        .map(|(cell, &(alpha, beta))| {
            let values: Vec<T> = per_job
                .iter()
                .filter(|&&(c, _)| c == cell)
                .map(|&(_, auc)| auc)
                .collect();
            (alpha, beta, mean(&values).expect("folds exist"))
        })
        .collect();
    Ok(GridTable { rows })
}
