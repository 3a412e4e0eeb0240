//! Low-rank factor model, its regularized objective and exact gradients.
//!
//! The predicted link matrix is `Ghat = U V U^T` for a tall user matrix `U`
//! (n x d) and a small correlation matrix `V` (d x d). `V` is a general
//! matrix because the graph is directed. On top of the masked reconstruction
//! loss and Frobenius terms, two hinge penalties push the predicted degree
//! of high-optimism users above, and of high-pessimism users below, their
//! comparison partners by a rank-dependent margin. Nothing here ever
//! materializes an n x n matrix.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::SignedGraph;
use crate::scalar::Scalar;
use crate::scores::PersonalityScores;

/// Latent user factors `U` (row per user) and correlation matrix `V`.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorModel<T> {
    n: usize,
    d: usize,
    /// n x d, row-major.
    u: Vec<T>,
    /// d x d, row-major.
    v: Vec<T>,
}

impl<T: Scalar> FactorModel<T> {
    pub fn from_parts(n: usize, d: usize, u: Vec<T>, v: Vec<T>) -> Result<Self> {
        if u.len() != n * d || v.len() != d * d {
            return Err(Error::validation(format!(
                "factor shapes {}x{} need {} and {} entries, got {} and {}",
                n,
                d,
                n * d,
                d * d,
                u.len(),
                v.len()
            )));
        }
        if u.iter().chain(v.iter()).any(|x| !x.is_finite()) {
            return Err(Error::validation("factor entries must be finite"));
        }
        Ok(Self { n, d, u, v })
    }

    pub fn zeros(n: usize, d: usize) -> Self {
        Self {
            n,
            d,
            u: vec![T::zero(); n * d],
            v: vec![T::zero(); d * d],
        }
    }

    /// Shape-checked but not finiteness-checked; the trainer catches
    /// non-finite steps through the objective instead.
    pub(crate) fn from_parts_unchecked(n: usize, d: usize, u: Vec<T>, v: Vec<T>) -> Self {
        debug_assert_eq!(u.len(), n * d);
        debug_assert_eq!(v.len(), d * d);
        Self { n, d, u, v }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn u(&self) -> &[T] {
        &self.u
    }

    pub fn v(&self) -> &[T] {
        &self.v
    }

    pub fn u_row(&self, i: usize) -> &[T] {
        &self.u[i * self.d..(i + 1) * self.d]
    }

    /// Predicted link score `Ghat_ij = U_i V U_j^T`. Sign gives the
    /// predicted polarity, magnitude the strength.
    pub fn predict_pair(&self, i: usize, j: usize) -> Result<T> {
        if i >= self.n || j >= self.n {
            return Err(Error::validation(format!(
                "pair ({i}, {j}) out of range for n = {}",
                self.n
            )));
        }
        let d = self.d;
        let uj = self.u_row(j);
        let mut score = T::zero();
        for a in 0..d {
            let mut row = T::zero();
            for (b, &ujb) in uj.iter().enumerate() {
                row += self.v[a * d + b] * ujb;
            }
            score += self.u[i * d + a] * row;
        }
        Ok(score)
    }

    /// Column sums of `U`, the vector `s` with `s_k = sum_i U_ik`.
    pub fn column_sums(&self) -> Vec<T> {
        let mut s = vec![T::zero(); self.d];
        for row in self.u.chunks_exact(self.d) {
            for (sk, &x) in s.iter_mut().zip(row) {
                *sk += x;
            }
        }
        s
    }

    /// `U * V`, row-major n x d.
    fn u_mul_v(&self) -> Vec<T> {
        self.mul_by(|a, k| self.v[a * self.d + k])
    }

    /// `U * V^T`, row-major n x d.
    fn u_mul_v_t(&self) -> Vec<T> {
        self.mul_by(|a, k| self.v[k * self.d + a])
    }

    fn mul_by(&self, v_at: impl Fn(usize, usize) -> T) -> Vec<T> {
        let d = self.d;
        let mut out = vec![T::zero(); self.n * d];
        for (i, row) in self.u.chunks_exact(d).enumerate() {
            for k in 0..d {
                let mut acc = T::zero();
                for (a, &uia) in row.iter().enumerate() {
                    acc += uia * v_at(a, k);
                }
                out[i * d + k] = acc;
            }
        }
        out
    }
}

/// Predicted total degree per user: `deg_i = U_i V s` where `s` is the
/// column-sum vector of `U`. Costs `O(n d + d^2)`.
pub fn predicted_degrees<T: Scalar>(model: &FactorModel<T>) -> Vec<T> {
    let d = model.d;
    let s = model.column_sums();
    // w = V s
    let mut w = vec![T::zero(); d];
    for a in 0..d {
        let mut acc = T::zero();
        for (b, &sb) in s.iter().enumerate() {
            acc += model.v[a * d + b] * sb;
        }
        w[a] = acc;
    }
    model
        .u
        .chunks_exact(d)
        .map(|row| dot(row, &w))
        .collect()
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).fold(T::zero(), |s, v| s + v)
}

/// Solver and penalty weights.
#[derive(Debug, Clone)]
pub struct Hyperparams<T> {
    pub lambda1: T,
    pub lambda2: T,
    pub alpha: T,
    pub beta: T,
    /// Latent dimension.
    pub d: usize,
    /// Minimum optimism difference for a pair to enter the optimism penalty.
    pub t_o: T,
    /// Minimum pessimism difference for the pessimism penalty.
    pub t_p: T,
    pub lr_u: T,
    pub lr_v: T,
    pub max_iter: usize,
    /// Relative objective-change threshold for convergence.
    pub tol: T,
    pub seed: u64,
    /// Halve both step sizes while a step would increase the objective.
    pub backtracking: bool,
}

impl<T: Scalar> Default for Hyperparams<T> {
    fn default() -> Self {
        let c = T::from_f64_lossy;
        Self {
            lambda1: c(0.1),
            lambda2: c(0.1),
            alpha: c(80.0),
            beta: c(80.0),
            d: 100,
            t_o: c(0.5),
            t_p: c(0.5),
            lr_u: c(1e-3),
            lr_v: c(1e-3),
            max_iter: 500,
            tol: c(1e-5),
            seed: 42,
            backtracking: true,
        }
    }
}

impl<T: Scalar> Hyperparams<T> {
    pub fn validate(&self) -> Result<()> {
        let nonneg = [
            ("lambda1", self.lambda1),
            ("lambda2", self.lambda2),
            ("alpha", self.alpha),
            ("beta", self.beta),
        ];
        for (name, value) in nonneg {
            if !(value >= T::zero()) {
                return Err(Error::validation(format!("{name} must be >= 0")));
            }
        }
        if self.d < 1 {
            return Err(Error::validation("latent dimension must be >= 1"));
        }
        if !(self.tol > T::zero()) {
            return Err(Error::validation("tol must be > 0"));
        }
        if !(self.lr_u > T::zero()) || !(self.lr_v > T::zero()) {
            return Err(Error::validation("learning rates must be > 0"));
        }
        Ok(())
    }

    /// Copy with the personality penalties switched off.
    pub fn without_penalties(&self) -> Self {
        let mut h = self.clone();
        h.alpha = T::zero();
        h.beta = T::zero();
        h
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MarginKind {
    Gamma,
    Delta,
}

/// Piecewise map from personality-rank differences to degree margins.
///
/// Cutoffs are strictly descending; the first cutoff at or below the rank
/// difference selects the margin, otherwise the default applies.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginRule<T> {
    gamma_thresholds: Vec<(usize, T)>,
    delta_thresholds: Vec<(usize, T)>,
    default_margin: T,
}

impl<T: Scalar> Default for MarginRule<T> {
    fn default() -> Self {
        let c = T::from_f64_lossy;
        Self {
            gamma_thresholds: vec![(1500, c(15.0)), (200, c(10.0))],
            delta_thresholds: vec![(500, c(15.0)), (150, c(10.0))],
            default_margin: c(5.0),
        }
    }
}

impl<T: Scalar> MarginRule<T> {
    pub fn new(
        gamma_thresholds: Vec<(usize, T)>,
        delta_thresholds: Vec<(usize, T)>,
        default_margin: T,
    ) -> Result<Self> {
        let rule = Self {
            gamma_thresholds,
            delta_thresholds,
            default_margin,
        };
        rule.validate()?;
        Ok(rule)
    }

    pub fn validate(&self) -> Result<()> {
        for list in [&self.gamma_thresholds, &self.delta_thresholds] {
            for pair in list.windows(2) {
                if pair[1].0 >= pair[0].0 {
                    return Err(Error::validation(
                        "margin cutoffs must be strictly descending",
                    ));
                }
            }
            if list.iter().any(|&(_, m)| !(m > T::zero())) {
                return Err(Error::validation("margins must be > 0"));
            }
        }
        if !(self.default_margin > T::zero()) {
            return Err(Error::validation("default margin must be > 0"));
        }
        Ok(())
    }

    pub fn margin(&self, kind: MarginKind, rank_diff: usize) -> T {
        let list = match kind {
            MarginKind::Gamma => &self.gamma_thresholds,
            MarginKind::Delta => &self.delta_thresholds,
        };
        for &(cutoff, margin) in list {
            if rank_diff >= cutoff {
                return margin;
            }
        }
        self.default_margin
    }
}

/// Position of each user when sorted by descending score, ties broken by
/// ascending user index.
pub fn rank_by_score_desc<T: Scalar>(scores: &[T]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .expect("scores are finite")
            .then(a.cmp(&b))
    });
    let mut rank = vec![0usize; scores.len()];
    for (pos, &user) in order.iter().enumerate() {
        rank[user] = pos;
    }
    rank
}

/// Ordered pairs whose personality difference crosses the thresholds:
/// `(i, j)` with `o_i - o_j > t_o` for the optimism side and
/// `p_j - p_i > t_p` for the pessimism side. Static over a training run.
pub fn candidate_pairs<T: Scalar>(
    scores: &PersonalityScores<T>,
    t_o: T,
    t_p: T,
) -> (Vec<(usize, usize)>, Vec<(usize, usize)>) {
    let n = scores.n();
    let o = scores.optimism();
    let p = scores.pessimism();
    let mut gamma = Vec::new();
    let mut delta = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            if o[i] - o[j] > t_o {
                gamma.push((i, j));
            }
            if p[j] - p[i] > t_p {
                delta.push((i, j));
            }
        }
    }
    (gamma, delta)
}

/// Margin for one pair, ranking users on the fly. Prefer [`Candidates`]
/// when evaluating many pairs.
pub fn margins<T: Scalar>(
    rule: &MarginRule<T>,
    scores: &PersonalityScores<T>,
    pair: (usize, usize),
    kind: MarginKind,
) -> T {
    let ranks = match kind {
        MarginKind::Gamma => rank_by_score_desc(scores.optimism()),
        MarginKind::Delta => rank_by_score_desc(scores.pessimism()),
    };
    rule.margin(kind, ranks[pair.0].abs_diff(ranks[pair.1]))
}

/// Threshold-crossing pairs with their margins, computed once per run.
#[derive(Debug, Clone)]
pub struct Candidates<T> {
    /// Optimism-side `(i, j, margin)`.
    pub gamma: Vec<(usize, usize, T)>,
    /// Pessimism-side `(i, j, margin)`.
    pub delta: Vec<(usize, usize, T)>,
}

impl<T: Scalar> Candidates<T> {
    pub fn build(
        scores: &PersonalityScores<T>,
        hyper: &Hyperparams<T>,
        rule: &MarginRule<T>,
    ) -> Self {
        let (gamma_pairs, delta_pairs) = candidate_pairs(scores, hyper.t_o, hyper.t_p);
        let rank_o = rank_by_score_desc(scores.optimism());
        let rank_p = rank_by_score_desc(scores.pessimism());
        let gamma = gamma_pairs
            .into_iter()
            .map(|(i, j)| {
                (
                    i,
                    j,
                    rule.margin(MarginKind::Gamma, rank_o[i].abs_diff(rank_o[j])),
                )
            })
            .collect();
        let delta = delta_pairs
            .into_iter()
            .map(|(i, j)| {
                (
                    i,
                    j,
                    rule.margin(MarginKind::Delta, rank_p[i].abs_diff(rank_p[j])),
                )
            })
            .collect();
        Self { gamma, delta }
    }

    pub fn empty() -> Self {
        Self {
            gamma: Vec::new(),
            delta: Vec::new(),
        }
    }
}

/// Candidate pairs whose margin constraint is violated at the current model:
/// `deg_j - deg_i + margin > 0`. Recomputed every iteration.
#[derive(Debug, Clone)]
pub struct ActiveSets<T> {
    pub gamma: Vec<(usize, usize, T)>,
    pub delta: Vec<(usize, usize, T)>,
}

impl<T: Scalar> ActiveSets<T> {
    pub fn counts(&self) -> (usize, usize) {
        (self.gamma.len(), self.delta.len())
    }
}

/// Filter candidates by the degree test at the supplied degree vector.
pub fn active_sets<T: Scalar>(cand: &Candidates<T>, degrees: &[T]) -> ActiveSets<T> {
    let violated = |pairs: &[(usize, usize, T)]| {
        pairs
            .iter()
            .filter(|&&(i, j, m)| degrees[j] - degrees[i] + m > T::zero())
            .copied()
            .collect()
    };
    ActiveSets {
        gamma: violated(&cand.gamma),
        delta: violated(&cand.delta),
    }
}

fn check_dims<T: Scalar>(model: &FactorModel<T>, graph: &SignedGraph) -> Result<()> {
    if model.n() != graph.n() {
        return Err(Error::validation(format!(
            "model has {} users, graph has {}",
            model.n(),
            graph.n()
        )));
    }
    Ok(())
}

/// Full objective value and the active sets realized at `model`.
///
/// `J = sum_observed (G_ij - Ghat_ij)^2 + lambda1 |U|_F^2 + lambda2 |V|_F^2
///    + alpha * sum_gamma max(0, h)^2 + beta * sum_delta max(0, h)^2`
/// with `h = deg_j - deg_i + margin`.
pub fn objective<T: Scalar>(
    model: &FactorModel<T>,
    graph: &SignedGraph,
    cand: &Candidates<T>,
    hyper: &Hyperparams<T>,
) -> Result<(T, ActiveSets<T>)> {
    check_dims(model, graph)?;
    let degrees = predicted_degrees(model);
    let active = active_sets(cand, &degrees);

    let mut j = reconstruction_loss(model, graph) + frobenius_terms(model, hyper);
    // Hinge sums are skipped entirely at zero weight so that the zero-penalty
    // configuration runs the exact instruction stream of plain factorization.
    if hyper.alpha != T::zero() {
        j += hyper.alpha * hinge_sum(&active.gamma, &degrees);
    }
    if hyper.beta != T::zero() {
        j += hyper.beta * hinge_sum(&active.delta, &degrees);
    }
    Ok((j, active))
}

/// Objective with the hinge penalties frozen to a fixed active set: the
/// clamp is dropped and exactly the given pairs contribute. At the point
/// where `active` was realized this equals [`objective`], and its gradient
/// is the one [`gradients`] computes.
pub fn objective_frozen<T: Scalar>(
    model: &FactorModel<T>,
    graph: &SignedGraph,
    hyper: &Hyperparams<T>,
    active: &ActiveSets<T>,
) -> Result<T> {
    check_dims(model, graph)?;
    let degrees = predicted_degrees(model);
    let mut j = reconstruction_loss(model, graph) + frobenius_terms(model, hyper);
    if hyper.alpha != T::zero() {
        j += hyper.alpha * hinge_sum_unclamped(&active.gamma, &degrees);
    }
    if hyper.beta != T::zero() {
        j += hyper.beta * hinge_sum_unclamped(&active.delta, &degrees);
    }
    Ok(j)
}

fn reconstruction_loss<T: Scalar>(model: &FactorModel<T>, graph: &SignedGraph) -> T {
    let d = model.d;
    let a = model.u_mul_v();
    let mut loss = T::zero();
    for &(i, j, sign) in graph.edges() {
        let pred = dot(&a[i * d..(i + 1) * d], model.u_row(j));
        let r = T::from_i8(sign).unwrap() - pred;
        loss += r * r;
    }
    loss
}

fn frobenius_terms<T: Scalar>(model: &FactorModel<T>, hyper: &Hyperparams<T>) -> T {
    let fu = model.u.iter().map(|&x| x * x).fold(T::zero(), |s, v| s + v);
    let fv = model.v.iter().map(|&x| x * x).fold(T::zero(), |s, v| s + v);
    hyper.lambda1 * fu + hyper.lambda2 * fv
}

fn hinge_sum<T: Scalar>(pairs: &[(usize, usize, T)], degrees: &[T]) -> T {
    pairs
        .iter()
        .map(|&(i, j, m)| {
            let h = degrees[j] - degrees[i] + m;
            let h = if h > T::zero() { h } else { T::zero() };
            h * h
        })
        .fold(T::zero(), |s, v| s + v)
}

fn hinge_sum_unclamped<T: Scalar>(pairs: &[(usize, usize, T)], degrees: &[T]) -> T {
    pairs
        .iter()
        .map(|&(i, j, m)| {
            let h = degrees[j] - degrees[i] + m;
            h * h
        })
        .fold(T::zero(), |s, v| s + v)
}

/// Exact gradient of the objective with the active sets held fixed, which
/// coincides with the true gradient everywhere (the clamp is continuously
/// differentiable and inactive pairs contribute zero slope).
///
/// `active` must have been realized at `model`.
pub fn gradients<T: Scalar>(
    model: &FactorModel<T>,
    graph: &SignedGraph,
    hyper: &Hyperparams<T>,
    active: &ActiveSets<T>,
) -> Result<(Vec<T>, Vec<T>)> {
    check_dims(model, graph)?;
    let n = model.n;
    let d = model.d;
    let two = T::one() + T::one();

    let mut gu = vec![T::zero(); n * d];
    let mut gv = vec![T::zero(); d * d];

    // Reconstruction: for each observed (i, j) with residual e = Ghat - G,
    //   dJ/dU_i += 2e * (U_j V^T),  dJ/dU_j += 2e * (U_i V),
    //   dJ/dV   += 2e * U_i^T U_j.
    let a = model.u_mul_v();
    let b = model.u_mul_v_t();
    for &(i, j, sign) in graph.edges() {
        let ai = &a[i * d..(i + 1) * d];
        let e2 = two * (dot(ai, model.u_row(j)) - T::from_i8(sign).unwrap());
        for k in 0..d {
            gu[i * d + k] += e2 * b[j * d + k];
            gu[j * d + k] += e2 * a[i * d + k];
        }
        let ui = model.u_row(i);
        let uj = model.u_row(j);
        for (ra, &uia) in ui.iter().enumerate() {
            let scaled = e2 * uia;
            for (rb, &ujb) in uj.iter().enumerate() {
                gv[ra * d + rb] += scaled * ujb;
            }
        }
    }

    // Frobenius terms.
    let l1_2 = two * hyper.lambda1;
    for (g, &x) in gu.iter_mut().zip(model.u.iter()) {
        *g += l1_2 * x;
    }
    let l2_2 = two * hyper.lambda2;
    for (g, &x) in gv.iter_mut().zip(model.v.iter()) {
        *g += l2_2 * x;
    }

    // Hinge penalties, routed through deg_k = U_k V s with s = column sums
    // of U. Each violated pair (i, j) with slack h pushes deg_j down and
    // deg_i up; the per-user coefficients c_k collect those pushes:
    //   dJ/dV   += (U^T c) s^T
    //   dJ/dU_m += c_m (V s) + (c^T U) V     (the second term hits every row
    //                                         because s sums all of U)
    let use_gamma = hyper.alpha != T::zero() && !active.gamma.is_empty();
    let use_delta = hyper.beta != T::zero() && !active.delta.is_empty();
    if use_gamma || use_delta {
        let degrees = predicted_degrees(model);
        let s = model.column_sums();
        let mut c = vec![T::zero(); n];
        if use_gamma {
            let k2 = two * hyper.alpha;
            for &(i, j, m) in &active.gamma {
                let h = degrees[j] - degrees[i] + m;
                let push = k2 * h;
                c[j] += push;
                c[i] -= push;
            }
        }
        if use_delta {
            let k2 = two * hyper.beta;
            for &(i, j, m) in &active.delta {
                let h = degrees[j] - degrees[i] + m;
                let push = k2 * h;
                c[j] += push;
                c[i] -= push;
            }
        }

        // w = V s
        let mut w = vec![T::zero(); d];
        for a_idx in 0..d {
            let mut acc = T::zero();
            for (b_idx, &sb) in s.iter().enumerate() {
                acc += model.v[a_idx * d + b_idx] * sb;
            }
            w[a_idx] = acc;
        }
        // uc = U^T c
        let mut uc = vec![T::zero(); d];
        for (m, row) in model.u.chunks_exact(d).enumerate() {
            let cm = c[m];
            if cm != T::zero() {
                for (k, &x) in row.iter().enumerate() {
                    uc[k] += cm * x;
                }
            }
        }
        // r = (U^T c)^T V
        let mut r = vec![T::zero(); d];
        for (a_idx, &uca) in uc.iter().enumerate() {
            for k in 0..d {
                r[k] += uca * model.v[a_idx * d + k];
            }
        }
        for m in 0..n {
            let cm = c[m];
            for k in 0..d {
                gu[m * d + k] += cm * w[k] + r[k];
            }
        }
        for (a_idx, &uca) in uc.iter().enumerate() {
            for (b_idx, &sb) in s.iter().enumerate() {
                gv[a_idx * d + b_idx] += uca * sb;
            }
        }
    }

    Ok((gu, gv))
}

/// Write a checkpoint: header `SLP n d`, then the rows of `U` and `V` as
/// space-separated shortest round-trip decimals.
pub fn save_model<T: Scalar>(model: &FactorModel<T>, path: &Path) -> Result<()> {
    let mut out = format!("SLP {} {}\n", model.n(), model.d());
    let write_rows = |out: &mut String, mat: &[T], d: usize| {
        for row in mat.chunks_exact(d) {
            let line: Vec<String> = row.iter().map(|x| format!("{x}")).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
    };
    write_rows(&mut out, model.u(), model.d());
    write_rows(&mut out, model.v(), model.d());
    fs::write(path, out)?;
    Ok(())
}

/// Read a checkpoint written by [`save_model`].
pub fn load_model<T: Scalar>(path: &Path) -> Result<FactorModel<T>> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();

    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::parse(path, 1, "missing header"))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 3 || fields[0] != "SLP" {
        return Err(Error::parse(path, 1, "expected header `SLP n d`"));
    }
    let n: usize = fields[1]
        .parse()
        .map_err(|_| Error::parse(path, 1, "user count is not an integer"))?;
    let d: usize = fields[2]
        .parse()
        .map_err(|_| Error::parse(path, 1, "dimension is not an integer"))?;

    let mut read_matrix = |rows: usize, what: &str| -> Result<Vec<T>> {
        let mut out = Vec::with_capacity(rows * d);
        for _ in 0..rows {
            let (idx, line) = lines
                .next()
                .ok_or_else(|| Error::parse(path, 0, format!("{what} matrix truncated")))?;
            let lineno = idx + 1;
            let values: Vec<&str> = line.split_whitespace().collect();
            if values.len() != d {
                return Err(Error::parse(
                    path,
                    lineno,
                    format!("expected {d} values, found {}", values.len()),
                ));
            }
            for value in values {
                out.push(T::parse_text(value).ok_or_else(|| {
                    Error::parse(path, lineno, format!("bad number {value:?}"))
                })?);
            }
        }
        Ok(out)
    };

    let u = read_matrix(n, "user")?;
    let v = read_matrix(d, "correlation")?;
    FactorModel::from_parts(n, d, u, v)
}
