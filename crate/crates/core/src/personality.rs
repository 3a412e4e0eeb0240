//! Optimism/pessimism scoring from behavioral feedback.
//!
//! Two feedback sources are supported: item ratings (a user is optimistic
//! when she frequently rates poorly-received items high, pessimistic when
//! she rates well-received items low) and pairwise opinion counts (positive
//! opinions toward users the network dislikes, negative opinions toward
//! users the network likes). Every returned score is a fraction of a subset
//! over its superset and therefore lies in `[0, 1]`.

use crate::error::{Error, Result};
use crate::feedback::{OpinionCounts, RatingsTable};
use crate::scalar::Scalar;
use crate::scores::PersonalityScores;

/// Thresholds for the ratings scenario.
#[derive(Debug, Clone, Copy)]
pub struct ScenarioConfig<T> {
    /// Ratings at or below this value count as low, above it as high.
    pub r_th: u8,
    /// Score assigned when a user's reference set is empty.
    pub empty_set_score: T,
}

impl<T: Scalar> Default for ScenarioConfig<T> {
    fn default() -> Self {
        Self {
            r_th: 3,
            empty_set_score: T::zero(),
        }
    }
}

impl<T: Scalar> ScenarioConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(1..5).contains(&self.r_th) {
            return Err(Error::validation(format!(
                "rating threshold {} must lie in 1..=4",
                self.r_th
            )));
        }
        Ok(())
    }
}

fn ratio<T: Scalar>(numer: usize, denom: usize, empty: T) -> T {
    if denom == 0 {
        empty
    } else {
        T::from_usize(numer).unwrap() / T::from_usize(denom).unwrap()
    }
}

/// Items rated by `user` whose mean is low, and the subset the user rated
/// high anyway.
fn rating_optimism_sets(
    table: &RatingsTable,
    r_th: u8,
    user: usize,
) -> (Vec<usize>, Vec<usize>) {
    let threshold = f64::from(r_th);
    let mut low_mean = Vec::new();
    let mut rated_high = Vec::new();
    for &(item, rating) in table.ratings_of(user) {
        let mean = table.item_mean(item).expect("rated item has a mean");
        if mean <= threshold {
            low_mean.push(item);
            if rating > r_th {
                rated_high.push(item);
            }
        }
    }
    (low_mean, rated_high)
}

/// Items rated by `user` whose mean is high, and the subset the user rated
/// low anyway.
fn rating_pessimism_sets(
    table: &RatingsTable,
    r_th: u8,
    user: usize,
) -> (Vec<usize>, Vec<usize>) {
    let threshold = f64::from(r_th);
    let mut high_mean = Vec::new();
    let mut rated_low = Vec::new();
    for &(item, rating) in table.ratings_of(user) {
        let mean = table.item_mean(item).expect("rated item has a mean");
        if mean > threshold {
            high_mean.push(item);
            if rating <= r_th {
                rated_low.push(item);
            }
        }
    }
    (high_mean, rated_low)
}

/// Per-user optimism from ratings: the fraction of low-mean items the user
/// rated above the threshold.
pub fn optimism_from_ratings<T: Scalar>(
    table: &RatingsTable,
    cfg: &ScenarioConfig<T>,
) -> Result<Vec<T>> {
    cfg.validate()?;
    Ok((0..table.n_users())
        .map(|user| {
            let (low, high) = rating_optimism_sets(table, cfg.r_th, user);
            ratio(high.len(), low.len(), cfg.empty_set_score)
        })
        .collect())
}

/// Per-user pessimism from ratings: the fraction of high-mean items the user
/// rated at or below the threshold.
pub fn pessimism_from_ratings<T: Scalar>(
    table: &RatingsTable,
    cfg: &ScenarioConfig<T>,
) -> Result<Vec<T>> {
    cfg.validate()?;
    Ok((0..table.n_users())
        .map(|user| {
            let (high, low) = rating_pessimism_sets(table, cfg.r_th, user);
            ratio(low.len(), high.len(), cfg.empty_set_score)
        })
        .collect())
}

/// Network-wide and per-user received averages of one opinion matrix.
struct OpinionAverages {
    /// Average over all `n(n-1)` ordered pairs.
    network: f64,
    /// Average received by each user over the `n-1` potential senders.
    received: Vec<f64>,
}

fn averages(n: usize, entries: impl Iterator<Item = (usize, usize, u64)>) -> OpinionAverages {
    let mut received_sum = vec![0u64; n];
    let mut total = 0u64;
    for (_, dst, count) in entries {
        received_sum[dst] += count;
        total += count;
    }
    let pairs = (n * (n - 1)) as f64;
    let senders = (n - 1) as f64;
    OpinionAverages {
        network: total as f64 / pairs,
        received: received_sum.iter().map(|&s| s as f64 / senders).collect(),
    }
}

fn rows(n: usize, entries: impl Iterator<Item = (usize, usize, u64)>) -> Vec<Vec<(usize, u64)>> {
    let mut by_src = vec![Vec::new(); n];
    for (src, dst, count) in entries {
        by_src[src].push((dst, count));
    }
    by_src
}

fn check_min_users(op: &OpinionCounts) -> Result<()> {
    if op.n() < 2 {
        return Err(Error::validation(
            "opinion scoring needs at least 2 users".to_string(),
        ));
    }
    Ok(())
}

/// Targets of `user`'s positive opinions who receive above-average negative
/// opinions, and the subset to whom `user` is more positive than their
/// received average.
fn opinion_optimism_sets(
    pos_row: &[(usize, u64)],
    neg_avg: &OpinionAverages,
    pos_avg: &OpinionAverages,
) -> (Vec<usize>, Vec<usize>) {
    let mut disliked = Vec::new();
    let mut favored = Vec::new();
    for &(target, count) in pos_row {
        if neg_avg.received[target] > neg_avg.network {
            disliked.push(target);
            if count as f64 > pos_avg.received[target] {
                favored.push(target);
            }
        }
    }
    (disliked, favored)
}

/// Targets of `user`'s negative opinions who receive above-average positive
/// opinions, and the subset to whom `user` is more negative than their
/// received average.
fn opinion_pessimism_sets(
    neg_row: &[(usize, u64)],
    pos_avg: &OpinionAverages,
    neg_avg: &OpinionAverages,
) -> (Vec<usize>, Vec<usize>) {
    let mut liked = Vec::new();
    let mut snubbed = Vec::new();
    for &(target, count) in neg_row {
        if pos_avg.received[target] > pos_avg.network {
            liked.push(target);
            if count as f64 > neg_avg.received[target] {
                snubbed.push(target);
            }
        }
    }
    (liked, snubbed)
}

/// Per-user optimism from opinion counts.
pub fn optimism_from_opinions<T: Scalar>(op: &OpinionCounts) -> Result<Vec<T>> {
    check_min_users(op)?;
    let n = op.n();
    let neg_avg = averages(n, op.negative_entries());
    let pos_avg = averages(n, op.positive_entries());
    let pos_rows = rows(n, op.positive_entries());
    Ok((0..n)
        .map(|user| {
            let (disliked, favored) = opinion_optimism_sets(&pos_rows[user], &neg_avg, &pos_avg);
            ratio(favored.len(), disliked.len(), T::zero())
        })
        .collect())
}

/// Per-user pessimism from opinion counts.
pub fn pessimism_from_opinions<T: Scalar>(op: &OpinionCounts) -> Result<Vec<T>> {
    check_min_users(op)?;
    let n = op.n();
    let neg_avg = averages(n, op.negative_entries());
    let pos_avg = averages(n, op.positive_entries());
    let neg_rows = rows(n, op.negative_entries());
    Ok((0..n)
        .map(|user| {
            let (liked, snubbed) = opinion_pessimism_sets(&neg_rows[user], &pos_avg, &neg_avg);
            ratio(snubbed.len(), liked.len(), T::zero())
        })
        .collect())
}

/// Both score vectors from a ratings table.
pub fn scores_from_ratings<T: Scalar>(
    table: &RatingsTable,
    cfg: &ScenarioConfig<T>,
) -> Result<PersonalityScores<T>> {
    PersonalityScores::new(
        optimism_from_ratings(table, cfg)?,
        pessimism_from_ratings(table, cfg)?,
    )
}

/// Both score vectors from opinion counts.
pub fn scores_from_opinions<T: Scalar>(op: &OpinionCounts) -> Result<PersonalityScores<T>> {
    PersonalityScores::new(optimism_from_opinions(op)?, pessimism_from_opinions(op)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Four items with means [2.0, 2.5, 4.0, 4.5]; user 0 rates them
    /// 4, 2, 2, 5. Helper users pin the means.
    fn worked_ratings() -> RatingsTable {
        RatingsTable::from_ratings([
            (0, 0, 4),
            (0, 1, 2),
            (0, 2, 2),
            (0, 3, 5),
            // item 0: (4 + 1 + 1) / 3 = 2.0
            (1, 0, 1),
            (2, 0, 1),
            // item 1: (2 + 3) / 2 = 2.5
            (1, 1, 3),
            // item 2: (2 + 5 + 5) / 3 = 4.0
            (1, 2, 5),
            (2, 2, 5),
            // item 3: (5 + 4) / 2 = 4.5
            (1, 3, 4),
        ])
        .unwrap()
    }

    #[test]
    fn ratings_optimism_worked_example() {
        let table = worked_ratings();
        assert_eq!(table.item_mean(0), Some(2.0));
        assert_eq!(table.item_mean(1), Some(2.5));
        assert_eq!(table.item_mean(2), Some(4.0));
        assert_eq!(table.item_mean(3), Some(4.5));
        let (low, high) = rating_optimism_sets(&table, 3, 0);
        assert_eq!(low, vec![0, 1]);
        assert_eq!(high, vec![0]);
        let o: Vec<f64> = optimism_from_ratings(&table, &ScenarioConfig::default()).unwrap();
        assert_eq!(o[0], 0.5);
    }

    #[test]
    fn ratings_pessimism_worked_example() {
        let table = worked_ratings();
        let (high, low) = rating_pessimism_sets(&table, 3, 0);
        assert_eq!(high, vec![2, 3]);
        assert_eq!(low, vec![2]);
        let p: Vec<f64> = pessimism_from_ratings(&table, &ScenarioConfig::default()).unwrap();
        assert_eq!(p[0], 0.5);
    }

    #[test]
    fn user_without_ratings_scores_zero() {
        let table = RatingsTable::from_ratings([(1, 0, 2)]).unwrap();
        let cfg = ScenarioConfig::default();
        let o: Vec<f64> = optimism_from_ratings(&table, &cfg).unwrap();
        let p: Vec<f64> = pessimism_from_ratings(&table, &cfg).unwrap();
        assert_eq!(o[0], 0.0);
        assert_eq!(p[0], 0.0);
    }

    #[test]
    fn empty_reference_sets_score_zero() {
        // Item 0 has mean 4.5 > 3, so user 0's low-mean set is empty and
        // optimism falls back to the empty-set score. She rates the
        // high-mean item above threshold, so pessimism is 0/1.
        let table = RatingsTable::from_ratings([(0, 0, 4), (1, 0, 5)]).unwrap();
        let cfg = ScenarioConfig::default();
        let o: Vec<f64> = optimism_from_ratings(&table, &cfg).unwrap();
        let p: Vec<f64> = pessimism_from_ratings(&table, &cfg).unwrap();
        assert_eq!(o[0], 0.0);
        assert_eq!(p[0], 0.0);
    }

    /// The three-user opinion instance used across the scenario-2 tests:
    /// P = {(1,0): 5, (2,0): 1, (2,1): 2}, N = {(0,1): 3, (2,0): 4}.
    fn worked_opinions() -> OpinionCounts {
        OpinionCounts::from_counts(
            3,
            [(1, 0, 5), (2, 0, 1), (2, 1, 2)],
            [(0, 1, 3), (2, 0, 4)],
        )
        .unwrap()
    }

    #[test]
    fn opinion_optimism_worked_example() {
        let op = worked_opinions();
        // Received negative averages: user 0 -> 2, user 1 -> 1.5, vs the
        // network average 7/6. User 2 praises both, but only beats user 1's
        // received positive average (2 > 1; 1 <= 3 for user 0).
        let o: Vec<f64> = optimism_from_opinions(&op).unwrap();
        assert_eq!(o[2], 0.5);
        // User 0 expresses no positive opinions at all.
        assert_eq!(o[0], 0.0);
        // User 1 praises only user 0, who is both disliked above average and
        // praised by user 1 beyond user 0's received average (5 > 3).
        assert_eq!(o[1], 1.0);
    }

    #[test]
    fn opinion_pessimism_worked_example() {
        let op = worked_opinions();
        let p: Vec<f64> = pessimism_from_opinions(&op).unwrap();
        // User 2 criticizes user 0, who is liked above average (3 > 8/6),
        // harder than user 0's received negative average (4 > 2).
        assert_eq!(p[2], 1.0);
        // User 0 criticizes user 1, but user 1 is not liked above average
        // (1 <= 8/6), so the reference set is empty.
        assert_eq!(p[0], 0.0);
        assert_eq!(p[1], 0.0);
    }

    #[test]
    fn no_positive_opinions_means_zero_optimism() {
        let op = OpinionCounts::from_counts(3, [], [(0, 1, 3), (2, 0, 4)]).unwrap();
        let o: Vec<f64> = optimism_from_opinions(&op).unwrap();
        assert_eq!(o, vec![0.0; 3]);
    }

    #[test]
    fn all_zero_negatives_mean_zero_optimism() {
        // With no negative opinions anywhere, no user exceeds the network
        // negative average (strict inequality), so every score is 0.
        let op = OpinionCounts::from_counts(3, [(0, 1, 5), (1, 2, 2)], []).unwrap();
        let o: Vec<f64> = optimism_from_opinions(&op).unwrap();
        assert_eq!(o, vec![0.0; 3]);
    }

    #[test]
    fn single_user_rejected() {
        let op = OpinionCounts::from_counts(1, [], []).unwrap();
        assert!(optimism_from_opinions::<f64>(&op).is_err());
        assert!(pessimism_from_opinions::<f64>(&op).is_err());
    }

    fn arb_ratings() -> impl Strategy<Value = Vec<(usize, usize, u8)>> {
        proptest::collection::vec(((0usize..8), (0usize..10), (1u8..=5)), 0..60)
    }

    fn arb_opinions() -> impl Strategy<Value = (Vec<(usize, usize, u64)>, Vec<(usize, usize, u64)>)>
    {
        let pair = (0usize..6, 0usize..6).prop_filter("no self-pairs", |(a, b)| a != b);
        (
            proptest::collection::vec((pair.clone(), 0u64..9), 0..30),
            proptest::collection::vec((pair, 0u64..9), 0..30),
        )
            .prop_map(|(p, n)| {
                (
                    p.into_iter().map(|((a, b), c)| (a, b, c)).collect(),
                    n.into_iter().map(|((a, b), c)| (a, b, c)).collect(),
                )
            })
    }

    proptest! {
        #[test]
        fn rating_scores_stay_in_unit_range(rows in arb_ratings()) {
            let table = RatingsTable::from_ratings(rows).unwrap();
            let cfg = ScenarioConfig::default();
            for &s in optimism_from_ratings::<f64>(&table, &cfg).unwrap().iter() {
                prop_assert!((0.0..=1.0).contains(&s));
            }
            for &s in pessimism_from_ratings::<f64>(&table, &cfg).unwrap().iter() {
                prop_assert!((0.0..=1.0).contains(&s));
            }
        }

        #[test]
        fn rating_subsets_are_contained(rows in arb_ratings()) {
            let table = RatingsTable::from_ratings(rows).unwrap();
            for user in 0..table.n_users() {
                let (low, high) = rating_optimism_sets(&table, 3, user);
                prop_assert!(high.iter().all(|k| low.contains(k)));
                let (hi, lo) = rating_pessimism_sets(&table, 3, user);
                prop_assert!(lo.iter().all(|k| hi.contains(k)));
            }
        }

        #[test]
        fn rating_scores_ignore_item_relabeling(rows in arb_ratings()) {
            let table = RatingsTable::from_ratings(rows.clone()).unwrap();
            // Reverse item indices within a fixed universe of 10 items.
            let relabeled: Vec<_> = rows.iter().map(|&(u, i, r)| (u, 9 - i, r)).collect();
            let table2 = RatingsTable::from_ratings(relabeled).unwrap();
            let cfg = ScenarioConfig::default();
            prop_assert_eq!(
                optimism_from_ratings::<f64>(&table, &cfg).unwrap(),
                optimism_from_ratings::<f64>(&table2, &cfg).unwrap()
            );
            prop_assert_eq!(
                pessimism_from_ratings::<f64>(&table, &cfg).unwrap(),
                pessimism_from_ratings::<f64>(&table2, &cfg).unwrap()
            );
        }

        #[test]
        fn opinion_scores_stay_in_unit_range((pos, neg) in arb_opinions()) {
            let op = OpinionCounts::from_counts(6, pos, neg).unwrap();
            for &s in optimism_from_opinions::<f64>(&op).unwrap().iter() {
                prop_assert!((0.0..=1.0).contains(&s));
            }
            for &s in pessimism_from_opinions::<f64>(&op).unwrap().iter() {
                prop_assert!((0.0..=1.0).contains(&s));
            }
        }

        #[test]
        fn opinion_scores_scale_invariant((pos, neg) in arb_opinions(), c in 2u64..5) {
            let op = OpinionCounts::from_counts(6, pos.clone(), neg.clone()).unwrap();
            let scaled = OpinionCounts::from_counts(
                6,
                pos.into_iter().map(|(a, b, v)| (a, b, v * c)),
                neg.into_iter().map(|(a, b, v)| (a, b, v * c)),
            )
            .unwrap();
            prop_assert_eq!(
                optimism_from_opinions::<f64>(&op).unwrap(),
                optimism_from_opinions::<f64>(&scaled).unwrap()
            );
            prop_assert_eq!(
                pessimism_from_opinions::<f64>(&op).unwrap(),
                pessimism_from_opinions::<f64>(&scaled).unwrap()
            );
        }

        #[test]
        fn opinion_scores_permute_with_users((pos, neg) in arb_opinions()) {
            let op = OpinionCounts::from_counts(6, pos.clone(), neg.clone()).unwrap();
            let perm = [3usize, 0, 5, 1, 4, 2];
            let mapped = OpinionCounts::from_counts(
                6,
                pos.into_iter().map(|(a, b, v)| (perm[a], perm[b], v)),
                neg.into_iter().map(|(a, b, v)| (perm[a], perm[b], v)),
            )
            .unwrap();
            let o = optimism_from_opinions::<f64>(&op).unwrap();
            let o_mapped = optimism_from_opinions::<f64>(&mapped).unwrap();
            let p = pessimism_from_opinions::<f64>(&op).unwrap();
            let p_mapped = pessimism_from_opinions::<f64>(&mapped).unwrap();
            for user in 0..6 {
                prop_assert_eq!(o[user], o_mapped[perm[user]]);
                prop_assert_eq!(p[user], p_mapped[perm[user]]);
            }
        }
    }
}
