//! Synthetic signed networks with planted optimism/pessimism structure.
//!
//! The generator plants ground-truth personality per user, draws a low-rank
//! base sign structure, tilts link odds so that optimists attract and emit
//! more positive links and pessimists more negative ones, and emits a
//! ratings table whose behavioral scores recover the planted personalities.
//! Everything derives from one seeded generator in a fixed draw order, so a
//! fixed seed reproduces identical outputs.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::feedback::RatingsTable;
use crate::graph::SignedGraph;
use crate::scores::PersonalityScores;

/// Items live in two fixed banks: low-consensus items 0..20 and
/// high-consensus items 20..40.
const LOW_ITEMS: usize = 20;
const HIGH_ITEMS: usize = 20;
/// Ratings given per user on each bank.
const RATINGS_PER_BANK: usize = 10;

/// Temperature of the latent sign model; smaller values sharpen signs.
const SIGN_TEMPERATURE: f64 = 0.3;

#[derive(Debug, Clone, Copy)]
pub struct SynthConfig {
    pub n: usize,
    /// Fraction of users planted with strong personality, split evenly
    /// between strong optimists and strong pessimists; the rest are
    /// indifferent.
    pub frac_strong: f64,
    /// Expected fraction of ordered pairs that carry a link before boosts.
    pub edge_density: f64,
    /// Multiplier on positive-link odds when either endpoint is a strong
    /// optimist.
    pub pos_boost: f64,
    /// Multiplier on negative-link odds when either endpoint is a strong
    /// pessimist.
    pub neg_boost: f64,
    /// Rank of the planted latent sign structure.
    pub d_true: usize,
    /// Probability of flipping each realized sign.
    pub noise: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n: 300,
            frac_strong: 0.3,
            edge_density: 0.03,
            pos_boost: 3.0,
            neg_boost: 3.0,
            d_true: 4,
            noise: 0.05,
            seed: 1,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::validation("need at least 2 users"));
        }
        for (name, value) in [
            ("frac_strong", self.frac_strong),
            ("edge_density", self.edge_density),
            ("noise", self.noise),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::validation(format!(
                    "{name} = {value} must lie in [0, 1]"
                )));
            }
        }
        if self.pos_boost < 1.0 || self.neg_boost < 1.0 {
            return Err(Error::validation("boosts must be >= 1"));
        }
        if self.edge_density == 0.0 {
            return Err(Error::validation(
                "edge density 0 generates no links",
            ));
        }
        if self.edge_density * self.pos_boost.max(self.neg_boost) > 1.0 {
            return Err(Error::validation(
                "edge density times boost exceeds 1; link probabilities overflow",
            ));
        }
        if self.d_true < 1 {
            return Err(Error::validation("d_true must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SynthData {
    pub graph: SignedGraph,
    pub ratings: RatingsTable,
    /// Planted ground-truth personality.
    pub truth: PersonalityScores<f64>,
}

/// Generate a signed graph, a matching ratings table and the planted
/// personality scores.
pub fn generate(cfg: &SynthConfig) -> Result<SynthData> {
    cfg.validate()?;
    let n = cfg.n;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    // 1. Strong-user assignment. Strong users alternate between strong
    // optimists and strong pessimists; the dominant trait lands in
    // (0.7, 1.0) and the other in (0.3, 0.5), which keeps it below every
    // 0.5 threshold while still marking the user as non-indifferent, so
    // 2-means on (o, p) recovers {strong} vs {indifferent}.
    let strong_count = (cfg.frac_strong * n as f64).floor() as usize;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    #[derive(Clone, Copy, PartialEq)]
    enum Band {
        Indifferent,
        Optimist,
        Pessimist,
    }
    let mut band = vec![Band::Indifferent; n];
    for (pos, &user) in order.iter().take(strong_count).enumerate() {
        band[user] = if pos % 2 == 0 {
            Band::Optimist
        } else {
            Band::Pessimist
        };
    }
    let mut o_true = vec![0.0f64; n];
    let mut p_true = vec![0.0f64; n];
    for user in 0..n {
        let a = rng.random::<f64>();
        let b = rng.random::<f64>();
        let (o, p) = match band[user] {
            Band::Indifferent => (a * 0.2, b * 0.2),
            Band::Optimist => (0.7 + a * 0.3, 0.3 + b * 0.2),
            Band::Pessimist => (0.3 + a * 0.2, 0.7 + b * 0.3),
        };
        o_true[user] = o;
        p_true[user] = p;
    }

    // 2. Planted low-rank sign structure.
    let d = cfg.d_true;
    let z: Vec<f64> = (0..n * d).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
    let b: Vec<f64> = (0..d * d).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();

    // 3-4. Per ordered pair: positive/negative link probabilities with
    // personality boosts, then a noise flip. Exactly two draws per pair keep
    // streams aligned across boost settings.
    let mut edges = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let roll = rng.random::<f64>();
            let flip = rng.random::<f64>() < cfg.noise;

            let mut y = 0.0;
            for a in 0..d {
                let mut row = 0.0;
                for bb in 0..d {
                    row += b[a * d + bb] * z[j * d + bb];
                }
                y += z[i * d + a] * row;
            }
            let positive_share = 1.0 / (1.0 + (-y / SIGN_TEMPERATURE).exp());

            let optimist_endpoint = o_true[i] > 0.5 || o_true[j] > 0.5;
            let pessimist_endpoint = p_true[i] > 0.5 || p_true[j] > 0.5;
            let boost_pos = if optimist_endpoint { cfg.pos_boost } else { 1.0 };
            let boost_neg = if pessimist_endpoint { cfg.neg_boost } else { 1.0 };
            let p_pos = cfg.edge_density * positive_share * boost_pos;
            let p_neg = cfg.edge_density * (1.0 - positive_share) * boost_neg;

            let sign = if roll < p_pos {
                1
            } else if roll < p_pos + p_neg {
                -1
            } else {
                continue;
            };
            let sign = if flip { -sign } else { sign };
            edges.push((i, j, sign));
        }
    }
    let graph = SignedGraph::from_edges(n, edges)?;

    // 5. Ratings whose behavioral scores land within 0.05 of the planted
    // personality: each user rates 10 low-bank items, round(10 * o) of them
    // high, and 10 high-bank items, round(10 * p) of them low. Slot
    // rotation spreads the contrarian ratings evenly across items so the
    // bank consensus is preserved.
    let mut ratings = Vec::with_capacity(n * 2 * RATINGS_PER_BANK);
    for user in 0..n {
        let high_on_low = (o_true[user] * RATINGS_PER_BANK as f64).round() as usize;
        let low_on_high = (p_true[user] * RATINGS_PER_BANK as f64).round() as usize;
        for t in 0..RATINGS_PER_BANK {
            let low_item = (user * 7 + t) % LOW_ITEMS;
            let value = if (t + user) % RATINGS_PER_BANK < high_on_low {
                4
            } else {
                1
            };
            ratings.push((user, low_item, value));

            let high_item = LOW_ITEMS + (user * 7 + t) % HIGH_ITEMS;
            let value = if (t + user) % RATINGS_PER_BANK < low_on_high {
                2
            } else {
                5
            };
            ratings.push((user, high_item, value));
        }
    }
    let ratings = RatingsTable::from_ratings(ratings)?;

    // A bank whose consensus flipped sides would corrupt every score derived
    // from it; reject such configurations outright.
    for item in 0..LOW_ITEMS {
        if let Some(mean) = ratings.item_mean(item) {
            if mean > 3.0 {
                return Err(Error::validation(format!(
                    "infeasible config: low-bank item {item} has mean {mean:.2} > 3"
                )));
            }
        }
    }
    for item in LOW_ITEMS..LOW_ITEMS + HIGH_ITEMS {
        if let Some(mean) = ratings.item_mean(item) {
            if mean <= 3.0 {
                return Err(Error::validation(format!(
                    "infeasible config: high-bank item {item} has mean {mean:.2} <= 3"
                )));
            }
        }
    }

    Ok(SynthData {
        graph,
        ratings,
        truth: PersonalityScores::new(o_true, p_true)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::personality::{scores_from_ratings, ScenarioConfig};

    fn pearson(a: &[f64], b: &[f64]) -> f64 {
        let n = a.len() as f64;
        let ma = a.iter().sum::<f64>() / n;
        let mb = b.iter().sum::<f64>() / n;
        let cov: f64 = a.iter().zip(b).map(|(&x, &y)| (x - ma) * (y - mb)).sum();
        let va: f64 = a.iter().map(|&x| (x - ma) * (x - ma)).sum();
        let vb: f64 = b.iter().map(|&y| (y - mb) * (y - mb)).sum();
        cov / (va.sqrt() * vb.sqrt())
    }

    fn positive_in_degrees(graph: &SignedGraph) -> Vec<f64> {
        let mut deg = vec![0.0; graph.n()];
        for &(_, dst, sign) in graph.edges() {
            if sign > 0 {
                deg[dst] += 1.0;
            }
        }
        deg
    }

    #[test]
    fn fixed_seed_reproduces_outputs() {
        let cfg = SynthConfig::default();
        let a = generate(&cfg).unwrap();
        let b = generate(&cfg).unwrap();
        assert_eq!(a.graph, b.graph);
        assert_eq!(a.ratings, b.ratings);
        assert_eq!(a.truth, b.truth);
    }

    #[test]
    fn graph_respects_signed_invariants() {
        let data = generate(&SynthConfig::default()).unwrap();
        for &(i, j, sign) in data.graph.edges() {
            assert_ne!(i, j);
            assert!(sign == 1 || sign == -1);
            assert!(i < data.graph.n() && j < data.graph.n());
        }
        assert!(data.graph.edge_count() > 0);
    }

    #[test]
    fn null_config_decouples_personality_from_links() {
        let mut sum_corr = 0.0;
        for seed in 0..10 {
            let cfg = SynthConfig {
                pos_boost: 1.0,
                neg_boost: 1.0,
                noise: 0.0,
                seed,
                ..SynthConfig::default()
            };
            let data = generate(&cfg).unwrap();
            sum_corr += pearson(data.truth.optimism(), &positive_in_degrees(&data.graph));
        }
        assert!((sum_corr / 10.0).abs() <= 0.05);
    }

    #[test]
    fn optimists_attract_more_positive_links() {
        let mut strong_total = 0.0;
        let mut weak_total = 0.0;
        for seed in 0..10 {
            let cfg = SynthConfig {
                seed,
                ..SynthConfig::default()
            };
            let data = generate(&cfg).unwrap();
            let deg = positive_in_degrees(&data.graph);
            let o = data.truth.optimism();
            let strong: Vec<f64> = (0..cfg.n).filter(|&u| o[u] > 0.5).map(|u| deg[u]).collect();
            let weak: Vec<f64> = (0..cfg.n).filter(|&u| o[u] <= 0.5).map(|u| deg[u]).collect();
            strong_total += strong.iter().sum::<f64>() / strong.len() as f64;
            weak_total += weak.iter().sum::<f64>() / weak.len() as f64;
        }
        assert!(
            strong_total >= 1.5 * weak_total,
            "strong {strong_total}, weak {weak_total}"
        );
    }

    #[test]
    fn stronger_boost_never_hurts_optimist_degree() {
        let mean_optimist_degree = |boost: f64| {
            let mut total = 0.0;
            for seed in 0..10 {
                let cfg = SynthConfig {
                    pos_boost: boost,
                    seed,
                    ..SynthConfig::default()
                };
                let data = generate(&cfg).unwrap();
                let deg = positive_in_degrees(&data.graph);
                let o = data.truth.optimism();
                let strong: Vec<f64> =
                    (0..cfg.n).filter(|&u| o[u] > 0.5).map(|u| deg[u]).collect();
                total += strong.iter().sum::<f64>() / strong.len() as f64;
            }
            total / 10.0
        };
        let low = mean_optimist_degree(2.0);
        let high = mean_optimist_degree(3.0);
        assert!(high >= low, "boost 3 gave {high}, boost 2 gave {low}");
    }

    #[test]
    fn behavioral_scores_recover_planted_personality() {
        for seed in 0..10 {
            let cfg = SynthConfig {
                seed,
                ..SynthConfig::default()
            };
            let data = generate(&cfg).unwrap();
            let computed =
                scores_from_ratings::<f64>(&data.ratings, &ScenarioConfig::default()).unwrap();
            let r_o = pearson(computed.optimism(), data.truth.optimism());
            let r_p = pearson(computed.pessimism(), data.truth.pessimism());
            assert!(r_o >= 0.8, "seed {seed}: optimism correlation {r_o}");
            assert!(r_p >= 0.8, "seed {seed}: pessimism correlation {r_p}");
        }
    }

    #[test]
    fn invalid_configs_rejected() {
        let zero_density = SynthConfig {
            edge_density: 0.0,
            ..SynthConfig::default()
        };
        assert!(generate(&zero_density).is_err());
        let overflow = SynthConfig {
            edge_density: 0.5,
            pos_boost: 3.0,
            ..SynthConfig::default()
        };
        assert!(generate(&overflow).is_err());
        let small = SynthConfig {
            n: 1,
            ..SynthConfig::default()
        };
        assert!(generate(&small).is_err());
    }
}
