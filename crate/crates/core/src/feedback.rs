//! User feedback data: item ratings and pairwise opinion counts.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Sparse user-item ratings on a 1..=5 scale, with per-item mean ratings.
///
/// A missing `(user, item)` pair means unrated. Duplicate pairs keep the last
/// rating seen, and item means are computed over the deduplicated table (the
/// rater's own rating included).
#[derive(Debug, Clone, PartialEq)]
pub struct RatingsTable {
    n_users: usize,
    n_items: usize,
    /// Per user, `(item, rating)` sorted by item.
    by_user: Vec<Vec<(usize, u8)>>,
    /// Mean of all stored ratings per item; `None` for unrated items.
    item_means: Vec<Option<f64>>,
}

impl RatingsTable {
    pub fn from_ratings<I>(ratings: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, u8)>,
    {
        let mut map: BTreeMap<(usize, usize), u8> = BTreeMap::new();
        let mut n_users = 0usize;
        let mut n_items = 0usize;
        for (user, item, rating) in ratings {
            if !(1..=5).contains(&rating) {
                return Err(Error::validation(format!(
                    "rating {rating} for user {user}, item {item} is outside 1..=5"
                )));
            }
            n_users = n_users.max(user + 1);
            n_items = n_items.max(item + 1);
            map.insert((user, item), rating);
        }

        let mut by_user = vec![Vec::new(); n_users];
        let mut sums = vec![0u64; n_items];
        let mut counts = vec![0u64; n_items];
        for (&(user, item), &rating) in &map {
            by_user[user].push((item, rating));
            sums[item] += u64::from(rating);
            counts[item] += 1;
        }
        let item_means = sums
            .iter()
            .zip(&counts)
            .map(|(&s, &c)| (c > 0).then(|| s as f64 / c as f64))
            .collect();

        Ok(Self {
            n_users,
            n_items,
            by_user,
            item_means,
        })
    }

    pub fn n_users(&self) -> usize {
        self.n_users
    }

    pub fn n_items(&self) -> usize {
        self.n_items
    }

    pub fn rating_count(&self) -> usize {
        self.by_user.iter().map(Vec::len).sum()
    }

    /// Ratings of one user as `(item, rating)`, sorted by item.
    pub fn ratings_of(&self, user: usize) -> &[(usize, u8)] {
        &self.by_user[user]
    }

    pub fn item_mean(&self, item: usize) -> Option<f64> {
        self.item_means.get(item).copied().flatten()
    }
}

/// Load ratings from lines of `user<TAB>item<TAB>rating`.
pub fn load_ratings(path: &Path) -> Result<RatingsTable> {
    let text = fs::read_to_string(path)?;
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let lineno = lineno + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(Error::parse(
                path,
                lineno,
                format!("expected 3 fields, found {}", fields.len()),
            ));
        }
        let user: usize = fields[0]
            .parse()
            .map_err(|_| Error::parse(path, lineno, "user index is not an integer"))?;
        let item: usize = fields[1]
            .parse()
            .map_err(|_| Error::parse(path, lineno, "item index is not an integer"))?;
        let rating: i64 = fields[2]
            .parse()
            .map_err(|_| Error::parse(path, lineno, "rating is not an integer"))?;
        if !(1..=5).contains(&rating) {
            return Err(Error::validation(format!(
                "{}:{lineno}: rating {rating} is outside 1..=5",
                path.display()
            )));
        }
        rows.push((user, item, rating as u8));
    }
    RatingsTable::from_ratings(rows)
}

/// Write ratings in the `load_ratings` format.
pub fn save_ratings(table: &RatingsTable, path: &Path) -> Result<()> {
    let mut out = String::new();
    for user in 0..table.n_users() {
        for &(item, rating) in table.ratings_of(user) {
            out.push_str(&format!("{user}\t{item}\t{rating}\n"));
        }
    }
    fs::write(path, out)?;
    Ok(())
}

/// Counts of positive and negative opinions expressed between user pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OpinionCounts {
    n: usize,
    pos: BTreeMap<(usize, usize), u64>,
    neg: BTreeMap<(usize, usize), u64>,
}

impl OpinionCounts {
    /// Accumulate counts; duplicate pairs add up. Self-pairs are rejected.
    pub fn from_counts<P, N>(n: usize, pos: P, neg: N) -> Result<Self>
    where
        P: IntoIterator<Item = (usize, usize, u64)>,
        N: IntoIterator<Item = (usize, usize, u64)>,
    {
        let mut table = Self {
            n,
            pos: BTreeMap::new(),
            neg: BTreeMap::new(),
        };
        for (src, dst, count) in pos {
            Self::check_pair(n, src, dst)?;
            *table.pos.entry((src, dst)).or_insert(0) += count;
        }
        for (src, dst, count) in neg {
            Self::check_pair(n, src, dst)?;
            *table.neg.entry((src, dst)).or_insert(0) += count;
        }
        table.pos.retain(|_, c| *c > 0);
        table.neg.retain(|_, c| *c > 0);
        Ok(table)
    }

    fn check_pair(n: usize, src: usize, dst: usize) -> Result<()> {
        if src == dst {
            return Err(Error::validation(format!("self-pair at node {src}")));
        }
        if src >= n || dst >= n {
            return Err(Error::validation(format!(
                "pair ({src}, {dst}) out of range for n = {n}"
            )));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn positive(&self, src: usize, dst: usize) -> u64 {
        self.pos.get(&(src, dst)).copied().unwrap_or(0)
    }

    pub fn negative(&self, src: usize, dst: usize) -> u64 {
        self.neg.get(&(src, dst)).copied().unwrap_or(0)
    }

    /// Nonzero positive counts, sorted by `(src, dst)`.
    pub fn positive_entries(&self) -> impl Iterator<Item = (usize, usize, u64)> + '_ {
        self.pos.iter().map(|(&(s, d), &c)| (s, d, c))
    }

    /// Nonzero negative counts, sorted by `(src, dst)`.
    pub fn negative_entries(&self) -> impl Iterator<Item = (usize, usize, u64)> + '_ {
        self.neg.iter().map(|(&(s, d), &c)| (s, d, c))
    }
}

/// A loaded opinion table together with ingestion warnings.
#[derive(Debug)]
pub struct OpinionLoad {
    pub opinions: OpinionCounts,
    pub self_pairs_dropped: usize,
}

/// Load opinion counts from lines of
/// `src<TAB>dst<TAB>pos_count<TAB>neg_count`. Counts on duplicate lines
/// accumulate; self-pairs are dropped and counted.
pub fn load_opinions(path: &Path) -> Result<OpinionLoad> {
    let text = fs::read_to_string(path)?;
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    let mut max_index = None::<usize>;
    let mut self_pairs_dropped = 0usize;

    for (lineno, line) in text.lines().enumerate() {
        let lineno = lineno + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(Error::parse(
                path,
                lineno,
                format!("expected 4 fields, found {}", fields.len()),
            ));
        }
        let src: usize = fields[0]
            .parse()
            .map_err(|_| Error::parse(path, lineno, "source index is not an integer"))?;
        let dst: usize = fields[1]
            .parse()
            .map_err(|_| Error::parse(path, lineno, "target index is not an integer"))?;
        let p: i64 = fields[2]
            .parse()
            .map_err(|_| Error::parse(path, lineno, "positive count is not an integer"))?;
        let q: i64 = fields[3]
            .parse()
            .map_err(|_| Error::parse(path, lineno, "negative count is not an integer"))?;
        if p < 0 || q < 0 {
            return Err(Error::validation(format!(
                "{}:{lineno}: opinion counts must be non-negative",
                path.display()
            )));
        }
        max_index = Some(max_index.map_or(src.max(dst), |m| m.max(src).max(dst)));
        if src == dst {
            self_pairs_dropped += 1;
            continue;
        }
        pos.push((src, dst, p as u64));
        neg.push((src, dst, q as u64));
    }

    let n = max_index.map_or(0, |m| m + 1);
    Ok(OpinionLoad {
        opinions: OpinionCounts::from_counts(n, pos, neg)?,
        self_pairs_dropped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;
    use tempfile::NamedTempFile;

    fn write_tmp(content: &str) -> NamedTempFile {
        let mut f = NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn item_means_are_arithmetic_means() {
        let f = write_tmp("0\t0\t4\n1\t0\t2\n");
        let table = load_ratings(f.path()).unwrap();
        assert_eq!(table.item_mean(0), Some(3.0));
    }

    #[test]
    fn empty_ratings_file() {
        let f = write_tmp("");
        let table = load_ratings(f.path()).unwrap();
        assert_eq!(table.rating_count(), 0);
        assert_eq!(table.n_items(), 0);
    }

    #[test]
    fn out_of_range_rating_rejected() {
        let f = write_tmp("0\t0\t6\n");
        assert!(matches!(
            load_ratings(f.path()),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn item_means_stay_in_rating_range() {
        let f = write_tmp("0\t0\t1\n1\t0\t5\n2\t1\t3\n");
        let table = load_ratings(f.path()).unwrap();
        for item in 0..table.n_items() {
            if let Some(mean) = table.item_mean(item) {
                assert!((1.0..=5.0).contains(&mean));
            }
        }
    }

    #[test]
    fn opinion_counts_accumulate() {
        let f = write_tmp("0\t1\t2\t0\n0\t1\t1\t3\n");
        let load = load_opinions(f.path()).unwrap();
        assert_eq!(load.opinions.positive(0, 1), 3);
        assert_eq!(load.opinions.negative(0, 1), 3);
    }

    #[test]
    fn opinion_self_pairs_dropped() {
        let f = write_tmp("2\t2\t1\t1\n0\t1\t1\t0\n");
        let load = load_opinions(f.path()).unwrap();
        assert_eq!(load.self_pairs_dropped, 1);
        assert_eq!(load.opinions.positive(2, 2), 0);
    }

    #[test]
    fn negative_opinion_count_rejected() {
        let f = write_tmp("0\t1\t-1\t0\n");
        assert!(matches!(
            load_opinions(f.path()),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn ratings_save_load_round_trip() {
        let table = RatingsTable::from_ratings([(0, 0, 4), (1, 0, 2), (1, 3, 5)]).unwrap();
        let f = NamedTempFile::new().unwrap();
        save_ratings(&table, f.path()).unwrap();
        assert_eq!(load_ratings(f.path()).unwrap(), table);
    }
}
