//! Per-user optimism/pessimism score vectors and their text format.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Per-user optimism and pessimism strengths, each in `[0, 1]`.
///
/// The two vectors are independent dimensions; no constraint links them.
#[derive(Debug, Clone, PartialEq)]
pub struct PersonalityScores<T> {
    o: Vec<T>,
    p: Vec<T>,
}

impl<T: Scalar> PersonalityScores<T> {
    pub fn new(o: Vec<T>, p: Vec<T>) -> Result<Self> {
        if o.len() != p.len() {
            return Err(Error::validation(format!(
                "optimism has {} entries, pessimism has {}",
                o.len(),
                p.len()
            )));
        }
        for (user, &score) in o.iter().enumerate() {
            check_unit_range(score, "optimism", user)?;
        }
        for (user, &score) in p.iter().enumerate() {
            check_unit_range(score, "pessimism", user)?;
        }
        Ok(Self { o, p })
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            o: vec![T::zero(); n],
            p: vec![T::zero(); n],
        }
    }

    pub fn n(&self) -> usize {
        self.o.len()
    }

    pub fn optimism(&self) -> &[T] {
        &self.o
    }

    pub fn pessimism(&self) -> &[T] {
        &self.p
    }

    /// Copy with both scores zeroed for every user where `keep` is false.
    pub fn retained(&self, keep: &[bool]) -> Self {
        let zero_out = |v: &[T]| {
            v.iter()
                .zip(keep)
                .map(|(&x, &k)| if k { x } else { T::zero() })
                .collect()
        };
        Self {
            o: zero_out(&self.o),
            p: zero_out(&self.p),
        }
    }
}

fn check_unit_range<T: Scalar>(score: T, what: &str, user: usize) -> Result<()> {
    if !(score >= T::zero() && score <= T::one()) {
        return Err(Error::validation(format!(
            "{what} score {score} for user {user} is outside [0, 1]"
        )));
    }
    Ok(())
}

/// Write scores as `user<TAB>o<TAB>p` with shortest round-trip decimals.
pub fn save_scores<T: Scalar>(scores: &PersonalityScores<T>, path: &Path) -> Result<()> {
    let mut out = String::new();
    for user in 0..scores.n() {
        out.push_str(&format!(
            "{user}\t{}\t{}\n",
            scores.optimism()[user],
            scores.pessimism()[user]
        ));
    }
    fs::write(path, out)?;
    Ok(())
}

/// Load scores written by [`save_scores`]. Users absent from the file get
/// zero scores; the user count is `1 + max index seen`.
pub fn load_scores<T: Scalar>(path: &Path) -> Result<PersonalityScores<T>> {
    let text = fs::read_to_string(path)?;
    let mut rows: Vec<(usize, T, T)> = Vec::new();
    let mut n = 0usize;
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
        let o = T::parse_text(fields[1])
            .ok_or_else(|| Error::parse(path, lineno, "optimism score is not a number"))?;
        let p = T::parse_text(fields[2])
            .ok_or_else(|| Error::parse(path, lineno, "pessimism score is not a number"))?;
        n = n.max(user + 1);
        rows.push((user, o, p));
    }
    let mut o = vec![T::zero(); n];
    let mut p = vec![T::zero(); n];
    for (user, ov, pv) in rows {
        o[user] = ov;
        p[user] = pv;
    }
    PersonalityScores::new(o, p)
}
