use crate::algorithms::Algorithm;
use crate::error::{Error, Result};

use super::TrialRecord;

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub algo: Algorithm,
    pub horizon: usize,
    pub episodes: usize,
    pub sigma: f64,
    pub count: usize,
    pub median_error: f64,
    pub q1_error: f64,
    pub q3_error: f64,
    pub stabilized_pct: f64,
}

impl SummaryRow {
    pub fn iqr_error(&self) -> f64 {
        if self.q1_error == self.q3_error {
            0.0
        } else {
            self.q3_error - self.q1_error
        }
    }
}

/// Linear-interpolation quantile of sorted data (Hyndman–Fan type 7).
/// Infinite values sort last and propagate.
pub fn quantile(sorted: &[f64], prob: f64) -> f64 {
    assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * prob;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    let (a, b) = (sorted[lo], sorted[hi]);
    if lo == hi || a == b {
        a
    } else {
        a + (h - lo as f64) * (b - a)
    }
}

/// Groups by `(algo, T, k, σ)` in order of first appearance. Error
/// quantiles include trials whose error is `+∞`.
pub fn summarize(records: &[TrialRecord]) -> Result<Vec<SummaryRow>> {
    if records.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut groups: Vec<(GroupKey, Vec<&TrialRecord>)> = Vec::new();
    for rec in records {
        let key = GroupKey::of(rec);
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, members)) => members.push(rec),
            None => groups.push((key, vec![rec])),
        }
    }
    Ok(groups
        .into_iter()
        .map(|(key, members)| {
            let mut errors: Vec<f64> = members.iter().map(|r| r.error_norm).collect();
            errors.sort_by(f64::total_cmp);
            let stabilized = members.iter().filter(|r| r.stabilized).count();
            SummaryRow {
                algo: key.algo,
                horizon: key.horizon,
                episodes: key.episodes,
                sigma: f64::from_bits(key.sigma_bits),
                count: members.len(),
                median_error: quantile(&errors, 0.5),
                q1_error: quantile(&errors, 0.25),
                q3_error: quantile(&errors, 0.75),
                stabilized_pct: 100.0 * stabilized as f64 / members.len() as f64,
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct GroupKey {
    algo: Algorithm,
    horizon: usize,
    episodes: usize,
    sigma_bits: u64,
}

impl GroupKey {
    fn of(r: &TrialRecord) -> Self {
        Self {
            algo: r.algo,
            horizon: r.horizon,
            episodes: r.episodes,
            sigma_bits: r.sigma.to_bits(),
        }
    }
}
