//! Bounds on the number of order-k malignancies from campaign data.
//!
//! The Chao1 capture-recapture estimate gives a lower bound; the RCP estimate
//! scales the unique count by the fraction of triples found around the most
//! frequent branch pair, whose true count a brute-force scan supplies.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::cascade::SimConfig;
use crate::error::{Error, Result};
use crate::grid::{BranchId, GridCase};
use crate::rc::{brute_force_k3_containing_pair, CampaignLedger};

pub type BranchPair = (BranchId, BranchId);

/// Chao1 from the unique count and the singleton/doubleton counts. With no
/// doubletons the bias-corrected form n₁(n₁−1)/2 is used.
pub fn chao1(unique: u64, n1: u64, n2: u64) -> f64 {
    let (s, f1, f2) = (unique as f64, n1 as f64, n2 as f64);
    if n2 > 0 {
        s + f1 * f1 / (2.0 * f2)
    } else {
        s + f1 * (f1 - 1.0).max(0.0) / 2.0
    }
}

/// Chao1 estimate of the number of order-`k` malignancies.
pub fn chao_estimate(ledger: &CampaignLedger, k: usize) -> Result<f64> {
    let unique = ledger.unique_count(k) as u64;
    if unique == 0 {
        return Err(Error::InsufficientData(format!("no order-{k} discoveries in the ledger")));
    }
    let (n1, n2) = ledger.singletons_doubletons(k);
    Ok(chao1(unique, n1, n2))
}

/// Occurrences of each branch pair within the unique triples found.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PairFrequency {
    pub counts: BTreeMap<BranchPair, u64>,
}

impl PairFrequency {
    /// Pairs by descending count, ties by pair id.
    pub fn ranked(&self) -> Vec<(BranchPair, u64)> {
        let mut v: Vec<(BranchPair, u64)> = self.counts.iter().map(|(p, c)| (*p, *c)).collect();
        v.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        v
    }

    pub fn top(&self, m: usize) -> Vec<(BranchPair, u64)> {
        let mut v = self.ranked();
        v.truncate(m);
        v
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }
}

fn triple_pairs(t: &[BranchId]) -> [BranchPair; 3] {
    [(t[0], t[1]), (t[0], t[2]), (t[1], t[2])]
}

pub fn pair_frequencies(ledger: &CampaignLedger) -> Result<PairFrequency> {
    let mut freq = PairFrequency::default();
    for (t, _) in ledger.unique_of_order(3) {
        for p in triple_pairs(t) {
            *freq.counts.entry(p).or_insert(0) += 1;
        }
    }
    if freq.counts.is_empty() {
        return Err(Error::InsufficientData("no N-3 discoveries in the ledger".into()));
    }
    Ok(freq)
}

/// How long the most frequent pair must stay unchanged before RCP is
/// trusted: the trailing `max(fraction · trials, min_trials)` trials.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityWindow {
    pub fraction: f64,
    pub min_trials: u64,
}

impl Default for StabilityWindow {
    fn default() -> Self {
        StabilityWindow {
            fraction: 0.1,
            min_trials: 1000,
        }
    }
}

impl StabilityWindow {
    pub fn validate(&self) -> Result<()> {
        if !(self.fraction >= 0.0 && self.fraction <= 1.0) {
            return Err(Error::Validation(format!(
                "stability window fraction must lie in [0, 1], got {}",
                self.fraction
            )));
        }
        Ok(())
    }

    /// First trial of the window for a campaign of `trials` trials.
    pub fn start(&self, trials: u64) -> u64 {
        let len = ((self.fraction * trials as f64).ceil() as u64).max(self.min_trials);
        trials.saturating_sub(len)
    }
}

/// Most frequent pair among unique triples, and the trial at which it last
/// became the most frequent pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairMaxHistory {
    pub pair: BranchPair,
    pub count: u64,
    pub last_change: u64,
}

pub fn pair_max_history(ledger: &CampaignLedger) -> Result<PairMaxHistory> {
    let mut counts: BTreeMap<BranchPair, u64> = BTreeMap::new();
    let mut seen: HashSet<&[BranchId]> = HashSet::new();
    let mut best: Option<PairMaxHistory> = None;
    for d in ledger.discoveries().iter().filter(|d| d.branches.len() == 3) {
        if !seen.insert(&d.branches) {
            continue;
        }
        for p in triple_pairs(&d.branches) {
            let c = counts.entry(p).or_insert(0);
            *c += 1;
            // only p moved, so it either overtakes the leader or nothing changes
            best = match best {
                Some(b) if b.pair == p => Some(PairMaxHistory { count: *c, ..b }),
                Some(b) if *c < b.count || (*c == b.count && p > b.pair) => Some(b),
                _ => Some(PairMaxHistory {
                    pair: p,
                    count: *c,
                    last_change: d.trial,
                }),
            };
        }
    }
    best.ok_or_else(|| Error::InsufficientData("no N-3 discoveries in the ledger".into()))
}

/// Chao and RCP bounds on the number of N-3 malignancies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetSizeBounds {
    pub unique_found: u64,
    pub chao_lower: f64,
    pub rcp_upper: f64,
    pub n1: u64,
    pub n2: u64,
    pub pair_max: BranchPair,
    /// Unique triples found that contain `pair_max`.
    pub pair_max_found: u64,
    /// All minimal triples containing `pair_max`, by brute force.
    pub pair_max_total: u64,
    pub q_proportion: f64,
}

/// Chao lower and RCP upper bounds on |Ω₃|. Fails with `Unstable` when the
/// most frequent pair changed inside the stability window.
pub fn rcp_estimate(
    case: &GridCase,
    ledger: &CampaignLedger,
    sim: &SimConfig,
    window: &StabilityWindow,
) -> Result<SetSizeBounds> {
    window.validate()?;
    let history = pair_max_history(ledger)?;
    let window_start = window.start(ledger.trials_run());
    if history.last_change >= window_start {
        return Err(Error::Unstable {
            last_change: history.last_change,
            window_start,
        });
    }
    let (a, b) = history.pair;
    let truth = brute_force_k3_containing_pair(case, [a, b], sim)?;
    let truth: HashSet<&[BranchId]> = truth.iter().map(|m| m.branches.as_slice()).collect();
    let found = ledger
        .unique_of_order(3)
        .filter(|(t, _)| t.contains(&a) && t.contains(&b))
        .inspect(|(t, _)| {
            if !truth.contains(t.as_slice()) {
                log::warn!("ledger triple {t:?} is not a minimal blackout set on this case");
            }
        })
        .count() as u64;
    let total = truth.len() as u64;
    if total == 0 || found > total {
        return Err(Error::Validation(format!(
            "ledger has {found} triples on pair ({a}, {b}) but the case has {total}; wrong case?"
        )));
    }
    let unique = ledger.unique_count(3) as u64;
    let (n1, n2) = ledger.singletons_doubletons(3);
    Ok(SetSizeBounds {
        unique_found: unique,
        chao_lower: chao1(unique, n1, n2),
        // multiply first: exact whenever the campaign found everything
        rcp_upper: unique as f64 * total as f64 / found as f64,
        n1,
        n2,
        pair_max: history.pair,
        pair_max_found: found,
        pair_max_total: total,
        q_proportion: found as f64 / total as f64,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UndersamplingRow {
    pub rank: usize,
    pub branch_a: BranchId,
    pub branch_b: BranchId,
    /// Occurrences of the pair among unique triples found.
    pub frequency: u64,
    pub rc_found: u64,
    pub true_count: u64,
    pub proportion: f64,
}

/// Found versus true triple counts for the `top_m` most frequent pairs.
pub fn undersampling_report(
    case: &GridCase,
    ledger: &CampaignLedger,
    top_m: usize,
    sim: &SimConfig,
) -> Result<Vec<UndersamplingRow>> {
    let freq = pair_frequencies(ledger)?;
    freq.top(top_m)
        .into_iter()
        .enumerate()
        .map(|(i, ((a, b), count))| {
            let total = brute_force_k3_containing_pair(case, [a, b], sim)?.len() as u64;
            if total < count {
                return Err(Error::Validation(format!(
                    "ledger has {count} triples on pair ({a}, {b}) but the case has {total}"
                )));
            }
            Ok(UndersamplingRow {
                rank: i + 1,
                branch_a: a,
                branch_b: b,
                frequency: count,
                rc_found: count,
                true_count: total,
                proportion: count as f64 / total as f64,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rc::Malignancy;

    fn ledger(sets: &[&[BranchId]]) -> CampaignLedger {
        let mut l = CampaignLedger::new();
        for (t, s) in sets.iter().enumerate() {
            l.record(t as u64, Some(&Malignancy::new(s.to_vec(), 60.0)));
        }
        l
    }

    #[test]
    fn chao_arithmetic() {
        assert_eq!(chao1(100, 20, 10), 120.0);
        assert_eq!(chao1(40, 0, 3), 40.0);
        assert_eq!(chao1(10, 4, 0), 16.0);
        assert_eq!(chao1(10, 1, 0), 10.0);
    }

    #[test]
    fn chao_from_ledger_ignores_order() {
        let a = ledger(&[&[1, 2, 3], &[1, 2, 4], &[1, 2, 3], &[5, 6, 7], &[1, 2]]);
        let b = ledger(&[&[5, 6, 7], &[1, 2, 3], &[1, 2], &[1, 2, 4], &[1, 2, 3]]);
        // unique 3, n1 = 2, n2 = 1
        assert_eq!(chao_estimate(&a, 3).unwrap(), 5.0);
        assert_eq!(chao_estimate(&b, 3).unwrap(), 5.0);
        assert!(matches!(chao_estimate(&a, 4), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn pair_counts() {
        let f = pair_frequencies(&ledger(&[&[1, 2, 3]])).unwrap();
        assert_eq!(f.counts.len(), 3);
        assert!(f.counts.values().all(|&c| c == 1));
        let l = ledger(&[&[1, 2, 3], &[1, 2, 4], &[1, 2, 4]]);
        let f = pair_frequencies(&l).unwrap();
        assert_eq!(f.counts[&(1, 2)], 2);
        assert_eq!(f.total(), 3 * l.unique_count(3) as u64);
        assert_eq!(f.top(1), vec![((1, 2), 2)]);
    }

    #[test]
    fn pair_max_ties_go_to_smaller_pair() {
        let h = pair_max_history(&ledger(&[&[4, 5, 6], &[1, 2, 3]])).unwrap();
        assert_eq!(h.pair, (1, 2));
        assert_eq!(h.last_change, 1);
        let h = pair_max_history(&ledger(&[&[4, 5, 6], &[1, 5, 6], &[1, 2, 3]])).unwrap();
        assert_eq!(h.pair, (5, 6));
        assert_eq!(h.count, 2);
        assert_eq!(h.last_change, 1);
    }

    #[test]
    fn window_start() {
        let w = StabilityWindow::default();
        assert_eq!(w.start(20_000), 18_000);
        assert_eq!(w.start(5_000), 4_000);
        assert_eq!(w.start(500), 0);
    }
}
