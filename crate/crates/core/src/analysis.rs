//! Figure datasets as plain CSV: accumulation curves, pair frequencies,
//! blackout-size and distance distributions.

use std::collections::HashSet;
use std::io::Write;
use std::path::Path;

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimate::pair_frequencies;
use crate::geometry::branch_distance;
use crate::grid::GridCase;
use crate::rc::{trial_rng, CampaignLedger};

/// Orders covered by the distribution datasets.
pub const DISTRIBUTION_ORDERS: [usize; 4] = [2, 3, 4, 5];

/// Default number of random benign pairs in the distance comparison.
pub const DEFAULT_BENIGN_PAIRS: usize = 1_000_000;

fn flush<W: Write>(mut w: csv::Writer<W>) -> Result<()> {
    w.flush().map_err(|e| Error::io(Path::new("<csv>"), e))
}

/// One row per discovery: cumulative totals overall and within its order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccumulationRow {
    pub trial: u64,
    pub k: usize,
    pub discoveries: u64,
    pub unique: u64,
    pub discoveries_k: u64,
    pub unique_k: u64,
}

pub fn accumulation_rows(ledger: &CampaignLedger) -> Result<Vec<AccumulationRow>> {
    let curve = ledger.accumulation_curve()?;
    let mut seen = HashSet::new();
    let mut per_k = [0u64; 64];
    let mut unique_k = [0u64; 64];
    Ok(ledger
        .discoveries()
        .iter()
        .zip(curve)
        .map(|(d, point)| {
            let k = d.branches.len().min(63);
            per_k[k] += 1;
            if seen.insert(d.branches.clone()) {
                unique_k[k] += 1;
            }
            AccumulationRow {
                trial: d.trial,
                k: d.branches.len(),
                discoveries: point.discoveries,
                unique: point.unique,
                discoveries_k: per_k[k],
                unique_k: unique_k[k],
            }
        })
        .collect())
}

pub fn write_accumulation(ledger: &CampaignLedger, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in accumulation_rows(ledger)? {
        w.serialize(row)?;
    }
    flush(w)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairFrequencyRow {
    pub rank: usize,
    pub branch_a: i64,
    pub branch_b: i64,
    pub count: u64,
}

pub fn write_pair_frequencies(ledger: &CampaignLedger, out: impl Write) -> Result<()> {
    if ledger.is_empty() {
        return Err(Error::EmptyLedger);
    }
    let freq = pair_frequencies(ledger)?;
    let mut w = csv::Writer::from_writer(out);
    for (i, ((a, b), count)) in freq.ranked().into_iter().enumerate() {
        w.serialize(PairFrequencyRow {
            rank: i + 1,
            branch_a: a,
            branch_b: b,
            count,
        })?;
    }
    flush(w)
}

fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    Some(if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    })
}

/// Blackout sizes and within-set pairwise distances of the unique sets,
/// per order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Distributions {
    /// (k, shed MW) per unique set.
    pub sizes: Vec<(usize, f64)>,
    /// (k, km) per branch pair inside each unique set.
    pub distances: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MedianRow {
    pub k: usize,
    pub sets: usize,
    pub median_shed_mw: Option<f64>,
    pub median_distance_km: Option<f64>,
}

pub fn distributions(case: &GridCase, ledger: &CampaignLedger) -> Result<Distributions> {
    if ledger.is_empty() {
        return Err(Error::EmptyLedger);
    }
    let mut out = Distributions::default();
    for k in DISTRIBUTION_ORDERS {
        if ledger.unique_count(k) == 0 {
            log::warn!("no order-{k} sets in the ledger");
            continue;
        }
        for (set, entry) in ledger.unique_of_order(k) {
            out.sizes.push((k, entry.shed_mw));
            let idx = case.branch_indices(set)?;
            for i in 0..idx.len() {
                for j in i + 1..idx.len() {
                    let d = branch_distance(&case.branch_segment(idx[i]), &case.branch_segment(idx[j]));
                    out.distances.push((k, d));
                }
            }
        }
    }
    Ok(out)
}

impl Distributions {
    pub fn medians(&self) -> Vec<MedianRow> {
        DISTRIBUTION_ORDERS
            .iter()
            .map(|&k| {
                let mut s: Vec<f64> = self.sizes.iter().filter(|r| r.0 == k).map(|r| r.1).collect();
                let mut d: Vec<f64> =
                    self.distances.iter().filter(|r| r.0 == k).map(|r| r.1).collect();
                MedianRow {
                    k,
                    sets: s.len(),
                    median_shed_mw: median(&mut s),
                    median_distance_km: median(&mut d),
                }
            })
            .collect()
    }

    pub fn write_sizes(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["k", "shed_mw"])?;
        for row in &self.sizes {
            w.serialize(row)?;
        }
        flush(w)
    }

    pub fn write_distances(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["k", "distance_km"])?;
        for row in &self.distances {
            w.serialize(row)?;
        }
        flush(w)
    }

    pub fn write_medians(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for row in self.medians() {
            w.serialize(row)?;
        }
        flush(w)
    }
}

/// Distances of the N-2 malignancies found, and of `n_benign` uniformly
/// drawn branch pairs (with replacement) that are not among them.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DistanceComparison {
    pub malignant: Vec<f64>,
    pub benign: Vec<f64>,
}

pub fn distance_comparison(
    case: &GridCase,
    ledger: &CampaignLedger,
    n_benign: usize,
    seed: u64,
) -> Result<DistanceComparison> {
    if ledger.is_empty() {
        return Err(Error::EmptyLedger);
    }
    let n = case.n_branches();
    let mut bad = HashSet::new();
    let mut malignant = Vec::new();
    for (set, _) in ledger.unique_of_order(2) {
        let idx = case.branch_indices(set)?;
        let (a, b) = (idx[0].min(idx[1]), idx[0].max(idx[1]));
        bad.insert((a, b));
        malignant.push(branch_distance(&case.branch_segment(a), &case.branch_segment(b)));
    }
    let pairs = n * n.saturating_sub(1) / 2;
    if n_benign > 0 && bad.len() >= pairs {
        return Err(Error::InsufficientData("every branch pair is malignant".into()));
    }
    let mut rng = trial_rng(seed, 0);
    let mut benign = Vec::with_capacity(n_benign);
    while benign.len() < n_benign {
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        let key = (a.min(b), a.max(b));
        if a == b || bad.contains(&key) {
            continue;
        }
        benign.push(branch_distance(&case.branch_segment(a), &case.branch_segment(b)));
    }
    Ok(DistanceComparison { malignant, benign })
}

impl DistanceComparison {
    pub fn write(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["kind", "distance_km"])?;
        for d in &self.malignant {
            w.serialize(("malignant", d))?;
        }
        for d in &self.benign {
            w.serialize(("benign", d))?;
        }
        flush(w)
    }

    pub fn medians(&self) -> (Option<f64>, Option<f64>) {
        (median(&mut self.malignant.clone()), median(&mut self.benign.clone()))
    }
}
