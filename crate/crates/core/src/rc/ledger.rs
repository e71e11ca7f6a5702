use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::Malignancy;
use crate::error::{Error, Result};
use crate::grid::BranchId;

/// One ledger line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Discovery {
    pub trial: u64,
    pub branches: Vec<BranchId>,
    pub shed_mw: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniqueEntry {
    pub count: u64,
    pub shed_mw: f64,
    pub first_trial: u64,
}

/// Campaign bookkeeping stored next to the JSON-lines ledger.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LedgerMeta {
    pub trials_run: u64,
    pub trials_aborted: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scheme: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_subsamples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blackout_threshold: Option<f64>,
    /// SHA-256 of the case the campaign ran on.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub case_sha256: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct AccumulationPoint {
    pub discoveries: u64,
    pub unique: u64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CampaignLedger {
    discoveries: Vec<Discovery>,
    unique: BTreeMap<Vec<BranchId>, UniqueEntry>,
    meta: LedgerMeta,
}

impl CampaignLedger {
    pub fn new() -> Self {
        Self::default()
    }

    /// Record one trial; `None` means it aborted.
    pub fn record(&mut self, trial: u64, found: Option<&Malignancy>) {
        self.meta.trials_run += 1;
        match found {
            Some(m) => self.push(Discovery {
                trial,
                branches: m.branches.clone(),
                shed_mw: m.blackout_size_mw,
            }),
            None => self.meta.trials_aborted += 1,
        }
    }

    fn push(&mut self, mut d: Discovery) {
        d.branches.sort_unstable();
        self.unique
            .entry(d.branches.clone())
            .and_modify(|e| {
                e.count += 1;
                if d.trial < e.first_trial {
                    e.first_trial = d.trial;
                    e.shed_mw = d.shed_mw;
                }
            })
            .or_insert(UniqueEntry {
                count: 1,
                shed_mw: d.shed_mw,
                first_trial: d.trial,
            });
        self.discoveries.push(d);
    }

    /// Combine two ledgers over disjoint trials. The result does not depend
    /// on argument order.
    pub fn merge(&mut self, other: CampaignLedger) {
        self.meta.trials_run += other.meta.trials_run;
        self.meta.trials_aborted += other.meta.trials_aborted;
        for d in other.discoveries {
            self.push(d);
        }
        self.discoveries.sort_by_key(|d| d.trial);
    }

    pub fn discoveries(&self) -> &[Discovery] {
        &self.discoveries
    }

    pub fn unique_sets(&self) -> &BTreeMap<Vec<BranchId>, UniqueEntry> {
        &self.unique
    }

    /// Unique sets of order `k` with their entries.
    pub fn unique_of_order(&self, k: usize) -> impl Iterator<Item = (&Vec<BranchId>, &UniqueEntry)> {
        self.unique.iter().filter(move |(s, _)| s.len() == k)
    }

    pub fn unique_count(&self, k: usize) -> usize {
        self.unique_of_order(k).count()
    }

    /// Orders present in the ledger, ascending.
    pub fn orders(&self) -> Vec<usize> {
        let mut ks: Vec<usize> = self.unique.keys().map(|s| s.len()).collect();
        ks.sort_unstable();
        ks.dedup();
        ks
    }

    /// Number of order-`k` unique sets seen exactly once and exactly twice.
    pub fn singletons_doubletons(&self, k: usize) -> (u64, u64) {
        self.unique_of_order(k).fold((0, 0), |(n1, n2), (_, e)| match e.count {
            1 => (n1 + 1, n2),
            2 => (n1, n2 + 1),
            _ => (n1, n2),
        })
    }

    pub fn trials_run(&self) -> u64 {
        self.meta.trials_run
    }

    pub fn trials_aborted(&self) -> u64 {
        self.meta.trials_aborted
    }

    pub fn meta(&self) -> &LedgerMeta {
        &self.meta
    }

    pub fn meta_mut(&mut self) -> &mut LedgerMeta {
        &mut self.meta
    }

    pub fn is_empty(&self) -> bool {
        self.discoveries.is_empty()
    }

    /// Keep only discoveries from trials below `n_trials`.
    pub fn truncated(&self, n_trials: u64) -> CampaignLedger {
        let mut out = CampaignLedger::new();
        for d in self.discoveries.iter().filter(|d| d.trial < n_trials) {
            out.push(d.clone());
        }
        out.meta = self.meta.clone();
        out.meta.trials_run = n_trials.min(self.meta.trials_run);
        out.meta.trials_aborted = out.meta.trials_run - out.discoveries.len() as u64;
        out
    }

    /// (cumulative discoveries, cumulative unique) in trial order.
    pub fn accumulation_curve(&self) -> Result<Vec<AccumulationPoint>> {
        self.accumulation(None)
    }

    /// Accumulation restricted to discoveries of order `k`.
    pub fn accumulation_curve_of_order(&self, k: usize) -> Result<Vec<AccumulationPoint>> {
        self.accumulation(Some(k))
    }

    fn accumulation(&self, k: Option<usize>) -> Result<Vec<AccumulationPoint>> {
        if self.is_empty() {
            return Err(Error::EmptyLedger);
        }
        let mut seen: HashSet<&[BranchId]> = HashSet::new();
        let mut out = Vec::new();
        for d in self
            .discoveries
            .iter()
            .filter(|d| k.is_none_or(|k| d.branches.len() == k))
        {
            seen.insert(&d.branches);
            out.push(AccumulationPoint {
                discoveries: out.len() as u64 + 1,
                unique: seen.len() as u64,
            });
        }
        Ok(out)
    }

    /// Whether no new order-`k` set appeared in trials at or after
    /// `from_trial`.
    pub fn flat_since(&self, k: usize, from_trial: u64) -> bool {
        self.unique_of_order(k).all(|(_, e)| e.first_trial < from_trial)
    }

    pub fn write_jsonl(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        for d in &self.discoveries {
            serde_json::to_writer(&mut w, d)?;
            w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// Write the ledger and its `.meta.json` sidecar.
    pub fn save(&self, path: &Path) -> Result<()> {
        self.write_jsonl(path)?;
        let meta = meta_path(path);
        std::fs::write(&meta, serde_json::to_string_pretty(&self.meta)?)
            .map_err(|e| Error::io(meta, e))
    }

    /// Read a JSON-lines ledger. Trial counts come from the sidecar when it
    /// exists, else from the largest trial index.
    pub fn load(path: &Path) -> Result<CampaignLedger> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut ledger = CampaignLedger::new();
        for (n, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let d: Discovery = serde_json::from_str(&line).map_err(|e| {
                Error::Parse(format!("{}:{}: {e}", path.display(), n + 1))
            })?;
            if d.branches.len() < 2 {
                return Err(Error::Parse(format!(
                    "{}:{}: a malignancy needs at least two branches",
                    path.display(),
                    n + 1
                )));
            }
            ledger.push(d);
        }
        ledger.discoveries.sort_by_key(|d| d.trial);
        let meta = meta_path(path);
        if meta.exists() {
            let text = std::fs::read_to_string(&meta).map_err(|e| Error::io(&meta, e))?;
            ledger.meta = serde_json::from_str(&text)?;
        } else {
            let run = ledger.discoveries.last().map_or(0, |d| d.trial + 1);
            ledger.meta.trials_run = run;
            ledger.meta.trials_aborted = run - ledger.discoveries.len() as u64;
        }
        Ok(ledger)
    }
}

/// Sidecar path holding the ledger's trial counts and campaign settings.
pub fn meta_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(ids: &[BranchId]) -> Malignancy {
        Malignancy::new(ids.to_vec(), 10.0)
    }

    #[test]
    fn accumulation_example() {
        let mut l = CampaignLedger::new();
        l.record(0, Some(&m(&[1, 2])));
        l.record(1, Some(&m(&[3, 4])));
        l.record(2, None);
        l.record(3, Some(&m(&[2, 1])));
        let curve = l.accumulation_curve().unwrap();
        let pairs: Vec<_> = curve.iter().map(|p| (p.discoveries, p.unique)).collect();
        assert_eq!(pairs, vec![(1, 1), (2, 2), (3, 2)]);
        assert_eq!(l.trials_run(), 4);
        assert_eq!(l.trials_aborted(), 1);
        assert_eq!(l.unique_sets()[&vec![1, 2]].count, 2);
        assert_eq!(l.singletons_doubletons(2), (1, 1));
    }

    #[test]
    fn empty_curve_is_error() {
        assert!(matches!(CampaignLedger::new().accumulation_curve(), Err(Error::EmptyLedger)));
    }

    #[test]
    fn merge_is_order_insensitive() {
        let mut a = CampaignLedger::new();
        a.record(0, Some(&m(&[1, 2])));
        a.record(2, Some(&m(&[1, 2, 3])));
        let mut b = CampaignLedger::new();
        b.record(1, Some(&m(&[1, 2])));
        b.record(3, None);
        let mut ab = a.clone();
        ab.merge(b.clone());
        let mut ba = b;
        ba.merge(a);
        assert_eq!(ab, ba);
        assert_eq!(ab.unique_count(2), 1);
        assert_eq!(ab.unique_count(3), 1);
        assert_eq!(ab.trials_run(), 4);
    }

    #[test]
    fn jsonl_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ledger.jsonl");
        let mut l = CampaignLedger::new();
        l.record(0, Some(&m(&[5, 9])));
        l.record(1, None);
        l.record(2, Some(&m(&[9, 5])));
        l.save(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().next().unwrap(), r#"{"trial":0,"branches":[5,9],"shed_mw":10.0}"#);
        assert_eq!(CampaignLedger::load(&path).unwrap(), l);
        std::fs::remove_file(meta_path(&path)).unwrap();
        let bare = CampaignLedger::load(&path).unwrap();
        assert_eq!(bare.trials_run(), 3);
        assert_eq!(bare.trials_aborted(), 1);
    }

    #[test]
    fn truncation_and_flatness() {
        let mut l = CampaignLedger::new();
        l.record(0, Some(&m(&[1, 2])));
        l.record(1, Some(&m(&[3, 4])));
        l.record(2, Some(&m(&[1, 2])));
        assert!(l.flat_since(2, 2));
        assert!(!l.flat_since(2, 1));
        let t = l.truncated(1);
        assert_eq!(t.unique_count(2), 1);
        assert_eq!(t.trials_run(), 1);
    }
}
