//! Random Chemistry sampling of minimal blackout-causing outage sets.
//!
//! A trial draws a random large outage set that causes a blackout, shrinks it
//! through a decreasing size schedule while keeping the blackout, and then
//! searches the final small set bottom-up for its smallest blackout subset.
//! Independent trials are pooled into a [`CampaignLedger`].

mod brute;
mod campaign;
mod ledger;
mod scheme;
mod trial;

pub use brute::{
    brute_force_k1, brute_force_k2, brute_force_k3, brute_force_k3_containing_pair,
    verify_minimal,
};
pub use campaign::{run_campaign, trial_rng, CampaignConfig};
pub use ledger::{
    meta_path as ledger_meta_path, AccumulationPoint, CampaignLedger, Discovery, LedgerMeta,
    UniqueEntry,
};
pub use scheme::{RcScheme, DEFAULT_FINAL_SIZE, DEFAULT_MAX_SUBSAMPLES};
pub use trial::{rc_trial, TrialOutcome, TrialReport};

use serde::{Deserialize, Serialize};

use crate::grid::BranchId;

/// A minimal blackout-causing outage set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Malignancy {
    /// Sorted branch ids.
    pub branches: Vec<BranchId>,
    pub blackout_size_mw: f64,
}

impl Malignancy {
    pub fn new(mut branches: Vec<BranchId>, blackout_size_mw: f64) -> Self {
        branches.sort_unstable();
        Malignancy {
            branches,
            blackout_size_mw,
        }
    }

    pub fn order(&self) -> usize {
        self.branches.len()
    }
}

/// Lexicographic k-combinations of `0..n`.
pub(crate) struct Combinations {
    n: usize,
    idx: Vec<usize>,
    done: bool,
}

impl Combinations {
    pub(crate) fn new(n: usize, k: usize) -> Self {
        Combinations {
            n,
            idx: (0..k).collect(),
            done: k > n,
        }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.idx.clone();
        let k = self.idx.len();
        let mut i = k;
        loop {
            if i == 0 {
                self.done = true;
                break;
            }
            i -= 1;
            if self.idx[i] < self.n - k + i {
                self.idx[i] += 1;
                for j in i + 1..k {
                    self.idx[j] = self.idx[j - 1] + 1;
                }
                break;
            }
        }
        Some(out)
    }
}
