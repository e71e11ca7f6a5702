//! System risk: R̂ = Σ_k (|Ω_k| / |Ω_k sampled|) Σ_ω p_ω s_ω.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::copula::{CorrelationModel, ProbabilityEngine};
use crate::error::{Error, Result};
use crate::grid::{BranchId, GridCase};
use crate::rc::{run_campaign, CampaignConfig, CampaignLedger, Malignancy};

/// Largest malignancy order included in the risk sum.
pub const K_MAX: usize = 3;

/// Default trailing share of trials that must add no new order-2 set before
/// the sampled pairs are taken as complete.
pub const DEFAULT_FLAT_WINDOW: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskTerm {
    pub branches: Vec<BranchId>,
    pub p_omega: f64,
    pub s_omega: f64,
    pub r_omega: f64,
    pub p_abs_error: f64,
}

/// Risk of one malignancy: joint outage probability times blackout size.
pub fn risk_for_set(
    engine: &ProbabilityEngine,
    omega: &Malignancy,
    model: &CorrelationModel,
) -> Result<RiskTerm> {
    let p = engine.probability(&omega.branches, model)?;
    let s = omega.blackout_size_mw.max(0.0);
    Ok(RiskTerm {
        branches: omega.branches.clone(),
        p_omega: p.value,
        s_omega: s,
        r_omega: p.value * s,
        p_abs_error: p.abs_error_estimate,
    })
}

/// How the total number of order-k malignancies is known.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SetSizePolicy {
    /// The unique sets found are all of them.
    Sampled,
    Exact(f64),
    Bounds { lower: f64, upper: f64 },
}

impl SetSizePolicy {
    fn sizes(&self, sampled: usize) -> Result<(f64, f64)> {
        let (lo, hi) = match *self {
            SetSizePolicy::Sampled => (sampled as f64, sampled as f64),
            SetSizePolicy::Exact(n) => (n, n),
            SetSizePolicy::Bounds { lower, upper } => (lower, upper),
        };
        if !(lo.is_finite() && hi.is_finite() && lo >= 0.0 && lo <= hi) {
            return Err(Error::Validation(format!("invalid set size range [{lo}, {hi}]")));
        }
        if sampled > 0 && lo < sampled as f64 {
            log::warn!("set size {lo} is below the {sampled} sets already found");
        }
        Ok((lo, hi))
    }
}

/// `Sampled` when no new order-`k` set appeared in the trailing `window`
/// share of trials, else `None`.
pub fn sampled_if_flat(ledger: &CampaignLedger, k: usize, window: f64) -> Option<SetSizePolicy> {
    let from = ((1.0 - window.clamp(0.0, 1.0)) * ledger.trials_run() as f64).floor() as u64;
    ledger.flat_since(k, from).then_some(SetSizePolicy::Sampled)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderRisk {
    pub sampled_count: usize,
    /// Σ R_ω over the sampled unique sets.
    pub sampled_risk: f64,
    pub set_size_low: f64,
    pub set_size_high: f64,
    pub r_hat_low: f64,
    pub r_hat_high: f64,
}

impl OrderRisk {
    pub fn scaling_low(&self) -> f64 {
        ratio(self.set_size_low, self.sampled_count)
    }

    pub fn scaling_high(&self) -> f64 {
        ratio(self.set_size_high, self.sampled_count)
    }
}

fn ratio(size: f64, sampled: usize) -> f64 {
    if sampled == 0 {
        0.0
    } else {
        size / sampled as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskEstimate {
    pub per_k: BTreeMap<usize, OrderRisk>,
    pub total_low: f64,
    pub total_high: f64,
}

impl RiskEstimate {
    /// (low, high) when some order carries a set-size range.
    pub fn bounds(&self) -> Option<(f64, f64)> {
        (self.total_low != self.total_high).then_some((self.total_low, self.total_high))
    }

    pub fn r_hat(&self, k: usize) -> (f64, f64) {
        self.per_k.get(&k).map_or((0.0, 0.0), |o| (o.r_hat_low, o.r_hat_high))
    }

    /// Share of total risk from order `k`, at the low and the high end.
    pub fn share(&self, k: usize) -> (f64, f64) {
        let (lo, hi) = self.r_hat(k);
        let div = |a: f64, b: f64| if b > 0.0 { a / b } else { 0.0 };
        (div(lo, self.total_low), div(hi, self.total_high))
    }
}

/// Risk terms of every unique set of order `k`, in ledger key order.
pub fn risk_terms(
    engine: &ProbabilityEngine,
    ledger: &CampaignLedger,
    k: usize,
    model: &CorrelationModel,
) -> Result<Vec<RiskTerm>> {
    let sets: Vec<Malignancy> = ledger
        .unique_of_order(k)
        .map(|(s, e)| Malignancy::new(s.clone(), e.shed_mw))
        .collect();
    sets.par_iter().map(|m| risk_for_set(engine, m, model)).collect()
}

/// Risk over the ledger's unique sets of orders 2..=K_MAX, each order scaled
/// to its set size. Every order present needs a policy.
pub fn estimate_risk(
    engine: &ProbabilityEngine,
    ledger: &CampaignLedger,
    model: &CorrelationModel,
    policies: &BTreeMap<usize, SetSizePolicy>,
) -> Result<RiskEstimate> {
    let mut per_k = BTreeMap::new();
    for k in ledger.orders().into_iter().filter(|&k| k > K_MAX) {
        log::info!("order-{k} sets are outside the risk sum (k_max = {K_MAX})");
    }
    for k in 2..=K_MAX {
        let sampled = ledger.unique_count(k);
        let policy = match policies.get(&k) {
            Some(p) => p,
            None if sampled == 0 => continue,
            None => return Err(Error::MissingSetSize(k)),
        };
        let (lo, hi) = policy.sizes(sampled)?;
        let terms = risk_terms(engine, ledger, k, model)?;
        let sum: f64 = terms.iter().map(|t| t.r_omega).sum();
        per_k.insert(
            k,
            OrderRisk {
                sampled_count: sampled,
                sampled_risk: sum,
                set_size_low: lo,
                set_size_high: hi,
                r_hat_low: ratio(lo, sampled) * sum,
                r_hat_high: ratio(hi, sampled) * sum,
            },
        );
    }
    let total_low = per_k.values().map(|o| o.r_hat_low).sum();
    let total_high = per_k.values().map(|o| o.r_hat_high).sum();
    Ok(RiskEstimate {
        per_k,
        total_low,
        total_high,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub rho0: f64,
    pub length_km: f64,
    pub estimate: RiskEstimate,
}

/// One estimate per (ρ₀, L) combination, ρ₀ outermost.
pub fn risk_grid(
    engine: &ProbabilityEngine,
    ledger: &CampaignLedger,
    rho0s: &[f64],
    lengths_km: &[f64],
    policies: &BTreeMap<usize, SetSizePolicy>,
) -> Result<Vec<GridRow>> {
    let mut rows = Vec::with_capacity(rho0s.len() * lengths_km.len());
    for &rho0 in rho0s {
        for &l in lengths_km {
            let model = CorrelationModel::new(rho0, l)?;
            rows.push(GridRow {
                rho0,
                length_km: l,
                estimate: estimate_risk(engine, ledger, &model, policies)?,
            });
        }
    }
    Ok(rows)
}

pub fn write_grid_csv(rows: &[GridRow], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "rho0", "L", "r2", "r3_low", "r3_high", "total_low", "total_high", "share3_low",
        "share3_high",
    ])?;
    for row in rows {
        let e = &row.estimate;
        let (r2, _) = e.r_hat(2);
        let (r3_low, r3_high) = e.r_hat(3);
        let (s_low, s_high) = e.share(3);
        w.serialize((
            row.rho0,
            row.length_km,
            r2,
            r3_low,
            r3_high,
            e.total_low,
            e.total_high,
            s_low,
            s_high,
        ))?;
    }
    w.flush().map_err(|e| Error::io(Path::new("<csv>"), e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadPoint {
    pub factor: f64,
    pub unique_k2: usize,
    pub unique_k3: usize,
    pub estimate: RiskEstimate,
}

/// Risk against load level. Each factor gets a fresh campaign on the scaled
/// case; `sizing` picks the set-size policies from that campaign. Output is
/// sorted by factor.
pub fn load_sweep<F>(
    case: &GridCase,
    factors: &[f64],
    model: &CorrelationModel,
    campaign: &CampaignConfig,
    sizing: F,
) -> Result<Vec<LoadPoint>>
where
    F: Fn(&GridCase, &CampaignLedger) -> Result<BTreeMap<usize, SetSizePolicy>>,
{
    let mut sorted = factors.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    sorted
        .into_iter()
        .map(|factor| {
            let scaled = case.scale_load(factor)?;
            let ledger = run_campaign(&scaled, campaign, None)?;
            let policies = sizing(&scaled, &ledger)?;
            let engine = ProbabilityEngine::new(&scaled);
            Ok(LoadPoint {
                factor,
                unique_k2: ledger.unique_count(2),
                unique_k3: ledger.unique_count(3),
                estimate: estimate_risk(&engine, &ledger, model, &policies)?,
            })
        })
        .collect()
}

pub fn write_sweep_csv(points: &[LoadPoint], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "factor", "unique_k2", "unique_k3", "r2", "r3_low", "r3_high", "total_low", "total_high",
    ])?;
    for p in points {
        let (r2, _) = p.estimate.r_hat(2);
        let (r3_low, r3_high) = p.estimate.r_hat(3);
        w.serialize((
            p.factor,
            p.unique_k2,
            p.unique_k3,
            r2,
            r3_low,
            r3_high,
            p.estimate.total_low,
            p.estimate.total_high,
        ))?;
    }
    w.flush().map_err(|e| Error::io(Path::new("<csv>"), e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cases::pair10;

    fn ledger_with(sets: &[(&[BranchId], f64)]) -> CampaignLedger {
        let mut l = CampaignLedger::new();
        for (t, (s, shed)) in sets.iter().enumerate() {
            l.record(t as u64, Some(&Malignancy::new(s.to_vec(), *shed)));
        }
        l
    }

    #[test]
    fn independent_term_is_product() {
        let case = pair10().unwrap();
        let p = case.outage_probabilities()[0];
        let engine = ProbabilityEngine::new(&case);
        let t = risk_for_set(
            &engine,
            &Malignancy::new(vec![3, 7], 5000.0),
            &CorrelationModel::uncorrelated(),
        )
        .unwrap();
        assert!((t.p_omega - p * p).abs() <= 1e-10 * p * p);
        assert!((t.r_omega - 5000.0 * p * p).abs() <= 1e-9 * t.r_omega);
        let corr = risk_for_set(
            &engine,
            &Malignancy::new(vec![3, 7], 5000.0),
            &CorrelationModel::new(0.15, 300.0).unwrap(),
        )
        .unwrap();
        assert!(corr.r_omega > t.r_omega);
    }

    #[test]
    fn scaling_and_missing_policy() {
        let case = pair10().unwrap();
        let engine = ProbabilityEngine::new(&case);
        let l = ledger_with(&[(&[3, 7], 60.0), (&[3, 7], 60.0), (&[1, 2, 4], 60.0)]);
        let model = CorrelationModel::uncorrelated();
        let mut pol = BTreeMap::new();
        pol.insert(2, SetSizePolicy::Sampled);
        assert!(matches!(
            estimate_risk(&engine, &l, &model, &pol),
            Err(Error::MissingSetSize(3))
        ));
        pol.insert(3, SetSizePolicy::Bounds { lower: 2.0, upper: 4.0 });
        let e = estimate_risk(&engine, &l, &model, &pol).unwrap();
        let k2 = &e.per_k[&2];
        assert_eq!(k2.sampled_count, 1);
        assert_eq!(k2.r_hat_low, k2.sampled_risk);
        let k3 = &e.per_k[&3];
        assert_eq!(k3.r_hat_high, 2.0 * k3.r_hat_low);
        assert_eq!(e.total_low, k2.r_hat_low + k3.r_hat_low);
        assert!(e.bounds().is_some());
        pol.insert(3, SetSizePolicy::Exact(2.0));
        let doubled = estimate_risk(&engine, &l, &model, &pol).unwrap();
        assert_eq!(doubled.per_k[&3].r_hat_low, 2.0 * k3.sampled_risk);
    }

    #[test]
    fn flatness_policy() {
        let l = ledger_with(&[(&[1, 2], 1.0), (&[3, 4], 1.0), (&[1, 2], 1.0), (&[1, 2], 1.0), (&[1, 2], 1.0)]);
        assert_eq!(sampled_if_flat(&l, 2, 0.2), Some(SetSizePolicy::Sampled));
        assert_eq!(sampled_if_flat(&l, 2, 0.9), None);
    }

    #[test]
    fn grid_csv_columns() {
        let case = pair10().unwrap();
        let engine = ProbabilityEngine::new(&case);
        let l = ledger_with(&[(&[3, 7], 60.0)]);
        let pol = BTreeMap::from([(2, SetSizePolicy::Sampled)]);
        let rows = risk_grid(&engine, &l, &[0.0, 0.15], &[0.0, 300.0], &pol).unwrap();
        assert_eq!(rows.len(), 4);
        let mut buf = Vec::new();
        write_grid_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            "rho0,L,r2,r3_low,r3_high,total_low,total_high,share3_low,share3_high"
        );
        assert_eq!(text.lines().count(), 5);
    }
}
