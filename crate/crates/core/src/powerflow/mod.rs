//! Lossless DC power flow, solved island by island.

mod sparse;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{BranchId, BusId, DisjointSet, GridCase};

pub use sparse::{reverse_cuthill_mckee, EnvelopeMatrix, LdlFactor};

/// Relative pivot tolerance below which a reduced susceptance matrix is
/// treated as singular.
const PIVOT_TOL: f64 = 1e-13;

/// Per-island balance required by [`solve_dc`], MW.
pub const BALANCE_TOL_MW: f64 = 1e-6;

/// One connected component of the in-service network (dense indices).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Island {
    pub buses: Vec<usize>,
    pub branches: Vec<usize>,
    pub slack: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IslandPartition {
    pub islands: Vec<Island>,
    /// Island index of every bus.
    pub bus_island: Vec<usize>,
}

impl IslandPartition {
    pub fn len(&self) -> usize {
        self.islands.len()
    }

    pub fn is_empty(&self) -> bool {
        self.islands.is_empty()
    }

    /// Bus ids of each island (sorted), for reporting.
    pub fn bus_ids(&self, case: &GridCase) -> Vec<Vec<BusId>> {
        self.islands
            .iter()
            .map(|isl| {
                let mut ids: Vec<_> = isl.buses.iter().map(|&b| case.buses()[b].id).collect();
                ids.sort_unstable();
                ids
            })
            .collect()
    }

    pub fn slack_ids(&self, case: &GridCase) -> Vec<BusId> {
        self.islands.iter().map(|i| case.buses()[i.slack].id).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowSolution {
    /// Bus voltage angle, radians, per bus in case order.
    pub theta: Vec<f64>,
    /// Real power flow from `from_bus` to `to_bus`, MW, per branch in case order.
    pub flow_mw: Vec<f64>,
    pub converged: bool,
}

/// Connected components after removing `out_branches`.
pub fn find_islands(case: &GridCase, out_branches: &[BranchId]) -> Result<IslandPartition> {
    let mut out = vec![false; case.n_branches()];
    for i in case.branch_indices(out_branches)? {
        out[i] = true;
    }
    Ok(find_islands_masked(case, &out))
}

/// Connected components of the network with branches flagged in `out`
/// removed (as are branches that are out of service in the case).
///
/// Islands are ordered by their lowest bus index. Each island's slack is the
/// generator bus with the largest single-unit `p_max` (lowest bus id on
/// ties); islands without generators fall back to the lowest-id slack
/// candidate and then the lowest bus id.
pub fn find_islands_masked(case: &GridCase, out: &[bool]) -> IslandPartition {
    let idx = case.index();
    let n = case.n_buses();
    let mut dsu = DisjointSet::new(n);
    for (i, br) in case.branches().iter().enumerate() {
        if br.in_service && !out[i] {
            let (f, t) = idx.ends[i];
            dsu.union(f, t);
        }
    }
    let mut root_island = vec![usize::MAX; n];
    let mut bus_island = vec![0; n];
    let mut islands: Vec<Island> = Vec::new();
    for b in 0..n {
        let r = dsu.find(b);
        if root_island[r] == usize::MAX {
            root_island[r] = islands.len();
            islands.push(Island {
                buses: Vec::new(),
                branches: Vec::new(),
                slack: b,
            });
        }
        let k = root_island[r];
        bus_island[b] = k;
        islands[k].buses.push(b);
    }
    for (i, br) in case.branches().iter().enumerate() {
        if br.in_service && !out[i] {
            islands[bus_island[idx.ends[i].0]].branches.push(i);
        }
    }
    let buses = case.buses();
    let gens = case.generators();
    for isl in &mut islands {
        let mut best: Option<(f64, BusId, usize)> = None;
        for &b in &isl.buses {
            for &g in &idx.gens_at_bus[b] {
                let cand = (gens[g].p_max_mw, buses[b].id, b);
                best = match best {
                    Some(cur) if cur.0 > cand.0 || (cur.0 == cand.0 && cur.1 <= cand.1) => Some(cur),
                    _ => Some(cand),
                };
            }
        }
        isl.slack = match best {
            Some((_, _, b)) => b,
            None => *isl
                .buses
                .iter()
                .min_by_key(|&&b| (!buses[b].is_slack_candidate, buses[b].id))
                .expect("island has a bus"),
        };
    }
    IslandPartition {
        islands,
        bus_island,
    }
}

/// Solve B·θ = P per island with the slack angle fixed at zero.
/// `injections_mw` is net injection per bus (generation minus load) and must
/// sum to zero within [`BALANCE_TOL_MW`] on every island.
pub fn solve_dc(
    case: &GridCase,
    partition: &IslandPartition,
    injections_mw: &[f64],
) -> Result<FlowSolution> {
    if injections_mw.len() != case.n_buses() {
        return Err(Error::Validation(format!(
            "{} injections for {} buses",
            injections_mw.len(),
            case.n_buses()
        )));
    }
    let mut theta = vec![0.0; case.n_buses()];
    let mut local = vec![usize::MAX; case.n_buses()];
    for isl in &partition.islands {
        let imbalance: f64 = isl.buses.iter().map(|&b| injections_mw[b]).sum();
        if imbalance.abs() > BALANCE_TOL_MW {
            return Err(Error::Validation(format!(
                "island with slack bus {} is unbalanced by {imbalance} MW",
                case.buses()[isl.slack].id
            )));
        }
        solve_island(case, isl, injections_mw, &mut theta, &mut local)?;
    }
    let base = case.base_mva();
    let idx = case.index();
    let mut out = vec![true; case.n_branches()];
    for isl in &partition.islands {
        for &br in &isl.branches {
            out[br] = false;
        }
    }
    let flow_mw = case
        .branches()
        .iter()
        .enumerate()
        .map(|(i, br)| {
            if out[i] {
                0.0
            } else {
                let (f, t) = idx.ends[i];
                (theta[f] - theta[t]) / br.reactance_pu * base
            }
        })
        .collect();
    Ok(FlowSolution {
        theta,
        flow_mw,
        converged: true,
    })
}

fn solve_island(
    case: &GridCase,
    isl: &Island,
    injections_mw: &[f64],
    theta: &mut [f64],
    local: &mut [usize],
) -> Result<()> {
    let m = isl.buses.len();
    if m <= 1 {
        if let Some(&b) = isl.buses.first() {
            theta[b] = 0.0;
        }
        return Ok(());
    }
    let idx = case.index();
    // Reduced numbering: every island bus except the slack.
    let mut n = 0;
    for &b in &isl.buses {
        if b == isl.slack {
            continue;
        }
        local[b] = n;
        n += 1;
    }
    let mut adjacency = vec![Vec::new(); n];
    for &br in &isl.branches {
        let (f, t) = idx.ends[br];
        if f != isl.slack && t != isl.slack {
            adjacency[local[f]].push(local[t]);
            adjacency[local[t]].push(local[f]);
        }
    }
    let order = reverse_cuthill_mckee(&adjacency);
    let mut position = vec![0; n];
    for (new, &old) in order.iter().enumerate() {
        position[old] = new;
    }
    let structure = isl.branches.iter().filter_map(|&br| {
        let (f, t) = idx.ends[br];
        if f == isl.slack || t == isl.slack {
            return None;
        }
        let (pf, pt) = (position[local[f]], position[local[t]]);
        Some((pf.max(pt), pf.min(pt)))
    });
    let mut mat = EnvelopeMatrix::with_structure(n, structure);
    for &br in &isl.branches {
        let (f, t) = idx.ends[br];
        let y = 1.0 / case.branches()[br].reactance_pu;
        let pf = (f != isl.slack).then(|| position[local[f]]);
        let pt = (t != isl.slack).then(|| position[local[t]]);
        if let Some(p) = pf {
            mat.add(p, p, y);
        }
        if let Some(p) = pt {
            mat.add(p, p, y);
        }
        if let (Some(a), Some(b)) = (pf, pt) {
            mat.add(a.max(b), a.min(b), -y);
        }
    }
    let factor = mat.factor(PIVOT_TOL).map_err(|_| Error::SingularSystem {
        slack_bus: case.buses()[isl.slack].id,
    })?;
    let base = case.base_mva();
    let mut rhs = vec![0.0; n];
    for &b in &isl.buses {
        if b != isl.slack {
            rhs[position[local[b]]] = injections_mw[b] / base;
        }
    }
    factor.solve_in_place(&mut rhs);
    theta[isl.slack] = 0.0;
    for &b in &isl.buses {
        if b != isl.slack {
            theta[b] = rhs[position[local[b]]];
        }
    }
    Ok(())
}

/// Net KCL mismatch per bus, in per-unit: injection minus the sum of flows
/// leaving the bus.
pub fn kcl_residuals_pu(case: &GridCase, solution: &FlowSolution, injections_mw: &[f64]) -> Vec<f64> {
    let base = case.base_mva();
    let mut residual: Vec<f64> = injections_mw.iter().map(|p| p / base).collect();
    for (i, &(f, t)) in case.index().ends.iter().enumerate() {
        let flow = solution.flow_mw[i] / base;
        residual[f] -= flow;
        residual[t] += flow;
    }
    residual
}

/// Flows of the intact case after balancing every island.
pub fn base_case_flows(case: &GridCase) -> Result<Vec<f64>> {
    let out = vec![false; case.n_branches()];
    let partition = find_islands_masked(case, &out);
    let balance = crate::cascade::balance_islands(case, &partition);
    Ok(solve_dc(case, &partition, &balance.injections_mw)?.flow_mw)
}
