use std::collections::HashSet;

use rayon::prelude::*;

use super::{Combinations, Malignancy};
use crate::cascade::{simulate_indices, SimConfig};
use crate::error::{Error, Result};
use crate::grid::{BranchId, GridCase};

const PAIR_WARN_LIMIT: usize = 1_000_000;

/// Branches whose single outage is a blackout.
pub fn brute_force_k1(case: &GridCase, sim: &SimConfig) -> Result<Vec<BranchId>> {
    let hits = (0..case.n_branches())
        .into_par_iter()
        .map(|i| simulate_indices(case, &[i], sim).map(|o| o.is_blackout))
        .collect::<Result<Vec<bool>>>()?;
    Ok(case
        .branches()
        .iter()
        .zip(hits)
        .filter(|(_, hit)| *hit)
        .map(|(b, _)| b.id)
        .collect())
}

/// Every minimal blackout pair.
pub fn brute_force_k2(case: &GridCase, sim: &SimConfig) -> Result<Vec<Malignancy>> {
    let n = case.n_branches();
    if n * n.saturating_sub(1) / 2 > PAIR_WARN_LIMIT {
        log::warn!("brute-force pair scan over {n} branches is large");
    }
    let singles = single_mask(case, sim)?;
    let pairs: Vec<Vec<usize>> = Combinations::new(n, 2)
        .filter(|c| !c.iter().any(|&i| singles[i]))
        .collect();
    scan(case, sim, pairs)
}

/// Every minimal blackout triple, given the minimal pairs `omega2`.
pub fn brute_force_k3(
    case: &GridCase,
    sim: &SimConfig,
    omega2: &[Malignancy],
) -> Result<Vec<Malignancy>> {
    let singles = single_mask(case, sim)?;
    let bad_pairs: HashSet<(usize, usize)> = omega2
        .iter()
        .map(|m| {
            let idx = case.branch_indices(&m.branches)?;
            Ok((idx[0].min(idx[1]), idx[0].max(idx[1])))
        })
        .collect::<Result<_>>()?;
    let triples: Vec<Vec<usize>> = Combinations::new(case.n_branches(), 3)
        .filter(|c| {
            !c.iter().any(|&i| singles[i])
                && !bad_pairs.contains(&(c[0], c[1]))
                && !bad_pairs.contains(&(c[0], c[2]))
                && !bad_pairs.contains(&(c[1], c[2]))
        })
        .collect();
    scan(case, sim, triples)
}

/// Minimal blackout triples that contain `pair`; O(N) simulations.
pub fn brute_force_k3_containing_pair(
    case: &GridCase,
    pair: [BranchId; 2],
    sim: &SimConfig,
) -> Result<Vec<Malignancy>> {
    let idx = case.branch_indices(&pair)?;
    let (a, b) = (idx[0], idx[1]);
    if simulate_indices(case, &[a, b], sim)?.is_blackout {
        return Err(Error::NotMinimalizable(pair[0], pair[1]));
    }
    let found = (0..case.n_branches())
        .into_par_iter()
        .filter(|&c| c != a && c != b)
        .map(|c| -> Result<Option<Malignancy>> {
            let out = simulate_indices(case, &[a, b, c], sim)?;
            if !out.is_blackout {
                return Ok(None);
            }
            for sub in [&[c][..], &[a, c], &[b, c]] {
                if simulate_indices(case, sub, sim)?.is_blackout {
                    return Ok(None);
                }
            }
            let ids = [a, b, c].iter().map(|&i| case.branches()[i].id).collect();
            Ok(Some(Malignancy::new(ids, out.load_shed_mw)))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out: Vec<Malignancy> = found.into_iter().flatten().collect();
    out.sort_by(|x, y| x.branches.cmp(&y.branches));
    Ok(out)
}

/// Whether `m` is a blackout set none of whose proper subsets is one.
pub fn verify_minimal(case: &GridCase, m: &Malignancy, sim: &SimConfig) -> Result<bool> {
    let idx = case.branch_indices(&m.branches)?;
    if !simulate_indices(case, &idx, sim)?.is_blackout {
        return Ok(false);
    }
    for k in 1..idx.len() {
        for combo in Combinations::new(idx.len(), k) {
            let sub: Vec<usize> = combo.iter().map(|&i| idx[i]).collect();
            if simulate_indices(case, &sub, sim)?.is_blackout {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

fn single_mask(case: &GridCase, sim: &SimConfig) -> Result<Vec<bool>> {
    let singles = brute_force_k1(case, sim)?;
    if !singles.is_empty() {
        log::warn!("case is not N-1 secure: {} single-branch blackouts", singles.len());
    }
    let mut mask = vec![false; case.n_branches()];
    for id in singles {
        mask[case.branch_index(id).expect("own branch")] = true;
    }
    Ok(mask)
}

fn scan(case: &GridCase, sim: &SimConfig, sets: Vec<Vec<usize>>) -> Result<Vec<Malignancy>> {
    let found = sets
        .into_par_iter()
        .map(|set| -> Result<Option<Malignancy>> {
            let out = simulate_indices(case, &set, sim)?;
            Ok(out.is_blackout.then(|| {
                let ids = set.iter().map(|&i| case.branches()[i].id).collect();
                Malignancy::new(ids, out.load_shed_mw)
            }))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out: Vec<Malignancy> = found.into_iter().flatten().collect();
    out.sort_by(|x, y| x.branches.cmp(&y.branches));
    Ok(out)
}
