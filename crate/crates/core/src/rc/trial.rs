use rand::seq::{index, SliceRandom};
use rand::Rng;

use super::{Combinations, Malignancy, RcScheme};
use crate::cascade::{simulate_indices, SimConfig};
use crate::error::{Error, Result};
use crate::grid::GridCase;

#[derive(Debug, Clone, PartialEq)]
pub enum TrialOutcome {
    Found(Malignancy),
    /// No blackout subset within `max_subsamples` draws at `stage`
    /// (0 = the initial draw from all branches).
    Aborted { stage: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialReport {
    pub outcome: TrialOutcome,
    /// Cascade simulations run by the trial.
    pub simulations: usize,
}

/// One Random Chemistry trial.
pub fn rc_trial<R: Rng + ?Sized>(
    case: &GridCase,
    scheme: &RcScheme,
    sim: &SimConfig,
    rng: &mut R,
) -> Result<TrialReport> {
    let n = case.n_branches();
    if scheme.first_size() > n {
        return Err(Error::Validation(format!(
            "scheme starts at {} branches but the case has {n}",
            scheme.first_size()
        )));
    }
    let mut simulations = 0;
    let mut current: Vec<usize> = (0..n).collect();
    let mut current_shed = 0.0;
    for (stage, &size) in scheme.sizes().iter().enumerate() {
        let mut found = None;
        for _ in 0..scheme.max_subsamples() {
            let mut subset: Vec<usize> = index::sample(rng, current.len(), size)
                .into_iter()
                .map(|i| current[i])
                .collect();
            subset.sort_unstable();
            let out = simulate_indices(case, &subset, sim)?;
            simulations += 1;
            if out.is_blackout {
                found = Some((subset, out.load_shed_mw));
                break;
            }
        }
        match found {
            Some((subset, shed)) => {
                current = subset;
                current_shed = shed;
            }
            None => {
                return Ok(TrialReport {
                    outcome: TrialOutcome::Aborted { stage },
                    simulations,
                })
            }
        }
    }

    // bottom-up search of the final set: every subset of size k in random
    // order before any subset of size k + 1
    let f = current.len();
    for k in 2..f {
        let mut combos: Vec<Vec<usize>> = Combinations::new(f, k).collect();
        combos.shuffle(rng);
        for combo in combos {
            let subset: Vec<usize> = combo.iter().map(|&i| current[i]).collect();
            let out = simulate_indices(case, &subset, sim)?;
            simulations += 1;
            if out.is_blackout {
                return Ok(TrialReport {
                    outcome: TrialOutcome::Found(to_malignancy(case, &subset, out.load_shed_mw)),
                    simulations,
                });
            }
        }
    }
    // no smaller subset blacks out: the final set itself is minimal
    // (single branches are assumed secure)
    Ok(TrialReport {
        outcome: TrialOutcome::Found(to_malignancy(case, &current, current_shed)),
        simulations,
    })
}

fn to_malignancy(case: &GridCase, indices: &[usize], shed: f64) -> Malignancy {
    let ids = indices.iter().map(|&i| case.branches()[i].id).collect();
    Malignancy::new(ids, shed)
}
