use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::ledger::CampaignLedger;
use super::{rc_trial, RcScheme, TrialOutcome};
use crate::cascade::SimConfig;
use crate::error::{Error, Result};
use crate::grid::GridCase;
use crate::manifest::case_fingerprint;

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignConfig {
    pub scheme: RcScheme,
    pub n_trials: u64,
    pub seed: u64,
    pub sim: SimConfig,
    /// Trials between checkpoints; `None` writes only at the end.
    pub checkpoint_every: Option<u64>,
    /// Worker threads; `None` uses the rayon default.
    pub workers: Option<usize>,
}

impl CampaignConfig {
    pub fn new(scheme: RcScheme, n_trials: u64, seed: u64) -> Self {
        CampaignConfig {
            scheme,
            n_trials,
            seed,
            sim: SimConfig::default(),
            checkpoint_every: None,
            workers: None,
        }
    }
}

/// RNG of trial `index`: ChaCha8 keyed by the campaign seed, one stream per
/// trial.
pub fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Run `n_trials` independent trials. With a checkpoint path the ledger is
/// written every `checkpoint_every` trials, and an existing ledger from the
/// same case, seed and scheme is resumed.
pub fn run_campaign(
    case: &GridCase,
    config: &CampaignConfig,
    checkpoint: Option<&Path>,
) -> Result<CampaignLedger> {
    if config.n_trials == 0 {
        return Err(Error::Validation("a campaign needs at least one trial".into()));
    }
    config.sim.validate()?;
    if config.scheme.first_size() > case.n_branches() {
        return Err(Error::Validation(format!(
            "scheme starts at {} branches but the case has {}",
            config.scheme.first_size(),
            case.n_branches()
        )));
    }
    let fingerprint = case_fingerprint(case)?;
    let mut ledger = match checkpoint {
        Some(path) if path.exists() => {
            let prior = CampaignLedger::load(path)?;
            check_resumable(&prior, config, &fingerprint)?;
            log::info!("resuming campaign at trial {}", prior.trials_run());
            prior
        }
        _ => CampaignLedger::new(),
    };
    {
        let meta = ledger.meta_mut();
        meta.seed = Some(config.seed);
        meta.scheme = Some(config.scheme.sizes().to_vec());
        meta.max_subsamples = Some(config.scheme.max_subsamples());
        meta.blackout_threshold = Some(config.sim.blackout_threshold);
        meta.case_sha256 = Some(fingerprint);
    }
    if ledger.trials_run() >= config.n_trials {
        return Ok(ledger);
    }

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = config.workers {
        builder = builder.num_threads(w.max(1));
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Validation(format!("cannot start worker pool: {e}")))?;
    let batch = config
        .checkpoint_every
        .filter(|&b| b > 0 && checkpoint.is_some())
        .unwrap_or(config.n_trials);

    let mut start = ledger.trials_run();
    while start < config.n_trials {
        let end = (start + batch).min(config.n_trials);
        let results: Vec<(u64, TrialOutcome)> = pool.install(|| {
            (start..end)
                .into_par_iter()
                .map(|t| {
                    let mut rng = trial_rng(config.seed, t);
                    rc_trial(case, &config.scheme, &config.sim, &mut rng).map(|r| (t, r.outcome))
                })
                .collect::<Result<Vec<_>>>()
        })?;
        // collect() keeps index order, so the ledger is schedule-independent
        for (t, outcome) in results {
            match outcome {
                TrialOutcome::Found(m) => ledger.record(t, Some(&m)),
                TrialOutcome::Aborted { .. } => ledger.record(t, None),
            }
        }
        if let Some(path) = checkpoint {
            ledger.save(path)?;
        }
        log::info!(
            "trials {end}/{}: {} discoveries, {} unique, {} aborted",
            config.n_trials,
            ledger.discoveries().len(),
            ledger.unique_sets().len(),
            ledger.trials_aborted()
        );
        start = end;
    }
    Ok(ledger)
}

fn check_resumable(prior: &CampaignLedger, config: &CampaignConfig, fingerprint: &str) -> Result<()> {
    let meta = prior.meta();
    let same = meta.seed == Some(config.seed)
        && meta.scheme.as_deref() == Some(config.scheme.sizes())
        && meta.max_subsamples == Some(config.scheme.max_subsamples())
        && meta.blackout_threshold == Some(config.sim.blackout_threshold)
        && meta.case_sha256.as_deref() == Some(fingerprint);
    if same {
        Ok(())
    } else {
        Err(Error::Validation(
            "existing ledger was produced by a different case, seed or scheme".into(),
        ))
    }
}
