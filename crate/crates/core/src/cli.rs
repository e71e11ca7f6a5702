//! Command-line front end. Exit codes: 0 success, 2 bad input, 3 runtime
//! failure.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::analysis;
use crate::cascade::{simulate, SimConfig, DEFAULT_BLACKOUT_THRESHOLD};
use crate::copula::{CorrelationModel, ProbabilityEngine};
use crate::error::{Error, Result};
use crate::estimate::{chao_estimate, rcp_estimate, undersampling_report, StabilityWindow};
use crate::grid::{load_case, CaseFormat, GridCase};
use crate::manifest::RunManifest;
use crate::rc::{run_campaign, CampaignConfig, CampaignLedger, RcScheme, DEFAULT_MAX_SUBSAMPLES};
use crate::risk::{
    load_sweep, risk_grid, sampled_if_flat, write_grid_csv, write_sweep_csv, SetSizePolicy,
    DEFAULT_FLAT_WINDOW,
};

/// Environment variable holding the default worker count.
pub const WORKERS_ENV: &str = "BLACKOUT_RISK_WORKERS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "blackout-risk", version, about = "Cascading-blackout risk under correlated branch outages")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate the cascade after an outage set and print the outcome as JSON.
    Simulate(SimulateArgs),
    /// Run a Random Chemistry campaign and write the discovery ledger.
    RcCampaign(CampaignArgs),
    /// Chao and RCP bounds on the number of order-k malignancies.
    EstimateSize(EstimateArgs),
    /// Joint outage probability of a branch set.
    Jointp(JointpArgs),
    /// Risk over a (rho0, L) grid.
    Risk(RiskArgs),
    /// Figure datasets from a ledger.
    Analyze(AnalyzeArgs),
    /// Risk against load level, one fresh campaign per factor.
    LoadSweep(SweepArgs),
}

#[derive(Debug, Args)]
struct CaseArgs {
    /// Case file (native JSON, or MATPOWER text when the extension is .m).
    #[arg(long)]
    case: PathBuf,
    /// Bus coordinates CSV (bus_id,x_km,y_km) for cases without them.
    #[arg(long)]
    coords: Option<PathBuf>,
    /// Per-branch outage probabilities CSV overriding the case.
    #[arg(long)]
    probabilities: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    case: CaseArgs,
    /// Comma-separated branch ids.
    #[arg(long, default_value = "")]
    outages: String,
    #[arg(long, default_value_t = DEFAULT_BLACKOUT_THRESHOLD)]
    threshold: f64,
    /// Also write the outcome to this file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CampaignOptions {
    /// Comma-separated subset sizes, or "auto".
    #[arg(long, default_value = "auto")]
    scheme: String,
    #[arg(long, default_value_t = DEFAULT_MAX_SUBSAMPLES)]
    max_subsamples: usize,
    #[arg(long)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, env = WORKERS_ENV)]
    workers: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_BLACKOUT_THRESHOLD)]
    threshold: f64,
}

#[derive(Debug, Args)]
struct CampaignArgs {
    #[command(flatten)]
    case: CaseArgs,
    #[command(flatten)]
    campaign: CampaignOptions,
    /// Trials between ledger checkpoints.
    #[arg(long)]
    checkpoint_every: Option<u64>,
    /// Ledger path (JSON lines). An existing ledger from the same setup is resumed.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct WindowArgs {
    /// Trailing share of trials over which the most frequent pair must not change.
    #[arg(long, default_value_t = 0.1)]
    window_fraction: f64,
    /// Minimum stability window, in trials.
    #[arg(long, default_value_t = 1000)]
    min_window: u64,
}

impl WindowArgs {
    fn window(&self) -> StabilityWindow {
        StabilityWindow {
            fraction: self.window_fraction,
            min_trials: self.min_window,
        }
    }
}

#[derive(Debug, Args)]
struct EstimateArgs {
    #[command(flatten)]
    case: CaseArgs,
    #[arg(long)]
    ledger: PathBuf,
    #[arg(long, default_value_t = 3)]
    k: usize,
    /// Rows of the undersampling table.
    #[arg(long, default_value_t = 20)]
    top_m: usize,
    #[command(flatten)]
    window: WindowArgs,
    #[arg(long, default_value_t = DEFAULT_BLACKOUT_THRESHOLD)]
    threshold: f64,
    /// Bounds JSON; printed to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Undersampling table CSV.
    #[arg(long)]
    table: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct JointpArgs {
    #[command(flatten)]
    case: CaseArgs,
    #[arg(long)]
    branches: String,
    #[arg(long, default_value_t = 0.0)]
    rho0: f64,
    /// Characteristic length, km.
    #[arg(long = "L", default_value_t = 0.0)]
    length_km: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum K3Bound {
    Chao,
    Rcp,
}

#[derive(Debug, Args)]
struct RiskArgs {
    #[command(flatten)]
    case: CaseArgs,
    #[arg(long)]
    ledger: PathBuf,
    #[arg(long, default_value = "0,0.05,0.10,0.15")]
    rho0: String,
    #[arg(long = "L", default_value = "0,100,200,300")]
    lengths: String,
    /// Set-size bounds for N-3 risk.
    #[arg(long, value_delimiter = ',', default_value = "chao,rcp", conflicts_with = "k3_size")]
    k3_bounds: Vec<K3Bound>,
    /// Known |Ω₃| (overrides the bounds).
    #[arg(long)]
    k3_size: Option<f64>,
    /// Known |Ω₂|; otherwise the sampled pairs must have stopped growing.
    #[arg(long)]
    k2_size: Option<f64>,
    /// Trailing share of trials that must add no new pair.
    #[arg(long, default_value_t = DEFAULT_FLAT_WINDOW)]
    flat_window: f64,
    #[command(flatten)]
    window: WindowArgs,
    #[arg(long, default_value_t = DEFAULT_BLACKOUT_THRESHOLD)]
    threshold: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AnalyzeKind {
    Accumulation,
    PairFreq,
    Distributions,
    Distances,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    kind: AnalyzeKind,
    #[arg(long)]
    ledger: PathBuf,
    /// Needed for distributions and distances.
    #[arg(long)]
    case: Option<PathBuf>,
    #[arg(long)]
    coords: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// Random benign pairs for the distance comparison.
    #[arg(long, default_value_t = analysis::DEFAULT_BENIGN_PAIRS)]
    benign_pairs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    case: CaseArgs,
    #[command(flatten)]
    campaign: CampaignOptions,
    #[arg(long, default_value = "0.8,0.85,0.9,0.95,1.0,1.05,1.1,1.15")]
    factors: String,
    #[arg(long, default_value_t = 0.15)]
    rho0: f64,
    #[arg(long = "L", default_value_t = 300.0)]
    length_km: f64,
    #[command(flatten)]
    window: WindowArgs,
    #[arg(long)]
    out: PathBuf,
}

/// Entry point used by the binary.
pub fn main() -> i32 {
    run(std::env::args_os())
}

/// Parse `args` (program name first) and run the subcommand.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .try_init();
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    let recorded: Vec<String> = args.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    match dispatch(cli.command, recorded) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() || is_missing_input(&e) {
                EXIT_INPUT
            } else {
                EXIT_RUNTIME
            }
        }
    }
}

fn is_missing_input(e: &Error) -> bool {
    matches!(e, Error::Io { source, .. } if source.kind() == std::io::ErrorKind::NotFound)
}

fn dispatch(command: Command, args: Vec<String>) -> Result<()> {
    match command {
        Command::Simulate(a) => cmd_simulate(a, args),
        Command::RcCampaign(a) => cmd_rc_campaign(a, args),
        Command::EstimateSize(a) => cmd_estimate_size(a, args),
        Command::Jointp(a) => cmd_jointp(a),
        Command::Risk(a) => cmd_risk(a, args),
        Command::Analyze(a) => cmd_analyze(a, args),
        Command::LoadSweep(a) => cmd_load_sweep(a, args),
    }
}

fn read_case(a: &CaseArgs) -> Result<GridCase> {
    let case = load_case(&a.case, CaseFormat::from_path(&a.case), a.coords.as_deref())?;
    match &a.probabilities {
        Some(p) => {
            let probs = crate::grid::load_probabilities(p, &case)?;
            case.with_outage_probabilities(probs)
        }
        None => Ok(case),
    }
}

fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse()
                .map_err(|_| Error::Validation(format!("bad {what} '{s}'")))
        })
        .collect()
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    Ok(BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?))
}

/// Print a line to stdout; a closed pipe (e.g. `| head`) is not an error.
fn emit(text: &str) -> Result<()> {
    let mut out = std::io::stdout().lock();
    match writeln!(out, "{text}") {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Error::io("<stdout>", e)),
        _ => Ok(()),
    }
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

fn manifest(command: &str, args: Vec<String>, case: &Path) -> Result<RunManifest> {
    RunManifest::start(command, args).with_case_file(case)
}

fn scheme_for(opts: &CampaignOptions, case: &GridCase) -> Result<RcScheme> {
    RcScheme::parse(&opts.scheme, case.n_branches())?.with_max_subsamples(opts.max_subsamples)
}

fn cmd_simulate(a: SimulateArgs, args: Vec<String>) -> Result<()> {
    let case = read_case(&a.case)?;
    let outages: Vec<i64> = parse_list(&a.outages, "branch id")?;
    let sim = SimConfig::with_threshold(a.threshold)?;
    let outcome = simulate(&case, &outages, &sim)?;
    emit(&serde_json::to_string_pretty(&outcome)?)?;
    if let Some(out) = &a.out {
        write_json(out, &outcome)?;
        let mut m = manifest("simulate", args, &a.case.case)?;
        m.config = json!({ "outages": outages, "threshold": a.threshold });
        m.outputs = vec![out.clone()];
        m.finish(out)?;
    }
    Ok(())
}

fn campaign_config(opts: &CampaignOptions, case: &GridCase) -> Result<CampaignConfig> {
    let mut config = CampaignConfig::new(scheme_for(opts, case)?, opts.trials, opts.seed);
    config.sim = SimConfig::with_threshold(opts.threshold)?;
    config.workers = opts.workers;
    Ok(config)
}

fn cmd_rc_campaign(a: CampaignArgs, args: Vec<String>) -> Result<()> {
    let case = read_case(&a.case)?;
    let mut config = campaign_config(&a.campaign, &case)?;
    config.checkpoint_every = a.checkpoint_every;
    let ledger = run_campaign(&case, &config, Some(&a.out))?;
    ledger.save(&a.out)?;
    let mut m = manifest("rc-campaign", args, &a.case.case)?;
    m.seed = Some(config.seed);
    m.scheme = Some(config.scheme.sizes().to_vec());
    m.config = json!({
        "trials": config.n_trials,
        "max_subsamples": config.scheme.max_subsamples(),
        "threshold": config.sim.blackout_threshold,
    });
    m.outputs = vec![a.out.clone(), crate::rc::ledger_meta_path(&a.out)];
    m.finish(&a.out)?;
    let orders: BTreeMap<usize, usize> =
        ledger.orders().into_iter().map(|k| (k, ledger.unique_count(k))).collect();
    emit(&format!(
        "{} trials, {} aborted, {} discoveries, unique by order {:?}",
        ledger.trials_run(),
        ledger.trials_aborted(),
        ledger.discoveries().len(),
        orders
    ))
}

fn cmd_estimate_size(a: EstimateArgs, args: Vec<String>) -> Result<()> {
    let case = read_case(&a.case)?;
    let ledger = CampaignLedger::load(&a.ledger)?;
    let sim = SimConfig::with_threshold(a.threshold)?;
    let value = if a.k == 3 {
        serde_json::to_value(rcp_estimate(&case, &ledger, &sim, &a.window.window())?)?
    } else {
        let (n1, n2) = ledger.singletons_doubletons(a.k);
        json!({
            "k": a.k,
            "unique_found": ledger.unique_count(a.k),
            "chao_lower": chao_estimate(&ledger, a.k)?,
            "n1": n1,
            "n2": n2,
        })
    };
    match &a.out {
        Some(out) => {
            write_json(out, &value)?;
            let mut m = manifest("estimate-size", args.clone(), &a.case.case)?;
            m.config = json!({ "k": a.k, "window": a.window.window(), "ledger": a.ledger });
            m.outputs = vec![out.clone()];
            m.finish(out)?;
        }
        None => emit(&serde_json::to_string_pretty(&value)?)?,
    }
    if let Some(table) = &a.table {
        let rows = undersampling_report(&case, &ledger, a.top_m, &sim)?;
        let mut w = csv::Writer::from_writer(create(table)?);
        for row in rows {
            w.serialize(row)?;
        }
        w.flush().map_err(|e| Error::io(table, e))?;
        let mut m = manifest("estimate-size", args, &a.case.case)?;
        m.config = json!({ "top_m": a.top_m, "ledger": a.ledger });
        m.outputs = vec![table.clone()];
        m.finish(table)?;
    }
    Ok(())
}

fn cmd_jointp(a: JointpArgs) -> Result<()> {
    let case = read_case(&a.case)?;
    let branches: Vec<i64> = parse_list(&a.branches, "branch id")?;
    if branches.is_empty() {
        return Err(Error::Validation("--branches needs at least one id".into()));
    }
    let model = CorrelationModel::new(a.rho0, a.length_km)?;
    let p = ProbabilityEngine::new(&case).probability(&branches, &model)?;
    emit(&serde_json::to_string_pretty(&p)?)?;
    Ok(())
}

fn k3_policy(
    a: &RiskArgs,
    case: &GridCase,
    ledger: &CampaignLedger,
    sim: &SimConfig,
) -> Result<Option<SetSizePolicy>> {
    if ledger.unique_count(3) == 0 {
        return Ok(None);
    }
    if let Some(n) = a.k3_size {
        return Ok(Some(SetSizePolicy::Exact(n)));
    }
    let wants = |b| a.k3_bounds.contains(&b);
    let (chao, rcp) = (wants(K3Bound::Chao), wants(K3Bound::Rcp));
    let policy = match (chao, rcp) {
        (false, false) => return Ok(None),
        (true, false) => SetSizePolicy::Exact(chao_estimate(ledger, 3)?),
        _ => {
            let b = rcp_estimate(case, ledger, sim, &a.window.window())?;
            if chao {
                SetSizePolicy::Bounds {
                    lower: b.chao_lower,
                    upper: b.rcp_upper,
                }
            } else {
                SetSizePolicy::Exact(b.rcp_upper)
            }
        }
    };
    Ok(Some(policy))
}

fn cmd_risk(a: RiskArgs, args: Vec<String>) -> Result<()> {
    let case = read_case(&a.case)?;
    let ledger = CampaignLedger::load(&a.ledger)?;
    let sim = SimConfig::with_threshold(a.threshold)?;
    let rho0s: Vec<f64> = parse_list(&a.rho0, "rho0")?;
    let lengths: Vec<f64> = parse_list(&a.lengths, "length")?;
    let mut policies = BTreeMap::new();
    match a.k2_size {
        Some(n) => {
            policies.insert(2, SetSizePolicy::Exact(n));
        }
        None => match sampled_if_flat(&ledger, 2, a.flat_window) {
            Some(p) => {
                policies.insert(2, p);
            }
            None if ledger.unique_count(2) > 0 => {
                log::warn!("new N-2 sets still appear in the last {:.0}% of trials", 100.0 * a.flat_window);
            }
            None => {}
        },
    }
    if let Some(p) = k3_policy(&a, &case, &ledger, &sim)? {
        policies.insert(3, p);
    }
    let engine = ProbabilityEngine::new(&case);
    let rows = risk_grid(&engine, &ledger, &rho0s, &lengths, &policies)?;
    write_grid_csv(&rows, create(&a.out)?)?;
    let mut m = manifest("risk", args, &a.case.case)?;
    m.config = json!({
        "ledger": a.ledger,
        "rho0": rho0s,
        "L_km": lengths,
        "set_sizes": policies,
        "risk_units": "MW of expected unserved load per hour of exposure",
    });
    m.outputs = vec![a.out.clone()];
    m.finish(&a.out)?;
    Ok(())
}

fn cmd_analyze(a: AnalyzeArgs, args: Vec<String>) -> Result<()> {
    let ledger = CampaignLedger::load(&a.ledger)?;
    if ledger.is_empty() {
        return Err(Error::EmptyLedger);
    }
    let case = match (&a.case, a.kind) {
        (Some(path), _) => Some(load_case(path, CaseFormat::from_path(path), a.coords.as_deref())?),
        (None, AnalyzeKind::Distributions | AnalyzeKind::Distances) => {
            return Err(Error::Validation("this analysis needs --case".into()))
        }
        (None, _) => None,
    };
    std::fs::create_dir_all(&a.out_dir).map_err(|e| Error::io(&a.out_dir, e))?;
    let mut outputs = Vec::new();
    let mut out = |name: &str| {
        let p = a.out_dir.join(name);
        outputs.push(p.clone());
        p
    };
    match a.kind {
        AnalyzeKind::Accumulation => analysis::write_accumulation(&ledger, create(&out("accumulation.csv"))?)?,
        AnalyzeKind::PairFreq => analysis::write_pair_frequencies(&ledger, create(&out("pair_freq.csv"))?)?,
        AnalyzeKind::Distributions => {
            let d = analysis::distributions(case.as_ref().expect("checked"), &ledger)?;
            d.write_sizes(create(&out("blackout_sizes.csv"))?)?;
            d.write_distances(create(&out("set_distances.csv"))?)?;
            d.write_medians(create(&out("medians.csv"))?)?;
        }
        AnalyzeKind::Distances => {
            let c = analysis::distance_comparison(case.as_ref().expect("checked"), &ledger, a.benign_pairs, a.seed)?;
            c.write(create(&out("distance_comparison.csv"))?)?;
        }
    }
    for path in &outputs {
        let mut m = match &a.case {
            Some(c) => manifest("analyze", args.clone(), c)?,
            None => RunManifest::start("analyze", args.clone()),
        };
        m.seed = Some(a.seed);
        m.config = json!({ "kind": format!("{:?}", a.kind), "ledger": a.ledger, "benign_pairs": a.benign_pairs });
        m.outputs = vec![path.clone()];
        m.finish(path)?;
    }
    Ok(())
}

fn cmd_load_sweep(a: SweepArgs, args: Vec<String>) -> Result<()> {
    let case = read_case(&a.case)?;
    let factors: Vec<f64> = parse_list(&a.factors, "load factor")?;
    if factors.is_empty() {
        return Err(Error::Validation("--factors is empty".into()));
    }
    let config = campaign_config(&a.campaign, &case)?;
    let model = CorrelationModel::new(a.rho0, a.length_km)?;
    let window = a.window.window();
    let sim = config.sim;
    let points = load_sweep(&case, &factors, &model, &config, |scaled, ledger| {
        let mut p = BTreeMap::new();
        if ledger.unique_count(2) > 0 {
            if sampled_if_flat(ledger, 2, DEFAULT_FLAT_WINDOW).is_none() {
                log::warn!("N-2 accumulation has not flattened; using the sampled pairs");
            }
            p.insert(2, SetSizePolicy::Sampled);
        }
        if ledger.unique_count(3) > 0 {
            let policy = match rcp_estimate(scaled, ledger, &sim, &window) {
                Ok(b) => SetSizePolicy::Bounds {
                    lower: b.chao_lower,
                    upper: b.rcp_upper,
                },
                Err(e) => {
                    log::warn!("no N-3 bounds ({e}); using the sampled triples");
                    SetSizePolicy::Sampled
                }
            };
            p.insert(3, policy);
        }
        Ok(p)
    })?;
    write_sweep_csv(&points, create(&a.out)?)?;
    let mut m = manifest("load-sweep", args, &a.case.case)?;
    m.seed = Some(config.seed);
    m.scheme = Some(config.scheme.sizes().to_vec());
    m.config = json!({
        "factors": factors,
        "trials": config.n_trials,
        "rho0": a.rho0,
        "L_km": a.length_km,
    });
    m.outputs = vec![a.out.clone()];
    m.finish(&a.out)?;
    Ok(())
}
