use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use serde_json::{Map, Value};

use cellfree::bench::{self, CampaignConfig, Method};
use cellfree::designer::Backend;
use cellfree::misocp::{self, BnbOptions};
use cellfree::scenario::{dbm_to_w, PerUser, Scenario, ScenarioConfig};
use cellfree::semodel;
use cellfree::Error;

#[derive(Parser)]
#[command(name = "cellfree", version, about = "AP switching and power control benchmark")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the selected methods on a single drop and print its JSON record.
    Drop {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        index: u64,
        /// Comma-separated list of all-on, sparsity, misocp, oracle.
        #[arg(long, value_delimiter = ',')]
        methods: Option<Vec<Method>>,
    },
    /// Run a Monte-Carlo campaign and write CDF tables and a summary.
    Campaign {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 100)]
        drops: usize,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long)]
        out: PathBuf,
        /// Also write one JSON file per drop under `<out>/drops`.
        #[arg(long)]
        per_drop: bool,
    },
    /// Compare branch-and-bound against exhaustive enumeration on random
    /// small networks.
    OracleCheck {
        #[arg(long, default_value_t = 6)]
        m: usize,
        #[arg(long, default_value_t = 3)]
        k: usize,
        #[arg(long, default_value_t = 20)]
        instances: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-5)]
        rel_tol: f64,
    },
}

const CAMPAIGN_KEYS: [&str; 5] = ["methods", "base_seed", "irls", "bnb", "oracle_cap"];

/// Reads a config document: scenario fields at top level (any omitted field
/// keeps its reference value), `noise_dbm` as an alternative to `noise_w`,
/// and the campaign keys `methods`, `base_seed`, `irls`, `bnb`, `oracle_cap`.
fn load_config(path: Option<&Path>) -> Result<CampaignConfig> {
    let defaults = CampaignConfig::reference();
    let Some(path) = path else {
        return Ok(defaults);
    };
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    let user: Map<String, Value> = serde_json::from_str(&text)
        .with_context(|| format!("parsing config {}", path.display()))?;
    config_from_map(user, defaults)
}

fn config_from_map(mut user: Map<String, Value>, defaults: CampaignConfig) -> Result<CampaignConfig> {
    if let Some(dbm) = user.remove("noise_dbm") {
        if user.contains_key("noise_w") {
            bail!("give either noise_dbm or noise_w, not both");
        }
        let dbm = dbm.as_f64().context("noise_dbm must be a number")?;
        user.insert("noise_w".into(), dbm_to_w(dbm).into());
    }
    let Value::Object(mut campaign) = serde_json::to_value(&defaults)? else {
        unreachable!("campaign config serializes to an object");
    };
    let Some(Value::Object(mut scenario)) = campaign.remove("scenario") else {
        unreachable!("scenario config serializes to an object");
    };
    for (key, value) in user {
        if CAMPAIGN_KEYS.contains(&key.as_str()) {
            campaign.insert(key, value);
        } else if scenario.contains_key(&key) {
            scenario.insert(key, value);
        } else {
            bail!("unknown config key `{key}`");
        }
    }
    campaign.insert("scenario".into(), Value::Object(scenario));
    let campaign = Value::Object(campaign);
    let cfg: CampaignConfig = serde_json::from_value(campaign)?;
    cfg.validate()?;
    Ok(cfg)
}

fn run_drop(config: Option<&Path>, index: u64, methods: Option<Vec<Method>>) -> Result<ExitCode> {
    let mut cfg = load_config(config)?;
    if let Some(methods) = methods {
        cfg.methods = methods;
    }
    cfg.validate()?;
    let result = bench::run_drop(&cfg, index);
    println!("{}", serde_json::to_string_pretty(&result)?);
    Ok(if result.error.is_some() {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    })
}

fn run_campaign(
    config: Option<&Path>,
    drops: usize,
    workers: usize,
    out: &Path,
    per_drop: bool,
) -> Result<ExitCode> {
    let cfg = load_config(config)?;
    let (summary, results) = bench::run_campaign(&cfg, drops, workers)?;
    if per_drop {
        bench::write_drop_json(&results, &out.join("drops"))?;
    }
    match bench::emit_cdf(&summary, out) {
        Ok(paths) => {
            for p in paths {
                eprintln!("wrote {}", p.display());
            }
        }
        Err(e) => {
            // still leave the failure manifest behind
            std::fs::create_dir_all(out)?;
            std::fs::write(out.join(bench::SUMMARY_FILE), serde_json::to_string_pretty(&summary)?)?;
            bail!("no samples to plot: {e}");
        }
    }
    for m in &summary.methods {
        let fmt = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.4}"));
        println!(
            "{:<9} completed {:>4}/{:<4} mean total {} W, mean transmit {} W",
            m.method.name(),
            m.completed,
            summary.n_drops,
            fmt(m.total_power_w.mean),
            fmt(m.transmit_power_w.mean),
        );
    }
    for s in summary.savings.iter().filter(|s| s.baseline == Method::AllOn) {
        if let Some(pct) = s.mean_saving_pct {
            println!("{} saves {pct:.2} % over all-on ({} drops)", s.method, s.drops);
        }
    }
    if !summary.failures.is_empty() {
        eprintln!("{} method runs did not complete, see summary.json", summary.failures.len());
    }
    Ok(ExitCode::SUCCESS)
}

fn oracle_check(m: usize, k: usize, instances: u64, seed: u64, rel_tol: f64) -> Result<ExitCode> {
    let mut base = ScenarioConfig::reference();
    base.ap_count = m;
    base.user_count = k;
    base.tau_p = k.clamp(1, 5);
    base.antennas = 4;
    base.side_m = 400.0;
    base.min_ap_dist_m = 20.0;
    base.se_targets = PerUser::Uniform(1.0);
    let backend = Backend::default();
    let (mut agree, mut infeasible, mut mismatched) = (0, 0, 0);
    for i in 0..instances {
        let mut cfg = base.clone();
        cfg.seed = bench::drop_seed(seed, i);
        let scn = Scenario::generate(&cfg)?;
        let targets = semodel::se_target_to_sinr(&cfg.se_target_vec(), cfg.tau_c, cfg.tau_p)?;
        let exact = misocp::solve_misocp(&backend, &scn, &targets, &BnbOptions::default());
        let oracle = misocp::exhaustive_oracle(&backend, &scn, &targets, misocp::ORACLE_CAP);
        match (exact, oracle) {
            (Err(Error::GlobalInfeasible), Err(Error::GlobalInfeasible)) => infeasible += 1,
            (Ok(a), Ok(b)) => {
                let rel = (a.total_power_w - b.total_power_w).abs() / b.total_power_w;
                if rel <= rel_tol {
                    agree += 1;
                } else {
                    mismatched += 1;
                    println!(
                        "instance {i}: branch-and-bound {:.9} W, oracle {:.9} W",
                        a.total_power_w, b.total_power_w
                    );
                }
            }
            (a, b) => {
                mismatched += 1;
                println!(
                    "instance {i}: branch-and-bound {:?}, oracle {:?}",
                    a.map(|r| r.total_power_w).map_err(|e| e.to_string()),
                    b.map(|r| r.total_power_w).map_err(|e| e.to_string()),
                );
            }
        }
    }
    println!("{agree} agree, {infeasible} infeasible for both, {mismatched} mismatched");
    Ok(if mismatched == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Drop { config, index, methods } => run_drop(config.as_deref(), index, methods),
        Command::Campaign { config, drops, workers, out, per_drop } => {
            run_campaign(config.as_deref(), drops, workers, &out, per_drop)
        }
        Command::OracleCheck { m, k, instances, seed, rel_tol } => {
            oracle_check(m, k, instances, seed, rel_tol)
        }
    };
    match res {
        Ok(code) => code,
        Err(e) => {
            log::error!("{e:#}");
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
