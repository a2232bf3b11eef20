//! Monte-Carlo campaigns comparing AP selection methods over random drops.
//!
//! Every drop derives its own seed from the campaign's base seed and index,
//! so any drop can be replayed alone and a longer campaign reproduces the
//! first drops of a shorter one. Drops run on a worker pool; results are
//! ordered by drop index before aggregation, so the summary does not depend
//! on the worker count.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::designer::{self, Backend, FixedSetSolution, ObjectiveMode};
use crate::error::{Error, Result};
use crate::misocp::{self, BnbOptions, BnbStatus, ORACLE_CAP};
use crate::scenario::{Scenario, ScenarioConfig};
use crate::semodel::{self, ActiveSet, PowerAllocation, SinrTargets};
use crate::sparsity::{self, IrlsOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "all-on")]
    AllOn,
    #[serde(rename = "sparsity")]
    Sparsity,
    #[serde(rename = "misocp")]
    Misocp,
    #[serde(rename = "oracle")]
    Oracle,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::AllOn, Method::Sparsity, Method::Misocp, Method::Oracle];

    pub fn name(self) -> &'static str {
        match self {
            Method::AllOn => "all-on",
            Method::Sparsity => "sparsity",
            Method::Misocp => "misocp",
            Method::Oracle => "oracle",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown method `{s}`")))
    }
}

/// Scenario template, method list and per-method options of a campaign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignConfig {
    /// Template for every drop; its `seed` is replaced by the drop seed.
    pub scenario: ScenarioConfig,
    pub methods: Vec<Method>,
    pub base_seed: u64,
    #[serde(default)]
    pub irls: IrlsOptions,
    #[serde(default)]
    pub bnb: BnbOptions,
    #[serde(default = "default_oracle_cap")]
    pub oracle_cap: usize,
}

fn default_oracle_cap() -> usize {
    ORACLE_CAP
}

impl CampaignConfig {
    /// The reference network with the all-on baseline and the sparsity
    /// pipeline.
    pub fn reference() -> Self {
        Self {
            scenario: ScenarioConfig::reference(),
            methods: vec![Method::AllOn, Method::Sparsity],
            base_seed: 0,
            irls: IrlsOptions::default(),
            bnb: BnbOptions::default(),
            oracle_cap: ORACLE_CAP,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        if self.methods.is_empty() {
            return Err(Error::InvalidConfig("no methods requested".into()));
        }
        let mut seen = self.methods.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.methods.len() {
            return Err(Error::InvalidConfig("duplicate method".into()));
        }
        Ok(())
    }

    pub fn drop_config(&self, index: u64) -> ScenarioConfig {
        let mut c = self.scenario.clone();
        c.seed = drop_seed(self.base_seed, index);
        c
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of drop `index` in a campaign with `base_seed`.
pub fn drop_seed(base_seed: u64, index: u64) -> u64 {
    splitmix64(base_seed ^ splitmix64(index))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodStatus {
    Optimal,
    GlobalInfeasible,
    /// Branch-and-bound stopped on its node budget; the incumbent is reported.
    NodeLimit,
    Failed,
}

/// Independent re-check of a reported allocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifierSummary {
    pub feasible: bool,
    pub worst_sinr_slack: f64,
    pub worst_cap_slack: f64,
    pub recomputed_total_w: f64,
    pub recomputed_transmit_w: f64,
}

impl VerifierSummary {
    pub fn check(
        alloc: &PowerAllocation,
        active: &ActiveSet,
        scn: &Scenario,
        targets: &SinrTargets,
    ) -> Result<Self> {
        let report = semodel::check_feasible(alloc, active, scn, targets)?;
        Ok(Self {
            feasible: report.feasible && report.inactive_power == 0.0,
            worst_sinr_slack: report.worst_sinr_slack(),
            worst_cap_slack: report.worst_cap_slack(),
            recomputed_total_w: semodel::total_power(
                alloc,
                active,
                scn.config.delta,
                scn.config.p_act_w,
            ),
            recomputed_transmit_w: alloc.transmit_power(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodRecord {
    pub method: Method,
    pub status: MethodStatus,
    pub total_power_w: Option<f64>,
    pub transmit_power_w: Option<f64>,
    pub active_count: Option<usize>,
    pub active: Option<Vec<usize>>,
    pub alloc: Option<PowerAllocation>,
    pub solve_time_s: f64,
    /// Solver iterations (all-on), reweighting iterations (sparsity), nodes
    /// (misocp) or fixed-set solves (oracle).
    pub iterations: usize,
    pub verifier: Option<VerifierSummary>,
    pub error: Option<String>,
}

impl MethodRecord {
    fn failed(method: Method, status: MethodStatus, error: Option<String>, time: f64) -> Self {
        Self {
            method,
            status,
            total_power_w: None,
            transmit_power_w: None,
            active_count: None,
            active: None,
            alloc: None,
            solve_time_s: time,
            iterations: 0,
            verifier: None,
            error,
        }
    }

    pub fn succeeded(&self) -> bool {
        matches!(self.status, MethodStatus::Optimal | MethodStatus::NodeLimit)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DropResult {
    pub drop_index: u64,
    pub seed: u64,
    pub records: Vec<MethodRecord>,
    /// Set when the drop itself could not be generated.
    pub error: Option<String>,
}

impl DropResult {
    pub fn record(&self, method: Method) -> Option<&MethodRecord> {
        self.records.iter().find(|r| r.method == method)
    }
}

fn solved_record(
    method: Method,
    status: MethodStatus,
    alloc: &PowerAllocation,
    active: &ActiveSet,
    iterations: usize,
    time: f64,
    scn: &Scenario,
    targets: &SinrTargets,
) -> Result<MethodRecord> {
    let verifier = VerifierSummary::check(alloc, active, scn, targets)?;
    let status = if verifier.feasible {
        status
    } else {
        MethodStatus::Failed
    };
    Ok(MethodRecord {
        method,
        status,
        // reported figures always come from the allocation, not the solver
        total_power_w: Some(verifier.recomputed_total_w),
        transmit_power_w: Some(verifier.recomputed_transmit_w),
        active_count: Some(active.len()),
        active: Some(active.to_vec()),
        alloc: Some(alloc.clone()),
        solve_time_s: time,
        iterations,
        error: (!verifier.feasible).then(|| "allocation failed verification".to_string()),
        verifier: Some(verifier),
    })
}

fn error_record(method: Method, err: Error, time: f64) -> MethodRecord {
    match err {
        Error::GlobalInfeasible => {
            MethodRecord::failed(method, MethodStatus::GlobalInfeasible, None, time)
        }
        e => MethodRecord::failed(method, MethodStatus::Failed, Some(e.to_string()), time),
    }
}

/// Transmit-power minimisation with every AP on.
pub fn all_on_baseline(
    backend: &Backend<'_>,
    scn: &Scenario,
    targets: &SinrTargets,
) -> Result<FixedSetSolution> {
    let m = scn.ap_count();
    designer::solve_fixed_set(
        backend,
        scn,
        targets,
        &ActiveSet::all(m),
        &ObjectiveMode::WeightedTransmitPower(vec![1.0; m]),
    )?
    .into_solution()
    .ok_or(Error::GlobalInfeasible)
}

fn run_method(
    method: Method,
    cfg: &CampaignConfig,
    backend: &Backend<'_>,
    scn: &Scenario,
    targets: &SinrTargets,
    baseline: &FixedSetSolution,
    baseline_time: f64,
) -> MethodRecord {
    let start = Instant::now();
    let outcome = match method {
        Method::AllOn => Ok((
            MethodStatus::Optimal,
            baseline.alloc.clone(),
            baseline.active.clone(),
            baseline.conic.iterations,
        )),
        Method::Sparsity => sparsity::run_sparsity_pipeline(backend, scn, targets, &cfg.irls)
            .map(|r| {
                let sol = r.selection.solution;
                (MethodStatus::Optimal, sol.alloc, sol.active, r.irls.state.iteration)
            }),
        Method::Misocp => misocp::solve_misocp(backend, scn, targets, &cfg.bnb).map(|r| {
            let status = match r.status {
                BnbStatus::Optimal => MethodStatus::Optimal,
                BnbStatus::NodeLimit => MethodStatus::NodeLimit,
            };
            (status, r.alloc, r.active, r.nodes_explored)
        }),
        Method::Oracle => misocp::exhaustive_oracle(backend, scn, targets, cfg.oracle_cap)
            .map(|r| (MethodStatus::Optimal, r.alloc, r.active, r.fixed_set_solves)),
    };
    let mut time = start.elapsed().as_secs_f64();
    if method == Method::AllOn {
        time += baseline_time;
    }
    match outcome {
        Ok((status, alloc, active, iterations)) => {
            solved_record(method, status, &alloc, &active, iterations, time, scn, targets)
                .unwrap_or_else(|e| error_record(method, e, time))
        }
        Err(e) => error_record(method, e, time),
    }
}

/// Generates drop `index` and runs every configured method on it.
pub fn run_drop(cfg: &CampaignConfig, index: u64) -> DropResult {
    run_drop_with(cfg, index, &Backend::default())
}

pub fn run_drop_with(cfg: &CampaignConfig, index: u64, backend: &Backend<'_>) -> DropResult {
    let scn_cfg = cfg.drop_config(index);
    let mut result = DropResult {
        drop_index: index,
        seed: scn_cfg.seed,
        records: Vec::new(),
        error: None,
    };
    let prepared = Scenario::generate(&scn_cfg).and_then(|scn| {
        let targets =
            semodel::se_target_to_sinr(&scn_cfg.se_target_vec(), scn_cfg.tau_c, scn_cfg.tau_p)?;
        Ok((scn, targets))
    });
    let (scn, targets) = match prepared {
        Ok(p) => p,
        Err(e) => {
            result.error = Some(e.to_string());
            return result;
        }
    };

    // shared global feasibility check, which is also the all-on solution
    let start = Instant::now();
    let baseline = all_on_baseline(backend, &scn, &targets);
    let baseline_time = start.elapsed().as_secs_f64();
    result.records = match baseline {
        Ok(base) => cfg
            .methods
            .iter()
            .map(|&m| run_method(m, cfg, backend, &scn, &targets, &base, baseline_time))
            .collect(),
        Err(e) => {
            let msg = e.to_string();
            cfg.methods
                .iter()
                .map(|&m| match &e {
                    Error::GlobalInfeasible => {
                        MethodRecord::failed(m, MethodStatus::GlobalInfeasible, None, 0.0)
                    }
                    _ => MethodRecord::failed(m, MethodStatus::Failed, Some(msg.clone()), 0.0),
                })
                .collect()
        }
    };
    result
}

/// Mean, median and 5 %/95 % quantiles of one metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricStats {
    pub count: usize,
    pub mean: Option<f64>,
    pub median: Option<f64>,
    pub q05: Option<f64>,
    pub q95: Option<f64>,
}

/// Linear-interpolation quantile of sorted samples.
pub fn quantile(sorted: &[f64], q: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    Some(sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64))
}

impl MetricStats {
    pub fn from_sorted(sorted: &[f64]) -> Self {
        Self {
            count: sorted.len(),
            mean: (!sorted.is_empty()).then(|| sorted.iter().sum::<f64>() / sorted.len() as f64),
            median: quantile(sorted, 0.5),
            q05: quantile(sorted, 0.05),
            q95: quantile(sorted, 0.95),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Method,
    pub completed: usize,
    pub failed: usize,
    pub transmit_power_w: MetricStats,
    pub total_power_w: MetricStats,
    pub mean_active_count: Option<f64>,
    /// Sorted samples, one per completed drop.
    pub transmit_samples: Vec<f64>,
    pub total_samples: Vec<f64>,
}

/// Mean per-drop total-power saving of `method` relative to `baseline`, in
/// percent, over drops where both succeeded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseSaving {
    pub method: Method,
    pub baseline: Method,
    pub drops: usize,
    pub mean_saving_pct: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureEntry {
    pub drop_index: u64,
    pub method: Option<Method>,
    pub status: Option<MethodStatus>,
    pub message: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignSummary {
    pub n_drops: usize,
    pub shadowing_model: String,
    pub config: CampaignConfig,
    pub methods: Vec<MethodSummary>,
    pub savings: Vec<PairwiseSaving>,
    pub failures: Vec<FailureEntry>,
}

impl CampaignSummary {
    pub fn method(&self, method: Method) -> Option<&MethodSummary> {
        self.methods.iter().find(|m| m.method == method)
    }

    pub fn saving(&self, method: Method, baseline: Method) -> Option<&PairwiseSaving> {
        self.savings
            .iter()
            .find(|s| s.method == method && s.baseline == baseline)
    }
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

/// Aggregates drop results (in any order) into a summary.
pub fn summarize(cfg: &CampaignConfig, drops: &[DropResult]) -> CampaignSummary {
    let mut drops: Vec<&DropResult> = drops.iter().collect();
    drops.sort_by_key(|d| d.drop_index);
    let mut failures = Vec::new();
    for d in &drops {
        if let Some(e) = &d.error {
            failures.push(FailureEntry {
                drop_index: d.drop_index,
                method: None,
                status: None,
                message: Some(e.clone()),
            });
        }
        for r in d.records.iter().filter(|r| !r.succeeded()) {
            failures.push(FailureEntry {
                drop_index: d.drop_index,
                method: Some(r.method),
                status: Some(r.status),
                message: r.error.clone(),
            });
        }
    }
    let methods = cfg
        .methods
        .iter()
        .map(|&m| {
            let ok: Vec<&MethodRecord> = drops
                .iter()
                .filter_map(|d| d.record(m))
                .filter(|r| r.succeeded())
                .collect();
            let transmit = sorted(ok.iter().filter_map(|r| r.transmit_power_w).collect());
            let total = sorted(ok.iter().filter_map(|r| r.total_power_w).collect());
            let active: Vec<f64> = ok.iter().filter_map(|r| r.active_count).map(|c| c as f64).collect();
            MethodSummary {
                method: m,
                completed: ok.len(),
                failed: drops.len() - ok.len(),
                transmit_power_w: MetricStats::from_sorted(&transmit),
                total_power_w: MetricStats::from_sorted(&total),
                mean_active_count: (!active.is_empty())
                    .then(|| active.iter().sum::<f64>() / active.len() as f64),
                transmit_samples: transmit,
                total_samples: total,
            }
        })
        .collect();
    let mut savings = Vec::new();
    for &method in &cfg.methods {
        for &baseline in &cfg.methods {
            if method == baseline {
                continue;
            }
            let per_drop: Vec<f64> = drops
                .iter()
                .filter_map(|d| {
                    let a = d.record(method).filter(|r| r.succeeded())?.total_power_w?;
                    let b = d.record(baseline).filter(|r| r.succeeded())?.total_power_w?;
                    (b > 0.0).then(|| 100.0 * (b - a) / b)
                })
                .collect();
            savings.push(PairwiseSaving {
                method,
                baseline,
                drops: per_drop.len(),
                mean_saving_pct: (!per_drop.is_empty())
                    .then(|| per_drop.iter().sum::<f64>() / per_drop.len() as f64),
            });
        }
    }
    CampaignSummary {
        n_drops: drops.len(),
        shadowing_model: cfg.scenario.shadowing.model_name().to_string(),
        config: cfg.clone(),
        methods,
        savings,
        failures,
    }
}

/// Runs drops `0..n_drops` on `workers` threads.
pub fn run_campaign(
    cfg: &CampaignConfig,
    n_drops: usize,
    workers: usize,
) -> Result<(CampaignSummary, Vec<DropResult>)> {
    cfg.validate()?;
    if n_drops == 0 {
        return Err(Error::InvalidConfig("a campaign needs at least one drop".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidConfig(format!("worker pool: {e}")))?;
    let mut drops: Vec<DropResult> = pool.install(|| {
        (0..n_drops as u64)
            .into_par_iter()
            .map(|i| {
                let d = run_drop(cfg, i);
                log::info!("drop {i} done");
                d
            })
            .collect()
    });
    drops.sort_by_key(|d| d.drop_index);
    Ok((summarize(cfg, &drops), drops))
}

pub const TRANSMIT_CDF_FILE: &str = "transmit_power_cdf.csv";
pub const TOTAL_CDF_FILE: &str = "total_power_cdf.csv";
pub const SUMMARY_FILE: &str = "summary.json";

fn write_cdf(path: &Path, columns: &[(Method, &[f64])]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["rank".to_string()];
    for (m, _) in columns {
        header.push(m.name().to_string());
        header.push(format!("{}_cdf", m.name()));
    }
    w.write_record(&header)?;
    let rows = columns.iter().map(|(_, s)| s.len()).max().unwrap_or(0);
    for i in 0..rows {
        let mut rec = vec![(i + 1).to_string()];
        for (_, samples) in columns {
            match samples.get(i) {
                Some(v) => {
                    rec.push(format!("{v:.12e}"));
                    rec.push(format!("{}", (i + 1) as f64 / samples.len() as f64));
                }
                None => {
                    rec.push(String::new());
                    rec.push(String::new());
                }
            }
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes both CDF tables and `summary.json` into `dir`.
pub fn emit_cdf(summary: &CampaignSummary, dir: &Path) -> Result<Vec<PathBuf>> {
    if summary.methods.iter().all(|m| m.completed == 0) {
        return Err(Error::InvalidConfig("summary has no completed samples".into()));
    }
    std::fs::create_dir_all(dir)?;
    let transmit: Vec<(Method, &[f64])> = summary
        .methods
        .iter()
        .map(|m| (m.method, m.transmit_samples.as_slice()))
        .collect();
    let total: Vec<(Method, &[f64])> = summary
        .methods
        .iter()
        .map(|m| (m.method, m.total_samples.as_slice()))
        .collect();
    let paths = [
        dir.join(TRANSMIT_CDF_FILE),
        dir.join(TOTAL_CDF_FILE),
        dir.join(SUMMARY_FILE),
    ];
    write_cdf(&paths[0], &transmit)?;
    write_cdf(&paths[1], &total)?;
    let mut json = serde_json::to_string_pretty(summary)?;
    json.push('\n');
    std::fs::write(&paths[2], json)?;
    Ok(paths.to_vec())
}

/// Writes one `drop_NNNNN.json` per drop into `dir`.
pub fn write_drop_json(drops: &[DropResult], dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for d in drops {
        let path = dir.join(format!("drop_{:05}.json", d.drop_index));
        std::fs::write(path, serde_json::to_string_pretty(d)?)?;
    }
    Ok(())
}

/// Reads one method column of an emitted CDF table.
pub fn read_cdf_column(path: &Path, method: Method) -> Result<Vec<(f64, f64)>> {
    let mut r = csv::Reader::from_path(path)?;
    let headers = r.headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::ShapeMismatch(format!("column `{name}` missing")))
    };
    let vi = find(method.name())?;
    let ci = find(&format!("{}_cdf", method.name()))?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        if rec[vi].is_empty() {
            continue;
        }
        let parse = |s: &str| {
            s.parse::<f64>()
                .map_err(|e| Error::ShapeMismatch(format!("bad number `{s}`: {e}")))
        };
        out.push((parse(&rec[vi])?, parse(&rec[ci])?));
    }
    Ok(out)
}
