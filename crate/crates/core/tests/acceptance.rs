//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

use std::sync::Mutex;
use std::time::Instant;

use cellfree::bench::{self, CampaignConfig, DropResult, Method};
use cellfree::conic::{
    residuals, ConicProgram, ConicSolution, ConicSolver, InteriorPoint, SolveStatus, SolverOptions,
};
use cellfree::designer::{solve_fixed_set, Backend, FixedSetOutcome, ObjectiveMode};
use cellfree::misocp::{self, BnbOptions, ORACLE_CAP};
use cellfree::scenario::{PerUser, Scenario, ScenarioConfig};
use cellfree::semodel::{self, se_target_to_sinr, ActiveSet, PowerAllocation, SinrTargets};
use cellfree::sparsity::{self, IrlsOptions};
use ndarray::{array, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const RESIDUAL_TOL: f64 = 1e-7;
const GAP_TOL: f64 = 1e-7;
const ORACLE_REL_TOL: f64 = 1e-5;
const CLOSED_FORM_REL_TOL: f64 = 1e-8;
const ORDER_ABS_TOL: f64 = 1e-6;
const TRACE_SLACK: f64 = 1e-9;
const SINR_GATE: f64 = 1e-6;
const CAP_GATE: f64 = 1e-8;

/// Wraps the interior-point solver and re-derives residuals of every
/// solution it reports as optimal.
struct Recorder {
    stats: Mutex<CertStats>,
}

#[derive(Default, Debug)]
struct CertStats {
    optimal: usize,
    violations: usize,
    worst_primal: f64,
    worst_dual: f64,
    worst_gap: f64,
}

impl ConicSolver for Recorder {
    fn solve(&self, prog: &ConicProgram, opts: &SolverOptions) -> ConicSolution {
        let sol = InteriorPoint.solve(prog, opts);
        if sol.status == SolveStatus::Optimal {
            let r = residuals(prog, &sol.x, &sol.z).expect("solution shapes match the program");
            let mut s = self.stats.lock().unwrap();
            s.optimal += 1;
            s.worst_primal = s.worst_primal.max(r.primal);
            s.worst_dual = s.worst_dual.max(r.dual);
            s.worst_gap = s.worst_gap.max(r.relative_gap);
            if r.primal > RESIDUAL_TOL || r.dual > RESIDUAL_TOL || r.relative_gap > GAP_TOL {
                s.violations += 1;
            }
        }
        sol
    }
}

/// Independent re-evaluation of reported allocations from β, γ and ρ.
#[derive(Default)]
struct Gate {
    checked: usize,
    failed: usize,
    worst_sinr: f64,
    worst_cap: f64,
}

fn oracle_sinr(scn: &Scenario, rho: &Array2<f64>, active: &ActiveSet) -> Vec<f64> {
    let n = scn.config.antennas as f64;
    let (m_count, k_count) = scn.beta.dim();
    let on: Vec<usize> = (0..m_count).filter(|&m| active.contains(m)).collect();
    (0..k_count)
        .map(|k| {
            let coh = |t: usize| on.iter().map(|&m| (rho[[m, t]] * scn.gamma[[m, k]]).sqrt()).sum::<f64>();
            let group = &scn.pilot_groups[scn.pilot_of[k]];
            let pilot: f64 = group.iter().filter(|&&t| t != k).map(|&t| n * coh(t).powi(2)).sum();
            let nonco: f64 = on
                .iter()
                .map(|&m| (0..k_count).map(|t| rho[[m, t]]).sum::<f64>() * scn.beta[[m, k]])
                .sum();
            n * coh(k).powi(2) / (pilot + nonco + scn.config.noise_w)
        })
        .collect()
}

impl Gate {
    fn check(&mut self, scn: &Scenario, targets: &SinrTargets, alloc: &PowerAllocation, active: &ActiveSet) {
        self.checked += 1;
        let rho = &alloc.rho;
        let p_max = scn.config.p_max_w;
        let mut ok = semodel::check_feasible(alloc, active, scn, targets)
            .map(|r| r.feasible)
            .unwrap_or(false);
        for (k, s) in oracle_sinr(scn, rho, active).into_iter().enumerate() {
            let nu = targets.nu[k];
            if nu > 0.0 {
                let slack = s - nu;
                self.worst_sinr = self.worst_sinr.min(slack / nu);
                ok &= slack >= -SINR_GATE * nu;
            }
        }
        for (m, row) in rho.rows().into_iter().enumerate() {
            let p: f64 = row.sum();
            let slack = p_max - p;
            self.worst_cap = self.worst_cap.min(slack / p_max);
            ok &= slack >= -CAP_GATE * p_max && row.iter().all(|&r| r >= 0.0);
            ok &= active.contains(m) || p == 0.0;
        }
        if !ok {
            self.failed += 1;
        }
    }

    fn check_drops(&mut self, cfg: &CampaignConfig, drops: &[DropResult]) {
        for d in drops {
            let scn_cfg = cfg.drop_config(d.drop_index);
            let scn = Scenario::generate(&scn_cfg).unwrap();
            let targets = targets_of(&scn_cfg);
            for r in d.records.iter().filter(|r| r.succeeded()) {
                let active: ActiveSet = r.active.clone().unwrap().into_iter().collect();
                self.check(&scn, &targets, r.alloc.as_ref().unwrap(), &active);
            }
        }
    }
}

fn targets_of(cfg: &ScenarioConfig) -> SinrTargets {
    se_target_to_sinr(&cfg.se_target_vec(), cfg.tau_c, cfg.tau_p).unwrap()
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn report(id: usize, name: &str, o: &Outcome, secs: f64) -> String {
    let tag = if o.pass { "PASS" } else { "FAIL" };
    format!("[{tag}] criterion {id} {name}: {} ({secs:.1} s)", o.detail)
}

fn oracle_equivalence(backend: &Backend<'_>, gate: &mut Gate) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x0a11_ce55);
    let (mut agree, mut feasible, mut worst) = (0, 0, 0.0f64);
    let mut misses = Vec::new();
    for i in 0..30 {
        let mut cfg = ScenarioConfig::reference();
        cfg.ap_count = rng.random_range(4..=8);
        cfg.user_count = rng.random_range(2..=4);
        cfg.antennas = [2, 4][rng.random_range(0..2)];
        cfg.tau_p = rng.random_range(1..=cfg.user_count);
        cfg.se_targets = PerUser::Uniform([0.5, 1.0, 2.0][rng.random_range(0..3)]);
        cfg.side_m = 300.0;
        cfg.min_ap_dist_m = 20.0;
        cfg.seed = rng.random();
        let scn = Scenario::generate(&cfg).unwrap();
        let targets = targets_of(&cfg);
        let exact = misocp::solve_misocp(backend, &scn, &targets, &BnbOptions::default());
        let oracle = misocp::exhaustive_oracle(backend, &scn, &targets, ORACLE_CAP);
        match (exact, oracle) {
            (Ok(a), Ok(b)) => {
                feasible += 1;
                gate.check(&scn, &targets, &a.alloc, &a.active);
                gate.check(&scn, &targets, &b.alloc, &b.active);
                let rel = (a.total_power_w - b.total_power_w).abs() / b.total_power_w;
                worst = worst.max(rel);
                if rel <= ORACLE_REL_TOL {
                    agree += 1;
                } else {
                    misses.push(i);
                }
            }
            (Err(cellfree::Error::GlobalInfeasible), Err(cellfree::Error::GlobalInfeasible)) => {
                agree += 1
            }
            _ => misses.push(i),
        }
    }
    Outcome {
        pass: agree == 30,
        detail: format!(
            "{agree}/30 agree ({feasible} feasible), worst relative difference {worst:.2e}, misses {misses:?}"
        ),
    }
}

/// `γ = τ_p p β² / (τ_p p β + σ²)` for a lone user on its own pilot.
fn lone_user_gamma(beta: f64, cfg: &ScenarioConfig) -> f64 {
    let tp = cfg.tau_p as f64 * cfg.pilot_power_w.get(0);
    tp * beta * beta / (tp * beta + cfg.noise_w)
}

fn closed_form_link(backend: &Backend<'_>, gate: &mut Gate) -> Outcome {
    let mut cfg = ScenarioConfig::reference();
    cfg.ap_count = 1;
    cfg.user_count = 1;
    cfg.tau_p = 1;
    let mut worst = 0.0f64;
    let mut ok = true;
    let mut solved = 0;
    for (n, beta_db, xi) in [(20, -100.0, 2.0), (4, -105.0, 1.0), (8, -95.0, 3.0), (1, -110.0, 0.5)] {
        cfg.antennas = n;
        cfg.se_targets = PerUser::Uniform(xi);
        let beta = 10f64.powf(beta_db / 10.0);
        let scn = Scenario::from_parts(cfg.clone(), vec![], vec![], array![[beta]], vec![vec![0]]).unwrap();
        let targets = targets_of(&cfg);
        let nu = targets.nu[0];
        let gamma = lone_user_gamma(beta, &cfg);
        let expected = nu * cfg.noise_w / (n as f64 * gamma - nu * beta);
        assert!(expected > 0.0 && expected < cfg.p_max_w);
        for mode in [ObjectiveMode::TotalPowerEpigraph, ObjectiveMode::WeightedTransmitPower(vec![1.0])] {
            match solve_fixed_set(backend, &scn, &targets, &ActiveSet::all(1), &mode).unwrap() {
                FixedSetOutcome::Solved(s) => {
                    solved += 1;
                    gate.check(&scn, &targets, &s.alloc, &s.active);
                    let rel = (s.alloc.rho[[0, 0]] - expected).abs() / expected;
                    worst = worst.max(rel);
                    ok &= rel <= CLOSED_FORM_REL_TOL;
                }
                FixedSetOutcome::Infeasible { .. } => ok = false,
            }
        }
    }
    // N γ ≤ ν β: no power level reaches the target
    cfg.antennas = 2;
    cfg.se_targets = PerUser::Uniform(2.0);
    let beta = 1e-10;
    let scn = Scenario::from_parts(cfg.clone(), vec![], vec![], array![[beta]], vec![vec![0]]).unwrap();
    let targets = targets_of(&cfg);
    assert!(2.0 * lone_user_gamma(beta, &cfg) <= targets.nu[0] * beta);
    let cert = match solve_fixed_set(backend, &scn, &targets, &ActiveSet::all(1), &ObjectiveMode::TotalPowerEpigraph)
        .unwrap()
    {
        FixedSetOutcome::Infeasible { certificate_residual } => certificate_residual,
        FixedSetOutcome::Solved(_) => None,
    };
    let cert_ok = cert.is_some_and(|c| c <= 1e-7);
    Outcome {
        pass: ok && solved == 8 && cert_ok,
        detail: format!(
            "{solved}/8 solves, worst relative error {worst:.2e}, infeasible link certificate residual {cert:?}"
        ),
    }
}

fn mid_config() -> ScenarioConfig {
    let mut cfg = ScenarioConfig::reference();
    cfg.ap_count = 10;
    cfg.user_count = 8;
    cfg.antennas = 4;
    cfg.side_m = 500.0;
    cfg.se_targets = PerUser::Uniform(1.0);
    cfg
}

fn irls_trace(backend: &Backend<'_>, gate: &mut Gate) -> Outcome {
    let (mut ok_runs, mut feasible, mut bad) = (0, 0, Vec::new());
    for seed in 0..20u64 {
        let mut cfg = mid_config();
        cfg.seed = bench::drop_seed(0x7ace, seed);
        let scn = Scenario::generate(&cfg).unwrap();
        let targets = targets_of(&cfg);
        let res = match sparsity::irls(backend, &scn, &targets, &IrlsOptions::default()) {
            Ok(r) => r,
            Err(cellfree::Error::GlobalInfeasible) => {
                ok_runs += 1;
                continue;
            }
            Err(e) => {
                bad.push(format!("{seed}: {e}"));
                continue;
            }
        };
        feasible += 1;
        let h = &res.history;
        let monotone = h
            .windows(2)
            .all(|w| w[1].objective <= w[0].objective + TRACE_SLACK * (1.0 + w[0].objective.abs()));
        let nested = h.windows(2).all(|w| w[0].frozen_off.iter().all(|m| w[1].frozen_off.contains(m)));
        let stay_off = res.state.frozen_off.iter().all(|m| res.state.alloc.ap_power(m) == 0.0);
        if monotone && nested && stay_off {
            ok_runs += 1;
        } else {
            bad.push(format!("{seed}: monotone {monotone} nested {nested} off {stay_off}"));
        }
        let sel = sparsity::select_active_by_bisection(backend, &scn, &targets, &sparsity::rank_aps(res.alloc()));
        if let Ok(sel) = sel {
            gate.check(&scn, &targets, &sel.solution.alloc, &sel.solution.active);
        }
    }
    Outcome {
        pass: ok_runs == 20 && feasible > 0,
        detail: format!("{ok_runs}/20 drops clean ({feasible} feasible), problems {bad:?}"),
    }
}

fn ordering_config() -> CampaignConfig {
    CampaignConfig {
        scenario: mid_config(),
        methods: vec![Method::AllOn, Method::Sparsity, Method::Misocp, Method::Oracle],
        base_seed: 0x0de7,
        bnb: BnbOptions {
            abs_gap: 1e-7,
            rel_gap: 1e-10,
            ..BnbOptions::default()
        },
        ..CampaignConfig::reference()
    }
}

fn method_ordering(backend: &Backend<'_>, gate: &mut Gate) -> Outcome {
    let cfg = ordering_config();
    let drops: Vec<DropResult> = (0..10).map(|i| bench::run_drop_with(&cfg, i, backend)).collect();
    gate.check_drops(&cfg, &drops);
    let (mut compared, mut violations) = (0, Vec::new());
    for d in &drops {
        let total = |m| d.record(m).filter(|r| r.succeeded()).and_then(|r| r.total_power_w);
        let (Some(all), Some(sp), Some(mi), Some(or)) =
            (total(Method::AllOn), total(Method::Sparsity), total(Method::Misocp), total(Method::Oracle))
        else {
            continue;
        };
        compared += 1;
        if mi > sp + ORDER_ABS_TOL || sp > all + ORDER_ABS_TOL || (mi - or).abs() > ORACLE_REL_TOL * or {
            violations.push(format!("drop {}: misocp {mi}, sparsity {sp}, all-on {all}, oracle {or}", d.drop_index));
        }
    }
    Outcome {
        pass: violations.is_empty() && compared > 0,
        detail: format!("{compared}/10 drops compared, violations {violations:?}"),
    }
}

fn reference_scale(backend: &Backend<'_>, gate: &mut Gate) -> Outcome {
    let cfg = CampaignConfig::reference();
    let n = 30;
    let drops: Vec<DropResult> = (0..n).map(|i| bench::run_drop_with(&cfg, i, backend)).collect();
    gate.check_drops(&cfg, &drops);
    let summary = bench::summarize(&cfg, &drops);
    let all_on = summary.method(Method::AllOn).unwrap();
    let saving = summary.saving(Method::Sparsity, Method::AllOn).unwrap();
    let total = all_on.total_power_w.mean.unwrap_or(f64::NAN);
    let transmit_short = all_on.transmit_power_w.mean.unwrap_or(f64::NAN);
    let pct = saving.mean_saving_pct.unwrap_or(f64::NAN);

    // All-on transmit power is heavy-tailed, so its mean is taken over a
    // longer run of the cheap baseline on the same drop seeds.
    let n_long = 200;
    let base_cfg = CampaignConfig {
        methods: vec![Method::AllOn],
        ..cfg.clone()
    };
    let extra: Vec<DropResult> = (n..n_long).map(|i| bench::run_drop_with(&base_cfg, i, backend)).collect();
    gate.check_drops(&base_cfg, &extra);
    let long: Vec<f64> = drops
        .iter()
        .chain(&extra)
        .filter_map(|d| d.record(Method::AllOn).filter(|r| r.succeeded())?.transmit_power_w)
        .collect();
    let transmit = long.iter().sum::<f64>() / long.len() as f64;

    let a = (85.0..=120.0).contains(&total);
    let b = pct >= 25.0;
    let c = (0.5..=5.0).contains(&transmit);
    let enough = all_on.completed >= 25 && saving.drops >= 25;
    Outcome {
        pass: a && b && c && enough,
        detail: format!(
            "{} of {n} drops feasible; (a) all-on mean total {total:.2} W [{}], (b) sparsity saving {pct:.1} % over {} drops [{}], (c) all-on mean transmit {transmit:.3} W over {} drops [{}] ({transmit_short:.3} W over the first {n})",
            all_on.completed,
            pf(a),
            saving.drops,
            pf(b),
            long.len(),
            pf(c)
        ),
    }
}

fn pf(b: bool) -> &'static str {
    if b {
        "pass"
    } else {
        "fail"
    }
}

fn determinism() -> Outcome {
    let mut cfg = ordering_config();
    cfg.methods = vec![Method::AllOn, Method::Sparsity, Method::Misocp];
    let run = || {
        let (summary, _) = bench::run_campaign(&cfg, 6, 1).unwrap();
        let dir = tempfile::tempdir().unwrap();
        bench::emit_cdf(&summary, dir.path()).unwrap();
        std::fs::read(dir.path().join(bench::SUMMARY_FILE)).unwrap()
    };
    let (a, b) = (run(), run());
    Outcome {
        pass: a == b && !a.is_empty(),
        detail: format!("summary.json {} bytes, identical: {}", a.len(), a == b),
    }
}

fn main() {
    let recorder = Recorder {
        stats: Mutex::new(CertStats::default()),
    };
    let backend = Backend::new(&recorder);
    let mut gate = Gate::default();
    let mut results = Vec::new();

    let mut run = |id: usize, name: &str, f: &mut dyn FnMut() -> Outcome| {
        let t = Instant::now();
        let o = f();
        let line = report(id, name, &o, t.elapsed().as_secs_f64());
        results.push((id, o.pass, line));
    };
    run(1, "oracle equivalence", &mut || oracle_equivalence(&backend, &mut gate));
    run(2, "closed-form link", &mut || closed_form_link(&backend, &mut gate));
    run(4, "reweighting trace", &mut || irls_trace(&backend, &mut gate));
    run(5, "method ordering", &mut || method_ordering(&backend, &mut gate));
    run(6, "reference-network reproduction", &mut || reference_scale(&backend, &mut gate));
    run(7, "determinism", &mut determinism);
    run(3, "solver certification", &mut || {
        let s = recorder.stats.lock().unwrap();
        Outcome {
            pass: s.violations == 0 && s.optimal > 0,
            detail: format!(
                "{} optimal solves, {} violations, worst primal {:.2e}, dual {:.2e}, gap {:.2e}",
                s.optimal, s.violations, s.worst_primal, s.worst_dual, s.worst_gap
            ),
        }
    });
    run(8, "verifier gate", &mut || Outcome {
        pass: gate.failed == 0 && gate.checked > 0,
        detail: format!(
            "{}/{} allocations pass, worst SINR slack {:.2e}, worst cap slack {:.2e}",
            gate.checked - gate.failed,
            gate.checked,
            gate.worst_sinr,
            gate.worst_cap
        ),
    });
    // 3 and 8 run last because they summarise the other suites
    results.sort_by_key(|r| r.0);
    for (_, _, line) in &results {
        println!("{line}");
    }
    let passed = results.iter().filter(|r| r.1).count();
    println!("{passed}/{} criteria passed", results.len());
    if passed != results.len() {
        std::process::exit(1);
    }
}
