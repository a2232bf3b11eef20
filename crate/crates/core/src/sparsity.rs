//! Low-complexity AP selection: group-sparse reweighting followed by a
//! search over prefixes of the resulting AP ranking.
//!
//! The reweighting step solves a sequence of weighted transmit-power
//! programs whose weights `a_m = (Δp̃/2)(‖ρ_m‖² + ε_n²)^{p̃/2−1}` come from
//! the previous allocation, which drives the per-AP power of weak APs to
//! zero. The ranking by final AP power then feeds
//! [`select_active_by_bisection`].

use serde::{Deserialize, Serialize};

use crate::designer::{self, Backend, FixedSetSolution, ObjectiveMode};
use crate::error::{Error, Result};
use crate::scenario::Scenario;
use crate::semodel::{ActiveSet, PowerAllocation, SinrTargets};

/// `ε_0 = initial_rel·√P_max`, `ε_n = max(factor·ε_{n−1}, floor)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DampingSchedule {
    pub initial_rel: f64,
    pub factor: f64,
    pub floor: f64,
}

impl Default for DampingSchedule {
    fn default() -> Self {
        Self {
            initial_rel: 1e-2,
            factor: 0.5,
            floor: 1e-8,
        }
    }
}

impl DampingSchedule {
    pub fn initial(&self, p_max: f64) -> f64 {
        (self.initial_rel * p_max.sqrt()).max(self.floor)
    }

    pub fn next(&self, eps: f64) -> f64 {
        (eps * self.factor).max(self.floor)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StopRule {
    /// Relative change of the sparsity objective between iterations.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for StopRule {
    fn default() -> Self {
        Self {
            tol: 1e-4,
            max_iter: 50,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IrlsOptions {
    pub p_tilde: f64,
    pub schedule: DampingSchedule,
    pub stop: StopRule,
    /// Remove APs whose power falls below `zero_threshold·P_max`.
    pub freeze: bool,
    pub zero_threshold: f64,
}

impl Default for IrlsOptions {
    fn default() -> Self {
        Self {
            p_tilde: 1.0,
            schedule: DampingSchedule::default(),
            stop: StopRule::default(),
            freeze: true,
            zero_threshold: 1e-8,
        }
    }
}

/// `a_m = (Δ·p̃/2)·(‖ρ_m‖² + ε²)^{p̃/2 − 1}` from squared per-AP norms.
pub fn update_weights(rho_norms_sq: &[f64], eps: f64, delta: f64, p_tilde: f64) -> Vec<f64> {
    let exponent = p_tilde / 2.0 - 1.0;
    rho_norms_sq
        .iter()
        .map(|&y| delta * p_tilde / 2.0 * (y.max(0.0) + eps * eps).powf(exponent))
        .collect()
}

/// Squared per-AP norms `‖ρ_m‖² = Σ_k ρ_mk`.
pub fn ap_norms_sq(alloc: &PowerAllocation) -> Vec<f64> {
    (0..alloc.rho.nrows()).map(|m| alloc.ap_power(m)).collect()
}

/// The ℓ_{p̃/2} surrogate of the total power,
/// `(Σ_m (Δ^{2/p̃}‖ρ_m‖²)^{p̃/2} + P_act^{p̃/2})^{2/p̃}`.
pub fn lp_objective(alloc: &PowerAllocation, delta: f64, p_act: f64, p_tilde: f64) -> f64 {
    let half = p_tilde / 2.0;
    let scale = delta.powf(2.0 / p_tilde);
    let inner: f64 = ap_norms_sq(alloc)
        .into_iter()
        .map(|y| (scale * y.max(0.0)).powf(half))
        .sum::<f64>()
        + p_act.powf(half);
    inner.powf(1.0 / half)
}

/// One accepted iterate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrlsTraceRecord {
    pub iteration: usize,
    pub objective: f64,
    pub active_count: usize,
    pub eps: f64,
    pub frozen_off: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrlsState {
    pub iteration: usize,
    /// Weights used for the next solve.
    pub weights: Vec<f64>,
    pub eps: f64,
    pub alloc: PowerAllocation,
    pub objective: f64,
    pub frozen_off: ActiveSet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IrlsStop {
    Converged,
    IterationLimit,
    /// The next solve would have increased the objective; the last accepted
    /// iterate is kept.
    Ascent,
    /// The next solve failed (for example after freezing); the last accepted
    /// iterate is kept.
    SolveFailed,
}

#[derive(Debug, Clone)]
pub struct IrlsResult {
    pub state: IrlsState,
    pub history: Vec<IrlsTraceRecord>,
    pub stop: IrlsStop,
    pub solves: usize,
}

impl IrlsResult {
    pub fn alloc(&self) -> &PowerAllocation {
        &self.state.alloc
    }
}

fn active_count(alloc: &PowerAllocation, threshold: f64) -> usize {
    ap_norms_sq(alloc).iter().filter(|&&y| y >= threshold).count()
}

/// Reweighted group-sparse power minimisation over all APs.
pub fn irls(
    backend: &Backend<'_>,
    scn: &Scenario,
    targets: &SinrTargets,
    opts: &IrlsOptions,
) -> Result<IrlsResult> {
    if !(opts.p_tilde > 0.0 && opts.p_tilde <= 2.0) {
        return Err(Error::InvalidConfig("p_tilde must lie in (0, 2]".into()));
    }
    let m_count = scn.ap_count();
    let cfg = &scn.config;
    let threshold = opts.zero_threshold * cfg.p_max_w;
    let objective = |a: &PowerAllocation| lp_objective(a, cfg.delta, cfg.p_act_w, opts.p_tilde);

    let mut weights = vec![1.0; m_count];
    let first = designer::solve_fixed_set(
        backend,
        scn,
        targets,
        &ActiveSet::all(m_count),
        &ObjectiveMode::WeightedTransmitPower(weights.clone()),
    )?;
    let Some(first) = first.into_solution() else {
        return Err(Error::GlobalInfeasible);
    };
    let mut solves = 1;
    let mut eps = opts.schedule.initial(cfg.p_max_w);
    let mut state = IrlsState {
        iteration: 0,
        objective: objective(&first.alloc),
        alloc: first.alloc,
        weights: weights.clone(),
        eps,
        frozen_off: ActiveSet::empty(),
    };
    let mut history = vec![IrlsTraceRecord {
        iteration: 0,
        objective: state.objective,
        active_count: active_count(&state.alloc, threshold),
        eps,
        frozen_off: Vec::new(),
    }];

    let stop = loop {
        if state.iteration >= opts.stop.max_iter {
            break IrlsStop::IterationLimit;
        }
        let norms = ap_norms_sq(&state.alloc);
        let mut frozen = state.frozen_off.clone();
        if opts.freeze {
            for (m, &y) in norms.iter().enumerate() {
                if y < threshold {
                    frozen.insert(m);
                }
            }
        }
        weights = update_weights(&norms, eps, cfg.delta, opts.p_tilde);
        state.weights = weights.clone();
        let set: ActiveSet = (0..m_count).filter(|&m| !frozen.contains(m)).collect();
        solves += 1;
        let next = designer::solve_fixed_set(
            backend,
            scn,
            targets,
            &set,
            &ObjectiveMode::WeightedTransmitPower(weights.clone()),
        );
        let next = match next {
            Ok(out) => out.into_solution(),
            Err(Error::Solver(status)) => {
                log::debug!("reweighted solve failed with {status:?}");
                None
            }
            Err(e) => return Err(e),
        };
        let Some(next) = next else {
            break IrlsStop::SolveFailed;
        };
        let value = objective(&next.alloc);
        if value > state.objective + 1e-9 * (1.0 + state.objective.abs()) {
            log::debug!(
                "iteration {} would raise the objective from {} to {value}",
                state.iteration + 1,
                state.objective
            );
            break IrlsStop::Ascent;
        }
        let change = (state.objective - value).abs() / state.objective.abs().max(f64::MIN_POSITIVE);
        eps = opts.schedule.next(eps);
        state.iteration += 1;
        state.alloc = next.alloc;
        state.objective = value;
        state.eps = eps;
        state.frozen_off = frozen;
        history.push(IrlsTraceRecord {
            iteration: state.iteration,
            objective: value,
            active_count: active_count(&state.alloc, threshold),
            eps,
            frozen_off: state.frozen_off.to_vec(),
        });
        if change < opts.stop.tol {
            break IrlsStop::Converged;
        }
    };
    Ok(IrlsResult {
        state,
        history,
        stop,
        solves,
    })
}

/// AP indices by decreasing transmit power, ties by index.
pub fn rank_aps(alloc: &PowerAllocation) -> Vec<usize> {
    let norms = ap_norms_sq(alloc);
    let mut order: Vec<usize> = (0..norms.len()).collect();
    order.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]).then(a.cmp(&b)));
    order
}

#[derive(Debug, Clone)]
pub struct BisectionResult {
    pub solution: FixedSetSolution,
    /// Smallest feasible prefix length.
    pub l_min: usize,
    /// Prefix length of the returned set.
    pub l_best: usize,
    /// Every evaluated prefix length with its total power (`None` when
    /// infeasible), in evaluation order.
    pub evaluations: Vec<(usize, Option<f64>)>,
}

/// Searches prefixes of `ranking`: binary search for the shortest feasible
/// prefix, then extends it one AP at a time while the total power strictly
/// drops. The full set is always a candidate as well.
pub fn select_active_by_bisection(
    backend: &Backend<'_>,
    scn: &Scenario,
    targets: &SinrTargets,
    ranking: &[usize],
) -> Result<BisectionResult> {
    let m_count = scn.ap_count();
    let mut sorted = ranking.to_vec();
    sorted.sort_unstable();
    if sorted != (0..m_count).collect::<Vec<_>>() {
        return Err(Error::InvalidConfig("ranking must be a permutation of all APs".into()));
    }
    let mode = ObjectiveMode::TotalPowerEpigraph;
    let mut evaluations = Vec::new();
    let mut solve = |l: usize| -> Result<Option<FixedSetSolution>> {
        let set: ActiveSet = ranking[..l].iter().copied().collect();
        let out = designer::solve_fixed_set(backend, scn, targets, &set, &mode)?.into_solution();
        evaluations.push((l, out.as_ref().map(|s| s.total_power_w)));
        Ok(out)
    };

    if targets.all_zero() {
        let sol = solve(0)?.expect("zero targets are always feasible");
        return Ok(BisectionResult {
            solution: sol,
            l_min: 0,
            l_best: 0,
            evaluations,
        });
    }
    let Some(full) = solve(m_count)? else {
        return Err(Error::GlobalInfeasible);
    };
    let (mut lo, mut hi) = (0, m_count);
    let mut at_hi = full.clone();
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        match solve(mid)? {
            Some(sol) => {
                hi = mid;
                at_hi = sol;
            }
            None => lo = mid,
        }
    }
    let l_min = hi;
    let (mut best, mut l_best) = (at_hi, l_min);
    let mut l = l_min;
    while l + 1 < m_count {
        match solve(l + 1)? {
            Some(sol) if sol.total_power_w < best.total_power_w => {
                best = sol;
                l += 1;
                l_best = l;
            }
            _ => break,
        }
    }
    if full.total_power_w < best.total_power_w {
        best = full;
        l_best = m_count;
    }
    Ok(BisectionResult {
        solution: best,
        l_min,
        l_best,
        evaluations,
    })
}

#[derive(Debug, Clone)]
pub struct SparsityResult {
    pub irls: IrlsResult,
    pub ranking: Vec<usize>,
    pub selection: BisectionResult,
}

impl SparsityResult {
    pub fn solution(&self) -> &FixedSetSolution {
        &self.selection.solution
    }
}

/// Reweighting, ranking and prefix search in sequence.
pub fn run_sparsity_pipeline(
    backend: &Backend<'_>,
    scn: &Scenario,
    targets: &SinrTargets,
    opts: &IrlsOptions,
) -> Result<SparsityResult> {
    if targets.all_zero() {
        let ranking: Vec<usize> = (0..scn.ap_count()).collect();
        let selection = select_active_by_bisection(backend, scn, targets, &ranking)?;
        let alloc = selection.solution.alloc.clone();
        let irls = IrlsResult {
            state: IrlsState {
                iteration: 0,
                weights: vec![1.0; scn.ap_count()],
                eps: opts.schedule.initial(scn.config.p_max_w),
                objective: lp_objective(&alloc, scn.config.delta, scn.config.p_act_w, opts.p_tilde),
                alloc,
                frozen_off: ActiveSet::empty(),
            },
            history: Vec::new(),
            stop: IrlsStop::Converged,
            solves: 0,
        };
        return Ok(SparsityResult {
            irls,
            ranking,
            selection,
        });
    }
    let irls = irls(backend, scn, targets, opts)?;
    let ranking = rank_aps(irls.alloc());
    let selection = select_active_by_bisection(backend, scn, targets, &ranking)?;
    Ok(SparsityResult {
        irls,
        ranking,
        selection,
    })
}
