//! Globally optimal AP selection by branch-and-bound over activity flags.
//!
//! Each node fixes some APs on, some off and leaves the rest free with a
//! continuous flag `α_m ∈ [0, 1]`. The relaxation replaces the per-AP cap by
//! `‖u'_m‖ ≤ α_m √P_max` and the activation cost by `α_m √P_act` inside the
//! epigraph norm, so its optimum bounds every completion of the node from
//! below.
//!
//! Node evaluation is sequential, so results are deterministic for a given
//! scenario and options.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use serde::{Deserialize, Serialize};

use crate::conic::{AffineRow, ConicProgram, SolveStatus};
use crate::designer::{self, Backend, FixedSetOutcome, FixedSetSolution, ObjectiveMode};
use crate::error::{Error, Result};
use crate::scenario::Scenario;
use crate::semodel::{self, ActiveSet, FeasibilityReport, PowerAllocation, SinrTargets};

/// Largest AP count the exhaustive oracle accepts by default.
pub const ORACLE_CAP: usize = 12;
/// Relaxed flags this close to 0 or 1 count as integral.
const INTEGRALITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum RelaxationForm {
    /// `α_m √P_act` inside the epigraph norm (bound term `α²P_act`).
    #[default]
    Epigraph,
    /// Linear activation cost `P_act Σ α_m` with a rotated-cone bound on the
    /// transmit term. Never weaker than [`RelaxationForm::Epigraph`].
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BnbOptions {
    pub abs_gap: f64,
    pub rel_gap: f64,
    pub node_limit: usize,
    pub relaxation: RelaxationForm,
    pub rounding: bool,
}

impl Default for BnbOptions {
    fn default() -> Self {
        Self {
            abs_gap: 1e-6,
            rel_gap: 1e-6,
            node_limit: 100_000,
            relaxation: RelaxationForm::Epigraph,
            rounding: true,
        }
    }
}

impl BnbOptions {
    fn closed(&self, bound: f64, incumbent: f64) -> bool {
        incumbent - bound <= self.abs_gap.max(self.rel_gap * incumbent.abs())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BnbNode {
    pub fixed_on: ActiveSet,
    pub fixed_off: ActiveSet,
    pub depth: usize,
}

/// A node with the bound inherited from its parent, ordered for a min-heap.
#[derive(Debug, Clone)]
struct OpenNode {
    node: BnbNode,
    lower_bound: f64,
    seq: usize,
}

impl PartialEq for OpenNode {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for OpenNode {}

impl PartialOrd for OpenNode {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OpenNode {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .lower_bound
            .total_cmp(&self.lower_bound)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

impl BnbNode {
    pub fn root() -> Self {
        Self {
            fixed_on: ActiveSet::empty(),
            fixed_off: ActiveSet::empty(),
            depth: 0,
        }
    }

    pub fn free(&self, m: usize) -> Vec<usize> {
        (0..m)
            .filter(|&i| !self.fixed_on.contains(i) && !self.fixed_off.contains(i))
            .collect()
    }

    fn child(&self, ap: usize, on: bool) -> Self {
        let mut c = self.clone();
        if on {
            c.fixed_on.insert(ap);
        } else {
            c.fixed_off.insert(ap);
        }
        c.depth += 1;
        c
    }
}

/// Relaxation of one node.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeRelaxation {
    /// Lower bound on the total power of every completion, in watts.
    pub lower_bound: f64,
    /// Flags of all M APs (1 for fixed-on, 0 for fixed-off).
    pub alpha: Vec<f64>,
    /// Relaxed transmit power of every AP.
    pub ap_power: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RelaxOutcome {
    Bound(NodeRelaxation),
    Infeasible,
}

/// Solves the continuous relaxation of `node`.
pub fn relax_node(
    backend: &Backend<'_>,
    node: &BnbNode,
    scn: &Scenario,
    targets: &SinrTargets,
    form: RelaxationForm,
) -> Result<RelaxOutcome> {
    let (m_count, k_count) = (scn.ap_count(), scn.user_count());
    node.fixed_on.check_range(m_count)?;
    node.fixed_off.check_range(m_count)?;
    if node.fixed_on.iter().any(|m| node.fixed_off.contains(m)) {
        return Err(Error::InvalidConfig("AP fixed both on and off".into()));
    }
    if targets.nu.len() != k_count {
        return Err(Error::ShapeMismatch("target count differs from user count".into()));
    }
    let aps: Vec<usize> = (0..m_count).filter(|&m| !node.fixed_off.contains(m)).collect();
    let free: Vec<usize> = node.free(m_count);
    if aps.is_empty() {
        return Ok(if targets.all_zero() {
            RelaxOutcome::Bound(NodeRelaxation {
                lower_bound: 0.0,
                alpha: vec![0.0; m_count],
                ap_power: vec![0.0; m_count],
            })
        } else {
            RelaxOutcome::Infeasible
        });
    }

    let na = aps.len();
    let q0 = na * k_count;
    let alpha0 = q0 + na;
    let alpha_of = |m: usize| free.iter().position(|&f| f == m).map(|i| alpha0 + i);
    let s = alpha0 + free.len();
    let mut prog = ConicProgram::new(s + 1);
    prog.set_objective(s, 1.0);

    let delta = scn.config.delta;
    let p_act = scn.config.p_act_w;
    let on_cost = node.fixed_on.len() as f64 * p_act;
    match form {
        RelaxationForm::Epigraph => {
            let mut epi = vec![AffineRow::var(s, 1.0)];
            epi.extend((0..na).map(|a| AffineRow::var(q0 + a, delta.sqrt())));
            epi.extend((0..free.len()).map(|i| AffineRow::var(alpha0 + i, p_act.sqrt())));
            if on_cost > 0.0 {
                epi.push(AffineRow::constant(on_cost.sqrt()));
            }
            prog.add_soc("epigraph", epi)?;
        }
        RelaxationForm::Linear => {
            // s ≥ Δ‖q‖² via ‖(2√Δ q, s − 1)‖ ≤ s + 1; objective s + P_act Σα
            for i in 0..free.len() {
                prog.set_objective(alpha0 + i, p_act);
            }
            let mut rot = vec![AffineRow::var(s, 1.0).plus(1.0), AffineRow::var(s, 1.0).plus(-1.0)];
            rot.extend((0..na).map(|a| AffineRow::var(q0 + a, 2.0 * delta.sqrt())));
            prog.add_soc("transmit", rot)?;
        }
    }
    designer::add_aggregated_cones(&mut prog, scn, &aps, &targets.nu, q0)?;
    let p_max_root = scn.config.p_max_w.sqrt();
    let cap = aps
        .iter()
        .enumerate()
        .map(|(a, &m)| match alpha_of(m) {
            Some(j) => AffineRow::terms(vec![(j, p_max_root), (q0 + a, -1.0)]),
            None => AffineRow::var(q0 + a, -1.0).plus(p_max_root),
        })
        .collect();
    prog.add_nonneg("cap", cap)?;
    if !free.is_empty() {
        let bounds = (0..free.len())
            .flat_map(|i| {
                [
                    AffineRow::var(alpha0 + i, 1.0),
                    AffineRow::var(alpha0 + i, -1.0).plus(1.0),
                ]
            })
            .collect();
        prog.add_nonneg("alpha_box", bounds)?;
    }

    let sol = backend.run(&prog);
    match sol.status {
        SolveStatus::Optimal => {}
        SolveStatus::Infeasible => return Ok(RelaxOutcome::Infeasible),
        other => return Err(Error::Solver(other)),
    }
    let dual = sol.dual_objective.max(0.0);
    let lower_bound = match form {
        RelaxationForm::Epigraph => dual * dual,
        RelaxationForm::Linear => dual + on_cost,
    };
    let mut alpha = vec![0.0; m_count];
    let mut ap_power = vec![0.0; m_count];
    for (a, &m) in aps.iter().enumerate() {
        alpha[m] = alpha_of(m).map_or(1.0, |j| sol.x[j].clamp(0.0, 1.0));
        ap_power[m] = (0..k_count).map(|k| sol.x[a * k_count + k].max(0.0).powi(2)).sum();
    }
    Ok(RelaxOutcome::Bound(NodeRelaxation {
        lower_bound,
        alpha,
        ap_power,
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BnbStatus {
    Optimal,
    /// Node budget exhausted; the incumbent is returned with its gap.
    NodeLimit,
}

#[derive(Debug, Clone)]
pub struct BnbResult {
    pub status: BnbStatus,
    pub active: ActiveSet,
    pub alloc: PowerAllocation,
    pub total_power_w: f64,
    pub transmit_power_w: f64,
    pub nodes_explored: usize,
    pub relaxations_solved: usize,
    pub fixed_set_solves: usize,
    /// Incumbent minus the smallest open bound (zero once the tree is empty).
    pub proof_gap: f64,
    pub report: FeasibilityReport,
}

impl BnbResult {
    fn from_solution(sol: FixedSetSolution, status: BnbStatus) -> Self {
        Self {
            status,
            active: sol.active,
            alloc: sol.alloc,
            total_power_w: sol.total_power_w,
            transmit_power_w: sol.transmit_power_w,
            nodes_explored: 0,
            relaxations_solved: 0,
            fixed_set_solves: 0,
            proof_gap: 0.0,
            report: sol.report,
        }
    }
}

/// What happened at a node, for the optional trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeDecision {
    Infeasible,
    PrunedByBound,
    Integral,
    Branched,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub node: usize,
    pub depth: usize,
    pub bound: Option<f64>,
    pub incumbent: f64,
    pub branch_ap: Option<usize>,
    pub decision: NodeDecision,
}

struct Search<'a, 'b> {
    backend: &'a Backend<'b>,
    scn: &'a Scenario,
    targets: &'a SinrTargets,
    mode: ObjectiveMode,
    incumbent: FixedSetSolution,
    /// Total power of every set solved so far, `None` when infeasible.
    seen: HashMap<ActiveSet, Option<f64>>,
    fixed_set_solves: usize,
}

impl Search<'_, '_> {
    /// Fixed-set solve of `set` (cached), updating the incumbent.
    fn evaluate(&mut self, set: ActiveSet) -> Result<Option<f64>> {
        if let Some(&v) = self.seen.get(&set) {
            return Ok(v);
        }
        if set.is_empty() && !self.targets.all_zero() {
            return Ok(None);
        }
        self.fixed_set_solves += 1;
        let out = designer::solve_fixed_set(self.backend, self.scn, self.targets, &set, &self.mode)?;
        let value = out.into_solution().map(|sol| {
            let value = sol.total_power_w;
            if value < self.incumbent.total_power_w {
                log::debug!("incumbent {value:.6} W with {} APs", sol.active.len());
                self.incumbent = sol;
            }
            value
        });
        self.seen.insert(set, value);
        Ok(value)
    }

    /// Rounds at 0.5, then adds APs by descending relaxed power until the
    /// set is feasible.
    fn round(&mut self, node: &BnbNode, relax: &NodeRelaxation) -> Result<()> {
        let m_count = self.scn.ap_count();
        let mut set: ActiveSet = (0..m_count)
            .filter(|&m| !node.fixed_off.contains(m) && relax.alpha[m] >= 0.5)
            .collect();
        let mut rest: Vec<usize> = node
            .free(m_count)
            .into_iter()
            .filter(|&m| !set.contains(m))
            .collect();
        rest.sort_by(|&a, &b| relax.ap_power[b].total_cmp(&relax.ap_power[a]).then(a.cmp(&b)));
        let mut rest = rest.into_iter();
        loop {
            let feasible = match self.evaluate(set.clone()) {
                Ok(v) => v.is_some(),
                Err(Error::Solver(status)) => {
                    log::debug!("rounding solve failed with {status:?}");
                    self.seen.insert(set.clone(), None);
                    false
                }
                Err(e) => return Err(e),
            };
            match rest.next() {
                Some(m) if !feasible => {
                    set.insert(m);
                }
                _ => return Ok(()),
            }
        }
    }
}

/// Exact minimum-total-power AP selection.
pub fn solve_misocp(
    backend: &Backend<'_>,
    scn: &Scenario,
    targets: &SinrTargets,
    opts: &BnbOptions,
) -> Result<BnbResult> {
    solve_misocp_traced(backend, scn, targets, opts, &mut |_| {})
}

/// [`solve_misocp`] reporting every processed node to `trace`.
pub fn solve_misocp_traced(
    backend: &Backend<'_>,
    scn: &Scenario,
    targets: &SinrTargets,
    opts: &BnbOptions,
    trace: &mut dyn FnMut(&TraceRecord),
) -> Result<BnbResult> {
    let m_count = scn.ap_count();
    let mode = ObjectiveMode::TotalPowerEpigraph;
    if targets.all_zero() {
        let sol = designer::solve_fixed_set(backend, scn, targets, &ActiveSet::empty(), &mode)?
            .into_solution()
            .expect("zero targets are always feasible");
        let mut res = BnbResult::from_solution(sol, BnbStatus::Optimal);
        res.nodes_explored = 1;
        trace(&TraceRecord {
            node: 0,
            depth: 0,
            bound: Some(0.0),
            incumbent: 0.0,
            branch_ap: None,
            decision: NodeDecision::Integral,
        });
        return Ok(res);
    }

    let all = ActiveSet::all(m_count);
    let first = designer::solve_fixed_set(backend, scn, targets, &all, &mode)?;
    let Some(incumbent) = first.into_solution() else {
        return Err(Error::GlobalInfeasible);
    };
    let first_value = incumbent.total_power_w;
    let mut search = Search {
        backend,
        scn,
        targets,
        mode,
        incumbent,
        seen: HashMap::from([(all, Some(first_value))]),
        fixed_set_solves: 1,
    };

    let mut heap = BinaryHeap::new();
    let mut dive: Vec<OpenNode> = Vec::new();
    let mut seq = 0;
    dive.push(OpenNode {
        node: BnbNode::root(),
        lower_bound: 0.0,
        seq,
    });
    let mut nodes = 0;
    let mut relaxations = 0;
    let mut status = BnbStatus::Optimal;

    loop {
        let open = match dive.pop() {
            Some(n) => n,
            None => match heap.pop() {
                Some(n) => n,
                None => break,
            },
        };
        let best_val = search.incumbent.total_power_w;
        if opts.closed(open.lower_bound, best_val) {
            continue;
        }
        if nodes >= opts.node_limit {
            // put it back so the gap accounts for it
            heap.push(open);
            status = BnbStatus::NodeLimit;
            break;
        }
        let id = nodes;
        nodes += 1;
        let node = open.node;
        relaxations += 1;
        let relax = match relax_node(backend, &node, scn, targets, opts.relaxation)? {
            RelaxOutcome::Infeasible => {
                trace(&TraceRecord {
                    node: id,
                    depth: node.depth,
                    bound: None,
                    incumbent: best_val,
                    branch_ap: None,
                    decision: NodeDecision::Infeasible,
                });
                continue;
            }
            RelaxOutcome::Bound(r) => r,
        };
        let bound = relax.lower_bound.max(open.lower_bound);
        let mut record = TraceRecord {
            node: id,
            depth: node.depth,
            bound: Some(bound),
            incumbent: best_val,
            branch_ap: None,
            decision: NodeDecision::PrunedByBound,
        };
        if opts.closed(bound, best_val) {
            trace(&record);
            continue;
        }

        let free = node.free(m_count);
        let fractional = free
            .iter()
            .copied()
            .filter(|&m| relax.alpha[m] > INTEGRALITY_TOL && relax.alpha[m] < 1.0 - INTEGRALITY_TOL)
            .max_by(|&a, &b| {
                let fa = 0.5 - (relax.alpha[a] - 0.5).abs();
                let fb = 0.5 - (relax.alpha[b] - 0.5).abs();
                fa.total_cmp(&fb)
                    .then(relax.ap_power[a].total_cmp(&relax.ap_power[b]))
                    .then(b.cmp(&a))
            });
        let Some(ap) = fractional else {
            // integral flags: the relaxation is the fixed-set problem of this set
            let set: ActiveSet = (0..m_count)
                .filter(|&m| relax.alpha[m] >= 0.5 && !node.fixed_off.contains(m))
                .collect();
            search.evaluate(set)?;
            record.decision = NodeDecision::Integral;
            record.incumbent = search.incumbent.total_power_w;
            trace(&record);
            continue;
        };
        if opts.rounding {
            search.round(&node, &relax)?;
        }
        record.decision = NodeDecision::Branched;
        record.branch_ap = Some(ap);
        record.incumbent = search.incumbent.total_power_w;
        trace(&record);

        let on_first = relax.alpha[ap] >= 0.5;
        let mut open_child = |on: bool| {
            seq += 1;
            OpenNode {
                node: node.child(ap, on),
                lower_bound: bound,
                seq,
            }
        };
        let now = open_child(on_first);
        heap.push(open_child(!on_first));
        dive.push(now);
    }

    let best_open = dive
        .iter()
        .chain(heap.iter())
        .map(|n| n.lower_bound)
        .fold(f64::INFINITY, f64::min);
    let value = search.incumbent.total_power_w;
    let proof_gap = if best_open.is_finite() {
        (value - best_open).max(0.0)
    } else {
        0.0
    };
    let fixed_set_solves = search.fixed_set_solves;
    let mut res = BnbResult::from_solution(search.incumbent, status);
    res.nodes_explored = nodes;
    res.relaxations_solved = relaxations;
    res.fixed_set_solves = fixed_set_solves;
    res.proof_gap = proof_gap;
    Ok(res)
}

/// Enumerates every non-empty AP subset (and the empty one when no user has
/// a target) and keeps the cheapest feasible fixed-set solution.
pub fn exhaustive_oracle(
    backend: &Backend<'_>,
    scn: &Scenario,
    targets: &SinrTargets,
    cap: usize,
) -> Result<BnbResult> {
    let m_count = scn.ap_count();
    if m_count > cap || m_count >= 64 {
        return Err(Error::CapExceeded { m: m_count, cap });
    }
    let mode = ObjectiveMode::TotalPowerEpigraph;
    let first = if targets.all_zero() { 0u64 } else { 1 };
    let mut best: Option<FixedSetSolution> = None;
    let mut solves = 0;
    for mask in first..(1u64 << m_count) {
        let set = ActiveSet::from_mask(mask, m_count);
        solves += 1;
        let out = designer::solve_fixed_set(backend, scn, targets, &set, &mode)?;
        if let FixedSetOutcome::Solved(sol) = out {
            if best.as_ref().is_none_or(|b| sol.total_power_w < b.total_power_w) {
                best = Some(*sol);
            }
        }
    }
    let best = best.ok_or(Error::GlobalInfeasible)?;
    let mut res = BnbResult::from_solution(best, BnbStatus::Optimal);
    res.fixed_set_solves = solves;
    Ok(res)
}

/// Total power recomputed from an allocation, for cross-checks.
pub fn recomputed_total(res: &BnbResult, scn: &Scenario) -> f64 {
    semodel::total_power(&res.alloc, &res.active, scn.config.delta, scn.config.p_act_w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{PerUser, ScenarioConfig};
    use ndarray::Array2;

    fn small(seed: u64, m: usize, k: usize, xi: f64) -> (Scenario, SinrTargets) {
        let mut c = ScenarioConfig::reference();
        c.ap_count = m;
        c.user_count = k;
        c.tau_p = k.min(2);
        c.antennas = 4;
        c.side_m = 300.0;
        c.min_ap_dist_m = 20.0;
        c.se_targets = PerUser::Uniform(xi);
        c.seed = seed;
        let scn = Scenario::generate(&c).unwrap();
        let t = semodel::se_target_to_sinr(&c.se_target_vec(), c.tau_c, c.tau_p).unwrap();
        (scn, t)
    }

    #[test]
    fn zero_targets_need_one_node() {
        let (scn, _) = small(1, 4, 2, 1.0);
        let t = SinrTargets { nu: vec![0.0; 2] };
        let r = solve_misocp(&Backend::default(), &scn, &t, &BnbOptions::default()).unwrap();
        assert!(r.active.is_empty());
        assert_eq!(r.total_power_w, 0.0);
        assert_eq!(r.nodes_explored, 1);
        let o = exhaustive_oracle(&Backend::default(), &scn, &t, ORACLE_CAP).unwrap();
        assert_eq!(o.total_power_w, 0.0);
    }

    #[test]
    fn oracle_counts_subsets() {
        let (scn, t) = small(2, 3, 2, 0.5);
        let o = exhaustive_oracle(&Backend::default(), &scn, &t, ORACLE_CAP).unwrap();
        assert_eq!(o.fixed_set_solves, 7);
        let (scn1, t1) = small(2, 1, 1, 0.5);
        if let Ok(o) = exhaustive_oracle(&Backend::default(), &scn1, &t1, ORACLE_CAP) {
            assert_eq!(o.fixed_set_solves, 1);
        }
        assert!(matches!(
            exhaustive_oracle(&Backend::default(), &scn, &t, 2),
            Err(Error::CapExceeded { m: 3, cap: 2 })
        ));
    }

    #[test]
    fn strong_ap_alone_when_activation_dominates() {
        let mut c = ScenarioConfig::reference();
        c.ap_count = 2;
        c.user_count = 1;
        c.tau_p = 1;
        c.antennas = 4;
        let beta = Array2::from_shape_vec((2, 1), vec![1e-9, 1e-11]).unwrap();
        let scn = Scenario::from_parts(c, vec![], vec![], beta, vec![vec![0]]).unwrap();
        let t = SinrTargets { nu: vec![1.0] };
        let b = Backend::default();
        let r = solve_misocp(&b, &scn, &t, &BnbOptions::default()).unwrap();
        assert_eq!(r.active.to_vec(), vec![0]);
        let mode = ObjectiveMode::TotalPowerEpigraph;
        let mut best = f64::INFINITY;
        for set in [vec![0], vec![1], vec![0, 1]] {
            let set: ActiveSet = set.into_iter().collect();
            if let Some(s) = designer::solve_fixed_set(&b, &scn, &t, &set, &mode)
                .unwrap()
                .into_solution()
            {
                best = best.min(s.total_power_w);
            }
        }
        assert!((r.total_power_w - best).abs() <= 1e-6 * best);
    }

    #[test]
    fn matches_oracle_and_brackets_root_bound() {
        let b = Backend::default();
        for seed in 0..4 {
            let (scn, t) = small(seed, 5, 3, 1.0);
            let Ok(o) = exhaustive_oracle(&b, &scn, &t, ORACLE_CAP) else {
                continue;
            };
            for form in [RelaxationForm::Epigraph, RelaxationForm::Linear] {
                let opts = BnbOptions {
                    relaxation: form,
                    ..Default::default()
                };
                let r = solve_misocp(&b, &scn, &t, &opts).unwrap();
                assert_eq!(r.status, BnbStatus::Optimal);
                assert!(
                    (r.total_power_w - o.total_power_w).abs() <= 1e-5 * o.total_power_w,
                    "seed {seed} {form:?}: {} vs {}",
                    r.total_power_w,
                    o.total_power_w
                );
                assert!(r.report.feasible);
                assert!((recomputed_total(&r, &scn) - r.total_power_w).abs() < 1e-9);
                let RelaxOutcome::Bound(root) = relax_node(&b, &BnbNode::root(), &scn, &t, form).unwrap()
                else {
                    panic!("root relaxation infeasible");
                };
                assert!(root.lower_bound <= o.total_power_w * (1.0 + 1e-7));
            }
        }
    }

    #[test]
    fn leaf_relaxation_equals_fixed_set() {
        let (scn, t) = small(5, 4, 2, 1.0);
        let b = Backend::default();
        let node = BnbNode {
            fixed_on: ActiveSet::all(4),
            fixed_off: ActiveSet::empty(),
            depth: 4,
        };
        let set = ActiveSet::all(4);
        let fixed = designer::solve_fixed_set(&b, &scn, &t, &set, &ObjectiveMode::TotalPowerEpigraph)
            .unwrap();
        match (relax_node(&b, &node, &scn, &t, RelaxationForm::Epigraph).unwrap(), fixed) {
            (RelaxOutcome::Bound(r), FixedSetOutcome::Solved(s)) => {
                assert!((r.lower_bound - s.total_power_w).abs() <= 1e-7 * s.total_power_w);
            }
            (RelaxOutcome::Infeasible, FixedSetOutcome::Infeasible { .. }) => {}
            _ => panic!("relaxation and fixed-set solve disagree"),
        }
    }

    #[test]
    fn global_infeasibility_is_reported() {
        let (scn, _) = small(3, 3, 2, 1.0);
        let t = SinrTargets { nu: vec![1e6, 1e6] };
        assert!(matches!(
            solve_misocp(&Backend::default(), &scn, &t, &BnbOptions::default()),
            Err(Error::GlobalInfeasible)
        ));
        assert!(matches!(
            exhaustive_oracle(&Backend::default(), &scn, &t, ORACLE_CAP),
            Err(Error::GlobalInfeasible)
        ));
    }

    #[test]
    fn node_ordering_is_best_bound() {
        let mut heap = BinaryHeap::new();
        for (i, b) in [3.0, 1.0, 2.0].into_iter().enumerate() {
            heap.push(OpenNode {
                node: BnbNode::root(),
                lower_bound: b,
                seq: i,
            });
        }
        assert_eq!(heap.pop().unwrap().lower_bound, 1.0);
        assert_eq!(heap.pop().unwrap().lower_bound, 2.0);
    }
}
