//! Fixed-active-set power allocation as a second-order cone program.
//!
//! With `u_mk = √ρ_mk`, `g_k = (√(N γ_mk))_{m∈A}` and `z_k = (√β_mk)_{m∈A}`,
//! the SINR target of user k is the cone constraint `‖s_k‖ ≤ g_kᵀ u_k` where
//!
//! ```text
//! s_k = √ν_k · ( g_kᵀu_t  for t ∈ P_k∖{k},   ‖z_k ∘ u_k'‖ for all k',   σ )
//! ```
//!
//! and the total power is `‖r‖²` with `r = (√Δ·vec(U), √P_act·1_{|A|})`.
//!
//! Two equivalent encodings are built:
//!
//! * [`Formulation::Aggregated`] introduces one norm bound `q_m ≥ ‖u'_m‖` per
//!   AP. The non-coherent part of `‖s_k‖²` is `Σ_m β_mk ‖u'_m‖²`, so each
//!   user cone only touches its own column, its co-pilot columns and `q`.
//! * [`Formulation::Literal`] keeps the vectors above, with one auxiliary
//!   scalar per `‖z_k ∘ u_k'‖` term.
//!
//! Both give the same optimum; the aggregated one is the default because its
//! Newton systems are much sparser.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::conic::{AffineRow, ConicProgram, ConicSolution, ConicSolver, InteriorPoint, SolveStatus, SolverOptions};
use crate::error::{Error, Result};
use crate::scenario::Scenario;
use crate::semodel::{self, ActiveSet, FeasibilityReport, PowerAllocation, SinrTargets};

/// What the program minimises.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ObjectiveMode {
    /// `s ≥ ‖r‖`, i.e. the square root of the total power.
    TotalPowerEpigraph,
    /// `Σ_m a_m ‖u'_m‖²`, one weight per AP (indexed over all M APs).
    WeightedTransmitPower(Vec<f64>),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Formulation {
    #[default]
    Aggregated,
    Literal,
}

/// Solver, its options and the encoding used for every fixed-set solve.
///
/// Solves run with `options` first. The activation constant dominates the
/// epigraph value, so powers are only recovered to about `gap·s/Δ`; the
/// default therefore asks for a tight gap and retries with `fallback` when
/// the solver stalls before reaching it.
#[derive(Clone, Copy)]
pub struct Backend<'a> {
    pub solver: &'a dyn ConicSolver,
    pub options: SolverOptions,
    pub fallback: Option<SolverOptions>,
    pub formulation: Formulation,
}

/// Tolerances of the first attempt of every fixed-set solve.
pub const TIGHT_OPTIONS: SolverOptions = SolverOptions {
    feas_tol: 1e-9,
    gap_tol: 1e-12,
    max_iter: 200,
};

static DEFAULT_SOLVER: InteriorPoint = InteriorPoint;

impl Default for Backend<'static> {
    fn default() -> Self {
        Backend::new(&DEFAULT_SOLVER)
    }
}

impl<'a> Backend<'a> {
    pub fn new(solver: &'a dyn ConicSolver) -> Self {
        Self {
            solver,
            options: TIGHT_OPTIONS,
            fallback: Some(SolverOptions::default()),
            formulation: Formulation::Aggregated,
        }
    }

    /// Runs the solver, retrying with the fallback options on a stall.
    pub fn run(&self, prog: &ConicProgram) -> ConicSolution {
        let sol = self.solver.solve(prog, &self.options);
        match (sol.status, self.fallback) {
            (SolveStatus::IterLimit | SolveStatus::NumericalTrouble, Some(opts)) => {
                log::debug!("retrying with relaxed tolerances after {:?}", sol.status);
                self.solver.solve(prog, &opts)
            }
            _ => sol,
        }
    }

    pub fn with_formulation(mut self, formulation: Formulation) -> Self {
        self.formulation = formulation;
        self
    }
}

/// A built fixed-set program and the map back to powers.
#[derive(Debug, Clone)]
pub struct SocpFixedSetInstance {
    /// Active APs in increasing order; local index `a` refers to `aps[a]`.
    pub aps: Vec<usize>,
    pub user_count: usize,
    pub nu: Vec<f64>,
    /// `g[[a, k]] = √(N γ_{aps[a] k})`.
    pub g: Array2<f64>,
    /// `z[[a, k]] = √β_{aps[a] k}`.
    pub z: Array2<f64>,
    pub sigma: f64,
    pub mode: ObjectiveMode,
    pub formulation: Formulation,
    /// Positive factor the weighted objective was divided by.
    pub weight_scale: f64,
    pub program: ConicProgram,
    /// Index of the epigraph variable `s`.
    pub s_index: usize,
}

impl SocpFixedSetInstance {
    /// Column of `u_{aps[a], k}`.
    pub fn u_index(&self, a: usize, k: usize) -> usize {
        a * self.user_count + k
    }

    /// `ρ_mk = u_mk²` on the active rows, zero elsewhere.
    pub fn allocation(&self, x: &[f64], ap_count: usize) -> PowerAllocation {
        let mut alloc = PowerAllocation::zeros(ap_count, self.user_count);
        for (a, &m) in self.aps.iter().enumerate() {
            for k in 0..self.user_count {
                let u = x[self.u_index(a, k)].max(0.0);
                alloc.rho[[m, k]] = u * u;
            }
        }
        alloc
    }
}

fn check_mode(mode: &ObjectiveMode, m: usize) -> Result<()> {
    if let ObjectiveMode::WeightedTransmitPower(w) = mode {
        if w.len() != m {
            return Err(Error::ShapeMismatch(format!(
                "{} weights for {m} APs",
                w.len()
            )));
        }
        if w.iter().any(|&a| !(a > 0.0) || !a.is_finite()) {
            return Err(Error::InvalidConfig("AP weights must be positive and finite".into()));
        }
    }
    Ok(())
}

/// Builds the fixed-set program with the chosen encoding.
pub fn build_instance(
    scn: &Scenario,
    targets: &SinrTargets,
    active: &ActiveSet,
    mode: &ObjectiveMode,
    formulation: Formulation,
) -> Result<SocpFixedSetInstance> {
    let (m_count, k_count) = (scn.ap_count(), scn.user_count());
    active.check_range(m_count)?;
    if targets.nu.len() != k_count {
        return Err(Error::ShapeMismatch("target count differs from user count".into()));
    }
    if targets.nu.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
        return Err(Error::InvalidConfig("SINR targets must be finite and non-negative".into()));
    }
    check_mode(mode, m_count)?;
    if active.is_empty() && !targets.all_zero() {
        return Err(Error::EmptyActiveSet);
    }
    let aps = active.to_vec();
    let n_ant = scn.config.antennas as f64;
    let g = Array2::from_shape_fn((aps.len(), k_count), |(a, k)| {
        (n_ant * scn.gamma[[aps[a], k]]).sqrt()
    });
    let z = Array2::from_shape_fn((aps.len(), k_count), |(a, k)| scn.beta[[aps[a], k]].sqrt());
    let weight_scale = match mode {
        ObjectiveMode::TotalPowerEpigraph => 1.0,
        ObjectiveMode::WeightedTransmitPower(w) => aps
            .iter()
            .map(|&m| w[m])
            .fold(f64::INFINITY, f64::min)
            .min(f64::MAX),
    };
    let mut inst = SocpFixedSetInstance {
        aps,
        user_count: k_count,
        nu: targets.nu.clone(),
        g,
        z,
        sigma: scn.config.noise_w.sqrt(),
        mode: mode.clone(),
        formulation,
        weight_scale,
        program: ConicProgram::new(0),
        s_index: 0,
    };
    match formulation {
        Formulation::Aggregated => build_aggregated(&mut inst, scn)?,
        Formulation::Literal => build_literal(&mut inst, scn)?,
    }
    Ok(inst)
}

/// The fixed-set program in the default encoding.
pub fn build_fixed_set_socp(
    scn: &Scenario,
    targets: &SinrTargets,
    active: &ActiveSet,
    mode: &ObjectiveMode,
) -> Result<ConicProgram> {
    Ok(build_instance(scn, targets, active, mode, Formulation::default())?.program)
}

/// Coefficients of `√(a_m / scale)` (weighted) or `√Δ` (epigraph) per AP.
fn epigraph_weights(inst: &SocpFixedSetInstance, delta: f64) -> Vec<f64> {
    match &inst.mode {
        ObjectiveMode::TotalPowerEpigraph => vec![delta.sqrt(); inst.aps.len()],
        ObjectiveMode::WeightedTransmitPower(w) => inst
            .aps
            .iter()
            .map(|&m| (w[m] / inst.weight_scale).sqrt())
            .collect(),
    }
}

fn activation_row(inst: &SocpFixedSetInstance, p_act: f64) -> Option<AffineRow> {
    match inst.mode {
        ObjectiveMode::TotalPowerEpigraph if p_act > 0.0 && !inst.aps.is_empty() => Some(
            AffineRow::constant((inst.aps.len() as f64 * p_act).sqrt()),
        ),
        _ => None,
    }
}

fn build_aggregated(inst: &mut SocpFixedSetInstance, scn: &Scenario) -> Result<()> {
    let (na, k_count) = (inst.aps.len(), inst.user_count);
    let q0 = na * k_count;
    let s = q0 + na;
    let mut prog = ConicProgram::new(s + 1);
    prog.set_objective(s, 1.0);

    let coef = epigraph_weights(inst, scn.config.delta);
    let mut epi = vec![AffineRow::var(s, 1.0)];
    epi.extend((0..na).map(|a| AffineRow::var(q0 + a, coef[a])));
    epi.extend(activation_row(inst, scn.config.p_act_w));
    prog.add_soc("epigraph", epi)?;

    add_aggregated_cones(&mut prog, scn, &inst.aps, &inst.nu, q0)?;
    if na > 0 {
        let p_max_root = scn.config.p_max_w.sqrt();
        prog.add_nonneg(
            "cap",
            (0..na)
                .map(|a| AffineRow::var(q0 + a, -1.0).plus(p_max_root))
                .collect(),
        )?;
    }
    inst.program = prog;
    inst.s_index = s;
    Ok(())
}

/// SINR cones, per-AP norm cones `q_a ≥ ‖u'_a‖` and `u ≥ 0` for the APs in
/// `aps`, with `u_{aps[a], k}` at column `a·K + k` and `q_a` at `q0 + a`.
pub(crate) fn add_aggregated_cones(
    prog: &mut ConicProgram,
    scn: &Scenario,
    aps: &[usize],
    nu: &[f64],
    q0: usize,
) -> Result<()> {
    let (na, k_count) = (aps.len(), scn.user_count());
    let n_ant = scn.config.antennas as f64;
    let inv_sigma = 1.0 / scn.config.noise_w.sqrt();
    for k in 0..k_count {
        if nu[k] == 0.0 {
            continue;
        }
        let root = nu[k].sqrt();
        let column = |t: usize, scale: f64| {
            AffineRow::terms(
                (0..na)
                    .map(|a| (a * k_count + t, scale * (n_ant * scn.gamma[[aps[a], k]]).sqrt()))
                    .collect(),
            )
        };
        let mut rows = vec![column(k, inv_sigma)];
        rows.extend(scn.co_pilot_users(k).map(|t| column(t, root * inv_sigma)));
        rows.extend((0..na).map(|a| {
            AffineRow::var(q0 + a, root * scn.beta[[aps[a], k]].sqrt() * inv_sigma)
        }));
        rows.push(AffineRow::constant(root));
        prog.add_soc(format!("sinr[{k}]"), rows)?;
    }
    for (a, &m) in aps.iter().enumerate() {
        let mut rows = vec![AffineRow::var(q0 + a, 1.0)];
        rows.extend((0..k_count).map(|k| AffineRow::var(a * k_count + k, 1.0)));
        prog.add_soc(format!("ap_norm[{m}]"), rows)?;
    }
    if na > 0 {
        prog.add_nonneg("u_nonneg", (0..q0).map(|j| AffineRow::var(j, 1.0)).collect())?;
    }
    Ok(())
}

fn build_literal(inst: &mut SocpFixedSetInstance, scn: &Scenario) -> Result<()> {
    let (na, k_count) = (inst.aps.len(), inst.user_count);
    let served: Vec<usize> = (0..k_count).filter(|&k| inst.nu[k] > 0.0).collect();
    let t0 = na * k_count;
    let aux = |i: usize, kp: usize| t0 + i * k_count + kp;
    let s = t0 + served.len() * k_count;
    let mut prog = ConicProgram::new(s + 1);
    prog.set_objective(s, 1.0);

    let coef = epigraph_weights(inst, scn.config.delta);
    let mut epi = vec![AffineRow::var(s, 1.0)];
    for a in 0..na {
        epi.extend((0..k_count).map(|k| AffineRow::var(a * k_count + k, coef[a])));
    }
    epi.extend(activation_row(inst, scn.config.p_act_w));
    prog.add_soc("epigraph", epi)?;

    let inv_sigma = 1.0 / inst.sigma;
    for (i, &k) in served.iter().enumerate() {
        let root = inst.nu[k].sqrt();
        for kp in 0..k_count {
            let mut rows = vec![AffineRow::var(aux(i, kp), 1.0)];
            rows.extend(
                (0..na).map(|a| AffineRow::var(a * k_count + kp, inst.z[[a, k]] * inv_sigma)),
            );
            prog.add_soc(format!("noncoherent[{k},{kp}]"), rows)?;
        }
        let column = |t: usize, scale: f64| {
            AffineRow::terms(
                (0..na)
                    .map(|a| (a * k_count + t, scale * inst.g[[a, k]]))
                    .collect(),
            )
        };
        let mut rows = vec![column(k, inv_sigma)];
        rows.extend(scn.co_pilot_users(k).map(|t| column(t, root * inv_sigma)));
        rows.extend((0..k_count).map(|kp| AffineRow::var(aux(i, kp), root)));
        rows.push(AffineRow::constant(root));
        prog.add_soc(format!("sinr[{k}]"), rows)?;
    }

    let p_max_root = scn.config.p_max_w.sqrt();
    for a in 0..na {
        let mut rows = vec![AffineRow::constant(p_max_root)];
        rows.extend((0..k_count).map(|k| AffineRow::var(a * k_count + k, 1.0)));
        prog.add_soc(format!("cap[{}]", inst.aps[a]), rows)?;
    }
    if na > 0 {
        prog.add_nonneg("u_nonneg", (0..t0).map(|j| AffineRow::var(j, 1.0)).collect())?;
    }
    inst.program = prog;
    inst.s_index = s;
    Ok(())
}

/// The vectors `r`, `g_k`, `z_k`, `U` and `s_k` evaluated at an allocation,
/// all indexed over the active APs.
#[derive(Debug, Clone, PartialEq)]
pub struct LiteralVectors {
    pub r: Vec<f64>,
    pub g: Vec<Vec<f64>>,
    pub z: Vec<Vec<f64>>,
    /// `|A| × K`, entries `√ρ_mk`.
    pub u: Array2<f64>,
    pub s: Vec<Vec<f64>>,
}

/// Evaluates the stacked vectors of the epigraph program at `alloc`.
pub fn materialize_vectors(
    inst: &SocpFixedSetInstance,
    scn: &Scenario,
    alloc: &PowerAllocation,
) -> LiteralVectors {
    let (na, k_count) = (inst.aps.len(), inst.user_count);
    let u = Array2::from_shape_fn((na, k_count), |(a, k)| {
        alloc.rho[[inst.aps[a], k]].max(0.0).sqrt()
    });
    let delta_root = scn.config.delta.sqrt();
    let mut r: Vec<f64> = u.iter().map(|v| delta_root * v).collect();
    r.extend(std::iter::repeat_n(scn.config.p_act_w.sqrt(), na));
    let g: Vec<Vec<f64>> = (0..k_count).map(|k| inst.g.column(k).to_vec()).collect();
    let z: Vec<Vec<f64>> = (0..k_count).map(|k| inst.z.column(k).to_vec()).collect();
    let dot = |a: &[f64], k: usize| -> f64 { (0..na).map(|i| a[i] * u[[i, k]]).sum() };
    let s = (0..k_count)
        .map(|k| {
            let root = inst.nu[k].sqrt();
            let mut v: Vec<f64> = scn.co_pilot_users(k).map(|t| root * dot(&g[k], t)).collect();
            v.extend((0..k_count).map(|kp| {
                root * (0..na)
                    .map(|i| (z[k][i] * u[[i, kp]]).powi(2))
                    .sum::<f64>()
                    .sqrt()
            }));
            v.push(root * inst.sigma);
            v
        })
        .collect();
    LiteralVectors { r, g, z, u, s }
}

fn norm_sq(v: &[f64]) -> f64 {
    v.iter().map(|e| e * e).sum()
}

/// `‖s_k‖² = ν_k · denominator` and `(g_kᵀu_k)² = numerator` of the SINR.
fn bookkeeping_holds(inst: &SocpFixedSetInstance, scn: &Scenario, alloc: &PowerAllocation) -> bool {
    let v = materialize_vectors(inst, scn, alloc);
    let active: ActiveSet = inst.aps.iter().copied().collect();
    let Ok(sinr) = semodel::sinr(alloc, &active, scn) else {
        return false;
    };
    (0..inst.user_count).filter(|&k| inst.nu[k] > 0.0).all(|k| {
        let signal: f64 = (0..inst.aps.len()).map(|i| v.g[k][i] * v.u[[i, k]]).sum();
        let denom = norm_sq(&v.s[k]) / inst.nu[k];
        let lhs = signal * signal / denom;
        (lhs - sinr[k]).abs() <= 1e-9 * (1.0 + sinr[k])
    })
}

/// Optimal allocation of one fixed-set solve.
#[derive(Debug, Clone)]
pub struct FixedSetSolution {
    pub active: ActiveSet,
    pub alloc: PowerAllocation,
    /// Total power `Δ·Σρ + |A|·P_act` recomputed from `alloc`.
    pub total_power_w: f64,
    pub transmit_power_w: f64,
    /// `Σ_m a_m ‖ρ_m‖` in weighted mode, the total power otherwise.
    pub objective: f64,
    /// Square of the epigraph variable, rescaled to watts.
    pub epigraph_sq: f64,
    pub report: FeasibilityReport,
    pub conic: ConicSolution,
}

#[derive(Debug, Clone)]
pub enum FixedSetOutcome {
    Solved(Box<FixedSetSolution>),
    Infeasible { certificate_residual: Option<f64> },
}

impl FixedSetOutcome {
    pub fn solution(&self) -> Option<&FixedSetSolution> {
        match self {
            Self::Solved(s) => Some(s),
            Self::Infeasible { .. } => None,
        }
    }

    pub fn into_solution(self) -> Option<FixedSetSolution> {
        match self {
            Self::Solved(s) => Some(*s),
            Self::Infeasible { .. } => None,
        }
    }

    pub fn is_feasible(&self) -> bool {
        matches!(self, Self::Solved(_))
    }
}

/// Brings every AP row back under `P_max`, absorbing solver round-off in the
/// norm and cap cones.
fn clip_to_cap(alloc: &mut PowerAllocation, p_max: f64) {
    for mut row in alloc.rho.rows_mut() {
        let p = row.sum();
        if p > p_max {
            let f = p_max / p;
            row.iter_mut().for_each(|v| *v *= f);
        }
    }
}

/// Weighted objective `Σ_m a_m ‖ρ_m‖²` with `‖ρ_m‖² = Σ_k ρ_mk`.
pub fn weighted_transmit_power(alloc: &PowerAllocation, weights: &[f64]) -> f64 {
    weights
        .iter()
        .enumerate()
        .map(|(m, a)| a * alloc.ap_power(m))
        .sum()
}

/// Solves the fixed-set program. Infeasible active sets are an outcome, any
/// other non-optimal solver status an error.
pub fn solve_fixed_set(
    backend: &Backend<'_>,
    scn: &Scenario,
    targets: &SinrTargets,
    active: &ActiveSet,
    mode: &ObjectiveMode,
) -> Result<FixedSetOutcome> {
    let (m_count, k_count) = (scn.ap_count(), scn.user_count());
    if active.is_empty() && targets.all_zero() {
        return Ok(FixedSetOutcome::Solved(Box::new(trivial_solution(scn, targets)?)));
    }
    let inst = build_instance(scn, targets, active, mode, backend.formulation)?;
    let sol = backend.run(&inst.program);
    match sol.status {
        SolveStatus::Optimal => {}
        SolveStatus::Infeasible => {
            return Ok(FixedSetOutcome::Infeasible {
                certificate_residual: sol.certificate_residual,
            })
        }
        other => return Err(Error::Solver(other)),
    }
    let mut alloc = inst.allocation(&sol.x, m_count);
    clip_to_cap(&mut alloc, scn.config.p_max_w);
    debug_assert!(bookkeeping_holds(&inst, scn, &alloc));
    debug_assert_eq!(alloc.rho.dim(), (m_count, k_count));

    let transmit = alloc.transmit_power();
    let total = semodel::total_power(&alloc, active, scn.config.delta, scn.config.p_act_w);
    let s = sol.x[inst.s_index];
    let (objective, epigraph_sq) = match mode {
        ObjectiveMode::TotalPowerEpigraph => (total, s * s),
        ObjectiveMode::WeightedTransmitPower(w) => {
            (weighted_transmit_power(&alloc, w), inst.weight_scale * s * s)
        }
    };
    let report = semodel::check_feasible(&alloc, active, scn, targets)?;
    if !report.feasible {
        log::warn!(
            "fixed-set solution fails verification: sinr slack {:.3e}, cap slack {:.3e}",
            report.worst_sinr_slack(),
            report.worst_cap_slack()
        );
        return Err(Error::Solver(SolveStatus::NumericalTrouble));
    }
    Ok(FixedSetOutcome::Solved(Box::new(FixedSetSolution {
        active: active.clone(),
        alloc,
        total_power_w: total,
        transmit_power_w: transmit,
        objective,
        epigraph_sq,
        report,
        conic: sol,
    })))
}

fn trivial_solution(scn: &Scenario, targets: &SinrTargets) -> Result<FixedSetSolution> {
    let alloc = PowerAllocation::zeros(scn.ap_count(), scn.user_count());
    let active = ActiveSet::empty();
    let report = semodel::check_feasible(&alloc, &active, scn, targets)?;
    Ok(FixedSetSolution {
        active,
        alloc,
        total_power_w: 0.0,
        transmit_power_w: 0.0,
        objective: 0.0,
        epigraph_sq: 0.0,
        report,
        conic: ConicSolution {
            status: SolveStatus::Optimal,
            x: Vec::new(),
            z: Vec::new(),
            primal_objective: 0.0,
            dual_objective: 0.0,
            residuals: Default::default(),
            certificate_residual: None,
            iterations: 0,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conic::ConeKind;
    use crate::scenario::{PerUser, ScenarioConfig};

    fn link(n: usize, beta: f64, p_max: f64) -> Scenario {
        let mut c = ScenarioConfig::reference();
        c.ap_count = 1;
        c.user_count = 1;
        c.tau_p = 1;
        c.antennas = n;
        c.p_max_w = p_max;
        c.pilot_power_w = PerUser::Uniform(1.0);
        c.noise_w = 6.31e-13;
        Scenario::from_parts(c, vec![], vec![], Array2::from_elem((1, 1), beta), vec![vec![0]])
            .unwrap()
    }

    fn closed_form(scn: &Scenario, nu: f64) -> f64 {
        let n = scn.config.antennas as f64;
        nu * scn.config.noise_w / (n * scn.gamma[[0, 0]] - nu * scn.beta[[0, 0]])
    }

    #[test]
    fn single_link_matches_closed_form() {
        let scn = link(20, 1e-10, 1.0);
        let t = SinrTargets { nu: vec![3.1447] };
        for form in [Formulation::Aggregated, Formulation::Literal] {
            let b = Backend::default().with_formulation(form);
            let out = solve_fixed_set(&b, &scn, &t, &ActiveSet::all(1), &ObjectiveMode::TotalPowerEpigraph)
                .unwrap();
            let sol = out.solution().unwrap();
            let expect = closed_form(&scn, 3.1447);
            assert!((sol.alloc.rho[[0, 0]] / expect - 1.0).abs() < 1e-8, "{form:?} {} {expect} {:?}", sol.alloc.rho[[0, 0]], sol.conic.residuals);
            assert!((sol.epigraph_sq / sol.total_power_w - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn single_link_beyond_boundary_is_infeasible() {
        let scn = link(1, 1e-10, 1.0);
        // N γ / β is just below 1, so any ν ≥ 1 is out of reach
        let t = SinrTargets { nu: vec![1.0] };
        let out = solve_fixed_set(
            &Backend::default(),
            &scn,
            &t,
            &ActiveSet::all(1),
            &ObjectiveMode::TotalPowerEpigraph,
        )
        .unwrap();
        assert!(matches!(out, FixedSetOutcome::Infeasible { .. }));
    }

    #[test]
    fn cap_limited_link_is_infeasible() {
        let scn = link(20, 1e-10, 1e-3);
        let t = SinrTargets { nu: vec![3.1447] };
        assert!(closed_form(&scn, 3.1447) > 1e-3);
        let out = solve_fixed_set(
            &Backend::default(),
            &scn,
            &t,
            &ActiveSet::all(1),
            &ObjectiveMode::TotalPowerEpigraph,
        )
        .unwrap();
        assert!(!out.is_feasible());
    }

    #[test]
    fn zero_targets() {
        let mut c = ScenarioConfig::reference();
        c.ap_count = 3;
        c.user_count = 2;
        c.tau_p = 2;
        c.seed = 4;
        let scn = Scenario::generate(&c).unwrap();
        let t = SinrTargets { nu: vec![0.0, 0.0] };
        let b = Backend::default();
        let out = solve_fixed_set(&b, &scn, &t, &ActiveSet::empty(), &ObjectiveMode::TotalPowerEpigraph)
            .unwrap();
        assert_eq!(out.solution().unwrap().total_power_w, 0.0);
        let set: ActiveSet = [0, 2].into_iter().collect();
        let out = solve_fixed_set(&b, &scn, &t, &set, &ObjectiveMode::TotalPowerEpigraph).unwrap();
        let sol = out.solution().unwrap();
        assert!(sol.transmit_power_w < 1e-7);
        assert!((sol.epigraph_sq - 2.0 * 5.03).abs() < 1e-6);

        let t = SinrTargets { nu: vec![0.0, 1.0] };
        assert!(matches!(
            solve_fixed_set(&b, &scn, &t, &ActiveSet::empty(), &ObjectiveMode::TotalPowerEpigraph),
            Err(Error::EmptyActiveSet)
        ));
    }

    #[test]
    fn pilot_sharing_block_structure() {
        let mut c = ScenarioConfig::reference();
        c.ap_count = 1;
        c.user_count = 2;
        c.tau_p = 1;
        let scn = Scenario::from_parts(
            c,
            vec![],
            vec![],
            Array2::from_shape_vec((1, 2), vec![1e-9, 2e-9]).unwrap(),
            vec![vec![0, 1]],
        )
        .unwrap();
        let t = SinrTargets { nu: vec![1.0, 1.0] };
        let inst = build_instance(
            &scn,
            &t,
            &ActiveSet::all(1),
            &ObjectiveMode::TotalPowerEpigraph,
            Formulation::Literal,
        )
        .unwrap();
        let sinr: Vec<_> = inst
            .program
            .blocks()
            .iter()
            .filter(|b| b.name.starts_with("sinr"))
            .collect();
        assert_eq!(sinr.len(), 2);
        for b in &sinr {
            // t, one coherent term, two non-coherent terms, σ
            assert_eq!(b.kind, ConeKind::Soc);
            assert_eq!(b.dim(), 1 + 1 + 2 + 1);
        }
        let mut alloc = PowerAllocation::zeros(1, 2);
        alloc.rho[[0, 0]] = 0.3;
        alloc.rho[[0, 1]] = 0.2;
        let v = materialize_vectors(&inst, &scn, &alloc);
        assert_eq!(v.s[0].len(), 2 + 2);
        assert_eq!(v.r.len(), 2 + 1);
        assert!(bookkeeping_holds(&inst, &scn, &alloc));
    }

    #[test]
    fn weighted_mode_rejects_bad_weights() {
        let scn = link(4, 1e-10, 1.0);
        let t = SinrTargets { nu: vec![1.0] };
        let b = Backend::default();
        for w in [vec![], vec![0.0], vec![f64::NAN]] {
            assert!(solve_fixed_set(
                &b,
                &scn,
                &t,
                &ActiveSet::all(1),
                &ObjectiveMode::WeightedTransmitPower(w)
            )
            .is_err());
        }
    }

    #[test]
    fn duplicate_ap_beats_single_ap_and_grid() {
        let mut c = ScenarioConfig::reference();
        c.ap_count = 2;
        c.user_count = 1;
        c.tau_p = 1;
        c.antennas = 4;
        c.noise_w = 1e-12;
        c.pilot_power_w = PerUser::Uniform(0.2);
        let beta = Array2::from_elem((2, 1), 5e-11);
        let scn = Scenario::from_parts(c, vec![], vec![], beta, vec![vec![0]]).unwrap();
        let t = SinrTargets { nu: vec![2.0] };
        let b = Backend::default();
        let mode = ObjectiveMode::WeightedTransmitPower(vec![1.0, 1.0]);
        let both = solve_fixed_set(&b, &scn, &t, &ActiveSet::all(2), &mode)
            .unwrap()
            .into_solution()
            .unwrap();
        let single: ActiveSet = [0].into_iter().collect();
        let one = solve_fixed_set(&b, &scn, &t, &single, &mode)
            .unwrap()
            .into_solution()
            .unwrap();
        assert!(both.transmit_power_w < one.transmit_power_w);
        assert!(one.transmit_power_w < 0.1);

        // brute force over a 1 mW grid on (ρ_1, ρ_2)
        let mut best = f64::INFINITY;
        let mut alloc = PowerAllocation::zeros(2, 1);
        for i in 0..=100 {
            for j in 0..=100 {
                alloc.rho[[0, 0]] = i as f64 * 1e-3;
                alloc.rho[[1, 0]] = j as f64 * 1e-3;
                let total = alloc.transmit_power();
                if total >= best {
                    continue;
                }
                let s = semodel::sinr(&alloc, &ActiveSet::all(2), &scn).unwrap()[0];
                if s >= t.nu[0] {
                    best = total;
                }
            }
        }
        assert!(both.transmit_power_w <= best + 1e-9);
        assert!(best - both.transmit_power_w < 2e-3);
    }
}
