//! Second-order cone programs in standard form.
//!
//! ```text
//! minimize    cᵀx
//! subject to  A_i x + b_i ∈ K_i     for every block i
//! ```
//!
//! where each `K_i` is either a nonnegative orthant or a second-order cone
//! `{ (t, v) : ‖v‖ ≤ t }`. The dual is
//!
//! ```text
//! maximize    -Σ b_iᵀ z_i
//! subject to  Σ A_iᵀ z_i = c,   z_i ∈ K_i
//! ```
//!
//! [`InteriorPoint`] solves these with a homogeneous self-dual embedding and
//! Nesterov–Todd scaled predictor-corrector steps. [`residuals`] re-derives
//! feasibility and gap figures from a solution without touching solver state.

mod cbf;
mod cones;
mod ipm;
mod linalg;

pub use cbf::to_cbf;
pub use ipm::InteriorPoint;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConeKind {
    Nonneg,
    Soc,
}

/// One affine row `Σ coef·x_j + constant`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AffineRow {
    pub terms: Vec<(usize, f64)>,
    pub constant: f64,
}

impl AffineRow {
    pub fn constant(value: f64) -> Self {
        Self {
            terms: Vec::new(),
            constant: value,
        }
    }

    pub fn var(j: usize, coef: f64) -> Self {
        Self {
            terms: vec![(j, coef)],
            constant: 0.0,
        }
    }

    pub fn terms(terms: Vec<(usize, f64)>) -> Self {
        Self {
            terms,
            constant: 0.0,
        }
    }

    pub fn plus(mut self, value: f64) -> Self {
        self.constant += value;
        self
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|&(j, a)| a * x[j]).sum::<f64>() + self.constant
    }
}

/// A cone constraint: the stacked rows must lie in the cone.
#[derive(Debug, Clone, PartialEq)]
pub struct ConeBlock {
    pub kind: ConeKind,
    pub name: String,
    pub rows: Vec<AffineRow>,
}

impl ConeBlock {
    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        self.rows.iter().map(|r| r.eval(x)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConicProgram {
    n_vars: usize,
    objective: Vec<f64>,
    blocks: Vec<ConeBlock>,
}

impl ConicProgram {
    pub fn new(n_vars: usize) -> Self {
        Self {
            n_vars,
            objective: vec![0.0; n_vars],
            blocks: Vec::new(),
        }
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn blocks(&self) -> &[ConeBlock] {
        &self.blocks
    }

    pub fn set_objective(&mut self, j: usize, coef: f64) {
        self.objective[j] = coef;
    }

    /// Adds a cone block. SOC blocks need at least one row; every referenced
    /// variable must exist.
    pub fn add_block(
        &mut self,
        kind: ConeKind,
        name: impl Into<String>,
        rows: Vec<AffineRow>,
    ) -> Result<usize> {
        let name = name.into();
        if rows.is_empty() {
            return Err(Error::ShapeMismatch(format!("block `{name}` has no rows")));
        }
        for row in &rows {
            if let Some(&(j, _)) = row.terms.iter().find(|(j, _)| *j >= self.n_vars) {
                return Err(Error::ShapeMismatch(format!(
                    "block `{name}` references variable {j} but the program has {}",
                    self.n_vars
                )));
            }
        }
        self.blocks.push(ConeBlock { kind, name, rows });
        Ok(self.blocks.len() - 1)
    }

    pub fn add_nonneg(&mut self, name: impl Into<String>, rows: Vec<AffineRow>) -> Result<usize> {
        self.add_block(ConeKind::Nonneg, name, rows)
    }

    pub fn add_soc(&mut self, name: impl Into<String>, rows: Vec<AffineRow>) -> Result<usize> {
        self.add_block(ConeKind::Soc, name, rows)
    }

    pub fn total_rows(&self) -> usize {
        self.blocks.iter().map(ConeBlock::dim).sum()
    }

    /// Same program with its blocks reordered by `order`.
    pub fn permuted(&self, order: &[usize]) -> Self {
        Self {
            n_vars: self.n_vars,
            objective: self.objective.clone(),
            blocks: order.iter().map(|&i| self.blocks[i].clone()).collect(),
        }
    }

    pub fn scaled_objective(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.objective.iter_mut().for_each(|c| *c *= factor);
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterLimit,
    NumericalTrouble,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    /// Norm of the cone violation of `A x + b`.
    pub primal: f64,
    /// `‖c − Σ A_iᵀ z_i‖` combined with the dual cone violation of `z`.
    pub dual: f64,
    pub primal_objective: f64,
    pub dual_objective: f64,
    /// `|primal − dual| / (1 + |primal|)`.
    pub relative_gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConicSolution {
    pub status: SolveStatus,
    pub x: Vec<f64>,
    /// Dual multipliers, one vector per block. For `Infeasible` this is the
    /// Farkas ray normalised so that `Σ b_iᵀ z_i = −1`.
    pub z: Vec<Vec<f64>>,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub residuals: Residuals,
    /// Residual of the infeasibility (or unboundedness) certificate.
    pub certificate_residual: Option<f64>,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub feas_tol: f64,
    pub gap_tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            feas_tol: 1e-8,
            gap_tol: 1e-8,
            max_iter: 200,
        }
    }
}

/// Anything that can solve a [`ConicProgram`].
pub trait ConicSolver: Send + Sync {
    fn solve(&self, prog: &ConicProgram, opts: &SolverOptions) -> ConicSolution;
}

/// Cone violation of `v` (zero when `v ∈ K`).
pub(crate) fn cone_violation(kind: ConeKind, v: &[f64]) -> f64 {
    match kind {
        ConeKind::Nonneg => v
            .iter()
            .map(|&e| (-e).max(0.0).powi(2))
            .sum::<f64>()
            .sqrt(),
        ConeKind::Soc => {
            let tail = v[1..].iter().map(|e| e * e).sum::<f64>().sqrt();
            (tail - v[0]).max(0.0)
        }
    }
}

/// Recomputes primal/dual residuals and objectives for a candidate
/// primal-dual pair directly from the program data.
pub fn residuals(prog: &ConicProgram, x: &[f64], z: &[Vec<f64>]) -> Result<Residuals> {
    if x.len() != prog.n_vars {
        return Err(Error::ShapeMismatch(format!(
            "x has {} entries, program has {} variables",
            x.len(),
            prog.n_vars
        )));
    }
    if z.len() != prog.blocks.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} dual blocks for {} cone blocks",
            z.len(),
            prog.blocks.len()
        )));
    }
    let mut primal_sq = 0.0;
    let mut dual_cone_sq = 0.0;
    let mut stationarity = prog.objective.clone();
    let mut dual_objective = 0.0;
    for (block, zb) in prog.blocks.iter().zip(z) {
        if zb.len() != block.dim() {
            return Err(Error::ShapeMismatch(format!(
                "dual block `{}` has {} entries, expected {}",
                block.name,
                zb.len(),
                block.dim()
            )));
        }
        primal_sq += cone_violation(block.kind, &block.eval(x)).powi(2);
        dual_cone_sq += cone_violation(block.kind, zb).powi(2);
        for (row, &zi) in block.rows.iter().zip(zb) {
            for &(j, a) in &row.terms {
                stationarity[j] -= a * zi;
            }
            dual_objective -= row.constant * zi;
        }
    }
    let primal_objective: f64 = prog.objective.iter().zip(x).map(|(c, x)| c * x).sum();
    let stat_sq: f64 = stationarity.iter().map(|v| v * v).sum();
    Ok(Residuals {
        primal: primal_sq.sqrt(),
        dual: (stat_sq + dual_cone_sq).sqrt(),
        primal_objective,
        dual_objective,
        relative_gap: (primal_objective - dual_objective).abs() / (1.0 + primal_objective.abs()),
    })
}

/// Residual of a primal infeasibility certificate `z`: with `z ∈ K` and
/// `Σ b_iᵀ z_i < 0`, returns `(‖Σ A_iᵀ z_i‖ + cone violation) / (−Σ b_iᵀ z_i)`.
/// Returns `None` if `z` does not point in an improving direction.
pub fn infeasibility_residual(prog: &ConicProgram, z: &[Vec<f64>]) -> Option<f64> {
    let mut adj = vec![0.0; prog.n_vars];
    let mut bz = 0.0;
    let mut viol = 0.0f64;
    for (block, zb) in prog.blocks.iter().zip(z) {
        viol += cone_violation(block.kind, zb).powi(2);
        for (row, &zi) in block.rows.iter().zip(zb) {
            for &(j, a) in &row.terms {
                adj[j] += a * zi;
            }
            bz += row.constant * zi;
        }
    }
    if bz >= 0.0 {
        return None;
    }
    let norm = adj.iter().map(|v| v * v).sum::<f64>().sqrt() + viol.sqrt();
    Some(norm / -bz)
}

/// Residual of an unboundedness ray `x`: with `cᵀx < 0`, returns the cone
/// violation of the homogeneous part `A x` divided by `−cᵀx`.
pub fn unboundedness_residual(prog: &ConicProgram, x: &[f64]) -> Option<f64> {
    let cx: f64 = prog.objective.iter().zip(x).map(|(c, x)| c * x).sum();
    if cx >= 0.0 {
        return None;
    }
    let viol: f64 = prog
        .blocks
        .iter()
        .map(|block| {
            let v: Vec<f64> = block
                .rows
                .iter()
                .map(|r| r.terms.iter().map(|&(j, a)| a * x[j]).sum())
                .collect();
            cone_violation(block.kind, &v).powi(2)
        })
        .sum();
    Some(viol.sqrt() / -cx)
}
