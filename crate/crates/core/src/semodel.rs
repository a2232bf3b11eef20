//! Closed-form downlink SINR/SE under MRT with imperfect CSI, the SE-to-SINR
//! target conversion, the total power model, and the feasibility verifier
//! every optimised allocation is checked against.

use std::collections::BTreeSet;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::Scenario;

/// Relative SINR shortfall tolerated by [`check_feasible`].
pub const SINR_REL_TOL: f64 = 1e-6;
/// Relative per-AP power-cap overshoot tolerated by [`check_feasible`].
pub const CAP_REL_TOL: f64 = 1e-8;

/// Per-AP, per-user downlink powers `ρ_mk` in watts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerAllocation {
    pub rho: Array2<f64>,
}

impl PowerAllocation {
    pub fn zeros(m: usize, k: usize) -> Self {
        Self {
            rho: Array2::zeros((m, k)),
        }
    }

    /// Transmit power of AP `m`.
    pub fn ap_power(&self, m: usize) -> f64 {
        self.rho.row(m).sum()
    }

    pub fn transmit_power(&self) -> f64 {
        self.rho.sum()
    }
}

/// Sorted set of switched-on AP indices.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ActiveSet(BTreeSet<usize>);

impl ActiveSet {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn all(m: usize) -> Self {
        Self((0..m).collect())
    }

    pub fn from_mask(mask: u64, m: usize) -> Self {
        Self((0..m).filter(|&i| mask >> i & 1 == 1).collect())
    }

    pub fn insert(&mut self, m: usize) -> bool {
        self.0.insert(m)
    }

    pub fn contains(&self, m: usize) -> bool {
        self.0.contains(&m)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn to_vec(&self) -> Vec<usize> {
        self.iter().collect()
    }

    pub fn check_range(&self, m: usize) -> Result<()> {
        match self.0.iter().next_back() {
            Some(&last) if last >= m => Err(Error::ShapeMismatch(format!(
                "AP index {last} out of range for {m} APs"
            ))),
            _ => Ok(()),
        }
    }
}

impl FromIterator<usize> for ActiveSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}

/// Per-user SINR thresholds `ν_k` equivalent to the SE targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SinrTargets {
    pub nu: Vec<f64>,
}

impl SinrTargets {
    pub fn all_zero(&self) -> bool {
        self.nu.iter().all(|&v| v == 0.0)
    }
}

fn check_shapes(alloc: &PowerAllocation, active: &ActiveSet, scn: &Scenario) -> Result<()> {
    let dims = (scn.ap_count(), scn.user_count());
    if alloc.rho.dim() != dims {
        return Err(Error::ShapeMismatch(format!(
            "allocation is {:?}, scenario is {dims:?}",
            alloc.rho.dim()
        )));
    }
    active.check_range(dims.0)
}

/// Effective SINR of every user; APs outside `active` are ignored.
pub fn sinr(alloc: &PowerAllocation, active: &ActiveSet, scn: &Scenario) -> Result<Vec<f64>> {
    check_shapes(alloc, active, scn)?;
    let k_count = scn.user_count();
    let n = scn.config.antennas as f64;
    let rho = &alloc.rho;
    let mut out = Vec::with_capacity(k_count);
    for k in 0..k_count {
        let coherent = |user: usize| -> f64 {
            active
                .iter()
                .map(|m| (rho[[m, user]] * scn.gamma[[m, k]]).sqrt())
                .sum()
        };
        let signal = n * coherent(k).powi(2);
        let pilot_interf: f64 = scn.co_pilot_users(k).map(|t| n * coherent(t).powi(2)).sum();
        let noncoherent: f64 = active
            .iter()
            .map(|m| rho.row(m).sum() * scn.beta[[m, k]])
            .sum();
        out.push(signal / (pilot_interf + noncoherent + scn.config.noise_w));
    }
    Ok(out)
}

/// Pre-log factor `1 − τ_p/τ_c`.
pub fn prelog(tau_c: usize, tau_p: usize) -> f64 {
    1.0 - tau_p as f64 / tau_c as f64
}

/// Achievable SE of every user in bit/s/Hz.
pub fn se(alloc: &PowerAllocation, active: &ActiveSet, scn: &Scenario) -> Result<Vec<f64>> {
    let factor = prelog(scn.config.tau_c, scn.config.tau_p);
    Ok(sinr(alloc, active, scn)?
        .into_iter()
        .map(|s| factor * (1.0 + s).log2())
        .collect())
}

/// `ν_k = 2^{ξ_k τ_c / (τ_c − τ_p)} − 1`.
pub fn se_target_to_sinr(xi: &[f64], tau_c: usize, tau_p: usize) -> Result<SinrTargets> {
    if tau_p >= tau_c {
        return Err(Error::InvalidConfig("need tau_p < tau_c".into()));
    }
    let ratio = tau_c as f64 / (tau_c - tau_p) as f64;
    Ok(SinrTargets {
        nu: xi.iter().map(|&x| (x * ratio).exp2() - 1.0).collect(),
    })
}

/// Total power `Δ Σ_{m∈A} Σ_k ρ_mk + |A| P_act`.
pub fn total_power(alloc: &PowerAllocation, active: &ActiveSet, delta: f64, p_act: f64) -> f64 {
    let transmit: f64 = active.iter().map(|m| alloc.ap_power(m)).sum();
    delta * transmit + active.len() as f64 * p_act
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub sinr: Vec<f64>,
    /// `(SINR_k − ν_k) / ν_k` (absolute SINR when `ν_k = 0`).
    pub sinr_slack: Vec<f64>,
    pub user_ok: Vec<bool>,
    /// `(P_max − Σ_k ρ_mk) / P_max` for every AP.
    pub cap_slack: Vec<f64>,
    pub ap_ok: Vec<bool>,
    /// Power assigned to APs outside the active set.
    pub inactive_power: f64,
    pub feasible: bool,
}

impl FeasibilityReport {
    pub fn worst_sinr_slack(&self) -> f64 {
        self.sinr_slack.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn worst_cap_slack(&self) -> f64 {
        self.cap_slack.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Checks the SINR targets and per-AP caps of an allocation.
pub fn check_feasible(
    alloc: &PowerAllocation,
    active: &ActiveSet,
    scn: &Scenario,
    targets: &SinrTargets,
) -> Result<FeasibilityReport> {
    let sinr = sinr(alloc, active, scn)?;
    if targets.nu.len() != sinr.len() {
        return Err(Error::ShapeMismatch("target count differs from user count".into()));
    }
    let mut sinr_slack = Vec::with_capacity(sinr.len());
    let mut user_ok = Vec::with_capacity(sinr.len());
    for (&s, &nu) in sinr.iter().zip(&targets.nu) {
        if nu > 0.0 {
            sinr_slack.push((s - nu) / nu);
            user_ok.push(s >= nu * (1.0 - SINR_REL_TOL));
        } else {
            sinr_slack.push(s);
            user_ok.push(true);
        }
    }
    let p_max = scn.config.p_max_w;
    let mut cap_slack = Vec::with_capacity(scn.ap_count());
    let mut ap_ok = Vec::with_capacity(scn.ap_count());
    let mut inactive_power = 0.0;
    for m in 0..scn.ap_count() {
        let p = alloc.ap_power(m);
        let slack = (p_max - p) / p_max;
        cap_slack.push(slack);
        ap_ok.push(slack >= -CAP_REL_TOL && alloc.rho.row(m).iter().all(|&r| r >= 0.0));
        if !active.contains(m) {
            inactive_power += p;
        }
    }
    let feasible = user_ok.iter().all(|&b| b) && ap_ok.iter().all(|&b| b);
    Ok(FeasibilityReport {
        sinr,
        sinr_slack,
        user_ok,
        cap_slack,
        ap_ok,
        inactive_power,
        feasible,
    })
}
