//! Network drops: AP/user placement on a wrap-around square, large-scale
//! fading, pilot assignment and channel-estimate quality.

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Resamples allowed per AP before placement is declared over-constrained.
pub const PLACEMENT_ATTEMPTS: usize = 10_000;

/// A value given either once for everyone or per entity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerUser {
    Uniform(f64),
    Each(Vec<f64>),
}

impl PerUser {
    pub fn get(&self, k: usize) -> f64 {
        match self {
            PerUser::Uniform(v) => *v,
            PerUser::Each(v) => v[k],
        }
    }

    pub fn to_vec(&self, len: usize) -> Vec<f64> {
        (0..len).map(|k| self.get(k)).collect()
    }

    fn check(&self, len: usize, what: &str) -> Result<()> {
        if let PerUser::Each(v) = self {
            if v.len() != len {
                return Err(Error::InvalidConfig(format!(
                    "{what} lists {} values for {len} users",
                    v.len()
                )));
            }
        }
        Ok(())
    }
}

/// `PL_dB(d) = ref_loss_db − exponent_db · log10(d / 1 m)` with the AP
/// mounted `height_m` above the user plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pathloss {
    pub ref_loss_db: f64,
    pub exponent_db: f64,
    pub height_m: f64,
}

impl Default for Pathloss {
    fn default() -> Self {
        Self {
            ref_loss_db: -30.5,
            exponent_db: 36.7,
            height_m: 10.0,
        }
    }
}

impl Pathloss {
    pub fn gain_db(&self, distance_m: f64) -> f64 {
        self.ref_loss_db - self.exponent_db * distance_m.log10()
    }
}

/// Log-normal shadowing. With `correlated`, the shadowing seen by the users
/// of one AP has correlation `2^(−d/decorr_m)` in their mutual distance `d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Shadowing {
    pub sigma_db: f64,
    pub correlated: bool,
    pub decorr_m: f64,
}

impl Default for Shadowing {
    fn default() -> Self {
        Self {
            sigma_db: 4.0,
            correlated: false,
            decorr_m: 9.0,
        }
    }
}

impl Shadowing {
    pub fn model_name(&self) -> &'static str {
        if self.sigma_db == 0.0 {
            "none"
        } else if self.correlated {
            "correlated-per-ap"
        } else {
            "independent"
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub ap_count: usize,
    pub user_count: usize,
    pub antennas: usize,
    pub side_m: f64,
    pub min_ap_dist_m: f64,
    pub tau_c: usize,
    pub tau_p: usize,
    pub pilot_power_w: PerUser,
    pub noise_w: f64,
    pub p_max_w: f64,
    pub delta: f64,
    pub p_act_w: f64,
    pub se_targets: PerUser,
    #[serde(default)]
    pub pathloss: Pathloss,
    #[serde(default)]
    pub shadowing: Shadowing,
    #[serde(default)]
    pub seed: u64,
}

/// Converts a power in dBm to watts.
pub fn dbm_to_w(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

impl ScenarioConfig {
    /// The 20 AP / 20 user reference network on a 1 km² square.
    pub fn reference() -> Self {
        Self {
            ap_count: 20,
            user_count: 20,
            antennas: 20,
            side_m: 1000.0,
            min_ap_dist_m: 50.0,
            tau_c: 200,
            tau_p: 5,
            pilot_power_w: PerUser::Uniform(0.2),
            noise_w: dbm_to_w(-92.0),
            p_max_w: 1.0,
            delta: 2.5,
            p_act_w: 5.03,
            se_targets: PerUser::Uniform(2.0),
            pathloss: Pathloss::default(),
            shadowing: Shadowing::default(),
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if self.ap_count == 0 || self.user_count == 0 || self.antennas == 0 {
            return bad("AP, user and antenna counts must be at least 1");
        }
        if self.tau_p == 0 || self.tau_p >= self.tau_c {
            return bad("need 1 <= tau_p < tau_c");
        }
        if self.tau_p > self.user_count {
            return bad("tau_p must not exceed the user count");
        }
        if !(self.side_m > 0.0) || self.min_ap_dist_m < 0.0 {
            return bad("side must be positive and the AP separation non-negative");
        }
        if !(self.delta >= 1.0) {
            return bad("amplifier inefficiency delta must be >= 1");
        }
        if !(self.p_act_w >= 0.0) || !(self.p_max_w > 0.0) || !(self.noise_w > 0.0) {
            return bad("need p_act >= 0, p_max > 0 and noise > 0");
        }
        self.se_targets.check(self.user_count, "se_targets")?;
        self.pilot_power_w.check(self.user_count, "pilot_power_w")?;
        if (0..self.user_count).any(|k| !(self.se_targets.get(k) >= 0.0)) {
            return bad("SE targets must be non-negative");
        }
        if (0..self.user_count).any(|k| !(self.pilot_power_w.get(k) > 0.0)) {
            return bad("pilot powers must be positive");
        }
        if !(self.pathloss.height_m > 0.0) || !(self.shadowing.sigma_db >= 0.0) {
            return bad("AP height must be positive and shadowing sigma non-negative");
        }
        Ok(())
    }

    pub fn se_target_vec(&self) -> Vec<f64> {
        self.se_targets.to_vec(self.user_count)
    }
}

pub type Point = [f64; 2];

/// Distance on the torus of side `side_m`: the shortest of the nine copies
/// of `b` shifted by `{−side, 0, side}` in each axis.
pub fn wrap_distance(a: Point, b: Point, side_m: f64) -> f64 {
    let mut best = f64::INFINITY;
    for sx in [-side_m, 0.0, side_m] {
        for sy in [-side_m, 0.0, side_m] {
            let dx = a[0] - (b[0] + sx);
            let dy = a[1] - (b[1] + sy);
            best = best.min(dx.hypot(dy));
        }
    }
    best
}

/// Uniform AP and user positions with rejection sampling on the minimum
/// wrap-around AP separation.
pub fn generate_positions<R: Rng>(
    config: &ScenarioConfig,
    rng: &mut R,
) -> Result<(Vec<Point>, Vec<Point>)> {
    let side = config.side_m;
    let mut aps: Vec<Point> = Vec::with_capacity(config.ap_count);
    while aps.len() < config.ap_count {
        let mut placed = false;
        for _ in 0..PLACEMENT_ATTEMPTS {
            let p = [rng.random::<f64>() * side, rng.random::<f64>() * side];
            if aps
                .iter()
                .all(|&q| wrap_distance(p, q, side) >= config.min_ap_dist_m)
            {
                aps.push(p);
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(Error::PlacementFailure {
                placed: aps.len(),
                requested: config.ap_count,
                attempts: PLACEMENT_ATTEMPTS,
            });
        }
    }
    let users = (0..config.user_count)
        .map(|_| [rng.random::<f64>() * side, rng.random::<f64>() * side])
        .collect();
    Ok((aps, users))
}

/// Shadowing samples in dB, one per (AP, user) pair.
fn shadowing_db<R: Rng>(
    users: &[Point],
    m: usize,
    config: &ScenarioConfig,
    rng: &mut R,
) -> Array2<f64> {
    let k = users.len();
    let sh = config.shadowing;
    let mut out = Array2::zeros((m, k));
    if sh.sigma_db == 0.0 {
        return out;
    }
    if !sh.correlated {
        for v in out.iter_mut() {
            let g: f64 = StandardNormal.sample(rng);
            *v = sh.sigma_db * g;
        }
        return out;
    }
    // Cholesky factor of the user-user correlation matrix, shared by all APs.
    let mut corr = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..k {
            let d = wrap_distance(users[i], users[j], config.side_m);
            corr[i * k + j] = 2f64.powf(-d / sh.decorr_m);
        }
    }
    let chol = lower_cholesky(&corr, k);
    for ap in 0..m {
        let g: Vec<f64> = (0..k).map(|_| StandardNormal.sample(rng)).collect();
        for i in 0..k {
            let v: f64 = (0..=i).map(|j| chol[i * k + j] * g[j]).sum();
            out[[ap, i]] = sh.sigma_db * v;
        }
    }
    out
}

fn lower_cholesky(a: &[f64], n: usize) -> Vec<f64> {
    let mut l = vec![0.0f64; n * n];
    for j in 0..n {
        let d = a[j * n + j] - (0..j).map(|k| l[j * n + k].powi(2)).sum::<f64>();
        // exact duplicates make the matrix singular; clamp
        let djj = d.max(1e-12).sqrt();
        l[j * n + j] = djj;
        for i in (j + 1)..n {
            let s = a[i * n + j] - (0..j).map(|k| l[i * n + k] * l[j * n + k]).sum::<f64>();
            l[i * n + j] = s / djj;
        }
    }
    l
}

/// Large-scale fading `β_mk` (linear) from 3-D wrap-around distances,
/// pathloss and shadowing.
pub fn large_scale_fading<R: Rng>(
    aps: &[Point],
    users: &[Point],
    config: &ScenarioConfig,
    rng: &mut R,
) -> Array2<f64> {
    let shadow = shadowing_db(users, aps.len(), config, rng);
    let h = config.pathloss.height_m;
    Array2::from_shape_fn((aps.len(), users.len()), |(m, k)| {
        let d2 = wrap_distance(aps[m], users[k], config.side_m);
        let d = d2.hypot(h);
        10f64.powf((config.pathloss.gain_db(d) + shadow[[m, k]]) / 10.0)
    })
}

/// Random partition of the users into `tau_p` pilot groups whose sizes
/// differ by at most one.
pub fn assign_pilots<R: Rng>(k: usize, tau_p: usize, rng: &mut R) -> Result<Vec<Vec<usize>>> {
    if tau_p == 0 || tau_p > k {
        return Err(Error::InvalidConfig(format!(
            "cannot assign {tau_p} pilots to {k} users"
        )));
    }
    let mut users: Vec<usize> = (0..k).collect();
    users.shuffle(rng);
    let mut groups = vec![Vec::new(); tau_p];
    for (i, u) in users.into_iter().enumerate() {
        groups[i % tau_p].push(u);
    }
    for g in &mut groups {
        g.sort_unstable();
    }
    Ok(groups)
}

/// `γ_mk = τ_p p_k β_mk² / (τ_p Σ_{k'∈P_k} p_k' β_mk' + σ²)`.
pub fn channel_estimate_quality(
    beta: &Array2<f64>,
    pilot_groups: &[Vec<usize>],
    pilot_power: &[f64],
    tau_p: usize,
    noise_w: f64,
) -> Array2<f64> {
    let (m, k) = beta.dim();
    let tp = tau_p as f64;
    let mut gamma = Array2::zeros((m, k));
    for group in pilot_groups {
        for ap in 0..m {
            let denom = tp * group
                .iter()
                .map(|&u| pilot_power[u] * beta[[ap, u]])
                .sum::<f64>()
                + noise_w;
            for &u in group {
                gamma[[ap, u]] = tp * pilot_power[u] * beta[[ap, u]].powi(2) / denom;
            }
        }
    }
    gamma
}

/// One network drop.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub ap_xy: Vec<Point>,
    pub user_xy: Vec<Point>,
    pub beta: Array2<f64>,
    pub gamma: Array2<f64>,
    pub pilot_groups: Vec<Vec<usize>>,
    /// `pilot_of[k]` is the index of user k's group.
    pub pilot_of: Vec<usize>,
    pub config: ScenarioConfig,
}

impl Scenario {
    /// Deterministic drop from `config` and its seed.
    pub fn generate(config: &ScenarioConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let (ap_xy, user_xy) = generate_positions(config, &mut rng)?;
        let beta = large_scale_fading(&ap_xy, &user_xy, config, &mut rng);
        let pilot_groups = assign_pilots(config.user_count, config.tau_p, &mut rng)?;
        Self::from_parts(config.clone(), ap_xy, user_xy, beta, pilot_groups)
    }

    /// Builds a scenario from explicit geometry, fading and pilots (γ is
    /// derived). Positions may be empty for synthetic instances.
    pub fn from_parts(
        config: ScenarioConfig,
        ap_xy: Vec<Point>,
        user_xy: Vec<Point>,
        beta: Array2<f64>,
        pilot_groups: Vec<Vec<usize>>,
    ) -> Result<Self> {
        config.validate()?;
        let (m, k) = (config.ap_count, config.user_count);
        if beta.dim() != (m, k) {
            return Err(Error::ShapeMismatch(format!(
                "beta is {:?}, expected ({m}, {k})",
                beta.dim()
            )));
        }
        if beta.iter().any(|&b| !(b >= 0.0) || !b.is_finite()) {
            return Err(Error::InvalidConfig("beta must be finite and non-negative".into()));
        }
        let mut pilot_of = vec![usize::MAX; k];
        for (g, group) in pilot_groups.iter().enumerate() {
            for &u in group {
                if u >= k || pilot_of[u] != usize::MAX {
                    return Err(Error::InvalidConfig(
                        "pilot groups must partition the users".into(),
                    ));
                }
                pilot_of[u] = g;
            }
        }
        if pilot_of.contains(&usize::MAX) || pilot_groups.len() != config.tau_p {
            return Err(Error::InvalidConfig(
                "pilot groups must partition the users into tau_p groups".into(),
            ));
        }
        let pilot_power = config.pilot_power_w.to_vec(k);
        let gamma =
            channel_estimate_quality(&beta, &pilot_groups, &pilot_power, config.tau_p, config.noise_w);
        Ok(Self {
            ap_xy,
            user_xy,
            beta,
            gamma,
            pilot_groups,
            pilot_of,
            config,
        })
    }

    pub fn ap_count(&self) -> usize {
        self.config.ap_count
    }

    pub fn user_count(&self) -> usize {
        self.config.user_count
    }

    /// Users sharing user `k`'s pilot, excluding `k`.
    pub fn co_pilot_users(&self, k: usize) -> impl Iterator<Item = usize> + '_ {
        self.pilot_groups[self.pilot_of[k]]
            .iter()
            .copied()
            .filter(move |&u| u != k)
    }

    pub fn to_record(&self) -> ScenarioRecord {
        let (m, k) = self.beta.dim();
        ScenarioRecord {
            ap_xy: self.ap_xy.clone(),
            user_xy: self.user_xy.clone(),
            beta_db: (0..m)
                .map(|ap| (0..k).map(|u| 10.0 * self.beta[[ap, u]].log10()).collect())
                .collect(),
            pilot_groups: self.pilot_groups.clone(),
            shadowing_model: self.config.shadowing.model_name().to_string(),
            config: self.config.clone(),
        }
    }

    pub fn from_record(record: &ScenarioRecord) -> Result<Self> {
        let m = record.beta_db.len();
        let k = record.beta_db.first().map_or(0, Vec::len);
        if record.beta_db.iter().any(|row| row.len() != k) {
            return Err(Error::ShapeMismatch("ragged beta_db".into()));
        }
        let beta = Array2::from_shape_fn((m, k), |(ap, u)| {
            10f64.powf(record.beta_db[ap][u] / 10.0)
        });
        Self::from_parts(
            record.config.clone(),
            record.ap_xy.clone(),
            record.user_xy.clone(),
            beta,
            record.pilot_groups.clone(),
        )
    }
}

/// JSON form of a drop for replay and cross-implementation comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioRecord {
    pub ap_xy: Vec<Point>,
    pub user_xy: Vec<Point>,
    pub beta_db: Vec<Vec<f64>>,
    pub pilot_groups: Vec<Vec<usize>>,
    pub shadowing_model: String,
    pub config: ScenarioConfig,
}
