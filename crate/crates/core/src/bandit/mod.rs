//! Sequential algorithms.
//!
//! Every run draws exploration arms, candidates and noise from the single
//! stream it is handed, so a trajectory is a pure function of the environment,
//! horizon, configuration and stream.

pub mod lasso;
pub mod oful;

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::env::{ArmSet, BanditEnvironment};
use crate::error::{Error, Result};
use crate::partition::{Partition, PartitionClass};
use crate::selection::{select, SelectorKind};
use crate::subspace::{DesignSample, SubspaceModel};

use lasso::{lasso_gram, prefix_sums, suffix_sums, LASSO_MAX_SWEEPS, LASSO_TOL};
use oful::Oful;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AlgorithmKind {
    Emc,
    EmcWs,
    OfulFull,
    EstcLasso,
}

impl AlgorithmKind {
    pub const ALL: [AlgorithmKind; 4] = [
        AlgorithmKind::Emc,
        AlgorithmKind::EmcWs,
        AlgorithmKind::OfulFull,
        AlgorithmKind::EstcLasso,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AlgorithmKind::Emc => "EMC",
            AlgorithmKind::EmcWs => "EMC_WS",
            AlgorithmKind::OfulFull => "OFUL_FULL",
            AlgorithmKind::EstcLasso => "ESTC_LASSO",
        }
    }
}

impl fmt::Display for AlgorithmKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AlgorithmKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_uppercase().replace('-', "_");
        match key.as_str() {
            "EMC" => Ok(AlgorithmKind::Emc),
            "EMC_WS" | "EMCWS" => Ok(AlgorithmKind::EmcWs),
            "OFUL_FULL" | "OFUL" => Ok(AlgorithmKind::OfulFull),
            "ESTC_LASSO" | "ESTC" | "LASSO" => Ok(AlgorithmKind::EstcLasso),
            _ => Err(Error::Argument(format!("unknown algorithm {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OfulParams {
    pub ridge_lambda: f64,
    /// Defaults to `1/T`.
    pub delta: Option<f64>,
    /// Defaults to `‖θ⋆‖` of the environment.
    pub theta_norm_bound: Option<f64>,
}

impl Default for OfulParams {
    fn default() -> Self {
        OfulParams {
            ridge_lambda: 1.0,
            delta: None,
            theta_norm_bound: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlgorithmConfig {
    pub algorithm: AlgorithmKind,
    pub t1: Option<usize>,
    pub t2: Option<usize>,
    pub d0: usize,
    pub partition_class: PartitionClass,
    pub selector: SelectorKind,
    pub lasso_lambda: Option<f64>,
    pub oful: OfulParams,
    pub candidate_arms_per_round: usize,
    /// Separation used by the default `t2`; falls back to the environment's.
    pub eps0: Option<f64>,
    pub safety_c: f64,
}

pub const DEFAULT_CANDIDATES: usize = 256;
pub const DEFAULT_SAFETY_C: f64 = 2.0;

impl AlgorithmConfig {
    pub fn new(algorithm: AlgorithmKind, d0: usize, partition_class: PartitionClass) -> Self {
        AlgorithmConfig {
            algorithm,
            t1: None,
            t2: None,
            d0,
            partition_class,
            selector: SelectorKind::Greedy,
            lasso_lambda: None,
            oful: OfulParams::default(),
            candidate_arms_per_round: DEFAULT_CANDIDATES,
            eps0: None,
            safety_c: DEFAULT_SAFETY_C,
        }
    }

    pub fn validate(&self, d: usize, horizon: usize) -> Result<()> {
        if horizon == 0 {
            return Err(Error::config("T", "must be at least 1"));
        }
        if self.d0 == 0 || self.d0 > d {
            return Err(Error::config("d0", format!("must lie in [1, d={d}]")));
        }
        for (field, value) in [("t1", self.t1), ("t2", self.t2)] {
            if let Some(t) = value {
                if t == 0 || t > horizon {
                    return Err(Error::config(field, format!("must lie in [1, T={horizon}]")));
                }
            }
        }
        if self.candidate_arms_per_round == 0 {
            return Err(Error::config("candidate_arms_per_round", "must be at least 1"));
        }
        if !(self.oful.ridge_lambda > 0.0 && self.oful.ridge_lambda.is_finite()) {
            return Err(Error::config("ridge_lambda", "must be positive"));
        }
        if let Some(delta) = self.oful.delta {
            if !(delta > 0.0 && delta < 1.0) {
                return Err(Error::config("delta", "must lie in (0, 1)"));
            }
        }
        if let Some(s) = self.oful.theta_norm_bound {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(Error::config("theta_norm_bound", "must be nonnegative"));
            }
        }
        if let Some(l) = self.lasso_lambda {
            if !(l >= 0.0 && l.is_finite()) {
                return Err(Error::config("lasso_lambda", "must be nonnegative"));
            }
        }
        if !(self.safety_c > 0.0 && self.safety_c.is_finite()) {
            return Err(Error::config("safety_c", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Round {
    pub t: usize,
    pub arm: DVector<f64>,
    pub reward: f64,
    pub regret: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub algorithm: AlgorithmKind,
    pub rounds: Vec<Round>,
    pub selected_partition: Option<Partition>,
    /// Last round of the exploration phase; 0 when there is none.
    pub phase_boundary: usize,
    /// Estimate the commit or optimism phase started from.
    pub theta_hat: Option<DVector<f64>>,
    pub warnings: Vec<String>,
}

impl Trajectory {
    fn new(algorithm: AlgorithmKind, horizon: usize) -> Self {
        Trajectory {
            algorithm,
            rounds: Vec::with_capacity(horizon),
            selected_partition: None,
            phase_boundary: 0,
            theta_hat: None,
            warnings: Vec::new(),
        }
    }

    pub fn horizon(&self) -> usize {
        self.rounds.len()
    }

    pub fn cumulative_regret(&self) -> Vec<f64> {
        let mut acc = 0.0;
        self.rounds
            .iter()
            .map(|r| {
                acc += r.regret;
                acc
            })
            .collect()
    }

    pub fn total_regret(&self) -> f64 {
        self.rounds.iter().map(|r| r.regret).sum()
    }

    fn play<R: Rng + ?Sized>(&mut self, env: &BanditEnvironment, arm: DVector<f64>, rng: &mut R) -> f64 {
        let reward = env.pull(&arm, rng);
        let regret = env.regret(&arm);
        self.rounds.push(Round {
            t: self.rounds.len() + 1,
            arm,
            reward,
            regret,
        });
        reward
    }
}

fn require_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Argument(format!("{name}={v} must be positive")))
    }
}

fn clamp_phase(value: f64, horizon: usize) -> usize {
    let upper = horizon.saturating_sub(1).max(1);
    if value.is_nan() || value >= upper as f64 {
        upper
    } else {
        (value.ceil() as usize).clamp(1, upper)
    }
}

/// Exploration length
/// `R^{-2/3} σ^{2/3} C_min^{-1/3} K_x^{1/3} d0^{1/3} T^{2/3} ln(dT)^{1/3}`,
/// rounded up and clamped to `[1, T−1]`.
pub fn t1_default(horizon: usize, d0: usize, d: usize, sigma: f64, c_min: f64, k_x: f64, r_max: f64) -> Result<usize> {
    require_positive("T", horizon as f64)?;
    require_positive("d0", d0 as f64)?;
    require_positive("d", d as f64)?;
    require_positive("sigma", sigma)?;
    require_positive("c_min", c_min)?;
    require_positive("k_x", k_x)?;
    require_positive("r_max", r_max)?;
    let t = horizon as f64;
    let value = r_max.powf(-2.0 / 3.0)
        * sigma.powf(2.0 / 3.0)
        * c_min.powf(-1.0 / 3.0)
        * k_x.cbrt()
        * (d0 as f64).cbrt()
        * t.powf(2.0 / 3.0)
        * ((d as f64) * t).ln().cbrt();
    Ok(clamp_phase(value, horizon))
}

/// Exploration length `c·σ²·K_x²·d0·ln(dT) / (C_min²·ε0²)`, rounded up and
/// clamped to `[1, T−1]`.
#[allow(clippy::too_many_arguments)]
pub fn t2_default(
    horizon: usize,
    d0: usize,
    d: usize,
    sigma: f64,
    c_min: f64,
    k_x: f64,
    eps0: f64,
    safety_c: f64,
) -> Result<usize> {
    require_positive("T", horizon as f64)?;
    require_positive("d0", d0 as f64)?;
    require_positive("d", d as f64)?;
    require_positive("sigma", sigma)?;
    require_positive("c_min", c_min)?;
    require_positive("k_x", k_x)?;
    require_positive("eps0", eps0)?;
    require_positive("safety_c", safety_c)?;
    let value =
        safety_c * sigma * sigma * k_x * k_x * d0 as f64 * ((d * horizon) as f64).ln() / (c_min * c_min * eps0 * eps0);
    Ok(clamp_phase(value, horizon))
}

fn check_phase(phase: usize, horizon: usize) -> Result<()> {
    if phase == 0 || phase >= horizon {
        Err(Error::InvalidPhase { phase, horizon })
    } else {
        Ok(())
    }
}

fn resolve_t1(env: &BanditEnvironment, horizon: usize, cfg: &AlgorithmConfig) -> Result<usize> {
    let t1 = match cfg.t1 {
        Some(t) => t,
        None => t1_default(horizon, cfg.d0, env.d, env.sigma, env.c_min, env.k_x, env.r_max)
            .map_err(|e| Error::config("t1", format!("no default available: {e}")))?,
    };
    check_phase(t1, horizon)?;
    Ok(t1)
}

fn resolve_t2(env: &BanditEnvironment, horizon: usize, cfg: &AlgorithmConfig) -> Result<usize> {
    let t2 = match cfg.t2 {
        Some(t) => t,
        None => {
            let eps0 = cfg
                .eps0
                .or(env.eps0)
                .ok_or_else(|| Error::config("t2", "set t2 or eps0"))?;
            t2_default(
                horizon,
                cfg.d0,
                env.d,
                env.sigma,
                env.c_min,
                env.k_x,
                eps0,
                cfg.safety_c,
            )
            .map_err(|e| Error::config("t2", format!("no default available: {e}")))?
        }
    };
    check_phase(t2, horizon)?;
    Ok(t2)
}

fn explore<R: Rng + ?Sized>(
    env: &BanditEnvironment,
    rounds: usize,
    traj: &mut Trajectory,
    rng: &mut R,
) -> Result<DesignSample> {
    let mut arms = Vec::with_capacity(rounds);
    let mut rewards = Vec::with_capacity(rounds);
    for _ in 0..rounds {
        let x = env.sample_exploratory(rng);
        rewards.push(traj.play(env, x.clone(), rng));
        arms.push(x);
    }
    DesignSample::from_rows(&arms, rewards)
}

fn commit<R: Rng + ?Sized>(
    env: &BanditEnvironment,
    horizon: usize,
    theta_hat: &DVector<f64>,
    traj: &mut Trajectory,
    rng: &mut R,
) {
    let arm = env.arm_set.maximize(theta_hat);
    while traj.rounds.len() < horizon {
        traj.play(env, arm.clone(), rng);
    }
}

fn check_env(env: &BanditEnvironment, horizon: usize, cfg: &AlgorithmConfig) -> Result<()> {
    cfg.validate(env.d, horizon)
}

/// Explore with the exploratory distribution for `t1` rounds, select a model,
/// then play the greedy arm for `θ̂` until the horizon.
pub fn run_emc<R: Rng + ?Sized>(
    env: &BanditEnvironment,
    horizon: usize,
    cfg: &AlgorithmConfig,
    rng: &mut R,
) -> Result<Trajectory> {
    check_env(env, horizon, cfg)?;
    let t1 = resolve_t1(env, horizon, cfg)?;
    let mut traj = Trajectory::new(AlgorithmKind::Emc, horizon);
    let data = explore(env, t1, &mut traj, rng)?;
    let selection = select(&data, cfg.d0, cfg.partition_class, cfg.selector)?;
    let theta_hat = selection.fit.theta_hat;
    commit(env, horizon, &theta_hat, &mut traj, rng);
    traj.phase_boundary = t1;
    traj.selected_partition = Some(selection.model.partition().clone());
    traj.theta_hat = Some(theta_hat);
    Ok(traj)
}

/// Features used by the optimism phase.
enum FeatureMap {
    Identity,
    /// Orthonormal block coordinates `x ↦ (Σ_{i∈B} x_i / √|B|)_B`.
    Blocks {
        model: SubspaceModel,
        inv_sqrt: DVector<f64>,
    },
}

impl FeatureMap {
    fn blocks(model: SubspaceModel) -> Self {
        let inv_sqrt = DVector::from_iterator(model.k(), model.block_sizes().iter().map(|&s| 1.0 / (s as f64).sqrt()));
        FeatureMap::Blocks { model, inv_sqrt }
    }

    fn dim(&self, d: usize) -> usize {
        match self {
            FeatureMap::Identity => d,
            FeatureMap::Blocks { model, .. } => model.k(),
        }
    }

    fn features(&self, x: &DVector<f64>) -> DVector<f64> {
        match self {
            FeatureMap::Identity => x.clone(),
            FeatureMap::Blocks { model, inv_sqrt } => model.reduce(x).component_mul(inv_sqrt),
        }
    }

    fn feature_matrix(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        match self {
            FeatureMap::Identity => x.clone(),
            FeatureMap::Blocks { model, inv_sqrt } => {
                let mut f = DMatrix::zeros(model.k(), x.ncols());
                for (i, &b) in model.block_index().iter().enumerate() {
                    for j in 0..x.ncols() {
                        f[(b, j)] += inv_sqrt[b] * x[(i, j)];
                    }
                }
                f
            }
        }
    }

    fn ambient(&self, coef: &DVector<f64>) -> DVector<f64> {
        match self {
            FeatureMap::Identity => coef.clone(),
            FeatureMap::Blocks { model, inv_sqrt } => model.expand(&coef.component_mul(inv_sqrt)),
        }
    }
}

const ASCENT_ITERS: usize = 25;

/// Alternating maximization of `⟨φ(x), θ⟩` over arms `x` and ellipsoid points
/// `θ`. Each half-step is exact, so the UCB of the iterate never decreases.
fn ascend_ucb(oful: &Oful, map: &FeatureMap, arms: &ArmSet, start: DVector<f64>) -> DVector<f64> {
    let mut x = start;
    let mut score = oful.ucb(&map.features(&x));
    for _ in 0..ASCENT_ITERS {
        let Some(theta) = oful.optimistic_theta(&map.features(&x)) else {
            break;
        };
        let next = arms.maximize(&map.ambient(&theta));
        let next_score = oful.ucb(&map.features(&next));
        if next_score <= score * (1.0 + 1e-12) + 1e-15 {
            break;
        }
        x = next;
        score = next_score;
    }
    x
}

fn optimism_phase<R: Rng + ?Sized>(
    env: &BanditEnvironment,
    horizon: usize,
    cfg: &AlgorithmConfig,
    map: &FeatureMap,
    traj: &mut Trajectory,
    rng: &mut R,
) -> DVector<f64> {
    let k = map.dim(env.d);
    let delta = cfg.oful.delta.unwrap_or(1.0 / horizon as f64);
    let bound = cfg.oful.theta_norm_bound.unwrap_or_else(|| env.theta_star.norm());
    let mut oful = Oful::new(k, cfg.oful.ridge_lambda, delta, bound, env.sigma);
    let finite = match &env.arm_set {
        ArmSet::Finite(arms) => Some(arms.clone()),
        _ => None,
    };
    let finite_features = finite
        .as_ref()
        .map(|arms| DMatrix::from_columns(&arms.iter().map(|a| map.features(a)).collect::<Vec<_>>()));

    while traj.rounds.len() < horizon {
        let (arm, phi) = match (&finite, &finite_features) {
            (Some(arms), Some(feats)) => {
                let j = oful.best_column(feats);
                (arms[j].clone(), feats.column(j).into_owned())
            }
            _ => {
                let sampled = env.arm_set.sample_candidates(env.d, cfg.candidate_arms_per_round, rng);
                let sampled_feats = map.feature_matrix(&sampled);
                let greedy = env.arm_set.maximize(&map.ambient(oful.theta_hat()));
                let mut best: Option<(f64, DVector<f64>, DVector<f64>)> = None;
                let mut offer = |x: DVector<f64>, phi: DVector<f64>| {
                    let score = oful.ucb(&phi);
                    if best.as_ref().is_none_or(|b| score > b.0) {
                        best = Some((score, x, phi));
                    }
                };
                let mut starts = vec![greedy.clone()];
                if sampled.ncols() > 0 {
                    let j = oful.best_column(&sampled_feats);
                    let x = sampled.column(j).into_owned();
                    starts.push(x.clone());
                    offer(x, sampled_feats.column(j).into_owned());
                }
                for start in starts {
                    let refined = ascend_ucb(&oful, map, &env.arm_set, start);
                    let phi = map.features(&refined);
                    offer(refined, phi);
                }
                let phi = map.features(&greedy);
                offer(greedy, phi);
                let (_, x, phi) = best.expect("at least the greedy arm is offered");
                (x, phi)
            }
        };
        let reward = traj.play(env, arm, rng);
        oful.update(&phi, reward);
    }
    map.ambient(oful.theta_hat())
}

/// Explore for `t2` rounds, select a model, then run OFUL in the model's
/// reduced coordinates, starting from the ridge prior.
pub fn run_emc_ws<R: Rng + ?Sized>(
    env: &BanditEnvironment,
    horizon: usize,
    cfg: &AlgorithmConfig,
    rng: &mut R,
) -> Result<Trajectory> {
    check_env(env, horizon, cfg)?;
    let t2 = resolve_t2(env, horizon, cfg)?;
    let mut traj = Trajectory::new(AlgorithmKind::EmcWs, horizon);
    let data = explore(env, t2, &mut traj, rng)?;
    let selection = select(&data, cfg.d0, cfg.partition_class, cfg.selector)?;
    traj.phase_boundary = t2;
    traj.selected_partition = Some(selection.model.partition().clone());
    let map = FeatureMap::blocks(selection.model);
    traj.theta_hat = Some(optimism_phase(env, horizon, cfg, &map, &mut traj, rng));
    Ok(traj)
}

/// OFUL in the ambient coordinates, with no exploration phase.
pub fn run_oful_full<R: Rng + ?Sized>(
    env: &BanditEnvironment,
    horizon: usize,
    cfg: &AlgorithmConfig,
    rng: &mut R,
) -> Result<Trajectory> {
    if horizon == 0 {
        return Err(Error::config("T", "must be at least 1"));
    }
    let mut relaxed = cfg.clone();
    relaxed.d0 = relaxed.d0.clamp(1, env.d);
    relaxed.validate(env.d, horizon)?;
    let mut traj = Trajectory::new(AlgorithmKind::OfulFull, horizon);
    traj.theta_hat = Some(optimism_phase(
        env,
        horizon,
        &relaxed,
        &FeatureMap::Identity,
        &mut traj,
        rng,
    ));
    Ok(traj)
}

/// Default penalty `2σ·√(2·ln(2d)/t1)`.
pub fn lasso_lambda_default(sigma: f64, d: usize, t1: usize) -> f64 {
    2.0 * sigma * (2.0 * (2.0 * d as f64).ln() / t1 as f64).sqrt()
}

/// Explore for `t1` rounds, fit a Lasso on prefix-sum features (sparse
/// differences of adjacent coordinates), then commit greedily.
pub fn run_estc_lasso<R: Rng + ?Sized>(
    env: &BanditEnvironment,
    horizon: usize,
    cfg: &AlgorithmConfig,
    rng: &mut R,
) -> Result<Trajectory> {
    check_env(env, horizon, cfg)?;
    let t1 = resolve_t1(env, horizon, cfg)?;
    let mut traj = Trajectory::new(AlgorithmKind::EstcLasso, horizon);
    let data = explore(env, t1, &mut traj, rng)?;
    let d = env.d;
    let mut u = DMatrix::zeros(t1, d);
    for (i, row) in data.x().row_iter().enumerate() {
        let pref = prefix_sums(&row.transpose());
        u.row_mut(i).copy_from(&pref.transpose());
    }
    let gram = u.tr_mul(&u);
    let uty = u.tr_mul(data.y());
    let lambda = cfg
        .lasso_lambda
        .unwrap_or_else(|| lasso_lambda_default(env.sigma, d, t1));
    let fit = lasso_gram(&gram, &uty, t1, lambda, LASSO_TOL, LASSO_MAX_SWEEPS);
    if !fit.converged {
        traj.warnings.push(format!(
            "ConvergenceWarning: lasso stopped after {} sweeps without reaching tolerance {LASSO_TOL:e}",
            fit.sweeps
        ));
    }
    let theta_hat = suffix_sums(&fit.coef);
    commit(env, horizon, &theta_hat, &mut traj, rng);
    traj.phase_boundary = t1;
    traj.theta_hat = Some(theta_hat);
    Ok(traj)
}

pub fn run<R: Rng + ?Sized>(
    env: &BanditEnvironment,
    horizon: usize,
    cfg: &AlgorithmConfig,
    rng: &mut R,
) -> Result<Trajectory> {
    match cfg.algorithm {
        AlgorithmKind::Emc => run_emc(env, horizon, cfg, rng),
        AlgorithmKind::EmcWs => run_emc_ws(env, horizon, cfg, rng),
        AlgorithmKind::OfulFull => run_oful_full(env, horizon, cfg, rng),
        AlgorithmKind::EstcLasso => run_estc_lasso(env, horizon, cfg, rng),
    }
}
