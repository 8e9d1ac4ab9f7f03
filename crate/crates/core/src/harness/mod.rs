//! Experiment orchestration: configuration, single runs, seed sweeps and
//! summaries. Output formats live in [`output`], validation suites in
//! [`validate`].

pub mod output;
pub mod validate;

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;

use crate::bandit::{run, AlgorithmConfig, AlgorithmKind, OfulParams, Trajectory};
use crate::env::{parse_key_values, ArmSetKind, EnvConfig, EnvSnapshot};
use crate::error::{Error, Result};
use crate::partition::{Partition, PartitionClass};
use crate::rng::{self, RNG_NAME};
use crate::selection::SelectorKind;
use crate::stats;

/// Everything needed to reproduce a run, as a flat `key = value` map.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub d: usize,
    pub d0: usize,
    pub sigma: f64,
    pub horizon: usize,
    pub algorithm: AlgorithmKind,
    pub partition_class: PartitionClass,
    pub selector: SelectorKind,
    /// Class searched by model selection; the environment class when unset.
    pub selector_class: Option<PartitionClass>,
    pub arm_set: ArmSetKind,
    pub eps0: Option<f64>,
    pub theta_scale: f64,
    pub seed: u64,
    pub seeds: Vec<u64>,
    pub t1: Option<usize>,
    pub t2: Option<usize>,
    pub stride: Option<usize>,
    pub lasso_lambda: Option<f64>,
    pub ridge_lambda: f64,
    pub delta: Option<f64>,
    pub theta_norm_bound: Option<f64>,
    pub candidates: usize,
    pub safety_c: f64,
    pub parallelism: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            d: 10,
            d0: 3,
            sigma: 0.1,
            horizon: 1000,
            algorithm: AlgorithmKind::Emc,
            partition_class: PartitionClass::NonCrossing,
            selector: SelectorKind::Greedy,
            selector_class: None,
            arm_set: ArmSetKind::Sphere,
            eps0: None,
            theta_scale: 1.0,
            seed: 0,
            seeds: vec![0],
            t1: None,
            t2: None,
            stride: None,
            lasso_lambda: None,
            ridge_lambda: 1.0,
            delta: None,
            theta_norm_bound: None,
            candidates: crate::bandit::DEFAULT_CANDIDATES,
            safety_c: crate::bandit::DEFAULT_SAFETY_C,
            parallelism: 1,
        }
    }
}

fn parse_field<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::config(key, format!("cannot parse {value:?}")))
}

fn parse_optional<T: std::str::FromStr>(key: &str, value: &str) -> Result<Option<T>> {
    match value.trim() {
        "" | "none" | "auto" | "default" => Ok(None),
        v => parse_field(key, v).map(Some),
    }
}

/// `a..b` (exclusive), `a..=b`, or a comma list.
pub fn parse_seeds(value: &str) -> Result<Vec<u64>> {
    let v = value.trim();
    let bad = || Error::config("seeds", format!("cannot parse {value:?}"));
    if let Some((a, b)) = v.split_once("..=") {
        let (a, b): (u64, u64) = (
            a.trim().parse().map_err(|_| bad())?,
            b.trim().parse().map_err(|_| bad())?,
        );
        return Ok((a..=b).collect());
    }
    if let Some((a, b)) = v.split_once("..") {
        let (a, b): (u64, u64) = (
            a.trim().parse().map_err(|_| bad())?,
            b.trim().parse().map_err(|_| bad())?,
        );
        return Ok((a..b).collect());
    }
    v.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse().map_err(|_| bad()))
        .collect()
}

fn show_opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map_or_else(|| "auto".to_string(), ToString::to_string)
}

impl ExperimentConfig {
    /// Sets one key. Unknown keys and unparsable values are config errors
    /// naming the key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim();
        match key {
            "d" => self.d = parse_field(key, value)?,
            "d0" => self.d0 = parse_field(key, value)?,
            "sigma" => self.sigma = parse_field(key, value)?,
            "T" | "horizon" => self.horizon = parse_field("T", value)?,
            "algorithm" => self.algorithm = value.parse().map_err(|e: Error| Error::config(key, e.to_string()))?,
            "class" | "partition_class" => {
                self.partition_class = value
                    .parse()
                    .map_err(|e: Error| Error::config("class", e.to_string()))?
            }
            "selector" => self.selector = value.parse().map_err(|e: Error| Error::config(key, e.to_string()))?,
            "selector_class" => {
                self.selector_class = match value.trim() {
                    "" | "none" | "auto" | "default" => None,
                    v => Some(v.parse().map_err(|e: Error| Error::config(key, e.to_string()))?),
                }
            }
            "arm_set" => self.arm_set = value.parse().map_err(|e: Error| Error::config(key, e.to_string()))?,
            "eps0" => self.eps0 = parse_optional(key, value)?,
            "theta_scale" => self.theta_scale = parse_field(key, value)?,
            "seed" => self.seed = parse_field(key, value)?,
            "seeds" => self.seeds = parse_seeds(value)?,
            "t1" => self.t1 = parse_optional(key, value)?,
            "t2" => self.t2 = parse_optional(key, value)?,
            "stride" => self.stride = parse_optional(key, value)?,
            "lasso_lambda" => self.lasso_lambda = parse_optional(key, value)?,
            "ridge_lambda" => self.ridge_lambda = parse_field(key, value)?,
            "delta" => self.delta = parse_optional(key, value)?,
            "theta_norm_bound" => self.theta_norm_bound = parse_optional(key, value)?,
            "candidates" | "candidate_arms_per_round" => {
                self.candidates = parse_field("candidate_arms_per_round", value)?
            }
            "safety_c" => self.safety_c = parse_field(key, value)?,
            "parallelism" => self.parallelism = parse_field(key, value)?,
            _ => return Err(Error::config(key, "unknown key")),
        }
        Ok(())
    }

    /// Applies `(key, value)` pairs in order; later pairs win.
    pub fn apply<'a, I>(&mut self, pairs: I) -> Result<()>
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        for (k, v) in pairs {
            self.set(k, v)?;
        }
        Ok(())
    }

    /// Defaults overridden by the file contents.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        for line in text.lines() {
            let single = parse_key_values(line)?;
            for (k, v) in &single {
                cfg.set(k, v)?;
            }
        }
        Ok(cfg)
    }

    pub fn to_map(&self) -> BTreeMap<&'static str, String> {
        let seeds: Vec<String> = self.seeds.iter().map(u64::to_string).collect();
        BTreeMap::from([
            ("d", self.d.to_string()),
            ("d0", self.d0.to_string()),
            ("sigma", self.sigma.to_string()),
            ("T", self.horizon.to_string()),
            ("algorithm", self.algorithm.to_string()),
            ("class", self.partition_class.to_string()),
            ("selector", self.selector.to_string()),
            ("selector_class", show_opt(&self.selector_class)),
            ("arm_set", self.arm_set.to_string()),
            ("eps0", show_opt(&self.eps0)),
            ("theta_scale", self.theta_scale.to_string()),
            ("seed", self.seed.to_string()),
            ("seeds", seeds.join(",")),
            ("t1", show_opt(&self.t1)),
            ("t2", show_opt(&self.t2)),
            ("stride", show_opt(&self.stride)),
            ("lasso_lambda", show_opt(&self.lasso_lambda)),
            ("ridge_lambda", self.ridge_lambda.to_string()),
            ("delta", show_opt(&self.delta)),
            ("theta_norm_bound", show_opt(&self.theta_norm_bound)),
            ("candidate_arms_per_round", self.candidates.to_string()),
            ("safety_c", self.safety_c.to_string()),
            ("parallelism", self.parallelism.to_string()),
        ])
    }

    pub fn to_text(&self) -> String {
        self.to_map().iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    pub fn stride(&self) -> usize {
        self.stride.unwrap_or((self.horizon / 1000).max(1))
    }

    pub fn env_config(&self, seed: u64) -> EnvConfig {
        EnvConfig {
            d: self.d,
            d0: self.d0,
            partition_class: self.partition_class,
            sigma: self.sigma,
            arm_set: self.arm_set,
            eps0: self.eps0,
            theta_scale: self.theta_scale,
            seed,
        }
    }

    pub fn algorithm_config(&self) -> AlgorithmConfig {
        AlgorithmConfig {
            algorithm: self.algorithm,
            t1: self.t1,
            t2: self.t2,
            d0: self.d0,
            partition_class: self.selector_class.unwrap_or(self.partition_class),
            selector: self.selector,
            lasso_lambda: self.lasso_lambda,
            oful: OfulParams {
                ridge_lambda: self.ridge_lambda,
                delta: self.delta,
                theta_norm_bound: self.theta_norm_bound,
            },
            candidate_arms_per_round: self.candidates,
            eps0: self.eps0,
            safety_c: self.safety_c,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.env_config(self.seed).validate()?;
        self.algorithm_config().validate(self.d, self.horizon)?;
        if self.stride == Some(0) {
            return Err(Error::config("stride", "must be at least 1"));
        }
        if self.parallelism == 0 {
            return Err(Error::config("parallelism", "must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRecord {
    pub config: ExperimentConfig,
    pub seed: u64,
    pub algorithm: AlgorithmKind,
    pub selected_partition: Option<Partition>,
    pub true_partition: Partition,
    pub phase_boundary: usize,
    /// Rounds at which the cumulative regret was sampled.
    pub t: Vec<usize>,
    pub cumulative_regret: Vec<f64>,
    /// `‖θ̂ − θ⋆‖` for the estimate the final phase used.
    pub estimate_error: Option<f64>,
    pub wall_time_ms: u128,
    pub rng: String,
    pub warnings: Vec<String>,
    pub env_snapshot: String,
}

impl ExperimentRecord {
    pub fn final_regret(&self) -> f64 {
        self.cumulative_regret.last().copied().unwrap_or(0.0)
    }

    pub fn recovered_truth(&self) -> bool {
        self.selected_partition.as_ref() == Some(&self.true_partition)
    }
}

/// Samples at `stride, 2·stride, …`, always ending at the horizon, giving
/// `ceil(T/stride)` points.
pub fn sample_series(cumulative: &[f64], stride: usize) -> (Vec<usize>, Vec<f64>) {
    let horizon = cumulative.len();
    let stride = stride.max(1);
    let points = horizon.div_ceil(stride);
    let t: Vec<usize> = (1..=points).map(|i| (i * stride).min(horizon)).collect();
    let v = t.iter().map(|&ti| cumulative[ti - 1]).collect();
    (t, v)
}

fn record_from(
    config: &ExperimentConfig,
    seed: u64,
    snapshot: String,
    true_partition: Partition,
    traj: &Trajectory,
    theta_star: &nalgebra::DVector<f64>,
    wall_time_ms: u128,
) -> ExperimentRecord {
    let (t, cumulative_regret) = sample_series(&traj.cumulative_regret(), config.stride());
    ExperimentRecord {
        config: config.clone(),
        seed,
        algorithm: traj.algorithm,
        selected_partition: traj.selected_partition.clone(),
        true_partition,
        phase_boundary: traj.phase_boundary,
        t,
        cumulative_regret,
        estimate_error: traj.theta_hat.as_ref().map(|th| (th - theta_star).norm()),
        wall_time_ms,
        rng: RNG_NAME.to_string(),
        warnings: traj.warnings.clone(),
        env_snapshot: snapshot,
    }
}

/// Environment from stream 0 of `seed`, algorithm driven by stream 1.
pub fn run_seed(config: &ExperimentConfig, seed: u64) -> Result<ExperimentRecord> {
    config.validate()?;
    let start = Instant::now();
    let env = config.env_config(seed).generate()?;
    let snapshot = EnvSnapshot::capture(&env, config.d0, config.partition_class, seed).to_text();
    let mut run_rng = rng::stream(seed, rng::RUN_STREAM);
    let traj = run(&env, config.horizon, &config.algorithm_config(), &mut run_rng)?;
    let elapsed = start.elapsed().as_millis();
    Ok(record_from(
        config,
        seed,
        snapshot,
        env.true_partition.clone(),
        &traj,
        &env.theta_star,
        elapsed,
    ))
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentRecord> {
    run_seed(config, config.seed)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    /// In seed order.
    pub records: Vec<ExperimentRecord>,
    pub failures: Vec<(u64, Error)>,
}

/// One run per seed on a pool of `parallelism` threads. Output order follows
/// `seeds` and does not depend on the thread count.
pub fn sweep(config: &ExperimentConfig, seeds: &[u64], parallelism: usize) -> Result<SweepResult> {
    if seeds.is_empty() {
        return Err(Error::Argument("seed list is empty".into()));
    }
    if parallelism == 0 {
        return Err(Error::config("parallelism", "must be at least 1"));
    }
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism)
        .build()
        .map_err(|e| Error::Argument(format!("thread pool: {e}")))?;
    let outcomes: Vec<(u64, Result<ExperimentRecord>)> =
        pool.install(|| seeds.par_iter().map(|&s| (s, run_seed(config, s))).collect());
    let mut result = SweepResult {
        records: Vec::new(),
        failures: Vec::new(),
    };
    for (seed, outcome) in outcomes {
        match outcome {
            Ok(r) => result.records.push(r),
            Err(e) => result.failures.push((seed, e)),
        }
    }
    Ok(result)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlgorithmSummary {
    pub algorithm: String,
    pub runs: usize,
    pub final_median: f64,
    pub final_q25: f64,
    pub final_q75: f64,
    pub final_mean: f64,
    pub recovery_rate: Option<f64>,
}

/// Final-regret statistics per algorithm, in name order.
pub fn summarize(records: &[ExperimentRecord]) -> Vec<AlgorithmSummary> {
    let mut groups: BTreeMap<String, Vec<&ExperimentRecord>> = BTreeMap::new();
    for r in records {
        groups.entry(r.algorithm.to_string()).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|(algorithm, rs)| {
            let finals: Vec<f64> = rs.iter().map(|r| r.final_regret()).collect();
            let selecting: Vec<&&ExperimentRecord> = rs.iter().filter(|r| r.selected_partition.is_some()).collect();
            AlgorithmSummary {
                algorithm,
                runs: rs.len(),
                final_median: stats::median(&finals),
                final_q25: stats::quantile(&finals, 0.25),
                final_q75: stats::quantile(&finals, 0.75),
                final_mean: finals.iter().sum::<f64>() / finals.len() as f64,
                recovery_rate: (!selecting.is_empty())
                    .then(|| selecting.iter().filter(|r| r.recovered_truth()).count() as f64 / selecting.len() as f64),
            }
        })
        .collect()
}

pub fn format_summary(summaries: &[AlgorithmSummary]) -> String {
    let mut out = String::from("algorithm,runs,median,q25,q75,mean,recovery_rate\n");
    for s in summaries {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            s.algorithm,
            s.runs,
            s.final_median,
            s.final_q25,
            s.final_q75,
            s.final_mean,
            s.recovery_rate.map_or_else(String::new, |r| r.to_string())
        ));
    }
    out
}
