//! Statistical validation suites. Each suite measures a quantity over many
//! seeded trials and reports it against a fixed threshold.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};

use crate::bandit::{run_emc, run_emc_ws, t2_default, AlgorithmConfig, AlgorithmKind};
use crate::env::{random_partition, ArmSetKind, BanditEnvironment, EnvConfig};
use crate::error::{Error, Result};
use crate::partition::{count_partitions, enumerate_partitions, PartitionClass};
use crate::rng::{self, standard_normal};
use crate::selection::{model_pool, select, select_bruteforce, SelectorKind};
use crate::stats::{log_log_slope, median};
use crate::subspace::{rip_constant, DesignSample, SubspaceModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Suite {
    Counts,
    Rip,
    Selection,
    Lemma1,
    RegretSlope,
}

impl Suite {
    pub const ALL: [Suite; 5] = [
        Suite::Counts,
        Suite::Rip,
        Suite::Selection,
        Suite::Lemma1,
        Suite::RegretSlope,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Counts => "counts",
            Suite::Rip => "rip",
            Suite::Selection => "selection",
            Suite::Lemma1 => "lemma1",
            Suite::RegretSlope => "regret_slope",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('-', "_");
        Suite::ALL
            .into_iter()
            .find(|suite| suite.name() == key || (key == "regret" && *suite == Suite::RegretSlope))
            .ok_or_else(|| Error::Argument(format!("unknown suite {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub measured: String,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool, measured: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            passed,
            measured: measured.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub suite: Suite,
    pub checks: Vec<Check>,
    pub elapsed_ms: u128,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            out.push_str(&format!(
                "{} {}/{}: {}\n",
                if c.passed { "PASS" } else { "FAIL" },
                self.suite,
                c.name,
                c.measured
            ));
        }
        out.push_str(&format!(
            "{} suite {} ({} checks, {} ms)\n",
            if self.passed() { "PASS" } else { "FAIL" },
            self.suite,
            self.checks.len(),
            self.elapsed_ms
        ));
        out
    }
}

/// Trial counts; the defaults are the full-size settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidateOptions {
    pub seeds: Option<usize>,
}

pub fn validate(suite: Suite, opts: &ValidateOptions) -> Result<Report> {
    let start = Instant::now();
    let checks = match suite {
        Suite::Counts => counts_checks(9)?,
        Suite::Rip => rip_checks(opts.seeds.unwrap_or(100))?,
        Suite::Selection => selection_checks(opts.seeds.unwrap_or(200))?,
        Suite::Lemma1 => lemma1_checks(opts.seeds.unwrap_or(100))?,
        Suite::RegretSlope => regret_checks(opts.seeds.unwrap_or(10))?,
    };
    Ok(Report {
        suite,
        checks,
        elapsed_ms: start.elapsed().as_millis(),
    })
}

// ---------------------------------------------------------------- counts

fn stirling_row(d: usize) -> Vec<u128> {
    let mut row = vec![1u128];
    for n in 1..=d {
        let mut next = vec![0u128; n + 1];
        for k in 1..=n {
            let stay = if k < row.len() { k as u128 * row[k] } else { 0 };
            next[k] = stay + row[k - 1];
        }
        row = next;
    }
    row
}

fn catalan(n: usize) -> u128 {
    let mut c = vec![1u128; n + 1];
    for m in 1..=n {
        c[m] = (0..m).map(|i| c[i] * c[m - 1 - i]).sum();
    }
    c[n]
}

/// Enumerated counts against closed forms for every class, `d ≤ max_d`.
pub fn counts_checks(max_d: usize) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let mut mismatches = Vec::new();
    for d in 1..=max_d {
        let stirling = stirling_row(d);
        for class in PartitionClass::ALL_CLASSES {
            let all = enumerate_partitions(d, class, d)?;
            let mut by_k = vec![0u128; d + 1];
            for p in &all {
                by_k[p.num_blocks()] += 1;
            }
            for k in 1..=d {
                let formula = count_partitions(d, k, class)?;
                let reference = match class {
                    PartitionClass::All => stirling[k],
                    _ => formula,
                };
                if by_k[k] != formula || formula != reference {
                    mismatches.push(format!("{class} d={d} k={k}: {} vs {formula}", by_k[k]));
                }
            }
            let total: u128 = by_k.iter().sum();
            let expected = match class {
                PartitionClass::All => stirling.iter().sum(),
                PartitionClass::NonCrossing | PartitionClass::NonNesting => catalan(d),
                PartitionClass::Interval => 1u128 << (d - 1),
            };
            if total != expected {
                mismatches.push(format!("{class} d={d}: total {total} vs {expected}"));
            }
        }
    }
    checks.push(Check::new(
        format!("per-block counts d<={max_d}"),
        mismatches.is_empty(),
        if mismatches.is_empty() {
            "all match".to_string()
        } else {
            mismatches.join("; ")
        },
    ));
    let spots = [
        ("S(4,2)", count_partitions(4, 2, PartitionClass::All)?, 7u128),
        (
            "C_4",
            (1..=4)
                .map(|k| count_partitions(4, k, PartitionClass::NonCrossing))
                .sum::<Result<u128>>()?,
            14,
        ),
        ("N(4,2)", count_partitions(4, 2, PartitionClass::NonNesting)?, 6),
    ];
    for (name, got, want) in spots {
        checks.push(Check::new(name, got == want, format!("{got} (expected {want})")));
    }
    Ok(checks)
}

// ---------------------------------------------------------------- rip

/// `δ` of `X/√n` (Gaussian rows) over two random `blocks`-block models.
pub fn rip_trial(n: usize, d: usize, blocks: usize, seed: u64) -> Result<f64> {
    let mut r = rng::stream(seed, 2);
    let models = vec![
        SubspaceModel::new(random_partition(d, blocks, PartitionClass::All, &mut r)?),
        SubspaceModel::new(random_partition(d, blocks, PartitionClass::All, &mut r)?),
    ];
    let scale = 1.0 / (n as f64).sqrt();
    let a = DMatrix::from_fn(n, d, |_, _| standard_normal(&mut r) * scale);
    rip_constant(&a, &models)
}

pub fn rip_deltas(n: usize, d: usize, blocks: usize, seeds: usize) -> Result<Vec<f64>> {
    (0..seeds as u64).map(|s| rip_trial(n, d, blocks, s)).collect()
}

fn rip_checks(seeds: usize) -> Result<Vec<Check>> {
    let deltas = rip_deltas(200, 20, 3, seeds)?;
    let pass = deltas.iter().filter(|&&v| v < 0.5).count();
    let rate = pass as f64 / seeds as f64;
    let mut checks = vec![Check::new(
        "delta<1/2 at n=200,d=20",
        rate >= 0.95,
        format!("{pass}/{seeds} below 0.5"),
    )];
    let medians: Vec<f64> = [50, 100, 200, 400]
        .iter()
        .map(|&n| rip_deltas(n, 20, 3, seeds).map(|v| median(&v)))
        .collect::<Result<_>>()?;
    let monotone = medians.windows(2).all(|w| w[1] < w[0]);
    checks.push(Check::new(
        "median delta decreasing in n",
        monotone,
        format!("medians at n=50,100,200,400: {medians:.4?}"),
    ));
    Ok(checks)
}

// ---------------------------------------------------------------- selection

/// Exhaustive selection over all partitions with at most `d0` blocks on a
/// Gaussian design. Returns `(‖X θ̂ − X θ⋆‖², pool size)`.
pub fn selection_trial(seed: u64, d: usize, d0: usize, n: usize, sigma: f64) -> Result<(f64, usize)> {
    let mut cfg = EnvConfig::new(d, d0, PartitionClass::All);
    cfg.sigma = sigma;
    cfg.seed = seed;
    let env = cfg.generate()?;
    let mut r = rng::stream(seed, 3);
    let x = DMatrix::from_fn(n, d, |_, _| standard_normal(&mut r));
    let mean = &x * &env.theta_star;
    let y = DVector::from_fn(n, |i, _| mean[i] + sigma * standard_normal(&mut r));
    let data = DesignSample::new(x.clone(), y)?;
    let pool = model_pool(d, d0, PartitionClass::All)?;
    let result = select_bruteforce(&data, &pool)?;
    let err = (&x * &result.fit.theta_hat - mean).norm_squared();
    Ok((err, pool.len()))
}

fn selection_checks(seeds: usize) -> Result<Vec<Check>> {
    let (d, d0, n, sigma) = (10, 3, 300, 0.1);
    let mut within = 0;
    let mut pool = 0;
    let mut errs = Vec::with_capacity(seeds);
    for s in 0..seeds as u64 {
        let (err, m) = selection_trial(s, d, d0, n, sigma)?;
        pool = m;
        let bound = 20.0 * sigma * sigma * (m as f64 / 0.05).ln();
        within += usize::from(err <= bound);
        errs.push(err);
    }
    let rate = within as f64 / seeds as f64;
    Ok(vec![Check::new(
        "prediction error <= 20 sigma^2 ln(M/0.05)",
        rate >= 0.95,
        format!(
            "{within}/{seeds} within bound, M={pool}, median error {:.4e}",
            median(&errs)
        ),
    )])
}

// ---------------------------------------------------------------- lemma1

fn explore_sample(env: &BanditEnvironment, rounds: usize, seed: u64, stream: u64) -> Result<DesignSample> {
    let mut r = rng::stream(seed, stream);
    let mut arms = Vec::with_capacity(rounds);
    let mut ys = Vec::with_capacity(rounds);
    for _ in 0..rounds {
        let x = env.sample_exploratory(&mut r);
        ys.push(env.pull(&x, &mut r));
        arms.push(x);
    }
    DesignSample::from_rows(&arms, ys)
}

/// `‖θ̂ − θ⋆‖` after `t1` exploration rounds and greedy selection.
pub fn lemma1_trial(seed: u64, t1: usize, d: usize, d0: usize, sigma: f64, class: PartitionClass) -> Result<f64> {
    let mut cfg = EnvConfig::new(d, d0, class);
    cfg.sigma = sigma;
    cfg.seed = seed;
    let env = cfg.generate()?;
    let data = explore_sample(&env, t1, seed, 4)?;
    let result = select(&data, d0, class, SelectorKind::Greedy)?;
    Ok((result.fit.theta_hat - &env.theta_star).norm())
}

/// Median estimation error at each `t1` and the fitted log-log exponent.
pub fn lemma1_exponent(seeds: usize, t1s: &[usize]) -> Result<(Vec<f64>, f64)> {
    let medians: Vec<f64> = t1s
        .iter()
        .map(|&t1| {
            let errs: Vec<f64> = (0..seeds as u64)
                .map(|s| lemma1_trial(s, t1, 20, 4, 0.1, PartitionClass::NonCrossing))
                .collect::<Result<_>>()?;
            Ok(median(&errs))
        })
        .collect::<Result<_>>()?;
    let xs: Vec<f64> = t1s.iter().map(|&t| t as f64).collect();
    let slope = log_log_slope(&xs, &medians);
    Ok((medians, slope))
}

fn lemma1_checks(seeds: usize) -> Result<Vec<Check>> {
    let t1s = [250, 1000, 4000];
    let (medians, slope) = lemma1_exponent(seeds, &t1s)?;
    Ok(vec![Check::new(
        "estimation error exponent in [-0.65,-0.35]",
        (-0.65..=-0.35).contains(&slope),
        format!("exponent {slope:.4}, median errors {medians:.4?} at t1={t1s:?}"),
    )])
}

// ---------------------------------------------------------------- regret

/// Final cumulative regret of EMC (greedy non-crossing selection, default
/// `t1`) for one seed.
pub fn emc_final_regret(seed: u64, horizon: usize, d: usize, d0: usize, sigma: f64) -> Result<f64> {
    let mut cfg = EnvConfig::new(d, d0, PartitionClass::NonCrossing);
    cfg.sigma = sigma;
    cfg.seed = seed;
    cfg.arm_set = ArmSetKind::Sphere;
    let env = cfg.generate()?;
    let alg = AlgorithmConfig::new(AlgorithmKind::Emc, d0, PartitionClass::NonCrossing);
    let traj = run_emc(&env, horizon, &alg, &mut rng::stream(seed, rng::RUN_STREAM))?;
    Ok(traj.total_regret())
}

pub fn emc_slope(seeds: usize, horizons: &[usize], d: usize, d0: usize, sigma: f64) -> Result<(Vec<f64>, f64)> {
    let medians: Vec<f64> = horizons
        .iter()
        .map(|&h| {
            let finals: Vec<f64> = (0..seeds as u64)
                .map(|s| emc_final_regret(s, h, d, d0, sigma))
                .collect::<Result<_>>()?;
            Ok(median(&finals))
        })
        .collect::<Result<_>>()?;
    let xs: Vec<f64> = horizons.iter().map(|&h| h as f64).collect();
    let slope = log_log_slope(&xs, &medians);
    Ok((medians, slope))
}

/// Outcome of one well-separated run.
#[derive(Debug, Clone, PartialEq)]
pub struct WellSeparatedRun {
    pub t2: usize,
    pub recovered: bool,
    /// Cumulative regret of the optimism phase, indexed by its round count.
    pub phase_regret: Vec<f64>,
}

pub fn well_separated_run(
    seed: u64,
    horizon: usize,
    d: usize,
    d0: usize,
    eps0: f64,
    sigma: f64,
    selector: SelectorKind,
) -> Result<WellSeparatedRun> {
    let mut cfg = EnvConfig::new(d, d0, PartitionClass::NonCrossing);
    cfg.sigma = sigma;
    cfg.seed = seed;
    cfg.eps0 = Some(eps0);
    let env = cfg.generate()?;
    let mut alg = AlgorithmConfig::new(AlgorithmKind::EmcWs, d0, PartitionClass::NonCrossing);
    alg.selector = selector;
    alg.t2 = Some(t2_default(
        horizon,
        d0,
        d,
        sigma,
        env.c_min,
        env.k_x,
        eps0,
        alg.safety_c,
    )?);
    let traj = run_emc_ws(&env, horizon, &alg, &mut rng::stream(seed, rng::RUN_STREAM))?;
    let t2 = traj.phase_boundary;
    let mut acc = 0.0;
    let phase_regret = traj.rounds[t2..]
        .iter()
        .map(|r| {
            acc += r.regret;
            acc
        })
        .collect();
    Ok(WellSeparatedRun {
        t2,
        recovered: traj.selected_partition.as_ref() == Some(&env.true_partition),
        phase_regret,
    })
}

/// Log-log slope of the median optimism-phase regret over `points`
/// log-spaced phase lengths from `from` to the end of the phase.
pub fn phase_slope(runs: &[WellSeparatedRun], from: usize, points: usize) -> (Vec<usize>, Vec<f64>, f64) {
    let len = runs.iter().map(|r| r.phase_regret.len()).min().unwrap_or(0);
    if len == 0 || points < 2 {
        return (Vec::new(), Vec::new(), f64::NAN);
    }
    let from = from.clamp(1, len);
    let ratio = (len as f64 / from as f64).powf(1.0 / (points - 1) as f64);
    let mut grid: Vec<usize> = (0..points)
        .map(|i| ((from as f64 * ratio.powi(i as i32)).round() as usize).clamp(1, len))
        .collect();
    grid.dedup();
    let medians: Vec<f64> = grid
        .iter()
        .map(|&s| median(&runs.iter().map(|r| r.phase_regret[s - 1]).collect::<Vec<_>>()))
        .collect();
    let xs: Vec<f64> = grid.iter().map(|&s| s as f64).collect();
    let slope = log_log_slope(&xs, &medians);
    (grid, medians, slope)
}

fn regret_checks(seeds: usize) -> Result<Vec<Check>> {
    let horizons = [5000, 10000, 20000];
    let (medians, slope) = emc_slope(seeds, &horizons, 100, 15, 0.1)?;
    let mut checks = vec![Check::new(
        "EMC regret slope in [0.5,0.85]",
        (0.5..=0.85).contains(&slope),
        format!("slope {slope:.4}, median final regret {medians:.2?} at T={horizons:?}"),
    )];
    let runs: Vec<WellSeparatedRun> = (0..seeds as u64)
        .map(|s| well_separated_run(s, 10_000, 20, 4, 0.5, 0.1, SelectorKind::Greedy))
        .collect::<Result<_>>()?;
    let (_, _, ws_slope) = phase_slope(&runs, 500, 8);
    let recovered = runs.iter().filter(|r| r.recovered).count();
    checks.push(Check::new(
        "EMC_WS optimism-phase slope in [0.4,0.65]",
        (0.4..=0.65).contains(&ws_slope),
        format!(
            "slope {ws_slope:.4}, t2={}, recovered {recovered}/{}",
            runs[0].t2,
            runs.len()
        ),
    ));
    Ok(checks)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_sequences() {
        assert_eq!(stirling_row(4), vec![0, 1, 7, 6, 1]);
        assert_eq!(
            (0..8).map(catalan).collect::<Vec<_>>(),
            vec![1, 1, 2, 5, 14, 42, 132, 429]
        );
    }

    #[test]
    fn counts_suite_passes() {
        let report = validate(Suite::Counts, &ValidateOptions { seeds: None }).unwrap();
        assert!(report.passed(), "{}", report.to_text());
    }

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::ALL {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
        assert!("nope".parse::<Suite>().is_err());
    }

    #[test]
    fn phase_slope_of_power_law() {
        let runs: Vec<WellSeparatedRun> = (0..3)
            .map(|i| WellSeparatedRun {
                t2: 10,
                recovered: true,
                phase_regret: (1..=4000).map(|s| (1.0 + i as f64) * (s as f64).sqrt()).collect(),
            })
            .collect();
        let (grid, _, slope) = phase_slope(&runs, 100, 6);
        assert_eq!(grid.first(), Some(&100));
        assert_eq!(grid.last(), Some(&4000));
        assert!((slope - 0.5).abs() < 1e-9);
    }

    #[test]
    fn small_trials_run() {
        assert!(rip_trial(50, 10, 3, 0).unwrap() >= 0.0);
        let (err, m) = selection_trial(0, 6, 2, 60, 0.1).unwrap();
        assert!(err >= 0.0);
        assert_eq!(m, 32);
        assert!(lemma1_trial(0, 100, 8, 2, 0.1, PartitionClass::NonCrossing).unwrap() < 1.0);
    }
}
