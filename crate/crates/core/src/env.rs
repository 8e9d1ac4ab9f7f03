//! Symmetric bandit instances.
//!
//! An environment fixes the arm set, a ground-truth partition and a parameter
//! `θ⋆` that is constant on every block of it, so the expected reward
//! `⟨x, θ⋆⟩` is invariant under the stabilizer of the partition.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::seq::IndexedRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::partition::{coarsen_pairs, noncrossing_to_nonnesting, Partition, PartitionClass};
use crate::rng::{self, standard_normal};
use crate::selection::separation_margin;
use crate::subspace::{exploratory_distribution, sphere_exploration_sampler};

pub const MAX_SEPARATION_ATTEMPTS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ArmSetKind {
    Sphere,
    Cube,
}

impl fmt::Display for ArmSetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ArmSetKind::Sphere => "sphere",
            ArmSetKind::Cube => "cube",
        })
    }
}

impl FromStr for ArmSetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sphere" => Ok(ArmSetKind::Sphere),
            "cube" => Ok(ArmSetKind::Cube),
            other => Err(Error::Argument(format!("unknown arm set {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ArmSet {
    /// Sphere of the given radius (`√d` in the experiments).
    Sphere {
        radius: f64,
    },
    /// `‖x‖_∞ ≤ 1`.
    Cube,
    Finite(Vec<DVector<f64>>),
}

impl ArmSet {
    pub fn sphere(d: usize) -> Self {
        ArmSet::Sphere {
            radius: (d as f64).sqrt(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ArmSet::Sphere { .. } => "sphere",
            ArmSet::Cube => "cube",
            ArmSet::Finite(_) => "finite",
        }
    }

    /// Closed-form maximiser of `⟨θ, x⟩` over the arm set. Ties (and `θ = 0`)
    /// resolve to the first maximiser.
    pub fn maximize(&self, theta: &DVector<f64>) -> DVector<f64> {
        match self {
            ArmSet::Sphere { radius } => {
                let norm = theta.norm();
                if norm > 0.0 {
                    theta * (radius / norm)
                } else {
                    let mut e = DVector::zeros(theta.len());
                    e[0] = *radius;
                    e
                }
            }
            ArmSet::Cube => theta.map(|v| if v < 0.0 { -1.0 } else { 1.0 }),
            ArmSet::Finite(arms) => {
                let mut best = 0;
                for (i, a) in arms.iter().enumerate().skip(1) {
                    if a.dot(theta) > arms[best].dot(theta) {
                        best = i;
                    }
                }
                arms[best].clone()
            }
        }
    }

    /// A random arm used as an optimism candidate: uniform on the sphere, or
    /// uniform in the cube volume. Finite sets use their full list instead.
    pub fn sample_candidate<R: Rng + ?Sized>(&self, d: usize, rng: &mut R) -> DVector<f64> {
        match self {
            ArmSet::Sphere { radius } => sphere_exploration_sampler(d, rng) * (radius / (d as f64).sqrt()),
            ArmSet::Cube => DVector::from_fn(d, |_, _| rng.random_range(-1.0..=1.0)),
            ArmSet::Finite(arms) => arms.choose(rng).expect("finite arm sets are nonempty").clone(),
        }
    }

    /// `m` candidates as the columns of a `d×m` matrix.
    pub fn sample_candidates<R: Rng + ?Sized>(&self, d: usize, m: usize, rng: &mut R) -> DMatrix<f64> {
        match self {
            ArmSet::Sphere { radius } => {
                let mut x = DMatrix::zeros(d, m);
                for j in 0..m {
                    let mut col = x.column_mut(j);
                    loop {
                        col.iter_mut().for_each(|v| *v = standard_normal(rng));
                        let norm = col.norm();
                        if norm > 0.0 {
                            col *= radius / norm;
                            break;
                        }
                    }
                }
                x
            }
            ArmSet::Cube => DMatrix::from_fn(d, m, |_, _| rng.random_range(-1.0..=1.0)),
            ArmSet::Finite(arms) => {
                let cols: Vec<DVector<f64>> = (0..m)
                    .map(|_| arms.choose(rng).expect("finite arm sets are nonempty").clone())
                    .collect();
                if cols.is_empty() {
                    DMatrix::zeros(d, 0)
                } else {
                    DMatrix::from_columns(&cols)
                }
            }
        }
    }

    /// `max |⟨x, θ⟩|` over the arm set.
    pub fn reward_bound(&self, theta: &DVector<f64>) -> f64 {
        match self {
            ArmSet::Sphere { radius } => radius * theta.norm(),
            ArmSet::Cube => theta.lp_norm(1),
            ArmSet::Finite(arms) => arms.iter().map(|a| a.dot(theta).abs()).fold(0.0, f64::max),
        }
    }

    /// `max ‖x‖²` over the arm set.
    pub fn max_sq_norm(&self, d: usize) -> f64 {
        match self {
            ArmSet::Sphere { radius } => radius * radius,
            ArmSet::Cube => d as f64,
            ArmSet::Finite(arms) => arms.iter().map(|a| a.norm_squared()).fold(0.0, f64::max),
        }
    }
}

/// How exploration rounds draw arms.
#[derive(Debug, Clone, PartialEq)]
pub enum Explorer {
    /// Uniform on the sphere; second moment `(r²/d)·I`.
    Sphere,
    /// Uniform on the cube vertices `{±1}^d`; second moment `I`.
    CubeVertices,
    /// Weighted draw from a finite list (cumulative weights).
    Weighted(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BanditEnvironment {
    pub d: usize,
    pub arm_set: ArmSet,
    pub theta_star: DVector<f64>,
    pub true_partition: Partition,
    pub sigma: f64,
    pub r_max: f64,
    pub optimal_arm: DVector<f64>,
    pub optimal_value: f64,
    /// Minimum eigenvalue of the exploratory second-moment matrix.
    pub c_min: f64,
    /// `max ‖x‖²` over the arms, bounding `‖Π_m x‖²` for every model.
    pub k_x: f64,
    /// Separation the instance was generated with, if any.
    pub eps0: Option<f64>,
    explorer: Explorer,
}

impl BanditEnvironment {
    pub fn new(arm_set: ArmSet, theta_star: DVector<f64>, true_partition: Partition, sigma: f64) -> Result<Self> {
        let d = theta_star.len();
        if true_partition.d() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: true_partition.d(),
            });
        }
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::Argument(format!("sigma={sigma} must be finite and nonnegative")));
        }
        let (explorer, c_min) = match &arm_set {
            ArmSet::Sphere { radius } => (Explorer::Sphere, radius * radius / d as f64),
            ArmSet::Cube => (Explorer::CubeVertices, 1.0),
            ArmSet::Finite(arms) => {
                if arms.is_empty() {
                    return Err(Error::EmptyArmSet);
                }
                if let Some(a) = arms.iter().find(|a| a.len() != d) {
                    return Err(Error::DimensionMismatch {
                        expected: d,
                        found: a.len(),
                    });
                }
                let design = exploratory_distribution(arms, 1e-9, 2000)?;
                let mut acc = 0.0;
                let cumulative = design
                    .weights
                    .iter()
                    .map(|w| {
                        acc += w;
                        acc
                    })
                    .collect();
                (Explorer::Weighted(cumulative), design.c_min)
            }
        };
        let optimal_arm = arm_set.maximize(&theta_star);
        let optimal_value = optimal_arm.dot(&theta_star);
        Ok(BanditEnvironment {
            d,
            r_max: arm_set.reward_bound(&theta_star),
            k_x: arm_set.max_sq_norm(d),
            arm_set,
            theta_star,
            true_partition,
            sigma,
            optimal_arm,
            optimal_value,
            c_min,
            eps0: None,
            explorer,
        })
    }

    pub fn with_eps0(mut self, eps0: Option<f64>) -> Self {
        self.eps0 = eps0;
        self
    }

    pub fn expected_reward(&self, x: &DVector<f64>) -> f64 {
        x.dot(&self.theta_star)
    }

    /// Noisy reward `⟨x, θ⋆⟩ + σ·z`.
    pub fn pull<R: Rng + ?Sized>(&self, x: &DVector<f64>, rng: &mut R) -> f64 {
        let mean = self.expected_reward(x);
        if self.sigma == 0.0 {
            mean
        } else {
            mean + self.sigma * standard_normal(rng)
        }
    }

    /// Instantaneous regret against the noiseless optimum.
    pub fn regret(&self, x: &DVector<f64>) -> f64 {
        (self.optimal_value - self.expected_reward(x)).max(0.0)
    }

    /// One draw from the exploratory distribution.
    pub fn sample_exploratory<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        match (&self.explorer, &self.arm_set) {
            (Explorer::Sphere, set) => set.sample_candidate(self.d, rng),
            (Explorer::CubeVertices, _) => {
                DVector::from_fn(self.d, |_, _| if rng.random::<bool>() { 1.0 } else { -1.0 })
            }
            (Explorer::Weighted(cumulative), ArmSet::Finite(arms)) => {
                let u: f64 = rng.random::<f64>() * cumulative[cumulative.len() - 1];
                let idx = cumulative.partition_point(|&c| c <= u).min(arms.len() - 1);
                arms[idx].clone()
            }
            _ => unreachable!("weighted explorer is only built for finite arm sets"),
        }
    }
}

/// Generator settings for random instances.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvConfig {
    pub d: usize,
    pub d0: usize,
    pub partition_class: PartitionClass,
    pub sigma: f64,
    pub arm_set: ArmSetKind,
    pub eps0: Option<f64>,
    pub theta_scale: f64,
    pub seed: u64,
}

impl EnvConfig {
    pub fn new(d: usize, d0: usize, partition_class: PartitionClass) -> Self {
        EnvConfig {
            d,
            d0,
            partition_class,
            sigma: 0.1,
            arm_set: ArmSetKind::Sphere,
            eps0: None,
            theta_scale: 1.0,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::config("d", "must be at least 1"));
        }
        if self.d0 == 0 || self.d0 > self.d {
            return Err(Error::config("d0", format!("must lie in [1, d={}]", self.d)));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::config("sigma", "must be finite and nonnegative"));
        }
        if let Some(e) = self.eps0 {
            if !(e >= 0.0 && e.is_finite()) {
                return Err(Error::config("eps0", "must be finite and nonnegative"));
            }
        }
        if !(self.theta_scale > 0.0 && self.theta_scale.is_finite()) {
            return Err(Error::config("theta_scale", "must be positive"));
        }
        Ok(())
    }

    fn separation(&self) -> Option<f64> {
        self.eps0.filter(|&e| e > 0.0)
    }

    /// Builds the instance from stream 0 of the seed.
    pub fn generate(&self) -> Result<BanditEnvironment> {
        self.validate()?;
        let mut rng = rng::stream(self.seed, rng::ENV_STREAM);
        let partition = random_partition(self.d, self.d0, self.partition_class, &mut rng)?;
        let mut theta = random_theta(&partition, self.eps0, self.theta_scale, &mut rng)?;
        if self.separation().is_none() {
            let norm = theta.norm();
            if norm > 0.0 {
                theta /= norm;
            }
        }
        let arm_set = match self.arm_set {
            ArmSetKind::Sphere => ArmSet::sphere(self.d),
            ArmSetKind::Cube => ArmSet::Cube,
        };
        Ok(BanditEnvironment::new(arm_set, theta, partition, self.sigma)?.with_eps0(self.separation()))
    }
}

pub const MAX_WALK_RESTARTS: usize = 1000;

/// Merge walk from the finest partition: repeatedly merge a uniformly chosen
/// admissible pair of blocks until `d0` blocks remain. Not uniform over the
/// class. Non-nesting partitions are drawn as the image of a non-crossing walk
/// under [`noncrossing_to_nonnesting`], since direct walks in that class
/// usually reach a partition with no admissible merge. A walk that does get
/// stuck restarts from the finest partition.
pub fn random_partition<R: Rng + ?Sized>(d: usize, d0: usize, class: PartitionClass, rng: &mut R) -> Result<Partition> {
    if d == 0 || d0 == 0 || d0 > d {
        return Err(Error::Argument(format!("d0={d0} out of range for d={d}")));
    }
    if class == PartitionClass::NonNesting {
        let nc = random_partition(d, d0, PartitionClass::NonCrossing, rng)?;
        return Ok(noncrossing_to_nonnesting(&nc));
    }
    let mut stuck = None;
    for _ in 0..MAX_WALK_RESTARTS {
        let mut current = Partition::finest(d);
        while current.num_blocks() > d0 {
            match coarsen_pairs(&current, class).choose(rng) {
                Some(&(a, b)) => current = current.merge(a, b),
                None => break,
            }
        }
        if current.num_blocks() == d0 {
            return Ok(current);
        }
        stuck = Some(current);
    }
    let current = stuck.expect("at least one walk ran");
    Err(Error::NoCoarsening {
        partition: current.to_string(),
        class: class.to_string(),
    })
}

/// Block values uniform in `[-scale, scale]`; with `eps0 > 0`, rejection
/// sampling until every cross-block gap is at least `eps0`.
pub fn random_theta<R: Rng + ?Sized>(
    p: &Partition,
    eps0: Option<f64>,
    theta_scale: f64,
    rng: &mut R,
) -> Result<DVector<f64>> {
    let k = p.num_blocks();
    let draw = |rng: &mut R| -> DVector<f64> {
        let values: Vec<f64> = (0..k).map(|_| rng.random_range(-theta_scale..=theta_scale)).collect();
        DVector::from_fn(p.d(), |i, _| values[p.block_of(i)])
    };
    let eps0 = match eps0 {
        Some(e) if e > 0.0 => e,
        _ => return Ok(draw(rng)),
    };
    if eps0 * (k as f64 - 1.0) > 2.0 * theta_scale {
        return Err(Error::InfeasibleSeparation { eps0, attempts: 0 });
    }
    for _ in 0..MAX_SEPARATION_ATTEMPTS {
        let theta = draw(rng);
        if separation_margin(&theta, p)? >= eps0 {
            return Ok(theta);
        }
    }
    Err(Error::InfeasibleSeparation {
        eps0,
        attempts: MAX_SEPARATION_ATTEMPTS,
    })
}

/// Cube instance with `θ⋆` uniform on `{−ε, +ε}^d`; the partition groups
/// coordinates by sign.
pub fn lower_bound_instance<R: Rng + ?Sized>(d: usize, epsilon: f64, rng: &mut R) -> Result<BanditEnvironment> {
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(Error::Argument("epsilon must be positive".into()));
    }
    if d == 0 {
        return Err(Error::Argument("d must be positive".into()));
    }
    let signs: Vec<bool> = (0..d).map(|_| rng.random::<bool>()).collect();
    let theta = DVector::from_fn(d, |i, _| if signs[i] { epsilon } else { -epsilon });
    let labels: Vec<usize> = signs.iter().map(|&s| s as usize).collect();
    let partition = Partition::from_labels(&labels)?;
    BanditEnvironment::new(ArmSet::Cube, theta, partition, 0.0)
}

/// Flat `key = value` snapshot sufficient to replay an environment exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvSnapshot {
    pub d: usize,
    pub d0: usize,
    pub class: PartitionClass,
    pub sigma: f64,
    pub arm_set: ArmSet,
    pub theta_star: DVector<f64>,
    pub partition: Partition,
    pub seed: u64,
}

/// 17 significant digits, which round-trips every `f64`.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn format_vector(v: &DVector<f64>) -> String {
    v.iter().map(|&x| format_f64(x)).collect::<Vec<_>>().join(",")
}

fn parse_vector(s: &str) -> Result<DVector<f64>> {
    let values: std::result::Result<Vec<f64>, _> = s.split(',').map(|t| t.trim().parse()).collect();
    values
        .map(DVector::from_vec)
        .map_err(|_| Error::Argument(format!("bad vector {s:?}")))
}

impl EnvSnapshot {
    pub fn capture(env: &BanditEnvironment, d0: usize, class: PartitionClass, seed: u64) -> Self {
        EnvSnapshot {
            d: env.d,
            d0,
            class,
            sigma: env.sigma,
            arm_set: env.arm_set.clone(),
            theta_star: env.theta_star.clone(),
            partition: env.true_partition.clone(),
            seed,
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("d = {}\n", self.d));
        out.push_str(&format!("d0 = {}\n", self.d0));
        out.push_str(&format!("class = {}\n", self.class));
        out.push_str(&format!("sigma = {}\n", format_f64(self.sigma)));
        out.push_str(&format!("arm_set = {}\n", self.arm_set.name()));
        match &self.arm_set {
            ArmSet::Sphere { radius } => out.push_str(&format!("radius = {}\n", format_f64(*radius))),
            ArmSet::Cube => {}
            ArmSet::Finite(arms) => {
                let joined: Vec<String> = arms.iter().map(format_vector).collect();
                out.push_str(&format!("arms = {}\n", joined.join(";")));
            }
        }
        out.push_str(&format!("theta_star = {}\n", format_vector(&self.theta_star)));
        out.push_str(&format!("partition = {}\n", self.partition));
        out.push_str(&format!("seed = {}\n", self.seed));
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let map = parse_key_values(text)?;
        let get = |k: &str| {
            map.get(k)
                .cloned()
                .ok_or_else(|| Error::config(k, "missing from snapshot"))
        };
        let num = |k: &str| -> Result<f64> { get(k)?.parse().map_err(|_| Error::config(k, "not a number")) };
        let int = |k: &str| -> Result<u64> { get(k)?.parse().map_err(|_| Error::config(k, "not an integer")) };
        let d = int("d")? as usize;
        let arm_set = match get("arm_set")?.as_str() {
            "sphere" => ArmSet::Sphere {
                radius: match map.get("radius") {
                    Some(r) => r.parse().map_err(|_| Error::config("radius", "not a number"))?,
                    None => (d as f64).sqrt(),
                },
            },
            "cube" => ArmSet::Cube,
            "finite" => ArmSet::Finite(get("arms")?.split(';').map(parse_vector).collect::<Result<_>>()?),
            other => return Err(Error::config("arm_set", format!("unknown arm set {other:?}"))),
        };
        Ok(EnvSnapshot {
            d,
            d0: int("d0")? as usize,
            class: get("class")?.parse()?,
            sigma: num("sigma")?,
            arm_set,
            theta_star: parse_vector(&get("theta_star")?)?,
            partition: get("partition")?.parse()?,
            seed: int("seed")?,
        })
    }

    pub fn restore(&self) -> Result<BanditEnvironment> {
        BanditEnvironment::new(
            self.arm_set.clone(),
            self.theta_star.clone(),
            self.partition.clone(),
            self.sigma,
        )
    }
}

/// Parses `key = value` lines; `#` starts a comment, blank lines are skipped,
/// later keys overwrite earlier ones.
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            Error::config(
                format!("line {}", lineno + 1),
                format!("expected `key = value`, got {raw:?}"),
            )
        })?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::{is_in_class, sample_stabilizer_permutation};
    use crate::rng::stream;
    use nalgebra::dvector;

    #[test]
    fn random_partition_extremes() {
        let mut r = stream(1, 0);
        for class in PartitionClass::ALL_CLASSES {
            assert_eq!(random_partition(6, 6, class, &mut r).unwrap(), Partition::finest(6));
            assert_eq!(random_partition(6, 1, class, &mut r).unwrap(), Partition::coarsest(6));
        }
        assert!(random_partition(6, 0, PartitionClass::All, &mut r).is_err());
        assert!(random_partition(6, 7, PartitionClass::All, &mut r).is_err());
    }

    #[test]
    fn random_partition_stays_in_class() {
        let mut r = stream(2, 0);
        for _ in 0..10_000 {
            let p = random_partition(6, 3, PartitionClass::Interval, &mut r).unwrap();
            assert!(is_in_class(&p, PartitionClass::Interval));
            assert_eq!(p.num_blocks(), 3);
        }
        for class in [PartitionClass::NonCrossing, PartitionClass::NonNesting] {
            for _ in 0..200 {
                let p = random_partition(30, 5, class, &mut r).unwrap();
                assert!(is_in_class(&p, class));
                assert_eq!(p.num_blocks(), 5);
            }
        }
    }

    #[test]
    fn random_theta_modes() {
        let mut r = stream(3, 0);
        let fin = Partition::finest(5);
        let t = random_theta(&fin, None, 1.0, &mut r).unwrap();
        assert!(t.iter().all(|v| v.abs() <= 1.0));
        let distinct: std::collections::BTreeSet<u64> = t.iter().map(|v| v.to_bits()).collect();
        assert_eq!(distinct.len(), 5);

        let p: Partition = "1,2|3,5|4".parse().unwrap();
        let plain = random_theta(&p, Some(0.0), 1.0, &mut r).unwrap();
        assert_eq!(plain[0], plain[1]);
        assert_eq!(plain[2], plain[4]);
        for _ in 0..200 {
            let t = random_theta(&p, Some(0.5), 1.0, &mut r).unwrap();
            assert!(separation_margin(&t, &p).unwrap() >= 0.5);
        }
        assert!(matches!(
            random_theta(&p, Some(1.5), 1.0, &mut r),
            Err(Error::InfeasibleSeparation { .. })
        ));
    }

    #[test]
    fn generated_environment_invariants() {
        for (seed, class, arm) in [
            (1, PartitionClass::NonCrossing, ArmSetKind::Sphere),
            (2, PartitionClass::NonNesting, ArmSetKind::Cube),
            (3, PartitionClass::Interval, ArmSetKind::Sphere),
        ] {
            let mut cfg = EnvConfig::new(12, 4, class);
            cfg.seed = seed;
            cfg.arm_set = arm;
            let env = cfg.generate().unwrap();
            assert!((env.theta_star.norm() - 1.0).abs() < 1e-12);
            assert!(is_in_class(&env.true_partition, class));
            for block in env.true_partition.blocks() {
                assert!(block.iter().all(|&i| env.theta_star[i] == env.theta_star[block[0]]));
            }
            assert!((env.optimal_value - env.optimal_arm.dot(&env.theta_star)).abs() < 1e-12);

            let mut r = stream(seed, 9);
            for _ in 0..10_000 {
                let x = env.arm_set.sample_candidate(env.d, &mut r);
                let v = env.expected_reward(&x);
                assert!(v <= env.optimal_value + 1e-12);
                assert!(v.abs() <= env.r_max + 1e-12);
                let g = sample_stabilizer_permutation(&env.true_partition, &mut r);
                let gx = DVector::from_vec(g.apply(x.as_slice()));
                assert!((env.expected_reward(&gx) - v).abs() < 1e-12);
            }
            assert_eq!(cfg.generate().unwrap(), env);
        }
    }

    #[test]
    fn eps0_mode_skips_normalisation() {
        let mut cfg = EnvConfig::new(20, 4, PartitionClass::NonCrossing);
        cfg.eps0 = Some(0.5);
        let env = cfg.generate().unwrap();
        assert!(separation_margin(&env.theta_star, &env.true_partition).unwrap() >= 0.5);
        assert_eq!(env.eps0, Some(0.5));
    }

    #[test]
    fn optimal_arms_by_arm_set() {
        let theta = dvector![0.3, -0.4, 0.0];
        let sphere = ArmSet::sphere(3);
        let x = sphere.maximize(&theta);
        assert!((x.clone() - &theta * (3f64.sqrt() / 0.5)).amax() < 1e-12);
        assert_eq!(ArmSet::Cube.maximize(&theta), dvector![1.0, -1.0, 1.0]);
        let finite = ArmSet::Finite(vec![dvector![1.0, 0.0, 0.0], dvector![0.0, -1.0, 0.0]]);
        assert_eq!(finite.maximize(&theta), dvector![0.0, -1.0, 0.0]);
    }

    #[test]
    fn pull_statistics() {
        let p = Partition::coarsest(3);
        let env = BanditEnvironment::new(ArmSet::sphere(3), dvector![0.5, 0.5, 0.5], p.clone(), 0.0).unwrap();
        let mut r = stream(4, 0);
        let x = dvector![1.0, -0.5, 1.0];
        assert_eq!(env.pull(&x, &mut r), 0.75);

        let noisy = BanditEnvironment::new(ArmSet::sphere(3), dvector![0.5, 0.5, 0.5], p, 0.2).unwrap();
        let n = 100_000;
        let zero: Vec<f64> = (0..n).map(|_| noisy.pull(&DVector::zeros(3), &mut r)).collect();
        let mean = zero.iter().sum::<f64>() / n as f64;
        let var = zero.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((var / 0.04 - 1.0).abs() < 0.05, "{var}");
        let at_x: f64 = (0..n).map(|_| noisy.pull(&x, &mut r)).sum::<f64>() / n as f64;
        assert!((at_x - 0.75).abs() < 3.0 * 0.2 / (n as f64).sqrt());
    }

    #[test]
    fn lower_bound_family() {
        let mut r = stream(5, 0);
        let env = lower_bound_instance(30, 0.1, &mut r).unwrap();
        assert!(env.theta_star.iter().all(|v| (v.abs() - 0.1).abs() < 1e-15));
        assert!(env.true_partition.num_blocks() <= 2);
        assert_eq!(env.arm_set, ArmSet::Cube);
        assert!((env.optimal_value - 3.0).abs() < 1e-12);
        assert!(matches!(
            crate::selection::model_pool(30, 2, PartitionClass::All),
            Err(Error::TooLarge { .. })
        ));
        assert!(lower_bound_instance(3, 0.0, &mut r).is_err());
    }

    #[test]
    fn finite_arm_exploration_uses_design_weights() {
        let arms = vec![dvector![1.0, 0.0], dvector![1.0, 0.0], dvector![0.0, 1.0]];
        let env =
            BanditEnvironment::new(ArmSet::Finite(arms), dvector![1.0, 1.0], Partition::coarsest(2), 0.0).unwrap();
        assert!(env.c_min > 0.49);
        let mut r = stream(6, 0);
        let e2 = (0..20_000).filter(|_| env.sample_exploratory(&mut r)[1] == 1.0).count();
        assert!((e2 as f64 / 20_000.0 - 0.5).abs() < 0.03);
    }

    #[test]
    fn snapshot_round_trip() {
        let mut cfg = EnvConfig::new(9, 3, PartitionClass::NonNesting);
        cfg.seed = 42;
        let env = cfg.generate().unwrap();
        let snap = EnvSnapshot::capture(&env, 3, PartitionClass::NonNesting, 42);
        let text = snap.to_text();
        let back = EnvSnapshot::parse(&text).unwrap();
        assert_eq!(back, snap);
        assert_eq!(back.restore().unwrap().theta_star, env.theta_star);

        let finite = BanditEnvironment::new(
            ArmSet::Finite(vec![dvector![1.0, 0.0], dvector![0.1, 0.7]]),
            dvector![0.25, 0.25],
            Partition::coarsest(2),
            0.1,
        )
        .unwrap();
        let snap = EnvSnapshot::capture(&finite, 1, PartitionClass::All, 0);
        assert_eq!(EnvSnapshot::parse(&snap.to_text()).unwrap(), snap);
        assert!(EnvSnapshot::parse("d = 3").is_err());
    }

    #[test]
    fn config_validation_names_fields() {
        let mut cfg = EnvConfig::new(4, 5, PartitionClass::All);
        assert!(matches!(cfg.validate(), Err(Error::Config { field, .. }) if field == "d0"));
        cfg.d0 = 2;
        cfg.sigma = -1.0;
        assert!(matches!(cfg.validate(), Err(Error::Config { field, .. }) if field == "sigma"));
    }
}
