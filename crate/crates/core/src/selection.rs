//! Residual-minimising selection of a fixed-point subspace.
//!
//! [`select_bruteforce`] scores every model of a pool; [`select_greedy`] walks
//! down the partition lattice from the finest partition, merging the pair of
//! blocks that raises the residual least at each level.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::partition::{
    closure_merges, coarsen_pairs, enumerate_partitions_capped, Partition, PartitionClass, DEFAULT_ENUMERATION_CAP,
};
use crate::subspace::{fit_subspace, min_norm_lstsq, DesignSample, FitResult, SubspaceModel};

/// Residuals closer than this (relative) are ties, broken by canonical order.
pub const TIE_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SelectorKind {
    BruteForce,
    Greedy,
}

impl fmt::Display for SelectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SelectorKind::BruteForce => "bruteforce",
            SelectorKind::Greedy => "greedy",
        })
    }
}

impl FromStr for SelectorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "bruteforce" | "brute" | "exhaustive" => Ok(SelectorKind::BruteForce),
            "greedy" | "lattice" => Ok(SelectorKind::Greedy),
            other => Err(Error::Argument(format!("unknown selector {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    pub model: SubspaceModel,
    pub fit: FitResult,
    /// `(block_count, residual_sq)` after every greedy step; empty for brute force.
    pub residual_trace: Vec<(usize, f64)>,
    pub candidates_examined: usize,
}

/// Residuals within `TIE_RTOL` of each other, relative to the larger of the
/// two residuals and `‖y‖²`, count as tied.
fn tie_tolerance(a: f64, b: f64, yty: f64) -> f64 {
    TIE_RTOL * a.abs().max(b.abs()).max(yty)
}

fn is_better(r_new: f64, p_new: &Partition, r_best: f64, p_best: &Partition, yty: f64) -> bool {
    let tol = tie_tolerance(r_new, r_best, yty);
    if r_new < r_best - tol {
        true
    } else if (r_new - r_best).abs() <= tol {
        (p_new.num_blocks(), p_new) < (p_best.num_blocks(), p_best)
    } else {
        false
    }
}

/// Class-`c` models with at most `d0` blocks.
pub fn model_pool(d: usize, d0: usize, class: PartitionClass) -> Result<Vec<SubspaceModel>> {
    model_pool_capped(d, d0, class, DEFAULT_ENUMERATION_CAP)
}

pub fn model_pool_capped(d: usize, d0: usize, class: PartitionClass, cap: u128) -> Result<Vec<SubspaceModel>> {
    Ok(enumerate_partitions_capped(d, class, d0, cap)?
        .into_iter()
        .map(SubspaceModel::new)
        .collect())
}

/// The pool model with the smallest residual; ties go to fewer blocks, then
/// canonical partition order.
///
/// Residuals are first screened from the Gram matrix `XᵀX`; only models whose
/// screened residual is within a small slack of the minimum (or whose reduced
/// Gram matrix is singular) are refitted exactly and compared.
pub fn select_bruteforce(data: &DesignSample, pool: &[SubspaceModel]) -> Result<SelectionResult> {
    if pool.is_empty() {
        return Err(Error::EmptyPool);
    }
    for m in pool {
        if m.d() != data.d() {
            return Err(Error::DimensionMismatch {
                expected: data.d(),
                found: m.d(),
            });
        }
    }
    let gram = data.x().tr_mul(data.x());
    let xty = data.x().tr_mul(data.y());
    let yty = data.y().norm_squared();
    let screened: Vec<Option<f64>> = pool
        .par_iter()
        .map(|m| screened_residual(m, &gram, &xty, yty))
        .collect();
    let floor = screened.iter().flatten().copied().fold(f64::INFINITY, f64::min);
    let slack = 1e-8 * yty + f64::MIN_POSITIVE;
    let shortlist: Vec<usize> = (0..pool.len())
        .filter(|&i| screened[i].is_none_or(|r| r <= floor + slack))
        .collect();
    let fits: Vec<FitResult> = shortlist
        .par_iter()
        .map(|&i| fit_subspace(data, &pool[i]))
        .collect::<Result<_>>()?;
    let mut best = 0;
    for j in 1..shortlist.len() {
        if is_better(
            fits[j].residual_sq,
            pool[shortlist[j]].partition(),
            fits[best].residual_sq,
            pool[shortlist[best]].partition(),
            yty,
        ) {
            best = j;
        }
    }
    Ok(SelectionResult {
        model: pool[shortlist[best]].clone(),
        fit: fits[best].clone(),
        residual_trace: Vec::new(),
        candidates_examined: pool.len(),
    })
}

// `‖y‖² − bᵀG⁻¹b` for the reduced system, or `None` if it is not safely
// positive definite.
fn screened_residual(m: &SubspaceModel, gram: &DMatrix<f64>, xty: &DVector<f64>, yty: f64) -> Option<f64> {
    let k = m.k();
    let labels = m.block_index();
    let mut g = DMatrix::<f64>::zeros(k, k);
    for (i, &bi) in labels.iter().enumerate() {
        for (j, &bj) in labels.iter().enumerate() {
            g[(bi, bj)] += gram[(i, j)];
        }
    }
    let b = m.reduce(xty);
    let chol = g.cholesky()?;
    let diag = chol.l_dirty().diagonal();
    let (dmin, dmax) = (diag.min(), diag.max());
    if !(dmin > 0.0 && dmin * dmin > 1e-10 * dmax * dmax) {
        return None;
    }
    let c = chol.solve(&b);
    Some((yty - b.dot(&c)).max(0.0))
}

// Sufficient statistics of the reduced regression at one lattice level.
struct ReducedSystem {
    z: DMatrix<f64>,
    gram: DMatrix<f64>,
    zty: DVector<f64>,
}

impl ReducedSystem {
    fn new(x: &DMatrix<f64>, y: &DVector<f64>) -> Self {
        ReducedSystem {
            gram: x.tr_mul(x),
            zty: x.tr_mul(y),
            z: x.clone(),
        }
    }

    // Merge block b into block a (a < b), matching `Partition::merge`.
    fn merge(&mut self, a: usize, b: usize) {
        let col_b = self.z.column(b).into_owned();
        let mut col_a = self.z.column_mut(a);
        col_a += col_b;
        self.z = std::mem::replace(&mut self.z, DMatrix::zeros(0, 0)).remove_column(b);

        let row_b = self.gram.row(b).into_owned();
        let mut row_a = self.gram.row_mut(a);
        row_a += row_b;
        let col_b = self.gram.column(b).into_owned();
        let mut col_a = self.gram.column_mut(a);
        col_a += col_b;
        let g = std::mem::replace(&mut self.gram, DMatrix::zeros(0, 0));
        self.gram = g.remove_row(b).remove_column(b);

        self.zty[a] += self.zty[b];
        self.zty = std::mem::replace(&mut self.zty, DVector::zeros(0)).remove_row(b);
    }

    // Merge every block of `group` into its smallest member.
    fn merge_group(&mut self, group: &[usize]) {
        let mut sorted = group.to_vec();
        sorted.sort_unstable();
        if let Some((&keep, rest)) = sorted.split_first() {
            for &b in rest.iter().rev() {
                self.merge(keep, b);
            }
        }
    }

    /// Residual after merging each group of blocks. Equating the coefficients
    /// of a group is the constraint `C c = 0`, which raises the residual by
    /// `(Cĉ)ᵀ (C H Cᵀ)⁻¹ (Cĉ)`.
    fn group_residuals(&self, y: &DVector<f64>, groups: &[Vec<usize>]) -> Vec<f64> {
        if let Some(chol) = self.gram.clone().cholesky() {
            let diag = chol.l_dirty().diagonal();
            let (dmin, dmax) = (diag.min(), diag.max());
            if dmin > 0.0 && dmin * dmin > 1e-10 * dmax * dmax {
                let coeffs = chol.solve(&self.zty);
                let rss = (y - &self.z * &coeffs).norm_squared();
                let h = chol.inverse();
                let scored: Option<Vec<f64>> = groups
                    .iter()
                    .map(|g| {
                        let m = g.len() - 1;
                        let diff = DVector::from_fn(m, |i, _| coeffs[g[0]] - coeffs[g[i + 1]]);
                        let s = DMatrix::from_fn(m, m, |i, j| {
                            let (a, b, c) = (g[0], g[i + 1], g[j + 1]);
                            h[(a, a)] - h[(a, c)] - h[(b, a)] + h[(b, c)]
                        });
                        s.cholesky().map(|cs| rss + diff.dot(&cs.solve(&diff)))
                    })
                    .collect();
                if let Some(v) = scored {
                    return v;
                }
            }
        }
        groups
            .par_iter()
            .map(|g| {
                let mut sys = ReducedSystem {
                    z: self.z.clone(),
                    gram: DMatrix::zeros(0, 0),
                    zty: DVector::zeros(0),
                };
                let mut sorted = g.clone();
                sorted.sort_unstable();
                for &b in sorted[1..].iter().rev() {
                    let col_b = sys.z.column(b).into_owned();
                    let mut col_a = sys.z.column_mut(sorted[0]);
                    col_a += col_b;
                    sys.z = std::mem::replace(&mut sys.z, DMatrix::zeros(0, 0)).remove_column(b);
                }
                let c = min_norm_lstsq(&sys.z, y);
                (y - &sys.z * &c).norm_squared()
            })
            .collect()
    }

    /// Residual of every candidate merge.
    ///
    /// With a well-conditioned Gram matrix `G`, forcing `c_a = c_b` raises the
    /// residual by `(ĉ_a − ĉ_b)² / (H_aa + H_bb − 2 H_ab)`, `H = G⁻¹`, so one
    /// factorisation scores all merges. Otherwise every merged design is
    /// solved directly.
    fn merge_residuals(&self, y: &DVector<f64>, pairs: &[(usize, usize)]) -> Vec<f64> {
        if let Some(chol) = self.gram.clone().cholesky() {
            let diag = chol.l_dirty().diagonal();
            let (dmin, dmax) = (diag.min(), diag.max());
            if dmin > 0.0 && dmin * dmin > 1e-10 * dmax * dmax {
                let coeffs = chol.solve(&self.zty);
                let rss = (y - &self.z * &coeffs).norm_squared();
                let h = chol.inverse();
                return pairs
                    .iter()
                    .map(|&(a, b)| {
                        let diff = coeffs[a] - coeffs[b];
                        let denom = h[(a, a)] + h[(b, b)] - 2.0 * h[(a, b)];
                        rss + diff * diff / denom
                    })
                    .collect();
            }
        }
        pairs
            .par_iter()
            .map(|&(a, b)| {
                let mut z = self.z.clone();
                let col_b = z.column(b).into_owned();
                let mut col_a = z.column_mut(a);
                col_a += col_b;
                let z = z.remove_column(b);
                let c = min_norm_lstsq(&z, y);
                (y - &z * &c).norm_squared()
            })
            .collect()
    }
}

/// Greedy lattice search from the finest partition down to `d0` blocks within
/// `class`. Where no single merge stays in the class (non-nesting partitions
/// have such dead ends) the step takes the best [`closure_merges`] group, so
/// the result can have fewer than `d0` blocks when every way out overshoots.
pub fn select_greedy(data: &DesignSample, d0: usize, class: PartitionClass) -> Result<SelectionResult> {
    let d = data.d();
    if d0 == 0 || d0 > d {
        return Err(Error::Argument(format!("d0={d0} out of range for d={d}")));
    }
    let y = data.y();
    let yty = y.norm_squared();
    let mut current = Partition::finest(d);
    let mut system = (d0 < d).then(|| ReducedSystem::new(data.x(), y));
    let mut trace = Vec::with_capacity(d - d0);
    let mut examined = 0;

    while current.num_blocks() > d0 {
        let sys = system.as_mut().expect("built whenever a step is taken");
        let pairs = coarsen_pairs(&current, class);
        if pairs.is_empty() {
            let (partition, residual, examined_here) = closure_step(sys, y, yty, &current, d0, class)?;
            examined += examined_here;
            current = partition;
            trace.push((current.num_blocks(), residual));
            continue;
        }
        examined += pairs.len();
        let residuals = sys.merge_residuals(y, &pairs);

        let mut best = 0;
        let mut best_partition = current.merge(pairs[0].0, pairs[0].1);
        for i in 1..pairs.len() {
            let tol = tie_tolerance(residuals[i], residuals[best], yty);
            if residuals[i] < residuals[best] - tol {
                best = i;
                best_partition = current.merge(pairs[i].0, pairs[i].1);
            } else if (residuals[i] - residuals[best]).abs() <= tol {
                let candidate = current.merge(pairs[i].0, pairs[i].1);
                if candidate < best_partition {
                    best = i;
                    best_partition = candidate;
                }
            }
        }
        let (a, b) = pairs[best];
        sys.merge(a, b);
        current = best_partition;
        trace.push((current.num_blocks(), residuals[best]));
    }

    let model = SubspaceModel::new(current);
    let fit = fit_subspace(data, &model)?;
    Ok(SelectionResult {
        model,
        fit,
        residual_trace: trace,
        candidates_examined: examined,
    })
}

// Way out of a partition with no admissible single merge: the best closure
// merge, preferring those that keep at least `d0` blocks.
fn closure_step(
    sys: &mut ReducedSystem,
    y: &DVector<f64>,
    yty: f64,
    current: &Partition,
    d0: usize,
    class: PartitionClass,
) -> Result<(Partition, f64, usize)> {
    let all = closure_merges(current, class);
    let k = current.num_blocks();
    let keeps: Vec<Vec<usize>> = all.iter().filter(|g| k + 1 - g.len() >= d0).cloned().collect();
    let groups = if keeps.is_empty() { all } else { keeps };
    if groups.is_empty() {
        return Err(Error::NoCoarsening {
            partition: current.to_string(),
            class: class.to_string(),
        });
    }
    let residuals = sys.group_residuals(y, &groups);
    let mut best = 0;
    let mut best_partition = current.merge_group(&groups[0]);
    for i in 1..groups.len() {
        let tol = tie_tolerance(residuals[i], residuals[best], yty);
        if residuals[i] < residuals[best] - tol {
            best = i;
            best_partition = current.merge_group(&groups[i]);
        } else if (residuals[i] - residuals[best]).abs() <= tol {
            let candidate = current.merge_group(&groups[i]);
            if candidate < best_partition {
                best = i;
                best_partition = candidate;
            }
        }
    }
    sys.merge_group(&groups[best]);
    Ok((best_partition, residuals[best], groups.len()))
}

/// Selection by either strategy; brute force enumerates the class pool with
/// at most `d0` blocks.
pub fn select(
    data: &DesignSample,
    d0: usize,
    class: PartitionClass,
    selector: SelectorKind,
) -> Result<SelectionResult> {
    match selector {
        SelectorKind::Greedy => select_greedy(data, d0, class),
        SelectorKind::BruteForce => select_bruteforce(data, &model_pool(data.d(), d0, class)?),
    }
}

/// Smallest gap `|θ_i − θ_j|` between coordinates in different blocks;
/// infinite for the one-block partition.
pub fn separation_margin(theta: &DVector<f64>, p: &Partition) -> Result<f64> {
    if theta.len() != p.d() {
        return Err(Error::DimensionMismatch {
            expected: p.d(),
            found: theta.len(),
        });
    }
    // the closest cross-block pair is adjacent in sorted order
    let mut order: Vec<usize> = (0..theta.len()).collect();
    order.sort_by(|&i, &j| theta[i].total_cmp(&theta[j]));
    let labels = p.labels();
    let mut margin = f64::INFINITY;
    for w in order.windows(2) {
        if labels[w[0]] != labels[w[1]] {
            margin = margin.min(theta[w[1]] - theta[w[0]]);
        }
    }
    Ok(margin)
}
