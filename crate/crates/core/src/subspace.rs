//! Fixed-point subspace geometry.
//!
//! A [`SubspaceModel`] is the span of the block-indicator vectors of a
//! partition. Regression restricted to the model runs in `k` reduced
//! coordinates, one per block, using block sums of the arm as features.

use nalgebra::{DMatrix, DVector, Dyn, SymmetricEigen};
use rand::Rng;

use crate::error::{Error, Result};
use crate::partition::Partition;
use crate::rng::standard_normal;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SubspaceModel {
    partition: Partition,
    block_sizes: Vec<usize>,
}

impl SubspaceModel {
    pub fn new(partition: Partition) -> Self {
        let block_sizes = partition.blocks().iter().map(Vec::len).collect();
        SubspaceModel { partition, block_sizes }
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn d(&self) -> usize {
        self.partition.d()
    }

    /// Subspace dimension, equal to the number of blocks.
    pub fn k(&self) -> usize {
        self.block_sizes.len()
    }

    pub fn block_index(&self) -> &[usize] {
        self.partition.labels()
    }

    pub fn block_sizes(&self) -> &[usize] {
        &self.block_sizes
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.d() {
            return Err(Error::DimensionMismatch {
                expected: self.d(),
                found: len,
            });
        }
        Ok(())
    }

    /// Block sums of `x`. Callers guarantee `x.len() == d`.
    pub fn reduce(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.k());
        for (i, &b) in self.block_index().iter().enumerate() {
            out[b] += x[i];
        }
        out
    }

    /// The block-constant vector taking value `coeffs[b]` on block `b`.
    pub fn expand(&self, coeffs: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(self.d(), self.block_index().iter().map(|&b| coeffs[b]))
    }

    /// Orthogonal projection: every coordinate becomes its block mean.
    pub fn project(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut means = self.reduce(x);
        for (m, &s) in means.iter_mut().zip(&self.block_sizes) {
            *m /= s as f64;
        }
        self.expand(&means)
    }

    /// Reduced design `X·S` where `S` is the `d×k` block-indicator matrix.
    pub fn reduced_design(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut z = DMatrix::zeros(x.nrows(), self.k());
        for (j, &b) in self.block_index().iter().enumerate() {
            let mut dst = z.column_mut(b);
            dst += x.column(j);
        }
        z
    }

    /// Block-indicator matrix (`d×k`, unnormalised).
    pub fn indicator_matrix(&self) -> DMatrix<f64> {
        let mut s = DMatrix::zeros(self.d(), self.k());
        for (i, &b) in self.block_index().iter().enumerate() {
            s[(i, b)] = 1.0;
        }
        s
    }
}

impl From<Partition> for SubspaceModel {
    fn from(p: Partition) -> Self {
        SubspaceModel::new(p)
    }
}

pub fn project_point(x: &DVector<f64>, m: &SubspaceModel) -> Result<DVector<f64>> {
    m.check_len(x.len())?;
    Ok(m.project(x))
}

pub fn reduced_features(x: &DVector<f64>, m: &SubspaceModel) -> Result<DVector<f64>> {
    m.check_len(x.len())?;
    Ok(m.reduce(x))
}

/// Rows are played arms, `y` the observed rewards.
#[derive(Debug, Clone)]
pub struct DesignSample {
    x: DMatrix<f64>,
    y: DVector<f64>,
}

impl DesignSample {
    pub fn new(x: DMatrix<f64>, y: DVector<f64>) -> Result<Self> {
        if x.nrows() == 0 {
            return Err(Error::Argument("design has no rows".into()));
        }
        if x.nrows() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: x.nrows(),
                found: y.len(),
            });
        }
        Ok(DesignSample { x, y })
    }

    pub fn from_rows(rows: &[DVector<f64>], y: Vec<f64>) -> Result<Self> {
        let d = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::Argument("rows have different lengths".into()));
        }
        let x = DMatrix::from_fn(rows.len(), d, |i, j| rows[i][j]);
        Self::new(x, DVector::from_vec(y))
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn d(&self) -> usize {
        self.x.ncols()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub theta_hat: DVector<f64>,
    pub reduced_coeffs: DVector<f64>,
    /// `‖Y − X·theta_hat‖²`.
    pub residual_sq: f64,
}

/// Relative threshold on the pivots of a column-pivoted QR below which a
/// column counts as dependent.
const RANK_RTOL: f64 = 1e-10;

// Column-pivoted QR `z·P = Q·R` with its numerical rank.
fn pivoted_qr(z: &DMatrix<f64>) -> (nalgebra::linalg::ColPivQR<f64, Dyn, Dyn>, usize) {
    let qr = z.clone().col_piv_qr();
    let r = qr.r();
    let diag_len = r.nrows().min(r.ncols());
    let lead = if diag_len > 0 { r[(0, 0)].abs() } else { 0.0 };
    let rank = (0..diag_len)
        .take_while(|&i| lead > 0.0 && r[(i, i)].abs() > RANK_RTOL * lead)
        .count();
    (qr, rank)
}

/// Minimum-norm least-squares solution of `z·c ≈ y`, through a complete
/// orthogonal decomposition.
pub(crate) fn min_norm_lstsq(z: &DMatrix<f64>, y: &DVector<f64>) -> DVector<f64> {
    let n = z.ncols();
    let (qr, rank) = pivoted_qr(z);
    if rank == 0 {
        return DVector::zeros(n);
    }
    let b = qr.q().columns(0, rank).tr_mul(y);
    let t = qr.r().rows(0, rank).into_owned();
    let mut w = if rank == n {
        t.solve_upper_triangular(&b).expect("nonzero pivots")
    } else {
        // minimum-norm solution of the wide system t·w = b
        let lq = t.transpose().qr();
        let v = lq.r().transpose().solve_lower_triangular(&b).expect("nonzero pivots");
        lq.q() * v
    };
    qr.p().inv_permute_rows(&mut w);
    w
}

/// Least squares restricted to the model subspace.
pub fn fit_subspace(data: &DesignSample, m: &SubspaceModel) -> Result<FitResult> {
    m.check_len(data.d())?;
    let z = m.reduced_design(data.x());
    let coeffs = min_norm_lstsq(&z, data.y());
    let residual_sq = (data.y() - &z * &coeffs).norm_squared();
    Ok(FitResult {
        theta_hat: m.expand(&coeffs),
        reduced_coeffs: coeffs,
        residual_sq,
    })
}

/// Orthonormal basis of `span(m ∪ m′)`.
fn sum_subspace_basis(a: &SubspaceModel, b: &SubspaceModel) -> DMatrix<f64> {
    let (sa, sb) = (a.indicator_matrix(), b.indicator_matrix());
    let mut stacked = DMatrix::zeros(a.d(), sa.ncols() + sb.ncols());
    stacked.columns_mut(0, sa.ncols()).copy_from(&sa);
    stacked.columns_mut(sa.ncols(), sb.ncols()).copy_from(&sb);
    let (qr, rank) = pivoted_qr(&stacked);
    qr.q().columns(0, rank).into_owned()
}

/// Smallest `δ` such that `(1−δ)‖v‖² ≤ ‖A v‖² ≤ (1+δ)‖v‖²` for every `v` in
/// every model and every pairwise sum of models. Exact; quadratic in the
/// number of models.
pub fn rip_constant(a: &DMatrix<f64>, models: &[SubspaceModel]) -> Result<f64> {
    if models.is_empty() {
        return Err(Error::EmptyModelList);
    }
    for m in models {
        m.check_len(a.ncols())?;
    }
    let mut delta: f64 = 0.0;
    for i in 0..models.len() {
        for j in i..models.len() {
            let basis = sum_subspace_basis(&models[i], &models[j]);
            let ab = a * &basis;
            let eig = ab.tr_mul(&ab).symmetric_eigen().eigenvalues;
            delta = delta.max(1.0 - eig.min()).max(eig.max() - 1.0);
        }
    }
    Ok(delta)
}

/// Result of the exploratory-design optimisation.
#[derive(Debug, Clone, PartialEq)]
pub struct ExploratoryDesign {
    pub weights: Vec<f64>,
    /// Minimum eigenvalue of `Σ w_x x xᵀ`.
    pub c_min: f64,
    /// False when the arms do not span the ambient space.
    pub spans: bool,
    pub iterations: usize,
}

fn moment_matrix(arms: &[DVector<f64>], weights: &[f64]) -> DMatrix<f64> {
    let d = arms[0].len();
    let mut v = DMatrix::zeros(d, d);
    for (x, &w) in arms.iter().zip(weights) {
        if w > 0.0 {
            v.ger(w, x, x, 1.0);
        }
    }
    v
}

fn min_eigenpair(v: DMatrix<f64>) -> (f64, DVector<f64>) {
    let eig = SymmetricEigen::new(v);
    let idx = eig.eigenvalues.imin();
    (eig.eigenvalues[idx], eig.eigenvectors.column(idx).into_owned())
}

/// Frank–Wolfe maximisation of `λ_min(Σ w_x x xᵀ)` over the simplex.
///
/// Starts from uniform weights; each iteration moves mass `2/(t+2)` toward the
/// arm maximising `⟨x, v⟩²` for the bottom eigenvector `v`. Stops once the
/// linearised gap `max ⟨x, v⟩² − λ_min` drops below `tol`. The objective is
/// non-smooth at repeated eigenvalues, so the best iterate seen is returned.
pub fn exploratory_distribution(arms: &[DVector<f64>], tol: f64, max_iters: usize) -> Result<ExploratoryDesign> {
    if arms.is_empty() {
        return Err(Error::EmptyArmSet);
    }
    let d = arms[0].len();
    if let Some(bad) = arms.iter().find(|x| x.len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: bad.len(),
        });
    }
    let n = arms.len();
    let mut weights = vec![1.0 / n as f64; n];
    let (lambda0, _) = min_eigenpair(moment_matrix(arms, &weights));
    let scale = moment_matrix(arms, &weights).trace().max(f64::MIN_POSITIVE);
    if lambda0 <= 1e-12 * scale {
        return Ok(ExploratoryDesign {
            weights,
            c_min: 0.0,
            spans: false,
            iterations: 0,
        });
    }

    let mut best = (lambda0, weights.clone());
    let mut iterations = 0;
    for t in 0..max_iters {
        iterations = t + 1;
        let (lambda, v) = min_eigenpair(moment_matrix(arms, &weights));
        if lambda > best.0 {
            best = (lambda, weights.clone());
        }
        let (j, top) =
            arms.iter()
                .map(|x| x.dot(&v).powi(2))
                .enumerate()
                .fold(
                    (0, f64::NEG_INFINITY),
                    |acc, (i, s)| if s > acc.1 { (i, s) } else { acc },
                );
        if top - lambda < tol {
            break;
        }
        let step = 2.0 / (t as f64 + 2.0);
        for w in weights.iter_mut() {
            *w *= 1.0 - step;
        }
        weights[j] += step;
    }
    let (lambda, _) = min_eigenpair(moment_matrix(arms, &weights));
    if lambda > best.0 {
        best = (lambda, weights);
    }
    Ok(ExploratoryDesign {
        weights: best.1,
        c_min: best.0,
        spans: true,
        iterations,
    })
}

/// Uniform draw from the sphere of radius `√d`, whose second-moment matrix is
/// the identity.
pub fn sphere_exploration_sampler<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DVector<f64> {
    loop {
        let g = DVector::from_fn(d, |_, _| standard_normal(rng));
        let norm = g.norm();
        if norm > 0.0 {
            let scale = (d as f64).sqrt();
            return g.map(|v| v / norm * scale);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use nalgebra::dvector;

    fn model(s: &str) -> SubspaceModel {
        SubspaceModel::new(s.parse().unwrap())
    }

    fn gaussian_matrix(n: usize, d: usize, scale: f64, seed: u64) -> DMatrix<f64> {
        let mut r = rng::stream(seed, 0);
        DMatrix::from_fn(n, d, |_, _| scale * standard_normal(&mut r))
    }

    // Pseudo-inverse solution through the eigen-decomposition of `zᵀz`.
    fn pinv_oracle(z: &DMatrix<f64>, y: &DVector<f64>) -> DVector<f64> {
        let eig = z.tr_mul(z).symmetric_eigen();
        let top = eig.eigenvalues.max();
        let zty = z.tr_mul(y);
        let mut c = DVector::zeros(z.ncols());
        for (i, &l) in eig.eigenvalues.iter().enumerate() {
            if l > 1e-12 * top {
                let v = eig.eigenvectors.column(i);
                c += v * (v.dot(&zty) / l);
            }
        }
        c
    }

    #[test]
    fn min_norm_lstsq_matches_pseudo_inverse() {
        let mut r = rng::stream(21, 0);
        for t in 0..200 {
            let (m, n) = (2 + t % 13, 2 + (t / 13) % 9);
            let rank = 1 + t % m.min(n);
            let z = gaussian_matrix(m, rank, 1.0, t as u64) * gaussian_matrix(rank, n, 1.0, 1000 + t as u64);
            let z = if t % 3 == 0 {
                // exact duplicate columns
                let mut d = z.clone();
                d.column_mut(n - 1).copy_from(&z.column(0));
                d
            } else {
                z
            };
            let y = DVector::from_fn(m, |_, _| standard_normal(&mut r));
            let c = min_norm_lstsq(&z, &y);
            let o = pinv_oracle(&z, &y);
            assert!((&c - &o).norm() <= 1e-6 * (1.0 + o.norm()), "case {t}: {c} vs {o}");
        }
        assert_eq!(
            min_norm_lstsq(&DMatrix::zeros(3, 2), &dvector![1.0, 2.0, 3.0]),
            DVector::zeros(2)
        );
    }

    #[test]
    fn sum_basis_is_orthonormal_and_spanning() {
        let (a, b) = (model("1,4,7,10|2,3,6|5,8,9"), model("1,4,7,10|2,3,6|5,8,9"));
        let u = sum_subspace_basis(&a, &b);
        assert_eq!(u.ncols(), 3);
        assert!((u.tr_mul(&u) - DMatrix::identity(3, 3)).norm() < 1e-12);
        let ind = a.indicator_matrix();
        assert!((&ind - &u * u.tr_mul(&ind)).norm() < 1e-12);
        let c = model("1,2|3,4,5,6,7,8,9,10");
        let w = sum_subspace_basis(&a, &c);
        assert_eq!(w.ncols(), 4);
    }

    // Independent oracle: residual of projecting Y onto the column space of
    // X·B, B an orthonormal basis of the model, via Householder QR.
    fn qr_residual(x: &DMatrix<f64>, y: &DVector<f64>, m: &SubspaceModel) -> f64 {
        let mut b = m.indicator_matrix();
        for (j, &s) in m.block_sizes().iter().enumerate() {
            b.column_mut(j).scale_mut(1.0 / (s as f64).sqrt());
        }
        let q = (x * b).qr().q();
        let proj = &q * (q.transpose() * y);
        (y - proj).norm_squared()
    }

    #[test]
    fn projection_examples() {
        let m = model("1,2|3");
        assert_eq!(
            project_point(&dvector![1.0, 3.0, 5.0], &m).unwrap(),
            dvector![2.0, 2.0, 5.0]
        );
        let x = dvector![0.3, -1.0, 7.0];
        assert_eq!(project_point(&x, &model("1|2|3")).unwrap(), x);
        assert_eq!(
            project_point(&dvector![1.0, -1.0], &model("1,2")).unwrap(),
            dvector![0.0, 0.0]
        );
        assert!(matches!(
            project_point(&dvector![1.0], &m),
            Err(Error::DimensionMismatch { expected: 3, found: 1 })
        ));
    }

    #[test]
    fn reduced_feature_examples() {
        let m = model("1,2|3");
        assert_eq!(
            reduced_features(&dvector![1.0, 3.0, 5.0], &m).unwrap(),
            dvector![4.0, 5.0]
        );
        let x = dvector![0.3, -1.0, 7.0];
        assert_eq!(reduced_features(&x, &model("1|2|3")).unwrap(), x);
        assert_eq!(reduced_features(&DVector::zeros(3), &m).unwrap(), DVector::zeros(2));
        assert_eq!(m.k(), 2);
        assert_eq!(m.block_sizes(), &[2, 1]);
    }

    #[test]
    fn fit_noiseless_recovers_parameter() {
        let m = model("1,3|2,4,5|6");
        let x = gaussian_matrix(30, 6, 1.0, 1);
        let theta = m.expand(&dvector![0.5, -1.25, 2.0]);
        let y = &x * &theta;
        let fit = fit_subspace(&DesignSample::new(x, y).unwrap(), &m).unwrap();
        assert!((fit.theta_hat - theta).amax() < 1e-12);
        assert!(fit.residual_sq < 1e-20);
    }

    #[test]
    fn fit_identity_design() {
        let y = dvector![1.0, -2.0, 3.5, 0.25];
        let fit = fit_subspace(
            &DesignSample::new(DMatrix::identity(4, 4), y.clone()).unwrap(),
            &SubspaceModel::new(Partition::finest(4)),
        )
        .unwrap();
        assert!((fit.theta_hat - y).amax() < 1e-14);
        assert!(fit.residual_sq < 1e-28);
    }

    #[test]
    fn fit_matches_qr_oracle() {
        for (seed, s) in [
            (2, "1,2|3|4,5,6"),
            (3, "1,6|2,3|4|5"),
            (4, "1,2,3,4,5,6"),
            (5, "1|2|3|4|5|6"),
        ] {
            let m = model(s);
            let x = gaussian_matrix(50, 6, 1.0, seed);
            let y = DVector::from_fn(50, |i, _| (i as f64 * 0.37).sin());
            let fit = fit_subspace(&DesignSample::new(x.clone(), y.clone()).unwrap(), &m).unwrap();
            let oracle = qr_residual(&x, &y, &m);
            assert!(
                (fit.residual_sq - oracle).abs() <= 1e-8 * oracle,
                "{s}: {} vs {oracle}",
                fit.residual_sq
            );
            // block constancy of the expanded estimate
            for block in m.partition().blocks() {
                assert!(block.iter().all(|&i| fit.theta_hat[i] == fit.theta_hat[block[0]]));
            }
        }
    }

    #[test]
    fn fit_rank_deficient_is_min_norm() {
        // one row, two blocks: infinitely many exact fits; minimum norm picks
        // the pseudo-inverse solution
        let m = model("1|2");
        let data = DesignSample::new(DMatrix::from_row_slice(1, 2, &[1.0, 1.0]), dvector![2.0]).unwrap();
        let fit = fit_subspace(&data, &m).unwrap();
        assert!((fit.reduced_coeffs - dvector![1.0, 1.0]).amax() < 1e-12);
        assert!(fit.residual_sq < 1e-24);
    }

    #[test]
    fn design_sample_validation() {
        assert!(DesignSample::new(DMatrix::zeros(0, 3), DVector::zeros(0)).is_err());
        assert!(matches!(
            DesignSample::new(DMatrix::zeros(2, 3), DVector::zeros(3)),
            Err(Error::DimensionMismatch { .. })
        ));
        let data = DesignSample::new(DMatrix::zeros(2, 3), DVector::zeros(2)).unwrap();
        assert!(fit_subspace(&data, &model("1|2")).is_err());
    }

    #[test]
    fn rip_of_isometries() {
        let models = vec![model("1,2|3|4"), model("1|2,3,4")];
        assert!(rip_constant(&DMatrix::identity(4, 4), &models).unwrap() < 1e-12);
        let twice = DMatrix::identity(4, 4) * 2.0;
        assert!((rip_constant(&twice, &models).unwrap() - 3.0).abs() < 1e-12);
        assert_eq!(rip_constant(&twice, &[]), Err(Error::EmptyModelList));

        // orthonormal columns (n > d): exact isometry on every subspace
        let q = gaussian_matrix(9, 4, 1.0, 8).qr().q();
        assert!(rip_constant(&q, &models).unwrap() < 1e-12);
    }

    #[test]
    fn rip_gaussian_concentration() {
        let (n, d) = (200, 20);
        let mut r = rng::stream(77, 0);
        let mut passes = 0;
        for seed in 0..40 {
            let a = gaussian_matrix(n, d, 1.0 / (n as f64).sqrt(), 1000 + seed);
            let models: Vec<SubspaceModel> = (0..2)
                .map(|_| {
                    let labels: Vec<usize> = (0..d).map(|_| r.random_range(0..3)).collect();
                    SubspaceModel::new(Partition::from_labels(&labels).unwrap())
                })
                .collect();
            if rip_constant(&a, &models).unwrap() < 0.5 {
                passes += 1;
            }
        }
        assert!(passes >= 38, "{passes}/40");
    }

    #[test]
    fn exploratory_design_basis_arms() {
        for d in [2, 3, 5] {
            let basis: Vec<DVector<f64>> = (0..d)
                .map(|i| DVector::from_fn(d, |j, _| (i == j) as u8 as f64))
                .collect();
            let design = exploratory_distribution(&basis, 1e-9, 500).unwrap();
            assert!((design.c_min - 1.0 / d as f64).abs() < 1e-12);
            assert!(design.weights.iter().all(|w| (w - 1.0 / d as f64).abs() < 1e-12));

            let signed: Vec<DVector<f64>> = basis.iter().flat_map(|e| [e.clone(), -e]).collect();
            let design = exploratory_distribution(&signed, 1e-9, 500).unwrap();
            assert!((design.c_min - 1.0 / d as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn exploratory_design_improves_on_skewed_arms() {
        // two arms along e1, one along e2: uniform weights give λ_min = 1/3,
        // the optimum is 1/2
        let arms = vec![dvector![1.0, 0.0], dvector![1.0, 0.0], dvector![0.0, 1.0]];
        let design = exploratory_distribution(&arms, 1e-6, 5000).unwrap();
        assert!(design.c_min > 0.49, "{}", design.c_min);
        assert!((design.weights.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn exploratory_design_sphere_samples() {
        let mut r = rng::stream(4, 0);
        let arms: Vec<DVector<f64>> = (0..200).map(|_| sphere_exploration_sampler(5, &mut r)).collect();
        let design = exploratory_distribution(&arms, 1e-6, 2000).unwrap();
        assert!((design.c_min - 1.0).abs() < 0.25, "{}", design.c_min);
    }

    #[test]
    fn exploratory_design_degenerate_inputs() {
        assert_eq!(exploratory_distribution(&[], 1e-6, 10), Err(Error::EmptyArmSet));
        let flat = vec![dvector![1.0, 0.0], dvector![-2.0, 0.0]];
        let design = exploratory_distribution(&flat, 1e-6, 10).unwrap();
        assert!(!design.spans);
        assert_eq!(design.c_min, 0.0);
    }

    #[test]
    fn sphere_samples() {
        let mut r = rng::stream(9, 0);
        for d in [1, 2, 7, 100] {
            for _ in 0..50 {
                let x = sphere_exploration_sampler(d, &mut r);
                assert!((x.norm() - (d as f64).sqrt()).abs() < 1e-12);
            }
        }
        let ones = (0..4000)
            .filter(|_| sphere_exploration_sampler(1, &mut r)[0] > 0.0)
            .count();
        assert!((ones as f64 / 4000.0 - 0.5).abs() < 0.03);
        for _ in 0..100 {
            assert_eq!(sphere_exploration_sampler(1, &mut r)[0].abs(), 1.0);
        }
    }

    #[test]
    fn sphere_second_moment_is_identity() {
        let mut r = rng::stream(10, 0);
        let d = 4;
        let n = 100_000;
        let mut m = DMatrix::zeros(d, d);
        for _ in 0..n {
            let x = sphere_exploration_sampler(d, &mut r);
            m.ger(1.0 / n as f64, &x, &x, 1.0);
        }
        assert!((m - DMatrix::<f64>::identity(d, d)).amax() < 0.05);
    }
}
