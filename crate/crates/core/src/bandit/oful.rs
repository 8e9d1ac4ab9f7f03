use nalgebra::{DMatrix, DVector};

/// Ridge-regression state with an optimistic confidence ellipsoid.
#[derive(Debug, Clone)]
pub struct Oful {
    ridge_lambda: f64,
    delta: f64,
    theta_norm_bound: f64,
    sigma: f64,
    v_inv: DMatrix<f64>,
    b: DVector<f64>,
    theta_hat: DVector<f64>,
    max_feature_sq: f64,
    observations: usize,
}

impl Oful {
    pub fn new(k: usize, ridge_lambda: f64, delta: f64, theta_norm_bound: f64, sigma: f64) -> Self {
        Oful {
            ridge_lambda,
            delta,
            theta_norm_bound,
            sigma,
            v_inv: DMatrix::identity(k, k) / ridge_lambda,
            b: DVector::zeros(k),
            theta_hat: DVector::zeros(k),
            max_feature_sq: 0.0,
            observations: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    pub fn theta_hat(&self) -> &DVector<f64> {
        &self.theta_hat
    }

    pub fn observations(&self) -> usize {
        self.observations
    }

    /// `σ·√(k·ln((1 + s·L²/λ)/δ)) + √λ·S` after `s` observations.
    pub fn beta(&self) -> f64 {
        let k = self.dim() as f64;
        let growth = 1.0 + self.observations as f64 * self.max_feature_sq / self.ridge_lambda;
        let log_term = (growth / self.delta).ln().max(0.0);
        self.sigma * (k * log_term).sqrt() + self.ridge_lambda.sqrt() * self.theta_norm_bound
    }

    /// `‖φ‖_{V⁻¹}`.
    pub fn width(&self, phi: &DVector<f64>) -> f64 {
        phi.dot(&(&self.v_inv * phi)).max(0.0).sqrt()
    }

    pub fn ucb(&self, phi: &DVector<f64>) -> f64 {
        self.theta_hat.dot(phi) + self.beta() * self.width(phi)
    }

    /// The point of the confidence ellipsoid maximizing `⟨φ, θ⟩`:
    /// `θ̂ + β·V⁻¹φ/‖φ‖_{V⁻¹}`. `None` when `φ` has zero width.
    pub fn optimistic_theta(&self, phi: &DVector<f64>) -> Option<DVector<f64>> {
        let v_phi = &self.v_inv * phi;
        let width = phi.dot(&v_phi).max(0.0).sqrt();
        (width > 0.0).then(|| &self.theta_hat + v_phi * (self.beta() / width))
    }

    /// Index of the column of `features` (`k × m`) with the largest upper
    /// confidence bound; the first one wins ties.
    pub fn best_column(&self, features: &DMatrix<f64>) -> usize {
        let beta = self.beta();
        let scaled = &self.v_inv * features;
        let mut best = 0;
        let mut best_score = f64::NEG_INFINITY;
        for j in 0..features.ncols() {
            let col = features.column(j);
            let width = col.dot(&scaled.column(j)).max(0.0).sqrt();
            let score = self.theta_hat.dot(&col) + beta * width;
            if score > best_score {
                best = j;
                best_score = score;
            }
        }
        best
    }

    /// Sherman–Morrison update of `V⁻¹` and the ridge estimate.
    pub fn update(&mut self, phi: &DVector<f64>, reward: f64) {
        let v_phi = &self.v_inv * phi;
        let denom = 1.0 + phi.dot(&v_phi);
        self.v_inv.ger(-1.0 / denom, &v_phi, &v_phi, 1.0);
        self.b.axpy(reward, phi, 1.0);
        self.theta_hat = &self.v_inv * &self.b;
        self.max_feature_sq = self.max_feature_sq.max(phi.norm_squared());
        self.observations += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{standard_normal, stream};

    #[test]
    fn matches_direct_ridge() {
        let mut r = stream(1, 0);
        let k = 4;
        let mut oful = Oful::new(k, 0.7, 0.01, 1.0, 0.1);
        let mut v = DMatrix::<f64>::identity(k, k) * 0.7;
        let mut b = DVector::<f64>::zeros(k);
        for _ in 0..200 {
            let phi = DVector::from_fn(k, |_, _| standard_normal(&mut r));
            let y = standard_normal(&mut r);
            oful.update(&phi, y);
            v += &phi * phi.transpose();
            b += &phi * y;
        }
        let direct = v.clone().cholesky().unwrap().solve(&b);
        assert!((oful.theta_hat() - direct).amax() < 1e-10);
        let probe = DVector::from_element(k, 0.5);
        let w = probe.dot(&v.cholesky().unwrap().solve(&probe)).sqrt();
        assert!((oful.width(&probe) - w).abs() < 1e-10);
    }

    #[test]
    fn width_is_nonincreasing() {
        let mut r = stream(2, 0);
        let mut oful = Oful::new(3, 1.0, 0.05, 1.0, 0.1);
        let probe = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let mut last = oful.width(&probe);
        for _ in 0..500 {
            let phi = DVector::from_fn(3, |_, _| standard_normal(&mut r));
            oful.update(&phi, 0.0);
            let w = oful.width(&probe);
            assert!(w <= last + 1e-12);
            last = w;
        }
    }

    #[test]
    fn beta_formula() {
        let mut oful = Oful::new(2, 1.0, 0.1, 2.0, 0.5);
        assert!((oful.beta() - (0.5 * (2.0 * 10f64.ln()).sqrt() + 2.0)).abs() < 1e-12);
        oful.update(&DVector::from_vec(vec![3.0, 4.0]), 1.0);
        let expected = 0.5 * (2.0 * (26.0f64 / 0.1).ln()).sqrt() + 2.0;
        assert!((oful.beta() - expected).abs() < 1e-12);
    }

    #[test]
    fn optimistic_theta_attains_ucb() {
        let mut r = stream(4, 0);
        let mut oful = Oful::new(3, 1.0, 0.05, 1.0, 0.2);
        for _ in 0..10 {
            let phi = DVector::from_fn(3, |_, _| standard_normal(&mut r));
            oful.update(&phi, phi[1]);
        }
        let phi = DVector::from_vec(vec![0.3, -1.0, 2.0]);
        let theta = oful.optimistic_theta(&phi).unwrap();
        assert!((theta.dot(&phi) - oful.ucb(&phi)).abs() < 1e-10);
        assert!(oful.optimistic_theta(&DVector::zeros(3)).is_none());
    }

    #[test]
    fn best_column_matches_ucb() {
        let mut r = stream(3, 0);
        let mut oful = Oful::new(3, 1.0, 0.05, 1.0, 0.2);
        for _ in 0..20 {
            let phi = DVector::from_fn(3, |_, _| standard_normal(&mut r));
            oful.update(&phi, phi[0]);
        }
        let cands = DMatrix::from_fn(3, 50, |_, _| standard_normal(&mut r));
        let j = oful.best_column(&cands);
        let best = oful.ucb(&cands.column(j).into_owned());
        for c in 0..50 {
            assert!(oful.ucb(&cands.column(c).into_owned()) <= best + 1e-12);
        }
    }
}
