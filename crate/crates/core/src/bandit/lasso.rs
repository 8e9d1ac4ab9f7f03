use nalgebra::{DMatrix, DVector};

pub const LASSO_TOL: f64 = 1e-8;
pub const LASSO_MAX_SWEEPS: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct LassoFit {
    pub coef: DVector<f64>,
    pub sweeps: usize,
    pub converged: bool,
}

fn soft_threshold(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

/// Cyclic coordinate descent on `(1/2n)‖y − Uφ‖² + λ‖φ‖₁`, given the Gram
/// matrix `UᵀU` and `Uᵀy`. Stops once no coordinate moves by more than `tol`
/// in a sweep.
pub fn lasso_gram(
    gram: &DMatrix<f64>,
    uty: &DVector<f64>,
    n: usize,
    lambda: f64,
    tol: f64,
    max_sweeps: usize,
) -> LassoFit {
    let p = uty.len();
    let n = n.max(1) as f64;
    let mut coef = DVector::<f64>::zeros(p);
    // g[j] = (Uᵀ(y − Uφ))_j, kept in sync with every coordinate move.
    let mut g = uty.clone();
    for sweep in 1..=max_sweeps {
        let mut max_step = 0.0f64;
        for j in 0..p {
            let gjj = gram[(j, j)];
            if gjj <= 0.0 {
                continue;
            }
            let rho = (g[j] + gjj * coef[j]) / n;
            let updated = soft_threshold(rho, lambda) / (gjj / n);
            let step = updated - coef[j];
            if step != 0.0 {
                g.axpy(-step, &gram.column(j), 1.0);
                coef[j] = updated;
                max_step = max_step.max(step.abs());
            }
        }
        if max_step <= tol {
            return LassoFit {
                coef,
                sweeps: sweep,
                converged: true,
            };
        }
    }
    LassoFit {
        coef,
        sweeps: max_sweeps,
        converged: false,
    }
}

pub fn lasso(u: &DMatrix<f64>, y: &DVector<f64>, lambda: f64, tol: f64, max_sweeps: usize) -> LassoFit {
    let gram = u.tr_mul(u);
    let uty = u.tr_mul(y);
    lasso_gram(&gram, &uty, u.nrows(), lambda, tol, max_sweeps)
}

/// `u_j = Σ_{i≤j} x_i`, so that `⟨x, θ⟩ = ⟨u, φ⟩` with `θ_i = Σ_{j≥i} φ_j`.
pub fn prefix_sums(x: &DVector<f64>) -> DVector<f64> {
    let mut acc = 0.0;
    x.map(|v| {
        acc += v;
        acc
    })
}

/// Inverse map `θ_i = Σ_{j≥i} φ_j`.
pub fn suffix_sums(phi: &DVector<f64>) -> DVector<f64> {
    let d = phi.len();
    let mut theta = DVector::zeros(d);
    let mut acc = 0.0;
    for i in (0..d).rev() {
        acc += phi[i];
        theta[i] = acc;
    }
    theta
}

/// `φ_i = θ_i − θ_{i+1}`, `φ_d = θ_d`.
pub fn differences(theta: &DVector<f64>) -> DVector<f64> {
    let d = theta.len();
    DVector::from_fn(d, |i, _| if i + 1 < d { theta[i] - theta[i + 1] } else { theta[i] })
}
