//! Closed-form asymptotic theory of the SSCM and the spatial sign correlation
//! at bivariate elliptical distributions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{eig_sym2, kron2, Mat2, Mat4, SymMat2};

/// Shape parameters of a bivariate elliptical model: `a = √(v₁₁/v₂₂)`, the
/// generalized correlation `rho` and the marginal excess kurtosis `kappa`
/// (`NaN` when fourth moments do not exist).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllipticalShapeParams {
    pub a: f64,
    pub rho: f64,
    pub kappa: f64,
}

impl EllipticalShapeParams {
    pub fn new(a: f64, rho: f64, kappa: f64) -> Result<Self> {
        check_shape(a, rho)?;
        if kappa <= -2.0 {
            return Err(Error::domain("excess kurtosis must exceed -2"));
        }
        Ok(Self { a, rho, kappa })
    }

    pub fn asv(&self) -> f64 {
        asv_spatial_corr(self.rho, self.a)
    }

    pub fn are(&self) -> f64 {
        are_spatial(self.rho, self.a, self.kappa)
    }
}

fn check_shape(a: f64, rho: f64) -> Result<()> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::domain(format!("a must be positive, got {a}")));
    }
    if !(rho.abs() < 1.0) {
        return Err(Error::domain(format!("|rho| must be < 1, got {rho}")));
    }
    Ok(())
}

/// SSCM eigenvalues from shape eigenvalues in two dimensions:
/// `δⱼ = √λⱼ / (√λ₁ + √λ₂)`.
pub fn delta_from_lambda(lambda1: f64, lambda2: f64) -> Result<(f64, f64)> {
    if !(lambda1 > 0.0 && lambda2 > 0.0) || !lambda1.is_finite() || !lambda2.is_finite() {
        return Err(Error::domain("shape eigenvalues must be positive and finite"));
    }
    let r1 = lambda1.sqrt();
    let r2 = lambda2.sqrt();
    let d1 = r1 / (r1 + r2);
    Ok((d1, 1.0 - d1))
}

/// Population SSCM of any bivariate elliptical distribution with shape `v`.
pub fn population_sscm(v: &SymMat2) -> Result<SymMat2> {
    let eig = eig_sym2(v)?;
    let (d1, d2) = delta_from_lambda(eig.lambda1, eig.lambda2)?;
    Ok(eig.reconstruct_with(d1, d2))
}

/// `V₀ = [[a, ρ], [ρ, 1/a]]`.
pub fn v0(a: f64, rho: f64) -> SymMat2 {
    SymMat2::new(a, rho, 1.0 / a)
}

/// The fixed 4×4 pattern matrix of the SSCM asymptotic covariance.
pub const W0: [[f64; 4]; 4] = [
    [1.0, 0.0, 0.0, -1.0],
    [0.0, 1.0, 1.0, 0.0],
    [0.0, 1.0, 1.0, 0.0],
    [-1.0, 0.0, 0.0, 1.0],
];

/// Scalar in front of `(U⊗U) W₀ (U⊗U)ᵀ`.
///
/// The textbook expression `(−λ₁λ₂ + ½√(λ₁λ₂)(λ₁+λ₂))/(λ₁−λ₂)²` factors as
/// `½√(λ₁λ₂)/(√λ₁+√λ₂)² = δ₁δ₂/2`, which is regular at `λ₁ = λ₂` (limit 1/8).
pub fn ws_factor(lambda1: f64, lambda2: f64) -> Result<f64> {
    let (d1, d2) = delta_from_lambda(lambda1, lambda2)?;
    Ok(0.5 * d1 * d2)
}

/// Asymptotic covariance `W_S` of `√n vec(Ŝₙ − S)` at a bivariate elliptical
/// distribution with shape eigenvalues `λ₁, λ₂` and eigenvectors `u`.
pub fn ws_matrix(lambda1: f64, lambda2: f64, u: &Mat2) -> Result<Mat4> {
    let factor = ws_factor(lambda1, lambda2)?;
    let k = kron2(u, u);
    Ok((k * Mat4(W0) * k.transpose()).scale(factor))
}

/// Asymptotic variance of the spatial sign correlation:
/// `(1−ρ²)² + ½(a + 1/a)(1−ρ²)^{3/2}`.
pub fn asv_spatial_corr(rho: f64, a: f64) -> f64 {
    let q = 1.0 - rho * rho;
    q * q + 0.5 * (a + 1.0 / a) * q * q.sqrt()
}

/// Working asymptotic variance of the two-stage estimator (`a = 1`).
pub fn asv_two_stage(rho: f64) -> f64 {
    asv_spatial_corr(rho, 1.0)
}

/// Asymptotic variance of the Pearson correlation at an elliptical
/// distribution with marginal excess kurtosis `kappa`.
pub fn asv_pearson(rho: f64, kappa: f64) -> f64 {
    let q = 1.0 - rho * rho;
    (1.0 + kappa / 3.0) * q * q
}

/// Asymptotic relative efficiency of the spatial sign correlation with
/// respect to Pearson. `NaN` when `kappa` is `NaN`.
pub fn are_spatial(rho: f64, a: f64, kappa: f64) -> f64 {
    (1.0 + kappa / 3.0) / (1.0 + 0.5 * (a + 1.0 / a) / (1.0 - rho * rho).sqrt())
}

/// Marginal excess kurtosis of the bivariate `t_ν`: `6/(ν − 4)` for `ν > 4`,
/// `NaN` otherwise.
pub fn kurtosis_t(nu: f64) -> f64 {
    if nu > 4.0 {
        6.0 / (nu - 4.0)
    } else {
        f64::NAN
    }
}

/// Asymptotic covariance of `(â, ρ̂)` for the shape estimator standardized
/// to reciprocal diagonal elements.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticCov2(pub SymMat2);

impl AsymptoticCov2 {
    pub fn var_a(&self) -> f64 {
        self.0.s11
    }

    pub fn cov_a_rho(&self) -> f64 {
        self.0.s12
    }

    /// Entry `[2, 2]`, the asymptotic variance of `ρ̂`.
    pub fn var_rho(&self) -> f64 {
        self.0.s22
    }
}

/// Jacobian of `(s₁₁, s₁₂) ↦ (a, ρ)` laid out against `vec(S)`; the last two
/// columns are zero.
pub fn g_matrix(a: f64, rho: f64) -> Result<[[f64; 4]; 2]> {
    check_shape(a, rho)?;
    let q = 1.0 - rho * rho;
    let sq = q.sqrt();
    let a2 = a * a;
    let denom = 4.0 * a2 * rho * rho + (a2 - 1.0).powi(2);
    if denom == 0.0 {
        // Removable singularity at a = 1, ρ = 0.
        return Ok([[4.0, 0.0, 0.0, 0.0], [0.0, 4.0, 0.0, 0.0]]);
    }
    let pre = ((a2 + 1.0) * sq + 2.0 * a * q) / (sq * denom);
    let g11 = (a2 - 1.0).powi(2) * sq + 2.0 * a * (a2 + 1.0) * rho * rho;
    let g12 = (a - 1.0) * (a + 1.0) * rho * (2.0 * a * sq - a2 - 1.0);
    let g21 = (a2 - 1.0) * rho * ((a2 + 1.0) * sq - 2.0 * a * q) / a;
    let g22 = 2.0 * (a2 + 1.0) * rho * rho * sq + (a2 - 1.0).powi(2) * q / a;
    Ok([[pre * g11, pre * g12, 0.0, 0.0], [pre * g21, pre * g22, 0.0, 0.0]])
}

/// `W_{V₀} = G W_S Gᵀ`.
pub fn wv0_matrix(a: f64, rho: f64) -> Result<AsymptoticCov2> {
    check_shape(a, rho)?;
    let eig = eig_sym2(&v0(a, rho))?;
    let ws = ws_matrix(eig.lambda1, eig.lambda2, &eig.u)?;
    let g = g_matrix(a, rho)?;
    let mut gw = [[0.0; 4]; 2];
    for i in 0..2 {
        for j in 0..4 {
            gw[i][j] = (0..4).map(|k| g[i][k] * ws.0[k][j]).sum();
        }
    }
    let entry = |i: usize, j: usize| (0..4).map(|k| gw[i][k] * g[j][k]).sum::<f64>();
    Ok(AsymptoticCov2(SymMat2::new(
        entry(0, 0),
        0.5 * (entry(0, 1) + entry(1, 0)),
        entry(1, 1),
    )))
}

/// Influence function of the SSCM: `xxᵀ/(xᵀx) − S`.
pub fn if_sscm(x: [f64; 2], s: &SymMat2) -> Result<SymMat2> {
    let r2 = x[0] * x[0] + x[1] * x[1];
    if !(r2 > 0.0) {
        return Err(Error::domain("influence function undefined at the center"));
    }
    Ok(SymMat2::outer(x).scale(1.0 / r2) - *s)
}

/// Coefficients `(A, B, K)` with
/// `IF(x) = (−A (a² x₂² + x₁²) − B x₁ x₂) / (K ‖x‖²)`.
fn if_coefficients(a: f64, rho: f64) -> (f64, f64, f64) {
    let q = 1.0 - rho * rho;
    let sq = q.sqrt();
    let a2 = a * a;
    let coef_a = (a2 + 1.0) * rho * sq + 2.0 * a * rho * q;
    let coef_b = (a2 * a2 + 6.0 * a2 + 1.0) * (rho * rho - 1.0) + 2.0 * a * (a2 + 1.0) * sq * (rho * rho - 2.0);
    let coef_k = 2.0 * a2 * sq + a * (a2 + 1.0);
    (coef_a, coef_b, coef_k)
}

/// Influence function of the spatial sign correlation at an elliptical
/// distribution with parameters `(a, ρ)`. Depends on `x` only through its
/// direction.
pub fn if_spatial_corr(x: [f64; 2], a: f64, rho: f64) -> Result<f64> {
    check_shape(a, rho)?;
    let (x1, x2) = (x[0], x[1]);
    let r2 = x1 * x1 + x2 * x2;
    if !(r2 > 0.0) {
        return Err(Error::domain("influence function undefined at the center"));
    }
    let (ca, cb, ck) = if_coefficients(a, rho);
    Ok((-ca * (a * a * x2 * x2 + x1 * x1) - cb * x1 * x2) / (ck * r2))
}

/// Closed-form gross-error sensitivity for equal marginal scales (`a = 1`).
pub fn ges_unit_a(rho: f64) -> f64 {
    let r2 = rho * rho;
    let sq = (1.0 - r2).sqrt();
    let inner = (r2 - 1.0) * (-r2 * r2 + 8.0 * r2 + 4.0 * sq * (r2 - 2.0) - 8.0);
    (inner.max(0.0).sqrt() + rho.abs() * (sq - r2 + 1.0)) / (sq + 1.0)
}

const GES_GRID: usize = 720;

/// Gross-error sensitivity by direct maximization of `|IF|` over directions
/// `θ ∈ [0, π)`: a 720-point grid brackets the maximum, golden-section search
/// refines it.
pub fn ges_numeric(a: f64, rho: f64) -> Result<f64> {
    check_shape(a, rho)?;
    let abs_if = |theta: f64| {
        let (s, c) = theta.sin_cos();
        if_spatial_corr([c, s], a, rho).map(f64::abs).unwrap_or(0.0)
    };
    let step = std::f64::consts::PI / GES_GRID as f64;
    let values: Vec<f64> = (0..GES_GRID).map(|k| abs_if(k as f64 * step)).collect();
    let mut best = values.iter().copied().fold(0.0, f64::max);
    // Refine every grid point that is a local maximum (periodic in θ).
    for k in 0..GES_GRID {
        let prev = values[(k + GES_GRID - 1) % GES_GRID];
        let next = values[(k + 1) % GES_GRID];
        if values[k] >= prev && values[k] >= next {
            let lo = (k as f64 - 1.0) * step;
            let hi = (k as f64 + 1.0) * step;
            best = best.max(golden_max(&abs_if, lo, hi));
        }
    }
    Ok(best)
}

fn golden_max(f: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > 1e-12 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        }
    }
    f1.max(f2).max(f(0.5 * (lo + hi)))
}

/// Gross-error sensitivity `sup_x |IF(x)|`: the closed form when `a = 1`,
/// numeric maximization over directions otherwise.
pub fn ges_spatial_corr(a: f64, rho: f64) -> Result<f64> {
    check_shape(a, rho)?;
    if a == 1.0 {
        Ok(ges_unit_a(rho))
    } else {
        ges_numeric(a, rho)
    }
}
