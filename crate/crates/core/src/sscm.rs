//! Spatial signs, the spatial median, the spatial sign covariance matrix
//! (SSCM) and the spatial sign correlation coefficient.
//!
//! For bivariate elliptical data the SSCM `S` and the shape matrix `V` share
//! eigenvectors, and the eigenvalues are linked by
//! `δⱼ = √λⱼ / (√λ₁ + √λ₂)`. Inverting that map recovers `V` up to scale from
//! `S`, and the correlation read off `V` is the spatial sign correlation.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::asymptotics::asv_spatial_corr;
use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::estimators::scale::{mad, qn, ScaleMethod};
use crate::estimators::{CorrEstimate, EstimatorId};
use crate::numerics::{eig_sym2, median_in_place, normal_quantile_unchecked, Mat2, SymMat2};

pub const DEFAULT_MEDIAN_TOL: f64 = 1e-10;
pub const DEFAULT_MEDIAN_MAX_ITER: usize = 1000;
const NEWTON_HALVINGS: usize = 4;

/// Spatial sign of `x` about `center`: the unit vector pointing from
/// `center` to `x`, or the zero vector when they coincide.
pub fn spatial_sign(x: &[f64], center: &[f64]) -> Result<Vec<f64>> {
    if x.len() != center.len() {
        return Err(Error::domain(format!(
            "spatial_sign: dimension mismatch ({} vs {})",
            x.len(),
            center.len()
        )));
    }
    let diff: Vec<f64> = x.iter().zip(center).map(|(a, b)| a - b).collect();
    let norm = diff.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Ok(vec![0.0; x.len()]);
    }
    Ok(diff.into_iter().map(|v| v / norm).collect())
}

/// Result of the spatial median iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatialMedian {
    pub location: Vec<f64>,
    pub iterations: usize,
    /// Norm of the average spatial sign at `location`, after discounting the
    /// observations that coincide with it.
    pub residual: f64,
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn objective(data: &DataMatrix, y: &[f64]) -> f64 {
    data.rows().map(|r| dist(r, y)).sum()
}

/// `(‖Σ s(Xᵢ − x)‖, #{Xᵢ = x})`; `x` minimizes the objective iff the norm
/// does not exceed the multiplicity.
fn anchor_stat(data: &DataMatrix, x: &[f64]) -> (f64, usize) {
    let mut sum = vec![0.0; x.len()];
    let mut eta = 0usize;
    for row in data.rows() {
        let d = dist(row, x);
        if d == 0.0 {
            eta += 1;
            continue;
        }
        for (s, (r, c)) in sum.iter_mut().zip(row.iter().zip(x)) {
            *s += (r - c) / d;
        }
    }
    (sum.iter().map(|v| v * v).sum::<f64>().sqrt(), eta)
}

/// Spatial (geometric) median: the minimizer of `Σ ‖Xᵢ − μ‖`.
///
/// Weiszfeld iteration started at the coordinate-wise median, with the
/// Vardi–Zhang modification when the iterate coincides with data points.
/// Each step also tries a Newton step (kept only if it lowers the objective)
/// and tests whether the nearest data point is itself the minimizer, which
/// the plain iteration only approaches sublinearly. Converged when the
/// corrected average spatial sign has norm `<= tol`.
pub fn spatial_median(data: &DataMatrix, tol: f64, max_iter: usize) -> Result<SpatialMedian> {
    let n = data.nrows();
    let p = data.ncols();
    if n == 0 {
        return Err(Error::domain("spatial_median: empty data"));
    }
    let mut y: Vec<f64> = (0..p)
        .map(|j| {
            let mut col = data.column(j);
            median_in_place(&mut col)
        })
        .collect();

    let mut weighted = vec![0.0; p];
    let mut signs = vec![0.0; p];
    let mut hess = DMatrix::<f64>::zeros(p, p);
    for iter in 0..=max_iter {
        weighted.fill(0.0);
        signs.fill(0.0);
        hess.fill(0.0);
        let mut weight_sum = 0.0;
        let mut coincident = 0usize;
        let mut f = 0.0;
        let mut nearest = (f64::INFINITY, 0usize);
        for (i, row) in data.rows().enumerate() {
            let d = dist(row, &y);
            f += d;
            if d == 0.0 {
                coincident += 1;
                continue;
            }
            if d < nearest.0 {
                nearest = (d, i);
            }
            let w = 1.0 / d;
            weight_sum += w;
            for j in 0..p {
                weighted[j] += row[j] * w;
                signs[j] += (row[j] - y[j]) * w;
            }
            for a in 0..p {
                let ua = (row[a] - y[a]) * w;
                for b in 0..p {
                    let ub = (row[b] - y[b]) * w;
                    hess[(a, b)] += w * (f64::from(u8::from(a == b)) - ua * ub);
                }
            }
        }
        let sign_norm = signs.iter().map(|v| v * v).sum::<f64>().sqrt();
        let residual = (sign_norm - coincident as f64).max(0.0) / n as f64;
        if residual <= tol {
            return Ok(SpatialMedian {
                location: y,
                iterations: iter,
                residual,
            });
        }
        if iter == max_iter {
            return Err(Error::Convergence {
                algorithm: "spatial_median",
                iterations: max_iter,
                residual,
                last_iterate: y,
            });
        }
        if coincident == 0 && iter >= 2 {
            let xk = data.row(nearest.1);
            let (r, eta) = anchor_stat(data, xk);
            if (r - eta as f64).max(0.0) / (n as f64) <= tol {
                y.copy_from_slice(xk);
                continue;
            }
        }
        if coincident == 0 {
            if let Some(chol) = hess.clone().cholesky() {
                let step = chol.solve(&nalgebra::DVector::from_column_slice(&signs));
                let mut t = 1.0;
                let mut accepted = false;
                for _ in 0..NEWTON_HALVINGS {
                    let cand: Vec<f64> = y.iter().zip(step.iter()).map(|(a, b)| a + t * b).collect();
                    if cand.iter().all(|v| v.is_finite()) && objective(data, &cand) < f {
                        y = cand;
                        accepted = true;
                        break;
                    }
                    t *= 0.5;
                }
                if accepted {
                    continue;
                }
            }
        }
        // Weiszfeld map, pulled back toward a coincident data point.
        let gamma = if coincident > 0 {
            (coincident as f64 / sign_norm).min(1.0)
        } else {
            0.0
        };
        for j in 0..p {
            let t = weighted[j] / weight_sum;
            y[j] = (1.0 - gamma) * t + gamma * y[j];
        }
    }
    unreachable!("loop returns on its last iteration")
}

/// Spatial median with the default tolerance (1e-10) and iteration cap (1000).
pub fn spatial_median_default(data: &DataMatrix) -> Result<SpatialMedian> {
    spatial_median(data, DEFAULT_MEDIAN_TOL, DEFAULT_MEDIAN_MAX_ITER)
}

/// Empirical SSCM `(1/n) Σ s(Xᵢ − δ) s(Xᵢ − δ)ᵀ`.
///
/// With `center = None` the spatial median is used. Observations equal to
/// the center contribute a zero sign but still count in `n`.
pub fn sscm(data: &DataMatrix, center: Option<&[f64]>) -> Result<DMatrix<f64>> {
    let n = data.nrows();
    let p = data.ncols();
    if n < 2 {
        return Err(Error::domain("sscm requires at least two observations"));
    }
    let center = match center {
        Some(c) if c.len() != p => {
            return Err(Error::domain("sscm: center has wrong dimension"));
        }
        Some(c) => c.to_vec(),
        None => spatial_median_default(data)?.location,
    };
    let mut out = DMatrix::<f64>::zeros(p, p);
    let mut diff = vec![0.0; p];
    for row in data.rows() {
        let mut r2 = 0.0;
        for j in 0..p {
            diff[j] = row[j] - center[j];
            r2 += diff[j] * diff[j];
        }
        if r2 == 0.0 {
            continue;
        }
        for a in 0..p {
            for b in a..p {
                out[(a, b)] += diff[a] * diff[b] / r2;
            }
        }
    }
    for a in 0..p {
        for b in a..p {
            let v = out[(a, b)] / n as f64;
            out[(a, b)] = v;
            out[(b, a)] = v;
        }
    }
    Ok(out)
}

/// Bivariate SSCM about a fixed center, plus the number of observations that
/// coincide with the center.
pub fn sscm2_about(points: &[[f64; 2]], center: [f64; 2]) -> (SymMat2, usize) {
    let mut s11 = 0.0;
    let mut s12 = 0.0;
    let mut s22 = 0.0;
    let mut zeros = 0usize;
    for x in points {
        let dx = x[0] - center[0];
        let dy = x[1] - center[1];
        let r2 = dx * dx + dy * dy;
        if r2 == 0.0 {
            zeros += 1;
            continue;
        }
        s11 += dx * dx / r2;
        s12 += dx * dy / r2;
        s22 += dy * dy / r2;
    }
    let n = points.len() as f64;
    (SymMat2::new(s11 / n, s12 / n, s22 / n), zeros)
}

/// Shape matrix reconstructed from a bivariate SSCM, parametrized by
/// reciprocal diagonal elements `V₀ = [[a, ρ], [ρ, 1/a]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Shape2 {
    pub a: f64,
    pub rho: f64,
    pub u: Mat2,
    /// `λ₁/λ₂ = (δ₁/δ₂)²`.
    pub lambda_ratio: f64,
}

impl Shape2 {
    pub fn v0(&self) -> SymMat2 {
        SymMat2::new(self.a, self.rho, 1.0 / self.a)
    }
}

/// Reconstructs the shape from an SSCM through its eigendecomposition.
pub fn shape_from_sscm2(s: &SymMat2) -> Result<Shape2> {
    let eig = eig_sym2(s)?;
    let (d1, d2) = (eig.lambda1, eig.lambda2);
    if !(d1 > 0.0) || d2 < 0.0 && d2.abs() > 1e-12 * d1 {
        return Err(Error::domain("shape_from_sscm2: SSCM is not positive semidefinite"));
    }
    if d2 <= 1e-14 * d1 {
        return Err(Error::degenerate("SSCM is singular: all spatial signs are collinear"));
    }
    let v = eig.reconstruct_with(d1 / d2, d2 / d1);
    Ok(Shape2 {
        a: (v.s11 / v.s22).sqrt(),
        rho: (v.s12 / (v.s11 * v.s22).sqrt()).clamp(-1.0, 1.0),
        u: eig.u,
        lambda_ratio: (d1 / d2) * (d1 / d2),
    })
}

/// Spatial sign correlation computed from an SSCM by the explicit formula
///
/// `ρ̂ = c ŝ₁₂ b / √((ŝ₁₂² + b²)² + (ŝ₁₂ c b)²)` with
/// `d = ½ + √((ŝ₁₁ − ½)² + ŝ₁₂²)`, `b = d − ŝ₁₁`, `c = (2d − 1)/(d(1 − d))`.
///
/// `s` is first normalized to unit trace. A zero off-diagonal entry gives 0.
pub fn rho_from_sscm2(s: &SymMat2) -> Result<f64> {
    if !s.is_finite() {
        return Err(Error::domain("rho_from_sscm2: non-finite SSCM"));
    }
    let tr = s.trace();
    if !(tr > 0.0) {
        return Err(Error::degenerate("SSCM has zero trace"));
    }
    let s11 = s.s11 / tr;
    let s12 = s.s12 / tr;
    if s12 == 0.0 {
        return Ok(0.0);
    }
    let t = s11 - 0.5;
    let r = t.hypot(s12);
    let d = 0.5 + r;
    let one_minus_d = 0.5 - r;
    if one_minus_d <= 1e-14 {
        return Err(Error::degenerate("SSCM is singular: all spatial signs are collinear"));
    }
    // b = d − s₁₁ = r − t, rewritten when t > 0 to avoid cancellation.
    let b = if t > 0.0 { s12 * s12 / (r + t) } else { r - t };
    let c = 2.0 * r / (d * one_minus_d);
    // Divide numerator and denominator by ŝ₁₂².
    let beta = b / s12;
    let rho = c * beta / ((1.0 + beta * beta).powi(2) + (c * beta).powi(2)).sqrt();
    Ok(rho.clamp(-1.0, 1.0))
}

fn resolve_center(points: &[[f64; 2]], data: &DataMatrix, center: Option<[f64; 2]>) -> Result<([f64; 2], usize)> {
    debug_assert_eq!(points.len(), data.nrows());
    match center {
        Some(c) => Ok((c, 0)),
        None => {
            let med = spatial_median_default(data)?;
            Ok(([med.location[0], med.location[1]], med.iterations))
        }
    }
}

/// Spatial sign correlation of bivariate data.
///
/// With `center = None` the SSCM is taken about the spatial median. The
/// diagnostics carry the reconstructed `a_hat`, the eigenvalue ratio and the
/// median iteration count.
pub fn spatial_sign_corr(data: &DataMatrix, center: Option<[f64; 2]>) -> Result<CorrEstimate> {
    let points = data.points2()?;
    if points.len() < 2 {
        return Err(Error::domain("spatial_sign_corr requires n >= 2"));
    }
    let (c, iterations) = resolve_center(&points, data, center)?;
    let (s, zeros) = sscm2_about(&points, c);
    if zeros == points.len() {
        return Err(Error::degenerate("all observations coincide with the center"));
    }
    let shape = shape_from_sscm2(&s)?;
    let value = rho_from_sscm2(&s)?;

    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("a_hat".to_string(), shape.a);
    diagnostics.insert("lambda_ratio".to_string(), shape.lambda_ratio);
    diagnostics.insert("median_iterations".to_string(), iterations as f64);
    diagnostics.insert("center_x".to_string(), c[0]);
    diagnostics.insert("center_y".to_string(), c[1]);
    diagnostics.insert("zero_signs".to_string(), zeros as f64);
    diagnostics.insert("s11".to_string(), s.s11);
    diagnostics.insert("s12".to_string(), s.s12);
    diagnostics.insert("s22".to_string(), s.s22);
    Ok(CorrEstimate {
        estimator: EstimatorId::SpatialSign,
        value,
        ci: None,
        n_used: points.len(),
        diagnostics,
    })
}

/// Two-stage spatial sign correlation: each margin is divided by a robust
/// scale estimate before the spatial sign correlation is computed.
pub fn two_stage_spatial_sign_corr(data: &DataMatrix, scale: ScaleMethod) -> Result<CorrEstimate> {
    data.require_bivariate()?;
    let x = data.column(0);
    let y = data.column(1);
    let (sx, sy) = match scale {
        ScaleMethod::Mad => (mad(&x, true)?.value, mad(&y, true)?.value),
        ScaleMethod::Qn => (qn(&x)?.value, qn(&y)?.value),
        ScaleMethod::TauScale => return Err(Error::domain("two-stage standardization supports MAD or Qn only")),
    };
    let standardized = data.map_column(0, |v| v / sx).map_column(1, |v| v / sy);
    let mut est = spatial_sign_corr(&standardized, None)?;
    est.estimator = match scale {
        ScaleMethod::Mad => EstimatorId::SpatialSignTwoStageMad,
        _ => EstimatorId::SpatialSignTwoStage,
    };
    est.diagnostics.insert("scale_x".to_string(), sx);
    est.diagnostics.insert("scale_y".to_string(), sy);
    Ok(est)
}

/// Wald interval `ρ̂ ± z_{(1+level)/2} √(ASV(ρ̂, â)/n)` clipped to `[-1, 1]`.
pub fn sscorr_interval(rho_hat: f64, a_hat: f64, n: usize, level: f64) -> Result<(f64, f64)> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::domain("confidence level must lie in (0, 1)"));
    }
    if n < 2 {
        return Err(Error::domain("confidence interval requires n >= 2"));
    }
    let rho = rho_hat.clamp(-1.0, 1.0);
    let asv = asv_spatial_corr(rho, a_hat);
    let z = normal_quantile_unchecked(0.5 * (1.0 + level));
    let half = z * (asv / n as f64).sqrt();
    Ok(((rho - half).max(-1.0), (rho + half).min(1.0)))
}

/// Attaches a Wald interval to a spatial sign estimate. For the two-stage
/// estimator the margins are treated as standardized (`â = 1`).
pub fn sscorr_ci(estimate: &CorrEstimate, n: usize, level: f64, two_stage: bool) -> Result<CorrEstimate> {
    let a_hat = if two_stage {
        1.0
    } else {
        *estimate
            .diagnostics
            .get("a_hat")
            .ok_or_else(|| Error::domain("estimate carries no a_hat diagnostic"))?
    };
    let mut out = estimate.clone();
    out.ci = Some(sscorr_interval(estimate.value, a_hat, n, level)?);
    Ok(out)
}
