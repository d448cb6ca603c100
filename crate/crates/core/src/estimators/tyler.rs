//! Tyler's M-estimator of shape.

use super::{require_n, CorrEstimate, EstimatorId, ScatterEstimate, ScatterMethod};
use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::numerics::SymMat2;
use crate::sscm::spatial_median_default;

pub const TYLER_TOL: f64 = 1e-10;
pub const TYLER_MAX_ITER: usize = 500;

/// `(2/n) Σ rᵢrᵢᵀ / (rᵢᵀ V⁻¹ rᵢ)` over nonzero residuals.
pub(crate) fn tyler_map(residuals: &[[f64; 2]], v: &SymMat2) -> Result<SymMat2> {
    let inv = v.inverse().ok_or_else(|| Error::degenerate("singular shape iterate"))?;
    let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
    for r in residuals {
        let q = inv.quad_form(*r);
        a += r[0] * r[0] / q;
        b += r[0] * r[1] / q;
        c += r[1] * r[1] / q;
    }
    let f = 2.0 / residuals.len() as f64;
    Ok(SymMat2::new(f * a, f * b, f * c))
}

/// Tyler shape about `center` (spatial median when `None`), normalized to
/// trace 2.
pub fn tyler_shape(data: &DataMatrix, center: Option<[f64; 2]>) -> Result<ScatterEstimate> {
    data.require_bivariate()?;
    require_n(data, 3, "tyler_shape")?;
    let mu = match center {
        Some(c) => c,
        None => {
            let m = spatial_median_default(data)?;
            [m.location[0], m.location[1]]
        }
    };
    let residuals: Vec<[f64; 2]> = data
        .rows()
        .map(|r| [r[0] - mu[0], r[1] - mu[1]])
        .filter(|r| r[0] != 0.0 || r[1] != 0.0)
        .collect();
    if residuals.len() < 2 {
        return Err(Error::degenerate("fewer than two observations differ from the center"));
    }
    let mut v = SymMat2::identity();
    for iter in 1..=TYLER_MAX_ITER {
        let m = tyler_map(&residuals, &v)?;
        let tr = m.trace();
        let next = m.scale(2.0 / tr);
        if !next.is_finite() || next.det() <= 1e-12 {
            return Err(Error::degenerate(
                "observations concentrated on a line through the center",
            ));
        }
        let change = next.max_abs_diff(&v);
        v = next;
        if change <= TYLER_TOL {
            return Ok(ScatterEstimate {
                location: mu,
                cov: v,
                method: ScatterMethod::Tyler,
                iterations: iter,
            });
        }
    }
    Err(Error::Convergence {
        algorithm: "tyler",
        iterations: TYLER_MAX_ITER,
        residual: tyler_map(&residuals, &v)?.max_abs_diff(&v),
        last_iterate: vec![v.s11, v.s12, v.s22],
    })
}

pub fn tyler_corr(data: &DataMatrix, center: Option<[f64; 2]>) -> Result<CorrEstimate> {
    tyler_shape(data, center)?.into_corr(EstimatorId::Tyler, data.nrows())
}
