//! Gnanadesikan–Kettenring correlation from a robust scale.

use super::scale::{scale_raw, ScaleMethod};
use super::{require_n, CorrEstimate, EstimatorId};
use crate::data::DataMatrix;
use crate::error::{Error, Result};

/// `(σ̂²(u) − σ̂²(v)) / (σ̂²(u) + σ̂²(v))` with `u = x/α + y/β`,
/// `v = x/α − y/β`, `α = σ̂(x)`, `β = σ̂(y)`.
pub fn gk_corr(data: &DataMatrix, scale: ScaleMethod) -> Result<CorrEstimate> {
    data.require_bivariate()?;
    require_n(data, 2, "gk_corr")?;
    let id = match scale {
        ScaleMethod::Qn => EstimatorId::GkQn,
        ScaleMethod::TauScale => EstimatorId::GkTau,
        ScaleMethod::Mad => return Err(Error::domain("gk_corr supports Qn or the tau-scale")),
    };
    let x = data.column(0);
    let y = data.column(1);
    let alpha = scale_raw(&x, scale);
    let beta = scale_raw(&y, scale);
    if alpha == 0.0 || beta == 0.0 {
        return Err(Error::degenerate("zero marginal scale"));
    }
    let u: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a / alpha + b / beta).collect();
    let v: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a / alpha - b / beta).collect();
    let su = scale_raw(&u, scale).powi(2);
    let sv = scale_raw(&v, scale).powi(2);
    if su + sv == 0.0 {
        return Err(Error::degenerate("zero scale of both sum and difference"));
    }
    let value = ((su - sv) / (su + sv)).clamp(-1.0, 1.0);
    Ok(CorrEstimate::new(id, value, x.len())
        .with_diagnostic("scale_x", alpha)
        .with_diagnostic("scale_y", beta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{sample_normal2, SeedSpec};
    use crate::numerics::SymMat2;
    use approx::assert_abs_diff_eq;

    #[test]
    fn identical_margins_give_one() {
        let x: Vec<f64> = (0..30).map(|i| (i as f64 * 1.3).cos() * i as f64).collect();
        let d = DataMatrix::from_columns(&x, &x).unwrap();
        assert_eq!(gk_corr(&d, ScaleMethod::Qn).unwrap().value, 1.0);
        assert_eq!(gk_corr(&d, ScaleMethod::TauScale).unwrap().value, 1.0);
    }

    #[test]
    fn symmetric_sum_and_difference_give_zero() {
        // Points (±1, 0), (0, ±1) scaled: u and v have identical samples.
        let d = DataMatrix::from_rows(&[
            [1.0, 0.0],
            [-1.0, 0.0],
            [0.0, 1.0],
            [0.0, -1.0],
            [2.0, 0.0],
            [0.0, 2.0],
            [-2.0, 0.0],
            [0.0, -2.0],
        ])
        .unwrap();
        assert_abs_diff_eq!(gk_corr(&d, ScaleMethod::Qn).unwrap().value, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn consistency_at_normal() {
        let data = sample_normal2(&SymMat2::new(1.0, 0.5, 1.0), 100_000, &SeedSpec::new(21)).unwrap();
        assert_abs_diff_eq!(gk_corr(&data, ScaleMethod::Qn).unwrap().value, 0.5, epsilon = 0.01);
        assert_abs_diff_eq!(
            gk_corr(&data, ScaleMethod::TauScale).unwrap().value,
            0.5,
            epsilon = 0.01
        );
    }
}
