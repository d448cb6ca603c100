//! Competitor correlation estimators and the robust scale estimators they
//! use. Every estimator returned by [`estimate`] is transformed to be
//! Fisher-consistent for the correlation at the normal model.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::DataMatrix;
use crate::distributions::SeedSpec;
use crate::error::{Error, Result};
use crate::numerics::SymMat2;

pub mod gk;
pub mod mcd;
pub mod rank;
pub mod s_estimator;
pub mod scale;
pub mod stahel_donoho;
pub mod tyler;

/// Identifier of a correlation estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorId {
    Pearson,
    SpatialSign,
    /// Spatial sign correlation after standardizing margins by `Q_n`.
    SpatialSignTwoStage,
    /// Spatial sign correlation after standardizing margins by the MAD.
    SpatialSignTwoStageMad,
    Quadrant,
    Kendall,
    Spearman,
    GaussianRank,
    GkQn,
    GkTau,
    Tyler,
    Rmcd,
    Wmcd,
    SEstimator,
    StahelDonoho,
}

impl EstimatorId {
    /// The thirteen estimators of the comparison study, in table order.
    pub const STUDY: [EstimatorId; 13] = [
        EstimatorId::Pearson,
        EstimatorId::SpatialSign,
        EstimatorId::Quadrant,
        EstimatorId::Kendall,
        EstimatorId::Spearman,
        EstimatorId::GaussianRank,
        EstimatorId::GkQn,
        EstimatorId::GkTau,
        EstimatorId::Tyler,
        EstimatorId::Rmcd,
        EstimatorId::Wmcd,
        EstimatorId::SEstimator,
        EstimatorId::StahelDonoho,
    ];

    pub const ALL: [EstimatorId; 15] = [
        EstimatorId::Pearson,
        EstimatorId::SpatialSign,
        EstimatorId::SpatialSignTwoStage,
        EstimatorId::SpatialSignTwoStageMad,
        EstimatorId::Quadrant,
        EstimatorId::Kendall,
        EstimatorId::Spearman,
        EstimatorId::GaussianRank,
        EstimatorId::GkQn,
        EstimatorId::GkTau,
        EstimatorId::Tyler,
        EstimatorId::Rmcd,
        EstimatorId::Wmcd,
        EstimatorId::SEstimator,
        EstimatorId::StahelDonoho,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            EstimatorId::Pearson => "pearson",
            EstimatorId::SpatialSign => "spatial_sign",
            EstimatorId::SpatialSignTwoStage => "spatial_sign_two_stage",
            EstimatorId::SpatialSignTwoStageMad => "spatial_sign_two_stage_mad",
            EstimatorId::Quadrant => "quadrant",
            EstimatorId::Kendall => "kendall",
            EstimatorId::Spearman => "spearman",
            EstimatorId::GaussianRank => "gaussian_rank",
            EstimatorId::GkQn => "gk_qn",
            EstimatorId::GkTau => "gk_tau",
            EstimatorId::Tyler => "tyler",
            EstimatorId::Rmcd => "rmcd",
            EstimatorId::Wmcd => "wmcd",
            EstimatorId::SEstimator => "s_estimator",
            EstimatorId::StahelDonoho => "stahel_donoho",
        }
    }

    /// Whether the estimator uses a randomized search and therefore reads
    /// its [`SeedSpec`].
    pub fn is_randomized(&self) -> bool {
        matches!(
            self,
            EstimatorId::Rmcd | EstimatorId::Wmcd | EstimatorId::SEstimator | EstimatorId::StahelDonoho
        )
    }

    /// Parses a comma-separated list. `all` expands to [`EstimatorId::STUDY`].
    pub fn parse_list(s: &str) -> Result<Vec<EstimatorId>> {
        let mut out = Vec::new();
        for token in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            if token == "all" {
                out.extend_from_slice(&Self::STUDY);
            } else {
                out.push(token.parse()?);
            }
        }
        if out.is_empty() {
            return Err(Error::Config("empty estimator list".into()));
        }
        Ok(out)
    }
}

impl fmt::Display for EstimatorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EstimatorId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|id| id.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown estimator id `{s}`")))
    }
}

/// A correlation estimate with optional confidence interval and
/// estimator-specific diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrEstimate {
    pub estimator: EstimatorId,
    pub value: f64,
    pub ci: Option<(f64, f64)>,
    pub n_used: usize,
    pub diagnostics: BTreeMap<String, f64>,
}

impl CorrEstimate {
    pub fn new(estimator: EstimatorId, value: f64, n_used: usize) -> Self {
        Self {
            estimator,
            value,
            ci: None,
            n_used,
            diagnostics: BTreeMap::new(),
        }
    }

    pub fn with_diagnostic(mut self, key: &str, value: f64) -> Self {
        self.diagnostics.insert(key.to_string(), value);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScatterMethod {
    Tyler,
    RawMcd,
    WeightedMcd,
    StahelDonoho,
    SEstimator,
}

/// Location and scatter from an affine equivariant estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterEstimate {
    pub location: [f64; 2],
    pub cov: SymMat2,
    pub method: ScatterMethod,
    pub iterations: usize,
}

impl ScatterEstimate {
    pub fn correlation(&self) -> Result<f64> {
        corr_from_cov(&self.cov)
    }

    pub(crate) fn into_corr(self, id: EstimatorId, n_used: usize) -> Result<CorrEstimate> {
        let value = self.correlation()?;
        Ok(CorrEstimate::new(id, value, n_used)
            .with_diagnostic("location_x", self.location[0])
            .with_diagnostic("location_y", self.location[1])
            .with_diagnostic("v11", self.cov.s11)
            .with_diagnostic("v12", self.cov.s12)
            .with_diagnostic("v22", self.cov.s22)
            .with_diagnostic("iterations", self.iterations as f64))
    }
}

/// `v₁₂ / √(v₁₁ v₂₂)`, clipped to `[-1, 1]`.
pub fn corr_from_cov(v: &SymMat2) -> Result<f64> {
    if !(v.s11 > 0.0 && v.s22 > 0.0) || !v.is_finite() {
        return Err(Error::domain("scatter matrix needs a positive finite diagonal"));
    }
    Ok((v.s12 / (v.s11 * v.s22).sqrt()).clamp(-1.0, 1.0))
}

pub(crate) fn require_n(data: &DataMatrix, min: usize, what: &str) -> Result<()> {
    if data.nrows() < min {
        return Err(Error::domain(format!(
            "{what} requires n >= {min}, got {}",
            data.nrows()
        )));
    }
    Ok(())
}

/// Runs one estimator with its default settings. Randomized estimators derive
/// their search stream from `seed`.
pub fn estimate(id: EstimatorId, data: &DataMatrix, seed: &SeedSpec) -> Result<CorrEstimate> {
    data.require_bivariate()?;
    match id {
        EstimatorId::Pearson => rank::pearson(data),
        EstimatorId::SpatialSign => crate::sscm::spatial_sign_corr(data, None),
        EstimatorId::SpatialSignTwoStage => crate::sscm::two_stage_spatial_sign_corr(data, scale::ScaleMethod::Qn),
        EstimatorId::SpatialSignTwoStageMad => crate::sscm::two_stage_spatial_sign_corr(data, scale::ScaleMethod::Mad),
        EstimatorId::Quadrant => rank::quadrant_corr(data, true),
        EstimatorId::Kendall => rank::kendall_corr(data, true),
        EstimatorId::Spearman => rank::spearman_corr(data, true),
        EstimatorId::GaussianRank => rank::gaussian_rank_corr(data),
        EstimatorId::GkQn => gk::gk_corr(data, scale::ScaleMethod::Qn),
        EstimatorId::GkTau => gk::gk_corr(data, scale::ScaleMethod::TauScale),
        EstimatorId::Tyler => tyler::tyler_corr(data, None),
        EstimatorId::Rmcd | EstimatorId::Wmcd => {
            let fit = mcd::mcd(data, &mcd::McdOptions::default(), seed)?;
            fit.corr(id)
        }
        EstimatorId::SEstimator => s_estimator::s_corr(data, 0.5, seed),
        EstimatorId::StahelDonoho => stahel_donoho::stahel_donoho_corr(data, stahel_donoho::DEFAULT_DIRECTIONS, seed),
    }
}

/// Runs several estimators on the same data. Raw and weighted MCD share a
/// single search; results equal those of individual [`estimate`] calls.
pub fn estimate_many(ids: &[EstimatorId], data: &DataMatrix, seed: &SeedSpec) -> Vec<Result<CorrEstimate>> {
    let mut mcd_fit: Option<Result<mcd::McdFit>> = None;
    ids.iter()
        .map(|&id| match id {
            EstimatorId::Rmcd | EstimatorId::Wmcd => {
                data.require_bivariate()?;
                let fit = mcd_fit.get_or_insert_with(|| mcd::mcd(data, &mcd::McdOptions::default(), seed));
                match fit {
                    Ok(fit) => fit.corr(id),
                    Err(e) => Err(e.clone()),
                }
            }
            _ => estimate(id, data, seed),
        })
        .collect()
}
