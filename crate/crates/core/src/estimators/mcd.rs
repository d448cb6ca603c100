//! Minimum covariance determinant by concentration steps (FAST-MCD).

use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{CorrEstimate, EstimatorId, ScatterEstimate, ScatterMethod};
use crate::data::DataMatrix;
use crate::distributions::{SeedSpec, TAG_MCD};
use crate::error::{Error, Result};
use crate::numerics::{chi2_cdf, chi2_quantile, cmp_f64, SymMat2};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McdOptions {
    /// Trimming proportion; the subset size is `⌊(1−alpha)·n⌋`.
    pub alpha: f64,
    pub reweight: bool,
    pub n_starts: usize,
    /// Number of best starts iterated to convergence.
    pub keep_best: usize,
}

impl Default for McdOptions {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            reweight: true,
            n_starts: 500,
            keep_best: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct McdFit {
    pub raw: ScatterEstimate,
    pub reweighted: Option<ScatterEstimate>,
    pub n: usize,
    pub h: usize,
    /// Determinant of the unscaled covariance of the best subset.
    pub raw_det: f64,
}

impl McdFit {
    pub fn corr(&self, id: EstimatorId) -> Result<CorrEstimate> {
        let n = self.n;
        match id {
            EstimatorId::Rmcd => self.raw.clone().into_corr(id, n),
            EstimatorId::Wmcd => self
                .reweighted
                .clone()
                .ok_or_else(|| Error::domain("MCD fit was computed without reweighting"))?
                .into_corr(id, n),
            _ => Err(Error::domain(format!("{id} is not an MCD estimator"))),
        }
    }
}

/// Size of the subsample used for the start phase on large data.
const SUBSAMPLE_THRESHOLD: usize = 600;
const SUBSAMPLE_SIZE: usize = 1500;
const START_STEPS: usize = 2;
const MAX_STEPS: usize = 100;

#[derive(Debug, Clone)]
pub(crate) struct Candidate {
    mean: [f64; 2],
    cov: SymMat2,
    det: f64,
}

pub(crate) fn mean_cov(points: &[[f64; 2]], idx: &[usize]) -> ([f64; 2], SymMat2) {
    let k = idx.len() as f64;
    let (mut mx, mut my) = (0.0, 0.0);
    for &i in idx {
        mx += points[i][0];
        my += points[i][1];
    }
    mx /= k;
    my /= k;
    let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
    for &i in idx {
        let (dx, dy) = (points[i][0] - mx, points[i][1] - my);
        a += dx * dx;
        b += dx * dy;
        c += dy * dy;
    }
    ([mx, my], SymMat2::new(a / k, b / k, c / k))
}

fn mahalanobis2(p: [f64; 2], mean: [f64; 2], inv: &SymMat2) -> f64 {
    inv.quad_form([p[0] - mean[0], p[1] - mean[1]])
}

/// Indices of the `h` observations with the smallest distances under
/// `(mean, cov)`. `None` when `cov` is singular.
pub(crate) fn c_step(points: &[[f64; 2]], mean: [f64; 2], cov: &SymMat2, h: usize) -> Option<Vec<usize>> {
    if !(cov.det() > 0.0) {
        return None;
    }
    let inv = cov.inverse()?;
    let mut d: Vec<(f64, usize)> = points
        .iter()
        .enumerate()
        .map(|(i, p)| (mahalanobis2(*p, mean, &inv), i))
        .collect();
    if h < d.len() {
        d.select_nth_unstable_by(h - 1, |a, b| cmp_f64(&a.0, &b.0).then(a.1.cmp(&b.1)));
    }
    let mut idx: Vec<usize> = d[..h].iter().map(|t| t.1).collect();
    idx.sort_unstable();
    Some(idx)
}

/// Iterates C-steps from an `h`-subset until the determinant stops
/// decreasing. Returns the final candidate and the determinant of every
/// visited subset.
pub(crate) fn concentrate(
    points: &[[f64; 2]],
    subset: Vec<usize>,
    h: usize,
    max_steps: usize,
) -> (Candidate, Vec<f64>) {
    let (mut mean, mut cov) = mean_cov(points, &subset);
    let mut det = cov.det();
    let mut trace = vec![det];
    let mut current = subset;
    for _ in 0..max_steps {
        let Some(next) = c_step(points, mean, &cov, h) else {
            break;
        };
        if next == current {
            break;
        }
        let (m, c) = mean_cov(points, &next);
        let d = c.det();
        trace.push(d);
        if d >= det {
            break;
        }
        mean = m;
        cov = c;
        det = d;
        current = next;
    }
    (Candidate { mean, cov, det }, trace)
}

/// Random elemental start, enlarged until its covariance is nonsingular.
pub(crate) fn elemental_start(points: &[[f64; 2]], rng: &mut ChaCha8Rng, h: usize) -> Option<([f64; 2], SymMat2)> {
    let n = points.len();
    let mut idx: Vec<usize> = sample(rng, n, 3).into_vec();
    loop {
        let (m, c) = mean_cov(points, &idx);
        if c.det() > 0.0 {
            return Some((m, c));
        }
        if idx.len() >= h {
            return None;
        }
        let extra = rng.random_range(0..n);
        if !idx.contains(&extra) {
            idx.push(extra);
        }
    }
}

fn search(points: &[[f64; 2]], h: usize, opts: &McdOptions, rng: &mut ChaCha8Rng) -> Vec<Candidate> {
    let mut found = Vec::with_capacity(opts.n_starts);
    for _ in 0..opts.n_starts {
        let Some((m, c)) = elemental_start(points, rng, h) else {
            continue;
        };
        let Some(subset) = c_step(points, m, &c, h) else {
            continue;
        };
        let (cand, _) = concentrate(points, subset, h, START_STEPS);
        found.push(cand);
    }
    found.sort_by(|a, b| cmp_f64(&a.det, &b.det));
    found.truncate(opts.keep_best);
    found
}

/// `(1−α) / F_{χ²₄}(χ²₂⁻¹(1−α))`, equal to 1 at `α = 0`.
pub fn consistency_factor(alpha: f64) -> Result<f64> {
    if alpha == 0.0 {
        return Ok(1.0);
    }
    let q = chi2_quantile(1.0 - alpha, 2)?;
    Ok((1.0 - alpha) / chi2_cdf(q, 4))
}

/// Raw (and optionally reweighted) MCD of bivariate data.
pub fn mcd(data: &DataMatrix, opts: &McdOptions, seed: &SeedSpec) -> Result<McdFit> {
    let points = data.points2()?;
    let n = points.len();
    if !(0.0..1.0).contains(&opts.alpha) {
        return Err(Error::domain("MCD alpha must lie in [0, 1)"));
    }
    if n < 6 {
        return Err(Error::domain(format!("mcd requires n >= 6, got {n}")));
    }
    let h = ((1.0 - opts.alpha) * n as f64).floor() as usize;
    if h < 3 {
        return Err(Error::domain("MCD subset size must be at least 3"));
    }
    let all: Vec<usize> = (0..n).collect();

    let best = if h == n {
        let (mean, cov) = mean_cov(&points, &all);
        Candidate {
            mean,
            cov,
            det: cov.det(),
        }
    } else {
        let mut rng = seed.with_tag(TAG_MCD).rng();
        let candidates = if n > SUBSAMPLE_THRESHOLD {
            let m = SUBSAMPLE_SIZE.min(n);
            let sub_idx = sample(&mut rng, n, m).into_vec();
            let sub: Vec<[f64; 2]> = sub_idx.iter().map(|&i| points[i]).collect();
            let h_sub = ((h as f64) * m as f64 / n as f64).ceil() as usize;
            search(&sub, h_sub.max(3), opts, &mut rng)
        } else {
            search(&points, h, opts, &mut rng)
        };
        let mut best: Option<Candidate> = None;
        for cand in candidates {
            let Some(subset) = c_step(&points, cand.mean, &cand.cov, h) else {
                continue;
            };
            let (c, _) = concentrate(&points, subset, h, MAX_STEPS);
            if best.as_ref().is_none_or(|b| c.det < b.det) {
                best = Some(c);
            }
        }
        best.ok_or_else(|| Error::degenerate("all MCD candidate subsets are singular"))?
    };
    if !(best.det > 0.0) {
        return Err(Error::degenerate("MCD subset lies on a line (exact fit)"));
    }

    let raw_cov = best.cov.scale(consistency_factor(opts.alpha)?);
    let raw = ScatterEstimate {
        location: best.mean,
        cov: raw_cov,
        method: ScatterMethod::RawMcd,
        iterations: 0,
    };
    let reweighted = if opts.reweight {
        Some(reweight(&points, best.mean, &raw_cov)?)
    } else {
        None
    };
    Ok(McdFit {
        n,
        raw,
        reweighted,
        h,
        raw_det: best.det,
    })
}

fn reweight(points: &[[f64; 2]], mean: [f64; 2], cov: &SymMat2) -> Result<ScatterEstimate> {
    let q = chi2_quantile(0.975, 2)?;
    let inv = cov
        .inverse()
        .ok_or_else(|| Error::degenerate("singular raw MCD covariance"))?;
    let kept: Vec<usize> = (0..points.len())
        .filter(|&i| mahalanobis2(points[i], mean, &inv) <= q)
        .collect();
    if kept.len() < 3 {
        return Err(Error::degenerate("fewer than three observations kept by reweighting"));
    }
    let (m, c) = mean_cov(points, &kept);
    if !(c.det() > 0.0) {
        return Err(Error::degenerate("reweighted MCD covariance is singular"));
    }
    let factor = 0.975 / chi2_cdf(q, 4);
    Ok(ScatterEstimate {
        location: m,
        cov: c.scale(factor),
        method: ScatterMethod::WeightedMcd,
        iterations: 0,
    })
}

/// Raw or reweighted MCD correlation with default options.
pub fn mcd_corr(data: &DataMatrix, reweighted: bool, seed: &SeedSpec) -> Result<CorrEstimate> {
    let id = if reweighted {
        EstimatorId::Wmcd
    } else {
        EstimatorId::Rmcd
    };
    mcd(data, &McdOptions::default(), seed)?.corr(id)
}
