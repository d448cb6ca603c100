//! Stahel–Donoho weighted location and scatter.

use rand::Rng;

use super::scale::mad_constant;
use super::{require_n, CorrEstimate, EstimatorId, ScatterEstimate, ScatterMethod};
use crate::data::DataMatrix;
use crate::distributions::{SeedSpec, TAG_STAHEL_DONOHO};
use crate::error::{Error, Result};
use crate::numerics::{chi2_quantile, SymMat2};

pub const DEFAULT_DIRECTIONS: usize = 10_000;

const BRACKET_MIN_N: usize = 2048;
const BRACKET_SAMPLE: usize = 256;
const BRACKET_HALF_WIDTH: usize = 24;

/// `(k-th, (k−1)-th)` smallest values (0-based; the second is `NaN` for
/// `k = 0`). Large inputs are first bracketed by order statistics of a
/// strided sample so that the selection only runs on values inside the
/// bracket; a missed bracket falls back to a full selection.
fn kth_pair(v: &[f64], k: usize, buf: &mut Vec<f64>, sample: &mut Vec<f64>) -> (f64, f64) {
    let n = v.len();
    if n >= BRACKET_MIN_N {
        sample.clear();
        sample.extend(v.iter().step_by(n / BRACKET_SAMPLE));
        let m = sample.len();
        let q = k * m / n;
        let (lo, hi) = if q > BRACKET_HALF_WIDTH && q + BRACKET_HALF_WIDTH < m {
            let hi = *sample.select_nth_unstable_by(q + BRACKET_HALF_WIDTH, f64::total_cmp).1;
            let lo = *sample[..q + BRACKET_HALF_WIDTH]
                .select_nth_unstable_by(q - BRACKET_HALF_WIDTH, f64::total_cmp)
                .1;
            (lo, hi)
        } else {
            (f64::NEG_INFINITY, f64::INFINITY)
        };
        buf.resize(n, 0.0);
        let (mut below, mut len) = (0usize, 0usize);
        for &x in v {
            below += (x < lo) as usize;
            buf[len] = x;
            len += (x >= lo && x <= hi) as usize;
        }
        if below < k && k < below + len {
            let (left, kth, _) = buf[..len].select_nth_unstable_by(k - below, f64::total_cmp);
            let prev = left.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            return (*kth, prev);
        }
    }
    buf.clear();
    buf.extend_from_slice(v);
    let (left, kth, _) = buf.select_nth_unstable_by(k, f64::total_cmp);
    let prev = left.iter().copied().fold(f64::NAN, f64::max);
    (*kth, prev)
}

fn median_with(v: &[f64], buf: &mut Vec<f64>, sample: &mut Vec<f64>) -> f64 {
    let n = v.len();
    let (upper, lower) = kth_pair(v, n / 2, buf, sample);
    if n % 2 == 1 {
        upper
    } else {
        0.5 * (lower + upper)
    }
}

/// Unit normals of lines through pairs of observations; projections on them
/// are affine invariant up to scale.
fn pair_directions(points: &[[f64; 2]], n_dirs: usize, seed: &SeedSpec) -> Vec<[f64; 2]> {
    let n = points.len();
    let mut dirs = Vec::new();
    let push = |i: usize, j: usize, dirs: &mut Vec<[f64; 2]>| {
        let (dx, dy) = (points[j][0] - points[i][0], points[j][1] - points[i][1]);
        let norm = dx.hypot(dy);
        if norm > 0.0 {
            dirs.push([-dy / norm, dx / norm]);
        }
    };
    if n * (n - 1) / 2 <= n_dirs {
        for i in 0..n {
            for j in i + 1..n {
                push(i, j, &mut dirs);
            }
        }
    } else {
        let mut rng = seed.with_tag(TAG_STAHEL_DONOHO).rng();
        for _ in 0..n_dirs {
            let i = rng.random_range(0..n);
            let mut j = rng.random_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            push(i, j, &mut dirs);
        }
    }
    dirs
}

/// Outlyingness `max_a |aᵀxᵢ − med(aᵀX)| / MAD(aᵀX)` over the given
/// directions, with the normal-consistent MAD. Directions with zero MAD are
/// skipped.
pub fn outlyingness(points: &[[f64; 2]], directions: &[[f64; 2]]) -> Result<Vec<f64>> {
    let n = points.len();
    let k = mad_constant();
    let mut r = vec![0.0f64; n];
    let mut proj = vec![0.0; n];
    let mut dev = vec![0.0; n];
    let (mut buf, mut sample) = (Vec::with_capacity(n), Vec::new());
    let mut used = 0usize;
    for a in directions {
        for (p, x) in proj.iter_mut().zip(points) {
            *p = a[0] * x[0] + a[1] * x[1];
        }
        let med = median_with(&proj, &mut buf, &mut sample);
        for (d, p) in dev.iter_mut().zip(&proj) {
            *d = (p - med).abs();
        }
        let mad = k * median_with(&dev, &mut buf, &mut sample);
        if mad == 0.0 {
            continue;
        }
        used += 1;
        let inv = 1.0 / mad;
        for (ri, d) in r.iter_mut().zip(&dev) {
            *ri = ri.max(d * inv);
        }
    }
    if used == 0 {
        return Err(Error::degenerate("every projection direction has zero MAD"));
    }
    Ok(r)
}

/// Stahel–Donoho estimator with weights `min(1, (c/rᵢ)²)`,
/// `c = √χ²₂(0.95)`. Directions are all normalized pairwise differences when
/// there are at most `n_dirs` pairs, otherwise `n_dirs` random pairs.
pub fn stahel_donoho(data: &DataMatrix, n_dirs: usize, seed: &SeedSpec) -> Result<ScatterEstimate> {
    require_n(data, 4, "stahel_donoho")?;
    let points = data.points2()?;
    let dirs = pair_directions(&points, n_dirs, seed);
    let r = outlyingness(&points, &dirs)?;
    let c2 = chi2_quantile(0.95, 2)?;
    let w: Vec<f64> = r
        .iter()
        .map(|&ri| if ri * ri <= c2 { 1.0 } else { c2 / (ri * ri) })
        .collect();
    let sw: f64 = w.iter().sum();
    let (mut mx, mut my) = (0.0, 0.0);
    for (wi, p) in w.iter().zip(&points) {
        mx += wi * p[0];
        my += wi * p[1];
    }
    mx /= sw;
    my /= sw;
    let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
    for (wi, p) in w.iter().zip(&points) {
        let (dx, dy) = (p[0] - mx, p[1] - my);
        a += wi * dx * dx;
        b += wi * dx * dy;
        c += wi * dy * dy;
    }
    let cov = SymMat2::new(a / sw, b / sw, c / sw);
    if !(cov.det() > 0.0) {
        return Err(Error::degenerate("Stahel-Donoho scatter is singular"));
    }
    Ok(ScatterEstimate {
        location: [mx, my],
        cov,
        method: ScatterMethod::StahelDonoho,
        iterations: dirs.len(),
    })
}

pub fn stahel_donoho_corr(data: &DataMatrix, n_dirs: usize, seed: &SeedSpec) -> Result<CorrEstimate> {
    stahel_donoho(data, n_dirs, seed)?.into_corr(EstimatorId::StahelDonoho, data.nrows())
}
