//! Moment, rank and sign based correlation estimators.

use std::f64::consts::PI;

use super::{require_n, CorrEstimate, EstimatorId};
use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::numerics::{cmp_f64, median, normal_quantile_unchecked, CompensatedSum};

fn columns(data: &DataMatrix, what: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    data.require_bivariate()?;
    require_n(data, 2, what)?;
    Ok((data.column(0), data.column(1)))
}

/// Moment correlation of two equally long samples, two-pass.
pub(crate) fn moment_corr(x: &[f64], y: &[f64]) -> Result<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxx, mut syy, mut sxy) = (CompensatedSum::new(), CompensatedSum::new(), CompensatedSum::new());
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxx.add(dx * dx);
        syy.add(dy * dy);
        sxy.add(dx * dy);
    }
    let (sxx, syy) = (sxx.value(), syy.value());
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::degenerate("constant margin"));
    }
    Ok((sxy.value() / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Sample moment correlation.
pub fn pearson(data: &DataMatrix) -> Result<CorrEstimate> {
    let (x, y) = columns(data, "pearson")?;
    Ok(CorrEstimate::new(EstimatorId::Pearson, moment_corr(&x, &y)?, x.len()))
}

/// 1-based ranks, ties receive their average rank.
pub fn midranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_unstable_by(|&a, &b| cmp_f64(&x[a], &x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && x[idx[end]] == x[idx[start]] {
            end += 1;
        }
        let r = (start + end + 1) as f64 / 2.0;
        for &i in &idx[start..end] {
            ranks[i] = r;
        }
        start = end;
    }
    ranks
}

/// `2 sin(π r / 6)`.
pub fn spearman_transform(r: f64) -> f64 {
    2.0 * (PI * r / 6.0).sin()
}

/// `sin(π r / 2)`, used for Kendall's τ and the quadrant correlation.
pub fn sine_transform(r: f64) -> f64 {
    (PI * r / 2.0).sin()
}

/// Spearman's rank correlation with midranks, optionally mapped through
/// [`spearman_transform`].
pub fn spearman_corr(data: &DataMatrix, consistent: bool) -> Result<CorrEstimate> {
    let (x, y) = columns(data, "spearman")?;
    let raw = moment_corr(&midranks(&x), &midranks(&y))?;
    let value = if consistent { spearman_transform(raw) } else { raw };
    Ok(CorrEstimate::new(EstimatorId::Spearman, value.clamp(-1.0, 1.0), x.len()).with_diagnostic("raw", raw))
}

/// Normal scores correlation `(1/cₙ) Σ Φ⁻¹(R(xᵢ)/(n+1)) Φ⁻¹(R(yᵢ)/(n+1))`.
pub fn gaussian_rank_corr(data: &DataMatrix) -> Result<CorrEstimate> {
    let (x, y) = columns(data, "gaussian_rank")?;
    let n = x.len();
    let scale = (n + 1) as f64;
    let score = |r: f64| normal_quantile_unchecked(r / scale);
    let rx = midranks(&x);
    let ry = midranks(&y);
    if rx.iter().all(|&r| r == rx[0]) || ry.iter().all(|&r| r == ry[0]) {
        return Err(Error::degenerate("constant margin"));
    }
    let cn: f64 = (1..=n).map(|i| score(i as f64).powi(2)).sum();
    let num: f64 = rx.iter().zip(&ry).map(|(&a, &b)| score(a) * score(b)).sum();
    Ok(CorrEstimate::new(
        EstimatorId::GaussianRank,
        (num / cn).clamp(-1.0, 1.0),
        n,
    ))
}

const KENDALL_BRUTE_FORCE_N: usize = 32;

fn sign(v: f64) -> i64 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

/// `Σ_{i<j} sign((xᵢ−xⱼ)(yᵢ−yⱼ))` by enumeration.
pub(crate) fn kendall_score_brute(x: &[f64], y: &[f64]) -> i64 {
    let mut s = 0;
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            s += sign(x[i] - x[j]) * sign(y[i] - y[j]);
        }
    }
    s
}

fn tied_pairs(sorted: &[f64]) -> u64 {
    let mut total = 0u64;
    let mut start = 0;
    while start < sorted.len() {
        let mut end = start + 1;
        while end < sorted.len() && sorted[end] == sorted[start] {
            end += 1;
        }
        let t = (end - start) as u64;
        total += t * (t - 1) / 2;
        start = end;
    }
    total
}

/// Sorts `v` in place and returns the number of strict inversions.
fn merge_count(v: &mut [f64], buf: &mut [f64]) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = merge_count(&mut v[..mid], &mut buf[..mid]) + merge_count(&mut v[mid..], &mut buf[mid..]);
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < n {
        if v[j] < v[i] {
            buf[k] = v[j];
            swaps += (mid - i) as u64;
            j += 1;
        } else {
            buf[k] = v[i];
            i += 1;
        }
        k += 1;
    }
    buf[k..k + mid - i].copy_from_slice(&v[i..mid]);
    k += mid - i;
    buf[k..k + n - j].copy_from_slice(&v[j..n]);
    v.copy_from_slice(&buf[..n]);
    swaps
}

/// `Σ_{i<j} sign((xᵢ−xⱼ)(yᵢ−yⱼ))` in `O(n log n)`, exact with ties.
pub(crate) fn kendall_score_fast(x: &[f64], y: &[f64]) -> i64 {
    let n = x.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_unstable_by(|&a, &b| cmp_f64(&x[a], &x[b]).then(cmp_f64(&y[a], &y[b])));
    let xs: Vec<f64> = idx.iter().map(|&i| x[i]).collect();
    let mut ys: Vec<f64> = idx.iter().map(|&i| y[i]).collect();

    let n0 = (n as u64) * (n as u64 - 1) / 2;
    let n1 = tied_pairs(&xs);
    // Joint ties: runs equal in both coordinates within the (x, y) order.
    let mut n3 = 0u64;
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && xs[end] == xs[start] && ys[end] == ys[start] {
            end += 1;
        }
        let t = (end - start) as u64;
        n3 += t * (t - 1) / 2;
        start = end;
    }
    let mut buf = vec![0.0; n];
    let swaps = merge_count(&mut ys, &mut buf);
    let n2 = tied_pairs(&ys);
    n0 as i64 - n1 as i64 - n2 as i64 + n3 as i64 - 2 * swaps as i64
}

pub(crate) fn kendall_score(x: &[f64], y: &[f64]) -> i64 {
    if x.len() <= KENDALL_BRUTE_FORCE_N {
        kendall_score_brute(x, y)
    } else {
        kendall_score_fast(x, y)
    }
}

/// Kendall's τ-a, optionally mapped through [`sine_transform`].
pub fn kendall_corr(data: &DataMatrix, consistent: bool) -> Result<CorrEstimate> {
    let (x, y) = columns(data, "kendall")?;
    if x.iter().all(|&v| v == x[0]) || y.iter().all(|&v| v == y[0]) {
        return Err(Error::degenerate("constant margin"));
    }
    let n = x.len();
    let pairs = (n * (n - 1) / 2) as f64;
    let raw = kendall_score(&x, &y) as f64 / pairs;
    let value = if consistent { sine_transform(raw) } else { raw };
    Ok(CorrEstimate::new(EstimatorId::Kendall, value, n).with_diagnostic("raw", raw))
}

/// Quadrant correlation `(1/n) Σ sign((xᵢ − med x)(yᵢ − med y))`, optionally
/// mapped through [`sine_transform`].
pub fn quadrant_corr(data: &DataMatrix, consistent: bool) -> Result<CorrEstimate> {
    let (x, y) = columns(data, "quadrant")?;
    let (mx, my) = (median(&x), median(&y));
    let s: i64 = x.iter().zip(&y).map(|(a, b)| sign(a - mx) * sign(b - my)).sum();
    let raw = s as f64 / x.len() as f64;
    let value = if consistent { sine_transform(raw) } else { raw };
    Ok(CorrEstimate::new(EstimatorId::Quadrant, value, x.len()).with_diagnostic("raw", raw))
}
