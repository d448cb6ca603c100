//! Robust univariate scale estimators.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{cmp_f64, median_in_place, normal_quantile_unchecked, std_normal_cdf, std_normal_pdf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScaleMethod {
    Mad,
    Qn,
    TauScale,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleEstimate {
    pub value: f64,
    pub method: ScaleMethod,
}

/// `1/Φ⁻¹(3/4)`, the normal consistency factor of the MAD.
pub fn mad_constant() -> f64 {
    1.0 / normal_quantile_unchecked(0.75)
}

/// `1/(√2 Φ⁻¹(5/8))`, the normal consistency factor of `Q_n`.
pub fn qn_constant() -> f64 {
    1.0 / (std::f64::consts::SQRT_2 * normal_quantile_unchecked(0.625))
}

pub const TAU_C1: f64 = 4.5;
pub const TAU_C2: f64 = 3.0;

/// `√E min(Z², c₂²)` for standard normal `Z`: the value [`tau_scale`]
/// converges to under `N(0, 1)`. It is not applied by [`tau_scale`].
pub fn tau_normal_constant() -> f64 {
    let c = TAU_C2;
    let tail = 2.0 * std_normal_cdf(-c);
    let inner = (1.0 - tail) - 2.0 * c * std_normal_pdf(c);
    (inner + c * c * tail).sqrt()
}

/// Unscaled MAD, `0` for samples with more than half the points tied.
pub(crate) fn mad_raw(x: &[f64]) -> f64 {
    let mut buf = x.to_vec();
    let med = median_in_place(&mut buf);
    for (b, v) in buf.iter_mut().zip(x) {
        *b = (v - med).abs();
    }
    median_in_place(&mut buf)
}

/// Median absolute deviation about the median, optionally multiplied by
/// [`mad_constant`].
pub fn mad(x: &[f64], scaled: bool) -> Result<ScaleEstimate> {
    if x.is_empty() {
        return Err(Error::domain("mad of an empty sample"));
    }
    let raw = mad_raw(x);
    if raw == 0.0 {
        return Err(Error::degenerate("MAD is zero"));
    }
    let value = if scaled { raw * mad_constant() } else { raw };
    Ok(ScaleEstimate {
        value,
        method: ScaleMethod::Mad,
    })
}

fn qn_rank(n: usize) -> usize {
    let h = n / 2 + 1;
    h * (h - 1) / 2
}

/// `Q_n` including the consistency factor; `0` when the selected pairwise
/// difference is zero.
pub(crate) fn qn_raw(x: &[f64]) -> f64 {
    let mut y = x.to_vec();
    y.sort_unstable_by(cmp_f64);
    qn_constant() * kth_pairwise_difference(&y, qn_rank(y.len()))
}

/// `Q_n` scale: `d · {|xᵢ − xⱼ|; i < j}_(k)` with `k = C(⌊n/2⌋+1, 2)`.
pub fn qn(x: &[f64]) -> Result<ScaleEstimate> {
    if x.len() < 2 {
        return Err(Error::domain("qn requires n >= 2"));
    }
    let value = qn_raw(x);
    if value == 0.0 {
        return Err(Error::degenerate("Qn is zero"));
    }
    Ok(ScaleEstimate {
        value,
        method: ScaleMethod::Qn,
    })
}

const QN_BRUTE_FORCE_N: usize = 16;

/// The `k`-th smallest (1-based) of the differences `y[j] − y[i]`, `i < j`,
/// for sorted `y`. Selection in the implicit sorted matrix of differences,
/// `O(n log n)`.
pub(crate) fn kth_pairwise_difference(y: &[f64], k: usize) -> f64 {
    let n = y.len();
    debug_assert!(k >= 1 && k <= n * (n - 1) / 2);
    if n <= QN_BRUTE_FORCE_N {
        let mut diffs: Vec<f64> = (0..n).flat_map(|i| (i + 1..n).map(move |j| y[j] - y[i])).collect();
        let (_, kth, _) = diffs.select_nth_unstable_by(k - 1, cmp_f64);
        return *kth;
    }

    // Row i holds y[j] - y[i] for j in left[i]..=right[i], ascending in j.
    let mut left: Vec<usize> = (0..n).map(|i| i + 1).collect();
    let mut right: Vec<usize> = vec![n - 1; n];
    let mut below = 0usize; // differences known to rank before every candidate
    let mut p = vec![0usize; n];
    let mut q = vec![0usize; n];
    let mut mids: Vec<(f64, usize)> = Vec::with_capacity(n);

    loop {
        let candidates: usize = (0..n)
            .filter(|&i| left[i] <= right[i])
            .map(|i| right[i] + 1 - left[i])
            .sum();
        if candidates <= n {
            let mut rest: Vec<f64> = (0..n)
                .filter(|&i| left[i] <= right[i])
                .flat_map(|i| (left[i]..=right[i]).map(move |j| y[j] - y[i]))
                .collect();
            let (_, kth, _) = rest.select_nth_unstable_by(k - below - 1, cmp_f64);
            return *kth;
        }

        mids.clear();
        for i in 0..n {
            if left[i] <= right[i] {
                let m = (left[i] + right[i]) / 2;
                mids.push((y[m] - y[i], right[i] + 1 - left[i]));
            }
        }
        let trial = weighted_high_median(&mut mids);

        // p[i]: #{j > i: y[j] - y[i] < trial}; q[i]: same with <=.
        let mut jp = 0usize;
        let mut jq = 0usize;
        let (mut sum_p, mut sum_q) = (0usize, 0usize);
        for i in 0..n {
            jp = jp.max(i + 1);
            while jp < n && y[jp] - y[i] < trial {
                jp += 1;
            }
            jq = jq.max(i + 1);
            while jq < n && y[jq] - y[i] <= trial {
                jq += 1;
            }
            p[i] = jp - (i + 1);
            q[i] = jq - (i + 1);
            sum_p += p[i];
            sum_q += q[i];
        }

        if k <= sum_p {
            for i in 0..n {
                right[i] = right[i].min(i + p[i]);
            }
        } else if k > sum_q {
            for i in 0..n {
                left[i] = left[i].max(i + q[i] + 1);
            }
            below = (0..n).map(|i| left[i] - (i + 1)).sum();
        } else {
            return trial;
        }
    }
}

/// Smallest value whose cumulative weight reaches half the total.
fn weighted_high_median(items: &mut [(f64, usize)]) -> f64 {
    items.sort_unstable_by(|a, b| cmp_f64(&a.0, &b.0));
    let total: usize = items.iter().map(|t| t.1).sum();
    let mut acc = 0usize;
    for &(v, w) in items.iter() {
        acc += w;
        if 2 * acc >= total {
            return v;
        }
    }
    items[items.len() - 1].0
}

fn biweight_w(x: f64, c: f64) -> f64 {
    if x.abs() <= c {
        let t = 1.0 - (x / c).powi(2);
        t * t
    } else {
        0.0
    }
}

/// τ-scale with `σ₀` the scaled MAD; `0` when `σ₀ = 0`.
pub(crate) fn tau_scale_raw(x: &[f64]) -> f64 {
    let mut buf = x.to_vec();
    let med = median_in_place(&mut buf);
    let sigma0 = mad_raw(x) * mad_constant();
    if sigma0 == 0.0 {
        return 0.0;
    }
    let (mut sw, mut swx) = (0.0, 0.0);
    for &v in x {
        let w = biweight_w((v - med) / sigma0, TAU_C1);
        sw += w;
        swx += w * v;
    }
    let mu = swx / sw;
    let mean_d: f64 = x
        .iter()
        .map(|&v| ((v - mu) / sigma0).powi(2).min(TAU_C2 * TAU_C2))
        .sum::<f64>()
        / x.len() as f64;
    sigma0 * mean_d.sqrt()
}

/// τ-scale with `c₁ = 4.5`, `c₂ = 3`, initial scale `σ₀` the scaled MAD.
/// No consistency factor is applied; see [`tau_normal_constant`].
pub fn tau_scale(x: &[f64]) -> Result<ScaleEstimate> {
    if x.len() < 2 {
        return Err(Error::domain("tau_scale requires n >= 2"));
    }
    let value = tau_scale_raw(x);
    if value == 0.0 {
        return Err(Error::degenerate("MAD is zero"));
    }
    Ok(ScaleEstimate {
        value,
        method: ScaleMethod::TauScale,
    })
}

/// Scale by method, returning `0` instead of an error for degenerate samples.
pub(crate) fn scale_raw(x: &[f64], method: ScaleMethod) -> f64 {
    match method {
        ScaleMethod::Mad => mad_raw(x) * mad_constant(),
        ScaleMethod::Qn => qn_raw(x),
        ScaleMethod::TauScale => tau_scale_raw(x),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{standard_normal, SeedSpec};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn naive_qn(x: &[f64]) -> f64 {
        let mut d = Vec::new();
        for i in 0..x.len() {
            for j in i + 1..x.len() {
                d.push((x[i] - x[j]).abs());
            }
        }
        d.sort_by(|a, b| a.partial_cmp(b).unwrap());
        qn_constant() * d[qn_rank(x.len()) - 1]
    }

    fn normal_sample(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = SeedSpec::new(seed).rng();
        (0..n).map(|_| standard_normal(&mut rng)).collect()
    }

    #[test]
    fn constants() {
        assert_abs_diff_eq!(mad_constant(), 1.482_602, epsilon = 1e-6);
        assert_abs_diff_eq!(qn_constant(), 2.219_14, epsilon = 5e-6);
    }

    #[test]
    fn mad_examples() {
        assert_eq!(mad(&[1.0, 2.0, 3.0, 4.0, 100.0], false).unwrap().value, 1.0);
        assert!(matches!(mad(&[2.0; 5], false), Err(Error::Degenerate(_))));
        let x = normal_sample(100_000, 1);
        assert_abs_diff_eq!(mad(&x, true).unwrap().value, 1.0, epsilon = 0.02);
    }

    #[test]
    fn qn_examples() {
        assert_abs_diff_eq!(
            qn(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap().value,
            qn_constant(),
            epsilon = 1e-15
        );
        assert!(matches!(qn(&[0.0, 0.0, 0.0, 1.0]), Err(Error::Degenerate(_))));
        assert!(qn(&[1.0]).is_err());
        let x = normal_sample(100_000, 2);
        assert_abs_diff_eq!(qn(&x).unwrap().value, 1.0, epsilon = 0.02);
    }

    #[test]
    fn fast_qn_matches_naive() {
        for (seed, n) in [(3, 17), (4, 100), (5, 257), (6, 1000)] {
            let x = normal_sample(n, seed);
            assert_eq!(qn_raw(&x), naive_qn(&x), "n={n}");
        }
        // Heavy ties.
        let x: Vec<f64> = (0..300).map(|i| ((i * 7) % 11) as f64).collect();
        assert_eq!(qn_raw(&x), naive_qn(&x));
        let x: Vec<f64> = (0..200)
            .map(|i| if i % 3 == 0 { 1.0 } else { (i % 5) as f64 })
            .collect();
        assert_eq!(qn_raw(&x), naive_qn(&x));
    }

    #[test]
    fn tau_examples() {
        // Symmetric sample: weighted location is the center.
        let x = [-1.0, 0.0, 1.0];
        let v = tau_scale(&x).unwrap().value;
        let sigma0 = mad_constant();
        let expect = sigma0 * ((2.0 / sigma0.powi(2)) / 3.0).sqrt();
        assert_abs_diff_eq!(v, expect, epsilon = 1e-15);
        assert!(tau_scale(&[1.0, 1.0, 1.0, 2.0]).is_err());
    }

    #[test]
    fn tau_normal_constant_against_monte_carlo() {
        let c = tau_normal_constant();
        assert_abs_diff_eq!(c, 0.997_50, epsilon = 5e-5);
        let mut rng = SeedSpec::new(7).rng();
        let m = 10_000_000;
        let s: f64 = (0..m).map(|_| standard_normal(&mut rng).powi(2).min(9.0)).sum();
        assert_abs_diff_eq!((s / m as f64).sqrt(), c, epsilon = 5e-4);
        let x = normal_sample(100_000, 8);
        assert_abs_diff_eq!(tau_scale(&x).unwrap().value, c, epsilon = 0.02);
    }

    proptest! {
        #[test]
        fn fast_qn_equals_naive(x in prop::collection::vec(-1e3f64..1e3, 2..120)) {
            prop_assert_eq!(qn_raw(&x), naive_qn(&x));
        }

        #[test]
        fn scales_are_affine_equivariant(
            x in prop::collection::vec(-10f64..10.0, 5..60),
            a in 0.1f64..10.0,
            neg in any::<bool>(),
            b in -50f64..50.0,
        ) {
            let slope = if neg { -a } else { a };
            let y: Vec<f64> = x.iter().map(|v| slope * v + b).collect();
            for m in [ScaleMethod::Mad, ScaleMethod::Qn, ScaleMethod::TauScale] {
                let sx = scale_raw(&x, m);
                let sy = scale_raw(&y, m);
                prop_assert!((sy - a * sx).abs() <= 1e-12 * (1.0 + a * sx),
                    "{:?}: {} vs {}", m, sy, a * sx);
            }
        }
    }
}
