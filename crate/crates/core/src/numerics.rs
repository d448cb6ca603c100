//! Small numerical kernels shared across the crate.

use std::cmp::Ordering;
use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::ops::{Add, Mul, Sub};

use libm::{erf, erfc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense 2×2 matrix, row major.
pub type Mat2 = [[f64; 2]; 2];

pub const IDENTITY2: Mat2 = [[1.0, 0.0], [0.0, 1.0]];

/// Symmetric 2×2 matrix stored by its three free entries.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SymMat2 {
    pub s11: f64,
    pub s12: f64,
    pub s22: f64,
}

impl SymMat2 {
    pub const fn new(s11: f64, s12: f64, s22: f64) -> Self {
        Self { s11, s12, s22 }
    }

    pub const fn identity() -> Self {
        Self::new(1.0, 0.0, 1.0)
    }

    pub fn diag(d1: f64, d2: f64) -> Self {
        Self::new(d1, 0.0, d2)
    }

    /// Symmetrizes a general 2×2 matrix by averaging the off-diagonal pair.
    pub fn from_mat(m: &Mat2) -> Self {
        Self::new(m[0][0], 0.5 * (m[0][1] + m[1][0]), m[1][1])
    }

    pub fn to_mat(&self) -> Mat2 {
        [[self.s11, self.s12], [self.s12, self.s22]]
    }

    pub fn trace(&self) -> f64 {
        self.s11 + self.s22
    }

    pub fn det(&self) -> f64 {
        self.s11 * self.s22 - self.s12 * self.s12
    }

    pub fn is_finite(&self) -> bool {
        self.s11.is_finite() && self.s12.is_finite() && self.s22.is_finite()
    }

    pub fn scale(&self, c: f64) -> Self {
        Self::new(c * self.s11, c * self.s12, c * self.s22)
    }

    /// Inverse, or `None` when the determinant is not positive enough to
    /// invert reliably.
    pub fn inverse(&self) -> Option<Self> {
        let det = self.det();
        let scale = self.s11.abs().max(self.s22.abs());
        if !(det > 1e-300) || det <= 1e-14 * scale * scale {
            return None;
        }
        Some(Self::new(self.s22 / det, -self.s12 / det, self.s11 / det))
    }

    /// Quadratic form `xᵀ M x`.
    #[inline]
    pub fn quad_form(&self, x: [f64; 2]) -> f64 {
        self.s11 * x[0] * x[0] + 2.0 * self.s12 * x[0] * x[1] + self.s22 * x[1] * x[1]
    }

    /// Maximum absolute entry difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (self.s11 - other.s11)
            .abs()
            .max((self.s12 - other.s12).abs())
            .max((self.s22 - other.s22).abs())
    }

    /// Outer product `x xᵀ`.
    pub fn outer(x: [f64; 2]) -> Self {
        Self::new(x[0] * x[0], x[0] * x[1], x[1] * x[1])
    }
}

impl Add for SymMat2 {
    type Output = SymMat2;
    fn add(self, o: SymMat2) -> SymMat2 {
        SymMat2::new(self.s11 + o.s11, self.s12 + o.s12, self.s22 + o.s22)
    }
}

impl Sub for SymMat2 {
    type Output = SymMat2;
    fn sub(self, o: SymMat2) -> SymMat2 {
        SymMat2::new(self.s11 - o.s11, self.s12 - o.s12, self.s22 - o.s22)
    }
}

impl Mul<SymMat2> for f64 {
    type Output = SymMat2;
    fn mul(self, m: SymMat2) -> SymMat2 {
        m.scale(self)
    }
}

/// Eigendecomposition of a symmetric 2×2 matrix.
///
/// `u` holds the eigenvectors as columns, ordered like the eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Eigen2 {
    pub lambda1: f64,
    pub lambda2: f64,
    pub u: Mat2,
}

impl Eigen2 {
    /// `U diag(l1, l2) Uᵀ` for arbitrary replacement eigenvalues.
    pub fn reconstruct_with(&self, l1: f64, l2: f64) -> SymMat2 {
        let u = &self.u;
        SymMat2::new(
            l1 * u[0][0] * u[0][0] + l2 * u[0][1] * u[0][1],
            l1 * u[0][0] * u[1][0] + l2 * u[0][1] * u[1][1],
            l1 * u[1][0] * u[1][0] + l2 * u[1][1] * u[1][1],
        )
    }

    pub fn reconstruct(&self) -> SymMat2 {
        self.reconstruct_with(self.lambda1, self.lambda2)
    }
}

/// Flips `v` so that its first nonzero component is positive.
fn canonical_sign(v: [f64; 2]) -> [f64; 2] {
    let lead = if v[0] != 0.0 { v[0] } else { v[1] };
    if lead < 0.0 {
        [-v[0], -v[1]]
    } else {
        v
    }
}

/// Closed-form eigendecomposition of a symmetric 2×2 matrix.
///
/// Eigenvalues are returned in decreasing order. Each eigenvector has its
/// first nonzero component positive; a (numerically) repeated eigenvalue
/// yields `U = I`.
pub fn eig_sym2(m: &SymMat2) -> Result<Eigen2> {
    if !m.is_finite() {
        return Err(Error::domain("eig_sym2: non-finite matrix entry"));
    }
    let mean = 0.5 * (m.s11 + m.s22);
    let half_diff = 0.5 * (m.s11 - m.s22);
    let radius = half_diff.hypot(m.s12);
    let lambda1 = mean + radius;
    let lambda2 = mean - radius;

    if 2.0 * radius < 1e-14 * lambda1.abs().max(1.0) {
        return Ok(Eigen2 {
            lambda1,
            lambda2,
            u: IDENTITY2,
        });
    }

    let (u1, u2) = if m.s12 == 0.0 {
        if m.s11 >= m.s22 {
            ([1.0, 0.0], [0.0, 1.0])
        } else {
            ([0.0, 1.0], [1.0, 0.0])
        }
    } else {
        let theta = 0.5 * (2.0 * m.s12).atan2(m.s11 - m.s22);
        let (s, c) = theta.sin_cos();
        (canonical_sign([c, s]), canonical_sign([-s, c]))
    };

    Ok(Eigen2 {
        lambda1,
        lambda2,
        u: [[u1[0], u2[0]], [u1[1], u2[1]]],
    })
}

pub fn mat2_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

pub fn mat2_transpose(a: &Mat2) -> Mat2 {
    [[a[0][0], a[1][0]], [a[0][1], a[1][1]]]
}

/// Dense 4×4 matrix, row major. Used for covariances of `vec` of 2×2
/// matrices.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Mat4(pub [[f64; 4]; 4]);

impl Mat4 {
    pub fn identity() -> Self {
        let mut m = [[0.0; 4]; 4];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        Mat4(m)
    }

    pub fn transpose(&self) -> Self {
        let mut out = [[0.0; 4]; 4];
        for (i, row) in self.0.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                out[j][i] = *v;
            }
        }
        Mat4(out)
    }

    pub fn scale(&self, c: f64) -> Self {
        let mut out = self.0;
        for row in out.iter_mut() {
            for v in row.iter_mut() {
                *v *= c;
            }
        }
        Mat4(out)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..4 {
            for j in 0..4 {
                worst = worst.max((self.0[i][j] - other.0[i][j]).abs());
            }
        }
        worst
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|v| v.is_finite())
    }
}

impl Mul for Mat4 {
    type Output = Mat4;
    fn mul(self, b: Mat4) -> Mat4 {
        let mut out = [[0.0; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                out[i][j] = (0..4).map(|k| self.0[i][k] * b.0[k][j]).sum();
            }
        }
        Mat4(out)
    }
}

/// Kronecker product of two 2×2 matrices; block `(i, j)` is `a[i][j] * b`.
pub fn kron2(a: &Mat2, b: &Mat2) -> Mat4 {
    let mut out = [[0.0; 4]; 4];
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    out[2 * i + k][2 * j + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    Mat4(out)
}

/// Standard normal density.
#[inline]
pub fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Standard normal distribution function.
#[inline]
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// Upper tail `1 - Φ(x)` without cancellation.
#[inline]
pub fn std_normal_sf(x: f64) -> f64 {
    0.5 * erfc(x * FRAC_1_SQRT_2)
}

// Wichura's AS 241 (PPND16) coefficients.
const A: [f64; 8] = [
    3.387_132_872_796_366_608,
    133.141_667_891_784_377_45,
    1_971.590_950_306_551_442_7,
    13_731.693_765_509_461_125,
    45_921.953_931_549_871_457,
    67_265.770_927_008_700_853,
    33_430.575_583_588_128_105,
    2_509.080_928_730_122_672_7,
];
const B: [f64; 8] = [
    1.0,
    42.313_330_701_600_911_252,
    687.187_007_492_057_908_3,
    5_394.196_021_424_751_107_7,
    21_213.794_301_586_595_867,
    39_307.895_800_092_710_61,
    28_729.085_735_721_942_674,
    5_226.495_278_852_545_925,
];
const C: [f64; 8] = [
    1.423_437_110_749_683_577_34,
    4.630_337_846_156_545_295_9,
    5.769_497_221_460_691_405_5,
    3.647_848_324_763_204_605_04,
    1.270_458_252_452_368_382_58,
    0.241_780_725_177_450_611_77,
    0.022_723_844_989_269_184_583_3,
    7.745_450_142_783_414_076_4e-4,
];
const D: [f64; 8] = [
    1.0,
    2.053_191_626_637_758_821_87,
    1.676_384_830_183_803_849_4,
    0.689_767_334_985_100_004_55,
    0.148_103_976_427_480_074_59,
    0.015_198_666_563_616_457_196_6,
    5.475_938_084_995_344_946e-4,
    1.050_750_071_644_416_843_24e-9,
];
const E: [f64; 8] = [
    6.657_904_643_501_103_777_2,
    5.463_784_911_164_114_369_9,
    1.784_826_539_917_291_335_8,
    0.296_560_571_828_504_891_23,
    0.026_532_189_526_576_123_093,
    0.001_242_660_947_388_078_438_6,
    2.711_555_568_743_487_578_15e-5,
    2.010_334_399_292_288_132_65e-7,
];
const F: [f64; 8] = [
    1.0,
    0.599_832_206_555_887_937_69,
    0.136_929_880_922_735_805_31,
    0.014_875_361_290_850_614_852_5,
    7.868_691_311_456_132_591e-4,
    1.846_318_317_510_054_681_8e-5,
    1.421_511_758_316_445_888_7e-7,
    2.044_263_103_389_939_785_64e-15,
];

#[inline]
fn horner(coef: &[f64; 8], x: f64) -> f64 {
    coef.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

/// Quantile function of the standard normal distribution.
///
/// Rational approximation (AS 241) followed by one Newton step against the
/// erfc-based distribution function.
pub fn std_normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain(format!("normal quantile requires 0 < p < 1, got {p}")));
    }
    Ok(normal_quantile_unchecked(p))
}

#[inline]
pub(crate) fn normal_quantile_unchecked(p: f64) -> f64 {
    let q = p - 0.5;
    let x = if q.abs() <= 0.425 {
        let r = 0.180_625 - q * q;
        q * horner(&A, r) / horner(&B, r)
    } else {
        let tail = if q < 0.0 { p } else { 1.0 - p };
        let mut r = (-tail.ln()).sqrt();
        let v = if r <= 5.0 {
            r -= 1.6;
            horner(&C, r) / horner(&D, r)
        } else {
            r -= 5.0;
            horner(&E, r) / horner(&F, r)
        };
        if q < 0.0 {
            -v
        } else {
            v
        }
    };
    // Newton polish, evaluated on whichever tail keeps precision.
    let density = std_normal_pdf(x);
    if density <= 0.0 {
        return x;
    }
    let residual = if p < 0.5 {
        std_normal_cdf(x) - p
    } else {
        (1.0 - p) - std_normal_sf(x)
    };
    x - residual / density
}

/// Distribution function of χ² with `df` degrees of freedom, by the finite
/// Poisson-type series available for integer `df`.
pub fn chi2_cdf(x: f64, df: u32) -> f64 {
    if x <= 0.0 || df == 0 {
        return if x < 0.0 || df > 0 { 0.0 } else { 1.0 };
    }
    let t = 0.5 * x;
    if df == 2 {
        return -(-t).exp_m1();
    }
    if df % 2 == 0 {
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..df / 2 {
            term *= t / k as f64;
            sum += term;
        }
        (1.0 - (-t).exp() * sum).clamp(0.0, 1.0)
    } else {
        let mut term = 2.0 * (t / PI).sqrt();
        let mut sum = 0.0;
        for k in 1..=(df - 1) / 2 {
            sum += term;
            term *= t / (k as f64 + 0.5);
        }
        (erf(t.sqrt()) - (-t).exp() * sum).clamp(0.0, 1.0)
    }
}

/// Quantile of χ² with `df` degrees of freedom: closed form for `df = 2`,
/// otherwise the regularized incomplete gamma function is inverted by
/// safeguarded Newton iteration.
pub fn chi2_quantile(p: f64, df: u32) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain(format!(
            "chi-square quantile requires 0 < p < 1, got {p}"
        )));
    }
    if df == 0 {
        return Err(Error::domain("chi-square quantile requires df >= 1"));
    }
    if df == 2 {
        return Ok(-2.0 * (-p).ln_1p());
    }
    let k = 0.5 * df as f64;
    let ln_gamma_k = statrs::function::gamma::ln_gamma(k);
    let pdf = |x: f64| ((k - 1.0) * (0.5 * x).ln() - 0.5 * x - ln_gamma_k).exp() * 0.5;

    // Bracket, then Newton steps that fall back to bisection when they leave
    // the bracket.
    let mut lo = 0.0;
    let mut hi = df as f64 + 10.0 * (2.0 * df as f64).sqrt() + 10.0;
    while chi2_cdf(hi, df) < p {
        lo = hi;
        hi *= 2.0;
    }
    // Wilson–Hilferty start.
    let z = normal_quantile_unchecked(p);
    let h = 2.0 / (9.0 * df as f64);
    let mut x = (df as f64 * (1.0 - h + z * h.sqrt()).powi(3)).clamp(lo, hi);
    if x <= lo || x >= hi {
        x = 0.5 * (lo + hi);
    }
    for _ in 0..200 {
        let f = chi2_cdf(x, df) - p;
        if f.abs() <= 1e-14 {
            return Ok(x);
        }
        if f < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let d = pdf(x);
        let mut next = if d > 0.0 { x - f / d } else { f64::NAN };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 1e-13 * x.max(1.0) {
            return Ok(next);
        }
        x = next;
    }
    Ok(x)
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// Compensated sum of `values` in the given order.
pub fn stable_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut acc = CompensatedSum::new();
    for v in values {
        acc.add(v);
    }
    acc.value()
}

/// Median of a slice, reordering it in place. Even lengths average the two
/// middle order statistics. Panics on an empty slice.
pub fn median_in_place(values: &mut [f64]) -> f64 {
    let n = values.len();
    assert!(n > 0, "median of empty slice");
    let mid = n / 2;
    let (left, m, _) = values.select_nth_unstable_by(mid, f64::total_cmp);
    let upper = *m;
    if n % 2 == 1 {
        upper
    } else {
        let lower = left.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lower + upper)
    }
}

/// Median of a slice (copies).
pub fn median(values: &[f64]) -> f64 {
    let mut buf = values.to_vec();
    median_in_place(&mut buf)
}

pub(crate) fn cmp_f64(a: &f64, b: &f64) -> Ordering {
    a.total_cmp(b)
}

/// Illinois (modified regula falsi) root finder on a sign-changing bracket.
pub fn find_root<Fn1: FnMut(f64) -> f64>(
    mut f: Fn1,
    mut lo: f64,
    mut hi: f64,
    xtol: f64,
    max_iter: usize,
) -> Result<f64> {
    let mut flo = f(lo);
    let mut fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::domain("find_root: bracket does not change sign"));
    }
    let mut side = 0i8;
    for _ in 0..max_iter {
        let x = (lo * fhi - hi * flo) / (fhi - flo);
        let x = if x.is_finite() && x > lo.min(hi) && x < lo.max(hi) {
            x
        } else {
            0.5 * (lo + hi)
        };
        let fx = f(x);
        if fx == 0.0 || (hi - lo).abs() <= xtol {
            return Ok(x);
        }
        if fx.signum() == fhi.signum() {
            hi = x;
            fhi = fx;
            if side == -1 {
                flo *= 0.5;
            }
            side = -1;
        } else {
            lo = x;
            flo = fx;
            if side == 1 {
                fhi *= 0.5;
            }
            side = 1;
        }
        if (hi - lo).abs() <= xtol * lo.abs().max(hi.abs()).max(1.0) {
            return Ok(0.5 * (lo + hi));
        }
    }
    Err(Error::Convergence {
        algorithm: "find_root",
        iterations: max_iter,
        residual: (hi - lo).abs(),
        last_iterate: vec![lo, hi],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn eig_correlation_matrix() {
        let e = eig_sym2(&SymMat2::new(1.0, 0.6, 1.0)).unwrap();
        assert_abs_diff_eq!(e.lambda1, 1.6, epsilon = 1e-15);
        assert_abs_diff_eq!(e.lambda2, 0.4, epsilon = 1e-15);
        let h = FRAC_1_SQRT_2;
        assert_abs_diff_eq!(e.u[0][0], h, epsilon = 1e-15);
        assert_abs_diff_eq!(e.u[1][0], h, epsilon = 1e-15);
        // second eigenvector (−1, 1)/√2 flipped to (1, −1)/√2
        assert_abs_diff_eq!(e.u[0][1], h, epsilon = 1e-15);
        assert_abs_diff_eq!(e.u[1][1], -h, epsilon = 1e-15);
    }

    #[test]
    fn eig_identity_and_diagonal() {
        let e = eig_sym2(&SymMat2::identity()).unwrap();
        assert_eq!((e.lambda1, e.lambda2, e.u), (1.0, 1.0, IDENTITY2));

        let e = eig_sym2(&SymMat2::diag(2.0 / 3.0, 1.0 / 3.0)).unwrap();
        assert_eq!(e.u, IDENTITY2);
        assert_abs_diff_eq!(e.lambda1, 2.0 / 3.0, epsilon = 1e-16);
        assert_abs_diff_eq!(e.lambda2, 1.0 / 3.0, epsilon = 1e-16);

        let e = eig_sym2(&SymMat2::diag(1.0, 5.0)).unwrap();
        assert_eq!(e.lambda1, 5.0);
        assert_eq!(e.u, [[0.0, 1.0], [1.0, 0.0]]);
    }

    #[test]
    fn eig_rejects_nan() {
        assert!(matches!(
            eig_sym2(&SymMat2::new(f64::NAN, 0.0, 1.0)),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn kron_examples() {
        assert_eq!(kron2(&IDENTITY2, &IDENTITY2), Mat4::identity());
        let d = kron2(&[[2.0, 0.0], [0.0, 3.0]], &IDENTITY2);
        for i in 0..4 {
            assert_eq!(d.0[i][i], [2.0, 2.0, 3.0, 3.0][i]);
        }
        let p = kron2(&[[0.0, 1.0], [1.0, 0.0]], &IDENTITY2);
        let expect = [
            [0.0, 0.0, 1.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 1.0, 0.0, 0.0],
        ];
        assert_eq!(p.0, expect);
    }

    #[test]
    fn normal_quantile_values() {
        assert_eq!(std_normal_quantile(0.5).unwrap(), 0.0);
        assert_abs_diff_eq!(
            std_normal_quantile(0.975).unwrap(),
            1.959_963_984_540_054,
            epsilon = 1e-13
        );
        assert_abs_diff_eq!(
            std_normal_quantile(0.625).unwrap(),
            0.318_639_363_964_375_5,
            epsilon = 1e-13
        );
        assert!(std_normal_quantile(0.0).is_err());
        assert!(std_normal_quantile(1.0).is_err());
        assert!(std_normal_quantile(f64::NAN).is_err());
    }

    #[test]
    fn normal_quantile_cdf_residual() {
        for i in 1..2000 {
            let p = i as f64 / 2000.0;
            let x = std_normal_quantile(p).unwrap();
            assert!((std_normal_cdf(x) - p).abs() <= 1e-12, "p={p}");
        }
        for &p in &[1e-300, 1e-100, 1e-20, 1e-10, 1e-5] {
            let x = std_normal_quantile(p).unwrap();
            let rel = (std_normal_cdf(x) - p).abs() / p;
            assert!(rel <= 1e-10, "p={p} rel={rel}");
        }
    }

    #[test]
    fn chi2_cdf_reference_values() {
        let cases = [
            (1, 0.5, 0.520_499_877_813_046_6),
            (3, 5.0, 0.828_202_855_703_266_5),
            (4, 2.0, 0.264_241_117_657_115_3),
            (5, 11.07, 0.949_990_381_377_594_6),
            (7, 0.3, 1.000_373_822_520_702_8e-4),
            (4, 30.0, 0.999_995_105_562_872),
        ];
        for (df, x, p) in cases {
            assert_abs_diff_eq!(chi2_cdf(x, df), p, epsilon = 1e-14);
        }
    }

    #[test]
    fn chi2_quantiles() {
        assert_abs_diff_eq!(chi2_quantile(0.95, 2).unwrap(), 5.991_464_547_107_979, epsilon = 1e-12);
        assert_abs_diff_eq!(chi2_quantile(0.5, 2).unwrap(), 1.386_294_361_119_890_6, epsilon = 1e-12);
        assert_abs_diff_eq!(chi2_quantile(0.975, 2).unwrap(), 7.377_758_908_227_871, epsilon = 1e-12);
        // χ²₁ quantile is the squared two-sided normal quantile.
        let z = std_normal_quantile(0.975).unwrap();
        assert_abs_diff_eq!(chi2_quantile(0.95, 1).unwrap(), z * z, epsilon = 1e-10);
        for df in [1, 3, 4, 7, 20] {
            for &p in &[0.01, 0.3, 0.5, 0.9, 0.999] {
                let q = chi2_quantile(p, df).unwrap();
                assert!((chi2_cdf(q, df) - p).abs() < 1e-10, "df={df} p={p}");
            }
        }
        assert!(chi2_quantile(1.0, 2).is_err());
        assert!(chi2_quantile(0.5, 0).is_err());
    }

    #[test]
    fn compensated_sum_examples() {
        assert_eq!(stable_sum([1.0, 2.0, 3.0]), 6.0);
        assert_eq!(stable_sum([1e16, 1.0, -1e16]), 1.0);
        assert_eq!(stable_sum(std::iter::empty()), 0.0);
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 3.0, 2.0]), 2.5);
        assert_eq!(median(&[7.0]), 7.0);
    }

    #[test]
    fn root_finder() {
        let r = find_root(|x| x * x - 2.0, 0.0, 2.0, 1e-15, 200).unwrap();
        assert_abs_diff_eq!(r, 2f64.sqrt(), epsilon = 1e-14);
        assert!(find_root(|x| x * x + 1.0, 0.0, 2.0, 1e-12, 50).is_err());
    }
}
