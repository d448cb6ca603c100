//! Reproducible samplers for bivariate elliptical models, a skewed
//! non-elliptical model and two contamination mechanisms.
//!
//! Every sampler is a pure function of its parameters and a [`SeedSpec`].
//! A seed selects a ChaCha8 key from `(master, tag)` and a stream from
//! `(scenario, grid, replication)`, so substreams never depend on thread
//! scheduling.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::numerics::{normal_quantile_unchecked, SymMat2};

pub const TAG_DATA: u64 = 0;
pub const TAG_CONTAMINATION: u64 = 1;
pub const TAG_MCD: u64 = 2;
pub const TAG_STAHEL_DONOHO: u64 = 3;
pub const TAG_S_ESTIMATOR: u64 = 4;

pub const MAX_SCENARIO: u64 = (1 << 8) - 1;
pub const MAX_GRID: u64 = (1 << 20) - 1;
pub const MAX_REPLICATION: u64 = (1 << 36) - 1;

/// Address of an independent random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedSpec {
    pub master: u64,
    pub scenario: u64,
    pub grid: u64,
    pub replication: u64,
    pub tag: u64,
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl SeedSpec {
    pub fn new(master: u64) -> Self {
        Self {
            master,
            scenario: 0,
            grid: 0,
            replication: 0,
            tag: TAG_DATA,
        }
    }

    /// Substream for one replication at one grid point of a scenario.
    /// Indices beyond the packing widths are rejected.
    pub fn derive(&self, scenario: u64, grid: u64, replication: u64) -> Result<Self> {
        if scenario > MAX_SCENARIO || grid > MAX_GRID || replication > MAX_REPLICATION {
            return Err(Error::domain(format!(
                "seed path ({scenario}, {grid}, {replication}) exceeds the stream id range"
            )));
        }
        Ok(Self {
            scenario,
            grid,
            replication,
            ..*self
        })
    }

    pub fn with_tag(&self, tag: u64) -> Self {
        Self { tag, ..*self }
    }

    /// `scenario (8 bits) | grid (20 bits) | replication (36 bits)`.
    pub fn stream_id(&self) -> u64 {
        (self.scenario << 56) | (self.grid << 36) | self.replication
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut state = self.master ^ splitmix64(&mut self.tag.wrapping_add(0x5851_F42D_4C95_7F2D));
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(self.stream_id());
        rng
    }
}

/// `u ∈ (0, 1)` from the top 53 bits of one word, never 0 or 1.
#[inline]
pub fn open_unit(rng: &mut impl RngCore) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Standard normal by inversion; consumes exactly one word.
#[inline]
pub fn standard_normal(rng: &mut impl RngCore) -> f64 {
    normal_quantile_unchecked(open_unit(rng))
}

/// `[[var1, ρ√(var1 var2)], [·, var2]]`.
pub fn sigma_from_rho(rho: f64, var1: f64, var2: f64) -> Result<SymMat2> {
    if !(rho.abs() < 1.0) || !(var1 > 0.0) || !(var2 > 0.0) {
        return Err(Error::domain("sigma_from_rho needs |rho| < 1 and positive variances"));
    }
    Ok(SymMat2::new(var1, rho * (var1 * var2).sqrt(), var2))
}

/// Lower Cholesky factor `[l11, l21, l22]`.
fn cholesky(sigma: &SymMat2) -> Result<[f64; 3]> {
    if !(sigma.s11 > 0.0) || !sigma.is_finite() {
        return Err(Error::domain("sigma must be positive definite"));
    }
    let l11 = sigma.s11.sqrt();
    let l21 = sigma.s12 / l11;
    let rem = sigma.s22 - l21 * l21;
    if !(rem > 0.0) {
        return Err(Error::domain("sigma must be positive definite"));
    }
    Ok([l11, l21, rem.sqrt()])
}

#[inline]
fn apply(l: &[f64; 3], z: [f64; 2]) -> [f64; 2] {
    [l[0] * z[0], l[1] * z[0] + l[2] * z[1]]
}

fn build(n: usize, mut draw: impl FnMut() -> [f64; 2]) -> DataMatrix {
    let pts: Vec<[f64; 2]> = (0..n).map(|_| draw()).collect();
    DataMatrix::from_points(&pts)
}

pub fn sample_normal2(sigma: &SymMat2, n: usize, seed: &SeedSpec) -> Result<DataMatrix> {
    let l = cholesky(sigma)?;
    let mut rng = seed.rng();
    Ok(build(n, || {
        apply(&l, [standard_normal(&mut rng), standard_normal(&mut rng)])
    }))
}

/// Elliptical `t_ν`: `L Z / √(W/ν)` with `W ~ χ²_ν`.
pub fn sample_t2(sigma: &SymMat2, nu: f64, n: usize, seed: &SeedSpec) -> Result<DataMatrix> {
    if !(nu > 0.0) || !nu.is_finite() {
        return Err(Error::domain("degrees of freedom must be positive"));
    }
    let l = cholesky(sigma)?;
    let chi = ChiSquared::new(nu).map_err(|e| Error::domain(e.to_string()))?;
    let mut rng = seed.rng();
    Ok(build(n, || {
        let z = [standard_normal(&mut rng), standard_normal(&mut rng)];
        let w = chi.sample(&mut rng);
        let f = (nu / w).sqrt();
        let x = apply(&l, z);
        [x[0] * f, x[1] * f]
    }))
}

/// Elliptical power exponential with density generator `exp(−t^α/2)`:
/// `X = R L U`, `U` uniform on the circle, `R = G^{1/(2α)}`,
/// `G ~ Gamma(1/α, scale 2)`.
///
/// With `T = ‖L⁻¹X‖²` the radial density is `∝ t^{p/2−1} exp(−t^α/2)`, and
/// the substitution `g = t^α` turns it into `∝ g^{p/(2α)−1} e^{−g/2}`.
pub fn sample_powerexp2(sigma: &SymMat2, alpha: f64, n: usize, seed: &SeedSpec) -> Result<DataMatrix> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::domain("power exponential alpha must be positive"));
    }
    let l = cholesky(sigma)?;
    let gamma = Gamma::new(1.0 / alpha, 2.0).map_err(|e| Error::domain(e.to_string()))?;
    let mut rng = seed.rng();
    let expo = 1.0 / (2.0 * alpha);
    Ok(build(n, || {
        let theta = std::f64::consts::TAU * open_unit(&mut rng);
        let r = gamma.sample(&mut rng).powf(expo);
        let (s, c) = theta.sin_cos();
        apply(&l, [r * c, r * s])
    }))
}

/// `α = (1 − √(1−ρ²))/ρ`, zero at `ρ = 0`.
pub fn skewed_exp_alpha(rho: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&rho) {
        return Err(Error::domain("skewed exponential model needs 0 <= rho < 1"));
    }
    if rho == 0.0 {
        return Ok(0.0);
    }
    Ok(rho / (1.0 + (1.0 - rho * rho).sqrt()))
}

/// `X = αZ₁ + Z₂`, `Y = Z₁ + αZ₂` with `Z₁, Z₂` i.i.d. `Exp(1)`; the moment
/// correlation is `ρ`.
pub fn sample_skewed_exp(rho: f64, n: usize, seed: &SeedSpec) -> Result<DataMatrix> {
    let a = skewed_exp_alpha(rho)?;
    let mut rng = seed.rng();
    Ok(build(n, || {
        let z1 = -open_unit(&mut rng).ln();
        let z2 = -open_unit(&mut rng).ln();
        [a * z1 + z2, z1 + a * z2]
    }))
}

/// Copy of `data` with the first observation's `x` increased by `h`.
pub fn contaminate_shift(data: &DataMatrix, h: f64) -> Result<DataMatrix> {
    if data.nrows() == 0 {
        return Err(Error::domain("contaminate_shift needs at least one observation"));
    }
    let mut out = data.clone();
    out.row_mut(0)[0] += h;
    Ok(out)
}

/// Replaces the first `m` observations by `N(0, contam_sigma)` draws. Row `k`
/// always receives the `k`-th draw of the seed's stream, so results are
/// nested in `m`.
pub fn contaminate_replace(data: &DataMatrix, m: usize, contam_sigma: &SymMat2, seed: &SeedSpec) -> Result<DataMatrix> {
    data.require_bivariate()?;
    if m > data.nrows() {
        return Err(Error::domain("cannot replace more observations than available"));
    }
    let l = cholesky(contam_sigma)?;
    let mut rng = seed.rng();
    let mut out = data.clone();
    for i in 0..m {
        let x = apply(&l, [standard_normal(&mut rng), standard_normal(&mut rng)]);
        out.row_mut(i).copy_from_slice(&x);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EllipticalFamily {
    Normal,
    StudentT { nu: f64 },
    PowerExp { alpha: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllipticalSpec {
    pub sigma: SymMat2,
    pub family: EllipticalFamily,
}

impl EllipticalSpec {
    pub fn new(sigma: SymMat2, family: EllipticalFamily) -> Result<Self> {
        cholesky(&sigma)?;
        match family {
            EllipticalFamily::StudentT { nu } if !(nu > 0.0) => {
                return Err(Error::domain("degrees of freedom must be positive"))
            }
            EllipticalFamily::PowerExp { alpha } if !(alpha > 0.0) => {
                return Err(Error::domain("power exponential alpha must be positive"))
            }
            _ => {}
        }
        Ok(Self { sigma, family })
    }

    pub fn sample(&self, n: usize, seed: &SeedSpec) -> Result<DataMatrix> {
        match self.family {
            EllipticalFamily::Normal => sample_normal2(&self.sigma, n, seed),
            EllipticalFamily::StudentT { nu } => sample_t2(&self.sigma, nu, n, seed),
            EllipticalFamily::PowerExp { alpha } => sample_powerexp2(&self.sigma, alpha, n, seed),
        }
    }
}

/// `E R^k = 2^{k/(2α)} Γ(1/α + k/(2α)) / Γ(1/α)` for the bivariate power
/// exponential radius.
pub fn powerexp_radial_moment(alpha: f64, k: f64) -> f64 {
    use statrs::function::gamma::ln_gamma;
    let a = 1.0 / alpha;
    let e = k / (2.0 * alpha);
    (e * 2f64.ln() + ln_gamma(a + e) - ln_gamma(a)).exp()
}

/// Marginal excess kurtosis of the bivariate power exponential:
/// `3 E R⁴ / (2 (E R²)²) − 3`.
pub fn powerexp_kurtosis(alpha: f64) -> f64 {
    1.5 * powerexp_radial_moment(alpha, 4.0) / powerexp_radial_moment(alpha, 2.0).powi(2) - 3.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::rank::pearson;
    use crate::sscm::sscm2_about;
    use approx::assert_abs_diff_eq;
    use statrs::distribution::{ChiSquared as ChiSq, ContinuousCDF, FisherSnedecor};
    use std::collections::HashSet;

    fn sample_cov(d: &DataMatrix) -> SymMat2 {
        let n = d.nrows() as f64;
        let (x, y) = (d.column(0), d.column(1));
        let mx = x.iter().sum::<f64>() / n;
        let my = y.iter().sum::<f64>() / n;
        let c =
            |a: &[f64], ma: f64, b: &[f64], mb: f64| a.iter().zip(b).map(|(u, v)| (u - ma) * (v - mb)).sum::<f64>() / n;
        SymMat2::new(c(&x, mx, &x, mx), c(&x, mx, &y, my), c(&y, my, &y, my))
    }

    fn ks_distance(mut sample: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
        sample.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = sample.len() as f64;
        sample
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = cdf(x);
                (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
            })
            .fold(0.0, f64::max)
    }

    fn squared_radius(d: &DataMatrix, sigma: &SymMat2) -> Vec<f64> {
        let inv = sigma.inverse().unwrap();
        d.rows().map(|r| inv.quad_form([r[0], r[1]])).collect()
    }

    #[test]
    fn sigma_examples() {
        assert_eq!(sigma_from_rho(0.5, 1.0, 1.0).unwrap(), SymMat2::new(1.0, 0.5, 1.0));
        assert_eq!(sigma_from_rho(-0.5, 4.0, 4.0).unwrap(), SymMat2::new(4.0, -2.0, 4.0));
        assert_eq!(sigma_from_rho(0.0, 2.0, 3.0).unwrap(), SymMat2::diag(2.0, 3.0));
        assert!(sigma_from_rho(1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn seeds_are_reproducible_and_distinct() {
        let s = SeedSpec::new(7);
        let sigma = SymMat2::new(1.0, 0.5, 1.0);
        let a = sample_normal2(&sigma, 50, &s).unwrap();
        assert_eq!(a, sample_normal2(&sigma, 50, &s).unwrap());
        let b = sample_normal2(&sigma, 50, &s.derive(0, 0, 1).unwrap()).unwrap();
        assert_ne!(a, b);
        assert_ne!(a, sample_normal2(&sigma, 50, &s.with_tag(TAG_CONTAMINATION)).unwrap());
        assert!(s.derive(256, 0, 0).is_err());
        assert!(s.derive(0, 1 << 20, 0).is_err());
        assert_eq!(
            sample_t2(&sigma, 3.0, 20, &s).unwrap(),
            sample_t2(&sigma, 3.0, 20, &s).unwrap()
        );
        assert_eq!(
            sample_powerexp2(&sigma, 0.3, 20, &s).unwrap(),
            sample_powerexp2(&sigma, 0.3, 20, &s).unwrap()
        );
    }

    #[test]
    fn stream_ids_are_injective() {
        let s = SeedSpec::new(0);
        let mut seen = HashSet::new();
        for (sc, g, r) in [
            (0, 0, 1),
            (1, 0, 0),
            (0, 1, 0),
            (255, MAX_GRID, MAX_REPLICATION),
            (0, 0, MAX_REPLICATION),
        ] {
            assert!(seen.insert(s.derive(sc, g, r).unwrap().stream_id()));
        }
    }

    #[test]
    fn normal_moments() {
        let sigma = SymMat2::new(2.0, 0.6, 1.0);
        let n = 100_000;
        let d = sample_normal2(&sigma, n, &SeedSpec::new(71)).unwrap();
        let c = sample_cov(&d);
        // Var of a sample covariance entry: (σᵢᵢσⱼⱼ + σᵢⱼ²)/n.
        let se = |i: f64, j: f64, ij: f64| ((i * j + ij * ij) / n as f64).sqrt();
        assert!((c.s11 - 2.0).abs() < 3.0 * se(2.0, 2.0, 2.0));
        assert!((c.s12 - 0.6).abs() < 3.0 * se(2.0, 1.0, 0.6));
        assert!((c.s22 - 1.0).abs() < 3.0 * se(1.0, 1.0, 1.0));
        let iid = sample_normal2(&SymMat2::identity(), n, &SeedSpec::new(72)).unwrap();
        assert!(pearson(&iid).unwrap().value.abs() < 3.0 / (n as f64).sqrt());
    }

    #[test]
    fn radial_laws() {
        let sigma = SymMat2::new(1.5, -0.4, 0.8);
        let n = 100_000;
        let normal = sample_normal2(&sigma, n, &SeedSpec::new(73)).unwrap();
        let chi2 = ChiSq::new(2.0).unwrap();
        assert!(ks_distance(squared_radius(&normal, &sigma), |x| chi2.cdf(x)) <= 0.01);

        let pe1 = sample_powerexp2(&sigma, 1.0, n, &SeedSpec::new(74)).unwrap();
        assert!(ks_distance(squared_radius(&pe1, &sigma), |x| chi2.cdf(x)) <= 0.01);

        // T^α ~ Gamma(1/α, 2) ⇒ T^α/2 ~ Gamma(1/α, 1).
        let alpha = 0.3;
        let pe = sample_powerexp2(&sigma, alpha, n, &SeedSpec::new(75)).unwrap();
        let cdf = |t: f64| statrs::function::gamma::gamma_lr(1.0 / alpha, t.powf(alpha) / 2.0);
        assert!(ks_distance(squared_radius(&pe, &sigma), cdf) <= 0.01);

        // ‖L⁻¹X‖²/2 ~ F(2, ν) for t_ν.
        for nu in [1.0, 5.0] {
            let t = sample_t2(&sigma, nu, n, &SeedSpec::new(76)).unwrap();
            let f = FisherSnedecor::new(2.0, nu).unwrap();
            assert!(ks_distance(squared_radius(&t, &sigma), |x| f.cdf(x / 2.0)) <= 0.01);
        }
    }

    #[test]
    fn t_with_huge_nu_matches_normal() {
        let sigma = SymMat2::new(1.0, 0.5, 1.0);
        let n = 100_000;
        let t = sample_t2(&sigma, 1e6, n, &SeedSpec::new(77)).unwrap();
        let c = sample_cov(&t);
        assert!((c.s12 - 0.5).abs() < 3.0 * (1.25 / n as f64).sqrt());
        assert!((c.s11 - 1.0).abs() < 3.0 * (2.0 / n as f64).sqrt());
    }

    #[test]
    fn laplace_kurtosis() {
        // Analytic value at α = 1/2 is 2 (Γ(6)Γ(2)/Γ(4)² · 3/2 − 3).
        assert_abs_diff_eq!(powerexp_kurtosis(0.5), 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(powerexp_kurtosis(1.0), 0.0, epsilon = 1e-12);
        let n = 1_000_000;
        let d = sample_powerexp2(&SymMat2::identity(), 0.5, n, &SeedSpec::new(78)).unwrap();
        let x = d.column(0);
        let m2 = x.iter().map(|v| v * v).sum::<f64>() / n as f64;
        let m4 = x.iter().map(|v| v.powi(4)).sum::<f64>() / n as f64;
        assert_abs_diff_eq!(m4 / (m2 * m2) - 3.0, 2.0, epsilon = 0.15);
    }

    #[test]
    fn sign_distribution_is_family_free() {
        let sigma = SymMat2::new(2.0, 0.8, 1.0);
        let n = 1_000_000;
        let families = [
            EllipticalFamily::Normal,
            EllipticalFamily::StudentT { nu: 1.0 },
            EllipticalFamily::StudentT { nu: 5.0 },
            EllipticalFamily::PowerExp { alpha: 0.5 },
        ];
        let s: Vec<SymMat2> = families
            .iter()
            .enumerate()
            .map(|(i, &f)| {
                let d = EllipticalSpec::new(sigma, f)
                    .unwrap()
                    .sample(n, &SeedSpec::new(80 + i as u64))
                    .unwrap();
                sscm2_about(&d.points2().unwrap(), [0.0, 0.0]).0
            })
            .collect();
        for w in s.windows(2) {
            assert!(w[0].max_abs_diff(&w[1]) < 0.005);
        }
    }

    #[test]
    fn skewed_exponential() {
        assert_abs_diff_eq!(skewed_exp_alpha(0.6).unwrap(), 1.0 / 3.0, epsilon = 1e-15);
        let a = skewed_exp_alpha(0.6).unwrap();
        assert_abs_diff_eq!(2.0 * a / (1.0 + a * a), 0.6, epsilon = 1e-15);
        assert_eq!(skewed_exp_alpha(0.0).unwrap(), 0.0);
        assert!(skewed_exp_alpha(1.0).is_err());
        let d = sample_skewed_exp(0.6, 100_000, &SeedSpec::new(90)).unwrap();
        assert_abs_diff_eq!(pearson(&d).unwrap().value, 0.6, epsilon = 0.01);
    }

    #[test]
    fn contamination() {
        let d = DataMatrix::from_rows(&[[0.0, 0.0], [1.0, 1.0]]).unwrap();
        assert_eq!(contaminate_shift(&d, 0.0).unwrap(), d);
        assert_eq!(contaminate_shift(&d, 5.0).unwrap().as_slice(), &[5.0, 0.0, 1.0, 1.0]);

        let base = sample_normal2(&SymMat2::identity(), 30, &SeedSpec::new(91)).unwrap();
        let cs = SymMat2::new(4.0, -2.0, 4.0);
        let seed = SeedSpec::new(92).with_tag(TAG_CONTAMINATION);
        assert_eq!(contaminate_replace(&base, 0, &cs, &seed).unwrap(), base);
        for m in 0..30 {
            let a = contaminate_replace(&base, m, &cs, &seed).unwrap();
            let b = contaminate_replace(&base, m + 1, &cs, &seed).unwrap();
            let differing = (0..30).filter(|&i| a.row(i) != b.row(i)).count();
            assert_eq!(differing, 1);
            assert_eq!(a.row(m), base.row(m));
            for i in m + 1..30 {
                assert_eq!(a.row(i), b.row(i));
            }
        }
        let full = contaminate_replace(&base, 30, &cs, &seed).unwrap();
        assert!((0..30).all(|i| full.row(i) != base.row(i)));
    }
}
