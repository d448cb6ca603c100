//! Bivariate S-estimator with Tukey's biweight, normal-consistent.

use std::sync::OnceLock;

use super::mcd::{c_step, elemental_start, mean_cov};
use super::{require_n, CorrEstimate, EstimatorId, ScatterEstimate, ScatterMethod};
use crate::data::DataMatrix;
use crate::distributions::{SeedSpec, TAG_S_ESTIMATOR};
use crate::error::{Error, Result};
use crate::numerics::{cmp_f64, find_root, SymMat2};

pub const S_STARTS: usize = 20;
pub const S_KEEP_BEST: usize = 5;
pub const S_START_STEPS: usize = 2;
pub const S_MAX_ITER: usize = 200;
const S_TOL: f64 = 1e-10;
const GL_NODES: usize = 64;

/// Biweight objective `min(y²/2 − y⁴/(2c²) + y⁶/(6c⁴), c²/6)`.
pub fn biweight_rho(y: f64, c: f64) -> f64 {
    let y = y.abs();
    if y >= c {
        c * c / 6.0
    } else {
        let t = (y / c).powi(2);
        y * y / 2.0 * (1.0 - t + t * t / 3.0)
    }
}

/// `ρ'(y)/y = (1 − (y/c)²)²` on `|y| < c`, zero beyond.
fn biweight_weight(y: f64, c: f64) -> f64 {
    if y.abs() >= c {
        0.0
    } else {
        let t = 1.0 - (y / c).powi(2);
        t * t
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for i in 0..m.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=m {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if m == 1 { x } else { p1 };
            let pm1 = if m == 1 { 1.0 } else { p0 };
            dp = m as f64 * (x * p - pm1) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[m - 1 - i] = x;
        weights[i] = w;
        weights[m - 1 - i] = w;
    }
    (nodes, weights)
}

fn gl_rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(GL_NODES))
}

/// `E ρ_c(‖Z‖)` for a standard bivariate normal `Z`, by quadrature of the
/// radial density `r e^{−r²/2}` on `[0, c]` plus the constant tail.
pub fn expected_rho(c: f64) -> f64 {
    let (nodes, weights) = gl_rule();
    let half = c / 2.0;
    let body: f64 = nodes
        .iter()
        .zip(weights)
        .map(|(&t, &w)| {
            let r = half * (t + 1.0);
            w * biweight_rho(r, c) * r * (-r * r / 2.0).exp()
        })
        .sum::<f64>()
        * half;
    body + c * c / 6.0 * (-c * c / 2.0).exp()
}

/// Tuning constant `c` and consistency constant `b` for breakdown point `r`:
/// `b = E ρ_c(‖Z‖)` and `r c²/6 = b`.
pub fn tuning(r: f64) -> Result<(f64, f64)> {
    if !(r > 0.0 && r <= 0.5) {
        return Err(Error::domain("S-estimator breakdown point must lie in (0, 1/2]"));
    }
    let c = find_root(|c| r * c * c / 6.0 - expected_rho(c), 0.1, 50.0, 1e-14, 200)?;
    Ok((c, expected_rho(c)))
}

fn default_tuning() -> (f64, f64) {
    static T: OnceLock<(f64, f64)> = OnceLock::new();
    *T.get_or_init(|| tuning(0.5).expect("tuning at r = 1/2"))
}

fn tuning_for(r: f64) -> Result<(f64, f64)> {
    if r == 0.5 {
        Ok(default_tuning())
    } else {
        tuning(r)
    }
}

fn mean_rho(d: &[f64], s: f64, c: f64) -> f64 {
    d.iter().map(|&di| biweight_rho(di / s, c)).sum::<f64>() / d.len() as f64
}

/// M-scale: the `s` solving `ave ρ_c(dᵢ/s) = b`.
pub fn m_scale(d: &[f64], c: f64, b: f64) -> Result<f64> {
    let f = |s: f64| mean_rho(d, s, c) - b;
    let mut sorted = d.to_vec();
    sorted.sort_unstable_by(cmp_f64);
    let s0 = sorted[sorted.len() / 2].max(sorted[sorted.len() - 1] * 1e-8);
    if !(s0 > 0.0) {
        return Err(Error::degenerate("all distances are zero"));
    }
    let (mut lo, mut hi) = (s0, s0);
    let mut guard = 0;
    while f(lo) <= 0.0 {
        lo /= 2.0;
        guard += 1;
        if guard > 200 {
            return Err(Error::degenerate("M-scale undefined: too many zero distances"));
        }
    }
    while f(hi) > 0.0 {
        hi *= 2.0;
        guard += 1;
        if guard > 400 {
            return Err(Error::degenerate("M-scale bracket failed"));
        }
    }
    find_root(f, lo, hi, hi * 1e-15, 300)
}

#[derive(Debug, Clone)]
struct State {
    mu: [f64; 2],
    gamma: SymMat2,
    s: f64,
}

fn distances(points: &[[f64; 2]], mu: [f64; 2], gamma: &SymMat2) -> Result<Vec<f64>> {
    let inv = gamma
        .inverse()
        .ok_or_else(|| Error::degenerate("singular shape iterate"))?;
    Ok(points
        .iter()
        .map(|p| inv.quad_form([p[0] - mu[0], p[1] - mu[1]]).max(0.0).sqrt())
        .collect())
}

fn unit_det(v: &SymMat2) -> Result<SymMat2> {
    let det = v.det();
    if !(det > 0.0) || !det.is_finite() {
        return Err(Error::degenerate("singular scatter iterate"));
    }
    Ok(v.scale(1.0 / det.sqrt()))
}

/// One reweighting step followed by one fixed-point scale update.
fn irwls_step(points: &[[f64; 2]], st: &State, c: f64, b: f64) -> Result<State> {
    let d = distances(points, st.mu, &st.gamma)?;
    let w: Vec<f64> = d.iter().map(|&di| biweight_weight(di / st.s, c)).collect();
    let sw: f64 = w.iter().sum();
    if !(sw > 0.0) {
        return Err(Error::degenerate("all biweight weights vanish"));
    }
    let (mut mx, mut my) = (0.0, 0.0);
    for (wi, p) in w.iter().zip(points) {
        mx += wi * p[0];
        my += wi * p[1];
    }
    let mu = [mx / sw, my / sw];
    let (mut a, mut bb, mut cc) = (0.0, 0.0, 0.0);
    for (wi, p) in w.iter().zip(points) {
        let (dx, dy) = (p[0] - mu[0], p[1] - mu[1]);
        a += wi * dx * dx;
        bb += wi * dx * dy;
        cc += wi * dy * dy;
    }
    let gamma = unit_det(&SymMat2::new(a, bb, cc))?;
    let d = distances(points, mu, &gamma)?;
    let s = st.s * (mean_rho(&d, st.s, c) / b).sqrt();
    if !(s > 0.0) {
        return Err(Error::degenerate("S-scale collapsed to zero"));
    }
    Ok(State { mu, gamma, s })
}

fn exact_state(points: &[[f64; 2]], mu: [f64; 2], gamma: SymMat2, c: f64, b: f64) -> Result<State> {
    let d = distances(points, mu, &gamma)?;
    let s = m_scale(&d, c, b)?;
    Ok(State { mu, gamma, s })
}

/// S-estimator of location and scatter with breakdown point `r`.
pub fn s_estimator(data: &DataMatrix, r: f64, seed: &SeedSpec) -> Result<ScatterEstimate> {
    require_n(data, 6, "s_estimator")?;
    let points = data.points2()?;
    let n = points.len();
    let (c, b) = tuning_for(r)?;
    let h = (n + 3) / 2;
    let mut rng = seed.with_tag(TAG_S_ESTIMATOR).rng();

    let mut starts: Vec<State> = Vec::with_capacity(S_STARTS);
    for _ in 0..S_STARTS {
        let Some((m, v)) = elemental_start(&points, &mut rng, h) else {
            continue;
        };
        let Some(subset) = c_step(&points, m, &v, h) else {
            continue;
        };
        let (mu, cov) = mean_cov(&points, &subset);
        let Ok(gamma) = unit_det(&cov) else { continue };
        let Ok(mut st) = exact_state(&points, mu, gamma, c, b) else {
            continue;
        };
        for _ in 0..S_START_STEPS {
            match irwls_step(&points, &st, c, b) {
                Ok(next) => st = next,
                Err(_) => break,
            }
        }
        if let Ok(st) = exact_state(&points, st.mu, st.gamma, c, b) {
            starts.push(st);
        }
    }
    if starts.is_empty() {
        return Err(Error::degenerate("no S-estimator start produced a nonsingular fit"));
    }
    starts.sort_by(|x, y| cmp_f64(&x.s, &y.s));
    starts.truncate(S_KEEP_BEST);

    let mut best: Option<(State, usize)> = None;
    let mut last_failure = None;
    for start in starts {
        let mut st = start;
        let mut converged = None;
        for it in 1..=S_MAX_ITER {
            let next = irwls_step(&points, &st, c, b)?;
            let ds = (next.s - st.s).abs() / st.s;
            let dg = next.gamma.max_abs_diff(&st.gamma);
            let dm = (next.mu[0] - st.mu[0]).abs().max((next.mu[1] - st.mu[1]).abs()) / next.s;
            st = next;
            if ds <= S_TOL && dg <= 1e-8 && dm <= 1e-8 {
                converged = Some(it);
                break;
            }
        }
        match converged {
            Some(it) => {
                let st = exact_state(&points, st.mu, st.gamma, c, b)?;
                if best.as_ref().is_none_or(|(bst, _)| st.s < bst.s) {
                    best = Some((st, it));
                }
            }
            None => last_failure = Some(st),
        }
    }
    let Some((st, iterations)) = best else {
        let st = last_failure.expect("at least one start");
        return Err(Error::Convergence {
            algorithm: "s_estimator",
            iterations: S_MAX_ITER,
            residual: st.s,
            last_iterate: vec![st.mu[0], st.mu[1], st.gamma.s11, st.gamma.s12, st.gamma.s22],
        });
    };
    Ok(ScatterEstimate {
        location: st.mu,
        cov: st.gamma.scale(st.s * st.s),
        method: ScatterMethod::SEstimator,
        iterations,
    })
}

pub fn s_corr(data: &DataMatrix, r: f64, seed: &SeedSpec) -> Result<CorrEstimate> {
    s_estimator(data, r, seed)?.into_corr(EstimatorId::SEstimator, data.nrows())
}

/// `ave ρ_c(dᵢ)` with distances under `(location, cov)`, for feasibility
/// checks.
pub fn constraint_value(data: &DataMatrix, fit: &ScatterEstimate, r: f64) -> Result<f64> {
    let (c, _) = tuning_for(r)?;
    let points = data.points2()?;
    let d = distances(&points, fit.location, &fit.cov)?;
    Ok(mean_rho(&d, 1.0, c))
}
