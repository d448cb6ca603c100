//! Acceptance criteria, one check each. Runs without the libtest harness so
//! that every `PASS`/`FAIL` line is printed; arguments filter checks by name.

use std::process::ExitCode;
use std::time::Instant;

use signcorr::asymptotics::{
    are_spatial, asv_spatial_corr, ges_spatial_corr, if_spatial_corr, population_sscm, v0, ws_matrix, wv0_matrix,
};
use signcorr::distributions::{sample_normal2, sigma_from_rho, SeedSpec};
use signcorr::highdim::{pairwise_corr_matrix, psd_repair};
use signcorr::numerics::{CompensatedSum, IDENTITY2};
use signcorr::simulation::{run_scenario, Grid, Scenario, ScenarioConfig, ScenarioResult, SCHEMA_VERSION};
use signcorr::sscm::{rho_from_sscm2, shape_from_sscm2};
use signcorr::{DataMatrix, EstimatorId, SymMat2};

const A_GRID: [f64; 5] = [0.25, 0.5, 1.0, 2.0, 4.0];

fn rho_grid() -> impl Iterator<Item = f64> {
    (-9..=9).map(|k| k as f64 / 10.0)
}

fn report(k: u32, ok: bool, detail: &str) -> bool {
    println!("{} criterion {k}: {detail}", if ok { "PASS" } else { "FAIL" });
    ok
}

fn config(scenario: Scenario, grid: Grid, estimators: &[EstimatorId], reps: usize, seed: u64) -> ScenarioConfig {
    ScenarioConfig {
        schema_version: SCHEMA_VERSION,
        scenario,
        grid,
        estimators: estimators.to_vec(),
        reps,
        seed,
    }
}

fn spread(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    max / min - 1.0
}

fn mse(res: &ScenarioResult, id: EstimatorId, param: f64, rho: f64) -> f64 {
    res.row(id, param, rho).expect("row present").mse
}

fn criterion_01_round_trip() -> bool {
    let start = Instant::now();
    let mut worst_rho = 0.0f64;
    let mut worst_a = 0.0f64;
    let mut points = 0;
    for &a in &A_GRID {
        for rho in rho_grid() {
            let s = population_sscm(&v0(a, rho)).unwrap();
            worst_rho = worst_rho.max((rho_from_sscm2(&s).unwrap() - rho).abs());
            worst_a = worst_a.max((shape_from_sscm2(&s).unwrap().a - a).abs());
            points += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    report(
        1,
        points == 95 && worst_rho <= 1e-12 && worst_a <= 1e-12 && secs < 1.0,
        &format!("{points} grid points, max |rho error| {worst_rho:.2e}, max |a error| {worst_a:.2e}, {secs:.3} s"),
    )
}

fn criterion_02_efficiency_table() -> bool {
    let e0 = are_spatial(0.0, 1.0, 0.0);
    let e5 = are_spatial(0.5, 1.0, 0.0);
    let ok = (e0 - 0.5).abs() < 5e-4 && (e5 - 0.464).abs() < 5e-4 && (e5 - 0.4641).abs() < 5e-5;
    report(
        2,
        ok,
        &format!("ARE(0, 1, 0) = {e0:.4}, ARE(0.5, 1, 0) = {e5:.4}; reference 0.5, 0.464"),
    )
}

fn criterion_03_wv0_matches_asv() -> bool {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for &a in &A_GRID {
        for rho in rho_grid() {
            let w = wv0_matrix(a, rho).unwrap();
            worst = worst.max((w.var_rho() - asv_spatial_corr(rho, a)).abs());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    report(
        3,
        worst <= 1e-10 && secs < 1.0,
        &format!("max |W[2,2] - ASV| {worst:.2e}, {secs:.3} s"),
    )
}

fn criterion_04_ws_monte_carlo() -> bool {
    let start = Instant::now();
    let n = 1_000_000;
    let data = sample_normal2(&SymMat2::diag(4.0, 1.0), n, &SeedSpec::new(4)).unwrap();
    let vecs: Vec<[f64; 4]> = data
        .rows()
        .map(|r| {
            let norm = r[0].hypot(r[1]);
            let s = [r[0] / norm, r[1] / norm];
            [s[0] * s[0], s[0] * s[1], s[1] * s[0], s[1] * s[1]]
        })
        .collect();
    let mut mean = [0.0; 4];
    for k in 0..4 {
        let mut acc = CompensatedSum::new();
        vecs.iter().for_each(|v| acc.add(v[k]));
        mean[k] = acc.value() / n as f64;
    }
    let ws = ws_matrix(4.0, 1.0, &IDENTITY2).unwrap();
    let mut worst = 0.0f64;
    for i in 0..4 {
        for j in 0..4 {
            let mut acc = CompensatedSum::new();
            vecs.iter().for_each(|v| acc.add((v[i] - mean[i]) * (v[j] - mean[j])));
            let cov = acc.value() / (n - 1) as f64;
            worst = worst.max((cov - ws.0[i][j]).abs());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    report(
        4,
        worst <= 0.005 && secs < 30.0,
        &format!("max entrywise deviation {worst:.2e} over 10^6 draws, {secs:.1} s"),
    )
}

fn criterion_05_influence_function() -> bool {
    let eps = 1e-6;
    let mut worst = 0.0f64;
    for &rho in &[0.0, 0.3, 0.6] {
        let s = population_sscm(&v0(1.0, rho)).unwrap();
        let base = rho_from_sscm2(&s).unwrap();
        for k in 0..360 {
            let t = (k as f64).to_radians();
            let x = [t.cos(), t.sin()];
            let perturbed = s.scale(1.0 - eps) + SymMat2::outer(x).scale(eps);
            let dq = (rho_from_sscm2(&perturbed).unwrap() - base) / eps;
            worst = worst.max((dq - if_spatial_corr(x, 1.0, rho).unwrap()).abs());
        }
    }
    let ges = ges_spatial_corr(1.0, 0.0).unwrap();
    report(
        5,
        worst <= 1e-4 && (ges - 2.0).abs() <= 1e-9,
        &format!("max |difference quotient - IF| {worst:.2e} over 1080 points, GES(1, 0) = {ges}"),
    )
}

fn criterion_06_heavy_tail_mse() -> bool {
    let start = Instant::now();
    let grid = Grid {
        n: vec![100],
        rho: vec![0.0, 0.5],
        nu: vec![1.0, 2.0, 5.0, 10.0],
        ..Default::default()
    };
    let ids = [EstimatorId::Pearson, EstimatorId::SpatialSign, EstimatorId::Quadrant];
    let res = run_scenario(&config(Scenario::TnuMse, grid, &ids, 10_000, 6), 1).unwrap();
    let ss: Vec<f64> = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|&nu| mse(&res, EstimatorId::SpatialSign, nu, 0.5))
        .collect();
    let pearson = mse(&res, EstimatorId::Pearson, 5.0, 0.0);
    let quadrant = mse(&res, EstimatorId::Quadrant, 1.0, 0.0);
    let ok = ss.iter().all(|m| (m - 0.012).abs() <= 0.002)
        && (pearson - 0.021).abs() <= 0.004
        && (quadrant - 0.024).abs() <= 0.004;
    report(
        6,
        ok,
        &format!(
            "spatial sign MSE at rho=0.5 for nu=1,2,5,10: {:.4} {:.4} {:.4} {:.4} (0.012); Pearson nu=5 rho=0: {pearson:.4} (0.021); quadrant nu=1 rho=0: {quadrant:.4} (0.024); {:.1} s",
            ss[0],
            ss[1],
            ss[2],
            ss[3],
            start.elapsed().as_secs_f64()
        ),
    )
}

fn criterion_07_variance_flatness() -> bool {
    let grid = Grid {
        n: vec![20, 50, 100],
        rho: vec![0.5],
        ..Default::default()
    };
    let res = run_scenario(
        &config(Scenario::NormalBiasVar, grid, &[EstimatorId::SpatialSign], 100_000, 7),
        1,
    )
    .unwrap();
    let nv: Vec<f64> = res.rows.iter().map(|r| r.n_times_variance).collect();
    let ratio = spread(&nv) + 1.0;
    let ok = nv.len() == 3 && nv.iter().all(|v| (1.15..=1.45).contains(v)) && ratio <= 1.15;
    report(
        7,
        ok,
        &format!(
            "n*Var at n=20,50,100: {:.4} {:.4} {:.4}; max/min {ratio:.4}",
            nv[0], nv[1], nv[2]
        ),
    )
}

fn criterion_08_distribution_freeness() -> bool {
    let ss = [EstimatorId::SpatialSign];
    let nus = [1.0, 2.0, 5.0, 10.0];
    let alphas = [0.1, 0.5, 1.0, 2.0];
    let t = run_scenario(
        &config(
            Scenario::TnuMse,
            Grid {
                n: vec![100],
                rho: vec![0.5],
                nu: nus.to_vec(),
                ..Default::default()
            },
            &ss,
            10_000,
            8,
        ),
        1,
    )
    .unwrap();
    let p = run_scenario(
        &config(
            Scenario::PowerExpMse,
            Grid {
                n: vec![100],
                rho: vec![0.5],
                alpha: alphas.to_vec(),
                ..Default::default()
            },
            &ss,
            10_000,
            8,
        ),
        1,
    )
    .unwrap();
    let t_mse: Vec<f64> = nus.iter().map(|&v| mse(&t, ss[0], v, 0.5)).collect();
    let p_mse: Vec<f64> = alphas.iter().map(|&v| mse(&p, ss[0], v, 0.5)).collect();
    let (dt, dp) = (spread(&t_mse), spread(&p_mse));
    report(
        8,
        dt <= 0.10 && dp <= 0.10,
        &format!(
            "MSE spread across nu {:.1}% {t_mse:.4?}, across alpha {:.1}% {p_mse:.4?}",
            100.0 * dt,
            100.0 * dp
        ),
    )
}

fn criterion_09_consistency_battery() -> bool {
    let start = Instant::now();
    let grid = Grid {
        n: vec![10_000],
        rho: vec![0.0, 0.5, 0.9],
        ..Default::default()
    };
    let res = run_scenario(&config(Scenario::NormalBiasVar, grid, &EstimatorId::STUDY, 200, 9), 1).unwrap();
    let mut misses = Vec::new();
    let mut worst = 0.0f64;
    for r in &res.rows {
        let z = r.bias.abs() / r.mc_se_mean;
        worst = worst.max(z);
        if r.successes != r.reps || !(z <= 3.0) {
            misses.push(format!(
                "{} at rho={} ({:.2} SE, {} successes)",
                r.estimator, r.rho, z, r.successes
            ));
        }
    }
    report(
        9,
        res.rows.len() == 39 && misses.is_empty(),
        &format!(
            "{} cells, largest |bias| {worst:.2} MC SE, {:.0} s{}",
            res.rows.len(),
            start.elapsed().as_secs_f64(),
            if misses.is_empty() {
                String::new()
            } else {
                format!("; outside: {}", misses.join(", "))
            }
        ),
    )
}

fn criterion_10_robustness_ordering() -> bool {
    let reps = 5000;
    let outlier = run_scenario(
        &config(
            Scenario::SingleOutlier,
            Grid {
                n: vec![100],
                rho: vec![0.5],
                h: vec![5.0],
                ..Default::default()
            },
            &[
                EstimatorId::SpatialSign,
                EstimatorId::Pearson,
                EstimatorId::GaussianRank,
            ],
            reps,
            10,
        ),
        1,
    )
    .unwrap();
    let contaminated = run_scenario(
        &config(
            Scenario::ReplacementContamination,
            Grid {
                n: vec![100],
                rho: vec![0.5],
                m: vec![20],
                ..Default::default()
            },
            &[
                EstimatorId::Wmcd,
                EstimatorId::SEstimator,
                EstimatorId::Spearman,
                EstimatorId::Kendall,
            ],
            reps,
            10,
        ),
        1,
    )
    .unwrap();
    // |mean| ± 3 MC standard errors.
    let band = |res: &ScenarioResult, id: EstimatorId, param: f64| {
        let r = res.row(id, param, 0.5).expect("row present");
        (
            r.bias.abs() - 3.0 * r.mc_se_mean,
            r.bias.abs() + 3.0 * r.mc_se_mean,
            r.bias,
        )
    };
    let ss = band(&outlier, EstimatorId::SpatialSign, 5.0);
    let pe = band(&outlier, EstimatorId::Pearson, 5.0);
    let gr = band(&outlier, EstimatorId::GaussianRank, 5.0);
    let wm = band(&contaminated, EstimatorId::Wmcd, 20.0);
    let se = band(&contaminated, EstimatorId::SEstimator, 20.0);
    let sp = band(&contaminated, EstimatorId::Spearman, 20.0);
    let ke = band(&contaminated, EstimatorId::Kendall, 20.0);
    let ok = ss.1 < pe.0 && ss.1 < gr.0 && wm.1 < sp.0.min(ke.0) && se.1 < sp.0.min(ke.0);
    report(
        10,
        ok,
        &format!(
            "sensitivity at h=5: spatial sign {:.4}, Pearson {:.4}, Gaussian rank {:.4}; bias at 20%: wmcd {:.4}, S {:.4}, Spearman {:.4}, Kendall {:.4}",
            ss.2, pe.2, gr.2, wm.2, se.2, sp.2, ke.2
        ),
    )
}

fn criterion_11_determinism() -> bool {
    let ids = [
        EstimatorId::SpatialSign,
        EstimatorId::Kendall,
        EstimatorId::Tyler,
        EstimatorId::Wmcd,
        EstimatorId::SEstimator,
        EstimatorId::StahelDonoho,
    ];
    let cfgs = [
        config(
            Scenario::ReplacementContamination,
            Grid {
                n: vec![60],
                rho: vec![0.5],
                m: vec![0, 6, 12],
                ..Default::default()
            },
            &ids,
            150,
            11,
        ),
        config(
            Scenario::PowerExpMse,
            Grid {
                n: vec![40],
                rho: vec![0.3],
                alpha: vec![0.2, 1.0],
                ..Default::default()
            },
            &ids,
            150,
            11,
        ),
    ];
    let mut identical = true;
    let mut bytes = 0;
    for cfg in &cfgs {
        let csv = |workers| {
            let mut buf = Vec::new();
            run_scenario(cfg, workers).unwrap().write_csv(&mut buf).unwrap();
            buf
        };
        let (one, eight) = (csv(1), csv(8));
        identical &= one == eight;
        bytes += one.len();
    }
    report(
        11,
        identical,
        &format!("two scenarios, 1 vs 8 workers, {bytes} CSV bytes compared"),
    )
}

fn criterion_12_highdim() -> bool {
    let (n, p) = (50, 100);
    let mut rng_data = Vec::with_capacity(n * p);
    // Block-correlated columns: pairs (2k, 2k+1) share a factor.
    let sigma = sigma_from_rho(0.6, 1.0, 1.0).unwrap();
    let blocks: Vec<DataMatrix> = (0..p / 2)
        .map(|k| sample_normal2(&sigma, n, &SeedSpec::new(12).derive(0, k as u64, 0).unwrap()).unwrap())
        .collect();
    for i in 0..n {
        for b in &blocks {
            rng_data.extend_from_slice(b.row(i));
        }
    }
    let data = DataMatrix::new(n, p, rng_data).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    let start = Instant::now();
    let m = pool
        .install(|| pairwise_corr_matrix(&data, EstimatorId::SpatialSign, &SeedSpec::new(12), true))
        .unwrap();
    let secs = start.elapsed().as_secs_f64();
    let repaired = psd_repair(&m);
    let again = psd_repair(&repaired);
    let drift = (&again.values - &repaired.values).amax();
    let min_eig = repaired.min_eigenvalue();
    let ok = secs < 60.0 && m.pairs_evaluated == p * (p - 1) / 2 && min_eig >= -1e-10 && drift <= 1e-12;
    report(
        12,
        ok,
        &format!(
            "{} pairs in {secs:.2} s on 4 workers, min eigenvalue {:.3e} before and {min_eig:.3e} after repair, idempotence drift {drift:.1e}",
            m.pairs_evaluated,
            m.min_eigenvalue()
        ),
    )
}

type Check = (&'static str, fn() -> bool);

const CHECKS: [Check; 12] = [
    ("criterion_01_round_trip", criterion_01_round_trip),
    ("criterion_02_efficiency_table", criterion_02_efficiency_table),
    ("criterion_03_wv0_matches_asv", criterion_03_wv0_matches_asv),
    ("criterion_04_ws_monte_carlo", criterion_04_ws_monte_carlo),
    ("criterion_05_influence_function", criterion_05_influence_function),
    ("criterion_06_heavy_tail_mse", criterion_06_heavy_tail_mse),
    ("criterion_07_variance_flatness", criterion_07_variance_flatness),
    ("criterion_08_distribution_freeness", criterion_08_distribution_freeness),
    ("criterion_09_consistency_battery", criterion_09_consistency_battery),
    ("criterion_10_robustness_ordering", criterion_10_robustness_ordering),
    ("criterion_11_determinism", criterion_11_determinism),
    ("criterion_12_highdim", criterion_12_highdim),
];

fn main() -> ExitCode {
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    let mut ran = 0;
    for (name, check) in CHECKS {
        if !filters.is_empty() && !filters.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        ran += 1;
        let ok = std::panic::catch_unwind(check).unwrap_or_else(|_| {
            println!("FAIL {name}: panicked");
            false
        });
        failed += usize::from(!ok);
    }
    println!("acceptance: {} of {ran} criteria passed", ran - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
