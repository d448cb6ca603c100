//! Monte Carlo engine for the comparison scenarios.
//!
//! Work is split into units `(group, replication)`. A group is a set of grid
//! cells that share one base sample per replication (all shift sizes of the
//! single-outlier design, all contamination counts of the replacement
//! design); every other cell is its own group. Units run on a worker pool in
//! chunks, and results are accumulated in `(group, replication)` order, so
//! output does not depend on the number of workers.

use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::DataMatrix;
use crate::distributions::{
    contaminate_replace, contaminate_shift, sample_normal2, sample_powerexp2, sample_skewed_exp, sample_t2,
    sigma_from_rho, SeedSpec, MAX_GRID, MAX_REPLICATION, TAG_CONTAMINATION,
};
use crate::error::{Error, Result};
use crate::estimators::{estimate, estimate_many, EstimatorId};
use crate::numerics::CompensatedSum;

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_REPS: usize = 2000;
const CHUNK_UNITS: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    NormalBiasVar,
    TnuMse,
    PowerExpMse,
    SingleOutlier,
    ReplacementContamination,
    SkewedExp,
}

impl Scenario {
    /// Stream id component; distinct per scenario.
    pub fn id(&self) -> u64 {
        match self {
            Scenario::NormalBiasVar => 1,
            Scenario::TnuMse => 2,
            Scenario::PowerExpMse => 3,
            Scenario::SingleOutlier => 4,
            Scenario::ReplacementContamination => 5,
            Scenario::SkewedExp => 6,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Scenario::NormalBiasVar => "normal_bias_var",
            Scenario::TnuMse => "tnu_mse",
            Scenario::PowerExpMse => "power_exp_mse",
            Scenario::SingleOutlier => "single_outlier",
            Scenario::ReplacementContamination => "replacement_contamination",
            Scenario::SkewedExp => "skewed_exp",
        }
    }

    pub fn param_name(&self) -> &'static str {
        match self {
            Scenario::NormalBiasVar => "n",
            Scenario::TnuMse => "nu",
            Scenario::PowerExpMse => "alpha",
            Scenario::SingleOutlier => "h",
            Scenario::ReplacementContamination => "m",
            Scenario::SkewedExp => "rho",
        }
    }
}

/// Parameter lists; each scenario reads the fields it needs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    #[serde(default)]
    pub n: Vec<usize>,
    #[serde(default)]
    pub rho: Vec<f64>,
    #[serde(default)]
    pub nu: Vec<f64>,
    #[serde(default)]
    pub alpha: Vec<f64>,
    #[serde(default)]
    pub h: Vec<f64>,
    #[serde(default)]
    pub m: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    pub scenario: Scenario,
    pub grid: Grid,
    pub estimators: Vec<EstimatorId>,
    pub reps: usize,
    pub seed: u64,
}

/// One grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub param_value: f64,
    pub n: usize,
    pub rho: f64,
    /// Target of bias and MSE.
    pub truth: f64,
}

fn config_err(field: &str, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("field `{field}`: {msg}"))
}

fn require_nonempty<T>(v: &[T], field: &str) -> Result<()> {
    if v.is_empty() {
        return Err(config_err(field, "must not be empty for this scenario"));
    }
    Ok(())
}

impl ScenarioConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: ScenarioConfig = serde_json::from_str(s).map_err(|e| Error::Config(format!("invalid config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(config_err(
                "schema_version",
                format!("expected {SCHEMA_VERSION}, got {}", self.schema_version),
            ));
        }
        if self.reps == 0 || self.reps as u64 > MAX_REPLICATION + 1 {
            return Err(config_err("reps", "must be between 1 and 2^36"));
        }
        require_nonempty(&self.estimators, "estimators")?;
        let g = &self.grid;
        require_nonempty(&g.n, "grid.n")?;
        require_nonempty(&g.rho, "grid.rho")?;
        if let Some(n) = g.n.iter().find(|&&n| n < 2) {
            return Err(config_err("grid.n", format!("sample size {n} is below 2")));
        }
        let skewed = self.scenario == Scenario::SkewedExp;
        for &r in &g.rho {
            let ok = if skewed { (0.0..1.0).contains(&r) } else { r.abs() < 1.0 };
            if !ok {
                return Err(config_err("grid.rho", format!("{r} is out of range")));
            }
        }
        match self.scenario {
            Scenario::TnuMse => {
                require_nonempty(&g.nu, "grid.nu")?;
                if let Some(v) = g.nu.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
                    return Err(config_err("grid.nu", format!("{v} is not positive")));
                }
            }
            Scenario::PowerExpMse => {
                require_nonempty(&g.alpha, "grid.alpha")?;
                if let Some(v) = g.alpha.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
                    return Err(config_err("grid.alpha", format!("{v} is not positive")));
                }
            }
            Scenario::SingleOutlier => {
                require_nonempty(&g.h, "grid.h")?;
                if g.h.iter().any(|v| !v.is_finite()) {
                    return Err(config_err("grid.h", "values must be finite"));
                }
            }
            Scenario::ReplacementContamination => {
                require_nonempty(&g.m, "grid.m")?;
                let n_min = *g.n.iter().min().expect("nonempty");
                if let Some(m) = g.m.iter().find(|&&m| m > n_min) {
                    return Err(config_err("grid.m", format!("{m} exceeds the sample size {n_min}")));
                }
            }
            Scenario::NormalBiasVar | Scenario::SkewedExp => {}
        }
        if self.groups().len() as u64 > MAX_GRID + 1 {
            return Err(config_err("grid", "too many grid points"));
        }
        Ok(())
    }

    /// Grid cells in output order.
    pub fn cells(&self) -> Vec<Cell> {
        self.groups().into_iter().flat_map(|g| g.cells).collect()
    }

    fn groups(&self) -> Vec<Group> {
        let g = &self.grid;
        let mut out = Vec::new();
        let single = |param_value: f64, n: usize, rho: f64| Group {
            n,
            rho,
            cells: vec![Cell {
                param_value,
                n,
                rho,
                truth: rho,
            }],
        };
        for &rho in &g.rho {
            match self.scenario {
                Scenario::NormalBiasVar => out.extend(g.n.iter().map(|&n| single(n as f64, n, rho))),
                Scenario::SkewedExp => out.extend(g.n.iter().map(|&n| single(rho, n, rho))),
                Scenario::TnuMse => {
                    for &n in &g.n {
                        out.extend(g.nu.iter().map(|&nu| single(nu, n, rho)));
                    }
                }
                Scenario::PowerExpMse => {
                    for &n in &g.n {
                        out.extend(g.alpha.iter().map(|&a| single(a, n, rho)));
                    }
                }
                Scenario::SingleOutlier => {
                    for &n in &g.n {
                        let cells =
                            g.h.iter()
                                .map(|&h| Cell {
                                    param_value: h,
                                    n,
                                    rho,
                                    truth: 0.0,
                                })
                                .collect();
                        out.push(Group { n, rho, cells });
                    }
                }
                Scenario::ReplacementContamination => {
                    for &n in &g.n {
                        let cells =
                            g.m.iter()
                                .map(|&m| Cell {
                                    param_value: m as f64,
                                    n,
                                    rho,
                                    truth: rho,
                                })
                                .collect();
                        out.push(Group { n, rho, cells });
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
struct Group {
    n: usize,
    rho: f64,
    cells: Vec<Cell>,
}

/// Substream of one replication at one group of a scenario.
pub fn derive_seed(master: &SeedSpec, scenario_id: u64, grid_index: u64, replication_index: u64) -> Result<SeedSpec> {
    master.derive(scenario_id, grid_index, replication_index)
}

/// Summary statistics of one cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub successes: usize,
    pub mean: f64,
    pub bias: f64,
    pub variance: f64,
    pub mse: f64,
    pub mc_se_mean: f64,
    pub mc_se_mse: f64,
}

/// Streaming accumulator; values must be added in replication order.
#[derive(Debug, Clone)]
struct Accumulator {
    truth: f64,
    count: usize,
    sum: CompensatedSum,
    sum_e2: CompensatedSum,
    sum_e4: CompensatedSum,
}

impl Accumulator {
    fn new(truth: f64) -> Self {
        Self {
            truth,
            count: 0,
            sum: CompensatedSum::new(),
            sum_e2: CompensatedSum::new(),
            sum_e4: CompensatedSum::new(),
        }
    }

    fn add(&mut self, x: f64) {
        let e2 = (x - self.truth).powi(2);
        self.count += 1;
        self.sum.add(x);
        self.sum_e2.add(e2);
        self.sum_e4.add(e2 * e2);
    }

    fn summary(&self) -> Summary {
        let k = self.count;
        if k == 0 {
            return Summary {
                successes: 0,
                mean: f64::NAN,
                bias: f64::NAN,
                variance: f64::NAN,
                mse: f64::NAN,
                mc_se_mean: f64::NAN,
                mc_se_mse: f64::NAN,
            };
        }
        let kf = k as f64;
        let mean = self.sum.value() / kf;
        let bias = mean - self.truth;
        let mse = self.sum_e2.value() / kf;
        let (variance, mc_se_mean, mc_se_mse) = if k > 1 {
            let var = ((self.sum_e2.value() - kf * bias * bias) / (kf - 1.0)).max(0.0);
            // Jackknife standard error of a mean of squared errors.
            let ss = (self.sum_e4.value() - kf * mse * mse).max(0.0);
            (var, (var / kf).sqrt(), (ss / (kf * (kf - 1.0))).sqrt())
        } else {
            (0.0, f64::NAN, f64::NAN)
        };
        Summary {
            successes: k,
            mean,
            bias,
            variance,
            mse,
            mc_se_mean,
            mc_se_mse,
        }
    }
}

/// Mean, bias, variance, MSE about `truth` and Monte Carlo standard errors.
pub fn aggregate(estimates: &[f64], truth: f64) -> Result<Summary> {
    if estimates.is_empty() {
        return Err(Error::domain("aggregate of an empty sequence"));
    }
    if estimates.iter().any(|x| !x.is_finite()) {
        return Err(Error::domain("aggregate of non-finite estimates"));
    }
    let mut acc = Accumulator::new(truth);
    for &x in estimates {
        acc.add(x);
    }
    Ok(acc.summary())
}

/// One CSV row: a cell and an estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub scenario: Scenario,
    pub estimator: EstimatorId,
    pub param_name: String,
    pub param_value: f64,
    pub rho: f64,
    pub n: usize,
    pub reps: usize,
    pub successes: usize,
    pub mean: f64,
    pub bias: f64,
    pub variance: f64,
    pub n_times_variance: f64,
    pub mse: f64,
    pub mc_se_mean: f64,
    pub mc_se_mse: f64,
}

impl SummaryRow {
    pub fn failures(&self) -> usize {
        self.reps - self.successes
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub config: ScenarioConfig,
    pub rows: Vec<SummaryRow>,
}

impl ScenarioResult {
    pub fn total_failures(&self) -> usize {
        self.rows.iter().map(SummaryRow::failures).sum()
    }

    pub fn row(&self, estimator: EstimatorId, param_value: f64, rho: f64) -> Option<&SummaryRow> {
        self.rows
            .iter()
            .find(|r| r.estimator == estimator && r.param_value == param_value && r.rho == rho)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        write_rows_csv(&self.rows, w)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

pub fn write_rows_csv<W: Write>(rows: &[SummaryRow], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for r in rows {
        wr.serialize(r)?;
    }
    wr.flush()?;
    Ok(())
}

/// Reads rows written by [`ScenarioResult::write_csv`].
pub fn read_rows_csv<R: Read>(r: R) -> Result<Vec<SummaryRow>> {
    let mut rd = csv::Reader::from_reader(r);
    rd.deserialize().map(|row| row.map_err(Error::from)).collect()
}

fn generate(scenario: Scenario, group: &Group, cell: &Cell, seed: &SeedSpec) -> Result<DataMatrix> {
    let sigma = sigma_from_rho(group.rho, 1.0, 1.0);
    match scenario {
        Scenario::NormalBiasVar | Scenario::SingleOutlier | Scenario::ReplacementContamination => {
            sample_normal2(&sigma?, group.n, seed)
        }
        Scenario::TnuMse => sample_t2(&sigma?, cell.param_value, group.n, seed),
        Scenario::PowerExpMse => sample_powerexp2(&sigma?, cell.param_value, group.n, seed),
        Scenario::SkewedExp => sample_skewed_exp(group.rho, group.n, seed),
    }
}

type UnitOutput = Vec<Vec<Result<f64>>>;

/// Estimates for every cell of a group from one replication.
fn run_unit(cfg: &ScenarioConfig, group: &Group, seed: &SeedSpec) -> UnitOutput {
    let ids = &cfg.estimators;
    let values = |d: &DataMatrix| -> Vec<Result<f64>> {
        estimate_many(ids, d, seed)
            .into_iter()
            .map(|r| r.map(|e| e.value))
            .collect()
    };
    let fail_all = |e: Error| vec![vec![Err(e); ids.len()]; group.cells.len()];
    let base = match generate(cfg.scenario, group, &group.cells[0], seed) {
        Ok(d) => d,
        Err(e) => return fail_all(e),
    };
    match cfg.scenario {
        Scenario::SingleOutlier => {
            let base_est = values(&base);
            group
                .cells
                .iter()
                .map(|cell| {
                    let shifted = contaminate_shift(&base, cell.param_value);
                    let est = match shifted {
                        Ok(d) => values(&d),
                        Err(e) => vec![Err(e); ids.len()],
                    };
                    est.into_iter()
                        .zip(&base_est)
                        .map(|(s, b)| match (s, b) {
                            (Ok(s), Ok(b)) => Ok(s - b),
                            (Err(e), _) => Err(e),
                            (_, Err(e)) => Err(e.clone()),
                        })
                        .collect()
                })
                .collect()
        }
        Scenario::ReplacementContamination => {
            let contam = match sigma_from_rho(-0.5, 4.0, 4.0) {
                Ok(s) => s,
                Err(e) => return fail_all(e),
            };
            let cseed = seed.with_tag(TAG_CONTAMINATION);
            group
                .cells
                .iter()
                .map(
                    |cell| match contaminate_replace(&base, cell.param_value as usize, &contam, &cseed) {
                        Ok(d) => values(&d),
                        Err(e) => vec![Err(e); ids.len()],
                    },
                )
                .collect()
        }
        _ => vec![values(&base)],
    }
}

/// Runs a scenario on `workers` threads. Output is identical for any
/// worker count.
pub fn run_scenario(cfg: &ScenarioConfig, workers: usize) -> Result<ScenarioResult> {
    cfg.validate()?;
    if workers == 0 {
        return Err(Error::Config("field `workers`: must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let master = SeedSpec::new(cfg.seed);
    let groups = cfg.groups();
    let n_est = cfg.estimators.len();

    let mut accs: Vec<Vec<Vec<Accumulator>>> = groups
        .iter()
        .map(|g| {
            g.cells
                .iter()
                .map(|c| (0..n_est).map(|_| Accumulator::new(c.truth)).collect())
                .collect()
        })
        .collect();

    let units: Vec<(usize, usize)> = (0..groups.len())
        .flat_map(|g| (0..cfg.reps).map(move |r| (g, r)))
        .collect();
    for chunk in units.chunks(CHUNK_UNITS) {
        let outputs: Vec<Result<UnitOutput>> = pool.install(|| {
            chunk
                .par_iter()
                .map(|&(g, r)| {
                    let seed = derive_seed(&master, cfg.scenario.id(), g as u64, r as u64)?;
                    Ok(run_unit(cfg, &groups[g], &seed))
                })
                .collect()
        });
        for (&(g, _), out) in chunk.iter().zip(outputs) {
            for (cell_acc, cell_out) in accs[g].iter_mut().zip(out?) {
                for (acc, v) in cell_acc.iter_mut().zip(cell_out) {
                    if let Ok(x) = v {
                        if x.is_finite() {
                            acc.add(x);
                        }
                    }
                }
            }
        }
    }

    let mut rows = Vec::new();
    for (g, group) in groups.iter().enumerate() {
        for (c, cell) in group.cells.iter().enumerate() {
            for (e, &id) in cfg.estimators.iter().enumerate() {
                let s = accs[g][c][e].summary();
                rows.push(SummaryRow {
                    scenario: cfg.scenario,
                    estimator: id,
                    param_name: cfg.scenario.param_name().to_string(),
                    param_value: cell.param_value,
                    rho: cell.rho,
                    n: cell.n,
                    reps: cfg.reps,
                    successes: s.successes,
                    mean: s.mean,
                    bias: s.bias,
                    variance: s.variance,
                    n_times_variance: cell.n as f64 * s.variance,
                    mse: s.mse,
                    mc_se_mean: s.mc_se_mean,
                    mc_se_mse: s.mc_se_mse,
                });
            }
        }
    }
    Ok(ScenarioResult {
        config: cfg.clone(),
        rows,
    })
}

/// `estimate(shift(base, h)) − estimate(base)` for each `h`; failed points
/// are `None`.
pub fn sensitivity_curve(
    base: &DataMatrix,
    id: EstimatorId,
    h_grid: &[f64],
    seed: &SeedSpec,
) -> Result<Vec<Option<f64>>> {
    let b = estimate(id, base, seed)?.value;
    h_grid
        .iter()
        .map(|&h| {
            let shifted = contaminate_shift(base, h)?;
            Ok(estimate(id, &shifted, seed).ok().map(|e| e.value - b))
        })
        .collect()
}

/// Sensitivity curve averaged over `reps` independent normal base samples.
pub fn averaged_sensitivity_curve(
    n: usize,
    rho: f64,
    id: EstimatorId,
    h_grid: &[f64],
    reps: usize,
    seed: &SeedSpec,
) -> Result<Vec<Option<f64>>> {
    let sigma = sigma_from_rho(rho, 1.0, 1.0)?;
    let mut sums = vec![CompensatedSum::new(); h_grid.len()];
    let mut counts = vec![0usize; h_grid.len()];
    for r in 0..reps {
        let s = seed.derive(Scenario::SingleOutlier.id(), 0, r as u64)?;
        let base = sample_normal2(&sigma, n, &s)?;
        let Ok(curve) = sensitivity_curve(&base, id, h_grid, &s) else {
            continue;
        };
        for (i, v) in curve.into_iter().enumerate() {
            if let Some(v) = v {
                sums[i].add(v);
                counts[i] += 1;
            }
        }
    }
    Ok(sums
        .iter()
        .zip(&counts)
        .map(|(s, &c)| (c > 0).then(|| s.value() / c as f64))
        .collect())
}

pub const PRESETS: [&str; 6] = ["table2", "fig3", "fig4", "fig5", "fig6", "fig7"];

/// `count` log-spaced values from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|k| match k {
            0 => lo,
            _ if k + 1 == count => hi,
            _ => (a + (b - a) * k as f64 / (count - 1) as f64).exp(),
        })
        .collect()
}

/// The named comparison designs with the thirteen study estimators.
pub fn preset(name: &str, reps: usize, seed: u64) -> Result<ScenarioConfig> {
    let n100 = vec![100];
    let (scenario, grid) = match name {
        "table2" => (
            Scenario::TnuMse,
            Grid {
                n: n100,
                rho: vec![0.0, 0.5],
                nu: vec![1.0, 2.0, 5.0, 10.0],
                ..Default::default()
            },
        ),
        "fig3" => (
            Scenario::NormalBiasVar,
            Grid {
                n: (1..=20).map(|k| 5 * k).collect(),
                rho: vec![0.5],
                ..Default::default()
            },
        ),
        "fig4" => (
            Scenario::PowerExpMse,
            Grid {
                n: n100,
                rho: vec![0.5],
                alpha: log_grid(0.02, 2.0, 56),
                ..Default::default()
            },
        ),
        "fig5" => (
            Scenario::SingleOutlier,
            Grid {
                n: n100,
                rho: vec![0.5],
                h: (0..=20).map(|k| 0.25 * k as f64).collect(),
                ..Default::default()
            },
        ),
        "fig6" => (
            Scenario::ReplacementContamination,
            Grid {
                n: n100,
                rho: vec![0.5],
                m: (0..=10).map(|k| 5 * k).collect(),
                ..Default::default()
            },
        ),
        "fig7" => (
            Scenario::SkewedExp,
            Grid {
                n: n100,
                rho: (1..=9).map(|k| k as f64 / 10.0).collect(),
                ..Default::default()
            },
        ),
        other => {
            return Err(Error::Config(format!(
                "field `preset`: unknown preset `{other}` (expected one of {})",
                PRESETS.join(", ")
            )))
        }
    };
    let cfg = ScenarioConfig {
        schema_version: SCHEMA_VERSION,
        scenario,
        grid,
        estimators: EstimatorId::STUDY.to_vec(),
        reps,
        seed,
    };
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::collections::HashSet;

    #[test]
    fn aggregate_examples() {
        let s = aggregate(&[0.5, 0.5], 0.5).unwrap();
        assert_eq!((s.bias, s.variance, s.mse), (0.0, 0.0, 0.0));
        let s = aggregate(&[0.4, 0.6], 0.5).unwrap();
        assert_abs_diff_eq!(s.bias, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.mse, 0.01, epsilon = 1e-15);
        assert!(aggregate(&[], 0.0).is_err());
    }

    #[test]
    fn aggregate_bookkeeping_identity() {
        let xs: Vec<f64> = (0..1000)
            .map(|i| ((i * 37 % 101) as f64 / 101.0).powi(3) - 0.2)
            .collect();
        let truth = 0.1;
        let s = aggregate(&xs, truth).unwrap();
        let k = xs.len() as f64;
        assert_abs_diff_eq!(s.mse, s.bias * s.bias + s.variance * (k - 1.0) / k, epsilon = 1e-12);
        // Jackknife equals the plain standard error of squared errors.
        let e2: Vec<f64> = xs.iter().map(|x| (x - truth).powi(2)).collect();
        let m = e2.iter().sum::<f64>() / k;
        let v = e2.iter().map(|e| (e - m).powi(2)).sum::<f64>() / (k - 1.0);
        assert_abs_diff_eq!(s.mc_se_mse, (v / k).sqrt(), epsilon = 1e-14);
    }

    #[test]
    fn derived_seeds_have_unique_stream_ids() {
        let master = SeedSpec::new(1);
        let mut seen = HashSet::with_capacity(10_000_000);
        for g in 0..100u64 {
            for r in 0..100_000u64 {
                let id = derive_seed(&master, (g % 6) + 1, g, r).unwrap().stream_id();
                assert!(seen.insert(id));
            }
        }
        assert_eq!(seen.len(), 10_000_000);
    }

    #[test]
    fn presets_expand_to_design_grids() {
        let t2 = preset("table2", 10, 1).unwrap();
        assert_eq!(t2.cells().len() * t2.estimators.len(), 2 * 4 * 13);
        let f4 = preset("fig4", 10, 1).unwrap();
        assert_eq!(f4.cells().len(), 56);
        assert_eq!(f4.grid.alpha[0], 0.02);
        assert_eq!(f4.grid.alpha[55], 2.0);
        assert!(f4.grid.alpha.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(preset("fig3", 10, 1).unwrap().cells().len(), 20);
        assert_eq!(preset("fig5", 10, 1).unwrap().cells().len(), 21);
        assert_eq!(preset("fig6", 10, 1).unwrap().cells().len(), 11);
        assert_eq!(preset("fig7", 10, 1).unwrap().cells().len(), 9);
        assert!(matches!(preset("fig9", 10, 1), Err(Error::Config(_))));
    }

    #[test]
    fn invalid_configs_name_the_field() {
        let mut cfg = preset("table2", 10, 1).unwrap();
        cfg.reps = 0;
        let msg = cfg.validate().unwrap_err().to_string();
        assert!(msg.contains("reps"), "{msg}");
        let mut cfg = preset("table2", 10, 1).unwrap();
        cfg.grid.nu.clear();
        assert!(cfg.validate().unwrap_err().to_string().contains("grid.nu"));
        let json = r#"{"schema_version":1,"scenario":"tnu_mse","grid":{"n":[10],"rho":[0],"nu":[1]},"estimators":["nope"],"reps":1,"seed":1}"#;
        assert!(matches!(ScenarioConfig::from_json(json), Err(Error::Config(_))));
    }

    #[test]
    fn failures_are_counted() {
        let cfg = ScenarioConfig {
            schema_version: SCHEMA_VERSION,
            scenario: Scenario::NormalBiasVar,
            grid: Grid {
                n: vec![5],
                rho: vec![0.5],
                ..Default::default()
            },
            estimators: vec![EstimatorId::Pearson, EstimatorId::Rmcd],
            reps: 20,
            seed: 3,
        };
        let res = run_scenario(&cfg, 1).unwrap();
        assert_eq!(res.rows[0].successes, 20);
        assert_eq!(res.rows[1].successes, 0);
        assert_eq!(res.rows[1].failures(), 20);
        assert!(res.rows[1].mean.is_nan());
    }

    #[test]
    fn sensitivity_is_zero_at_zero_shift() {
        let base = sample_normal2(&SymMat2::new(1.0, 0.5, 1.0), 100, &SeedSpec::new(5)).unwrap();
        for id in EstimatorId::STUDY {
            let curve = sensitivity_curve(&base, id, &[0.0, 5.0], &SeedSpec::new(6)).unwrap();
            assert_eq!(curve[0], Some(0.0), "{id}");
        }
    }

    use crate::numerics::SymMat2;
}
