use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;

use clap::Args;
use serde::Serialize;
use signcorr::distributions::SeedSpec;
use signcorr::highdim::{pairwise_corr_matrix, psd_repair};
use signcorr::sscm::sscorr_ci;
use signcorr::{estimate, CorrEstimate, EstimatorId};

use crate::error::{CliError, CliResult, EXIT_OK, EXIT_PARTIAL, EXIT_TOTAL_FAILURE};
use crate::input::read_matrix;

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// Numeric CSV with one observation per row.
    pub input: PathBuf,
    /// First row holds column names.
    #[arg(long)]
    pub header: bool,
    /// Comma-separated estimator ids, or `all` for the thirteen study
    /// estimators.
    #[arg(long, default_value = "spatial_sign")]
    pub estimators: String,
    /// Confidence level of spatial sign intervals.
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    #[arg(long, env = "SIGNCORR_SEED", default_value_t = 1)]
    pub seed: u64,
    /// Write results here instead of stdout. For more than two columns a
    /// JSON sidecar is written next to it.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Output format for bivariate input.
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    /// Repair the pairwise matrix to positive semidefinite.
    #[arg(long)]
    pub repair: bool,
    /// Serial pair evaluation.
    #[arg(long)]
    pub serial: bool,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Serialize)]
struct Row {
    estimator: EstimatorId,
    value: Option<f64>,
    ci_low: Option<f64>,
    ci_high: Option<f64>,
    n_used: Option<usize>,
    error: Option<String>,
}

fn sink(path: &Option<PathBuf>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(File::create(p)?),
        None => Box::new(io::stdout().lock()),
    })
}

fn with_ci(est: CorrEstimate, n: usize, level: f64) -> signcorr::Result<CorrEstimate> {
    match est.estimator {
        EstimatorId::SpatialSign => sscorr_ci(&est, n, level, false),
        EstimatorId::SpatialSignTwoStage | EstimatorId::SpatialSignTwoStageMad => sscorr_ci(&est, n, level, true),
        _ => Ok(est),
    }
}

pub fn run(args: &EstimateArgs) -> CliResult<u8> {
    let ids = EstimatorId::parse_list(&args.estimators)?;
    if !(args.level > 0.0 && args.level < 1.0) {
        return Err(CliError::Config("field `level`: must lie in (0, 1)".into()));
    }
    let (data, names) = read_matrix(&args.input, args.header)?;
    let seed = SeedSpec::new(args.seed);
    if data.ncols() > 2 {
        return run_matrix(args, &ids, &data, names, &seed);
    }

    let rows: Vec<Row> = ids
        .iter()
        .map(
            |&id| match estimate(id, &data, &seed).and_then(|e| with_ci(e, data.nrows(), args.level)) {
                Ok(e) => Row {
                    estimator: id,
                    value: Some(e.value),
                    ci_low: e.ci.map(|c| c.0),
                    ci_high: e.ci.map(|c| c.1),
                    n_used: Some(e.n_used),
                    error: None,
                },
                Err(err) => Row {
                    estimator: id,
                    value: None,
                    ci_low: None,
                    ci_high: None,
                    n_used: None,
                    error: Some(err.to_string()),
                },
            },
        )
        .collect();
    let failed = rows.iter().filter(|r| r.error.is_some()).count();
    let mut out = sink(&args.output)?;
    match args.format {
        Format::Csv => {
            let mut wr = csv::Writer::from_writer(&mut out);
            for r in &rows {
                wr.serialize(r).map_err(signcorr::Error::from)?;
            }
            wr.flush()?;
        }
        Format::Json => {
            serde_json::to_writer_pretty(&mut out, &rows).map_err(signcorr::Error::from)?;
            writeln!(out)?;
        }
    }
    for r in rows.iter().filter(|r| r.error.is_some()) {
        eprintln!("{}: {}", r.estimator, r.error.as_deref().unwrap_or_default());
    }
    Ok(match failed {
        0 => EXIT_OK,
        f if f == rows.len() => EXIT_TOTAL_FAILURE,
        _ => EXIT_PARTIAL,
    })
}

fn run_matrix(
    args: &EstimateArgs,
    ids: &[EstimatorId],
    data: &signcorr::DataMatrix,
    names: Option<Vec<String>>,
    seed: &SeedSpec,
) -> CliResult<u8> {
    let [id] = ids else {
        return Err(CliError::Config(
            "field `estimators`: input with more than two columns takes exactly one estimator".into(),
        ));
    };
    let mut m = pairwise_corr_matrix(data, *id, seed, !args.serial)?;
    if args.repair {
        m = psd_repair(&m);
    }
    m.write_csv(sink(&args.output)?, names.as_deref())?;
    if let Some(path) = &args.output {
        let mut side = path.clone().into_os_string();
        side.push(".json");
        std::fs::write(side, m.sidecar_json()?)?;
    }
    for w in &m.warnings {
        eprintln!("pair ({}, {}) set to 0: {}", w.i, w.j, w.message);
    }
    Ok(match m.warnings.len() {
        0 => EXIT_OK,
        k if k == m.pairs_evaluated => EXIT_TOTAL_FAILURE,
        _ => EXIT_PARTIAL,
    })
}
