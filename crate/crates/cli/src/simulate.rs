use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::Args;
use serde::{Deserialize, Serialize};
use signcorr::simulation::{preset, run_scenario, ScenarioConfig, DEFAULT_REPS};
use signcorr::EstimatorId;

use crate::error::{CliError, CliResult, EXIT_OK, EXIT_PARTIAL, EXIT_TOTAL_FAILURE};

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Named design: table2, fig3, fig4, fig5, fig6 or fig7.
    #[arg(long, conflicts_with_all = ["config", "manifest"])]
    pub preset: Option<String>,
    /// JSON scenario configuration.
    #[arg(long, conflicts_with = "manifest")]
    pub config: Option<PathBuf>,
    /// Re-run the configuration recorded in a manifest.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Replications per grid point; overrides the configuration.
    #[arg(long)]
    pub reps: Option<usize>,
    /// Master seed; overrides the configuration.
    #[arg(long, env = "SIGNCORR_SEED")]
    pub seed: Option<u64>,
    /// Comma-separated estimator ids or `all`; overrides the configuration.
    #[arg(long)]
    pub estimators: Option<String>,
    /// Worker threads (default: logical cores).
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    /// Base name of the output files (default: preset or scenario name).
    #[arg(long)]
    pub name: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CellFailures {
    pub estimator: EstimatorId,
    pub param_value: f64,
    pub rho: f64,
    pub n: usize,
    pub failures: usize,
}

/// Written next to every simulation output.
#[derive(Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: Vec<String>,
    /// Base name of the output files.
    pub name: String,
    pub config: ScenarioConfig,
    pub seed: u64,
    pub software_version: String,
    pub started_unix_seconds: u64,
    pub wall_clock_seconds: f64,
    pub workers: usize,
    pub outputs: Vec<PathBuf>,
    pub failures: Vec<CellFailures>,
}

fn read_to_string(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))
}

fn resolve(args: &SimulateArgs) -> CliResult<(ScenarioConfig, String)> {
    let (mut cfg, name) = if let Some(p) = &args.preset {
        (preset(p, DEFAULT_REPS, 1)?, p.clone())
    } else if let Some(path) = &args.config {
        let cfg = ScenarioConfig::from_json(&read_to_string(path)?)?;
        let name = cfg.scenario.name().to_string();
        (cfg, name)
    } else if let Some(path) = &args.manifest {
        let m: RunManifest = serde_json::from_str(&read_to_string(path)?)
            .map_err(|e| CliError::Config(format!("invalid manifest {}: {e}", path.display())))?;
        (m.config, m.name)
    } else {
        return Err(CliError::Config(
            "one of --preset, --config or --manifest is required".into(),
        ));
    };
    if let Some(r) = args.reps {
        cfg.reps = r;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(e) = &args.estimators {
        cfg.estimators = EstimatorId::parse_list(e)?;
    }
    cfg.validate()?;
    Ok((cfg, args.name.clone().unwrap_or(name)))
}

pub fn run(args: &SimulateArgs) -> CliResult<u8> {
    let (cfg, name) = resolve(args)?;
    let workers = match args.workers {
        Some(0) => return Err(CliError::Config("field `workers`: must be at least 1".into())),
        Some(w) => w,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    let started = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let clock = Instant::now();
    let result = run_scenario(&cfg, workers)?;
    let elapsed = clock.elapsed().as_secs_f64();

    fs::create_dir_all(&args.out_dir)?;
    let csv_path = args.out_dir.join(format!("{name}.csv"));
    let json_path = args.out_dir.join(format!("{name}.json"));
    let manifest_path = args.out_dir.join(format!("{name}.manifest.json"));
    result.write_csv(BufWriter::new(File::create(&csv_path)?))?;
    fs::write(&json_path, result.to_json()?)?;

    let failures: Vec<CellFailures> = result
        .rows
        .iter()
        .filter(|r| r.failures() > 0)
        .map(|r| CellFailures {
            estimator: r.estimator,
            param_value: r.param_value,
            rho: r.rho,
            n: r.n,
            failures: r.failures(),
        })
        .collect();
    let manifest = RunManifest {
        command: std::env::args().collect(),
        name,
        seed: cfg.seed,
        config: cfg,
        software_version: env!("CARGO_PKG_VERSION").to_string(),
        started_unix_seconds: started,
        wall_clock_seconds: elapsed,
        workers,
        outputs: vec![csv_path.clone(), json_path],
        failures,
    };
    fs::write(
        &manifest_path,
        serde_json::to_string_pretty(&manifest).map_err(signcorr::Error::from)?,
    )?;
    eprintln!(
        "wrote {} rows to {} in {elapsed:.1} s",
        result.rows.len(),
        csv_path.display()
    );

    let total = result.rows.iter().filter(|r| r.successes == 0).count();
    Ok(if total == result.rows.len() {
        EXIT_TOTAL_FAILURE
    } else if manifest.failures.is_empty() {
        EXIT_OK
    } else {
        for f in &manifest.failures {
            eprintln!(
                "{} at {}={} (rho={}, n={}): {} failed replications",
                f.estimator,
                manifest.config.scenario.param_name(),
                f.param_value,
                f.rho,
                f.n,
                f.failures
            );
        }
        EXIT_PARTIAL
    })
}
