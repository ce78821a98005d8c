//! Command-line front end: configuration validation, simulation runs, scaling
//! sweeps, SRBM experiments, and stationary analysis, each emitting plot-ready
//! CSV/JSON plus a replayable run manifest.

mod manifest;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand, ValueEnum};

use crate::analysis::{
    bar_residuals, bar_table_csv, estimate_from_trajectory, performance_measures,
};
use crate::des::{simulate, Trajectory};
use crate::error::{Error, Result};
use crate::model::{NetworkConfig, NominalRates};
use crate::scaling::{
    diagnostics_to_csv, diffusion_comparison, fluid_limit_diagnostic, martingale_diagnostic,
    ScalingFamily,
};
use crate::srbm::{
    simulate_srbm, verify_reflection_geometry, verify_reflection_geometry_sampled, GeometryReport,
    SrbmParams, SrbmPath, EXHAUSTIVE_DIM_LIMIT,
};

pub use manifest::{sha256_hex, ExperimentManifest, OutputRecord, SCHEMA_VERSION};

#[derive(Parser, Debug)]
#[command(
    name = "bikeflow",
    version,
    about = "Simulation and heavy-traffic analysis of closed bike-sharing networks"
)]
pub struct Cli {
    /// Master seed (overrides the BIKEFLOW_SEED environment variable).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory (default: ./runs/<timestamp>).
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// Worker threads (default: machine parallelism).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub cmd: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check a network configuration; prints one line per violation.
    Validate { config: PathBuf },
    /// Run the discrete-event simulation and write the trajectory.
    Simulate {
        config: PathBuf,
        /// Simulated time horizon.
        #[arg(long)]
        horizon: f64,
    },
    /// Run a heavy-traffic scaling sweep and write the diagnostic table.
    Sweep {
        config: PathBuf,
        #[arg(long, value_enum)]
        mode: SweepMode,
        /// Target station drifts θ, comma separated (default: all zero).
        #[arg(long, value_delimiter = ',')]
        theta: Vec<f64>,
        /// Scales n of the sweep, comma separated, strictly increasing.
        #[arg(long, value_delimiter = ',', default_value = "1,16,256")]
        ns: Vec<u64>,
        #[arg(long, default_value_t = 20)]
        reps: u64,
        /// Horizon in limit time (each scale simulates to n·t_end).
        #[arg(long, default_value_t = 5.0)]
        t_end: f64,
        /// Euler step of the matched SRBM (diffusion mode).
        #[arg(long, default_value_t = 0.005)]
        dt: f64,
        /// Increment window s of the martingale test.
        #[arg(long, default_value_t = 1.0)]
        window: f64,
        /// Drift offset injected into the martingale null (for power checks).
        #[arg(long, default_value_t = 0.0)]
        drift_offset: f64,
    },
    /// Assemble (or load) SRBM parameters, verify the reflection geometry,
    /// and simulate one reflected path.
    Srbm {
        /// Network configuration to assemble parameters from.
        config: Option<PathBuf>,
        /// Pre-assembled parameter JSON (alternative to a config).
        #[arg(long, conflicts_with = "config")]
        params: Option<PathBuf>,
        #[arg(long, default_value_t = 10.0)]
        t_end: f64,
        #[arg(long, default_value_t = 0.001)]
        dt: f64,
        /// Vertices sampled when the dimension is too large to enumerate.
        #[arg(long, default_value_t = 4096)]
        geometry_samples: u64,
    },
    /// Estimate stationary performance measures from a long simulation run.
    Analyze {
        config: PathBuf,
        #[arg(long, default_value_t = 1e4)]
        horizon: f64,
        /// Burn-in discarded from the front (default: 10% of the horizon).
        #[arg(long)]
        burn_in: Option<f64>,
        /// Also evaluate BAR residuals on the matched SRBM.
        #[arg(long)]
        bar: bool,
        /// SRBM horizon for the BAR evaluation.
        #[arg(long, default_value_t = 5e3)]
        bar_t_end: f64,
        /// SRBM Euler step for the BAR evaluation.
        #[arg(long, default_value_t = 1e-3)]
        bar_dt: f64,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepMode {
    Fluid,
    Martingale,
    Diffusion,
}

impl SweepMode {
    fn name(self) -> &'static str {
        match self {
            SweepMode::Fluid => "fluid",
            SweepMode::Martingale => "martingale",
            SweepMode::Diffusion => "diffusion",
        }
    }
}

/// Runs the parsed command; returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    if let Some(t) = cli.threads {
        // Ignore the error if a pool already exists (e.g. under tests).
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            match &e {
                Error::InvalidConfig(violations) => {
                    for v in violations {
                        eprintln!("{v}");
                    }
                }
                other => eprintln!("error: {other}"),
            }
            e.exit_code()
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    let seed = resolve_seed(cli.seed);
    match cli.cmd {
        Command::Validate { config } => {
            load_config(&config)?;
            Ok(())
        }
        Command::Simulate { config, horizon } => {
            let cfg = load_config(&config)?;
            if !(horizon > 0.0) {
                return Err(Error::InvalidArgument(format!("horizon {horizon} must be > 0")));
            }
            let tr = simulate(&cfg, horizon, seed)?;
            let command = vec![
                "simulate".into(),
                config.display().to_string(),
                "--horizon".into(),
                horizon.to_string(),
                "--seed".into(),
                seed.to_string(),
            ];
            let mut man = ExperimentManifest::new(command, config_hash(&cfg)?, seed);
            let out_dir = prepare_out_dir(cli.out_dir)?;
            man.record(&out_dir, "trajectory.csv", &trajectory_csv(&tr))?;
            man.write(&out_dir)?;
            println!("{}", out_dir.display());
            Ok(())
        }
        Command::Sweep { config, mode, theta, ns, reps, t_end, dt, window, drift_offset } => {
            let cfg = load_config(&config)?;
            let theta = if theta.is_empty() { vec![0.0; cfg.n] } else { theta };
            let fam = ScalingFamily::new(cfg.clone(), theta.clone())?;
            let rows = match mode {
                SweepMode::Fluid => fluid_limit_diagnostic(&fam, &ns, t_end, reps, seed)?,
                SweepMode::Martingale => {
                    let mut all = Vec::new();
                    for &n in &ns {
                        all.extend(martingale_diagnostic(
                            &fam,
                            n,
                            t_end,
                            window,
                            reps,
                            seed,
                            drift_offset,
                        )?);
                    }
                    all
                }
                SweepMode::Diffusion => diffusion_comparison(&fam, &ns, t_end, reps, dt, seed)?,
            };
            let command = vec![
                "sweep".into(),
                config.display().to_string(),
                "--mode".into(),
                mode.name().into(),
                "--theta".into(),
                join_f64(&theta),
                "--ns".into(),
                ns.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(","),
                "--reps".into(),
                reps.to_string(),
                "--t-end".into(),
                t_end.to_string(),
                "--dt".into(),
                dt.to_string(),
                "--window".into(),
                window.to_string(),
                "--drift-offset".into(),
                drift_offset.to_string(),
                "--seed".into(),
                seed.to_string(),
            ];
            let mut man = ExperimentManifest::new(command, config_hash(&cfg)?, seed);
            let out_dir = prepare_out_dir(cli.out_dir)?;
            man.record(&out_dir, "diagnostics.csv", &diagnostics_to_csv(&rows))?;
            man.write(&out_dir)?;
            println!("{}", out_dir.display());
            Ok(())
        }
        Command::Srbm { config, params, t_end, dt, geometry_samples } => {
            if !(t_end > 0.0) || !(dt > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "t_end {t_end} and dt {dt} must be > 0"
                )));
            }
            let (p, hash, source) = match (&config, &params) {
                (Some(path), None) => {
                    let cfg = load_config(path)?;
                    let idx = cfg.index_map();
                    let rates = NominalRates::nominal(&cfg, &idx);
                    let p = SrbmParams::from_network(&cfg, &rates, &idx)?;
                    (p, config_hash(&cfg)?, path.display().to_string())
                }
                (None, Some(path)) => {
                    let value: serde_json::Value = serde_json::from_str(&fs::read_to_string(path)?)?;
                    let p = SrbmParams::from_json(&value)?;
                    let hash = sha256_hex(serde_json::to_string(&p.to_json())?.as_bytes());
                    (p, hash, path.display().to_string())
                }
                _ => {
                    return Err(Error::InvalidArgument(
                        "provide exactly one of a config path or --params".into(),
                    ))
                }
            };
            let report = if p.dim <= EXHAUSTIVE_DIM_LIMIT {
                verify_reflection_geometry(&p)?
            } else {
                verify_reflection_geometry_sampled(&p, geometry_samples, seed)?
            };
            if !report.passed() {
                eprintln!(
                    "warning: reflection geometry failed at {} of {} checked vertices",
                    report.failures.len(),
                    report.checked
                );
            }
            let path = simulate_srbm(&p, t_end, dt, seed)?;
            let mut command = vec!["srbm".into()];
            if params.is_some() {
                command.push("--params".into());
            }
            command.push(source);
            command.extend([
                "--t-end".into(),
                t_end.to_string(),
                "--dt".into(),
                dt.to_string(),
                "--geometry-samples".into(),
                geometry_samples.to_string(),
                "--seed".into(),
                seed.to_string(),
            ]);
            let mut man = ExperimentManifest::new(command, hash, seed);
            let out_dir = prepare_out_dir(cli.out_dir)?;
            let mut params_json = serde_json::to_string_pretty(&p.to_json())?;
            params_json.push('\n');
            man.record(&out_dir, "params.json", &params_json)?;
            man.record(&out_dir, "geometry.json", &geometry_json(&report)?)?;
            man.record(&out_dir, "path.csv", &srbm_path_csv(&path))?;
            man.write(&out_dir)?;
            println!("{}", out_dir.display());
            Ok(())
        }
        Command::Analyze { config, horizon, burn_in, bar, bar_t_end, bar_dt } => {
            let cfg = load_config(&config)?;
            if !(horizon > 0.0) {
                return Err(Error::InvalidArgument(format!("horizon {horizon} must be > 0")));
            }
            let burn_in = burn_in.unwrap_or(horizon / 10.0);
            if !(0.0..horizon).contains(&burn_in) {
                return Err(Error::InvalidArgument(format!(
                    "burn-in {burn_in} must lie in [0, horizon)"
                )));
            }
            let idx = cfg.index_map();
            let tr = simulate(&cfg, horizon, seed)?;
            let (est, boundary) = estimate_from_trajectory(&tr, burn_in)?;
            let mut report = performance_measures(&est, &boundary, &idx)?;
            let mut bar_csv = None;
            if bar {
                let rates = NominalRates::nominal(&cfg, &idx);
                let p = SrbmParams::from_network(&cfg, &rates, &idx)?;
                let rows =
                    bar_residuals(&p, bar_t_end, bar_dt, seed ^ 1, bar_t_end / 10.0, Vec::new())?;
                bar_csv = Some(bar_table_csv(&rows));
                report = report.with_bar_residuals(&rows);
            }
            let mut command = vec![
                "analyze".into(),
                config.display().to_string(),
                "--horizon".into(),
                horizon.to_string(),
                "--burn-in".into(),
                burn_in.to_string(),
            ];
            if bar {
                command.extend([
                    "--bar".into(),
                    "--bar-t-end".into(),
                    bar_t_end.to_string(),
                    "--bar-dt".into(),
                    bar_dt.to_string(),
                ]);
            }
            command.extend(["--seed".into(), seed.to_string()]);
            let mut man = ExperimentManifest::new(command, config_hash(&cfg)?, seed);
            let out_dir = prepare_out_dir(cli.out_dir)?;
            let mut json = report.to_json()?;
            json.push('\n');
            man.record(&out_dir, "report.json", &json)?;
            man.record(&out_dir, "report.csv", &report.to_csv())?;
            if let Some(csv) = bar_csv {
                man.record(&out_dir, "bar.csv", &csv)?;
            }
            man.write(&out_dir)?;
            println!("{}", out_dir.display());
            Ok(())
        }
    }
}

fn resolve_seed(flag: Option<u64>) -> u64 {
    flag.or_else(|| std::env::var("BIKEFLOW_SEED").ok().and_then(|s| s.parse().ok())).unwrap_or(0)
}

fn load_config(path: &Path) -> Result<NetworkConfig> {
    let cfg: NetworkConfig = serde_json::from_str(&fs::read_to_string(path)?)?;
    cfg.validated()?;
    Ok(cfg)
}

/// Digest of the canonical (serde) JSON form of the validated configuration.
fn config_hash(cfg: &NetworkConfig) -> Result<String> {
    Ok(sha256_hex(serde_json::to_string(cfg)?.as_bytes()))
}

fn prepare_out_dir(flag: Option<PathBuf>) -> Result<PathBuf> {
    let dir = flag.unwrap_or_else(|| {
        let now = SystemTime::now().duration_since(UNIX_EPOCH).unwrap_or_default();
        PathBuf::from("runs").join(format!("{}-{:09}", now.as_secs(), now.subsec_nanos()))
    });
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn join_f64(values: &[f64]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

/// Piecewise-constant queue path, one row per coordinate per epoch
/// (including time 0 and the horizon).
fn trajectory_csv(tr: &Trajectory) -> String {
    let mut out = String::from("time,coordinate,value,kind\n");
    tr.replay(|s| {
        for (c, &q) in s.q.iter().enumerate() {
            out.push_str(&format!("{:.16e},{},{},q\n", s.t, c, q));
        }
    });
    out
}

fn srbm_path_csv(path: &SrbmPath) -> String {
    let mut out = String::from("time,coordinate,value,kind\n");
    for (k, &t) in path.times.iter().enumerate() {
        for (kind, series) in
            [("state", &path.states), ("y_lower", &path.y_lower), ("y_upper", &path.y_upper)]
        {
            for (c, &v) in series[k].iter().enumerate() {
                out.push_str(&format!("{t:.16e},{c},{v:.16e},{kind}\n"));
            }
        }
    }
    out
}

fn geometry_json(report: &GeometryReport) -> Result<String> {
    let value = serde_json::json!({
        "checked": report.checked,
        "skipped": report.skipped,
        "passed": report.passed(),
        "failures": report.failures.iter().map(|f| f.label()).collect::<Vec<_>>(),
    });
    let mut body = serde_json::to_string_pretty(&value)?;
    body.push('\n');
    Ok(body)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::DistributionSpec;

    #[test]
    fn seed_resolution_order() {
        // The flag wins regardless of the environment.
        assert_eq!(resolve_seed(Some(9)), 9);
    }

    #[test]
    fn trajectory_csv_layout() {
        let cfg = NetworkConfig::symmetric(
            2,
            3,
            2,
            DistributionSpec::exponential(1.0),
            DistributionSpec::exponential(1.0),
        );
        let tr = simulate(&cfg, 5.0, 1).unwrap();
        let csv = trajectory_csv(&tr);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("time,coordinate,value,kind"));
        let first = lines.next().unwrap();
        assert!(first.starts_with("0.0000000000000000e0,0,2,q"), "{first}");
        // One row per coordinate per visited state.
        let body = csv.lines().count() - 1;
        assert_eq!(body % tr.idx.dim(), 0);
    }

    #[test]
    fn command_reconstruction_is_parseable() {
        let cli = Cli::try_parse_from([
            "bikeflow", "sweep", "cfg.json", "--mode", "fluid", "--ns", "1,4", "--reps", "3",
        ])
        .unwrap();
        match cli.cmd {
            Command::Sweep { mode, ns, reps, theta, .. } => {
                assert_eq!(mode, SweepMode::Fluid);
                assert_eq!(ns, vec![1, 4]);
                assert_eq!(reps, 3);
                assert!(theta.is_empty());
            }
            other => panic!("parsed {other:?}"),
        }
    }
}
