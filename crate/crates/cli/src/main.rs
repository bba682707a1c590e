//! `prmimo`: runs a capacity Monte Carlo campaign and writes `capacity.csv`,
//! `run.meta` and optionally `plot.script` into the output directory.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use prmimo::config::RunConfig;
use prmimo::eval::run_campaign;
use prmimo::report::{capacity_csv, run_meta, CSV_FILE, META_FILE, PLOT_FILE, PLOT_SCRIPT};

const USAGE_ERROR: u8 = 1;
const RUNTIME_ERROR: u8 = 2;

/// Capacity of pattern-reconfigurable MIMO versus SNR.
///
/// Values given on the command line override those read from --config.
#[derive(Debug, Parser)]
#[command(name = "prmimo", version)]
struct Cli {
    /// Transmit antennas
    #[arg(long, value_name = "N")]
    nt: Option<String>,
    /// Receive antennas (at most --nt)
    #[arg(long, value_name = "N")]
    nr: Option<String>,
    /// Scattering clusters
    #[arg(long, value_name = "N")]
    ncl: Option<String>,
    /// Rays per cluster
    #[arg(long, value_name = "N")]
    nray: Option<String>,
    /// Angular spread of rays around their cluster mean, in degrees
    #[arg(long, value_name = "DEG", allow_hyphen_values = true)]
    xi_deg: Option<String>,
    /// Element spacing in wavelengths, both arrays
    #[arg(long, value_name = "D")]
    spacing: Option<String>,
    /// SNR grid in dB
    #[arg(long, value_name = "START:STEP:STOP", allow_hyphen_values = true)]
    snr_db: Option<String>,
    /// Monte Carlo trials
    #[arg(long, value_name = "N")]
    trials: Option<String>,
    /// Master seed
    #[arg(long, value_name = "SEED")]
    seed: Option<String>,
    /// Cluster power profile
    #[arg(long, value_name = "good|ill")]
    condition: Option<String>,
    /// Comma-separated subset of ideal, pattern, physical
    #[arg(long, value_name = "LIST")]
    schemes: Option<String>,
    /// Fall back to the unmodified pattern whenever the designed one loses capacity
    #[arg(long)]
    safeguard: bool,
    /// Keep the closed-form power scaling as is instead of meeting the power budget exactly
    #[arg(long)]
    no_renormalize: bool,
    /// Worker threads (0 = one per CPU)
    #[arg(long, value_name = "N")]
    workers: Option<String>,
    /// Output directory
    #[arg(long, value_name = "DIR")]
    out: Option<String>,
    /// key=value configuration file
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Also write a Python plotting script next to the CSV
    #[arg(long)]
    emit_plot: bool,
    /// Print the resolved configuration and exit
    #[arg(long)]
    print_config: bool,
}

impl Cli {
    fn overrides(&self) -> Vec<(&'static str, String)> {
        let values = [
            ("nt", &self.nt),
            ("nr", &self.nr),
            ("ncl", &self.ncl),
            ("nray", &self.nray),
            ("xi-deg", &self.xi_deg),
            ("spacing", &self.spacing),
            ("snr-db", &self.snr_db),
            ("trials", &self.trials),
            ("seed", &self.seed),
            ("condition", &self.condition),
            ("schemes", &self.schemes),
            ("workers", &self.workers),
            ("out", &self.out),
        ];
        let mut out: Vec<_> = values.into_iter().filter_map(|(k, v)| v.clone().map(|v| (k, v))).collect();
        if self.safeguard {
            out.push(("safeguard", "true".into()));
        }
        if self.no_renormalize {
            out.push(("renormalize", "false".into()));
        }
        if self.emit_plot {
            out.push(("emit-plot", "true".into()));
        }
        out
    }
}

fn resolve(cli: &Cli) -> Result<RunConfig, String> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &cli.config {
        let text = fs::read_to_string(path)
            .map_err(|e| format!("cannot read config file {}: {e}", path.display()))?;
        cfg.apply_text(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    }
    for (key, value) in cli.overrides() {
        cfg.set(key, &value).map_err(|e| e.to_string())?;
    }
    cfg.scenario().map_err(|e| e.to_string())?;
    Ok(cfg)
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, String> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| format!("cannot write {}: {e}", path.display()))?;
    Ok(path)
}

#[cfg(unix)]
fn make_executable(path: &Path) -> Result<(), String> {
    use std::os::unix::fs::PermissionsExt;
    fs::set_permissions(path, fs::Permissions::from_mode(0o755))
        .map_err(|e| format!("cannot chmod {}: {e}", path.display()))
}

#[cfg(not(unix))]
fn make_executable(_: &Path) -> Result<(), String> {
    Ok(())
}

fn run(cfg: &RunConfig) -> Result<(), String> {
    let scenario = cfg.scenario().map_err(|e| e.to_string())?;
    let dir = &cfg.output_dir;
    fs::create_dir_all(dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))?;

    let report = run_campaign(&scenario, cfg.workers).map_err(|e| e.to_string())?;
    write(dir, CSV_FILE, &capacity_csv(&report.curves))?;
    write(dir, META_FILE, &run_meta(cfg, &report))?;
    if cfg.emit_plot {
        let script = write(dir, PLOT_FILE, PLOT_SCRIPT)?;
        make_executable(&script)?;
    }
    if !report.failures.is_empty() {
        eprintln!("prmimo: {} of {} trials failed and were excluded", report.failures.len(), cfg.trials);
    }
    eprintln!("prmimo: wrote {}", dir.join(CSV_FILE).display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(USAGE_ERROR),
            };
        }
    };
    let cfg = match resolve(&cli) {
        Ok(cfg) => cfg,
        Err(msg) => {
            eprintln!("prmimo: {msg}");
            return ExitCode::from(USAGE_ERROR);
        }
    };
    if cli.print_config {
        for (k, v) in cfg.to_key_values() {
            println!("{k}={v}");
        }
        return ExitCode::SUCCESS;
    }
    match run(&cfg) {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("prmimo: {msg}");
            ExitCode::from(RUNTIME_ERROR)
        }
    }
}
