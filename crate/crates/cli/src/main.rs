use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mhdvac::artifact::{error_json, json_bytes};
use mhdvac::scenario::{run_scenario, Kind, Overrides, ScenarioConfig};
use mhdvac::Error;
use serde_json::json;

/// Linearized plasma-vacuum interface scenarios.
///
/// Exit codes: 0 success, 1 invalid input, 2 numerical failure. Errors are
/// reported as one JSON object on stderr and, when the output directory is
/// known, as error.json inside it.
#[derive(Parser, Debug)]
#[command(name = "mhdvac", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the kind named in the config file.
    Run(Flags),
    /// Randomized symmetry, definiteness and spectral audit of the coefficient matrices.
    MatrixAudit(Flags),
    /// Frozen-coefficient growth rates over a range of wavenumbers.
    ModeScan(Flags),
    /// Time-dependent run with energy diagnostics.
    Simulate(Flags),
    /// Time-dependent run from zero data that evaluates the a priori estimate.
    #[command(name = "verify-54", alias = "verify")]
    Verify54(Flags),
    /// Manufactured-solution convergence study.
    Convergence(Flags),
}

#[derive(Args, Debug)]
struct Flags {
    /// Scenario file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output` from the file.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Grid refinement factor.
    #[arg(long, value_parser = ["1", "2", "4"])]
    refine: Option<String>,
    /// Surface-tension override.
    #[arg(long = "s", allow_negative_numbers = true)]
    sigma: Option<f64>,
}

impl Command {
    fn split(&self) -> (Option<Kind>, &Flags) {
        match self {
            Command::Run(f) => (None, f),
            Command::MatrixAudit(f) => (Some(Kind::MatrixAudit), f),
            Command::ModeScan(f) => (Some(Kind::ModeScan), f),
            Command::Simulate(f) => (Some(Kind::Simulate), f),
            Command::Verify54(f) => (Some(Kind::Verify54), f),
            Command::Convergence(f) => (Some(Kind::Convergence), f),
        }
    }
}

fn report_error(err: &Error, out: Option<&Path>) -> ExitCode {
    let code = err.exit_code();
    let v = error_json(err, code);
    eprintln!("{v}");
    if let Some(dir) = out {
        if let Ok(bytes) = json_bytes(&v) {
            let _ = std::fs::create_dir_all(dir).and_then(|_| std::fs::write(dir.join("error.json"), bytes));
        }
    }
    ExitCode::from(code as u8)
}

fn execute(kind: Option<Kind>, flags: &Flags, out: &mut Option<PathBuf>) -> Result<serde_json::Value, Error> {
    let overrides = Overrides {
        output: flags.out.as_ref().map(|p| p.to_string_lossy().into_owned()),
        seed: flags.seed,
        refine: flags.refine.as_deref().map(|r| r.parse().expect("restricted by clap")),
        sigma_tension: flags.sigma,
    };
    let cfg = ScenarioConfig::load(&flags.config, kind)?;
    *out = Some(PathBuf::from(overrides.output.clone().unwrap_or_else(|| cfg.output.clone())));
    let cfg = cfg.resolve(&overrides)?;
    let dir = PathBuf::from(&cfg.output);
    *out = Some(dir.clone());
    let art = run_scenario(&cfg)?;
    art.write_to(&dir)?;
    Ok(json!({
        "status": "ok",
        "kind": cfg.kind.name(),
        "output": cfg.output,
        "files": art.names(),
    }))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let err = Error::Usage(e.render().to_string().trim().to_string());
            return report_error(&err, None);
        }
    };
    let (kind, flags) = cli.command.split();
    let mut out = None;
    match execute(kind, flags, &mut out) {
        Ok(v) => {
            println!("{v}");
            ExitCode::SUCCESS
        }
        Err(e) => report_error(&e, out.as_deref()),
    }
}
