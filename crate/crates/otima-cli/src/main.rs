//! `otima` binary: parses the command line, loads the configuration, runs
//! one scan (or the material report / verification suite), and maps every
//! failure class onto a stable exit code.

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use otima::verify::{run_fast, run_full, Hooks};
use otima_cli::config::{MaterialInput, Model, RawConfig, ScanConfig, VerifyConfig};
use otima_cli::report::material_report;
use otima_cli::scan::{run_delay_scan, run_power_scan, run_signal_scan};
use otima_cli::{exit_code_for, verify_exit_code};

/// Pulsed three-grating matter-wave interferometer simulator.
///
/// Exit codes: 0 success, 2 configuration error, 3 numerical
/// non-convergence or degenerate operating point, 4 verification mismatch.
#[derive(Parser)]
#[command(name = "otima", version, about, long_about = None)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Scan the pulse separation (or its detuning) and tabulate fringe
    /// visibilities per model.
    ScanDelay(ScanArgs),
    /// Scan one pulse's mean absorbed photon number and tabulate visibility
    /// and transmission per detection mode.
    ScanPower(ScanArgs),
    /// Tabulate the detection signal across one grating period.
    Signal(ScanArgs),
    /// Print derived optical response and planning quantities for the
    /// configured particle.
    Material(MaterialArgs),
    /// Cross-check the closed forms against brute-force quadrature (and,
    /// at the full level, Monte Carlo) references.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct ScanArgs {
    /// Scan configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Write the CSV here (overrides the configured output path; stdout
    /// when neither is set).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed recorded in the output header and used by any sampled stage.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Restrict the run to a single model column set.
    #[arg(long, value_name = "quantum|classical|decohered")]
    model: Option<Model>,
}

#[derive(Args)]
struct MaterialArgs {
    /// Configuration file naming the material, mass, and laser.
    #[arg(long)]
    config: PathBuf,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Optional configuration file with a `[verify]` section selecting the
    /// level (fast | full) and the Monte Carlo sample count.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Write the check table here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for the Monte Carlo reference at the full level.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.cmd {
        Cmd::ScanDelay(a) => scan_cmd(&a, run_delay_scan),
        Cmd::ScanPower(a) => scan_cmd(&a, run_power_scan),
        Cmd::Signal(a) => scan_cmd(&a, run_signal_scan),
        Cmd::Material(a) => material_cmd(&a),
        Cmd::Verify(a) => verify_cmd(&a),
    };
    ExitCode::from(code)
}

/// Writes `text` to `path`, or to stdout when no path is given.
fn emit(path: Option<&Path>, text: &str) -> otima::Result<()> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
        }
    }
    Ok(())
}

fn fail(err: &otima::Error) -> u8 {
    eprintln!("error: {err}");
    exit_code_for(err) as u8
}

fn scan_cmd(args: &ScanArgs, run: fn(&ScanConfig, u64) -> otima::Result<String>) -> u8 {
    let attempt = (|| {
        let mut cfg = ScanConfig::load(&args.config)?;
        if let Some(model) = args.model {
            cfg.restrict_model(model);
        }
        if let Some(out) = &args.out {
            cfg.out_path = Some(out.clone());
        }
        let csv = run(&cfg, args.seed)?;
        emit(cfg.out_path.as_deref(), &csv)
    })();
    match attempt {
        Ok(()) => 0,
        Err(e) => fail(&e),
    }
}

fn material_cmd(args: &MaterialArgs) -> u8 {
    let attempt = MaterialInput::load(&args.config)
        .and_then(|input| material_report(&input))
        .and_then(|text| emit(args.out.as_deref(), &text));
    match attempt {
        Ok(()) => 0,
        Err(e) => fail(&e),
    }
}

fn verify_cmd(args: &VerifyArgs) -> u8 {
    let settings = match &args.config {
        Some(path) => match RawConfig::load(path).and_then(|raw| VerifyConfig::from_raw(&raw)) {
            Ok(v) => v,
            Err(e) => return fail(&e),
        },
        None => VerifyConfig::default(),
    };
    let hooks = Hooks::default();
    let report = if settings.full {
        run_full(&hooks, settings.samples, args.seed)
    } else {
        run_fast(&hooks)
    };
    if let Err(e) = emit(args.out.as_deref(), &report.to_string()) {
        return fail(&e);
    }
    let code = verify_exit_code(&report);
    match code {
        0 => {}
        4 => eprintln!(
            "error: verification mismatch — a closed form disagrees with its brute-force reference"
        ),
        _ => eprintln!(
            "error: verification incomplete — some checks did not converge (no mismatch found)"
        ),
    }
    code as u8
}
