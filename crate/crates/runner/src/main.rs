use std::path::{Path, PathBuf};
use std::process::ExitCode;

use cini_runner::commands::{cmd_decohere, cmd_simulate, cmd_sweep};
use cini_runner::config::{load_config, RunConfig};
use cini_runner::engine::Fault;
use cini_runner::output::{fmt_f64, OutputDir};
use cini_runner::verify::{run_verify, VerifyOptions};
use cini_runner::{RunError, RunResult};
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "cini", version, about = "Generalized Cini model: invariant-based solution and checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve every level, compare with direct propagation, write CSVs.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; defaults to the config's output_dir.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Decoherence factor F_kl by direct, closed-form and special-case routes.
    Decohere {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        l: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// One summary row per value of an axis (two_j, j, or a JSON pointer).
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        axis: String,
        /// Comma-separated values.
        #[arg(long, allow_hyphen_values = true)]
        values: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the verification suite on the built-in configs.
    Verify {
        /// Use this config for the residual and fidelity checks.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Write report.json and the closed-form discrepancy table here.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print the report as JSON.
        #[arg(long)]
        json: bool,
        #[arg(long, value_enum, hide = true)]
        inject_fault: Option<FaultArg>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FaultArg {
    FlipAuxSign,
}

fn out_dir(out: Option<PathBuf>, cfg: &RunConfig) -> RunResult<PathBuf> {
    out.or_else(|| cfg.output_dir.clone())
        .ok_or_else(|| RunError::Usage("no --out given and the config has no output_dir".into()))
}

fn verify(config: Option<&Path>, out: Option<&Path>, json: bool, fault: Fault) -> RunResult<String> {
    let config = config.map(load_config).transpose()?;
    let report = run_verify(&VerifyOptions { fault, config })?;
    let mut text = String::new();
    if json {
        text = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
    } else {
        for c in &report.checks {
            text.push_str(&c.line());
            text.push('\n');
        }
        text.push_str("closed-form discrepancy (beta_bound, samples, max_abs, max_ratio_to_cube):\n");
        for r in &report.closed_form_discrepancy {
            text.push_str(&format!(
                "  {} {} {} {}\n",
                r.beta_bound,
                r.samples,
                fmt_f64(r.max_abs_discrepancy),
                fmt_f64(r.max_ratio_to_cube)
            ));
        }
    }
    if let Some(dir) = out {
        let mut o = OutputDir::create(dir)?;
        o.write_csv(
            "closed_form_discrepancy.csv",
            &["beta_bound", "samples", "max_abs_discrepancy", "max_ratio_to_cube"],
            report.closed_form_discrepancy.iter().map(|r| {
                vec![
                    fmt_f64(r.beta_bound),
                    r.samples.to_string(),
                    fmt_f64(r.max_abs_discrepancy),
                    fmt_f64(r.max_ratio_to_cube),
                ]
            }),
        )?;
        o.write_text(
            "report.json",
            &(serde_json::to_string_pretty(&report).expect("report serializes") + "\n"),
        )?;
        o.write_metadata("verify", serde_json::json!({ "passed": report.passed() }))?;
    }
    if report.passed() {
        if !json {
            text.push_str(&format!("verify: all {} checks passed\n", report.checks.len()));
        }
        Ok(text)
    } else {
        print!("{text}");
        Err(RunError::Verification(report.failed_names()))
    }
}

fn run(cli: Cli) -> RunResult<String> {
    match cli.command {
        Command::Simulate { config, out } => {
            let cfg = load_config(&config)?;
            let dir = out_dir(out, &cfg)?;
            cmd_simulate(cfg, &dir)
        }
        Command::Decohere { config, k, l, out } => {
            let cfg = load_config(&config)?;
            let dir = out_dir(out, &cfg)?;
            cmd_decohere(cfg, k, l, &dir)
        }
        Command::Sweep { config, axis, values, out } => {
            let cfg = load_config(&config)?;
            let dir = out_dir(out, &cfg)?;
            cmd_sweep(cfg, &axis, &values, &dir)
        }
        Command::Verify { config, out, json, inject_fault } => {
            let fault = match inject_fault {
                Some(FaultArg::FlipAuxSign) => Fault::FlipAuxSign,
                None => Fault::None,
            };
            verify(config.as_deref(), out.as_deref(), json, fault)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
