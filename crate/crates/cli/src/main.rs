use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use qfrac_cli::{load_config, parse_max_terms, report_path, write_atomic, CliError, Command, Format, Invocation, Status, MAX_TERMS_ENV};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CommandArg {
    Eval,
    Solve,
    Verify,
    Ml,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

/// q-fractional operators, Cauchy problem solver and identity checks.
#[derive(Debug, Parser)]
#[command(name = "qfrac", version)]
struct Args {
    command: CommandArg,
    /// Run configuration (`key = value` lines).
    #[arg(long)]
    config: PathBuf,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Perturb one verify identity (harness self-test).
    #[arg(long, value_name = "IDENTITY")]
    inject_fault: Option<String>,
}

fn run(args: Args) -> Result<Status, CliError> {
    let command = match args.command {
        CommandArg::Eval => Command::Eval,
        CommandArg::Solve => Command::Solve,
        CommandArg::Verify => Command::Verify,
        CommandArg::Ml => Command::Ml,
    };
    let max_terms = parse_max_terms(std::env::var(MAX_TERMS_ENV).ok().as_deref())?;
    let invocation = Invocation {
        command,
        config: load_config(&args.config)?,
        format: args.format.map(|f| match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        }),
        max_terms,
        inject_fault: args.inject_fault,
    };
    let output = invocation.execute()?;
    match &args.out {
        Some(path) => {
            write_atomic(path, &output.primary)?;
            if let Some(report) = &output.report {
                write_atomic(&report_path(path), report)?;
            }
        }
        None => {
            let io = |e: std::io::Error| CliError::Io(format!("stdout: {e}"));
            std::io::stdout().write_all(output.primary.as_bytes()).map_err(io)?;
            if let Some(report) = &output.report {
                std::io::stderr().write_all(report.as_bytes()).map_err(io)?;
            }
        }
    }
    Ok(output.status)
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(args) {
        Ok(status) => {
            match &status {
                Status::Ok => {}
                Status::VerifyFailed(names) => eprintln!("qfrac: failing identities: {}", names.join(", ")),
                Status::NotConverged { iterations } => {
                    eprintln!("qfrac: not converged after {iterations} iterations; report written")
                }
            }
            ExitCode::from(status.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("qfrac: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
