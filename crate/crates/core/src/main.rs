use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use ribbon::job::{exit_code, parse_field, run_text, Emit, Overrides};
use ribbon::{Error, FieldSpec};

/// Run a job document (JSON) and print its report.
#[derive(Debug, Parser)]
#[command(name = "ribbon", version, about)]
struct Cli {
    /// Job file; reads stdin when absent or "-"
    job: Option<PathBuf>,
    /// Coefficient field: a prime such as 32003, or "rationals"
    #[arg(long, value_parser = parse_field_arg)]
    field: Option<FieldSpec>,
    /// Working precision p (the ring is k[x,z]/(x^p, z^n))
    #[arg(long)]
    precision: Option<usize>,
    /// Seed for randomized constructions
    #[arg(long)]
    seed: Option<u64>,
    /// Output format
    #[arg(long, value_enum)]
    emit: Option<Emit>,
}

fn parse_field_arg(s: &str) -> Result<FieldSpec, String> {
    parse_field(s).map_err(|e| e.to_string())
}

fn read_input(path: Option<&PathBuf>) -> Result<String, Error> {
    let mut text = String::new();
    let res = match path {
        Some(p) if p.as_os_str() != "-" => std::fs::read_to_string(p).map(|t| text = t),
        _ => std::io::stdin().read_to_string(&mut text).map(|_| ()),
    };
    res.map_err(|e| Error::Invalid(format!("reading job: {e}")))?;
    Ok(text)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let overrides = Overrides {
        field: cli.field,
        precision: cli.precision,
        seed: cli.seed,
        emit: cli.emit,
    };
    match read_input(cli.job.as_ref()).and_then(|t| run_text(&t, &overrides)) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("ribbon: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
