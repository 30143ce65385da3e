mod commands;
mod error;
mod input;
mod output;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use commands::{Ctx, Format, Outcome};
use error::{CliError, EXIT_ERROR};
use output::{to_json, Envelope, RunEcho, TOOL, VERSION};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Command {
    Analyze,
    Melnikov,
    Branch,
    Simulate,
    Certify,
    Lift,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Analyze => "analyze",
            Command::Melnikov => "melnikov",
            Command::Branch => "branch",
            Command::Simulate => "simulate",
            Command::Certify => "certify",
            Command::Lift => "lift",
        }
    }

    fn default_format(self) -> Format {
        match self {
            Command::Melnikov | Command::Simulate => Format::Csv,
            _ => Format::Json,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

fn positive(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{v} is not a positive number"))
    }
}

fn finite(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{v} is not finite"))
    }
}

/// Hopf-Zero torus toolkit: criteria, averaging, Poincaré maps, torus certificates and degree lifts.
#[derive(Debug, Parser)]
#[command(name = "torusforge", version)]
pub struct Args {
    #[arg(value_enum)]
    command: Command,
    /// JSON input document.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_parser = finite, allow_hyphen_values = true)]
    mu: Option<f64>,
    #[arg(long, value_parser = finite, allow_hyphen_values = true)]
    eps: Option<f64>,
    /// Melnikov grid side, or number of torus seeds for `certify`.
    #[arg(long)]
    grid: Option<usize>,
    /// Relative integrator tolerance; the absolute one is set to 1e-2 of it.
    #[arg(long, value_parser = positive)]
    tol: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Directory for report and data files; without it the primary output goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Use the family (0, 0, mu*z + beta*eps) with beta taken from the criteria.
    #[arg(long)]
    simple: bool,
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("TORUSFORGE_THREADS") else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Schema(format!("TORUSFORGE_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Schema(format!("thread pool: {e}")))
}

fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> Result<(), CliError> {
    let path = dir.join(name);
    fs::write(&path, bytes).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn stdout(bytes: &[u8]) -> Result<(), CliError> {
    let mut out = std::io::stdout().lock();
    match out.write_all(bytes).and_then(|_| out.flush()) {
        // a closed pipe (e.g. `| head`) is the reader's choice, not a failure
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(CliError::Io {
            path: "<stdout>".into(),
            source: e,
        }),
        _ => Ok(()),
    }
}

fn deliver(args: &Args, command: Command, format: Format, outcome: &Outcome, ctx: &Ctx) -> Result<(), CliError> {
    let Some(dir) = &args.out else {
        return match (&outcome.csv, format) {
            (Some(csv), Format::Csv) => stdout(csv),
            _ => stdout(&outcome.report),
        };
    };
    fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    let name = command.name();
    let mut artifacts = vec![format!("{name}.json")];
    write_file(dir, &artifacts[0], &outcome.report)?;
    if let Some(csv) = &outcome.csv {
        artifacts.push(format!("{name}.csv"));
        write_file(dir, &artifacts[1], csv)?;
    }
    for (file, bytes) in &outcome.extra {
        write_file(dir, file, bytes)?;
        artifacts.push(file.clone());
    }
    let summary = Envelope::<()> {
        tool: TOOL,
        version: VERSION,
        command: name,
        input_sha256: Some(ctx.sha256),
        run: ctx.echo,
        artifacts: Some(artifacts),
        report: None,
        error: None,
    };
    stdout(&to_json(&summary))
}

fn run(args: &Args, echo: &RunEcho, sha: &mut Option<String>) -> Result<i32, CliError> {
    configure_threads()?;
    let bytes = fs::read(&args.input).map_err(|source| CliError::Io {
        path: args.input.display().to_string(),
        source,
    })?;
    let loaded = input::parse_input(&bytes)?;
    *sha = Some(loaded.sha256.clone());
    let format = match args.format {
        Some(FormatArg::Json) => Format::Json,
        Some(FormatArg::Csv) => Format::Csv,
        None => args.command.default_format(),
    };
    let ctx = Ctx {
        args,
        doc: &loaded.doc,
        format,
        command: args.command.name(),
        sha256: &loaded.sha256,
        echo,
    };
    let outcome = match args.command {
        Command::Analyze => commands::analyze(&ctx)?,
        Command::Melnikov => commands::melnikov(&ctx)?,
        Command::Branch => commands::branch(&ctx)?,
        Command::Simulate => commands::simulate_cmd(&ctx)?,
        Command::Certify => commands::certify(&ctx)?,
        Command::Lift => commands::lift(&ctx)?,
    };
    deliver(args, args.command, format, &outcome, &ctx)?;
    Ok(outcome.exit)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let echo = RunEcho {
        mu: args.mu,
        eps: args.eps,
        grid: args.grid,
        tol: args.tol,
        seed: args.seed,
        simple: args.simple,
    };
    let mut sha = None;
    let code = match run(&args, &echo, &mut sha) {
        Ok(code) => code,
        Err(e) => {
            let obj = e.object();
            eprintln!("torusforge {}: {}", args.command.name(), obj.message);
            let code = obj.exit_code;
            let env = Envelope::<()> {
                tool: TOOL,
                version: VERSION,
                command: args.command.name(),
                input_sha256: sha.as_deref(),
                run: &echo,
                artifacts: None,
                report: None,
                error: Some(obj),
            };
            // the error object is the report; a broken stdout leaves only the stderr line
            let _ = stdout(&to_json(&env));
            code
        }
    };
    ExitCode::from(u8::try_from(code).unwrap_or(EXIT_ERROR as u8))
}
