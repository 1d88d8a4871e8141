//! `spp`: single-projection solvers, sharpness estimates and their
//! certificates from the command line.

mod commands;
mod problem;
mod report;
mod verify;

use std::io::{IsTerminal, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use spp_core::spp::{AlphaChoice, MuChoice, DEFAULT_MAX_DOUBLINGS};

use report::{CommandEcho, Config, RunReport, Status, SCHEMA_VERSION};

#[derive(Parser, Debug)]
#[command(name = "spp", version, about = "Single-projection LP/convex solvers with sharpness certificates")]
struct Cli {
    #[command(flatten)]
    global: GlobalOpts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct GlobalOpts {
    /// Tolerance of the KKT / optimality certificates.
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol: f64,
    /// Tolerance for counting a unit-normalized row as active.
    #[arg(long, global = true, default_value_t = 1e-8)]
    active_tol: f64,
    /// Shift length: a nonnegative number or `auto` (sufficient threshold).
    #[arg(long, global = true, value_parser = parse_mu)]
    mu: Option<MuChoice>,
    /// Sharpness modulus: a number in (0,1] or `auto` (subset lower bound).
    #[arg(long, global = true, value_parser = parse_alpha)]
    alpha: Option<AlphaChoice>,
    /// Sample count for estimators.
    #[arg(long, global = true, default_value_t = 300)]
    samples: usize,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[arg(long, global = true, default_value_t = DEFAULT_MAX_DOUBLINGS)]
    max_doublings: u32,
    /// Record wall-clock time in the report (reports are then not reproducible byte for byte).
    #[arg(long, global = true)]
    timing: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Project a point (`--point`, else the file's `v`) onto the polyhedron.
    Project {
        file: PathBuf,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        point: Option<Vec<f64>>,
    },
    /// Sharpness of the polyhedron w.r.t. the normalized linear objective.
    Sharpness {
        file: PathBuf,
        /// Use the negated objective (the direction the solver needs).
        #[arg(long)]
        negate: bool,
    },
    /// Minimize the linear objective by one certified projection.
    SolveLp { file: PathBuf },
    /// Minimize a max-affine objective through its lifted epigraph.
    SolveCp { file: PathBuf },
    /// Empirical distance bound for the point `b` (default: the file's `v`).
    DistBound {
        file: PathBuf,
        /// Point of the polyhedron (default: a feasible vertex).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        a: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        b: Option<Vec<f64>>,
        #[arg(long, default_value_t = 0.5)]
        delta: f64,
    },
    /// Subtransversality estimate of the polyhedron and its supporting hyperplane.
    Subtrans {
        file: PathBuf,
        #[arg(long)]
        negate: bool,
        /// Half-width of the sampling box (default: ten face diameters, at least ten).
        #[arg(long)]
        box_radius: Option<f64>,
    },
    /// Re-check the certificates stored in a report.
    Verify { report: PathBuf },
    /// Random instances compared against the enumeration oracles.
    Bench {
        #[arg(long, default_value_t = 3)]
        n: usize,
        #[arg(long, default_value_t = 6)]
        m: usize,
        #[arg(long, default_value_t = 100)]
        count: u64,
    },
    /// Write a seeded random problem file.
    Gen {
        #[arg(long, default_value_t = 3)]
        n: usize,
        #[arg(long, default_value_t = 6)]
        m: usize,
        #[arg(long, default_value_t = 0)]
        index: u64,
        /// Also write the problem file here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Project { .. } => "project",
            Command::Sharpness { .. } => "sharpness",
            Command::SolveLp { .. } => "solve-lp",
            Command::SolveCp { .. } => "solve-cp",
            Command::DistBound { .. } => "dist-bound",
            Command::Subtrans { .. } => "subtrans",
            Command::Verify { .. } => "verify",
            Command::Bench { .. } => "bench",
            Command::Gen { .. } => "gen",
        }
    }
}

fn parse_mu(s: &str) -> Result<MuChoice, String> {
    if s == "auto" {
        return Ok(MuChoice::Auto);
    }
    match s.parse::<f64>() {
        Ok(x) if x.is_finite() && x >= 0.0 => Ok(MuChoice::Explicit(x)),
        _ => Err(format!("expected a nonnegative number or `auto`, got `{s}`")),
    }
}

fn parse_alpha(s: &str) -> Result<AlphaChoice, String> {
    if s == "auto" {
        return Ok(AlphaChoice::Auto);
    }
    match s.parse::<f64>() {
        Ok(x) if x > 0.0 && x <= 1.0 => Ok(AlphaChoice::Explicit(x)),
        _ => Err(format!("expected a number in (0,1] or `auto`, got `{s}`")),
    }
}

/// Machine-readable code of an error chain: the core error's code when there
/// is one, `input` otherwise.
fn error_code(e: &anyhow::Error) -> &'static str {
    e.chain()
        .find_map(|c| c.downcast_ref::<spp_core::Error>())
        .map_or("input", spp_core::Error::code)
}

fn color(enabled: bool, code: &str, text: &str) -> String {
    if enabled {
        format!("\x1b[{code}m{text}\x1b[0m")
    } else {
        text.to_string()
    }
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let cli = Cli::parse();
    let g = cli.global.clone();
    let use_color = std::env::var_os("NO_COLOR").is_none() && std::io::stdout().is_terminal();
    let config = Config {
        tol: g.tol,
        active_tol: g.active_tol,
        mu: g.mu.unwrap_or(MuChoice::Auto),
        alpha: g.alpha.unwrap_or(AlphaChoice::Auto),
        samples: g.samples,
        max_doublings: g.max_doublings,
    };
    let start = Instant::now();
    let outcome = commands::run(&cli.command, &g, config);
    let elapsed_ms = g.timing.then(|| start.elapsed().as_secs_f64() * 1e3);
    let out = match outcome {
        Ok(o) => o,
        Err(e) => {
            let code = error_code(&e);
            match g.format {
                Format::Json => {
                    let err = serde_json::json!({ "error": { "code": code, "message": format!("{e:#}") } });
                    eprintln!("{err}");
                }
                Format::Text => eprintln!("{}: {e:#}", color(use_color, "31", &format!("error[{code}]"))),
            }
            return ExitCode::from(1);
        }
    };
    let report = RunReport {
        schema_version: SCHEMA_VERSION,
        tool: "spp".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: CommandEcho {
            name: cli.command.name().into(),
            args,
        },
        config: out.config,
        seed: g.seed,
        status: out.status,
        problem: out.problem,
        row_scales: out.row_scales,
        report: out.body,
        elapsed_ms,
    };
    let text = match g.format {
        Format::Json => serde_json::to_string_pretty(&report).expect("reports serialize"),
        Format::Text => commands::render_text(&report, use_color),
    };
    let mut stdout = std::io::stdout().lock();
    if writeln!(stdout, "{text}").is_err() {
        return ExitCode::from(1);
    }
    match report.status {
        Status::Ok => ExitCode::SUCCESS,
        Status::CertificateFailed => ExitCode::from(2),
    }
}
