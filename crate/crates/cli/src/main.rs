//! `abpkit`: runs the verification pipelines described by a TOML config and
//! writes comma-separated tables (and optionally SVG plots).
//!
//! Exit status: 0 when no verdict is `fails`, 1 otherwise, 2 on a bad
//! command line, unreadable or malformed config, or I/O failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use abpkit::report::{self, Family, RunConfig, RunOutcome};
use abpkit::scene::dump_points;
use abpkit::{build_scene, Error};
use clap::{Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "abpkit", version, about = "Touching-paraboloid and ABP checks on sampled sets")]
struct Cli {
    /// Run configuration (TOML).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory (overrides `run.out`; default `out`).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true, value_name = "K")]
    threads: Option<usize>,
    /// Overrides `run.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Also write SVG plots.
    #[arg(long, global = true)]
    svg: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Dump every configured scene as one point per line.
    Scene,
    /// Contact sets and vertex-map recovery.
    Contact,
    /// Principal curvatures on the sampled normal bundle.
    Curvature,
    /// Randomized (m, h) test with quadratic test functions.
    Viscosity,
    /// ABP-type inequality checks.
    Abp,
    /// Barrier, measure-to-point and weak-Harnack cascade.
    Harnack,
    /// The families selected by `run.operation` in the config.
    Report,
}

fn fatal(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(2)
}

fn load(cli: &Cli) -> Result<RunConfig, String> {
    let path = cli.config.as_ref().ok_or("--config <PATH> is required")?;
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut cfg = report::parse_config(&text).map_err(|e| match e {
        Error::Parse { line, column, message } => {
            format!("{}:{line}:{column}: {message}", path.display())
        }
        other => format!("{}: {other}", path.display()),
    })?;
    if let Some(seed) = cli.seed {
        cfg.run.seed = seed;
    }
    cfg.run.emit_svg |= cli.svg;
    Ok(cfg)
}

fn dump_scenes(cfg: &RunConfig, dir: &Path) -> Result<usize, Error> {
    // Build everything first so a bad scene leaves no files behind.
    let built = cfg
        .scenes
        .iter()
        .map(|(name, spec)| build_scene(spec).map(|g| (name, g)))
        .collect::<Result<Vec<_>, _>>()?;
    std::fs::create_dir_all(dir)?;
    for (name, g) in &built {
        let file = std::fs::File::create(dir.join(format!("scene_{name}.txt")))?;
        dump_points(g, std::io::BufWriter::new(file))?;
    }
    Ok(built.len())
}

fn summarize(outcome: &RunOutcome) {
    for family in Family::ALL {
        let rows: Vec<_> = outcome.rows.iter().filter(|r| r.family == family).collect();
        if rows.is_empty() {
            continue;
        }
        let mut tally = std::collections::BTreeMap::new();
        for r in &rows {
            *tally.entry(r.verdict.as_str()).or_insert(0usize) += 1;
        }
        let parts: Vec<String> = tally.iter().map(|(k, v)| format!("{k}={v}")).collect();
        let secs: f64 = rows.iter().map(|r| r.wall_time.as_secs_f64()).sum();
        println!("{:<10} {:>4} rows  {}", family.name(), rows.len(), parts.join(" "));
        eprintln!("{:<10} {secs:.2}s", family.name());
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(k) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(k).build_global() {
            return fatal(e);
        }
    }
    let cfg = match load(&cli) {
        Ok(c) => c,
        Err(msg) => return fatal(msg),
    };
    let dir = cli
        .out
        .clone()
        .or_else(|| cfg.run.out.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    let selected = match cli.command {
        Command::Scene => {
            return match dump_scenes(&cfg, &dir) {
                Ok(k) => {
                    println!("wrote {k} scene files to {}", dir.display());
                    ExitCode::SUCCESS
                }
                Err(e) => fatal(e),
            };
        }
        Command::Contact => vec![Family::Contact],
        Command::Curvature => vec![Family::Curvature],
        Command::Viscosity => vec![Family::Viscosity],
        Command::Abp => vec![Family::Abp],
        Command::Harnack => vec![Family::Harnack],
        Command::Report => report::families(cfg.run.operation),
    };
    let outcome = match report::run_families(&cfg, &selected) {
        Ok(o) => o,
        Err(e) => return fatal(e),
    };
    if let Err(e) = outcome.write_to(&dir) {
        return fatal(e);
    }
    summarize(&outcome);
    println!("wrote {} files to {}", outcome.files.len(), dir.display());
    ExitCode::from(outcome.exit_code() as u8)
}
