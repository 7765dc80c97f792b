//! `wente`: Morse index bounds and Galerkin spectra of symmetric Wente tori.

mod commands;
mod config;
mod format;
mod render;

use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use wente_core::surface::SurfaceLabel;

use crate::commands::UsageError;
use crate::config::{Envelope, Format, MethodChoice, OrderChoice, RunConfig, Selector, DEFAULT_QUAD_GRID};
use crate::format::{write_csv, write_json};

#[derive(Parser)]
#[command(name = "wente", version, about = "Morse index bounds and Galerkin spectra of symmetric Wente tori")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Every bound plus the Galerkin index estimate.
    Report {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        galerkin: Galerkin,
    },
    /// Periods, potential extremes and rough bounds against the published table.
    Table2 {
        #[command(flatten)]
        common: Common,
    },
    /// Galerkin counts and eigenvalue ranges against the published table.
    Table3 {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        galerkin: Galerkin,
    },
    /// Assemble a block on chosen basis functions and test its definiteness.
    Subspace {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        galerkin: Galerkin,
        /// 1-based basis positions, comma separated. Defaults to the listed set.
        #[arg(long)]
        indices: Option<String>,
    },
    /// Periods, potential extremes and rough bounds.
    Bounds {
        #[command(flatten)]
        common: Common,
    },
    /// Inspect or clear the Fourier coefficient cache.
    Cache {
        #[command(subcommand)]
        action: CacheAction,
        #[arg(long, env = "WENTE_CACHE_DIR", global = true)]
        cache_dir: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
        format: Format,
    },
}

#[derive(Subcommand, Clone, Copy)]
enum CacheAction {
    Inspect,
    Clear,
}

#[derive(Args)]
struct Common {
    /// Surface `l/n` from the catalog, or `all`.
    #[arg(long, default_value = "all")]
    surface: Selector,
    /// Mean curvature.
    #[arg(long = "h", visible_alias = "mean-curvature", default_value_t = 0.5)]
    h: f64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Fourier coefficient cache directory.
    #[arg(long, env = "WENTE_CACHE_DIR")]
    cache_dir: Option<PathBuf>,
    /// Surfaces processed concurrently under `--surface all`.
    #[arg(long, default_value_t = 4)]
    jobs: usize,
}

#[derive(Args)]
struct Galerkin {
    /// Truncation size; defaults to the published truncation for the surface.
    #[arg(long)]
    m: Option<usize>,
    /// Initial square grid on the potential's period cell.
    #[arg(long, default_value_t = wente_core::assembly::DEFAULT_GRID)]
    grid: usize,
    #[arg(long, default_value_t = wente_core::assembly::MAX_GRID)]
    max_grid: usize,
    #[arg(long, value_enum, default_value_t = MethodChoice::Fourier)]
    method: MethodChoice,
    /// Grid for the direct quadrature path.
    #[arg(long, default_value_t = DEFAULT_QUAD_GRID)]
    quad_grid: usize,
    #[arg(long, value_enum, default_value_t = OrderChoice::Auto)]
    order: OrderChoice,
    /// Absolute zero tolerance for eigenvalues; default 1e-6 times the matrix norm.
    #[arg(long)]
    zero_tol: Option<f64>,
    /// Also run a greedy subspace search over this many leading functions.
    #[arg(long)]
    greedy: Option<usize>,
    /// Recount with theta moved by half a unit in its last printed digit.
    #[arg(long)]
    theta_sensitivity: bool,
}

impl Common {
    fn config(&self, command: &str, galerkin: Option<&Galerkin>) -> RunConfig {
        let mut cfg = RunConfig::new(command, self.surface, self.h, self.format);
        cfg.cache_dir = self.cache_dir.clone();
        if let Some(g) = galerkin {
            cfg.m = g.m;
            cfg.grid = g.grid;
            cfg.max_grid = g.max_grid;
            cfg.method = g.method;
            cfg.quad_grid = g.quad_grid;
            cfg.order = g.order;
            cfg.zero_tol = g.zero_tol;
            cfg.greedy_pool = g.greedy;
            cfg.theta_sensitivity = g.theta_sensitivity;
        }
        cfg
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            let code = exit_code_for(&e);
            if code != ExitCode::SUCCESS {
                eprintln!("error: {e:#}");
            }
            code
        }
    }
}

fn exit_code_for(e: &anyhow::Error) -> ExitCode {
    let broken_pipe = e.chain().any(|c| {
        let kind = c
            .downcast_ref::<io::Error>()
            .map(io::Error::kind)
            .or_else(|| c.downcast_ref::<serde_json::Error>().and_then(serde_json::Error::io_error_kind));
        kind == Some(io::ErrorKind::BrokenPipe)
    });
    if broken_pipe {
        ExitCode::SUCCESS
    } else if e.is::<UsageError>() {
        ExitCode::from(2)
    } else {
        ExitCode::FAILURE
    }
}

/// Prints successes and reports failures; the exit code reflects the worst.
fn emit<T: Serialize>(
    cfg: RunConfig,
    results: Vec<(SurfaceLabel, Result<T>)>,
    text: impl Fn(&mut io::StdoutLock, &[T]) -> Result<()>,
    csv: impl Fn(&mut io::StdoutLock, &[T]) -> Result<()>,
) -> Result<ExitCode> {
    let mut ok = Vec::new();
    let mut code = ExitCode::SUCCESS;
    let mut usage_failure = false;
    let mut failed = false;
    for (label, r) in results {
        match r {
            Ok(v) => ok.push(v),
            Err(e) => {
                eprintln!("error: W_{label}: {e:#}");
                usage_failure |= e.is::<UsageError>();
                failed = true;
            }
        }
    }
    if usage_failure && ok.is_empty() {
        code = ExitCode::from(2);
    } else if failed {
        code = ExitCode::FAILURE;
    }
    let mut out = io::stdout().lock();
    match cfg.format {
        Format::Json => write_json(&mut out, &Envelope::new(cfg, ok))?,
        Format::Csv => csv(&mut out, &ok)?,
        Format::Text => text(&mut out, &ok)?,
    }
    out.flush()?;
    Ok(code)
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Report { common, galerkin } => {
            let cfg = common.config("report", Some(&galerkin));
            let surfaces = commands::surfaces(&cfg, common.surface)?;
            let results = commands::fan_out(&surfaces, common.jobs, |p| commands::report(&cfg, p))?;
            emit(
                cfg.clone(),
                results,
                |out, recs| {
                    for r in recs {
                        render::report_text(out, r)?;
                    }
                    Ok(())
                },
                |out, recs| render::report_csv(out, recs),
            )
        }
        Command::Table2 { common } => {
            let cfg = common.config("table2", None);
            let surfaces = commands::surfaces(&cfg, common.surface)?;
            let results = commands::fan_out(&surfaces, common.jobs, commands::table2)?;
            summarize(results.iter().filter_map(|(_, r)| r.as_ref().ok()).flat_map(|r| r.cells()));
            emit(cfg, results, |out, rows| render::table2_text(out, rows), |out, rows| write_csv(out, rows))
        }
        Command::Table3 { common, galerkin } => {
            let cfg = common.config("table3", Some(&galerkin));
            let surfaces = commands::table3_surfaces(commands::surfaces(&cfg, common.surface)?);
            let results = commands::fan_out(&surfaces, common.jobs, |p| commands::table3(&cfg, p))?;
            summarize(results.iter().filter_map(|(_, r)| r.as_ref().ok()).flat_map(|r| r.cells()));
            emit(cfg.clone(), results, |out, rows| render::table3_text(out, rows), |out, rows| write_csv(out, rows))
        }
        Command::Subspace {
            common,
            galerkin,
            indices,
        } => {
            let cfg = common.config("subspace", Some(&galerkin));
            let indices = indices.as_deref().map(commands::parse_indices).transpose()?;
            let surfaces = match (common.surface, &indices) {
                (Selector::All, Some(_)) => {
                    return Err(UsageError("--indices needs a single --surface".into()).into());
                }
                (Selector::All, None) => commands::subspace_surfaces(commands::surfaces(&cfg, common.surface)?),
                (Selector::One(_), _) => commands::surfaces(&cfg, common.surface)?,
            };
            let results = commands::fan_out(&surfaces, common.jobs, |p| commands::subspace(&cfg, p, indices.as_deref()))?;
            emit(
                cfg.clone(),
                results,
                |out, recs| {
                    for r in recs {
                        render::subspace_text(out, r)?;
                    }
                    Ok(())
                },
                |out, recs| render::subspace_csv(out, recs),
            )
        }
        Command::Bounds { common } => {
            let cfg = common.config("bounds", None);
            let surfaces = commands::surfaces(&cfg, common.surface)?;
            let results = commands::fan_out(&surfaces, common.jobs, commands::bounds)?;
            emit(cfg, results, |out, rows| render::bounds_text(out, rows), |out, rows| write_csv(out, rows))
        }
        Command::Cache {
            action,
            cache_dir,
            format,
        } => {
            let mut cfg = RunConfig::new("cache", Selector::All, wente_core::surface::DEFAULT_MEAN_CURVATURE, format);
            cfg.cache_dir = cache_dir;
            let mut out = io::stdout().lock();
            match action {
                CacheAction::Inspect => {
                    let entries = commands::cache_entries(&cfg)?;
                    match format {
                        Format::Json => write_json(&mut out, &Envelope::new(cfg, entries))?,
                        Format::Csv => write_csv(&mut out, &entries)?,
                        Format::Text => render::cache_text(&mut out, &entries)?,
                    }
                }
                CacheAction::Clear => {
                    let removed = commands::cache_clear(&cfg)?;
                    match format {
                        Format::Json => write_json(&mut out, &Envelope::new(cfg, vec![removed]))?,
                        _ => writeln!(out, "removed {removed} cache file(s)")?,
                    }
                }
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

/// One line on stderr so diffs stay visible whatever the output format.
fn summarize(cells: impl Iterator<Item = bool>) {
    let (mut pass, mut total) = (0, 0);
    for ok in cells {
        total += 1;
        pass += usize::from(ok);
    }
    eprintln!("{pass} of {total} cells within tolerance of the published values");
}
