//! Run configuration shared by every subcommand and embedded in every
//! report, so a report can be re-run from its own header.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use wente_core::assembly::{AssemblyConfig, Method, DEFAULT_GRID, MAX_GRID};
use wente_core::basis::BasisOrder;
use wente_core::reference::Reference;
use wente_core::surface::SurfaceLabel;

/// Version of the JSON envelope written by every subcommand.
pub const SCHEMA_VERSION: u32 = 1;

/// Truncation used when the reference fixture has no row for a surface.
pub const FALLBACK_M: usize = 2521;

pub const DEFAULT_QUAD_GRID: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Selector {
    All,
    One(SurfaceLabel),
}

impl FromStr for Selector {
    type Err = wente_core::Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.trim().eq_ignore_ascii_case("all") {
            Ok(Self::All)
        } else {
            s.parse().map(Self::One)
        }
    }
}

impl fmt::Display for Selector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::All => f.write_str("all"),
            Self::One(l) => l.fmt(f),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum MethodChoice {
    Fourier,
    Quadrature,
    /// Fourier, cross-checked entrywise against quadrature.
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OrderChoice {
    /// Shell order where the reference fixture has a truncation for the
    /// surface, eigenvalue order otherwise.
    Auto,
    Shell,
    Alpha,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: String,
    pub surface: String,
    /// `None` takes the fixture's truncation for each surface.
    pub m: Option<usize>,
    pub grid: usize,
    pub max_grid: usize,
    pub mean_curvature: f64,
    pub method: MethodChoice,
    pub quad_grid: usize,
    pub order: OrderChoice,
    /// Absolute zero tolerance; `None` means `1e-6 |A|`.
    pub zero_tol: Option<f64>,
    pub greedy_pool: Option<usize>,
    /// Recount with `theta` moved by half a unit in its last printed place.
    pub theta_sensitivity: bool,
    pub format: Format,
    pub cache_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(command: &str, surface: Selector, mean_curvature: f64, format: Format) -> Self {
        Self {
            command: command.to_string(),
            surface: surface.to_string(),
            m: None,
            grid: DEFAULT_GRID,
            max_grid: MAX_GRID,
            mean_curvature,
            method: MethodChoice::Fourier,
            quad_grid: DEFAULT_QUAD_GRID,
            order: OrderChoice::Auto,
            zero_tol: None,
            greedy_pool: None,
            theta_sensitivity: false,
            format,
            cache_dir: None,
        }
    }

    /// Basis ordering for one surface.
    pub fn basis_order(&self, label: SurfaceLabel) -> BasisOrder {
        match self.order {
            OrderChoice::Shell => BasisOrder::Shell,
            OrderChoice::Alpha => BasisOrder::Alpha,
            OrderChoice::Auto if Reference::builtin().galerkin_row(label).is_some() => BasisOrder::Shell,
            OrderChoice::Auto => BasisOrder::Alpha,
        }
    }

    /// Assembly settings for the primary (non-oracle) matrix.
    pub fn assembly(&self, label: SurfaceLabel) -> AssemblyConfig {
        match self.method {
            MethodChoice::Quadrature => self.quadrature_assembly(label),
            MethodChoice::Fourier | MethodChoice::Both => AssemblyConfig {
                method: Method::Fourier,
                order: self.basis_order(label),
                grid: self.grid,
                max_grid: self.max_grid,
                cache_dir: self.cache_dir.clone(),
                ..AssemblyConfig::default()
            },
        }
    }

    /// Direct quadrature on a fixed grid; the oracle is far too slow to
    /// run a refinement loop on.
    pub fn quadrature_assembly(&self, label: SurfaceLabel) -> AssemblyConfig {
        AssemblyConfig {
            method: Method::Quadrature,
            order: self.basis_order(label),
            grid: self.quad_grid,
            max_grid: self.quad_grid,
            verify_convergence: false,
            cache_dir: None,
            ..AssemblyConfig::default()
        }
    }
}

/// Envelope around every JSON output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope<T> {
    pub schema: String,
    pub schema_version: u32,
    pub config: RunConfig,
    pub results: Vec<T>,
}

impl<T> Envelope<T> {
    pub fn new(config: RunConfig, results: Vec<T>) -> Self {
        Self {
            schema: format!("wente-{}", config.command),
            schema_version: SCHEMA_VERSION,
            config,
            results,
        }
    }
}
