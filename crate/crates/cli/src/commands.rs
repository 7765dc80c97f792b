//! The subcommands proper: each turns a `RunConfig` into result records.

use std::fmt;

use anyhow::{Context, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use wente_core::assembly::{assemble, assemble_indices};
use wente_core::bounds::{
    courant_bound, full_report, potential_sandwich, subspace_verdict, theta_sensitivity, IndexReport, ReportOptions,
    SubspaceBound, ThetaSensitivity, THETA_HALF_ULP_DEGREES,
};
use wente_core::cache::{CacheEntryInfo, FourierCache};
use wente_core::catalog::{listed_subspace, SurfaceCatalog};
use wente_core::reference::{relative_error, Reference};
use wente_core::surface::{SurfaceLabel, SurfaceParams};

use crate::config::{MethodChoice, RunConfig, Selector, FALLBACK_M};
use crate::format::round_sig;

pub const PERIOD_TOLERANCE: f64 = 0.01;
pub const V_MAX_RELATIVE_TOLERANCE: f64 = 1e-3;
pub const RANGE_RELATIVE_TOLERANCE: f64 = 0.02;

/// A bad argument rather than a failed computation; exits with status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// Resolves the selector against the catalog, in catalog order.
pub fn surfaces(cfg: &RunConfig, selector: Selector) -> Result<Vec<SurfaceParams>> {
    if !(cfg.mean_curvature.is_finite() && cfg.mean_curvature > 0.0) {
        return Err(usage(format!("mean curvature must be positive, got {}", cfg.mean_curvature)));
    }
    let catalog = SurfaceCatalog::builtin();
    let rows: Vec<_> = match selector {
        Selector::All => catalog.rows.iter().collect(),
        Selector::One(label) => vec![catalog
            .get(label)
            .ok_or_else(|| usage(format!("surface {label} is not in the catalog")))?],
    };
    rows.into_iter()
        .map(|r| r.surface(cfg.mean_curvature).map_err(Into::into))
        .collect()
}

/// Runs `f` on every surface on a pool of `jobs` workers, keeping input order.
pub fn fan_out<T, F>(items: &[SurfaceParams], jobs: usize, f: F) -> Result<Vec<(SurfaceLabel, Result<T>)>>
where
    T: Send,
    F: Fn(&SurfaceParams) -> Result<T> + Sync,
{
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build()?;
    Ok(pool.install(|| items.par_iter().map(|p| (p.label, f(p))).collect()))
}

fn truncation(cfg: &RunConfig, label: SurfaceLabel) -> Result<usize> {
    let m = match cfg.m {
        Some(m) => m,
        None => Reference::builtin().galerkin_row(label).map_or(FALLBACK_M, |r| r.m),
    };
    if m == 0 {
        return Err(usage("m must be positive"));
    }
    Ok(m)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleCheck {
    pub quad_grid: usize,
    pub entries: usize,
    /// Largest `|b_fourier - b_quadrature| / max(1, |b_fourier|)`.
    pub max_discrepancy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRecord {
    pub report: IndexReport,
    pub oracle: Option<OracleCheck>,
    pub theta: Option<ThetaSensitivity>,
}

pub fn report(cfg: &RunConfig, p: &SurfaceParams) -> Result<ReportRecord> {
    let m = truncation(cfg, p.label)?;
    let opts = ReportOptions {
        assembly: cfg.assembly(p.label),
        zero_tol: cfg.zero_tol,
        greedy_pool: cfg.greedy_pool,
    };
    let report = full_report(p, m, &opts)?;
    let oracle = match cfg.method {
        MethodChoice::Both => Some(oracle_check(cfg, p, m)?),
        _ => None,
    };
    let theta = if cfg.theta_sensitivity {
        Some(theta_sensitivity(p, m, THETA_HALF_ULP_DEGREES, &opts.assembly)?)
    } else {
        None
    };
    Ok(ReportRecord { report, oracle, theta })
}

fn oracle_check(cfg: &RunConfig, p: &SurfaceParams, m: usize) -> Result<OracleCheck> {
    let fourier = assemble(p, m, &cfg.assembly(p.label))?;
    let quad = assemble(p, m, &cfg.quadrature_assembly(p.label)).context("quadrature oracle")?;
    let max_discrepancy = fourier
        .entries
        .iter()
        .zip(quad.entries.iter())
        .map(|(f, q)| (f - q).abs() / f.abs().max(1.0))
        .fold(0.0, f64::max);
    Ok(OracleCheck {
        quad_grid: cfg.quad_grid,
        entries: m * (m + 1) / 2,
        max_discrepancy,
    })
}

/// Geometry and rough bounds for one surface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsRecord {
    pub surface: SurfaceLabel,
    pub theta_degrees: f64,
    pub x_period: f64,
    pub y_period: f64,
    pub v_min: f64,
    pub v_max: f64,
    pub courant_lower: usize,
    pub sandwich_lower: usize,
    pub sandwich_upper: usize,
    pub mu: usize,
    pub nu: usize,
}

pub fn bounds(p: &SurfaceParams) -> Result<BoundsRecord> {
    let (v_min, v_max) = p.potential_extrema();
    let s = potential_sandwich(p)?;
    Ok(BoundsRecord {
        surface: p.label,
        theta_degrees: p.theta_degrees,
        x_period: p.x_period,
        y_period: p.y_period,
        v_min,
        v_max,
        courant_lower: courant_bound(p.label),
        sandwich_lower: s.lower,
        sandwich_upper: s.upper,
        mu: s.mu,
        nu: s.nu,
    })
}

/// Computed bounds-table row against the fixture, one flag per cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table2Row {
    pub surface: SurfaceLabel,
    pub theta_degrees: f64,
    pub x_period: f64,
    pub x_published: f64,
    pub x_ok: bool,
    pub y_period: f64,
    pub y_published: f64,
    pub y_ok: bool,
    pub v_min: f64,
    pub v_min_published: f64,
    pub v_min_ok: bool,
    pub v_max: f64,
    pub v_max_published: f64,
    pub v_max_relative_error: f64,
    pub v_max_ok: bool,
    pub courant_lower: usize,
    pub courant_published: usize,
    pub courant_ok: bool,
    pub sandwich_lower: usize,
    pub sandwich_lower_published: usize,
    pub sandwich_lower_ok: bool,
    pub sandwich_upper: usize,
    pub sandwich_upper_published: usize,
    pub sandwich_upper_ok: bool,
}

impl Table2Row {
    pub fn cells(&self) -> [bool; 7] {
        [
            self.x_ok,
            self.y_ok,
            self.v_min_ok,
            self.v_max_ok,
            self.courant_ok,
            self.sandwich_lower_ok,
            self.sandwich_upper_ok,
        ]
    }
}

pub fn table2(p: &SurfaceParams) -> Result<Table2Row> {
    let b = bounds(p)?;
    let reference = Reference::builtin();
    let r = reference
        .bounds_row(p.label)
        .with_context(|| format!("no published row for {}", p.label))?;
    let v_max_relative_error = relative_error(b.v_max, r.v_max);
    Ok(Table2Row {
        surface: p.label,
        theta_degrees: p.theta_degrees,
        x_period: b.x_period,
        x_published: r.x_period,
        x_ok: (b.x_period - r.x_period).abs() <= PERIOD_TOLERANCE,
        y_period: b.y_period,
        y_published: r.y_period,
        y_ok: (b.y_period - r.y_period).abs() <= PERIOD_TOLERANCE,
        v_min: b.v_min,
        v_min_published: r.v_min,
        v_min_ok: b.v_min == r.v_min,
        v_max: b.v_max,
        v_max_published: r.v_max,
        v_max_relative_error,
        v_max_ok: v_max_relative_error <= V_MAX_RELATIVE_TOLERANCE,
        courant_lower: b.courant_lower,
        courant_published: r.courant_lower,
        courant_ok: b.courant_lower == r.courant_lower,
        sandwich_lower: b.sandwich_lower,
        sandwich_lower_published: r.sandwich_lower,
        sandwich_lower_ok: b.sandwich_lower == r.sandwich_lower,
        sandwich_upper: b.sandwich_upper,
        sandwich_upper_published: r.sandwich_upper,
        sandwich_upper_ok: b.sandwich_upper == r.sandwich_upper,
    })
}

/// Galerkin-table row against the fixture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table3Row {
    pub surface: SurfaceLabel,
    pub m: usize,
    pub best_lower: usize,
    pub subspace_lower: Option<usize>,
    pub subspace_lower_published: Option<usize>,
    pub galerkin_k: usize,
    pub k_published: usize,
    pub k_ok: bool,
    pub negative_low: Option<f64>,
    pub negative_low_published: f64,
    pub negative_low_ok: bool,
    pub negative_high: Option<f64>,
    pub negative_high_published: f64,
    pub negative_high_ok: bool,
    pub positive_low: Option<f64>,
    pub positive_low_published: f64,
    pub positive_low_ok: bool,
    pub positive_high: Option<f64>,
    pub positive_high_published: f64,
    pub positive_high_ok: bool,
    pub grid: usize,
    pub grid_change: Option<f64>,
}

impl Table3Row {
    pub fn cells(&self) -> [bool; 5] {
        [
            self.k_ok,
            self.negative_low_ok,
            self.negative_high_ok,
            self.positive_low_ok,
            self.positive_high_ok,
        ]
    }
}

/// Surfaces with a published Galerkin row, in catalog order.
pub fn table3_surfaces(all: Vec<SurfaceParams>) -> Vec<SurfaceParams> {
    let reference = Reference::builtin();
    all.into_iter().filter(|p| reference.galerkin_row(p.label).is_some()).collect()
}

pub fn table3(cfg: &RunConfig, p: &SurfaceParams) -> Result<Table3Row> {
    let reference = Reference::builtin();
    let r = reference
        .galerkin_row(p.label)
        .ok_or_else(|| usage(format!("no published Galerkin row for {}", p.label)))?;
    let cfg = RunConfig {
        m: Some(cfg.m.unwrap_or(r.m)),
        ..cfg.clone()
    };
    let rec = report(&cfg, p)?.report;
    let close = |got: Option<f64>, want: f64| got.is_some_and(|g| relative_error(g, want) <= RANGE_RELATIVE_TOLERANCE);
    let neg = rec.negative_range;
    let pos = rec.positive_six_range;
    Ok(Table3Row {
        surface: p.label,
        m: rec.m_used,
        best_lower: rec.best_lower,
        subspace_lower: rec.subspace_lower,
        subspace_lower_published: r.subspace_lower,
        galerkin_k: rec.galerkin_k,
        k_published: r.index_estimate[1],
        k_ok: rec.galerkin_k == r.index_estimate[1],
        negative_low: neg.map(|x| x.low),
        negative_low_published: r.negative_range[0],
        negative_low_ok: close(neg.map(|x| x.low), r.negative_range[0]),
        negative_high: neg.map(|x| x.high),
        negative_high_published: r.negative_range[1],
        negative_high_ok: close(neg.map(|x| x.high), r.negative_range[1]),
        positive_low: pos.map(|x| x.low),
        positive_low_published: r.positive_six_range[0],
        positive_low_ok: close(pos.map(|x| x.low), r.positive_six_range[0]),
        positive_high: pos.map(|x| x.high),
        positive_high_published: r.positive_six_range[1],
        positive_high_ok: close(pos.map(|x| x.high), r.positive_six_range[1]),
        grid: rec.provenance.nx,
        grid_change: rec.provenance.grid_change,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubspaceRecord {
    pub surface: SurfaceLabel,
    pub indices: Vec<usize>,
    pub verdict: SubspaceBound,
    /// Entries at full precision, row-major.
    pub matrix: Vec<Vec<f64>>,
    /// The same entries rounded to three significant figures.
    pub rounded: Vec<Vec<f64>>,
    /// Largest deviation from the published display, when there is one.
    pub published_deviation: Option<f64>,
}

/// Parses a comma- or space-separated list of 1-based basis positions.
pub fn parse_indices(text: &str) -> Result<Vec<usize>> {
    let indices = text
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<usize>()
                .ok()
                .filter(|&i| i > 0)
                .ok_or_else(|| usage(format!("invalid basis index {t:?}")))
        })
        .collect::<Result<Vec<_>>>()?;
    if indices.is_empty() {
        return Err(usage("the index list is empty"));
    }
    Ok(indices)
}

pub fn subspace(cfg: &RunConfig, p: &SurfaceParams, indices: Option<&[usize]>) -> Result<SubspaceRecord> {
    let indices = match indices {
        Some(set) => set.to_vec(),
        None => listed_subspace(p.label)
            .ok_or_else(|| usage(format!("no listed subspace for {}; pass --indices", p.label)))?,
    };
    let block = assemble_indices(p, &indices, &cfg.assembly(p.label))?;
    let verdict = subspace_verdict(&block)?;
    let matrix: Vec<Vec<f64>> = block.rows();
    let rounded = matrix
        .iter()
        .map(|row| row.iter().map(|&x| round_sig(x, 3)).collect())
        .collect();
    let reference = Reference::builtin();
    let published_deviation = reference
        .subspace_matrix(p.label)
        .filter(|d| d.indices == block.indices)
        .map(|d| {
            d.rows
                .iter()
                .flatten()
                .zip(matrix.iter().flatten())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        });
    Ok(SubspaceRecord {
        surface: p.label,
        indices: block.indices,
        verdict,
        matrix,
        rounded,
        published_deviation,
    })
}

/// Subspace runs for `--surface all`: only surfaces with a listed set.
pub fn subspace_surfaces(all: Vec<SurfaceParams>) -> Vec<SurfaceParams> {
    all.into_iter().filter(|p| listed_subspace(p.label).is_some()).collect()
}

pub fn cache_entries(cfg: &RunConfig) -> Result<Vec<CacheEntryInfo>> {
    Ok(open_cache(cfg)?.entries()?)
}

pub fn cache_clear(cfg: &RunConfig) -> Result<usize> {
    Ok(open_cache(cfg)?.clear()?)
}

fn open_cache(cfg: &RunConfig) -> Result<FourierCache> {
    let dir = cfg
        .cache_dir
        .clone()
        .ok_or_else(|| usage("no cache directory; pass --cache-dir or set WENTE_CACHE_DIR"))?;
    Ok(FourierCache::new(dir))
}
