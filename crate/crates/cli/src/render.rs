//! Text and CSV renderings of the result records.

use std::io::Write;

use anyhow::Result;
use serde::Serialize;
use wente_core::cache::CacheEntryInfo;
use wente_core::surface::SurfaceLabel;

use crate::commands::{BoundsRecord, ReportRecord, SubspaceRecord, Table2Row, Table3Row};
use crate::format::{opt, sig, sig6};

pub fn report_text(out: &mut impl Write, rec: &ReportRecord) -> Result<()> {
    let r = &rec.report;
    writeln!(out, "W_{}  theta = {} deg  H = {}", r.surface, sig6(r.theta_degrees), sig6(r.mean_curvature))?;
    writeln!(
        out,
        "  lower bounds: courant {}  sandwich {}  subspace {}  greedy {}  best {}",
        r.courant_lower,
        r.sandwich_lower,
        opt(r.subspace_lower),
        opt(r.greedy_lower),
        r.best_lower
    )?;
    writeln!(out, "  upper bound:  {}", r.sandwich_upper)?;
    writeln!(
        out,
        "  galerkin:     m = {}{}  k = {}  index in {{{}, {}}}  uncertain {}",
        r.m_used,
        if r.shell_complete { "" } else { " (split shell)" },
        r.galerkin_k,
        r.index_estimate[0],
        r.index_estimate[1],
        r.uncertain_count
    )?;
    if let Some(n) = r.negative_range {
        writeln!(out, "  negative eigenvalues in [{}, {}]", sig6(n.low), sig6(n.high))?;
    }
    if let Some(p) = r.positive_six_range {
        writeln!(out, "  first six positive in [{}, {}]", sig6(p.low), sig6(p.high))?;
    }
    let pv = &r.provenance;
    writeln!(
        out,
        "  grid {}x{}  change {}  sine residual {}  residual {}  zero tol {}",
        pv.nx,
        pv.ny,
        pv.grid_change.map_or_else(|| "-".into(), sig6),
        sig6(pv.sine_residual),
        sig6(r.residual_bound),
        sig6(r.zero_tol)
    )?;
    if let Some(o) = &rec.oracle {
        writeln!(
            out,
            "  quadrature oracle on {}x{}: max discrepancy {} over {} entries",
            o.quad_grid,
            o.quad_grid,
            sig6(o.max_discrepancy),
            o.entries
        )?;
    }
    if let Some(t) = &rec.theta {
        let [lo, mid, hi] = t.negative_counts;
        writeln!(
            out,
            "  theta +/- {}: k = {lo}, {mid}, {hi}  ({})  min |lambda| {}",
            t.delta_degrees,
            if t.stable { "stable" } else { "UNSTABLE" },
            sig6(t.min_abs_eigenvalue)
        )?;
    }
    for note in &r.notes {
        writeln!(out, "  note: {note}")?;
    }
    Ok(())
}

#[derive(Serialize)]
struct ReportCsv {
    surface: SurfaceLabel,
    m: usize,
    shell_complete: bool,
    galerkin_k: usize,
    index_low: usize,
    index_high: usize,
    best_lower: usize,
    courant_lower: usize,
    sandwich_lower: usize,
    sandwich_upper: usize,
    subspace_lower: Option<usize>,
    greedy_lower: Option<usize>,
    uncertain_count: usize,
    negative_low: Option<f64>,
    negative_high: Option<f64>,
    positive_low: Option<f64>,
    positive_high: Option<f64>,
    zero_tol: f64,
    residual_bound: f64,
    grid: usize,
    grid_change: Option<f64>,
    oracle_max_discrepancy: Option<f64>,
    theta_stable: Option<bool>,
}

pub fn report_csv(out: &mut impl Write, recs: &[ReportRecord]) -> Result<()> {
    let rows: Vec<ReportCsv> = recs
        .iter()
        .map(|rec| {
            let r = &rec.report;
            ReportCsv {
                surface: r.surface,
                m: r.m_used,
                shell_complete: r.shell_complete,
                galerkin_k: r.galerkin_k,
                index_low: r.index_estimate[0],
                index_high: r.index_estimate[1],
                best_lower: r.best_lower,
                courant_lower: r.courant_lower,
                sandwich_lower: r.sandwich_lower,
                sandwich_upper: r.sandwich_upper,
                subspace_lower: r.subspace_lower,
                greedy_lower: r.greedy_lower,
                uncertain_count: r.uncertain_count,
                negative_low: r.negative_range.map(|x| x.low),
                negative_high: r.negative_range.map(|x| x.high),
                positive_low: r.positive_six_range.map(|x| x.low),
                positive_high: r.positive_six_range.map(|x| x.high),
                zero_tol: r.zero_tol,
                residual_bound: r.residual_bound,
                grid: r.provenance.nx,
                grid_change: r.provenance.grid_change,
                oracle_max_discrepancy: rec.oracle.as_ref().map(|o| o.max_discrepancy),
                theta_stable: rec.theta.as_ref().map(|t| t.stable),
            }
        })
        .collect();
    crate::format::write_csv(out, &rows)
}

fn mark(ok: bool) -> &'static str {
    if ok {
        " "
    } else {
        "*"
    }
}

pub fn bounds_text(out: &mut impl Write, rows: &[BoundsRecord]) -> Result<()> {
    writeln!(
        out,
        "{:<7} {:>12} {:>9} {:>9} {:>6} {:>11} {:>7} {:>8} {:>8}",
        "surface", "theta", "x", "y", "V_min", "V_max", "courant", "lower", "upper"
    )?;
    for r in rows {
        writeln!(
            out,
            "{:<7} {:>12} {:>9} {:>9} {:>6} {:>11} {:>7} {:>8} {:>8}",
            r.surface.to_string(),
            sig6(r.theta_degrees),
            sig6(r.x_period),
            sig6(r.y_period),
            sig6(r.v_min),
            sig6(r.v_max),
            r.courant_lower,
            r.sandwich_lower,
            r.sandwich_upper
        )?;
    }
    Ok(())
}

/// Computed value then published value; `*` marks a cell outside tolerance.
pub fn table2_text(out: &mut impl Write, rows: &[Table2Row]) -> Result<()> {
    writeln!(
        out,
        "{:<7} {:>19} {:>19} {:>15} {:>23} {:>9} {:>12} {:>14}",
        "surface", "x", "y", "V_min", "V_max", "courant", "lower", "upper"
    )?;
    for r in rows {
        writeln!(
            out,
            "{:<7} {:>9}/{:<8}{} {:>9}/{:<8}{} {:>7}/{:<6}{} {:>11}/{:<10}{} {:>4}/{:<3}{} {:>5}/{:<5}{} {:>6}/{:<6}{}",
            r.surface.to_string(),
            sig6(r.x_period),
            r.x_published,
            mark(r.x_ok),
            sig6(r.y_period),
            r.y_published,
            mark(r.y_ok),
            sig6(r.v_min),
            r.v_min_published,
            mark(r.v_min_ok),
            sig6(r.v_max),
            r.v_max_published,
            mark(r.v_max_ok),
            r.courant_lower,
            r.courant_published,
            mark(r.courant_ok),
            r.sandwich_lower,
            r.sandwich_lower_published,
            mark(r.sandwich_lower_ok),
            r.sandwich_upper,
            r.sandwich_upper_published,
            mark(r.sandwich_upper_ok),
        )?;
    }
    Ok(())
}

pub fn table3_text(out: &mut impl Write, rows: &[Table3Row]) -> Result<()> {
    let pair = |got: Option<f64>, want: f64, ok: bool| {
        format!("{}/{}{}", got.map_or_else(|| "-".into(), |g| sig(g, 4)), want, mark(ok))
    };
    writeln!(
        out,
        "{:<7} {:>5} {:>6} {:>9} {:>20} {:>20} {:>18} {:>18}",
        "surface", "m", "lower", "k", "most negative", "least negative", "first positive", "sixth positive"
    )?;
    for r in rows {
        writeln!(
            out,
            "{:<7} {:>5} {:>6} {:>9} {:>20} {:>20} {:>18} {:>18}",
            r.surface.to_string(),
            r.m,
            r.best_lower,
            format!("{}/{}{}", r.galerkin_k, r.k_published, mark(r.k_ok)),
            pair(r.negative_low, r.negative_low_published, r.negative_low_ok),
            pair(r.negative_high, r.negative_high_published, r.negative_high_ok),
            pair(r.positive_low, r.positive_low_published, r.positive_low_ok),
            pair(r.positive_high, r.positive_high_published, r.positive_high_ok),
        )?;
    }
    Ok(())
}

pub fn subspace_text(out: &mut impl Write, rec: &SubspaceRecord) -> Result<()> {
    let v = &rec.verdict;
    writeln!(out, "W_{}  indices {:?}", rec.surface, rec.indices)?;
    writeln!(out, "  rounded to three significant figures:")?;
    for row in &rec.rounded {
        let cells: Vec<String> = row.iter().map(|&x| format!("{:>8}", sig(x, 3))).collect();
        writeln!(out, "  {}", cells.join(" "))?;
    }
    writeln!(out, "  full precision:")?;
    for row in &rec.matrix {
        let cells: Vec<String> = row.iter().map(|&x| format!("{:>23.16e}", x + 0.0)).collect();
        writeln!(out, "  {}", cells.join(" "))?;
    }
    writeln!(
        out,
        "  negative definite: {}  (max eigenvalue {}, cholesky agrees: {})",
        v.negative_definite,
        sig6(v.max_eigenvalue),
        v.cholesky_agrees
    )?;
    writeln!(out, "  implied bound: index >= {}", v.implied_lower)?;
    if let Some(d) = rec.published_deviation {
        writeln!(out, "  largest deviation from the published display: {}", sig6(d))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct SubspaceCsv {
    surface: SurfaceLabel,
    size: usize,
    negative_definite: bool,
    cholesky_agrees: bool,
    max_eigenvalue: f64,
    implied_lower: usize,
    published_deviation: Option<f64>,
}

pub fn subspace_csv(out: &mut impl Write, recs: &[SubspaceRecord]) -> Result<()> {
    let rows: Vec<SubspaceCsv> = recs
        .iter()
        .map(|r| SubspaceCsv {
            surface: r.surface,
            size: r.indices.len(),
            negative_definite: r.verdict.negative_definite,
            cholesky_agrees: r.verdict.cholesky_agrees,
            max_eigenvalue: r.verdict.max_eigenvalue,
            implied_lower: r.verdict.implied_lower,
            published_deviation: r.published_deviation,
        })
        .collect();
    crate::format::write_csv(out, &rows)
}

pub fn cache_text(out: &mut impl Write, entries: &[CacheEntryInfo]) -> Result<()> {
    if entries.is_empty() {
        writeln!(out, "cache is empty")?;
    }
    for e in entries {
        writeln!(
            out,
            "{}  W_{}  H = {}  theta = {}  grid {}x{}  {} coefficients",
            e.file,
            e.surface,
            sig6(e.mean_curvature),
            sig6(e.theta_degrees),
            e.nx,
            e.ny,
            e.coefficients
        )?;
    }
    Ok(())
}
