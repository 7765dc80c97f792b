//! Index bounds: Courant nodal count, the potential sandwich, negative
//! definite subspaces, and the combined Galerkin report.

use nalgebra::Cholesky;
use serde::{Deserialize, Serialize};

use crate::assembly::{assemble, assemble_indices, AssemblyConfig, GalerkinMatrix, Provenance};
use crate::basis::{enumerate_ordered, sorted_alpha_stream, BasisOrder};
use crate::catalog::listed_subspace;
use crate::error::{Error, Result};
use crate::spectrum::{decompose, Range};
use crate::surface::{build_for_label, Lattice, Parity, SurfaceLabel, SurfaceParams};

/// Lower bound from the sign changes of the normal variation: `2n - 2`
/// for odd `l`, `n - 2` for even `l`.
pub fn courant_bound(label: SurfaceLabel) -> usize {
    let n = label.n() as usize;
    match label.parity() {
        Parity::Odd => 2 * n - 2,
        Parity::Even => n - 2,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sandwich {
    /// `#{alpha_i < V_min}`.
    pub mu: usize,
    /// `#{alpha_i < V_max}`.
    pub nu: usize,
    pub lower: usize,
    pub upper: usize,
    /// Laplacian eigenvalues within `1e-9` of either threshold.
    pub near_threshold: Vec<f64>,
}

/// Comparing `-Δ - V` with `-Δ - V_min` and `-Δ - V_max` gives
/// `mu - 1 <= index <= nu`; the `-1` accounts for the constant mode.
pub fn sandwich_from_thresholds(lat: &Lattice, v_min: f64, v_max: f64) -> Result<Sandwich> {
    if !(v_min > 0.0 && v_min <= v_max) {
        return Err(Error::Parameter(format!("need 0 < V_min <= V_max, got {v_min}, {v_max}")));
    }
    let low = sorted_alpha_stream(lat, v_min);
    let high = sorted_alpha_stream(lat, v_max);
    let mut near_threshold = low.near_limit.clone();
    near_threshold.extend(&high.near_limit);
    let (mu, nu) = (low.len(), high.len());
    Ok(Sandwich {
        mu,
        nu,
        lower: mu - 1,
        upper: nu,
        near_threshold,
    })
}

pub fn potential_sandwich(p: &SurfaceParams) -> Result<Sandwich> {
    let (v_min, v_max) = p.potential_extrema();
    sandwich_from_thresholds(&p.lattice(), v_min, v_max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubspaceBound {
    pub indices: Vec<usize>,
    pub negative_definite: bool,
    /// `N - 1` when the block is negative definite, else 0.
    pub implied_lower: usize,
    pub max_eigenvalue: f64,
    /// Whether a Cholesky factorization of the negated block succeeds.
    pub cholesky_agrees: bool,
}

/// Definiteness verdict for an assembled block.
pub fn subspace_verdict(block: &GalerkinMatrix) -> Result<SubspaceBound> {
    let est = decompose(&block.entries, None)?;
    let max_eigenvalue = est.max_eigenvalue();
    let negative_definite = max_eigenvalue < 0.0;
    let cholesky_ok = Cholesky::new(-block.entries.clone()).is_some();
    if cholesky_ok != negative_definite {
        log::warn!(
            "{}: Cholesky and eigenvalue tests disagree (max eigenvalue {max_eigenvalue:.3e})",
            block.surface.label
        );
    }
    let n = block.indices.len();
    Ok(SubspaceBound {
        indices: block.indices.clone(),
        negative_definite,
        implied_lower: if negative_definite { n - 1 } else { 0 },
        max_eigenvalue,
        cholesky_agrees: cholesky_ok == negative_definite,
    })
}

/// If the quadratic form is negative definite on the span of the chosen
/// eigenfunctions, the index is at least `N - 1` (one direction may be
/// lost to the volume constraint).
pub fn subspace_bound(p: &SurfaceParams, indices: &[usize], cfg: &AssemblyConfig) -> Result<SubspaceBound> {
    subspace_verdict(&assemble_indices(p, indices, cfg)?)
}

/// Greedy growth of a negative definite index set inside `pool`: each step
/// adds the candidate that leaves the largest eigenvalue most negative,
/// lower index first on ties, and stops when no candidate keeps the block
/// definite.
pub fn greedy_in_matrix(pool: &GalerkinMatrix) -> Result<SubspaceBound> {
    let mut chosen: Vec<usize> = Vec::new();
    loop {
        let mut best: Option<(f64, usize)> = None;
        for &c in &pool.indices {
            if chosen.contains(&c) {
                continue;
            }
            let mut trial = chosen.clone();
            trial.push(c);
            let top = decompose(&pool.submatrix(&trial)?.entries, None)?.max_eigenvalue();
            if top < 0.0 && best.is_none_or(|(b, _)| top < b) {
                best = Some((top, c));
            }
        }
        match best {
            Some((_, c)) => chosen.push(c),
            None => break,
        }
    }
    if chosen.is_empty() {
        return Ok(SubspaceBound {
            indices: Vec::new(),
            negative_definite: false,
            implied_lower: 0,
            max_eigenvalue: f64::NAN,
            cholesky_agrees: true,
        });
    }
    subspace_verdict(&pool.submatrix(&chosen)?)
}

pub fn greedy_subspace_search(p: &SurfaceParams, pool_size: usize, cfg: &AssemblyConfig) -> Result<SubspaceBound> {
    if pool_size == 0 {
        return Err(Error::Basis("pool size must be at least 1".into()));
    }
    greedy_in_matrix(&assemble(p, pool_size, cfg)?)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReportOptions {
    pub assembly: AssemblyConfig,
    /// Absolute zero tolerance; `None` uses `1e-6 |A|`.
    pub zero_tol: Option<f64>,
    /// Also run the greedy search over this many leading basis functions.
    pub greedy_pool: Option<usize>,
}


#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexReport {
    pub surface: SurfaceLabel,
    pub theta_degrees: f64,
    pub mean_curvature: f64,
    pub courant_lower: usize,
    pub sandwich_lower: usize,
    pub sandwich_upper: usize,
    pub subspace_lower: Option<usize>,
    pub subspace_indices: Option<Vec<usize>>,
    pub greedy_lower: Option<usize>,
    pub greedy_indices: Option<Vec<usize>>,
    /// Largest of the rigorous lower bounds.
    pub best_lower: usize,
    pub m_used: usize,
    pub shell_complete: bool,
    pub galerkin_k: usize,
    pub uncertain_count: usize,
    /// The index is `k - 1` or `k`.
    pub index_estimate: [usize; 2],
    pub negative_range: Option<Range>,
    pub first_positive_six: Vec<f64>,
    pub positive_six_range: Option<Range>,
    pub zero_tol: f64,
    pub residual_bound: f64,
    pub provenance: Provenance,
    pub notes: Vec<String>,
}

/// Runs every bound and the Galerkin estimate on `A_m` and checks that
/// they fit together.
pub fn full_report(p: &SurfaceParams, m: usize, opts: &ReportOptions) -> Result<IndexReport> {
    let mut notes = Vec::new();
    let courant_lower = courant_bound(p.label);
    let sandwich = potential_sandwich(p)?;
    for a in &sandwich.near_threshold {
        notes.push(format!("Laplacian eigenvalue {a} lies within 1e-9 of a potential threshold"));
    }
    let order = opts.assembly.order;
    let shell_complete = enumerate_ordered(&p.lattice(), m, order)?.shell_complete;
    if !shell_complete {
        notes.push(format!("m = {m} splits a shell of the basis ordering"));
    }

    let a = assemble(p, m, &opts.assembly)?;
    let est = decompose(&a.entries, opts.zero_tol)?;
    let k = est.negative_count;
    if est.uncertain_count > 0 {
        notes.push(format!(
            "{} eigenvalue(s) within the zero tolerance {:.3e} left unclassified",
            est.uncertain_count, est.zero_tol
        ));
    }
    if a.provenance.nx > opts.assembly.grid {
        notes.push(format!("grid refined to {}x{} for convergence", a.provenance.nx, a.provenance.ny));
    }

    // Listed sets are positions in the shell ordering.
    let listed = match listed_subspace(p.label) {
        Some(set) if order == BasisOrder::Shell && set.iter().all(|&i| i <= m) => {
            Some(subspace_verdict(&a.submatrix(&set)?)?)
        }
        Some(set) => {
            let shell = AssemblyConfig {
                order: BasisOrder::Shell,
                ..opts.assembly.clone()
            };
            Some(subspace_bound(p, &set, &shell)?)
        }
        None => None,
    };
    if let Some(s) = &listed {
        if !s.negative_definite {
            notes.push(format!(
                "listed subspace is not negative definite (max eigenvalue {:.3e})",
                s.max_eigenvalue
            ));
        }
    }
    let greedy = match opts.greedy_pool {
        Some(pool) if pool <= m => Some(greedy_in_matrix(&a.submatrix(&(1..=pool).collect::<Vec<_>>())?)?),
        Some(pool) => Some(greedy_subspace_search(p, pool, &opts.assembly)?),
        None => None,
    };

    let subspace_lower = listed.as_ref().map(|s| s.implied_lower);
    let greedy_lower = greedy.as_ref().map(|s| s.implied_lower);
    let best_lower = [Some(courant_lower), Some(sandwich.lower), subspace_lower, greedy_lower]
        .into_iter()
        .flatten()
        .max()
        .unwrap_or(0);

    let report = IndexReport {
        surface: p.label,
        theta_degrees: p.theta_degrees,
        mean_curvature: p.mean_curvature,
        courant_lower,
        sandwich_lower: sandwich.lower,
        sandwich_upper: sandwich.upper,
        subspace_lower,
        subspace_indices: listed.map(|s| s.indices),
        greedy_lower,
        greedy_indices: greedy.map(|s| s.indices),
        best_lower,
        m_used: m,
        shell_complete,
        galerkin_k: k,
        uncertain_count: est.uncertain_count,
        index_estimate: [k.saturating_sub(1), k],
        negative_range: est.negative_range(),
        first_positive_six: est.first_positive_six.clone(),
        positive_six_range: est.positive_six_range(),
        zero_tol: est.zero_tol,
        residual_bound: est.residual_bound,
        provenance: a.provenance,
        notes,
    };
    check_consistency(&report)?;
    Ok(report)
}

/// Every rigorous lower bound must sit below the upper bound and below the
/// Galerkin count `k`; otherwise something is numerically wrong or `m` is
/// too small to resolve the index.
pub fn check_consistency(r: &IndexReport) -> Result<()> {
    let lowers = [
        ("courant", Some(r.courant_lower)),
        ("sandwich", Some(r.sandwich_lower)),
        ("subspace", r.subspace_lower),
        ("greedy", r.greedy_lower),
    ];
    for (name, value) in lowers {
        let Some(v) = value else { continue };
        if v > r.sandwich_upper {
            return Err(Error::InconsistentBounds(format!(
                "{}: {name} lower bound {v} exceeds the upper bound {}",
                r.surface, r.sandwich_upper
            )));
        }
        if v > r.galerkin_k {
            return Err(Error::InconsistentBounds(format!(
                "{}: {name} lower bound {v} exceeds the Galerkin count {} at m = {}; m is too small",
                r.surface, r.galerkin_k, r.m_used
            )));
        }
    }
    if r.galerkin_k > r.sandwich_upper {
        return Err(Error::InconsistentBounds(format!(
            "{}: Galerkin count {} exceeds the upper bound {}",
            r.surface, r.galerkin_k, r.sandwich_upper
        )));
    }
    Ok(())
}

/// Half a unit in the last printed place of the catalog angles.
pub const THETA_HALF_ULP_DEGREES: f64 = 5e-5;

/// Negative counts of `A_m` with `theta` nudged by `delta` either way.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaSensitivity {
    pub delta_degrees: f64,
    /// Counts at `theta - delta`, `theta`, `theta + delta`.
    pub negative_counts: [usize; 3],
    /// Smallest `|lambda|` over the three spectra: how close an eigenvalue
    /// came to crossing zero.
    pub min_abs_eigenvalue: f64,
    pub stable: bool,
}

pub fn theta_sensitivity(p: &SurfaceParams, m: usize, delta: f64, cfg: &AssemblyConfig) -> Result<ThetaSensitivity> {
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::Parameter(format!("theta perturbation must be positive, got {delta}")));
    }
    let mut negative_counts = [0; 3];
    let mut min_abs_eigenvalue = f64::INFINITY;
    for (slot, shift) in [-delta, 0.0, delta].into_iter().enumerate() {
        let q = build_for_label(p.label, p.mean_curvature, p.theta_degrees + shift)?;
        let est = decompose(&assemble(&q, m, cfg)?.entries, None)?;
        negative_counts[slot] = est.negative_count;
        min_abs_eigenvalue = est.eigenvalues.iter().map(|l| l.abs()).fold(min_abs_eigenvalue, f64::min);
    }
    Ok(ThetaSensitivity {
        delta_degrees: delta,
        negative_counts,
        min_abs_eigenvalue,
        stable: negative_counts.iter().all(|&c| c == negative_counts[1]),
    })
}
