//! Laplacian eigenfunctions on the flat torus `C / Gamma`.
//!
//! Modes are written with integer wavenumbers `(p, q)` so that the phase is
//! `2 pi p x / W + 2 pi q y / Y` (`W = n x_period`, `Y = y_period`). On an
//! odd lattice every `(p, q)` occurs; on an even lattice only `p + q` even.
//! Shell `s` holds the modes with `p + |q| = s` (odd) or `2s` (even) and is
//! listed as `(S, 0), (S-1, 1), (S-1, -1), ..., (1, -(S-1)), (0, S)`, every
//! mode contributing a sine and then a cosine. The constant function
//! comes first.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::surface::{Lattice, Parity};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Sin,
    Cos,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BasisFunction {
    /// 1-based position in the enumeration.
    pub index: usize,
    pub m1: i64,
    pub m2: i64,
    pub p: i64,
    pub q: i64,
    pub phase: Phase,
    pub freq_x: f64,
    pub freq_y: f64,
    pub norm: f64,
    pub alpha: f64,
}

impl BasisFunction {
    fn new(lat: &Lattice, index: usize, p: i64, q: i64, phase: Phase) -> Self {
        let (m1, m2) = lat.mode(p, q).expect("enumerated wavenumbers are lattice modes");
        let (freq_x, freq_y) = lat.frequencies(m1, m2);
        let area = lat.cell_area();
        let norm = if p == 0 && q == 0 {
            (1.0 / area).sqrt()
        } else {
            (2.0 / area).sqrt()
        };
        Self {
            index,
            m1,
            m2,
            p,
            q,
            phase,
            freq_x,
            freq_y,
            norm,
            alpha: freq_x * freq_x + freq_y * freq_y,
        }
    }

    pub fn is_constant(&self) -> bool {
        self.p == 0 && self.q == 0
    }

    pub fn value(&self, x: f64, y: f64) -> f64 {
        let arg = self.freq_x * x + self.freq_y * y;
        self.norm
            * match self.phase {
                Phase::Sin => arg.sin(),
                Phase::Cos => arg.cos(),
            }
    }
}

/// Wavenumber step between shells: 1 on odd lattices, 2 on even ones.
fn shell_step(parity: Parity) -> i64 {
    match parity {
        Parity::Odd => 1,
        Parity::Even => 2,
    }
}

/// Modes `(p, q)` of shell `s >= 1` in enumeration order.
pub fn shell_modes(parity: Parity, shell: usize) -> Vec<(i64, i64)> {
    let top = shell as i64 * shell_step(parity);
    let mut modes = Vec::with_capacity(2 * top as usize);
    modes.push((top, 0));
    for j in 1..top {
        modes.push((top - j, j));
        modes.push((top - j, -j));
    }
    modes.push((0, top));
    modes
}

/// Number of basis functions in shells `0..shells`, i.e. `2l^2 - 2l + 1`
/// (odd) or `4l^2 - 4l + 1` (even) with `l = shells`.
pub fn shell_complete_size(parity: Parity, shells: usize) -> usize {
    if shells == 0 {
        return 0;
    }
    let l = shells;
    match parity {
        Parity::Odd => 2 * l * l - 2 * l + 1,
        Parity::Even => 4 * l * l - 4 * l + 1,
    }
}

pub fn is_shell_complete(parity: Parity, m: usize) -> bool {
    (1..).map(|l| shell_complete_size(parity, l)).take_while(|&s| s <= m).any(|s| s == m)
}

/// Largest shell-complete size not exceeding `m`.
pub fn shell_complete_floor(parity: Parity, m: usize) -> usize {
    (1..)
        .map(|l| shell_complete_size(parity, l))
        .take_while(|&s| s <= m)
        .last()
        .unwrap_or(0)
}

/// Shell and in-shell position of `(p, q)`; ties in the sorted stream
/// fall back on this order.
fn enumeration_key(parity: Parity, p: i64, q: i64) -> (i64, i64) {
    let top = p + q.abs();
    let shell = top / shell_step(parity);
    let position = if q == 0 {
        0
    } else if p == 0 {
        2 * top - 1
    } else {
        2 * q.abs() - 1 + i64::from(q < 0)
    };
    (shell, position)
}

/// How the eigenfunctions are ordered before truncation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BasisOrder {
    /// Shell by shell as described above.
    #[default]
    Shell,
    /// By ascending eigenvalue, ties in shell order. Much more economical
    /// on long thin lattices, where shells are far from sorted.
    Alpha,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisEnumeration {
    pub lattice: Lattice,
    pub order: BasisOrder,
    pub functions: Vec<BasisFunction>,
    /// The truncation does not split a shell (shell order) or a group of
    /// tied eigenvalues (alpha order).
    pub shell_complete: bool,
}

impl BasisEnumeration {
    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    /// Function with 1-based index `i`.
    pub fn get(&self, i: usize) -> Option<&BasisFunction> {
        i.checked_sub(1).and_then(|k| self.functions.get(k))
    }
}

/// The first `m` eigenfunctions in enumeration order.
pub fn enumerate_basis(lat: &Lattice, m: usize) -> Result<BasisEnumeration> {
    let basis = enumerate_prefix(lat, m)?;
    if !basis.shell_complete {
        log::warn!(
            "basis size {m} splits a shell; nearest complete sizes are {} and {}",
            shell_complete_floor(lat.parity, m),
            (1..).map(|l| shell_complete_size(lat.parity, l)).find(|&s| s > m).unwrap_or(m)
        );
    }
    Ok(basis)
}

/// As [`enumerate_basis`] without the split-shell warning, for callers
/// that only need a prefix long enough to reach some index.
pub fn enumerate_prefix(lat: &Lattice, m: usize) -> Result<BasisEnumeration> {
    if m == 0 {
        return Err(Error::Basis("basis size must be at least 1".into()));
    }
    let shell_complete = is_shell_complete(lat.parity, m);
    let mut functions = Vec::with_capacity(m);
    functions.push(BasisFunction::new(lat, 1, 0, 0, Phase::Cos));
    let mut shell = 1;
    'outer: while functions.len() < m {
        for (p, q) in shell_modes(lat.parity, shell) {
            for phase in [Phase::Sin, Phase::Cos] {
                if functions.len() == m {
                    break 'outer;
                }
                let index = functions.len() + 1;
                functions.push(BasisFunction::new(lat, index, p, q, phase));
            }
        }
        shell += 1;
    }
    Ok(BasisEnumeration {
        lattice: *lat,
        order: BasisOrder::Shell,
        functions,
        shell_complete,
    })
}

/// The `m` eigenfunctions with the smallest eigenvalues.
pub fn enumerate_by_alpha(lat: &Lattice, m: usize) -> Result<BasisEnumeration> {
    if m == 0 {
        return Err(Error::Basis("basis size must be at least 1".into()));
    }
    // Weyl: about area * L / (4 pi) eigenvalues lie below L.
    let mut limit = 8.0 * PI * (m + 1) as f64 / lat.cell_area();
    let stream = loop {
        let stream = sorted_alpha_stream(lat, limit);
        if stream.len() > m {
            break stream;
        }
        limit *= 2.0;
    };
    let functions = stream.entries[..m]
        .iter()
        .enumerate()
        .map(|(k, e)| BasisFunction::new(lat, k + 1, e.p, e.q, e.phase))
        .collect();
    Ok(BasisEnumeration {
        lattice: *lat,
        order: BasisOrder::Alpha,
        functions,
        shell_complete: stream.entries[m - 1].alpha < stream.entries[m].alpha,
    })
}

/// First `m` functions in the requested order, without split warnings.
pub fn enumerate_ordered(lat: &Lattice, m: usize, order: BasisOrder) -> Result<BasisEnumeration> {
    match order {
        BasisOrder::Shell => enumerate_prefix(lat, m),
        BasisOrder::Alpha => enumerate_by_alpha(lat, m),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaEntry {
    pub alpha: f64,
    pub p: i64,
    pub q: i64,
    pub phase: Phase,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaStream {
    pub limit: f64,
    /// Every eigenvalue strictly below `limit`, once per eigenfunction, ascending.
    pub entries: Vec<AlphaEntry>,
    /// Eigenvalues within `1e-9` (relative) of `limit`, on either side.
    pub near_limit: Vec<f64>,
}

impl AlphaStream {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Relative distance below which an eigenvalue counts as touching a threshold.
pub const THRESHOLD_TOLERANCE: f64 = 1e-9;

/// All Laplacian eigenvalues below `limit` in ascending order, with
/// multiplicity.
///
/// A mode with `|w|^2 < limit` satisfies `|(m1, m2)| <= sqrt(limit) |N|_F / 2 pi`
/// where `N` holds the generators, so scanning that box is exhaustive.
pub fn sorted_alpha_stream(lat: &Lattice, limit: f64) -> AlphaStream {
    let frob = (lat.a1 * lat.a1 + lat.a2 * lat.a2 + lat.b1 * lat.b1 + lat.b2 * lat.b2).sqrt();
    let radius = (limit.max(0.0).sqrt() * frob / (2.0 * PI)).floor() as i64 + 1;
    let near = THRESHOLD_TOLERANCE * limit.abs().max(1.0);
    let mut entries = Vec::new();
    let mut near_limit = Vec::new();
    for m1 in -radius..=radius {
        for m2 in -radius..=radius {
            let (p, q) = lat.wavenumbers(m1, m2);
            // one representative per +/- pair
            let canonical = p > 0 || (p == 0 && q >= 0);
            if !canonical {
                continue;
            }
            let (fx, fy) = lat.frequencies(m1, m2);
            let alpha = fx * fx + fy * fy;
            let phases: &[Phase] = if p == 0 && q == 0 {
                &[Phase::Cos]
            } else {
                &[Phase::Sin, Phase::Cos]
            };
            if (alpha - limit).abs() <= near {
                near_limit.extend(phases.iter().map(|_| alpha));
            }
            if alpha < limit {
                entries.extend(phases.iter().map(|&phase| AlphaEntry { alpha, p, q, phase }));
            }
        }
    }
    let parity = lat.parity;
    entries.sort_by(|a, b| {
        a.alpha
            .total_cmp(&b.alpha)
            .then_with(|| enumeration_key(parity, a.p, a.q).cmp(&enumeration_key(parity, b.p, b.q)))
            .then_with(|| a.phase.cmp(&b.phase))
    });
    near_limit.sort_by(f64::total_cmp);
    AlphaStream { limit, entries, near_limit }
}

/// Number of Laplacian eigenvalues (with multiplicity) strictly below `limit`.
pub fn count_below(lat: &Lattice, limit: f64) -> usize {
    sorted_alpha_stream(lat, limit).len()
}
