//! Galerkin matrix `A = (alpha_i delta_ij - b_ij)` with `b_ij = ∫ V u_i u_j`.
//!
//! `V` has periods `x_period / 2` and `y_period / 2`, so it is sampled on
//! that small cell only. The cell tiles the integration rectangle, which
//! for even `l` is the sheared fundamental domain cut along `(0, y_period)`
//! and re-glued onto `[0, a1) x [0, b2)`.
//!
//! Two independent routes give `b_ij`:
//!
//! * Fourier: a 2D FFT of the cell samples yields the cosine coefficients
//!   `C(P, Q) = (1/area) ∫ V cos(2 pi P x / W) cos(2 pi Q y / Y)`, and a
//!   product-to-sum expansion gives
//!   `b_ij = c_i c_j area / 2 (C(p_i - p_j, q_i - q_j) ± C(p_i + p_j, q_i + q_j))`
//!   with `+` for two cosines and `-` for two sines. Mixed phases vanish
//!   because `V` is even.
//! * Quadrature: the periodic trapezoid rule for `V u_i u_j` over the
//!   whole integration rectangle.

use std::path::PathBuf;
use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::basis::{enumerate_ordered, BasisEnumeration, BasisFunction, BasisOrder, Phase};
use crate::cache::{CacheKey, FourierCache};
use crate::error::{Error, Result};
use crate::surface::{potential_from_product, Lattice, Parity, SurfaceParams};

pub const DEFAULT_GRID: usize = 1024;
pub const MAX_GRID: usize = 8192;
pub const MIN_GRID: usize = 64;
/// Largest entry change tolerated when the grid is doubled.
pub const CONVERGENCE_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Fourier,
    Quadrature,
}

/// Largest torus wavenumbers `|P|, |Q|` whose coefficients must be kept.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Band {
    pub p_max: i64,
    pub q_max: i64,
}

impl Band {
    /// Band reached by all products of the given functions.
    pub fn for_functions<'a>(functions: impl IntoIterator<Item = &'a BasisFunction>) -> Self {
        let (p, q) = functions
            .into_iter()
            .fold((0, 0), |(p, q), u| (p.max(u.p.abs()), q.max(u.q.abs())));
        Self { p_max: 2 * p, q_max: 2 * q }
    }
}

/// Cosine coefficients of `V` on its period cell, addressed by torus
/// wavenumbers. Only multiples of `stride` can be nonzero.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientTable {
    pub stride_p: i64,
    pub stride_q: i64,
    pub a_max: usize,
    pub b_max: usize,
    /// Row-major over `a in 0..=a_max`, `b in 0..=b_max`.
    pub values: Vec<f64>,
}

impl CoefficientTable {
    pub fn band(&self) -> Band {
        Band {
            p_max: self.a_max as i64 * self.stride_p + self.stride_p - 1,
            q_max: self.b_max as i64 * self.stride_q + self.stride_q - 1,
        }
    }

    pub fn covers(&self, band: Band) -> bool {
        band.p_max / self.stride_p <= self.a_max as i64 && band.q_max / self.stride_q <= self.b_max as i64
    }

    /// `C(p, q)`; exactly zero off the stride lattice.
    pub fn get(&self, p: i64, q: i64) -> Result<f64> {
        let (p, q) = (p.abs(), q.abs());
        if p % self.stride_p != 0 || q % self.stride_q != 0 {
            return Ok(0.0);
        }
        let (a, b) = ((p / self.stride_p) as usize, (q / self.stride_q) as usize);
        if a > self.a_max || b > self.b_max {
            return Err(Error::MissingCoefficient { p, q });
        }
        Ok(self.values[a * (self.b_max + 1) + b])
    }
}

#[derive(Debug, Clone)]
enum Samples {
    /// `V = potential(f(x_i) g(y_j))`, stored as the two 1D factors.
    Separable { f: Vec<f64>, g: Vec<f64>, mean_curvature: f64 },
    /// Row-major `nx * ny` values.
    Dense(Vec<f64>),
}

/// Samples of `V` on its period cell together with its cosine coefficients.
#[derive(Debug, Clone)]
pub struct PotentialField {
    pub lattice: Lattice,
    pub nx: usize,
    pub ny: usize,
    /// Cell extent; `reference_width / stride_p` by `reference_height / stride_q`.
    pub cell: (f64, f64),
    pub coefficients: CoefficientTable,
    /// Largest deviation of the transform from a pure cosine-cosine
    /// series; zero up to rounding for an even potential.
    pub sine_residual: f64,
    samples: Samples,
}

fn check_grid(nx: usize, ny: usize) -> Result<()> {
    for n in [nx, ny] {
        if n < MIN_GRID || !n.is_power_of_two() {
            return Err(Error::Parameter(format!(
                "grid sizes must be powers of two and at least {MIN_GRID}, got {nx}x{ny}"
            )));
        }
    }
    Ok(())
}

/// Samples the Wente potential on its period cell and transforms it,
/// keeping the coefficients needed for `band`.
pub fn sample_potential(p: &SurfaceParams, nx: usize, ny: usize, band: Band) -> Result<PotentialField> {
    let (samples, stride, lattice) = separable_samples(p, nx, ny)?;
    let coefficients = transform(&samples, nx, ny, stride, band)?;
    PotentialField::assemble_parts(lattice, nx, ny, stride, samples, coefficients)
}

fn separable_samples(p: &SurfaceParams, nx: usize, ny: usize) -> Result<(Samples, (i64, i64), Lattice)> {
    check_grid(nx, ny)?;
    let (hx, hy) = (0.5 * p.x_period / nx as f64, 0.5 * p.y_period / ny as f64);
    let f = (0..nx).map(|i| p.f(i as f64 * hx)).collect();
    let g = (0..ny).map(|j| p.g(j as f64 * hy)).collect();
    let stride = (2 * i64::from(p.label.n()), 2);
    Ok((
        Samples::Separable { f, g, mean_curvature: p.mean_curvature },
        stride,
        p.lattice(),
    ))
}

impl PotentialField {
    /// Field from arbitrary cell samples, row-major in `x`. The cell is
    /// `reference_width / stride.0` by `reference_height / stride.1` and
    /// must tile the integration rectangle; the samples are assumed even
    /// in both variables.
    pub fn from_samples(
        lattice: Lattice,
        stride: (i64, i64),
        nx: usize,
        ny: usize,
        values: Vec<f64>,
        band: Band,
    ) -> Result<Self> {
        check_grid(nx, ny)?;
        if values.len() != nx * ny {
            return Err(Error::Parameter(format!(
                "expected {} samples, got {}",
                nx * ny,
                values.len()
            )));
        }
        if stride.0 < 1 || stride.1 < 1 {
            return Err(Error::Parameter("strides must be positive".into()));
        }
        let samples = Samples::Dense(values);
        let coefficients = transform(&samples, nx, ny, stride, band)?;
        Self::assemble_parts(lattice, nx, ny, stride, samples, coefficients)
    }

    /// Constant potential `V = c`.
    pub fn constant(lattice: Lattice, c: f64, nx: usize, ny: usize, band: Band) -> Result<Self> {
        let stride = match lattice.parity {
            Parity::Odd => (1, 1),
            Parity::Even => (2, 2),
        };
        Self::from_samples(lattice, stride, nx, ny, vec![c; nx * ny], band)
    }

    fn assemble_parts(
        lattice: Lattice,
        nx: usize,
        ny: usize,
        stride: (i64, i64),
        samples: Samples,
        (coefficients, sine_residual): (CoefficientTable, f64),
    ) -> Result<Self> {
        if lattice.parity == Parity::Even && (stride.0 % 2 != 0 || stride.1 % 2 != 0) {
            return Err(Error::Parameter(
                "on an even lattice the cell must have even strides to be lattice periodic".into(),
            ));
        }
        let cell = (
            lattice.reference_width() / stride.0 as f64,
            lattice.reference_height() / stride.1 as f64,
        );
        Ok(Self {
            lattice,
            nx,
            ny,
            cell,
            coefficients,
            sine_residual,
            samples,
        })
    }

    /// `V` at cell node `(i, j)`.
    pub fn sample(&self, i: usize, j: usize) -> f64 {
        match &self.samples {
            Samples::Separable { f, g, mean_curvature } => potential_from_product(*mean_curvature, f[i] * g[j]),
            Samples::Dense(v) => v[i * self.ny + j],
        }
    }

    pub fn coefficient(&self, p: i64, q: i64) -> Result<f64> {
        self.coefficients.get(p, q)
    }

    /// Mean of `V` over the torus.
    pub fn mean(&self) -> f64 {
        self.coefficients.values[0]
    }

    /// Number of cells across the integration rectangle in each direction.
    fn cells_per_rectangle(&self) -> (usize, usize) {
        let (sx, sy) = (self.coefficients.stride_p as usize, self.coefficients.stride_q as usize);
        match self.lattice.parity {
            Parity::Odd => (sx, sy),
            Parity::Even => (sx / 2, sy),
        }
    }

    /// Quadrature grid on the integration rectangle.
    pub fn rectangle_grid(&self) -> (usize, usize) {
        let (cx, cy) = self.cells_per_rectangle();
        (cx * self.nx, cy * self.ny)
    }
}

/// Streamed 2D FFT of the cell samples: transform each `x` row along `y`,
/// keep the band's `y` bins, then transform those columns along `x`.
fn transform(
    samples: &Samples,
    nx: usize,
    ny: usize,
    (sx, sy): (i64, i64),
    band: Band,
) -> Result<(CoefficientTable, f64)> {
    let a_max = (band.p_max.max(0) / sx) as usize;
    let b_max = (band.q_max.max(0) / sy) as usize;
    if 2 * a_max >= nx || 2 * b_max >= ny {
        return Err(Error::Parameter(format!(
            "a {nx}x{ny} grid cannot resolve coefficients up to ({}, {})",
            band.p_max, band.q_max
        )));
    }
    let mut planner = FftPlanner::<f64>::new();
    let fft_y: Arc<dyn Fft<f64>> = planner.plan_fft_forward(ny);
    let fft_x: Arc<dyn Fft<f64>> = planner.plan_fft_forward(nx);
    let bins_y = |b: i64| b.rem_euclid(ny as i64) as usize;
    let bins_x = |a: i64| a.rem_euclid(nx as i64) as usize;
    let kept: Vec<i64> = (-(b_max as i64)..=b_max as i64).collect();

    let rows: Vec<Vec<Complex64>> = (0..nx)
        .into_par_iter()
        .map(|i| {
            let mut row: Vec<Complex64> = match samples {
                Samples::Separable { f, g, mean_curvature } => g
                    .iter()
                    .map(|&gj| Complex64::new(potential_from_product(*mean_curvature, f[i] * gj), 0.0))
                    .collect(),
                Samples::Dense(v) => v[i * ny..(i + 1) * ny].iter().map(|&x| Complex64::new(x, 0.0)).collect(),
            };
            fft_y.process(&mut row);
            kept.iter().map(|&b| row[bins_y(b)]).collect()
        })
        .collect();

    let scale = 1.0 / (nx as f64 * ny as f64);
    // columns[t][a + a_max] = F(a, kept[t])
    let columns: Vec<Vec<Complex64>> = (0..kept.len())
        .into_par_iter()
        .map(|t| {
            let mut col: Vec<Complex64> = rows.iter().map(|r| r[t]).collect();
            fft_x.process(&mut col);
            (-(a_max as i64)..=a_max as i64).map(|a| col[bins_x(a)] * scale).collect()
        })
        .collect();

    let at = |a: i64, b: i64| columns[(b + b_max as i64) as usize][(a + a_max as i64) as usize];
    let mut values = Vec::with_capacity((a_max + 1) * (b_max + 1));
    let mut residual = 0.0f64;
    for a in 0..=a_max as i64 {
        for b in 0..=b_max as i64 {
            let quad = [at(a, b), at(-a, b), at(a, -b), at(-a, -b)];
            let cc = 0.25 * quad.iter().map(|z| z.re).sum::<f64>();
            for z in quad {
                residual = residual.max((z - Complex64::new(cc, 0.0)).norm());
            }
            values.push(cc);
        }
    }
    Ok((
        CoefficientTable {
            stride_p: sx,
            stride_q: sy,
            a_max,
            b_max,
            values,
        },
        residual,
    ))
}

/// `b_ij` from the cosine coefficients of `V`.
pub fn b_entry_fourier(field: &PotentialField, ui: &BasisFunction, uj: &BasisFunction) -> Result<f64> {
    if ui.phase != uj.phase {
        return Ok(0.0);
    }
    let diff = field.coefficient(ui.p - uj.p, ui.q - uj.q)?;
    let sum = field.coefficient(ui.p + uj.p, ui.q + uj.q)?;
    let combined = match ui.phase {
        Phase::Cos => diff + sum,
        Phase::Sin => diff - sum,
    };
    Ok(ui.norm * uj.norm * field.lattice.cell_area() * 0.5 * combined)
}

/// Values `(cos(w t_k), sin(w t_k))` on a uniform grid.
fn trig_table(w: f64, h: f64, n: usize) -> Vec<(f64, f64)> {
    (0..n)
        .map(|k| {
            let (s, c) = (w * k as f64 * h).sin_cos();
            (c, s)
        })
        .collect()
}

/// `b_ij` by the periodic trapezoid rule over the integration rectangle.
pub fn b_entry_quadrature(field: &PotentialField, ui: &BasisFunction, uj: &BasisFunction) -> Result<f64> {
    let (nrx, nry) = field.rectangle_grid();
    let (hx, hy) = (field.cell.0 / field.nx as f64, field.cell.1 / field.ny as f64);
    let phase_x = (ui.freq_x.abs() + uj.freq_x.abs()) * hx;
    let phase_y = (ui.freq_y.abs() + uj.freq_y.abs()) * hy;
    if phase_x >= std::f64::consts::PI || phase_y >= std::f64::consts::PI {
        return Err(Error::Nyquist {
            nx: nrx,
            ny: nry,
            i: ui.index,
            j: uj.index,
        });
    }
    let (xi, yi) = (trig_table(ui.freq_x, hx, nrx), trig_table(ui.freq_y, hy, nry));
    let (xj, yj) = (trig_table(uj.freq_x, hx, nrx), trig_table(uj.freq_y, hy, nry));
    let value = |phase: Phase, (cx, sx): (f64, f64), (cy, sy): (f64, f64)| match phase {
        Phase::Sin => sx * cy + cx * sy,
        Phase::Cos => cx * cy - sx * sy,
    };
    let mut total = 0.0;
    for ix in 0..nrx {
        let cell_i = ix % field.nx;
        let mut row = 0.0;
        for iy in 0..nry {
            let v = field.sample(cell_i, iy % field.ny);
            row += v * value(ui.phase, xi[ix], yi[iy]) * value(uj.phase, xj[ix], yj[iy]);
        }
        total += row;
    }
    Ok(total * hx * hy * ui.norm * uj.norm)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssemblyConfig {
    pub method: Method,
    pub order: BasisOrder,
    /// Initial cell grid (square).
    pub grid: usize,
    pub max_grid: usize,
    pub tolerance: f64,
    /// Double the grid and compare before accepting.
    pub verify_convergence: bool,
    pub cache_dir: Option<PathBuf>,
}

impl Default for AssemblyConfig {
    fn default() -> Self {
        Self {
            method: Method::Fourier,
            order: BasisOrder::Shell,
            grid: DEFAULT_GRID,
            max_grid: MAX_GRID,
            tolerance: CONVERGENCE_TOLERANCE,
            verify_convergence: true,
            cache_dir: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub method: Method,
    pub order: BasisOrder,
    pub nx: usize,
    pub ny: usize,
    pub tolerance: f64,
    /// Largest entry change against the doubled grid, when checked.
    pub grid_change: Option<f64>,
    pub sine_residual: f64,
    /// Not serialized, so reports from cold and warm caches are identical.
    #[serde(skip)]
    pub cache_hit: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GalerkinMatrix {
    pub surface: SurfaceParams,
    /// 1-based basis positions of the rows, ascending.
    pub indices: Vec<usize>,
    pub alphas: Vec<f64>,
    pub entries: DMatrix<f64>,
    pub provenance: Provenance,
}

impl GalerkinMatrix {
    pub fn m(&self) -> usize {
        self.indices.len()
    }

    /// Entry for 1-based basis positions `i`, `j`.
    pub fn entry(&self, i: usize, j: usize) -> Option<f64> {
        let r = self.indices.binary_search(&i).ok()?;
        let c = self.indices.binary_search(&j).ok()?;
        Some(self.entries[(r, c)])
    }

    /// Principal submatrix on the given basis positions.
    pub fn submatrix(&self, indices: &[usize]) -> Result<GalerkinMatrix> {
        let sorted = normalize_indices(indices)?;
        let rows: Vec<usize> = sorted
            .iter()
            .map(|i| {
                self.indices
                    .binary_search(i)
                    .map_err(|_| Error::Basis(format!("index {i} is not part of this matrix")))
            })
            .collect::<Result<_>>()?;
        let entries = DMatrix::from_fn(rows.len(), rows.len(), |r, c| self.entries[(rows[r], rows[c])]);
        Ok(GalerkinMatrix {
            surface: self.surface.clone(),
            indices: sorted,
            alphas: rows.iter().map(|&r| self.alphas[r]).collect(),
            entries,
            provenance: self.provenance.clone(),
        })
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.entries.row_iter().map(|r| r.iter().copied().collect()).collect()
    }
}

fn normalize_indices(indices: &[usize]) -> Result<Vec<usize>> {
    if indices.is_empty() {
        return Err(Error::Basis("index set is empty".into()));
    }
    let mut sorted = indices.to_vec();
    sorted.sort_unstable();
    if sorted[0] == 0 {
        return Err(Error::Basis("basis indices are 1-based".into()));
    }
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Basis("basis indices must be distinct".into()));
    }
    Ok(sorted)
}

/// `A_m` on the first `m` basis functions.
pub fn assemble(p: &SurfaceParams, m: usize, cfg: &AssemblyConfig) -> Result<GalerkinMatrix> {
    if m == 0 {
        return Err(Error::Basis("basis size must be at least 1".into()));
    }
    let indices: Vec<usize> = (1..=m).collect();
    assemble_indices(p, &indices, cfg)
}

/// Galerkin matrix restricted to the given basis positions (1-based, in
/// the configured order).
pub fn assemble_indices(p: &SurfaceParams, indices: &[usize], cfg: &AssemblyConfig) -> Result<GalerkinMatrix> {
    let indices = normalize_indices(indices)?;
    let basis = enumerate_ordered(&p.lattice(), *indices.last().expect("nonempty"), cfg.order)?;
    assemble_selection(p, &basis, indices, cfg)
}

/// Galerkin matrix on a whole enumeration.
pub fn assemble_basis(p: &SurfaceParams, basis: &BasisEnumeration, cfg: &AssemblyConfig) -> Result<GalerkinMatrix> {
    if basis.lattice != p.lattice() {
        return Err(Error::Basis("basis was enumerated on a different lattice".into()));
    }
    let cfg = AssemblyConfig {
        order: basis.order,
        ..cfg.clone()
    };
    assemble_selection(p, basis, (1..=basis.len()).collect(), &cfg)
}

fn assemble_selection(
    p: &SurfaceParams,
    basis: &BasisEnumeration,
    indices: Vec<usize>,
    cfg: &AssemblyConfig,
) -> Result<GalerkinMatrix> {
    let functions: Vec<BasisFunction> = indices.iter().map(|&i| basis.functions[i - 1]).collect();
    let band = Band::for_functions(&functions);
    let cache = cfg.cache_dir.as_ref().map(|d| FourierCache::new(d.clone()));

    let mut grid = cfg.grid;
    if grid > cfg.max_grid {
        return Err(Error::Parameter(format!("grid {grid} exceeds the cap {}", cfg.max_grid)));
    }
    let (field, hit) = field_for(p, grid, band, cache.as_ref())?;
    let mut accepted = build_matrix(&field, &functions, cfg.method)?;
    let mut provenance = Provenance {
        method: cfg.method,
        order: cfg.order,
        nx: grid,
        ny: grid,
        tolerance: cfg.tolerance,
        grid_change: None,
        sine_residual: field.sine_residual,
        cache_hit: hit,
    };
    if cfg.verify_convergence {
        loop {
            let finer = 2 * grid;
            if finer > cfg.max_grid {
                return Err(Error::GridNotConverged {
                    nx: grid,
                    ny: grid,
                    change: provenance.grid_change.unwrap_or(f64::INFINITY),
                    tolerance: cfg.tolerance,
                });
            }
            let (fine_field, fine_hit) = field_for(p, finer, band, cache.as_ref())?;
            let fine = build_matrix(&fine_field, &functions, cfg.method)?;
            let change = (&fine - &accepted).amax();
            log::debug!("{}: grid {grid} -> {finer} changes entries by {change:.3e}", p.label);
            provenance.grid_change = Some(change);
            if change <= cfg.tolerance {
                break;
            }
            log::info!("{}: grid {grid} not converged ({change:.3e}), refining", p.label);
            grid = finer;
            accepted = fine;
            provenance.nx = grid;
            provenance.ny = grid;
            provenance.sine_residual = fine_field.sine_residual;
            provenance.cache_hit = fine_hit;
        }
    }
    Ok(GalerkinMatrix {
        surface: p.clone(),
        indices,
        alphas: functions.iter().map(|u| u.alpha).collect(),
        entries: accepted,
        provenance,
    })
}

/// The potential field for a square grid, through the cache when one is set.
fn field_for(p: &SurfaceParams, grid: usize, band: Band, cache: Option<&FourierCache>) -> Result<(PotentialField, bool)> {
    let Some(cache) = cache else {
        return Ok((sample_potential(p, grid, grid, band)?, false));
    };
    let key = CacheKey::new(p, grid, grid);
    let (samples, stride, lattice) = separable_samples(p, grid, grid)?;
    if let Some((table, residual)) = cache.load(&key)? {
        if table.covers(band) && (table.stride_p, table.stride_q) == stride {
            let field = PotentialField::assemble_parts(lattice, grid, grid, stride, samples, (table, residual))?;
            return Ok((field, true));
        }
    }
    let coefficients = transform(&samples, grid, grid, stride, band)?;
    cache.store(&key, &coefficients.0, coefficients.1)?;
    Ok((PotentialField::assemble_parts(lattice, grid, grid, stride, samples, coefficients)?, false))
}

/// Galerkin entries for `functions` against `field`. Each unordered pair is
/// computed once and mirrored, and entries with mixed phases are never
/// evaluated.
pub fn build_matrix(field: &PotentialField, functions: &[BasisFunction], method: Method) -> Result<DMatrix<f64>> {
    let entry = |ui: &BasisFunction, uj: &BasisFunction| match method {
        Method::Fourier => b_entry_fourier(field, ui, uj),
        Method::Quadrature => b_entry_quadrature(field, ui, uj),
    };
    let lower: Vec<Vec<f64>> = functions
        .par_iter()
        .enumerate()
        .map(|(r, ui)| {
            (0..=r)
                .map(|c| {
                    let uj = &functions[c];
                    if ui.phase != uj.phase {
                        return Ok(0.0);
                    }
                    let b = entry(ui, uj)?;
                    Ok(if r == c { ui.alpha - b } else { -b })
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let m = functions.len();
    let mut a = DMatrix::zeros(m, m);
    for (r, row) in lower.iter().enumerate() {
        for (c, &v) in row.iter().enumerate() {
            a[(r, c)] = v;
            a[(c, r)] = v;
        }
    }
    Ok(a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::enumerate_basis;
    use crate::surface::build_surface;
    use approx::assert_relative_eq;

    fn w32() -> SurfaceParams {
        build_surface(3, 2, 0.5, 17.7324).unwrap()
    }

    fn w43() -> SurfaceParams {
        build_surface(4, 3, 0.5, 12.7898).unwrap()
    }

    fn fast() -> AssemblyConfig {
        AssemblyConfig {
            grid: 128,
            ..AssemblyConfig::default()
        }
    }

    #[test]
    fn constant_potential_has_only_the_mean() {
        for p in [w32(), w43()] {
            let lat = p.lattice();
            let band = Band { p_max: 12, q_max: 12 };
            let field = PotentialField::constant(lat, 3.5, 64, 64, band).unwrap();
            assert_relative_eq!(field.mean(), 3.5, max_relative = 1e-15);
            for a in 0..=12 {
                for b in 0..=12 {
                    if (a, b) != (0, 0) {
                        assert!(field.coefficient(a, b).unwrap().abs() < 1e-14);
                    }
                }
            }
            let basis = enumerate_basis(&lat, 25).unwrap();
            let u1 = &basis.functions[0];
            assert_relative_eq!(b_entry_fourier(&field, u1, u1).unwrap(), 3.5, max_relative = 1e-14);
            assert_relative_eq!(b_entry_quadrature(&field, u1, u1).unwrap(), 3.5, max_relative = 1e-13);
        }
    }

    #[test]
    fn zero_potential_gives_laplacian_diagonal() {
        let lat = w32().lattice();
        let basis = enumerate_basis(&lat, 41).unwrap();
        let field = PotentialField::constant(lat, 0.0, 64, 64, Band::for_functions(&basis.functions)).unwrap();
        let a = build_matrix(&field, &basis.functions, Method::Fourier).unwrap();
        for (r, u) in basis.functions.iter().enumerate() {
            for c in 0..41 {
                assert_eq!(a[(r, c)], if r == c { u.alpha } else { 0.0 });
            }
        }
    }

    #[test]
    fn mean_matches_trapezoid_at_two_resolutions() {
        let p = w32();
        let band = Band { p_max: 0, q_max: 0 };
        let coarse = sample_potential(&p, 256, 256, band).unwrap().mean();
        let fine = sample_potential(&p, 512, 512, band).unwrap().mean();
        assert!((coarse - fine).abs() < 1e-9, "{coarse} vs {fine}");
        // independent plain double sum of V over the cell
        let (n, hx, hy) = (300usize, 0.5 * p.x_period / 300.0, 0.5 * p.y_period / 300.0);
        let direct: f64 = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| p.potential(i as f64 * hx, j as f64 * hy))
            .sum::<f64>()
            / (n * n) as f64;
        assert_relative_eq!(fine, direct, max_relative = 1e-9);
    }

    #[test]
    fn sine_channel_vanishes() {
        for p in [w32(), w43()] {
            let field = sample_potential(&p, 256, 256, Band { p_max: 40, q_max: 40 }).unwrap();
            assert!(field.sine_residual < 1e-10, "{}", field.sine_residual);
        }
    }

    #[test]
    fn coefficients_off_the_symmetry_lattice_vanish() {
        // Sample V over the whole odd-lattice rectangle and check that only
        // multiples of (2n, 2) survive.
        let p = w32();
        let lat = p.lattice();
        let (nx, ny) = (256, 128);
        let (hx, hy) = (lat.a1 / nx as f64, lat.b2 / ny as f64);
        let values: Vec<f64> = (0..nx)
            .flat_map(|i| (0..ny).map(move |j| (i, j)))
            .map(|(i, j)| p.potential(i as f64 * hx, j as f64 * hy))
            .collect();
        let band = Band { p_max: 12, q_max: 8 };
        let whole = PotentialField::from_samples(lat, (1, 1), nx, ny, values, band).unwrap();
        let cell = sample_potential(&p, 64, 64, band).unwrap();
        for a in 0..=12 {
            for b in 0..=8 {
                let c = whole.coefficient(a, b).unwrap();
                if a % 4 == 0 && b % 2 == 0 {
                    assert!((c - cell.coefficient(a, b).unwrap()).abs() < 1e-10, "({a},{b})");
                } else {
                    assert!(c.abs() < 1e-10, "C({a},{b}) = {c}");
                }
            }
        }
    }

    #[test]
    fn missing_band_is_an_error() {
        let p = w32();
        let field = sample_potential(&p, 64, 64, Band { p_max: 4, q_max: 2 }).unwrap();
        assert!(matches!(field.coefficient(8, 0), Err(Error::MissingCoefficient { .. })));
        assert_eq!(field.coefficient(3, 1).unwrap(), 0.0);
        assert!(sample_potential(&p, 64, 64, Band { p_max: 200, q_max: 0 }).is_err());
        assert!(sample_potential(&p, 32, 64, Band { p_max: 0, q_max: 0 }).is_err());
        assert!(sample_potential(&p, 96, 64, Band { p_max: 0, q_max: 0 }).is_err());
    }

    #[test]
    fn quadrature_rejects_unresolved_products() {
        let p = w32();
        let lat = p.lattice();
        let basis = enumerate_basis(&lat, 2245).unwrap();
        let field = sample_potential(&p, 64, 64, Band { p_max: 0, q_max: 0 }).unwrap();
        let last = basis.functions.last().unwrap();
        assert!(matches!(
            b_entry_quadrature(&field, last, last),
            Err(Error::Nyquist { .. })
        ));
    }

    #[test]
    fn fourier_and_quadrature_agree() {
        for p in [w32(), w43()] {
            let lat = p.lattice();
            let basis = enumerate_basis(&lat, 41).unwrap();
            let field = sample_potential(&p, 128, 128, Band::for_functions(&basis.functions)).unwrap();
            for i in (0..41).step_by(3) {
                for j in (0..41).step_by(4) {
                    let (ui, uj) = (&basis.functions[i], &basis.functions[j]);
                    let f = b_entry_fourier(&field, ui, uj).unwrap();
                    let q = b_entry_quadrature(&field, ui, uj).unwrap();
                    assert!((f - q).abs() <= 1e-9 * f.abs().max(1.0), "{} ({},{}) {f} vs {q}", p.label, i + 1, j + 1);
                }
            }
        }
    }

    #[test]
    fn zero_rules() {
        let p = w32();
        let lat = p.lattice();
        let basis = enumerate_basis(&lat, 41).unwrap();
        let field = sample_potential(&p, 128, 128, Band::for_functions(&basis.functions)).unwrap();
        let u1 = &basis.functions[0];
        for uj in &basis.functions[1..] {
            let on_symmetry_lattice = uj.phase == Phase::Cos && uj.p % 4 == 0 && uj.q % 2 == 0;
            let f = b_entry_fourier(&field, u1, uj).unwrap();
            if !on_symmetry_lattice {
                assert_eq!(f, 0.0, "b_1,{}", uj.index);
                assert!(b_entry_quadrature(&field, u1, uj).unwrap().abs() < 1e-10);
            }
        }
        let a = build_matrix(&field, &basis.functions, Method::Fourier).unwrap();
        for i in 0..41 {
            for j in 0..41 {
                if (i + j) % 2 == 1 {
                    assert_eq!(a[(i, j)], 0.0);
                }
            }
        }
    }

    #[test]
    fn first_diagonal_entry() {
        let a = assemble(&w32(), 1, &fast()).unwrap();
        assert!((a.entries[(0, 0)] + 9.50).abs() < 0.005, "{}", a.entries[(0, 0)]);
        assert!(a.provenance.grid_change.unwrap() < 1e-8);
    }

    #[test]
    fn matrix_is_exactly_symmetric_and_thread_independent() {
        let p = w43();
        let a = assemble(&p, 49, &fast()).unwrap();
        assert_eq!(a.entries, a.entries.transpose());
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| assemble(&p, 49, &fast()).unwrap());
        assert_eq!(a.entries, b.entries);
    }

    #[test]
    fn subsets_match_submatrices() {
        let p = w32();
        let full = assemble(&p, 25, &fast()).unwrap();
        let idx = [1, 2, 3, 4, 5, 7, 8, 9, 17];
        let sub = assemble_indices(&p, &idx, &fast()).unwrap();
        let cut = full.submatrix(&idx).unwrap();
        assert_eq!(sub.indices, cut.indices);
        assert!((&sub.entries - &cut.entries).amax() < 1e-12);
        assert_eq!(sub.entry(17, 17), cut.entry(17, 17));
        assert!(full.submatrix(&[]).is_err());
        assert!(full.submatrix(&[1, 1]).is_err());
        assert!(full.submatrix(&[26]).is_err());
    }

    #[test]
    fn unconverged_grid_is_reported() {
        let cfg = AssemblyConfig {
            grid: 64,
            max_grid: 64,
            ..AssemblyConfig::default()
        };
        assert!(matches!(assemble(&w32(), 5, &cfg), Err(Error::GridNotConverged { .. })));
    }
}
