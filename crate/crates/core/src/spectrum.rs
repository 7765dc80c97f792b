//! Spectrum of the Galerkin matrix and negative-eigenvalue counting.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::assembly::GalerkinMatrix;
use crate::error::{Error, Result};

/// Default zero tolerance relative to `|A|_2`.
pub const DEFAULT_RELATIVE_ZERO_TOL: f64 = 1e-6;
/// Largest accepted eigenpair residual relative to `|A|_2`.
pub const RESIDUAL_TOLERANCE: f64 = 1e-10;
const SYMMETRY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct SpectrumEstimate {
    pub m: usize,
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Column `i` is the unit eigenvector of `eigenvalues[i]`.
    pub eigenvectors: DMatrix<f64>,
    /// Spectral norm `max |lambda|`.
    pub norm: f64,
    pub zero_tol: f64,
    pub negative_count: usize,
    pub uncertain_count: usize,
    /// Largest `|A v - lambda v|_2` over all returned pairs.
    pub residual_bound: f64,
    pub first_positive_six: Vec<f64>,
}

/// Interval covered by a group of eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub low: f64,
    pub high: f64,
}

impl Range {
    pub fn of(values: &[f64]) -> Option<Self> {
        Some(Self {
            low: *values.first()?,
            high: *values.last()?,
        })
    }
}

impl SpectrumEstimate {
    pub fn negative_range(&self) -> Option<Range> {
        Range::of(&self.eigenvalues[..self.negative_count])
    }

    pub fn positive_six_range(&self) -> Option<Range> {
        Range::of(&self.first_positive_six)
    }

    pub fn max_eigenvalue(&self) -> f64 {
        *self.eigenvalues.last().expect("nonempty spectrum")
    }
}

pub fn eigen_symmetric(a: &GalerkinMatrix) -> Result<SpectrumEstimate> {
    decompose(&a.entries, None)
}

/// Full symmetric eigendecomposition. `zero_tol` defaults to
/// `1e-6 |A|_2`.
pub fn decompose(a: &DMatrix<f64>, zero_tol: Option<f64>) -> Result<SpectrumEstimate> {
    let m = a.nrows();
    if m == 0 || a.ncols() != m {
        return Err(Error::Numerical(format!("expected a nonempty square matrix, got {}x{}", m, a.ncols())));
    }
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numerical("matrix has non-finite entries".into()));
    }
    let asym = (a - a.transpose()).amax();
    if asym > SYMMETRY_TOLERANCE * a.amax().max(1.0) {
        return Err(Error::NotSymmetric(asym));
    }

    // Mixed phases never couple and V has few frequencies, so A is
    // usually block diagonal up to a permutation; each block is solved on
    // its own.
    let mut values = Vec::with_capacity(m);
    let mut vectors = DMatrix::zeros(m, m);
    let mut residual_bound = 0.0f64;
    for block in coupled_blocks(a) {
        let sub = a.select_rows(&block).select_columns(&block);
        let eig = SymmetricEigen::new(sub.clone());
        let mut residual = &sub * &eig.eigenvectors;
        for (c, &l) in eig.eigenvalues.iter().enumerate() {
            residual.column_mut(c).axpy(-l, &eig.eigenvectors.column(c), 1.0);
        }
        residual_bound = residual.column_iter().map(|c| c.norm()).fold(residual_bound, f64::max);
        for (c, &l) in eig.eigenvalues.iter().enumerate() {
            let col = values.len();
            values.push(l);
            for (r, &row) in block.iter().enumerate() {
                vectors[(row, col)] = eig.eigenvectors[(r, c)];
            }
        }
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]).then(i.cmp(&j)));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| values[i]).collect();
    let eigenvectors = vectors.select_columns(&order);

    let norm = eigenvalues[0].abs().max(eigenvalues[m - 1].abs());
    if residual_bound > RESIDUAL_TOLERANCE * norm.max(f64::MIN_POSITIVE) {
        return Err(Error::Numerical(format!(
            "eigenpair residual {residual_bound:.3e} exceeds {RESIDUAL_TOLERANCE:.0e} |A|"
        )));
    }

    let zero_tol = zero_tol.unwrap_or(DEFAULT_RELATIVE_ZERO_TOL * norm);
    let mut est = SpectrumEstimate {
        m,
        eigenvalues,
        eigenvectors,
        norm,
        zero_tol,
        negative_count: 0,
        uncertain_count: 0,
        residual_bound,
        first_positive_six: Vec::new(),
    };
    (est.negative_count, est.uncertain_count) = count_negative(&est, zero_tol);
    est.first_positive_six = est.eigenvalues.iter().filter(|&&l| l > zero_tol).take(6).copied().collect();
    Ok(est)
}

/// Index sets of the connected components of the nonzero pattern, each
/// ascending, ordered by smallest member.
fn coupled_blocks(a: &DMatrix<f64>) -> Vec<Vec<usize>> {
    let m = a.nrows();
    let mut label = vec![usize::MAX; m];
    let mut blocks = Vec::new();
    for start in 0..m {
        if label[start] != usize::MAX {
            continue;
        }
        let id = blocks.len();
        label[start] = id;
        let mut members = vec![start];
        let mut next = 0;
        while next < members.len() {
            let r = members[next];
            next += 1;
            for c in 0..m {
                if label[c] == usize::MAX && a[(r, c)] != 0.0 {
                    label[c] = id;
                    members.push(c);
                }
            }
        }
        members.sort_unstable();
        blocks.push(members);
    }
    blocks
}

/// `(#{lambda < -zero_tol}, #{|lambda| <= zero_tol})`.
pub fn count_negative(est: &SpectrumEstimate, zero_tol: f64) -> (usize, usize) {
    let count = est.eigenvalues.iter().filter(|&&l| l < -zero_tol).count();
    let uncertain = est.eigenvalues.iter().filter(|&&l| l.abs() <= zero_tol).count();
    (count, uncertain)
}

/// The six smallest eigenvalues above the zero tolerance. For a converged
/// Galerkin matrix these approach the Jacobi operator's kernel, which is
/// at least six-dimensional. Eigenvalues inside the tolerance band are
/// counted in `uncertain_count` instead.
pub fn nullity_diagnostic(est: &SpectrumEstimate) -> Result<[f64; 6]> {
    est.first_positive_six.as_slice().try_into().map_err(|_| {
        Error::Basis(format!(
            "need at least {} eigenvalues for the nullity diagnostic, have {}",
            est.negative_count + 6,
            est.m
        ))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{assemble, AssemblyConfig};
    use crate::basis::shell_complete_size;
    use crate::surface::{build_surface, Parity};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Cyclic Jacobi rotations; slow but independent of the library solver.
    fn jacobi_eigenvalues(a: &DMatrix<f64>) -> Vec<f64> {
        let mut a = a.clone();
        let n = a.nrows();
        for _ in 0..100 {
            let off: f64 = (0..n)
                .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| a[(i, j)] * a[(i, j)])
                .sum();
            if off < 1e-30 {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    if a[(p, q)] == 0.0 {
                        continue;
                    }
                    let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * a[(p, q)]);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let (akp, akq) = (a[(k, p)], a[(k, q)]);
                        a[(k, p)] = c * akp - s * akq;
                        a[(k, q)] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                        a[(p, k)] = c * apk - s * aqk;
                        a[(q, k)] = s * apk + c * aqk;
                    }
                }
            }
        }
        let mut d: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
        d.sort_by(f64::total_cmp);
        d
    }

    fn random_symmetric(n: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut a = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v: f64 = rng.random_range(-5.0..5.0);
                a[(i, j)] = v;
                a[(j, i)] = v;
            }
        }
        a
    }

    #[test]
    fn blocks_follow_the_nonzero_pattern() {
        let mut a = DMatrix::from_diagonal(&nalgebra::dvector![1.0, 2.0, 3.0, 4.0, 5.0]);
        a[(0, 3)] = 0.5;
        a[(3, 0)] = 0.5;
        a[(2, 4)] = -1.0;
        a[(4, 2)] = -1.0;
        assert_eq!(coupled_blocks(&a), vec![vec![0, 3], vec![1], vec![2, 4]]);
        let est = decompose(&a, None).unwrap();
        for (x, y) in est.eigenvalues.iter().zip(jacobi_eigenvalues(&a)) {
            assert_abs_diff_eq!(*x, y, epsilon = 1e-13);
        }
        let q = &est.eigenvectors;
        let lambda = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(est.eigenvalues.clone()));
        assert!((q * lambda * q.transpose() - &a).amax() < 1e-13);
    }

    #[test]
    fn diagonal_input() {
        let est = decompose(&DMatrix::from_diagonal(&nalgebra::dvector![2.0, -1.0, 0.0]), None).unwrap();
        assert_eq!(est.eigenvalues, vec![-1.0, 0.0, 2.0]);
        assert_eq!((est.negative_count, est.uncertain_count), (1, 1));
    }

    #[test]
    fn two_by_two_swap() {
        let est = decompose(&DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]), None).unwrap();
        assert_abs_diff_eq!(est.eigenvalues[0], -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(est.eigenvalues[1], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn second_difference_matrix() {
        let a = DMatrix::from_row_slice(3, 3, &[2.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 2.0]);
        let est = decompose(&a, None).unwrap();
        let want = [2.0 - 2f64.sqrt(), 2.0, 2.0 + 2f64.sqrt()];
        for (got, want) in est.eigenvalues.iter().zip(want) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-12);
        }
        assert_eq!(count_negative(&est, 0.0), (0, 0));
    }

    #[test]
    fn agrees_with_jacobi_rotations() {
        for seed in 0..5 {
            let a = random_symmetric(20, seed);
            let est = decompose(&a, None).unwrap();
            for (x, y) in est.eigenvalues.iter().zip(jacobi_eigenvalues(&a)) {
                assert_abs_diff_eq!(*x, y, epsilon = 1e-11);
            }
        }
    }

    #[test]
    fn reconstruction_and_orthogonality() {
        let a = random_symmetric(40, 7);
        let est = decompose(&a, None).unwrap();
        let q = &est.eigenvectors;
        let lambda = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(est.eigenvalues.clone()));
        let norm = est.norm;
        assert!((q * lambda * q.transpose() - &a).amax() <= 1e-9 * norm);
        assert!((q.transpose() * q - DMatrix::identity(40, 40)).amax() <= 1e-10);
        assert!(est.residual_bound <= 1e-10 * norm);
    }

    #[test]
    fn rejects_asymmetric_input() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        assert!(matches!(decompose(&a, None), Err(Error::NotSymmetric(_))));
        assert!(decompose(&DMatrix::zeros(0, 0), None).is_err());
    }

    #[test]
    fn positive_spectrum_has_no_negatives() {
        let est = decompose(&DMatrix::from_diagonal(&nalgebra::dvector![1.0, 2.0, 3.0]), None).unwrap();
        assert_eq!(count_negative(&est, est.zero_tol), (0, 0));
        assert!(nullity_diagnostic(&est).is_err());
    }

    fn cfg() -> AssemblyConfig {
        AssemblyConfig {
            grid: 128,
            ..AssemblyConfig::default()
        }
    }

    #[test]
    fn nested_truncations_are_monotone() {
        let p = build_surface(3, 2, 0.5, 17.7324).unwrap();
        let spectra: Vec<Vec<f64>> = [2, 3, 5, 7]
            .map(|l| eigen_symmetric(&assemble(&p, shell_complete_size(Parity::Odd, l), &cfg()).unwrap()).unwrap().eigenvalues)
            .to_vec();
        for pair in spectra.windows(2) {
            for (j, (coarse, fine)) in pair[0].iter().zip(&pair[1]).enumerate() {
                assert!(coarse >= &(fine - 1e-9), "lambda_{} rose", j + 1);
            }
        }
    }

    #[test]
    fn eigenvalues_scale_with_mean_curvature() {
        let p = build_surface(4, 3, 0.5, 12.7898).unwrap();
        let base = eigen_symmetric(&assemble(&p, 25, &cfg()).unwrap()).unwrap();
        for h in [0.25, 2.0] {
            let scaled = eigen_symmetric(&assemble(&p.with_mean_curvature(h).unwrap(), 25, &cfg()).unwrap()).unwrap();
            assert_eq!(scaled.negative_count, base.negative_count);
            for (a, b) in scaled.eigenvalues.iter().zip(&base.eigenvalues) {
                assert_abs_diff_eq!(*a, b * h / 0.5, epsilon = 1e-8 * (1.0 + b.abs()));
            }
        }
    }

    #[test]
    fn nullity_diagnostic_on_zero_potential_is_laplacian() {
        // With V = 0 the matrix is diag(alpha); the zero of the constant
        // mode is uncertain and the six smallest nonzero alphas follow.
        let alphas = [0.0, 1.0, 1.0, 4.0, 4.0, 5.0, 5.0];
        let est = decompose(&DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(&alphas)), None).unwrap();
        assert_eq!((est.negative_count, est.uncertain_count), (0, 1));
        assert_eq!(nullity_diagnostic(&est).unwrap(), [1.0, 1.0, 4.0, 4.0, 5.0, 5.0]);
    }
}
