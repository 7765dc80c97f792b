//! Complete elliptic integral of the first kind and the Jacobi `cn` function.
//!
//! Both are evaluated through the arithmetic-geometric mean: `K(k)` from
//! the AGM of `1` and `k' = sqrt(1 - k^2)`, and `cn(u; k)` from the
//! descending Landen sequence of the same means followed by backward
//! recovery of the amplitude.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};

/// Maximum number of AGM steps; convergence is quadratic so 20 steps is
/// far more than `k < 1 - 1e-16` ever needs.
const MAX_AGM_STEPS: usize = 32;

/// An elliptic modulus `k` with `0 <= k < 1`, caching the parameter `m = k^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipticModulus {
    k: f64,
    m: f64,
}

impl EllipticModulus {
    pub fn new(k: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&k) {
            return Err(Error::Domain(format!(
                "elliptic modulus must satisfy 0 <= k < 1, got {k}"
            )));
        }
        Ok(Self { k, m: k * k })
    }

    /// Modulus `sin(theta)` for an angle given in radians.
    pub fn from_modular_angle(theta_radians: f64) -> Result<Self> {
        Self::new(theta_radians.sin())
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    /// The complementary modulus `k' = sqrt(1 - k^2)`.
    pub fn complementary(&self) -> f64 {
        // (1-k)(1+k) keeps relative accuracy for k close to 1.
        ((1.0 - self.k) * (1.0 + self.k)).sqrt()
    }
}

fn agm(mut a: f64, mut b: f64) -> f64 {
    for _ in 0..MAX_AGM_STEPS {
        let next_a = 0.5 * (a + b);
        let next_b = (a * b).sqrt();
        if (next_a - next_b).abs() <= f64::EPSILON * next_a {
            return 0.5 * (next_a + next_b);
        }
        a = next_a;
        b = next_b;
    }
    a
}

/// Complete elliptic integral of the first kind, `K(k) = pi / (2 AGM(1, k'))`.
pub fn complete_k(k: EllipticModulus) -> f64 {
    PI / (2.0 * agm(1.0, k.complementary()))
}

/// Jacobi elliptic function `cn(u; k)`.
///
/// The argument is first reduced into `[0, 2K]` using the period `4K` and
/// evenness, so accuracy does not degrade for large `|u|`.
pub fn jacobi_cn(u: f64, k: EllipticModulus) -> f64 {
    if k.m == 0.0 {
        return u.cos();
    }
    let quarter = complete_k(k);
    let period = 4.0 * quarter;
    let mut r = u.abs() % period;
    // cn(4K - r) = cn(r)
    if r > 2.0 * quarter {
        r = period - r;
    }
    amplitude(r, k).cos()
}

/// Jacobi amplitude `am(u; k)` by the descending Landen (AGM) scheme.
fn amplitude(u: f64, k: EllipticModulus) -> f64 {
    let mut a = [0.0f64; MAX_AGM_STEPS + 1];
    let mut c = [0.0f64; MAX_AGM_STEPS + 1];
    a[0] = 1.0;
    c[0] = k.k;
    let mut b = k.complementary();
    let mut steps = 0;
    while steps < MAX_AGM_STEPS && c[steps].abs() > f64::EPSILON * a[steps] {
        let next = steps + 1;
        a[next] = 0.5 * (a[steps] + b);
        c[next] = 0.5 * (a[steps] - b);
        b = (a[steps] * b).sqrt();
        steps = next;
    }
    let mut phi = f64::from(1u32 << steps) * a[steps] * u;
    for level in (1..=steps).rev() {
        phi = 0.5 * (phi + (c[level] / a[level] * phi.sin()).asin());
    }
    phi
}

/// `K(0) = pi/2`, exposed for callers that special-case the circular limit.
pub const K_AT_ZERO: f64 = FRAC_PI_2;
