//! Walter parameters of the symmetric Wente torus `W_{l/n}`, its flat
//! lattice and the Jacobi-operator potential `V = 4H cosh F`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::elliptic::{complete_k, jacobi_cn, EllipticModulus};
use crate::error::{Error, Result};

/// Angle fixed by the translational period problem, in degrees.
pub const THETA_BAR_DEGREES: f64 = 65.354955354;
/// Upper end of the admissible range of `theta`, `90 - THETA_BAR_DEGREES`.
pub const THETA_MAX_DEGREES: f64 = 24.645044646;
/// Mean curvature used for all published reference values.
pub const DEFAULT_MEAN_CURVATURE: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Odd,
    Even,
}

/// Reduced fraction `l/n` in `(1, 2)` naming one symmetric Wente torus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SurfaceLabel {
    ell: u32,
    n: u32,
}

fn gcd(mut a: u32, mut b: u32) -> u32 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl SurfaceLabel {
    pub fn new(ell: u32, n: u32) -> Result<Self> {
        if n == 0 || ell == 0 {
            return Err(Error::Parameter(format!("{ell}/{n}: zero numerator or denominator")));
        }
        if gcd(ell, n) != 1 {
            return Err(Error::Parameter(format!("{ell}/{n} is not a reduced fraction")));
        }
        if !(n < ell && ell < 2 * n) {
            return Err(Error::Parameter(format!("{ell}/{n} is not in the open interval (1, 2)")));
        }
        Ok(Self { ell, n })
    }

    pub fn ell(&self) -> u32 {
        self.ell
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn parity(&self) -> Parity {
        if self.ell % 2 == 1 {
            Parity::Odd
        } else {
            Parity::Even
        }
    }
}

impl fmt::Display for SurfaceLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.ell, self.n)
    }
}

impl FromStr for SurfaceLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (num, den) = s
            .trim()
            .split_once('/')
            .ok_or_else(|| Error::Parameter(format!("expected l/n, got {s:?}")))?;
        let parse = |t: &str| {
            t.trim()
                .parse::<u32>()
                .map_err(|_| Error::Parameter(format!("expected l/n, got {s:?}")))
        };
        Self::new(parse(num)?, parse(den)?)
    }
}

impl Serialize for SurfaceLabel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for SurfaceLabel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Period lattice `Gamma` with generators `(a1, a2)` and `(b1, b2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    pub a1: f64,
    pub a2: f64,
    pub b1: f64,
    pub b2: f64,
    pub parity: Parity,
}

impl Lattice {
    /// Signed cell area `a1 b2 - a2 b1`.
    pub fn determinant(&self) -> f64 {
        self.a1 * self.b2 - self.a2 * self.b1
    }

    pub fn cell_area(&self) -> f64 {
        self.determinant().abs()
    }

    /// Width of the reference rectangle whose sides set the integer
    /// wavenumbers: `n x_period` for both parities.
    pub fn reference_width(&self) -> f64 {
        match self.parity {
            Parity::Odd => self.a1,
            Parity::Even => 2.0 * self.a1,
        }
    }

    /// Height of the reference rectangle, `y_period`.
    pub fn reference_height(&self) -> f64 {
        self.b2
    }

    /// Extent in `x` of the rectangular fundamental domain used for
    /// integration. For even `l` the sheared cell is cut and re-glued
    /// along the lattice vector `(0, b2)` onto `[0, a1) x [0, b2)`.
    pub fn rectangle(&self) -> (f64, f64) {
        (self.a1, self.b2)
    }

    /// Laplacian eigenvalue for the lattice mode `(m1, m2)`.
    pub fn eigenvalue(&self, m1: i64, m2: i64) -> f64 {
        let d = self.determinant();
        let (m1, m2) = (m1 as f64, m2 as f64);
        let u = m2 * self.b2 - m1 * self.a2;
        let v = m1 * self.a1 - m2 * self.b1;
        4.0 * PI * PI / (d * d) * (u * u + v * v)
    }

    /// Angular frequencies `(w_x, w_y)` of the lattice mode `(m1, m2)`.
    pub fn frequencies(&self, m1: i64, m2: i64) -> (f64, f64) {
        let d = self.determinant();
        let (m1, m2) = (m1 as f64, m2 as f64);
        (
            2.0 * PI / d * (m2 * self.b2 - m1 * self.a2),
            2.0 * PI / d * (m1 * self.a1 - m2 * self.b1),
        )
    }

    /// Integer wavenumbers `(p, q)` so that the mode's phase is
    /// `2 pi p x / W + 2 pi q y / Y` on the reference rectangle.
    pub fn wavenumbers(&self, m1: i64, m2: i64) -> (i64, i64) {
        match self.parity {
            Parity::Odd => (m2, m1),
            Parity::Even => (2 * m2 - m1, m1),
        }
    }

    /// Inverse of [`Lattice::wavenumbers`]; `None` when `(p, q)` is not a
    /// lattice mode (odd `p + q` on an even lattice).
    pub fn mode(&self, p: i64, q: i64) -> Option<(i64, i64)> {
        match self.parity {
            Parity::Odd => Some((q, p)),
            Parity::Even => ((p + q) % 2 == 0).then_some((q, (p + q) / 2)),
        }
    }
}

/// All derived Walter constants for one Wente torus at mean curvature `H`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceParams {
    pub label: SurfaceLabel,
    pub mean_curvature: f64,
    pub theta_degrees: f64,
    pub theta_bar_degrees: f64,
    pub k: f64,
    pub k_bar: f64,
    pub gamma: f64,
    pub gamma_bar: f64,
    pub alpha: f64,
    pub alpha_bar: f64,
    pub x_period: f64,
    pub y_period: f64,
}

/// Builds the Walter parameters for `W_{ell/n}` from its angle `theta` (degrees).
pub fn build_surface(ell: u32, n: u32, mean_curvature: f64, theta_degrees: f64) -> Result<SurfaceParams> {
    let label = SurfaceLabel::new(ell, n)?;
    build_for_label(label, mean_curvature, theta_degrees)
}

pub fn build_for_label(label: SurfaceLabel, mean_curvature: f64, theta_degrees: f64) -> Result<SurfaceParams> {
    if !(mean_curvature.is_finite() && mean_curvature > 0.0) {
        return Err(Error::Parameter(format!(
            "mean curvature must be positive, got {mean_curvature}"
        )));
    }
    if !(theta_degrees > 0.0 && theta_degrees < THETA_MAX_DEGREES) {
        return Err(Error::Parameter(format!(
            "theta must lie in (0, {THETA_MAX_DEGREES}) degrees, got {theta_degrees}"
        )));
    }
    let theta = theta_degrees.to_radians();
    let theta_bar = THETA_BAR_DEGREES.to_radians();
    let k = EllipticModulus::from_modular_angle(theta)?;
    let k_bar = EllipticModulus::from_modular_angle(theta_bar)?;
    let denom = (2.0 * (theta + theta_bar)).sin();
    let alpha = (4.0 * mean_curvature * (2.0 * theta_bar).sin() / denom).sqrt();
    let alpha_bar = (4.0 * mean_curvature * (2.0 * theta).sin() / denom).sqrt();
    let params = SurfaceParams {
        label,
        mean_curvature,
        theta_degrees,
        theta_bar_degrees: THETA_BAR_DEGREES,
        k: k.k(),
        k_bar: k_bar.k(),
        gamma: theta.tan().sqrt(),
        gamma_bar: theta_bar.tan().sqrt(),
        alpha,
        alpha_bar,
        x_period: 4.0 * complete_k(k) / alpha,
        y_period: 4.0 * complete_k(k_bar) / alpha_bar,
    };
    debug_assert!(params.gamma * params.gamma_bar < 1.0);
    Ok(params)
}

/// `4H cosh(4 artanh w)` written as `2H (r + 1/r)` with `r = ((1+w)/(1-w))^2`.
#[inline]
pub fn potential_from_product(mean_curvature: f64, w: f64) -> f64 {
    let s = (1.0 + w) / (1.0 - w);
    let r = s * s;
    2.0 * mean_curvature * (r + 1.0 / r)
}

impl SurfaceParams {
    pub fn parity(&self) -> Parity {
        self.label.parity()
    }

    pub fn modulus(&self) -> EllipticModulus {
        EllipticModulus::new(self.k).expect("validated at build time")
    }

    pub fn modulus_bar(&self) -> EllipticModulus {
        EllipticModulus::new(self.k_bar).expect("validated at build time")
    }

    /// `f(x) = gamma cn_k(alpha x)`.
    pub fn f(&self, x: f64) -> f64 {
        self.gamma * jacobi_cn(self.alpha * x, self.modulus())
    }

    /// `g(y) = gamma_bar cn_kbar(alpha_bar y)`.
    pub fn g(&self, y: f64) -> f64 {
        self.gamma_bar * jacobi_cn(self.alpha_bar * y, self.modulus_bar())
    }

    /// Conformal factor exponent `F = 4 artanh(f(x) g(y))`.
    pub fn conformal_exponent(&self, x: f64, y: f64) -> f64 {
        4.0 * (self.f(x) * self.g(y)).atanh()
    }

    /// Jacobi-operator potential `V(x, y) = 4H cosh F(x, y)`.
    pub fn potential(&self, x: f64, y: f64) -> f64 {
        4.0 * self.mean_curvature * self.conformal_exponent(x, y).cosh()
    }

    /// Closed-form `(V_min, V_max)`: the minimum `4H` sits on the zero set
    /// of `f g`, the maximum at the origin where both `cn` equal one.
    pub fn potential_extrema(&self) -> (f64, f64) {
        let h = self.mean_curvature;
        (4.0 * h, 4.0 * h * (4.0 * (self.gamma * self.gamma_bar).atanh()).cosh())
    }

    pub fn lattice(&self) -> Lattice {
        let n = f64::from(self.label.n());
        match self.parity() {
            Parity::Odd => Lattice {
                a1: n * self.x_period,
                a2: 0.0,
                b1: 0.0,
                b2: self.y_period,
                parity: Parity::Odd,
            },
            Parity::Even => Lattice {
                a1: n * self.x_period / 2.0,
                a2: self.y_period / 2.0,
                b1: 0.0,
                b2: self.y_period,
                parity: Parity::Even,
            },
        }
    }

    /// Rescaled copy at a different mean curvature (same `theta`).
    pub fn with_mean_curvature(&self, mean_curvature: f64) -> Result<Self> {
        build_for_label(self.label, mean_curvature, self.theta_degrees)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn w32() -> SurfaceParams {
        build_surface(3, 2, 0.5, 17.7324).unwrap()
    }

    fn w43() -> SurfaceParams {
        build_surface(4, 3, 0.5, 12.7898).unwrap()
    }

    #[test]
    fn label_validation() {
        assert!(SurfaceLabel::new(9, 9).is_err());
        assert!(SurfaceLabel::new(6, 4).is_err());
        assert!(SurfaceLabel::new(5, 2).is_err());
        assert!(SurfaceLabel::new(2, 2).is_err());
        assert!("3/2".parse::<SurfaceLabel>().is_ok());
        assert!("3-2".parse::<SurfaceLabel>().is_err());
        assert_eq!("73/72".parse::<SurfaceLabel>().unwrap().to_string(), "73/72");
    }

    #[test]
    fn parameter_validation() {
        assert!(build_surface(3, 2, 0.5, 0.0).is_err());
        assert!(build_surface(3, 2, 0.5, 24.7).is_err());
        assert!(build_surface(3, 2, -1.0, 17.0).is_err());
        assert!(build_surface(4, 2, 0.5, 17.0).is_err());
    }

    #[test]
    fn periods_match_published_geometry() {
        let p = w32();
        assert!((p.x_period - 2.56).abs() <= 0.01, "{}", p.x_period);
        assert!((p.y_period - 4.21).abs() <= 0.01, "{}", p.y_period);
        let p = w43();
        assert!((p.x_period - 3.28).abs() <= 0.01);
        assert!((p.y_period - 6.34).abs() <= 0.01);
    }

    #[test]
    fn periods_scale_like_inverse_sqrt_h() {
        let a = w32();
        let b = build_surface(3, 2, 2.0, 17.7324).unwrap();
        assert_relative_eq!(b.x_period, a.x_period / 2.0, max_relative = 1e-14);
        assert_relative_eq!(b.y_period, a.y_period / 2.0, max_relative = 1e-14);
    }

    #[test]
    fn potential_minimum_on_zero_set_of_cn() {
        for p in [w32(), w43()] {
            let x0 = complete_k(p.modulus()) / p.alpha;
            assert_relative_eq!(p.potential(x0, 0.37), 2.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn potential_peak_and_extrema() {
        let p = w32();
        assert!((p.potential(0.0, 0.0) - 123.447).abs() < 5e-3);
        let (lo, hi) = w43().potential_extrema();
        assert_eq!(lo, 2.0);
        assert!((hi - 33.0184).abs() < 1e-3);
        let (_, hi) = build_surface(13, 7, 0.5, 24.0512).unwrap().potential_extrema();
        assert!((hi - 21012.8).abs() / 21012.8 < 1e-3);
    }

    #[test]
    fn algebraic_potential_matches_cosh_form() {
        for w in [-0.95, -0.3, 0.0, 0.2, 0.83, 0.99] {
            let direct = 4.0 * 0.5 * (4.0 * f64::atanh(w)).cosh();
            assert_relative_eq!(potential_from_product(0.5, w), direct, max_relative = 1e-12);
        }
    }

    #[test]
    fn lattice_generators_follow_parity() {
        let p = w32();
        let lat = p.lattice();
        assert_eq!((lat.a1, lat.a2, lat.b1, lat.b2), (2.0 * p.x_period, 0.0, 0.0, p.y_period));
        let p = w43();
        let lat = p.lattice();
        assert_eq!(lat.a1, 1.5 * p.x_period);
        assert_eq!(lat.a2, p.y_period / 2.0);
        assert_eq!(lat.b2, p.y_period);
        assert!(lat.cell_area() > 0.0);
    }

    #[test]
    fn wavenumbers_round_trip_and_agree_with_general_formula() {
        for p in [w32(), w43()] {
            let lat = p.lattice();
            for m1 in -4..=4 {
                for m2 in -4..=4 {
                    let (wp, wq) = lat.wavenumbers(m1, m2);
                    assert_eq!(lat.mode(wp, wq), Some((m1, m2)));
                    let (fx, fy) = lat.frequencies(m1, m2);
                    assert_relative_eq!(fx, 2.0 * PI * wp as f64 / lat.reference_width(), epsilon = 1e-12);
                    assert_relative_eq!(fy, 2.0 * PI * wq as f64 / lat.reference_height(), epsilon = 1e-12);
                    assert_relative_eq!(lat.eigenvalue(m1, m2), fx * fx + fy * fy, max_relative = 1e-12, epsilon = 1e-14);
                }
            }
        }
    }

    fn check_periodicity(p: &SurfaceParams, x: f64, y: f64) -> std::result::Result<(), TestCaseError> {
        let lat = p.lattice();
        let v = p.potential(x, y);
        let tol = 1e-10 * v.max(1.0);
        prop_assert!((p.potential(x + lat.a1, y + lat.a2) - v).abs() <= tol);
        prop_assert!((p.potential(x + lat.b1, y + lat.b2) - v).abs() <= tol);
        prop_assert!((p.potential(-x, y) - v).abs() <= tol);
        prop_assert!((p.potential(x, -y) - v).abs() <= tol);
        prop_assert!((p.potential(p.x_period / 2.0 - x, y) - v).abs() <= tol);
        prop_assert!((p.potential(x, p.y_period / 2.0 - y) - v).abs() <= tol);
        Ok(())
    }

    proptest! {
        #[test]
        fn potential_is_lattice_periodic_and_symmetric(x in -10.0f64..10.0, y in -10.0f64..10.0) {
            check_periodicity(&w32(), x, y)?;
            check_periodicity(&w43(), x, y)?;
            check_periodicity(&build_surface(8, 5, 0.5, 20.1374).unwrap(), x, y)?;
        }

        #[test]
        fn potential_never_below_4h(x in -10.0f64..10.0, y in -10.0f64..10.0) {
            let p = w32();
            prop_assert!(p.potential(x, y) >= 2.0 * (1.0 - 1e-15));
        }
    }

    #[test]
    fn grid_maximum_matches_closed_form() {
        let p = w43();
        let (lo, hi) = p.potential_extrema();
        let (nx, ny) = (400, 400);
        let (mut vmin, mut vmax) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..nx {
            for j in 0..ny {
                // 400 divides by 4, so x = x_period/4 (the zero of cn) is a node.
                let x = i as f64 * p.x_period / nx as f64;
                let y = j as f64 * p.y_period / ny as f64;
                let v = p.potential(x, y);
                vmin = vmin.min(v);
                vmax = vmax.max(v);
            }
        }
        assert_relative_eq!(vmax, hi, max_relative = 1e-8);
        assert_relative_eq!(vmin, lo, max_relative = 1e-8);
    }
}
