//! Scalar flux functions f(rho) together with their derivatives and interior
//! critical points. A `FluxSpec` is validated at construction: the supplied
//! derivative must agree with a central finite difference, and every listed
//! critical point must actually be a zero of f'.

use std::sync::Arc;

use thiserror::Error;

use crate::numerics::{bisect, golden_min, linspace};

/// Number of sample points used when validating a derivative.
const DERIVATIVE_CHECK_SAMPLES: usize = 100;

/// Relative tolerance for the analytic-vs-finite-difference check.
const DERIVATIVE_CHECK_RTOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum FluxError {
    #[error("flux interval [{0}, {1}] is degenerate or reversed")]
    BadInterval(f64, f64),
    #[error("unknown catalog flux `{0}`")]
    UnknownCatalog(String),
    #[error("polynomial flux needs at least one coefficient")]
    EmptyPolynomial,
    #[error(
        "derivative mismatch at rho = {x}: analytic {analytic}, finite difference {numeric}"
    )]
    DerivativeMismatch { x: f64, analytic: f64, numeric: f64 },
    #[error("critical point {0} lies outside the interval or has |f'| = {1}")]
    BadCriticalPoint(f64, f64),
}

/// A scalar flux on a working interval: f, f', and the points inside the
/// interval where f' vanishes (used for exact Godunov interface fluxes).
#[derive(Clone)]
pub struct FluxSpec {
    name: String,
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    f_prime: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    critical_points: Vec<f64>,
    interval: (f64, f64),
}

impl std::fmt::Debug for FluxSpec {
    fn fmt(&self, fm: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        fm.debug_struct("FluxSpec")
            .field("name", &self.name)
            .field("interval", &self.interval)
            .field("critical_points", &self.critical_points)
            .finish()
    }
}

impl FluxSpec {
    /// Build and validate a flux from closures.
    pub fn new(
        name: impl Into<String>,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        f_prime: impl Fn(f64) -> f64 + Send + Sync + 'static,
        critical_points: Vec<f64>,
        interval: (f64, f64),
    ) -> Result<Self, FluxError> {
        let spec = FluxSpec {
            name: name.into(),
            f: Arc::new(f),
            f_prime: Arc::new(f_prime),
            critical_points,
            interval,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// f(rho) = rho^2 / 2.
    pub fn burgers(interval: (f64, f64)) -> Result<Self, FluxError> {
        let crit = points_inside(&[0.0], interval);
        Self::new("burgers", |r| 0.5 * r * r, |r| r, crit, interval)
    }

    /// f(rho) = rho^3.
    pub fn cubic(interval: (f64, f64)) -> Result<Self, FluxError> {
        let crit = points_inside(&[0.0], interval);
        Self::new("cubic", |r| r * r * r, |r| 3.0 * r * r, crit, interval)
    }

    /// Two-phase fractional flow f(rho) = rho^2 / (rho^2 + (1 - rho)^2),
    /// S-shaped on [0, 1] with f'(0) = f'(1) = 0.
    pub fn buckley_leverett(interval: (f64, f64)) -> Result<Self, FluxError> {
        let crit = points_inside(&[0.0, 1.0], interval);
        Self::new(
            "buckley_leverett",
            |r| {
                let den = r * r + (1.0 - r) * (1.0 - r);
                r * r / den
            },
            |r| {
                let den = r * r + (1.0 - r) * (1.0 - r);
                2.0 * r * (1.0 - r) / (den * den)
            },
            crit,
            interval,
        )
    }

    /// f(rho) = sin(rho); critical points at pi/2 + k*pi inside the interval.
    pub fn sine(interval: (f64, f64)) -> Result<Self, FluxError> {
        let (a, b) = interval;
        let half_pi = std::f64::consts::FRAC_PI_2;
        let pi = std::f64::consts::PI;
        let mut crit = Vec::new();
        let k_lo = ((a - half_pi) / pi).floor() as i64 - 1;
        let k_hi = ((b - half_pi) / pi).ceil() as i64 + 1;
        for k in k_lo..=k_hi {
            let c = half_pi + pi * k as f64;
            if c >= a && c <= b {
                crit.push(c);
            }
        }
        Self::new("sine", |r| r.sin(), |r| r.cos(), crit, interval)
    }

    /// Polynomial flux from ascending coefficients `[c0, c1, ...]`, i.e.
    /// f(rho) = c0 + c1*rho + c2*rho^2 + ... Critical points are located by
    /// sign-change bracketing of f' plus a curvature sweep that catches
    /// even-multiplicity roots, refined by bisection.
    pub fn polynomial(coeffs: &[f64], interval: (f64, f64)) -> Result<Self, FluxError> {
        if coeffs.is_empty() {
            return Err(FluxError::EmptyPolynomial);
        }
        let c: Vec<f64> = coeffs.to_vec();
        let d = poly_derive(&c);
        let crit = poly_critical_points(&d, interval);
        let c_eval = c.clone();
        let d_eval = d.clone();
        Self::new(
            "polynomial",
            move |r| poly_eval(&c_eval, r),
            move |r| poly_eval(&d_eval, r),
            crit,
            interval,
        )
    }

    /// Look a flux up by catalog name.
    pub fn from_catalog(name: &str, interval: (f64, f64)) -> Result<Self, FluxError> {
        match name {
            "burgers" => Self::burgers(interval),
            "cubic" => Self::cubic(interval),
            "buckley_leverett" => Self::buckley_leverett(interval),
            "sine" => Self::sine(interval),
            other => Err(FluxError::UnknownCatalog(other.to_string())),
        }
    }

    pub fn f(&self, rho: f64) -> f64 {
        (self.f)(rho)
    }

    pub fn f_prime(&self, rho: f64) -> f64 {
        (self.f_prime)(rho)
    }

    pub fn critical_points(&self) -> &[f64] {
        &self.critical_points
    }

    pub fn interval(&self) -> (f64, f64) {
        self.interval
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Largest |f'| over `range`, sampled densely. Floor of 1e-12 so CFL
    /// ratios stay finite for locally constant fluxes.
    pub fn max_abs_slope(&self, range: (f64, f64)) -> f64 {
        let mut best = 1e-12_f64;
        for x in linspace(range.0, range.1, 1025) {
            best = best.max(self.f_prime(x).abs());
        }
        best
    }

    fn validate(&self) -> Result<(), FluxError> {
        let (a, b) = self.interval;
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(FluxError::BadInterval(a, b));
        }
        let mut slope_scale = 1.0_f64;
        for x in linspace(a, b, DERIVATIVE_CHECK_SAMPLES) {
            let h = 1e-5 * (1.0 + x.abs());
            let fd = (self.f(x + h) - self.f(x - h)) / (2.0 * h);
            let an = self.f_prime(x);
            slope_scale = slope_scale.max(an.abs());
            if (an - fd).abs() > DERIVATIVE_CHECK_RTOL * an.abs().max(1.0) {
                return Err(FluxError::DerivativeMismatch { x, analytic: an, numeric: fd });
            }
        }
        for &c in &self.critical_points {
            let slack = 1e-12 * (1.0 + a.abs().max(b.abs()));
            let fp = self.f_prime(c).abs();
            if c < a - slack || c > b + slack || fp > 1e-10 * slope_scale {
                return Err(FluxError::BadCriticalPoint(c, fp));
            }
        }
        Ok(())
    }
}

fn points_inside(candidates: &[f64], interval: (f64, f64)) -> Vec<f64> {
    candidates
        .iter()
        .copied()
        .filter(|&c| c >= interval.0 && c <= interval.1)
        .collect()
}

/// Horner evaluation of ascending coefficients.
fn poly_eval(coeffs: &[f64], x: f64) -> f64 {
    let mut acc = 0.0;
    for &c in coeffs.iter().rev() {
        acc = acc * x + c;
    }
    acc
}

/// Ascending coefficients of the derivative polynomial.
fn poly_derive(coeffs: &[f64]) -> Vec<f64> {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, &c)| c * i as f64)
        .collect()
}

/// Roots of the derivative polynomial `d` inside `interval`, to about 1e-12.
fn poly_critical_points(d: &[f64], interval: (f64, f64)) -> Vec<f64> {
    // A vanishing derivative (constant flux) has no isolated critical
    // points; min and max over any subinterval are realized at endpoints.
    if d.iter().all(|&c| c == 0.0) {
        return Vec::new();
    }
    let (a, b) = interval;
    let width = b - a;
    let scale = 1.0
        + linspace(a, b, 513)
            .iter()
            .map(|&x| poly_eval(d, x).abs())
            .fold(0.0_f64, f64::max);
    let mut roots: Vec<f64> = Vec::new();

    let xs = linspace(a, b, 4097);
    let vals: Vec<f64> = xs.iter().map(|&x| poly_eval(d, x)).collect();
    for i in 0..xs.len() - 1 {
        if vals[i] == 0.0 {
            roots.push(xs[i]);
        } else if vals[i].signum() != vals[i + 1].signum() && vals[i + 1] != 0.0 {
            roots.push(bisect(|x| poly_eval(d, x), xs[i], xs[i + 1], 1e-13 * width.max(1.0)));
        }
    }
    if *vals.last().unwrap() == 0.0 {
        roots.push(b);
    }

    // Even-multiplicity roots never change sign; hunt them where the
    // curvature d' changes sign and |d| dips to zero.
    let dd = poly_derive(d);
    if !dd.is_empty() {
        let dvals: Vec<f64> = xs.iter().map(|&x| poly_eval(&dd, x)).collect();
        for i in 0..xs.len() - 1 {
            if dvals[i].signum() != dvals[i + 1].signum() {
                let m = golden_min(
                    |x| poly_eval(d, x).abs(),
                    xs[i],
                    xs[i + 1],
                    1e-13 * width.max(1.0),
                );
                if poly_eval(d, m).abs() <= 1e-10 * scale {
                    roots.push(m);
                }
            }
        }
    }

    roots.sort_by(|p, q| p.partial_cmp(q).unwrap());
    roots.dedup_by(|p, q| (*p - *q).abs() <= 1e-9 * width.max(1.0));
    roots
}
