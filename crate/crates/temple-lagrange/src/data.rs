//! Initial data profiles: pointwise evaluation, exact or quadrature cell
//! averages, and the feature/range queries the grid and region setup need.

use serde::{Deserialize, Serialize};

use crate::numerics::gauss_legendre_10;

/// Initial profile rho_0(x). Piecewise-constant kinds average exactly;
/// the sine profile is averaged per cell with 10-point Gauss-Legendre.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialData {
    /// `left` for x <= x0, `right` for x > x0.
    Riemann { left: f64, right: f64, x0: f64 },
    /// values[0] for x <= breakpoints[0], values[i] on
    /// (breakpoints[i-1], breakpoints[i]], values[last] beyond.
    Piecewise { breakpoints: Vec<f64>, values: Vec<f64> },
    /// mean + amplitude * sin(2 pi x / period).
    Sine { mean: f64, amplitude: f64, period: f64 },
}

impl InitialData {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            InitialData::Riemann { left, right, x0 } => {
                if x <= *x0 {
                    *left
                } else {
                    *right
                }
            }
            InitialData::Piecewise { breakpoints, values } => {
                let i = breakpoints.partition_point(|&b| b < x);
                values[i]
            }
            InitialData::Sine { mean, amplitude, period } => {
                mean + amplitude * (2.0 * std::f64::consts::PI * x / period).sin()
            }
        }
    }

    /// Average over the cell (a, b].
    pub fn cell_average(&self, a: f64, b: f64) -> f64 {
        debug_assert!(b > a);
        match self {
            InitialData::Riemann { left, right, x0 } => {
                // Cells entirely on one side must average to that side's
                // value exactly, so only a straddling cell blends.
                if *x0 >= b {
                    *left
                } else if *x0 <= a {
                    *right
                } else {
                    (left * (x0 - a) + right * (b - x0)) / (b - a)
                }
            }
            InitialData::Piecewise { breakpoints, values } => {
                // Walk the pieces overlapping (a, b]; endpoints of measure
                // zero do not affect the average.
                let mut acc = 0.0;
                let mut lo = a;
                for (i, &bp) in breakpoints.iter().enumerate() {
                    if bp <= lo {
                        continue;
                    }
                    if bp >= b {
                        break;
                    }
                    acc += values[i] * (bp - lo);
                    lo = bp;
                }
                let i_last = breakpoints.partition_point(|&bp| bp < b);
                acc += values[i_last] * (b - lo);
                acc / (b - a)
            }
            InitialData::Sine { .. } => gauss_legendre_10(|x| self.eval(x), a, b) / (b - a),
        }
    }

    /// Inclusive bounds attained by the profile (exact per kind, not sampled).
    pub fn range(&self) -> (f64, f64) {
        match self {
            InitialData::Riemann { left, right, .. } => (left.min(*right), left.max(*right)),
            InitialData::Piecewise { values, .. } => {
                let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                (lo, hi)
            }
            InitialData::Sine { mean, amplitude, .. } => {
                (mean - amplitude.abs(), mean + amplitude.abs())
            }
        }
    }

    /// x-locations where the profile changes character; the grid span must
    /// contain them all.
    pub fn features(&self) -> Vec<f64> {
        match self {
            InitialData::Riemann { x0, .. } => vec![*x0],
            InitialData::Piecewise { breakpoints, .. } => breakpoints.clone(),
            InitialData::Sine { .. } => vec![],
        }
    }

    /// Structural validity: finite numbers, piecewise shape, positive period.
    pub fn check_shape(&self) -> Result<(), String> {
        match self {
            InitialData::Riemann { left, right, x0 } => {
                for v in [left, right, x0] {
                    if !v.is_finite() {
                        return Err("riemann data contains a non-finite value".into());
                    }
                }
                Ok(())
            }
            InitialData::Piecewise { breakpoints, values } => {
                if values.len() != breakpoints.len() + 1 {
                    return Err(format!(
                        "piecewise data needs {} values for {} breakpoints, got {}",
                        breakpoints.len() + 1,
                        breakpoints.len(),
                        values.len()
                    ));
                }
                if breakpoints.is_empty() {
                    return Err("piecewise data needs at least one breakpoint".into());
                }
                if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
                    return Err("piecewise breakpoints must be strictly increasing".into());
                }
                if breakpoints.iter().chain(values.iter()).any(|v| !v.is_finite()) {
                    return Err("piecewise data contains a non-finite value".into());
                }
                Ok(())
            }
            InitialData::Sine { mean, amplitude, period } => {
                if !mean.is_finite() || !amplitude.is_finite() || !period.is_finite() {
                    return Err("sine data contains a non-finite value".into());
                }
                if *period <= 0.0 {
                    return Err("sine period must be positive".into());
                }
                Ok(())
            }
        }
    }

    /// The profile a*rho_0 + b, used when mapping data through the state
    /// translation without resampling.
    pub fn affine(&self, scale: f64, offset: f64) -> InitialData {
        match self {
            InitialData::Riemann { left, right, x0 } => InitialData::Riemann {
                left: scale * left + offset,
                right: scale * right + offset,
                x0: *x0,
            },
            InitialData::Piecewise { breakpoints, values } => InitialData::Piecewise {
                breakpoints: breakpoints.clone(),
                values: values.iter().map(|v| scale * v + offset).collect(),
            },
            InitialData::Sine { mean, amplitude, period } => InitialData::Sine {
                mean: scale * mean + offset,
                amplitude: scale * amplitude,
                period: *period,
            },
        }
    }
}
