//! Reduction of rho_t + f(rho)_x = 0 with data in [a, b] to an equivalent
//! problem sigma_t + g(sigma)_x = 0 whose states are strictly positive and
//! whose velocity G(sigma) = g(sigma)/sigma is strictly increasing.
//!
//! Three mechanisms compose: an orientation flip sigma = -rho when the data
//! are all negative, a translation sigma = rho + L when the data straddle 0,
//! and an additive flux constant K chosen so that
//! G'(sigma) = (sigma g'(sigma) - g(sigma)) / sigma^2 > 0 on the whole
//! working interval. None of them changes the entropy solution: the flip and
//! shift are changes of variable, and constant flux shifts drop out of the
//! weak form.

use std::sync::Arc;

use thiserror::Error;

use crate::data::InitialData;
use crate::flux::FluxSpec;
use crate::numerics::{golden_min, linspace};

const K_SCAN_SAMPLES: usize = 4096;
const VELOCITY_CHECK_SAMPLES: usize = 1024;

#[derive(Debug, Error)]
pub enum TransformError {
    #[error("data interval [{0}, {1}] is degenerate or reversed")]
    DegenerateInterval(f64, f64),
    #[error("G'({sigma}) = {g_prime} <= 0 after shift; flux-constant selection is broken")]
    VelocityNotMonotone { sigma: f64, g_prime: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    Positive,
    Negative,
}

impl Orientation {
    pub fn sign(self) -> f64 {
        match self {
            Orientation::Positive => 1.0,
            Orientation::Negative => -1.0,
        }
    }
}

/// The velocity G and its derivative, both strictly positive-slope on the
/// working interval by construction.
#[derive(Clone)]
pub struct Velocity {
    pub g: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub g_prime: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl Velocity {
    pub fn g(&self, sigma: f64) -> f64 {
        (self.g)(sigma)
    }

    pub fn g_prime(&self, sigma: f64) -> f64 {
        (self.g_prime)(sigma)
    }
}

/// Everything needed to move between the original and working problems.
#[derive(Clone)]
pub struct TransformSpec {
    pub orientation: Orientation,
    pub l_shift: f64,
    pub flux_constant: f64,
    pub k_bound: f64,
    pub interval_tilde: (f64, f64),
    pub velocity: Velocity,
    flux: FluxSpec,
}

/// Pick the sign flip and translation that land the data interval in the
/// strictly positive reals. Returns (orientation, L, transformed interval).
pub fn normalize_orientation(
    interval: (f64, f64),
) -> Result<(Orientation, f64, (f64, f64)), TransformError> {
    let (a, b) = interval;
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(TransformError::DegenerateInterval(a, b));
    }
    if a > 0.0 {
        Ok((Orientation::Positive, 0.0, (a, b)))
    } else if b < 0.0 {
        Ok((Orientation::Negative, 0.0, (-b, -a)))
    } else {
        // a <= 0 <= b: translate so the left endpoint sits at 1.
        let l = -a + 1.0;
        Ok((Orientation::Positive, l, (a + l, b + l)))
    }
}

/// The working flux before the constant K is added:
/// g~(sigma) = sign * f(sign * (sigma - L)).
fn oriented_flux(flux: &FluxSpec, orientation: Orientation, l_shift: f64, sigma: f64) -> f64 {
    let s = orientation.sign();
    s * flux.f(s * (sigma - l_shift))
}

/// g~'(sigma) = f'(sign * (sigma - L)); the two sign factors cancel.
fn oriented_flux_prime(flux: &FluxSpec, orientation: Orientation, l_shift: f64, sigma: f64) -> f64 {
    flux.f_prime(orientation.sign() * (sigma - l_shift))
}

/// Minimize e(sigma) = sigma g~'(sigma) - g~(sigma) over the working interval
/// and back off by a margin. e > K is exactly the condition G' > 0, so K is
/// the largest constant safely below the sampled minimum; K = 0 when the
/// unshifted velocity is already increasing with room to spare.
///
/// Returns (K, K_bound) with K_bound the located minimum of e.
pub fn compute_shift_k(
    flux: &FluxSpec,
    orientation: Orientation,
    l_shift: f64,
    interval_tilde: (f64, f64),
) -> (f64, f64) {
    let e = |sigma: f64| {
        sigma * oriented_flux_prime(flux, orientation, l_shift, sigma)
            - oriented_flux(flux, orientation, l_shift, sigma)
    };
    let xs = linspace(interval_tilde.0, interval_tilde.1, K_SCAN_SAMPLES);
    let mut best_i = 0;
    let mut best = f64::INFINITY;
    for (i, &x) in xs.iter().enumerate() {
        let val = e(x);
        if val < best {
            best = val;
            best_i = i;
        }
    }
    // Polish inside the bracket formed by the neighbors of the sampled
    // minimizer (clamped at the ends, where golden section converges to the
    // endpoint).
    let lo = xs[best_i.saturating_sub(1)];
    let hi = xs[(best_i + 1).min(xs.len() - 1)];
    let width = interval_tilde.1 - interval_tilde.0;
    let refined = golden_min(&e, lo, hi, 1e-12 * width.max(1.0));
    let k_bound = best.min(e(refined));

    let margin = (0.05 * k_bound.abs()).max(1e-3);
    let k = if k_bound >= margin { 0.0 } else { k_bound - margin };
    (k, k_bound)
}

/// Assemble G = (g~ + K)/sigma and its derivative, then verify G' > 0 on a
/// dense sample. A non-positive sample is a bug in compute_shift_k, not a
/// user error.
pub fn build_velocity(
    flux: &FluxSpec,
    orientation: Orientation,
    l_shift: f64,
    k: f64,
    interval_tilde: (f64, f64),
) -> Result<Velocity, TransformError> {
    let fx_g = flux.clone();
    let fx_gp = flux.clone();
    let velocity = Velocity {
        g: Arc::new(move |sigma| (oriented_flux(&fx_g, orientation, l_shift, sigma) + k) / sigma),
        g_prime: Arc::new(move |sigma| {
            (sigma * oriented_flux_prime(&fx_gp, orientation, l_shift, sigma)
                - oriented_flux(&fx_gp, orientation, l_shift, sigma)
                - k)
                / (sigma * sigma)
        }),
    };
    for sigma in linspace(interval_tilde.0, interval_tilde.1, VELOCITY_CHECK_SAMPLES) {
        let gp = velocity.g_prime(sigma);
        if gp <= 0.0 {
            return Err(TransformError::VelocityNotMonotone { sigma, g_prime: gp });
        }
    }
    Ok(velocity)
}

impl TransformSpec {
    pub fn build(flux: &FluxSpec) -> Result<Self, TransformError> {
        let (orientation, l_shift, interval_tilde) = normalize_orientation(flux.interval())?;
        let (flux_constant, k_bound) = compute_shift_k(flux, orientation, l_shift, interval_tilde);
        let velocity = build_velocity(flux, orientation, l_shift, flux_constant, interval_tilde)?;
        Ok(TransformSpec {
            orientation,
            l_shift,
            flux_constant,
            k_bound,
            interval_tilde,
            velocity,
            flux: flux.clone(),
        })
    }

    /// The full transformed flux g(sigma) = sigma * G(sigma).
    pub fn transformed_flux(&self, sigma: f64) -> f64 {
        oriented_flux(&self.flux, self.orientation, self.l_shift, sigma) + self.flux_constant
    }

    pub fn transformed_flux_prime(&self, sigma: f64) -> f64 {
        oriented_flux_prime(&self.flux, self.orientation, self.l_shift, sigma)
    }

    /// sigma = sign * rho + L, the forward map applied to a state value.
    pub fn to_sigma(&self, rho: f64) -> f64 {
        self.orientation.sign() * rho + self.l_shift
    }

    /// Map the initial profile into working coordinates.
    pub fn transform_data(&self, data: &InitialData) -> InitialData {
        data.affine(self.orientation.sign(), self.l_shift)
    }

    pub fn flux(&self) -> &FluxSpec {
        &self.flux
    }
}

/// rho = sign * (sigma - L). Pure arithmetic; out-of-interval sigma values
/// are the caller's concern (the run report tracks region violations).
pub fn recover_rho(sigma: f64, spec: &TransformSpec) -> f64 {
    spec.orientation.sign() * (sigma - spec.l_shift)
}
