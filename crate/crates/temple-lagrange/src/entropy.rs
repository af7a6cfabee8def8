//! Entropy machinery: convex scalar entropies with quadrature-built fluxes,
//! their lift to the 2x2 system, and the discrete entropy-inequality monitor
//! for solver histories.
//!
//! The lifted pair is E2(eta, v) = eta E1(v/eta) with flux
//! Q2(p) = Q1(p) - G(p) E1(p). That form satisfies the exact compatibility
//! relation Q2' + (E1 - p E1') G' = 0 thanks to the identity g' = G + p G',
//! which the tests check both symbolically (frozen cases) and by finite
//! differences.

use std::sync::Arc;

use thiserror::Error;

use crate::godunov::History;
use crate::numerics::{adaptive_simpson, linspace, sym2_min_eigenvalue};
use crate::temple::State;
use crate::transform::{TransformSpec, Velocity};

#[derive(Debug, Error)]
pub enum EntropyError {
    #[error("entropy is not convex: second derivative {1} at sigma = {0}")]
    NotConvex(f64, f64),
}

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Twice-differentiable scalar entropy candidate.
#[derive(Clone)]
pub struct ScalarEntropy {
    e: RealFn,
    e_prime: RealFn,
    e_second: RealFn,
}

impl ScalarEntropy {
    pub fn new(
        e: impl Fn(f64) -> f64 + Send + Sync + 'static,
        e_prime: impl Fn(f64) -> f64 + Send + Sync + 'static,
        e_second: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> ScalarEntropy {
        ScalarEntropy { e: Arc::new(e), e_prime: Arc::new(e_prime), e_second: Arc::new(e_second) }
    }

    /// (sigma - center)^2, the workhorse family for the audits.
    pub fn quadratic(center: f64) -> ScalarEntropy {
        ScalarEntropy::new(
            move |s| (s - center) * (s - center),
            move |s| 2.0 * (s - center),
            move |_| 2.0,
        )
    }

    pub fn e(&self, sigma: f64) -> f64 {
        (self.e)(sigma)
    }

    pub fn e_prime(&self, sigma: f64) -> f64 {
        (self.e_prime)(sigma)
    }

    pub fn e_second(&self, sigma: f64) -> f64 {
        (self.e_second)(sigma)
    }
}

/// Entropy plus its flux for the scalar law with flux derivative g'.
#[derive(Clone)]
pub struct ScalarEntropyPair {
    pub entropy: ScalarEntropy,
    q1: RealFn,
}

impl ScalarEntropyPair {
    pub fn q1(&self, sigma: f64) -> f64 {
        (self.q1)(sigma)
    }
}

/// Build the flux by integrating Q1' = E1' g' from the base point. The
/// entropy must be convex on the working interval, up to a small sampled
/// slack for roundoff.
pub fn scalar_pair_from_entropy(
    entropy: ScalarEntropy,
    g_prime: impl Fn(f64) -> f64 + Send + Sync + 'static,
    base: f64,
    interval: (f64, f64),
) -> Result<ScalarEntropyPair, EntropyError> {
    for x in linspace(interval.0, interval.1, 257) {
        let second = entropy.e_second(x);
        if second < -1e-8 {
            return Err(EntropyError::NotConvex(x, second));
        }
    }
    let e_prime = entropy.e_prime.clone();
    let g_prime: RealFn = Arc::new(g_prime);
    let q1: RealFn = Arc::new(move |sigma: f64| {
        adaptive_simpson(&|s| e_prime(s) * g_prime(s), base, sigma, 1e-12)
    });
    Ok(ScalarEntropyPair { entropy, q1 })
}

/// Rewrite a pair built for the original flux f in the working variable
/// sigma = orientation * rho + L. Both members compose with the inverse
/// change rho(sigma) = orientation * (sigma - L); the chain rule then gives
/// Q' = E' g' for the reoriented flux g(sigma) = orientation * f(rho(sigma)).
pub fn shift_scalar_entropy(pair: &ScalarEntropyPair, spec: &TransformSpec) -> ScalarEntropyPair {
    let or = spec.orientation.sign();
    let l = spec.l_shift;
    let back = move |sigma: f64| or * (sigma - l);
    let (e, ep, es) = (
        pair.entropy.e.clone(),
        pair.entropy.e_prime.clone(),
        pair.entropy.e_second.clone(),
    );
    let entropy = ScalarEntropy {
        e: Arc::new(move |s| e(back(s))),
        e_prime: Arc::new(move |s| or * ep(back(s))),
        e_second: Arc::new(move |s| es(back(s))),
    };
    let q1 = pair.q1.clone();
    ScalarEntropyPair { entropy, q1: Arc::new(move |s| q1(back(s))) }
}

/// Entropy pair for the 2x2 system, produced by `lift_entropy`.
#[derive(Clone)]
pub struct SystemEntropyPair {
    pub scalar: ScalarEntropyPair,
    velocity: Velocity,
}

/// E2 = eta E1(p), Q2 = Q1 - G E1.
pub fn lift_entropy(scalar: ScalarEntropyPair, velocity: &Velocity) -> SystemEntropyPair {
    SystemEntropyPair { scalar, velocity: velocity.clone() }
}

impl SystemEntropyPair {
    pub fn e2(&self, w: State) -> f64 {
        w.eta * self.scalar.entropy.e(w.p())
    }

    /// The system flux depends on p alone, so it is continuous across the
    /// stationary contact.
    pub fn q2(&self, p: f64) -> f64 {
        self.scalar.q1(p) - self.velocity.g(p) * self.scalar.entropy.e(p)
    }

    /// Hessian of E2 in the conserved variables (eta, v). Writing
    /// kappa = E1''(p)/eta, the matrix is kappa [[p^2, -p], [-p, 1]]: one
    /// eigenvalue is exactly zero (E2 is linear along rays of constant p)
    /// and the other is kappa (1 + p^2).
    pub fn hessian(&self, w: State) -> (f64, f64, f64) {
        let p = w.p();
        let kappa = self.scalar.entropy.e_second(p) / w.eta;
        (kappa * p * p, -kappa * p, kappa)
    }

    pub fn hessian_min_eigenvalue(&self, w: State) -> f64 {
        let (a, b, c) = self.hessian(w);
        sym2_min_eigenvalue(a, b, c)
    }

    /// Defect of Q2'(p) + (E1(p) - p E1'(p)) G'(p) = 0, with Q2' taken by a
    /// five-point stencil so the quadrature noise in Q1 stays below the
    /// compatibility tolerance.
    pub fn compatibility_residual(&self, p: f64) -> f64 {
        let h = 1e-3 * (1.0 + p.abs());
        let q = |x: f64| self.q2(x);
        let dq =
            (-q(p + 2.0 * h) + 8.0 * q(p + h) - 8.0 * q(p - h) + q(p - 2.0 * h)) / (12.0 * h);
        let e1 = self.scalar.entropy.e(p);
        let e1p = self.scalar.entropy.e_prime(p);
        dq + (e1 - p * e1p) * self.velocity.g_prime(p)
    }
}

/// Entropy monitor outcome for one pair over a run.
#[derive(Debug, Clone)]
pub struct EntropyAudit {
    /// Largest residual per step (signed; admissible solutions stay <= 0 up
    /// to rounding).
    pub per_step_max: Vec<f64>,
    /// Largest magnitude per step, for consistency-rate measurements.
    pub per_step_max_abs: Vec<f64>,
    pub max_residual: f64,
}

/// Cell residuals of the discrete entropy inequality
///   E2(w^{n+1}) - E2(w^n) + (k/h) (Qbar_j - Qbar_{j-1}) <= 0
/// with the upwind numerical flux Qbar_j = Q2(p_j^n). The updated state is
/// the average of an exact Riemann solution, so Jensen's inequality keeps
/// every residual nonpositive up to roundoff.
pub fn discrete_entropy_residuals(history: &History, pair: &SystemEntropyPair) -> EntropyAudit {
    let h = history.fields[0].grid.h;
    let mut per_step_max = Vec::with_capacity(history.fields.len().saturating_sub(1));
    let mut per_step_max_abs = Vec::with_capacity(per_step_max.capacity());
    let mut max_residual = f64::NEG_INFINITY;
    for n in 0..history.fields.len() - 1 {
        let before = &history.fields[n];
        let after = &history.fields[n + 1];
        let k = after.time - before.time;
        let fluxes: Vec<f64> = before.states.iter().map(|w| pair.q2(w.p())).collect();
        let mut step_max = f64::NEG_INFINITY;
        let mut step_abs = 0.0_f64;
        for j in 0..before.states.len() {
            let upwind = if j == 0 { fluxes[0] } else { fluxes[j - 1] };
            let residual =
                pair.e2(after.states[j]) - pair.e2(before.states[j]) + (k / h) * (fluxes[j] - upwind);
            step_max = step_max.max(residual);
            step_abs = step_abs.max(residual.abs());
        }
        per_step_max.push(step_max);
        per_step_max_abs.push(step_abs);
        max_residual = max_residual.max(step_max);
    }
    if !max_residual.is_finite() {
        max_residual = 0.0;
    }
    EntropyAudit { per_step_max, per_step_max_abs, max_residual }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::InitialData;
    use crate::flux::FluxSpec;
    use crate::godunov::{evolve, init_cells, Grid};
    use crate::transform::TransformSpec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn burgers_spec() -> TransformSpec {
        TransformSpec::build(&FluxSpec::burgers((1.0, 2.0)).unwrap()).unwrap()
    }

    fn pair_for(spec: &TransformSpec, center: f64, base: f64) -> SystemEntropyPair {
        let s = spec.clone();
        let scalar = scalar_pair_from_entropy(
            ScalarEntropy::quadratic(center),
            move |x| s.transformed_flux_prime(x),
            base,
            spec.interval_tilde,
        )
        .unwrap();
        lift_entropy(scalar, &spec.velocity)
    }

    #[test]
    fn quadrature_flux_matches_symbolic_integral() {
        // E1 = sigma^2 with the half-speed flux: integrand 2 s * s gives
        // Q1 = 2 sigma^3 / 3 from base 0.
        let spec = burgers_spec();
        let scalar = scalar_pair_from_entropy(
            ScalarEntropy::quadratic(0.0),
            {
                let s = spec.clone();
                move |x| s.transformed_flux_prime(x)
            },
            0.0,
            (0.0, 2.0),
        )
        .unwrap();
        for sigma in [0.5, 1.0, 1.7, 2.0] {
            let want = 2.0 * sigma * sigma * sigma / 3.0;
            assert!((scalar.q1(sigma) - want).abs() < 1e-10, "Q1({sigma})");
        }
        // Reversed direction of integration is the negative.
        assert!((scalar.q1(-1.0) + 2.0 / 3.0).abs() < 1e-10);
    }

    #[test]
    fn linear_entropy_integrates_back_to_the_flux() {
        let spec = burgers_spec();
        let scalar = scalar_pair_from_entropy(
            ScalarEntropy::new(|s| s, |_| 1.0, |_| 0.0),
            {
                let s = spec.clone();
                move |x| s.transformed_flux_prime(x)
            },
            0.0,
            (0.5, 2.0),
        )
        .unwrap();
        for sigma in [0.5, 1.0, 1.5, 2.0] {
            assert!((scalar.q1(sigma) - 0.5 * sigma * sigma).abs() < 1e-10);
        }
    }

    #[test]
    fn non_convex_entropy_is_rejected() {
        let result = scalar_pair_from_entropy(
            ScalarEntropy::new(|s| -s * s, |s| -2.0 * s, |_| -2.0),
            |_| 1.0,
            0.0,
            (0.0, 1.0),
        );
        assert!(matches!(result, Err(EntropyError::NotConvex(_, _))));
    }

    #[test]
    fn lifted_flux_has_its_closed_form() {
        // Burgers with E1 = p^2: Q2 = 2p^3/3 - (p/2) p^2 = p^3/6, and the
        // compatibility derivative Q2' = p^2/2.
        let spec = burgers_spec();
        let scalar = scalar_pair_from_entropy(
            ScalarEntropy::quadratic(0.0),
            {
                let s = spec.clone();
                move |x| s.transformed_flux_prime(x)
            },
            0.0,
            (0.5, 2.5),
        )
        .unwrap();
        let pair = lift_entropy(scalar, &spec.velocity);
        for p in [0.7, 1.0, 1.5, 2.0] {
            assert!((pair.q2(p) - p * p * p / 6.0).abs() < 1e-10, "Q2({p})");
            let fd = (pair.q2(p + 1e-4) - pair.q2(p - 1e-4)) / 2e-4;
            assert!((fd - 0.5 * p * p).abs() < 1e-6);
        }
    }

    #[test]
    fn trivial_entropies_reproduce_the_conservation_laws() {
        let spec = burgers_spec();
        // E1 constant: the pair degenerates to the eta equation, Q2 = -G.
        let constant = scalar_pair_from_entropy(
            ScalarEntropy::new(|_| 1.0, |_| 0.0, |_| 0.0),
            {
                let s = spec.clone();
                move |x| s.transformed_flux_prime(x)
            },
            0.0,
            (1.0, 2.0),
        )
        .unwrap();
        let lifted = lift_entropy(constant, &spec.velocity);
        for p in [1.0, 1.3, 2.0] {
            assert!((lifted.q2(p) + spec.velocity.g(p)).abs() < 1e-12);
        }
        // E1 = p with base at the flux zero: the pair reduces to v_t = 0.
        let linear = scalar_pair_from_entropy(
            ScalarEntropy::new(|s| s, |_| 1.0, |_| 0.0),
            {
                let s = spec.clone();
                move |x| s.transformed_flux_prime(x)
            },
            0.0,
            (1.0, 2.0),
        )
        .unwrap();
        let lifted = lift_entropy(linear, &spec.velocity);
        for p in [1.0, 1.3, 2.0] {
            assert!(lifted.q2(p).abs() < 1e-11, "Q2({p}) = {}", lifted.q2(p));
        }
    }

    #[test]
    fn compatibility_holds_for_quadratic_family() {
        let burgers = burgers_spec();
        let bl =
            TransformSpec::build(&FluxSpec::buckley_leverett((0.0, 1.0)).unwrap()).unwrap();
        for spec in [&burgers, &bl] {
            let (a, b) = spec.interval_tilde;
            for center in [a, 0.5 * (a + b), b] {
                let pair = pair_for(spec, center, a);
                for p in linspace(a, b, 200) {
                    let r = pair.compatibility_residual(p);
                    assert!(r.abs() < 1e-8, "residual {r} at p = {p}, center {center}");
                }
            }
        }
    }

    #[test]
    fn hessian_is_positive_semidefinite_on_the_region() {
        let spec = burgers_spec();
        let pair = pair_for(&spec, 1.5, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..500 {
            let p: f64 = rng.gen_range(1.0..2.0);
            let q: f64 = rng.gen_range(1.0..2.0);
            let w = State { eta: q / p, v: q };
            let min_eig = pair.hessian_min_eigenvalue(w);
            // One eigenvalue is exactly zero in exact arithmetic.
            assert!(min_eig >= -1e-10, "min eigenvalue {min_eig}");
            assert!(min_eig.abs() <= 1e-10);
            let (aa, bb, cc) = pair.hessian(w);
            // The nonzero eigenvalue is kappa (1 + p^2) > 0.
            let max_eig = aa + cc - min_eig;
            assert!((max_eig - (2.0 / w.eta) * (1.0 + p * p)).abs() < 1e-9);
            assert!(bb * bb <= aa * cc + 1e-12);
        }
    }

    #[test]
    fn reoriented_pair_still_satisfies_the_flux_relation() {
        // Right-decreasing interval: the working flux is sigma -> -f(-sigma)
        // and the pair composes with rho(sigma) = -sigma. The defining
        // relation Q' = E' g' must survive the change of variable.
        let fx = FluxSpec::polynomial(&[0.0, 0.0, 0.0, 1.0], (-2.0, -1.0)).unwrap();
        let spec = TransformSpec::build(&fx).unwrap();
        let original = scalar_pair_from_entropy(
            ScalarEntropy::quadratic(-1.5),
            {
                let f = fx.clone();
                move |x| f.f_prime(x)
            },
            -1.5,
            (-2.0, -1.0),
        )
        .unwrap();
        let shifted = shift_scalar_entropy(&original, &spec);
        let (a, b) = spec.interval_tilde;
        assert!((a, b) == (1.0, 2.0));
        for sigma in linspace(a + 0.01, b - 0.01, 100) {
            let h = 1e-3;
            let dq = (-shifted.q1(sigma + 2.0 * h) + 8.0 * shifted.q1(sigma + h)
                - 8.0 * shifted.q1(sigma - h)
                + shifted.q1(sigma - 2.0 * h))
                / (12.0 * h);
            let want = shifted.entropy.e_prime(sigma) * spec.transformed_flux_prime(sigma);
            assert!((dq - want).abs() < 1e-8, "at sigma {sigma}: {dq} vs {want}");
        }
        // Identity case: no shift, positive orientation.
        let spec_id = burgers_spec();
        let base = scalar_pair_from_entropy(
            ScalarEntropy::quadratic(1.5),
            {
                let s = spec_id.clone();
                move |x| s.transformed_flux_prime(x)
            },
            1.0,
            (1.0, 2.0),
        )
        .unwrap();
        let same = shift_scalar_entropy(&base, &spec_id);
        for sigma in [1.0, 1.4, 2.0] {
            assert_eq!(same.q1(sigma), base.q1(sigma));
            assert_eq!(same.entropy.e(sigma), base.entropy.e(sigma));
        }
    }

    #[test]
    fn residuals_vanish_on_a_constant_run() {
        let spec = burgers_spec();
        let grid = Grid::from_span((0.0, 1.0), 0.1).unwrap();
        let data = InitialData::Riemann { left: 1.5, right: 1.5, x0: 0.5 };
        let history = evolve(init_cells(&data, grid).unwrap(), 0.5, &spec.velocity, 0.9, false).unwrap();
        let pair = pair_for(&spec, 1.5, 1.0);
        let audit = discrete_entropy_residuals(&history, &pair);
        assert!(audit.per_step_max.iter().all(|&r| r == 0.0));
        assert_eq!(audit.max_residual, 0.0);
    }

    #[test]
    fn shock_and_fan_runs_stay_entropy_admissible() {
        let spec = burgers_spec();
        let grid = Grid::from_span((-1.0, 2.0), 1.0 / 40.0).unwrap();
        for (l, r) in [(2.0, 1.0), (1.0, 2.0)] {
            let data = InitialData::Riemann { left: l, right: r, x0: 0.0 };
            let history =
                evolve(init_cells(&data, grid).unwrap(), 0.5, &spec.velocity, 0.9, false).unwrap();
            for center in [1.0, 1.5, 2.0] {
                let pair = pair_for(&spec, center, 1.0);
                let audit = discrete_entropy_residuals(&history, &pair);
                assert!(
                    audit.max_residual <= 1e-10,
                    "jump {l}->{r}, center {center}: residual {}",
                    audit.max_residual
                );
            }
        }
    }

    #[test]
    fn smooth_run_residual_shrinks_at_first_order() {
        // Before any gradient catastrophe the scheme is consistent, so the
        // per-volume residual of E2_t + Q2_x decays like the mesh size.
        let spec = burgers_spec();
        let data = InitialData::Sine { mean: 1.5, amplitude: 0.2, period: 1.0 };
        let pair = pair_for(&spec, 1.0, 1.0);
        let mut rates = Vec::new();
        for &m in &[50.0_f64, 100.0] {
            let grid = Grid::from_span((0.0, 1.0), 1.0 / m).unwrap();
            let history =
                evolve(init_cells(&data, grid).unwrap(), 0.05, &spec.velocity, 0.9, false).unwrap();
            let audit = discrete_entropy_residuals(&history, &pair);
            let mut worst = 0.0_f64;
            for (n, &r) in audit.per_step_max_abs.iter().enumerate() {
                let k = history.fields[n + 1].time - history.fields[n].time;
                worst = worst.max(r / k);
            }
            rates.push(worst);
        }
        assert!(
            rates[0] / rates[1] > 1.5,
            "residual rates {rates:?} did not shrink at first order"
        );
    }
}
