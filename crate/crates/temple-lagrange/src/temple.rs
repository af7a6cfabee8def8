//! State algebra and exact Riemann solver for the system
//! eta_t - G(v/eta)_x = 0, v_t = 0. The first characteristic family is a
//! stationary contact carrying the invariant p = v/eta; the second family
//! has speed lambda2 = (v/eta^2) G'(v/eta) > 0 and carries q = v. With all
//! wave speeds nonnegative the Godunov interface flux is simply the flux of
//! the left state.

use crate::envelope::{FanPiece, RiemannFan};
use crate::transform::Velocity;

/// One cell state w = (eta, v), both strictly positive in valid fields.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct State {
    pub eta: f64,
    pub v: f64,
}

impl State {
    pub fn new(eta: f64, v: f64) -> State {
        debug_assert!(eta > 0.0 && v > 0.0, "state out of range: eta={eta}, v={v}");
        State { eta, v }
    }

    /// Riemann invariant of the contact family.
    pub fn p(&self) -> f64 {
        self.v / self.eta
    }

    /// Riemann invariant of the fast family.
    pub fn q(&self) -> f64 {
        self.v
    }
}

pub fn riemann_invariants(w: State) -> (f64, f64) {
    (w.p(), w.q())
}

pub fn lambda2(w: State, velocity: &Velocity) -> f64 {
    (w.v / (w.eta * w.eta)) * velocity.g_prime(w.p())
}

/// The state between the contact and the fast wave: p matches the left
/// state, q matches the right state.
pub fn middle_state(wl: State, wr: State) -> State {
    State { eta: wl.eta * wr.v / wl.v, v: wr.v }
}

/// Distance |p_L - p_R| + |q_L - q_R| in invariant coordinates.
pub fn pq_norm(wl: State, wr: State) -> f64 {
    (wl.p() - wr.p()).abs() + (wl.q() - wr.q()).abs()
}

/// The invariant quadrilateral: both invariants confined to [lower, upper].
/// In (eta, v) coordinates its vertices are (lower/upper, lower), (1, lower),
/// (upper/lower, upper), (1, upper).
#[derive(Debug, Clone, Copy)]
pub struct RegionQ {
    pub lower: f64,
    pub upper: f64,
}

impl RegionQ {
    pub fn new(lower: f64, upper: f64) -> RegionQ {
        assert!(
            lower > 0.0 && lower <= upper,
            "invalid region bounds: [{lower}, {upper}]"
        );
        RegionQ { lower, upper }
    }

    pub fn contains(&self, w: State, tol: f64) -> bool {
        let (p, q) = riemann_invariants(w);
        p >= self.lower - tol
            && p <= self.upper + tol
            && q >= self.lower - tol
            && q <= self.upper + tol
    }

    /// Largest excursion of either invariant outside [lower, upper];
    /// zero for interior states.
    pub fn violation(&self, w: State) -> f64 {
        let (p, q) = riemann_invariants(w);
        let mut worst = 0.0_f64;
        for c in [p, q] {
            worst = worst.max(self.lower - c).max(c - self.upper);
        }
        worst
    }
}

/// eta along the ray x/t = xi inside the fast wave connecting eta_left to
/// eta_right at frozen v. This is the scalar Riemann problem for
/// phi(eta) = -G(v/eta), whose derivative is exactly lambda2.
pub fn wave2_sampler(
    v: f64,
    eta_left: f64,
    eta_right: f64,
    xi: f64,
    velocity: &Velocity,
) -> f64 {
    fast_wave_fan(v, eta_left, eta_right, velocity).sample(xi)
}

/// The full fan of the frozen-v scalar law; used by the sampler, the wave
/// classifier, and the averaging tests.
pub fn fast_wave_fan(v: f64, eta_left: f64, eta_right: f64, velocity: &Velocity) -> RiemannFan {
    let vel_phi = velocity.clone();
    let vel_phip = velocity.clone();
    RiemannFan::build(
        move |eta: f64| -vel_phi.g(v / eta),
        move |eta: f64| (v / (eta * eta)) * vel_phip.g_prime(v / eta),
        eta_left,
        eta_right,
    )
}

/// Sample the two-wave Riemann solution: the left state for xi < 0, the fast
/// wave for xi > 0, and the middle state (right limit of the contact) at
/// xi = 0 itself.
pub fn solve_riemann(wl: State, wr: State, xi: f64, velocity: &Velocity) -> State {
    if xi < 0.0 {
        return wl;
    }
    let wm = middle_state(wl, wr);
    if xi == 0.0 {
        return wm;
    }
    State { eta: wave2_sampler(wr.v, wm.eta, wr.eta, xi, velocity), v: wr.v }
}

/// Interface flux P(wL) = (-G(p_L), 0). Every wave speed is nonnegative and
/// the flux is continuous across the stationary contact, so the left state
/// decides; `wr` is accepted to keep the upwinding explicit at call sites.
pub fn godunov_flux(wl: State, _wr: State, velocity: &Velocity) -> (f64, f64) {
    (-velocity.g(wl.p()), 0.0)
}

/// Shape of the fast wave in a Riemann solution.
#[derive(Debug, Clone)]
pub enum Wave2 {
    Constant,
    Shock { speed: f64 },
    Rarefaction { speed_pre: f64, speed_post: f64 },
    /// Non-convex composite: the full ordered piece list.
    Composite { pieces: Vec<FanPiece> },
}

#[derive(Debug, Clone)]
pub struct WaveStructure {
    pub left: State,
    pub middle: State,
    pub right: State,
    pub wave2: Wave2,
}

pub fn riemann_structure(wl: State, wr: State, velocity: &Velocity) -> WaveStructure {
    let wm = middle_state(wl, wr);
    let fan = fast_wave_fan(wr.v, wm.eta, wr.eta, velocity);
    let wave2 = match fan.pieces.as_slice() {
        [] => Wave2::Constant,
        [FanPiece::Shock { speed, .. }] => Wave2::Shock { speed: *speed },
        [FanPiece::Rarefaction { speed_pre, speed_post, .. }] => {
            Wave2::Rarefaction { speed_pre: *speed_pre, speed_post: *speed_post }
        }
        pieces => Wave2::Composite { pieces: pieces.to_vec() },
    };
    WaveStructure { left: wl, middle: wm, right: wr, wave2 }
}
