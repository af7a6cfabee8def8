//! Self-similar solutions of scalar Riemann problems u_t + phi(u)_x = 0 for
//! arbitrary smooth phi, via the convex/concave envelope of the flux between
//! the two states. u_left < u_right takes the lower convex envelope on
//! [u_left, u_right]; u_left > u_right takes the upper concave envelope.
//! Straight parts of the envelope are shocks, curved parts are rarefactions,
//! and the contact points between them are refined past the sampling grid by
//! a tangency rootfind.

use std::sync::Arc;

use crate::numerics::{bisect, linspace};

/// Flux samples used to seed the envelope hull.
pub const ENVELOPE_SAMPLES: usize = 1024;

/// One elementary wave of the fan, in order of increasing speed. `u_pre` is
/// the state on the slow (upwind) side, `u_post` on the fast side.
#[derive(Debug, Clone, Copy)]
pub enum FanPiece {
    Shock { u_pre: f64, u_post: f64, speed: f64 },
    Rarefaction { u_pre: f64, u_post: f64, speed_pre: f64, speed_post: f64 },
}

impl FanPiece {
    pub fn min_speed(&self) -> f64 {
        match self {
            FanPiece::Shock { speed, .. } => *speed,
            FanPiece::Rarefaction { speed_pre, .. } => *speed_pre,
        }
    }

    pub fn max_speed(&self) -> f64 {
        match self {
            FanPiece::Shock { speed, .. } => *speed,
            FanPiece::Rarefaction { speed_post, .. } => *speed_post,
        }
    }
}

/// The entropy solution of one Riemann problem, sampled by ray xi = x/t.
pub struct RiemannFan {
    phi: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    phi_prime: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub u_left: f64,
    pub u_right: f64,
    pub pieces: Vec<FanPiece>,
}

impl std::fmt::Debug for RiemannFan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RiemannFan")
            .field("u_left", &self.u_left)
            .field("u_right", &self.u_right)
            .field("pieces", &self.pieces)
            .finish()
    }
}

impl RiemannFan {
    pub fn build(
        phi: impl Fn(f64) -> f64 + Send + Sync + 'static,
        phi_prime: impl Fn(f64) -> f64 + Send + Sync + 'static,
        u_left: f64,
        u_right: f64,
    ) -> Self {
        let phi: Arc<dyn Fn(f64) -> f64 + Send + Sync> = Arc::new(phi);
        let phi_prime: Arc<dyn Fn(f64) -> f64 + Send + Sync> = Arc::new(phi_prime);

        let scale = u_left.abs().max(u_right.abs()).max(1.0);
        if (u_left - u_right).abs() <= 1e-13 * scale {
            return RiemannFan { phi, phi_prime, u_left, u_right, pieces: Vec::new() };
        }

        let lo = u_left.min(u_right);
        let hi = u_left.max(u_right);
        let lower = u_left < u_right;
        let n = ENVELOPE_SAMPLES;
        let xs = linspace(lo, hi, n);
        let ys: Vec<f64> = xs.iter().map(|&x| phi(x)).collect();
        let spacing = (hi - lo) / (n - 1) as f64;

        // Monotone-chain hull over the samples. Collinear runs collapse into
        // a single chord.
        let mut hull: Vec<usize> = Vec::with_capacity(n);
        for i in 0..n {
            while hull.len() >= 2 {
                let a = hull[hull.len() - 2];
                let b = hull[hull.len() - 1];
                let cross =
                    (xs[b] - xs[a]) * (ys[i] - ys[a]) - (ys[b] - ys[a]) * (xs[i] - xs[a]);
                let pop = if lower { cross <= 0.0 } else { cross >= 0.0 };
                if pop {
                    hull.pop();
                } else {
                    break;
                }
            }
            hull.push(i);
        }

        // Hull edges that connect adjacent samples follow the curve; merge
        // runs of them into arcs. Anything longer is a chord.
        let mut bounds: Vec<f64> = vec![lo];
        let mut is_arc: Vec<bool> = Vec::new();
        for w in hull.windows(2) {
            let curve_edge = xs[w[1]] - xs[w[0]] <= 1.5 * spacing;
            if curve_edge && matches!(is_arc.last(), Some(true)) {
                *bounds.last_mut().unwrap() = xs[w[1]];
            } else {
                bounds.push(xs[w[1]]);
                is_arc.push(curve_edge);
            }
        }

        // Refine chord endpoints that are interior tangency points: phi'
        // there must equal the chord slope. Double tangents converge by
        // alternating between the two ends.
        let width = hi - lo;
        let tangency = |u_near: f64, u_fixed: f64| -> f64 {
            let d = |u: f64| {
                (phi_prime(u)) * (u_fixed - u) - (phi(u_fixed) - phi(u))
            };
            let a = (u_near - spacing).max(lo);
            let b = (u_near + spacing).min(hi);
            if d(a).signum() != d(b).signum() {
                bisect(d, a, b, 1e-12 * width.max(1.0))
            } else {
                u_near
            }
        };
        for _pass in 0..40 {
            let mut moved = 0.0_f64;
            for s in 0..is_arc.len() {
                if is_arc[s] {
                    continue;
                }
                if s != 0 {
                    let new = tangency(bounds[s], bounds[s + 1]);
                    moved = moved.max((new - bounds[s]).abs());
                    bounds[s] = new;
                }
                if s + 1 != is_arc.len() {
                    let new = tangency(bounds[s + 1], bounds[s]);
                    moved = moved.max((new - bounds[s + 1]).abs());
                    bounds[s + 1] = new;
                }
            }
            if moved <= 1e-13 * width.max(1.0) {
                break;
            }
        }

        // Orient the segments from u_left to u_right and attach speeds.
        let seg_count = is_arc.len();
        let make = |a: f64, b: f64, arc: bool| -> FanPiece {
            if arc {
                FanPiece::Rarefaction {
                    u_pre: a,
                    u_post: b,
                    speed_pre: phi_prime(a),
                    speed_post: phi_prime(b),
                }
            } else {
                FanPiece::Shock { u_pre: a, u_post: b, speed: (phi(b) - phi(a)) / (b - a) }
            }
        };
        let mut pieces: Vec<FanPiece> = Vec::with_capacity(seg_count);
        if lower {
            for s in 0..seg_count {
                pieces.push(make(bounds[s], bounds[s + 1], is_arc[s]));
            }
        } else {
            for s in (0..seg_count).rev() {
                pieces.push(make(bounds[s + 1], bounds[s], is_arc[s]));
            }
        }

        // Envelope slopes are monotone, so wave speeds must come out sorted.
        let speed_scale = pieces
            .iter()
            .map(|p| p.min_speed().abs().max(p.max_speed().abs()))
            .fold(1.0_f64, f64::max);
        for w in pieces.windows(2) {
            assert!(
                w[0].max_speed() <= w[1].min_speed() + 1e-7 * speed_scale,
                "envelope produced out-of-order wave speeds: {:?}",
                w
            );
        }

        RiemannFan { phi, phi_prime, u_left, u_right, pieces }
    }

    /// Value on the ray x/t = xi. On a shock ray the downwind state is
    /// returned, matching the right-limit convention used at xi = 0.
    pub fn sample(&self, xi: f64) -> f64 {
        let mut cur = self.u_left;
        for p in &self.pieces {
            match *p {
                FanPiece::Shock { u_post, speed, .. } => {
                    if xi < speed {
                        return cur;
                    }
                    cur = u_post;
                }
                FanPiece::Rarefaction { u_pre, u_post, speed_pre, speed_post } => {
                    if xi < speed_pre {
                        return cur;
                    }
                    if xi <= speed_post {
                        return self.invert_speed(u_pre, u_post, speed_pre, speed_post, xi);
                    }
                    cur = u_post;
                }
            }
        }
        cur
    }

    /// Exact integral of the fan profile over [xi0, xi1] (xi0 <= xi1). Inside
    /// a rarefaction the substitution xi = phi'(u) gives
    /// integral u dxi = [u xi - phi(u)], so no quadrature is needed.
    pub fn integrate(&self, xi0: f64, xi1: f64) -> f64 {
        assert!(xi1 >= xi0);
        let mut acc = 0.0;
        let mut cursor = xi0;
        let mut cur = self.u_left;
        for p in &self.pieces {
            match *p {
                FanPiece::Shock { u_post, speed, .. } => {
                    let upto = speed.min(xi1);
                    if upto > cursor {
                        acc += cur * (upto - cursor);
                        cursor = upto;
                    }
                    cur = u_post;
                }
                FanPiece::Rarefaction { u_pre, u_post, speed_pre, speed_post } => {
                    let upto = speed_pre.min(xi1);
                    if upto > cursor {
                        acc += cur * (upto - cursor);
                        cursor = upto;
                    }
                    let xb = speed_post.min(xi1);
                    if xb > cursor {
                        let ua = self.invert_speed(u_pre, u_post, speed_pre, speed_post, cursor);
                        let ub = self.invert_speed(u_pre, u_post, speed_pre, speed_post, xb);
                        acc += (ub * xb - (self.phi)(ub)) - (ua * cursor - (self.phi)(ua));
                        cursor = xb;
                    }
                    cur = u_post;
                }
            }
        }
        if xi1 > cursor {
            acc += cur * (xi1 - cursor);
        }
        acc
    }

    fn invert_speed(&self, u_pre: f64, u_post: f64, speed_pre: f64, speed_post: f64, xi: f64) -> f64 {
        if xi <= speed_pre {
            return u_pre;
        }
        if xi >= speed_post || (speed_post - speed_pre).abs() < 1e-14 {
            return u_post;
        }
        let scale = u_pre.abs().max(u_post.abs()).max(1.0);
        let pp = self.phi_prime.clone();
        bisect(move |u| pp(u) - xi, u_pre, u_post, 1e-13 * scale)
    }
}
