//! First-order upwind finite-volume scheme for the fast-contact system:
//! grid setup, CFL step control, cell averaging of initial data, the
//! conservative update, and the per-step monitors (total variation in
//! invariant coordinates, invariant-region excursions, time-L1 continuity).

use thiserror::Error;

use crate::data::InitialData;
use crate::numerics::linspace;
use crate::temple::{pq_norm, RegionQ, State};
use crate::transform::Velocity;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("span [{0}, {1}] is not an integer multiple of h = {2}")]
    SpanNotDivisible(f64, f64, f64),
    #[error("grid needs at least two cells, got {0}")]
    TooFewCells(usize),
    #[error("initial state sample {0} is not strictly positive")]
    NonPositiveSample(f64),
    #[error("time {0} is outside the recorded history [{1}, {2}]")]
    TimeOutsideHistory(f64, f64, f64),
    #[error("cfl fraction must lie strictly between 0 and 1, got {0}")]
    BadCflFraction(f64),
}

/// Uniform mesh; cell `i` covers the half-open interval
/// (node(i), node(i+1)] of length h.
#[derive(Debug, Clone, Copy)]
pub struct Grid {
    pub h: f64,
    pub x_left: f64,
    pub n_cells: usize,
}

impl Grid {
    pub fn from_span(span: (f64, f64), h: f64) -> Result<Grid, SolverError> {
        let len = span.1 - span.0;
        if !(h > 0.0) || !(len > 0.0) {
            return Err(SolverError::SpanNotDivisible(span.0, span.1, h));
        }
        let n = (len / h).round();
        if (n * h - len).abs() > 1e-9 * len.max(1.0) {
            return Err(SolverError::SpanNotDivisible(span.0, span.1, h));
        }
        let n = n as usize;
        if n < 2 {
            return Err(SolverError::TooFewCells(n));
        }
        Ok(Grid { h, x_left: span.0, n_cells: n })
    }

    pub fn node(&self, j: usize) -> f64 {
        self.x_left + self.h * j as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.n_cells).map(|j| self.node(j)).collect()
    }

    pub fn cell_center(&self, i: usize) -> f64 {
        self.x_left + self.h * (i as f64 + 0.5)
    }

    pub fn x_right(&self) -> f64 {
        self.node(self.n_cells)
    }
}

/// Piecewise-constant solution at one time level. Ghost cells on both sides
/// extrapolate the boundary state, which is exact for data whose variation
/// is compactly supported inside the span.
#[derive(Debug, Clone)]
pub struct CellField {
    pub grid: Grid,
    pub time: f64,
    pub states: Vec<State>,
}

impl CellField {
    pub fn ghost_left(&self) -> State {
        self.states[0]
    }

    pub fn ghost_right(&self) -> State {
        *self.states.last().unwrap()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct StepDiagnostics {
    pub time: f64,
    pub tv_pq: f64,
    pub max_region_violation: f64,
}

/// Complete run record: every time level plus one diagnostics row per step.
#[derive(Debug)]
pub struct History {
    pub region: RegionQ,
    /// Nominal step size; the final step may be shorter to land on the
    /// requested end time.
    pub timestep: f64,
    pub fields: Vec<CellField>,
    pub diagnostics: Vec<StepDiagnostics>,
}

impl History {
    pub fn final_field(&self) -> &CellField {
        self.fields.last().unwrap()
    }

    /// Index of the first level with time >= t (clamped to the last level,
    /// which only triggers for t within rounding of the final time).
    pub fn level_at_or_after(&self, t: f64) -> Result<usize, SolverError> {
        let t0 = self.fields[0].time;
        let t_end = self.final_field().time;
        if t < t0 - 1e-12 || t > t_end + 1e-9 * t_end.abs().max(1.0) {
            return Err(SolverError::TimeOutsideHistory(t, t0, t_end));
        }
        Ok(self
            .fields
            .partition_point(|f| f.time < t)
            .min(self.fields.len() - 1))
    }

    /// Index of the level whose time matches t to rounding accuracy.
    pub fn level_at_time(&self, t: f64) -> Result<usize, SolverError> {
        let i = self.level_at_or_after(t)?;
        let candidates = [i.saturating_sub(1), i];
        let best = candidates
            .into_iter()
            .min_by(|&a, &b| {
                let da = (self.fields[a].time - t).abs();
                let db = (self.fields[b].time - t).abs();
                da.partial_cmp(&db).unwrap()
            })
            .unwrap();
        if (self.fields[best].time - t).abs() <= 1e-9 * t.abs().max(1.0) {
            Ok(best)
        } else {
            Err(SolverError::TimeOutsideHistory(t, self.fields[0].time, self.final_field().time))
        }
    }
}

/// Smallest box [min, max] of the state samples; every sample must be
/// strictly positive (a violation means the transform stage is broken).
pub fn build_region(sigma_samples: impl IntoIterator<Item = f64>) -> Result<RegionQ, SolverError> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for s in sigma_samples {
        if !(s > 0.0) {
            return Err(SolverError::NonPositiveSample(s));
        }
        lo = lo.min(s);
        hi = hi.max(s);
    }
    assert!(lo.is_finite(), "region built from an empty sample set");
    Ok(RegionQ::new(lo, hi))
}

/// Largest fast-wave speed over the invariant region, by sampling a 64x64
/// grid in (p, 1/eta). For fixed p the speed p G'(p) / eta is linear in
/// 1/eta, whose admissible range is [p/upper, p/lower].
pub fn sup_lambda2(region: &RegionQ, velocity: &Velocity) -> f64 {
    let mut sup = 0.0_f64;
    for p in linspace(region.lower, region.upper, 64) {
        let slope = velocity.g_prime(p);
        for inv_eta in linspace(p / region.upper, p / region.lower, 64) {
            sup = sup.max(p * slope * inv_eta);
        }
    }
    sup
}

pub fn cfl_timestep(
    region: &RegionQ,
    velocity: &Velocity,
    h: f64,
    fraction: f64,
) -> Result<f64, SolverError> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(SolverError::BadCflFraction(fraction));
    }
    Ok(fraction * h / sup_lambda2(region, velocity))
}

/// Cell averages of the initial profile, carried by v; eta starts at 1.
pub fn init_cells(sigma0: &InitialData, grid: Grid) -> Result<CellField, SolverError> {
    let mut states = Vec::with_capacity(grid.n_cells);
    for i in 0..grid.n_cells {
        let v = sigma0.cell_average(grid.node(i), grid.node(i + 1));
        if !(v > 0.0) {
            return Err(SolverError::NonPositiveSample(v));
        }
        states.push(State { eta: 1.0, v });
    }
    Ok(CellField { grid, time: 0.0, states })
}

/// One conservative update. All wave speeds are nonnegative, so the flux
/// through each interface is the left cell's flux (-G(p), 0) and
///   eta_j <- eta_j + (k/h) (G(p_j) - G(p_{j-1})),
/// while v is copied through untouched. The left ghost feeds the first cell,
/// which therefore never changes.
pub fn step(field: &CellField, k: f64, velocity: &Velocity) -> CellField {
    let r = k / field.grid.h;
    let mut states = Vec::with_capacity(field.states.len());
    let mut g_upwind = velocity.g(field.ghost_left().p());
    for w in &field.states {
        let g_here = velocity.g(w.p());
        let eta = w.eta + r * (g_here - g_upwind);
        assert!(
            eta > 0.0,
            "eta = {eta} after update at t = {}; CFL or region setup is broken",
            field.time
        );
        states.push(State { eta, v: w.v });
        g_upwind = g_here;
    }
    CellField { grid: field.grid, time: field.time + k, states }
}

enum Stop {
    Time(f64),
    Steps(usize),
}

fn evolve_core(
    field0: CellField,
    velocity: &Velocity,
    stop: Stop,
    cfl_fraction: f64,
    record_diagnostics: bool,
) -> Result<History, SolverError> {
    let region = build_region(field0.states.iter().map(|w| w.v))?;
    let k = cfl_timestep(&region, velocity, field0.grid.h, cfl_fraction)?;
    let t0 = field0.time;
    let mut fields = vec![field0];
    let mut diagnostics = Vec::new();
    let mut i = 0usize;
    loop {
        let t_cur = fields.last().unwrap().time;
        match stop {
            Stop::Steps(n) => {
                if i >= n {
                    break;
                }
            }
            Stop::Time(t_final) => {
                if t_cur >= t_final - 1e-12 * t_final.abs().max(1.0) {
                    break;
                }
            }
        }
        i += 1;
        // Keep recorded times free of accumulation drift: level i sits at
        // t0 + i*k except for a clipped final step.
        let (k_step, new_time) = match stop {
            Stop::Steps(_) => (k, t0 + i as f64 * k),
            Stop::Time(t_final) => {
                if t_cur + k >= t_final {
                    (t_final - t_cur, t_final)
                } else {
                    (k, t0 + i as f64 * k)
                }
            }
        };
        let mut next = step(fields.last().unwrap(), k_step, velocity);
        next.time = new_time;
        if record_diagnostics {
            diagnostics.push(StepDiagnostics {
                time: new_time,
                tv_pq: tv_pq(&next),
                max_region_violation: max_region_violation(&next, &region),
            });
        }
        fields.push(next);
    }
    Ok(History { region, timestep: k, fields, diagnostics })
}

/// March to t_final with the region-wide CFL step, clipping the last step.
pub fn evolve(
    field0: CellField,
    t_final: f64,
    velocity: &Velocity,
    cfl_fraction: f64,
    record_diagnostics: bool,
) -> Result<History, SolverError> {
    evolve_core(field0, velocity, Stop::Time(t_final), cfl_fraction, record_diagnostics)
}

/// March a fixed number of full CFL steps (no clipping).
pub fn evolve_steps(
    field0: CellField,
    n_steps: usize,
    velocity: &Velocity,
    cfl_fraction: f64,
    record_diagnostics: bool,
) -> Result<History, SolverError> {
    evolve_core(field0, velocity, Stop::Steps(n_steps), cfl_fraction, record_diagnostics)
}

/// Total variation in (p, q), ghost pairs included. With constant
/// extrapolation the two ghost terms are identically zero, but summing them
/// keeps the definition literal.
pub fn tv_pq(field: &CellField) -> f64 {
    let mut acc = pq_norm(field.ghost_left(), field.states[0]);
    for w in field.states.windows(2) {
        acc += pq_norm(w[0], w[1]);
    }
    acc + pq_norm(*field.states.last().unwrap(), field.ghost_right())
}

pub fn max_region_violation(field: &CellField, region: &RegionQ) -> f64 {
    field
        .states
        .iter()
        .map(|&w| region.violation(w))
        .fold(0.0, f64::max)
}

/// Largest defect of the local three-point relation
///   d(w_{j-1}^n, w_j^{n+1}) + d(w_j^{n+1}, w_j^n) = d(w_{j-1}^n, w_j^n)
/// in the pq distance. The updated state is a cell average of the interface
/// Riemann solution, so both its invariants interpolate the two parents and
/// the relation holds with equality.
pub fn three_point_defect(before: &CellField, after: &CellField) -> f64 {
    let mut worst = 0.0_f64;
    for j in 0..before.states.len() {
        let prev = if j == 0 { before.ghost_left() } else { before.states[j - 1] };
        let old = before.states[j];
        let new = after.states[j];
        let defect = pq_norm(prev, new) + pq_norm(new, old) - pq_norm(prev, old);
        worst = worst.max(defect.abs());
    }
    worst
}

/// Lipschitz constant of the interface flux with respect to the pq distance,
/// sampled over the region. The flux depends on p alone, so pairs differing
/// only in p realize the supremum; adding q-separation just inflates the
/// denominator.
pub fn lipschitz_flux_constant(region: &RegionQ, velocity: &Velocity) -> f64 {
    let ps = linspace(region.lower, region.upper, 64);
    let gs: Vec<f64> = ps.iter().map(|&p| velocity.g(p)).collect();
    let mut c = 0.0_f64;
    for i in 0..ps.len() {
        for j in i + 1..ps.len() {
            let dp = (ps[i] - ps[j]).abs();
            if dp > 0.0 {
                c = c.max((gs[i] - gs[j]).abs() / dp);
            }
        }
    }
    c
}

/// L1 distance between the levels bracketing t1 and t2 together with its
/// theoretical ceiling C |t2 - t1| TV(w0). Each step changes cell j by
/// (k/h)|P(w_j)-P(w_{j-1})| <= (k/h) C d(w_j, w_{j-1}), and summing over
/// cells and steps telescopes into the bound.
pub fn l1_time_continuity_check(
    history: &History,
    t1: f64,
    t2: f64,
    velocity: &Velocity,
) -> Result<(f64, f64), SolverError> {
    let (t1, t2) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
    let a = &history.fields[history.level_at_or_after(t1)?];
    let b = &history.fields[history.level_at_or_after(t2)?];
    let mut sum = 0.0;
    for (wa, wb) in a.states.iter().zip(&b.states) {
        sum += (wa.eta - wb.eta).abs() + (wa.v - wb.v).abs();
    }
    let lhs = a.grid.h * sum;
    let c = lipschitz_flux_constant(&history.region, velocity);
    let bound = c * (t2 - t1) * tv_pq(&history.fields[0]);
    Ok((lhs, bound))
}
