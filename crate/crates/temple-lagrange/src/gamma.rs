//! Reconstruction of the Lagrangian coordinate change y = gamma(x, t) from a
//! solver history. Its x-slope on each cell is the computed eta and its
//! t-slope along any grid node is the velocity flux there, so the whole
//! surface is determined by one anchor value per time level plus prefix sums
//! of eta across the row.

use thiserror::Error;

use crate::godunov::History;
use crate::scalar::PiecewiseConstant;
use crate::temple::RegionQ;
use crate::transform::{recover_rho, TransformSpec, Velocity};

#[derive(Debug, Error)]
pub enum GammaError {
    #[error("gamma row {level} is not strictly increasing at node {node}")]
    NotIncreasing { level: usize, node: usize },
    #[error(
        "gamma slope {slope} at level {level}, cell {cell} leaves the admissible band [{lo}, {hi}]"
    )]
    SlopeOutOfBand { level: usize, cell: usize, slope: f64, lo: f64, hi: f64 },
}

/// gamma sampled on the space-time grid of a run: rows[n][j] is the value at
/// node j, time level n. The first row is the identity by construction.
#[derive(Debug, Clone)]
pub struct GammaField {
    pub times: Vec<f64>,
    pub nodes: Vec<f64>,
    pub rows: Vec<Vec<f64>>,
}

/// Integrate the coordinate change across the history. The left-edge anchor
/// advances by k G(p) of the first cell each step (that cell never changes,
/// so either endpoint level gives the same increment), and each row extends
/// the anchor by h-weighted prefix sums of eta.
pub fn build_gamma(history: &History, velocity: &Velocity) -> GammaField {
    let grid = history.fields[0].grid;
    assert!(
        history.fields[0].states.iter().all(|w| w.eta == 1.0),
        "coordinate reconstruction requires a history started from unit eta"
    );
    let nodes = grid.nodes();
    let times: Vec<f64> = history.fields.iter().map(|f| f.time).collect();
    let mut rows = Vec::with_capacity(history.fields.len());
    // At t = 0 every eta is 1, so gamma is exactly the identity; copy the
    // node coordinates instead of re-deriving them through sums.
    rows.push(nodes.clone());
    let mut anchor = nodes[0];
    for n in 1..history.fields.len() {
        let k = times[n] - times[n - 1];
        anchor += k * velocity.g(history.fields[n - 1].states[0].p());
        let mut row = Vec::with_capacity(nodes.len());
        let mut acc = anchor;
        row.push(acc);
        for w in &history.fields[n].states {
            acc += grid.h * w.eta;
            row.push(acc);
        }
        rows.push(row);
    }
    GammaField { times, nodes, rows }
}

impl GammaField {
    pub fn n_levels(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, level: usize) -> &[f64] {
        &self.rows[level]
    }

    pub fn final_row(&self) -> &[f64] {
        self.rows.last().unwrap()
    }

    /// Structural soundness: each row strictly increases and every cell
    /// slope stays inside the eta band implied by the invariant region,
    /// [lower/upper, upper/lower], up to rounding slack.
    pub fn validate(&self, region: &RegionQ) -> Result<(), GammaError> {
        let h = self.nodes[1] - self.nodes[0];
        let lo = region.lower / region.upper;
        let hi = region.upper / region.lower;
        let slack = 1e-9 * hi.max(1.0);
        for (level, row) in self.rows.iter().enumerate() {
            for j in 0..row.len() - 1 {
                if !(row[j + 1] > row[j]) {
                    return Err(GammaError::NotIncreasing { level, node: j + 1 });
                }
                let slope = (row[j + 1] - row[j]) / h;
                if slope < lo - slack || slope > hi + slack {
                    return Err(GammaError::SlopeOutOfBand {
                        level,
                        cell: j,
                        slope,
                        lo: lo - slack,
                        hi: hi + slack,
                    });
                }
            }
        }
        Ok(())
    }

    /// x with gamma(x, t_level) = y, by binary search over the row and
    /// linear interpolation inside the straddled cell. Outside the row's
    /// range the result clamps to the nearest end and reports it.
    pub fn invert(&self, level: usize, y: f64) -> (f64, bool) {
        let row = &self.rows[level];
        let last = row.len() - 1;
        if y <= row[0] {
            return (self.nodes[0], y < row[0]);
        }
        if y >= row[last] {
            return (self.nodes[last], y > row[last]);
        }
        let j = row.partition_point(|&g| g < y);
        let frac = (y - row[j - 1]) / (row[j] - row[j - 1]);
        (self.nodes[j - 1] + frac * (self.nodes[j] - self.nodes[j - 1]), false)
    }

    /// Index of the cell whose gamma image contains y (cells are half-open
    /// on the left, matching the solver's cell convention), clamped to the
    /// row with an out-of-range flag.
    pub fn locate_cell(&self, level: usize, y: f64) -> (usize, bool) {
        let row = &self.rows[level];
        let last = row.len() - 1;
        if y <= row[0] {
            return (0, y < row[0]);
        }
        if y > row[last] {
            return (last - 1, true);
        }
        let j = row.partition_point(|&g| g < y);
        (j - 1, false)
    }
}

/// Same surface integrated from the other end: the anchor rides the right
/// edge (fed by the right ghost) and rows grow leftward by suffix sums.
/// Because the right ghost mirrors the last cell, the right-edge slope of
/// the left-anchored build telescopes to exactly the same flux, so the two
/// reconstructions agree to rounding; this rebuild exists to check that.
pub fn build_gamma_right_anchored(history: &History, velocity: &Velocity) -> GammaField {
    let grid = history.fields[0].grid;
    let nodes = grid.nodes();
    let times: Vec<f64> = history.fields.iter().map(|f| f.time).collect();
    let mut rows = Vec::with_capacity(history.fields.len());
    rows.push(nodes.clone());
    let mut anchor = *nodes.last().unwrap();
    for n in 1..history.fields.len() {
        let k = times[n] - times[n - 1];
        anchor += k * velocity.g(history.fields[n - 1].states.last().unwrap().p());
        let mut row = vec![0.0; nodes.len()];
        let mut acc = anchor;
        *row.last_mut().unwrap() = acc;
        for (j, w) in history.fields[n].states.iter().enumerate().rev() {
            acc -= grid.h * w.eta;
            row[j] = acc;
        }
        rows.push(row);
    }
    GammaField { times, nodes, rows }
}

/// Largest defect of the time-slope identity: between consecutive levels the
/// reconstruction satisfies gamma(x_j, t+k) - gamma(x_j, t) = k G(p) with p
/// taken from the cell upwind of node j, because the anchor increment plus
/// the prefix-sum telescoping of the conservative update collapses to that
/// single flux value. Node 0 rides on its ghost, which mirrors cell 0.
pub fn time_slope_defect(gamma: &GammaField, history: &History, velocity: &Velocity) -> f64 {
    let mut worst = 0.0_f64;
    for n in 0..gamma.rows.len() - 1 {
        let k = gamma.times[n + 1] - gamma.times[n];
        let field = &history.fields[n];
        for j in 0..gamma.nodes.len() {
            let p = field.states[j.saturating_sub(1)].p();
            let defect = (gamma.rows[n + 1][j] - gamma.rows[n][j]) / k - velocity.g(p);
            worst = worst.max(defect.abs());
        }
    }
    worst
}

/// The computed solution pushed to the Lagrangian frame at one time level:
/// a step function in y whose breaks are the gamma images of the grid nodes
/// and whose cell values are the transported invariant p = sigma.
pub fn recovered_sigma_profile(history: &History, gamma: &GammaField, level: usize) -> PiecewiseConstant {
    let values = history.fields[level].states.iter().map(|w| w.p()).collect();
    PiecewiseConstant::new(gamma.rows[level].clone(), values)
}

/// Same profile mapped back to the original scalar unknown.
pub fn recovered_rho_profile(
    history: &History,
    gamma: &GammaField,
    level: usize,
    spec: &TransformSpec,
) -> PiecewiseConstant {
    let values = history.fields[level]
        .states
        .iter()
        .map(|w| recover_rho(w.p(), spec))
        .collect();
    PiecewiseConstant::new(gamma.rows[level].clone(), values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::InitialData;
    use crate::flux::FluxSpec;
    use crate::godunov::{evolve, evolve_steps, init_cells, Grid};
    use crate::transform::TransformSpec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn burgers_spec() -> TransformSpec {
        TransformSpec::build(&FluxSpec::burgers((1.0, 2.0)).unwrap()).unwrap()
    }

    #[test]
    fn identity_row_is_copied_bit_for_bit() {
        let spec = burgers_spec();
        let grid = Grid::from_span((-1.0, 1.0), 0.125).unwrap();
        let data = InitialData::Riemann { left: 2.0, right: 1.0, x0: 0.0 };
        let history = evolve(init_cells(&data, grid).unwrap(), 0.2, &spec.velocity, 0.9, false).unwrap();
        let gamma = build_gamma(&history, &spec.velocity);
        assert_eq!(gamma.rows[0], gamma.nodes);
        for (a, b) in gamma.rows[0].iter().zip(grid.nodes()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn constant_state_translates_the_identity() {
        // With a single state c everywhere, eta stays 1 and the whole map is
        // gamma(x, t) = x + t G(c).
        let spec = burgers_spec();
        let grid = Grid::from_span((0.0, 1.0), 0.0625).unwrap();
        let data = InitialData::Riemann { left: 1.5, right: 1.5, x0: 0.5 };
        let history = evolve(init_cells(&data, grid).unwrap(), 0.4, &spec.velocity, 0.9, false).unwrap();
        let gamma = build_gamma(&history, &spec.velocity);
        let g_c = spec.velocity.g(1.5);
        for (n, row) in gamma.rows.iter().enumerate() {
            let t = gamma.times[n];
            for (j, &val) in row.iter().enumerate() {
                let want = gamma.nodes[j] + t * g_c;
                assert!((val - want).abs() < 1e-12, "level {n} node {j}: {val} vs {want}");
            }
        }
    }

    #[test]
    fn time_slope_matches_the_flux_exactly() {
        let spec = burgers_spec();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let grid = Grid { h: 0.05, x_left: -1.0, n_cells: 40 };
        // Rough multi-jump initial profile, run long enough for every wave
        // family to cross several cells.
        let breakpoints: Vec<f64> = (1..8).map(|i| -1.0 + 0.25 * i as f64).collect();
        let values: Vec<f64> = (0..8).map(|_| rng.gen_range(1.0..2.0)).collect();
        let data = InitialData::Piecewise { breakpoints, values };
        let field = init_cells(&data, grid).unwrap();
        let history = evolve_steps(field, 60, &spec.velocity, 0.9, false).unwrap();
        let gamma = build_gamma(&history, &spec.velocity);
        assert!(gamma.validate(&history.region).is_ok());
        let defect = time_slope_defect(&gamma, &history, &spec.velocity);
        assert!(defect < 1e-11, "time slope defect {defect}");
    }

    #[test]
    fn shock_run_keeps_slopes_inside_the_band() {
        let spec = burgers_spec();
        let grid = Grid::from_span((-1.0, 2.0), 0.05).unwrap();
        let data = InitialData::Riemann { left: 2.0, right: 1.0, x0: 0.0 };
        let history = evolve(init_cells(&data, grid).unwrap(), 0.8, &spec.velocity, 0.9, false).unwrap();
        let gamma = build_gamma(&history, &spec.velocity);
        assert!(gamma.validate(&history.region).is_ok());
        // Region [1, 2] allows eta only inside [1/2, 2].
        for row in &gamma.rows {
            for w in row.windows(2) {
                let slope = (w[1] - w[0]) / grid.h;
                assert!(slope >= 0.5 - 1e-9 && slope <= 2.0 + 1e-9);
            }
        }
    }

    #[test]
    fn inversion_is_a_two_sided_identity() {
        let spec = burgers_spec();
        let grid = Grid::from_span((-1.0, 2.0), 0.05).unwrap();
        let data = InitialData::Riemann { left: 2.0, right: 1.0, x0: 0.0 };
        let history = evolve(init_cells(&data, grid).unwrap(), 0.6, &spec.velocity, 0.9, false).unwrap();
        let gamma = build_gamma(&history, &spec.velocity);
        let level = gamma.n_levels() - 1;
        let row = gamma.row(level);
        let (lo, hi) = (row[0], *row.last().unwrap());
        for y in crate::numerics::linspace(lo, hi, 201) {
            let (x, clamped) = gamma.invert(level, y);
            assert!(!clamped);
            // Forward evaluation by the same piecewise-linear rule.
            let j = row.partition_point(|&g| g < y).max(1);
            let frac = (x - gamma.nodes[j - 1]) / (gamma.nodes[j] - gamma.nodes[j - 1]);
            let y_back = row[j - 1] + frac * (row[j] - row[j - 1]);
            assert!((y_back - y).abs() < 1e-10, "roundtrip {y} -> {x} -> {y_back}");
        }
        // Clamping at both ends.
        let (x, clamped) = gamma.invert(level, lo - 1.0);
        assert!(clamped && x == gamma.nodes[0]);
        let (x, clamped) = gamma.invert(level, hi + 1.0);
        assert!(clamped && x == *gamma.nodes.last().unwrap());
    }

    #[test]
    fn cell_lookup_respects_half_open_cells() {
        let spec = burgers_spec();
        let grid = Grid::from_span((0.0, 1.0), 0.25).unwrap();
        let data = InitialData::Riemann { left: 1.5, right: 1.5, x0: 0.5 };
        let history = evolve(init_cells(&data, grid).unwrap(), 0.1, &spec.velocity, 0.9, false).unwrap();
        let gamma = build_gamma(&history, &spec.velocity);
        let level = gamma.n_levels() - 1;
        let row = gamma.row(level);
        // Exactly on an interior node: the cell ending there.
        assert_eq!(gamma.locate_cell(level, row[2]), (1, false));
        // Just past it: the next cell.
        assert_eq!(gamma.locate_cell(level, row[2] + 1e-9), (2, false));
        // Outside on both sides: clamped and flagged.
        assert_eq!(gamma.locate_cell(level, row[0] - 1.0), (0, true));
        assert_eq!(gamma.locate_cell(level, row[4] + 1.0), (3, true));
        // Left edge itself belongs to the first cell without a flag.
        assert_eq!(gamma.locate_cell(level, row[0]), (0, false));
    }

    #[test]
    fn both_anchors_build_the_same_surface() {
        // The right ghost copies the last cell, so the right-edge slope of the
        // left-anchored build telescopes to the same flux the right anchor
        // integrates. The two reconstructions differ only by summation order.
        let spec = burgers_spec();
        let grid = Grid::from_span((-1.0, 2.0), 0.0375).unwrap();
        let data = InitialData::Riemann { left: 2.0, right: 1.0, x0: 0.0 };
        let history = evolve(init_cells(&data, grid).unwrap(), 0.7, &spec.velocity, 0.9, false).unwrap();
        let left = build_gamma(&history, &spec.velocity);
        let right = build_gamma_right_anchored(&history, &spec.velocity);
        let mut worst = 0.0f64;
        for (a, b) in left.rows.iter().zip(&right.rows) {
            for (x, y) in a.iter().zip(b) {
                worst = worst.max((x - y).abs());
            }
        }
        assert!(worst < 1e-9, "anchor mismatch {worst}");
    }

    #[test]
    fn centered_slope_defect_shrinks_linearly_on_smooth_fans() {
        // Against the cell's own flux G(p_j) instead of the upwind one the
        // slope identity only holds to O(h), with constant proportional to
        // the local p gradient. A rarefaction is smooth once it has opened,
        // so past t = 0.25 the worst defect should halve with the mesh.
        let spec = burgers_spec();
        let data = InitialData::Riemann { left: 1.0, right: 2.0, x0: 0.0 };
        let worst_at = |h: f64| -> f64 {
            let grid = Grid::from_span((-1.0, 3.0), h).unwrap();
            let history =
                evolve(init_cells(&data, grid).unwrap(), 1.0, &spec.velocity, 0.9, false).unwrap();
            let gamma = build_gamma(&history, &spec.velocity);
            let mut worst = 0.0f64;
            for n in 1..gamma.n_levels() {
                if gamma.times[n - 1] < 0.25 {
                    continue;
                }
                let k = gamma.times[n] - gamma.times[n - 1];
                for (j, w) in history.fields[n - 1].states.iter().enumerate() {
                    let slope = (gamma.rows[n][j] - gamma.rows[n - 1][j]) / k;
                    worst = worst.max((slope - spec.velocity.g(w.p())).abs());
                }
            }
            worst
        };
        let coarse = worst_at(0.05);
        let fine = worst_at(0.025);
        assert!(fine > 0.0 && coarse / fine > 1.4, "defects {coarse} vs {fine}");
    }

    #[test]
    fn recovered_profile_at_time_zero_is_the_initial_data() {
        let fx = FluxSpec::burgers((1.0, 2.0)).unwrap();
        let spec = TransformSpec::build(&fx).unwrap();
        let grid = Grid::from_span((0.0, 1.0), 0.125).unwrap();
        let data = InitialData::Riemann { left: 2.0, right: 1.0, x0: 0.5 };
        let sigma0 = spec.transform_data(&data);
        let history = evolve(init_cells(&sigma0, grid).unwrap(), 0.1, &spec.velocity, 0.9, false).unwrap();
        let gamma = build_gamma(&history, &spec.velocity);
        let profile = recovered_rho_profile(&history, &gamma, 0, &spec);
        assert_eq!(profile.breaks, grid.nodes());
        for i in 0..8 {
            let x = grid.cell_center(i);
            assert!((profile.eval(x).unwrap() - data.eval(x)).abs() < 1e-14);
        }
    }
}
