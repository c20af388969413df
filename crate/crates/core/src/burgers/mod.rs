//! Burgers' equation `u_t + u u_x = ν u_xx`: the time-incremental
//! Green's-function solver, the Cole-Hopf quadrature solution, and the
//! KPZ/Cole-Hopf transforms.

mod cole_hopf;
mod kpz;

pub use cole_hopf::{cole_hopf_exact, ColeHopf};
pub use kpz::{kpz_residual, kpz_transform, KpzDirection};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Field, Grid1D};
use crate::kernels::{KernelSpec, DELTA_LIMIT_RATIO};

/// Default ceiling for the step-size ratios `sqrt(ν dt)/x_s` and `dt/t_s`.
pub const DEFAULT_EPSILON: f64 = 0.05;

/// Kernel windows extend this many standard deviations from the centre.
const KERNEL_HALF_WIDTH: f64 = 12.0;

#[derive(Debug, Clone, PartialEq)]
pub struct BurgersState {
    pub u: Field,
    pub t: f64,
    pub nu: f64,
}

impl BurgersState {
    pub fn new(u: Field, t: f64, nu: f64) -> Result<Self> {
        if !(nu > 0.0 && nu.is_finite()) {
            return Err(Error::invalid("nu", format!("must be positive, got {nu}")));
        }
        if !u.is_finite() {
            return Err(Error::NonFinite("initial velocity".into()));
        }
        Ok(Self { u, t, nu })
    }

    pub fn grid(&self) -> &Grid1D {
        &self.u.grid
    }
}

/// Length and time scales of the drift field with the step-size tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepBounds {
    pub x_s: f64,
    pub t_s: f64,
    pub epsilon_max: f64,
}

/// `x_s = max|u| / max|u_x|` and `t_s = x_s / max|u|`. Fields with no
/// gradient or no motion give infinite scales.
pub fn estimate_scales(state: &BurgersState, epsilon_max: f64) -> Result<StepBounds> {
    if !(epsilon_max > 0.0 && epsilon_max < 1.0) {
        return Err(Error::invalid("epsilon_max", "must lie in (0, 1)"));
    }
    let u_max = state.u.max_abs();
    let grad_max = state.u.derivative().max_abs();
    let (x_s, t_s) = if u_max == 0.0 || grad_max == 0.0 {
        (f64::INFINITY, f64::INFINITY)
    } else {
        let x_s = u_max / grad_max;
        (x_s, x_s / u_max)
    };
    Ok(StepBounds {
        x_s,
        t_s,
        epsilon_max,
    })
}

/// `min(ε² x_s² / ν, ε t_s)`; infinite when neither scale constrains.
pub fn admissible_dt(bounds: &StepBounds, nu: f64) -> f64 {
    let eps = bounds.epsilon_max;
    let diffusive = if nu > 0.0 {
        eps * eps * bounds.x_s * bounds.x_s / nu
    } else {
        f64::INFINITY
    };
    diffusive.min(eps * bounds.t_s)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    pub dt: f64,
    pub admissible_dt: f64,
    /// The step exceeded the admissible size for the default tolerance.
    pub exceeds_admissible: bool,
    /// The kernel was narrower than the grid can resolve and the step fell
    /// back to a pure shift along the drift.
    pub degenerate_kernel: bool,
}

/// Convolve `values` against Gaussians of variance `var` centred on
/// `centers[i]`, one output per node.
///
/// Weights are divided by the kernel's mass on the infinite lattice, so a
/// constant is reproduced exactly however coarse the kernel. Bounded grids
/// are zero-padded with trapezoid end weights; periodic grids wrap.
fn convolve(field: &Field, centers: &[f64], var: f64) -> Vec<f64> {
    let grid = field.grid;
    let n = grid.len() as isize;
    let (x0, dx) = (grid.x_min(), grid.dx());
    let sd = var.sqrt();
    let reach = KERNEL_HALF_WIDTH * sd;
    let inv_two_var = 0.5 / var;
    centers
        .par_iter()
        .map(|&c| {
            let lo = ((c - reach - x0) / dx).floor() as isize;
            let hi = ((c - x0 + reach) / dx).ceil() as isize;
            let (mut mass, mut acc) = (0.0, 0.0);
            for j in lo..=hi {
                let d = x0 + j as f64 * dx - c;
                let g = (-d * d * inv_two_var).exp();
                mass += g;
                if grid.is_periodic() {
                    acc += g * field.values[j.rem_euclid(n) as usize];
                } else if (0..n).contains(&j) {
                    let w = if j == 0 || j == n - 1 { 0.5 } else { 1.0 };
                    acc += w * g * field.values[j as usize];
                }
            }
            acc / mass
        })
        .collect()
}

/// One diffusion step: the field convolved with the heat kernel of
/// variance `2 ν dt`. Degenerate kernels leave the field unchanged.
pub fn heat_step(field: &Field, nu: f64, dt: f64) -> Result<Field> {
    let spec = KernelSpec::heat(nu, dt)?;
    if spec.is_degenerate(field.grid.dx()) {
        return Ok(field.clone());
    }
    let centers = field.grid.points();
    Field::new(field.grid, convolve(field, &centers, spec.variance()))
}

/// Advance by `dt` with the drift frozen at `u(x, t_j)`: each output value
/// is the old field averaged against a Gaussian of variance `2 ν dt`
/// centred on `x - u(x) dt`.
pub fn step_incremental(state: &BurgersState, dt: f64) -> Result<(BurgersState, StepReport)> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::invalid("dt", format!("must be positive, got {dt}")));
    }
    if !state.u.is_finite() {
        return Err(Error::NonFinite("velocity field".into()));
    }
    let admissible = admissible_dt(&estimate_scales(state, DEFAULT_EPSILON)?, state.nu);
    let grid = *state.grid();
    let centers: Vec<f64> = grid
        .points()
        .iter()
        .zip(&state.u.values)
        .map(|(x, u)| x - u * dt)
        .collect();
    let degenerate = state.nu * dt < DELTA_LIMIT_RATIO * grid.dx() * grid.dx();
    let values = if degenerate {
        // The kernel is a delta at the shifted point.
        centers
            .iter()
            .map(|&c| state.u.interpolate(c).unwrap_or(0.0))
            .collect()
    } else {
        convolve(&state.u, &centers, 2.0 * state.nu * dt)
    };
    let next = BurgersState {
        u: Field::new(grid, values)?,
        t: state.t + dt,
        nu: state.nu,
    };
    if !next.u.is_finite() {
        return Err(Error::NonFinite(format!("velocity after step to t = {}", next.t)));
    }
    Ok((
        next,
        StepReport {
            dt,
            admissible_dt: admissible,
            exceeds_admissible: dt > admissible * (1.0 + 1e-12),
            degenerate_kernel: degenerate,
        },
    ))
}

/// Time-stepping controls for [`solve`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub epsilon_max: f64,
    /// Multiplier on the admissible step; values below one refine the run.
    pub dt_factor: f64,
    pub max_steps: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            epsilon_max: DEFAULT_EPSILON,
            dt_factor: 1.0,
            max_steps: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub state: BurgersState,
    pub steps: usize,
    pub min_dt: f64,
    pub max_dt: f64,
}

/// Step to `t_end`, re-estimating the admissible step from the current field
/// before every step and shortening the last step to land on `t_end`.
pub fn solve(initial: &BurgersState, t_end: f64, options: &SolveOptions) -> Result<SolveReport> {
    if !(t_end >= initial.t) {
        return Err(Error::invalid("t_end", "must not precede the initial time"));
    }
    if !(options.dt_factor > 0.0) {
        return Err(Error::invalid("dt_factor", "must be positive"));
    }
    let mut state = initial.clone();
    let (mut steps, mut min_dt, mut max_dt) = (0, f64::INFINITY, 0.0_f64);
    while state.t < t_end {
        if steps == options.max_steps {
            return Err(Error::invalid("max_steps", format!("reached before t_end = {t_end}")));
        }
        let bounds = estimate_scales(&state, options.epsilon_max)?;
        let remaining = t_end - state.t;
        let mut dt = (options.dt_factor * admissible_dt(&bounds, state.nu)).min(remaining);
        if remaining - dt < 1e-12 * t_end.abs().max(1.0) {
            dt = remaining;
        }
        let (mut next, _) = step_incremental(&state, dt)?;
        if dt == remaining {
            next.t = t_end;
        }
        state = next;
        steps += 1;
        min_dt = min_dt.min(dt);
        max_dt = max_dt.max(dt);
    }
    Ok(SolveReport {
        state,
        steps,
        min_dt,
        max_dt,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn periodic_state(f: impl Fn(f64) -> f64, nu: f64) -> BurgersState {
        let grid = Grid1D::periodic(-PI, 2.0 * PI, 256).unwrap();
        BurgersState::new(grid.sample(f), 0.0, nu).unwrap()
    }

    #[test]
    fn scales_of_sinusoids() {
        let b = estimate_scales(&periodic_state(f64::sin, 1.0), 0.1).unwrap();
        assert!((b.x_s - 1.0).abs() < 1e-6 && (b.t_s - 1.0).abs() < 1e-6);
        let grid = Grid1D::periodic(-3.0 * PI, 6.0 * PI, 512).unwrap();
        let s = BurgersState::new(grid.sample(|x| 2.0 * (x / 3.0).sin()), 0.0, 1.0).unwrap();
        let b = estimate_scales(&s, 0.1).unwrap();
        assert!((b.x_s - 3.0).abs() < 1e-6 && (b.t_s - 1.5).abs() < 1e-6);
    }

    #[test]
    fn shock_profile_scale() {
        let grid = Grid1D::centered(2.0, 4001).unwrap();
        let s = BurgersState::new(grid.sample(|x| -(x / 0.1).tanh()), 0.0, 1.0).unwrap();
        let b = estimate_scales(&s, 0.1).unwrap();
        assert!((b.x_s - 0.1).abs() < 0.02, "{b:?}");
    }

    #[test]
    fn constant_field_has_infinite_scales() {
        let b = estimate_scales(&periodic_state(|_| 2.0, 1.0), 0.1).unwrap();
        assert!(b.x_s.is_infinite() && b.t_s.is_infinite());
        assert!(admissible_dt(&b, 1.0).is_infinite());
    }

    #[test]
    fn admissible_dt_formula() {
        let b = StepBounds { x_s: 1.0, t_s: 1.0, epsilon_max: 0.1 };
        assert!((admissible_dt(&b, 1.0) - 0.01).abs() < 1e-15);
        assert!((admissible_dt(&b, 0.0) - 0.1).abs() < 1e-15);
        let b = StepBounds { x_s: 2.0, t_s: 0.5, epsilon_max: 0.05 };
        assert!((admissible_dt(&b, 0.5) - 0.02).abs() < 1e-15);
    }

    #[test]
    fn fixed_points() {
        for c in [0.0, 1.7] {
            let s = periodic_state(|_| c, 0.3);
            let (next, _) = step_incremental(&s, 0.05).unwrap();
            for v in &next.u.values {
                assert!((v - c).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn invalid_steps_are_errors() {
        let s = periodic_state(f64::sin, 0.3);
        assert!(step_incremental(&s, 0.0).is_err());
        let mut bad = s.clone();
        bad.u.values[3] = f64::NAN;
        assert!(step_incremental(&bad, 0.01).is_err());
    }

    #[test]
    fn oversized_step_is_flagged() {
        let s = periodic_state(f64::sin, 0.3);
        let (_, r) = step_incremental(&s, 0.5).unwrap();
        assert!(r.exceeds_admissible);
        let (_, r) = step_incremental(&s, r.admissible_dt * 0.5).unwrap();
        assert!(!r.exceeds_admissible);
    }

    #[test]
    fn tiny_diffusion_shifts_along_drift() {
        let grid = Grid1D::periodic(-PI, 2.0 * PI, 512).unwrap();
        let s = BurgersState::new(grid.sample(|_| 1.0), 0.0, 1e-30).unwrap();
        let (next, r) = step_incremental(&s, 0.01).unwrap();
        assert!(r.degenerate_kernel);
        assert!(next.u.values.iter().all(|v| (v - 1.0).abs() < 1e-14));
    }

    #[test]
    fn heat_step_decays_a_mode_exactly() {
        let grid = Grid1D::periodic(0.0, 2.0 * PI, 128).unwrap();
        let f = grid.sample(|x| (3.0 * x).cos());
        let g = heat_step(&f, 0.2, 0.1).unwrap();
        let decay = (-9.0f64 * 0.2 * 0.1).exp();
        for (x, v) in grid.points().iter().zip(&g.values) {
            assert!((v - decay * (3.0 * x).cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn mass_defect_of_decaying_data_is_first_order() {
        // The frozen-drift kernel moves mass at O(dt^2) per step.
        let grid = Grid1D::centered(10.0, 2001).unwrap();
        let s = BurgersState::new(grid.sample(|x| (-x * x).exp()), 0.0, 0.1).unwrap();
        let before = s.u.integral();
        let defect = |dt_factor| {
            let opts = SolveOptions { dt_factor, ..SolveOptions::default() };
            (solve(&s, 0.5, &opts).unwrap().state.u.integral() - before).abs()
        };
        let (coarse, fine) = (defect(1.0), defect(0.5));
        assert!(coarse < 1e-2);
        assert!(coarse / fine > 1.8, "{coarse} {fine}");
    }
}
