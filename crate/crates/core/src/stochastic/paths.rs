use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::rng::stream_rng;
use crate::error::{Error, Result};

/// `dχ = b(χ, s) ds + sqrt(2 nu) dw` on `[s_start, s_end]` from `x_start`.
#[derive(Clone)]
pub struct SdeSpec<B> {
    pub drift: B,
    pub nu: f64,
    pub x_start: f64,
    pub s_start: f64,
    pub s_end: f64,
}

impl<B: Fn(f64, f64) -> f64 + Sync> SdeSpec<B> {
    pub fn new(drift: B, nu: f64, x_start: f64, s_start: f64, s_end: f64) -> Result<Self> {
        if !(nu >= 0.0 && nu.is_finite()) {
            return Err(Error::invalid("nu", "must be nonnegative"));
        }
        if !(s_end > s_start) {
            return Err(Error::invalid("s_end", "must exceed s_start"));
        }
        if !x_start.is_finite() {
            return Err(Error::NonFinite("x_start".into()));
        }
        Ok(Self {
            drift,
            nu,
            x_start,
            s_start,
            s_end,
        })
    }

    pub fn horizon(&self) -> f64 {
        self.s_end - self.s_start
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McParams {
    pub n_paths: usize,
    pub dt: f64,
    pub seed: u64,
}

impl McParams {
    pub fn new(n_paths: usize, dt: f64, seed: u64) -> Self {
        Self { n_paths, dt, seed }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.n_paths == 0 {
            return Err(Error::invalid("n_paths", "need at least one path"));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::invalid("dt", "must be positive"));
        }
        Ok(())
    }

    /// Number of uniform steps covering `horizon` with steps no longer than `dt`.
    pub(crate) fn steps_for(&self, horizon: f64) -> Result<(usize, f64)> {
        self.validate()?;
        if self.dt > horizon * (1.0 + 1e-12) {
            return Err(Error::invalid(
                "dt",
                format!("step {} exceeds the horizon {horizon}", self.dt),
            ));
        }
        let n = ((horizon / self.dt) - 1e-9).ceil().max(1.0) as usize;
        Ok((n, horizon / n as f64))
    }
}

/// Absorbing boundaries available to path simulations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Boundary {
    Unbounded,
    /// Absorbing wall; the domain is the side of `wall` containing `x_start`.
    HalfLine { wall: f64 },
}

/// How crossings of an absorbing wall are detected between time steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FirstPassage {
    /// Only crossings visible at step ends; exit time by linear interpolation.
    Interpolate,
    /// Additionally test for an excursion past the wall inside the step with
    /// the Brownian-bridge crossing probability `exp(-a b / (nu dt))`.
    #[default]
    BrownianBridge,
}

/// Results of one ensemble. Absorbed paths keep the wall position as their
/// terminal value and record an exit time.
#[derive(Debug, Clone, PartialEq)]
pub struct PathEnsemble {
    pub n_paths: usize,
    pub seed: u64,
    /// Step actually used: the requested step shortened to divide the horizon.
    pub dt: f64,
    pub terminal_values: Vec<f64>,
    pub exit_times: Vec<Option<f64>>,
    /// Pathwise trapezoid of the ensemble functional up to exit or horizon.
    pub functional_sums: Vec<f64>,
}

impl PathEnsemble {
    pub fn absorbed_fraction(&self) -> f64 {
        self.exit_times.iter().filter(|t| t.is_some()).count() as f64 / self.n_paths as f64
    }
}

struct PathOutcome {
    terminal: f64,
    exit: Option<f64>,
    functional: f64,
}

/// Sample paths without an accumulated functional.
pub fn sample_paths<B>(
    spec: &SdeSpec<B>,
    mc: &McParams,
    boundary: Boundary,
    passage: FirstPassage,
) -> Result<PathEnsemble>
where
    B: Fn(f64, f64) -> f64 + Sync,
{
    sample_paths_with(spec, mc, boundary, passage, |_, _| 0.0)
}

/// Euler-Maruyama ensemble that also integrates `functional(χ(s), s)` along
/// every path with the trapezoid rule.
pub fn sample_paths_with<B, F>(
    spec: &SdeSpec<B>,
    mc: &McParams,
    boundary: Boundary,
    passage: FirstPassage,
    functional: F,
) -> Result<PathEnsemble>
where
    B: Fn(f64, f64) -> f64 + Sync,
    F: Fn(f64, f64) -> f64 + Sync,
{
    let (n_steps, dt) = mc.steps_for(spec.horizon())?;
    let wall = match boundary {
        Boundary::Unbounded => None,
        Boundary::HalfLine { wall } => {
            if spec.x_start == wall {
                return Err(Error::invalid("x_start", "path starts on the absorbing wall"));
            }
            Some((wall, (spec.x_start - wall).signum()))
        }
    };
    let amplitude = (2.0 * spec.nu * dt).sqrt();

    let simulate = |index: usize| -> Result<PathOutcome> {
        let mut rng = stream_rng(mc.seed, index as u64);
        let mut x = spec.x_start;
        let mut s = spec.s_start;
        let mut f_prev = functional(x, s);
        let mut integral = 0.0;
        for step in 0..n_steps {
            let b = (spec.drift)(x, s);
            if !b.is_finite() {
                return Err(Error::NonFinite(format!(
                    "drift b({x}, {s}) = {b} on path {index}, step {step}"
                )));
            }
            let z: f64 = rng.sample(StandardNormal);
            let next = x + b * dt + amplitude * z;
            let s_next = spec.s_start + (step + 1) as f64 * dt;
            if let Some((w, side)) = wall {
                let a = side * (x - w);
                let c = side * (next - w);
                let crossed = if c <= 0.0 {
                    true
                } else if passage == FirstPassage::BrownianBridge && spec.nu > 0.0 {
                    let u: f64 = rng.random();
                    u < (-a * c / (spec.nu * dt)).exp()
                } else {
                    false
                };
                if crossed {
                    let frac = if c <= 0.0 { a / (a - c) } else { a / (a + c) };
                    let tau = s + frac * dt;
                    let f_wall = functional(w, tau);
                    integral += 0.5 * (f_prev + f_wall) * (tau - s);
                    return Ok(PathOutcome {
                        terminal: w,
                        exit: Some(tau - spec.s_start),
                        functional: integral,
                    });
                }
            }
            let f_next = functional(next, s_next);
            integral += 0.5 * (f_prev + f_next) * dt;
            f_prev = f_next;
            x = next;
            s = s_next;
        }
        Ok(PathOutcome {
            terminal: x,
            exit: None,
            functional: integral,
        })
    };

    let outcomes = (0..mc.n_paths)
        .into_par_iter()
        .map(simulate)
        .collect::<Result<Vec<_>>>()?;

    let mut ensemble = PathEnsemble {
        n_paths: mc.n_paths,
        seed: mc.seed,
        dt,
        terminal_values: Vec::with_capacity(mc.n_paths),
        exit_times: Vec::with_capacity(mc.n_paths),
        functional_sums: Vec::with_capacity(mc.n_paths),
    };
    for o in outcomes {
        ensemble.terminal_values.push(o.terminal);
        ensemble.exit_times.push(o.exit);
        ensemble.functional_sums.push(o.functional);
    }
    Ok(ensemble)
}
