use serde::{Deserialize, Serialize};

use super::strain::{strain_h, strain_p, ConstantStrain, StrainPath};
use crate::error::{Error, Result};

/// Kernels with `nu * dt` below `DELTA_LIMIT_RATIO * dx^2` are treated as
/// delta functions by grid-based callers.
pub const DELTA_LIMIT_RATIO: f64 = 1e-14;

pub fn gaussian_density(x: f64, mean: f64, variance: f64) -> f64 {
    let d = x - mean;
    (-d * d / (2.0 * variance)).exp() / (2.0 * std::f64::consts::PI * variance).sqrt()
}

/// Parameters of one incremental step: diffusivity, the drift frozen at the
/// solution point, and the step length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub nu: f64,
    pub drift_at_solution_point: f64,
    pub dt: f64,
}

impl KernelSpec {
    pub fn new(nu: f64, drift_at_solution_point: f64, dt: f64) -> Result<Self> {
        if !(nu >= 0.0 && nu.is_finite()) {
            return Err(Error::invalid("nu", format!("must be nonnegative, got {nu}")));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::invalid("dt", format!("must be positive, got {dt}")));
        }
        if !drift_at_solution_point.is_finite() {
            return Err(Error::NonFinite("drift".into()));
        }
        Ok(Self {
            nu,
            drift_at_solution_point,
            dt,
        })
    }

    pub fn heat(nu: f64, dt: f64) -> Result<Self> {
        Self::new(nu, 0.0, dt)
    }

    pub fn variance(&self) -> f64 {
        2.0 * self.nu * self.dt
    }

    /// Centre of the kernel in `x'` for solution point `x`.
    pub fn center(&self, x: f64) -> f64 {
        x - self.drift_at_solution_point * self.dt
    }

    /// Whether a grid of spacing `dx` cannot resolve the kernel.
    pub fn is_degenerate(&self, dx: f64) -> bool {
        self.nu * self.dt < DELTA_LIMIT_RATIO * dx * dx
    }
}

fn require_spread(spec: &KernelSpec) -> Result<()> {
    let spread = spec.nu * spec.dt;
    if spread > 0.0 {
        Ok(())
    } else {
        Err(Error::DegenerateKernel(spread))
    }
}

/// Pure-diffusion kernel: Gaussian in `x'` with mean `x` and variance
/// `2 nu dt`.
pub fn heat_kernel(spec: &KernelSpec, x: f64, x_prime: f64) -> Result<f64> {
    if spec.drift_at_solution_point != 0.0 {
        return Err(Error::invalid("drift", "heat kernel requires zero drift"));
    }
    drift_kernel(spec, x, x_prime)
}

/// Frozen-drift incremental kernel: Gaussian in `x'` centred on
/// `x - u(x) dt`.
pub fn drift_kernel(spec: &KernelSpec, x: f64, x_prime: f64) -> Result<f64> {
    require_spread(spec)?;
    Ok(gaussian_density(x_prime, spec.center(x), spec.variance()))
}

/// Single-sheet Green's function in strain `path`: Gaussian in `x` with mean
/// `x0 e^{-h(t)}` and variance `2 nu p(t)`.
pub fn ou_kernel(path: &impl StrainPath, nu: f64, x: f64, x0: f64, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("ou kernel needs t > 0, got {t}")));
    }
    if !(nu > 0.0) {
        return Err(Error::invalid("nu", "ou kernel needs nu > 0"));
    }
    let h = strain_h(path, t)?;
    let p = strain_p(path, t)?;
    Ok(gaussian_density(x, x0 * (-h).exp(), 2.0 * nu * p))
}

/// Time-homogeneous transition density `G(from -> to; dt)`, normalized in
/// `to`. Mean and variance are used to size integration windows.
pub trait TransitionKernel: Sync {
    fn mean(&self, from: f64, dt: f64) -> f64;
    fn variance(&self, from: f64, dt: f64) -> f64;

    fn density(&self, from: f64, to: f64, dt: f64) -> f64 {
        gaussian_density(to, self.mean(from, dt), self.variance(from, dt))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeatKernel {
    pub nu: f64,
}

impl TransitionKernel for HeatKernel {
    fn mean(&self, from: f64, _dt: f64) -> f64 {
        from
    }

    fn variance(&self, _from: f64, dt: f64) -> f64 {
        2.0 * self.nu * dt
    }
}

/// Frozen-drift kernel with forward velocity `drift`; its mean moves by
/// `-drift * dt` (backward drift `b = -v`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftKernel {
    pub nu: f64,
    pub drift: f64,
}

impl TransitionKernel for DriftKernel {
    fn mean(&self, from: f64, dt: f64) -> f64 {
        from - self.drift * dt
    }

    fn variance(&self, _from: f64, dt: f64) -> f64 {
        2.0 * self.nu * dt
    }
}

/// Ornstein-Uhlenbeck transition density for constant strain `k0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuKernel {
    pub nu: f64,
    pub k0: f64,
}

impl TransitionKernel for OuKernel {
    fn mean(&self, from: f64, dt: f64) -> f64 {
        from * (-self.k0 * dt).exp()
    }

    fn variance(&self, _from: f64, dt: f64) -> f64 {
        let p = ConstantStrain { k0: self.k0 }
            .relaxation(dt)
            .expect("constant strain relaxation is infallible");
        2.0 * self.nu * p
    }
}
