//! Hydrodynamic relaxation modes of a simple liquid at wavenumber `q`.
//!
//! The solvability determinant factors into the shear factor `s + ν q²` and a
//! cubic in `s` coupling pressure, longitudinal velocity and entropy. Its
//! exact roots are compared with the small-`q` modes `-α_T q²` and
//! `±i a0 q - A q²`.

use nalgebra::Matrix3;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Residual accepted for a polished root, relative to the coefficient scale.
pub const ROOT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluidProps {
    /// Ratio of specific heats `C_p / C_v`.
    pub gamma: f64,
    /// Thermal diffusivity.
    pub alpha_t: f64,
    /// Adiabatic sound speed.
    pub a0: f64,
    /// Kinematic shear viscosity.
    pub nu: f64,
    /// Kinematic bulk viscosity.
    pub nu_b: f64,
    /// Thermal expansion coefficient; cancels from the roots.
    #[serde(default = "one")]
    pub beta: f64,
    /// Mean density; cancels from the roots.
    #[serde(default = "one")]
    pub rho: f64,
}

fn one() -> f64 {
    1.0
}

impl FluidProps {
    pub fn new(gamma: f64, alpha_t: f64, a0: f64, nu: f64, nu_b: f64) -> Result<Self> {
        let props = Self { gamma, alpha_t, a0, nu, nu_b, beta: 1.0, rho: 1.0 };
        props.validate()?;
        Ok(props)
    }

    /// Water near room temperature.
    pub fn water_like() -> Self {
        Self {
            gamma: 1.01,
            alpha_t: 1.4e-7,
            a0: 1480.0,
            nu: 1.0e-6,
            nu_b: 2.8e-6,
            beta: 2.1e-4,
            rho: 1000.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("alpha_t", self.alpha_t),
            ("a0", self.a0),
            ("nu", self.nu),
            ("beta", self.beta),
            ("rho", self.rho),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(name, format!("must be positive, got {v}")));
            }
        }
        if !(self.gamma > 1.0 && self.gamma.is_finite()) {
            return Err(Error::invalid("gamma", format!("must exceed 1, got {}", self.gamma)));
        }
        if !(self.nu_b >= 0.0 && self.nu_b.is_finite()) {
            return Err(Error::invalid("nu_b", "must be nonnegative"));
        }
        Ok(())
    }

    /// Longitudinal kinematic viscosity `4ν/3 + ν_B`.
    pub fn longitudinal_viscosity(&self) -> f64 {
        4.0 * self.nu / 3.0 + self.nu_b
    }

    /// Sound attenuation coefficient `[ν_l + (γ - 1) α_T] / 2`.
    pub fn acoustic_damping(&self) -> f64 {
        0.5 * (self.longitudinal_viscosity() + (self.gamma - 1.0) * self.alpha_t)
    }
}

fn check_q(q: f64) -> Result<()> {
    if q >= 0.0 && q.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("wavenumber must be finite and nonnegative, got {q}")))
    }
}

/// Purely diffusive shear mode `-ν q²`.
pub fn shear_mode(props: &FluidProps, q: f64) -> Result<Complex64> {
    check_q(q)?;
    Ok(Complex64::new(-props.nu * q * q, 0.0))
}

/// Small-`q` entropy and acoustic modes `[s1, s2, s3]`, with `s2` the
/// branch of positive frequency.
pub fn asymptotic_modes(props: &FluidProps, q: f64) -> Result<[Complex64; 3]> {
    check_q(q)?;
    let damping = props.acoustic_damping() * q * q;
    Ok([
        Complex64::new(-props.alpha_t * q * q, 0.0),
        Complex64::new(-damping, props.a0 * q),
        Complex64::new(-damping, -props.a0 * q),
    ])
}

/// Monic cubic `[c0, c1, c2]` with `s³ + c2 s² + c1 s + c0` the determinant of
/// the coupled 3×3 block.
///
/// With `a = α_T q²`, `b = ν_l q²`, `c = (γ - 1) α_T q²` the block expands to
/// `(s + a)(s + b)(s + c) + a0² q² (s + a) - c q² (s + b)`.
pub fn cubic_coefficients(props: &FluidProps, q: f64) -> Result<[f64; 3]> {
    props.validate()?;
    check_q(q)?;
    let q2 = q * q;
    let a = props.alpha_t * q2;
    let b = props.longitudinal_viscosity() * q2;
    let c = (props.gamma - 1.0) * props.alpha_t * q2;
    let sound = props.a0 * props.a0 * q2;
    Ok([
        a * b * c + sound * a - c * q2 * b,
        a * b + b * c + c * a + sound - c * q2,
        a + b + c,
    ])
}

/// The full 4×4 determinant at `s`, built from its entries.
pub fn dispersion_determinant(props: &FluidProps, q: f64, s: Complex64) -> Result<Complex64> {
    props.validate()?;
    check_q(q)?;
    let q2 = q * q;
    let c = (props.gamma - 1.0) * props.alpha_t * q2;
    let m = [
        [s + c, props.a0 * props.a0 + 0.0 * s, props.rho / props.beta * c + 0.0 * s],
        [Complex64::new(-q2, 0.0), s + props.longitudinal_viscosity() * q2, Complex64::new(0.0, 0.0)],
        [Complex64::new(props.beta / props.rho * q2, 0.0), Complex64::new(0.0, 0.0), s + props.alpha_t * q2],
    ];
    let block = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    Ok(block * (s + props.nu * q2))
}

/// `|p(s)| / Σ |c_k| |s|^k` for the monic cubic `coeffs`.
pub fn relative_residual(coeffs: &[f64; 3], s: Complex64) -> f64 {
    let [c0, c1, c2] = *coeffs;
    let value = ((s + c2) * s + c1) * s + c0;
    let r = s.norm();
    let scale = r * r * r + c2.abs() * r * r + c1.abs() * r + c0.abs();
    if scale == 0.0 {
        0.0
    } else {
        value.norm() / scale
    }
}

/// Roots of the monic cubic, from companion-matrix eigenvalues of the
/// rescaled polynomial polished by Newton steps. Complex roots come out as
/// exact conjugates and real roots with zero imaginary part.
fn cubic_roots(coeffs: &[f64; 3]) -> Result<[Complex64; 3]> {
    let [c0, c1, c2] = *coeffs;
    let sigma = c2.abs().max(c1.abs().sqrt()).max(c0.abs().cbrt());
    if sigma == 0.0 {
        return Ok([Complex64::new(0.0, 0.0); 3]);
    }
    let (d0, d1, d2) = (c0 / sigma.powi(3), c1 / (sigma * sigma), c2 / sigma);
    let companion = Matrix3::new(0.0, 0.0, -d0, 1.0, 0.0, -d1, 0.0, 1.0, -d2);
    let eig = companion.complex_eigenvalues();
    let p = |z: Complex64| ((z + d2) * z + d1) * z + d0;
    let dp = |z: Complex64| (3.0 * z + 2.0 * d2) * z + d1;
    let mut roots = [Complex64::new(0.0, 0.0); 3];
    for (slot, z0) in roots.iter_mut().zip(eig.iter()) {
        let mut z = *z0;
        for _ in 0..8 {
            let d = dp(z);
            if d.norm() == 0.0 {
                break;
            }
            let step = p(z) / d;
            z -= step;
            if step.norm() <= 1e-16 * z.norm().max(1e-300) {
                break;
            }
        }
        *slot = z * sigma;
    }
    // Pair up conjugates exactly.
    let scale = roots.iter().map(|r| r.norm()).fold(0.0, f64::max);
    let mut out = roots;
    let complex: Vec<usize> = (0..3).filter(|&i| roots[i].im.abs() > 1e-12 * scale).collect();
    match complex.len() {
        0 => out.iter_mut().for_each(|r| r.im = 0.0),
        2 => {
            let (i, j) = (complex[0], complex[1]);
            let upper = if roots[i].im > 0.0 { roots[i] } else { roots[j] };
            let real = (0..3).find(|k| !complex.contains(k)).unwrap();
            out[i] = upper;
            out[j] = upper.conj();
            out[real].im = 0.0;
        }
        _ => {
            return Err(Error::NoConvergence {
                residual: roots.iter().map(|&r| relative_residual(coeffs, r)).fold(0.0, f64::max),
            })
        }
    }
    let worst = out.iter().map(|&r| relative_residual(coeffs, r)).fold(0.0, f64::max);
    if !(worst < ROOT_TOLERANCE) {
        return Err(Error::NoConvergence { residual: worst });
    }
    Ok(out)
}

/// Exact roots `[s1, s2, s3, s4]`: the cubic's roots ordered to pair with
/// [`asymptotic_modes`] by least total distance, then the shear root.
pub fn exact_modes(props: &FluidProps, q: f64) -> Result<[Complex64; 4]> {
    if !(q > 0.0) {
        return Err(Error::Domain(format!("exact modes need q > 0, got {q}")));
    }
    let roots = cubic_roots(&cubic_coefficients(props, q)?)?;
    let target = asymptotic_modes(props, q)?;
    const PERMUTATIONS: [[usize; 3]; 6] =
        [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let cost = |p: &[usize; 3]| (0..3).map(|i| (roots[p[i]] - target[i]).norm()).sum::<f64>();
    let best = PERMUTATIONS
        .iter()
        .min_by(|a, b| cost(a).total_cmp(&cost(b)))
        .unwrap();
    Ok([roots[best[0]], roots[best[1]], roots[best[2]], shear_mode(props, q)?])
}

/// Exact modes over a list of wavenumbers, in input order.
pub fn mode_sweep(props: &FluidProps, qs: &[f64]) -> Result<Vec<[Complex64; 4]>> {
    qs.par_iter().map(|&q| exact_modes(props, q)).collect()
}
