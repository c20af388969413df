use std::f64::consts::PI;

use super::paths::{sample_paths, sample_paths_with, Boundary, FirstPassage, McParams, SdeSpec};
use super::stats::Estimate;
use crate::error::{Error, Result};
use crate::kernels::{gaussian_density, TransitionKernel};
use crate::quad::Integrator;

/// Monte Carlo side, quadrature side, and their gap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BridgeReport {
    pub mc: Estimate,
    pub quadrature: f64,
    /// Gap in MC standard errors.
    pub z: f64,
    /// `|mc - quadrature| / |quadrature|`, or the absolute gap when the
    /// quadrature vanishes.
    pub relative_defect: f64,
}

impl BridgeReport {
    fn new(mc: Estimate, quadrature: f64) -> Self {
        let gap = (mc.mean - quadrature).abs();
        let relative_defect = if quadrature != 0.0 { gap / quadrature.abs() } else { gap };
        Self {
            mc,
            quadrature,
            z: mc.z_score(quadrature),
            relative_defect,
        }
    }

    pub fn passes(&self, n_se: f64) -> bool {
        self.z <= n_se
    }
}

const PROBE_STEP: f64 = 1e-6;
const PROBE_TOL: f64 = 1e-3;

/// The kernel's short-time drift and diffusion must match the SDE at the
/// starting point and one unit either side.
fn check_compatible<B>(kernel: &impl TransitionKernel, spec: &SdeSpec<B>) -> Result<()>
where
    B: Fn(f64, f64) -> f64 + Sync,
{
    for x in [spec.x_start - 1.0, spec.x_start, spec.x_start + 1.0] {
        let drift = (kernel.mean(x, PROBE_STEP) - x) / PROBE_STEP;
        let diffusion = kernel.variance(x, PROBE_STEP) / PROBE_STEP;
        let b = (spec.drift)(x, spec.s_start);
        let drift_ok = (drift - b).abs() <= PROBE_TOL * b.abs().max(1.0);
        let diffusion_ok = (diffusion - 2.0 * spec.nu).abs() <= PROBE_TOL * (2.0 * spec.nu).max(1e-12);
        if !(drift_ok && diffusion_ok) {
            return Err(Error::invalid(
                "kernel",
                format!(
                    "kernel has drift {drift} and diffusion {diffusion} at x = {x}, SDE has {b} and {}",
                    2.0 * spec.nu
                ),
            ));
        }
    }
    Ok(())
}

fn integrator() -> Integrator {
    Integrator::with_tolerance(1e-11, 1e-11)
}

fn expect_against_kernel(
    kernel: &impl TransitionKernel,
    from: f64,
    dt: f64,
    f: impl Fn(f64) -> f64,
) -> Result<f64> {
    let mean = kernel.mean(from, dt);
    let sd = kernel.variance(from, dt).sqrt();
    if !(sd > 0.0) {
        return Ok(f(mean));
    }
    integrator()
        .integrate(|y| f(y) * kernel.density(from, y, dt), mean - 12.0 * sd, mean + 12.0 * sd)
        .map(|q| q.value)
}

/// `E[φ(χ(T))]` by simulation against `∫ φ(x') G(x_start → x'; T) dx'`.
pub fn bridge_check_initial<B>(
    phi: impl Fn(f64) -> f64 + Sync,
    kernel: &impl TransitionKernel,
    spec: &SdeSpec<B>,
    mc: &McParams,
) -> Result<BridgeReport>
where
    B: Fn(f64, f64) -> f64 + Sync,
{
    check_compatible(kernel, spec)?;
    let quadrature = expect_against_kernel(kernel, spec.x_start, spec.horizon(), &phi)?;
    let ensemble = sample_paths(spec, mc, Boundary::Unbounded, FirstPassage::Interpolate)?;
    let samples: Vec<f64> = ensemble.terminal_values.iter().map(|&x| phi(x)).collect();
    Ok(BridgeReport::new(Estimate::from_samples(&samples), quadrature))
}

/// `E[∫ f(χ(s), s) ds]` by simulation against the space-time quadrature
/// `∫_0^T ∫ f(x', s_start + s) G(x_start → x'; s) dx' ds`.
pub fn bridge_check_forcing<B>(
    forcing: impl Fn(f64, f64) -> f64 + Sync,
    kernel: &impl TransitionKernel,
    spec: &SdeSpec<B>,
    mc: &McParams,
) -> Result<BridgeReport>
where
    B: Fn(f64, f64) -> f64 + Sync,
{
    check_compatible(kernel, spec)?;
    // A failed inner quadrature surfaces as a non-finite outer integrand.
    let quadrature = integrator()
        .integrate(
            |s| {
                expect_against_kernel(kernel, spec.x_start, s, |y| forcing(y, spec.s_start + s))
                    .unwrap_or(f64::NAN)
            },
            0.0,
            spec.horizon(),
        )?
        .value;
    let ensemble = sample_paths_with(spec, mc, Boundary::Unbounded, FirstPassage::Interpolate, &forcing)?;
    Ok(BridgeReport::new(
        Estimate::from_samples(&ensemble.functional_sums),
        quadrature,
    ))
}

/// Method-of-images density of Brownian motion with diffusivity `nu` started
/// at `x` and absorbed at `wall`; zero on the far side of the wall.
pub fn half_line_kernel(nu: f64, wall: f64, x: f64, x_prime: f64, t: f64) -> f64 {
    if (x - wall) * (x_prime - wall) <= 0.0 {
        return 0.0;
    }
    let var = 2.0 * nu * t;
    gaussian_density(x_prime, x, var) - gaussian_density(x_prime, 2.0 * wall - x, var)
}

/// Probability flux into the wall, `ν |∂G/∂x'|` at `x' = wall`: the
/// first-passage time density of the absorbed process.
pub fn half_line_wall_flux(nu: f64, wall: f64, x: f64, t: f64) -> f64 {
    if !(t > 0.0) {
        return 0.0;
    }
    let d = (x - wall).abs();
    d / (t * (4.0 * PI * nu * t).sqrt()) * (-d * d / (4.0 * nu * t)).exp()
}

/// Expected wall data `E[g(τ); τ ≤ T]` at the first-passage time `τ` of
/// driftless paths on a half-line, against `∫_0^T g(s) ν |∂G/∂x'|_wall ds`.
/// `g` is indexed by elapsed simulation time.
pub fn bridge_check_boundary<B>(
    g: impl Fn(f64) -> f64 + Sync,
    spec: &SdeSpec<B>,
    wall: f64,
    mc: &McParams,
    passage: FirstPassage,
) -> Result<BridgeReport>
where
    B: Fn(f64, f64) -> f64 + Sync,
{
    let probes = [wall, spec.x_start, 0.5 * (wall + spec.x_start), 2.0 * spec.x_start - wall];
    for s in [spec.s_start, 0.5 * (spec.s_start + spec.s_end), spec.s_end] {
        if probes.iter().any(|&x| (spec.drift)(x, s) != 0.0) {
            return Err(Error::Unsupported(
                "boundary bridge check needs zero drift; the image kernel is driftless".into(),
            ));
        }
    }
    if !(spec.nu > 0.0) {
        return Err(Error::invalid("nu", "boundary bridge check needs nu > 0"));
    }
    let quadrature = integrator()
        .integrate(
            |s| g(s) * half_line_wall_flux(spec.nu, wall, spec.x_start, s),
            0.0,
            spec.horizon(),
        )?
        .value;
    let ensemble = sample_paths(spec, mc, Boundary::HalfLine { wall }, passage)?;
    let samples: Vec<f64> = ensemble
        .exit_times
        .iter()
        .map(|tau| tau.map_or(0.0, &g))
        .collect();
    Ok(BridgeReport::new(Estimate::from_samples(&samples), quadrature))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{DriftKernel, HeatKernel, OuKernel};
    use statrs::function::erf::erfc;

    #[test]
    fn image_kernel_vanishes_on_wall_and_beyond() {
        assert_eq!(half_line_kernel(1.0, 0.0, 1.0, 0.0, 0.5), 0.0);
        assert_eq!(half_line_kernel(1.0, 0.0, 1.0, -0.3, 0.5), 0.0);
        assert!(half_line_kernel(1.0, 0.0, 1.0, 0.3, 0.5) > 0.0);
    }

    #[test]
    fn wall_flux_is_the_normal_derivative_of_the_image_kernel() {
        let (nu, wall, x, t) = (0.7, 0.2, 1.1, 0.9);
        let h = 1e-5;
        let g = |y| half_line_kernel(nu, wall, x, y, t);
        // second-order one-sided difference; G(wall) = 0
        let slope = (4.0 * g(wall + h) - g(wall + 2.0 * h)) / (2.0 * h);
        assert!((nu * slope - half_line_wall_flux(nu, wall, x, t)).abs() < 1e-8);
    }

    #[test]
    fn wall_flux_integrates_to_erfc_absorption_probability() {
        let (nu, d, t) = (0.5, 0.8, 2.0);
        let q = integrator().integrate(|s| half_line_wall_flux(nu, 0.0, d, s), 0.0, t).unwrap().value;
        assert!((q - erfc(d / (4.0 * nu * t).sqrt())).abs() < 1e-10);
    }

    #[test]
    fn incompatible_kernel_is_rejected() {
        let spec = SdeSpec::new(|_, _| 0.0, 1.0, 0.0, 0.0, 1.0).unwrap();
        let mc = McParams::new(10, 0.1, 0);
        assert!(bridge_check_initial(|x| x, &HeatKernel { nu: 0.5 }, &spec, &mc).is_err());
        assert!(bridge_check_initial(|x| x, &DriftKernel { nu: 1.0, drift: 1.0 }, &spec, &mc).is_err());
        assert!(bridge_check_initial(|x| x, &HeatKernel { nu: 1.0 }, &spec, &mc).is_ok());
    }

    #[test]
    fn normalization_and_martingale() {
        let spec = SdeSpec::new(|_, _| 0.0, 1.0, 0.3, 0.0, 1.0).unwrap();
        let mc = McParams::new(5000, 0.05, 4);
        let one = bridge_check_initial(|_| 1.0, &HeatKernel { nu: 1.0 }, &spec, &mc).unwrap();
        assert!((one.quadrature - 1.0).abs() < 1e-10 && one.z == 0.0);
        let lin = bridge_check_initial(|x| x, &HeatKernel { nu: 1.0 }, &spec, &mc).unwrap();
        assert!((lin.quadrature - 0.3).abs() < 1e-10);
        assert!(lin.passes(3.5), "{lin:?}");
    }

    #[test]
    fn forcing_quadrature_of_simple_integrands() {
        let spec = SdeSpec::new(|_, _| 0.0, 0.5, 0.4, 0.0, 2.0).unwrap();
        let mc = McParams::new(2000, 0.05, 4);
        let one = bridge_check_forcing(|_, _| 1.0, &HeatKernel { nu: 0.5 }, &spec, &mc).unwrap();
        assert!((one.quadrature - 2.0).abs() < 1e-9);
        let sq = bridge_check_forcing(|x, _| x * x, &HeatKernel { nu: 0.5 }, &spec, &mc).unwrap();
        // ∫_0^2 (x0² + 2 ν s) ds
        assert!((sq.quadrature - (0.16 * 2.0 + 2.0)).abs() < 1e-9);
    }

    #[test]
    fn ou_mean_square() {
        let spec = SdeSpec::new(|x: f64, _| -x, 1.0, 1.0, 0.0, 1.0).unwrap();
        let r = bridge_check_initial(|x| x * x, &OuKernel { nu: 1.0, k0: 1.0 }, &spec, &McParams::new(4000, 0.01, 2)).unwrap();
        let exact = (-2.0f64).exp() + (1.0 - (-2.0f64).exp());
        assert!((r.quadrature - exact).abs() < 1e-10);
    }

    #[test]
    fn boundary_check_rejects_drift() {
        let spec = SdeSpec::new(|_, _| 0.5, 1.0, 1.0, 0.0, 1.0).unwrap();
        let r = bridge_check_boundary(|_| 1.0, &spec, 0.0, &McParams::new(10, 0.1, 0), FirstPassage::default());
        assert!(matches!(r, Err(Error::Unsupported(_))));
    }

    #[test]
    fn absorption_probability_matches_erfc() {
        let spec = SdeSpec::new(|_, _| 0.0, 1.0, 1.0, 0.0, 1.0).unwrap();
        let r = bridge_check_boundary(|_| 1.0, &spec, 0.0, &McParams::new(20_000, 1e-3, 6), FirstPassage::BrownianBridge).unwrap();
        assert!((r.quadrature - erfc(0.5)).abs() < 1e-10);
        assert!(r.passes(3.5), "{r:?}");
    }
}
