use statrs::function::erf::erfc;

use super::density::TransitionKernel;
use crate::error::{Error, Result};
use crate::grid::Grid1D;

/// Local moment rates of a kernel at one step size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentEstimate {
    pub dt: f64,
    pub mass: f64,
    /// `(1/dt) ∫ (y - x) G dy`
    pub drift: f64,
    /// `(1/dt) ∫ (y - x)^2 G dy`
    pub diffusion: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyReport {
    pub from: f64,
    pub estimates: Vec<MomentEstimate>,
    /// First-order Richardson extrapolation of the two smallest steps.
    pub drift_limit: f64,
    pub diffusion_limit: f64,
}

impl ConsistencyReport {
    /// Log-log slope of `|drift(dt) - expected|` against `dt`.
    pub fn drift_order(&self, expected: f64) -> Option<f64> {
        let (dts, errs): (Vec<_>, Vec<_>) = self
            .estimates
            .iter()
            .map(|e| (e.dt, (e.drift - expected).abs()))
            .unzip();
        observed_order(&dts, &errs)
    }

    pub fn diffusion_order(&self, expected: f64) -> Option<f64> {
        let (dts, errs): (Vec<_>, Vec<_>) = self
            .estimates
            .iter()
            .map(|e| (e.dt, (e.diffusion - expected).abs()))
            .unzip();
        observed_order(&dts, &errs)
    }

    pub fn finest(&self) -> &MomentEstimate {
        self.estimates.last().expect("report holds at least two estimates")
    }
}

/// Least-squares slope of `ln(error)` against `ln(h)`.
///
/// Errors at or below `1e-13` are indistinguishable from exact; if every
/// error is that small the scheme is exact and the order is `+inf`. Returns
/// `None` when fewer than two usable points remain.
pub fn observed_order(h: &[f64], errors: &[f64]) -> Option<f64> {
    if errors.iter().all(|e| *e <= 1e-13) && !errors.is_empty() {
        return Some(f64::INFINITY);
    }
    let pts: Vec<(f64, f64)> = h
        .iter()
        .zip(errors)
        .filter(|(h, e)| **h > 0.0 && **e > 1e-13)
        .map(|(h, e)| (h.ln(), e.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

const MOMENT_NODES: usize = 4001;
const MOMENT_HALF_WIDTH: f64 = 12.0;

fn moments(kernel: &impl TransitionKernel, from: f64, dt: f64) -> Result<MomentEstimate> {
    let mean = kernel.mean(from, dt);
    let sd = kernel.variance(from, dt).sqrt();
    if !(sd > 0.0 && sd.is_finite()) {
        return Err(Error::DegenerateKernel(sd * sd));
    }
    let (a, b) = (mean - MOMENT_HALF_WIDTH * sd, mean + MOMENT_HALF_WIDTH * sd);
    let h = (b - a) / (MOMENT_NODES - 1) as f64;
    let (mut m0, mut m1, mut m2) = (0.0, 0.0, 0.0);
    for i in 0..MOMENT_NODES {
        let y = a + i as f64 * h;
        let w = if i == 0 || i == MOMENT_NODES - 1 { 0.5 } else { 1.0 };
        let g = w * kernel.density(from, y, dt);
        let d = y - from;
        m0 += g;
        m1 += g * d;
        m2 += g * d * d;
    }
    let (m0, m1, m2) = (m0 * h, m1 * h, m2 * h);
    if !(m0.is_finite() && (m0 - 1.0).abs() < 1e-6) {
        return Err(Error::NonNormalizable { mass: m0 });
    }
    Ok(MomentEstimate {
        dt,
        mass: m0,
        drift: m1 / dt,
        diffusion: m2 / dt,
    })
}

/// Recover the local drift and diffusion coefficient of `kernel` at `from`
/// from its first two moments over a decreasing sequence of steps.
pub fn check_consistency(
    kernel: &impl TransitionKernel,
    from: f64,
    dts: &[f64],
) -> Result<ConsistencyReport> {
    if dts.len() < 2 {
        return Err(Error::invalid("dts", "need at least two step sizes"));
    }
    if dts.windows(2).any(|w| !(w[1] < w[0])) || dts.iter().any(|d| !(*d > 0.0)) {
        return Err(Error::invalid("dts", "step sizes must be positive and strictly decreasing"));
    }
    let estimates = dts
        .iter()
        .map(|&dt| moments(kernel, from, dt))
        .collect::<Result<Vec<_>>>()?;
    let [.., coarse, fine] = estimates.as_slice() else {
        unreachable!("at least two estimates")
    };
    let r = coarse.dt / fine.dt;
    let extrapolate = |c: f64, f: f64| (r * f - c) / (r - 1.0);
    Ok(ConsistencyReport {
        from,
        drift_limit: extrapolate(coarse.drift, fine.drift),
        diffusion_limit: extrapolate(coarse.diffusion, fine.diffusion),
        estimates,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChapmanKolmogorovReport {
    /// `max_z |∫ G(x→y; t1) G(y→z; t2) dy - G(x→z; t1+t2)|` over grid nodes.
    pub max_defect: f64,
    /// Largest Gaussian tail mass of the intermediate or direct density that
    /// falls outside the grid.
    pub tail_mass: f64,
    pub insufficient_extent: bool,
}

fn outside_mass(mean: f64, sd: f64, a: f64, b: f64) -> f64 {
    let s = sd * std::f64::consts::SQRT_2;
    0.5 * erfc((mean - a) / s) + 0.5 * erfc((b - mean) / s)
}

/// Compare the composition of two steps against a single step of the
/// combined length, integrating the intermediate point over `grid`.
pub fn chapman_kolmogorov_check(
    kernel: &impl TransitionKernel,
    from: f64,
    t1: f64,
    t2: f64,
    grid: &Grid1D,
) -> Result<ChapmanKolmogorovReport> {
    if !(t1 > 0.0 && t2 > 0.0) {
        return Err(Error::invalid("t1/t2", "both intervals must be positive"));
    }
    let (a, b) = (grid.x_min(), grid.x_max());
    let tail_mass = outside_mass(kernel.mean(from, t1), kernel.variance(from, t1).sqrt(), a, b)
        .max(outside_mass(
            kernel.mean(from, t1 + t2),
            kernel.variance(from, t1 + t2).sqrt(),
            a,
            b,
        ));
    let ys = grid.points();
    let first: Vec<f64> = ys.iter().map(|&y| kernel.density(from, y, t1)).collect();
    let mut max_defect = 0.0_f64;
    let mut integrand = vec![0.0; ys.len()];
    for &z in &ys {
        for (slot, (&y, &g1)) in integrand.iter_mut().zip(ys.iter().zip(&first)) {
            *slot = g1 * kernel.density(y, z, t2);
        }
        let composed = grid.integrate(&integrand);
        let direct = kernel.density(from, z, t1 + t2);
        max_defect = max_defect.max((composed - direct).abs());
    }
    Ok(ChapmanKolmogorovReport {
        max_defect,
        tail_mass,
        insufficient_extent: tail_mass > 1e-12,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::density::{DriftKernel, HeatKernel, OuKernel};

    const DTS: [f64; 5] = [0.08, 0.04, 0.02, 0.01, 0.005];

    #[test]
    fn heat_kernel_recovers_zero_drift_and_two_nu() {
        let r = check_consistency(&HeatKernel { nu: 0.7 }, 0.3, &DTS).unwrap();
        for e in &r.estimates {
            assert!(e.drift.abs() < 1e-6);
            assert!((e.diffusion - 1.4).abs() < 1e-6);
        }
    }

    #[test]
    fn drift_kernel_recovers_backward_drift_first_order() {
        let r = check_consistency(&DriftKernel { nu: 0.5, drift: 2.0 }, 0.0, &DTS).unwrap();
        for e in &r.estimates {
            assert!((e.drift + 2.0).abs() < 1e-9);
        }
        assert!(r.diffusion_order(1.0).unwrap() >= 0.95);
        assert!((r.diffusion_limit - 1.0).abs() < 1e-6);
    }

    #[test]
    fn ou_kernel_recovers_linear_drift() {
        let (k0, x) = (1.3, 0.8);
        let r = check_consistency(&OuKernel { nu: 0.1, k0 }, x, &DTS).unwrap();
        assert!((r.finest().drift + k0 * x).abs() < 0.01);
        assert!(r.drift_order(-k0 * x).unwrap() >= 0.95);
        assert!(r.diffusion_order(0.2).unwrap() >= 0.95);
        assert!((r.drift_limit + k0 * x).abs() < 1e-4);
    }

    struct Doubled;
    impl TransitionKernel for Doubled {
        fn mean(&self, from: f64, _dt: f64) -> f64 {
            from
        }
        fn variance(&self, _from: f64, dt: f64) -> f64 {
            dt
        }
        fn density(&self, from: f64, to: f64, dt: f64) -> f64 {
            2.0 * HeatKernel { nu: 0.5 }.density(from, to, dt)
        }
    }

    #[test]
    fn non_normalizable_kernel_fails() {
        assert!(matches!(
            check_consistency(&Doubled, 0.0, &DTS),
            Err(Error::NonNormalizable { .. })
        ));
    }

    #[test]
    fn step_sequence_must_decrease() {
        assert!(check_consistency(&HeatKernel { nu: 1.0 }, 0.0, &[0.1, 0.2]).is_err());
        assert!(check_consistency(&HeatKernel { nu: 1.0 }, 0.0, &[0.1]).is_err());
    }

    #[test]
    fn observed_order_of_known_sequences() {
        let h = [0.1, 0.05, 0.025];
        let e: Vec<f64> = h.iter().map(|x| 3.0 * x * x).collect();
        assert!((observed_order(&h, &e).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(observed_order(&h, &[0.0, 0.0, 0.0]), Some(f64::INFINITY));
        assert_eq!(observed_order(&h, &[1.0, 0.0, 0.0]), None);
    }

    #[test]
    fn chapman_kolmogorov_heat_and_ou() {
        let grid = Grid1D::centered(12.0, 1201).unwrap();
        let heat = chapman_kolmogorov_check(&HeatKernel { nu: 1.0 }, 0.5, 0.5, 0.5, &grid).unwrap();
        assert!(heat.max_defect < 1e-8, "{heat:?}");
        assert!(!heat.insufficient_extent);
        let ou = chapman_kolmogorov_check(&OuKernel { nu: 1.0, k0: 1.0 }, 1.0, 0.3, 0.7, &grid).unwrap();
        assert!(ou.max_defect < 1e-8, "{ou:?}");
    }

    #[test]
    fn truncated_grid_is_flagged() {
        // one standard deviation of the t1 = 0.5 density either side
        let grid = Grid1D::centered(1.0, 201).unwrap();
        let r = chapman_kolmogorov_check(&HeatKernel { nu: 1.0 }, 0.0, 0.5, 0.5, &grid).unwrap();
        assert!(r.insufficient_extent);
        assert!(r.max_defect > 1e-3);
    }
}
