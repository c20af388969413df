use rayon::prelude::*;

use super::stats::Estimate;
use crate::error::{Error, Result};
use crate::kernels::{strain_path_sample_stream, Fluctuation, StrainModel, StrainPath};
use crate::quad::Integrator;

/// Sampled `⟨exp(-∫_0^t k')⟩` against `exp(Var(∫_0^t k') / 2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LognormalCheck {
    pub mc: Estimate,
    pub predicted: f64,
    pub z: f64,
}

/// Gaussian moment identity for the strain fluctuation integral, checked over
/// `n_paths` sampled strain paths.
pub fn lognormal_identity_check(
    model: &StrainModel,
    t: f64,
    n_paths: usize,
    dt: f64,
    seed: u64,
) -> Result<LognormalCheck> {
    if n_paths < 2 {
        return Err(Error::invalid("n_paths", "need at least two paths"));
    }
    let samples = (0..n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let path = strain_path_sample_stream(model, t, dt, seed, i)?;
            Ok((-(path.integral(0.0, t)? - model.k0 * t)).exp())
        })
        .collect::<Result<Vec<f64>>>()?;
    let mc = Estimate::from_samples(&samples);
    let predicted = (0.5 * model.integrated_variance(t)).exp();
    Ok(LognormalCheck {
        mc,
        predicted,
        z: mc.z_score(predicted),
    })
}

/// Both sides of `½ ∫_0^t ∫_0^t R(|s - s'|) ds ds' = ∫_0^t (t - s) R(s) ds`
/// by independent quadratures, returned as `(double, single)`.
pub fn rid_identity(model: &StrainModel, t: f64) -> Result<(f64, f64)> {
    if matches!(model.fluctuation, Fluctuation::DeltaCorrelated { .. }) {
        return Err(Error::Unsupported(
            "a delta correlation has no pointwise value to integrate".into(),
        ));
    }
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("t must be nonnegative, got {t}")));
    }
    let r = |tau: f64| model.correlation(tau).unwrap_or(0.0);
    let quad = Integrator::with_tolerance(1e-14, 1e-13);
    let inner = |s: f64| -> f64 {
        // split at the kink of R(|s - s'|)
        let below = quad.integrate(|u| r(s - u), 0.0, s).map(|q| q.value);
        let above = quad.integrate(|u| r(u - s), s, t).map(|q| q.value);
        match (below, above) {
            (Ok(a), Ok(b)) => a + b,
            _ => f64::NAN,
        }
    };
    let double = 0.5 * quad.integrate(inner, 0.0, t)?.value;
    let single = quad.integrate(|s| (t - s) * r(s), 0.0, t)?.value;
    Ok((double, single))
}
