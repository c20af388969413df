use super::paths::{sample_paths_with, Boundary, FirstPassage, McParams, SdeSpec};
use super::stats::Estimate;
use crate::error::{Error, Result};

/// Estimate `weight · E[φ(χ(s_end))] + E[∫ f(χ(s), s) ds]` over the diffusion
/// described by `spec`.
///
/// `weight` multiplies only the initial-data term; the vortex-stretching
/// factor `e^{h(t)}` enters here.
pub fn feynman_kac_estimate<B, P, F>(
    spec: &SdeSpec<B>,
    phi: P,
    forcing: F,
    mc: &McParams,
    weight: f64,
) -> Result<Estimate>
where
    B: Fn(f64, f64) -> f64 + Sync,
    P: Fn(f64) -> f64 + Sync,
    F: Fn(f64, f64) -> f64 + Sync,
{
    if !weight.is_finite() {
        return Err(Error::NonFinite("feynman-kac weight".into()));
    }
    let ensemble = sample_paths_with(spec, mc, Boundary::Unbounded, FirstPassage::Interpolate, forcing)?;
    let samples: Vec<f64> = ensemble
        .terminal_values
        .iter()
        .zip(&ensemble.functional_sums)
        .map(|(&x, &f)| weight * phi(x) + f)
        .collect();
    if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("feynman-kac sample on path {i}")));
    }
    Ok(Estimate::from_samples(&samples))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_forcing_integrates_to_the_horizon() {
        let spec = SdeSpec::new(|_, _| 0.0, 1.0, 0.0, 0.0, 1.7).unwrap();
        let e = feynman_kac_estimate(&spec, |_| 0.0, |_, _| 1.0, &McParams::new(500, 0.01, 3), 1.0).unwrap();
        assert!((e.mean - 1.7).abs() < 1e-12);
        assert!(e.std_error < 1e-12);
    }

    #[test]
    fn driftless_identity_is_a_martingale() {
        let spec = SdeSpec::new(|_, _| 0.0, 0.8, 0.4, 0.0, 1.0).unwrap();
        let e = feynman_kac_estimate(&spec, |x| x, |_, _| 0.0, &McParams::new(20_000, 0.05, 5), 1.0).unwrap();
        assert!(e.within(0.4, 3.5), "{e:?}");
    }

    #[test]
    fn constant_data_with_stretching_weight() {
        let (k0, t, c0) = (0.7, 1.3, 2.5);
        let spec = SdeSpec::new(move |x: f64, _| k0 * x, 0.2, 0.1, 0.0, t).unwrap();
        let w = (k0 * t).exp();
        let e = feynman_kac_estimate(&spec, |_| c0, |_, _| 0.0, &McParams::new(1000, 0.01, 8), w).unwrap();
        assert!((e.mean - c0 * w).abs() < 1e-12 * c0 * w);
        assert_eq!(e.variance, 0.0);
    }
}
