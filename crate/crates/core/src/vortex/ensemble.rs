//! Sheet statistics averaged over Gaussian random strain `k = k0 + k'`.
//!
//! The closed forms depend on the strain only through
//! `I(t) = ∫_0^t (t - s) R(|s|) ds`; see
//! [`StrainModel::correlation_functional`] for the delta-correlated endpoint
//! convention.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{
    strain_path_sample_stream, EndpointWeight, Fluctuation, StrainModel, StrainPath,
};
use crate::quad::Integrator;
use crate::stochastic::{variance_estimate, Estimate, McParams};

/// How `⟨p(t)⟩` is closed in the viscous spread.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViscousClosure {
    /// Treat `e^{-2h(t)}` and `∫ e^{2h(t')} dt'` as independent.
    #[default]
    Independent,
    /// `∫_0^t e^{-2 k0 u} ⟨e^{-2 ∫_{t-u}^t k'}⟩ du`, exact for stationary strain.
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpreadMode {
    /// `⟨2ν p(t)⟩`, the diffusive thickness of one sheet.
    Viscous { closure: ViscousClosure },
    /// Variance over strain realizations of the inviscid position.
    Inviscid,
}

/// `(1 - e^{-x}) / x`, continuous at zero.
fn relative_expm1(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0 - 0.5 * x
    } else {
        -(-x).exp_m1() / x
    }
}

fn check_time(t: f64) -> Result<()> {
    if t >= 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("time must be finite and nonnegative, got {t}")))
    }
}

/// `⟨x0 e^{-h(t)}⟩ = x0 e^{-k0 t} e^{I(t)}`.
pub fn ensemble_mean_position(x0: f64, model: &StrainModel, t: f64) -> Result<f64> {
    model.validate()?;
    check_time(t)?;
    Ok(x0 * (-model.k0 * t + model.correlation_functional(t)).exp())
}

/// `⟨e^{h(t)}⟩ = e^{k0 t + I(t)}`, the mean amplification of continuous
/// vorticity in the inviscid limit.
pub fn ensemble_stretching(model: &StrainModel, t: f64) -> Result<f64> {
    model.validate()?;
    check_time(t)?;
    Ok((model.k0 * t + model.correlation_functional(t)).exp())
}

/// Ensemble sheet spread at `t`.
pub fn ensemble_spread(x0: f64, nu: f64, model: &StrainModel, t: f64, mode: SpreadMode) -> Result<f64> {
    model.validate()?;
    check_time(t)?;
    let k0 = model.k0;
    match mode {
        SpreadMode::Inviscid => {
            let i = model.correlation_functional(t);
            Ok(x0 * x0 * (-2.0 * k0 * t + 2.0 * i).exp() * (2.0 * i).exp_m1())
        }
        SpreadMode::Viscous { closure } => {
            if !(nu > 0.0 && nu.is_finite()) {
                return Err(Error::invalid("nu", "viscous spread needs nu > 0"));
            }
            if t == 0.0 {
                return Ok(0.0);
            }
            let p = match (model.fluctuation, closure) {
                (Fluctuation::None, _) => model.mean_path().relaxation(t)?,
                (Fluctuation::DeltaCorrelated { k_tilde }, ViscousClosure::Independent) => {
                    let w = model.boundary_delta_weight.value();
                    (8.0 * w * k_tilde * t).exp() * t * relative_expm1((2.0 * k0 + 4.0 * w * k_tilde) * t)
                }
                (Fluctuation::DeltaCorrelated { k_tilde }, ViscousClosure::Exact) => {
                    t * relative_expm1(2.0 * (k0 - k_tilde) * t)
                }
                (Fluctuation::ExponentialCorrelated { .. }, ViscousClosure::Independent) => {
                    let i_t = model.correlation_functional(t);
                    let f = |s: f64| {
                        (-2.0 * k0 * (t - s) + 4.0 * i_t + 4.0 * model.correlation_functional(s)).exp()
                    };
                    Integrator::with_tolerance(0.0, 1e-12).integrate(f, 0.0, t)?.value
                }
                (Fluctuation::ExponentialCorrelated { .. }, ViscousClosure::Exact) => {
                    let f = |u: f64| (-2.0 * k0 * u + 2.0 * model.integrated_variance(u)).exp();
                    Integrator::with_tolerance(0.0, 1e-12).integrate(f, 0.0, t)?.value
                }
            };
            Ok(2.0 * nu * p)
        }
    }
}

/// Monte Carlo averages over sampled strain paths for a sheet released at
/// `x0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrainEnsemble {
    /// `⟨x0 e^{-h(t)}⟩`.
    pub mean_position: Estimate,
    /// `⟨2ν p(t)⟩`.
    pub viscous_spread: Estimate,
    /// Variance of `x0 e^{-h(t)}` over realizations.
    pub inviscid_spread: Estimate,
    /// `⟨e^{h(t)}⟩`, the mean stretching of continuous vorticity.
    pub stretching: Estimate,
}

/// Sample `mc.n_paths` strain paths with step `mc.dt`, path `i` drawn from
/// stream `i` of `mc.seed`.
pub fn strain_ensemble(x0: f64, nu: f64, model: &StrainModel, t: f64, mc: &McParams) -> Result<StrainEnsemble> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!("t must be positive, got {t}")));
    }
    if mc.n_paths < 2 {
        return Err(Error::invalid("n_paths", "need at least two strain paths"));
    }
    let per_path = (0..mc.n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let path = strain_path_sample_stream(model, t, mc.dt, mc.seed, i)?;
            let h = path.integral(0.0, t)?;
            let p = path.relaxation(t)?;
            Ok((h, p))
        })
        .collect::<Result<Vec<_>>>()?;
    let positions: Vec<f64> = per_path.iter().map(|(h, _)| x0 * (-h).exp()).collect();
    let spreads: Vec<f64> = per_path.iter().map(|(_, p)| 2.0 * nu * p).collect();
    let stretch: Vec<f64> = per_path.iter().map(|(h, _)| h.exp()).collect();
    Ok(StrainEnsemble {
        mean_position: Estimate::from_samples(&positions),
        viscous_spread: Estimate::from_samples(&spreads),
        inviscid_spread: variance_estimate(&positions),
        stretching: Estimate::from_samples(&stretch),
    })
}

/// Monte Carlo of the independence closure itself:
/// `2ν ⟨e^{-2h(t)}⟩ ⟨∫_0^t e^{2h(t')} dt'⟩`.
///
/// Each sample pairs the first factor from stream `2i` with the second from
/// stream `2i + 1`, so the product is unbiased for the product of means.
/// Comparing this with [`StrainEnsemble::viscous_spread`] isolates the bias of
/// the closure from the evaluation of its two expectations.
pub fn factored_spread_mc(nu: f64, model: &StrainModel, t: f64, mc: &McParams) -> Result<Estimate> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!("t must be positive, got {t}")));
    }
    if mc.n_paths < 2 {
        return Err(Error::invalid("n_paths", "need at least two strain paths"));
    }
    let samples = (0..mc.n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let first = strain_path_sample_stream(model, t, mc.dt, mc.seed, 2 * i)?;
            let second = strain_path_sample_stream(model, t, mc.dt, mc.seed, 2 * i + 1)?;
            let contraction = (-2.0 * first.integral(0.0, t)?).exp();
            // ∫ e^{2h(t')} dt' = e^{2h(t)} p(t).
            let growth = (2.0 * second.integral(0.0, t)?).exp() * second.relaxation(t)?;
            Ok(2.0 * nu * contraction * growth)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(Estimate::from_samples(&samples))
}

/// Outcome of letting sampled strain paths decide the endpoint weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightSelection {
    pub z_half: f64,
    pub z_full: f64,
    pub selected: EndpointWeight,
}

/// Pick the endpoint weight whose closed-form mean position is closer, in
/// standard errors, to the sampled one.
pub fn select_endpoint_weight(
    x0: f64,
    model: &StrainModel,
    t: f64,
    sampled_mean: &Estimate,
) -> Result<WeightSelection> {
    let z = |w| -> Result<f64> {
        Ok(sampled_mean.z_score(ensemble_mean_position(x0, &model.with_weight(w), t)?))
    };
    let (z_half, z_full) = (z(EndpointWeight::Half)?, z(EndpointWeight::Full)?);
    Ok(WeightSelection {
        z_half,
        z_full,
        selected: if z_half <= z_full { EndpointWeight::Half } else { EndpointWeight::Full },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn delta(k0: f64, k_tilde: f64, w: EndpointWeight) -> StrainModel {
        StrainModel::new(k0, Fluctuation::DeltaCorrelated { k_tilde }).unwrap().with_weight(w)
    }

    const VISCOUS: SpreadMode = SpreadMode::Viscous { closure: ViscousClosure::Independent };
    const EXACT: SpreadMode = SpreadMode::Viscous { closure: ViscousClosure::Exact };

    #[test]
    fn no_fluctuation_reduces_to_deterministic() {
        let m = StrainModel::constant(1.3).unwrap();
        assert_eq!(ensemble_mean_position(2.0, &m, 0.7).unwrap(), 2.0 * (-1.3f64 * 0.7).exp());
        let p = -(-2.0f64 * 1.3 * 0.7).exp_m1() / 2.6;
        assert_eq!(ensemble_spread(2.0, 0.4, &m, 0.7, VISCOUS).unwrap(), 0.8 * p);
        assert_eq!(ensemble_spread(2.0, 0.4, &m, 0.7, EXACT).unwrap(), 0.8 * p);
        assert_eq!(ensemble_spread(2.0, 0.4, &m, 0.7, SpreadMode::Inviscid).unwrap(), 0.0);
    }

    #[test]
    fn delta_mean_under_each_weight() {
        let full = ensemble_mean_position(1.5, &delta(1.0, 0.3, EndpointWeight::Full), 2.0).unwrap();
        assert!((full - 1.5 * (-1.4f64).exp()).abs() < 1e-15);
        let half = ensemble_mean_position(1.5, &delta(1.0, 0.3, EndpointWeight::Half), 2.0).unwrap();
        assert!((half - 1.5 * (-1.7f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn inviscid_delta_spread_spot_value() {
        let s = ensemble_spread(1.0, 0.0, &delta(1.0, 0.2, EndpointWeight::Full), 1.0, SpreadMode::Inviscid).unwrap();
        let expected = (-2.0f64).exp() * (0.8f64.exp() - 0.4f64.exp());
        assert!((s - expected).abs() < 1e-15);
    }

    #[test]
    fn independent_closure_matches_its_quadrature() {
        for w in [EndpointWeight::Half, EndpointWeight::Full] {
            let m = delta(1.2, 0.25, w);
            let (nu, t) = (0.3, 1.7);
            let i = |s: f64| m.correlation_functional(s);
            let q = Integrator::default()
                .integrate(|s| (2.0 * m.k0 * s + 4.0 * i(s)).exp(), 0.0, t)
                .unwrap()
                .value;
            let expected = 2.0 * nu * (-2.0 * m.k0 * t + 4.0 * i(t)).exp() * q;
            let got = ensemble_spread(0.0, nu, &m, t, VISCOUS).unwrap();
            assert!((got - expected).abs() < 1e-12 * expected, "{got} {expected}");
        }
    }

    #[test]
    fn weak_noise_recovers_constant_strain_spread() {
        let (k0, nu, t): (f64, f64, f64) = (2.0, 0.5, 3.0);
        let constant = nu / k0 * (1.0 - (-2.0 * k0 * t).exp());
        for closure in [ViscousClosure::Independent, ViscousClosure::Exact] {
            let s = ensemble_spread(0.0, nu, &delta(k0, 1e-9, EndpointWeight::Full), t, SpreadMode::Viscous { closure }).unwrap();
            assert!((s - constant).abs() < 1e-7, "{closure:?}");
        }
    }

    #[test]
    fn viscous_requires_positive_nu() {
        let m = delta(1.0, 0.1, EndpointWeight::Half);
        assert!(ensemble_spread(0.0, 0.0, &m, 1.0, VISCOUS).is_err());
        assert!(ensemble_spread(0.0, 0.1, &m, -1.0, VISCOUS).is_err());
    }

    #[test]
    fn exact_closure_equals_sampled_spread_for_exponential_strain() {
        let m = StrainModel::new(1.0, Fluctuation::ExponentialCorrelated { variance: 0.2, tau_c: 0.5 }).unwrap();
        let e = strain_ensemble(1.0, 0.4, &m, 1.5, &McParams::new(20_000, 5e-3, 21)).unwrap();
        let exact = ensemble_spread(1.0, 0.4, &m, 1.5, EXACT).unwrap();
        assert!(e.viscous_spread.within(exact, 3.5), "{:?} {exact}", e.viscous_spread);
        let mean = ensemble_mean_position(1.0, &m, 1.5).unwrap();
        assert!(e.mean_position.within(mean, 3.5));
    }

    #[test]
    fn sampled_paths_select_half_weight() {
        let m = delta(1.0, 0.5, EndpointWeight::Half);
        let e = strain_ensemble(1.0, 0.1, &m, 2.0, &McParams::new(20_000, 1e-2, 8)).unwrap();
        let sel = select_endpoint_weight(1.0, &m, 2.0, &e.mean_position).unwrap();
        assert_eq!(sel.selected, EndpointWeight::Half);
        assert!(sel.z_half < 3.0 && sel.z_full > 10.0, "{sel:?}");
    }

    #[test]
    fn independence_closure_matches_its_factors_but_not_the_direct_spread() {
        let m = delta(1.0, 0.2, EndpointWeight::Half);
        let mc = McParams::new(4000, 0.01, 21);
        let closed = ensemble_spread(1.0, 0.1, &m, 1.5, VISCOUS).unwrap();
        let factored = factored_spread_mc(0.1, &m, 1.5, &mc).unwrap();
        assert!(factored.within(closed, 3.5), "{factored:?} {closed}");
        let direct = strain_ensemble(1.0, 0.1, &m, 1.5, &mc).unwrap().viscous_spread;
        assert!(direct.z_score(closed) > 10.0, "{direct:?} {closed}");
        assert!(direct.within(ensemble_spread(1.0, 0.1, &m, 1.5, EXACT).unwrap(), 3.5));
    }
}
