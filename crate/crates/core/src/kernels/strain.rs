use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::Integrator;
use crate::stochastic::rng::stream_rng;

/// One realization of a strain rate `k(t)`.
pub trait StrainPath: Sync {
    fn rate(&self, t: f64) -> f64;

    /// `∫_{t0}^{t1} k(s) ds`.
    fn integral(&self, t0: f64, t1: f64) -> Result<f64>;

    /// `p(t) = ∫_0^t exp(-2 ∫_{t'}^t k) dt'`, the variance factor of the
    /// single-sheet Green's function.
    fn relaxation(&self, t: f64) -> Result<f64> {
        let q = Integrator::default().integrate(
            |s| self.integral(s, t).map(|i| (-2.0 * i).exp()).unwrap_or(f64::NAN),
            0.0,
            t,
        )?;
        Ok(q.value)
    }
}

fn check_time(t: f64) -> Result<()> {
    if t >= 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("time must be finite and nonnegative, got {t}")))
    }
}

/// Accumulated strain `h(t) = ∫_0^t k(t') dt'`.
pub fn strain_h(path: &impl StrainPath, t: f64) -> Result<f64> {
    check_time(t)?;
    path.integral(0.0, t)
}

/// `p(t) = e^{-2h(t)} ∫_0^t e^{2h(t')} dt'`.
pub fn strain_p(path: &impl StrainPath, t: f64) -> Result<f64> {
    check_time(t)?;
    if t == 0.0 {
        return Ok(0.0);
    }
    path.relaxation(t)
}

/// `(1 - e^{-x}) / x`, continuous at zero.
fn relative_expm1(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0 - 0.5 * x
    } else {
        -(-x).exp_m1() / x
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstantStrain {
    pub k0: f64,
}

impl StrainPath for ConstantStrain {
    fn rate(&self, _t: f64) -> f64 {
        self.k0
    }

    fn integral(&self, t0: f64, t1: f64) -> Result<f64> {
        Ok(self.k0 * (t1 - t0))
    }

    fn relaxation(&self, t: f64) -> Result<f64> {
        let x = 2.0 * self.k0 * t;
        if x.abs() < 1e-12 {
            Ok(t * (1.0 - 0.5 * x))
        } else {
            Ok(-(-x).exp_m1() / (2.0 * self.k0))
        }
    }
}

/// Deterministic time-varying strain given as a closure; integrals are
/// evaluated by adaptive quadrature.
pub struct FunctionStrain<F> {
    rate: F,
}

impl<F: Fn(f64) -> f64 + Sync> FunctionStrain<F> {
    pub fn new(rate: F) -> Self {
        Self { rate }
    }
}

impl<F: Fn(f64) -> f64 + Sync> StrainPath for FunctionStrain<F> {
    fn rate(&self, t: f64) -> f64 {
        (self.rate)(t)
    }

    fn integral(&self, t0: f64, t1: f64) -> Result<f64> {
        Ok(Integrator::with_tolerance(1e-13, 1e-13)
            .integrate(&self.rate, t0, t1)?
            .value)
    }
}

/// Piecewise-constant strain path, one rate per step of length `dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledStrain {
    dt: f64,
    rates: Vec<f64>,
    // h at step boundaries; `accumulated[i] = Σ_{j<i} rates[j] dt`.
    accumulated: Vec<f64>,
}

impl SampledStrain {
    pub fn new(dt: f64, rates: Vec<f64>) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::invalid("dt", "must be positive"));
        }
        if rates.is_empty() {
            return Err(Error::invalid("rates", "need at least one step"));
        }
        let mut accumulated = Vec::with_capacity(rates.len() + 1);
        accumulated.push(0.0);
        let mut h = 0.0;
        for k in &rates {
            h += k * dt;
            accumulated.push(h);
        }
        Ok(Self {
            dt,
            rates,
            accumulated,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn t_end(&self) -> f64 {
        self.dt * self.rates.len() as f64
    }

    fn step_of(&self, t: f64) -> Result<(usize, f64)> {
        let end = self.t_end();
        if t < 0.0 || t > end * (1.0 + 1e-12) {
            return Err(Error::Domain(format!(
                "t = {t} outside the sampled strain path [0, {end}]"
            )));
        }
        let i = ((t / self.dt).floor() as usize).min(self.rates.len() - 1);
        Ok((i, t - i as f64 * self.dt))
    }

    fn h(&self, t: f64) -> Result<f64> {
        let (i, offset) = self.step_of(t)?;
        Ok(self.accumulated[i] + self.rates[i] * offset)
    }
}

impl StrainPath for SampledStrain {
    fn rate(&self, t: f64) -> f64 {
        self.step_of(t).map(|(i, _)| self.rates[i]).unwrap_or(f64::NAN)
    }

    fn integral(&self, t0: f64, t1: f64) -> Result<f64> {
        Ok(self.h(t1)? - self.h(t0)?)
    }

    fn relaxation(&self, t: f64) -> Result<f64> {
        let (last, offset) = self.step_of(t)?;
        let h_t = self.h(t)?;
        let mut p = 0.0;
        for i in 0..=last {
            let len = if i == last { offset } else { self.dt };
            if len <= 0.0 {
                continue;
            }
            let end = self.accumulated[i] + self.rates[i] * len;
            p += (-2.0 * (h_t - end)).exp() * len * relative_expm1(2.0 * self.rates[i] * len);
        }
        Ok(p)
    }
}

/// Random part of the strain, `k'(t)` in `k(t) = k0 + k'(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Fluctuation {
    None,
    /// `⟨k'(t+τ)k'(t)⟩ = k_tilde δ(τ)`.
    DeltaCorrelated { k_tilde: f64 },
    /// `⟨k'(t+τ)k'(t)⟩ = variance · exp(-|τ|/tau_c)`.
    ExponentialCorrelated { variance: f64, tau_c: f64 },
}

/// Share of a delta function sitting on an integration endpoint that the
/// integral picks up.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndpointWeight {
    #[default]
    Half,
    Full,
}

impl EndpointWeight {
    pub fn value(self) -> f64 {
        match self {
            EndpointWeight::Half => 0.5,
            EndpointWeight::Full => 1.0,
        }
    }

    pub fn from_value(w: f64) -> Result<Self> {
        if w == 0.5 {
            Ok(EndpointWeight::Half)
        } else if w == 1.0 {
            Ok(EndpointWeight::Full)
        } else {
            Err(Error::invalid("boundary_delta_weight", format!("must be 0.5 or 1.0, got {w}")))
        }
    }
}

/// Strain statistics: mean rate plus a stationary Gaussian fluctuation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrainModel {
    pub k0: f64,
    pub fluctuation: Fluctuation,
    #[serde(default)]
    pub boundary_delta_weight: EndpointWeight,
}

impl StrainModel {
    pub fn new(k0: f64, fluctuation: Fluctuation) -> Result<Self> {
        let model = Self {
            k0,
            fluctuation,
            boundary_delta_weight: EndpointWeight::default(),
        };
        model.validate()?;
        Ok(model)
    }

    pub fn constant(k0: f64) -> Result<Self> {
        Self::new(k0, Fluctuation::None)
    }

    pub fn with_weight(mut self, weight: EndpointWeight) -> Self {
        self.boundary_delta_weight = weight;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k0 > 0.0 && self.k0.is_finite()) {
            return Err(Error::invalid("k0", format!("mean strain must be positive, got {}", self.k0)));
        }
        match self.fluctuation {
            Fluctuation::None => {}
            Fluctuation::DeltaCorrelated { k_tilde } => {
                if !(k_tilde >= 0.0 && k_tilde.is_finite()) {
                    return Err(Error::invalid("k_tilde", "must be nonnegative"));
                }
            }
            Fluctuation::ExponentialCorrelated { variance, tau_c } => {
                if !(variance >= 0.0 && variance.is_finite()) {
                    return Err(Error::invalid("variance", "must be nonnegative"));
                }
                if !(tau_c > 0.0 && tau_c.is_finite()) {
                    return Err(Error::invalid("tau_c", "must be positive"));
                }
            }
        }
        Ok(())
    }

    pub fn mean_path(&self) -> ConstantStrain {
        ConstantStrain { k0: self.k0 }
    }

    /// Correlation `R(|τ|)`; `None` for the delta-correlated model.
    pub fn correlation(&self, tau: f64) -> Option<f64> {
        match self.fluctuation {
            Fluctuation::None => Some(0.0),
            Fluctuation::DeltaCorrelated { .. } => None,
            Fluctuation::ExponentialCorrelated { variance, tau_c } => {
                Some(variance * (-tau.abs() / tau_c).exp())
            }
        }
    }

    /// `∫_{-∞}^{∞} R`, the white-noise intensity equivalent.
    pub fn noise_intensity(&self) -> f64 {
        match self.fluctuation {
            Fluctuation::None => 0.0,
            Fluctuation::DeltaCorrelated { k_tilde } => k_tilde,
            Fluctuation::ExponentialCorrelated { variance, tau_c } => 2.0 * variance * tau_c,
        }
    }

    /// `I(t) = ∫_0^t (t - s) R(|s|) ds`. A delta correlation sits on the
    /// `s = 0` endpoint and contributes `weight · k_tilde · t`.
    pub fn correlation_functional(&self, t: f64) -> f64 {
        match self.fluctuation {
            Fluctuation::None => 0.0,
            Fluctuation::DeltaCorrelated { k_tilde } => {
                self.boundary_delta_weight.value() * k_tilde * t
            }
            Fluctuation::ExponentialCorrelated { variance, tau_c } => {
                // σ² τc [t - τc (1 - e^{-t/τc})], written to avoid cancellation.
                let x = t / tau_c;
                let bracket = if x < 1e-4 {
                    tau_c * x * x * (0.5 - x / 6.0 + x * x / 24.0)
                } else {
                    t + tau_c * (-x).exp_m1()
                };
                variance * tau_c * bracket
            }
        }
    }

    /// `Var(∫_0^t k')`, independent of the endpoint convention.
    pub fn integrated_variance(&self, t: f64) -> f64 {
        match self.fluctuation {
            Fluctuation::DeltaCorrelated { k_tilde } => k_tilde * t,
            _ => 2.0 * self.correlation_functional(t),
        }
    }

    /// Random strain at least as strong as the mean puts the sheet in the
    /// regime where its stability is not established.
    pub fn stability_warning(&self) -> Option<String> {
        let intensity = self.noise_intensity();
        (intensity >= self.k0).then(|| {
            format!(
                "random strain intensity {intensity} >= k0 = {}: results assume the sheet stays stable under compressive episodes",
                self.k0
            )
        })
    }
}

/// Draw one strain path on `[0, t_end]` with steps of `dt` from stream 0.
pub fn strain_path_sample(model: &StrainModel, t_end: f64, dt: f64, seed: u64) -> Result<SampledStrain> {
    strain_path_sample_stream(model, t_end, dt, seed, 0)
}

/// Draw one strain path from the independent random stream `stream`.
///
/// Delta-correlated noise is discretized as independent `N(0, k_tilde/dt)`
/// rates per step so that `Var(∫ k') = k_tilde t` exactly. The exponential
/// model is an exact AR(1) recursion started from its stationary law.
pub fn strain_path_sample_stream(
    model: &StrainModel,
    t_end: f64,
    dt: f64,
    seed: u64,
    stream: u64,
) -> Result<SampledStrain> {
    model.validate()?;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::invalid("dt", "must be positive"));
    }
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::invalid("t_end", "must be positive"));
    }
    let n = ((t_end / dt) - 1e-9).ceil().max(1.0) as usize;
    let mut rng = stream_rng(seed, stream);
    let rates = match model.fluctuation {
        Fluctuation::None => vec![model.k0; n],
        Fluctuation::DeltaCorrelated { k_tilde } => {
            let sd = (k_tilde / dt).sqrt();
            (0..n)
                .map(|_| model.k0 + sd * rng.sample::<f64, _>(StandardNormal))
                .collect()
        }
        Fluctuation::ExponentialCorrelated { variance, tau_c } => {
            let rho = (-dt / tau_c).exp();
            let innovation = (variance * (1.0 - rho * rho)).sqrt();
            let mut x = variance.sqrt() * rng.sample::<f64, _>(StandardNormal);
            (0..n)
                .map(|_| {
                    let k = model.k0 + x;
                    x = rho * x + innovation * rng.sample::<f64, _>(StandardNormal);
                    k
                })
                .collect()
        }
    };
    SampledStrain::new(dt, rates)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn constant_h_is_exact() {
        let s = ConstantStrain { k0: 2.0 };
        assert_eq!(strain_h(&s, 0.5).unwrap(), 1.0);
        assert_eq!(strain_h(&ConstantStrain { k0: 0.0 }, 7.3).unwrap(), 0.0);
    }

    #[test]
    fn negative_time_is_a_domain_error() {
        let s = ConstantStrain { k0: 1.0 };
        assert!(matches!(strain_h(&s, -1.0), Err(Error::Domain(_))));
        assert!(matches!(strain_p(&s, -0.1), Err(Error::Domain(_))));
    }

    #[test]
    fn sinusoidal_h_matches_closed_form() {
        let s = FunctionStrain::new(|t: f64| 1.0 + t.sin());
        assert_abs_diff_eq!(strain_h(&s, PI).unwrap(), PI + 2.0, epsilon = 1e-10);
    }

    #[test]
    fn constant_p_closed_form_and_limits() {
        let s = ConstantStrain { k0: 1.0 };
        assert_eq!(strain_p(&s, 0.0).unwrap(), 0.0);
        assert_abs_diff_eq!(strain_p(&s, 0.7).unwrap(), (1.0 - (-1.4f64).exp()) / 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(strain_p(&s, 60.0).unwrap(), 0.5, epsilon = 1e-15);
        // zero strain: pure diffusion, p = t
        assert_abs_diff_eq!(strain_p(&ConstantStrain { k0: 0.0 }, 3.0).unwrap(), 3.0, epsilon = 1e-15);
    }

    #[test]
    fn quadrature_p_agrees_with_constant_closed_form() {
        let f = FunctionStrain::new(|_| 0.8);
        let c = ConstantStrain { k0: 0.8 };
        assert_abs_diff_eq!(strain_p(&f, 2.5).unwrap(), strain_p(&c, 2.5).unwrap(), epsilon = 1e-12);
    }

    #[test]
    fn sampled_path_reproduces_constant_strain() {
        let s = SampledStrain::new(0.01, vec![1.5; 300]).unwrap();
        let c = ConstantStrain { k0: 1.5 };
        for t in [0.0, 0.005, 1.234, 3.0] {
            assert_abs_diff_eq!(strain_h(&s, t).unwrap(), strain_h(&c, t).unwrap(), epsilon = 1e-12);
            assert_abs_diff_eq!(strain_p(&s, t).unwrap(), strain_p(&c, t).unwrap(), epsilon = 1e-12);
        }
        assert!(strain_h(&s, 3.1).is_err());
    }

    #[test]
    fn sampled_p_matches_quadrature_of_its_own_h() {
        let rates: Vec<f64> = (0..50).map(|i| 1.0 + 0.7 * ((i as f64) * 0.37).sin()).collect();
        let s = SampledStrain::new(0.04, rates).unwrap();
        let t = 1.83;
        let q = Integrator::default()
            .integrate(|u| (-2.0 * s.integral(u, t).unwrap()).exp(), 0.0, t)
            .unwrap();
        assert_abs_diff_eq!(strain_p(&s, t).unwrap(), q.value, epsilon = 1e-10);
    }

    #[test]
    fn model_validation() {
        assert!(StrainModel::constant(0.0).is_err());
        assert!(StrainModel::new(1.0, Fluctuation::DeltaCorrelated { k_tilde: -0.1 }).is_err());
        assert!(StrainModel::new(1.0, Fluctuation::ExponentialCorrelated { variance: 1.0, tau_c: 0.0 }).is_err());
        assert!(EndpointWeight::from_value(0.7).is_err());
    }

    #[test]
    fn correlation_functional_conventions() {
        let m = StrainModel::new(1.0, Fluctuation::DeltaCorrelated { k_tilde: 0.4 }).unwrap();
        assert_abs_diff_eq!(m.correlation_functional(2.0), 0.4, epsilon = 1e-15);
        let full = m.with_weight(EndpointWeight::Full);
        assert_abs_diff_eq!(full.correlation_functional(2.0), 0.8, epsilon = 1e-15);
        assert_abs_diff_eq!(m.integrated_variance(2.0), 0.8, epsilon = 1e-15);
        assert_abs_diff_eq!(full.integrated_variance(2.0), 0.8, epsilon = 1e-15);
    }

    #[test]
    fn exponential_functional_small_and_large_t() {
        let m = StrainModel::new(1.0, Fluctuation::ExponentialCorrelated { variance: 0.3, tau_c: 0.5 }).unwrap();
        for t in [1e-6, 1e-3, 0.2, 4.0] {
            let q = Integrator::default()
                .integrate(|s| (t - s) * m.correlation(s).unwrap(), 0.0, t)
                .unwrap();
            assert_abs_diff_eq!(m.correlation_functional(t), q.value, epsilon = 1e-14);
        }
    }

    #[test]
    fn stability_warning_threshold() {
        let calm = StrainModel::new(1.0, Fluctuation::DeltaCorrelated { k_tilde: 0.5 }).unwrap();
        let wild = StrainModel::new(1.0, Fluctuation::DeltaCorrelated { k_tilde: 1.2 }).unwrap();
        assert!(calm.stability_warning().is_none());
        assert!(wild.stability_warning().is_some());
    }

    #[test]
    fn strain_sampling_is_reproducible() {
        let m = StrainModel::new(1.0, Fluctuation::DeltaCorrelated { k_tilde: 0.3 }).unwrap();
        let a = strain_path_sample(&m, 1.0, 0.01, 7).unwrap();
        let b = strain_path_sample(&m, 1.0, 0.01, 7).unwrap();
        let c = strain_path_sample_stream(&m, 1.0, 0.01, 7, 1).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.rates().len(), 100);
        let none = StrainModel::constant(2.0).unwrap();
        assert!(strain_path_sample(&none, 1.0, 0.1, 1).unwrap().rates().iter().all(|&k| k == 2.0));
    }
}
