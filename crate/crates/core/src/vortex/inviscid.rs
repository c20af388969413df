//! Continuous vorticity `Ω = ∂v/∂x` carried by the strain.
//!
//! Along characteristics the initial vorticity at `x e^{h(t)}` is stretched by
//! `e^{h(t)}`. With viscosity the same factor multiplies the average of the
//! initial vorticity over backward paths `dχ = k(t - s) χ ds + sqrt(2ν) dw`.

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Field;
use crate::kernels::{strain_h, strain_path_sample_stream, Fluctuation, StrainModel, StrainPath};
use crate::stochastic::rng::stream_rng;
use crate::stochastic::{feynman_kac_estimate, Estimate, McParams, SdeSpec};

/// Initial velocity `v0(x)` seen through its vorticity `v0'(x)`.
pub trait InitialProfile: Sync {
    fn vorticity(&self, x: f64) -> Result<f64>;
}

/// `v0 = shear · x`: uniform vorticity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Couette {
    pub shear: f64,
}

impl InitialProfile for Couette {
    fn vorticity(&self, _x: f64) -> Result<f64> {
        Ok(self.shear)
    }
}

/// Tabulated velocity, differentiated with fourth-order central differences
/// and interpolated with cubics.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledProfile {
    velocity: Field,
    vorticity: Field,
}

impl SampledProfile {
    pub fn new(velocity: Field) -> Result<Self> {
        if !velocity.is_finite() {
            return Err(Error::NonFinite("initial velocity".into()));
        }
        let vorticity = velocity.derivative();
        Ok(Self { velocity, vorticity })
    }

    pub fn velocity(&self) -> &Field {
        &self.velocity
    }
}

impl InitialProfile for SampledProfile {
    fn vorticity(&self, x: f64) -> Result<f64> {
        self.vorticity.interpolate(x).ok_or_else(|| {
            let g = self.vorticity.grid;
            Error::Domain(format!(
                "x = {x} outside the profile support [{}, {}]",
                g.x_min(),
                g.x_max()
            ))
        })
    }
}

/// `x0 e^{-h(t)}`.
pub fn inviscid_sheet_position(x0: f64, path: &impl StrainPath, t: f64) -> Result<f64> {
    Ok(x0 * (-strain_h(path, t)?).exp())
}

/// `e^{h(t)} v0'(x e^{h(t)})`.
pub fn inviscid_continuous_vorticity(
    profile: &impl InitialProfile,
    path: &impl StrainPath,
    x: f64,
    t: f64,
) -> Result<f64> {
    let stretch = strain_h(path, t)?.exp();
    Ok(stretch * profile.vorticity(x * stretch)?)
}

/// Sampling effort for [`feynman_kac_vorticity`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeynmanKacParams {
    /// Strain realizations; ignored for non-random strain.
    pub n_strain_paths: usize,
    /// Diffusion paths per strain realization.
    pub n_inner_paths: usize,
    /// Step for both the strain path and the diffusion paths.
    pub dt: f64,
    pub seed: u64,
}

// Strain realizations draw from streams below this offset; inner seeds are
// derived from streams above it.
const INNER_SEED_STREAMS: u64 = 1 << 62;

/// Vorticity at `(x, t)` for a single strain realization.
fn vorticity_in_path(
    profile: &impl InitialProfile,
    path: &impl StrainPath,
    nu: f64,
    x: f64,
    t: f64,
    inner: &McParams,
) -> Result<Estimate> {
    let stretch = strain_h(path, t)?.exp();
    let spec = SdeSpec::new(|y: f64, s: f64| path.rate(t - s) * y, nu, x, 0.0, t)?;
    feynman_kac_estimate(
        &spec,
        |y| profile.vorticity(y).unwrap_or(f64::NAN),
        |_, _| 0.0,
        inner,
        stretch,
    )
}

/// Nested Monte Carlo solution of `Ω_t - k x Ω_x = k Ω + ν Ω_xx`.
///
/// The outer level samples strain paths, the inner level diffusion paths
/// per realization. With several strain paths the estimate is the mean of
/// the per-realization averages and its error is their spread; otherwise it
/// is the inner estimate itself.
pub fn feynman_kac_vorticity(
    profile: &impl InitialProfile,
    model: &StrainModel,
    nu: f64,
    x: f64,
    t: f64,
    params: &FeynmanKacParams,
) -> Result<Estimate> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!("t must be positive, got {t}")));
    }
    if params.n_strain_paths == 0 {
        return Err(Error::invalid("n_strain_paths", "need at least one strain path"));
    }
    let inner_seed = |j: u64| stream_rng(params.seed, INNER_SEED_STREAMS + j).next_u64();
    if matches!(model.fluctuation, Fluctuation::None) {
        let inner = McParams::new(params.n_inner_paths, params.dt, inner_seed(0));
        return vorticity_in_path(profile, &model.mean_path(), nu, x, t, &inner);
    }
    let means = (0..params.n_strain_paths as u64)
        .map(|j| {
            let path = strain_path_sample_stream(model, t, params.dt, params.seed, j)?;
            let inner = McParams::new(params.n_inner_paths, params.dt, inner_seed(j));
            Ok(vorticity_in_path(profile, &path, nu, x, t, &inner)?.mean)
        })
        .collect::<Result<Vec<f64>>>()?;
    if means.len() == 1 {
        let path = strain_path_sample_stream(model, t, params.dt, params.seed, 0)?;
        let inner = McParams::new(params.n_inner_paths, params.dt, inner_seed(0));
        return vorticity_in_path(profile, &path, nu, x, t, &inner);
    }
    Ok(Estimate::from_samples(&means))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid1D;
    use crate::kernels::{ConstantStrain, FunctionStrain};

    fn sine() -> SampledProfile {
        SampledProfile::new(Grid1D::centered(10.0, 4001).unwrap().sample(f64::sin)).unwrap()
    }

    #[test]
    fn positions_follow_characteristics() {
        assert_eq!(inviscid_sheet_position(1.5, &ConstantStrain { k0: 0.0 }, 3.0).unwrap(), 1.5);
        let p = inviscid_sheet_position(1.5, &ConstantStrain { k0: 2.0 }, 0.5).unwrap();
        assert!((p - 1.5 * (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn couette_vorticity_is_stretched_uniformly() {
        let c = Couette { shear: 0.4 };
        for x in [-3.0, 0.0, 7.0] {
            let w = inviscid_continuous_vorticity(&c, &ConstantStrain { k0: 1.5 }, x, 2.0).unwrap();
            assert_eq!(w, 0.4 * 3.0f64.exp());
        }
    }

    #[test]
    fn frozen_vorticity_without_strain() {
        let p = sine();
        for x in [-2.0, 0.1, 1.3] {
            let w = inviscid_continuous_vorticity(&p, &ConstantStrain { k0: 0.0 }, x, 5.0).unwrap();
            assert!((w - x.cos()).abs() < 1e-10);
        }
    }

    #[test]
    fn profile_support_is_enforced() {
        let p = sine();
        assert!(matches!(
            inviscid_continuous_vorticity(&p, &ConstantStrain { k0: 1.0 }, 5.0, 1.0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn couette_feynman_kac_has_no_inner_variance() {
        let m = StrainModel::constant(0.8).unwrap();
        let params = FeynmanKacParams { n_strain_paths: 1, n_inner_paths: 2000, dt: 0.01, seed: 2 };
        let e = feynman_kac_vorticity(&Couette { shear: 1.7 }, &m, 0.3, 0.4, 1.5, &params).unwrap();
        assert_eq!(e.std_error, 0.0);
        assert!((e.mean - 1.7 * 1.2f64.exp()).abs() < 1e-12);
    }

    #[test]
    fn zero_viscosity_tracks_characteristics() {
        let p = sine();
        let k = FunctionStrain::new(|s: f64| 1.0 + 0.5 * s.sin());
        let (x, t) = (0.3, 1.0);
        let exact = inviscid_continuous_vorticity(&p, &k, x, t).unwrap();
        let err = |dt: f64| {
            let spec = SdeSpec::new(|y: f64, s: f64| k.rate(t - s) * y, 0.0, x, 0.0, t).unwrap();
            let stretch = strain_h(&k, t).unwrap().exp();
            let e = feynman_kac_estimate(&spec, |y| p.vorticity(y).unwrap(), |_, _| 0.0, &McParams::new(4, dt, 1), stretch).unwrap();
            (e.mean - exact).abs()
        };
        let (coarse, fine) = (err(0.01), err(0.005));
        assert!(coarse < 0.02 && coarse / fine > 1.8, "{coarse} {fine}");
    }

    #[test]
    fn viscous_cosine_matches_gaussian_average() {
        // Ω0 = cos: E[cos(χ)] = cos(x e^{kt}) e^{-s²/2}, s² = ν (e^{2kt} - 1) / k.
        let (k0, nu, x, t): (f64, f64, f64, f64) = (1.0, 0.1, 0.3, 0.5);
        let s2 = nu * ((2.0 * k0 * t).exp() - 1.0) / k0;
        let exact = (k0 * t).exp() * (x * (k0 * t).exp()).cos() * (-0.5 * s2).exp();
        let params = FeynmanKacParams { n_strain_paths: 1, n_inner_paths: 20_000, dt: 1e-3, seed: 9 };
        let e = feynman_kac_vorticity(&sine(), &StrainModel::constant(k0).unwrap(), nu, x, t, &params).unwrap();
        assert!(e.within(exact, 3.5), "{e:?} {exact}");
    }

    #[test]
    fn random_couette_averages_stretching() {
        let m = StrainModel::new(1.0, Fluctuation::DeltaCorrelated { k_tilde: 0.2 }).unwrap();
        let params = FeynmanKacParams { n_strain_paths: 4000, n_inner_paths: 2, dt: 0.01, seed: 5 };
        let e = feynman_kac_vorticity(&Couette { shear: 1.0 }, &m, 0.1, 0.0, 1.0, &params).unwrap();
        assert!(e.within(1.1f64.exp(), 3.5), "{e:?}");
    }
}
