//! Burgers vortex sheets in the strain field `(-k x, 0, k z)`.
//!
//! A sheet of strength `Δv` released at `x0` spreads as the transition
//! density of `dχ = -k(t) χ dt + sqrt(2ν) dw`, so its mean position is
//! `x0 e^{-h(t)}` and its spread `2ν p(t)`. The [`ensemble`] submodule
//! averages these over Gaussian random strain, and [`inviscid`] follows
//! continuous vorticity along characteristics and through Feynman-Kac paths.

pub mod ensemble;
pub mod inviscid;

pub use ensemble::{
    ensemble_mean_position, ensemble_spread, ensemble_stretching, factored_spread_mc, select_endpoint_weight, strain_ensemble,
    SpreadMode, StrainEnsemble, ViscousClosure, WeightSelection,
};
pub use inviscid::{
    feynman_kac_vorticity, inviscid_continuous_vorticity, inviscid_sheet_position, Couette,
    FeynmanKacParams, InitialProfile, SampledProfile,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{ou_kernel, strain_h, strain_p, StrainModel, StrainPath};
use crate::stochastic::{
    sample_paths, variance_estimate, Boundary, Estimate, FirstPassage, McParams, SdeSpec,
};

/// A collection of sheets released at `positions` with velocity jumps
/// `strengths`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SheetSet {
    pub positions: Vec<f64>,
    pub strengths: Vec<f64>,
    pub nu: f64,
    pub strain: StrainModel,
}

impl SheetSet {
    pub fn new(positions: Vec<f64>, strengths: Vec<f64>, nu: f64, strain: StrainModel) -> Result<Self> {
        let set = Self { positions, strengths, nu, strain };
        set.validate()?;
        Ok(set)
    }

    pub fn validate(&self) -> Result<()> {
        if self.positions.is_empty() {
            return Err(Error::invalid("positions", "need at least one sheet"));
        }
        if self.positions.len() != self.strengths.len() {
            return Err(Error::invalid(
                "strengths",
                format!("{} strengths for {} positions", self.strengths.len(), self.positions.len()),
            ));
        }
        if !self.positions.iter().all(|x| x.is_finite())
            || self.positions.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(Error::invalid("positions", "must be finite and strictly increasing"));
        }
        if !self.strengths.iter().all(|s| s.is_finite()) {
            return Err(Error::NonFinite("sheet strengths".into()));
        }
        if !(self.nu >= 0.0 && self.nu.is_finite()) {
            return Err(Error::invalid("nu", "must be nonnegative"));
        }
        self.strain.validate()
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Total strength `Σ Δv_i`, conserved by the evolution.
    pub fn total_strength(&self) -> f64 {
        self.strengths.iter().sum()
    }
}

/// Position, squared thickness and strength of one sheet at time `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SheetStats {
    pub mean_position: f64,
    pub spread: f64,
    pub strength: f64,
    pub t: f64,
}

/// Vorticity of the whole set at `(x, t)` in one strain realization.
pub fn sheet_field(sheets: &SheetSet, path: &impl StrainPath, x: f64, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("sheet field needs t > 0, got {t}")));
    }
    sheets
        .positions
        .iter()
        .zip(&sheets.strengths)
        .map(|(&x0, &dv)| Ok(dv * ou_kernel(path, sheets.nu, x, x0, t)?))
        .sum()
}

/// Closed-form statistics of a sheet released at `x0`.
pub fn sheet_stats_deterministic(
    x0: f64,
    strength: f64,
    nu: f64,
    path: &impl StrainPath,
    t: f64,
) -> Result<SheetStats> {
    let h = strain_h(path, t)?;
    let p = strain_p(path, t)?;
    Ok(SheetStats {
        mean_position: x0 * (-h).exp(),
        spread: 2.0 * nu * p,
        strength,
        t,
    })
}

/// Euler-Maruyama estimates of a sheet's mean position and spread.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SheetStatsEstimate {
    pub mean_position: Estimate,
    pub spread: Estimate,
    pub t: f64,
}

/// Sample the sheet as a cloud of `dχ = -k χ dt + sqrt(2ν) dw` paths.
pub fn sheet_stats_mc(
    x0: f64,
    nu: f64,
    path: &impl StrainPath,
    t: f64,
    mc: &McParams,
) -> Result<SheetStatsEstimate> {
    let spec = SdeSpec::new(|x: f64, s: f64| -path.rate(s) * x, nu, x0, 0.0, t)?;
    let ensemble = sample_paths(&spec, mc, Boundary::Unbounded, FirstPassage::Interpolate)?;
    Ok(SheetStatsEstimate {
        mean_position: Estimate::from_samples(&ensemble.terminal_values),
        spread: variance_estimate(&ensemble.terminal_values),
        t,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{ConstantStrain, FunctionStrain};
    use crate::quad::Integrator;

    fn set(positions: Vec<f64>, strengths: Vec<f64>) -> SheetSet {
        SheetSet::new(positions, strengths, 0.3, StrainModel::constant(1.0).unwrap()).unwrap()
    }

    #[test]
    fn rejects_bad_sets() {
        let k = StrainModel::constant(1.0).unwrap();
        assert!(SheetSet::new(vec![1.0, 0.0], vec![1.0, 1.0], 0.1, k).is_err());
        assert!(SheetSet::new(vec![0.0], vec![1.0, 1.0], 0.1, k).is_err());
        assert!(SheetSet::new(vec![0.0], vec![f64::NAN], 0.1, k).is_err());
        assert!(SheetSet::new(vec![], vec![], 0.1, k).is_err());
    }

    #[test]
    fn single_sheet_is_the_kernel() {
        let s = set(vec![0.7], vec![1.0]);
        let k = ConstantStrain { k0: 1.0 };
        for x in [-1.0, 0.0, 0.4, 2.0] {
            assert_eq!(sheet_field(&s, &k, x, 0.8).unwrap(), ou_kernel(&k, 0.3, x, 0.7, 0.8).unwrap());
        }
        assert!(matches!(sheet_field(&s, &k, 0.0, 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn field_is_linear_in_sheets() {
        let both = set(vec![-0.5, 1.2], vec![2.0, -0.7]);
        let a = set(vec![-0.5], vec![2.0]);
        let b = set(vec![1.2], vec![-0.7]);
        let k = FunctionStrain::new(|t: f64| 1.0 + 0.5 * t.sin());
        for x in [-2.0, -0.3, 0.0, 0.9] {
            let sum = sheet_field(&a, &k, x, 1.1).unwrap() + sheet_field(&b, &k, x, 1.1).unwrap();
            let whole = sheet_field(&both, &k, x, 1.1).unwrap();
            assert!((whole - sum).abs() <= 1e-15 * sum.abs().max(1.0));
        }
    }

    #[test]
    fn total_strength_is_conserved() {
        let s = set(vec![-1.0, 0.2, 0.9], vec![0.5, -1.25, 2.0]);
        let k = ConstantStrain { k0: 1.0 };
        for t in [0.05, 0.5, 3.0] {
            let q = Integrator::with_tolerance(1e-12, 1e-12)
                .integrate(|x| sheet_field(&s, &k, x, t).unwrap(), -12.0, 12.0)
                .unwrap();
            assert!((q.value - s.total_strength()).abs() < 1e-8, "t = {t}");
        }
    }

    #[test]
    fn opposite_sheets_cancel() {
        let s = set(vec![-0.8, 0.8], vec![-1.0, 1.0]);
        let k = ConstantStrain { k0: 1.0 };
        let peak = |t: f64| {
            (-40..=40)
                .map(|i| sheet_field(&s, &k, i as f64 * 0.05, t).unwrap().abs())
                .fold(0.0, f64::max)
        };
        assert!(peak(1.0) > 0.1);
        assert!(peak(20.0) < 1e-6);
    }

    #[test]
    fn stats_limits() {
        let k = ConstantStrain { k0: 1.0 };
        let s = sheet_stats_deterministic(2.0, 1.0, 1.0, &k, 0.0).unwrap();
        assert_eq!((s.mean_position, s.spread), (2.0, 0.0));
        let s = sheet_stats_deterministic(2.0, 1.0, 1.0, &k, 40.0).unwrap();
        assert!(s.mean_position.abs() < 1e-15);
        assert!((s.spread - 1.0).abs() < 1e-14);
    }

    #[test]
    fn mc_matches_closed_form() {
        let k = ConstantStrain { k0: 1.0 };
        let e = sheet_stats_mc(2.0, 0.5, &k, 1.0, &McParams::new(20_000, 2e-3, 4)).unwrap();
        let exact = sheet_stats_deterministic(2.0, 1.0, 0.5, &k, 1.0).unwrap();
        assert!(e.mean_position.within(exact.mean_position, 3.5), "{e:?}");
        assert!(e.spread.within(exact.spread, 3.5), "{e:?}");
    }
}
