use greenpath::kernels::{ConstantStrain, EndpointWeight, FunctionStrain, Fluctuation, StrainModel};
use greenpath::stochastic::McParams;
use greenpath::vortex::{
    ensemble_mean_position, ensemble_spread, feynman_kac_vorticity, sheet_stats_deterministic,
    sheet_stats_mc, strain_ensemble, Couette, FeynmanKacParams, SampledProfile, SpreadMode,
    ViscousClosure,
};
use greenpath::Grid1D;

/// Method-of-lines reference for `Ω_t = k x Ω_x + k Ω + ν Ω_xx` with
/// constant `k`, classical RK4 in time and second-order central differences
/// on `[-8, 8]`. Neumann ends; the point of interest is far inside the
/// domain of dependence.
fn vorticity_pde(omega0: impl Fn(f64) -> f64, k: f64, nu: f64, x: f64, t: f64) -> f64 {
    let (lo, hi, dx) = (-8.0, 8.0, 0.005);
    let n = ((hi - lo) / dx) as usize + 1;
    let xs: Vec<f64> = (0..n).map(|i| lo + i as f64 * dx).collect();
    let mut w: Vec<f64> = xs.iter().map(|&x| omega0(x)).collect();
    let rhs = |w: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|i| {
                let l = if i == 0 { w[1] } else { w[i - 1] };
                let r = if i == n - 1 { w[n - 2] } else { w[i + 1] };
                k * xs[i] * (r - l) / (2.0 * dx) + k * w[i] + nu * (r - 2.0 * w[i] + l) / (dx * dx)
            })
            .collect()
    };
    let axpy = |w: &[f64], a: f64, d: &[f64]| -> Vec<f64> { w.iter().zip(d).map(|(u, v)| u + a * v).collect() };
    let steps = (t / 5e-5).round() as usize;
    let dt = t / steps as f64;
    for _ in 0..steps {
        let k1 = rhs(&w);
        let k2 = rhs(&axpy(&w, 0.5 * dt, &k1));
        let k3 = rhs(&axpy(&w, 0.5 * dt, &k2));
        let k4 = rhs(&axpy(&w, dt, &k3));
        for i in 0..n {
            w[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    let i = ((x - lo) / dx).floor() as usize;
    let f = (x - xs[i]) / dx;
    (1.0 - f) * w[i] + f * w[i + 1]
}

#[test]
fn feynman_kac_matches_pde_reference_for_sine_profile() {
    let (k0, nu, x, t) = (1.0, 0.1, 0.3, 0.5);
    let reference = vorticity_pde(f64::cos, k0, nu, x, t);
    // Sanity check of the reference against the Gaussian average of cos.
    let s2: f64 = nu * ((2.0 * k0 * t).exp() - 1.0) / k0;
    let analytic = (k0 * t).exp() * (x * (k0 * t).exp()).cos() * (-0.5 * s2).exp();
    assert!((reference - analytic).abs() < 1e-4, "{reference} {analytic}");

    let profile = SampledProfile::new(Grid1D::centered(12.0, 6001).unwrap().sample(f64::sin)).unwrap();
    let params = FeynmanKacParams { n_strain_paths: 1, n_inner_paths: 40_000, dt: 5e-4, seed: 31 };
    let est = feynman_kac_vorticity(&profile, &StrainModel::constant(k0).unwrap(), nu, x, t, &params).unwrap();
    assert!(est.within(reference, 3.0), "{est:?} vs {reference}");
}

#[test]
fn couette_vorticity_is_stretched_without_noise() {
    let m = StrainModel::constant(0.6).unwrap();
    let params = FeynmanKacParams { n_strain_paths: 1, n_inner_paths: 500, dt: 0.01, seed: 1 };
    for x in [-2.0, 0.0, 3.0] {
        let est = feynman_kac_vorticity(&Couette { shear: 2.5 }, &m, 0.4, x, 2.0, &params).unwrap();
        assert_eq!(est.std_error, 0.0);
        assert!((est.mean - 2.5 * 1.2f64.exp()).abs() < 1e-12);
    }
}

#[test]
fn deterministic_sheet_statistics_match_euler_maruyama() {
    let mc = McParams::new(20_000, 1e-3, 41);
    let constant = ConstantStrain { k0: 1.0 };
    let modulated = FunctionStrain::new(|s: f64| 1.0 + 0.5 * s.sin());
    for t in [0.5, 2.0] {
        for (exact, est) in [
            (sheet_stats_deterministic(1.0, 1.0, 0.1, &constant, t).unwrap(), sheet_stats_mc(1.0, 0.1, &constant, t, &mc).unwrap()),
            (sheet_stats_deterministic(1.0, 1.0, 0.1, &modulated, t).unwrap(), sheet_stats_mc(1.0, 0.1, &modulated, t, &mc).unwrap()),
        ] {
            assert!(est.mean_position.within(exact.mean_position, 3.0), "{t}: {est:?} {exact:?}");
            assert!(est.spread.within(exact.spread, 3.0), "{t}: {est:?} {exact:?}");
        }
    }
}

#[test]
fn spread_relaxes_to_nu_over_k0() {
    for (k0, nu) in [(1.0, 0.1), (2.5, 0.03)] {
        let s = sheet_stats_deterministic(0.0, 1.0, nu, &ConstantStrain { k0 }, 10.0 / k0).unwrap();
        assert!((s.spread / (nu / k0) - 1.0).abs() < 0.01);
    }
}

#[test]
fn random_strain_mean_and_exact_spread_match_sampling() {
    let model = StrainModel::new(1.0, Fluctuation::DeltaCorrelated { k_tilde: 0.2 })
        .unwrap()
        .with_weight(EndpointWeight::Half);
    let t = 1.5;
    let est = strain_ensemble(1.0, 0.1, &model, t, &McParams::new(20_000, 1e-3, 8)).unwrap();
    assert!(est.mean_position.within(ensemble_mean_position(1.0, &model, t).unwrap(), 3.0));
    let exact = SpreadMode::Viscous { closure: ViscousClosure::Exact };
    assert!(est.viscous_spread.within(ensemble_spread(1.0, 0.1, &model, t, exact).unwrap(), 3.0));
    let inviscid = ensemble_spread(1.0, 0.0, &model, t, SpreadMode::Inviscid).unwrap();
    assert!(est.inviscid_spread.within(inviscid, 3.0), "{:?} {inviscid}", est.inviscid_spread);
}

#[test]
fn exponentially_correlated_strain_matches_sampling() {
    let model = StrainModel::new(1.0, Fluctuation::ExponentialCorrelated { variance: 0.3, tau_c: 0.5 }).unwrap();
    let t = 1.0;
    let est = strain_ensemble(1.0, 0.1, &model, t, &McParams::new(20_000, 1e-3, 9)).unwrap();
    assert!(est.mean_position.within(ensemble_mean_position(1.0, &model, t).unwrap(), 3.0));
    let exact = SpreadMode::Viscous { closure: ViscousClosure::Exact };
    assert!(est.viscous_spread.within(ensemble_spread(1.0, 0.1, &model, t, exact).unwrap(), 3.0));
}

#[test]
fn strong_mean_strain_concentrates_sheets_at_origin() {
    use greenpath::kernels::strain_path_sample_stream;
    use greenpath::vortex::inviscid_sheet_position;

    let model = StrainModel::new(1.0, Fluctuation::DeltaCorrelated { k_tilde: 0.1 }).unwrap();
    let near_origin = |t: f64| {
        let inside = (0..2000u64)
            .filter(|&i| {
                let path = strain_path_sample_stream(&model, t, 0.01, 77, i).unwrap();
                inviscid_sheet_position(1.0, &path, t).unwrap().abs() < 0.05
            })
            .count();
        inside as f64 / 2000.0
    };
    let fractions = [near_origin(1.0), near_origin(3.0), near_origin(8.0)];
    assert!(fractions[0] < fractions[1] && fractions[1] < fractions[2], "{fractions:?}");
    assert!(fractions[2] > 0.99, "{fractions:?}");
}
