use rayon::prelude::*;
use serde_json::json;
use statrs::function::erf::erf;

use super::{ExperimentConfig, ExperimentKind, Observable, Params, RunOutput, Table};
use crate::burgers::{self, BurgersState, ColeHopf, SolveOptions};
use crate::error::{Error, Result};
use crate::grid::{Field, Grid1D};
use crate::hydromodes::{self, FluidProps};
use crate::kernels::{EndpointWeight, Fluctuation, FunctionStrain, HeatKernel, StrainModel};
use crate::nls;
use crate::stochastic::{
    bridge_check_boundary, bridge_check_initial, Estimate, FirstPassage, SdeSpec,
};
use crate::vortex::{self, Couette, FeynmanKacParams, SampledProfile, SpreadMode, ViscousClosure};

const SERIES_COLUMNS: [&str; 6] =
    ["t", "mean_position", "spread", "strength", "std_error_mean_position", "std_error_spread"];

pub(crate) fn dispatch(cfg: &ExperimentConfig) -> Result<RunOutput> {
    match cfg.experiment {
        ExperimentKind::Burgers => run_burgers(cfg),
        ExperimentKind::Nls => run_nls(cfg),
        ExperimentKind::VortexDeterministic => run_vortex_deterministic(cfg),
        ExperimentKind::VortexRandom => run_vortex_random(cfg),
        ExperimentKind::VortexInviscid => run_vortex_inviscid(cfg),
        ExperimentKind::FeynmanKac => run_feynman_kac(cfg),
        ExperimentKind::Bridge => run_bridge(cfg),
        ExperimentKind::Modes => run_modes(cfg),
    }
}

/// Checks beyond key presence that can be made without computing.
pub(crate) fn validate_extra(cfg: &ExperimentConfig) -> Result<()> {
    let p = cfg.params();
    match cfg.experiment {
        ExperimentKind::Burgers => {
            burgers_initial(&p)?;
            SolveOptions::from_params(&p)?;
        }
        ExperimentKind::Nls => {
            if !cfg.grid()?.is_periodic() {
                return Err(Error::invalid("grid.periodic", "nls needs a periodic grid"));
            }
        }
        ExperimentKind::VortexDeterministic => {
            sample_times(&p)?;
        }
        ExperimentKind::VortexRandom | ExperimentKind::VortexInviscid => {
            let model = strain_model(&p)?;
            // Without fluctuations the inviscid spread is identically zero.
            if cfg.experiment == ExperimentKind::VortexInviscid && model.fluctuation == Fluctuation::None {
                return Err(Error::MissingKey("k_tilde".into()));
            }
            sample_times(&p)?;
            closure(&p)?;
        }
        ExperimentKind::FeynmanKac => {
            strain_model(&p)?;
            profile(cfg)?;
            p.count_or("n_strain_paths", 1)?;
        }
        ExperimentKind::Bridge => {
            passage(&p)?;
        }
        ExperimentKind::Modes => {
            fluid(&p)?;
            wavenumbers(&p)?;
        }
    }
    Ok(())
}

impl SolveOptions {
    fn from_params(p: &Params<'_>) -> Result<Self> {
        let defaults = SolveOptions::default();
        Ok(SolveOptions {
            epsilon_max: p.number_or("epsilon", defaults.epsilon_max)?,
            dt_factor: p.number_or("dt_factor", defaults.dt_factor)?,
            max_steps: p.count_or("max_steps", defaults.max_steps)?,
        })
    }
}

struct InitialVelocity {
    velocity: Box<dyn Fn(f64) -> f64 + Sync>,
    potential: Box<dyn Fn(f64) -> f64 + Sync>,
    max_speed: f64,
}

fn burgers_initial(p: &Params<'_>) -> Result<InitialVelocity> {
    let amplitude = p.number_or("amplitude", 1.0)?;
    match p.text_or("initial", "sine")? {
        "sine" => {
            let w = p.number_or("wavenumber", std::f64::consts::PI)?;
            if w == 0.0 {
                return Err(Error::invalid("wavenumber", "must be nonzero"));
            }
            Ok(InitialVelocity {
                velocity: Box::new(move |x| amplitude * (w * x).sin()),
                potential: Box::new(move |x| amplitude * (1.0 - (w * x).cos()) / w),
                max_speed: amplitude.abs(),
            })
        }
        "gaussian" => {
            let width = p.number_or("width", 1.0)?;
            if !(width > 0.0) {
                return Err(Error::invalid("width", "must be positive"));
            }
            let half_root_pi = 0.5 * std::f64::consts::PI.sqrt();
            Ok(InitialVelocity {
                velocity: Box::new(move |x| amplitude * (-(x / width).powi(2)).exp()),
                potential: Box::new(move |x| amplitude * width * half_root_pi * erf(x / width)),
                max_speed: amplitude.abs(),
            })
        }
        other => Err(Error::invalid("initial", format!("unknown profile `{other}`; use sine or gaussian"))),
    }
}

fn run_burgers(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let p = cfg.params();
    let grid = cfg.grid()?;
    let (nu, t_end) = (p.number("nu")?, p.number("t_end")?);
    let init = burgers_initial(&p)?;
    let options = SolveOptions::from_params(&p)?;
    let state = BurgersState::new(grid.sample(&init.velocity), 0.0, nu)?;
    let report = burgers::solve(&state, t_end, &options)?;

    let oracle = ColeHopf::from_functions(&init.velocity, &init.potential, init.max_speed, nu)?;
    let xs = grid.points();
    let exact = xs
        .par_iter()
        .map(|&x| oracle.velocity(x, t_end))
        .collect::<Result<Vec<f64>>>()?;
    let u = &report.state.u.values;
    let linf = u.iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);

    let mut fields = Table::new("fields.csv", &["x", "value"]);
    let mut reference = Table::new("cole_hopf.csv", &["x", "value"]);
    for i in 0..grid.len() {
        fields.rows.push(vec![xs[i], u[i]]);
        reference.rows.push(vec![xs[i], exact[i]]);
    }
    let mut out = RunOutput { tables: vec![fields, reference], ..Default::default() };
    out.observables.insert("linf_error".into(), Observable::exact(linf));
    out.observables.insert("steps".into(), Observable::exact(report.steps as f64));
    out.observables.insert("min_dt".into(), Observable::exact(report.min_dt));
    out.observables.insert("max_dt".into(), Observable::exact(report.max_dt));
    out.observables.insert("mass".into(), Observable::exact(report.state.u.integral()));
    out.details.insert("grid".into(), json!(grid));
    out.details.insert("solve_options".into(), json!(options));
    Ok(out)
}

fn run_nls(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let p = cfg.params();
    let grid = cfg.grid()?;
    let (beta, kappa) = (p.number("beta")?, p.number("kappa")?);
    let (t_end, dt) = (p.number("t_end")?, p.number("dt")?);
    let start = nls::stationary_soliton(&grid, beta, kappa, 0.0)?;
    let report = nls::propagate(&start, t_end, dt, 0.0)?;
    let exact = nls::stationary_soliton(&grid, beta, kappa, t_end)?;
    let deviation = report
        .state
        .eta
        .values
        .iter()
        .zip(&exact.eta.values)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);

    let mut fields = Table::new("fields.csv", &["x", "re", "im"]);
    for (x, z) in grid.points().iter().zip(&report.state.eta.values) {
        fields.rows.push(vec![*x, z.re, z.im]);
    }
    let mut out = RunOutput { tables: vec![fields], ..Default::default() };
    out.observables.insert("norm_drift".into(), Observable::exact(report.norm_drift));
    out.observables.insert("shape_deviation".into(), Observable::exact(deviation));
    out.observables.insert("phase_number".into(), Observable::exact(report.phase_number));
    out.observables.insert("steps".into(), Observable::exact(report.steps as f64));
    if report.phase_warning {
        out.warnings.push(format!(
            "phase number {:.3} exceeds {}: splitting error may be visible",
            report.phase_number,
            nls::PHASE_LIMIT
        ));
    }
    out.details.insert("grid".into(), json!(grid));
    Ok(out)
}

fn sample_times(p: &Params<'_>) -> Result<Vec<f64>> {
    let t_end = p.number("t_end")?;
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::invalid("t_end", "must be positive"));
    }
    let n = p.count_or("n_times", 5)?;
    Ok((1..=n).map(|i| t_end * i as f64 / n as f64).collect())
}

fn strain_model(p: &Params<'_>) -> Result<StrainModel> {
    let k0 = p.number("k0")?;
    let fluctuation = if p.has("k_tilde") {
        Fluctuation::DeltaCorrelated { k_tilde: p.number("k_tilde")? }
    } else if p.has("variance") || p.has("tau_c") {
        Fluctuation::ExponentialCorrelated { variance: p.number("variance")?, tau_c: p.number("tau_c")? }
    } else {
        Fluctuation::None
    };
    let weight = EndpointWeight::from_value(p.number_or("boundary_delta_weight", 0.5)?)?;
    Ok(StrainModel::new(k0, fluctuation)?.with_weight(weight))
}

fn closure(p: &Params<'_>) -> Result<ViscousClosure> {
    match p.text_or("closure", "independent")? {
        "independent" => Ok(ViscousClosure::Independent),
        "exact" => Ok(ViscousClosure::Exact),
        other => Err(Error::invalid("closure", format!("unknown closure `{other}`; use independent or exact"))),
    }
}

fn series_row(t: f64, mean: &Estimate, spread: &Estimate, strength: f64) -> Vec<f64> {
    vec![t, mean.mean, spread.mean, strength, mean.std_error, spread.std_error]
}

fn exact_row(t: f64, mean: f64, spread: f64, strength: f64) -> Vec<f64> {
    vec![t, mean, spread, strength, 0.0, 0.0]
}

fn run_vortex_deterministic(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let p = cfg.params();
    let mc = cfg.mc()?;
    let (x0, nu, k0) = (p.number("x0")?, p.number("nu")?, p.number("k0")?);
    let modulation = p.number_or("modulation", 0.0)?;
    let strength = p.number_or("strength", 1.0)?;
    let path = FunctionStrain::new(move |t: f64| k0 + modulation * t.sin());

    let mut closed = Table::new("closed_form.csv", &SERIES_COLUMNS);
    let mut sampled = Table::new("monte_carlo.csv", &SERIES_COLUMNS);
    let (mut z_mean, mut z_spread) = (0.0f64, 0.0f64);
    let mut last = None;
    for t in sample_times(&p)? {
        let exact = vortex::sheet_stats_deterministic(x0, strength, nu, &path, t)?;
        let est = vortex::sheet_stats_mc(x0, nu, &path, t, &mc)?;
        z_mean = z_mean.max(est.mean_position.z_score(exact.mean_position));
        z_spread = z_spread.max(est.spread.z_score(exact.spread));
        closed.rows.push(exact_row(t, exact.mean_position, exact.spread, strength));
        sampled.rows.push(series_row(t, &est.mean_position, &est.spread, strength));
        last = Some((exact, est));
    }
    let (exact, est) = last.expect("at least one sample time");
    let mut out = RunOutput { tables: vec![closed, sampled], ..Default::default() };
    let obs = &mut out.observables;
    obs.insert("mean_position".into(), Observable::estimate(est.mean_position.mean, est.mean_position.std_error));
    obs.insert("spread".into(), Observable::estimate(est.spread.mean, est.spread.std_error));
    obs.insert("mean_position_closed_form".into(), Observable::exact(exact.mean_position));
    obs.insert("spread_closed_form".into(), Observable::exact(exact.spread));
    obs.insert("max_z_mean_position".into(), Observable::exact(z_mean));
    obs.insert("max_z_spread".into(), Observable::exact(z_spread));
    out.details.insert("strain_rate".into(), json!({ "k0": k0, "modulation": modulation, "form": "k0 + modulation * sin(t)" }));
    Ok(out)
}

fn random_strain_run(cfg: &ExperimentConfig, inviscid: bool) -> Result<RunOutput> {
    let p = cfg.params();
    let mc = cfg.mc()?;
    let x0 = p.number("x0")?;
    let nu = if inviscid { p.number_or("nu", 0.0)? } else { p.number("nu")? };
    let strength = p.number_or("strength", 1.0)?;
    let model = strain_model(&p)?;
    let mode = if inviscid {
        SpreadMode::Inviscid
    } else {
        SpreadMode::Viscous { closure: closure(&p)? }
    };

    let mut closed = Table::new("closed_form.csv", &SERIES_COLUMNS);
    let mut sampled = Table::new("monte_carlo.csv", &SERIES_COLUMNS);
    let mut last = None;
    for t in sample_times(&p)? {
        let mean = vortex::ensemble_mean_position(x0, &model, t)?;
        let spread = vortex::ensemble_spread(x0, nu, &model, t, mode)?;
        let est = vortex::strain_ensemble(x0, nu, &model, t, &mc)?;
        let spread_est = if inviscid { est.inviscid_spread } else { est.viscous_spread };
        closed.rows.push(exact_row(t, mean, spread, strength));
        sampled.rows.push(series_row(t, &est.mean_position, &spread_est, strength));
        last = Some((t, mean, spread, est, spread_est));
    }
    let (t, mean, spread, est, spread_est) = last.expect("at least one sample time");
    let selection = vortex::select_endpoint_weight(x0, &model, t, &est.mean_position)?;

    let mut out = RunOutput { tables: vec![closed, sampled], ..Default::default() };
    let obs = &mut out.observables;
    obs.insert("mean_position".into(), Observable::estimate(est.mean_position.mean, est.mean_position.std_error));
    obs.insert("spread".into(), Observable::estimate(spread_est.mean, spread_est.std_error));
    obs.insert("stretching".into(), Observable::estimate(est.stretching.mean, est.stretching.std_error));
    obs.insert("stretching_closed_form".into(), Observable::exact(vortex::ensemble_stretching(&model, t)?));
    obs.insert("mean_position_closed_form".into(), Observable::exact(mean));
    obs.insert("spread_closed_form".into(), Observable::exact(spread));
    obs.insert("z_mean_position".into(), Observable::exact(est.mean_position.z_score(mean)));
    obs.insert("z_spread".into(), Observable::exact(spread_est.z_score(spread)));
    obs.insert("weight_z_half".into(), Observable::exact(selection.z_half));
    obs.insert("weight_z_full".into(), Observable::exact(selection.z_full));
    obs.insert("selected_weight".into(), Observable::exact(selection.selected.value()));
    if let SpreadMode::Viscous { closure: ViscousClosure::Independent } = mode {
        // The closure is an approximation: check it against sampled factors
        // and record how far it sits from the directly sampled spread.
        let factored = vortex::factored_spread_mc(nu, &model, t, &mc)?;
        obs.insert("spread_factored".into(), Observable::estimate(factored.mean, factored.std_error));
        obs.insert("z_spread_factored".into(), Observable::exact(factored.z_score(spread)));
        obs.insert("closure_bias_ratio".into(), Observable::exact(spread / spread_est.mean));
    }
    if inviscid {
        // Long-time exponent of the inviscid spread: -2 k0 + 4 dI/dt.
        let rate = -2.0 * model.k0 + 4.0 * (model.correlation_functional(t) - model.correlation_functional(0.5 * t)) / (0.5 * t);
        obs.insert("spread_growth_rate".into(), Observable::exact(rate));
    }
    out.warnings.extend(model.stability_warning());
    out.details.insert("strain_model".into(), json!(model));
    out.details.insert("spread_mode".into(), json!(mode));
    Ok(out)
}

fn run_vortex_random(cfg: &ExperimentConfig) -> Result<RunOutput> {
    random_strain_run(cfg, false)
}

fn run_vortex_inviscid(cfg: &ExperimentConfig) -> Result<RunOutput> {
    random_strain_run(cfg, true)
}

enum Profile {
    Couette(Couette),
    Sampled(SampledProfile),
}

fn profile(cfg: &ExperimentConfig) -> Result<Profile> {
    let p = cfg.params();
    match p.text_or("profile", "couette")? {
        "couette" => Ok(Profile::Couette(Couette { shear: p.number_or("shear", 1.0)? })),
        "sine" => {
            let (a, w) = (p.number_or("amplitude", 1.0)?, p.number_or("wavenumber", 1.0)?);
            let grid: Grid1D = cfg.grid()?;
            let velocity: Field = grid.sample(|x| a * (w * x).sin());
            Ok(Profile::Sampled(SampledProfile::new(velocity)?))
        }
        other => Err(Error::invalid("profile", format!("unknown profile `{other}`; use couette or sine"))),
    }
}

fn run_feynman_kac(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let p = cfg.params();
    let mc = cfg.mc()?;
    let model = strain_model(&p)?;
    let (nu, x, t) = (p.number("nu")?, p.number("x")?, p.number("t")?);
    let params = FeynmanKacParams {
        n_strain_paths: p.count_or("n_strain_paths", 1)?,
        n_inner_paths: mc.n_paths,
        dt: mc.dt,
        seed: mc.seed,
    };
    let mean_path = model.mean_path();
    let (estimate, characteristic) = match profile(cfg)? {
        Profile::Couette(c) => (
            vortex::feynman_kac_vorticity(&c, &model, nu, x, t, &params)?,
            vortex::inviscid_continuous_vorticity(&c, &mean_path, x, t)?,
        ),
        Profile::Sampled(s) => (
            vortex::feynman_kac_vorticity(&s, &model, nu, x, t, &params)?,
            vortex::inviscid_continuous_vorticity(&s, &mean_path, x, t)?,
        ),
    };
    let mut table = Table::new("vorticity.csv", &["x", "t", "value", "std_error"]);
    table.rows.push(vec![x, t, estimate.mean, estimate.std_error]);
    let mut out = RunOutput { tables: vec![table], ..Default::default() };
    out.observables.insert("vorticity".into(), Observable::estimate(estimate.mean, estimate.std_error));
    out.observables.insert("mean_strain_characteristic".into(), Observable::exact(characteristic));
    out.warnings.extend(model.stability_warning());
    out.details.insert("strain_model".into(), json!(model));
    out.details.insert("sampling".into(), json!(params));
    Ok(out)
}

fn passage(p: &Params<'_>) -> Result<FirstPassage> {
    match p.text_or("passage", "brownian_bridge")? {
        "brownian_bridge" => Ok(FirstPassage::BrownianBridge),
        "interpolate" => Ok(FirstPassage::Interpolate),
        other => Err(Error::invalid("passage", format!("unknown rule `{other}`; use brownian_bridge or interpolate"))),
    }
}

fn run_bridge(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let p = cfg.params();
    let mc = cfg.mc()?;
    let (nu, x_start, wall, t) = (p.number("nu")?, p.number("x_start")?, p.number("wall")?, p.number("t")?);
    let spec = SdeSpec::new(|_: f64, _: f64| 0.0, nu, x_start, 0.0, t)?;
    let boundary = bridge_check_boundary(|_| 1.0, &spec, wall, &mc, passage(&p)?)?;
    let initial = bridge_check_initial(f64::cos, &HeatKernel { nu }, &spec, &mc)?;

    let mut out = RunOutput::default();
    let obs = &mut out.observables;
    for (name, r) in [("absorbed", &boundary), ("initial", &initial)] {
        obs.insert(format!("{name}_mc"), Observable::estimate(r.mc.mean, r.mc.std_error));
        obs.insert(format!("{name}_quadrature"), Observable::exact(r.quadrature));
        obs.insert(format!("{name}_z"), Observable::exact(r.z));
    }
    Ok(out)
}

fn fluid(p: &Params<'_>) -> Result<FluidProps> {
    let mut props = FluidProps::new(
        p.number("gamma")?,
        p.number("alpha_t")?,
        p.number("a0")?,
        p.number("nu")?,
        p.number("nu_b")?,
    )?;
    props.beta = p.number_or("beta", props.beta)?;
    props.rho = p.number_or("rho", props.rho)?;
    props.validate()?;
    Ok(props)
}

/// `n_q` log-spaced wavenumbers from `q_min` to `q_max`.
fn wavenumbers(p: &Params<'_>) -> Result<Vec<f64>> {
    let (lo, hi) = (p.number("q_min")?, p.number("q_max")?);
    let n = p.count_or("n_q", 1)?;
    if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
        return Err(Error::invalid("q_min/q_max", "need 0 < q_min <= q_max"));
    }
    if n == 1 {
        return Ok(vec![lo]);
    }
    let ratio = (hi / lo).ln() / (n - 1) as f64;
    Ok((0..n).map(|i| if i + 1 == n { hi } else { lo * (ratio * i as f64).exp() }).collect())
}

fn run_modes(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let p = cfg.params();
    let props = fluid(&p)?;
    let qs = wavenumbers(&p)?;
    let sweep = hydromodes::mode_sweep(&props, &qs)?;
    let mut columns = vec!["q".to_string()];
    columns.extend((1..=4).map(|i| format!("re_s{i}")));
    columns.extend((1..=4).map(|i| format!("im_s{i}")));
    let cols: Vec<&str> = columns.iter().map(String::as_str).collect();
    let mut table = Table::new("modes.csv", &cols);
    let (mut residual, mut gap) = (0.0f64, 0.0f64);
    let mut first_growing = None;
    for (&q, modes) in qs.iter().zip(&sweep) {
        if first_growing.is_none() && modes.iter().any(|s| s.re > 0.0) {
            first_growing = Some(q);
        }
        let mut row = vec![q];
        row.extend(modes.iter().map(|s| s.re));
        row.extend(modes.iter().map(|s| s.im));
        table.rows.push(row);
        let coeffs = hydromodes::cubic_coefficients(&props, q)?;
        let approx = hydromodes::asymptotic_modes(&props, q)?;
        for i in 0..3 {
            residual = residual.max(hydromodes::relative_residual(&coeffs, modes[i]));
            gap = gap.max((modes[i] - approx[i]).norm() / modes[i].norm());
        }
    }
    let mut out = RunOutput { tables: vec![table], ..Default::default() };
    out.observables.insert("max_relative_residual".into(), Observable::exact(residual));
    out.observables.insert("max_asymptotic_gap".into(), Observable::exact(gap));
    if let Some(q) = first_growing {
        out.warnings.push(format!(
            "a mode grows (Re s > 0) from q = {q:e}: the entropy-pressure coupling term dominates at large q"
        ));
    }
    out.details.insert("fluid".into(), json!(props));
    Ok(out)
}
