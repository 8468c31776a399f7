//! Resolved subcommand parameters and the runs that turn them into tables and reports.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use tflow::dynamics::{population_series, propagate_lindblad, propagate_schrodinger, TimeGrid};
use tflow::models::{
    dephasing_analytics, dephasing_model, hadamard_closed_population, hadamard_model, lambda_gamma,
    lambda_hamiltonian, landau_zener_probability, minus_projector, plus_projector, sta_hamiltonian,
    sta_linear_mean, sta_linear_std, sta_tf_closed, two_level_hamiltonian, two_level_population,
    two_level_tf_closed, ControlWaveform, LambdaConfig, StaConfig, TwoLevelInitial, WaveformSpec,
};
use tflow::operators::{projector, DensityMatrix, Operator, PureState};
use tflow::optimize::{optimize_multistart, optimize_polynomial, verify_monotone, OptimizeConfig};
use tflow::protocol::{convergence_report, exact_limit, simulate_from_series};
use tflow::qsl::{energy_spread, mt_dephasing_bound, trace_term, BoundsInputs, BoundsReport};
use tflow::tf::{
    split_toa_tod, sup_distance, tf_from_current_midpoints, tf_from_population, PopulationSeries,
    TfDistribution,
};

use crate::error::{CliError, Result};
use crate::output::{Column, RunOutput, Table};

/// Measurement-protocol settings for the two-level run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolParams {
    pub n_trials: u64,
    /// L1 tolerance used for the pass flag.
    pub tolerance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoLevelParams {
    pub theta: f64,
    pub phi: f64,
    pub waveform: WaveformSpec,
    pub t_start: f64,
    pub t_end: f64,
    pub points: usize,
    pub numeric: bool,
    pub protocol: Option<ProtocolParams>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StaParams {
    pub alpha: f64,
    pub t_final: f64,
    pub omega0: f64,
    pub points: usize,
    pub numeric: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LambdaParams {
    pub config: LambdaConfig,
    pub points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DephasingParams {
    pub gamma: f64,
    pub t_end: f64,
    pub points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HadamardParams {
    pub omega0: f64,
    pub gamma: f64,
    pub t_end: f64,
    pub points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizeParams {
    pub config: OptimizeConfig,
    pub starts: usize,
}

/// A fully resolved run; the variant name is the manifest's command.
#[derive(Clone, Debug, PartialEq)]
pub enum Params {
    TwoLevel(TwoLevelParams),
    Sta(StaParams),
    Lambda(LambdaParams),
    Dephasing(DephasingParams),
    Hadamard(HadamardParams),
    Optimize(OptimizeParams),
}

impl Params {
    pub fn command(&self) -> &'static str {
        match self {
            Params::TwoLevel(_) => "two-level",
            Params::Sta(_) => "sta",
            Params::Lambda(_) => "lambda",
            Params::Dephasing(_) => "dephasing",
            Params::Hadamard(_) => "hadamard",
            Params::Optimize(_) => "optimize",
        }
    }

    pub fn to_value(&self) -> Result<Value> {
        Ok(match self {
            Params::TwoLevel(p) => serde_json::to_value(p)?,
            Params::Sta(p) => serde_json::to_value(p)?,
            Params::Lambda(p) => serde_json::to_value(p)?,
            Params::Dephasing(p) => serde_json::to_value(p)?,
            Params::Hadamard(p) => serde_json::to_value(p)?,
            Params::Optimize(p) => serde_json::to_value(p)?,
        })
    }

    /// Rebuilds parameters from a manifest's `command` and `params`.
    pub fn from_manifest(command: &str, params: Value) -> Result<Self> {
        let bad = |e: serde_json::Error| CliError::usage(format!("manifest params for {command}: {e}"));
        Ok(match command {
            "two-level" => Params::TwoLevel(serde_json::from_value(params).map_err(bad)?),
            "sta" => Params::Sta(serde_json::from_value(params).map_err(bad)?),
            "lambda" => Params::Lambda(serde_json::from_value(params).map_err(bad)?),
            "dephasing" => Params::Dephasing(serde_json::from_value(params).map_err(bad)?),
            "hadamard" => Params::Hadamard(serde_json::from_value(params).map_err(bad)?),
            "optimize" => Params::Optimize(serde_json::from_value(params).map_err(bad)?),
            other => return Err(CliError::usage(format!("unknown manifest command {other:?}"))),
        })
    }

    pub fn run(&self, seed: u64) -> Result<RunOutput> {
        match self {
            Params::TwoLevel(p) => run_two_level(p, seed),
            Params::Sta(p) => run_sta(p),
            Params::Lambda(p) => run_lambda(p),
            Params::Dephasing(p) => run_dephasing(p),
            Params::Hadamard(p) => run_hadamard(p),
            Params::Optimize(p) => run_optimize(p, seed),
        }
    }
}

fn dist_json(d: &TfDistribution) -> Value {
    let m = d.moments(2);
    json!({ "mean": m.mean, "std": m.std, "peak": d.peak(), "normalization": d.normalization() })
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn run_two_level(p: &TwoLevelParams, seed: u64) -> Result<RunOutput> {
    let waveform = ControlWaveform::from_spec(p.waveform.clone())?;
    let init = TwoLevelInitial::new(p.theta, p.phi)?;
    let grid = TimeGrid::new(p.t_start, p.t_end, p.points)?;
    let series = PopulationSeries::from_fn(grid, |t| two_level_population(&waveform, &init, t))?;
    let dist = tf_from_population(&series)?;
    let closed = two_level_tf_closed(&waveform, &init, &grid)?;
    let split = split_toa_tod(&series, None)?;
    let mut diagnostics = Vec::new();

    let mut table = Table::new("series.csv", grid.points()).num("p1", series.values().to_vec());
    let mut numeric = Value::Null;
    if p.numeric {
        let traj = propagate_schrodinger(&two_level_hamiltonian(&waveform), &init.state(), &grid)?;
        let prop = population_series(&traj, &projector(2, 1)?)?;
        numeric = json!({
            "max_deviation": max_abs_diff(prop.values(), series.values()),
            "substeps": traj.diagnostics().substeps,
            "max_drift": traj.diagnostics().max_drift,
        });
        table = table.num("p1_numeric", prop.values().to_vec());
    }
    let segment: Vec<String> = split
        .interval_kinds
        .iter()
        .map(|k| k.map_or("neutral", |k| k.label()).to_string())
        .collect();
    let mut tables = vec![
        table,
        Table::new("tf.csv", grid.midpoints())
            .num("pi_tf", dist.density().to_vec())
            .num("pi_closed", closed.density().to_vec())
            .with("segment", Column::Text(segment)),
    ];

    let mut protocol = Value::Null;
    if let Some(proto) = &p.protocol {
        let emp = simulate_from_series(&series, proto.n_trials, seed)?;
        let exact = exact_limit(&series)?;
        let conv = convergence_report(&emp, &exact, proto.tolerance)?;
        if conv.noise_dominated_bins > 0 {
            diagnostics.push(format!(
                "{} of {} protocol bins are below the binomial noise level",
                conv.noise_dominated_bins,
                conv.snr.len()
            ));
        }
        protocol = json!({
            "n_trials": proto.n_trials,
            "seed": seed,
            "l1_distance": conv.l1_distance,
            "sup_distance": conv.sup_distance,
            "tolerance": conv.tolerance,
            "passed": conv.passed,
            "noise_dominated_bins": conv.noise_dominated_bins,
            "max_frequency_deviation": emp.max_frequency_deviation(),
            "moments": dist_json(&emp.distribution),
        });
        tables.push(
            Table::new("protocol.csv", grid.points())
                .with("successes", Column::Count(emp.successes.clone()))
                .num("frequency", emp.frequencies.clone())
                .num("p1_exact", emp.exact_populations.clone()),
        );
        tables.push(
            Table::new("protocol_tf.csv", grid.midpoints())
                .num("pi_hat", emp.distribution.density().to_vec())
                .num("pi_exact", exact.density().to_vec()),
        );
    }

    let results = json!({
        "tf": dist_json(&dist),
        "closed_form": dist_json(&closed),
        "net_transfer": series.net_transfer(),
        "boundaries": split.boundaries,
        "segments": split.segments,
        "toa": split.toa.as_ref().map(dist_json),
        "tod": split.tod.as_ref().map(dist_json),
        "arrival_weight": split.arrival_weight(),
        "departure_weight": split.departure_weight(),
        "numeric": numeric,
        "protocol": protocol,
    });
    Ok(RunOutput {
        tables,
        results,
        bounds: Value::Null,
        diagnostics,
    })
}

fn run_sta(p: &StaParams) -> Result<RunOutput> {
    if !(p.alpha > 0.0) {
        return Err(CliError::usage("alpha must be > 0"));
    }
    let cfg = StaConfig::new(p.alpha, p.t_final, p.omega0)?;
    let grid = cfg.grid(p.points)?;
    let (dist, exact) = sta_tf_closed(&cfg, &grid)?;
    let closed: Vec<f64> = grid.points().iter().map(|&t| cfg.population_plus(t)).collect();
    let mut table = Table::new("series.csv", grid.points()).num("p_plus", closed.clone());
    let mut numeric = Value::Null;
    if p.numeric {
        let traj = propagate_schrodinger(&sta_hamiltonian(&cfg)?, &cfg.state_at(grid.t_start()), &grid)?;
        let prop = population_series(&traj, &plus_projector())?;
        numeric = json!({
            "max_deviation": max_abs_diff(prop.values(), &closed),
            "substeps": traj.diagnostics().substeps,
            "max_drift": traj.diagnostics().max_drift,
        });
        table = table.num("p_plus_numeric", prop.values().to_vec());
    }
    let results = json!({
        "mean": exact.mean,
        "std": exact.std,
        "grid": dist_json(&dist),
        "linear_reference": { "mean": sta_linear_mean(p.t_final), "std": sta_linear_std(p.t_final) },
        "numeric": numeric,
    });
    Ok(RunOutput {
        tables: vec![table, Table::new("tf.csv", dist.times().to_vec()).num("pi_toa", dist.density().to_vec())],
        results,
        bounds: Value::Null,
        diagnostics: Vec::new(),
    })
}

fn run_lambda(p: &LambdaParams) -> Result<RunOutput> {
    let cfg = p.config;
    cfg.validate()?;
    let grid = TimeGrid::new(0.0, cfg.t_final, p.points)?;
    let traj = propagate_schrodinger(&lambda_hamiltonian(&cfg)?, &PureState::basis(3, 0)?, &grid)?;
    let mut diagnostics = Vec::new();
    let mut series = Vec::new();
    let mut tfs = Vec::new();
    for k in 0..3 {
        let s = population_series(&traj, &projector(3, k)?)?;
        match tf_from_population(&s) {
            Ok(d) => tfs.push(Some(d)),
            Err(e) if e.is_numerical() => {
                diagnostics.push(format!("state |{}>: {e}", k + 1));
                tfs.push(None);
            }
            Err(e) => return Err(e.into()),
        }
        series.push(s);
    }
    let sum_drift = (0..grid.n_points())
        .map(|j| (series.iter().map(|s| s.values()[j]).sum::<f64>() - 1.0).abs())
        .fold(0.0, f64::max);
    let gamma = lambda_gamma(&cfg)?;
    let current = tf_from_current_midpoints(&traj, |_| gamma)?;
    let pi2 = tfs[1].as_ref().ok_or_else(|| tflow::Error::Degenerate("|2> population is flat".into()))?;
    let current_gap = sup_distance(pi2, &current)?;

    let two = PureState::basis(3, 1)?;
    let dark = cfg.dark_state();
    let mut dark_leak: f64 = 0.0;
    for t in grid.points() {
        dark_leak = dark_leak.max(two.inner(&dark.apply(&cfg.hamiltonian_at(t))?)?.norm());
    }

    let nan_column = |d: &Option<TfDistribution>| match d {
        Some(d) => d.density().to_vec(),
        None => vec![f64::NAN; grid.n_points() - 1],
    };
    let mut populations = Table::new("series.csv", grid.points());
    let mut tf = Table::new("tf.csv", grid.midpoints());
    for k in 0..3 {
        populations = populations.num(&format!("p{}", k + 1), series[k].values().to_vec());
        tf = tf.num(&format!("pi{}", k + 1), nan_column(&tfs[k]));
    }
    tf = tf.num("pi2_current", current.density().to_vec());

    let per_state: Vec<Value> = tfs.iter().map(|d| d.as_ref().map_or(Value::Null, dist_json)).collect();
    let results = json!({
        "states": per_state,
        "final_populations": series.iter().map(|s| s.values()[grid.n_points() - 1]).collect::<Vec<_>>(),
        "population_sum_drift": sum_drift,
        "landau_zener_probability": landau_zener_probability(&cfg)?,
        "omega_eff": cfg.omega_eff(),
        "resonance_time": cfg.resonance_time(),
        "current_route": { "tf": dist_json(&current), "sup_distance_to_finite_difference": current_gap },
        "dark_state_check": { "max_coupling": dark_leak, "passed": dark_leak <= 1e-12 },
        "substeps": traj.diagnostics().substeps,
    });
    Ok(RunOutput {
        tables: vec![populations, tf],
        results,
        bounds: Value::Null,
        diagnostics,
    })
}

fn run_dephasing(p: &DephasingParams) -> Result<RunOutput> {
    if !(p.gamma > 0.0) {
        return Err(CliError::usage("gamma must be > 0"));
    }
    let model = dephasing_model(p.gamma)?;
    let grid = TimeGrid::new(0.0, p.t_end, p.points)?;
    let traj = propagate_lindblad(&model, &DensityMatrix::from_pure(&PureState::plus()), &grid)?;
    let minus = minus_projector();
    let series = population_series(&traj, &minus)?;
    let dist = tf_from_population(&series)?;
    let analytics = dephasing_analytics(p.gamma, &grid)?;
    let bounds = BoundsReport::evaluate(
        &BoundsInputs {
            delta_theta: series.net_transfer(),
            trace_term: trace_term(&model, &minus, 0.0)?,
            energy_spread: None,
            tau_mt: Some(mt_dephasing_bound(p.gamma)?),
        },
        &dist,
    )?;
    let m = dist.moments(2);
    let results = json!({
        "tf": dist_json(&dist),
        "exact": { "mean": analytics.exact_mean, "std": analytics.exact_std, "peak": analytics.exact_peak },
        "truncation_mass": analytics.truncation_mass,
        "net_transfer": series.net_transfer(),
        "ratio_to_spread_bound": m.std / bounds.spread_bound_qsl,
        "max_deviation": max_abs_diff(series.values(), analytics.series.values()),
        "max_drift": traj.diagnostics().max_drift,
    });
    Ok(RunOutput {
        tables: vec![
            Table::new("series.csv", grid.points())
                .num("p_minus", series.values().to_vec())
                .num("p_minus_exact", analytics.series.values().to_vec()),
            Table::new("tf.csv", grid.midpoints())
                .num("pi_tf", dist.density().to_vec())
                .num("pi_exact", analytics.distribution.density().to_vec()),
        ],
        results,
        bounds: serde_json::to_value(&bounds)?,
        diagnostics: bounds.diagnostics.clone(),
    })
}

fn run_hadamard(p: &HadamardParams) -> Result<RunOutput> {
    let hm = hadamard_model(p.omega0, p.gamma)?;
    let grid = TimeGrid::new(0.0, p.t_end, p.points)?;
    let traj = propagate_lindblad(&hm.model, &DensityMatrix::from_pure(&hm.initial), &grid)?;
    let series = population_series(&traj, &hm.target)?;
    let dist = tf_from_population(&series)?;
    let gamma_op: Operator = hm.gamma_operator;
    let current = tf_from_current_midpoints(&traj, |_| gamma_op)?;
    let closed_system = p.gamma == 0.0;
    let spread = if closed_system {
        Some(energy_spread(&hm.model.hamiltonian().at(0.0), &hm.target)?)
    } else {
        None
    };
    let computed_trace = trace_term(&hm.model, &hm.target, 0.0)?;
    let bounds = BoundsReport::evaluate(
        &BoundsInputs {
            delta_theta: series.net_transfer(),
            trace_term: computed_trace,
            energy_spread: spread,
            tau_mt: None,
        },
        &dist,
    )?;
    let mut diagnostics = bounds.diagnostics.clone();
    if !closed_system {
        diagnostics.push("open system: uncertainty check uses the effective spread sqrt(trace)/2".into());
    }
    let mut table = Table::new("series.csv", grid.points()).num("p_plus", series.values().to_vec());
    if closed_system {
        let closed: Vec<f64> = grid.points().iter().map(|&t| hadamard_closed_population(p.omega0, t)).collect();
        table = table.num("p_plus_closed", closed);
    }
    let results = json!({
        "tf": dist_json(&dist),
        "trace_term": computed_trace,
        "trace_formula": hm.trace_value,
        "net_transfer": series.net_transfer(),
        "current_route": { "tf": dist_json(&current), "sup_distance_to_finite_difference": sup_distance(&dist, &current)? },
        "max_drift": traj.diagnostics().max_drift,
    });
    Ok(RunOutput {
        tables: vec![
            table,
            Table::new("tf.csv", grid.midpoints())
                .num("pi_tf", dist.density().to_vec())
                .num("pi_current", current.density().to_vec()),
        ],
        results,
        bounds: serde_json::to_value(&bounds)?,
        diagnostics,
    })
}

fn run_optimize(p: &OptimizeParams, seed: u64) -> Result<RunOutput> {
    p.config.validate()?;
    let r = if p.starts <= 1 {
        optimize_polynomial(&p.config)?
    } else {
        optimize_multistart(&p.config, p.starts, seed)?
    };
    let mut diagnostics = Vec::new();
    if !r.monotonicity_constrained {
        diagnostics.push("monotonicity unconstrained (lambda_mono = 0)".into());
    }
    if !r.converged {
        diagnostics.push(format!("simplex did not converge within {} iterations", r.iterations));
    }
    let grid = *r.series.grid();
    let waveform = p.config.waveform(&r.coefficients);
    let omega: Vec<f64> = grid.points().iter().map(|&t| waveform.omega(t)).collect();
    let results = json!({
        "coefficients": r.coefficients,
        "cost": r.cost,
        "final_population": r.final_population,
        "n_false": r.n_false,
        "iterations": r.iterations,
        "converged": r.converged,
        "monotonicity_constrained": r.monotonicity_constrained,
        "monotone_on_refined_grid": verify_monotone(&r.coefficients, &p.config, 4),
        "feasible": r.final_population >= 0.999 && r.n_false == 0,
        "tf": dist_json(&r.distribution),
    });
    Ok(RunOutput {
        tables: vec![
            Table::new("series.csv", grid.points())
                .num("omega", omega)
                .num("p1", r.series.values().to_vec()),
            Table::new("tf.csv", r.distribution.times().to_vec()).num("pi_tf", r.distribution.density().to_vec()),
        ],
        results,
        bounds: Value::Null,
        diagnostics,
    })
}
