//! Polynomial pulse shaping for monotone two-level transfer.
//!
//! The control is `omega(t) = omega0 + sum_{p=1}^{4} a_p t^p` acting on `|0>`.
//! The cost is
//! `J = (p_1(T) - 1)^2 + lambda_mono N_false + lambda_reg sum_p a_p^2`,
//! where `N_false` counts grid intervals on which `p_1` fails to increase.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::TimeGrid;
use crate::error::{Error, Result};
use crate::models::{sta_moments, two_level_population, two_level_tf_closed, ControlWaveform, StaConfig, TwoLevelInitial};
use crate::nelder_mead::minimize;
use crate::tf::{PopulationSeries, TfDistribution};

pub const N_COEFFS: usize = 4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerSettings {
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
    /// Initial simplex steps per coefficient; defaults to `0.1 omega0 / T^p`.
    #[serde(default)]
    pub simplex_scale: Option<[f64; N_COEFFS]>,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

fn default_max_iterations() -> usize {
    2000
}

fn default_tolerance() -> f64 {
    1e-9
}

fn default_grid_points() -> usize {
    200
}

fn default_lambda_mono() -> f64 {
    1.0
}

fn default_lambda_reg() -> f64 {
    1e-6
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        Self {
            max_iterations: default_max_iterations(),
            simplex_scale: None,
            tolerance: default_tolerance(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizeConfig {
    /// Horizon `T`.
    pub t_final: f64,
    pub omega0: f64,
    #[serde(default = "default_lambda_mono")]
    pub lambda_mono: f64,
    #[serde(default = "default_lambda_reg")]
    pub lambda_reg: f64,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    #[serde(default)]
    pub initial_coefficients: [f64; N_COEFFS],
    #[serde(default)]
    pub optimizer: OptimizerSettings,
}

impl OptimizeConfig {
    pub fn new(t_final: f64, omega0: f64) -> Result<Self> {
        let cfg = Self {
            t_final,
            omega0,
            lambda_mono: default_lambda_mono(),
            lambda_reg: default_lambda_reg(),
            grid_points: default_grid_points(),
            initial_coefficients: [0.0; N_COEFFS],
            optimizer: OptimizerSettings::default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return Err(Error::invalid("T must be > 0"));
        }
        if !self.omega0.is_finite() {
            return Err(Error::invalid("omega0 must be finite"));
        }
        if !(self.lambda_mono >= 0.0 && self.lambda_reg >= 0.0) {
            return Err(Error::invalid("penalty weights must be >= 0"));
        }
        if self.grid_points < 10 {
            return Err(Error::invalid("grid_points must be at least 10"));
        }
        if self.initial_coefficients.iter().any(|a| !a.is_finite()) {
            return Err(Error::invalid("initial coefficients must be finite"));
        }
        if !(self.optimizer.tolerance > 0.0) {
            return Err(Error::invalid("optimizer tolerance must be > 0"));
        }
        if let Some(s) = self.optimizer.simplex_scale {
            if s.iter().any(|v| !(v.is_finite() && *v != 0.0)) {
                return Err(Error::invalid("simplex steps must be finite and nonzero"));
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> TimeGrid {
        TimeGrid::new(0.0, self.t_final, self.grid_points).expect("validated")
    }

    /// `0.1 omega0 / T^p` unless overridden.
    pub fn simplex_steps(&self) -> [f64; N_COEFFS] {
        self.optimizer.simplex_scale.unwrap_or_else(|| {
            let base = if self.omega0 != 0.0 { 0.1 * self.omega0 } else { 0.1 / self.t_final };
            std::array::from_fn(|i| base / self.t_final.powi(i as i32 + 1))
        })
    }

    pub fn waveform(&self, coefficients: &[f64; N_COEFFS]) -> ControlWaveform {
        ControlWaveform::polynomial(self.omega0, coefficients).expect("finite coefficients")
    }
}

/// Terms of the cost for one coefficient vector.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CostBreakdown {
    pub cost: f64,
    pub final_population: f64,
    pub n_false: usize,
    pub regularization: f64,
}

fn populations(waveform: &ControlWaveform, grid: &TimeGrid) -> Vec<f64> {
    let init = TwoLevelInitial::default();
    grid.points()
        .into_iter()
        .map(|t| two_level_population(waveform, &init, t))
        .collect()
}

fn count_false(p: &[f64]) -> usize {
    p.windows(2).filter(|w| w[1] - w[0] <= 0.0).count()
}

pub fn cost_breakdown(coefficients: &[f64; N_COEFFS], config: &OptimizeConfig) -> CostBreakdown {
    let p = populations(&config.waveform(coefficients), &config.grid());
    let final_population = p[p.len() - 1];
    let n_false = count_false(&p);
    let regularization = coefficients.iter().map(|a| a * a).sum::<f64>();
    CostBreakdown {
        cost: (final_population - 1.0).powi(2)
            + config.lambda_mono * n_false as f64
            + config.lambda_reg * regularization,
        final_population,
        n_false,
        regularization,
    }
}

/// `J(a)`.
pub fn cost(coefficients: &[f64; N_COEFFS], config: &OptimizeConfig) -> f64 {
    cost_breakdown(coefficients, config).cost
}

#[derive(Clone, Debug, Serialize)]
pub struct OptimizationResult {
    pub coefficients: [f64; N_COEFFS],
    pub cost: f64,
    pub final_population: f64,
    pub n_false: usize,
    pub iterations: usize,
    pub converged: bool,
    /// False when `lambda_mono = 0`.
    pub monotonicity_constrained: bool,
    pub series: PopulationSeries,
    pub distribution: TfDistribution,
}

fn finish(config: &OptimizeConfig, x: &[f64], iterations: usize, converged: bool) -> Result<OptimizationResult> {
    let coefficients: [f64; N_COEFFS] = x.try_into().expect("four coefficients");
    let b = cost_breakdown(&coefficients, config);
    let grid = config.grid();
    let waveform = config.waveform(&coefficients);
    let series = PopulationSeries::new(grid, populations(&waveform, &grid))?;
    let distribution = two_level_tf_closed(&waveform, &TwoLevelInitial::default(), &grid)?;
    Ok(OptimizationResult {
        coefficients,
        cost: b.cost,
        final_population: b.final_population,
        n_false: b.n_false,
        iterations,
        converged,
        monotonicity_constrained: config.lambda_mono > 0.0,
        series,
        distribution,
    })
}

fn run_from(config: &OptimizeConfig, start: &[f64; N_COEFFS]) -> Result<OptimizationResult> {
    let f = |x: &[f64]| cost(&x.try_into().expect("four coefficients"), config);
    let m = minimize(
        f,
        start,
        &config.simplex_steps(),
        config.optimizer.max_iterations,
        config.optimizer.tolerance,
    );
    finish(config, &m.x, m.iterations, m.converged)
}

/// Nelder–Mead from `config.initial_coefficients`.
pub fn optimize_polynomial(config: &OptimizeConfig) -> Result<OptimizationResult> {
    config.validate()?;
    run_from(config, &config.initial_coefficients)
}

/// Independent runs from jittered starts; start `k` uses seed `seed + k`. Returns the
/// lowest-cost result, ties resolved by start index.
pub fn optimize_multistart(config: &OptimizeConfig, starts: usize, seed: u64) -> Result<OptimizationResult> {
    config.validate()?;
    if starts == 0 {
        return Err(Error::invalid("at least one start is required"));
    }
    let steps = config.simplex_steps();
    let results: Vec<OptimizationResult> = (0..starts)
        .into_par_iter()
        .map(|k| {
            let mut start = config.initial_coefficients;
            if k > 0 {
                let mut rng = ChaCha20Rng::seed_from_u64(seed.wrapping_add(k as u64));
                for (a, s) in start.iter_mut().zip(&steps) {
                    *a += s * rng.random_range(-5.0..5.0);
                }
            }
            run_from(config, &start)
        })
        .collect::<Result<_>>()?;
    Ok(results
        .into_iter()
        .reduce(|best, r| if r.cost < best.cost { r } else { best })
        .expect("nonempty"))
}

/// True when `p_1` strictly increases on a grid `factor` times denser than the cost grid.
pub fn verify_monotone(coefficients: &[f64; N_COEFFS], config: &OptimizeConfig, factor: usize) -> bool {
    let n = (config.grid_points - 1) * factor.max(1) + 1;
    let grid = TimeGrid::new(0.0, config.t_final, n).expect("valid grid");
    count_false(&populations(&config.waveform(coefficients), &grid)) == 0
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AlphaRow {
    pub alpha: f64,
    pub mean: f64,
    pub std: f64,
}

/// Exact TOA mean and spread of the STA schedule for each `alpha`, sorted by `alpha`.
pub fn sta_alpha_report(alphas: &[f64], t_final: f64) -> Result<Vec<AlphaRow>> {
    let mut rows = alphas
        .iter()
        .map(|&alpha| {
            if !(alpha > 0.0) {
                return Err(Error::invalid(format!("alpha must be > 0, got {alpha}")));
            }
            let m = sta_moments(&StaConfig::new(alpha, t_final, 0.0)?, 2)?;
            Ok(AlphaRow {
                alpha,
                mean: m.mean,
                std: m.std,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| a.alpha.total_cmp(&b.alpha));
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn resonant_pi_pulse_costs_nothing() {
        let cfg = OptimizeConfig::new(1.0, PI).unwrap();
        let b = cost_breakdown(&[0.0; 4], &cfg);
        assert!(b.cost <= 1e-12);
        assert_eq!(b.n_false, 0);
    }

    #[test]
    fn two_pi_pulse_is_penalized() {
        let cfg = OptimizeConfig::new(1.0, 2.0 * PI).unwrap();
        let b = cost_breakdown(&[0.0; 4], &cfg);
        assert!(b.final_population < 1e-20);
        // sin^2(pi t) decreases on the second half of the window.
        assert!((b.n_false as i64 - 100).abs() <= 1, "{}", b.n_false);
        assert!(b.cost >= 1.0 + cfg.lambda_mono * b.n_false as f64 - 1e-12);
    }

    #[test]
    fn regularization_is_additive() {
        let mut cfg = OptimizeConfig::new(1.0, PI).unwrap();
        let a = [0.01, -0.02, 0.0, 0.005];
        cfg.lambda_reg = 0.0;
        let base = cost(&a, &cfg);
        cfg.lambda_reg = 10.0;
        let sum: f64 = a.iter().map(|v| v * v).sum();
        assert!((cost(&a, &cfg) - base - 10.0 * sum).abs() < 1e-15);
    }

    #[test]
    fn witness_cost() {
        let t = 2.0;
        let cfg = OptimizeConfig::new(t, 0.8 * PI / t).unwrap();
        let a1 = 0.4 * PI / (t * t);
        let b = cost_breakdown(&[a1, 0.0, 0.0, 0.0], &cfg);
        assert!(b.cost <= 1e-12 + cfg.lambda_reg * a1 * a1);
        assert_eq!(b.n_false, 0);
    }

    #[test]
    fn feasible_config_reaches_target() {
        let cfg = OptimizeConfig::new(1.0, 0.8 * PI).unwrap();
        let r = optimize_polynomial(&cfg).unwrap();
        assert!(r.final_population >= 0.999, "{r:?}");
        assert_eq!(r.n_false, 0);
        assert!(r.iterations <= 2000);
        assert!(verify_monotone(&r.coefficients, &cfg, 4));
        assert_eq!(cost_breakdown(&r.coefficients, &cfg).n_false, r.n_false);
    }

    #[test]
    fn optimum_at_start_stays() {
        let cfg = OptimizeConfig::new(1.0, PI).unwrap();
        let r = optimize_polynomial(&cfg).unwrap();
        assert!(r.cost <= 1e-12);
        assert!(r.coefficients.iter().all(|a| a.abs() < 1e-6));
    }

    #[test]
    fn cost_is_deterministic() {
        let cfg = OptimizeConfig::new(1.3, 2.0).unwrap();
        let a = [0.3, -0.1, 0.02, 0.001];
        assert_eq!(cost(&a, &cfg).to_bits(), cost(&a, &cfg).to_bits());
    }

    #[test]
    fn stronger_regularization_never_grows_coefficients() {
        let mut sums = Vec::new();
        for lambda in [0.0, 1e-4, 1e-2] {
            let mut cfg = OptimizeConfig::new(1.0, 0.8 * PI).unwrap();
            cfg.lambda_reg = lambda;
            let r = optimize_polynomial(&cfg).unwrap();
            sums.push(r.coefficients.iter().map(|a| a * a).sum::<f64>());
        }
        assert!(sums.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9)), "{sums:?}");
    }

    #[test]
    fn without_monotonicity_penalty() {
        let mut cfg = OptimizeConfig::new(1.0, 2.5 * PI).unwrap();
        cfg.lambda_mono = 0.0;
        let r = optimize_polynomial(&cfg).unwrap();
        assert!(!r.monotonicity_constrained);
        assert!((r.final_population - 1.0).powi(2) < 1e-6);
    }

    #[test]
    fn multistart_is_reproducible() {
        let cfg = OptimizeConfig::new(1.0, 0.8 * PI).unwrap();
        let a = optimize_multistart(&cfg, 4, 9).unwrap();
        let b = optimize_multistart(&cfg, 4, 9).unwrap();
        assert_eq!(a.coefficients, b.coefficients);
        assert!(a.cost <= optimize_polynomial(&cfg).unwrap().cost);
    }

    #[test]
    fn alpha_report() {
        let rows = sta_alpha_report(&[10.0, 1.0, 0.7], 1.0).unwrap();
        assert_eq!(rows[0].alpha, 0.7);
        let one = rows[1];
        assert!((one.mean - (1.0 - 2.0 / PI)).abs() < 1e-9);
        assert!((one.std - 0.240).abs() < 5e-4);
        assert!(rows[2].mean > rows[0].mean);
        assert!(sta_alpha_report(&[0.0], 1.0).is_err());
    }

    #[test]
    fn config_defaults_from_json() {
        let cfg: OptimizeConfig = serde_json::from_str(r#"{"t_final": 1.0, "omega0": 2.0}"#).unwrap();
        assert_eq!(cfg.grid_points, 200);
        assert_eq!(cfg.optimizer.max_iterations, 2000);
        let steps = cfg.simplex_steps();
        assert!((steps[0] - 0.2).abs() < 1e-15);
        assert!(serde_json::from_str::<OptimizeConfig>(r#"{"t_final": 1.0}"#).is_err());
    }
}
