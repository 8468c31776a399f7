//! Simulated projective-measurement protocol.
//!
//! At every grid time `t_j` a fresh batch of `N` identically prepared systems
//! is measured once each. Successes are binomially distributed with the exact
//! population `p(t_j)`; the empirical frequencies are then pushed through the
//! same finite-difference estimator used for exact populations.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{population_series, TimeGrid, Trajectory};
use crate::error::{Error, Result};
use crate::operators::Operator;
use crate::tf::{l1_distance, sup_distance, tf_from_population, PopulationSeries, TfDistribution};

/// Inputs of one protocol run.
#[derive(Clone, Debug, PartialEq)]
pub struct ProtocolConfig {
    pub n_trials: u64,
    pub grid: TimeGrid,
    pub seed: u64,
    pub target: Operator,
}

impl ProtocolConfig {
    pub fn new(n_trials: u64, grid: TimeGrid, seed: u64, target: Operator) -> Result<Self> {
        let cfg = Self {
            n_trials,
            grid,
            seed,
            target,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_trials == 0 {
            return Err(Error::invalid("n_trials must be at least 1"));
        }
        if self.grid.n_points() < 3 {
            return Err(Error::invalid("the protocol grid needs at least 3 points"));
        }
        if !(self.target.is_hermitian(1e-10) && (self.target * self.target).max_abs_diff(&self.target) <= 1e-10)
        {
            return Err(Error::NotProjector("measurement target must be a Hermitian projector".into()));
        }
        Ok(())
    }
}

/// Outcome of a protocol run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EmpiricalTf {
    pub n_trials: u64,
    pub seed: u64,
    /// Success counts `N_k(t_j)`.
    pub successes: Vec<u64>,
    /// `f(t_j) = N_k(t_j) / N`.
    pub frequencies: Vec<f64>,
    /// Populations the counts were drawn from.
    pub exact_populations: Vec<f64>,
    /// Normalized `|Δf|/δt` on interval midpoints.
    pub distribution: TfDistribution,
    grid: TimeGrid,
}

impl EmpiricalTf {
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    /// `max_j |f(t_j) - p(t_j)|`.
    pub fn max_frequency_deviation(&self) -> f64 {
        self.frequencies
            .iter()
            .zip(&self.exact_populations)
            .map(|(f, p)| (f - p).abs())
            .fold(0.0, f64::max)
    }

    /// True when every frequency lies within `k / sqrt(N)` of its population.
    pub fn within_standard_errors(&self, k: f64) -> bool {
        self.max_frequency_deviation() <= k / (self.n_trials as f64).sqrt()
    }
}

/// Per-point substream: ChaCha20 keyed by the seed, stream selected by the
/// time index.
fn substream(seed: u64, j: usize) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(j as u64);
    rng
}

fn draw_counts(populations: &[f64], n_trials: u64, seed: u64) -> Result<Vec<u64>> {
    populations
        .par_iter()
        .enumerate()
        .map(|(j, &p)| {
            let p = p.clamp(0.0, 1.0);
            let dist = Binomial::new(n_trials, p)
                .map_err(|e| Error::invalid(format!("binomial({n_trials}, {p}): {e}")))?;
            Ok(dist.sample(&mut substream(seed, j)))
        })
        .collect()
}

fn degenerate_guidance(e: Error) -> Error {
    match e {
        Error::Degenerate(_) => Error::Degenerate(
            "every frequency increment is zero; increase n_trials or the number of grid points".into(),
        ),
        other => other,
    }
}

/// Runs the protocol on exact populations sampled on a grid.
pub fn simulate_from_series(series: &PopulationSeries, n_trials: u64, seed: u64) -> Result<EmpiricalTf> {
    if n_trials == 0 {
        return Err(Error::invalid("n_trials must be at least 1"));
    }
    let grid = *series.grid();
    if grid.n_points() < 3 {
        return Err(Error::invalid("the protocol grid needs at least 3 points"));
    }
    let exact = series.values().to_vec();
    let successes = draw_counts(&exact, n_trials, seed)?;
    let frequencies: Vec<f64> = successes.iter().map(|&k| k as f64 / n_trials as f64).collect();
    let distribution =
        tf_from_population(&PopulationSeries::new(grid, frequencies.clone())?).map_err(degenerate_guidance)?;
    Ok(EmpiricalTf {
        n_trials,
        seed,
        successes,
        frequencies,
        exact_populations: exact,
        distribution,
        grid,
    })
}

/// Runs the protocol on a propagated trajectory.
pub fn simulate_protocol(traj: &Trajectory, config: &ProtocolConfig) -> Result<EmpiricalTf> {
    config.validate()?;
    if *traj.grid() != config.grid {
        return Err(Error::GridMismatch("trajectory grid differs from the protocol grid".into()));
    }
    let series = population_series(traj, &config.target)?;
    simulate_from_series(&series, config.n_trials, config.seed)
}

/// The infinite-trial limit: frequencies replaced by the exact populations.
pub fn exact_limit(series: &PopulationSeries) -> Result<TfDistribution> {
    tf_from_population(series).map_err(degenerate_guidance)
}

/// Comparison of an empirical distribution with an exact one.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub sup_distance: f64,
    pub l1_distance: f64,
    /// Binomial noise level `2/(δt √N) √(p(1-p))` per interval, unnormalized.
    pub noise: Vec<f64>,
    /// Exact `|Δp|/δt` divided by the noise level, per interval.
    pub snr: Vec<f64>,
    /// Number of intervals whose signal sits below the noise level.
    pub noise_dominated_bins: usize,
    pub tolerance: f64,
    pub passed: bool,
}

/// Distances between `empirical` and `exact` and per-bin noise diagnostics.
pub fn convergence_report(empirical: &EmpiricalTf, exact: &TfDistribution, tolerance: f64) -> Result<ConvergenceReport> {
    let sup = sup_distance(&empirical.distribution, exact)?;
    let l1 = l1_distance(&empirical.distribution, exact)?;
    let dt = empirical.grid.dt();
    let root_n = (empirical.n_trials as f64).sqrt();
    let p = &empirical.exact_populations;
    let (noise, snr): (Vec<f64>, Vec<f64>) = p
        .windows(2)
        .map(|w| {
            let pm = (0.5 * (w[0] + w[1])).clamp(0.0, 1.0);
            let noise = 2.0 / (dt * root_n) * (pm * (1.0 - pm)).sqrt();
            let signal = (w[1] - w[0]).abs() / dt;
            let snr = if noise > 0.0 { signal / noise } else { f64::INFINITY };
            (noise, snr)
        })
        .unzip();
    let noise_dominated_bins = snr.iter().filter(|s| **s < 1.0).count();
    Ok(ConvergenceReport {
        sup_distance: sup,
        l1_distance: l1,
        noise,
        snr,
        noise_dominated_bins,
        tolerance,
        passed: l1 <= tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tf::tf_from_rate;
    use std::f64::consts::PI;

    fn drive_series(n: usize) -> PopulationSeries {
        PopulationSeries::from_fn(TimeGrid::new(0.0, PI, n).unwrap(), |t| (0.5 * t).sin().powi(2)).unwrap()
    }

    fn median(mut v: Vec<f64>) -> f64 {
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = v.len();
        if n % 2 == 1 {
            v[n / 2]
        } else {
            0.5 * (v[n / 2 - 1] + v[n / 2])
        }
    }

    fn drive_l1(n_trials: u64, m: usize, seed: u64) -> f64 {
        let s = drive_series(m);
        let exact = tf_from_rate(s.grid(), |t| 0.5 * t.sin()).unwrap();
        let emp = simulate_from_series(&s, n_trials, seed).unwrap();
        convergence_report(&emp, &exact, 1.0).unwrap().l1_distance
    }

    #[test]
    fn frequencies_within_standard_error() {
        let s = drive_series(50);
        let emp = simulate_from_series(&s, 100_000, 7).unwrap();
        assert!(emp.within_standard_errors(5.0), "{}", emp.max_frequency_deviation());
        assert!(emp.frequencies.iter().all(|f| (0.0..=1.0).contains(f)));
        assert!((emp.distribution.mass() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn surrogate_matches_exact_estimator() {
        let s = drive_series(64);
        assert_eq!(exact_limit(&s).unwrap(), tf_from_population(&s).unwrap());
    }

    #[test]
    fn flat_population_is_degenerate() {
        let s = PopulationSeries::from_fn(TimeGrid::new(0.0, 1.0, 20).unwrap(), |_| 0.0).unwrap();
        let err = simulate_from_series(&s, 1000, 1).unwrap_err();
        assert!(matches!(&err, Error::Degenerate(m) if m.contains("increase n_trials")));
        assert!(simulate_from_series(&drive_series(10), 0, 1).is_err());
    }

    #[test]
    fn identical_seeds_identical_output_across_thread_counts() {
        let s = drive_series(100);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| simulate_from_series(&s, 100_000, 42).unwrap())
        };
        let a = run(1);
        let b = run(8);
        assert_eq!(a.successes, b.successes);
        let bits = |e: &EmpiricalTf| e.distribution.density().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
        assert_ne!(a.successes, simulate_from_series(&s, 100_000, 43).unwrap().successes);
    }

    #[test]
    fn frequencies_are_unbiased() {
        let s = drive_series(41);
        let n = 1000u64;
        let runs: Vec<EmpiricalTf> = (0..100).map(|seed| simulate_from_series(&s, n, seed).unwrap()).collect();
        for j in [4, 12, 20, 28, 36] {
            let p = s.values()[j];
            let mean = runs.iter().map(|r| r.frequencies[j]).sum::<f64>() / 100.0;
            let se = (p * (1.0 - p) / n as f64).sqrt();
            assert!((mean - p).abs() <= 3.0 * se / 10.0 + 1e-15, "j={j} mean={mean} p={p}");
        }
    }

    #[test]
    fn exact_vs_exact_has_zero_distance() {
        let s = drive_series(30);
        let exact = tf_from_population(&s).unwrap();
        let emp = EmpiricalTf {
            n_trials: 1,
            seed: 0,
            successes: vec![0; 30],
            frequencies: s.values().to_vec(),
            exact_populations: s.values().to_vec(),
            distribution: exact.clone(),
            grid: *s.grid(),
        };
        let r = convergence_report(&emp, &exact, 0.0).unwrap();
        assert_eq!(r.sup_distance, 0.0);
        assert_eq!(r.l1_distance, 0.0);
        assert!(r.passed);
    }

    #[test]
    fn grid_mismatch_is_rejected() {
        let emp = simulate_from_series(&drive_series(30), 1000, 0).unwrap();
        let other = tf_from_population(&drive_series(31)).unwrap();
        assert!(matches!(convergence_report(&emp, &other, 1.0), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn more_trials_shrink_l1() {
        let coarse = median((0..20).map(|s| drive_l1(1_000, 25, s)).collect());
        let fine = median((0..20).map(|s| drive_l1(100_000, 25, s)).collect());
        assert!(coarse >= 5.0 * fine, "coarse {coarse} fine {fine}");
    }

    #[test]
    fn l1_non_increasing_along_joint_refinement() {
        let path = [(1_000u64, 25usize), (10_000, 50), (100_000, 100), (1_000_000, 200), (10_000_000, 400)];
        let medians: Vec<f64> = path
            .iter()
            .map(|&(n, m)| median((0..20).map(|s| drive_l1(n, m, 100 + s)).collect()))
            .collect();
        for w in medians.windows(2) {
            assert!(w[1] <= w[0], "{medians:?}");
        }
    }

    #[test]
    fn dephasing_calibrated_threshold() {
        let g = TimeGrid::new(0.0, 5.0, 100).unwrap();
        let s = PopulationSeries::from_fn(g, |t| 0.5 * (1.0 - (-2.0 * t).exp())).unwrap();
        let exact = tf_from_rate(&g, |t| 2.0 * (-2.0 * t).exp()).unwrap();
        let l1: Vec<f64> = (0..20)
            .map(|seed| {
                let emp = simulate_from_series(&s, 1_000_000, seed).unwrap();
                convergence_report(&emp, &exact, 0.2).unwrap().l1_distance
            })
            .collect();
        assert!(median(l1.clone()) <= 0.2, "{l1:?}");
    }

    #[test]
    fn noise_diagnostics_flag_flat_regions() {
        let g = TimeGrid::new(0.0, 5.0, 100).unwrap();
        let s = PopulationSeries::from_fn(g, |t| 0.5 * (1.0 - (-2.0 * t).exp())).unwrap();
        let exact = tf_from_rate(&g, |t| 2.0 * (-2.0 * t).exp()).unwrap();
        let emp = simulate_from_series(&s, 10_000, 3).unwrap();
        let r = convergence_report(&emp, &exact, 0.05).unwrap();
        assert_eq!(r.noise.len(), 99);
        assert!(r.snr[0] > r.snr[98]);
        assert!(r.noise_dominated_bins > 0);
    }
}
