//! Time-of-flow distributions.
//!
//! A TF distribution is the normalized magnitude of the rate of change of a
//! target-state population. On a grid it is built from forward differences
//! assigned to interval midpoints; with a current-like operator it is sampled
//! from `|<Gamma(t_j)>|` on the grid points themselves. Either way the stored
//! density satisfies `sum_j density_j * dt = 1`.

use serde::{Deserialize, Serialize};

use crate::dynamics::{TimeGrid, Trajectory};
use crate::error::{Error, Result};
use crate::operators::Operator;

/// Total variation at or below which a population series counts as flat.
pub const FLAT_TOL: f64 = 1e-12;

/// `p(t_j)` sampled on a grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PopulationSeries {
    grid: TimeGrid,
    values: Vec<f64>,
}

impl PopulationSeries {
    pub fn new(grid: TimeGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_points() {
            return Err(Error::GridMismatch(format!(
                "{} values for {} grid points",
                values.len(),
                grid.n_points()
            )));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite population {bad}")));
        }
        Ok(Self { grid, values })
    }

    /// Samples `p(t)` on every grid point.
    pub fn from_fn(grid: TimeGrid, p: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(grid, grid.points().into_iter().map(p).collect())
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `p(t_{j+1}) - p(t_j)`.
    pub fn increments(&self) -> Vec<f64> {
        self.values.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// `sum_j |p(t_{j+1}) - p(t_j)|`.
    pub fn total_variation(&self) -> f64 {
        self.increments().iter().map(|d| d.abs()).sum()
    }

    /// Signed net transfer `p(t_end) - p(t_start)`.
    pub fn net_transfer(&self) -> f64 {
        self.values[self.values.len() - 1] - self.values[0]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum TfKind {
    Tf,
    Toa,
    Tod,
}

impl TfKind {
    pub fn label(self) -> &'static str {
        match self {
            TfKind::Tf => "TF",
            TfKind::Toa => "TOA",
            TfKind::Tod => "TOD",
        }
    }
}

/// Normalized density on a set of equally weighted support times.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TfDistribution {
    times: Vec<f64>,
    density: Vec<f64>,
    dt: f64,
    normalization: f64,
    kind: TfKind,
}

impl TfDistribution {
    /// Normalizes nonnegative rates so that `sum rate_j * dt = 1`.
    pub fn from_rates(times: Vec<f64>, rates: Vec<f64>, dt: f64, kind: TfKind) -> Result<Self> {
        if times.len() != rates.len() {
            return Err(Error::GridMismatch(format!(
                "{} times for {} rates",
                times.len(),
                rates.len()
            )));
        }
        if times.is_empty() {
            return Err(Error::Degenerate("empty support".into()));
        }
        if let Some(bad) = rates.iter().find(|r| !(r.is_finite() && **r >= 0.0)) {
            return Err(Error::invalid(format!("rate {bad} is not finite and nonnegative")));
        }
        let mass: f64 = rates.iter().sum::<f64>() * dt;
        if mass <= FLAT_TOL {
            return Err(Error::Degenerate(format!(
                "total flow {mass:.3e} is too small to normalize"
            )));
        }
        let normalization = 1.0 / mass;
        let density = rates.iter().map(|r| r * normalization).collect();
        Ok(Self {
            times,
            density,
            dt,
            normalization,
            kind,
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// The constant `N` the raw rates were multiplied by.
    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    pub fn kind(&self) -> TfKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// `sum density * dt`; 1 up to rounding.
    pub fn mass(&self) -> f64 {
        self.density.iter().sum::<f64>() * self.dt
    }

    /// Largest density value.
    pub fn peak(&self) -> f64 {
        self.density.iter().copied().fold(0.0, f64::max)
    }

    pub fn moments(&self, max_order: usize) -> Moments {
        moments(self, max_order)
    }

    /// Linear interpolation of the density; zero outside the support.
    pub fn value_at(&self, t: f64) -> f64 {
        let n = self.times.len();
        if n == 1 || t < self.times[0] || t > self.times[n - 1] {
            return if n == 1 && t == self.times[0] { self.density[0] } else { 0.0 };
        }
        let idx = self.times.partition_point(|&x| x <= t).clamp(1, n - 1);
        let (t0, t1) = (self.times[idx - 1], self.times[idx]);
        let w = if t1 > t0 { (t - t0) / (t1 - t0) } else { 0.0 };
        self.density[idx - 1] * (1.0 - w) + self.density[idx] * w
    }
}

/// Mean, standard deviation and raw moments `mu^(p) = sum t^p pi dt`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Moments {
    pub mean: f64,
    pub std: f64,
    /// `raw[p]` is `mu^(p)`; `raw[0]` is the total mass.
    pub raw: Vec<f64>,
}

impl Moments {
    /// Builds moments from weighted points, computing the variance about the mean.
    pub fn from_weighted(points: impl Iterator<Item = (f64, f64)> + Clone, max_order: usize) -> Self {
        let order = max_order.max(2);
        let raw: Vec<f64> = (0..=order)
            .map(|p| points.clone().map(|(t, w)| w * t.powi(p as i32)).sum())
            .collect();
        let mean = raw[1] / raw[0];
        let var = points.map(|(t, w)| w * (t - mean).powi(2)).sum::<f64>() / raw[0];
        Self {
            mean,
            std: var.max(0.0).sqrt(),
            raw,
        }
    }
}

/// Moments of a normalized distribution up to `max_order` (at least 2).
pub fn moments(dist: &TfDistribution, max_order: usize) -> Moments {
    let dt = dist.dt;
    Moments::from_weighted(
        dist.times.iter().zip(&dist.density).map(move |(&t, &d)| (t, d * dt)),
        max_order,
    )
}

/// Forward-difference TF distribution on interval midpoints.
pub fn tf_from_population(series: &PopulationSeries) -> Result<TfDistribution> {
    if series.values.len() < 3 {
        return Err(Error::invalid("a population series needs at least 3 points"));
    }
    let tv = series.total_variation();
    if tv <= FLAT_TOL {
        return Err(Error::Degenerate(format!(
            "population is flat (total variation {tv:.3e})"
        )));
    }
    let dt = series.grid.dt();
    let rates = series.increments().iter().map(|d| d.abs() / dt).collect();
    TfDistribution::from_rates(series.grid.midpoints(), rates, dt, TfKind::Tf)
}

/// Samples a closed-form rate `dp/dt` on interval midpoints and normalizes `|rate|`.
pub fn tf_from_rate(grid: &TimeGrid, rate: impl Fn(f64) -> f64) -> Result<TfDistribution> {
    let mids = grid.midpoints();
    let rates = mids.iter().map(|&t| rate(t).abs()).collect();
    TfDistribution::from_rates(mids, rates, grid.dt(), TfKind::Tf)
}

/// TF distribution from `|<Gamma(t_j)>|` on the trajectory's grid points.
pub fn tf_from_current<F>(traj: &Trajectory, gamma_at: F) -> Result<TfDistribution>
where
    F: Fn(f64) -> Operator,
{
    let values = traj.expectation_series(gamma_at)?;
    let rates = values.iter().map(|z| z.norm()).collect();
    TfDistribution::from_rates(traj.grid().points(), rates, traj.grid().dt(), TfKind::Tf)
        .map_err(|e| match e {
            Error::Degenerate(_) => {
                Error::Degenerate("current-like operator has zero expectation everywhere".into())
            }
            other => other,
        })
}

/// Current-route TF on interval midpoints: the signed `<Gamma>` is averaged over
/// the two bracketing grid points before taking the modulus, so sign changes
/// inside an interval do not produce kinks.
pub fn tf_from_current_midpoints<F>(traj: &Trajectory, gamma_at: F) -> Result<TfDistribution>
where
    F: Fn(f64) -> Operator,
{
    let values = traj.expectation_series(gamma_at)?;
    let rates = values.windows(2).map(|w| (0.5 * (w[0].re + w[1].re)).abs()).collect();
    TfDistribution::from_rates(traj.grid().midpoints(), rates, traj.grid().dt(), TfKind::Tf)
}

/// [`tf_from_current`] for a time-independent operator.
pub fn tf_from_current_op(traj: &Trajectory, gamma: &Operator) -> Result<TfDistribution> {
    let g = *gamma;
    tf_from_current(traj, move |_| g)
}

/// A maximal run of grid intervals with one flow direction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Segment {
    pub kind: TfKind,
    /// Index of the first interval `[t_j, t_{j+1}]` in the run.
    pub first_interval: usize,
    /// Index of the last interval in the run (inclusive).
    pub last_interval: usize,
    pub t_start: f64,
    pub t_end: f64,
}

/// Result of splitting a series into arrival and departure regions.
#[derive(Clone, Debug, Serialize)]
pub struct FlowSplit {
    pub segments: Vec<Segment>,
    /// Times where the flow direction changes between consecutive segments.
    pub boundaries: Vec<f64>,
    pub toa: Option<TfDistribution>,
    pub tod: Option<TfDistribution>,
    /// Per-interval classification; `None` marks a neutral interval.
    pub interval_kinds: Vec<Option<TfKind>>,
}

impl FlowSplit {
    /// `1/N_A = sum of positive increments`, zero when no TOA region exists.
    pub fn arrival_weight(&self) -> f64 {
        self.toa.as_ref().map_or(0.0, |d| 1.0 / d.normalization())
    }

    /// `1/N_D = sum of |negative increments|`, zero when no TOD region exists.
    pub fn departure_weight(&self) -> f64 {
        self.tod.as_ref().map_or(0.0, |d| 1.0 / d.normalization())
    }
}

/// Default dead-band on the slope: `1e-9 / dt`, i.e. `|dp| <= 1e-9` is neutral.
pub fn default_slope_tolerance(grid: &TimeGrid) -> f64 {
    1e-9 / grid.dt()
}

/// Splits the series into TOA (`dp > tol dt`) and TOD (`dp < -tol dt`) runs.
/// Neutral intervals belong to neither support.
pub fn split_toa_tod(series: &PopulationSeries, slope_tolerance: Option<f64>) -> Result<FlowSplit> {
    if series.values.len() < 3 {
        return Err(Error::invalid("a population series needs at least 3 points"));
    }
    let grid = series.grid;
    let dt = grid.dt();
    let tol = slope_tolerance.unwrap_or_else(|| default_slope_tolerance(&grid));
    if !(tol >= 0.0 && tol.is_finite()) {
        return Err(Error::invalid("slope tolerance must be finite and >= 0"));
    }
    let threshold = tol * dt;
    let inc = series.increments();
    let kinds: Vec<Option<TfKind>> = inc
        .iter()
        .map(|&d| {
            if d > threshold {
                Some(TfKind::Toa)
            } else if d < -threshold {
                Some(TfKind::Tod)
            } else {
                None
            }
        })
        .collect();

    let mut segments: Vec<Segment> = Vec::new();
    for (j, kind) in kinds.iter().enumerate() {
        let Some(kind) = *kind else { continue };
        match segments.last_mut() {
            Some(seg) if seg.kind == kind && seg.last_interval + 1 == j => {
                seg.last_interval = j;
                seg.t_end = grid.point(j + 1);
            }
            _ => segments.push(Segment {
                kind,
                first_interval: j,
                last_interval: j,
                t_start: grid.point(j),
                t_end: grid.point(j + 1),
            }),
        }
    }
    let boundaries = segments
        .windows(2)
        .filter(|w| w[0].kind != w[1].kind)
        .map(|w| 0.5 * (w[0].t_end + w[1].t_start))
        .collect();

    let mids = grid.midpoints();
    let collect = |want: TfKind| -> Result<Option<TfDistribution>> {
        let (times, rates): (Vec<f64>, Vec<f64>) = kinds
            .iter()
            .zip(&inc)
            .zip(&mids)
            .filter(|((k, _), _)| **k == Some(want))
            .map(|((_, d), t)| (*t, d.abs() / dt))
            .unzip();
        if times.is_empty() {
            return Ok(None);
        }
        TfDistribution::from_rates(times, rates, dt, want).map(Some)
    };
    Ok(FlowSplit {
        toa: collect(TfKind::Toa)?,
        tod: collect(TfKind::Tod)?,
        segments,
        boundaries,
        interval_kinds: kinds,
    })
}

/// Mean and spread of a weighted set of delta spikes.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpikeStatistics {
    pub mean: f64,
    pub std: f64,
    /// Normalized `(time, weight)` pairs.
    pub spikes: Vec<(f64, f64)>,
}

impl SpikeStatistics {
    fn from_weights(spikes: Vec<(f64, f64)>) -> Option<Self> {
        let total: f64 = spikes.iter().map(|(_, w)| w).sum();
        if spikes.is_empty() || total <= 0.0 {
            return None;
        }
        let spikes: Vec<(f64, f64)> = spikes.into_iter().map(|(t, w)| (t, w / total)).collect();
        let mean = spikes.iter().map(|(t, w)| w * t).sum::<f64>();
        let var = spikes.iter().map(|(t, w)| w * (t - mean).powi(2)).sum::<f64>();
        Some(Self {
            mean,
            std: var.sqrt(),
            spikes,
        })
    }
}

/// Exact statistics of `p(t) = sum_l a_l step(t - t_l)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StepStatistics {
    pub toa: Option<SpikeStatistics>,
    pub tod: Option<SpikeStatistics>,
    pub tf: Option<SpikeStatistics>,
}

/// Delta-spike TOA/TOD/TF statistics for a piecewise-constant population,
/// computed symbolically from `(t_l, a_l)` pairs.
pub fn step_model_statistics(steps: &[(f64, f64)]) -> Result<StepStatistics> {
    if steps.is_empty() {
        return Err(Error::invalid("no steps given"));
    }
    if steps.windows(2).any(|w| !(w[1].0 > w[0].0)) {
        return Err(Error::invalid("step times must be strictly increasing"));
    }
    let mut level = 0.0;
    for &(t, a) in steps {
        if !(t.is_finite() && a.is_finite()) {
            return Err(Error::invalid("step times and weights must be finite"));
        }
        level += a;
        if !(-1e-12..=1.0 + 1e-12).contains(&level) {
            return Err(Error::invalid(format!(
                "population {level} after the step at t = {t} leaves [0, 1]"
            )));
        }
    }
    let pick = |f: fn(f64) -> Option<f64>| -> Vec<(f64, f64)> {
        steps.iter().filter_map(|&(t, a)| f(a).map(|w| (t, w))).collect()
    };
    Ok(StepStatistics {
        toa: SpikeStatistics::from_weights(pick(|a| (a > 0.0).then_some(a))),
        tod: SpikeStatistics::from_weights(pick(|a| (a < 0.0).then_some(-a))),
        tf: SpikeStatistics::from_weights(pick(|a| (a != 0.0).then_some(a.abs()))),
    })
}

fn ensure_same_support(a: &TfDistribution, b: &TfDistribution) -> Result<()> {
    let same = a.times.len() == b.times.len()
        && a.times.iter().zip(&b.times).all(|(x, y)| (x - y).abs() <= 1e-12 * (1.0 + x.abs()))
        && (a.dt - b.dt).abs() <= 1e-12 * a.dt;
    if same {
        Ok(())
    } else {
        Err(Error::GridMismatch("distributions live on different supports".into()))
    }
}

/// `max_j |a_j - b_j|` for distributions on the same support.
pub fn sup_distance(a: &TfDistribution, b: &TfDistribution) -> Result<f64> {
    ensure_same_support(a, b)?;
    Ok(a.density
        .iter()
        .zip(&b.density)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max))
}

/// `sum_j |a_j - b_j| dt` for distributions on the same support.
pub fn l1_distance(a: &TfDistribution, b: &TfDistribution) -> Result<f64> {
    ensure_same_support(a, b)?;
    Ok(a.density
        .iter()
        .zip(&b.density)
        .map(|(x, y)| (x - y).abs())
        .sum::<f64>()
        * a.dt)
}

/// Sup distance after interpolating `b` onto the support times of `a` that
/// fall inside `b`'s support.
pub fn sup_distance_interpolated(a: &TfDistribution, b: &TfDistribution) -> f64 {
    let (lo, hi) = (b.times[0], b.times[b.times.len() - 1]);
    a.times
        .iter()
        .zip(&a.density)
        .filter(|(t, _)| **t >= lo && **t <= hi)
        .map(|(&t, &d)| (d - b.value_at(t)).abs())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_3, PI};

    fn grid(a: f64, b: f64, n: usize) -> TimeGrid {
        TimeGrid::new(a, b, n).unwrap()
    }

    #[test]
    fn half_sine_from_population() {
        let g = grid(0.0, PI, 2001);
        let s = PopulationSeries::from_fn(g, |t| (0.5 * t).sin().powi(2)).unwrap();
        let d = tf_from_population(&s).unwrap();
        assert!((d.mass() - 1.0).abs() < 1e-12);
        let dt = g.dt();
        for (t, v) in d.times().iter().zip(d.density()) {
            assert!((v - 0.5 * t.sin()).abs() < dt * dt);
        }
        let m = d.moments(2);
        assert!((m.mean - PI / 2.0).abs() < 1e-9);
        let std = PI / 2.0 * (1.0 - 8.0 / PI / PI).sqrt();
        assert!((m.std - std).abs() < 1e-6);
    }

    #[test]
    fn linear_ramp_is_uniform() {
        let t_max = 2.5;
        let s = PopulationSeries::from_fn(grid(0.0, t_max, 101), |t| t / t_max).unwrap();
        let d = tf_from_population(&s).unwrap();
        assert!(d.density().iter().all(|v| (v - 1.0 / t_max).abs() < 1e-12));
        let m = d.moments(2);
        assert!((m.mean - t_max / 2.0).abs() < 1e-12);
        // Midpoint masses: variance (T^2 - dt^2)/12.
        let dt = t_max / 100.0;
        assert!((m.std - ((t_max * t_max - dt * dt) / 12.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn exponential_from_population() {
        let g = grid(0.0, 10.0, 4001);
        let s = PopulationSeries::from_fn(g, |t| 0.5 * (1.0 - (-2.0 * t).exp())).unwrap();
        let d = tf_from_population(&s).unwrap();
        let dt = g.dt();
        for (t, v) in d.times().iter().zip(d.density()) {
            assert!((v - 2.0 * (-2.0 * t).exp()).abs() < 2.0 * dt * dt + 2e-9 * 4.0);
        }
        let m = d.moments(2);
        assert!((m.mean - 0.5).abs() < 0.005);
        assert!((m.std - 0.5).abs() < 0.005);
    }

    #[test]
    fn flat_series_is_degenerate() {
        let s = PopulationSeries::from_fn(grid(0.0, 1.0, 10), |_| 0.3).unwrap();
        assert!(matches!(tf_from_population(&s), Err(Error::Degenerate(_))));
        let short = PopulationSeries::from_fn(grid(0.0, 1.0, 2), |t| t).unwrap();
        assert!(tf_from_population(&short).is_err());
    }

    #[test]
    fn split_two_level_extremum() {
        // dp/dt = sin(t - pi/3)/2 for theta = pi/3, phi = pi/2, omega = 1.
        let g = grid(0.0, PI, 1001);
        let s = PopulationSeries::from_fn(g, |t| {
            let th = FRAC_PI_3;
            (0.5 * th).sin().powi(2) * (0.5 * t).cos().powi(2)
                + (0.5 * th).cos().powi(2) * (0.5 * t).sin().powi(2)
                - 0.5 * th.sin() * t.sin()
        })
        .unwrap();
        let split = split_toa_tod(&s, None).unwrap();
        assert_eq!(split.segments.len(), 2);
        assert_eq!(split.segments[0].kind, TfKind::Tod);
        assert_eq!(split.segments[1].kind, TfKind::Toa);
        assert_eq!(split.boundaries.len(), 1);
        assert!((split.boundaries[0] - FRAC_PI_3).abs() <= g.dt());
        let net = split.arrival_weight() - split.departure_weight();
        assert!((net - s.net_transfer()).abs() < 1e-9);
    }

    #[test]
    fn split_monotone_series() {
        let g = grid(0.0, 1.0, 50);
        let s = PopulationSeries::from_fn(g, |t| t * t).unwrap();
        let split = split_toa_tod(&s, None).unwrap();
        assert_eq!(split.segments.len(), 1);
        assert_eq!(split.segments[0].first_interval, 0);
        assert_eq!(split.segments[0].last_interval, 48);
        assert!(split.tod.is_none());
        assert!(split.boundaries.is_empty());
    }

    #[test]
    fn split_alternating_phases() {
        // theta = pi/3, phi = pi/4, omega = 1: dp/dt ∝ cos(th) sin t - sin(th) cos t sin(phi).
        let th = FRAC_PI_3;
        let ph = PI / 4.0;
        let p = |t: f64| {
            (0.5 * th).sin().powi(2) * (0.5 * t).cos().powi(2)
                + (0.5 * th).cos().powi(2) * (0.5 * t).sin().powi(2)
                - 0.5 * th.sin() * t.sin() * ph.sin()
        };
        let g = grid(0.0, 10.0, 5001);
        let split = split_toa_tod(&PopulationSeries::from_fn(g, p).unwrap(), None).unwrap();
        // Oracle: roots of tan t = tan(th) sin(ph) on [0, 10].
        let t0 = (th.tan() * ph.sin()).atan();
        let roots: Vec<f64> = (0..4).map(|k| t0 + k as f64 * PI).filter(|r| *r < 10.0).collect();
        assert_eq!(split.boundaries.len(), roots.len());
        for (b, r) in split.boundaries.iter().zip(&roots) {
            assert!((b - r).abs() <= g.dt(), "{b} vs {r}");
        }
        let kinds: Vec<TfKind> = split.segments.iter().map(|s| s.kind).collect();
        assert_eq!(kinds, vec![TfKind::Tod, TfKind::Toa, TfKind::Tod, TfKind::Toa]);
    }

    #[test]
    fn step_models() {
        let two = step_model_statistics(&[(2.0, 0.5), (4.0, 0.5)]).unwrap();
        let toa = two.toa.unwrap();
        assert_eq!(toa.mean, 3.0);
        assert_eq!(toa.std, 1.0);
        assert!(two.tod.is_none());

        let three = step_model_statistics(&[(2.0, 0.5), (4.0, -0.25), (6.0, 0.75)]).unwrap();
        let toa = three.toa.unwrap();
        assert!((toa.mean - 22.0 / 5.0).abs() < 1e-12);
        assert!((toa.std - 4.0 * 6f64.sqrt() / 5.0).abs() < 1e-12);
        let tod = three.tod.unwrap();
        assert_eq!(tod.mean, 4.0);
        assert_eq!(tod.std, 0.0);
        let tf = three.tf.unwrap();
        assert!((tf.mean - 13.0 / 3.0).abs() < 1e-12);
        assert!((tf.std - 29f64.sqrt() / 3.0).abs() < 1e-12);

        let single = step_model_statistics(&[(1.7, 1.0)]).unwrap();
        assert_eq!(single.toa.as_ref().unwrap().mean, 1.7);
        assert_eq!(single.toa.unwrap().std, 0.0);

        assert!(step_model_statistics(&[(2.0, 0.5), (1.0, 0.5)]).is_err());
        assert!(step_model_statistics(&[(2.0, -0.5)]).is_err());
        assert!(step_model_statistics(&[]).is_err());
    }

    #[test]
    fn distances() {
        let g = grid(0.0, 1.0, 11);
        let a = tf_from_population(&PopulationSeries::from_fn(g, |t| t).unwrap()).unwrap();
        assert_eq!(l1_distance(&a, &a).unwrap(), 0.0);
        assert_eq!(sup_distance(&a, &a).unwrap(), 0.0);
        let other = tf_from_population(&PopulationSeries::from_fn(grid(0.0, 2.0, 11), |t| t / 2.0).unwrap())
            .unwrap();
        assert!(matches!(l1_distance(&a, &other), Err(Error::GridMismatch(_))));
    }

    proptest! {
        #[test]
        fn every_distribution_is_normalized(
            amps in proptest::collection::vec(-1.0f64..1.0, 4),
            n in 5usize..400,
        ) {
            let g = grid(0.0, 3.0, n);
            let p = |t: f64| 0.5 + 0.5 * (amps[0] * t.sin() + amps[1] * (2.0 * t).cos() * 0.5
                + amps[2] * (3.0 * t + amps[3]).sin() * 0.25).tanh();
            let s = PopulationSeries::from_fn(g, p).unwrap();
            prop_assume!(s.total_variation() > 1e-9);
            let d = tf_from_population(&s).unwrap();
            prop_assert!((d.mass() - 1.0).abs() <= 1e-9);
            let split = split_toa_tod(&s, None).unwrap();
            for dist in split.toa.iter().chain(split.tod.iter()) {
                prop_assert!((dist.mass() - 1.0).abs() <= 1e-9);
            }
            let neutral: f64 = split.interval_kinds.iter().zip(s.increments())
                .filter(|(k, _)| k.is_none()).map(|(_, d)| d.abs()).sum();
            let net = split.arrival_weight() - split.departure_weight();
            prop_assert!((net - s.net_transfer()).abs() <= 1e-9 + neutral);
            let m = d.moments(4);
            prop_assert!(m.std >= 0.0);
            prop_assert!(m.raw[2] >= m.raw[1] * m.raw[1] - 1e-12);
        }
    }
}
