//! Spin shortcut to adiabaticity with angle `theta(t) = (pi/2)(t/T)^alpha`.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use serde::{Deserialize, Serialize};

use crate::dynamics::{HamiltonianSchedule, TimeGrid};
use crate::error::{Error, Result};
use crate::operators::{pauli, Axis, PureState, C64};
use crate::quadrature::tanh_sinh;
use crate::tf::{tf_from_rate, Moments, TfDistribution};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StaConfig {
    pub alpha: f64,
    /// Protocol duration `T`.
    pub t_final: f64,
    pub omega0: f64,
}

impl StaConfig {
    pub fn new(alpha: f64, t_final: f64, omega0: f64) -> Result<Self> {
        let cfg = Self {
            alpha,
            t_final,
            omega0,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return Err(Error::invalid("T must be > 0"));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::invalid("alpha must be >= 0"));
        }
        if !self.omega0.is_finite() {
            return Err(Error::invalid("omega0 must be finite"));
        }
        Ok(())
    }

    pub fn theta(&self, t: f64) -> f64 {
        FRAC_PI_2 * (t / self.t_final).powf(self.alpha)
    }

    /// `d theta / dt`; infinite at `t = 0` when `alpha < 1`.
    pub fn theta_dot(&self, t: f64) -> f64 {
        if self.alpha == 0.0 {
            return 0.0;
        }
        FRAC_PI_2 * self.alpha / self.t_final * (t / self.t_final).powf(self.alpha - 1.0)
    }

    /// Propagation grid on `[0, T]`, shifted to start at `dt/2` when `alpha < 1`.
    pub fn grid(&self, n_points: usize) -> Result<TimeGrid> {
        if n_points < 2 {
            return Err(Error::invalid("grid needs at least 2 points"));
        }
        let start = if self.alpha < 1.0 {
            0.5 * self.t_final / (n_points - 1) as f64
        } else {
            0.0
        };
        TimeGrid::new(start, self.t_final, n_points)
    }

    /// Instantaneous eigenstate `cos(theta/2)|0> + sin(theta/2)|1>`, the exact state up to phase.
    pub fn state_at(&self, t: f64) -> PureState {
        let (s, c) = (0.5 * self.theta(t)).sin_cos();
        PureState::new(&[C64::new(c, 0.0), C64::new(s, 0.0)]).expect("unit norm")
    }

    /// Closed-form `p_+(t) = cos^2(theta/2 - pi/4)`.
    pub fn population_plus(&self, t: f64) -> f64 {
        (0.5 * self.theta(t) - FRAC_PI_4).cos().powi(2)
    }

    /// Closed-form `pi_+(t)`, normalized on `[0, T]`.
    pub fn density(&self, t: f64) -> f64 {
        let u = t / self.t_final;
        FRAC_PI_2 * self.alpha / self.t_final * u.powf(self.alpha - 1.0) * (FRAC_PI_2 * u.powf(self.alpha)).cos()
    }
}

/// `H(t) = 1/2 [-omega0 (sin theta sigma_x + cos theta sigma_z) + theta_dot sigma_y]`.
pub fn sta_hamiltonian(config: &StaConfig) -> Result<HamiltonianSchedule> {
    config.validate()?;
    let cfg = *config;
    let (sx, sy, sz) = (pauli(Axis::X), pauli(Axis::Y), pauli(Axis::Z));
    Ok(HamiltonianSchedule::from_fn(2, move |t| {
        let th = cfg.theta(t);
        (sx.scale_real(-cfg.omega0 * th.sin()) + sz.scale_real(-cfg.omega0 * th.cos()) + sy.scale_real(cfg.theta_dot(t)))
            .scale_real(0.5)
    }))
}

/// Exact moments `E[t^p]`, `p = 0..=max_order`, by quadrature in `u = (t/T)^alpha`.
pub fn sta_moments(config: &StaConfig, max_order: usize) -> Result<Moments> {
    config.validate()?;
    if config.alpha == 0.0 {
        return Err(Error::Degenerate("alpha = 0 leaves the state frozen".into()));
    }
    let order = max_order.max(2);
    let t = config.t_final;
    let raw: Vec<f64> = (0..=order)
        .map(|p| {
            let e = p as f64 / config.alpha;
            let f = |u: f64| u.powf(e) * FRAC_PI_2 * (FRAC_PI_2 * u).cos();
            t.powi(p as i32) * tanh_sinh(&f, 0.0, 1.0, 1e-14)
        })
        .collect();
    let mean = raw[1];
    // Central second moment by quadrature avoids cancellation.
    let e = 1.0 / config.alpha;
    let var = tanh_sinh(
        &|u: f64| (t * u.powf(e) - mean).powi(2) * FRAC_PI_2 * (FRAC_PI_2 * u).cos(),
        0.0,
        1.0,
        1e-14,
    );
    Ok(Moments {
        mean,
        std: var.max(0.0).sqrt(),
        raw,
    })
}

/// Closed-form TF distribution on `grid` plus exact moments.
pub fn sta_tf_closed(config: &StaConfig, grid: &TimeGrid) -> Result<(TfDistribution, Moments)> {
    let moments = sta_moments(config, 2)?;
    let dist = tf_from_rate(grid, |t| config.density(t))?;
    Ok((dist, moments))
}

/// Exact mean `T (1 - 2/pi)` for `alpha = 1`.
pub fn sta_linear_mean(t_final: f64) -> f64 {
    t_final * (1.0 - 2.0 / PI)
}

/// Exact spread `T sqrt(4/pi - 12/pi^2)` for `alpha = 1`.
pub fn sta_linear_std(t_final: f64) -> f64 {
    t_final * (4.0 / PI - 12.0 / (PI * PI)).sqrt()
}
