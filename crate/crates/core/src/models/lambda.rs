//! Three-level Lambda system with a linear detuning sweep.
//!
//! Basis order is `|1>, |2>, |3>` with `|2>` the excited state.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::dynamics::HamiltonianSchedule;
use crate::error::{Error, Result};
use crate::operators::{Operator, PureState, C64};

/// Couplings and detunings are angular frequencies; `t_final` is the sweep duration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaConfig {
    pub omega1: f64,
    pub omega2: f64,
    pub delta_i: f64,
    pub delta_f: f64,
    pub t_final: f64,
}

impl LambdaConfig {
    pub fn new(omega1: f64, omega2: f64, delta_i: f64, delta_f: f64, t_final: f64) -> Result<Self> {
        let cfg = Self {
            omega1,
            omega2,
            delta_i,
            delta_f,
            t_final,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Same as [`LambdaConfig::new`] with frequencies given in cyclic units (multiplied by `2 pi`).
    pub fn from_mhz_cyclic(omega1: f64, omega2: f64, delta_i: f64, delta_f: f64, t_final: f64) -> Result<Self> {
        Self::new(TAU * omega1, TAU * omega2, TAU * delta_i, TAU * delta_f, t_final)
    }

    /// Reading with `Omega = 2 pi rad/us` and `Delta/2pi` swept from -10 to +10 over 4 us.
    pub fn figure_angular() -> Self {
        Self::from_mhz_cyclic(1.0, 1.0, -10.0, 10.0, 4.0).expect("valid preset")
    }

    /// Literal caption reading with `Omega = 1 rad/us` and `Delta` from -10 to +10 rad/us.
    pub fn figure_literal() -> Self {
        Self::new(1.0, 1.0, -10.0, 10.0, 4.0).expect("valid preset")
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.omega1, self.omega2, self.delta_i, self.delta_f, self.t_final];
        if all.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("Lambda parameters must be finite"));
        }
        if !(self.omega1 > 0.0 && self.omega2 > 0.0) {
            return Err(Error::invalid("couplings must be > 0"));
        }
        if !(self.delta_i < 0.0 && 0.0 < self.delta_f) {
            return Err(Error::invalid("the sweep must cross resonance: delta_i < 0 < delta_f"));
        }
        if !(self.t_final > 0.0) {
            return Err(Error::invalid("T must be > 0"));
        }
        Ok(())
    }

    /// `Delta(t) = Delta_i + (Delta_f - Delta_i) t / T`.
    pub fn detuning(&self, t: f64) -> f64 {
        self.delta_i + (self.delta_f - self.delta_i) * t / self.t_final
    }

    /// `|d Delta / dt|`.
    pub fn sweep_rate(&self) -> f64 {
        (self.delta_f - self.delta_i) / self.t_final
    }

    /// Time at which `Delta(t) = 0`.
    pub fn resonance_time(&self) -> f64 {
        self.t_final * (-self.delta_i) / (self.delta_f - self.delta_i)
    }

    pub fn omega_eff(&self) -> f64 {
        self.omega1.hypot(self.omega2)
    }

    /// `|B> = (Omega_1|1> + Omega_2|3>)/Omega_eff`.
    pub fn bright_state(&self) -> PureState {
        let e = self.omega_eff();
        PureState::normalized(&[C64::new(self.omega1 / e, 0.0), C64::new(0.0, 0.0), C64::new(self.omega2 / e, 0.0)])
            .expect("nonzero couplings")
    }

    /// `|D> = (Omega_2|1> - Omega_1|3>)/Omega_eff`.
    pub fn dark_state(&self) -> PureState {
        let e = self.omega_eff();
        PureState::normalized(&[C64::new(self.omega2 / e, 0.0), C64::new(0.0, 0.0), C64::new(-self.omega1 / e, 0.0)])
            .expect("nonzero couplings")
    }

    pub fn hamiltonian_at(&self, t: f64) -> Operator {
        let (a, b) = (0.5 * self.omega1, 0.5 * self.omega2);
        Operator::from_real_rows(&[[0.0, a, 0.0], [a, self.detuning(t), b], [0.0, b, 0.0]]).expect("3x3")
    }
}

/// `H(t)` for the linear sweep.
pub fn lambda_hamiltonian(config: &LambdaConfig) -> Result<HamiltonianSchedule> {
    config.validate()?;
    let cfg = *config;
    Ok(HamiltonianSchedule::from_fn(3, move |t| cfg.hamiltonian_at(t)))
}

/// `Gamma = -(Omega_eff/2)(-i|B><2| + i|2><B|)`, equal to `+i[H(t), |2><2|]` at every `t`.
pub fn lambda_gamma(config: &LambdaConfig) -> Result<Operator> {
    config.validate()?;
    let b = config.bright_state();
    let two = PureState::basis(3, 1)?;
    let b2 = Operator::outer(&b, &two)?;
    let i = C64::new(0.0, 1.0);
    Ok((b2.scale(-i) + b2.dagger().scale(i)).scale_real(-0.5 * config.omega_eff()))
}

/// `P_LZ = exp(-pi Omega_eff^2 / (2 |dDelta/dt|))`.
pub fn landau_zener_probability(config: &LambdaConfig) -> Result<f64> {
    config.validate()?;
    Ok((-PI * config.omega_eff().powi(2) / (2.0 * config.sweep_rate())).exp())
}
