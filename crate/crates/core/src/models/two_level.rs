//! Driven two-level transition `H(t) = omega(t)/2 sigma_x`.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use super::waveform::{ControlWaveform, WaveformSpec};
use crate::dynamics::{HamiltonianSchedule, TimeGrid};
use crate::error::{Error, Result};
use crate::operators::{pauli, Axis, PureState, C64};
use crate::tf::{tf_from_rate, TfDistribution};

/// Initial Bloch angles: `|psi_0> = cos(theta/2)|0> + e^{i phi} sin(theta/2)|1>`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoLevelInitial {
    pub theta: f64,
    pub phi: f64,
}

impl Default for TwoLevelInitial {
    fn default() -> Self {
        Self { theta: 0.0, phi: 0.0 }
    }
}

impl TwoLevelInitial {
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        let init = Self { theta, phi };
        init.validate()?;
        Ok(init)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=PI).contains(&self.theta) {
            return Err(Error::invalid(format!("theta = {} outside [0, pi]", self.theta)));
        }
        if !(0.0..TAU).contains(&self.phi) {
            return Err(Error::invalid(format!("phi = {} outside [0, 2 pi)", self.phi)));
        }
        Ok(())
    }

    pub fn state(&self) -> PureState {
        let (s, c) = (0.5 * self.theta).sin_cos();
        PureState::new(&[C64::new(c, 0.0), C64::from_polar(s, self.phi)]).expect("unit norm")
    }
}

/// `H(t) = omega(t)/2 sigma_x`.
pub fn two_level_hamiltonian(waveform: &ControlWaveform) -> HamiltonianSchedule {
    let sx = pauli(Axis::X);
    if let Some(WaveformSpec::Constant { omega0 }) = waveform.spec() {
        return HamiltonianSchedule::constant(sx.scale_real(0.5 * omega0)).expect("Hermitian");
    }
    let w = waveform.clone();
    HamiltonianSchedule::from_fn(2, move |t| sx.scale_real(0.5 * w.omega(t)))
}

/// Closed-form `p_1(t)` for `t >= 0`.
pub fn two_level_population(waveform: &ControlWaveform, init: &TwoLevelInitial, t: f64) -> f64 {
    let big = waveform.phase(t);
    let (st, ct) = (0.5 * init.theta).sin_cos();
    let (sb, cb) = (0.5 * big).sin_cos();
    st * st * cb * cb + ct * ct * sb * sb - 0.5 * init.theta.sin() * big.sin() * init.phi.sin()
}

/// Closed-form `dp_1/dt`.
pub fn two_level_rate(waveform: &ControlWaveform, init: &TwoLevelInitial, t: f64) -> f64 {
    let big = waveform.phase(t);
    0.5 * waveform.omega(t)
        * (init.theta.cos() * big.sin() - init.theta.sin() * big.cos() * init.phi.sin())
}

/// Closed-form TF density sampled at interval midpoints and normalized on the grid.
pub fn two_level_tf_closed(
    waveform: &ControlWaveform,
    init: &TwoLevelInitial,
    grid: &TimeGrid,
) -> Result<TfDistribution> {
    init.validate()?;
    tf_from_rate(grid, |t| two_level_rate(waveform, init, t))
}
