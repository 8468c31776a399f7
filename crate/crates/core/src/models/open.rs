//! Open-system examples: pure dephasing and a dephased Hadamard rotation.

use std::f64::consts::FRAC_1_SQRT_2;

use serde::Serialize;

use crate::dynamics::{Channel, HamiltonianSchedule, LindbladForm, LindbladModel, TimeGrid};
use crate::error::{Error, Result};
use crate::operators::{pauli, projector_onto, Axis, Operator, PureState};
use crate::tf::{tf_from_rate, Moments, PopulationSeries, TfDistribution};

/// `H = 0` with a `sigma_z` double-commutator channel at rate `gamma`.
pub fn dephasing_model(gamma: f64) -> Result<LindbladModel> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::invalid("dephasing rate must be > 0"));
    }
    let h = HamiltonianSchedule::constant(Operator::zeros(2)?)?;
    LindbladModel::new(
        h,
        vec![Channel {
            operator: pauli(Axis::Z),
            rate: gamma,
        }],
        LindbladForm::DoubleCommutator,
    )
}

/// Closed-form dephasing quantities for `|+>` measured against `|->`.
#[derive(Clone, Debug, Serialize)]
pub struct DephasingAnalytics {
    pub gamma: f64,
    /// `p_-(t) = (1 - e^{-2 gamma t})/2` on the grid.
    pub series: PopulationSeries,
    /// `pi_-(t) = 2 gamma e^{-2 gamma t}` sampled at midpoints, renormalized on the window.
    pub distribution: TfDistribution,
    /// Moments of the windowed distribution.
    pub grid_moments: Moments,
    /// `<T> = 1/(2 gamma)` on `[0, inf)`.
    pub exact_mean: f64,
    /// `Delta T = 1/(2 gamma)` on `[0, inf)`.
    pub exact_std: f64,
    /// Probability mass of `pi_-` outside the grid window.
    pub truncation_mass: f64,
    /// Net transfer `p_-(inf) - p_-(0) = 1/2`.
    pub delta_theta: f64,
    /// `|Tr(L^dagger(M_-)^2)| = 2 gamma^2`.
    pub trace_term: f64,
    /// Peak density `pi_-(0) = 2 gamma`.
    pub exact_peak: f64,
}

pub fn dephasing_population(gamma: f64, t: f64) -> f64 {
    0.5 * (1.0 - (-2.0 * gamma * t).exp())
}

pub fn dephasing_density(gamma: f64, t: f64) -> f64 {
    2.0 * gamma * (-2.0 * gamma * t).exp()
}

pub fn dephasing_analytics(gamma: f64, grid: &TimeGrid) -> Result<DephasingAnalytics> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::invalid("dephasing rate must be > 0"));
    }
    if grid.t_start() < 0.0 {
        return Err(Error::invalid("dephasing window must start at t >= 0"));
    }
    let series = PopulationSeries::from_fn(*grid, |t| dephasing_population(gamma, t))?;
    let distribution = tf_from_rate(grid, |t| dephasing_density(gamma, t))?;
    let grid_moments = distribution.moments(2);
    let inside = (-2.0 * gamma * grid.t_start()).exp() - (-2.0 * gamma * grid.t_end()).exp();
    Ok(DephasingAnalytics {
        gamma,
        series,
        distribution,
        grid_moments,
        exact_mean: 0.5 / gamma,
        exact_std: 0.5 / gamma,
        truncation_mass: 1.0 - inside,
        delta_theta: 0.5,
        trace_term: 2.0 * gamma * gamma,
        exact_peak: 2.0 * gamma,
    })
}

/// `|-><-|`.
pub fn minus_projector() -> Operator {
    projector_onto(&PureState::minus()).expect("normalized")
}

/// `|+><+|`.
pub fn plus_projector() -> Operator {
    projector_onto(&PureState::plus()).expect("normalized")
}

/// `h = (sigma_x + sigma_z)/sqrt(2)`.
pub fn hadamard_operator() -> Operator {
    (pauli(Axis::X) + pauli(Axis::Z)).scale_real(FRAC_1_SQRT_2)
}

/// Dephased Hadamard rotation, started in `|0>` and measured against `|+>`.
#[derive(Clone, Debug)]
pub struct HadamardModel {
    pub omega0: f64,
    pub gamma: f64,
    pub model: LindbladModel,
    /// `L^dagger(M_+) = -(omega0/(2 sqrt 2)) sigma_y - (gamma/2) sigma_x`.
    pub gamma_operator: Operator,
    /// `Tr[(L^dagger M_+)^2] = omega0^2/4 + gamma^2/2`.
    pub trace_value: f64,
    pub target: Operator,
    pub initial: PureState,
}

/// `H = (omega0/2) h` with a GKS `sigma_z` channel at rate `gamma`.
pub fn hadamard_model(omega0: f64, gamma: f64) -> Result<HadamardModel> {
    if !(omega0 > 0.0 && omega0.is_finite()) {
        return Err(Error::invalid("omega0 must be > 0"));
    }
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(Error::invalid("gamma must be >= 0"));
    }
    let h = HamiltonianSchedule::constant(hadamard_operator().scale_real(0.5 * omega0))?;
    let model = LindbladModel::new(
        h,
        vec![Channel {
            operator: pauli(Axis::Z),
            rate: gamma,
        }],
        LindbladForm::Gks,
    )?;
    let gamma_operator = pauli(Axis::Y).scale_real(-omega0 / (2.0 * 2f64.sqrt())) - pauli(Axis::X).scale_real(0.5 * gamma);
    Ok(HadamardModel {
        omega0,
        gamma,
        model,
        gamma_operator,
        trace_value: 0.25 * omega0 * omega0 + 0.5 * gamma * gamma,
        target: plus_projector(),
        initial: PureState::basis(2, 0)?,
    })
}

/// Closed-system `p_+(t) = (3 - cos(omega0 t))/4` from `|0>`.
pub fn hadamard_closed_population(omega0: f64, t: f64) -> f64 {
    0.25 * (3.0 - (omega0 * t).cos())
}
