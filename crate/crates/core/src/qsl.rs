//! Time-of-flow speed limits, spread bounds and the time-energy uncertainty check.
//!
//! All quantities use `hbar = 1`.

use serde::Serialize;

use crate::dynamics::{lindblad_adjoint, LindbladModel, TimeGrid};
use crate::error::{Error, Result};
use crate::operators::Operator;
use crate::tf::TfDistribution;

/// `3 sqrt(3)`.
pub const CHEBYSHEV_FACTOR: f64 = 5.196_152_422_706_632;

/// Relative slack used when comparing measured spreads with bounds.
pub const BOUND_RTOL: f64 = 1e-9;

/// A speed-limit time, possibly unbounded.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QslEstimate {
    pub tau: f64,
    pub trace_term: f64,
    pub diagnostic: Option<String>,
}

fn check_delta_theta(delta_theta: f64) -> Result<()> {
    if !(delta_theta > 0.0 && delta_theta <= 1.0 + 1e-12) {
        return Err(Error::invalid(format!("delta_theta = {delta_theta} outside (0, 1]")));
    }
    Ok(())
}

fn qsl_from_trace(delta_theta: f64, trace_term: f64) -> QslEstimate {
    if trace_term > 0.0 {
        QslEstimate {
            tau: delta_theta / trace_term.sqrt(),
            trace_term,
            diagnostic: None,
        }
    } else {
        QslEstimate {
            tau: f64::INFINITY,
            trace_term,
            diagnostic: Some("trace term vanishes: the target commutes with every generator".into()),
        }
    }
}

/// `|Tr(L^dagger(M)^2)|` at time `t`.
pub fn trace_term(model: &LindbladModel, m: &Operator, t: f64) -> Result<f64> {
    let a = lindblad_adjoint(model, m, t)?;
    Ok((a * a).trace().norm())
}

/// `tau_TF = delta_theta / sqrt|Tr(L^dagger(M)^2)|` for a time-independent generator.
pub fn tf_qsl_open(model: &LindbladModel, m: &Operator, delta_theta: f64) -> Result<QslEstimate> {
    check_delta_theta(delta_theta)?;
    if !model.hamiltonian().is_constant() {
        return Err(Error::invalid(
            "time-dependent generator: use tf_qsl_open_sup with an explicit grid",
        ));
    }
    Ok(qsl_from_trace(delta_theta, trace_term(model, m, 0.0)?))
}

/// `tau_TF` with the supremum of the trace term over the grid points.
pub fn tf_qsl_open_sup(model: &LindbladModel, m: &Operator, delta_theta: f64, grid: &TimeGrid) -> Result<QslEstimate> {
    check_delta_theta(delta_theta)?;
    let mut sup: f64 = 0.0;
    for t in grid.points() {
        sup = sup.max(trace_term(model, m, t)?);
    }
    Ok(qsl_from_trace(delta_theta, sup))
}

/// `Delta_k H = sqrt(Tr(M H^2) - Tr(M H)^2)` for a rank-1 projector `M`.
pub fn energy_spread(h: &Operator, m: &Operator) -> Result<f64> {
    h.ensure_hermitian()?;
    m.ensure_projector()?;
    if h.dim() != m.dim() {
        return Err(Error::DimensionMismatch {
            expected: h.dim(),
            found: m.dim(),
        });
    }
    let e1 = (*m * *h).trace().re;
    let e2 = (*m * *h * *h).trace().re;
    Ok((e2 - e1 * e1).max(0.0).sqrt())
}

/// Closed-system speed limits in both prefactor conventions.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClosedQsl {
    /// `delta_theta / (2 Delta_k H)`.
    pub printed: f64,
    /// `delta_theta / (sqrt(2) Delta_k H)`, equal to the open-system formula at zero rates.
    pub derived: f64,
    pub energy_spread: f64,
    pub diagnostic: Option<String>,
}

pub fn tf_qsl_closed(h: &Operator, m: &Operator, delta_theta: f64) -> Result<ClosedQsl> {
    check_delta_theta(delta_theta)?;
    let spread = energy_spread(h, m)?;
    if spread <= 0.0 {
        return Ok(ClosedQsl {
            printed: f64::INFINITY,
            derived: f64::INFINITY,
            energy_spread: 0.0,
            diagnostic: Some("target is an eigenstate of H".into()),
        });
    }
    Ok(ClosedQsl {
        printed: delta_theta / (2.0 * spread),
        derived: delta_theta / (std::f64::consts::SQRT_2 * spread),
        energy_spread: spread,
        diagnostic: None,
    })
}

/// `Delta T >= 1 / (3 sqrt(3) pi_max)`.
pub fn chebyshev_spread_bound(pi_max: f64) -> Result<f64> {
    if !(pi_max > 0.0 && pi_max.is_finite()) {
        return Err(Error::invalid(format!("peak density must be > 0, got {pi_max}")));
    }
    Ok(1.0 / (CHEBYSHEV_FACTOR * pi_max))
}

/// `Delta T >= tau_TF / (3 sqrt(3))`.
pub fn spread_bound_from_qsl(tau_tf: f64) -> f64 {
    tau_tf / CHEBYSHEV_FACTOR
}

/// `tau_MT = 1/(sqrt(2) gamma)` for pure dephasing.
pub fn mt_dephasing_bound(gamma: f64) -> Result<f64> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::invalid("gamma must be > 0"));
    }
    Ok(1.0 / (std::f64::consts::SQRT_2 * gamma))
}

/// Both sides of `Delta T Delta_k H >= eta` with `eta = delta_theta/(6 sqrt 3)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct UncertaintyCheck {
    pub product: f64,
    pub eta: f64,
    pub satisfied: bool,
    /// `product / eta`; infinite when `eta = 0`.
    pub margin: f64,
}

/// `delta_theta / (6 sqrt 3)`.
pub fn uncertainty_eta(delta_theta: f64) -> f64 {
    delta_theta.abs() / (2.0 * CHEBYSHEV_FACTOR)
}

pub fn uncertainty_from_spread(delta_t: f64, spread: f64, delta_theta: f64) -> Result<UncertaintyCheck> {
    if !(delta_t.is_finite() && spread.is_finite() && delta_theta.is_finite()) {
        return Err(Error::invalid("uncertainty inputs must be finite"));
    }
    let product = delta_t * spread;
    let eta = uncertainty_eta(delta_theta);
    Ok(UncertaintyCheck {
        product,
        eta,
        satisfied: product >= eta * (1.0 - BOUND_RTOL),
        margin: if eta > 0.0 { product / eta } else { f64::INFINITY },
    })
}

/// Uncertainty check with `Delta_k H` evaluated from `H` and the target projector.
pub fn uncertainty_check(delta_t: f64, h: &Operator, m: &Operator, delta_theta: f64) -> Result<UncertaintyCheck> {
    uncertainty_from_spread(delta_t, energy_spread(h, m)?, delta_theta)
}

/// Spread `sqrt|Tr(L^dagger(M)^2)| / 2` that plays the role of `Delta_k H` for open systems.
pub fn effective_spread(trace_term: f64) -> f64 {
    0.5 * trace_term.abs().sqrt()
}

/// Measured statistics of a TF distribution.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Measured {
    pub mean: f64,
    pub delta_t: f64,
    pub pi_max: f64,
}

impl Measured {
    pub fn from_distribution(dist: &TfDistribution) -> Self {
        let m = dist.moments(2);
        Self {
            mean: m.mean,
            delta_t: m.std,
            pi_max: dist.peak(),
        }
    }
}

/// Which bounds the measured distribution satisfies.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Satisfied {
    pub chebyshev: bool,
    pub qsl_spread: bool,
    pub uncertainty: bool,
    /// `pi_max <= N sqrt(trace_term)`.
    pub peak_consistency: bool,
}

/// Every bound for one model, alongside the measured distribution.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundsReport {
    pub delta_theta: f64,
    pub trace_term: f64,
    pub tau_tf: f64,
    pub tau_tf_closed_printed: Option<f64>,
    pub tau_tf_closed_derived: Option<f64>,
    pub tau_mt: Option<f64>,
    pub spread_bound_chebyshev: f64,
    pub spread_bound_qsl: f64,
    pub uncertainty_eta: f64,
    pub uncertainty_spread: f64,
    pub uncertainty_product: f64,
    pub uncertainty_margin: f64,
    pub measured: Measured,
    pub satisfied: Satisfied,
    pub diagnostics: Vec<String>,
}

/// Inputs that fix a [`BoundsReport`].
#[derive(Clone, Debug, Default)]
pub struct BoundsInputs {
    /// Net transfer `|p(T) - p(0)|`.
    pub delta_theta: f64,
    /// `|Tr(L^dagger(M)^2)|`, or its supremum for time-dependent generators.
    pub trace_term: f64,
    /// `Delta_k H` for closed systems; open systems fall back to [`effective_spread`].
    pub energy_spread: Option<f64>,
    pub tau_mt: Option<f64>,
}

impl BoundsReport {
    /// Evaluates all bounds against `dist`.
    ///
    /// The peak check compares `pi_max` with `N sqrt(trace_term)`, so `dist` must
    /// have been normalized from raw `|dp/dt|` values.
    pub fn evaluate(inputs: &BoundsInputs, dist: &TfDistribution) -> Result<Self> {
        let delta_theta = inputs.delta_theta.abs();
        if delta_theta > 1.0 + 1e-12 {
            return Err(Error::invalid("delta_theta must lie in [0, 1]"));
        }
        let measured = Measured::from_distribution(dist);
        let mut diagnostics = Vec::new();
        let qsl = qsl_from_trace(delta_theta, inputs.trace_term);
        if let Some(d) = qsl.diagnostic.clone() {
            diagnostics.push(d);
        }
        let tau_tf = if delta_theta == 0.0 { 0.0 } else { qsl.tau };
        let (printed, derived) = match inputs.energy_spread {
            Some(s) if s > 0.0 => (Some(delta_theta / (2.0 * s)), Some(delta_theta / (std::f64::consts::SQRT_2 * s))),
            Some(_) => {
                diagnostics.push("target is an eigenstate of H".into());
                (Some(f64::INFINITY), Some(f64::INFINITY))
            }
            None => (None, None),
        };
        let spread = inputs.energy_spread.unwrap_or_else(|| effective_spread(inputs.trace_term));
        let cheb = chebyshev_spread_bound(measured.pi_max)?;
        let spread_bound_qsl = spread_bound_from_qsl(tau_tf);
        let unc = uncertainty_from_spread(measured.delta_t, spread, delta_theta)?;
        let slack = 1.0 - BOUND_RTOL;
        let peak_limit = dist.normalization() * inputs.trace_term.sqrt();
        Ok(Self {
            delta_theta,
            trace_term: inputs.trace_term,
            tau_tf,
            tau_tf_closed_printed: printed,
            tau_tf_closed_derived: derived,
            tau_mt: inputs.tau_mt,
            spread_bound_chebyshev: cheb,
            spread_bound_qsl,
            uncertainty_eta: unc.eta,
            uncertainty_spread: spread,
            uncertainty_product: unc.product,
            uncertainty_margin: unc.margin,
            measured,
            satisfied: Satisfied {
                chebyshev: measured.delta_t >= cheb * slack,
                qsl_spread: measured.delta_t >= spread_bound_qsl * slack,
                uncertainty: unc.satisfied,
                peak_consistency: measured.pi_max <= peak_limit * (1.0 + BOUND_RTOL),
            },
            diagnostics,
        })
    }

    pub fn all_satisfied(&self) -> bool {
        let s = self.satisfied;
        s.chebyshev && s.qsl_spread && s.uncertainty && s.peak_consistency
    }
}
