//! Control waveforms `omega(t)` and their integrals `Omega(t)`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;

use crate::error::{Error, Result};
use crate::quadrature::adaptive_simpson;

/// Maximum number of polynomial corrections `a_1 .. a_4`.
pub const MAX_POLY_ORDER: usize = 4;

/// Shape of a serializable waveform.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WaveformSpec {
    Constant { omega0: f64 },
    /// `omega(t) = omega0 + sum_p a_p t^p`.
    Polynomial { omega0: f64, coefficients: Vec<f64> },
    /// Gaussian of the given pulse area centred at `t0`.
    GaussianPulse { area: f64, t0: f64, sigma: f64 },
}

/// A control waveform with a cumulative phase `Omega(t) = int_0^t omega`.
#[derive(Clone)]
pub enum ControlWaveform {
    Spec(WaveformSpec),
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for ControlWaveform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ControlWaveform::Spec(s) => s.fmt(f),
            ControlWaveform::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl ControlWaveform {
    pub fn constant(omega0: f64) -> Result<Self> {
        Self::from_spec(WaveformSpec::Constant { omega0 })
    }

    pub fn polynomial(omega0: f64, coefficients: &[f64]) -> Result<Self> {
        Self::from_spec(WaveformSpec::Polynomial {
            omega0,
            coefficients: coefficients.to_vec(),
        })
    }

    /// Area-`pi` Gaussian, the smooth stand-in for `pi delta(t - t0)`.
    pub fn gaussian_pi_pulse(t0: f64, sigma: f64) -> Result<Self> {
        Self::from_spec(WaveformSpec::GaussianPulse { area: PI, t0, sigma })
    }

    pub fn custom(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        ControlWaveform::Custom(Arc::new(f))
    }

    pub fn from_spec(spec: WaveformSpec) -> Result<Self> {
        let finite = |x: f64, name: &str| {
            if x.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(format!("{name} must be finite")))
            }
        };
        match &spec {
            WaveformSpec::Constant { omega0 } => finite(*omega0, "omega0")?,
            WaveformSpec::Polynomial { omega0, coefficients } => {
                finite(*omega0, "omega0")?;
                if coefficients.len() > MAX_POLY_ORDER {
                    return Err(Error::invalid(format!(
                        "at most {MAX_POLY_ORDER} polynomial coefficients, got {}",
                        coefficients.len()
                    )));
                }
                for a in coefficients {
                    finite(*a, "coefficient")?;
                }
            }
            WaveformSpec::GaussianPulse { area, t0, sigma } => {
                finite(*area, "area")?;
                finite(*t0, "t0")?;
                if !(*sigma > 0.0 && sigma.is_finite()) {
                    return Err(Error::invalid("sigma must be > 0"));
                }
            }
        }
        Ok(ControlWaveform::Spec(spec))
    }

    pub fn spec(&self) -> Option<&WaveformSpec> {
        match self {
            ControlWaveform::Spec(s) => Some(s),
            ControlWaveform::Custom(_) => None,
        }
    }

    /// `omega(t)`.
    pub fn omega(&self, t: f64) -> f64 {
        match self {
            ControlWaveform::Spec(WaveformSpec::Constant { omega0 }) => *omega0,
            ControlWaveform::Spec(WaveformSpec::Polynomial { omega0, coefficients }) => {
                let mut acc = 0.0;
                for a in coefficients.iter().rev() {
                    acc = (acc + a) * t;
                }
                omega0 + acc
            }
            ControlWaveform::Spec(WaveformSpec::GaussianPulse { area, t0, sigma }) => {
                let z = (t - t0) / sigma;
                area / (sigma * (2.0 * PI).sqrt()) * (-0.5 * z * z).exp()
            }
            ControlWaveform::Custom(f) => f(t),
        }
    }

    /// `Omega(t) = int_0^t omega(s) ds`.
    pub fn phase(&self, t: f64) -> f64 {
        match self {
            ControlWaveform::Spec(WaveformSpec::Constant { omega0 }) => omega0 * t,
            ControlWaveform::Spec(WaveformSpec::Polynomial { omega0, coefficients }) => {
                let mut acc = 0.0;
                for (i, a) in coefficients.iter().enumerate().rev() {
                    acc = (acc + a / (i + 2) as f64) * t;
                }
                (omega0 + acc) * t
            }
            ControlWaveform::Spec(WaveformSpec::GaussianPulse { area, t0, sigma }) => {
                let s = sigma * std::f64::consts::SQRT_2;
                0.5 * area * (erf((t - t0) / s) + erf(t0 / s))
            }
            ControlWaveform::Custom(f) => adaptive_simpson(&|s| f(s), 0.0, t, 1e-12),
        }
    }
}
