//! Ready-made physical scenarios with closed-form references.

mod lambda;
mod open;
mod sta;
mod two_level;
mod waveform;

pub use lambda::{lambda_gamma, lambda_hamiltonian, landau_zener_probability, LambdaConfig};
pub use open::{
    dephasing_analytics, dephasing_density, dephasing_model, dephasing_population, hadamard_closed_population,
    hadamard_model, hadamard_operator, minus_projector, plus_projector, DephasingAnalytics, HadamardModel,
};
pub use sta::{sta_hamiltonian, sta_linear_mean, sta_linear_std, sta_moments, sta_tf_closed, StaConfig};
pub use two_level::{
    two_level_hamiltonian, two_level_population, two_level_rate, two_level_tf_closed, TwoLevelInitial,
};
pub use waveform::{ControlWaveform, WaveformSpec, MAX_POLY_ORDER};
