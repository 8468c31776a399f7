//! Closed and open time propagation on uniform grids.
//!
//! Both propagators use classic fixed-step RK4 with `r` substeps per grid
//! interval. The substep count is derived from the largest generator norm seen
//! on the grid and refined (doubled) until the conserved quantity stays within
//! tolerance.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::{
    anticommutator, commutator, DensityMatrix, Expectation, Operator, PureState, C64, MAX_DIM,
};
use crate::tf::PopulationSeries;

/// Drift accepted without further refinement; states are renormalized below it.
pub const DRIFT_TOL: f64 = 1e-8;
/// Drift beyond which propagation is reported as failed.
pub const DRIFT_FAIL: f64 = 1e-6;
/// Largest Hermitian-symmetrization correction tolerated per RK4 step.
pub const SYMMETRIZATION_TOL: f64 = 1e-10;
/// Most negative eigenvalue tolerated in a propagated density matrix.
pub const NEGATIVITY_FAIL: f64 = -1e-6;

/// Uniform time grid `t_j = t_start + j dt`, `j = 0..n_points`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    t_start: f64,
    t_end: f64,
    n_points: usize,
}

impl TimeGrid {
    pub fn new(t_start: f64, t_end: f64, n_points: usize) -> Result<Self> {
        if !(t_start.is_finite() && t_end.is_finite()) {
            return Err(Error::invalid("grid bounds must be finite"));
        }
        if t_end <= t_start {
            return Err(Error::invalid(format!(
                "grid end {t_end} must exceed start {t_start}"
            )));
        }
        if n_points < 2 {
            return Err(Error::invalid("a grid needs at least 2 points"));
        }
        Ok(Self {
            t_start,
            t_end,
            n_points,
        })
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn dt(&self) -> f64 {
        (self.t_end - self.t_start) / (self.n_points - 1) as f64
    }

    pub fn point(&self, j: usize) -> f64 {
        if j + 1 == self.n_points {
            self.t_end
        } else {
            self.t_start + j as f64 * self.dt()
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n_points).map(|j| self.point(j)).collect()
    }

    /// Centers of the `n_points - 1` grid intervals.
    pub fn midpoints(&self) -> Vec<f64> {
        (0..self.n_points - 1)
            .map(|j| 0.5 * (self.point(j) + self.point(j + 1)))
            .collect()
    }
}

/// A Hermitian Hamiltonian `H(t)`.
#[derive(Clone)]
pub struct HamiltonianSchedule {
    dim: usize,
    constant: Option<Operator>,
    eval: Arc<dyn Fn(f64) -> Operator + Send + Sync>,
}

impl fmt::Debug for HamiltonianSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HamiltonianSchedule")
            .field("dim", &self.dim)
            .field("constant", &self.constant)
            .finish_non_exhaustive()
    }
}

impl HamiltonianSchedule {
    pub fn constant(h: Operator) -> Result<Self> {
        h.ensure_hermitian()?;
        Ok(Self {
            dim: h.dim(),
            constant: Some(h),
            eval: Arc::new(move |_| h),
        })
    }

    /// Time-dependent schedule. Hermiticity is checked at every time the
    /// propagators sample.
    pub fn from_fn<F>(dim: usize, f: F) -> Self
    where
        F: Fn(f64) -> Operator + Send + Sync + 'static,
    {
        Self {
            dim,
            constant: None,
            eval: Arc::new(f),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_constant(&self) -> bool {
        self.constant.is_some()
    }

    pub fn at(&self, t: f64) -> Operator {
        (self.eval)(t)
    }

    /// Evaluates `H(t)` and checks Hermiticity and dimension.
    pub fn checked_at(&self, t: f64) -> Result<Operator> {
        let h = self.at(t);
        if h.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: h.dim(),
            });
        }
        h.ensure_hermitian()?;
        Ok(h)
    }
}

/// Dissipator convention of a [`LindbladModel`].
///
/// * `DoubleCommutator`: `D(rho) = -sum_j gamma_j/2 [L_j, [L_j, rho]]`, Hermitian `L_j`.
/// * `Gks`: `D(rho) = sum_j gamma_j/2 (L_j rho L_j^dagger - 1/2 {L_j^dagger L_j, rho})`.
///
/// For Hermitian `L`, `DoubleCommutator` at rate `gamma` equals `Gks` at rate `2 gamma`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LindbladForm {
    DoubleCommutator,
    Gks,
}

/// One jump operator with its nonnegative rate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Channel {
    pub operator: Operator,
    pub rate: f64,
}

/// Hamiltonian plus dissipative channels.
#[derive(Clone, Debug)]
pub struct LindbladModel {
    hamiltonian: HamiltonianSchedule,
    channels: Vec<Channel>,
    form: LindbladForm,
}

impl LindbladModel {
    pub fn new(
        hamiltonian: HamiltonianSchedule,
        channels: Vec<Channel>,
        form: LindbladForm,
    ) -> Result<Self> {
        for ch in &channels {
            if ch.operator.dim() != hamiltonian.dim() {
                return Err(Error::DimensionMismatch {
                    expected: hamiltonian.dim(),
                    found: ch.operator.dim(),
                });
            }
            if !(ch.rate >= 0.0 && ch.rate.is_finite()) {
                return Err(Error::invalid(format!(
                    "channel rate must be finite and >= 0, got {}",
                    ch.rate
                )));
            }
            if form == LindbladForm::DoubleCommutator {
                ch.operator.ensure_hermitian()?;
            }
        }
        Ok(Self {
            hamiltonian,
            channels,
            form,
        })
    }

    pub fn closed(hamiltonian: HamiltonianSchedule) -> Self {
        Self {
            hamiltonian,
            channels: Vec::new(),
            form: LindbladForm::DoubleCommutator,
        }
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.dim()
    }

    pub fn hamiltonian(&self) -> &HamiltonianSchedule {
        &self.hamiltonian
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    pub fn form(&self) -> LindbladForm {
        self.form
    }

    /// True when every rate is zero.
    pub fn is_closed(&self) -> bool {
        self.channels.iter().all(|c| c.rate == 0.0)
    }

    fn dissipator(&self, x: &Operator, adjoint: bool) -> Operator {
        let mut out = Operator::zeros(x.dim()).expect("valid dim");
        for ch in self.channels.iter().filter(|c| c.rate != 0.0) {
            let l = ch.operator;
            let term = match self.form {
                LindbladForm::DoubleCommutator => {
                    let inner = commutator(&l, x).expect("same dim");
                    commutator(&l, &inner).expect("same dim").scale_real(-0.5 * ch.rate)
                }
                LindbladForm::Gks => {
                    let ld = l.dagger();
                    let jump = if adjoint { ld * *x * l } else { l * *x * ld };
                    let anti = anticommutator(&(ld * l), x).expect("same dim");
                    (jump - anti.scale_real(0.5)).scale_real(0.5 * ch.rate)
                }
            };
            out += term;
        }
        out
    }

    /// `L(rho) = -i[H(t), rho] + D(rho)`.
    pub fn apply(&self, t: f64, rho: &Operator) -> Operator {
        let h = self.hamiltonian.at(t);
        commutator(&h, rho).expect("same dim").scale(C64::new(0.0, -1.0)) + self.dissipator(rho, false)
    }

    /// `L^dagger(M) = +i[H(t), M] + D^dagger(M)`, so that `d/dt Tr(rho M) = Tr(rho L^dagger(M))`.
    pub fn apply_adjoint(&self, t: f64, m: &Operator) -> Operator {
        let h = self.hamiltonian.at(t);
        commutator(&h, m).expect("same dim").scale(C64::new(0.0, 1.0)) + self.dissipator(m, true)
    }

    fn generator_scale(&self, t: f64) -> f64 {
        2.0 * self.hamiltonian.at(t).frobenius_norm()
            + self
                .channels
                .iter()
                .map(|c| 2.0 * c.rate * c.operator.frobenius_norm().powi(2))
                .sum::<f64>()
    }
}

/// Tuning knobs shared by both propagators.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PropagationOptions {
    /// Fixed substep count per grid interval; `None` derives it from the generator norm.
    pub substeps: Option<usize>,
    /// Target value of `h * ||generator||` for automatically chosen substeps.
    pub step_scale: f64,
    /// How many times the substep count may be doubled when drift exceeds [`DRIFT_TOL`].
    pub max_refinements: usize,
}

impl Default for PropagationOptions {
    fn default() -> Self {
        Self {
            substeps: None,
            step_scale: 0.01,
            max_refinements: 4,
        }
    }
}

impl PropagationOptions {
    fn initial_substeps(&self, grid: &TimeGrid, scale: impl Fn(f64) -> f64) -> usize {
        if let Some(r) = self.substeps {
            return r.max(1);
        }
        let probe = grid
            .points()
            .into_iter()
            .chain(grid.midpoints())
            .map(&scale)
            .fold(0.0, f64::max);
        ((grid.dt() * probe / self.step_scale).ceil() as usize).max(1)
    }
}

/// Numerical health of a propagation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct PropagationDiagnostics {
    pub substeps: usize,
    /// Largest `| ||psi|| - 1 |` or `|Tr rho - 1|` observed at a grid point.
    pub max_drift: f64,
    /// Largest correction applied by `rho <- (rho + rho^dagger)/2`.
    pub max_symmetrization: f64,
    /// Smallest density-matrix eigenvalue seen (1 for pure trajectories).
    pub min_eigenvalue: f64,
}

/// Sampled states along a grid.
#[derive(Clone, Debug)]
pub enum States {
    Pure(Vec<PureState>),
    Mixed(Vec<DensityMatrix>),
}

/// States sampled on every grid point.
#[derive(Clone, Debug)]
pub struct Trajectory {
    grid: TimeGrid,
    states: States,
    diagnostics: PropagationDiagnostics,
}

impl Trajectory {
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn states(&self) -> &States {
        &self.states
    }

    pub fn diagnostics(&self) -> &PropagationDiagnostics {
        &self.diagnostics
    }

    pub fn dim(&self) -> usize {
        match &self.states {
            States::Pure(v) => v[0].dim(),
            States::Mixed(v) => v[0].dim(),
        }
    }

    pub fn len(&self) -> usize {
        self.grid.n_points()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `<A>` at grid point `j`.
    pub fn expectation_at(&self, j: usize, op: &Operator) -> Result<C64> {
        match &self.states {
            States::Pure(v) => v[j].expectation(op),
            States::Mixed(v) => v[j].expectation(op),
        }
    }

    /// `<A(t_j)>` at every grid point.
    pub fn expectation_series<F>(&self, op_at: F) -> Result<Vec<C64>>
    where
        F: Fn(f64) -> Operator,
    {
        (0..self.len())
            .map(|j| self.expectation_at(j, &op_at(self.grid.point(j))))
            .collect()
    }

    /// The state at grid point `j` as a density matrix.
    pub fn density_at(&self, j: usize) -> DensityMatrix {
        match &self.states {
            States::Pure(v) => DensityMatrix::from_pure(&v[j]),
            States::Mixed(v) => v[j],
        }
    }
}

type Amp = [C64; MAX_DIM];

fn axpy(y: &Amp, a: f64, x: &Amp) -> Amp {
    let mut out = *y;
    for (o, xi) in out.iter_mut().zip(x) {
        *o += xi * a;
    }
    out
}

fn schrodinger_rhs(h: &Operator, psi: &Amp) -> Amp {
    let mut out = h.apply(psi);
    for z in out.iter_mut() {
        *z = C64::new(z.im, -z.re);
    }
    out
}

fn rk4_pure(h: &HamiltonianSchedule, t: f64, step: f64, psi: &Amp) -> Amp {
    let k1 = schrodinger_rhs(&h.at(t), psi);
    let k2 = schrodinger_rhs(&h.at(t + 0.5 * step), &axpy(psi, 0.5 * step, &k1));
    let k3 = schrodinger_rhs(&h.at(t + 0.5 * step), &axpy(psi, 0.5 * step, &k2));
    let k4 = schrodinger_rhs(&h.at(t + step), &axpy(psi, step, &k3));
    let mut out = *psi;
    for i in 0..MAX_DIM {
        out[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (step / 6.0);
    }
    out
}

/// Integrates `i dpsi/dt = H(t) psi` with default options.
pub fn propagate_schrodinger(
    h: &HamiltonianSchedule,
    psi0: &PureState,
    grid: &TimeGrid,
) -> Result<Trajectory> {
    propagate_schrodinger_with(h, psi0, grid, &PropagationOptions::default())
}

pub fn propagate_schrodinger_with(
    h: &HamiltonianSchedule,
    psi0: &PureState,
    grid: &TimeGrid,
    opts: &PropagationOptions,
) -> Result<Trajectory> {
    if psi0.dim() != h.dim() {
        return Err(Error::DimensionMismatch {
            expected: h.dim(),
            found: psi0.dim(),
        });
    }
    for t in grid.points() {
        h.checked_at(t)?;
    }
    let mut substeps = opts.initial_substeps(grid, |t| h.at(t).frobenius_norm());
    let mut attempt = 0;
    loop {
        let (states, max_drift) = run_pure(h, psi0, grid, substeps);
        if max_drift <= DRIFT_TOL || attempt >= opts.max_refinements || opts.substeps.is_some() {
            if max_drift > DRIFT_FAIL {
                return Err(Error::IntegrationFailure {
                    reason: format!("norm drift with {substeps} substeps per interval"),
                    max_drift,
                });
            }
            return Ok(Trajectory {
                grid: *grid,
                states: States::Pure(states),
                diagnostics: PropagationDiagnostics {
                    substeps,
                    max_drift,
                    max_symmetrization: 0.0,
                    min_eigenvalue: 1.0,
                },
            });
        }
        substeps *= 2;
        attempt += 1;
    }
}

fn run_pure(
    h: &HamiltonianSchedule,
    psi0: &PureState,
    grid: &TimeGrid,
    substeps: usize,
) -> (Vec<PureState>, f64) {
    let dim = psi0.dim();
    let step = grid.dt() / substeps as f64;
    let mut psi = *psi0.array();
    let mut states = Vec::with_capacity(grid.n_points());
    states.push(*psi0);
    let mut max_drift: f64 = 0.0;
    for j in 0..grid.n_points() - 1 {
        let t0 = grid.point(j);
        for s in 0..substeps {
            psi = rk4_pure(h, t0 + s as f64 * step, step, &psi);
        }
        let state = PureState::from_array(dim, psi);
        let norm = state.norm();
        let drift = (norm - 1.0).abs();
        max_drift = max_drift.max(drift);
        let state = if drift < DRIFT_TOL {
            state.rescaled(1.0 / norm)
        } else {
            state
        };
        psi = *state.array();
        states.push(state);
    }
    (states, max_drift)
}

/// Integrates `drho/dt = L(rho)` with default options.
pub fn propagate_lindblad(
    model: &LindbladModel,
    rho0: &DensityMatrix,
    grid: &TimeGrid,
) -> Result<Trajectory> {
    propagate_lindblad_with(model, rho0, grid, &PropagationOptions::default())
}

pub fn propagate_lindblad_with(
    model: &LindbladModel,
    rho0: &DensityMatrix,
    grid: &TimeGrid,
    opts: &PropagationOptions,
) -> Result<Trajectory> {
    if rho0.dim() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            found: rho0.dim(),
        });
    }
    for t in grid.points() {
        model.hamiltonian.checked_at(t)?;
    }
    let mut substeps = opts.initial_substeps(grid, |t| model.generator_scale(t));
    let mut attempt = 0;
    loop {
        let (states, diag) = run_mixed(model, rho0, grid, substeps)?;
        if diag.max_drift <= DRIFT_TOL || attempt >= opts.max_refinements || opts.substeps.is_some()
        {
            if diag.max_drift > DRIFT_FAIL {
                return Err(Error::IntegrationFailure {
                    reason: format!("trace drift with {substeps} substeps per interval"),
                    max_drift: diag.max_drift,
                });
            }
            return Ok(Trajectory {
                grid: *grid,
                states: States::Mixed(states),
                diagnostics: diag,
            });
        }
        substeps *= 2;
        attempt += 1;
    }
}

fn run_mixed(
    model: &LindbladModel,
    rho0: &DensityMatrix,
    grid: &TimeGrid,
    substeps: usize,
) -> Result<(Vec<DensityMatrix>, PropagationDiagnostics)> {
    let step = grid.dt() / substeps as f64;
    let mut rho = *rho0.as_operator();
    let mut states = Vec::with_capacity(grid.n_points());
    states.push(*rho0);
    let mut diag = PropagationDiagnostics {
        substeps,
        min_eigenvalue: rho0.min_eigenvalue(),
        ..Default::default()
    };
    for j in 0..grid.n_points() - 1 {
        let t0 = grid.point(j);
        for s in 0..substeps {
            let t = t0 + s as f64 * step;
            let k1 = model.apply(t, &rho);
            let k2 = model.apply(t + 0.5 * step, &(rho + k1.scale_real(0.5 * step)));
            let k3 = model.apply(t + 0.5 * step, &(rho + k2.scale_real(0.5 * step)));
            let k4 = model.apply(t + step, &(rho + k3.scale_real(step)));
            let next = rho + (k1 + (k2 + k3).scale_real(2.0) + k4).scale_real(step / 6.0);
            let (sym, correction) = next.hermitian_part();
            diag.max_symmetrization = diag.max_symmetrization.max(correction);
            if correction > SYMMETRIZATION_TOL {
                return Err(Error::IntegrationFailure {
                    reason: format!("Hermiticity correction {correction:.3e} at t = {t}"),
                    max_drift: correction,
                });
            }
            rho = sym;
        }
        let tr = rho.trace().re;
        let drift = (tr - 1.0).abs();
        diag.max_drift = diag.max_drift.max(drift);
        if drift < DRIFT_TOL {
            rho = rho.scale_real(1.0 / tr);
        }
        let min_eig = rho.hermitian_eigenvalues()[0];
        diag.min_eigenvalue = diag.min_eigenvalue.min(min_eig);
        if min_eig < NEGATIVITY_FAIL {
            return Err(Error::IntegrationFailure {
                reason: format!("negative eigenvalue {min_eig:.3e} at t = {}", grid.point(j + 1)),
                max_drift: diag.max_drift,
            });
        }
        states.push(DensityMatrix::new_unchecked(rho));
    }
    Ok((states, diag))
}

/// Sign applied to `i[H, M]` when building a current-like operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    /// `+i[H, M]`: its expectation is `+dp/dt`.
    Plus,
    /// `-i[H, M]`.
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

fn ensure_idempotent(m: &Operator) -> Result<()> {
    m.ensure_hermitian()?;
    let defect = (*m * *m).max_abs_diff(m);
    if defect > crate::operators::HERMITIAN_TOL {
        return Err(Error::NotProjector(format!("|M^2 - M| = {defect:.3e}")));
    }
    Ok(())
}

/// `sign * i[H, M]`, Hermitian whenever `H` and `M` are.
pub fn current_operator(h: &Operator, m: &Operator, sign: Sign) -> Result<Operator> {
    let comm = commutator(h, m)?;
    h.ensure_hermitian()?;
    ensure_idempotent(m)?;
    Ok(comm.scale(C64::new(0.0, sign.value())))
}

/// `L^dagger(M)` evaluated with `H(t)`.
pub fn lindblad_adjoint(model: &LindbladModel, m: &Operator, t: f64) -> Result<Operator> {
    if m.dim() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            found: m.dim(),
        });
    }
    ensure_idempotent(m)?;
    Ok(model.apply_adjoint(t, m))
}

/// `p(t_j) = Tr(rho_j M)`, clamped to `[0, 1]`.
pub fn population_series(traj: &Trajectory, m: &Operator) -> Result<PopulationSeries> {
    if m.dim() != traj.dim() {
        return Err(Error::DimensionMismatch {
            expected: traj.dim(),
            found: m.dim(),
        });
    }
    let values = (0..traj.len())
        .map(|j| traj.expectation_at(j, m).map(|z| z.re.clamp(0.0, 1.0)))
        .collect::<Result<Vec<_>>>()?;
    PopulationSeries::new(*traj.grid(), values)
}
