//! Dense complex algebra for 2- and 3-level systems.
//!
//! Everything lives in fixed `3x3` storage with an explicit dimension so values
//! stay `Copy` and allocation free. Units follow the ħ = 1 convention: a
//! Hamiltonian's entries are angular frequencies.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const MAX_DIM: usize = 3;

/// Tolerance used for Hermiticity and projector checks.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Tolerance on state normalization and density-matrix trace.
pub const NORM_TOL: f64 = 1e-10;
/// Smallest eigenvalue accepted for a density matrix.
pub const EIGEN_FLOOR: f64 = -1e-9;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

fn check_dim(dim: usize) -> Result<()> {
    if dim == 2 || dim == 3 {
        Ok(())
    } else {
        Err(Error::UnsupportedDimension(dim))
    }
}

/// Pauli axis selector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
}

/// A square complex matrix of dimension 2 or 3.
#[derive(Clone, Copy, PartialEq)]
pub struct Operator {
    dim: usize,
    m: [[C64; MAX_DIM]; MAX_DIM],
}

impl fmt::Debug for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<Vec<C64>> = (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.m[i][j]).collect())
            .collect();
        f.debug_struct("Operator")
            .field("dim", &self.dim)
            .field("rows", &rows)
            .finish()
    }
}

impl Operator {
    pub fn zeros(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self {
            dim,
            m: [[ZERO; MAX_DIM]; MAX_DIM],
        })
    }

    pub fn identity(dim: usize) -> Result<Self> {
        let mut op = Self::zeros(dim)?;
        for i in 0..dim {
            op.m[i][i] = ONE;
        }
        Ok(op)
    }

    /// Builds an operator from row-major rows; all rows must have `rows.len()` entries.
    pub fn from_rows<R: AsRef<[C64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.len();
        let mut op = Self::zeros(dim)?;
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: row.len(),
                });
            }
            op.m[i][..dim].copy_from_slice(row);
        }
        Ok(op)
    }

    pub fn from_real_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let complex: Vec<Vec<C64>> = rows
            .iter()
            .map(|r| r.as_ref().iter().map(|&x| C64::new(x, 0.0)).collect())
            .collect();
        Self::from_rows(&complex)
    }

    pub fn diagonal(entries: &[f64]) -> Result<Self> {
        let mut op = Self::zeros(entries.len())?;
        for (i, &d) in entries.iter().enumerate() {
            op.m[i][i] = C64::new(d, 0.0);
        }
        Ok(op)
    }

    /// The dyad `|ket><bra|`.
    pub fn outer(ket: &PureState, bra: &PureState) -> Result<Self> {
        ensure_same(ket.dim, bra.dim)?;
        let mut op = Self::zeros(ket.dim)?;
        for i in 0..ket.dim {
            for j in 0..ket.dim {
                op.m[i][j] = ket.amp[i] * bra.amp[j].conj();
            }
        }
        Ok(op)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn dagger(&self) -> Self {
        let mut out = *self;
        for i in 0..self.dim {
            for j in 0..self.dim {
                out.m[i][j] = self.m[j][i].conj();
            }
        }
        out
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self.m[i][i]).sum()
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut out = *self;
        for i in 0..self.dim {
            for j in 0..self.dim {
                out.m[i][j] *= s;
            }
        }
        out
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    /// Largest entrywise modulus.
    pub fn max_abs(&self) -> f64 {
        self.entries().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `max |A - B|` entrywise.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        if self.dim != other.dim {
            return f64::INFINITY;
        }
        (*self - *other).max_abs()
    }

    /// `max |A - A^dagger|` entrywise.
    pub fn hermitian_defect(&self) -> f64 {
        self.max_abs_diff(&self.dagger())
    }

    /// `max |A + A^dagger|` entrywise.
    pub fn anti_hermitian_defect(&self) -> f64 {
        (*self + self.dagger()).max_abs()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_defect() <= tol
    }

    pub fn ensure_hermitian(&self) -> Result<()> {
        let defect = self.hermitian_defect();
        if defect <= HERMITIAN_TOL {
            Ok(())
        } else {
            Err(Error::NotHermitian(defect))
        }
    }

    /// `(A + A^dagger) / 2`; returns the symmetrized operator and the size of the correction.
    pub fn hermitian_part(&self) -> (Self, f64) {
        let sym = (*self + self.dagger()).scale_real(0.5);
        let correction = self.max_abs_diff(&sym);
        (sym, correction)
    }

    /// Rank-1 projector test: `A^2 = A` and `Tr A = 1`.
    pub fn is_projector(&self, tol: f64) -> bool {
        self.is_hermitian(tol)
            && (*self * *self).max_abs_diff(self) <= tol
            && (self.trace() - ONE).norm() <= tol
    }

    pub fn ensure_projector(&self) -> Result<()> {
        if self.is_projector(HERMITIAN_TOL) {
            Ok(())
        } else {
            Err(Error::NotProjector(format!(
                "|A^2 - A| = {:.3e}, Tr A = {}",
                (*self * *self).max_abs_diff(self),
                self.trace()
            )))
        }
    }

    /// Applies the operator to a state vector (no renormalization).
    pub fn apply(&self, v: &[C64; MAX_DIM]) -> [C64; MAX_DIM] {
        let mut out = [ZERO; MAX_DIM];
        for i in 0..self.dim {
            out[i] = (0..self.dim).map(|j| self.m[i][j] * v[j]).sum();
        }
        out
    }

    pub fn determinant(&self) -> C64 {
        let m = &self.m;
        match self.dim {
            2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
            _ => {
                m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                    - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                    + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
            }
        }
    }

    /// Eigenvalues of a Hermitian operator in ascending order, from the
    /// characteristic polynomial. The anti-Hermitian part is ignored.
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        let (h, _) = self.hermitian_part();
        let a = |i: usize, j: usize| h.m[i][j];
        let mut eig = match self.dim {
            2 => {
                let mean = 0.5 * (a(0, 0).re + a(1, 1).re);
                let half_gap = 0.5 * (a(0, 0).re - a(1, 1).re);
                let r = (half_gap * half_gap + a(0, 1).norm_sqr()).sqrt();
                vec![mean - r, mean + r]
            }
            _ => {
                let p1 = a(0, 1).norm_sqr() + a(0, 2).norm_sqr() + a(1, 2).norm_sqr();
                let q = h.trace().re / 3.0;
                let d = [a(0, 0).re - q, a(1, 1).re - q, a(2, 2).re - q];
                let p2 = d.iter().map(|x| x * x).sum::<f64>() + 2.0 * p1;
                if p2 <= f64::MIN_POSITIVE {
                    vec![q; 3]
                } else {
                    let p = (p2 / 6.0).sqrt();
                    let shifted = (h - Operator::identity(3).unwrap().scale_real(q)).scale_real(1.0 / p);
                    let r = (0.5 * shifted.determinant().re).clamp(-1.0, 1.0);
                    let phi = r.acos() / 3.0;
                    let hi = q + 2.0 * p * phi.cos();
                    let lo = q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos();
                    vec![lo, 3.0 * q - hi - lo, hi]
                }
            }
        };
        eig.sort_by(|x, y| x.total_cmp(y));
        eig
    }

    fn entries(&self) -> impl Iterator<Item = C64> + '_ {
        (0..self.dim).flat_map(move |i| (0..self.dim).map(move |j| self.m[i][j]))
    }
}

fn ensure_same(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

impl Index<(usize, usize)> for Operator {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        assert!(i < self.dim && j < self.dim, "index out of range");
        &self.m[i][j]
    }
}

impl IndexMut<(usize, usize)> for Operator {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        assert!(i < self.dim && j < self.dim, "index out of range");
        &mut self.m[i][j]
    }
}

impl Add for Operator {
    type Output = Operator;
    fn add(mut self, rhs: Operator) -> Operator {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch in operator sum");
        for i in 0..self.dim {
            for j in 0..self.dim {
                self.m[i][j] += rhs.m[i][j];
            }
        }
        self
    }
}

impl AddAssign for Operator {
    fn add_assign(&mut self, rhs: Operator) {
        *self = *self + rhs;
    }
}

impl Sub for Operator {
    type Output = Operator;
    fn sub(self, rhs: Operator) -> Operator {
        self + (-rhs)
    }
}

impl Neg for Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        self.scale_real(-1.0)
    }
}

impl Mul for Operator {
    type Output = Operator;
    fn mul(self, rhs: Operator) -> Operator {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch in operator product");
        let mut out = Operator {
            dim: self.dim,
            m: [[ZERO; MAX_DIM]; MAX_DIM],
        };
        for i in 0..self.dim {
            for j in 0..self.dim {
                out.m[i][j] = (0..self.dim).map(|k| self.m[i][k] * rhs.m[k][j]).sum();
            }
        }
        out
    }
}

impl Mul<Operator> for C64 {
    type Output = Operator;
    fn mul(self, rhs: Operator) -> Operator {
        rhs.scale(self)
    }
}

impl Mul<Operator> for f64 {
    type Output = Operator;
    fn mul(self, rhs: Operator) -> Operator {
        rhs.scale_real(self)
    }
}

/// The 2x2 Pauli matrix along `axis`.
pub fn pauli(axis: Axis) -> Operator {
    let rows = match axis {
        Axis::X => [[ZERO, ONE], [ONE, ZERO]],
        Axis::Y => [[ZERO, -I], [I, ZERO]],
        Axis::Z => [[ONE, ZERO], [ZERO, -ONE]],
    };
    Operator::from_rows(&rows).expect("2x2 literal")
}

/// `|k><k|` in the computational basis.
pub fn projector(dim: usize, k: usize) -> Result<Operator> {
    let basis = PureState::basis(dim, k)?;
    projector_onto(&basis)
}

/// `|psi><psi|` for a normalized state.
pub fn projector_onto(state: &PureState) -> Result<Operator> {
    Operator::outer(state, state)
}

/// `AB - BA`.
pub fn commutator(a: &Operator, b: &Operator) -> Result<Operator> {
    ensure_same(a.dim, b.dim)?;
    Ok(*a * *b - *b * *a)
}

/// `AB + BA`.
pub fn anticommutator(a: &Operator, b: &Operator) -> Result<Operator> {
    ensure_same(a.dim, b.dim)?;
    Ok(*a * *b + *b * *a)
}

/// `exp(-i phi sigma_axis) = cos(phi) I - i sin(phi) sigma_axis`.
pub fn su2_exponential(phi: f64, axis: Axis) -> Operator {
    let id = Operator::identity(2).expect("dim 2");
    let (s, c) = phi.sin_cos();
    id.scale_real(c) + pauli(axis).scale(C64::new(0.0, -s))
}

/// Normalized state vector of dimension 2 or 3.
#[derive(Clone, Copy, PartialEq)]
pub struct PureState {
    dim: usize,
    amp: [C64; MAX_DIM],
}

impl fmt::Debug for PureState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("PureState").field(&self.amplitudes()).finish()
    }
}

impl PureState {
    /// Validating constructor; the norm must be 1 within [`NORM_TOL`].
    pub fn new(amplitudes: &[C64]) -> Result<Self> {
        let state = Self::raw(amplitudes)?;
        let dev = (state.norm() - 1.0).abs();
        if dev > NORM_TOL {
            return Err(Error::NotNormalized(dev));
        }
        Ok(state)
    }

    /// Normalizes arbitrary nonzero amplitudes.
    pub fn normalized(amplitudes: &[C64]) -> Result<Self> {
        let state = Self::raw(amplitudes)?;
        let n = state.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::invalid("cannot normalize a zero or non-finite vector"));
        }
        Ok(state.rescaled(1.0 / n))
    }

    fn raw(amplitudes: &[C64]) -> Result<Self> {
        check_dim(amplitudes.len())?;
        let mut amp = [ZERO; MAX_DIM];
        amp[..amplitudes.len()].copy_from_slice(amplitudes);
        Ok(Self {
            dim: amplitudes.len(),
            amp,
        })
    }

    pub(crate) fn from_array(dim: usize, amp: [C64; MAX_DIM]) -> Self {
        Self { dim, amp }
    }

    pub fn basis(dim: usize, k: usize) -> Result<Self> {
        check_dim(dim)?;
        if k >= dim {
            return Err(Error::IndexOutOfRange { index: k, dim });
        }
        let mut amp = [ZERO; MAX_DIM];
        amp[k] = ONE;
        Ok(Self { dim, amp })
    }

    /// `(|0> + |1>)/sqrt(2)`.
    pub fn plus() -> Self {
        let a = C64::new(FRAC_1_SQRT_2, 0.0);
        Self::from_array(2, [a, a, ZERO])
    }

    /// `(|0> - |1>)/sqrt(2)`.
    pub fn minus() -> Self {
        let a = C64::new(FRAC_1_SQRT_2, 0.0);
        Self::from_array(2, [a, -a, ZERO])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amp[..self.dim]
    }

    pub(crate) fn array(&self) -> &[C64; MAX_DIM] {
        &self.amp
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes().iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub(crate) fn rescaled(mut self, s: f64) -> Self {
        for a in self.amp.iter_mut() {
            *a *= s;
        }
        self
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &PureState) -> Result<C64> {
        ensure_same(self.dim, other.dim)?;
        Ok((0..self.dim).map(|i| self.amp[i].conj() * other.amp[i]).sum())
    }

    pub fn apply(&self, op: &Operator) -> Result<PureState> {
        ensure_same(op.dim, self.dim)?;
        Ok(Self::from_array(self.dim, op.apply(&self.amp)))
    }
}

/// A positive semidefinite, unit-trace, Hermitian matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensityMatrix {
    op: Operator,
}

impl DensityMatrix {
    /// Validating constructor: Hermitian, unit trace, smallest eigenvalue ≥ [`EIGEN_FLOOR`].
    pub fn new(op: Operator) -> Result<Self> {
        op.ensure_hermitian()
            .map_err(|e| Error::InvalidDensityMatrix(e.to_string()))?;
        let tr = op.trace();
        if (tr - ONE).norm() > NORM_TOL {
            return Err(Error::InvalidDensityMatrix(format!("trace {tr} != 1")));
        }
        let min_eig = op.hermitian_eigenvalues()[0];
        if min_eig < EIGEN_FLOOR {
            return Err(Error::InvalidDensityMatrix(format!(
                "negative eigenvalue {min_eig:.3e}"
            )));
        }
        Ok(Self { op })
    }

    pub(crate) fn new_unchecked(op: Operator) -> Self {
        Self { op }
    }

    pub fn from_pure(state: &PureState) -> Self {
        Self {
            op: projector_onto(state).expect("same dim"),
        }
    }

    /// The maximally mixed state `I/dim`.
    pub fn maximally_mixed(dim: usize) -> Result<Self> {
        Ok(Self {
            op: Operator::identity(dim)?.scale_real(1.0 / dim as f64),
        })
    }

    pub fn dim(&self) -> usize {
        self.op.dim
    }

    pub fn as_operator(&self) -> &Operator {
        &self.op
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.op.hermitian_eigenvalues()[0]
    }
}

/// Quantum expectation values.
pub trait Expectation {
    fn expectation(&self, op: &Operator) -> Result<C64>;
}

impl Expectation for PureState {
    /// `<psi|A|psi>`.
    fn expectation(&self, op: &Operator) -> Result<C64> {
        ensure_same(op.dim, self.dim)?;
        let a_psi = op.apply(&self.amp);
        Ok((0..self.dim).map(|i| self.amp[i].conj() * a_psi[i]).sum())
    }
}

impl Expectation for DensityMatrix {
    /// `Tr(rho A)`.
    fn expectation(&self, op: &Operator) -> Result<C64> {
        ensure_same(op.dim, self.op.dim)?;
        Ok((self.op * *op).trace())
    }
}

/// Free-function form of [`Expectation::expectation`].
pub fn expectation<S: Expectation + ?Sized>(state: &S, op: &Operator) -> Result<C64> {
    state.expectation(op)
}
