//! Exact finite-dimensional pure states over tensor products of polarization
//! qubits and laboratory clock registers.
//!
//! A clock register is spanned by the finitely many [`ClockLabel`]s that
//! actually occur in a run. Labels that agree on every field (after
//! quantization at [`TAU_TOL`]) are the same basis vector; all other labels
//! are orthogonal.

use std::f64::consts::LN_2;
use std::fmt;

use nalgebra::{DMatrix, Matrix3, Matrix4, Vector3};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type C64 = Complex64;

/// Resolution at which clock readings, rest epochs and accelerations are
/// compared.
pub const TAU_TOL: f64 = 1e-9;
const UNITARY_TOL: f64 = 1e-12;
const DIRECTION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuantumError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("factor index {index} out of range for {len} factors")]
    FactorIndex { index: usize, len: usize },
    #[error("factor {0} is not a clock register")]
    NotClock(usize),
    #[error("clock label {0} is not part of the register")]
    UnknownLabel(String),
    #[error("clock register repeats label {0}")]
    DuplicateLabel(String),
    #[error("relabelling merges distinct clock labels into {0}")]
    NonInjective(String),
    #[error("matrix is not unitary (max deviation {0:e})")]
    NotUnitary(f64),
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("cannot normalize the zero vector")]
    ZeroVector,
    #[error("expected a two-qubit state, got factor dimensions {0:?}")]
    NotTwoQubit(Vec<usize>),
    #[error("bipartition must leave both sides non-empty; got {0:?}")]
    BadCut(Vec<usize>),
    #[error("measurement direction {name} is not a unit vector (norm {norm})")]
    NotUnitDirection { name: &'static str, norm: f64 },
    #[error("density matrix invalid: {0}")]
    BadDensity(String),
    #[error("empty tensor product")]
    EmptyProduct,
}

pub type Result<T> = std::result::Result<T, QuantumError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Color {
    Amber,
    Blue,
    Cyan,
}

/// Abstract state of a laboratory clock.
///
/// `tau` is the proper-time reading accumulated while accelerating,
/// `rest_epoch` the inertial time elapsed after the laboratory was brought to
/// rest, and `acceleration` the signed proper acceleration it had (negative in
/// the Left wedge).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ClockLabel {
    pub tau: f64,
    pub rest_epoch: f64,
    pub acceleration: f64,
    pub color: Color,
}

fn quantize(v: f64) -> i64 {
    (v / TAU_TOL).round() as i64
}

impl ClockLabel {
    pub fn new(tau: f64, rest_epoch: f64, acceleration: f64, color: Color) -> Self {
        ClockLabel { tau, rest_epoch, acceleration, color }
    }

    /// Clock of a laboratory at `t = 0`, before anything happened.
    pub fn initial(acceleration: f64, color: Color) -> Self {
        ClockLabel::new(0.0, 0.0, acceleration, color)
    }

    /// Total reading: accelerated proper time plus time spent at rest.
    pub fn reading(&self) -> f64 {
        self.tau + self.rest_epoch
    }

    fn key(&self) -> (i64, i64, i64, Color) {
        (quantize(self.tau), quantize(self.rest_epoch), quantize(self.acceleration), self.color)
    }
}

impl PartialEq for ClockLabel {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}

impl fmt::Display for ClockLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|{:.9}+{:.9}, {:?}, a={:.9}>", self.tau, self.rest_epoch, self.color, self.acceleration)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Factor {
    Qubit,
    Clock(Vec<ClockLabel>),
}

impl Factor {
    pub fn clock(labels: Vec<ClockLabel>) -> Result<Self> {
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(QuantumError::DuplicateLabel(l.to_string()));
            }
        }
        if labels.is_empty() {
            return Err(QuantumError::Dimension { expected: 1, got: 0 });
        }
        Ok(Factor::Clock(labels))
    }

    pub fn dim(&self) -> usize {
        match self {
            Factor::Qubit => 2,
            Factor::Clock(labels) => labels.len(),
        }
    }

    pub fn labels(&self) -> Option<&[ClockLabel]> {
        match self {
            Factor::Qubit => None,
            Factor::Clock(l) => Some(l),
        }
    }

    fn label_index(&self, label: &ClockLabel) -> Result<usize> {
        self.labels()
            .and_then(|ls| ls.iter().position(|l| l == label))
            .ok_or_else(|| QuantumError::UnknownLabel(label.to_string()))
    }
}

/// Ordered tensor product of factors; the last factor varies fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompositeSpace {
    factors: Vec<Factor>,
}

impl CompositeSpace {
    pub fn new(factors: Vec<Factor>) -> Self {
        CompositeSpace { factors }
    }

    pub fn qubit() -> Self {
        CompositeSpace::new(vec![Factor::Qubit])
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn dims(&self) -> Vec<usize> {
        self.factors.iter().map(Factor::dim).collect()
    }

    pub fn dim(&self) -> usize {
        self.factors.iter().map(Factor::dim).product()
    }

    fn stride(&self, k: usize) -> usize {
        self.factors[k + 1..].iter().map(Factor::dim).product()
    }

    fn check_index(&self, k: usize) -> Result<()> {
        if k >= self.factors.len() {
            return Err(QuantumError::FactorIndex { index: k, len: self.factors.len() });
        }
        Ok(())
    }

    fn without(&self, k: usize) -> CompositeSpace {
        let mut factors = self.factors.clone();
        factors.remove(k);
        CompositeSpace { factors }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ket {
    space: CompositeSpace,
    amplitudes: Vec<C64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementOutcome {
    pub probability: f64,
    /// `None` when the outcome has zero probability and no state survives.
    pub post_state: Option<Ket>,
}

impl Ket {
    pub fn new(space: CompositeSpace, amplitudes: Vec<C64>) -> Result<Self> {
        if space.dim() != amplitudes.len() {
            return Err(QuantumError::Dimension { expected: space.dim(), got: amplitudes.len() });
        }
        Ok(Ket { space, amplitudes })
    }

    /// Normalized single-qubit state `a|0> + b|1>`.
    pub fn qubit(a: C64, b: C64) -> Result<Self> {
        Ket::new(CompositeSpace::qubit(), vec![a, b])?.normalized()
    }

    pub fn zero() -> Self {
        Ket { space: CompositeSpace::qubit(), amplitudes: vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)] }
    }

    pub fn one() -> Self {
        Ket { space: CompositeSpace::qubit(), amplitudes: vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0)] }
    }

    pub fn plus() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Ket { space: CompositeSpace::qubit(), amplitudes: vec![C64::new(h, 0.0), C64::new(h, 0.0)] }
    }

    pub fn minus() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Ket { space: CompositeSpace::qubit(), amplitudes: vec![C64::new(h, 0.0), C64::new(-h, 0.0)] }
    }

    /// Computational basis vector with one index per factor.
    pub fn basis(space: CompositeSpace, indices: &[usize]) -> Result<Self> {
        let dims = space.dims();
        if indices.len() != dims.len() {
            return Err(QuantumError::Dimension { expected: dims.len(), got: indices.len() });
        }
        let mut idx = 0;
        for (k, (&i, &d)) in indices.iter().zip(&dims).enumerate() {
            if i >= d {
                return Err(QuantumError::Dimension { expected: d, got: i + 1 });
            }
            idx += i * space.stride(k);
        }
        let mut amplitudes = vec![C64::new(0.0, 0.0); space.dim()];
        amplitudes[idx] = C64::new(1.0, 0.0);
        Ok(Ket { space, amplitudes })
    }

    /// Basis vector `|label>` of a clock register spanned by `labels`.
    pub fn clock(labels: &[ClockLabel], label: &ClockLabel) -> Result<Self> {
        let factor = Factor::clock(labels.to_vec())?;
        let i = factor.label_index(label)?;
        Ket::basis(CompositeSpace::new(vec![factor]), &[i])
    }

    /// Sum `sum_i c_i |k_i>` of kets sharing one space (not renormalized).
    pub fn superpose(terms: &[(C64, &Ket)]) -> Result<Self> {
        let first = terms.first().ok_or(QuantumError::EmptyProduct)?.1;
        let mut amplitudes = vec![C64::new(0.0, 0.0); first.dim()];
        for (c, k) in terms {
            if k.space != first.space {
                return Err(QuantumError::Dimension { expected: first.dim(), got: k.dim() });
            }
            for (a, b) in amplitudes.iter_mut().zip(&k.amplitudes) {
                *a += c * b;
            }
        }
        Ok(Ket { space: first.space.clone(), amplitudes })
    }

    pub fn space(&self) -> &CompositeSpace {
        &self.space
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(QuantumError::ZeroVector);
        }
        Ok(self.scaled(C64::new(1.0 / n, 0.0)))
    }

    pub fn scaled(&self, c: C64) -> Self {
        Ket { space: self.space.clone(), amplitudes: self.amplitudes.iter().map(|a| a * c).collect() }
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Ket) -> Result<C64> {
        if self.dim() != other.dim() {
            return Err(QuantumError::Dimension { expected: self.dim(), got: other.dim() });
        }
        Ok(self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum())
    }

    /// `|<self|other>|^2 / (<self|self><other|other>)`: overlap up to global
    /// phase and normalization.
    pub fn fidelity(&self, other: &Ket) -> Result<f64> {
        let ip = self.inner(other)?;
        let n = self.norm() * other.norm();
        if n == 0.0 {
            return Err(QuantumError::ZeroVector);
        }
        Ok(ip.norm_sqr() / (n * n))
    }

    pub fn apply_on_factor(&self, u: &Unitary, k: usize) -> Result<Ket> {
        self.space.check_index(k)?;
        let d = self.space.factors[k].dim();
        if u.dim() != d {
            return Err(QuantumError::Dimension { expected: d, got: u.dim() });
        }
        let mut out = self.amplitudes.clone();
        self.for_each_fiber(k, |fiber| {
            let input: Vec<C64> = fiber.iter().map(|&i| self.amplitudes[i]).collect();
            for (row, &i) in fiber.iter().enumerate() {
                out[i] = (0..d).map(|col| u.matrix[(row, col)] * input[col]).sum();
            }
        });
        Ok(Ket { space: self.space.clone(), amplitudes: out })
    }

    /// Applies `select(label)` to the `target` factor on every clock-basis
    /// component of the `control` register; `None` leaves it untouched.
    pub fn apply_controlled<'u, F>(&self, control: usize, target: usize, select: F) -> Result<Ket>
    where
        F: Fn(&ClockLabel) -> Option<&'u Unitary>,
    {
        self.space.check_index(control)?;
        self.space.check_index(target)?;
        let labels = self.space.factors[control].labels().ok_or(QuantumError::NotClock(control))?.to_vec();
        if control == target {
            return Err(QuantumError::FactorIndex { index: target, len: self.space.factors.len() });
        }
        let mut out = self.clone();
        for (c, label) in labels.iter().enumerate() {
            let Some(u) = select(label) else { continue };
            let branch = self.restricted_to(control, c);
            let moved = branch.apply_on_factor(u, target)?;
            let stride = self.space.stride(control);
            let d = labels.len();
            for i in 0..self.dim() {
                if (i / stride) % d == c {
                    out.amplitudes[i] = moved.amplitudes[i];
                }
            }
        }
        Ok(out)
    }

    /// Maps each label of clock register `k` to a new label. The map must be
    /// injective on the register, so the operation is an isometry.
    pub fn relabel_clock<F>(&self, k: usize, map: F) -> Result<Ket>
    where
        F: Fn(&ClockLabel) -> ClockLabel,
    {
        self.space.check_index(k)?;
        let labels = self.space.factors[k].labels().ok_or(QuantumError::NotClock(k))?;
        let mapped: Vec<ClockLabel> = labels.iter().map(map).collect();
        for (i, l) in mapped.iter().enumerate() {
            if mapped[..i].contains(l) {
                return Err(QuantumError::NonInjective(l.to_string()));
            }
        }
        let mut space = self.space.clone();
        space.factors[k] = Factor::Clock(mapped);
        Ok(Ket { space, amplitudes: self.amplitudes.clone() })
    }

    /// Full projective measurement onto `basis_vector` (same space).
    pub fn project(&self, basis_vector: &Ket) -> Result<MeasurementOutcome> {
        let bn = basis_vector.norm();
        if bn == 0.0 {
            return Err(QuantumError::ZeroVector);
        }
        if basis_vector.space.dims() != self.space.dims() {
            return Err(QuantumError::Dimension { expected: self.dim(), got: basis_vector.dim() });
        }
        let amp = basis_vector.inner(self)? / bn;
        let probability = amp.norm_sqr();
        let post_state = (probability > 0.0).then(|| basis_vector.normalized().expect("nonzero"));
        Ok(MeasurementOutcome { probability, post_state })
    }

    /// Partial inner product `<v|_k |self>`: contracts factor `k` with `v`
    /// and drops it from the space. The result is not renormalized.
    pub fn contract_factor(&self, k: usize, v: &Ket) -> Result<Ket> {
        self.space.check_index(k)?;
        let factor = &self.space.factors[k];
        if v.space.factors.len() != 1 || v.space.factors[0] != *factor {
            return Err(QuantumError::Dimension { expected: factor.dim(), got: v.dim() });
        }
        let reduced = self.space.without(k);
        let mut amplitudes = vec![C64::new(0.0, 0.0); reduced.dim()];
        let stride = self.space.stride(k);
        let d = factor.dim();
        for (i, a) in self.amplitudes.iter().enumerate() {
            let j = (i / stride) % d;
            let outer = i / (stride * d);
            let inner = i % stride;
            amplitudes[outer * stride + inner] += v.amplitudes[j].conj() * a;
        }
        Ok(Ket { space: reduced, amplitudes })
    }

    /// Measurement of factor `k` alone, with outcome `v`; the post-state is
    /// the renormalized state of the remaining factors.
    pub fn project_factor(&self, k: usize, v: &Ket) -> Result<MeasurementOutcome> {
        let vn = v.norm();
        if vn == 0.0 {
            return Err(QuantumError::ZeroVector);
        }
        let rest = self.contract_factor(k, &v.scaled(C64::new(1.0 / vn, 0.0)))?;
        let n = rest.norm();
        let probability = n * n;
        let post_state = (n > 0.0).then(|| rest.scaled(C64::new(1.0 / n, 0.0)));
        Ok(MeasurementOutcome { probability, post_state })
    }

    /// Component of the state with register `k` in basis state `c`.
    fn restricted_to(&self, k: usize, c: usize) -> Ket {
        let stride = self.space.stride(k);
        let d = self.space.factors[k].dim();
        let amplitudes = self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(i, &a)| if (i / stride) % d == c { a } else { C64::new(0.0, 0.0) })
            .collect();
        Ket { space: self.space.clone(), amplitudes }
    }

    /// Calls `f` with the flat indices of every one-dimensional fiber along
    /// factor `k`.
    fn for_each_fiber<F: FnMut(&[usize])>(&self, k: usize, mut f: F) {
        let stride = self.space.stride(k);
        let d = self.space.factors[k].dim();
        let outer_count = self.dim() / (stride * d);
        let mut fiber = vec![0usize; d];
        for outer in 0..outer_count {
            for inner in 0..stride {
                for (j, slot) in fiber.iter_mut().enumerate() {
                    *slot = outer * stride * d + j * stride + inner;
                }
                f(&fiber);
            }
        }
    }
}

/// Kronecker product of kets, first argument outermost.
pub fn tensor(kets: &[Ket]) -> Result<Ket> {
    let (first, rest) = kets.split_first().ok_or(QuantumError::EmptyProduct)?;
    let mut acc = first.clone();
    for k in rest {
        let mut amplitudes = Vec::with_capacity(acc.dim() * k.dim());
        for a in &acc.amplitudes {
            for b in &k.amplitudes {
                amplitudes.push(a * b);
            }
        }
        let mut factors = acc.space.factors;
        factors.extend(k.space.factors.iter().cloned());
        acc = Ket { space: CompositeSpace::new(factors), amplitudes };
    }
    Ok(acc)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Unitary {
    matrix: DMatrix<C64>,
}

impl Unitary {
    pub fn new(matrix: DMatrix<C64>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(QuantumError::NotSquare { rows: matrix.nrows(), cols: matrix.ncols() });
        }
        let n = matrix.nrows();
        let gram = matrix.adjoint() * &matrix;
        let dev = (gram - DMatrix::<C64>::identity(n, n)).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if dev > UNITARY_TOL {
            return Err(QuantumError::NotUnitary(dev));
        }
        Ok(Unitary { matrix })
    }

    /// Builds a 2x2 unitary from row-major entries.
    pub fn from_rows2(rows: [[C64; 2]; 2]) -> Result<Self> {
        Unitary::new(DMatrix::from_row_slice(2, 2, &[rows[0][0], rows[0][1], rows[1][0], rows[1][1]]))
    }

    fn real2(a: f64, b: f64, c: f64, d: f64) -> Self {
        Unitary { matrix: DMatrix::from_row_slice(2, 2, &[c64(a), c64(b), c64(c), c64(d)]) }
    }

    pub fn identity(n: usize) -> Self {
        Unitary { matrix: DMatrix::identity(n, n) }
    }

    pub fn pauli_x() -> Self {
        Unitary::real2(0.0, 1.0, 1.0, 0.0)
    }

    pub fn pauli_y() -> Self {
        let i = C64::new(0.0, 1.0);
        Unitary { matrix: DMatrix::from_row_slice(2, 2, &[c64(0.0), -i, i, c64(0.0)]) }
    }

    pub fn pauli_z() -> Self {
        Unitary::real2(1.0, 0.0, 0.0, -1.0)
    }

    pub fn hadamard() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Unitary::real2(h, h, h, -h)
    }

    /// `diag(1, e^{i phi})`.
    pub fn phase(phi: f64) -> Self {
        Unitary { matrix: DMatrix::from_row_slice(2, 2, &[c64(1.0), c64(0.0), c64(0.0), C64::from_polar(1.0, phi)]) }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    /// `self * other` (apply `other` first).
    pub fn then_after(&self, other: &Unitary) -> Unitary {
        Unitary { matrix: &self.matrix * &other.matrix }
    }

    pub fn with_global_phase(&self, phi: f64) -> Unitary {
        Unitary { matrix: &self.matrix * C64::from_polar(1.0, phi) }
    }

    pub fn adjoint(&self) -> Unitary {
        Unitary { matrix: self.matrix.adjoint() }
    }

    /// Applies the matrix to a single-factor ket.
    pub fn apply(&self, k: &Ket) -> Result<Ket> {
        if k.space.factors.len() != 1 {
            return Err(QuantumError::Dimension { expected: 1, got: k.space.factors.len() });
        }
        k.apply_on_factor(self, 0)
    }
}

fn c64(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn entropy_bits(probs: impl IntoIterator<Item = f64>) -> f64 {
    probs.into_iter().filter(|&p| p > 0.0).map(|p| -p * p.ln() / LN_2).sum::<f64>().max(0.0)
}

/// Entanglement entropy (bits) across the cut separating factors `side`
/// from the rest, from the Schmidt coefficients of the normalized state.
pub fn schmidt_entropy(s: &Ket, side: &[usize]) -> Result<f64> {
    let n = s.space.factors.len();
    let mut a_side: Vec<usize> = side.to_vec();
    a_side.sort_unstable();
    a_side.dedup();
    if a_side.is_empty() || a_side.len() >= n || a_side.iter().any(|&k| k >= n) {
        return Err(QuantumError::BadCut(side.to_vec()));
    }
    let s = s.normalized()?;
    let dims = s.space.dims();
    let b_side: Vec<usize> = (0..n).filter(|k| !a_side.contains(k)).collect();
    let da: usize = a_side.iter().map(|&k| dims[k]).product();
    let db: usize = b_side.iter().map(|&k| dims[k]).product();
    let mut m = DMatrix::<C64>::zeros(da, db);
    let mut digits = vec![0usize; n];
    for (flat, amp) in s.amplitudes.iter().enumerate() {
        let mut rem = flat;
        for k in (0..n).rev() {
            digits[k] = rem % dims[k];
            rem /= dims[k];
        }
        let row = a_side.iter().fold(0, |acc, &k| acc * dims[k] + digits[k]);
        let col = b_side.iter().fold(0, |acc, &k| acc * dims[k] + digits[k]);
        m[(row, col)] = *amp;
    }
    let sv = m.singular_values();
    Ok(entropy_bits(sv.iter().map(|x| x * x)))
}

/// Density matrix of two qubits, used for CHSH evaluation of both pure and
/// mixed post-selected states.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoQubitState {
    rho: Matrix4<C64>,
}

impl TwoQubitState {
    pub fn from_ket(k: &Ket) -> Result<Self> {
        let dims = k.space.dims();
        if dims != [2, 2] {
            return Err(QuantumError::NotTwoQubit(dims));
        }
        let k = k.normalized()?;
        let v = nalgebra::Vector4::from_iterator(k.amplitudes.iter().copied());
        Ok(TwoQubitState { rho: v * v.adjoint() })
    }

    /// Hermitian, unit-trace, positive semidefinite 4x4 matrix.
    pub fn from_density(rho: Matrix4<C64>) -> Result<Self> {
        let herm = (rho - rho.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if herm > 1e-10 {
            return Err(QuantumError::BadDensity(format!("not Hermitian (deviation {herm:e})")));
        }
        let tr = rho.trace();
        if (tr.re - 1.0).abs() > 1e-10 || tr.im.abs() > 1e-10 {
            return Err(QuantumError::BadDensity(format!("trace {tr}")));
        }
        let eig = rho.symmetric_eigenvalues();
        if eig.iter().any(|&l| l < -1e-10) {
            return Err(QuantumError::BadDensity("negative eigenvalue".into()));
        }
        Ok(TwoQubitState { rho })
    }

    pub fn density(&self) -> &Matrix4<C64> {
        &self.rho
    }

    /// `T_ij = Tr(rho sigma_i (x) sigma_j)`.
    pub fn correlation_matrix(&self) -> Matrix3<f64> {
        let paulis = [Unitary::pauli_x(), Unitary::pauli_y(), Unitary::pauli_z()];
        let mut t = Matrix3::zeros();
        for i in 0..3 {
            for j in 0..3 {
                let op = paulis[i].matrix.kronecker(&paulis[j].matrix);
                let mut tr = C64::new(0.0, 0.0);
                for r in 0..4 {
                    for c in 0..4 {
                        tr += self.rho[(r, c)] * op[(c, r)];
                    }
                }
                t[(i, j)] = tr.re;
            }
        }
        t
    }

    /// Von Neumann entropy (bits) of the whole state; zero for pure states.
    pub fn entropy(&self) -> f64 {
        entropy_bits(self.rho.symmetric_eigenvalues().iter().copied())
    }
}

/// Unit Bloch directions for the four CHSH observables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChshSettings {
    pub a0: [f64; 3],
    pub a1: [f64; 3],
    pub b0: [f64; 3],
    pub b1: [f64; 3],
}

/// Unit vector at polar angle `theta`, azimuth `phi`.
pub fn bloch(theta: f64, phi: f64) -> [f64; 3] {
    [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()]
}

impl ChshSettings {
    fn vectors(&self) -> Result<[Vector3<f64>; 4]> {
        let named = [("a0", self.a0), ("a1", self.a1), ("b0", self.b0), ("b1", self.b1)];
        let mut out = [Vector3::zeros(); 4];
        for (slot, (name, v)) in out.iter_mut().zip(named) {
            let vec = Vector3::from(v);
            let norm = vec.norm();
            if (norm - 1.0).abs() > DIRECTION_TOL {
                return Err(QuantumError::NotUnitDirection { name, norm });
            }
            *slot = vec;
        }
        Ok(out)
    }
}

fn chsh_from_correlations(t: &Matrix3<f64>, [a0, a1, b0, b1]: &[Vector3<f64>; 4]) -> f64 {
    let e = |a: &Vector3<f64>, b: &Vector3<f64>| (a.transpose() * t * b)[(0, 0)];
    e(a0, b0) + e(a0, b1) + e(a1, b0) - e(a1, b1)
}

/// `S = E(A0,B0) + E(A0,B1) + E(A1,B0) - E(A1,B1)` for spin measurements
/// along the given directions.
pub fn chsh_value(state: &TwoQubitState, settings: &ChshSettings) -> Result<f64> {
    let v = settings.vectors()?;
    Ok(chsh_from_correlations(&state.correlation_matrix(), &v))
}

/// Largest CHSH value reachable with projective spin measurements:
/// `2 sqrt(s1^2 + s2^2)` with `s1 >= s2` the top singular values of the
/// correlation matrix.
pub fn chsh_max_closed_form(state: &TwoQubitState) -> f64 {
    let mut sv: Vec<f64> = state.correlation_matrix().singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    2.0 * (sv[0] * sv[0] + sv[1] * sv[1]).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChshOptimizer {
    pub starts: usize,
    pub seed: u64,
    /// Stop once a sweep improves `S` by less than this.
    pub step_tol: f64,
    pub max_sweeps: usize,
}

impl Default for ChshOptimizer {
    fn default() -> Self {
        ChshOptimizer { starts: 16, seed: 0x5eed_c45b, step_tol: 1e-10, max_sweeps: 20_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChshOptimum {
    pub value: f64,
    pub settings: ChshSettings,
}

impl ChshOptimizer {
    /// Multi-start block coordinate ascent. Each block is one Bloch direction;
    /// with the other three fixed `S` is linear in it, so the block optimum is
    /// the normalized gradient.
    pub fn maximize(&self, state: &TwoQubitState) -> ChshOptimum {
        let t = state.correlation_matrix();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut best: Option<ChshOptimum> = None;
        for _ in 0..self.starts.max(1) {
            let mut dirs = [Vector3::zeros(); 4];
            for d in dirs.iter_mut() {
                let theta = (1.0 - 2.0 * rng.random::<f64>()).acos();
                let phi = std::f64::consts::TAU * rng.random::<f64>();
                *d = Vector3::from(bloch(theta, phi));
            }
            let mut value = chsh_from_correlations(&t, &dirs);
            for _ in 0..self.max_sweeps {
                let [a0, a1, b0, b1] = dirs;
                let na0 = unit_or(t * (b0 + b1), a0);
                let na1 = unit_or(t * (b0 - b1), a1);
                let nb0 = unit_or(t.transpose() * (na0 + na1), b0);
                let nb1 = unit_or(t.transpose() * (na0 - na1), b1);
                dirs = [na0, na1, nb0, nb1];
                let next = chsh_from_correlations(&t, &dirs);
                let gain = next - value;
                value = next;
                if gain < self.step_tol * 1e-3 {
                    break;
                }
            }
            if best.is_none_or(|b| value > b.value) {
                let arr = |v: Vector3<f64>| [v.x, v.y, v.z];
                best = Some(ChshOptimum {
                    value,
                    settings: ChshSettings { a0: arr(dirs[0]), a1: arr(dirs[1]), b0: arr(dirs[2]), b1: arr(dirs[3]) },
                });
            }
        }
        best.expect("at least one start")
    }
}

fn unit_or(v: Vector3<f64>, fallback: Vector3<f64>) -> Vector3<f64> {
    let n = v.norm();
    if n > 1e-300 {
        v / n
    } else {
        fallback
    }
}

/// Maximal CHSH value found by the default multi-start optimizer.
pub fn chsh_max(state: &TwoQubitState) -> f64 {
    ChshOptimizer::default().maximize(state).value
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;
    use rand_distr::{Distribution, StandardNormal};
    use std::f64::consts::SQRT_2;

    const NORM_TOL: f64 = 1e-12;

    fn two_qubit(amps: [f64; 4]) -> Ket {
        let space = CompositeSpace::new(vec![Factor::Qubit, Factor::Qubit]);
        Ket::new(space, amps.iter().map(|&a| c64(a)).collect()).unwrap().normalized().unwrap()
    }

    fn random_ket(rng: &mut impl Rng, dims: usize) -> Ket {
        let amps: Vec<C64> = (0..dims)
            .map(|_| C64::new(StandardNormal.sample(rng), StandardNormal.sample(rng)))
            .collect();
        let space = CompositeSpace::new(vec![Factor::Qubit; dims.trailing_zeros() as usize]);
        Ket::new(space, amps).unwrap().normalized().unwrap()
    }

    fn random_unitary2(rng: &mut impl Rng) -> Unitary {
        let q: [f64; 4] = std::array::from_fn(|_| StandardNormal.sample(rng));
        let n = q.iter().map(|x| x * x).sum::<f64>().sqrt();
        let a = C64::new(q[0] / n, q[1] / n);
        let b = C64::new(q[2] / n, q[3] / n);
        let phase = C64::from_polar(1.0, rng.random::<f64>() * 6.0);
        Unitary::from_rows2([[a * phase, -b.conj() * phase], [b * phase, a.conj() * phase]]).unwrap()
    }

    #[test]
    fn tensor_examples() {
        let k = tensor(&[Ket::zero(), Ket::one()]).unwrap();
        assert_eq!(k, Ket::basis(CompositeSpace::new(vec![Factor::Qubit, Factor::Qubit]), &[0, 1]).unwrap());
        assert_eq!(k.amplitudes()[1], c64(1.0));
        let k = tensor(&[Ket::plus(), Ket::zero()]).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert_eq!(k.amplitudes(), &[c64(h), c64(0.0), c64(h), c64(0.0)]);
        let a = Ket::new(CompositeSpace::qubit(), vec![c64(3.0), c64(4.0)]).unwrap();
        let b = Ket::new(CompositeSpace::qubit(), vec![c64(1.0), c64(1.0)]).unwrap();
        assert!((tensor(&[a.clone(), b.clone()]).unwrap().norm() - a.norm() * b.norm()).abs() < 1e-14);
        assert!(matches!(tensor(&[]), Err(QuantumError::EmptyProduct)));
    }

    #[test]
    fn apply_on_factor_examples() {
        let zz = tensor(&[Ket::zero(), Ket::zero()]).unwrap();
        let flipped = zz.apply_on_factor(&Unitary::pauli_x(), 0).unwrap();
        assert_eq!(flipped, tensor(&[Ket::one(), Ket::zero()]).unwrap());
        let same = zz.apply_on_factor(&Unitary::identity(2), 1).unwrap();
        assert_eq!(same, zz);
        let h = Unitary::hadamard();
        let back = Ket::zero().apply_on_factor(&h, 0).unwrap().apply_on_factor(&h, 0).unwrap();
        assert!((back.amplitudes()[0] - c64(1.0)).norm() < 1e-15 && back.amplitudes()[1].norm() < 1e-15);
        assert!(zz.apply_on_factor(&Unitary::identity(3), 0).is_err());
        assert!(zz.apply_on_factor(&Unitary::identity(2), 2).is_err());
    }

    #[test]
    fn project_examples() {
        let out = Ket::plus().project(&Ket::zero()).unwrap();
        assert!((out.probability - 0.5).abs() < 1e-15);
        assert_eq!(out.post_state.unwrap(), Ket::zero());
        let out = Ket::zero().project(&Ket::one()).unwrap();
        assert_eq!(out.probability, 0.0);
        assert!(out.post_state.is_none());
        let zero = Ket::new(CompositeSpace::qubit(), vec![c64(0.0), c64(0.0)]).unwrap();
        assert!(matches!(Ket::plus().project(&zero), Err(QuantumError::ZeroVector)));
    }

    #[test]
    fn partial_projection_on_middle_factor() {
        let s = tensor(&[Ket::zero(), Ket::plus(), Ket::one()]).unwrap();
        let out = s.project_factor(1, &Ket::zero()).unwrap();
        assert!((out.probability - 0.5).abs() < 1e-15);
        assert_eq!(out.post_state.unwrap(), tensor(&[Ket::zero(), Ket::one()]).unwrap());
    }

    #[test]
    fn clock_labels_are_orthonormal() {
        let a = ClockLabel::new(1.0, 2.0, 0.5, Color::Amber);
        let b = ClockLabel::new(1.0, 2.0, 0.5, Color::Blue);
        let a2 = ClockLabel::new(1.5, 2.0, 0.5, Color::Amber);
        let labels = [a, b, a2];
        let ka = Ket::clock(&labels, &a).unwrap();
        let kb = Ket::clock(&labels, &b).unwrap();
        let ka2 = Ket::clock(&labels, &a2).unwrap();
        assert_eq!(ka.inner(&kb).unwrap(), c64(0.0));
        assert_eq!(ka.inner(&ka2).unwrap(), c64(0.0));
        assert_eq!(ka.inner(&ka).unwrap(), c64(1.0));
        // labels within the quantization step are identical
        let jitter = ClockLabel::new(1.0 + 1e-12, 2.0, 0.5, Color::Amber);
        assert_eq!(a, jitter);
        assert!(Factor::clock(vec![a, jitter]).is_err());
    }

    #[test]
    fn controlled_application_acts_per_label() {
        let a = ClockLabel::initial(1.0, Color::Amber);
        let b = ClockLabel::initial(1.0, Color::Blue);
        let labels = [a, b];
        let ctrl = Ket::superpose(&[
            (c64(1.0), &Ket::clock(&labels, &a).unwrap()),
            (c64(1.0), &Ket::clock(&labels, &b).unwrap()),
        ])
        .unwrap()
        .normalized()
        .unwrap();
        let s = tensor(&[ctrl, Ket::zero()]).unwrap();
        let x = Unitary::pauli_x();
        let out = s.apply_controlled(0, 1, |l| (l.color == Color::Blue).then_some(&x)).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        for (got, want) in out.amplitudes().iter().zip([h, 0.0, 0.0, h]) {
            assert!((got - c64(want)).norm() < 1e-15);
        }
        assert!(s.apply_controlled(1, 0, |_| None).is_err());
    }

    #[test]
    fn relabel_must_be_injective() {
        let a = ClockLabel::initial(1.0, Color::Amber);
        let b = ClockLabel::initial(1.0, Color::Blue);
        let k = Ket::clock(&[a, b], &a).unwrap();
        let moved = k.relabel_clock(0, |l| ClockLabel { rest_epoch: 3.0, ..*l }).unwrap();
        assert_eq!(moved.space().factors()[0].labels().unwrap()[0].rest_epoch, 3.0);
        assert!(k.relabel_clock(0, |_| a).is_err());
    }

    #[test]
    fn schmidt_entropy_examples() {
        let bell = two_qubit([0.0, 1.0, 1.0, 0.0]);
        assert!((schmidt_entropy(&bell, &[0]).unwrap() - 1.0).abs() < 1e-12);
        assert!(schmidt_entropy(&two_qubit([1.0, 0.0, 0.0, 0.0]), &[0]).unwrap().abs() < 1e-12);
        assert!(schmidt_entropy(&two_qubit([1.0, 1.0, 0.0, 0.0]), &[1]).unwrap().abs() < 1e-12);
        assert!(schmidt_entropy(&bell, &[]).is_err());
        assert!(schmidt_entropy(&bell, &[0, 1]).is_err());
    }

    #[test]
    fn chsh_examples() {
        let product = TwoQubitState::from_ket(&two_qubit([1.0, 0.0, 0.0, 0.0])).unwrap();
        let s = ChshSettings { a0: bloch(0.3, 0.1), a1: bloch(1.2, 2.0), b0: bloch(2.0, 0.5), b1: bloch(0.7, 4.0) };
        assert!(chsh_value(&product, &s).unwrap().abs() <= 2.0);
        let same = ChshSettings { a0: bloch(0.4, 0.0), a1: bloch(0.4, 0.0), b0: bloch(0.9, 1.0), b1: bloch(0.9, 1.0) };
        let bell = TwoQubitState::from_ket(&two_qubit([0.0, 1.0, 1.0, 0.0])).unwrap();
        let v = chsh_value(&bell, &same).unwrap();
        let e00 = chsh_value(&bell, &ChshSettings { a1: same.a0, b1: same.b0, ..same }).unwrap();
        assert!((v - e00).abs() < 1e-15 && v.abs() <= 2.0);
        let bad = ChshSettings { a0: [1.0, 1.0, 0.0], ..s };
        assert!(matches!(chsh_value(&bell, &bad), Err(QuantumError::NotUnitDirection { name: "a0", .. })));
    }

    /// Brute-force oracle: grid search over the four Bloch directions in the
    /// x-z plane, where the optimum for this state lives.
    #[test]
    fn chsh_max_matches_planar_grid_search() {
        let bell = TwoQubitState::from_ket(&two_qubit([0.0, 1.0, 1.0, 0.0])).unwrap();
        let t = bell.correlation_matrix();
        let n = 32;
        let dirs: Vec<Vector3<f64>> =
            (0..n).map(|k| Vector3::from(bloch(k as f64 * std::f64::consts::TAU / n as f64, 0.0))).collect();
        let mut best = f64::MIN;
        for a0 in &dirs {
            for a1 in &dirs {
                for b0 in &dirs {
                    for b1 in &dirs {
                        best = best.max(chsh_from_correlations(&t, &[*a0, *a1, *b0, *b1]));
                    }
                }
            }
        }
        assert!((best - 2.0 * SQRT_2).abs() < 1e-9);
        assert!((chsh_max(&bell) - best).abs() < 1e-9);
        assert!((chsh_max_closed_form(&bell) - 2.0 * SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn chsh_max_of_product_is_two() {
        let product = TwoQubitState::from_ket(&two_qubit([1.0, 0.0, 0.0, 0.0])).unwrap();
        assert!((chsh_max(&product) - 2.0).abs() < 1e-9);
    }

    #[test]
    fn chsh_max_of_dephased_bell_state_interpolates() {
        for v in [0.0, 0.3, 0.7, 1.0] {
            let mut rho = Matrix4::<C64>::zeros();
            rho[(1, 1)] = c64(0.5);
            rho[(2, 2)] = c64(0.5);
            rho[(1, 2)] = c64(0.5 * v);
            rho[(2, 1)] = c64(0.5 * v);
            let st = TwoQubitState::from_density(rho).unwrap();
            let expected = 2.0 * (1.0 + v * v).sqrt();
            assert!((chsh_max(&st) - expected).abs() < 1e-9, "v={v}");
        }
    }

    #[test]
    fn random_states_respect_chsh_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10_000 {
            let st = TwoQubitState::from_ket(&random_ket(&mut rng, 4)).unwrap();
            let opt = ChshOptimizer { starts: 4, ..ChshOptimizer::default() }.maximize(&st).value;
            let closed = chsh_max_closed_form(&st);
            assert!(closed >= 2.0 - 1e-9 && closed <= 2.0 * SQRT_2 + 1e-6);
            assert!(opt <= closed + 1e-9);
            assert!(opt >= 2.0 - 1e-9);
        }
    }

    #[test]
    fn density_validation() {
        let mut rho = Matrix4::<C64>::zeros();
        rho[(0, 0)] = c64(2.0);
        assert!(TwoQubitState::from_density(rho).is_err());
        assert!(TwoQubitState::from_ket(&Ket::zero()).is_err());
    }

    #[test]
    fn norm_survives_long_unitary_sequences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut s = random_ket(&mut rng, 8);
        for i in 0..1000 {
            s = s.apply_on_factor(&random_unitary2(&mut rng), i % 3).unwrap();
        }
        assert!((s.norm() - 1.0).abs() < NORM_TOL);
    }

    proptest! {
        #[test]
        fn entropy_is_local_unitary_invariant(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = random_ket(&mut rng, 4);
            let before = schmidt_entropy(&s, &[0]).unwrap();
            let moved = s
                .apply_on_factor(&random_unitary2(&mut rng), 0).unwrap()
                .apply_on_factor(&random_unitary2(&mut rng), 1).unwrap();
            let after = schmidt_entropy(&moved, &[0]).unwrap();
            prop_assert!((before - after).abs() < 1e-10);
            prop_assert!((0.0..=1.0 + 1e-12).contains(&before));
        }

        #[test]
        fn optimizer_never_exceeds_closed_form(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let st = TwoQubitState::from_ket(&random_ket(&mut rng, 4)).unwrap();
            let opt = chsh_max(&st);
            let closed = chsh_max_closed_form(&st);
            prop_assert!(opt <= closed + 1e-9);
            prop_assert!(closed - opt < 1e-6);
        }
    }
}
