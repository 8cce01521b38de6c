//! One- and two-qubit state algebra.
//!
//! Qubit 0 is the most significant tensor factor, so for two ions the basis
//! order is |00⟩, |01⟩, |10⟩, |11⟩ with ion a first.

mod process;
mod tomography;

pub use process::{process_fidelity, process_tomography, standard_inputs, ProcessMatrix};
pub use tomography::{
    all_settings, log_likelihood, measurement_operator, ml_tomography, ml_tomography_with,
    sample_counts, MlOptions, MlReport, SettingCounts, TomographyCounts,
};

use nalgebra::{DMatrix, DVector};
pub use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::{Error, Result};

pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const NORM_TOLERANCE: f64 = 1e-12;
pub const HERMITIAN_TOLERANCE: f64 = 1e-12;
pub const TRACE_TOLERANCE: f64 = 1e-12;
pub const EIGEN_FLOOR: f64 = -1e-10;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn qubits_for_dim(d: usize) -> Result<usize> {
    match d {
        2 => Ok(1),
        4 => Ok(2),
        _ => Err(Error::Dimension(format!("dimension {d} is not 2 or 4"))),
    }
}

// ---------------------------------------------------------------------------
// Pure states

#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    amps: CVector,
}

impl PureState {
    pub fn new(amps: Vec<C64>) -> Result<Self> {
        qubits_for_dim(amps.len())?;
        let v = CVector::from_vec(amps);
        let n = v.norm();
        if (n - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::InvalidState(format!("norm {n} is not 1")));
        }
        Ok(PureState { amps: v })
    }

    pub fn normalized(amps: Vec<C64>) -> Result<Self> {
        qubits_for_dim(amps.len())?;
        let v = CVector::from_vec(amps);
        let n = v.norm();
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::InvalidState("zero vector".into()));
        }
        Ok(PureState { amps: v / c(n, 0.0) })
    }

    pub fn qubit(alpha: C64, beta: C64) -> Result<Self> {
        Self::new(vec![alpha, beta])
    }

    pub fn basis(n_qubits: usize, index: usize) -> Self {
        let d = 1 << n_qubits;
        let mut v = vec![c(0.0, 0.0); d];
        v[index] = c(1.0, 0.0);
        PureState { amps: CVector::from_vec(v) }
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amps
    }

    pub fn amp(&self, i: usize) -> C64 {
        self.amps[i]
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn n_qubits(&self) -> usize {
        qubits_for_dim(self.dim()).expect("validated")
    }

    pub fn tensor(&self, other: &PureState) -> PureState {
        PureState { amps: self.amps.kronecker(&other.amps) }
    }

    pub fn inner(&self, other: &PureState) -> C64 {
        self.amps.dotc(&other.amps)
    }

    pub fn projector(&self) -> DensityMatrix {
        DensityMatrix { m: &self.amps * self.amps.adjoint() }
    }

    /// Apply an operator; fails if the result is not normalized.
    pub fn apply(&self, op: &CMatrix) -> Result<PureState> {
        if op.nrows() != self.dim() {
            return Err(Error::Dimension("operator does not match state".into()));
        }
        PureState::new((op * &self.amps).iter().copied().collect())
    }

    /// |⟨a|b⟩|, insensitive to global phase.
    pub fn overlap(&self, other: &PureState) -> f64 {
        self.inner(other).norm()
    }
}

/// The six single-qubit states along ±z, ±x, ±y.
pub fn mub_states() -> [(&'static str, PureState); 6] {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let q = |a: C64, b: C64| PureState::qubit(a, b).expect("normalized");
    [
        ("0", q(c(1.0, 0.0), c(0.0, 0.0))),
        ("1", q(c(0.0, 0.0), c(1.0, 0.0))),
        ("0+1", q(c(h, 0.0), c(h, 0.0))),
        ("0-1", q(c(h, 0.0), c(-h, 0.0))),
        ("0+i1", q(c(h, 0.0), c(0.0, h))),
        ("0-i1", q(c(h, 0.0), c(0.0, -h))),
    ]
}

// ---------------------------------------------------------------------------
// Density matrices

#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    m: CMatrix,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity. Eigenvalues in
    /// [-1e-10, 0) are clipped and the matrix renormalized.
    pub fn new(m: CMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::Dimension("density matrix must be square".into()));
        }
        qubits_for_dim(m.nrows())?;
        let herm = (&m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if herm > HERMITIAN_TOLERANCE {
            return Err(Error::InvalidState(format!("not Hermitian (deviation {herm:e})")));
        }
        let tr = m.trace();
        if (tr.re - 1.0).abs() > TRACE_TOLERANCE || tr.im.abs() > TRACE_TOLERANCE {
            return Err(Error::InvalidState(format!("trace {tr} is not 1")));
        }
        let m = hermitize(&m);
        let eig = m.clone().symmetric_eigen();
        let min = eig.eigenvalues.min();
        if min < EIGEN_FLOOR {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
        }
        if min < 0.0 {
            return Ok(DensityMatrix { m: clip_psd(&eig.eigenvalues, &eig.eigenvectors) });
        }
        Ok(DensityMatrix { m })
    }

    /// Normalize a positive operator to unit trace, then validate.
    pub fn from_unnormalized(m: CMatrix) -> Result<Self> {
        let tr = m.trace().re;
        if !(tr > 0.0) {
            return Err(Error::InvalidState("operator has no weight".into()));
        }
        Self::new(hermitize(&(m / c(tr, 0.0))))
    }

    pub fn maximally_mixed(n_qubits: usize) -> Self {
        let d = 1 << n_qubits;
        DensityMatrix { m: CMatrix::identity(d, d) / c(d as f64, 0.0) }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn into_matrix(self) -> CMatrix {
        self.m
    }

    pub fn get(&self, r: usize, col: usize) -> C64 {
        self.m[(r, col)]
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn n_qubits(&self) -> usize {
        qubits_for_dim(self.dim()).expect("validated")
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.m.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
        v.sort_by(|a, b| a.total_cmp(b));
        v
    }

    pub fn expectation(&self, op: &CMatrix) -> C64 {
        (&self.m * op).trace()
    }

    pub fn purity(&self) -> f64 {
        (&self.m * &self.m).trace().re
    }

    /// ½ Σ|λ_i| of the difference.
    pub fn trace_distance(&self, other: &DensityMatrix) -> f64 {
        let d = hermitize(&(&self.m - &other.m));
        0.5 * d.symmetric_eigen().eigenvalues.iter().map(|x| x.abs()).sum::<f64>()
    }

    /// Conjugate by a unitary of matching dimension.
    pub fn evolve(&self, u: &CMatrix) -> Result<DensityMatrix> {
        if u.nrows() != self.dim() {
            return Err(Error::Dimension("unitary does not match state".into()));
        }
        Ok(DensityMatrix { m: hermitize(&(u * &self.m * u.adjoint())) })
    }

    /// Weighted mixture `Σ w_i ρ_i` with weights summing to one.
    pub fn mixture(parts: &[(f64, &DensityMatrix)]) -> Result<DensityMatrix> {
        let first = parts.first().ok_or_else(|| Error::InvalidState("empty mixture".into()))?;
        let mut m = CMatrix::zeros(first.1.dim(), first.1.dim());
        for (w, r) in parts {
            if r.dim() != first.1.dim() {
                return Err(Error::Dimension("mixture of different dimensions".into()));
            }
            m += &r.m * c(*w, 0.0);
        }
        DensityMatrix::new(m)
    }

    /// Bloch vector of a single qubit.
    pub fn bloch(&self) -> Result<[f64; 3]> {
        if self.dim() != 2 {
            return Err(Error::Dimension("Bloch vector needs one qubit".into()));
        }
        Ok([
            self.expectation(&pauli(Basis::X)).re,
            self.expectation(&pauli(Basis::Y)).re,
            self.expectation(&pauli(Basis::Z)).re,
        ])
    }
}

pub(crate) fn hermitize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * c(0.5, 0.0)
}

fn clip_psd(values: &DVector<f64>, vectors: &CMatrix) -> CMatrix {
    let clipped: Vec<f64> = values.iter().map(|&v| v.max(0.0)).collect();
    let s: f64 = clipped.iter().sum();
    let d = CMatrix::from_diagonal(&CVector::from_iterator(
        clipped.len(),
        clipped.iter().map(|&v| c(v / s, 0.0)),
    ));
    hermitize(&(vectors * d * vectors.adjoint()))
}

/// Square root of a positive semidefinite Hermitian matrix.
pub(crate) fn sqrt_psd(m: &CMatrix) -> CMatrix {
    let eig = hermitize(m).symmetric_eigen();
    let d = CMatrix::from_diagonal(&CVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|&v| c(v.max(0.0).sqrt(), 0.0)),
    ));
    &eig.eigenvectors * d * eig.eigenvectors.adjoint()
}

// ---------------------------------------------------------------------------
// Paulis and rotations

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Basis {
    I,
    X,
    Y,
    Z,
}

impl Basis {
    pub fn label(self) -> char {
        match self {
            Basis::I => 'I',
            Basis::X => 'x',
            Basis::Y => 'y',
            Basis::Z => 'z',
        }
    }

    pub fn from_char(ch: char) -> Result<Basis> {
        match ch {
            'I' | 'i' => Ok(Basis::I),
            'x' | 'X' => Ok(Basis::X),
            'y' | 'Y' => Ok(Basis::Y),
            'z' | 'Z' => Ok(Basis::Z),
            _ => Err(Error::Domain(format!("unknown basis label {ch:?}"))),
        }
    }
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

pub fn pauli(b: Basis) -> CMatrix {
    let (o, l, i) = (c(0.0, 0.0), c(1.0, 0.0), c(0.0, 1.0));
    let v = match b {
        Basis::I => [l, o, o, l],
        Basis::X => [o, l, l, o],
        Basis::Y => [o, -i, i, o],
        Basis::Z => [l, o, o, -l],
    };
    CMatrix::from_row_slice(2, 2, &v)
}

/// `exp(-i θ σ/2)`.
pub fn rotation(axis: Axis, angle: f64) -> CMatrix {
    let b = match axis {
        Axis::X => Basis::X,
        Axis::Y => Basis::Y,
        Axis::Z => Basis::Z,
    };
    let (s, co) = (0.5 * angle).sin_cos();
    pauli(Basis::I) * c(co, 0.0) - pauli(b) * c(0.0, s)
}

/// Rotation about `cos φ x̂ + sin φ ŷ`, the action of a microwave pulse of phase φ.
pub fn phase_rotation(phase: f64, angle: f64) -> CMatrix {
    let (s, co) = (0.5 * angle).sin_cos();
    let n = pauli(Basis::X) * c(phase.cos(), 0.0) + pauli(Basis::Y) * c(phase.sin(), 0.0);
    pauli(Basis::I) * c(co, 0.0) - n * c(0.0, s)
}

/// Lift a single-qubit operator onto `qubit` of an `n`-qubit register.
pub fn embed(op: &CMatrix, qubit: usize, n_qubits: usize) -> Result<CMatrix> {
    if qubit >= n_qubits {
        return Err(Error::Dimension(format!("qubit {qubit} out of range for {n_qubits}")));
    }
    let mut out = CMatrix::identity(1, 1);
    for k in 0..n_qubits {
        let f = if k == qubit { op.clone() } else { CMatrix::identity(2, 2) };
        out = out.kronecker(&f);
    }
    Ok(out)
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub trait Rotate: Sized {
    fn rotate(&self, qubit: usize, axis: Axis, angle: f64) -> Result<Self>;
}

impl Rotate for PureState {
    fn rotate(&self, qubit: usize, axis: Axis, angle: f64) -> Result<Self> {
        self.apply(&embed(&rotation(axis, angle), qubit, self.n_qubits())?)
    }
}

impl Rotate for DensityMatrix {
    fn rotate(&self, qubit: usize, axis: Axis, angle: f64) -> Result<Self> {
        self.evolve(&embed(&rotation(axis, angle), qubit, self.n_qubits())?)
    }
}

/// Pre-detection rotation that maps a measurement basis onto z.
pub fn basis_rotation(b: Basis) -> CMatrix {
    match b {
        Basis::X => rotation(Axis::Y, std::f64::consts::FRAC_PI_2),
        Basis::Y => rotation(Axis::X, std::f64::consts::FRAC_PI_2),
        Basis::Z | Basis::I => pauli(Basis::I),
    }
}

// ---------------------------------------------------------------------------
// Figures of merit

pub fn fidelity(rho: &DensityMatrix, ideal: &PureState) -> Result<f64> {
    if rho.dim() != ideal.dim() {
        return Err(Error::Dimension("state and density matrix differ in dimension".into()));
    }
    let v = ideal.amplitudes();
    Ok(v.dotc(&(rho.matrix() * v)).re)
}

/// ρ = ½ Σ S_j σ_j from the six basis-state probabilities.
pub fn stokes_reconstruct(
    p0: f64,
    p1: f64,
    p_plus: f64,
    p_minus: f64,
    p_plus_i: f64,
    p_minus_i: f64,
) -> Result<DensityMatrix> {
    for (name, a, b) in [("z", p0, p1), ("x", p_plus, p_minus), ("y", p_plus_i, p_minus_i)] {
        if (a + b - 1.0).abs() > 1e-9 {
            return Err(Error::Unnormalized(format!("{name} pair sums to {}", a + b)));
        }
    }
    let mut s = [p_plus - p_minus, p_plus_i - p_minus_i, p0 - p1];
    // Sampled frequencies can land outside the Bloch ball; pull back to its surface.
    let r = s.iter().map(|v| v * v).sum::<f64>().sqrt();
    if r > 1.0 {
        s.iter_mut().for_each(|v| *v /= r);
    }
    DensityMatrix::new(bloch_matrix(s))
}

fn bloch_matrix(s: [f64; 3]) -> CMatrix {
    (pauli(Basis::I) + pauli(Basis::X) * c(s[0], 0.0) + pauli(Basis::Y) * c(s[1], 0.0)
        + pauli(Basis::Z) * c(s[2], 0.0))
        * c(0.5, 0.0)
}

/// Single-qubit state with a given Bloch vector (|r| ≤ 1).
pub fn from_bloch(s: [f64; 3]) -> Result<DensityMatrix> {
    DensityMatrix::new(bloch_matrix(s))
}

fn require_two_qubits(rho: &DensityMatrix) -> Result<()> {
    if rho.dim() != 4 {
        return Err(Error::Dimension("two-qubit density matrix required".into()));
    }
    Ok(())
}

/// Wootters concurrence.
pub fn concurrence(rho: &DensityMatrix) -> Result<f64> {
    require_two_qubits(rho)?;
    let yy = kron(&pauli(Basis::Y), &pauli(Basis::Y));
    let r = rho.matrix();
    let tilde = &yy * r.map(|z| z.conj()) * &yy;
    let sr = sqrt_psd(r);
    let inner = hermitize(&(&sr * tilde * &sr));
    let mut l: Vec<f64> = inner.symmetric_eigen().eigenvalues.iter().map(|v| v.max(0.0).sqrt()).collect();
    l.sort_by(|a, b| b.total_cmp(a));
    Ok((l[0] - l[1] - l[2] - l[3]).max(0.0))
}

fn binary_entropy(x: f64) -> f64 {
    let t = |p: f64| if p <= 0.0 { 0.0 } else { -p * p.log2() };
    t(x) + t(1.0 - x)
}

pub fn eof_from_concurrence(conc: f64) -> f64 {
    let conc = conc.clamp(0.0, 1.0);
    binary_entropy(0.5 * (1.0 + (1.0 - conc * conc).sqrt()))
}

pub fn entanglement_of_formation(rho: &DensityMatrix) -> Result<f64> {
    Ok(eof_from_concurrence(concurrence(rho)?))
}

/// `⟨σ_a ⊗ σ_b⟩`; `I` on a side leaves that ion unmeasured.
pub fn parity(rho: &DensityMatrix, basis_a: Basis, basis_b: Basis) -> Result<f64> {
    require_two_qubits(rho)?;
    let op = kron(&pauli(basis_a), &pauli(basis_b));
    Ok(rho.expectation(&op).re)
}

// ---------------------------------------------------------------------------
// Parity-combination fidelities

/// A parity term as printed in the gate table, e.g. `-P_xy`.
///
/// Printed subscripts are read as (ion b, ion a): that is the only reading
/// under which every row of the table equals its projector fidelity,
/// including the single-ion `I` rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParityTerm {
    pub coeff: f64,
    pub label: String,
}

impl ParityTerm {
    pub fn observable(&self) -> Result<(Basis, Basis)> {
        let ch: Vec<char> = self.label.chars().collect();
        if ch.len() != 2 {
            return Err(Error::Domain(format!("parity label {:?} needs two letters", self.label)));
        }
        Ok((Basis::from_char(ch[1])?, Basis::from_char(ch[0])?))
    }
}

/// `¼(1 + Σ c_k P_k)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParityFormula {
    pub terms: Vec<ParityTerm>,
}

impl FromStr for ParityFormula {
    type Err = Error;

    /// Parses the bracket contents, e.g. `1 - P_xx - P_yy - P_zz`.
    fn from_str(s: &str) -> Result<Self> {
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let body = compact.strip_prefix('1').ok_or_else(|| {
            Error::Domain(format!("formula {s:?} must start with the constant 1"))
        })?;
        let mut terms = Vec::new();
        let mut rest = body;
        while !rest.is_empty() {
            let sign = match rest.as_bytes()[0] {
                b'+' => 1.0,
                b'-' => -1.0,
                _ => return Err(Error::Domain(format!("expected sign in {s:?}"))),
            };
            let tail = rest[1..]
                .strip_prefix("P_")
                .or_else(|| rest[1..].strip_prefix('P'))
                .ok_or_else(|| Error::Domain(format!("expected parity in {s:?}")))?;
            let end = tail.find(['+', '-']).unwrap_or(tail.len());
            let label = tail[..end].to_string();
            let t = ParityTerm { coeff: sign, label };
            t.observable()?;
            terms.push(t);
            rest = &tail[end..];
        }
        Ok(ParityFormula { terms })
    }
}

impl fmt::Display for ParityFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "1/4(1")?;
        for t in &self.terms {
            write!(f, " {} P_{}", if t.coeff < 0.0 { '-' } else { '+' }, t.label)?;
        }
        write!(f, ")")
    }
}

pub type ParityMap = BTreeMap<(Basis, Basis), f64>;

impl ParityFormula {
    pub fn observables(&self) -> Result<Vec<(Basis, Basis)>> {
        self.terms.iter().map(|t| t.observable()).collect()
    }

    pub fn parities_of(&self, rho: &DensityMatrix) -> Result<ParityMap> {
        let mut m = ParityMap::new();
        for (a, b) in self.observables()? {
            m.insert((a, b), parity(rho, a, b)?);
        }
        Ok(m)
    }
}

pub fn fidelity_from_parities(parities: &ParityMap, formula: &ParityFormula) -> Result<f64> {
    let mut s = 1.0;
    for t in &formula.terms {
        let key = t.observable()?;
        let p = parities
            .get(&key)
            .ok_or_else(|| Error::MissingParity(format!("P_{} ({}{})", t.label, key.0, key.1)))?;
        s += t.coeff * p;
    }
    Ok(0.25 * s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_table_formula() {
        let f: ParityFormula = "1 - P_xy + P_yx - P_zz".parse().unwrap();
        assert_eq!(f.terms.len(), 3);
        assert_eq!(f.observables().unwrap()[0], (Basis::Y, Basis::X));
        assert!("2 - P_xx".parse::<ParityFormula>().is_err());
        assert!("1 - P_xq".parse::<ParityFormula>().is_err());
    }

    #[test]
    fn rotation_is_unitary() {
        let r = rotation(Axis::Y, 0.7);
        let e = &r * r.adjoint() - CMatrix::identity(2, 2);
        assert!(e.norm() < 1e-15);
    }
}
