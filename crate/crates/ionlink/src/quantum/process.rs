//! Single-qubit process tomography in the Pauli basis {I, X, Y, Z}:
//! `E(ρ) = Σ_mn χ_mn σ_m ρ σ_n`.

use nalgebra::DVector;

use super::{c, hermitize, pauli, Basis, CMatrix, CVector, DensityMatrix, PureState, C64};
use crate::{Error, Result};

const PAULI: [Basis; 4] = [Basis::I, Basis::X, Basis::Y, Basis::Z];

#[derive(Clone, Debug, PartialEq)]
pub struct ProcessMatrix {
    chi: CMatrix,
}

impl ProcessMatrix {
    pub fn new(chi: CMatrix) -> Result<Self> {
        if chi.nrows() != 4 || chi.ncols() != 4 {
            return Err(Error::Dimension("chi must be 4x4".into()));
        }
        let herm = (&chi - chi.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if herm > 1e-10 {
            return Err(Error::InvalidState(format!("chi not Hermitian ({herm:e})")));
        }
        let chi = hermitize(&chi);
        if (chi.trace().re - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidState(format!("chi trace {} is not 1", chi.trace().re)));
        }
        let min = chi.clone().symmetric_eigen().eigenvalues.min();
        if min < -1e-10 {
            return Err(Error::InvalidState(format!("chi has eigenvalue {min:e}")));
        }
        Ok(ProcessMatrix { chi })
    }

    pub fn identity() -> Self {
        let mut chi = CMatrix::zeros(4, 4);
        chi[(0, 0)] = c(1.0, 0.0);
        ProcessMatrix { chi }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.chi
    }

    /// Apply the channel to a single-qubit state.
    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        if rho.dim() != 2 {
            return Err(Error::Dimension("process acts on one qubit".into()));
        }
        let mut out = CMatrix::zeros(2, 2);
        for (m, &bm) in PAULI.iter().enumerate() {
            for (n, &bn) in PAULI.iter().enumerate() {
                out += pauli(bm) * rho.matrix() * pauli(bn) * self.chi[(m, n)];
            }
        }
        DensityMatrix::new(hermitize(&out))
    }
}

/// |0⟩, |1⟩, (|0⟩+|1⟩)/√2, (|0⟩+i|1⟩)/√2.
pub fn standard_inputs() -> [PureState; 4] {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let q = |a: C64, b: C64| PureState::qubit(a, b).expect("normalized");
    [
        q(c(1.0, 0.0), c(0.0, 0.0)),
        q(c(0.0, 0.0), c(1.0, 0.0)),
        q(c(h, 0.0), c(h, 0.0)),
        q(c(h, 0.0), c(0.0, h)),
    ]
}

/// χ by linear inversion of the input/output pairs, then projected onto the
/// positive cone with unit trace.
pub fn process_tomography(inputs: &[DensityMatrix], outputs: &[DensityMatrix]) -> Result<ProcessMatrix> {
    if inputs.len() != outputs.len() || inputs.is_empty() {
        return Err(Error::Dimension("need matching, nonempty input and output lists".into()));
    }
    if inputs.iter().chain(outputs).any(|r| r.dim() != 2) {
        return Err(Error::Dimension("process tomography is single-qubit".into()));
    }
    let rows = 4 * inputs.len();
    let mut a = CMatrix::zeros(rows, 16);
    let mut b = CVector::zeros(rows);
    for (j, (rin, rout)) in inputs.iter().zip(outputs).enumerate() {
        for (m, &bm) in PAULI.iter().enumerate() {
            for (n, &bn) in PAULI.iter().enumerate() {
                let t = pauli(bm) * rin.matrix() * pauli(bn);
                for e in 0..4 {
                    a[(4 * j + e, 4 * m + n)] = t[(e / 2, e % 2)];
                }
            }
        }
        for e in 0..4 {
            b[4 * j + e] = rout.get(e / 2, e % 2);
        }
    }
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if svd.singular_values.len() < 16 || !(smin > 1e-10 * smax) {
        return Err(Error::Singular(format!(
            "input states are not informationally complete (condition {:e})",
            smin / smax
        )));
    }
    let x = svd.solve(&b, 0.0).map_err(|e| Error::Singular(e.to_string()))?;
    let chi = CMatrix::from_fn(4, 4, |m, n| x[4 * m + n]);
    Ok(ProcessMatrix { chi: project_positive(&hermitize(&chi)) })
}

fn project_positive(m: &CMatrix) -> CMatrix {
    let eig = m.clone().symmetric_eigen();
    let vals: Vec<f64> = eig.eigenvalues.iter().map(|v| v.max(0.0)).collect();
    let s: f64 = vals.iter().sum();
    let d = CMatrix::from_diagonal(&DVector::from_iterator(4, vals.iter().map(|v| c(v / s, 0.0))));
    hermitize(&(&eig.eigenvectors * d * eig.eigenvectors.adjoint()))
}

/// `Re tr(χ_ideal χ)`, clipped to [0, 1].
pub fn process_fidelity(chi: &ProcessMatrix, chi_ideal: &ProcessMatrix) -> f64 {
    let f = (chi_ideal.matrix() * chi.matrix()).trace().re;
    if !(-1e-9..=1.0 + 1e-9).contains(&f) {
        log::warn!("process fidelity {f} outside [0, 1]");
    }
    f.clamp(0.0, 1.0)
}
