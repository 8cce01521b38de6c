//! Photon-heralded ion–ion gate.
//!
//! Each ion emits a photon whose frequency is entangled with the qubit
//! (|0⟩ ↔ blue, |1⟩ ↔ red). The photons meet on a 50:50 beamsplitter and a
//! coincidence between the two output ports projects the photons onto ψ⁻,
//! leaving the ions in `αδ|01⟩ − βγ|10⟩`.

mod fock;

pub use fock::{FockState, Freq, Mode};

use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_1_SQRT_2;

use crate::quantum::{
    c, fidelity, fidelity_from_parities, CMatrix, DensityMatrix, ParityFormula, PureState, C64,
};
use crate::{Error, Result};

pub const ZERO_HERALD_PROBABILITY: f64 = 1e-14;

fn freq_index(f: Freq) -> usize {
    match f {
        Freq::Blue => 0,
        Freq::Red => 1,
    }
}

/// Ion ⊗ photon-frequency amplitudes, index `2·ion + freq`.
#[derive(Clone, Debug, PartialEq)]
pub struct IonPhotonState {
    amps: [C64; 4],
}

impl IonPhotonState {
    pub fn new(amps: [C64; 4]) -> Result<Self> {
        let n: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (n - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidState(format!("ion-photon state has norm² {n}")));
        }
        Ok(IonPhotonState { amps })
    }

    pub fn amp(&self, ion: usize, freq: Freq) -> C64 {
        self.amps[2 * ion + freq_index(freq)]
    }

    /// Populations of the ion after tracing out the photon.
    pub fn ion_populations(&self) -> [f64; 2] {
        [
            self.amps[0].norm_sqr() + self.amps[1].norm_sqr(),
            self.amps[2].norm_sqr() + self.amps[3].norm_sqr(),
        ]
    }

    pub fn reduced_ion(&self) -> DensityMatrix {
        let a = &self.amps;
        let r01 = a[0] * a[2].conj() + a[1] * a[3].conj();
        let p = self.ion_populations();
        let m = CMatrix::from_row_slice(2, 2, &[c(p[0], 0.0), r01, r01.conj(), c(p[1], 0.0)]);
        DensityMatrix::new(m).expect("partial trace of a normalized state")
    }

    /// Von Neumann entropy of the reduced ion state, in bits.
    pub fn entanglement_entropy(&self) -> f64 {
        self.reduced_ion()
            .eigenvalues()
            .into_iter()
            .filter(|&l| l > 1e-300)
            .map(|l| -l * l.log2())
            .sum()
    }

    /// Ion qubit amplitudes assuming the ideal 0↔blue, 1↔red correlation.
    pub fn qubit_amplitudes(&self) -> (C64, C64) {
        (self.amp(0, Freq::Blue), self.amp(1, Freq::Red))
    }
}

/// `α|0⟩|blue⟩ + β|1⟩|red⟩`.
pub fn excite_entangle(alpha: C64, beta: C64) -> Result<IonPhotonState> {
    let n = alpha.norm_sqr() + beta.norm_sqr();
    if (n - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidState(format!("|α|²+|β|² = {n}")));
    }
    let z = c(0.0, 0.0);
    IonPhotonState::new([alpha, z, z, beta])
}

pub fn excite_state(q: &PureState) -> Result<IonPhotonState> {
    if q.dim() != 2 {
        return Err(Error::Dimension("ion qubit expected".into()));
    }
    excite_entangle(q.amp(0), q.amp(1))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BellLabel {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

impl BellLabel {
    pub const ALL: [BellLabel; 4] =
        [BellLabel::PhiPlus, BellLabel::PhiMinus, BellLabel::PsiPlus, BellLabel::PsiMinus];

    /// Photon amplitudes over (freq a, freq b), index `2·fa + fb`.
    pub fn photon_amplitudes(self) -> [f64; 4] {
        let h = FRAC_1_SQRT_2;
        match self {
            BellLabel::PhiPlus => [h, 0.0, 0.0, h],
            BellLabel::PhiMinus => [h, 0.0, 0.0, -h],
            BellLabel::PsiPlus => [0.0, h, h, 0.0],
            BellLabel::PsiMinus => [0.0, h, -h, 0.0],
        }
    }
}

/// Projection of the two-ion, two-photon state onto each photonic Bell state.
/// Entry `[bell][2·i + j]` is the (unnormalized) amplitude of ion state |ij⟩.
#[derive(Clone, Debug, PartialEq)]
pub struct BellDecomposition {
    pub amplitudes: [[C64; 4]; 4],
}

impl BellDecomposition {
    pub fn component(&self, b: BellLabel) -> [C64; 4] {
        self.amplitudes[b as usize]
    }

    pub fn weight(&self, b: BellLabel) -> f64 {
        self.component(b).iter().map(|a| a.norm_sqr()).sum()
    }
}

pub fn bell_decompose(a: &IonPhotonState, b: &IonPhotonState) -> BellDecomposition {
    let freqs = [Freq::Blue, Freq::Red];
    let mut out = [[c(0.0, 0.0); 4]; 4];
    for bell in BellLabel::ALL {
        let ph = bell.photon_amplitudes();
        for i in 0..2 {
            for j in 0..2 {
                let mut s = c(0.0, 0.0);
                for (fa_i, &fa) in freqs.iter().enumerate() {
                    for (fb_i, &fb) in freqs.iter().enumerate() {
                        s += a.amp(i, fa) * b.amp(j, fb) * ph[2 * fa_i + fb_i];
                    }
                }
                out[bell as usize][2 * i + j] = s;
            }
        }
    }
    BellDecomposition { amplitudes: out }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Herald {
    pub state: PureState,
    /// Probability of the ψ⁻ projection, `(|α|²|δ|² + |β|²|γ|²)/2`.
    pub theta: f64,
}

pub fn herald_project(a: &IonPhotonState, b: &IonPhotonState) -> Result<Herald> {
    let psi = bell_decompose(a, b).component(BellLabel::PsiMinus);
    let theta: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
    if theta < ZERO_HERALD_PROBABILITY {
        return Err(Error::ZeroProbability);
    }
    Ok(Herald { state: PureState::normalized(psi.to_vec())?, theta })
}

/// `½ σ₃ᵃ (σ₀ᵃσ₀ᵇ − σ₃ᵃσ₃ᵇ)` = diag(0, 1, −1, 0).
pub fn gate_operator() -> CMatrix {
    let z = nalgebra::DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)]);
    let id = CMatrix::identity(2, 2);
    let zz = z.kronecker(&z);
    let ii = id.kronecker(&id);
    z.kronecker(&id) * (ii - zz) * c(0.5, 0.0)
}

/// Herald through the beamsplitter in Fock space, one entry per detected
/// frequency pair (port 3, port 4): the unnormalized ion amplitudes of |ij⟩.
pub fn herald_via_beamsplitter(a: &IonPhotonState, b: &IonPhotonState) -> Vec<((Freq, Freq), [C64; 4])> {
    let freqs = [Freq::Blue, Freq::Red];
    let mut outs: Vec<((Freq, Freq), [C64; 4])> = Vec::new();
    for f3 in freqs {
        for f4 in freqs {
            outs.push(((f3, f4), [c(0.0, 0.0); 4]));
        }
    }
    for i in 0..2 {
        for j in 0..2 {
            let mut st = FockState::default();
            for fa in freqs {
                for fb in freqs {
                    st.add(&[Mode::new(1, fa), Mode::new(2, fb)], a.amp(i, fa) * b.amp(j, fb));
                }
            }
            let out = st.beamsplitter();
            for ((f3, f4), amps) in outs.iter_mut() {
                amps[2 * i + j] = out.amplitude(&[Mode::new(3, *f3), Mode::new(4, *f4)]);
            }
        }
    }
    outs
}

/// Herald with partially distinguishable photons of mode overlap V.
///
/// A fraction V² of the coincidence amplitude interferes as in the ideal
/// gate; the rest behaves like distinguishable photons, which reach separate
/// ports with probability ½ regardless of frequency and carry away which-path
/// information. Returns the normalized ion state and the herald probability.
pub fn herald_with_visibility(a: &IonPhotonState, b: &IonPhotonState, v: f64) -> Result<(DensityMatrix, f64)> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::Domain(format!("visibility {v} outside [0,1]")));
    }
    let v2 = v * v;
    let psi = bell_decompose(a, b).component(BellLabel::PsiMinus);
    let vec = nalgebra::DVector::from_row_slice(&psi);
    let mut m = &vec * vec.adjoint() * c(v2, 0.0);
    let pa = a.ion_populations();
    let pb = b.ion_populations();
    for i in 0..2 {
        for j in 0..2 {
            m[(2 * i + j, 2 * i + j)] += c(0.5 * (1.0 - v2) * pa[i] * pb[j], 0.0);
        }
    }
    let p = m.trace().re;
    if p < ZERO_HERALD_PROBABILITY {
        return Err(Error::ZeroProbability);
    }
    Ok((DensityMatrix::from_unnormalized(m)?, p))
}

// ---------------------------------------------------------------------------
// Detection budget

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OpticalChain {
    #[serde(default = "d_p_pi")]
    pub p_pi: f64,
    #[serde(default = "d_eta")]
    pub pmt_quantum_efficiency_eta: f64,
    #[serde(default = "d_fiber")]
    pub fiber_transmission: f64,
    #[serde(default = "d_optics")]
    pub optics_transmission: f64,
    #[serde(default = "d_xi")]
    pub branching_xi: f64,
    #[serde(default = "d_solid")]
    pub solid_angle_fraction: f64,
    #[serde(default = "d_rate")]
    pub attempt_rate: f64,
}

fn d_p_pi() -> f64 {
    0.5
}
fn d_eta() -> f64 {
    0.15
}
fn d_fiber() -> f64 {
    0.2
}
fn d_optics() -> f64 {
    0.95
}
fn d_xi() -> f64 {
    0.995
}
fn d_solid() -> f64 {
    0.02
}
fn d_rate() -> f64 {
    75e3
}

impl Default for OpticalChain {
    fn default() -> Self {
        OpticalChain {
            p_pi: d_p_pi(),
            pmt_quantum_efficiency_eta: d_eta(),
            fiber_transmission: d_fiber(),
            optics_transmission: d_optics(),
            branching_xi: d_xi(),
            solid_angle_fraction: d_solid(),
            attempt_rate: d_rate(),
        }
    }
}

impl OpticalChain {
    pub fn factors(&self) -> [(&'static str, f64); 6] {
        [
            ("p_pi", self.p_pi),
            ("pmt_quantum_efficiency_eta", self.pmt_quantum_efficiency_eta),
            ("fiber_transmission", self.fiber_transmission),
            ("optics_transmission", self.optics_transmission),
            ("branching_xi", self.branching_xi),
            ("solid_angle_fraction", self.solid_angle_fraction),
        ]
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in self.factors() {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Domain(format!("{name} = {v} outside [0,1]")));
            }
        }
        if !(self.attempt_rate > 0.0 && self.attempt_rate.is_finite()) {
            return Err(Error::Domain("attempt_rate must be positive".into()));
        }
        Ok(())
    }

    /// Single-photon detection probability per attempt.
    pub fn single_photon_efficiency(&self) -> f64 {
        self.factors().iter().map(|(_, v)| v).product()
    }
}

/// `ϑ · [p_π η T_fiber T_optics ξ ΔΩ/4π]²`.
pub fn success_probability(chain: &OpticalChain, theta: f64) -> Result<f64> {
    chain.validate()?;
    if !(0.0..=0.5).contains(&theta) {
        return Err(Error::Domain(format!("theta {theta} outside [0, 1/2]")));
    }
    Ok(theta * chain.single_photon_efficiency().powi(2))
}

// ---------------------------------------------------------------------------
// Gate characterization table

#[derive(Clone, Debug)]
pub struct GateRow {
    pub input_label: String,
    pub output_label: String,
    pub ion_a: PureState,
    pub ion_b: PureState,
    pub expected: Option<PureState>,
    pub formula: Option<ParityFormula>,
    pub theory_theta: f64,
}

fn qubit(a: (f64, f64), b: (f64, f64)) -> PureState {
    PureState::normalized(vec![c(a.0, a.1), c(b.0, b.1)]).expect("nonzero")
}

fn two(amps: [(f64, f64); 4]) -> PureState {
    PureState::normalized(amps.iter().map(|&(r, i)| c(r, i)).collect()).expect("nonzero")
}

/// The eight input combinations used to characterize the gate.
pub fn gate_table() -> Vec<GateRow> {
    let zero = qubit((1.0, 0.0), (0.0, 0.0));
    let one = qubit((0.0, 0.0), (1.0, 0.0));
    let plus = qubit((1.0, 0.0), (1.0, 0.0));
    let o = (0.0, 0.0);
    let l = (1.0, 0.0);
    let k01 = two([o, l, o, o]);
    let f = |s: &str| Some(s.parse::<ParityFormula>().expect("valid formula"));
    let row = |inp: &str, out: &str, a: PureState, b: PureState, e: Option<PureState>, fm, th| GateRow {
        input_label: inp.into(),
        output_label: out.into(),
        ion_a: a,
        ion_b: b,
        expected: e,
        formula: fm,
        theory_theta: th,
    };
    vec![
        row("(0+1)(0+1)", "01-10", plus.clone(), plus.clone(), Some(two([o, l, (-1.0, 0.0), o])),
            f("1 - P_xx - P_yy - P_zz"), 0.25),
        row("(0+i1)(0+1)", "01-i10", qubit(l, (0.0, 1.0)), plus.clone(), Some(two([o, l, (0.0, -1.0), o])),
            f("1 - P_xy + P_yx - P_zz"), 0.25),
        row("(0-1)(0+1)", "01+10", qubit(l, (-1.0, 0.0)), plus.clone(), Some(two([o, l, l, o])),
            f("1 + P_xx + P_yy - P_zz"), 0.25),
        row("(0-i1)(0+1)", "01+i10", qubit(l, (0.0, -1.0)), plus.clone(), Some(two([o, l, (0.0, 1.0), o])),
            f("1 + P_xy - P_yx - P_zz"), 0.25),
        row("(0+1)1", "01", plus.clone(), one.clone(), Some(k01.clone()), f("1 + P_Iz - P_zI - P_zz"), 0.25),
        row("0(0+1)", "01", zero.clone(), plus, Some(k01.clone()), f("1 + P_Iz - P_zI - P_zz"), 0.25),
        row("01", "01", zero.clone(), one, Some(k01), f("1 + P_Iz - P_zI - P_zz"), 0.5),
        row("00", "0", zero.clone(), zero, None, None, 0.0),
    ]
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum RowOutcome {
    Heralded { fidelity: f64, parity_fidelity: f64 },
    NeverHeralds,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RowResult {
    pub input: String,
    pub expected_output: String,
    pub formula: Option<String>,
    pub theta: f64,
    pub theory_theta: f64,
    pub herald_probability: f64,
    #[serde(flatten)]
    pub outcome: RowOutcome,
}

/// Evaluate every row at interferometer visibility `v` (1 = ideal).
pub fn evaluate_gate_table(rows: &[GateRow], v: f64) -> Result<Vec<RowResult>> {
    rows.iter()
        .map(|r| {
            let a = excite_state(&r.ion_a)?;
            let b = excite_state(&r.ion_b)?;
            let theta = bell_decompose(&a, &b).weight(BellLabel::PsiMinus);
            let base = |outcome, p| RowResult {
                input: r.input_label.clone(),
                expected_output: r.output_label.clone(),
                formula: r.formula.as_ref().map(|f| f.to_string()),
                theta,
                theory_theta: r.theory_theta,
                herald_probability: p,
                outcome,
            };
            let (Some(expected), Some(formula)) = (&r.expected, &r.formula) else {
                let p = match herald_with_visibility(&a, &b, v) {
                    Ok((_, p)) => p,
                    Err(Error::ZeroProbability) => 0.0,
                    Err(e) => return Err(e),
                };
                return Ok(base(RowOutcome::NeverHeralds, p));
            };
            let (rho, p) = match herald_with_visibility(&a, &b, v) {
                Ok(x) => x,
                Err(Error::ZeroProbability) => return Ok(base(RowOutcome::NeverHeralds, 0.0)),
                Err(e) => return Err(e),
            };
            let fid = fidelity(&rho, expected)?;
            let pf = fidelity_from_parities(&formula.parities_of(&rho)?, formula)?;
            Ok(base(RowOutcome::Heralded { fidelity: fid, parity_fidelity: pf }, p))
        })
        .collect()
}
