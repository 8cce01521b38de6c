//! Heralded teleportation from ion a to ion b.
//!
//! Ion b starts in (|0⟩+|1⟩)/√2 and ion a carries α|0⟩+β|1⟩. After the herald
//! the ions hold α|01⟩ − β|10⟩. Ion a is rotated by R_y(π/2) and measured;
//! outcome 0 leaves α|1⟩+β|0⟩ on b (fixed by R_x(π)), outcome 1 leaves
//! α|1⟩−β|0⟩ (fixed by R_y(π)).
//!
//! Error models: partial photon distinguishability (visibility V), detection
//! errors ε_a on the herald-side measurement and ε_b on the final readout.
//! Composition follows the experiment: interference, then measurement of a,
//! then readout of b.

use rand::Rng;
use rand_distr::{Binomial, Distribution, Geometric};
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};

use crate::exec::{map_indexed, Exec};
use crate::gate::{excite_entangle, herald_project, herald_with_visibility, success_probability, OpticalChain};
use crate::quantum::{
    c, embed, fidelity, mub_states, rotation, stokes_reconstruct, Axis, CMatrix, DensityMatrix, PureState,
    Rotate, C64,
};
use crate::rng::{substream, substream2, ChaCha8Rng};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub input_alpha: C64,
    pub input_beta: C64,
    #[serde(default = "d_v")]
    pub visibility_v: f64,
    #[serde(default = "d_ea")]
    pub detection_error_a: f64,
    #[serde(default = "d_eb")]
    pub detection_error_b: f64,
    #[serde(default)]
    pub chain: OpticalChain,
    #[serde(default)]
    pub master_seed: u64,
}

fn d_v() -> f64 {
    0.98
}
fn d_ea() -> f64 {
    0.015
}
fn d_eb() -> f64 {
    0.025
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        ProtocolConfig {
            input_alpha: c(1.0, 0.0),
            input_beta: c(0.0, 0.0),
            visibility_v: d_v(),
            detection_error_a: d_ea(),
            detection_error_b: d_eb(),
            chain: OpticalChain::default(),
            master_seed: 0,
        }
    }
}

impl ProtocolConfig {
    pub fn ideal() -> Self {
        ProtocolConfig { visibility_v: 1.0, detection_error_a: 0.0, detection_error_b: 0.0, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        check_input(self.input_alpha, self.input_beta)?;
        if !(0.0..=1.0).contains(&self.visibility_v) {
            return Err(Error::Domain("visibility outside [0,1]".into()));
        }
        for e in [self.detection_error_a, self.detection_error_b] {
            if !(0.0..=0.5).contains(&e) {
                return Err(Error::Domain(format!("detection error {e} outside [0, 0.5]")));
            }
        }
        self.chain.validate()
    }

    pub fn with_input(&self, q: &PureState) -> Self {
        ProtocolConfig { input_alpha: q.amp(0), input_beta: q.amp(1), ..self.clone() }
    }

    pub fn target(&self) -> Result<PureState> {
        PureState::qubit(self.input_alpha, self.input_beta)
    }
}

fn check_input(alpha: C64, beta: C64) -> Result<()> {
    let n = alpha.norm_sqr() + beta.norm_sqr();
    if (n - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidState(format!("|α|²+|β|² = {n}")));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Correction {
    #[serde(rename = "Rx(pi)")]
    RxPi,
    #[serde(rename = "Ry(pi)")]
    RyPi,
}

impl Correction {
    pub fn for_outcome(m: u8) -> Self {
        if m == 0 {
            Correction::RxPi
        } else {
            Correction::RyPi
        }
    }

    pub fn unitary(self) -> CMatrix {
        match self {
            Correction::RxPi => rotation(Axis::X, PI),
            Correction::RyPi => rotation(Axis::Y, PI),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IdealBranch {
    pub outcome: u8,
    pub probability: f64,
    pub before_correction: PureState,
    pub correction: Correction,
    pub final_state: PureState,
}

fn ion_b_ready() -> PureState {
    PureState::qubit(c(FRAC_1_SQRT_2, 0.0), c(FRAC_1_SQRT_2, 0.0)).expect("normalized")
}

/// Noise-free protocol, both measurement branches.
pub fn run_ideal(alpha: C64, beta: C64) -> Result<[IdealBranch; 2]> {
    check_input(alpha, beta)?;
    let a = excite_entangle(alpha, beta)?;
    let b = ion_b_ready();
    let b = excite_entangle(b.amp(0), b.amp(1))?;
    let ions = herald_project(&a, &b)?.state.rotate(0, Axis::Y, FRAC_PI_2)?;
    let branch = |m: u8| -> Result<IdealBranch> {
        let off = 2 * m as usize;
        let amps = vec![ions.amp(off), ions.amp(off + 1)];
        let probability = amps.iter().map(|z| z.norm_sqr()).sum();
        let before = PureState::normalized(amps)?;
        let correction = Correction::for_outcome(m);
        let final_state = before.apply(&correction.unitary())?;
        Ok(IdealBranch { outcome: m, probability, before_correction: before, correction, final_state })
    };
    Ok([branch(0)?, branch(1)?])
}

/// Diagonal measurement operator for reporting `outcome` with error ε:
/// `M_0 = √(1−ε)|0⟩⟨0| + √ε|1⟩⟨1|`, `M_1 = √ε|0⟩⟨0| + √(1−ε)|1⟩⟨1|`.
fn report_weights(outcome: u8, eps: f64) -> [f64; 2] {
    if outcome == 0 {
        [1.0 - eps, eps]
    } else {
        [eps, 1.0 - eps]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NoisyBranch {
    pub outcome: u8,
    pub probability: f64,
    pub correction: Correction,
    pub rho_b: DensityMatrix,
}

/// Full density-matrix pipeline with visibility `v` and ion-a error `eps_a`.
pub fn run_noisy(alpha: C64, beta: C64, v: f64, eps_a: f64) -> Result<[NoisyBranch; 2]> {
    check_input(alpha, beta)?;
    if !(0.0..=0.5).contains(&eps_a) {
        return Err(Error::Domain(format!("detection error {eps_a} outside [0, 0.5]")));
    }
    let a = excite_entangle(alpha, beta)?;
    let b = ion_b_ready();
    let b = excite_entangle(b.amp(0), b.amp(1))?;
    let (rho, _) = herald_with_visibility(&a, &b, v)?;
    let rho = rho.evolve(&embed(&rotation(Axis::Y, FRAC_PI_2), 0, 2)?)?;
    let m = rho.matrix();
    // Conditional (unnormalized) states of b for each true outcome of a.
    let block = |k: usize| CMatrix::from_fn(2, 2, |r, s| m[(2 * k + r, 2 * k + s)]);
    let blocks = [block(0), block(1)];
    let branch = |out: u8| -> Result<NoisyBranch> {
        let w = report_weights(out, eps_a);
        let un = &blocks[0] * c(w[0], 0.0) + &blocks[1] * c(w[1], 0.0);
        let probability = un.trace().re;
        let correction = Correction::for_outcome(out);
        let rho_b = DensityMatrix::from_unnormalized(un)?.evolve(&correction.unitary())?;
        Ok(NoisyBranch { outcome: out, probability, correction, rho_b })
    };
    Ok([branch(0)?, branch(1)?])
}

/// Closed form for ion b after imperfect interference.
pub fn rho_b_mode_mismatch(alpha: C64, beta: C64, v: f64) -> Result<DensityMatrix> {
    check_input(alpha, beta)?;
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::Domain("visibility outside [0,1]".into()));
    }
    let v2 = v * v;
    let (a2, b2) = (alpha.norm_sqr(), beta.norm_sqr());
    let off = alpha * beta.conj() * v2;
    let m = CMatrix::from_row_slice(
        2,
        2,
        &[c(a2 + b2 * (1.0 - v2), 0.0), off, off.conj(), c(b2 + a2 * (1.0 - v2), 0.0)],
    ) / c(2.0 - v2, 0.0);
    DensityMatrix::new(m)
}

/// `1/(2 − V²)`.
pub fn fidelity_vs_visibility(v: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::Domain("visibility outside [0,1]".into()));
    }
    Ok(1.0 / (2.0 - v * v))
}

/// Closed form for ion b when ion a is misread with probability ε_a.
pub fn rho_b_imperfect_detection(alpha: C64, beta: C64, eps_a: f64) -> Result<DensityMatrix> {
    check_input(alpha, beta)?;
    if !(0.0..=0.5).contains(&eps_a) {
        return Err(Error::Domain(format!("detection error {eps_a} outside [0, 0.5]")));
    }
    let k = 1.0 - 2.0 * eps_a;
    let off = alpha * beta.conj() * k;
    let m = CMatrix::from_row_slice(
        2,
        2,
        &[c(alpha.norm_sqr(), 0.0), off, off.conj(), c(beta.norm_sqr(), 0.0)],
    );
    DensityMatrix::new(m)
}

/// The six probabilities seen through ε_b-corrupted readout, in the order
/// (P0, P1, P(0+1), P(0−1), P(0+i1), P(0−i1)).
///
/// x is read as R_y(π/2) then z, where a reported 1 means |0⟩+|1⟩;
/// y is read as R_x(π/2) then z, where a reported 0 means |0⟩+i|1⟩.
pub fn measured_probabilities(rho: &DensityMatrix, eps_b: f64) -> Result<[f64; 6]> {
    if rho.dim() != 2 {
        return Err(Error::Dimension("single ion expected".into()));
    }
    let p0 = |r: &DensityMatrix| (1.0 - eps_b) * r.get(0, 0).re + eps_b * r.get(1, 1).re;
    let z0 = p0(rho);
    let x0 = p0(&rho.rotate(0, Axis::Y, FRAC_PI_2)?);
    let y0 = p0(&rho.rotate(0, Axis::X, FRAC_PI_2)?);
    Ok([z0, 1.0 - z0, 1.0 - x0, x0, y0, 1.0 - y0])
}

pub fn reconstruct(probs: [f64; 6]) -> Result<DensityMatrix> {
    stokes_reconstruct(probs[0], probs[1], probs[2], probs[3], probs[4], probs[5])
}

pub fn reconstructed_fidelity_with_detection(alpha: C64, beta: C64, eps_a: f64, eps_b: f64) -> Result<f64> {
    if !(0.0..=0.5).contains(&eps_b) {
        return Err(Error::Domain(format!("detection error {eps_b} outside [0, 0.5]")));
    }
    let rho = rho_b_imperfect_detection(alpha, beta, eps_a)?;
    let rec = reconstruct(measured_probabilities(&rho, eps_b)?)?;
    fidelity(&rec, &PureState::qubit(alpha, beta)?)
}

/// Visibility first, then ion-a detection, then ε_b readout and Stokes
/// reconstruction. Both branches of ion a agree; branch 0 is returned.
pub fn combined_error_model(alpha: C64, beta: C64, v: f64, eps_a: f64, eps_b: f64) -> Result<DensityMatrix> {
    if !(0.0..=0.5).contains(&eps_b) {
        return Err(Error::Domain(format!("detection error {eps_b} outside [0, 0.5]")));
    }
    let [b0, _] = run_noisy(alpha, beta, v, eps_a)?;
    reconstruct(measured_probabilities(&b0.rho_b, eps_b)?)
}

// ---------------------------------------------------------------------------
// Mode overlap

/// Two sampled mode profiles on a shared quadrature.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeOverlap {
    /// Quadrature weight of each sample (cell area on a uniform grid).
    pub weights: Vec<f64>,
    pub mode_1: Vec<C64>,
    pub mode_2: Vec<C64>,
}

impl ModeOverlap {
    pub fn uniform(cell: f64, mode_1: Vec<C64>, mode_2: Vec<C64>) -> Self {
        let n = mode_1.len();
        ModeOverlap { weights: vec![cell; n], mode_1, mode_2 }
    }

    pub fn intensities(&self) -> [f64; 2] {
        let i = |m: &[C64]| m.iter().zip(&self.weights).map(|(z, w)| z.norm_sqr() * w).sum();
        [i(&self.mode_1), i(&self.mode_2)]
    }
}

/// `|∫ f e*| / I`.
pub fn visibility_from_modes(overlap: &ModeOverlap) -> Result<f64> {
    let n = overlap.weights.len();
    if overlap.mode_1.len() != n || overlap.mode_2.len() != n {
        return Err(Error::GridMismatch(format!(
            "{} weights for modes of length {} and {}",
            n,
            overlap.mode_1.len(),
            overlap.mode_2.len()
        )));
    }
    let [i1, i2] = overlap.intensities();
    if !(i1 > 0.0) || (i1 - i2).abs() > 1e-6 * i1 {
        return Err(Error::Domain(format!("mode intensities differ: {i1:e} vs {i2:e}")));
    }
    let s: C64 = (0..n).map(|k| overlap.mode_2[k] * overlap.mode_1[k].conj() * overlap.weights[k]).sum();
    let v = s.norm() / i1;
    if v > 1.0 + 1e-9 {
        log::warn!("visibility {v} exceeds 1");
    }
    Ok(v.clamp(0.0, 1.0))
}

// ---------------------------------------------------------------------------
// Monte Carlo

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunRecord {
    pub attempts_before_herald: u64,
    pub herald_wall_time: f64,
    pub measurement_outcome_a: Option<u8>,
    /// Herald bit and the ion-a result; exactly two on success.
    pub classical_bits_sent: Vec<u8>,
    pub conditional_rotation_applied: Option<Correction>,
    #[serde(skip)]
    pub final_rho_b: Option<DensityMatrix>,
    pub timed_out: bool,
}

pub fn herald_probability(chain: &OpticalChain) -> Result<f64> {
    success_probability(chain, 0.25)
}

fn sample_attempts(p: f64, rng: &mut ChaCha8Rng) -> Result<u64> {
    let g = Geometric::new(p).map_err(|e| Error::Domain(format!("geometric({p}): {e}")))?;
    Ok(g.sample(rng).saturating_add(1))
}

/// One heralded run, with the herald-side branch drawn from its true
/// probability. `max_wall_time` of `None` waits indefinitely.
pub fn montecarlo_protocol_with(
    cfg: &ProtocolConfig,
    p: f64,
    max_wall_time: Option<f64>,
    rng: &mut ChaCha8Rng,
) -> Result<RunRecord> {
    let attempts = sample_attempts(p, rng)?;
    let wall = attempts as f64 / cfg.chain.attempt_rate;
    if let Some(limit) = max_wall_time {
        if wall > limit {
            return Ok(RunRecord {
                attempts_before_herald: (limit * cfg.chain.attempt_rate).floor() as u64,
                herald_wall_time: limit,
                measurement_outcome_a: None,
                classical_bits_sent: Vec::new(),
                conditional_rotation_applied: None,
                final_rho_b: None,
                timed_out: true,
            });
        }
    }
    let branches = run_noisy(cfg.input_alpha, cfg.input_beta, cfg.visibility_v, cfg.detection_error_a)?;
    let u: f64 = rng.random();
    let pick = if u < branches[0].probability / (branches[0].probability + branches[1].probability) {
        0
    } else {
        1
    };
    let br = &branches[pick];
    Ok(RunRecord {
        attempts_before_herald: attempts,
        herald_wall_time: wall,
        measurement_outcome_a: Some(br.outcome),
        classical_bits_sent: vec![1, br.outcome],
        conditional_rotation_applied: Some(br.correction),
        final_rho_b: Some(br.rho_b.clone()),
        timed_out: false,
    })
}

pub fn montecarlo_protocol(cfg: &ProtocolConfig, max_wall_time: Option<f64>) -> Result<RunRecord> {
    cfg.validate()?;
    let p = herald_probability(&cfg.chain)?;
    montecarlo_protocol_with(cfg, p, max_wall_time, &mut substream(cfg.master_seed, 0))
}

#[derive(Clone, Debug, PartialEq)]
pub struct SuiteOptions {
    pub shots_per_basis: u64,
    pub heralds_per_state: u32,
    pub seed: u64,
    /// Exact probabilities instead of sampled shots.
    pub analytic: bool,
    pub max_wall_time: Option<f64>,
    /// Overrides the chain's herald probability (e.g. 1 for quick runs).
    pub herald_probability: Option<f64>,
    pub exec: Exec,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions {
            shots_per_basis: 1000,
            heralds_per_state: 50,
            seed: 0,
            analytic: false,
            max_wall_time: None,
            herald_probability: None,
            exec: Exec::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateResult {
    pub label: String,
    pub target: PureState,
    pub rho: DensityMatrix,
    pub fidelity: f64,
    /// Reported-outcome counts per basis: (z: n0, n1), (x: n(0+1), n(0−1)), (y: n(0+i1), n(0−i1)).
    pub counts: [[u64; 2]; 3],
    pub records: Vec<RunRecord>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SuiteResult {
    pub states: Vec<StateResult>,
    pub average_fidelity: f64,
}

impl SuiteResult {
    pub fn attempts(&self) -> Vec<u64> {
        self.states.iter().flat_map(|s| s.records.iter().map(|r| r.attempts_before_herald)).collect()
    }
}

fn sample_readout(rho: &DensityMatrix, eps_b: f64, shots: u64, rng: &mut ChaCha8Rng) -> Result<[[u64; 2]; 3]> {
    let p = measured_probabilities(rho, eps_b)?;
    let mut out = [[0u64; 2]; 3];
    for (k, row) in out.iter_mut().enumerate() {
        let q = p[2 * k].clamp(0.0, 1.0);
        let n = if shots == 0 { 0 } else { Binomial::new(shots, q).expect("valid").sample(rng) };
        *row = [n, shots - n];
    }
    Ok(out)
}

/// Teleport each of the six basis states, read ion b out in three bases and
/// reconstruct it.
pub fn run_protocol_suite(template: &ProtocolConfig, opts: &SuiteOptions) -> Result<SuiteResult> {
    template.validate()?;
    if opts.shots_per_basis == 0 || opts.heralds_per_state == 0 {
        return Err(Error::Domain("shots and heralds per state must be positive".into()));
    }
    let p = match opts.herald_probability {
        Some(p) => p,
        None => herald_probability(&template.chain)?,
    };
    let mut states = Vec::new();
    for (si, (label, target)) in mub_states().into_iter().enumerate() {
        let cfg = template.with_input(&target);
        if opts.analytic {
            let rho = combined_error_model(
                cfg.input_alpha,
                cfg.input_beta,
                cfg.visibility_v,
                cfg.detection_error_a,
                cfg.detection_error_b,
            )?;
            let fid = fidelity(&rho, &target)?;
            states.push(StateResult { label: label.into(), target, rho, fidelity: fid, counts: [[0; 2]; 3], records: vec![] });
            continue;
        }
        let h = opts.heralds_per_state as u64;
        let runs = map_indexed(opts.exec, h as usize, |hi| -> Result<(RunRecord, [[u64; 2]; 3])> {
            let mut rng = substream2(opts.seed, si as u32, hi as u32);
            let rec = montecarlo_protocol_with(&cfg, p, opts.max_wall_time, &mut rng)?;
            let shots = opts.shots_per_basis / h + u64::from((hi as u64) < opts.shots_per_basis % h);
            let counts = match &rec.final_rho_b {
                Some(r) => sample_readout(r, cfg.detection_error_b, shots, &mut rng)?,
                None => [[0; 2]; 3],
            };
            Ok((rec, counts))
        });
        let mut counts = [[0u64; 2]; 3];
        let mut records = Vec::with_capacity(runs.len());
        for r in runs {
            let (rec, cts) = r?;
            if rec.timed_out {
                return Err(Error::NonConvergence(format!(
                    "no herald for state {label} within {:?} s",
                    opts.max_wall_time
                )));
            }
            for k in 0..3 {
                counts[k][0] += cts[k][0];
                counts[k][1] += cts[k][1];
            }
            records.push(rec);
        }
        let f = |k: usize| {
            let n = (counts[k][0] + counts[k][1]) as f64;
            (counts[k][0] as f64 / n, counts[k][1] as f64 / n)
        };
        let (z0, z1) = f(0);
        let (xp, xm) = f(1);
        let (yp, ym) = f(2);
        let rho = stokes_reconstruct(z0, z1, xp, xm, yp, ym)?;
        let fid = fidelity(&rho, &target)?;
        states.push(StateResult { label: label.into(), target, rho, fidelity: fid, counts, records });
    }
    let average_fidelity = states.iter().map(|s| s.fidelity).sum::<f64>() / states.len() as f64;
    Ok(SuiteResult { states, average_fidelity })
}
