//! Maximum-likelihood state tomography from fluorescence counts.
//!
//! ρ = T T† / tr(T T†) with T lower triangular and real on the diagonal, so
//! every iterate is a physical state. The negative mean log-likelihood is
//! minimized by BFGS with an analytic gradient.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

use super::{basis_rotation, c, hermitize, Basis, CMatrix, DensityMatrix};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SettingCounts {
    /// One letter per ion from {x, y, z}, ion a first.
    pub basis: String,
    /// Outcome bit strings to counts; "01" means ion a gave 0 and ion b gave 1.
    pub counts: BTreeMap<String, u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
pub struct TomographyCounts {
    pub settings: Vec<SettingCounts>,
}

impl SettingCounts {
    pub fn bases(&self) -> Result<Vec<Basis>> {
        self.basis
            .chars()
            .map(|ch| match Basis::from_char(ch)? {
                Basis::I => Err(Error::Domain("tomography settings need x, y or z".into())),
                b => Ok(b),
            })
            .collect()
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    /// Counts indexed by outcome integer, bit of ion a most significant.
    pub fn by_index(&self, n_qubits: usize) -> Result<Vec<u64>> {
        let mut v = vec![0u64; 1 << n_qubits];
        for (k, &n) in &self.counts {
            if k.len() != n_qubits || !k.chars().all(|ch| ch == '0' || ch == '1') {
                return Err(Error::Domain(format!("bad outcome label {k:?}")));
            }
            v[usize::from_str_radix(k, 2).expect("binary")] += n;
        }
        Ok(v)
    }
}

fn outcome_label(index: usize, n_qubits: usize) -> String {
    format!("{index:0width$b}", width = n_qubits)
}

/// All 3^n settings in x, y, z order.
pub fn all_settings(n_qubits: usize) -> Vec<Vec<Basis>> {
    let mut out = vec![vec![]];
    for _ in 0..n_qubits {
        out = out
            .into_iter()
            .flat_map(|p| {
                [Basis::X, Basis::Y, Basis::Z].into_iter().map(move |b| {
                    let mut q = p.clone();
                    q.push(b);
                    q
                })
            })
            .collect();
    }
    out
}

/// POVM element for `outcome` after the basis rotations of `setting`.
pub fn measurement_operator(setting: &[Basis], outcome: usize) -> CMatrix {
    let n = setting.len();
    let mut u = CMatrix::identity(1, 1);
    for &b in setting {
        u = u.kronecker(&basis_rotation(b));
    }
    let d = 1 << n;
    let mut p = CMatrix::zeros(d, d);
    p[(outcome, outcome)] = c(1.0, 0.0);
    u.adjoint() * p * u
}

/// Multinomial sampling of `shots` detections per setting.
pub fn sample_counts<R: Rng>(
    rho: &DensityMatrix,
    settings: &[Vec<Basis>],
    shots: u64,
    rng: &mut R,
) -> TomographyCounts {
    let n = rho.n_qubits();
    let d = 1 << n;
    let mut out = TomographyCounts::default();
    for s in settings {
        let probs: Vec<f64> =
            (0..d).map(|o| rho.expectation(&measurement_operator(s, o)).re.max(0.0)).collect();
        let mut left = shots;
        let mut mass: f64 = probs.iter().sum();
        let mut counts = BTreeMap::new();
        for (o, &p) in probs.iter().enumerate() {
            let k = if o + 1 == d {
                left
            } else if left == 0 || mass <= 0.0 {
                0
            } else {
                let q = (p / mass).clamp(0.0, 1.0);
                Binomial::new(left, q).expect("valid binomial").sample(rng)
            };
            counts.insert(outcome_label(o, n), k);
            left -= k;
            mass -= p;
        }
        out.settings.push(SettingCounts {
            basis: s.iter().map(|b| b.label()).collect(),
            counts,
        });
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MlOptions {
    pub max_iterations: usize,
    pub gradient_tolerance: f64,
}

impl Default for MlOptions {
    fn default() -> Self {
        MlOptions { max_iterations: 5000, gradient_tolerance: 1e-10 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MlReport {
    pub rho: DensityMatrix,
    pub iterations: usize,
    pub gradient_norm: f64,
    pub log_likelihood: f64,
}

struct Problem {
    d: usize,
    // (count, POVM element) with count > 0.
    terms: Vec<(f64, CMatrix)>,
    total: f64,
}

impl Problem {
    fn build(counts: &TomographyCounts, n_qubits: usize) -> Result<Problem> {
        let need = 3usize.pow(n_qubits as u32);
        let mut seen = BTreeSet::new();
        let mut terms = Vec::new();
        let mut total = 0.0;
        for s in &counts.settings {
            let bases = s.bases()?;
            if bases.len() != n_qubits {
                return Err(Error::Dimension(format!(
                    "setting {:?} does not address {n_qubits} qubits",
                    s.basis
                )));
            }
            if !seen.insert(bases.clone()) {
                return Err(Error::Domain(format!("setting {:?} listed twice", s.basis)));
            }
            if s.total() == 0 {
                return Err(Error::InsufficientSettings(format!("setting {:?} has no counts", s.basis)));
            }
            for (o, &k) in s.by_index(n_qubits)?.iter().enumerate() {
                if k > 0 {
                    terms.push((k as f64, measurement_operator(&bases, o)));
                    total += k as f64;
                }
            }
        }
        if seen.len() < need {
            return Err(Error::InsufficientSettings(format!(
                "{} settings given, {need} needed",
                seen.len()
            )));
        }
        Ok(Problem { d: 1 << n_qubits, terms, total })
    }

    fn t_of(&self, x: &DVector<f64>) -> CMatrix {
        let d = self.d;
        let mut t = CMatrix::zeros(d, d);
        let mut k = 0;
        for i in 0..d {
            t[(i, i)] = c(x[k], 0.0);
            k += 1;
        }
        for i in 0..d {
            for j in 0..i {
                t[(i, j)] = c(x[k], x[k + 1]);
                k += 2;
            }
        }
        t
    }

    /// Negative mean log-likelihood and its gradient.
    fn eval(&self, x: &DVector<f64>) -> (f64, DVector<f64>) {
        let t = self.t_of(x);
        let a = &t * t.adjoint();
        let tr = a.trace().re;
        let d = self.d;
        let mut f = tr.ln();
        let mut g = CMatrix::identity(d, d) * c(1.0 / tr, 0.0);
        for (n, pi) in &self.terms {
            let p = (pi * &a).trace().re;
            if !(p > 0.0) {
                return (f64::INFINITY, DVector::zeros(x.len()));
            }
            f -= n / self.total * p.ln();
            g -= pi * c(n / (self.total * p), 0.0);
        }
        let m = t.adjoint() * g;
        let mut grad = DVector::zeros(x.len());
        let mut k = 0;
        for i in 0..d {
            grad[k] = 2.0 * m[(i, i)].re;
            k += 1;
        }
        for i in 0..d {
            for j in 0..i {
                grad[k] = 2.0 * m[(j, i)].re;
                grad[k + 1] = -2.0 * m[(j, i)].im;
                k += 2;
            }
        }
        (f, grad)
    }

    fn rho_of(&self, x: &DVector<f64>) -> Result<DensityMatrix> {
        let t = self.t_of(x);
        DensityMatrix::from_unnormalized(hermitize(&(&t * t.adjoint())))
    }
}

/// Log-likelihood `Σ n ln p` of counts under ρ.
pub fn log_likelihood(counts: &TomographyCounts, rho: &DensityMatrix) -> Result<f64> {
    let n = rho.n_qubits();
    let mut s = 0.0;
    for set in &counts.settings {
        let b = set.bases()?;
        for (o, &k) in set.by_index(n)?.iter().enumerate() {
            if k > 0 {
                s += k as f64 * rho.expectation(&measurement_operator(&b, o)).re.max(1e-300).ln();
            }
        }
    }
    Ok(s)
}

pub fn ml_tomography(counts: &TomographyCounts, n_qubits: usize) -> Result<DensityMatrix> {
    Ok(ml_tomography_with(counts, n_qubits, MlOptions::default())?.rho)
}

pub fn ml_tomography_with(
    counts: &TomographyCounts,
    n_qubits: usize,
    opts: MlOptions,
) -> Result<MlReport> {
    if !(1..=2).contains(&n_qubits) {
        return Err(Error::Dimension("one or two qubits supported".into()));
    }
    let prob = Problem::build(counts, n_qubits)?;
    let d = prob.d;
    let dim = d * d;
    // Start from the maximally mixed state.
    let mut x = DVector::zeros(dim);
    for i in 0..d {
        x[i] = 1.0 / (d as f64).sqrt();
    }
    let (mut f, mut g) = prob.eval(&x);
    let mut h = DMatrix::<f64>::identity(dim, dim);
    let mut it = 0;
    let mut gnorm = g.amax();
    while gnorm >= opts.gradient_tolerance {
        if it >= opts.max_iterations {
            return Err(Error::NonConvergence(format!(
                "ML tomography stopped after {it} iterations with gradient {gnorm:e}"
            )));
        }
        it += 1;
        let mut p = -(&h * &g);
        let mut slope = g.dot(&p);
        if slope >= 0.0 {
            h = DMatrix::identity(dim, dim);
            p = -g.clone();
            slope = g.dot(&p);
        }
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..80 {
            let xn = &x + &p * step;
            let (fnew, gnew) = prob.eval(&xn);
            let armijo = fnew <= f + 1e-4 * step * slope;
            // Near the optimum f stops resolving progress; accept steps that
            // keep f within rounding and shrink the gradient.
            let flat = (fnew - f).abs() <= 1e-14 * (1.0 + f.abs()) && gnew.amax() < gnorm;
            if fnew.is_finite() && (armijo || flat) {
                accepted = Some((xn, fnew, gnew));
                break;
            }
            step *= 0.5;
        }
        let Some((xn, fnew, gnew)) = accepted else {
            return Err(Error::NonConvergence(format!(
                "line search failed at iteration {it} with gradient {gnorm:e}"
            )));
        };
        let s = &xn - &x;
        let y = &gnew - &g;
        let sy = s.dot(&y);
        if sy > 1e-300 {
            let rho = 1.0 / sy;
            let hy = &h * &y;
            let yhy = y.dot(&hy);
            h += (&s * s.transpose()) * ((1.0 + rho * yhy) * rho)
                - (&hy * s.transpose() + &s * hy.transpose()) * rho;
        }
        x = xn;
        f = fnew;
        g = gnew;
        gnorm = g.amax();
    }
    let rho = prob.rho_of(&x)?;
    Ok(MlReport {
        log_likelihood: log_likelihood(counts, &rho)?,
        rho,
        iterations: it,
        gradient_norm: gnorm,
    })
}
