//! Motion of a charged particle in a linear rf quadrupole trap.
//!
//! Transverse motion obeys the Mathieu equation with a = 0,
//! `x'' + 2q cos(2τ) x = 0`, `τ = Ωt/2`. The characteristic exponent β is
//! found from the two-sided continued fraction of the Floquet recursion.

use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, SQRT_2};

use crate::units::{amu, mhz_to_angular, mm, ELEMENTARY_CHARGE};
use crate::{Error, Result};

pub const STABILITY_LIMIT: f64 = 0.9;
pub const DEFAULT_CF_DEPTH: usize = 24;
pub const CF_TOLERANCE: f64 = 1e-12;
pub const DEFAULT_STEPS_PER_PERIOD: usize = 200;
pub const MIN_GRID_STEPS_PER_PERIOD: f64 = 20.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrapConfig {
    pub drive_voltage_v0: f64,
    pub drive_frequency_omega: f64,
    pub electrode_distance_r: f64,
    #[serde(default)]
    pub static_voltage_u0: f64,
    #[serde(default = "default_z0")]
    pub axial_distance_z0: f64,
    pub particle_mass: f64,
    #[serde(default = "default_charge")]
    pub particle_charge: f64,
    #[serde(default = "default_eta")]
    pub geometric_scale_eta: f64,
}

fn default_z0() -> f64 {
    mm(3.0)
}
fn default_charge() -> f64 {
    ELEMENTARY_CHARGE
}
fn default_eta() -> f64 {
    1.0
}

impl TrapConfig {
    /// Yb+ four-rod trap: 1 kV at 38 MHz, 0.46 mm to the electrodes.
    pub fn reference() -> Self {
        TrapConfig {
            drive_voltage_v0: 1000.0,
            drive_frequency_omega: mhz_to_angular(38.0),
            electrode_distance_r: mm(0.46),
            static_voltage_u0: 0.0,
            axial_distance_z0: mm(3.0),
            particle_mass: amu(171.0),
            particle_charge: ELEMENTARY_CHARGE,
            geometric_scale_eta: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("electrode_distance_r", self.electrode_distance_r),
            ("drive_frequency_omega", self.drive_frequency_omega),
            ("particle_mass", self.particle_mass),
            ("axial_distance_z0", self.axial_distance_z0),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Domain(format!("{name} must be positive, got {v}")));
            }
        }
        if self.particle_charge == 0.0 || !self.particle_charge.is_finite() {
            return Err(Error::Domain("particle_charge must be nonzero".into()));
        }
        if !(self.geometric_scale_eta > 0.0 && self.geometric_scale_eta <= 1.5) {
            return Err(Error::Domain(format!(
                "geometric_scale_eta {} outside (0, 1.5]",
                self.geometric_scale_eta
            )));
        }
        if !self.drive_voltage_v0.is_finite() || !self.static_voltage_u0.is_finite() {
            return Err(Error::Domain("voltages must be finite".into()));
        }
        Ok(())
    }

    /// Coefficient k of `x'' = -k cos(Ωt) x`.
    fn drive_coefficient(&self) -> f64 {
        self.geometric_scale_eta * self.particle_charge * self.drive_voltage_v0
            / (self.particle_mass * self.electrode_distance_r.powi(2))
    }
}

pub fn stability_q(trap: &TrapConfig) -> Result<f64> {
    trap.validate()?;
    Ok(2.0 * trap.drive_coefficient() / trap.drive_frequency_omega.powi(2))
}

fn check_stable(q: f64) -> Result<()> {
    if !q.is_finite() || q.abs() >= STABILITY_LIMIT {
        return Err(Error::Instability(format!("|q| = {} >= {STABILITY_LIMIT}", q.abs())));
    }
    Ok(())
}

/// Lowest-order secular frequency `η e V₀ / (√2 m Ω R²)`.
pub fn secular_frequency(trap: &TrapConfig) -> Result<f64> {
    let q = stability_q(trap)?;
    check_stable(q)?;
    Ok((trap.drive_coefficient() / (SQRT_2 * trap.drive_frequency_omega)).abs())
}

pub fn axial_frequency(trap: &TrapConfig) -> Result<f64> {
    trap.validate()?;
    let k = 2.0 * trap.particle_charge * trap.static_voltage_u0
        / (trap.particle_mass * trap.axial_distance_z0.powi(2));
    if k < 0.0 {
        return Err(Error::Domain("static potential is anti-trapping along z".into()));
    }
    Ok(k.sqrt())
}

/// Radial frequency weakened by the static axial confinement.
pub fn transverse_frequency_with_axial(omega_x: f64, omega_z: f64) -> Result<f64> {
    let r = omega_x * omega_x - 0.5 * omega_z * omega_z;
    if omega_z == 0.0 {
        return Ok(omega_x);
    }
    if r <= 0.0 {
        return Err(Error::Instability(
            "axial confinement destabilizes the transverse motion".into(),
        ));
    }
    Ok(r.sqrt())
}

pub fn transverse_frequency(trap: &TrapConfig) -> Result<f64> {
    transverse_frequency_with_axial(secular_frequency(trap)?, axial_frequency(trap)?)
}

/// Pseudopotential depth `e ψ_p` in joules, `ψ_p = e E₀² / (4 m Ω²)`.
pub fn pseudopotential_energy(field_amplitude_e0: f64, trap: &TrapConfig) -> Result<f64> {
    trap.validate()?;
    if field_amplitude_e0 < 0.0 {
        return Err(Error::Domain("field amplitude must be nonnegative".into()));
    }
    let e = trap.particle_charge;
    let psi = e * field_amplitude_e0.powi(2)
        / (4.0 * trap.particle_mass * trap.drive_frequency_omega.powi(2));
    Ok((e * psi).abs())
}

pub fn pseudopotential_ev(field_amplitude_e0: f64, trap: &TrapConfig) -> Result<f64> {
    Ok(pseudopotential_energy(field_amplitude_e0, trap)? / ELEMENTARY_CHARGE)
}

// ---------------------------------------------------------------------------
// Mathieu exponent

#[inline]
fn k2n(n: i64, beta: f64, q: f64) -> f64 {
    let s = 2.0 * n as f64 + beta;
    s * s / q
}

/// `C_{2s}/C_0` for s = +1 (sign = 1) or s = -1 (sign = -1).
fn cf_tail(q: f64, beta: f64, depth: usize, sign: i64) -> f64 {
    let mut t = 0.0;
    for n in (1..=depth as i64).rev() {
        t = 1.0 / (k2n(sign * n, beta, q) - t);
    }
    t
}

fn beta_residual(q: f64, beta: f64, depth: usize) -> f64 {
    beta * beta - q * (cf_tail(q, beta, depth, 1) + cf_tail(q, beta, depth, -1))
}

fn beta_at_depth(q: f64, depth: usize) -> f64 {
    // g < 0 near 0 and > 0 at 1 for stable q; there are no poles in between.
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if beta_residual(q, mid, depth) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// β from the continued fraction truncated at `depth` levels per side.
pub fn mathieu_beta(q: f64, depth: usize) -> Result<f64> {
    check_stable(q)?;
    if depth == 0 {
        return Err(Error::Domain("depth must be positive".into()));
    }
    let q = q.abs();
    if q == 0.0 {
        return Ok(0.0);
    }
    let b = beta_at_depth(q, depth);
    let b1 = beta_at_depth(q, depth + 1);
    if (b1 - b).abs() >= CF_TOLERANCE {
        return Err(Error::NonConvergence(format!(
            "beta changed by {:e} between depth {depth} and {}",
            (b1 - b).abs(),
            depth + 1
        )));
    }
    Ok(b)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MathieuSolution {
    pub q: f64,
    pub beta: f64,
    pub n_max: usize,
    /// `C_{2n}/C_0` for n = -n_max..=n_max.
    pub coefficient_ratios: Vec<f64>,
    pub max_residual: f64,
}

impl MathieuSolution {
    pub fn ratio(&self, n: i64) -> f64 {
        self.coefficient_ratios[(n + self.n_max as i64) as usize]
    }

    /// `-K_{2n} C_{2n} + C_{2n-2} + C_{2n+2}` for an interior index.
    pub fn residual(&self, n: i64) -> f64 {
        -k2n(n, self.beta, self.q) * self.ratio(n) + self.ratio(n - 1) + self.ratio(n + 1)
    }
}

pub fn mathieu_coefficients(q: f64, beta: f64, n_max: usize) -> Result<MathieuSolution> {
    check_stable(q)?;
    if n_max == 0 {
        return Err(Error::Domain("n_max must be positive".into()));
    }
    let q = q.abs();
    let len = 2 * n_max + 1;
    let mut c = vec![0.0; len];
    c[n_max] = 1.0;
    if q == 0.0 {
        return Ok(MathieuSolution { q, beta, n_max, coefficient_ratios: c, max_residual: 0.0 });
    }
    // Successive ratios C_{2n}/C_{2n-2} from tails evaluated well past n_max.
    let depth = n_max + DEFAULT_CF_DEPTH;
    for sign in [1_i64, -1] {
        let mut r = vec![0.0; depth + 2];
        for n in (1..=depth).rev() {
            r[n] = 1.0 / (k2n(sign * n as i64, beta, q) - r[n + 1]);
        }
        let mut acc = 1.0;
        for n in 1..=n_max {
            acc *= r[n];
            let idx = (n_max as i64 + sign * n as i64) as usize;
            c[idx] = acc;
        }
    }
    let tail = c[0].abs().max(c[len - 1].abs());
    if !(tail < 1e-10) || c.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonConvergence(format!(
            "coefficients have not decayed by n_max = {n_max} (tail {tail:e})"
        )));
    }
    let mut sol = MathieuSolution { q, beta, n_max, coefficient_ratios: c, max_residual: 0.0 };
    let m = n_max as i64;
    sol.max_residual = (1 - m..m).map(|n| sol.residual(n).abs()).fold(0.0, f64::max);
    Ok(sol)
}

// ---------------------------------------------------------------------------
// Trajectories

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub positions: Vec<f64>,
    pub secular_frequency: f64,
    pub micromotion_fraction: f64,
}

impl Trajectory {
    pub fn rms_difference(&self, other: &Trajectory) -> f64 {
        let n = self.positions.len().min(other.positions.len());
        let s: f64 = (0..n).map(|i| (self.positions[i] - other.positions[i]).powi(2)).sum();
        (s / n as f64).sqrt()
    }

    pub fn rms(&self) -> f64 {
        let s: f64 = self.positions.iter().map(|x| x * x).sum();
        (s / self.positions.len() as f64).sqrt()
    }
}

/// Uniform grid `t_k = k dt`, k = 0..n.
pub fn uniform_times(dt: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| k as f64 * dt).collect()
}

fn grid_step(times: &[f64]) -> Result<f64> {
    if times.len() < 2 {
        return Ok(0.0);
    }
    let dt = times[1] - times[0];
    if !(dt > 0.0) {
        return Err(Error::Domain("time grid must be increasing".into()));
    }
    for w in times.windows(2) {
        if ((w[1] - w[0]) - dt).abs() > 1e-9 * dt.max(w[1].abs() * 1e-6) {
            return Err(Error::Domain("time grid must be uniform".into()));
        }
    }
    Ok(dt)
}

/// `x(t) = A cos(ω_x t)(1 + (q/2) cos Ωt)` with `ω_x = βΩ/2`.
pub fn trajectory_closed_form(trap: &TrapConfig, amplitude: f64, times: &[f64]) -> Result<Trajectory> {
    let q = stability_q(trap)?;
    let beta = mathieu_beta(q, DEFAULT_CF_DEPTH)?;
    grid_step(times)?;
    let omega = trap.drive_frequency_omega;
    let w = 0.5 * beta * omega;
    let h = 0.5 * q.abs();
    let positions = times
        .iter()
        .map(|&t| amplitude * (w * t).cos() * (1.0 + h * (omega * t).cos()))
        .collect();
    Ok(Trajectory { times: times.to_vec(), positions, secular_frequency: w, micromotion_fraction: h })
}

/// Fixed-step RK4 integration of `x'' = -(η e V₀ / m R²) cos(Ωt) x`.
pub fn trajectory_numeric(trap: &TrapConfig, x0: f64, v0: f64, times: &[f64]) -> Result<Trajectory> {
    trajectory_numeric_with(trap, x0, v0, times, DEFAULT_STEPS_PER_PERIOD)
}

pub fn trajectory_numeric_with(
    trap: &TrapConfig,
    x0: f64,
    v0: f64,
    times: &[f64],
    steps_per_period: usize,
) -> Result<Trajectory> {
    let q = stability_q(trap)?;
    let dt = grid_step(times)?;
    let omega = trap.drive_frequency_omega;
    let period = 2.0 * PI / omega;
    if dt > period / MIN_GRID_STEPS_PER_PERIOD {
        return Err(Error::StepSize(format!(
            "output step {dt:e} s is coarser than period/{MIN_GRID_STEPS_PER_PERIOD}"
        )));
    }
    let steps_per_period = steps_per_period.max(DEFAULT_STEPS_PER_PERIOD);
    let sub = ((dt / period) * steps_per_period as f64).ceil().max(1.0) as usize;
    let h = dt / sub as f64;
    let k = trap.drive_coefficient();
    let acc = |t: f64, x: f64| -k * (omega * t).cos() * x;

    let mut positions = Vec::with_capacity(times.len());
    let (mut x, mut v) = (x0, v0);
    let t0 = times.first().copied().unwrap_or(0.0);
    for i in 0..times.len() {
        positions.push(x);
        if i + 1 == times.len() {
            break;
        }
        let base = t0 + i as f64 * dt;
        for s in 0..sub {
            let t = base + s as f64 * h;
            let (k1x, k1v) = (v, acc(t, x));
            let (k2x, k2v) = (v + 0.5 * h * k1v, acc(t + 0.5 * h, x + 0.5 * h * k1x));
            let (k3x, k3v) = (v + 0.5 * h * k2v, acc(t + 0.5 * h, x + 0.5 * h * k2x));
            let (k4x, k4v) = (v + h * k3v, acc(t + h, x + h * k3x));
            x += h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
            v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        }
    }
    let (w, frac) = match mathieu_beta(q, DEFAULT_CF_DEPTH) {
        Ok(b) => (0.5 * b * omega, 0.5 * q.abs()),
        Err(_) => (f64::NAN, f64::NAN),
    };
    Ok(Trajectory { times: times.to_vec(), positions, secular_frequency: w, micromotion_fraction: frac })
}

// ---------------------------------------------------------------------------
// Principal axes of a 2D potential

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PrincipalAxes {
    /// Ascending.
    pub eigenvalues: [f64; 2],
    /// Unit eigenvectors, matching `eigenvalues`.
    pub eigenvectors: [[f64; 2]; 2],
    pub degenerate: bool,
}

impl PrincipalAxes {
    /// Angle of the first axis in (-π/2, π/2].
    pub fn angle(&self) -> f64 {
        let [x, y] = self.eigenvectors[0];
        let mut a = y.atan2(x);
        if a <= -PI / 2.0 {
            a += PI;
        } else if a > PI / 2.0 {
            a -= PI;
        }
        a
    }
}

pub const DEGENERACY_TOLERANCE: f64 = 1e-9;

/// Hessian eigenpairs by central differences with `h = 1e-4 · length_scale`.
pub fn principal_axes<F>(potential: F, point: [f64; 2], length_scale: f64) -> Result<PrincipalAxes>
where
    F: Fn(f64, f64) -> f64,
{
    principal_axes_with_step(potential, point, 1e-4 * length_scale)
}

pub fn principal_axes_with_step<F>(potential: F, point: [f64; 2], h: f64) -> Result<PrincipalAxes>
where
    F: Fn(f64, f64) -> f64,
{
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Domain("finite-difference step must be positive".into()));
    }
    let [x, y] = point;
    let f0 = potential(x, y);
    let fxx = (potential(x + h, y) - 2.0 * f0 + potential(x - h, y)) / (h * h);
    let fyy = (potential(x, y + h) - 2.0 * f0 + potential(x, y - h)) / (h * h);
    let fxy = (potential(x + h, y + h) - potential(x + h, y - h) - potential(x - h, y + h)
        + potential(x - h, y - h))
        / (4.0 * h * h);
    if ![fxx, fyy, fxy].iter().all(|v| v.is_finite()) {
        return Err(Error::Domain("potential is not finite near the point".into()));
    }
    Ok(eigen_sym2(fxx, fxy, fyy))
}

fn eigen_sym2(a: f64, b: f64, c: f64) -> PrincipalAxes {
    let theta = 0.5 * (2.0 * b).atan2(a - c);
    let (s, co) = theta.sin_cos();
    let l1 = a * co * co + 2.0 * b * s * co + c * s * s;
    let l2 = a * s * s - 2.0 * b * s * co + c * co * co;
    let v1 = canonical_sign([co, s]);
    let v2 = canonical_sign([-s, co]);
    let scale = l1.abs().max(l2.abs());
    let degenerate = (l1 - l2).abs() <= DEGENERACY_TOLERANCE * scale;
    if l1 <= l2 {
        PrincipalAxes { eigenvalues: [l1, l2], eigenvectors: [v1, v2], degenerate }
    } else {
        PrincipalAxes { eigenvalues: [l2, l1], eigenvectors: [v2, v1], degenerate }
    }
}

/// Flip so the dominant component is positive.
fn canonical_sign(v: [f64; 2]) -> [f64; 2] {
    let d = if v[0].abs() >= v[1].abs() { v[0] } else { v[1] };
    if d < 0.0 {
        [-v[0], -v[1]]
    } else {
        v
    }
}
