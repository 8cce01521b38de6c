//! Pulse-train single-photon statistics.
//!
//! Time delays are `t_d = t(ch1) - t(ch0)`. Channel 0 and 1 are the two output
//! ports of the 50:50 beamsplitter. A train of N+1 excitation pulses separated by
//! `t_p` produces one photon per pulse per emitter with an exponential envelope.

mod histogram;
mod montecarlo;

pub use histogram::{chi_square_batched, chi_square_gof, histogram_events, ChiSquare};
pub use montecarlo::{montecarlo_event_stream, EventRecord, EventStream};

use serde::{Deserialize, Serialize};

use crate::units::YB_P12_LIFETIME;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmitterConfig {
    pub excited_lifetime_tau: f64,
    pub pulse_period_tp: f64,
    pub pulse_count_n_plus_1: u32,
    #[serde(default)]
    pub dark_count_rate: f64,
    #[serde(default = "one")]
    pub collection_probability: f64,
}

fn one() -> f64 {
    1.0
}

impl EmitterConfig {
    /// 21 pulses every 20 lifetimes of the Yb+ P1/2 level.
    pub fn reference() -> Self {
        EmitterConfig {
            excited_lifetime_tau: YB_P12_LIFETIME,
            pulse_period_tp: 20.0 * YB_P12_LIFETIME,
            pulse_count_n_plus_1: 21,
            dark_count_rate: 0.0,
            collection_probability: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.excited_lifetime_tau > 0.0 && self.excited_lifetime_tau.is_finite()) {
            return Err(Error::Domain("lifetime must be positive".into()));
        }
        if !(self.pulse_period_tp > 5.0 * self.excited_lifetime_tau) {
            return Err(Error::Domain("pulse period must exceed 5 lifetimes".into()));
        }
        if self.pulse_count_n_plus_1 == 0 {
            return Err(Error::Domain("need at least one pulse".into()));
        }
        if !(self.dark_count_rate >= 0.0 && self.dark_count_rate.is_finite()) {
            return Err(Error::Domain("dark count rate must be nonnegative".into()));
        }
        if !(0.0..=1.0).contains(&self.collection_probability) {
            return Err(Error::Domain("collection probability must lie in [0,1]".into()));
        }
        Ok(())
    }

    /// N, the number of pulse separations in one train.
    pub fn n(&self) -> u32 {
        self.pulse_count_n_plus_1 - 1
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    /// One emitter, one photon per pulse.
    SingleEmitter,
    /// Two emitters with indistinguishable photons.
    IdenticalPair,
    /// Two emitters with perfectly distinguishable photons.
    DistinguishablePair,
}

/// Single-channel detection density `(1/τ) Σ_k exp(-(t - k t_p)/τ) Θ(t - k t_p)`.
pub fn first_order_correlation(cfg: &EmitterConfig, t: f64) -> f64 {
    let tau = cfg.excited_lifetime_tau;
    (0..cfg.pulse_count_n_plus_1)
        .map(|k| t - k as f64 * cfg.pulse_period_tp)
        .filter(|&s| s >= 0.0)
        .map(|s| (-s / tau).exp())
        .sum::<f64>()
        / tau
}

/// Area of the peak at `t_d = m t_p`, normalized so the single emitter's
/// adjacent peak carries N/4.
pub fn peak_weight(source: Source, n_plus_1: u32, m: i64) -> f64 {
    let pairs = n_plus_1 as i64 - m.abs();
    if pairs <= 0 {
        return 0.0;
    }
    let pairs = pairs as f64;
    match source {
        Source::SingleEmitter if m != 0 => pairs / 4.0,
        Source::IdenticalPair if m != 0 => pairs,
        Source::DistinguishablePair if m != 0 => pairs,
        Source::DistinguishablePair => pairs / 2.0,
        _ => 0.0,
    }
}

/// Sum over peaks of `weight(m) · kernel(t_d - m t_p)`.
fn peak_sum(cfg: &EmitterConfig, source: Source, kernel: impl Fn(f64) -> f64) -> f64 {
    let np1 = cfg.pulse_count_n_plus_1 as i64;
    (1 - np1..np1)
        .map(|m| {
            let w = peak_weight(source, cfg.pulse_count_n_plus_1, m);
            if w == 0.0 {
                0.0
            } else {
                w * kernel(m as f64 * cfg.pulse_period_tp)
            }
        })
        .sum()
}

/// Joint detection density of the two channels, per train.
pub fn joint_detection(cfg: &EmitterConfig, source: Source, t_d: f64) -> f64 {
    let tau = cfg.excited_lifetime_tau;
    peak_sum(cfg, source, |c| (-(t_d - c).abs() / tau).exp()) / (2.0 * tau)
}

pub fn joint_detection_single_emitter(cfg: &EmitterConfig, t_d: f64) -> f64 {
    joint_detection(cfg, Source::SingleEmitter, t_d)
}

pub fn joint_detection_identical_pair(cfg: &EmitterConfig, t_d: f64) -> f64 {
    4.0 * joint_detection_single_emitter(cfg, t_d)
}

pub fn joint_detection_distinguishable_pair(cfg: &EmitterConfig, t_d: f64) -> f64 {
    joint_detection(cfg, Source::DistinguishablePair, t_d)
}

/// `∫_a^b (1/2τ) exp(-|t - c|/τ) dt`.
fn laplace_mass(a: f64, b: f64, c: f64, tau: f64) -> f64 {
    let g = |u: f64| 0.5 * u.signum() * -(-u.abs() / tau).exp_m1();
    g(b - c) - g(a - c)
}

/// Expected coincidences per train in `[a, b)`.
pub fn joint_detection_mass(cfg: &EmitterConfig, source: Source, a: f64, b: f64) -> f64 {
    let tau = cfg.excited_lifetime_tau;
    peak_sum(cfg, source, |c| laplace_mass(a, b, c, tau))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    Counts,
    ProbabilityDensity,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationHistogram {
    pub bin_width: f64,
    /// `counts.len() + 1` edges in seconds.
    pub bin_edges: Vec<f64>,
    pub counts: Vec<f64>,
    pub normalization: Normalization,
}

impl CorrelationHistogram {
    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> f64 {
        self.counts.iter().sum()
    }

    pub fn center(&self, i: usize) -> f64 {
        0.5 * (self.bin_edges[i] + self.bin_edges[i + 1])
    }

    /// Integrated content of bins whose centers fall in `[lo, hi]`.
    pub fn window(&self, lo: f64, hi: f64) -> f64 {
        let scale = match self.normalization {
            Normalization::Counts => 1.0,
            Normalization::ProbabilityDensity => self.bin_width,
        };
        (0..self.bins())
            .filter(|&i| (lo..=hi).contains(&self.center(i)))
            .map(|i| self.counts[i] * scale)
            .sum()
    }
}

fn symmetric_edges(bin_width: f64, span: f64) -> Result<Vec<f64>> {
    if !(bin_width > 0.0 && span > 0.0) {
        return Err(Error::Domain("bin width and span must be positive".into()));
    }
    let half = (span / bin_width).round() as i64;
    if half == 0 {
        return Err(Error::Domain("span shorter than one bin".into()));
    }
    Ok((-half..=half).map(|k| k as f64 * bin_width).collect())
}

/// Bin-averaged analytic density over `[-span, span)`.
pub fn analytic_histogram(
    cfg: &EmitterConfig,
    source: Source,
    bin_width: f64,
    span: f64,
) -> Result<CorrelationHistogram> {
    cfg.validate()?;
    let bin_edges = symmetric_edges(bin_width, span)?;
    let counts = bin_edges
        .windows(2)
        .map(|w| joint_detection_mass(cfg, source, w[0], w[1]) / (w[1] - w[0]))
        .collect();
    Ok(CorrelationHistogram {
        bin_width,
        bin_edges,
        counts,
        normalization: Normalization::ProbabilityDensity,
    })
}

/// Peak window half-width in lifetimes.
pub const CONTRAST_WINDOW_TAU: f64 = 5.0;

/// `1 - central / (0.5 · mean adjacent)` over ±5τ windows, clamped to [0, 1].
pub fn interference_contrast(hist: &CorrelationHistogram, tp: f64, tau: f64) -> Result<f64> {
    let first = hist.bin_edges.first().copied().unwrap_or(0.0);
    let last = hist.bin_edges.last().copied().unwrap_or(0.0);
    if first > -2.0 * tp + 0.5 * hist.bin_width || last < 2.0 * tp - 0.5 * hist.bin_width {
        return Err(Error::InsufficientSpan(format!(
            "histogram covers [{first:e}, {last:e}] s, need ±{:e} s",
            2.0 * tp
        )));
    }
    let w = CONTRAST_WINDOW_TAU * tau;
    let central = hist.window(-w, w);
    let adjacent = 0.5 * (hist.window(-tp - w, -tp + w) + hist.window(tp - w, tp + w));
    if adjacent <= 0.0 {
        return Err(Error::Domain("adjacent peaks are empty".into()));
    }
    Ok((1.0 - central / (0.5 * adjacent)).clamp(0.0, 1.0))
}

/// Fluorescence rate of a pulsed Rabi drive, `A sin²(B √P / 2)`.
pub fn excitation_scattering_rate(avg_power: f64, fit_a: f64, fit_b: f64) -> Result<f64> {
    if avg_power < 0.0 {
        return Err(Error::Domain("power must be nonnegative".into()));
    }
    Ok(fit_a * (0.5 * fit_b * avg_power.sqrt()).sin().powi(2))
}

/// Probability of a decay during the excitation pulse, `1 - exp(-d/τ)`.
pub fn double_emission_probability(pulse_duration: f64, tau: f64) -> Result<f64> {
    if pulse_duration < 0.0 || !(tau > 0.0) {
        return Err(Error::Domain("duration must be nonnegative and tau positive".into()));
    }
    if pulse_duration > 0.1 * tau {
        log::warn!("pulse duration {pulse_duration:e} s is not short compared with tau {tau:e} s");
    }
    Ok(-(-pulse_duration / tau).exp_m1())
}

/// Expected accidental coincidences in a window of half-width `w` caused by
/// dark counts at rate `d` per channel, given the signal singles per channel
/// and the total observation time.
pub fn dark_coincidence_expectation(w: f64, d: f64, singles: [f64; 2], total_time: f64) -> f64 {
    2.0 * w * (d * (singles[0] + singles[1]) + d * d * total_time)
}
