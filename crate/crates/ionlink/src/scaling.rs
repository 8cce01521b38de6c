//! Repeater and 1D cluster-state time budgets.
//!
//! Cluster construction: chains of n_c = ⌈4/P⌉ qubits are grown by repeated
//! doubling, each level multiplying the expected time by 1/P, and then fused
//! in a logarithmic number of rounds. The first term can exceed f64 range
//! long before anyone would care, so it is carried as a log10.

use serde::{Deserialize, Serialize};

use crate::units::SECONDS_PER_YEAR;
use crate::{Error, Result};

pub const DEFAULT_COHERENCE_TIME: f64 = 2.5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingQuery {
    pub success_probability_p: f64,
    pub attempt_period_ta: f64,
    pub qubit_count_n: u64,
    #[serde(default = "d_nodes")]
    pub node_count_n: u64,
    #[serde(default = "d_coh")]
    pub coherence_time: f64,
}

fn d_nodes() -> u64 {
    10
}
fn d_coh() -> f64 {
    DEFAULT_COHERENCE_TIME
}

impl ScalingQuery {
    pub fn new(p: f64, ta: f64, n: u64) -> Self {
        ScalingQuery {
            success_probability_p: p,
            attempt_period_ta: ta,
            qubit_count_n: n,
            node_count_n: d_nodes(),
            coherence_time: d_coh(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.success_probability_p;
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::Domain(format!("success probability {p} outside (0, 1]")));
        }
        if !(self.attempt_period_ta > 0.0 && self.attempt_period_ta.is_finite()) {
            return Err(Error::Domain("attempt period must be positive".into()));
        }
        if !(self.coherence_time > 0.0) {
            return Err(Error::Domain("coherence time must be positive".into()));
        }
        if self.qubit_count_n < 2 || self.node_count_n < 2 {
            return Err(Error::Domain("need at least two qubits and two nodes".into()));
        }
        Ok(())
    }

    /// ⌈4/P⌉, with a little slack so that 4/0.1 lands on 40.
    pub fn n_c(&self) -> u64 {
        (4.0 / self.success_probability_p - 1e-9).ceil().max(1.0) as u64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// n > n_c: doubling up to n_c, then fusion.
    Fusion,
    /// n ≤ n_c: the whole state is built as a single doubled chain.
    SingleChain,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterTime {
    pub regime: Regime,
    pub n_c: u64,
    pub log10_seconds: f64,
    /// `None` once the value no longer fits in an f64.
    pub seconds: Option<f64>,
}

impl ClusterTime {
    pub fn log10_years(&self) -> f64 {
        self.log10_seconds - SECONDS_PER_YEAR.log10()
    }

    fn from_log(regime: Regime, n_c: u64, log10_seconds: f64) -> Self {
        let s = 10f64.powf(log10_seconds);
        ClusterTime { regime, n_c, log10_seconds, seconds: s.is_finite().then_some(s) }
    }
}

fn log10_add(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (1.0 + 10f64.powf(lo - hi)).log10()
}

/// `T(n) = t_a (1/P)^{log₂(n_c+1)} + (t_a/P) log₂(n − n_c)`.
pub fn cluster_state_time(q: &ScalingQuery) -> Result<ClusterTime> {
    q.validate()?;
    let n_c = q.n_c();
    if q.qubit_count_n <= n_c {
        return Err(Error::Domain(format!(
            "n = {} does not exceed n_c = {n_c}; fusion stage undefined",
            q.qubit_count_n
        )));
    }
    let lp = -q.success_probability_p.log10();
    let lta = q.attempt_period_ta.log10();
    let grow = lta + lp * ((n_c + 1) as f64).log2();
    let fuse_factor = ((q.qubit_count_n - n_c) as f64).log2();
    let total = if fuse_factor > 0.0 { log10_add(grow, lta + lp + fuse_factor.log10()) } else { grow };
    Ok(ClusterTime::from_log(Regime::Fusion, n_c, total))
}

/// Like [`cluster_state_time`] but falls back to the single-chain estimate
/// `t_a (1/P)^{log₂(n+1)}` when n ≤ n_c.
pub fn cluster_state_time_capped(q: &ScalingQuery) -> Result<ClusterTime> {
    q.validate()?;
    let n_c = q.n_c();
    if q.qubit_count_n > n_c {
        return cluster_state_time(q);
    }
    let lp = -q.success_probability_p.log10();
    let l = q.attempt_period_ta.log10() + lp * ((q.qubit_count_n + 1) as f64).log2();
    Ok(ClusterTime::from_log(Regime::SingleChain, n_c, l))
}

/// `T_success · ln N`.
pub fn repeater_connect_time(t_success: f64, nodes: f64) -> Result<f64> {
    if !(nodes >= 1.0) {
        return Err(Error::Domain(format!("node count {nodes} below 1")));
    }
    Ok(t_success * nodes.ln())
}

/// `ln N / coherence_time`.
pub fn required_success_rate(nodes: f64, coherence_time: f64) -> Result<f64> {
    if !(nodes >= 1.0) {
        return Err(Error::Domain(format!("node count {nodes} below 1")));
    }
    if !(coherence_time > 0.0) {
        return Err(Error::Domain("coherence time must be positive".into()));
    }
    Ok(nodes.ln() / coherence_time)
}

/// Mean waiting time `t_a / P` for one heralded link.
pub fn mean_success_time(p: f64, ta: f64) -> Result<f64> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::Domain(format!("success probability {p} outside (0, 1]")));
    }
    Ok(ta / p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn n_c_rounds_exact_quotients_down() {
        assert_eq!(ScalingQuery::new(0.1, 1e-7, 100).n_c(), 40);
        assert_eq!(ScalingQuery::new(1.0, 1e-7, 100).n_c(), 4);
        assert_eq!(ScalingQuery::new(0.3, 1e-7, 100).n_c(), 14);
    }

    #[test]
    fn log_add_matches_direct() {
        let (a, b) = (3.2f64, 1.7f64);
        let d = (10f64.powf(a) + 10f64.powf(b)).log10();
        assert!((log10_add(a, b) - d).abs() < 1e-12);
    }
}
