//! Resolved per-subcommand settings in lab units.
//!
//! Each struct is what a `--config` file contains (plus `schema_version`),
//! and what the run writes back out as `config.json`.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

use ionlink::gate::OpticalChain;
use ionlink::io::{check_schema_version, SCHEMA_VERSION};
use ionlink::units::YB_P12_LIFETIME;

use crate::args::*;
use crate::CliError;

fn schema() -> u32 {
    SCHEMA_VERSION
}

pub fn load<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T, CliError> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let bytes = std::fs::read(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let value: serde_json::Value =
        serde_json::from_slice(&bytes).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    check_schema_version(&value).map_err(|e| CliError::Config(e.to_string()))?;
    serde_json::from_value(value).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn set<T>(dst: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *dst = v;
    }
}

fn check(ok: bool, msg: &str) -> Result<(), CliError> {
    if ok {
        Ok(())
    } else {
        Err(CliError::Config(msg.into()))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrapSettings {
    pub schema_version: u32,
    pub v0_volts: f64,
    pub freq_mhz: f64,
    pub r_mm: f64,
    pub mass_amu: f64,
    pub u0_volts: f64,
    pub z0_mm: f64,
    pub charge_e: f64,
    pub eta: f64,
    pub amplitude_um: f64,
    pub secular_periods: f64,
    pub samples_per_drive_period: u32,
    pub numeric: bool,
}

impl Default for TrapSettings {
    fn default() -> Self {
        TrapSettings {
            schema_version: schema(),
            v0_volts: 1000.0,
            freq_mhz: 38.0,
            r_mm: 0.46,
            mass_amu: 171.0,
            u0_volts: 0.0,
            z0_mm: 3.0,
            charge_e: 1.0,
            eta: 1.0,
            amplitude_um: 1.0,
            secular_periods: 3.0,
            samples_per_drive_period: 32,
            numeric: false,
        }
    }
}

impl TrapSettings {
    pub fn apply(&mut self, a: &TrapArgs) {
        set(&mut self.v0_volts, a.v0);
        set(&mut self.freq_mhz, a.freq_mhz);
        set(&mut self.r_mm, a.r_mm);
        set(&mut self.mass_amu, a.mass_amu);
        set(&mut self.u0_volts, a.u0);
        set(&mut self.z0_mm, a.z0_mm);
        set(&mut self.eta, a.eta);
        set(&mut self.amplitude_um, a.amplitude_um);
        set(&mut self.secular_periods, a.periods);
        set(&mut self.samples_per_drive_period, a.samples_per_drive_period);
        self.numeric |= a.numeric;
    }

    pub fn trap(&self) -> ionlink::trap::TrapConfig {
        use ionlink::units::*;
        ionlink::trap::TrapConfig {
            drive_voltage_v0: self.v0_volts,
            drive_frequency_omega: mhz_to_angular(self.freq_mhz),
            electrode_distance_r: mm(self.r_mm),
            static_voltage_u0: self.u0_volts,
            axial_distance_z0: mm(self.z0_mm),
            particle_mass: amu(self.mass_amu),
            particle_charge: self.charge_e * ELEMENTARY_CHARGE,
            geometric_scale_eta: self.eta,
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.trap().validate().map_err(|e| CliError::Config(e.to_string()))?;
        check(self.secular_periods > 0.0 && self.secular_periods <= 1e4, "secular_periods must lie in (0, 1e4]")?;
        check(
            (20..=10_000).contains(&self.samples_per_drive_period),
            "samples_per_drive_period must lie in [20, 10000]",
        )?;
        check(self.amplitude_um.is_finite(), "amplitude_um must be finite")
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorrelateSettings {
    pub schema_version: u32,
    pub source: SourceArg,
    pub tau_ns: f64,
    pub tp_ns: f64,
    pub pulses: u32,
    pub dark_rate_hz: f64,
    pub collection: f64,
    pub bin_ns: f64,
    pub span_ns: f64,
    pub events: Option<PathBuf>,
    pub binary: bool,
    pub simulate_trains: Option<u64>,
    pub seed: u64,
}

impl Default for CorrelateSettings {
    fn default() -> Self {
        let tau_ns = YB_P12_LIFETIME * 1e9;
        CorrelateSettings {
            schema_version: schema(),
            source: SourceArg::All,
            tau_ns,
            tp_ns: 20.0 * tau_ns,
            pulses: 21,
            dark_rate_hz: 0.0,
            collection: 1.0,
            bin_ns: 1.0,
            span_ns: 2.5 * 20.0 * tau_ns,
            events: None,
            binary: false,
            simulate_trains: None,
            seed: 0,
        }
    }
}

impl CorrelateSettings {
    pub fn apply(&mut self, a: &CorrelateArgs, seed: Option<u64>) {
        set(&mut self.source, a.source);
        set(&mut self.tau_ns, a.tau_ns);
        set(&mut self.tp_ns, a.tp_ns);
        set(&mut self.pulses, a.pulses);
        set(&mut self.dark_rate_hz, a.dark_rate_hz);
        set(&mut self.collection, a.collection);
        set(&mut self.bin_ns, a.bin_ns);
        set(&mut self.span_ns, a.span_ns);
        if a.events.is_some() {
            self.events = a.events.clone();
            self.simulate_trains = None;
        }
        if a.simulate.is_some() {
            self.simulate_trains = a.simulate;
            self.events = None;
        }
        self.binary |= a.binary;
        set(&mut self.seed, seed);
    }

    pub fn emitter(&self) -> ionlink::photon::EmitterConfig {
        ionlink::photon::EmitterConfig {
            excited_lifetime_tau: self.tau_ns * 1e-9,
            pulse_period_tp: self.tp_ns * 1e-9,
            pulse_count_n_plus_1: self.pulses,
            dark_count_rate: self.dark_rate_hz,
            collection_probability: self.collection,
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.emitter().validate().map_err(|e| CliError::Config(e.to_string()))?;
        check(self.bin_ns > 0.0 && self.bin_ns.is_finite(), "bin_ns must be positive")?;
        check(self.span_ns >= self.bin_ns && self.span_ns.is_finite(), "span_ns must be at least one bin")?;
        check(self.span_ns / self.bin_ns <= 1e7, "too many bins")?;
        check(self.events.is_none() || self.simulate_trains.is_none(), "events and simulate_trains are exclusive")?;
        check(self.simulate_trains != Some(0), "simulate_trains must be positive")
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GateSettings {
    pub schema_version: u32,
    pub visibility: f64,
    pub chain: OpticalChain,
}

impl Default for GateSettings {
    fn default() -> Self {
        GateSettings { schema_version: schema(), visibility: 1.0, chain: OpticalChain::default() }
    }
}

impl GateSettings {
    pub fn apply(&mut self, a: &GateArgs) {
        set(&mut self.visibility, a.visibility);
        let c = &mut self.chain;
        set(&mut c.p_pi, a.p_pi);
        set(&mut c.pmt_quantum_efficiency_eta, a.quantum_efficiency);
        set(&mut c.fiber_transmission, a.fiber_transmission);
        set(&mut c.optics_transmission, a.optics_transmission);
        set(&mut c.solid_angle_fraction, a.solid_angle_fraction);
        set(&mut c.attempt_rate, a.attempt_rate_hz);
    }

    pub fn validate(&self) -> Result<(), CliError> {
        check((0.0..=1.0).contains(&self.visibility), "visibility must lie in [0, 1]")?;
        self.chain.validate().map_err(|e| CliError::Config(e.to_string()))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TeleportSettings {
    pub schema_version: u32,
    pub visibility: f64,
    pub eps_a: f64,
    pub eps_b: f64,
    pub shots_per_basis: u64,
    pub heralds_per_state: u32,
    pub analytic: bool,
    pub herald_probability: Option<f64>,
    pub max_wall_time_s: Option<f64>,
    pub chain: OpticalChain,
    pub seed: u64,
}

impl Default for TeleportSettings {
    fn default() -> Self {
        TeleportSettings {
            schema_version: schema(),
            visibility: 0.98,
            eps_a: 0.015,
            eps_b: 0.025,
            shots_per_basis: 1000,
            heralds_per_state: 50,
            analytic: false,
            herald_probability: None,
            max_wall_time_s: None,
            chain: OpticalChain::default(),
            seed: 0,
        }
    }
}

impl TeleportSettings {
    pub fn apply(&mut self, a: &TeleportArgs, seed: Option<u64>) {
        set(&mut self.visibility, a.visibility);
        set(&mut self.eps_a, a.eps_a);
        set(&mut self.eps_b, a.eps_b);
        set(&mut self.shots_per_basis, a.shots);
        set(&mut self.heralds_per_state, a.heralds);
        self.analytic |= a.analytic;
        if a.herald_p.is_some() {
            self.herald_probability = a.herald_p;
        }
        if a.max_wall_s.is_some() {
            self.max_wall_time_s = a.max_wall_s;
        }
        set(&mut self.seed, seed);
    }

    pub fn protocol(&self) -> ionlink::teleport::ProtocolConfig {
        ionlink::teleport::ProtocolConfig {
            visibility_v: self.visibility,
            detection_error_a: self.eps_a,
            detection_error_b: self.eps_b,
            chain: self.chain.clone(),
            master_seed: self.seed,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.protocol().validate().map_err(|e| CliError::Config(e.to_string()))?;
        check(self.shots_per_basis > 0, "shots_per_basis must be positive")?;
        check(self.heralds_per_state > 0, "heralds_per_state must be positive")?;
        if let Some(p) = self.herald_probability {
            check(p > 0.0 && p <= 1.0, "herald_probability must lie in (0, 1]")?;
        }
        if let Some(t) = self.max_wall_time_s {
            check(t > 0.0, "max_wall_time_s must be positive")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TomographySettings {
    pub schema_version: u32,
    pub counts: Option<PathBuf>,
    pub target: Option<String>,
}

impl Default for TomographySettings {
    fn default() -> Self {
        TomographySettings { schema_version: schema(), counts: None, target: None }
    }
}

impl TomographySettings {
    pub fn apply(&mut self, a: &TomographyArgs) {
        if a.counts.is_some() {
            self.counts = a.counts.clone();
        }
        if a.target.is_some() {
            self.target = a.target.clone();
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        check(self.counts.is_some(), "no counts file given (use --counts or the config's `counts`)")?;
        if let Some(t) = &self.target {
            check(crate::commands::target_state(t).is_some(), &format!("unknown target state {t:?}"))?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScaleSettings {
    pub schema_version: u32,
    pub success_probability: f64,
    pub attempt_period_ns: f64,
    pub qubits: u64,
    pub nodes: u64,
    pub coherence_time_s: f64,
}

impl Default for ScaleSettings {
    fn default() -> Self {
        ScaleSettings {
            schema_version: schema(),
            success_probability: 0.1,
            attempt_period_ns: 100.0,
            qubits: 100,
            nodes: 10,
            coherence_time_s: ionlink::scaling::DEFAULT_COHERENCE_TIME,
        }
    }
}

impl ScaleSettings {
    pub fn apply(&mut self, a: &ScaleArgs) {
        set(&mut self.success_probability, a.p);
        set(&mut self.attempt_period_ns, a.ta_ns);
        set(&mut self.qubits, a.n);
        set(&mut self.nodes, a.nodes);
        set(&mut self.coherence_time_s, a.coherence_s);
    }

    pub fn query(&self) -> ionlink::scaling::ScalingQuery {
        ionlink::scaling::ScalingQuery {
            success_probability_p: self.success_probability,
            attempt_period_ta: self.attempt_period_ns * 1e-9,
            qubit_count_n: self.qubits,
            node_count_n: self.nodes,
            coherence_time: self.coherence_time_s,
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.query().validate().map_err(|e| CliError::Config(e.to_string()))
    }
}
