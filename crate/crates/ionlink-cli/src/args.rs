use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;

#[derive(Parser, Debug)]
#[command(name = "ionlink", version, about = "Trapped-ion photonic link simulator")]
pub struct Cli {
    /// JSON config file; flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Directory for artifacts and the run manifest.
    #[arg(long, global = true, value_name = "DIR", default_value = "ionlink-out")]
    pub out: PathBuf,

    /// Also print the result table on stdout.
    #[arg(long, global = true)]
    pub stdout: bool,

    /// Master seed for every random stream.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Run the data-parallel kernels on the calling thread only.
    #[arg(long, global = true)]
    pub sequential: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Stability parameter, secular frequencies and a trajectory.
    Trap(TrapArgs),
    /// Analytic correlation curves, or histograms of event streams.
    Correlate(CorrelateArgs),
    /// Heralded gate truth table and detection budget.
    Gate(GateArgs),
    /// Teleportation of the six basis states.
    Teleport(TeleportArgs),
    /// Maximum-likelihood state reconstruction from counts.
    Tomography(TomographyArgs),
    /// Cluster-state and repeater time budgets.
    Scale(ScaleArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Trap(_) => "trap",
            Command::Correlate(_) => "correlate",
            Command::Gate(_) => "gate",
            Command::Teleport(_) => "teleport",
            Command::Tomography(_) => "tomography",
            Command::Scale(_) => "scale",
        }
    }
}

#[derive(Args, Debug, Default)]
pub struct TrapArgs {
    /// rf amplitude in volts.
    #[arg(long = "V0")]
    pub v0: Option<f64>,
    /// Drive frequency Ω/2π in MHz.
    #[arg(long = "freq-mhz")]
    pub freq_mhz: Option<f64>,
    /// Trap center to electrode surface, mm.
    #[arg(long = "R-mm")]
    pub r_mm: Option<f64>,
    #[arg(long = "mass-amu")]
    pub mass_amu: Option<f64>,
    /// Static end-cap voltage in volts.
    #[arg(long = "U0")]
    pub u0: Option<f64>,
    #[arg(long = "z0-mm")]
    pub z0_mm: Option<f64>,
    /// Geometric efficiency factor.
    #[arg(long)]
    pub eta: Option<f64>,
    /// Secular amplitude of the exported trajectory, µm.
    #[arg(long = "amplitude-um")]
    pub amplitude_um: Option<f64>,
    /// Length of the exported trajectory in secular periods.
    #[arg(long)]
    pub periods: Option<f64>,
    #[arg(long = "samples-per-drive-period")]
    pub samples_per_drive_period: Option<u32>,
    /// Also integrate the equation of motion numerically.
    #[arg(long)]
    pub numeric: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceArg {
    All,
    Single,
    Identical,
    Distinguishable,
}

#[derive(Args, Debug, Default)]
pub struct CorrelateArgs {
    /// Emitter configuration to model.
    #[arg(long, value_enum)]
    pub source: Option<SourceArg>,
    #[arg(long = "tau-ns")]
    pub tau_ns: Option<f64>,
    /// Pulse period, ns.
    #[arg(long = "tp-ns")]
    pub tp_ns: Option<f64>,
    /// Pulses per train (N+1).
    #[arg(long)]
    pub pulses: Option<u32>,
    #[arg(long = "dark-rate-hz")]
    pub dark_rate_hz: Option<f64>,
    #[arg(long)]
    pub collection: Option<f64>,
    #[arg(long = "bin-ns")]
    pub bin_ns: Option<f64>,
    /// Half-width of the delay window, ns.
    #[arg(long = "span-ns")]
    pub span_ns: Option<f64>,
    /// Histogram an event file instead of evaluating the analytic curve.
    #[arg(long, value_name = "FILE", conflicts_with = "simulate")]
    pub events: Option<PathBuf>,
    /// Event files are 9-byte binary records.
    #[arg(long)]
    pub binary: bool,
    /// Simulate this many pulse trains and histogram them.
    #[arg(long, value_name = "TRAINS")]
    pub simulate: Option<u64>,
}

#[derive(Args, Debug, Default)]
pub struct GateArgs {
    /// Print the truth table.
    #[arg(long)]
    pub table: bool,
    /// Photon mode overlap.
    #[arg(long)]
    pub visibility: Option<f64>,
    #[arg(long = "p-pi")]
    pub p_pi: Option<f64>,
    /// Detector quantum efficiency.
    #[arg(long = "qe")]
    pub quantum_efficiency: Option<f64>,
    #[arg(long = "fiber")]
    pub fiber_transmission: Option<f64>,
    #[arg(long = "optics")]
    pub optics_transmission: Option<f64>,
    #[arg(long = "solid-angle")]
    pub solid_angle_fraction: Option<f64>,
    #[arg(long = "rate-hz")]
    pub attempt_rate_hz: Option<f64>,
}

#[derive(Args, Debug, Default)]
pub struct TeleportArgs {
    #[arg(long)]
    pub visibility: Option<f64>,
    #[arg(long = "eps-a")]
    pub eps_a: Option<f64>,
    #[arg(long = "eps-b")]
    pub eps_b: Option<f64>,
    /// Readout shots per basis and state.
    #[arg(long)]
    pub shots: Option<u64>,
    /// Heralded runs per state.
    #[arg(long)]
    pub heralds: Option<u32>,
    /// Exact probabilities instead of sampled readout.
    #[arg(long)]
    pub analytic: bool,
    /// Override the per-attempt herald probability.
    #[arg(long = "herald-p")]
    pub herald_p: Option<f64>,
    /// Give up on a herald after this much simulated time, s.
    #[arg(long = "max-wall-s")]
    pub max_wall_s: Option<f64>,
}

#[derive(Args, Debug, Default)]
pub struct TomographyArgs {
    /// Counts JSON: {"settings": [{"basis": "zx", "counts": {"00": n, ...}}, ...]}.
    #[arg(long, value_name = "FILE")]
    pub counts: Option<PathBuf>,
    /// Target state label for the fidelity (phi+, phi-, psi+, psi-, 0, 1, 0+1, 0-1, 0+i1, 0-i1).
    #[arg(long)]
    pub target: Option<String>,
}

#[derive(Args, Debug, Default)]
pub struct ScaleArgs {
    /// Link success probability per attempt.
    #[arg(long = "P")]
    pub p: Option<f64>,
    #[arg(long = "ta-ns")]
    pub ta_ns: Option<f64>,
    /// Cluster size in qubits.
    #[arg(long)]
    pub n: Option<u64>,
    /// Repeater nodes.
    #[arg(long)]
    pub nodes: Option<u64>,
    #[arg(long = "coherence-s")]
    pub coherence_s: Option<f64>,
}
