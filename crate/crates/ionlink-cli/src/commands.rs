use serde::Serialize;
use serde_json::json;
use std::f64::consts::PI;
use std::fmt::Write as _;

use ionlink::exec::Exec;
use ionlink::gate::{evaluate_gate_table, gate_table, success_probability, RowOutcome};
use ionlink::io::{histogram_csv, parse_event_stream, serialize_events, trajectory_csv, DensityMatrixJson, EventFormat};
use ionlink::photon::{
    analytic_histogram, chi_square_batched, histogram_events, interference_contrast, joint_detection,
    joint_detection_mass, montecarlo_event_stream, ChiSquare, CorrelationHistogram, EmitterConfig, Source,
};
use ionlink::quantum::{
    c, concurrence, eof_from_concurrence, fidelity, mub_states, ml_tomography_with, MlOptions, PureState,
    TomographyCounts,
};
use ionlink::scaling::{
    cluster_state_time_capped, mean_success_time, repeater_connect_time, required_success_rate, Regime,
};
use ionlink::teleport::{run_protocol_suite, SuiteOptions};
use ionlink::trap::{
    axial_frequency, mathieu_beta, secular_frequency, stability_q, trajectory_closed_form, trajectory_numeric,
    transverse_frequency, uniform_times, DEFAULT_CF_DEPTH,
};

use crate::args::SourceArg;
use crate::output::{format_duration, Table};
use crate::settings::*;

pub type Artifacts = Vec<(String, Vec<u8>)>;

pub struct Outcome {
    pub table: String,
    pub artifacts: Artifacts,
}

pub fn json<T: Serialize + ?Sized>(v: &T) -> Vec<u8> {
    let mut b = serde_json::to_vec_pretty(v).expect("serializable");
    b.push(b'\n');
    b
}

const MAX_TRAJECTORY_SAMPLES: usize = 5_000_000;

pub fn trap(s: &TrapSettings) -> ionlink::Result<Outcome> {
    let trap = s.trap();
    let q = stability_q(&trap)?;
    let beta = mathieu_beta(q, DEFAULT_CF_DEPTH)?;
    let omega = trap.drive_frequency_omega;
    let to_mhz = |w: f64| w / (2.0 * PI) / 1e6;
    let f_sec = to_mhz(0.5 * beta * omega);
    let f_lowest = to_mhz(secular_frequency(&trap)?);
    let f_axial = to_mhz(axial_frequency(&trap)?);
    let f_trans = transverse_frequency(&trap).ok().map(to_mhz);

    let drive_period = 2.0 * PI / omega;
    let secular_period = 2.0 * PI / (0.5 * beta * omega);
    let dt = drive_period / s.samples_per_drive_period as f64;
    let n = (s.secular_periods * secular_period / dt).ceil() as usize + 1;
    if n > MAX_TRAJECTORY_SAMPLES {
        return Err(ionlink::Error::Domain(format!("trajectory needs {n} samples, limit {MAX_TRAJECTORY_SAMPLES}")));
    }
    let times = uniform_times(dt, n);
    let amp = s.amplitude_um * 1e-6;
    let closed = trajectory_closed_form(&trap, amp, &times)?;
    let mut artifacts: Artifacts = vec![("trajectory.csv".into(), trajectory_csv(&closed).into_bytes())];
    let mut numeric_rms = None;
    if s.numeric {
        let x0 = amp * (1.0 + 0.5 * q.abs());
        let num = trajectory_numeric(&trap, x0, 0.0, &times)?;
        numeric_rms = Some(closed.rms_difference(&num) / closed.rms());
        artifacts.push(("trajectory_numeric.csv".into(), trajectory_csv(&num).into_bytes()));
    }
    let summary = json!({
        "q": q,
        "beta": beta,
        "secular_frequency_mhz": f_sec,
        "lowest_order_frequency_mhz": f_lowest,
        "axial_frequency_mhz": f_axial,
        "transverse_frequency_mhz": f_trans,
        "micromotion_fraction": closed.micromotion_fraction,
        "trajectory_samples": n,
        "numeric_relative_rms_difference": numeric_rms,
    });
    artifacts.insert(0, ("trap.json".into(), json(&summary)));

    let mut t = Table::new(&["quantity", "value"]);
    t.row(&["q".into(), format!("{q:.5}")]);
    t.row(&["beta".into(), format!("{beta:.5}")]);
    t.row(&["f_secular".into(), format!("{f_sec:.2} MHz")]);
    t.row(&["f_secular (lowest order)".into(), format!("{f_lowest:.2} MHz")]);
    t.row(&["f_axial".into(), format!("{f_axial:.3} MHz")]);
    if let Some(f) = f_trans {
        t.row(&["f_transverse".into(), format!("{f:.3} MHz")]);
    }
    if let Some(r) = numeric_rms {
        t.row(&["numeric vs closed form (rel. rms)".into(), format!("{r:.2e}")]);
    }
    Ok(Outcome { table: t.render(), artifacts })
}

fn sources(arg: SourceArg) -> Vec<Source> {
    match arg {
        SourceArg::All => vec![Source::SingleEmitter, Source::IdenticalPair, Source::DistinguishablePair],
        SourceArg::Single => vec![Source::SingleEmitter],
        SourceArg::Identical => vec![Source::IdenticalPair],
        SourceArg::Distinguishable => vec![Source::DistinguishablePair],
    }
}

fn source_name(s: Source) -> &'static str {
    match s {
        Source::SingleEmitter => "single_emitter",
        Source::IdenticalPair => "identical_pair",
        Source::DistinguishablePair => "distinguishable_pair",
    }
}

const TRAINS_PER_BATCH: u64 = 100;
const MAX_GROUPS: usize = 100;

fn batched_fit(
    cfg: &EmitterConfig,
    source: Source,
    stream: &ionlink::photon::EventStream,
    hist: &CorrelationHistogram,
    bw: f64,
    span: f64,
) -> ionlink::Result<Option<ChiSquare>> {
    let batches = stream.batches(TRAINS_PER_BATCH);
    if batches.len() < 2 * MAX_GROUPS {
        return Ok(None);
    }
    let counts: Vec<Vec<f64>> = batches
        .iter()
        .map(|ev| histogram_events(ev, bw, span, Exec::Sequential).map(|h| h.counts))
        .collect::<ionlink::Result<_>>()?;
    let per_batch: Vec<f64> = hist
        .bin_edges
        .windows(2)
        .map(|w| TRAINS_PER_BATCH as f64 * joint_detection_mass(cfg, source, w[0], w[1]))
        .collect();
    Ok(Some(chi_square_batched(&counts, &per_batch, MAX_GROUPS, 0.99)?))
}

pub fn correlate(s: &CorrelateSettings, exec: Exec) -> ionlink::Result<Outcome> {
    let cfg = s.emitter();
    let (bw, span) = (s.bin_ns * 1e-9, s.span_ns * 1e-9);
    let (tp, tau) = (cfg.pulse_period_tp, cfg.excited_lifetime_tau);
    let format = if s.binary { EventFormat::Binary } else { EventFormat::Text };
    let ext = if s.binary { "bin" } else { "txt" };
    let mut artifacts = Artifacts::new();
    let mut t = Table::new(&["source", "contrast", "detail"]);
    let mut entries = Vec::new();

    if let Some(path) = &s.events {
        let bytes = read_input(path)?;
        let events = parse_event_stream(&bytes, format)?;
        let hist = histogram_events(&events, bw, span, exec)?;
        let contrast = interference_contrast(&hist, tp, tau).ok();
        let singles = [0u8, 1].map(|ch| events.iter().filter(|e| e.channel == ch).count());
        artifacts.push(("histogram.csv".into(), histogram_csv(&hist).into_bytes()));
        t.row(&[path.display().to_string(), fmt_opt(contrast), format!("{} pairs", hist.total())]);
        entries.push(json!({
            "events_file": path.display().to_string(),
            "events": events.len(),
            "singles": singles,
            "pairs": hist.total(),
            "contrast": contrast,
        }));
    } else if let Some(trains) = s.simulate_trains {
        for src in sources(s.source) {
            let name = source_name(src);
            let stream = montecarlo_event_stream(&cfg, src, s.seed, trains, exec)?;
            let hist = histogram_events(&stream.events, bw, span, exec)?;
            let contrast = interference_contrast(&hist, tp, tau).ok();
            let fit = batched_fit(&cfg, src, &stream, &hist, bw, span)?;
            artifacts.push((format!("events_{name}.{ext}"), serialize_events(&stream.events, format)));
            artifacts.push((format!("histogram_{name}.csv"), histogram_csv(&hist).into_bytes()));
            let detail = match &fit {
                Some(f) => format!(
                    "{} pairs, chi2/dof {:.3} ({})",
                    hist.total(),
                    f.statistic / f.dof as f64,
                    if f.pass { "pass" } else { "fail" }
                ),
                None => format!("{} pairs", hist.total()),
            };
            t.row(&[name.into(), fmt_opt(contrast), detail]);
            entries.push(json!({
                "source": name,
                "trains": trains,
                "pulses": trains * cfg.pulse_count_n_plus_1 as u64,
                "singles": stream.singles(),
                "pairs": hist.total(),
                "contrast": contrast,
                "chi_square": fit,
            }));
        }
    } else {
        for src in sources(s.source) {
            let name = source_name(src);
            let hist = analytic_histogram(&cfg, src, bw, span)?;
            let contrast = interference_contrast(&hist, tp, tau).ok();
            let adjacent = joint_detection(&cfg, src, tp);
            let zero_delay = joint_detection(&cfg, src, 0.0) / adjacent;
            artifacts.push((format!("analytic_{name}.csv"), histogram_csv(&hist).into_bytes()));
            t.row(&[name.into(), fmt_opt(contrast), format!("g(0)/g(tp) = {zero_delay:.3e}")]);
            entries.push(json!({
                "source": name,
                "contrast": contrast,
                "zero_delay_over_adjacent": zero_delay,
            }));
        }
    }
    artifacts.insert(0, ("correlate.json".into(), json(&json!({ "results": entries }))));
    Ok(Outcome { table: t.render(), artifacts })
}

fn read_input(path: &std::path::Path) -> ionlink::Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", path.display())).into())
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "n/a".into(), |v| format!("{v:.4}"))
}

fn fraction(x: f64) -> String {
    if x == 0.0 {
        "0".into()
    } else if x == 0.25 {
        "1/4".into()
    } else if x == 0.5 {
        "1/2".into()
    } else {
        format!("{x}")
    }
}

pub fn gate(s: &GateSettings, show_table: bool) -> ionlink::Result<Outcome> {
    let rows = evaluate_gate_table(&gate_table(), s.visibility)?;
    let chain = &s.chain;
    let eff = chain.single_photon_efficiency();
    let p_quarter = success_probability(chain, 0.25)?;
    let mut row_json = Vec::new();
    let mut t = Table::new(&["input", "output", "theta", "theory", "fidelity", "parity fidelity", "P_success"]);
    for r in &rows {
        let p = success_probability(chain, r.theta.min(0.5))?;
        let (f, pf) = match r.outcome {
            RowOutcome::Heralded { fidelity, parity_fidelity } => (format!("{fidelity:.4}"), format!("{parity_fidelity:.4}")),
            RowOutcome::NeverHeralds => ("never heralds".into(), "-".into()),
        };
        t.row(&[
            r.input.clone(),
            r.expected_output.clone(),
            format!("{:.4}", r.theta),
            fraction(r.theory_theta),
            f,
            pf,
            if p == 0.0 { "0".into() } else { format!("{p:.3e}") },
        ]);
        let mut v = serde_json::to_value(r).expect("serializable");
        v["success_probability"] = json!(p);
        row_json.push(v);
    }
    let budget = json!({
        "factors": chain.factors().iter().map(|(k, v)| json!({"name": k, "value": v})).collect::<Vec<_>>(),
        "single_photon_efficiency": eff,
        "two_photon_efficiency": eff * eff,
        "success_probability_theta_quarter": p_quarter,
        "attempt_rate_hz": chain.attempt_rate,
        "mean_wait_s": 1.0 / (p_quarter * chain.attempt_rate),
    });
    let mut b = Table::new(&["budget", "value"]);
    b.row(&["single-photon efficiency".into(), format!("{eff:.4e}")]);
    b.row(&["product squared".into(), format!("{:.4e}", eff * eff)]);
    b.row(&["P_success (theta = 1/4)".into(), format!("{p_quarter:.3e}")]);
    b.row(&["mean wait".into(), format_duration(1.0 / (p_quarter * chain.attempt_rate))]);
    let mut table = String::new();
    if show_table {
        table.push_str(&t.render());
        table.push('\n');
    }
    table.push_str(&b.render());
    let artifacts = vec![
        ("gate_table.json".into(), json(&json!({ "visibility": s.visibility, "rows": row_json }))),
        ("budget.json".into(), json(&budget)),
    ];
    Ok(Outcome { table, artifacts })
}

pub fn teleport(s: &TeleportSettings, exec: Exec) -> ionlink::Result<Outcome> {
    let opts = SuiteOptions {
        shots_per_basis: s.shots_per_basis,
        heralds_per_state: s.heralds_per_state,
        seed: s.seed,
        analytic: s.analytic,
        max_wall_time: s.max_wall_time_s,
        herald_probability: s.herald_probability,
        exec,
    };
    let res = run_protocol_suite(&s.protocol(), &opts)?;
    let mut t = Table::new(&["state", "fidelity", "heralds", "mean attempts"]);
    let mut states = Vec::new();
    let mut records = Vec::new();
    for st in &res.states {
        let n = st.records.len();
        let attempts: u64 = st.records.iter().map(|r| r.attempts_before_herald).sum();
        let mean_attempts = if n > 0 { attempts as f64 / n as f64 } else { 0.0 };
        let wall: f64 = st.records.iter().map(|r| r.herald_wall_time).sum();
        t.row(&[
            st.label.clone(),
            format!("{:.4}", st.fidelity),
            n.to_string(),
            if n == 0 { "-".into() } else if mean_attempts < 1e4 { format!("{mean_attempts:.1}") } else { format!("{mean_attempts:.3e}") },
        ]);
        states.push(json!({
            "label": st.label,
            "fidelity": st.fidelity,
            "counts": st.counts,
            "rho": DensityMatrixJson::from(&st.rho),
            "heralds": n,
            "total_attempts": attempts,
            "total_herald_wall_time_s": wall,
        }));
        records.push(json!({ "label": st.label, "records": st.records }));
    }
    t.row(&["average".into(), format!("{:.4}", res.average_fidelity), String::new(), String::new()]);
    let mut artifacts: Artifacts =
        vec![("teleport.json".into(), json(&json!({ "average_fidelity": res.average_fidelity, "states": states })))];
    if !s.analytic {
        artifacts.push(("records.json".into(), json(&records)));
    }
    Ok(Outcome { table: t.render(), artifacts })
}

pub fn target_state(label: &str) -> Option<PureState> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let two = |a: [f64; 4]| PureState::new(a.iter().map(|&x| c(x * h, 0.0)).collect()).ok();
    match label {
        "phi+" => two([1.0, 0.0, 0.0, 1.0]),
        "phi-" => two([1.0, 0.0, 0.0, -1.0]),
        "psi+" => two([0.0, 1.0, 1.0, 0.0]),
        "psi-" => two([0.0, 1.0, -1.0, 0.0]),
        l => mub_states().into_iter().find(|(n, _)| *n == l).map(|(_, s)| s),
    }
}

pub fn tomography(s: &TomographySettings) -> ionlink::Result<Outcome> {
    let path = s.counts.as_ref().expect("validated");
    let counts: TomographyCounts = serde_json::from_slice(&read_input(path)?)?;
    let n = counts
        .settings
        .first()
        .map(|st| st.basis.chars().count())
        .ok_or_else(|| ionlink::Error::InsufficientSettings("counts file has no settings".into()))?;
    let rep = ml_tomography_with(&counts, n, MlOptions::default())?;
    let rho = &rep.rho;
    let mut t = Table::new(&["quantity", "value"]);
    t.row(&["qubits".into(), n.to_string()]);
    t.row(&["purity".into(), format!("{:.4}", rho.purity())]);
    let (mut conc, mut eof) = (None, None);
    if n == 2 {
        let cv = concurrence(rho)?;
        conc = Some(cv);
        eof = Some(eof_from_concurrence(cv));
        t.row(&["concurrence".into(), format!("{cv:.4}")]);
        t.row(&["entanglement of formation".into(), format!("{:.4}", eof_from_concurrence(cv))]);
    }
    let mut fid = None;
    if let Some(label) = &s.target {
        let target = target_state(label).expect("validated");
        let f = fidelity(rho, &target)?;
        fid = Some(f);
        t.row(&[format!("fidelity to {label}"), format!("{f:.4}")]);
    }
    t.row(&["iterations".into(), rep.iterations.to_string()]);
    let summary = json!({
        "qubits": n,
        "purity": rho.purity(),
        "eigenvalues": rho.eigenvalues(),
        "concurrence": conc,
        "entanglement_of_formation": eof,
        "target": s.target,
        "fidelity": fid,
        "iterations": rep.iterations,
        "log_likelihood": rep.log_likelihood,
    });
    let artifacts = vec![
        ("tomography.json".into(), json(&summary)),
        ("rho.json".into(), json(&DensityMatrixJson::from(rho))),
    ];
    Ok(Outcome { table: t.render(), artifacts })
}

pub fn scale(s: &ScaleSettings) -> ionlink::Result<Outcome> {
    let q = s.query();
    let ct = cluster_state_time_capped(&q)?;
    let t_success = mean_success_time(q.success_probability_p, q.attempt_period_ta)?;
    let connect = repeater_connect_time(t_success, q.node_count_n as f64)?;
    let rate = required_success_rate(q.node_count_n as f64, q.coherence_time)?;
    let human = crate::output::format_log_duration(ct.log10_seconds);
    let regime = match ct.regime {
        Regime::Fusion => "fusion",
        Regime::SingleChain => "single chain (n <= n_c)",
    };
    let mut t = Table::new(&["quantity", "value"]);
    t.row(&["n_c".into(), ct.n_c.to_string()]);
    t.row(&["regime".into(), regime.into()]);
    t.row(&["cluster state time".into(), human.clone()]);
    t.row(&["log10(seconds)".into(), format!("{:.3}", ct.log10_seconds)]);
    t.row(&["mean link time".into(), format_duration(t_success)]);
    let mut w = String::new();
    let _ = write!(w, "{} nodes", q.node_count_n);
    t.row(&[format!("repeater connect time ({w})"), format_duration(connect)]);
    t.row(&[format!("required success rate ({w})"), format!("{rate:.3} Hz")]);
    let summary = json!({
        "cluster": ct,
        "log10_years": ct.log10_years(),
        "human": human,
        "mean_link_time_s": t_success,
        "repeater_connect_time_s": connect,
        "required_success_rate_hz": rate,
    });
    Ok(Outcome { table: t.render(), artifacts: vec![("scale.json".into(), json(&summary))] })
}
