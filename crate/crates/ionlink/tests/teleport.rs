use ionlink::exec::Exec;
use ionlink::gate::OpticalChain;
use ionlink::quantum::{c, fidelity, mub_states, PureState, C64};
use ionlink::rng::substream;
use ionlink::teleport::*;
use ionlink::Error;
use proptest::prelude::*;

const EPS_A: f64 = 0.015;
const EPS_B: f64 = 0.025;

fn random_qubit(v: &[f64]) -> PureState {
    PureState::normalized(vec![c(v[0], v[1]), c(v[2], v[3])]).unwrap()
}

fn ab(s: &PureState) -> (C64, C64) {
    (s.amp(0), s.amp(1))
}

fn pool(threads: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap()
}

#[test]
fn ideal_teleportation_of_basis_states() {
    for (label, s) in mub_states() {
        let (a, b) = ab(&s);
        let branches = run_ideal(a, b).unwrap();
        for br in &branches {
            assert!((br.probability - 0.5).abs() < 1e-12);
            assert!((br.final_state.overlap(&s).powi(2) - 1.0).abs() < 1e-12, "{label} branch {}", br.outcome);
            assert_eq!(br.correction, Correction::for_outcome(br.outcome));
        }
    }
}

#[test]
fn branch_states_before_correction() {
    let (a, b) = (c(0.6, 0.0), c(0.0, 0.8));
    let br = run_ideal(a, b).unwrap();
    let m0 = PureState::qubit(b, a).unwrap();
    let m1 = PureState::qubit(-b, a).unwrap();
    assert!((br[0].before_correction.overlap(&m0) - 1.0).abs() < 1e-12);
    assert!((br[1].before_correction.overlap(&m1) - 1.0).abs() < 1e-12);
}

#[test]
fn visibility_fidelity_reference() {
    let f = fidelity_vs_visibility(0.98).unwrap();
    assert!((f - 1.0 / (2.0 - 0.98f64.powi(2))).abs() < 1e-15);
    assert!((f - 0.9619).abs() < 1e-4);
    assert_eq!(fidelity_vs_visibility(1.0).unwrap(), 1.0);
    assert!((fidelity_vs_visibility(0.0).unwrap() - 0.5).abs() < 1e-15);
    assert!(fidelity_vs_visibility(1.01).is_err());
}

#[test]
fn detection_error_reference_values() {
    let want = [0.975, 0.975, 0.96075, 0.96075, 0.96075, 0.96075];
    let mut sum = 0.0;
    for ((label, s), w) in mub_states().iter().zip(want) {
        let (a, b) = ab(s);
        let f = reconstructed_fidelity_with_detection(a, b, EPS_A, EPS_B).unwrap();
        assert!((f - w).abs() < 1e-6, "{label}: {f}");
        sum += f;
    }
    let reduction = 1.0 - sum / 6.0;
    assert!((reduction - 0.035).abs() < 0.001, "{reduction}");
}

#[test]
fn combined_error_model_average() {
    let fids: Vec<f64> = mub_states()
        .iter()
        .map(|(_, s)| {
            let (a, b) = ab(s);
            fidelity(&combined_error_model(a, b, 0.98, EPS_A, EPS_B).unwrap(), s).unwrap()
        })
        .collect();
    let avg = fids.iter().sum::<f64>() / 6.0;
    assert!((avg - 0.925).abs() < 0.01, "{avg}");
    assert!(avg >= 0.90);
    // Hand composition: shrink the Bloch vector by the three independent factors.
    let v2 = 0.98f64 * 0.98;
    let k_v = v2 / (2.0 - v2);
    let k_a = 1.0 - 2.0 * EPS_A;
    let k_b = 1.0 - 2.0 * EPS_B;
    let z = 0.5 * (1.0 + k_v * k_b);
    let xy = 0.5 * (1.0 + k_v * k_a * k_b);
    assert!((fids[0] - z).abs() < 1e-12 && (fids[1] - z).abs() < 1e-12);
    for f in &fids[2..] {
        assert!((f - xy).abs() < 1e-12);
    }
}

#[test]
fn closed_forms_match_pipeline() {
    for (_, s) in mub_states() {
        let (a, b) = ab(&s);
        let noisy = run_noisy(a, b, 0.9, 0.0).unwrap();
        let closed = rho_b_mode_mismatch(a, b, 0.9).unwrap();
        for br in &noisy {
            assert!((br.probability - 0.5).abs() < 1e-12);
            assert!(br.rho_b.trace_distance(&closed) < 1e-12);
        }
        let noisy = run_noisy(a, b, 1.0, 0.1).unwrap();
        let closed = rho_b_imperfect_detection(a, b, 0.1).unwrap();
        for br in &noisy {
            assert!(br.rho_b.trace_distance(&closed) < 1e-12);
        }
    }
}

#[test]
fn readout_probabilities() {
    let one = PureState::basis(1, 1).projector();
    let p = measured_probabilities(&one, 0.1).unwrap();
    assert!((p[0] - 0.1).abs() < 1e-15 && (p[1] - 0.9).abs() < 1e-15);
    for k in 0..3 {
        assert!((p[2 * k] + p[2 * k + 1] - 1.0).abs() < 1e-15);
    }
    let plus = PureState::normalized(vec![c(1.0, 0.0), c(1.0, 0.0)]).unwrap().projector();
    let p = measured_probabilities(&plus, 0.0).unwrap();
    assert!((p[2] - 1.0).abs() < 1e-12 && (p[4] - 0.5).abs() < 1e-12);
    let rec = reconstruct(measured_probabilities(&plus, 0.0).unwrap()).unwrap();
    assert!(rec.trace_distance(&plus) < 1e-12);
}

#[test]
fn invalid_inputs() {
    assert!(matches!(run_ideal(c(1.0, 0.0), c(1.0, 0.0)), Err(Error::InvalidState(_))));
    assert!(run_noisy(c(1.0, 0.0), c(0.0, 0.0), 1.5, 0.0).is_err());
    assert!(run_noisy(c(1.0, 0.0), c(0.0, 0.0), 1.0, 0.7).is_err());
    let bad = ProtocolConfig { detection_error_b: -0.1, ..Default::default() };
    assert!(bad.validate().is_err());
}

fn gaussian_modes(w: f64, n: usize, half: f64) -> ModeOverlap {
    let h = 2.0 * half / n as f64;
    let mut m1 = Vec::with_capacity(n * n);
    let mut m2 = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let x = -half + (i as f64 + 0.5) * h;
            let y = -half + (j as f64 + 0.5) * h;
            m1.push(c((-(x * x + y * y) / (w * w)).exp(), 0.0));
            m2.push(c((-(x * x + y * y) / (w * w)).exp(), 0.0));
        }
    }
    ModeOverlap::uniform(h * h, m1, m2)
}

#[test]
fn gaussian_mode_overlap() {
    let w = 1.0;
    let mut v = gaussian_modes(w, 200, 6.0);
    assert!((visibility_from_modes(&v).unwrap() - 1.0).abs() < 1e-9);
    // Offset of one waist.
    v = centered_pair(w, w);
    assert!((visibility_from_modes(&v).unwrap() - (-0.5f64).exp()).abs() < 1e-6);
    let mut bad = gaussian_modes(w, 10, 6.0);
    bad.mode_2.pop();
    assert!(matches!(visibility_from_modes(&bad), Err(Error::GridMismatch(_))));
    let mut dim = gaussian_modes(w, 50, 6.0);
    dim.mode_2.iter_mut().for_each(|z| *z *= 0.5);
    assert!(matches!(visibility_from_modes(&dim), Err(Error::Domain(_))));
}

/// Two Gaussians displaced by ±d/2, so the truncated grid treats them alike.
fn centered_pair(d: f64, w: f64) -> ModeOverlap {
    let n = 300;
    let half = 7.0;
    let h = 2.0 * half / n as f64;
    let mut m1 = Vec::new();
    let mut m2 = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let x = -half + (i as f64 + 0.5) * h;
            let y = -half + (j as f64 + 0.5) * h;
            let g = |x0: f64| c((-((x - x0).powi(2) + y * y) / (w * w)).exp(), 0.0);
            m1.push(g(-d / 2.0));
            m2.push(g(d / 2.0));
        }
    }
    ModeOverlap::uniform(h * h, m1, m2)
}

#[test]
fn phase_tilt_reduces_visibility() {
    let w = 1.0;
    let mut m = centered_pair(0.0, w);
    let n = 300;
    let h = 14.0 / n as f64;
    for i in 0..n {
        for j in 0..n {
            let x = -7.0 + (i as f64 + 0.5) * h;
            m.mode_2[i * n + j] *= C64::from_polar(1.0, 2.0 * x);
        }
    }
    // ∫ e^{-2x²/w²} e^{ikx} / ∫ e^{-2x²/w²} = e^{-k²w²/8}.
    let v = visibility_from_modes(&m).unwrap();
    assert!((v - (-0.5f64).exp()).abs() < 1e-6, "{v}");
}

#[test]
fn attempts_are_geometric() {
    let p = 0.01;
    let cfg = ProtocolConfig::default();
    let mut rng = substream(99, 0);
    let n = 10_000;
    let xs: Vec<f64> = (0..n)
        .map(|_| montecarlo_protocol_with(&cfg, p, None, &mut rng).unwrap().attempts_before_herald as f64)
        .collect();
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let mu = 1.0 / p;
    let sigma2 = (1.0 - p) / (p * p);
    let kurt = 9.0 + p * p / (1.0 - p);
    let se_mean = (sigma2 / n as f64).sqrt();
    let se_var = sigma2 * ((kurt - 1.0) / n as f64).sqrt();
    assert!((mean - mu).abs() < 3.0 * se_mean, "mean {mean}");
    assert!((var - sigma2).abs() < 3.0 * se_var, "var {var}");
    assert!(xs.iter().all(|&x| x >= 1.0));
}

#[test]
fn certain_herald_takes_one_attempt() {
    let cfg = ProtocolConfig::default();
    let mut rng = substream(1, 1);
    for _ in 0..100 {
        let r = montecarlo_protocol_with(&cfg, 1.0, None, &mut rng).unwrap();
        assert_eq!(r.attempts_before_herald, 1);
        assert_eq!(r.herald_wall_time, 1.0 / cfg.chain.attempt_rate);
    }
}

#[test]
fn run_record_contents() {
    let cfg = ProtocolConfig::default();
    let r = montecarlo_protocol(&cfg, None).unwrap();
    assert!(!r.timed_out);
    assert_eq!(r.classical_bits_sent.len(), 2);
    let m = r.measurement_outcome_a.unwrap();
    assert_eq!(r.classical_bits_sent, vec![1, m]);
    assert_eq!(r.conditional_rotation_applied, Some(Correction::for_outcome(m)));
    assert!(r.final_rho_b.is_some());
    assert_eq!(montecarlo_protocol(&cfg, None).unwrap(), r);
    // Mean herald wait at the default chain is about 11 minutes.
    let mean = 1.0 / (herald_probability(&cfg.chain).unwrap() * cfg.chain.attempt_rate);
    assert!((mean - 663.2).abs() < 0.1, "{mean}");
}

#[test]
fn timeout() {
    let cfg = ProtocolConfig::default();
    let mut rng = substream(4, 0);
    let r = montecarlo_protocol_with(&cfg, 1e-12, Some(1.0), &mut rng).unwrap();
    assert!(r.timed_out);
    assert!(r.classical_bits_sent.is_empty());
    assert_eq!(r.measurement_outcome_a, None);
    assert_eq!(r.herald_wall_time, 1.0);
    let opts = SuiteOptions { herald_probability: Some(1e-12), max_wall_time: Some(1.0), ..Default::default() };
    assert!(matches!(run_protocol_suite(&cfg, &opts), Err(Error::NonConvergence(_))));
}

#[test]
fn analytic_suite_matches_combined_model() {
    let opts = SuiteOptions { analytic: true, ..Default::default() };
    let r = run_protocol_suite(&ProtocolConfig::default(), &opts).unwrap();
    assert_eq!(r.states.len(), 6);
    let ideal = run_protocol_suite(&ProtocolConfig::ideal(), &opts).unwrap();
    assert!((ideal.average_fidelity - 1.0).abs() < 1e-12);
    assert!((r.average_fidelity - 0.930).abs() < 1e-3);
}

#[test]
fn sampled_suite_agrees_with_analytic() {
    let cfg = ProtocolConfig::default();
    let opts = SuiteOptions { shots_per_basis: 20_000, heralds_per_state: 50, seed: 7, ..Default::default() };
    let r = run_protocol_suite(&cfg, &opts).unwrap();
    let exact = run_protocol_suite(&cfg, &SuiteOptions { analytic: true, ..Default::default() }).unwrap();
    for (s, e) in r.states.iter().zip(&exact.states) {
        assert_eq!(s.records.len(), 50);
        for k in 0..3 {
            assert_eq!(s.counts[k][0] + s.counts[k][1], 20_000);
        }
        // Each fidelity is a mean of binomial fractions with σ below 0.004.
        assert!((s.fidelity - e.fidelity).abs() < 0.015, "{}: {} vs {}", s.label, s.fidelity, e.fidelity);
    }
    assert!((r.average_fidelity - exact.average_fidelity).abs() < 0.006);
    assert_eq!(r.attempts().len(), 300);
}

#[test]
fn suite_is_schedule_independent() {
    let cfg = ProtocolConfig::default();
    let base = SuiteOptions { shots_per_basis: 500, heralds_per_state: 40, seed: 11, herald_probability: Some(0.05), ..Default::default() };
    let seq = run_protocol_suite(&cfg, &SuiteOptions { exec: Exec::Sequential, ..base.clone() }).unwrap();
    for t in [1, 3, 8] {
        let par = pool(t).install(|| run_protocol_suite(&cfg, &base)).unwrap();
        assert_eq!(par, seq, "threads {t}");
    }
    let other = run_protocol_suite(&cfg, &SuiteOptions { seed: 12, ..base }).unwrap();
    assert_ne!(other, seq);
}

#[test]
fn config_from_json_defaults() {
    let cfg: ProtocolConfig = serde_json::from_str(r#"{"input_alpha": [1.0, 0.0], "input_beta": [0.0, 0.0]}"#).unwrap();
    assert_eq!(cfg, ProtocolConfig::default());
    assert_eq!(cfg.chain, OpticalChain::default());
    let round: ProtocolConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
    assert_eq!(round, cfg);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn ideal_teleportation_any_state(v in prop::collection::vec(-1.0f64..1.0, 4)) {
        prop_assume!(v.iter().any(|x| x.abs() > 0.1));
        let s = random_qubit(&v);
        let (a, b) = ab(&s);
        for br in run_ideal(a, b).unwrap() {
            prop_assert!((br.final_state.overlap(&s).powi(2) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn visibility_fidelity_is_state_independent(v in prop::collection::vec(-1.0f64..1.0, 4), vis in 0.0f64..=1.0) {
        prop_assume!(v.iter().any(|x| x.abs() > 0.1));
        let s = random_qubit(&v);
        let (a, b) = ab(&s);
        let f = fidelity(&rho_b_mode_mismatch(a, b, vis).unwrap(), &s).unwrap();
        prop_assert!((f - fidelity_vs_visibility(vis).unwrap()).abs() < 1e-12);
        let branches = run_noisy(a, b, vis, 0.0).unwrap();
        prop_assert!(branches[0].rho_b.trace_distance(&branches[1].rho_b) < 1e-12);
    }

    #[test]
    fn fidelity_monotone_in_errors(v in prop::collection::vec(-1.0f64..1.0, 4), e1 in 0.0f64..0.25, de in 0.0f64..0.25) {
        prop_assume!(v.iter().any(|x| x.abs() > 0.1));
        let s = random_qubit(&v);
        let (a, b) = ab(&s);
        let lo = reconstructed_fidelity_with_detection(a, b, e1, e1).unwrap();
        let hi = reconstructed_fidelity_with_detection(a, b, e1 + de, e1 + de).unwrap();
        prop_assert!(hi <= lo + 1e-12);
    }
}
