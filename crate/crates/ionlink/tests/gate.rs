use ionlink::gate::*;
use ionlink::quantum::{c, fidelity, CMatrix, PureState, C64};
use ionlink::Error;
use proptest::prelude::*;

fn qubit(v: &[f64]) -> PureState {
    PureState::normalized(vec![c(v[0], v[1]), c(v[2], v[3])]).unwrap()
}

fn ions(a: &PureState, b: &PureState) -> (IonPhotonState, IonPhotonState) {
    (excite_state(a).unwrap(), excite_state(b).unwrap())
}

#[test]
fn theory_theta_column() {
    let want = [0.25, 0.25, 0.25, 0.25, 0.25, 0.25, 0.5, 0.0];
    let rows = gate_table();
    assert_eq!(rows.len(), 8);
    let res = evaluate_gate_table(&rows, 1.0).unwrap();
    for (r, w) in res.iter().zip(want) {
        assert_eq!(r.theory_theta, w);
        assert!((r.theta - w).abs() < 1e-15, "{}: {}", r.input, r.theta);
    }
}

#[test]
fn ideal_gate_outputs() {
    for r in evaluate_gate_table(&gate_table(), 1.0).unwrap() {
        match r.outcome {
            RowOutcome::Heralded { fidelity, parity_fidelity } => {
                assert!((fidelity - 1.0).abs() < 1e-12, "{}: {fidelity}", r.input);
                assert!((parity_fidelity - 1.0).abs() < 1e-12);
            }
            RowOutcome::NeverHeralds => {
                assert_eq!(r.input, "00");
                assert_eq!(r.herald_probability, 0.0);
            }
        }
    }
}

#[test]
fn zero_zero_never_heralds() {
    let z = PureState::basis(1, 0);
    let (a, b) = ions(&z, &z);
    assert!(matches!(herald_project(&a, &b), Err(Error::ZeroProbability)));
    // With imperfect overlap the which-path term can still fire, but it leaves the ions in |00⟩.
    let (rho, p) = herald_with_visibility(&a, &b, 0.9).unwrap();
    assert!(p > 0.0);
    assert!((fidelity(&rho, &PureState::basis(2, 0)).unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn visibility_lowers_fidelity() {
    let rows = gate_table();
    let fid = |v| match evaluate_gate_table(&rows, v).unwrap()[0].outcome {
        RowOutcome::Heralded { fidelity, parity_fidelity } => {
            assert!((fidelity - parity_fidelity).abs() < 1e-12);
            fidelity
        }
        RowOutcome::NeverHeralds => panic!("row 0 heralds"),
    };
    let (f1, f98, f5) = (fid(1.0), fid(0.98), fid(0.5));
    assert!(f1 > f98 && f98 > f5);
    assert!(evaluate_gate_table(&rows, 1.2).is_err());
}

#[test]
fn chain_budget() {
    let chain = OpticalChain::default();
    let p2 = chain.single_photon_efficiency().powi(2);
    assert!((p2 - 8.0415e-8).abs() < 1e-11, "{p2}");
    assert!((p2 / 8.0e-8 - 1.0).abs() < 0.10);
    let p = success_probability(&chain, 0.25).unwrap();
    assert!((p - 2.0104e-8).abs() < 1e-11);
    assert!((p / 2.2e-8 - 1.0).abs() < 0.10);
    assert_eq!(chain.attempt_rate, 75e3);
    assert!(success_probability(&chain, 0.6).is_err());
    let bad = OpticalChain { fiber_transmission: 1.5, ..chain };
    assert!(success_probability(&bad, 0.25).is_err());
}

#[test]
fn excitation_entangles_ion_with_frequency() {
    let q = qubit(&[0.6, 0.0, 0.0, 0.8]);
    let s = excite_state(&q).unwrap();
    assert_eq!(s.amp(0, Freq::Blue), c(0.6, 0.0));
    assert_eq!(s.amp(1, Freq::Red), c(0.0, 0.8));
    assert_eq!(s.amp(0, Freq::Red), c(0.0, 0.0));
    let p = s.ion_populations();
    assert!((p[0] - 0.36).abs() < 1e-15 && (p[1] - 0.64).abs() < 1e-15);
    let h = |x: f64| -x * x.log2();
    assert!((s.entanglement_entropy() - h(0.36) - h(0.64)).abs() < 1e-12);
    assert!(excite_entangle(c(1.0, 0.0), c(1.0, 0.0)).is_err());
}

#[test]
fn bell_weights_sum_to_one() {
    let (a, b) = ions(&qubit(&[1.0, 0.0, 1.0, 0.0]), &qubit(&[0.3, 0.1, -0.2, 0.9]));
    let d = bell_decompose(&a, &b);
    let s: f64 = BellLabel::ALL.iter().map(|&l| d.weight(l)).sum();
    assert!((s - 1.0).abs() < 1e-12);
}

#[test]
fn hom_dip_for_identical_photons() {
    let mut st = FockState::default();
    st.add(&[Mode::new(1, Freq::Blue), Mode::new(2, Freq::Blue)], c(1.0, 0.0));
    let out = st.beamsplitter();
    assert!(out.coincidence_probability(3, 4) < 1e-15);
    assert!((out.norm_sqr() - 1.0).abs() < 1e-12);
    let both3 = out.amplitude(&[Mode::new(3, Freq::Blue), Mode::new(3, Freq::Blue)]);
    assert!((both3.norm_sqr() - 0.5).abs() < 1e-12);

    let mut st = FockState::default();
    st.add(&[Mode::new(1, Freq::Blue), Mode::new(2, Freq::Red)], c(1.0, 0.0));
    assert!((st.beamsplitter().coincidence_probability(3, 4) - 0.5).abs() < 1e-12);
}

fn assert_same_ray(u: &[C64], v: &[C64], tol: f64) {
    let nu: f64 = u.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let nv: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let ip: C64 = u.iter().zip(v).map(|(a, b)| a.conj() * b).sum();
    assert!((ip.norm() / (nu * nv) - 1.0).abs() < tol, "not parallel: {u:?} {v:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn gate_operator_matches_projection(va in prop::collection::vec(-1.0f64..1.0, 4), vb in prop::collection::vec(-1.0f64..1.0, 4)) {
        prop_assume!(va.iter().any(|x| x.abs() > 0.1) && vb.iter().any(|x| x.abs() > 0.1));
        let (qa, qb) = (qubit(&va), qubit(&vb));
        let (a, b) = ions(&qa, &qb);
        let Ok(h) = herald_project(&a, &b) else { return Ok(()); };
        let prod = qa.tensor(&qb).amplitudes().clone();
        let g: Vec<C64> = (gate_operator() * prod).iter().copied().collect();
        assert_same_ray(&g, h.state.amplitudes().as_slice(), 1e-12);
        let (al, be, ga, de) = (qa.amp(0), qa.amp(1), qb.amp(0), qb.amp(1));
        let theta = 0.5 * (al.norm_sqr() * de.norm_sqr() + be.norm_sqr() * ga.norm_sqr());
        prop_assert!((h.theta - theta).abs() < 1e-12);
    }

    #[test]
    fn beamsplitter_agrees_with_bell_projection(va in prop::collection::vec(-1.0f64..1.0, 4), vb in prop::collection::vec(-1.0f64..1.0, 4)) {
        prop_assume!(va.iter().any(|x| x.abs() > 0.1) && vb.iter().any(|x| x.abs() > 0.1));
        let (a, b) = ions(&qubit(&va), &qubit(&vb));
        let psi = bell_decompose(&a, &b).component(BellLabel::PsiMinus);
        let theta: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        let mut coinc = 0.0;
        for ((f3, f4), amps) in herald_via_beamsplitter(&a, &b) {
            let w: f64 = amps.iter().map(|z| z.norm_sqr()).sum();
            if f3 == f4 {
                prop_assert!(w < 1e-24);
            } else {
                coinc += w;
                if theta > 1e-12 {
                    assert_same_ray(&amps, &psi, 1e-10);
                }
            }
        }
        prop_assert!((coinc - theta).abs() < 1e-12);
    }

    #[test]
    fn perfect_visibility_is_pure_projection(va in prop::collection::vec(-1.0f64..1.0, 4), vb in prop::collection::vec(-1.0f64..1.0, 4)) {
        prop_assume!(va.iter().any(|x| x.abs() > 0.1) && vb.iter().any(|x| x.abs() > 0.1));
        let (a, b) = ions(&qubit(&va), &qubit(&vb));
        let Ok(h) = herald_project(&a, &b) else { return Ok(()); };
        let (rho, p) = herald_with_visibility(&a, &b, 1.0).unwrap();
        prop_assert!((p - h.theta).abs() < 1e-12);
        prop_assert!((fidelity(&rho, &h.state).unwrap() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn gate_operator_is_not_unitary() {
    let g = gate_operator();
    let gg: CMatrix = g.adjoint() * &g;
    assert!((gg - CMatrix::identity(4, 4)).iter().any(|z| z.norm() > 0.5));
}
