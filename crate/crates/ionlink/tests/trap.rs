use ionlink::trap::*;
use ionlink::units::*;
use ionlink::Error;
use proptest::prelude::*;
use rustfft::{num_complex::Complex, FftPlanner};
use std::f64::consts::{PI, SQRT_2};

/// Floquet exponent of `x'' + 2q cos(2τ) x = 0` from the monodromy matrix
/// over one period π, integrated with its own RK4.
fn monodromy_beta(q: f64) -> f64 {
    let steps = 20_000;
    let h = PI / steps as f64;
    let f = |t: f64, x: f64| -2.0 * q * (2.0 * t).cos() * x;
    let run = |mut x: f64, mut v: f64| {
        for i in 0..steps {
            let t = i as f64 * h;
            let (k1x, k1v) = (v, f(t, x));
            let (k2x, k2v) = (v + 0.5 * h * k1v, f(t + 0.5 * h, x + 0.5 * h * k1x));
            let (k3x, k3v) = (v + 0.5 * h * k2v, f(t + 0.5 * h, x + 0.5 * h * k2x));
            let (k4x, k4v) = (v + h * k3v, f(t + h, x + h * k3x));
            x += h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
            v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        }
        (x, v)
    };
    let (x1, _) = run(1.0, 0.0);
    let (_, v2) = run(0.0, 1.0);
    (0.5 * (x1 + v2)).acos() / PI
}

fn with_voltage(v0: f64) -> TrapConfig {
    TrapConfig { drive_voltage_v0: v0, ..TrapConfig::reference() }
}

/// Trap whose stability parameter is exactly `q`.
fn trap_at_q(q: f64) -> TrapConfig {
    let r = TrapConfig::reference();
    let q0 = stability_q(&r).unwrap();
    with_voltage(r.drive_voltage_v0 * q / q0)
}

#[test]
fn reference_trap_numbers() {
    let t = TrapConfig::reference();
    let q = stability_q(&t).unwrap();
    assert!((q - 0.0935).abs() < 5e-4, "q = {q}");
    let f = angular_to_mhz(secular_frequency(&t).unwrap());
    assert!((f / 1.26 - 1.0).abs() < 0.01, "f = {f}");

    let scaled = TrapConfig { geometric_scale_eta: 0.93, ..t };
    let f = angular_to_mhz(secular_frequency(&scaled).unwrap());
    assert!((f / 1.17 - 1.0).abs() < 0.01, "f = {f}");
}

#[test]
fn q_hand_evaluation() {
    // 2 e V0 / (m R^2 Omega^2) with the reference numbers typed out.
    let e = 1.602_176_634e-19;
    let m = 171.0 * 1.660_539_066_60e-27;
    let r = 0.46e-3;
    let w = 2.0 * PI * 38e6;
    let q = 2.0 * e * 1000.0 / (m * r * r * w * w);
    assert!((stability_q(&TrapConfig::reference()).unwrap() - q).abs() < 1e-15);
}

#[test]
fn zero_drive() {
    let t = with_voltage(0.0);
    assert_eq!(stability_q(&t).unwrap(), 0.0);
    assert_eq!(secular_frequency(&t).unwrap(), 0.0);
    assert_eq!(mathieu_beta(0.0, DEFAULT_CF_DEPTH).unwrap(), 0.0);
}

#[test]
fn q_linear_in_voltage() {
    let a = stability_q(&with_voltage(500.0)).unwrap();
    let b = stability_q(&with_voltage(1000.0)).unwrap();
    assert!((b - 2.0 * a).abs() < 1e-15);
}

#[test]
fn invalid_configs_are_domain_errors() {
    let base = TrapConfig::reference();
    for bad in [
        TrapConfig { electrode_distance_r: 0.0, ..base.clone() },
        TrapConfig { particle_mass: -1.0, ..base.clone() },
        TrapConfig { drive_frequency_omega: 0.0, ..base.clone() },
        TrapConfig { particle_charge: 0.0, ..base.clone() },
        TrapConfig { geometric_scale_eta: 1.6, ..base.clone() },
    ] {
        assert!(matches!(stability_q(&bad), Err(Error::Domain(_))), "{bad:?}");
    }
}

#[test]
fn beta_matches_monodromy() {
    for q in [0.05, 0.1, 0.3, 0.5, 0.8] {
        let cf = mathieu_beta(q, DEFAULT_CF_DEPTH).unwrap();
        let ode = monodromy_beta(q);
        assert!((cf - ode).abs() < 1e-6, "q = {q}: {cf} vs {ode}");
    }
}

#[test]
fn beta_small_q_expansion() {
    for q in [1e-3, 1e-2, 0.05] {
        let b = mathieu_beta(q, DEFAULT_CF_DEPTH).unwrap();
        // beta^2 = q^2/(2 - q^2) - 7 q^4/128 + O(q^6), i.e. beta = (q/sqrt2)(1 + 25 q^2/128).
        let series = q / SQRT_2 * (1.0 + 25.0 * q * q / 128.0);
        assert!((b - series).abs() < (10.0 * q.powi(5)).max(1e-12), "q = {q}: {b} vs {series}");
    }
    let b = mathieu_beta(0.0935, DEFAULT_CF_DEPTH).unwrap();
    assert!((b - 0.0935 / SQRT_2).abs() < 1e-3);
}

#[test]
fn unstable_and_unconverged() {
    assert!(matches!(mathieu_beta(0.9, 24), Err(Error::Instability(_))));
    assert!(matches!(mathieu_beta(1.5, 24), Err(Error::Instability(_))));
    assert!(matches!(mathieu_beta(0.8, 1), Err(Error::NonConvergence(_))));
}

#[test]
fn coefficient_recursion() {
    let q = 0.0935;
    let beta = mathieu_beta(q, DEFAULT_CF_DEPTH).unwrap();
    let sol = mathieu_coefficients(q, beta, 10).unwrap();
    assert_eq!(sol.ratio(0), 1.0);
    for n in -9..=9i64 {
        assert!(sol.residual(n).abs() < 1e-12, "n = {n}: {}", sol.residual(n));
    }
    for n in 1..10i64 {
        assert!(sol.ratio(n + 1).abs() < sol.ratio(n).abs());
        assert!(sol.ratio(-n - 1).abs() < sol.ratio(-n).abs());
    }

    let q = 1e-6;
    let beta = mathieu_beta(q, DEFAULT_CF_DEPTH).unwrap();
    let sol = mathieu_coefficients(q, beta, 4).unwrap();
    assert!((sol.ratio(1) / (q / 4.0) - 1.0).abs() < 1e-3);
    assert!((sol.ratio(-1) / (q / 4.0) - 1.0).abs() < 1e-3);

    let sol = mathieu_coefficients(0.0, 0.0, 3).unwrap();
    assert!(sol.coefficient_ratios.iter().enumerate().all(|(i, &c)| if i == 3 { c == 1.0 } else { c == 0.0 }));
}

#[test]
fn axial_and_transverse() {
    let t = TrapConfig { static_voltage_u0: 80.0, ..TrapConfig::reference() };
    let wz = axial_frequency(&t).unwrap();
    let hand = (2.0f64 * 1.602_176_634e-19 * 80.0 / (171.0 * 1.660_539_066_60e-27 * 9e-6)).sqrt();
    assert!((wz / hand - 1.0).abs() < 1e-14);

    let t4 = TrapConfig { static_voltage_u0: 320.0, ..t.clone() };
    assert!((axial_frequency(&t4).unwrap() / wz - 2.0).abs() < 1e-14);
    assert_eq!(axial_frequency(&TrapConfig::reference()).unwrap(), 0.0);
    let anti = TrapConfig { static_voltage_u0: -1.0, ..t };
    assert!(matches!(axial_frequency(&anti), Err(Error::Domain(_))));

    let wx = mhz_to_angular(1.26);
    assert_eq!(transverse_frequency_with_axial(wx, 0.0).unwrap(), wx);
    let wz = mhz_to_angular(0.6);
    let v = transverse_frequency_with_axial(wx, wz).unwrap();
    assert!((v - (wx * wx - wz * wz / 2.0).sqrt()).abs() < 1e-6);
    assert!(matches!(transverse_frequency_with_axial(wx, SQRT_2 * wx), Err(Error::Instability(_))));

    let r = TrapConfig::reference();
    assert_eq!(transverse_frequency(&r).unwrap(), secular_frequency(&r).unwrap());
}

#[test]
fn pseudopotential() {
    let t = TrapConfig::reference();
    assert_eq!(pseudopotential_energy(0.0, &t).unwrap(), 0.0);
    let e1 = pseudopotential_energy(1e5, &t).unwrap();
    let e2 = pseudopotential_energy(2e5, &t).unwrap();
    assert!((e2 / e1 - 4.0).abs() < 1e-12);
    // Quadrupole field at the electrode surface: E0 = 2 V0 / R.
    let e0 = 2.0 * 1000.0 / 0.46e-3;
    let ev = pseudopotential_ev(e0, &t).unwrap();
    let hand = 1.602_176_634e-19 * e0 * e0 / (4.0 * 171.0 * 1.660_539_066_60e-27 * (2.0 * PI * 38e6).powi(2));
    assert!((ev / hand - 1.0).abs() < 1e-12);
    assert!((1.0..100.0).contains(&ev), "{ev} eV");
}

fn secular_periods_grid(t: &TrapConfig, periods: f64, per_drive: f64) -> Vec<f64> {
    let w = secular_frequency(t).unwrap();
    let dt = 2.0 * PI / t.drive_frequency_omega / per_drive;
    uniform_times(dt, (periods * 2.0 * PI / w / dt) as usize)
}

#[test]
fn closed_form_matches_numeric() {
    let t = TrapConfig::reference();
    let times = secular_periods_grid(&t, 10.0, 40.0);
    let a = 1e-6;
    let cf = trajectory_closed_form(&t, a, &times).unwrap();
    let q = stability_q(&t).unwrap();
    let num = trajectory_numeric(&t, a * (1.0 + q / 2.0), 0.0, &times).unwrap();
    let rel = cf.rms_difference(&num) / cf.rms();
    assert!(rel < 0.02, "relative rms {rel}");
    assert!((cf.micromotion_fraction - q / 2.0).abs() < 1e-3);
    assert!((cf.micromotion_fraction - 0.047).abs() < 1e-3);
}

#[test]
fn numeric_edge_cases() {
    let t = with_voltage(0.0);
    let times = uniform_times(1e-9, 100);
    let tr = trajectory_numeric(&t, 3e-6, 0.0, &times).unwrap();
    assert!(tr.positions.iter().all(|&x| x == 3e-6));

    let coarse = uniform_times(2.0 * PI / TrapConfig::reference().drive_frequency_omega / 10.0, 50);
    assert!(matches!(
        trajectory_numeric(&TrapConfig::reference(), 1e-6, 0.0, &coarse),
        Err(Error::StepSize(_))
    ));

    // Past the stability boundary the envelope grows exponentially.
    let t = trap_at_q(1.2);
    let times = uniform_times(2.0 * PI / t.drive_frequency_omega / 40.0, 40 * 60);
    let tr = trajectory_numeric(&t, 1e-6, 0.0, &times).unwrap();
    let env = |k: usize| tr.positions[k * 400..(k + 1) * 400].iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let e: Vec<f64> = (0..6).map(env).collect();
    assert!(e.windows(2).all(|w| w[1] > 2.0 * w[0]), "{e:?}");
    assert!(e[5] > 1e3 * e[0]);
}

#[test]
fn spectrum_has_secular_and_sidebands() {
    let t = TrapConfig::reference();
    let per_drive = 32.0;
    let dt = 2.0 * PI / t.drive_frequency_omega / per_drive;
    let n = 1 << 16;
    let times = uniform_times(dt, n);
    let tr = trajectory_numeric(&t, 1e-6, 0.0, &times).unwrap();
    let mut buf: Vec<Complex<f64>> = tr
        .positions
        .iter()
        .enumerate()
        .map(|(i, &x)| Complex::new(x * (0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos()), 0.0))
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let mag: Vec<f64> = buf[..n / 2].iter().map(|z| z.norm()).collect();
    let df = 1.0 / (n as f64 * dt);
    let bin = |f: f64| (f / df).round() as usize;
    let peak_in = |lo: usize, hi: usize| (lo..hi).max_by(|&a, &b| mag[a].total_cmp(&mag[b])).unwrap();

    let wx = 0.5 * mathieu_beta(stability_q(&t).unwrap(), DEFAULT_CF_DEPTH).unwrap() * t.drive_frequency_omega;
    let fx = wx / (2.0 * PI);
    let fd = t.drive_frequency_omega / (2.0 * PI);
    let main = peak_in(1, n / 2);
    assert!((main as i64 - bin(fx) as i64).abs() <= 2, "main peak at {} MHz", main as f64 * df / 1e6);

    let median = {
        let mut m = mag.clone();
        m.sort_by(f64::total_cmp);
        m[m.len() / 2]
    };
    for f in [fd - fx, fd + fx] {
        let k = peak_in(bin(f) - 20, bin(f) + 20);
        assert!((k as i64 - bin(f) as i64).abs() <= 2, "sideband near {} MHz", f / 1e6);
        assert!(mag[k] > 1e3 * median);
    }
    // A sideband sits at each side; the drive itself carries nothing.
    assert!(mag[bin(fd)] < 1e-2 * mag[bin(fd - fx)]);
}

fn saddle(theta: f64, scale: f64) -> impl Fn(f64, f64) -> f64 {
    move |x: f64, y: f64| {
        let u = x * theta.cos() + y * theta.sin();
        let v = -x * theta.sin() + y * theta.cos();
        scale * (u * u - v * v) / 0.46e-3f64.powi(2)
    }
}

#[test]
fn principal_axes_of_hyperbolic_potential() {
    let l = 0.46e-3;
    let ax = principal_axes(saddle(0.0, 1.0), [0.0, 0.0], l).unwrap();
    assert!(!ax.degenerate);
    assert!((ax.eigenvectors[1][0].abs() - 1.0).abs() < 1e-12);
    assert!((ax.eigenvectors[0][1].abs() - 1.0).abs() < 1e-12);

    let ax = principal_axes(saddle(PI / 4.0, 1.0), [0.0, 0.0], l).unwrap();
    let [x, y] = ax.eigenvectors[1];
    let ang = y.atan2(x);
    let ang = if ang < -PI / 2.0 { ang + PI } else if ang > PI / 2.0 { ang - PI } else { ang };
    assert!((ang - PI / 4.0).abs() < 1e-6, "{ang}");

    let bowl = |x: f64, y: f64| (x * x + y * y) / (l * l);
    assert!(principal_axes(bowl, [1e-5, -2e-5], l).unwrap().degenerate);
}

fn orthonormal(ax: &PrincipalAxes) -> bool {
    let [a, b] = ax.eigenvectors;
    let dot = a[0] * b[0] + a[1] * b[1];
    let n = |v: [f64; 2]| (v[0] * v[0] + v[1] * v[1]).sqrt();
    dot.abs() < 1e-12 && (n(a) - 1.0).abs() < 1e-12 && (n(b) - 1.0).abs() < 1e-12
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn beta_increasing(q in 0.001f64..0.88, dq in 0.0005f64..0.01) {
        let q2 = (q + dq).min(0.8999);
        prop_assume!(q2 > q);
        let b1 = mathieu_beta(q, DEFAULT_CF_DEPTH).unwrap();
        let b2 = mathieu_beta(q2, DEFAULT_CF_DEPTH).unwrap();
        prop_assert!(b2 > b1);
        prop_assert!(b1 > 0.0 && b2 < 1.0);
    }

    #[test]
    fn recursion_residual_everywhere(q in 0.001f64..0.89) {
        let beta = mathieu_beta(q, DEFAULT_CF_DEPTH).unwrap();
        let sol = mathieu_coefficients(q, beta, 12).unwrap();
        prop_assert!(sol.max_residual < 1e-12);
    }

    #[test]
    fn secular_scaling(k in 0.2f64..3.0) {
        let base = TrapConfig { drive_voltage_v0: 300.0, ..TrapConfig::reference() };
        let w0 = secular_frequency(&base).unwrap();
        let rel = |t: TrapConfig| secular_frequency(&t).unwrap() / w0;
        let eta = (k / 3.0).clamp(0.1, 1.0);
        let km = k.max(1.0);
        let mut v = base.clone();
        v.drive_voltage_v0 *= k;
        let mut e = base.clone();
        e.geometric_scale_eta = eta;
        let mut m = base.clone();
        m.particle_mass *= km;
        let mut w = base.clone();
        w.drive_frequency_omega *= km;
        let mut r = base.clone();
        r.electrode_distance_r *= km;
        let got = [rel(v), rel(e), rel(m), rel(w), rel(r)];
        let want = [k, eta, 1.0 / km, 1.0 / km, 1.0 / (km * km)];
        for (g, x) in got.iter().zip(want) {
            prop_assert!((g - x).abs() < 1e-12 * x, "{} vs {}", g, x);
        }
    }

    #[test]
    fn axes_orthonormal_and_scale_invariant(theta in -1.5f64..1.5, s in 1e-3f64..1e3) {
        let l = 0.46e-3;
        let a = principal_axes(saddle(theta, 1.0), [1e-6, 2e-6], l).unwrap();
        let b = principal_axes(saddle(theta, s), [1e-6, 2e-6], l).unwrap();
        prop_assert!(orthonormal(&a) && orthonormal(&b));
        for i in 0..2 {
            let d = a.eigenvectors[i][0] * b.eigenvectors[i][0] + a.eigenvectors[i][1] * b.eigenvectors[i][1];
            prop_assert!((d.abs() - 1.0).abs() < 1e-9);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn closed_form_tracks_numeric_for_small_q(q in 0.01f64..0.15) {
        let t = trap_at_q(q);
        let times = secular_periods_grid(&t, 10.0, 40.0);
        let cf = trajectory_closed_form(&t, 1e-6, &times).unwrap();
        let num = trajectory_numeric(&t, 1e-6 * (1.0 + q / 2.0), 0.0, &times).unwrap();
        prop_assert!(cf.rms_difference(&num) / cf.rms() < 0.02);
        prop_assert!((cf.micromotion_fraction - q / 2.0).abs() <= 0.1 * q / 2.0);
    }
}
