mod common;

use rcac_beam::beam_model::{
    build_beam, build_state_space, modal_summary, output_map, BeamParams, SensorKind,
};

#[test]
fn modal_damping_follows_rayleigh_formula() {
    let p = BeamParams::default();
    let (_, model) = build_beam(&p).unwrap();
    let ss = build_state_space(&model, 12, 5).unwrap();
    let (omegas, _) = common::undamped_modes(&model);
    let expected: Vec<(f64, f64)> = omegas
        .iter()
        .map(|&w| (w, 0.5 * (p.alpha / w + p.beta * w)))
        .filter(|(_, xi)| *xi < 1.0)
        .collect();

    let summary = modal_summary(&ss).unwrap();
    let got: Vec<_> = summary.oscillatory().collect();
    assert_eq!(got.len(), expected.len());
    for (m, (w, xi)) in got.iter().zip(&expected) {
        let w_got = 2.0 * std::f64::consts::PI * m.frequency_hz;
        assert!((w_got - w).abs() <= 1e-6 * w, "ω {w_got} vs {w}");
        assert!(
            (m.damping_ratio - xi).abs() <= 1e-6 * xi,
            "ξ {} vs {xi}",
            m.damping_ratio
        );
    }
}

fn fundamental_hz(n: usize) -> f64 {
    let p = BeamParams {
        elements: n,
        ..BeamParams::default()
    };
    let (_, model) = build_beam(&p).unwrap();
    let (omegas, _) = common::undamped_modes(&model);
    omegas[0] / (2.0 * std::f64::consts::PI)
}

#[test]
fn fundamental_frequency_converges_with_refinement() {
    // Reference from an independent dense assembly: 5.290972 Hz at 20
    // elements, 5.420218 Hz at 40. The lumped model converges at first
    // order, so doubling n_b moves f₁ by about 2.4%.
    let (f20, f40, f80) = (fundamental_hz(20), fundamental_hz(40), fundamental_hz(80));
    assert!((f20 - 5.290_972).abs() < 1e-5, "{f20}");
    assert!((f40 - 5.420_218).abs() < 1e-5, "{f40}");
    let (d1, d2) = ((f40 - f20) / f40, (f80 - f40) / f80);
    assert!((d1 - 0.023_845).abs() < 1e-4, "{d1}");
    assert!(d2 < 0.6 * d1, "not converging: {d1} then {d2}");
}

#[test]
fn acceleration_output_is_state_derivative() {
    let (_, model) = build_beam(&BeamParams::default()).unwrap();
    let ss = build_state_space(&model, 12, 5).unwrap();
    let acc = output_map(&ss, 20, SensorKind::Acceleration).unwrap();
    let x = nalgebra::DVector::from_fn(ss.states(), |i, _| ((i * 7 % 11) as f64 - 5.0) * 1e-4);
    let (u, d) = (0.7, -0.2);
    let xdot = &ss.a * &x + &ss.b_u * u + &ss.b_d * d;
    let y = acc.sample(&x, u, d);
    assert!((y - xdot[ss.elements() + 19]).abs() <= 1e-9 * y.abs().max(1.0));
}

#[test]
fn input_location_only_changes_b_u() {
    let (_, model) = build_beam(&BeamParams::default()).unwrap();
    let a = build_state_space(&model, 10, 5).unwrap();
    let b = build_state_space(&model, 16, 5).unwrap();
    assert_eq!(a.a, b.a);
    assert_eq!(a.b_d, b.b_d);
    assert_ne!(a.b_u, b.b_u);
}

#[test]
fn rejects_bad_indices() {
    let (_, model) = build_beam(&BeamParams::default()).unwrap();
    assert!(build_state_space(&model, 0, 5).is_err());
    assert!(build_state_space(&model, 21, 5).is_err());
    let ss = build_state_space(&model, 12, 5).unwrap();
    assert!(output_map(&ss, 21, SensorKind::Displacement).is_err());
}
