use std::f64::consts::TAU;

use num_complex::Complex64;
use proptest::prelude::*;
use rectenna_core::circuit::*;

/// Least-squares fit of `c + a cos ωt + b sin ωt`; returns the phasor a − jb.
fn fit_phasor(t: &[f64], v: &[f64], f: f64) -> Complex64 {
    let w = TAU * f;
    let mut m = [[0.0f64; 3]; 3];
    let mut r = [0.0f64; 3];
    for (&tk, &vk) in t.iter().zip(v) {
        let basis = [1.0, (w * tk).cos(), (w * tk).sin()];
        for i in 0..3 {
            r[i] += basis[i] * vk;
            for j in 0..3 {
                m[i][j] += basis[i] * basis[j];
            }
        }
    }
    // Gaussian elimination on the 3x3 normal equations
    for col in 0..3 {
        let pivot = (col..3)
            .max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))
            .unwrap();
        m.swap(col, pivot);
        r.swap(col, pivot);
        for row in col + 1..3 {
            let k = m[row][col] / m[col][col];
            for j in col..3 {
                m[row][j] -= k * m[col][j];
            }
            r[row] -= k * r[col];
        }
    }
    let mut x = [0.0; 3];
    for i in (0..3).rev() {
        let s: f64 = (i + 1..3).map(|j| m[i][j] * x[j]).sum();
        x[i] = (r[i] - s) / m[i][i];
    }
    Complex64::new(x[1], -x[2])
}

#[derive(Debug, Clone)]
enum Part {
    R(f64),
    L(f64),
    C(f64),
}

fn part() -> impl Strategy<Value = Part> {
    prop_oneof![
        (20.0..200.0f64).prop_map(Part::R),
        (1e-9..20e-9f64).prop_map(Part::L),
        (0.5e-12..5e-12f64).prop_map(Part::C),
    ]
}

/// Ladder of series parts, each node shunted by a resistor and an optional
/// reactive part.
fn ladder() -> impl Strategy<Value = Vec<(Part, f64, Option<Part>)>> {
    proptest::collection::vec(
        (part(), 20.0..200.0f64, proptest::option::of(part())),
        1..4,
    )
}

fn push(c: CircuitDescription, name: &str, a: &str, b: &str, p: &Part) -> CircuitDescription {
    match *p {
        Part::R(v) => c.resistor(name, a, b, v),
        Part::L(v) => c.inductor(name, a, b, v),
        Part::C(v) => c.capacitor(name, a, b, v),
    }
}

fn build_ladder(sections: &[(Part, f64, Option<Part>)], wave: SourceWaveform) -> Netlist {
    let mut c = CircuitDescription::new()
        .node("n0")
        .voltage_source("V1", "n0", "0", wave);
    for (i, (series, shunt_r, shunt)) in sections.iter().enumerate() {
        let (a, b) = (format!("n{i}"), format!("n{}", i + 1));
        c = c.node(b.clone());
        c = push(c, &format!("S{i}"), &a, &b, series);
        c = c.resistor(&format!("G{i}"), &b, "0", *shunt_r);
        if let Some(p) = shunt {
            c = push(c, &format!("P{i}"), &b, "0", p);
        }
    }
    build_netlist(&c).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn transient_matches_ac(sections in ladder()) {
        let f = 1e9;
        let amplitude = 0.7;
        let net = build_ladder(&sections, SourceWaveform::sine(amplitude, f));
        let ac = solve_ac(&net, &[f], "V1", None).unwrap();
        let dt = 1.0 / f / 200.0;
        let wave = solve_transient(&net, 11.0 / f, dt, InitialState::Zero).unwrap();
        let start = wave.len() - 201;
        let t = &wave.time[start..];
        // the drive is A sin ωt; its own fitted phasor is the AC reference
        let reference = fit_phasor(t, &wave.voltage("n0").unwrap()[start..], f);
        prop_assert!((reference - Complex64::new(0.0, -amplitude)).norm() < 1e-9);
        for (i, node) in ac.node_names.iter().enumerate() {
            let expected = ac.points[0].node_voltages[i] * reference;
            let got = fit_phasor(t, &wave.voltage(node).unwrap()[start..], f);
            let err = (got - expected).norm();
            prop_assert!(
                err <= 0.01 * expected.norm().max(0.05 * amplitude),
                "node {}: transient {} vs ac {}", node, got, expected
            );
        }
    }

    #[test]
    fn dc_is_transient_asymptote(r1 in 10.0..1e4f64, r2 in 10.0..1e4f64, c in 1e-12..1e-9f64, l in 1e-9..1e-6f64, v in -5.0..5.0f64) {
        let net = build_netlist(
            &CircuitDescription::new()
                .nodes(["a", "b", "c"])
                .voltage_source("V1", "a", "0", SourceWaveform::Dc(v))
                .resistor("R1", "a", "b", r1)
                .capacitor("C1", "b", "0", c)
                .inductor("L1", "b", "c", l)
                .resistor("R2", "c", "0", r2),
        )
        .unwrap();
        let op = solve_dc(&net).unwrap();
        // slowest natural time constant is below (r1 + r2) c + l / min(r1, r2)
        let tau = (r1 + r2) * c + l / r1.min(r2);
        let dt = tau / 50.0;
        let wave = solve_transient(&net, 40.0 * tau, dt, InitialState::Zero).unwrap();
        for node in ["a", "b", "c"] {
            let last = *wave.voltage(node).unwrap().last().unwrap();
            prop_assert!((last - op.voltage(node).unwrap()).abs() < 1e-6, "{} {} {}", node, last, op.voltage(node).unwrap());
        }
    }

    #[test]
    fn source_free_decay_is_passive(sections in ladder(), i0 in 1e-4..1e-2f64) {
        // charge the network from a DC current source, then remove the drive
        let build = |amp: f64| {
            let mut c = CircuitDescription::new()
                .node("n0")
                .current_source("I1", "0", "n0", SourceWaveform::Dc(amp))
                .resistor("R0", "n0", "0", 100.0);
            for (i, (series, shunt_r, shunt)) in sections.iter().enumerate() {
                let (a, b) = (format!("n{i}"), format!("n{}", i + 1));
                c = c.node(b.clone());
                c = push(c, &format!("S{i}"), &a, &b, series);
                c = c.resistor(&format!("G{i}"), &b, "0", *shunt_r);
                if let Some(p) = shunt {
                    c = push(c, &format!("P{i}"), &b, "0", p);
                }
            }
            build_netlist(&c).unwrap()
        };
        let charged = solve_dc(&build(i0)).unwrap();
        let free = build(0.0);
        let mut stepper = TransientStepper::new(
            &free,
            5e-12,
            InitialState::OperatingPoint(&charged),
            TransientOptions::default(),
        )
        .unwrap();
        let mut last = stepper.stored_energy();
        for _ in 0..2000 {
            stepper.step().unwrap();
            let e = stepper.stored_energy();
            prop_assert!(e <= last * (1.0 + 1e-9) + 1e-30, "energy rose from {} to {}", last, e);
            last = e;
        }
    }
}

fn rc_sine() -> Netlist {
    build_netlist(
        &CircuitDescription::new()
            .nodes(["a", "b"])
            .voltage_source("V1", "a", "0", SourceWaveform::sine(1.0, 1e6))
            .resistor("R1", "a", "b", 1e3)
            .capacitor("C1", "b", "0", 100e-12),
    )
    .unwrap()
}

#[test]
fn trapezoidal_is_second_order() {
    let net = rc_sine();
    let t_stop = 1.3e-6;
    let sample = |dt: f64| {
        let w = solve_transient(&net, t_stop, dt, InitialState::Zero).unwrap();
        *w.voltage("b").unwrap().last().unwrap()
    };
    let dt = t_stop / 130.0;
    let (v1, v2, v3) = (sample(dt), sample(dt / 2.0), sample(dt / 4.0));
    let (d1, d2) = ((v1 - v2).abs(), (v2 - v3).abs());
    let ratio = d1 / d2;
    assert!(d2 < 4.0 * d1);
    assert!((3.0..5.0).contains(&ratio), "halving ratio {ratio}");
}

#[test]
fn transient_rc_matches_closed_form_sine_response() {
    // steady-state phasor of the RC low-pass against the analytic value
    let net = rc_sine();
    let f = 1e6;
    let dt = 1.0 / f / 1000.0;
    let wave = solve_transient(&net, 20.0 / f, dt, InitialState::Zero).unwrap();
    let start = wave.len() - 1001;
    let got = fit_phasor(&wave.time[start..], &wave.voltage("b").unwrap()[start..], f);
    // sin drive: source phasor is −j
    let expected = Complex64::new(0.0, -1.0) / Complex64::new(1.0, TAU * f * 1e3 * 100e-12);
    assert!((got - expected).norm() < 1e-3 * expected.norm(), "{got} vs {expected}");
}

#[test]
fn ladder_node_count_is_deterministic() {
    let a = rc_sine();
    let b = rc_sine();
    assert_eq!(a.nodes(), b.nodes());
    assert_eq!(a.nodes(), ["a", "b"]);
}
