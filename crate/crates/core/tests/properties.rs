use dressedsim::ensemble::{fidelity_for_realizations, stroboscopic_grid, upper_envelope};
use dressedsim::export::{format_value, Table};
use dressedsim::gates::{bell_fidelity, gate1q_infidelity, max_bell_fidelity};
use dressedsim::linalg::{expm, half_field, kron, partial_trace, reunitarize};
use dressedsim::propagation::{monodromy, propagate_direct};
use dressedsim::{
    CoherenceOptions, CompositeSpace, ControlScheme, NoiseRealization, Operator, SchemeVariant, Su2, C64,
};
use proptest::prelude::*;

fn complex_matrix(dim: usize) -> impl Strategy<Value = Operator> {
    prop::collection::vec(-1.0f64..1.0, 2 * dim * dim).prop_map(move |v| {
        let mut m = Operator::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                let k = 2 * (i * dim + j);
                m.as_array_mut()[[i, j]] = C64::new(v[k], v[k + 1]);
            }
        }
        m
    })
}

fn hermitian(dim: usize) -> impl Strategy<Value = Operator> {
    complex_matrix(dim).prop_map(|a| (&a + &a.dag()).scale_re(0.5))
}

/// `A A† / Tr(A A†)`
fn density(dim: usize) -> impl Strategy<Value = Operator> {
    complex_matrix(dim).prop_map(|a| {
        let p = &a * &a.dag();
        let tr = p.trace().re;
        p.scale_re(1.0 / tr)
    })
}

fn su2() -> impl Strategy<Value = Su2> {
    prop::array::uniform4(-1.0f64..1.0)
        .prop_filter("nonzero", |q| q.iter().map(|x| x * x).sum::<f64>() > 1e-3)
        .prop_map(|q| Su2(q).normalized())
}

fn field() -> impl Strategy<Value = [f64; 3]> {
    prop::array::uniform3(-3.0f64..3.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn expm_of_antihermitian_is_unitary(h in hermitian(4), t in 0.0f64..20.0) {
        let u = expm(&h.scale(C64::new(0.0, -t))).unwrap();
        prop_assert!(u.unitarity_error() < 1e-11, "{}", u.unitarity_error());
    }

    #[test]
    fn expm_reproduces_the_qubit_rotation(g in field(), t in 0.0f64..5.0) {
        // exp(−i t g·σ) with g·σ = half_field(2g)
        let gen = half_field([2.0 * g[0], 2.0 * g[1], 2.0 * g[2]]);
        let m = expm(&gen.scale(C64::new(0.0, -t))).unwrap();
        let q = Su2::exp_field(g, t).to_operator();
        prop_assert!(m.max_abs_diff(&q) < 1e-11);
    }

    #[test]
    fn quaternion_product_is_matrix_product(a in su2(), b in su2()) {
        let lhs = (a * b).to_operator();
        let rhs = &a.to_operator() * &b.to_operator();
        prop_assert!(lhs.max_abs_diff(&rhs) < 1e-14);
        prop_assert!(Su2::from_operator(&lhs).dot(a * b).abs() > 1.0 - 1e-12);
    }

    #[test]
    fn quaternion_powers_compose(q in su2(), x in 0.0f64..7.0, y in 0.0f64..7.0) {
        let d = q.powf(x) * q.powf(y);
        prop_assert!(d.dot(q.powf(x + y)).abs() > 1.0 - 1e-12);
    }

    #[test]
    fn reunitarize_keeps_unitaries(h in hermitian(3)) {
        let u = expm(&h.scale(C64::new(0.0, -1.0))).unwrap();
        prop_assert!(reunitarize(&u).max_abs_diff(&u) < 1e-12);
    }

    #[test]
    fn partial_trace_of_product_returns_factor(a in density(2), b in density(3)) {
        let space = CompositeSpace::new(vec![2, 3]).unwrap();
        let ab = kron(&a, &b);
        let ra = partial_trace(&ab, &space, &[0]).unwrap();
        let rb = partial_trace(&ab, &space, &[1]).unwrap();
        prop_assert!(ra.max_abs_diff(&a) < 1e-13);
        prop_assert!(rb.max_abs_diff(&b) < 1e-13);
        prop_assert!((ra.trace() - C64::new(1.0, 0.0)).norm() < 1e-13);
    }

    #[test]
    fn noisy_hamiltonian_is_hermitian_and_traceless(
        omega1 in 1.0f64..40.0,
        omega2 in 0.1f64..5.0,
        delta in -1.0f64..1.0,
        eps in -0.05f64..0.05,
        t in 0.0f64..10.0,
    ) {
        let scheme = ControlScheme::circular(omega1, omega2).unwrap();
        let h = dressedsim::control::rotating_frame_hamiltonian(&scheme, NoiseRealization::new(delta, eps));
        let m = h.eval(t);
        prop_assert!(m.hermiticity_error() < 1e-14);
        prop_assert!(m.trace().norm() < 1e-14);
    }

    #[test]
    fn memory_fidelity_stays_in_range(
        omega1 in 2.0f64..30.0,
        omega2 in 0.2f64..3.0,
        pairs in prop::collection::vec((-2.0f64..2.0, -0.05f64..0.05), 1..12),
    ) {
        let scheme = ControlScheme::circular(omega1, omega2).unwrap();
        let realizations: Vec<_> = pairs.iter().map(|&(d, e)| NoiseRealization::new(d, e)).collect();
        let opts = CoherenceOptions { phases_per_period: 8, ..CoherenceOptions::default() };
        let times = stroboscopic_grid(scheme.period(), 30.0, opts.phases_per_period, 256);
        let f = fidelity_for_realizations(&scheme, &realizations, &times, &opts).unwrap();
        prop_assert!((f[0] - 1.0).abs() < 1e-12);
        for v in f {
            prop_assert!((1.0 / 3.0 - 1e-12..=1.0 + 1e-12).contains(&v), "{v}");
        }
    }

    #[test]
    fn envelope_bounds_the_data(values in prop::collection::vec(0.0f64..1.0, 2..200), w in 0.1f64..20.0) {
        let times: Vec<f64> = (0..values.len()).map(|i| i as f64).collect();
        let env = upper_envelope(&times, &values, w);
        let top = values.iter().cloned().fold(f64::MIN, f64::max);
        for (e, v) in env.iter().zip(&values) {
            prop_assert!(e >= v && *e <= top);
        }
    }

    #[test]
    fn bell_optimizer_never_loses_to_identity(rho in density(4)) {
        let (best, angles) = max_bell_fidelity(&rho).unwrap();
        prop_assert!(best >= bell_fidelity(&rho, &[0.0; 6]) - 1e-14);
        prop_assert!((best - bell_fidelity(&rho, &angles)).abs() < 1e-14);
        prop_assert!(best <= 1.0 + 1e-12);
    }

    #[test]
    fn csv_values_round_trip(rows in prop::collection::vec(prop::array::uniform3(prop::num::f64::NORMAL), 1..20)) {
        let mut table = Table::new(["a", "b", "c"]);
        for r in &rows {
            table.push(r.to_vec()).unwrap();
        }
        let bytes = table.to_csv().unwrap();
        let mut rdr = csv::Reader::from_reader(bytes.as_slice());
        for (rec, r) in rdr.records().zip(&rows) {
            let parsed: Vec<f64> = rec.unwrap().iter().map(|s| s.parse().unwrap()).collect();
            prop_assert_eq!(&parsed[..], &r[..]);
        }
        for x in rows.iter().flatten() {
            prop_assert_eq!(format_value(*x).parse::<f64>().unwrap(), *x);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn circular_gates_have_no_counter_rotating_error(ratio in 1.0f64..20.0, n in 1u32..5) {
        let r = gate1q_infidelity(ratio, n, SchemeVariant::CircularDressed).unwrap();
        prop_assert!(r < 1e-9, "{r}");
    }

    #[test]
    fn monodromy_matches_adaptive_integration(omega1 in 2.0f64..20.0, omega2 in 0.3f64..3.0, delta in -0.5f64..0.5) {
        let scheme = ControlScheme::new(SchemeVariant::DoubleDrive, omega1, omega2, omega1).unwrap();
        let h = dressedsim::control::rotating_frame_hamiltonian(&scheme, NoiseRealization::new(delta, 0.0));
        let m = monodromy(&h, 2000).unwrap();
        let direct = propagate_direct(&h, h.period(), 1e-11).unwrap().at(h.period()).unwrap();
        prop_assert!(m.max_abs_diff(&direct) < 1e-8, "{}", m.max_abs_diff(&direct));
        prop_assert!(m.unitarity_error() < 1e-12);
    }
}
