mod common;

use std::f64::consts::PI;

use common::*;
use floquet_flow::models::*;
use floquet_flow::*;
use num_complex::Complex64;
use proptest::prelude::*;

fn tls_solution(p: &TwoLevelParams) -> (FloquetSolution, CouplingOperator) {
    let (h, v) = build_tls_hamiltonian(p).unwrap();
    let sol = floquet_solve(&h, &SolveOptions::default()).unwrap();
    (label_tls_solution(&sol, p).unwrap(), v)
}

#[test]
fn identity_coupling_has_only_static_diagonal_elements() {
    let (h, _) = random_system(1, 3);
    let sol = floquet_solve(&h, &SolveOptions::default()).unwrap();
    let v = CouplingOperator::new(CMatrix::identity(3, 3) * Complex64::new(0.7, 0.0)).unwrap();
    let el = fourier_matrix_elements(&sol, &v, None).unwrap();
    for f in 0..3 {
        for i in 0..3 {
            for ell in el.support(f, i) {
                let expect = if f == i && ell == 0 { 0.7 } else { 0.0 };
                assert!((el.get(f, i, ell) - expect).norm() < 1e-10);
            }
        }
    }
}

#[test]
fn two_level_elements_match_closed_form() {
    let p = TwoLevelParams::normalized(1.0, 1.5, 1.1);
    let (sol, v) = tls_solution(&p);
    let el = fourier_matrix_elements(&sol, &v, None).unwrap();
    let (d, o) = (p.delta(), p.rabi());
    // Elements carry the arbitrary phases of the numerical eigenvectors; compare moduli.
    let cases = [
        (PLUS, MINUS, 1, (o + d) / (2.0 * o)),
        (PLUS, MINUS, -1, (o - d) / (2.0 * o)),
        (MINUS, PLUS, 1, (o - d) / (2.0 * o)),
        (MINUS, PLUS, -1, (o + d) / (2.0 * o)),
        (PLUS, PLUS, 1, p.mu_f / (2.0 * o)),
        (MINUS, MINUS, -1, p.mu_f / (2.0 * o)),
    ];
    for (f, i, ell, m) in cases {
        assert!((el.get(f, i, ell).norm() - m).abs() < 1e-10, "({f},{i},{ell})");
    }
    for f in 0..2 {
        for i in 0..2 {
            for ell in el.support(f, i) {
                if ell.abs() != 1 {
                    assert!(el.get(f, i, ell).norm() < 1e-10);
                }
            }
        }
    }
}

#[test]
fn two_level_transition_frequencies() {
    let p = TwoLevelParams::normalized(1.0, 1.5, 0.6);
    let (sol, _) = tls_solution(&p);
    let tf = transition_frequencies(&sol, 2);
    let o = p.rabi();
    assert!((tf.get(PLUS, MINUS, 1) - (o + 1.5)).abs() < 1e-10);
    assert!((tf.get(PLUS, MINUS, -1) - (o - 1.5)).abs() < 1e-10);
    assert!((tf.get(MINUS, PLUS, 1) - (1.5 - o)).abs() < 1e-10);
    assert!((tf.get(MINUS, PLUS, -1) - (-o - 1.5)).abs() < 1e-10);
    assert_eq!(tf.get(PLUS, PLUS, 2), 3.0);
    assert_eq!(tf.iter().count(), 4 * 5);
}

#[test]
fn window_larger_than_available_is_rejected() {
    let (h, v) = random_system(2, 3);
    let sol = floquet_solve(&h, &SolveOptions::default()).unwrap();
    let too_big = 2 * sol.harmonic_cutoff() + 1;
    assert!(matches!(fourier_matrix_elements(&sol, &v, Some(too_big)), Err(Error::WindowTooSmall { .. })));
    let el = fourier_matrix_elements(&sol, &v, Some(3)).unwrap();
    assert_eq!(el.support(0, 1), -3..=3);
}

#[test]
fn zero_coupling_gives_zero_rates_and_no_steady_state() {
    let (h, _) = random_system(4, 3);
    let sol = floquet_solve(&h, &SolveOptions::default()).unwrap();
    let v = CouplingOperator::new(CMatrix::zeros(3, 3)).unwrap();
    let table = partial_rates(&sol, &v, &constant_bath(1.0), None).unwrap();
    assert!(table.channels().iter().all(|c| c.rate == 0.0));
    assert!(matches!(steady_state(table.totals()), Err(Error::NonErgodic { .. })));
    let uniform = SteadyState { p: vec![1.0 / 3.0; 3], residual: 0.0, ergodic: false };
    let r = dissipation_rate(&table, &uniform).unwrap();
    assert_eq!((r.total, r.transitions, r.pseudo), (0.0, 0.0, 0.0));
}

#[test]
fn two_level_partial_rates_match_closed_form_in_both_regimes() {
    for (mf, beta) in [(0.8, 1.0), (2.5, 1.0), (0.8, f64::INFINITY), (3.0, 0.3)] {
        let p = TwoLevelParams::normalized(1.0, 1.5, mf);
        let (sol, v) = tls_solution(&p);
        let table = partial_rates(&sol, &v, &p.bath(beta).unwrap(), None).unwrap();
        let closed = tls_rates(&p, beta).unwrap();
        for f in 0..2 {
            for i in 0..2 {
                for ell in [-1, 1] {
                    let (a, b) = (table.partial(f, i, ell), closed.get(f, i, ell));
                    assert!((a - b).abs() <= 1e-9 * b.max(1e-12), "muF {mf} beta {beta} ({f},{i},{ell}): {a} vs {b}");
                }
            }
        }
    }
}

#[test]
fn resonant_channel_with_weight_is_an_error() {
    // Omega = w for w0 = 1, w = 1.5, muF = sqrt 2.
    let p = TwoLevelParams::normalized(1.0, 1.5, 2f64.sqrt());
    let (sol, v) = tls_solution(&p);
    let err = partial_rates(&sol, &v, &p.bath(1.0).unwrap(), None).unwrap_err();
    assert!(matches!(err, Error::ResonantDivergence { .. }));
    let table = tls_rate_table(&p, 1.0).unwrap();
    assert_eq!(table.degenerate_channels().count(), 2);
}

#[test]
fn oscillator_elements_and_single_partial_totals() {
    let p = OscillatorParams { mass: 1.0, omega0: 1.0, omega: 5f64.sqrt(), force: 0.2, gamma: 1.0, n_max: 40 };
    let (h, v) = build_osc_hamiltonian(&p).unwrap();
    let sol = floquet_solve(&h, &SolveOptions::default()).unwrap();
    let level: Vec<usize> = (0..p.n_max)
        .map(|s| {
            let u = sol.floquet_function_at(s, 0.0).unwrap();
            (0..u.len()).max_by(|&a, &b| u[a].norm().total_cmp(&u[b].norm())).unwrap()
        })
        .collect();
    let state_of = |n: usize| level.iter().position(|&l| l == n).unwrap();
    let el = fourier_matrix_elements(&sol, &v, None).unwrap();
    let table = partial_rates(&sol, &v, &constant_bath(1.0), None).unwrap();
    for n in 1..12 {
        let (a, b) = (state_of(n - 1), state_of(n));
        // One channel per genuine pair; its label depends on the folded representatives.
        let nonzero: Vec<(i64, f64)> =
            el.iter_pair(a, b).map(|(ell, x)| (ell, x.norm())).filter(|&(_, m)| m > 1e-8).collect();
        assert_eq!(nonzero.len(), 1, "n {n}: {nonzero:?}");
        assert!((nonzero[0].1 - p.gamma * p.x_element(n)).abs() < 1e-8);
        let ell0 = nonzero[0].0;
        for ell in el.support(b, b) {
            let m = el.get(b, b, ell).norm();
            let expect = if ell.abs() == 1 { p.pseudo_element().abs() } else if ell == 0 { m } else { 0.0 };
            assert!((m - expect).abs() < 1e-8, "n {n} diag ell {ell}: {m}");
        }
        let total = table.totals()[(a, b)];
        assert!((total - table.partial(a, b, ell0)).abs() <= 1e-8 * total);
    }
}

#[test]
fn first_order_probability_limits() {
    let p = TwoLevelParams::normalized(1.0, 1.5, 1.42);
    let (sol, v) = tls_solution(&p);
    let el = fourier_matrix_elements(&sol, &v, None).unwrap();

    let t = 1e-3;
    let fo = first_order_probability(&sol, &v, PLUS, MINUS, t).unwrap();
    let sum: Complex64 = el.iter_pair(PLUS, MINUS).map(|(_, x)| x).sum();
    assert!((fo.quadrature - t * t * sum.norm_sqr()).abs() < 1e-3 * t * t * sum.norm_sqr().max(1e-3));

    // Near-resonant (+-, -1) channel dominates at long times.
    let t = 40.0 * PI / p.omega;
    let fo = first_order_probability(&sol, &v, PLUS, MINUS, t).unwrap();
    assert!((fo.quadrature - fo.sinc_sum).abs() < 0.05 * fo.sinc_sum, "{fo:?}");

    let zero = CouplingOperator::new(CMatrix::zeros(2, 2)).unwrap();
    let fo = first_order_probability(&sol, &zero, PLUS, MINUS, 3.0).unwrap();
    assert_eq!((fo.quadrature, fo.sinc_sum), (0.0, 0.0));
    assert!(first_order_probability(&sol, &v, PLUS, PLUS, 1.0).is_err());
}

#[test]
fn two_level_pipeline_matches_closed_forms() {
    let grid = [(0.5, 0.3, 2.0), (1.5, 1.0, 1.0), (0.5, 2.0, 0.2), (1.5, 3.0, 10.0), (0.5, 3.3, 1.0), (1.5, 0.05, 5.0)];
    for (w, mf, beta) in grid {
        let p = TwoLevelParams::normalized(1.0, w, mf);
        let (sol, v) = tls_solution(&p);
        let r = evaluate(sol, &v, &p.bath(beta).unwrap(), None).unwrap();
        let pm = tls_population(&p, beta).unwrap();
        let d = tls_dissipation(&p, beta).unwrap();
        assert!(rel(r.steady.p[MINUS], pm) < 1e-6);
        assert!(rel(r.dissipation.pseudo, d.pseudo) < 1e-6);
        assert!(rel(r.dissipation.transitions, d.transitions) < 1e-6 || (r.dissipation.transitions - d.transitions).abs() < 1e-9);
        assert!(rel(r.dissipation.total, r.dissipation.transitions + r.dissipation.pseudo) < 1e-12);
    }
}

#[test]
fn two_level_oracle_point() {
    let p = TwoLevelParams::normalized(1.0, 1.5, 1.0);
    let (sol, v) = tls_solution(&p);
    let r = evaluate(sol, &v, &p.bath(1.0).unwrap(), None).unwrap();
    assert!((r.steady.p[MINUS] - 0.421_906_150_691_103_2).abs() < 1e-9);
    assert!((r.dissipation.transitions - 0.135_303_888_213_521_97).abs() < 1e-9);
    assert!((r.dissipation.pseudo - 0.3).abs() < 1e-9);
}

#[test]
fn zero_temperature_upward_transitions_survive_below_resonance() {
    let p = TwoLevelParams::normalized(1.0, 1.5, 0.7);
    let (sol, v) = tls_solution(&p);
    let r = evaluate(sol, &v, &p.bath(f64::INFINITY).unwrap(), None).unwrap();
    assert!(r.table.totals()[(PLUS, MINUS)] > 0.0 && r.table.totals()[(MINUS, PLUS)] > 0.0);
    let (d, o) = (p.delta(), p.rabi());
    assert!((r.steady.p[MINUS] - (0.5 + o * d / (o * o + d * d))).abs() < 1e-9);
}

#[test]
fn strongly_driven_two_level_breaks_channel_balance() {
    let p = TwoLevelParams::normalized(1.0, 1.5, 1.0);
    let table = tls_rate_table(&p, 1.0).unwrap();
    let ss = steady_state(table.totals()).unwrap();
    assert!(channel_balance_defect(&table, &ss) > 1e-3);
    // Two states always balance in the totals.
    assert!(detailed_balance_defect(table.totals(), &ss) < 1e-14);
}

#[test]
fn oscillator_numeric_pipeline_is_boltzmann_with_pseudo_dissipation() {
    let p = OscillatorParams { mass: 1.0, omega0: 1.0, omega: 5f64.sqrt(), force: 0.5, gamma: 1.0, n_max: 40 };
    let (h, v) = build_osc_hamiltonian(&p).unwrap();
    let r = run_pipeline(&h, &v, &constant_bath(1.0), &SolveOptions::default(), None).unwrap();
    let level: Vec<usize> = (0..p.n_max)
        .map(|s| {
            let u = r.solution.floquet_function_at(s, 0.0).unwrap();
            (0..u.len()).max_by(|&a, &b| u[a].norm().total_cmp(&u[b].norm())).unwrap()
        })
        .collect();
    let mut by_level = vec![0.0; p.n_max];
    for (s, &n) in level.iter().enumerate() {
        by_level[n] = r.steady.p[s];
    }
    for n in 1..15 {
        assert!(rel(by_level[n] / by_level[n - 1], (-1f64).exp()) < 1e-9, "n {n}");
    }
    let closed = osc_steady_and_r(&p, &constant_bath(1.0)).unwrap();
    assert!(rel(r.dissipation.total, closed.total) < 1e-8);
    assert!(r.dissipation.transitions.abs() < 1e-8 * closed.total);
}

#[test]
fn ohmic_bath_runs_through_the_pipeline() {
    let (h, v) = random_system(30, 3);
    let bath = BathSpec::new(2.0, SpectralDensity::Ohmic { eta: 0.3, cutoff: 5.0 }).unwrap();
    let r = run_pipeline(&h, &v, &bath, &SolveOptions::default(), None).unwrap();
    assert!(r.steady.ergodic);
    assert!(r.dissipation.pseudo >= 0.0);
}

fn random_case() -> impl Strategy<Value = (u64, usize)> {
    (0u64..10_000, 3usize..=5)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn elements_are_hermitian_and_frequencies_antisymmetric((seed, dim) in random_case()) {
        let (h, v) = random_system(seed, dim);
        let sol = floquet_solve(&h, &SolveOptions::default()).unwrap();
        let el = fourier_matrix_elements(&sol, &v, None).unwrap();
        let tf = transition_frequencies(&sol, 4);
        for f in 0..dim {
            for i in 0..dim {
                for ell in el.support(f, i) {
                    prop_assert!((el.get(i, f, -ell) - el.get(f, i, ell).conj()).norm() < 1e-12);
                }
                for ell in -4..=4 {
                    prop_assert!((tf.get(f, i, ell) + tf.get(i, f, -ell)).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn rates_are_nonnegative_and_obey_kernel_balance((seed, dim) in random_case(), beta in 0.2f64..3.0) {
        let (h, v) = random_system(seed, dim);
        let sol = floquet_solve(&h, &SolveOptions::default()).unwrap();
        let table = partial_rates(&sol, &v, &constant_bath(beta), None).unwrap();
        for c in table.channels() {
            prop_assert!(c.rate >= 0.0);
            let back = table.partial(c.initial_state, c.final_state, -c.ell);
            if c.rate > 1e-200 && back > 1e-200 && !c.is_pseudo() {
                let expect = (-beta * c.frequency).exp();
                prop_assert!(((c.rate / back) - expect).abs() <= 1e-9 * expect);
            }
        }
    }

    #[test]
    fn totals_and_dissipation_are_gauge_invariant(
        (seed, dim) in random_case(),
        shifts in proptest::collection::vec(-6i64..=6, 5),
    ) {
        let (h, v) = random_system(seed, dim);
        let bath = constant_bath(1.0);
        let sol = floquet_solve(&h, &SolveOptions::default()).unwrap();
        let base = evaluate(sol.clone(), &v, &bath, None).unwrap();
        let mut moved = sol;
        for (n, &r) in shifts.iter().take(dim).enumerate() {
            moved = moved.shift_representative(n, r).unwrap();
        }
        let other = evaluate(moved, &v, &bath, None).unwrap();
        for f in 0..dim {
            for i in 0..dim {
                prop_assert!(rel(base.table.totals()[(f, i)], other.table.totals()[(f, i)]) < 1e-12);
            }
        }
        prop_assert!(rel(base.dissipation.total, other.dissipation.total) < 1e-12);
    }
}
