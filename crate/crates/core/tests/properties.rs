//! Randomized invariants across the library.

mod common;

use common::{eigenvalues, random_hermitian, random_state};
use proptest::prelude::*;
use thermal_channel::channel::{
    amplitude_damping, completely_depolarizing, dephasing, depolarizing, gibbs_replacer, gibbs_state, identity, is_cptp,
    pauli_channel, random_channel, unitary_channel, QuantumChannel, ReferenceState,
};
use thermal_channel::constraints::{output_observable_for_states, stabilizer_states, ConstraintSet};
use thermal_channel::learner::{expectation, update, ObservableSpec, UpdateObjective, UpdateOptions, NUM_OBSERVABLES};
use thermal_channel::linalg::{
    eig_hermitian, matrix_function, partial_trace, pauli, ComplexMatrix, HermitianOperator, MatrixFunction,
};
use thermal_channel::metrics::{
    channel_entropy, channel_relative_entropy, diamond_distance, diamond_oracle, relative_entropy, von_neumann,
    BlochParametrization, ReferenceSearch,
};
use thermal_channel::micro::{sample_average, tail_probability, window, NCopyChannel};
use thermal_channel::optim::cptp::cptp_linear_minimize;
use thermal_channel::optim::maxent::{maxent_solve, MaxEntOptions, MaxEntProblem};
use thermal_channel::optim::sdp::{sdp_solve, SdpConstraint, SdpOptions, SdpProblem};
use thermal_channel::solver::{feasible_tangent_basis, thermal_channel, thermal_given_phi, SolverOptions};

fn cfg(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, failure_persistence: None, ..ProptestConfig::default() }
}

fn qubit_channel(kind: u8, a: f64, seed: u64) -> QuantumChannel {
    match kind % 5 {
        0 => depolarizing(a).unwrap(),
        1 => amplitude_damping(a).unwrap(),
        2 => pauli_channel(1.0 - a, a * 0.5, a * 0.3, a * 0.2).unwrap(),
        3 => gibbs_replacer(&pauli::z(), 4.0 * a - 2.0, 2).unwrap(),
        _ => random_channel(2, 2, 2, seed).unwrap(),
    }
}

// ---------- hermitian core ----------

proptest! {
    #![proptest_config(cfg(24))]

    #[test]
    fn spectral_reconstruction(d in 1usize..=64, seed in any::<u64>()) {
        let h = random_hermitian(d, seed);
        let s = eig_hermitian(&h).unwrap();
        let err = s.reconstruct().sub(&h).frobenius();
        prop_assert!(err <= 1e-10 * h.frobenius(), "d = {d}: {err:e}");
    }

    #[test]
    fn sqrt_composes_to_identity_map(d in 1usize..=16, seed in any::<u64>()) {
        let h = random_state(d, seed).add(&HermitianOperator::identity(d).scaled(1e-3));
        let r = matrix_function(&h, MatrixFunction::Sqrt).unwrap();
        let sq = HermitianOperator::hermitian_part(&(r.matrix() * r.matrix()));
        prop_assert!(sq.sub(&h).frobenius() <= 1e-9 * h.frobenius());
    }

    #[test]
    fn partial_trace_is_linear_and_trace_preserving(
        dims in prop::collection::vec(1usize..=3, 1..=4),
        mask in any::<u8>(),
        seed in any::<u64>(),
        a in -2.0f64..2.0,
    ) {
        let n: usize = dims.iter().product();
        let keep: Vec<usize> = (0..dims.len()).filter(|k| mask >> k & 1 == 1).collect();
        let x = common::gaussian(n, seed);
        let y = common::gaussian(n, seed.wrapping_add(1));
        let px = partial_trace(&x, &dims, &keep).unwrap();
        let tr = x.trace();
        prop_assert!((px.trace() - tr).norm() <= 1e-12 * tr.norm() + 1e-12);
        let a = num_complex::Complex64::new(a, 0.0);
        let lhs = partial_trace(&(&x * a + &y), &dims, &keep).unwrap();
        let rhs = px * a + partial_trace(&y, &dims, &keep).unwrap();
        prop_assert!((lhs - rhs).norm() <= 1e-10 * (1.0 + x.norm() + y.norm()));
    }

    #[test]
    fn tensor_partial_trace_adjointness(da in 1usize..=4, db in 1usize..=4, seed in any::<u64>()) {
        let a = common::gaussian(da, seed);
        let x = common::gaussian(da * db, seed ^ 0xABCD);
        let lhs = (a.kronecker(&ComplexMatrix::identity(db, db)) * &x).trace();
        let rhs = (&a * partial_trace(&x, &[da, db], &[0]).unwrap()).trace();
        prop_assert!((lhs - rhs).norm() <= 1e-10 * (1.0 + lhs.norm()));
    }
}

// ---------- optimization core ----------

proptest! {
    #![proptest_config(cfg(24))]

    #[test]
    fn maxent_dual_monotone_and_duality_identity(d in 2usize..=4, k in 1usize..=5, seed in any::<u64>()) {
        let rho = random_state(d, seed);
        let operators: Vec<HermitianOperator> = (0..k).map(|i| random_hermitian(d, seed.wrapping_add(10 + i as u64))).collect();
        let values: Vec<f64> = operators.iter().map(|a| a.inner(&rho)).collect();
        let p = MaxEntProblem { operators, values };
        let sol = maxent_solve(&p, &MaxEntOptions::default()).unwrap();
        for w in sol.dual_history.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12 * w[0].abs().max(1.0), "dual increased: {:?}", w);
        }
        let neg_tlogt = common::entropy_of(&eigenvalues(&sol.tau));
        let rhs = sol.tau.trace()
            + sol.lambdas.iter().zip(&p.operators).map(|(l, a)| l * a.inner(&sol.tau)).sum::<f64>();
        prop_assert!((neg_tlogt - rhs).abs() <= 1e-7, "{neg_tlogt} vs {rhs}");
    }

    #[test]
    fn sdp_gap_and_complementarity(d1 in 1usize..=4, d2 in 1usize..=4, seed in any::<u64>()) {
        let c1 = random_hermitian(d1, seed).scaled(0.3);
        let c2 = random_hermitian(d2, seed ^ 7).scaled(0.3);
        let p = SdpProblem {
            blocks: vec![d1, d2],
            objective: vec![Some(c1.clone()), Some(c2.clone())],
            constraints: vec![SdpConstraint {
                terms: vec![Some(HermitianOperator::identity(d1)), Some(HermitianOperator::identity(d2))],
                rhs: 1.0,
            }],
        };
        let opts = SdpOptions::default();
        let s = sdp_solve(&p, &opts).unwrap();
        // the solver's stopping rule is the gap relative to 1 + |p| + |d|
        prop_assert!(s.gap <= opts.tol * (1.0 + s.value.abs() + s.dual_value.abs()), "gap {:e}", s.gap);
        prop_assert!(s.complementarity <= 10.0 * opts.tol * (1.0 + s.value.abs()), "compl {:e}", s.complementarity);
        let oracle = eigenvalues(&c1)[0].min(eigenvalues(&c2)[0]);
        prop_assert!((s.value - oracle).abs() < 1e-6);
    }

    #[test]
    fn linear_minimization_returns_channels(da in 1usize..=3, db in 1usize..=3, seed in any::<u64>()) {
        let g = random_hermitian(da * db, seed);
        let ch = cptp_linear_minimize(&g, da, db).unwrap();
        let diag = is_cptp(ch.choi(), da, db).unwrap();
        prop_assert!(diag.within(1e-8), "{diag:?}");
    }
}

// ---------- channel model ----------

proptest! {
    #![proptest_config(cfg(32))]

    #[test]
    fn constructors_are_cptp(a in 0.0f64..=1.0, b in -3.0f64..3.0, seed in any::<u64>(), d in 1usize..=4) {
        let u = {
            let q = common::gaussian(d, seed).qr().q();
            q
        };
        let chans = vec![
            identity(d),
            completely_depolarizing(d, d + 1),
            depolarizing(a).unwrap(),
            amplitude_damping(a).unwrap(),
            pauli_channel(1.0 - a, a * 0.2, a * 0.3, a * 0.5).unwrap(),
            gibbs_replacer(&random_hermitian(d, seed), b, 2).unwrap(),
            unitary_channel(&u).unwrap(),
            dephasing(&u).unwrap(),
            random_channel(d, 2, d, seed).unwrap(),
        ];
        for ch in chans {
            let diag = is_cptp(ch.choi(), ch.d_in(), ch.d_out()).unwrap();
            prop_assert!(diag.within(1e-9), "{diag:?}");
        }
    }

    #[test]
    fn apply_matches_choi_pairing(da in 1usize..=3, db in 1usize..=3, seed in any::<u64>()) {
        let ch = random_channel(da, db, 2 * da, seed).unwrap();
        let rho = random_state(da, seed ^ 1);
        let q = random_hermitian(db, seed ^ 2);
        let lhs = q.inner(&ch.apply(&rho).unwrap());
        let rhs = q.kron(&rho.transpose()).inner(ch.choi());
        prop_assert!((lhs - rhs).abs() <= 1e-10);
    }

    #[test]
    fn maximally_mixed_reference_gives_normalized_choi(da in 1usize..=3, db in 1usize..=3, seed in any::<u64>()) {
        let ch = random_channel(da, db, da, seed).unwrap();
        let out = ch.apply_with_reference(&ReferenceState::maximally_mixed(da)).unwrap();
        prop_assert!(out.max_abs_diff(&ch.choi().scaled(1.0 / da as f64)) <= 1e-12);
    }

    #[test]
    fn random_channel_bitwise_reproducible(seed in any::<u64>()) {
        let a = random_channel(2, 3, 2, seed).unwrap();
        let b = random_channel(2, 3, 2, seed).unwrap();
        prop_assert_eq!(a.choi().matrix(), b.choi().matrix());
    }
}

// ---------- entropy metrics ----------

proptest! {
    #![proptest_config(cfg(12))]

    #[test]
    fn channel_entropy_dimension_bounds(kind in 0u8..5, a in 0.0f64..=1.0, seed in any::<u64>()) {
        let ch = qubit_channel(kind, a, seed);
        let (s, _) = channel_entropy(&ch, 4, seed).unwrap();
        prop_assert!(s >= -(2f64.ln()) - 1e-9 && s <= 2f64.ln() + 1e-9, "{s}");
        let ch3 = random_channel(3, 2, 3, seed).unwrap();
        let (s3, _) = channel_entropy(&ch3, 2, seed).unwrap();
        prop_assert!(s3 >= -(3f64.ln()) - 1e-9 && s3 <= 2f64.ln() + 1e-9, "{s3}");
    }

    #[test]
    fn replacer_entropy_is_output_entropy(beta in -3.0f64..3.0, seed in any::<u64>(), d in 2usize..=3) {
        let h = random_hermitian(d, seed);
        let ch = gibbs_replacer(&h, beta, 2).unwrap();
        let sigma = gibbs_state(&h, beta).unwrap();
        let (s, _) = channel_entropy(&ch, 4, seed).unwrap();
        prop_assert!((s - common::von_neumann(&sigma)).abs() <= 1e-5, "{s}");
    }

    #[test]
    fn channel_relative_entropy_dominates_choi_probe(k1 in 0u8..5, k2 in 0u8..5, a in 0.05f64..0.95, seed in any::<u64>()) {
        let n = qubit_channel(k1, a, seed);
        let m = qubit_channel(k2, 1.0 - a, seed ^ 3).mix(&completely_depolarizing(2, 2), 0.9).unwrap();
        let d = channel_relative_entropy(&n, &m, 4, seed).unwrap();
        let probe = relative_entropy(&n.normalized_choi(), &m.normalized_choi()).unwrap();
        prop_assert!(d >= probe - 1e-6, "{d} < {probe}");
    }

    #[test]
    fn diamond_is_a_metric(s1 in any::<u64>(), s2 in any::<u64>(), s3 in any::<u64>()) {
        let a = random_channel(2, 2, 2, s1).unwrap();
        let b = random_channel(2, 2, 2, s2).unwrap();
        let c = random_channel(2, 2, 2, s3).unwrap();
        let ab = diamond_distance(&a, &b).unwrap().value;
        let ba = diamond_distance(&b, &a).unwrap().value;
        let bc = diamond_distance(&b, &c).unwrap().value;
        let ac = diamond_distance(&a, &c).unwrap().value;
        prop_assert!((ab - ba).abs() <= 1e-8);
        prop_assert!(ac <= ab + bc + 1e-6);
        let lower = diamond_oracle(&a, &b, 4, s1).unwrap();
        prop_assert!(ab >= lower - 1e-6, "{ab} < oracle {lower}");
    }
}

// ---------- thermal channel solver ----------

fn gibbs_constraints(q: f64, all_inputs: bool) -> ConstraintSet {
    let states = if all_inputs { stabilizer_states() } else { vec![HermitianOperator::identity(2).scaled(0.5)] };
    output_observable_for_states(&pauli::z(), &states, q).unwrap()
}

fn random_reference(seed: u64) -> ReferenceState {
    let bloch = BlochParametrization::new(2);
    let mut r = common::rng(seed);
    use rand::Rng;
    let x: Vec<f64> = (0..3).map(|_| r.random_range(-1.5..1.5)).collect();
    bloch.state(&x).unwrap()
}

proptest! {
    #![proptest_config(cfg(8))]

    #[test]
    fn solved_channels_are_feasible(q in -0.9f64..0.9, cz in -0.6f64..0.6, seed in any::<u64>()) {
        let opts = SolverOptions { seed, restarts: 2, ..SolverOptions::default() };
        for cs in [gibbs_constraints(q, false), thermal_channel::constraints::pauli_correlation_constraints(0.1, -0.2, cz).unwrap()] {
            let th = thermal_channel(&cs, &opts).unwrap();
            for (c, v) in cs.items().iter().zip(cs.items().iter().map(|c| c.op.inner(th.channel.choi()))) {
                prop_assert!((v - c.value).abs() <= 1e-8, "{} vs {}", v, c.value);
            }
            if !th.boundary_flag {
                prop_assert!(th.residuals.entropy_identity <= 1e-5);
                prop_assert!(th.residuals.optimality.unwrap() <= 1e-3, "{:?}", th.residuals);
            }
        }
    }

    #[test]
    fn thermal_channel_is_locally_maximal(q in -0.8f64..0.8, seed in any::<u64>()) {
        let cs = gibbs_constraints(q, false);
        let th = thermal_channel(&cs, &SolverOptions { seed, ..SolverOptions::default() }).unwrap();
        let (s0, _) = channel_entropy(&th.channel, 8, seed).unwrap();
        let basis = feasible_tangent_basis(&cs);
        let mut r = common::rng(seed);
        use rand::Rng;
        let mut tried = 0;
        while tried < 32 {
            let mut delta = HermitianOperator::zeros(4);
            for b in &basis {
                delta = delta.axpy(r.random_range(-1.0..1.0), b);
            }
            let delta = delta.scaled(1.0 / delta.frobenius());
            let jp = th.channel.choi().axpy(0.02, &delta);
            let Ok(ch) = QuantumChannel::new(2, 2, jp) else { continue };
            tried += 1;
            prop_assert!(cs.residual(&ch) <= 1e-9);
            let (s, _) = channel_entropy(&ch, 8, seed).unwrap();
            prop_assert!(s <= s0 + 1e-6, "perturbed entropy {s} > {s0}");
        }
    }

    #[test]
    fn gibbs_family_is_reference_independent(q in -0.9f64..0.9, seed in any::<u64>()) {
        let cs = gibbs_constraints(q, true);
        let base = thermal_given_phi(&cs, &ReferenceState::maximally_mixed(2), 1e-10).unwrap();
        for k in 0..8u64 {
            let phi = random_reference(seed.wrapping_add(k));
            let th = thermal_given_phi(&cs, &phi, 1e-10).unwrap();
            prop_assert!(th.channel.choi().sub(base.channel.choi()).frobenius() <= 1e-5);
            // replacer: S(B|R) = S(σ_B) for every reference
            prop_assert!((th.entropy - base.entropy).abs() <= 1e-5);
        }
    }
}

// ---------- learner ----------

proptest! {
    #![proptest_config(cfg(6))]

    #[test]
    fn update_returns_channel_and_descends(id in 0usize..NUM_OBSERVABLES, s in -1.0f64..1.0, a in 0.0f64..1.0, seed in any::<u64>()) {
        let m = depolarizing(a).unwrap().floored(1e-8);
        let obs = ObservableSpec::from_id(id).unwrap();
        let r = update(&m, &obs, s, 0.15, &UpdateOptions { seed, ..UpdateOptions::default() }).unwrap();
        prop_assert!(is_cptp(r.channel.choi(), 2, 2).unwrap().within(1e-7));
        for w in r.history.windows(2) {
            prop_assert!(w[1] <= w[0], "objective increased {:?}", w);
        }
    }

    #[test]
    fn update_objective_is_convex(s1 in any::<u64>(), s2 in any::<u64>(), id in 0usize..NUM_OBSERVABLES, s in -1.0f64..1.0) {
        let model = depolarizing(0.3).unwrap();
        let obs = ObservableSpec::from_id(id).unwrap();
        let f = UpdateObjective::new(&model, &obs, s, 0.15);
        let a = random_channel(2, 2, 4, s1).unwrap();
        let b = random_channel(2, 2, 4, s2).unwrap();
        let mid = a.mix(&b, 0.5).unwrap();
        let search = ReferenceSearch::new(8, s1);
        let fa = f.evaluate(&a, &search).unwrap().value;
        let fb = f.evaluate(&b, &search).unwrap().value;
        let fm = f.evaluate(&mid, &search).unwrap().value;
        prop_assert!(fm <= 0.5 * (fa + fb) + 1e-7, "{fm} > mean of {fa}, {fb}");
    }

    #[test]
    fn exact_expectations_have_zero_loss(kind in 0u8..5, a in 0.0f64..=1.0, seed in any::<u64>()) {
        let ch = qubit_channel(kind, a, seed);
        for id in 0..NUM_OBSERVABLES {
            let obs = ObservableSpec::from_id(id).unwrap();
            let s = expectation(&ch, &obs).unwrap();
            let f = UpdateObjective::new(&ch, &obs, s, 0.15);
            prop_assert!(f.loss(ch.choi()) <= 1e-24);
        }
    }
}

// ---------- microcanonical lab ----------

proptest! {
    #![proptest_config(cfg(16))]

    #[test]
    fn sample_average_spectrum_within_base(d_b in 1usize..=2, d_r in 1usize..=2, n in 1usize..=3, seed in any::<u64>()) {
        let base = random_hermitian(d_b * d_r, seed);
        let obs = sample_average(&base, d_b, n).unwrap();
        let (lo, hi) = { let e = eigenvalues(&base); (e[0], *e.last().unwrap()) };
        let e = eigenvalues(&obs.operator);
        prop_assert!(e[0] >= lo - 1e-10 && *e.last().unwrap() <= hi + 1e-10);
    }

    #[test]
    fn tail_is_probability_and_monotone(n in 1usize..=3, seed in any::<u64>(), q in -1.0f64..1.0) {
        let ch = random_channel(2, 2, 2, seed).unwrap();
        let base = random_hermitian(4, seed ^ 5).scaled(0.5);
        let sigma = ReferenceState::new(random_state(2, seed ^ 9)).unwrap();
        let obs = sample_average(&base, 2, n).unwrap();
        let ch_n = NCopyChannel::iid(ch.clone(), n).unwrap();
        let dense = NCopyChannel::explicit(ch.tensor_power(n).unwrap(), n, 2, 2).unwrap();
        let mut last = f64::INFINITY;
        for k in 0..8 {
            let eta = 0.25 * k as f64;
            let wp = window(&obs, q, eta).unwrap();
            let t = tail_probability(&dense, &sigma, &wp).unwrap();
            prop_assert!((0.0..=1.0).contains(&t));
            prop_assert!(t <= last + 1e-12);
            last = t;
            let ti = tail_probability(&ch_n, &sigma, &wp).unwrap();
            prop_assert!((t - ti).abs() <= 1e-9, "dense {t} vs iid {ti}");
        }
    }

    #[test]
    fn commuting_tails_match_multinomial(p0 in 0.05f64..0.95, r0 in 0.05f64..0.95, n in 1usize..=4, q in -1.0f64..1.0, eta in 0.0f64..1.0) {
        // replacer onto diag(p0, 1 − p0), reference diag(r0, 1 − r0), base Z ⊗ 1:
        // each copy gives ±1 with probabilities p0, 1 − p0
        let out = HermitianOperator::from_real_diagonal(&[p0, 1.0 - p0]);
        let ch = QuantumChannel::new(2, 2, out.kron(&HermitianOperator::identity(2))).unwrap();
        let sigma = ReferenceState::new(HermitianOperator::from_real_diagonal(&[r0, 1.0 - r0])).unwrap();
        let base = pauli::z().kron(&HermitianOperator::identity(2));
        let wp = window(&sample_average(&base, 2, n).unwrap(), q, eta).unwrap();
        let dense = NCopyChannel::explicit(ch.tensor_power(n).unwrap(), n, 2, 2).unwrap();
        let t = tail_probability(&dense, &sigma, &wp).unwrap();
        let oracle: f64 = (0..=n)
            .filter(|&k| {
                let mean = (2.0 * k as f64 - n as f64) / n as f64;
                (mean - q).abs() > eta + 1e-9
            })
            .map(|k| common::binomial(n, k) * p0.powi(k as i32) * (1.0 - p0).powi((n - k) as i32))
            .sum();
        prop_assert!((t - oracle).abs() <= 1e-10, "{t} vs {oracle}");
    }
}

#[test]
fn von_neumann_matches_test_oracle() {
    for seed in 0..10 {
        let rho = random_state(3, seed);
        assert!((von_neumann(&rho).unwrap() - common::von_neumann(&rho)).abs() < 1e-12);
    }
}
