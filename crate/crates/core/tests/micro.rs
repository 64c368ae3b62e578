mod common;

use thermal_channel::channel::{completely_depolarizing, random_channel, QuantumChannel, ReferenceState};
use thermal_channel::constraints::{output_observable_constraint, ConstraintSet};
use thermal_channel::linalg::{pauli, permute_subsystems, HermitianOperator};
use thermal_channel::micro::{
    iid_concentration_experiment, iid_tail, marginal_bound, measured_leakage, reduced_marginal_check, sample_average,
    scaled_observable, tail_probability, window, NCopyChannel, ParamSchedule,
};
use thermal_channel::solver::{thermal_channel, SolverOptions, ThermalSolution};
use thermal_channel::Error;

fn gibbs_instance() -> (ConstraintSet, ThermalSolution) {
    let half = HermitianOperator::identity(2).scaled(0.5);
    let cs = output_observable_constraint(&pauli::z(), &half, -(1f64).tanh()).unwrap();
    let th = thermal_channel(&cs, &SolverOptions { seed: 3, ..SolverOptions::default() }).unwrap();
    (cs, th)
}

#[test]
fn scaled_observable_explicit_matrix() {
    let sigma = ReferenceState::new(HermitianOperator::from_real_diagonal(&[0.9, 0.1])).unwrap();
    let c = pauli::z().kron(&pauli::z().transpose());
    let h = scaled_observable(&c, &sigma, 0.05).unwrap();
    let expected = HermitianOperator::from_real_diagonal(&[1.0 / 0.9, -10.0, -1.0 / 0.9, 10.0]);
    assert!(h.max_abs_diff(&expected) < 1e-12);
    match scaled_observable(&c, &sigma, 0.2) {
        Err(Error::EigenvalueBelowFloor { floor, .. }) => assert_eq!(floor, 0.2),
        other => panic!("{other:?}"),
    }
}

#[test]
fn scaled_observable_expectation_identity() {
    for seed in 0..10 {
        let ch = random_channel(2, 3, 2, seed).unwrap();
        let sigma = ReferenceState::new(common::random_state(2, seed + 100)).unwrap();
        let c = common::random_hermitian(6, seed + 200);
        let h = scaled_observable(&c, &sigma, 1e-6).unwrap();
        let lhs = h.inner(&ch.apply_with_reference(&sigma).unwrap());
        let rhs = c.inner(ch.choi());
        assert!((lhs - rhs).abs() < 1e-10, "{lhs} vs {rhs}");
    }
}

#[test]
fn sample_average_n1_is_base() {
    let base = common::random_hermitian(4, 1);
    assert!(sample_average(&base, 2, 1).unwrap().operator.max_abs_diff(&base) < 1e-14);
}

#[test]
fn replacer_tails_match_binomial() {
    let (cs, th) = gibbs_instance();
    let sigma = ReferenceState::maximally_mixed(2);
    let c = &cs.items()[0];
    let h = scaled_observable(&c.op, &sigma, 0.3).unwrap();
    // single-copy outcome +1 with probability (1 + q)/2
    let p = 0.5 * (1.0 + c.value);
    for n in 1..=5 {
        let obs = sample_average(&h, 2, n).unwrap();
        let dense = NCopyChannel::explicit(th.channel.tensor_power(n).unwrap(), n, 2, 2).unwrap();
        for eta in [0.1, 0.3, 0.7, 1.0, 1.5] {
            let oracle: f64 = (0..=n)
                .filter(|&k| ((2.0 * k as f64 - n as f64) / n as f64 - c.value).abs() > eta + 1e-9)
                .map(|k| common::binomial(n, k) * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32))
                .sum();
            let wp = window(&obs, c.value, eta).unwrap();
            let t_dense = tail_probability(&dense, &sigma, &wp).unwrap();
            let t_iid = iid_tail(&th.channel, &sigma, &h, n, c.value, eta).unwrap();
            assert!((t_dense - oracle).abs() <= 1e-10, "n={n} η={eta}: {t_dense} vs {oracle}");
            assert!((t_iid - oracle).abs() <= 1e-10, "n={n} η={eta}: {t_iid} vs {oracle}");
        }
    }
}

#[test]
fn window_covering_spectrum_has_zero_tail() {
    let ch = random_channel(2, 2, 2, 4).unwrap();
    let base = common::random_hermitian(4, 5);
    let radius = common::eigenvalues(&base).iter().map(|l| l.abs()).fold(0.0, f64::max);
    let sigma = ReferenceState::new(common::random_state(2, 6)).unwrap();
    for n in 1..=3 {
        let wp = window(&sample_average(&base, 2, n).unwrap(), 0.0, radius).unwrap();
        let dense = NCopyChannel::explicit(ch.tensor_power(n).unwrap(), n, 2, 2).unwrap();
        assert_eq!(tail_probability(&dense, &sigma, &wp).unwrap(), 0.0);
    }
}

#[test]
fn single_copy_tail_is_spectral_sum() {
    for seed in 0..8 {
        let ch = random_channel(2, 2, 2, seed).unwrap();
        let sigma = ReferenceState::new(common::random_state(2, seed + 50)).unwrap();
        let base = common::random_hermitian(4, seed + 60);
        let tau = ch.apply_with_reference(&sigma).unwrap();
        let mean = base.inner(&tau);
        let eta = 0.5;
        // centre the window so that it excludes the exact expectation
        let q = mean + 0.8;
        let e = base.matrix().clone().symmetric_eigen();
        let mut oracle = 0.0;
        for k in 0..4 {
            if (e.eigenvalues[k] - q).abs() > eta {
                let v = e.eigenvectors.column(k);
                oracle += (v.adjoint() * tau.matrix() * v)[(0, 0)].re;
            }
        }
        let wp = window(&sample_average(&base, 2, 1).unwrap(), q, eta).unwrap();
        let t = tail_probability(&NCopyChannel::iid(ch.clone(), 1).unwrap(), &sigma, &wp).unwrap();
        let dense = tail_probability(&NCopyChannel::explicit(ch, 1, 2, 2).unwrap(), &sigma, &wp).unwrap();
        assert!((t - oracle).abs() < 1e-10 && (dense - oracle).abs() < 1e-10, "{t} {dense} {oracle}");
    }
}

#[test]
fn replacer_tails_strictly_decrease_for_wide_window() {
    let (cs, th) = gibbs_instance();
    let sigmas = [ReferenceState::maximally_mixed(2)];
    let table = iid_concentration_experiment(
        &th,
        &cs,
        &sigmas,
        &[1, 2, 3, 4, 5],
        &ParamSchedule::Fixed { eta: 1.5, y: 0.3, nu: 1.5 },
    )
    .unwrap();
    let p = 0.5 * (1.0 - (1f64).tanh());
    for (k, r) in table.rows.iter().enumerate() {
        // only the all-(+1) outcome leaves [q − 1.5, q + 1.5]
        assert!((r.tail - p.powi(r.n as i32)).abs() < 1e-12);
        if k > 0 {
            assert!(r.tail < table.rows[k - 1].tail);
        }
    }
    assert!(table.rows[0].fitted_slope < 0.0);
    table.check_slopes().unwrap();
}

#[test]
fn doubling_eta_shrinks_tails() {
    let (cs, th) = gibbs_instance();
    let sigmas = [ReferenceState::maximally_mixed(2), th.phi.clone()];
    let ns = [1, 2, 3, 4, 5, 8, 12];
    for eta in [0.1, 0.25, 0.4] {
        let a = iid_concentration_experiment(&th, &cs, &sigmas, &ns, &ParamSchedule::Fixed { eta, y: 0.3, nu: 1.5 })
            .unwrap();
        let b = iid_concentration_experiment(
            &th,
            &cs,
            &sigmas,
            &ns,
            &ParamSchedule::Fixed { eta: 2.0 * eta, y: 0.3, nu: 1.5 },
        )
        .unwrap();
        for (x, y) in a.rows.iter().zip(&b.rows) {
            assert!(y.tail <= x.tail + 1e-15, "η={eta}, n={}: {} > {}", x.n, y.tail, x.tail);
        }
    }
}

#[test]
fn regime_schedule_gives_negative_slope() {
    let (cs, th) = gibbs_instance();
    let sigmas = [ReferenceState::maximally_mixed(2)];
    let table = iid_concentration_experiment(
        &th,
        &cs,
        &sigmas,
        &[1, 2, 3, 4, 5],
        &ParamSchedule::Regime { gamma: 0.05, c_min: 0.5 },
    )
    .unwrap();
    assert!(table.rows[0].fitted_slope < 0.0, "{:?}", table.rows);
    let csv = table.to_csv(&[]);
    assert!(csv.lines().any(|l| l == "j,sigma_id,n,eta,y,tail,fitted_slope"));
}

fn copy_permuted(ch: &QuantumChannel, n: usize, perm: &[usize]) -> QuantumChannel {
    // relabel copies on both the B block and the R block
    let dims = vec![2; 2 * n];
    let full: Vec<usize> = perm.iter().copied().chain(perm.iter().map(|p| p + n)).collect();
    let m = permute_subsystems(ch.choi().matrix(), &dims, &full).unwrap();
    QuantumChannel::new(ch.d_in(), ch.d_out(), HermitianOperator::hermitian_part(&m)).unwrap()
}

#[test]
fn marginal_of_tensor_power_is_thermal() {
    let (_, th) = gibbs_instance();
    for seed in 0..4 {
        let phi = ReferenceState::new(common::random_state(2, seed)).unwrap();
        for n in 1..=3 {
            let explicit = NCopyChannel::explicit(th.channel.tensor_power(n).unwrap(), n, 2, 2).unwrap();
            assert!(reduced_marginal_check(&explicit, &phi, &th).unwrap().abs() <= 1e-9);
            let iid = NCopyChannel::iid(th.channel.clone(), n).unwrap();
            assert!(reduced_marginal_check(&iid, &phi, &th).unwrap().abs() <= 1e-9);
            // copies relabelled by a cyclic shift
            let perm: Vec<usize> = (0..n).map(|i| (i + 1) % n).collect();
            let shifted = copy_permuted(&th.channel.tensor_power(n).unwrap(), n, &perm);
            let permuted = NCopyChannel::explicit(shifted, n, 2, 2).unwrap();
            assert!(reduced_marginal_check(&permuted, &phi, &th).unwrap().abs() <= 1e-9);
        }
    }
}

#[test]
fn perturbed_mixture_respects_bound() {
    let (cs, th) = gibbs_instance();
    let eps = 0.01;
    let sigmas = [ReferenceState::maximally_mixed(2), th.phi.clone()];
    for n in 1..=5 {
        let mix = NCopyChannel::mixture(vec![
            (1.0 - eps, NCopyChannel::iid(th.channel.clone(), n).unwrap()),
            (eps, NCopyChannel::iid(completely_depolarizing(2, 2), n).unwrap()),
        ])
        .unwrap();
        let value = reduced_marginal_check(&mix, &th.phi, &th).unwrap();
        let params = ParamSchedule::Regime { gamma: 0.05, c_min: 0.5 }.at(n, 2).unwrap();
        let leak = measured_leakage(&mix, &cs, &sigmas, &params).unwrap();
        let bound = marginal_bound(&th, &cs, params.eta, leak, params.y).unwrap();
        assert!(value > 0.0 && value <= bound, "n={n}: {value} vs bound {bound}");
    }
}

#[test]
fn dense_cap_is_enforced() {
    let base = pauli::z().kron(&HermitianOperator::identity(2));
    assert!(matches!(sample_average(&base, 2, 7), Err(Error::DimensionCap { .. })));
}
