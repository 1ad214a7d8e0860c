use hpe_accel::ahpe::{
    check_error_criterion, compute_a_next, run_ahpe, x_tilde_weights, InexactTriple, LambdaPolicy, MethodConfig,
    SolverState, Stopping,
};
use hpe_accel::certificates::{verify_trace, wolfe_closed_forms, MethodKind, VerifyContext};
use hpe_accel::problem::{make_quadratic, soft_threshold};
use hpe_accel::proxgrad::{compute_lambda_pg, lambda_identity_residual};
use hpe_accel::subproblem::SubproblemSolver;
use hpe_accel::Vector;
use proptest::prelude::*;

fn vec_strategy(n: usize) -> impl Strategy<Value = Vector> {
    prop::collection::vec(-5.0..5.0f64, n).prop_map(Vector::from_vec)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn a_next_solves_its_quadratic(a_sum in 0.0..1e4f64, lambda in 1e-3..1e3f64, mu in 0.0..10.0f64) {
        let a = compute_a_next(a_sum, lambda, mu).unwrap();
        prop_assert!(a > 0.0);
        let res = a * a - (1.0 + 2.0 * mu * a_sum) * lambda * a - (1.0 + mu * a_sum) * a_sum * lambda;
        prop_assert!(res.abs() <= 1e-10 * (a * a).max(1.0));
    }

    #[test]
    fn x_tilde_weights_are_convex(a_sum in 0.0..1e4f64, lambda in 1e-3..1e3f64, mu in 0.0..10.0f64) {
        let a = compute_a_next(a_sum, lambda, mu).unwrap();
        let (wx, wy) = x_tilde_weights(a_sum, a, lambda, mu).unwrap();
        prop_assert!((0.0..=1.0).contains(&wx) && (0.0..=1.0).contains(&wy));
        prop_assert!((wx + wy - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn wolfe_minimum_is_global(
        v in vec_strategy(3), y in vec_strategy(3), z in vec_strategy(3), x in vec_strategy(3),
        mu in 0.0..3.0f64, lambda in 0.05..5.0f64, eps in 0.0..2.0f64,
    ) {
        let w = wolfe_closed_forms(&v, &y, &z, mu, eps, lambda);
        let at_min = w.q(&w.minimizer);
        prop_assert!((at_min - w.min_value).abs() <= 1e-9 * (1.0 + w.min_value.abs()));
        prop_assert!(w.q(&x) >= w.min_value - 1e-9 * (1.0 + w.min_value.abs()));
    }

    #[test]
    fn pg_stepsize_identity(sigma_u in 0.01..0.999f64, mu in 1e-4..1.0f64, ratio in 1.0..1e4f64) {
        let lip = mu * ratio;
        let lambda = compute_lambda_pg(sigma_u, mu, lip);
        prop_assert!(lambda > 0.0);
        prop_assert!(lambda_identity_residual(lambda, sigma_u, mu, lip) <= 1e-12);
    }

    #[test]
    fn soft_threshold_shrinks_toward_zero(x in vec_strategy(6), t in 0.0..3.0f64) {
        let s = soft_threshold(&x, t);
        for (si, xi) in s.iter().zip(x.iter()) {
            prop_assert!(si.abs() <= xi.abs());
            prop_assert!((xi - si).abs() <= t + 1e-15);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn exact_resolvent_is_always_accepted(seed in 0u64..1000, x in vec_strategy(6), lambda in 0.01..100.0f64, sigma in 0.0..0.99f64) {
        let p = make_quadratic(6, 0.1, 2.0, seed).unwrap();
        let mut y = x.clone();
        // exact resolvent by fixed-point iteration on y = x - lambda grad g(y)
        let step = 1.0 / (2.0 + 1.0 / lambda);
        for _ in 0..5000 {
            let grad = p.g_grad(&y) + (&y - &x) / lambda;
            y -= grad * step;
        }
        let v = (&x - &y) / lambda;
        let triple = InexactTriple::new(y, v, 0.0, lambda, &x, p.mu());
        prop_assert!(check_error_criterion(&triple, &x, p.mu(), sigma, &p).accepted);
    }

    #[test]
    fn random_schedules_certify(seed in 0u64..1000, lambdas in prop::collection::vec(0.05..20.0f64, 1..8)) {
        let p = make_quadratic(8, 0.02, 1.0, seed).unwrap();
        let cfg = MethodConfig::new(0.0, LambdaPolicy::Schedule(lambdas), Stopping::max_iter(40));
        let t = run_ahpe(&p, &SubproblemSolver::ExactStructured, &cfg, SolverState::initial(Vector::from_element(8, 1.0), None)).unwrap();
        let b = verify_trace(&t, &p, &VerifyContext { sigma: 0.0, method: MethodKind::Ahpe });
        prop_assert!(b.passed(), "failing: {:?}", b.failing());
    }
}
