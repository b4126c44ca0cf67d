use proptest::prelude::*;
use riccati_core::floquet::{c_matrix, e_difference, flow, flow_difference, transition, transition_two_time};
use riccati_core::gramian::gramian_at;
use riccati_core::oracle::scalar_analytic;
use riccati_core::spectral::{expm, lambda_min, log_norm, norm2, spectral_abscissa, sqrt_psd};
use riccati_core::steady_state::steady_state;
use riccati_core::{random, Mat, ModelTriple, SteadyState, Tolerances};

fn setup(seed: u64, r: usize) -> (SteadyState, Mat, Mat) {
    let tol = Tolerances::default();
    let mut g = random::rng(seed);
    let model = random::random_model(&mut g, r, &tol).unwrap();
    let q1 = random::random_psd(&mut g, r, 1.0);
    let q2 = random::random_psd(&mut g, r, 1.0);
    (steady_state(&model, &tol).unwrap(), q1, q2)
}

fn gap(x: &Mat, y: &Mat) -> f64 {
    norm2(&(x - y)) / (1.0 + norm2(y))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn abscissa_below_log_norm(seed in any::<u64>(), r in 1usize..7) {
        let m = random::uniform_matrix(&mut random::rng(seed), r, r);
        prop_assert!(spectral_abscissa(&m).unwrap() <= log_norm(&m).unwrap() + 1e-12);
    }

    #[test]
    fn expm_is_a_semigroup(seed in any::<u64>(), r in 1usize..7, s in 0.0f64..3.0, t in 0.0f64..3.0) {
        let m = random::uniform_matrix(&mut random::rng(seed), r, r);
        let lhs = expm(&m, s + t).unwrap();
        let rhs = expm(&m, s).unwrap() * expm(&m, t).unwrap();
        prop_assert!(gap(&lhs, &rhs) < 1e-11);
    }

    #[test]
    fn psd_square_root_squares_back(seed in any::<u64>(), r in 1usize..7) {
        let m = random::random_psd(&mut random::rng(seed), r, 1.0);
        let root = sqrt_psd(&m, &Tolerances::default()).unwrap();
        prop_assert!(gap(&(&root * &root), &m) < 1e-10);
        prop_assert!(lambda_min(&root) > -1e-10);
    }

    #[test]
    fn scalar_closed_form_matches_analytic(
        a in -2.0f64..2.0, r in 0.1f64..3.0, s in 0.1f64..3.0, q in 0.0f64..4.0, t in 0.0f64..5.0,
    ) {
        let st = steady_state(&ModelTriple::scalar(a, r, s), &Tolerances::default()).unwrap();
        let qm = Mat::from_element(1, 1, q);
        let (phi, e) = scalar_analytic(a, r, s, q, t).unwrap();
        prop_assert!((flow(&st, &qm, t).unwrap()[(0, 0)] - phi).abs() < 1e-9 * (1.0 + phi.abs()));
        prop_assert!((transition(&st, &qm, t).unwrap()[(0, 0)] - e).abs() < 1e-9 * (1.0 + e.abs()));
    }

    #[test]
    fn flow_polarization_identity(seed in any::<u64>(), r in 1usize..6, t in 0.0f64..6.0) {
        let (st, q1, q2) = setup(seed, r);
        let direct = flow(&st, &q1, t).unwrap() - flow(&st, &q2, t).unwrap();
        let d = flow_difference(&st, &q1, &q2, t).unwrap();
        prop_assert!(norm2(&(direct - &d)) < 1e-9 * (1.0 + norm2(&q1).max(norm2(&q2))));
    }

    #[test]
    fn transition_difference_identity(seed in any::<u64>(), r in 1usize..6, t in 0.0f64..6.0) {
        let (st, q1, q2) = setup(seed, r);
        let direct = transition(&st, &q1, t).unwrap() - transition(&st, &q2, t).unwrap();
        let d = e_difference(&st, &q1, &q2, t).unwrap();
        prop_assert!(norm2(&(direct - &d)) < 1e-9 * (1.0 + norm2(&d)));
    }

    #[test]
    fn flow_is_a_semigroup(seed in any::<u64>(), r in 1usize..6, s in 0.0f64..3.0, t in 0.0f64..3.0) {
        let (st, q, _) = setup(seed, r);
        let lhs = flow(&st, &q, s + t).unwrap();
        let rhs = flow(&st, &flow(&st, &q, s).unwrap(), t).unwrap();
        prop_assert!(gap(&lhs, &rhs) < 1e-9);
    }

    #[test]
    fn two_time_transitions_compose(seed in any::<u64>(), r in 1usize..6, s in 0.0f64..2.0, u in 0.0f64..2.0, v in 0.0f64..2.0) {
        let (st, q, _) = setup(seed, r);
        let (t1, t2) = (s + u, s + u + v);
        let lhs = transition_two_time(&st, &q, s, t2).unwrap();
        let rhs = transition_two_time(&st, &q, t1, t2).unwrap() * transition_two_time(&st, &q, s, t1).unwrap();
        prop_assert!(gap(&lhs, &rhs) < 1e-9);
    }

    #[test]
    fn c_inverse_is_an_inverse(seed in any::<u64>(), r in 1usize..6, t in 0.0f64..8.0) {
        let (st, q, _) = setup(seed, r);
        let f = c_matrix(&st, &q, t).unwrap();
        let id = Mat::identity(r, r);
        prop_assert!(norm2(&(&f.c * &f.c_inv - id)) < 1e-10 * f.cond_c.max(1.0));
    }

    #[test]
    fn flow_stays_psd(seed in any::<u64>(), r in 1usize..6, t in 0.0f64..8.0) {
        let (st, q, _) = setup(seed, r);
        let phi = flow(&st, &q, t).unwrap();
        prop_assert!(lambda_min(&phi) >= -1e-10 * (1.0 + norm2(&phi)));
    }

    #[test]
    fn gramian_is_loewner_monotone(seed in any::<u64>(), r in 1usize..6, s in 0.0f64..4.0, dt in 0.0f64..4.0) {
        let (st, _, _) = setup(seed, r);
        let a = gramian_at(&st.b, &st.model.s, s).unwrap().s_t;
        let b = gramian_at(&st.b, &st.model.s, s + dt).unwrap().s_t;
        prop_assert!(lambda_min(&(&b - &a)) >= -1e-10 * (1.0 + norm2(&st.s_inf)));
        prop_assert!(lambda_min(&(&st.s_inf - &b)) >= -1e-10 * (1.0 + norm2(&st.s_inf)));
    }
}
