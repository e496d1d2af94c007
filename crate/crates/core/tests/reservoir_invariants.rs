use mqrc::cv::{self, CovarianceMatrix, CvConfig, CvCouplings, CvReservoir};
use mqrc::dv::{DensityMatrix, DvConfig, DvReservoir, Integrator};
use mqrc::numerics::{lyapunov_solve, mat_exp, Prng, RealMatrix, Stream};
use mqrc::{EncodingMethod, EncodingSpec, Hyperparams, Reservoir, ReservoirSpec, SystemKind, Table};
use proptest::prelude::*;

fn inputs(seed: u64, steps: usize, d: usize) -> Table {
    mqrc::tasks::uniform_streams(seed, d, steps).unwrap()
}

fn dv(n: usize, coupling: f64, gamma: f64, method: EncodingMethod, eps: f64, seed: u64) -> DvReservoir {
    let enc = EncodingSpec::build(method, &mut Prng::new(seed, Stream::InputWeights), n, 2, eps).unwrap();
    DvReservoir::random(DvConfig::new(n, coupling, gamma), &mut Prng::new(seed, Stream::Couplings), enc).unwrap()
}

fn cv_res(n: usize, coupling: f64, gamma: f64, method: EncodingMethod, eps: f64, seed: u64) -> CvReservoir {
    let enc = EncodingSpec::build(method, &mut Prng::new(seed, Stream::InputWeights), n, 2, eps).unwrap();
    CvReservoir::random(CvConfig::new(n, coupling, gamma), &mut Prng::new(seed, Stream::Couplings), enc).unwrap()
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn spin_runs_forget_the_initial_state() {
    for gamma in [1.0, 5.0] {
        let r = dv(3, 1.0, gamma, EncodingMethod::Global, 0.5, 11);
        let u = inputs(4, 1100, 2);
        let a = r.run_from(DensityMatrix::all_down(3), &u, |_, _| Ok(())).unwrap();
        let b = r.run_from(DensityMatrix::maximally_mixed(3), &u, |_, _| Ok(())).unwrap();
        for t in 1000..1100 {
            assert!(max_diff(a.row(t), b.row(t)) < 1e-6, "gamma={gamma} t={t}");
        }
    }
}

#[test]
fn oscillator_runs_forget_the_initial_state() {
    for gamma in [0.1, 1.0] {
        let r = cv_res(3, 0.5, gamma, EncodingMethod::Local, 0.5, 2);
        let u = inputs(5, 1100, 2);
        let a = r.run_from(CovarianceMatrix::vacuum(3), &u, |_, _| Ok(())).unwrap();
        let hot = CovarianceMatrix::from_matrix(RealMatrix::identity(6, 6) * 2.0).unwrap();
        let b = r.run_from(hot, &u, |_, _| Ok(())).unwrap();
        for t in 1000..1100 {
            assert!(max_diff(a.row(t), b.row(t)) < 1e-8, "gamma={gamma} t={t}");
        }
    }
}

/// Perturbing stream `j` leaves the features of the node driven by stream
/// `i != j` untouched when nothing couples the nodes.
#[test]
fn uncoupled_local_nodes_only_see_their_own_stream() {
    let n = 3;
    let u = inputs(6, 200, 2);
    let mut p = Prng::new(9, Stream::Signals);
    let perturbed: Vec<f64> = (0..200).flat_map(|t| [u.get(t, 0), p.uniform(-1.0, 1.0).unwrap()]).collect();
    let v = Table::from_vec(200, 2, perturbed).unwrap();

    let spins = dv(n, 0.0, 1.0, EncodingMethod::Local, 0.7, 3);
    let (a, b) = (spins.run(&u).unwrap(), spins.run(&v).unwrap());
    for t in 0..200 {
        // node 0 features are columns 0..3
        assert!(max_diff(&a.row(t)[..3], &b.row(t)[..3]) < 1e-10);
    }
    assert!(max_diff(a.as_slice(), b.as_slice()) > 1e-3, "the perturbation must reach node 1");

    let modes = cv_res(n, 0.0, 1.0, EncodingMethod::Local, 0.7, 3);
    let (a, b) = (modes.run(&u).unwrap(), modes.run(&v).unwrap());
    for t in 0..200 {
        // <q0 q0> is column 0; cross terms stay at zero
        assert!((a.get(t, 0) - b.get(t, 0)).abs() < 1e-10);
        assert!(a.get(t, 1).abs() < 1e-12 && a.get(t, 2).abs() < 1e-12);
    }
    assert!(max_diff(a.as_slice(), b.as_slice()) > 1e-6);
}

#[test]
fn half_steps_compose_to_a_full_step() {
    let mut p = Prng::new(21, Stream::Custom(3));
    for _ in 0..5 {
        let c = CvCouplings::random(&mut p, 3, 1.5);
        let omega: Vec<f64> = (0..3).map(|_| p.uniform(0.2, 1.8).unwrap()).collect();
        let m = cv::hamiltonian_matrix(&c, &omega).unwrap();
        let (a, d) = cv::drift_and_diffusion(&m, 0.7).unwrap();
        let s0 = CovarianceMatrix::vacuum(3);
        let full = cv::step_exact(&s0, &a, &d, 1.0).unwrap();
        let half = cv::step_exact(&cv::step_exact(&s0, &a, &d, 0.5).unwrap(), &a, &d, 0.5).unwrap();
        assert!((full.matrix() - half.matrix()).amax() < 1e-10);
    }
}

#[test]
fn modulated_frequency_squeezes_the_vacuum() {
    let enc = EncodingSpec::build_local(1, 1, 0.5).unwrap();
    let r = CvReservoir::new(CvConfig::new(1, 0.0, 1.0), CvCouplings::zeros(1), enc).unwrap();
    let mut lam = f64::NAN;
    r.run_from(CovarianceMatrix::vacuum(1), &Table::from_vec(1, 1, vec![1.0]).unwrap(), |_, s| {
        lam = mqrc::numerics::symmetric_eigenvalues(s.matrix())?[0];
        Ok(())
    })
    .unwrap();
    assert!(lam < 0.5 - 1e-6, "{lam}");
}

/// Strong modulation with weak damping heats the oscillators without bound;
/// the run must stop instead of returning meaningless features.
#[test]
fn runaway_parametric_heating_is_reported() {
    let u = inputs(2, 1000, 2);
    let hot = cv_res(4, 2.0, 0.01, EncodingMethod::Global, 1.0, 3);
    match hot.run(&u) {
        Err(mqrc::Error::Heating { peak, .. }) => assert!(peak > cv::MAX_COVARIANCE),
        other => panic!("expected a heating error, got {other:?}"),
    }
    let calm = cv_res(4, 2.0, 0.01, EncodingMethod::Global, 0.1, 3);
    calm.run(&u).unwrap();
}

#[test]
fn realizations_are_shared_across_hyperparameters() {
    let spec = ReservoirSpec { system: SystemKind::Dv, encoding: EncodingMethod::Global, n: 3, input_dim: 2 };
    let p1 = Hyperparams { coupling: 1.0, epsilon: 0.5, gamma: 1.0 };
    let p2 = Hyperparams { coupling: 1.0, epsilon: 0.1, gamma: 3.0 };
    let (mqrc::AnyReservoir::Dv(a), mqrc::AnyReservoir::Dv(b)) =
        (spec.instantiate(p1, 5, 2).unwrap(), spec.instantiate(p2, 5, 2).unwrap())
    else {
        panic!("spin spec built another system");
    };
    assert_eq!(a.couplings, b.couplings);
    for i in 0..3 {
        assert_eq!(a.encoding.weight_row(i), b.encoding.weight_row(i));
    }
    let u = inputs(1, 50, 2);
    let a1 = spec.instantiate(p1, 5, 2).unwrap().run(&u).unwrap();
    assert_eq!(a1, spec.instantiate(p1, 5, 2).unwrap().run(&u).unwrap());
    assert_ne!(a1, spec.instantiate(p1, 5, 3).unwrap().run(&u).unwrap());
}

#[test]
fn exponential_inverse_and_symmetric_lyapunov() {
    let mut p = Prng::new(2, Stream::Custom(5));
    for _ in 0..10 {
        let a = RealMatrix::from_fn(4, 4, |_, _| p.uniform(-1.0, 1.0).unwrap());
        let t = 1.0;
        let prod = mat_exp(&a, t).unwrap() * mat_exp(&a, -t).unwrap();
        assert!((prod - RealMatrix::identity(4, 4)).amax() < 1e-10);
        let stable = &a - RealMatrix::identity(4, 4) * 5.0;
        let q = RealMatrix::identity(4, 4);
        let x = lyapunov_solve(&stable, &q).unwrap();
        assert!((&x - x.transpose()).amax() < 1e-12);
    }
}

fn method() -> impl Strategy<Value = EncodingMethod> {
    prop_oneof![Just(EncodingMethod::Local), Just(EncodingMethod::Clustered), Just(EncodingMethod::Global)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn spin_states_stay_physical_and_features_bounded(
        n in 2usize..=3,
        log_j in -2.0f64..1.0,
        log_g in -2.0f64..2.0,
        eps in 0.01f64..1.0,
        m in method(),
        seed in 0u64..1000,
        rk4 in any::<bool>(),
    ) {
        let mut r = dv(n, 10f64.powf(log_j), 10f64.powf(log_g), m, eps, seed);
        if rk4 {
            r.config.integrator = Integrator::Rk4;
        }
        let out = r.run_from(DensityMatrix::all_down(n), &inputs(seed, 25, 2), |_, rho| {
            rho.check_valid(1e-8, 1e-10, 1e-8)
        }).unwrap();
        prop_assert!(out.as_slice().iter().all(|v| (-1.0 - 1e-12..=1.0 + 1e-12).contains(v)));
    }

    #[test]
    fn oscillator_states_stay_physical(
        n in 2usize..=4,
        log_j in -3.0f64..1.0,
        log_g in -2.0f64..2.0,
        eps in 0.01f64..1.0,
        m in method(),
        seed in 0u64..1000,
    ) {
        let r = cv_res(n, 10f64.powf(log_j), 10f64.powf(log_g), m, eps, seed);
        let run = r.run_from(CovarianceMatrix::vacuum(n), &inputs(seed, 40, 2), |_, s| {
            let ev = s.uncertainty_min_eigenvalue()?;
            assert!(ev >= -1e-8, "{ev}");
            Ok(())
        });
        // every state up to a heating stop was checked above
        prop_assert!(matches!(run, Ok(_) | Err(mqrc::Error::Heating { .. })), "{run:?}");
    }
}
