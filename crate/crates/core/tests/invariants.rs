use approx::assert_relative_eq;
use laminate_hum::prelude::*;
use nalgebra::DVector;
use proptest::prelude::*;

fn system(n: usize, p: &PhysicalParams) -> DiscreteSystem {
    assemble(p, &Grid::new(n, p.length).unwrap()).unwrap()
}

fn params() -> impl Strategy<Value = PhysicalParams> {
    (0.5f64..2.0, 0.5f64..2.0, 0.5f64..2.0, 0.5f64..2.0, 0.1f64..3.0, 0.5f64..2.0).prop_map(
        |(rho1, rho2, k, b, gamma, length)| PhysicalParams {
            rho1,
            rho2,
            k,
            b,
            gamma,
            beta: 0.0,
            length,
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn energy_is_conserved_for_any_parameters(p in params(), coords in prop::collection::vec(-1.0f64..1.0, 8)) {
        let sys = system(8, &p);
        let f = ModalFilter::new(&sys, 4).unwrap();
        let u0 = f.from_coordinates(&DVector::from_vec(coords));
        prop_assume!(sys.energy(&u0) > 1e-6);
        let traj = solve_homogeneous(&sys, &u0, &TimeGrid::new(2.0, 200).unwrap()).unwrap();
        prop_assert!(traj.energy_drift() <= 1e-12);
    }

    #[test]
    fn generator_is_skew_in_energy_metric(p in params(), seed in 0u64..1000) {
        let sys = system(6, &p);
        let f = ModalFilter::new(&sys, sys.dofs()).unwrap();
        let u = f.random_state(&mut laminate_hum::observability::sample_rng(seed, 0));
        let z = f.random_state(&mut laminate_hum::observability::sample_rng(seed, 1));
        let (au, az) = (apply_a(&sys, &u), apply_a(&sys, &z));
        let s = sys.energy_inner(&au, &z) + sys.energy_inner(&u, &az);
        prop_assert!(s.abs() <= 1e-12 * sys.energy_norm(&au) * sys.energy_norm(&z));
    }

    #[test]
    fn damping_never_adds_energy(beta in 0.01f64..5.0, seed in 0u64..1000) {
        let p = PhysicalParams { beta, ..PhysicalParams::default() };
        let sys = system(8, &p);
        let f = ModalFilter::new(&sys, sys.dofs()).unwrap();
        let u0 = f.random_state(&mut laminate_hum::observability::sample_rng(seed, 0));
        let traj = solve_damped(&sys, &u0, &TimeGrid::new(1.0, 100).unwrap()).unwrap();
        prop_assert!(traj.energy.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn hansen_spies_round_trip(rho in 0.5f64..2.0, i_rho in 0.5f64..2.0, g in 0.5f64..2.0, d in 0.5f64..2.0, delta0 in 0.1f64..2.0) {
        let hs = HansenSpiesParams { rho, i_rho, g, d, delta0, gamma0: 0.0, length: 1.0 };
        let p = from_hansen_spies(&hs).unwrap();
        let back = laminate_hum::model::to_hansen_spies(&p).unwrap();
        prop_assert!((back.rho - rho).abs() <= 1e-12 * rho);
        prop_assert!((back.d - d).abs() <= 1e-12 * d);
        prop_assert!((back.delta0 - delta0).abs() <= 1e-12 * delta0);
    }
}

#[test]
fn controlled_run_is_linear() {
    let p = PhysicalParams::default();
    let sys = system(8, &p);
    let tg = TimeGrid::new(1.0, 100).unwrap();
    let f = ModalFilter::new(&sys, 4).unwrap();
    let (a, b) = (f.mode_state(0).unwrap(), f.mode_state(2).unwrap());
    let ua = ControlTriple::from_fn(&tg, |t| [t.sin(), 0.0, t]);
    let ub = ControlTriple::from_fn(&tg, |t| [0.0, t.cos(), -t]);
    let ra = solve_controlled(&sys, &a, &ua, None, &tg).unwrap().terminal;
    let rb = solve_controlled(&sys, &b, &ub, None, &tg).unwrap().terminal;
    let mut sum = a.clone();
    sum.axpy(2.0, &b);
    let rs = solve_controlled(&sys, &sum, &ua.added(&ub.scaled(2.0)), None, &tg).unwrap().terminal;
    let mut expect = ra.clone();
    expect.axpy(2.0, &rb);
    assert!(sys.energy_norm(&(&rs - &expect)) <= 1e-12 * sys.energy_norm(&expect));
}

#[test]
fn hum_control_drives_a_mode_to_rest() {
    let mut cfg = PipelineConfig::new(PhysicalParams::default(), 16);
    cfg.m = 4;
    cfg.steps = 800;
    cfg.initial = InitialData::Mode(0);
    let out = null_control_pipeline(&cfg).unwrap();
    assert!(out.solution.converged);
    assert!(out.filtered_ratio <= 1e-6);
    assert_relative_eq!(out.solution.initial_energy, 0.5, max_relative = 1e-12);
}

#[test]
fn duality_identity_holds_for_smooth_controls() {
    let p = PhysicalParams::default();
    let sys = system(16, &p);
    let tg = TimeGrid::new(2.0, 1000).unwrap();
    let f = ModalFilter::new(&sys, 6).unwrap();
    let u = ControlTriple::from_fn(&tg, |t| [t.sin(), (2.0 * t).cos(), t * t]);
    let r = verify_duality_identity(&sys, &f.mode_state(0).unwrap(), &u, &f.mode_state(3).unwrap(), &tg).unwrap();
    assert!(r <= 1e-10, "{r}");
}
