use nalgebra::DVector;
use proptest::prelude::*;
use waveuc_core::experiment::{run, PrecondChoice, Preset};
use waveuc_core::krylov::GmresConfig;
use waveuc_core::postproc::StandingWave;
use waveuc_core::system::column;
use waveuc_core::{gmres, Orders, SpaceTimeSystem, SpaceTimeVector};

fn system(orders: Orders, n_slabs: usize, n_elems: usize) -> SpaceTimeSystem {
    let mut cfg = Preset::Gcc1d.config(orders.k, orders.q, n_slabs, PrecondChoice::None);
    cfg.orders = orders;
    cfg.n_elems = n_elems;
    cfg.build_system().unwrap()
}

fn vector(sys: &SpaceTimeSystem, seed: &[f64]) -> SpaceTimeVector {
    let data = (0..sys.ndof()).map(|i| seed[i % seed.len()] * (1.0 + (i % 7) as f64)).collect();
    SpaceTimeVector::from_vec(sys.layout(), data).unwrap()
}

fn orders() -> impl Strategy<Value = Orders> {
    (1usize..=3, 1usize..=3, 1usize..=3, 0usize..=2).prop_map(|(k, q, ks, qs)| Orders::new(k, q, ks, qs))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn operator_matches_dense_assembly(o in orders(), n in 1usize..=3, seed in prop::collection::vec(-1.0f64..1.0, 5..20)) {
        let sys = system(o, n, 4);
        let x = vector(&sys, &seed);
        let y = column(&sys.apply(&x).unwrap());
        let d = sys.assemble_dense().unwrap() * column(&x);
        prop_assert!((y - &d).norm() <= 1e-12 * d.norm().max(1e-300));
    }

    #[test]
    fn flipped_form_is_the_stability_norm(o in orders(), n in 1usize..=3, seed in prop::collection::vec(-1.0f64..1.0, 5..20)) {
        let sys = system(o, n, 8);
        let x = vector(&sys, &seed);
        let lhs = x.with_negated_dual().dot(&sys.apply(&x).unwrap()).unwrap();
        let norm = sys.triple_norm(&x).unwrap().total;
        prop_assert!((lhs - norm * norm).abs() <= 1e-10 * norm * norm);
    }
}

#[test]
fn every_preconditioner_reaches_the_direct_solution() {
    let sys = system(Orders::full(1, 1), 4, 8);
    let rhs = sys
        .assemble_rhs(|t, x| waveuc_core::postproc::ExactSolution::value(&StandingWave, t, x))
        .unwrap();
    let exact = sys.assemble_dense().unwrap().lu().solve(&column(&rhs)).unwrap();
    let cfg = GmresConfig {
        tol: 1e-12,
        ..Default::default()
    };
    for choice in [PrecondChoice::None, PrecondChoice::Block, PrecondChoice::Mf, PrecondChoice::Dfb] {
        let pc = choice.kind(10.0).build(&sys).unwrap();
        let (x, rep) = gmres(&sys, pc.as_ref(), rhs.as_slice(), &cfg).unwrap();
        assert!(rep.converged, "{choice}");
        let err = (DVector::from_column_slice(&x) - &exact).norm() / exact.norm();
        assert!(err < 1e-6, "{choice}: {err}");
    }
}

#[test]
fn observing_everywhere_beats_partial_observation() {
    let partial = run(&Preset::Gcc1d.config(2, 2, 8, PrecondChoice::Mf)).unwrap();
    let mut cfg = Preset::Gcc1d.config(2, 2, 8, PrecondChoice::Mf);
    cfg.omega = vec![[0.0, 1.0]];
    let full = run(&cfg).unwrap();
    assert!(full.report.converged && partial.report.converged);
    assert!(full.errors.linf_l2_u < partial.errors.linf_l2_u);
    assert!(full.errors.l2l2_ut < partial.errors.l2l2_ut);
}

#[test]
fn lowest_dual_order_shrinks_the_system() {
    let mf = run(&Preset::Gcc1d.config(1, 1, 4, PrecondChoice::Mf)).unwrap();
    let ml = run(&Preset::Gcc1d.config(1, 1, 4, PrecondChoice::Ml)).unwrap();
    assert_eq!(mf.system.layout().primal_len, ml.system.layout().primal_len);
    assert!(ml.system.ndof() < mf.system.ndof());
    assert!(ml.report.converged);
}

#[test]
fn solution_is_refined_by_more_slabs() {
    let coarse = run(&Preset::Gcc1d.config(2, 2, 4, PrecondChoice::Mf)).unwrap();
    let fine = run(&Preset::Gcc1d.config(2, 2, 8, PrecondChoice::Mf)).unwrap();
    assert!(fine.errors.l2l2_ut < 0.5 * coarse.errors.l2l2_ut);
}
