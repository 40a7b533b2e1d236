mod common;

use commutant_core::gauges::GaugeSpec;
use commutant_core::idealops::{commutator_tuple, e_norm_max, e_norm_sum, tuple_gauge_norm, HermitianTuple, OperatorModel};
use commutant_core::linalg;
use commutant_core::qau::{optimize_unit, ramp_unit, SolverParams, UnitElement};
use commutant_core::{CMatrix, Complex64};
use proptest::prelude::*;

fn random_tuple(seed: u64, n: usize, len: usize) -> HermitianTuple {
    let mut rng = common::rng(seed);
    HermitianTuple::from_matrices((0..len).map(|_| common::hermitian(&mut rng, n)).collect()).unwrap()
}

fn gauge(i: usize) -> GaugeSpec {
    [GaugeSpec::trace_class(), GaugeSpec::schatten(2.0).unwrap(), GaugeSpec::ky_fan(2).unwrap(), GaugeSpec::sup()][i].clone()
}

/// Random unit element on the window: `P_m` plus a clamped random block.
fn random_unit(rng: &mut rand_chacha::ChaCha8Rng, n: usize, m: usize, r: usize) -> UnitElement {
    let h = common::hermitian(rng, r - m);
    let block = linalg::clamp_spectrum(&h, 0.0, 1.0);
    let mut a = CMatrix::zeros(n, n);
    for j in 0..m {
        a[(j, j)] = Complex64::new(1.0, 0.0);
    }
    a.view_mut((m, m), (r - m, r - m)).copy_from(&block);
    UnitElement::new(a, m, r).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn submultiplicative(seed in any::<u64>(), n in 2usize..8, gi in 0usize..4) {
        let g = gauge(gi);
        let tau = random_tuple(seed, n, 2);
        let mut rng = common::rng(seed ^ 1);
        let s = common::square(&mut rng, n);
        let t = common::square(&mut rng, n);
        let lhs = e_norm_sum(&tau, &g, &(&s * &t)).unwrap();
        let rhs = e_norm_sum(&tau, &g, &s).unwrap() * e_norm_sum(&tau, &g, &t).unwrap();
        prop_assert!(lhs <= rhs * (1.0 + 1e-9));
    }

    #[test]
    fn isometric_involution(seed in any::<u64>(), n in 2usize..8, gi in 0usize..4) {
        let g = gauge(gi);
        let tau = random_tuple(seed, n, 3);
        let s = common::square(&mut common::rng(seed ^ 2), n);
        let a = e_norm_sum(&tau, &g, &s).unwrap();
        let b = e_norm_sum(&tau, &g, &s.adjoint()).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a));
    }

    #[test]
    fn norm_equivalence(seed in any::<u64>(), n in 2usize..8, gi in 0usize..4) {
        let g = gauge(gi);
        let tau = random_tuple(seed, n, 2);
        let s = common::square(&mut common::rng(seed ^ 3), n);
        let max = e_norm_max(&tau, &g, &s).unwrap();
        let sum = e_norm_sum(&tau, &g, &s).unwrap();
        prop_assert!(max <= sum && sum <= 2.0 * max);
        let kappa = commutator_tuple(&tau, &s).unwrap();
        let oracle = common::op_norm(&s).max(tuple_gauge_norm(&kappa, &g).unwrap());
        prop_assert!((max - oracle).abs() < 1e-10);
    }

    #[test]
    fn leibniz_rule(seed in any::<u64>(), n in 2usize..8) {
        let mut rng = common::rng(seed);
        let t = common::hermitian(&mut rng, n);
        let s = common::square(&mut rng, n);
        let r = common::square(&mut rng, n);
        let comm = |a: &CMatrix, b: &CMatrix| a * b - b * a;
        let lhs = comm(&t, &(&s * &r));
        let rhs = comm(&t, &s) * &r + &s * comm(&t, &r);
        prop_assert!(linalg::max_abs_diff(&lhs, &rhs) < 1e-10);
    }

    #[test]
    fn commutators_are_traceless(seed in any::<u64>(), n in 2usize..10) {
        let tau = random_tuple(seed, n, 3);
        let s = common::square(&mut common::rng(seed ^ 4), n);
        for k in commutator_tuple(&tau, &s).unwrap() {
            prop_assert!(linalg::trace(&k).norm() < 1e-10);
        }
        let h = common::hermitian(&mut common::rng(seed ^ 5), n);
        for k in commutator_tuple(&tau, &h).unwrap() {
            prop_assert!(linalg::max_abs_diff(&k, &(-k.adjoint())) < 1e-12);
        }
    }

    #[test]
    fn objective_convexity(seed in any::<u64>(), lambda in 0.0f64..=1.0, gi in 0usize..4) {
        let g = gauge(gi);
        let tau = OperatorModel::from_name("lap-pos", 2, &[]).unwrap().instantiate(24).unwrap();
        let mut rng = common::rng(seed);
        let a = random_unit(&mut rng, 24, 3, 12);
        let b = random_unit(&mut rng, 24, 3, 12);
        let mix = a.matrix().scale(lambda) + b.matrix().scale(1.0 - lambda);
        let mixed = tuple_gauge_norm(&commutator_tuple(&tau, &mix).unwrap(), &g).unwrap();
        let bound = lambda * a.commutator_norm(&tau, &g).unwrap() + (1.0 - lambda) * b.commutator_norm(&tau, &g).unwrap();
        prop_assert!(mixed <= bound + 1e-9 * (1.0 + bound));
    }

    #[test]
    fn truncation_is_exact(seed in any::<u64>(), r in 2usize..30) {
        let model = OperatorModel::from_name("lap-pos", 2, &[0.7]).unwrap();
        let small = model.instantiate(32).unwrap();
        let large = model.instantiate(64).unwrap();
        let block = common::square(&mut common::rng(seed), r);
        let embed = |n: usize| {
            let mut a = CMatrix::zeros(n, n);
            a.view_mut((0, 0), (r, r)).copy_from(&block);
            a
        };
        let lhs = commutator_tuple(&small, &embed(32)).unwrap();
        let rhs = commutator_tuple(&large, &embed(64)).unwrap();
        for (a, b) in lhs.iter().zip(&rhs) {
            prop_assert_eq!(a, &linalg::leading(b, 32));
            prop_assert!(b.rows(32, 32).iter().all(|z| *z == Complex64::new(0.0, 0.0)));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn optimizer_never_worse_than_ramp(m in 2usize..8, width in 1usize..20, gi in 0usize..4) {
        let g = gauge(gi);
        let tau = OperatorModel::from_name("lap-pos", 2, &[]).unwrap().instantiate(40).unwrap();
        let r = m + width;
        let params = SolverParams { max_iterations: 150, ..SolverParams::default() };
        let result = optimize_unit(&tau, &g, m, r, &params).unwrap();
        let ramp = ramp_unit(&tau, m, r).unwrap().commutator_norm(&tau, &g).unwrap();
        prop_assert!(result.value <= ramp + 1e-8);
        prop_assert!(result.unit.certificate().ok());
    }
}
