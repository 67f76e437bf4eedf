use conerig::geometry::{Angle, ConeGeometry, CrossSection};
use conerig::verify::{
    adjointness_check, bump, covariant_apply, identity_residual, l2_norm, poincare_2form_check, random_sample,
    ChartGrid, CovariantOp, Identity, TensorField, Valence,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn grid3() -> ChartGrid {
    let g = ConeGeometry::new(3, Angle::Beta(2.0), 1.0, CrossSection::Circle { length: 2.0 * PI }).unwrap();
    ChartGrid::new(&g, (0.2, 0.9), (0.0, 0.0), &[12, 8, 6]).unwrap()
}

fn grid4() -> ChartGrid {
    let g = ConeGeometry::half_plane(Angle::Beta(1.5), 1.0).unwrap();
    ChartGrid::new(&g, (0.2, 0.9), (-0.6, 0.6), &[8, 6, 4, 4]).unwrap()
}

fn check_orders(grid: &ChartGrid, ids: &[Identity]) {
    for &id in ids {
        for seed in 0..5 {
            let f = random_sample(id.sample_valence(), grid, &mut ChaCha8Rng::seed_from_u64(seed));
            let rec = identity_residual(id, &f, grid).unwrap();
            let order = rec.order.unwrap();
            assert!((order - 2.0).abs() <= 0.3, "n={} {} seed {seed}: order {order}", grid.dim(), id.name());
            assert!(rec.residual < 0.1 * l2_norm(&f, grid), "{}: residual {} not small", id.name(), rec.residual);
        }
    }
}

#[test]
fn identities_converge_at_second_order_n3() {
    check_orders(&grid3(), &Identity::ALL);
}

#[test]
fn weitzenbock_identities_converge_n4() {
    check_orders(&grid4(), &[Identity::W1, Identity::WS]);
}

#[test]
fn radial_bump_one_form_ratio_four() {
    let grid = grid3();
    let a = TensorField::new(Valence::OneForm, 3, |x| vec![bump(x[0], 0.3, 0.8), 0.0, 0.0]);
    let rec = identity_residual(Identity::W1, &a, &grid).unwrap();
    let ratio = rec.residual / rec.residual_refined;
    assert!((ratio - 4.0).abs() < 0.2, "ratio {ratio}");
}

#[test]
fn poincare_holds_on_random_two_forms() {
    let grid = grid3();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..20 {
        let w = random_sample(Valence::TwoForm, &grid, &mut rng);
        let rec = poincare_2form_check(&w, &grid).unwrap();
        assert!(rec.lhs > 0.0 && rec.satisfied, "{rec:?}");
        assert!((rec.constant - 0.5f64.sqrt()).abs() < 1e-15);
    }
}

#[test]
fn poincare_rejects_support_on_the_boundary() {
    let grid = grid3();
    let w = TensorField::zero(Valence::TwoForm, 3).with_support(vec![(0.2, 0.6), (0.0, PI), (0.0, 2.0 * PI)]);
    assert!(poincare_2form_check(&w, &grid).is_err());
}

#[test]
fn discrete_adjointness_to_discretization_order() {
    // Quadrature in r needs more nodes than the identity checks.
    let g = ConeGeometry::new(3, Angle::Beta(2.0), 1.0, CrossSection::Circle { length: 2.0 * PI }).unwrap();
    let grid = ChartGrid::new(&g, (0.2, 0.9), (0.0, 0.0), &[64, 10, 6]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let u = random_sample(Valence::OneForm, &grid, &mut rng);
    let v = random_sample(Valence::Tensor(2), &grid, &mut rng);
    let coarse = adjointness_check(&u, &v, &grid).unwrap();
    let fine = adjointness_check(&u, &v, &grid.refined()).unwrap();
    assert!(coarse.relative_gap < 1e-4, "{coarse:?}");
    assert!(fine.relative_gap < 0.5 * coarse.relative_gap, "{coarse:?} {fine:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    /// Coordinate codifferential against the frame contraction of ∇, entrywise.
    #[test]
    fn delta_matches_nabla_star_on_forms(seed in any::<u64>(), two in any::<bool>()) {
        let grid = grid3();
        let valence = if two { Valence::TwoForm } else { Valence::OneForm };
        let f = random_sample(valence, &grid, &mut ChaCha8Rng::seed_from_u64(seed));
        let a = covariant_apply(CovariantOp::Delta, &f, &grid).unwrap();
        let b = covariant_apply(CovariantOp::NablaStar, &f, &grid).unwrap();
        for x in [[0.45, 0.7, 1.3], [0.6, 2.9, 4.4], [0.75, 0.1, 0.2]] {
            let scale = 1.0 + f.at(&x).iter().map(|v| v.abs()).fold(0.0, f64::max);
            for (p, q) in a.at(&x).iter().zip(b.at(&x)) {
                prop_assert!((p - q).abs() <= 1e-4 * scale, "{p} vs {q}");
            }
        }
    }

    #[test]
    fn delta_star_symmetric_and_two_forms_antisymmetric(seed in any::<u64>()) {
        let grid = grid3();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_sample(Valence::OneForm, &grid, &mut rng);
        let s = covariant_apply(CovariantOp::DeltaStar, &a, &grid).unwrap();
        let d = covariant_apply(CovariantOp::D, &a, &grid).unwrap();
        let x = [0.5, 1.0, 2.0];
        prop_assert_eq!(s.symmetry_defect(&x), 0.0);
        prop_assert!(d.symmetry_defect(&x) <= 1e-12);
    }
}
