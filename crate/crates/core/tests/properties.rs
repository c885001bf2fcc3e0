use nalgebra::DVector;
use proptest::prelude::*;

use nambu_linkage::{homothety_law, pin, ConstraintSystem, LinkageSpec, NambuField};

fn quadrangle(l: [f64; 4]) -> LinkageSpec {
    LinkageSpec::polygon(&["A", "B", "C", "D"], &l).unwrap()
}

/// A quadrangle realization with A at the origin and B on the x-axis, built
/// from angles so its lengths are known exactly.
fn realized_quadrangle(ab: f64, t1: f64, bc: f64, t2: f64, cd: f64) -> (LinkageSpec, DVector<f64>) {
    let b = (ab, 0.0);
    let c = (b.0 + bc * t1.cos(), b.1 + bc * t1.sin());
    let d = (c.0 + cd * t2.cos(), c.1 + cd * t2.sin());
    let da = d.0.hypot(d.1);
    (quadrangle([ab, bc, cd, da]), DVector::from_vec(vec![c.0, c.1, d.0, d.1]))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn quadrangle_field_scales_homothetically(
        ab in 0.5f64..2.0, bc in 0.5f64..2.0, cd in 0.5f64..2.0,
        t1 in 0.2f64..1.4, t2 in 1.7f64..2.9, c in prop::sample::select(vec![0.5, 2.0, 3.0]),
    ) {
        let (spec, x) = realized_quadrangle(ab, t1, bc, t2, cd);
        let exponent = homothety_law(&spec).exponent as i32;
        let base = NambuField::canonical(ConstraintSystem::for_spec(&spec).unwrap());
        let scaled = NambuField::canonical(ConstraintSystem::for_spec(&spec.scale(c)).unwrap());
        let v = base.evaluate_field(&x).unwrap();
        let w = scaled.evaluate_field(&(&x * c)).unwrap();
        let expected = &v * c.powi(exponent + 1);
        prop_assert!((&w - &expected).norm() <= 1e-8 * expected.norm().max(1e-300));
    }

    #[test]
    fn field_is_tangent_and_annihilates_its_rows(
        ab in 0.5f64..2.0, bc in 0.5f64..2.0, cd in 0.5f64..2.0,
        t1 in 0.2f64..1.4, t2 in 1.7f64..2.9,
    ) {
        let (spec, x) = realized_quadrangle(ab, t1, bc, t2, cd);
        let field = NambuField::canonical(ConstraintSystem::for_spec(&spec).unwrap());
        let v = field.evaluate_field(&x).unwrap();
        let j = field.stacked_jacobian(&x).unwrap();
        prop_assert!((j * &v).amax() <= 1e-12 * (1.0 + v.norm()));
    }

    #[test]
    fn swapping_rows_negates(
        ab in 0.5f64..2.0, bc in 0.5f64..2.0, cd in 0.5f64..2.0,
        t1 in 0.2f64..1.4, t2 in 1.7f64..2.9, i in 0usize..3, j in 0usize..3,
    ) {
        prop_assume!(i != j);
        let (spec, x) = realized_quadrangle(ab, t1, bc, t2, cd);
        let system = ConstraintSystem::for_spec(&spec).unwrap();
        let mut order = vec![0, 1, 2];
        order.swap(i, j);
        let a = NambuField::canonical(system.clone()).evaluate_field(&x).unwrap();
        let b = NambuField::canonical(system).with_edge_order(order).evaluate_field(&x).unwrap();
        prop_assert!((a + b).norm() <= 1e-12 * (1.0 + x.norm()));
    }

    #[test]
    fn relabelling_vertices_keeps_dimension(perm in Just(vec![0usize, 1, 2, 3, 4, 5, 6]).prop_shuffle()) {
        let names = ["A", "B", "C", "D", "E", "F", "G"];
        let renamed: Vec<&str> = perm.iter().map(|&i| names[i]).collect();
        let spec = LinkageSpec::polygon(&renamed, &[1.0, 1.2, 1.4, 1.1, 1.3, 1.5, 1.6]).unwrap();
        let dof = nambu_linkage::degrees_of_freedom(&pin(&spec, None).unwrap()).unwrap();
        prop_assert_eq!(dof, 4);
    }
}
