use approx::assert_abs_diff_eq;
use cbb_core::{enumerate_extreme_points, solve_lp, tp_group_index, Instance, LpObjective};
use proptest::prelude::*;

fn small_instance() -> impl Strategy<Value = Instance> {
    (1usize..=4, 1usize..=3, 1u64..=5, any::<u64>())
        .prop_filter("enumerable", |(k, m, _, _)| k * m <= 12)
        .prop_map(|(k, m, d, seed)| Instance::random(k, m, d, seed).unwrap())
}

fn max_abs_diff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter().flatten().zip(b.iter().flatten()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn solver_reaches_the_best_vertex(inst in small_instance()) {
        let obj = LpObjective::means(&inst);
        let z = solve_lp(&inst, &obj);
        let vertices = enumerate_extreme_points(&inst).unwrap();
        let best = vertices.iter().map(|v| v.value()).fold(f64::NEG_INFINITY, f64::max);
        prop_assert!((z.value() - best).abs() < 1e-9, "solver {} vs enumeration {}", z.value(), best);
        prop_assert!(vertices.iter().any(|v| max_abs_diff(v.z(), z.z()) < 1e-9), "solution is not a vertex");
    }

    #[test]
    fn solution_is_a_sparse_feasible_point(inst in small_instance()) {
        let z = solve_lp(&inst, &LpObjective::means(&inst));
        prop_assert!(z.is_feasible(&inst));
        prop_assert!(z.support().len() <= inst.num_arms() + inst.num_contexts());
        for &(i, j) in z.support() {
            prop_assert!(tp_group_index(z.rate(i, j)).is_ok());
        }
    }

    #[test]
    fn halving_the_objective_keeps_the_vertex(inst in small_instance()) {
        let full = solve_lp(&inst, &LpObjective::means(&inst));
        let half: Vec<Vec<f64>> = inst.means().iter().map(|r| r.iter().map(|x| x / 2.0).collect()).collect();
        let z = solve_lp(&inst, &LpObjective::new(half).unwrap());
        prop_assert!(max_abs_diff(full.z(), z.z()) < 1e-12);
        prop_assert!((2.0 * z.value() - full.value()).abs() < 1e-12);
    }

    #[test]
    fn every_vertex_is_feasible(inst in small_instance()) {
        for v in enumerate_extreme_points(&inst).unwrap() {
            prop_assert!(v.is_feasible(&inst));
        }
    }
}

#[test]
fn random_two_by_two_optimum() {
    let inst = Instance::random(2, 2, 3, 7).unwrap();
    let z = solve_lp(&inst, &LpObjective::means(&inst));
    let best = enumerate_extreme_points(&inst).unwrap().iter().map(|v| v.value()).fold(0.0, f64::max);
    assert_abs_diff_eq!(z.value(), best, epsilon = 1e-12);
}

#[test]
fn zero_objective_gives_the_origin() {
    let inst = Instance::random(3, 3, 4, 1).unwrap();
    let z = solve_lp(&inst, &LpObjective::new(vec![vec![0.0; 3]; 3]).unwrap());
    assert_abs_diff_eq!(z.value(), 0.0);
}
