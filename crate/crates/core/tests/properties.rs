mod common;

use common::{brute_force_optimum, enumerate_designs};
use covnet_core::benders::{solve, Family, Method, SolveOptions};
use covnet_core::gen::{generate_instance, GenParams};
use covnet_core::heuristics::{initial_solution_mc, initial_solution_pc};
use covnet_core::model::{covered_demand, evaluate_solution, total_cost, ProblemKind, SolveStatus};
use covnet_core::preprocess::Preprocessed;
use proptest::prelude::*;

fn params(n: usize, seed: u64, drop: f64, budget: f64, beta: f64) -> GenParams {
    GenParams {
        edge_drop_prob: drop,
        budget_fraction: budget,
        beta,
        ..GenParams::new(n, seed)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn generator_is_deterministic_and_valid(n in 2usize..30, seed in 0u64..10_000, drop in 0.0f64..0.35) {
        let p = params(n, seed, drop, 0.5, 0.5);
        let a = generate_instance(&p).unwrap();
        let b = generate_instance(&p).unwrap();
        prop_assert_eq!(a.to_json(), b.to_json());
        prop_assert!(a.validate().is_ok());
        prop_assert_eq!(a.nodes.len(), n);
        for pair in &a.pairs {
            prop_assert!(pair.s != pair.t);
            prop_assert!(pair.demand >= 10.0 && pair.demand <= 300.0);
        }
    }

    #[test]
    fn heuristics_are_feasible_and_bounded(seed in 0u64..5_000, budget in 0.1f64..0.9, beta in 0.1f64..1.0) {
        let inst = generate_instance(&params(7, seed, 0.3, budget, beta)).unwrap();
        let designs = enumerate_designs(&inst);

        let pre = Preprocessed::new(&inst, ProblemKind::Mc).unwrap();
        let mc = initial_solution_mc(&inst, &pre);
        prop_assert!(evaluate_solution(&inst, ProblemKind::Mc, &mc).feasible);
        let best = brute_force_optimum(&inst, &designs, ProblemKind::Mc).unwrap();
        prop_assert!(covered_demand(&inst, &mc) <= best + 1e-6);

        match brute_force_optimum(&inst, &designs, ProblemKind::Pc) {
            Some(best) => {
                let pre = Preprocessed::new(&inst, ProblemKind::Pc).unwrap();
                let pc = initial_solution_pc(&inst, &pre);
                prop_assert!(evaluate_solution(&inst, ProblemKind::Pc, &pc).feasible);
                prop_assert!(total_cost(&inst, &pc) >= best - 1e-6);
            }
            None => prop_assert!(Preprocessed::new(&inst, ProblemKind::Pc).is_err()),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn benders_matches_enumeration(seed in 0u64..5_000, family in 0usize..5, pc in any::<bool>()) {
        let kind = if pc { ProblemKind::Pc } else { ProblemKind::Mc };
        let inst = generate_instance(&params(8, seed, 0.3, 0.5, 0.5)).unwrap();
        let expected = brute_force_optimum(&inst, &enumerate_designs(&inst), kind);
        let out = solve(&inst, kind, &SolveOptions::new(Method::Benders(Family::ALL[family])));
        match expected {
            Some(v) => {
                let out = out.unwrap();
                prop_assert_eq!(out.report.status, SolveStatus::Optimal);
                prop_assert!((out.report.objective.unwrap() - v).abs() < 1e-6);
                let sol = out.solution.unwrap();
                prop_assert!(evaluate_solution(&inst, kind, &sol).feasible);
            }
            None => prop_assert!(out.map_or(true, |o| o.report.status == SolveStatus::Infeasible)),
        }
    }
}
