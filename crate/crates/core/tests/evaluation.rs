mod common;

use sigma_alloc::evaluation::{
    evaluate_assignment, monte_carlo_compare, run_stream, NamedAssignment, RealizationSampler,
};
use sigma_alloc::lsap::{brute_force_solve, BinaryAssignment};
use sigma_alloc::pipeline::{build_cost_matrix, deterministic_allocate};

use common::{permutations, random_scenario, rng, scenario2};

#[test]
fn robot_sample_moments_match_belief() {
    let s = scenario2();
    let sampler = RealizationSampler::new(&s).unwrap();
    let n = 100_000;
    let xs: Vec<[f64; 2]> = (0..n).map(|k| sampler.sample(&mut run_stream(77, k))[0]).collect();
    for c in 0..2 {
        let mean = xs.iter().map(|p| p[c]).sum::<f64>() / n as f64;
        let var = xs.iter().map(|p| (p[c] - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let target = [1.0, 5.0][c];
        assert!((mean - target).abs() <= 3.0 * (1.25f64 / n as f64).sqrt(), "mean {mean}");
        assert!((var - 1.25).abs() <= 0.05 * 1.25, "var {var}");
    }
}

#[test]
fn mean_cost_matches_solver_total() {
    let s = scenario2();
    let det = deterministic_allocate(&s).unwrap();
    let at_means = evaluate_assignment(&det.assignment, &s.robot_means(), s.tasks()).unwrap();
    assert!((at_means - det.total_cost).abs() < 1e-12);
}

#[test]
fn every_permutation_respects_the_per_run_optimum() {
    let mut r = rng(8);
    for m in 2..=4 {
        let s = random_scenario(&mut r, m);
        let all: Vec<_> = permutations(m)
            .into_iter()
            .enumerate()
            .map(|(k, p)| NamedAssignment::new(format!("p{k}"), BinaryAssignment::from_tasks(p).unwrap()))
            .collect();
        let out = monte_carlo_compare(&s, &all, 300, 4).unwrap();
        assert_eq!(out.report.lower_bound_violations, 0);
        for st in &out.report.assignments {
            assert!(st.mean_cost >= out.report.oracle_mean_cost - 1e-9);
        }
        // the oracle column equals the cheapest permutation of each run
        for (row, opt) in out.costs.iter().zip(&out.oracle_costs) {
            let min = row.iter().copied().fold(f64::INFINITY, f64::min);
            assert!((min - opt).abs() < 1e-9);
        }
        let wins: usize = out.report.assignments.iter().map(|a| a.wins).sum();
        assert!(wins <= out.report.runs);
    }
}

#[test]
fn paired_runs_share_the_realization() {
    let s = scenario2();
    let id = BinaryAssignment::identity(4);
    let det = deterministic_allocate(&s).unwrap().assignment;
    let out = monte_carlo_compare(
        &s,
        &[NamedAssignment::new("det", det.clone()), NamedAssignment::new("id", id.clone())],
        50,
        9,
    )
    .unwrap();
    let sampler = RealizationSampler::new(&s).unwrap();
    for (k, row) in out.costs.iter().enumerate() {
        let robots = sampler.sample(&mut run_stream(9, k as u64));
        assert_eq!(row[0], evaluate_assignment(&det, &robots, s.tasks()).unwrap());
        assert_eq!(row[1], evaluate_assignment(&id, &robots, s.tasks()).unwrap());
        let (_, opt) = brute_force_solve(&build_cost_matrix(&robots, s.tasks()).unwrap()).unwrap();
        assert_eq!(out.oracle_costs[k], opt);
    }
}

#[test]
fn identical_inputs_identical_reports() {
    let s = scenario2();
    let a = [
        NamedAssignment::new("det", deterministic_allocate(&s).unwrap().assignment),
        NamedAssignment::new("id", BinaryAssignment::identity(4)),
    ];
    let x = monte_carlo_compare(&s, &a, 500, 123).unwrap();
    let y = monte_carlo_compare(&s, &a, 500, 123).unwrap();
    assert_eq!(
        serde_json::to_string(&x.report).unwrap(),
        serde_json::to_string(&y.report).unwrap()
    );
    let z = monte_carlo_compare(&s, &a, 500, 124).unwrap();
    assert_ne!(x.report.assignments[0].mean_cost, z.report.assignments[0].mean_cost);
}
