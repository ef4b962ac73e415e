//! Paired Monte Carlo comparison of allocations on the overlapping scenario.
//!
//! cargo run --release -p sigma-alloc --example monte_carlo [runs] [seed]

use sigma_alloc::evaluation::{monte_carlo_compare, NamedAssignment, DEFAULT_RUNS};
use sigma_alloc::lsap::BinaryAssignment;
use sigma_alloc::pipeline::{deterministic_allocate, interpret, stochastic_allocate, InterpretConfig, Scenario};
use sigma_alloc::unscented::UtParams;

const ISO: [[f64; 2]; 2] = [[1.25, 0.0], [0.0, 1.25]];

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let runs = args.next().map(|a| a.parse()).transpose()?.unwrap_or(DEFAULT_RUNS);
    let seed = args.next().map(|a| a.parse()).transpose()?.unwrap_or(1u64);

    let robots = [[1.0, 5.0], [2.0, 2.0], [9.0, 9.0], [8.0, 4.0]].map(|p| (p, ISO));
    let s = Scenario::from_positions("overlapping", &robots, &[[5.0, 5.0], [2.5, 10.0], [10.0, 5.0], [5.0, 3.0]])?;

    let gamma_0 = deterministic_allocate(&s)?.assignment;
    let sa = stochastic_allocate(&s, &UtParams::with_defaults(8)?)?;
    let gamma_f = interpret(&sa, &InterpretConfig::default())?.assignment;
    let small_alpha = interpret(&stochastic_allocate(&s, &UtParams::new(8, 0.5, 2.0, 0.0)?)?, &InterpretConfig::default())?.assignment;
    // the executable assignment printed alongside this scenario's reference matrices
    let printed = BinaryAssignment::from_tasks(vec![3, 0, 1, 2])?;

    let out = monte_carlo_compare(
        &s,
        &[
            NamedAssignment::new("gamma_0", gamma_0),
            NamedAssignment::new("gamma_f", gamma_f),
            NamedAssignment::new("gamma_f(alpha=0.5)", small_alpha),
            NamedAssignment::new("printed gamma_f", printed),
        ],
        runs,
        seed,
    )?;
    let r = &out.report;
    println!("runs = {}, seed = {}, rng = {}", r.runs, r.seed, r.rng);
    for a in &r.assignments {
        let saving = 1.0 - a.mean_cost / r.assignments[0].mean_cost;
        println!(
            "{:20} mean {:8.4}  std {:7.4}  wins {:6}  saving vs gamma_0 {:+.4}",
            a.name, a.mean_cost, a.std_cost, a.wins, saving
        );
    }
    println!("per-run optimum mean {:.4} (best possible saving {:.4})", r.oracle_mean_cost, 1.0 - r.oracle_mean_cost / r.assignments[0].mean_cost);
    println!("lower bound violations: {}", r.lower_bound_violations);
    Ok(())
}
