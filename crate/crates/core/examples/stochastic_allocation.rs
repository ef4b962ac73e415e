//! Full pipeline on the overlapping four-robot scenario: deterministic
//! allocation on the means, sigma-point allocation, and interpretation.
//!
//! cargo run -p sigma-alloc --example stochastic_allocation

use sigma_alloc::pipeline::{
    deterministic_allocate, interpret, joint_state, stochastic_allocate, InterpretConfig, Scenario,
};
use sigma_alloc::unscented::UtParams;

const ISO: [[f64; 2]; 2] = [[1.25, 0.0], [0.0, 1.25]];

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let robots = [[1.0, 5.0], [2.0, 2.0], [9.0, 9.0], [8.0, 4.0]].map(|p| (p, ISO));
    let s = Scenario::from_positions("overlapping", &robots, &[[5.0, 5.0], [2.5, 10.0], [10.0, 5.0], [5.0, 3.0]])?;

    let det = deterministic_allocate(&s)?;
    println!("gamma_0:{}", det.assignment.to_matrix());
    println!("cost at the means: {:.4}", det.total_cost);

    let params = UtParams::with_defaults(joint_state(&s).dim())?;
    let sa = stochastic_allocate(&s, &params)?;
    for (k, (a, w)) in sa.per_point.iter().zip(&sa.weights_mean).enumerate() {
        println!("sigma point {k:2} (w = {w:.4}): {:?}", a.tasks());
    }
    println!("gamma_s:{:.4}", sa.gamma_s);
    println!("sigma_s:{:.4}", sa.sigma_s);
    println!("mean cost matrix:{:.4}", sa.cost.mean_cost);

    let f = interpret(&sa, &InterpretConfig::default())?;
    println!("Q:{:.4}", f.weighted_inverse.q);
    println!("gamma_f:{}", f.assignment.to_matrix());
    println!("low confidence: {}", f.low_confidence);
    Ok(())
}
