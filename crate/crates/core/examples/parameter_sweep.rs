//! How the stochastic assignment changes with the sigma-point spread.
//!
//! cargo run -p sigma-alloc --example parameter_sweep

use sigma_alloc::pipeline::{interpret, stochastic_allocate, InterpretConfig, Scenario};
use sigma_alloc::unscented::UtParams;

const ISO: [[f64; 2]; 2] = [[1.25, 0.0], [0.0, 1.25]];

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let robots = [[1.0, 5.0], [2.0, 2.0], [9.0, 9.0], [8.0, 4.0]].map(|p| (p, ISO));
    let s = Scenario::from_positions("overlapping", &robots, &[[5.0, 5.0], [2.5, 10.0], [10.0, 5.0], [5.0, 3.0]])?;
    for alpha in [0.1, 0.25, 0.5, 0.75, 1.0] {
        for kappa in [0.0, 2.0] {
            let p = UtParams::new(8, alpha, 2.0, kappa)?;
            let sa = stochastic_allocate(&s, &p)?;
            let f = interpret(&sa, &InterpretConfig::default())?;
            println!(
                "alpha {alpha:4} kappa {kappa}: gamma {:.3} w0 {:+.3}  gamma_f {:?}  low confidence {}",
                p.gamma(),
                p.weights_mean()[0],
                f.assignment.tasks(),
                f.low_confidence
            );
        }
    }
    Ok(())
}
