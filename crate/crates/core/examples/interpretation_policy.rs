//! Interpret a given stochastic assignment and its uncertainty matrix.
//!
//! cargo run -p sigma-alloc --example interpretation_policy

use nalgebra::DMatrix;
use sigma_alloc::pipeline::{interpret_matrices, InterpretConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    #[rustfmt::skip]
    let gamma_s = DMatrix::from_row_slice(4, 4, &[
        1.0, -0.2, 0.0, 0.2,
        0.7, 0.0, 0.0, 0.3,
        0.2, 1.2, -0.3, 0.0,
        -0.8, 0.0, 1.3, 0.5,
    ]);
    #[rustfmt::skip]
    let sigma_s = DMatrix::from_row_slice(4, 4, &[
        0.8, 1.0, 0.0, 0.1,
        0.4, 0.0, 0.0, 0.4,
        0.1, 1.0, 1.1, 0.0,
        1.4, 0.0, 1.1, 0.3,
    ]);
    let out = interpret_matrices(&gamma_s, &sigma_s, &InterpretConfig::default())?;
    println!("Q (sentinel {:.4} on unsupported cells):{:.4}", out.weighted_inverse.sentinel, out.weighted_inverse.q);
    println!("gamma_f:{}", out.assignment.to_matrix());
    println!("total weighted uncertainty: {:.4}", out.total);
    Ok(())
}
