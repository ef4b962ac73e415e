//! Push a 2-D Gaussian through range/bearing conversion with the unscented transform.
//!
//! cargo run -p sigma-alloc --example unscented

use nalgebra::{DMatrix, DVector};
use sigma_alloc::unscented::{propagate, GaussianVector, UtParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let belief = GaussianVector::new(
        DVector::from_vec(vec![3.0, 4.0]),
        DMatrix::from_row_slice(2, 2, &[0.5, 0.1, 0.1, 0.3]),
    )?;
    let params = UtParams::with_defaults(2)?;
    println!("lambda = {}, gamma = {}", params.lambda(), params.gamma());
    println!("mean weights: {:?}", params.weights_mean());
    println!("cov weights:  {:?}", params.weights_cov());

    let out = propagate(&belief, &params, |x| DVector::from_vec(vec![x.norm(), x[1].atan2(x[0])]))?;
    println!("sigma points:{}", out.sigma_points.points);
    println!("range/bearing mean: {}", out.output.mean().transpose());
    println!("range/bearing covariance:{}", out.output.cov());
    println!("cross covariance:{}", out.cross_cov);
    Ok(())
}
