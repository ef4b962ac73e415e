//! Solve a small assignment problem and check it against enumeration.
//!
//! cargo run -p sigma-alloc --example hungarian

use sigma_alloc::lsap::{brute_force_solve, solve, CostMatrix};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cost = CostMatrix::from_rows(&[
        vec![4.0, 1.0, 3.0, 2.5],
        vec![2.0, 0.5, 5.0, 3.0],
        vec![3.0, 2.0, 2.0, 1.0],
        vec![1.5, 4.0, 0.5, 2.0],
    ])?;
    let sol = solve(&cost)?;
    println!("assignment (agent -> task): {:?}", sol.assignment.tasks());
    println!("total cost: {}", sol.total_cost);
    println!("agent labels v: {:?}", sol.duals.v);
    println!("task labels u:  {:?}", sol.duals.u);
    println!("dual objective: {}", sol.duals.dual_objective());
    println!("certified: {}", sol.duals.certifies(&cost, &sol.assignment, 1e-9));

    let (bf, bf_cost) = brute_force_solve(&cost)?;
    println!("brute force: {:?} at {}", bf.tasks(), bf_cost);

    // negative costs are shifted internally; the total refers to the input
    let gains = CostMatrix::from_rows(&[vec![-3.0, -1.0], vec![-2.0, -4.0]])?;
    let sol = solve(&gains)?;
    println!("maximize gains 3+4: {:?} total {}", sol.assignment.tasks(), sol.total_cost);
    Ok(())
}
