#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand::rngs::StdRng;
use sigma_alloc::pipeline::Scenario;

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

pub fn uniform_matrix(rng: &mut StdRng, m: usize, lo: f64, hi: f64) -> DMatrix<f64> {
    DMatrix::from_fn(m, m, |_, _| rng.gen_range(lo..hi))
}

pub fn scenario_path(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

const ISO: [[f64; 2]; 2] = [[1.25, 0.0], [0.0, 1.25]];

pub fn scenario1() -> Scenario {
    let robots = [[10.0, 15.0], [2.0, 2.0], [0.0, 40.0], [20.0, 4.0]].map(|p| (p, ISO));
    Scenario::from_positions("scenario1", &robots, &[[9.0, 14.0], [1.0, 1.0], [0.0, 38.0], [18.0, 3.0]]).unwrap()
}

pub fn scenario2() -> Scenario {
    let robots = [[1.0, 5.0], [2.0, 2.0], [9.0, 9.0], [8.0, 4.0]].map(|p| (p, ISO));
    Scenario::from_positions("scenario2", &robots, &[[5.0, 5.0], [2.5, 10.0], [10.0, 5.0], [5.0, 3.0]]).unwrap()
}

/// Random scenario: positions in [0, 10]^2, covariances A A^T with A entries in [-1, 1].
pub fn random_scenario(rng: &mut StdRng, m: usize) -> Scenario {
    let robots: Vec<_> = (0..m)
        .map(|_| {
            let a: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
            let c00 = a[0] * a[0] + a[1] * a[1];
            let c01 = a[0] * a[2] + a[1] * a[3];
            let c11 = a[2] * a[2] + a[3] * a[3];
            ([rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0)], [[c00, c01], [c01, c11]])
        })
        .collect();
    let tasks: Vec<_> = (0..m).map(|_| [rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0)]).collect();
    Scenario::from_positions("random", &robots, &tasks).unwrap()
}

/// The stochastic assignment printed for the overlapping four-robot case.
pub fn printed_gamma_s() -> DMatrix<f64> {
    DMatrix::from_row_slice(4, 4, &[
        1.0, -0.2, 0.0, 0.2,
        0.7, 0.0, 0.0, 0.3,
        0.2, 1.2, -0.3, 0.0,
        -0.8, 0.0, 1.3, 0.5,
    ])
}

pub fn printed_sigma_s() -> DMatrix<f64> {
    DMatrix::from_row_slice(4, 4, &[
        0.8, 1.0, 0.0, 0.1,
        0.4, 0.0, 0.0, 0.4,
        0.1, 1.0, 1.1, 0.0,
        1.4, 0.0, 1.1, 0.3,
    ])
}

/// All permutations of 0..m in lexicographic order (test-side enumerator).
pub fn permutations(m: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for k in 0..used.len() {
            if !used[k] {
                used[k] = true;
                prefix.push(k);
                rec(prefix, used, out);
                prefix.pop();
                used[k] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; m], &mut out);
    out
}
