//! Seeded Monte Carlo comparison of assignments.
//!
//! Random stream: ChaCha20 (`rand_chacha` 0.3) keyed with the 64-bit seed in
//! little-endian order in the first eight key bytes, remaining key bytes
//! zero. Run `k` reads from stream number `k`, so every run is reproducible
//! on its own. Each robot consumes two 64-bit words per realization and turns
//! them into a standard normal pair with the Box-Muller transform:
//! `u1 = ((w1 >> 11) + 1) / 2^53`, `u2 = (w2 >> 11) / 2^53`,
//! `z = sqrt(-2 ln u1) * (cos 2 pi u2, sin 2 pi u2)`.

use nalgebra::DMatrix;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lsap::{self, BinaryAssignment, CostMatrix, LsapError};
use crate::pipeline::{build_cost_matrix, PipelineError, Position, Scenario};
use crate::unscented::{psd_factor, UnscentedError};

/// Default number of Monte Carlo runs.
pub const DEFAULT_RUNS: usize = 10_000;

/// Generator name recorded in reports.
pub const RNG_NAME: &str = "chacha20/rand_chacha-0.3/seed-le-key/stream=run/box-muller";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvaluationError {
    #[error("runs must be at least 1")]
    NoRuns,
    #[error("no assignments to compare")]
    NoAssignments,
    #[error("assignment '{name}' has size {got}, scenario has {expected}")]
    SizeMismatch { name: String, expected: usize, got: usize },
    #[error("{0} robot positions but {1} task positions")]
    CountMismatch(usize, usize),
    #[error("robot {index}: {source}")]
    Factor { index: usize, source: UnscentedError },
    #[error(transparent)]
    Lsap(#[from] LsapError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
}

/// Counter-based stream for run `run` under `seed`.
pub fn run_stream(seed: u64, run: u64) -> ChaCha20Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    let mut rng = ChaCha20Rng::from_seed(key);
    rng.set_stream(run);
    rng
}

/// One standard normal pair from two words of `rng`.
pub fn standard_normal_pair<R: RngCore>(rng: &mut R) -> [f64; 2] {
    const SCALE: f64 = 1.0 / (1u64 << 53) as f64;
    let u1 = ((rng.next_u64() >> 11) + 1) as f64 * SCALE;
    let u2 = (rng.next_u64() >> 11) as f64 * SCALE;
    let radius = (-2.0 * u1.ln()).sqrt();
    let (sin, cos) = (std::f64::consts::TAU * u2).sin_cos();
    [radius * cos, radius * sin]
}

/// Draws robot positions from their Gaussian beliefs.
#[derive(Debug, Clone)]
pub struct RealizationSampler {
    means: Vec<Position>,
    factors: Vec<DMatrix<f64>>,
}

impl RealizationSampler {
    pub fn new(s: &Scenario) -> Result<Self, EvaluationError> {
        let factors = s
            .robots()
            .iter()
            .enumerate()
            .map(|(index, r)| psd_factor(r.cov()).map_err(|source| EvaluationError::Factor { index, source }))
            .collect::<Result<_, _>>()?;
        Ok(Self { means: s.robot_means(), factors })
    }

    pub fn sample<R: RngCore>(&self, rng: &mut R) -> Vec<Position> {
        self.means
            .iter()
            .zip(&self.factors)
            .map(|(mu, f)| {
                let z = standard_normal_pair(rng);
                [
                    mu[0] + f[(0, 0)] * z[0] + f[(0, 1)] * z[1],
                    mu[1] + f[(1, 0)] * z[0] + f[(1, 1)] * z[1],
                ]
            })
            .collect()
    }
}

pub fn sample_realization<R: RngCore>(s: &Scenario, rng: &mut R) -> Result<Vec<Position>, EvaluationError> {
    Ok(RealizationSampler::new(s)?.sample(rng))
}

/// Total Euclidean distance travelled under `a`.
pub fn evaluate_assignment(
    a: &BinaryAssignment,
    robot_positions: &[Position],
    task_positions: &[Position],
) -> Result<f64, EvaluationError> {
    if robot_positions.len() != task_positions.len() {
        return Err(EvaluationError::CountMismatch(robot_positions.len(), task_positions.len()));
    }
    if a.size() != robot_positions.len() {
        return Err(EvaluationError::SizeMismatch {
            name: String::new(),
            expected: robot_positions.len(),
            got: a.size(),
        });
    }
    Ok(a
        .pairs()
        .map(|(i, j)| {
            let (r, t) = (robot_positions[i], task_positions[j]);
            (r[0] - t[0]).hypot(r[1] - t[1])
        })
        .sum())
}

/// [`evaluate_assignment`] for a raw matrix, which must be a permutation.
pub fn evaluate_assignment_matrix(
    a: &DMatrix<f64>,
    robot_positions: &[Position],
    task_positions: &[Position],
) -> Result<f64, EvaluationError> {
    let a = BinaryAssignment::from_matrix(a)?;
    evaluate_assignment(&a, robot_positions, task_positions)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NamedAssignment {
    pub name: String,
    pub assignment: BinaryAssignment,
}

impl NamedAssignment {
    pub fn new(name: impl Into<String>, assignment: BinaryAssignment) -> Self {
        Self { name: name.into(), assignment }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssignmentStats {
    pub name: String,
    pub mean_cost: f64,
    pub std_cost: f64,
    /// Runs in which this assignment was strictly cheaper than every other one.
    pub wins: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub runs: usize,
    pub seed: u64,
    pub rng: String,
    pub assignments: Vec<AssignmentStats>,
    /// `1 - mean[1] / mean[0]`: relative saving of the second assignment
    /// over the first (zero with fewer than two).
    pub reduction_ratio: f64,
    /// Mean of the per-run optimal cost.
    pub oracle_mean_cost: f64,
    /// Runs where some assignment beat the per-run optimum; always zero for a
    /// correct harness.
    pub lower_bound_violations: usize,
}

/// Per-run costs alongside the summary.
#[derive(Debug, Clone, PartialEq)]
pub struct McOutcome {
    pub report: McReport,
    /// `costs[run][k]` is the cost of assignment `k` in that run.
    pub costs: Vec<Vec<f64>>,
    pub oracle_costs: Vec<f64>,
}

/// Paired comparison: each run draws one realization and prices every
/// assignment on it.
pub fn monte_carlo_compare(
    s: &Scenario,
    assignments: &[NamedAssignment],
    runs: usize,
    seed: u64,
) -> Result<McOutcome, EvaluationError> {
    if runs == 0 {
        return Err(EvaluationError::NoRuns);
    }
    if assignments.is_empty() {
        return Err(EvaluationError::NoAssignments);
    }
    let m = s.size();
    if let Some(a) = assignments.iter().find(|a| a.assignment.size() != m) {
        return Err(EvaluationError::SizeMismatch {
            name: a.name.clone(),
            expected: m,
            got: a.assignment.size(),
        });
    }
    let sampler = RealizationSampler::new(s)?;
    let tasks = s.tasks();

    let mut costs = Vec::with_capacity(runs);
    let mut oracle_costs = Vec::with_capacity(runs);
    let mut wins = vec![0usize; assignments.len()];
    let mut violations = 0usize;
    for run in 0..runs {
        let mut rng = run_stream(seed, run as u64);
        let robots = sampler.sample(&mut rng);
        let row: Vec<f64> = assignments
            .iter()
            .map(|a| evaluate_assignment(&a.assignment, &robots, tasks))
            .collect::<Result<_, _>>()?;
        let optimum = optimal_cost(&build_cost_matrix(&robots, tasks)?)?;
        let tol = 1e-9 * (1.0 + optimum.abs());
        if row.iter().any(|&c| c < optimum - tol) {
            violations += 1;
        }
        if row.len() > 1 {
            for (k, &c) in row.iter().enumerate() {
                if row.iter().enumerate().all(|(l, &o)| l == k || c < o) {
                    wins[k] += 1;
                }
            }
        }
        oracle_costs.push(optimum);
        costs.push(row);
    }

    let stats: Vec<AssignmentStats> = assignments
        .iter()
        .enumerate()
        .map(|(k, a)| {
            let (mean_cost, std_cost) = mean_std(costs.iter().map(|r| r[k]), runs);
            AssignmentStats { name: a.name.clone(), mean_cost, std_cost, wins: wins[k] }
        })
        .collect();
    let reduction_ratio = match stats.as_slice() {
        [base, other, ..] if base.mean_cost > 0.0 => 1.0 - other.mean_cost / base.mean_cost,
        _ => 0.0,
    };
    let (oracle_mean_cost, _) = mean_std(oracle_costs.iter().copied(), runs);

    Ok(McOutcome {
        report: McReport {
            runs,
            seed,
            rng: RNG_NAME.to_string(),
            assignments: stats,
            reduction_ratio,
            oracle_mean_cost,
            lower_bound_violations: violations,
        },
        costs,
        oracle_costs,
    })
}

/// Exact optimum by enumeration for small problems, Hungarian otherwise.
fn optimal_cost(cost: &CostMatrix) -> Result<f64, LsapError> {
    if cost.size() <= 4 {
        Ok(lsap::brute_force_solve(cost)?.1)
    } else {
        Ok(lsap::solve(cost)?.total_cost)
    }
}

/// Mean and sample standard deviation, summed in iteration order. Deviations
/// are taken from the first value so constant input gives exactly zero.
fn mean_std(values: impl Iterator<Item = f64> + Clone, n: usize) -> (f64, f64) {
    let mean = values.clone().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let first = values.clone().next().unwrap_or(0.0);
    let (sum, sum_sq) = values.fold((0.0, 0.0), |(s, q), x| {
        let d = x - first;
        (s + d, q + d * d)
    });
    let ss = (sum_sq - sum * sum / n as f64).max(0.0);
    (mean, (ss / (n - 1) as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    const ISO: [[f64; 2]; 2] = [[1.25, 0.0], [0.0, 1.25]];
    const ZERO: [[f64; 2]; 2] = [[0.0, 0.0], [0.0, 0.0]];

    fn certain_scenario() -> Scenario {
        Scenario::from_positions(
            "certain",
            &[([0.0, 0.0], ZERO), ([4.0, 0.0], ZERO)],
            &[[3.0, 4.0], [4.0, 1.0]],
        )
        .unwrap()
    }

    #[test]
    fn zero_covariance_returns_means() {
        let s = certain_scenario();
        for seed in [0, 1, 99] {
            let p = sample_realization(&s, &mut run_stream(seed, 3)).unwrap();
            assert_eq!(p, vec![[0.0, 0.0], [4.0, 0.0]]);
        }
    }

    #[test]
    fn fixed_seed_is_bitwise_repeatable() {
        let s = Scenario::from_positions("r", &[([1.0, 5.0], ISO), ([2.0, 2.0], ISO)], &[[0.0, 0.0], [1.0, 1.0]])
            .unwrap();
        let a = sample_realization(&s, &mut run_stream(42, 7)).unwrap();
        let b = sample_realization(&s, &mut run_stream(42, 7)).unwrap();
        assert_eq!(a.iter().flatten().map(|x| x.to_bits()).collect::<Vec<_>>(),
                   b.iter().flatten().map(|x| x.to_bits()).collect::<Vec<_>>());
        let c = sample_realization(&s, &mut run_stream(42, 8)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn box_muller_inputs_stay_in_range() {
        struct Fixed(u64);
        impl RngCore for Fixed {
            fn next_u32(&mut self) -> u32 {
                self.0 as u32
            }
            fn next_u64(&mut self) -> u64 {
                self.0
            }
            fn fill_bytes(&mut self, _: &mut [u8]) {}
            fn try_fill_bytes(&mut self, _: &mut [u8]) -> Result<(), rand_chacha::rand_core::Error> {
                Ok(())
            }
        }
        // all-zero words would give ln(0) without the +1 shift
        let z = standard_normal_pair(&mut Fixed(0));
        assert!(z.iter().all(|v| v.is_finite()));
        let z = standard_normal_pair(&mut Fixed(u64::MAX));
        assert!(z.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn evaluate_simple() {
        let id = BinaryAssignment::identity(2);
        let pts = [[1.0, 1.0], [2.0, 3.0]];
        assert_eq!(evaluate_assignment(&id, &pts, &pts).unwrap(), 0.0);
        let one = BinaryAssignment::identity(1);
        assert_eq!(evaluate_assignment(&one, &[[0.0, 0.0]], &[[3.0, 4.0]]).unwrap(), 5.0);
    }

    #[test]
    fn evaluate_rejects_non_permutation() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 0.0]);
        assert!(matches!(
            evaluate_assignment_matrix(&m, &[[0.0, 0.0]; 2], &[[0.0, 0.0]; 2]),
            Err(EvaluationError::Lsap(LsapError::NotPermutation(_)))
        ));
    }

    #[test]
    fn self_comparison() {
        let s = Scenario::from_positions("r", &[([1.0, 5.0], ISO), ([2.0, 2.0], ISO)], &[[0.0, 0.0], [1.0, 1.0]])
            .unwrap();
        let a = BinaryAssignment::identity(2);
        let out = monte_carlo_compare(
            &s,
            &[NamedAssignment::new("a", a.clone()), NamedAssignment::new("b", a)],
            200,
            5,
        )
        .unwrap();
        assert_eq!(out.report.reduction_ratio, 0.0);
        assert!(out.report.assignments.iter().all(|s| s.wins == 0));
        assert_eq!(out.report.lower_bound_violations, 0);
    }

    #[test]
    fn certain_scenario_has_constant_costs() {
        let s = certain_scenario();
        let out = monte_carlo_compare(
            &s,
            &[
                NamedAssignment::new("id", BinaryAssignment::identity(2)),
                NamedAssignment::new("swap", BinaryAssignment::from_tasks(vec![1, 0]).unwrap()),
            ],
            50,
            11,
        )
        .unwrap();
        assert_eq!(out.report.assignments[0].std_cost, 0.0);
        assert_eq!(out.report.assignments[1].std_cost, 0.0);
        assert_eq!(out.report.assignments[0].mean_cost, 6.0);
        assert!(out.costs.iter().all(|r| r[0] == 6.0));
    }

    #[test]
    fn argument_errors() {
        let s = certain_scenario();
        let a = [NamedAssignment::new("id", BinaryAssignment::identity(2))];
        assert_eq!(monte_carlo_compare(&s, &a, 0, 1).unwrap_err(), EvaluationError::NoRuns);
        assert_eq!(monte_carlo_compare(&s, &[], 1, 1).unwrap_err(), EvaluationError::NoAssignments);
        let wrong = [NamedAssignment::new("three", BinaryAssignment::identity(3))];
        assert!(matches!(
            monte_carlo_compare(&s, &wrong, 1, 1),
            Err(EvaluationError::SizeMismatch { expected: 2, got: 3, .. })
        ));
    }
}
