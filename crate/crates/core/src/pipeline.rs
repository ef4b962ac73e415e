//! Stochastic task allocation.
//!
//! The joint robot state is expanded into sigma points, every sigma point is
//! allocated with the Hungarian solver, and the resulting permutation
//! matrices are averaged into a non-binary assignment `gamma_s` with a
//! covariance `p_gamma`. The interpretation policy turns that pair back into
//! one executable permutation by minimizing total weighted uncertainty
//! `sigma_s / gamma_s`.
//!
//! Matrices are vectorized column-major: `(i, j)` maps to `j * m + i`.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::lsap::{self, BinaryAssignment, CostMatrix, LsapError};
use crate::unscented::{self, GaussianVector, UnscentedError, UtParams};

/// Planar position in meters.
pub type Position = [f64; 2];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PipelineError {
    #[error("scenario needs at least one robot")]
    Empty,
    #[error("{robots} robots but {tasks} tasks")]
    CountMismatch { robots: usize, tasks: usize },
    #[error("robot {index}: {source}")]
    Robot { index: usize, source: UnscentedError },
    #[error("robot {0} state is not two-dimensional")]
    RobotDimension(usize),
    #[error("task {0} position is not finite")]
    NonFiniteTask(usize),
    #[error("task {index} covariance: {source}")]
    TaskCovariance { index: usize, source: UnscentedError },
    #[error("adjacency must be {m}x{m}")]
    AdjacencyShape { m: usize },
    #[error("adjacency diagonal entry {0} must be zero")]
    AdjacencySelfLoop(usize),
    #[error("ut parameters are for dimension {got}, joint state has {expected}")]
    ParamsDimension { expected: usize, got: usize },
    #[error("length {0} is not a perfect square")]
    NotSquareLength(usize),
    #[error("matrices differ in shape")]
    ShapeMismatch,
    #[error("matrix entry ({0}, {1}) is not finite")]
    NonFinite(usize, usize),
    #[error("floor must be positive and finite, got {0}")]
    BadFloor(f64),
    #[error("sentinel {sentinel} is below the required minimum {required}")]
    SentinelTooSmall { sentinel: f64, required: f64 },
    #[error(transparent)]
    Lsap(#[from] LsapError),
    #[error(transparent)]
    Unscented(#[from] UnscentedError),
}

/// Robot position beliefs, exact task positions and an optional communication graph.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    robots: Vec<GaussianVector>,
    tasks: Vec<Position>,
    adjacency: Option<Vec<Vec<bool>>>,
}

impl Scenario {
    pub fn new(
        name: impl Into<String>,
        robots: Vec<GaussianVector>,
        tasks: Vec<Position>,
        adjacency: Option<Vec<Vec<bool>>>,
    ) -> Result<Self, PipelineError> {
        if robots.is_empty() {
            return Err(PipelineError::Empty);
        }
        if robots.len() != tasks.len() {
            return Err(PipelineError::CountMismatch { robots: robots.len(), tasks: tasks.len() });
        }
        if let Some(i) = robots.iter().position(|r| r.dim() != 2) {
            return Err(PipelineError::RobotDimension(i));
        }
        if let Some(i) = tasks.iter().position(|t| !t[0].is_finite() || !t[1].is_finite()) {
            return Err(PipelineError::NonFiniteTask(i));
        }
        let m = robots.len();
        if let Some(adj) = &adjacency {
            if adj.len() != m || adj.iter().any(|row| row.len() != m) {
                return Err(PipelineError::AdjacencyShape { m });
            }
            if let Some(i) = (0..m).find(|&i| adj[i][i]) {
                return Err(PipelineError::AdjacencySelfLoop(i));
            }
        }
        Ok(Self { name: name.into(), robots, tasks, adjacency })
    }

    /// Builds a scenario from `(mean, 2x2 covariance)` pairs.
    pub fn from_positions(
        name: impl Into<String>,
        robots: &[(Position, [[f64; 2]; 2])],
        tasks: &[Position],
    ) -> Result<Self, PipelineError> {
        let robots = robots
            .iter()
            .enumerate()
            .map(|(index, (mean, cov))| {
                GaussianVector::new(
                    DVector::from_column_slice(mean),
                    DMatrix::from_row_slice(2, 2, &[cov[0][0], cov[0][1], cov[1][0], cov[1][1]]),
                )
                .map_err(|source| PipelineError::Robot { index, source })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(name, robots, tasks.to_vec(), None)
    }

    pub fn size(&self) -> usize {
        self.robots.len()
    }

    pub fn robots(&self) -> &[GaussianVector] {
        &self.robots
    }

    pub fn tasks(&self) -> &[Position] {
        &self.tasks
    }

    pub fn robot_means(&self) -> Vec<Position> {
        self.robots.iter().map(|r| [r.mean()[0], r.mean()[1]]).collect()
    }

    pub fn adjacency(&self) -> Option<&[Vec<bool>]> {
        self.adjacency.as_deref()
    }

    /// Neighbor lists derived from the adjacency matrix; every robot is
    /// isolated when no graph was supplied.
    pub fn neighbors(&self) -> Vec<Vec<usize>> {
        match &self.adjacency {
            Some(adj) => adj
                .iter()
                .map(|row| row.iter().enumerate().filter(|(_, &e)| e).map(|(j, _)| j).collect())
                .collect(),
            None => vec![Vec::new(); self.size()],
        }
    }
}

/// Task states with their covariances.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskSet {
    pub tasks: Vec<GaussianVector>,
}

impl TaskSet {
    pub fn positions(&self) -> Vec<Position> {
        self.tasks.iter().map(|t| [t.mean()[0], t.mean()[1]]).collect()
    }
}

/// Tasks at the scenario positions with zero covariance.
pub fn generate_tasks(s: &Scenario) -> TaskSet {
    let tasks = s
        .tasks
        .iter()
        .map(|t| GaussianVector::from_parts(DVector::from_column_slice(t), DMatrix::zeros(2, 2)))
        .collect();
    TaskSet { tasks }
}

/// Tasks at the scenario positions with caller-supplied covariances.
pub fn generate_tasks_with_covariances(s: &Scenario, covs: &[DMatrix<f64>]) -> Result<TaskSet, PipelineError> {
    if covs.len() != s.size() {
        return Err(PipelineError::CountMismatch { robots: s.size(), tasks: covs.len() });
    }
    let tasks = s
        .tasks
        .iter()
        .zip(covs)
        .enumerate()
        .map(|(index, (t, cov))| {
            GaussianVector::new(DVector::from_column_slice(t), cov.clone())
                .map_err(|source| PipelineError::TaskCovariance { index, source })
        })
        .collect::<Result<_, _>>()?;
    Ok(TaskSet { tasks })
}

fn distance(a: &Position, b: &Position) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Euclidean distance from every robot to every task.
pub fn build_cost_matrix(robots: &[Position], tasks: &[Position]) -> Result<CostMatrix, PipelineError> {
    if robots.len() != tasks.len() {
        return Err(PipelineError::CountMismatch { robots: robots.len(), tasks: tasks.len() });
    }
    let m = robots.len();
    Ok(CostMatrix::new(DMatrix::from_fn(m, m, |i, j| distance(&robots[i], &tasks[j])))?)
}

/// Stacked robot means `(x1, y1, x2, y2, ...)` with block-diagonal covariance.
pub fn joint_state(s: &Scenario) -> GaussianVector {
    let m = s.size();
    let mut mean = DVector::zeros(2 * m);
    let mut cov = DMatrix::zeros(2 * m, 2 * m);
    for (k, r) in s.robots.iter().enumerate() {
        mean.rows_mut(2 * k, 2).copy_from(r.mean());
        cov.view_mut((2 * k, 2 * k), (2, 2)).copy_from(r.cov());
    }
    GaussianVector::from_parts(mean, cov)
}

fn unstack(x: &DVector<f64>) -> Vec<Position> {
    x.as_slice().chunks_exact(2).map(|c| [c[0], c[1]]).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    pub assignment: BinaryAssignment,
    pub total_cost: f64,
}

/// Hungarian allocation on the robot means.
pub fn deterministic_allocate(s: &Scenario) -> Result<Allocation, PipelineError> {
    let cost = build_cost_matrix(&s.robot_means(), &s.tasks)?;
    let sol = lsap::solve(&cost)?;
    Ok(Allocation { assignment: sol.assignment, total_cost: sol.total_cost })
}

/// Mean cost matrix and the covariance of its column-major vectorization.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticCost {
    pub mean_cost: DMatrix<f64>,
    pub cov: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StochasticAssignment {
    pub gamma_s: DMatrix<f64>,
    pub p_gamma: DMatrix<f64>,
    pub sigma_s: DMatrix<f64>,
    /// Assignment of each sigma point, in sigma-point order.
    pub per_point: Vec<BinaryAssignment>,
    pub weights_mean: Vec<f64>,
    pub weights_cov: Vec<f64>,
    pub cost: StochasticCost,
    pub params: UtParams,
}

impl StochasticAssignment {
    pub fn size(&self) -> usize {
        self.gamma_s.nrows()
    }
}

/// Runs the Hungarian solver on every sigma point of the joint robot state
/// and aggregates the permutation matrices.
///
/// Negative variances on the diagonal of `p_gamma` (possible only with a
/// negative centre covariance weight, or as rounding noise) are clamped to
/// zero before `sigma_s` is read off it.
pub fn stochastic_allocate(s: &Scenario, p: &UtParams) -> Result<StochasticAssignment, PipelineError> {
    let m = s.size();
    let joint = joint_state(s);
    if p.dim() != joint.dim() {
        return Err(PipelineError::ParamsDimension { expected: joint.dim(), got: p.dim() });
    }
    let sigma = unscented::generate_sigma_points(&joint, p)?;
    let n = sigma.len();

    let mut per_point = Vec::with_capacity(n);
    let mut gamma_vecs = DMatrix::zeros(n, m * m);
    let mut cost_vecs = DMatrix::zeros(n, m * m);
    for k in 0..n {
        let robots = unstack(&sigma.point(k));
        let cost = build_cost_matrix(&robots, &s.tasks)?;
        let sol = lsap::solve(&cost)?;
        gamma_vecs.set_row(k, &vec_column_major(&sol.assignment.to_matrix()).transpose());
        cost_vecs.set_row(k, &vec_column_major(cost.matrix()).transpose());
        per_point.push(sol.assignment);
    }

    let gamma_moments = unscented::reconstruct_moments(&gamma_vecs, p)?;
    let cost_moments = unscented::reconstruct_moments(&cost_vecs, p)?;

    let gamma_s = unvec_column_major(gamma_moments.mean())?;
    let mut p_gamma = gamma_moments.cov().clone();
    for d in 0..m * m {
        if p_gamma[(d, d)] < 0.0 {
            p_gamma[(d, d)] = 0.0;
        }
    }
    let sigma_s = unvec_column_major(&p_gamma.diagonal())?;

    Ok(StochasticAssignment {
        gamma_s,
        p_gamma,
        sigma_s,
        per_point,
        weights_mean: p.weights_mean().to_vec(),
        weights_cov: p.weights_cov().to_vec(),
        cost: StochasticCost {
            mean_cost: unvec_column_major(cost_moments.mean())?,
            cov: cost_moments.cov().clone(),
        },
        params: p.clone(),
    })
}

/// Stacks the columns of a square matrix.
pub fn vec_column_major(m: &DMatrix<f64>) -> DVector<f64> {
    // nalgebra storage is already column-major
    DVector::from_column_slice(m.as_slice())
}

pub fn unvec_column_major(v: &DVector<f64>) -> Result<DMatrix<f64>, PipelineError> {
    let len = v.len();
    let m = (len as f64).sqrt().round() as usize;
    if m * m != len {
        return Err(PipelineError::NotSquareLength(len));
    }
    Ok(DMatrix::from_column_slice(m, m, v.as_slice()))
}

/// Settings of the interpretation policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterpretConfig {
    /// Cells with `gamma_s` below this carry no support.
    pub floor: f64,
    /// Cost given to unsupported cells; `None` picks `m * (max finite Q + 1)`.
    pub sentinel: Option<f64>,
}

impl Default for InterpretConfig {
    fn default() -> Self {
        Self { floor: 1e-6, sentinel: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedInverse {
    pub q: DMatrix<f64>,
    /// True where `gamma_s >= floor`.
    pub supported: DMatrix<bool>,
    pub sentinel: f64,
}

/// `Q[i, j] = sigma_s[i, j] / gamma_s[i, j]` on supported cells, the sentinel elsewhere.
pub fn weighted_inverse_matrix(
    gamma_s: &DMatrix<f64>,
    sigma_s: &DMatrix<f64>,
    config: &InterpretConfig,
) -> Result<WeightedInverse, PipelineError> {
    if gamma_s.shape() != sigma_s.shape() {
        return Err(PipelineError::ShapeMismatch);
    }
    let (rows, cols) = gamma_s.shape();
    if rows != cols {
        return Err(PipelineError::Lsap(LsapError::NotSquare { rows, cols }));
    }
    if !(config.floor > 0.0 && config.floor.is_finite()) {
        return Err(PipelineError::BadFloor(config.floor));
    }
    for j in 0..cols {
        for i in 0..rows {
            if !gamma_s[(i, j)].is_finite() || !sigma_s[(i, j)].is_finite() {
                return Err(PipelineError::NonFinite(i, j));
            }
        }
    }
    let m = rows;
    let supported = gamma_s.map(|g| g >= config.floor);
    let mut q = DMatrix::zeros(m, m);
    let mut max_finite = 0.0f64;
    for j in 0..m {
        for i in 0..m {
            if supported[(i, j)] {
                let x = sigma_s[(i, j)] / gamma_s[(i, j)];
                q[(i, j)] = x;
                max_finite = max_finite.max(x);
            }
        }
    }
    let required = m as f64 * max_finite;
    let sentinel = match config.sentinel {
        None => m as f64 * (max_finite + 1.0),
        Some(s) if !s.is_finite() || s < required => {
            return Err(PipelineError::SentinelTooSmall { sentinel: s, required })
        }
        Some(s) => s,
    };
    for j in 0..m {
        for i in 0..m {
            if !supported[(i, j)] {
                q[(i, j)] = sentinel;
            }
        }
    }
    Ok(WeightedInverse { q, supported, sentinel })
}

/// The executable assignment together with the matrix it was chosen from.
#[derive(Debug, Clone, PartialEq)]
pub struct Interpretation {
    pub assignment: BinaryAssignment,
    pub weighted_inverse: WeightedInverse,
    /// Sum of `Q` over the chosen cells.
    pub total: f64,
    /// Chosen cells without support.
    pub sentinel_cells: usize,
    /// Set when no permutation avoids unsupported cells.
    pub low_confidence: bool,
}

pub fn interpret(sa: &StochasticAssignment, config: &InterpretConfig) -> Result<Interpretation, PipelineError> {
    interpret_matrices(&sa.gamma_s, &sa.sigma_s, config)
}

/// Interpretation policy applied to bare `(gamma_s, sigma_s)` matrices.
pub fn interpret_matrices(
    gamma_s: &DMatrix<f64>,
    sigma_s: &DMatrix<f64>,
    config: &InterpretConfig,
) -> Result<Interpretation, PipelineError> {
    let wi = weighted_inverse_matrix(gamma_s, sigma_s, config)?;
    let cost = CostMatrix::new(wi.q.clone())?;
    let sol = lsap::solve(&cost)?;
    let sentinel_cells = sol.assignment.pairs().filter(|&(i, j)| !wi.supported[(i, j)]).count();
    Ok(Interpretation {
        assignment: sol.assignment,
        total: sol.total_cost,
        sentinel_cells,
        low_confidence: sentinel_cells > 0,
        weighted_inverse: wi,
    })
}
