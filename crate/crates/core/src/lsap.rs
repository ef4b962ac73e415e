//! Linear sum assignment.
//!
//! [`solve`] is a primal-dual Hungarian method: agent labels start at zero,
//! task labels at the column minimum, admissible (tight) edges are matched
//! by augmenting paths, and when no augmenting path exists the labels of the
//! marked agents and tasks are moved by half the minimum slack in opposite
//! directions, which keeps every matched and every already-admissible edge
//! tight while creating at least one new admissible edge. Real-valued costs
//! are handled with an admissibility tolerance.
//!
//! [`brute_force_solve`] enumerates all permutations and is used as an oracle.

use nalgebra::DMatrix;
use thiserror::Error;

/// Largest size accepted by [`brute_force_solve`].
pub const BRUTE_FORCE_MAX: usize = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LsapError {
    #[error("cost matrix is empty")]
    Empty,
    #[error("cost matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("cost matrix entry ({row}, {col}) is not finite: {value}")]
    NonFinite { row: usize, col: usize, value: f64 },
    #[error("brute force supports at most {max} agents, got {m}")]
    TooLarge { m: usize, max: usize },
    #[error("admissibility tolerance must be finite and non-negative, got {0}")]
    BadTolerance(f64),
    #[error("matrix is not a permutation matrix: {0}")]
    NotPermutation(String),
}

/// Square matrix of finite costs, `c[(i, j)]` being what agent `i` pays for task `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix(DMatrix<f64>);

impl CostMatrix {
    pub fn new(entries: DMatrix<f64>) -> Result<Self, LsapError> {
        let (rows, cols) = entries.shape();
        if rows == 0 || cols == 0 {
            return Err(LsapError::Empty);
        }
        if rows != cols {
            return Err(LsapError::NotSquare { rows, cols });
        }
        for j in 0..cols {
            for i in 0..rows {
                let value = entries[(i, j)];
                if !value.is_finite() {
                    return Err(LsapError::NonFinite { row: i, col: j, value });
                }
            }
        }
        Ok(Self(entries))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, LsapError> {
        let m = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(LsapError::NotSquare { rows: m, cols: bad.len() });
        }
        Self::new(DMatrix::from_fn(m, n, |i, j| rows[i][j]))
    }

    pub fn size(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.0[(row, col)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    pub fn min_entry(&self) -> f64 {
        self.0.min()
    }

    pub fn max_entry(&self) -> f64 {
        self.0.max()
    }

    /// Default admissibility tolerance, `1e-9 * (1 + max |c|)`.
    pub fn default_tolerance(&self) -> f64 {
        1e-9 * (1.0 + self.0.amax())
    }

    /// Sum of the entries selected by `assignment`.
    pub fn total(&self, assignment: &BinaryAssignment) -> f64 {
        assignment
            .pairs()
            .map(|(i, j)| self.0[(i, j)])
            .sum()
    }
}

/// A permutation, stored as the task index chosen by each agent.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryAssignment {
    task_of: Vec<usize>,
}

impl BinaryAssignment {
    pub fn from_tasks(task_of: Vec<usize>) -> Result<Self, LsapError> {
        let m = task_of.len();
        if m == 0 {
            return Err(LsapError::Empty);
        }
        let mut seen = vec![false; m];
        for (agent, &task) in task_of.iter().enumerate() {
            if task >= m {
                return Err(LsapError::NotPermutation(format!(
                    "agent {agent} assigned to task {task} out of range"
                )));
            }
            if std::mem::replace(&mut seen[task], true) {
                return Err(LsapError::NotPermutation(format!(
                    "task {task} assigned more than once"
                )));
            }
        }
        Ok(Self { task_of })
    }

    pub fn identity(m: usize) -> Self {
        Self { task_of: (0..m).collect() }
    }

    /// Accepts a square 0/1 matrix whose rows and columns each sum to one.
    pub fn from_matrix(matrix: &DMatrix<f64>) -> Result<Self, LsapError> {
        let (rows, cols) = matrix.shape();
        if rows != cols {
            return Err(LsapError::NotSquare { rows, cols });
        }
        let mut task_of = Vec::with_capacity(rows);
        for i in 0..rows {
            let mut chosen = None;
            for j in 0..cols {
                let x = matrix[(i, j)];
                if x == 1.0 {
                    if chosen.is_some() {
                        return Err(LsapError::NotPermutation(format!("row {i} has several ones")));
                    }
                    chosen = Some(j);
                } else if x != 0.0 {
                    return Err(LsapError::NotPermutation(format!(
                        "entry ({i}, {j}) = {x} is not 0 or 1"
                    )));
                }
            }
            task_of.push(
                chosen.ok_or_else(|| LsapError::NotPermutation(format!("row {i} has no one")))?,
            );
        }
        Self::from_tasks(task_of)
    }

    pub fn size(&self) -> usize {
        self.task_of.len()
    }

    pub fn task_of(&self, agent: usize) -> usize {
        self.task_of[agent]
    }

    pub fn tasks(&self) -> &[usize] {
        &self.task_of
    }

    /// `(agent, task)` pairs in agent order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.task_of.iter().copied().enumerate()
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        let m = self.size();
        DMatrix::from_fn(m, m, |i, j| if self.task_of[i] == j { 1.0 } else { 0.0 })
    }

    pub fn to_rows(&self) -> Vec<Vec<u8>> {
        let m = self.size();
        self.task_of
            .iter()
            .map(|&t| (0..m).map(|j| u8::from(j == t)).collect())
            .collect()
    }
}

/// Dual potentials certifying optimality: `v` per agent, `u` per task.
#[derive(Debug, Clone, PartialEq)]
pub struct DualLabels {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub eps: f64,
}

impl DualLabels {
    /// Largest violation of `v_i + u_j <= c_ij + eps` (zero when feasible).
    pub fn feasibility_violation(&self, cost: &CostMatrix) -> f64 {
        let m = cost.size();
        let mut worst = 0.0f64;
        for j in 0..m {
            for i in 0..m {
                let excess = self.v[i] + self.u[j] - cost.get(i, j) - self.eps;
                worst = worst.max(excess);
            }
        }
        worst
    }

    /// Largest `|v_i + u_j - c_ij|` over matched edges.
    pub fn slackness_gap(&self, cost: &CostMatrix, assignment: &BinaryAssignment) -> f64 {
        assignment
            .pairs()
            .map(|(i, j)| (self.v[i] + self.u[j] - cost.get(i, j)).abs())
            .fold(0.0, f64::max)
    }

    /// Both optimality conditions hold within `eps`, with `slop` absorbing
    /// floating-point drift in the label arithmetic.
    pub fn certifies(&self, cost: &CostMatrix, assignment: &BinaryAssignment, slop: f64) -> bool {
        self.feasibility_violation(cost) <= slop
            && self.slackness_gap(cost, assignment) <= self.eps + slop
    }

    pub fn dual_objective(&self) -> f64 {
        self.u.iter().sum::<f64>() + self.v.iter().sum::<f64>()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub assignment: BinaryAssignment,
    pub duals: DualLabels,
    /// Sum of matched entries of the matrix passed in.
    pub total_cost: f64,
}

/// Subtracts the minimum entry when it is negative. The returned offset is
/// the value subtracted (zero if the matrix was already non-negative).
pub fn shift_nonnegative(cost: &CostMatrix) -> (CostMatrix, f64) {
    let min = cost.min_entry();
    if min < 0.0 {
        (CostMatrix(cost.0.map(|c| c - min)), min)
    } else {
        (cost.clone(), 0.0)
    }
}

/// Validating entry point for raw matrices.
pub fn shift_nonnegative_raw(entries: DMatrix<f64>) -> Result<(CostMatrix, f64), LsapError> {
    CostMatrix::new(entries).map(|c| shift_nonnegative(&c))
}

/// Solves with the default tolerance.
pub fn solve(cost: &CostMatrix) -> Result<Solution, LsapError> {
    solve_with_tolerance(cost, cost.default_tolerance())
}

/// Minimum-cost perfect matching. Negative inputs are shifted internally and
/// the task labels shifted back, so the returned duals certify the matrix
/// as given.
pub fn solve_with_tolerance(cost: &CostMatrix, eps: f64) -> Result<Solution, LsapError> {
    if !eps.is_finite() || eps < 0.0 {
        return Err(LsapError::BadTolerance(eps));
    }
    let (shifted, offset) = shift_nonnegative(cost);
    let mut state = Hungarian::new(&shifted, eps);
    state.run();

    let assignment = BinaryAssignment::from_tasks(state.task_of_agent.iter().map(|t| t.expect("full match")).collect())?;
    let total_cost = cost.total(&assignment);
    let u = state.u.iter().map(|&u| u + offset).collect();
    Ok(Solution {
        assignment,
        duals: DualLabels { u, v: state.v, eps },
        total_cost,
    })
}

struct Hungarian<'a> {
    cost: &'a DMatrix<f64>,
    m: usize,
    eps: f64,
    u: Vec<f64>,
    v: Vec<f64>,
    task_of_agent: Vec<Option<usize>>,
    agent_of_task: Vec<Option<usize>>,
}

impl<'a> Hungarian<'a> {
    fn new(cost: &'a CostMatrix, eps: f64) -> Self {
        let m = cost.size();
        let cost = cost.matrix();
        let u = (0..m).map(|j| cost.column(j).min()).collect();
        Self {
            cost,
            m,
            eps,
            u,
            v: vec![0.0; m],
            task_of_agent: vec![None; m],
            agent_of_task: vec![None; m],
        }
    }

    fn reduced(&self, i: usize, j: usize) -> f64 {
        self.cost[(i, j)] - self.v[i] - self.u[j]
    }

    fn admissible(&self, i: usize, j: usize) -> bool {
        self.reduced(i, j) <= self.eps
    }

    fn run(&mut self) {
        self.greedy_match();
        let mut matched = self.task_of_agent.iter().filter(|t| t.is_some()).count();
        while matched < self.m {
            self.augment();
            matched += 1;
        }
    }

    /// Initial matching over admissible, unmatched edges.
    fn greedy_match(&mut self) {
        for i in 0..self.m {
            for j in 0..self.m {
                if self.agent_of_task[j].is_none() && self.admissible(i, j) {
                    self.task_of_agent[i] = Some(j);
                    self.agent_of_task[j] = Some(i);
                    break;
                }
            }
        }
    }

    /// Grows an alternating forest from every unmatched agent, updating the
    /// labels whenever the forest stalls, until one augmenting path is found
    /// and flipped.
    fn augment(&mut self) {
        let m = self.m;
        let mut agent_marked = vec![false; m];
        let mut task_parent: Vec<Option<usize>> = vec![None; m];
        let mut slack = vec![f64::INFINITY; m];
        let mut slack_agent = vec![0usize; m];
        let mut queue = Vec::with_capacity(m);

        for i in 0..m {
            if self.task_of_agent[i].is_none() {
                agent_marked[i] = true;
                queue.push(i);
            }
        }

        loop {
            while let Some(i) = queue.pop() {
                for j in 0..m {
                    if task_parent[j].is_some() {
                        continue;
                    }
                    let r = self.reduced(i, j);
                    if r <= self.eps {
                        task_parent[j] = Some(i);
                        match self.agent_of_task[j] {
                            None => return self.flip(j, &task_parent),
                            Some(k) => {
                                if !agent_marked[k] {
                                    agent_marked[k] = true;
                                    queue.push(k);
                                }
                            }
                        }
                    } else if r < slack[j] {
                        slack[j] = r;
                        slack_agent[j] = i;
                    }
                }
            }

            // No admissible edge leaves the marked set: move the labels.
            let min_slack = (0..m)
                .filter(|&j| task_parent[j].is_none())
                .map(|j| slack[j])
                .fold(f64::INFINITY, f64::min);
            debug_assert!(min_slack.is_finite());
            let delta = min_slack / 2.0;
            for i in 0..m {
                if agent_marked[i] {
                    self.v[i] += delta;
                } else {
                    self.v[i] -= delta;
                }
            }
            for j in 0..m {
                if task_parent[j].is_some() {
                    self.u[j] -= delta;
                } else {
                    self.u[j] += delta;
                    slack[j] -= 2.0 * delta;
                }
            }

            for j in 0..m {
                if task_parent[j].is_some() || slack[j] > self.eps {
                    continue;
                }
                task_parent[j] = Some(slack_agent[j]);
                match self.agent_of_task[j] {
                    None => return self.flip(j, &task_parent),
                    Some(k) => {
                        if !agent_marked[k] {
                            agent_marked[k] = true;
                            queue.push(k);
                        }
                    }
                }
            }
        }
    }

    fn flip(&mut self, mut task: usize, task_parent: &[Option<usize>]) {
        loop {
            let agent = task_parent[task].expect("task reached through the forest");
            let previous = self.task_of_agent[agent];
            self.task_of_agent[agent] = Some(task);
            self.agent_of_task[task] = Some(agent);
            match previous {
                Some(t) => task = t,
                None => break,
            }
        }
    }
}

/// Exhaustive search over all `m!` permutations. Ties go to the
/// lexicographically smallest task vector.
pub fn brute_force_solve(cost: &CostMatrix) -> Result<(BinaryAssignment, f64), LsapError> {
    let m = cost.size();
    if m > BRUTE_FORCE_MAX {
        return Err(LsapError::TooLarge { m, max: BRUTE_FORCE_MAX });
    }
    let mut perm: Vec<usize> = (0..m).collect();
    let mut best = perm.clone();
    let mut best_cost = f64::INFINITY;
    loop {
        let total: f64 = perm.iter().enumerate().map(|(i, &j)| cost.get(i, j)).sum();
        if total < best_cost {
            best_cost = total;
            best.copy_from_slice(&perm);
        }
        if !next_permutation(&mut perm) {
            break;
        }
    }
    Ok((BinaryAssignment { task_of: best }, best_cost))
}

/// Advances to the next permutation in lexicographic order; false at the last one.
pub(crate) fn next_permutation(perm: &mut [usize]) -> bool {
    let n = perm.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && perm[i - 1] >= perm[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while perm[j] <= perm[i - 1] {
        j -= 1;
    }
    perm.swap(i - 1, j);
    perm[i..].reverse();
    true
}
