//! Exact tabular MDP solution methods: Bellman backups, value iteration,
//! policy evaluation/iteration, and a linear-programming formulation solved
//! by a small dense two-phase simplex.

use thiserror::Error;

use crate::models::Mdp;

pub const LINSOLVE_TOL: f64 = 1e-10;
pub const VI_DEFAULT_TOL: f64 = 1e-8;
pub const LP_MATCH_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("invalid policy: {0}")]
    InvalidPolicy(String),
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error("problem too large: {0} states (limit 200)")]
    TooLarge(usize),
    #[error("linear program declared infeasible (solver bug)")]
    Infeasible,
    #[error("singular linear system")]
    Singular,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Policy {
    Det(Vec<usize>),
    Stoch(Vec<Vec<f64>>),
}

impl Policy {
    pub fn uniform(m: &Mdp) -> Policy {
        let k = m.n_actions();
        Policy::Stoch(vec![vec![1.0 / k as f64; k]; m.n_states()])
    }

    pub fn validate(&self, m: &Mdp) -> Result<(), SolverError> {
        match self {
            Policy::Det(actions) => {
                if actions.len() != m.n_states()
                    || actions.iter().any(|&a| a >= m.n_actions())
                {
                    return Err(SolverError::InvalidPolicy("action out of range".into()));
                }
            }
            Policy::Stoch(rows) => {
                if rows.len() != m.n_states() {
                    return Err(SolverError::InvalidPolicy("row count".into()));
                }
                for (s, row) in rows.iter().enumerate() {
                    let total: f64 = row.iter().sum();
                    if row.len() != m.n_actions()
                        || row.iter().any(|&x| x < 0.0)
                        || (total - 1.0).abs() > 1e-9
                    {
                        return Err(SolverError::InvalidPolicy(format!(
                            "row {s} sums to {total}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn prob(&self, s: usize, a: usize) -> f64 {
        match self {
            Policy::Det(actions) => {
                if actions[s] == a {
                    1.0
                } else {
                    0.0
                }
            }
            Policy::Stoch(rows) => rows[s][a],
        }
    }
}

/// One-step lookahead value of action `a` in state `s`.
pub fn q_value(m: &Mdp, v: &[f64], s: usize, a: usize) -> f64 {
    m.r[s][a]
        + m.gamma
            * m.p[s][a]
                .iter()
                .zip(v)
                .map(|(p, val)| p * val)
                .sum::<f64>()
}

/// (T*V)(s) = max_a [R(s,a) + gamma * sum P(s,a,s') V(s')].
pub fn bellman_optimal_backup(m: &Mdp, v: &[f64]) -> Vec<f64> {
    (0..m.n_states())
        .map(|s| {
            (0..m.n_actions())
                .map(|a| q_value(m, v, s, a))
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect()
}

pub fn sup_norm_diff(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[derive(Debug, Clone)]
pub struct ViResult {
    pub v: Vec<f64>,
    pub iterations: usize,
    /// a posteriori bound on ||V - V*||_inf from the final residual
    pub error_bound: f64,
}

pub fn value_iteration(m: &Mdp, tol: f64) -> ViResult {
    let mut v = vec![0.0; m.n_states()];
    let mut iterations = 0;
    loop {
        let next = bellman_optimal_backup(m, &v);
        let residual = sup_norm_diff(&next, &v);
        v = next;
        iterations += 1;
        if residual <= tol {
            return ViResult {
                v,
                iterations,
                error_bound: residual * m.gamma / (1.0 - m.gamma),
            };
        }
    }
}

/// Solve (I - gamma P^pi) V = R^pi by Gaussian elimination with partial
/// pivoting; the system is strictly diagonally dominant for gamma < 1.
pub fn policy_evaluation(m: &Mdp, pi: &Policy) -> Result<Vec<f64>, SolverError> {
    pi.validate(m)?;
    let n = m.n_states();
    let mut aug = vec![vec![0.0; n + 1]; n];
    for s in 0..n {
        for a in 0..m.n_actions() {
            let w = pi.prob(s, a);
            if w == 0.0 {
                continue;
            }
            for s2 in 0..n {
                aug[s][s2] -= w * m.gamma * m.p[s][a][s2];
            }
            aug[s][n] += w * m.r[s][a];
        }
        aug[s][s] += 1.0;
    }
    let v = solve_dense(&mut aug)?;
    // residual check against the untouched system
    let mut residual = 0.0f64;
    for s in 0..n {
        let mut lhs = v[s];
        let mut rhs = 0.0;
        for a in 0..m.n_actions() {
            let w = pi.prob(s, a);
            if w == 0.0 {
                continue;
            }
            rhs += w * m.r[s][a];
            for s2 in 0..n {
                lhs -= w * m.gamma * m.p[s][a][s2] * v[s2];
            }
        }
        residual = residual.max((lhs - rhs).abs());
    }
    assert!(residual <= LINSOLVE_TOL, "policy evaluation residual {residual}");
    Ok(v)
}

fn solve_dense(aug: &mut [Vec<f64>]) -> Result<Vec<f64>, SolverError> {
    let n = aug.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&a, &b| aug[a][col].abs().total_cmp(&aug[b][col].abs()))
            .unwrap();
        if aug[pivot][col].abs() < 1e-14 {
            return Err(SolverError::Singular);
        }
        aug.swap(col, pivot);
        for row in 0..n {
            if row == col {
                continue;
            }
            let factor = aug[row][col] / aug[col][col];
            if factor == 0.0 {
                continue;
            }
            for k in col..=n {
                aug[row][k] -= factor * aug[col][k];
            }
        }
    }
    Ok((0..n).map(|s| aug[s][n] / aug[s][s]).collect())
}

#[derive(Debug, Clone)]
pub struct GreedyResult {
    pub policy: Policy,
    /// per state, the full set of argmax-tied actions
    pub ties: Vec<Vec<usize>>,
}

/// Deterministic argmax policy; ties break toward the lowest action index.
pub fn greedy_policy(m: &Mdp, v: &[f64]) -> GreedyResult {
    let mut actions = Vec::with_capacity(m.n_states());
    let mut ties = Vec::with_capacity(m.n_states());
    for s in 0..m.n_states() {
        let q: Vec<f64> = (0..m.n_actions()).map(|a| q_value(m, v, s, a)).collect();
        let best = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let tied: Vec<usize> = (0..m.n_actions())
            .filter(|&a| (q[a] - best).abs() <= 1e-12)
            .collect();
        actions.push(tied[0]);
        ties.push(tied);
    }
    GreedyResult {
        policy: Policy::Det(actions),
        ties,
    }
}

#[derive(Debug, Clone)]
pub struct PiResult {
    pub policy: Policy,
    pub v: Vec<f64>,
    pub sweeps: usize,
}

pub fn policy_iteration(m: &Mdp) -> Result<PiResult, SolverError> {
    let mut pi = vec![0usize; m.n_states()];
    let mut sweeps = 0;
    loop {
        let v = policy_evaluation(m, &Policy::Det(pi.clone()))?;
        let improved = match greedy_policy(m, &v).policy {
            Policy::Det(a) => a,
            Policy::Stoch(_) => unreachable!(),
        };
        sweeps += 1;
        // keep the incumbent action when it is among the ties, so a stable
        // policy is recognized as such
        let mut next = improved.clone();
        for s in 0..m.n_states() {
            if (q_value(m, &v, s, pi[s]) - q_value(m, &v, s, next[s])).abs() <= 1e-12 {
                next[s] = pi[s];
            }
        }
        if next == pi {
            return Ok(PiResult {
                policy: Policy::Det(pi),
                v,
                sweeps,
            });
        }
        pi = next;
    }
}

/// Minimize sum_s alpha_s V(s) subject to V(s) >= R(s,a) + gamma sum P V.
pub fn lp_solve(m: &Mdp, weights: &[f64]) -> Result<Vec<f64>, SolverError> {
    let n = m.n_states();
    if n > 200 {
        return Err(SolverError::TooLarge(n));
    }
    if weights.len() != n || weights.iter().any(|&w| w <= 0.0) {
        return Err(SolverError::InvalidWeights("need one positive weight per state".into()));
    }
    // shift variables so the optimum is strictly positive: y = V + shift
    let r_min = m.r.iter().flatten().copied().fold(f64::INFINITY, f64::min);
    let shift = (-r_min / (1.0 - m.gamma)).max(0.0) + 1.0;
    // constraints: y_s - gamma sum P y' >= R(s,a) + shift (1 - gamma)
    let rows = n * m.n_actions();
    let mut a = Vec::with_capacity(rows);
    let mut b = Vec::with_capacity(rows);
    for s in 0..n {
        for act in 0..m.n_actions() {
            let mut row = vec![0.0; n];
            for s2 in 0..n {
                row[s2] -= m.gamma * m.p[s][act][s2];
            }
            row[s] += 1.0;
            a.push(row);
            b.push(m.r[s][act] + shift * (1.0 - m.gamma));
        }
    }
    let y = simplex_min_ge(weights, &a, &b)?;
    Ok(y.into_iter().map(|x| x - shift).collect())
}

/// min c.x  s.t.  A x >= b, x >= 0, by a dense two-phase primal simplex with
/// Bland's rule.
fn simplex_min_ge(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> Result<Vec<f64>, SolverError> {
    const PIVOT_TOL: f64 = 1e-9;
    let m = a.len();
    let n = c.len();
    // standard form with surplus variables: A x - s = b; flip rows with b < 0
    // so artificial variables start feasible.
    let total = n + m + m; // structural + surplus + artificial
    let mut t = vec![vec![0.0; total + 1]; m];
    for i in 0..m {
        let sign = if b[i] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            t[i][j] = sign * a[i][j];
        }
        t[i][n + i] = -sign;
        t[i][n + m + i] = 1.0;
        t[i][total] = sign * b[i];
    }
    let mut basis: Vec<usize> = (0..m).map(|i| n + m + i).collect();

    let run = |t: &mut Vec<Vec<f64>>, basis: &mut Vec<usize>, cost: &[f64], live: usize| {
        loop {
            // reduced costs
            let mut reduced = vec![0.0; live];
            for (j, r) in reduced.iter_mut().enumerate() {
                *r = cost.get(j).copied().unwrap_or(0.0);
                for i in 0..m {
                    *r -= cost.get(basis[i]).copied().unwrap_or(0.0) * t[i][j];
                }
            }
            // Bland: lowest index with negative reduced cost
            let Some(enter) = (0..live).find(|&j| reduced[j] < -PIVOT_TOL && !basis.contains(&j))
            else {
                return true;
            };
            // ratio test, Bland tie-break by basis variable index
            let mut leave: Option<usize> = None;
            let mut best = f64::INFINITY;
            for i in 0..m {
                if t[i][enter] > PIVOT_TOL {
                    let ratio = t[i][total] / t[i][enter];
                    let better = ratio < best - 1e-15
                        || ((ratio - best).abs() <= 1e-15
                            && leave.is_some_and(|l| basis[i] < basis[l]));
                    if better {
                        best = ratio;
                        leave = Some(i);
                    }
                }
            }
            let Some(leave) = leave else {
                return false; // unbounded
            };
            // pivot
            let pivot = t[leave][enter];
            for x in t[leave].iter_mut() {
                *x /= pivot;
            }
            for i in 0..m {
                if i != leave && t[i][enter].abs() > 0.0 {
                    let factor = t[i][enter];
                    for j in 0..=total {
                        t[i][j] -= factor * t[leave][j];
                    }
                }
            }
            basis[leave] = enter;
        }
    };

    // phase 1: minimize the artificial sum
    let mut phase1_cost = vec![0.0; total];
    for j in n + m..total {
        phase1_cost[j] = 1.0;
    }
    run(&mut t, &mut basis, &phase1_cost, total);
    let artificial_value: f64 = (0..m)
        .filter(|&i| basis[i] >= n + m)
        .map(|i| t[i][total])
        .sum();
    if artificial_value > 1e-7 {
        return Err(SolverError::Infeasible);
    }
    // drive leftover degenerate artificials out of the basis when possible
    for i in 0..m {
        if basis[i] >= n + m {
            if let Some(j) = (0..n + m).find(|&j| t[i][j].abs() > PIVOT_TOL) {
                let pivot = t[i][j];
                for x in t[i].iter_mut() {
                    *x /= pivot;
                }
                for i2 in 0..m {
                    if i2 != i && t[i2][j].abs() > 0.0 {
                        let factor = t[i2][j];
                        for k in 0..=total {
                            t[i2][k] -= factor * t[i][k];
                        }
                    }
                }
                basis[i] = j;
            }
        }
    }
    // phase 2 over structural + surplus columns only
    let mut phase2_cost = vec![0.0; n + m];
    phase2_cost[..n].copy_from_slice(c);
    if !run(&mut t, &mut basis, &phase2_cost, n + m) {
        return Err(SolverError::Infeasible);
    }
    let mut x = vec![0.0; n];
    for i in 0..m {
        if basis[i] < n {
            x[basis[i]] = t[i][total];
        }
    }
    Ok(x)
}

/// Q(s,a) = R(s,a) + gamma sum P(s,a,s') V(s').
pub fn q_from_v(m: &Mdp, v: &[f64]) -> Vec<Vec<f64>> {
    (0..m.n_states())
        .map(|s| (0..m.n_actions()).map(|a| q_value(m, v, s, a)).collect())
        .collect()
}
