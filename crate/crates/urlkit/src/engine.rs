//! Deterministic simulation of asynchronous fixed-point iteration with stale
//! reads, convergence-box monitoring, and tabular stochastic updates (TD(0),
//! Q-learning, linear TD, Monte Carlo returns) under step-size schedules.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::models::Mdp;
use crate::solvers::Policy;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("invalid schedule parameter: {0}")]
    BadSchedule(String),
    #[error("read set references unknown component {0}")]
    BadReadSet(usize),
    #[error("supplied fixed point is inconsistent (residual {0})")]
    BadFixedPoint(f64),
    #[error("iteration cap exceeded")]
    CapExceeded,
    #[error("average-reward mode needs a horizon on a non-episodic model")]
    NeedsHorizon,
    #[error("unsupported rate family `{0}`")]
    BadRate(String),
}

// ---------------------------------------------------------------------------
// Schedules
// ---------------------------------------------------------------------------

/// Per-component update times and staleness offsets, fully determined by the
/// seed. `updates[t][i]` says whether component i recomputes at time t;
/// `tau[t][i][j]` is the time whose value of component j it reads.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub n: usize,
    pub horizon: usize,
    pub p_update: f64,
    pub max_staleness: usize,
    pub seed: u64,
    pub updates: Vec<Vec<bool>>,
    pub tau: Vec<Vec<Vec<usize>>>,
}

impl Schedule {
    /// Longest gap between consecutive updates of any single component.
    pub fn max_update_gap(&self) -> usize {
        let mut worst = 0;
        for i in 0..self.n {
            let mut last: Option<usize> = None;
            let mut prev_edge = 0;
            for t in 0..self.horizon {
                if self.updates[t][i] {
                    worst = worst.max(t - prev_edge);
                    last = Some(t);
                    prev_edge = t;
                }
            }
            worst = worst.max(self.horizon - last.map_or(0, |t| t));
        }
        worst
    }
}

pub fn make_schedule(
    n: usize,
    horizon: usize,
    p_update: f64,
    max_staleness: usize,
    seed: u64,
) -> Result<Schedule, EngineError> {
    if !(0.0..=1.0).contains(&p_update) || p_update <= 0.0 {
        return Err(EngineError::BadSchedule(format!("p_update {p_update}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut updates = Vec::with_capacity(horizon);
    let mut tau = Vec::with_capacity(horizon);
    for t in 0..horizon {
        updates.push((0..n).map(|_| rng.gen_range(0.0..1.0) < p_update).collect());
        tau.push(
            (0..n)
                .map(|_| {
                    (0..n)
                        .map(|_| t.saturating_sub(rng.gen_range(0..=max_staleness)))
                        .collect()
                })
                .collect(),
        );
    }
    Ok(Schedule {
        n,
        horizon,
        p_update,
        max_staleness,
        seed,
        updates,
        tau,
    })
}

/// A schedule where one component never updates; every other component is
/// synchronous. Used to exhibit starvation.
pub fn starved_schedule(n: usize, horizon: usize, starved: usize) -> Schedule {
    Schedule {
        n,
        horizon,
        p_update: 1.0,
        max_staleness: 0,
        seed: 0,
        updates: (0..horizon)
            .map(|_| (0..n).map(|i| i != starved).collect())
            .collect(),
        tau: (0..horizon).map(|t| vec![vec![t; n]; n]).collect(),
    }
}

// ---------------------------------------------------------------------------
// Traces and the asynchronous recursion
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub t: usize,
    pub component: usize,
    pub value: f64,
    pub residual_sup: f64,
    pub box_index: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub rows: Vec<TraceRow>,
    /// x(t) for t = 0.. (snapshot after each committed step)
    pub snapshots: Vec<Vec<f64>>,
    pub converged: bool,
    pub final_x: Vec<f64>,
}

fn run_async<F>(
    fs: &[F],
    read_sets: Option<&[Vec<usize>]>,
    x0: &[f64],
    schedule: &Schedule,
    tol: f64,
) -> Result<Trace, EngineError>
where
    F: Fn(&[f64]) -> f64,
{
    let n = fs.len();
    assert_eq!(n, schedule.n, "schedule must cover all components");
    assert_eq!(n, x0.len());
    if let Some(sets) = read_sets {
        for set in sets {
            if let Some(&bad) = set.iter().find(|&&j| j >= n) {
                return Err(EngineError::BadReadSet(bad));
            }
        }
    }
    let depth = schedule.max_staleness + 1;
    // ring[i][t % depth] = x_i(t) for the last `depth` time points
    let mut ring: Vec<Vec<f64>> = (0..n).map(|i| vec![x0[i]; depth]).collect();
    let mut x: Vec<f64> = x0.to_vec();
    let mut rows = Vec::new();
    let mut snapshots = vec![x.clone()];
    let mut converged = false;
    for t in 0..schedule.horizon {
        let mut writes: Vec<(usize, f64)> = Vec::new();
        for i in 0..n {
            if !schedule.updates[t][i] {
                continue;
            }
            let mut view = vec![f64::NAN; n];
            let visible: Box<dyn Iterator<Item = usize>> = match read_sets {
                Some(sets) => Box::new(sets[i].iter().copied()),
                None => Box::new(0..n),
            };
            for j in visible {
                view[j] = ring[j][schedule.tau[t][i][j] % depth];
            }
            writes.push((i, fs[i](&view)));
        }
        // barrier: commit in component order
        for &(i, value) in &writes {
            x[i] = value;
        }
        for i in 0..n {
            ring[i][(t + 1) % depth] = x[i];
        }
        let residual = true_residual(fs, read_sets, &x);
        for &(i, value) in &writes {
            rows.push(TraceRow {
                t,
                component: i,
                value,
                residual_sup: residual,
                box_index: 0,
            });
        }
        snapshots.push(x.clone());
        if residual <= tol {
            converged = true;
            break;
        }
    }
    Ok(Trace {
        rows,
        snapshots,
        converged,
        final_x: x,
    })
}

fn true_residual<F>(fs: &[F], read_sets: Option<&[Vec<usize>]>, x: &[f64]) -> f64
where
    F: Fn(&[f64]) -> f64,
{
    let n = fs.len();
    (0..n)
        .map(|i| {
            let arg: Vec<f64> = match read_sets {
                None => x.to_vec(),
                Some(sets) => {
                    let mut view = vec![f64::NAN; n];
                    for &j in &sets[i] {
                        view[j] = x[j];
                    }
                    view
                }
            };
            (fs[i](&arg) - x[i]).abs()
        })
        .fold(0.0, f64::max)
}

/// Alg.-style asynchronous recursion: frozen values at non-update times,
/// stale reads per the schedule, stop on sup-residual <= tol.
pub fn async_fixed_point<F>(
    fs: &[F],
    x0: &[f64],
    schedule: &Schedule,
    tol: f64,
) -> Result<Trace, EngineError>
where
    F: Fn(&[f64]) -> f64,
{
    run_async(fs, None, x0, schedule, tol)
}

/// Variant where each component reads only its declared read-set; positions
/// outside the read-set are poisoned so an out-of-contract read is loud.
pub fn async_final_coalgebra<F>(
    components: &[(F, Vec<usize>)],
    x0: &[f64],
    schedule: &Schedule,
    tol: f64,
) -> Result<Trace, EngineError>
where
    F: Fn(&[f64]) -> f64,
{
    let fs: Vec<&F> = components.iter().map(|(f, _)| f).collect();
    let sets: Vec<Vec<usize>> = components.iter().map(|(_, s)| s.clone()).collect();
    run_async(
        &fs.iter().map(|f| move |x: &[f64]| f(x)).collect::<Vec<_>>(),
        Some(&sets),
        x0,
        schedule,
        tol,
    )
}

// ---------------------------------------------------------------------------
// Convergence boxes
// ---------------------------------------------------------------------------

const BOX_CAP: usize = 200;

#[derive(Debug, Clone)]
pub struct ActReport {
    /// box index per snapshot (cumulative maximum, hence nondecreasing)
    pub box_index: Vec<usize>,
    pub grows: bool,
    pub starved: Vec<usize>,
    pub initial_radius: f64,
}

/// Instantiates the nested boxes X(k) = {x : ||x - x*||_inf <= gamma^k r0}
/// and reports how deep the iterates go, plus starvation (components with no
/// update in the final tenth of the run).
pub fn verify_act_conditions<F>(
    fs: &[F],
    trace: &Trace,
    x_star: &[f64],
    gamma: f64,
    tol: f64,
) -> Result<ActReport, EngineError>
where
    F: Fn(&[f64]) -> f64,
{
    let fixed_residual = true_residual(fs, None, x_star);
    if fixed_residual > tol.max(1e-9) {
        return Err(EngineError::BadFixedPoint(fixed_residual));
    }
    let err = |x: &[f64]| crate::solvers::sup_norm_diff(x, x_star);
    let r0 = err(&trace.snapshots[0]);
    let mut box_index = Vec::with_capacity(trace.snapshots.len());
    let mut running = 0usize;
    for snap in &trace.snapshots {
        let e = err(snap);
        let k = if r0 == 0.0 || e == 0.0 {
            BOX_CAP
        } else {
            let mut k = 0usize;
            let mut radius = r0;
            while k < BOX_CAP && e <= radius * gamma {
                radius *= gamma;
                k += 1;
            }
            k
        };
        running = running.max(k);
        box_index.push(running);
    }
    let len = box_index.len();
    let grows = len < 2 || box_index[len - 1] > box_index[len / 2] || box_index[len / 2] >= BOX_CAP;

    let t_end = trace.snapshots.len().saturating_sub(1);
    let cutoff = t_end.saturating_sub(t_end / 10).saturating_sub(1);
    let n = x_star.len();
    let mut seen = vec![false; n];
    for row in &trace.rows {
        if row.t >= cutoff {
            seen[row.component] = true;
        }
    }
    let starved = (0..n).filter(|&i| !seen[i]).collect();
    Ok(ActReport {
        box_index,
        grows,
        starved,
        initial_radius: r0,
    })
}

/// Copy the verified box indices onto the trace rows.
pub fn annotate_trace(trace: &mut Trace, report: &ActReport) {
    for row in trace.rows.iter_mut() {
        row.box_index = report.box_index[(row.t + 1).min(report.box_index.len() - 1)];
    }
}

// ---------------------------------------------------------------------------
// Bellman components
// ---------------------------------------------------------------------------

/// Per-state Bellman backup closures; each skips zero-probability successors
/// so it touches only its true read-set.
pub fn bellman_components(m: &Mdp) -> Vec<impl Fn(&[f64]) -> f64 + '_> {
    (0..m.n_states())
        .map(|s| {
            move |v: &[f64]| {
                (0..m.n_actions())
                    .map(|a| {
                        m.r[s][a]
                            + m.gamma
                                * m.p[s][a]
                                    .iter()
                                    .enumerate()
                                    .filter(|(_, &p)| p > 0.0)
                                    .map(|(s2, &p)| p * v[s2])
                                    .sum::<f64>()
                    })
                    .fold(f64::NEG_INFINITY, f64::max)
            }
        })
        .collect()
}

/// Read-set of state s: successors reachable under some action.
pub fn bellman_read_sets(m: &Mdp) -> Vec<Vec<usize>> {
    (0..m.n_states())
        .map(|s| {
            (0..m.n_states())
                .filter(|&s2| (0..m.n_actions()).any(|a| m.p[s][a][s2] > 0.0))
                .collect()
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Step-size schedules
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub enum RateSchedule {
    /// a / (b + t^p), t counted from 1
    Harmonic { a: f64, b: f64, p: f64 },
    Constant(f64),
    /// 1 / (1 + visit count)
    PerVisit,
}

impl RateSchedule {
    /// Robbins-Monro: sum alpha = inf and sum alpha^2 < inf. For the
    /// harmonic family that is exactly p in (0.5, 1].
    pub fn rm_valid(&self) -> bool {
        match self {
            RateSchedule::Harmonic { p, .. } => *p > 0.5 && *p <= 1.0,
            RateSchedule::Constant(_) => false,
            RateSchedule::PerVisit => true,
        }
    }

    /// `t` is the 1-based global step, `visits` the prior visit count of the
    /// updated entry.
    pub fn alpha(&self, t: usize, visits: usize) -> f64 {
        match self {
            RateSchedule::Harmonic { a, b, p } => a / (b + (t as f64).powf(*p)),
            RateSchedule::Constant(c) => *c,
            RateSchedule::PerVisit => 1.0 / (1.0 + visits as f64),
        }
    }

    pub fn from_json(v: &serde_json::Value) -> Result<RateSchedule, EngineError> {
        let family = v
            .get("family")
            .and_then(|x| x.as_str())
            .ok_or_else(|| EngineError::BadRate("missing family".into()))?;
        let num = |key: &str, default: f64| v.get(key).and_then(|x| x.as_f64()).unwrap_or(default);
        match family {
            "harmonic" => Ok(RateSchedule::Harmonic {
                a: num("a", 1.0),
                b: num("b", 0.0),
                p: num("p", 1.0),
            }),
            "constant" => Ok(RateSchedule::Constant(num("c", 0.1))),
            "per-visit" => Ok(RateSchedule::PerVisit),
            other => Err(EngineError::BadRate(other.to_string())),
        }
    }
}

// ---------------------------------------------------------------------------
// Sampled trajectories
// ---------------------------------------------------------------------------

fn sample_index(rng: &mut ChaCha8Rng, weights: &[f64]) -> usize {
    let mut u: f64 = rng.gen_range(0.0..1.0);
    for (i, w) in weights.iter().enumerate() {
        u -= w;
        if u < 0.0 {
            return i;
        }
    }
    weights.len() - 1
}

fn sample_action(rng: &mut ChaCha8Rng, pi: &Policy, s: usize, k: usize) -> usize {
    match pi {
        Policy::Det(actions) => actions[s],
        Policy::Stoch(rows) => {
            let _ = k;
            sample_index(rng, &rows[s])
        }
    }
}

const EPISODE_LEN: usize = 50;

/// TD(0): V(s) += alpha (r + gamma V(s') - V(s)) along sampled on-policy
/// transitions; episodes of fixed length restart from a uniformly random
/// state so every entry keeps being visited.
pub fn td0_learn(m: &Mdp, pi: &Policy, steps: usize, rate: &RateSchedule, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = m.n_states();
    let mut v = vec![0.0; n];
    let mut visits = vec![0usize; n];
    let mut s = rng.gen_range(0..n);
    for t in 1..=steps {
        let a = sample_action(&mut rng, pi, s, m.n_actions());
        let s2 = sample_index(&mut rng, &m.p[s][a]);
        let r = m.r[s][a];
        let alpha = rate.alpha(t, visits[s]);
        let delta = r + m.gamma * v[s2] - v[s];
        v[s] += alpha * delta;
        visits[s] += 1;
        s = if t % EPISODE_LEN == 0 { rng.gen_range(0..n) } else { s2 };
    }
    v
}

#[derive(Debug, Clone)]
pub struct QLearnResult {
    pub q: Vec<Vec<f64>>,
    pub starved: Vec<(usize, usize)>,
}

/// Off-policy Q-learning along a behavior-policy trajectory.
pub fn q_learning(
    m: &Mdp,
    behavior: &Policy,
    steps: usize,
    rate: &RateSchedule,
    seed: u64,
) -> QLearnResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = m.n_states();
    let k = m.n_actions();
    let mut q = vec![vec![0.0; k]; n];
    let mut visits = vec![vec![0usize; k]; n];
    let mut s = rng.gen_range(0..n);
    for t in 1..=steps {
        let a = sample_action(&mut rng, behavior, s, k);
        let s2 = sample_index(&mut rng, &m.p[s][a]);
        let r = m.r[s][a];
        let alpha = rate.alpha(t, visits[s][a]);
        let best = q[s2].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        q[s][a] = (1.0 - alpha) * q[s][a] + alpha * (r + m.gamma * best);
        visits[s][a] += 1;
        s = if t % EPISODE_LEN == 0 { rng.gen_range(0..n) } else { s2 };
    }
    let starved = (0..n)
        .flat_map(|s| (0..k).map(move |a| (s, a)))
        .filter(|&(s, a)| visits[s][a] == 0)
        .collect();
    QLearnResult { q, starved }
}

/// TD(0) with linear value approximation: theta += alpha delta phi(s).
pub fn td0_linear(
    m: &Mdp,
    pi: &Policy,
    features: &[Vec<f64>],
    steps: usize,
    rate: &RateSchedule,
    seed: u64,
) -> Vec<f64> {
    assert_eq!(features.len(), m.n_states());
    let d = features[0].len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = m.n_states();
    let mut theta = vec![0.0; d];
    let mut visits = vec![0usize; n];
    let value = |theta: &[f64], s: usize| -> f64 {
        features[s].iter().zip(theta).map(|(x, w)| x * w).sum()
    };
    let mut s = rng.gen_range(0..n);
    for t in 1..=steps {
        let a = sample_action(&mut rng, pi, s, m.n_actions());
        let s2 = sample_index(&mut rng, &m.p[s][a]);
        let alpha = rate.alpha(t, visits[s]);
        let delta = m.r[s][a] + m.gamma * value(&theta, s2) - value(&theta, s);
        for (w, x) in theta.iter_mut().zip(&features[s]) {
            *w += alpha * delta * x;
        }
        visits[s] += 1;
        s = if t % EPISODE_LEN == 0 { rng.gen_range(0..n) } else { s2 };
    }
    theta
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum McMode {
    Discounted,
    Average,
}

#[derive(Debug, Clone)]
pub struct McReport {
    pub mean: f64,
    pub std: f64,
    pub ci95_half: f64,
    pub episodes: usize,
}

fn is_absorbing(m: &Mdp, s: usize) -> bool {
    (0..m.n_actions()).all(|a| m.p[s][a][s] >= 1.0 - 1e-12 && m.r[s][a] == 0.0)
}

/// Monte Carlo return estimate from a fixed start state. Episodes stop at a
/// zero-reward absorbing state or at the horizon.
pub fn monte_carlo_eval(
    m: &Mdp,
    pi: &Policy,
    start: usize,
    episodes: usize,
    mode: McMode,
    horizon: Option<usize>,
    seed: u64,
) -> Result<McReport, EngineError> {
    let horizon = match (mode, horizon) {
        (_, Some(h)) => h,
        (McMode::Discounted, None) => {
            if m.gamma == 0.0 {
                1
            } else {
                ((1e-12f64).ln() / m.gamma.ln()).ceil() as usize
            }
        }
        (McMode::Average, None) => {
            if (0..m.n_states()).any(|s| is_absorbing(m, s)) {
                1_000_000
            } else {
                return Err(EngineError::NeedsHorizon);
            }
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut returns = Vec::with_capacity(episodes);
    for _ in 0..episodes {
        let mut s = start;
        let mut total = 0.0;
        let mut discount = 1.0;
        let mut steps = 0usize;
        while steps < horizon && !is_absorbing(m, s) {
            let a = sample_action(&mut rng, pi, s, m.n_actions());
            match mode {
                McMode::Discounted => {
                    total += discount * m.r[s][a];
                    discount *= m.gamma;
                }
                McMode::Average => total += m.r[s][a],
            }
            s = sample_index(&mut rng, &m.p[s][a]);
            steps += 1;
        }
        let value = match mode {
            McMode::Discounted => total,
            McMode::Average => {
                if steps == 0 {
                    0.0
                } else {
                    total / steps as f64
                }
            }
        };
        returns.push(value);
    }
    let mean = returns.iter().sum::<f64>() / episodes as f64;
    let var = returns.iter().map(|x| (x - mean).powi(2)).sum::<f64>()
        / (episodes.max(2) - 1) as f64;
    let std = var.sqrt();
    Ok(McReport {
        mean,
        std,
        ci95_half: 1.96 * std / (episodes as f64).sqrt(),
        episodes,
    })
}
