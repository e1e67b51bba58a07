//! Tabular MDPs and predictive state representations, their homomorphisms,
//! quotients, and the coalgebraic embedding of an MDP.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::coalgebra::{FElement, FiniteCoalgebra, FunctorExpr, LabelSets};

pub const PROB_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid MDP: {0}")]
    InvalidMdp(String),
    #[error("map is not surjective: {0}")]
    NotSurjective(String),
    #[error("inconsistent partition: {0}")]
    InconsistentPartition(String),
    #[error("search space too large: {0}")]
    SearchSpace(String),
    #[error("unknown test `{0}`")]
    UnknownTest(String),
    #[error("malformed model file: {0}")]
    Malformed(String),
    #[error(transparent)]
    Coalgebra(#[from] crate::coalgebra::CoalgebraError),
}

// ---------------------------------------------------------------------------
// MDPs
// ---------------------------------------------------------------------------

/// Tabular MDP. `p[s][a][s2]` is the transition probability, `r[s][a]` the
/// expected immediate reward. Every action is admissible in every state.
#[derive(Debug, Clone)]
pub struct Mdp {
    pub states: Vec<String>,
    pub actions: Vec<String>,
    pub gamma: f64,
    pub p: Vec<Vec<Vec<f64>>>,
    pub r: Vec<Vec<f64>>,
}

impl Mdp {
    pub fn new(
        states: Vec<String>,
        actions: Vec<String>,
        gamma: f64,
        p: Vec<Vec<Vec<f64>>>,
        r: Vec<Vec<f64>>,
    ) -> Result<Mdp, ModelError> {
        let m = Mdp {
            states,
            actions,
            gamma,
            p,
            r,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn n_states(&self) -> usize {
        self.states.len()
    }

    pub fn n_actions(&self) -> usize {
        self.actions.len()
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let n = self.n_states();
        let k = self.n_actions();
        if n == 0 || k == 0 {
            return Err(ModelError::InvalidMdp("empty state or action set".into()));
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(ModelError::InvalidMdp(format!("gamma {} not in [0,1)", self.gamma)));
        }
        if self.p.len() != n || self.r.len() != n {
            return Err(ModelError::InvalidMdp("table sizes".into()));
        }
        for s in 0..n {
            if self.p[s].len() != k || self.r[s].len() != k {
                return Err(ModelError::InvalidMdp("table sizes".into()));
            }
            for a in 0..k {
                if self.p[s][a].len() != n {
                    return Err(ModelError::InvalidMdp("row size".into()));
                }
                let total: f64 = self.p[s][a].iter().sum();
                if self.p[s][a].iter().any(|&x| x < -PROB_TOL) || (total - 1.0).abs() > PROB_TOL {
                    return Err(ModelError::InvalidMdp(format!(
                        "row ({},{}) sums to {total}",
                        self.states[s], self.actions[a]
                    )));
                }
                if !self.r[s][a].is_finite() {
                    return Err(ModelError::InvalidMdp("non-finite reward".into()));
                }
            }
        }
        Ok(())
    }

    pub fn state_index(&self, s: &str) -> Option<usize> {
        self.states.iter().position(|x| x == s)
    }

    pub fn action_index(&self, a: &str) -> Option<usize> {
        self.actions.iter().position(|x| x == a)
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Mdp, ModelError> {
        let bad = |m: &str| ModelError::Malformed(m.to_string());
        let obj = v.as_object().ok_or_else(|| bad("expected object"))?;
        let names = |key: &str| -> Result<Vec<String>, ModelError> {
            obj.get(key)
                .and_then(|x| x.as_array())
                .map(|a| a.iter().filter_map(|x| x.as_str().map(String::from)).collect())
                .ok_or_else(|| bad(key))
        };
        let states = names("states")?;
        let actions = names("actions")?;
        let gamma = obj
            .get("gamma")
            .and_then(|x| x.as_f64())
            .ok_or_else(|| bad("gamma"))?;
        let n = states.len();
        let k = actions.len();
        let idx = |list: &[String], name: &str| -> Result<usize, ModelError> {
            list.iter()
                .position(|x| x == name)
                .ok_or_else(|| ModelError::Malformed(format!("unknown name `{name}`")))
        };
        let mut p = vec![vec![vec![0.0; n]; k]; n];
        for t in obj
            .get("transitions")
            .and_then(|x| x.as_array())
            .ok_or_else(|| bad("transitions"))?
        {
            let t = t.as_object().ok_or_else(|| bad("transition entry"))?;
            let field = |key: &str| t.get(key).and_then(|x| x.as_str()).ok_or_else(|| bad(key));
            let s = idx(&states, field("s")?)?;
            let a = idx(&actions, field("a")?)?;
            let s2 = idx(&states, field("s2")?)?;
            p[s][a][s2] += t.get("p").and_then(|x| x.as_f64()).ok_or_else(|| bad("p"))?;
        }
        // Rewards accepted per (s,a) or per (s,a,s2); the latter is folded
        // into the expected form R(s,a) = sum_s2 P(s,a,s2) R(s,a,s2).
        let mut r = vec![vec![0.0; k]; n];
        for e in obj
            .get("rewards")
            .and_then(|x| x.as_array())
            .ok_or_else(|| bad("rewards"))?
        {
            let e = e.as_object().ok_or_else(|| bad("reward entry"))?;
            let field = |key: &str| e.get(key).and_then(|x| x.as_str()).ok_or_else(|| bad(key));
            let s = idx(&states, field("s")?)?;
            let a = idx(&actions, field("a")?)?;
            let val = e.get("r").and_then(|x| x.as_f64()).ok_or_else(|| bad("r"))?;
            match e.get("s2") {
                Some(s2) => {
                    let s2 = idx(&states, s2.as_str().ok_or_else(|| bad("s2"))?)?;
                    r[s][a] += p[s][a][s2] * val;
                }
                None => r[s][a] += val,
            }
        }
        Mdp::new(states, actions, gamma, p, r)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut transitions = Vec::new();
        let mut rewards = Vec::new();
        for (s, sn) in self.states.iter().enumerate() {
            for (a, an) in self.actions.iter().enumerate() {
                for (s2, s2n) in self.states.iter().enumerate() {
                    if self.p[s][a][s2] != 0.0 {
                        transitions.push(serde_json::json!({
                            "s": sn, "a": an, "s2": s2n, "p": self.p[s][a][s2],
                        }));
                    }
                }
                rewards.push(serde_json::json!({ "s": sn, "a": an, "r": self.r[s][a] }));
            }
        }
        serde_json::json!({
            "states": self.states,
            "actions": self.actions,
            "gamma": self.gamma,
            "transitions": transitions,
            "rewards": rewards,
        })
    }
}

/// State map plus per-state action maps, both surjective.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MdpHom {
    /// `f[s]` = target state index.
    pub f: Vec<usize>,
    /// `g[s][a]` = target action index.
    pub g: Vec<Vec<usize>>,
}

impl MdpHom {
    pub fn identity(m: &Mdp) -> MdpHom {
        MdpHom {
            f: (0..m.n_states()).collect(),
            g: vec![(0..m.n_actions()).collect(); m.n_states()],
        }
    }

    fn check_surjective(&self, m: &Mdp, m2: &Mdp) -> Result<(), ModelError> {
        let mut hit = vec![false; m2.n_states()];
        for (s, &t) in self.f.iter().enumerate() {
            if t >= m2.n_states() || self.g.get(s).is_none_or(|row| row.len() != m.n_actions()) {
                return Err(ModelError::NotSurjective("ill-typed map".into()));
            }
            hit[t] = true;
        }
        if self.f.len() != m.n_states() || hit.iter().any(|h| !h) {
            return Err(ModelError::NotSurjective("state map".into()));
        }
        for row in &self.g {
            let mut hit = vec![false; m2.n_actions()];
            for &b in row {
                if b >= m2.n_actions() {
                    return Err(ModelError::NotSurjective("action map range".into()));
                }
                hit[b] = true;
            }
            if hit.iter().any(|h| !h) {
                return Err(ModelError::NotSurjective("action map".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct MdpHomReport {
    pub ssp_ok: bool,
    pub reward_ok: bool,
    pub witness: Option<String>,
}

impl MdpHomReport {
    pub fn ok(&self) -> bool {
        self.ssp_ok && self.reward_ok
    }
}

/// Block transition mass must be preserved and rewards respected.
pub fn check_mdp_homomorphism(
    m: &Mdp,
    m2: &Mdp,
    h: &MdpHom,
) -> Result<MdpHomReport, ModelError> {
    h.check_surjective(m, m2)?;
    let mut report = MdpHomReport {
        ssp_ok: true,
        reward_ok: true,
        witness: None,
    };
    for s in 0..m.n_states() {
        for a in 0..m.n_actions() {
            let (fs, ga) = (h.f[s], h.g[s][a]);
            if report.reward_ok && (m2.r[fs][ga] - m.r[s][a]).abs() > PROB_TOL {
                report.reward_ok = false;
                report.witness.get_or_insert_with(|| {
                    format!("reward at ({}, {})", m.states[s], m.actions[a])
                });
            }
            for t2 in 0..m2.n_states() {
                let block_mass: f64 = (0..m.n_states())
                    .filter(|&s2| h.f[s2] == t2)
                    .map(|s2| m.p[s][a][s2])
                    .sum();
                if report.ssp_ok && (m2.p[fs][ga][t2] - block_mass).abs() > PROB_TOL {
                    report.ssp_ok = false;
                    report.witness.get_or_insert_with(|| {
                        format!(
                            "transition mass at ({}, {}, {})",
                            m.states[s], m.actions[a], m2.states[t2]
                        )
                    });
                }
            }
        }
    }
    Ok(report)
}

/// Collapse blocks of states with equal rewards and equal block-mass rows.
/// Blocks are given as index sets.
pub fn quotient_mdp(m: &Mdp, blocks: &[Vec<usize>]) -> Result<(Mdp, MdpHom), ModelError> {
    let n = m.n_states();
    let k = m.n_actions();
    let mut block_of = vec![usize::MAX; n];
    for (b, members) in blocks.iter().enumerate() {
        for &s in members {
            if s >= n || block_of[s] != usize::MAX {
                return Err(ModelError::InconsistentPartition("not a partition".into()));
            }
            block_of[s] = b;
        }
    }
    if block_of.contains(&usize::MAX) {
        return Err(ModelError::InconsistentPartition("uncovered state".into()));
    }
    let block_mass = |s: usize, a: usize, b: usize| -> f64 {
        (0..n).filter(|&s2| block_of[s2] == b).map(|s2| m.p[s][a][s2]).sum()
    };
    for members in blocks {
        let rep = members[0];
        for &s in &members[1..] {
            for a in 0..k {
                if (m.r[s][a] - m.r[rep][a]).abs() > PROB_TOL {
                    return Err(ModelError::InconsistentPartition(format!(
                        "states {} and {} differ in reward under {}",
                        m.states[rep], m.states[s], m.actions[a]
                    )));
                }
                for b in 0..blocks.len() {
                    if (block_mass(s, a, b) - block_mass(rep, a, b)).abs() > PROB_TOL {
                        return Err(ModelError::InconsistentPartition(format!(
                            "states {} and {} differ in block mass under {}",
                            m.states[rep], m.states[s], m.actions[a]
                        )));
                    }
                }
            }
        }
    }
    let states: Vec<String> = blocks
        .iter()
        .map(|members| {
            let mut names: Vec<&str> = members.iter().map(|&s| m.states[s].as_str()).collect();
            names.sort();
            names[0].to_string()
        })
        .collect();
    let mut p = vec![vec![vec![0.0; blocks.len()]; k]; blocks.len()];
    let mut r = vec![vec![0.0; k]; blocks.len()];
    for (b, members) in blocks.iter().enumerate() {
        let rep = members[0];
        for a in 0..k {
            r[b][a] = m.r[rep][a];
            for b2 in 0..blocks.len() {
                p[b][a][b2] = block_mass(rep, a, b2);
            }
        }
    }
    let quotient = Mdp::new(states, m.actions.clone(), m.gamma, p, r)?;
    let hom = MdpHom {
        f: block_of,
        g: vec![(0..k).collect(); n],
    };
    Ok((quotient, hom))
}

#[derive(Debug, Clone)]
pub struct ValueInvarianceReport {
    pub gap: f64,
    pub ok: bool,
}

pub const VALUE_INVARIANCE_TOL: f64 = 1e-6;

/// Do the two optimal value functions agree along the state map?
pub fn optimal_value_invariance(
    m: &Mdp,
    m2: &Mdp,
    h: &MdpHom,
) -> Result<ValueInvarianceReport, ModelError> {
    h.check_surjective(m, m2)?;
    let v = crate::solvers::value_iteration(m, 1e-12).v;
    let v2 = crate::solvers::value_iteration(m2, 1e-12).v;
    let gap = (0..m.n_states())
        .map(|s| (v[s] - v2[h.f[s]]).abs())
        .fold(0.0, f64::max);
    Ok(ValueInvarianceReport {
        gap,
        ok: gap <= VALUE_INVARIANCE_TOL,
    })
}

/// All homomorphisms M -> M', lexicographic in (f, g), truncated at `cap`.
pub fn enumerate_mdp_homomorphisms(
    m: &Mdp,
    m2: &Mdp,
    cap: usize,
) -> Result<Vec<MdpHom>, ModelError> {
    let n = m.n_states();
    let k = m.n_actions();
    let n2 = m2.n_states() as f64;
    let k2 = m2.n_actions() as f64;
    let space = n2.powi(n as i32) * k2.powi((n * k) as i32);
    if space > 1e7 {
        return Err(ModelError::SearchSpace(format!("{space:.0} candidate maps")));
    }
    let mut out = Vec::new();
    let mut f = vec![0usize; n];
    'state_maps: loop {
        let mut g_flat = vec![0usize; n * k];
        'action_maps: loop {
            let hom = MdpHom {
                f: f.clone(),
                g: g_flat.chunks(k).map(|c| c.to_vec()).collect(),
            };
            if hom.check_surjective(m, m2).is_ok()
                && check_mdp_homomorphism(m, m2, &hom)?.ok()
            {
                out.push(hom);
                if out.len() >= cap {
                    return Ok(out);
                }
            }
            // odometer over g
            for slot in (0..g_flat.len()).rev() {
                g_flat[slot] += 1;
                if g_flat[slot] < m2.n_actions() {
                    continue 'action_maps;
                }
                g_flat[slot] = 0;
            }
            break;
        }
        for slot in (0..n).rev() {
            f[slot] += 1;
            if f[slot] < m2.n_states() {
                continue 'state_maps;
            }
            f[slot] = 0;
        }
        break;
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Coalgebraic embedding
// ---------------------------------------------------------------------------

fn reward_label(r: f64) -> String {
    format!("{r:?}")
}

/// Embed an MDP as a system over `(D x R)^A`: each state maps, per action,
/// to the pair of its successor distribution and its reward label.
pub fn mdp_to_coalgebra(m: &Mdp) -> FiniteCoalgebra {
    let mut reward_set: Vec<String> = m
        .r
        .iter()
        .flat_map(|row| row.iter().map(|&x| reward_label(x)))
        .collect();
    reward_set.sort();
    reward_set.dedup();
    let labels = LabelSets::from([
        ("A".to_string(), m.actions.clone()),
        ("R".to_string(), reward_set),
    ]);
    let functor = FunctorExpr::power(
        "A",
        FunctorExpr::product(FunctorExpr::Dist, FunctorExpr::Const("R".to_string())),
    );
    let mut alpha = BTreeMap::new();
    for (s, sn) in m.states.iter().enumerate() {
        let mut table = BTreeMap::new();
        for (a, an) in m.actions.iter().enumerate() {
            let dist = FElement::dist(
                m.p[s][a]
                    .iter()
                    .enumerate()
                    .map(|(s2, &mass)| (FElement::pt(&m.states[s2]), mass))
                    .collect(),
            );
            table.insert(
                an.clone(),
                FElement::Pair(
                    Box::new(dist),
                    Box::new(FElement::ConstLabel(reward_label(m.r[s][a]))),
                ),
            );
        }
        alpha.insert(sn.clone(), FElement::Fun(table));
    }
    FiniteCoalgebra::new(functor, labels, m.states.clone(), alpha)
        .expect("embedding of a validated MDP is well-shaped")
}

/// Inverse of `mdp_to_coalgebra` for systems of the embedded shape.
pub fn coalgebra_to_mdp(c: &FiniteCoalgebra, gamma: f64) -> Result<Mdp, ModelError> {
    let actions = c
        .labels
        .get("A")
        .cloned()
        .ok_or_else(|| ModelError::Malformed("missing action label set".into()))?;
    let n = c.states.len();
    let k = actions.len();
    let mut p = vec![vec![vec![0.0; n]; k]; n];
    let mut r = vec![vec![0.0; k]; n];
    for (s, sn) in c.states.iter().enumerate() {
        let FElement::Fun(table) = c.alpha_of(sn) else {
            return Err(ModelError::Malformed("expected per-action table".into()));
        };
        for (a, an) in actions.iter().enumerate() {
            let Some(FElement::Pair(dist, label)) = table.get(an) else {
                return Err(ModelError::Malformed("expected (distribution, reward) pair".into()));
            };
            let (FElement::Dist(entries), FElement::ConstLabel(l)) = (&**dist, &**label) else {
                return Err(ModelError::Malformed("expected (distribution, reward) pair".into()));
            };
            r[s][a] = l
                .parse()
                .map_err(|_| ModelError::Malformed(format!("reward label `{l}`")))?;
            for (e, mass) in entries {
                let FElement::Pt(s2) = e else {
                    return Err(ModelError::Malformed("distribution over non-states".into()));
                };
                let s2 = c
                    .states
                    .iter()
                    .position(|x| x == s2)
                    .ok_or_else(|| ModelError::Malformed("unknown successor".into()))?;
                p[s][a][s2] += mass;
            }
        }
    }
    Mdp::new(c.states.clone(), actions, gamma, p, r)
}

// ---------------------------------------------------------------------------
// Predictive state representations
// ---------------------------------------------------------------------------

/// PSR over a finite enumerated set of reachable prediction vectors.
/// `trans[i][a]` lists (observation, probability, successor index).
#[derive(Debug, Clone)]
pub struct Psr {
    pub actions: Vec<String>,
    pub observations: Vec<String>,
    pub core_tests: Vec<String>,
    pub vectors: Vec<Vec<f64>>,
    pub m_vectors: BTreeMap<String, Vec<f64>>,
    pub trans: Vec<Vec<Vec<(usize, f64, usize)>>>,
    pub current: usize,
}

impl Psr {
    pub fn psi(&self) -> &[f64] {
        &self.vectors[self.current]
    }

    /// Total probability of moving from vector `i` to vector `j` under `a`.
    pub fn step_prob(&self, i: usize, a: usize, j: usize) -> f64 {
        self.trans[i][a]
            .iter()
            .filter(|(_, _, next)| *next == j)
            .map(|(_, p, _)| p)
            .sum()
    }
}

/// P(t | h) = psi . m_t.
pub fn psr_predict(psr: &Psr, test: &str) -> Result<f64, ModelError> {
    let m_t = psr
        .m_vectors
        .get(test)
        .ok_or_else(|| ModelError::UnknownTest(test.to_string()))?;
    let raw: f64 = psr.psi().iter().zip(m_t).map(|(x, y)| x * y).sum();
    if !(-PROB_TOL..=1.0 + PROB_TOL).contains(&raw) {
        return Err(ModelError::Malformed(format!("prediction {raw} outside [0,1]")));
    }
    Ok(raw.clamp(0.0, 1.0))
}

/// Fully observed MDP as a PSR: prediction vectors are the rows of one-step
/// test probabilities P(o' | s, a), observations are the states themselves.
pub fn psr_from_mdp(m: &Mdp) -> Psr {
    let n = m.n_states();
    let k = m.n_actions();
    let mut core_tests = Vec::new();
    for a in 0..k {
        for o in 0..n {
            core_tests.push(format!("{}:{}", m.actions[a], m.states[o]));
        }
    }
    let mut m_vectors = BTreeMap::new();
    for (t, name) in core_tests.iter().enumerate() {
        let mut unit = vec![0.0; core_tests.len()];
        unit[t] = 1.0;
        m_vectors.insert(name.clone(), unit);
    }
    let vectors: Vec<Vec<f64>> = (0..n)
        .map(|s| (0..k).flat_map(|a| m.p[s][a].iter().copied()).collect())
        .collect();
    let trans: Vec<Vec<Vec<(usize, f64, usize)>>> = (0..n)
        .map(|s| {
            (0..k)
                .map(|a| {
                    (0..n)
                        .filter(|&s2| m.p[s][a][s2] > 0.0)
                        .map(|s2| (s2, m.p[s][a][s2], s2))
                        .collect()
                })
                .collect()
        })
        .collect();
    Psr {
        actions: m.actions.clone(),
        observations: m.states.clone(),
        core_tests,
        vectors,
        m_vectors,
        trans,
        current: 0,
    }
}

#[derive(Debug, Clone)]
pub struct PsrHomReport {
    pub ok: bool,
    pub witness: Option<String>,
}

/// Dynamics over prediction vectors must agree under the vector map `f` and
/// the per-vector action recoding `v`.
pub fn check_psr_homomorphism(
    p: &Psr,
    p2: &Psr,
    f: &[usize],
    v: &[Vec<usize>],
) -> Result<PsrHomReport, ModelError> {
    if f.len() != p.vectors.len() || v.len() != p.vectors.len() {
        return Err(ModelError::Malformed("map sizes".into()));
    }
    let mut hit = vec![false; p2.vectors.len()];
    for &j in f {
        if j >= p2.vectors.len() {
            return Err(ModelError::NotSurjective("vector map range".into()));
        }
        hit[j] = true;
    }
    if hit.iter().any(|h| !h) {
        return Err(ModelError::NotSurjective("vector map".into()));
    }
    for (i, row) in v.iter().enumerate() {
        if row.len() != p.actions.len() || row.iter().any(|&a| a >= p2.actions.len()) {
            return Err(ModelError::Malformed(format!("action recoding at vector {i}")));
        }
    }
    for i in 0..p.vectors.len() {
        for a in 0..p.actions.len() {
            for j2 in 0..p2.vectors.len() {
                let lhs = p2.step_prob(f[i], v[i][a], j2);
                let rhs: f64 = (0..p.vectors.len())
                    .filter(|&j| f[j] == j2)
                    .map(|j| p.step_prob(i, a, j))
                    .sum();
                if (lhs - rhs).abs() > PROB_TOL {
                    return Ok(PsrHomReport {
                        ok: false,
                        witness: Some(format!("vector {i}, action {a}, target {j2}")),
                    });
                }
            }
        }
    }
    Ok(PsrHomReport {
        ok: true,
        witness: None,
    })
}

// ---------------------------------------------------------------------------
// Fixtures shared by tests and the acceptance suite
// ---------------------------------------------------------------------------

/// Two-state chain: s0 moves to s1 with reward 1, s1 self-loops with reward 0.
pub fn chain2() -> Mdp {
    Mdp::new(
        vec!["s0".into(), "s1".into()],
        vec!["a".into()],
        0.5,
        vec![vec![vec![0.0, 1.0]], vec![vec![0.0, 1.0]]],
        vec![vec![1.0], vec![0.0]],
    )
    .unwrap()
}

/// Seeded random MDP with row-normalized kernels and rewards in [-1, 1].
pub fn random_mdp(n: usize, k: usize, gamma: f64, seed: u64) -> Mdp {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut p = vec![vec![vec![0.0; n]; k]; n];
    let mut r = vec![vec![0.0; k]; n];
    for s in 0..n {
        for a in 0..k {
            let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
            let total: f64 = raw.iter().sum();
            for s2 in 0..n {
                p[s][a][s2] = raw[s2] / total;
            }
            r[s][a] = rng.gen_range(-1.0..1.0);
        }
    }
    Mdp::new(
        (0..n).map(|s| format!("s{s}")).collect(),
        (0..k).map(|a| format!("a{a}")).collect(),
        gamma,
        p,
        r,
    )
    .unwrap()
}

/// `chain2` with a duplicated copy of s0 (identical row and reward).
pub fn chain2_with_duplicate() -> Mdp {
    Mdp::new(
        vec!["s0".into(), "s0b".into(), "s1".into()],
        vec!["a".into()],
        0.5,
        vec![
            vec![vec![0.0, 0.0, 1.0]],
            vec![vec![0.0, 0.0, 1.0]],
            vec![vec![0.0, 0.0, 1.0]],
        ],
        vec![vec![1.0], vec![1.0], vec![0.0]],
    )
    .unwrap()
}
