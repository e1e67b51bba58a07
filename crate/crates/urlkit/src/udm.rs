//! Finite decision models with partial information: each agent picks a
//! decision while observing only a partition of the global history space
//! H = nature x all decisions. Provides measurability, solvability
//! (every nature point admits exactly one joint decision), a causality
//! check that searches for an ordering of agents, and joins of
//! information partitions.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum UdmError {
    #[error("malformed model: {0}")]
    Malformed(String),
    #[error("partition domains differ")]
    DomainMismatch,
    #[error("instance too large: {0}")]
    Guard(String),
}

/// A partition of {0..n}, stored as a block id per point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexPartition {
    pub label: Vec<usize>,
    pub n_blocks: usize,
}

impl IndexPartition {
    pub fn from_blocks(blocks: &[Vec<usize>], n: usize) -> Result<IndexPartition, UdmError> {
        let mut label = vec![usize::MAX; n];
        for (b, block) in blocks.iter().enumerate() {
            for &x in block {
                if x >= n {
                    return Err(UdmError::Malformed(format!("point {x} out of range")));
                }
                if label[x] != usize::MAX {
                    return Err(UdmError::Malformed(format!("point {x} in two blocks")));
                }
                label[x] = b;
            }
        }
        if label.iter().any(|&l| l == usize::MAX) {
            return Err(UdmError::Malformed("blocks do not cover the domain".into()));
        }
        Ok(IndexPartition { label, n_blocks: blocks.len() })
    }

    pub fn from_labels(raw: Vec<usize>) -> IndexPartition {
        let mut remap = std::collections::BTreeMap::new();
        let mut label = Vec::with_capacity(raw.len());
        for l in raw {
            let next = remap.len();
            label.push(*remap.entry(l).or_insert(next));
        }
        IndexPartition { n_blocks: remap.len(), label }
    }

    pub fn trivial(n: usize) -> IndexPartition {
        IndexPartition { label: vec![0; n], n_blocks: if n == 0 { 0 } else { 1 } }
    }

    pub fn discrete(n: usize) -> IndexPartition {
        IndexPartition { label: (0..n).collect(), n_blocks: n }
    }

    pub fn len(&self) -> usize {
        self.label.len()
    }

    pub fn is_empty(&self) -> bool {
        self.label.is_empty()
    }

    pub fn blocks(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n_blocks];
        for (x, &b) in self.label.iter().enumerate() {
            out[b].push(x);
        }
        out
    }

    /// Common refinement: the coarsest partition finer than both.
    pub fn join(&self, other: &IndexPartition) -> Result<IndexPartition, UdmError> {
        if self.len() != other.len() {
            return Err(UdmError::DomainMismatch);
        }
        let raw: Vec<usize> = self
            .label
            .iter()
            .zip(&other.label)
            .map(|(&a, &b)| a * other.n_blocks + b)
            .collect();
        Ok(IndexPartition::from_labels(raw))
    }

    /// True when every block of `self` sits inside one block of `other`.
    pub fn refines(&self, other: &IndexPartition) -> bool {
        let mut seen = vec![usize::MAX; self.n_blocks];
        for (x, &b) in self.label.iter().enumerate() {
            let o = other.label[x];
            if seen[b] == usize::MAX {
                seen[b] = o;
            } else if seen[b] != o {
                return false;
            }
        }
        true
    }
}

/// Join of a family of information partitions over the same domain.
pub fn quotient_info_field(fields: &[IndexPartition]) -> Result<IndexPartition, UdmError> {
    let first = fields.first().ok_or(UdmError::DomainMismatch)?;
    let mut acc = first.clone();
    for f in &fields[1..] {
        acc = acc.join(f)?;
    }
    Ok(acc)
}

const H_GUARD: usize = 1_000_000;

/// The global model: nature atoms with probabilities, a decision set per
/// agent, and an information partition of H per agent.
#[derive(Debug, Clone)]
pub struct UdmObject {
    pub agents: Vec<String>,
    pub omega: Vec<String>,
    pub p_omega: Vec<f64>,
    pub decisions: Vec<Vec<String>>,
    pub info: Vec<IndexPartition>,
}

impl UdmObject {
    pub fn h_size(&self) -> usize {
        self.decisions
            .iter()
            .fold(self.omega.len(), |acc, u| acc * u.len())
    }

    /// Encode (nature, decisions) with nature most significant.
    pub fn h_index(&self, w: usize, u: &[usize]) -> usize {
        let mut h = w;
        for (a, &v) in u.iter().enumerate() {
            h = h * self.decisions[a].len() + v;
        }
        h
    }

    pub fn h_decode(&self, mut h: usize) -> (usize, Vec<usize>) {
        let mut u = vec![0; self.decisions.len()];
        for a in (0..self.decisions.len()).rev() {
            let k = self.decisions[a].len();
            u[a] = h % k;
            h /= k;
        }
        (h, u)
    }

    pub fn new(
        agents: Vec<String>,
        omega: Vec<String>,
        p_omega: Vec<f64>,
        decisions: Vec<Vec<String>>,
        info: Vec<IndexPartition>,
    ) -> Result<UdmObject, UdmError> {
        let obj = UdmObject { agents, omega, p_omega, decisions, info };
        if obj.omega.is_empty() || obj.decisions.len() != obj.agents.len() {
            return Err(UdmError::Malformed("agents and decision sets must align".into()));
        }
        if obj.p_omega.len() != obj.omega.len() {
            return Err(UdmError::Malformed("probability per nature atom".into()));
        }
        let total: f64 = obj.p_omega.iter().sum();
        if (total - 1.0).abs() > 1e-9 || obj.p_omega.iter().any(|&p| p < 0.0) {
            return Err(UdmError::Malformed("nature probabilities must sum to 1".into()));
        }
        if obj.decisions.iter().any(|u| u.is_empty()) {
            return Err(UdmError::Malformed("empty decision set".into()));
        }
        let h = obj.h_size();
        if h > H_GUARD {
            return Err(UdmError::Guard(format!("|H| = {h}")));
        }
        if obj.info.len() != obj.agents.len() {
            return Err(UdmError::Malformed("information partition per agent".into()));
        }
        if obj.info.iter().any(|p| p.len() != h) {
            return Err(UdmError::Malformed("information partitions must cover H".into()));
        }
        Ok(obj)
    }

    /// Information partition of an agent that sees nature (optionally) and
    /// the decisions of the listed agents.
    pub fn field_of_coords(&self, include_omega: bool, observed: &[usize]) -> IndexPartition {
        let h = self.h_size();
        let raw: Vec<usize> = (0..h)
            .map(|idx| {
                let (w, u) = self.h_decode(idx);
                let mut key = if include_omega { w } else { 0 };
                for &a in observed {
                    key = key * self.decisions[a].len() + u[a];
                }
                key
            })
            .collect();
        IndexPartition::from_labels(raw)
    }
}

/// Field generated by the decisions of an agent subset; nature is included
/// unless `exclude_omega` is set.
pub fn product_field(obj: &UdmObject, subset: &[usize], exclude_omega: bool) -> IndexPartition {
    obj.field_of_coords(!exclude_omega, subset)
}

/// Block of the information partition on which the policy fails to be
/// constant, when one exists.
pub fn measurability_witness(pi: &[usize], info: &IndexPartition) -> Option<usize> {
    let mut value = vec![usize::MAX; info.n_blocks];
    for (x, &b) in info.label.iter().enumerate() {
        if value[b] == usize::MAX {
            value[b] = pi[x];
        } else if value[b] != pi[x] {
            return Some(b);
        }
    }
    None
}

pub fn check_measurable(pi: &[usize], info: &IndexPartition) -> bool {
    measurability_witness(pi, info).is_none()
}

/// One decision map per agent over H, each constant on its information
/// blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolicyProfile {
    pub maps: Vec<Vec<usize>>,
}

impl PolicyProfile {
    pub fn new(obj: &UdmObject, maps: Vec<Vec<usize>>) -> Result<PolicyProfile, UdmError> {
        if maps.len() != obj.agents.len() {
            return Err(UdmError::Malformed("one policy per agent".into()));
        }
        let h = obj.h_size();
        for (a, pi) in maps.iter().enumerate() {
            if pi.len() != h {
                return Err(UdmError::Malformed("policy must cover H".into()));
            }
            if pi.iter().any(|&v| v >= obj.decisions[a].len()) {
                return Err(UdmError::Malformed("decision out of range".into()));
            }
            if let Some(block) = measurability_witness(pi, &obj.info[a]) {
                return Err(UdmError::Malformed(format!(
                    "policy of agent {} not constant on information block {block}",
                    obj.agents[a]
                )));
            }
        }
        Ok(PolicyProfile { maps })
    }
}

/// All joint decisions consistent with the profile at one nature point.
pub fn solutions_at(obj: &UdmObject, profile: &PolicyProfile, w: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut u = vec![0usize; obj.decisions.len()];
    loop {
        let h = obj.h_index(w, &u);
        if (0..u.len()).all(|a| profile.maps[a][h] == u[a]) {
            out.push(u.clone());
        }
        let mut a = u.len();
        loop {
            if a == 0 {
                return out;
            }
            a -= 1;
            u[a] += 1;
            if u[a] < obj.decisions[a].len() {
                break;
            }
            u[a] = 0;
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolvableReport {
    pub solvable: bool,
    /// nature point and solution count where uniqueness failed
    pub witness: Option<(usize, usize)>,
    /// the profile exhibiting the failure, in exhaustive mode
    pub witness_profile: Option<Vec<Vec<usize>>>,
}

/// A fixed profile is solvable when every nature point has exactly one
/// consistent joint decision.
pub fn check_solvable_profile(obj: &UdmObject, profile: &PolicyProfile) -> SolvableReport {
    for w in 0..obj.omega.len() {
        let count = solutions_at(obj, profile, w).len();
        if count != 1 {
            return SolvableReport {
                solvable: false,
                witness: Some((w, count)),
                witness_profile: Some(profile.maps.clone()),
            };
        }
    }
    SolvableReport { solvable: true, witness: None, witness_profile: None }
}

/// Every measurable policy of the agent, as a decision per information
/// block expanded over H.
pub fn measurable_policies(obj: &UdmObject, agent: usize) -> Vec<Vec<usize>> {
    let info = &obj.info[agent];
    let k = obj.decisions[agent].len();
    let mut out = Vec::new();
    let mut table = vec![0usize; info.n_blocks];
    loop {
        out.push(info.label.iter().map(|&b| table[b]).collect());
        let mut b = table.len();
        loop {
            if b == 0 {
                return out;
            }
            b -= 1;
            table[b] += 1;
            if table[b] < k {
                break;
            }
            table[b] = 0;
        }
    }
}

const PROFILE_GUARD: usize = 200_000;

/// Exhaustive solvability over all measurable profiles.
pub fn check_solvable_all(obj: &UdmObject) -> Result<SolvableReport, UdmError> {
    let per_agent: Vec<Vec<Vec<usize>>> =
        (0..obj.agents.len()).map(|a| measurable_policies(obj, a)).collect();
    let total: usize = per_agent.iter().map(|p| p.len()).try_fold(1usize, |acc, n| {
        acc.checked_mul(n).filter(|&t| t <= PROFILE_GUARD)
    }).ok_or_else(|| UdmError::Guard("too many measurable profiles".into()))?;
    let _ = total;
    let mut pick = vec![0usize; per_agent.len()];
    loop {
        let profile = PolicyProfile {
            maps: pick
                .iter()
                .enumerate()
                .map(|(a, &i)| per_agent[a][i].clone())
                .collect(),
        };
        let report = check_solvable_profile(obj, &profile);
        if !report.solvable {
            return Ok(report);
        }
        let mut a = pick.len();
        loop {
            if a == 0 {
                return Ok(SolvableReport { solvable: true, witness: None, witness_profile: None });
            }
            a -= 1;
            pick[a] += 1;
            if pick[a] < per_agent[a].len() {
                break;
            }
            pick[a] = 0;
        }
    }
}

#[derive(Debug, Clone)]
pub struct CausalReport {
    pub causal: bool,
    /// a single agent ordering that works everywhere, when one exists
    pub static_order: Option<Vec<usize>>,
    /// causal only via history-dependent orderings
    pub dynamic_only: bool,
}

const AGENT_GUARD: usize = 8;

fn admissible_on(obj: &UdmObject, atom: &[usize], agent: usize) -> bool {
    let info = &obj.info[agent];
    let first = info.label[atom[0]];
    atom.iter().all(|&h| info.label[h] == first)
}

fn atoms_within(obj: &UdmObject, atom: &[usize], placed: &[usize]) -> Vec<Vec<usize>> {
    let field = obj.field_of_coords(true, placed);
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for &h in atom {
        groups.entry(field.label[h]).or_default().push(h);
    }
    groups.into_values().collect()
}

fn causal_rec(
    obj: &UdmObject,
    placed: &mut Vec<usize>,
    mask: u32,
    atom: &[usize],
    memo: &mut std::collections::BTreeMap<(u32, usize), bool>,
) -> bool {
    if placed.len() == obj.agents.len() {
        return true;
    }
    let key = (mask, atom[0]);
    if let Some(&hit) = memo.get(&key) {
        return hit;
    }
    let mut ok = false;
    for a in 0..obj.agents.len() {
        if mask & (1 << a) != 0 || !admissible_on(obj, atom, a) {
            continue;
        }
        placed.push(a);
        let sub = atoms_within(obj, atom, placed);
        let all = sub
            .iter()
            .all(|s| causal_rec(obj, placed, mask | (1 << a), s, memo));
        placed.pop();
        if all {
            ok = true;
            break;
        }
    }
    memo.insert(key, ok);
    ok
}

fn static_order_works(obj: &UdmObject, order: &[usize]) -> bool {
    for k in 0..order.len() {
        let field = obj.field_of_coords(true, &order[..k]);
        let mut blocks = vec![Vec::new(); field.n_blocks];
        for (h, &b) in field.label.iter().enumerate() {
            blocks[b].push(h);
        }
        if blocks
            .iter()
            .any(|atom| !atom.is_empty() && !admissible_on(obj, atom, order[k]))
        {
            return false;
        }
    }
    true
}

/// Search for an agent ordering under which each agent's information is
/// already pinned down by nature and the earlier agents' decisions. Static
/// orderings are tried first; failing that, the ordering may branch on the
/// observed history.
pub fn check_causal(obj: &UdmObject) -> Result<CausalReport, UdmError> {
    let n = obj.agents.len();
    if n > AGENT_GUARD {
        return Err(UdmError::Guard(format!("{n} agents")));
    }
    let mut order: Vec<usize> = Vec::new();
    fn permute(
        obj: &UdmObject,
        remaining: &mut Vec<usize>,
        order: &mut Vec<usize>,
    ) -> Option<Vec<usize>> {
        if remaining.is_empty() {
            return static_order_works(obj, order).then(|| order.clone());
        }
        for i in 0..remaining.len() {
            let a = remaining.remove(i);
            order.push(a);
            if let Some(found) = permute(obj, remaining, order) {
                return Some(found);
            }
            order.pop();
            remaining.insert(i, a);
        }
        None
    }
    let mut remaining: Vec<usize> = (0..n).collect();
    if let Some(found) = permute(obj, &mut remaining, &mut order) {
        return Ok(CausalReport { causal: true, static_order: Some(found), dynamic_only: false });
    }
    // history-dependent orderings: recurse over atoms of the growing field
    let base = obj.field_of_coords(true, &[]);
    let mut blocks = vec![Vec::new(); base.n_blocks];
    for (h, &b) in base.label.iter().enumerate() {
        blocks[b].push(h);
    }
    let mut memo = Default::default();
    let mut placed = Vec::new();
    let causal = blocks
        .iter()
        .filter(|a| !a.is_empty())
        .all(|atom| causal_rec(obj, &mut placed, 0, atom, &mut memo));
    Ok(CausalReport { causal, static_order: None, dynamic_only: causal })
}

pub mod json {
    use super::*;
    use serde_json::Value;

    /// Model file: agents, nature atoms with probabilities, decision lists,
    /// and per-agent information given either as explicit blocks over H
    /// indices or as observed coordinates ("omega" plus agent names).
    pub fn udm_from_json(v: &Value) -> Result<UdmObject, UdmError> {
        let bad = |m: &str| UdmError::Malformed(m.to_string());
        let obj = v.as_object().ok_or_else(|| bad("expected object"))?;
        let strings = |key: &str| -> Result<Vec<String>, UdmError> {
            obj.get(key)
                .and_then(|x| x.as_array())
                .ok_or_else(|| bad(key))?
                .iter()
                .map(|x| x.as_str().map(String::from).ok_or_else(|| bad(key)))
                .collect()
        };
        let agents = strings("agents")?;
        let omega = strings("omega")?;
        let p_omega: Vec<f64> = obj
            .get("p")
            .and_then(|x| x.as_array())
            .ok_or_else(|| bad("p"))?
            .iter()
            .map(|x| x.as_f64().ok_or_else(|| bad("p")))
            .collect::<Result<_, _>>()?;
        let decisions: Vec<Vec<String>> = obj
            .get("decisions")
            .and_then(|x| x.as_array())
            .ok_or_else(|| bad("decisions"))?
            .iter()
            .map(|row| {
                row.as_array()
                    .ok_or_else(|| bad("decisions"))?
                    .iter()
                    .map(|x| x.as_str().map(String::from).ok_or_else(|| bad("decisions")))
                    .collect()
            })
            .collect::<Result<_, _>>()?;
        let skeleton = UdmObject {
            agents: agents.clone(),
            omega: omega.clone(),
            p_omega: p_omega.clone(),
            decisions: decisions.clone(),
            info: Vec::new(),
        };
        let h = skeleton.h_size();
        if h > super::H_GUARD {
            return Err(UdmError::Guard(format!("|H| = {h}")));
        }
        let raw_info = obj
            .get("info")
            .and_then(|x| x.as_array())
            .ok_or_else(|| bad("info"))?;
        let mut info = Vec::new();
        for item in raw_info {
            let entry = item.as_object().ok_or_else(|| bad("info entry"))?;
            if let Some(blocks) = entry.get("blocks").and_then(|x| x.as_array()) {
                let parsed: Vec<Vec<usize>> = blocks
                    .iter()
                    .map(|b| {
                        b.as_array()
                            .ok_or_else(|| bad("block"))?
                            .iter()
                            .map(|x| x.as_u64().map(|v| v as usize).ok_or_else(|| bad("block")))
                            .collect()
                    })
                    .collect::<Result<_, _>>()?;
                info.push(IndexPartition::from_blocks(&parsed, h)?);
            } else if let Some(sees) = entry.get("observes").and_then(|x| x.as_array()) {
                let mut include_omega = false;
                let mut coords = Vec::new();
                for name in sees {
                    let name = name.as_str().ok_or_else(|| bad("observes"))?;
                    if name == "omega" {
                        include_omega = true;
                    } else {
                        let a = agents
                            .iter()
                            .position(|x| x == name)
                            .ok_or_else(|| UdmError::Malformed(format!("unknown agent `{name}`")))?;
                        coords.push(a);
                    }
                }
                info.push(skeleton.field_of_coords(include_omega, &coords));
            } else {
                return Err(bad("info entry needs blocks or observes"));
            }
        }
        UdmObject::new(agents, omega, p_omega, decisions, info)
    }
}
