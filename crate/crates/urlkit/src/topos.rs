//! Finite-set diagram machinery for the category of tabular value functions:
//! objects are maps from a state-action set to a finite label set, arrows are
//! commuting squares. Provides pullbacks, a three-valued subobject
//! classifier, exponential objects, and a coequalizer helper, with universal
//! properties checked by exhaustive enumeration at small sizes.

use std::collections::BTreeMap;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ToposError {
    #[error("shape mismatch: {0}")]
    Mismatch(String),
    #[error("square does not commute at `{0}`")]
    NonCommuting(String),
    #[error("map `{0}` is not injective")]
    NonMonic(String),
    #[error("instance too large for exhaustive checks")]
    SizeGuard,
    #[error("malformed instance: {0}")]
    Malformed(String),
}

/// A total function between named finite sets; `map[i]` indexes into `cod`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FinFn {
    pub dom: Vec<String>,
    pub cod: Vec<String>,
    pub map: Vec<usize>,
}

impl FinFn {
    pub fn new(dom: Vec<String>, cod: Vec<String>, map: Vec<usize>) -> Result<FinFn, ToposError> {
        if map.len() != dom.len() {
            return Err(ToposError::Mismatch("table length != domain size".into()));
        }
        if let Some(&bad) = map.iter().find(|&&v| v >= cod.len()) {
            return Err(ToposError::Mismatch(format!("value index {bad} out of range")));
        }
        Ok(FinFn { dom, cod, map })
    }

    pub fn identity(set: &[String]) -> FinFn {
        FinFn {
            dom: set.to_vec(),
            cod: set.to_vec(),
            map: (0..set.len()).collect(),
        }
    }

    pub fn apply(&self, i: usize) -> usize {
        self.map[i]
    }

    /// self after other: (self . other)(x) = self(other(x)).
    pub fn compose(&self, other: &FinFn) -> Result<FinFn, ToposError> {
        if other.cod != self.dom {
            return Err(ToposError::Mismatch("composition types".into()));
        }
        Ok(FinFn {
            dom: other.dom.clone(),
            cod: self.cod.clone(),
            map: other.map.iter().map(|&i| self.map[i]).collect(),
        })
    }

    pub fn is_injective(&self) -> bool {
        let mut seen = vec![false; self.cod.len()];
        self.map.iter().all(|&v| !std::mem::replace(&mut seen[v], true))
    }

    pub fn image(&self) -> Vec<bool> {
        let mut hit = vec![false; self.cod.len()];
        for &v in &self.map {
            hit[v] = true;
        }
        hit
    }

    pub fn from_json(v: &serde_json::Value) -> Result<FinFn, ToposError> {
        let bad = |m: &str| ToposError::Malformed(m.to_string());
        let obj = v.as_object().ok_or_else(|| bad("expected object"))?;
        let names = |key: &str| -> Result<Vec<String>, ToposError> {
            obj.get(key)
                .and_then(|x| x.as_array())
                .ok_or_else(|| bad(key))?
                .iter()
                .map(|x| x.as_str().map(String::from).ok_or_else(|| bad(key)))
                .collect()
        };
        let dom = names("dom")?;
        let cod = names("cod")?;
        let raw = obj.get("map").and_then(|x| x.as_array()).ok_or_else(|| bad("map"))?;
        let mut map = Vec::new();
        for cell in raw {
            let name = cell.as_str().ok_or_else(|| bad("map entry"))?;
            let idx = cod
                .iter()
                .position(|c| c == name)
                .ok_or_else(|| ToposError::Malformed(format!("unknown value `{name}`")))?;
            map.push(idx);
        }
        FinFn::new(dom, cod, map)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "dom": self.dom,
            "cod": self.cod,
            "map": self.map.iter().map(|&i| self.cod[i].clone()).collect::<Vec<_>>(),
        })
    }
}

/// A tabular value function: state-action names mapped to value labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QObject {
    pub f: FinFn,
}

impl QObject {
    pub fn new(f: FinFn) -> QObject {
        QObject { f }
    }

    pub fn inputs(&self) -> &[String] {
        &self.f.dom
    }

    pub fn outputs(&self) -> &[String] {
        &self.f.cod
    }

    pub fn from_json(v: &serde_json::Value) -> Result<QObject, ToposError> {
        Ok(QObject::new(FinFn::from_json(v)?))
    }

    pub fn to_json(&self) -> serde_json::Value {
        self.f.to_json()
    }
}

/// A commuting square between two value functions: `h` on inputs, `k` on
/// outputs, with g(h(x)) = k(f(x)) for every x.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QArrow {
    pub h: FinFn,
    pub k: FinFn,
}

pub fn make_qarrow(
    src: &QObject,
    dst: &QObject,
    h: FinFn,
    k: FinFn,
) -> Result<QArrow, ToposError> {
    if h.dom != *src.inputs() || h.cod != *dst.inputs() {
        return Err(ToposError::Mismatch("input map types".into()));
    }
    if k.dom != *src.outputs() || k.cod != *dst.outputs() {
        return Err(ToposError::Mismatch("output map types".into()));
    }
    for (x, name) in src.inputs().iter().enumerate() {
        if dst.f.apply(h.apply(x)) != k.apply(src.f.apply(x)) {
            return Err(ToposError::NonCommuting(name.clone()));
        }
    }
    Ok(QArrow { h, k })
}

pub fn identity_qarrow(obj: &QObject) -> QArrow {
    QArrow {
        h: FinFn::identity(obj.inputs()),
        k: FinFn::identity(obj.outputs()),
    }
}

pub fn compose_qarrow(
    mid_src: &QObject,
    mid: &QObject,
    dst: &QObject,
    first: &QArrow,
    second: &QArrow,
) -> Result<QArrow, ToposError> {
    let h = second.h.compose(&first.h)?;
    let k = second.k.compose(&first.k)?;
    let _ = mid;
    make_qarrow(mid_src, dst, h, k)
}

// ---------------------------------------------------------------------------
// Pullbacks in finite sets
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct Pullback {
    /// matched index pairs (x, y) with f(x) = g(y)
    pub pairs: Vec<(usize, usize)>,
    pub object: Vec<String>,
    pub p1: FinFn,
    pub p2: FinFn,
}

/// P = {(x, y) : f(x) = g(y)} with its two projections.
pub fn pullback_finset(f: &FinFn, g: &FinFn) -> Result<Pullback, ToposError> {
    if f.cod != g.cod {
        return Err(ToposError::Mismatch("pullback legs need a shared codomain".into()));
    }
    let mut pairs = Vec::new();
    for x in 0..f.dom.len() {
        for y in 0..g.dom.len() {
            if f.apply(x) == g.apply(y) {
                pairs.push((x, y));
            }
        }
    }
    let object: Vec<String> = pairs
        .iter()
        .map(|&(x, y)| format!("({},{})", f.dom[x], g.dom[y]))
        .collect();
    let p1 = FinFn {
        dom: object.clone(),
        cod: f.dom.clone(),
        map: pairs.iter().map(|&(x, _)| x).collect(),
    };
    let p2 = FinFn {
        dom: object.clone(),
        cod: g.dom.clone(),
        map: pairs.iter().map(|&(_, y)| y).collect(),
    };
    Ok(Pullback { pairs, object, p1, p2 })
}

fn all_maps(dom_size: usize, cod_size: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..dom_size {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (0..cod_size).map(move |v| {
                    let mut next = prefix.clone();
                    next.push(v);
                    next
                })
            })
            .collect();
    }
    out
}

/// Brute-force the universal property: for every cone (x, y) over canonical
/// test sets of size <= cap, exactly one map into P factors both legs.
pub fn pullback_universal_check(f: &FinFn, g: &FinFn, pb: &Pullback, cap: usize) -> bool {
    for t in 1..=cap {
        for xs in all_maps(t, f.dom.len()) {
            'cone: for ys in all_maps(t, g.dom.len()) {
                for i in 0..t {
                    if f.apply(xs[i]) != g.apply(ys[i]) {
                        continue 'cone;
                    }
                }
                let mut found = 0usize;
                // a mediating map is forced pointwise, so count pair matches
                for i in 0..t {
                    let hits = pb
                        .pairs
                        .iter()
                        .filter(|&&(x, y)| x == xs[i] && y == ys[i])
                        .count();
                    if i == 0 {
                        found = hits;
                    }
                    if hits != 1 {
                        return false;
                    }
                }
                let _ = found;
            }
        }
    }
    true
}

/// Pullback of two arrows into a shared value function, built from the
/// input-level and output-level set pullbacks.
pub fn pullback_q(
    src1: &QObject,
    src2: &QObject,
    target: &QObject,
    a1: &QArrow,
    a2: &QArrow,
) -> Result<(QObject, QArrow, QArrow), ToposError> {
    let _ = target;
    let inputs = pullback_finset(&a1.h, &a2.h)?;
    let outputs = pullback_finset(&a1.k, &a2.k)?;
    let mut map = Vec::new();
    for &(x1, x2) in &inputs.pairs {
        let pair = (src1.f.apply(x1), src2.f.apply(x2));
        let pos = outputs
            .pairs
            .iter()
            .position(|&p| p == pair)
            .expect("commuting arrows force the output pair into the pullback");
        map.push(pos);
    }
    let obj = QObject::new(FinFn {
        dom: inputs.object.clone(),
        cod: outputs.object.clone(),
        map,
    });
    let pr1 = make_qarrow(&obj, src1, inputs.p1.clone(), outputs.p1.clone())?;
    let pr2 = make_qarrow(&obj, src2, inputs.p2.clone(), outputs.p2.clone())?;
    Ok((obj, pr1, pr2))
}

// ---------------------------------------------------------------------------
// The three-valued classifier
// ---------------------------------------------------------------------------

/// Truth-value object: t on {0, 1/2, 1} with t(0) = 0 and t(1/2) = t(1) = 1.
pub fn omega_q() -> QObject {
    QObject::new(FinFn {
        dom: vec!["0".into(), "1/2".into(), "1".into()],
        cod: vec!["0".into(), "1".into()],
        map: vec![0, 1, 1],
    })
}

/// The one-point object: identity on {0}.
pub fn terminal_q() -> QObject {
    QObject::new(FinFn::identity(&["0".into()]))
}

/// The point T = <t', true> picking out truth value 1 in omega.
pub fn true_point() -> QArrow {
    let one = terminal_q();
    let omega = omega_q();
    make_qarrow(
        &one,
        &omega,
        FinFn {
            dom: one.inputs().to_vec(),
            cod: omega.inputs().to_vec(),
            map: vec![2],
        },
        FinFn {
            dom: one.outputs().to_vec(),
            cod: omega.outputs().to_vec(),
            map: vec![1],
        },
    )
    .expect("fixed square")
}

#[derive(Debug, Clone)]
pub struct ClassifyResult {
    /// parent inputs -> {0, 1/2, 1}
    pub psi: FinFn,
    /// parent outputs -> {0, 1}, the image-of-j indicator
    pub chi: FinFn,
}

/// Characteristic map of a subobject inclusion (i on inputs, j on outputs):
/// 1 on the included inputs, 1/2 when only the value lands in the included
/// outputs, 0 otherwise.
pub fn classify_subobject(
    sub: &QObject,
    parent: &QObject,
    i: &FinFn,
    j: &FinFn,
) -> Result<ClassifyResult, ToposError> {
    if !i.is_injective() {
        return Err(ToposError::NonMonic("i".into()));
    }
    if !j.is_injective() {
        return Err(ToposError::NonMonic("j".into()));
    }
    make_qarrow(sub, parent, i.clone(), j.clone())?;
    let omega = omega_q();
    let in_image = i.image();
    let out_image = j.image();
    let psi_map: Vec<usize> = (0..parent.inputs().len())
        .map(|x| {
            if in_image[x] {
                2
            } else if out_image[parent.f.apply(x)] {
                1
            } else {
                0
            }
        })
        .collect();
    let psi = FinFn {
        dom: parent.inputs().to_vec(),
        cod: omega.inputs().to_vec(),
        map: psi_map,
    };
    let chi = FinFn {
        dom: parent.outputs().to_vec(),
        cod: omega.outputs().to_vec(),
        map: out_image.iter().map(|&b| usize::from(b)).collect(),
    };
    // the classifier arrow must itself be a commuting square into omega
    make_qarrow(parent, &omega, psi.clone(), chi.clone())?;
    Ok(ClassifyResult { psi, chi })
}

/// Pull psi back along the point at 1: the inputs classified as fully inside.
pub fn pullback_along_true(psi: &FinFn) -> Vec<usize> {
    (0..psi.dom.len()).filter(|&x| psi.apply(x) == 2).collect()
}

/// The base square: classifying the point T inside omega itself must give
/// the identity characteristic map, and pulling back along true recovers
/// exactly the point at 1.
pub fn base_square_is_pullback() -> bool {
    let one = terminal_q();
    let omega = omega_q();
    let point = true_point();
    match classify_subobject(&one, &omega, &point.h, &point.k) {
        Ok(res) => {
            res.psi.map == vec![0, 1, 2] && pullback_along_true(&res.psi) == vec![2]
        }
        Err(_) => false,
    }
}

// ---------------------------------------------------------------------------
// Exponentials
// ---------------------------------------------------------------------------

const EXP_GUARD: usize = 6;

#[derive(Debug, Clone)]
pub struct Exponential {
    /// all commuting squares from f to g, in enumeration order
    pub arrows: Vec<QArrow>,
    /// the exponential value function: arrow index |-> its output map
    pub object: QObject,
    /// index into `object.outputs()` for each arrow (its k-component)
    pub k_index: Vec<usize>,
    /// the product object (g^f) x f that eval acts on
    pub product: QObject,
    pub eval: QArrow,
}

fn encode_map(map: &[usize]) -> String {
    map.iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

/// Enumerate all arrows f -> g, package them as the exponential object
/// g^f with its evaluation arrow.
pub fn exponential_q(f: &QObject, g: &QObject) -> Result<Exponential, ToposError> {
    let (si, so) = (f.inputs().len(), f.outputs().len());
    let (ti, to) = (g.inputs().len(), g.outputs().len());
    if si > EXP_GUARD || so > EXP_GUARD || ti > EXP_GUARD || to > EXP_GUARD {
        return Err(ToposError::SizeGuard);
    }

    let mut arrows = Vec::new();
    for h_map in all_maps(si, ti) {
        // h pins k on the image of f; free elsewhere
        let mut forced: Vec<Option<usize>> = vec![None; so];
        let mut consistent = true;
        for x in 0..si {
            let want = g.f.apply(h_map[x]);
            let slot = &mut forced[f.f.apply(x)];
            match slot {
                None => *slot = Some(want),
                Some(v) if *v == want => {}
                _ => {
                    consistent = false;
                    break;
                }
            }
        }
        if !consistent {
            continue;
        }
        let free: Vec<usize> = (0..so).filter(|&o| forced[o].is_none()).collect();
        for fill in all_maps(free.len(), to) {
            let mut k_map: Vec<usize> = forced.iter().map(|v| v.unwrap_or(0)).collect();
            for (slot, &v) in free.iter().zip(&fill) {
                k_map[*slot] = v;
            }
            let h = FinFn {
                dom: f.inputs().to_vec(),
                cod: g.inputs().to_vec(),
                map: h_map.clone(),
            };
            let k = FinFn {
                dom: f.outputs().to_vec(),
                cod: g.outputs().to_vec(),
                map: k_map,
            };
            arrows.push(make_qarrow(f, g, h, k).expect("constructed to commute"));
        }
    }

    // F: every function from f's outputs to g's outputs
    let all_ks = all_maps(so, to);
    let f_names: Vec<String> = all_ks.iter().map(|m| format!("[{}]", encode_map(m))).collect();
    let k_pos: BTreeMap<String, usize> = f_names
        .iter()
        .enumerate()
        .map(|(i, n)| (n.clone(), i))
        .collect();

    let e_names: Vec<String> = arrows
        .iter()
        .map(|a| format!("<{};{}>", encode_map(&a.h.map), encode_map(&a.k.map)))
        .collect();
    let k_index: Vec<usize> = arrows
        .iter()
        .map(|a| k_pos[&format!("[{}]", encode_map(&a.k.map))])
        .collect();
    let object = QObject::new(FinFn {
        dom: e_names.clone(),
        cod: f_names.clone(),
        map: k_index.clone(),
    });

    // product object (g^f) x f
    let mut prod_in = Vec::new();
    let mut prod_map = Vec::new();
    for (e, _) in arrows.iter().enumerate() {
        for x in 0..si {
            prod_in.push(format!("({},{})", e_names[e], f.inputs()[x]));
            prod_map.push(k_index[e] * so + f.f.apply(x));
        }
    }
    let mut prod_out = Vec::new();
    for name in &f_names {
        for o in f.outputs() {
            prod_out.push(format!("({name},{o})"));
        }
    }
    let product = QObject::new(FinFn {
        dom: prod_in.clone(),
        cod: prod_out.clone(),
        map: prod_map,
    });

    // eval: u(<e, x>) = h_e(x) on inputs, v(<m, o>) = m(o) on outputs
    let u = FinFn {
        dom: prod_in,
        cod: g.inputs().to_vec(),
        map: arrows
            .iter()
            .flat_map(|a| (0..si).map(|x| a.h.apply(x)).collect::<Vec<_>>())
            .collect(),
    };
    let v = FinFn {
        dom: prod_out,
        cod: g.outputs().to_vec(),
        map: all_ks
            .iter()
            .flat_map(|m| m.iter().copied().collect::<Vec<_>>())
            .collect(),
    };
    let eval = make_qarrow(&product, g, u, v)?;
    Ok(Exponential { arrows, object, k_index, product, eval })
}

/// Product of two value functions: pairs of inputs mapped to pairs of
/// outputs componentwise.
pub fn product_q(a: &QObject, b: &QObject) -> QObject {
    let mut dom = Vec::new();
    let mut map = Vec::new();
    for (x, xn) in a.inputs().iter().enumerate() {
        for (y, yn) in b.inputs().iter().enumerate() {
            dom.push(format!("({xn},{yn})"));
            map.push(a.f.apply(x) * b.outputs().len() + b.f.apply(y));
        }
    }
    let mut cod = Vec::new();
    for on in a.outputs() {
        for pn in b.outputs() {
            cod.push(format!("({on},{pn})"));
        }
    }
    QObject::new(FinFn { dom, cod, map })
}

// ---------------------------------------------------------------------------
// Coequalizer helper
// ---------------------------------------------------------------------------

/// Quotient of the shared codomain by the equivalence generated by
/// f(x) ~ g(x); returns the projection map.
pub fn coequalizer_finset(f: &FinFn, g: &FinFn) -> Result<FinFn, ToposError> {
    if f.dom != g.dom || f.cod != g.cod {
        return Err(ToposError::Mismatch("parallel pair required".into()));
    }
    let n = f.cod.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for x in 0..f.dom.len() {
        let a = find(&mut parent, f.apply(x));
        let b = find(&mut parent, g.apply(x));
        if a != b {
            parent[a.max(b)] = a.min(b);
        }
    }
    let mut roots = Vec::new();
    let mut index = vec![usize::MAX; n];
    for y in 0..n {
        let r = find(&mut parent, y);
        if index[r] == usize::MAX {
            index[r] = roots.len();
            roots.push(r);
        }
    }
    let cod: Vec<String> = roots.iter().map(|&r| f.cod[r].clone()).collect();
    let map: Vec<usize> = (0..n).map(|y| index[find(&mut parent, y)]).collect();
    Ok(FinFn { dom: f.cod.clone(), cod, map })
}
