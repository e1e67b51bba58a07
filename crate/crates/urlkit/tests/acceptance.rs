//! End-to-end acceptance suite. Each test covers one release criterion and
//! prints a single pass line; a failed assertion marks the criterion failed.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use urlkit::coalgebra::{
    check_bisimulation, lambek_check, largest_bisimulation, parse_functor,
    quotient_coalgebra, FElement, FiniteCoalgebra, LabelSets, Partition,
};
use urlkit::engine;
use urlkit::learn::{self, Layer, ParamFn};
use urlkit::metric::{self, Ext};
use urlkit::models::{self, Mdp};
use urlkit::solvers::{self, Policy};
use urlkit::udm::{self, IndexPartition, UdmObject};

fn pass(n: usize, name: &str) {
    println!("acceptance {n} ({name}): PASS");
}

// -------------------------------------------------------------------------
// 1. solver agreement
// -------------------------------------------------------------------------

#[test]
fn acceptance_01_solver_agreement() {
    let start = std::time::Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    for trial in 0..50u64 {
        let n = rng.gen_range(2..=20);
        let k = rng.gen_range(1..=4);
        let gamma = rng.gen_range(0.5..=0.95);
        let m = models::random_mdp(n, k, gamma, trial);
        let vi = solvers::value_iteration(&m, 1e-12).v;
        let pi = solvers::policy_iteration(&m).unwrap().v;
        let lp = solvers::lp_solve(&m, &vec![1.0; n]).unwrap();
        assert!(solvers::sup_norm_diff(&vi, &pi) <= 1e-6, "vi/pi trial {trial}");
        assert!(solvers::sup_norm_diff(&vi, &lp) <= 1e-6, "vi/lp trial {trial}");
        assert!(solvers::sup_norm_diff(&pi, &lp) <= 1e-6, "pi/lp trial {trial}");
    }
    assert!(start.elapsed().as_secs_f64() < 5.0, "took {:?}", start.elapsed());
    pass(1, "solver agreement");
}

// -------------------------------------------------------------------------
// 2. asynchronous convergence and starvation
// -------------------------------------------------------------------------

#[test]
fn acceptance_02_async_convergence() {
    let m = models::random_mdp(6, 2, 0.8, 200);
    let n = m.n_states();
    let fs = engine::bellman_components(&m);
    let v_star = solvers::value_iteration(&m, 1e-13).v;
    for p in [0.2, 0.5] {
        for d in [0usize, 3, 10] {
            for seed in 0..3u64 {
                let sched = engine::make_schedule(n, 20_000, p, d, seed).unwrap();
                let trace = engine::async_fixed_point(&fs, &vec![0.0; n], &sched, 1e-9).unwrap();
                assert!(trace.converged, "p={p} D={d} seed={seed}");
                assert!(
                    solvers::sup_norm_diff(&trace.final_x, &v_star) <= 1e-6,
                    "p={p} D={d} seed={seed}"
                );
                let report =
                    engine::verify_act_conditions(&fs, &trace, &v_star, m.gamma, 1e-9).unwrap();
                assert!(report.grows, "box index must keep growing (p={p} D={d} seed={seed})");
                assert!(report.starved.is_empty());
            }
        }
    }
    // starving one component stalls the box index
    let victim = (0..n).max_by(|&a, &b| v_star[a].abs().total_cmp(&v_star[b].abs())).unwrap();
    let sched = engine::starved_schedule(n, 400, victim);
    let trace = engine::async_fixed_point(&fs, &vec![0.0; n], &sched, 1e-9).unwrap();
    assert!(!trace.converged);
    let report = engine::verify_act_conditions(&fs, &trace, &v_star, m.gamma, 1e-9).unwrap();
    assert!(report.starved.contains(&victim));
    assert!(!report.grows, "stalled run must not report growth");
    pass(2, "asynchronous convergence");
}

// -------------------------------------------------------------------------
// 3. q-learning accuracy on chains
// -------------------------------------------------------------------------

fn chain_mdp(n: usize, gamma: f64) -> Mdp {
    let states: Vec<String> = (0..n).map(|i| format!("c{i}")).collect();
    let actions = vec!["fwd".to_string(), "stay".to_string()];
    let mut p = vec![vec![vec![0.0; n]; 2]; n];
    let mut r = vec![vec![0.0; 2]; n];
    for s in 0..n {
        let next = (s + 1).min(n - 1);
        p[s][0][next] = 1.0;
        p[s][1][s] = 1.0;
        if s + 1 == n - 1 || (n == 1 && s == 0) {
            r[s][0] = 1.0;
        }
        if s == n - 1 {
            p[s][0] = vec![0.0; n];
            p[s][0][s] = 1.0;
            r[s][0] = 0.0;
        }
    }
    Mdp::new(states, actions, gamma, p, r).unwrap()
}

#[test]
fn acceptance_03_q_learning() {
    for n in [3usize, 4, 5] {
        let m = chain_mdp(n, 0.5);
        let v = solvers::value_iteration(&m, 1e-13).v;
        let q_star = solvers::q_from_v(&m, &v);
        let mut avg_err = 0.0;
        for seed in 0..5u64 {
            let res = engine::q_learning(
                &m,
                &Policy::uniform(&m),
                100_000,
                &engine::RateSchedule::PerVisit,
                seed,
            );
            let err = (0..m.n_states())
                .flat_map(|s| (0..m.n_actions()).map(move |a| (s, a)))
                .map(|(s, a)| (res.q[s][a] - q_star[s][a]).abs())
                .fold(0.0f64, f64::max);
            avg_err += err / 5.0;
        }
        assert!(avg_err <= 1e-2, "chain of {n}: avg error {avg_err}");
    }
    pass(3, "q-learning accuracy");
}

// -------------------------------------------------------------------------
// 4. bisimulation minimality against exhaustive search
// -------------------------------------------------------------------------

/// All set partitions of {0..n} as block-label vectors.
fn all_partitions(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut labels = vec![0usize; n];
    fn rec(labels: &mut Vec<usize>, i: usize, max: usize, out: &mut Vec<Vec<usize>>) {
        if i == labels.len() {
            out.push(labels.clone());
            return;
        }
        for b in 0..=max + 1 {
            labels[i] = b;
            rec(labels, i + 1, max.max(b), out);
        }
    }
    if n == 0 {
        return vec![vec![]];
    }
    labels[0] = 0;
    rec(&mut labels, 1, 0, &mut out);
    out
}

fn partition_from_labels(states: &[String], labels: &[usize]) -> Partition {
    let blocks = labels.iter().max().map_or(0, |&m| m + 1);
    let mut sets = vec![std::collections::BTreeSet::new(); blocks];
    for (s, &b) in states.iter().zip(labels) {
        sets[b].insert(s.clone());
    }
    Partition::new(sets, states).unwrap()
}

fn random_system(kind: usize, size: usize, rng: &mut ChaCha8Rng) -> FiniteCoalgebra {
    let states: Vec<String> = (0..size).map(|i| format!("s{i}")).collect();
    let mut labels: LabelSets = BTreeMap::new();
    labels.insert("A".into(), vec!["a".into(), "b".into()]);
    let (functor_text, alpha): (&str, BTreeMap<String, FElement>) = match kind {
        0 => {
            // distributions over the carrier
            let alpha = states
                .iter()
                .map(|s| {
                    let k = rng.gen_range(1..=2usize);
                    let mut entries: Vec<(FElement, f64)> = (0..k)
                        .map(|_| {
                            (
                                FElement::pt(&states[rng.gen_range(0..size)]),
                                rng.gen_range(0.1..1.0),
                            )
                        })
                        .collect();
                    let total: f64 = entries.iter().map(|(_, w)| w).sum();
                    for e in entries.iter_mut() {
                        e.1 /= total;
                    }
                    (s.clone(), FElement::dist(entries))
                })
                .collect();
            ("D", alpha)
        }
        1 => {
            // labeled transition sets
            let alpha = states
                .iter()
                .map(|s| {
                    let k = rng.gen_range(0..=3usize);
                    let entries: Vec<FElement> = (0..k)
                        .map(|_| {
                            let l = if rng.gen_bool(0.5) { "a" } else { "b" };
                            FElement::Pair(
                                Box::new(FElement::ConstLabel(l.into())),
                                Box::new(FElement::pt(&states[rng.gen_range(0..size)])),
                            )
                        })
                        .collect();
                    (s.clone(), FElement::set(entries))
                })
                .collect();
            ("P(A x _)", alpha)
        }
        _ => {
            // partial deterministic automata
            let alpha = states
                .iter()
                .map(|s| {
                    let table: BTreeMap<String, FElement> = ["a", "b"]
                        .iter()
                        .map(|&l| {
                            let v = if rng.gen_bool(0.7) {
                                FElement::Inl(Box::new(FElement::pt(
                                    &states[rng.gen_range(0..size)],
                                )))
                            } else {
                                FElement::Inr(Box::new(FElement::ConstLabel("1".into())))
                            };
                            (l.to_string(), v)
                        })
                        .collect();
                    (s.clone(), FElement::Fun(table))
                })
                .collect();
            ("(_ + 1)^A", alpha)
        }
    };
    let functor = parse_functor(functor_text, Some(&labels)).unwrap();
    FiniteCoalgebra::new(functor, labels, states, alpha).unwrap()
}

#[test]
fn acceptance_04_bisimulation_minimality() {
    let mut rng = ChaCha8Rng::seed_from_u64(400);
    let mut count = 0;
    while count < 100 {
        let kind = count % 3;
        let size = rng.gen_range(2..=6);
        let system = random_system(kind, size, &mut rng);
        count += 1;
        let lb = largest_bisimulation(&system);
        assert!(
            check_bisimulation(&system, &system, &lb.relation()).unwrap(),
            "largest bisimulation must itself be a bisimulation"
        );
        // every equivalence whose relation is a bisimulation refines it
        for labels in all_partitions(size) {
            let part = partition_from_labels(&system.states, &labels);
            if check_bisimulation(&system, &system, &part.relation()).unwrap() {
                for (s, t) in part.relation() {
                    assert!(lb.same_block(&s, &t), "coarser bisimulation found");
                }
            }
        }
        // quotient re-minimization is discrete
        let (q, _) = quotient_coalgebra(&system, &lb).unwrap();
        let again = largest_bisimulation(&q);
        assert!(again.blocks.iter().all(|b| b.len() == 1));
    }
    pass(4, "bisimulation minimality");
}

// -------------------------------------------------------------------------
// 5. homomorphism soundness
// -------------------------------------------------------------------------

#[test]
fn acceptance_05_mdp_homomorphism_soundness() {
    let mut checked = 0;
    for seed in 0..10u64 {
        let m = models::random_mdp(3, 2, 0.9, seed);
        let homs = models::enumerate_mdp_homomorphisms(&m, &m, 100).unwrap();
        assert!(!homs.is_empty(), "identity must appear");
        for h in &homs {
            assert!(models::check_mdp_homomorphism(&m, &m, h).unwrap().ok());
            let report = models::optimal_value_invariance(&m, &m, h).unwrap();
            assert!(report.gap <= 1e-6, "gap {}", report.gap);
            checked += 1;
        }
    }
    // a genuine collapse: duplicated state onto its quotient
    let m = models::chain2_with_duplicate();
    let c = models::mdp_to_coalgebra(&m);
    let part = largest_bisimulation(&c);
    let blocks: Vec<Vec<usize>> = part
        .blocks
        .iter()
        .map(|b| b.iter().map(|s| m.state_index(s).unwrap()).collect())
        .collect();
    let (q, _) = models::quotient_mdp(&m, &blocks).unwrap();
    assert!(q.n_states() < m.n_states());
    let homs = models::enumerate_mdp_homomorphisms(&m, &q, 100).unwrap();
    assert!(!homs.is_empty());
    for h in &homs {
        assert!(models::check_mdp_homomorphism(&m, &q, h).unwrap().ok());
        assert!(models::optimal_value_invariance(&m, &q, h).unwrap().gap <= 1e-6);
        checked += 1;
    }
    assert!(checked > 0);
    pass(5, "homomorphism soundness");
}

// -------------------------------------------------------------------------
// 6. embedding isometry
// -------------------------------------------------------------------------

#[test]
fn acceptance_06_embedding_isometry() {
    for seed in 0..100u64 {
        let space = metric::random_triangle_closed(5, seed);
        assert!(metric::check_gms(&space).ok(), "seed {seed}");
        assert!(metric::yoneda_isometry_check(&space).ok(), "seed {seed}");
    }
    // the three example metrics: preorder, word-prefix, truncated interval
    let leq = vec![
        vec![true, true, true],
        vec![false, true, true],
        vec![false, false, true],
    ];
    let preorder = metric::GenMetricSpace::from_preorder(
        vec!["x".into(), "y".into(), "z".into()],
        &leq,
    );
    assert!(metric::yoneda_isometry_check(&preorder).ok());

    let words = ["", "a", "ab", "abc", "b", "ba"];
    let prefix = metric::GenMetricSpace::new(
        words.iter().map(|s| s.to_string()).collect(),
        words
            .iter()
            .map(|u| words.iter().map(|v| metric::prefix_metric(u, v)).collect())
            .collect(),
    );
    assert!(metric::check_gms(&prefix).ok());
    assert!(metric::yoneda_isometry_check(&prefix).ok());

    let interval = metric::GenMetricSpace::from_interval_points(&[
        Ext::ZERO,
        Ext::fin(1, 2),
        Ext::fin(2, 1),
        Ext::fin(7, 2),
        Ext::Inf,
    ]);
    assert!(metric::check_gms(&interval).ok());
    assert!(metric::yoneda_isometry_check(&interval).ok());
    pass(6, "embedding isometry");
}

// -------------------------------------------------------------------------
// 7. coinduction for the optimality operator
// -------------------------------------------------------------------------

#[test]
fn acceptance_07_metric_coinduction() {
    let mut rng = ChaCha8Rng::seed_from_u64(700);
    for seed in 0..20u64 {
        let mut m = models::random_mdp(5, 2, 0.8, seed);
        for row in m.r.iter_mut() {
            for x in row.iter_mut() {
                *x = x.abs();
            }
        }
        let r_max = m.r.iter().flatten().fold(0.0f64, |acc, &x| acc.max(x));
        let hi = r_max / (1.0 - m.gamma);
        let fs = engine::bellman_components(&m);
        let f = |v: &[f64]| fs.iter().map(|f| f(v)).collect::<Vec<_>>();
        let inside =
            |v: &[f64]| v.iter().all(|&x| -1e-12 <= x && x <= hi + 1e-12);
        let x0: Vec<f64> = (0..5).map(|_| rng.gen_range(0.0..=hi)).collect();
        assert!(inside(&x0));
        let res = metric::metric_coinduct(&f, &x0, &inside, 1e-10, 100_000).unwrap();
        let v_star = solvers::value_iteration(&m, 1e-13).v;
        assert!(res.phi_holds, "iterates must stay in the box (seed {seed})");
        assert!(solvers::sup_norm_diff(&res.x_star, &v_star) <= 1e-8, "seed {seed}");
        assert!(inside(&v_star));
    }
    pass(7, "metric coinduction");
}

// -------------------------------------------------------------------------
// 8. topos checks
// -------------------------------------------------------------------------

#[test]
fn acceptance_08_topos() {
    use urlkit::topos::*;
    assert!(base_square_is_pullback());
    let mut rng = ChaCha8Rng::seed_from_u64(800);
    for trial in 0..50 {
        let ni = rng.gen_range(1..=4usize);
        let no = rng.gen_range(1..=3usize);
        let parent = QObject::new(
            FinFn::new(
                (0..ni).map(|i| format!("x{i}")).collect(),
                (0..no).map(|o| format!("o{o}")).collect(),
                (0..ni).map(|_| rng.gen_range(0..no)).collect(),
            )
            .unwrap(),
        );
        let keep: Vec<usize> = (0..ni).filter(|_| rng.gen_bool(0.5)).collect();
        let mut outs: Vec<usize> = keep.iter().map(|&x| parent.f.apply(x)).collect();
        outs.sort_unstable();
        outs.dedup();
        let sub = QObject::new(FinFn {
            dom: keep.iter().map(|&x| parent.inputs()[x].clone()).collect(),
            cod: outs.iter().map(|&o| parent.outputs()[o].clone()).collect(),
            map: keep
                .iter()
                .map(|&x| outs.iter().position(|&o| o == parent.f.apply(x)).unwrap())
                .collect(),
        });
        let i = FinFn::new(sub.inputs().to_vec(), parent.inputs().to_vec(), keep.clone()).unwrap();
        let j = FinFn::new(sub.outputs().to_vec(), parent.outputs().to_vec(), outs).unwrap();
        let res = classify_subobject(&sub, &parent, &i, &j).unwrap();
        assert_eq!(pullback_along_true(&res.psi), keep, "trial {trial}");
    }

    // exponentials: transpose existence and uniqueness at guard scale
    for (fi, fo, gi, go) in [(1usize, 1usize, 2usize, 2usize), (2, 2, 2, 1), (2, 1, 3, 2)] {
        let f = QObject::new(
            FinFn::new(
                (0..fi).map(|i| format!("a{i}")).collect(),
                (0..fo).map(|o| format!("p{o}")).collect(),
                (0..fi).map(|i| i % fo).collect(),
            )
            .unwrap(),
        );
        let g = QObject::new(
            FinFn::new(
                (0..gi).map(|i| format!("b{i}")).collect(),
                (0..go).map(|o| format!("q{o}")).collect(),
                (0..gi).map(|i| i % go).collect(),
            )
            .unwrap(),
        );
        let exp = exponential_q(&f, &g).unwrap();
        let b = QObject::new(
            FinFn::new(
                vec!["u0".into(), "u1".into()],
                vec!["w".into()],
                vec![0, 0],
            )
            .unwrap(),
        );
        let bf = product_q(&b, &f);
        let mut checked_arrows = 0;
        for h_map in maps_into(bf.inputs().len(), g.inputs().len()) {
            for k_map in maps_into(bf.outputs().len(), g.outputs().len()) {
                let h = FinFn::new(bf.inputs().to_vec(), g.inputs().to_vec(), h_map.clone());
                let k = FinFn::new(bf.outputs().to_vec(), g.outputs().to_vec(), k_map.clone());
                let arrow = match make_qarrow(&bf, &g, h.unwrap(), k.unwrap()) {
                    Ok(a) => a,
                    Err(_) => continue,
                };
                let mut matches = 0;
                for cand in maps_into(b.inputs().len(), exp.arrows.len()) {
                    let ok = (0..b.inputs().len()).all(|bi| {
                        (0..fi).all(|x| {
                            exp.arrows[cand[bi]].h.apply(x) == arrow.h.apply(bi * fi + x)
                        })
                    });
                    if ok {
                        matches += 1;
                    }
                }
                assert_eq!(matches, 1, "transpose must be unique");
                checked_arrows += 1;
            }
        }
        assert!(checked_arrows > 0);
    }

    // the fixed-point criterion: exactly the bijective transition maps pass
    let mut rng = ChaCha8Rng::seed_from_u64(801);
    for trial in 0..50 {
        let size = rng.gen_range(2..=4usize);
        let states: Vec<String> = (0..size).map(|i| format!("s{i}")).collect();
        let images: Vec<usize> = if trial % 2 == 0 {
            // a random permutation
            let mut idx: Vec<usize> = (0..size).collect();
            for i in (1..size).rev() {
                idx.swap(i, rng.gen_range(0..=i));
            }
            idx
        } else {
            (0..size).map(|_| rng.gen_range(0..size)).collect()
        };
        let bijective = {
            let mut seen = vec![false; size];
            images.iter().all(|&v| !std::mem::replace(&mut seen[v], true))
        };
        let functor = parse_functor("_", None).unwrap();
        let alpha: BTreeMap<String, FElement> = states
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), FElement::pt(&states[images[i]])))
            .collect();
        let system =
            FiniteCoalgebra::new(functor, LabelSets::new(), states, alpha).unwrap();
        assert_eq!(lambek_check(&system).unwrap(), bijective, "trial {trial}");
    }
    pass(8, "topos constructions");
}

fn maps_into(dom: usize, cod: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..dom {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (0..cod).map(move |v| {
                    let mut next = prefix.clone();
                    next.push(v);
                    next
                })
            })
            .collect();
    }
    out
}

// -------------------------------------------------------------------------
// 9. learner functoriality and gradients
// -------------------------------------------------------------------------

#[test]
fn acceptance_09_learn_functoriality() {
    let pairs: Vec<(ParamFn, ParamFn)> = vec![
        (
            ParamFn::new(2, vec![Layer::Affine { in_dim: 2, out_dim: 3 }]).unwrap(),
            ParamFn::new(3, vec![Layer::Affine { in_dim: 3, out_dim: 2 }]).unwrap(),
        ),
        (
            ParamFn::new(2, vec![Layer::Affine { in_dim: 2, out_dim: 4 }, Layer::Tanh]).unwrap(),
            ParamFn::new(4, vec![Layer::Affine { in_dim: 4, out_dim: 1 }]).unwrap(),
        ),
        (
            ParamFn::new(3, vec![Layer::Affine { in_dim: 3, out_dim: 3 }, Layer::Sigmoid])
                .unwrap(),
            ParamFn::new(3, vec![Layer::Tanh, Layer::Affine { in_dim: 3, out_dim: 2 }]).unwrap(),
        ),
    ];
    for (idx, (f, g)) in pairs.iter().enumerate() {
        let report = learn::functoriality_check(f, g, 0.01, 100, idx as u64).unwrap();
        assert!(report.max_dev() <= 1e-9, "pair {idx}: {}", report.max_dev());
    }

    let mut rng = ChaCha8Rng::seed_from_u64(900);
    for trial in 0..5 {
        let hidden = rng.gen_range(2..=8);
        let f = ParamFn::new(
            3,
            vec![
                Layer::Affine { in_dim: 3, out_dim: hidden },
                if trial % 2 == 0 { Layer::Tanh } else { Layer::Sigmoid },
                Layer::Affine { in_dim: hidden, out_dim: 2 },
            ],
        )
        .unwrap();
        let p: Vec<f64> = (0..f.param_dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let a: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let b: Vec<f64> = (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (gp, _, _) = f.backward(&p, &a, &b);
        let loss = |p: &[f64]| -> f64 {
            f.forward(p, &a)
                .iter()
                .zip(&b)
                .map(|(o, t)| 0.5 * (o - t).powi(2))
                .sum()
        };
        let h = 1e-5;
        for i in 0..p.len() {
            let mut hi = p.clone();
            let mut lo = p.clone();
            hi[i] += h;
            lo[i] -= h;
            let fd = (loss(&hi) - loss(&lo)) / (2.0 * h);
            assert!((gp[i] - fd).abs() / fd.abs().max(1.0) <= 1e-6);
        }
    }
    pass(9, "learner functoriality");
}

// -------------------------------------------------------------------------
// 10. decision models
// -------------------------------------------------------------------------

#[test]
fn acceptance_10_udm() {
    // the mutual-observation pair: unsolvable and not causal
    let skeleton = UdmObject {
        agents: vec!["a".into(), "b".into()],
        omega: vec!["w".into()],
        p_omega: vec![1.0],
        decisions: vec![vec!["0".into(), "1".into()], vec!["0".into(), "1".into()]],
        info: Vec::new(),
    };
    let mutual = UdmObject::new(
        skeleton.agents.clone(),
        skeleton.omega.clone(),
        skeleton.p_omega.clone(),
        skeleton.decisions.clone(),
        vec![
            skeleton.field_of_coords(false, &[1]),
            skeleton.field_of_coords(false, &[0]),
        ],
    )
    .unwrap();
    assert!(!udm::check_solvable_all(&mutual).unwrap().solvable);
    assert!(!udm::check_causal(&mutual).unwrap().causal);

    // a three-agent sequential chain: causal, and exhaustively solvable
    let skeleton = UdmObject {
        agents: vec!["a".into(), "b".into(), "c".into()],
        omega: vec!["w0".into(), "w1".into()],
        p_omega: vec![0.5, 0.5],
        decisions: vec![
            vec!["0".into(), "1".into()],
            vec!["0".into(), "1".into()],
            vec!["0".into(), "1".into()],
        ],
        info: Vec::new(),
    };
    let chain = UdmObject::new(
        skeleton.agents.clone(),
        skeleton.omega.clone(),
        skeleton.p_omega.clone(),
        skeleton.decisions.clone(),
        vec![
            skeleton.field_of_coords(true, &[]),
            skeleton.field_of_coords(true, &[0]),
            skeleton.field_of_coords(true, &[0, 1]),
        ],
    )
    .unwrap();
    let causal = udm::check_causal(&chain).unwrap();
    assert!(causal.causal);
    assert_eq!(causal.static_order, Some(vec![0, 1, 2]));
    assert!(udm::check_solvable_all(&chain).unwrap().solvable);

    // lattice laws of the information join on 50 random pairs
    let mut rng = ChaCha8Rng::seed_from_u64(1000);
    for _ in 0..50 {
        let n = rng.gen_range(4..=10usize);
        let p = IndexPartition::from_labels((0..n).map(|_| rng.gen_range(0..3)).collect());
        let q = IndexPartition::from_labels((0..n).map(|_| rng.gen_range(0..3)).collect());
        let r = IndexPartition::from_labels((0..n).map(|_| rng.gen_range(0..3)).collect());
        let pq = p.join(&q).unwrap();
        assert_eq!(pq, q.join(&p).unwrap());
        assert_eq!(p.join(&p).unwrap(), p);
        assert_eq!(pq.join(&r).unwrap(), p.join(&q.join(&r).unwrap()).unwrap());
        assert!(pq.refines(&p) && pq.refines(&q));
    }
    pass(10, "decision models");
}

// -------------------------------------------------------------------------
// 11. byte-identical traces
// -------------------------------------------------------------------------

#[test]
fn acceptance_11_determinism() {
    use std::process::Command;
    let bin = env!("CARGO_BIN_EXE_urlkit");
    let dir = tempfile::tempdir().unwrap();
    let mdp_path = dir.path().join("m.json");
    std::fs::write(&mdp_path, models::random_mdp(4, 2, 0.8, 11).to_json().to_string()).unwrap();

    let run_async = |out: &std::path::Path| {
        let status = Command::new(bin)
            .args([
                "async",
                "--mdp",
                mdp_path.to_str().unwrap(),
                "--schedule",
                r#"{"p":0.4,"D":3,"seed":9,"horizon":5000}"#,
                "--trace",
                out.to_str().unwrap(),
            ])
            .output()
            .unwrap();
        assert!(status.status.success());
    };
    let (a1, a2) = (dir.path().join("a1.csv"), dir.path().join("a2.csv"));
    run_async(&a1);
    run_async(&a2);
    assert_eq!(std::fs::read(&a1).unwrap(), std::fs::read(&a2).unwrap());

    let net_path = dir.path().join("net.json");
    std::fs::write(
        &net_path,
        r#"{"in":2,"layers":[{"kind":"affine","in":2,"out":1}]}"#,
    )
    .unwrap();
    let data_path = dir.path().join("data.csv");
    std::fs::write(&data_path, "0,0,0.5\n1,0,2.5\n0,1,-0.5\n").unwrap();
    let run_learn = |out: &std::path::Path| {
        let status = Command::new(bin)
            .args([
                "learn",
                "train",
                "--net",
                net_path.to_str().unwrap(),
                "--data",
                data_path.to_str().unwrap(),
                "--eps",
                "0.05",
                "--steps",
                "200",
                "--seed",
                "5",
                "--trace",
                out.to_str().unwrap(),
            ])
            .output()
            .unwrap();
        assert!(status.status.success());
    };
    let (l1, l2) = (dir.path().join("l1.csv"), dir.path().join("l2.csv"));
    run_learn(&l1);
    run_learn(&l2);
    assert_eq!(std::fs::read(&l1).unwrap(), std::fs::read(&l2).unwrap());
    pass(11, "trace determinism");
}
