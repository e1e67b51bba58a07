//! Command-line front end: JSON models in, JSON results on stdout, CSV
//! traces on disk. Exit codes: 0 success, 2 failed validation or failed
//! check, 64 usage error, 65 malformed input.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use urlkit::coalgebra::{self, json as cjson};
use urlkit::engine::{self, RateSchedule};
use urlkit::learn;
use urlkit::metric;
use urlkit::models::{self, Mdp};
use urlkit::solvers::{self, Policy};
use urlkit::topos;
use urlkit::udm;

const EXIT_CHECK: u8 = 2;
const EXIT_USAGE: u8 = 64;
const EXIT_DATA: u8 = 65;

#[derive(Parser)]
#[command(name = "urlkit", version, about = "Coalgebraic toolkit for tabular decision processes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve an MDP exactly
    Solve(SolveArgs),
    /// Run tabular temporal-difference or Q-learning
    Rl(RlArgs),
    /// Asynchronous fixed-point iteration with stale reads
    Async(AsyncArgs),
    /// Minimize an MDP by its largest bisimulation
    Minimize(MinimizeArgs),
    /// Verify homomorphisms, bisimulations, and metric axioms
    Check(CheckArgs),
    /// Generalized metric space tools
    Metric(MetricArgs),
    /// Finite value-function category constructions
    Topos(ToposArgs),
    /// Compositional gradient learners
    Learn(LearnArgs),
    /// Decision models with partial information
    Udm(UdmArgs),
}

#[derive(Args)]
struct SolveArgs {
    /// vi, pi, or lp
    #[arg(long)]
    method: String,
    #[arg(long)]
    mdp: PathBuf,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// state-weight file for the lp objective
    #[arg(long)]
    weights: Option<PathBuf>,
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct RlArgs {
    /// q or td
    #[arg(long)]
    method: String,
    #[arg(long)]
    mdp: PathBuf,
    #[arg(long, default_value_t = 100_000)]
    steps: usize,
    #[arg(long)]
    seed: Option<u64>,
    /// rate schedule as JSON, e.g. {"family":"harmonic","a":1,"b":1,"p":1}
    #[arg(long, default_value = r#"{"family":"per-visit"}"#)]
    rate: String,
}

#[derive(Args)]
struct AsyncArgs {
    #[arg(long)]
    mdp: PathBuf,
    #[arg(long, default_value = "bellman")]
    method: String,
    /// schedule as JSON: {"p":0.5,"D":0,"seed":0,"horizon":100000}
    #[arg(long, default_value = "{}")]
    schedule: String,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct MinimizeArgs {
    #[arg(long)]
    mdp: PathBuf,
}

#[derive(Args)]
struct CheckArgs {
    #[command(subcommand)]
    what: CheckCommand,
}

#[derive(Subcommand)]
enum CheckCommand {
    /// Metric axioms of a space file
    Gms {
        #[arg(long)]
        space: PathBuf,
    },
    /// Coalgebra homomorphism: does the map commute with dynamics?
    Hom {
        #[arg(long)]
        src: PathBuf,
        #[arg(long)]
        dst: PathBuf,
        /// JSON object {state: image-state}
        #[arg(long)]
        map: PathBuf,
    },
    /// Is the listed relation a bisimulation?
    Bisim {
        #[arg(long)]
        src: PathBuf,
        #[arg(long)]
        dst: PathBuf,
        /// JSON array of [state, state] pairs
        #[arg(long)]
        relation: PathBuf,
    },
}

#[derive(Args)]
struct MetricArgs {
    #[command(subcommand)]
    what: MetricCommand,
}

#[derive(Subcommand)]
enum MetricCommand {
    /// Metric axioms
    Check {
        #[arg(long)]
        space: PathBuf,
    },
    /// Distance-vector embedding and its exactness
    Yoneda {
        #[arg(long)]
        space: PathBuf,
    },
    /// Contraction estimate of a self-map given as an image list
    Contract {
        #[arg(long)]
        space: PathBuf,
        /// JSON array: image point name per point, in order
        #[arg(long)]
        map: PathBuf,
        #[arg(long, default_value_t = 5)]
        n_max: usize,
    },
}

#[derive(Args)]
struct ToposArgs {
    #[command(subcommand)]
    what: ToposCommand,
}

#[derive(Subcommand)]
enum ToposCommand {
    /// Three-valued characteristic map of a subobject
    Classify {
        #[arg(long)]
        instance: PathBuf,
    },
    /// Pullback of two finite maps with a shared codomain
    Pullback {
        #[arg(long)]
        instance: PathBuf,
    },
    /// Exponential object between two value functions
    Exp {
        #[arg(long)]
        instance: PathBuf,
    },
}

#[derive(Args)]
struct LearnArgs {
    #[command(subcommand)]
    what: LearnCommand,
}

#[derive(Subcommand)]
enum LearnCommand {
    /// Gradient-train a layered network on a CSV data file
    Train {
        #[arg(long)]
        net: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 0.01)]
        eps: f64,
        #[arg(long, default_value_t = 1000)]
        steps: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trace: Option<PathBuf>,
    },
}

#[derive(Args)]
struct UdmArgs {
    #[command(subcommand)]
    what: UdmCommand,
}

#[derive(Subcommand)]
enum UdmCommand {
    /// Solvability (exhaustive over measurable profiles) and causality
    Check {
        #[arg(long)]
        model: PathBuf,
    },
}

struct Failure {
    code: u8,
    body: Value,
}

impl Failure {
    fn data(msg: impl std::fmt::Display) -> Failure {
        Failure { code: EXIT_DATA, body: json!({"error": msg.to_string()}) }
    }

    fn check(body: Value) -> Failure {
        Failure { code: EXIT_CHECK, body }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let benign = matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            );
            let _ = e.print();
            return if benign { ExitCode::SUCCESS } else { ExitCode::from(EXIT_USAGE) };
        }
    };
    match dispatch(cli.command) {
        Ok(body) => {
            println!("{body}");
            ExitCode::SUCCESS
        }
        Err(f) => {
            println!("{}", f.body);
            ExitCode::from(f.code)
        }
    }
}

fn seed_or_env(flag: Option<u64>) -> u64 {
    flag.or_else(|| std::env::var("URLKIT_SEED").ok().and_then(|s| s.parse().ok()))
        .unwrap_or(0)
}

fn load_json(path: &PathBuf) -> Result<Value, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::data(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::data(format!("{}: {e}", path.display())))
}

fn load_mdp(path: &PathBuf) -> Result<Mdp, Failure> {
    models::Mdp::from_json(&load_json(path)?).map_err(Failure::data)
}

fn load_coalgebra(path: &PathBuf) -> Result<coalgebra::FiniteCoalgebra, Failure> {
    cjson::coalgebra_from_json(&load_json(path)?).map_err(Failure::data)
}

fn load_space(path: &PathBuf) -> Result<metric::GenMetricSpace, Failure> {
    metric::GenMetricSpace::from_json(&load_json(path)?).map_err(Failure::data)
}

fn write_csv(path: &PathBuf, header: &str, rows: &[String]) -> Result<(), Failure> {
    let mut text = String::from(header);
    text.push('\n');
    for row in rows {
        text.push_str(row);
        text.push('\n');
    }
    std::fs::write(path, text).map_err(|e| Failure::data(format!("{}: {e}", path.display())))
}

fn state_map(m: &Mdp, v: &[f64]) -> Value {
    Value::Object(
        m.states
            .iter()
            .zip(v)
            .map(|(s, &x)| (s.clone(), json!(x)))
            .collect(),
    )
}

fn policy_map(m: &Mdp, pi: &Policy) -> Value {
    match pi {
        Policy::Det(choice) => Value::Object(
            m.states
                .iter()
                .zip(choice)
                .map(|(s, &a)| (s.clone(), json!(m.actions[a])))
                .collect(),
        ),
        Policy::Stoch(rows) => Value::Object(
            m.states
                .iter()
                .zip(rows)
                .map(|(s, row)| {
                    let dist: serde_json::Map<String, Value> = m
                        .actions
                        .iter()
                        .zip(row)
                        .map(|(a, &p)| (a.clone(), json!(p)))
                        .collect();
                    (s.clone(), Value::Object(dist))
                })
                .collect(),
        ),
    }
}

fn dispatch(cmd: Command) -> Result<Value, Failure> {
    match cmd {
        Command::Solve(args) => run_solve(args),
        Command::Rl(args) => run_rl(args),
        Command::Async(args) => run_async_cmd(args),
        Command::Minimize(args) => run_minimize(args),
        Command::Check(args) => run_check(args.what),
        Command::Metric(args) => run_metric(args.what),
        Command::Topos(args) => run_topos(args.what),
        Command::Learn(args) => run_learn(args.what),
        Command::Udm(args) => run_udm(args.what),
    }
}

fn run_solve(args: SolveArgs) -> Result<Value, Failure> {
    let m = load_mdp(&args.mdp)?;
    let (v, extra) = match args.method.as_str() {
        "vi" => {
            let res = solvers::value_iteration(&m, args.tol);
            if let Some(path) = &args.trace {
                let mut rows = Vec::new();
                let mut x = vec![0.0; m.n_states()];
                for sweep in 0..res.iterations {
                    let next = solvers::bellman_optimal_backup(&m, &x);
                    let residual = solvers::sup_norm_diff(&next, &x);
                    rows.push(format!("{},{}", sweep + 1, residual));
                    x = next;
                    if residual <= args.tol {
                        break;
                    }
                }
                write_csv(path, "sweep,residual_sup", &rows)?;
            }
            (
                res.v,
                json!({"iterations": res.iterations, "error_bound": res.error_bound}),
            )
        }
        "pi" => {
            let res = solvers::policy_iteration(&m).map_err(Failure::data)?;
            if let Some(path) = &args.trace {
                write_csv(path, "sweep,residual_sup", &[])?;
            }
            (res.v, json!({"sweeps": res.sweeps}))
        }
        "lp" => {
            let weights = match &args.weights {
                Some(path) => {
                    let raw = load_json(path)?;
                    raw.as_array()
                        .ok_or_else(|| Failure::data("weights must be a JSON array"))?
                        .iter()
                        .map(|x| x.as_f64().ok_or_else(|| Failure::data("bad weight")))
                        .collect::<Result<Vec<f64>, _>>()?
                }
                None => vec![1.0; m.n_states()],
            };
            let v = solvers::lp_solve(&m, &weights).map_err(Failure::data)?;
            if let Some(path) = &args.trace {
                write_csv(path, "sweep,residual_sup", &[])?;
            }
            (v, json!({}))
        }
        other => {
            return Err(Failure {
                code: EXIT_USAGE,
                body: json!({"error": format!("unknown method `{other}`")}),
            })
        }
    };
    let greedy = solvers::greedy_policy(&m, &v);
    Ok(json!({
        "method": args.method,
        "V": state_map(&m, &v),
        "policy": policy_map(&m, &greedy.policy),
        "extra": extra,
    }))
}

fn run_rl(args: RlArgs) -> Result<Value, Failure> {
    let m = load_mdp(&args.mdp)?;
    let rate: Value = serde_json::from_str(&args.rate).map_err(Failure::data)?;
    let rate = RateSchedule::from_json(&rate).map_err(Failure::data)?;
    let seed = seed_or_env(args.seed);
    match args.method.as_str() {
        "q" => {
            let res = engine::q_learning(&m, &Policy::uniform(&m), args.steps, &rate, seed);
            let q: Value = Value::Object(
                m.states
                    .iter()
                    .enumerate()
                    .map(|(s, name)| {
                        let row: serde_json::Map<String, Value> = m
                            .actions
                            .iter()
                            .enumerate()
                            .map(|(a, an)| (an.clone(), json!(res.q[s][a])))
                            .collect();
                        (name.clone(), Value::Object(row))
                    })
                    .collect(),
            );
            Ok(json!({
                "method": "q", "steps": args.steps, "seed": seed,
                "Q": q,
                "starved": res.starved.iter()
                    .map(|&(s, a)| json!([m.states[s], m.actions[a]]))
                    .collect::<Vec<_>>(),
            }))
        }
        "td" => {
            let v = engine::td0_learn(&m, &Policy::uniform(&m), args.steps, &rate, seed);
            Ok(json!({
                "method": "td", "steps": args.steps, "seed": seed,
                "V": state_map(&m, &v),
            }))
        }
        other => Err(Failure {
            code: EXIT_USAGE,
            body: json!({"error": format!("unknown method `{other}`")}),
        }),
    }
}

fn run_async_cmd(args: AsyncArgs) -> Result<Value, Failure> {
    let m = load_mdp(&args.mdp)?;
    if args.method != "bellman" {
        return Err(Failure {
            code: EXIT_USAGE,
            body: json!({"error": format!("unknown method `{}`", args.method)}),
        });
    }
    let sched: Value = serde_json::from_str(&args.schedule).map_err(Failure::data)?;
    let p = sched.get("p").and_then(|x| x.as_f64()).unwrap_or(0.5);
    let d = sched.get("D").and_then(|x| x.as_u64()).unwrap_or(0) as usize;
    let horizon = sched.get("horizon").and_then(|x| x.as_u64()).unwrap_or(100_000) as usize;
    let seed = sched
        .get("seed")
        .and_then(|x| x.as_u64())
        .unwrap_or_else(|| seed_or_env(args.seed));

    let n = m.n_states();
    let fs = engine::bellman_components(&m);
    let schedule = engine::make_schedule(n, horizon, p, d, seed).map_err(Failure::data)?;
    let x0 = vec![0.0; n];
    let mut trace = engine::async_fixed_point(&fs, &x0, &schedule, args.tol).map_err(Failure::data)?;
    let v_star = solvers::value_iteration(&m, 1e-12).v;
    let report = engine::verify_act_conditions(&fs, &trace, &v_star, m.gamma, 1e-9)
        .map_err(Failure::data)?;
    engine::annotate_trace(&mut trace, &report);
    if let Some(path) = &args.trace {
        let rows: Vec<String> = trace
            .rows
            .iter()
            .map(|r| {
                format!(
                    "{},{},{},{},{}",
                    r.t, m.states[r.component], r.value, r.residual_sup, r.box_index
                )
            })
            .collect();
        write_csv(path, "t,component,value,residual_sup,box_index", &rows)?;
    }
    Ok(json!({
        "converged": trace.converged,
        "steps": trace.snapshots.len() - 1,
        "V": state_map(&m, &trace.final_x),
        "sup_error": solvers::sup_norm_diff(&trace.final_x, &v_star),
        "box_index_final": report.box_index.last().copied().unwrap_or(0),
        "box_grows": report.grows,
        "starved": report.starved.iter().map(|&i| m.states[i].clone()).collect::<Vec<_>>(),
        "schedule": {"p": p, "D": d, "seed": seed, "horizon": horizon},
    }))
}

fn run_minimize(args: MinimizeArgs) -> Result<Value, Failure> {
    let m = load_mdp(&args.mdp)?;
    let c = models::mdp_to_coalgebra(&m);
    let partition = coalgebra::largest_bisimulation(&c);
    let blocks: Vec<Vec<usize>> = partition
        .blocks
        .iter()
        .map(|b| {
            b.iter()
                .map(|s| m.state_index(s).expect("carrier matches"))
                .collect()
        })
        .collect();
    let (q, hom) = models::quotient_mdp(&m, &blocks).map_err(Failure::data)?;
    Ok(json!({
        "states_before": m.n_states(),
        "states_after": q.n_states(),
        "blocks": partition.blocks.iter()
            .map(|b| b.iter().cloned().collect::<Vec<_>>())
            .collect::<Vec<_>>(),
        "state_map": m.states.iter().zip(&hom.f)
            .map(|(s, &b)| (s.clone(), json!(q.states[b])))
            .collect::<serde_json::Map<String, Value>>(),
        "mdp": q.to_json(),
    }))
}

fn run_check(what: CheckCommand) -> Result<Value, Failure> {
    match what {
        CheckCommand::Gms { space } => {
            let space = load_space(&space)?;
            let report = metric::check_gms(&space);
            let body = json!({"ok": report.ok(), "violations": report.violations});
            if report.ok() {
                Ok(body)
            } else {
                Err(Failure::check(body))
            }
        }
        CheckCommand::Hom { src, dst, map } => {
            let a = load_coalgebra(&src)?;
            let b = load_coalgebra(&dst)?;
            let raw = load_json(&map)?;
            let f: BTreeMap<String, String> = raw
                .as_object()
                .ok_or_else(|| Failure::data("map must be a JSON object"))?
                .iter()
                .map(|(k, v)| {
                    v.as_str()
                        .map(|s| (k.clone(), s.to_string()))
                        .ok_or_else(|| Failure::data("map values must be strings"))
                })
                .collect::<Result<_, _>>()?;
            let report = coalgebra::check_homomorphism(&a, &b, &f).map_err(Failure::data)?;
            let body = json!({"ok": report.ok, "failing_state": report.failing_state});
            if report.ok {
                Ok(body)
            } else {
                Err(Failure::check(body))
            }
        }
        CheckCommand::Bisim { src, dst, relation } => {
            let a = load_coalgebra(&src)?;
            let b = load_coalgebra(&dst)?;
            let raw = load_json(&relation)?;
            let rel: Vec<(String, String)> = raw
                .as_array()
                .ok_or_else(|| Failure::data("relation must be a JSON array"))?
                .iter()
                .map(|pair| {
                    let pair = pair.as_array().filter(|p| p.len() == 2)?;
                    Some((pair[0].as_str()?.to_string(), pair[1].as_str()?.to_string()))
                })
                .collect::<Option<_>>()
                .ok_or_else(|| Failure::data("relation entries must be [state, state]"))?;
            let ok = coalgebra::check_bisimulation(&a, &b, &rel).map_err(Failure::data)?;
            let body = json!({"ok": ok});
            if ok {
                Ok(body)
            } else {
                Err(Failure::check(body))
            }
        }
    }
}

fn run_metric(what: MetricCommand) -> Result<Value, Failure> {
    match what {
        MetricCommand::Check { space } => run_check(CheckCommand::Gms { space }),
        MetricCommand::Yoneda { space } => {
            let space = load_space(&space)?;
            let gms = metric::check_gms(&space);
            if !gms.ok() {
                return Err(Failure::check(
                    json!({"ok": false, "violations": gms.violations}),
                ));
            }
            let report = metric::yoneda_isometry_check(&space);
            let body = json!({
                "ok": report.ok(),
                "violations": report.violations.iter()
                    .map(|&(x, y)| json!([space.points[x], space.points[y]]))
                    .collect::<Vec<_>>(),
                "embedding": metric::yoneda_embed(&space).iter()
                    .map(|phi| phi.iter().map(|d| d.to_string()).collect::<Vec<_>>())
                    .collect::<Vec<_>>(),
            });
            if report.ok() {
                Ok(body)
            } else {
                Err(Failure::check(body))
            }
        }
        MetricCommand::Contract { space, map, n_max } => {
            let space = load_space(&space)?;
            let raw = load_json(&map)?;
            let images: Vec<usize> = raw
                .as_array()
                .ok_or_else(|| Failure::data("map must be a JSON array of point names"))?
                .iter()
                .map(|name| {
                    name.as_str()
                        .and_then(|n| space.points.iter().position(|p| p == n))
                        .ok_or_else(|| Failure::data("unknown point in map"))
                })
                .collect::<Result<_, _>>()?;
            if images.len() != space.len() {
                return Err(Failure::data("map must cover every point"));
            }
            let f = |i: usize| images[i];
            let report = metric::contraction_estimate_finite(&space, &f, n_max);
            Ok(json!({
                "c_hat": report.c_hat,
                "n": report.n,
                "detected": report.n.is_some(),
            }))
        }
    }
}

fn run_topos(what: ToposCommand) -> Result<Value, Failure> {
    match what {
        ToposCommand::Classify { instance } => {
            let raw = load_json(&instance)?;
            let field = |key: &str| {
                raw.get(key)
                    .ok_or_else(|| Failure::data(format!("missing `{key}`")))
            };
            let sub = topos::QObject::from_json(field("sub")?).map_err(Failure::data)?;
            let parent = topos::QObject::from_json(field("parent")?).map_err(Failure::data)?;
            let i = topos::FinFn::from_json(field("i")?).map_err(Failure::data)?;
            let j = topos::FinFn::from_json(field("j")?).map_err(Failure::data)?;
            let res = topos::classify_subobject(&sub, &parent, &i, &j).map_err(Failure::data)?;
            Ok(json!({
                "psi": res.psi.to_json(),
                "chi": res.chi.to_json(),
                "recovered": topos::pullback_along_true(&res.psi).iter()
                    .map(|&x| parent.inputs()[x].clone())
                    .collect::<Vec<_>>(),
            }))
        }
        ToposCommand::Pullback { instance } => {
            let raw = load_json(&instance)?;
            let f = topos::FinFn::from_json(
                raw.get("f").ok_or_else(|| Failure::data("missing `f`"))?,
            )
            .map_err(Failure::data)?;
            let g = topos::FinFn::from_json(
                raw.get("g").ok_or_else(|| Failure::data("missing `g`"))?,
            )
            .map_err(Failure::data)?;
            let pb = topos::pullback_finset(&f, &g).map_err(Failure::data)?;
            Ok(json!({
                "object": pb.object,
                "p1": pb.p1.to_json(),
                "p2": pb.p2.to_json(),
                "universal": topos::pullback_universal_check(&f, &g, &pb, 3),
            }))
        }
        ToposCommand::Exp { instance } => {
            let raw = load_json(&instance)?;
            let f = topos::QObject::from_json(
                raw.get("f").ok_or_else(|| Failure::data("missing `f`"))?,
            )
            .map_err(Failure::data)?;
            let g = topos::QObject::from_json(
                raw.get("g").ok_or_else(|| Failure::data("missing `g`"))?,
            )
            .map_err(Failure::data)?;
            let exp = topos::exponential_q(&f, &g).map_err(Failure::data)?;
            Ok(json!({
                "arrow_count": exp.arrows.len(),
                "object": exp.object.to_json(),
                "eval_inputs": exp.product.inputs().len(),
            }))
        }
    }
}

fn run_learn(what: LearnCommand) -> Result<Value, Failure> {
    let LearnCommand::Train { net, data, eps, steps, seed, trace } = what;
    let f = learn::ParamFn::from_json(&load_json(&net)?).map_err(Failure::data)?;
    let text = std::fs::read_to_string(&data)
        .map_err(|e| Failure::data(format!("{}: {e}", data.display())))?;
    let (in_dim, out_dim) = (f.in_dim, f.out_dim());
    let mut pairs = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let cells: Vec<f64> = line
            .split(',')
            .map(|c| c.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| Failure::data(format!("line {}: {e}", lineno + 1)))?;
        if cells.len() != in_dim + out_dim {
            return Err(Failure::data(format!(
                "line {}: expected {} values, got {}",
                lineno + 1,
                in_dim + out_dim,
                cells.len()
            )));
        }
        pairs.push((cells[..in_dim].to_vec(), cells[in_dim..].to_vec()));
    }
    if pairs.is_empty() {
        return Err(Failure::data("data file has no rows"));
    }
    let seed = seed_or_env(seed);
    let learner = learn::backprop_functor(&f, eps);
    let p0 = learn::init_params(f.param_dim(), seed);
    let history = learn::train_coalgebra(&learner, &pairs, &p0, steps);
    if let Some(path) = &trace {
        let header = std::iter::once("step".to_string())
            .chain((0..f.param_dim()).map(|i| format!("p{i}")))
            .collect::<Vec<_>>()
            .join(",");
        let rows: Vec<String> = history
            .iter()
            .enumerate()
            .map(|(t, p)| {
                std::iter::once(t.to_string())
                    .chain(p.iter().map(|x| x.to_string()))
                    .collect::<Vec<_>>()
                    .join(",")
            })
            .collect();
        write_csv(path, &header, &rows)?;
    }
    let p_end = history.last().unwrap();
    Ok(json!({
        "seed": seed,
        "steps": steps,
        "loss": learn::stream_loss(&learner, p_end, &pairs),
        "params": p_end,
    }))
}

fn run_udm(what: UdmCommand) -> Result<Value, Failure> {
    let UdmCommand::Check { model } = what;
    let obj = udm::json::udm_from_json(&load_json(&model)?).map_err(Failure::data)?;
    let solvable = udm::check_solvable_all(&obj).map_err(Failure::data)?;
    let causal = udm::check_causal(&obj).map_err(Failure::data)?;
    let body = json!({
        "solvable": solvable.solvable,
        "witness": solvable.witness.map(|(w, count)| json!({
            "omega": obj.omega[w], "solutions": count,
        })),
        "causal": causal.causal,
        "static_order": causal.static_order.map(|order| {
            order.iter().map(|&a| obj.agents[a].clone()).collect::<Vec<_>>()
        }),
        "dynamic_only": causal.dynamic_only,
    });
    if solvable.solvable {
        Ok(body)
    } else {
        Err(Failure::check(body))
    }
}
