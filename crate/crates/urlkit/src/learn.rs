//! Learners as (parameters, implement, update, request) tuples with
//! sequential and parallel composition, gradient descent packaged as a
//! functor from smooth parameterized functions to learners, a seeded
//! random-directions variant, and training as repeated unfolding.

use std::cell::RefCell;
use std::rc::Rc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LearnError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("malformed network description: {0}")]
    Malformed(String),
}

type VecFn2 = Rc<dyn Fn(&[f64], &[f64]) -> Vec<f64>>;
type VecFn3 = Rc<dyn Fn(&[f64], &[f64], &[f64]) -> Vec<f64>>;

/// A learner: implement I(p, a), update U(p, a, b), request r(p, a, b).
#[derive(Clone)]
pub struct Learner {
    pub param_dim: usize,
    pub in_dim: usize,
    pub out_dim: usize,
    pub implement: VecFn2,
    pub update: VecFn3,
    pub request: VecFn3,
}

impl Learner {
    /// No parameters, passes inputs through, requests the target back.
    pub fn identity(dim: usize) -> Learner {
        Learner {
            param_dim: 0,
            in_dim: dim,
            out_dim: dim,
            implement: Rc::new(|_, a| a.to_vec()),
            update: Rc::new(|p, _, _| p.to_vec()),
            request: Rc::new(|_, _, b| b.to_vec()),
        }
    }
}

/// Feed the first learner's output into the second; parameters concatenate
/// first-then-second, and requests flow backwards through the pair.
pub fn compose_seq(l1: &Learner, l2: &Learner) -> Result<Learner, LearnError> {
    if l1.out_dim != l2.in_dim {
        return Err(LearnError::Shape(format!(
            "middle dims {} vs {}",
            l1.out_dim, l2.in_dim
        )));
    }
    let (d1, a_dim) = (l1.param_dim, l1.in_dim);
    let (i1, i2) = (l1.implement.clone(), l2.implement.clone());
    let (u1, u2) = (l1.update.clone(), l2.update.clone());
    let (r1, r2) = (l1.request.clone(), l2.request.clone());

    let implement = {
        let (i1, i2) = (i1.clone(), i2.clone());
        Rc::new(move |pq: &[f64], a: &[f64]| i2(&pq[d1..], &i1(&pq[..d1], a)))
    };
    let update = {
        let (i1, r2) = (i1.clone(), r2.clone());
        Rc::new(move |pq: &[f64], a: &[f64], c: &[f64]| {
            let (p, q) = pq.split_at(d1);
            let b = i1(p, a);
            let req = r2(q, &b, c);
            let mut out = u1(p, a, &req);
            out.extend(u2(q, &b, c));
            out
        })
    };
    let request = Rc::new(move |pq: &[f64], a: &[f64], c: &[f64]| {
        let (p, q) = pq.split_at(d1);
        let b = i1(p, a);
        r1(p, a, &r2(q, &b, c))
    });
    Ok(Learner {
        param_dim: d1 + l2.param_dim,
        in_dim: a_dim,
        out_dim: l2.out_dim,
        implement,
        update,
        request,
    })
}

/// Run two learners side by side on concatenated inputs and parameters.
pub fn compose_par(l1: &Learner, l2: &Learner) -> Learner {
    let (d1, a1, b1) = (l1.param_dim, l1.in_dim, l1.out_dim);
    let (i1, i2) = (l1.implement.clone(), l2.implement.clone());
    let (u1, u2) = (l1.update.clone(), l2.update.clone());
    let (r1, r2) = (l1.request.clone(), l2.request.clone());
    let implement = Rc::new(move |pq: &[f64], ac: &[f64]| {
        let mut out = i1(&pq[..d1], &ac[..a1]);
        out.extend(i2(&pq[d1..], &ac[a1..]));
        out
    });
    let update = Rc::new(move |pq: &[f64], ac: &[f64], bd: &[f64]| {
        let mut out = u1(&pq[..d1], &ac[..a1], &bd[..b1]);
        out.extend(u2(&pq[d1..], &ac[a1..], &bd[b1..]));
        out
    });
    let request = Rc::new(move |pq: &[f64], ac: &[f64], bd: &[f64]| {
        let mut out = r1(&pq[..d1], &ac[..a1], &bd[..b1]);
        out.extend(r2(&pq[d1..], &ac[a1..], &bd[b1..]));
        out
    });
    Learner {
        param_dim: d1 + l2.param_dim,
        in_dim: a1 + l2.in_dim,
        out_dim: b1 + l2.out_dim,
        implement,
        update,
        request,
    }
}

// ---------------------------------------------------------------------------
// Smooth parameterized functions
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub enum Layer {
    Affine { in_dim: usize, out_dim: usize },
    Tanh,
    Sigmoid,
}

/// A chain of smooth layers; affine weights and biases live in one flat
/// parameter vector, packed layer by layer (row-major weights, then bias).
#[derive(Debug, Clone, PartialEq)]
pub struct ParamFn {
    pub in_dim: usize,
    pub layers: Vec<Layer>,
}

impl ParamFn {
    pub fn new(in_dim: usize, layers: Vec<Layer>) -> Result<ParamFn, LearnError> {
        let f = ParamFn { in_dim, layers };
        let mut dim = in_dim;
        for layer in &f.layers {
            if let Layer::Affine { in_dim, out_dim } = layer {
                if *in_dim != dim {
                    return Err(LearnError::Shape(format!(
                        "affine expects {in_dim} inputs, got {dim}"
                    )));
                }
                dim = *out_dim;
            }
        }
        Ok(f)
    }

    pub fn out_dim(&self) -> usize {
        let mut dim = self.in_dim;
        for layer in &self.layers {
            if let Layer::Affine { out_dim, .. } = layer {
                dim = *out_dim;
            }
        }
        dim
    }

    pub fn param_dim(&self) -> usize {
        self.layers
            .iter()
            .map(|l| match l {
                Layer::Affine { in_dim, out_dim } => out_dim * in_dim + out_dim,
                _ => 0,
            })
            .sum()
    }

    pub fn forward(&self, p: &[f64], a: &[f64]) -> Vec<f64> {
        let mut x = a.to_vec();
        let mut off = 0;
        for layer in &self.layers {
            x = match layer {
                Layer::Affine { in_dim, out_dim } => {
                    let w = &p[off..off + out_dim * in_dim];
                    let b = &p[off + out_dim * in_dim..off + out_dim * in_dim + out_dim];
                    off += out_dim * in_dim + out_dim;
                    (0..*out_dim)
                        .map(|i| {
                            b[i] + (0..*in_dim).map(|j| w[i * in_dim + j] * x[j]).sum::<f64>()
                        })
                        .collect()
                }
                Layer::Tanh => x.iter().map(|v| v.tanh()).collect(),
                Layer::Sigmoid => x.iter().map(|v| 1.0 / (1.0 + (-v).exp())).collect(),
            };
        }
        x
    }

    /// Reverse accumulation of the squared-error loss E = 0.5 |I(p,a) - b|^2.
    /// Returns (gradient in p, gradient in a, output).
    pub fn backward(&self, p: &[f64], a: &[f64], target: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let mut acts = vec![a.to_vec()];
        let mut offsets = Vec::new();
        let mut off = 0;
        for layer in &self.layers {
            offsets.push(off);
            let x = acts.last().unwrap().clone();
            let y = match layer {
                Layer::Affine { in_dim, out_dim } => {
                    let w = &p[off..off + out_dim * in_dim];
                    let b = &p[off + out_dim * in_dim..off + out_dim * in_dim + out_dim];
                    off += out_dim * in_dim + out_dim;
                    (0..*out_dim)
                        .map(|i| {
                            b[i] + (0..*in_dim).map(|j| w[i * in_dim + j] * x[j]).sum::<f64>()
                        })
                        .collect()
                }
                Layer::Tanh => x.iter().map(|v| v.tanh()).collect(),
                Layer::Sigmoid => x.iter().map(|v| 1.0 / (1.0 + (-v).exp())).collect(),
            };
            acts.push(y);
        }
        let out = acts.last().unwrap().clone();
        let mut grad_x: Vec<f64> = out.iter().zip(target).map(|(o, t)| o - t).collect();
        let mut grad_p = vec![0.0; p.len()];
        for (idx, layer) in self.layers.iter().enumerate().rev() {
            let x = &acts[idx];
            let y = &acts[idx + 1];
            grad_x = match layer {
                Layer::Affine { in_dim, out_dim } => {
                    let off = offsets[idx];
                    let w = &p[off..off + out_dim * in_dim];
                    for i in 0..*out_dim {
                        for j in 0..*in_dim {
                            grad_p[off + i * in_dim + j] += grad_x[i] * x[j];
                        }
                        grad_p[off + out_dim * in_dim + i] += grad_x[i];
                    }
                    (0..*in_dim)
                        .map(|j| (0..*out_dim).map(|i| grad_x[i] * w[i * in_dim + j]).sum())
                        .collect()
                }
                Layer::Tanh => grad_x
                    .iter()
                    .zip(y)
                    .map(|(g, t)| g * (1.0 - t * t))
                    .collect(),
                Layer::Sigmoid => grad_x.iter().zip(y).map(|(g, s)| g * s * (1.0 - s)).collect(),
            };
        }
        (grad_p, grad_x, out)
    }

    /// Chain `self` then `next` into a single layer list.
    pub fn compose(&self, next: &ParamFn) -> Result<ParamFn, LearnError> {
        if self.out_dim() != next.in_dim {
            return Err(LearnError::Shape("composition dims".into()));
        }
        let mut layers = self.layers.clone();
        layers.extend(next.layers.clone());
        ParamFn::new(self.in_dim, layers)
    }

    pub fn from_json(v: &serde_json::Value) -> Result<ParamFn, LearnError> {
        let bad = |m: &str| LearnError::Malformed(m.to_string());
        let obj = v.as_object().ok_or_else(|| bad("expected object"))?;
        let in_dim = obj
            .get("in")
            .and_then(|x| x.as_u64())
            .ok_or_else(|| bad("in"))? as usize;
        let raw = obj
            .get("layers")
            .and_then(|x| x.as_array())
            .ok_or_else(|| bad("layers"))?;
        let mut layers = Vec::new();
        for item in raw {
            let l = item.as_object().ok_or_else(|| bad("layer"))?;
            let kind = l.get("kind").and_then(|x| x.as_str()).ok_or_else(|| bad("kind"))?;
            layers.push(match kind {
                "affine" => Layer::Affine {
                    in_dim: l.get("in").and_then(|x| x.as_u64()).ok_or_else(|| bad("in"))?
                        as usize,
                    out_dim: l.get("out").and_then(|x| x.as_u64()).ok_or_else(|| bad("out"))?
                        as usize,
                },
                "tanh" => Layer::Tanh,
                "sigmoid" => Layer::Sigmoid,
                other => return Err(LearnError::Malformed(format!("layer kind `{other}`"))),
            });
        }
        ParamFn::new(in_dim, layers)
    }
}

/// Seeded parameter initialization, uniform on (-0.5, 0.5).
pub fn init_params(dim: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..dim).map(|_| rng.gen_range(-0.5..0.5)).collect()
}

/// Gradient descent as a learner: update steps against the squared-error
/// loss, request returns the input corrected by its own gradient.
pub fn backprop_functor(f: &ParamFn, eps: f64) -> Learner {
    assert!(eps > 0.0, "learning rate must be positive");
    let net = f.clone();
    let net_u = f.clone();
    let net_r = f.clone();
    Learner {
        param_dim: f.param_dim(),
        in_dim: f.in_dim,
        out_dim: f.out_dim(),
        implement: Rc::new(move |p, a| net.forward(p, a)),
        update: Rc::new(move |p, a, b| {
            let (gp, _, _) = net_u.backward(p, a, b);
            p.iter().zip(&gp).map(|(v, g)| v - eps * g).collect()
        }),
        request: Rc::new(move |p, a, b| {
            let (_, ga, _) = net_r.backward(p, a, b);
            a.iter().zip(&ga).map(|(v, g)| v - g).collect()
        }),
    }
}

#[derive(Debug, Clone)]
pub struct FunctorReport {
    pub implement_dev: f64,
    pub update_dev: f64,
    pub request_dev: f64,
}

impl FunctorReport {
    pub fn max_dev(&self) -> f64 {
        self.implement_dev.max(self.update_dev).max(self.request_dev)
    }
}

/// Compare composing two gradient learners against the gradient learner of
/// the composed network, on seeded sample points.
pub fn functoriality_check(
    f: &ParamFn,
    g: &ParamFn,
    eps: f64,
    samples: usize,
    seed: u64,
) -> Result<FunctorReport, LearnError> {
    let composed = backprop_functor(&f.compose(g)?, eps);
    let split = compose_seq(&backprop_functor(f, eps), &backprop_functor(g, eps))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = FunctorReport {
        implement_dev: 0.0,
        update_dev: 0.0,
        request_dev: 0.0,
    };
    let dev = |x: &[f64], y: &[f64]| {
        x.iter()
            .zip(y)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max)
    };
    for _ in 0..samples {
        let p: Vec<f64> = (0..composed.param_dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let a: Vec<f64> = (0..composed.in_dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let c: Vec<f64> = (0..composed.out_dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        report.implement_dev = report
            .implement_dev
            .max(dev(&(composed.implement)(&p, &a), &(split.implement)(&p, &a)));
        report.update_dev = report
            .update_dev
            .max(dev(&(composed.update)(&p, &a, &c), &(split.update)(&p, &a, &c)));
        report.request_dev = report
            .request_dev
            .max(dev(&(composed.request)(&p, &a, &c), &(split.request)(&p, &a, &c)));
    }
    Ok(report)
}

/// Random-directions learner: sample a normal direction z, evaluate the
/// loss at the perturbed parameters p + sigma z, and step along
/// -(eps/sigma) * loss * z. The loss gradient never needs to exist.
pub fn zeroth_order_functor(f: &ParamFn, eps: f64, sigma: f64, seed: u64) -> Learner {
    assert!(eps > 0.0 && sigma > 0.0);
    let net = f.clone();
    let net_u = f.clone();
    let rng = RefCell::new(ChaCha8Rng::seed_from_u64(seed));
    Learner {
        param_dim: f.param_dim(),
        in_dim: f.in_dim,
        out_dim: f.out_dim(),
        implement: Rc::new(move |p, a| net.forward(p, a)),
        update: Rc::new(move |p, a, b| {
            let mut rng = rng.borrow_mut();
            let z: Vec<f64> = (0..p.len())
                .map(|_| StandardNormal.sample(&mut *rng))
                .collect();
            let shifted: Vec<f64> = p.iter().zip(&z).map(|(v, d)| v + sigma * d).collect();
            let out = net_u.forward(&shifted, a);
            let loss: f64 = out.iter().zip(b).map(|(o, t)| 0.5 * (o - t).powi(2)).sum();
            p.iter()
                .zip(&z)
                .map(|(v, d)| v - eps / sigma * loss * d)
                .collect()
        }),
        request: Rc::new(|_, a, _| a.to_vec()),
    }
}

/// Repeatedly unfold the learner over the data stream, cycling it; returns
/// the parameter trajectory starting at p0.
pub fn train_coalgebra(
    l: &Learner,
    data: &[(Vec<f64>, Vec<f64>)],
    p0: &[f64],
    steps: usize,
) -> Vec<Vec<f64>> {
    let mut trace = vec![p0.to_vec()];
    let mut p = p0.to_vec();
    for t in 0..steps {
        let (a, b) = &data[t % data.len()];
        p = (l.update)(&p, a, b);
        trace.push(p.clone());
    }
    trace
}

/// Mean squared-error loss of the learner over the stream.
pub fn stream_loss(l: &Learner, p: &[f64], data: &[(Vec<f64>, Vec<f64>)]) -> f64 {
    data.iter()
        .map(|(a, b)| {
            (l.implement)(p, a)
                .iter()
                .zip(b)
                .map(|(o, t)| 0.5 * (o - t).powi(2))
                .sum::<f64>()
        })
        .sum::<f64>()
        / data.len() as f64
}
