//! Encoder/decoder MLPs with hand-written backpropagation, the WAE objective
//! with MMD² or W1 latent penalties, Adam, and the architecture-size and
//! rate formulas.

use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::discrepancy::{
    median_bandwidth, optimal_transport, sq_dist, EmpiricalMeasure, KernelSpec, LatentDistribution,
};
use crate::error::{Error, Result};
use crate::relu_net::{Activation, Layer, ReluNetwork};

/// Gradient norm above which training stops.
pub const MAX_GRAD_NORM: f64 = 1e6;

/// Scale applied to the He-normal init of the output layer.
pub const OUTPUT_INIT_GAIN: f64 = 0.1;

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

/// Fully connected net with ReLU hidden layers and an output clamped to
/// `[0,1]`. Parameters are stored flat, layer by layer, weights (row-major,
/// `out × in`) before biases.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrainableMlp {
    dims: Vec<usize>,
    params: Vec<f64>,
    adam_m: Vec<f64>,
    adam_v: Vec<f64>,
    adam_t: u64,
}

/// Per-sample forward record used by backpropagation.
struct Trace {
    /// Input of every layer, then the clamped output.
    acts: Vec<Vec<f64>>,
    /// Pre-activations of every layer.
    pre: Vec<Vec<f64>>,
}

impl TrainableMlp {
    /// He-normal weights (output layer scaled by [`OUTPUT_INIT_GAIN`]), zero
    /// hidden biases, output biases 1/2.
    pub fn new(dims: &[usize], rng: &mut ChaCha8Rng) -> Result<Self> {
        if dims.len() < 2 || dims.iter().any(|&d| d == 0) {
            return Err(Error::Parameter(format!("invalid layer dims {dims:?}")));
        }
        let count = Self::param_count(dims);
        let mut params = Vec::with_capacity(count);
        for l in 0..dims.len() - 1 {
            let (fan_in, fan_out) = (dims[l], dims[l + 1]);
            let last = l + 2 == dims.len();
            // The output layer starts small so the clamp is inactive at init.
            let gain = if last { OUTPUT_INIT_GAIN } else { 1.0 };
            let normal = Normal::new(0.0, gain * (2.0 / fan_in as f64).sqrt()).expect("valid normal");
            params.extend((0..fan_in * fan_out).map(|_| normal.sample(rng)));
            let b = if last { 0.5 } else { 0.0 };
            params.extend(std::iter::repeat(b).take(fan_out));
        }
        Ok(TrainableMlp {
            dims: dims.to_vec(),
            params,
            adam_m: vec![0.0; count],
            adam_v: vec![0.0; count],
            adam_t: 0,
        })
    }

    pub fn param_count(dims: &[usize]) -> usize {
        dims.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.dims.last().expect("non-empty dims")
    }

    pub fn depth(&self) -> usize {
        self.dims.len() - 1
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn trace(&self, x: &[f64]) -> Result<Trace> {
        let layers = self.depth();
        let mut acts = Vec::with_capacity(layers + 1);
        let mut pre = Vec::with_capacity(layers);
        acts.push(x.to_vec());
        let mut off = 0;
        for l in 0..layers {
            let (n_in, n_out) = (self.dims[l], self.dims[l + 1]);
            let w = &self.params[off..off + n_in * n_out];
            let b = &self.params[off + n_in * n_out..off + n_in * n_out + n_out];
            off += n_in * n_out + n_out;
            let input = &acts[l];
            let z: Vec<f64> = (0..n_out)
                .map(|r| {
                    b[r] + w[r * n_in..(r + 1) * n_in]
                        .iter()
                        .zip(input)
                        .map(|(a, c)| a * c)
                        .sum::<f64>()
                })
                .collect();
            if z.iter().any(|v| !v.is_finite()) {
                return Err(Error::Numeric {
                    layer: l,
                    detail: "non-finite pre-activation".into(),
                });
            }
            let out = if l + 1 == layers {
                z.iter().map(|v| v.clamp(0.0, 1.0)).collect()
            } else {
                z.iter().map(|v| v.max(0.0)).collect()
            };
            pre.push(z);
            acts.push(out);
        }
        Ok(Trace { acts, pre })
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim() {
            return Err(Error::InputShape {
                expected: self.input_dim(),
                got: x.len(),
            });
        }
        Ok(self.trace(x)?.acts.pop().expect("output present"))
    }

    pub fn forward_batch(&self, xs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        xs.iter().map(|x| self.forward(x)).collect()
    }

    /// Accumulates `∂loss/∂θ` into `grad` given `∂loss/∂output`, and returns
    /// `∂loss/∂input`. The clamp passes gradient only strictly inside (0, 1).
    fn backward(&self, trace: &Trace, grad_out: &[f64], grad: &mut [f64]) -> Vec<f64> {
        let layers = self.depth();
        let mut offsets = Vec::with_capacity(layers);
        let mut off = 0;
        for l in 0..layers {
            offsets.push(off);
            off += self.dims[l] * self.dims[l + 1] + self.dims[l + 1];
        }
        let mut delta: Vec<f64> = grad_out
            .iter()
            .zip(&trace.pre[layers - 1])
            .map(|(g, z)| if *z > 0.0 && *z < 1.0 { *g } else { 0.0 })
            .collect();
        for l in (0..layers).rev() {
            let (n_in, n_out) = (self.dims[l], self.dims[l + 1]);
            let off = offsets[l];
            let input = &trace.acts[l];
            for r in 0..n_out {
                let d = delta[r];
                if d == 0.0 {
                    continue;
                }
                let row = &mut grad[off + r * n_in..off + (r + 1) * n_in];
                for (g, a) in row.iter_mut().zip(input) {
                    *g += d * a;
                }
                grad[off + n_in * n_out + r] += d;
            }
            let w = &self.params[off..off + n_in * n_out];
            let mut prev = vec![0.0; n_in];
            for r in 0..n_out {
                let d = delta[r];
                if d == 0.0 {
                    continue;
                }
                for (p, wv) in prev.iter_mut().zip(&w[r * n_in..(r + 1) * n_in]) {
                    *p += d * wv;
                }
            }
            if l > 0 {
                for (p, z) in prev.iter_mut().zip(&trace.pre[l - 1]) {
                    if *z <= 0.0 {
                        *p = 0.0;
                    }
                }
            }
            delta = prev;
        }
        delta
    }

    /// One Adam update with bias correction.
    pub fn adam_step(&mut self, grad: &[f64], lr: f64) {
        self.adam_t += 1;
        let t = self.adam_t as i32;
        let c1 = 1.0 - ADAM_BETA1.powi(t);
        let c2 = 1.0 - ADAM_BETA2.powi(t);
        for (((p, m), v), g) in self
            .params
            .iter_mut()
            .zip(self.adam_m.iter_mut())
            .zip(self.adam_v.iter_mut())
            .zip(grad)
        {
            *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * g;
            *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * g * g;
            *p -= lr * (*m / c1) / ((*v / c2).sqrt() + ADAM_EPS);
        }
    }

    /// The same function as a [`ReluNetwork`]; the clamp becomes the extra
    /// layer `ReLU(y) - ReLU(y - 1)`.
    pub fn to_relu_network(&self) -> Result<ReluNetwork> {
        let layers_n = self.depth();
        let mut layers = Vec::with_capacity(layers_n + 2);
        let mut off = 0;
        for l in 0..layers_n {
            let (n_in, n_out) = (self.dims[l], self.dims[l + 1]);
            let rows: Vec<Vec<(usize, f64)>> = (0..n_out)
                .map(|r| (0..n_in).map(|c| (c, self.params[off + r * n_in + c])).collect())
                .collect();
            let bias = self.params[off + n_in * n_out..off + n_in * n_out + n_out].to_vec();
            off += n_in * n_out + n_out;
            let act = if l + 1 == layers_n {
                Activation::Identity
            } else {
                Activation::Relu
            };
            layers.push(Layer::from_rows(n_in, rows, bias, vec![act; n_out])?);
        }
        let out = self.output_dim();
        layers.push(Layer::from_rows(
            out,
            (0..2 * out).map(|r| vec![(r / 2, 1.0)]).collect(),
            (0..2 * out).map(|r| if r % 2 == 0 { 0.0 } else { -1.0 }).collect(),
            vec![Activation::Relu; 2 * out],
        )?);
        layers.push(Layer::from_rows(
            2 * out,
            (0..out).map(|j| vec![(2 * j, 1.0), (2 * j + 1, -1.0)]).collect(),
            vec![0.0; out],
            vec![Activation::Identity; out],
        )?);
        ReluNetwork::new(layers)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DissKind {
    W1,
    Mmd2,
}

impl FromStr for DissKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "w1" => Ok(DissKind::W1),
            "mmd2" => Ok(DissKind::Mmd2),
            other => Err(Error::Config(format!("unknown dissimilarity {other:?} (w1 | mmd2)"))),
        }
    }
}

/// Reconstruction cost `c(x, y)`; only the squared Euclidean norm is offered.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CostKind {
    #[default]
    SquaredEuclidean,
}

fn default_nu() -> LatentDistribution {
    LatentDistribution::UniformCube
}

fn default_lr() -> f64 {
    1e-4
}

fn default_epochs() -> usize {
    10
}

fn default_batch() -> usize {
    64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WaeConfig {
    pub lambda: f64,
    pub diss_kind: DissKind,
    #[serde(default)]
    pub cost: CostKind,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    #[serde(default = "default_lr")]
    pub learning_rate: f64,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default)]
    pub seed: u64,
    pub latent_dim: usize,
    pub data_dim: usize,
    /// Gaussian bandwidth for the MMD penalty; `None` picks the median
    /// heuristic on a latent sample.
    #[serde(default)]
    pub kernel_sigma: Option<f64>,
    #[serde(default = "default_nu")]
    pub latent: LatentDistribution,
}

impl WaeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::Config(format!(
                "lambda must be finite and >= 0, got {}",
                self.lambda
            )));
        }
        if self.latent_dim == 0 || self.data_dim == 0 {
            return Err(Error::Config("latent and data dims must be >= 1".into()));
        }
        if self.batch_size < 2 {
            return Err(Error::Config("batch size must be >= 2".into()));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::Config("learning rate must be positive".into()));
        }
        if let Some(s) = self.kernel_sigma {
            KernelSpec::gaussian(s).map_err(|e| Error::Config(e.to_string()))?;
        }
        Ok(())
    }

    /// The kernel used by the MMD penalty.
    pub fn kernel(&self) -> Result<KernelSpec> {
        match self.kernel_sigma {
            Some(s) => KernelSpec::gaussian(s),
            None => {
                let mut rng = ChaCha8Rng::seed_from_u64(0x6b65_726e);
                let z: Vec<Vec<f64>> = (0..500)
                    .map(|_| self.latent.sample(self.latent_dim, &mut rng))
                    .collect();
                KernelSpec::gaussian(median_bandwidth(&z)?)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Objective {
    pub total: f64,
    pub recon: f64,
    pub penalty: f64,
}

/// Which part of the objective a gradient refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LossPart {
    Recon,
    Penalty,
    Total,
}

/// Objective value, parameter gradients, and a fingerprint of every
/// non-smooth decision taken (ReLU/clamp states and the W1 coupling).
pub struct LossEval {
    pub objective: Objective,
    pub grad_g: Vec<f64>,
    pub grad_e: Vec<f64>,
    pub pattern: Vec<u64>,
}

fn check_batch(points: &[Vec<f64>], dim: usize, name: &str) -> Result<()> {
    if points.is_empty() {
        return Err(Error::Parameter(format!("{name} batch is empty")));
    }
    if let Some(bad) = points.iter().find(|p| p.len() != dim) {
        return Err(Error::InputShape {
            expected: dim,
            got: bad.len(),
        });
    }
    Ok(())
}

fn pattern_bits(trace: &Trace, out: &mut Vec<u64>) {
    let layers = trace.pre.len();
    let mut word = 0u64;
    let mut bit = 0;
    let mut push = |flag: u64, out: &mut Vec<u64>| {
        word |= flag << bit;
        bit += 1;
        if bit == 64 {
            out.push(word);
            word = 0;
            bit = 0;
        }
    };
    for (l, z) in trace.pre.iter().enumerate() {
        for &v in z {
            if l + 1 == layers {
                push((v > 0.0) as u64, out);
                push((v < 1.0) as u64, out);
            } else {
                push((v > 0.0) as u64, out);
            }
        }
    }
    out.push(word);
}

/// Gradient of `Σ_{i≠j} K(e_i,e_j)/(n(n-1)) - 2 Σ_{i,j} K(e_i,z_j)/(nm)` with
/// respect to each `e_i`, plus the value.
fn mmd_penalty(e: &[Vec<f64>], z: &[Vec<f64>], k: &KernelSpec) -> Result<(f64, Vec<Vec<f64>>)> {
    let (n, m) = (e.len(), z.len());
    if n < 2 || m < 2 {
        return Err(Error::Parameter("MMD penalty needs at least 2 points per batch".into()));
    }
    let inv_s2 = 1.0 / (k.sigma * k.sigma);
    let dim = e[0].len();
    let mut grads = vec![vec![0.0; dim]; n];
    let (mut ee, mut zz, mut ez) = (0.0, 0.0, 0.0);
    let c_ee = 2.0 / (n * (n - 1)) as f64;
    let c_ez = 2.0 / (n * m) as f64;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let kv = k.eval(&e[i], &e[j]);
            ee += kv;
            // d/de_i of K(e_i, e_j) appears twice in the symmetric sum.
            for (g, (a, b)) in grads[i].iter_mut().zip(e[i].iter().zip(&e[j])) {
                *g -= c_ee * kv * (a - b) * inv_s2;
            }
        }
        for zj in z {
            let kv = k.eval(&e[i], zj);
            ez += kv;
            for (g, (a, b)) in grads[i].iter_mut().zip(e[i].iter().zip(zj)) {
                *g += c_ez * kv * (a - b) * inv_s2;
            }
        }
    }
    for i in 0..m {
        for j in 0..m {
            if i != j {
                zz += k.eval(&z[i], &z[j]);
            }
        }
    }
    let value = ee / (n * (n - 1)) as f64 + zz / (m * (m - 1)) as f64 - 2.0 * ez / (n * m) as f64;
    Ok((value, grads))
}

/// W1 value and its subgradient with the optimal coupling held fixed.
fn w1_penalty(e: &[Vec<f64>], z: &[Vec<f64>], pattern: &mut Vec<u64>) -> Result<(f64, Vec<Vec<f64>>)> {
    let p = EmpiricalMeasure::uniform(e.to_vec())?;
    let q = EmpiricalMeasure::uniform(z.to_vec())?;
    let plan = optimal_transport(&p, &q)?;
    let dim = e[0].len();
    let mut grads = vec![vec![0.0; dim]; e.len()];
    for &(i, j, mass) in &plan.entries {
        pattern.push(((i as u64) << 32) | j as u64);
        let dist = sq_dist(&e[i], &z[j]).sqrt();
        if dist > 0.0 {
            for (g, (a, b)) in grads[i].iter_mut().zip(e[i].iter().zip(&z[j])) {
                *g += mass * (a - b) / dist;
            }
        }
    }
    Ok((plan.cost, grads))
}

/// Evaluates the objective and (for the requested part) its gradients.
pub fn loss_and_grad(
    x: &[Vec<f64>],
    z: &[Vec<f64>],
    g: &TrainableMlp,
    e: &TrainableMlp,
    cfg: &WaeConfig,
    part: LossPart,
) -> Result<LossEval> {
    check_batch(x, e.input_dim(), "data")?;
    check_batch(z, e.output_dim(), "latent")?;
    if g.input_dim() != e.output_dim() || g.output_dim() != e.input_dim() {
        return Err(Error::Config("encoder/decoder dimensions do not chain".into()));
    }
    let n = x.len() as f64;
    let mut pattern = Vec::new();
    let enc: Vec<Trace> = x.iter().map(|xi| e.trace(xi)).collect::<Result<_>>()?;
    let codes: Vec<Vec<f64>> = enc.iter().map(|t| t.acts.last().expect("output").clone()).collect();
    let dec: Vec<Trace> = codes.iter().map(|c| g.trace(c)).collect::<Result<_>>()?;
    for t in enc.iter().chain(&dec) {
        pattern_bits(t, &mut pattern);
    }
    let recon = x
        .iter()
        .zip(&dec)
        .map(|(xi, t)| sq_dist(xi, t.acts.last().expect("output")))
        .sum::<f64>()
        / n;
    let (penalty, pen_grads) = match cfg.diss_kind {
        DissKind::Mmd2 => mmd_penalty(&codes, z, &cfg.kernel()?)?,
        DissKind::W1 => w1_penalty(&codes, z, &mut pattern)?,
    };
    let objective = Objective {
        total: recon + cfg.lambda * penalty,
        recon,
        penalty,
    };
    let mut grad_g = vec![0.0; g.params.len()];
    let mut grad_e = vec![0.0; e.params.len()];
    let use_recon = part != LossPart::Penalty;
    let pen_scale = match part {
        LossPart::Recon => 0.0,
        LossPart::Penalty => 1.0,
        LossPart::Total => cfg.lambda,
    };
    for i in 0..x.len() {
        let mut code_grad = vec![0.0; e.output_dim()];
        if use_recon {
            let out = dec[i].acts.last().expect("output");
            let grad_out: Vec<f64> = out.iter().zip(&x[i]).map(|(o, t)| 2.0 * (o - t) / n).collect();
            code_grad = g.backward(&dec[i], &grad_out, &mut grad_g);
        }
        if pen_scale != 0.0 {
            for (c, p) in code_grad.iter_mut().zip(&pen_grads[i]) {
                *c += pen_scale * p;
            }
        }
        e.backward(&enc[i], &code_grad, &mut grad_e);
    }
    Ok(LossEval {
        objective,
        grad_g,
        grad_e,
        pattern,
    })
}

pub fn wae_objective(
    x: &[Vec<f64>],
    z: &[Vec<f64>],
    g: &TrainableMlp,
    e: &TrainableMlp,
    cfg: &WaeConfig,
) -> Result<Objective> {
    Ok(loss_and_grad(x, z, g, e, cfg, LossPart::Total)?.objective)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StepRecord {
    pub step: usize,
    pub recon: f64,
    pub penalty: f64,
    pub total: f64,
    pub grad_norm: f64,
}

/// One backpropagation pass and Adam update of both networks.
pub fn train_step(
    x: &[Vec<f64>],
    z: &[Vec<f64>],
    g: &mut TrainableMlp,
    e: &mut TrainableMlp,
    cfg: &WaeConfig,
) -> Result<StepRecord> {
    let eval = loss_and_grad(x, z, g, e, cfg, LossPart::Total)?;
    let norm = eval
        .grad_g
        .iter()
        .chain(&eval.grad_e)
        .map(|v| v * v)
        .sum::<f64>()
        .sqrt();
    let step = g.adam_t as usize + 1;
    if !(norm <= MAX_GRAD_NORM) {
        return Err(Error::TrainingAborted {
            step,
            detail: format!(
                "gradient norm {norm:.3e} (recon {:.3e}, penalty {:.3e})",
                eval.objective.recon, eval.objective.penalty
            ),
        });
    }
    g.adam_step(&eval.grad_g, cfg.learning_rate);
    e.adam_step(&eval.grad_e, cfg.learning_rate);
    Ok(StepRecord {
        step,
        recon: eval.objective.recon,
        penalty: eval.objective.penalty,
        total: eval.objective.total,
        grad_norm: norm,
    })
}

/// Result of a full training run.
pub struct TrainedPair {
    pub decoder: TrainableMlp,
    pub encoder: TrainableMlp,
    pub log: Vec<StepRecord>,
}

/// Minibatch Adam over `cfg.epochs` passes; each step pairs a data batch
/// with a fresh latent batch of the same size.
pub fn train(data: &[Vec<f64>], dec_dims: &[usize], enc_dims: &[usize], cfg: &WaeConfig) -> Result<TrainedPair> {
    cfg.validate()?;
    check_batch(data, cfg.data_dim, "training")?;
    let mut cfg = cfg.clone();
    if cfg.diss_kind == DissKind::Mmd2 && cfg.kernel_sigma.is_none() {
        cfg.kernel_sigma = Some(cfg.kernel()?.sigma);
    }
    let cfg = &cfg;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut decoder = TrainableMlp::new(dec_dims, &mut rng)?;
    let mut encoder = TrainableMlp::new(enc_dims, &mut rng)?;
    if decoder.input_dim() != cfg.latent_dim || encoder.input_dim() != cfg.data_dim {
        return Err(Error::Config("network dims disagree with latent/data dims".into()));
    }
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut log = Vec::new();
    let batch = cfg.batch_size.min(data.len()).max(2);
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(batch) {
            if chunk.len() < 2 {
                continue;
            }
            let x: Vec<Vec<f64>> = chunk.iter().map(|&i| data[i].clone()).collect();
            let z: Vec<Vec<f64>> = (0..chunk.len())
                .map(|_| cfg.latent.sample(cfg.latent_dim, &mut rng))
                .collect();
            log.push(train_step(&x, &z, &mut decoder, &mut encoder, cfg)?);
        }
    }
    Ok(TrainedPair { decoder, encoder, log })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct GradCheck {
    pub max_rel_err: f64,
    pub checked: usize,
    pub skipped: usize,
}

/// Compares analytic gradients of one loss part with central differences
/// of step `h`. Parameters whose perturbation changes any ReLU/clamp state or
/// the W1 coupling are skipped. Relative error uses the floor `1e-5` in the
/// denominator.
pub fn gradient_check(
    x: &[Vec<f64>],
    z: &[Vec<f64>],
    g: &TrainableMlp,
    e: &TrainableMlp,
    cfg: &WaeConfig,
    part: LossPart,
    h: f64,
) -> Result<GradCheck> {
    let base = loss_and_grad(x, z, g, e, cfg, part)?;
    let value = |o: &Objective| match part {
        LossPart::Recon => o.recon,
        LossPart::Penalty => o.penalty,
        LossPart::Total => o.total,
    };
    let mut report = GradCheck {
        max_rel_err: 0.0,
        checked: 0,
        skipped: 0,
    };
    for which in 0..2 {
        let count = if which == 0 { g.params.len() } else { e.params.len() };
        for p in 0..count {
            let probe = |delta: f64| -> Result<LossEval> {
                let (mut g2, mut e2) = (g.clone(), e.clone());
                if which == 0 {
                    g2.params[p] += delta;
                } else {
                    e2.params[p] += delta;
                }
                loss_and_grad(x, z, &g2, &e2, cfg, part)
            };
            let plus = probe(h)?;
            let minus = probe(-h)?;
            if plus.pattern != base.pattern || minus.pattern != base.pattern {
                report.skipped += 1;
                continue;
            }
            let numeric = (value(&plus.objective) - value(&minus.objective)) / (2.0 * h);
            let analytic = if which == 0 { base.grad_g[p] } else { base.grad_e[p] };
            let rel = (numeric - analytic).abs() / numeric.abs().max(analytic.abs()).max(1e-5);
            report.max_rel_err = report.max_rel_err.max(rel);
            report.checked += 1;
        }
    }
    Ok(report)
}

/// Network checkpoint: the trainable state plus its ReLU-network export.
#[derive(Serialize, Deserialize)]
struct Checkpoint {
    format: String,
    mlp: TrainableMlp,
    relu_net: serde_json::Value,
}

const CHECKPOINT_TAG: &str = "wae-mlp/1";

impl TrainableMlp {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let ckpt = Checkpoint {
            format: CHECKPOINT_TAG.into(),
            mlp: self.clone(),
            relu_net: serde_json::from_str(&self.to_relu_network()?.to_text())?,
        };
        std::fs::write(path, serde_json::to_string(&ckpt)?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let ckpt: Checkpoint = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        if ckpt.format != CHECKPOINT_TAG {
            return Err(Error::Malformed(format!(
                "unexpected checkpoint format {:?}",
                ckpt.format
            )));
        }
        let m = ckpt.mlp;
        let count = Self::param_count(&m.dims);
        if m.params.len() != count || m.adam_m.len() != count || m.adam_v.len() != count {
            return Err(Error::Malformed("checkpoint parameter count mismatch".into()));
        }
        Ok(m)
    }
}

/// Depth and weight budgets for encoder and decoder.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArchitecturePlan {
    pub l_e: usize,
    pub w_e: usize,
    pub l_g: usize,
    pub w_g: usize,
    pub beta_const: f64,
    pub s: f64,
}

/// `L = ⌈β ln n⌉`, `W_e = ⌈β n^{s/(2α_e+s)} ln n⌉`,
/// `W_g = ⌈β n^{ℓ/(α_e(α_g∧1)+ℓ)} ln n⌉`, then raised to `L ≥ 3`,
/// `W_e ≥ 6ℓ + 2ℓL_e`, `W_g ≥ 6d + 2dL_g`.
pub fn size_architecture(
    n: usize,
    s: f64,
    alpha_e: f64,
    alpha_g: f64,
    ell: usize,
    data_dim: usize,
    beta_const: f64,
) -> Result<ArchitecturePlan> {
    if n < 2 {
        return Err(Error::Parameter(format!("sample size must be >= 2, got {n}")));
    }
    if !(s > 0.0 && alpha_e > 0.0 && alpha_g > 0.0 && beta_const > 0.0) || ell == 0 || data_dim == 0 {
        return Err(Error::Parameter("rates, dims and beta must be positive".into()));
    }
    let nf = n as f64;
    let log_n = nf.ln();
    let depth = ((beta_const * log_n).ceil() as usize).max(3);
    let raw_we = (beta_const * nf.powf(s / (2.0 * alpha_e + s)) * log_n).ceil() as usize;
    let ellf = ell as f64;
    let raw_wg = (beta_const * nf.powf(ellf / (alpha_e * alpha_g.min(1.0) + ellf)) * log_n).ceil() as usize;
    Ok(ArchitecturePlan {
        l_e: depth,
        w_e: raw_we.max(6 * ell + 2 * ell * depth),
        l_g: depth,
        w_g: raw_wg.max(6 * data_dim + 2 * data_dim * depth),
        beta_const,
        s,
    })
}

/// Equal-width layer dims `[n_in, h, …, h, n_out]` with `depth` affine maps and
/// the width `h ≥ min_width` whose parameter count is closest to `weights`.
pub fn layer_dims(n_in: usize, n_out: usize, depth: usize, weights: usize, min_width: usize) -> Vec<usize> {
    if depth == 1 {
        return vec![n_in, n_out];
    }
    let count = |h: usize| {
        let mut dims = vec![n_in];
        dims.extend(std::iter::repeat(h).take(depth - 1));
        dims.push(n_out);
        TrainableMlp::param_count(&dims)
    };
    let mut best = min_width.max(1);
    let mut h = best;
    while count(h) <= weights {
        best = h;
        h += 1;
    }
    if (count(h) as i64 - weights as i64).abs() < (count(best) as i64 - weights as i64).abs() {
        best = h;
    }
    let mut dims = vec![n_in];
    dims.extend(std::iter::repeat(best).take(depth - 1));
    dims.push(n_out);
    dims
}

/// Decay exponent `r` with risk `~ n^{-r}`.
pub fn theoretical_exponent(ell: f64, s: f64, alpha_e: f64, alpha_g: f64, kind: DissKind) -> f64 {
    let a = ell / alpha_g;
    let b = s / (alpha_e * alpha_g.min(1.0));
    match kind {
        DissKind::W1 => 1.0 / (2.0 + a).max(2.0 + b).max(ell),
        DissKind::Mmd2 => 1.0 / (2.0 + a.max(b)),
    }
}

/// Smallest `m` with `m ≥ n ∨ n^{(ℓ∨2)/max{2+ℓ/α_g, 2+d_μ/(α_e(α_g∧1)), ℓ}}`.
pub fn min_latent_samples(n: usize, ell: usize, alpha_g: f64, alpha_e: f64, d_mu: f64) -> usize {
    let ellf = ell as f64;
    let denom = (2.0 + ellf / alpha_g)
        .max(2.0 + d_mu / (alpha_e * alpha_g.min(1.0)))
        .max(ellf);
    let exponent = ellf.max(2.0) / denom;
    let power = (n as f64).powf(exponent);
    // Guard against powf landing a hair above an exact integer.
    let rounded = power.round();
    let need = if (power - rounded).abs() <= 1e-9 * rounded.max(1.0) {
        rounded as usize
    } else {
        power.ceil() as usize
    };
    need.max(n)
}
