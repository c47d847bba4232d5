//! Explicit layered ReLU networks.
//!
//! A [`ReluNetwork`] is a chain of affine maps, each followed by a per-neuron
//! activation that is either ReLU or the identity. Weights are stored sparsely
//! (one compressed row per neuron) because the hand-built approximators are
//! extremely sparse; [`ReluNetwork::count_stats`] reports depth as the number
//! of affine maps and the weight count as the number of nonzero stored
//! entries across all weight matrices and bias vectors.
//!
//! Networks are immutable once built. The combinators ([`compose`],
//! [`stack_parallel`], [`linear_combine`], [`identity_block`]) always return
//! fresh networks.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-neuron activation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    #[inline]
    fn apply(self, v: f64) -> f64 {
        match self {
            Activation::Relu => {
                if v > 0.0 {
                    v
                } else {
                    0.0
                }
            }
            Activation::Identity => v,
        }
    }

    fn tag(self) -> char {
        match self {
            Activation::Relu => 'R',
            Activation::Identity => 'I',
        }
    }

    fn from_tag(c: char) -> Result<Self> {
        match c {
            'R' => Ok(Activation::Relu),
            'I' => Ok(Activation::Identity),
            other => Err(Error::Parse(format!("unknown activation tag {other:?}"))),
        }
    }
}

/// One affine map `W x + b` followed by per-neuron activations, stored as
/// compressed sparse rows. Entries within a row have distinct columns; their
/// stored order is the summation order used by evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    in_dim: usize,
    row_start: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
    bias: Vec<f64>,
    acts: Vec<Activation>,
}

impl Layer {
    /// Builds a layer from sparse rows of `(column, weight)` pairs.
    /// Duplicate columns are summed and zero weights are dropped.
    pub fn from_rows(
        in_dim: usize,
        rows: Vec<Vec<(usize, f64)>>,
        bias: Vec<f64>,
        acts: Vec<Activation>,
    ) -> Result<Self> {
        let mut cleaned = Vec::with_capacity(rows.len());
        for mut row in rows {
            row.sort_by_key(|&(c, _)| c);
            let mut merged: Vec<(usize, f64)> = Vec::with_capacity(row.len());
            for (c, w) in row {
                match merged.last_mut() {
                    Some(last) if last.0 == c => last.1 += w,
                    _ => merged.push((c, w)),
                }
            }
            merged.retain(|&(_, w)| w != 0.0);
            cleaned.push(merged);
        }
        Self::from_ordered_rows(in_dim, cleaned, bias, acts)
    }

    /// Builds a layer keeping the row entries exactly as given (order included).
    fn from_ordered_rows(
        in_dim: usize,
        rows: Vec<Vec<(usize, f64)>>,
        bias: Vec<f64>,
        acts: Vec<Activation>,
    ) -> Result<Self> {
        let out = rows.len();
        if out == 0 {
            return Err(Error::Malformed("layer with zero neurons".into()));
        }
        if in_dim == 0 {
            return Err(Error::Malformed("layer with zero inputs".into()));
        }
        if bias.len() != out || acts.len() != out {
            return Err(Error::Malformed(format!(
                "layer has {out} rows but {} biases and {} activations",
                bias.len(),
                acts.len()
            )));
        }
        let nnz = rows.iter().map(Vec::len).sum();
        let mut row_start = Vec::with_capacity(out + 1);
        let mut cols = Vec::with_capacity(nnz);
        let mut vals = Vec::with_capacity(nnz);
        row_start.push(0);
        for row in rows {
            for (c, w) in row {
                if c >= in_dim {
                    return Err(Error::Malformed(format!(
                        "column {c} out of range for input dim {in_dim}"
                    )));
                }
                cols.push(c as u32);
                vals.push(w);
            }
            row_start.push(cols.len());
        }
        Ok(Layer {
            in_dim,
            row_start,
            cols,
            vals,
            bias,
            acts,
        })
    }

    /// Dense constructor with one activation shared by every neuron.
    pub fn dense(weights: &[Vec<f64>], bias: Vec<f64>, act: Activation) -> Result<Self> {
        let in_dim = weights.first().map_or(0, Vec::len);
        if weights.iter().any(|r| r.len() != in_dim) {
            return Err(Error::Malformed("ragged weight matrix".into()));
        }
        let rows = weights
            .iter()
            .map(|r| r.iter().copied().enumerate().filter(|&(_, w)| w != 0.0).collect())
            .collect();
        let acts = vec![act; weights.len()];
        Self::from_ordered_rows(in_dim, rows, bias, acts)
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.bias.len()
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn activations(&self) -> &[Activation] {
        &self.acts
    }

    /// Column indices and weights of neuron `r`.
    pub fn row(&self, r: usize) -> (&[u32], &[f64]) {
        let (a, b) = (self.row_start[r], self.row_start[r + 1]);
        (&self.cols[a..b], &self.vals[a..b])
    }

    /// Dense copy of the weight matrix, `out_dim × in_dim`.
    pub fn dense_weights(&self) -> Vec<Vec<f64>> {
        (0..self.out_dim())
            .map(|r| {
                let mut dense = vec![0.0; self.in_dim];
                let (cs, ws) = self.row(r);
                for (&c, &w) in cs.iter().zip(ws) {
                    dense[c as usize] = w;
                }
                dense
            })
            .collect()
    }

    fn nonzero_count(&self) -> usize {
        self.vals.iter().filter(|w| **w != 0.0).count() + self.bias.iter().filter(|b| **b != 0.0).count()
    }

    fn forward(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for r in 0..self.out_dim() {
            let (cs, ws) = self.row(r);
            let mut acc = self.bias[r];
            for (&c, &w) in cs.iter().zip(ws) {
                acc += w * x[c as usize];
            }
            out.push(self.acts[r].apply(acc));
        }
    }

    /// Neuron-major batch forward: `x[c * bs + b]` holds input `c` of sample `b`.
    fn forward_batch(&self, x: &[f64], bs: usize, out: &mut Vec<f64>) {
        out.clear();
        out.resize(self.out_dim() * bs, 0.0);
        for r in 0..self.out_dim() {
            let (cs, ws) = self.row(r);
            let dst = &mut out[r * bs..(r + 1) * bs];
            dst.fill(self.bias[r]);
            for (&c, &w) in cs.iter().zip(ws) {
                let src = &x[c as usize * bs..(c as usize + 1) * bs];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += w * s;
                }
            }
            if self.acts[r] == Activation::Relu {
                for d in dst.iter_mut() {
                    if *d <= 0.0 {
                        *d = 0.0;
                    }
                }
            }
        }
    }
}

/// Depth and weight count of a network.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetStats {
    pub depth: usize,
    pub weights: usize,
}

/// A feed-forward ReLU network `A_L ∘ σ_{L-1} ∘ A_{L-1} ∘ … ∘ σ_1 ∘ A_1`.
#[derive(Clone, Debug, PartialEq)]
pub struct ReluNetwork {
    input_dim: usize,
    layers: Vec<Layer>,
}

impl ReluNetwork {
    /// Validates the layer chain: dimensions must line up and the final layer
    /// must be affine (identity activations only).
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        let first = layers
            .first()
            .ok_or_else(|| Error::Malformed("network without layers".into()))?;
        let input_dim = first.in_dim;
        for (i, pair) in layers.windows(2).enumerate() {
            if pair[1].in_dim != pair[0].out_dim() {
                return Err(Error::Malformed(format!(
                    "layer {} expects {} inputs but layer {} has {} outputs",
                    i + 1,
                    pair[1].in_dim,
                    i,
                    pair[0].out_dim()
                )));
            }
        }
        let last = layers.last().expect("non-empty");
        if last.acts.iter().any(|a| *a != Activation::Identity) {
            return Err(Error::Malformed("final layer must use identity activations".into()));
        }
        Ok(ReluNetwork { input_dim, layers })
    }

    /// Single affine layer `x ↦ W x + b`.
    pub fn affine(weights: &[Vec<f64>], bias: Vec<f64>) -> Result<Self> {
        Self::new(vec![Layer::dense(weights, bias, Activation::Identity)?])
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("non-empty").out_dim()
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    /// `(L(f), W(f))`, recounted from the stored matrices.
    pub fn count_stats(&self) -> NetStats {
        NetStats {
            depth: self.layers.len(),
            weights: self.layers.iter().map(Layer::nonzero_count).sum(),
        }
    }

    /// Largest number of neurons in any layer.
    pub fn max_width(&self) -> usize {
        self.layers.iter().map(Layer::out_dim).max().unwrap_or(0)
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim {
            return Err(Error::InputShape {
                expected: self.input_dim,
                got: x.len(),
            });
        }
        let mut cur = x.to_vec();
        let mut next = Vec::new();
        for layer in &self.layers {
            layer.forward(&cur, &mut next);
            std::mem::swap(&mut cur, &mut next);
        }
        Ok(cur)
    }

    /// Evaluates many inputs; bit-identical to calling [`Self::evaluate`] on
    /// each one, but processes points in blocks for memory locality.
    pub fn evaluate_batch(&self, xs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        const BLOCK: usize = 32;
        if let Some(bad) = xs.iter().find(|x| x.len() != self.input_dim) {
            return Err(Error::InputShape {
                expected: self.input_dim,
                got: bad.len(),
            });
        }
        let mut results = Vec::with_capacity(xs.len());
        let mut cur = Vec::new();
        let mut next = Vec::new();
        for block in xs.chunks(BLOCK) {
            let bs = block.len();
            cur.clear();
            cur.resize(self.input_dim * bs, 0.0);
            for (b, x) in block.iter().enumerate() {
                for (c, v) in x.iter().enumerate() {
                    cur[c * bs + b] = *v;
                }
            }
            for layer in &self.layers {
                layer.forward_batch(&cur, bs, &mut next);
                std::mem::swap(&mut cur, &mut next);
            }
            let out_dim = self.output_dim();
            for b in 0..bs {
                results.push((0..out_dim).map(|o| cur[o * bs + b]).collect());
            }
        }
        Ok(results)
    }

    /// Re-indexes the inputs: input `i` of `self` reads coordinate `map[i]`
    /// of a `new_dim`-dimensional input. Depth and weights are unchanged.
    pub fn lift_inputs(&self, new_dim: usize, map: &[usize]) -> Result<Self> {
        if map.len() != self.input_dim {
            return Err(Error::Malformed(format!(
                "input map has {} entries for a {}-input network",
                map.len(),
                self.input_dim
            )));
        }
        let mut seen = vec![false; new_dim];
        for &m in map {
            if m >= new_dim || seen[m] {
                return Err(Error::Malformed(format!("input map entry {m} invalid or repeated")));
            }
            seen[m] = true;
        }
        let mut layers = self.layers.clone();
        let first = &mut layers[0];
        for c in first.cols.iter_mut() {
            *c = map[*c as usize] as u32;
        }
        first.in_dim = new_dim;
        Ok(ReluNetwork {
            input_dim: new_dim,
            layers,
        })
    }

    /// Network computing `x ↦ f(x - offset)`; the shift is folded into the
    /// first-layer biases.
    pub fn translate_inputs(&self, offset: &[f64]) -> Result<Self> {
        if offset.len() != self.input_dim {
            return Err(Error::InputShape {
                expected: self.input_dim,
                got: offset.len(),
            });
        }
        let mut layers = self.layers.clone();
        let first = &mut layers[0];
        for r in 0..first.out_dim() {
            let (a, b) = (first.row_start[r], first.row_start[r + 1]);
            let shift: f64 = (a..b).map(|k| first.vals[k] * offset[first.cols[k] as usize]).sum();
            first.bias[r] -= shift;
        }
        Ok(ReluNetwork {
            input_dim: self.input_dim,
            layers,
        })
    }

    pub fn to_text(&self) -> String {
        serde_json::to_string_pretty(&NetworkRecord::from(self)).expect("network serializes")
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let record: NetworkRecord = serde_json::from_str(text)?;
        record.try_into()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }
}

/// `outer ∘ inner`. The layer lists are concatenated, so the depth is the
/// sum of the two depths and evaluation matches nested evaluation bit for bit.
pub fn compose(outer: &ReluNetwork, inner: &ReluNetwork) -> Result<ReluNetwork> {
    if inner.output_dim() != outer.input_dim() {
        return Err(Error::Composition {
            inner: inner.output_dim(),
            outer: outer.input_dim(),
        });
    }
    let mut layers = inner.layers.clone();
    layers.extend(outer.layers.iter().cloned());
    Ok(ReluNetwork {
        input_dim: inner.input_dim,
        layers,
    })
}

/// Identity on `R^dim` realised with `depth` affine maps. For `depth >= 2`
/// each coordinate travels as the pair `(ReLU(x), ReLU(-x))` and is
/// reassembled at the end, so inputs of either sign pass through exactly.
pub fn identity_block(dim: usize, depth: usize) -> Result<ReluNetwork> {
    if dim == 0 || depth == 0 {
        return Err(Error::Parameter(format!(
            "identity block needs dim >= 1 and depth >= 1 (got {dim}, {depth})"
        )));
    }
    if depth == 1 {
        let rows = (0..dim).map(|j| vec![(j, 1.0)]).collect();
        let layer = Layer::from_rows(dim, rows, vec![0.0; dim], vec![Activation::Identity; dim])?;
        return ReluNetwork::new(vec![layer]);
    }
    let mut layers = Vec::with_capacity(depth);
    let split = (0..2 * dim)
        .map(|r| vec![(r / 2, if r % 2 == 0 { 1.0 } else { -1.0 })])
        .collect();
    layers.push(Layer::from_rows(
        dim,
        split,
        vec![0.0; 2 * dim],
        vec![Activation::Relu; 2 * dim],
    )?);
    for _ in 2..depth {
        let pass = (0..2 * dim).map(|r| vec![(r, 1.0)]).collect();
        layers.push(Layer::from_rows(
            2 * dim,
            pass,
            vec![0.0; 2 * dim],
            vec![Activation::Relu; 2 * dim],
        )?);
    }
    let merge = (0..dim).map(|j| vec![(2 * j, 1.0), (2 * j + 1, -1.0)]).collect();
    layers.push(Layer::from_rows(
        2 * dim,
        merge,
        vec![0.0; dim],
        vec![Activation::Identity; dim],
    )?);
    ReluNetwork::new(layers)
}

/// Runs all networks side by side on the same input and concatenates their
/// outputs. Shallower networks are extended with [`identity_block`]s so every
/// component reaches the maximum depth.
pub fn stack_parallel(nets: &[ReluNetwork]) -> Result<ReluNetwork> {
    let first = nets
        .first()
        .ok_or_else(|| Error::Stacking("empty network list".into()))?;
    let input_dim = first.input_dim;
    if let Some(bad) = nets.iter().find(|n| n.input_dim != input_dim) {
        return Err(Error::Stacking(format!(
            "input dims differ ({} vs {})",
            input_dim, bad.input_dim
        )));
    }
    let depth = nets.iter().map(ReluNetwork::depth).max().expect("non-empty");
    let padded: Vec<std::borrow::Cow<'_, ReluNetwork>> = nets
        .iter()
        .map(|n| {
            if n.depth() < depth {
                identity_block(n.output_dim(), depth - n.depth())
                    .and_then(|id| compose(&id, n))
                    .map(std::borrow::Cow::Owned)
            } else {
                Ok(std::borrow::Cow::Borrowed(n))
            }
        })
        .collect::<Result<_>>()?;

    let mut layers = Vec::with_capacity(depth);
    for k in 0..depth {
        let out: usize = padded.iter().map(|n| n.layers[k].out_dim()).sum();
        let nnz: usize = padded.iter().map(|n| n.layers[k].vals.len()).sum();
        let in_dim = if k == 0 {
            input_dim
        } else {
            padded.iter().map(|n| n.layers[k - 1].out_dim()).sum()
        };
        let mut row_start = Vec::with_capacity(out + 1);
        let mut cols = Vec::with_capacity(nnz);
        let mut vals = Vec::with_capacity(nnz);
        let mut bias = Vec::with_capacity(out);
        let mut acts = Vec::with_capacity(out);
        row_start.push(0);
        let mut col_offset = 0usize;
        for n in &padded {
            let l = &n.layers[k];
            for r in 0..l.out_dim() {
                let (cs, ws) = l.row(r);
                cols.extend(cs.iter().map(|c| c + col_offset as u32));
                vals.extend_from_slice(ws);
                row_start.push(cols.len());
            }
            bias.extend_from_slice(&l.bias);
            acts.extend_from_slice(&l.acts);
            if k > 0 {
                col_offset += n.layers[k - 1].out_dim();
            }
        }
        layers.push(Layer {
            in_dim,
            row_start,
            cols,
            vals,
            bias,
            acts,
        });
    }
    ReluNetwork::new(layers)
}

/// Scalar network computing `Σ_k coeffs[k] · nets[k](x)`. The nets are stacked
/// and the combination is folded into the final affine layer, so the depth
/// equals the deepest component.
pub fn linear_combine(nets: &[ReluNetwork], coeffs: &[f64]) -> Result<ReluNetwork> {
    if nets.len() != coeffs.len() {
        return Err(Error::Combination(format!(
            "{} networks but {} coefficients",
            nets.len(),
            coeffs.len()
        )));
    }
    if nets.is_empty() {
        return Err(Error::Combination("empty network list".into()));
    }
    if let Some(bad) = nets.iter().find(|n| n.output_dim() != 1) {
        return Err(Error::Combination(format!(
            "components must be scalar, found output dim {}",
            bad.output_dim()
        )));
    }
    let stacked = stack_parallel(nets).map_err(|e| Error::Combination(e.to_string()))?;
    let mut layers = stacked.layers;
    let last = layers.pop().expect("non-empty");
    let mut dense = vec![0.0; last.in_dim];
    let mut touched = Vec::new();
    let mut bias = 0.0;
    for (r, &c) in coeffs.iter().enumerate() {
        bias += c * last.bias[r];
        let (cs, ws) = last.row(r);
        for (&col, &w) in cs.iter().zip(ws) {
            let col = col as usize;
            if dense[col] == 0.0 {
                touched.push(col);
            }
            dense[col] += c * w;
        }
    }
    touched.sort_unstable();
    touched.dedup();
    let row: Vec<(usize, f64)> = touched
        .into_iter()
        .map(|c| (c, dense[c]))
        .filter(|&(_, w)| w != 0.0)
        .collect();
    layers.push(Layer::from_ordered_rows(
        last.in_dim,
        vec![row],
        vec![bias],
        vec![Activation::Identity],
    )?);
    ReluNetwork::new(layers)
}

#[derive(Serialize, Deserialize)]
struct LayerRecord {
    in_dim: usize,
    out_dim: usize,
    /// Row-major sparse rows: `[column, weight]` pairs.
    rows: Vec<Vec<(u32, f64)>>,
    bias: Vec<f64>,
    /// One tag per neuron: `R` (ReLU) or `I` (identity).
    activations: String,
}

#[derive(Serialize, Deserialize)]
struct NetworkRecord {
    format: String,
    input_dim: usize,
    output_dim: usize,
    layers: Vec<LayerRecord>,
}

const FORMAT_TAG: &str = "relu-net/1";

impl From<&ReluNetwork> for NetworkRecord {
    fn from(net: &ReluNetwork) -> Self {
        let layers = net
            .layers
            .iter()
            .map(|l| LayerRecord {
                in_dim: l.in_dim,
                out_dim: l.out_dim(),
                rows: (0..l.out_dim())
                    .map(|r| {
                        let (cs, ws) = l.row(r);
                        cs.iter().copied().zip(ws.iter().copied()).collect()
                    })
                    .collect(),
                bias: l.bias.clone(),
                activations: l.acts.iter().map(|a| a.tag()).collect(),
            })
            .collect();
        NetworkRecord {
            format: FORMAT_TAG.to_string(),
            input_dim: net.input_dim,
            output_dim: net.output_dim(),
            layers,
        }
    }
}

impl TryFrom<NetworkRecord> for ReluNetwork {
    type Error = Error;

    fn try_from(rec: NetworkRecord) -> Result<Self> {
        if rec.format != FORMAT_TAG {
            return Err(Error::Parse(format!("unsupported network format {:?}", rec.format)));
        }
        let mut layers = Vec::with_capacity(rec.layers.len());
        for lr in rec.layers {
            if lr.rows.len() != lr.out_dim {
                return Err(Error::Parse("row count does not match out_dim".into()));
            }
            let acts = lr
                .activations
                .chars()
                .map(Activation::from_tag)
                .collect::<Result<Vec<_>>>()?;
            for row in &lr.rows {
                let mut cs: Vec<u32> = row.iter().map(|e| e.0).collect();
                cs.sort_unstable();
                if cs.windows(2).any(|w| w[0] == w[1]) {
                    return Err(Error::Parse("duplicate column within a row".into()));
                }
            }
            let rows = lr
                .rows
                .into_iter()
                .map(|r| r.into_iter().map(|(c, w)| (c as usize, w)).collect())
                .collect();
            layers.push(Layer::from_ordered_rows(lr.in_dim, rows, lr.bias, acts)?);
        }
        let net = ReluNetwork::new(layers)?;
        if net.input_dim != rec.input_dim || net.output_dim() != rec.output_dim {
            return Err(Error::Parse("declared dims disagree with layers".into()));
        }
        Ok(net)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn relu_net() -> ReluNetwork {
        let l1 = Layer::dense(&[vec![1.0]], vec![0.0], Activation::Relu).unwrap();
        let l2 = Layer::dense(&[vec![1.0]], vec![0.0], Activation::Identity).unwrap();
        ReluNetwork::new(vec![l1, l2]).unwrap()
    }

    fn random_net(rng: &mut ChaCha8Rng, dims: &[usize], with_bias: bool) -> ReluNetwork {
        let mut layers = Vec::new();
        for (i, w) in dims.windows(2).enumerate() {
            let weights: Vec<Vec<f64>> = (0..w[1])
                .map(|_| (0..w[0]).map(|_| rng.gen_range(-1.0..1.0)).collect())
                .collect();
            let bias = (0..w[1])
                .map(|_| if with_bias { rng.gen_range(-0.5..0.5) } else { 0.0 })
                .collect();
            let act = if i + 2 == dims.len() {
                Activation::Identity
            } else {
                Activation::Relu
            };
            layers.push(Layer::dense(&weights, bias, act).unwrap());
        }
        ReluNetwork::new(layers).unwrap()
    }

    #[test]
    fn single_identity_layer() {
        let net = ReluNetwork::affine(&[vec![1.0]], vec![0.0]).unwrap();
        assert_eq!(net.evaluate(&[0.7]).unwrap(), vec![0.7]);
        assert_eq!(net.count_stats(), NetStats { depth: 1, weights: 1 });
    }

    #[test]
    fn relu_of_negative_is_zero() {
        assert_eq!(relu_net().evaluate(&[-0.3]).unwrap(), vec![0.0]);
    }

    #[test]
    fn shape_errors() {
        let net = relu_net();
        assert!(matches!(net.evaluate(&[1.0, 2.0]), Err(Error::InputShape { .. })));
        let two = identity_block(2, 1).unwrap();
        assert!(matches!(compose(&net, &two), Err(Error::Composition { .. })));
        assert!(stack_parallel(&[]).is_err());
        assert!(stack_parallel(&[net.clone(), two]).is_err());
        assert!(linear_combine(&[net.clone()], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn final_layer_must_be_affine() {
        let l = Layer::dense(&[vec![1.0]], vec![0.0], Activation::Relu).unwrap();
        assert!(ReluNetwork::new(vec![l]).is_err());
    }

    #[test]
    fn compose_with_identity_matches_on_grid() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let f = random_net(&mut rng, &[1, 5, 5, 1], true);
        let id = identity_block(1, 1).unwrap();
        let g = compose(&id, &f).unwrap();
        for k in 0..100 {
            let x = [k as f64 / 99.0];
            assert_eq!(g.evaluate(&x).unwrap(), f.evaluate(&x).unwrap());
        }
    }

    #[test]
    fn compose_depth_is_additive() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let f = random_net(&mut rng, &[2, 3, 3, 2], true);
        let g = random_net(&mut rng, &[2, 4, 4, 4, 4, 2], true);
        assert_eq!(f.depth(), 3);
        assert_eq!(g.depth(), 5);
        assert_eq!(compose(&f, &g).unwrap().depth(), 8);
    }

    #[test]
    fn compose_is_bit_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = random_net(&mut rng, &[3, 6, 2], true);
        let g = random_net(&mut rng, &[2, 7, 7, 3], true);
        let fg = compose(&f, &g).unwrap();
        for _ in 0..100 {
            let x: Vec<f64> = (0..2).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let nested = f.evaluate(&g.evaluate(&x).unwrap()).unwrap();
            assert_eq!(fg.evaluate(&x).unwrap(), nested);
        }
    }

    #[test]
    fn stack_two_relus() {
        let s = stack_parallel(&[relu_net(), relu_net()]).unwrap();
        assert_eq!(s.evaluate(&[0.5]).unwrap(), vec![0.5, 0.5]);
    }

    #[test]
    fn stack_depth_is_max() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let f = random_net(&mut rng, &[2, 3, 1], true);
        let g = random_net(&mut rng, &[2, 3, 3, 3, 2], true);
        assert_eq!(f.depth(), 2);
        assert_eq!(g.depth(), 4);
        let s = stack_parallel(&[f.clone(), g.clone()]).unwrap();
        assert_eq!(s.depth(), 4);
        let bound = f.count_stats().weights + g.count_stats().weights + 2 * 1 * 2;
        assert!(s.count_stats().weights <= bound);
        for _ in 0..50 {
            let x: Vec<f64> = (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mut expect = f.evaluate(&x).unwrap();
            expect.extend(g.evaluate(&x).unwrap());
            assert_eq!(s.evaluate(&x).unwrap(), expect);
        }
    }

    #[test]
    fn linear_combine_cases() {
        let r = relu_net();
        let zero = linear_combine(&[r.clone(), r.clone()], &[1.0, -1.0]).unwrap();
        for k in 0..21 {
            let x = -1.0 + k as f64 * 0.1;
            assert_eq!(zero.evaluate(&[x]).unwrap(), vec![0.0]);
        }
        let twice = linear_combine(&[r], &[2.0]).unwrap();
        assert_eq!(twice.evaluate(&[1.0]).unwrap(), vec![2.0]);
    }

    #[test]
    fn linear_combine_matches_direct_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let nets = vec![
            random_net(&mut rng, &[2, 4, 1], true),
            random_net(&mut rng, &[2, 3, 3, 1], true),
            random_net(&mut rng, &[2, 1], true),
        ];
        let coeffs = [0.7, -1.3, 2.1];
        let comb = linear_combine(&nets, &coeffs).unwrap();
        assert_eq!(comb.depth(), 3);
        for _ in 0..50 {
            let x: Vec<f64> = (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let direct: f64 = nets
                .iter()
                .zip(coeffs)
                .map(|(n, c)| c * n.evaluate(&x).unwrap()[0])
                .sum();
            let got = comb.evaluate(&x).unwrap()[0];
            assert!((got - direct).abs() <= 1e-12, "{got} vs {direct}");
        }
    }

    #[test]
    fn identity_block_cases() {
        let id = identity_block(2, 3).unwrap();
        assert_eq!(id.evaluate(&[0.2, 0.9]).unwrap(), vec![0.2, 0.9]);
        let signed = identity_block(1, 4).unwrap();
        assert_eq!(signed.evaluate(&[-0.5]).unwrap(), vec![-0.5]);
        for dim in 1..4 {
            for depth in 1..6 {
                let w = identity_block(dim, depth).unwrap().count_stats().weights;
                assert!(w <= 2 * dim * (depth + 1));
            }
        }
        assert!(identity_block(0, 2).is_err());
        assert!(identity_block(2, 0).is_err());
    }

    #[test]
    fn weight_count_skips_zeros() {
        let l1 = Layer::dense(&[vec![1.0, 0.0], vec![0.0, 2.0]], vec![0.0, 0.5], Activation::Relu).unwrap();
        let l2 = Layer::dense(&[vec![1.0, -1.0]], vec![0.0], Activation::Identity).unwrap();
        let net = ReluNetwork::new(vec![l1, l2]).unwrap();
        assert_eq!(net.count_stats(), NetStats { depth: 2, weights: 5 });
    }

    #[test]
    fn batch_matches_single() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let net = random_net(&mut rng, &[3, 8, 8, 2], true);
        let xs: Vec<Vec<f64>> = (0..77)
            .map(|_| (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let batch = net.evaluate_batch(&xs).unwrap();
        for (x, y) in xs.iter().zip(&batch) {
            assert_eq!(&net.evaluate(x).unwrap(), y);
        }
    }

    #[test]
    fn lift_and_translate() {
        let r = relu_net();
        let lifted = r.lift_inputs(3, &[2]).unwrap();
        assert_eq!(lifted.evaluate(&[5.0, 5.0, 0.25]).unwrap(), vec![0.25]);
        let shifted = r.translate_inputs(&[0.5]).unwrap();
        assert_eq!(shifted.evaluate(&[0.75]).unwrap(), vec![0.25]);
        assert_eq!(shifted.evaluate(&[0.25]).unwrap(), vec![0.0]);
        assert!(r.lift_inputs(3, &[3]).is_err());
    }

    #[test]
    fn positive_homogeneity_without_bias() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let net = random_net(&mut rng, &[2, 6, 6, 1], false);
        for _ in 0..50 {
            let x: Vec<f64> = (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let t: f64 = rng.gen_range(0.0..4.0);
            let tx: Vec<f64> = x.iter().map(|v| t * v).collect();
            let lhs = net.evaluate(&tx).unwrap()[0];
            let rhs = t * net.evaluate(&x).unwrap()[0];
            assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()));
        }
    }

    #[test]
    fn text_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let net = random_net(&mut rng, &[3, 5, 4, 2], true);
        let back = ReluNetwork::from_text(&net.to_text()).unwrap();
        assert_eq!(back, net);
        assert!(ReluNetwork::from_text("{}").is_err());
    }
}
