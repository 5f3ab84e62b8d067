//! Attention-pooled value network.
//!
//! Each row of the state matrix (robot state paired with one entity) is
//! embedded; embeddings are scored against their mean, softmax-weighted, and
//! the pooled pair features are concatenated with the robot's own state for a
//! final value regression. All parameters live in one flat vector so that
//! gradients, momentum, and checkpoints share a single layout.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::codec::{StateEncoding, StateMatrix};
use crate::error::{Error, Result};

const CHECKPOINT_MAGIC: &[u8; 8] = b"CNAVNET\0";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Hidden and output widths of the four sub-networks; input widths follow
/// from the state encoding.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkWidths {
    pub embed: Vec<usize>,
    pub pair: Vec<usize>,
    pub attn_hidden: Vec<usize>,
    pub value_hidden: Vec<usize>,
}

impl Default for NetworkWidths {
    fn default() -> Self {
        Self {
            embed: vec![150, 100],
            pair: vec![100, 50],
            attn_hidden: vec![100, 100],
            value_hidden: vec![150, 100, 100],
        }
    }
}

/// Full layer widths of one MLP, input first. Hidden layers use ReLU, the
/// output layer is linear.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MlpSpec {
    pub layer_widths: Vec<usize>,
}

impl MlpSpec {
    fn param_count(&self) -> usize {
        self.layer_widths.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    fn input(&self) -> usize {
        self.layer_widths[0]
    }

    fn output(&self) -> usize {
        *self.layer_widths.last().expect("validated non-empty")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkShape {
    pub row_width: usize,
    pub self_dim: usize,
    pub embed: MlpSpec,
    pub pair: MlpSpec,
    pub attn: MlpSpec,
    pub value: MlpSpec,
}

impl NetworkShape {
    pub fn new(encoding: StateEncoding, widths: &NetworkWidths) -> Result<Self> {
        let nonempty = |name: &str, w: &[usize], allow_empty: bool| {
            if (!allow_empty && w.is_empty()) || w.contains(&0) {
                Err(Error::Config(format!("{name} widths must be positive and non-empty")))
            } else {
                Ok(())
            }
        };
        nonempty("embed", &widths.embed, false)?;
        nonempty("pair", &widths.pair, false)?;
        nonempty("attn_hidden", &widths.attn_hidden, true)?;
        nonempty("value_hidden", &widths.value_hidden, true)?;

        let row_width = encoding.row_width();
        let self_dim = encoding.self_width();
        let e_dim = *widths.embed.last().unwrap();
        let h_dim = *widths.pair.last().unwrap();
        let chain = |input: usize, rest: &[usize], out: Option<usize>| {
            let mut v = vec![input];
            v.extend_from_slice(rest);
            v.extend(out);
            MlpSpec { layer_widths: v }
        };
        Ok(Self {
            row_width,
            self_dim,
            embed: chain(row_width, &widths.embed, None),
            pair: chain(e_dim, &widths.pair, None),
            attn: chain(2 * e_dim, &widths.attn_hidden, Some(1)),
            value: chain(self_dim + h_dim, &widths.value_hidden, Some(1)),
        })
    }

    fn from_specs(row_width: usize, self_dim: usize, mlps: [Vec<usize>; 4]) -> Result<Self> {
        let [embed, pair, attn, value] = mlps.map(|layer_widths| MlpSpec { layer_widths });
        let shape = Self {
            row_width,
            self_dim,
            embed,
            pair,
            attn,
            value,
        };
        shape.check()?;
        Ok(shape)
    }

    fn check(&self) -> Result<()> {
        let bad = |m: &MlpSpec| m.layer_widths.len() < 2 || m.layer_widths.contains(&0);
        if [&self.embed, &self.pair, &self.attn, &self.value].into_iter().any(bad)
            || self.embed.input() != self.row_width
            || self.pair.input() != self.embed.output()
            || self.attn.input() != 2 * self.embed.output()
            || self.attn.output() != 1
            || self.value.input() != self.self_dim + self.pair.output()
            || self.value.output() != 1
            || self.self_dim >= self.row_width
        {
            return Err(Error::ShapeMismatch("inconsistent network layer widths".into()));
        }
        Ok(())
    }

    fn mlps(&self) -> [&MlpSpec; 4] {
        [&self.embed, &self.pair, &self.attn, &self.value]
    }

    pub fn param_count(&self) -> usize {
        self.mlps().iter().map(|m| m.param_count()).sum()
    }

    fn offsets(&self) -> [usize; 4] {
        let mut off = [0; 4];
        let mut acc = 0;
        for (o, m) in off.iter_mut().zip(self.mlps()) {
            *o = acc;
            acc += m.param_count();
        }
        off
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams {
    pub shape: NetworkShape,
    /// Per MLP in order embed, pair, attn, value; per layer the `in x out`
    /// weight matrix (one row of output weights per input) followed by the bias.
    pub weights: Vec<f64>,
    pub momentum: Vec<f64>,
}

/// Gradient with the same flat layout as [`NetworkParams::weights`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients(pub Vec<f64>);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SgdConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub batch_size: usize,
}

impl Default for SgdConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.001,
            momentum: 0.9,
            batch_size: 100,
        }
    }
}

/// Dot product with four independent accumulators.
#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0; 4];
    let chunks = n / 4;
    for c in 0..chunks {
        let i = 4 * c;
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut tail = 0.0;
    for i in 4 * chunks..n {
        tail += a[i] * b[i];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Runs an MLP, returning the activations of every layer (input included).
fn mlp_forward(weights: &[f64], spec: &MlpSpec, input: &[f64]) -> Vec<Vec<f64>> {
    let widths = &spec.layer_widths;
    let mut acts = Vec::with_capacity(widths.len());
    acts.push(input.to_vec());
    let mut off = 0;
    let last = widths.len() - 2;
    for (l, w) in widths.windows(2).enumerate() {
        let (n_in, n_out) = (w[0], w[1]);
        let mat = &weights[off..off + n_in * n_out];
        let mut y = weights[off + n_in * n_out..off + n_in * n_out + n_out].to_vec();
        let x = acts.last().unwrap();
        for (k, &xk) in x.iter().enumerate() {
            // Post-ReLU inputs are often exactly zero.
            if xk == 0.0 {
                continue;
            }
            for (yo, wo) in y.iter_mut().zip(&mat[k * n_out..(k + 1) * n_out]) {
                *yo += wo * xk;
            }
        }
        if l < last {
            for v in &mut y {
                *v = v.max(0.0);
            }
        }
        acts.push(y);
        off += n_in * n_out + n_out;
    }
    acts
}

/// Accumulates parameter gradients for one MLP pass into `grad` and returns
/// the gradient with respect to the input (left empty unless `input_grad`).
fn mlp_backward(
    weights: &[f64],
    spec: &MlpSpec,
    acts: &[Vec<f64>],
    grad_out: &[f64],
    grad: &mut [f64],
    input_grad: bool,
) -> Vec<f64> {
    let widths = &spec.layer_widths;
    let mut layer_off = Vec::with_capacity(widths.len() - 1);
    let mut off = 0;
    for w in widths.windows(2) {
        layer_off.push(off);
        off += w[0] * w[1] + w[1];
    }
    let mut g = grad_out.to_vec();
    let last = widths.len() - 2;
    for l in (0..widths.len() - 1).rev() {
        let (n_in, n_out) = (widths[l], widths[l + 1]);
        if l < last {
            for (gv, a) in g.iter_mut().zip(&acts[l + 1]) {
                if *a <= 0.0 {
                    *gv = 0.0;
                }
            }
        }
        let off = layer_off[l];
        let x = &acts[l];
        let want_in = l > 0 || input_grad;
        let mut g_in = if want_in { vec![0.0; n_in] } else { Vec::new() };
        for (k, &xk) in x.iter().enumerate() {
            let row = off + k * n_out;
            if want_in {
                g_in[k] = dot(&weights[row..row + n_out], &g);
            }
            if xk != 0.0 {
                for (gw, go) in grad[row..row + n_out].iter_mut().zip(&g) {
                    *gw += xk * go;
                }
            }
        }
        for (gb, go) in grad[off + n_in * n_out..off + n_in * n_out + n_out].iter_mut().zip(&g) {
            *gb += go;
        }
        g = g_in;
    }
    g
}

struct ForwardCache {
    embed: Vec<Vec<Vec<f64>>>,
    pair: Vec<Vec<Vec<f64>>>,
    attn: Vec<Vec<Vec<f64>>>,
    value: Vec<Vec<f64>>,
    alpha: Vec<f64>,
}

impl NetworkParams {
    /// Uniform initialisation in `[-1/sqrt(fan_in), 1/sqrt(fan_in)]`.
    pub fn init(shape: NetworkShape, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut weights = Vec::with_capacity(shape.param_count());
        for m in shape.mlps() {
            for w in m.layer_widths.windows(2) {
                let bound = 1.0 / (w[0] as f64).sqrt();
                for _ in 0..w[0] * w[1] + w[1] {
                    weights.push(rng.gen_range(-bound..=bound));
                }
            }
        }
        let momentum = vec![0.0; weights.len()];
        Self {
            shape,
            weights,
            momentum,
        }
    }

    /// All-zero network: predicts 0 for every state.
    pub fn zeros(shape: NetworkShape) -> Self {
        let n = shape.param_count();
        Self {
            shape,
            weights: vec![0.0; n],
            momentum: vec![0.0; n],
        }
    }

    fn mlp_slices(&self) -> [&[f64]; 4] {
        let off = self.shape.offsets();
        let n = self.weights.len();
        let end = [off[1], off[2], off[3], n];
        std::array::from_fn(|i| &self.weights[off[i]..end[i]])
    }

    fn check_input(&self, state: &StateMatrix) -> Result<()> {
        if state.rows == 0 || state.width != self.shape.row_width || state.data.len() != state.rows * state.width {
            return Err(Error::ShapeMismatch(format!(
                "network expects rows of width {}, got {}x{}",
                self.shape.row_width, state.rows, state.width
            )));
        }
        Ok(())
    }

    fn run(&self, state: &StateMatrix) -> (f64, ForwardCache) {
        let [w_embed, w_pair, w_attn, w_value] = self.mlp_slices();
        let s = &self.shape;
        let n = state.rows;
        let embed: Vec<_> = (0..n).map(|i| mlp_forward(w_embed, &s.embed, state.row(i))).collect();
        let e_dim = s.embed.output();
        let mut mean = vec![0.0; e_dim];
        for acts in &embed {
            for (m, v) in mean.iter_mut().zip(acts.last().unwrap()) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= n as f64;
        }
        let pair: Vec<_> = embed
            .iter()
            .map(|acts| mlp_forward(w_pair, &s.pair, acts.last().unwrap()))
            .collect();
        let attn: Vec<_> = embed
            .iter()
            .map(|acts| {
                let mut input = acts.last().unwrap().clone();
                input.extend_from_slice(&mean);
                mlp_forward(w_attn, &s.attn, &input)
            })
            .collect();
        let scores: Vec<f64> = attn.iter().map(|a| a.last().unwrap()[0]).collect();
        let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exp: Vec<f64> = scores.iter().map(|v| (v - max).exp()).collect();
        let z: f64 = exp.iter().sum();
        let alpha: Vec<f64> = exp.iter().map(|e| e / z).collect();

        let h_dim = s.pair.output();
        let mut input = state.row(0)[..s.self_dim].to_vec();
        input.resize(s.self_dim + h_dim, 0.0);
        for (a, acts) in alpha.iter().zip(&pair) {
            for (c, h) in input[s.self_dim..].iter_mut().zip(acts.last().unwrap()) {
                *c += a * h;
            }
        }
        let value = mlp_forward(w_value, &s.value, &input);
        let out = value.last().unwrap()[0];
        (
            out,
            ForwardCache {
                embed,
                pair,
                attn,
                value,
                alpha,
            },
        )
    }

    pub fn forward(&self, state: &StateMatrix) -> Result<f64> {
        self.check_input(state)?;
        Ok(self.run(state).0)
    }

    /// Value together with the attention weights over the rows.
    pub fn forward_with_attention(&self, state: &StateMatrix) -> Result<(f64, Vec<f64>)> {
        self.check_input(state)?;
        let (v, cache) = self.run(state);
        Ok((v, cache.alpha))
    }

    /// Gradient of `(forward - target)^2 / 2` with respect to every weight.
    pub fn backward(&self, state: &StateMatrix, target: f64) -> Result<Gradients> {
        let mut grad = vec![0.0; self.weights.len()];
        self.accumulate_gradient(state, target, 1.0, &mut grad)?;
        Ok(Gradients(grad))
    }

    /// Adds `scale` times the gradient of the squared-error loss to `grad` and
    /// returns the loss `(forward - target)^2 / 2`.
    pub fn accumulate_gradient(&self, state: &StateMatrix, target: f64, scale: f64, grad: &mut [f64]) -> Result<f64> {
        self.check_input(state)?;
        if grad.len() != self.weights.len() {
            return Err(Error::ShapeMismatch("gradient buffer length".into()));
        }
        let (out, cache) = self.run(state);
        let residual = out - target;
        let s = &self.shape;
        let off = s.offsets();
        let [w_embed, w_pair, w_attn, w_value] = self.mlp_slices();
        let (g_embed, rest) = grad.split_at_mut(off[1]);
        let (g_pair, rest) = rest.split_at_mut(off[2] - off[1]);
        let (g_attn, g_value) = rest.split_at_mut(off[3] - off[2]);

        let g_in = mlp_backward(w_value, &s.value, &cache.value, &[scale * residual], g_value, true);
        let g_c = &g_in[s.self_dim..];

        let n = state.rows;
        let e_dim = s.embed.output();
        let g_alpha: Vec<f64> = cache.pair.iter().map(|acts| dot(acts.last().unwrap(), g_c)).collect();
        let weighted: f64 = cache.alpha.iter().zip(&g_alpha).map(|(a, g)| a * g).sum();
        let mut g_e = vec![vec![0.0; e_dim]; n];
        let mut g_mean = vec![0.0; e_dim];
        for i in 0..n {
            let a = cache.alpha[i];
            let g_h: Vec<f64> = g_c.iter().map(|g| a * g).collect();
            let gp = mlp_backward(w_pair, &s.pair, &cache.pair[i], &g_h, g_pair, true);
            let g_score = a * (g_alpha[i] - weighted);
            let ga = mlp_backward(w_attn, &s.attn, &cache.attn[i], &[g_score], g_attn, true);
            for k in 0..e_dim {
                g_e[i][k] += gp[k] + ga[k];
                g_mean[k] += ga[e_dim + k];
            }
        }
        for i in 0..n {
            for k in 0..e_dim {
                g_e[i][k] += g_mean[k] / n as f64;
            }
            mlp_backward(w_embed, &s.embed, &cache.embed[i], &g_e[i], g_embed, false);
        }
        Ok(0.5 * residual * residual)
    }

    /// One momentum step on the mean of `batch`.
    pub fn sgd_step(&mut self, batch: &[Gradients], cfg: &SgdConfig) -> Result<()> {
        if batch.is_empty() {
            return Err(Error::ShapeMismatch("empty gradient batch".into()));
        }
        let n = self.weights.len();
        if batch.iter().any(|g| g.0.len() != n) {
            return Err(Error::ShapeMismatch("gradient length differs from parameter count".into()));
        }
        let inv = 1.0 / batch.len() as f64;
        let mean: Vec<f64> = (0..n).map(|i| batch.iter().map(|g| g.0[i]).sum::<f64>() * inv).collect();
        self.apply_gradient(&mean, cfg);
        Ok(())
    }

    /// Momentum step with an already averaged gradient.
    pub fn apply_gradient(&mut self, mean_grad: &[f64], cfg: &SgdConfig) {
        for ((w, b), g) in self.weights.iter_mut().zip(&mut self.momentum).zip(mean_grad) {
            *b = cfg.momentum * *b + g;
            *w -= cfg.learning_rate * *b;
        }
    }

    /// Weights and shape without the optimiser state, e.g. for a target network.
    pub fn snapshot(&self) -> Self {
        Self {
            shape: self.shape.clone(),
            weights: self.weights.clone(),
            momentum: vec![0.0; self.momentum.len()],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().all(|w| w.is_finite())
    }

    /// Checkpoint bytes. Layout (little-endian): 8-byte magic, `u32` version,
    /// `u32` row width, `u32` self width, then for each MLP (embed, pair,
    /// attn, value) a `u32` layer count followed by that many `u32` widths,
    /// then a `u64` parameter count, the weights and the momentum buffer as
    /// `f64`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let s = &self.shape;
        let mut out = Vec::with_capacity(64 + 16 * self.weights.len());
        out.extend_from_slice(CHECKPOINT_MAGIC);
        for v in [CHECKPOINT_VERSION, s.row_width as u32, s.self_dim as u32] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for m in s.mlps() {
            out.extend_from_slice(&(m.layer_widths.len() as u32).to_le_bytes());
            for w in &m.layer_widths {
                out.extend_from_slice(&(*w as u32).to_le_bytes());
            }
        }
        out.extend_from_slice(&(self.weights.len() as u64).to_le_bytes());
        for v in self.weights.iter().chain(&self.momentum) {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(8)? != CHECKPOINT_MAGIC {
            return Err(Error::CorruptCheckpoint("bad magic".into()));
        }
        let version = r.u32()?;
        if version != CHECKPOINT_VERSION {
            return Err(Error::CheckpointVersion {
                found: version,
                expected: CHECKPOINT_VERSION,
            });
        }
        let row_width = r.u32()? as usize;
        let self_dim = r.u32()? as usize;
        let mut mlps: [Vec<usize>; 4] = Default::default();
        for m in &mut mlps {
            let len = r.u32()? as usize;
            if len > 64 {
                return Err(Error::CorruptCheckpoint("implausible layer count".into()));
            }
            for _ in 0..len {
                m.push(r.u32()? as usize);
            }
        }
        let shape = NetworkShape::from_specs(row_width, self_dim, mlps)
            .map_err(|e| Error::CorruptCheckpoint(e.to_string()))?;
        let count = r.u64()? as usize;
        if count != shape.param_count() {
            return Err(Error::CorruptCheckpoint("parameter count does not match widths".into()));
        }
        let mut read_vec = || (0..count).map(|_| r.f64()).collect::<Result<Vec<f64>>>();
        let weights = read_vec()?;
        let momentum = read_vec()?;
        if r.pos != bytes.len() {
            return Err(Error::CorruptCheckpoint("trailing bytes".into()));
        }
        Ok(Self {
            shape,
            weights,
            momentum,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(&self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }

    /// Loads a checkpoint and checks it against the expected shape.
    pub fn load_expecting(path: &Path, shape: &NetworkShape) -> Result<Self> {
        let params = Self::load(path)?;
        if &params.shape != shape {
            return Err(Error::ShapeMismatch(format!(
                "checkpoint has row width {} and self width {}, configuration expects {} and {}",
                params.shape.row_width, params.shape.self_dim, shape.row_width, shape.self_dim
            )));
        }
        Ok(params)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::CorruptCheckpoint("unexpected end of file".into()))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}
