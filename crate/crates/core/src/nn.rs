//! Parameter storage and the layers the ICCN branches are built from.

use crate::autodiff::{Graph, Gradients, Var};
use crate::error::{Error, Result};
use crate::rng::SeededRng;
use crate::tensor::Tensor;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ParamId(pub usize);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitRecord {
    pub scheme: String,
    pub seed: u64,
}

/// Named parameter tensors in registration order.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSet {
    names: Vec<String>,
    tensors: Vec<Tensor>,
    pub init: Option<InitRecord>,
}

impl Default for ParamSet {
    fn default() -> Self {
        Self::new()
    }
}

impl ParamSet {
    pub fn new() -> Self {
        ParamSet {
            names: Vec::new(),
            tensors: Vec::new(),
            init: None,
        }
    }

    pub fn add(&mut self, name: impl Into<String>, value: Tensor) -> ParamId {
        let name = name.into();
        debug_assert!(!self.names.contains(&name), "duplicate parameter {name}");
        self.names.push(name);
        self.tensors.push(value);
        ParamId(self.tensors.len() - 1)
    }

    /// Adds a tensor drawn uniformly from ±1/sqrt(fan_in).
    pub fn add_uniform(
        &mut self,
        name: impl Into<String>,
        shape: &[usize],
        fan_in: usize,
        rng: &mut SeededRng,
    ) -> ParamId {
        let bound = 1.0 / (fan_in.max(1) as f64).sqrt();
        let n: usize = shape.iter().product();
        let data = (0..n).map(|_| rng.uniform_range(-bound, bound)).collect();
        self.add(name, Tensor::new(shape.to_vec(), data).expect("init shape"))
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn get(&self, id: ParamId) -> &Tensor {
        &self.tensors[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.tensors[id.0]
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.names[id.0]
    }

    pub fn find(&self, name: &str) -> Option<ParamId> {
        self.names.iter().position(|n| n == name).map(ParamId)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.names.iter().map(String::as_str).zip(&self.tensors)
    }

    pub fn tensors(&self) -> &[Tensor] {
        &self.tensors
    }

    pub fn tensors_mut(&mut self) -> &mut [Tensor] {
        &mut self.tensors
    }

    pub fn num_values(&self) -> usize {
        self.tensors.iter().map(Tensor::len).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors.iter().all(Tensor::is_finite)
    }

    /// Registers every parameter as a graph leaf.
    pub fn bind(&self, g: &mut Graph) -> Bound {
        Bound(self.tensors.iter().map(|t| g.leaf(t.clone())).collect())
    }

    /// Replaces values by name; every name must exist with the same shape.
    pub fn load_from(&mut self, entries: &[(String, Tensor)]) -> Result<()> {
        if entries.len() != self.len() {
            return Err(Error::data(format!(
                "checkpoint has {} tensors, model expects {}",
                entries.len(),
                self.len()
            )));
        }
        for (name, t) in entries {
            let id = self
                .find(name)
                .ok_or_else(|| Error::data(format!("unexpected tensor `{name}` in checkpoint")))?;
            if self.get(id).shape() != t.shape() {
                return Err(Error::data(format!(
                    "tensor `{name}` has shape {:?}, model expects {:?}",
                    t.shape(),
                    self.get(id).shape()
                )));
            }
            *self.get_mut(id) = t.clone();
        }
        Ok(())
    }
}

/// Graph variables for a bound parameter set, indexed by [`ParamId`].
#[derive(Debug, Clone)]
pub struct Bound(Vec<Var>);

impl Bound {
    pub fn var(&self, id: ParamId) -> Var {
        self.0[id.0]
    }

    /// Collects parameter gradients in registration order.
    pub fn gradients(&self, params: &ParamSet, grads: &Gradients) -> Vec<Tensor> {
        self.0
            .iter()
            .zip(params.tensors())
            .map(|(v, t)| grads.get_or_zeros(*v, t.shape()))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Activation {
    Identity,
    Relu,
}

#[derive(Debug, Clone)]
pub struct Dense {
    pub w: ParamId,
    pub b: ParamId,
    pub in_dim: usize,
    pub out_dim: usize,
}

impl Dense {
    pub fn new(params: &mut ParamSet, name: &str, in_dim: usize, out_dim: usize, rng: &mut SeededRng) -> Self {
        let w = params.add_uniform(format!("{name}.weight"), &[out_dim, in_dim], in_dim, rng);
        let b = params.add_uniform(format!("{name}.bias"), &[out_dim], in_dim, rng);
        Dense { w, b, in_dim, out_dim }
    }

    /// Works on a single vector or an [n, in] batch.
    pub fn forward(&self, g: &mut Graph, p: &Bound, x: Var) -> Result<Var> {
        g.linear(x, p.var(self.w), Some(p.var(self.b)))
    }
}

/// Dense layers with an activation between each pair and none at the end.
#[derive(Debug, Clone)]
pub struct Mlp {
    pub layers: Vec<Dense>,
    pub hidden_activation: Activation,
}

impl Mlp {
    pub fn new(params: &mut ParamSet, name: &str, widths: &[usize], rng: &mut SeededRng) -> Self {
        let layers = widths
            .windows(2)
            .enumerate()
            .map(|(i, w)| Dense::new(params, &format!("{name}.{i}"), w[0], w[1], rng))
            .collect();
        Mlp {
            layers,
            hidden_activation: Activation::Relu,
        }
    }

    pub fn forward(&self, g: &mut Graph, p: &Bound, x: Var) -> Result<Var> {
        let mut h = x;
        for (i, layer) in self.layers.iter().enumerate() {
            h = layer.forward(g, p, h)?;
            if i + 1 < self.layers.len() && self.hidden_activation == Activation::Relu {
                h = g.relu(h);
            }
        }
        Ok(h)
    }
}

#[derive(Debug, Clone)]
pub struct Conv1d {
    pub w: ParamId,
    pub b: ParamId,
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel: usize,
}

impl Conv1d {
    pub fn new(
        params: &mut ParamSet,
        name: &str,
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        rng: &mut SeededRng,
    ) -> Self {
        let fan_in = in_channels * kernel;
        let w = params.add_uniform(
            format!("{name}.weight"),
            &[out_channels, in_channels, kernel],
            fan_in,
            rng,
        );
        let b = params.add_uniform(format!("{name}.bias"), &[out_channels], fan_in, rng);
        Conv1d {
            w,
            b,
            in_channels,
            out_channels,
            kernel,
        }
    }

    /// [channels, length] -> [out_channels, length - kernel + 1].
    pub fn forward(&self, g: &mut Graph, p: &Bound, seq: Var) -> Result<Var> {
        g.conv1d(seq, p.var(self.w), p.var(self.b))
    }
}

/// Single-layer LSTM returning the last hidden state.
///
/// Gate rows of the stacked weights are ordered input, forget, candidate,
/// output.
#[derive(Debug, Clone)]
pub struct Lstm {
    pub w_ih: ParamId,
    pub w_hh: ParamId,
    pub b: ParamId,
    pub input: usize,
    pub hidden: usize,
}

impl Lstm {
    pub fn new(params: &mut ParamSet, name: &str, input: usize, hidden: usize, rng: &mut SeededRng) -> Self {
        let w_ih = params.add_uniform(format!("{name}.w_ih"), &[4 * hidden, input], hidden, rng);
        let w_hh = params.add_uniform(format!("{name}.w_hh"), &[4 * hidden, hidden], hidden, rng);
        let b = params.add_uniform(format!("{name}.bias"), &[4 * hidden], hidden, rng);
        Lstm {
            w_ih,
            w_hh,
            b,
            input,
            hidden,
        }
    }

    /// `seq` is [features, length]; returns h at the final step.
    pub fn forward(&self, g: &mut Graph, p: &Bound, seq: Var) -> Result<Var> {
        let shape = g.value(seq).shape().to_vec();
        let len = match shape.as_slice() {
            [f, l] if *f == self.input => *l,
            s => {
                return Err(Error::contract(format!(
                    "lstm: expected [{}, length] input, got {s:?}",
                    self.input
                )))
            }
        };
        if len == 0 {
            return Err(Error::DegenerateInput("lstm: zero-length sequence".into()));
        }
        let d = self.hidden;
        let mut h = g.leaf(Tensor::zeros(&[d]));
        let mut c = g.leaf(Tensor::zeros(&[d]));
        for t in 0..len {
            let x_t = g.column(seq, t)?;
            let zx = g.linear(x_t, p.var(self.w_ih), Some(p.var(self.b)))?;
            let zh = g.linear(h, p.var(self.w_hh), None)?;
            let z = g.add(zx, zh)?;
            let zi = g.slice(z, 0, d)?;
            let zf = g.slice(z, d, d)?;
            let zg = g.slice(z, 2 * d, d)?;
            let zo = g.slice(z, 3 * d, d)?;
            let i = g.sigmoid(zi);
            let f = g.sigmoid(zf);
            let cand = g.tanh(zg);
            let o = g.sigmoid(zo);
            let keep = g.mul(f, c)?;
            let write = g.mul(i, cand)?;
            c = g.add(keep, write)?;
            let tc = g.tanh(c);
            h = g.mul(o, tc)?;
        }
        Ok(h)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conv2dStage {
    pub out_channels: usize,
    pub kernel: [usize; 2],
    /// `[1, 1]` disables pooling.
    pub pool: [usize; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conv2dSpec {
    pub stages: Vec<Conv2dStage>,
    pub embed_width: usize,
}

impl Conv2dSpec {
    /// Two 3x3 valid stages, channels 1 -> 4 -> 8, 2x2 pooling after each.
    pub fn standard(embed_width: usize) -> Self {
        Conv2dSpec {
            stages: vec![
                Conv2dStage {
                    out_channels: 4,
                    kernel: [3, 3],
                    pool: [2, 2],
                },
                Conv2dStage {
                    out_channels: 8,
                    kernel: [3, 3],
                    pool: [2, 2],
                },
            ],
            embed_width,
        }
    }

    /// Same two-stage shape with a 2x2 second kernel; fits inputs as narrow
    /// as 8 columns.
    pub fn compact(embed_width: usize) -> Self {
        let mut spec = Self::standard(embed_width);
        spec.stages[1].kernel = [2, 2];
        spec
    }

    /// One 2x2 stage with 2x2 pooling, for very small inputs.
    pub fn minimal(embed_width: usize) -> Self {
        Conv2dSpec {
            stages: vec![Conv2dStage {
                out_channels: 2,
                kernel: [2, 2],
                pool: [2, 2],
            }],
            embed_width,
        }
    }

    /// First of standard, compact, minimal that fits an `h x w` input.
    pub fn fitting(h: usize, w: usize, embed_width: usize) -> Result<Self> {
        for spec in [
            Self::standard(embed_width),
            Self::compact(embed_width),
            Self::minimal(embed_width),
        ] {
            if spec.output_shape(h, w).is_ok() {
                return Ok(spec);
            }
        }
        Err(Error::config(format!(
            "no default 2D-CNN stack fits a {h}x{w} interaction matrix"
        )))
    }

    /// (channels, height, width) after the last stage.
    pub fn output_shape(&self, h: usize, w: usize) -> Result<(usize, usize, usize)> {
        if self.embed_width == 0 {
            return Err(Error::config("2D-CNN embedding width must be >= 1"));
        }
        let (mut c, mut h, mut w) = (1usize, h, w);
        for (i, s) in self.stages.iter().enumerate() {
            let [kh, kw] = s.kernel;
            let [ph, pw] = s.pool;
            if s.out_channels == 0 || kh == 0 || kw == 0 || ph == 0 || pw == 0 {
                return Err(Error::config(format!("2D-CNN stage {i} has a zero-sized dimension")));
            }
            if h < kh || w < kw {
                return Err(Error::config(format!(
                    "2D-CNN stage {i}: {kh}x{kw} kernel does not fit {h}x{w} input"
                )));
            }
            h = (h - kh + 1) / ph;
            w = (w - kw + 1) / pw;
            if h == 0 || w == 0 {
                return Err(Error::config(format!(
                    "2D-CNN stage {i}: {ph}x{pw} pooling collapses the feature map below 1x1"
                )));
            }
            c = s.out_channels;
        }
        Ok((c, h, w))
    }
}

#[derive(Debug, Clone)]
struct ConvStageParams {
    w: ParamId,
    b: ParamId,
    pool: [usize; 2],
}

/// conv -> ReLU -> max-pool stages, flatten, dense projection.
#[derive(Debug, Clone)]
pub struct Conv2dBlock {
    stages: Vec<ConvStageParams>,
    pub head: Dense,
    pub input_hw: (usize, usize),
    pub spec: Conv2dSpec,
}

impl Conv2dBlock {
    pub fn new(
        params: &mut ParamSet,
        name: &str,
        input_hw: (usize, usize),
        spec: &Conv2dSpec,
        rng: &mut SeededRng,
    ) -> Result<Self> {
        let (c_out, h_out, w_out) = spec.output_shape(input_hw.0, input_hw.1)?;
        let mut in_ch = 1;
        let mut stages = Vec::new();
        for (i, s) in spec.stages.iter().enumerate() {
            let [kh, kw] = s.kernel;
            let fan_in = in_ch * kh * kw;
            let w = params.add_uniform(
                format!("{name}.conv{i}.weight"),
                &[s.out_channels, in_ch, kh, kw],
                fan_in,
                rng,
            );
            let b = params.add_uniform(format!("{name}.conv{i}.bias"), &[s.out_channels], fan_in, rng);
            stages.push(ConvStageParams { w, b, pool: s.pool });
            in_ch = s.out_channels;
        }
        let flat = c_out * h_out * w_out;
        let head = Dense::new(params, &format!("{name}.head"), flat, spec.embed_width, rng);
        Ok(Conv2dBlock {
            stages,
            head,
            input_hw,
            spec: spec.clone(),
        })
    }

    /// `m` is an [h, w] matrix; returns a vector of the embedding width.
    pub fn forward(&self, g: &mut Graph, p: &Bound, m: Var) -> Result<Var> {
        let (h, w) = self.input_hw;
        if g.value(m).shape() != [h, w] {
            return Err(Error::contract(format!(
                "conv2d_block: expected [{h}, {w}] input, got {:?}",
                g.value(m).shape()
            )));
        }
        let mut x = g.reshape(m, &[1, h, w])?;
        for s in &self.stages {
            x = g.conv2d(x, p.var(s.w), p.var(s.b))?;
            x = g.relu(x);
            if s.pool != [1, 1] {
                x = g.max_pool2d(x, s.pool[0], s.pool[1])?;
            }
        }
        let n = g.value(x).len();
        let flat = g.reshape(x, &[n])?;
        self.head.forward(g, p, flat)
    }
}
