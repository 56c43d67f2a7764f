//! Define-by-run reverse-mode differentiation.
//!
//! A [`Graph`] is built fresh for every minibatch: leaves are bound from a
//! parameter set or from data, each operation appends a node holding its
//! forward value, and [`Graph::backward`] walks the nodes in reverse,
//! applying each node's vector-Jacobian product. Losses whose gradients are
//! computed in closed form (the CCA and cosine objectives) enter as seeds:
//! the caller hands `backward` the gradient with respect to the loss inputs.

use crate::error::{Error, Result};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug)]
enum Op {
    Leaf,
    Linear { x: Var, w: Var, b: Option<Var> },
    Add(Var, Var),
    Mul(Var, Var),
    Sigmoid(Var),
    Tanh(Var),
    Relu(Var),
    Slice { x: Var, start: usize },
    Column { x: Var, col: usize },
    Outer(Var, Var),
    Conv1d { x: Var, w: Var, b: Var },
    Conv2d { x: Var, w: Var, b: Var },
    MaxPool2d { x: Var, argmax: Vec<usize> },
    Reshape(Var),
    Concat(Vec<Var>),
    Stack(Vec<Var>),
}

impl Op {
    fn is_outer(&self) -> bool {
        matches!(self, Op::Outer(..))
    }
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    op: Op,
}

#[derive(Debug, Default)]
pub struct Graph {
    nodes: Vec<Node>,
}

/// Gradient accumulators, one slot per node.
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    pub fn get(&self, v: Var) -> Option<&Tensor> {
        self.grads.get(v.0).and_then(|g| g.as_ref())
    }

    /// Gradient of `v`, or zeros of `shape` when nothing flowed into it.
    pub fn get_or_zeros(&self, v: Var, shape: &[usize]) -> Tensor {
        self.get(v).cloned().unwrap_or_else(|| Tensor::zeros(shape))
    }
}

fn mismatch(op: &str, detail: String) -> Error {
    Error::contract(format!("{op}: {detail}"))
}

impl Graph {
    pub fn new() -> Self {
        Graph { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    /// True when any node computes an outer product.
    pub fn has_outer_product(&self) -> bool {
        self.nodes.iter().any(|n| n.op.is_outer())
    }

    fn push(&mut self, value: Tensor, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    pub fn leaf(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf)
    }

    /// `w x + b` for a vector `x` of shape [in] or a batch of shape [n, in];
    /// `w` is [out, in].
    pub fn linear(&mut self, x: Var, w: Var, b: Option<Var>) -> Result<Var> {
        let (xv, wv) = (self.value(x), self.value(w));
        if wv.rank() != 2 {
            return Err(mismatch("linear", format!("weight shape {:?}", wv.shape())));
        }
        let (out_dim, in_dim) = (wv.rows(), wv.cols());
        let batch = match xv.shape() {
            [n] if *n == in_dim => None,
            [rows, n] if *n == in_dim => Some(*rows),
            s => {
                return Err(mismatch(
                    "linear",
                    format!("input shape {s:?} does not match weight {:?}", wv.shape()),
                ))
            }
        };
        let bias = match b {
            Some(b) => {
                let bv = self.value(b);
                if bv.shape() != [out_dim] {
                    return Err(mismatch("linear", format!("bias shape {:?}", bv.shape())));
                }
                Some(bv.data())
            }
            None => None,
        };
        let rows = batch.unwrap_or(1);
        let (xd, wd) = (xv.data(), wv.data());
        let mut out = vec![0.0; rows * out_dim];
        for r in 0..rows {
            let xr = &xd[r * in_dim..(r + 1) * in_dim];
            for o in 0..out_dim {
                let wr = &wd[o * in_dim..(o + 1) * in_dim];
                let mut acc = bias.map_or(0.0, |bd| bd[o]);
                for (a, c) in wr.iter().zip(xr) {
                    acc += a * c;
                }
                out[r * out_dim + o] = acc;
            }
        }
        let value = match batch {
            None => Tensor::vector(out),
            Some(n) => Tensor::matrix(n, out_dim, out),
        };
        Ok(self.push(value, Op::Linear { x, w, b }))
    }

    fn same_shape(&self, op: &str, a: Var, b: Var) -> Result<()> {
        if self.value(a).shape() != self.value(b).shape() {
            return Err(mismatch(
                op,
                format!(
                    "shapes {:?} and {:?} differ",
                    self.value(a).shape(),
                    self.value(b).shape()
                ),
            ));
        }
        Ok(())
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("add", a, b)?;
        let v = self.value(a).add(self.value(b));
        Ok(self.push(v, Op::Add(a, b)))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("mul", a, b)?;
        let v = self.value(a).zip_map(self.value(b), |x, y| x * y);
        Ok(self.push(v, Op::Mul(a, b)))
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let v = self.value(a).map(|x| 1.0 / (1.0 + (-x).exp()));
        self.push(v, Op::Sigmoid(a))
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let v = self.value(a).map(f64::tanh);
        self.push(v, Op::Tanh(a))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let v = self.value(a).map(|x| x.max(0.0));
        self.push(v, Op::Relu(a))
    }

    /// Contiguous range of a vector.
    pub fn slice(&mut self, x: Var, start: usize, len: usize) -> Result<Var> {
        let xv = self.value(x);
        if xv.rank() != 1 || start + len > xv.len() {
            return Err(mismatch(
                "slice",
                format!("range {start}..{} out of {:?}", start + len, xv.shape()),
            ));
        }
        let v = Tensor::vector(xv.data()[start..start + len].to_vec());
        Ok(self.push(v, Op::Slice { x, start }))
    }

    /// Column `col` of a matrix, as a vector.
    pub fn column(&mut self, x: Var, col: usize) -> Result<Var> {
        let xv = self.value(x);
        if xv.rank() != 2 || col >= xv.cols() {
            return Err(mismatch("column", format!("column {col} of {:?}", xv.shape())));
        }
        let v = Tensor::vector(xv.col(col));
        Ok(self.push(v, Op::Column { x, col }))
    }

    /// a ⊗ b for vectors: an [len(a), len(b)] matrix.
    pub fn outer(&mut self, a: Var, b: Var) -> Result<Var> {
        let (av, bv) = (self.value(a), self.value(b));
        if av.rank() != 1 || bv.rank() != 1 {
            return Err(mismatch(
                "outer",
                format!("expected vectors, got {:?} and {:?}", av.shape(), bv.shape()),
            ));
        }
        let mut out = Vec::with_capacity(av.len() * bv.len());
        for x in av.data() {
            for y in bv.data() {
                out.push(x * y);
            }
        }
        let v = Tensor::matrix(av.len(), bv.len(), out);
        Ok(self.push(v, Op::Outer(a, b)))
    }

    /// Valid 1D convolution: x [c, l], w [c', c, k], b [c'] -> [c', l - k + 1].
    pub fn conv1d(&mut self, x: Var, w: Var, b: Var) -> Result<Var> {
        let (xv, wv, bv) = (self.value(x), self.value(w), self.value(b));
        let (c, l) = match xv.shape() {
            [c, l] => (*c, *l),
            s => return Err(mismatch("conv1d", format!("input shape {s:?}"))),
        };
        let (co, ci, k) = match wv.shape() {
            [co, ci, k] => (*co, *ci, *k),
            s => return Err(mismatch("conv1d", format!("kernel shape {s:?}"))),
        };
        if ci != c || bv.shape() != [co] {
            return Err(mismatch(
                "conv1d",
                format!("input {:?} vs kernel {:?}", xv.shape(), wv.shape()),
            ));
        }
        if l < k {
            return Err(Error::DegenerateInput(format!(
                "conv1d: sequence length {l} is shorter than kernel {k}"
            )));
        }
        let lo = l - k + 1;
        let (xd, wd, bd) = (xv.data(), wv.data(), bv.data());
        let mut out = vec![0.0; co * lo];
        for o in 0..co {
            for t in 0..lo {
                let mut acc = bd[o];
                for ch in 0..c {
                    let wrow = &wd[(o * c + ch) * k..(o * c + ch + 1) * k];
                    let xrow = &xd[ch * l + t..ch * l + t + k];
                    for (a, bb) in wrow.iter().zip(xrow) {
                        acc += a * bb;
                    }
                }
                out[o * lo + t] = acc;
            }
        }
        Ok(self.push(Tensor::matrix(co, lo, out), Op::Conv1d { x, w, b }))
    }

    /// Valid 2D convolution: x [ci, h, w], kernel [co, ci, kh, kw], b [co].
    pub fn conv2d(&mut self, x: Var, w: Var, b: Var) -> Result<Var> {
        let (xv, wv, bv) = (self.value(x), self.value(w), self.value(b));
        let (ci, h, wd_) = match xv.shape() {
            [c, h, w] => (*c, *h, *w),
            s => return Err(mismatch("conv2d", format!("input shape {s:?}"))),
        };
        let (co, ci2, kh, kw) = match wv.shape() {
            [a, b, c, d] => (*a, *b, *c, *d),
            s => return Err(mismatch("conv2d", format!("kernel shape {s:?}"))),
        };
        if ci != ci2 || bv.shape() != [co] || h < kh || wd_ < kw {
            return Err(mismatch(
                "conv2d",
                format!("input {:?} vs kernel {:?}", xv.shape(), wv.shape()),
            ));
        }
        let (ho, wo) = (h - kh + 1, wd_ - kw + 1);
        let (xd, kd, bd) = (xv.data(), wv.data(), bv.data());
        let mut out = vec![0.0; co * ho * wo];
        for o in 0..co {
            let out_plane = &mut out[o * ho * wo..(o + 1) * ho * wo];
            out_plane.iter_mut().for_each(|v| *v = bd[o]);
            for c in 0..ci {
                let plane = &xd[c * h * wd_..(c + 1) * h * wd_];
                let kern = &kd[(o * ci + c) * kh * kw..(o * ci + c + 1) * kh * kw];
                for i in 0..kh {
                    for j in 0..kw {
                        let kv = kern[i * kw + j];
                        for r in 0..ho {
                            let src = &plane[(r + i) * wd_ + j..(r + i) * wd_ + j + wo];
                            let dst = &mut out_plane[r * wo..(r + 1) * wo];
                            for (d, s) in dst.iter_mut().zip(src) {
                                *d += kv * s;
                            }
                        }
                    }
                }
            }
        }
        let v = Tensor::new(vec![co, ho, wo], out)?;
        Ok(self.push(v, Op::Conv2d { x, w, b }))
    }

    /// Non-overlapping max pooling over [c, h, w]; trailing rows/cols that do
    /// not fill a window are dropped.
    pub fn max_pool2d(&mut self, x: Var, ph: usize, pw: usize) -> Result<Var> {
        let xv = self.value(x);
        let (c, h, w) = match xv.shape() {
            [c, h, w] => (*c, *h, *w),
            s => return Err(mismatch("max_pool2d", format!("input shape {s:?}"))),
        };
        if ph == 0 || pw == 0 || h < ph || w < pw {
            return Err(mismatch(
                "max_pool2d",
                format!("window {ph}x{pw} does not fit {h}x{w}"),
            ));
        }
        let (ho, wo) = (h / ph, w / pw);
        let xd = xv.data();
        let mut out = vec![0.0; c * ho * wo];
        let mut argmax = vec![0usize; c * ho * wo];
        for ch in 0..c {
            for r in 0..ho {
                for q in 0..wo {
                    let mut best = f64::NEG_INFINITY;
                    let mut best_idx = 0;
                    for i in 0..ph {
                        for j in 0..pw {
                            let idx = ch * h * w + (r * ph + i) * w + q * pw + j;
                            if xd[idx] > best {
                                best = xd[idx];
                                best_idx = idx;
                            }
                        }
                    }
                    let o = ch * ho * wo + r * wo + q;
                    out[o] = best;
                    argmax[o] = best_idx;
                }
            }
        }
        let v = Tensor::new(vec![c, ho, wo], out)?;
        Ok(self.push(v, Op::MaxPool2d { x, argmax }))
    }

    pub fn reshape(&mut self, x: Var, shape: &[usize]) -> Result<Var> {
        let v = self.value(x).reshape(shape)?;
        Ok(self.push(v, Op::Reshape(x)))
    }

    /// Concatenates vectors end to end.
    pub fn concat(&mut self, parts: &[Var]) -> Result<Var> {
        let mut out = Vec::new();
        for p in parts {
            let pv = self.value(*p);
            if pv.rank() != 1 {
                return Err(mismatch("concat", format!("expected vectors, got {:?}", pv.shape())));
            }
            out.extend_from_slice(pv.data());
        }
        Ok(self.push(Tensor::vector(out), Op::Concat(parts.to_vec())))
    }

    /// Stacks equal-length vectors into the rows of a matrix.
    pub fn stack(&mut self, rows: &[Var]) -> Result<Var> {
        let d = rows.first().map_or(0, |r| self.value(*r).len());
        let mut out = Vec::with_capacity(rows.len() * d);
        for r in rows {
            let rv = self.value(*r);
            if rv.rank() != 1 || rv.len() != d {
                return Err(mismatch("stack", format!("row shape {:?}, expected [{d}]", rv.shape())));
            }
            out.extend_from_slice(rv.data());
        }
        Ok(self.push(Tensor::matrix(rows.len(), d, out), Op::Stack(rows.to_vec())))
    }

    /// Reverse sweep seeded with the given output gradients.
    pub fn backward(&self, seeds: &[(Var, Tensor)]) -> Result<Gradients> {
        let mut grads: Vec<Option<Tensor>> = vec![None; self.nodes.len()];
        let mut top = 0;
        for (v, g) in seeds {
            if g.shape() != self.value(*v).shape() {
                return Err(mismatch(
                    "backward",
                    format!("seed shape {:?} for node of shape {:?}", g.shape(), self.value(*v).shape()),
                ));
            }
            accumulate(&mut grads, *v, g.clone());
            top = top.max(v.0 + 1);
        }
        for idx in (0..top).rev() {
            let Some(gy) = grads[idx].take() else {
                continue;
            };
            self.propagate(idx, &gy, &mut grads);
            grads[idx] = Some(gy);
        }
        Ok(Gradients { grads })
    }

    fn propagate(&self, idx: usize, gy: &Tensor, grads: &mut [Option<Tensor>]) {
        let node = &self.nodes[idx];
        let y = &node.value;
        match &node.op {
            Op::Leaf => {}
            Op::Linear { x, w, b } => {
                let (xv, wv) = (self.value(*x), self.value(*w));
                let (out_dim, in_dim) = (wv.rows(), wv.cols());
                let rows = if xv.rank() == 1 { 1 } else { xv.rows() };
                let (xd, wd, gd) = (xv.data(), wv.data(), gy.data());
                let mut gx = vec![0.0; rows * in_dim];
                let mut gw = vec![0.0; out_dim * in_dim];
                let mut gb = vec![0.0; out_dim];
                for r in 0..rows {
                    let xr = &xd[r * in_dim..(r + 1) * in_dim];
                    let gxr = &mut gx[r * in_dim..(r + 1) * in_dim];
                    for o in 0..out_dim {
                        let g = gd[r * out_dim + o];
                        if g == 0.0 {
                            continue;
                        }
                        gb[o] += g;
                        let wr = &wd[o * in_dim..(o + 1) * in_dim];
                        let gwr = &mut gw[o * in_dim..(o + 1) * in_dim];
                        for i in 0..in_dim {
                            gxr[i] += g * wr[i];
                            gwr[i] += g * xr[i];
                        }
                    }
                }
                accumulate(grads, *x, Tensor::new(xv.shape().to_vec(), gx).expect("shape"));
                accumulate(grads, *w, Tensor::matrix(out_dim, in_dim, gw));
                if let Some(b) = b {
                    accumulate(grads, *b, Tensor::vector(gb));
                }
            }
            Op::Add(a, b) => {
                accumulate(grads, *a, gy.clone());
                accumulate(grads, *b, gy.clone());
            }
            Op::Mul(a, b) => {
                let (av, bv) = (self.value(*a), self.value(*b));
                accumulate(grads, *a, gy.zip_map(bv, |g, v| g * v));
                accumulate(grads, *b, gy.zip_map(av, |g, v| g * v));
            }
            Op::Sigmoid(a) => accumulate(grads, *a, gy.zip_map(y, |g, s| g * s * (1.0 - s))),
            Op::Tanh(a) => accumulate(grads, *a, gy.zip_map(y, |g, t| g * (1.0 - t * t))),
            Op::Relu(a) => {
                let av = self.value(*a);
                accumulate(grads, *a, gy.zip_map(av, |g, v| if v > 0.0 { g } else { 0.0 }));
            }
            Op::Slice { x, start } => {
                let mut g = Tensor::zeros(self.value(*x).shape());
                g.data_mut()[*start..*start + gy.len()].copy_from_slice(gy.data());
                accumulate(grads, *x, g);
            }
            Op::Column { x, col } => {
                let mut g = Tensor::zeros(self.value(*x).shape());
                for (i, v) in gy.data().iter().enumerate() {
                    g.set(i, *col, *v);
                }
                accumulate(grads, *x, g);
            }
            Op::Outer(a, b) => {
                let (av, bv) = (self.value(*a), self.value(*b));
                let (n, m) = (av.len(), bv.len());
                let mut ga = vec![0.0; n];
                let mut gb = vec![0.0; m];
                let gd = gy.data();
                for i in 0..n {
                    for j in 0..m {
                        let g = gd[i * m + j];
                        ga[i] += g * bv.data()[j];
                        gb[j] += g * av.data()[i];
                    }
                }
                accumulate(grads, *a, Tensor::vector(ga));
                accumulate(grads, *b, Tensor::vector(gb));
            }
            Op::Conv1d { x, w, b } => {
                let (xv, wv) = (self.value(*x), self.value(*w));
                let (c, l) = (xv.rows(), xv.cols());
                let (co, k) = (wv.shape()[0], wv.shape()[2]);
                let lo = l - k + 1;
                let (xd, wd, gd) = (xv.data(), wv.data(), gy.data());
                let mut gx = vec![0.0; c * l];
                let mut gw = vec![0.0; co * c * k];
                let mut gb = vec![0.0; co];
                for o in 0..co {
                    for t in 0..lo {
                        let g = gd[o * lo + t];
                        gb[o] += g;
                        for ch in 0..c {
                            for j in 0..k {
                                let wi = (o * c + ch) * k + j;
                                let xi = ch * l + t + j;
                                gw[wi] += g * xd[xi];
                                gx[xi] += g * wd[wi];
                            }
                        }
                    }
                }
                accumulate(grads, *x, Tensor::matrix(c, l, gx));
                accumulate(grads, *w, Tensor::new(wv.shape().to_vec(), gw).expect("shape"));
                accumulate(grads, *b, Tensor::vector(gb));
            }
            Op::Conv2d { x, w, b } => {
                let (xv, wv) = (self.value(*x), self.value(*w));
                let (ci, h, wd_) = (xv.shape()[0], xv.shape()[1], xv.shape()[2]);
                let (co, kh, kw) = (wv.shape()[0], wv.shape()[2], wv.shape()[3]);
                let (ho, wo) = (h - kh + 1, wd_ - kw + 1);
                let (xd, kd, gd) = (xv.data(), wv.data(), gy.data());
                let mut gx = vec![0.0; xd.len()];
                let mut gk = vec![0.0; kd.len()];
                let mut gb = vec![0.0; co];
                for o in 0..co {
                    let gplane = &gd[o * ho * wo..(o + 1) * ho * wo];
                    gb[o] = gplane.iter().sum();
                    for c in 0..ci {
                        let base = c * h * wd_;
                        let kbase = (o * ci + c) * kh * kw;
                        for i in 0..kh {
                            for j in 0..kw {
                                let kv = kd[kbase + i * kw + j];
                                let mut acc = 0.0;
                                for r in 0..ho {
                                    let row = base + (r + i) * wd_ + j;
                                    let grow = &gplane[r * wo..(r + 1) * wo];
                                    for q in 0..wo {
                                        acc += grow[q] * xd[row + q];
                                        gx[row + q] += grow[q] * kv;
                                    }
                                }
                                gk[kbase + i * kw + j] += acc;
                            }
                        }
                    }
                }
                accumulate(grads, *x, Tensor::new(xv.shape().to_vec(), gx).expect("shape"));
                accumulate(grads, *w, Tensor::new(wv.shape().to_vec(), gk).expect("shape"));
                accumulate(grads, *b, Tensor::vector(gb));
            }
            Op::MaxPool2d { x, argmax } => {
                let mut g = Tensor::zeros(self.value(*x).shape());
                for (o, src) in argmax.iter().enumerate() {
                    g.data_mut()[*src] += gy.data()[o];
                }
                accumulate(grads, *x, g);
            }
            Op::Reshape(x) => {
                let g = gy.reshape(self.value(*x).shape()).expect("reshape back");
                accumulate(grads, *x, g);
            }
            Op::Concat(parts) => {
                let mut offset = 0;
                for p in parts {
                    let n = self.value(*p).len();
                    accumulate(grads, *p, Tensor::vector(gy.data()[offset..offset + n].to_vec()));
                    offset += n;
                }
            }
            Op::Stack(rows) => {
                for (i, r) in rows.iter().enumerate() {
                    accumulate(grads, *r, Tensor::vector(gy.row(i).to_vec()));
                }
            }
        }
    }
}

fn accumulate(grads: &mut [Option<Tensor>], v: Var, g: Tensor) {
    match &mut grads[v.0] {
        Some(acc) => acc.add_assign(&g),
        slot @ None => *slot = Some(g),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_identity_and_scalar() {
        let mut g = Graph::new();
        let x = g.leaf(Tensor::vector(vec![1.0, -2.0]));
        let w = g.leaf(Tensor::eye(2));
        let b = g.leaf(Tensor::vector(vec![0.0, 0.0]));
        let y = g.linear(x, w, Some(b)).unwrap();
        assert_eq!(g.value(y).data(), &[1.0, -2.0]);

        let x = g.leaf(Tensor::vector(vec![3.0]));
        let w = g.leaf(Tensor::matrix(1, 1, vec![2.0]));
        let b = g.leaf(Tensor::vector(vec![1.0]));
        let y = g.linear(x, w, Some(b)).unwrap();
        assert_eq!(g.value(y).data(), &[7.0]);
    }

    #[test]
    fn linear_shape_mismatch_is_contract_error() {
        let mut g = Graph::new();
        let x = g.leaf(Tensor::vector(vec![1.0, 2.0, 3.0]));
        let w = g.leaf(Tensor::eye(2));
        assert!(matches!(g.linear(x, w, None), Err(Error::Contract(_))));
    }

    #[test]
    fn conv1d_averaging_kernel() {
        let mut g = Graph::new();
        let x = g.leaf(Tensor::matrix(1, 4, vec![0.0, 3.0, 6.0, 9.0]));
        let w = g.leaf(Tensor::new(vec![1, 1, 3], vec![1.0 / 3.0; 3]).unwrap());
        let b = g.leaf(Tensor::vector(vec![0.0]));
        let y = g.conv1d(x, w, b).unwrap();
        let out = g.value(y).data();
        assert!((out[0] - 3.0).abs() < 1e-12 && (out[1] - 6.0).abs() < 1e-12);
    }

    #[test]
    fn conv1d_rejects_short_sequence() {
        let mut g = Graph::new();
        let x = g.leaf(Tensor::matrix(1, 2, vec![0.0, 1.0]));
        let w = g.leaf(Tensor::zeros(&[1, 1, 3]));
        let b = g.leaf(Tensor::zeros(&[1]));
        assert!(matches!(g.conv1d(x, w, b), Err(Error::DegenerateInput(_))));
    }

    #[test]
    fn max_pool_picks_window_max() {
        let mut g = Graph::new();
        let x = g.leaf(Tensor::new(vec![1, 2, 2], vec![1.0, 2.0, 4.0, 3.0]).unwrap());
        let y = g.max_pool2d(x, 2, 2).unwrap();
        assert_eq!(g.value(y).data(), &[4.0]);
        let grads = g.backward(&[(y, Tensor::new(vec![1, 1, 1], vec![1.0]).unwrap())]).unwrap();
        assert_eq!(grads.get(x).unwrap().data(), &[0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn outer_product_gradient() {
        let mut g = Graph::new();
        let a = g.leaf(Tensor::vector(vec![1.0, 2.0]));
        let b = g.leaf(Tensor::vector(vec![3.0, 4.0, 5.0]));
        let o = g.outer(a, b).unwrap();
        assert_eq!(g.value(o).data(), &[3.0, 4.0, 5.0, 6.0, 8.0, 10.0]);
        let grads = g.backward(&[(o, Tensor::filled(&[2, 3], 1.0))]).unwrap();
        assert_eq!(grads.get(a).unwrap().data(), &[12.0, 12.0]);
        assert_eq!(grads.get(b).unwrap().data(), &[3.0, 3.0, 3.0]);
        assert!(g.has_outer_product());
    }

    #[test]
    fn shared_leaf_accumulates() {
        let mut g = Graph::new();
        let x = g.leaf(Tensor::vector(vec![3.0]));
        let y = g.mul(x, x).unwrap();
        let grads = g.backward(&[(y, Tensor::vector(vec![1.0]))]).unwrap();
        assert_eq!(grads.get(x).unwrap().data(), &[6.0]);
    }
}
