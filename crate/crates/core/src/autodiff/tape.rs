//! Reverse-mode differentiation tape.
//!
//! Every operation appends one node whose inputs are earlier nodes, so the
//! node vector is already in topological order. `backward` walks it once in
//! reverse.

use super::kernels::{self, ConvGeom, Padding};
use super::{ParamId, ParamStore, Tensor};
use crate::error::{Error, Result};

/// Handle to a node on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Elementwise {
    Add,
    Sub,
    Mul,
    Sigmoid,
    Tanh,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BnMode {
    Train,
    Infer,
}

/// Per-channel running statistics for batch normalization.
#[derive(Clone, Debug, PartialEq)]
pub struct BatchNormStats {
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
    pub momentum: f64,
    pub eps: f64,
}

impl BatchNormStats {
    pub const EPS: f64 = 1e-5;
    pub const MOMENTUM: f64 = 0.1;

    pub fn new(channels: usize) -> Self {
        Self {
            mean: vec![0.0; channels],
            var: vec![1.0; channels],
            momentum: Self::MOMENTUM,
            eps: Self::EPS,
        }
    }
}

enum Op {
    Leaf,
    Param(ParamId),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    Sigmoid(Var),
    Tanh(Var),
    Conv2d {
        input: Var,
        kernel: Var,
        bias: Option<Var>,
        padded: Vec<f64>,
        pad: usize,
        wrap: bool,
    },
    Concat(Vec<Var>),
    Narrow {
        input: Var,
        start: usize,
    },
    Reshape(Var),
    MatMul {
        a: Var,
        b: Var,
        ta: bool,
        tb: bool,
        m: usize,
        k: usize,
        n: usize,
    },
    Softmax {
        input: Var,
        outer: usize,
        axis_len: usize,
        inner: usize,
    },
    BatchNormTrain {
        input: Var,
        gamma: Var,
        beta: Var,
        xhat: Vec<f64>,
        inv_std: Vec<f64>,
        outer: usize,
        inner: usize,
    },
    BatchNormInfer {
        input: Var,
        gamma: Var,
        beta: Var,
        xhat: Vec<f64>,
        inv_std: Vec<f64>,
        outer: usize,
        inner: usize,
    },
    Sum(Var),
    Mean(Var),
    Mse(Var, Var),
}

impl Op {
    fn inputs(&self) -> Vec<Var> {
        match self {
            Op::Leaf | Op::Param(_) => vec![],
            Op::Add(a, b) | Op::Sub(a, b) | Op::Mul(a, b) | Op::Mse(a, b) => vec![*a, *b],
            Op::Scale(a, _) | Op::Sigmoid(a) | Op::Tanh(a) | Op::Reshape(a) | Op::Sum(a) | Op::Mean(a) => {
                vec![*a]
            }
            Op::Conv2d {
                input, kernel, bias, ..
            } => {
                let mut v = vec![*input, *kernel];
                v.extend(bias);
                v
            }
            Op::Concat(parts) => parts.clone(),
            Op::Narrow { input, .. } | Op::Softmax { input, .. } => vec![*input],
            Op::MatMul { a, b, .. } => vec![*a, *b],
            Op::BatchNormTrain {
                input, gamma, beta, ..
            }
            | Op::BatchNormInfer {
                input, gamma, beta, ..
            } => vec![*input, *gamma, *beta],
        }
    }
}

struct Node {
    value: Tensor,
    op: Op,
}

/// Records a computation for reverse-mode differentiation.
#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Result of [`Tape::backward`]: one gradient slot per tape node.
pub struct Gradients {
    grads: Vec<Option<Vec<f64>>>,
    shapes: Vec<Vec<usize>>,
    params: Vec<(ParamId, usize)>,
}

impl Gradients {
    /// Gradient wrt a node; `None` when the node does not reach the loss.
    pub fn wrt(&self, v: Var) -> Option<Tensor> {
        self.grads[v.0]
            .as_ref()
            .map(|g| Tensor::new(self.shapes[v.0].clone(), g.clone()).expect("gradient shape"))
    }

    /// Gradient for every parameter in `store`, summed over all leaves that
    /// reference it. Parameters that do not reach the loss get zeros.
    pub fn params(&self, store: &ParamStore) -> Vec<Tensor> {
        let mut out: Vec<Tensor> = store.iter().map(|(_, p)| Tensor::zeros(p.value.shape())).collect();
        for &(id, node) in &self.params {
            if let Some(g) = &self.grads[node] {
                for (o, v) in out[id.0].data_mut().iter_mut().zip(g) {
                    *o += v;
                }
            }
        }
        out
    }
}

fn broadcast_compatible(a: &Tensor, b: &Tensor) -> bool {
    a.shape() == b.shape() || a.len() == 1 || b.len() == 1
}

fn slot<'a>(lo: &'a mut [Option<Vec<f64>>], nodes: &[Node], v: Var) -> &'a mut Vec<f64> {
    let len = nodes[v.0].value.len();
    lo[v.0].get_or_insert_with(|| vec![0.0; len])
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
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

    pub fn shape(&self, v: Var) -> &[usize] {
        self.nodes[v.0].value.shape()
    }

    fn push(&mut self, value: Tensor, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    /// Constant input (no gradient is propagated past it, but it still
    /// receives one).
    pub fn leaf(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf)
    }

    pub fn param(&mut self, store: &ParamStore, id: ParamId) -> Var {
        self.push(store.value(id).clone(), Op::Param(id))
    }

    pub fn elementwise(&mut self, op: Elementwise, a: Var, b: Option<Var>) -> Result<Var> {
        match (op, b) {
            (Elementwise::Add, Some(b)) => self.add(a, b),
            (Elementwise::Sub, Some(b)) => self.sub(a, b),
            (Elementwise::Mul, Some(b)) => self.mul(a, b),
            (Elementwise::Sigmoid, None) => Ok(self.sigmoid(a)),
            (Elementwise::Tanh, None) => Ok(self.tanh(a)),
            (op, _) => Err(Error::contract(format!("wrong operand count for {op:?}"))),
        }
    }

    fn binary(&mut self, a: Var, b: Var, f: impl Fn(f64, f64) -> f64, name: &str) -> Result<Tensor> {
        let (ta, tb) = (self.value(a), self.value(b));
        if !broadcast_compatible(ta, tb) {
            return Err(Error::dim(format!(
                "{name}: shapes {:?} and {:?} differ",
                ta.shape(),
                tb.shape()
            )));
        }
        let shape = if ta.len() >= tb.len() { ta.shape() } else { tb.shape() }.to_vec();
        let n = ta.len().max(tb.len());
        let (da, db) = (ta.data(), tb.data());
        let ia = |i: usize| if da.len() == 1 { da[0] } else { da[i] };
        let ib = |i: usize| if db.len() == 1 { db[0] } else { db[i] };
        let data = (0..n).map(|i| f(ia(i), ib(i))).collect();
        Tensor::new(shape, data)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = self.binary(a, b, |x, y| x + y, "add")?;
        Ok(self.push(out, Op::Add(a, b)))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = self.binary(a, b, |x, y| x - y, "sub")?;
        Ok(self.push(out, Op::Sub(a, b)))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = self.binary(a, b, |x, y| x * y, "mul")?;
        Ok(self.push(out, Op::Mul(a, b)))
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        let v = self.value(a);
        let out = Tensor::new(v.shape().to_vec(), v.data().iter().map(|x| x * c).collect()).expect("shape");
        self.push(out, Op::Scale(a, c))
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let v = self.value(a);
        let out = Tensor::new(v.shape().to_vec(), v.data().iter().map(|&x| kernels::sigmoid(x)).collect())
            .expect("shape");
        self.push(out, Op::Sigmoid(a))
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let v = self.value(a);
        let out = Tensor::new(v.shape().to_vec(), v.data().iter().map(|x| x.tanh()).collect()).expect("shape");
        self.push(out, Op::Tanh(a))
    }

    /// Cross-correlation of `[C_in, H, W]` input with `[C_out, C_in, k, k]`
    /// kernel and optional `[C_out]` bias.
    pub fn conv2d(&mut self, input: Var, kernel: Var, bias: Option<Var>, padding: Padding, wrap: bool) -> Result<Var> {
        let (xs, ks) = (self.shape(input).to_vec(), self.shape(kernel).to_vec());
        if xs.len() != 3 || ks.len() != 4 {
            return Err(Error::dim(format!("conv2d expects [C,H,W] and [O,C,k,k], got {xs:?} and {ks:?}")));
        }
        if ks[1] != xs[0] || ks[2] != ks[3] {
            return Err(Error::dim(format!("conv2d kernel {ks:?} does not fit input {xs:?}")));
        }
        let k = ks[2];
        let pad = match padding {
            Padding::Same if k % 2 == 0 => {
                return Err(Error::config(format!("same padding needs an odd kernel, got {k}")))
            }
            Padding::Same => k / 2,
            Padding::Valid => 0,
        };
        if padding == Padding::Valid && (xs[1] < k || xs[2] < k) {
            return Err(Error::dim(format!("valid conv kernel {k} larger than input {xs:?}")));
        }
        if let Some(b) = bias {
            if self.shape(b) != [ks[0]] {
                return Err(Error::dim(format!("conv2d bias {:?} for {} outputs", self.shape(b), ks[0])));
            }
        }
        let geom = ConvGeom {
            cin: xs[0],
            cout: ks[0],
            h: xs[1],
            w: xs[2],
            k,
            pad,
            wrap: wrap && padding == Padding::Same,
        };
        let padded = kernels::pad_input(self.value(input).data(), &geom);
        let out = kernels::conv2d_forward(
            &padded,
            self.value(kernel).data(),
            bias.map(|b| self.value(b).data()),
            &geom,
        );
        let value = Tensor::new(vec![geom.cout, geom.ho(), geom.wo()], out)?;
        Ok(self.push(
            value,
            Op::Conv2d {
                input,
                kernel,
                bias,
                padded,
                pad,
                wrap: geom.wrap,
            },
        ))
    }

    /// Concatenates along axis 0; trailing dimensions must agree.
    pub fn concat(&mut self, parts: &[Var]) -> Result<Var> {
        let first = parts.first().ok_or_else(|| Error::dim("concat of nothing"))?;
        let tail = self.shape(*first)[1..].to_vec();
        let mut lead = 0;
        let mut data = Vec::new();
        for &p in parts {
            let s = self.shape(p);
            if s[1..] != tail[..] {
                return Err(Error::dim(format!("concat: {s:?} incompatible with trailing {tail:?}")));
            }
            lead += s[0];
            data.extend_from_slice(self.value(p).data());
        }
        let mut shape = vec![lead];
        shape.extend(tail);
        let value = Tensor::new(shape, data)?;
        Ok(self.push(value, Op::Concat(parts.to_vec())))
    }

    /// Rows `start..start + len` along axis 0.
    pub fn narrow(&mut self, input: Var, start: usize, len: usize) -> Result<Var> {
        let s = self.shape(input).to_vec();
        if len == 0 || start + len > s[0] {
            return Err(Error::dim(format!("narrow {start}+{len} out of range for {s:?}")));
        }
        let inner: usize = s[1..].iter().product();
        let data = self.value(input).data()[start * inner..(start + len) * inner].to_vec();
        let mut shape = s;
        shape[0] = len;
        let value = Tensor::new(shape, data)?;
        Ok(self.push(value, Op::Narrow { input, start }))
    }

    pub fn reshape(&mut self, input: Var, shape: &[usize]) -> Result<Var> {
        let value = self.value(input).clone().reshape(shape)?;
        Ok(self.push(value, Op::Reshape(input)))
    }

    /// Matrix product `op(a) · op(b)` of rank-2 tensors.
    pub fn matmul(&mut self, a: Var, b: Var, ta: bool, tb: bool) -> Result<Var> {
        let (sa, sb) = (self.shape(a).to_vec(), self.shape(b).to_vec());
        if sa.len() != 2 || sb.len() != 2 {
            return Err(Error::dim(format!("matmul expects matrices, got {sa:?} and {sb:?}")));
        }
        let (m, k) = if ta { (sa[1], sa[0]) } else { (sa[0], sa[1]) };
        let (k2, n) = if tb { (sb[1], sb[0]) } else { (sb[0], sb[1]) };
        if k != k2 {
            return Err(Error::dim(format!("matmul inner dims {k} and {k2} differ")));
        }
        let out = kernels::gemm(self.value(a).data(), ta, self.value(b).data(), tb, m, k, n);
        let value = Tensor::new(vec![m, n], out)?;
        Ok(self.push(value, Op::MatMul { a, b, ta, tb, m, k, n }))
    }

    /// Max-subtracted softmax along `axis`.
    pub fn softmax(&mut self, input: Var, axis: usize) -> Result<Var> {
        let s = self.shape(input).to_vec();
        if axis >= s.len() {
            return Err(Error::dim(format!("softmax axis {axis} out of range for {s:?}")));
        }
        let outer: usize = s[..axis].iter().product();
        let axis_len = s[axis];
        let inner: usize = s[axis + 1..].iter().product();
        let x = self.value(input).data();
        let mut y = vec![0.0; x.len()];
        for o in 0..outer {
            for i in 0..inner {
                let at = |j: usize| o * axis_len * inner + j * inner + i;
                let max = (0..axis_len).map(|j| x[at(j)]).fold(f64::NEG_INFINITY, f64::max);
                let mut sum = 0.0;
                for j in 0..axis_len {
                    let e = (x[at(j)] - max).exp();
                    y[at(j)] = e;
                    sum += e;
                }
                for j in 0..axis_len {
                    y[at(j)] /= sum;
                }
            }
        }
        let value = Tensor::new(s, y)?;
        Ok(self.push(
            value,
            Op::Softmax {
                input,
                outer,
                axis_len,
                inner,
            },
        ))
    }

    /// Batch normalization over `[C,H,W]` or `[N,C,H,W]` with per-channel
    /// `[C]` affine parameters.
    ///
    /// Train mode normalizes with the statistics of `input` itself and
    /// folds them into `stats`; infer mode reads `stats` only.
    pub fn batchnorm(
        &mut self,
        input: Var,
        gamma: Var,
        beta: Var,
        stats: &mut BatchNormStats,
        mode: BnMode,
    ) -> Result<Var> {
        let s = self.shape(input).to_vec();
        let (outer, c, inner) = match s.len() {
            3 => (1, s[0], s[1] * s[2]),
            4 => (s[0], s[1], s[2] * s[3]),
            _ => return Err(Error::dim(format!("batchnorm expects rank 3 or 4, got {s:?}"))),
        };
        if c == 0 || inner == 0 {
            return Err(Error::dim("batchnorm over an empty channel"));
        }
        if self.shape(gamma) != [c] || self.shape(beta) != [c] || stats.mean.len() != c {
            return Err(Error::dim(format!("batchnorm affine/stats do not match {c} channels")));
        }
        let x = self.value(input).data();
        let n = (outer * inner) as f64;
        let mut inv_std = vec![0.0; c];
        let mut xhat = vec![0.0; x.len()];
        for ch in 0..c {
            let idx = |o: usize, i: usize| (o * c + ch) * inner + i;
            let (mean, var) = match mode {
                BnMode::Train => {
                    let mut sum = 0.0;
                    for o in 0..outer {
                        for i in 0..inner {
                            sum += x[idx(o, i)];
                        }
                    }
                    let mean = sum / n;
                    let mut sq = 0.0;
                    for o in 0..outer {
                        for i in 0..inner {
                            let d = x[idx(o, i)] - mean;
                            sq += d * d;
                        }
                    }
                    let var = sq / n;
                    let unbiased = if n > 1.0 { sq / (n - 1.0) } else { var };
                    stats.mean[ch] = (1.0 - stats.momentum) * stats.mean[ch] + stats.momentum * mean;
                    stats.var[ch] = (1.0 - stats.momentum) * stats.var[ch] + stats.momentum * unbiased;
                    (mean, var)
                }
                BnMode::Infer => (stats.mean[ch], stats.var[ch]),
            };
            let is = 1.0 / (var + stats.eps).sqrt();
            inv_std[ch] = is;
            for o in 0..outer {
                for i in 0..inner {
                    xhat[idx(o, i)] = (x[idx(o, i)] - mean) * is;
                }
            }
        }
        let (g, b) = (self.value(gamma).data(), self.value(beta).data());
        let mut y = vec![0.0; x.len()];
        for o in 0..outer {
            for ch in 0..c {
                let base = (o * c + ch) * inner;
                for i in 0..inner {
                    y[base + i] = g[ch] * xhat[base + i] + b[ch];
                }
            }
        }
        let value = Tensor::new(s, y)?;
        let op = match mode {
            BnMode::Train => Op::BatchNormTrain {
                input,
                gamma,
                beta,
                xhat,
                inv_std,
                outer,
                inner,
            },
            BnMode::Infer => Op::BatchNormInfer {
                input,
                gamma,
                beta,
                xhat,
                inv_std,
                outer,
                inner,
            },
        };
        Ok(self.push(value, op))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let s = self.value(a).data().iter().sum();
        self.push(Tensor::scalar(s), Op::Sum(a))
    }

    pub fn mean(&mut self, a: Var) -> Var {
        let v = self.value(a);
        let m = v.data().iter().sum::<f64>() / v.len() as f64;
        self.push(Tensor::scalar(m), Op::Mean(a))
    }

    /// Mean of squared differences over all elements.
    pub fn mse(&mut self, pred: Var, target: Var) -> Result<Var> {
        let (p, t) = (self.value(pred), self.value(target));
        if p.shape() != t.shape() {
            return Err(Error::dim(format!("mse: {:?} vs {:?}", p.shape(), t.shape())));
        }
        let m = p
            .data()
            .iter()
            .zip(t.data())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            / p.len() as f64;
        Ok(self.push(Tensor::scalar(m), Op::Mse(pred, target)))
    }

    /// Propagates d(loss)/d(node) to every node reachable from `loss`.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        if self.nodes.is_empty() {
            return Err(Error::contract("backward on an empty tape"));
        }
        if self.value(loss).len() != 1 {
            return Err(Error::contract(format!(
                "loss must be scalar, got shape {:?}",
                self.shape(loss)
            )));
        }
        let n = loss.0 + 1;
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(vec![1.0]);
        for i in (0..n).rev() {
            let node = &self.nodes[i];
            if node.op.inputs().iter().any(|v| v.0 >= i) {
                return Err(Error::Internal(format!("node {i} consumes a later node")));
            }
            let (lo, hi) = grads.split_at_mut(i);
            let Some(g) = hi[0].as_deref() else { continue };
            self.backprop_node(i, g, lo);
        }
        let params = self
            .nodes
            .iter()
            .enumerate()
            .filter_map(|(i, nd)| match nd.op {
                Op::Param(id) => Some((id, i)),
                _ => None,
            })
            .collect();
        Ok(Gradients {
            grads,
            shapes: self.nodes.iter().map(|nd| nd.value.shape().to_vec()).collect(),
            params,
        })
    }

    fn backprop_node(&self, i: usize, g: &[f64], lo: &mut [Option<Vec<f64>>]) {
        let node = &self.nodes[i];
        let y = node.value.data();
        let val = |v: Var| self.nodes[v.0].value.data();
        // Accumulates `g ⊙ coef` into `v`, reducing when `v` is a broadcast scalar.
        fn acc_bcast(dst: &mut [f64], g: &[f64], coef: impl Fn(usize) -> f64) {
            if dst.len() == g.len() {
                for (k, d) in dst.iter_mut().enumerate() {
                    *d += g[k] * coef(k);
                }
            } else {
                dst[0] += g.iter().enumerate().map(|(k, gv)| gv * coef(k)).sum::<f64>();
            }
        }
        let bc = |d: &[f64], k: usize| if d.len() == 1 { d[0] } else { d[k] };
        match &node.op {
            Op::Leaf | Op::Param(_) => {}
            Op::Add(a, b) => {
                acc_bcast(slot(lo, &self.nodes, *a), g, |_| 1.0);
                acc_bcast(slot(lo, &self.nodes, *b), g, |_| 1.0);
            }
            Op::Sub(a, b) => {
                acc_bcast(slot(lo, &self.nodes, *a), g, |_| 1.0);
                acc_bcast(slot(lo, &self.nodes, *b), g, |_| -1.0);
            }
            Op::Mul(a, b) => {
                let (va, vb) = (val(*a), val(*b));
                acc_bcast(slot(lo, &self.nodes, *a), g, |k| bc(vb, k));
                acc_bcast(slot(lo, &self.nodes, *b), g, |k| bc(va, k));
            }
            Op::Scale(a, c) => acc_bcast(slot(lo, &self.nodes, *a), g, |_| *c),
            Op::Sigmoid(a) => acc_bcast(slot(lo, &self.nodes, *a), g, |k| y[k] * (1.0 - y[k])),
            Op::Tanh(a) => acc_bcast(slot(lo, &self.nodes, *a), g, |k| 1.0 - y[k] * y[k]),
            Op::Conv2d {
                input,
                kernel,
                bias,
                padded,
                pad,
                wrap,
            } => {
                let xs = self.nodes[input.0].value.shape();
                let ks = self.nodes[kernel.0].value.shape();
                let geom = ConvGeom {
                    cin: xs[0],
                    cout: ks[0],
                    h: xs[1],
                    w: xs[2],
                    k: ks[2],
                    pad: *pad,
                    wrap: *wrap,
                };
                let (gpad, gk, gb) = kernels::conv2d_backward(padded, val(*kernel), g, &geom);
                kernels::unpad_grad(&gpad, &geom, slot(lo, &self.nodes, *input));
                for (d, v) in slot(lo, &self.nodes, *kernel).iter_mut().zip(&gk) {
                    *d += v;
                }
                if let Some(b) = bias {
                    for (d, v) in slot(lo, &self.nodes, *b).iter_mut().zip(&gb) {
                        *d += v;
                    }
                }
            }
            Op::Concat(parts) => {
                let mut off = 0;
                for &p in parts {
                    let len = self.nodes[p.0].value.len();
                    for (d, v) in slot(lo, &self.nodes, p).iter_mut().zip(&g[off..off + len]) {
                        *d += v;
                    }
                    off += len;
                }
            }
            Op::Narrow { input, start } => {
                let inner: usize = self.nodes[input.0].value.shape()[1..].iter().product();
                let dst = slot(lo, &self.nodes, *input);
                for (k, v) in g.iter().enumerate() {
                    dst[start * inner + k] += v;
                }
            }
            Op::Reshape(a) => acc_bcast(slot(lo, &self.nodes, *a), g, |_| 1.0),
            Op::MatMul { a, b, ta, tb, m, k, n } => {
                let (va, vb) = (val(*a), val(*b));
                let ga = if *ta {
                    kernels::gemm(vb, *tb, g, true, *k, *n, *m)
                } else {
                    kernels::gemm(g, false, vb, !*tb, *m, *n, *k)
                };
                let gb = if *tb {
                    kernels::gemm(g, true, va, *ta, *n, *m, *k)
                } else {
                    kernels::gemm(va, !*ta, g, false, *k, *m, *n)
                };
                for (d, v) in slot(lo, &self.nodes, *a).iter_mut().zip(&ga) {
                    *d += v;
                }
                for (d, v) in slot(lo, &self.nodes, *b).iter_mut().zip(&gb) {
                    *d += v;
                }
            }
            Op::Softmax {
                input,
                outer,
                axis_len,
                inner,
            } => {
                let dst = slot(lo, &self.nodes, *input);
                for o in 0..*outer {
                    for ii in 0..*inner {
                        let at = |j: usize| o * axis_len * inner + j * inner + ii;
                        let dot: f64 = (0..*axis_len).map(|j| g[at(j)] * y[at(j)]).sum();
                        for j in 0..*axis_len {
                            dst[at(j)] += y[at(j)] * (g[at(j)] - dot);
                        }
                    }
                }
            }
            Op::BatchNormTrain {
                input,
                gamma,
                beta,
                xhat,
                inv_std,
                outer,
                inner,
            } => {
                let c = inv_std.len();
                let gam = val(*gamma);
                let n = (outer * inner) as f64;
                let mut sum_g = vec![0.0; c];
                let mut sum_gx = vec![0.0; c];
                for o in 0..*outer {
                    for ch in 0..c {
                        let base = (o * c + ch) * inner;
                        for ii in 0..*inner {
                            sum_g[ch] += g[base + ii];
                            sum_gx[ch] += g[base + ii] * xhat[base + ii];
                        }
                    }
                }
                {
                    let dst = slot(lo, &self.nodes, *input);
                    for o in 0..*outer {
                        for ch in 0..c {
                            let base = (o * c + ch) * inner;
                            let f = gam[ch] * inv_std[ch] / n;
                            for ii in 0..*inner {
                                let k = base + ii;
                                dst[k] += f * (n * g[k] - sum_g[ch] - xhat[k] * sum_gx[ch]);
                            }
                        }
                    }
                }
                for (d, v) in slot(lo, &self.nodes, *gamma).iter_mut().zip(&sum_gx) {
                    *d += v;
                }
                for (d, v) in slot(lo, &self.nodes, *beta).iter_mut().zip(&sum_g) {
                    *d += v;
                }
            }
            Op::BatchNormInfer {
                input,
                gamma,
                beta,
                xhat,
                inv_std,
                outer,
                inner,
            } => {
                let c = inv_std.len();
                let gam = val(*gamma);
                let mut sum_g = vec![0.0; c];
                let mut sum_gx = vec![0.0; c];
                {
                    let dst = slot(lo, &self.nodes, *input);
                    for o in 0..*outer {
                        for ch in 0..c {
                            let base = (o * c + ch) * inner;
                            for ii in 0..*inner {
                                let k = base + ii;
                                dst[k] += g[k] * gam[ch] * inv_std[ch];
                                sum_g[ch] += g[k];
                                sum_gx[ch] += g[k] * xhat[k];
                            }
                        }
                    }
                }
                for (d, v) in slot(lo, &self.nodes, *gamma).iter_mut().zip(&sum_gx) {
                    *d += v;
                }
                for (d, v) in slot(lo, &self.nodes, *beta).iter_mut().zip(&sum_g) {
                    *d += v;
                }
            }
            Op::Sum(a) => {
                let dst = slot(lo, &self.nodes, *a);
                dst.iter_mut().for_each(|d| *d += g[0]);
            }
            Op::Mean(a) => {
                let dst = slot(lo, &self.nodes, *a);
                let f = g[0] / dst.len() as f64;
                dst.iter_mut().for_each(|d| *d += f);
            }
            Op::Mse(p, t) => {
                let (vp, vt) = (val(*p), val(*t));
                let f = 2.0 * g[0] / vp.len() as f64;
                let diff: Vec<f64> = vp.iter().zip(vt).map(|(a, b)| f * (a - b)).collect();
                for (d, v) in slot(lo, &self.nodes, *p).iter_mut().zip(&diff) {
                    *d += v;
                }
                for (d, v) in slot(lo, &self.nodes, *t).iter_mut().zip(&diff) {
                    *d -= v;
                }
            }
        }
    }
}
