//! Reverse-mode automatic differentiation on a tape of small vector nodes.
//!
//! The [`Graph`] is an eager tape: builder methods compute values as nodes
//! are appended, so a finished graph already holds the forward pass. Values
//! live in one flat arena (`buf`), gradients in a parallel arena, which makes
//! per-minibatch graph rebuilds allocation-free once capacities have grown.
//!
//! Primitive ops: leaf, constant, add, sub, mul, div, matvec, relu, abs,
//! exp, log, log_gamma, digamma, reciprocal, square, plus the plumbing ops
//! sum, concat, slice and a Gamma sampling node. Binary elementwise ops
//! broadcast a length-1 operand against any length.
//!
//! Two conventions matter for training determinism:
//! * relu/abs subgradients at the kink are fixed to 0;
//! * [`Graph::gamma_sample`] draws by inverting the Gamma CDF at caller-
//!   provided uniforms, so a loss built on it is a deterministic function of
//!   the distribution parameters and finite differences are well defined.
//!   Its backward pass is the implicit-function gradient
//!   dz/dθ = −(∂F/∂θ)/(∂F/∂z) of F(z) = P(shape, rate·z).
//!
//! Every relu/abs evaluation feeds its sign into a running branch signature;
//! [`gradient_check`] compares the signature at x ± h and excludes
//! coordinates whose perturbation crosses a kink.

use crate::error::{Error, Result};
use crate::special_fn::{
    inv_reg_lower_gamma, ln_gamma, psi, psi1, reg_lower_gamma_da, reg_lower_gamma_dx,
};

pub type NodeId = usize;

#[derive(Clone, Copy, Debug)]
enum Op {
    Leaf,
    Constant,
    Add(NodeId, NodeId),
    Sub(NodeId, NodeId),
    Mul(NodeId, NodeId),
    Div(NodeId, NodeId),
    MatVec { w: NodeId, x: NodeId, rows: usize, cols: usize },
    Relu(NodeId),
    Abs(NodeId),
    Exp(NodeId),
    Log(NodeId),
    LogGamma(NodeId),
    Digamma(NodeId),
    Recip(NodeId),
    Square(NodeId),
    Sum(NodeId),
    Concat(NodeId, NodeId),
    Slice { src: NodeId, start: usize },
    GammaSample { shape: NodeId, rate: NodeId, u_off: usize },
}

#[derive(Clone, Copy, Debug)]
struct Span {
    off: usize,
    len: usize,
}

/// Reverse-mode tape. Confine one graph to one logical thread; distinct
/// graphs may run concurrently.
pub struct Graph {
    ops: Vec<Op>,
    spans: Vec<Span>,
    buf: Vec<f64>,
    grad: Vec<f64>,
    noise: Vec<f64>,
    branch_sig: u64,
    clamped_grads: usize,
    grad_valid: bool,
}

const SIG_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const SIG_PRIME: u64 = 0x0000_0100_0000_01b3;

/// Smallest value a gamma draw node may emit. Quantiles of Gamma(a, ·) for
/// a ≲ 1e-3 underflow f64 at moderate uniforms (P(a, x) ≈ xᵃ/Γ(a+1) is
/// already ≈ 1 at the smallest positive double); flooring here keeps
/// reciprocals and the two decoder nets finite without risk of overflow
/// (1/1e-290 = 1e290 survives a few multiplications by moderate weights).
pub const GAMMA_DRAW_FLOOR: f64 = 1e-290;

#[inline]
fn sig_step(sig: u64, bit: bool) -> u64 {
    (sig ^ u64::from(bit) ^ 0x5c).wrapping_mul(SIG_PRIME)
}

impl Default for Graph {
    fn default() -> Self {
        Self::new()
    }
}

impl Graph {
    pub fn new() -> Self {
        Graph {
            ops: Vec::new(),
            spans: Vec::new(),
            buf: Vec::new(),
            grad: Vec::new(),
            noise: Vec::new(),
            branch_sig: SIG_OFFSET,
            clamped_grads: 0,
            grad_valid: false,
        }
    }

    /// Drop all nodes but keep arena capacities, for cheap rebuilds.
    pub fn reset(&mut self) {
        self.ops.clear();
        self.spans.clear();
        self.buf.clear();
        self.grad.clear();
        self.noise.clear();
        self.branch_sig = SIG_OFFSET;
        self.clamped_grads = 0;
        self.grad_valid = false;
    }

    pub fn node_count(&self) -> usize {
        self.ops.len()
    }

    /// Running hash of every relu/abs sign evaluated so far. Two builds of
    /// the same function share a signature iff no kink was crossed.
    pub fn branch_signature(&self) -> u64 {
        self.branch_sig
    }

    /// Number of Gamma-sample gradient components clamped to zero because
    /// the density at the draw underflowed (∂F/∂z < 1e-300).
    pub fn clamped_grad_count(&self) -> usize {
        self.clamped_grads
    }

    pub fn len(&self, id: NodeId) -> usize {
        self.spans[id].len
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn value(&self, id: NodeId) -> &[f64] {
        let s = self.spans[id];
        &self.buf[s.off..s.off + s.len]
    }

    /// Value of a length-1 node.
    pub fn scalar(&self, id: NodeId) -> f64 {
        assert_eq!(self.spans[id].len, 1, "scalar() on a non-scalar node");
        self.buf[self.spans[id].off]
    }

    /// Gradient of the last backward-seeded scalar w.r.t. this node.
    pub fn grad(&self, id: NodeId) -> &[f64] {
        assert!(self.grad_valid, "grad() before backward()");
        let s = self.spans[id];
        &self.grad[s.off..s.off + s.len]
    }

    fn push(&mut self, op: Op, len: usize) -> NodeId {
        let off = self.buf.len();
        self.buf.resize(off + len, 0.0);
        self.ops.push(op);
        self.spans.push(Span { off, len });
        self.grad_valid = false;
        self.ops.len() - 1
    }

    pub fn leaf(&mut self, values: &[f64]) -> NodeId {
        let id = self.push(Op::Leaf, values.len());
        let off = self.spans[id].off;
        self.buf[off..off + values.len()].copy_from_slice(values);
        id
    }

    pub fn constant(&mut self, values: &[f64]) -> NodeId {
        let id = self.push(Op::Constant, values.len());
        let off = self.spans[id].off;
        self.buf[off..off + values.len()].copy_from_slice(values);
        id
    }

    pub fn constant_scalar(&mut self, v: f64) -> NodeId {
        self.constant(&[v])
    }

    fn binary_len(&self, name: &str, a: NodeId, b: NodeId) -> usize {
        let (la, lb) = (self.spans[a].len, self.spans[b].len);
        assert!(
            la == lb || la == 1 || lb == 1,
            "{name}: incompatible lengths {la} and {lb}"
        );
        la.max(lb)
    }

    #[inline]
    fn bcast(&self, id: NodeId, k: usize) -> f64 {
        let s = self.spans[id];
        self.buf[s.off + if s.len == 1 { 0 } else { k }]
    }

    fn binary(&mut self, op: Op, a: NodeId, b: NodeId, f: impl Fn(f64, f64) -> f64) -> NodeId {
        let len = match op {
            Op::Add(..) => self.binary_len("add", a, b),
            Op::Sub(..) => self.binary_len("sub", a, b),
            Op::Mul(..) => self.binary_len("mul", a, b),
            Op::Div(..) => self.binary_len("div", a, b),
            _ => unreachable!(),
        };
        let id = self.push(op, len);
        let off = self.spans[id].off;
        for k in 0..len {
            self.buf[off + k] = f(self.bcast(a, k), self.bcast(b, k));
        }
        id
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.binary(Op::Add(a, b), a, b, |x, y| x + y)
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.binary(Op::Sub(a, b), a, b, |x, y| x - y)
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.binary(Op::Mul(a, b), a, b, |x, y| x * y)
    }

    pub fn div(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.binary(Op::Div(a, b), a, b, |x, y| x / y)
    }

    /// Matrix–vector product. `w` holds a row-major rows×cols matrix with
    /// cols = len(x); rows is inferred from len(w).
    pub fn matvec(&mut self, w: NodeId, x: NodeId) -> NodeId {
        let (lw, lx) = (self.spans[w].len, self.spans[x].len);
        assert!(lx > 0 && lw % lx == 0, "matvec: weight length {lw} not divisible by input length {lx}");
        let rows = lw / lx;
        let id = self.push(Op::MatVec { w, x, rows, cols: lx }, rows);
        let off = self.spans[id].off;
        let woff = self.spans[w].off;
        let xoff = self.spans[x].off;
        for r in 0..rows {
            let mut acc = 0.0;
            for c in 0..lx {
                acc += self.buf[woff + r * lx + c] * self.buf[xoff + c];
            }
            self.buf[off + r] = acc;
        }
        id
    }

    fn unary(&mut self, op: Op, a: NodeId, f: impl Fn(f64) -> f64) -> NodeId {
        let len = self.spans[a].len;
        let id = self.push(op, len);
        let off = self.spans[id].off;
        let aoff = self.spans[a].off;
        for k in 0..len {
            self.buf[off + k] = f(self.buf[aoff + k]);
        }
        id
    }

    pub fn relu(&mut self, a: NodeId) -> NodeId {
        let id = self.unary(Op::Relu(a), a, |x| x.max(0.0));
        let s = self.spans[a];
        for k in 0..s.len {
            let bit = self.buf[s.off + k] > 0.0;
            self.branch_sig = sig_step(self.branch_sig, bit);
        }
        id
    }

    pub fn abs(&mut self, a: NodeId) -> NodeId {
        let id = self.unary(Op::Abs(a), a, f64::abs);
        let s = self.spans[a];
        for k in 0..s.len {
            let bit = self.buf[s.off + k] >= 0.0;
            self.branch_sig = sig_step(self.branch_sig, bit);
        }
        id
    }

    pub fn exp(&mut self, a: NodeId) -> NodeId {
        self.unary(Op::Exp(a), a, f64::exp)
    }

    pub fn log(&mut self, a: NodeId) -> NodeId {
        self.unary(Op::Log(a), a, f64::ln)
    }

    pub fn log_gamma(&mut self, a: NodeId) -> NodeId {
        self.unary(Op::LogGamma(a), a, ln_gamma)
    }

    pub fn digamma(&mut self, a: NodeId) -> NodeId {
        self.unary(Op::Digamma(a), a, psi)
    }

    pub fn reciprocal(&mut self, a: NodeId) -> NodeId {
        self.unary(Op::Recip(a), a, f64::recip)
    }

    pub fn square(&mut self, a: NodeId) -> NodeId {
        self.unary(Op::Square(a), a, |x| x * x)
    }

    /// Reduce a vector node to the scalar sum of its elements.
    pub fn sum(&mut self, a: NodeId) -> NodeId {
        let s = self.spans[a];
        let total: f64 = self.buf[s.off..s.off + s.len].iter().sum();
        let id = self.push(Op::Sum(a), 1);
        let off = self.spans[id].off;
        self.buf[off] = total;
        id
    }

    pub fn concat(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let (sa, sb) = (self.spans[a], self.spans[b]);
        let id = self.push(Op::Concat(a, b), sa.len + sb.len);
        let off = self.spans[id].off;
        for k in 0..sa.len {
            self.buf[off + k] = self.buf[sa.off + k];
        }
        for k in 0..sb.len {
            self.buf[off + sa.len + k] = self.buf[sb.off + k];
        }
        id
    }

    pub fn slice(&mut self, src: NodeId, start: usize, len: usize) -> NodeId {
        let s = self.spans[src];
        assert!(start + len <= s.len, "slice [{start}, {start}+{len}) out of node length {}", s.len);
        let id = self.push(Op::Slice { src, start }, len);
        let off = self.spans[id].off;
        for k in 0..len {
            self.buf[off + k] = self.buf[s.off + start + k];
        }
        id
    }

    /// Elementwise floor max(a, c) built from relu: relu(a − c) + c.
    pub fn floor_at(&mut self, a: NodeId, c: f64) -> NodeId {
        let cn = self.constant_scalar(c);
        let shifted = self.sub(a, cn);
        let rect = self.relu(shifted);
        self.add(rect, cn)
    }

    /// Gamma(shape, rate) draws by CDF inversion at the supplied uniforms.
    ///
    /// Output length = len(u); shape and rate must have that length or be
    /// scalars. Element k is z_k = Q(shape_k, u_k) / rate_k where Q inverts
    /// the regularized lower incomplete gamma in its second argument.
    ///
    /// Draws are floored at [`GAMMA_DRAW_FLOOR`]: for very small shapes
    /// (reachable transiently during training, where encoder outputs sit at
    /// their eps floor) the true quantile underflows f64, and a zero draw
    /// would send reciprocals downstream to ∞. The floor keeps the graph
    /// finite; backward treats floored draws as constants (zero gradient,
    /// counted in `clamped_grad_count`), which is exact for the flat region
    /// of max(floor, ·).
    pub fn gamma_sample(&mut self, shape: NodeId, rate: NodeId, u: &[f64]) -> NodeId {
        let len = u.len();
        for (name, id) in [("shape", shape), ("rate", rate)] {
            let l = self.spans[id].len;
            assert!(
                l == len || l == 1,
                "gamma_sample: {name} length {l} incompatible with {len} uniforms"
            );
        }
        for &uk in u {
            assert!(uk > 0.0 && uk < 1.0, "gamma_sample: uniforms must lie in (0, 1), got {uk}");
        }
        let u_off = self.noise.len();
        self.noise.extend_from_slice(u);
        let id = self.push(Op::GammaSample { shape, rate, u_off }, len);
        let off = self.spans[id].off;
        for k in 0..len {
            let a = self.bcast(shape, k);
            let b = self.bcast(rate, k);
            debug_assert!(a > 0.0 && b > 0.0, "gamma_sample needs positive parameters");
            self.buf[off + k] = (inv_reg_lower_gamma(a, self.noise[u_off + k]) / b).max(GAMMA_DRAW_FLOOR);
        }
        id
    }

    /// Accumulate `go[k] * w` into the gradient of node `p` at broadcast
    /// position k.
    #[inline]
    fn gacc(&mut self, p: NodeId, k: usize, v: f64) {
        let s = self.spans[p];
        let idx = s.off + if s.len == 1 { 0 } else { k };
        self.grad[idx] += v;
    }

    /// Reverse-mode gradients of the seeded scalar w.r.t. every node.
    ///
    /// # Errors
    /// Seeding a non-scalar node is a usage error.
    pub fn backward(&mut self, seed: NodeId) -> Result<()> {
        if self.spans[seed].len != 1 {
            return Err(Error::Shape(format!(
                "backward seed must be a scalar node, node {seed} has length {}",
                self.spans[seed].len
            )));
        }
        self.grad.clear();
        self.grad.resize(self.buf.len(), 0.0);
        self.grad[self.spans[seed].off] = 1.0;
        for id in (0..self.ops.len()).rev() {
            let op = self.ops[id];
            let out = self.spans[id];
            match op {
                Op::Leaf | Op::Constant => {}
                Op::Add(a, b) => {
                    for k in 0..out.len {
                        let go = self.grad[out.off + k];
                        if go != 0.0 {
                            self.gacc(a, k, go);
                            self.gacc(b, k, go);
                        }
                    }
                }
                Op::Sub(a, b) => {
                    for k in 0..out.len {
                        let go = self.grad[out.off + k];
                        if go != 0.0 {
                            self.gacc(a, k, go);
                            self.gacc(b, k, -go);
                        }
                    }
                }
                Op::Mul(a, b) => {
                    for k in 0..out.len {
                        let go = self.grad[out.off + k];
                        if go != 0.0 {
                            let (va, vb) = (self.bcast(a, k), self.bcast(b, k));
                            self.gacc(a, k, go * vb);
                            self.gacc(b, k, go * va);
                        }
                    }
                }
                Op::Div(a, b) => {
                    for k in 0..out.len {
                        let go = self.grad[out.off + k];
                        if go != 0.0 {
                            let (va, vb) = (self.bcast(a, k), self.bcast(b, k));
                            self.gacc(a, k, go / vb);
                            self.gacc(b, k, -go * va / (vb * vb));
                        }
                    }
                }
                Op::MatVec { w, x, rows, cols } => {
                    let woff = self.spans[w].off;
                    let xoff = self.spans[x].off;
                    for r in 0..rows {
                        let go = self.grad[out.off + r];
                        if go == 0.0 {
                            continue;
                        }
                        for c in 0..cols {
                            self.grad[woff + r * cols + c] += go * self.buf[xoff + c];
                            self.grad[xoff + c] += go * self.buf[woff + r * cols + c];
                        }
                    }
                }
                Op::Relu(a) => {
                    let aoff = self.spans[a].off;
                    for k in 0..out.len {
                        if self.buf[aoff + k] > 0.0 {
                            self.grad[aoff + k] += self.grad[out.off + k];
                        }
                    }
                }
                Op::Abs(a) => {
                    let aoff = self.spans[a].off;
                    for k in 0..out.len {
                        let v = self.buf[aoff + k];
                        // Subgradient 0 at the kink.
                        let sign = if v > 0.0 {
                            1.0
                        } else if v < 0.0 {
                            -1.0
                        } else {
                            0.0
                        };
                        self.grad[aoff + k] += sign * self.grad[out.off + k];
                    }
                }
                Op::Exp(a) => {
                    let aoff = self.spans[a].off;
                    for k in 0..out.len {
                        self.grad[aoff + k] += self.grad[out.off + k] * self.buf[out.off + k];
                    }
                }
                Op::Log(a) => {
                    let aoff = self.spans[a].off;
                    for k in 0..out.len {
                        self.grad[aoff + k] += self.grad[out.off + k] / self.buf[aoff + k];
                    }
                }
                Op::LogGamma(a) => {
                    let aoff = self.spans[a].off;
                    for k in 0..out.len {
                        let go = self.grad[out.off + k];
                        if go != 0.0 {
                            self.grad[aoff + k] += go * psi(self.buf[aoff + k]);
                        }
                    }
                }
                Op::Digamma(a) => {
                    let aoff = self.spans[a].off;
                    for k in 0..out.len {
                        let go = self.grad[out.off + k];
                        if go != 0.0 {
                            self.grad[aoff + k] += go * psi1(self.buf[aoff + k]);
                        }
                    }
                }
                Op::Recip(a) => {
                    let aoff = self.spans[a].off;
                    for k in 0..out.len {
                        let y = self.buf[out.off + k];
                        self.grad[aoff + k] += -self.grad[out.off + k] * y * y;
                    }
                }
                Op::Square(a) => {
                    let aoff = self.spans[a].off;
                    for k in 0..out.len {
                        self.grad[aoff + k] += self.grad[out.off + k] * 2.0 * self.buf[aoff + k];
                    }
                }
                Op::Sum(a) => {
                    let sa = self.spans[a];
                    let go = self.grad[out.off];
                    if go != 0.0 {
                        for k in 0..sa.len {
                            self.grad[sa.off + k] += go;
                        }
                    }
                }
                Op::Concat(a, b) => {
                    let (sa, sb) = (self.spans[a], self.spans[b]);
                    for k in 0..sa.len {
                        self.grad[sa.off + k] += self.grad[out.off + k];
                    }
                    for k in 0..sb.len {
                        self.grad[sb.off + k] += self.grad[out.off + sa.len + k];
                    }
                }
                Op::Slice { src, start } => {
                    let ss = self.spans[src];
                    for k in 0..out.len {
                        self.grad[ss.off + start + k] += self.grad[out.off + k];
                    }
                }
                Op::GammaSample { shape, rate, u_off } => {
                    for k in 0..out.len {
                        let go = self.grad[out.off + k];
                        if go == 0.0 {
                            continue;
                        }
                        let a = self.bcast(shape, k);
                        let b = self.bcast(rate, k);
                        let z = self.buf[out.off + k];
                        if z <= GAMMA_DRAW_FLOOR {
                            // Floored draw: the node sits on the flat part of
                            // max(floor, ·), so its parameter gradient is 0.
                            self.clamped_grads += 1;
                            continue;
                        }
                        let x = b * z;
                        debug_assert!(
                            (crate::special_fn::reg_lower_gamma(a, x) - self.noise[u_off + k]).abs() < 1e-7,
                            "gamma_sample draw inconsistent with its stored uniform: \
                             shape {a}, rate {b}, draw {z}"
                        );
                        // dz/drate = −z/rate (scale property).
                        self.gacc(rate, k, go * (-z / b));
                        // dz/dshape = −(∂P/∂a)/(∂P/∂x · rate) at x = rate·z.
                        let d_dx = reg_lower_gamma_dx(a, x);
                        let denom = d_dx * b;
                        if denom < 1e-300 {
                            self.clamped_grads += 1;
                        } else {
                            let d_da = reg_lower_gamma_da(a, x);
                            self.gacc(shape, k, go * (-d_da / denom));
                        }
                    }
                }
            }
        }
        self.grad_valid = true;
        Ok(())
    }
}

/// Layer activation: relu or the identity.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    pub fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Identity => "identity",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "relu" => Ok(Activation::Relu),
            "identity" => Ok(Activation::Identity),
            other => Err(Error::Config(format!("unknown activation '{other}'"))),
        }
    }
}

/// One dense layer: row-major rows×cols weight, length-rows bias.
#[derive(Clone, Debug)]
pub struct Layer {
    pub rows: usize,
    pub cols: usize,
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl Layer {
    pub fn new(rows: usize, cols: usize, weight: Vec<f64>, bias: Vec<f64>, activation: Activation) -> Result<Self> {
        if weight.len() != rows * cols || bias.len() != rows {
            return Err(Error::Shape(format!(
                "layer {rows}×{cols} expects {} weights and {rows} biases, got {} and {}",
                rows * cols,
                weight.len(),
                bias.len()
            )));
        }
        Ok(Layer { rows, cols, weight, bias, activation })
    }

    /// All-zero layer with the given activation.
    pub fn zeros(rows: usize, cols: usize, activation: Activation) -> Self {
        Layer { rows, cols, weight: vec![0.0; rows * cols], bias: vec![0.0; rows], activation }
    }

    /// Glorot-uniform weights (limit √(6/(rows + cols))), zero bias.
    pub fn glorot<R: rand::Rng + ?Sized>(
        rows: usize,
        cols: usize,
        activation: Activation,
        rng: &mut R,
    ) -> Self {
        let limit = (6.0 / (rows + cols) as f64).sqrt();
        let weight = (0..rows * cols).map(|_| rng.gen_range(-limit..limit)).collect();
        Layer { rows, cols, weight, bias: vec![0.0; rows], activation }
    }
}

/// A small fully connected network of relu/identity layers. With this op
/// whitelist the realized function is piecewise linear and Lipschitz.
#[derive(Clone, Debug)]
pub struct DenseNet {
    pub layers: Vec<Layer>,
    pub input_dim: usize,
    pub output_dim: usize,
}

impl DenseNet {
    /// # Errors
    /// Adjacent layer dimensions must chain (layer k+1 cols = layer k rows).
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Shape("a DenseNet needs at least one layer".into()));
        }
        for pair in layers.windows(2) {
            if pair[1].cols != pair[0].rows {
                return Err(Error::Shape(format!(
                    "layer dimensions do not chain: {}×{} feeding {}×{}",
                    pair[0].rows, pair[0].cols, pair[1].rows, pair[1].cols
                )));
            }
        }
        let input_dim = layers[0].cols;
        let output_dim = layers[layers.len() - 1].rows;
        Ok(DenseNet { layers, input_dim, output_dim })
    }

    /// Plain (non-traced) evaluation.
    ///
    /// # Errors
    /// len(x) must equal `input_dim`.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim {
            return Err(Error::Shape(format!(
                "forward expects input length {}, got {}",
                self.input_dim,
                x.len()
            )));
        }
        let mut cur = x.to_vec();
        let mut next = Vec::new();
        for layer in &self.layers {
            next.clear();
            for r in 0..layer.rows {
                let mut acc = layer.bias[r];
                for c in 0..layer.cols {
                    acc += layer.weight[r * layer.cols + c] * cur[c];
                }
                if layer.activation == Activation::Relu {
                    acc = acc.max(0.0);
                }
                next.push(acc);
            }
            std::mem::swap(&mut cur, &mut next);
        }
        Ok(cur)
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.rows * l.cols + l.rows).sum()
    }

    /// Append this net's parameters (per layer: weight row-major, then bias)
    /// to a flat vector.
    pub fn append_params(&self, out: &mut Vec<f64>) {
        for l in &self.layers {
            out.extend_from_slice(&l.weight);
            out.extend_from_slice(&l.bias);
        }
    }

    /// Install parameters from a flat slice laid out as by `append_params`,
    /// advancing `offset`.
    pub fn set_params(&mut self, flat: &[f64], offset: &mut usize) -> Result<()> {
        for l in &mut self.layers {
            let wn = l.rows * l.cols;
            let need = wn + l.rows;
            if *offset + need > flat.len() {
                return Err(Error::Shape(format!(
                    "parameter vector too short: need {} more values at offset {offset}, have {}",
                    need,
                    flat.len() - *offset
                )));
            }
            l.weight.copy_from_slice(&flat[*offset..*offset + wn]);
            *offset += wn;
            l.bias.copy_from_slice(&flat[*offset..*offset + l.rows]);
            *offset += l.rows;
        }
        Ok(())
    }

    /// Slice per-layer (weight, bias) nodes out of a flat parameter leaf,
    /// advancing `offset`. The layout matches `append_params`.
    pub fn graph_param_slices(&self, g: &mut Graph, flat: NodeId, offset: &mut usize) -> Vec<(NodeId, NodeId)> {
        let mut out = Vec::with_capacity(self.layers.len());
        for l in &self.layers {
            let wn = l.rows * l.cols;
            let w = g.slice(flat, *offset, wn);
            *offset += wn;
            let b = g.slice(flat, *offset, l.rows);
            *offset += l.rows;
            out.push((w, b));
        }
        out
    }

    /// Traced evaluation from parameter nodes produced by
    /// [`DenseNet::graph_param_slices`].
    pub fn forward_graph(&self, g: &mut Graph, x: NodeId, params: &[(NodeId, NodeId)]) -> NodeId {
        assert_eq!(params.len(), self.layers.len(), "forward_graph: wrong slice count");
        let mut cur = x;
        for (layer, &(w, b)) in self.layers.iter().zip(params) {
            let wx = g.matvec(w, cur);
            let pre = g.add(wx, b);
            cur = match layer.activation {
                Activation::Relu => g.relu(pre),
                Activation::Identity => pre,
            };
        }
        cur
    }
}

/// Outcome of a finite-difference gradient verification.
#[derive(Clone, Debug)]
pub struct GradCheckReport {
    /// Largest relative discrepancy over comparable coordinates.
    pub max_rel_err: f64,
    /// Coordinates compared.
    pub checked_coords: usize,
    /// Coordinates excluded because x ± h straddled a relu/abs kink.
    pub skipped_coords: Vec<usize>,
    /// max_rel_err ≤ tol.
    pub pass: bool,
}

/// Compare reverse-mode gradients of `f` against central finite differences.
///
/// `f` builds a scalar loss node from a single leaf holding `point`; it must
/// be deterministic (capture any sampling noise). A coordinate is excluded
/// when the branch signatures at x + h and x − h differ, i.e. the difference
/// quotient straddles a subgradient ambiguity. Coordinates where both
/// gradients are below 1e-6 in magnitude compare as equal, and an absolute
/// agreement of 1e-7 also counts as exact; otherwise the relative error is
/// |a − n| / max(|a|, |n|).
pub fn gradient_check<F>(f: F, point: &[f64], h: f64, tol: f64) -> GradCheckReport
where
    F: Fn(&mut Graph, NodeId) -> NodeId,
{
    let mut g = Graph::new();
    let leaf = g.leaf(point);
    let out = f(&mut g, leaf);
    assert_eq!(g.len(out), 1, "gradient_check: f must return a scalar node");
    g.backward(out).expect("gradient_check: backward failed");
    let analytic = g.grad(leaf).to_vec();

    let eval = |coords: &[f64]| -> (f64, u64) {
        let mut g = Graph::new();
        let leaf = g.leaf(coords);
        let out = f(&mut g, leaf);
        (g.scalar(out), g.branch_signature())
    };

    let mut max_rel_err: f64 = 0.0;
    let mut checked = 0;
    let mut skipped = Vec::new();
    let mut perturbed = point.to_vec();
    for k in 0..point.len() {
        perturbed[k] = point[k] + h;
        let (fp, sig_p) = eval(&perturbed);
        perturbed[k] = point[k] - h;
        let (fm, sig_m) = eval(&perturbed);
        perturbed[k] = point[k];
        if sig_p != sig_m {
            skipped.push(k);
            continue;
        }
        checked += 1;
        let numeric = (fp - fm) / (2.0 * h);
        let a = analytic[k];
        if (a.abs() < 1e-6 && numeric.abs() < 1e-6) || (a - numeric).abs() <= 1e-7 {
            continue;
        }
        let rel = (a - numeric).abs() / a.abs().max(numeric.abs());
        max_rel_err = max_rel_err.max(rel);
    }
    GradCheckReport { max_rel_err, checked_coords: checked, skipped_coords: skipped, pass: max_rel_err <= tol }
}
