use rand::Rng;

use crate::error::{Error, Result};
use crate::nn::params::{ParamId, ParamSet};
use crate::nn::tape::{Tape, Var};
use crate::nn::Tensor2;

/// Affine layer `x W + b` with `W: in x out` and `b: 1 x out`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Linear {
    pub weight: ParamId,
    pub bias: ParamId,
    pub in_dim: usize,
    pub out_dim: usize,
}

impl Linear {
    pub fn new(params: &mut ParamSet, name: &str, in_dim: usize, out_dim: usize, rng: &mut impl Rng) -> Self {
        let weight = params.add_glorot(format!("{name}.w"), in_dim, out_dim, rng);
        let bias = params.add(format!("{name}.b"), Tensor2::zeros(1, out_dim));
        Self { weight, bias, in_dim, out_dim }
    }

    pub fn forward(&self, tape: &mut Tape<'_>, x: Var) -> Var {
        let w = tape.param(self.weight);
        let b = tape.param(self.bias);
        let xw = tape.matmul(x, w);
        tape.add_row(xw, b)
    }
}

/// Stack of [`Linear`] layers with ReLU between them and a linear output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mlp {
    pub layers: Vec<Linear>,
}

impl Mlp {
    /// `widths = [in, h1, ..., out]`.
    pub fn new(params: &mut ParamSet, name: &str, widths: &[usize], rng: &mut impl Rng) -> Result<Self> {
        if widths.len() < 2 || widths.contains(&0) {
            return Err(Error::InvalidParam(format!("mlp `{name}` needs at least two nonzero widths, got {widths:?}")));
        }
        let layers = widths
            .windows(2)
            .enumerate()
            .map(|(i, w)| Linear::new(params, &format!("{name}.{i}"), w[0], w[1], rng))
            .collect();
        Ok(Self { layers })
    }

    pub fn in_dim(&self) -> usize {
        self.layers[0].in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].out_dim
    }

    pub fn forward(&self, tape: &mut Tape<'_>, x: Var) -> Result<Var> {
        let mut h = x;
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let cols = tape.value(h).cols();
            let expect = tape.params().get(layer.weight).rows();
            if cols != expect {
                return Err(Error::Shape {
                    layer: i,
                    detail: format!("input has {cols} columns, weight expects {expect}"),
                });
            }
            h = layer.forward(tape, h);
            if i != last {
                h = tape.relu(h);
            }
        }
        Ok(h)
    }
}

pub const GAT_LEAKY_SLOPE: f64 = 0.2;
pub const GAT_DROPOUT: f64 = 0.8;

/// Multi-head graph attention layer without bias.
///
/// One shared `in x (heads * head_dim)` projection holds every head's map
/// side by side. Head `h` owns a `2 * head_dim x 1` attention vector whose
/// first half scores the receiving node and second half the sender.
#[derive(Debug, Clone, PartialEq)]
pub struct GatLayer {
    pub weight: ParamId,
    pub attention: Vec<ParamId>,
    pub in_dim: usize,
    pub head_dim: usize,
    pub leaky_slope: f64,
    pub dropout: f64,
}

/// Output of [`GatLayer::forward`]: per-node concatenated head outputs and
/// the per-head `E x 1` attention coefficients.
pub struct GatOutput {
    pub nodes: Var,
    pub attention: Vec<Var>,
}

impl GatLayer {
    pub fn new(
        params: &mut ParamSet,
        name: &str,
        in_dim: usize,
        heads: usize,
        head_dim: usize,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        if heads == 0 || head_dim == 0 || in_dim == 0 {
            return Err(Error::InvalidParam(format!("gat `{name}` needs nonzero dims")));
        }
        let weight = params.add_glorot(format!("{name}.w"), in_dim, heads * head_dim, rng);
        let attention = (0..heads).map(|h| params.add_glorot(format!("{name}.a{h}"), 2 * head_dim, 1, rng)).collect();
        Ok(Self { weight, attention, in_dim, head_dim, leaky_slope: GAT_LEAKY_SLOPE, dropout: GAT_DROPOUT })
    }

    pub fn heads(&self) -> usize {
        self.attention.len()
    }

    pub fn out_dim(&self) -> usize {
        self.heads() * self.head_dim
    }

    /// `edges` are `(source, destination)` node indices. Passing an RNG turns
    /// on training-mode inverted dropout over attention coefficients.
    pub fn forward<'d>(
        &self,
        tape: &mut Tape<'_>,
        x: Var,
        edges: &[(usize, usize)],
        mut dropout_rng: Option<&mut (dyn rand::RngCore + 'd)>,
    ) -> Result<GatOutput> {
        let n = tape.value(x).rows();
        if n == 0 {
            return Err(Error::InvalidParam("graph attention over an empty graph".into()));
        }
        let cols = tape.value(x).cols();
        if cols != self.in_dim {
            return Err(Error::Shape {
                layer: 0,
                detail: format!("gat input has {cols} columns, expects {}", self.in_dim),
            });
        }
        if let Some(&(s, d)) = edges.iter().find(|(s, d)| *s >= n || *d >= n) {
            return Err(Error::InvalidParam(format!("edge ({s}, {d}) references a node outside 0..{n}")));
        }
        let w = tape.param(self.weight);
        let z = tape.matmul(x, w);
        if edges.is_empty() {
            let zeros = tape.constant(Tensor2::zeros(n, self.out_dim()));
            return Ok(GatOutput { nodes: zeros, attention: Vec::new() });
        }
        let src: Vec<usize> = edges.iter().map(|e| e.0).collect();
        let dst: Vec<usize> = edges.iter().map(|e| e.1).collect();
        let d = self.head_dim;
        let keep = 1.0 - self.dropout;
        let mut heads = Vec::with_capacity(self.heads());
        let mut attention = Vec::with_capacity(self.heads());
        for (h, att) in self.attention.iter().enumerate() {
            let zh = tape.slice_cols(z, h * d, d);
            let a = tape.param(*att);
            let a_dst = tape.slice_rows(a, 0, d);
            let a_src = tape.slice_rows(a, d, d);
            let s_dst = tape.matmul(zh, a_dst);
            let s_src = tape.matmul(zh, a_src);
            let e_dst = tape.gather_rows(s_dst, &dst);
            let e_src = tape.gather_rows(s_src, &src);
            let e = tape.add(e_dst, e_src);
            let e = tape.leaky_relu(e, self.leaky_slope);
            let alpha = tape.segment_softmax(e, &dst, n);
            attention.push(alpha);
            let alpha = match dropout_rng.as_deref_mut() {
                Some(rng) => {
                    let m = (0..edges.len()).map(|_| if rng.gen::<f64>() < keep { 1.0 / keep } else { 0.0 }).collect();
                    tape.mask(alpha, Tensor2::from_parts(edges.len(), 1, m))
                }
                None => alpha,
            };
            let msgs = tape.gather_rows(zh, &src);
            let weighted = tape.mul_col(msgs, alpha);
            heads.push(tape.segment_sum(weighted, &dst, n));
        }
        let nodes = tape.concat_cols(&heads);
        Ok(GatOutput { nodes, attention })
    }
}
