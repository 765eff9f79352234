//! Reverse-mode tape over [`Tensor2`] values.
//!
//! Every forward op appends a node; [`Tape::backward`] walks the nodes in
//! reverse and returns gradients for every node that depends on a parameter
//! or on a leaf created with `requires_grad`.

use std::borrow::Cow;

use crate::nn::params::{ParamId, ParamSet};
use crate::nn::Tensor2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    Param(ParamId),
    MatMul(Var, Var),
    Add(Var, Var),
    AddRow(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    MulCol(Var, Var),
    Mask(Var, Tensor2),
    Scale(Var, f64),
    AddScalar(Var),
    Relu(Var),
    LeakyRelu(Var, f64),
    Square(Var),
    SliceCols(Var, usize),
    SliceRows(Var, usize),
    ConcatCols(Vec<Var>),
    ConcatRows(Vec<Var>),
    GatherRows(Var, Vec<usize>),
    SegmentSoftmax(Var, Vec<usize>),
    SegmentSum(Var, Vec<usize>),
    Sum(Var),
    Mean(Var),
}

struct Node<'p> {
    value: Cow<'p, Tensor2>,
    op: Op,
    requires_grad: bool,
}

pub struct Tape<'p> {
    params: &'p ParamSet,
    nodes: Vec<Node<'p>>,
}

/// Gradients of one scalar root with respect to every tracked node.
pub struct Gradients {
    grads: Vec<Option<Tensor2>>,
    param_of_node: Vec<Option<ParamId>>,
}

impl Gradients {
    pub fn wrt(&self, v: Var) -> Option<&Tensor2> {
        self.grads[v.0].as_ref()
    }

    /// Adds parameter gradients into `out`, indexed like the tape's [`ParamSet`].
    pub fn accumulate_params(&self, out: &mut [Tensor2]) {
        for (g, p) in self.grads.iter().zip(&self.param_of_node) {
            if let (Some(g), Some(p)) = (g, p) {
                out[p.index()].add_assign(g);
            }
        }
    }
}

impl<'p> Tape<'p> {
    pub fn new(params: &'p ParamSet) -> Self {
        Self { params, nodes: Vec::new() }
    }

    pub fn params(&self) -> &'p ParamSet {
        self.params
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor2 {
        &self.nodes[v.0].value
    }

    fn push(&mut self, value: Tensor2, op: Op, requires_grad: bool) -> Var {
        self.nodes.push(Node { value: Cow::Owned(value), op, requires_grad });
        Var(self.nodes.len() - 1)
    }

    fn rg(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    /// Constant input.
    pub fn constant(&mut self, t: Tensor2) -> Var {
        self.push(t, Op::Leaf, false)
    }

    /// Input whose gradient should be reported by [`Tape::backward`].
    pub fn input(&mut self, t: Tensor2) -> Var {
        self.push(t, Op::Leaf, true)
    }

    pub fn param(&mut self, id: ParamId) -> Var {
        self.nodes.push(Node { value: Cow::Borrowed(self.params.get(id)), op: Op::Param(id), requires_grad: true });
        Var(self.nodes.len() - 1)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a).matmul(self.value(b));
        let rg = self.rg(a) || self.rg(b);
        self.push(v, Op::MatMul(a, b), rg)
    }

    fn zip_with(&self, a: Var, b: Var, f: impl Fn(f64, f64) -> f64) -> Tensor2 {
        let (x, y) = (self.value(a), self.value(b));
        assert_eq!(x.shape(), y.shape(), "elementwise shape mismatch");
        let data = x.data().iter().zip(y.data()).map(|(p, q)| f(*p, *q)).collect();
        Tensor2::from_parts(x.rows(), x.cols(), data)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let v = self.zip_with(a, b, |p, q| p + q);
        let rg = self.rg(a) || self.rg(b);
        self.push(v, Op::Add(a, b), rg)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        let v = self.zip_with(a, b, |p, q| p - q);
        let rg = self.rg(a) || self.rg(b);
        self.push(v, Op::Sub(a, b), rg)
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let v = self.zip_with(a, b, |p, q| p * q);
        let rg = self.rg(a) || self.rg(b);
        self.push(v, Op::Mul(a, b), rg)
    }

    /// Adds a `1 x c` row to every row of `a`.
    pub fn add_row(&mut self, a: Var, row: Var) -> Var {
        let (x, r) = (self.value(a), self.value(row));
        assert_eq!((1, x.cols()), r.shape(), "add_row shape mismatch");
        let mut out = x.clone();
        let c = x.cols();
        for (i, v) in out.data_mut().iter_mut().enumerate() {
            *v += r.data()[i % c];
        }
        let rg = self.rg(a) || self.rg(row);
        self.push(out, Op::AddRow(a, row), rg)
    }

    /// Scales each row of `a` by the matching entry of the `rows x 1` column `col`.
    pub fn mul_col(&mut self, a: Var, col: Var) -> Var {
        let (x, s) = (self.value(a), self.value(col));
        assert_eq!((x.rows(), 1), s.shape(), "mul_col shape mismatch");
        let c = x.cols();
        let data = x.data().iter().enumerate().map(|(i, v)| v * s.data()[i / c]).collect();
        let out = Tensor2::from_parts(x.rows(), c, data);
        let rg = self.rg(a) || self.rg(col);
        self.push(out, Op::MulCol(a, col), rg)
    }

    /// Elementwise product with a constant mask.
    pub fn mask(&mut self, a: Var, mask: Tensor2) -> Var {
        let x = self.value(a);
        assert_eq!(x.shape(), mask.shape(), "mask shape mismatch");
        let data = x.data().iter().zip(mask.data()).map(|(p, q)| p * q).collect();
        let out = Tensor2::from_parts(x.rows(), x.cols(), data);
        let rg = self.rg(a);
        self.push(out, Op::Mask(a, mask), rg)
    }

    pub fn scale(&mut self, a: Var, s: f64) -> Var {
        let out = self.value(a).map(|v| v * s);
        let rg = self.rg(a);
        self.push(out, Op::Scale(a, s), rg)
    }

    pub fn add_scalar(&mut self, a: Var, s: f64) -> Var {
        let out = self.value(a).map(|v| v + s);
        let rg = self.rg(a);
        self.push(out, Op::AddScalar(a), rg)
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let out = self.value(a).map(|v| v.max(0.0));
        let rg = self.rg(a);
        self.push(out, Op::Relu(a), rg)
    }

    pub fn leaky_relu(&mut self, a: Var, slope: f64) -> Var {
        let out = self.value(a).map(|v| if v > 0.0 { v } else { slope * v });
        let rg = self.rg(a);
        self.push(out, Op::LeakyRelu(a, slope), rg)
    }

    pub fn square(&mut self, a: Var) -> Var {
        let out = self.value(a).map(|v| v * v);
        let rg = self.rg(a);
        self.push(out, Op::Square(a), rg)
    }

    pub fn slice_cols(&mut self, a: Var, start: usize, len: usize) -> Var {
        let x = self.value(a);
        assert!(start + len <= x.cols(), "slice_cols out of range");
        let mut data = Vec::with_capacity(x.rows() * len);
        for r in 0..x.rows() {
            data.extend_from_slice(&x.row(r)[start..start + len]);
        }
        let out = Tensor2::from_parts(x.rows(), len, data);
        let rg = self.rg(a);
        self.push(out, Op::SliceCols(a, start), rg)
    }

    pub fn slice_rows(&mut self, a: Var, start: usize, len: usize) -> Var {
        let x = self.value(a);
        assert!(start + len <= x.rows(), "slice_rows out of range");
        let c = x.cols();
        let out = Tensor2::from_parts(len, c, x.data()[start * c..(start + len) * c].to_vec());
        let rg = self.rg(a);
        self.push(out, Op::SliceRows(a, start), rg)
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Var {
        assert!(!parts.is_empty(), "concat_cols of nothing");
        let rows = self.value(parts[0]).rows();
        let cols: usize = parts.iter().map(|p| self.value(*p).cols()).sum();
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for p in parts {
                let x = self.value(*p);
                assert_eq!(x.rows(), rows, "concat_cols row mismatch");
                data.extend_from_slice(x.row(r));
            }
        }
        let rg = parts.iter().any(|p| self.rg(*p));
        self.push(Tensor2::from_parts(rows, cols, data), Op::ConcatCols(parts.to_vec()), rg)
    }

    pub fn concat_rows(&mut self, parts: &[Var]) -> Var {
        assert!(!parts.is_empty(), "concat_rows of nothing");
        let cols = self.value(parts[0]).cols();
        let mut data = Vec::new();
        let mut rows = 0;
        for p in parts {
            let x = self.value(*p);
            assert_eq!(x.cols(), cols, "concat_rows column mismatch");
            data.extend_from_slice(x.data());
            rows += x.rows();
        }
        let rg = parts.iter().any(|p| self.rg(*p));
        self.push(Tensor2::from_parts(rows, cols, data), Op::ConcatRows(parts.to_vec()), rg)
    }

    pub fn gather_rows(&mut self, a: Var, idx: &[usize]) -> Var {
        let x = self.value(a);
        let mut data = Vec::with_capacity(idx.len() * x.cols());
        for &i in idx {
            data.extend_from_slice(x.row(i));
        }
        let out = Tensor2::from_parts(idx.len(), x.cols(), data);
        let rg = self.rg(a);
        self.push(out, Op::GatherRows(a, idx.to_vec()), rg)
    }

    /// Softmax of an `E x 1` column within groups sharing a segment id.
    pub fn segment_softmax(&mut self, a: Var, seg: &[usize], segments: usize) -> Var {
        let x = self.value(a);
        assert_eq!((seg.len(), 1), x.shape(), "segment_softmax expects a column");
        let mut max = vec![f64::NEG_INFINITY; segments];
        for (v, s) in x.data().iter().zip(seg) {
            max[*s] = max[*s].max(*v);
        }
        let ex: Vec<f64> = x.data().iter().zip(seg).map(|(v, s)| (v - max[*s]).exp()).collect();
        let mut denom = vec![0.0; segments];
        for (e, s) in ex.iter().zip(seg) {
            denom[*s] += e;
        }
        let data = ex.iter().zip(seg).map(|(e, s)| e / denom[*s]).collect();
        let out = Tensor2::from_parts(seg.len(), 1, data);
        let rg = self.rg(a);
        self.push(out, Op::SegmentSoftmax(a, seg.to_vec()), rg)
    }

    /// Sums rows of `a` into `segments` output rows.
    pub fn segment_sum(&mut self, a: Var, seg: &[usize], segments: usize) -> Var {
        let x = self.value(a);
        assert_eq!(seg.len(), x.rows(), "segment_sum row mismatch");
        let c = x.cols();
        let mut data = vec![0.0; segments * c];
        for (r, s) in seg.iter().enumerate() {
            for (o, v) in data[s * c..(s + 1) * c].iter_mut().zip(x.row(r)) {
                *o += v;
            }
        }
        let rg = self.rg(a);
        self.push(Tensor2::from_parts(segments, c, data), Op::SegmentSum(a, seg.to_vec()), rg)
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let out = Tensor2::scalar(self.value(a).sum());
        let rg = self.rg(a);
        self.push(out, Op::Sum(a), rg)
    }

    pub fn mean(&mut self, a: Var) -> Var {
        let x = self.value(a);
        let out = Tensor2::scalar(x.sum() / x.len() as f64);
        let rg = self.rg(a);
        self.push(out, Op::Mean(a), rg)
    }

    /// Reverse pass from a `1 x 1` root.
    pub fn backward(&self, root: Var) -> Gradients {
        assert_eq!(self.value(root).shape(), (1, 1), "backward root must be scalar");
        let n = self.nodes.len();
        let mut grads: Vec<Option<Tensor2>> = vec![None; n];
        grads[root.0] = Some(Tensor2::scalar(1.0));
        for i in (0..=root.0).rev() {
            if !self.nodes[i].requires_grad {
                continue;
            }
            let Some(g) = grads[i].take() else { continue };
            self.propagate(i, &g, &mut grads);
            grads[i] = Some(g);
        }
        let param_of_node = self
            .nodes
            .iter()
            .map(|n| match n.op {
                Op::Param(p) => Some(p),
                _ => None,
            })
            .collect();
        Gradients { grads, param_of_node }
    }

    fn propagate(&self, i: usize, g: &Tensor2, grads: &mut [Option<Tensor2>]) {
        let out = &self.nodes[i].value;
        let mut acc = |v: Var, delta: Tensor2| {
            if !self.nodes[v.0].requires_grad {
                return;
            }
            match &mut grads[v.0] {
                Some(t) => t.add_assign(&delta),
                slot @ None => *slot = Some(delta),
            }
        };
        match &self.nodes[i].op {
            Op::Leaf | Op::Param(_) => {}
            Op::MatMul(a, b) => {
                if self.rg(*a) {
                    acc(*a, g.matmul_t(self.value(*b)));
                }
                if self.rg(*b) {
                    acc(*b, self.value(*a).t_matmul(g));
                }
            }
            Op::Add(a, b) => {
                acc(*a, g.clone());
                acc(*b, g.clone());
            }
            Op::Sub(a, b) => {
                acc(*a, g.clone());
                acc(*b, g.map(|v| -v));
            }
            Op::Mul(a, b) => {
                let (x, y) = (self.value(*a), self.value(*b));
                acc(*a, elementwise(g, y, |p, q| p * q));
                acc(*b, elementwise(g, x, |p, q| p * q));
            }
            Op::AddRow(a, row) => {
                acc(*a, g.clone());
                let c = g.cols();
                let mut r = vec![0.0; c];
                for (k, v) in g.data().iter().enumerate() {
                    r[k % c] += v;
                }
                acc(*row, Tensor2::from_parts(1, c, r));
            }
            Op::MulCol(a, col) => {
                let (x, s) = (self.value(*a), self.value(*col));
                let c = x.cols();
                let ga = g.data().iter().enumerate().map(|(k, v)| v * s.data()[k / c]).collect();
                acc(*a, Tensor2::from_parts(x.rows(), c, ga));
                let gs = (0..x.rows()).map(|r| g.row(r).iter().zip(x.row(r)).map(|(p, q)| p * q).sum()).collect();
                acc(*col, Tensor2::from_parts(x.rows(), 1, gs));
            }
            Op::Mask(a, m) => acc(*a, elementwise(g, m, |p, q| p * q)),
            Op::Scale(a, s) => acc(*a, g.map(|v| v * s)),
            Op::AddScalar(a) => acc(*a, g.clone()),
            Op::Relu(a) => acc(*a, elementwise(g, self.value(*a), |p, x| if x > 0.0 { p } else { 0.0 })),
            Op::LeakyRelu(a, slope) => {
                acc(*a, elementwise(g, self.value(*a), |p, x| if x > 0.0 { p } else { slope * p }))
            }
            Op::Square(a) => acc(*a, elementwise(g, self.value(*a), |p, x| 2.0 * x * p)),
            Op::SliceCols(a, start) => {
                let x = self.value(*a);
                let mut d = Tensor2::zeros(x.rows(), x.cols());
                let (c, len) = (x.cols(), g.cols());
                for r in 0..x.rows() {
                    d.data_mut()[r * c + start..r * c + start + len].copy_from_slice(g.row(r));
                }
                acc(*a, d);
            }
            Op::SliceRows(a, start) => {
                let x = self.value(*a);
                let mut d = Tensor2::zeros(x.rows(), x.cols());
                let c = x.cols();
                d.data_mut()[start * c..start * c + g.len()].copy_from_slice(g.data());
                acc(*a, d);
            }
            Op::ConcatCols(parts) => {
                let mut off = 0;
                for p in parts {
                    let w = self.value(*p).cols();
                    let mut data = Vec::with_capacity(g.rows() * w);
                    for r in 0..g.rows() {
                        data.extend_from_slice(&g.row(r)[off..off + w]);
                    }
                    acc(*p, Tensor2::from_parts(g.rows(), w, data));
                    off += w;
                }
            }
            Op::ConcatRows(parts) => {
                let c = g.cols();
                let mut off = 0;
                for p in parts {
                    let h = self.value(*p).rows();
                    acc(*p, Tensor2::from_parts(h, c, g.data()[off * c..(off + h) * c].to_vec()));
                    off += h;
                }
            }
            Op::GatherRows(a, idx) => {
                let x = self.value(*a);
                let c = x.cols();
                let mut d = Tensor2::zeros(x.rows(), c);
                for (r, &src) in idx.iter().enumerate() {
                    for (o, v) in d.data_mut()[src * c..(src + 1) * c].iter_mut().zip(g.row(r)) {
                        *o += v;
                    }
                }
                acc(*a, d);
            }
            Op::SegmentSoftmax(a, seg) => {
                let segments = seg.iter().copied().max().map_or(0, |m| m + 1);
                let mut dot = vec![0.0; segments];
                for ((y, gv), s) in out.data().iter().zip(g.data()).zip(seg) {
                    dot[*s] += y * gv;
                }
                let d = out.data().iter().zip(g.data()).zip(seg).map(|((y, gv), s)| y * (gv - dot[*s])).collect();
                acc(*a, Tensor2::from_parts(seg.len(), 1, d));
            }
            Op::SegmentSum(a, seg) => {
                let c = g.cols();
                let mut data = Vec::with_capacity(seg.len() * c);
                for s in seg {
                    data.extend_from_slice(g.row(*s));
                }
                acc(*a, Tensor2::from_parts(seg.len(), c, data));
            }
            Op::Sum(a) => {
                let x = self.value(*a);
                acc(*a, Tensor2::filled(x.rows(), x.cols(), g.item()));
            }
            Op::Mean(a) => {
                let x = self.value(*a);
                acc(*a, Tensor2::filled(x.rows(), x.cols(), g.item() / x.len() as f64));
            }
        }
    }
}

fn elementwise(a: &Tensor2, b: &Tensor2, f: impl Fn(f64, f64) -> f64) -> Tensor2 {
    let data = a.data().iter().zip(b.data()).map(|(p, q)| f(*p, *q)).collect();
    Tensor2::from_parts(a.rows(), a.cols(), data)
}
