//! Tape-style reverse-mode differentiation over dense arrays.
//!
//! Nodes are appended in evaluation order, so the node list is already a
//! topological order and `backward` is a single reverse sweep. A graph lives
//! for one forward/backward pass (typically one sentence) and is dropped
//! afterwards.

use std::collections::BTreeMap;

use crate::autodiff::array::l2_epsilon;
use crate::autodiff::{Array, GradStore, ParamId, ParamStore};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Handle to a node of a [`Graph`].
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(usize);

/// Primitive kinds understood by [`Graph::forward_primitive`].
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum PrimitiveKind {
    MatMul,
    Add,
    Mul,
    Concat,
    Sigmoid,
    Tanh,
    L2Normalize,
    LogSoftmax,
}

#[derive(Clone, Debug)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    /// Element-wise; the right operand may be a single row broadcast over
    /// every row of the left one.
    Add(Var, Var),
    Mul(Var, Var),
    /// Along the last axis.
    Concat(Vec<Var>),
    /// Along the first axis.
    Stack(Vec<Var>),
    Slice { input: Var, start: usize },
    Sigmoid(Var),
    Tanh(Var),
    /// Per row, along the last axis.
    L2Normalize(Var),
    LogSoftmax(Var),
    Sum(Var),
    /// Summed over rows.
    SoftmaxCrossEntropy { logits: Var, gold: Vec<usize> },
}

#[derive(Copy, Clone, Debug)]
enum Binding {
    None,
    Param(ParamId),
    Row(ParamId, usize),
}

#[derive(Clone, Debug)]
struct Node<T> {
    value: Array<T>,
    op: Op,
    binding: Binding,
}

#[derive(Clone, Debug, Default)]
pub struct Graph<T> {
    nodes: Vec<Node<T>>,
    grads: Vec<Option<Array<T>>>,
    param_cache: BTreeMap<ParamId, Var>,
}

impl<T: Scalar> Graph<T> {
    pub fn new() -> Self {
        Self {
            nodes: Vec::new(),
            grads: Vec::new(),
            param_cache: BTreeMap::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Array<T> {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        self.nodes[v.0].value.shape()
    }

    /// Gradient of the last `backward` loss with respect to `v`; zeros when
    /// `v` did not contribute.
    pub fn grad(&self, v: Var) -> Array<T> {
        match self.grads.get(v.0) {
            Some(Some(g)) => g.clone(),
            _ => Array::zeros(self.shape(v)),
        }
    }

    fn push(&mut self, value: Array<T>, op: Op, binding: Binding) -> Result<Var> {
        if !value.is_finite() {
            return Err(Error::Numeric(format!("output of {op:?}")));
        }
        self.nodes.push(Node { value, op, binding });
        Ok(Var(self.nodes.len() - 1))
    }

    /// Unbound leaf (input or constant).
    pub fn input(&mut self, value: Array<T>) -> Result<Var> {
        self.push(value, Op::Leaf, Binding::None)
    }

    /// Leaf bound to a whole parameter. Repeated calls return the same node.
    pub fn param(&mut self, store: &ParamStore<T>, id: ParamId) -> Result<Var> {
        if let Some(&v) = self.param_cache.get(&id) {
            return Ok(v);
        }
        let v = self.push(store.get(id).clone(), Op::Leaf, Binding::Param(id))?;
        self.param_cache.insert(id, v);
        Ok(v)
    }

    /// Leaf holding one row of a matrix parameter (embedding lookup). The
    /// gradient is scattered back into that row only.
    pub fn param_row(&mut self, store: &ParamStore<T>, id: ParamId, row: usize) -> Result<Var> {
        let table = store.get(id);
        let rows = table.rows();
        if row >= rows {
            return Err(Error::Index { index: row, len: rows });
        }
        let value = Array::from_parts(vec![1, table.cols()], table.row_slice(row).to_vec());
        self.push(value, Op::Leaf, Binding::Row(id, row))
    }

    /// Dispatches one of the named primitives. Unary kinds use `inputs[0]`,
    /// binary kinds `inputs[0..2]`, `Concat` uses all inputs.
    pub fn forward_primitive(&mut self, kind: PrimitiveKind, inputs: &[Var]) -> Result<Var> {
        let need = match kind {
            PrimitiveKind::MatMul | PrimitiveKind::Add | PrimitiveKind::Mul => 2,
            PrimitiveKind::Concat => 1,
            _ => 1,
        };
        if inputs.len() < need {
            return Err(Error::Config(format!("{kind:?} needs {need} inputs")));
        }
        match kind {
            PrimitiveKind::MatMul => self.matmul(inputs[0], inputs[1]),
            PrimitiveKind::Add => self.add(inputs[0], inputs[1]),
            PrimitiveKind::Mul => self.mul(inputs[0], inputs[1]),
            PrimitiveKind::Concat => self.concat(inputs),
            PrimitiveKind::Sigmoid => self.sigmoid(inputs[0]),
            PrimitiveKind::Tanh => self.tanh(inputs[0]),
            PrimitiveKind::L2Normalize => self.l2_normalize(inputs[0]),
            PrimitiveKind::LogSoftmax => self.log_softmax(inputs[0]),
        }
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        if sa.len() != 2 || sb.len() != 2 || sa[1] != sb[0] {
            return Err(Error::shape("matmul", sa, sb));
        }
        let (m, k, n) = (sa[0], sa[1], sb[1]);
        let out = matmul_kernel(self.value(a).data(), self.value(b).data(), m, k, n);
        self.push(Array::from_parts(vec![m, n], out), Op::MatMul(a, b), Binding::None)
    }

    fn broadcast_ok(&self, a: Var, b: Var) -> bool {
        let (va, vb) = (self.value(a), self.value(b));
        va.shape() == vb.shape() || (vb.rows() == 1 && vb.cols() == va.cols())
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        if !self.broadcast_ok(a, b) {
            return Err(Error::shape("add", self.shape(a), self.shape(b)));
        }
        let out = zip_broadcast(self.value(a), self.value(b), |x, y| x + y);
        self.push(out, Op::Add(a, b), Binding::None)
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        if !self.broadcast_ok(a, b) {
            return Err(Error::shape("mul", self.shape(a), self.shape(b)));
        }
        let out = zip_broadcast(self.value(a), self.value(b), |x, y| x * y);
        self.push(out, Op::Mul(a, b), Binding::None)
    }

    pub fn concat(&mut self, parts: &[Var]) -> Result<Var> {
        let first = parts
            .first()
            .ok_or_else(|| Error::Config("concat of nothing".into()))?;
        let lead = self.shape(*first)[..self.shape(*first).len() - 1].to_vec();
        let rows = self.value(*first).rows();
        let mut width = 0;
        for &p in parts {
            let s = self.shape(p);
            if s[..s.len() - 1] != lead[..] {
                return Err(Error::shape("concat", self.shape(*first), s));
            }
            width += self.value(p).cols();
        }
        let mut out = Vec::with_capacity(rows * width);
        for r in 0..rows {
            for &p in parts {
                out.extend_from_slice(self.value(p).row_slice(r));
            }
        }
        let mut shape = lead;
        shape.push(width);
        self.push(Array::from_parts(shape, out), Op::Concat(parts.to_vec()), Binding::None)
    }

    /// Stacks row blocks on top of each other; all parts share a width.
    pub fn stack_rows(&mut self, parts: &[Var]) -> Result<Var> {
        let first = parts
            .first()
            .ok_or_else(|| Error::Config("stack of nothing".into()))?;
        let cols = self.value(*first).cols();
        let mut data = Vec::new();
        let mut rows = 0;
        for &p in parts {
            let v = self.value(p);
            if v.cols() != cols {
                return Err(Error::shape("stack_rows", self.shape(*first), v.shape()));
            }
            rows += v.rows();
            data.extend_from_slice(v.data());
        }
        self.push(Array::from_parts(vec![rows, cols], data), Op::Stack(parts.to_vec()), Binding::None)
    }

    /// Columns `start..start + len` of the last axis.
    pub fn slice_cols(&mut self, input: Var, start: usize, len: usize) -> Result<Var> {
        let v = self.value(input);
        if len == 0 || start + len > v.cols() {
            return Err(Error::shape("slice_cols", v.shape(), &[start, len]));
        }
        let rows = v.rows();
        let mut out = Vec::with_capacity(rows * len);
        for r in 0..rows {
            out.extend_from_slice(&v.row_slice(r)[start..start + len]);
        }
        let mut shape = v.shape().to_vec();
        *shape.last_mut().unwrap() = len;
        self.push(Array::from_parts(shape, out), Op::Slice { input, start }, Binding::None)
    }

    pub fn sigmoid(&mut self, x: Var) -> Result<Var> {
        let out = self.value(x).map(sigmoid);
        self.push(out, Op::Sigmoid(x), Binding::None)
    }

    pub fn tanh(&mut self, x: Var) -> Result<Var> {
        let out = self.value(x).map(T::tanh);
        self.push(out, Op::Tanh(x), Binding::None)
    }

    /// Row-wise `x / ||x||_2`; rows with norm below 1e-12 map to zero and
    /// pass no gradient.
    pub fn l2_normalize(&mut self, x: Var) -> Result<Var> {
        let v = self.value(x);
        let mut out = v.clone();
        for r in 0..v.rows() {
            let normed = crate::autodiff::l2_normalize(v.row_slice(r));
            out.row_slice_mut(r).copy_from_slice(&normed);
        }
        self.push(out, Op::L2Normalize(x), Binding::None)
    }

    /// Row-wise log-softmax with max subtraction.
    pub fn log_softmax(&mut self, x: Var) -> Result<Var> {
        let v = self.value(x);
        let mut out = v.clone();
        for r in 0..v.rows() {
            let lse = log_sum_exp(v.row_slice(r));
            for o in out.row_slice_mut(r) {
                *o -= lse;
            }
        }
        self.push(out, Op::LogSoftmax(x), Binding::None)
    }

    pub fn sum(&mut self, x: Var) -> Result<Var> {
        let total = self.value(x).data().iter().copied().sum::<T>();
        self.push(Array::from_parts(vec![1, 1], vec![total]), Op::Sum(x), Binding::None)
    }

    /// Sum over rows of `-log softmax(logits[r])[gold[r]]`, a `[1, 1]` node.
    pub fn softmax_cross_entropy(&mut self, logits: Var, gold: &[usize]) -> Result<Var> {
        let v = self.value(logits);
        if v.rows() != gold.len() {
            return Err(Error::shape("softmax_cross_entropy", v.shape(), &[gold.len()]));
        }
        let classes = v.cols();
        let mut total = T::zero();
        for (r, &g) in gold.iter().enumerate() {
            if g >= classes {
                return Err(Error::Index { index: g, len: classes });
            }
            let row = v.row_slice(r);
            total += log_sum_exp(row) - row[g];
        }
        self.push(
            Array::from_parts(vec![1, 1], vec![total]),
            Op::SoftmaxCrossEntropy {
                logits,
                gold: gold.to_vec(),
            },
            Binding::None,
        )
    }

    /// Propagates d`loss` through the graph. Node gradients are recomputed
    /// from scratch; parameter gradients are added into `grads`, so repeated
    /// calls accumulate there.
    pub fn backward(&mut self, loss: Var, grads: &mut GradStore<T>) -> Result<()> {
        self.backward_seeded(loss, T::one(), grads)
    }

    /// Like [`Graph::backward`] with the output gradient set to `seed`.
    pub fn backward_seeded(&mut self, loss: Var, seed: T, grads: &mut GradStore<T>) -> Result<()> {
        if self.value(loss).len() != 1 {
            return Err(Error::shape("backward", self.shape(loss), &[1]));
        }
        let mut node_grads: Vec<Option<Array<T>>> = vec![None; self.nodes.len()];
        node_grads[loss.0] = Some(Array::filled(self.shape(loss), seed));

        for idx in (0..=loss.0).rev() {
            let Some(g) = node_grads[idx].take() else {
                continue;
            };
            self.propagate(idx, &g, &mut node_grads);
            match self.nodes[idx].binding {
                Binding::None => {}
                Binding::Param(id) => grads.slot(id)?.add_assign(&g)?,
                Binding::Row(id, row) => {
                    let slot = grads.slot(id)?;
                    for (d, &s) in slot.row_slice_mut(row).iter_mut().zip(g.data()) {
                        *d += s;
                    }
                }
            }
            node_grads[idx] = Some(g);
        }
        self.grads = node_grads;
        Ok(())
    }

    fn propagate(&self, idx: usize, g: &Array<T>, acc: &mut [Option<Array<T>>]) {
        let node = &self.nodes[idx];
        let out = &node.value;
        match &node.op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                let (va, vb) = (self.value(*a), self.value(*b));
                let (m, k, n) = (va.shape()[0], va.shape()[1], vb.shape()[1]);
                let da = matmul_a_bt(g.data(), vb.data(), m, n, k);
                let db = matmul_at_b(va.data(), g.data(), m, k, n);
                add_into(acc, *a, va.shape(), &da);
                add_into(acc, *b, vb.shape(), &db);
            }
            Op::Add(a, b) => {
                add_into(acc, *a, self.shape(*a), g.data());
                let vb = self.value(*b);
                if vb.shape() == g.shape() {
                    add_into(acc, *b, vb.shape(), g.data());
                } else {
                    add_into(acc, *b, vb.shape(), &column_sums(g));
                }
            }
            Op::Mul(a, b) => {
                let (va, vb) = (self.value(*a), self.value(*b));
                let da = zip_broadcast(g, vb, |x, y| x * y);
                add_into(acc, *a, va.shape(), da.data());
                let prod: Vec<T> = g.data().iter().zip(va.data()).map(|(&x, &y)| x * y).collect();
                if vb.shape() == va.shape() {
                    add_into(acc, *b, vb.shape(), &prod);
                } else {
                    let p = Array::from_parts(va.shape().to_vec(), prod);
                    add_into(acc, *b, vb.shape(), &column_sums(&p));
                }
            }
            Op::Concat(parts) => {
                let rows = g.rows();
                let mut offset = 0;
                for p in parts {
                    let vp = self.value(*p);
                    let w = vp.cols();
                    let mut d = Vec::with_capacity(vp.len());
                    for r in 0..rows {
                        d.extend_from_slice(&g.row_slice(r)[offset..offset + w]);
                    }
                    add_into(acc, *p, vp.shape(), &d);
                    offset += w;
                }
            }
            Op::Stack(parts) => {
                let mut offset = 0;
                for p in parts {
                    let vp = self.value(*p);
                    add_into(acc, *p, vp.shape(), &g.data()[offset..offset + vp.len()]);
                    offset += vp.len();
                }
            }
            Op::Slice { input, start } => {
                let vi = self.value(*input);
                let w = g.cols();
                let mut d = vec![T::zero(); vi.len()];
                let cols = vi.cols();
                for r in 0..g.rows() {
                    d[r * cols + start..r * cols + start + w].copy_from_slice(g.row_slice(r));
                }
                add_into(acc, *input, vi.shape(), &d);
            }
            Op::Sigmoid(x) => {
                let d: Vec<T> = g
                    .data()
                    .iter()
                    .zip(out.data())
                    .map(|(&gi, &y)| gi * y * (T::one() - y))
                    .collect();
                add_into(acc, *x, self.shape(*x), &d);
            }
            Op::Tanh(x) => {
                let d: Vec<T> = g
                    .data()
                    .iter()
                    .zip(out.data())
                    .map(|(&gi, &y)| gi * (T::one() - y * y))
                    .collect();
                add_into(acc, *x, self.shape(*x), &d);
            }
            Op::L2Normalize(x) => {
                let vx = self.value(*x);
                let mut d = vec![T::zero(); vx.len()];
                let cols = vx.cols();
                for r in 0..vx.rows() {
                    let xr = vx.row_slice(r);
                    let norm = xr.iter().map(|&v| v * v).sum::<T>().sqrt();
                    if norm < l2_epsilon() {
                        continue;
                    }
                    let yr = out.row_slice(r);
                    let gr = g.row_slice(r);
                    let dot = yr.iter().zip(gr).map(|(&y, &gi)| y * gi).sum::<T>();
                    for c in 0..cols {
                        d[r * cols + c] = (gr[c] - yr[c] * dot) / norm;
                    }
                }
                add_into(acc, *x, vx.shape(), &d);
            }
            Op::LogSoftmax(x) => {
                let cols = out.cols();
                let mut d = vec![T::zero(); out.len()];
                for r in 0..out.rows() {
                    let gr = g.row_slice(r);
                    let gsum = gr.iter().copied().sum::<T>();
                    for (c, &y) in out.row_slice(r).iter().enumerate() {
                        d[r * cols + c] = gr[c] - y.exp() * gsum;
                    }
                }
                add_into(acc, *x, self.shape(*x), &d);
            }
            Op::Sum(x) => {
                let s = g.item();
                let vx = self.value(*x);
                add_into(acc, *x, vx.shape(), &vec![s; vx.len()]);
            }
            Op::SoftmaxCrossEntropy { logits, gold } => {
                let s = g.item();
                let vl = self.value(*logits);
                let cols = vl.cols();
                let mut d = vec![T::zero(); vl.len()];
                for (r, &gi) in gold.iter().enumerate() {
                    let probs = softmax(vl.row_slice(r));
                    for (c, p) in probs.into_iter().enumerate() {
                        let onehot = if c == gi { T::one() } else { T::zero() };
                        d[r * cols + c] = s * (p - onehot);
                    }
                }
                add_into(acc, *logits, vl.shape(), &d);
            }
        }
    }
}

fn add_into<T: Scalar>(acc: &mut [Option<Array<T>>], v: Var, shape: &[usize], d: &[T]) {
    let slot = acc[v.0].get_or_insert_with(|| Array::zeros(shape));
    for (a, &b) in slot.data_mut().iter_mut().zip(d) {
        *a += b;
    }
}

fn column_sums<T: Scalar>(g: &Array<T>) -> Vec<T> {
    let mut out = vec![T::zero(); g.cols()];
    for r in 0..g.rows() {
        for (o, &v) in out.iter_mut().zip(g.row_slice(r)) {
            *o += v;
        }
    }
    out
}

fn zip_broadcast<T: Scalar>(a: &Array<T>, b: &Array<T>, f: impl Fn(T, T) -> T) -> Array<T> {
    let cols = a.cols();
    let data = if a.shape() == b.shape() {
        a.data().iter().zip(b.data()).map(|(&x, &y)| f(x, y)).collect()
    } else {
        a.data()
            .iter()
            .enumerate()
            .map(|(i, &x)| f(x, b.data()[i % cols]))
            .collect()
    };
    Array::from_parts(a.shape().to_vec(), data)
}

pub(crate) fn sigmoid<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

pub(crate) fn log_sum_exp<T: Scalar>(row: &[T]) -> T {
    let max = row.iter().copied().fold(T::neg_infinity(), T::max);
    let s = row.iter().map(|&v| (v - max).exp()).sum::<T>();
    max + s.ln()
}

pub(crate) fn softmax<T: Scalar>(row: &[T]) -> Vec<T> {
    let max = row.iter().copied().fold(T::neg_infinity(), T::max);
    let exps: Vec<T> = row.iter().map(|&v| (v - max).exp()).collect();
    let s = exps.iter().copied().sum::<T>();
    exps.into_iter().map(|e| e / s).collect()
}

/// `a (m×k) · b (k×n)`.
fn matmul_kernel<T: Scalar>(a: &[T], b: &[T], m: usize, k: usize, n: usize) -> Vec<T> {
    let mut out = vec![T::zero(); m * n];
    for i in 0..m {
        let orow = &mut out[i * n..(i + 1) * n];
        for p in 0..k {
            let aip = a[i * k + p];
            if aip == T::zero() {
                continue;
            }
            for (o, &bv) in orow.iter_mut().zip(&b[p * n..(p + 1) * n]) {
                *o += aip * bv;
            }
        }
    }
    out
}

/// `g (m×n) · bᵀ` where `b` is `k×n`.
fn matmul_a_bt<T: Scalar>(g: &[T], b: &[T], m: usize, n: usize, k: usize) -> Vec<T> {
    let mut out = vec![T::zero(); m * k];
    for i in 0..m {
        let grow = &g[i * n..(i + 1) * n];
        for p in 0..k {
            out[i * k + p] = grow.iter().zip(&b[p * n..(p + 1) * n]).map(|(&x, &y)| x * y).sum();
        }
    }
    out
}

/// `aᵀ · g` where `a` is `m×k` and `g` is `m×n`.
fn matmul_at_b<T: Scalar>(a: &[T], g: &[T], m: usize, k: usize, n: usize) -> Vec<T> {
    let mut out = vec![T::zero(); k * n];
    for i in 0..m {
        let grow = &g[i * n..(i + 1) * n];
        for p in 0..k {
            let aip = a[i * k + p];
            if aip == T::zero() {
                continue;
            }
            for (o, &gv) in out[p * n..(p + 1) * n].iter_mut().zip(grow) {
                *o += aip * gv;
            }
        }
    }
    out
}
