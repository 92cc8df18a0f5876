//! Tape-based reverse-mode differentiation over small dense matrices.
//!
//! Every [`Var`] is a row-major `rows x cols` matrix recorded on a [`Tape`].
//! Scalars are `1 x 1` matrices, which lets the geometric code in
//! [`crate::geom`] run unchanged on tape variables through [`Real`].

use std::cell::RefCell;
use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::geom::Real;

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    Div(usize, usize),
    /// `scale * x + shift`; only the scale matters for the adjoint.
    Affine(usize, f64),
    MatMul(usize, usize),
    /// `m x n` plus a broadcast `1 x n` row.
    AddRow(usize, usize),
    Elu(usize),
    Sigmoid(usize),
    Tanh(usize),
    Sqrt(usize),
    Sin(usize),
    Cos(usize),
    Asin(usize),
    Abs(usize),
    Atan2(usize, usize),
    ConcatCols(Vec<usize>),
    SliceCols(usize, usize),
    Row(usize, usize),
    Gather(usize, Vec<usize>),
    Sum(usize),
}

#[derive(Debug)]
struct Node {
    rows: usize,
    cols: usize,
    value: Vec<f64>,
    op: Op,
}

/// Records operations for a single forward/backward pass.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: RefCell<Vec<Node>>,
}

/// Handle to a matrix recorded on a [`Tape`].
#[derive(Clone, Copy)]
pub struct Var<'t> {
    tape: &'t Tape,
    id: usize,
}

impl std::fmt::Debug for Var<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let (r, c) = self.shape();
        write!(f, "Var#{}[{}x{}]", self.id, r, c)
    }
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn push(&self, rows: usize, cols: usize, value: Vec<f64>, op: Op) -> Var<'_> {
        debug_assert_eq!(rows * cols, value.len());
        let mut nodes = self.nodes.borrow_mut();
        nodes.push(Node { rows, cols, value, op });
        Var {
            tape: self,
            id: nodes.len() - 1,
        }
    }

    /// A differentiable input.
    pub fn leaf(&self, rows: usize, cols: usize, value: Vec<f64>) -> Var<'_> {
        assert_eq!(rows * cols, value.len(), "leaf shape does not match data");
        self.push(rows, cols, value, Op::Leaf)
    }

    /// A constant; gradients are computed for it but never read.
    pub fn constant(&self, rows: usize, cols: usize, value: Vec<f64>) -> Var<'_> {
        self.leaf(rows, cols, value)
    }

    pub fn scalar(&self, v: f64) -> Var<'_> {
        self.push(1, 1, vec![v], Op::Leaf)
    }

    pub fn row(&self, values: &[f64]) -> Var<'_> {
        self.push(1, values.len(), values.to_vec(), Op::Leaf)
    }

    /// Concatenates `1 x 1` scalars into a row.
    pub fn stack(&self, parts: &[Var<'_>]) -> Var<'_> {
        self.concat_cols(parts)
    }

    pub fn concat_cols(&self, parts: &[Var<'_>]) -> Var<'_> {
        assert!(!parts.is_empty(), "concat of nothing");
        let nodes = self.nodes.borrow();
        let rows = nodes[parts[0].id].rows;
        let cols: usize = parts.iter().map(|p| nodes[p.id].cols).sum();
        let mut value = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for p in parts {
                let n = &nodes[p.id];
                assert_eq!(n.rows, rows, "concat row mismatch");
                value.extend_from_slice(&n.value[r * n.cols..(r + 1) * n.cols]);
            }
        }
        drop(nodes);
        self.push(rows, cols, value, Op::ConcatCols(parts.iter().map(|p| p.id).collect()))
    }

    /// Runs the backward pass from a scalar `output`.
    pub fn backward(&self, output: Var<'_>) -> Result<Gradients> {
        let nodes = self.nodes.borrow();
        let out = &nodes[output.id];
        if out.rows * out.cols != 1 {
            return Err(Error::shape(format!(
                "backward from a {}x{} value; need a scalar",
                out.rows, out.cols
            )));
        }
        if !out.value[0].is_finite() {
            return Err(Error::numerical(format!("non-finite output {}", out.value[0])));
        }
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; output.id + 1];
        grads[output.id] = Some(vec![1.0]);
        for id in (0..=output.id).rev() {
            let Some(g) = grads[id].take() else { continue };
            let node = &nodes[id];
            propagate(&nodes, node, &g, &mut grads);
            grads[id] = Some(g);
        }
        for (id, g) in grads.iter().enumerate() {
            if let Some(g) = g {
                if g.iter().any(|v| !v.is_finite()) {
                    return Err(Error::numerical(format!("non-finite gradient at node {id}")));
                }
            }
        }
        Ok(Gradients { grads })
    }
}

fn accumulate(grads: &mut [Option<Vec<f64>>], id: usize, len: usize) -> &mut Vec<f64> {
    grads[id].get_or_insert_with(|| vec![0.0; len])
}

fn propagate(nodes: &[Node], node: &Node, g: &[f64], grads: &mut [Option<Vec<f64>>]) {
    let val = |id: usize| &nodes[id].value;
    match &node.op {
        Op::Leaf => {}
        &Op::Add(a, b) => {
            for (dst, &gi) in accumulate(grads, a, g.len()).iter_mut().zip(g) {
                *dst += gi;
            }
            for (dst, &gi) in accumulate(grads, b, g.len()).iter_mut().zip(g) {
                *dst += gi;
            }
        }
        &Op::Sub(a, b) => {
            for (dst, &gi) in accumulate(grads, a, g.len()).iter_mut().zip(g) {
                *dst += gi;
            }
            for (dst, &gi) in accumulate(grads, b, g.len()).iter_mut().zip(g) {
                *dst -= gi;
            }
        }
        &Op::Mul(a, b) => {
            let (va, vb) = (val(a), val(b));
            for (i, dst) in accumulate(grads, a, g.len()).iter_mut().enumerate() {
                *dst += g[i] * vb[i];
            }
            for (i, dst) in accumulate(grads, b, g.len()).iter_mut().enumerate() {
                *dst += g[i] * va[i];
            }
        }
        &Op::Div(a, b) => {
            let (va, vb) = (val(a), val(b));
            for (i, dst) in accumulate(grads, a, g.len()).iter_mut().enumerate() {
                *dst += g[i] / vb[i];
            }
            for (i, dst) in accumulate(grads, b, g.len()).iter_mut().enumerate() {
                *dst -= g[i] * va[i] / (vb[i] * vb[i]);
            }
        }
        &Op::Affine(a, scale) => {
            for (dst, &gi) in accumulate(grads, a, g.len()).iter_mut().zip(g) {
                *dst += scale * gi;
            }
        }
        &Op::MatMul(a, b) => {
            let (na, nb) = (&nodes[a], &nodes[b]);
            let (m, k, n) = (na.rows, na.cols, nb.cols);
            {
                let ga = accumulate(grads, a, m * k);
                for i in 0..m {
                    for p in 0..k {
                        let mut s = 0.0;
                        for j in 0..n {
                            s += g[i * n + j] * nb.value[p * n + j];
                        }
                        ga[i * k + p] += s;
                    }
                }
            }
            let gb = accumulate(grads, b, k * n);
            for i in 0..m {
                for p in 0..k {
                    let av = na.value[i * k + p];
                    if av == 0.0 {
                        continue;
                    }
                    let row = &g[i * n..(i + 1) * n];
                    for (dst, &gij) in gb[p * n..(p + 1) * n].iter_mut().zip(row) {
                        *dst += av * gij;
                    }
                }
            }
        }
        &Op::AddRow(a, b) => {
            let n = node.cols;
            for (dst, &gi) in accumulate(grads, a, g.len()).iter_mut().zip(g) {
                *dst += gi;
            }
            let gb = accumulate(grads, b, n);
            for (i, &gi) in g.iter().enumerate() {
                gb[i % n] += gi;
            }
        }
        &Op::Elu(a) => unary(grads, a, g, |i| if val(a)[i] > 0.0 { 1.0 } else { node.value[i] + 1.0 }),
        &Op::Sigmoid(a) => unary(grads, a, g, |i| {
            let y = node.value[i];
            y * (1.0 - y)
        }),
        &Op::Tanh(a) => unary(grads, a, g, |i| {
            let y = node.value[i];
            1.0 - y * y
        }),
        &Op::Sqrt(a) => unary(grads, a, g, |i| {
            let y = node.value[i];
            if y > 0.0 {
                0.5 / y
            } else {
                0.0
            }
        }),
        &Op::Sin(a) => unary(grads, a, g, |i| val(a)[i].cos()),
        &Op::Cos(a) => unary(grads, a, g, |i| -val(a)[i].sin()),
        &Op::Asin(a) => unary(grads, a, g, |i| {
            let x = val(a)[i];
            if x.abs() < 1.0 {
                1.0 / (1.0 - x * x).sqrt()
            } else {
                0.0
            }
        }),
        &Op::Abs(a) => unary(grads, a, g, |i| {
            let x = val(a)[i];
            if x > 0.0 {
                1.0
            } else if x < 0.0 {
                -1.0
            } else {
                0.0
            }
        }),
        &Op::Atan2(y, x) => {
            let (vy, vx) = (val(y), val(x));
            let denom: Vec<f64> = vy.iter().zip(vx.iter()).map(|(a, b)| a * a + b * b).collect();
            for (i, dst) in accumulate(grads, y, g.len()).iter_mut().enumerate() {
                if denom[i] > 0.0 {
                    *dst += g[i] * vx[i] / denom[i];
                }
            }
            for (i, dst) in accumulate(grads, x, g.len()).iter_mut().enumerate() {
                if denom[i] > 0.0 {
                    *dst -= g[i] * vy[i] / denom[i];
                }
            }
        }
        Op::ConcatCols(parts) => {
            let rows = node.rows;
            let mut offset = 0;
            for &p in parts {
                let pc = nodes[p].cols;
                let gp = accumulate(grads, p, rows * pc);
                for r in 0..rows {
                    for c in 0..pc {
                        gp[r * pc + c] += g[r * node.cols + offset + c];
                    }
                }
                offset += pc;
            }
        }
        &Op::SliceCols(a, start) => {
            let src_cols = nodes[a].cols;
            let ga = accumulate(grads, a, nodes[a].value.len());
            for r in 0..node.rows {
                for c in 0..node.cols {
                    ga[r * src_cols + start + c] += g[r * node.cols + c];
                }
            }
        }
        &Op::Row(a, r) => {
            let cols = node.cols;
            let ga = accumulate(grads, a, nodes[a].value.len());
            for c in 0..cols {
                ga[r * cols + c] += g[c];
            }
        }
        Op::Gather(a, idx) => {
            let ga = accumulate(grads, *a, nodes[*a].value.len());
            for (k, &i) in idx.iter().enumerate() {
                ga[i] += g[k];
            }
        }
        &Op::Sum(a) => {
            for dst in accumulate(grads, a, nodes[a].value.len()).iter_mut() {
                *dst += g[0];
            }
        }
    }
}

fn unary(grads: &mut [Option<Vec<f64>>], a: usize, g: &[f64], d: impl Fn(usize) -> f64) {
    let ga = accumulate(grads, a, g.len());
    for (i, dst) in ga.iter_mut().enumerate() {
        *dst += g[i] * d(i);
    }
}

/// Result of a backward pass.
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Vec<f64>>>,
}

impl Gradients {
    /// Gradient with respect to `v`; `None` when `v` does not influence the
    /// output.
    pub fn wrt(&self, v: Var<'_>) -> Option<&[f64]> {
        self.grads.get(v.id).and_then(|g| g.as_deref())
    }
}

impl<'t> Var<'t> {
    pub fn tape(&self) -> &'t Tape {
        self.tape
    }

    pub fn shape(&self) -> (usize, usize) {
        let n = &self.tape.nodes.borrow()[self.id];
        (n.rows, n.cols)
    }

    pub fn rows(&self) -> usize {
        self.shape().0
    }

    pub fn cols(&self) -> usize {
        self.shape().1
    }

    pub fn value(&self) -> Vec<f64> {
        self.tape.nodes.borrow()[self.id].value.clone()
    }

    pub fn scalar(&self) -> f64 {
        let nodes = self.tape.nodes.borrow();
        let n = &nodes[self.id];
        assert_eq!(n.value.len(), 1, "scalar() on a {}x{} value", n.rows, n.cols);
        n.value[0]
    }

    fn map(self, f: impl Fn(f64) -> f64, op: Op) -> Var<'t> {
        let (rows, cols, value) = {
            let n = &self.tape.nodes.borrow()[self.id];
            (n.rows, n.cols, n.value.iter().map(|&x| f(x)).collect())
        };
        self.tape.push(rows, cols, value, op)
    }

    fn zip(self, other: Var<'t>, f: impl Fn(f64, f64) -> f64, op: Op) -> Var<'t> {
        let (rows, cols, value) = {
            let nodes = self.tape.nodes.borrow();
            let (a, b) = (&nodes[self.id], &nodes[other.id]);
            assert!(
                a.rows == b.rows && a.cols == b.cols,
                "elementwise shape mismatch {}x{} vs {}x{}",
                a.rows,
                a.cols,
                b.rows,
                b.cols
            );
            let v = a.value.iter().zip(&b.value).map(|(&x, &y)| f(x, y)).collect();
            (a.rows, a.cols, v)
        };
        self.tape.push(rows, cols, value, op)
    }

    pub fn affine(self, scale: f64, shift: f64) -> Var<'t> {
        self.map(move |x| scale * x + shift, Op::Affine(self.id, scale))
    }

    pub fn matmul(self, rhs: Var<'t>) -> Var<'t> {
        let (m, n, value) = {
            let nodes = self.tape.nodes.borrow();
            let (a, b) = (&nodes[self.id], &nodes[rhs.id]);
            assert_eq!(a.cols, b.rows, "matmul {}x{} by {}x{}", a.rows, a.cols, b.rows, b.cols);
            let (m, k, n) = (a.rows, a.cols, b.cols);
            let mut out = vec![0.0; m * n];
            for i in 0..m {
                for p in 0..k {
                    let av = a.value[i * k + p];
                    if av == 0.0 {
                        continue;
                    }
                    let brow = &b.value[p * n..(p + 1) * n];
                    for (o, &bv) in out[i * n..(i + 1) * n].iter_mut().zip(brow) {
                        *o += av * bv;
                    }
                }
            }
            (m, n, out)
        };
        self.tape.push(m, n, value, Op::MatMul(self.id, rhs.id))
    }

    /// Adds a `1 x n` row to every row of `self`.
    pub fn add_row(self, row: Var<'t>) -> Var<'t> {
        let (rows, cols, value) = {
            let nodes = self.tape.nodes.borrow();
            let (a, b) = (&nodes[self.id], &nodes[row.id]);
            assert!(b.rows == 1 && b.cols == a.cols, "bias shape mismatch");
            let v = a
                .value
                .iter()
                .enumerate()
                .map(|(i, &x)| x + b.value[i % a.cols])
                .collect();
            (a.rows, a.cols, v)
        };
        self.tape.push(rows, cols, value, Op::AddRow(self.id, row.id))
    }

    pub fn elu(self) -> Var<'t> {
        self.map(|x| if x > 0.0 { x } else { x.exp_m1() }, Op::Elu(self.id))
    }

    pub fn sigmoid(self) -> Var<'t> {
        self.map(|x| 1.0 / (1.0 + (-x).exp()), Op::Sigmoid(self.id))
    }

    pub fn tanh(self) -> Var<'t> {
        self.map(f64::tanh, Op::Tanh(self.id))
    }

    pub fn abs(self) -> Var<'t> {
        self.map(f64::abs, Op::Abs(self.id))
    }

    pub fn sum(self) -> Var<'t> {
        let s: f64 = self.tape.nodes.borrow()[self.id].value.iter().sum();
        self.tape.push(1, 1, vec![s], Op::Sum(self.id))
    }

    pub fn square(self) -> Var<'t> {
        self * self
    }

    /// Columns `start..start + len`.
    pub fn slice_cols(self, start: usize, len: usize) -> Var<'t> {
        let (rows, value) = {
            let n = &self.tape.nodes.borrow()[self.id];
            assert!(start + len <= n.cols, "column slice out of range");
            let mut v = Vec::with_capacity(n.rows * len);
            for r in 0..n.rows {
                v.extend_from_slice(&n.value[r * n.cols + start..r * n.cols + start + len]);
            }
            (n.rows, v)
        };
        self.tape.push(rows, len, value, Op::SliceCols(self.id, start))
    }

    /// Row `r` as a `1 x cols` matrix.
    pub fn row(self, r: usize) -> Var<'t> {
        let (cols, value) = {
            let n = &self.tape.nodes.borrow()[self.id];
            assert!(r < n.rows, "row out of range");
            (n.cols, n.value[r * n.cols..(r + 1) * n.cols].to_vec())
        };
        self.tape.push(1, cols, value, Op::Row(self.id, r))
    }

    /// Flat elements `idx` as a `1 x idx.len()` row.
    pub fn gather(self, idx: &[usize]) -> Var<'t> {
        let value = {
            let n = &self.tape.nodes.borrow()[self.id];
            idx.iter().map(|&i| n.value[i]).collect()
        };
        self.tape.push(1, idx.len(), value, Op::Gather(self.id, idx.to_vec()))
    }

    /// Flat element `i` as a scalar.
    pub fn elem(self, i: usize) -> Var<'t> {
        self.gather(&[i])
    }

    /// Splits a row into scalars.
    pub fn scalars(self) -> Vec<Var<'t>> {
        let len = self.tape.nodes.borrow()[self.id].value.len();
        (0..len).map(|i| self.elem(i)).collect()
    }
}

impl<'t> Add for Var<'t> {
    type Output = Var<'t>;
    fn add(self, rhs: Var<'t>) -> Var<'t> {
        self.zip(rhs, |a, b| a + b, Op::Add(self.id, rhs.id))
    }
}

impl<'t> Sub for Var<'t> {
    type Output = Var<'t>;
    fn sub(self, rhs: Var<'t>) -> Var<'t> {
        self.zip(rhs, |a, b| a - b, Op::Sub(self.id, rhs.id))
    }
}

impl<'t> Mul for Var<'t> {
    type Output = Var<'t>;
    fn mul(self, rhs: Var<'t>) -> Var<'t> {
        self.zip(rhs, |a, b| a * b, Op::Mul(self.id, rhs.id))
    }
}

impl<'t> Div for Var<'t> {
    type Output = Var<'t>;
    fn div(self, rhs: Var<'t>) -> Var<'t> {
        self.zip(rhs, |a, b| a / b, Op::Div(self.id, rhs.id))
    }
}

impl<'t> Neg for Var<'t> {
    type Output = Var<'t>;
    fn neg(self) -> Var<'t> {
        self.affine(-1.0, 0.0)
    }
}

impl<'t> Add<f64> for Var<'t> {
    type Output = Var<'t>;
    fn add(self, c: f64) -> Var<'t> {
        self.affine(1.0, c)
    }
}

impl<'t> Sub<f64> for Var<'t> {
    type Output = Var<'t>;
    fn sub(self, c: f64) -> Var<'t> {
        self.affine(1.0, -c)
    }
}

impl<'t> Mul<f64> for Var<'t> {
    type Output = Var<'t>;
    fn mul(self, c: f64) -> Var<'t> {
        self.affine(c, 0.0)
    }
}

impl<'t> Div<f64> for Var<'t> {
    type Output = Var<'t>;
    fn div(self, c: f64) -> Var<'t> {
        self.affine(1.0 / c, 0.0)
    }
}

impl<'t> Real for Var<'t> {
    fn lift(self, v: f64) -> Self {
        self.tape.scalar(v)
    }

    fn val(self) -> f64 {
        self.scalar()
    }

    fn sqrt_r(self) -> Self {
        self.map(|x| x.max(0.0).sqrt(), Op::Sqrt(self.id))
    }

    fn sin_r(self) -> Self {
        self.map(f64::sin, Op::Sin(self.id))
    }

    fn cos_r(self) -> Self {
        self.map(f64::cos, Op::Cos(self.id))
    }

    fn asin_r(self) -> Self {
        self.map(|x| x.clamp(-1.0, 1.0).asin(), Op::Asin(self.id))
    }

    fn atan2_r(self, x: Self) -> Self {
        self.zip(x, f64::atan2, Op::Atan2(self.id, x.id))
    }

    fn abs_r(self) -> Self {
        self.abs()
    }
}
