//! Reverse-mode differentiation tape.
//!
//! Operations are recorded in topological order as they execute; the
//! backward pass walks the record once in reverse, accumulating gradients
//! into each parent. A tape and its variables belong to a single thread of
//! execution; independent tapes can run in parallel.

use super::tensor::Tensor;

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Div(Var, Var),
    MatMul(Var, Var),
    Transpose(Var),
    ConcatRows(Vec<Var>),
    ConcatCols(Vec<Var>),
    SliceRows(Var, usize, usize),
    SliceCols(Var, usize, usize),
    Relu(Var),
    Softplus(Var),
    Exp(Var),
    Log(Var),
    Scale(Var, f64),
    AddScalar(Var),
    AddRow(Var, Var),
    MulRow(Var, Var),
    LayerNorm(Var, f64),
    MaskedSoftmax(Var, Option<Vec<bool>>, Vec<usize>),
    SumAll(Var),
    MeanAll(Var),
}

struct Node {
    value: Tensor,
    op: Op,
    grad: Option<Tensor>,
}

/// The recording tape.
#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
    nonfinite: Option<String>,
}

fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn softplus_stable(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// First op that produced a non-finite value, if any.
    pub fn first_nonfinite(&self) -> Option<&str> {
        self.nonfinite.as_deref()
    }

    /// Clears the recorded graph and gradients.
    pub fn reset(&mut self) {
        self.nodes.clear();
        self.nonfinite = None;
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    /// Gradient accumulated at `v` by the last [`Tape::backward`] call.
    /// Zero if the loss does not depend on `v`.
    pub fn grad(&self, v: Var) -> Tensor {
        let node = &self.nodes[v.0];
        node.grad
            .clone()
            .unwrap_or_else(|| Tensor::zeros(node.value.rows(), node.value.cols()))
    }

    fn push(&mut self, value: Tensor, op: Op) -> Var {
        if self.nonfinite.is_none() && !value.all_finite() {
            self.nonfinite = Some(format!("{op:?} produced a non-finite value"));
        }
        self.nodes.push(Node {
            value,
            op,
            grad: None,
        });
        Var(self.nodes.len() - 1)
    }

    /// Registers an input or parameter tensor.
    pub fn leaf(&mut self, t: Tensor) -> Var {
        self.push(t, Op::Leaf)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a).zip(self.value(b), |x, y| x + y);
        self.push(v, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a).zip(self.value(b), |x, y| x - y);
        self.push(v, Op::Sub(a, b))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a).zip(self.value(b), |x, y| x * y);
        self.push(v, Op::Mul(a, b))
    }

    pub fn div(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a).zip(self.value(b), |x, y| x / y);
        self.push(v, Op::Div(a, b))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a).matmul(self.value(b));
        self.push(v, Op::MatMul(a, b))
    }

    pub fn transpose(&mut self, a: Var) -> Var {
        let v = self.value(a).transpose();
        self.push(v, Op::Transpose(a))
    }

    pub fn concat_rows(&mut self, parts: &[Var]) -> Var {
        assert!(!parts.is_empty());
        let cols = self.value(parts[0]).cols();
        let mut data = Vec::new();
        let mut rows = 0;
        for &p in parts {
            let t = self.value(p);
            assert_eq!(t.cols(), cols, "concat_rows column mismatch");
            rows += t.rows();
            data.extend_from_slice(t.data());
        }
        self.push(Tensor::from_vec(rows, cols, data), Op::ConcatRows(parts.to_vec()))
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Var {
        assert!(!parts.is_empty());
        let rows = self.value(parts[0]).rows();
        let total_cols: usize = parts.iter().map(|&p| self.value(p).cols()).sum();
        let mut data = vec![0.0; rows * total_cols];
        let mut offset = 0;
        for &p in parts {
            let t = self.value(p);
            assert_eq!(t.rows(), rows, "concat_cols row mismatch");
            for r in 0..rows {
                let dst = r * total_cols + offset;
                data[dst..dst + t.cols()].copy_from_slice(t.row_slice(r));
            }
            offset += t.cols();
        }
        self.push(
            Tensor::from_vec(rows, total_cols, data),
            Op::ConcatCols(parts.to_vec()),
        )
    }

    pub fn slice_rows(&mut self, a: Var, start: usize, end: usize) -> Var {
        let t = self.value(a);
        assert!(start < end && end <= t.rows(), "slice_rows out of range");
        let cols = t.cols();
        let data = t.data()[start * cols..end * cols].to_vec();
        self.push(
            Tensor::from_vec(end - start, cols, data),
            Op::SliceRows(a, start, end),
        )
    }

    pub fn slice_cols(&mut self, a: Var, start: usize, end: usize) -> Var {
        let t = self.value(a);
        assert!(start < end && end <= t.cols(), "slice_cols out of range");
        let rows = t.rows();
        let mut data = Vec::with_capacity(rows * (end - start));
        for r in 0..rows {
            data.extend_from_slice(&t.row_slice(r)[start..end]);
        }
        self.push(
            Tensor::from_vec(rows, end - start, data),
            Op::SliceCols(a, start, end),
        )
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let v = self.value(a).map(|x| x.max(0.0));
        self.push(v, Op::Relu(a))
    }

    pub fn softplus(&mut self, a: Var) -> Var {
        let v = self.value(a).map(softplus_stable);
        self.push(v, Op::Softplus(a))
    }

    pub fn exp(&mut self, a: Var) -> Var {
        let v = self.value(a).map(f64::exp);
        self.push(v, Op::Exp(a))
    }

    pub fn log(&mut self, a: Var) -> Var {
        let v = self.value(a).map(f64::ln);
        self.push(v, Op::Log(a))
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        let v = self.value(a).map(|x| x * c);
        self.push(v, Op::Scale(a, c))
    }

    pub fn add_scalar(&mut self, a: Var, c: f64) -> Var {
        let v = self.value(a).map(|x| x + c);
        self.push(v, Op::AddScalar(a))
    }

    /// Adds a 1xN bias row to every row of an MxN matrix.
    pub fn add_row(&mut self, a: Var, row: Var) -> Var {
        let (m, n) = self.value(a).shape();
        let r = self.value(row);
        assert_eq!(r.shape(), (1, n), "bias row shape mismatch");
        let mut data = self.value(a).data().to_vec();
        for i in 0..m {
            for j in 0..n {
                data[i * n + j] += r.data()[j];
            }
        }
        self.push(Tensor::from_vec(m, n, data), Op::AddRow(a, row))
    }

    /// Multiplies every row of an MxN matrix by a 1xN row (layer-norm gain).
    pub fn mul_row(&mut self, a: Var, row: Var) -> Var {
        let (m, n) = self.value(a).shape();
        let r = self.value(row);
        assert_eq!(r.shape(), (1, n), "gain row shape mismatch");
        let mut data = self.value(a).data().to_vec();
        for i in 0..m {
            for j in 0..n {
                data[i * n + j] *= r.data()[j];
            }
        }
        self.push(Tensor::from_vec(m, n, data), Op::MulRow(a, row))
    }

    /// Row-wise layer normalisation (no affine part; compose with
    /// [`Tape::mul_row`] / [`Tape::add_row`] for gain and bias).
    pub fn layer_norm(&mut self, a: Var, eps: f64) -> Var {
        let t = self.value(a);
        let (m, n) = t.shape();
        let mut data = Vec::with_capacity(m * n);
        for r in 0..m {
            let row = t.row_slice(r);
            let mean = row.iter().sum::<f64>() / n as f64;
            let var = row.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
            let inv = 1.0 / (var + eps).sqrt();
            data.extend(row.iter().map(|x| (x - mean) * inv));
        }
        self.push(Tensor::from_vec(m, n, data), Op::LayerNorm(a, eps))
    }

    /// Row-wise softmax with an optional boolean mask (`true` = excluded).
    /// Masked positions get exactly zero weight; the remaining entries
    /// renormalise. A fully masked row yields zeros and is flagged.
    pub fn masked_softmax(&mut self, a: Var, mask: Option<Vec<bool>>) -> Var {
        let t = self.value(a);
        let (m, n) = t.shape();
        if let Some(mask) = &mask {
            assert_eq!(mask.len(), m * n, "mask length mismatch");
        }
        let mut data = vec![0.0; m * n];
        let mut flagged = Vec::new();
        for r in 0..m {
            let row = t.row_slice(r);
            let masked_at = |j: usize| mask.as_ref().is_some_and(|mk| mk[r * n + j]);
            let mut maxv = f64::NEG_INFINITY;
            for (j, &x) in row.iter().enumerate() {
                if !masked_at(j) && x > maxv {
                    maxv = x;
                }
            }
            if maxv == f64::NEG_INFINITY {
                flagged.push(r);
                continue; // all masked: zeros
            }
            let mut sum = 0.0;
            for (j, &x) in row.iter().enumerate() {
                if !masked_at(j) {
                    let e = (x - maxv).exp();
                    data[r * n + j] = e;
                    sum += e;
                }
            }
            for j in 0..n {
                data[r * n + j] /= sum;
            }
        }
        self.push(
            Tensor::from_vec(m, n, data),
            Op::MaskedSoftmax(a, mask, flagged),
        )
    }

    /// Rows that were fully masked in a [`Tape::masked_softmax`] node.
    pub fn masked_softmax_flags(&self, v: Var) -> &[usize] {
        match &self.nodes[v.0].op {
            Op::MaskedSoftmax(_, _, flagged) => flagged,
            _ => panic!("variable is not a masked_softmax node"),
        }
    }

    pub fn sum_all(&mut self, a: Var) -> Var {
        let s: f64 = self.value(a).data().iter().sum();
        self.push(Tensor::scalar(s), Op::SumAll(a))
    }

    pub fn mean_all(&mut self, a: Var) -> Var {
        let t = self.value(a);
        let s: f64 = t.data().iter().sum::<f64>() / t.len() as f64;
        self.push(Tensor::scalar(s), Op::MeanAll(a))
    }

    fn accum(&mut self, v: Var, delta: Tensor) {
        let node = &mut self.nodes[v.0];
        match &mut node.grad {
            Some(g) => g.add_assign(&delta),
            None => node.grad = Some(delta),
        }
    }

    /// Propagates gradients from a scalar loss back to every node.
    ///
    /// Panics if `loss` is not scalar.
    pub fn backward(&mut self, loss: Var) {
        assert!(
            self.value(loss).is_scalar(),
            "backward requires a scalar loss, got {:?}",
            self.value(loss).shape()
        );
        self.nodes[loss.0].grad = Some(Tensor::scalar(1.0));
        for i in (0..self.nodes.len()).rev() {
            let g = match &self.nodes[i].grad {
                Some(g) => g.clone(),
                None => continue,
            };
            let op = self.nodes[i].op.clone();
            match op {
                Op::Leaf => {}
                Op::Add(a, b) => {
                    self.accum(a, g.clone());
                    self.accum(b, g);
                }
                Op::Sub(a, b) => {
                    self.accum(a, g.clone());
                    self.accum(b, g.map(|x| -x));
                }
                Op::Mul(a, b) => {
                    let da = g.zip(self.value(b), |gv, bv| gv * bv);
                    let db = g.zip(self.value(a), |gv, av| gv * av);
                    self.accum(a, da);
                    self.accum(b, db);
                }
                Op::Div(a, b) => {
                    let bv = self.value(b).clone();
                    let av = self.value(a).clone();
                    let da = g.zip(&bv, |gv, b| gv / b);
                    let db_data: Vec<f64> = g
                        .data()
                        .iter()
                        .zip(av.data())
                        .zip(bv.data())
                        .map(|((gv, a), b)| -gv * a / (b * b))
                        .collect();
                    self.accum(a, da);
                    self.accum(b, Tensor::from_vec(bv.rows(), bv.cols(), db_data));
                }
                Op::MatMul(a, b) => {
                    let da = g.matmul(&self.value(b).transpose());
                    let db = self.value(a).transpose().matmul(&g);
                    self.accum(a, da);
                    self.accum(b, db);
                }
                Op::Transpose(a) => {
                    self.accum(a, g.transpose());
                }
                Op::ConcatRows(parts) => {
                    let cols = g.cols();
                    let mut start = 0;
                    for p in parts {
                        let rows = self.value(p).rows();
                        let data = g.data()[start * cols..(start + rows) * cols].to_vec();
                        self.accum(p, Tensor::from_vec(rows, cols, data));
                        start += rows;
                    }
                }
                Op::ConcatCols(parts) => {
                    let rows = g.rows();
                    let total = g.cols();
                    let mut offset = 0;
                    for p in parts {
                        let cols = self.value(p).cols();
                        let mut data = Vec::with_capacity(rows * cols);
                        for r in 0..rows {
                            let src = r * total + offset;
                            data.extend_from_slice(&g.data()[src..src + cols]);
                        }
                        self.accum(p, Tensor::from_vec(rows, cols, data));
                        offset += cols;
                    }
                }
                Op::SliceRows(a, start, _end) => {
                    let (rows, cols) = self.value(a).shape();
                    let mut data = vec![0.0; rows * cols];
                    data[start * cols..start * cols + g.len()].copy_from_slice(g.data());
                    self.accum(a, Tensor::from_vec(rows, cols, data));
                }
                Op::SliceCols(a, start, end) => {
                    let (rows, cols) = self.value(a).shape();
                    let mut data = vec![0.0; rows * cols];
                    for r in 0..rows {
                        for (j, c) in (start..end).enumerate() {
                            data[r * cols + c] = g.get(r, j);
                        }
                    }
                    self.accum(a, Tensor::from_vec(rows, cols, data));
                }
                Op::Relu(a) => {
                    let da = g.zip(self.value(a), |gv, x| if x > 0.0 { gv } else { 0.0 });
                    self.accum(a, da);
                }
                Op::Softplus(a) => {
                    let da = g.zip(self.value(a), |gv, x| gv * logistic(x));
                    self.accum(a, da);
                }
                Op::Exp(a) => {
                    let da = g.zip(&self.nodes[i].value, |gv, ex| gv * ex);
                    self.accum(a, da);
                }
                Op::Log(a) => {
                    let da = g.zip(self.value(a), |gv, x| gv / x);
                    self.accum(a, da);
                }
                Op::Scale(a, c) => {
                    self.accum(a, g.map(|x| x * c));
                }
                Op::AddScalar(a) => {
                    self.accum(a, g);
                }
                Op::AddRow(a, row) => {
                    let n = g.cols();
                    let mut row_grad = vec![0.0; n];
                    for r in 0..g.rows() {
                        for j in 0..n {
                            row_grad[j] += g.get(r, j);
                        }
                    }
                    self.accum(a, g);
                    self.accum(row, Tensor::from_vec(1, n, row_grad));
                }
                Op::MulRow(a, row) => {
                    let n = g.cols();
                    let rv = self.value(row).clone();
                    let av = self.value(a).clone();
                    let mut da = g.clone();
                    for r in 0..g.rows() {
                        for j in 0..n {
                            let v = da.get(r, j) * rv.data()[j];
                            da.set(r, j, v);
                        }
                    }
                    let mut row_grad = vec![0.0; n];
                    for r in 0..g.rows() {
                        for j in 0..n {
                            row_grad[j] += g.get(r, j) * av.get(r, j);
                        }
                    }
                    self.accum(a, da);
                    self.accum(row, Tensor::from_vec(1, n, row_grad));
                }
                Op::LayerNorm(a, eps) => {
                    let x = self.value(a).clone();
                    let (m, n) = x.shape();
                    let y = self.nodes[i].value.clone();
                    let mut da = Tensor::zeros(m, n);
                    for r in 0..m {
                        let row = x.row_slice(r);
                        let mean = row.iter().sum::<f64>() / n as f64;
                        let var = row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
                        let inv = 1.0 / (var + eps).sqrt();
                        let g_row = g.row_slice(r);
                        let y_row = y.row_slice(r);
                        let g_mean = g_row.iter().sum::<f64>() / n as f64;
                        let gy_mean = g_row
                            .iter()
                            .zip(y_row)
                            .map(|(gv, yv)| gv * yv)
                            .sum::<f64>()
                            / n as f64;
                        for j in 0..n {
                            da.set(r, j, inv * (g_row[j] - g_mean - y_row[j] * gy_mean));
                        }
                    }
                    self.accum(a, da);
                }
                Op::MaskedSoftmax(a, mask, flagged) => {
                    let y = self.nodes[i].value.clone();
                    let (m, n) = y.shape();
                    let mut da = Tensor::zeros(m, n);
                    for r in 0..m {
                        if flagged.contains(&r) {
                            continue;
                        }
                        let y_row = y.row_slice(r);
                        let g_row = g.row_slice(r);
                        let dot: f64 = y_row.iter().zip(g_row).map(|(yv, gv)| yv * gv).sum();
                        for j in 0..n {
                            let masked = mask.as_ref().is_some_and(|mk| mk[r * n + j]);
                            if !masked {
                                da.set(r, j, y_row[j] * (g_row[j] - dot));
                            }
                        }
                    }
                    self.accum(a, da);
                }
                Op::SumAll(a) => {
                    let (rows, cols) = self.value(a).shape();
                    self.accum(a, Tensor::full(rows, cols, g.item()));
                }
                Op::MeanAll(a) => {
                    let (rows, cols) = self.value(a).shape();
                    let v = g.item() / (rows * cols) as f64;
                    self.accum(a, Tensor::full(rows, cols, v));
                }
            }
        }
    }
}

/// Scaled dot-product attention: `softmax(Q K^T / sqrt(d_k)) V` with an
/// optional pre-softmax mask (`true` = excluded), one row per query.
pub fn attention(tape: &mut Tape, q: Var, k: Var, v: Var, mask: Option<&[bool]>) -> Var {
    let d_k = tape.value(k).cols();
    assert_eq!(
        tape.value(q).cols(),
        d_k,
        "query dimension must match key dimension"
    );
    assert_eq!(
        tape.value(k).rows(),
        tape.value(v).rows(),
        "key/value row count mismatch"
    );
    let kt = tape.transpose(k);
    let logits = tape.matmul(q, kt);
    let scaled = tape.scale(logits, 1.0 / (d_k as f64).sqrt());
    let weights = tape.masked_softmax(scaled, mask.map(|m| m.to_vec()));
    tape.matmul(weights, v)
}
