//! Operation tape for reverse-mode differentiation.
//!
//! A [`Tape`] lives for one forward pass. Every operation appends a node
//! holding its output value plus whatever it needs for the backward sweep;
//! [`Tape::backward`] then walks the nodes in reverse, accumulating
//! gradients only for nodes that depend on a trainable leaf.

use super::array::{matmul_nn, matmul_nt, matmul_tn};
use super::{Array, NumericsError, Real, Result};

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(pub(crate) usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// User-defined differentiable operation. The forward value is computed by
/// the caller; the op only supplies the vector–Jacobian product.
pub trait CustomOp<T: Real> {
    fn backward(&self, inputs: &[&Array<T>], output: &Array<T>, grad_out: &Array<T>) -> Vec<Option<Array<T>>>;
}

enum Op<T: Real> {
    Leaf,
    Affine { x: Var, w: Var, b: Option<Var> },
    MatMul { a: Var, b: Var },
    MatMulNT { a: Var, b: Var },
    Add { a: Var, b: Var },
    Mul { a: Var, b: Var },
    AddRow { a: Var, row: Var },
    MulRow { a: Var, row: Var },
    Scale { a: Var, s: T },
    Softmax { a: Var },
    LayerNorm { x: Var, gain: Var, bias: Var, mean: Vec<T>, rstd: Vec<T> },
    Gelu { x: Var },
    Mask { x: Var, mask: Vec<T> },
    ConcatRows { parts: Vec<Var> },
    SliceRows { a: Var, start: usize },
    ConcatCols { parts: Vec<Var> },
    SliceCols { a: Var, start: usize },
    SumAll { a: Var },
    Mse { pred: Var, target: Array<T> },
    Custom { inputs: Vec<Var>, op: Box<dyn CustomOp<T>> },
}

struct Node<T: Real> {
    value: Array<T>,
    op: Op<T>,
    requires_grad: bool,
}

pub struct Tape<T: Real> {
    nodes: Vec<Node<T>>,
}

impl<T: Real> Default for Tape<T> {
    fn default() -> Self {
        Self::new()
    }
}

fn shape_err<V>(msg: String) -> Result<V> {
    Err(NumericsError::Shape(msg))
}

/// Layer-norm variance epsilon.
pub const LAYER_NORM_EPS: f64 = 1e-5;

/// `tanh`-approximated GELU and its derivative.
fn gelu<T: Real>(x: T) -> (T, T) {
    let c = T::lit((2.0 / std::f64::consts::PI).sqrt());
    let k = T::lit(0.044715);
    let half = T::lit(0.5);
    let one = T::one();
    let u = c * (x + k * x * x * x);
    let t = u.tanh();
    let y = half * x * (one + t);
    let dy = half * (one + t) + half * x * (one - t * t) * c * (one + T::lit(3.0) * k * x * x);
    (y, dy)
}

impl<T: Real> Tape<T> {
    pub fn new() -> Self {
        Self { nodes: Vec::new() }
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

    fn push(&mut self, value: Array<T>, op: Op<T>, inputs: &[Var]) -> Var {
        let requires_grad = inputs.iter().any(|v| self.nodes[v.0].requires_grad);
        self.nodes.push(Node { value, op, requires_grad });
        Var(self.nodes.len() - 1)
    }

    /// Trainable leaf: gradients flow into it.
    pub fn param(&mut self, value: Array<T>) -> Var {
        self.nodes.push(Node { value, op: Op::Leaf, requires_grad: true });
        Var(self.nodes.len() - 1)
    }

    /// Non-trainable leaf.
    pub fn constant(&mut self, value: Array<T>) -> Var {
        self.nodes.push(Node { value, op: Op::Leaf, requires_grad: false });
        Var(self.nodes.len() - 1)
    }

    fn dims2(&self, v: Var) -> (usize, usize) {
        let a = &self.nodes[v.0].value;
        (a.rows(), a.cols())
    }

    /// `y = x Wᵀ + b` with `x: [n, d_in]`, `W: [d_out, d_in]`, `b: [d_out]`.
    pub fn affine(&mut self, x: Var, w: Var, b: Option<Var>) -> Result<Var> {
        let (n, din) = self.dims2(x);
        let ws = self.value(w).shape().to_vec();
        if ws.len() != 2 || ws[1] != din {
            return shape_err(format!("affine: x is [{n},{din}] but W is {ws:?}"));
        }
        let dout = ws[0];
        let mut y = matmul_nt(self.value(x).data(), self.value(w).data(), n, din, dout);
        if let Some(b) = b {
            let bv = self.value(b);
            if bv.len() != dout {
                return shape_err(format!("affine: bias has {} entries, expected {dout}", bv.len()));
            }
            for row in y.chunks_mut(dout) {
                for (o, &bb) in row.iter_mut().zip(bv.data()) {
                    *o += bb;
                }
            }
        }
        let value = Array::new(vec![n, dout], y)?;
        let mut inputs = vec![x, w];
        inputs.extend(b);
        Ok(self.push(value, Op::Affine { x, w, b }, &inputs))
    }

    /// `a[n,k] · b[k,m]`.
    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (n, k) = self.dims2(a);
        let (k2, m) = self.dims2(b);
        if k != k2 {
            return shape_err(format!("matmul: [{n},{k}] x [{k2},{m}]"));
        }
        let y = matmul_nn(self.value(a).data(), self.value(b).data(), n, k, m);
        Ok(self.push(Array::new(vec![n, m], y)?, Op::MatMul { a, b }, &[a, b]))
    }

    /// `a[n,k] · b[m,k]ᵀ`.
    pub fn matmul_nt(&mut self, a: Var, b: Var) -> Result<Var> {
        let (n, k) = self.dims2(a);
        let (m, k2) = self.dims2(b);
        if k != k2 {
            return shape_err(format!("matmul_nt: [{n},{k}] x [{m},{k2}]ᵀ"));
        }
        let y = matmul_nt(self.value(a).data(), self.value(b).data(), n, k, m);
        Ok(self.push(Array::new(vec![n, m], y)?, Op::MatMulNT { a, b }, &[a, b]))
    }

    fn same_shape(&self, a: Var, b: Var, what: &str) -> Result<()> {
        let (sa, sb) = (self.value(a).shape(), self.value(b).shape());
        if sa != sb {
            return shape_err(format!("{what}: {sa:?} vs {sb:?}"));
        }
        Ok(())
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape(a, b, "add")?;
        let mut v = self.value(a).clone();
        v.add_assign(self.value(b));
        Ok(self.push(v, Op::Add { a, b }, &[a, b]))
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape(a, b, "mul")?;
        let data = self.value(a).data().iter().zip(self.value(b).data()).map(|(&x, &y)| x * y).collect();
        let v = Array::new(self.value(a).shape().to_vec(), data)?;
        Ok(self.push(v, Op::Mul { a, b }, &[a, b]))
    }

    fn row_broadcast(&self, a: Var, row: Var, what: &str) -> Result<usize> {
        let d = self.value(a).cols();
        if self.value(row).len() != d {
            return shape_err(format!("{what}: row has {} entries, expected {d}", self.value(row).len()));
        }
        Ok(d)
    }

    /// `a[n,d] + row[d]` broadcast over rows.
    pub fn add_row(&mut self, a: Var, row: Var) -> Result<Var> {
        let d = self.row_broadcast(a, row, "add_row")?;
        let mut v = self.value(a).clone();
        let r = self.value(row).data().to_vec();
        for chunk in v.data_mut().chunks_mut(d) {
            for (o, &x) in chunk.iter_mut().zip(&r) {
                *o += x;
            }
        }
        Ok(self.push(v, Op::AddRow { a, row }, &[a, row]))
    }

    /// `a[n,d] ⊙ row[d]` broadcast over rows.
    pub fn mul_row(&mut self, a: Var, row: Var) -> Result<Var> {
        let d = self.row_broadcast(a, row, "mul_row")?;
        let mut v = self.value(a).clone();
        let r = self.value(row).data().to_vec();
        for chunk in v.data_mut().chunks_mut(d) {
            for (o, &x) in chunk.iter_mut().zip(&r) {
                *o *= x;
            }
        }
        Ok(self.push(v, Op::MulRow { a, row }, &[a, row]))
    }

    pub fn scale(&mut self, a: Var, s: T) -> Var {
        let v = self.value(a).map(|x| x * s);
        self.push(v, Op::Scale { a, s }, &[a])
    }

    /// Row-wise softmax, computed with max subtraction.
    pub fn softmax_rows(&mut self, a: Var) -> Var {
        let src = self.value(a);
        let d = src.cols();
        let mut out = src.clone();
        for row in out.data_mut().chunks_mut(d) {
            let max = row.iter().copied().fold(T::neg_infinity(), T::max);
            let mut sum = T::zero();
            for v in row.iter_mut() {
                *v = (*v - max).exp();
                sum += *v;
            }
            for v in row.iter_mut() {
                *v /= sum;
            }
        }
        self.push(out, Op::Softmax { a }, &[a])
    }

    /// Per-row normalization with `ε = 1e-5` inside the square root, then gain and bias.
    pub fn layer_norm(&mut self, x: Var, gain: Var, bias: Var) -> Result<Var> {
        let d = self.row_broadcast(x, gain, "layer_norm gain")?;
        self.row_broadcast(x, bias, "layer_norm bias")?;
        let eps = T::lit(LAYER_NORM_EPS);
        let dn = T::lit(d as f64);
        let xv = self.value(x);
        let g = self.value(gain).data();
        let b = self.value(bias).data();
        let mut out = xv.clone();
        let mut means = Vec::with_capacity(xv.rows());
        let mut rstds = Vec::with_capacity(xv.rows());
        for row in out.data_mut().chunks_mut(d) {
            let mean = row.iter().copied().sum::<T>() / dn;
            let var = row.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() / dn;
            let rstd = T::one() / (var + eps).sqrt();
            for (j, v) in row.iter_mut().enumerate() {
                *v = (*v - mean) * rstd * g[j] + b[j];
            }
            means.push(mean);
            rstds.push(rstd);
        }
        Ok(self.push(out, Op::LayerNorm { x, gain, bias, mean: means, rstd: rstds }, &[x, gain, bias]))
    }

    pub fn gelu(&mut self, x: Var) -> Var {
        let v = self.value(x).map(|v| gelu(v).0);
        self.push(v, Op::Gelu { x }, &[x])
    }

    /// Multiplies by a fixed mask (already scaled); used for dropout.
    pub fn mask(&mut self, x: Var, mask: Vec<T>) -> Result<Var> {
        if mask.len() != self.value(x).len() {
            return shape_err("mask length mismatch".into());
        }
        let data = self.value(x).data().iter().zip(&mask).map(|(&a, &m)| a * m).collect();
        let v = Array::new(self.value(x).shape().to_vec(), data)?;
        Ok(self.push(v, Op::Mask { x, mask }, &[x]))
    }

    /// Stacks rank-2 arrays with equal column counts.
    pub fn concat_rows(&mut self, parts: &[Var]) -> Result<Var> {
        let d = self.value(parts[0]).cols();
        let mut data = Vec::new();
        let mut n = 0;
        for &p in parts {
            let v = self.value(p);
            if v.cols() != d {
                return shape_err("concat_rows: column mismatch".into());
            }
            n += v.rows();
            data.extend_from_slice(v.data());
        }
        let v = Array::new(vec![n, d], data)?;
        Ok(self.push(v, Op::ConcatRows { parts: parts.to_vec() }, parts))
    }

    pub fn slice_rows(&mut self, a: Var, start: usize, len: usize) -> Result<Var> {
        let (n, d) = self.dims2(a);
        if start + len > n {
            return shape_err(format!("slice_rows {start}+{len} > {n}"));
        }
        let data = self.value(a).data()[start * d..(start + len) * d].to_vec();
        Ok(self.push(Array::new(vec![len, d], data)?, Op::SliceRows { a, start }, &[a]))
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var> {
        let n = self.value(parts[0]).rows();
        if parts.iter().any(|&p| self.value(p).rows() != n) {
            return shape_err("concat_cols: row mismatch".into());
        }
        let total: usize = parts.iter().map(|&p| self.value(p).cols()).sum();
        let mut data = Vec::with_capacity(n * total);
        for i in 0..n {
            for &p in parts {
                data.extend_from_slice(self.value(p).row(i));
            }
        }
        let v = Array::new(vec![n, total], data)?;
        Ok(self.push(v, Op::ConcatCols { parts: parts.to_vec() }, parts))
    }

    pub fn slice_cols(&mut self, a: Var, start: usize, len: usize) -> Result<Var> {
        let (n, d) = self.dims2(a);
        if start + len > d {
            return shape_err(format!("slice_cols {start}+{len} > {d}"));
        }
        let src = self.value(a);
        let mut data = Vec::with_capacity(n * len);
        for i in 0..n {
            data.extend_from_slice(&src.row(i)[start..start + len]);
        }
        Ok(self.push(Array::new(vec![n, len], data)?, Op::SliceCols { a, start }, &[a]))
    }

    pub fn sum_all(&mut self, a: Var) -> Var {
        let s = self.value(a).data().iter().copied().sum();
        self.push(Array::scalar(s), Op::SumAll { a }, &[a])
    }

    /// Sum over columns of the per-column mean squared error:
    /// `Σ_c (1/n) Σ_i (pred_ic − target_ic)²`.
    pub fn mse_columns(&mut self, pred: Var, target: Array<T>) -> Result<Var> {
        if self.value(pred).shape() != target.shape() {
            return shape_err(format!("mse: prediction {:?} vs target {:?}", self.value(pred).shape(), target.shape()));
        }
        let n = T::lit(self.value(pred).rows() as f64);
        let s = self.value(pred).data().iter().zip(target.data()).map(|(&p, &t)| (p - t) * (p - t)).sum::<T>() / n;
        Ok(self.push(Array::scalar(s), Op::Mse { pred, target }, &[pred]))
    }

    pub fn custom(&mut self, inputs: &[Var], value: Array<T>, op: Box<dyn CustomOp<T>>) -> Var {
        self.push(value, Op::Custom { inputs: inputs.to_vec(), op }, inputs)
    }

    /// Reverse sweep from a scalar output.
    pub fn backward(&self, out: Var) -> Result<Gradients<T>> {
        if self.value(out).len() != 1 {
            return shape_err("backward needs a scalar output".into());
        }
        let mut grads: Vec<Option<Array<T>>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[out.0] = Some(Array::full(self.value(out).shape(), T::one()));
        for idx in (0..=out.0).rev() {
            let node = &self.nodes[idx];
            if !node.requires_grad {
                continue;
            }
            let Some(g) = grads[idx].take() else { continue };
            self.backprop_node(node, &g, &mut grads);
            grads[idx] = Some(g);
        }
        Ok(Gradients { grads })
    }

    fn wants(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    fn accumulate(&self, grads: &mut [Option<Array<T>>], v: Var, delta: Array<T>) {
        if !self.wants(v) {
            return;
        }
        match &mut grads[v.0] {
            Some(existing) => existing.add_assign(&delta),
            slot => *slot = Some(delta),
        }
    }

    fn backprop_node(&self, node: &Node<T>, g: &Array<T>, grads: &mut [Option<Array<T>>]) {
        let shaped = |like: Var, data: Vec<T>| {
            Array::new(self.value(like).shape().to_vec(), data).expect("gradient matches input shape")
        };
        match &node.op {
            Op::Leaf => {}
            Op::Affine { x, w, b } => {
                let (n, din) = self.dims2(*x);
                let dout = g.cols();
                if self.wants(*x) {
                    let dx = matmul_nn(g.data(), self.value(*w).data(), n, dout, din);
                    self.accumulate(grads, *x, shaped(*x, dx));
                }
                if self.wants(*w) {
                    let dw = matmul_tn(g.data(), self.value(*x).data(), n, dout, din);
                    self.accumulate(grads, *w, shaped(*w, dw));
                }
                if let Some(b) = b {
                    if self.wants(*b) {
                        let mut db = vec![T::zero(); dout];
                        for row in g.data().chunks(dout) {
                            for (o, &v) in db.iter_mut().zip(row) {
                                *o += v;
                            }
                        }
                        self.accumulate(grads, *b, shaped(*b, db));
                    }
                }
            }
            Op::MatMul { a, b } => {
                let (n, k) = self.dims2(*a);
                let m = g.cols();
                if self.wants(*a) {
                    let da = matmul_nt(g.data(), self.value(*b).data(), n, m, k);
                    self.accumulate(grads, *a, shaped(*a, da));
                }
                if self.wants(*b) {
                    let db = matmul_tn(self.value(*a).data(), g.data(), n, k, m);
                    self.accumulate(grads, *b, shaped(*b, db));
                }
            }
            Op::MatMulNT { a, b } => {
                let (n, k) = self.dims2(*a);
                let m = g.cols();
                if self.wants(*a) {
                    let da = matmul_nn(g.data(), self.value(*b).data(), n, m, k);
                    self.accumulate(grads, *a, shaped(*a, da));
                }
                if self.wants(*b) {
                    let db = matmul_tn(g.data(), self.value(*a).data(), n, m, k);
                    self.accumulate(grads, *b, shaped(*b, db));
                }
            }
            Op::Add { a, b } => {
                self.accumulate(grads, *a, g.clone());
                self.accumulate(grads, *b, g.clone());
            }
            Op::Mul { a, b } => {
                let (av, bv) = (self.value(*a).data(), self.value(*b).data());
                if self.wants(*a) {
                    let da = g.data().iter().zip(bv).map(|(&x, &y)| x * y).collect();
                    self.accumulate(grads, *a, shaped(*a, da));
                }
                if self.wants(*b) {
                    let db = g.data().iter().zip(av).map(|(&x, &y)| x * y).collect();
                    self.accumulate(grads, *b, shaped(*b, db));
                }
            }
            Op::AddRow { a, row } => {
                self.accumulate(grads, *a, g.clone());
                if self.wants(*row) {
                    let d = g.cols();
                    let mut dr = vec![T::zero(); d];
                    for chunk in g.data().chunks(d) {
                        for (o, &v) in dr.iter_mut().zip(chunk) {
                            *o += v;
                        }
                    }
                    self.accumulate(grads, *row, shaped(*row, dr));
                }
            }
            Op::MulRow { a, row } => {
                let d = g.cols();
                let r = self.value(*row).data();
                if self.wants(*a) {
                    let da = g.data().chunks(d).flat_map(|chunk| chunk.iter().zip(r).map(|(&x, &y)| x * y)).collect();
                    self.accumulate(grads, *a, shaped(*a, da));
                }
                if self.wants(*row) {
                    let mut dr = vec![T::zero(); d];
                    for (gc, ac) in g.data().chunks(d).zip(self.value(*a).data().chunks(d)) {
                        for j in 0..d {
                            dr[j] += gc[j] * ac[j];
                        }
                    }
                    self.accumulate(grads, *row, shaped(*row, dr));
                }
            }
            Op::Scale { a, s } => {
                self.accumulate(grads, *a, g.map(|v| v * *s));
            }
            Op::Softmax { a } => {
                let d = g.cols();
                let y = node.value.data();
                let mut da = Vec::with_capacity(y.len());
                for (gr, yr) in g.data().chunks(d).zip(y.chunks(d)) {
                    let dot: T = gr.iter().zip(yr).map(|(&x, &yy)| x * yy).sum();
                    da.extend(gr.iter().zip(yr).map(|(&x, &yy)| yy * (x - dot)));
                }
                self.accumulate(grads, *a, shaped(*a, da));
            }
            Op::LayerNorm { x, gain, bias, mean, rstd } => {
                let d = g.cols();
                let dn = T::lit(d as f64);
                let xv = self.value(*x).data();
                let gv = self.value(*gain).data();
                let mut dx = Vec::with_capacity(xv.len());
                let mut dgain = vec![T::zero(); d];
                let mut dbias = vec![T::zero(); d];
                for (i, (gr, xr)) in g.data().chunks(d).zip(xv.chunks(d)).enumerate() {
                    let xhat: Vec<T> = xr.iter().map(|&v| (v - mean[i]) * rstd[i]).collect();
                    let dxhat: Vec<T> = gr.iter().zip(gv).map(|(&a, &b)| a * b).collect();
                    let m1 = dxhat.iter().copied().sum::<T>() / dn;
                    let m2 = dxhat.iter().zip(&xhat).map(|(&a, &b)| a * b).sum::<T>() / dn;
                    for j in 0..d {
                        dx.push(rstd[i] * (dxhat[j] - m1 - xhat[j] * m2));
                        dgain[j] += gr[j] * xhat[j];
                        dbias[j] += gr[j];
                    }
                }
                self.accumulate(grads, *x, shaped(*x, dx));
                self.accumulate(grads, *gain, shaped(*gain, dgain));
                self.accumulate(grads, *bias, shaped(*bias, dbias));
            }
            Op::Gelu { x } => {
                let dx = g.data().iter().zip(self.value(*x).data()).map(|(&gv, &xv)| gv * gelu(xv).1).collect();
                self.accumulate(grads, *x, shaped(*x, dx));
            }
            Op::Mask { x, mask } => {
                let dx = g.data().iter().zip(mask).map(|(&a, &m)| a * m).collect();
                self.accumulate(grads, *x, shaped(*x, dx));
            }
            Op::ConcatRows { parts } => {
                let mut offset = 0;
                for &p in parts {
                    let len = self.value(p).len();
                    self.accumulate(grads, p, shaped(p, g.data()[offset..offset + len].to_vec()));
                    offset += len;
                }
            }
            Op::SliceRows { a, start } => {
                if self.wants(*a) {
                    let d = g.cols();
                    let mut da = vec![T::zero(); self.value(*a).len()];
                    da[start * d..start * d + g.len()].copy_from_slice(g.data());
                    self.accumulate(grads, *a, shaped(*a, da));
                }
            }
            Op::ConcatCols { parts } => {
                let n = g.rows();
                let mut offset = 0;
                for &p in parts {
                    let w = self.value(p).cols();
                    if self.wants(p) {
                        let mut dp = Vec::with_capacity(n * w);
                        for i in 0..n {
                            dp.extend_from_slice(&g.row(i)[offset..offset + w]);
                        }
                        self.accumulate(grads, p, shaped(p, dp));
                    }
                    offset += w;
                }
            }
            Op::SliceCols { a, start } => {
                if self.wants(*a) {
                    let (n, d) = self.dims2(*a);
                    let w = g.cols();
                    let mut da = vec![T::zero(); n * d];
                    for i in 0..n {
                        da[i * d + start..i * d + start + w].copy_from_slice(g.row(i));
                    }
                    self.accumulate(grads, *a, shaped(*a, da));
                }
            }
            Op::SumAll { a } => {
                let s = g.item();
                self.accumulate(grads, *a, Array::full(self.value(*a).shape(), s));
            }
            Op::Mse { pred, target } => {
                let p = self.value(*pred);
                let k = g.item() * T::lit(2.0) / T::lit(p.rows() as f64);
                let dp = p.data().iter().zip(target.data()).map(|(&a, &b)| k * (a - b)).collect();
                self.accumulate(grads, *pred, shaped(*pred, dp));
            }
            Op::Custom { inputs, op } => {
                let vals: Vec<&Array<T>> = inputs.iter().map(|&v| self.value(v)).collect();
                let gs = op.backward(&vals, &node.value, g);
                for (&v, gi) in inputs.iter().zip(gs) {
                    if let Some(gi) = gi {
                        self.accumulate(grads, v, gi);
                    }
                }
            }
        }
    }
}

/// Result of [`Tape::backward`].
pub struct Gradients<T: Real> {
    grads: Vec<Option<Array<T>>>,
}

impl<T: Real> Gradients<T> {
    pub fn get(&self, v: Var) -> Option<&Array<T>> {
        self.grads[v.0].as_ref()
    }

    /// Gradient for `v`, or zeros shaped like `like` when nothing flowed into it.
    pub fn get_or_zeros(&self, v: Var, like: &Array<T>) -> Array<T> {
        self.get(v).cloned().unwrap_or_else(|| Array::zeros(like.shape()))
    }

    pub fn take(&mut self, v: Var) -> Option<Array<T>> {
        self.grads[v.0].take()
    }
}
