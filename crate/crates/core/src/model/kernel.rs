//! Gaussian kernel decoding and evaluation.
//!
//! Head outputs per center are laid out as
//!
//! | variant               | width | layout                               |
//! |-----------------------|-------|--------------------------------------|
//! | anisotropic, separate | 14    | `wP, wW, L_P[6], L_W[6]`             |
//! | anisotropic, shared   | 8     | `wP, wW, L[6]`                       |
//! | isotropic, separate   | 4     | `wP, wW, σP, σW`                     |
//! | isotropic, shared     | 3     | `wP, wW, σ`                          |
//!
//! The six factor entries are the lower triangle of `L` in row order
//! `(L00, L10, L11, L20, L21, L22)`. Diagonal entries and bandwidths pass
//! through the positivity map; off-diagonals are used raw. A kernel is
//! `φ(x) = exp(−‖Lᵀ(x − c)‖²)`, i.e. precision `Σ⁻¹ = L Lᵀ`.

use crate::numerics::{Array, CustomOp, Real};

use super::config::{KernelKind, ModelConfig, Positivity, Sharing};
use super::{ModelError, Result};

/// Positions of the diagonal within the six factor entries.
pub const DIAG_SLOTS: [usize; 3] = [0, 2, 5];

/// Map to strictly positive values and its derivative.
pub fn positive<T: Real>(x: T, map: Positivity, eps: T) -> (T, T) {
    match map {
        Positivity::Squared => (x * x + eps, x + x),
        Positivity::Softplus => {
            // log(1 + eˣ) = max(x, 0) + log(1 + e^{−|x|})
            let sp = x.max(T::zero()) + (-x.abs()).exp().ln_1p();
            let sig = T::one() / (T::one() + (-x).exp());
            (sp + eps, sig)
        }
    }
}

/// Decoded kernel parameters for one forward pass, in `f64`.
///
/// Isotropic kernels are stored as `L = σI`, which is exactly equivalent.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSet {
    pub centers: Vec<[f64; 3]>,
    /// `[w_P, w_WSS]` per center.
    pub weights: Vec<[f64; 2]>,
    /// `[L_P, L_WSS]` per center, each as six lower-triangle entries.
    pub factors: Vec<[[f64; 6]; 2]>,
}

impl KernelSet {
    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    /// `Σ⁻¹ = L Lᵀ` for center `i`, field `f` (0 = pressure, 1 = WSS).
    pub fn precision(&self, i: usize, f: usize) -> [[f64; 3]; 3] {
        let l = lower(&self.factors[i][f]);
        let mut p = [[0.0; 3]; 3];
        for r in 0..3 {
            for c in 0..3 {
                p[r][c] = (0..3).map(|k| l[r][k] * l[c][k]).sum();
            }
        }
        p
    }

    /// `φ` of center `i`, field `f` at point `x`.
    pub fn phi(&self, i: usize, f: usize, x: [f64; 3]) -> f64 {
        let c = self.centers[i];
        let dx = [x[0] - c[0], x[1] - c[1], x[2] - c[2]];
        (-quad_form(&self.factors[i][f], dx)).exp()
    }
}

/// Expands six lower-triangle entries into a 3×3 matrix.
pub fn lower(e: &[f64; 6]) -> [[f64; 3]; 3] {
    [[e[0], 0.0, 0.0], [e[1], e[2], 0.0], [e[3], e[4], e[5]]]
}

/// `‖Lᵀd‖²`.
fn quad_form<T: Real>(l: &[T; 6], d: [T; 3]) -> T {
    let u = lt_times(l, d);
    u[0] * u[0] + u[1] * u[1] + u[2] * u[2]
}

fn lt_times<T: Real>(l: &[T; 6], d: [T; 3]) -> [T; 3] {
    [l[0] * d[0] + l[1] * d[1] + l[3] * d[2], l[2] * d[1] + l[4] * d[2], l[5] * d[2]]
}

/// Turns raw head outputs `[M, head_width]` and centers `[M, 3]` into kernels.
pub fn decode_kernel_params<T: Real>(raw: &Array<T>, centers: &Array<T>, cfg: &ModelConfig) -> Result<KernelSet> {
    let m = raw.rows();
    if raw.cols() != cfg.head_width() || centers.rows() != m || centers.cols() != 3 {
        return Err(ModelError::Shape(format!(
            "head output {:?} / centers {:?} do not match head width {}",
            raw.shape(),
            centers.shape(),
            cfg.head_width()
        )));
    }
    let eps = cfg.epsilon_pos;
    let pos = |x: T| positive(x.as_f64(), cfg.positivity, eps).0;
    let mut set = KernelSet { centers: Vec::new(), weights: Vec::new(), factors: Vec::new() };
    for i in 0..m {
        let r = raw.row(i);
        let c = centers.row(i);
        set.centers.push([c[0].as_f64(), c[1].as_f64(), c[2].as_f64()]);
        set.weights.push([r[0].as_f64(), r[1].as_f64()]);
        let factor = |slice: &[T]| {
            let mut e = [0.0; 6];
            for (k, v) in e.iter_mut().enumerate() {
                *v = if DIAG_SLOTS.contains(&k) { pos(slice[k]) } else { slice[k].as_f64() };
            }
            e
        };
        let iso = |x: T| {
            let s = pos(x);
            [s, 0.0, s, 0.0, 0.0, s]
        };
        let pair = match (cfg.kernel, cfg.sharing) {
            (KernelKind::Anisotropic, Sharing::Separate) => [factor(&r[2..8]), factor(&r[8..14])],
            (KernelKind::Anisotropic, Sharing::Shared) => {
                let f = factor(&r[2..8]);
                [f, f]
            }
            (KernelKind::Isotropic, Sharing::Separate) => [iso(r[2]), iso(r[3])],
            (KernelKind::Isotropic, Sharing::Shared) => {
                let f = iso(r[2]);
                [f, f]
            }
        };
        set.factors.push(pair);
    }
    Ok(set)
}

/// Field values at query points.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldPrediction {
    pub pressure: Vec<f64>,
    pub wss: Vec<f64>,
}

/// Reference evaluation of both fields: `Σᵢ wᵢ φᵢ(x)` per field.
pub fn eval_fields(kernels: &KernelSet, queries: &[[f64; 3]]) -> FieldPrediction {
    let mut out = FieldPrediction { pressure: vec![0.0; queries.len()], wss: vec![0.0; queries.len()] };
    for (n, &x) in queries.iter().enumerate() {
        for i in 0..kernels.len() {
            out.pressure[n] += kernels.weights[i][0] * kernels.phi(i, 0, x);
            out.wss[n] += kernels.weights[i][1] * kernels.phi(i, 1, x);
        }
    }
    out
}

/// Fused decode + evaluate as a single tape node.
///
/// Input: raw head output `[M, head_width]`. Output: `[N, 2]` with columns
/// (pressure, WSS). Centers and queries are constants held by the op.
pub struct RbfFieldOp<T: Real> {
    centers: Vec<[T; 3]>,
    queries: Vec<[T; 3]>,
    kernel: KernelKind,
    sharing: Sharing,
    positivity: Positivity,
    eps: T,
}

/// Per-center kernel shape after the positivity map, plus derivative of the
/// map at each mapped slot.
struct Shape<T> {
    /// Anisotropic: six entries; isotropic: `σ` in slot 0.
    entries: [T; 6],
    dmap: [T; 6],
    /// Column offset of this shape in the raw head row.
    offset: usize,
}

impl<T: Real> RbfFieldOp<T> {
    pub fn new(centers: &Array<T>, queries: &Array<T>, cfg: &ModelConfig) -> Result<Self> {
        if centers.cols() != 3 || queries.cols() != 3 {
            return Err(ModelError::Shape("centers and queries must have 3 columns".into()));
        }
        let rows = |a: &Array<T>| (0..a.rows()).map(|i| [a.at(i, 0), a.at(i, 1), a.at(i, 2)]).collect();
        let queries = if queries.is_empty() { Vec::new() } else { rows(queries) };
        Ok(Self {
            centers: rows(centers),
            queries,
            kernel: cfg.kernel,
            sharing: cfg.sharing,
            positivity: cfg.positivity,
            eps: T::lit(cfg.epsilon_pos),
        })
    }

    pub fn num_queries(&self) -> usize {
        self.queries.len()
    }

    fn shapes(&self, row: &[T]) -> [Shape<T>; 2] {
        let one = T::one();
        let make = |offset: usize| -> Shape<T> {
            let mut entries = [T::zero(); 6];
            let mut dmap = [one; 6];
            match self.kernel {
                KernelKind::Anisotropic => {
                    for k in 0..6 {
                        let x = row[offset + k];
                        if DIAG_SLOTS.contains(&k) {
                            let (v, dv) = positive(x, self.positivity, self.eps);
                            entries[k] = v;
                            dmap[k] = dv;
                        } else {
                            entries[k] = x;
                        }
                    }
                }
                KernelKind::Isotropic => {
                    let (v, dv) = positive(row[offset], self.positivity, self.eps);
                    entries[0] = v;
                    dmap[0] = dv;
                }
            }
            Shape { entries, dmap, offset }
        };
        let step = match self.kernel {
            KernelKind::Anisotropic => 6,
            KernelKind::Isotropic => 1,
        };
        match self.sharing {
            Sharing::Separate => [make(2), make(2 + step)],
            Sharing::Shared => [make(2), make(2)],
        }
    }

    fn exponent(&self, s: &Shape<T>, d: [T; 3]) -> T {
        match self.kernel {
            KernelKind::Anisotropic => quad_form(&s.entries, d),
            KernelKind::Isotropic => {
                let sig = s.entries[0];
                sig * sig * (d[0] * d[0] + d[1] * d[1] + d[2] * d[2])
            }
        }
    }

    /// Forward value `[N, 2]`.
    pub fn forward(&self, raw: &Array<T>) -> Array<T> {
        let n = self.queries.len();
        let mut out = vec![T::zero(); n * 2];
        for (i, c) in self.centers.iter().enumerate() {
            let row = raw.row(i);
            let shapes = self.shapes(row);
            let w = [row[0], row[1]];
            for (q, x) in self.queries.iter().enumerate() {
                let d = [x[0] - c[0], x[1] - c[1], x[2] - c[2]];
                for f in 0..2 {
                    out[2 * q + f] += w[f] * (-self.exponent(&shapes[f], d)).exp();
                }
            }
        }
        Array::new(vec![n, 2], out).expect("consistent shape")
    }
}

impl<T: Real> CustomOp<T> for RbfFieldOp<T> {
    fn backward(&self, inputs: &[&Array<T>], _output: &Array<T>, grad_out: &Array<T>) -> Vec<Option<Array<T>>> {
        let raw = inputs[0];
        let width = raw.cols();
        let mut draw = vec![T::zero(); raw.len()];
        let two = T::lit(2.0);
        for (i, c) in self.centers.iter().enumerate() {
            let row = raw.row(i);
            let shapes = self.shapes(row);
            let w = [row[0], row[1]];
            let mut dw = [T::zero(); 2];
            // Gradient w.r.t. mapped entries, per field.
            let mut de = [[T::zero(); 6]; 2];
            for (q, x) in self.queries.iter().enumerate() {
                let d = [x[0] - c[0], x[1] - c[1], x[2] - c[2]];
                for f in 0..2 {
                    let g = grad_out.data()[2 * q + f];
                    if g == T::zero() {
                        continue;
                    }
                    let s = &shapes[f];
                    let phi = (-self.exponent(s, d)).exp();
                    dw[f] += g * phi;
                    // d(output)/d(exponent) = −w φ
                    let dexp = -(g * w[f] * phi);
                    match self.kernel {
                        KernelKind::Anisotropic => {
                            let u = lt_times(&s.entries, d);
                            let du = [two * u[0] * dexp, two * u[1] * dexp, two * u[2] * dexp];
                            de[f][0] += du[0] * d[0];
                            de[f][1] += du[0] * d[1];
                            de[f][3] += du[0] * d[2];
                            de[f][2] += du[1] * d[1];
                            de[f][4] += du[1] * d[2];
                            de[f][5] += du[2] * d[2];
                        }
                        KernelKind::Isotropic => {
                            let r2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
                            de[f][0] += two * s.entries[0] * r2 * dexp;
                        }
                    }
                }
            }
            let base = i * width;
            draw[base] += dw[0];
            draw[base + 1] += dw[1];
            let slots = match self.kernel {
                KernelKind::Anisotropic => 6,
                KernelKind::Isotropic => 1,
            };
            for f in 0..2 {
                let s = &shapes[f];
                for k in 0..slots {
                    draw[base + s.offset + k] += de[f][k] * s.dmap[k];
                }
            }
        }
        vec![Some(Array::new(raw.shape().to_vec(), draw).expect("consistent shape"))]
    }
}
