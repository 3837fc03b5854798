//! The surrogate network.
//!
//! Centerline samples `(x, y, z, r)` are Fourier-embedded and projected to
//! tokens, mixed by a pre-norm transformer encoder, conditioned on the inlet
//! flow rate (FiLM or a prepended CLS token), and decoded pointwise into one
//! Gaussian kernel pair per centerline token. Pressure and WSS at any wall
//! point are weighted kernel sums.

mod config;
mod kernel;

pub use config::{
    count_params, Conditioning, KernelKind, ModelConfig, ParamCount, Positivity, Sharing, DESK_INIT_KERNEL_AXES,
};
pub use kernel::{
    decode_kernel_params, eval_fields, lower, positive, FieldPrediction, KernelSet, RbfFieldOp, DIAG_SLOTS,
};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::numerics::nn::{attention, dropout_var, kaiming_uniform, normal_init, AttentionVars};
use crate::numerics::{grad_check, Array, NumericsError, ParamStore, Real, Tape, Var};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid model config: {0}")]
    InvalidConfig(String),
    #[error("shape error: {0}")]
    Shape(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

pub type Result<T> = std::result::Result<T, ModelError>;

/// Initial per-axis kernel precision scale `L_jj` (normalized coordinates).
pub const INIT_KERNEL_SCALE: f64 = 3.0;

/// Fourier embedding of one token: for each coordinate `j` (x, y, z, r) and
/// frequency `ω_k = π·2^k`, the pair `sin(ω_k c_j), cos(ω_k c_j)`.
/// Layout is coordinate-major, frequency-minor, sine before cosine.
pub fn fourier_embed(c: [f64; 4], k: usize) -> Vec<f64> {
    let mut e = Vec::with_capacity(8 * k);
    for &cj in &c {
        for kk in 0..k {
            let w = std::f64::consts::PI * 2f64.powi(kk as i32);
            e.push((w * cj).sin());
            e.push((w * cj).cos());
        }
    }
    e
}

/// Tokenizer input `[e(c_i); c_i]` for every row of a `[M, 4]` array.
pub fn token_features<T: Real>(centerline: &Array<T>, k: usize) -> Result<Array<T>> {
    if centerline.cols() != 4 {
        return Err(ModelError::Shape(format!("centerline tokens must be [M,4], got {:?}", centerline.shape())));
    }
    let m = centerline.rows();
    let mut data = Vec::with_capacity(m * (8 * k + 4));
    for i in 0..m {
        let r = centerline.row(i);
        let c = [r[0].as_f64(), r[1].as_f64(), r[2].as_f64(), r[3].as_f64()];
        data.extend(fourier_embed(c, k).into_iter().map(T::lit));
        data.extend_from_slice(r);
    }
    Ok(Array::new(vec![m, 8 * k + 4], data)?)
}

/// Names and shapes of every learnable array, in store order.
pub fn param_layout(cfg: &ModelConfig) -> Vec<(String, Vec<usize>)> {
    let (d, ff, h) = (cfg.d, cfg.ff_dim, cfg.cond_hidden);
    let mut v: Vec<(String, Vec<usize>)> =
        vec![("tok.w".into(), vec![d, cfg.token_width()]), ("tok.b".into(), vec![d]), ("pos".into(), vec![cfg.m, d])];
    for l in 0..cfg.layers {
        let p = |s: &str| format!("enc{l}.{s}");
        v.push((p("ln1.g"), vec![d]));
        v.push((p("ln1.b"), vec![d]));
        for proj in ["q", "k", "v", "o"] {
            v.push((p(&format!("attn.w{proj}")), vec![d, d]));
            if proj != "k" {
                v.push((p(&format!("attn.b{proj}")), vec![d]));
            }
        }
        v.push((p("ln2.g"), vec![d]));
        v.push((p("ln2.b"), vec![d]));
        v.push((p("ff1.w"), vec![ff, d]));
        v.push((p("ff1.b"), vec![ff]));
        v.push((p("ff2.w"), vec![d, ff]));
        v.push((p("ff2.b"), vec![d]));
    }
    let (prefix, out) = match cfg.conditioning {
        Conditioning::Film => ("film", 2 * d),
        Conditioning::Cls => ("cls", d),
    };
    v.push((format!("{prefix}.w1"), vec![h, 1]));
    v.push((format!("{prefix}.b1"), vec![h]));
    v.push((format!("{prefix}.w2"), vec![out, h]));
    v.push((format!("{prefix}.b2"), vec![out]));
    v.push(("head.w".into(), vec![cfg.head_width(), d]));
    v.push(("head.b".into(), vec![cfg.head_width()]));
    v
}

/// Fresh parameters.
///
/// Affine weights are fan-in uniform, the positional table is `N(0, 0.02)`,
/// layer-norm gains are 1 and other biases 0, except two that set a sensible
/// starting point: the FiLM scale bias is 1 (so γ starts near 1), and the
/// head bias puts every kernel diagonal at `cfg.init_kernel_scale` (or the
/// per-axis `cfg.init_kernel_axes` for anisotropic kernels).
pub fn init_params<T: Real, R: Rng + ?Sized>(cfg: &ModelConfig, rng: &mut R) -> Result<ParamStore<T>> {
    cfg.validate()?;
    let mut store = ParamStore::new();
    for (name, shape) in param_layout(cfg) {
        let value = if name == "pos" {
            normal_init(&shape, 0.02, rng)
        } else if shape.len() == 2 {
            kaiming_uniform(shape[0], shape[1], rng)
        } else if name.ends_with(".g") {
            Array::full(&shape, T::one())
        } else if name == "film.b2" {
            let mut b = Array::zeros(&shape);
            b.data_mut()[..cfg.d].fill(T::one());
            b
        } else if name == "head.b" {
            head_bias(cfg)
        } else {
            Array::zeros(&shape)
        };
        store.insert(name, value);
    }
    Ok(store)
}

fn head_bias<T: Real>(cfg: &ModelConfig) -> Array<T> {
    let raw = |scale: f64| {
        let target = scale - cfg.epsilon_pos;
        match cfg.positivity {
            Positivity::Squared => target.sqrt(),
            // softplus⁻¹(y) = log(eʸ − 1)
            Positivity::Softplus => target.exp_m1().ln(),
        }
    };
    let mut b = vec![T::zero(); cfg.head_width()];
    match cfg.kernel {
        KernelKind::Anisotropic => {
            let axes = cfg.init_kernel_axes.unwrap_or([cfg.init_kernel_scale; 3]);
            let fields = if cfg.sharing == Sharing::Separate { 2 } else { 1 };
            for f in 0..fields {
                for (s, &scale) in DIAG_SLOTS.iter().zip(&axes) {
                    b[2 + 6 * f + s] = T::lit(raw(scale));
                }
            }
        }
        KernelKind::Isotropic => {
            for v in &mut b[2..] {
                *v = T::lit(raw(cfg.init_kernel_scale));
            }
        }
    }
    Array::new(vec![b.len()], b).expect("consistent shape")
}

/// Checks that a store holds exactly the arrays `cfg` expects.
pub fn check_store<T: Real>(store: &ParamStore<T>, cfg: &ModelConfig) -> Result<()> {
    let layout = param_layout(cfg);
    if layout.len() != store.len() {
        return Err(ModelError::Shape(format!("store has {} arrays, config expects {}", store.len(), layout.len())));
    }
    for ((name, shape), (have, value)) in layout.iter().zip(store.names().iter().zip(store.values())) {
        if name != have || shape.as_slice() != value.shape() {
            return Err(ModelError::Shape(format!(
                "parameter {have} {:?} does not match expected {name} {shape:?}",
                value.shape()
            )));
        }
    }
    Ok(())
}

struct LayerVars {
    ln1_g: Var,
    ln1_b: Var,
    attn: AttentionVars,
    ln2_g: Var,
    ln2_b: Var,
    ff1_w: Var,
    ff1_b: Var,
    ff2_w: Var,
    ff2_b: Var,
}

/// Parameter handles on one tape.
pub struct ModelVars {
    /// Every parameter in store order (for collecting gradients).
    pub all: Vec<Var>,
    tok_w: Var,
    tok_b: Var,
    pos: Var,
    layers: Vec<LayerVars>,
    cond: [Var; 4],
    head_w: Var,
    head_b: Var,
}

/// Places the store on `tape`; trainable leaves when `trainable`, constants otherwise.
pub fn bind<T: Real>(
    tape: &mut Tape<T>,
    store: &ParamStore<T>,
    cfg: &ModelConfig,
    trainable: bool,
) -> Result<ModelVars> {
    check_store(store, cfg)?;
    let all: Vec<Var> = store
        .values()
        .iter()
        .map(|v| if trainable { tape.param(v.clone()) } else { tape.constant(v.clone()) })
        .collect();
    let mut it = all.iter().copied();
    let mut next = || it.next().expect("layout checked");
    let (tok_w, tok_b, pos) = (next(), next(), next());
    let mut layers = Vec::with_capacity(cfg.layers);
    for _ in 0..cfg.layers {
        let (ln1_g, ln1_b) = (next(), next());
        let (wq, bq, wk, wv, bv, wo, bo) = (next(), next(), next(), next(), next(), next(), next());
        let attn = AttentionVars { wq, bq, wk, wv, bv, wo, bo };
        let (ln2_g, ln2_b) = (next(), next());
        let (ff1_w, ff1_b, ff2_w, ff2_b) = (next(), next(), next(), next());
        layers.push(LayerVars { ln1_g, ln1_b, attn, ln2_g, ln2_b, ff1_w, ff1_b, ff2_w, ff2_b });
    }
    let cond = [next(), next(), next(), next()];
    let (head_w, head_b) = (next(), next());
    Ok(ModelVars { all, tok_w, tok_b, pos, layers, cond, head_w, head_b })
}

/// Training mode carries the dropout RNG; evaluation is deterministic.
pub enum Mode<'a> {
    Eval,
    Train(&'a mut ChaCha8Rng),
}

impl Mode<'_> {
    fn dropout<T: Real>(&mut self, tape: &mut Tape<T>, x: Var, p: f64) -> Result<Var> {
        match self {
            Mode::Eval => Ok(x),
            Mode::Train(rng) => Ok(dropout_var(tape, x, p, true, &mut **rng)?),
        }
    }
}

/// One preprocessed sample: `[M, 4]` centerline tokens, scalar flow rate,
/// `[N, 3]` wall query points, all in normalized units.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelInput<T: Real> {
    pub centerline: Array<T>,
    pub flow: T,
    pub queries: Array<T>,
}

impl<T: Real> ModelInput<T> {
    /// Kernel centers: the xyz columns of the centerline tokens.
    pub fn centers(&self) -> Array<T> {
        let m = self.centerline.rows();
        let data = (0..m).flat_map(|i| self.centerline.row(i)[..3].to_vec()).collect();
        Array::new(vec![m, 3], data).expect("consistent shape")
    }
}

/// `h⁰ = W[e(c); c] + b + pos`.
pub fn tokenize<T: Real>(
    tape: &mut Tape<T>,
    vars: &ModelVars,
    cfg: &ModelConfig,
    centerline: &Array<T>,
) -> Result<Var> {
    if centerline.rows() != cfg.m {
        return Err(ModelError::Shape(format!(
            "{} centerline tokens but the positional table has {} rows",
            centerline.rows(),
            cfg.m
        )));
    }
    let feats = tape.constant(token_features(centerline, cfg.fourier_k)?);
    let h = tape.affine(feats, vars.tok_w, Some(vars.tok_b))?;
    Ok(tape.add(h, vars.pos)?)
}

/// Pre-norm encoder stack: `x + Drop(Attn(LN(x)))`, then `x + Drop(FF(LN(x)))`.
pub fn encode<T: Real>(
    tape: &mut Tape<T>,
    x: Var,
    vars: &ModelVars,
    cfg: &ModelConfig,
    mode: &mut Mode,
) -> Result<Var> {
    let p = cfg.dropout_p;
    let mut h = x;
    for l in &vars.layers {
        let n = tape.layer_norm(h, l.ln1_g, l.ln1_b)?;
        let a = attention(tape, n, &l.attn, cfg.heads)?.output;
        let a = mode.dropout(tape, a, p)?;
        h = tape.add(h, a)?;

        let n = tape.layer_norm(h, l.ln2_g, l.ln2_b)?;
        let f = tape.affine(n, l.ff1_w, Some(l.ff1_b))?;
        let f = tape.gelu(f);
        let f = mode.dropout(tape, f, p)?;
        let f = tape.affine(f, l.ff2_w, Some(l.ff2_b))?;
        let f = mode.dropout(tape, f, p)?;
        h = tape.add(h, f)?;
    }
    Ok(h)
}

/// Two-layer flow-rate MLP `1 → hidden → out` with GELU.
fn cond_mlp<T: Real>(tape: &mut Tape<T>, vars: &ModelVars, flow: T) -> Result<Var> {
    let q = tape.constant(Array::new(vec![1, 1], vec![flow])?);
    let [w1, b1, w2, b2] = vars.cond;
    let hid = tape.affine(q, w1, Some(b1))?;
    let hid = tape.gelu(hid);
    Ok(tape.affine(hid, w2, Some(b2))?)
}

/// `γ ⊙ h + β` with `(γ, β) = MLP(q)`, broadcast over tokens.
pub fn film<T: Real>(tape: &mut Tape<T>, h: Var, vars: &ModelVars, cfg: &ModelConfig, flow: T) -> Result<Var> {
    let gb = cond_mlp(tape, vars, flow)?;
    let gamma = tape.slice_cols(gb, 0, cfg.d)?;
    let beta = tape.slice_cols(gb, cfg.d, cfg.d)?;
    let scaled = tape.mul_row(h, gamma)?;
    Ok(tape.add_row(scaled, beta)?)
}

/// Prepends the flow token, encodes `M + 1` tokens, and drops the flow token.
pub fn cls_condition<T: Real>(
    tape: &mut Tape<T>,
    tokens: Var,
    vars: &ModelVars,
    cfg: &ModelConfig,
    flow: T,
    mode: &mut Mode,
) -> Result<Var> {
    let t_q = cond_mlp(tape, vars, flow)?;
    let seq = tape.concat_rows(&[t_q, tokens])?;
    let enc = encode(tape, seq, vars, cfg, mode)?;
    Ok(tape.slice_rows(enc, 1, cfg.m)?)
}

pub struct ForwardOutput {
    /// `[N, 2]` pressure and WSS at the queries.
    pub fields: Var,
    /// `[M, head_width]` raw head output.
    pub head: Var,
}

/// Full forward pass.
pub fn forward<T: Real>(
    tape: &mut Tape<T>,
    vars: &ModelVars,
    cfg: &ModelConfig,
    input: &ModelInput<T>,
    mode: &mut Mode,
) -> Result<ForwardOutput> {
    if input.queries.shape().len() != 2 || input.queries.cols() != 3 {
        return Err(ModelError::Shape(format!("queries must be [N,3], got {:?}", input.queries.shape())));
    }
    let tokens = tokenize(tape, vars, cfg, &input.centerline)?;
    let h = match cfg.conditioning {
        Conditioning::Film => {
            let enc = encode(tape, tokens, vars, cfg, mode)?;
            film(tape, enc, vars, cfg, input.flow)?
        }
        Conditioning::Cls => cls_condition(tape, tokens, vars, cfg, input.flow, mode)?,
    };
    let head = tape.affine(h, vars.head_w, Some(vars.head_b))?;
    let op = RbfFieldOp::new(&input.centers(), &input.queries, cfg)?;
    let value = op.forward(tape.value(head));
    let fields = tape.custom(&[head], value, Box::new(op));
    Ok(ForwardOutput { fields, head })
}

/// Evaluation-mode prediction `[N, 2]`.
pub fn predict<T: Real>(store: &ParamStore<T>, cfg: &ModelConfig, input: &ModelInput<T>) -> Result<Array<T>> {
    let mut tape = Tape::new();
    let vars = bind(&mut tape, store, cfg, false)?;
    let out = forward(&mut tape, &vars, cfg, input, &mut Mode::Eval)?;
    Ok(tape.value(out.fields).clone())
}

/// Evaluation-mode decoded kernels.
pub fn kernel_set<T: Real>(store: &ParamStore<T>, cfg: &ModelConfig, input: &ModelInput<T>) -> Result<KernelSet> {
    let mut tape = Tape::new();
    let vars = bind(&mut tape, store, cfg, false)?;
    let out = forward(&mut tape, &vars, cfg, input, &mut Mode::Eval)?;
    decode_kernel_params(tape.value(out.head), &input.centers(), cfg)
}

/// Largest relative error between the reverse-mode loss gradient and central
/// differences (h = 1e-5) over every parameter, in eval mode.
///
/// The target is the current prediction plus `N(0, 0.1)` noise drawn from
/// `seed`: the loss stays small, so finite-difference roundoff does not swamp
/// tiny gradients.
pub fn gradient_check(store: &ParamStore<f64>, cfg: &ModelConfig, x: &ModelInput<f64>, seed: u64) -> Result<f64> {
    let mut target = predict(store, cfg, x)?;
    let noise = normal_init::<f64, _>(target.shape(), 0.1, &mut ChaCha8Rng::seed_from_u64(seed));
    target.add_assign(&noise);
    let shapes: Vec<Vec<usize>> = store.values().iter().map(|v| v.shape().to_vec()).collect();
    let names = store.names();
    let eval = |flat: &[f64]| -> Result<(f64, Vec<f64>)> {
        let mut s = ParamStore::new();
        let mut off = 0;
        for (name, shape) in names.iter().zip(&shapes) {
            let n: usize = shape.iter().product();
            s.insert(name.clone(), Array::new(shape.clone(), flat[off..off + n].to_vec())?);
            off += n;
        }
        let mut t = Tape::new();
        let vars = bind(&mut t, &s, cfg, true)?;
        let out = forward(&mut t, &vars, cfg, x, &mut Mode::Eval)?;
        let loss = t.mse_columns(out.fields, target.clone())?;
        let g = t.backward(loss)?;
        let grad = vars.all.iter().flat_map(|&v| g.get_or_zeros(v, t.value(v)).into_data()).collect();
        Ok((t.value(loss).item(), grad))
    };
    let point: Vec<f64> = store.values().iter().flat_map(|v| v.data().to_vec()).collect();
    // Surface the first failure (if any) before running the finite differences.
    eval(&point)?;
    Ok(grad_check(|p| eval(p).expect("same shapes as the checked point"), &point, 1e-5))
}
