//! Closed-form forward-pass FLOP counts and sweeps over centers and queries.
//!
//! Counts depend only on the configuration, never on parameter values. The
//! convention (FLOPs per multiply-accumulate, cost of nonlinearities,
//! exponentials and layer norm) is explicit and echoed in every report.

use serde::{Deserialize, Serialize};

use crate::model::{Conditioning, KernelKind, ModelConfig, ModelError, Sharing};

/// Reference single-pass costs (GFLOPs) at N = 2048 queries for the paper profile.
pub const REFERENCE_GFLOPS: [(usize, f64); 5] = [(64, 0.24), (128, 0.53), (256, 1.22), (512, 3.12), (1024, 8.93)];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlopConvention {
    pub flops_per_mac: f64,
    /// GELU, sin/cos, softplus, ... per element.
    pub nonlinearity: f64,
    pub exp: f64,
    pub layer_norm_per_element: f64,
}

impl Default for FlopConvention {
    fn default() -> Self {
        Self { flops_per_mac: 2.0, nonlinearity: 1.0, exp: 1.0, layer_norm_per_element: 5.0 }
    }
}

impl FlopConvention {
    /// One FLOP per multiply-accumulate (the convention of several profilers).
    pub fn mac_as_one() -> Self {
        Self { flops_per_mac: 1.0, ..Self::default() }
    }
}

/// FLOPs per component of one forward pass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlopComponents {
    pub tokenizer: f64,
    pub encoder: f64,
    pub conditioning: f64,
    pub decoder_head: f64,
    pub kernel_eval: f64,
}

impl FlopComponents {
    pub fn total(&self) -> f64 {
        self.tokenizer + self.encoder + self.conditioning + self.decoder_head + self.kernel_eval
    }

    pub fn named(&self) -> [(&'static str, f64); 5] {
        [
            ("tokenizer", self.tokenizer),
            ("encoder", self.encoder),
            ("conditioning", self.conditioning),
            ("decoder_head", self.decoder_head),
            ("kernel_eval", self.kernel_eval),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlopReport {
    pub m: usize,
    pub n: usize,
    pub d: usize,
    pub layers: usize,
    pub convention: FlopConvention,
    pub components: FlopComponents,
    /// The sequence-length-quadratic part of `components.encoder`
    /// (scores, softmax and value mixing).
    pub attention_mixing: f64,
    pub total: f64,
}

impl FlopReport {
    pub fn gflops(&self) -> f64 {
        self.total * 1e-9
    }

    /// Share of the total that scales with the number of queries.
    pub fn query_fraction(&self) -> f64 {
        if self.total == 0.0 {
            0.0
        } else {
            self.components.kernel_eval / self.total
        }
    }
}

/// FLOPs of one forward pass with `m` centers and `n` queries.
///
/// The configuration's own `m` is ignored in favour of the argument so one
/// config can be swept.
pub fn count_flops(cfg: &ModelConfig, m: usize, n: usize, conv: &FlopConvention) -> Result<FlopReport, ModelError> {
    let c = ModelConfig { m, ..cfg.clone() };
    c.validate()?;
    let mac = conv.flops_per_mac;
    let (mf, nf) = (m as f64, n as f64);
    let d = c.d as f64;
    let ff = c.ff_dim as f64;
    let h = c.cond_hidden as f64;
    let tw = c.token_width() as f64;
    let hw = c.head_width() as f64;
    let fourier = 8.0 * c.fourier_k as f64;

    // Frequency scaling and sin/cos per feature, affine projection with bias, positional add.
    let tokenizer = mf * fourier * (1.0 + conv.nonlinearity) + mac * mf * tw * d + 2.0 * mf * d;

    // The CLS variant runs the encoder over one extra token.
    let s = match c.conditioning {
        Conditioning::Film => mf,
        Conditioning::Cls => mf + 1.0,
    };
    let norms = 2.0 * conv.layer_norm_per_element * s * d;
    // Q, K, V and output projections; biases on Q, V and the output.
    let projections = 4.0 * mac * s * d * d + 3.0 * s * d;
    // Scores (plus 1/√d scaling), softmax (max-subtract, exp, sum, divide), value mixing.
    let mixing = 2.0 * mac * s * s * d + s * s + s * s * (conv.exp + 3.0);
    let feedforward = mac * s * d * ff + s * ff + conv.nonlinearity * s * ff + mac * s * ff * d + s * d;
    let residuals = 2.0 * s * d;
    let layers = c.layers as f64;
    let encoder = layers * (norms + projections + mixing + feedforward + residuals);
    let attention_mixing = layers * mixing;

    let conditioning = match c.conditioning {
        // Flow MLP, then γ ⊙ x + β on every token.
        Conditioning::Film => mac * h + h + conv.nonlinearity * h + mac * h * 2.0 * d + 2.0 * d + 2.0 * mf * d,
        Conditioning::Cls => mac * h + h + conv.nonlinearity * h + mac * h * d + d,
    };

    let positive_entries = match (c.kernel, c.sharing) {
        (KernelKind::Anisotropic, Sharing::Separate) => 6.0,
        (KernelKind::Anisotropic, Sharing::Shared) => 3.0,
        (KernelKind::Isotropic, Sharing::Separate) => 2.0,
        (KernelKind::Isotropic, Sharing::Shared) => 1.0,
    };
    let decoder_head = mac * mf * d * hw + mf * hw + conv.nonlinearity * mf * positive_entries;

    // Per (query, center): offset, one quadratic form and exponential per
    // distinct kernel, then a weighted accumulation per field.
    let quad = match c.kernel {
        // u = Lᵀ δ (6 MACs) and ‖u‖² (3 MACs), negate.
        KernelKind::Anisotropic => 9.0 * mac + 1.0,
        // ‖δ‖² (3 MACs), scale by σ², negate.
        KernelKind::Isotropic => 3.0 * mac + 2.0,
    };
    let kernels = match c.sharing {
        Sharing::Separate => 2.0,
        Sharing::Shared => 1.0,
    };
    let kernel_eval = nf * mf * (3.0 + kernels * (quad + conv.exp) + 2.0 * mac);

    let components = FlopComponents { tokenizer, encoder, conditioning, decoder_head, kernel_eval };
    Ok(FlopReport {
        m,
        n,
        d: c.d,
        layers: c.layers,
        convention: *conv,
        total: components.total(),
        components,
        attention_mixing,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuerySweep {
    pub reports: Vec<FlopReport>,
    /// `total(max N) / total(min N)`.
    pub ratio: f64,
}

pub fn sweep_queries(
    cfg: &ModelConfig,
    m: usize,
    ns: &[usize],
    conv: &FlopConvention,
) -> Result<QuerySweep, ModelError> {
    let reports = ns.iter().map(|&n| count_flops(cfg, m, n, conv)).collect::<Result<Vec<_>, _>>()?;
    let by_n = |pick: fn(usize, usize) -> bool| {
        reports.iter().reduce(|a, b| if pick(b.n, a.n) { b } else { a }).map(|r| r.total)
    };
    let ratio = match (by_n(|a, b| a > b), by_n(|a, b| a < b)) {
        (Some(hi), Some(lo)) if lo > 0.0 => hi / lo,
        _ => 1.0,
    };
    Ok(QuerySweep { reports, ratio })
}

pub fn sweep_centers(
    cfg: &ModelConfig,
    ms: &[usize],
    n: usize,
    conv: &FlopConvention,
) -> Result<Vec<FlopReport>, ModelError> {
    ms.iter().map(|&m| count_flops(cfg, m, n, conv)).collect()
}

/// Plot-ready CSV with columns `M,N,component,GFLOPs`; each report
/// contributes one row per component and a `total` row.
pub fn flop_table(reports: &[FlopReport]) -> String {
    let mut out = String::from("M,N,component,GFLOPs\n");
    for r in reports {
        for (name, v) in r.components.named() {
            out.push_str(&format!("{},{},{},{:.6}\n", r.m, r.n, name, v * 1e-9));
        }
        out.push_str(&format!("{},{},total,{:.6}\n", r.m, r.n, r.gflops()));
    }
    out
}
