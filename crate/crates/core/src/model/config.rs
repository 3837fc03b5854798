use serde::{Deserialize, Serialize};

use super::{ModelError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Conditioning {
    /// Per-channel scale and shift of the encoded tokens.
    Film,
    /// An extra flow-rate token mixed by attention, dropped before decoding.
    Cls,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Positivity {
    /// `g(x) = x² + ε`
    Squared,
    /// `g(x) = log(1 + eˣ) + ε`
    Softplus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    Anisotropic,
    Isotropic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sharing {
    /// Pressure and WSS each get their own kernel shape.
    Separate,
    /// One kernel shape per center serves both fields.
    Shared,
}

/// Architecture hyper-parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Number of centerline tokens (= RBF centers).
    pub m: usize,
    pub d: usize,
    pub layers: usize,
    pub heads: usize,
    pub ff_dim: usize,
    /// Fourier frequency count; the tokenizer input width is `8K + 4`.
    pub fourier_k: usize,
    pub dropout_p: f64,
    pub conditioning: Conditioning,
    pub positivity: Positivity,
    pub kernel: KernelKind,
    pub sharing: Sharing,
    pub epsilon_pos: f64,
    /// Hidden width of the flow-rate MLP (FiLM or CLS embedder).
    pub cond_hidden: usize,
    /// Kernel diagonal (or isotropic bandwidth) the decoder starts from,
    /// in normalized-coordinate units.
    #[serde(default = "default_init_kernel_scale")]
    pub init_kernel_scale: f64,
    /// Per-axis (x, y, z) starting diagonal for anisotropic kernels; overrides
    /// `init_kernel_scale` for them when set.
    #[serde(default)]
    pub init_kernel_axes: Option<[f64; 3]>,
}

/// Desk-profile starting kernel diagonal per axis (x, y, z).
pub const DESK_INIT_KERNEL_AXES: [f64; 3] = [1.0, 1.0, 30.0];

fn default_init_kernel_scale() -> f64 {
    super::INIT_KERNEL_SCALE
}

impl ModelConfig {
    /// Full-size configuration: d=256, 5 layers, ff=512, 1 head, K=6.
    pub fn paper(m: usize) -> Self {
        Self {
            m,
            d: 256,
            layers: 5,
            heads: 1,
            ff_dim: 512,
            fourier_k: 6,
            dropout_p: 0.1,
            conditioning: Conditioning::Film,
            positivity: Positivity::Squared,
            kernel: KernelKind::Anisotropic,
            sharing: Sharing::Separate,
            epsilon_pos: 1e-6,
            cond_hidden: 256,
            init_kernel_scale: super::INIT_KERNEL_SCALE,
            init_kernel_axes: None,
        }
    }

    /// Laptop-scale configuration: d=32, 2 layers, ff=64, K=4, M=32, no
    /// dropout, and anisotropic kernels that start narrow along z (the
    /// generated vessels' axis) and wide across it.
    pub fn desk() -> Self {
        Self {
            m: 32,
            d: 32,
            layers: 2,
            heads: 1,
            ff_dim: 64,
            fourier_k: 4,
            dropout_p: 0.0,
            cond_hidden: 32,
            init_kernel_axes: Some(DESK_INIT_KERNEL_AXES),
            ..Self::paper(32)
        }
    }

    pub fn token_width(&self) -> usize {
        8 * self.fourier_k + 4
    }

    /// Output width of the decoder head per center.
    pub fn head_width(&self) -> usize {
        match (self.kernel, self.sharing) {
            (KernelKind::Anisotropic, Sharing::Separate) => 14,
            (KernelKind::Anisotropic, Sharing::Shared) => 8,
            (KernelKind::Isotropic, Sharing::Separate) => 4,
            (KernelKind::Isotropic, Sharing::Shared) => 3,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("m", self.m),
            ("d", self.d),
            ("layers", self.layers),
            ("heads", self.heads),
            ("ff_dim", self.ff_dim),
            ("fourier_k", self.fourier_k),
            ("cond_hidden", self.cond_hidden),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(ModelError::InvalidConfig(format!("{name} must be positive")));
            }
        }
        if self.d % self.heads != 0 {
            return Err(ModelError::InvalidConfig(format!("d={} not divisible by heads={}", self.d, self.heads)));
        }
        if !(0.0..1.0).contains(&self.dropout_p) {
            return Err(ModelError::InvalidConfig(format!("dropout_p={} not in [0,1)", self.dropout_p)));
        }
        if !(self.epsilon_pos > 0.0 && self.epsilon_pos.is_finite()) {
            return Err(ModelError::InvalidConfig("epsilon_pos must be positive".into()));
        }
        if !(self.init_kernel_scale > self.epsilon_pos && self.init_kernel_scale.is_finite()) {
            return Err(ModelError::InvalidConfig("init_kernel_scale must exceed epsilon_pos".into()));
        }
        if let Some(axes) = self.init_kernel_axes {
            if !axes.iter().all(|&a| a > self.epsilon_pos && a.is_finite()) {
                return Err(ModelError::InvalidConfig("init_kernel_axes must each exceed epsilon_pos".into()));
            }
        }
        Ok(())
    }
}

/// Learnable scalar counts by component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ParamCount {
    pub tokenizer: usize,
    pub positional: usize,
    pub encoder: usize,
    pub conditioning: usize,
    pub head: usize,
}

impl ParamCount {
    pub fn total(&self) -> usize {
        self.tokenizer + self.positional + self.encoder + self.conditioning + self.head
    }
}

/// Closed-form parameter count.
pub fn count_params(cfg: &ModelConfig) -> ParamCount {
    let (d, ff, h) = (cfg.d, cfg.ff_dim, cfg.cond_hidden);
    // Q, V and output projections carry biases; keys do not.
    let attention = 4 * d * d + 3 * d;
    let norms = 2 * 2 * d;
    let feedforward = (ff * d + ff) + (d * ff + d);
    let cond_out = match cfg.conditioning {
        Conditioning::Film => 2 * d,
        Conditioning::Cls => d,
    };
    ParamCount {
        tokenizer: d * cfg.token_width() + d,
        positional: cfg.m * d,
        encoder: cfg.layers * (attention + norms + feedforward),
        conditioning: (h + h) + (cond_out * h + cond_out),
        head: cfg.head_width() * d + cfg.head_width(),
    }
}
