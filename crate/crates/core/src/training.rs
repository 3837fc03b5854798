//! Preprocessing, loss, learning-rate schedule and the training loop.
//!
//! Every random draw comes from a stream derived from `(seed, purpose,
//! epoch, case)`, and per-case gradients are reduced in case order, so a run
//! is bitwise reproducible regardless of the worker count and can resume
//! from any epoch boundary.

use rand::seq::index;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataio::Case;
use crate::geometry::even_indices;
use crate::metrics::{rel_l2, MetricsError};
use crate::model::{bind, forward, init_params, predict, Mode, ModelConfig, ModelError, ModelInput};
use crate::numerics::{AdamWConfig, Array, NumericsError, ParamStore, Real, Tape};
use crate::seed::derive_seed;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("training split is empty")]
    EmptySplit,
    #[error("{0} has zero variance on the training split")]
    DegenerateField(&'static str),
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("case has {have} centerline points, {need} requested")]
    TooFewCenterlinePoints { have: usize, need: usize },
    #[error("length mismatch: {0}")]
    Length(String),
    #[error("non-finite loss at epoch {epoch}, case {case}")]
    NonFinite { epoch: usize, case: usize },
    /// Returned by an `on_epoch` callback to stop training.
    #[error("training stopped: {0}")]
    Aborted(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

pub type Result<T> = std::result::Result<T, TrainError>;

/// Margin added around the coordinate bounding box before min-max scaling (mm).
pub const COORD_BUFFER_MM: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldStats {
    pub mean: f64,
    pub std: f64,
}

impl FieldStats {
    fn from_values(name: &'static str, values: impl Iterator<Item = f64>) -> Result<Self> {
        let v: Vec<f64> = values.collect();
        if v.is_empty() {
            return Err(TrainError::EmptySplit);
        }
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
        let std = var.sqrt();
        if !(std > 1e-12 * mean.abs().max(1.0)) {
            return Err(TrainError::DegenerateField(name));
        }
        Ok(Self { mean, std })
    }

    pub fn z(&self, x: f64) -> f64 {
        (x - self.mean) / self.std
    }

    pub fn inv(&self, z: f64) -> f64 {
        z * self.std + self.mean
    }
}

/// Normalization statistics, computed from the training split only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    /// Buffered bounds of the per-case centered coordinates (mm).
    pub coord_min: [f64; 3],
    pub coord_max: [f64; 3],
    pub pressure: FieldStats,
    pub wss: FieldStats,
    pub radius: FieldStats,
    pub flow: FieldStats,
}

/// Mean surface position of a case (its centering offset).
pub fn surface_mean(case: &Case) -> [f64; 3] {
    let n = case.surface.len().max(1) as f64;
    let mut m = [0.0; 3];
    for p in &case.surface {
        for j in 0..3 {
            m[j] += p[j] as f64;
        }
    }
    m.map(|v| v / n)
}

pub fn compute_norm_stats(train: &[&Case]) -> Result<NormStats> {
    if train.is_empty() {
        return Err(TrainError::EmptySplit);
    }
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for case in train {
        let c = surface_mean(case);
        let points = case.surface.iter().map(|p| [p[0], p[1], p[2]]);
        let centers = case.centerline.iter().map(|p| [p[0], p[1], p[2]]);
        for p in points.chain(centers) {
            for j in 0..3 {
                let v = p[j] as f64 - c[j];
                lo[j] = lo[j].min(v);
                hi[j] = hi[j].max(v);
            }
        }
    }
    let all = || train.iter().copied();
    Ok(NormStats {
        coord_min: lo.map(|v| v - COORD_BUFFER_MM),
        coord_max: hi.map(|v| v + COORD_BUFFER_MM),
        pressure: FieldStats::from_values("pressure", all().flat_map(|c| c.pressure.iter().map(|&v| v as f64)))?,
        wss: FieldStats::from_values("wss", all().flat_map(|c| c.wss.iter().map(|&v| v as f64)))?,
        radius: FieldStats::from_values("radius", all().flat_map(|c| c.centerline.iter().map(|p| p[3] as f64)))?,
        flow: FieldStats::from_values("flow", all().map(|c| c.flow))?,
    })
}

impl NormStats {
    fn coord(&self, v: f64, j: usize) -> f64 {
        (v - self.coord_min[j]) / (self.coord_max[j] - self.coord_min[j])
    }

    fn coord_inv(&self, v: f64, j: usize) -> f64 {
        v * (self.coord_max[j] - self.coord_min[j]) + self.coord_min[j]
    }
}

/// A case in model units: centered and min-max scaled coordinates,
/// z-scored radius, flow, pressure and WSS.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedCase {
    /// Centering offset that was subtracted (mm).
    pub offset: [f64; 3],
    pub centerline: Vec<[f64; 4]>,
    pub flow: f64,
    pub surface: Vec<[f64; 3]>,
    pub pressure: Vec<f64>,
    pub wss: Vec<f64>,
}

pub fn normalize_case(case: &Case, stats: &NormStats) -> NormalizedCase {
    let offset = surface_mean(case);
    let xyz = |p: &[f32]| -> [f64; 3] { std::array::from_fn(|j| stats.coord(p[j] as f64 - offset[j], j)) };
    NormalizedCase {
        offset,
        centerline: case
            .centerline
            .iter()
            .map(|p| {
                let [x, y, z] = xyz(p);
                [x, y, z, stats.radius.z(p[3] as f64)]
            })
            .collect(),
        flow: stats.flow.z(case.flow),
        surface: case.surface.iter().map(|p| xyz(p)).collect(),
        pressure: case.pressure.iter().map(|&v| stats.pressure.z(v as f64)).collect(),
        wss: case.wss.iter().map(|&v| stats.wss.z(v as f64)).collect(),
    }
}

/// Inverse of [`normalize_case`] for every normalized quantity; `template`
/// supplies what normalization does not touch (normals, stations, P_a).
pub fn denormalize_case(n: &NormalizedCase, stats: &NormStats, template: &Case) -> Case {
    let xyz = |p: &[f64]| -> [f32; 3] { std::array::from_fn(|j| (stats.coord_inv(p[j], j) + n.offset[j]) as f32) };
    Case {
        flow: stats.flow.inv(n.flow),
        centerline: n
            .centerline
            .iter()
            .map(|p| {
                let [x, y, z] = xyz(p);
                [x, y, z, stats.radius.inv(p[3]) as f32]
            })
            .collect(),
        surface: n.surface.iter().map(|p| xyz(p)).collect(),
        pressure: n.pressure.iter().map(|&v| stats.pressure.inv(v) as f32).collect(),
        wss: n.wss.iter().map(|&v| stats.wss.inv(v) as f32).collect(),
        ..template.clone()
    }
}

/// Physical-unit pressure and WSS from normalized predictions `[N, 2]`.
pub fn denormalize_fields<T: Real>(pred: &Array<T>, stats: &NormStats) -> (Vec<f64>, Vec<f64>) {
    (0..pred.rows())
        .map(|i| (stats.pressure.inv(pred.at(i, 0).as_f64()), stats.wss.inv(pred.at(i, 1).as_f64())))
        .unzip()
}

/// Random training subsets: `n` surface indices (without replacement when
/// the case has enough points, otherwise with replacement) and `m` distinct
/// centerline indices sorted ascending.
pub fn sample_training_points(
    num_surface: usize,
    num_centerline: usize,
    n: usize,
    m: usize,
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if m > num_centerline {
        return Err(TrainError::TooFewCenterlinePoints { have: num_centerline, need: m });
    }
    if num_surface == 0 {
        return Err(TrainError::Length("case has no surface points".into()));
    }
    let surface = if n <= num_surface {
        index::sample(rng, num_surface, n).into_vec()
    } else {
        (0..n).map(|_| rand::Rng::random_range(rng, 0..num_surface)).collect()
    };
    let mut centers = index::sample(rng, num_centerline, m).into_vec();
    centers.sort_unstable();
    Ok((surface, centers))
}

/// Model input and `[N, 2]` target for chosen surface and centerline indices.
pub fn make_input<T: Real>(
    case: &NormalizedCase,
    surface_idx: &[usize],
    centerline_idx: &[usize],
) -> (ModelInput<T>, Array<T>) {
    let centerline = centerline_idx.iter().flat_map(|&i| case.centerline[i].map(T::lit)).collect();
    let queries = surface_idx.iter().flat_map(|&i| case.surface[i].map(T::lit)).collect();
    let target = surface_idx.iter().flat_map(|&i| [T::lit(case.pressure[i]), T::lit(case.wss[i])]).collect();
    let n = surface_idx.len();
    (
        ModelInput {
            centerline: Array::new(vec![centerline_idx.len(), 4], centerline).expect("consistent shape"),
            flow: T::lit(case.flow),
            queries: Array::new(vec![n, 3], queries).expect("consistent shape"),
        },
        Array::new(vec![n, 2], target).expect("consistent shape"),
    )
}

/// Mean squared pressure error plus mean squared WSS error.
pub fn loss(pred_p: &[f64], pred_w: &[f64], true_p: &[f64], true_w: &[f64]) -> Result<f64> {
    let n = pred_p.len();
    if n == 0 || pred_w.len() != n || true_p.len() != n || true_w.len() != n {
        return Err(TrainError::Length(format!(
            "prediction ({}, {}) vs target ({}, {})",
            pred_p.len(),
            pred_w.len(),
            true_p.len(),
            true_w.len()
        )));
    }
    let mse = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / n as f64;
    Ok(mse(pred_p, true_p) + mse(pred_w, true_w))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lr: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub warmup_epochs: usize,
    pub points_per_case: usize,
    pub seed: u64,
    /// Validation runs every this many epochs and after the last epoch.
    pub val_every: usize,
}

impl TrainConfig {
    pub fn paper() -> Self {
        Self {
            lr: 1e-3,
            weight_decay: 5e-4,
            batch_size: 128,
            epochs: 5000,
            warmup_epochs: 1000,
            points_per_case: 2048,
            seed: 1234,
            val_every: 10,
        }
    }

    pub fn desk() -> Self {
        Self { batch_size: 8, epochs: 300, warmup_epochs: 15, ..Self::paper() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.points_per_case == 0 || self.val_every == 0 {
            return Err(TrainError::InvalidConfig("batch_size, points_per_case and val_every must be positive".into()));
        }
        if self.warmup_epochs > self.epochs {
            return Err(TrainError::InvalidConfig(format!(
                "warmup_epochs {} exceeds epochs {}",
                self.warmup_epochs, self.epochs
            )));
        }
        if !(self.lr >= 0.0 && self.lr.is_finite() && self.weight_decay >= 0.0) {
            return Err(TrainError::InvalidConfig("lr and weight_decay must be finite and >= 0".into()));
        }
        Ok(())
    }
}

/// Linear warmup from 0, then cosine annealing to 0 at `epochs`.
/// `e` may be fractional.
pub fn lr_at_epoch(e: f64, cfg: &TrainConfig) -> f64 {
    let w = cfg.warmup_epochs as f64;
    let total = cfg.epochs as f64;
    if e < w {
        return cfg.lr * e / w;
    }
    if e >= total {
        return 0.0;
    }
    cfg.lr * 0.5 * (1.0 + (std::f64::consts::PI * (e - w) / (total - w)).cos())
}

/// Normalized training and validation data.
pub struct TrainData {
    pub stats: NormStats,
    pub train: Vec<NormalizedCase>,
    pub val: Vec<Case>,
}

impl TrainData {
    /// Statistics come from `train` only.
    pub fn new(train: &[Case], val: &[Case]) -> Result<Self> {
        let refs: Vec<&Case> = train.iter().collect();
        let stats = compute_norm_stats(&refs)?;
        Ok(Self::with_stats(stats, train, val))
    }

    pub fn with_stats(stats: NormStats, train: &[Case], val: &[Case]) -> Self {
        let train = train.iter().map(|c| normalize_case(c, &stats)).collect();
        Self { stats, train, val: val.to_vec() }
    }
}

/// Per-epoch log record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// 1-based epoch number.
    pub epoch: usize,
    /// Learning rate at the end of the epoch.
    pub lr: f64,
    pub train_loss: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub val_loss: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub val_rel_l2_pressure: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub val_rel_l2_wss: Option<f64>,
}

impl EpochRecord {
    /// Mean of the pressure and WSS validation errors.
    pub fn val_rel_l2(&self) -> Option<f64> {
        Some(0.5 * (self.val_rel_l2_pressure? + self.val_rel_l2_wss?))
    }
}

/// Parameters with the validation loss they achieved.
#[derive(Debug, Clone, PartialEq)]
pub struct BestCheckpoint {
    pub store: ParamStore<f32>,
    pub epoch: usize,
    pub val_loss: f64,
}

/// Everything needed to continue training.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainState {
    pub store: ParamStore<f32>,
    /// Completed epochs.
    pub epoch: usize,
    pub best: Option<BestCheckpoint>,
}

impl TrainState {
    pub fn fresh(model: &ModelConfig, cfg: &TrainConfig) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &[STREAM_INIT]));
        Ok(Self { store: init_params(model, &mut rng)?, epoch: 0, best: None })
    }
}

const STREAM_INIT: u64 = 0;
const STREAM_SHUFFLE: u64 = 1;
const STREAM_SAMPLE: u64 = 2;
const STREAM_DROPOUT: u64 = 3;

/// Normalized loss and gradients for one training case.
pub fn case_gradients(
    store: &ParamStore<f32>,
    model: &ModelConfig,
    case: &NormalizedCase,
    points: usize,
    sample_rng: &mut ChaCha8Rng,
    dropout_rng: &mut ChaCha8Rng,
) -> Result<(f64, Vec<Array<f32>>)> {
    let (s_idx, c_idx) =
        sample_training_points(case.surface.len(), case.centerline.len(), points, model.m, sample_rng)?;
    let (input, target) = make_input::<f32>(case, &s_idx, &c_idx);
    let mut tape = Tape::new();
    let vars = bind(&mut tape, store, model, true)?;
    let out = forward(&mut tape, &vars, model, &input, &mut Mode::Train(dropout_rng))?;
    let l = tape.mse_columns(out.fields, target)?;
    let mut grads = tape.backward(l)?;
    let g = vars.all.iter().map(|&v| grads.take(v).unwrap_or_else(|| Array::zeros(tape.value(v).shape()))).collect();
    Ok((tape.value(l).item() as f64, g))
}

/// One optimizer step on the cases `batch` (indices into `data.train`) of
/// epoch `epoch`, the `step_in_epoch`-th of `steps_per_epoch`. Returns the
/// per-case losses.
pub fn train_step(
    state: &mut TrainState,
    data: &TrainData,
    model: &ModelConfig,
    cfg: &TrainConfig,
    batch: &[usize],
    step_in_epoch: usize,
    steps_per_epoch: usize,
) -> Result<Vec<f64>> {
    let epoch = state.epoch;
    let store = &state.store;
    let results: Vec<Result<(f64, Vec<Array<f32>>)>> = batch
        .par_iter()
        .map(|&c| {
            let mut sample = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &[STREAM_SAMPLE, epoch as u64, c as u64]));
            let mut drop = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &[STREAM_DROPOUT, epoch as u64, c as u64]));
            case_gradients(store, model, &data.train[c], cfg.points_per_case, &mut sample, &mut drop)
        })
        .collect();
    let mut losses = Vec::with_capacity(batch.len());
    let mut total: Option<Vec<Array<f32>>> = None;
    for (r, &c) in results.into_iter().zip(batch) {
        let (l, g) = r?;
        if !l.is_finite() {
            return Err(TrainError::NonFinite { epoch: epoch + 1, case: c });
        }
        losses.push(l);
        match &mut total {
            None => total = Some(g),
            Some(t) => t.iter_mut().zip(&g).for_each(|(a, b)| a.add_assign(b)),
        }
    }
    let scale = 1.0 / batch.len() as f32;
    let grads: Vec<Array<f32>> = total.expect("non-empty batch").into_iter().map(|g| g.map(|v| v * scale)).collect();
    let lr = lr_at_epoch(epoch as f64 + (step_in_epoch + 1) as f64 / steps_per_epoch as f64, cfg);
    let opt = AdamWConfig { weight_decay: cfg.weight_decay, ..AdamWConfig::default() };
    state.store.adamw_step(&grads, lr, &opt).map_err(|e| match e {
        NumericsError::NonFinite(_) => TrainError::NonFinite { epoch: epoch + 1, case: batch[0] },
        e => e.into(),
    })?;
    Ok(losses)
}

/// Case order for an epoch.
pub fn epoch_order(n: usize, epoch: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(derive_seed(seed, &[STREAM_SHUFFLE, epoch as u64])));
    order
}

/// Deterministic evaluation inputs: `M` evenly spaced centerline points and every surface point.
pub fn eval_input<T: Real>(case: &NormalizedCase, m: usize) -> Result<(ModelInput<T>, Array<T>)> {
    if m > case.centerline.len() {
        return Err(TrainError::TooFewCenterlinePoints { have: case.centerline.len(), need: m });
    }
    let c_idx = even_indices(case.centerline.len(), m);
    let s_idx: Vec<usize> = (0..case.surface.len()).collect();
    Ok(make_input(case, &s_idx, &c_idx))
}

/// Model output for one case in physical units, with errors.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseEval {
    pub pressure: Vec<f64>,
    pub wss: Vec<f64>,
    /// Normalized-space loss.
    pub loss: f64,
    pub rel_l2_pressure: f64,
    pub rel_l2_wss: f64,
}

pub fn evaluate_case(store: &ParamStore<f32>, model: &ModelConfig, stats: &NormStats, case: &Case) -> Result<CaseEval> {
    let n = normalize_case(case, stats);
    let (input, _) = eval_input::<f32>(&n, model.m)?;
    let pred = predict(store, model, &input)?;
    let zp: Vec<f64> = (0..pred.rows()).map(|i| pred.at(i, 0) as f64).collect();
    let zw: Vec<f64> = (0..pred.rows()).map(|i| pred.at(i, 1) as f64).collect();
    let l = loss(&zp, &zw, &n.pressure, &n.wss)?;
    let (pressure, wss) = denormalize_fields(&pred, stats);
    let true_p: Vec<f64> = case.pressure.iter().map(|&v| v as f64).collect();
    let true_w: Vec<f64> = case.wss.iter().map(|&v| v as f64).collect();
    Ok(CaseEval {
        rel_l2_pressure: rel_l2(&pressure, &true_p)?,
        rel_l2_wss: rel_l2(&wss, &true_w)?,
        pressure,
        wss,
        loss: l,
    })
}

/// Mean loss and mean per-field relative errors over cases.
pub fn validate(
    store: &ParamStore<f32>,
    model: &ModelConfig,
    stats: &NormStats,
    cases: &[Case],
) -> Result<(f64, f64, f64)> {
    let evals: Vec<CaseEval> =
        cases.par_iter().map(|c| evaluate_case(store, model, stats, c)).collect::<Result<_>>()?;
    let n = evals.len() as f64;
    let mean = |f: fn(&CaseEval) -> f64| evals.iter().map(f).sum::<f64>() / n;
    Ok((mean(|e| e.loss), mean(|e| e.rel_l2_pressure), mean(|e| e.rel_l2_wss)))
}

/// Trains from `state` until `cfg.epochs`, calling `on_epoch` after each epoch.
///
/// Validation runs every `cfg.val_every` epochs and after the last one (when a
/// validation split exists); the parameters with the lowest validation loss are
/// kept in `state.best`.
pub fn train<F>(
    data: &TrainData,
    model: &ModelConfig,
    cfg: &TrainConfig,
    mut state: TrainState,
    mut on_epoch: F,
) -> Result<(TrainState, Vec<EpochRecord>)>
where
    F: FnMut(&EpochRecord, &TrainState) -> Result<()>,
{
    model.validate()?;
    cfg.validate()?;
    if data.train.is_empty() {
        return Err(TrainError::EmptySplit);
    }
    let mut history = Vec::new();
    let n = data.train.len();
    let steps = n.div_ceil(cfg.batch_size);
    while state.epoch < cfg.epochs {
        let order = epoch_order(n, state.epoch, cfg.seed);
        let mut losses = Vec::with_capacity(n);
        for (b, batch) in order.chunks(cfg.batch_size).enumerate() {
            losses.extend(train_step(&mut state, data, model, cfg, batch, b, steps)?);
        }
        state.epoch += 1;
        let epoch = state.epoch;
        let mut rec = EpochRecord {
            epoch,
            lr: lr_at_epoch(epoch as f64, cfg),
            train_loss: losses.iter().sum::<f64>() / n as f64,
            val_loss: None,
            val_rel_l2_pressure: None,
            val_rel_l2_wss: None,
        };
        if !data.val.is_empty() && (epoch % cfg.val_every == 0 || epoch == cfg.epochs) {
            let (vl, rp, rw) = validate(&state.store, model, &data.stats, &data.val)?;
            if !vl.is_finite() {
                return Err(TrainError::NonFinite { epoch, case: 0 });
            }
            rec.val_loss = Some(vl);
            rec.val_rel_l2_pressure = Some(rp);
            rec.val_rel_l2_wss = Some(rw);
            if state.best.as_ref().is_none_or(|b| vl < b.val_loss) {
                state.best = Some(BestCheckpoint { store: state.store.clone(), epoch, val_loss: vl });
            }
        }
        on_epoch(&rec, &state)?;
        history.push(rec);
    }
    Ok((state, history))
}
