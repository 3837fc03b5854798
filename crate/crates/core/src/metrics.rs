//! Field errors, FFR, classification of flow-limiting lesions and
//! Bland–Altman agreement.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("empty input")]
    Empty,
    #[error("length mismatch: {0} vs {1}")]
    Length(usize, usize),
    #[error("target has zero norm")]
    ZeroNorm,
    #[error("need at least 2 samples, got {0}")]
    TooFew(usize),
    #[error("inlet pressure must be > 0, got {0}")]
    BadInletPressure(f64),
}

pub type Result<T> = std::result::Result<T, MetricsError>;

/// Blood density used for the kinematic → Pa conversion (g/mL).
pub const BLOOD_DENSITY: f64 = 1.06;
pub const DEFAULT_FFR_THRESHOLD: f64 = 0.8;

fn aligned(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(MetricsError::Length(a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(MetricsError::Empty);
    }
    Ok(())
}

/// `‖pred − target‖₂ / ‖target‖₂`.
pub fn rel_l2(pred: &[f64], target: &[f64]) -> Result<f64> {
    aligned(pred, target)?;
    let den = target.iter().map(|t| t * t).sum::<f64>().sqrt();
    if den == 0.0 {
        return Err(MetricsError::ZeroNorm);
    }
    let num = pred.iter().zip(target).map(|(p, t)| (p - t) * (p - t)).sum::<f64>().sqrt();
    Ok(num / den)
}

/// Pointwise FFR and its minimum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FfrField {
    pub ffr: Vec<f64>,
    pub ffr_min: f64,
}

/// FFR from kinematic pressure `p̃` (mm²/s²): `P = p̃ ρ / 1000 + P_a`, `FFR = P / P_a`.
pub fn ffr_field(kinematic: &[f64], rho: f64, p_a: f64) -> Result<FfrField> {
    let absolute: Vec<f64> = kinematic.iter().map(|p| p * rho / 1000.0 + p_a).collect();
    ffr_from_pressure(&absolute, p_a)
}

/// FFR from absolute pressure in Pa.
pub fn ffr_from_pressure(pressure: &[f64], p_a: f64) -> Result<FfrField> {
    if !(p_a > 0.0 && p_a.is_finite()) {
        return Err(MetricsError::BadInletPressure(p_a));
    }
    if pressure.is_empty() {
        return Err(MetricsError::Empty);
    }
    let ffr: Vec<f64> = pressure.iter().map(|p| p / p_a).collect();
    let ffr_min = ffr.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(FfrField { ffr, ffr_min })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

/// Classification part of the FFR report.
///
/// A case is positive when its FFR_min is below the threshold. Rates with an
/// empty denominator are reported as 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FfrClassification {
    pub threshold: f64,
    pub confusion: Confusion,
    pub sensitivity: f64,
    pub specificity: f64,
    pub accuracy: f64,
    pub f1: f64,
    pub mae: f64,
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

pub fn classify_ffr(pred_min: &[f64], true_min: &[f64], threshold: f64) -> Result<FfrClassification> {
    aligned(pred_min, true_min)?;
    let mut c = Confusion { tp: 0, fp: 0, tn: 0, fn_: 0 };
    for (&p, &t) in pred_min.iter().zip(true_min) {
        match (p < threshold, t < threshold) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, false) => c.tn += 1,
            (false, true) => c.fn_ += 1,
        }
    }
    let precision = ratio(c.tp, c.tp + c.fp);
    let recall = ratio(c.tp, c.tp + c.fn_);
    let f1 = if precision + recall > 0.0 { 2.0 * precision * recall / (precision + recall) } else { 0.0 };
    let mae = pred_min.iter().zip(true_min).map(|(p, t)| (p - t).abs()).sum::<f64>() / pred_min.len() as f64;
    Ok(FfrClassification {
        threshold,
        sensitivity: recall,
        specificity: ratio(c.tn, c.tn + c.fp),
        accuracy: ratio(c.tp + c.tn, c.total()),
        f1,
        mae,
        confusion: c,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlandAltman {
    pub bias: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Mean of `pred − true` with ±1.96 population-SD limits.
pub fn bland_altman(pred: &[f64], truth: &[f64]) -> Result<BlandAltman> {
    if pred.len() != truth.len() {
        return Err(MetricsError::Length(pred.len(), truth.len()));
    }
    if pred.len() < 2 {
        return Err(MetricsError::TooFew(pred.len()));
    }
    let d: Vec<f64> = pred.iter().zip(truth).map(|(p, t)| p - t).collect();
    let n = d.len() as f64;
    let bias = d.iter().sum::<f64>() / n;
    let sd = (d.iter().map(|x| (x - bias) * (x - bias)).sum::<f64>() / n).sqrt();
    Ok(BlandAltman { bias, lower: bias - 1.96 * sd, upper: bias + 1.96 * sd })
}

/// Per-case FFR_min pairs with classification and agreement statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FfrReport {
    pub pred_min: Vec<f64>,
    pub true_min: Vec<f64>,
    pub classification: FfrClassification,
    /// `None` with fewer than two cases.
    pub bland_altman: Option<BlandAltman>,
}

pub fn ffr_report(pred_min: Vec<f64>, true_min: Vec<f64>, threshold: f64) -> Result<FfrReport> {
    let classification = classify_ffr(&pred_min, &true_min, threshold)?;
    let bland_altman = bland_altman(&pred_min, &true_min).ok();
    Ok(FfrReport { pred_min, true_min, classification, bland_altman })
}
