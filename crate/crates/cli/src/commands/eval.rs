use rayon::prelude::*;
use serde::Serialize;
use vesselrbf::dataio::{load_checkpoint, Checkpoint};
use vesselrbf::lowfi::FluidProps;
use vesselrbf::metrics::{ffr_from_pressure, ffr_report, rel_l2, BlandAltman, FfrClassification};
use vesselrbf::training::evaluate_case;

use super::{fmt_f, load_cases, load_manifest, lowfi_fields, to_f64, write_text, NamedCase};
use crate::error::{CliError, Result};
use crate::{EvalArgs, Predictor};

pub const CASES_FILE: &str = "eval_cases.csv";
pub const SUMMARY_FILE: &str = "eval_summary.json";

const HEADER: &str = "case,split,rel_l2_pressure,rel_l2_wss,ffr_min_pred,ffr_min_true,\
lowfi_rel_l2_pressure,lowfi_rel_l2_wss,ffr_min_lowfi";

struct CaseResult {
    rel_p: f64,
    rel_w: f64,
    ffr_pred: f64,
    ffr_true: f64,
    lowfi_rel_p: f64,
    lowfi_rel_w: f64,
    ffr_lowfi: f64,
}

#[derive(Debug, Serialize)]
pub struct PredictorSummary {
    pub mean_rel_l2_pressure: f64,
    pub mean_rel_l2_wss: f64,
    pub mean_rel_l2: f64,
    pub ffr: FfrClassification,
    pub bland_altman: Option<BlandAltman>,
}

#[derive(Debug, Serialize)]
pub struct Summary {
    pub split: String,
    pub predictor: String,
    pub cases: usize,
    pub threshold: f64,
    pub model: PredictorSummary,
    pub lowfi_baseline: PredictorSummary,
}

fn evaluate(
    named: &NamedCase,
    predictor: Predictor,
    ckpt: Option<&Checkpoint>,
    fluid: &FluidProps,
) -> Result<CaseResult> {
    let case = &named.case;
    let true_p = to_f64(&case.pressure);
    let true_w = to_f64(&case.wss);
    let (_, lowfi_p, lowfi_w) = lowfi_fields(case, fluid)?;
    let (pred_p, pred_w) = match predictor {
        Predictor::Model => {
            let ckpt = ckpt.expect("checkpoint loaded for the model predictor");
            let e = evaluate_case(&ckpt.store, &ckpt.model, &ckpt.stats, case)?;
            (e.pressure, e.wss)
        }
        Predictor::Lowfi => (lowfi_p.clone(), lowfi_w.clone()),
        Predictor::Labels => (true_p.clone(), true_w.clone()),
    };
    let ffr_min = |p: &[f64]| -> Result<f64> { Ok(ffr_from_pressure(p, case.inlet_pressure)?.ffr_min) };
    Ok(CaseResult {
        rel_p: rel_l2(&pred_p, &true_p)?,
        rel_w: rel_l2(&pred_w, &true_w)?,
        ffr_pred: ffr_min(&pred_p)?,
        ffr_true: ffr_min(&true_p)?,
        lowfi_rel_p: rel_l2(&lowfi_p, &true_p)?,
        lowfi_rel_w: rel_l2(&lowfi_w, &true_w)?,
        ffr_lowfi: ffr_min(&lowfi_p)?,
    })
}

fn summarize(
    rel_p: Vec<f64>,
    rel_w: Vec<f64>,
    ffr_pred: Vec<f64>,
    ffr_true: Vec<f64>,
    threshold: f64,
) -> Result<PredictorSummary> {
    let n = rel_p.len() as f64;
    let mp = rel_p.iter().sum::<f64>() / n;
    let mw = rel_w.iter().sum::<f64>() / n;
    let report = ffr_report(ffr_pred, ffr_true, threshold)?;
    Ok(PredictorSummary {
        mean_rel_l2_pressure: mp,
        mean_rel_l2_wss: mw,
        mean_rel_l2: 0.5 * (mp + mw),
        ffr: report.classification,
        bland_altman: report.bland_altman,
    })
}

pub fn run(args: EvalArgs) -> Result<()> {
    if !(args.threshold > 0.0 && args.threshold.is_finite()) {
        return Err(CliError::usage("--threshold must be positive"));
    }
    let fluid = args.fluid.props()?;
    let ckpt = match (args.predictor, &args.checkpoint) {
        (Predictor::Model, None) => return Err(CliError::usage("--checkpoint is required for --predictor model")),
        (Predictor::Model, Some(path)) => {
            Some(load_checkpoint(path).map_err(|e| CliError::from(e).context(format!("loading {}", path.display())))?)
        }
        _ => None,
    };
    let manifest = load_manifest(&args.manifest)?;
    let cases = load_cases(&args.manifest, &manifest, &args.split.splits())?;
    if cases.is_empty() {
        return Err(CliError::data(format!("split {:?} of {} has no cases", args.split, args.manifest.display())));
    }
    let results: Vec<CaseResult> = cases
        .par_iter()
        .map(|c| evaluate(c, args.predictor, ckpt.as_ref(), &fluid).map_err(|e| e.context(format!("case {}", c.path))))
        .collect::<Result<_>>()?;

    let mut table = String::from(HEADER);
    table.push('\n');
    for (c, r) in cases.iter().zip(&results) {
        let cols = [r.rel_p, r.rel_w, r.ffr_pred, r.ffr_true, r.lowfi_rel_p, r.lowfi_rel_w, r.ffr_lowfi].map(fmt_f);
        table.push_str(&format!("{},{},{}\n", c.path, c.split, cols.join(",")));
    }

    let col = |f: fn(&CaseResult) -> f64| results.iter().map(f).collect::<Vec<f64>>();
    let summary = Summary {
        split: format!("{:?}", args.split).to_lowercase(),
        predictor: format!("{:?}", args.predictor).to_lowercase(),
        cases: results.len(),
        threshold: args.threshold,
        model: summarize(col(|r| r.rel_p), col(|r| r.rel_w), col(|r| r.ffr_pred), col(|r| r.ffr_true), args.threshold)?,
        lowfi_baseline: summarize(
            col(|r| r.lowfi_rel_p),
            col(|r| r.lowfi_rel_w),
            col(|r| r.ffr_lowfi),
            col(|r| r.ffr_true),
            args.threshold,
        )?,
    };
    let json = serde_json::to_string_pretty(&summary)?;
    if let Some(dir) = &args.out {
        write_text(&dir.join(CASES_FILE), &table)?;
        write_text(&dir.join(SUMMARY_FILE), &(json.clone() + "\n"))?;
    }
    println!("{json}");
    Ok(())
}
