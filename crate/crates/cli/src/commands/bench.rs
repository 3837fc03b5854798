use serde::Serialize;
use vesselrbf::flopbench::{flop_table, sweep_centers, sweep_queries, FlopConvention, REFERENCE_GFLOPS};
use vesselrbf::model::{count_params, ModelConfig, ParamCount};

use super::write_text;
use crate::error::{CliError, Result};
use crate::profile::RunConfig;
use crate::BenchArgs;

pub const CENTERS_FILE: &str = "centers.csv";
pub const QUERIES_FILE: &str = "queries.csv";
pub const PARAMS_FILE: &str = "params.json";

#[derive(Serialize)]
struct ParamRow {
    m: usize,
    total: usize,
    components: ParamCount,
}

pub fn run(args: BenchArgs) -> Result<()> {
    if args.centers.is_empty() || args.queries.is_empty() {
        return Err(CliError::usage("--centers and --queries must not be empty"));
    }
    let model_overrides: Vec<String> = args.overrides.clone();
    if let Some(bad) = model_overrides.iter().find(|o| !o.starts_with("model.")) {
        return Err(CliError::usage(format!("bench accepts only model.* overrides, got `{bad}`")));
    }
    let base: ModelConfig = RunConfig::from_profile(args.profile).with_overrides(&model_overrides)?.model;
    let conv = if args.mac_as_one { FlopConvention::mac_as_one() } else { FlopConvention::default() };

    let centers = sweep_centers(&base, &args.centers, args.n, &conv)?;
    let queries = sweep_queries(&base, args.m, &args.queries, &conv)?;
    let params: Vec<ParamRow> = args
        .centers
        .iter()
        .map(|&m| {
            let c = count_params(&ModelConfig { m, ..base.clone() });
            ParamRow { m, total: c.total(), components: c }
        })
        .collect();

    if let Some(dir) = &args.out {
        write_text(&dir.join(CENTERS_FILE), &flop_table(&centers))?;
        write_text(&dir.join(QUERIES_FILE), &flop_table(&queries.reports))?;
        write_text(&dir.join(PARAMS_FILE), &(serde_json::to_string_pretty(&params)? + "\n"))?;
    }

    println!("M,N,GFLOPs,reference_GFLOPs,params");
    for (r, p) in centers.iter().zip(&params) {
        let reference = REFERENCE_GFLOPS
            .iter()
            .find(|&&(m, _)| m == r.m && r.n == 2048)
            .map(|&(_, g)| g.to_string())
            .unwrap_or_default();
        println!("{},{},{:.4},{reference},{}", r.m, r.n, r.gflops(), p.total);
    }
    let totals: Vec<String> = queries.reports.iter().map(|r| format!("N={}: {:.4}", r.n, r.gflops())).collect();
    println!("query sweep at M={}: {} (max/min {:.4})", args.m, totals.join(", "), queries.ratio);
    Ok(())
}
