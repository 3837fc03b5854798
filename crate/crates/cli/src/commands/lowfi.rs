use rayon::prelude::*;
use vesselrbf::dataio::{write_case, Case, Manifest, ManifestEntry, MANIFEST_FILE};

use super::{fmt_f, load_cases, load_manifest, lowfi_fields, write_text, NamedCase};
use crate::error::{CliError, Result};
use crate::LowfiArgs;

const HEADER: &str = "case,split,flow_mm3_s,length_mm,min_radius_mm,dp_total_pa,ffr_min,wss_max_pa";

struct Row {
    line: String,
    relabeled: Case,
}

fn solve(named: &NamedCase, fluid: &vesselrbf::lowfi::FluidProps) -> Result<Row> {
    let case = &named.case;
    let (sol, pressure, wss) = lowfi_fields(case, fluid).map_err(|e| e.context(format!("case {}", named.path)))?;
    let length = super::centerline_of(case)?.total_length();
    let min_radius = case.radii().into_iter().fold(f64::INFINITY, f64::min);
    let wss_max = sol.wss.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let line = [
        named.path.clone(),
        named.split.to_string(),
        fmt_f(case.flow),
        fmt_f(length),
        fmt_f(min_radius),
        fmt_f(*sol.pressure_drop.last().expect("non-empty centerline")),
        fmt_f(sol.ffr_min()),
        fmt_f(wss_max),
    ]
    .join(",");
    let relabeled = Case {
        pressure: pressure.iter().map(|&v| v as f32).collect(),
        wss: wss.iter().map(|&v| v as f32).collect(),
        ..case.clone()
    };
    Ok(Row { line, relabeled })
}

pub fn run(args: LowfiArgs) -> Result<()> {
    let fluid = args.fluid.props()?;
    let manifest = load_manifest(&args.manifest)?;
    let cases = load_cases(&args.manifest, &manifest, &args.split.splits())?;
    let rows: Vec<Row> = cases.par_iter().map(|c| solve(c, &fluid)).collect::<Result<_>>()?;

    let mut table = String::from(HEADER);
    table.push('\n');
    for r in &rows {
        table.push_str(&r.line);
        table.push('\n');
    }
    match &args.table {
        Some(path) => write_text(path, &table)?,
        None => print!("{table}"),
    }

    if let Some(dir) = &args.relabel {
        if dir.join(MANIFEST_FILE) == args.manifest
            || dir.canonicalize().ok() == args.manifest.parent().and_then(|p| p.canonicalize().ok())
        {
            return Err(CliError::usage("--relabel must not be the input dataset directory"));
        }
        rows.par_iter().zip(&cases).try_for_each(|(r, c)| -> Result<()> {
            let path = dir.join(&c.path);
            if let Some(parent) = path.parent() {
                std::fs::create_dir_all(parent)
                    .map_err(|e| CliError::from(e).context(format!("creating {}", parent.display())))?;
            }
            Ok(write_case(&r.relabeled, &path)?)
        })?;
        let out = Manifest {
            name: format!("{}-lowfi", manifest.name),
            seed: manifest.seed,
            entries: cases.iter().map(|c| ManifestEntry { path: c.path.clone(), split: c.split }).collect(),
        };
        out.save(&dir.join(MANIFEST_FILE))?;
        eprintln!("wrote {} relabeled cases to {}", rows.len(), dir.display());
    }
    Ok(())
}
