use vesselrbf::dataio::{generate_dataset, read_file, GenerateConfig, SplitSpec};

use crate::error::{CliError, Result};
use crate::GenerateArgs;

fn range(v: &Option<Vec<f64>>, flag: &str) -> Result<Option<(f64, f64)>> {
    match v.as_deref() {
        None => Ok(None),
        Some(&[lo, hi]) if lo <= hi && lo.is_finite() && hi.is_finite() => Ok(Some((lo, hi))),
        Some(other) => Err(CliError::usage(format!("--{flag} expects `min,max` with min <= max, got {other:?}"))),
    }
}

pub fn config(args: &GenerateArgs) -> Result<GenerateConfig> {
    let mut cfg = match &args.config {
        Some(path) => {
            let bytes = read_file(path)?;
            serde_json::from_slice(&bytes)
                .map_err(|e| CliError::usage(format!("invalid range config {}: {e}", path.display())))?
        }
        None => GenerateConfig::default(),
    };
    if let Some(r) = range(&args.length, "length")? {
        cfg.length_mm = r;
    }
    if let Some(r) = range(&args.taper, "taper")? {
        cfg.taper_ratio = r;
    }
    if let Some(r) = range(&args.severity, "severity")? {
        cfg.severity = r;
    }
    if let Some(r) = range(&args.flow, "flow")? {
        cfg.flow = r;
    }
    if let Some(s) = args.stations {
        cfg.stations = s;
    }
    if let Some(p) = args.per_ring {
        cfg.per_ring = p;
    }
    Ok(cfg)
}

pub fn run(args: GenerateArgs) -> Result<()> {
    let cfg = config(&args)?;
    let split = match (&args.split_counts, args.split.as_slice()) {
        (Some(c), _) => match c.as_slice() {
            &[a, b, c] => SplitSpec::Counts([a, b, c]),
            _ => return Err(CliError::usage("--split-counts expects three comma-separated counts")),
        },
        (None, &[a, b, c]) => SplitSpec::Fractions([a, b, c]),
        (None, _) => return Err(CliError::usage("--split expects three comma-separated fractions")),
    };
    split.counts(args.n).map_err(CliError::usage)?;
    let manifest = generate_dataset(&args.out, args.n, &cfg, args.seed, split)
        .map_err(|e| CliError::from(e).context(format!("generating into {}", args.out.display())))?;
    let c = manifest.counts();
    println!(
        "wrote {} cases to {} (train {}, val {}, test {})",
        manifest.entries.len(),
        args.out.display(),
        c.train,
        c.val,
        c.test
    );
    Ok(())
}
