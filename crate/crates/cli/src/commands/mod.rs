pub mod bench;
pub mod eval;
pub mod generate;
pub mod lowfi;
pub mod train;

use std::path::Path;

use vesselrbf::dataio::{read_case, write_atomic, Case, Manifest, Split};
use vesselrbf::geometry::{Centerline, CenterlinePoint};
use vesselrbf::lowfi::{lowfi_solve, FluidProps, LowFiSolution};

use crate::error::{CliError, Result};
use crate::FluidArgs;

/// A case with its manifest path and split.
pub struct NamedCase {
    pub path: String,
    pub split: Split,
    pub case: Case,
}

pub fn load_manifest(path: &Path) -> Result<Manifest> {
    Manifest::load(path).map_err(|e| CliError::from(e).context(format!("loading manifest {}", path.display())))
}

/// Cases of the given splits, in manifest order.
pub fn load_cases(manifest_path: &Path, manifest: &Manifest, splits: &[Split]) -> Result<Vec<NamedCase>> {
    let root = manifest_path.parent().unwrap_or(Path::new("."));
    manifest
        .entries
        .iter()
        .filter(|e| splits.contains(&e.split))
        .map(|e| Ok(NamedCase { path: e.path.clone(), split: e.split, case: read_case(&root.join(&e.path))? }))
        .collect()
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::from(e).context(format!("creating {}", dir.display())))?;
    }
    Ok(write_atomic(path, text.as_bytes())?)
}

impl FluidArgs {
    pub fn props(&self) -> Result<FluidProps> {
        if !(self.mu > 0.0 && self.rho > 0.0 && self.mu.is_finite() && self.rho.is_finite()) {
            return Err(CliError::usage("--mu and --rho must be positive"));
        }
        // ν in mm²/s from μ in Pa·s and ρ in g/mL.
        Ok(FluidProps { mu: self.mu, rho: self.rho, nu: self.mu / self.rho * 1e6 })
    }
}

pub fn centerline_of(case: &Case) -> Result<Centerline> {
    let points =
        case.centerline.iter().map(|p| CenterlinePoint::new(p[0] as f64, p[1] as f64, p[2] as f64, p[3] as f64));
    Ok(Centerline::new(points.collect())?)
}

/// Low-fidelity solution on the case centerline and its surface fields,
/// mapped through each point's station index.
pub fn lowfi_fields(case: &Case, fluid: &FluidProps) -> Result<(LowFiSolution, Vec<f64>, Vec<f64>)> {
    let sol = lowfi_solve(&centerline_of(case)?, case.flow, case.inlet_pressure, fluid)?;
    let pressure = case.station.iter().map(|&s| case.inlet_pressure - sol.pressure_drop[s as usize]).collect();
    let wss = case.station.iter().map(|&s| sol.wss[s as usize]).collect();
    Ok((sol, pressure, wss))
}

pub fn to_f64(v: &[f32]) -> Vec<f64> {
    v.iter().map(|&x| x as f64).collect()
}

/// Formats floats for tables: shortest representation that round-trips.
pub fn fmt_f(x: f64) -> String {
    format!("{x}")
}
