use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::case::{write_case, Case};
use super::manifest::{Manifest, SplitSpec, CASE_EXTENSION};
use super::{DataError, Result};
use crate::geometry::{
    generate_single_vessel, sample_wall_surface, VesselSpec, DEFAULT_INLET_RADIUS_MM, LENGTH_RANGE_MM, SEVERITY_RANGE,
    TAPER_RANGE,
};
use crate::lowfi::{lowfi_label_surface, FluidProps};
use crate::seed::derive_seed;

pub const MANIFEST_FILE: &str = "manifest.jsonl";

/// Sampling ranges for synthetic single-vessel cases; every draw is uniform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerateConfig {
    pub length_mm: (f64, f64),
    pub taper_ratio: (f64, f64),
    pub severity: (f64, f64),
    pub center_frac: (f64, f64),
    pub width_mm: (f64, f64),
    pub curvature_mm: (f64, f64),
    /// Inlet flow rate (mm³/s).
    pub flow: (f64, f64),
    pub inlet_radius_mm: f64,
    /// Inlet pressure (Pa); 13332 Pa = 100 mmHg.
    pub inlet_pressure: f64,
    pub stations: usize,
    pub per_ring: usize,
    pub fluid: FluidProps,
}

impl Default for GenerateConfig {
    fn default() -> Self {
        Self {
            length_mm: LENGTH_RANGE_MM,
            taper_ratio: TAPER_RANGE,
            severity: SEVERITY_RANGE,
            center_frac: (0.3, 0.7),
            width_mm: (3.0, 8.0),
            curvature_mm: (0.0, 2.0),
            flow: (1000.0, 4000.0),
            inlet_radius_mm: DEFAULT_INLET_RADIUS_MM,
            inlet_pressure: 13332.0,
            stations: 128,
            per_ring: 16,
            fluid: FluidProps::default(),
        }
    }
}

fn draw(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.random_range(lo..=hi)
    } else {
        lo
    }
}

/// One Poiseuille-labeled case; fully determined by `seed`.
pub fn generate_case(cfg: &GenerateConfig, seed: u64) -> Result<Case> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spec = VesselSpec {
        length_mm: draw(&mut rng, cfg.length_mm),
        taper_ratio: draw(&mut rng, cfg.taper_ratio),
        stenosis_severity: draw(&mut rng, cfg.severity),
        stenosis_center_frac: draw(&mut rng, cfg.center_frac),
        stenosis_width_mm: draw(&mut rng, cfg.width_mm),
        inlet_radius_mm: cfg.inlet_radius_mm,
        curvature_amplitude_mm: draw(&mut rng, cfg.curvature_mm),
        rng_seed: rng.random(),
    };
    let flow = draw(&mut rng, cfg.flow);
    let centerline = generate_single_vessel(&spec, cfg.stations)?;
    let surface = sample_wall_surface(&centerline, cfg.stations, cfg.per_ring)?;
    let labeled = lowfi_label_surface(&surface, &centerline, flow, cfg.inlet_pressure, &cfg.fluid)?;
    let f3 = |v: &[f64; 3]| v.map(|x| x as f32);
    let case = Case {
        flow,
        inlet_pressure: cfg.inlet_pressure,
        kinematic_inlet_pressure: None,
        centerline: centerline
            .points()
            .iter()
            .map(|p| [p.pos[0] as f32, p.pos[1] as f32, p.pos[2] as f32, p.radius as f32])
            .collect(),
        surface: labeled.positions.iter().map(f3).collect(),
        normals: labeled.normals.iter().map(f3).collect(),
        pressure: labeled.pressure.expect("labeled").iter().map(|&v| v as f32).collect(),
        wss: labeled.wss.expect("labeled").iter().map(|&v| v as f32).collect(),
        station: labeled.station_index,
    };
    case.validate()?;
    Ok(case)
}

/// Writes `n` cases named `case_00000.cvf`, … into `dir` together with a
/// manifest partitioned per `split`. Case `i` uses seed `derive_seed(seed, [i])`,
/// so the output does not depend on the worker count.
pub fn generate_dataset(dir: &Path, n: usize, cfg: &GenerateConfig, seed: u64, split: SplitSpec) -> Result<Manifest> {
    std::fs::create_dir_all(dir).map_err(|source| DataError::Io { path: dir.to_path_buf(), source })?;
    let names: Vec<String> = (0..n).map(|i| format!("case_{i:05}.{CASE_EXTENSION}")).collect();
    names.par_iter().enumerate().try_for_each(|(i, name)| -> Result<()> {
        let case = generate_case(cfg, derive_seed(seed, &[i as u64]))?;
        write_case(&case, &dir.join(name))
    })?;
    let manifest = Manifest::from_paths("synthetic", names, split, seed)?;
    manifest.save(&dir.join(MANIFEST_FILE))?;
    Ok(manifest)
}
