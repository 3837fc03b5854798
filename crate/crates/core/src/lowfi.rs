//! One-dimensional Hagen–Poiseuille model along vessel centerlines.
//!
//! Geometry is in mm, flow rates in mm³/s, viscosity in Pa·s; every output
//! pressure or stress is in Pa. The pressure gradient `8 μ Q / (π r⁴)` is
//! integrated with the composite trapezoid rule over centerline stations,
//! and wall shear stress uses the fully developed profile `4 μ Q / (π r³)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Centerline, GeometryError, SurfacePointSet, VesselTree};

const MM_TO_M: f64 = 1e-3;
const MM3_TO_M3: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LowFiError {
    #[error("non-positive radius {radius} at station {index}")]
    Domain { index: usize, radius: f64 },
    #[error("flow rate must be finite and >= 0, got {0}")]
    NegativeFlow(f64),
    #[error("inlet pressure must be > 0, got {0}")]
    BadInletPressure(f64),
    #[error("surface point {0} has no valid centerline station")]
    MissingStation(usize),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

pub type Result<T> = std::result::Result<T, LowFiError>;

/// Blood properties. `rho` is in g/mL, `nu` in mm²/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluidProps {
    pub mu: f64,
    pub rho: f64,
    pub nu: f64,
}

impl Default for FluidProps {
    fn default() -> Self {
        Self { mu: 0.004, rho: 1.06, nu: 3.77 }
    }
}

/// Low-fidelity result for one centerline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowFiSolution {
    /// Cumulative pressure drop from the inlet at each station (Pa).
    pub pressure_drop: Vec<f64>,
    /// Wall shear stress at each station (Pa).
    pub wss: Vec<f64>,
    /// Flow rate through the segment (mm³/s).
    pub flow: f64,
    /// `(P_a - ΔP(s)) / P_a` at each station.
    pub ffr: Vec<f64>,
}

impl LowFiSolution {
    pub fn ffr_min(&self) -> f64 {
        self.ffr.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// True when the pressure drop exceeds the inlet pressure somewhere.
    /// Such values are reported unclamped.
    pub fn has_nonpositive_ffr(&self) -> bool {
        self.ffr.iter().any(|&f| f <= 0.0)
    }
}

fn check_flow(q: f64) -> Result<()> {
    if q.is_finite() && q >= 0.0 {
        Ok(())
    } else {
        Err(LowFiError::NegativeFlow(q))
    }
}

fn radii_m(c: &Centerline) -> Result<Vec<f64>> {
    c.points()
        .iter()
        .enumerate()
        .map(|(i, p)| {
            if p.radius > 0.0 && p.radius.is_finite() {
                Ok(p.radius * MM_TO_M)
            } else {
                Err(LowFiError::Domain { index: i, radius: p.radius })
            }
        })
        .collect()
}

/// Cumulative pressure drop `ΔP(s_j)` at each station, in Pa.
pub fn poiseuille_pressure(c: &Centerline, q: f64, fluid: &FluidProps) -> Result<Vec<f64>> {
    check_flow(q)?;
    let r = radii_m(c)?;
    let s = c.arc_length();
    let q_si = q * MM3_TO_M3;
    let k = 8.0 * fluid.mu * q_si / std::f64::consts::PI;
    let grad: Vec<f64> = r.iter().map(|ri| k / ri.powi(4)).collect();
    let mut dp = Vec::with_capacity(r.len());
    let mut acc = 0.0;
    dp.push(0.0);
    for j in 1..r.len() {
        let ds = (s[j] - s[j - 1]) * MM_TO_M;
        acc += 0.5 * (grad[j - 1] + grad[j]) * ds;
        dp.push(acc);
    }
    Ok(dp)
}

/// Wall shear stress `4 μ Q / (π r³)` at each station, in Pa.
pub fn poiseuille_wss(c: &Centerline, q: f64, fluid: &FluidProps) -> Result<Vec<f64>> {
    check_flow(q)?;
    let r = radii_m(c)?;
    let k = 4.0 * fluid.mu * q * MM3_TO_M3 / std::f64::consts::PI;
    Ok(r.iter().map(|ri| k / ri.powi(3)).collect())
}

/// Per-segment flow: the root carries `q_in` and every bifurcation divides
/// its flow equally among its children.
pub fn split_flows(tree: &VesselTree, q_in: f64) -> Result<Vec<f64>> {
    check_flow(q_in)?;
    let order = tree.topological_order()?;
    let mut flows = vec![0.0; tree.segments().len()];
    flows[tree.root()] = q_in;
    for id in order {
        let children = tree.children(id);
        if children.is_empty() {
            continue;
        }
        let share = flows[id] / children.len() as f64;
        for ch in children {
            flows[ch] = share;
        }
    }
    Ok(flows)
}

fn ffr_from_drop(dp: &[f64], p_a: f64) -> Vec<f64> {
    dp.iter().map(|d| (p_a - d) / p_a).collect()
}

fn check_inlet(p_a: f64) -> Result<()> {
    if p_a.is_finite() && p_a > 0.0 {
        Ok(())
    } else {
        Err(LowFiError::BadInletPressure(p_a))
    }
}

/// Pressure drop, WSS and FFR profile along one centerline.
pub fn lowfi_solve(c: &Centerline, q: f64, p_a: f64, fluid: &FluidProps) -> Result<LowFiSolution> {
    check_inlet(p_a)?;
    let pressure_drop = poiseuille_pressure(c, q, fluid)?;
    let wss = poiseuille_wss(c, q, fluid)?;
    let ffr = ffr_from_drop(&pressure_drop, p_a);
    Ok(LowFiSolution { pressure_drop, wss, flow: q, ffr })
}

/// Low-fidelity solution over a tree. Each child's pressure drop starts from
/// its parent's outlet value; junction losses are zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeSolution {
    pub segments: Vec<LowFiSolution>,
}

impl TreeSolution {
    pub fn ffr_min(&self) -> f64 {
        self.segments.iter().map(LowFiSolution::ffr_min).fold(f64::INFINITY, f64::min)
    }
}

pub fn lowfi_solve_tree(tree: &VesselTree, q_in: f64, p_a: f64, fluid: &FluidProps) -> Result<TreeSolution> {
    check_inlet(p_a)?;
    let flows = split_flows(tree, q_in)?;
    let mut out: Vec<Option<LowFiSolution>> = vec![None; tree.segments().len()];
    for id in tree.topological_order()? {
        let seg = &tree.segments()[id];
        let offset = tree
            .parent(id)
            .and_then(|p| out[p].as_ref())
            .map(|p| *p.pressure_drop.last().expect("non-empty"))
            .unwrap_or(0.0);
        let mut dp = poiseuille_pressure(seg, flows[id], fluid)?;
        dp.iter_mut().for_each(|d| *d += offset);
        let wss = poiseuille_wss(seg, flows[id], fluid)?;
        let ffr = ffr_from_drop(&dp, p_a);
        out[id] = Some(LowFiSolution { pressure_drop: dp, wss, flow: flows[id], ffr });
    }
    Ok(TreeSolution { segments: out.into_iter().map(|s| s.expect("all visited")).collect() })
}

/// Attaches Poiseuille labels to wall points through their station index:
/// pressure `P_a - ΔP(station)` and WSS `τ_w(station)`, constant around each ring.
pub fn lowfi_label_surface(
    points: &SurfacePointSet,
    c: &Centerline,
    q: f64,
    p_a: f64,
    fluid: &FluidProps,
) -> Result<SurfacePointSet> {
    let sol = lowfi_solve(c, q, p_a, fluid)?;
    if points.station_index.len() != points.positions.len() {
        return Err(LowFiError::MissingStation(points.station_index.len()));
    }
    let mut pressure = Vec::with_capacity(points.len());
    let mut wss = Vec::with_capacity(points.len());
    for (i, &st) in points.station_index.iter().enumerate() {
        let st = st as usize;
        if st >= c.len() {
            return Err(LowFiError::MissingStation(i));
        }
        pressure.push(p_a - sol.pressure_drop[st]);
        wss.push(sol.wss[st]);
    }
    let mut labeled = points.clone();
    labeled.pressure = Some(pressure);
    labeled.wss = Some(wss);
    Ok(labeled)
}
