//! Parametric vessel centerlines and wall-surface sampling.
//!
//! Lengths are in millimetres throughout. A [`Centerline`] is an ordered
//! polyline of `(x, y, z, r)` samples; [`generate_single_vessel`] builds one
//! from a [`VesselSpec`] (linear taper, optional planar curvature, Gaussian
//! stenosis) and [`sample_wall_surface`] places rings of wall points around
//! it using rotation-minimizing frames.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance used when checking that child segments start at their parent's outlet.
pub const JOINT_TOLERANCE_MM: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("centerline needs at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("non-positive or non-finite radius {radius} at point {index}")]
    BadRadius { index: usize, radius: f64 },
    #[error("non-finite coordinate at point {0}")]
    NonFinite(usize),
    #[error("zero-length segment starting at point {0}")]
    DegenerateSegment(usize),
    #[error("invalid vessel spec: {0}")]
    InvalidSpec(String),
    #[error("invalid stenosis severity {0}, expected 0 <= severity < 1")]
    InvalidSeverity(f64),
    #[error("stenosis center {center} outside (0, {length})")]
    InvalidStenosisCenter { center: f64, length: f64 },
    #[error("invalid sampling request: {0}")]
    InvalidSampling(String),
    #[error("invalid vessel tree: {0}")]
    InvalidTree(String),
}

pub type Result<T> = std::result::Result<T, GeometryError>;

/// One centerline sample: position and lumen radius, both in mm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CenterlinePoint {
    pub pos: [f64; 3],
    pub radius: f64,
}

impl CenterlinePoint {
    pub fn new(x: f64, y: f64, z: f64, radius: f64) -> Self {
        Self { pos: [x, y, z], radius }
    }
}

/// Ordered polyline of radius-carrying samples.
///
/// Construction validates that radii are positive and that consecutive
/// points are distinct, so the arc-length parameter is strictly increasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Centerline {
    points: Vec<CenterlinePoint>,
}

impl Centerline {
    pub fn new(points: Vec<CenterlinePoint>) -> Result<Self> {
        if points.len() < 2 {
            return Err(GeometryError::TooFewPoints(points.len()));
        }
        for (i, p) in points.iter().enumerate() {
            if p.pos.iter().any(|v| !v.is_finite()) {
                return Err(GeometryError::NonFinite(i));
            }
            if !(p.radius.is_finite() && p.radius > 0.0) {
                return Err(GeometryError::BadRadius { index: i, radius: p.radius });
            }
        }
        for (i, w) in points.windows(2).enumerate() {
            if distance(&w[0].pos, &w[1].pos) <= 0.0 {
                return Err(GeometryError::DegenerateSegment(i));
            }
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[CenterlinePoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn radii(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.radius).collect()
    }

    /// Cumulative arc length at each point, starting at 0.
    pub fn arc_length(&self) -> Vec<f64> {
        arc_length(self)
    }

    pub fn total_length(&self) -> f64 {
        *self.arc_length().last().expect("validated centerline is non-empty")
    }

    pub fn inlet(&self) -> &CenterlinePoint {
        &self.points[0]
    }

    pub fn outlet(&self) -> &CenterlinePoint {
        &self.points[self.points.len() - 1]
    }

    /// Unit tangent at every point: central differences inside, one-sided at the ends.
    pub fn tangents(&self) -> Result<Vec<[f64; 3]>> {
        let n = self.points.len();
        (0..n)
            .map(|i| {
                let (a, b) = match i {
                    0 => (0, 1),
                    _ if i == n - 1 => (n - 2, n - 1),
                    _ => (i - 1, i + 1),
                };
                let t = sub(&self.points[b].pos, &self.points[a].pos);
                normalize(&t).ok_or(GeometryError::DegenerateSegment(a))
            })
            .collect()
    }
}

/// `s_0 = 0`, `s_i = s_{i-1} + |p_i - p_{i-1}|`.
pub fn arc_length(c: &Centerline) -> Vec<f64> {
    let mut s = Vec::with_capacity(c.points.len());
    let mut acc = 0.0;
    s.push(0.0);
    for w in c.points.windows(2) {
        acc += distance(&w[0].pos, &w[1].pos);
        s.push(acc);
    }
    s
}

/// Parameters of one synthetic single-vessel geometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VesselSpec {
    pub length_mm: f64,
    /// Outlet-to-inlet radius ratio of the baseline (pre-stenosis) profile.
    pub taper_ratio: f64,
    /// Fractional radius reduction at the stenosis throat. Zero disables the stenosis.
    pub stenosis_severity: f64,
    pub stenosis_center_frac: f64,
    pub stenosis_width_mm: f64,
    pub inlet_radius_mm: f64,
    pub curvature_amplitude_mm: f64,
    pub rng_seed: u64,
}

pub const LENGTH_RANGE_MM: (f64, f64) = (40.0, 70.0);
pub const TAPER_RANGE: (f64, f64) = (0.6, 0.8);
pub const SEVERITY_RANGE: (f64, f64) = (0.3, 0.7);
pub const DEFAULT_INLET_RADIUS_MM: f64 = 1.5;

impl Default for VesselSpec {
    fn default() -> Self {
        Self {
            length_mm: 50.0,
            taper_ratio: 0.7,
            stenosis_severity: 0.5,
            stenosis_center_frac: 0.5,
            stenosis_width_mm: 4.0,
            inlet_radius_mm: DEFAULT_INLET_RADIUS_MM,
            curvature_amplitude_mm: 0.0,
            rng_seed: 0,
        }
    }
}

impl VesselSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(GeometryError::InvalidSpec(msg));
        let in_range = |v: f64, (lo, hi): (f64, f64)| v.is_finite() && v >= lo && v <= hi;
        if !in_range(self.length_mm, LENGTH_RANGE_MM) {
            return bad(format!("length_mm {} outside [40, 70]", self.length_mm));
        }
        if !in_range(self.taper_ratio, TAPER_RANGE) {
            return bad(format!("taper_ratio {} outside [0.6, 0.8]", self.taper_ratio));
        }
        // Zero is accepted as "no stenosis" in addition to the generation range.
        if !in_range(self.stenosis_severity, (0.0, SEVERITY_RANGE.1)) {
            return bad(format!("stenosis_severity {} outside [0, 0.7]", self.stenosis_severity));
        }
        if !(self.stenosis_center_frac > 0.0 && self.stenosis_center_frac < 1.0) {
            return bad(format!("stenosis_center_frac {} outside (0, 1)", self.stenosis_center_frac));
        }
        if !(self.stenosis_width_mm.is_finite() && self.stenosis_width_mm > 0.0) {
            return bad(format!("stenosis_width_mm {} must be > 0", self.stenosis_width_mm));
        }
        if !(self.inlet_radius_mm.is_finite() && self.inlet_radius_mm > 0.0) {
            return bad(format!("inlet_radius_mm {} must be > 0", self.inlet_radius_mm));
        }
        if !(self.curvature_amplitude_mm.is_finite() && self.curvature_amplitude_mm >= 0.0) {
            return bad(format!("curvature_amplitude_mm {} must be >= 0", self.curvature_amplitude_mm));
        }
        Ok(())
    }

    /// Baseline radius at arc length `s` (linear taper, before stenosis).
    pub fn baseline_radius(&self, s: f64) -> f64 {
        let frac = s / self.length_mm;
        self.inlet_radius_mm * (1.0 + (self.taper_ratio - 1.0) * frac)
    }

    /// Radius at arc length `s` including the stenosis.
    pub fn radius_at(&self, s: f64) -> f64 {
        let center = self.stenosis_center_frac * self.length_mm;
        self.baseline_radius(s) * stenosis_factor(s, center, self.stenosis_severity, self.stenosis_width_mm)
    }
}

/// Multiplicative radius factor `1 - severity * exp(-(s - c)^2 / (2 (w/2)^2))`.
pub fn stenosis_factor(s: f64, center_s: f64, severity: f64, width_mm: f64) -> f64 {
    let sigma = 0.5 * width_mm;
    let u = s - center_s;
    1.0 - severity * (-(u * u) / (2.0 * sigma * sigma)).exp()
}

/// Builds a single vessel with `stations` centerline samples evenly spaced in arc length.
///
/// The centerline runs along +z with an optional planar sinusoidal offset in x
/// whose phase is drawn from `spec.rng_seed`. The axial extent is solved so the
/// sampled polyline's arc length equals `spec.length_mm`.
pub fn generate_single_vessel(spec: &VesselSpec, stations: usize) -> Result<Centerline> {
    spec.validate()?;
    if stations < 16 {
        return Err(GeometryError::InvalidSampling(format!("need at least 16 stations, got {stations}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    let phase: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let amp = spec.curvature_amplitude_mm;

    let offset = |u: f64| amp * ((std::f64::consts::TAU * u + phase).sin() - phase.sin());
    let polyline = |axial: f64| -> Vec<[f64; 3]> {
        let m = (stations - 1) as f64;
        (0..stations)
            .map(|i| {
                let u = i as f64 / m;
                [offset(u), 0.0, u * axial]
            })
            .collect()
    };
    let poly_len = |pts: &[[f64; 3]]| -> f64 { pts.windows(2).map(|w| distance(&w[0], &w[1])).sum() };

    // Arc length is monotone in the axial extent; bisect on the sampled polyline.
    let target = spec.length_mm;
    let (mut lo, mut hi) = (0.0, target);
    let mut axial = target;
    if amp > 0.0 {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if poly_len(&polyline(mid)) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        axial = 0.5 * (lo + hi);
    }
    let pts = polyline(axial);

    // Radii follow the arc length of the actual polyline, rescaled so s(L) = length_mm.
    let mut s = vec![0.0; pts.len()];
    for i in 1..pts.len() {
        s[i] = s[i - 1] + distance(&pts[i - 1], &pts[i]);
    }
    let scale = target / s[s.len() - 1];
    let points = pts
        .iter()
        .zip(&s)
        .map(|(p, &si)| CenterlinePoint { pos: *p, radius: spec.baseline_radius(si * scale) })
        .collect();
    let base = Centerline::new(points)?;
    if spec.stenosis_severity == 0.0 {
        return Ok(base);
    }
    let center_s = spec.stenosis_center_frac * base.total_length();
    apply_stenosis(&base, center_s, spec.stenosis_severity, spec.stenosis_width_mm)
}

/// Multiplies radii by the Gaussian stenosis factor; positions are unchanged.
pub fn apply_stenosis(c: &Centerline, center_s: f64, severity: f64, width_mm: f64) -> Result<Centerline> {
    if !(0.0..1.0).contains(&severity) {
        return Err(GeometryError::InvalidSeverity(severity));
    }
    if !(width_mm.is_finite() && width_mm > 0.0) {
        return Err(GeometryError::InvalidSpec(format!("stenosis width {width_mm} must be > 0")));
    }
    let s = c.arc_length();
    let length = s[s.len() - 1];
    if !(center_s > 0.0 && center_s < length) {
        return Err(GeometryError::InvalidStenosisCenter { center: center_s, length });
    }
    let points = c
        .points
        .iter()
        .zip(&s)
        .map(|(p, &si)| CenterlinePoint {
            pos: p.pos,
            radius: p.radius * stenosis_factor(si, center_s, severity, width_mm),
        })
        .collect();
    Centerline::new(points)
}

/// Wall points with outward normals, tagged by ring and centerline station.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SurfacePointSet {
    pub positions: Vec<[f64; 3]>,
    pub normals: Vec<[f64; 3]>,
    /// Ring number (0-based, in station order).
    pub ring_index: Vec<u32>,
    /// Index of the generating centerline point.
    pub station_index: Vec<u32>,
    pub pressure: Option<Vec<f64>>,
    pub wss: Option<Vec<f64>>,
}

impl SurfacePointSet {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

/// `count` indices spread evenly over `0..len`, always including both ends when `count >= 2`.
pub fn even_indices(len: usize, count: usize) -> Vec<usize> {
    match count {
        0 => Vec::new(),
        1 => vec![0],
        _ => {
            let span = (len - 1) as f64;
            let steps = (count - 1) as f64;
            (0..count).map(|i| ((i as f64) * span / steps).round() as usize).collect()
        }
    }
}

/// Rotation-minimizing frame `(normal, binormal)` at every centerline point,
/// propagated with the double-reflection method.
///
/// The initial normal is the global x axis projected onto the plane
/// orthogonal to the inlet tangent (falling back to y when parallel).
pub fn rotation_minimizing_frames(c: &Centerline) -> Result<Vec<([f64; 3], [f64; 3])>> {
    let tangents = c.tangents()?;
    let t0 = tangents[0];
    let seed = if t0[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let mut n = normalize(&sub(&seed, &scale(&t0, dot(&seed, &t0))))
        .ok_or_else(|| GeometryError::InvalidSampling("cannot seed frame".into()))?;
    let mut frames = Vec::with_capacity(c.len());
    frames.push((n, cross(&t0, &n)));
    for i in 0..c.len() - 1 {
        let x0 = c.points[i].pos;
        let x1 = c.points[i + 1].pos;
        let ti = tangents[i];
        let tn = tangents[i + 1];
        let v1 = sub(&x1, &x0);
        let c1 = dot(&v1, &v1);
        if c1 <= 0.0 {
            return Err(GeometryError::DegenerateSegment(i));
        }
        let r_l = sub(&n, &scale(&v1, 2.0 * dot(&v1, &n) / c1));
        let t_l = sub(&ti, &scale(&v1, 2.0 * dot(&v1, &ti) / c1));
        let v2 = sub(&tn, &t_l);
        let c2 = dot(&v2, &v2);
        let next = if c2 > 0.0 { sub(&r_l, &scale(&v2, 2.0 * dot(&v2, &r_l) / c2)) } else { r_l };
        // Re-orthogonalize against the tangent to stop drift.
        n = normalize(&sub(&next, &scale(&tn, dot(&next, &tn)))).ok_or(GeometryError::DegenerateSegment(i))?;
        frames.push((n, cross(&tn, &n)));
    }
    Ok(frames)
}

/// Places `per_ring` points evenly in angle around each of `stations`
/// evenly chosen centerline points.
///
/// Point `k` of a ring sits at `p + r (cos θ n + sin θ b)` with `θ = 2πk/per_ring`;
/// its normal is the radial direction `cos θ n + sin θ b`.
pub fn sample_wall_surface(c: &Centerline, stations: usize, per_ring: usize) -> Result<SurfacePointSet> {
    if per_ring < 3 {
        return Err(GeometryError::InvalidSampling(format!("per_ring must be >= 3, got {per_ring}")));
    }
    if stations == 0 || stations > c.len() {
        return Err(GeometryError::InvalidSampling(format!("stations must be in 1..={}, got {stations}", c.len())));
    }
    let frames = rotation_minimizing_frames(c)?;
    let selected = even_indices(c.len(), stations);
    let total = selected.len() * per_ring;
    let mut out = SurfacePointSet {
        positions: Vec::with_capacity(total),
        normals: Vec::with_capacity(total),
        ring_index: Vec::with_capacity(total),
        station_index: Vec::with_capacity(total),
        pressure: None,
        wss: None,
    };
    for (ring, &station) in selected.iter().enumerate() {
        let p = c.points[station];
        let (n, b) = frames[station];
        for k in 0..per_ring {
            let theta = std::f64::consts::TAU * k as f64 / per_ring as f64;
            let (sin, cos) = theta.sin_cos();
            let dir = [cos * n[0] + sin * b[0], cos * n[1] + sin * b[1], cos * n[2] + sin * b[2]];
            let dir = normalize(&dir).expect("frame vectors are orthonormal");
            out.positions.push([
                p.pos[0] + p.radius * dir[0],
                p.pos[1] + p.radius * dir[1],
                p.pos[2] + p.radius * dir[2],
            ]);
            out.normals.push(dir);
            out.ring_index.push(ring as u32);
            out.station_index.push(station as u32);
        }
    }
    Ok(out)
}

/// Branching vessel: centerline segments with a parent per segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VesselTree {
    segments: Vec<Centerline>,
    parents: Vec<Option<usize>>,
    root: usize,
}

impl VesselTree {
    /// Validates that there is exactly one root, parents are in range, the
    /// topology is acyclic and each child starts at its parent's outlet.
    pub fn new(segments: Vec<Centerline>, parents: Vec<Option<usize>>) -> Result<Self> {
        if segments.is_empty() {
            return Err(GeometryError::InvalidTree("no segments".into()));
        }
        if segments.len() != parents.len() {
            return Err(GeometryError::InvalidTree(format!(
                "{} segments but {} parent entries",
                segments.len(),
                parents.len()
            )));
        }
        let roots: Vec<usize> = (0..parents.len()).filter(|&i| parents[i].is_none()).collect();
        if roots.len() != 1 {
            return Err(GeometryError::InvalidTree(format!("expected exactly one root, found {}", roots.len())));
        }
        for (i, p) in parents.iter().enumerate() {
            if let Some(p) = *p {
                if p >= segments.len() || p == i {
                    return Err(GeometryError::InvalidTree(format!("segment {i} has invalid parent {p}")));
                }
            }
        }
        let tree = Self { segments, parents, root: roots[0] };
        tree.topological_order()?;
        for (i, p) in tree.parents.iter().enumerate() {
            if let Some(p) = *p {
                let gap = distance(&tree.segments[p].outlet().pos, &tree.segments[i].inlet().pos);
                if gap > JOINT_TOLERANCE_MM {
                    return Err(GeometryError::InvalidTree(format!(
                        "segment {i} starts {gap} mm from its parent's outlet"
                    )));
                }
            }
        }
        Ok(tree)
    }

    pub fn segments(&self) -> &[Centerline] {
        &self.segments
    }

    pub fn parent(&self, id: usize) -> Option<usize> {
        self.parents[id]
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn children(&self, id: usize) -> Vec<usize> {
        (0..self.parents.len()).filter(|&i| self.parents[i] == Some(id)).collect()
    }

    /// Breadth-first order from the root. Fails if some segment is unreachable,
    /// which for single-parent topologies means it sits on a cycle.
    pub fn topological_order(&self) -> Result<Vec<usize>> {
        let mut order = vec![self.root];
        let mut head = 0;
        while head < order.len() {
            let id = order[head];
            head += 1;
            order.extend(self.children(id));
            if order.len() > self.segments.len() {
                return Err(GeometryError::InvalidTree("cycle detected".into()));
            }
        }
        if order.len() != self.segments.len() {
            return Err(GeometryError::InvalidTree(
                "cycle detected: some segments are unreachable from the root".into(),
            ));
        }
        Ok(order)
    }
}

pub(crate) fn sub(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn scale(a: &[f64; 3], s: f64) -> [f64; 3] {
    [a[0] * s, a[1] * s, a[2] * s]
}

fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

pub(crate) fn distance(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let d = sub(a, b);
    dot(&d, &d).sqrt()
}

fn normalize(a: &[f64; 3]) -> Option<[f64; 3]> {
    let n = dot(a, a).sqrt();
    (n > 0.0 && n.is_finite()).then(|| scale(a, 1.0 / n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn straight(n: usize, length: f64, r: f64) -> Centerline {
        let pts = (0..n).map(|i| CenterlinePoint::new(0.0, 0.0, length * i as f64 / (n - 1) as f64, r)).collect();
        Centerline::new(pts).unwrap()
    }

    #[test]
    fn straight_tapered_tube_without_stenosis() {
        let spec = VesselSpec { stenosis_severity: 0.0, ..VesselSpec::default() };
        let c = generate_single_vessel(&spec, 101).unwrap();
        assert_relative_eq!(c.total_length(), 50.0, max_relative = 1e-3);
        assert_relative_eq!(c.inlet().radius, 1.5, epsilon = 1e-12);
        assert_relative_eq!(c.outlet().radius, 1.05, epsilon = 1e-6);
        for p in c.points() {
            assert_eq!(p.pos[0], 0.0);
            assert_eq!(p.pos[1], 0.0);
        }
        let radii = c.radii();
        assert!(radii.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn length_bounds_are_enforced() {
        for len in [40.0, 70.0] {
            let spec = VesselSpec { length_mm: len, ..VesselSpec::default() };
            assert!(generate_single_vessel(&spec, 64).is_ok());
        }
        let spec = VesselSpec { length_mm: 75.0, ..VesselSpec::default() };
        assert!(matches!(generate_single_vessel(&spec, 64), Err(GeometryError::InvalidSpec(_))));
        let spec = VesselSpec { taper_ratio: 0.9, ..VesselSpec::default() };
        assert!(generate_single_vessel(&spec, 64).is_err());
        assert!(generate_single_vessel(&VesselSpec::default(), 15).is_err());
    }

    #[test]
    fn throat_radius_is_half_the_tapered_radius() {
        // Odd station count puts a station exactly at mid-length.
        let spec = VesselSpec {
            stenosis_severity: 0.5,
            stenosis_width_mm: 4.0,
            stenosis_center_frac: 0.5,
            ..VesselSpec::default()
        };
        let c = generate_single_vessel(&spec, 129).unwrap();
        let mid = c.points()[64].radius;
        let tapered = 1.5 * (1.0 + (0.7 - 1.0) * 0.5);
        assert_relative_eq!(mid, 0.5 * tapered, epsilon = 1e-6);
    }

    #[test]
    fn stenosis_profile_values() {
        let c = straight(201, 40.0, 2.0);
        let same = apply_stenosis(&c, 20.0, 0.0, 4.0).unwrap();
        assert_eq!(same, c);

        let out = apply_stenosis(&c, 20.0, 0.5, 4.0).unwrap();
        // station spacing 0.2 mm: index 100 is the center, 90 is 2 mm upstream
        assert_relative_eq!(out.points()[100].radius, 1.0, epsilon = 1e-12);
        let expected = 1.0 - 0.5 * (-0.5f64).exp();
        assert_relative_eq!(out.points()[90].radius / 2.0, expected, epsilon = 1e-12);
        assert_relative_eq!(expected, 0.6967, epsilon = 1e-4);
        for (a, b) in out.points().iter().zip(c.points()) {
            assert_eq!(a.pos, b.pos);
        }
        assert!(matches!(apply_stenosis(&c, 20.0, 1.0, 4.0), Err(GeometryError::InvalidSeverity(_))));
        assert!(apply_stenosis(&c, 0.0, 0.5, 4.0).is_err());
    }

    #[test]
    fn stenosis_is_local() {
        let c = straight(801, 80.0, 1.0);
        let width = 2.0;
        let out = apply_stenosis(&c, 40.0, 0.7, width).unwrap();
        let s = c.arc_length();
        for ((a, b), si) in out.points().iter().zip(c.points()).zip(&s) {
            if (si - 40.0).abs() > 5.0 * width {
                assert!((a.radius - b.radius).abs() / b.radius < 1e-5);
            }
        }
    }

    #[test]
    fn arc_length_examples() {
        let c =
            Centerline::new(vec![CenterlinePoint::new(0.0, 0.0, 0.0, 1.0), CenterlinePoint::new(3.0, 4.0, 0.0, 1.0)])
                .unwrap();
        assert_eq!(c.arc_length(), vec![0.0, 5.0]);

        let s = straight(5, 8.0, 1.0).arc_length();
        assert_eq!(s, vec![0.0, 2.0, 4.0, 6.0, 8.0]);

        let (radius, phi) = (10.0, 1.2);
        let pts = (0..=2000)
            .map(|i| {
                let a = phi * i as f64 / 2000.0;
                CenterlinePoint::new(radius * a.cos(), radius * a.sin(), 0.0, 1.0)
            })
            .collect();
        let arc = Centerline::new(pts).unwrap();
        assert_relative_eq!(arc.total_length(), radius * phi, max_relative = 1e-3);
    }

    #[test]
    fn invalid_centerlines_rejected() {
        assert!(matches!(
            Centerline::new(vec![CenterlinePoint::new(0.0, 0.0, 0.0, 1.0)]),
            Err(GeometryError::TooFewPoints(1))
        ));
        assert!(matches!(
            Centerline::new(vec![CenterlinePoint::new(0.0, 0.0, 0.0, 1.0), CenterlinePoint::new(0.0, 0.0, 0.0, 1.0),]),
            Err(GeometryError::DegenerateSegment(0))
        ));
        assert!(matches!(
            Centerline::new(vec![CenterlinePoint::new(0.0, 0.0, 0.0, 1.0), CenterlinePoint::new(0.0, 0.0, 1.0, 0.0),]),
            Err(GeometryError::BadRadius { index: 1, .. })
        ));
    }

    #[test]
    fn axis_aligned_ring() {
        let c = straight(11, 10.0, 1.0);
        let surf = sample_wall_surface(&c, 11, 4).unwrap();
        assert_eq!(surf.len(), 44);
        let p = surf.positions[0];
        assert_relative_eq!(p[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(p[1], 0.0, epsilon = 1e-12);
        assert_relative_eq!(surf.normals[0][0], 1.0, epsilon = 1e-12);
        let expected = [[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]];
        for (k, e) in expected.iter().enumerate() {
            assert_relative_eq!(surf.positions[k][0], e[0], epsilon = 1e-12);
            assert_relative_eq!(surf.positions[k][1], e[1], epsilon = 1e-12);
        }
        assert!(sample_wall_surface(&c, 11, 2).is_err());
    }

    #[test]
    fn curved_vessel_surface_invariants() {
        let spec = VesselSpec { curvature_amplitude_mm: 3.0, rng_seed: 7, ..VesselSpec::default() };
        let c = generate_single_vessel(&spec, 128).unwrap();
        assert_relative_eq!(c.total_length(), 50.0, max_relative = 1e-3);
        let surf = sample_wall_surface(&c, 64, 12).unwrap();
        for i in 0..surf.len() {
            let st = c.points()[surf.station_index[i] as usize];
            let n = surf.normals[i];
            assert!((dot(&n, &n).sqrt() - 1.0).abs() < 1e-6);
            assert!((distance(&surf.positions[i], &st.pos) - st.radius).abs() < 1e-6);
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = VesselSpec { curvature_amplitude_mm: 2.0, rng_seed: 42, ..VesselSpec::default() };
        let a = generate_single_vessel(&spec, 64).unwrap();
        let b = generate_single_vessel(&spec, 64).unwrap();
        assert_eq!(a, b);
        let other = VesselSpec { rng_seed: 43, ..spec };
        assert_ne!(a, generate_single_vessel(&other, 64).unwrap());
    }

    #[test]
    fn tree_validation() {
        let a = straight(5, 4.0, 1.0);
        let b =
            Centerline::new(vec![CenterlinePoint::new(0.0, 0.0, 4.0, 0.8), CenterlinePoint::new(1.0, 0.0, 6.0, 0.8)])
                .unwrap();
        let tree = VesselTree::new(vec![a.clone(), b.clone(), b.clone()], vec![None, Some(0), Some(0)]).unwrap();
        assert_eq!(tree.children(0), vec![1, 2]);
        assert_eq!(tree.topological_order().unwrap(), vec![0, 1, 2]);

        let far =
            Centerline::new(vec![CenterlinePoint::new(5.0, 0.0, 4.0, 0.8), CenterlinePoint::new(6.0, 0.0, 6.0, 0.8)])
                .unwrap();
        assert!(VesselTree::new(vec![a.clone(), far], vec![None, Some(0)]).is_err());
        // 1 -> 2 -> 1 is a cycle detached from the root
        assert!(matches!(
            VesselTree::new(vec![a.clone(), b.clone(), b.clone()], vec![None, Some(2), Some(1)]),
            Err(GeometryError::InvalidTree(_))
        ));
        assert!(VesselTree::new(vec![a.clone(), a], vec![None, None]).is_err());
    }
}
