use std::path::Path;

use super::container::{read_arrays, take_array, write_arrays, NamedArray, Reader};
use super::{read_file, write_atomic, DataError, Result};

pub const CASE_MAGIC: &[u8; 4] = b"CVF1";
pub const CASE_VERSION: u16 = 1;
pub const LITTLE_ENDIAN: u8 = 1;

/// One simulation instance as stored on disk.
///
/// Positions are in mm, flow in mm³/s, pressures and WSS in Pa.
#[derive(Debug, Clone, PartialEq)]
pub struct Case {
    pub flow: f64,
    pub inlet_pressure: f64,
    /// Kinematic inlet pressure in mm²/s², when the source provides one.
    pub kinematic_inlet_pressure: Option<f64>,
    /// `(x, y, z, r)` per centerline sample.
    pub centerline: Vec<[f32; 4]>,
    pub surface: Vec<[f32; 3]>,
    pub normals: Vec<[f32; 3]>,
    pub pressure: Vec<f32>,
    pub wss: Vec<f32>,
    /// Generating centerline index of each surface point.
    pub station: Vec<u32>,
}

impl Case {
    pub fn num_surface(&self) -> usize {
        self.surface.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.surface.len();
        if self.centerline.len() < 2 {
            return Err(DataError::Format("centerline needs at least 2 points".into()));
        }
        for (what, len) in [
            ("normals", self.normals.len()),
            ("pressure", self.pressure.len()),
            ("wss", self.wss.len()),
            ("station", self.station.len()),
        ] {
            if len != n {
                return Err(DataError::SizeMismatch(format!("{what} has {len} entries, surface has {n}")));
            }
        }
        if let Some(&bad) = self.station.iter().find(|&&s| s as usize >= self.centerline.len()) {
            return Err(DataError::Format(format!(
                "station index {bad} out of range for {} centerline points",
                self.centerline.len()
            )));
        }
        Ok(())
    }

    pub fn centerline_positions(&self) -> Vec<[f64; 3]> {
        self.centerline.iter().map(|p| [p[0] as f64, p[1] as f64, p[2] as f64]).collect()
    }

    pub fn radii(&self) -> Vec<f64> {
        self.centerline.iter().map(|p| p[3] as f64).collect()
    }
}

fn flat<const N: usize>(rows: &[[f32; N]]) -> Vec<f32> {
    rows.iter().flat_map(|r| r.iter().copied()).collect()
}

fn rows<const N: usize>(a: NamedArray) -> Result<Vec<[f32; N]>> {
    let dims = a.dims_usize();
    if dims.len() != 2 || dims[1] != N {
        return Err(DataError::SizeMismatch(format!("array {} must be [n, {N}], got {dims:?}", a.name)));
    }
    Ok(a.into_f32()?.chunks_exact(N).map(|c| c.try_into().expect("chunk of N")).collect())
}

fn vector(a: &NamedArray) -> Result<()> {
    if a.dims.len() != 1 {
        return Err(DataError::SizeMismatch(format!("array {} must be rank 1", a.name)));
    }
    Ok(())
}

/// Serializes a case into CVF1 bytes.
pub fn encode_case(case: &Case) -> Result<Vec<u8>> {
    case.validate()?;
    let n = case.surface.len();
    let mut buf = Vec::with_capacity(64 + n * 40 + case.centerline.len() * 16);
    buf.extend_from_slice(CASE_MAGIC);
    buf.extend_from_slice(&CASE_VERSION.to_le_bytes());
    buf.push(LITTLE_ENDIAN);
    buf.push(0);
    buf.extend_from_slice(&case.flow.to_le_bytes());
    buf.extend_from_slice(&case.inlet_pressure.to_le_bytes());
    buf.push(case.kinematic_inlet_pressure.is_some() as u8);
    buf.extend_from_slice(&case.kinematic_inlet_pressure.unwrap_or(0.0).to_le_bytes());
    let arrays = [
        NamedArray::f32("centerline", &[case.centerline.len(), 4], flat(&case.centerline)),
        NamedArray::f32("surface", &[n, 3], flat(&case.surface)),
        NamedArray::f32("normals", &[n, 3], flat(&case.normals)),
        NamedArray::f32("pressure", &[n], case.pressure.clone()),
        NamedArray::f32("wss", &[n], case.wss.clone()),
        NamedArray::u32("station", &[n], case.station.clone()),
    ];
    write_arrays(&mut buf, &arrays);
    Ok(buf)
}

/// Parses CVF1 bytes. Never returns partially decoded data.
pub fn decode_case(bytes: &[u8]) -> Result<Case> {
    let mut r = Reader::new(bytes);
    if r.bytes(4).map_err(|_| DataError::Format("file too short for a CVF1 header".into()))? != CASE_MAGIC {
        return Err(DataError::Format("bad magic, not a CVF1 case file".into()));
    }
    let version = r.u16()?;
    if version != CASE_VERSION {
        return Err(DataError::UnsupportedVersion { found: version, expected: CASE_VERSION });
    }
    if r.u8()? != LITTLE_ENDIAN {
        return Err(DataError::Format("only little-endian payloads are supported".into()));
    }
    r.u8()?;
    let flow = r.f64()?;
    let inlet_pressure = r.f64()?;
    let has_kinematic = match r.u8()? {
        0 => false,
        1 => true,
        other => return Err(DataError::Format(format!("bad kinematic-pressure flag {other}"))),
    };
    let kinematic = r.f64()?;
    let mut arrays = read_arrays(&mut r)?;
    r.finish()?;

    let centerline = rows::<4>(take_array(&mut arrays, "centerline")?)?;
    let surface = rows::<3>(take_array(&mut arrays, "surface")?)?;
    let normals = rows::<3>(take_array(&mut arrays, "normals")?)?;
    let pressure = take_array(&mut arrays, "pressure")?;
    vector(&pressure)?;
    let wss = take_array(&mut arrays, "wss")?;
    vector(&wss)?;
    let station = take_array(&mut arrays, "station")?;
    vector(&station)?;
    if let Some(extra) = arrays.first() {
        return Err(DataError::Format(format!("unexpected array {}", extra.name)));
    }
    let case = Case {
        flow,
        inlet_pressure,
        kinematic_inlet_pressure: has_kinematic.then_some(kinematic),
        centerline,
        surface,
        normals,
        pressure: pressure.into_f32()?,
        wss: wss.into_f32()?,
        station: station.into_u32()?,
    };
    case.validate()?;
    Ok(case)
}

/// Writes atomically (temp file in the same directory, then rename).
pub fn write_case(case: &Case, path: &Path) -> Result<()> {
    write_atomic(path, &encode_case(case)?)
}

pub fn read_case(path: &Path) -> Result<Case> {
    decode_case(&read_file(path)?)
}
