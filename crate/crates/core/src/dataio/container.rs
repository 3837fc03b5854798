//! Length-prefixed named arrays shared by case files and checkpoints.
//!
//! Each array is encoded as
//!
//! ```text
//! u16      name length in bytes
//! [u8]     UTF-8 name
//! u8       dtype (1 = f32, 2 = u32)
//! u8       rank
//! [u64]    extents, one per axis
//! [..]     payload, little-endian, product(extents) elements
//! ```

use super::{DataError, Result};

pub const DTYPE_F32: u8 = 1;
pub const DTYPE_U32: u8 = 2;

#[derive(Debug, Clone, PartialEq)]
pub enum ArrayData {
    F32(Vec<f32>),
    U32(Vec<u32>),
}

impl ArrayData {
    fn len(&self) -> usize {
        match self {
            ArrayData::F32(v) => v.len(),
            ArrayData::U32(v) => v.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NamedArray {
    pub name: String,
    pub dims: Vec<u64>,
    pub data: ArrayData,
}

impl NamedArray {
    pub fn f32(name: impl Into<String>, dims: &[usize], data: Vec<f32>) -> Self {
        Self { name: name.into(), dims: dims.iter().map(|&d| d as u64).collect(), data: ArrayData::F32(data) }
    }

    pub fn u32(name: impl Into<String>, dims: &[usize], data: Vec<u32>) -> Self {
        Self { name: name.into(), dims: dims.iter().map(|&d| d as u64).collect(), data: ArrayData::U32(data) }
    }

    pub fn dims_usize(&self) -> Vec<usize> {
        self.dims.iter().map(|&d| d as usize).collect()
    }

    pub fn into_f32(self) -> Result<Vec<f32>> {
        match self.data {
            ArrayData::F32(v) => Ok(v),
            ArrayData::U32(_) => Err(DataError::Format(format!("array {} must be f32", self.name))),
        }
    }

    pub fn into_u32(self) -> Result<Vec<u32>> {
        match self.data {
            ArrayData::U32(v) => Ok(v),
            ArrayData::F32(_) => Err(DataError::Format(format!("array {} must be u32", self.name))),
        }
    }
}

pub fn write_arrays(buf: &mut Vec<u8>, arrays: &[NamedArray]) {
    buf.extend_from_slice(&(arrays.len() as u32).to_le_bytes());
    for a in arrays {
        debug_assert_eq!(a.dims.iter().product::<u64>() as usize, a.data.len());
        buf.extend_from_slice(&(a.name.len() as u16).to_le_bytes());
        buf.extend_from_slice(a.name.as_bytes());
        let dtype = match a.data {
            ArrayData::F32(_) => DTYPE_F32,
            ArrayData::U32(_) => DTYPE_U32,
        };
        buf.push(dtype);
        buf.push(a.dims.len() as u8);
        for d in &a.dims {
            buf.extend_from_slice(&d.to_le_bytes());
        }
        match &a.data {
            ArrayData::F32(v) => v.iter().for_each(|x| buf.extend_from_slice(&x.to_le_bytes())),
            ArrayData::U32(v) => v.iter().for_each(|x| buf.extend_from_slice(&x.to_le_bytes())),
        }
    }
}

/// Bounds-checked little-endian cursor.
pub struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Self { buf, pos: 0 }
    }

    pub fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    pub fn bytes(&mut self, n: usize) -> Result<&'a [u8]> {
        if n > self.remaining() {
            return Err(DataError::SizeMismatch(format!(
                "truncated: need {n} bytes at offset {}, {} left",
                self.pos,
                self.remaining()
            )));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        Ok(self.bytes(N)?.try_into().expect("length checked"))
    }

    pub fn u8(&mut self) -> Result<u8> {
        Ok(self.bytes(1)?[0])
    }

    pub fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.array()?))
    }

    pub fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.array()?))
    }

    pub fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.array()?))
    }

    pub fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.array()?))
    }

    /// Fails unless every byte has been consumed.
    pub fn finish(&self) -> Result<()> {
        if self.remaining() != 0 {
            return Err(DataError::SizeMismatch(format!("{} trailing bytes", self.remaining())));
        }
        Ok(())
    }
}

pub fn read_arrays(r: &mut Reader) -> Result<Vec<NamedArray>> {
    let count = r.u32()? as usize;
    let mut out: Vec<NamedArray> = Vec::with_capacity(count.min(64));
    for _ in 0..count {
        let len = r.u16()? as usize;
        let name = std::str::from_utf8(r.bytes(len)?)
            .map_err(|_| DataError::Format("array name is not UTF-8".into()))?
            .to_string();
        if out.iter().any(|a| a.name == name) {
            return Err(DataError::Format(format!("duplicate array {name}")));
        }
        let dtype = r.u8()?;
        let rank = r.u8()? as usize;
        let mut dims = Vec::with_capacity(rank);
        let mut n: u64 = 1;
        for _ in 0..rank {
            let d = r.u64()?;
            n = n.checked_mul(d).ok_or_else(|| DataError::SizeMismatch(format!("array {name} extents overflow")))?;
            dims.push(d);
        }
        // Every dtype is 4 bytes wide.
        let bytes =
            n.checked_mul(4).filter(|&b| b <= r.remaining() as u64).ok_or_else(|| {
                DataError::SizeMismatch(format!("array {name} declares {n} elements beyond the payload"))
            })? as usize;
        let raw = r.bytes(bytes)?;
        let words = raw.chunks_exact(4).map(|c| <[u8; 4]>::try_from(c).expect("chunk of 4"));
        let data = match dtype {
            DTYPE_F32 => ArrayData::F32(words.map(f32::from_le_bytes).collect()),
            DTYPE_U32 => ArrayData::U32(words.map(u32::from_le_bytes).collect()),
            other => return Err(DataError::Format(format!("array {name} has unknown dtype {other}"))),
        };
        out.push(NamedArray { name, dims, data });
    }
    Ok(out)
}

/// Removes and returns the array called `name`.
pub fn take_array(arrays: &mut Vec<NamedArray>, name: &str) -> Result<NamedArray> {
    let idx =
        arrays.iter().position(|a| a.name == name).ok_or_else(|| DataError::Format(format!("missing array {name}")))?;
    Ok(arrays.remove(idx))
}
