//! Binary container for complex arrays.
//!
//! Layout, all little-endian: magic `CLAB`, `u32` version, `u32` dtype
//! (1: pairs of `f32`, 2: pairs of `f64`), `u32` rank, `rank` dimensions as
//! `u64`, then the entries in column-major order. Frames additionally carry
//! their index space in a `<path>.sigma.json` sidecar.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::linalg::{CMatrix, CVector};
use crate::sigma::SampledSigma;

const MAGIC: &[u8; 4] = b"CLAB";
const VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum DType {
    #[default]
    Complex64,
    Complex128,
}

impl DType {
    fn code(self) -> u32 {
        match self {
            DType::Complex64 => 1,
            DType::Complex128 => 2,
        }
    }

    fn from_code(c: u32) -> Result<Self> {
        match c {
            1 => Ok(DType::Complex64),
            2 => Ok(DType::Complex128),
            other => Err(Error::Format(format!("unknown dtype code {other}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Array {
    pub dims: Vec<u64>,
    pub data: Vec<Complex64>,
}

impl Array {
    pub fn from_matrix(m: &CMatrix) -> Self {
        Self { dims: vec![m.nrows() as u64, m.ncols() as u64], data: m.as_slice().to_vec() }
    }

    pub fn from_vector(v: &CVector) -> Self {
        Self { dims: vec![v.len() as u64], data: v.as_slice().to_vec() }
    }

    pub fn into_matrix(self) -> Result<CMatrix> {
        match self.dims.as_slice() {
            [r, c] => Ok(CMatrix::from_vec(*r as usize, *c as usize, self.data)),
            [n] => Ok(CMatrix::from_vec(*n as usize, 1, self.data)),
            d => Err(Error::Format(format!("expected rank 1 or 2, found rank {}", d.len()))),
        }
    }

    pub fn into_vector(self) -> Result<CVector> {
        match self.dims.as_slice() {
            [_] => Ok(CVector::from_vec(self.data)),
            [_, 1] => Ok(CVector::from_vec(self.data)),
            d => Err(Error::Format(format!("expected a vector, found dimensions {d:?}"))),
        }
    }
}

pub fn encode(array: &Array, dtype: DType) -> Result<Vec<u8>> {
    let count: u64 = array.dims.iter().product();
    if count as usize != array.data.len() {
        return Err(Error::Format(format!(
            "dimensions {:?} do not match {} entries",
            array.dims,
            array.data.len()
        )));
    }
    let width = if dtype == DType::Complex64 { 8 } else { 16 };
    let mut out = Vec::with_capacity(16 + 8 * array.dims.len() + width * array.data.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&dtype.code().to_le_bytes());
    out.extend_from_slice(&(array.dims.len() as u32).to_le_bytes());
    for d in &array.dims {
        out.extend_from_slice(&d.to_le_bytes());
    }
    for z in &array.data {
        match dtype {
            DType::Complex64 => {
                out.extend_from_slice(&(z.re as f32).to_le_bytes());
                out.extend_from_slice(&(z.im as f32).to_le_bytes());
            }
            DType::Complex128 => {
                out.extend_from_slice(&z.re.to_le_bytes());
                out.extend_from_slice(&z.im.to_le_bytes());
            }
        }
    }
    Ok(out)
}

struct Reader<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.at.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::Format(format!("truncated container at byte {}", self.at)))?;
        let s = &self.bytes[self.at..end];
        self.at = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

pub fn decode(bytes: &[u8]) -> Result<(Array, DType)> {
    let mut r = Reader { bytes, at: 0 };
    if r.take(4)? != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let dtype = DType::from_code(r.u32()?)?;
    let rank = r.u32()? as usize;
    let dims = (0..rank).map(|_| r.u64()).collect::<Result<Vec<u64>>>()?;
    let count = dims
        .iter()
        .try_fold(1u64, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| Error::Format("dimension product overflows".into()))? as usize;
    let width = if dtype == DType::Complex64 { 8 } else { 16 };
    if bytes.len() - r.at != count * width {
        return Err(Error::Format(format!(
            "expected {} data bytes, found {}",
            count * width,
            bytes.len() - r.at
        )));
    }
    let mut data = Vec::with_capacity(count);
    for _ in 0..count {
        let z = match dtype {
            DType::Complex64 => {
                let re = f32::from_le_bytes(r.take(4)?.try_into().expect("4 bytes"));
                let im = f32::from_le_bytes(r.take(4)?.try_into().expect("4 bytes"));
                Complex64::new(re as f64, im as f64)
            }
            DType::Complex128 => {
                let re = f64::from_le_bytes(r.take(8)?.try_into().expect("8 bytes"));
                let im = f64::from_le_bytes(r.take(8)?.try_into().expect("8 bytes"));
                Complex64::new(re, im)
            }
        };
        data.push(z);
    }
    Ok((Array { dims, data }, dtype))
}

/// Writes through a temporary file in the same directory and renames it
/// into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| Error::Format(format!("{} has no file name", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn write_array(path: &Path, array: &Array, dtype: DType) -> Result<()> {
    write_atomic(path, &encode(array, dtype)?)
}

pub fn read_array(path: &Path) -> Result<Array> {
    Ok(decode(&fs::read(path)?)?.0)
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".sigma.json");
    PathBuf::from(s)
}

/// Windows as a `d x |Sigma|` matrix plus the index-space sidecar.
pub fn write_frame(path: &Path, frame: &Frame, dtype: DType) -> Result<()> {
    write_array(path, &Array::from_matrix(frame.windows()), dtype)?;
    write_atomic(&sidecar_path(path), frame.sigma().to_json()?.as_bytes())
}

pub fn read_frame(path: &Path) -> Result<Frame> {
    let windows = read_array(path)?.into_matrix()?;
    let sigma = SampledSigma::from_json(&fs::read_to_string(sidecar_path(path))?)?;
    Frame::new(sigma, windows)
}
