//! Binary MPS checkpoints with a JSON metadata sidecar.
//!
//! Layout, all integers little-endian:
//!   magic "MPSCHKP1" | u32 version | u32 n_tensors | u32 center
//!   then per tensor: u32 ndim (always 3) | ndim x u64 dims
//!   | dims.product() x (f64 re, f64 im) in row-major order
//!
//! The sidecar lives at `<file>.json` and carries run metadata that does not
//! belong in the tensor stream. Round trips are bit exact.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read as IoRead, Write as IoWrite};
use std::path::{Path, PathBuf};

use ndarray::Array3;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensornet::mps::MpsState;

const MAGIC: &[u8; 8] = b"MPSCHKP1";
const VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CheckpointMeta {
    pub time: f64,
    pub step: u64,
    pub config_hash: String,
    pub bond_dims: Vec<usize>,
    pub chi_saturated: bool,
}

fn sidecar_path(path: &Path) -> PathBuf {
    let mut os = path.as_os_str().to_owned();
    os.push(".json");
    PathBuf::from(os)
}

pub fn save_checkpoint(path: &Path, state: &MpsState, meta: &CheckpointMeta) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(state.n_sites() as u32).to_le_bytes())?;
    w.write_all(&(state.center() as u32).to_le_bytes())?;
    for i in 0..state.n_sites() {
        let t = state.tensor(i);
        let (l, p, r) = t.dim();
        w.write_all(&3u32.to_le_bytes())?;
        for d in [l, p, r] {
            w.write_all(&(d as u64).to_le_bytes())?;
        }
        let std = t.as_standard_layout();
        for z in std.iter() {
            w.write_all(&z.re.to_le_bytes())?;
            w.write_all(&z.im.to_le_bytes())?;
        }
    }
    w.flush()?;
    let json = serde_json::to_string_pretty(meta)?;
    std::fs::write(sidecar_path(path), json)?;
    Ok(())
}

fn read_u32(r: &mut impl IoRead) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(r: &mut impl IoRead) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64(r: &mut impl IoRead) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

pub fn load_checkpoint(path: &Path) -> Result<(MpsState, CheckpointMeta)> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::validation(format!(
            "{} is not an MPS checkpoint (bad magic)",
            path.display()
        )));
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(Error::validation(format!(
            "unsupported checkpoint version {version}"
        )));
    }
    let n = read_u32(&mut r)? as usize;
    let center = read_u32(&mut r)? as usize;
    if n == 0 || center >= n {
        return Err(Error::validation("corrupt checkpoint header"));
    }
    let mut tensors = Vec::with_capacity(n);
    for _ in 0..n {
        let ndim = read_u32(&mut r)?;
        if ndim != 3 {
            return Err(Error::validation(format!("tensor rank {ndim}, expected 3")));
        }
        let l = read_u64(&mut r)? as usize;
        let p = read_u64(&mut r)? as usize;
        let rb = read_u64(&mut r)? as usize;
        let count = l
            .checked_mul(p)
            .and_then(|x| x.checked_mul(rb))
            .ok_or_else(|| Error::validation("tensor dimensions overflow"))?;
        let mut data = Vec::with_capacity(count);
        for _ in 0..count {
            let re = read_f64(&mut r)?;
            let im = read_f64(&mut r)?;
            data.push(C64::new(re, im));
        }
        let t = Array3::from_shape_vec((l, p, rb), data)
            .map_err(|e| Error::validation(format!("tensor shape mismatch: {e}")))?;
        tensors.push(t);
    }
    let mut trailer = Vec::new();
    r.read_to_end(&mut trailer)?;
    if !trailer.is_empty() {
        return Err(Error::validation("trailing bytes after last tensor"));
    }
    let meta_raw = std::fs::read_to_string(sidecar_path(path))?;
    let meta: CheckpointMeta = serde_json::from_str(&meta_raw)?;
    let mut state = MpsState::from_parts(tensors, center);
    state.chi_saturated = meta.chi_saturated;
    Ok((state, meta))
}
