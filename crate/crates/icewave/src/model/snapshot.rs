//! Binary snapshots: `"HWAV"`, u32 version, u64 N, f64 L, f64 t, N×f64 η, N×f64 ξ,
//! all little-endian.

use std::io::{Read, Write};
use std::path::Path;

use super::SurfaceState;
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"HWAV";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub length: f64,
    pub state: SurfaceState,
}

pub fn write_snapshot<W: Write>(mut w: W, snap: &Snapshot) -> Result<()> {
    let s = &snap.state;
    if s.eta.len() != s.xi.len() {
        return Err(Error::Format("eta and xi lengths differ".into()));
    }
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(s.eta.len() as u64).to_le_bytes())?;
    w.write_all(&snap.length.to_le_bytes())?;
    w.write_all(&s.time.to_le_bytes())?;
    for v in s.eta.iter().chain(&s.xi) {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_snapshot<R: Read>(mut r: R) -> Result<Snapshot> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let mut b4 = [0u8; 4];
    r.read_exact(&mut b4)?;
    let version = u32::from_le_bytes(b4);
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b8)?;
    let n = u64::from_le_bytes(b8) as usize;
    let mut f = || -> Result<f64> {
        r.read_exact(&mut b8)?;
        Ok(f64::from_le_bytes(b8))
    };
    let length = f()?;
    let time = f()?;
    let eta = (0..n).map(|_| f()).collect::<Result<Vec<_>>>()?;
    let xi = (0..n).map(|_| f()).collect::<Result<Vec<_>>>()?;
    Ok(Snapshot { length, state: SurfaceState { eta, xi, time } })
}

impl Snapshot {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let f = std::io::BufWriter::new(std::fs::File::create(path)?);
        write_snapshot(f, self)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        read_snapshot(std::io::BufReader::new(std::fs::File::open(path)?))
    }
}
