//! Binary checkpoint format.
//!
//! Layout (little-endian throughout):
//!   magic "GDDM" | version u32 | family tag (u32 len + utf8) |
//!   schedule tag (u32 len + utf8) | T u32 |
//!   layer sizes (u32 count + u32 each: dim, time_embed_dim, hidden...) |
//!   parameters (u32 count + f32 each, layer order)
//!
//! Round trips are bit-exact: save -> load -> save produces identical bytes.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::family::Family;
use crate::net::{Approximator, NetConfig};
use crate::schedule::ScheduleKind;

pub const MAGIC: &[u8; 4] = b"GDDM";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub family: Family,
    pub schedule_kind: ScheduleKind,
    pub t_max: usize,
    pub net: Approximator,
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        write_string(&mut out, &self.family.tag());
        write_string(&mut out, self.schedule_kind.tag());
        out.extend_from_slice(&(self.t_max as u32).to_le_bytes());
        let cfg = self.net.config();
        let mut sizes = vec![cfg.dim as u32, cfg.time_embed_dim as u32];
        sizes.extend(cfg.hidden.iter().map(|&h| h as u32));
        out.extend_from_slice(&(sizes.len() as u32).to_le_bytes());
        for s in sizes {
            out.extend_from_slice(&s.to_le_bytes());
        }
        let params = self.net.params();
        out.extend_from_slice(&(params.len() as u32).to_le_bytes());
        for &p in params {
            out.extend_from_slice(&(p as f32).to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Checkpoint> {
        let mut cur = Cursor { bytes, pos: 0 };
        let magic = cur.take(4)?;
        if magic != MAGIC {
            return Err(Error::Format(format!(
                "bad magic bytes {:?}, expected {:?}",
                &magic[..4.min(magic.len())],
                MAGIC
            )));
        }
        let version = cur.u32()?;
        if version != VERSION {
            return Err(Error::Format(format!(
                "unsupported checkpoint version {version}, expected {VERSION}"
            )));
        }
        let family = Family::parse(&cur.string()?)?;
        let schedule_kind = ScheduleKind::parse(&cur.string()?)?;
        let t_max = cur.u32()? as usize;
        let n_sizes = cur.u32()? as usize;
        if n_sizes < 2 {
            return Err(Error::Format(format!("layer-size list too short ({n_sizes})")));
        }
        let mut sizes = Vec::with_capacity(n_sizes);
        for _ in 0..n_sizes {
            sizes.push(cur.u32()? as usize);
        }
        let cfg = NetConfig::new(sizes[0], sizes[1], sizes[2..].to_vec());
        let n_params = cur.u32()? as usize;
        let mut params = Vec::with_capacity(n_params);
        for _ in 0..n_params {
            let raw = cur.take(4)?;
            params.push(f32::from_le_bytes([raw[0], raw[1], raw[2], raw[3]]) as f64);
        }
        if cur.pos != bytes.len() {
            return Err(Error::Format(format!(
                "trailing bytes: expected {} total, found {}",
                cur.pos,
                bytes.len()
            )));
        }
        let net = Approximator::from_params(cfg, params)?;
        Ok(Checkpoint { family, schedule_kind, t_max, net })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Checkpoint> {
        let bytes = fs::read(path)?;
        Checkpoint::from_bytes(&bytes).map_err(|e| match e {
            Error::Format(m) => Error::Format(format!("{}: {m}", path.display())),
            other => other,
        })
    }
}

fn write_string(out: &mut Vec<u8>, s: &str) {
    out.extend_from_slice(&(s.len() as u32).to_le_bytes());
    out.extend_from_slice(s.as_bytes());
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::Format(format!(
                "truncated file: expected at least {} bytes, found {}",
                self.pos + n,
                self.bytes.len()
            )));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn string(&mut self) -> Result<String> {
        let n = self.u32()? as usize;
        let b = self.take(n)?;
        String::from_utf8(b.to_vec())
            .map_err(|_| Error::Format("invalid utf-8 in tag string".into()))
    }
}
