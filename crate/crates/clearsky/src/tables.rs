//! Versioned little-endian container for precomputed tables and raw maps.
//!
//! Layout: the 8-byte magic, a `u32` version, a length-prefixed UTF-8 kind
//! tag, a `u32` entry count, then per entry a length-prefixed name, a `u32`
//! rank, the `u64` counts, the `u64` channel count and the `f64` samples.

use std::path::Path;

use clearsky_core::grid::Grid;
use clearsky_core::harness::{FisheyeImage, MapMode};
use clearsky_core::models::BrunetonTables;

use crate::error::{AppError, AppResult};
use crate::formats::write_atomic;

pub const MAGIC: &[u8; 8] = b"CLRSKYTB";
pub const VERSION: u32 = 1;

/// One named array of `counts` cells with `channels` values each.
#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub name: String,
    pub counts: Vec<usize>,
    pub channels: usize,
    pub data: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Container {
    pub kind: String,
    pub entries: Vec<Entry>,
}

impl Container {
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        put_str(&mut out, &self.kind);
        out.extend_from_slice(&(self.entries.len() as u32).to_le_bytes());
        for e in &self.entries {
            put_str(&mut out, &e.name);
            out.extend_from_slice(&(e.counts.len() as u32).to_le_bytes());
            for &c in &e.counts {
                out.extend_from_slice(&(c as u64).to_le_bytes());
            }
            out.extend_from_slice(&(e.channels as u64).to_le_bytes());
            for v in &e.data {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn decode(source: &str, bytes: &[u8]) -> AppResult<Self> {
        let mut r = Reader { source, bytes, pos: 0 };
        if r.take(8)? != MAGIC {
            return Err(r.error("not a clearsky table file"));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(r.error(format!("unsupported table format version {version}")));
        }
        let kind = r.string()?;
        let n = r.u32()? as usize;
        let mut entries = Vec::with_capacity(n.min(64));
        for _ in 0..n {
            let name = r.string()?;
            let rank = r.u32()? as usize;
            if rank > 8 {
                return Err(r.error(format!("entry {name}: rank {rank} too large")));
            }
            let counts: Vec<usize> = (0..rank).map(|_| r.u64().map(|c| c as usize)).collect::<AppResult<_>>()?;
            let channels = r.u64()? as usize;
            let len = counts
                .iter()
                .try_fold(channels, |a, &c| a.checked_mul(c))
                .filter(|&l| l.checked_mul(8).is_some_and(|b| b <= r.bytes.len() - r.pos))
                .ok_or_else(|| r.error(format!("entry {name}: sizes exceed the file")))?;
            let data = r.take(8 * len)?.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
            entries.push(Entry { name, counts, channels, data });
        }
        if r.pos != bytes.len() {
            return Err(r.error("trailing bytes after the last entry"));
        }
        Ok(Container { kind, entries })
    }

    pub fn save(&self, path: &Path) -> AppResult<()> {
        write_atomic(path, &self.encode())
    }

    pub fn load(path: &Path) -> AppResult<Self> {
        let bytes = std::fs::read(path).map_err(|e| AppError::io(path, e))?;
        Self::decode(&path.display().to_string(), &bytes)
    }

    fn take_entry(&mut self, source: &str, name: &str, rank: usize) -> AppResult<Entry> {
        let k = self
            .entries
            .iter()
            .position(|e| e.name == name)
            .ok_or_else(|| AppError::parse(source, 0, format!("missing table '{name}'")))?;
        let e = self.entries.remove(k);
        if e.counts.len() != rank {
            return Err(AppError::parse(source, 0, format!("table '{name}' has rank {} instead of {rank}", e.counts.len())));
        }
        Ok(e)
    }
}

fn put_str(out: &mut Vec<u8>, s: &str) {
    out.extend_from_slice(&(s.len() as u32).to_le_bytes());
    out.extend_from_slice(s.as_bytes());
}

struct Reader<'a> {
    source: &'a str,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn error(&self, message: impl Into<String>) -> AppError {
        AppError::parse(self.source, 0, format!("byte {}: {}", self.pos, message.into()))
    }

    fn take(&mut self, n: usize) -> AppResult<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(self.error("unexpected end of file"));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> AppResult<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> AppResult<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn string(&mut self) -> AppResult<String> {
        let n = self.u32()? as usize;
        let b = self.take(n)?;
        String::from_utf8(b.to_vec()).map_err(|_| self.error("invalid UTF-8 in a name"))
    }
}

fn entry<const D: usize>(name: &str, g: &Grid<D>) -> Entry {
    Entry { name: name.to_string(), counts: g.counts().to_vec(), channels: g.channels(), data: g.data().to_vec() }
}

fn grid<const D: usize>(source: &str, e: Entry) -> AppResult<Grid<D>> {
    let counts: [usize; D] = e.counts.try_into().expect("rank checked");
    Grid::from_data(counts, e.channels, e.data).map_err(|err| AppError::parse(source, 0, format!("table '{}': {err}", e.name)))
}

pub const BRUNETON_KIND: &str = "bruneton-tables";

pub fn bruneton_container(t: &BrunetonTables) -> Container {
    Container {
        kind: BRUNETON_KIND.to_string(),
        entries: vec![
            entry("columns", &t.columns),
            entry("single_rayleigh", &t.single_rayleigh),
            entry("single_mie", &t.single_mie),
            entry("multiple", &t.multiple),
        ],
    }
}

pub fn bruneton_tables(source: &str, mut c: Container) -> AppResult<BrunetonTables> {
    if c.kind != BRUNETON_KIND {
        return Err(AppError::parse(source, 0, format!("file holds '{}', not {BRUNETON_KIND}", c.kind)));
    }
    Ok(BrunetonTables {
        columns: grid(source, c.take_entry(source, "columns", 2)?)?,
        single_rayleigh: grid(source, c.take_entry(source, "single_rayleigh", 4)?)?,
        single_mie: grid(source, c.take_entry(source, "single_mie", 4)?)?,
        multiple: grid(source, c.take_entry(source, "multiple", 4)?)?,
    })
}

/// Raw values of a fisheye map, rows from the top; invalid pixels are NaN.
pub fn map_container(img: &FisheyeImage) -> Container {
    let (n, c) = (img.size(), img.channels());
    let mut data = Vec::with_capacity(n * n * c);
    for j in 0..n {
        for i in 0..n {
            match img.pixel(i, j) {
                Some(p) => data.extend_from_slice(p),
                None => data.extend(std::iter::repeat_n(f64::NAN, c)),
            }
        }
    }
    Container {
        kind: format!("fisheye-map:{}", img.mode().name()),
        entries: vec![Entry { name: "pixels".to_string(), counts: vec![n, n], channels: c, data }],
    }
}

/// Mode and pixel values of a stored map.
pub fn map_values(source: &str, mut c: Container) -> AppResult<(MapMode, Entry)> {
    let mode = c
        .kind
        .strip_prefix("fisheye-map:")
        .and_then(MapMode::from_name)
        .ok_or_else(|| AppError::parse(source, 0, format!("file holds '{}', not a fisheye map", c.kind)))?;
    Ok((mode, c.take_entry(source, "pixels", 2)?))
}
