//! CI2D v1 field dumps and state directories.
//!
//! A dump is the magic `CI2DFLD1`, a little-endian `u64` header length, a
//! UTF-8 JSON header `{n, rank, reality, time, units, band}`, and the
//! little-endian `f64` nodal values, component-major and row-major within a
//! component (`x1` index slowest). Complex fields interleave real and
//! imaginary parts.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{CiError, Result};
use crate::field::{Grid2, Rank, SpectralField};
use crate::track::{TimeAxis, TimeTrack};

pub const MAGIC: &[u8; 8] = b"CI2DFLD1";

/// JSON header of a dump.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldHeader {
    pub n: usize,
    pub rank: Rank,
    pub reality: bool,
    pub time: f64,
    pub units: String,
    /// Band limit of the stored field; coefficients beyond it are dropped on load.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub band: Option<usize>,
}

pub fn write_field<W: Write>(out: &mut W, f: &SpectralField, time: f64, units: &str) -> Result<()> {
    let header = FieldHeader {
        n: f.grid().n(),
        rank: f.rank(),
        reality: f.is_real(),
        time,
        units: units.to_string(),
        band: Some(f.band()),
    };
    let json = serde_json::to_vec(&header)?;
    out.write_all(MAGIC)?;
    out.write_all(&(json.len() as u64).to_le_bytes())?;
    out.write_all(&json)?;
    for comp in f.synthesize() {
        for z in comp {
            out.write_all(&z.re.to_le_bytes())?;
            if !header.reality {
                out.write_all(&z.im.to_le_bytes())?;
            }
        }
    }
    Ok(())
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

pub fn read_field<R: Read>(inp: &mut R) -> Result<(SpectralField, FieldHeader)> {
    let mut magic = [0u8; 8];
    inp.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(CiError::Format("bad magic".into()));
    }
    let len = read_u64(inp)? as usize;
    if len > 1 << 20 {
        return Err(CiError::Format(format!("header length {len} is implausible")));
    }
    let mut json = vec![0u8; len];
    inp.read_exact(&mut json)?;
    let header: FieldHeader = serde_json::from_slice(&json)?;
    let grid = Grid2::new(header.n)?;
    let nn = grid.num_nodes();
    let mut values = Vec::with_capacity(header.rank.components());
    for _ in 0..header.rank.components() {
        let mut comp = Vec::with_capacity(nn);
        for _ in 0..nn {
            let re = read_f64(inp)?;
            let im = if header.reality { 0.0 } else { read_f64(inp)? };
            comp.push(Complex64::new(re, im));
        }
        values.push(comp);
    }
    let band = header.band.unwrap_or(grid.max_band());
    let field = SpectralField::analyze_on(grid, header.rank, header.n, values, band)?;
    let field = if header.reality { field.into_real() } else { field };
    Ok((field, header))
}

pub fn save_field(path: &Path, f: &SpectralField, time: f64, units: &str) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_field(&mut w, f, time, units)?;
    w.flush()?;
    Ok(())
}

pub fn load_field(path: &Path) -> Result<(SpectralField, FieldHeader)> {
    let mut r = BufReader::new(File::open(path)?);
    read_field(&mut r)
}

/// `manifest.json` of a state directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    #[serde(rename = "T")]
    pub horizon: f64,
    pub t_pad: f64,
    pub n: usize,
    pub n_t: usize,
    pub theta: f64,
    pub nu: f64,
    pub q: u32,
    pub mode: String,
    pub params: serde_json::Value,
    pub slices: usize,
    pub has_v_dt: bool,
    #[serde(default)]
    pub meta: Vec<String>,
}

fn slice_path(dir: &Path, i: usize, name: &str) -> std::path::PathBuf {
    dir.join(format!("slice_{i:04}_{name}.ci2d"))
}

/// Write `v`, optional `v_dt`, `p` and `R` for every slice plus the manifest.
pub fn save_tracks(dir: &Path, manifest: &Manifest, v: &TimeTrack, p: &TimeTrack, r: &TimeTrack) -> Result<()> {
    fs::create_dir_all(dir)?;
    let axis = v.axis();
    for i in 0..axis.len() {
        let t = axis.time(i);
        save_field(&slice_path(dir, i, "v"), v.slice(i), t, "velocity")?;
        if let Some(d) = v.dslice(i) {
            save_field(&slice_path(dir, i, "v_dt"), d, t, "velocity/time")?;
        }
        save_field(&slice_path(dir, i, "p"), p.slice(i), t, "pressure")?;
        save_field(&slice_path(dir, i, "R"), r.slice(i), t, "stress")?;
    }
    let mut m = manifest.clone();
    m.slices = axis.len();
    m.has_v_dt = v.has_channel();
    fs::write(dir.join("manifest.json"), serde_json::to_vec_pretty(&m)?)?;
    Ok(())
}

/// Tracks `(v, p, R)` and the manifest of a state directory.
pub fn load_tracks(dir: &Path) -> Result<(Manifest, TimeTrack, TimeTrack, TimeTrack)> {
    let m: Manifest = serde_json::from_slice(&fs::read(dir.join("manifest.json"))?)?;
    let axis = TimeAxis::new(m.horizon, m.n_t, m.t_pad)?;
    if axis.len() != m.slices {
        return Err(CiError::Format(format!("manifest lists {} slices, time grid has {}", m.slices, axis.len())));
    }
    let load = |i: usize, name: &str, rank: Rank| -> Result<SpectralField> {
        let (f, h) = load_field(&slice_path(dir, i, name))?;
        if h.n != m.n || f.rank() != rank {
            return Err(CiError::Format(format!("slice {i} {name}: unexpected grid or rank")));
        }
        Ok(f)
    };
    let mut v = Vec::new();
    let mut vd = Vec::new();
    let mut p = Vec::new();
    let mut r = Vec::new();
    for i in 0..axis.len() {
        v.push(load(i, "v", Rank::Vector)?);
        if m.has_v_dt {
            vd.push(load(i, "v_dt", Rank::Vector)?);
        }
        p.push(load(i, "p", Rank::Scalar)?);
        r.push(load(i, "R", Rank::SymTensor)?);
    }
    let v = TimeTrack::new(axis, v, m.has_v_dt.then_some(vd))?;
    Ok((m.clone(), v, TimeTrack::new(axis, p, None)?, TimeTrack::new(axis, r, None)?))
}
