//! Output files: numeric CSV tables, coordinate-labelled matrices and binary
//! density frames.
//!
//! Floats are written in Rust's shortest round-trip scientific notation, so
//! equal values always produce equal bytes.
//!
//! A density frame is a 32-byte header followed by `nx·nz` little-endian
//! `f64` values in row-major order (`qx` slow, `qz` fast):
//!
//! | offset | content             |
//! |--------|---------------------|
//! | 0      | magic `RYDFRAME`    |
//! | 8      | `nx` as `u64` LE    |
//! | 16     | `nz` as `u64` LE    |
//! | 24     | time as `f64` LE    |

use std::fs::{self, File};
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use ndarray::Array2;

use crate::error::{Error, Result};

pub const FRAME_MAGIC: &[u8; 8] = b"RYDFRAME";
pub const FRAME_HEADER_LEN: usize = 32;

pub fn fmt_f64(v: f64) -> String {
    format!("{v:e}")
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::io(path, source),
        other => Error::Parse {
            path: path.to_path_buf(),
            msg: format!("{other:?}"),
        },
    }
}

/// Writes a table of numbers with a header row.
pub fn write_csv<I, R>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: AsRef<[f64]>,
{
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(header).map_err(|e| csv_error(path, e))?;
    for row in rows {
        let row = row.as_ref();
        debug_assert_eq!(row.len(), header.len());
        w.write_record(row.iter().map(|v| fmt_f64(*v)))
            .map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes `data[i][j]` with `qz` along the first row and `qx` down the first
/// column.
pub fn write_matrix_csv(path: &Path, qx: &[f64], qz: &[f64], data: &Array2<f64>) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    let head = std::iter::once("qx\\qz".to_string()).chain(qz.iter().map(|v| fmt_f64(*v)));
    w.write_record(head).map_err(|e| csv_error(path, e))?;
    for (x, row) in qx.iter().zip(data.outer_iter()) {
        let rec = std::iter::once(fmt_f64(*x)).chain(row.iter().map(|v| fmt_f64(*v)));
        w.write_record(rec).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads a numeric CSV with one header row.
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let header = r
        .headers()
        .map_err(|e| csv_error(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let row = rec
            .iter()
            .map(|s| {
                s.trim().parse::<f64>().map_err(|_| Error::Parse {
                    path: path.to_path_buf(),
                    msg: format!("not a number: `{s}`"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok((header, rows))
}

/// Field samples (V/m) from a `t,u` file such as `field_opt.csv`.
pub fn read_field_csv(path: &Path) -> Result<Vec<f64>> {
    let (header, rows) = read_csv(path)?;
    if header.len() != 2 {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            msg: "expected two columns `t,u`".into(),
        });
    }
    Ok(rows.into_iter().map(|r| r[1]).collect())
}

pub fn write_frame(path: &Path, time: f64, density: &Array2<f64>) -> Result<()> {
    let (nx, nz) = density.dim();
    let mut w = create(path)?;
    let mut buf = Vec::with_capacity(FRAME_HEADER_LEN + 8 * nx * nz);
    buf.extend_from_slice(FRAME_MAGIC);
    buf.extend_from_slice(&(nx as u64).to_le_bytes());
    buf.extend_from_slice(&(nz as u64).to_le_bytes());
    buf.extend_from_slice(&time.to_le_bytes());
    for v in density.iter() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

/// Returns `(time, density)`.
pub fn read_frame(path: &Path) -> Result<(f64, Array2<f64>)> {
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    let bad = |msg: &str| Error::Parse {
        path: path.to_path_buf(),
        msg: msg.to_string(),
    };
    if bytes.len() < FRAME_HEADER_LEN || &bytes[..8] != FRAME_MAGIC {
        return Err(bad("not a density frame"));
    }
    let word = |i: usize| -> [u8; 8] { bytes[i..i + 8].try_into().unwrap() };
    let nx = u64::from_le_bytes(word(8)) as usize;
    let nz = u64::from_le_bytes(word(16)) as usize;
    let time = f64::from_le_bytes(word(24));
    if bytes.len() != FRAME_HEADER_LEN + 8 * nx * nz {
        return Err(bad("frame size does not match its header"));
    }
    let data = bytes[FRAME_HEADER_LEN..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let arr = Array2::from_shape_vec((nx, nz), data).map_err(|_| bad("bad shape"))?;
    Ok((time, arr))
}

/// Writes `frames` as `frame_NNNN.bin` in `dir` plus `frames.csv` mapping
/// frame index to time. Returns the written paths.
pub fn write_frames(dir: &Path, frames: &[(f64, Array2<f64>)]) -> Result<Vec<PathBuf>> {
    let mut paths = Vec::with_capacity(frames.len());
    let mut index = Vec::with_capacity(frames.len());
    for (k, (t, rho)) in frames.iter().enumerate() {
        let path = dir.join(format!("frame_{k:04}.bin"));
        write_frame(&path, *t, rho)?;
        paths.push(path);
        index.push([k as f64, *t]);
    }
    write_csv(&dir.join("frames.csv"), &["frame", "t"], index)?;
    Ok(paths)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut w = create(path)?;
    w.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}
