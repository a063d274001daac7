//! Reader/writer for the `.npy` version-1.0 array interchange format.
//!
//! Exactly the subset needed for embedding tensors: little-endian `<f4`
//! and `<f8` payloads, C order, any rank (loaders downstream restrict the
//! rank they accept). The writer reproduces the reference layout byte for
//! byte: magic `\x93NUMPY`, version `(1, 0)`, a little-endian `u16`
//! header length, the header dict
//! `{'descr': '<f8', 'fortran_order': False, 'shape': (3, 4), }`
//! padded with spaces so the payload starts on a 64-byte boundary, and a
//! terminating newline. Files round-trip bit-exactly.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

const MAGIC: &[u8; 6] = b"\x93NUMPY";

/// An array read from disk, tagged with its storage width. `f4` payloads
/// are widened to `f64` (lossless); writing them back at width 4
/// reproduces the original bits.
#[derive(Debug, Clone, PartialEq)]
pub enum NpyArray {
    F64 { shape: Vec<usize>, data: Vec<f64> },
    F32 { shape: Vec<usize>, data: Vec<f64> },
}

impl NpyArray {
    pub fn shape(&self) -> &[usize] {
        match self {
            NpyArray::F64 { shape, .. } | NpyArray::F32 { shape, .. } => shape,
        }
    }

    pub fn data(&self) -> &[f64] {
        match self {
            NpyArray::F64 { data, .. } | NpyArray::F32 { data, .. } => data,
        }
    }
}

fn format_shape(shape: &[usize]) -> String {
    match shape.len() {
        0 => "()".to_string(),
        1 => format!("({},)", shape[0]),
        _ => {
            let joined = shape
                .iter()
                .map(|d| d.to_string())
                .collect::<Vec<_>>()
                .join(", ");
            format!("({joined})")
        }
    }
}

fn write_header<W: Write>(writer: &mut W, descr: &str, shape: &[usize]) -> Result<()> {
    let dict = format!(
        "{{'descr': '{descr}', 'fortran_order': False, 'shape': {}, }}",
        format_shape(shape)
    );
    // magic(6) + version(2) + len(2) + header, padded to 64 bytes, '\n' last.
    let unpadded = 10 + dict.len() + 1;
    let padding = (64 - unpadded % 64) % 64;
    let header_len = dict.len() + padding + 1;
    if header_len > u16::MAX as usize {
        return Err(Error::Format("npy header too long".into()));
    }
    writer.write_all(MAGIC)?;
    writer.write_all(&[1, 0])?;
    writer.write_all(&(header_len as u16).to_le_bytes())?;
    writer.write_all(dict.as_bytes())?;
    writer.write_all(&vec![b' '; padding])?;
    writer.write_all(b"\n")?;
    Ok(())
}

pub fn write_npy_f64<W: Write>(writer: &mut W, shape: &[usize], data: &[f64]) -> Result<()> {
    check_len(shape, data.len())?;
    write_header(writer, "<f8", shape)?;
    for v in data {
        writer.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn write_npy_f32<W: Write>(writer: &mut W, shape: &[usize], data: &[f32]) -> Result<()> {
    check_len(shape, data.len())?;
    write_header(writer, "<f4", shape)?;
    for v in data {
        writer.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn save_npy_f64(path: &Path, shape: &[usize], data: &[f64]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_npy_f64(&mut w, shape, data)?;
    w.flush()?;
    Ok(())
}

pub fn save_npy_f32(path: &Path, shape: &[usize], data: &[f32]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_npy_f32(&mut w, shape, data)?;
    w.flush()?;
    Ok(())
}

fn check_len(shape: &[usize], len: usize) -> Result<()> {
    let expected: usize = shape.iter().product();
    if expected != len {
        return Err(Error::Format(format!(
            "shape {shape:?} implies {expected} elements, got {len}"
        )));
    }
    Ok(())
}

pub fn read_npy(path: &Path) -> Result<NpyArray> {
    let mut r = BufReader::new(File::open(path)?);
    read_npy_from(&mut r)
}

pub fn read_npy_from<R: Read>(reader: &mut R) -> Result<NpyArray> {
    let mut magic = [0u8; 6];
    reader.read_exact(&mut magic).map_err(short_header)?;
    if &magic != MAGIC {
        return Err(Error::Format("not an npy file (bad magic)".into()));
    }
    let mut version = [0u8; 2];
    reader.read_exact(&mut version).map_err(short_header)?;
    if version[0] != 1 {
        return Err(Error::Format(format!(
            "unsupported npy version {}.{}",
            version[0], version[1]
        )));
    }
    let mut len_bytes = [0u8; 2];
    reader.read_exact(&mut len_bytes).map_err(short_header)?;
    let header_len = u16::from_le_bytes(len_bytes) as usize;
    let mut header = vec![0u8; header_len];
    reader.read_exact(&mut header).map_err(short_header)?;
    let header = std::str::from_utf8(&header)
        .map_err(|_| Error::Format("npy header is not valid ASCII".into()))?;

    let descr = extract_quoted(header, "descr")?;
    let wide = match descr.as_str() {
        "<f8" => true,
        "<f4" => false,
        other => {
            return Err(Error::Format(format!(
                "unsupported dtype '{other}' (expected '<f4' or '<f8')"
            )))
        }
    };
    let order = extract_value(header, "fortran_order")?;
    match order.as_str() {
        "False" => {}
        "True" => {
            return Err(Error::Format(
                "Fortran-order arrays are not supported".into(),
            ))
        }
        other => {
            return Err(Error::Format(format!(
                "bad fortran_order value '{other}'"
            )))
        }
    }
    let shape = parse_shape(&extract_value(header, "shape")?)?;

    let count: usize = shape.iter().product();
    let width = if wide { 8 } else { 4 };
    let mut payload = vec![0u8; count * width];
    reader
        .read_exact(&mut payload)
        .map_err(|_| Error::Format("payload shorter than the header's shape".into()))?;
    let mut probe = [0u8; 1];
    if reader.read(&mut probe)? != 0 {
        return Err(Error::Format("trailing bytes after array payload".into()));
    }

    let mut data = Vec::with_capacity(count);
    if wide {
        for chunk in payload.chunks_exact(8) {
            data.push(f64::from_le_bytes(chunk.try_into().unwrap()));
        }
        Ok(NpyArray::F64 { shape, data })
    } else {
        for chunk in payload.chunks_exact(4) {
            data.push(f32::from_le_bytes(chunk.try_into().unwrap()) as f64);
        }
        Ok(NpyArray::F32 { shape, data })
    }
}

fn short_header(_: std::io::Error) -> Error {
    Error::Format("file too short for an npy header".into())
}

/// Value of `'key': '<quoted>'` in the header dict.
fn extract_quoted(header: &str, key: &str) -> Result<String> {
    let raw = extract_value(header, key)?;
    let trimmed = raw.trim_matches('\'');
    if trimmed.len() + 2 != raw.len() {
        return Err(Error::Format(format!("expected quoted value for {key}")));
    }
    Ok(trimmed.to_string())
}

/// Raw token following `'key':` in the header dict, up to the matching
/// top-level comma or closing brace.
fn extract_value(header: &str, key: &str) -> Result<String> {
    let pattern = format!("'{key}':");
    let start = header
        .find(&pattern)
        .ok_or_else(|| Error::Format(format!("header is missing key '{key}'")))?
        + pattern.len();
    let rest = &header[start..];
    let mut depth = 0usize;
    let mut end = rest.len();
    for (i, ch) in rest.char_indices() {
        match ch {
            '(' | '[' => depth += 1,
            ')' | ']' => depth = depth.saturating_sub(1),
            ',' | '}' if depth == 0 => {
                end = i;
                break;
            }
            _ => {}
        }
    }
    Ok(rest[..end].trim().to_string())
}

fn parse_shape(token: &str) -> Result<Vec<usize>> {
    let inner = token
        .strip_prefix('(')
        .and_then(|s| s.strip_suffix(')'))
        .ok_or_else(|| Error::Format(format!("bad shape tuple '{token}'")))?;
    let mut out = Vec::new();
    for part in inner.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        out.push(
            part.parse::<usize>()
                .map_err(|_| Error::Format(format!("bad shape component '{part}'")))?,
        );
    }
    Ok(out)
}
