//! Binary dumps of complex sequences and dense matrices.
//!
//! Both layouts are little-endian with a 32-byte header followed by
//! interleaved `(re, im)` `f64` pairs:
//!
//! | bytes  | sequence               | matrix               |
//! |--------|------------------------|----------------------|
//! | 0..8   | magic `NYFRSIG\0`      | magic `NYFRMAT\0`    |
//! | 8..16  | sample count (`u64`)   | rows (`u64`)         |
//! | 16..24 | `rate_hz` (`f64`)      | cols (`u64`)         |
//! | 24..32 | `t0_s` (`f64`)         | reserved, zero       |
//!
//! Matrix entries are stored row-major.

use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;

use crate::scene::ComplexSignal;
use crate::{Error, Result, C64};

pub const SIGNAL_MAGIC: &[u8; 8] = b"NYFRSIG\0";
pub const MATRIX_MAGIC: &[u8; 8] = b"NYFRMAT\0";
const HEADER_LEN: usize = 32;

fn push_samples(buf: &mut Vec<u8>, samples: impl Iterator<Item = C64>) {
    for s in samples {
        buf.extend_from_slice(&s.re.to_le_bytes());
        buf.extend_from_slice(&s.im.to_le_bytes());
    }
}

fn read_u64(b: &[u8]) -> u64 {
    u64::from_le_bytes(b[..8].try_into().expect("8-byte slice"))
}

fn read_f64(b: &[u8]) -> f64 {
    f64::from_le_bytes(b[..8].try_into().expect("8-byte slice"))
}

fn read_samples(body: &[u8], count: usize) -> Result<Vec<C64>> {
    if body.len() != count * 16 {
        return Err(Error::Format(format!(
            "payload is {} bytes, header announces {count} samples ({} bytes)",
            body.len(),
            count * 16
        )));
    }
    Ok(body
        .chunks_exact(16)
        .map(|c| C64::new(read_f64(&c[..8]), read_f64(&c[8..])))
        .collect())
}

pub fn encode_signal(samples: &[C64], rate_hz: f64, t0_s: f64) -> Vec<u8> {
    let mut buf = Vec::with_capacity(HEADER_LEN + samples.len() * 16);
    buf.extend_from_slice(SIGNAL_MAGIC);
    buf.extend_from_slice(&(samples.len() as u64).to_le_bytes());
    buf.extend_from_slice(&rate_hz.to_le_bytes());
    buf.extend_from_slice(&t0_s.to_le_bytes());
    push_samples(&mut buf, samples.iter().copied());
    buf
}

/// Samples, rate and start time of a sequence dump.
pub fn decode_signal(bytes: &[u8]) -> Result<(Vec<C64>, f64, f64)> {
    if bytes.len() < HEADER_LEN || &bytes[..8] != SIGNAL_MAGIC {
        return Err(Error::Format("missing sequence header".into()));
    }
    let count = read_u64(&bytes[8..]) as usize;
    let samples = read_samples(&bytes[HEADER_LEN..], count)?;
    Ok((samples, read_f64(&bytes[16..]), read_f64(&bytes[24..])))
}

pub fn encode_matrix(m: &DMatrix<C64>) -> Vec<u8> {
    let mut buf = Vec::with_capacity(HEADER_LEN + m.len() * 16);
    buf.extend_from_slice(MATRIX_MAGIC);
    buf.extend_from_slice(&(m.nrows() as u64).to_le_bytes());
    buf.extend_from_slice(&(m.ncols() as u64).to_le_bytes());
    buf.extend_from_slice(&[0u8; 8]);
    push_samples(
        &mut buf,
        m.row_iter()
            .flat_map(|r| r.iter().copied().collect::<Vec<_>>()),
    );
    buf
}

pub fn decode_matrix(bytes: &[u8]) -> Result<DMatrix<C64>> {
    if bytes.len() < HEADER_LEN || &bytes[..8] != MATRIX_MAGIC {
        return Err(Error::Format("missing matrix header".into()));
    }
    let rows = read_u64(&bytes[8..]) as usize;
    let cols = read_u64(&bytes[16..]) as usize;
    let data = read_samples(&bytes[HEADER_LEN..], rows * cols)?;
    Ok(DMatrix::from_row_slice(rows, cols, &data))
}

/// Write `bytes` to `path`, refusing to replace an existing file unless
/// `overwrite` is set.
pub fn write_file(path: &Path, bytes: &[u8], overwrite: bool) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    let mut opts = OpenOptions::new();
    opts.write(true);
    if overwrite {
        opts.create(true).truncate(true);
    } else {
        opts.create_new(true);
    }
    let mut f = opts.open(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::AlreadyExists {
            Error::Io(std::io::Error::new(
                e.kind(),
                format!("{} exists (pass --overwrite to replace it)", path.display()),
            ))
        } else {
            Error::Io(e)
        }
    })?;
    f.write_all(bytes)?;
    Ok(())
}

pub fn write_signal(path: &Path, signal: &ComplexSignal, overwrite: bool) -> Result<()> {
    write_file(
        path,
        &encode_signal(&signal.samples, signal.rate_hz, signal.t0_s),
        overwrite,
    )
}

pub fn read_signal(path: &Path) -> Result<(Vec<C64>, f64, f64)> {
    decode_signal(&fs::read(path)?)
}

/// CSV text from a header and rows of already-formatted cells.
pub fn csv_string(header: &[&str], rows: &[Vec<String>]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    Ok(String::from_utf8(bytes).expect("csv writer emits UTF-8"))
}
