//! File formats for grid functions and spectra.
//!
//! CSV: optional `# key=value` header lines, then `index,re,im` rows with
//! numbers at 12 significant digits.
//!
//! Binary (little-endian throughout):
//!
//! | bytes | content                                       |
//! |-------|-----------------------------------------------|
//! | 4     | magic `VLKN`                                  |
//! | 1     | kind: 0 = grid function, 1 = spectral vector  |
//! | 4     | resolution `N` as `u32`                       |
//! | 4·N   | radices `m_0 .. m_{N-1}` as `u32`             |
//! | 16·M_N| `(re, im)` pairs as `f64`                     |

use std::io::{BufRead, Read, Write};
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::group::GeneratorSequence;
use crate::transform::{Grid, GridFunction, SpectralVector};

pub const MAGIC: &[u8; 4] = b"VLKN";

/// Round to 12 significant digits and print the shortest decimal that
/// reproduces the rounded value.
pub fn fmt_sig12(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let rounded: f64 = format!("{x:.11e}").parse().expect("valid float");
    if rounded == 0.0 {
        return "0".into();
    }
    if (1e-5..1e12).contains(&rounded.abs()) {
        rounded.to_string()
    } else {
        format!("{rounded:e}")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PayloadKind {
    Function = 0,
    Spectrum = 1,
}

pub fn write_csv(
    out: &mut impl Write,
    header: &[(String, String)],
    values: &[Complex64],
) -> Result<()> {
    for (k, v) in header {
        writeln!(out, "# {k}={v}")?;
    }
    writeln!(out, "index,re,im")?;
    for (i, v) in values.iter().enumerate() {
        writeln!(out, "{i},{},{}", fmt_sig12(v.re), fmt_sig12(v.im))?;
    }
    Ok(())
}

/// `# key=value` pairs preceding a table.
pub type Header = Vec<(String, String)>;

/// Header pairs and values from a CSV written by [`write_csv`].
pub fn read_csv(input: impl BufRead) -> Result<(Header, Vec<Complex64>)> {
    let mut header = Vec::new();
    let mut values = Vec::new();
    for (lineno, line) in input.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if let Some((k, v)) = rest.trim().split_once('=') {
                header.push((k.trim().to_string(), v.trim().to_string()));
            }
            continue;
        }
        if line.starts_with("index") {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let bad = |what: &str| Error::Format(format!("line {}: {what}", lineno + 1));
        if fields.len() != 3 {
            return Err(bad("expected index,re,im"));
        }
        let index: usize = fields[0].parse().map_err(|_| bad("bad index"))?;
        if index != values.len() {
            return Err(bad("indices must be consecutive from 0"));
        }
        let re: f64 = fields[1].parse().map_err(|_| bad("bad real part"))?;
        let im: f64 = fields[2].parse().map_err(|_| bad("bad imaginary part"))?;
        values.push(Complex64::new(re, im));
    }
    Ok((header, values))
}

pub fn write_binary(
    out: &mut impl Write,
    kind: PayloadKind,
    grid: &Grid,
    values: &[Complex64],
) -> Result<()> {
    out.write_all(MAGIC)?;
    out.write_all(&[kind as u8])?;
    out.write_all(&(grid.resolution() as u32).to_le_bytes())?;
    for &m in grid.radices() {
        out.write_all(&m.to_le_bytes())?;
    }
    for v in values {
        out.write_all(&v.re.to_le_bytes())?;
        out.write_all(&v.im.to_le_bytes())?;
    }
    Ok(())
}

/// Decode a binary payload; the grid is rebuilt from the radices in the header.
pub fn read_binary(input: &mut impl Read) -> Result<(PayloadKind, Grid, Vec<Complex64>)> {
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let mut kind = [0u8; 1];
    input.read_exact(&mut kind)?;
    let kind = match kind[0] {
        0 => PayloadKind::Function,
        1 => PayloadKind::Spectrum,
        other => return Err(Error::Format(format!("unknown payload kind {other}"))),
    };
    let mut word = [0u8; 4];
    input.read_exact(&mut word)?;
    let resolution = u32::from_le_bytes(word) as usize;
    if resolution > 64 {
        return Err(Error::Format(format!(
            "implausible resolution {resolution}"
        )));
    }
    let mut radices = Vec::with_capacity(resolution);
    for _ in 0..resolution {
        input.read_exact(&mut word)?;
        radices.push(u32::from_le_bytes(word));
    }
    // A resolution-0 grid is the one-point group for every generator sequence.
    let gens = if radices.is_empty() {
        GeneratorSequence::walsh()
    } else {
        GeneratorSequence::from_radices(radices)?
    };
    let grid = Grid::new(Arc::new(gens), resolution)?;
    let mut values = Vec::with_capacity(grid.size());
    let mut pair = [0u8; 16];
    for _ in 0..grid.size() {
        input.read_exact(&mut pair)?;
        let re = f64::from_le_bytes(pair[..8].try_into().expect("8 bytes"));
        let im = f64::from_le_bytes(pair[8..].try_into().expect("8 bytes"));
        values.push(Complex64::new(re, im));
    }
    let mut trailing = [0u8; 1];
    if input.read(&mut trailing)? != 0 {
        return Err(Error::Format("trailing bytes after payload".into()));
    }
    Ok((kind, grid, values))
}

impl GridFunction {
    pub fn write_binary(&self, out: &mut impl Write) -> Result<()> {
        write_binary(out, PayloadKind::Function, self.grid(), self.values())
    }

    pub fn write_csv(&self, out: &mut impl Write, header: &[(String, String)]) -> Result<()> {
        write_csv(out, header, self.values())
    }
}

impl SpectralVector {
    pub fn write_binary(&self, out: &mut impl Write) -> Result<()> {
        write_binary(out, PayloadKind::Spectrum, self.grid(), self.coeffs())
    }

    pub fn write_csv(&self, out: &mut impl Write, header: &[(String, String)]) -> Result<()> {
        write_csv(out, header, self.coeffs())
    }
}
