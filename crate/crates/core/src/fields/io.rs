//! Field files.
//!
//! CSV: a header comment `# dslump-field v1 <nx> <nz> <lx> <lz> <real|complex>`,
//! a column line, then one row per sample in storage order with columns
//! `x,z,value` (real) or `x,z,re,im` (complex).
//!
//! Binary, all little-endian:
//!
//! | bytes | content                          |
//! |-------|----------------------------------|
//! | 4     | magic `DSLF`                     |
//! | 4     | `u32` format major version (1)   |
//! | 8, 8  | `u64` nx, nz                     |
//! | 8, 8  | `f64` lx, lz                     |
//! | 1     | dtype: 0 real, 1 complex         |
//! | ...   | samples, row-major, `f64` each (complex as re, im pairs) |

use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;

use super::{ComplexField2D, RealField2D, SpectralGrid};
use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &[u8; 4] = b"DSLF";

#[derive(Debug, Clone, PartialEq)]
pub enum Field {
    Real(RealField2D),
    Complex(ComplexField2D),
}

impl Field {
    pub fn grid(&self) -> SpectralGrid {
        match self {
            Field::Real(f) => f.grid,
            Field::Complex(f) => f.grid,
        }
    }

    /// Complex view; real fields get zero imaginary parts.
    pub fn into_complex(self) -> ComplexField2D {
        match self {
            Field::Real(f) => f.to_complex(),
            Field::Complex(f) => f,
        }
    }

    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        let g = self.grid();
        let tag = match self {
            Field::Real(_) => "real",
            Field::Complex(_) => "complex",
        };
        let mut w = BufWriter::new(&mut w);
        writeln!(
            w,
            "# dslump-field v{FORMAT_VERSION} {} {} {:?} {:?} {tag}",
            g.nx, g.nz, g.lx, g.lz
        )?;
        match self {
            Field::Real(f) => {
                writeln!(w, "x,z,value")?;
                for (i, v) in f.values.iter().enumerate() {
                    writeln!(w, "{:?},{:?},{:?}", g.x(i / g.nz), g.z(i % g.nz), v)?;
                }
            }
            Field::Complex(f) => {
                writeln!(w, "x,z,re,im")?;
                for (i, v) in f.values.iter().enumerate() {
                    writeln!(w, "{:?},{:?},{:?},{:?}", g.x(i / g.nz), g.z(i % g.nz), v.re, v.im)?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(r: impl Read) -> Result<Field> {
        let mut lines = BufReader::new(r).lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Format("empty field file".into()))??;
        let parts: Vec<&str> = header.split_whitespace().collect();
        if parts.len() != 8 || parts[0] != "#" || parts[1] != "dslump-field" {
            return Err(Error::Format(format!("bad field header `{header}`")));
        }
        let version: u32 = parts[2]
            .strip_prefix('v')
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| Error::Format(format!("bad version tag `{}`", parts[2])))?;
        check_version(version)?;
        let grid = SpectralGrid::new(
            parse(parts[3])?,
            parse(parts[4])?,
            parse(parts[5])?,
            parse(parts[6])?,
        )?;
        let complex = match parts[7] {
            "real" => false,
            "complex" => true,
            other => return Err(Error::Format(format!("unknown dtype `{other}`"))),
        };
        lines
            .next()
            .ok_or_else(|| Error::Format("missing column line".into()))??;
        let ncols = if complex { 4 } else { 3 };
        let mut re = Vec::with_capacity(grid.len());
        let mut im = Vec::with_capacity(if complex { grid.len() } else { 0 });
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != ncols {
                return Err(Error::Format(format!("expected {ncols} columns in `{line}`")));
            }
            re.push(parse::<f64>(cols[2])?);
            if complex {
                im.push(parse::<f64>(cols[3])?);
            }
        }
        if complex {
            let values = re.into_iter().zip(im).map(|(a, b)| Complex64::new(a, b)).collect();
            Ok(Field::Complex(ComplexField2D::new(grid, values)?))
        } else {
            Ok(Field::Real(RealField2D::new(grid, re)?))
        }
    }

    pub fn write_binary(&self, w: impl Write) -> Result<()> {
        let g = self.grid();
        let mut w = BufWriter::new(w);
        w.write_all(MAGIC)?;
        w.write_all(&FORMAT_VERSION.to_le_bytes())?;
        w.write_all(&(g.nx as u64).to_le_bytes())?;
        w.write_all(&(g.nz as u64).to_le_bytes())?;
        w.write_all(&g.lx.to_le_bytes())?;
        w.write_all(&g.lz.to_le_bytes())?;
        match self {
            Field::Real(f) => {
                w.write_all(&[0])?;
                for v in &f.values {
                    w.write_all(&v.to_le_bytes())?;
                }
            }
            Field::Complex(f) => {
                w.write_all(&[1])?;
                for v in &f.values {
                    w.write_all(&v.re.to_le_bytes())?;
                    w.write_all(&v.im.to_le_bytes())?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_binary(r: impl Read) -> Result<Field> {
        let mut r = BufReader::new(r);
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format("not a dslump binary field".into()));
        }
        let mut b4 = [0u8; 4];
        r.read_exact(&mut b4)?;
        check_version(u32::from_le_bytes(b4))?;
        let mut b8 = [0u8; 8];
        let mut next = |r: &mut BufReader<_>| -> Result<[u8; 8]> {
            r.read_exact(&mut b8)?;
            Ok(b8)
        };
        let nx = u64::from_le_bytes(next(&mut r)?) as usize;
        let nz = u64::from_le_bytes(next(&mut r)?) as usize;
        let lx = f64::from_le_bytes(next(&mut r)?);
        let lz = f64::from_le_bytes(next(&mut r)?);
        let grid = SpectralGrid::new(nx, nz, lx, lz)?;
        let mut tag = [0u8; 1];
        r.read_exact(&mut tag)?;
        let mut sample = |r: &mut BufReader<_>| -> Result<f64> { Ok(f64::from_le_bytes(next(r)?)) };
        match tag[0] {
            0 => {
                let values = (0..grid.len()).map(|_| sample(&mut r)).collect::<Result<_>>()?;
                Ok(Field::Real(RealField2D::new(grid, values)?))
            }
            1 => {
                let values = (0..grid.len())
                    .map(|_| Ok(Complex64::new(sample(&mut r)?, sample(&mut r)?)))
                    .collect::<Result<_>>()?;
                Ok(Field::Complex(ComplexField2D::new(grid, values)?))
            }
            t => Err(Error::Format(format!("unknown dtype tag {t}"))),
        }
    }

    /// Writes CSV or binary depending on the extension (`.bin` is binary).
    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        if is_binary(path) {
            self.write_binary(file)
        } else {
            self.write_csv(file)
        }
    }

    pub fn load(path: &Path) -> Result<Field> {
        let file = std::fs::File::open(path)?;
        if is_binary(path) {
            Self::read_binary(file)
        } else {
            Self::read_csv(file)
        }
    }
}

fn is_binary(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "bin")
}

fn check_version(v: u32) -> Result<()> {
    if v == FORMAT_VERSION {
        Ok(())
    } else {
        Err(Error::Format(format!(
            "field format major version {v} not supported (expected {FORMAT_VERSION})"
        )))
    }
}

fn parse<T: std::str::FromStr>(s: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| Error::Format(format!("cannot parse `{s}`")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> (RealField2D, ComplexField2D) {
        let g = SpectralGrid::new(16, 32, 3.7, 1.0 / 3.0).unwrap();
        let r = RealField2D::from_fn(g, |x, z| (x * 1.3).sin() * z.exp() / 7.0);
        let c = ComplexField2D::from_fn(g, |x, z| Complex64::new(x.cos(), -z * 1e-300));
        (r, c)
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let (r, c) = sample();
        for f in [Field::Real(r), Field::Complex(c)] {
            let mut buf = Vec::new();
            f.write_csv(&mut buf).unwrap();
            assert_eq!(Field::read_csv(buf.as_slice()).unwrap(), f);
        }
    }

    #[test]
    fn binary_round_trip_is_exact() {
        let (r, c) = sample();
        for f in [Field::Real(r), Field::Complex(c)] {
            let mut buf = Vec::new();
            f.write_binary(&mut buf).unwrap();
            assert_eq!(&buf[..4], b"DSLF");
            assert_eq!(Field::read_binary(buf.as_slice()).unwrap(), f);
        }
    }

    #[test]
    fn rejects_future_versions() {
        let (r, _) = sample();
        let f = Field::Real(r);
        let mut buf = Vec::new();
        f.write_binary(&mut buf).unwrap();
        buf[4] = 2;
        assert!(matches!(Field::read_binary(buf.as_slice()), Err(Error::Format(_))));

        let mut text = Vec::new();
        f.write_csv(&mut text).unwrap();
        let text = String::from_utf8(text).unwrap().replacen("v1", "v2", 1);
        assert!(matches!(Field::read_csv(text.as_bytes()), Err(Error::Format(_))));
    }

    #[test]
    fn rejects_truncated_data() {
        let (r, _) = sample();
        let mut buf = Vec::new();
        Field::Real(r).write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let cut: String = text.lines().take(10).map(|l| format!("{l}\n")).collect();
        assert!(Field::read_csv(cut.as_bytes()).is_err());
    }
}
