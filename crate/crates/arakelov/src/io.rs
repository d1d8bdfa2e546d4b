//! File formats: length-spectrum CSV, group and period-matrix JSON, and the
//! binary field dump.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::spectral::fuchsian::{FuchsianGroup, Mat2};
use crate::spectral::selberg::LengthSpectrum;
use crate::spectral::theta::PeriodMatrix;
use crate::torus::GridField;

/// Parse a length spectrum from CSV with header `length,multiplicity`.
pub fn spectrum_from_csv(text: &str) -> Result<LengthSpectrum> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::InvalidInput("empty spectrum file".into()))?;
    let header = header.trim_start_matches('\u{feff}');
    if header.replace(' ', "") != "length,multiplicity" {
        return Err(Error::InvalidInput(format!(
            "expected header `length,multiplicity`, got `{header}`"
        )));
    }
    let mut entries = Vec::new();
    for (i, line) in lines.enumerate() {
        let mut parts = line.split(',');
        let (Some(l), Some(m), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(Error::InvalidInput(format!(
                "row {}: expected two comma-separated fields",
                i + 2
            )));
        };
        let l: f64 = l
            .trim()
            .parse()
            .map_err(|_| Error::InvalidInput(format!("row {}: bad length `{l}`", i + 2)))?;
        let m: u32 = m
            .trim()
            .parse()
            .map_err(|_| Error::InvalidInput(format!("row {}: bad multiplicity `{m}`", i + 2)))?;
        entries.push((l, m));
    }
    LengthSpectrum::new(entries, f64::INFINITY)
}

/// Write a length spectrum as CSV.
pub fn spectrum_to_csv(spec: &LengthSpectrum) -> String {
    let mut out = String::from("length,multiplicity\n");
    for (l, m) in spec.entries() {
        out.push_str(&format!("{l},{m}\n"));
    }
    out
}

#[derive(Serialize, Deserialize)]
struct GroupFile {
    generators: Vec<[[f64; 2]; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    q: Option<u32>,
    #[serde(rename = "N", default, skip_serializing_if = "Option::is_none")]
    n: Option<u32>,
}

/// Parse a Fuchsian group from JSON
/// `{"generators": [[[a,b],[c,d]], ...], "q": int?, "N": int?}`.
pub fn group_from_json(text: &str) -> Result<FuchsianGroup> {
    let file: GroupFile = serde_json::from_str(text)?;
    let gens = file.generators.into_iter().map(Mat2).collect();
    let signature = match (file.q, file.n) {
        (Some(q), Some(n)) => Some((q, n)),
        _ => None,
    };
    FuchsianGroup::new(gens, signature)
}

pub fn group_to_json(group: &FuchsianGroup) -> String {
    let file = GroupFile {
        generators: group.generators().iter().map(|m| m.0).collect(),
        q: group.signature.map(|s| s.0),
        n: group.signature.map(|s| s.1),
    };
    serde_json::to_string_pretty(&file).expect("group serialization cannot fail")
}

#[derive(Serialize, Deserialize)]
struct PeriodFile {
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
}

/// Parse a period matrix from JSON `{"re": [[...]], "im": [[...]]}`.
pub fn period_from_json(text: &str) -> Result<PeriodMatrix> {
    let file: PeriodFile = serde_json::from_str(text)?;
    let q = file.re.len();
    if q == 0 || file.im.len() != q {
        return Err(Error::InvalidInput(
            "re and im must be non-empty and the same shape".into(),
        ));
    }
    let mut z = DMatrix::from_element(q, q, Complex64::default());
    for i in 0..q {
        if file.re[i].len() != q || file.im[i].len() != q {
            return Err(Error::InvalidInput(
                "period matrix rows must have length q".into(),
            ));
        }
        for j in 0..q {
            z[(i, j)] = Complex64::new(file.re[i][j], file.im[i][j]);
        }
    }
    PeriodMatrix::new(z)
}

const GFLD_MAGIC: &[u8; 4] = b"GFLD";

/// Write a field dump: 16-byte header (magic `GFLD`, little-endian u32 grid
/// size, u32 reserved, 4 zero pad bytes), then `n*n` row-major f64 values.
pub fn write_gfld(field: &GridField, w: &mut dyn Write) -> Result<()> {
    w.write_all(GFLD_MAGIC)?;
    w.write_all(&(field.n() as u32).to_le_bytes())?;
    w.write_all(&0u32.to_le_bytes())?; // reserved
    w.write_all(&[0u8; 4])?; // pad to 16 bytes
    for v in field.values() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

/// Read a field dump written by [`write_gfld`].
pub fn read_gfld(r: &mut dyn Read) -> Result<GridField> {
    let mut header = [0u8; 16];
    r.read_exact(&mut header)?;
    if &header[0..4] != GFLD_MAGIC {
        return Err(Error::InvalidInput("bad GFLD magic".into()));
    }
    let n = u32::from_le_bytes(header[4..8].try_into().unwrap()) as usize;
    let mut buf = vec![0u8; n * n * 8];
    r.read_exact(&mut buf)?;
    let values = buf
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    GridField::from_values(n, values)
}

/// CSV export of a grid field (one row of comma-separated values per grid
/// row), for plotting.
pub fn field_to_csv(field: &GridField) -> String {
    let n = field.n();
    let mut out = String::new();
    for ix in 0..n {
        for iy in 0..n {
            if iy > 0 {
                out.push(',');
            }
            out.push_str(&format!("{}", field.get(ix, iy)));
        }
        out.push('\n');
    }
    out
}
