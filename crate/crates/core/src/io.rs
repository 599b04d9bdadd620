//! File formats: the JSON envelope shared by scattering data, soliton
//! parameters and asymptotic couplings, plus `(x, re u, im u)` CSV.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Complex numbers are written as `[re, im]` pairs everywhere.
pub type Pair = [f64; 2];

pub fn to_pair(z: Complex64) -> Pair {
    [z.re, z.im]
}

pub fn from_pair(p: Pair) -> Complex64 {
    Complex64::new(p[0], p[1])
}

pub fn to_pairs(zs: &[Complex64]) -> Vec<Pair> {
    zs.iter().copied().map(to_pair).collect()
}

pub fn from_pairs(ps: &[Pair]) -> Vec<Complex64> {
    ps.iter().copied().map(from_pair).collect()
}

/// Common JSON envelope. Absent fields are omitted on output; readers pick
/// the fields they need and reject documents missing required ones.
#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
pub struct Envelope {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<Vec<Pair>>,
    #[serde(default)]
    pub poles: Vec<Pair>,
    #[serde(default)]
    pub couplings: Vec<Pair>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_prime: Option<Vec<Pair>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_plus: Option<Vec<Pair>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_minus: Option<Vec<Pair>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_plus: Option<Vec<Pair>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_minus: Option<Vec<Pair>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<serde_json::Value>,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text)?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

/// Writes `(x, re, im)` rows with a header line.
pub fn write_field_csv<W: std::io::Write>(w: W, xs: &[f64], us: &[Complex64]) -> Result<()> {
    if xs.len() != us.len() {
        return Err(Error::InvalidInput(format!(
            "x has {} entries but field has {}",
            xs.len(),
            us.len()
        )));
    }
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["x", "re_u", "im_u"])?;
    for (x, u) in xs.iter().zip(us) {
        wtr.write_record([
            format!("{x:.17e}"),
            format!("{:.17e}", u.re),
            format!("{:.17e}", u.im),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Reads `(x, re, im)` rows. A header row is accepted if its first cell is
/// not numeric. Non-finite values are reported with their row index.
pub fn read_field_csv<R: std::io::Read>(r: R) -> Result<(Vec<f64>, Vec<Complex64>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(r);
    let mut xs = Vec::new();
    let mut us = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.len() < 3 {
            return Err(Error::InvalidInput(format!(
                "row {row}: expected 3 columns (x, re, im), found {}",
                rec.len()
            )));
        }
        let parse = |s: &str| s.parse::<f64>();
        let (x, re, im) = match (parse(&rec[0]), parse(&rec[1]), parse(&rec[2])) {
            (Ok(x), Ok(re), Ok(im)) => (x, re, im),
            _ if row == 0 => continue,
            _ => {
                return Err(Error::InvalidSample {
                    index: xs.len(),
                    reason: format!("unparsable row {row}"),
                })
            }
        };
        if !(x.is_finite() && re.is_finite() && im.is_finite()) {
            return Err(Error::InvalidSample {
                index: xs.len(),
                reason: "non-finite value".into(),
            });
        }
        xs.push(x);
        us.push(Complex64::new(re, im));
    }
    Ok((xs, us))
}
