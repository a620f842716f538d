//! Text snapshot files: a JSON header line, then one line of coefficients
//! per degree in `m = -l..l` order.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harmonics::SpectralField;
use crate::solver::SimState;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnapshotHeader {
    pub format_version: u32,
    #[serde(rename = "L")]
    pub lmax: usize,
    pub t: f64,
    pub alpha: f64,
    pub kappa: f64,
}

/// Serialize with shortest round-trip decimals.
pub fn write_snapshot(state: &SimState, alpha: f64, kappa: f64) -> String {
    let lmax = state.theta.lmax();
    let header = SnapshotHeader {
        format_version: FORMAT_VERSION,
        lmax,
        t: state.t,
        alpha,
        kappa,
    };
    let mut out = serde_json::to_string(&header).expect("header serializes");
    out.push('\n');
    let c = state.theta.coeffs();
    for l in 0..=lmax {
        let row = &c[l * l..(l + 1) * (l + 1)];
        for (k, v) in row.iter().enumerate() {
            if k > 0 {
                out.push(' ');
            }
            write!(out, "{v:e}").expect("string write");
        }
        out.push('\n');
    }
    out
}

pub fn read_snapshot(text: &str) -> Result<(SnapshotHeader, SimState)> {
    let bad = |m: String| Error::InvalidArgument(format!("snapshot: {m}"));
    let (head, body) = text.split_once('\n').ok_or_else(|| bad("missing header line".into()))?;
    let header: SnapshotHeader =
        serde_json::from_str(head).map_err(|e| bad(format!("header: {e}")))?;
    if header.format_version != FORMAT_VERSION {
        return Err(bad(format!("unsupported format_version {}", header.format_version)));
    }
    let coeffs = body
        .split_whitespace()
        .map(|s| s.parse::<f64>().map_err(|e| bad(format!("coefficient {s:?}: {e}"))))
        .collect::<Result<Vec<f64>>>()?;
    let expected = (header.lmax + 1) * (header.lmax + 1);
    if coeffs.len() != expected {
        return Err(bad(format!(
            "expected {expected} coefficients for L={}, found {}",
            header.lmax,
            coeffs.len()
        )));
    }
    let theta = SpectralField::from_coeffs(header.lmax, coeffs)?;
    Ok((header, SimState { t: header.t, theta }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_is_bitwise() {
        let coeffs = vec![0.0, 0.1, -1.0 / 3.0, 1e-300, 5e-324, -0.0, 7.25, f64::MAX, 1.0 + f64::EPSILON];
        let theta = SpectralField::from_coeffs(2, coeffs.clone()).unwrap();
        let state = SimState { t: 0.1 + 0.2, theta };
        let text = write_snapshot(&state, 1.0, 0.5);
        let (h, back) = read_snapshot(&text).unwrap();
        assert_eq!(h.t.to_bits(), (0.1f64 + 0.2).to_bits());
        for (a, b) in coeffs.iter().zip(back.theta.coeffs()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        assert_eq!(text.lines().count(), 4);
    }

    #[test]
    fn count_mismatch_is_rejected() {
        let text = "{\"format_version\":1,\"L\":1,\"t\":0.0,\"alpha\":1.0,\"kappa\":1.0}\n0 1 2\n";
        assert!(read_snapshot(text).is_err());
    }
}
