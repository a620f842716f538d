//! Real spherical harmonics, quadrature grids and transforms.

pub mod grid;
pub mod legendre;
pub(crate) mod transform;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sphere::{SpherePoint, Vec3};
use legendre::{tri_index, LegendreColumn};

pub use grid::{gauss_legendre, make_grid, SphereGrid};
pub use transform::{integrate, sht_forward, sht_forward_to, sht_inverse, GridField};

/// Eigenvalue of `-Δ` on degree-`l` harmonics.
pub fn laplace_eigenvalue(l: usize) -> f64 {
    (l * (l + 1)) as f64
}

/// Degree and order of a real harmonic, `|m| <= l`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BasisIndex {
    pub l: usize,
    pub m: i64,
}

impl BasisIndex {
    pub fn new(l: i64, m: i64) -> Result<Self> {
        if l < 0 || m.abs() > l {
            return Err(Error::InvalidIndex { l, m });
        }
        Ok(BasisIndex { l: l as usize, m })
    }

    /// Position in the canonical `(l; m = -l..l)` coefficient order.
    #[inline]
    pub fn offset(self) -> usize {
        coeff_index(self.l, self.m)
    }

    pub fn from_offset(k: usize) -> Self {
        let l = (k as f64).sqrt() as usize;
        // guard against rounding in the square root
        let l = if (l + 1) * (l + 1) <= k { l + 1 } else if l * l > k { l - 1 } else { l };
        BasisIndex {
            l,
            m: k as i64 - (l * l + l) as i64,
        }
    }
}

#[inline]
pub(crate) fn coeff_index(l: usize, m: i64) -> usize {
    ((l * l + l) as i64 + m) as usize
}

/// Number of coefficients through degree `lmax`.
#[inline]
pub fn coeff_count(lmax: usize) -> usize {
    (lmax + 1) * (lmax + 1)
}

/// Value of the real orthonormal harmonic `Y_l^m` at `point`.
pub fn evaluate_harmonic(idx: BasisIndex, point: SpherePoint) -> Result<f64> {
    BasisIndex::new(idx.l as i64, idx.m)?;
    let col = LegendreColumn::new(idx.l, point.colat);
    let ma = idx.m.unsigned_abs() as usize;
    let p = col.p[tri_index(idx.l, ma)];
    Ok(match idx.m {
        0 => p,
        m if m > 0 => std::f64::consts::SQRT_2 * p * (ma as f64 * point.lon).cos(),
        _ => std::f64::consts::SQRT_2 * p * (ma as f64 * point.lon).sin(),
    })
}

/// Real harmonic coefficients through degree `lmax`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralField {
    lmax: usize,
    coeffs: Vec<f64>,
}

impl SpectralField {
    pub fn zeros(lmax: usize) -> Self {
        SpectralField {
            lmax,
            coeffs: vec![0.0; coeff_count(lmax)],
        }
    }

    pub fn from_coeffs(lmax: usize, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != coeff_count(lmax) {
            return Err(Error::InvalidArgument(format!(
                "degree {lmax} needs {} coefficients, got {}",
                coeff_count(lmax),
                coeffs.len()
            )));
        }
        if let Some(k) = coeffs.iter().position(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument(format!("coefficient {k} is not finite")));
        }
        Ok(SpectralField { lmax, coeffs })
    }

    /// A single harmonic with unit coefficient.
    pub fn basis(lmax: usize, idx: BasisIndex) -> Result<Self> {
        if idx.l > lmax {
            return Err(Error::InvalidIndex {
                l: idx.l as i64,
                m: idx.m,
            });
        }
        let mut f = SpectralField::zeros(lmax);
        f.coeffs[idx.offset()] = 1.0;
        Ok(f)
    }

    pub fn lmax(&self) -> usize {
        self.lmax
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub(crate) fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn get(&self, l: usize, m: i64) -> f64 {
        if l > self.lmax || m.unsigned_abs() as usize > l {
            0.0
        } else {
            self.coeffs[coeff_index(l, m)]
        }
    }

    pub fn set(&mut self, l: usize, m: i64, value: f64) -> Result<()> {
        if l > self.lmax || m.unsigned_abs() as usize > l {
            return Err(Error::InvalidIndex { l: l as i64, m });
        }
        self.coeffs[coeff_index(l, m)] = value;
        Ok(())
    }

    /// Spatial mean value `c_00 / sqrt(4π)`.
    pub fn mean(&self) -> f64 {
        self.coeffs[0] / (4.0 * std::f64::consts::PI).sqrt()
    }

    /// `∫ f²`, by Parseval.
    pub fn norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn dot(&self, other: &SpectralField) -> f64 {
        let n = self.coeffs.len().min(other.coeffs.len());
        self.coeffs[..n]
            .iter()
            .zip(&other.coeffs[..n])
            .map(|(a, b)| a * b)
            .sum()
    }

    /// Truncate or zero-pad to degree `lmax`.
    pub fn resized(&self, lmax: usize) -> SpectralField {
        let mut out = SpectralField::zeros(lmax);
        let n = coeff_count(lmax.min(self.lmax));
        out.coeffs[..n].copy_from_slice(&self.coeffs[..n]);
        out
    }

    /// Multiply each coefficient by `mult(l)`.
    pub fn map_degree(&self, mut mult: impl FnMut(usize) -> f64) -> SpectralField {
        let mut out = self.clone();
        for l in 0..=self.lmax {
            let s = mult(l);
            for c in &mut out.coeffs[l * l..(l + 1) * (l + 1)] {
                *c *= s;
            }
        }
        out
    }

    pub fn scaled(&self, s: f64) -> SpectralField {
        SpectralField {
            lmax: self.lmax,
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    /// `self + s * other`; degrees must agree.
    pub fn axpy(&self, s: f64, other: &SpectralField) -> SpectralField {
        debug_assert_eq!(self.lmax, other.lmax);
        SpectralField {
            lmax: self.lmax,
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a + s * b)
                .collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }

    /// Largest coefficient magnitude difference.
    pub fn max_abs_diff(&self, other: &SpectralField) -> f64 {
        let n = coeff_count(self.lmax.max(other.lmax));
        (0..n)
            .map(|k| {
                let a = self.coeffs.get(k).copied().unwrap_or(0.0);
                let b = other.coeffs.get(k).copied().unwrap_or(0.0);
                (a - b).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Point value by direct summation.
    pub fn evaluate(&self, point: SpherePoint) -> f64 {
        let col = LegendreColumn::new(self.lmax, point.colat);
        let mut acc = 0.0;
        for m in 0..=self.lmax {
            let (s, c) = (m as f64 * point.lon).sin_cos();
            let mut a = 0.0;
            let mut b = 0.0;
            for l in m..=self.lmax {
                let p = col.p[tri_index(l, m)];
                a += self.coeffs[coeff_index(l, m as i64)] * p;
                if m > 0 {
                    b += self.coeffs[coeff_index(l, -(m as i64))] * p;
                }
            }
            if m == 0 {
                acc += a;
            } else {
                acc += std::f64::consts::SQRT_2 * (a * c + b * s);
            }
        }
        acc
    }

    /// Surface gradient at `point` as an ambient vector tangent to the sphere.
    pub fn evaluate_gradient(&self, point: SpherePoint) -> Vec3 {
        let col = LegendreColumn::new(self.lmax, point.colat);
        let mut gc = 0.0;
        let mut gl = 0.0;
        for m in 0..=self.lmax {
            let (s, c) = (m as f64 * point.lon).sin_cos();
            let (mut da, mut db, mut qa, mut qb) = (0.0, 0.0, 0.0, 0.0);
            for l in m..=self.lmax {
                let t = tri_index(l, m);
                let ca = self.coeffs[coeff_index(l, m as i64)];
                da += ca * col.dp[t];
                qa += ca * col.mp_over_sin[t];
                if m > 0 {
                    let cb = self.coeffs[coeff_index(l, -(m as i64))];
                    db += cb * col.dp[t];
                    qb += cb * col.mp_over_sin[t];
                }
            }
            if m == 0 {
                gc += da;
            } else {
                let r2 = std::f64::consts::SQRT_2;
                gc += r2 * (da * c + db * s);
                gl += r2 * (-qa * s + qb * c);
            }
        }
        let (ec, el) = point.frame();
        ec * gc + el * gl
    }
}
