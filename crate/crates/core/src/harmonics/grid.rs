use std::f64::consts::PI;
use std::sync::Arc;

use super::legendre::LegendreColumn;
use crate::error::{Error, Result};
use crate::sphere::{SpherePoint, Vec3};

/// Gauss–Legendre colatitudes × equispaced longitudes, with the Legendre
/// tables needed to transform fields up to degree `lmax`.
#[derive(Debug)]
pub struct SphereGrid {
    lmax: usize,
    nlat: usize,
    nlon: usize,
    colat: Vec<f64>,
    sin_colat: Vec<f64>,
    lat_weights: Vec<f64>,
    lon: Vec<f64>,
    pub(crate) legendre: Vec<LegendreColumn>,
    // cos(m λ_j), sin(m λ_j), row-major in m.
    pub(crate) cos_table: Vec<f64>,
    pub(crate) sin_table: Vec<f64>,
}

/// Grid whose quadrature makes the cubic products of degree-`lmax` fields
/// exact: `nlat >= ceil(3(L+1)/2)` (rounded up to even) and `nlon >= 3L+1`.
pub fn make_grid(lmax: usize) -> Arc<SphereGrid> {
    let mut nlat = (3 * (lmax + 1)).div_ceil(2).max(2);
    if nlat % 2 == 1 {
        nlat += 1;
    }
    let nlon = 3 * lmax + 1;
    Arc::new(SphereGrid::build(lmax, nlat, nlon))
}

impl SphereGrid {
    /// Grid with explicit resolution. Quadratic products of degree-`lmax`
    /// fields must be integrated exactly, so `nlat >= L+1`, `nlon >= 2L+1`.
    pub fn with_resolution(lmax: usize, nlat: usize, nlon: usize) -> Result<Arc<SphereGrid>> {
        if nlat < lmax + 1 || nlon < 2 * lmax + 1 {
            return Err(Error::GridTooSmall {
                reason: format!(
                    "nlat={nlat}, nlon={nlon} cannot resolve degree {lmax} (need nlat>={}, nlon>={})",
                    lmax + 1,
                    2 * lmax + 1
                ),
            });
        }
        Ok(Arc::new(SphereGrid::build(lmax, nlat, nlon)))
    }

    fn build(lmax: usize, nlat: usize, nlon: usize) -> SphereGrid {
        let (x, w) = gauss_legendre(nlat);
        let colat: Vec<f64> = x.iter().map(|v| v.acos()).collect();
        let sin_colat = colat.iter().map(|c| c.sin()).collect();
        let lon: Vec<f64> = (0..nlon).map(|j| 2.0 * PI * j as f64 / nlon as f64).collect();
        let legendre = colat.iter().map(|&c| LegendreColumn::new(lmax, c)).collect();
        let mut cos_table = vec![0.0; (lmax + 1) * nlon];
        let mut sin_table = vec![0.0; (lmax + 1) * nlon];
        for m in 0..=lmax {
            for j in 0..nlon {
                // Reduce the phase exactly to keep the tables symmetric.
                let k = (m * j) % nlon;
                let phase = 2.0 * PI * k as f64 / nlon as f64;
                cos_table[m * nlon + j] = phase.cos();
                sin_table[m * nlon + j] = phase.sin();
            }
        }
        SphereGrid {
            lmax,
            nlat,
            nlon,
            colat,
            sin_colat,
            lat_weights: w,
            lon,
            legendre,
            cos_table,
            sin_table,
        }
    }

    pub fn lmax(&self) -> usize {
        self.lmax
    }

    pub fn nlat(&self) -> usize {
        self.nlat
    }

    pub fn nlon(&self) -> usize {
        self.nlon
    }

    pub fn len(&self) -> usize {
        self.nlat * self.nlon
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn colatitudes(&self) -> &[f64] {
        &self.colat
    }

    pub fn sin_colatitudes(&self) -> &[f64] {
        &self.sin_colat
    }

    pub fn longitudes(&self) -> &[f64] {
        &self.lon
    }

    /// Gauss weights in `cos(colat)`; they sum to 2.
    pub fn latitude_weights(&self) -> &[f64] {
        &self.lat_weights
    }

    /// Area weight of node `(i, j)`; all weights sum to 4π.
    #[inline]
    pub fn weight(&self, i: usize, _j: usize) -> f64 {
        self.lat_weights[i] * 2.0 * PI / self.nlon as f64
    }

    /// Area weights in row-major node order.
    pub fn weights(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        for i in 0..self.nlat {
            let w = self.weight(i, 0);
            out.extend(std::iter::repeat_n(w, self.nlon));
        }
        out
    }

    pub fn node(&self, i: usize, j: usize) -> SpherePoint {
        SpherePoint::new(self.colat[i], self.lon[j])
    }

    pub fn node_cartesian(&self, i: usize, j: usize) -> Vec3 {
        self.node(i, j).to_cartesian()
    }

    /// Node points in row-major order.
    pub fn points(&self) -> impl Iterator<Item = SpherePoint> + '_ {
        (0..self.nlat).flat_map(move |i| (0..self.nlon).map(move |j| self.node(i, j)))
    }

    /// Whether fields of degree `l` can be analyzed and synthesized exactly.
    pub fn supports_degree(&self, l: usize) -> bool {
        l <= self.lmax && self.nlat > l && self.nlon > 2 * l
    }

    /// Whether cubic products of degree-`l` fields are integrated exactly,
    /// which makes the projected advection term alias-free.
    pub fn is_dealiased_for(&self, l: usize) -> bool {
        l <= self.lmax && self.nlat >= (3 * (l + 1)).div_ceil(2) && self.nlon > 3 * l
    }

    pub(crate) fn require_degree(&self, l: usize) -> Result<()> {
        if self.supports_degree(l) {
            Ok(())
        } else {
            Err(Error::GridTooSmall {
                reason: format!(
                    "grid (lmax={}, nlat={}, nlon={}) cannot transform degree {l}",
                    self.lmax, self.nlat, self.nlon
                ),
            })
        }
    }
}

/// Gauss–Legendre nodes (descending in `x`, so ascending in colatitude) and
/// weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_and_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_and_derivative(n, z);
        if d != 0.0 {
            dp = d;
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}
