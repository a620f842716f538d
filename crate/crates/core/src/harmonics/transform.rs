use std::f64::consts::SQRT_2;
use std::sync::Arc;

use super::grid::SphereGrid;
use super::legendre::tri_index;
use super::{coeff_index, SpectralField};
use crate::error::{Error, Result};
use crate::sphere::{SpherePoint, Vec3};

/// Scalar values on the nodes of a [`SphereGrid`], row-major in latitude.
#[derive(Debug, Clone)]
pub struct GridField {
    grid: Arc<SphereGrid>,
    values: Vec<f64>,
}

impl GridField {
    pub fn new(grid: Arc<SphereGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "grid has {} nodes, got {} values",
                grid.len(),
                values.len()
            )));
        }
        Ok(GridField { grid, values })
    }

    pub fn zeros(grid: Arc<SphereGrid>) -> Self {
        let n = grid.len();
        GridField { grid, values: vec![0.0; n] }
    }

    pub fn constant(grid: Arc<SphereGrid>, c: f64) -> Self {
        let n = grid.len();
        GridField { grid, values: vec![c; n] }
    }

    pub fn from_fn(grid: Arc<SphereGrid>, f: impl Fn(SpherePoint) -> f64) -> Self {
        let values = grid.points().map(f).collect();
        GridField { grid, values }
    }

    pub fn from_cartesian_fn(grid: Arc<SphereGrid>, f: impl Fn(&Vec3) -> f64) -> Self {
        let values = grid.points().map(|p| f(&p.to_cartesian())).collect();
        GridField { grid, values }
    }

    pub fn grid(&self) -> &Arc<SphereGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.grid.nlon() + j]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> GridField {
        GridField {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_with(&self, other: &GridField, f: impl Fn(f64, f64) -> f64) -> GridField {
        debug_assert!(Arc::ptr_eq(&self.grid, &other.grid) || self.grid.len() == other.grid.len());
        GridField {
            grid: self.grid.clone(),
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    pub fn integrate(&self) -> f64 {
        integrate(self)
    }

    /// `∫ f g` by quadrature.
    pub fn inner(&self, other: &GridField) -> f64 {
        let nlon = self.grid.nlon();
        let mut acc = 0.0;
        for i in 0..self.grid.nlat() {
            let row = i * nlon..(i + 1) * nlon;
            let s: f64 = self.values[row.clone()]
                .iter()
                .zip(&other.values[row])
                .map(|(a, b)| a * b)
                .sum();
            acc += self.grid.weight(i, 0) * s;
        }
        acc
    }
}

/// Quadrature integral over the sphere.
pub fn integrate(f: &GridField) -> f64 {
    let g = &f.grid;
    let nlon = g.nlon();
    (0..g.nlat())
        .map(|i| g.weight(i, 0) * f.values[i * nlon..(i + 1) * nlon].iter().sum::<f64>())
        .sum()
}

/// Which quantity a synthesis produces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Synthesis {
    Value,
    /// `∂_c f`
    DColat,
    /// `(1/sin c) ∂_λ f`
    DLonOverSin,
}

/// Grid values of `f` (or one of its gradient components).
pub(crate) fn synthesize(f: &SpectralField, grid: &SphereGrid, kind: Synthesis) -> Result<Vec<f64>> {
    let lmax = f.lmax();
    grid.require_degree(lmax)?;
    let (nlat, nlon) = (grid.nlat(), grid.nlon());
    let c = f.coeffs();
    let mut out = vec![0.0; nlat * nlon];
    let mut cos_amp = vec![0.0; lmax + 1];
    let mut sin_amp = vec![0.0; lmax + 1];
    for i in 0..nlat {
        let col = &grid.legendre[i];
        let table = match kind {
            Synthesis::Value => &col.p,
            Synthesis::DColat => &col.dp,
            Synthesis::DLonOverSin => &col.mp_over_sin,
        };
        for m in 0..=lmax {
            let (mut a, mut b) = (0.0, 0.0);
            for l in m..=lmax {
                let t = table[tri_index(l, m)];
                a += c[coeff_index(l, m as i64)] * t;
                if m > 0 {
                    b += c[coeff_index(l, -(m as i64))] * t;
                }
            }
            let s = if m == 0 { 1.0 } else { SQRT_2 };
            match kind {
                Synthesis::DLonOverSin => {
                    // ∂_λ (a cos mλ + b sin mλ) = m(-a sin mλ + b cos mλ); m is in the table.
                    cos_amp[m] = s * b;
                    sin_amp[m] = -s * a;
                }
                _ => {
                    cos_amp[m] = s * a;
                    sin_amp[m] = s * b;
                }
            }
        }
        let row = &mut out[i * nlon..(i + 1) * nlon];
        for m in 0..=lmax {
            let (ca, sa) = (cos_amp[m], sin_amp[m]);
            if ca == 0.0 && sa == 0.0 {
                continue;
            }
            let ct = &grid.cos_table[m * nlon..(m + 1) * nlon];
            let st = &grid.sin_table[m * nlon..(m + 1) * nlon];
            for j in 0..nlon {
                row[j] += ca * ct[j] + sa * st[j];
            }
        }
    }
    Ok(out)
}

// Weighted ring Fourier moments: ∫ f cos(mλ) dλ and ∫ f sin(mλ) dλ per ring.
fn ring_moments(values: &[f64], grid: &SphereGrid, lmax: usize) -> (Vec<f64>, Vec<f64>) {
    let (nlat, nlon) = (grid.nlat(), grid.nlon());
    let dl = 2.0 * std::f64::consts::PI / nlon as f64;
    let mut a = vec![0.0; nlat * (lmax + 1)];
    let mut b = vec![0.0; nlat * (lmax + 1)];
    for i in 0..nlat {
        let row = &values[i * nlon..(i + 1) * nlon];
        for m in 0..=lmax {
            let ct = &grid.cos_table[m * nlon..(m + 1) * nlon];
            let st = &grid.sin_table[m * nlon..(m + 1) * nlon];
            let (mut sa, mut sb) = (0.0, 0.0);
            for j in 0..nlon {
                sa += row[j] * ct[j];
                sb += row[j] * st[j];
            }
            a[i * (lmax + 1) + m] = sa * dl;
            b[i * (lmax + 1) + m] = sb * dl;
        }
    }
    (a, b)
}

/// Quadrature projection of grid values onto degrees `<= lout`.
pub(crate) fn analyze(values: &[f64], grid: &SphereGrid, lout: usize) -> Result<SpectralField> {
    grid.require_degree(lout)?;
    let (a, b) = ring_moments(values, grid, lout);
    let w = grid.latitude_weights();
    let mut out = SpectralField::zeros(lout);
    let c = out.coeffs_mut();
    for i in 0..grid.nlat() {
        let col = &grid.legendre[i];
        for m in 0..=lout {
            let s = if m == 0 { 1.0 } else { SQRT_2 };
            let am = w[i] * s * a[i * (lout + 1) + m];
            let bm = w[i] * s * b[i * (lout + 1) + m];
            for l in m..=lout {
                let p = col.p[tri_index(l, m)];
                c[coeff_index(l, m as i64)] += am * p;
                if m > 0 {
                    c[coeff_index(l, -(m as i64))] += bm * p;
                }
            }
        }
    }
    Ok(out)
}

/// Spectral coefficients of `div u` through degree `lout`, via
/// `⟨div u, Y⟩ = -⟨u, ∇Y⟩`.
pub(crate) fn analyze_divergence(
    u_colat: &[f64],
    u_lon: &[f64],
    grid: &SphereGrid,
    lout: usize,
) -> Result<SpectralField> {
    grid.require_degree(lout)?;
    let (ac, bc) = ring_moments(u_colat, grid, lout);
    let (al, bl) = ring_moments(u_lon, grid, lout);
    let w = grid.latitude_weights();
    let mut out = SpectralField::zeros(lout);
    let c = out.coeffs_mut();
    for (i, (col, wi)) in grid.legendre.iter().zip(w).enumerate() {
        for m in 0..=lout {
            let k = i * (lout + 1) + m;
            let s = wi * if m == 0 { 1.0 } else { SQRT_2 };
            for l in m..=lout {
                let t = tri_index(l, m);
                let (dp, q) = (col.dp[t], col.mp_over_sin[t]);
                // Y ∝ cos mλ: ∇Y = (dp cos, -q sin); Y ∝ sin mλ: ∇Y = (dp sin, q cos).
                c[coeff_index(l, m as i64)] -= s * (dp * ac[k] - q * bl[k]);
                if m > 0 {
                    c[coeff_index(l, -(m as i64))] -= s * (dp * bc[k] + q * al[k]);
                }
            }
        }
    }
    Ok(out)
}

/// Analysis to the grid's own degree.
pub fn sht_forward(f: &GridField) -> Result<SpectralField> {
    analyze(&f.values, &f.grid, f.grid.lmax())
}

/// Analysis to degree `lout`, which must be resolvable on the grid.
pub fn sht_forward_to(f: &GridField, lout: usize) -> Result<SpectralField> {
    analyze(&f.values, &f.grid, lout)
}

/// Synthesis of `f` on `grid`.
pub fn sht_inverse(f: &SpectralField, grid: &Arc<SphereGrid>) -> Result<GridField> {
    let values = synthesize(f, grid, Synthesis::Value)?;
    Ok(GridField {
        grid: grid.clone(),
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::super::{evaluate_harmonic, make_grid, BasisIndex};
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn weights_sum_to_four_pi() {
        for l in [0usize, 3, 16] {
            let g = make_grid(l);
            let s: f64 = g.weights().iter().sum();
            assert!((s - 4.0 * PI).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_field_has_only_mean() {
        let g = make_grid(6);
        let f = GridField::constant(g.clone(), 2.5);
        let c = sht_forward(&f).unwrap();
        assert!((c.get(0, 0) - 2.5 * (4.0 * PI).sqrt()).abs() < 1e-12);
        assert!(c.coeffs()[1..].iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn sampled_harmonic_projects_to_unit_coefficient() {
        let g = make_grid(8);
        let idx = BasisIndex::new(3, 2).unwrap();
        let f = GridField::from_fn(g.clone(), |p| evaluate_harmonic(idx, p).unwrap());
        let c = sht_forward(&f).unwrap();
        for k in 0..c.coeffs().len() {
            let expect = if k == idx.offset() { 1.0 } else { 0.0 };
            assert!((c.coeffs()[k] - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn synthesis_matches_pointwise_evaluation() {
        let g = make_grid(7);
        let coeffs: Vec<f64> = (0..64).map(|k| ((k * 37 % 11) as f64 - 5.0) / 7.0).collect();
        let f = SpectralField::from_coeffs(7, coeffs).unwrap();
        let grid_vals = sht_inverse(&f, &g).unwrap();
        for (k, p) in g.points().enumerate().step_by(13) {
            assert!((grid_vals.values()[k] - f.evaluate(p)).abs() < 1e-12);
        }
    }

    #[test]
    fn divergence_of_gradient_is_laplacian() {
        let g = make_grid(5);
        let coeffs: Vec<f64> = (0..36).map(|k| (k as f64 * 0.37).sin()).collect();
        let f = SpectralField::from_coeffs(5, coeffs).unwrap();
        let uc = synthesize(&f, &g, Synthesis::DColat).unwrap();
        let ul = synthesize(&f, &g, Synthesis::DLonOverSin).unwrap();
        let d = analyze_divergence(&uc, &ul, &g, 5).unwrap();
        let expect = f.map_degree(|l| -((l * (l + 1)) as f64));
        assert!(d.max_abs_diff(&expect) < 1e-11);
    }
}
