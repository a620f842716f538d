//! Spectral multipliers and pseudospectral differential operators.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::harmonics::transform::{analyze, analyze_divergence, synthesize, Synthesis};
use crate::harmonics::{make_grid, GridField, SpectralField, SphereGrid};
use crate::sphere::{SpherePoint, Vec3};

/// A tangent vector field on grid nodes, in the local (colatitude, longitude)
/// orthonormal frame.
#[derive(Debug, Clone)]
pub struct VectorGridField {
    grid: Arc<SphereGrid>,
    u_colat: Vec<f64>,
    u_lon: Vec<f64>,
}

impl VectorGridField {
    pub fn new(grid: Arc<SphereGrid>, u_colat: Vec<f64>, u_lon: Vec<f64>) -> Result<Self> {
        if u_colat.len() != grid.len() || u_lon.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "vector components must have {} values",
                grid.len()
            )));
        }
        Ok(VectorGridField { grid, u_colat, u_lon })
    }

    pub fn zeros(grid: Arc<SphereGrid>) -> Self {
        let n = grid.len();
        VectorGridField {
            grid,
            u_colat: vec![0.0; n],
            u_lon: vec![0.0; n],
        }
    }

    /// Sample an ambient vector field, projecting out the radial part.
    pub fn from_ambient(grid: Arc<SphereGrid>, f: impl Fn(&Vec3) -> Vec3) -> Self {
        let mut u_colat = Vec::with_capacity(grid.len());
        let mut u_lon = Vec::with_capacity(grid.len());
        for p in grid.points() {
            let v = f(&p.to_cartesian());
            let (ec, el) = p.frame();
            u_colat.push(v.dot(&ec));
            u_lon.push(v.dot(&el));
        }
        VectorGridField { grid, u_colat, u_lon }
    }

    pub fn grid(&self) -> &Arc<SphereGrid> {
        &self.grid
    }

    pub fn u_colat(&self) -> &[f64] {
        &self.u_colat
    }

    pub fn u_lon(&self) -> &[f64] {
        &self.u_lon
    }

    /// Ambient vector at node `k` (row-major).
    pub fn ambient(&self, k: usize) -> Vec3 {
        let nlon = self.grid.nlon();
        let (ec, el) = self.grid.node(k / nlon, k % nlon).frame();
        ec * self.u_colat[k] + el * self.u_lon[k]
    }

    /// Pointwise `|u|²`.
    pub fn magnitude_sq(&self) -> GridField {
        let v = self
            .u_colat
            .iter()
            .zip(&self.u_lon)
            .map(|(a, b)| a * a + b * b)
            .collect();
        GridField::new(self.grid.clone(), v).expect("shape preserved")
    }

    /// `∫ |u|²` by quadrature.
    pub fn l2_norm_sq(&self) -> f64 {
        self.magnitude_sq().integrate()
    }

    /// Pointwise `u · w`.
    pub fn dot(&self, other: &VectorGridField) -> GridField {
        let v = (0..self.grid.len())
            .map(|k| self.u_colat[k] * other.u_colat[k] + self.u_lon[k] * other.u_lon[k])
            .collect();
        GridField::new(self.grid.clone(), v).expect("shape preserved")
    }

    pub fn max_magnitude(&self) -> f64 {
        self.magnitude_sq().max().sqrt()
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 2.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("alpha={alpha} must lie in (0, 2]")))
    }
}

/// `(l(l+1))^{s/2}`, the symbol of `Λ^s`; zero on the mean for `s > 0`.
#[inline]
pub fn lambda_symbol(l: usize, s: f64) -> f64 {
    if l == 0 {
        if s == 0.0 {
            1.0
        } else {
            0.0
        }
    } else {
        ((l * (l + 1)) as f64).powf(0.5 * s)
    }
}

/// `Λ^α f` for `α ∈ (0, 2]`.
pub fn fractional_laplacian(f: &SpectralField, alpha: f64) -> Result<SpectralField> {
    check_alpha(alpha)?;
    Ok(lambda_power(f, alpha))
}

/// `Λ^s f` for any real `s`, with the mean mode mapped to zero when `s != 0`.
pub fn lambda_power(f: &SpectralField, s: f64) -> SpectralField {
    f.map_degree(|l| lambda_symbol(l, s))
}

/// `Λ^{-1} f`; the mean must vanish relative to `‖f‖`.
pub fn inverse_lambda(f: &SpectralField) -> Result<SpectralField> {
    let mean = f.coeffs()[0];
    if mean.abs() > 1e-10 * f.norm() {
        return Err(Error::NonZeroMean { mean });
    }
    Ok(f.map_degree(|l| if l == 0 { 0.0 } else { 1.0 / ((l * (l + 1)) as f64).sqrt() }))
}

/// `∫ |Λ^{1/2} f|² = Σ sqrt(l(l+1)) f_lm²`.
pub fn h_half_seminorm_sq(f: &SpectralField) -> f64 {
    seminorm_sq(f, 1.0)
}

/// `∫ |Λ^{s/2} f|²`.
pub fn seminorm_sq(f: &SpectralField, s: f64) -> f64 {
    let c = f.coeffs();
    let mut acc = 0.0;
    for l in 1..=f.lmax() {
        let w = lambda_symbol(l, s);
        acc += w * c[l * l..(l + 1) * (l + 1)].iter().map(|x| x * x).sum::<f64>();
    }
    acc
}

/// Surface gradient on `grid`, evaluated with analytic basis derivatives.
pub fn gradient_on(f: &SpectralField, grid: &Arc<SphereGrid>) -> Result<VectorGridField> {
    let u_colat = synthesize(f, grid, Synthesis::DColat)?;
    let u_lon = synthesize(f, grid, Synthesis::DLonOverSin)?;
    Ok(VectorGridField {
        grid: grid.clone(),
        u_colat,
        u_lon,
    })
}

/// Surface gradient on the standard padded grid for `f`'s degree.
pub fn gradient(f: &SpectralField) -> Result<VectorGridField> {
    gradient_on(f, &make_grid(f.lmax()))
}

/// `n × ∇ψ`: the gradient rotated by +90° in the tangent plane.
pub fn perp_gradient_on(psi: &SpectralField, grid: &Arc<SphereGrid>) -> Result<VectorGridField> {
    let g = gradient_on(psi, grid)?;
    Ok(VectorGridField {
        grid: g.grid,
        u_colat: g.u_lon.iter().map(|v| -v).collect(),
        u_lon: g.u_colat,
    })
}

pub fn perp_gradient(psi: &SpectralField) -> Result<VectorGridField> {
    perp_gradient_on(psi, &make_grid(psi.lmax()))
}

/// `u = ∇⊥ Λ^{-1} θ` sampled on `grid`.
pub fn velocity_on(theta: &SpectralField, grid: &Arc<SphereGrid>) -> Result<VectorGridField> {
    perp_gradient_on(&inverse_lambda(theta)?, grid)
}

pub fn velocity_from_theta(theta: &SpectralField) -> Result<VectorGridField> {
    velocity_on(theta, &make_grid(theta.lmax()))
}

/// Pointwise velocity `∇⊥ Λ^{-1} θ` at an arbitrary point, as an ambient vector.
pub fn velocity_at(psi: &SpectralField, p: SpherePoint) -> Vec3 {
    let n = p.to_cartesian();
    n.cross(&psi.evaluate_gradient(p))
}

/// Spectral coefficients of `div u`, through the grid's degree.
pub fn divergence_coeffs(u: &VectorGridField) -> Result<SpectralField> {
    analyze_divergence(&u.u_colat, &u.u_lon, &u.grid, u.grid.lmax())
}

/// Surface divergence, pseudospectrally: weak-form projection then synthesis.
pub fn divergence(u: &VectorGridField) -> Result<GridField> {
    let d = divergence_coeffs(u)?;
    let values = synthesize(&d, &u.grid, Synthesis::Value)?;
    GridField::new(u.grid.clone(), values)
}

/// Projection of `u · ∇θ` onto degrees `<= l_out`. The grid must be padded
/// so that this projection is alias-free.
pub fn advection(u: &VectorGridField, theta: &SpectralField, l_out: usize) -> Result<SpectralField> {
    let grid = &u.grid;
    let need = theta.lmax().max(l_out);
    if !grid.is_dealiased_for(need) {
        return Err(Error::GridTooSmall {
            reason: format!(
                "advection at degree {need} needs a padded grid (nlat={}, nlon={})",
                grid.nlat(),
                grid.nlon()
            ),
        });
    }
    let gc = synthesize(theta, grid, Synthesis::DColat)?;
    let gl = synthesize(theta, grid, Synthesis::DLonOverSin)?;
    let prod: Vec<f64> = (0..grid.len())
        .map(|k| u.u_colat[k] * gc[k] + u.u_lon[k] * gl[k])
        .collect();
    analyze(&prod, grid, l_out)
}

/// Outcome of the pointwise convexity inequality `φ'(θ) Λθ >= Λφ(θ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CordobaReport {
    /// Minimum over nodes of `φ'(θ)Λθ - Λφ(θ)`.
    pub min_residual: f64,
    pub tolerance: f64,
    /// Degree to which `φ(θ)` was projected before applying `Λ`.
    pub projection_degree: usize,
    pub holds: bool,
}

/// Evaluate `φ'(θ)Λθ - Λ(φ(θ))` on the grid for `projection_degree`, with
/// `φ(θ)` projected to that degree.
pub fn cordoba_check(
    theta: &SpectralField,
    phi: impl Fn(f64) -> f64,
    dphi: impl Fn(f64) -> f64,
    projection_degree: usize,
    tol: f64,
) -> Result<CordobaReport> {
    let lp = projection_degree.max(theta.lmax());
    let grid = make_grid(lp);
    let th = synthesize(theta, &grid, Synthesis::Value)?;
    let lam_th = synthesize(&lambda_power(theta, 1.0), &grid, Synthesis::Value)?;
    let composed: Vec<f64> = th.iter().map(|&v| phi(v)).collect();
    let comp_hat = analyze(&composed, &grid, lp)?;
    let lam_comp = synthesize(&lambda_power(&comp_hat, 1.0), &grid, Synthesis::Value)?;
    let min_residual = (0..grid.len())
        .map(|k| dphi(th[k]) * lam_th[k] - lam_comp[k])
        .fold(f64::INFINITY, f64::min);
    Ok(CordobaReport {
        min_residual,
        tolerance: tol,
        projection_degree: lp,
        holds: min_residual >= -tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harmonics::{sht_inverse, BasisIndex};
    use std::f64::consts::PI;

    fn y(lmax: usize, l: i64, m: i64) -> SpectralField {
        SpectralField::basis(lmax, BasisIndex::new(l, m).unwrap()).unwrap()
    }

    fn pseudo_random(lmax: usize, salt: u64) -> SpectralField {
        let mut s = salt.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let mut c = Vec::new();
        for _ in 0..(lmax + 1) * (lmax + 1) {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            c.push(((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5);
        }
        c[0] = 0.0;
        SpectralField::from_coeffs(lmax, c).unwrap()
    }

    #[test]
    fn multiplier_values() {
        let f = fractional_laplacian(&y(4, 1, 0), 1.0).unwrap();
        assert!((f.get(1, 0) - 2f64.sqrt()).abs() < 1e-15);
        let f = fractional_laplacian(&y(4, 3, 1), 2.0).unwrap();
        assert!((f.get(3, 1) - 12.0).abs() < 1e-13);
        assert_eq!(fractional_laplacian(&y(4, 0, 0), 0.7).unwrap().norm(), 0.0);
        assert!(fractional_laplacian(&y(4, 1, 0), 0.0).is_err());
        assert!(fractional_laplacian(&y(4, 1, 0), 2.5).is_err());
    }

    #[test]
    fn inverse_lambda_rejects_mean() {
        let mut f = y(3, 2, 1);
        f.set(0, 0, 0.1).unwrap();
        assert!(matches!(inverse_lambda(&f), Err(Error::NonZeroMean { .. })));
        let z = SpectralField::zeros(3);
        assert_eq!(inverse_lambda(&z).unwrap(), z);
        let g = inverse_lambda(&y(3, 1, 0)).unwrap();
        assert!((g.get(1, 0) - 1.0 / 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn zonal_perp_gradient() {
        let grid = make_grid(4);
        let u = perp_gradient_on(&y(4, 1, 0), &grid).unwrap();
        let a = (3.0 / (4.0 * PI)).sqrt();
        for (k, p) in grid.points().enumerate() {
            assert!(u.u_colat()[k].abs() < 1e-14);
            assert!((u.u_lon()[k] + a * p.colat.sin()).abs() < 1e-13);
        }
    }

    #[test]
    fn divergence_free_and_laplacian() {
        let psi = pseudo_random(10, 3);
        let u = perp_gradient(&psi).unwrap();
        assert!(divergence(&u).unwrap().sup_norm() < 1e-10 * psi.norm());

        let grid = make_grid(4);
        let g = gradient_on(&y(4, 1, 0), &grid).unwrap();
        let d = divergence(&g).unwrap();
        let expect = sht_inverse(&y(4, 1, 0).scaled(-2.0), &grid).unwrap();
        let err = d.zip_with(&expect, |a, b| a - b).sup_norm();
        assert!(err < 1e-10);
    }

    #[test]
    fn advection_requires_padding() {
        let theta = pseudo_random(8, 1);
        let small = SphereGrid::with_resolution(8, 9, 17).unwrap();
        let u = velocity_on(&theta, &small).unwrap();
        assert!(matches!(advection(&u, &theta, 8), Err(Error::GridTooSmall { .. })));
    }

    #[test]
    fn transport_is_skew() {
        let theta = pseudo_random(12, 9);
        let grid = make_grid(12);
        let u = velocity_on(&theta, &grid).unwrap();
        let a = advection(&u, &theta, 12).unwrap();
        assert!(theta.dot(&a).abs() < 1e-9 * theta.norm_sq());
        assert!(a.get(0, 0).abs() < 1e-10);
    }

    #[test]
    fn cordoba_linear_is_equality() {
        let theta = pseudo_random(6, 4);
        let r = cordoba_check(&theta, |x| x, |_| 1.0, 12, 1e-6).unwrap();
        assert!(r.min_residual.abs() < 1e-10);
        assert_eq!(r.projection_degree, 12);
    }
}
