//! Harmonic (Poisson-semigroup) extension to the half-cylinder and the
//! associated heat kernel.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::harmonics::transform::{synthesize, Synthesis};
use crate::harmonics::{gauss_legendre, make_grid, GridField, SpectralField, SphereGrid};
use crate::operators::{lambda_symbol, seminorm_sq};
use crate::sphere::{great_circle_distance, SpherePoint};

/// Kernel admissibility: the highest retained mode must be damped below this.
pub const KERNEL_TAIL_FLOOR: f64 = 1e-12;

/// `e^{-Λ^α z} f`.
pub fn extend(f: &SpectralField, z: f64, alpha: f64) -> Result<SpectralField> {
    if !(z >= 0.0) || !z.is_finite() {
        return Err(Error::InvalidArgument(format!("extension height z={z} must be >= 0")));
    }
    if !(alpha > 0.0 && alpha <= 2.0) {
        return Err(Error::InvalidArgument(format!("alpha={alpha} must lie in (0, 2]")));
    }
    Ok(f.map_degree(|l| (-lambda_symbol(l, alpha) * z).exp()))
}

/// The extension sampled at a ladder of heights.
#[derive(Debug, Clone)]
pub struct ExtensionField {
    z_levels: Vec<f64>,
    layers: Vec<SpectralField>,
    alpha: f64,
}

impl ExtensionField {
    pub fn new(f: &SpectralField, z_levels: Vec<f64>, alpha: f64) -> Result<Self> {
        if z_levels.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidArgument("z levels must be strictly ascending".into()));
        }
        let layers = z_levels
            .iter()
            .map(|&z| extend(f, z, alpha))
            .collect::<Result<Vec<_>>>()?;
        Ok(ExtensionField { z_levels, layers, alpha })
    }

    pub fn z_levels(&self) -> &[f64] {
        &self.z_levels
    }

    pub fn layers(&self) -> &[SpectralField] {
        &self.layers
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `∂_z` of layer `i`, which is `-Λ^α` applied to it.
    pub fn z_derivative(&self, i: usize) -> SpectralField {
        self.layers[i].map_degree(|l| -lambda_symbol(l, self.alpha))
    }
}

/// Max-norm of the centered second difference in `z` plus `Δ f*` at height
/// `z`, for the `α = 1` extension. Vanishes to second order in `dz`.
pub fn harmonicity_residual(f: &SpectralField, z: f64, dz: f64) -> Result<f64> {
    if !(dz > 0.0 && dz < z) {
        return Err(Error::InvalidArgument(format!("need 0 < dz < z, got dz={dz}, z={z}")));
    }
    let r = f.map_degree(|l| {
        let ll = (l * (l + 1)) as f64;
        let a = ll.sqrt();
        // e^{-a(z+dz)} - 2e^{-az} + e^{-a(z-dz)} = 4 sinh²(a dz/2) e^{-az}
        let sh = (0.5 * a * dz).sinh();
        (-a * z).exp() * (4.0 * sh * sh / (dz * dz) - ll)
    });
    let grid = make_grid(f.lmax());
    let v = synthesize(&r, &grid, Synthesis::Value)?;
    Ok(v.iter().fold(0.0, |m, x| m.max(x.abs())))
}

/// `G(center, ·, z)` sampled on a grid.
#[derive(Debug, Clone)]
pub struct KernelSlice {
    pub center: SpherePoint,
    pub z: f64,
    pub lmax: usize,
    pub values: GridField,
}

impl KernelSlice {
    /// Value at the center, where the kernel peaks.
    pub fn center_value(&self) -> f64 {
        kernel_series(self.lmax, self.z, 1.0)
    }

    pub fn sup(&self) -> f64 {
        self.values.max().max(self.center_value())
    }

    pub fn integral(&self) -> f64 {
        self.values.integrate()
    }

    pub fn l2_norm(&self) -> f64 {
        self.values.inner(&self.values).sqrt()
    }
}

// Σ_l e^{-sqrt(l(l+1)) z} (2l+1)/(4π) P_l(x).
fn kernel_series(lmax: usize, z: f64, x: f64) -> f64 {
    let mut p0 = 1.0;
    let mut p1 = x;
    let mut acc = 1.0 / (4.0 * PI);
    for l in 1..=lmax {
        let pl = if l == 1 {
            p1
        } else {
            let lf = l as f64;
            let p2 = ((2.0 * lf - 1.0) * x * p1 - (lf - 1.0) * p0) / lf;
            p0 = p1;
            p1 = p2;
            p2
        };
        acc += (-lambda_symbol(l, 1.0) * z).exp() * (2 * l + 1) as f64 / (4.0 * PI) * pl;
    }
    acc
}

fn check_admissible(z: f64, lmax: usize) -> Result<()> {
    if !(z > 0.0) {
        return Err(Error::InvalidArgument(format!("kernel height z={z} must be > 0")));
    }
    let tail = (-lambda_symbol(lmax, 1.0) * z).exp();
    if tail > KERNEL_TAIL_FLOOR {
        return Err(Error::TruncationInsufficient {
            tail,
            floor: KERNEL_TAIL_FLOOR,
        });
    }
    Ok(())
}

/// Heat kernel slice via the addition theorem on the grid for degree `lmax`.
pub fn heat_kernel(center: SpherePoint, z: f64, lmax: usize) -> Result<KernelSlice> {
    heat_kernel_on(center, z, lmax, &make_grid(lmax))
}

pub fn heat_kernel_on(
    center: SpherePoint,
    z: f64,
    lmax: usize,
    grid: &Arc<SphereGrid>,
) -> Result<KernelSlice> {
    check_admissible(z, lmax)?;
    let c = center.to_cartesian();
    let values = GridField::from_cartesian_fn(grid.clone(), |x| {
        kernel_series(lmax, z, great_circle_distance(&c, x).cos())
    });
    Ok(KernelSlice {
        center,
        z,
        lmax,
        values,
    })
}

/// Kernel suprema across heights and the log–log slope of `sup G` against `z`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelScaling {
    pub rows: Vec<(f64, f64)>,
    pub exponent: f64,
}

pub fn kernel_sup_scaling(z_list: &[f64], lmax: usize) -> Result<KernelScaling> {
    if z_list.len() < 2 {
        return Err(Error::InsufficientPoints {
            needed: 2,
            got: z_list.len(),
        });
    }
    let grid = make_grid(lmax);
    let mut rows = Vec::with_capacity(z_list.len());
    for &z in z_list {
        let s = heat_kernel_on(SpherePoint::NORTH_POLE, z, lmax, &grid)?;
        rows.push((z, s.sup()));
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.0.ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.1.ln()).collect();
    let (slope, _, _) = least_squares(&xs, &ys);
    Ok(KernelScaling { rows, exponent: slope })
}

/// Quadrature `‖G(center, ·, z)‖_{L²}`.
pub fn l2_kernel_norm(center: SpherePoint, z: f64, lmax: usize) -> Result<f64> {
    Ok(heat_kernel(center, z, lmax)?.l2_norm())
}

/// Spectral value of the kernel `L²` norm, for comparison.
pub fn l2_kernel_norm_spectral(z: f64, lmax: usize) -> f64 {
    (0..=lmax)
        .map(|l| (-2.0 * lambda_symbol(l, 1.0) * z).exp() * (2 * l + 1) as f64 / (4.0 * PI))
        .sum::<f64>()
        .sqrt()
}

/// Slope, intercept and RMS residual of the least-squares line `y ≈ a x + b`.
pub fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let a = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let b = my - a * mx;
    let rss: f64 = xs.iter().zip(ys).map(|(x, y)| (y - a * x - b).powi(2)).sum();
    (a, b, (rss / n).sqrt())
}

/// Result of integrating `|∇_{x,z} f*|²` over the half-cylinder.
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletEnergy {
    /// Contribution of the quadrature ladder `[0, z_max]`.
    pub quadrature: f64,
    /// Exact contribution of `[z_max, ∞)`.
    pub tail: f64,
    pub total: f64,
    /// `⟨f, Λf⟩`.
    pub expected: f64,
}

/// Ladder for the height integral: `[0, z0]`, then `[z0 r^j, z0 r^{j+1}]`
/// up to `z_max`, each with `nodes` Gauss points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometricLadder {
    pub z0: f64,
    pub ratio: f64,
    pub z_max: f64,
    pub nodes: usize,
}

impl GeometricLadder {
    /// A ladder resolving decay rates from `sqrt(2)` to `sqrt(L(L+1))`.
    pub fn for_degree(lmax: usize) -> Self {
        let a_max = lambda_symbol(lmax.max(1), 1.0);
        GeometricLadder {
            z0: 0.25 / a_max,
            ratio: 2.0,
            z_max: 20.0,
            nodes: 16,
        }
    }

    /// Quadrature nodes and weights on `[0, z_max]`.
    pub fn rule(&self) -> (Vec<f64>, Vec<f64>) {
        let (x, w) = gauss_legendre(self.nodes);
        let mut zs = Vec::new();
        let mut ws = Vec::new();
        let mut push = |a: f64, b: f64| {
            for (xi, wi) in x.iter().zip(&w) {
                zs.push(0.5 * (a + b) + 0.5 * (b - a) * xi);
                ws.push(0.5 * (b - a) * wi);
            }
        };
        let mut a = 0.0;
        let mut b = self.z0.min(self.z_max);
        loop {
            push(a, b);
            if b >= self.z_max {
                break;
            }
            a = b;
            b = (b * self.ratio).min(self.z_max);
        }
        (zs, ws)
    }
}

/// `∫_0^∞ ∫ |∇_{x,z} f*|²` for the harmonic extension, with the horizontal
/// gradient evaluated on the grid at each height.
pub fn dirichlet_energy(f: &SpectralField, ladder: &GeometricLadder) -> Result<DirichletEnergy> {
    let grid = make_grid(f.lmax());
    let weights = grid.weights();
    let (zs, ws) = ladder.rule();
    let mut quadrature = 0.0;
    for (&z, &wz) in zs.iter().zip(&ws) {
        let layer = extend(f, z, 1.0)?;
        let dz = layer.map_degree(|l| -lambda_symbol(l, 1.0));
        let gc = synthesize(&layer, &grid, Synthesis::DColat)?;
        let gl = synthesize(&layer, &grid, Synthesis::DLonOverSin)?;
        let vz = synthesize(&dz, &grid, Synthesis::Value)?;
        let slice: f64 = (0..grid.len())
            .map(|k| weights[k] * (gc[k] * gc[k] + gl[k] * gl[k] + vz[k] * vz[k]))
            .sum();
        quadrature += wz * slice;
    }
    // Each mode contributes 2 a² c² e^{-2az}; its integral beyond z_max is a c² e^{-2a z_max}.
    let tail = seminorm_sq(
        &f.map_degree(|l| (-lambda_symbol(l, 1.0) * ladder.z_max).exp()),
        1.0,
    );
    let total = quadrature + tail;
    Ok(DirichletEnergy {
        quadrature,
        tail,
        total,
        expected: seminorm_sq(f, 1.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harmonics::BasisIndex;

    fn y10(lmax: usize) -> SpectralField {
        SpectralField::basis(lmax, BasisIndex::new(1, 0).unwrap()).unwrap()
    }

    #[test]
    fn extension_basics() {
        let f = y10(3);
        assert_eq!(extend(&f, 0.0, 1.0).unwrap(), f);
        let g = extend(&f, 1.0, 1.0).unwrap();
        assert!((g.get(1, 0) - (-(2f64.sqrt())).exp()).abs() < 1e-16);
        let c = SpectralField::basis(3, BasisIndex::new(0, 0).unwrap()).unwrap();
        assert_eq!(extend(&c, 5.0, 1.0).unwrap(), c);
        assert!(extend(&f, -0.1, 1.0).is_err());
    }

    #[test]
    fn harmonicity_of_y10() {
        let r = harmonicity_residual(&y10(2), 0.5, 1e-3).unwrap();
        assert!(r < 1e-5);
        let c = SpectralField::basis(2, BasisIndex::new(0, 0).unwrap()).unwrap();
        assert_eq!(harmonicity_residual(&c, 0.5, 1e-3).unwrap(), 0.0);
    }

    #[test]
    fn kernel_admissibility() {
        assert!(matches!(
            heat_kernel(SpherePoint::NORTH_POLE, 0.05, 16),
            Err(Error::TruncationInsufficient { .. })
        ));
        let s = heat_kernel(SpherePoint::NORTH_POLE, 2.0, 16).unwrap();
        assert!((s.integral() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ladder_covers_interval() {
        let lad = GeometricLadder::for_degree(8);
        let (_, w) = lad.rule();
        let s: f64 = w.iter().sum();
        assert!((s - lad.z_max).abs() < 1e-12);
    }
}
