use serde::{Deserialize, Serialize};

use super::geometry::BallMask;
use crate::error::{Error, Result};
use crate::extension::extend;
use crate::harmonics::transform::{synthesize, Synthesis};
use crate::harmonics::{gauss_legendre, SpectralField, SphereGrid};
use crate::operators::lambda_symbol;
use crate::sphere::Vec3;

/// Values and squared gradients of an extension on `B(h) × [0, h]`, at ball
/// nodes times Gauss points in `z`.
#[derive(Debug, Clone, PartialEq)]
pub struct CylinderSamples {
    pub h: f64,
    pub weights: Vec<f64>,
    pub values: Vec<f64>,
    /// `|∇_{x,z} θ*|²`.
    pub grad_sq: Vec<f64>,
}

impl CylinderSamples {
    fn z_rule(h: f64, n_z: usize) -> (Vec<f64>, Vec<f64>) {
        let (x, w) = gauss_legendre(n_z.max(1));
        (
            x.iter().map(|x| 0.5 * h * (1.0 + x)).collect(),
            w.iter().map(|w| 0.5 * h * w).collect(),
        )
    }

    /// Sample the harmonic extension of `theta`.
    pub fn from_extension(
        theta: &SpectralField,
        grid: &SphereGrid,
        mask: &BallMask,
        n_z: usize,
    ) -> Result<Self> {
        let (zs, wz) = Self::z_rule(mask.h, n_z);
        let mut out = CylinderSamples {
            h: mask.h,
            weights: vec![],
            values: vec![],
            grad_sq: vec![],
        };
        for (&z, &w) in zs.iter().zip(&wz) {
            let layer = extend(theta, z, 1.0)?;
            let dz = layer.map_degree(|l| -lambda_symbol(l, 1.0));
            let v = synthesize(&layer, grid, Synthesis::Value)?;
            let gc = synthesize(&layer, grid, Synthesis::DColat)?;
            let gl = synthesize(&layer, grid, Synthesis::DLonOverSin)?;
            let vz = synthesize(&dz, grid, Synthesis::Value)?;
            for (&k, &wa) in mask.nodes.iter().zip(&mask.weights) {
                out.weights.push(wa * w);
                out.values.push(v[k]);
                out.grad_sq.push(gc[k] * gc[k] + gl[k] * gl[k] + vz[k] * vz[k]);
            }
        }
        Ok(out)
    }

    /// Sample a closed-form field `f(x, z) -> (value, |∇_{x,z}|²)`.
    pub fn from_fn(
        grid: &SphereGrid,
        mask: &BallMask,
        n_z: usize,
        f: impl Fn(&Vec3, f64) -> (f64, f64),
    ) -> Self {
        let (zs, wz) = Self::z_rule(mask.h, n_z);
        let nlon = grid.nlon();
        let mut out = CylinderSamples {
            h: mask.h,
            weights: vec![],
            values: vec![],
            grad_sq: vec![],
        };
        for (&z, &w) in zs.iter().zip(&wz) {
            for (&k, &wa) in mask.nodes.iter().zip(&mask.weights) {
                let x = grid.node_cartesian(k / nlon, k % nlon);
                let (v, g) = f(&x, z);
                out.weights.push(wa * w);
                out.values.push(v);
                out.grad_sq.push(g);
            }
        }
        out
    }

    pub fn measure(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn sup_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Measures of `{θ* <= 0}`, `{θ* >= level}` and the transition set between,
/// plus the Dirichlet energy `K`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeGiorgiSets {
    pub level: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub k: f64,
    pub total: f64,
}

impl DeGiorgiSets {
    /// `| |A|+|B|+|C| - |B*| | / |B*|`.
    pub fn partition_defect(&self) -> f64 {
        ((self.a + self.b + self.c) - self.total).abs() / self.total
    }
}

/// Classify samples against `level`; `None` uses half the sup of `|θ*|`.
pub fn degiorgi_sets(samples: &CylinderSamples, level: Option<f64>) -> Result<DeGiorgiSets> {
    if samples.weights.is_empty() {
        return Err(Error::EmptyBall { h: samples.h });
    }
    let level = level.unwrap_or_else(|| 0.5 * samples.sup_abs());
    let (mut a, mut b, mut c, mut k) = (0.0, 0.0, 0.0, 0.0);
    for ((&w, &v), &g) in samples.weights.iter().zip(&samples.values).zip(&samples.grad_sq) {
        if v <= 0.0 {
            a += w;
        } else if v >= level {
            b += w;
        } else {
            c += w;
        }
        k += w * g;
    }
    Ok(DeGiorgiSets {
        level,
        a,
        b,
        c,
        k,
        total: samples.measure(),
    })
}

/// `|A||B| / (|C|^{1/2} K^{1/2} h^{n+2})`.
pub fn isoperimetric_check(sets: &DeGiorgiSets, h: f64, n: usize) -> Result<f64> {
    let numerator = sets.a * sets.b;
    if numerator == 0.0 {
        return Ok(0.0);
    }
    let denominator = (sets.c * sets.k).sqrt() * h.powi(n as i32 + 2);
    if denominator == 0.0 {
        return Err(Error::ZeroDenominator { numerator });
    }
    Ok(numerator / denominator)
}
