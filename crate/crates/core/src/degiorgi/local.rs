use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::geometry::{geodesic_ball_measure, BallMask, LocalGeometry, SmoothBump};
use super::{check_cadence, integrate_linear, interp};
use crate::error::Result;
use crate::extension::extend;
use crate::harmonics::transform::{synthesize, Synthesis};
use crate::harmonics::{gauss_legendre, make_grid, SphereGrid};
use crate::operators::{lambda_symbol, velocity_on, VectorGridField};
use crate::solver::Trajectory;

/// Both sides of the local energy inequality on one cylinder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalEnergyReport {
    pub level: f64,
    pub z0: f64,
    /// `∫∫∫ |∇_{x,z}(η θ_k*)|² + ∫ (η θ_k)²(t)`.
    pub lhs: f64,
    /// `∫(ηθ_k)²(s)`, `h∫∫|∇η|²θ_k²`, `∫∫∫|∇η|²(θ_k*)²`, `∫∫(ηθ_k)²`.
    pub terms: [f64; 4],
    pub rhs: f64,
    /// `lhs / rhs`, the least constant for which the inequality holds;
    /// `None` when both sides vanish.
    pub minimal_constant: Option<f64>,
    /// Drift constant measured on the same window.
    pub drift_constant: f64,
}

impl LocalEnergyReport {
    pub fn holds_with(&self, c: f64) -> bool {
        self.lhs <= c * self.rhs
    }
}

struct Sample {
    a: f64,
    grad_cyl: f64,
    t2: f64,
    t3: f64,
}

/// Evaluate the local energy inequality for the truncation at `level`, with
/// the extension cut off at height `z0` and `n_z` Gauss points in `z`.
pub fn local_energy_residual(
    traj: &Trajectory,
    geom: &LocalGeometry,
    bump: &SmoothBump,
    level: f64,
    z0: f64,
    n_z: usize,
) -> Result<LocalEnergyReport> {
    let geom = geom.validated()?;
    geom.check_window(traj)?;
    check_cadence(traj, geom.h)?;
    let grid = make_grid(traj.lmax);
    let mask = geodesic_ball_measure(&grid, geom.center, bump.outer.max(geom.h))?;
    let (xg, wg) = gauss_legendre(n_z.max(1));
    let zs: Vec<f64> = xg.iter().map(|x| 0.5 * z0 * (1.0 + x)).collect();
    let wz: Vec<f64> = wg.iter().map(|w| 0.5 * z0 * w).collect();

    let nlon = grid.nlon();
    let mut eta = Vec::with_capacity(mask.len());
    let mut deta = Vec::with_capacity(mask.len());
    for &k in &mask.nodes {
        let p = grid.node(k / nlon, k % nlon);
        let x = p.to_cartesian();
        let (ec, el) = p.frame();
        let g = bump.gradient_at(&x);
        eta.push(bump.value(geom.center.distance(p)));
        deta.push((g.dot(&ec), g.dot(&el)));
    }

    let mut times = Vec::new();
    let mut samples = Vec::new();
    for s in &traj.snapshots {
        if s.t < geom.t_start - 1e-12 || s.t > geom.t_end() + 1e-12 {
            continue;
        }
        let mut smp = Sample {
            a: 0.0,
            grad_cyl: 0.0,
            t2: 0.0,
            t3: 0.0,
        };
        let v0 = synthesize(&s.theta, &grid, Synthesis::Value)?;
        for (i, (&k, &w)) in mask.nodes.iter().zip(&mask.weights).enumerate() {
            let tk = (v0[k] - level).max(0.0);
            let g2 = deta[i].0 * deta[i].0 + deta[i].1 * deta[i].1;
            smp.a += w * (eta[i] * tk).powi(2);
            smp.t2 += w * g2 * tk * tk;
        }
        for (&z, &wzj) in zs.iter().zip(&wz) {
            let layer = extend(&s.theta, z, 1.0)?;
            let dz = layer.map_degree(|l| -lambda_symbol(l, 1.0));
            let val = synthesize(&layer, &grid, Synthesis::Value)?;
            let gc = synthesize(&layer, &grid, Synthesis::DColat)?;
            let gl = synthesize(&layer, &grid, Synthesis::DLonOverSin)?;
            let vz = synthesize(&dz, &grid, Synthesis::Value)?;
            let (mut gcyl, mut t3) = (0.0, 0.0);
            for (i, (&k, &w)) in mask.nodes.iter().zip(&mask.weights).enumerate() {
                let tk = (val[k] - level).max(0.0);
                let on = if val[k] > level { 1.0 } else { 0.0 };
                let (ec, el) = deta[i];
                let cx = tk * ec + eta[i] * on * gc[k];
                let cy = tk * el + eta[i] * on * gl[k];
                let cz = eta[i] * on * vz[k];
                gcyl += w * (cx * cx + cy * cy + cz * cz);
                t3 += w * (ec * ec + el * el) * tk * tk;
            }
            smp.grad_cyl += wzj * gcyl;
            smp.t3 += wzj * t3;
        }
        times.push(s.t);
        samples.push(smp);
    }

    let (s0, s1) = (geom.t_start, geom.t_end());
    let col = |f: fn(&Sample) -> f64| samples.iter().map(f).collect::<Vec<f64>>();
    let a = col(|s| s.a);
    let lhs = integrate_linear(&times, &col(|s| s.grad_cyl), s0, s1) + interp(&times, &a, s1);
    let terms = [
        interp(&times, &a, s0),
        geom.h * integrate_linear(&times, &col(|s| s.t2), s0, s1),
        integrate_linear(&times, &col(|s| s.t3), s0, s1),
        integrate_linear(&times, &a, s0, s1),
    ];
    let rhs: f64 = terms.iter().sum();
    let minimal_constant = if lhs == 0.0 && rhs == 0.0 {
        None
    } else {
        Some(lhs / rhs)
    };
    let drift = drift_hypothesis_check_on(traj, &geom, 2, &grid)?;
    Ok(LocalEnergyReport {
        level,
        z0,
        lhs,
        terms,
        rhs,
        minimal_constant,
        drift_constant: drift,
    })
}

/// `sup_t ∫_B |u|^{2n} / h^n` over the given velocity samples.
pub fn drift_constant(fields: &[VectorGridField], mask: &BallMask, n: usize) -> f64 {
    fields
        .iter()
        .map(|u| {
            let m = u.magnitude_sq();
            let v: Vec<f64> = m.values().iter().map(|s| s.powi(n as i32)).collect();
            mask.integrate(&v)
        })
        .fold(0.0, f64::max)
        / mask.h.powi(n as i32)
}

/// Drift hypothesis constant from the trajectory's velocities on the window.
pub fn drift_hypothesis_check(traj: &Trajectory, geom: &LocalGeometry, n: usize) -> Result<f64> {
    let grid = make_grid(traj.lmax);
    drift_hypothesis_check_on(traj, geom, n, &grid)
}

fn drift_hypothesis_check_on(
    traj: &Trajectory,
    geom: &LocalGeometry,
    n: usize,
    grid: &Arc<SphereGrid>,
) -> Result<f64> {
    geom.check_window(traj)?;
    let mask = geodesic_ball_measure(grid, geom.center, geom.h)?;
    let fields = traj
        .snapshots
        .iter()
        .filter(|s| s.t >= geom.t_start - 1e-12 && s.t <= geom.t_end() + 1e-12)
        .map(|s| velocity_on(&s.theta, grid))
        .collect::<Result<Vec<_>>>()?;
    Ok(drift_constant(&fields, &mask, n))
}
