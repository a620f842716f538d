//! Quantitative diagnostics for the De Giorgi regularity argument:
//! truncation energies, local balls and cylinders, level-set measures,
//! oscillation decay and the comoving rotation frame.

pub mod frame;
pub mod geometry;
pub mod local;
pub mod sets;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harmonics::{make_grid, sht_forward_to, sht_inverse, GridField};
use crate::operators::h_half_seminorm_sq;
use crate::solver::Trajectory;

pub use frame::{comoving_frame, FlowSource, RotationFrame, TrajectoryFlow};
pub use geometry::{
    geodesic_ball_measure, oscillation, oscillation_profile, oscillation_profile_on, BallMask,
    CylinderLadder, LadderStep, LocalGeometry, ModulusFit,
    OscillationProfile, SmoothBump,
};
pub use local::{drift_constant, drift_hypothesis_check, local_energy_residual, LocalEnergyReport};
pub use sets::{degiorgi_sets, isoperimetric_check, CylinderSamples, DeGiorgiSets};

/// `(θ - level)_+` pointwise.
pub fn truncate(theta: &GridField, level: f64) -> GridField {
    theta.map(|v| (v - level).max(0.0))
}

/// Levels `ℓ_k = C(1 - 2^{-k})` and times `T_k = t0(1 - 2^{-k})`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationLadder {
    pub cap: f64,
    pub t0: f64,
    pub k_max: usize,
}

impl TruncationLadder {
    pub fn new(cap: f64, t0: f64, k_max: usize) -> Result<Self> {
        if !(cap > 0.0 && cap.is_finite()) || !(t0 > 0.0 && t0.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "ladder needs C > 0 and t0 > 0, got C={cap}, t0={t0}"
            )));
        }
        Ok(TruncationLadder { cap, t0, k_max })
    }

    pub fn level(&self, k: usize) -> f64 {
        self.cap * (1.0 - 0.5f64.powi(k as i32))
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 * (1.0 - 0.5f64.powi(k as i32))
    }
}

/// `E_k` for `k = 0..=k_max` with its two parts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergySequence {
    pub levels: Vec<f64>,
    pub times: Vec<f64>,
    /// `sup_{t >= T_k} ∫ θ_k²`.
    pub sup_l2: Vec<f64>,
    /// `2 ∫_{T_k} ‖Λ^{1/2} θ_k‖²`, truncations re-projected to `projection_degree`.
    pub dissipation: Vec<f64>,
    pub energies: Vec<f64>,
    pub projection_degree: usize,
}

// Piecewise-linear interpolation of samples at sorted times.
pub(crate) fn interp(times: &[f64], vals: &[f64], t: f64) -> f64 {
    match times.iter().position(|&s| s >= t) {
        None => *vals.last().expect("nonempty"),
        Some(0) => vals[0],
        Some(j) => {
            let (a, b) = (times[j - 1], times[j]);
            let w = if b > a { (t - a) / (b - a) } else { 1.0 };
            vals[j - 1] + w * (vals[j] - vals[j - 1])
        }
    }
}

/// `∫_a^b` of the piecewise-linear interpolant.
pub(crate) fn integrate_linear(times: &[f64], vals: &[f64], a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let mut knots = vec![a];
    knots.extend(times.iter().copied().filter(|&t| t > a && t < b));
    knots.push(b);
    knots
        .windows(2)
        .map(|w| 0.5 * (w[1] - w[0]) * (interp(times, vals, w[0]) + interp(times, vals, w[1])))
        .sum()
}

/// Maximum of the piecewise-linear interpolant over `[a, b]`.
pub(crate) fn sup_linear(times: &[f64], vals: &[f64], a: f64, b: f64) -> f64 {
    let ends = interp(times, vals, a).max(interp(times, vals, b));
    times
        .iter()
        .zip(vals)
        .filter(|(t, _)| **t > a && **t < b)
        .fold(ends, |m, (_, v)| m.max(*v))
}

/// Snapshot spacing must resolve the time scale `h`: `cadence <= h/8`.
pub fn check_cadence(traj: &Trajectory, h: f64) -> Result<()> {
    let cadence = traj.cadence();
    let limit = h / 8.0;
    if cadence > limit * (1.0 + 1e-12) {
        return Err(Error::CadenceViolation { cadence, limit, h });
    }
    Ok(())
}

/// Time-ladder energies of the global truncations `θ_k = (θ - ℓ_k)_+`.
pub fn global_energy_sequence(traj: &Trajectory, ladder: &TruncationLadder) -> Result<EnergySequence> {
    let (t_min, t_max) = (traj.t_min(), traj.t_max());
    if traj.snapshots.is_empty() || t_max <= ladder.t0 || t_min > 0.0 {
        return Err(Error::WindowExceeded {
            start: 0.0,
            end: ladder.t0,
            t_min,
            t_max,
        });
    }
    let lmax = traj.lmax;
    let grid = make_grid(lmax);
    let times = traj.times();
    let fields = traj
        .snapshots
        .iter()
        .map(|s| sht_inverse(&s.theta, &grid))
        .collect::<Result<Vec<_>>>()?;
    let mut seq = EnergySequence {
        levels: vec![],
        times: vec![],
        sup_l2: vec![],
        dissipation: vec![],
        energies: vec![],
        projection_degree: lmax,
    };
    for k in 0..=ladder.k_max {
        let level = ladder.level(k);
        let tk = ladder.time(k);
        let mut l2 = Vec::with_capacity(fields.len());
        let mut hh = Vec::with_capacity(fields.len());
        for f in &fields {
            let tr = truncate(f, level);
            l2.push(tr.inner(&tr));
            hh.push(if tr.max() > 0.0 {
                h_half_seminorm_sq(&sht_forward_to(&tr, lmax)?)
            } else {
                0.0
            });
        }
        let sup = sup_linear(&times, &l2, tk, t_max);
        let diss = 2.0 * integrate_linear(&times, &hh, tk, t_max);
        seq.levels.push(level);
        seq.times.push(tk);
        seq.sup_l2.push(sup);
        seq.dissipation.push(diss);
        seq.energies.push(sup + diss);
    }
    Ok(seq)
}

/// Per-index ratios `E_k / (2^{k(1+2ε)} E_{k-1}^{1+ε})`, `ε = 1/n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecurrenceFit {
    pub epsilon: f64,
    /// `(k, ratio)` for every `k >= 1` with `E_{k-1} > 0`.
    pub ratios: Vec<(usize, f64)>,
    /// Largest ratio: the measured `C'`.
    pub c_prime: f64,
    pub all_finite: bool,
}

pub fn recurrence_fit(energies: &[f64], n: usize) -> Result<RecurrenceFit> {
    if energies.iter().all(|&e| e == 0.0) {
        return Err(Error::NothingToFit);
    }
    let eps = 1.0 / n as f64;
    let mut ratios = Vec::new();
    for k in 1..energies.len() {
        let prev = energies[k - 1];
        if prev > 0.0 {
            let scale = 2f64.powf(k as f64 * (1.0 + 2.0 * eps)) * prev.powf(1.0 + eps);
            ratios.push((k, energies[k] / scale));
        }
    }
    if ratios.is_empty() {
        return Err(Error::NothingToFit);
    }
    let c_prime = ratios.iter().map(|r| r.1).fold(0.0, f64::max);
    let all_finite = ratios.iter().all(|r| r.1.is_finite());
    Ok(RecurrenceFit {
        epsilon: eps,
        ratios,
        c_prime,
        all_finite,
    })
}
