use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::check_cadence;
use crate::error::{Error, Result};
use crate::extension::least_squares;
use crate::harmonics::{make_grid, sht_inverse, GridField, SphereGrid};
use crate::solver::Trajectory;
use crate::sphere::{distance_gradient, great_circle_distance, SpherePoint, Vec3};

/// Grid nodes inside an open geodesic ball and their total weight.
#[derive(Debug, Clone, PartialEq)]
pub struct BallMask {
    pub center: SpherePoint,
    pub h: f64,
    /// Row-major node indices with `d(center, x) < h`.
    pub nodes: Vec<usize>,
    pub weights: Vec<f64>,
    pub measure: f64,
}

impl BallMask {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `Σ_B w f`.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&k, w)| w * values[k]).sum()
    }

    /// Node-membership resolution error estimate `|B| / node count`.
    pub fn resolution(&self) -> f64 {
        self.measure / self.nodes.len().max(1) as f64
    }
}

/// Mask of the ball `B(x0, h)` on `grid`; `h >= π` covers the sphere.
pub fn geodesic_ball_measure(grid: &SphereGrid, x0: SpherePoint, h: f64) -> Result<BallMask> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::InvalidGeometry(format!("ball radius h={h} must be positive")));
    }
    let c = x0.to_cartesian();
    let nlon = grid.nlon();
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    for i in 0..grid.nlat() {
        for j in 0..nlon {
            let d = great_circle_distance(&c, &grid.node_cartesian(i, j));
            if h >= PI || d < h {
                nodes.push(i * nlon + j);
                weights.push(grid.weight(i, j));
            }
        }
    }
    if nodes.is_empty() {
        return Err(Error::EmptyBall { h });
    }
    let measure = weights.iter().sum();
    Ok(BallMask {
        center: x0,
        h,
        nodes,
        weights,
        measure,
    })
}

/// `max - min` over the masked nodes.
pub fn oscillation(theta: &GridField, mask: &BallMask) -> Result<f64> {
    if mask.is_empty() {
        return Err(Error::EmptyBall { h: mask.h });
    }
    let v = theta.values();
    let (lo, hi) = mask
        .nodes
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &k| (lo.min(v[k]), hi.max(v[k])));
    Ok(hi - lo)
}

/// A local ball with a forward time window `[t_start, t_start + duration]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalGeometry {
    pub center: SpherePoint,
    pub h: f64,
    pub t_start: f64,
    pub duration: f64,
}

impl LocalGeometry {
    /// The parabolic-scaled cylinder `B(h) × [t*, t* + h]`.
    pub fn cylinder(center: SpherePoint, h: f64, t_start: f64) -> Result<Self> {
        LocalGeometry {
            center,
            h,
            t_start,
            duration: h,
        }
        .validated()
    }

    pub fn validated(self) -> Result<Self> {
        if !(self.h > 0.0 && self.h < PI) {
            return Err(Error::InvalidGeometry(format!("need 0 < h < π, got {}", self.h)));
        }
        if !(self.duration >= 0.0) {
            return Err(Error::InvalidGeometry(format!("negative duration {}", self.duration)));
        }
        Ok(self)
    }

    pub fn t_end(&self) -> f64 {
        self.t_start + self.duration
    }

    pub(crate) fn check_window(&self, traj: &Trajectory) -> Result<()> {
        let (t_min, t_max) = (traj.t_min(), traj.t_max());
        let eps = 1e-12 * t_max.abs().max(1.0);
        if self.t_start < t_min - eps || self.t_end() > t_max + eps {
            return Err(Error::WindowExceeded {
                start: self.t_start,
                end: self.t_end(),
                t_min,
                t_max,
            });
        }
        Ok(())
    }
}

/// Radial cutoff: 1 for `d <= inner`, 0 for `d >= outer`, quintic smoothstep
/// in between (vanishing first and second derivatives at both ends).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothBump {
    pub center: SpherePoint,
    pub inner: f64,
    pub outer: f64,
}

impl SmoothBump {
    /// Plateau at `rho * h`, support in `B(h)`.
    pub fn new(center: SpherePoint, h: f64, rho: f64) -> Result<Self> {
        if !(rho > 0.0 && rho < 1.0) || !(h > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "bump needs 0 < rho < 1 and h > 0, got rho={rho}, h={h}"
            )));
        }
        Ok(SmoothBump {
            center,
            inner: rho * h,
            outer: h,
        })
    }

    /// The cutoff of ladder step `k`: one on `B(h(1+2^{-k-1}))`, supported in
    /// `B(h(1+2^{-k}))`.
    pub fn ladder(center: SpherePoint, h: f64, k: usize) -> Self {
        let s = 0.5f64.powi(k as i32);
        SmoothBump {
            center,
            inner: h * (1.0 + 0.5 * s),
            outer: h * (1.0 + s),
        }
    }

    pub fn value(&self, d: f64) -> f64 {
        if d <= self.inner {
            1.0
        } else if d >= self.outer {
            0.0
        } else {
            let s = (d - self.inner) / (self.outer - self.inner);
            1.0 - s * s * s * (10.0 - 15.0 * s + 6.0 * s * s)
        }
    }

    /// `dη/dd`, which is `-|∇η|`.
    pub fn radial_derivative(&self, d: f64) -> f64 {
        if d <= self.inner || d >= self.outer {
            0.0
        } else {
            let w = self.outer - self.inner;
            let s = (d - self.inner) / w;
            -30.0 * s * s * (1.0 - s) * (1.0 - s) / w
        }
    }

    /// Largest `|∇η|`, attained mid-transition.
    pub fn max_gradient(&self) -> f64 {
        15.0 / (8.0 * (self.outer - self.inner))
    }

    pub fn sample(&self, grid: &Arc<SphereGrid>) -> GridField {
        let c = self.center.to_cartesian();
        GridField::from_cartesian_fn(grid.clone(), |x| self.value(great_circle_distance(&c, x)))
    }

    /// Ambient gradient of `η` at `x`.
    pub fn gradient_at(&self, x: &Vec3) -> Vec3 {
        let c = self.center.to_cartesian();
        distance_gradient(&c, x) * self.radial_derivative(great_circle_distance(&c, x))
    }
}

/// A least-squares modulus fit in log coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModulusFit {
    /// Prefactor `A`.
    pub amplitude: f64,
    /// `β` for the power model, `α` for the logarithmic model.
    pub exponent: f64,
    /// RMS residual in `log osc`.
    pub residual: f64,
    pub points: usize,
}

/// Oscillation over nested cylinders `B(h_j) × [t*, t* + h_j]`, `h_j = h0 c^j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OscillationProfile {
    pub center: SpherePoint,
    pub t_start: f64,
    pub scales: Vec<f64>,
    pub osc: Vec<f64>,
    /// `osc ≈ A h^β`.
    pub power_fit: Option<ModulusFit>,
    /// `osc ≈ A log(1/h)^{-α}`, using scales below 1.
    pub log_fit: Option<ModulusFit>,
    /// Levels dropped because the ball held no nodes.
    pub truncated_levels: usize,
}

impl OscillationProfile {
    /// Oscillation nondecreasing in scale.
    pub fn is_monotone(&self) -> bool {
        // scales decrease with j, so osc must not increase with j
        self.osc.windows(2).all(|w| w[1] <= w[0])
    }
}

fn fit_model(xs: Vec<f64>, ys: Vec<f64>, negate: bool) -> Option<ModulusFit> {
    if xs.len() < 2 {
        return None;
    }
    let (slope, intercept, residual) = least_squares(&xs, &ys);
    Some(ModulusFit {
        amplitude: intercept.exp(),
        exponent: if negate { -slope } else { slope },
        residual,
        points: xs.len(),
    })
}

/// Oscillation profile about `x0` from time `t_start`. Every window must lie
/// inside the trajectory and respect the cadence rule.
pub fn oscillation_profile(
    traj: &Trajectory,
    x0: SpherePoint,
    t_start: f64,
    h0: f64,
    c: f64,
    levels: usize,
) -> Result<OscillationProfile> {
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::InvalidArgument(format!("scale factor c={c} must lie in (0, 1)")));
    }
    let grid = make_grid(traj.lmax);
    oscillation_profile_on(traj, &grid, x0, t_start, h0, c, levels)
}

pub fn oscillation_profile_on(
    traj: &Trajectory,
    grid: &Arc<SphereGrid>,
    x0: SpherePoint,
    t_start: f64,
    h0: f64,
    c: f64,
    levels: usize,
) -> Result<OscillationProfile> {
    LocalGeometry::cylinder(x0, h0, t_start)?.check_window(traj)?;
    let mut masks = Vec::new();
    let mut truncated_levels = 0;
    for j in 0..levels {
        let h = h0 * c.powi(j as i32);
        match geodesic_ball_measure(grid, x0, h) {
            Ok(m) => masks.push(m),
            Err(Error::EmptyBall { .. }) if j > 0 => {
                truncated_levels = levels - j;
                break;
            }
            Err(e) => return Err(e),
        }
    }
    for m in &masks {
        check_cadence(traj, m.h)?;
    }
    let fields: Vec<(f64, GridField)> = traj
        .snapshots
        .iter()
        .filter(|s| s.t >= t_start - 1e-12 && s.t <= t_start + h0 + 1e-12)
        .map(|s| Ok((s.t, sht_inverse(&s.theta, grid)?)))
        .collect::<Result<_>>()?;
    let mut scales = Vec::new();
    let mut osc = Vec::new();
    for m in &masks {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for (t, f) in &fields {
            if *t > t_start + m.h + 1e-12 {
                continue;
            }
            let v = f.values();
            for &k in &m.nodes {
                lo = lo.min(v[k]);
                hi = hi.max(v[k]);
            }
        }
        scales.push(m.h);
        osc.push(if hi >= lo { hi - lo } else { 0.0 });
    }
    let positive: Vec<(f64, f64)> = scales
        .iter()
        .zip(&osc)
        .filter(|(_, o)| **o > 0.0)
        .map(|(h, o)| (*h, *o))
        .collect();
    let power_fit = fit_model(
        positive.iter().map(|p| p.0.ln()).collect(),
        positive.iter().map(|p| p.1.ln()).collect(),
        false,
    );
    let small: Vec<&(f64, f64)> = positive.iter().filter(|p| p.0 < 1.0).collect();
    let log_fit = fit_model(
        small.iter().map(|p| (1.0 / p.0).ln().ln()).collect(),
        small.iter().map(|p| p.1.ln()).collect(),
        true,
    );
    Ok(OscillationProfile {
        center: x0,
        t_start,
        scales,
        osc,
        power_fit,
        log_fit,
        truncated_levels,
    })
}

/// One step of the shrinking-cylinder bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LadderStep {
    pub k: usize,
    pub bump: SmoothBump,
    /// Upper end of the height interval `I(h δ^k) = [0, h δ^k]`.
    pub z_top: f64,
    pub t_start: f64,
    pub t_end: f64,
}

/// Nested geometries around `(center, t*)`: cutoffs supported in
/// `B(h(1+2^{-k}))`, heights `h δ^k` and windows `t* + [-h 2^{-k-1}, h]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CylinderLadder {
    pub center: SpherePoint,
    pub h: f64,
    pub t_star: f64,
    pub delta: f64,
}

impl CylinderLadder {
    pub fn new(center: SpherePoint, h: f64, t_star: f64, delta: f64) -> Result<Self> {
        if !(h > 0.0 && 2.0 * h < PI) {
            return Err(Error::InvalidGeometry(format!("need 0 < 2h < π, got h={h}")));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidArgument(format!("δ={delta} must lie in (0, 1)")));
        }
        Ok(CylinderLadder {
            center,
            h,
            t_star,
            delta,
        })
    }

    pub fn step(&self, k: usize) -> LadderStep {
        LadderStep {
            k,
            bump: SmoothBump::ladder(self.center, self.h, k),
            z_top: self.h * self.delta.powi(k as i32),
            t_start: self.t_star - self.h * 0.5f64.powi(k as i32 + 1),
            t_end: self.t_star + self.h,
        }
    }

    /// The step as a local geometry over its time window.
    pub fn geometry(&self, k: usize) -> Result<LocalGeometry> {
        let st = self.step(k);
        LocalGeometry {
            center: self.center,
            h: self.h,
            t_start: st.t_start,
            duration: st.t_end - st.t_start,
        }
        .validated()
    }
}
