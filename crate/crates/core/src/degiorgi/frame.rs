use std::sync::Arc;

use super::geometry::geodesic_ball_measure;
use crate::error::{Error, Result};
use crate::harmonics::{sht_inverse, GridField, SpectralField, SphereGrid};
use crate::operators::{inverse_lambda, velocity_at, VectorGridField};
use crate::solver::Trajectory;
use crate::sphere::{axis_angle, reorthonormalize, Rotation, SpherePoint, Vec3};

/// A time-dependent scalar with its transporting velocity.
pub trait FlowSource {
    fn time_range(&self) -> (f64, f64);

    /// Tangent velocities at the given points.
    fn velocities(&self, t: f64, points: &[Vec3]) -> Vec<Vec3>;

    fn scalars(&self, t: f64, points: &[Vec3]) -> Vec<f64>;

    /// The scalar on `grid`, if it can be produced without resampling.
    fn grid_scalar(&self, _t: f64, _grid: &Arc<SphereGrid>) -> Option<GridField> {
        None
    }
}

/// Snapshots interpolated linearly in time; velocities from `∇⊥Λ^{-1}θ`.
#[derive(Debug, Clone)]
pub struct TrajectoryFlow {
    times: Vec<f64>,
    theta: Vec<SpectralField>,
    psi: Vec<SpectralField>,
}

impl TrajectoryFlow {
    pub fn new(traj: &Trajectory) -> Result<Self> {
        if traj.snapshots.is_empty() {
            return Err(Error::InvalidArgument("trajectory has no snapshots".into()));
        }
        Ok(TrajectoryFlow {
            times: traj.times(),
            theta: traj.snapshots.iter().map(|s| s.theta.clone()).collect(),
            psi: traj
                .snapshots
                .iter()
                .map(|s| inverse_lambda(&s.theta))
                .collect::<Result<_>>()?,
        })
    }

    // Bracketing index and weight of the later snapshot.
    fn bracket(&self, t: f64) -> (usize, f64) {
        let n = self.times.len();
        match self.times.iter().position(|&s| s >= t) {
            None => (n - 1, 0.0),
            Some(j) if self.times[j] == t || j == 0 => (j, 0.0),
            Some(j) => {
                let (a, b) = (self.times[j - 1], self.times[j]);
                (j - 1, (t - a) / (b - a))
            }
        }
    }

    fn blend(fields: &[SpectralField], j: usize, w: f64) -> SpectralField {
        if w == 0.0 {
            fields[j].clone()
        } else {
            fields[j].scaled(1.0 - w).axpy(w, &fields[j + 1])
        }
    }
}

impl FlowSource for TrajectoryFlow {
    fn time_range(&self) -> (f64, f64) {
        (self.times[0], *self.times.last().expect("nonempty"))
    }

    fn velocities(&self, t: f64, points: &[Vec3]) -> Vec<Vec3> {
        let (j, w) = self.bracket(t);
        let psi = Self::blend(&self.psi, j, w);
        points
            .iter()
            .map(|x| velocity_at(&psi, SpherePoint::from_cartesian(x)))
            .collect()
    }

    fn scalars(&self, t: f64, points: &[Vec3]) -> Vec<f64> {
        let (j, w) = self.bracket(t);
        let th = Self::blend(&self.theta, j, w);
        points
            .iter()
            .map(|x| th.evaluate(SpherePoint::from_cartesian(x)))
            .collect()
    }

    fn grid_scalar(&self, t: f64, grid: &Arc<SphereGrid>) -> Option<GridField> {
        let (j, w) = self.bracket(t);
        if w == 0.0 && self.times[j] == t {
            sht_inverse(&self.theta[j], grid).ok()
        } else {
            None
        }
    }
}

/// Rotations `R_s` that follow the ball-averaged flow around `x0`.
#[derive(Debug, Clone)]
pub struct RotationFrame {
    pub x0: SpherePoint,
    pub h: f64,
    pub t0: f64,
    pub s: Vec<f64>,
    pub rotations: Vec<Rotation>,
    /// Angular velocity vectors `ω_s`, with `Ṙ_s = [ω_s]_× R_s`.
    pub omegas: Vec<Vec3>,
    ball_points: Vec<Vec3>,
    ball_weights: Vec<f64>,
}

struct Ball<'a> {
    points: &'a [Vec3],
    weights: &'a [f64],
    measure: f64,
    x0: Vec3,
}

// Angular velocity whose induced field matches the ball average of the
// tangential velocity at the rotated centre.
fn generator(src: &dyn FlowSource, ball: &Ball, t: f64, r: &Rotation) -> Vec3 {
    let moved: Vec<Vec3> = ball.points.iter().map(|p| r * p).collect();
    let u = src.velocities(t, &moved);
    let mut ubar = Vec3::zeros();
    let mut xbar = Vec3::zeros();
    for ((w, ui), xi) in ball.weights.iter().zip(&u).zip(&moved) {
        ubar += ui * *w;
        xbar += xi * *w;
    }
    ubar /= ball.measure;
    xbar /= ball.measure;
    let c = r * ball.x0;
    let tangent = ubar - c * ubar.dot(&c);
    c.cross(&tangent) / xbar.dot(&c)
}

fn rotate_by(omega: &Vec3, dt: f64) -> Rotation {
    let n = omega.norm();
    if n == 0.0 {
        Rotation::identity()
    } else {
        axis_angle(omega, n * dt)
    }
}

/// Integrate the frame over `s ∈ [0, s_end]` in `n_steps` midpoint steps.
pub fn comoving_frame(
    source: &dyn FlowSource,
    grid: &SphereGrid,
    x0: SpherePoint,
    h: f64,
    t0: f64,
    s_end: f64,
    n_steps: usize,
) -> Result<RotationFrame> {
    let (t_min, t_max) = source.time_range();
    let eps = 1e-12 * t_max.abs().max(1.0);
    if t0 < t_min - eps || t0 + s_end > t_max + eps || s_end < 0.0 {
        return Err(Error::WindowExceeded {
            start: t0,
            end: t0 + s_end,
            t_min,
            t_max,
        });
    }
    let mask = geodesic_ball_measure(grid, x0, h)?;
    let nlon = grid.nlon();
    let ball_points: Vec<Vec3> = mask
        .nodes
        .iter()
        .map(|&k| grid.node_cartesian(k / nlon, k % nlon))
        .collect();
    let ball = Ball {
        points: &ball_points,
        weights: &mask.weights,
        measure: mask.measure,
        x0: x0.to_cartesian(),
    };
    let n = n_steps.max(1);
    let ds = s_end / n as f64;
    let mut r = Rotation::identity();
    let mut s = vec![0.0];
    let mut rotations = vec![r];
    let mut omegas = vec![generator(source, &ball, t0, &r)];
    if s_end > 0.0 {
        for i in 0..n {
            let si = i as f64 * ds;
            let w1 = omegas[i];
            let r_mid = rotate_by(&w1, 0.5 * ds) * r;
            let w2 = generator(source, &ball, t0 + si + 0.5 * ds, &r_mid);
            r = reorthonormalize(&(rotate_by(&w2, ds) * r));
            let s_next = if i + 1 == n { s_end } else { si + ds };
            s.push(s_next);
            rotations.push(r);
            omegas.push(generator(source, &ball, t0 + s_next, &r));
        }
    }
    Ok(RotationFrame {
        x0,
        h,
        t0,
        s,
        rotations,
        omegas,
        ball_weights: mask.weights,
        ball_points,
    })
}

impl RotationFrame {
    /// Velocity of the frame at its centre, `ω × R_s x0`.
    pub fn center_velocity(&self, i: usize) -> Vec3 {
        self.omegas[i].cross(&(self.rotations[i] * self.x0.to_cartesian()))
    }

    /// `F(s_i, x) = θ(R_{s_i} x, t0 + s_i)` on `grid`.
    pub fn comoving_field(
        &self,
        source: &dyn FlowSource,
        grid: &Arc<SphereGrid>,
        i: usize,
    ) -> Result<GridField> {
        let t = self.t0 + self.s[i];
        let r = &self.rotations[i];
        if *r == Rotation::identity() {
            if let Some(g) = source.grid_scalar(t, grid) {
                return Ok(g);
            }
        }
        let pts: Vec<Vec3> = grid.points().map(|p| r * p.to_cartesian()).collect();
        GridField::new(grid.clone(), source.scalars(t, &pts))
    }

    /// Pulled-back residual drift `v = R^T (u(R x) - ω × R x)` on `grid`.
    pub fn residual_velocity(
        &self,
        source: &dyn FlowSource,
        grid: &Arc<SphereGrid>,
        i: usize,
    ) -> Result<VectorGridField> {
        let t = self.t0 + self.s[i];
        let r = &self.rotations[i];
        let w = &self.omegas[i];
        let pts: Vec<Vec3> = grid.points().map(|p| r * p.to_cartesian()).collect();
        let u = source.velocities(t, &pts);
        let mut uc = Vec::with_capacity(pts.len());
        let mut ul = Vec::with_capacity(pts.len());
        for ((p, x), ui) in grid.points().zip(&pts).zip(&u) {
            let v = r.transpose() * (ui - w.cross(x));
            let (ec, el) = p.frame();
            uc.push(v.dot(&ec));
            ul.push(v.dot(&el));
        }
        VectorGridField::new(grid.clone(), uc, ul)
    }

    /// Ball average of the residual drift, projected to the tangent plane at `x0`.
    pub fn ball_average_residual(&self, source: &dyn FlowSource, i: usize) -> Vec3 {
        let t = self.t0 + self.s[i];
        let r = &self.rotations[i];
        let w = &self.omegas[i];
        let moved: Vec<Vec3> = self.ball_points.iter().map(|p| r * p).collect();
        let u = source.velocities(t, &moved);
        let mut acc = Vec3::zeros();
        let mut m = 0.0;
        for ((x, ui), wi) in moved.iter().zip(&u).zip(&self.ball_weights) {
            acc += r.transpose() * (ui - w.cross(x)) * *wi;
            m += wi;
        }
        acc /= m;
        let c = self.x0.to_cartesian();
        acc - c * acc.dot(&c)
    }
}
