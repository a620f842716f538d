//! Axisymmetric barrier problems `(∂_z² + Δ_g) b = 0` on cylinders
//! `B(R) × I(H)` over geodesic balls, for the round sphere and the flat
//! three-dimensional reference.
//!
//! Coordinates are `(ρ, z)` with `ρ ∈ [0, R]` the geodesic radius and
//! `z ∈ [-H/2, H/2]`. The radial operator is `∂_ρ² + k(ρ)∂_ρ` with
//! `k = cot ρ` on the sphere and `k = 1/ρ` in the flat case.

use std::f64::consts::PI;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extension::least_squares;

/// Default resolution for reference solves.
pub const DEFAULT_RESOLUTION: usize = 256;
/// Normalized residual accepted by the direct solver.
pub const SOLVER_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Sphere,
    Flat,
}

impl Metric {
    fn drift(self, rho: f64) -> f64 {
        match self {
            Metric::Sphere => 1.0 / rho.tan(),
            Metric::Flat => 1.0 / rho,
        }
    }
}

/// Which lemma's geometry the problem encodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BarrierKind {
    /// Side radius `h`, height `h`.
    B1,
    /// Side radius `r`, height `h <= r`.
    B2,
}

/// Sampled Dirichlet data. Corners take the top/bottom values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryData {
    /// At `ρ = R`, indexed by `z` node, length `n_z + 1`.
    pub side: Vec<f64>,
    /// At `z = H/2`, indexed by `ρ` node, length `n_rho + 1`.
    pub top: Vec<f64>,
    /// At `z = -H/2`.
    pub bottom: Vec<f64>,
}

impl BoundaryData {
    /// Zero on top and bottom, one on the side.
    pub fn barrier(n_rho: usize, n_z: usize) -> Self {
        BoundaryData {
            side: vec![1.0; n_z + 1],
            top: vec![0.0; n_rho + 1],
            bottom: vec![0.0; n_rho + 1],
        }
    }

    pub fn constant(n_rho: usize, n_z: usize, c: f64) -> Self {
        BoundaryData {
            side: vec![c; n_z + 1],
            top: vec![c; n_rho + 1],
            bottom: vec![c; n_rho + 1],
        }
    }

    /// Sample `f(ρ, z)` on the boundary of `problem`'s grid.
    pub fn from_fn(problem: &CylinderProblem, f: impl Fn(f64, f64) -> f64) -> Self {
        let (rho, z) = problem.axes();
        let (r, half) = (problem.radius(), 0.5 * problem.h);
        BoundaryData {
            side: z.iter().map(|&z| f(r, z)).collect(),
            top: rho.iter().map(|&p| f(p, half)).collect(),
            bottom: rho.iter().map(|&p| f(p, -half)).collect(),
        }
    }

    fn bounds(&self) -> (f64, f64) {
        self.side
            .iter()
            .chain(&self.top)
            .chain(&self.bottom)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }
}

/// A barrier problem on `B(R) × I(h)` with `I(h) = [-h/2, h/2]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CylinderProblem {
    pub metric: Metric,
    pub kind: BarrierKind,
    pub h: f64,
    /// Side radius for `B2`; ignored for `B1`.
    pub r: f64,
    /// Radius of the region whose sup is reported.
    pub r1: f64,
    pub n_rho: usize,
    pub n_z: usize,
    /// `None` selects the barrier data (0 on top and bottom, 1 on the side).
    pub boundary: Option<BoundaryData>,
}

impl CylinderProblem {
    /// The `b₁` problem at scale `h`, reporting the sup over `ρ <= h/2`.
    pub fn b1(metric: Metric, h: f64, n_rho: usize, n_z: usize) -> Self {
        CylinderProblem {
            metric,
            kind: BarrierKind::B1,
            h,
            r: h,
            r1: 0.5 * h,
            n_rho,
            n_z,
            boundary: None,
        }
    }

    pub fn b2(metric: Metric, r: f64, h: f64, r1: f64, n_rho: usize, n_z: usize) -> Self {
        CylinderProblem {
            metric,
            kind: BarrierKind::B2,
            h,
            r,
            r1,
            n_rho,
            n_z,
            boundary: None,
        }
    }

    pub fn with_boundary(mut self, data: BoundaryData) -> Self {
        self.boundary = Some(data);
        self
    }

    pub fn radius(&self) -> f64 {
        match self.kind {
            BarrierKind::B1 => self.h,
            BarrierKind::B2 => self.r,
        }
    }

    /// Node coordinates `ρ_i` and `z_j`.
    pub fn axes(&self) -> (Vec<f64>, Vec<f64>) {
        let dr = self.radius() / self.n_rho as f64;
        let dz = self.h / self.n_z as f64;
        (
            (0..=self.n_rho).map(|i| i as f64 * dr).collect(),
            (0..=self.n_z).map(|j| -0.5 * self.h + j as f64 * dz).collect(),
        )
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidGeometry(m));
        if !(self.h > 0.0 && self.h.is_finite()) {
            return bad(format!("height h={} must be positive", self.h));
        }
        if self.n_rho < 2 || self.n_z < 2 {
            return bad(format!("resolution {}x{} below 2x2", self.n_rho, self.n_z));
        }
        let radius = self.radius();
        if self.kind == BarrierKind::B2 {
            if !(self.r.is_finite() && self.h <= self.r) {
                return bad(format!("b2 needs h <= r, got h={}, r={}", self.h, self.r));
            }
            if !(self.r1 >= 0.0 && self.r1 < self.r) {
                return bad(format!("b2 needs 0 <= r1 < r, got r1={}, r={}", self.r1, self.r));
            }
        } else if !(self.r1 >= 0.0 && self.r1 <= radius) {
            return bad(format!("r1={} outside [0, {radius}]", self.r1));
        }
        if self.metric == Metric::Sphere && radius >= PI {
            return bad(format!("sphere radius {radius} must be below pi"));
        }
        if let Some(d) = &self.boundary {
            if d.side.len() != self.n_z + 1
                || d.top.len() != self.n_rho + 1
                || d.bottom.len() != self.n_rho + 1
            {
                return bad("boundary data length does not match resolution".into());
            }
            if d.side.iter().chain(&d.top).chain(&d.bottom).any(|v| !v.is_finite()) {
                return bad("boundary data must be finite".into());
            }
        }
        Ok(())
    }
}

/// Grid solution of a barrier problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BarrierSolution {
    pub rho: Vec<f64>,
    pub z: Vec<f64>,
    /// `b(ρ_i, z_j)` at index `i * (n_z + 1) + j`, boundary included.
    pub values: Vec<f64>,
    /// Max-norm of the diagonal-normalized discrete residual.
    pub residual: f64,
    /// Sup over `ρ <= r1`, all `z`.
    pub sup_region: f64,
    pub r1: f64,
}

impl BarrierSolution {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.z.len() + j]
    }

    pub fn sup_within(&self, r1: f64) -> f64 {
        let cut = r1 + 1e-12 * self.rho.last().copied().unwrap_or(1.0);
        let nz = self.z.len();
        self.rho
            .iter()
            .enumerate()
            .filter(|(_, &p)| p <= cut)
            .flat_map(|(i, _)| self.values[i * nz..(i + 1) * nz].iter().copied())
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

// Five-point operator: rows i = 0..n_rho-1, columns j = 1..n_z-1.
struct Stencil {
    n_rho: usize,
    n_z: usize,
    inv_dr2: f64,
    inv_dz2: f64,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Stencil {
    fn new(p: &CylinderProblem) -> Self {
        let dr = p.radius() / p.n_rho as f64;
        let dz = p.h / p.n_z as f64;
        let inv_dr2 = 1.0 / (dr * dr);
        let mut lower = vec![0.0; p.n_rho];
        let mut upper = vec![0.0; p.n_rho];
        // ∂_ρ b = 0 on the axis by even reflection, where k ∂_ρ → ∂_ρ².
        upper[0] = 4.0 * inv_dr2;
        for i in 1..p.n_rho {
            let k = p.metric.drift(i as f64 * dr);
            lower[i] = inv_dr2 - 0.5 * k / dr;
            upper[i] = inv_dr2 + 0.5 * k / dr;
        }
        Stencil {
            n_rho: p.n_rho,
            n_z: p.n_z,
            inv_dr2,
            inv_dz2: 1.0 / (dz * dz),
            lower,
            upper,
        }
    }

    fn radial_diag(&self, i: usize) -> f64 {
        if i == 0 {
            -4.0 * self.inv_dr2
        } else {
            -2.0 * self.inv_dr2
        }
    }

    fn diag(&self, i: usize) -> f64 {
        self.radial_diag(i) - 2.0 * self.inv_dz2
    }

    // (A b)_{ij} on the full grid array.
    fn apply(&self, b: &[f64], i: usize, j: usize) -> f64 {
        let nz = self.n_z + 1;
        let at = |i: usize, j: usize| b[i * nz + j];
        let mut s = self.diag(i) * at(i, j)
            + self.upper[i] * at(i + 1, j)
            + self.inv_dz2 * (at(i, j + 1) + at(i, j - 1));
        if i > 0 {
            s += self.lower[i] * at(i - 1, j);
        }
        s
    }

    fn residual(&self, b: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n_rho {
            for j in 1..self.n_z {
                worst = worst.max((self.apply(b, i, j) / self.diag(i)).abs());
            }
        }
        worst
    }
}

fn initial_grid(p: &CylinderProblem) -> Vec<f64> {
    let data = p
        .boundary
        .clone()
        .unwrap_or_else(|| BoundaryData::barrier(p.n_rho, p.n_z));
    let nz = p.n_z + 1;
    let mut b = vec![0.0; (p.n_rho + 1) * nz];
    for j in 1..p.n_z {
        b[p.n_rho * nz + j] = data.side[j];
    }
    for i in 0..=p.n_rho {
        b[i * nz] = data.bottom[i];
        b[i * nz + p.n_z] = data.top[i];
    }
    b
}

// Sine transform on the interior z nodes: f̂_k = Σ_j sin(π k j / n) f_j.
struct SineTransform {
    n: usize,
    table: Vec<f64>,
}

impl SineTransform {
    fn new(n: usize) -> Self {
        let m = n - 1;
        let mut table = vec![0.0; m * m];
        for k in 0..m {
            for j in 0..m {
                let phase = ((k + 1) * (j + 1)) % (2 * n);
                table[k * m + j] = (PI * phase as f64 / n as f64).sin();
            }
        }
        SineTransform { n, table }
    }

    fn apply(&self, src: &[f64], dst: &mut [f64], scale: f64) {
        let m = self.n - 1;
        for (k, out) in dst.iter_mut().enumerate() {
            let row = &self.table[k * m..(k + 1) * m];
            *out = scale * row.iter().zip(src).map(|(a, b)| a * b).sum::<f64>();
        }
    }
}

// Solve A x = rhs on the interior with homogeneous boundary values; `rhs`
// is indexed [i][j-1] for i < n_rho, 1 <= j < n_z.
fn direct_solve(st: &Stencil, dst: &SineTransform, rhs: &[f64]) -> Vec<f64> {
    let (nr, m) = (st.n_rho, st.n_z - 1);
    let mut hat = vec![0.0; nr * m];
    for i in 0..nr {
        dst.apply(&rhs[i * m..(i + 1) * m], &mut hat[i * m..(i + 1) * m], 1.0);
    }
    let mut cp = vec![0.0; nr];
    let mut dp = vec![0.0; nr];
    for k in 0..m {
        let s = (0.5 * PI * (k + 1) as f64 / st.n_z as f64).sin();
        let mu = -4.0 * s * s * st.inv_dz2;
        // Thomas algorithm along ρ; the side row's upper entry hits the boundary.
        for i in 0..nr {
            let a = if i > 0 { st.lower[i] } else { 0.0 };
            let c = if i + 1 < nr { st.upper[i] } else { 0.0 };
            let d = st.radial_diag(i) + mu;
            let (pc, pd) = if i > 0 { (cp[i - 1], dp[i - 1]) } else { (0.0, 0.0) };
            let den = d - a * pc;
            cp[i] = c / den;
            dp[i] = (hat[i * m + k] - a * pd) / den;
        }
        hat[(nr - 1) * m + k] = dp[nr - 1];
        for i in (0..nr - 1).rev() {
            hat[i * m + k] = dp[i] - cp[i] * hat[(i + 1) * m + k];
        }
    }
    let mut out = vec![0.0; nr * m];
    let scale = 2.0 / st.n_z as f64;
    for i in 0..nr {
        dst.apply(&hat[i * m..(i + 1) * m], &mut out[i * m..(i + 1) * m], scale);
    }
    out
}

fn finish(p: &CylinderProblem, values: Vec<f64>, residual: f64) -> BarrierSolution {
    let (rho, z) = p.axes();
    let mut sol = BarrierSolution {
        rho,
        z,
        values,
        residual,
        sup_region: 0.0,
        r1: p.r1,
    };
    sol.sup_region = sol.sup_within(p.r1);
    sol
}

/// Solve with a sine transform in `z` and a tridiagonal solve per mode,
/// followed by residual-correction passes if the tolerance is missed.
pub fn solve_barrier(p: &CylinderProblem) -> Result<BarrierSolution> {
    p.validate()?;
    let st = Stencil::new(p);
    let dst = SineTransform::new(p.n_z);
    let mut b = initial_grid(p);
    let (nr, nz, m) = (p.n_rho, p.n_z + 1, p.n_z - 1);
    // Interior starts at zero, so -A b is the boundary forcing.
    let mut residual = f64::INFINITY;
    for _ in 0..4 {
        let mut rhs = vec![0.0; nr * m];
        for i in 0..nr {
            for j in 1..p.n_z {
                rhs[i * m + j - 1] = -st.apply(&b, i, j);
            }
        }
        let corr = direct_solve(&st, &dst, &rhs);
        for i in 0..nr {
            for j in 1..p.n_z {
                b[i * nz + j] += corr[i * m + j - 1];
            }
        }
        residual = st.residual(&b);
        if !residual.is_finite() {
            break;
        }
        if residual <= SOLVER_TOLERANCE {
            return Ok(finish(p, b, residual));
        }
    }
    Err(Error::NonConvergence {
        residual,
        iterations: 4,
    })
}

/// Successive over-relaxation, kept as an independent cross-check of the
/// direct solver. `omega = None` picks `2 / (1 + sin(π / n))`.
pub fn solve_barrier_sor(
    p: &CylinderProblem,
    omega: Option<f64>,
    tolerance: f64,
    max_sweeps: usize,
) -> Result<BarrierSolution> {
    p.validate()?;
    let st = Stencil::new(p);
    let n = p.n_rho.max(p.n_z) as f64;
    let omega = omega.unwrap_or(2.0 / (1.0 + (PI / n).sin()));
    if !(omega > 0.0 && omega < 2.0) {
        return Err(Error::InvalidArgument(format!("SOR factor {omega} outside (0, 2)")));
    }
    let mut b = initial_grid(p);
    let nz = p.n_z + 1;
    let mut residual = st.residual(&b);
    let mut sweeps = 0;
    while residual > tolerance {
        if sweeps == max_sweeps {
            return Err(Error::NonConvergence {
                residual,
                iterations: sweeps,
            });
        }
        for i in 0..p.n_rho {
            for j in 1..p.n_z {
                let r = st.apply(&b, i, j);
                b[i * nz + j] -= omega * r / st.diag(i);
            }
        }
        sweeps += 1;
        if sweeps % 10 == 0 || sweeps == max_sweeps {
            residual = st.residual(&b);
        }
    }
    Ok(finish(p, b, residual))
}

/// Bounds of the boundary data, for maximum-principle checks.
pub fn boundary_bounds(p: &CylinderProblem) -> (f64, f64) {
    p.boundary
        .clone()
        .unwrap_or_else(|| BoundaryData::barrier(p.n_rho, p.n_z))
        .bounds()
}

/// The flat scale-one `b₁` constant `δ` with the resolution it was computed at.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlatDelta {
    pub delta: f64,
    pub n_rho: usize,
    pub n_z: usize,
}

/// `sup_{ρ <= 1/2} b` for the flat `b₁` problem on `B(1) × I(1)`.
pub fn flat_delta_at(n: usize) -> Result<FlatDelta> {
    let sol = solve_barrier(&CylinderProblem::b1(Metric::Flat, 1.0, n, n))?;
    Ok(FlatDelta {
        delta: sol.sup_region,
        n_rho: n,
        n_z: n,
    })
}

/// Cached `δ` at the default resolution.
pub fn flat_delta() -> Result<FlatDelta> {
    static CACHE: OnceLock<FlatDelta> = OnceLock::new();
    if let Some(d) = CACHE.get() {
        return Ok(*d);
    }
    let d = flat_delta_at(DEFAULT_RESOLUTION)?;
    Ok(*CACHE.get_or_init(|| d))
}

// Map `f` over `items` using scoped threads, preserving order.
fn par_map<T: Sync, U: Send>(items: &[T], f: impl Fn(&T) -> U + Sync) -> Vec<U> {
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get());
    if threads <= 1 || items.len() <= 1 {
        return items.iter().map(f).collect();
    }
    let chunk = items.len().div_ceil(threads);
    std::thread::scope(|s| {
        let handles: Vec<_> = items
            .chunks(chunk)
            .map(|c| {
                let f = &f;
                s.spawn(move || c.iter().map(f).collect::<Vec<U>>())
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("sweep worker panicked"))
            .collect()
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct B1Row {
    pub h: f64,
    pub sup: f64,
    /// `sup - δ`.
    pub excess: f64,
    pub residual: f64,
}

/// Sphere `b₁` sweep against the flat constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct B1Sweep {
    pub delta: f64,
    pub rows: Vec<B1Row>,
    /// Least-squares slope and intercept of `sup - δ` against `h`.
    pub slope: f64,
    pub intercept: f64,
    pub fit_rms: f64,
    /// `max(slope, 0)`, the constant used in `sup <= δ + C h`.
    pub c_fit: f64,
    /// Smallest `C >= 0` with `sup <= δ + C h` on every row.
    pub c_envelope: f64,
    pub all_below_one: bool,
    /// `sup <= δ + c_fit h` on every row and every `sup < 1`.
    pub holds: bool,
    pub increasing_in_h: bool,
}

pub fn b1_scale_sweep(h_list: &[f64]) -> Result<B1Sweep> {
    b1_scale_sweep_at(h_list, DEFAULT_RESOLUTION)
}

pub fn b1_scale_sweep_at(h_list: &[f64], n: usize) -> Result<B1Sweep> {
    if h_list.is_empty() || h_list.iter().any(|&h| !(h > 0.0 && h.is_finite())) {
        return Err(Error::InvalidGeometry("h list must be nonempty and positive".into()));
    }
    let delta = if n == DEFAULT_RESOLUTION {
        flat_delta()?.delta
    } else {
        flat_delta_at(n)?.delta
    };
    let sols = par_map(h_list, |&h| solve_barrier(&CylinderProblem::b1(Metric::Sphere, h, n, n)));
    let mut rows = Vec::with_capacity(h_list.len());
    for (&h, sol) in h_list.iter().zip(sols) {
        let sol = sol?;
        rows.push(B1Row {
            h,
            sup: sol.sup_region,
            excess: sol.sup_region - delta,
            residual: sol.residual,
        });
    }
    let hs: Vec<f64> = rows.iter().map(|r| r.h).collect();
    let ex: Vec<f64> = rows.iter().map(|r| r.excess).collect();
    let (slope, intercept, fit_rms) = if rows.len() >= 2 {
        least_squares(&hs, &ex)
    } else {
        (ex[0] / hs[0], 0.0, 0.0)
    };
    let c_fit = slope.max(0.0);
    let c_envelope = rows.iter().map(|r| r.excess / r.h).fold(0.0, f64::max);
    let all_below_one = rows.iter().all(|r| r.sup < 1.0);
    let slack = 1e-12;
    let holds = all_below_one && rows.iter().all(|r| r.sup <= delta + c_fit * r.h + slack);
    let mut order: Vec<&B1Row> = rows.iter().collect();
    order.sort_by(|a, b| a.h.total_cmp(&b.h));
    let increasing_in_h = order.windows(2).all(|w| w[1].sup >= w[0].sup);
    Ok(B1Sweep {
        delta,
        rows,
        slope,
        intercept,
        fit_rms,
        c_fit,
        c_envelope,
        all_below_one,
        holds,
        increasing_in_h,
    })
}

/// The bound shape `h r^{N-2} / (r - r1)^{N-1} + r` with `N = 3`.
pub fn b2_bound_shape(r: f64, h: f64, r1: f64) -> f64 {
    h * r / ((r - r1) * (r - r1)) + r
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct B2Check {
    pub r: f64,
    pub h: f64,
    pub r1: f64,
    pub sup: f64,
    pub min: f64,
    pub max: f64,
    pub shape: f64,
    /// `sup / shape`.
    pub ratio: f64,
}

pub fn b2_bound_check(r: f64, h: f64, r1: f64) -> Result<B2Check> {
    b2_bound_check_at(r, h, r1, DEFAULT_RESOLUTION, DEFAULT_RESOLUTION)
}

pub fn b2_bound_check_at(r: f64, h: f64, r1: f64, n_rho: usize, n_z: usize) -> Result<B2Check> {
    let sol = solve_barrier(&CylinderProblem::b2(Metric::Sphere, r, h, r1, n_rho, n_z))?;
    let shape = b2_bound_shape(r, h, r1);
    Ok(B2Check {
        r,
        h,
        r1,
        sup: sol.sup_region,
        min: sol.min(),
        max: sol.max(),
        shape,
        ratio: sol.sup_region / shape,
    })
}

/// A battery of `b₂` checks with the empirical constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct B2Battery {
    pub rows: Vec<B2Check>,
    /// Largest ratio over the battery.
    pub c_empirical: f64,
    /// `0 <= b₂ <= 1` on every solve.
    pub within_unit: bool,
}

/// Configurations `r ∈ {0.2, 0.5, 1}`, `h ∈ {r/4, r}`, `r1 ∈ {r/4, r/2, 0.9r}`.
pub fn default_b2_configs() -> Vec<(f64, f64, f64)> {
    let mut out = Vec::new();
    for r in [0.2, 0.5, 1.0] {
        for h in [0.25 * r, r] {
            for f in [0.25, 0.5, 0.9] {
                out.push((r, h, f * r));
            }
        }
    }
    out
}

pub fn b2_battery(configs: &[(f64, f64, f64)], n_rho: usize, n_z: usize) -> Result<B2Battery> {
    let rows = par_map(configs, |&(r, h, r1)| b2_bound_check_at(r, h, r1, n_rho, n_z))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let c_empirical = rows.iter().map(|c| c.ratio).fold(0.0, f64::max);
    let within_unit = rows.iter().all(|c| c.min >= 0.0 && c.max <= 1.0 + 1e-8);
    Ok(B2Battery {
        rows,
        c_empirical,
        within_unit,
    })
}
