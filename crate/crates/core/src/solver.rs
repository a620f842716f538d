//! Galerkin time stepping for `θ_t + u·∇θ = -κ Λ^α θ`, `u = ∇⊥Λ^{-1}θ`.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harmonics::transform::{synthesize, Synthesis};
use crate::harmonics::{gauss_legendre, make_grid, sht_forward, GridField, SpectralField, SphereGrid};
use crate::operators::{advection, lambda_power, lambda_symbol, seminorm_sq, velocity_on};
use crate::sphere::{great_circle_distance, SpherePoint};

/// Named initial data; generated fields are mean-zero with unit `L²` norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialCondition {
    /// Gaussian coefficients with standard deviation `1/(l+1)`.
    Random,
    /// An axisymmetric band centred at colatitude π/3.
    ZonalJet,
    /// A Gaussian bump around a point away from the poles.
    RotatedBump,
    /// Explicit coefficients, used after removing the mean.
    #[serde(skip)]
    Spectral(SpectralField),
}

/// Whether the advection term is evolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dynamics {
    #[default]
    Full,
    /// Velocity forced to zero.
    PureDiffusion,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub lmax: usize,
    pub alpha: f64,
    pub kappa: f64,
    /// Requested step; defaults to `0.5 / λ_max^α`.
    pub dt: Option<f64>,
    pub t_end: f64,
    pub snapshot_every: usize,
    pub initial_condition: InitialCondition,
    pub seed: u64,
    pub dynamics: Dynamics,
}

impl SimConfig {
    pub fn new(lmax: usize, t_end: f64, initial_condition: InitialCondition) -> Self {
        SimConfig {
            lmax,
            alpha: 1.0,
            kappa: 1.0,
            dt: None,
            t_end,
            snapshot_every: 1,
            initial_condition,
            seed: 0,
            dynamics: Dynamics::Full,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.lmax < 1 {
            return bad("L must be at least 1".into());
        }
        if !(self.alpha > 0.0 && self.alpha <= 2.0) {
            return bad(format!("alpha={} must lie in (0, 2]", self.alpha));
        }
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return bad(format!("kappa={} must be positive", self.kappa));
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return bad(format!("dt={dt} must be positive"));
            }
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return bad(format!("t_end={} must be >= 0", self.t_end));
        }
        if self.snapshot_every == 0 {
            return bad("snapshot_every must be at least 1".into());
        }
        if let InitialCondition::Spectral(f) = &self.initial_condition {
            if f.lmax() > self.lmax {
                return bad(format!("initial field has degree {} > L={}", f.lmax(), self.lmax));
            }
        }
        Ok(())
    }

    /// `0.5 / λ_max^α`, `λ_max = sqrt(L(L+1))`.
    pub fn default_dt(&self) -> f64 {
        0.5 / lambda_symbol(self.lmax, self.alpha)
    }

    /// Step count and the uniform step that lands exactly on `t_end`.
    pub fn schedule(&self) -> (usize, f64) {
        let target = self.dt.unwrap_or_else(|| self.default_dt());
        if self.t_end == 0.0 {
            return (0, target);
        }
        let n = ((self.t_end / target) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        (n, self.t_end / n as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimState {
    pub t: f64,
    pub theta: SpectralField,
}

/// Per-step record of the energy balance.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EnergyLedger {
    pub kappa: f64,
    pub alpha: f64,
    pub times: Vec<f64>,
    /// `‖θ(t)‖²`.
    pub l2_energy: Vec<f64>,
    /// `∫_0^t ‖Λ^{α/2}θ‖²`.
    pub dissipation_integral: Vec<f64>,
    /// Grid sup-norm of `θ(t)`.
    pub linf: Vec<f64>,
}

impl EnergyLedger {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Snapshots of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub lmax: usize,
    pub alpha: f64,
    pub kappa: f64,
    pub dt: f64,
    pub snapshots: Vec<SimState>,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.t).collect()
    }

    pub fn t_min(&self) -> f64 {
        self.snapshots.first().map_or(0.0, |s| s.t)
    }

    pub fn t_max(&self) -> f64 {
        self.snapshots.last().map_or(0.0, |s| s.t)
    }

    /// Largest gap between consecutive snapshot times.
    pub fn cadence(&self) -> f64 {
        self.snapshots
            .windows(2)
            .map(|w| w[1].t - w[0].t)
            .fold(0.0, f64::max)
    }
}

fn normalize_mean_zero(mut f: SpectralField) -> SpectralField {
    f.set(0, 0, 0.0).expect("mean index exists");
    let n = f.norm();
    if n > 0.0 {
        f.scaled(1.0 / n)
    } else {
        f
    }
}

fn project_profile(lmax: usize, profile: impl Fn(SpherePoint) -> f64) -> SpectralField {
    let grid = make_grid(lmax);
    let g = GridField::from_fn(grid, profile);
    sht_forward(&g).expect("standard grid resolves its degree")
}

/// Build the initial coefficients.
pub fn initial_field(config: &SimConfig) -> Result<SpectralField> {
    let lmax = config.lmax;
    Ok(match &config.initial_condition {
        InitialCondition::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            let mut c = vec![0.0; (lmax + 1) * (lmax + 1)];
            for l in 1..=lmax {
                for v in &mut c[l * l..(l + 1) * (l + 1)] {
                    let g: f64 = rng.sample(StandardNormal);
                    *v = g / (l + 1) as f64;
                }
            }
            normalize_mean_zero(SpectralField::from_coeffs(lmax, c)?)
        }
        InitialCondition::ZonalJet => {
            let mut f = project_profile(lmax, |p| {
                let d = (p.colat - std::f64::consts::FRAC_PI_3) / 0.3;
                (-d * d).exp()
            });
            // keep the m = 0 column only
            for l in 1..=lmax {
                for m in 1..=l as i64 {
                    f.set(l, m, 0.0)?;
                    f.set(l, -m, 0.0)?;
                }
            }
            normalize_mean_zero(f)
        }
        InitialCondition::RotatedBump => {
            let c = SpherePoint::new(1.0, 0.7).to_cartesian();
            normalize_mean_zero(project_profile(lmax, |p| {
                let d = great_circle_distance(&c, &p.to_cartesian());
                (-d * d / (2.0 * 0.35 * 0.35)).exp()
            }))
        }
        InitialCondition::Spectral(f) => {
            let mut g = f.resized(lmax);
            g.set(0, 0, 0.0)?;
            g
        }
    })
}

/// Integrating-factor RK4 stepper with an exact-for-diffusion energy ledger.
#[derive(Debug, Clone)]
pub struct Simulation {
    config: SimConfig,
    grid: Arc<SphereGrid>,
    dt: f64,
    steps_total: usize,
    steps_done: usize,
    state: SimState,
    // κ λ_l^α and λ_l^α per degree
    rate: Vec<f64>,
    symbol: Vec<f64>,
    half: Vec<f64>,
    full: Vec<f64>,
    nonlinear: SpectralField,
    ledger: EnergyLedger,
    gauss: (Vec<f64>, Vec<f64>),
}

impl Simulation {
    pub fn new(config: SimConfig) -> Result<Self> {
        config.validate()?;
        let theta = initial_field(&config)?;
        Simulation::from_state(config, SimState { t: 0.0, theta })
    }

    /// Start from an explicit state; its mean must vanish.
    pub fn from_state(config: SimConfig, state: SimState) -> Result<Self> {
        config.validate()?;
        let lmax = config.lmax;
        let grid = make_grid(lmax);
        let (steps_total, dt) = config.schedule();
        let symbol: Vec<f64> = (0..=lmax).map(|l| lambda_symbol(l, config.alpha)).collect();
        let rate: Vec<f64> = symbol.iter().map(|s| config.kappa * s).collect();
        let half = rate.iter().map(|r| (-0.5 * r * dt).exp()).collect();
        let full = rate.iter().map(|r| (-r * dt).exp()).collect();
        let theta = state.theta.resized(lmax);
        let mut sim = Simulation {
            grid,
            dt,
            steps_total,
            steps_done: 0,
            rate,
            symbol,
            half,
            full,
            nonlinear: SpectralField::zeros(lmax),
            ledger: EnergyLedger {
                kappa: config.kappa,
                alpha: config.alpha,
                ..Default::default()
            },
            gauss: gauss_legendre(8),
            state: SimState { t: state.t, theta },
            config,
        };
        sim.nonlinear = sim.nonlinear_term(&sim.state.theta)?;
        sim.record(0.0)?;
        Ok(sim)
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn grid(&self) -> &Arc<SphereGrid> {
        &self.grid
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn state(&self) -> &SimState {
        &self.state
    }

    pub fn ledger(&self) -> &EnergyLedger {
        &self.ledger
    }

    pub fn steps_total(&self) -> usize {
        self.steps_total
    }

    pub fn steps_done(&self) -> usize {
        self.steps_done
    }

    pub fn is_finished(&self) -> bool {
        self.steps_done >= self.steps_total
    }

    /// `-P(u·∇θ)`, or zero without advection.
    pub fn nonlinear_term(&self, theta: &SpectralField) -> Result<SpectralField> {
        match self.config.dynamics {
            Dynamics::PureDiffusion => Ok(SpectralField::zeros(self.config.lmax)),
            Dynamics::Full => {
                let u = velocity_on(theta, &self.grid)?;
                Ok(advection(&u, theta, self.config.lmax)?.scaled(-1.0))
            }
        }
    }

    /// Full time derivative `-P(u·∇θ) - κΛ^α θ`.
    pub fn rhs(&self, theta: &SpectralField) -> Result<SpectralField> {
        let n = self.nonlinear_term(theta)?;
        Ok(n.axpy(-self.config.kappa, &lambda_power(theta, self.config.alpha)))
    }

    fn apply(&self, table: &[f64], f: &SpectralField) -> SpectralField {
        f.map_degree(|l| table[l])
    }

    /// Advance one step of size [`Simulation::dt`].
    pub fn step(&mut self) -> Result<()> {
        let dt = self.dt;
        let th = &self.state.theta;
        let k1 = self.nonlinear.clone();
        let k2 = self.nonlinear_term(&self.apply(&self.half, &th.axpy(0.5 * dt, &k1)))?;
        let k3 = self.nonlinear_term(&self.apply(&self.half, th).axpy(0.5 * dt, &k2))?;
        let k4 = self.nonlinear_term(
            &self
                .apply(&self.full, th)
                .axpy(dt, &self.apply(&self.half, &k3)),
        )?;
        let inc = self
            .apply(&self.full, &k1)
            .axpy(2.0, &self.apply(&self.half, &k2.axpy(1.0, &k3)))
            .axpy(1.0, &k4);
        let next = self.apply(&self.full, th).axpy(dt / 6.0, &inc);
        let t_next = if self.steps_done + 1 == self.steps_total {
            self.config.t_end
        } else {
            self.state.t + dt
        };
        if !next.is_finite() {
            return Err(Error::NonFiniteState { t: t_next });
        }
        let n_next = self.nonlinear_term(&next)?;
        let diss = self.step_dissipation(&self.state.theta, &self.nonlinear, &next, &n_next);
        self.state = SimState {
            t: t_next,
            theta: next,
        };
        self.nonlinear = n_next;
        self.steps_done += 1;
        self.record(diss)?;
        Ok(())
    }

    // ∫ over the step of ‖Λ^{α/2}θ‖², with θ(s) = e^{-κλ s} g(s) and g the
    // cubic Hermite interpolant of the integrating-factor variable.
    fn step_dissipation(
        &self,
        a: &SpectralField,
        na: &SpectralField,
        b: &SpectralField,
        nb: &SpectralField,
    ) -> f64 {
        let dt = self.dt;
        let (x, w) = &self.gauss;
        let (ca, cna, cb, cnb) = (a.coeffs(), na.coeffs(), b.coeffs(), nb.coeffs());
        let mut total = 0.0;
        for l in 1..=self.config.lmax {
            let r = self.rate[l];
            let ef = (r * dt).exp();
            let mut acc = 0.0;
            for (xi, wi) in x.iter().zip(w) {
                let tau = 0.5 * (1.0 + xi);
                let s = tau * dt;
                let h00 = (1.0 + 2.0 * tau) * (1.0 - tau) * (1.0 - tau);
                let h10 = tau * (1.0 - tau) * (1.0 - tau);
                let h01 = tau * tau * (3.0 - 2.0 * tau);
                let h11 = tau * tau * (tau - 1.0);
                let decay = (-r * s).exp();
                let mut sq = 0.0;
                for k in l * l..(l + 1) * (l + 1) {
                    let g0 = ca[k];
                    let g1 = cb[k] * ef;
                    let d0 = cna[k];
                    let d1 = cnb[k] * ef;
                    let g = h00 * g0 + h10 * dt * d0 + h01 * g1 + h11 * dt * d1;
                    let th = decay * g;
                    sq += th * th;
                }
                acc += 0.5 * dt * wi * sq;
            }
            total += self.symbol[l] * acc;
        }
        total
    }

    fn record(&mut self, dissipated: f64) -> Result<()> {
        let th = &self.state.theta;
        let vals = synthesize(th, &self.grid, Synthesis::Value)?;
        let linf = vals.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
        let prev = self.ledger.dissipation_integral.last().copied().unwrap_or(0.0);
        self.ledger.times.push(self.state.t);
        self.ledger.l2_energy.push(th.norm_sq());
        self.ledger.dissipation_integral.push(prev + dissipated);
        self.ledger.linf.push(linf);
        Ok(())
    }
}

/// Run to `t_end`, keeping every `snapshot_every`-th state and the final one.
pub fn run(config: &SimConfig) -> Result<(Trajectory, EnergyLedger)> {
    let mut sim = Simulation::new(config.clone())?;
    let mut snapshots = vec![sim.state().clone()];
    while !sim.is_finished() {
        sim.step()?;
        if sim.steps_done() % config.snapshot_every == 0 || sim.is_finished() {
            snapshots.push(sim.state().clone());
        }
    }
    let traj = Trajectory {
        lmax: config.lmax,
        alpha: config.alpha,
        kappa: config.kappa,
        dt: sim.dt(),
        snapshots,
    };
    Ok((traj, sim.ledger().clone()))
}

/// Final state only.
pub fn run_final(config: &SimConfig) -> Result<SimState> {
    let mut sim = Simulation::new(config.clone())?;
    while !sim.is_finished() {
        sim.step()?;
    }
    Ok(sim.state().clone())
}

/// `‖θ_dt − θ_{dt/2}‖ / ‖θ_{dt/2} − θ_{dt/4}‖` at `t_end`; about 16 for a
/// fourth-order scheme.
pub fn richardson_ratio(config: &SimConfig, dt: f64) -> Result<f64> {
    let at = |h: f64| {
        let mut c = config.clone();
        c.dt = Some(h);
        run_final(&c)
    };
    let a = at(dt)?;
    let b = at(dt / 2.0)?;
    let c = at(dt / 4.0)?;
    let e1 = a.theta.axpy(-1.0, &b.theta).norm();
    let e2 = b.theta.axpy(-1.0, &c.theta).norm();
    Ok(e1 / e2)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyMarginReport {
    /// `‖θ0‖² − ‖θ(T)‖² − 2κ∫‖Λ^{α/2}θ‖²` at every recorded `T`.
    pub margins: Vec<f64>,
    pub min_margin: f64,
    pub initial_energy: f64,
    /// `min_margin >= -1e-6 ‖θ0‖²`.
    pub holds: bool,
}

pub fn energy_inequality_check(ledger: &EnergyLedger) -> EnergyMarginReport {
    let e0 = ledger.l2_energy.first().copied().unwrap_or(0.0);
    let margins: Vec<f64> = ledger
        .l2_energy
        .iter()
        .zip(&ledger.dissipation_integral)
        .map(|(e, d)| e0 - e - 2.0 * ledger.kappa * d)
        .collect();
    let min_margin = margins.iter().copied().fold(f64::INFINITY, f64::min);
    let min_margin = if margins.is_empty() { 0.0 } else { min_margin };
    EnergyMarginReport {
        holds: min_margin >= -1e-6 * e0,
        margins,
        min_margin,
        initial_energy: e0,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinfReport {
    pub t0: f64,
    /// `sup_{t >= t0} ‖θ(t)‖_∞` over the samples.
    pub sup_after_t0: f64,
    /// Largest increase between consecutive samples (negative if strictly decreasing).
    pub max_increase: f64,
    pub finite: bool,
    /// Nonincreasing within `1e-6`.
    pub nonincreasing: bool,
}

pub fn linf_decay_check(ledger: &EnergyLedger, t0: f64) -> Result<LinfReport> {
    let t_max = ledger.times.last().copied().unwrap_or(0.0);
    if !(t0 > 0.0 && t0 <= t_max) {
        return Err(Error::InvalidArgument(format!(
            "t0={t0} must lie in (0, {t_max}]"
        )));
    }
    let sup_after_t0 = ledger
        .times
        .iter()
        .zip(&ledger.linf)
        .filter(|(t, _)| **t >= t0)
        .map(|(_, v)| *v)
        .fold(0.0, f64::max);
    let max_increase = ledger
        .linf
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::NEG_INFINITY, f64::max);
    let max_increase = if ledger.linf.len() < 2 { 0.0 } else { max_increase };
    Ok(LinfReport {
        t0,
        sup_after_t0,
        max_increase,
        finite: sup_after_t0.is_finite(),
        nonincreasing: max_increase <= 1e-6,
    })
}

/// `⟨θ, rhs(θ)⟩ + κ‖Λ^{α/2}θ‖²`, which vanishes by transport cancellation.
pub fn transport_defect(sim: &Simulation, theta: &SpectralField) -> Result<f64> {
    let r = sim.rhs(theta)?;
    Ok(theta.dot(&r) + sim.config().kappa * seminorm_sq(theta, sim.config().alpha))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harmonics::BasisIndex;

    fn y10(lmax: usize) -> SpectralField {
        SpectralField::basis(lmax, BasisIndex::new(1, 0).unwrap()).unwrap()
    }

    #[test]
    fn schedule_lands_on_t_end() {
        let mut c = SimConfig::new(8, 1.0, InitialCondition::Random);
        c.dt = Some(0.3);
        let (n, dt) = c.schedule();
        assert_eq!(n, 4);
        assert!((dt * n as f64 - 1.0).abs() < 1e-15);
        c.t_end = 0.0;
        assert_eq!(c.schedule().0, 0);
    }

    #[test]
    fn initial_conditions_are_normalized() {
        for ic in [InitialCondition::Random, InitialCondition::ZonalJet, InitialCondition::RotatedBump] {
            let f = initial_field(&SimConfig::new(12, 1.0, ic)).unwrap();
            assert_eq!(f.get(0, 0), 0.0);
            assert!((f.norm() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn zonal_state_has_no_advection() {
        let mut c = SimConfig::new(6, 0.1, InitialCondition::Spectral(y10(6)));
        c.kappa = 1.0;
        let sim = Simulation::new(c).unwrap();
        let r = sim.rhs(&y10(6)).unwrap();
        let expect = y10(6).scaled(-(2f64.sqrt()));
        assert!(r.max_abs_diff(&expect) < 1e-13);
    }

    #[test]
    fn pure_diffusion_step_is_exact() {
        let mut c = SimConfig::new(6, 0.1, InitialCondition::Spectral(y10(6)));
        c.dynamics = Dynamics::PureDiffusion;
        c.dt = Some(0.1);
        let mut sim = Simulation::new(c).unwrap();
        sim.step().unwrap();
        let exact = (-(2f64.sqrt()) * 0.1).exp();
        assert_eq!(sim.state().theta.get(1, 0), exact);
    }

    #[test]
    fn zero_length_run() {
        let c = SimConfig::new(4, 0.0, InitialCondition::RotatedBump);
        let (traj, ledger) = run(&c).unwrap();
        assert_eq!(traj.snapshots.len(), 1);
        assert_eq!(ledger.len(), 1);
        assert_eq!(energy_inequality_check(&ledger).min_margin, 0.0);
    }

    #[test]
    fn invalid_config_rejected() {
        let mut c = SimConfig::new(4, 1.0, InitialCondition::Random);
        c.snapshot_every = 0;
        assert!(Simulation::new(c).is_err());
    }
}
