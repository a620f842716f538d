use std::path::Path;

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::solver::{Dynamics, InitialCondition, SimConfig};
use crate::sphere::SpherePoint;

/// A run configuration file with `[sim]`, `[diag]` and `[barrier]` tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfigFile {
    pub sim: Option<SimSection>,
    #[serde(default)]
    pub diag: DiagSection,
    #[serde(default)]
    pub barrier: BarrierSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    #[serde(rename = "L")]
    pub lmax: usize,
    #[serde(default = "one")]
    pub alpha: f64,
    #[serde(default = "one")]
    pub kappa: f64,
    #[serde(default)]
    pub dt: Option<f64>,
    pub t_end: f64,
    pub snapshot_every: usize,
    pub ic: InitialCondition,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub dynamics: Dynamics,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointSpec {
    pub colat: f64,
    pub lon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiagSection {
    pub x0: PointSpec,
    pub h0: f64,
    pub scale_factor: f64,
    pub levels: usize,
    /// Start of the local windows and end of the truncation time ladder;
    /// defaults to `t_end / 2`.
    pub t0: Option<f64>,
    /// Truncation cap; defaults to half the largest recorded sup-norm.
    #[serde(rename = "trunc_C")]
    pub trunc_c: Option<f64>,
    pub kmax: usize,
    /// Height cutoff and Gauss points for extension integrals.
    pub n_z: usize,
}

impl Default for DiagSection {
    fn default() -> Self {
        DiagSection {
            x0: PointSpec { colat: 1.2, lon: 0.4 },
            h0: 0.4,
            scale_factor: 0.5,
            levels: 5,
            t0: None,
            trunc_c: None,
            kmax: 6,
            n_z: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BarrierSection {
    pub h_list: Vec<f64>,
    /// Side radii for the `b₂` sweep.
    pub r: Vec<f64>,
    /// Evaluation radii for the `b₂` sweep; each must be below every `r`.
    pub r1: Vec<f64>,
    pub n_rho: usize,
    pub n_z: usize,
}

impl Default for BarrierSection {
    fn default() -> Self {
        BarrierSection {
            h_list: vec![0.05, 0.1, 0.2, 0.4],
            r: vec![0.4, 0.8],
            r1: vec![0.1, 0.2, 0.3],
            n_rho: 256,
            n_z: 256,
        }
    }
}

impl BarrierSection {
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Input(m));
        if self.h_list.is_empty() || self.h_list.iter().any(|&h| !(h > 0.0 && h < 1.0)) {
            return bad("barrier.h_list must be nonempty with entries in (0, 1)".into());
        }
        if self.r.iter().any(|&r| !(r > 0.0 && r < std::f64::consts::PI)) {
            return bad("barrier.r entries must lie in (0, pi)".into());
        }
        for &r in &self.r {
            for &r1 in &self.r1 {
                if !(r1 >= 0.0 && r1 < r) {
                    return bad(format!("barrier.r1 = {r1} must satisfy 0 <= r1 < r = {r}"));
                }
            }
        }
        if self.n_rho < 8 || self.n_z < 8 {
            return bad("barrier.n_rho and barrier.n_z must be at least 8".into());
        }
        Ok(())
    }

    /// `(r, h, r1)` for every `h ∈ h_list` with `h <= r`.
    pub fn b2_configs(&self) -> Vec<(f64, f64, f64)> {
        let mut out = Vec::new();
        for &r in &self.r {
            for &h in self.h_list.iter().filter(|&&h| h <= r) {
                for &r1 in &self.r1 {
                    out.push((r, h, r1));
                }
            }
        }
        out
    }
}

impl SimSection {
    pub fn to_config(&self, seed_override: Option<u64>) -> Result<SimConfig, CliError> {
        let config = SimConfig {
            lmax: self.lmax,
            alpha: self.alpha,
            kappa: self.kappa,
            dt: self.dt,
            t_end: self.t_end,
            snapshot_every: self.snapshot_every,
            initial_condition: self.ic.clone(),
            seed: seed_override.unwrap_or(self.seed),
            dynamics: self.dynamics,
        };
        config.validate().map_err(|e| CliError::Input(format!("[sim]: {e}")))?;
        Ok(config)
    }
}

impl DiagSection {
    pub fn center(&self) -> SpherePoint {
        SpherePoint::new(self.x0.colat, self.x0.lon)
    }

    pub fn validate(&self, t_max: f64) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Input(m));
        if !(self.x0.colat >= 0.0 && self.x0.colat <= std::f64::consts::PI) {
            return bad(format!("diag.x0.colat = {} outside [0, pi]", self.x0.colat));
        }
        if !(self.h0 > 0.0 && self.h0 < std::f64::consts::PI) {
            return bad(format!("diag.h0 = {} outside (0, pi)", self.h0));
        }
        if !(self.scale_factor > 0.0 && self.scale_factor < 1.0) {
            return bad(format!("diag.scale_factor = {} outside (0, 1)", self.scale_factor));
        }
        if self.levels == 0 || self.n_z == 0 {
            return bad("diag.levels and diag.n_z must be positive".into());
        }
        let t0 = self.t0_or(t_max);
        if !(t0 > 0.0 && t0 + self.h0 <= t_max * (1.0 + 1e-12)) {
            return bad(format!(
                "diag.t0 = {t0} needs 0 < t0 and t0 + h0 <= {t_max} (run end)"
            ));
        }
        if let Some(c) = self.trunc_c {
            if !(c > 0.0 && c.is_finite()) {
                return bad(format!("diag.trunc_C = {c} must be positive"));
            }
        }
        Ok(())
    }

    pub fn t0_or(&self, t_max: f64) -> f64 {
        self.t0.unwrap_or(0.5 * t_max)
    }
}

pub fn load(path: &Path) -> Result<(RunConfigFile, Vec<u8>), CliError> {
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::Input(format!("cannot read config {}: {e}", path.display())))?;
    let text = std::str::from_utf8(&bytes)
        .map_err(|e| CliError::Input(format!("config is not UTF-8: {e}")))?;
    let file: RunConfigFile = toml::from_str(text)
        .map_err(|e| CliError::Input(format!("config {}: {e}", path.display())))?;
    file.barrier.validate()?;
    if let Some(sim) = &file.sim {
        sim.to_config(None)?;
    }
    Ok((file, bytes))
}
