use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::{self, DiagSection, SimSection};
use super::snapshot::{read_snapshot, write_snapshot};
use super::{CliError, CommonArgs};
use crate::barriers::{b1_scale_sweep_at, b2_battery, flat_delta_at, B1Sweep, B2Battery};
use crate::degiorgi::{
    check_cadence, degiorgi_sets, drift_hypothesis_check, geodesic_ball_measure,
    global_energy_sequence, isoperimetric_check, local_energy_residual, oscillation_profile,
    recurrence_fit, CylinderSamples, LocalEnergyReport, LocalGeometry, ModulusFit, SmoothBump,
    TruncationLadder,
};
use crate::error::Error;
use crate::harmonics::{make_grid, sht_inverse};
use crate::solver::{run, EnergyLedger, Trajectory};

/// Provenance record written next to every run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub format_version: u32,
    pub crate_version: String,
    pub config_sha256: String,
    pub seed: u64,
    pub sim: SimSection,
    pub dt: f64,
    pub steps: usize,
    pub snapshots: Vec<SnapshotEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotEntry {
    pub file: String,
    pub t: f64,
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Compute(format!("{}: {e}", path.display()))
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| io_err(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("report serializes");
    text.push('\n');
    write_file(path, text)
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>, CliError> {
    csv::Writer::from_path(path).map_err(|e| CliError::Compute(format!("{}: {e}", path.display())))
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> CliError + '_ {
    move |e| CliError::Compute(format!("{}: {e}", path.display()))
}

fn num(v: f64) -> String {
    format!("{v:e}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Input(format!("{}: {e}", dir.display())))
}

pub fn write_ledger(path: &Path, ledger: &EnergyLedger) -> Result<(), CliError> {
    let mut w = csv_writer(path)?;
    let err = csv_err(path);
    w.write_record(["t", "l2_energy", "dissipation_integral", "linf"]).map_err(&err)?;
    for i in 0..ledger.len() {
        w.write_record([
            num(ledger.times[i]),
            num(ledger.l2_energy[i]),
            num(ledger.dissipation_integral[i]),
            num(ledger.linf[i]),
        ])
        .map_err(&err)?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub fn simulate(args: &CommonArgs) -> Result<(), CliError> {
    let (file, bytes) = config::load(&args.config)?;
    let mut sim = file
        .sim
        .ok_or_else(|| CliError::Input("config has no [sim] section".into()))?;
    let config = sim.to_config(args.seed)?;
    sim.seed = config.seed;
    let out = args.out_dir()?;
    let snap_dir = out.join("snapshots");
    create_dir(&snap_dir)?;

    let (traj, ledger) = run(&config)?;
    let mut entries = Vec::with_capacity(traj.snapshots.len());
    for (i, s) in traj.snapshots.iter().enumerate() {
        let name = format!("snapshots/snap_{i:06}.txt");
        write_file(&out.join(&name), write_snapshot(s, config.alpha, config.kappa))?;
        entries.push(SnapshotEntry { file: name, t: s.t });
    }
    write_ledger(&out.join("ledger.csv"), &ledger)?;
    let manifest = RunManifest {
        format_version: super::snapshot::FORMAT_VERSION,
        crate_version: env!("CARGO_PKG_VERSION").to_string(),
        config_sha256: hex::encode(Sha256::digest(&bytes)),
        seed: config.seed,
        sim,
        dt: traj.dt,
        steps: config.schedule().0,
        snapshots: entries,
    };
    write_json(&out.join("manifest.json"), &manifest)
}

/// Load a run directory written by `simulate`.
pub fn load_run(dir: &Path) -> Result<(RunManifest, Trajectory), CliError> {
    let path = dir.join("manifest.json");
    let text = fs::read_to_string(&path)
        .map_err(|e| CliError::Input(format!("run directory {} has no manifest: {e}", dir.display())))?;
    let manifest: RunManifest = serde_json::from_str(&text)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    if manifest.snapshots.is_empty() {
        return Err(CliError::Input(format!("run directory {} lists no snapshots", dir.display())));
    }
    let mut snapshots = Vec::with_capacity(manifest.snapshots.len());
    for entry in &manifest.snapshots {
        let p: PathBuf = dir.join(&entry.file);
        let text = fs::read_to_string(&p).map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?;
        let (_, state) = read_snapshot(&text).map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?;
        snapshots.push(state);
    }
    let traj = Trajectory {
        lmax: manifest.sim.lmax,
        alpha: manifest.sim.alpha,
        kappa: manifest.sim.kappa,
        dt: manifest.dt,
        snapshots,
    };
    Ok((manifest, traj))
}

#[derive(Debug, Serialize)]
struct LocalEnergyFile {
    center: [f64; 2],
    h: f64,
    t_start: f64,
    t_end: f64,
    bump_inner: f64,
    bump_outer: f64,
    z0: f64,
    reports: Vec<LocalEnergyReport>,
}

#[derive(Debug, Serialize)]
struct DriftFile {
    n: usize,
    h: f64,
    t_start: f64,
    t_end: f64,
    constant: f64,
}

#[derive(Debug, Serialize)]
struct RecurrenceFile {
    cap: f64,
    t0: f64,
    epsilon: f64,
    c_prime: Option<f64>,
    all_finite: bool,
}

fn write_fit_cells(fit: &Option<ModulusFit>) -> [String; 3] {
    match fit {
        Some(f) => [num(f.amplitude), num(f.exponent), num(f.residual)],
        None => Default::default(),
    }
}

pub fn diagnose(args: &CommonArgs) -> Result<(), CliError> {
    let (file, _) = config::load(&args.config)?;
    let dir = args.out_dir()?;
    let (_, traj) = load_run(&dir)?;
    let diag: DiagSection = file.diag;
    diag.validate(traj.t_max())?;
    let t0 = diag.t0_or(traj.t_max());
    let x0 = diag.center();
    let h = diag.h0;
    check_cadence(&traj, h)?;

    let grid = make_grid(traj.lmax);
    let mut sup = 0.0f64;
    for s in &traj.snapshots {
        sup = sup.max(sht_inverse(&s.theta, &grid)?.sup_norm());
    }
    let cap = diag.trunc_c.unwrap_or(0.5 * sup);
    if !(cap > 0.0) {
        return Err(CliError::Input("trajectory vanishes; set diag.trunc_C".into()));
    }

    // Truncation energies and the recurrence.
    let ladder = TruncationLadder::new(cap, t0, diag.kmax)?;
    let seq = global_energy_sequence(&traj, &ladder)?;
    let fit = match recurrence_fit(&seq.energies, 2) {
        Ok(f) => Some(f),
        Err(Error::NothingToFit) => None,
        Err(e) => return Err(e.into()),
    };
    let path = dir.join("energies.csv");
    let mut w = csv_writer(&path)?;
    let err = csv_err(&path);
    w.write_record(["k", "level", "T_k", "E_k", "ratio"]).map_err(&err)?;
    for k in 0..seq.energies.len() {
        let ratio = fit
            .as_ref()
            .and_then(|f| f.ratios.iter().find(|r| r.0 == k).map(|r| r.1));
        w.write_record([
            k.to_string(),
            num(seq.levels[k]),
            num(seq.times[k]),
            num(seq.energies[k]),
            opt(ratio),
        ])
        .map_err(&err)?;
    }
    w.flush().map_err(|e| io_err(&path, e))?;
    write_json(
        &dir.join("recurrence.json"),
        &RecurrenceFile {
            cap,
            t0,
            epsilon: 0.5,
            c_prime: fit.as_ref().map(|f| f.c_prime),
            all_finite: fit.as_ref().is_none_or(|f| f.all_finite),
        },
    )?;

    // Oscillation decay over nested cylinders.
    let prof = oscillation_profile(&traj, x0, t0, h, diag.scale_factor, diag.levels)?;
    let path = dir.join("oscillation.csv");
    let mut w = csv_writer(&path)?;
    let err = csv_err(&path);
    w.write_record([
        "h",
        "osc",
        "power_amplitude",
        "power_exponent",
        "power_residual",
        "log_amplitude",
        "log_exponent",
        "log_residual",
    ])
    .map_err(&err)?;
    let pcells = write_fit_cells(&prof.power_fit);
    let lcells = write_fit_cells(&prof.log_fit);
    for (hj, o) in prof.scales.iter().zip(&prof.osc) {
        let mut row = vec![num(*hj), num(*o)];
        row.extend(pcells.iter().cloned());
        row.extend(lcells.iter().cloned());
        w.write_record(&row).map_err(&err)?;
    }
    w.flush().map_err(|e| io_err(&path, e))?;

    // Level-set measures of the extension on B(h) × [0, h].
    let mask = geodesic_ball_measure(&grid, x0, h)?;
    let path = dir.join("sets.csv");
    let mut w = csv_writer(&path)?;
    let err = csv_err(&path);
    w.write_record(["t", "A", "B", "C", "K", "ratio"]).map_err(&err)?;
    for s in traj.snapshots.iter().filter(|s| s.t >= t0 - 1e-12 && s.t <= t0 + h + 1e-12) {
        let samples = CylinderSamples::from_extension(&s.theta, &grid, &mask, diag.n_z)?;
        let sets = degiorgi_sets(&samples, None)?;
        let ratio = isoperimetric_check(&sets, h, 2)?;
        w.write_record([num(s.t), num(sets.a), num(sets.b), num(sets.c), num(sets.k), num(ratio)])
            .map_err(&err)?;
    }
    w.flush().map_err(|e| io_err(&path, e))?;

    // Local energy inequality along the level ladder.
    let geom = LocalGeometry::cylinder(x0, h, t0)?;
    let bump = SmoothBump::new(x0, h, 0.5)?;
    let reports = (0..=diag.kmax)
        .map(|k| local_energy_residual(&traj, &geom, &bump, ladder.level(k), h, diag.n_z))
        .collect::<Result<Vec<_>, _>>()?;
    write_json(
        &dir.join("local_energy.json"),
        &LocalEnergyFile {
            center: [x0.colat, x0.lon],
            h,
            t_start: t0,
            t_end: geom.t_end(),
            bump_inner: bump.inner,
            bump_outer: bump.outer,
            z0: h,
            reports,
        },
    )?;
    write_json(
        &dir.join("drift_check.json"),
        &DriftFile {
            n: 2,
            h,
            t_start: t0,
            t_end: geom.t_end(),
            constant: drift_hypothesis_check(&traj, &geom, 2)?,
        },
    )
}

#[derive(Debug, Serialize)]
struct DeltaFile {
    delta: f64,
    n_rho: usize,
    n_z: usize,
    delta_refined: f64,
    refined_resolution: usize,
    refinement_change: f64,
}

pub fn write_b1_sweep(path: &Path, sweep: &B1Sweep) -> Result<(), CliError> {
    let mut w = csv_writer(path)?;
    let err = csv_err(path);
    w.write_record(["h", "sup", "excess", "residual", "delta", "slope", "intercept", "c_fit", "c_envelope"])
        .map_err(&err)?;
    for r in &sweep.rows {
        w.write_record([
            num(r.h),
            num(r.sup),
            num(r.excess),
            num(r.residual),
            num(sweep.delta),
            num(sweep.slope),
            num(sweep.intercept),
            num(sweep.c_fit),
            num(sweep.c_envelope),
        ])
        .map_err(&err)?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub fn write_b2_sweep(path: &Path, battery: &B2Battery) -> Result<(), CliError> {
    let mut w = csv_writer(path)?;
    let err = csv_err(path);
    w.write_record(["r", "h", "r1", "sup", "min", "max", "shape", "ratio"]).map_err(&err)?;
    for c in &battery.rows {
        w.write_record([c.r, c.h, c.r1, c.sup, c.min, c.max, c.shape, c.ratio].map(num))
            .map_err(&err)?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub fn barriers(args: &CommonArgs) -> Result<(), CliError> {
    let (file, _) = config::load(&args.config)?;
    let b = file.barrier;
    let out = args.out_dir()?;
    create_dir(&out)?;
    let n = b.n_rho.max(b.n_z);
    let delta = flat_delta_at(n)?;
    let refined = flat_delta_at(2 * n)?;
    write_json(
        &out.join("delta.json"),
        &DeltaFile {
            delta: delta.delta,
            n_rho: delta.n_rho,
            n_z: delta.n_z,
            delta_refined: refined.delta,
            refined_resolution: 2 * n,
            refinement_change: (refined.delta - delta.delta).abs(),
        },
    )?;
    let sweep = b1_scale_sweep_at(&b.h_list, n)?;
    write_b1_sweep(&out.join("b1_sweep.csv"), &sweep)?;
    let battery = b2_battery(&b.b2_configs(), b.n_rho, b.n_z)?;
    write_b2_sweep(&out.join("b2_sweep.csv"), &battery)
}
