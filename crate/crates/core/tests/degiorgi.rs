use std::f64::consts::PI;
use std::sync::Arc;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sqg_sphere::degiorgi::{
    check_cadence, comoving_frame, degiorgi_sets, drift_constant, drift_hypothesis_check,
    geodesic_ball_measure, global_energy_sequence, isoperimetric_check, local_energy_residual,
    oscillation, oscillation_profile, recurrence_fit, truncate, CylinderLadder, CylinderSamples,
    FlowSource, LocalGeometry, SmoothBump, TrajectoryFlow, TruncationLadder,
};
use sqg_sphere::harmonics::{coeff_count, make_grid, sht_inverse, BasisIndex, GridField, SpectralField, SphereGrid};
use sqg_sphere::operators::velocity_from_theta;
use sqg_sphere::solver::{run, Dynamics, InitialCondition, SimConfig, SimState, Trajectory};
use sqg_sphere::sphere::{SpherePoint, Vec3};
use sqg_sphere::Error;

fn y(lmax: usize, l: i64, m: i64) -> SpectralField {
    SpectralField::basis(lmax, BasisIndex::new(l, m).unwrap()).unwrap()
}

fn random_field(lmax: usize, seed: u64) -> SpectralField {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let mut c: Vec<f64> = (0..coeff_count(lmax)).map(|_| r.random_range(-1.0..1.0)).collect();
    c[0] = 0.0;
    SpectralField::from_coeffs(lmax, c).unwrap()
}

fn random_run(lmax: usize, t_end: f64, dt: f64, seed: u64) -> Trajectory {
    let mut c = SimConfig::new(lmax, t_end, InitialCondition::Random);
    c.seed = seed;
    c.dt = Some(dt);
    run(&c).unwrap().0
}

// Steady trajectory made of one field repeated at the given times.
fn steady(theta: &SpectralField, times: &[f64]) -> Trajectory {
    Trajectory {
        lmax: theta.lmax(),
        alpha: 1.0,
        kappa: 1.0,
        dt: times[1] - times[0],
        snapshots: times.iter().map(|&t| SimState { t, theta: theta.clone() }).collect(),
    }
}

#[test]
fn truncation_examples() {
    let grid = make_grid(8);
    let f = sht_inverse(&random_field(8, 1), &grid).unwrap();
    let low = truncate(&f, f.min() - 1.0);
    assert!(low.zip_with(&f, |a, b| a - (b - f.min() + 1.0)).sup_norm() < 1e-14);
    assert_eq!(truncate(&f, f.max()).sup_norm(), 0.0);
}

#[test]
fn ladder_energy_examples() {
    let mut config = SimConfig::new(16, 1.0, InitialCondition::Random);
    config.seed = 5;
    config.dt = Some(0.01);
    let (traj, ledger) = run(&config).unwrap();
    let sup = ledger.linf.iter().copied().fold(0.0, f64::max);

    let seq = global_energy_sequence(&traj, &TruncationLadder::new(2.0 * sup, 0.5, 5).unwrap()).unwrap();
    assert!(seq.energies[1..].iter().all(|&e| e == 0.0));
    // E_0 against ‖θ0‖² plus the ledger's dissipation budget
    let budget = ledger.l2_energy[0] + 2.0 * ledger.dissipation_integral.last().unwrap();
    assert!(seq.energies[0] <= budget * (1.0 + 1e-9), "{} > {budget}", seq.energies[0]);
    assert!(seq.energies.windows(2).all(|w| w[1] <= w[0]));
    assert!(seq.energies.iter().all(|&e| e >= 0.0));

    let short = TruncationLadder::new(sup, 2.0, 3).unwrap();
    assert!(matches!(global_energy_sequence(&traj, &short), Err(Error::WindowExceeded { .. })));
}

#[test]
fn geometric_sequence_has_constant_ratio() {
    let eps = 0.5;
    let delta = 2f64.powf(-(2.0 * eps + 1.0) / eps);
    let e: Vec<f64> = (0..8).map(|k| 0.7 * delta.powi(k)).collect();
    let fit = recurrence_fit(&e, 2).unwrap();
    assert_eq!(fit.ratios.len(), 7);
    let r0 = fit.ratios[0].1;
    for (_, r) in &fit.ratios {
        assert!((r - r0).abs() <= 1e-12 * r0);
    }
    assert!(fit.all_finite && fit.c_prime == fit.ratios.iter().map(|r| r.1).fold(0.0, f64::max));
    assert!(matches!(recurrence_fit(&[0.0, 0.0], 2), Err(Error::NothingToFit)));
}

#[test]
fn ball_measure_examples() {
    let grid = make_grid(32);
    let tol = 4.0 * PI / grid.nlat() as f64;
    let full = geodesic_ball_measure(&grid, SpherePoint::new(0.3, 0.2), PI).unwrap();
    assert!((full.measure - 4.0 * PI).abs() < 1e-12);
    let half = geodesic_ball_measure(&grid, SpherePoint::NORTH_POLE, PI / 2.0).unwrap();
    assert!((half.measure - 2.0 * PI).abs() <= tol);
    let cap = geodesic_ball_measure(&grid, SpherePoint::new(1.0, 1.0), 0.3).unwrap();
    assert!((cap.measure - 2.0 * PI * (1.0 - 0.3f64.cos())).abs() <= tol);
    assert!(matches!(geodesic_ball_measure(&grid, SpherePoint::NORTH_POLE, 1e-4), Err(Error::EmptyBall { .. })));
}

#[test]
fn oscillation_examples() {
    let grid = make_grid(32);
    let x0 = SpherePoint::new(1.0, 0.5);
    let mask = geodesic_ball_measure(&grid, x0, PI).unwrap();
    assert_eq!(oscillation(&GridField::constant(grid.clone(), 3.0), &mask).unwrap(), 0.0);
    let f = sht_inverse(&y(32, 1, 0), &grid).unwrap();
    let exact = 2.0 * (3.0 / (4.0 * PI)).sqrt();
    // extreme nodes sit one Gauss spacing from the poles
    let c1 = grid.colatitudes()[0];
    assert!((oscillation(&f, &mask).unwrap() - exact).abs() <= exact * (1.0 - c1.cos()) + 1e-12);
    let small = geodesic_ball_measure(&grid, x0, 0.4).unwrap();
    assert!(oscillation(&f, &small).unwrap() <= oscillation(&f, &mask).unwrap());
}

#[test]
fn profile_of_steady_constant_is_zero() {
    let mut c = SpectralField::zeros(16);
    c.set(0, 0, 1.0).unwrap();
    let times: Vec<f64> = (0..=40).map(|i| i as f64 * 0.01).collect();
    let traj = steady(&c, &times);
    let p = oscillation_profile(&traj, SpherePoint::new(1.0, 1.0), 0.0, 0.4, 0.5, 3).unwrap();
    assert!(p.osc.iter().all(|&o| o.abs() < 1e-14));
    assert!(p.power_fit.is_none() && p.log_fit.is_none());
}

#[test]
fn pure_diffusion_profile() {
    let mut config = SimConfig::new(12, 1.0, InitialCondition::Spectral(y(12, 5, 3)));
    config.dynamics = Dynamics::PureDiffusion;
    config.dt = Some(0.005);
    let (traj, _) = run(&config).unwrap();
    let x0 = SpherePoint::new(1.2, 0.3);
    let early = oscillation_profile(&traj, x0, 0.1, 0.4, 0.5, 4).unwrap();
    let late = oscillation_profile(&traj, x0, 0.5, 0.4, 0.5, 4).unwrap();
    assert!(early.is_monotone() && late.is_monotone());
    for (a, b) in early.osc.iter().zip(&late.osc) {
        assert!(b < a);
    }
    assert!(early.power_fit.is_some() && early.log_fit.is_some());
}

#[test]
fn profile_respects_cadence_and_window() {
    let traj = random_run(8, 0.5, 0.05, 1);
    let x0 = SpherePoint::new(1.0, 1.0);
    assert!(matches!(
        oscillation_profile(&traj, x0, 0.0, 0.2, 0.5, 2),
        Err(Error::CadenceViolation { .. })
    ));
    assert!(check_cadence(&traj, 0.4).is_ok());
    assert!(matches!(
        oscillation_profile(&traj, x0, 0.3, 0.4, 0.5, 1),
        Err(Error::WindowExceeded { .. })
    ));
}

#[test]
fn local_energy_vanishes_above_the_local_maximum() {
    let traj = random_run(12, 1.0, 0.01, 2);
    let x0 = SpherePoint::new(1.0, 1.0);
    let geom = LocalGeometry::cylinder(x0, 0.5, 0.2).unwrap();
    let bump = SmoothBump::new(x0, 0.5, 0.5).unwrap();
    let r = local_energy_residual(&traj, &geom, &bump, 100.0, 0.5, 6).unwrap();
    assert_eq!((r.lhs, r.rhs), (0.0, 0.0));
    assert!(r.minimal_constant.is_none());
}

#[test]
fn local_energy_on_pure_diffusion() {
    let mut config = SimConfig::new(12, 2.5, InitialCondition::RotatedBump);
    config.dynamics = Dynamics::PureDiffusion;
    config.dt = Some(0.02);
    let (traj, _) = run(&config).unwrap();
    let x0 = SpherePoint::new(1.0, 0.7);
    let geom = LocalGeometry::cylinder(x0, 1.0, 0.5).unwrap();
    let bump = SmoothBump::new(x0, 1.0, 0.5).unwrap();
    let r = local_energy_residual(&traj, &geom, &bump, 0.0, 1.0, 6).unwrap();
    let c = r.minimal_constant.unwrap();
    assert!(c.is_finite() && c > 0.0);
    assert!(r.holds_with(c * (1.0 + 1e-12)));
    assert!(r.terms.iter().all(|t| *t >= 0.0));
}

#[test]
fn plateau_widening_on_fixed_run() {
    let traj = random_run(16, 1.0, 0.01, 3);
    let x0 = SpherePoint::new(1.2, 0.4);
    let geom = LocalGeometry::cylinder(x0, 0.6, 0.2).unwrap();
    let narrow = SmoothBump::new(x0, 0.6, 0.25).unwrap();
    let wide = SmoothBump::new(x0, 0.6, 0.5).unwrap();
    let a = local_energy_residual(&traj, &geom, &narrow, 0.0, 0.6, 6).unwrap();
    let b = local_energy_residual(&traj, &geom, &wide, 0.0, 0.6, 6).unwrap();
    // a wider plateau dominates the narrow cutoff pointwise, so both sides grow
    assert!(b.lhs >= a.lhs && b.rhs >= a.rhs);
    assert!(a.lhs > 0.0);
}

#[test]
fn drift_examples() {
    let grid = make_grid(16);
    let x0 = SpherePoint::new(1.0, 0.2);
    let times: Vec<f64> = (0..=20).map(|i| i as f64 * 0.02).collect();
    let zero = steady(&SpectralField::zeros(16), &times);
    let geom = LocalGeometry::cylinder(x0, 0.4, 0.0).unwrap();
    assert_eq!(drift_hypothesis_check(&zero, &geom, 2).unwrap(), 0.0);

    let theta = y(16, 1, 0);
    let traj = steady(&theta, &times);
    let measured = drift_hypothesis_check(&traj, &geom, 2).unwrap();
    // |u| = sqrt(3/(4π)) sin(colat) / √2 for θ = Y_1^0
    let amp = (3.0 / (4.0 * PI)).sqrt() / 2f64.sqrt();
    let mask = geodesic_ball_measure(&grid, x0, 0.4).unwrap();
    let nlon = grid.nlon();
    let direct: f64 = mask
        .nodes
        .iter()
        .zip(&mask.weights)
        .map(|(&k, w)| w * (amp * grid.node(k / nlon, k % nlon).colat.sin()).powi(4))
        .sum::<f64>()
        / 0.16;
    assert!((measured - direct).abs() <= 1e-12 * direct.max(1.0));
    let u = velocity_from_theta(&theta).unwrap();
    assert!((drift_constant(&[u], &mask, 2) - direct).abs() <= 1e-12);

    let fine = make_grid(96);
    let constant = |h: f64| {
        let m = geodesic_ball_measure(&fine, x0, h).unwrap();
        let u = sqg_sphere::operators::velocity_on(&theta.resized(96), &fine).unwrap();
        drift_constant(&[u], &m, 2)
    };
    let ratio = constant(0.2) / constant(0.4);
    assert!(ratio > 0.75 && ratio < 1.33, "{ratio}");
}

#[test]
fn set_examples() {
    let grid = make_grid(32);
    let x0 = SpherePoint::new(1.0, 1.0);
    let mask = geodesic_ball_measure(&grid, x0, 0.4).unwrap();
    let neg = CylinderSamples::from_fn(&grid, &mask, 8, |_, _| (-1.0, 0.0));
    let s = degiorgi_sets(&neg, Some(0.5)).unwrap();
    assert!((s.a - s.total).abs() < 1e-14 && s.b == 0.0 && s.c == 0.0);
    assert_eq!(isoperimetric_check(&s, 0.4, 2).unwrap(), 0.0);
    let top = CylinderSamples::from_fn(&grid, &mask, 8, |_, _| (2.0, 0.0));
    let t = degiorgi_sets(&top, None).unwrap();
    assert!((t.b - t.total).abs() < 1e-14);

    let c = x0.to_cartesian();
    let tanh = CylinderSamples::from_fn(&grid, &mask, 8, |x, z| {
        let d = (x - c).norm();
        let v = ((0.2 - d + 0.2 * z) / 0.05).tanh();
        (v, (1.0 - v * v).powi(2) / 0.0025)
    });
    let sets = degiorgi_sets(&tanh, None).unwrap();
    assert!(sets.partition_defect() <= 1e-10);
    assert!(isoperimetric_check(&sets, 0.4, 2).unwrap().is_finite());
}

#[test]
fn cylinder_ladder_windows_cover_trajectory() {
    let traj = random_run(8, 1.0, 0.01, 4);
    let ladder = CylinderLadder::new(SpherePoint::new(1.0, 1.0), 0.3, 0.4, 0.5).unwrap();
    for k in 0..4 {
        let g = ladder.geometry(k).unwrap();
        assert!(g.t_start >= 0.0 && g.t_end() <= traj.t_max());
        assert!(ladder.step(k + 1).z_top < ladder.step(k).z_top);
    }
}

struct Still;

impl FlowSource for Still {
    fn time_range(&self) -> (f64, f64) {
        (0.0, 1.0)
    }
    fn velocities(&self, _t: f64, points: &[Vec3]) -> Vec<Vec3> {
        vec![Vec3::zeros(); points.len()]
    }
    fn scalars(&self, _t: f64, points: &[Vec3]) -> Vec<f64> {
        points.iter().map(|p| p.z).collect()
    }
}

#[test]
fn still_flow_gives_identity_frame() {
    let grid = make_grid(16);
    let f = comoving_frame(&Still, &grid, SpherePoint::new(1.0, 0.3), 0.4, 0.0, 1.0, 10).unwrap();
    for r in &f.rotations {
        assert!((r - sqg_sphere::sphere::Rotation::identity()).norm() == 0.0);
    }
    assert!(matches!(
        comoving_frame(&Still, &grid, SpherePoint::new(1.0, 0.3), 0.4, 0.5, 1.0, 10),
        Err(Error::WindowExceeded { .. })
    ));
}

#[test]
fn frame_consistency_on_a_nonlinear_run() {
    let traj = random_run(16, 0.5, 0.01, 6);
    let flow = TrajectoryFlow::new(&traj).unwrap();
    let grid = make_grid(16);
    let x0 = SpherePoint::new(1.1, 2.0);
    let t0 = traj.snapshots[10].t;
    let frame = comoving_frame(&flow, &grid, x0, 0.4, t0, 0.3, 30).unwrap();
    assert_eq!(frame.rotations[0], sqg_sphere::sphere::Rotation::identity());
    for r in &frame.rotations {
        assert!((r.transpose() * r - sqg_sphere::sphere::Rotation::identity()).norm() < 1e-12);
        assert!((r.determinant() - 1.0).abs() < 1e-12);
    }
    assert!(frame.ball_average_residual(&flow, 0).norm() <= 1e-8);

    let f0 = frame.comoving_field(&flow, &grid, 0).unwrap();
    let direct = sht_inverse(&traj.snapshots[10].theta, &grid).unwrap();
    assert_eq!(f0.values(), direct.values());

    // F(s, x) is θ at the rotated node
    let i = frame.s.len() - 1;
    let fi = frame.comoving_field(&flow, &grid, i).unwrap();
    let r = frame.rotations[i];
    let snap = traj.snapshots.iter().find(|s| (s.t - (t0 + 0.3)).abs() < 1e-12).unwrap();
    for (k, p) in grid.points().enumerate().step_by(7) {
        let q = SpherePoint::from_cartesian(&(r * p.to_cartesian()));
        assert!((fi.values()[k] - snap.theta.evaluate(q)).abs() < 1e-12);
    }
}

#[test]
fn solid_body_residual_vanishes() {
    let lmax = 8;
    let theta = y(lmax, 1, 0).scaled(0.6);
    let times: Vec<f64> = (0..=20).map(|i| i as f64 * 0.05).collect();
    let traj = steady(&theta, &times);
    let flow = TrajectoryFlow::new(&traj).unwrap();
    let grid = make_grid(lmax);
    let x0 = SpherePoint::new(PI / 2.0, grid.longitudes()[2]);
    let frame = comoving_frame(&flow, &grid, x0, 0.5, 0.0, 1.0, 20).unwrap();
    let omega = -0.6 * (3.0 / (4.0 * PI)).sqrt() / 2f64.sqrt();
    for (s, w) in frame.s.iter().zip(&frame.omegas) {
        assert!((w - Vec3::new(0.0, 0.0, omega)).norm() < 1e-12, "s={s}");
    }
    let v = frame.residual_velocity(&flow, &grid, 10).unwrap();
    assert!(v.max_magnitude() < 1e-12);
    let angle = frame.rotations.last().unwrap()[(1, 0)].atan2(frame.rotations.last().unwrap()[(0, 0)]);
    assert!((angle - omega).abs() < 1e-10);
}

// θ∘R⁻¹ for a rotation by `beta` about the z axis.
fn rotate_about_z(f: &SpectralField, beta: f64) -> SpectralField {
    let mut g = f.clone();
    for l in 1..=f.lmax() {
        for m in 1..=l as i64 {
            let (a, b) = (f.get(l, m), f.get(l, -m));
            let (s, c) = (m as f64 * beta).sin_cos();
            g.set(l, m, a * c - b * s).unwrap();
            g.set(l, -m, a * s + b * c).unwrap();
        }
    }
    g
}

// θ∘R for the half turn about the x axis, `(colat, lon) -> (π - colat, -lon)`.
fn half_turn_x(f: &SpectralField) -> SpectralField {
    let mut g = f.clone();
    for l in 0..=f.lmax() {
        for m in -(l as i64)..=(l as i64) {
            let parity = if (l as i64 + m.abs()) % 2 == 0 { 1.0 } else { -1.0 };
            let sign = if m < 0 { -parity } else { parity };
            g.set(l, m, sign * f.get(l, m)).unwrap();
        }
    }
    g
}

fn map_traj(traj: &Trajectory, f: impl Fn(&SpectralField) -> SpectralField) -> Trajectory {
    Trajectory {
        snapshots: traj
            .snapshots
            .iter()
            .map(|s| SimState { t: s.t, theta: f(&s.theta) })
            .collect(),
        ..traj.clone()
    }
}

#[test]
fn oscillation_profile_is_isometry_invariant() {
    let traj = random_run(32, 0.6, 0.005, 8);
    let grid: Arc<SphereGrid> = make_grid(32);
    let x0 = SpherePoint::new(grid.colatitudes()[9], grid.longitudes()[4]);
    let base = oscillation_profile(&traj, x0, 0.1, 0.4, 0.5, 4).unwrap();

    let beta = 5.0 * 2.0 * PI / grid.nlon() as f64;
    let zrot = map_traj(&traj, |f| rotate_about_z(f, beta));
    let x1 = SpherePoint::new(x0.colat, x0.lon + beta);
    let p1 = oscillation_profile(&zrot, x1, 0.1, 0.4, 0.5, 4).unwrap();

    let xrot = map_traj(&traj, half_turn_x);
    let x2 = SpherePoint::new(PI - x0.colat, -x0.lon);
    let p2 = oscillation_profile(&xrot, x2, 0.1, 0.4, 0.5, 4).unwrap();

    for ((a, b), c) in base.osc.iter().zip(&p1.osc).zip(&p2.osc) {
        assert!((a - b).abs() <= 1e-6 && (a - c).abs() <= 1e-6, "{a} {b} {c}");
    }
}

#[test]
fn rotation_oracles_match_pointwise_evaluation() {
    let f = random_field(10, 9);
    let p = SpherePoint::new(0.8, 1.3);
    let beta = 0.7;
    let g = rotate_about_z(&f, beta);
    assert!((g.evaluate(SpherePoint::new(p.colat, p.lon + beta)) - f.evaluate(p)).abs() < 1e-12);
    let h = half_turn_x(&f);
    assert!((h.evaluate(p) - f.evaluate(SpherePoint::new(PI - p.colat, -p.lon))).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::with_cases(16) })]

    #[test]
    fn truncation_is_monotone_in_level(seed in any::<u64>(), l1 in -1.0f64..1.0, d in 0.0f64..1.0) {
        let grid = make_grid(8);
        let f = sht_inverse(&random_field(8, seed), &grid).unwrap();
        let a = truncate(&f, l1 + d);
        let b = truncate(&f, l1);
        prop_assert!(a.values().iter().zip(b.values()).all(|(x, y)| x <= y));
    }

    #[test]
    fn partition_identity(seed in any::<u64>(), h in 0.1f64..1.5, level in 0.01f64..1.0) {
        let grid = make_grid(24);
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let x0 = SpherePoint::new(r.random_range(0.2..2.9), r.random_range(0.0..6.2));
        let mask = geodesic_ball_measure(&grid, x0, h).unwrap();
        let f = random_field(24, seed);
        let samples = CylinderSamples::from_extension(&f, &grid, &mask, 4).unwrap();
        let sets = degiorgi_sets(&samples, Some(level)).unwrap();
        prop_assert!(sets.partition_defect() <= 1e-10);
        prop_assert!(sets.a >= 0.0 && sets.b >= 0.0 && sets.c >= 0.0 && sets.k >= 0.0);
    }

    #[test]
    fn nested_balls_have_nested_oscillation(seed in any::<u64>(), h in 0.2f64..1.0, c in 0.2f64..0.9) {
        let grid = make_grid(16);
        let f = sht_inverse(&random_field(16, seed), &grid).unwrap();
        let x0 = SpherePoint::new(1.3, 0.5);
        let big = geodesic_ball_measure(&grid, x0, h).unwrap();
        let small = geodesic_ball_measure(&grid, x0, h * c);
        if let Ok(small) = small {
            prop_assert!(oscillation(&f, &small).unwrap() <= oscillation(&f, &big).unwrap());
        }
    }

    #[test]
    fn energy_sequence_is_nonincreasing(seed in 0u64..1000, frac in 0.1f64..1.2) {
        let traj = random_run(8, 0.4, 0.02, seed);
        let sup = traj.snapshots.iter().map(|s| sht_inverse(&s.theta, &make_grid(8)).unwrap().sup_norm()).fold(0.0, f64::max);
        let seq = global_energy_sequence(&traj, &TruncationLadder::new(frac * sup, 0.2, 5).unwrap()).unwrap();
        prop_assert!(seq.energies.windows(2).all(|w| w[1] <= w[0]));
        prop_assert!(seq.sup_l2.windows(2).all(|w| w[1] <= w[0]));
    }
}
