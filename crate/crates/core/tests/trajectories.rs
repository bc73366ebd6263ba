use rydpump::lindblad::{propagate, MasterEquationRun, Observable};
use rydpump::mcwf::{run_ensemble, TrajectorySpec};
use rydpump::model::{LatticeGeometry, PumpParams};
use rydpump::qops::{DensityMatrix, StateVector};
use std::f64::consts::TAU;

/// Every basis population of a 200-trajectory ensemble is compared with the
/// master equation. The noise scale is the larger of the empirical standard
/// error and √(p(1−p)/N), which bounds the spread of any [0, 1]-valued
/// per-trajectory quantity with mean p. The empirical estimate alone
/// collapses once all sampled trajectories sit in the dark state.
#[test]
fn ensemble_reproduces_master_equation() {
    let omega = TAU * 0.01;
    let delta33 = TAU * 3.0;
    let omega_r = 2.0 * omega * omega / delta33;
    let p = PumpParams::symmetric(omega, 0.5 * omega_r, 1.0 / 730.0, delta33, 0.2 * delta33);
    let g = LatticeGeometry::pair();
    let t_final = 90.0 * TAU / omega_r;
    let n_samples = 60;
    let n_traj = 200;
    let per = 500;
    let dt = t_final / (n_samples * per) as f64;

    let spec = TrajectorySpec::new(p, g.clone(), t_final, dt, 1)
        .unwrap()
        .sample_every(per);
    let ens = run_ensemble(&spec, n_traj, 1).unwrap();
    assert_eq!(ens.times.len(), n_samples + 1);

    let rho0 = DensityMatrix::pure(&StateVector::basis(16, 0).unwrap());
    let mut run = MasterEquationRun::new(p, g, rho0, t_final).with_samples(n_samples);
    for k in 0..16 {
        run = run.observe(format!("{k}"), Observable::Population(k));
    }
    let rec = propagate(&run).unwrap();
    for (a, b) in rec.times.iter().zip(&ens.times) {
        assert!((a - b).abs() < 1e-6 * t_final);
    }

    let mut z_sum = 0.0;
    for k in 0..16 {
        let (mean, se) = ens.summed(&[k]);
        for s in 0..=n_samples {
            let exact = rec.values[k][s].re;
            let bound = (exact * (1.0 - exact) / n_traj as f64).max(0.0).sqrt();
            let diff = mean[s] - exact;
            if s == 0 {
                assert!(diff.abs() < 1e-12);
                continue;
            }
            let scale = se[s].max(bound);
            assert!(
                diff.abs() <= 3.0 * scale,
                "level {k}, sample {s}: {} vs {exact} (se {})",
                mean[s],
                se[s]
            );
            z_sum += diff / scale;
        }
    }
    let mean_z = z_sum / (16 * n_samples) as f64;
    assert!(mean_z.abs() < 0.5, "mean z {mean_z}");
}
