use super::*;
use crate::model::{LEVEL_2, LEVEL_3, LEVEL_4};
use crate::qops::ket_index;

fn decay_only(gamma: f64) -> PumpParams {
    PumpParams {
        omega1: 0.0,
        omega2: 0.0,
        omega_g: 0.0,
        delta: 0.0,
        gamma,
        delta33: 1.0,
        delta34: 0.5,
    }
}

fn driven(gamma: f64) -> PumpParams {
    PumpParams {
        omega1: 0.6,
        omega2: 0.5,
        omega_g: 0.3,
        delta: 1.0,
        gamma,
        delta33: 2.0,
        delta34: 0.7,
    }
}

#[test]
fn no_decay_gives_hermitian_generator() {
    let p = driven(0.0);
    let g = LatticeGeometry::pair();
    let heff = effective_hamiltonian(&p, &g).unwrap();
    let h = total_hamiltonian(&p, &g).unwrap();
    assert!(heff.max_abs_diff(&h).unwrap() < 1e-15);
}

#[test]
fn damping_is_half_gamma_per_rydberg_atom() {
    let gamma = 0.37;
    let heff = effective_hamiltonian(&driven(gamma), &LatticeGeometry::pair()).unwrap();
    let i34 = ket_index("34", 4).unwrap();
    assert!((heff.get(i34, i34).im + gamma).abs() < 1e-15);
    let i13 = ket_index("13", 4).unwrap();
    assert!((heff.get(i13, i13).im + gamma / 2.0).abs() < 1e-15);
    let i12 = ket_index("12", 4).unwrap();
    assert_eq!(heff.get(i12, i12).im, 0.0);
}

#[test]
fn no_jump_norm_decays_exponentially() {
    let gamma = 0.25;
    let heff = effective_hamiltonian(&decay_only(gamma), &LatticeGeometry::single()).unwrap();
    for &t in &[0.1, 1.0, 7.5] {
        let u = matrix_exponential(&heff, C64::new(0.0, -t)).unwrap();
        let psi = u.apply(StateVector::basis(4, LEVEL_3).unwrap().amplitudes().view());
        let n: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        assert!((n - (-gamma * t).exp()).abs() < 1e-13);
    }
}

#[test]
fn without_decay_matches_schrodinger_evolution() {
    let p = driven(0.0);
    let g = LatticeGeometry::pair();
    let spec = TrajectorySpec::new(p, g.clone(), 12.0, 0.1, 3).unwrap();
    let rec = run_trajectory(&spec).unwrap();
    assert!(rec.jumps.is_empty());
    let h = total_hamiltonian(&p, &g).unwrap();
    for (s, &t) in rec.times.iter().enumerate().step_by(17) {
        let u = matrix_exponential(&h, C64::new(0.0, -t)).unwrap();
        let psi = u.apply(spec.initial.amplitudes().view());
        for (k, z) in psi.iter().enumerate() {
            assert!((z.norm_sqr() - rec.populations[s][k]).abs() < 1e-10);
        }
    }
}

#[test]
fn first_jump_times_follow_exponential_law() {
    let gamma = 1.0;
    let n = 10_000;
    let spec = TrajectorySpec::new(decay_only(gamma), LatticeGeometry::single(), 12.0, 1e-3, 77)
        .unwrap()
        .with_initial(StateVector::basis(4, LEVEL_3).unwrap())
        .sample_every(usize::MAX);
    let ens = run_ensemble(&spec, n, 1).unwrap();
    let mut times: Vec<f64> = ens
        .trajectories
        .iter()
        .map(|r| {
            assert!(r.jumps.len() <= 1);
            r.jumps.first().map_or(f64::INFINITY, |j| j.time)
        })
        .collect();
    times.sort_by(f64::total_cmp);
    let d = times
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let cdf = 1.0 - (-gamma * t).exp();
            let lo = i as f64 / n as f64;
            let hi = (i + 1) as f64 / n as f64;
            (cdf - lo).abs().max((hi - cdf).abs())
        })
        .fold(0.0, f64::max);
    let sn = (n as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    let p_value: f64 = (1..=100)
        .map(|k| {
            let k = k as f64;
            2.0 * (-1f64).powf(k - 1.0) * (-2.0 * k * k * lambda * lambda).exp()
        })
        .sum();
    assert!(p_value > 0.01, "KS D = {d}, p = {p_value}");
}

#[test]
fn decay_branches_evenly_from_each_rydberg_level() {
    for (level, expected) in [(LEVEL_3, [0usize, 1]), (LEVEL_4, [2, 3])] {
        let spec = TrajectorySpec::new(decay_only(2.0), LatticeGeometry::single(), 10.0, 0.01, 5)
            .unwrap()
            .with_initial(StateVector::basis(4, level).unwrap())
            .sample_every(usize::MAX);
        let ens = run_ensemble(&spec, 4000, 1).unwrap();
        let mut counts = [0usize; 4];
        for r in &ens.trajectories {
            for j in &r.jumps {
                counts[j.channel] += 1;
            }
        }
        let total = counts[expected[0]] + counts[expected[1]];
        assert_eq!(total, counts.iter().sum::<usize>());
        let frac = counts[expected[0]] as f64 / total as f64;
        assert!(
            (frac - 0.5).abs() < 4.0 * 0.5 / (total as f64).sqrt(),
            "{frac}"
        );
    }
}

#[test]
fn final_populations_after_full_decay() {
    let spec = TrajectorySpec::new(decay_only(1.0), LatticeGeometry::single(), 40.0, 0.02, 1)
        .unwrap()
        .with_initial(StateVector::basis(4, LEVEL_3).unwrap())
        .sample_every(100);
    let ens = run_ensemble(&spec, 2000, 1).unwrap();
    let last = ens.mean_populations.last().unwrap();
    assert!(last[LEVEL_3] < 1e-12);
    assert!((last[0] - 0.5).abs() < 4.0 * 0.5 / (2000f64).sqrt());
    assert!((last[0] + last[LEVEL_2] - 1.0).abs() < 1e-12);
}

#[test]
fn same_seed_is_independent_of_worker_count() {
    let spec = TrajectorySpec::new(driven(0.2), LatticeGeometry::pair(), 30.0, 0.05, 11)
        .unwrap()
        .sample_every(20);
    let a = run_ensemble(&spec, 24, 1).unwrap();
    let b = run_ensemble(&spec, 24, 8).unwrap();
    assert_eq!(a.mean_populations, b.mean_populations);
    assert_eq!(a.std_error, b.std_error);
    assert_eq!(a.trajectories, b.trajectories);
    assert!(a.per_trajectory_jumps.iter().sum::<usize>() > 0);
}

#[test]
fn single_member_ensemble_is_the_trajectory() {
    let spec = TrajectorySpec::new(driven(0.2), LatticeGeometry::pair(), 10.0, 0.05, 4).unwrap();
    let ens = run_ensemble(&spec, 1, 1).unwrap();
    let rec = run_trajectory(&spec).unwrap();
    assert_eq!(ens.mean_populations, rec.populations);
    assert!(ens.std_error.iter().all(|s| s.iter().all(|&x| x == 0.0)));
}

#[test]
fn different_indices_and_seeds_differ() {
    let spec = TrajectorySpec::new(driven(0.3), LatticeGeometry::pair(), 30.0, 0.05, 4).unwrap();
    let a = run_trajectory(&spec).unwrap();
    let b = run_trajectory(&spec.clone().with_index(1)).unwrap();
    let c = run_trajectory(&TrajectorySpec {
        seed: 5,
        ..spec.clone()
    })
    .unwrap();
    assert_ne!(a.jumps, b.jumps);
    assert_ne!(a.jumps, c.jumps);
    assert_eq!(a, run_trajectory(&spec).unwrap());
}

#[test]
fn populations_stay_normalized() {
    let spec = TrajectorySpec::new(driven(0.3), LatticeGeometry::pair(), 20.0, 0.05, 8)
        .unwrap()
        .sample_every(10);
    let ens = run_ensemble(&spec, 30, 2).unwrap();
    for m in &ens.mean_populations {
        assert!((m.sum() - 1.0).abs() < 2e-6);
        assert!(m.iter().all(|&x| (0.0..=1.0 + 1e-12).contains(&x)));
    }
}

#[test]
fn oversized_step_is_rejected() {
    let spec = TrajectorySpec::new(decay_only(1.0), LatticeGeometry::single(), 10.0, 0.5, 1)
        .unwrap()
        .with_initial(StateVector::basis(4, LEVEL_3).unwrap());
    match run_ensemble(&spec, 3, 1) {
        Err(Error::Trajectory { index: 0, source }) => {
            assert!(matches!(*source, Error::StepSize { step: 1, .. }))
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn invalid_specs() {
    let base = TrajectorySpec::new(driven(0.1), LatticeGeometry::pair(), 1.0, 0.1, 0).unwrap();
    assert!(run_trajectory(&TrajectorySpec {
        dt: 2.0,
        ..base.clone()
    })
    .is_err());
    assert!(run_trajectory(&TrajectorySpec {
        t_final: -1.0,
        ..base.clone()
    })
    .is_err());
    assert!(run_trajectory(&base.clone().with_initial(StateVector::basis(4, 0).unwrap())).is_err());
    assert!(run_ensemble(&base, 0, 1).is_err());
}

#[test]
fn sample_grid_includes_last_step() {
    let spec = TrajectorySpec::new(driven(0.1), LatticeGeometry::single(), 1.0, 0.1, 0)
        .unwrap()
        .sample_every(3);
    let t = spec.sample_times();
    assert_eq!(t.len(), 5);
    assert!((t[4] - 1.0).abs() < 1e-15);
    assert_eq!(run_trajectory(&spec).unwrap().times, t);
}

fn synthetic(series: &[Vec<f64>], dt: f64) -> TrajectoryEnsemble {
    let records = series
        .iter()
        .enumerate()
        .map(|(i, s)| TrajectoryRecord {
            trajectory_index: i as u64,
            times: (0..s.len()).map(|k| k as f64 * dt).collect(),
            populations: s.iter().map(|&x| Array1::from(vec![x, 1.0 - x])).collect(),
            jumps: Vec::new(),
            max_jump_probability: 0.0,
            final_state: StateVector::basis(2, 0).unwrap(),
        })
        .collect();
    TrajectoryEnsemble::from_records(0, records)
}

#[test]
fn steady_state_detection_on_relaxing_series() {
    let relax = |a: f64| {
        (0..400)
            .map(|k| a * (1.0 - (-(k as f64) / 40.0).exp()))
            .collect::<Vec<_>>()
    };
    let ens = synthetic(&[relax(0.9), relax(1.0)], 1.0);
    let ss = steady_state(&ens, &[0], 50.0, 0.005).unwrap();
    assert!(ss.converged);
    assert!(ss.t_declared > 100.0 && ss.t_declared < 400.0);
    assert!((ss.value - 0.95).abs() < 0.01);
    assert!((ss.std_error - 0.05).abs() < 0.002);

    let ramp = (0..100).map(|k| k as f64 / 100.0).collect::<Vec<_>>();
    let ss = steady_state(&synthetic(&[ramp], 1.0), &[0], 10.0, 0.005).unwrap();
    assert!(!ss.converged);
}

#[test]
fn summed_matches_component_sum() {
    let ens = synthetic(&[vec![0.1, 0.2], vec![0.3, 0.6]], 1.0);
    let (m, se) = ens.summed(&[0, 1]);
    assert!(m.iter().all(|&x| (x - 1.0).abs() < 1e-15));
    assert!(se.iter().all(|&x| x.abs() < 1e-15));
    let (m0, se0) = ens.summed(&[0]);
    assert!((m0[1] - 0.4).abs() < 1e-15);
    assert!((se0[1] - 0.2).abs() < 1e-12);
}
