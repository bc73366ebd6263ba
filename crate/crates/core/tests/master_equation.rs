use ndarray::Array1;
use rydpump::lindblad::{
    bell_fidelity, liouvillian, propagate, unvectorize, vectorize, MasterEquationRun, Observable,
};
use rydpump::model::{LatticeGeometry, PumpParams};
use rydpump::qops::{ket_index, DensityMatrix, StateVector};
use rydpump::C64;
use std::f64::consts::TAU;

fn fig2_params(delta33_mhz: f64) -> PumpParams {
    let omega = TAU * 0.01;
    let delta33 = TAU * delta33_mhz;
    let omega_r = 2.0 * omega * omega / delta33;
    PumpParams::symmetric(omega, 0.5 * omega_r, 1.0 / 730.0, delta33, 0.2 * delta33)
}

fn rk4(l: &ndarray::Array2<C64>, v0: &Array1<C64>, h: f64, steps: usize) -> Array1<C64> {
    let mut v = v0.clone();
    let f = |x: &Array1<C64>| l.dot(x);
    let hc = C64::new(h, 0.0);
    for _ in 0..steps {
        let k1 = f(&v);
        let k2 = f(&(&v + &k1.mapv(|z| z * hc * 0.5)));
        let k3 = f(&(&v + &k2.mapv(|z| z * hc * 0.5)));
        let k4 = f(&(&v + &k3.mapv(|z| z * hc)));
        v = &v + &((k1 + k2.mapv(|z| z * 2.0) + k3.mapv(|z| z * 2.0) + k4).mapv(|z| z * hc / 6.0));
    }
    v
}

#[test]
fn propagator_agrees_with_rk4() {
    let p = PumpParams {
        gamma: 0.05,
        omega_g: 0.02,
        ..fig2_params(1.0)
    };
    let g = LatticeGeometry::pair();
    let l = liouvillian(&p, &g).unwrap().to_dense();
    let rho0 = DensityMatrix::pure(&StateVector::basis(16, 0).unwrap());
    let dt = TAU / p.delta33 / 20.0;
    let n_samples = 40;
    let run = MasterEquationRun::new(p, g, rho0.clone(), dt * n_samples as f64);
    assert!((run.dt - dt).abs() < 1e-15);
    let rec = propagate(&run.observe("p11", Observable::Population(0))).unwrap();
    let v = rk4(&l, &vectorize(rho0.entries()), dt / 100.0, 100 * n_samples);
    let err = (&unvectorize(&v, 16) - rec.final_state.entries())
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    assert!(err <= 1e-7, "max deviation {err:e}");
}

#[test]
fn dark_singlet_under_ground_drive() {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let mut amps = Array1::zeros(16);
    amps[ket_index("12", 4).unwrap()] = C64::new(r, 0.0);
    amps[ket_index("21", 4).unwrap()] = C64::new(-r, 0.0);
    let singlet = DensityMatrix::pure(&StateVector::new(amps));
    let p = PumpParams {
        omega1: 0.0,
        omega2: 0.0,
        omega_g: 0.3,
        ..fig2_params(3.0)
    };
    let run = MasterEquationRun::new(p, LatticeGeometry::pair(), singlet, 2000.0)
        .with_samples(400)
        .observe("F", Observable::BellFidelity);
    let rec = propagate(&run).unwrap();
    let worst = rec
        .real_series("F")
        .unwrap()
        .into_iter()
        .fold(1.0, f64::min);
    assert!(worst >= 1.0 - 1e-8, "{worst}");
}

#[test]
fn fig2_peak_fidelity() {
    let p = fig2_params(3.0);
    let omega_r = 2.0 * p.omega1 * p.omega1 / p.delta33;
    let rho0 = DensityMatrix::pure(&StateVector::basis(16, 0).unwrap());
    let run = MasterEquationRun::new(p, LatticeGeometry::pair(), rho0, 90.0 * TAU / omega_r)
        .with_samples(200);
    let rec = propagate(&run).unwrap();
    let f = bell_fidelity(&rec.final_state).unwrap();
    assert!((f.fidelity - 0.9988).abs() <= 0.002, "{f:?}");
    let pops = rydpump::lindblad::populations(&rec.final_state, &[1, 4]).unwrap();
    assert!(pops[0] + pops[1] >= f.fidelity - 1e-12);
    assert!(rec.max_trace_drift <= 1e-8);
}
