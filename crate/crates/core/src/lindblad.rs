//! Exact density-matrix propagation for one or two atoms.
//!
//! ρ is vectorized column-major: `vec(ρ)[i + d·j] = ρ[i, j]`, so that
//! `vec(AρB) = (Bᵀ ⊗ A)·vec(ρ)`. With that convention
//!
//! ```text
//! L = −i(I⊗H − Hᵀ⊗I) + Σ_c [ C̄⊗C − ½(I⊗C†C + (C†C)ᵀ⊗I) ]
//! ```
//!
//! [`propagate`] steps in real coordinates of the unit-trace Hermitian
//! matrices, where `L` acts as an affine map; trace and Hermiticity then
//! hold by construction and the propagator is a real matrix.

use ndarray::{s, Array1, Array2};
use num_complex::Complex64 as C64;

use crate::model::{jump_operators, total_hamiltonian, LatticeGeometry, PumpParams};
use crate::qops::{ket_index, matrix_exponential, DensityMatrix, Operator};
use crate::{Error, Result};

/// Largest Hilbert dimension for which a dense superoperator is built.
pub const MAX_LIOUVILLE_DIM: usize = 16;

/// Tolerated |tr ρ − 1| over a whole run.
pub const TRACE_DRIFT_TOL: f64 = 1e-8;

pub fn vectorize(rho: &Array2<C64>) -> Array1<C64> {
    rho.t().iter().copied().collect()
}

pub fn unvectorize(v: &Array1<C64>, dim: usize) -> Array2<C64> {
    Array2::from_shape_fn((dim, dim), |(i, j)| v[i + dim * j])
}

/// Superoperator of `dρ/dt = −i[H, ρ] + Σ_c D[C](ρ)`.
pub fn liouvillian_from(h: &Operator, jumps: &[Operator]) -> Result<Operator> {
    let d = h.dim();
    if d > MAX_LIOUVILLE_DIM {
        return Err(Error::Capacity(format!(
            "dense superoperator for dimension {d} exceeds {MAX_LIOUVILLE_DIM}; use the trajectory solver"
        )));
    }
    let id = Array2::<C64>::from_diag_elem(d, C64::new(1.0, 0.0));
    let hd = h.to_dense();
    let mi = C64::new(0.0, -1.0);
    let mut l =
        (ndarray::linalg::kron(&id, &hd) - ndarray::linalg::kron(&hd.t(), &id)).mapv(|z| z * mi);
    for c in jumps {
        if c.dim() != d {
            return Err(Error::invalid(
                "jump operator dimension does not match Hamiltonian",
            ));
        }
        let cd = c.to_dense();
        let cdc = cd.t().mapv(|z| z.conj()).dot(&cd);
        l += &ndarray::linalg::kron(&cd.mapv(|z| z.conj()), &cd);
        l.scaled_add(C64::new(-0.5, 0.0), &ndarray::linalg::kron(&id, &cdc));
        l.scaled_add(C64::new(-0.5, 0.0), &ndarray::linalg::kron(&cdc.t(), &id));
    }
    Operator::from_dense(l)
}

/// Superoperator for the pumping model; at most two atoms.
pub fn liouvillian(params: &PumpParams, geometry: &LatticeGeometry) -> Result<Operator> {
    if geometry.n_sites() > 2 {
        return Err(Error::Capacity(format!(
            "master equation limited to 2 atoms, got {}; use the trajectory solver",
            geometry.n_sites()
        )));
    }
    params.validate()?;
    let h = total_hamiltonian(params, geometry)?;
    let jumps: Vec<Operator> = jump_operators(params, geometry)?
        .into_iter()
        .map(|j| j.op)
        .collect();
    liouvillian_from(&h, &jumps)
}

/// Real coordinates of unit-trace Hermitian `d×d` matrices: `ρ_kk` for
/// `k < d−1`, then `(Re ρ_ij, Im ρ_ij)` for `i < j`. The last diagonal entry
/// is `1 − Σ_k ρ_kk`.
#[derive(Clone, Copy, Debug)]
pub struct HermitianChart {
    dim: usize,
}

impl HermitianChart {
    pub fn new(dim: usize) -> Self {
        HermitianChart { dim }
    }

    pub fn n_coords(&self) -> usize {
        self.dim * self.dim - 1
    }

    fn vec_index(&self, i: usize, j: usize) -> usize {
        i + self.dim * j
    }

    /// Linear coordinate functionals applied to a vectorized matrix.
    fn extract(&self, v: &[C64]) -> Array1<f64> {
        let d = self.dim;
        let mut out = Vec::with_capacity(self.n_coords());
        for k in 0..d - 1 {
            out.push(v[self.vec_index(k, k)].re);
        }
        for i in 0..d {
            for j in (i + 1)..d {
                let z = v[self.vec_index(i, j)];
                out.push(z.re);
                out.push(z.im);
            }
        }
        Array1::from(out)
    }

    pub fn coords(&self, rho: &Array2<C64>) -> Array1<f64> {
        self.extract(vectorize(rho).as_slice().expect("contiguous"))
    }

    pub fn matrix(&self, y: &Array1<f64>) -> Array2<C64> {
        let d = self.dim;
        let mut m = Array2::<C64>::zeros((d, d));
        let mut last = 1.0;
        for k in 0..d - 1 {
            m[[k, k]] = C64::new(y[k], 0.0);
            last -= y[k];
        }
        m[[d - 1, d - 1]] = C64::new(last, 0.0);
        let mut c = d - 1;
        for i in 0..d {
            for j in (i + 1)..d {
                m[[i, j]] = C64::new(y[c], y[c + 1]);
                m[[j, i]] = C64::new(y[c], -y[c + 1]);
                c += 2;
            }
        }
        m
    }

    /// `[[B, c], [0, 0]]` such that `dy/dt = B·y + c` under the superoperator `l`.
    pub fn affine_generator(&self, l: &Operator) -> Array2<f64> {
        let d = self.dim;
        let n = self.n_coords();
        let ld = l.to_dense();
        let col = |i: usize, j: usize| ld.column(self.vec_index(i, j)).to_owned();
        let i_unit = C64::new(0.0, 1.0);
        let mut m = Array2::<f64>::zeros((n + 1, n + 1));
        let last = col(d - 1, d - 1);
        let mut c = 0;
        let put = |m: &mut Array2<f64>, c: usize, v: Array1<C64>| {
            m.column_mut(c)
                .slice_mut(s![..n])
                .assign(&self.extract(v.as_slice().expect("contiguous")));
        };
        for k in 0..d - 1 {
            put(&mut m, c, &col(k, k) - &last);
            c += 1;
        }
        for i in 0..d {
            for j in (i + 1)..d {
                let (a, b) = (col(i, j), col(j, i));
                put(&mut m, c, &a + &b);
                put(&mut m, c + 1, (&a - &b).mapv(|z| z * i_unit));
                c += 2;
            }
        }
        put(&mut m, n, last);
        m
    }
}

/// `y ← Φ·y + φ` over one step of length `dt`.
fn affine_propagator(
    chart: &HermitianChart,
    l: &Operator,
    dt: f64,
) -> Result<(Array2<f64>, Array1<f64>)> {
    let n = chart.n_coords();
    let gen = Operator::from_real(chart.affine_generator(l))?;
    let e = matrix_exponential(&gen, C64::new(dt, 0.0))?.to_dense();
    let phi = e.slice(s![..n, ..n]).mapv(|z| z.re);
    let shift = e.slice(s![..n, n]).mapv(|z| z.re);
    Ok((phi, shift))
}

/// Quantities recorded along a run.
#[derive(Clone, Debug)]
pub enum Observable {
    /// ⟨k|ρ|k⟩.
    Population(usize),
    /// ⟨i|ρ|j⟩.
    Element(usize, usize),
    /// tr(ρ·A).
    Expectation(Operator),
    /// Bell-singlet fidelity of a two-atom state.
    BellFidelity,
    /// ⟨−|ρ|−⟩ of a two-atom state.
    SingletOverlap,
    Trace,
}

impl Observable {
    fn evaluate(&self, rho: &DensityMatrix) -> Result<C64> {
        let dim = rho.dim();
        let check = |k: usize| {
            if k < dim {
                Ok(())
            } else {
                Err(Error::invalid(format!(
                    "basis index {k} out of range for dimension {dim}"
                )))
            }
        };
        Ok(match self {
            Observable::Population(k) => {
                check(*k)?;
                C64::new(rho.get(*k, *k).re, 0.0)
            }
            Observable::Element(i, j) => {
                check(*i)?;
                check(*j)?;
                rho.get(*i, *j)
            }
            Observable::Expectation(op) => rho.expectation(op)?,
            Observable::BellFidelity => C64::new(bell_fidelity(rho)?.fidelity, 0.0),
            Observable::SingletOverlap => C64::new(bell_fidelity(rho)?.singlet_overlap, 0.0),
            Observable::Trace => rho.trace(),
        })
    }
}

/// A master-equation integration request.
#[derive(Clone, Debug)]
pub struct MasterEquationRun {
    pub params: PumpParams,
    pub geometry: LatticeGeometry,
    pub initial: DensityMatrix,
    pub t_final: f64,
    /// Propagator step; the state is exact at every multiple of it.
    pub dt: f64,
    /// Record observables every this many steps (the final step is always recorded).
    pub sample_every: usize,
    pub observables: Vec<(String, Observable)>,
}

impl MasterEquationRun {
    /// Run with the default step (2π/|Δ33|)/20, sampling every step.
    pub fn new(
        params: PumpParams,
        geometry: LatticeGeometry,
        initial: DensityMatrix,
        t_final: f64,
    ) -> Self {
        let dt = if params.delta33 != 0.0 {
            (2.0 * std::f64::consts::PI / params.delta33.abs() / 20.0).min(t_final)
        } else {
            t_final
        };
        MasterEquationRun {
            params,
            geometry,
            initial,
            t_final,
            dt,
            sample_every: 1,
            observables: Vec::new(),
        }
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = dt;
        self
    }

    /// Uses `n` equal propagator steps over the run.
    pub fn with_samples(mut self, n: usize) -> Self {
        self.dt = self.t_final / n.max(1) as f64;
        self
    }

    pub fn sample_every(mut self, stride: usize) -> Self {
        self.sample_every = stride.max(1);
        self
    }

    pub fn observe(mut self, name: impl Into<String>, observable: Observable) -> Self {
        self.observables.push((name.into(), observable));
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return Err(Error::invalid("t_final must be positive and finite"));
        }
        if !(self.dt > 0.0) || self.dt > self.t_final * (1.0 + 1e-12) {
            return Err(Error::invalid("dt must satisfy 0 < dt <= t_final"));
        }
        let dim = self.geometry.dim()?;
        if self.initial.dim() != dim {
            return Err(Error::invalid(format!(
                "initial state dimension {} does not match {dim}",
                self.initial.dim()
            )));
        }
        self.initial.validate()
    }
}

/// Sampled observables and the final state.
#[derive(Clone, Debug)]
pub struct EvolutionRecord {
    pub times: Vec<f64>,
    pub names: Vec<String>,
    /// `values[k][s]`: observable `k` at sample `s`.
    pub values: Vec<Vec<C64>>,
    pub final_state: DensityMatrix,
    /// Largest |tr ρ − 1| seen at any sample.
    pub max_trace_drift: f64,
}

impl EvolutionRecord {
    pub fn series(&self, name: &str) -> Option<&[C64]> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|k| self.values[k].as_slice())
    }

    pub fn real_series(&self, name: &str) -> Option<Vec<f64>> {
        self.series(name).map(|s| s.iter().map(|z| z.re).collect())
    }
}

/// Steps `ρ ← exp(L·dt)·ρ` with one precomputed propagator, applied in the
/// coordinates of [`HermitianChart`].
///
/// Trace drift, Hermiticity and positivity are checked at every sample;
/// violations are reported, never corrected.
pub fn propagate(run: &MasterEquationRun) -> Result<EvolutionRecord> {
    run.validate()?;
    let l = liouvillian(&run.params, &run.geometry)?;
    let dim = run.initial.dim();
    let n_steps = ((run.t_final / run.dt).round() as usize).max(1);
    let dt = run.t_final / n_steps as f64;
    let chart = HermitianChart::new(dim);
    let (phi, shift) = affine_propagator(&chart, &l, dt)?;
    let mut y = chart.coords(run.initial.entries());
    let mut record = EvolutionRecord {
        times: Vec::new(),
        names: run.observables.iter().map(|(n, _)| n.clone()).collect(),
        values: vec![Vec::new(); run.observables.len()],
        final_state: run.initial.clone(),
        max_trace_drift: 0.0,
    };
    let sample = |t: f64, rho: &DensityMatrix, record: &mut EvolutionRecord| -> Result<()> {
        let drift = (rho.trace() - C64::new(1.0, 0.0)).norm();
        record.max_trace_drift = record.max_trace_drift.max(drift);
        if drift > TRACE_DRIFT_TOL {
            return Err(Error::Integrity(format!(
                "trace drift {drift:.3e} at t = {t} µs"
            )));
        }
        rho.validate_with(
            DensityMatrix::HERMITIAN_TOL,
            TRACE_DRIFT_TOL,
            DensityMatrix::POSITIVITY_TOL,
        )
        .map_err(|e| Error::Integrity(format!("at t = {t} µs: {e}")))?;
        record.times.push(t);
        for (k, (_, obs)) in run.observables.iter().enumerate() {
            record.values[k].push(obs.evaluate(rho)?);
        }
        Ok(())
    };

    sample(0.0, &run.initial, &mut record)?;
    for step in 1..=n_steps {
        y = phi.dot(&y) + &shift;
        if step % run.sample_every == 0 || step == n_steps {
            let rho = DensityMatrix::from_entries(chart.matrix(&y))?;
            sample(step as f64 * dt, &rho, &mut record)?;
            if step == n_steps {
                record.final_state = rho;
            }
        }
    }
    Ok(record)
}

/// Singlet fidelity and the signed singlet overlap.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BellFidelity {
    /// ½(⟨12|ρ|12⟩ + ⟨21|ρ|21⟩) + |⟨12|ρ|21⟩|.
    pub fidelity: f64,
    /// ⟨−|ρ|−⟩ with |−⟩ = (|12⟩ − |21⟩)/√2.
    pub singlet_overlap: f64,
}

pub fn bell_fidelity(rho: &DensityMatrix) -> Result<BellFidelity> {
    if rho.dim() != 16 {
        return Err(Error::invalid(format!(
            "Bell fidelity needs a 2-atom (16-dim) state, got {}",
            rho.dim()
        )));
    }
    let a = ket_index("12", 4)?;
    let b = ket_index("21", 4)?;
    let paa = rho.get(a, a).re;
    let pbb = rho.get(b, b).re;
    let coh = rho.get(a, b);
    Ok(BellFidelity {
        fidelity: 0.5 * (paa + pbb) + coh.norm(),
        singlet_overlap: 0.5 * (paa + pbb - coh.re - rho.get(b, a).re),
    })
}

/// Diagonal entries at the selected basis indices.
pub fn populations(rho: &DensityMatrix, selectors: &[usize]) -> Result<Vec<f64>> {
    selectors
        .iter()
        .map(|&k| {
            if k < rho.dim() {
                Ok(rho.get(k, k).re)
            } else {
                Err(Error::invalid(format!(
                    "basis index {k} out of range for dimension {}",
                    rho.dim()
                )))
            }
        })
        .collect()
}
