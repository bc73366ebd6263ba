//! Quantum-jump (Monte-Carlo wavefunction) trajectories.
//!
//! Each step applies the precomputed no-jump propagator `exp(−i·H_eff·dt)`,
//! then either collapses the state through one decay channel or
//! renormalizes it. Trajectory `k` of an ensemble draws from the ChaCha8
//! stream `k` of the ensemble seed, so results do not depend on how the
//! trajectories are scheduled.

use ndarray::Array1;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::model::{
    jump_operators, total_hamiltonian, JumpChannel, LatticeGeometry, PumpParams, LEVEL_1,
};
use crate::qops::{matrix_exponential, CsrMatrix, Operator, StateVector, Storage};
use crate::{Error, Result};

/// Largest tolerated jump probability in a single step.
pub const MAX_JUMP_PROBABILITY: f64 = 0.1;

/// Largest Hilbert dimension handled by the dense step propagator.
pub const MAX_TRAJECTORY_DIM: usize = 4096;

const NORM_FLOOR: f64 = 1e-300;

/// Trajectories advanced together by one worker.
const BATCH: usize = 16;

/// `H_total − (i/2)·Σ_c C_c†C_c`.
pub fn effective_hamiltonian(params: &PumpParams, geometry: &LatticeGeometry) -> Result<Operator> {
    let h = total_hamiltonian(params, geometry)?;
    let mut damping = Operator::zeros(h.dim()).into_sparse();
    for j in jump_operators(params, geometry)? {
        damping = damping.add(&j.op.adjoint().matmul(&j.op)?)?;
    }
    h.add(&damping.scale(C64::new(0.0, -0.5)))
}

/// One trajectory request.
#[derive(Clone, Debug)]
pub struct TrajectorySpec {
    pub params: PumpParams,
    pub geometry: LatticeGeometry,
    pub initial: StateVector,
    pub t_final: f64,
    pub dt: f64,
    pub seed: u64,
    pub trajectory_index: u64,
    /// Record populations every this many steps; t = 0 and the last step are
    /// always recorded.
    pub sample_every: usize,
}

impl TrajectorySpec {
    /// Starts from |11…1⟩ and samples every step.
    pub fn new(
        params: PumpParams,
        geometry: LatticeGeometry,
        t_final: f64,
        dt: f64,
        seed: u64,
    ) -> Result<Self> {
        let initial =
            StateVector::product(&vec![LEVEL_1; geometry.n_sites()], crate::model::LOCAL_DIM)?;
        Ok(TrajectorySpec {
            params,
            geometry,
            initial,
            t_final,
            dt,
            seed,
            trajectory_index: 0,
            sample_every: 1,
        })
    }

    pub fn with_initial(mut self, initial: StateVector) -> Self {
        self.initial = initial;
        self
    }

    pub fn with_index(mut self, index: u64) -> Self {
        self.trajectory_index = index;
        self
    }

    pub fn sample_every(mut self, stride: usize) -> Self {
        self.sample_every = stride.max(1);
        self
    }

    /// Number of propagator steps; `dt` is rounded so that they tile `t_final`.
    pub fn n_steps(&self) -> usize {
        ((self.t_final / self.dt).round() as usize).max(1)
    }

    pub fn step(&self) -> f64 {
        self.t_final / self.n_steps() as f64
    }

    /// Sample times shared by every trajectory of this template.
    pub fn sample_times(&self) -> Vec<f64> {
        let n = self.n_steps();
        let dt = self.step();
        std::iter::once(0.0)
            .chain(
                (1..=n)
                    .filter(|s| s % self.sample_every == 0 || *s == n)
                    .map(|s| s as f64 * dt),
            )
            .collect()
    }

    fn validate(&self) -> Result<()> {
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return Err(Error::invalid("t_final must be positive and finite"));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) || self.dt > self.t_final * (1.0 + 1e-12) {
            return Err(Error::invalid("dt must satisfy 0 < dt <= t_final"));
        }
        self.params.validate()?;
        let dim = self.geometry.dim()?;
        if dim > MAX_TRAJECTORY_DIM {
            return Err(Error::Capacity(format!(
                "trajectory dimension {dim} exceeds {MAX_TRAJECTORY_DIM}"
            )));
        }
        if self.initial.dim() != dim {
            return Err(Error::invalid(format!(
                "initial state dimension {} does not match {dim}",
                self.initial.dim()
            )));
        }
        if (self.initial.norm_sqr() - 1.0).abs() > 1e-9 {
            return Err(Error::invalid("initial state must be normalized"));
        }
        Ok(())
    }
}

/// A recorded quantum jump.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JumpEvent {
    pub time: f64,
    pub step: usize,
    /// Position in the site-major channel list.
    pub channel: usize,
}

/// Sampled populations and jump log of one trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryRecord {
    pub trajectory_index: u64,
    pub times: Vec<f64>,
    /// `populations[s][k]` = |⟨k|ψ(t_s)⟩|².
    pub populations: Vec<Array1<f64>>,
    pub jumps: Vec<JumpEvent>,
    pub max_jump_probability: f64,
    pub final_state: StateVector,
}

/// Precomputed propagator and collapse operators, reusable across
/// trajectories that share parameters, geometry and step.
#[derive(Clone, Debug)]
pub struct TrajectorySolver {
    dim: usize,
    dt: f64,
    n_steps: usize,
    /// Row-major `exp(−i·H_eff·dt)`, real and imaginary parts split.
    prop_re: Vec<f64>,
    prop_im: Vec<f64>,
    jumps: Vec<CsrMatrix>,
    channels: Vec<JumpChannel>,
}

impl TrajectorySolver {
    pub fn new(spec: &TrajectorySpec) -> Result<Self> {
        spec.validate()?;
        let heff = effective_hamiltonian(&spec.params, &spec.geometry)?.into_dense();
        let dt = spec.step();
        let u = matrix_exponential(&heff, C64::new(0.0, -dt))?;
        let dim = u.dim();
        let dense = u.to_dense();
        let prop_re = dense.iter().map(|z| z.re).collect();
        let prop_im = dense.iter().map(|z| z.im).collect();
        let mut jumps = Vec::new();
        let mut channels = Vec::new();
        for j in jump_operators(&spec.params, &spec.geometry)? {
            channels.push(j.channel);
            match j.op.into_sparse().storage() {
                Storage::Sparse(m) => jumps.push(m.clone()),
                Storage::Dense(_) => unreachable!("converted to sparse"),
            }
        }
        Ok(TrajectorySolver {
            dim,
            dt,
            n_steps: spec.n_steps(),
            prop_re,
            prop_im,
            jumps,
            channels,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn channels(&self) -> &[JumpChannel] {
        &self.channels
    }

    /// `next_b = U·ψ_b` for every active member of the batch.
    fn step_batch(&self, states: &mut [LiveTrajectory]) {
        #[cfg(target_arch = "x86_64")]
        if std::arch::is_x86_feature_detected!("avx2") {
            // SAFETY: the CPU supports AVX2, checked just above.
            unsafe { step_batch_avx2(self, states) };
            return;
        }
        step_batch_generic(self, states);
    }

    /// Runs one trajectory; `spec` must share this solver's parameters.
    pub fn run(&self, spec: &TrajectorySpec) -> Result<TrajectoryRecord> {
        self.run_batch(std::slice::from_ref(spec))
            .pop()
            .expect("one result per spec")
    }

    /// Runs several trajectories in lockstep. Results equal those of
    /// [`TrajectorySolver::run`] on each spec.
    pub fn run_batch(&self, specs: &[TrajectorySpec]) -> Vec<Result<TrajectoryRecord>> {
        let mut states: Vec<LiveTrajectory> = specs
            .iter()
            .map(|s| LiveTrajectory::new(s, self.dim))
            .collect();
        for st in &mut states {
            if st.spec.initial.dim() != self.dim || st.spec.n_steps() != self.n_steps {
                st.failed = Some(Error::invalid("trajectory spec does not match the solver"));
            }
        }
        for step in 1..=self.n_steps {
            if states.iter().all(|s| s.failed.is_some()) {
                break;
            }
            self.step_batch(&mut states);
            for st in states.iter_mut().filter(|s| s.failed.is_none()) {
                if let Err(e) = self.finish_step(st, step) {
                    st.failed = Some(e);
                }
            }
        }
        states
            .into_iter()
            .map(|st| match st.failed {
                Some(e) => Err(e),
                None => {
                    let mut record = st.record;
                    record.final_state = StateVector::new(Array1::from_vec(st.psi));
                    Ok(record)
                }
            })
            .collect()
    }

    fn finish_step(&self, st: &mut LiveTrajectory, step: usize) -> Result<()> {
        let norm_sqr: f64 = st.next.iter().map(|z| z.norm_sqr()).sum();
        if !norm_sqr.is_finite() || norm_sqr < NORM_FLOOR {
            return Err(Error::Numeric(format!(
                "state norm underflow at step {step}"
            )));
        }
        let p = 1.0 - norm_sqr;
        st.record.max_jump_probability = st.record.max_jump_probability.max(p);
        if p > MAX_JUMP_PROBABILITY {
            return Err(Error::StepSize {
                probability: p,
                limit: MAX_JUMP_PROBABILITY,
                step,
                dt: self.dt,
            });
        }
        let u: f64 = st.rng.random();
        if u < p {
            let channel = self.collapse(&mut st.next, &mut st.rng)?;
            st.record.jumps.push(JumpEvent {
                time: step as f64 * self.dt,
                step,
                channel,
            });
        } else {
            let scale = 1.0 / norm_sqr.sqrt();
            st.next.iter_mut().for_each(|z| *z *= scale);
        }
        std::mem::swap(&mut st.psi, &mut st.next);
        st.split();
        if step.is_multiple_of(st.spec.sample_every) || step == self.n_steps {
            st.record.times.push(step as f64 * self.dt);
            st.record.populations.push(populations(&st.psi));
        }
        Ok(())
    }

    /// Picks a channel with probability ∝ ‖Cψ‖² and replaces ψ by Cψ/‖Cψ‖.
    fn collapse(&self, psi: &mut [C64], rng: &mut ChaCha8Rng) -> Result<usize> {
        let view = ndarray::ArrayView1::from(&*psi);
        let weights: Vec<f64> = self
            .jumps
            .iter()
            .map(|c| c.apply(view).iter().map(|z| z.norm_sqr()).sum())
            .collect();
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::Numeric(
                "jump drawn with zero total channel weight".into(),
            ));
        }
        let target = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut chosen = weights.len() - 1;
        for (k, w) in weights.iter().enumerate() {
            acc += w;
            if target < acc {
                chosen = k;
                break;
            }
        }
        while weights[chosen] == 0.0 {
            chosen -= 1;
        }
        let collapsed = self.jumps[chosen].apply(view);
        let scale = 1.0 / weights[chosen].sqrt();
        for (dst, src) in psi.iter_mut().zip(collapsed.iter()) {
            *dst = src * scale;
        }
        Ok(chosen)
    }
}

/// Each product is accumulated in the same order whatever the batch size,
/// and the vectorized build performs the identical operations.
#[inline(always)]
fn step_batch_generic(solver: &TrajectorySolver, states: &mut [LiveTrajectory]) {
    const LANES: usize = 8;
    let dim = solver.dim;
    let tail = dim - dim % LANES;
    let rows = solver
        .prop_re
        .chunks_exact(dim)
        .zip(solver.prop_im.chunks_exact(dim));
    for (r, (ar, ai)) in rows.enumerate() {
        for st in states.iter_mut().filter(|s| s.failed.is_none()) {
            let (br, bi) = (&st.psi_re, &st.psi_im);
            let mut re = [0.0; LANES];
            let mut im = [0.0; LANES];
            let chunks = ar[..tail]
                .chunks_exact(LANES)
                .zip(ai[..tail].chunks_exact(LANES))
                .zip(
                    br[..tail]
                        .chunks_exact(LANES)
                        .zip(bi[..tail].chunks_exact(LANES)),
                );
            for ((ar, ai), (br, bi)) in chunks {
                for l in 0..LANES {
                    re[l] += ar[l] * br[l] - ai[l] * bi[l];
                    im[l] += ar[l] * bi[l] + ai[l] * br[l];
                }
            }
            for k in tail..dim {
                re[0] += ar[k] * br[k] - ai[k] * bi[k];
                im[0] += ar[k] * bi[k] + ai[k] * br[k];
            }
            st.next[r] = C64::new(re.iter().sum(), im.iter().sum());
        }
    }
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2")]
unsafe fn step_batch_avx2(solver: &TrajectorySolver, states: &mut [LiveTrajectory]) {
    step_batch_generic(solver, states)
}

fn populations(v: &[C64]) -> Array1<f64> {
    Array1::from_iter(v.iter().map(|z| z.norm_sqr()))
}

/// Per-trajectory working state.
struct LiveTrajectory<'a> {
    spec: &'a TrajectorySpec,
    rng: ChaCha8Rng,
    psi: Vec<C64>,
    psi_re: Vec<f64>,
    psi_im: Vec<f64>,
    next: Vec<C64>,
    record: TrajectoryRecord,
    failed: Option<Error>,
}

impl<'a> LiveTrajectory<'a> {
    fn new(spec: &'a TrajectorySpec, dim: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        rng.set_stream(spec.trajectory_index);
        let psi: Vec<C64> = spec.initial.amplitudes().to_vec();
        let mut st = LiveTrajectory {
            spec,
            rng,
            record: TrajectoryRecord {
                trajectory_index: spec.trajectory_index,
                times: vec![0.0],
                populations: vec![populations(&psi)],
                jumps: Vec::new(),
                max_jump_probability: 0.0,
                final_state: spec.initial.clone(),
            },
            psi_re: vec![0.0; psi.len()],
            psi_im: vec![0.0; psi.len()],
            next: vec![C64::new(0.0, 0.0); dim],
            psi,
            failed: None,
        };
        st.split();
        st
    }

    fn split(&mut self) {
        for (k, z) in self.psi.iter().enumerate() {
            self.psi_re[k] = z.re;
            self.psi_im[k] = z.im;
        }
    }
}

pub fn run_trajectory(spec: &TrajectorySpec) -> Result<TrajectoryRecord> {
    TrajectorySolver::new(spec)?.run(spec)
}

/// Ensemble statistics over trajectories `0..n_traj`.
#[derive(Clone, Debug)]
pub struct TrajectoryEnsemble {
    pub n_traj: usize,
    pub seed: u64,
    pub times: Vec<f64>,
    /// `mean_populations[s][k]`.
    pub mean_populations: Vec<Array1<f64>>,
    /// Sample standard deviation over trajectories divided by √n_traj.
    pub std_error: Vec<Array1<f64>>,
    pub per_trajectory_jumps: Vec<usize>,
    pub max_jump_probability: f64,
    pub trajectories: Vec<TrajectoryRecord>,
}

impl TrajectoryEnsemble {
    fn from_records(seed: u64, records: Vec<TrajectoryRecord>) -> Self {
        let n = records.len();
        let times = records[0].times.clone();
        let dim = records[0].populations[0].len();
        let mut mean = vec![Array1::<f64>::zeros(dim); times.len()];
        for r in &records {
            for (m, p) in mean.iter_mut().zip(&r.populations) {
                *m += p;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);
        let mut var = vec![Array1::<f64>::zeros(dim); times.len()];
        for r in &records {
            for ((v, m), p) in var.iter_mut().zip(&mean).zip(&r.populations) {
                *v += &(p - m).mapv(|x| x * x);
            }
        }
        let std_error = var
            .into_iter()
            .map(|v| {
                if n > 1 {
                    v.mapv(|x| (x / (n - 1) as f64).sqrt() / (n as f64).sqrt())
                } else {
                    Array1::zeros(dim)
                }
            })
            .collect();
        TrajectoryEnsemble {
            n_traj: n,
            seed,
            times,
            mean_populations: mean,
            std_error,
            per_trajectory_jumps: records.iter().map(|r| r.jumps.len()).collect(),
            max_jump_probability: records
                .iter()
                .map(|r| r.max_jump_probability)
                .fold(0.0, f64::max),
            trajectories: records,
        }
    }

    /// Per-trajectory series of Σ_{k∈indices} P_k.
    pub fn trajectory_series(&self, indices: &[usize]) -> Vec<Vec<f64>> {
        self.trajectories
            .iter()
            .map(|r| {
                r.populations
                    .iter()
                    .map(|p| indices.iter().map(|&k| p[k]).sum())
                    .collect()
            })
            .collect()
    }

    /// Ensemble mean and standard error of Σ_{k∈indices} P_k at each sample.
    pub fn summed(&self, indices: &[usize]) -> (Vec<f64>, Vec<f64>) {
        let series = self.trajectory_series(indices);
        let n = self.n_traj as f64;
        (0..self.times.len())
            .map(|s| {
                let mean = series.iter().map(|t| t[s]).sum::<f64>() / n;
                let se = if self.n_traj > 1 {
                    let var = series.iter().map(|t| (t[s] - mean).powi(2)).sum::<f64>() / (n - 1.0);
                    (var / n).sqrt()
                } else {
                    0.0
                };
                (mean, se)
            })
            .unzip()
    }
}

/// Runs trajectories `0..n_traj` on `jobs` worker threads.
///
/// Output is identical for any `jobs`: each trajectory owns its random
/// stream and the reduction runs in index order.
pub fn run_ensemble(
    template: &TrajectorySpec,
    n_traj: usize,
    jobs: usize,
) -> Result<TrajectoryEnsemble> {
    if n_traj == 0 {
        return Err(Error::invalid("n_traj must be at least 1"));
    }
    let solver = TrajectorySolver::new(template)?;
    let specs: Vec<TrajectorySpec> = (0..n_traj)
        .map(|k| template.clone().with_index(k as u64))
        .collect();
    let run_chunk = |chunk: &[TrajectorySpec]| -> Vec<Result<TrajectoryRecord>> {
        solver
            .run_batch(chunk)
            .into_iter()
            .zip(chunk)
            .map(|(r, spec)| {
                r.map_err(|e| Error::Trajectory {
                    index: spec.trajectory_index,
                    source: Box::new(e),
                })
            })
            .collect()
    };
    let batches: Vec<Vec<Result<TrajectoryRecord>>> = if jobs <= 1 {
        specs.chunks(BATCH).map(run_chunk).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::invalid(format!("cannot start worker pool: {e}")))?;
        pool.install(|| specs.par_chunks(BATCH).map(run_chunk).collect())
    };
    let records: Result<Vec<_>> = batches.into_iter().flatten().collect();
    Ok(TrajectoryEnsemble::from_records(template.seed, records?))
}

/// Result of the windowed steady-state test.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SteadyState {
    /// Whether two consecutive windows agreed within tolerance.
    pub converged: bool,
    /// Start of the averaging interval.
    pub t_declared: f64,
    pub value: f64,
    /// Spread of per-trajectory time averages over the interval, / √n_traj.
    pub std_error: f64,
}

/// Declares a steady state once window means of `mean` change by less than
/// `tolerance` between consecutive windows of length `window`.
///
/// Returns the start of the averaging interval and whether the test passed;
/// without convergence the final window is used.
pub fn detect_steady_state(
    times: &[f64],
    mean: &[f64],
    window: f64,
    tolerance: f64,
) -> Result<(bool, f64)> {
    if !(window > 0.0) {
        return Err(Error::invalid("steady-state window must be positive"));
    }
    if times.is_empty() || times.len() != mean.len() {
        return Err(Error::invalid(
            "steady-state series must match the sample grid",
        ));
    }
    let t_end = times[times.len() - 1];
    let n_windows = (t_end / window).floor() as usize;
    let window_mean = |w: usize| {
        let (lo, hi) = (w as f64 * window, (w + 1) as f64 * window);
        let vals: Vec<f64> = times
            .iter()
            .zip(mean)
            .filter(|(t, _)| **t >= lo && **t < hi)
            .map(|(_, v)| *v)
            .collect();
        (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
    };
    for w in 1..n_windows {
        if let (Some(a), Some(b)) = (window_mean(w - 1), window_mean(w)) {
            if (a - b).abs() < tolerance {
                let t = (w + 1) as f64 * window;
                if t < t_end {
                    return Ok((true, t));
                }
                break;
            }
        }
    }
    Ok((false, (t_end - window).max(0.0)))
}

/// Mean over trajectories of each trajectory's time average from `t_start`,
/// with its standard error.
pub fn time_average(times: &[f64], series: &[Vec<f64>], t_start: f64) -> (f64, f64, f64) {
    let start = times
        .iter()
        .position(|&t| t >= t_start)
        .unwrap_or(times.len() - 1);
    let per_traj: Vec<f64> = series
        .iter()
        .map(|s| s[start..].iter().sum::<f64>() / (s.len() - start) as f64)
        .collect();
    let n = per_traj.len() as f64;
    let value = per_traj.iter().sum::<f64>() / n;
    let se = if per_traj.len() > 1 {
        (per_traj.iter().map(|x| (x - value).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt()
    } else {
        0.0
    };
    (value, se, times[start])
}

/// Steady value of Σ_{k∈indices} P_k: [`detect_steady_state`] on the
/// ensemble mean, then [`time_average`] from the declared time.
pub fn steady_state(
    ensemble: &TrajectoryEnsemble,
    indices: &[usize],
    window: f64,
    tolerance: f64,
) -> Result<SteadyState> {
    let (mean, _) = ensemble.summed(indices);
    let (converged, t) = detect_steady_state(&ensemble.times, &mean, window, tolerance)?;
    let (value, std_error, t_declared) =
        time_average(&ensemble.times, &ensemble.trajectory_series(indices), t);
    Ok(SteadyState {
        converged,
        t_declared,
        value,
        std_error,
    })
}

#[cfg(test)]
mod tests;
