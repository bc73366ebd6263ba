//! Figure reproductions and generic runs, each producing result tables.

use std::f64::consts::TAU;

use rayon::prelude::*;
use rydpump::ising::{af_ground_population, build_tfim, ground_degeneracy, spectrum, SpinModel};
use rydpump::lindblad::{bell_fidelity, propagate, MasterEquationRun, Observable};
use rydpump::mcwf::{
    detect_steady_state, run_ensemble, steady_state, time_average, SteadyState, TrajectoryEnsemble,
    TrajectorySpec,
};
use rydpump::model::{LatticeGeometry, PumpParams, LEVEL_1, LEVEL_2, LOCAL_DIM};
use rydpump::qops::{ket_index, ket_label, site_levels, DensityMatrix};
use rydpump::rates::{
    effective_rabi, ising_map, omega_g_for_b_over_j, paf_equilibrium, paf_large_detuning_limit,
    pump_rates, RateModelParams,
};
use serde_json::{json, Value};

use crate::config::{pump_json, ExperimentConfig, ExperimentKind, TimeSpec};
use crate::error::CliError;
use crate::table::{Cell, ResultTable};

/// Bell-fidelity run length: 90 effective Rabi periods.
pub const FIG2_RABI_PERIODS: f64 = 90.0;
/// Plaquette run length in units of 1/J.
pub const FIG3_T_FINAL_J: f64 = 40.0;
pub const FIG3_DT_US: f64 = 25.0;
pub const DEFAULT_SAMPLE_EVERY: usize = 20;
pub const DEFAULT_TRACE_DELTA33_MHZ: f64 = 1.0;

fn at(context: String) -> impl FnOnce(CliError) -> CliError {
    move |e| CliError::At {
        context,
        source: Box::new(e),
    }
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| CliError::Output(format!("cannot start worker pool: {e}")))
}

fn metadata(cfg: &ExperimentConfig) -> serde_json::Map<String, Value> {
    let mut m = serde_json::Map::new();
    m.insert("version".into(), env!("CARGO_PKG_VERSION").into());
    m.insert("seed".into(), cfg.seed().into());
    m.insert(
        "config".into(),
        serde_json::to_value(cfg).expect("config serializes"),
    );
    m.insert("derived".into(), cfg.derived());
    m
}

fn steady_json(ss: &SteadyState) -> Value {
    json!({
        "converged": ss.converged,
        "t_declared_us": ss.t_declared,
        "value": ss.value,
        "std_error": ss.std_error,
    })
}

fn require_kind(
    cfg: &ExperimentConfig,
    allowed: &[ExperimentKind],
    command: &str,
) -> Result<(), CliError> {
    if allowed.contains(&cfg.experiment) {
        Ok(())
    } else {
        Err(CliError::Config(format!(
            "experiment {:?} cannot be run by `{command}` (expected one of {allowed:?})",
            cfg.experiment
        )))
    }
}

fn j_coupling(p: &PumpParams) -> Result<f64, CliError> {
    Ok(ising_map(p)?.j)
}

fn master_run(
    cfg: &ExperimentConfig,
    p: PumpParams,
    geometry: LatticeGeometry,
    t_final: f64,
) -> Result<MasterEquationRun, CliError> {
    let rho0 = DensityMatrix::pure(&cfg.initial_state()?);
    let mut run = MasterEquationRun::new(p, geometry, rho0, t_final);
    if let Some(n) = cfg.solver.samples {
        run = run.with_samples(n);
    } else if let Some(dt) = cfg.solver.dt_us {
        run = run.with_dt(dt);
    }
    if let Some(k) = cfg.solver.sample_every {
        run = run.sample_every(k);
    }
    Ok(run)
}

fn trajectory_spec(
    cfg: &ExperimentConfig,
    p: PumpParams,
    geometry: LatticeGeometry,
    t_final: f64,
    default_dt: f64,
) -> Result<TrajectorySpec, CliError> {
    let dt = cfg.solver.dt_us.unwrap_or(default_dt).min(t_final);
    Ok(TrajectorySpec::new(p, geometry, t_final, dt, cfg.seed())?
        .with_initial(cfg.initial_state()?)
        .sample_every(cfg.solver.sample_every.unwrap_or(DEFAULT_SAMPLE_EVERY)))
}

fn ensemble_json(ens: &TrajectoryEnsemble) -> Value {
    let jumps: usize = ens.per_trajectory_jumps.iter().sum();
    json!({
        "n_traj": ens.n_traj,
        "max_jump_probability": ens.max_jump_probability,
        "total_jumps": jumps,
        "mean_jumps_per_trajectory": jumps as f64 / ens.n_traj as f64,
    })
}

fn delta33_grid(cfg: &ExperimentConfig) -> Result<Vec<f64>, CliError> {
    match (&cfg.sweep.delta33_mhz, cfg.physics.delta33_mhz) {
        (Some(g), _) => g.points("sweep.delta33_mhz"),
        (None, Some(d)) => Ok(vec![d]),
        (None, None) => Err(CliError::Config("no Δ33 value or sweep configured".into())),
    }
}

/// One row of the fidelity sweep.
#[derive(Clone, Copy, Debug)]
pub struct Fig2Point {
    pub delta33_mhz: f64,
    pub params: PumpParams,
    pub t_final: f64,
    pub p_af: f64,
    pub f_bell: f64,
    pub singlet_overlap: f64,
    pub max_trace_drift: f64,
}

pub fn fig2_point(cfg: &ExperimentConfig, delta33_mhz: f64) -> Result<Fig2Point, CliError> {
    let p = cfg.pump_params_at(delta33_mhz)?;
    let t_final = cfg.t_final(&p, TimeSpec::RabiPeriods(FIG2_RABI_PERIODS))?;
    let rec = propagate(&master_run(cfg, p, cfg.geometry()?, t_final)?)?;
    let f = bell_fidelity(&rec.final_state)?;
    Ok(Fig2Point {
        delta33_mhz,
        params: p,
        t_final,
        p_af: paf_equilibrium(&RateModelParams::from_pump(&p)?)?,
        f_bell: f.fidelity,
        singlet_overlap: f.singlet_overlap,
        max_trace_drift: rec.max_trace_drift,
    })
}

/// Δ33 sweep of the master-equation Bell fidelity against the rate model.
pub fn run_fig2_sweep(cfg: &ExperimentConfig, jobs: usize) -> Result<ResultTable, CliError> {
    let grid = delta33_grid(cfg)?;
    let points: Vec<Result<Fig2Point, CliError>> = pool(jobs)?.install(|| {
        grid.par_iter()
            .map(|&d| fig2_point(cfg, d).map_err(at(format!("Δ33/2π = {d} MHz"))))
            .collect()
    });
    let mut table = ResultTable::new(
        "fig2_sweep",
        [
            "delta33_mhz",
            "omega_r_rad_per_us",
            "omega_g_rad_per_us",
            "t_final_us",
            "p_af_rate_model",
            "f_bell",
            "singlet_overlap",
            "max_trace_drift",
        ],
    );
    for pt in points {
        let pt = pt?;
        table.push(vec![
            pt.delta33_mhz.into(),
            effective_rabi(pt.params.omega1, pt.params.delta33)?.into(),
            pt.params.omega_g.into(),
            pt.t_final.into(),
            pt.p_af.into(),
            pt.f_bell.into(),
            pt.singlet_overlap.into(),
            pt.max_trace_drift.into(),
        ]);
    }
    table.metadata = metadata(cfg);
    Ok(table)
}

/// Fidelity and two-atom populations over time at one Δ33.
pub fn run_fig2_trace(cfg: &ExperimentConfig, delta33_mhz: f64) -> Result<ResultTable, CliError> {
    let p = cfg.pump_params_at(delta33_mhz)?;
    let geometry = cfg.geometry()?;
    if geometry.n_sites() != 2 {
        return Err(CliError::Config(
            "the fidelity trace needs the two-atom geometry".into(),
        ));
    }
    let t_final = cfg.t_final(&p, TimeSpec::RabiPeriods(FIG2_RABI_PERIODS))?;
    let labels = ["11", "12", "21", "22"];
    let mut run = master_run(cfg, p, geometry, t_final)?
        .observe("f_bell", Observable::BellFidelity)
        .observe("singlet_overlap", Observable::SingletOverlap);
    for l in labels {
        run = run.observe(
            format!("p_{l}"),
            Observable::Population(ket_index(l, LOCAL_DIM)?),
        );
    }
    let rec = propagate(&run)?;
    let omega_r = effective_rabi(p.omega1, p.delta33)?;
    let mut columns = vec!["t_us".to_string(), "t_rabi_periods".into()];
    columns.extend(rec.names.iter().cloned());
    columns.push("p_rydberg".into());
    let mut table = ResultTable::new("fig2_trace", columns);
    for (s, &t) in rec.times.iter().enumerate() {
        let mut row: Vec<Cell> = vec![t.into(), (t * omega_r / TAU).into()];
        row.extend(rec.values.iter().map(|v| Cell::from(v[s].re)));
        let ground: f64 = rec.values[2..].iter().map(|v| v[s].re).sum();
        row.push((1.0 - ground).into());
        table.push(row);
    }
    table.metadata = metadata(cfg);
    table
        .metadata
        .insert("trace_delta33_mhz".into(), delta33_mhz.into());
    table.metadata.insert("pump_params".into(), pump_json(&p));
    table
        .metadata
        .insert("max_trace_drift".into(), rec.max_trace_drift.into());
    Ok(table)
}

/// `fig2`: the sweep, plus the inset trace when enabled.
pub fn run_fig2(cfg: &ExperimentConfig, jobs: usize) -> Result<Vec<ResultTable>, CliError> {
    require_kind(
        cfg,
        &[ExperimentKind::Fig2Sweep, ExperimentKind::Fig2Trace],
        "fig2",
    )?;
    let trace_at = |fallback: Option<f64>| {
        cfg.output
            .trace_delta33_mhz
            .or(fallback)
            .unwrap_or(DEFAULT_TRACE_DELTA33_MHZ)
    };
    if cfg.experiment == ExperimentKind::Fig2Trace {
        return Ok(vec![run_fig2_trace(
            cfg,
            trace_at(cfg.physics.delta33_mhz),
        )?]);
    }
    let mut tables = vec![run_fig2_sweep(cfg, jobs)?];
    if cfg.output.trace {
        tables.push(run_fig2_trace(cfg, trace_at(None))?);
    }
    Ok(tables)
}

fn af_indices(geometry: &LatticeGeometry) -> Result<[usize; 2], CliError> {
    if geometry.n_sites() != 4 {
        return Err(CliError::Config(
            "AF populations are defined for the four-site plaquette".into(),
        ));
    }
    Ok([ket_index("1212", LOCAL_DIM)?, ket_index("2121", LOCAL_DIM)?])
}

/// Result of one plaquette ensemble.
#[derive(Clone, Debug)]
pub struct PlaquetteRun {
    pub params: PumpParams,
    pub j: f64,
    pub ensemble: TrajectoryEnsemble,
    pub steady_af: SteadyState,
    pub steady_1212: SteadyState,
    pub steady_2121: SteadyState,
}

pub fn plaquette_run(
    cfg: &ExperimentConfig,
    p: PumpParams,
    jobs: usize,
) -> Result<PlaquetteRun, CliError> {
    let geometry = cfg.geometry()?;
    let [a, b] = af_indices(&geometry)?;
    let j = j_coupling(&p)?;
    let t_final = cfg.t_final(&p, TimeSpec::InverseJ(FIG3_T_FINAL_J))?;
    let spec = trajectory_spec(cfg, p, geometry, t_final, FIG3_DT_US)?;
    let ensemble = run_ensemble(&spec, cfg.n_traj(), jobs)?;
    let window = cfg.steady_window_j() / j;
    let tol = cfg.steady_tolerance();
    let steady_af = steady_state(&ensemble, &[a, b], window, tol)?;
    let single = |k: usize| {
        let (value, std_error, t) = time_average(
            &ensemble.times,
            &ensemble.trajectory_series(&[k]),
            steady_af.t_declared,
        );
        SteadyState {
            converged: steady_af.converged,
            t_declared: t,
            value,
            std_error,
        }
    };
    let (steady_1212, steady_2121) = (single(a), single(b));
    Ok(PlaquetteRun {
        params: p,
        j,
        ensemble,
        steady_af,
        steady_1212,
        steady_2121,
    })
}

/// AF-state populations of the square plaquette over time.
pub fn run_fig3(cfg: &ExperimentConfig, jobs: usize) -> Result<ResultTable, CliError> {
    require_kind(cfg, &[ExperimentKind::Fig3Trace], "fig3")?;
    let run = plaquette_run(cfg, cfg.pump_params()?, jobs)?;
    let [a, b] = af_indices(&cfg.geometry()?)?;
    let ens = &run.ensemble;
    let mut table = ResultTable::new(
        "fig3_trace",
        [
            "t_us",
            "t_times_j",
            "p_1212",
            "se_1212",
            "p_2121",
            "se_2121",
            "p_af",
            "se_af",
        ],
    );
    let (af, af_se) = ens.summed(&[a, b]);
    for (s, &t) in ens.times.iter().enumerate() {
        table.push(vec![
            t.into(),
            (t * run.j).into(),
            ens.mean_populations[s][a].into(),
            ens.std_error[s][a].into(),
            ens.mean_populations[s][b].into(),
            ens.std_error[s][b].into(),
            af[s].into(),
            af_se[s].into(),
        ]);
    }
    table.metadata = metadata(cfg);
    table.metadata.insert("ensemble".into(), ensemble_json(ens));
    table.metadata.insert(
        "steady_state".into(),
        json!({
            "p_af": steady_json(&run.steady_af),
            "p_1212": steady_json(&run.steady_1212),
            "p_2121": steady_json(&run.steady_2121),
        }),
    );
    Ok(table)
}

/// One point of the B/J scan.
#[derive(Clone, Debug)]
pub struct InsetPoint {
    pub b_over_j: f64,
    pub omega_g: f64,
    pub mcwf: SteadyState,
    pub diagonalization: f64,
    pub max_jump_probability: f64,
}

pub fn inset_point(
    cfg: &ExperimentConfig,
    b_over_j: f64,
    jobs: usize,
) -> Result<InsetPoint, CliError> {
    let base = cfg.pump_params()?;
    let omega_g = omega_g_for_b_over_j(&base, b_over_j)?;
    let p = PumpParams { omega_g, ..base };
    let run = plaquette_run(cfg, p, jobs)?;
    let model = SpinModel::from_geometry(&cfg.geometry()?, 1.0, b_over_j)?;
    Ok(InsetPoint {
        b_over_j,
        omega_g,
        mcwf: run.steady_af,
        diagonalization: af_ground_population(&model)?,
        max_jump_probability: run.ensemble.max_jump_probability,
    })
}

/// Steady AF population versus B/J from trajectories and from exact
/// diagonalization.
pub fn run_fig3_inset(cfg: &ExperimentConfig, jobs: usize) -> Result<ResultTable, CliError> {
    require_kind(cfg, &[ExperimentKind::Fig3Inset], "fig3-inset")?;
    let grid = cfg
        .sweep
        .b_over_j
        .as_ref()
        .ok_or_else(|| CliError::Config("fig3-inset needs sweep.b_over_j".into()))?
        .points("sweep.b_over_j")?;
    let mut table = ResultTable::new(
        "fig3_inset",
        [
            "b_over_j",
            "omega_g_mhz",
            "omega_g_rad_per_us",
            "p_af_mcwf",
            "se_mcwf",
            "p_af_diagonalization",
            "steady_converged",
            "t_declared_us",
            "max_jump_probability",
        ],
    );
    for &bj in &grid {
        let pt = inset_point(cfg, bj, jobs).map_err(at(format!("B/J = {bj}")))?;
        table.push(vec![
            bj.into(),
            (pt.omega_g / TAU).into(),
            pt.omega_g.into(),
            pt.mcwf.value.into(),
            pt.mcwf.std_error.into(),
            pt.diagonalization.into(),
            pt.mcwf.converged.into(),
            pt.mcwf.t_declared.into(),
            pt.max_jump_probability.into(),
        ]);
    }
    table.metadata = metadata(cfg);
    Ok(table)
}

/// Ground-manifold populations of one sample, renormalized after projecting
/// out the Rydberg levels. Indexed by the two-level basis (bit 0 = |1⟩).
pub fn ground_projection(populations: &[f64], n_sites: usize) -> Vec<f64> {
    let mut out = vec![0.0; 1 << n_sites];
    for (idx, &p) in populations.iter().enumerate() {
        let levels = site_levels(idx, n_sites, LOCAL_DIM);
        if levels.iter().all(|&l| l == LEVEL_1 || l == LEVEL_2) {
            let k = levels.iter().fold(0, |acc, &l| (acc << 1) | (l - LEVEL_1));
            out[k] += p;
        }
    }
    let total: f64 = out.iter().sum();
    if total > 0.0 {
        out.iter_mut().for_each(|x| *x /= total);
    }
    out
}

/// Σ_sites ±½ with |1⟩ = +½.
pub fn magnetization(spin_index: usize, n_sites: usize) -> f64 {
    site_levels(spin_index, n_sites, 2)
        .iter()
        .map(|&b| if b == 0 { 0.5 } else { -0.5 })
        .sum()
}

/// Steady ground-basis populations of the three-atom triangle.
pub fn run_triangle(cfg: &ExperimentConfig, jobs: usize) -> Result<ResultTable, CliError> {
    require_kind(cfg, &[ExperimentKind::Triangle], "triangle")?;
    let geometry = cfg.geometry()?;
    let n = geometry.n_sites();
    let p = cfg.pump_params()?;
    let j = j_coupling(&p)?;
    let t_final = cfg.t_final(&p, TimeSpec::InverseJ(FIG3_T_FINAL_J))?;
    let spec = trajectory_spec(cfg, p, geometry, t_final, FIG3_DT_US)?;
    let ens = run_ensemble(&spec, cfg.n_traj(), jobs)?;

    // series[k][traj][sample]
    let n_ground = 1usize << n;
    let mut series = vec![Vec::with_capacity(ens.n_traj); n_ground];
    for traj in &ens.trajectories {
        let projected: Vec<Vec<f64>> = traj
            .populations
            .iter()
            .map(|pops| ground_projection(pops.as_slice().expect("contiguous"), n))
            .collect();
        for (k, s) in series.iter_mut().enumerate() {
            s.push(projected.iter().map(|g| g[k]).collect::<Vec<f64>>());
        }
    }
    let frustrated: Vec<usize> = (0..n_ground)
        .filter(|&k| magnetization(k, n).abs() == 0.5)
        .collect();
    let frustrated_sum: Vec<Vec<f64>> = (0..ens.n_traj)
        .map(|t| {
            (0..ens.times.len())
                .map(|s| frustrated.iter().map(|&k| series[k][t][s]).sum())
                .collect()
        })
        .collect();
    let mean_sum: Vec<f64> = (0..ens.times.len())
        .map(|s| frustrated_sum.iter().map(|t| t[s]).sum::<f64>() / ens.n_traj as f64)
        .collect();
    let (converged, t_start) = detect_steady_state(
        &ens.times,
        &mean_sum,
        cfg.steady_window_j() / j,
        cfg.steady_tolerance(),
    )?;

    let mut table = ResultTable::new(
        "triangle",
        [
            "state",
            "magnetization",
            "population",
            "std_error",
            "frustrated",
        ],
    );
    let mut t_declared = t_start;
    for (k, s) in series.iter().enumerate() {
        let (value, se, t) = time_average(&ens.times, s, t_start);
        t_declared = t;
        let label: String = site_levels(k, n, 2)
            .iter()
            .map(|&b| char::from(b'1' + b as u8))
            .collect();
        let m = magnetization(k, n);
        table.push(vec![
            label.into(),
            m.into(),
            value.into(),
            se.into(),
            (m.abs() == 0.5).into(),
        ]);
    }
    let (sum_value, sum_se, _) = time_average(&ens.times, &frustrated_sum, t_start);
    table.metadata = metadata(cfg);
    table
        .metadata
        .insert("ensemble".into(), ensemble_json(&ens));
    table.metadata.insert(
        "steady_state".into(),
        json!({
            "converged": converged,
            "t_declared_us": t_declared,
            "frustrated_total": sum_value,
            "frustrated_total_std_error": sum_se,
        }),
    );
    Ok(table)
}

/// Master-equation populations of every basis state (at most two atoms).
pub fn run_master(cfg: &ExperimentConfig) -> Result<ResultTable, CliError> {
    let p = cfg.pump_params()?;
    let geometry = cfg.geometry()?;
    let n = geometry.n_sites();
    let dim = geometry.dim()?;
    let t_final = cfg.t_final(&p, TimeSpec::RabiPeriods(FIG2_RABI_PERIODS))?;
    let mut run = master_run(cfg, p, geometry, t_final)?;
    for k in 0..dim {
        run = run.observe(
            format!("p_{}", ket_label(k, n, LOCAL_DIM)),
            Observable::Population(k),
        );
    }
    if n == 2 {
        run = run
            .observe("f_bell", Observable::BellFidelity)
            .observe("singlet_overlap", Observable::SingletOverlap);
    }
    let rec = propagate(&run)?;
    let mut columns = vec!["t_us".to_string()];
    columns.extend(rec.names.iter().cloned());
    let mut table = ResultTable::new("master", columns);
    for (s, &t) in rec.times.iter().enumerate() {
        let mut row: Vec<Cell> = vec![t.into()];
        row.extend(rec.values.iter().map(|v| Cell::from(v[s].re)));
        table.push(row);
    }
    table.metadata = metadata(cfg);
    table
        .metadata
        .insert("max_trace_drift".into(), rec.max_trace_drift.into());
    Ok(table)
}

/// Trajectory-averaged populations of every basis state.
pub fn run_mcwf(cfg: &ExperimentConfig, jobs: usize) -> Result<ResultTable, CliError> {
    let p = cfg.pump_params()?;
    let geometry = cfg.geometry()?;
    let n = geometry.n_sites();
    let dim = geometry.dim()?;
    let t_final = cfg.t_final(&p, TimeSpec::RabiPeriods(FIG2_RABI_PERIODS))?;
    // Keeps the per-step jump probability below 1 − e^(−0.05) even with every atom excited.
    let default_dt = if p.gamma > 0.0 {
        0.05 / (n as f64 * p.gamma)
    } else {
        t_final / 1000.0
    };
    let spec = trajectory_spec(cfg, p, geometry, t_final, default_dt)?;
    let ens = run_ensemble(&spec, cfg.n_traj(), jobs)?;
    let mut columns = vec!["t_us".to_string()];
    for k in 0..dim {
        let l = ket_label(k, n, LOCAL_DIM);
        columns.push(format!("p_{l}"));
        columns.push(format!("se_{l}"));
    }
    let mut table = ResultTable::new("mcwf", columns);
    for (s, &t) in ens.times.iter().enumerate() {
        let mut row: Vec<Cell> = vec![t.into()];
        for k in 0..dim {
            row.push(ens.mean_populations[s][k].into());
            row.push(ens.std_error[s][k].into());
        }
        table.push(row);
    }
    table.metadata = metadata(cfg);
    table
        .metadata
        .insert("ensemble".into(), ensemble_json(&ens));
    table.metadata.insert("dt_us".into(), spec.step().into());
    Ok(table)
}

/// Rate-model quantities over the Δ33 grid.
pub fn run_rates(cfg: &ExperimentConfig) -> Result<ResultTable, CliError> {
    let mut table = ResultTable::new(
        "rates",
        [
            "delta33_mhz",
            "omega_r_rad_per_us",
            "ising_j_per_us",
            "p_af",
            "p_af_large_detuning_limit",
            "r1_in",
            "r1_out",
            "r2_in",
            "r2_out",
        ],
    );
    for d in delta33_grid(cfg)? {
        let p = cfg.pump_params_at(d)?;
        let rp = RateModelParams::from_pump(&p)?;
        let p_af = paf_equilibrium(&rp)?;
        let r = pump_rates(&rp, p_af);
        table.push(vec![
            d.into(),
            rp.omega_r.into(),
            j_coupling(&p)?.into(),
            p_af.into(),
            paf_large_detuning_limit(rp.omega, rp.gamma)?.into(),
            r.r1_in.into(),
            r.r1_out.into(),
            r.r2_in.into(),
            r.r2_out.into(),
        ]);
    }
    table.metadata = metadata(cfg);
    Ok(table)
}

/// Exact TFIM spectrum data versus B/J, with J = 1 and the configured
/// geometry's couplings.
pub fn run_ising(cfg: &ExperimentConfig) -> Result<ResultTable, CliError> {
    let geometry = cfg.geometry()?;
    let grid = match &cfg.sweep.b_over_j {
        Some(g) => g.points("sweep.b_over_j")?,
        None => vec![0.0],
    };
    let with_af = geometry.n_sites() == 4;
    let mut columns = vec![
        "b_over_j",
        "ground_energy",
        "ground_degeneracy",
        "first_excited_energy",
    ];
    if with_af {
        columns.push("p_af");
    }
    let mut table = ResultTable::new("ising", columns);
    for bj in grid {
        let model = SpinModel::from_geometry(&geometry, 1.0, bj)?;
        let values = spectrum(&model)?;
        let deg = ground_degeneracy(&values, build_tfim(&model)?.norm1());
        let mut row: Vec<Cell> = vec![
            bj.into(),
            values[0].into(),
            deg.into(),
            values.get(deg).copied().unwrap_or(f64::NAN).into(),
        ];
        if with_af {
            row.push(af_ground_population(&model)?.into());
        }
        table.push(row);
    }
    table.metadata = metadata(cfg);
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ground_projection_renormalizes() {
        let mut pops = vec![0.0; 16];
        pops[ket_index("12", 4).unwrap()] = 0.3;
        pops[ket_index("21", 4).unwrap()] = 0.3;
        pops[ket_index("13", 4).unwrap()] = 0.4;
        let g = ground_projection(&pops, 2);
        assert_eq!(g, vec![0.0, 0.5, 0.5, 0.0]);
    }

    #[test]
    fn triangle_magnetizations() {
        let m: Vec<f64> = (0..8).map(|k| magnetization(k, 3)).collect();
        assert_eq!(m, vec![1.5, 0.5, 0.5, -0.5, 0.5, -0.5, -0.5, -1.5]);
    }
}
