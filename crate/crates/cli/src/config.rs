//! Experiment configuration: JSON files in laboratory units, resolved once
//! into the solver's rad/µs and µs.

use std::f64::consts::TAU;
use std::path::Path;

use ndarray::Array2;
use rydpump::model::{LatticeGeometry, PumpParams, LOCAL_DIM};
use rydpump::qops::{ket_index, StateVector};
use rydpump::rates::effective_rabi;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Fig2Sweep,
    Fig2Trace,
    Fig3Trace,
    Fig3Inset,
    Triangle,
    Custom,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeometrySpec {
    Single,
    Pair,
    Triangle,
    Square,
    /// Full symmetric matrix of interaction scale factors.
    Couplings(Vec<Vec<f64>>),
}

impl GeometrySpec {
    pub fn build(&self) -> Result<LatticeGeometry, CliError> {
        Ok(match self {
            GeometrySpec::Single => LatticeGeometry::single(),
            GeometrySpec::Pair => LatticeGeometry::pair(),
            GeometrySpec::Triangle => LatticeGeometry::triangle(),
            GeometrySpec::Square => LatticeGeometry::square(),
            GeometrySpec::Couplings(rows) => {
                let n = rows.len();
                if rows.iter().any(|r| r.len() != n) {
                    return Err(CliError::Config(
                        "physics.geometry.couplings must be square".into(),
                    ));
                }
                let flat: Vec<f64> = rows.iter().flatten().copied().collect();
                let m = Array2::from_shape_vec((n, n), flat).expect("checked shape");
                LatticeGeometry::new(m)
                    .map_err(|e| CliError::Config(format!("physics.geometry: {e}")))?
            }
        })
    }
}

/// Physical parameters; frequencies are ν = Ω/2π in MHz, lifetimes in ms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsConfig {
    pub geometry: GeometrySpec,
    /// Rydberg drive, applied to both 1↔3 and 2↔4 unless `omega2_mhz` is set.
    pub omega_mhz: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega2_mhz: Option<f64>,
    /// Ground-state drive; exclusive with `omega_g_over_omega_r`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_g_mhz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_g_over_omega_r: Option<f64>,
    /// Required unless a Δ33 sweep is configured.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta33_mhz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta34_over_delta33: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta34_mhz: Option<f64>,
    /// Laser detuning; Δ33/2 when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_mhz: Option<f64>,
    pub lifetime_ms: f64,
    /// Initial product state as a level string, e.g. "11"; all atoms in |1⟩
    /// when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<String>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    #[default]
    Linear,
    Log,
}

/// Explicit `values`, or `points` samples from `start` to `stop`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    #[serde(default)]
    pub spacing: Spacing,
}

impl Grid {
    pub fn points(&self, field: &str) -> Result<Vec<f64>, CliError> {
        if let Some(v) = &self.values {
            if self.start.is_some() || self.stop.is_some() || self.points.is_some() {
                return Err(CliError::Config(format!(
                    "{field}: give either values or start/stop/points"
                )));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(CliError::Config(format!("{field}: values must be finite")));
            }
            return Ok(v.clone());
        }
        let (start, stop, n) = match (self.start, self.stop, self.points) {
            (Some(a), Some(b), Some(n)) => (a, b, n),
            _ => {
                return Err(CliError::Config(format!(
                    "{field}: missing start, stop or points"
                )))
            }
        };
        if !(start.is_finite() && stop.is_finite()) {
            return Err(CliError::Config(format!("{field}: bounds must be finite")));
        }
        if n == 0 {
            return Ok(Vec::new());
        }
        if n == 1 {
            return Ok(vec![start]);
        }
        let frac = |k: usize| k as f64 / (n - 1) as f64;
        match self.spacing {
            Spacing::Linear => Ok((0..n).map(|k| start + (stop - start) * frac(k)).collect()),
            Spacing::Log => {
                if !(start > 0.0 && stop > 0.0) {
                    return Err(CliError::Config(format!(
                        "{field}: log spacing needs positive bounds"
                    )));
                }
                let (la, lb) = (start.ln(), stop.ln());
                Ok((0..n).map(|k| (la + (lb - la) * frac(k)).exp()).collect())
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta33_mhz: Option<Grid>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b_over_j: Option<Grid>,
}

/// Integration and sampling controls.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_final_us: Option<f64>,
    /// End time in effective Rabi periods 2π/Ω_R.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rabi_periods: Option<f64>,
    /// End time in units of 1/J.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_final_j: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt_us: Option<f64>,
    /// Number of equal propagator steps (master equation); overrides `dt_us`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_every: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_traj: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Steady-state window in units of 1/J.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steady_window_j: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steady_tolerance: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    /// Also write a time trace next to the sweep.
    #[serde(default)]
    pub trace: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace_delta33_mhz: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub physics: PhysicsConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_N_TRAJ: usize = 100;
pub const DEFAULT_STEADY_WINDOW_J: f64 = 2.0;
pub const DEFAULT_STEADY_TOLERANCE: f64 = 0.005;

/// Shipped presets, keyed by name.
pub const PRESETS: [(&str, &str); 8] = [
    ("fig2", include_str!("../presets/fig2.json")),
    ("fig3", include_str!("../presets/fig3.json")),
    ("fig3-inset", include_str!("../presets/fig3_inset.json")),
    ("triangle", include_str!("../presets/triangle.json")),
    ("master", include_str!("../presets/master.json")),
    ("mcwf", include_str!("../presets/mcwf.json")),
    ("rates", include_str!("../presets/rates.json")),
    ("ising", include_str!("../presets/ising.json")),
];

pub fn preset(name: &str) -> Result<ExperimentConfig, CliError> {
    let text = PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, t)| *t)
        .ok_or_else(|| CliError::Config(format!("no preset named {name:?}")))?;
    parse_config(text, &format!("preset {name}"))
}

/// Parses a config document. A metadata sidecar, whose resolved configuration
/// sits under a top-level `"config"` key, is accepted as well.
pub fn parse_config(text: &str, origin: &str) -> Result<ExperimentConfig, CliError> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("{origin}: {e}")))?;
    let body = match value.get("config") {
        Some(inner) if value.get("experiment").is_none() => inner.clone(),
        _ => value,
    };
    let cfg: ExperimentConfig = serde_json::from_value(body).map_err(|e| {
        // Re-parse from text for line and column information.
        match serde_json::from_str::<ExperimentConfig>(text) {
            Err(located) if located.line() > 0 && !text.contains("\"config\"") => {
                CliError::Config(format!("{origin}: {located}"))
            }
            _ => CliError::Config(format!("{origin}: {e}")),
        }
    })?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text, &path.display().to_string())
}

fn mhz(nu: f64) -> f64 {
    TAU * nu
}

fn positive(field: &str, x: f64) -> Result<f64, CliError> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(CliError::Config(format!(
            "{field} must be positive and finite, got {x}"
        )))
    }
}

fn finite(field: &str, x: f64) -> Result<f64, CliError> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(CliError::Config(format!("{field} must be finite")))
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        let p = &self.physics;
        finite("physics.omega_mhz", p.omega_mhz)?;
        positive("physics.lifetime_ms", p.lifetime_ms)?;
        if p.omega_g_mhz.is_some() && p.omega_g_over_omega_r.is_some() {
            return Err(CliError::Config(
                "physics: give at most one of omega_g_mhz and omega_g_over_omega_r".into(),
            ));
        }
        if p.delta34_mhz.is_some() && p.delta34_over_delta33.is_some() {
            return Err(CliError::Config(
                "physics: give at most one of delta34_mhz and delta34_over_delta33".into(),
            ));
        }
        if p.delta33_mhz.is_none() && self.sweep.delta33_mhz.is_none() {
            return Err(CliError::Config(
                "physics.delta33_mhz is required unless sweep.delta33_mhz is set".into(),
            ));
        }
        let geometry = p.geometry.build()?;
        if let Some(init) = &p.initial {
            if init.chars().count() != geometry.n_sites() {
                return Err(CliError::Config(format!(
                    "physics.initial {init:?} must name one level per site ({} sites)",
                    geometry.n_sites()
                )));
            }
            ket_index(init, LOCAL_DIM)
                .map_err(|e| CliError::Config(format!("physics.initial: {e}")))?;
        }
        let s = &self.solver;
        let ends = [
            s.t_final_us.is_some(),
            s.rabi_periods.is_some(),
            s.t_final_j.is_some(),
        ];
        if ends.iter().filter(|&&b| b).count() > 1 {
            return Err(CliError::Config(
                "solver: give at most one of t_final_us, rabi_periods, t_final_j".into(),
            ));
        }
        for (name, v) in [
            ("solver.t_final_us", s.t_final_us),
            ("solver.rabi_periods", s.rabi_periods),
            ("solver.t_final_j", s.t_final_j),
            ("solver.dt_us", s.dt_us),
            ("solver.steady_window_j", s.steady_window_j),
            ("solver.steady_tolerance", s.steady_tolerance),
        ] {
            if let Some(x) = v {
                positive(name, x)?;
            }
        }
        for (name, v) in [
            ("solver.samples", s.samples),
            ("solver.sample_every", s.sample_every),
            ("solver.n_traj", s.n_traj),
        ] {
            if v == Some(0) {
                return Err(CliError::Config(format!("{name} must be at least 1")));
            }
        }
        if let Some(g) = &self.sweep.delta33_mhz {
            g.points("sweep.delta33_mhz")?;
        }
        if let Some(g) = &self.sweep.b_over_j {
            g.points("sweep.b_over_j")?;
        }
        Ok(())
    }

    pub fn geometry(&self) -> Result<LatticeGeometry, CliError> {
        self.physics.geometry.build()
    }

    pub fn seed(&self) -> u64 {
        self.solver.seed.unwrap_or(DEFAULT_SEED)
    }

    pub fn n_traj(&self) -> usize {
        self.solver.n_traj.unwrap_or(DEFAULT_N_TRAJ)
    }

    pub fn gamma(&self) -> f64 {
        1.0 / (self.physics.lifetime_ms * 1000.0)
    }

    /// Pump parameters in rad/µs at the given Δ33/2π (MHz).
    pub fn pump_params_at(&self, delta33_mhz: f64) -> Result<PumpParams, CliError> {
        let p = &self.physics;
        let omega1 = mhz(p.omega_mhz);
        let omega2 = mhz(p.omega2_mhz.unwrap_or(p.omega_mhz));
        let delta33 = mhz(finite("delta33_mhz", delta33_mhz)?);
        let delta34 = match (p.delta34_mhz, p.delta34_over_delta33) {
            (Some(v), _) => mhz(v),
            (None, Some(r)) => r * delta33,
            (None, None) => delta33,
        };
        let delta = p.delta_mhz.map(mhz).unwrap_or(delta33 / 2.0);
        let omega_g = match (p.omega_g_mhz, p.omega_g_over_omega_r) {
            (Some(v), _) => mhz(v),
            (None, Some(r)) => r * effective_rabi(omega1, delta33)?,
            (None, None) => 0.0,
        };
        let params = PumpParams {
            omega1,
            omega2,
            omega_g,
            delta,
            gamma: self.gamma(),
            delta33,
            delta34,
        };
        params.validate()?;
        Ok(params)
    }

    /// Pump parameters at the configured Δ33.
    pub fn pump_params(&self) -> Result<PumpParams, CliError> {
        let d = self
            .physics
            .delta33_mhz
            .ok_or_else(|| CliError::Config("physics.delta33_mhz is required".into()))?;
        self.pump_params_at(d)
    }

    pub fn initial_state(&self) -> Result<StateVector, CliError> {
        let n = self.geometry()?.n_sites();
        let label = self
            .physics
            .initial
            .clone()
            .unwrap_or_else(|| "1".repeat(n));
        let idx = ket_index(&label, LOCAL_DIM)?;
        Ok(StateVector::basis(LOCAL_DIM.pow(n as u32), idx)?)
    }

    /// Run length for the given parameters.
    pub fn t_final(&self, p: &PumpParams, default: TimeSpec) -> Result<f64, CliError> {
        let s = &self.solver;
        let spec = match (s.t_final_us, s.rabi_periods, s.t_final_j) {
            (Some(t), _, _) => TimeSpec::Micros(t),
            (_, Some(n), _) => TimeSpec::RabiPeriods(n),
            (_, _, Some(n)) => TimeSpec::InverseJ(n),
            _ => default,
        };
        spec.resolve(p)
    }

    pub fn steady_window_j(&self) -> f64 {
        self.solver
            .steady_window_j
            .unwrap_or(DEFAULT_STEADY_WINDOW_J)
    }

    pub fn steady_tolerance(&self) -> f64 {
        self.solver
            .steady_tolerance
            .unwrap_or(DEFAULT_STEADY_TOLERANCE)
    }

    /// Resolved parameters and derived quantities for the metadata block.
    pub fn derived(&self) -> serde_json::Value {
        let mut out = serde_json::Map::new();
        out.insert("gamma_per_us".into(), self.gamma().into());
        out.insert(
            "omega1_rad_per_us".into(),
            mhz(self.physics.omega_mhz).into(),
        );
        if self.physics.delta_mhz.is_none() {
            out.insert("delta_rule".into(), "delta33 / 2".into());
        }
        if let Ok(p) = self.pump_params() {
            out.insert("pump_params".into(), pump_json(&p));
            if let Ok(or) = effective_rabi(p.omega1, p.delta33) {
                out.insert("omega_r_rad_per_us".into(), or.into());
                if p.gamma > 0.0 {
                    out.insert("ising_j_per_us".into(), (or * or / (8.0 * p.gamma)).into());
                }
            }
        }
        serde_json::Value::Object(out)
    }
}

pub fn pump_json(p: &PumpParams) -> serde_json::Value {
    serde_json::json!({
        "omega1": p.omega1,
        "omega2": p.omega2,
        "omega_g": p.omega_g,
        "delta": p.delta,
        "gamma": p.gamma,
        "delta33": p.delta33,
        "delta34": p.delta34,
    })
}

/// How a run length is expressed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TimeSpec {
    Micros(f64),
    /// Multiples of 2π/Ω_R.
    RabiPeriods(f64),
    /// Multiples of 1/J with J = Ω_R²/(8γ).
    InverseJ(f64),
}

impl TimeSpec {
    pub fn resolve(self, p: &PumpParams) -> Result<f64, CliError> {
        let omega_r = || effective_rabi(p.omega1, p.delta33);
        Ok(match self {
            TimeSpec::Micros(t) => t,
            TimeSpec::RabiPeriods(n) => n * TAU / omega_r()?,
            TimeSpec::InverseJ(n) => {
                if !(p.gamma > 0.0) {
                    return Err(CliError::Config("t_final_j needs a finite lifetime".into()));
                }
                let or = omega_r()?;
                n * 8.0 * p.gamma / (or * or)
            }
        })
    }
}
