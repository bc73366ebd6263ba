//! Analytic rate-equation model for pumping into the singlet, its
//! closed-form equilibrium, the adiabatically eliminated two-photon
//! dynamics, and the mapping onto transverse-field Ising parameters.

use num_complex::Complex64 as C64;

use crate::model::PumpParams;
use crate::qops::{matrix_exponential, Operator};
use crate::{Error, Result};

/// Average AF population assumed when identifying the two-atom pumping rate
/// with the Ising coupling: J = (1 − P̄)·Ω_R²/(4γ).
pub const AF_AVERAGE_POPULATION: f64 = 0.5;

/// Inputs of the rate model, all in rad/µs (γ in 1/µs).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateModelParams {
    /// Single-atom Rabi frequency Ω.
    pub omega: f64,
    /// Effective two-atom Rabi frequency Ω_R.
    pub omega_r: f64,
    pub gamma: f64,
    pub delta33: f64,
    /// δ = Δ33 − Δ34.
    pub delta_small: f64,
}

impl RateModelParams {
    /// Rate-model view of a pumping configuration; Ω is taken from `omega1`.
    pub fn from_pump(p: &PumpParams) -> Result<Self> {
        Ok(RateModelParams {
            omega: p.omega1,
            omega_r: effective_rabi(p.omega1, p.delta33)?,
            gamma: p.gamma,
            delta33: p.delta33,
            delta_small: p.delta33 - p.delta34,
        })
    }

    fn validate(&self) -> Result<()> {
        let all = [
            self.omega,
            self.omega_r,
            self.gamma,
            self.delta33,
            self.delta_small,
        ];
        if all.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("rate-model parameters must be finite"));
        }
        Ok(())
    }
}

/// Probability flows into and out of the singlet from one- and two-atom
/// excitation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PumpRates {
    pub r1_in: f64,
    pub r1_out: f64,
    pub r2_in: f64,
    pub r2_out: f64,
}

impl PumpRates {
    pub fn net_inflow(&self) -> f64 {
        self.r1_in + self.r2_in - self.r1_out - self.r2_out
    }
}

/// Ω_R = (√2 Ω)²/Δ33.
pub fn effective_rabi(omega: f64, delta33: f64) -> Result<f64> {
    if delta33 == 0.0 {
        return Err(Error::invalid(
            "effective Rabi frequency needs delta33 != 0",
        ));
    }
    Ok(2.0 * omega * omega / delta33)
}

pub fn pump_rates(p: &RateModelParams, p_af: f64) -> PumpRates {
    let g = p.gamma;
    let g2 = g * g;
    let o2 = p.omega * p.omega / g2;
    let or2 = p.omega_r * p.omega_r / g2;
    let one_atom = o2 / (1.0 + p.delta33 * p.delta33 / g2 + 2.0 * o2);
    PumpRates {
        r1_in: (1.0 - p_af) * 2.0 * (g / 4.0) * one_atom,
        r1_out: p_af * 2.0 * (3.0 * g / 4.0) * one_atom,
        r2_in: (1.0 - p_af) * (g / 4.0) * or2 / (1.0 + 2.0 * or2),
        r2_out: p_af * (3.0 * g / 4.0) * or2
            / (1.0 + 4.0 * p.delta_small * p.delta_small / g2 + 2.0 * or2),
    }
}

/// Closed-form equilibrium singlet population.
///
/// Evaluated with every frequency expressed in units of γ so the polynomial
/// terms stay O(1) for large detunings.
pub fn paf_equilibrium(p: &RateModelParams) -> Result<f64> {
    p.validate()?;
    if p.gamma <= 0.0 {
        return Err(Error::Degenerate("equilibrium needs gamma > 0".into()));
    }
    let w2 = (p.omega / p.gamma).powi(2);
    let u2 = (p.omega_r / p.gamma).powi(2);
    let big = (p.delta33 / p.gamma).powi(2);
    let small = (p.delta_small / p.gamma).powi(2);
    let num = (1.0 + 4.0 * small + 2.0 * u2) * (u2 * (1.0 + big) + 2.0 * w2 * (1.0 + 3.0 * u2));
    let den = 4.0 * u2 * (1.0 + big) * (1.0 + small + 2.0 * u2)
        + 8.0 * w2 * (1.0 + 4.0 * small + 5.0 * u2 + 9.0 * small * u2 + 6.0 * u2 * u2);
    if !(den.is_finite() && num.is_finite()) || den == 0.0 {
        return Err(Error::Degenerate(format!(
            "equilibrium denominator vanishes or overflows (num {num:e}, den {den:e})"
        )));
    }
    Ok(num / den)
}

/// Large-detuning limit (1 + γ²/2Ω²)/(1 + 2γ²/Ω²).
pub fn paf_large_detuning_limit(omega: f64, gamma: f64) -> Result<f64> {
    if omega == 0.0 {
        return Err(Error::Degenerate("limit needs omega != 0".into()));
    }
    let r = (gamma / omega).powi(2);
    Ok((1.0 + r / 2.0) / (1.0 + 2.0 * r))
}

/// Outcome of integrating the three-amplitude two-photon system.
#[derive(Clone, Debug)]
pub struct AdiabaticCheck {
    /// Fitted angular frequency of the |c33|² oscillation.
    pub frequency: f64,
    /// 2Ω²/Δ33 for comparison.
    pub effective_rabi: f64,
    /// max | |c11|²+|s|²+|c33|² − 1 | over the run.
    pub max_norm_error: f64,
    pub times: Vec<f64>,
    pub c33_population: Vec<f64>,
}

impl AdiabaticCheck {
    pub fn relative_error(&self) -> f64 {
        (self.frequency - self.effective_rabi).abs() / self.effective_rabi.abs()
    }
}

/// Smallest Δ33/Ω accepted by [`coherent_adiabatic_check`].
pub const ADIABATIC_MIN_RATIO: f64 = 20.0;

/// Integrates the coupled c11, s, c33 amplitudes at Δ = Δ33/2 from c11 = 1
/// and fits the |c33|² oscillation frequency.
///
/// The fast phases e^{±iΔt} are removed by the substitution
/// s → s·e^{−iΔt}, c33 → c33·e^{−i(2Δ−Δ33)t}, which leaves a constant real
/// symmetric generator; the amplitudes are stepped with its exact
/// exponential, so the populations are those of the original equations.
pub fn coherent_adiabatic_check(omega: f64, delta33: f64, t_final: f64) -> Result<AdiabaticCheck> {
    if !(t_final > 0.0) || !delta33.is_finite() || !omega.is_finite() {
        return Err(Error::invalid("need finite omega, delta33 and t_final > 0"));
    }
    let omega_r = effective_rabi(omega, delta33)?;
    if omega == 0.0 {
        return Ok(AdiabaticCheck {
            frequency: 0.0,
            effective_rabi: omega_r,
            max_norm_error: 0.0,
            times: vec![0.0, t_final],
            c33_population: vec![0.0, 0.0],
        });
    }
    if (delta33 / omega).abs() < ADIABATIC_MIN_RATIO {
        return Err(Error::invalid(format!(
            "adiabatic regime needs |delta33/omega| >= {ADIABATIC_MIN_RATIO}"
        )));
    }
    let delta = delta33 / 2.0;
    let a = std::f64::consts::SQRT_2 * omega / 2.0;
    let generator = ndarray::array![
        [0.0, a, 0.0],
        [a, delta, a],
        [0.0, a, 2.0 * delta - delta33]
    ];
    let generator = Operator::from_real(generator)?;
    // resolve the fast Δ oscillation and the slow envelope
    let fast = 2.0 * std::f64::consts::PI / delta.abs().max(omega.abs());
    let n_steps = ((t_final / (fast / 8.0)).ceil() as usize).max(64);
    let dt = t_final / n_steps as f64;
    let step = matrix_exponential(&generator, C64::new(0.0, dt))?.to_dense();

    let mut amps = ndarray::array![C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)];
    let mut times = Vec::with_capacity(n_steps + 1);
    let mut pops = Vec::with_capacity(n_steps + 1);
    let mut max_norm_error = 0.0f64;
    times.push(0.0);
    pops.push(0.0);
    for k in 1..=n_steps {
        amps = step.dot(&amps);
        let norm: f64 = amps.iter().map(|z| z.norm_sqr()).sum();
        max_norm_error = max_norm_error.max((norm - 1.0).abs());
        times.push(k as f64 * dt);
        pops.push(amps[2].norm_sqr());
    }
    let frequency = fit_oscillation(&times, &pops)?;
    Ok(AdiabaticCheck {
        frequency,
        effective_rabi: omega_r,
        max_norm_error,
        times,
        c33_population: pops,
    })
}

/// Angular frequency of a 0↔1 population oscillation from its half-level
/// crossings (hysteresis at 1/4 and 3/4 rejects the fast ripple).
fn fit_oscillation(times: &[f64], pops: &[f64]) -> Result<f64> {
    let mut events = Vec::new();
    let mut high = pops[0] > 0.5;
    let mut armed = false;
    for k in 1..pops.len() {
        let p = pops[k];
        if !high {
            armed |= p < 0.25;
            if armed && p >= 0.5 {
                let (t0, t1, p0) = (times[k - 1], times[k], pops[k - 1]);
                events.push(t0 + (0.5 - p0) / (p - p0) * (t1 - t0));
                high = true;
                armed = false;
            }
        } else {
            armed |= p > 0.75;
            if armed && p < 0.5 {
                let (t0, t1, p0) = (times[k - 1], times[k], pops[k - 1]);
                events.push(t0 + (0.5 - p0) / (p - p0) * (t1 - t0));
                high = false;
                armed = false;
            }
        }
    }
    if events.len() < 2 {
        return Err(Error::Numeric(format!(
            "oscillation fit needs at least two half-level crossings, found {}",
            events.len()
        )));
    }
    // least-squares slope of event time against event index = half period
    let n = events.len() as f64;
    let mean_k = (n - 1.0) / 2.0;
    let mean_t = events.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (k, t) in events.iter().enumerate() {
        let dk = k as f64 - mean_k;
        sxy += dk * (t - mean_t);
        sxx += dk * dk;
    }
    let half_period = sxy / sxx;
    Ok(std::f64::consts::PI / half_period)
}

/// Transverse-field Ising parameters corresponding to a pumping setup.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IsingMapping {
    /// Spin-spin coupling J (1/µs).
    pub j: f64,
    /// Transverse field B = Ωg.
    pub b: f64,
    pub b_over_j: f64,
}

/// J = Ω_R²/(8γ), B = Ωg, B/J = 8γΩg/Ω_R².
pub fn ising_map(p: &PumpParams) -> Result<IsingMapping> {
    ising_map_with(p, AF_AVERAGE_POPULATION)
}

/// As [`ising_map`] with J = (1 − p_avg)·Ω_R²/(4γ).
pub fn ising_map_with(p: &PumpParams, p_avg: f64) -> Result<IsingMapping> {
    if !(p.gamma > 0.0) {
        return Err(Error::invalid("Ising mapping needs gamma > 0"));
    }
    let omega_r = effective_rabi(p.omega1, p.delta33)?;
    let j = (1.0 - p_avg) * omega_r * omega_r / (4.0 * p.gamma);
    if j == 0.0 {
        return Err(Error::Degenerate("Ising coupling J vanishes".into()));
    }
    Ok(IsingMapping {
        j,
        b: p.omega_g,
        b_over_j: p.omega_g / j,
    })
}

/// Ωg that realises a target B/J for otherwise fixed parameters.
pub fn omega_g_for_b_over_j(p: &PumpParams, b_over_j: f64) -> Result<f64> {
    let m = ising_map(&PumpParams { omega_g: 0.0, ..*p })?;
    Ok(b_over_j * m.j)
}
