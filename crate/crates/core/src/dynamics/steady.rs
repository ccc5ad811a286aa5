//! Time evolution from the vacuum and steady-state detection.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::integrator::{self, Flow, IntegrationStats, StepControl, Termination};
use super::rhs::{Ansatz, ChainSystem};
use super::state::GaussianState;
use crate::error::{Error, Result};
use crate::model::{ChainParams, SiteProfiles};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IntegrateOptions {
    pub dt_init: Option<f64>,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub t_max: f64,
    /// Minimum spacing of stored samples; `0` stores every accepted step.
    pub sample_interval: f64,
    pub ansatz: Ansatz,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        Self {
            dt_init: None,
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            t_max: 200.0,
            sample_interval: 0.1,
            ansatz: Ansatz::Gaussian,
        }
    }
}

impl IntegrateOptions {
    fn step_control(&self) -> StepControl {
        StepControl {
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            h_init: self.dt_init,
            ..StepControl::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.t_max > 0.0 && self.t_max.is_finite()) {
            return Err(Error::InvalidParams(format!("t_max must be positive, got {}", self.t_max)));
        }
        if !(self.sample_interval >= 0.0) {
            return Err(Error::InvalidParams("sample_interval must be non-negative".into()));
        }
        if let Some(h) = self.dt_init {
            if !(h > 0.0) {
                return Err(Error::InvalidParams(format!("dt_init must be positive, got {h}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SteadyStateOptions {
    #[serde(flatten)]
    pub integrate: IntegrateOptions,
    pub tol_ss: f64,
    /// Duration over which the residual test must hold without interruption.
    pub window: f64,
    /// Σ_j |α_j|² above this counts as divergence.
    pub divergence_guard: f64,
    /// Fraction of the run, counted from the end, used for the envelope.
    pub tail_fraction: f64,
    /// Relative envelope width above which a non-converged run is oscillating.
    pub oscillation_band: f64,
    /// Stop this long after the convergence window closed; `None` runs to `t_max`.
    pub settle: Option<f64>,
}

impl Default for SteadyStateOptions {
    fn default() -> Self {
        Self {
            integrate: IntegrateOptions::default(),
            tol_ss: 1e-6,
            window: 1.0,
            divergence_guard: 1e12,
            tail_fraction: 0.25,
            oscillation_band: 1e-4,
            settle: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Converged,
    Oscillating,
    Diverged,
    TimedOut,
}

impl Outcome {
    pub fn as_str(&self) -> &'static str {
        match self {
            Outcome::Converged => "converged",
            Outcome::Oscillating => "oscillating",
            Outcome::Diverged => "diverged",
            Outcome::TimedOut => "timed_out",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteadyStateReport {
    pub outcome: Outcome,
    pub state: GaussianState,
    /// Sup-norm of the right-hand side at the final time.
    pub residual: f64,
    /// Start of the final uninterrupted stretch meeting the residual test.
    pub t_converged: Option<f64>,
    /// Min and max of Σ_j |α_j|² over the tail window.
    pub envelope: (f64, f64),
}

/// Stored point of a trajectory: mean fields and fluctuation populations.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub alpha: Vec<Complex64>,
    pub g_diag: Vec<f64>,
}

impl Sample {
    fn from_flat(t: f64, n: usize, y: &[Complex64]) -> Self {
        let g_diag = if y.len() > n {
            (0..n).map(|j| y[n + j + j * n].re).collect()
        } else {
            vec![0.0; n]
        };
        Self {
            t,
            alpha: y[..n].to_vec(),
            g_diag,
        }
    }

    pub fn total_density(&self) -> f64 {
        self.alpha.iter().map(|a| a.norm_sqr()).sum()
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub final_state: GaussianState,
    pub stats: IntegrationStats,
}

fn initial_flat(initial: &GaussianState, n: usize, ansatz: Ansatz) -> Result<Vec<Complex64>> {
    initial.check_dims(n)?;
    Ok(match ansatz {
        Ansatz::Gaussian => initial.to_flat(),
        Ansatz::MeanField => initial.alpha.as_slice().to_vec(),
    })
}

/// Integrates the equations of motion from `initial` up to `opts.t_max`.
pub fn integrate(
    initial: &GaussianState,
    params: &ChainParams,
    profiles: &SiteProfiles,
    opts: &IntegrateOptions,
) -> Result<Trajectory> {
    opts.validate()?;
    let n = params.sites;
    let sys = ChainSystem::new(params, profiles, opts.ansatz)?;
    let mut y = initial_flat(initial, n, opts.ansatz)?;
    let mut samples = Vec::new();
    let mut next_sample = initial.t;
    let t_end = initial.t + opts.t_max;
    let stats = integrator::integrate(&sys, initial.t, &mut y, t_end, &opts.step_control(), |t, y, _| {
        if t >= next_sample || t >= t_end {
            samples.push(Sample::from_flat(t, n, y));
            next_sample = t + opts.sample_interval;
        }
        Flow::Continue
    })?;
    if stats.termination == Termination::Diverged {
        return Err(Error::Divergence { t: stats.t_end });
    }
    Ok(Trajectory {
        samples,
        final_state: GaussianState::from_flat(stats.t_end, n, &y),
        stats,
    })
}

/// Runs from the vacuum and classifies the long-time behaviour.
pub fn find_steady_state(
    params: &ChainParams,
    profiles: &SiteProfiles,
    opts: &SteadyStateOptions,
) -> Result<SteadyStateReport> {
    find_steady_state_from(&GaussianState::vacuum(params.sites), params, profiles, opts)
}

pub fn find_steady_state_from(
    initial: &GaussianState,
    params: &ChainParams,
    profiles: &SiteProfiles,
    opts: &SteadyStateOptions,
) -> Result<SteadyStateReport> {
    let io = &opts.integrate;
    io.validate()?;
    if !(opts.tol_ss > 0.0 && opts.window >= 0.0 && opts.tail_fraction > 0.0 && opts.tail_fraction <= 1.0) {
        return Err(Error::InvalidParams(
            "tol_ss > 0, window ≥ 0 and tail_fraction in (0, 1] required".into(),
        ));
    }
    let n = params.sites;
    let sys = ChainSystem::new(params, profiles, io.ansatz)?.with_divergence_guard(opts.divergence_guard);
    let mut y = initial_flat(initial, n, io.ansatz)?;
    let t0 = initial.t;
    let t_end = t0 + io.t_max;
    let tail_start = t_end - opts.tail_fraction * io.t_max;

    let mut since: Option<f64> = None;
    let mut residual = f64::INFINITY;
    let mut envelope = (f64::INFINITY, f64::NEG_INFINITY);
    let stats = integrator::integrate(&sys, t0, &mut y, t_end, &io.step_control(), |t, y, dy| {
        let scale = 1.0 + y.iter().fold(0.0f64, |m, z| m.max(z.norm()));
        residual = dy.iter().fold(0.0f64, |m, z| m.max(z.norm()));
        if residual < opts.tol_ss * scale {
            let start = *since.get_or_insert(t);
            if let Some(extra) = opts.settle {
                if t - start >= opts.window + extra {
                    return Flow::Stop;
                }
            }
        } else {
            since = None;
        }
        if t >= tail_start {
            let total: f64 = y[..n].iter().map(|a| a.norm_sqr()).sum();
            envelope = (envelope.0.min(total), envelope.1.max(total));
        }
        Flow::Continue
    })?;
    let state = GaussianState::from_flat(stats.t_end, n, &y);
    if !envelope.0.is_finite() {
        let total = state.total_density();
        envelope = (total, total);
    }

    let converged = since.filter(|&s| stats.t_end - s >= opts.window);
    let outcome = if stats.termination == Termination::Diverged {
        Outcome::Diverged
    } else if converged.is_some() {
        Outcome::Converged
    } else {
        let (lo, hi) = envelope;
        let mid = 0.5 * (lo + hi);
        if hi.is_finite() && hi - lo > opts.oscillation_band * mid.max(f64::MIN_POSITIVE) {
            Outcome::Oscillating
        } else {
            Outcome::TimedOut
        }
    };
    log::debug!(
        "steady state: {} at t = {:.3} after {} steps (residual {:.3e})",
        outcome.as_str(),
        stats.t_end,
        stats.accepted,
        residual
    );
    Ok(SteadyStateReport {
        outcome,
        state,
        residual,
        t_converged: if outcome == Outcome::Converged { converged } else { None },
        envelope,
    })
}
