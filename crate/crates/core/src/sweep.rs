//! Phase diagrams over (Δ, ε), critical drives and finite-size scaling.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{find_steady_state_from, GaussianState, Outcome, SteadyStateOptions};
use crate::error::{Error, Result};
use crate::fit::{fit_line, LineFit};
use crate::model::{build_profiles, effective_quadratic, ChainParams, EffectiveQuadratic};
use crate::topology::{build_nambu, local_winding_profile, svd_analysis};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    I,
    II,
    III,
    Unstable,
}

impl Phase {
    pub fn as_str(&self) -> &'static str {
        match self {
            Phase::I => "I",
            Phase::II => "II",
            Phase::III => "III",
            Phase::Unstable => "unstable",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhasePoint {
    pub delta: f64,
    pub epsilon: f64,
    pub outcome: Option<Outcome>,
    /// `(1/N) Σ_j |α_j|²`
    pub mean_density: f64,
    /// `max_j G_jj`
    pub max_fluct: f64,
    /// `|α_j|` per site.
    pub amplitude: Vec<f64>,
    /// `⟨b_j†b_j⟩` per site.
    pub fluctuations: Vec<f64>,
    /// Local winding numbers; `None` marks a local gap closing or an
    /// unconverged point.
    pub nu_profile: Vec<Option<i32>>,
    /// Density separating the low- and high-density phases, if any.
    pub rho_split: Option<f64>,
    pub phase: Phase,
    /// Zero-based last site of the first `ν = 1` run inside the bulk.
    pub interface: Option<usize>,
    pub t_converged: Option<f64>,
    pub residual: f64,
    /// Integration failure, if the point could not be evaluated.
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepOptions {
    pub steady: SteadyStateOptions,
    /// Start each scan point from the previous steady state.
    pub warm_start: bool,
    /// Worker threads for grid sweeps; `0` uses all cores.
    pub workers: usize,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            steady: SteadyStateOptions::default(),
            warm_start: false,
            workers: 0,
        }
    }
}

/// Density between the two turning points of the homogeneous mean-field
/// Kerr response `n((Δ' + 2Un)² + κ²/4) = ε²`, `Δ' = Δ + U + 2J cos φ`: their
/// geometric mean when the response is bistable, the inflection density when
/// it is merely steep, `None` without a Kerr resonance.
pub fn density_split(params: &ChainParams, delta: f64) -> Option<f64> {
    let u = params.kerr;
    if u == 0.0 {
        return None;
    }
    let dp = delta + u + 2.0 * params.hopping * params.phi.cos();
    let k2 = params.kappa * params.kappa;
    let density = |x: f64| (x - dp) / (2.0 * u);
    let disc = dp * dp - 0.75 * k2;
    if disc > 0.0 {
        let r = disc.sqrt();
        let (a, b) = (density((dp + r) / 3.0), density((dp - r) / 3.0));
        if a > 0.0 && b > 0.0 {
            return Some((a * b).sqrt());
        }
    }
    let n = density(dp / 3.0);
    (n > 0.0).then_some(n)
}

fn bulk_nu(point_nu: &[Option<i32>], bulk: std::ops::Range<usize>) -> impl Iterator<Item = Option<i32>> + '_ {
    bulk.filter_map(move |j| point_nu.get(j).copied())
}

pub fn classify_phase(point: &PhasePoint, params: &ChainParams) -> Phase {
    if point.outcome != Some(Outcome::Converged) {
        return Phase::Unstable;
    }
    if bulk_nu(&point.nu_profile, params.bulk()).any(|nu| nu == Some(1)) {
        return Phase::II;
    }
    match point.rho_split {
        Some(split) if point.mean_density >= split => Phase::III,
        _ => Phase::I,
    }
}

fn interface_site(nu: &[Option<i32>], bulk: std::ops::Range<usize>) -> Option<usize> {
    let start = bulk.clone().find(|&j| nu[j] == Some(1))?;
    let mut last = start;
    for j in start + 1..bulk.end {
        if nu[j] != Some(1) {
            break;
        }
        last = j;
    }
    Some(last)
}

fn evaluate(
    params: &ChainParams,
    initial: &GaussianState,
    opts: &SteadyStateOptions,
) -> (PhasePoint, Option<GaussianState>) {
    let n = params.sites;
    let mut point = PhasePoint {
        delta: params.delta,
        epsilon: params.epsilon,
        outcome: None,
        mean_density: f64::NAN,
        max_fluct: f64::NAN,
        amplitude: vec![f64::NAN; n],
        fluctuations: vec![f64::NAN; n],
        nu_profile: vec![None; n],
        rho_split: density_split(params, params.delta),
        phase: Phase::Unstable,
        interface: None,
        t_converged: None,
        residual: f64::NAN,
        error: None,
    };
    let run = build_profiles(params).and_then(|prof| find_steady_state_from(initial, params, &prof, opts));
    let report = match run {
        Ok(r) => r,
        Err(e) => {
            point.error = Some(e.to_string());
            return (point, None);
        }
    };
    let st = &report.state;
    point.outcome = Some(report.outcome);
    point.mean_density = st.total_density() / n as f64;
    point.fluctuations = st.fluctuations();
    point.max_fluct = point.fluctuations.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    point.amplitude = st.alpha.iter().map(|a| a.norm()).collect();
    point.t_converged = report.t_converged;
    point.residual = report.residual;
    if report.outcome == Outcome::Converged {
        match effective_quadratic(params, st.alpha.as_slice()).and_then(|e| local_winding_profile(&e, params)) {
            Ok(nu) => point.nu_profile = nu,
            Err(e) => point.error = Some(e.to_string()),
        }
    }
    point.phase = classify_phase(&point, params);
    point.interface = if point.phase == Phase::II {
        interface_site(&point.nu_profile, params.bulk())
    } else {
        None
    };
    (point, Some(report.state))
}

fn at(params: &ChainParams, delta: f64, epsilon: f64) -> ChainParams {
    let mut p = params.clone();
    p.delta = delta;
    p.epsilon = epsilon;
    p
}

/// Steady state from the vacuum at one `(Δ, ε)` and its classification.
pub fn phase_point(delta: f64, epsilon: f64, params: &ChainParams, opts: &SteadyStateOptions) -> PhasePoint {
    let p = at(params, delta, epsilon);
    evaluate(&p, &GaussianState::vacuum(p.sites), opts).0
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseDiagram {
    pub deltas: Vec<f64>,
    pub epsilons: Vec<f64>,
    /// Row-major in `(Δ index, ε index)`.
    pub points: Vec<PhasePoint>,
}

impl PhaseDiagram {
    pub fn get(&self, i_delta: usize, i_eps: usize) -> &PhasePoint {
        &self.points[i_delta * self.epsilons.len() + i_eps]
    }
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidParams(format!("cannot start worker pool: {e}")))
}

/// Every grid point from the vacuum, in parallel; output order is fixed.
pub fn phase_diagram(
    deltas: &[f64],
    epsilons: &[f64],
    params: &ChainParams,
    opts: &SweepOptions,
) -> Result<PhaseDiagram> {
    if deltas.is_empty() || epsilons.is_empty() {
        return Err(Error::InvalidParams("phase diagram grids must be non-empty".into()));
    }
    params.validate()?;
    let grid: Vec<(f64, f64)> = deltas
        .iter()
        .flat_map(|&d| epsilons.iter().map(move |&e| (d, e)))
        .collect();
    let points = pool(opts.workers)?.install(|| {
        grid.par_iter()
            .map(|&(d, e)| phase_point(d, e, params, &opts.steady))
            .collect::<Vec<_>>()
    });
    Ok(PhaseDiagram {
        deltas: deltas.to_vec(),
        epsilons: epsilons.to_vec(),
        points,
    })
}

/// Upward ε sweep at fixed Δ.
fn scan(delta: f64, epsilons: &[f64], params: &ChainParams, opts: &SweepOptions) -> Vec<PhasePoint> {
    if !opts.warm_start {
        return pool(opts.workers)
            .map(|pl| {
                pl.install(|| {
                    epsilons
                        .par_iter()
                        .map(|&e| phase_point(delta, e, params, &opts.steady))
                        .collect()
                })
            })
            .unwrap_or_else(|_| epsilons.iter().map(|&e| phase_point(delta, e, params, &opts.steady)).collect());
    }
    let mut initial = GaussianState::vacuum(params.sites);
    epsilons
        .iter()
        .map(|&e| {
            let p = at(params, delta, e);
            let (point, state) = evaluate(&p, &initial, &opts.steady);
            if let Some(mut s) = state {
                s.t = 0.0;
                initial = s;
            }
            point
        })
        .collect()
}

/// `start, start + step, ..` up to and including `end` (within rounding).
pub fn grid(start: f64, end: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(end >= start) || !start.is_finite() || !end.is_finite() {
        return Err(Error::InvalidParams(format!("bad grid {start}..{end} step {step}")));
    }
    let count = ((end - start) / step + 1e-9).floor() as usize;
    Ok((0..=count).map(|i| start + i as f64 * step).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalScan {
    pub delta: f64,
    pub epsilons: Vec<f64>,
    /// `ε_c^j`: midpoint of the steepest rise of `|α_j|`, per site.
    pub eps_c_per_site: Vec<f64>,
    /// First ε with a `ν = 1` bulk site.
    pub eps_c1: Option<f64>,
    /// First ε after `eps_c1` with no `ν = 1` bulk site left.
    pub eps_c2: Option<f64>,
    /// Zero-based bulk sites.
    pub bulk_range: (usize, usize),
    pub points: Vec<PhasePoint>,
}

fn steepest_rise(eps: &[f64], values: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::NEG_INFINITY);
    for i in 0..eps.len() - 1 {
        let g = (values[i + 1] - values[i]) / (eps[i + 1] - eps[i]);
        if g > best.1 {
            best = (i, g);
        }
    }
    best
}

pub fn critical_drive_scan(
    delta: f64,
    epsilon_range: (f64, f64),
    step: f64,
    params: &ChainParams,
    opts: &SweepOptions,
) -> Result<CriticalScan> {
    params.validate()?;
    let eps = grid(epsilon_range.0, epsilon_range.1, step)?;
    if eps.len() < 3 {
        return Err(Error::InvalidParams("critical scan needs at least three ε points".into()));
    }
    let points = scan(delta, &eps, params, opts);
    let n = params.sites;
    let eps_c_per_site = (0..n)
        .map(|j| {
            let a: Vec<f64> = points.iter().map(|p| p.amplitude[j]).collect();
            let (i, _) = steepest_rise(&eps, &a);
            0.5 * (eps[i] + eps[i + 1])
        })
        .collect();
    let bulk = params.bulk();
    let topo = |p: &PhasePoint| bulk_nu(&p.nu_profile, bulk.clone()).any(|nu| nu == Some(1));
    let c1 = points.iter().position(topo);
    let eps_c1 = c1.map(|i| eps[i]);
    let eps_c2 = c1.and_then(|i| {
        points[i..]
            .iter()
            .position(|p| p.outcome == Some(Outcome::Converged) && !topo(p))
            .map(|k| eps[i + k])
    });
    Ok(CriticalScan {
        delta,
        epsilons: eps,
        eps_c_per_site,
        eps_c1,
        eps_c2,
        bulk_range: (bulk.start, bulk.end),
        points,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScalingOptions {
    pub epsilon_range: (f64, f64),
    pub coarse_step: f64,
    pub fine_step: f64,
}

impl Default for ScalingOptions {
    fn default() -> Self {
        Self {
            epsilon_range: (36.0, 46.0),
            coarse_step: 0.5,
            fine_step: 0.02,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingFit {
    pub sizes: Vec<usize>,
    /// `d|α_{N/2}|/dε` at the critical drive of the central site.
    pub derivatives: Vec<f64>,
    /// Where each derivative was taken.
    pub critical_eps: Vec<f64>,
    pub exponent_a: f64,
    pub exponent_err: f64,
    pub fit: LineFit,
    pub xi: Option<f64>,
}

/// Largest central difference of the central-site amplitude, located by a
/// coarse scan and resolved on a fine grid around the steepest coarse rise.
pub fn critical_derivative(
    delta: f64,
    params: &ChainParams,
    sweep: &SweepOptions,
    opts: &ScalingOptions,
) -> Result<(f64, f64)> {
    let centre = params.sites / 2 - 1;
    let amp = |pts: &[PhasePoint]| -> Result<Vec<f64>> {
        pts.iter()
            .map(|p| match p.outcome {
                Some(Outcome::Converged) => Ok(p.amplitude[centre]),
                _ => Err(Error::Resolution(format!(
                    "N = {}: no steady state at ε = {}",
                    params.sites, p.epsilon
                ))),
            })
            .collect()
    };
    let coarse = grid(opts.epsilon_range.0, opts.epsilon_range.1, opts.coarse_step)?;
    let a = amp(&scan(delta, &coarse, params, sweep))?;
    let (i, _) = steepest_rise(&coarse, &a);
    if i == 0 || i + 2 == coarse.len() {
        return Err(Error::Resolution(format!(
            "N = {}: steepest rise at the edge of ε ∈ [{}, {}]; widen the range",
            params.sites, opts.epsilon_range.0, opts.epsilon_range.1
        )));
    }
    let fine = grid(coarse[i - 1], coarse[i + 2], opts.fine_step)?;
    let a = amp(&scan(delta, &fine, params, sweep))?;
    let h = opts.fine_step;
    let (k, d) = (1..fine.len() - 1)
        .map(|k| (k, (a[k + 1] - a[k - 1]) / (2.0 * h)))
        .fold((0, f64::NEG_INFINITY), |b, c| if c.1 > b.1 { c } else { b });
    if k == 1 || k + 2 == fine.len() {
        return Err(Error::Resolution(format!(
            "N = {}: fine-grid maximum on the bracket edge; use a smaller coarse step",
            params.sites
        )));
    }
    Ok((fine[k], d))
}

/// Power law `d|α_{N/2}|/dε ∝ N^a` across chain lengths.
pub fn finite_size_scaling(
    sizes: &[usize],
    delta: f64,
    params: &ChainParams,
    sweep: &SweepOptions,
    opts: &ScalingOptions,
) -> Result<ScalingFit> {
    if sizes.len() < 2 {
        return Err(Error::InvalidParams("finite-size scaling needs at least two sizes".into()));
    }
    let mut derivatives = Vec::new();
    let mut critical_eps = Vec::new();
    for &n in sizes {
        let mut p = params.clone();
        p.sites = n;
        p.border = crate::model::default_border(n);
        let (e, d) = critical_derivative(delta, &p, sweep, opts)?;
        log::info!("N = {n}: d|α|/dε = {d:.4} at ε = {e:.3}");
        critical_eps.push(e);
        derivatives.push(d);
    }
    let x: Vec<f64> = sizes.iter().map(|&n| (n as f64).ln()).collect();
    let y: Vec<f64> = derivatives.iter().map(|d| d.abs().ln()).collect();
    let fit = fit_line(&x, &y)?;
    Ok(ScalingFit {
        sizes: sizes.to_vec(),
        derivatives,
        critical_eps,
        exponent_a: fit.slope,
        exponent_err: fit.slope_err,
        fit,
        xi: None,
    })
}

/// Smallest singular value of ℍ for homogeneous effective parameters at
/// each length, and the decay length `ξ` of `s_min ∝ e^{-N/ξ}`.
pub fn smallest_singular_scaling(
    sizes: &[usize],
    delta_tilde: f64,
    g: num_complex::Complex64,
    params: &ChainParams,
) -> Result<(Vec<f64>, Vec<f64>, f64, LineFit)> {
    let mut s_min = Vec::new();
    let mut frob = Vec::new();
    for &n in sizes {
        let mut p = params.clone();
        p.sites = n;
        let s = svd_analysis(&build_nambu(&EffectiveQuadratic::uniform(n, delta_tilde, g), &p)?);
        s_min.push(s.s_min);
        frob.push(s.frobenius_g);
    }
    let x: Vec<f64> = sizes.iter().map(|&n| n as f64).collect();
    let y: Vec<f64> = s_min.iter().map(|s| s.ln()).collect();
    let fit = fit_line(&x, &y)?;
    Ok((s_min, frob, -1.0 / fit.slope, fit))
}
