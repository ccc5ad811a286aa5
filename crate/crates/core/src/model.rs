//! Chain parameters, site profiles, gauge choice and the effective quadratic
//! (linearized) parameters around a mean-field configuration.
//!
//! Energies are in units of the hopping rate `J`; the library never assumes
//! `J = 1` internally, but every default does.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shape of the drive amplitude and detuning across the chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    /// `ε_j = ε`, `Δ_j = Δ` everywhere (sharp open boundaries).
    Homogeneous,
    /// `ε_j = ε tanh(m/N₀)`, `Δ_j = Δ tanh²(m/N₀)` with `m = min(j, N+1-j)`.
    TanhBorder,
}

/// Where the chiral phase lives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gauge {
    /// Real hopping, drive phases `ψ_j = jφ`.
    DrivePhase,
    /// Hopping phase `e^{iφ}`, real drive. Canonical gauge for the dynamics.
    HoppingPhase,
}

/// Static parameters of the chain.
///
/// `phi` is the physical chiral phase; which term carries it is decided by
/// `gauge` (see [`ChainParams::hopping_phase`] and [`SiteProfiles::psi`]).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainParams {
    /// Number of sites `N`.
    pub sites: usize,
    /// Hopping rate `J`.
    pub hopping: f64,
    /// Chiral phase `φ` (radians).
    pub phi: f64,
    /// Kerr non-linearity `U`.
    pub kerr: f64,
    /// Uniform loss rate `κ`.
    pub kappa: f64,
    /// Bulk detuning `Δ`.
    pub delta: f64,
    /// Bulk drive amplitude `ε`.
    pub epsilon: f64,
    /// Border size `N₀` of the tanh ramp.
    pub border: usize,
    pub profile: ProfileKind,
    pub gauge: Gauge,
}

/// Default border size: `max(2, round(N/8))`, i.e. 5 for a 40-site chain.
pub fn default_border(sites: usize) -> usize {
    ((sites as f64 / 8.0).round() as usize).max(2)
}

impl ChainParams {
    /// Chain with the reference parameters `J = 1`, `φ = π/3`, `κ = 1`,
    /// `U = -2e-4`, smooth borders, hopping-phase gauge.
    pub fn new(sites: usize, delta: f64, epsilon: f64) -> Self {
        Self {
            sites,
            hopping: 1.0,
            phi: std::f64::consts::FRAC_PI_3,
            kerr: -2e-4,
            kappa: 1.0,
            delta,
            epsilon,
            border: default_border(sites),
            profile: ProfileKind::TanhBorder,
            gauge: Gauge::HoppingPhase,
        }
    }

    /// Single driven cavity (`N = 1`, `J = 0`).
    pub fn single_site(epsilon: f64, delta: f64, kappa: f64, kerr: f64) -> Self {
        Self {
            sites: 1,
            hopping: 0.0,
            phi: 0.0,
            kerr,
            kappa,
            delta,
            epsilon,
            border: 1,
            profile: ProfileKind::Homogeneous,
            gauge: Gauge::HoppingPhase,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParams(msg));
        if self.sites < 1 {
            return bad("N must be at least 1".into());
        }
        for (name, v) in [
            ("J", self.hopping),
            ("phi", self.phi),
            ("U", self.kerr),
            ("kappa", self.kappa),
            ("delta", self.delta),
            ("epsilon", self.epsilon),
        ] {
            if !v.is_finite() {
                return bad(format!("{name} must be finite, got {v}"));
            }
        }
        if self.kappa < 0.0 {
            return bad(format!("kappa must be >= 0, got {}", self.kappa));
        }
        if self.epsilon < 0.0 {
            return bad(format!("epsilon must be >= 0, got {}", self.epsilon));
        }
        if self.border < 1 {
            return bad("border size N0 must be at least 1".into());
        }
        if self.profile == ProfileKind::TanhBorder && 2 * self.border >= self.sites {
            return bad(format!(
                "tanh border needs 2*N0 < N (N0 = {}, N = {})",
                self.border, self.sites
            ));
        }
        Ok(())
    }

    /// Phase carried by the hopping term in the current gauge.
    pub fn hopping_phase(&self) -> f64 {
        match self.gauge {
            Gauge::HoppingPhase => self.phi,
            Gauge::DrivePhase => 0.0,
        }
    }

    /// Bulk sites `N₀ < j < N - N₀` as zero-based indices.
    pub fn bulk(&self) -> std::ops::Range<usize> {
        // one-based j in (N0, N - N0) -> zero-based [N0, N - N0 - 1)
        let lo = self.border.min(self.sites);
        let hi = self.sites.saturating_sub(self.border + 1).max(lo);
        lo..hi
    }
}

/// Per-site drive amplitudes, detunings and drive phases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteProfiles {
    pub epsilon: Vec<f64>,
    pub delta: Vec<f64>,
    pub psi: Vec<f64>,
}

impl SiteProfiles {
    pub fn len(&self) -> usize {
        self.epsilon.len()
    }

    pub fn is_empty(&self) -> bool {
        self.epsilon.is_empty()
    }
}

pub fn build_profiles(params: &ChainParams) -> Result<SiteProfiles> {
    params.validate()?;
    let n = params.sites;
    let (epsilon, delta) = match params.profile {
        ProfileKind::Homogeneous => (vec![params.epsilon; n], vec![params.delta; n]),
        ProfileKind::TanhBorder => {
            let n0 = params.border as f64;
            (1..=n)
                .map(|j| {
                    let m = j.min(n + 1 - j) as f64;
                    let th = (m / n0).tanh();
                    (params.epsilon * th, params.delta * th * th)
                })
                .unzip()
        }
    };
    let psi = match params.gauge {
        Gauge::HoppingPhase => vec![0.0; n],
        Gauge::DrivePhase => (1..=n).map(|j| j as f64 * params.phi).collect(),
    };
    Ok(SiteProfiles {
        epsilon,
        delta,
        psi,
    })
}

/// Site phases `θ_j` of the mode rotation `a_j → a_j e^{iθ_j}` that carries
/// `source` gauge into `target`. Zero when the gauges already agree.
pub fn gauge_rotation(sites: usize, phi: f64, source: Gauge, target: Gauge) -> Vec<f64> {
    let sign = match (source, target) {
        (Gauge::DrivePhase, Gauge::HoppingPhase) => 1.0,
        (Gauge::HoppingPhase, Gauge::DrivePhase) => -1.0,
        _ => 0.0,
    };
    (1..=sites).map(|j| sign * j as f64 * phi).collect()
}

/// Moves the phase gradient between the drive phases and the hopping term.
///
/// The rotation `a_j → a_j e^{iθ_j}` shifts the drive phases by `-θ_j` and the
/// hopping phase by `θ_{j+1} - θ_j`; with `θ_j = ±jφ` the second is exactly the
/// switch recorded in `params.gauge`. Drive amplitudes and detunings are
/// untouched. Assumes the incoming drive phases follow the `ψ_j = jφ` pattern of
/// [`build_profiles`] when leaving the drive-phase gauge.
pub fn gauge_transform(
    profiles: &SiteProfiles,
    params: &ChainParams,
    target: Gauge,
) -> (SiteProfiles, ChainParams) {
    let theta = gauge_rotation(profiles.len(), params.phi, params.gauge, target);
    let psi = profiles
        .psi
        .iter()
        .zip(&theta)
        .map(|(p, t)| p - t)
        .collect();
    let out = SiteProfiles {
        epsilon: profiles.epsilon.clone(),
        delta: profiles.delta.clone(),
        psi,
    };
    let mut params = params.clone();
    params.gauge = target;
    (out, params)
}

/// Linearized on-site parameters around a mean field `α`:
/// `Δ̃_j = Δ_j + 4U|α_j|² + U` and `g_j = U α_j²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectiveQuadratic {
    pub delta_tilde: Vec<f64>,
    pub g: Vec<Complex64>,
}

impl EffectiveQuadratic {
    pub fn from_profiles(profiles: &SiteProfiles, kerr: f64, alpha: &[Complex64]) -> Result<Self> {
        if alpha.len() != profiles.len() {
            return Err(Error::Dimension {
                context: "effective_quadratic",
                expected: profiles.len(),
                got: alpha.len(),
            });
        }
        let delta_tilde = profiles
            .delta
            .iter()
            .zip(alpha)
            .map(|(d, a)| d + 4.0 * kerr * a.norm_sqr() + kerr)
            .collect();
        let g = alpha.iter().map(|a| kerr * a * a).collect();
        Ok(Self { delta_tilde, g })
    }

    /// Site-independent parameters, for homogeneous-chain studies.
    pub fn uniform(sites: usize, delta_tilde: f64, g: Complex64) -> Self {
        Self {
            delta_tilde: vec![delta_tilde; sites],
            g: vec![g; sites],
        }
    }

    pub fn len(&self) -> usize {
        self.delta_tilde.len()
    }

    pub fn is_empty(&self) -> bool {
        self.delta_tilde.is_empty()
    }
}

pub fn effective_quadratic(params: &ChainParams, alpha: &[Complex64]) -> Result<EffectiveQuadratic> {
    let profiles = build_profiles(params)?;
    EffectiveQuadratic::from_profiles(&profiles, params.kerr, alpha)
}
