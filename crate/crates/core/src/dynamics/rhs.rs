//! Gaussian-ansatz equations of motion of the driven-dissipative chain.
//!
//! The correlator equations are assembled as an unsymmetrized expression
//! `X_jk` (resp. `Y_jk`) and then closed with `dG = X + X†` and `dF = Y + Yᵀ`,
//! so Hermiticity of `G` and symmetry of `F` are preserved exactly. Neighbour
//! terms that would reach sites `0` or `N+1` are dropped (open chain).

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::integrator::OdeSystem;
use super::state::{GaussianRates, GaussianState};
use crate::error::{Error, Result};
use crate::model::{ChainParams, SiteProfiles};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Level of the moment closure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ansatz {
    /// Mean fields plus Wick-factorized second moments.
    #[default]
    Gaussian,
    /// Coherent-state ansatz: `G = F = 0`, only `α` evolves.
    MeanField,
}

/// Chain coefficients in the form consumed by the flat right-hand side.
#[derive(Debug, Clone)]
pub struct ChainSystem {
    n: usize,
    /// `ε_j e^{-iψ_j}`
    drive: Vec<Complex64>,
    detuning: Vec<f64>,
    hopping: f64,
    /// `e^{-iφ}` of the hopping term in the current gauge.
    hop_phase: Complex64,
    kerr: f64,
    kappa: f64,
    ansatz: Ansatz,
    divergence_guard: f64,
}

impl ChainSystem {
    pub fn new(params: &ChainParams, profiles: &SiteProfiles, ansatz: Ansatz) -> Result<Self> {
        params.validate()?;
        let n = params.sites;
        for len in [profiles.epsilon.len(), profiles.delta.len(), profiles.psi.len()] {
            if len != n {
                return Err(Error::Dimension {
                    context: "site profiles",
                    expected: n,
                    got: len,
                });
            }
        }
        let drive = profiles
            .epsilon
            .iter()
            .zip(&profiles.psi)
            .map(|(&e, &p)| Complex64::from_polar(e, -p))
            .collect();
        Ok(Self {
            n,
            drive,
            detuning: profiles.delta.clone(),
            hopping: params.hopping,
            hop_phase: Complex64::from_polar(1.0, -params.hopping_phase()),
            kerr: params.kerr,
            kappa: params.kappa,
            ansatz,
            divergence_guard: f64::INFINITY,
        })
    }

    /// Treat `Σ_j |α_j|²` above `guard` (or any non-finite value) as divergence.
    pub fn with_divergence_guard(mut self, guard: f64) -> Self {
        self.divergence_guard = guard;
        self
    }

    pub fn sites(&self) -> usize {
        self.n
    }

    pub fn ansatz(&self) -> Ansatz {
        self.ansatz
    }

    fn mean_field_part(&self, y: &[Complex64], gd: &[Complex64], fd: &[Complex64], da: &mut [Complex64]) {
        let n = self.n;
        let (u, j_hop, em) = (self.kerr, self.hopping, self.hop_phase);
        let ep = em.conj();
        let alpha = &y[..n];
        for j in 0..n {
            let a = alpha[j];
            let mut hop = Complex64::new(0.0, 0.0);
            if j + 1 < n {
                hop += alpha[j + 1] * em;
            }
            if j > 0 {
                hop += alpha[j - 1] * ep;
            }
            let kerr =
                2.0 * u * (a.norm_sqr() * a + 2.0 * a * gd[j] + a.conj() * fd[j]);
            let bracket = self.drive[j] + (self.detuning[j] + u) * a + kerr + j_hop * hop;
            da[j] = -I * bracket - 0.5 * self.kappa * a;
        }
    }

    fn correlator_part(&self, y: &[Complex64], dy: &mut [Complex64]) {
        let n = self.n;
        let nn = n * n;
        let (u, j_hop, em) = (self.kerr, self.hopping, self.hop_phase);
        let ep = em.conj();
        let half_kappa = 0.5 * self.kappa;
        let alpha = &y[..n];
        let g = &y[n..n + nn];
        let f = &y[n + nn..n + 2 * nn];
        let (dg, df) = dy[n..].split_at_mut(nn);
        let idx = |j: usize, k: usize| j + k * n;

        for k in 0..n {
            let ak2 = alpha[k].norm_sqr();
            let fkk = f[idx(k, k)];
            for j in 0..n {
                let jk = idx(j, k);
                let aj = alpha[j];
                let aj2 = aj.norm_sqr();
                let gjj = g[idx(j, j)];
                let fjj = f[idx(j, j)];
                let (gjk, fjk) = (g[jk], f[jk]);

                // normal correlator, one half of the (j <-> k)* pair
                let mut x = I
                    * u
                    * (2.0 * aj.conj() * aj.conj() * fjk
                        + 4.0 * aj2 * gjk
                        + 2.0 * fjk * fjj.conj()
                        + 4.0 * gjj * gjk)
                    + I * self.detuning[j] * gjk
                    - half_kappa * gjk;
                let mut hop = Complex64::new(0.0, 0.0);
                if j > 0 {
                    hop += g[idx(j - 1, k)];
                }
                if k + 1 < n {
                    hop -= g[idx(j, k + 1)];
                }
                x += I * j_hop * hop * em;
                dg[jk] = x;

                // anomalous correlator, one half of the (j <-> k) pair
                let mut inner = 4.0 * ak2 * fjk
                    + 2.0 * aj * aj * gjk
                    + 4.0 * gjj * fjk
                    + 2.0 * g[idx(k, j)] * fkk
                    + fjk;
                if j == k {
                    inner += aj * aj + fjj;
                }
                let mut yv = -I * u * inner - I * self.detuning[j] * fjk - half_kappa * fjk;
                let mut fhop = Complex64::new(0.0, 0.0);
                if k + 1 < n {
                    fhop += f[idx(j, k + 1)] * em;
                }
                if k > 0 {
                    fhop += f[idx(j, k - 1)] * ep;
                }
                yv -= I * j_hop * fhop;
                df[jk] = yv;
            }
        }

        for k in 0..n {
            let kk = idx(k, k);
            dg[kk] = Complex64::new(2.0 * dg[kk].re, 0.0);
            df[kk] = 2.0 * df[kk];
            for j in 0..k {
                let (jk, kj) = (idx(j, k), idx(k, j));
                let (a, b) = (dg[jk], dg[kj]);
                dg[jk] = a + b.conj();
                dg[kj] = b + a.conj();
                let s = df[jk] + df[kj];
                df[jk] = s;
                df[kj] = s;
            }
        }
    }
}

impl OdeSystem for ChainSystem {
    fn dim(&self) -> usize {
        match self.ansatz {
            Ansatz::Gaussian => self.n + 2 * self.n * self.n,
            Ansatz::MeanField => self.n,
        }
    }

    fn rhs(&self, _t: f64, y: &[Complex64], dy: &mut [Complex64]) {
        let n = self.n;
        match self.ansatz {
            Ansatz::MeanField => {
                let zeros = vec![Complex64::new(0.0, 0.0); n];
                self.mean_field_part(y, &zeros, &zeros, &mut dy[..n]);
            }
            Ansatz::Gaussian => {
                let nn = n * n;
                let gd: Vec<Complex64> = (0..n).map(|j| y[n + j + j * n]).collect();
                let fd: Vec<Complex64> = (0..n).map(|j| y[n + nn + j + j * n]).collect();
                self.mean_field_part(y, &gd, &fd, &mut dy[..n]);
                self.correlator_part(y, dy);
            }
        }
    }

    fn project(&self, y: &mut [Complex64]) {
        if self.ansatz == Ansatz::MeanField {
            return;
        }
        let n = self.n;
        let nn = n * n;
        let (g, f) = y[n..].split_at_mut(nn);
        for k in 0..n {
            g[k + k * n].im = 0.0;
            for j in 0..k {
                let (jk, kj) = (j + k * n, k + j * n);
                let h = 0.5 * (g[jk] + g[kj].conj());
                g[jk] = h;
                g[kj] = h.conj();
                let s = 0.5 * (f[jk] + f[kj]);
                f[jk] = s;
                f[kj] = s;
            }
        }
    }

    fn diverged(&self, y: &[Complex64]) -> bool {
        let total: f64 = y[..self.n].iter().map(|a| a.norm_sqr()).sum();
        !(total <= self.divergence_guard) || y.iter().any(|z| !z.re.is_finite() || !z.im.is_finite())
    }
}

/// Time derivative of the Gaussian state.
pub fn gaussian_rhs(
    state: &GaussianState,
    params: &ChainParams,
    profiles: &SiteProfiles,
) -> Result<GaussianRates> {
    state.check_dims(params.sites)?;
    let sys = ChainSystem::new(params, profiles, Ansatz::Gaussian)?;
    let y = state.to_flat();
    let mut dy = vec![Complex64::new(0.0, 0.0); y.len()];
    sys.rhs(state.t, &y, &mut dy);
    let d = GaussianState::from_flat(state.t, params.sites, &dy);
    Ok(GaussianRates {
        alpha: d.alpha,
        g: d.g,
        f: d.f,
    })
}

/// `dα/dt` of the coherent-state ansatz (`G = F = 0`).
pub fn meanfield_rhs(
    alpha: &[Complex64],
    params: &ChainParams,
    profiles: &SiteProfiles,
) -> Result<DVector<Complex64>> {
    if alpha.len() != params.sites {
        return Err(Error::Dimension {
            context: "meanfield_rhs",
            expected: params.sites,
            got: alpha.len(),
        });
    }
    let sys = ChainSystem::new(params, profiles, Ansatz::MeanField)?;
    let mut dy = vec![Complex64::new(0.0, 0.0); alpha.len()];
    sys.rhs(0.0, alpha, &mut dy);
    Ok(DVector::from_vec(dy))
}
