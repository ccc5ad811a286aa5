//! Non-Hermitian topology of the linearized fluctuations.
//!
//! In the Nambu basis `(b_1..b_N, b_1†..b_N†)` the fluctuations obey
//! `d𝖻/dt = -iℍ𝖻 + noise`. All functions here expect the effective parameters
//! of the hopping-phase gauge, where a quasi-homogeneous steady state has
//! quasi-homogeneous `g_j`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fit::{fit_line, LineFit};
use crate::model::{ChainParams, EffectiveQuadratic, Gauge};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// Default number of Brillouin-zone points before refinement.
pub const DEFAULT_K_POINTS: usize = 1024;
const MAX_K_POINTS: usize = 1 << 20;
const INTEGRALITY_TOL: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct NambuMatrix {
    pub h: DMatrix<Complex64>,
}

impl NambuMatrix {
    /// Number of sites `N` (ℍ is `2N × 2N`).
    pub fn sites(&self) -> usize {
        self.h.nrows() / 2
    }

    /// Hermitian hopping block `D`.
    pub fn d_block(&self) -> DMatrix<Complex64> {
        let n = self.sites();
        let mut d = self.h.view((0, 0), (n, n)).into_owned();
        let k = self.kappa();
        for j in 0..n {
            d[(j, j)] += I * 0.5 * k;
        }
        d
    }

    /// Pairing block `K = diag(2g_j)`.
    pub fn k_block(&self) -> DMatrix<Complex64> {
        let n = self.sites();
        self.h.view((0, n), (n, n)).into_owned()
    }

    fn kappa(&self) -> f64 {
        // loss enters as the common anti-Hermitian part of both diagonal blocks
        let n = self.sites();
        let tr: Complex64 = (0..2 * n).map(|j| self.h[(j, j)]).sum();
        -2.0 * tr.im / (2 * n) as f64
    }

    pub fn norm(&self) -> f64 {
        self.h.norm()
    }
}

fn check_len(effq: &EffectiveQuadratic, params: &ChainParams) -> Result<()> {
    if effq.g.len() != effq.delta_tilde.len() || effq.len() != params.sites {
        return Err(Error::Dimension {
            context: "effective quadratic parameters",
            expected: params.sites,
            got: effq.len().min(effq.g.len()),
        });
    }
    Ok(())
}

/// Assembles `ℍ = [[D - iκ/2, K], [-K*, -D* - iκ/2]]` with
/// `D_{j,j+1} = J e^{-iφ}`, `D_{j+1,j} = J e^{iφ}` and `K = diag(2g_j)`.
///
/// The phase placement follows from the equations of motion of the
/// fluctuations; its Fourier transform is [`bloch_matrix`].
pub fn build_nambu(effq: &EffectiveQuadratic, params: &ChainParams) -> Result<NambuMatrix> {
    check_len(effq, params)?;
    let n = params.sites;
    let hop = Complex64::from_polar(params.hopping, -params.hopping_phase());
    let loss = I * 0.5 * params.kappa;
    let mut h = DMatrix::zeros(2 * n, 2 * n);
    for j in 0..n {
        h[(j, j)] = effq.delta_tilde[j] - loss;
        h[(j + n, j + n)] = -effq.delta_tilde[j] - loss;
        h[(j, j + n)] = 2.0 * effq.g[j];
        h[(j + n, j)] = -2.0 * effq.g[j].conj();
        if j + 1 < n {
            h[(j, j + 1)] = hop;
            h[(j + 1, j)] = hop.conj();
            h[(j + n, j + 1 + n)] = -hop.conj();
            h[(j + 1 + n, j + n)] = -hop;
        }
    }
    Ok(NambuMatrix { h })
}

/// `H(k)` of the homogeneous chain with one site per unit cell.
pub fn bloch_matrix(delta_tilde: f64, g: Complex64, params: &ChainParams, k: f64) -> [[Complex64; 2]; 2] {
    let (j, phi, half) = (params.hopping, params.phi, 0.5 * params.kappa);
    [
        [
            Complex64::new(delta_tilde + 2.0 * j * (k + phi).cos(), -half),
            2.0 * g,
        ],
        [
            -2.0 * g.conj(),
            Complex64::new(-delta_tilde - 2.0 * j * (k - phi).cos(), -half),
        ],
    ]
}

fn bloch_det(delta_tilde: f64, g: Complex64, params: &ChainParams, k: f64) -> Complex64 {
    let h = bloch_matrix(delta_tilde, g, params, k);
    h[0][0] * h[1][1] - h[0][1] * h[1][0]
}

fn bloch_det_derivative(delta_tilde: f64, g: Complex64, params: &ChainParams, k: f64) -> Complex64 {
    let h = bloch_matrix(delta_tilde, g, params, k);
    let j = params.hopping;
    let d00 = -2.0 * j * (k + params.phi).sin();
    let d11 = 2.0 * j * (k - params.phi).sin();
    h[1][1] * d00 + h[0][0] * d11
}

/// Accumulated phase of `det H(k)` over the zone in units of `2π` on a fixed
/// grid of `n_k` points, with the largest single increment (radians). `None`
/// if the determinant vanishes on a grid point.
pub fn unwrapped_phase(delta_tilde: f64, g: Complex64, params: &ChainParams, n_k: usize) -> Option<(f64, f64)> {
    let step = 2.0 * std::f64::consts::PI / n_k as f64;
    let k0 = -std::f64::consts::PI;
    let first = bloch_det(delta_tilde, g, params, k0);
    if first == ZERO {
        return None;
    }
    let (mut total, mut max_inc, mut prev) = (0.0, 0.0f64, first);
    for i in 1..=n_k {
        let cur = if i == n_k {
            first
        } else {
            bloch_det(delta_tilde, g, params, k0 + i as f64 * step)
        };
        if cur == ZERO || !cur.re.is_finite() || !cur.im.is_finite() {
            return None;
        }
        let inc = (cur / prev).arg();
        total += inc;
        max_inc = max_inc.max(inc.abs());
        prev = cur;
    }
    Some((total / (2.0 * std::f64::consts::PI), max_inc))
}

/// Winding number of `det H(k)` around the origin as `k` runs over
/// `[-π, π]`, by phase unwrapping on a grid refined from `n_k` points until
/// the result is integral.
pub fn winding_number(delta_tilde: f64, g: Complex64, params: &ChainParams, n_k: usize) -> Result<i32> {
    if n_k < 256 {
        return Err(Error::InvalidParams(format!("need at least 256 k-points, got {n_k}")));
    }
    if !(params.kappa > 0.0) {
        return Err(Error::InvalidParams("winding number requires kappa > 0".into()));
    }
    let mut points = n_k;
    let mut last = f64::NAN;
    while points <= MAX_K_POINTS {
        match unwrapped_phase(delta_tilde, g, params, points) {
            None => break,
            Some((w, max_inc)) => {
                last = w;
                if max_inc < 0.5 * std::f64::consts::PI && (w - w.round()).abs() < INTEGRALITY_TOL {
                    return Ok(w.round() as i32);
                }
            }
        }
        points *= 2;
    }
    Err(Error::GapClosing {
        points: points.min(MAX_K_POINTS),
        winding: last,
    })
}

/// `(1/2π) ∮ Im ∂_k log det H(k) dk` by the trapezoid rule on `n_k` points.
/// The integrand is periodic, so the rule converges spectrally away from
/// gap closings.
pub fn winding_quadrature(delta_tilde: f64, g: Complex64, params: &ChainParams, n_k: usize) -> f64 {
    let step = 2.0 * std::f64::consts::PI / n_k as f64;
    let sum: f64 = (0..n_k)
        .map(|i| {
            let k = -std::f64::consts::PI + i as f64 * step;
            (bloch_det_derivative(delta_tilde, g, params, k) / bloch_det(delta_tilde, g, params, k)).im
        })
        .sum();
    sum * step / (2.0 * std::f64::consts::PI)
}

/// `ν_j` from each site's own `(Δ̃_j, g_j)`; `None` where the local gap closes.
pub fn local_winding_profile(effq: &EffectiveQuadratic, params: &ChainParams) -> Result<Vec<Option<i32>>> {
    check_len(effq, params)?;
    if params.gauge != Gauge::HoppingPhase {
        return Err(Error::InvalidParams(
            "local winding numbers need effective parameters in the hopping-phase gauge".into(),
        ));
    }
    effq.delta_tilde
        .iter()
        .zip(&effq.g)
        .map(|(&dt, &g)| match winding_number(dt, g, params, DEFAULT_K_POINTS) {
            Ok(nu) => Ok(Some(nu)),
            Err(Error::GapClosing { .. }) => Ok(None),
            Err(e) => Err(e),
        })
        .collect()
}

/// `𝔾(ω) = (ω𝟙 - ℍ)⁻¹`; at `ω = 0` this is `-ℍ⁻¹`.
pub fn greens_function(nambu: &NambuMatrix, omega: f64) -> Result<DMatrix<Complex64>> {
    let m = nambu.h.nrows();
    let a = DMatrix::<Complex64>::identity(m, m) * Complex64::from(omega) - &nambu.h;
    let g = a
        .clone()
        .lu()
        .try_inverse()
        .ok_or_else(|| Error::Singular(format!("ω𝟙 - ℍ at ω = {omega}")))?;
    let res = inverse_residual(&a, &g);
    if res > 1e-8 {
        log::warn!("Green's function residual {res:.2e} at ω = {omega}; ℍ is badly conditioned");
    }
    Ok(g)
}

/// `‖A·X - 𝟙‖_max`
pub fn inverse_residual(a: &DMatrix<Complex64>, x: &DMatrix<Complex64>) -> f64 {
    let mut r = a * x;
    for j in 0..r.nrows() {
        r[(j, j)] -= ONE;
    }
    r.iter().fold(0.0, |m, z| m.max(z.norm()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SvdAnalysis {
    /// Descending.
    pub singular_values: Vec<f64>,
    pub s_min: f64,
    /// `‖𝔾(0)‖_F = sqrt(Σ s_n⁻²)`
    pub frobenius_g: f64,
    /// Second-smallest over smallest singular value.
    pub gap_ratio: f64,
}

pub fn svd_analysis(nambu: &NambuMatrix) -> SvdAnalysis {
    let mut s: Vec<f64> = nambu.h.clone().singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    let len = s.len();
    let s_min = s[len - 1];
    let frobenius_g = s.iter().map(|v| v.powi(-2)).sum::<f64>().sqrt();
    let gap_ratio = if len >= 2 { s[len - 2] / s_min } else { f64::INFINITY };
    SvdAnalysis {
        singular_values: s,
        s_min,
        frobenius_g,
        gap_ratio,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairingCheck {
    /// Largest of the `E ↔ -E` asymmetry and the `|E| ↔ s` mismatch.
    pub max_pairing_defect: f64,
    /// `‖S𝓗S + 𝓗‖_max` with `S = diag(𝟙, -𝟙)`.
    pub chiral_defect: f64,
}

/// Spectrum of `𝓗 = [[0, ℍ], [ℍ†, 0]]` against the singular values of `ℍ`.
pub fn extended_hermitian_check(nambu: &NambuMatrix) -> PairingCheck {
    let m = nambu.h.nrows();
    let mut ext = DMatrix::<Complex64>::zeros(2 * m, 2 * m);
    ext.view_mut((0, m), (m, m)).copy_from(&nambu.h);
    ext.view_mut((m, 0), (m, m)).copy_from(&nambu.h.adjoint());
    let mut e: Vec<f64> = ext.clone().symmetric_eigenvalues().iter().copied().collect();
    e.sort_by(|a, b| a.total_cmp(b));
    let mut defect = 0.0f64;
    for i in 0..m {
        defect = defect.max((e[i] + e[2 * m - 1 - i]).abs());
    }
    let s = svd_analysis(nambu).singular_values;
    // the upper half of the ascending spectrum, descending, against s
    for (i, sv) in s.iter().enumerate() {
        defect = defect.max((e[2 * m - 1 - i] - sv).abs());
    }
    let mut chiral = 0.0f64;
    for r in 0..2 * m {
        for c in 0..2 * m {
            let sign = if (r < m) == (c < m) { 1.0 } else { -1.0 };
            chiral = chiral.max((ext[(r, c)] * sign + ext[(r, c)]).norm());
        }
    }
    PairingCheck {
        max_pairing_defect: defect,
        chiral_defect: chiral,
    }
}

/// Steady correlations of the quadratic model with `(Δ̃_j, g_j)` frozen:
/// solves `ℍM + Mℍᵀ = -iκ[[0, 𝟙], [0, 0]]` for `M = ⟨𝖻𝖻ᵀ⟩ = [[F, Gᵀ+𝟙], [G, F*]]`
/// through the complex Schur form of `ℍ`.
pub fn quadratic_steady_correlations(
    effq: &EffectiveQuadratic,
    params: &ChainParams,
) -> Result<(DMatrix<Complex64>, DMatrix<Complex64>)> {
    let nambu = build_nambu(effq, params)?;
    let n = params.sites;
    let m = 2 * n;
    let (q, t) = nambu
        .h
        .clone()
        .try_schur(1e-14, 10_000)
        .ok_or_else(|| Error::Singular("Schur decomposition of ℍ did not converge".into()))?
        .unpack();
    if let Some(l) = (0..m).map(|a| t[(a, a)]).filter(|l| l.im >= 0.0).max_by(|a, b| a.im.total_cmp(&b.im)) {
        return Err(Error::Unstable { re: l.re, im: l.im });
    }
    let mut c = DMatrix::<Complex64>::zeros(m, m);
    for j in 0..n {
        c[(j, j + n)] = -I * params.kappa;
    }
    let c = q.adjoint() * c * q.map(|z| z.conj());
    // back substitution of T Y + Y Tᵀ = C
    let mut y = DMatrix::<Complex64>::zeros(m, m);
    for a in (0..m).rev() {
        for b in (0..m).rev() {
            let mut s = c[(a, b)];
            for k in a + 1..m {
                s -= t[(a, k)] * y[(k, b)];
            }
            for k in b + 1..m {
                s -= y[(a, k)] * t[(b, k)];
            }
            y[(a, b)] = s / (t[(a, a)] + t[(b, b)]);
        }
    }
    let mm = &q * y * q.transpose();
    let half = Complex64::new(0.5, 0.0);
    let mut g = DMatrix::zeros(n, n);
    let mut f = DMatrix::zeros(n, n);
    for j in 0..n {
        for k in 0..n {
            let delta = if j == k { ONE } else { ZERO };
            g[(j, k)] = (mm[(j + n, k)] + mm[(k, j + n)] - delta) * half;
            f[(j, k)] = (mm[(j, k)] + mm[(j + n, k + n)].conj()) * half;
        }
    }
    let g = (&g + g.adjoint()) * half;
    let f = (&f + f.transpose()) * half;
    Ok((g, f))
}

/// Time derivatives of `(G, F)` under the frozen quadratic dynamics; zero at
/// the solution of [`quadratic_steady_correlations`].
pub fn frozen_correlation_rates(
    effq: &EffectiveQuadratic,
    params: &ChainParams,
    g: &DMatrix<Complex64>,
    f: &DMatrix<Complex64>,
) -> Result<(DMatrix<Complex64>, DMatrix<Complex64>)> {
    check_len(effq, params)?;
    let n = params.sites;
    let em = Complex64::from_polar(1.0, -params.hopping_phase());
    let j_hop = params.hopping;
    let hk = 0.5 * params.kappa;
    let mut x = DMatrix::zeros(n, n);
    let mut y = DMatrix::zeros(n, n);
    for k in 0..n {
        for j in 0..n {
            let (dt, gj) = (effq.delta_tilde[j], effq.g[j]);
            let mut xv = I * dt * g[(j, k)] + 2.0 * I * gj.conj() * f[(j, k)] - hk * g[(j, k)];
            let mut hop = ZERO;
            if j > 0 {
                hop += g[(j - 1, k)];
            }
            if k + 1 < n {
                hop -= g[(j, k + 1)];
            }
            xv += I * j_hop * em * hop;
            x[(j, k)] = xv;

            let mut yv = -I * dt * f[(j, k)] - 2.0 * I * gj * g[(j, k)] - hk * f[(j, k)];
            if j == k {
                yv -= I * gj;
            }
            let mut fh = ZERO;
            if k + 1 < n {
                fh += f[(j, k + 1)] * em;
            }
            if k > 0 {
                fh += f[(j, k - 1)] * em.conj();
            }
            yv -= I * j_hop * fh;
            y[(j, k)] = yv;
        }
    }
    Ok((&x + x.adjoint(), &y + y.transpose()))
}

/// `G̅_jk = G_jk / sqrt(G_jj G_kk)`; NaN wherever a population is not positive.
pub fn normalized_correlations(g: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let n = g.nrows();
    DMatrix::from_fn(n, n, |j, k| {
        let (a, b) = (g[(j, j)].re, g[(k, k)].re);
        if a > 0.0 && b > 0.0 {
            g[(j, k)] / (a * b).sqrt()
        } else {
            Complex64::new(f64::NAN, f64::NAN)
        }
    })
}

/// `C(d)`: mean of `|G̅_{j,j+d}|` over pairs with both sites in `sites`,
/// for `d = 0..=max_distance`. NaN entries are skipped.
pub fn correlation_profile(gbar: &DMatrix<Complex64>, sites: std::ops::Range<usize>, max_distance: usize) -> Vec<f64> {
    (0..=max_distance)
        .map(|d| {
            let vals: Vec<f64> = sites
                .clone()
                .filter(|&j| j + d < sites.end)
                .map(|j| gbar[(j, j + d)].norm())
                .filter(|v| v.is_finite())
                .collect();
            if vals.is_empty() {
                f64::NAN
            } else {
                vals.iter().sum::<f64>() / vals.len() as f64
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayFit {
    /// Decay length in sites, `-1/slope` of `log C(d)`.
    pub length: f64,
    pub fit: LineFit,
}

/// Exponential fit `C(d) ∝ e^{-d/ξ}` over `d = 1..` of a correlation
/// profile, ignoring non-positive or non-finite entries.
pub fn fit_decay_length(profile: &[f64]) -> Result<DecayFit> {
    let (x, y): (Vec<f64>, Vec<f64>) = profile
        .iter()
        .enumerate()
        .skip(1)
        .filter(|(_, c)| c.is_finite() && **c > 0.0)
        .map(|(d, c)| (d as f64, c.ln()))
        .unzip();
    let fit = fit_line(&x, &y)?;
    Ok(DecayFit {
        length: -1.0 / fit.slope,
        fit,
    })
}
