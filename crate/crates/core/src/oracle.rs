//! Exact steady state of a single driven Kerr mode with loss, in a truncated
//! Fock basis. Serves as ground truth for the Gaussian and mean-field ansätze.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::{find_steady_state, Ansatz, Outcome, SteadyStateOptions};
use crate::error::{Error, Result};
use crate::model::{build_profiles, ChainParams};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FockConfig {
    /// Truncation dimension `D`; levels `0..D`.
    pub dim: usize,
    /// Admissible population of the two highest levels.
    pub tail_tol: f64,
}

impl Default for FockConfig {
    fn default() -> Self {
        Self { dim: 40, tail_tol: 1e-8 }
    }
}

impl FockConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim < 2 {
            return Err(Error::InvalidParams(format!("Fock dimension must be at least 2, got {}", self.dim)));
        }
        if !(self.tail_tol > 0.0) {
            return Err(Error::InvalidParams("tail_tol must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    pub rho: DMatrix<Complex64>,
}

impl DensityMatrix {
    pub fn dim(&self) -> usize {
        self.rho.nrows()
    }

    pub fn trace(&self) -> Complex64 {
        self.rho.trace()
    }

    pub fn purity(&self) -> f64 {
        (&self.rho * &self.rho).trace().re
    }

    pub fn hermiticity_defect(&self) -> f64 {
        (&self.rho - self.rho.adjoint()).iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let h = (&self.rho + self.rho.adjoint()) * Complex64::new(0.5, 0.0);
        h.symmetric_eigenvalues().min()
    }

    /// `⟨a⟩`
    pub fn mean_field(&self) -> Complex64 {
        (0..self.dim() - 1)
            .map(|m| self.rho[(m + 1, m)] * ((m + 1) as f64).sqrt())
            .sum()
    }

    /// `⟨a†a⟩`
    pub fn occupation(&self) -> f64 {
        (0..self.dim()).map(|m| m as f64 * self.rho[(m, m)].re).sum()
    }
}

#[derive(Debug, Clone)]
pub struct LindbladSteadyState {
    pub rho: DensityMatrix,
    pub alpha: Complex64,
    pub n: f64,
    /// Max-norm of the Liouvillian applied to `ρ`.
    pub residual: f64,
    /// Two independent inverse-iteration starts disagreed.
    pub degenerate: bool,
}

/// Square band matrix with `kl` sub- and `ku` super-diagonals, stored with
/// `kl` extra rows of headroom for the fill-in of partial pivoting.
#[derive(Clone)]
struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    ld: usize,
    ab: Vec<Complex64>,
}

impl BandMatrix {
    fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let ld = 2 * kl + ku + 1;
        Self {
            n,
            kl,
            ku,
            ld,
            ab: vec![ZERO; ld * n],
        }
    }

    #[inline]
    fn pos(&self, i: usize, j: usize) -> usize {
        (self.kl + self.ku + i - j) + self.ld * j
    }

    #[inline]
    fn get(&self, i: usize, j: usize) -> Complex64 {
        self.ab[self.pos(i, j)]
    }

    #[inline]
    fn add(&mut self, i: usize, j: usize, v: Complex64) {
        debug_assert!(i <= j + self.kl && j <= i + self.ku);
        let p = self.pos(i, j);
        self.ab[p] += v;
    }

    fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = vec![ZERO; self.n];
        for j in 0..self.n {
            let lo = j.saturating_sub(self.ku);
            let hi = (j + self.kl).min(self.n - 1);
            for (i, yi) in y.iter_mut().enumerate().take(hi + 1).skip(lo) {
                *yi += self.get(i, j) * x[j];
            }
        }
        y
    }

    fn shift_diagonal(&mut self, s: Complex64) {
        for j in 0..self.n {
            self.add(j, j, s);
        }
    }

    /// In-place LU with partial pivoting.
    fn factor(mut self) -> Result<BandLu> {
        let n = self.n;
        let span = self.kl + self.ku;
        let mut piv = vec![0usize; n];
        for k in 0..n {
            let last = (k + self.kl).min(n - 1);
            let mut p = k;
            let mut best = self.get(k, k).norm();
            for i in k + 1..=last {
                let v = self.get(i, k).norm();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 {
                return Err(Error::Singular(format!("zero pivot in banded LU at column {k}")));
            }
            piv[k] = p;
            let jmax = (k + span).min(n - 1);
            if p != k {
                for j in k..=jmax {
                    let (a, b) = (self.pos(k, j), self.pos(p, j));
                    self.ab.swap(a, b);
                }
            }
            let inv = 1.0 / self.get(k, k);
            for i in k + 1..=last {
                let pik = self.pos(i, k);
                let l = self.ab[pik] * inv;
                self.ab[pik] = l;
                if l == ZERO {
                    continue;
                }
                for j in k + 1..=jmax {
                    let u = self.get(k, j);
                    if u != ZERO {
                        let pij = self.pos(i, j);
                        self.ab[pij] -= l * u;
                    }
                }
            }
        }
        Ok(BandLu { m: self, piv })
    }
}

struct BandLu {
    m: BandMatrix,
    piv: Vec<usize>,
}

impl BandLu {
    fn solve(&self, b: &mut [Complex64]) {
        let m = &self.m;
        let n = m.n;
        for k in 0..n {
            b.swap(k, self.piv[k]);
            let bk = b[k];
            for i in k + 1..=(k + m.kl).min(n - 1) {
                b[i] -= m.get(i, k) * bk;
            }
        }
        let span = m.kl + m.ku;
        for k in (0..n).rev() {
            let mut s = b[k];
            for j in k + 1..=(k + span).min(n - 1) {
                s -= m.get(k, j) * b[j];
            }
            b[k] = s / m.get(k, k);
        }
    }
}

/// Vectorized Liouvillian for `H = Δn + Un² + ε(a + a†)` and loss `κ`,
/// acting on column-stacked `ρ` (`ρ_mn` at `m + D n`).
fn liouvillian(eps: f64, delta: f64, kappa: f64, u: f64, d: usize) -> BandMatrix {
    let mut l = BandMatrix::zeros(d * d, d, d + 1);
    let energy = |m: usize| delta * m as f64 + u * (m * m) as f64;
    let idx = |m: usize, n: usize| m + d * n;
    for n in 0..d {
        for m in 0..d {
            let row = idx(m, n);
            let diag = -I * (energy(m) - energy(n)) - 0.5 * kappa * (m + n) as f64;
            l.add(row, row, diag);
            // -i H ρ, H_{m,m±1} = ε√max(m, m±1)
            if m + 1 < d {
                l.add(row, idx(m + 1, n), -I * eps * ((m + 1) as f64).sqrt());
            }
            if m > 0 {
                l.add(row, idx(m - 1, n), -I * eps * (m as f64).sqrt());
            }
            // +i ρ H
            if n + 1 < d {
                l.add(row, idx(m, n + 1), I * eps * ((n + 1) as f64).sqrt());
            }
            if n > 0 {
                l.add(row, idx(m, n - 1), I * eps * (n as f64).sqrt());
            }
            if m + 1 < d && n + 1 < d {
                l.add(row, idx(m + 1, n + 1), Complex64::from(kappa * (((m + 1) * (n + 1)) as f64).sqrt()));
            }
        }
    }
    l
}

fn inverse_iteration(lu: &BandLu, mut x: Vec<Complex64>, d: usize) -> DMatrix<Complex64> {
    for _ in 0..4 {
        lu.solve(&mut x);
        let norm = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        x.iter_mut().for_each(|z| *z /= norm);
    }
    let rho = DMatrix::from_column_slice(d, d, &x);
    let rho = (&rho + rho.adjoint()) * Complex64::new(0.5, 0.0);
    let tr = rho.trace();
    rho / tr
}

/// Null vector of the single-site Liouvillian, normalized to unit trace.
pub fn lindblad_steady_single_site(
    eps: f64,
    delta: f64,
    kappa: f64,
    u: f64,
    fock: &FockConfig,
) -> Result<LindbladSteadyState> {
    fock.validate()?;
    for (name, v) in [("eps", eps), ("delta", delta), ("U", u)] {
        if !v.is_finite() {
            return Err(Error::InvalidParams(format!("{name} must be finite")));
        }
    }
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(Error::InvalidParams(format!("kappa must be positive, got {kappa}")));
    }
    let d = fock.dim;
    let l = liouvillian(eps, delta, kappa, u, d);
    let scale = l.ab.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    let mut shifted = l.clone();
    // a tiny shift keeps the factorization regular without moving the null vector
    shifted.shift_diagonal(Complex64::new(-1e-11 * scale.max(1.0), 0.0));
    let lu = shifted.factor()?;

    let n2 = d * d;
    let mut start = vec![ZERO; n2];
    for m in 0..d {
        start[m + d * m] = Complex64::from(1.0 / d as f64);
    }
    let rho = inverse_iteration(&lu, start, d);
    let alt: Vec<Complex64> = (0..n2)
        .map(|i| Complex64::new(1.0 + (i % 7) as f64, 0.3 * (i % 5) as f64))
        .collect();
    let rho_alt = inverse_iteration(&lu, alt, d);
    let spread = (&rho - &rho_alt).iter().fold(0.0f64, |m, z| m.max(z.norm()));
    let degenerate = spread > 1e-8;
    if degenerate {
        log::warn!("Liouvillian null space looks degenerate (start-vector spread {spread:.2e})");
    }

    let residual = l
        .matvec(rho.as_slice())
        .iter()
        .fold(0.0f64, |m, z| m.max(z.norm()));
    let tail: f64 = rho[(d - 1, d - 1)].re + if d >= 2 { rho[(d - 2, d - 2)].re } else { 0.0 };
    if tail > fock.tail_tol {
        return Err(Error::Truncation {
            dim: d,
            tail,
            tol: fock.tail_tol,
            suggested: 2 * d,
        });
    }
    let rho = DensityMatrix { rho };
    Ok(LindbladSteadyState {
        alpha: rho.mean_field(),
        n: rho.occupation(),
        rho,
        residual,
        degenerate,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnsatzComparison {
    pub kerr: f64,
    pub alpha_exact: Complex64,
    pub alpha_gaussian: Complex64,
    pub alpha_meanfield: Complex64,
    pub err_gaussian: f64,
    pub err_meanfield: f64,
}

/// Options used for the ansatz side of the comparison: tight enough that the
/// integrator error sits well below the ansatz error being measured.
pub fn comparison_options() -> SteadyStateOptions {
    let mut o = SteadyStateOptions::default();
    o.integrate.rel_tol = 1e-12;
    o.integrate.abs_tol = 1e-14;
    o.integrate.t_max = 100.0;
    o.tol_ss = 1e-9;
    o
}

/// Relative error of the Gaussian and mean-field steady-state `α` against
/// the truncated-Fock result.
pub fn compare_ansatz_error(
    eps: f64,
    delta: f64,
    kappa: f64,
    u: f64,
    fock: &FockConfig,
) -> Result<AnsatzComparison> {
    let exact = lindblad_steady_single_site(eps, delta, kappa, u, fock)?;
    let params = ChainParams::single_site(eps, delta, kappa, u);
    let profiles = build_profiles(&params)?;
    let mut alpha = [ZERO; 2];
    for (slot, ansatz) in alpha.iter_mut().zip([Ansatz::Gaussian, Ansatz::MeanField]) {
        let mut opts = comparison_options();
        opts.integrate.ansatz = ansatz;
        let r = find_steady_state(&params, &profiles, &opts)?;
        if r.outcome != Outcome::Converged {
            return Err(Error::NotConverged(format!(
                "{ansatz:?} single-site run ended {}",
                r.outcome.as_str()
            )));
        }
        *slot = r.state.alpha[0];
    }
    let scale = exact.alpha.norm();
    if scale == 0.0 {
        return Err(Error::InvalidParams("exact mean field vanishes; relative error undefined".into()));
    }
    Ok(AnsatzComparison {
        kerr: u,
        alpha_exact: exact.alpha,
        alpha_gaussian: alpha[0],
        alpha_meanfield: alpha[1],
        err_gaussian: (alpha[0] - exact.alpha).norm() / scale,
        err_meanfield: (alpha[1] - exact.alpha).norm() / scale,
    })
}
