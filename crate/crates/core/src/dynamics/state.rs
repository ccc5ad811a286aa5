use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Gaussian variational state: mean fields `α_j = ⟨a_j⟩`, normal correlations
/// `G_jk = ⟨b_j† b_k⟩` and anomalous correlations `F_jk = ⟨b_j b_k⟩` of the
/// fluctuations `b_j = a_j - α_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    pub t: f64,
    pub alpha: DVector<Complex64>,
    pub g: DMatrix<Complex64>,
    pub f: DMatrix<Complex64>,
}

impl GaussianState {
    /// Photon vacuum at `t = 0`.
    pub fn vacuum(sites: usize) -> Self {
        Self {
            t: 0.0,
            alpha: DVector::zeros(sites),
            g: DMatrix::zeros(sites, sites),
            f: DMatrix::zeros(sites, sites),
        }
    }

    /// Coherent state with the given displacements.
    pub fn coherent(alpha: DVector<Complex64>) -> Self {
        let n = alpha.len();
        Self {
            t: 0.0,
            alpha,
            g: DMatrix::zeros(n, n),
            f: DMatrix::zeros(n, n),
        }
    }

    pub fn sites(&self) -> usize {
        self.alpha.len()
    }

    pub fn check_dims(&self, sites: usize) -> Result<()> {
        let dims = [
            self.alpha.len(),
            self.g.nrows(),
            self.g.ncols(),
            self.f.nrows(),
            self.f.ncols(),
        ];
        match dims.iter().find(|&&d| d != sites) {
            Some(&got) => Err(Error::Dimension {
                context: "gaussian state",
                expected: sites,
                got,
            }),
            None => Ok(()),
        }
    }

    /// `[α, vec(G), vec(F)]`, matrices column-major.
    pub fn to_flat(&self) -> Vec<Complex64> {
        let n = self.sites();
        let mut y = Vec::with_capacity(n + 2 * n * n);
        y.extend_from_slice(self.alpha.as_slice());
        y.extend_from_slice(self.g.as_slice());
        y.extend_from_slice(self.f.as_slice());
        y
    }

    /// Inverse of [`to_flat`](Self::to_flat). A buffer holding only `α`
    /// (mean-field layout) yields vanishing correlations.
    pub fn from_flat(t: f64, sites: usize, y: &[Complex64]) -> Self {
        let n = sites;
        let alpha = DVector::from_column_slice(&y[..n]);
        if y.len() == n {
            return Self {
                t,
                ..Self::coherent(alpha)
            };
        }
        Self {
            t,
            alpha,
            g: DMatrix::from_column_slice(n, n, &y[n..n + n * n]),
            f: DMatrix::from_column_slice(n, n, &y[n + n * n..n + 2 * n * n]),
        }
    }

    /// Total coherent population `Σ_j |α_j|²`.
    pub fn total_density(&self) -> f64 {
        self.alpha.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn densities(&self) -> Vec<f64> {
        self.alpha.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Fluctuation populations `G_jj`.
    pub fn fluctuations(&self) -> Vec<f64> {
        (0..self.sites()).map(|j| self.g[(j, j)].re).collect()
    }

    pub fn sup_norm(&self) -> f64 {
        self.alpha
            .iter()
            .chain(self.g.iter())
            .chain(self.f.iter())
            .fold(0.0, |m, z| m.max(z.norm()))
    }

    /// The state after the mode rotation `a_j → a_j e^{iθ_j}`.
    pub fn rephased(&self, theta: &[f64]) -> Self {
        let ph: Vec<Complex64> = theta.iter().map(|&t| Complex64::from_polar(1.0, t)).collect();
        let n = self.sites();
        let alpha = DVector::from_fn(n, |j, _| self.alpha[j] * ph[j]);
        let g = DMatrix::from_fn(n, n, |j, k| self.g[(j, k)] * ph[j].conj() * ph[k]);
        let f = DMatrix::from_fn(n, n, |j, k| self.f[(j, k)] * ph[j] * ph[k]);
        Self {
            t: self.t,
            alpha,
            g,
            f,
        }
    }

    /// Largest deviation from `G = G†` and `F = Fᵀ`.
    pub fn structure_defect(&self) -> f64 {
        let n = self.sites();
        let mut d: f64 = 0.0;
        for j in 0..n {
            for k in 0..n {
                d = d.max((self.g[(j, k)] - self.g[(k, j)].conj()).norm());
                d = d.max((self.f[(j, k)] - self.f[(k, j)]).norm());
            }
        }
        d
    }

    /// Smallest eigenvalue of the fluctuation covariance `⟨w w†⟩`,
    /// `w = (b_1..b_N, b_1†..b_N†)`, i.e. of `[[Gᵀ + 1, F], [F*, G]]`.
    /// Non-negative for a physical state.
    pub fn min_covariance_eigenvalue(&self) -> f64 {
        let n = self.sites();
        let mut m = DMatrix::<Complex64>::zeros(2 * n, 2 * n);
        for j in 0..n {
            for k in 0..n {
                let delta = if j == k { 1.0 } else { 0.0 };
                m[(j, k)] = self.g[(k, j)] + delta;
                m[(j, k + n)] = self.f[(j, k)];
                m[(j + n, k)] = self.f[(j, k)].conj();
                m[(j + n, k + n)] = self.g[(j, k)];
            }
        }
        // symmetrize against rounding before the Hermitian solver
        let m = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
        m.symmetric_eigenvalues().min()
    }
}

/// Time derivative of a [`GaussianState`].
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianRates {
    pub alpha: DVector<Complex64>,
    pub g: DMatrix<Complex64>,
    pub f: DMatrix<Complex64>,
}

impl GaussianRates {
    pub fn sup_norm(&self) -> f64 {
        self.alpha
            .iter()
            .chain(self.g.iter())
            .chain(self.f.iter())
            .fold(0.0, |m, z| m.max(z.norm()))
    }
}

/// `r_j = G_jj / |α_j|²`; infinite where `α_j = 0`.
pub fn fluctuation_ratio(state: &GaussianState) -> Vec<f64> {
    state
        .alpha
        .iter()
        .enumerate()
        .map(|(j, a)| {
            let n = a.norm_sqr();
            if n > 0.0 {
                state.g[(j, j)].re / n
            } else {
                f64::INFINITY
            }
        })
        .collect()
}
