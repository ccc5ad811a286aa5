//! Adaptive Dormand–Prince 5(4) integrator for complex-valued ODEs.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Right-hand side `dy/dt = f(t, y)` of a complex ODE system.
pub trait OdeSystem {
    fn dim(&self) -> usize;
    fn rhs(&self, t: f64, y: &[Complex64], dy: &mut [Complex64]);
    /// Restores structural constraints after an accepted step.
    fn project(&self, _y: &mut [Complex64]) {}
    fn diverged(&self, _y: &[Complex64]) -> bool {
        false
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControl {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Initial step; chosen automatically when `None`.
    pub h_init: Option<f64>,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for StepControl {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            abs_tol: 1e-10,
            h_init: None,
            h_max: f64::INFINITY,
            max_steps: 50_000_000,
        }
    }
}

/// Observer verdict after an accepted step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flow {
    Continue,
    Stop,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Reached,
    Stopped,
    Diverged,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrationStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
    pub t_end: f64,
    pub termination: Termination,
}

// Dormand–Prince tableau
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// fifth minus fourth order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const PI_BETA: f64 = 0.04;

fn combine(out: &mut [Complex64], y: &[Complex64], h: f64, terms: &[(f64, &[Complex64])]) {
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = Complex64::new(0.0, 0.0);
        for &(c, k) in terms {
            acc += k[i] * c;
        }
        *o = y[i] + acc * h;
    }
}

fn rms_error(y: &[Complex64], y_new: &[Complex64], err: &[Complex64], rtol: f64, atol: f64) -> f64 {
    let n = y.len().max(1) as f64;
    let s: f64 = y
        .iter()
        .zip(y_new)
        .zip(err)
        .map(|((a, b), e)| {
            let sc = atol + rtol * a.norm().max(b.norm());
            (e.norm() / sc).powi(2)
        })
        .sum();
    (s / n).sqrt()
}

fn initial_step<S: OdeSystem>(sys: &S, t: f64, y: &[Complex64], f0: &[Complex64], ctl: &StepControl) -> f64 {
    // Hairer's starting-step heuristic
    let sc = |z: &Complex64| ctl.abs_tol + ctl.rel_tol * z.norm();
    let n = y.len().max(1) as f64;
    let d0 = (y.iter().map(|z| (z.norm() / sc(z)).powi(2)).sum::<f64>() / n).sqrt();
    let d1 = (f0.iter().zip(y).map(|(f, z)| (f.norm() / sc(z)).powi(2)).sum::<f64>() / n).sqrt();
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let y1: Vec<Complex64> = y.iter().zip(f0).map(|(a, f)| a + f * h0).collect();
    let mut f1 = vec![Complex64::new(0.0, 0.0); y.len()];
    sys.rhs(t + h0, &y1, &mut f1);
    let d2 = (f1
        .iter()
        .zip(f0)
        .zip(y)
        .map(|((a, b), z)| ((a - b).norm() / sc(z)).powi(2))
        .sum::<f64>()
        / n)
        .sqrt()
        / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1).min(ctl.h_max)
}

/// Integrates `sys` from `(t0, y)` to `t_end`, calling `observer(t, y, dy)`
/// after every accepted step (and once at `t0`), where `dy` is the right-hand
/// side at `(t, y)`. `y` holds the final state.
pub fn integrate<S, F>(
    sys: &S,
    t0: f64,
    y: &mut [Complex64],
    t_end: f64,
    ctl: &StepControl,
    mut observer: F,
) -> Result<IntegrationStats>
where
    S: OdeSystem,
    F: FnMut(f64, &[Complex64], &[Complex64]) -> Flow,
{
    let n = sys.dim();
    if y.len() != n {
        return Err(Error::Dimension {
            context: "integrator state",
            expected: n,
            got: y.len(),
        });
    }
    if !(ctl.rel_tol > 0.0 && ctl.abs_tol > 0.0) {
        return Err(Error::InvalidParams("integrator tolerances must be positive".into()));
    }
    let mut stats = IntegrationStats {
        accepted: 0,
        rejected: 0,
        evaluations: 0,
        t_end: t0,
        termination: Termination::Reached,
    };
    let zero = Complex64::new(0.0, 0.0);
    let mut k: Vec<Vec<Complex64>> = (0..7).map(|_| vec![zero; n]).collect();
    let mut tmp = vec![zero; n];
    let mut y_new = vec![zero; n];
    let mut err = vec![zero; n];

    let mut t = t0;
    sys.project(y);
    if sys.diverged(y) {
        stats.termination = Termination::Diverged;
        return Ok(stats);
    }
    sys.rhs(t, y, &mut k[0]);
    stats.evaluations += 1;
    if observer(t, y, &k[0]) == Flow::Stop {
        stats.termination = Termination::Stopped;
        return Ok(stats);
    }
    if t_end <= t0 {
        return Ok(stats);
    }
    let mut h = match ctl.h_init {
        Some(h) => h,
        None => {
            stats.evaluations += 1;
            initial_step(sys, t, y, &k[0], ctl)
        }
    };
    let mut fac_max = 5.0;
    // PI step control damps the step-size sawtooth at the stability boundary
    let mut err_prev: f64 = 1e-4;

    while t < t_end {
        if stats.accepted + stats.rejected >= ctl.max_steps {
            return Err(Error::StepUnderflow { t, h });
        }
        let mut last = false;
        if t + h >= t_end {
            h = t_end - t;
            last = true;
        }
        if h <= 16.0 * f64::EPSILON * t.abs().max(1.0) {
            return Err(Error::StepUnderflow { t, h });
        }

        {
            let (k0, rest) = k.split_at_mut(1);
            combine(&mut tmp, y, h, &[(A21, &k0[0])]);
            sys.rhs(t + C2 * h, &tmp, &mut rest[0]);
            combine(&mut tmp, y, h, &[(A31, &k0[0]), (A32, &rest[0])]);
            sys.rhs(t + C3 * h, &tmp, &mut rest[1]);
            combine(&mut tmp, y, h, &[(A41, &k0[0]), (A42, &rest[0]), (A43, &rest[1])]);
            sys.rhs(t + C4 * h, &tmp, &mut rest[2]);
            combine(
                &mut tmp,
                y,
                h,
                &[(A51, &k0[0]), (A52, &rest[0]), (A53, &rest[1]), (A54, &rest[2])],
            );
            sys.rhs(t + C5 * h, &tmp, &mut rest[3]);
            combine(
                &mut tmp,
                y,
                h,
                &[(A61, &k0[0]), (A62, &rest[0]), (A63, &rest[1]), (A64, &rest[2]), (A65, &rest[3])],
            );
            sys.rhs(t + h, &tmp, &mut rest[4]);
            combine(
                &mut y_new,
                y,
                h,
                &[(B1, &k0[0]), (B3, &rest[1]), (B4, &rest[2]), (B5, &rest[3]), (B6, &rest[4])],
            );
            sys.rhs(t + h, &y_new, &mut rest[5]);
        }
        stats.evaluations += 6;
        for i in 0..n {
            err[i] = (k[0][i] * E1
                + k[2][i] * E3
                + k[3][i] * E4
                + k[4][i] * E5
                + k[5][i] * E6
                + k[6][i] * E7)
                * h;
        }
        let e = rms_error(y, &y_new, &err, ctl.rel_tol, ctl.abs_tol);

        if e.is_finite() && e <= 1.0 {
            t = if last { t_end } else { t + h };
            y.copy_from_slice(&y_new);
            sys.project(y);
            stats.accepted += 1;
            stats.t_end = t;
            if sys.diverged(y) {
                stats.termination = Termination::Diverged;
                return Ok(stats);
            }
            // FSAL stage is stale once the projection moved the state
            sys.rhs(t, y, &mut k[0]);
            stats.evaluations += 1;
            if observer(t, y, &k[0]) == Flow::Stop {
                stats.termination = Termination::Stopped;
                return Ok(stats);
            }
            let e = e.max(1e-10);
            let fac = (0.9 * e.powf(-(0.2 - 0.75 * PI_BETA)) * err_prev.powf(PI_BETA)).clamp(0.2, fac_max);
            err_prev = e;
            h = (h * fac).min(ctl.h_max);
            fac_max = 5.0;
        } else {
            stats.rejected += 1;
            let fac = if e.is_finite() { (0.9 * e.powf(-0.2)).clamp(0.2, 1.0) } else { 0.2 };
            h *= fac;
            // no growth directly after a rejection
            fac_max = 1.0;
        }
    }
    stats.t_end = t;
    Ok(stats)
}
