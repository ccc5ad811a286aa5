//! CSV and JSON emission for trajectories, sweeps and diagnostics.
//!
//! Every CSV has a header row, comma separators, `.` decimals and LF line
//! endings. Missing values (unknown winding, unconverged points) are empty
//! fields.

use std::io::Write;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::dynamics::{GaussianState, SteadyStateReport, Trajectory};
use crate::error::{Error, Result};
use crate::oracle::AnsatzComparison;
use crate::sweep::{CriticalScan, PhaseDiagram, PhasePoint, ScalingFit};

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            other => Error::Io(std::io::Error::other(format!("{other:?}"))),
        }
    }
}

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w)
}

fn rows<W: Write, R: Serialize>(w: W, it: impl IntoIterator<Item = R>) -> Result<()> {
    let mut wr = writer(w);
    for r in it {
        wr.serialize(r)?;
    }
    wr.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct TrajectoryRow {
    t: f64,
    j: usize,
    re_alpha: f64,
    im_alpha: f64,
    g_jj: f64,
}

/// One row per site per stored sample.
pub fn write_trajectory<W: Write>(w: W, traj: &Trajectory) -> Result<()> {
    rows(
        w,
        traj.samples.iter().flat_map(|s| {
            s.alpha.iter().enumerate().map(move |(j, a)| TrajectoryRow {
                t: s.t,
                j,
                re_alpha: a.re,
                im_alpha: a.im,
                g_jj: s.g_diag.get(j).copied().unwrap_or(0.0),
            })
        }),
    )
}

#[derive(Serialize)]
struct PhaseRow<'a> {
    delta: f64,
    epsilon: f64,
    phase: &'a str,
    mean_density: f64,
    max_fluct: f64,
    outcome: &'a str,
}

fn phase_row(p: &PhasePoint) -> PhaseRow<'_> {
    PhaseRow {
        delta: p.delta,
        epsilon: p.epsilon,
        phase: p.phase.as_str(),
        mean_density: p.mean_density,
        max_fluct: p.max_fluct,
        outcome: p.outcome.map_or("error", |o| o.as_str()),
    }
}

pub fn write_phase_diagram<W: Write>(w: W, diagram: &PhaseDiagram) -> Result<()> {
    rows(w, diagram.points.iter().map(phase_row))
}

#[derive(Serialize)]
struct WindingRow {
    delta: f64,
    epsilon: f64,
    j: usize,
    nu_j: Option<i32>,
}

/// Local winding numbers of one configuration.
pub fn write_nu_profile<W: Write>(w: W, delta: f64, epsilon: f64, nu: &[Option<i32>]) -> Result<()> {
    rows(
        w,
        nu.iter().enumerate().map(|(j, nu)| WindingRow {
            delta,
            epsilon,
            j,
            nu_j: *nu,
        }),
    )
}

/// Local winding numbers of every point, one row per site.
pub fn write_winding_profiles<'a, W: Write>(
    w: W,
    points: impl IntoIterator<Item = &'a PhasePoint>,
) -> Result<()> {
    rows(
        w,
        points.into_iter().flat_map(|p| {
            p.nu_profile.iter().enumerate().map(move |(j, nu)| WindingRow {
                delta: p.delta,
                epsilon: p.epsilon,
                j,
                nu_j: *nu,
            })
        }),
    )
}

#[derive(Serialize)]
struct CriticalRow {
    j: usize,
    eps_c_j: f64,
}

pub fn write_critical_scan<W: Write>(w: W, scan: &CriticalScan) -> Result<()> {
    rows(
        w,
        scan.eps_c_per_site
            .iter()
            .enumerate()
            .map(|(j, &e)| CriticalRow { j, eps_c_j: e }),
    )
}

#[derive(Serialize)]
struct ScalingRow {
    n: usize,
    critical_eps: f64,
    derivative: f64,
    fit: f64,
}

/// `fit` is the fitted power law evaluated at each `N`.
pub fn write_scaling<W: Write>(w: W, s: &ScalingFit) -> Result<()> {
    rows(
        w,
        s.sizes.iter().enumerate().map(|(i, &n)| ScalingRow {
            n,
            critical_eps: s.critical_eps[i],
            derivative: s.derivatives[i],
            fit: s.fit.eval((n as f64).ln()).exp(),
        }),
    )
}

#[derive(Serialize)]
struct MatrixRow {
    row: usize,
    col: usize,
    re: f64,
    im: f64,
}

/// Row-major dump of a complex matrix, e.g. the Green's function.
pub fn write_complex_matrix<W: Write>(w: W, m: &DMatrix<Complex64>) -> Result<()> {
    rows(
        w,
        (0..m.nrows()).flat_map(|r| {
            (0..m.ncols()).map(move |c| MatrixRow {
                row: r,
                col: c,
                re: m[(r, c)].re,
                im: m[(r, c)].im,
            })
        }),
    )
}

#[derive(Serialize)]
struct OracleRow {
    u: f64,
    err_gaussian: f64,
    err_meanfield: f64,
}

pub fn write_oracle<W: Write>(w: W, rows_in: &[AnsatzComparison]) -> Result<()> {
    rows(
        w,
        rows_in.iter().map(|c| OracleRow {
            u: c.kerr,
            err_gaussian: c.err_gaussian,
            err_meanfield: c.err_meanfield,
        }),
    )
}

#[derive(Serialize)]
struct ProfileRow {
    distance: usize,
    gbar: f64,
}

/// Site-averaged `|G̅_jk|` against `|j - k|`.
pub fn write_correlation_profile<W: Write>(w: W, profile: &[f64]) -> Result<()> {
    rows(
        w,
        profile
            .iter()
            .enumerate()
            .map(|(distance, &gbar)| ProfileRow { distance, gbar }),
    )
}

/// JSON form of a Gaussian state; complex numbers are `[re, im]` pairs and
/// matrices are lists of rows.
#[derive(Debug, Serialize)]
pub struct StateDump {
    pub t: f64,
    pub alpha: Vec<[f64; 2]>,
    pub g: Vec<Vec<[f64; 2]>>,
    pub f: Vec<Vec<[f64; 2]>>,
}

fn pair(z: &Complex64) -> [f64; 2] {
    [z.re, z.im]
}

fn matrix_rows(m: &DMatrix<Complex64>) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|c| pair(&m[(r, c)])).collect())
        .collect()
}

impl From<&GaussianState> for StateDump {
    fn from(s: &GaussianState) -> Self {
        Self {
            t: s.t,
            alpha: s.alpha.iter().map(pair).collect(),
            g: matrix_rows(&s.g),
            f: matrix_rows(&s.f),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct ReportDump {
    pub outcome: &'static str,
    pub residual: f64,
    pub t_converged: Option<f64>,
    pub envelope: (f64, f64),
    pub density: Vec<f64>,
    pub fluctuations: Vec<f64>,
}

impl From<&SteadyStateReport> for ReportDump {
    fn from(r: &SteadyStateReport) -> Self {
        let s = &r.state;
        Self {
            outcome: r.outcome.as_str(),
            residual: r.residual,
            t_converged: r.t_converged,
            envelope: r.envelope,
            density: s.alpha.iter().map(|a| a.norm_sqr()).collect(),
            fluctuations: (0..s.sites()).map(|j| s.g[(j, j)].re).collect(),
        }
    }
}

pub fn write_json<W: Write, T: Serialize + ?Sized>(w: W, value: &T) -> Result<()> {
    let mut w = w;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fit::fit_line;
    use crate::sweep::Phase;

    fn text(f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> String {
        let mut buf = Vec::new();
        f(&mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    fn point(delta: f64, epsilon: f64) -> PhasePoint {
        PhasePoint {
            delta,
            epsilon,
            outcome: Some(crate::dynamics::Outcome::Converged),
            mean_density: 12.5,
            max_fluct: 0.25,
            amplitude: vec![1.0, 2.0],
            fluctuations: vec![0.0, 0.0],
            nu_profile: vec![Some(0), None],
            rho_split: None,
            phase: Phase::I,
            interface: None,
            t_converged: Some(3.0),
            residual: 0.0,
            error: None,
        }
    }

    #[test]
    fn phase_csv_layout() {
        let d = PhaseDiagram {
            deltas: vec![0.5],
            epsilons: vec![1.0, 2.0],
            points: vec![point(0.5, 1.0), point(0.5, 2.0)],
        };
        let s = text(|b| write_phase_diagram(b, &d));
        assert_eq!(
            s,
            "delta,epsilon,phase,mean_density,max_fluct,outcome\n\
             0.5,1.0,I,12.5,0.25,converged\n\
             0.5,2.0,I,12.5,0.25,converged\n"
        );
        assert!(!s.contains('\r'));
    }

    #[test]
    fn unknown_winding_is_empty() {
        let p = point(0.0, 3.0);
        let s = text(|b| write_winding_profiles(b, [&p]));
        assert_eq!(s, "delta,epsilon,j,nu_j\n0.0,3.0,0,0\n0.0,3.0,1,\n");
    }

    #[test]
    fn matrix_dump_is_row_major() {
        let m = DMatrix::from_row_slice(1, 2, &[Complex64::new(1.0, -1.0), Complex64::new(0.0, 2.0)]);
        let s = text(|b| write_complex_matrix(b, &m));
        assert_eq!(s, "row,col,re,im\n0,0,1.0,-1.0\n0,1,0.0,2.0\n");
    }

    #[test]
    fn scaling_fit_column() {
        let sizes = vec![10usize, 20];
        let der = vec![1.0, 8.0];
        let x: Vec<f64> = sizes.iter().map(|&n| (n as f64).ln()).collect();
        let y: Vec<f64> = der.iter().map(|d: &f64| d.ln()).collect();
        let fit = fit_line(&x, &y).unwrap();
        let s = ScalingFit {
            sizes,
            derivatives: der,
            critical_eps: vec![40.0, 40.0],
            exponent_a: fit.slope,
            exponent_err: fit.slope_err,
            fit,
            xi: None,
        };
        let out = text(|b| write_scaling(b, &s));
        let lines: Vec<&str> = out.lines().collect();
        assert_eq!(lines[0], "n,critical_eps,derivative,fit");
        let last: f64 = lines[2].rsplit(',').next().unwrap().parse().unwrap();
        assert!((last - 8.0).abs() < 1e-9);
    }

    #[test]
    fn state_dump_round_trips_through_json() {
        let mut s = GaussianState::vacuum(2);
        s.alpha[1] = Complex64::new(0.5, -0.25);
        s.g[(0, 1)] = Complex64::new(0.0, 1.0);
        let json = text(|b| write_json(b, &StateDump::from(&s)));
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["alpha"][1][1].as_f64(), Some(-0.25));
        assert_eq!(v["g"][0][1][1].as_f64(), Some(1.0));
    }
}
