use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use anyhow::{Context, Result};
use bhchain::dynamics::{find_steady_state, integrate, GaussianState, Outcome, SteadyStateReport};
use bhchain::io;
use bhchain::model::{build_profiles, effective_quadratic, ChainParams};
use bhchain::oracle::compare_ansatz_error;
use bhchain::sweep::{critical_drive_scan, finite_size_scaling, phase_diagram};
use bhchain::topology::{
    build_nambu, correlation_profile, extended_hermitian_check, fit_decay_length, greens_function,
    local_winding_profile, normalized_correlations, quadratic_steady_correlations, svd_analysis,
};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{linspace, Format, RunConfig};

/// Whether every requested point completed.
pub type Completed = bool;

struct Output<'a> {
    cfg: &'a RunConfig,
    dir: PathBuf,
    files: Vec<String>,
}

impl<'a> Output<'a> {
    fn new(cfg: &'a RunConfig) -> Result<Self> {
        let dir = cfg.output.directory.clone();
        std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self { cfg, dir, files: Vec::new() })
    }

    fn create(&mut self, name: &str) -> Result<BufWriter<File>> {
        let path = self.dir.join(name);
        let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        self.files.push(name.to_string());
        Ok(BufWriter::new(f))
    }

    fn csv(&mut self, name: &str, write: impl FnOnce(BufWriter<File>) -> bhchain::Result<()>) -> Result<()> {
        if self.cfg.wants(Format::Csv) {
            let w = self.create(name)?;
            write(w).with_context(|| format!("writing {name}"))?;
        }
        Ok(())
    }

    fn json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<()> {
        if self.cfg.wants(Format::Json) {
            let w = self.create(name)?;
            io::write_json(w, value).with_context(|| format!("writing {name}"))?;
        }
        Ok(())
    }

    /// The manifest is always written; it records the resolved configuration
    /// and the exact invocation.
    fn finish(self, command: &str, summary: Value) -> Result<()> {
        let manifest = json!({
            "command": command,
            "version": env!("CARGO_PKG_VERSION"),
            "args": std::env::args().collect::<Vec<_>>(),
            "config": self.cfg,
            "files": self.files,
            "summary": summary,
        });
        let path = self.dir.join("manifest.json");
        let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        io::write_json(BufWriter::new(f), &manifest)?;
        Ok(())
    }
}

fn steady(cfg: &RunConfig, params: &ChainParams) -> Result<SteadyStateReport> {
    let profiles = build_profiles(params)?;
    Ok(find_steady_state(params, &profiles, &cfg.steady())?)
}

pub fn simulate(cfg: &RunConfig) -> Result<Completed> {
    let params = cfg.params();
    let profiles = build_profiles(&params)?;
    let opts = cfg.steady();
    let report = find_steady_state(&params, &profiles, &opts)?;
    let traj = integrate(&GaussianState::vacuum(params.sites), &params, &profiles, &opts.integrate)?;
    let mut out = Output::new(cfg)?;
    out.csv("trajectory.csv", |w| io::write_trajectory(w, &traj))?;
    out.json("state.json", &io::StateDump::from(&report.state))?;
    let dump = io::ReportDump::from(&report);
    out.json("report.json", &dump)?;
    log::info!("{}: residual {:.2e}", dump.outcome, dump.residual);
    out.finish(
        "simulate",
        json!({ "outcome": dump.outcome, "residual": dump.residual, "t_converged": dump.t_converged }),
    )?;
    Ok(true)
}

pub fn sweep(cfg: &RunConfig, critical: bool) -> Result<Completed> {
    let params = cfg.params();
    let opts = cfg.sweep_options();
    let mut out = Output::new(cfg)?;
    if critical {
        let s = &cfg.sweep;
        let scan = critical_drive_scan(
            cfg.chain.delta_base,
            (s.epsilon_range[0], s.epsilon_range[1]),
            s.epsilon_step,
            &params,
            &opts,
        )?;
        let complete = scan.points.iter().all(|p| p.error.is_none());
        out.csv("critical_scan.csv", |w| io::write_critical_scan(w, &scan))?;
        out.csv("winding_profiles.csv", |w| io::write_winding_profiles(w, &scan.points))?;
        out.finish(
            "sweep --critical",
            json!({ "eps_c1": scan.eps_c1, "eps_c2": scan.eps_c2, "bulk_range": scan.bulk_range }),
        )?;
        return Ok(complete);
    }
    let deltas = linspace(cfg.sweep.delta_range, cfg.sweep.delta_points);
    let epsilons = linspace(cfg.sweep.epsilon_range, cfg.sweep.epsilon_points);
    let diagram = phase_diagram(&deltas, &epsilons, &params, &opts)?;
    let failed: Vec<_> = diagram.points.iter().filter(|p| p.error.is_some()).collect();
    for p in &failed {
        log::error!("Δ = {}, ε = {}: {}", p.delta, p.epsilon, p.error.as_deref().unwrap_or(""));
    }
    out.csv("phase_diagram.csv", |w| io::write_phase_diagram(w, &diagram))?;
    out.csv("winding_profiles.csv", |w| io::write_winding_profiles(w, &diagram.points))?;
    out.finish("sweep", json!({ "points": diagram.points.len(), "failed": failed.len() }))?;
    Ok(failed.is_empty())
}

pub fn winding(cfg: &RunConfig) -> Result<Completed> {
    let params = cfg.params();
    let report = steady(cfg, &params)?;
    let effq = effective_quadratic(&params, report.state.alpha.as_slice())?;
    let nu = local_winding_profile(&effq, &params)?;
    let nambu = build_nambu(&effq, &params)?;
    let svd = svd_analysis(&nambu);
    let pairing = extended_hermitian_check(&nambu);
    let mut out = Output::new(cfg)?;
    out.csv("winding_profile.csv", |w| io::write_nu_profile(w, params.delta, params.epsilon, &nu))?;
    out.json("svd.json", &json!({ "svd": svd, "pairing": pairing }))?;
    out.finish(
        "winding",
        json!({ "outcome": report.outcome.as_str(), "s_min": svd.s_min, "frobenius_g": svd.frobenius_g }),
    )?;
    Ok(report.outcome == Outcome::Converged)
}

pub fn green(cfg: &RunConfig, omega: f64, max_distance: usize) -> Result<Completed> {
    let params = cfg.params();
    let report = steady(cfg, &params)?;
    let effq = effective_quadratic(&params, report.state.alpha.as_slice())?;
    let nambu = build_nambu(&effq, &params)?;
    let g = greens_function(&nambu, omega)?;
    let svd = svd_analysis(&nambu);
    let gbar = normalized_correlations(&report.state.g);
    let profile = correlation_profile(&gbar, params.bulk(), max_distance);
    let decay = fit_decay_length(&profile).ok();
    let quadratic = match quadratic_steady_correlations(&effq, &params) {
        Ok((gq, _)) => Some(normalized_correlations(&gq)),
        Err(e) => {
            log::warn!("quadratic model skipped: {e}");
            None
        }
    };
    let mut out = Output::new(cfg)?;
    out.csv("green.csv", |w| io::write_complex_matrix(w, &g))?;
    out.csv("correlations.csv", |w| io::write_complex_matrix(w, &gbar))?;
    out.csv("correlation_profile.csv", |w| io::write_correlation_profile(w, &profile))?;
    if let Some(q) = &quadratic {
        out.csv("correlations_quadratic.csv", |w| io::write_complex_matrix(w, q))?;
    }
    out.json("svd.json", &svd)?;
    out.finish(
        "green",
        json!({
            "omega": omega,
            "outcome": report.outcome.as_str(),
            "s_min": svd.s_min,
            "frobenius_g": svd.frobenius_g,
            "decay_length": decay.map(|d| d.length),
        }),
    )?;
    Ok(report.outcome == Outcome::Converged)
}

pub fn oracle(cfg: &RunConfig) -> Result<Completed> {
    let c = &cfg.chain;
    let fock = cfg.fock();
    let rows = cfg
        .oracle
        .kerr_values
        .iter()
        .map(|&u| {
            compare_ansatz_error(c.epsilon_base, c.delta_base, c.kappa, u, &fock)
                .with_context(|| format!("oracle at U = {u}"))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = Output::new(cfg)?;
    out.csv("oracle.csv", |w| io::write_oracle(w, &rows))?;
    out.json("oracle.json", &rows)?;
    out.finish("oracle", json!({ "rows": rows.len() }))?;
    Ok(true)
}

pub fn scaling(cfg: &RunConfig) -> Result<Completed> {
    let fit = finite_size_scaling(
        &cfg.scaling.sizes,
        cfg.chain.delta_base,
        &cfg.params(),
        &cfg.sweep_options(),
        &cfg.scaling_options(),
    )?;
    let mut out = Output::new(cfg)?;
    out.csv("scaling.csv", |w| io::write_scaling(w, &fit))?;
    out.json("scaling.json", &fit)?;
    out.finish(
        "scaling",
        json!({ "exponent_a": fit.exponent_a, "exponent_err": fit.exponent_err }),
    )?;
    Ok(true)
}
