//! Sweeps behind the published figures, written as CSV.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;

use crate::config::{Experiment, ScenarioConfig};
use crate::error::WhetError;
use crate::fading_sim::{ctp_firc_fading_baseline, monte_carlo_with, shape_value, Algorithm1Options};
use crate::fixed_rate::{ctp_firc_throughput, max_rate, min_power};
use crate::harvest_and_use::{ctp_throughput, solve_otp};
use crate::harvest_store_use::solve_hsu;
use crate::numerics::{solve_monotone, BracketedRoot};
use crate::scenario::{ChannelParams, Scenario};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("{experiment} at {point}: {source}")]
    Model { experiment: Experiment, point: String, source: WhetError },
    #[error("{experiment}: {source}")]
    Setup { experiment: Experiment, source: WhetError },
    #[error("writing {}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("writing {}: {source}", path.display())]
    Csv { path: PathBuf, source: csv::Error },
}

#[derive(Debug, Clone)]
pub struct Report {
    pub experiment: Experiment,
    pub csv_path: PathBuf,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
    pub summary: String,
}

pub fn header(experiment: Experiment) -> Vec<&'static str> {
    match experiment {
        Experiment::Fig3a => vec!["snr_db", "thr_ctp_hau", "thr_otp_hau", "thr_otp_hsu", "thr_otp_hsu_pm20db"],
        Experiment::Fig3b => vec!["alpha0", "energy_ctp_norm", "energy_otp_hau_norm", "energy_otp_hsu_norm"],
        Experiment::Fig4 => vec!["snr_db", "thr_ctp_firc_hau", "thr_otp_firc_hsu", "thr_otp_hsu"],
        Experiment::Fig5a => vec!["r0", "m", "mean_p0_db", "std_p0_db", "p0_det_db"],
        Experiment::Fig5b => vec!["r0", "m", "gain_db_vs_ctp_firc"],
        Experiment::Single => vec!["policy", "lambda", "t1", "t2", "throughput", "eta", "p0"],
    }
}

fn db(x: f64) -> f64 {
    10.0 * x.log10()
}

fn from_db(x: f64) -> f64 {
    10f64.powf(x / 10.0)
}

fn fmt(v: f64) -> String {
    format!("{v}")
}

/// Smallest `P0` at which `throughput` reaches `target`, by bisection in `log10 P0`.
pub fn power_for_throughput(
    sc: &Scenario,
    target: f64,
    throughput: impl Fn(&Scenario) -> crate::Result<f64>,
) -> crate::Result<f64> {
    let eval = |lp: f64| -> f64 {
        sc.with_p0(10f64.powf(lp)).and_then(|s| throughput(&s)).map(|t| t - target).unwrap_or(f64::NAN)
    };
    let lo = -8.0;
    let mut hi = 8.0;
    let mut steps = 0;
    while eval(hi) < 0.0 {
        if steps == 40 {
            return Err(WhetError::BracketExhausted { doublings: steps });
        }
        hi += 8.0;
        steps += 1;
    }
    let lp = solve_monotone(eval, BracketedRoot::new(lo, hi, 1e-12))?;
    Ok(10f64.powf(lp))
}

struct Ctx<'a> {
    cfg: &'a ScenarioConfig,
    base: Scenario,
}

impl Ctx<'_> {
    fn at_snr(&self, snr_db: f64) -> crate::Result<Scenario> {
        self.base.with_p_m(None)?.with_p0(self.cfg.energy.sigma0_sq * from_db(snr_db))
    }

    fn model(&self, point: String) -> impl Fn(WhetError) -> ExperimentError + '_ {
        let experiment = self.cfg.experiment;
        move |source| ExperimentError::Model { experiment, point: point.clone(), source }
    }
}

fn fig3a(ctx: &Ctx) -> Result<Vec<Vec<String>>, ExperimentError> {
    ctx.cfg
        .snr_db
        .par_iter()
        .map(|&snr| {
            let wrap = ctx.model(format!("snr_db = {snr}"));
            let sc = ctx.at_snr(snr).map_err(&wrap)?;
            let ctp = ctp_throughput(&sc).throughput;
            let otp = solve_otp(&sc).map_err(&wrap)?.throughput;
            let hsu = solve_hsu(&sc).map_err(&wrap)?.throughput;
            let bounded = sc.with_p_m(Some(sc.energy.p0 * from_db(ctx.cfg.pm_ratio_db))).map_err(&wrap)?;
            let hsu_pm = solve_hsu(&bounded).map_err(&wrap)?.throughput;
            Ok([snr, ctp, otp, hsu, hsu_pm].map(fmt).to_vec())
        })
        .collect()
}

fn fig3b(ctx: &Ctx) -> Result<Vec<Vec<String>>, ExperimentError> {
    let target = ctx.cfg.target_throughput;
    ctx.cfg
        .alpha0
        .par_iter()
        .map(|&alpha| {
            let wrap = ctx.model(format!("alpha0 = {alpha}"));
            let ch = &ctx.base.channel;
            let mut sc = ctx.base.with_p_m(None).map_err(&wrap)?;
            sc.channel = ChannelParams::new(ch.gc, ch.gs, alpha, alpha, ch.m).map_err(&wrap)?;
            let ctp = power_for_throughput(&sc, target, |s| Ok(ctp_throughput(s).throughput)).map_err(&wrap)?;
            let otp = power_for_throughput(&sc, target, |s| Ok(solve_otp(s)?.throughput)).map_err(&wrap)?;
            let hsu = power_for_throughput(&sc, target, |s| Ok(solve_hsu(s)?.throughput)).map_err(&wrap)?;
            // energies share the factor 2 L0 / v0, so power ratios are energy ratios
            Ok([alpha, 1.0, otp / ctp, hsu / ctp].map(fmt).to_vec())
        })
        .collect()
}

fn fig4(ctx: &Ctx) -> Result<Vec<Vec<String>>, ExperimentError> {
    ctx.cfg
        .snr_db
        .par_iter()
        .map(|&snr| {
            let wrap = ctx.model(format!("snr_db = {snr}"));
            let sc = ctx.at_snr(snr).map_err(&wrap)?;
            let ctp_firc = ctp_firc_throughput(&sc).throughput;
            let firc = max_rate(&sc, sc.energy.p0).map_err(&wrap)?.r0;
            let hsu = solve_hsu(&sc).map_err(&wrap)?.throughput;
            Ok([snr, ctp_firc, firc, hsu].map(fmt).to_vec())
        })
        .collect()
}

fn fading_points(ctx: &Ctx) -> Vec<(f64, crate::scenario::NakagamiShape)> {
    ctx.cfg.r0.iter().flat_map(|&r| ctx.cfg.m_list.iter().map(move |&m| (r, m))).collect()
}

fn fig5(ctx: &Ctx, gain: bool) -> Result<Vec<Vec<String>>, ExperimentError> {
    let opts = Algorithm1Options { allow_rate_slip: ctx.cfg.allow_rate_slip };
    let (trials, seed) = (ctx.cfg.trials, ctx.cfg.base_seed);
    let mut rows = Vec::new();
    for (r0, m) in fading_points(ctx) {
        let wrap = ctx.model(format!("r0 = {r0}, m = {m}"));
        let mut sc = ctx.base.with_p_m(None).map_err(&wrap)?;
        sc.channel.m = m;
        let mc = monte_carlo_with(&sc, r0, trials, seed, opts).map_err(&wrap)?;
        let m_val = shape_value(m);
        if gain {
            let base = ctp_firc_fading_baseline(&sc, r0, trials, seed).map_err(&wrap)?;
            rows.push([r0, m_val, db(base.p0) - mc.mean_db].map(fmt).to_vec());
        } else {
            rows.push([r0, m_val, mc.mean_db, mc.std_db, db(mc.p0_det)].map(fmt).to_vec());
        }
    }
    Ok(rows)
}

fn single(ctx: &Ctx) -> Result<(Vec<Vec<String>>, String), ExperimentError> {
    let sc = &ctx.base;
    let p0 = sc.energy.p0;
    let wrap = ctx.model(format!("p0 = {p0}"));
    let ctp = ctp_throughput(sc);
    let otp = solve_otp(sc).map_err(&wrap)?;
    let hsu = solve_hsu(sc).map_err(&wrap)?;
    let r0 = ctx.cfg.r0[0];
    let firc = min_power(sc, r0).map_err(&wrap)?;
    let (t_lo, t_hi) = (-sc.geometry.t_end(), sc.geometry.t_end());
    let nan = f64::NAN;
    let rows = vec![
        ["ctp_hau".to_string(), fmt(nan), fmt(t_lo), fmt(t_hi), fmt(ctp.throughput), fmt(0.0), fmt(p0)].to_vec(),
        [
            "otp_hau".to_string(),
            fmt(otp.lambda1.unwrap_or(nan)),
            fmt(t_lo),
            fmt(t_hi),
            fmt(otp.throughput),
            fmt(0.0),
            fmt(p0),
        ]
        .to_vec(),
        ["otp_hsu".to_string(), fmt(hsu.lambda2), fmt(t_lo), fmt(t_hi), fmt(hsu.throughput), fmt(hsu.eta), fmt(p0)]
            .to_vec(),
        ["otp_firc_hsu".to_string(), fmt(nan), fmt(firc.t1), fmt(firc.t2), fmt(r0), fmt(0.0), fmt(firc.p0_min)]
            .to_vec(),
    ];
    let summary = format!(
        "lambda1={}\nlambda2={}\neta={}\nthroughput_ctp_hau={}\nthroughput_otp_hau={}\nthroughput_otp_hsu={}\n\
         firc_r0={}\nfirc_t1={}\nfirc_t2={}\nfirc_p0_min={}",
        fmt(otp.lambda1.unwrap_or(nan)),
        fmt(hsu.lambda2),
        fmt(hsu.eta),
        fmt(ctp.throughput),
        fmt(otp.throughput),
        fmt(hsu.throughput),
        fmt(r0),
        fmt(firc.t1),
        fmt(firc.t2),
        fmt(firc.p0_min)
    );
    Ok((rows, summary))
}

fn write_atomic(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<(), ExperimentError> {
    let io = |source| ExperimentError::Io { path: path.to_path_buf(), source };
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(io)?;
    let tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    {
        let csv_err = |source| ExperimentError::Csv { path: path.to_path_buf(), source };
        let mut w = csv::Writer::from_writer(tmp.as_file());
        w.write_record(header).map_err(csv_err)?;
        for row in rows {
            w.write_record(row).map_err(csv_err)?;
        }
        w.flush().map_err(io)?;
    }
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

/// Runs the configured experiment and writes `<out>/<experiment>.csv`.
pub fn run_experiment(cfg: &ScenarioConfig) -> Result<Report, ExperimentError> {
    let experiment = cfg.experiment;
    let base = cfg.scenario().map_err(|source| ExperimentError::Setup { experiment, source })?;
    let ctx = Ctx { cfg, base };
    let header = header(experiment);
    let (rows, extra) = match experiment {
        Experiment::Fig3a => (fig3a(&ctx)?, None),
        Experiment::Fig3b => (fig3b(&ctx)?, None),
        Experiment::Fig4 => (fig4(&ctx)?, None),
        Experiment::Fig5a => (fig5(&ctx, false)?, None),
        Experiment::Fig5b => (fig5(&ctx, true)?, None),
        Experiment::Single => {
            let (rows, s) = single(&ctx)?;
            (rows, Some(s))
        }
    };
    let csv_path = cfg.out.join(format!("{}.csv", experiment.name()));
    write_atomic(&csv_path, &header, &rows)?;
    let mut summary = format!("{experiment}: {} rows written to {}", rows.len(), csv_path.display());
    if let Some(s) = extra {
        summary = format!("{s}\n{summary}");
    }
    log::info!("{summary}");
    Ok(Report { experiment, csv_path, header, rows, summary })
}
