//! Fixed-rate operation under Nakagami-m block fading.
//!
//! The control center follows the deterministic plan. The sensor banks any
//! surplus in a side buffer `Q` and, when a fade leaves it short, drains `Q`
//! first and asks the control center to cover what remains.

use rayon::prelude::*;

use crate::error::{Result, WhetError};
use crate::fixed_rate::{min_power, FircSolution};
use crate::numerics::{compensated_sum, minimize_with_sweep, simpson_weights};
use crate::scenario::{sample_fading_trace, NakagamiShape, PowerProfile, Scenario};

/// Deterministic schedule the simulation starts from.
#[derive(Debug, Clone)]
pub struct FadingPlan {
    pub firc: FircSolution,
    /// Planned sensor consumption: transmit plus circuit power on the window.
    pub p_p: PowerProfile,
}

impl FadingPlan {
    pub fn t1(&self) -> f64 {
        self.firc.t1
    }

    pub fn t2(&self) -> f64 {
        self.firc.t2
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Algorithm1Options {
    /// Cap each step's top-up at 1e6 x P0 and carry the rest forward.
    pub allow_rate_slip: bool,
}

const INJECTION_CAP: f64 = 1e6;

#[derive(Debug, Clone, Default)]
pub struct SimState {
    pub buffer_q: f64,
    /// Sensor-side energy the control center added beyond the plan (J).
    pub cumulative_extra: f64,
    /// Control-center energy spent on those top-ups (J).
    pub extra_cost: f64,
    pub delivered_rate_ok: Vec<bool>,
    pub index: usize,
    pending: f64,
    planned: f64,
    consumed: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    /// Effective average control-center power including top-ups (W).
    pub avg_power: f64,
    pub rate_delivered: f64,
    pub seed: u64,
    pub trials: usize,
    pub planned_energy: f64,
    pub injected_energy: f64,
    pub consumed_energy: f64,
    pub final_q: f64,
}

impl SimResult {
    /// `planned + injected - consumed - Q_final`, relative to planned.
    pub fn ledger_residual(&self) -> f64 {
        let r = self.planned_energy + self.injected_energy - self.consumed_energy - self.final_q;
        r / self.planned_energy.max(f64::MIN_POSITIVE)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloResult {
    pub mean_avg_power: f64,
    pub std_avg_power: f64,
    /// `10 log10` of the mean.
    pub mean_db: f64,
    /// Standard deviation of the per-trial values in dB.
    pub std_db: f64,
    pub mean_rate_delivered: f64,
    pub p0_det: f64,
    pub trials: usize,
    pub base_seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineResult {
    /// Constant control-center power delivering `r0` on average (W).
    pub p0: f64,
    /// Fixed rate the sensor uses whenever it can (bit/Hz/s).
    pub rate: f64,
    pub trials: usize,
    pub base_seed: u64,
}

fn db(x: f64) -> f64 {
    10.0 * x.log10()
}

fn require_symmetric(sc: &Scenario) -> Result<()> {
    if sc.channel.is_symmetric() {
        Ok(())
    } else {
        Err(WhetError::AsymmetricChannel)
    }
}

/// Solves the deterministic fixed-rate problem with fading ignored.
pub fn plan_from_deterministic(sc: &Scenario, r0: f64) -> Result<FadingPlan> {
    require_symmetric(sc)?;
    let firc = min_power(sc, r0)?;
    let p_cons = sc.energy.p_cons;
    let p_p = PowerProfile::from_fn(sc.grid, |i, _| {
        let ps = firc.p_s.values()[i];
        if ps > 0.0 {
            ps + p_cons
        } else {
            0.0
        }
    });
    Ok(FadingPlan { firc, p_p })
}

/// Sensor power needed at `t` to hold the window rate through a fade `beta_sq`.
pub fn required_power_causal(sc: &Scenario, t: f64, beta_sq: f64, r0: f64, t1: f64, t2: f64) -> f64 {
    if t < t1 || t > t2 || t2 <= t1 {
        return 0.0;
    }
    if beta_sq <= 0.0 {
        return f64::INFINITY;
    }
    let x = (r0 / (t2 - t1)).exp2() - 1.0;
    sc.energy.sigma0_sq * x / (sc.uplink(t) * beta_sq) + sc.energy.p_cons
}

impl SimState {
    fn step(&mut self, planned: f64, required: f64, weight: f64, price: f64, cap: Option<f64>) {
        self.index += 1;
        self.planned += planned * weight;
        let deficit = (required - planned) * weight + self.pending;
        self.pending = 0.0;
        if deficit <= 0.0 {
            self.buffer_q -= deficit;
            self.consumed += required * weight;
            self.delivered_rate_ok.push(true);
            return;
        }
        if self.buffer_q >= deficit {
            self.buffer_q -= deficit;
            self.consumed += planned * weight + deficit;
            self.delivered_rate_ok.push(true);
            return;
        }
        let mut shortfall = deficit - self.buffer_q;
        let drained = self.buffer_q;
        self.buffer_q = 0.0;
        let mut ok = true;
        if let Some(cap) = cap {
            let affordable = if price > 0.0 { cap * weight / price } else { shortfall };
            if shortfall > affordable {
                self.pending = shortfall - affordable;
                shortfall = affordable;
                ok = false;
            }
        }
        self.cumulative_extra += shortfall;
        self.extra_cost += shortfall * price;
        self.consumed += planned * weight + drained + shortfall;
        self.delivered_rate_ok.push(ok);
    }
}

/// One causal pass over a single fading realization.
pub fn run_with_plan(sc: &Scenario, plan: &FadingPlan, seed: u64, opts: Algorithm1Options) -> SimResult {
    let grid = sc.grid;
    let w = simpson_weights(grid.len(), grid.step());
    let r0 = plan.firc.r0;
    let cap = opts.allow_rate_slip.then_some(INJECTION_CAP * plan.firc.p0_min);
    let trace = sample_fading_trace(&sc.channel, &grid, seed);

    let mut state = SimState::default();
    let mut window_w = 0.0;
    let mut ok_w = 0.0;
    for (j, beta_sq) in trace.into_iter().enumerate() {
        let planned = plan.p_p.values()[j];
        if planned == 0.0 {
            continue;
        }
        let t = grid.time(j);
        // same as required_power_causal, but exact against the plan when beta_sq = 1
        let p_cons = sc.energy.p_cons;
        let required = if beta_sq > 0.0 { (planned - p_cons) / beta_sq + p_cons } else { f64::INFINITY };
        let price = 1.0 / (sc.energy.xi * sc.downlink(t) * beta_sq);
        state.step(planned, required, w[j], price, cap);
        window_w += w[j];
        if *state.delivered_rate_ok.last().unwrap_or(&true) {
            ok_w += w[j];
        }
    }
    let rate_delivered = if window_w > 0.0 { r0 * ok_w / window_w } else { 0.0 };
    SimResult {
        avg_power: plan.firc.p0_min + state.extra_cost / sc.geometry.duration(),
        rate_delivered,
        seed,
        trials: 1,
        planned_energy: state.planned,
        injected_energy: state.cumulative_extra,
        consumed_energy: state.consumed,
        final_q: state.buffer_q,
    }
}

pub fn run_algorithm1(sc: &Scenario, r0: f64, seed: u64) -> Result<SimResult> {
    let plan = plan_from_deterministic(sc, r0)?;
    Ok(run_with_plan(sc, &plan, seed, Algorithm1Options::default()))
}

pub fn monte_carlo(sc: &Scenario, r0: f64, trials: usize, base_seed: u64) -> Result<MonteCarloResult> {
    monte_carlo_with(sc, r0, trials, base_seed, Algorithm1Options::default())
}

pub fn monte_carlo_with(
    sc: &Scenario,
    r0: f64,
    trials: usize,
    base_seed: u64,
    opts: Algorithm1Options,
) -> Result<MonteCarloResult> {
    if trials == 0 {
        return Err(crate::error::invalid("trials", "must be >= 1".to_string()));
    }
    let plan = plan_from_deterministic(sc, r0)?;
    let runs: Vec<SimResult> =
        (0..trials).into_par_iter().map(|i| run_with_plan(sc, &plan, base_seed.wrapping_add(i as u64), opts)).collect();
    let k = trials as f64;
    let mean = compensated_sum(runs.iter().map(|r| r.avg_power)) / k;
    let var = compensated_sum(runs.iter().map(|r| (r.avg_power - mean).powi(2))) / (k - 1.0).max(1.0);
    let dbs: Vec<f64> = runs.iter().map(|r| db(r.avg_power)).collect();
    let mean_dbs = compensated_sum(dbs.iter().copied()) / k;
    let var_db = compensated_sum(dbs.iter().map(|x| (x - mean_dbs).powi(2))) / (k - 1.0).max(1.0);
    Ok(MonteCarloResult {
        mean_avg_power: mean,
        std_avg_power: var.sqrt(),
        mean_db: db(mean),
        std_db: var_db.sqrt(),
        mean_rate_delivered: compensated_sum(runs.iter().map(|r| r.rate_delivered)) / k,
        p0_det: plan.firc.p0_min,
        trials,
        base_seed,
    })
}

/// Smallest key whose cumulative weight (in key order) reaches `target`.
fn weighted_quantile(items: &mut [(f64, f64)], target: f64) -> Option<f64> {
    let mut slice = items;
    let mut below = 0.0;
    loop {
        if slice.is_empty() {
            return None;
        }
        let mid = slice.len() / 2;
        slice.select_nth_unstable_by(mid, |a, b| a.0.total_cmp(&b.0));
        let left: f64 = slice[..mid].iter().map(|p| p.1).sum();
        if mid > 0 && below + left >= target {
            slice = &mut slice[..mid];
            continue;
        }
        below += left + slice[mid].1;
        if below >= target {
            return Some(slice[mid].0);
        }
        slice = &mut slice[mid + 1..];
    }
}

/// Constant-power, no-storage, fixed-rate baseline on the same fading draws.
///
/// For a rate `rho` the sensor transmits at step `j` of trial `k` exactly when
/// `P0` clears that step's requirement, so the mean throughput is a weighted
/// count and the smallest `P0` meeting `r0` is a weighted quantile. The rate
/// is then chosen to minimize that power.
pub fn ctp_firc_fading_baseline(sc: &Scenario, r0: f64, trials: usize, base_seed: u64) -> Result<BaselineResult> {
    require_symmetric(sc)?;
    if trials == 0 {
        return Err(crate::error::invalid("trials", "must be >= 1".to_string()));
    }
    let grid = sc.grid;
    let n = grid.len();
    let w = simpson_weights(n, grid.step());
    let xi = sc.energy.xi;
    let sigma = sc.energy.sigma0_sq;
    let p_cons = sc.energy.p_cons;
    let inv_g: Vec<f64> = grid.times().iter().map(|&t| 1.0 / sc.uplink(t)).collect();

    // per (trial, step): required P0 = u (Pcons + v x) with x = 2^rho - 1
    let coeffs: Vec<(f64, f64)> = (0..trials)
        .into_par_iter()
        .flat_map_iter(|k| {
            let trace = sample_fading_trace(&sc.channel, &grid, base_seed.wrapping_add(k as u64));
            let inv_g = &inv_g;
            trace.into_iter().enumerate().map(move |(j, b)| (inv_g[j] / (xi * b), sigma * inv_g[j] / b))
        })
        .collect();

    let power_for = |rho: f64| -> f64 {
        let x = rho.exp2() - 1.0;
        let mut items: Vec<(f64, f64)> =
            coeffs.iter().enumerate().map(|(i, &(u, v))| (u * (p_cons + v * x), w[i % n])).collect();
        weighted_quantile(&mut items, r0 * trials as f64 / rho).unwrap_or(f64::INFINITY)
    };
    let lo = r0 / sc.geometry.duration();
    let hi = r0.max(64.0);
    let (rate, p_ln) = minimize_with_sweep(|rho| power_for(rho).ln(), lo, hi, 1e-6 * hi, sc.tol.coarse_points);
    if !p_ln.is_finite() {
        return Err(crate::error::invalid("r0", format!("{r0} is not reachable by the baseline")));
    }
    Ok(BaselineResult { p0: p_ln.exp(), rate, trials, base_seed })
}

/// Nakagami shape as used in reports: `inf` prints as infinity.
pub fn shape_value(m: NakagamiShape) -> f64 {
    match m {
        NakagamiShape::Finite(v) => v,
        NakagamiShape::Infinite => f64::INFINITY,
    }
}
