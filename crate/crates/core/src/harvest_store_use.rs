//! Buffered policy: the sensor owns a lossless battery of unbounded capacity.
//!
//! Energy the sensor spends before closest approach is best shipped at the
//! moment it is spent; energy spent afterwards is best shipped at `t = 0`,
//! where the downlink attenuation is smallest. Modelling that with a virtual
//! transmitter turns the buffered problem into an instant-use one with a
//! piecewise attenuation, which water-filling then solves. The realized
//! control-center schedule follows the virtual one on the left half and
//! front-loads the whole right-half energy at `t = 0`.

use std::f64::consts::LN_2;

use crate::error::{invalid, Result, WhetError};
use crate::harvest_and_use::throughput_of;
use crate::numerics::{integrate_fn, simpson, simpson_weights};
use crate::scenario::{PowerProfile, Scenario};
use crate::waterfill::WaterFill;

/// How the right-half energy leaves the control center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Burst {
    /// All of it at the `t = 0` sample. The stand-in for a Dirac impulse.
    Impulse { energy: f64 },
    /// Constant peak power on `[-half_width, half_width]`.
    Bounded { power: f64, half_width: f64 },
}

#[derive(Debug, Clone)]
pub struct Realization {
    pub p_c: PowerProfile,
    pub p_s: PowerProfile,
    pub burst: Burst,
    /// Burst half-width; zero for the impulse.
    pub delta_t_m: f64,
    /// Share of the ideal burst harvest lost to the peak-power cap.
    pub eta: f64,
}

#[derive(Debug, Clone)]
pub struct HsuSolution {
    pub p_v: PowerProfile,
    pub p_c: PowerProfile,
    pub p_s: PowerProfile,
    pub lambda2: f64,
    /// Throughput of the realized sensor schedule (bit/Hz).
    pub throughput: f64,
    /// Closed-form throughput of the virtual problem at `lambda2`.
    pub virtual_throughput: f64,
    pub eta: f64,
    pub delta_t_m: f64,
    pub burst: Burst,
}

/// Downlink attenuation `ξ|h_c|²` at the instant energy for time `t` is shipped.
fn transfer_attenuation(sc: &Scenario, t: f64) -> f64 {
    sc.energy.xi * sc.downlink(t.min(0.0))
}

pub(crate) fn hsu_waterfill(sc: &Scenario) -> WaterFill {
    let sigma = sc.energy.sigma0_sq;
    let (floor, offset): (Vec<f64>, Vec<f64>) = sc
        .grid
        .times()
        .iter()
        .map(|&t| (sigma / sc.equivalent_attenuation_unchecked(t), sc.energy.p_cons / transfer_attenuation(sc, t)))
        .unzip();
    WaterFill { floor, offset, weights: simpson_weights(sc.grid.len(), sc.grid.step()) }
}

/// Virtual-transmitter power for a given multiplier.
pub fn virtual_power_profile(sc: &Scenario, lambda2: f64) -> Result<PowerProfile> {
    if !(lambda2 > 0.0) {
        return Err(invalid("lambda2", format!("must be > 0, got {lambda2}")));
    }
    let level = 1.0 / (lambda2 * LN_2);
    PowerProfile::new(sc.grid, hsu_waterfill(sc).power_at(level))
}

/// `∫ log2 max(L_e'(t) / (λ ln2 σ0²), 1) dt`, the closed-form optimum value.
pub fn virtual_closed_form_throughput(sc: &Scenario, lambda2: f64) -> f64 {
    let level = 1.0 / (lambda2 * LN_2);
    let wf = hsu_waterfill(sc);
    let r: Vec<f64> = wf.floor.iter().map(|a| (level / a).max(1.0).log2()).collect();
    simpson(&r, sc.grid.step())
}

/// Energy the virtual transmitter spends on `[0, t_end]` (right-half Simpson).
pub fn right_half_energy(sc: &Scenario, p_v: &PowerProfile) -> f64 {
    let c = sc.grid.center();
    simpson(&p_v.values()[c..], sc.grid.step())
}

pub fn solve_hsu(sc: &Scenario) -> Result<HsuSolution> {
    let sol = hsu_waterfill(sc).solve(sc.energy_budget())?;
    let lambda2 = 1.0 / (sol.level * LN_2);
    let p_v = PowerProfile::new(sc.grid, sol.power)?;
    let real = realize_policy(sc, &p_v, sc.energy.p_m)?;
    let throughput = throughput_of(sc, &real.p_s);
    Ok(HsuSolution {
        virtual_throughput: virtual_closed_form_throughput(sc, lambda2),
        p_v,
        p_c: real.p_c,
        p_s: real.p_s,
        lambda2,
        throughput,
        eta: real.eta,
        delta_t_m: real.delta_t_m,
        burst: real.burst,
    })
}

/// Harvested energy of the bounded burst attributed to the cell of sample `j`.
fn burst_cell_energy(sc: &Scenario, power: f64, half_width: f64, j: usize) -> f64 {
    let h = sc.grid.step();
    let t = sc.grid.time(j);
    let a = (t - 0.5 * h).max(-half_width);
    let b = (t + 0.5 * h).min(half_width);
    if b <= a {
        return 0.0;
    }
    let xi = sc.energy.xi;
    integrate_fn(|tau| xi * sc.downlink(tau) * power, a, b, 33)
}

fn burst_cells(sc: &Scenario, power: f64, half_width: f64) -> Vec<(usize, f64)> {
    let h = sc.grid.step();
    let first = sc.grid.nearest(-half_width - h).saturating_sub(1);
    let last = (sc.grid.nearest(half_width + h) + 1).min(sc.grid.len() - 1);
    (first..=last).map(|j| (j, burst_cell_energy(sc, power, half_width, j))).filter(|(_, e)| *e > 0.0).collect()
}

/// Turns a virtual-transmitter profile into control-center and sensor schedules.
pub fn realize_policy(sc: &Scenario, p_v: &PowerProfile, p_m: Option<f64>) -> Result<Realization> {
    let grid = sc.grid;
    let c = grid.center();
    let h = grid.step();
    let n = grid.len();
    let w = simpson_weights(n, h);
    let pv = p_v.values();
    let p_cons = sc.energy.p_cons;
    let k0 = transfer_attenuation(sc, 0.0);
    let e_plus = right_half_energy(sc, p_v);

    let left_sensor = |j: usize| (transfer_attenuation(sc, grid.time(j)) * pv[j] - p_cons).max(0.0);

    match p_m {
        None => {
            let mut p_c = vec![0.0; n];
            p_c[..c].copy_from_slice(&pv[..c]);
            // the center sample carries its own left-half share plus the lump
            p_c[c] = (pv[c] * h / 3.0 + e_plus) / w[c];
            let p_s: Vec<f64> =
                (0..n).map(|j| if j < c { left_sensor(j) } else { (k0 * pv[j] - p_cons).max(0.0) }).collect();
            Ok(Realization {
                p_c: PowerProfile::new(grid, p_c)?,
                p_s: PowerProfile::new(grid, p_s)?,
                burst: Burst::Impulse { energy: e_plus },
                delta_t_m: 0.0,
                eta: 0.0,
            })
        }
        Some(power) => {
            if !(power > 0.0) {
                return Err(invalid("p_m", format!("must be > 0, got {power}")));
            }
            let half_width = e_plus / (2.0 * power);
            if half_width > grid.t_end() {
                return Err(WhetError::BurstTooLong { half_width, t_end: grid.t_end() });
            }
            let cells = burst_cells(sc, power, half_width);
            let harvested: f64 = cells.iter().map(|(_, e)| e).sum();
            let ideal = k0 * e_plus;
            let eta = if ideal > 0.0 { (1.0 - harvested / ideal).clamp(0.0, 1.0) } else { 0.0 };

            let in_burst = |t: f64| t.abs() <= half_width;
            let p_c: Vec<f64> = (0..n)
                .map(|j| {
                    let t = grid.time(j);
                    if in_burst(t) && half_width > 0.0 {
                        power
                    } else if t < 0.0 {
                        pv[j]
                    } else {
                        0.0
                    }
                })
                .collect();

            // sensor samples from the burst onset on are paid for by the burst
            let onset = (0..c).find(|&j| grid.time(j) >= -half_width).unwrap_or(c);
            let mut p_s = vec![0.0; n];
            for (j, ps) in p_s.iter_mut().enumerate().take(c) {
                *ps = left_sensor(j);
            }
            let left_in_burst: f64 =
                (onset..c).map(|j| w[j] * (p_s[j] + if p_s[j] > 0.0 { p_cons } else { 0.0 })).sum();
            let right_demand: f64 = (c..n).map(|j| w[j] * k0 * pv[j]).sum();
            let scale = if right_demand > 0.0 { ((harvested - left_in_burst) / right_demand).max(0.0) } else { 0.0 };
            for j in c..n {
                p_s[j] = (scale * k0 * pv[j] - p_cons).max(0.0);
            }
            Ok(Realization {
                p_c: PowerProfile::new(grid, p_c)?,
                p_s: PowerProfile::new(grid, p_s)?,
                burst: Burst::Bounded { power, half_width },
                delta_t_m: half_width,
                eta,
            })
        }
    }
}

/// Largest excess of cumulative sensor consumption over cumulative harvest,
/// relative to the total harvest. Non-positive means the schedule is causal.
///
/// Each sample carries its quadrature weight as a point mass, so the ledger
/// closes exactly against [`crate::numerics::integrate`]. A bounded burst is
/// credited cell by cell from its exact harvest integral; for an impulse the
/// lump already sits in the `t = 0` sample of `p_c`.
pub fn verify_causality(sc: &Scenario, p_c: &PowerProfile, p_s: &PowerProfile, burst: Option<Burst>) -> f64 {
    let grid = sc.grid;
    let n = grid.len();
    let w = simpson_weights(n, grid.step());
    let xi = sc.energy.xi;
    let p_cons = sc.energy.p_cons;

    let mut harvest: Vec<f64> = (0..n).map(|j| w[j] * xi * sc.downlink(grid.time(j)) * p_c.values()[j]).collect();
    if let Some(Burst::Bounded { power, half_width }) = burst {
        for (j, h) in harvest.iter_mut().enumerate() {
            if grid.time(j).abs() <= half_width {
                *h = 0.0;
            }
        }
        for (j, e) in burst_cells(sc, power, half_width) {
            harvest[j] += e;
        }
    }
    let total: f64 = harvest.iter().sum();
    let scale = if total > 0.0 { total } else { 1.0 };

    let mut cum_h = 0.0;
    let mut cum_c = 0.0;
    let mut worst = f64::NEG_INFINITY;
    for j in 0..n {
        cum_h += harvest[j];
        let ps = p_s.values()[j];
        cum_c += w[j] * (ps + if ps > 0.0 { p_cons } else { 0.0 });
        worst = worst.max((cum_c - cum_h) / scale);
    }
    worst
}

impl HsuSolution {
    pub fn causality_violation(&self, sc: &Scenario) -> f64 {
        let burst = matches!(self.burst, Burst::Bounded { .. }).then_some(self.burst);
        verify_causality(sc, &self.p_c, &self.p_s, burst)
    }
}
