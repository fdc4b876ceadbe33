//! Instant-use policies: the sensor has no storage, so everything harvested
//! at `t` is either spent at `t` or lost.

use std::f64::consts::LN_2;

use crate::error::{invalid, Result};
use crate::numerics::{integrate, simpson, simpson_weights};
use crate::scenario::{PowerProfile, Scenario};
use crate::waterfill::WaterFill;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyKind {
    /// Constant control-center power.
    Constant,
    /// Water-filling control-center power.
    Optimal,
}

#[derive(Debug, Clone)]
pub struct HauSolution {
    pub policy_kind: PolicyKind,
    pub p_c: PowerProfile,
    pub p_s: PowerProfile,
    /// Lagrange multiplier of the average-power constraint (optimal policy only).
    pub lambda1: Option<f64>,
    /// Cumulative throughput over the pass (bit/Hz).
    pub throughput: f64,
}

/// Sensor power when harvested energy is spent on the spot: `(ξ|h_c|² p_c − Pcons)⁺`.
pub(crate) fn instant_sensor_power(sc: &Scenario, p_c: &PowerProfile) -> PowerProfile {
    let xi = sc.energy.xi;
    let p_cons = sc.energy.p_cons;
    PowerProfile::from_fn(sc.grid, |i, t| (xi * sc.downlink(t) * p_c.values()[i] - p_cons).max(0.0))
}

/// `∫ log2(1 + |h_s|² p_s / σ0²) dt` over the grid.
pub fn throughput_of(sc: &Scenario, p_s: &PowerProfile) -> f64 {
    let sigma = sc.energy.sigma0_sq;
    let rates: Vec<f64> =
        sc.grid.times().iter().zip(p_s.values()).map(|(&t, &p)| (1.0 + sc.uplink(t) * p / sigma).log2()).collect();
    simpson(&rates, sc.grid.step())
}

pub fn ctp_throughput(sc: &Scenario) -> HauSolution {
    let p_c = PowerProfile::from_fn(sc.grid, |_, _| sc.energy.p0);
    let p_s = instant_sensor_power(sc, &p_c);
    let throughput = throughput_of(sc, &p_s);
    HauSolution { policy_kind: PolicyKind::Constant, p_c, p_s, lambda1: None, throughput }
}

pub(crate) fn hau_waterfill(sc: &Scenario) -> WaterFill {
    let xi = sc.energy.xi;
    let (floor, offset): (Vec<f64>, Vec<f64>) = sc
        .grid
        .times()
        .iter()
        .map(|&t| {
            let hc = sc.downlink(t);
            let hs = sc.uplink(t);
            (sc.energy.sigma0_sq / (xi * hc * hs), sc.energy.p_cons / (xi * hc))
        })
        .unzip();
    WaterFill { floor, offset, weights: simpson_weights(sc.grid.len(), sc.grid.step()) }
}

/// Control-center power for a given multiplier, with samples whose sensor
/// power would not be positive switched off.
pub fn otp_power_profile(sc: &Scenario, lambda1: f64) -> Result<PowerProfile> {
    if !(lambda1 > 0.0) {
        return Err(invalid("lambda1", format!("must be > 0, got {lambda1}")));
    }
    let level = 1.0 / (lambda1 * LN_2);
    let values = hau_waterfill(sc).power_at(level);
    PowerProfile::new(sc.grid, values)
}

pub fn solve_otp(sc: &Scenario) -> Result<HauSolution> {
    let wf = hau_waterfill(sc);
    let sol = wf.solve(sc.energy_budget())?;
    let p_c = PowerProfile::new(sc.grid, sol.power)?;
    let p_s = instant_sensor_power(sc, &p_c);
    let throughput = throughput_of(sc, &p_s);
    Ok(HauSolution { policy_kind: PolicyKind::Optimal, p_c, p_s, lambda1: Some(1.0 / (sol.level * LN_2)), throughput })
}

/// Closed-form throughput `∫ log2 max(ξGsGc / (λ ln2 d^{αs+αc} σ0²), 1)`.
pub fn otp_closed_form_throughput(sc: &Scenario, lambda1: f64) -> f64 {
    let level = 1.0 / (lambda1 * LN_2);
    let wf = hau_waterfill(sc);
    let r: Vec<f64> = wf.floor.iter().map(|a| (level / a).max(1.0).log2()).collect();
    simpson(&r, sc.grid.step())
}

impl HauSolution {
    pub fn average_power(&self, sc: &Scenario) -> f64 {
        integrate(&self.p_c) / sc.geometry.duration()
    }
}
