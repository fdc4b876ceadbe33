//! Fixed information rate: the sensor sends at one constant rate over a
//! window `[t1, t2]` around closest approach and stays silent elsewhere.

use crate::error::{invalid, Result, WhetError};
use crate::harvest_store_use::realize_policy;
use crate::numerics::{integrate, integrate_fn, minimize_with_sweep, solve_monotone, BracketedRoot};
use crate::scenario::{PowerProfile, Scenario};

#[derive(Debug, Clone)]
pub struct FircSolution {
    /// Cumulative throughput target (bit/Hz).
    pub r0: f64,
    pub t1: f64,
    pub t2: f64,
    pub p0_min: f64,
    pub p_v: PowerProfile,
    pub p_c: PowerProfile,
    pub p_s: PowerProfile,
    /// `r0 / (t2 - t1)` in bit/Hz/s.
    pub instantaneous_rate: f64,
    /// Set when the optimal window ends at the edge of the pass.
    pub boundary_active: bool,
}

impl FircSolution {
    /// `|L_e'(t1) - L_e'(t2)| / L_e'(t1)`.
    pub fn boundary_residual(&self, sc: &Scenario) -> f64 {
        let a = sc.equivalent_attenuation_unchecked(self.t1);
        let b = sc.equivalent_attenuation_unchecked(self.t2);
        (a - b).abs() / a
    }
}

/// Left endpoint whose equivalent attenuation matches that at `t2`.
pub fn boundary_map(sc: &Scenario, t2: f64) -> Result<f64> {
    let t_end = sc.geometry.t_end();
    if !(0.0..=t_end).contains(&t2) {
        return Err(WhetError::OutOfWindow { t: t2, t_end });
    }
    let g = &sc.geometry;
    let ch = &sc.channel;
    let target = g.d0.powf(ch.alpha_c) * g.distance_unchecked(t2).powf(ch.alpha_s);
    let d1_sq = target.powf(2.0 / (ch.alpha_s + ch.alpha_c));
    let t1 = -(d1_sq - g.d0 * g.d0).max(0.0).sqrt() / g.v0;
    if t1 < -t_end {
        log::warn!("boundary map for t2 = {t2} leaves the pass ({t1}); clamped to {}", -t_end);
        return Ok(-t_end);
    }
    Ok(t1)
}

/// Minimal average control-center power that sustains `r0` over `[t1, t2]`.
pub fn required_avg_power(sc: &Scenario, r0: f64, t1: f64, t2: f64) -> Result<f64> {
    let t_end = sc.geometry.t_end();
    if !(t1 <= 0.0 && t2 >= 0.0 && t1 >= -t_end && t2 <= t_end) {
        return Err(invalid("window", format!("need -t_end <= t1 <= 0 <= t2 <= t_end, got [{t1}, {t2}]")));
    }
    if t2 <= t1 {
        return Err(invalid("window", "t2 must exceed t1".to_string()));
    }
    if !(r0 > 0.0) {
        return Err(invalid("r0", format!("must be > 0, got {r0}")));
    }
    let x = (r0 / (t2 - t1)).exp2() - 1.0;
    let n = sc.tol.sub_points;
    let rate = |t: f64| 1.0 / sc.equivalent_attenuation_unchecked(t);
    let circuit = |t: f64| 1.0 / (sc.energy.xi * sc.downlink(t.min(0.0)));
    let rate_int = integrate_fn(rate, t1, 0.0, n) + integrate_fn(rate, 0.0, t2, n);
    let circ_int = integrate_fn(circuit, t1, 0.0, n) + integrate_fn(circuit, 0.0, t2, n);
    Ok((x * sc.energy.sigma0_sq * rate_int + sc.energy.p_cons * circ_int) / sc.geometry.duration())
}

fn window_profiles(sc: &Scenario, r0: f64, t1: f64, t2: f64) -> Result<(PowerProfile, PowerProfile, PowerProfile)> {
    let x = (r0 / (t2 - t1)).exp2() - 1.0;
    let p_v = PowerProfile::from_fn(sc.grid, |_, t| {
        if t >= t1 && t <= t2 {
            x * sc.energy.sigma0_sq / sc.equivalent_attenuation_unchecked(t)
                + sc.energy.p_cons / (sc.energy.xi * sc.downlink(t.min(0.0)))
        } else {
            0.0
        }
    });
    let real = realize_policy(sc, &p_v, sc.energy.p_m)?;
    Ok((p_v, real.p_c, real.p_s))
}

/// Smallest average power delivering `r0`, searching along the boundary curve.
pub fn min_power(sc: &Scenario, r0: f64) -> Result<FircSolution> {
    if !(r0 > 0.0) {
        return Err(invalid("r0", format!("must be > 0, got {r0}")));
    }
    let t_end = sc.geometry.t_end();
    let lo = t_end * 1e-6;
    let objective =
        |t2: f64| boundary_map(sc, t2).and_then(|t1| required_avg_power(sc, r0, t1, t2)).unwrap_or(f64::INFINITY);
    let (t2, p0_min) = minimize_with_sweep(objective, lo, t_end, sc.tol.golden_time, sc.tol.coarse_points);
    if !p0_min.is_finite() {
        return Err(invalid("r0", format!("{r0} is not reachable within the pass")));
    }
    let t1 = boundary_map(sc, t2)?;
    let (p_v, p_c, p_s) = window_profiles(sc, r0, t1, t2)?;
    let target = p0_min * sc.geometry.duration();
    log::debug!("firc r0 = {r0}: window [{t1}, {t2}], grid snap error {:e}", (integrate(&p_v) - target) / target);
    Ok(FircSolution {
        r0,
        t1,
        t2,
        p0_min,
        p_v,
        p_c,
        p_s,
        instantaneous_rate: r0 / (t2 - t1),
        boundary_active: t_end - t2 <= 2.0 * sc.tol.golden_time,
    })
}

/// Largest fixed-rate throughput affordable at average power `p0`.
pub fn max_rate(sc: &Scenario, p0: f64) -> Result<FircSolution> {
    if !(p0 > 0.0) {
        return Err(invalid("p0", format!("must be > 0, got {p0}")));
    }
    let cost = |r: f64| min_power(sc, r).map(|s| s.p0_min.ln() - p0.ln()).unwrap_or(f64::INFINITY);
    let floor = 1e-9;
    if cost(floor) >= 0.0 {
        log::warn!("average power {p0} W is below the circuit-power floor; no positive rate is feasible");
        let zero = PowerProfile::zeros(sc.grid);
        return Ok(FircSolution {
            r0: 0.0,
            t1: 0.0,
            t2: 0.0,
            p0_min: 0.0,
            p_v: zero.clone(),
            p_c: zero.clone(),
            p_s: zero,
            instantaneous_rate: 0.0,
            boundary_active: false,
        });
    }
    let mut hi = 1.0;
    let mut doublings = 0;
    while cost(hi) < 0.0 {
        if doublings == 60 {
            return Err(WhetError::BracketExhausted { doublings });
        }
        hi *= 2.0;
        doublings += 1;
    }
    let r0 = solve_monotone(cost, BracketedRoot::new(floor, hi, hi * 1e-10))?;
    min_power(sc, r0)
}

/// Constant-power, instant-use, fixed-rate baseline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CtpFirc {
    /// Rate while transmitting (bit/Hz/s).
    pub rate: f64,
    /// Transmission runs on `[-tau, tau]`.
    pub tau: f64,
    pub throughput: f64,
}

fn ctp_snr(sc: &Scenario, t: f64) -> f64 {
    (sc.energy.xi * sc.downlink(t) * sc.energy.p0 - sc.energy.p_cons).max(0.0) * sc.uplink(t) / sc.energy.sigma0_sq
}

fn ctp_reach(sc: &Scenario, rate: f64) -> f64 {
    let need = rate.exp2() - 1.0;
    let t_end = sc.geometry.t_end();
    let slack = |t: f64| ctp_snr(sc, t) - need;
    if slack(0.0) < 0.0 {
        return 0.0;
    }
    if slack(t_end) >= 0.0 {
        return t_end;
    }
    // snr falls with |t|; bisect on the sign change
    solve_monotone(|t| -slack(t), BracketedRoot::new(0.0, t_end, t_end * 1e-13)).unwrap_or(0.0)
}

pub fn ctp_firc_throughput(sc: &Scenario) -> CtpFirc {
    let peak = ctp_snr(sc, 0.0);
    if peak <= 0.0 {
        return CtpFirc { rate: 0.0, tau: 0.0, throughput: 0.0 };
    }
    let top = (1.0 + peak).log2();
    let neg = |rate: f64| -2.0 * rate * ctp_reach(sc, rate);
    let (rate, best) = minimize_with_sweep(neg, 0.0, top, top * 1e-10, 4 * sc.tol.coarse_points);
    CtpFirc { rate, tau: ctp_reach(sc, rate), throughput: -best }
}
