//! Geometry, link parameters and the sampled time axis.
//!
//! The sensor sits at distance `d0` from a straight track. The control center
//! moves along the track at constant speed `v0` and stays in coverage for
//! `t ∈ [-L0/v0, +L0/v0]`, with `t = 0` at the point of closest approach.
//! All channel quantities here are power gains (squared magnitudes).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};

use crate::error::{invalid, Result, WhetError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioGeometry {
    pub d0: f64,
    pub l0: f64,
    pub v0: f64,
}

impl ScenarioGeometry {
    pub fn new(d0: f64, l0: f64, v0: f64) -> Result<Self> {
        for (name, v) in [("d0", d0), ("l0", l0), ("v0", v0)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(name, format!("must be finite and > 0, got {v}")));
            }
        }
        Ok(Self { d0, l0, v0 })
    }

    /// Coverage radius `sqrt(d0² + L0²)`.
    pub fn dm(&self) -> f64 {
        self.d0.hypot(self.l0)
    }

    /// Half-length of the coverage window, `L0 / v0`.
    pub fn t_end(&self) -> f64 {
        self.l0 / self.v0
    }

    /// Length of the whole pass, `2 L0 / v0`.
    pub fn duration(&self) -> f64 {
        2.0 * self.t_end()
    }

    fn check(&self, t: f64) -> Result<()> {
        let t_end = self.t_end();
        if t.abs() > t_end * (1.0 + 1e-12) || t.is_nan() {
            return Err(WhetError::OutOfWindow { t, t_end });
        }
        Ok(())
    }

    /// Sensor to control-center distance at time `t`.
    pub fn distance(&self, t: f64) -> Result<f64> {
        self.check(t)?;
        Ok(self.distance_unchecked(t))
    }

    #[inline]
    pub(crate) fn distance_unchecked(&self, t: f64) -> f64 {
        self.d0.hypot(self.v0 * t)
    }
}

/// Nakagami shape parameter, with `Infinite` standing for a deterministic channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NakagamiShape {
    Finite(f64),
    Infinite,
}

impl NakagamiShape {
    pub fn is_infinite(&self) -> bool {
        matches!(self, NakagamiShape::Infinite)
    }
}

impl std::fmt::Display for NakagamiShape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            NakagamiShape::Finite(m) => write!(f, "{m}"),
            NakagamiShape::Infinite => f.write_str("inf"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Link {
    /// Control center to sensor (energy).
    Downlink,
    /// Sensor to control center (information).
    Uplink,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    pub gc: f64,
    pub gs: f64,
    pub alpha_c: f64,
    pub alpha_s: f64,
    pub m: NakagamiShape,
}

impl ChannelParams {
    pub fn new(gc: f64, gs: f64, alpha_c: f64, alpha_s: f64, m: NakagamiShape) -> Result<Self> {
        for (name, v) in [("gc", gc), ("gs", gs)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(name, format!("must be finite and > 0, got {v}")));
            }
        }
        for (name, v) in [("alpha_c", alpha_c), ("alpha_s", alpha_s)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(invalid(name, format!("must be finite and >= 0, got {v}")));
            }
            if !(2.0..=5.0).contains(&v) {
                log::warn!("{name} = {v} is outside the usual path-loss range [2, 5]");
            }
        }
        if let NakagamiShape::Finite(m) = m {
            if !(m.is_finite() && m >= 0.5) {
                return Err(invalid("m", format!("Nakagami shape must be >= 0.5, got {m}")));
            }
        }
        Ok(Self { gc, gs, alpha_c, alpha_s, m })
    }

    pub fn is_symmetric(&self) -> bool {
        self.gc == self.gs && self.alpha_c == self.alpha_s
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyParams {
    /// Harvesting efficiency.
    pub xi: f64,
    /// Sensor circuit power while active (W).
    pub p_cons: f64,
    /// Average control-center power budget (W).
    pub p0: f64,
    /// Receiver noise power (W).
    pub sigma0_sq: f64,
    /// Peak control-center power; `None` allows an ideal impulse.
    pub p_m: Option<f64>,
}

impl EnergyParams {
    pub fn new(xi: f64, p_cons: f64, p0: f64, sigma0_sq: f64, p_m: Option<f64>) -> Result<Self> {
        if !(xi > 0.0 && xi <= 1.0) {
            return Err(invalid("xi", format!("must lie in (0, 1], got {xi}")));
        }
        if !(p_cons.is_finite() && p_cons >= 0.0) {
            return Err(invalid("p_cons", format!("must be finite and >= 0, got {p_cons}")));
        }
        if !(p0.is_finite() && p0 > 0.0) {
            return Err(invalid("p0", format!("must be finite and > 0, got {p0}")));
        }
        if !(sigma0_sq.is_finite() && sigma0_sq > 0.0) {
            return Err(invalid("sigma0_sq", format!("must be finite and > 0, got {sigma0_sq}")));
        }
        if let Some(pm) = p_m {
            if !(pm.is_finite() && pm > p0) {
                return Err(invalid("p_m", format!("must be finite and > p0 = {p0}, got {pm}")));
            }
        }
        Ok(Self { xi, p_cons, p0, sigma0_sq, p_m })
    }
}

/// Uniform grid over `[-t_end, t_end]` with `n ≡ 1 (mod 4)` samples.
///
/// `n` odd puts `t = 0` on a grid point; the stronger `n ≡ 1 (mod 4)` also
/// lets each half window be integrated with Simpson's rule on its own.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    n: usize,
    t_end: f64,
}

impl TimeGrid {
    pub fn new(n: usize, t_end: f64) -> Result<Self> {
        if n < 5 || n % 4 != 1 {
            return Err(invalid("grid", format!("sample count must be >= 5 and ≡ 1 (mod 4), got {n}")));
        }
        if !(t_end.is_finite() && t_end > 0.0) {
            return Err(invalid("t_end", format!("must be finite and > 0, got {t_end}")));
        }
        Ok(Self { n, t_end })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    /// Index of `t = 0`.
    pub fn center(&self) -> usize {
        (self.n - 1) / 2
    }

    pub fn step(&self) -> f64 {
        self.t_end / self.center() as f64
    }

    pub fn time(&self, i: usize) -> f64 {
        let c = self.center();
        if i == 0 {
            -self.t_end
        } else if i == self.n - 1 {
            self.t_end
        } else {
            (i as f64 - c as f64) * self.step()
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.time(i)).collect()
    }

    /// Nearest grid index to `t` (clamped to the window).
    pub fn nearest(&self, t: f64) -> usize {
        let c = self.center() as f64;
        let idx = (t / self.step() + c).round();
        idx.clamp(0.0, (self.n - 1) as f64) as usize
    }
}

/// Nonnegative power samples on a [`TimeGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct PowerProfile {
    grid: TimeGrid,
    values: Vec<f64>,
}

impl PowerProfile {
    pub fn new(grid: TimeGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(invalid("profile", format!("expected {} samples, got {}", grid.len(), values.len())));
        }
        if let Some(i) = values.iter().position(|v| !(*v >= 0.0)) {
            return Err(invalid("profile", format!("sample {i} is negative or NaN ({})", values[i])));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: TimeGrid) -> Self {
        Self { grid, values: vec![0.0; grid.len()] }
    }

    pub(crate) fn from_fn(grid: TimeGrid, mut f: impl FnMut(usize, f64) -> f64) -> Self {
        let values = (0..grid.len())
            .map(|i| {
                let v = f(i, grid.time(i));
                debug_assert!(v >= 0.0, "negative power {v} at sample {i}");
                v.max(0.0)
            })
            .collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Whether the sensor is active at sample `i` (`I{p_s > 0}`).
    pub fn active(&self, i: usize) -> bool {
        self.values[i] > 0.0
    }
}

/// Solver controls. None of these come from the model itself.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Absolute time tolerance (s) of the window search.
    pub golden_time: f64,
    /// Points in the coarse sweep that precedes the window search.
    pub coarse_points: usize,
    /// Samples per sub-interval integral (odd).
    pub sub_points: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { golden_time: 1e-6, coarse_points: 64, sub_points: 513 }
    }
}

/// Everything a policy solver needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scenario {
    pub geometry: ScenarioGeometry,
    pub channel: ChannelParams,
    pub energy: EnergyParams,
    pub grid: TimeGrid,
    pub tol: Tolerances,
}

pub const DEFAULT_GRID: usize = 2001;

impl Scenario {
    pub fn new(
        geometry: ScenarioGeometry,
        channel: ChannelParams,
        energy: EnergyParams,
        grid_points: usize,
    ) -> Result<Self> {
        let grid = TimeGrid::new(grid_points, geometry.t_end())?;
        Ok(Self { geometry, channel, energy, grid, tol: Tolerances::default() })
    }

    /// Reference pass (d0 = 10, L0 = 100, v0 = 20, 10 dB gains, alpha = 3) with the given average power and unit noise power.
    pub fn reference(p0: f64) -> Self {
        let geometry = ScenarioGeometry::new(10.0, 100.0, 20.0).expect("valid geometry");
        let channel = ChannelParams::new(10.0, 10.0, 3.0, 3.0, NakagamiShape::Infinite).expect("valid channel");
        let energy = EnergyParams::new(0.5, 5e-3, p0, 1.0, None).expect("valid energy");
        Self::new(geometry, channel, energy, DEFAULT_GRID).expect("valid grid")
    }

    pub fn with_p0(mut self, p0: f64) -> Result<Self> {
        self.energy = EnergyParams::new(
            self.energy.xi,
            self.energy.p_cons,
            p0,
            self.energy.sigma0_sq,
            self.energy.p_m.filter(|pm| *pm > p0),
        )?;
        Ok(self)
    }

    pub fn with_p_m(mut self, p_m: Option<f64>) -> Result<Self> {
        self.energy =
            EnergyParams::new(self.energy.xi, self.energy.p_cons, self.energy.p0, self.energy.sigma0_sq, p_m)?;
        Ok(self)
    }

    pub fn with_grid(mut self, n: usize) -> Result<Self> {
        self.grid = TimeGrid::new(n, self.geometry.t_end())?;
        Ok(self)
    }

    /// Total control-center energy over the pass, `P0 · 2L0/v0`.
    pub fn energy_budget(&self) -> f64 {
        self.energy.p0 * self.geometry.duration()
    }

    pub fn distance(&self, t: f64) -> Result<f64> {
        self.geometry.distance(t)
    }

    pub fn channel_gain(&self, t: f64, link: Link) -> Result<f64> {
        let d = self.geometry.distance(t)?;
        Ok(self.gain_at_distance(d, link))
    }

    #[inline]
    pub(crate) fn gain_at_distance(&self, d: f64, link: Link) -> f64 {
        match link {
            Link::Downlink => self.channel.gc / d.powf(self.channel.alpha_c),
            Link::Uplink => self.channel.gs / d.powf(self.channel.alpha_s),
        }
    }

    #[inline]
    pub(crate) fn downlink(&self, t: f64) -> f64 {
        self.gain_at_distance(self.geometry.distance_unchecked(t), Link::Downlink)
    }

    #[inline]
    pub(crate) fn uplink(&self, t: f64) -> f64 {
        self.gain_at_distance(self.geometry.distance_unchecked(t), Link::Uplink)
    }

    /// Fraction of control-center power that reaches the sensor battery at `t`.
    pub fn energy_attenuation(&self, t: f64) -> Result<f64> {
        self.geometry.check(t)?;
        Ok(self.energy.xi * self.downlink(t))
    }

    /// Transfer factor when energy consumed at `t` is shipped at the best
    /// earlier instant: at `t` itself before closest approach, at `t = 0` after.
    pub fn equivalent_attenuation(&self, t: f64) -> Result<f64> {
        self.geometry.check(t)?;
        Ok(self.equivalent_attenuation_unchecked(t))
    }

    pub(crate) fn equivalent_attenuation_unchecked(&self, t: f64) -> f64 {
        let ch = &self.channel;
        let d = self.geometry.distance_unchecked(t);
        let transfer_d = if t <= 0.0 { d } else { self.geometry.d0 };
        self.energy.xi * ch.gs * ch.gc / (d.powf(ch.alpha_s) * transfer_d.powf(ch.alpha_c))
    }
}

/// Draws `|β(t)|²` for each grid sample: Gamma(shape m, mean 1), i.i.d.
/// across samples. The grid step therefore acts as the coherence time.
pub fn sample_fading_trace(chan: &ChannelParams, grid: &TimeGrid, seed: u64) -> Vec<f64> {
    match chan.m {
        NakagamiShape::Infinite => vec![1.0; grid.len()],
        NakagamiShape::Finite(m) => {
            let gamma = Gamma::new(m, 1.0 / m).expect("m validated at construction");
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..grid.len()).map(|_| gamma.sample(&mut rng)).collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> Scenario {
        Scenario::reference(1e9)
    }

    #[test]
    fn distance_examples() {
        let s = table();
        assert_eq!(s.distance(0.0).unwrap(), 10.0);
        let dm = s.distance(5.0).unwrap();
        assert!((dm - 100.498_756_211_208_9).abs() < 1e-9);
        assert!((dm - s.geometry.dm()).abs() < 1e-12 * dm);
        assert!((s.distance(2.5).unwrap() - 2600f64.sqrt()).abs() < 1e-12);
        assert!(matches!(s.distance(5.1), Err(WhetError::OutOfWindow { .. })));
    }

    #[test]
    fn gains_and_attenuation() {
        let s = table();
        assert!((s.channel_gain(0.0, Link::Downlink).unwrap() - 0.01).abs() < 1e-15);
        assert_eq!(s.channel_gain(1.3, Link::Uplink).unwrap(), s.channel_gain(-1.3, Link::Uplink).unwrap());
        assert!(s.channel_gain(5.0, Link::Downlink).unwrap() < s.channel_gain(0.0, Link::Downlink).unwrap());
        assert!((s.energy_attenuation(0.0).unwrap() - 5e-3).abs() < 1e-15);
        assert_eq!(s.energy_attenuation(2.0).unwrap(), s.energy_attenuation(-2.0).unwrap());
    }

    #[test]
    fn energy_attenuation_peaks_at_zero_on_grid() {
        let s = table();
        let (best, _) = s
            .grid
            .times()
            .into_iter()
            .map(|t| (t, s.energy_attenuation(t).unwrap()))
            .fold((f64::NAN, f64::MIN), |acc, x| if x.1 > acc.1 { x } else { acc });
        assert_eq!(best, 0.0);
    }

    #[test]
    fn equivalent_attenuation_shape() {
        let s = table();
        let at0 = s.equivalent_attenuation(0.0).unwrap();
        let expect = 0.5 * 10.0 * 10.0 / 10f64.powi(6);
        assert!((at0 - expect).abs() < 1e-15 * expect);
        assert!(s.equivalent_attenuation(-5.0).unwrap() < at0);
        // left branch = energy attenuation times uplink gain
        for t in [-4.0, -1.0, -0.1] {
            let lhs = s.equivalent_attenuation(t).unwrap();
            let rhs = s.energy_attenuation(t).unwrap() * s.channel_gain(t, Link::Uplink).unwrap();
            assert!((lhs - rhs).abs() < 1e-14 * lhs);
        }
        // symmetric exponents: equality iff d(t1)² = d(t2)·d0
        let t2: f64 = 3.0;
        let d2 = s.distance(t2).unwrap();
        let t1 = -((d2 * 10.0 - 100.0).sqrt()) / 20.0;
        let a = s.equivalent_attenuation(t1).unwrap();
        let b = s.equivalent_attenuation(t2).unwrap();
        assert!((a - b).abs() < 1e-12 * a);
    }

    #[test]
    fn grid_layout() {
        let g = TimeGrid::new(2001, 5.0).unwrap();
        let t = g.times();
        assert_eq!(t[0], -5.0);
        assert_eq!(t[2000], 5.0);
        assert_eq!(t[1000], 0.0);
        assert_eq!(t[700], -t[1300]);
        assert!(TimeGrid::new(2003, 5.0).is_err());
        assert!(TimeGrid::new(3, 5.0).is_err());
        assert_eq!(g.nearest(0.0024), 1000);
        assert_eq!(g.nearest(0.0026), 1001);
    }

    #[test]
    fn parameter_validation() {
        assert!(EnergyParams::new(1.5, 0.0, 1.0, 1.0, None).is_err());
        assert!(EnergyParams::new(0.5, 0.0, 1.0, 1.0, Some(0.5)).is_err());
        assert!(ChannelParams::new(10.0, 10.0, 3.0, 3.0, NakagamiShape::Finite(0.4)).is_err());
        assert!(ScenarioGeometry::new(10.0, 0.0, 20.0).is_err());
        assert!(PowerProfile::new(TimeGrid::new(5, 1.0).unwrap(), vec![0.0, 1.0, -1.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn fading_trace_statistics() {
        let chan = ChannelParams::new(10.0, 10.0, 3.0, 3.0, NakagamiShape::Finite(3.0)).unwrap();
        let grid = TimeGrid::new(1_000_001, 5.0).unwrap();
        let trace = sample_fading_trace(&chan, &grid, 7);
        let n = trace.len() as f64;
        let mean = trace.iter().sum::<f64>() / n;
        let var = trace.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((mean - 1.0).abs() < 0.01, "mean {mean}");
        assert!((var - 1.0 / 3.0).abs() < 0.01, "var {var}");
    }

    #[test]
    fn fading_trace_deterministic_and_infinite() {
        let grid = TimeGrid::new(101, 5.0).unwrap();
        let chan = ChannelParams::new(10.0, 10.0, 3.0, 3.0, NakagamiShape::Finite(6.0)).unwrap();
        assert_eq!(sample_fading_trace(&chan, &grid, 42), sample_fading_trace(&chan, &grid, 42));
        assert_ne!(sample_fading_trace(&chan, &grid, 42), sample_fading_trace(&chan, &grid, 43));
        let flat = ChannelParams { m: NakagamiShape::Infinite, ..chan };
        assert!(sample_fading_trace(&flat, &grid, 1).iter().all(|&b| b == 1.0));
    }
}
