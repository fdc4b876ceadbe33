//! Water-filling with an activation cost, shared by the instant-use and
//! buffered policies.
//!
//! At sample `j` the allocated power is `level - floor[j] + offset[j]` when
//! `level > floor[j]` and zero otherwise: `floor` is the noise-to-gain ratio
//! seen through the whole link chain, `offset` the power needed just to run
//! the sensor circuit. The jump of size `offset[j]` at activation makes the
//! budget a discontinuous function of the level, so after bisection the level
//! is re-solved in closed form on a fixed support until the support is stable.

use crate::error::{Result, WhetError};
use crate::numerics::{solve_monotone, BracketedRoot};

#[derive(Debug, Clone)]
pub(crate) struct WaterFill {
    pub floor: Vec<f64>,
    pub offset: Vec<f64>,
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone)]
pub(crate) struct WaterLevel {
    pub level: f64,
    pub power: Vec<f64>,
}

const MAX_DOUBLINGS: u32 = 60;
const MAX_SUPPORT_PASSES: usize = 10;

impl WaterFill {
    pub fn power_at(&self, level: f64) -> Vec<f64> {
        self.floor.iter().zip(&self.offset).map(|(&a, &b)| if level > a { level - a + b } else { 0.0 }).collect()
    }

    fn energy_at(&self, level: f64) -> f64 {
        self.floor
            .iter()
            .zip(&self.offset)
            .zip(&self.weights)
            .map(|((&a, &b), &w)| if level > a { w * (level - a + b) } else { 0.0 })
            .sum()
    }

    /// Finds the level whose allocation spends exactly `energy`.
    pub fn solve(&self, energy: f64) -> Result<WaterLevel> {
        let min_floor = self.floor.iter().copied().fold(f64::INFINITY, f64::min);
        if !(energy > 0.0) {
            return Ok(WaterLevel { level: min_floor, power: vec![0.0; self.floor.len()] });
        }
        let total_w: f64 = self.weights.iter().sum();
        let mut hi = min_floor + energy / total_w;
        let mut doublings = 0;
        while self.energy_at(hi) < energy {
            if doublings == MAX_DOUBLINGS {
                return Err(WhetError::BracketExhausted { doublings });
            }
            hi *= 2.0;
            doublings += 1;
        }
        let lo = min_floor;
        let bracket = BracketedRoot { lo, hi, tol: hi * 1e-15, max_iter: 300 };
        let root = solve_monotone(|w| self.energy_at(w) - energy, bracket)?;

        // active-set refinement
        let mut support: Vec<usize> = (0..self.floor.len()).filter(|&j| self.floor[j] < root).collect();
        let mut level = root;
        for _ in 0..MAX_SUPPORT_PASSES {
            if support.is_empty() {
                break;
            }
            let w_sum: f64 = support.iter().map(|&j| self.weights[j]).sum();
            let fixed: f64 = support.iter().map(|&j| self.weights[j] * (self.offset[j] - self.floor[j])).sum();
            level = (energy - fixed) / w_sum;
            let before = support.len();
            support.retain(|&j| level > self.floor[j]);
            if support.len() == before {
                break;
            }
        }
        let mut power = vec![0.0; self.floor.len()];
        for &j in &support {
            power[j] = level - self.floor[j] + self.offset[j];
        }
        Ok(WaterLevel { level, power })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_channel_spreads_evenly() {
        let wf = WaterFill { floor: vec![1.0; 5], offset: vec![0.0; 5], weights: vec![0.25; 5] };
        let s = wf.solve(2.5).unwrap();
        for p in &s.power {
            assert!((p - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn budget_is_exact_despite_activation_jumps() {
        let floor: Vec<f64> = (0..41).map(|i| 1.0 + (i as f64 - 20.0).powi(2)).collect();
        let offset: Vec<f64> = floor.iter().map(|a| 0.3 * a).collect();
        let weights = vec![0.1; 41];
        let wf = WaterFill { floor, offset, weights };
        for energy in [0.05, 1.0, 7.3, 55.0, 400.0] {
            let s = wf.solve(energy).unwrap();
            let used: f64 = s.power.iter().zip(&wf.weights).map(|(p, w)| p * w).sum();
            assert!((used - energy).abs() <= 1e-10 * energy, "{used} vs {energy}");
            for (j, p) in s.power.iter().enumerate() {
                if *p > 0.0 {
                    assert!(*p > wf.offset[j]);
                }
            }
        }
    }

    #[test]
    fn zero_energy_gives_zero_power() {
        let wf = WaterFill { floor: vec![1.0, 2.0, 3.0], offset: vec![0.0; 3], weights: vec![1.0; 3] };
        assert!(wf.solve(0.0).unwrap().power.iter().all(|&p| p == 0.0));
    }
}
