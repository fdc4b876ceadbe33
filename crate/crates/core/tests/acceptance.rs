//! End-to-end acceptance checks. Each test prints one `PASS`/`FAIL` line.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use whet_core::config::{parse_config_with, parse_override};
use whet_core::experiment::{power_for_throughput, run_experiment};
use whet_core::fading_sim::{ctp_firc_fading_baseline, monte_carlo};
use whet_core::fixed_rate::{ctp_firc_throughput, max_rate, min_power, required_avg_power};
use whet_core::harvest_and_use::{ctp_throughput, otp_closed_form_throughput, solve_otp};
use whet_core::harvest_store_use::{realize_policy, solve_hsu, verify_causality, Burst};
use whet_core::numerics::{integrate, simpson_weights};
use whet_core::{ChannelParams, EnergyParams, NakagamiShape, Scenario, ScenarioGeometry};

fn db(x: f64) -> f64 {
    10.0 * x.log10()
}

fn from_db(x: f64) -> f64 {
    10f64.powf(x / 10.0)
}

fn report(id: &str, pass: bool, detail: String) -> bool {
    println!("{} criterion {id}: {detail}", if pass { "PASS" } else { "FAIL" });
    pass
}

fn table(snr_db: f64) -> Scenario {
    Scenario::reference(from_db(snr_db))
}

fn faded(m: NakagamiShape) -> Scenario {
    let mut sc = table(90.0);
    sc.channel.m = m;
    sc
}

fn random_scenario(rng: &mut ChaCha8Rng, grid: usize) -> Scenario {
    let geo =
        ScenarioGeometry::new(rng.random_range(5.0..20.0), rng.random_range(50.0..200.0), rng.random_range(5.0..40.0))
            .unwrap();
    let ch = ChannelParams::new(
        from_db(rng.random_range(0.0..20.0)),
        from_db(rng.random_range(0.0..20.0)),
        rng.random_range(2.0..4.0),
        rng.random_range(2.0..4.0),
        NakagamiShape::Infinite,
    )
    .unwrap();
    let p0 = from_db(rng.random_range(60.0..110.0));
    let en = EnergyParams::new(rng.random_range(0.2..1.0), rng.random_range(1e-3..1e-2), p0, 1.0, None).unwrap();
    Scenario::new(geo, ch, en, grid).unwrap()
}

#[test]
fn criterion_1_energy_efficiency_gap() {
    let start = Instant::now();
    let sc = table(90.0);
    let target = 60.0;
    let ctp = power_for_throughput(&sc, target, |s| Ok(ctp_throughput(s).throughput)).unwrap();
    let hsu = power_for_throughput(&sc, target, |s| Ok(solve_hsu(s)?.throughput)).unwrap();
    let gap = db(ctp) - db(hsu);
    let secs = start.elapsed().as_secs_f64();
    let pass = (gap - 10.0).abs() <= 2.0 && secs < 30.0;
    assert!(report(
        "1",
        pass,
        format!(
            "SNR for 60 bit/Hz: CTP-HAU {:.2} dB, OTP-HSU {:.2} dB, gap {gap:.2} dB (10 +/- 2), {secs:.1} s",
            db(ctp),
            db(hsu)
        )
    ));
}

#[test]
fn criterion_2_bounded_burst_fidelity() {
    let mut worst: (f64, f64) = (0.0, 0.0);
    for k in 0..=50 {
        let snr = 60.0 + k as f64;
        let sc = table(snr);
        let ideal = solve_hsu(&sc).unwrap().throughput;
        let bounded = solve_hsu(&sc.with_p_m(Some(sc.energy.p0 * from_db(20.0))).unwrap()).unwrap().throughput;
        let rel = (ideal - bounded).abs() / ideal;
        if rel > worst.0 {
            worst = (rel, snr);
        }
    }
    let pass = worst.0 <= 0.03;
    assert!(report(
        "2",
        pass,
        format!("worst bounded/ideal deviation {:.4}% at {} dB (<= 3%)", 100.0 * worst.0, worst.1)
    ));
}

#[test]
fn criterion_3_high_snr_convergence() {
    let sc = table(110.0);
    let ctp = ctp_throughput(&sc).throughput;
    let otp = solve_otp(&sc).unwrap().throughput;
    let ratio = ctp / otp;
    assert!(report("3", ratio >= 0.95, format!("CTP-HAU/OTP-HAU at 110 dB = {ratio:.4} (>= 0.95)")));
}

#[test]
fn criterion_4a_firc_over_ctp_firc() {
    let sc = table(90.0);
    let firc = max_rate(&sc, sc.energy.p0).unwrap().r0;
    let ctp = ctp_firc_throughput(&sc).throughput;
    let ratio = firc / ctp;
    assert!(report(
        "4a",
        ratio >= 2.5,
        format!("OTP-FIRC-HSU {firc:.3} / CTP-FIRC-HAU {ctp:.3} = {ratio:.3} (>= 2.5)")
    ));
}

#[test]
fn criterion_4b_firc_loss_below_20_percent() {
    let sc = table(90.0);
    let firc = max_rate(&sc, sc.energy.p0).unwrap().r0;
    let hsu = solve_hsu(&sc).unwrap().throughput;
    let ratio = firc / hsu;
    assert!(report("4b", ratio >= 0.8, format!("OTP-FIRC-HSU {firc:.3} / OTP-HSU {hsu:.3} = {ratio:.4} (>= 0.8)")));
}

#[test]
fn criterion_5a_fading_loss_at_m6() {
    let sc = faded(NakagamiShape::Finite(6.0));
    let mc = monte_carlo(&sc, 60.0, 1000, 1).unwrap();
    let loss = mc.mean_db - db(mc.p0_det);
    let pass = (loss - 15.0).abs() <= 3.0;
    assert!(report(
        "5a",
        pass,
        format!("m = 6, r0 = 60: mean exceeds deterministic bound by {loss:.2} dB (15 +/- 3), 1000 trials")
    ));
}

#[test]
fn criterion_5b_m_ordering() {
    let shapes =
        [NakagamiShape::Finite(3.0), NakagamiShape::Finite(6.0), NakagamiShape::Finite(50.0), NakagamiShape::Infinite];
    let means: Vec<f64> = shapes.iter().map(|&m| monte_carlo(&faded(m), 60.0, 1000, 1).unwrap().mean_db).collect();
    let pass = means.windows(2).all(|w| w[0] > w[1]);
    assert!(report("5b", pass, format!("mean P0 (dB) for m = 3, 6, 50, inf: {means:.2?} (strictly decreasing)")));
}

fn gain_at(m: f64) -> f64 {
    let sc = faded(NakagamiShape::Finite(m));
    let alg = monte_carlo(&sc, 70.0, 1000, 1).unwrap();
    let base = ctp_firc_fading_baseline(&sc, 70.0, 1000, 1).unwrap();
    db(base.p0) - alg.mean_db
}

#[test]
fn criterion_6a_gain_at_m20() {
    let g = gain_at(20.0);
    assert!(report("6a", (g - 8.0).abs() <= 2.0, format!("r0 = 70, m = 20: gain over CTP-FIRC {g:.2} dB (8 +/- 2)")));
}

#[test]
fn criterion_6b_gain_at_m3() {
    let g = gain_at(3.0);
    assert!(report("6b", (g - 1.5).abs() <= 1.0, format!("r0 = 70, m = 3: gain over CTP-FIRC {g:.2} dB (1.5 +/- 1)")));
}

#[test]
fn criterion_7a_energy_causality() {
    let mut rng = ChaCha8Rng::seed_from_u64(71);
    let mut worst = f64::NEG_INFINITY;
    for k in 0..100 {
        let mut sc = random_scenario(&mut rng, 2001);
        if k % 2 == 1 {
            let pm = sc.energy.p0 * from_db(rng.random_range(10.0..40.0));
            sc = sc.with_p_m(Some(pm)).unwrap();
        }
        let hsu = solve_hsu(&sc).unwrap();
        worst = worst.max(hsu.causality_violation(&sc));
        let r0 = (0.5 * hsu.throughput).max(1.0);
        let firc = min_power(&sc, r0).unwrap();
        let real = realize_policy(&sc, &firc.p_v, sc.energy.p_m).unwrap();
        let burst = matches!(real.burst, Burst::Bounded { .. }).then_some(real.burst);
        worst = worst.max(verify_causality(&sc, &real.p_c, &real.p_s, burst));
    }
    assert!(report("7a", worst <= 1e-9, format!("max causality violation over 100 scenarios {worst:e} (<= 1e-9)")));
}

#[test]
fn criterion_7b_power_budgets() {
    let mut rng = ChaCha8Rng::seed_from_u64(72);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let sc = random_scenario(&mut rng, 2001);
        let budget = sc.energy_budget();
        let ctp = ctp_throughput(&sc);
        let otp = solve_otp(&sc).unwrap();
        let hsu = solve_hsu(&sc).unwrap();
        let mut rel = |p: f64, thr: f64| {
            if thr > 0.0 {
                worst = worst.max((p - budget).abs() / budget);
            }
        };
        rel(integrate(&ctp.p_c), ctp.throughput);
        rel(integrate(&otp.p_c), otp.throughput);
        rel(integrate(&hsu.p_v), hsu.throughput);
        rel(integrate(&hsu.p_c), hsu.throughput);
    }
    assert!(report("7b", worst <= 1e-6, format!("max relative budget residual {worst:e} (<= 1e-6)")));
}

fn dense_window_search(sc: &Scenario, r0: f64, n: usize) -> (f64, f64, f64) {
    let t_end = sc.geometry.t_end();
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for i in 0..n {
        let t1 = -t_end + i as f64 * t_end / n as f64;
        for k in 1..=n {
            let t2 = k as f64 * t_end / n as f64;
            let p = required_avg_power(sc, r0, t1, t2).unwrap();
            if p < best.0 {
                best = (p, t1, t2);
            }
        }
    }
    best
}

#[test]
fn criterion_7c_window_boundary_condition() {
    let mut rng = ChaCha8Rng::seed_from_u64(73);
    let mut worst_residual: f64 = 0.0;
    for _ in 0..100 {
        let sc = random_scenario(&mut rng, 2001);
        let r0 = rng.random_range(5.0..100.0);
        worst_residual = worst_residual.max(min_power(&sc, r0).unwrap().boundary_residual(&sc));
    }
    let mut worst_gain: f64 = 0.0;
    let mut lines = Vec::new();
    for r0 in [10.0, 20.0, 40.0, 60.0, 80.0, 100.0] {
        let sc = table(90.0);
        let s = min_power(&sc, r0).unwrap();
        let (p2d, t1, t2) = dense_window_search(&sc, r0, 120);
        let gain = (s.p0_min - p2d) / s.p0_min;
        worst_gain = worst_gain.max(gain);
        lines.push(format!(
            "r0={r0}: 1-D [{:.3}, {:.3}] {:.4e} W, 2-D [{t1:.3}, {t2:.3}] {p2d:.4e} W ({:+.2}%)",
            s.t1,
            s.t2,
            s.p0_min,
            100.0 * gain
        ));
    }
    let pass = worst_residual <= 1e-4 && worst_gain <= 0.005;
    let detail = format!(
        "max boundary residual {worst_residual:e} (<= 1e-4); max 2-D improvement {:.3}% (<= 0.5%)\n    {}",
        100.0 * worst_gain,
        lines.join("\n    ")
    );
    assert!(report("7c", pass, detail));
}

/// Exact optimum of the discretized allocation by dynamic programming over
/// `quanta` equal energy units. `gain(j, p)` is the rate at sample `j` for
/// transmit-side power `p`.
fn dp_oracle(weights: &[f64], energy: f64, quanta: usize, gain: impl Fn(usize, f64) -> f64) -> f64 {
    let q = energy / quanta as f64;
    let mut best = vec![0.0f64; quanta + 1];
    for (j, &w) in weights.iter().enumerate() {
        let value: Vec<f64> = (0..=quanta).map(|a| w * gain(j, a as f64 * q / w)).collect();
        let mut next = vec![f64::NEG_INFINITY; quanta + 1];
        for e in 0..=quanta {
            let mut m = f64::NEG_INFINITY;
            for a in 0..=e {
                m = m.max(value[a] + best[e - a]);
            }
            next[e] = m;
        }
        best = next;
    }
    best[quanta]
}

#[test]
fn criterion_7d_discretized_program_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(74);
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    while checked < 20 {
        let sc = random_scenario(&mut rng, 21);
        let times = sc.grid.times();
        let w = simpson_weights(21, sc.grid.step());
        let (xi, pc, sigma) = (sc.energy.xi, sc.energy.p_cons, sc.energy.sigma0_sq);
        let g = |t: f64, gain: f64, alpha: f64| gain / sc.geometry.distance(t).unwrap().powf(alpha);
        let hc = |t: f64| g(t, sc.channel.gc, sc.channel.alpha_c);
        let hs = |t: f64| g(t, sc.channel.gs, sc.channel.alpha_s);

        let otp = solve_otp(&sc).unwrap();
        if otp.throughput <= 0.0 {
            continue;
        }
        let cf = otp_closed_form_throughput(&sc, otp.lambda1.unwrap());
        let hau = dp_oracle(&w, sc.energy_budget(), 1500, |j, p| {
            let t = times[j];
            (1.0 + hs(t) * (xi * hc(t) * p - pc).max(0.0) / sigma).log2()
        });
        let hsu = solve_hsu(&sc).unwrap();
        let store = dp_oracle(&w, sc.energy_budget(), 1500, |j, p| {
            let t = times[j];
            (1.0 + hs(t) * (xi * hc(t.min(0.0)) * p - pc).max(0.0) / sigma).log2()
        });
        worst = worst.max((cf - hau).abs() / hau).max((hsu.virtual_throughput - store).abs() / store);
        worst = worst.max((otp.throughput - hau).abs() / hau).max((hsu.throughput - store).abs() / store);
        checked += 1;
    }
    assert!(report(
        "7d",
        worst <= 5e-3,
        format!("max deviation from DP oracle on 21-point grids {:.4}% (<= 0.5%)", 100.0 * worst)
    ));
}

#[test]
fn criterion_7e_inverse_consistency() {
    let mut rng = ChaCha8Rng::seed_from_u64(75);
    let sc = table(90.0);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let r0 = rng.random_range(5.0..120.0);
        let p = min_power(&sc, r0).unwrap().p0_min;
        let back = max_rate(&sc, p).unwrap().r0;
        worst = worst.max((back - r0).abs() / r0);
    }
    assert!(report("7e", worst <= 1e-4, format!("max |max_rate(min_power(r0)) - r0| / r0 = {worst:e} (<= 1e-4)")));
}

#[test]
fn criterion_7f_burst_loss_ratio() {
    let sc = table(90.0);
    let hsu = solve_hsu(&sc).unwrap();
    let mut prev = f64::INFINITY;
    let mut monotone = true;
    let mut at_40 = f64::NAN;
    for k in 0..=60 {
        let ratio_db = 10.0 + 0.5 * k as f64;
        let eta = realize_policy(&sc, &hsu.p_v, Some(sc.energy.p0 * from_db(ratio_db))).unwrap().eta;
        monotone &= eta <= prev;
        prev = eta;
        if k == 60 {
            at_40 = eta;
        }
    }
    let pass = monotone && at_40 < 1e-3;
    assert!(report(
        "7f",
        pass,
        format!("eta nonincreasing over 10..40 dB: {monotone}; eta(40 dB) = {at_40:e} (< 1e-3)")
    ));
}

#[test]
fn criterion_7g_policy_dominance() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut violations = 0;
    for _ in 0..100 {
        let sc = random_scenario(&mut rng, 2001);
        let ctp = ctp_throughput(&sc).throughput;
        let otp = solve_otp(&sc).unwrap().throughput;
        let hsu = solve_hsu(&sc).unwrap().throughput;
        if !(ctp <= otp && otp <= hsu) {
            violations += 1;
        }
    }
    assert!(report("7g", violations == 0, format!("{violations} dominance violations over 100 scenarios")));
}

#[test]
fn criterion_8_determinism() {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    let mut identical = true;
    for text in ["experiment = fig3a\nsnr_db = 60:110:10", "experiment = fig5a\nr0 = 50\nm_list = 3, 50\ntrials = 200"]
    {
        let mut runs = Vec::new();
        for _ in 0..2 {
            let dir = tempfile::tempdir().unwrap();
            let o = parse_override(&format!("out={}", dir.path().display())).unwrap();
            let cfg = parse_config_with(text, &[o]).unwrap();
            let report = pool.install(|| run_experiment(&cfg)).unwrap();
            runs.push(std::fs::read(&report.csv_path).unwrap());
        }
        identical &= runs[0] == runs[1];
    }
    assert!(report("8", identical, format!("repeated parallel runs byte-identical: {identical}")));
}
