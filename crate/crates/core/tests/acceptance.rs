//! End-to-end acceptance criteria. Runs sequentially in one test so that only
//! one large trace set is alive at a time; each criterion prints a PASS/FAIL
//! line with the measured values, straight to stdout so the lines show up
//! without `--nocapture`.

use std::io::Write;
use std::time::Instant;

use mzinet::laws;
use mzinet::network;
use mzinet::optimizer::{self, OperatingPoint, WeightPattern, Weights};
use mzinet::scenario::{self, ScenarioOutput};
use mzinet::trace::{self, AnalyzerSettings, TraceTiming};
use mzinet::verify::random_small_config;
use mzinet::{fock, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type Outcome = Result<(bool, String)>;

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn figure_point(passes: u32) -> OperatingPoint {
    OperatingPoint {
        weights: Weights::Pattern(WeightPattern::Ave),
        passes,
        eta_dis: 0.99,
        eta_mzi: 0.89,
        eta_m: 0.9999,
        ..OperatingPoint::new(6, 2.7e16, 0.75)
    }
}

fn cell(out: &ScenarioOutput, file: &str, run: &str, column: &str) -> f64 {
    let t = out.table(file).expect("table present");
    let c = t.column(column).expect("column present");
    let row = t.rows.iter().find(|r| r[0] == run).expect("row present");
    row[c].parse().unwrap_or(f64::NAN)
}

fn joint_suppression(fig2: &ScenarioOutput) -> Outcome {
    let model = cell(fig2, "fig2.csv", "K1", "model_db_below_sql");
    let measured = cell(fig2, "fig2.csv", "K1", "trace_db_below_sql");
    let reported = (4.36, 0.35);
    let ok = (model - reported.0).abs() <= reported.1 && (measured - model).abs() <= 0.2;
    Ok((
        ok,
        format!(
            "model {model:.4} dB (reported {} ± {}), traces {measured:.4} dB (|diff| {:.4} <= 0.2)",
            reported.0,
            reported.1,
            (measured - model).abs()
        ),
    ))
}

fn multipass_snr(fig2: &ScenarioOutput) -> Outcome {
    let model = cell(fig2, "fig2.csv", "K5", "model_db_below_reference");
    let measured = cell(fig2, "fig2.csv", "K5", "trace_snr_gain_db");
    let reported = (11.09, 0.38);
    let ok = (model - reported.0).abs() <= reported.1;
    Ok((
        ok,
        format!(
            "model K=5 SNR gain {model:.4} dB (reported {} ± {}), traces {measured:.4} dB",
            reported.0, reported.1
        ),
    ))
}

fn high_intensity_point() -> Outcome {
    let res = figure_point(5).resolve()?;
    let v = network::sensitivity_numeric(&res.config, &res.nu)?;
    let std = v.sqrt();
    let ratio = std / 1.4e-9;
    Ok((
        (1.0 / 1.2..=1.2).contains(&ratio),
        format!("std {std:.4e} rad, ratio to 1.4e-9 = {ratio:.4} (<= 1.2)"),
    ))
}

fn loss_crossover() -> Outcome {
    let k1 = optimizer::sub_sql_threshold(&figure_point(1), 0.01)?;
    let k5 = optimizer::sub_sql_threshold(&figure_point(5), 0.01)?;
    let fig3b = scenario::reproduce("fig3b", None)?;
    let grid = |scan: &str| {
        let t = fig3b.table("fig3b_summary.csv").expect("summary");
        t.rows
            .iter()
            .find(|r| r[0] == scan)
            .and_then(|r| r[2].parse::<f64>().ok())
            .unwrap_or(f64::NAN)
    };
    let ok = (k1 - 0.65).abs() <= 0.03 && (k5 - 0.20).abs() <= 0.03;
    Ok((
        ok,
        format!(
            "eta_dis threshold K=1 {k1:.4} (0.65 ± 0.03), K=5 {k5:.4} (0.20 ± 0.03); fig3b grid {:.4} / {:.4}",
            grid("K1"),
            grid("K5")
        ),
    ))
}

fn photon_crossover() -> Outcome {
    let nu = [1.0];
    let heis = optimizer::optimize_squeezing(100.0, 0.0, 1.0, &nu)?.variance;
    let low = optimizer::optimize_squeezing(1e-3, 0.14, 1.0, &nu)?.variance;
    let floor = optimizer::optimize_squeezing(1e6, 1e-3, 1.0, &nu)?.variance;
    let d = [
        rel(heis, 1.0 / 100.0f64.powi(2)),
        rel(low, 1.14 / 1e-3),
        rel(floor, 1e-3 / 1e6),
    ];
    // the same limits hold with multipass and for any k
    let mut worst_k = 0.0f64;
    for k in [2.0, 5.0, 9.5] {
        worst_k = worst_k.max(rel(
            optimizer::optimize_squeezing(100.0, 0.0, k, &nu)?.variance,
            1.0 / (k * 1e4),
        ));
        worst_k = worst_k.max(rel(
            optimizer::optimize_squeezing(1e-3, 0.14, k, &nu)?.variance,
            1.14 / (k * 1e-3),
        ));
    }
    let ok = d[0] < 0.02 && d[1] < 0.02 && d[2] < 0.05 && worst_k < 0.02;
    Ok((
        ok,
        format!(
            "1/n_T^2 at 100: {:.2e}; (1+L)/n_T at 1e-3: {:.2e}; L/n_T at 1e6: {:.2e} (< 5e-2); other k: {worst_k:.2e}",
            d[0], d[1], d[2]
        ),
    ))
}

fn d_scaling() -> Outcome {
    let mut worst_closed = 0.0f64;
    let mut worst_numeric = 0.0f64;
    for passes in [1, 3, 5] {
        let point = |d: usize| OperatingPoint {
            d,
            n_c: 4.5e15,
            coherent_per_node: true,
            ..figure_point(passes)
        };
        let base = point(3).resolve()?;
        let base_numeric = network::sensitivity_numeric(&base.config, &base.nu)?;
        for d in [3usize, 5, 6] {
            let res = point(d).resolve()?;
            let expected = 3.0 / d as f64;
            worst_closed = worst_closed.max(rel(res.closed_form / base.closed_form, expected));
            let v = network::sensitivity_numeric(&res.config, &res.nu)?;
            worst_numeric = worst_numeric.max(rel(v / base_numeric, expected));
        }
    }
    Ok((
        worst_closed < 1e-9 && worst_numeric < 1e-6,
        format!("1/d deviation closed form {worst_closed:.2e} (< 1e-9), engine {worst_numeric:.2e} (< 1e-6)"),
    ))
}

fn weight_invariance() -> Outcome {
    let patterns = [WeightPattern::Ave, WeightPattern::Stag, WeightPattern::Asym];
    let timing = TraceTiming {
        sample_rate: 20e6,
        ..TraceTiming::default()
    };
    let mut numeric = Vec::new();
    let mut closed = Vec::new();
    let mut traced = Vec::new();
    for (i, w) in patterns.iter().enumerate() {
        let point = OperatingPoint {
            weights: Weights::Pattern(*w),
            ..figure_point(1)
        };
        let res = point.resolve()?;
        numeric.push(network::sensitivity_numeric(&res.config, &res.nu)?);
        closed.push(res.closed_form);
        let drive: Vec<f64> = res.nu.iter().map(|n| 1e-8 * n.signum()).collect();
        let traces = trace::synthesize(&res.config, &drive, &timing, 500 + i as u64)?;
        let j = trace::joint_noise_analysis(
            &traces,
            &res.nu,
            &res.config,
            &drive,
            &AnalyzerSettings::default(),
        )?;
        traced.push(j.db_below_sql);
    }
    let spread = |v: &[f64]| {
        let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    };
    let (nl, nh) = spread(&numeric);
    let (cl, ch) = spread(&closed);
    let (tl, th) = spread(&traced);
    let all = numeric.iter().chain(&closed).cloned().collect::<Vec<_>>();
    let (al, ah) = spread(&all);
    let ok = (ah - al) / al < 1e-10 && th - tl < 0.2;
    Ok((
        ok,
        format!(
            "variance spread engine {:.1e}, closed form {:.1e}, combined {:.1e} (< 1e-10); traces {:.3}/{:.3}/{:.3} dB, spread {:.3} dB (< 0.2)",
            (nh - nl) / nl,
            (ch - cl) / cl,
            (ah - al) / al,
            traced[0],
            traced[1],
            traced[2],
            th - tl
        ),
    ))
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = 0.0f64;
    for _ in 0..25 {
        let (config, nu) = random_small_config(&mut rng)?;
        let o = fock::oracle_sensitivity(&config, &nu)?.variance;
        let n = network::sensitivity_numeric(&config, &nu)?;
        let c = network::sensitivity_closed_form(&config, &nu)?;
        worst = worst.max(rel(o, n)).max(rel(o, c)).max(rel(n, c));
    }
    Ok((
        worst < 1e-6,
        format!("25 configs, worst pairwise deviation {worst:.2e} (< 1e-6)"),
    ))
}

fn qcrb_saturation() -> Outcome {
    // the ratio itself is only resolved to a few ulps, which swamps the allowed
    // excess once n_c is large and r small
    let ulps = 8.0 * f64::EPSILON;
    let mut worst_ratio = 0.0f64;
    let mut worst_unresolved = 0.0f64;
    let mut ok = true;
    let nu = WeightPattern::Ave.weights(6);
    for i in 0..=26 {
        let n_c = 10f64.powf(4.0 + 0.5 * i as f64);
        for j in 0..=20 {
            let r = j as f64 / 20.0;
            let opt = laws::optimized_variance(n_c, r, 0.0, 1.0, &nu)?;
            let bound = laws::qcrb(n_c, r, 1.0, &nu)?;
            let allowed = 10.0 * r.sinh().powi(2) * (-2.0 * r).exp() / n_c;
            let excess = opt / bound - 1.0;
            ok &= excess >= -ulps && excess <= allowed + ulps;
            if allowed > 1e3 * ulps {
                worst_ratio = worst_ratio.max(excess / allowed);
            } else {
                worst_unresolved = worst_unresolved.max(excess.abs());
            }
        }
    }
    Ok((
        ok,
        format!(
            "over n_c in [1e4, 1e17], r in [0, 1]: max excess/allowed {worst_ratio:.4} (< 1) where resolvable, |excess| <= {worst_unresolved:.1e} elsewhere"
        ),
    ))
}

fn gain_law() -> Outcome {
    let mut worst_low = 0.0f64;
    let mut worst_high = 0.0f64;
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut cases: Vec<Vec<f64>> = [2, 4, 6]
        .iter()
        .flat_map(|&d| {
            [
                WeightPattern::Ave.weights(d),
                WeightPattern::Stag.weights(d),
                WeightPattern::Asym.weights(d),
            ]
        })
        .collect();
    for _ in 0..5 {
        use rand::Rng;
        let d = rng.random_range(2..=6);
        cases.push((0..d).map(|_| rng.random_range(-1.0..1.0)).collect());
    }
    for nu in &cases {
        let expected = laws::gain(nu, laws::GainRegime::Low)?;
        let low = optimizer::entangled_gain(1e5, 1e-9, 1.0, nu)?;
        worst_low = worst_low.max(rel(low.gain, expected));
        let high = optimizer::entangled_gain(1e8, 0.1, 1.0, nu)?;
        worst_high = worst_high.max(rel(high.gain, 1.0));
    }
    Ok((
        worst_low < 0.02 && worst_high < 0.02,
        format!(
            "{} weight vectors; low regime vs ||nu||_2/3^2 {worst_low:.2e}, high regime vs 1 {worst_high:.2e} (< 2e-2)",
            cases.len()
        ),
    ))
}

fn report(id: usize, name: &str, budget_s: f64, start: Instant, outcome: Outcome) -> bool {
    let secs = start.elapsed().as_secs_f64();
    let (ok, detail) = match outcome {
        Ok((ok, detail)) => (ok && secs < budget_s, detail),
        Err(e) => (false, format!("error: {e}")),
    };
    let line = format!(
        "{} criterion {id} {name}: {detail}; {secs:.2} s (budget {budget_s} s)\n",
        if ok { "PASS" } else { "FAIL" }
    );
    let mut out = std::io::stdout().lock();
    out.write_all(line.as_bytes()).unwrap();
    out.flush().unwrap();
    ok
}

#[test]
fn acceptance_criteria() {
    let mut results = Vec::new();

    let start = Instant::now();
    let fig2 = scenario::reproduce("fig2", None);
    let fig2_time = start.elapsed();
    match fig2 {
        Ok(fig2) => {
            results.push(report(
                1,
                "joint noise suppression",
                30.0,
                start,
                joint_suppression(&fig2),
            ));
            // both runs share one reproduction; charge it the same wall time
            let shifted = Instant::now() - fig2_time;
            results.push(report(
                2,
                "multipass SNR gain",
                30.0,
                shifted,
                multipass_snr(&fig2),
            ));
        }
        Err(e) => {
            results.push(report(
                1,
                "joint noise suppression",
                30.0,
                start,
                Err(e.clone()),
            ));
            results.push(report(2, "multipass SNR gain", 30.0, start, Err(e)));
        }
    }

    let t = Instant::now();
    results.push(report(
        3,
        "high-intensity point",
        5.0,
        t,
        high_intensity_point(),
    ));
    let t = Instant::now();
    results.push(report(4, "loss crossover", 10.0, t, loss_crossover()));
    let t = Instant::now();
    results.push(report(
        5,
        "SQL to Heisenberg crossover",
        10.0,
        t,
        photon_crossover(),
    ));
    let t = Instant::now();
    results.push(report(6, "d-scaling", 10.0, t, d_scaling()));
    let t = Instant::now();
    results.push(report(
        7,
        "weight-structure invariance",
        60.0,
        t,
        weight_invariance(),
    ));
    let t = Instant::now();
    results.push(report(
        8,
        "oracle equivalence",
        300.0,
        t,
        oracle_equivalence(),
    ));
    let t = Instant::now();
    results.push(report(9, "QCRB saturation", 5.0, t, qcrb_saturation()));
    let t = Instant::now();
    results.push(report(10, "gain law", 30.0, t, gain_law()));

    let failed: Vec<usize> = results
        .iter()
        .enumerate()
        .filter(|(_, ok)| !**ok)
        .map(|(i, _)| i + 1)
        .collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
