//! Cross-engine consistency checks on seeded random networks.

use std::f64::consts::PI;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::fock;
use crate::laws;
use crate::network::{self, Coherent, MomentData, NetworkConfig, Topology};
use crate::optimizer::{self, OperatingPoint, Weights};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Quick,
    Full,
}

impl Suite {
    fn samples(self, quick: usize, full: usize) -> usize {
        match self {
            Suite::Quick => quick,
            Suite::Full => full,
        }
    }
}

/// Deliberate corruption of one engine, used to confirm the checks can fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// Negates the off-diagonal entries of the simulated noise matrix.
    FlipGammaOffDiagonal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub samples: usize,
    /// Largest relative (or absolute, see `detail`) deviation observed.
    pub max_deviation: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.max_deviation <= self.tolerance
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}: max deviation {:.3e} (tolerance {:.0e}, {} samples, {})",
            if self.passed() { "PASS" } else { "FAIL" },
            self.name,
            self.max_deviation,
            self.tolerance,
            self.samples,
            self.detail
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub suite: Suite,
    pub seed: u64,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{c}")?;
        }
        let failed = self.checks.iter().filter(|c| !c.passed()).count();
        write!(
            f,
            "{} checks, {} failed (seed {})",
            self.checks.len(),
            failed,
            self.seed
        )
    }
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        ((a - b) / b).abs()
    }
}

fn random_weights(rng: &mut impl Rng, d: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..d)
        .map(|_| {
            let m = rng.random_range(0.1..1.0);
            if rng.random_bool(0.5) {
                m
            } else {
                -m
            }
        })
        .collect();
    let s: f64 = raw.iter().map(|w| w.abs()).sum();
    raw.iter().map(|w| w / s).collect()
}

fn random_split(rng: &mut impl Rng, d: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..d).map(|_| rng.random_range(0.05..1.0)).collect();
    let s: f64 = raw.iter().sum();
    raw.iter().map(|p| p / s).collect()
}

/// Random entangled network with an arbitrary (not optimal) allocation,
/// coherent phases in `{0, π}` and working point `θ = 0`.
pub fn random_config(rng: &mut impl Rng) -> (NetworkConfig, Vec<f64>) {
    let d = rng.random_range(1..=8);
    let nu = random_weights(rng, d);
    let config = NetworkConfig {
        d,
        passes: rng.random_range(1..=5),
        mu: None,
        r: rng.random_range(0.0..1.5),
        alphas: (0..d)
            .map(|_| Coherent {
                amplitude: 10f64.powf(rng.random_range(-1.0..3.0)),
                phase: if rng.random_bool(0.5) { 0.0 } else { PI },
            })
            .collect(),
        thetas: vec![0.0; d],
        weights: nu.clone(),
        split: random_split(rng, d),
        eta_dis: rng.random_range(0.5..=1.0),
        eta_mzi: rng.random_range(0.5..=1.0),
        eta_m: rng.random_range(0.9..=1.0),
        topology: Topology::Entangled,
        node_squeezing: None,
    };
    (config, nu)
}

/// Random optimally allocated network inside the oracle's limits: `d ≤ 3`,
/// `r ≤ 0.4`, `|α| ≤ 1`, every efficiency in `[0.8, 1]`.
pub fn random_small_config(rng: &mut impl Rng) -> Result<(NetworkConfig, Vec<f64>)> {
    let d = rng.random_range(1..=3);
    let nu = random_weights(rng, d);
    let point = OperatingPoint {
        weights: Weights::Explicit(nu.clone()),
        passes: rng.random_range(1..=2),
        eta_dis: rng.random_range(0.8..=1.0),
        eta_mzi: rng.random_range(0.8..=1.0),
        eta_m: rng.random_range(0.95..=1.0),
        ..OperatingPoint::new(d, 0.0, 0.0)
    };
    let n_c = rng.random_range(0.05..=1.0);
    let r = rng.random_range(0.0..=fock::ORACLE_MAX_R);
    Ok((point.network(n_c, r)?, nu))
}

fn moment_data(config: &NetworkConfig, fault: Option<Fault>) -> Result<MomentData> {
    let mut m = MomentData::from_config(config)?;
    if fault == Some(Fault::FlipGammaOffDiagonal) {
        let d = m.gamma.nrows();
        for i in 0..d {
            for j in 0..d {
                if i != j {
                    m.gamma[(i, j)] = -m.gamma[(i, j)];
                }
            }
        }
    }
    Ok(m)
}

struct Tracker {
    name: &'static str,
    tolerance: f64,
    samples: usize,
    max: f64,
    worst: String,
}

impl Tracker {
    fn new(name: &'static str, tolerance: f64) -> Self {
        Self {
            name,
            tolerance,
            samples: 0,
            max: 0.0,
            worst: "all equal".into(),
        }
    }

    fn record(&mut self, deviation: f64, context: impl FnOnce() -> String) {
        self.samples += 1;
        let deviation = if deviation.is_nan() {
            f64::INFINITY
        } else {
            deviation
        };
        if deviation > self.max || self.samples == 1 {
            self.max = deviation;
            self.worst = context();
        }
    }

    fn finish(self) -> Check {
        Check {
            name: self.name,
            samples: self.samples,
            max_deviation: self.max,
            tolerance: self.tolerance,
            detail: format!("worst at {}", self.worst),
        }
    }
}

fn describe(c: &NetworkConfig) -> String {
    format!(
        "d={} K={} r={:.3} eta={:.4}",
        c.d,
        c.passes,
        c.r,
        c.eta_total()
    )
}

/// Runs the suite. A numerical error inside a check is returned as an error;
/// a disagreement beyond tolerance is reported as a failed check.
pub fn verify(suite: Suite, seed: u64, fault: Option<Fault>) -> Result<Report> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::new();

    let mut formula = Tracker::new("engine vs closed form (arbitrary allocation)", 1e-9);
    let mut gamma = Tracker::new("noise matrix vs analytic", 1e-10);
    let mut response = Tracker::new("response matrix vs finite difference", 1e-6);
    for i in 0..suite.samples(20, 200) {
        let (config, nu) = random_config(&mut rng);
        let m = moment_data(&config, fault)?;
        let numeric = m.variance(&nu)?;
        let closed = network::sensitivity_closed_form(&config, &nu)?;
        formula.record(rel(numeric, closed), || describe(&config));

        let analytic = network::noise_matrix_analytic(&config)?;
        let dev = (&m.gamma - analytic).abs().max();
        gamma.record(dev, || describe(&config));

        if i < suite.samples(5, 25) {
            let exact = network::response_matrix(&config)?;
            let fd = network::response_matrix_numeric(&config, network::FD_STEP)?;
            let dev = (&fd - &exact).abs().max() / exact.abs().max();
            response.record(dev, || describe(&config));
        }
    }
    checks.extend([formula.finish(), gamma.finish(), response.finish()]);

    let mut optimum = Tracker::new("optimal allocation vs optimized law", 1e-9);
    let mut qcrb = Tracker::new("quantum bound gap vs n_s e^-2r / n_c", 1e-10);
    let mut sign = Tracker::new("weight sign flip invariance", 1e-10);
    for _ in 0..suite.samples(20, 200) {
        let d = rng.random_range(1..=8);
        let nu = random_weights(&mut rng, d);
        let point = OperatingPoint {
            weights: Weights::Explicit(nu.clone()),
            passes: rng.random_range(1..=5),
            eta_dis: rng.random_range(0.5..=1.0),
            eta_mzi: rng.random_range(0.5..=1.0),
            eta_m: rng.random_range(0.9..=1.0),
            ..OperatingPoint::new(
                d,
                10f64.powf(rng.random_range(0.0..17.0)),
                rng.random_range(0.0..1.5),
            )
        };
        let res = point.resolve()?;
        let m = moment_data(&res.config, fault)?;
        let numeric = m.variance(&nu)?;
        optimum.record(rel(numeric, res.closed_form), || describe(&res.config));

        let bound = laws::qcrb(res.n_c, res.r, res.k, &nu)?;
        let lossless = laws::optimized_variance(res.n_c, res.r, 0.0, res.k, &nu)?;
        let gap = laws::r_to_ns(res.r)? * (-2.0 * res.r).exp() / res.n_c;
        qcrb.record((lossless / bound - 1.0 - gap).abs(), || {
            describe(&res.config)
        });

        let j = rng.random_range(0..d);
        let mut flipped = nu.clone();
        flipped[j] = -flipped[j];
        let other = OperatingPoint {
            weights: Weights::Explicit(flipped.clone()),
            ..point.clone()
        }
        .resolve()?;
        let v = moment_data(&other.config, fault)?.variance(&flipped)?;
        sign.record(rel(v, numeric), || {
            format!("{} node {j}", describe(&res.config))
        });
    }
    checks.extend([optimum.finish(), qcrb.finish(), sign.finish()]);

    let mut oracle = Tracker::new("Fock oracle vs engine vs closed form", 1e-6);
    for _ in 0..suite.samples(5, 25) {
        let (config, nu) = random_small_config(&mut rng)?;
        let o = fock::oracle_sensitivity(&config, &nu)?.variance;
        let numeric = moment_data(&config, fault)?.variance(&nu)?;
        let closed = network::sensitivity_closed_form(&config, &nu)?;
        let dev = rel(o, numeric)
            .max(rel(o, closed))
            .max(rel(numeric, closed));
        oracle.record(dev, || describe(&config));
    }
    checks.push(oracle.finish());

    let mut gain = Tracker::new("entangled gain vs quasi-norm ratio", 2e-2);
    for _ in 0..suite.samples(3, 10) {
        let d = rng.random_range(2..=8);
        let nu = random_weights(&mut rng, d);
        let g = optimizer::entangled_gain(1e5, 1e-9, 1.0, &nu)?;
        let expected = laws::gain(&nu, laws::GainRegime::Low)?;
        gain.record(rel(g.gain, expected), || format!("d={d}"));
    }
    checks.push(gain.finish());

    Ok(Report {
        suite,
        seed,
        checks,
    })
}
