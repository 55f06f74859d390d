//! Synthetic homodyne traces and their band-power analysis.
//!
//! Noise is white with the network's measured-quadrature covariance; a gated
//! phase drive adds a sinusoid during each cycle's gate window. Band power is
//! calibrated so that a unit-variance white channel reads 0 dB and a sinusoid
//! of amplitude `A` has linear power `A²/2`.

use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fsutil::write_atomic;
use crate::network::{self, NetworkConfig, DARK_THRESHOLD};

pub const MAGIC: &[u8; 4] = b"MZTR";
pub const FORMAT_VERSION: u32 = 1;
/// Bytes before the first sample.
pub const HEADER_LEN: usize = 4 + 4 + 4 + 8 * 4 + 8;
/// Settling margin after a gate transition, in smoothing time constants.
pub const GUARD_TIME_CONSTANTS: f64 = 16.0;

const CALIBRATION_NOTE: &str =
    "band power 0 dB = unit-variance white noise; sinusoid of amplitude A reads A^2/2 linear";

/// Cycle structure of a measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceTiming {
    pub sample_rate: f64,
    pub cycle: f64,
    pub gate_on: f64,
    pub gate_off: f64,
    pub drive_freq: f64,
    pub n_cycles: usize,
}

impl Default for TraceTiming {
    fn default() -> Self {
        Self {
            sample_rate: 50e6,
            cycle: 80e-3,
            gate_on: 30e-3,
            gate_off: 50e-3,
            drive_freq: 4e6,
            n_cycles: 10,
        }
    }
}

impl TraceTiming {
    pub fn validate(&self) -> Result<()> {
        if !(self.drive_freq > 0.0) || !(self.sample_rate >= 5.0 * self.drive_freq) {
            return Err(Error::config(
                "sample_rate",
                "must be at least five times the drive frequency",
            ));
        }
        if self.n_cycles == 0 {
            return Err(Error::config("n_cycles", "must be >= 1"));
        }
        if !(self.cycle > 0.0) || !self.cycle.is_finite() {
            return Err(Error::config("cycle", "must be > 0"));
        }
        if !(0.0 <= self.gate_on && self.gate_on < self.gate_off && self.gate_off <= self.cycle) {
            return Err(Error::config(
                "gate",
                "need 0 <= gate_on < gate_off <= cycle",
            ));
        }
        Ok(())
    }

    pub fn duration(&self) -> f64 {
        self.cycle * self.n_cycles as f64
    }

    pub fn n_samples(&self) -> usize {
        (self.duration() * self.sample_rate).round() as usize
    }

    fn in_gate(&self, t: f64) -> bool {
        let phase = t % self.cycle;
        phase >= self.gate_on && phase < self.gate_off
    }
}

/// Per-channel sample series of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceSet {
    pub timing: TraceTiming,
    pub seed: u64,
    pub samples: Vec<Vec<f64>>,
}

impl TraceSet {
    pub fn d(&self) -> usize {
        self.samples.len()
    }

    pub fn len(&self) -> usize {
        self.samples.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn validate(&self) -> Result<()> {
        self.timing.validate()?;
        let n = self.len();
        if self.samples.is_empty() || self.samples.iter().any(|c| c.len() != n) {
            return Err(Error::InvalidDimension(
                "channels must have equal length".into(),
            ));
        }
        if self.samples.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::Domain("non-finite sample".into()));
        }
        Ok(())
    }
}

fn cholesky_with_jitter(gamma: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let d = gamma.nrows();
    let scale = gamma.trace().abs().max(f64::MIN_POSITIVE) / d as f64;
    for jitter in [0.0, 1e-14, 1e-12, 1e-10] {
        let m = gamma + DMatrix::identity(d, d) * (jitter * scale);
        if let Some(c) = m.cholesky() {
            return Ok(c.l());
        }
    }
    Err(Error::Regularization(
        "noise matrix is not positive definite within jitter 1e-10".into(),
    ))
}

/// Draws white noise with covariance `Γ(config)` plus the gated drive of
/// amplitude `C_jj δθ_j` on every channel.
///
/// Channel `j` uses its own ChaCha8 stream `(seed, j)`, so output does not
/// depend on evaluation order.
pub fn synthesize(
    config: &NetworkConfig,
    drive: &[f64],
    timing: &TraceTiming,
    seed: u64,
) -> Result<TraceSet> {
    timing.validate()?;
    let d = config.d;
    if drive.len() != d {
        return Err(Error::config(
            "drive",
            format!("expected {d} amplitudes, got {}", drive.len()),
        ));
    }
    let gamma = network::noise_matrix(config)?;
    let lower = cholesky_with_jitter(&gamma)?;
    let response = network::response_matrix(config)?;
    let n = timing.n_samples();

    let mut samples: Vec<Vec<f64>> = (0..d)
        .map(|j| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(j as u64);
            (0..n)
                .map(|_| rng.sample::<f64, _>(StandardNormal))
                .collect()
        })
        .collect();

    // x_i = Σ_{k≤i} L_ik z_k, overwriting from the last channel down
    for i in (0..d).rev() {
        let (head, tail) = samples.split_at_mut(i);
        let row = &mut tail[0];
        let diag = lower[(i, i)];
        row.iter_mut().for_each(|x| *x *= diag);
        for (k, zk) in head.iter().enumerate() {
            let l = lower[(i, k)];
            if l != 0.0 {
                row.iter_mut().zip(zk).for_each(|(x, z)| *x += l * z);
            }
        }
    }

    let omega = 2.0 * PI * timing.drive_freq / timing.sample_rate;
    for (j, row) in samples.iter_mut().enumerate() {
        let amplitude = response[(j, j)] * drive[j];
        if amplitude == 0.0 {
            continue;
        }
        for (idx, x) in row.iter_mut().enumerate() {
            if timing.in_gate(idx as f64 / timing.sample_rate) {
                *x += amplitude * (omega * idx as f64).sin();
            }
        }
    }

    Ok(TraceSet {
        timing: *timing,
        seed,
        samples,
    })
}

/// Spectrum-analyzer settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyzerSettings {
    pub rbw: f64,
    pub vbw: f64,
}

impl Default for AnalyzerSettings {
    fn default() -> Self {
        Self {
            rbw: 100e3,
            vbw: 1e3,
        }
    }
}

/// Smoothed, time-resolved power in one resolution bandwidth.
#[derive(Debug, Clone, PartialEq)]
pub struct BandPower {
    /// End time of each analysis segment, s.
    pub times: Vec<f64>,
    /// Linear power after video smoothing.
    pub power: Vec<f64>,
    /// Linear power of unit-variance white noise in this band.
    pub white_reference: f64,
    /// Video smoothing time constant, s.
    pub tau: f64,
    /// Segment duration, s.
    pub segment: f64,
}

impl BandPower {
    pub fn db(&self) -> Vec<f64> {
        self.power
            .iter()
            .map(|p| 10.0 * (p / self.white_reference).log10())
            .collect()
    }
}

/// Hann-windowed single-bin periodogram at `center`, segments of
/// `round(sample_rate / rbw)` samples with 50% overlap, followed by a
/// first-order video filter of time constant `1/(2π vbw)`.
pub fn band_power(
    series: &[f64],
    sample_rate: f64,
    center: f64,
    settings: &AnalyzerSettings,
) -> Result<BandPower> {
    let AnalyzerSettings { rbw, vbw } = *settings;
    if !(rbw > 0.0 && rbw <= sample_rate / 4.0) {
        return Err(Error::config("rbw", "must lie in (0, sample_rate/4]"));
    }
    if !(center > 0.0 && center + rbw / 2.0 < sample_rate / 2.0) {
        return Err(Error::config("center", "band must lie below Nyquist"));
    }
    if !(vbw > 0.0) {
        return Err(Error::config("vbw", "must be > 0"));
    }
    let len = (sample_rate / rbw).round() as usize;
    if len > series.len() {
        return Err(Error::Analysis(format!(
            "window of {len} samples exceeds trace of {}",
            series.len()
        )));
    }
    let hop = (len / 2).max(1);
    let window: Vec<f64> = (0..len)
        .map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / len as f64).cos())
        .collect();
    let sum_w: f64 = window.iter().sum();
    let sum_w2: f64 = window.iter().map(|w| w * w).sum();
    let omega = 2.0 * PI * center / sample_rate;
    let wc: Vec<f64> = (0..len)
        .map(|n| window[n] * (omega * n as f64).cos())
        .collect();
    let ws: Vec<f64> = (0..len)
        .map(|n| window[n] * (omega * n as f64).sin())
        .collect();
    let norm = 2.0 / (sum_w * sum_w);

    let dt = hop as f64 / sample_rate;
    let tau = 1.0 / (2.0 * PI * vbw);
    let a = 1.0 - (-dt / tau).exp();
    let n_seg = (series.len() - len) / hop + 1;
    let mut times = Vec::with_capacity(n_seg);
    let mut power = Vec::with_capacity(n_seg);
    let mut smoothed = 0.0;
    for s in 0..n_seg {
        let seg = &series[s * hop..s * hop + len];
        let (mut re, mut im) = (0.0, 0.0);
        for ((x, c), si) in seg.iter().zip(&wc).zip(&ws) {
            re += x * c;
            im += x * si;
        }
        let p = norm * (re * re + im * im);
        smoothed = if s == 0 {
            p
        } else {
            smoothed + a * (p - smoothed)
        };
        times.push((s * hop + len) as f64 / sample_rate);
        power.push(smoothed);
    }
    Ok(BandPower {
        times,
        power,
        white_reference: 2.0 * sum_w2 / (sum_w * sum_w),
        tau,
        segment: len as f64 / sample_rate,
    })
}

/// Joint estimator `y = Σ_j ν_j x_j / C_jj` in phase units.
pub fn joint_series(traces: &TraceSet, nu: &[f64], config: &NetworkConfig) -> Result<Vec<f64>> {
    let d = traces.d();
    if nu.len() != d || config.d != d {
        return Err(Error::InvalidDimension(format!(
            "{} weights, {} config sensors, {d} channels",
            nu.len(),
            config.d
        )));
    }
    let c = network::response_matrix(config)?;
    let scale = (0..d)
        .filter(|&j| nu[j] != 0.0)
        .map(|j| c[(j, j)].abs())
        .fold(0.0, f64::max);
    let dark: Vec<usize> = (0..d)
        .filter(|&j| nu[j] != 0.0 && (scale == 0.0 || c[(j, j)].abs() <= DARK_THRESHOLD * scale))
        .collect();
    if !dark.is_empty() {
        return Err(Error::DarkResponse { channels: dark });
    }
    let mut y = vec![0.0; traces.len()];
    for j in (0..d).filter(|&j| nu[j] != 0.0) {
        let w = nu[j] / c[(j, j)];
        y.iter_mut()
            .zip(&traces.samples[j])
            .for_each(|(y, x)| *y += w * x);
    }
    Ok(y)
}

/// Mean band power in the gate and idle windows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WindowPowers {
    pub gate: f64,
    pub idle: f64,
    pub gate_segments: usize,
    pub idle_segments: usize,
}

impl WindowPowers {
    /// `10 log₁₀((P_gate − P_idle)/P_idle)`.
    pub fn snr_db(&self) -> f64 {
        10.0 * ((self.gate - self.idle) / self.idle).log10()
    }

    /// Drive amplitude recovered from the excess gate power, `√(2(P_gate − P_idle))`.
    pub fn amplitude(&self) -> f64 {
        (2.0 * (self.gate - self.idle)).max(0.0).sqrt()
    }
}

/// Averages the band power over segments that lie entirely inside a gate or
/// idle window, skipping a settling guard after every transition.
pub fn window_powers(bp: &BandPower, timing: &TraceTiming) -> Result<WindowPowers> {
    let guard = GUARD_TIME_CONSTANTS * bp.tau + bp.segment;
    let (mut gate, mut idle) = ((0.0, 0usize), (0.0, 0usize));
    for (&t, &p) in bp.times.iter().zip(&bp.power) {
        if t < guard {
            continue;
        }
        let phase = t % timing.cycle;
        let since_gate = if phase >= timing.gate_off {
            phase - timing.gate_off
        } else {
            phase + timing.cycle - timing.gate_off
        };
        if phase >= timing.gate_on + guard && phase <= timing.gate_off {
            gate.0 += p;
            gate.1 += 1;
        } else if (phase >= timing.gate_off || phase <= timing.gate_on) && since_gate >= guard {
            idle.0 += p;
            idle.1 += 1;
        }
    }
    if gate.1 == 0 || idle.1 == 0 {
        return Err(Error::Analysis(format!(
            "need both windows: {} gate and {} idle segments",
            gate.1, idle.1
        )));
    }
    Ok(WindowPowers {
        gate: gate.0 / gate.1 as f64,
        idle: idle.0 / idle.1 as f64,
        gate_segments: gate.1,
        idle_segments: idle.1,
    })
}

/// Conventional reference: no squeezing, no loss, single pass, same coherent
/// amplitudes and working point.
pub fn sql_reference(config: &NetworkConfig) -> NetworkConfig {
    NetworkConfig {
        r: 0.0,
        passes: 1,
        mu: None,
        eta_dis: 1.0,
        eta_mzi: 1.0,
        eta_m: 1.0,
        node_squeezing: None,
        ..config.clone()
    }
}

/// Outcome of [`joint_noise_analysis`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JointNoise {
    /// Idle-window noise below the reference run, dB.
    pub db_below_sql: f64,
    pub snr_db: f64,
    pub snr_reference_db: f64,
    /// `snr_db − snr_reference_db`.
    pub snr_gain_db: f64,
    pub windows: WindowPowers,
    pub reference: WindowPowers,
    /// Recovered joint drive amplitude `|νᵀδθ|`, rad.
    pub recovered_drive: f64,
}

/// Compares the joint estimator of `traces` with a reference run of
/// [`sql_reference`] synthesized with the same drive, timing and seed.
pub fn joint_noise_analysis(
    traces: &TraceSet,
    nu: &[f64],
    config: &NetworkConfig,
    drive: &[f64],
    settings: &AnalyzerSettings,
) -> Result<JointNoise> {
    Ok(joint_noise_series(traces, nu, config, drive, settings)?.0)
}

/// [`joint_noise_analysis`] that also returns the band-power series of the run
/// and of the reference.
pub fn joint_noise_series(
    traces: &TraceSet,
    nu: &[f64],
    config: &NetworkConfig,
    drive: &[f64],
    settings: &AnalyzerSettings,
) -> Result<(JointNoise, BandPower, BandPower)> {
    let timing = &traces.timing;
    let main_bp = {
        let y = joint_series(traces, nu, config)?;
        band_power(&y, timing.sample_rate, timing.drive_freq, settings)?
    };
    let main = window_powers(&main_bp, timing)?;
    let reference_config = sql_reference(config);
    let ref_bp = {
        let refs = synthesize(&reference_config, drive, timing, traces.seed)?;
        let y = joint_series(&refs, nu, &reference_config)?;
        drop(refs);
        band_power(&y, timing.sample_rate, timing.drive_freq, settings)?
    };
    let reference = window_powers(&ref_bp, timing)?;
    let snr_db = main.snr_db();
    let snr_reference_db = reference.snr_db();
    let result = JointNoise {
        db_below_sql: 10.0 * (reference.idle / main.idle).log10(),
        snr_db,
        snr_reference_db,
        snr_gain_db: snr_db - snr_reference_db,
        windows: main,
        reference,
        recovered_drive: main.amplitude(),
    };
    Ok((result, main_bp, ref_bp))
}

fn meta_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta");
    PathBuf::from(s)
}

/// Writes the binary trace file and its `.meta` sidecar.
pub fn write_traces(path: &Path, traces: &TraceSet) -> Result<()> {
    traces.validate()?;
    let t = &traces.timing;
    write_atomic(path, |w| {
        w.write_all(MAGIC)?;
        w.write_all(&FORMAT_VERSION.to_le_bytes())?;
        w.write_all(&(traces.d() as u32).to_le_bytes())?;
        for v in [t.sample_rate, t.duration(), t.gate_on, t.gate_off] {
            w.write_all(&v.to_le_bytes())?;
        }
        w.write_all(&traces.seed.to_le_bytes())?;
        for channel in &traces.samples {
            for x in channel {
                w.write_all(&x.to_le_bytes())?;
            }
        }
        Ok(())
    })?;
    write_atomic(&meta_path(path), |w| {
        writeln!(w, "cycle={:e}", t.cycle)?;
        writeln!(w, "drive_freq={:e}", t.drive_freq)?;
        writeln!(w, "n_cycles={}", t.n_cycles)?;
        writeln!(w, "samples_per_channel={}", traces.len())?;
        writeln!(w, "calibration={CALIBRATION_NOTE}")?;
        Ok(())
    })
}

fn take<const N: usize>(r: &mut impl Read) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf)
        .map_err(|e| Error::Io(format!("truncated trace header: {e}")))?;
    Ok(buf)
}

/// Reads a trace file written by [`write_traces`]. Without a sidecar the whole
/// file is treated as one cycle and the drive frequency must be supplied.
pub fn read_traces(path: &Path, drive_freq: Option<f64>) -> Result<TraceSet> {
    let mut r = BufReader::new(File::open(path)?);
    if &take::<4>(&mut r)? != MAGIC {
        return Err(Error::Io(format!("{}: not a trace file", path.display())));
    }
    let version = u32::from_le_bytes(take(&mut r)?);
    if version != FORMAT_VERSION {
        return Err(Error::Io(format!("unsupported trace version {version}")));
    }
    let d = u32::from_le_bytes(take(&mut r)?) as usize;
    let sample_rate = f64::from_le_bytes(take(&mut r)?);
    let duration = f64::from_le_bytes(take(&mut r)?);
    let gate_on = f64::from_le_bytes(take(&mut r)?);
    let gate_off = f64::from_le_bytes(take(&mut r)?);
    let seed = u64::from_le_bytes(take(&mut r)?);

    let mut cycle = duration;
    let mut n_cycles = 1;
    let mut freq = drive_freq;
    if let Ok(text) = std::fs::read_to_string(meta_path(path)) {
        for line in text.lines() {
            let Some((key, value)) = line.split_once('=') else {
                continue;
            };
            let parse = |v: &str| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Io(format!("bad sidecar value `{line}`")))
            };
            match key.trim() {
                "cycle" => cycle = parse(value)?,
                "drive_freq" => freq = freq.or(Some(parse(value)?)),
                "n_cycles" => n_cycles = parse(value)? as usize,
                _ => {}
            }
        }
    }
    let timing = TraceTiming {
        sample_rate,
        cycle,
        gate_on,
        gate_off,
        drive_freq: freq.ok_or_else(|| Error::config("drive_freq", "missing from sidecar"))?,
        n_cycles,
    };
    let n = timing.n_samples();
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() != d * n * 8 {
        return Err(Error::Io(format!(
            "expected {} sample bytes, found {}",
            d * n * 8,
            bytes.len()
        )));
    }
    let samples = bytes
        .chunks_exact(n * 8)
        .map(|ch| {
            ch.chunks_exact(8)
                .map(|b| f64::from_le_bytes(b.try_into().expect("8-byte chunk")))
                .collect()
        })
        .collect();
    let traces = TraceSet {
        timing,
        seed,
        samples,
    };
    traces.validate()?;
    Ok(traces)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimizer::{OperatingPoint, WeightPattern};

    fn small_timing() -> TraceTiming {
        TraceTiming {
            sample_rate: 2e6,
            cycle: 0.1,
            gate_on: 0.04,
            gate_off: 0.06,
            drive_freq: 2e5,
            n_cycles: 5,
        }
    }

    fn settings() -> AnalyzerSettings {
        AnalyzerSettings { rbw: 1e4, vbw: 1e3 }
    }

    fn network(d: usize, r: f64, eta_mzi: f64) -> NetworkConfig {
        let mut p = OperatingPoint::new(d, 1e4, r);
        p.eta_mzi = eta_mzi;
        p.network(1e4, r).unwrap()
    }

    #[test]
    fn vacuum_floor_has_unit_variance() {
        let t = TraceTiming {
            n_cycles: 1,
            cycle: 0.5,
            gate_on: 0.0,
            gate_off: 0.1,
            ..small_timing()
        };
        let traces = synthesize(&network(2, 0.0, 1.0), &[0.0; 2], &t, 1).unwrap();
        assert_eq!(traces.len(), 1_000_000);
        for ch in &traces.samples {
            let var = ch.iter().map(|x| x * x).sum::<f64>() / ch.len() as f64;
            // 3σ of a variance estimate from 1e6 samples
            assert!((var - 1.0).abs() < 3.0 * (2.0f64 / 1e6).sqrt(), "{var}");
        }
    }

    #[test]
    fn weighted_sum_variance_follows_squeezing() {
        let t = TraceTiming {
            n_cycles: 1,
            cycle: 0.5,
            ..small_timing()
        };
        let cfg = network(6, 0.75, 1.0);
        let traces = synthesize(&cfg, &[0.0; 6], &t, 7).unwrap();
        let w: Vec<f64> = cfg.split.iter().map(|p| p.sqrt()).collect();
        let var = (0..traces.len())
            .map(|n| {
                (0..6)
                    .map(|j| w[j] * traces.samples[j][n])
                    .sum::<f64>()
                    .powi(2)
            })
            .sum::<f64>()
            / traces.len() as f64;
        assert!((var / (-1.5f64).exp() - 1.0).abs() < 0.05, "{var}");
    }

    #[test]
    fn synthesis_is_deterministic() {
        let cfg = network(3, 0.5, 0.9);
        let a = synthesize(&cfg, &[1e-3; 3], &small_timing(), 42).unwrap();
        let b = synthesize(&cfg, &[1e-3; 3], &small_timing(), 42).unwrap();
        assert_eq!(a, b);
        let c = synthesize(&cfg, &[1e-3; 3], &small_timing(), 43).unwrap();
        assert_ne!(a.samples[0], c.samples[0]);
    }

    #[test]
    fn sinusoid_reads_half_amplitude_squared() {
        let fs = 2e6;
        let a = 0.3;
        let x: Vec<f64> = (0..200_000)
            .map(|n| a * (2.0 * PI * 2e5 * n as f64 / fs).sin())
            .collect();
        let bp = band_power(&x, fs, 2e5, &settings()).unwrap();
        let mean = bp.power[100..].iter().sum::<f64>() / (bp.power.len() - 100) as f64;
        assert!((mean / (a * a / 2.0) - 1.0).abs() < 1e-3);

        let off: Vec<f64> = (0..200_000)
            .map(|n| a * (2.0 * PI * (2e5 + 10.0 * 1e4) * n as f64 / fs).sin())
            .collect();
        let bo = band_power(&off, fs, 2e5, &settings()).unwrap();
        let leak = bo.power[100..].iter().sum::<f64>() / (bo.power.len() - 100) as f64;
        assert!(10.0 * (mean / leak).log10() >= 30.0);
    }

    #[test]
    fn white_noise_reads_flat_level() {
        let fs = 2e6;
        let sigma: f64 = 2.0;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x: Vec<f64> = (0..2_000_000)
            .map(|_| sigma * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let bp = band_power(&x, fs, 2e5, &settings()).unwrap();
        let mean = bp.power.iter().sum::<f64>() / bp.power.len() as f64;
        let flat = sigma * sigma * 1e4 / (fs / 2.0);
        // Hann equivalent noise bandwidth is 1.5 bins
        assert!((mean / (1.5 * flat) - 1.0).abs() < 0.1);
        assert!((mean / (sigma * sigma * bp.white_reference) - 1.0).abs() < 0.05);
    }

    #[test]
    fn analysis_errors() {
        assert!(matches!(
            band_power(&[0.0; 10], 2e6, 2e5, &settings()),
            Err(Error::Analysis(_))
        ));
        let bp = band_power(&vec![0.0; 20_000], 2e6, 2e5, &settings()).unwrap();
        let t = small_timing();
        assert!(matches!(window_powers(&bp, &t), Err(Error::Analysis(_))));
    }

    #[test]
    fn joint_noise_recovers_model() {
        let cfg = network(6, 0.75, 0.88);
        let nu = WeightPattern::Ave.weights(6);
        let drive = [2e-2; 6];
        let traces = synthesize(&cfg, &drive, &small_timing(), 11).unwrap();
        let j = joint_noise_analysis(&traces, &nu, &cfg, &drive, &settings()).unwrap();
        let model = crate::laws::db_below_sql(0.75, cfg.lambda());
        assert!((j.db_below_sql - model).abs() < 0.2, "{j:?}");
        assert!((j.snr_gain_db - model).abs() < 0.3, "{j:?}");
        assert!(j.snr_db > 20.0);
        assert!((j.recovered_drive / 2e-2 - 1.0).abs() < 0.02, "{j:?}");
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.mztr");
        let t = TraceTiming {
            n_cycles: 2,
            cycle: 0.01,
            gate_on: 0.004,
            gate_off: 0.006,
            ..small_timing()
        };
        let traces = synthesize(&network(2, 0.3, 1.0), &[1e-3; 2], &t, 5).unwrap();
        write_traces(&path, &traces).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(&bytes[..4], MAGIC);
        assert_eq!(bytes.len(), HEADER_LEN + 2 * traces.len() * 8);
        let back = read_traces(&path, None).unwrap();
        assert_eq!(back, traces);
    }
}
