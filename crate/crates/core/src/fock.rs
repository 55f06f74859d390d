//! Truncated Fock-space oracle for the squeezed resource and the network moments.
//!
//! Only the shared squeezed vacuum is represented on a Fock tensor. Coherent
//! inputs and loss ancillas enter through their exact moments, and the
//! interferometer acts on operators (Heisenberg picture), so the tensor never
//! grows beyond the `d` carrier modes.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::network::{NetworkConfig, Topology, DARK_THRESHOLD};

/// Largest tensor the oracle will allocate.
pub const MAX_AMPLITUDES: usize = 10_000_000;
/// Norm deficit above which a single-mode truncation is rejected.
pub const STATE_BUDGET: f64 = 1e-3;
/// Norm deficit the sensitivity oracle requires.
pub const ORACLE_BUDGET: f64 = 1e-8;
/// Largest network the sensitivity oracle accepts.
pub const ORACLE_MAX_MODES: usize = 3;
pub const ORACLE_MAX_R: f64 = 0.4;
pub const ORACLE_MAX_AMPLITUDE: f64 = 1.0;

/// Amplitudes over `{0..=cutoff}^n_modes`, mode 0 most significant.
#[derive(Debug, Clone, PartialEq)]
pub struct FockState {
    cutoff: usize,
    n_modes: usize,
    amplitudes: Vec<Complex64>,
}

fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

impl FockState {
    pub fn from_amplitudes(
        cutoff: usize,
        n_modes: usize,
        amplitudes: Vec<Complex64>,
    ) -> Result<Self> {
        let dim = dimension(cutoff, n_modes)?;
        if amplitudes.len() != dim {
            return Err(Error::InvalidDimension(format!(
                "{} amplitudes for {dim} basis states",
                amplitudes.len()
            )));
        }
        if amplitudes
            .iter()
            .any(|a| !a.re.is_finite() || !a.im.is_finite())
        {
            return Err(Error::Domain("non-finite amplitude".into()));
        }
        Ok(Self {
            cutoff,
            n_modes,
            amplitudes,
        })
    }

    /// Single-mode Fock state `|n⟩`.
    pub fn number(n: usize, cutoff: usize) -> Result<Self> {
        if n > cutoff {
            return Err(Error::param("n", n as f64, "exceeds cutoff"));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); cutoff + 1];
        amps[n] = Complex64::new(1.0, 0.0);
        Self::from_amplitudes(cutoff, 1, amps)
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `1 − ‖ψ‖²`.
    pub fn truncation_budget(&self) -> f64 {
        (1.0 - self.norm_sqr()).max(0.0)
    }

    /// Occupation numbers of basis index `idx`.
    pub fn occupations(&self, mut idx: usize) -> Vec<usize> {
        let base = self.cutoff + 1;
        let mut occ = vec![0; self.n_modes];
        for m in occ.iter_mut().rev() {
            *m = idx % base;
            idx /= base;
        }
        occ
    }

    pub fn amplitude(&self, occupations: &[usize]) -> Complex64 {
        let base = self.cutoff + 1;
        if occupations.len() != self.n_modes || occupations.iter().any(|&m| m >= base) {
            return Complex64::new(0.0, 0.0);
        }
        let idx = occupations.iter().fold(0, |acc, &m| acc * base + m);
        self.amplitudes[idx]
    }

    fn stride(&self, mode: usize) -> usize {
        (self.cutoff + 1).pow((self.n_modes - 1 - mode) as u32)
    }

    /// `b_mode |ψ⟩` on the truncated space.
    pub fn lower(&self, mode: usize) -> Result<Vec<Complex64>> {
        self.lower_vec(&self.amplitudes, mode)
    }

    fn lower_vec(&self, v: &[Complex64], mode: usize) -> Result<Vec<Complex64>> {
        if mode >= self.n_modes {
            return Err(Error::ModeIndex {
                mode,
                n_modes: self.n_modes,
            });
        }
        let stride = self.stride(mode);
        let base = self.cutoff + 1;
        let mut out = vec![Complex64::new(0.0, 0.0); v.len()];
        for (idx, slot) in out.iter_mut().enumerate() {
            let m = (idx / stride) % base;
            if m < self.cutoff {
                *slot = v[idx + stride] * ((m + 1) as f64).sqrt();
            }
        }
        Ok(out)
    }
}

fn dimension(cutoff: usize, n_modes: usize) -> Result<usize> {
    if n_modes == 0 {
        return Err(Error::InvalidDimension("at least one mode".into()));
    }
    let mut dim: usize = 1;
    for _ in 0..n_modes {
        dim = dim
            .checked_mul(cutoff + 1)
            .filter(|&d| d <= MAX_AMPLITUDES)
            .ok_or_else(|| {
                Error::Resource(format!(
                    "{}^{n_modes} amplitudes exceed the limit of {MAX_AMPLITUDES}",
                    cutoff + 1
                ))
            })?;
    }
    Ok(dim)
}

fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Squeezed vacuum `Σ_m c(2m)|2m⟩` with
/// `c(2m) = (−tanh r)^m √((2m)!) / (2^m m! √cosh r)`.
pub fn squeezed_vacuum(r: f64, cutoff: usize) -> Result<FockState> {
    if !(r >= 0.0) || !r.is_finite() {
        return Err(Error::param(
            "r",
            r,
            "squeezing strength must be finite and >= 0",
        ));
    }
    if cutoff < 2 {
        return Err(Error::param("cutoff", cutoff as f64, "must be >= 2"));
    }
    let t = -r.tanh();
    let mut amps = vec![Complex64::new(0.0, 0.0); cutoff + 1];
    let mut c = 1.0 / r.cosh().sqrt();
    amps[0] = Complex64::new(c, 0.0);
    let mut n = 2;
    while n <= cutoff {
        c *= t * ((n * (n - 1)) as f64).sqrt() / n as f64;
        amps[n] = Complex64::new(c, 0.0);
        n += 2;
    }
    let state = FockState::from_amplitudes(cutoff, 1, amps)?;
    let deficit = state.truncation_budget();
    if deficit > STATE_BUDGET {
        return Err(Error::Truncation {
            deficit,
            budget: STATE_BUDGET,
        });
    }
    Ok(state)
}

/// Splits a single-mode state over `P.len()` modes with
/// `c(m_1, …, m_d) = c(m) √(m! / Π m_j!) Π P_j^{m_j/2}`.
pub fn multinomial_split(state: &FockState, split: &[f64]) -> Result<FockState> {
    if state.n_modes != 1 {
        return Err(Error::InvalidDimension(
            "split needs a single-mode input".into(),
        ));
    }
    if split.is_empty() || split.iter().any(|p| !(*p >= 0.0)) {
        return Err(Error::config("split", "probabilities must be >= 0"));
    }
    let total: f64 = split.iter().sum();
    if (total - 1.0).abs() > crate::network::SPLIT_TOLERANCE {
        return Err(Error::config(
            "split",
            format!("sums to {total}, expected 1"),
        ));
    }
    let d = split.len();
    let cutoff = state.cutoff;
    let dim = dimension(cutoff, d)?;
    let ln_fact: Vec<f64> = (0..=cutoff).map(ln_factorial).collect();
    let mut out = FockState {
        cutoff,
        n_modes: d,
        amplitudes: vec![Complex64::new(0.0, 0.0); dim],
    };
    for idx in 0..dim {
        let occ = out.occupations(idx);
        let m: usize = occ.iter().sum();
        if m > cutoff || state.amplitudes[m] == Complex64::new(0.0, 0.0) {
            continue;
        }
        if occ.iter().zip(split).any(|(&mj, &p)| mj > 0 && p == 0.0) {
            continue;
        }
        let ln_weight: f64 = 0.5 * ln_fact[m]
            + occ
                .iter()
                .zip(split)
                .map(|(&mj, &p)| {
                    let pow = if mj == 0 {
                        0.0
                    } else {
                        0.5 * mj as f64 * p.ln()
                    };
                    pow - 0.5 * ln_fact[mj]
                })
                .sum::<f64>();
        out.amplitudes[idx] = state.amplitudes[m] * ln_weight.exp();
    }
    Ok(out)
}

/// First and second moments of the ladder operators, normalized by `‖ψ‖²`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeMoments {
    /// `⟨b_j⟩`.
    pub first: Vec<Complex64>,
    /// `⟨b_j† b_k⟩`.
    pub number: Vec<Vec<Complex64>>,
    /// `⟨b_j b_k⟩`.
    pub pair: Vec<Vec<Complex64>>,
    pub truncation_budget: f64,
}

pub fn mode_moments(state: &FockState) -> Result<ModeMoments> {
    let n = state.n_modes;
    let norm = state.norm_sqr();
    if !(norm > 0.0) {
        return Err(Error::Domain("zero state".into()));
    }
    let lowered: Vec<Vec<Complex64>> = (0..n).map(|j| state.lower(j)).collect::<Result<_>>()?;
    let psi = &state.amplitudes;
    let first = lowered.iter().map(|bj| inner(psi, bj) / norm).collect();
    let number = (0..n)
        .map(|j| {
            (0..n)
                .map(|k| inner(&lowered[j], &lowered[k]) / norm)
                .collect()
        })
        .collect();
    let mut pair = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    for k in 0..n {
        for j in 0..n {
            let bjbk = state.lower_vec(&lowered[k], j)?;
            pair[j][k] = inner(psi, &bjbk) / norm;
        }
    }
    Ok(ModeMoments {
        first,
        number,
        pair,
        truncation_budget: state.truncation_budget(),
    })
}

/// Result of [`oracle_sensitivity`].
#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub variance: f64,
    pub cutoff: usize,
    pub truncation_budget: f64,
    /// Diagonal response `∂⟨q̃_j⟩/∂θ_j`.
    pub response: Vec<f64>,
    /// Measured-quadrature covariance.
    pub gamma: Vec<Vec<f64>>,
}

/// Smallest even cutoff whose squeezed-vacuum truncation deficit is below `budget`.
pub fn cutoff_for(r: f64, budget: f64) -> Result<usize> {
    let mut cutoff = 20;
    loop {
        match squeezed_vacuum(r, cutoff) {
            Ok(s) if s.truncation_budget() < budget => return Ok(cutoff),
            Ok(_) | Err(Error::Truncation { .. }) => {}
            Err(e) => return Err(e),
        }
        cutoff += 2;
        if cutoff > 400 {
            return Err(Error::Truncation {
                deficit: squeezed_vacuum(r, cutoff).map_or(1.0, |s| s.truncation_budget()),
                budget,
            });
        }
    }
}

/// Variance of `νᵀθ` from Fock-space moments of the split squeezed vacuum.
///
/// Each detected mode is `√η_o (cos(gθ/2) b′_j + sin(gθ/2) a′_j) + √(1−η_o) w_j`
/// with `x′ = √η_d x + √(1−η_d) v`; every loss brings its own vacuum.
pub fn oracle_sensitivity(config: &NetworkConfig, nu: &[f64]) -> Result<OracleResult> {
    config.validate()?;
    let d = config.d;
    if config.topology != Topology::Entangled {
        return Err(Error::config(
            "topology",
            "oracle models the entangled network only",
        ));
    }
    if d > ORACLE_MAX_MODES {
        return Err(Error::config(
            "d",
            format!("oracle is limited to {ORACLE_MAX_MODES} sensors"),
        ));
    }
    if config.r > ORACLE_MAX_R {
        return Err(Error::config(
            "r",
            format!("oracle is limited to r <= {ORACLE_MAX_R}"),
        ));
    }
    if let Some(j) = config
        .alphas
        .iter()
        .position(|a| a.amplitude > ORACLE_MAX_AMPLITUDE)
    {
        return Err(Error::config(
            format!("alphas[{j}]"),
            format!("oracle is limited to |α| <= {ORACLE_MAX_AMPLITUDE}"),
        ));
    }
    if nu.len() != d {
        return Err(Error::InvalidDimension(format!(
            "{} weights for {d} channels",
            nu.len()
        )));
    }

    let cutoff = cutoff_for(config.r, ORACLE_BUDGET)?;
    let carrier = multinomial_split(&squeezed_vacuum(config.r, cutoff)?, &config.split)?;
    let budget = carrier.truncation_budget();
    if budget >= ORACLE_BUDGET {
        return Err(Error::Truncation {
            deficit: budget,
            budget: ORACLE_BUDGET,
        });
    }
    let m = mode_moments(&carrier)?;

    let g = config.signal_gain();
    let eta_d = config.eta_dis;
    let eta_o = config.eta_out();
    let half: Vec<(f64, f64)> = (0..d)
        .map(|j| (0.5 * g * config.theta(j)).sin_cos())
        .collect();
    // coefficients of b_j and a_j in the detected mode
    let cb: Vec<f64> = half
        .iter()
        .map(|(_, c)| (eta_o * eta_d).sqrt() * c)
        .collect();
    let ca: Vec<f64> = half
        .iter()
        .map(|(s, _)| (eta_o * eta_d).sqrt() * s)
        .collect();

    // mean ⟨q̃_j⟩ = 2 Re(cb ⟨b_j⟩ + ca α_j); response is its θ_j derivative
    let response: Vec<f64> = (0..d)
        .map(|j| {
            let (s, c) = half[j];
            let alpha = config.alphas[j];
            let db = -0.5 * g * s * (eta_o * eta_d).sqrt();
            let da = 0.5 * g * c * (eta_o * eta_d).sqrt();
            2.0 * (db * m.first[j].re + da * alpha.amplitude * alpha.phase.cos())
        })
        .collect();

    let mut gamma = vec![vec![0.0; d]; d];
    for j in 0..d {
        for k in 0..d {
            let delta = if j == k { 1.0 } else { 0.0 };
            let qq = 2.0 * m.pair[j][k].re + 2.0 * m.number[j][k].re + delta
                - 4.0 * m.first[j].re * m.first[k].re;
            let mut v = cb[j] * cb[k] * qq;
            if j == k {
                // coherent input, loss vacua before and after the MZI
                let (s, c) = half[j];
                v += ca[j] * ca[j] + eta_o * (1.0 - eta_d) * (s * s + c * c) + (1.0 - eta_o);
            }
            gamma[j][k] = v;
        }
    }

    let active: Vec<usize> = (0..d).filter(|&j| nu[j] != 0.0).collect();
    let scale = active
        .iter()
        .map(|&j| response[j].abs())
        .fold(0.0, f64::max);
    let dark: Vec<usize> = active
        .iter()
        .copied()
        .filter(|&j| scale == 0.0 || response[j].abs() <= DARK_THRESHOLD * scale)
        .collect();
    if !dark.is_empty() {
        return Err(Error::DarkResponse { channels: dark });
    }
    let mut variance = 0.0;
    for &j in &active {
        for &k in &active {
            variance += nu[j] / response[j] * gamma[j][k] * nu[k] / response[k];
        }
    }
    Ok(OracleResult {
        variance,
        cutoff,
        truncation_budget: budget,
        response,
        gamma,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn vacuum_at_zero_squeezing() {
        let s = squeezed_vacuum(0.0, 8).unwrap();
        assert_eq!(s.amplitudes()[0], c(1.0));
        assert!(s.amplitudes()[1..].iter().all(|a| a.norm() == 0.0));
    }

    #[test]
    fn squeezed_amplitudes_and_moments() {
        let s = squeezed_vacuum(0.2, 16).unwrap();
        assert!((s.amplitudes()[0].re - 0.99011).abs() < 1e-5);
        assert!((s.amplitudes()[2].re + 0.138_185_843_166_075_4).abs() < 1e-14);
        assert!((s.amplitudes()[2].re + 0.13820).abs() < 2e-5);
        let m = mode_moments(&s).unwrap();
        let bb = m.pair[0][0].re;
        assert!((bb + 0.2f64.sinh() * 0.2f64.cosh()).abs() < 1e-10);
        assert!((bb + 0.205_376_162_901_407_75).abs() < 1e-10);
        let var_q = 1.0 + 2.0 * m.number[0][0].re + 2.0 * bb;
        assert!((var_q - (-0.4f64).exp()).abs() < 1e-10);
    }

    #[test]
    fn truncation_is_reported() {
        assert!(matches!(
            squeezed_vacuum(3.0, 4),
            Err(Error::Truncation { .. })
        ));
    }

    #[test]
    fn split_examples() {
        let one = multinomial_split(&FockState::number(1, 4).unwrap(), &[0.5, 0.5]).unwrap();
        let h = 0.5f64.sqrt();
        assert!((one.amplitude(&[1, 0]) - c(h)).norm() < 1e-15);
        assert!((one.amplitude(&[0, 1]) - c(h)).norm() < 1e-15);

        let two = multinomial_split(&FockState::number(2, 4).unwrap(), &[0.5, 0.5]).unwrap();
        assert!((two.amplitude(&[2, 0]) - c(0.5)).norm() < 1e-15);
        assert!((two.amplitude(&[1, 1]) - c(h)).norm() < 1e-15);
        assert!((two.amplitude(&[0, 2]) - c(0.5)).norm() < 1e-15);
    }

    #[test]
    fn split_moments_follow_probabilities() {
        let r: f64 = 0.3;
        let p = [0.2, 0.3, 0.5];
        let s = multinomial_split(&squeezed_vacuum(r, 20).unwrap(), &p).unwrap();
        let m = mode_moments(&s).unwrap();
        let tol = 1e-8;
        assert!(m.truncation_budget < tol);
        for j in 0..3 {
            assert!(m.first[j].norm() < 1e-15);
            for k in 0..3 {
                let w = (p[j] * p[k]).sqrt();
                assert!((m.number[j][k].re - w * r.sinh().powi(2)).abs() < tol);
                assert!((m.pair[j][k].re + w * r.sinh() * r.cosh()).abs() < tol);
            }
        }
    }

    #[test]
    fn split_guards_dimension() {
        let s = squeezed_vacuum(0.1, 60).unwrap();
        assert!(matches!(
            multinomial_split(&s, &[0.25; 4]),
            Err(Error::Resource(_))
        ));
    }

    #[test]
    fn oracle_examples() {
        let mut cfg = NetworkConfig::new(1);
        cfg.alphas[0].amplitude = 0.7;
        let v = oracle_sensitivity(&cfg, &[1.0]).unwrap().variance;
        assert!((v - 1.0 / 0.49).abs() < 1e-12);

        let mut cfg = NetworkConfig::new(2);
        cfg.r = 0.2;
        cfg.alphas.iter_mut().for_each(|a| a.amplitude = 0.7);
        let v = oracle_sensitivity(&cfg, &[0.5, 0.5]).unwrap().variance;
        assert!((v - (-0.4f64).exp() / 0.98).abs() < 1e-6);

        cfg.eta_mzi = 0.9;
        let v = oracle_sensitivity(&cfg, &[0.5, 0.5]).unwrap().variance;
        let engine = crate::network::sensitivity_numeric(&cfg, &[0.5, 0.5]).unwrap();
        assert!(((v - engine) / engine).abs() < 1e-6);
    }

    #[test]
    fn oracle_refuses_large_inputs() {
        let cfg = NetworkConfig::new(4);
        assert!(oracle_sensitivity(&cfg, &[0.25; 4])
            .unwrap_err()
            .is_config_error());
        let mut cfg = NetworkConfig::new(2);
        cfg.r = 0.5;
        assert!(oracle_sensitivity(&cfg, &[0.5; 2])
            .unwrap_err()
            .is_config_error());
    }
}
