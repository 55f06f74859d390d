//! Network assembly: squeezed resource, splitting cascade, multipass MZIs and
//! homodyne readout, plus the response and noise matrices of the phase estimator.
//!
//! Mode layout for `d` sensors: carrier/signal mode `b_j` is mode `j` and the
//! coherent reference `a_j` is mode `d + j`. The squeezed vacuum enters `b_0`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{GaussianState, Quadrature};
use crate::laws::{self, LossModel};

/// Relative threshold below which a response entry counts as dark.
pub const DARK_THRESHOLD: f64 = 1e-12;
/// Tolerance on `Σ P_j = 1`.
pub const SPLIT_TOLERANCE: f64 = 1e-12;
/// Smallest remaining cascade mass that can still be split.
pub const CASCADE_FLOOR: f64 = 1e-15;
/// Central finite-difference step for the numeric response.
pub const FD_STEP: f64 = 1e-6;

/// Coherent input `α = amplitude · e^{i·phase}` of one MZI.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Coherent {
    pub amplitude: f64,
    #[serde(default)]
    pub phase: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Topology {
    /// One squeezed vacuum shared by all sensors through the cascade.
    #[default]
    Entangled,
    /// An independent squeezed vacuum per sensor.
    Separable,
}

fn one() -> f64 {
    1.0
}

fn one_u32() -> u32 {
    1
}

/// Full description of a sensor network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    pub d: usize,
    /// Multipass count `K`.
    #[serde(default = "one_u32")]
    pub passes: u32,
    /// Multipass coefficient `μ`; `None` means `1/K`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    /// Squeezing strength of the shared resource.
    #[serde(default)]
    pub r: f64,
    pub alphas: Vec<Coherent>,
    /// Working-point phases; empty means all zero.
    #[serde(default)]
    pub thetas: Vec<f64>,
    pub weights: Vec<f64>,
    /// Splitting probabilities `P_j`; ignored by the separable topology.
    pub split: Vec<f64>,
    #[serde(default = "one")]
    pub eta_dis: f64,
    #[serde(default = "one")]
    pub eta_mzi: f64,
    #[serde(default = "one")]
    pub eta_m: f64,
    #[serde(default)]
    pub topology: Topology,
    /// Per-node squeezing for the separable topology; `None` uses `r` everywhere.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node_squeezing: Option<Vec<f64>>,
}

impl NetworkConfig {
    /// Lossless, unsqueezed, single-pass network with unit amplitudes, an even
    /// split and average weights.
    pub fn new(d: usize) -> Self {
        let w = 1.0 / d.max(1) as f64;
        Self {
            d,
            passes: 1,
            mu: None,
            r: 0.0,
            alphas: vec![
                Coherent {
                    amplitude: 1.0,
                    phase: 0.0
                };
                d
            ],
            thetas: vec![0.0; d],
            weights: vec![w; d],
            split: vec![w; d],
            eta_dis: 1.0,
            eta_mzi: 1.0,
            eta_m: 1.0,
            topology: Topology::Entangled,
            node_squeezing: None,
        }
    }

    pub fn mu(&self) -> f64 {
        self.mu.unwrap_or(1.0 / self.passes as f64)
    }

    /// Variance enhancement `k = μK²`.
    pub fn enhancement(&self) -> f64 {
        let k = self.passes as f64;
        self.mu() * k * k
    }

    /// Amplitude gain `√k` of the phase signal; the MZI sees the phase `√k·θ`.
    pub fn signal_gain(&self) -> f64 {
        self.enhancement().sqrt()
    }

    pub fn loss_model(&self) -> LossModel {
        LossModel {
            eta_dis: self.eta_dis,
            eta_mzi: self.eta_mzi,
            eta_m: self.eta_m,
            passes: self.passes,
        }
    }

    pub fn eta_total(&self) -> f64 {
        self.loss_model().eta_total()
    }

    pub fn lambda(&self) -> f64 {
        self.loss_model().lambda()
    }

    /// Transmission after the MZI, `η_MZI · η_m^(2K−1)`.
    pub fn eta_out(&self) -> f64 {
        self.eta_mzi * self.eta_m.powi(2 * self.passes as i32 - 1)
    }

    pub fn theta(&self, j: usize) -> f64 {
        self.thetas.get(j).copied().unwrap_or(0.0)
    }

    /// Total coherent photon number `Σ|α_j|²`.
    pub fn coherent_photons(&self) -> f64 {
        self.alphas.iter().map(|a| a.amplitude * a.amplitude).sum()
    }

    /// Squeezing strength of node `j` for the separable topology.
    pub fn node_r(&self, j: usize) -> f64 {
        match &self.node_squeezing {
            Some(v) => v[j],
            None => self.r,
        }
    }

    /// Squeezed photons injected into the network.
    pub fn squeezed_photons(&self) -> f64 {
        match self.topology {
            Topology::Entangled => self.r.sinh().powi(2),
            Topology::Separable => (0..self.d).map(|j| self.node_r(j).sinh().powi(2)).sum(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.d;
        if d == 0 {
            return Err(Error::config("d", "at least one sensor is required"));
        }
        if self.passes == 0 {
            return Err(Error::config("passes", "must be >= 1"));
        }
        if let Some(mu) = self.mu {
            if !(mu > 0.0 && mu.is_finite()) {
                return Err(Error::config("mu", format!("{mu} must be > 0")));
            }
        }
        if !(self.r >= 0.0 && self.r.is_finite()) {
            return Err(Error::config(
                "r",
                format!("{} must be finite and >= 0", self.r),
            ));
        }
        for (name, len) in [
            ("alphas", self.alphas.len()),
            ("weights", self.weights.len()),
            ("split", self.split.len()),
        ] {
            if len != d {
                return Err(Error::config(
                    name,
                    format!("expected {d} entries, got {len}"),
                ));
            }
        }
        if !self.thetas.is_empty() && self.thetas.len() != d {
            return Err(Error::config(
                "thetas",
                format!("expected {d} entries, got {}", self.thetas.len()),
            ));
        }
        for (j, a) in self.alphas.iter().enumerate() {
            if !(a.amplitude >= 0.0 && a.amplitude.is_finite()) || !a.phase.is_finite() {
                return Err(Error::config(
                    format!("alphas[{j}]"),
                    "amplitude must be finite and >= 0, phase finite",
                ));
            }
        }
        if let Some(j) = self.thetas.iter().position(|t| !t.is_finite()) {
            return Err(Error::config(format!("thetas[{j}]"), "must be finite"));
        }
        if let Some(j) = self.weights.iter().position(|w| !w.is_finite()) {
            return Err(Error::config(format!("weights[{j}]"), "must be finite"));
        }
        if self.weights.iter().all(|w| *w == 0.0) {
            return Err(Error::config(
                "weights",
                "at least one weight must be nonzero",
            ));
        }
        if let Some(j) = self.split.iter().position(|p| !(*p >= 0.0)) {
            return Err(Error::config(
                format!("split[{j}]"),
                "probabilities must be >= 0",
            ));
        }
        let total: f64 = self.split.iter().sum();
        if (total - 1.0).abs() > SPLIT_TOLERANCE {
            return Err(Error::config(
                "split",
                format!("sums to {total}, expected 1"),
            ));
        }
        for (name, v) in [
            ("eta_dis", self.eta_dis),
            ("eta_mzi", self.eta_mzi),
            ("eta_m", self.eta_m),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::config(name, format!("{v} outside [0, 1]")));
            }
        }
        if !(self.eta_total() > 0.0) {
            return Err(Error::config("eta_dis", "total efficiency must be > 0"));
        }
        if let Some(v) = &self.node_squeezing {
            if v.len() != d {
                return Err(Error::config(
                    "node_squeezing",
                    format!("expected {d} entries, got {}", v.len()),
                ));
            }
            if let Some(j) = v.iter().position(|r| !(*r >= 0.0 && r.is_finite())) {
                return Err(Error::config(
                    format!("node_squeezing[{j}]"),
                    "must be >= 0",
                ));
            }
        }
        Ok(())
    }
}

/// One beam splitter of the distribution cascade.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CascadeStep {
    pub carrier: usize,
    pub port: usize,
    pub reflectivity: f64,
    pub transmissivity: f64,
}

/// Sequential peel decomposition of the splitting probabilities: port `j`
/// taps `R_j = P_j / (1 − Σ_{1≤k<j} P_k)` off the carrier (port 0), which
/// keeps `P_0`.
pub fn qc_cascade(split: &[f64]) -> Result<Vec<CascadeStep>> {
    if split.is_empty() {
        return Err(Error::config("split", "empty"));
    }
    let mut steps = Vec::with_capacity(split.len() - 1);
    let mut peeled = 0.0;
    for (port, &p) in split.iter().enumerate().skip(1) {
        let mass = 1.0 - peeled;
        let reflectivity = if p == 0.0 {
            0.0
        } else if mass < CASCADE_FLOOR {
            return Err(Error::InfeasibleSplit {
                port,
                remaining: mass,
                probability: p,
            });
        } else {
            (p / mass).clamp(0.0, 1.0)
        };
        peeled += p;
        steps.push(CascadeStep {
            carrier: 0,
            port,
            reflectivity,
            transmissivity: 1.0 - reflectivity,
        });
    }
    Ok(steps)
}

/// Builds the `2d`-mode output state just before homodyne detection.
pub fn build_network(config: &NetworkConfig) -> Result<GaussianState> {
    config.validate()?;
    let d = config.d;
    let mut state = GaussianState::vacuum(2 * d)?;
    match config.topology {
        Topology::Entangled => {
            state.apply_squeezer(0, config.r)?;
            for step in qc_cascade(&config.split)? {
                state.apply_beam_splitter(step.carrier, step.port, step.transmissivity)?;
            }
        }
        Topology::Separable => {
            for j in 0..d {
                state.apply_squeezer(j, config.node_r(j))?;
            }
        }
    }
    let gain = config.signal_gain();
    let eta_out = config.eta_out();
    for j in 0..d {
        let a = d + j;
        let alpha = config.alphas[j];
        state.apply_displacement(a, alpha.amplitude, alpha.phase)?;
        state.apply_loss(j, config.eta_dis)?;
        state.apply_loss(a, config.eta_dis)?;
        state.apply_mzi(a, j, gain * config.theta(j))?;
        state.apply_loss(j, eta_out)?;
    }
    Ok(state)
}

fn readout(d: usize) -> Vec<(usize, Quadrature)> {
    (0..d).map(|j| (j, Quadrature::Q)).collect()
}

/// Homodyne means and covariance of the measured `q` quadratures.
pub fn measured_moments(config: &NetworkConfig) -> Result<(DVector<f64>, DMatrix<f64>)> {
    build_network(config)?.homodyne_moments(&readout(config.d))
}

/// Analytic response `C_jj = √k √η |α_j| cos φ_j cos(√k θ_j / 2)`.
pub fn response_matrix(config: &NetworkConfig) -> Result<DMatrix<f64>> {
    config.validate()?;
    let g = config.signal_gain();
    let root_eta = config.eta_total().sqrt();
    Ok(DMatrix::from_fn(config.d, config.d, |i, j| {
        if i != j {
            return 0.0;
        }
        let a = config.alphas[j];
        g * root_eta * a.amplitude * a.phase.cos() * (0.5 * g * config.theta(j)).cos()
    }))
}

/// Response from central finite differences of the simulated homodyne means.
pub fn response_matrix_numeric(config: &NetworkConfig, step: f64) -> Result<DMatrix<f64>> {
    config.validate()?;
    let d = config.d;
    let mut c = DMatrix::zeros(d, d);
    let mut shifted = config.clone();
    shifted.thetas = (0..d).map(|j| config.theta(j)).collect();
    for k in 0..d {
        let base = shifted.thetas[k];
        shifted.thetas[k] = base + step;
        let (plus, _) = measured_moments(&shifted)?;
        shifted.thetas[k] = base - step;
        let (minus, _) = measured_moments(&shifted)?;
        shifted.thetas[k] = base;
        for i in 0..d {
            c[(i, k)] = (plus[i] - minus[i]) / (2.0 * step);
        }
    }
    Ok(c)
}

/// Covariance of the measured quadratures, from the simulated state.
pub fn noise_matrix(config: &NetworkConfig) -> Result<DMatrix<f64>> {
    Ok(measured_moments(config)?.1)
}

/// Working-point noise `Γ_jk = η √(P_j P_k)(e^{−2r} − 1) + δ_jk` of the
/// entangled network (valid at `θ = 0`).
pub fn noise_matrix_analytic(config: &NetworkConfig) -> Result<DMatrix<f64>> {
    config.validate()?;
    let eta = config.eta_total();
    let excess = (-2.0 * config.r).exp() - 1.0;
    let p = &config.split;
    Ok(DMatrix::from_fn(config.d, config.d, |i, j| {
        let diag = if i == j { 1.0 } else { 0.0 };
        eta * (p[i] * p[j]).sqrt() * excess + diag
    }))
}

/// Response and noise matrices at one working point.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentData {
    pub c: DMatrix<f64>,
    pub gamma: DMatrix<f64>,
    pub thetas: Vec<f64>,
    pub phases: Vec<f64>,
}

impl MomentData {
    pub fn from_config(config: &NetworkConfig) -> Result<Self> {
        Ok(Self {
            c: response_matrix(config)?,
            gamma: noise_matrix(config)?,
            thetas: (0..config.d).map(|j| config.theta(j)).collect(),
            phases: config.alphas.iter().map(|a| a.phase).collect(),
        })
    }

    /// Error-propagation variance `νᵀ C⁻¹ Γ C⁻ᵀ ν`.
    ///
    /// With a diagonal `C`, channels carrying zero weight are dropped before the
    /// dark-channel check.
    pub fn variance(&self, nu: &[f64]) -> Result<f64> {
        let d = self.c.nrows();
        if nu.len() != d {
            return Err(Error::InvalidDimension(format!(
                "{} weights for {d} channels",
                nu.len()
            )));
        }
        let diagonal = (0..d).all(|i| (0..d).all(|j| i == j || self.c[(i, j)] == 0.0));
        if diagonal {
            let active: Vec<usize> = (0..d).filter(|&j| nu[j] != 0.0).collect();
            let scale = active
                .iter()
                .map(|&j| self.c[(j, j)].abs())
                .fold(0.0, f64::max);
            let dark: Vec<usize> = active
                .iter()
                .copied()
                .filter(|&j| self.c[(j, j)].abs() <= DARK_THRESHOLD * scale || scale == 0.0)
                .collect();
            if !dark.is_empty() {
                return Err(Error::DarkResponse { channels: dark });
            }
            let x: Vec<f64> = active.iter().map(|&j| nu[j] / self.c[(j, j)]).collect();
            let mut v = 0.0;
            for (a, &i) in active.iter().enumerate() {
                for (b, &j) in active.iter().enumerate() {
                    v += x[a] * self.gamma[(i, j)] * x[b];
                }
            }
            return Ok(v);
        }
        let scale = self.c.abs().max();
        let lu = self.c.transpose().lu();
        let u = lu.u();
        let dark: Vec<usize> = (0..d)
            .filter(|&j| u[(j, j)].abs() <= DARK_THRESHOLD * scale)
            .collect();
        if !dark.is_empty() {
            return Err(Error::DarkResponse { channels: dark });
        }
        let x = lu
            .solve(&DVector::from_column_slice(nu))
            .ok_or(Error::DarkResponse {
                channels: (0..d).collect(),
            })?;
        Ok((x.transpose() * &self.gamma * &x)[(0, 0)])
    }
}

/// Variance of `νᵀθ` from the simulated network.
pub fn sensitivity_numeric(config: &NetworkConfig, nu: &[f64]) -> Result<f64> {
    MomentData::from_config(config)?.variance(nu)
}

/// Closed-form variance of the separable network at the working point `θ = 0`:
/// `Σ_j ν_j² (e^{−2r_j} + Λ) / (k |α_j|² cos² φ_j)`.
pub fn sensitivity_separable(config: &NetworkConfig, nu: &[f64]) -> Result<f64> {
    config.validate()?;
    if config.topology != Topology::Separable {
        return Err(Error::config("topology", "separable topology required"));
    }
    if nu.len() != config.d {
        return Err(Error::InvalidDimension(format!(
            "{} weights for {} channels",
            nu.len(),
            config.d
        )));
    }
    let lambda = config.lambda();
    let k = config.enhancement();
    let mut dark = Vec::new();
    let mut v = 0.0;
    for j in 0..config.d {
        if nu[j] == 0.0 {
            continue;
        }
        let a = config.alphas[j];
        let response = a.amplitude * a.phase.cos();
        if response == 0.0 {
            dark.push(j);
            continue;
        }
        v += nu[j] * nu[j] * ((-2.0 * config.node_r(j)).exp() + lambda) / (k * response * response);
    }
    if !dark.is_empty() {
        return Err(Error::DarkResponse { channels: dark });
    }
    Ok(v)
}

/// Closed-form entangled-network variance at the working point for an arbitrary
/// allocation.
pub fn sensitivity_closed_form(config: &NetworkConfig, nu: &[f64]) -> Result<f64> {
    config.validate()?;
    let amps: Vec<f64> = config.alphas.iter().map(|a| a.amplitude).collect();
    let phases: Vec<f64> = config.alphas.iter().map(|a| a.phase).collect();
    laws::variance_closed_form(
        &config.split,
        &amps,
        &phases,
        nu,
        config.r,
        config.eta_total(),
        config.enhancement(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    fn coherent(amplitude: f64, phase: f64) -> Coherent {
        Coherent { amplitude, phase }
    }

    #[test]
    fn cascade_peel() {
        let s = qc_cascade(&[0.5, 0.5]).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].reflectivity, 0.5);

        let third = 1.0 / 3.0;
        let s = qc_cascade(&[third, third, third]).unwrap();
        assert!((s[0].reflectivity - third).abs() < 1e-15);
        assert!((s[1].reflectivity - 0.5).abs() < 1e-15);

        let s = qc_cascade(&[1.0, 0.0, 0.0, 0.0]).unwrap();
        assert!(s.iter().all(|st| st.reflectivity == 0.0));
    }

    #[test]
    fn cascade_rejects_exhausted_carrier() {
        let err = qc_cascade(&[0.0, 1.0, 1e-20]).unwrap_err();
        assert!(matches!(err, Error::InfeasibleSplit { port: 2, .. }));
    }

    #[test]
    fn dark_port_is_vacuum() {
        let mut c = NetworkConfig::new(1);
        c.alphas = vec![coherent(10.0, 0.0)];
        let (m, v) = measured_moments(&c).unwrap();
        assert_eq!(m[0], 0.0);
        assert!((v[(0, 0)] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn weighted_noise_matches_analytic_gamma() {
        let mut c = NetworkConfig::new(2);
        c.r = 0.75;
        let num = noise_matrix(&c).unwrap();
        let ana = noise_matrix_analytic(&c).unwrap();
        assert!((&num - &ana).abs().max() < 1e-12);
        assert!((num[(0, 1)] - 0.5 * ((-1.5f64).exp() - 1.0)).abs() < 1e-12);
        assert!((num[(0, 1)] + 0.38844).abs() < 1e-5);
    }

    #[test]
    fn mean_follows_sine_of_phase() {
        let mut c = NetworkConfig::new(1);
        c.alphas = vec![coherent(3.0, 0.0)];
        c.thetas = vec![0.2];
        c.eta_mzi = 0.8;
        let (m, _) = measured_moments(&c).unwrap();
        assert!(rel(m[0], 2.0 * 3.0 * 0.1f64.sin() * 0.8f64.sqrt()) < 1e-14);
    }

    #[test]
    fn response_examples() {
        let mut c = NetworkConfig::new(2);
        c.alphas = vec![coherent(3.0, 0.0), coherent(3.0, PI)];
        let m = response_matrix(&c).unwrap();
        assert_eq!(m[(0, 0)], 3.0);
        assert!((m[(1, 1)] + 3.0).abs() < 1e-15);
        assert_eq!(m[(0, 1)], 0.0);
        c.thetas = vec![PI, 0.0];
        let m = response_matrix(&c).unwrap();
        assert!(m[(0, 0)].abs() < 1e-15);
    }

    #[test]
    fn noise_examples() {
        let c = NetworkConfig::new(3);
        let g = noise_matrix(&c).unwrap();
        assert!((g - DMatrix::identity(3, 3)).abs().max() < 1e-15);

        let mut c = NetworkConfig::new(1);
        c.r = 0.75;
        c.eta_mzi = 0.88;
        let g = noise_matrix(&c).unwrap();
        assert!((g[(0, 0)] - (0.88 * (-1.5f64).exp() + 0.12)).abs() < 1e-14);
        assert!((g[(0, 0)] - 0.31636).abs() < 1e-5);
    }

    #[test]
    fn sensitivity_examples() {
        let mut c = NetworkConfig::new(1);
        c.alphas = vec![coherent(10.0, 0.0)];
        assert!(rel(sensitivity_numeric(&c, &[1.0]).unwrap(), 0.01) < 1e-13);

        let mut c = NetworkConfig::new(2);
        c.r = 0.75;
        c.alphas = vec![coherent(50f64.sqrt(), 0.0); 2];
        let v = sensitivity_numeric(&c, &[0.5, 0.5]).unwrap();
        assert!(rel(v, 0.002_231_301_601_484_298_3) < 1e-12);

        c.thetas = vec![0.0, PI];
        assert_eq!(
            sensitivity_numeric(&c, &[0.5, 0.5]).unwrap_err(),
            Error::DarkResponse { channels: vec![1] }
        );
        // a dark channel with zero weight is harmless
        assert!(sensitivity_numeric(&c, &[1.0, 0.0]).is_ok());
    }

    #[test]
    fn separable_examples() {
        let mut c = NetworkConfig::new(2);
        c.topology = Topology::Separable;
        c.r = 0.75;
        c.alphas = vec![coherent(50f64.sqrt(), 0.0); 2];
        let v = sensitivity_separable(&c, &[0.5, 0.5]).unwrap();
        assert!(rel(v, 0.002_231_301_601_484_298_3) < 1e-12);
        assert!(rel(sensitivity_numeric(&c, &[0.5, 0.5]).unwrap(), v) < 1e-12);

        c.r = 0.0;
        c.alphas = vec![coherent(2.0, 0.0), coherent(4.0, 0.0)];
        let v = sensitivity_separable(&c, &[0.3, 0.7]).unwrap();
        assert!(rel(v, 0.09 / 4.0 + 0.49 / 16.0) < 1e-14);

        c.alphas[1].amplitude = 0.0;
        assert_eq!(
            sensitivity_separable(&c, &[0.3, 0.7]).unwrap_err(),
            Error::DarkResponse { channels: vec![1] }
        );
    }

    #[test]
    fn multipass_divides_variance_by_k() {
        let mut c = NetworkConfig::new(2);
        c.r = 0.5;
        c.alphas = vec![coherent(5.0, 0.0); 2];
        let single = sensitivity_numeric(&c, &[0.5, 0.5]).unwrap();
        c.passes = 5;
        let multi = sensitivity_numeric(&c, &[0.5, 0.5]).unwrap();
        assert!(rel(single / multi, 5.0) < 1e-12);
        c.mu = Some(1.0);
        let full = sensitivity_numeric(&c, &[0.5, 0.5]).unwrap();
        assert!(rel(single / full, 25.0) < 1e-12);
    }

    #[test]
    fn validation_names_fields() {
        let mut c = NetworkConfig::new(2);
        c.split = vec![0.5, 0.6];
        assert!(matches!(c.validate(), Err(Error::Config { field, .. }) if field == "split"));
        let mut c = NetworkConfig::new(2);
        c.eta_dis = 1.5;
        assert!(matches!(c.validate(), Err(Error::Config { field, .. }) if field == "eta_dis"));
        let mut c = NetworkConfig::new(2);
        c.weights = vec![1.0];
        assert!(matches!(c.validate(), Err(Error::Config { field, .. }) if field == "weights"));
        assert!(NetworkConfig::new(0).validate().is_err());
    }

    #[test]
    fn general_solve_matches_diagonal() {
        let m = MomentData {
            c: DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 4.0]),
            gamma: DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.2, 1.0]),
            thetas: vec![0.0; 2],
            phases: vec![0.0; 2],
        };
        let diag = m.variance(&[0.3, 0.7]).unwrap();
        let mut skew = m.clone();
        skew.c[(0, 1)] = 1e-300;
        let general = skew.variance(&[0.3, 0.7]).unwrap();
        assert!(rel(general, diag) < 1e-14);
    }
}
