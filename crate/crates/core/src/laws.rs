//! Closed-form sensitivity laws, bounds and conversions.
//!
//! Every law carries the `(Σ|ν_j|)²` weight factor; for weights normalized to
//! `Σ|ν_j| = 1` it drops out. Normalization is left to the caller (see
//! [`is_normalized`]). The multipass argument `k` is the effective
//! enhancement `μK²`, which equals the pass count `K` at the default `μ = 1/K`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::minimize;

/// Relative argument tolerance of the squeezing optimizer.
pub const NS_REL_TOL: f64 = 1e-10;
/// Iteration cap of the squeezing optimizer.
pub const NS_MAX_ITER: usize = 200;
/// Guard-grid size of the squeezing optimizer.
pub const NS_GUARD_SEEDS: usize = 64;

/// Efficiency chain of one interferometer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossModel {
    pub eta_dis: f64,
    pub eta_mzi: f64,
    pub eta_m: f64,
    pub passes: u32,
}

impl LossModel {
    pub fn new(eta_dis: f64, eta_mzi: f64, eta_m: f64, passes: u32) -> Result<Self> {
        for (name, v) in [("eta_dis", eta_dis), ("eta_mzi", eta_mzi), ("eta_m", eta_m)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::param(name, v, "efficiency must lie in [0, 1]"));
            }
        }
        if passes == 0 {
            return Err(Error::param("passes", 0.0, "at least one pass"));
        }
        Ok(Self {
            eta_dis,
            eta_mzi,
            eta_m,
            passes,
        })
    }

    pub fn lossless(passes: u32) -> Self {
        Self {
            eta_dis: 1.0,
            eta_mzi: 1.0,
            eta_m: 1.0,
            passes,
        }
    }

    /// `η = η_dis · η_MZI · η_m^(2K−1)`.
    pub fn eta_total(&self) -> f64 {
        self.eta_dis * self.eta_mzi * self.eta_m.powi(2 * self.passes as i32 - 1)
    }

    /// `Λ = 1/η − 1`.
    pub fn lambda(&self) -> f64 {
        loss_parameter(self.eta_total()).unwrap_or(f64::INFINITY)
    }
}

/// `Λ = 1/η − 1`, zero exactly when `η = 1`.
pub fn loss_parameter(eta: f64) -> Result<f64> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::Domain(format!("efficiency {eta} outside (0, 1]")));
    }
    Ok(if eta == 1.0 { 0.0 } else { 1.0 / eta - 1.0 })
}

/// A single-mode squeezed vacuum described by its squeezing strength.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqueezedResource {
    pub r: f64,
}

impl SqueezedResource {
    pub fn from_r(r: f64) -> Result<Self> {
        r_to_ns(r)?;
        Ok(Self { r })
    }

    pub fn from_photons(n_s: f64) -> Result<Self> {
        Ok(Self { r: ns_to_r(n_s)? })
    }

    /// `n̄_s = sinh² r`.
    pub fn photons(&self) -> f64 {
        self.r.sinh().powi(2)
    }

    /// Variance of the squeezed quadrature, `e^{−2r}`.
    pub fn var_q(&self) -> f64 {
        (-2.0 * self.r).exp()
    }

    /// Variance of the anti-squeezed quadrature, `e^{2r}`.
    pub fn var_p(&self) -> f64 {
        (2.0 * self.r).exp()
    }
}

/// `n̄_s = sinh² r`.
pub fn r_to_ns(r: f64) -> Result<f64> {
    if !(r >= 0.0) || !r.is_finite() {
        return Err(Error::Domain(format!(
            "squeezing strength {r} must be >= 0"
        )));
    }
    Ok(r.sinh().powi(2))
}

/// Inverse of [`r_to_ns`]: `r = asinh √n̄_s`.
pub fn ns_to_r(n_s: f64) -> Result<f64> {
    if !(n_s >= 0.0) || !n_s.is_finite() {
        return Err(Error::Domain(format!("photon number {n_s} must be >= 0")));
    }
    Ok(n_s.sqrt().asinh())
}

/// `e^{−2r} = 1 + 2n̄_s − 2√(n̄_s + n̄_s²)`, evaluated in the rationalized form
/// `1 / (1 + 2n̄_s + 2√(n̄_s + n̄_s²))` which does not cancel for large `n̄_s`.
pub fn squeezed_variance_from_photons(n_s: f64) -> f64 {
    1.0 / (1.0 + 2.0 * n_s + 2.0 * (n_s + n_s * n_s).sqrt())
}

/// `Σ|ν_j|`.
pub fn weight_scale(nu: &[f64]) -> f64 {
    nu.iter().map(|v| v.abs()).sum()
}

/// Whether `Σ|ν_j| = 1` to within `1e-12`.
pub fn is_normalized(nu: &[f64]) -> bool {
    (weight_scale(nu) - 1.0).abs() <= 1e-12
}

fn check_weights(nu: &[f64]) -> Result<f64> {
    let s = weight_scale(nu);
    if nu.is_empty() || s == 0.0 || !s.is_finite() {
        return Err(Error::Domain(
            "weight vector must be nonzero and finite".into(),
        ));
    }
    Ok(s)
}

fn check_k(k: f64) -> Result<()> {
    if !(k > 0.0) || !k.is_finite() {
        return Err(Error::Domain(format!(
            "multipass enhancement {k} must be > 0"
        )));
    }
    Ok(())
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::Domain(format!(
            "loss parameter {lambda} must be >= 0"
        )));
    }
    Ok(())
}

fn finite(value: f64, what: &str) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Overflow(format!("{what} is not finite")))
    }
}

/// Conventional baseline variance `(Σ|ν_j|)² / n̄_T`: coherent light only,
/// single pass, no loss.
pub fn sql_variance(n_total: f64, nu: &[f64]) -> Result<f64> {
    let s = check_weights(nu)?;
    if !(n_total > 0.0) {
        return Err(Error::Domain(format!(
            "photon number {n_total} must be > 0"
        )));
    }
    Ok(s * s / n_total)
}

/// Optimally allocated network: `(e^{−2r} + Λ)(Σ|ν_j|)² / (k n̄_c)`.
pub fn optimized_variance(n_c: f64, r: f64, lambda: f64, k: f64, nu: &[f64]) -> Result<f64> {
    let s = check_weights(nu)?;
    if !(n_c > 0.0) {
        return Err(Error::Domain(format!(
            "coherent photon number {n_c} must be > 0"
        )));
    }
    check_k(k)?;
    check_lambda(lambda)?;
    r_to_ns(r)?;
    finite(((-2.0 * r).exp() + lambda) * s * s / (k * n_c), "variance")
}

/// [`optimized_variance`] at fixed total photon number, parameterized by the
/// squeezed photon number. Returns [`Error::Allocation`] for `n_s >= n_T` and
/// [`Error::Overflow`] when the coherent share underflows to a non-finite result.
pub fn variance_vs_ns(n_total: f64, n_s: f64, lambda: f64, k: f64, nu: &[f64]) -> Result<f64> {
    let s = check_weights(nu)?;
    check_k(k)?;
    check_lambda(lambda)?;
    if !(n_s >= 0.0) {
        return Err(Error::Domain(format!(
            "squeezed photon number {n_s} must be >= 0"
        )));
    }
    if !(n_s < n_total) {
        return Err(Error::Allocation { n_s, n_total });
    }
    finite(
        variance_vs_ns_unchecked(n_total, n_s, lambda, k) * s * s,
        "variance",
    )
}

fn variance_vs_ns_unchecked(n_total: f64, n_s: f64, lambda: f64, k: f64) -> f64 {
    (squeezed_variance_from_photons(n_s) + lambda) / (k * (n_total - n_s))
}

/// Optimum of [`variance_vs_ns`] over the squeezed photon number, for unit
/// `Σ|ν_j|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MinOverR {
    /// Numerical optimum (authoritative).
    pub n_s: f64,
    pub variance: f64,
    /// Large-`n̄_s` asymptotic optimum `n̄_T / (1 + √(1 + 4Λn̄_T))`.
    pub asymptotic_n_s: f64,
    /// `(1 + √(1 + 4Λn̄_T))² / (4k n̄_T²)`, exact in the lossless large-`n̄_T` limit.
    pub asymptotic_variance: f64,
}

/// Minimizes the optimized variance over the squeezing strength at fixed
/// total photon number `n_total`.
pub fn min_variance_over_r(n_total: f64, lambda: f64, k: f64) -> Result<MinOverR> {
    if !(n_total > 0.0) || !n_total.is_finite() {
        return Err(Error::Domain(format!(
            "photon number {n_total} must be > 0"
        )));
    }
    check_k(k)?;
    check_lambda(lambda)?;
    let upper = n_total * (1.0 - 1e-9);
    let best = minimize::guarded_minimize(
        |ns| variance_vs_ns_unchecked(n_total, ns, lambda, k),
        0.0,
        upper,
        NS_GUARD_SEEDS,
        NS_REL_TOL,
        NS_MAX_ITER,
    );
    let root = (1.0 + 4.0 * lambda * n_total).sqrt();
    Ok(MinOverR {
        n_s: best.x,
        variance: finite(best.value, "optimized variance")?,
        asymptotic_n_s: n_total / (1.0 + root),
        asymptotic_variance: (1.0 + root).powi(2) / (4.0 * k * n_total * n_total),
    })
}

/// Photon-number regime of the squeezing-optimized network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    LowN,
    Heisenberg,
    LossFloor,
}

impl Regime {
    pub fn label(&self) -> &'static str {
        match self {
            Regime::LowN => "low-n",
            Regime::Heisenberg => "heisenberg",
            Regime::LossFloor => "loss-floor",
        }
    }

    /// Label thresholds: `n̄_T < 0.1`, then `n̄_T < 1/(10Λ)`, else loss floor.
    pub fn classify(n_total: f64, lambda: f64) -> Regime {
        if n_total < 0.1 {
            Regime::LowN
        } else if lambda == 0.0 || n_total < 1.0 / (10.0 * lambda) {
            Regime::Heisenberg
        } else {
            Regime::LossFloor
        }
    }
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// The three asymptotic branches of the squeezing-optimized variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegimeLimits {
    /// `(1 + Λ)/(k n̄_T)`.
    pub low_n: f64,
    /// `1/(k n̄_T²)`.
    pub heisenberg: f64,
    /// `Λ/(k n̄_T)`; zero without loss.
    pub loss_floor: f64,
    pub active: Regime,
}

impl RegimeLimits {
    pub fn active_value(&self) -> f64 {
        match self.active {
            Regime::LowN => self.low_n,
            Regime::Heisenberg => self.heisenberg,
            Regime::LossFloor => self.loss_floor,
        }
    }
}

pub fn regime_limits(n_total: f64, lambda: f64, k: f64) -> Result<RegimeLimits> {
    if !(n_total > 0.0) {
        return Err(Error::Domain(format!(
            "photon number {n_total} must be > 0"
        )));
    }
    check_k(k)?;
    check_lambda(lambda)?;
    Ok(RegimeLimits {
        low_n: (1.0 + lambda) / (k * n_total),
        heisenberg: 1.0 / (k * n_total * n_total),
        loss_floor: lambda / (k * n_total),
        active: Regime::classify(n_total, lambda),
    })
}

/// Quantum Cramér-Rao bound `(Σ|ν_j|)² / (k(n̄_c e^{2r} + sinh² r))`.
pub fn qcrb(n_c: f64, r: f64, k: f64, nu: &[f64]) -> Result<f64> {
    let s = check_weights(nu)?;
    check_k(k)?;
    if !(n_c >= 0.0) {
        return Err(Error::Domain(format!(
            "coherent photon number {n_c} must be >= 0"
        )));
    }
    let n_s = r_to_ns(r)?;
    let denom = n_c * (2.0 * r).exp() + n_s;
    if denom <= 0.0 {
        return Err(Error::Domain("no photons: QCRB undefined".into()));
    }
    finite(s * s / (k * denom), "QCRB")
}

/// `‖ν‖_κ = (Σ|ν_j|^κ)^{1/κ}`.
pub fn quasi_norm(nu: &[f64], kappa: f64) -> f64 {
    nu.iter()
        .map(|v| v.abs().powf(kappa))
        .sum::<f64>()
        .powf(1.0 / kappa)
}

/// Which branch of the entangled-over-separable gain applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GainRegime {
    /// Loss-negligible, photon-limited operation where both strategies reach
    /// Heisenberg scaling.
    Low,
    /// Loss-dominated operation.
    High,
}

/// Entangled-over-separable sensitivity gain.
///
/// `Low` gives `(Σ|ν_j|^{2/3})³ / (Σ|ν_j|)²`, i.e. `‖ν‖²_{2/3}` for normalized
/// weights; `High` gives 1.
pub fn gain(nu: &[f64], regime: GainRegime) -> Result<f64> {
    let s = check_weights(nu)?;
    Ok(match regime {
        GainRegime::Low => quasi_norm(nu, 2.0 / 3.0).powi(2) / (s * s),
        GainRegime::High => 1.0,
    })
}

/// Which photon number is compared against `Λ` when picking the gain branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GainThreshold {
    TotalPhotons,
    SqueezedPhotons,
}

/// Branch label `n ≲ Λ → Low`, `n ≳ Λ → High`, with the compared photon
/// number chosen by the caller.
pub fn gain_regime_by_threshold(n: f64, lambda: f64) -> GainRegime {
    if n <= lambda {
        GainRegime::Low
    } else {
        GainRegime::High
    }
}

/// Average-phase variance for `d` sensors at fixed per-node coherent photons:
/// `(e^{−2r} + Λ) / (k d n̄_c′)`.
pub fn scaling_with_d(n_c_per_node: f64, d: usize, r: f64, lambda: f64, k: f64) -> Result<f64> {
    if d == 0 {
        return Err(Error::Domain("at least one sensor".into()));
    }
    if !(n_c_per_node > 0.0) {
        return Err(Error::Domain(format!(
            "per-node photon number {n_c_per_node} must be > 0"
        )));
    }
    check_k(k)?;
    check_lambda(lambda)?;
    r_to_ns(r)?;
    Ok(((-2.0 * r).exp() + lambda) / (k * d as f64 * n_c_per_node))
}

/// Joint noise reduction relative to the conventional network,
/// `−10 log₁₀(e^{−2r} + Λ)`; positive below the SQL.
pub fn db_below_sql(r: f64, lambda: f64) -> f64 {
    -10.0 * ((-2.0 * r).exp() + lambda).log10()
}

/// Error-propagation variance at the working point `θ = 0` for an arbitrary
/// (not necessarily optimal) allocation:
///
/// `[(e^{−2r} − 1)(Σ ν_j √P_j / (|α_j| cos φ_j))² + Σ ν_j² / (η |α_j|²)] / k`.
///
/// Channels with `ν_j = 0` do not contribute.
pub fn variance_closed_form(
    split: &[f64],
    amplitudes: &[f64],
    phases: &[f64],
    nu: &[f64],
    r: f64,
    eta: f64,
    k: f64,
) -> Result<f64> {
    let d = nu.len();
    if split.len() != d || amplitudes.len() != d || phases.len() != d {
        return Err(Error::InvalidDimension(
            "split, amplitudes, phases and weights must have equal length".into(),
        ));
    }
    check_weights(nu)?;
    check_k(k)?;
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::Domain(format!("efficiency {eta} outside (0, 1]")));
    }
    let mut dark = Vec::new();
    let mut correlated = 0.0;
    let mut independent = 0.0;
    for j in 0..d {
        if nu[j] == 0.0 {
            continue;
        }
        let response = amplitudes[j] * phases[j].cos();
        if response.abs() <= 1e-300 {
            dark.push(j);
            continue;
        }
        correlated += nu[j] * split[j].sqrt() / response;
        independent += nu[j] * nu[j] / (eta * amplitudes[j] * amplitudes[j]);
    }
    if !dark.is_empty() {
        return Err(Error::DarkResponse { channels: dark });
    }
    let excess = (-2.0 * r).exp() - 1.0;
    finite(
        (excess * correlated * correlated + independent) / k,
        "variance",
    )
}

/// Summary of one sensitivity evaluation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensitivityReport {
    /// Phase variance in rad².
    pub variance: f64,
    pub std: f64,
    /// `10 log₁₀(sql / variance)`.
    pub db_vs_sql: f64,
    pub sql: f64,
    pub regime: Regime,
    pub qcrb: f64,
    pub gain_vs_separable: Option<f64>,
}

impl SensitivityReport {
    pub fn new(
        variance: f64,
        sql: f64,
        regime: Regime,
        qcrb: f64,
        gain_vs_separable: Option<f64>,
    ) -> Self {
        Self {
            variance,
            std: variance.sqrt(),
            db_vs_sql: 10.0 * (sql / variance).log10(),
            sql,
            regime,
            qcrb,
            gain_vs_separable,
        }
    }
}
