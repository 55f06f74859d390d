//! Resource allocation, squeezing optimization and parameter scans.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock;
use crate::laws::{self, LossModel, Regime};
use crate::network::{self, Coherent, NetworkConfig, Topology};

/// Optimal coherent and squeezed allocation for a weight vector.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Allocation {
    pub alphas: Vec<Coherent>,
    pub split: Vec<f64>,
    pub n_s: f64,
    pub n_c: f64,
    /// `Σ|ν_j|` of the weights the allocation was computed for.
    pub weight_scale: f64,
    pub achieved_variance: Option<f64>,
}

/// `|α_j|² = n_c |ν_j| / Σ|ν|`, `P_j = |ν_j| / Σ|ν|`, `φ_j = 0` for `ν_j ≥ 0`
/// and `π` otherwise.
pub fn optimal_allocation(nu: &[f64], n_c: f64) -> Result<Allocation> {
    let scale = laws::weight_scale(nu);
    if nu.is_empty() || !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::Domain(
            "weight vector must be nonzero and finite".into(),
        ));
    }
    if !(n_c > 0.0) || !n_c.is_finite() {
        return Err(Error::Domain(format!(
            "coherent photon number {n_c} must be > 0"
        )));
    }
    let split: Vec<f64> = nu.iter().map(|v| v.abs() / scale).collect();
    let alphas = nu
        .iter()
        .zip(&split)
        .map(|(v, p)| Coherent {
            amplitude: (n_c * p).sqrt(),
            phase: if *v >= 0.0 { 0.0 } else { std::f64::consts::PI },
        })
        .collect();
    Ok(Allocation {
        alphas,
        split,
        n_s: 0.0,
        n_c,
        weight_scale: scale,
        achieved_variance: None,
    })
}

/// Result of [`optimize_squeezing`], scaled by `(Σ|ν_j|)²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SqueezingOptimum {
    pub n_s: f64,
    pub r: f64,
    pub variance: f64,
    pub asymptotic_n_s: f64,
    pub asymptotic_variance: f64,
}

/// Best split of `n_T` photons between squeezed vacuum and coherent light.
pub fn optimize_squeezing(
    n_total: f64,
    lambda: f64,
    k: f64,
    nu: &[f64],
) -> Result<SqueezingOptimum> {
    let s = laws::weight_scale(nu);
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::Domain(
            "weight vector must be nonzero and finite".into(),
        ));
    }
    let m = laws::min_variance_over_r(n_total, lambda, k)?;
    Ok(SqueezingOptimum {
        n_s: m.n_s,
        r: laws::ns_to_r(m.n_s)?,
        variance: m.variance * s * s,
        asymptotic_n_s: m.asymptotic_n_s,
        asymptotic_variance: m.asymptotic_variance * s * s,
    })
}

/// Per-node photon budgets of the optimized separable network.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeparableOptimum {
    pub variance: f64,
    /// Total photons per node.
    pub photons: Vec<f64>,
    /// Squeezed photons per node.
    pub squeezed: Vec<f64>,
}

/// Optimal single-node trade-off `f(n) = min_s (e^{−2r(s)} + Λ)/(k(n − s))`
/// and its derivative by the envelope theorem.
fn node_curve(n: f64, lambda: f64, k: f64) -> Result<(f64, f64, f64)> {
    let m = laws::min_variance_over_r(n, lambda, k)?;
    let slope = -m.variance / (n - m.n_s);
    Ok((m.variance, slope, m.n_s))
}

fn bisect_log(
    mut lo: f64,
    mut hi: f64,
    iterations: usize,
    mut above: impl FnMut(f64) -> Result<bool>,
) -> Result<f64> {
    for _ in 0..iterations {
        let mid = (lo * hi).sqrt();
        if above(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi / lo - 1.0 < 1e-14 {
            break;
        }
    }
    Ok((lo * hi).sqrt())
}

/// Separable network with independent squeezed vacua, photons optimally spread
/// over nodes at fixed total `n_T`: minimizes `Σ ν_j² f(n_j)` subject to
/// `Σ n_j = n_T` by bisection on the Lagrange multiplier.
pub fn separable_optimum(
    n_total: f64,
    lambda: f64,
    k: f64,
    nu: &[f64],
) -> Result<SeparableOptimum> {
    if !(n_total > 0.0) || !n_total.is_finite() {
        return Err(Error::Domain(format!(
            "photon number {n_total} must be > 0"
        )));
    }
    let active: Vec<usize> = (0..nu.len()).filter(|&j| nu[j] != 0.0).collect();
    if active.is_empty() {
        return Err(Error::Domain("weight vector must be nonzero".into()));
    }
    let floor = n_total * 1e-12;
    // n_j(λ): where ν_j² |f'(n_j)| = λ
    let node_budget = |j: usize, lam: f64| -> Result<f64> {
        let w = nu[j] * nu[j];
        if w * -node_curve(n_total, lambda, k)?.1 >= lam {
            return Ok(n_total);
        }
        if w * -node_curve(floor, lambda, k)?.1 <= lam {
            return Ok(floor);
        }
        bisect_log(floor, n_total, 200, |n| {
            Ok(w * -node_curve(n, lambda, k)?.1 <= lam)
        })
    };
    let slopes: Result<Vec<f64>> = active
        .iter()
        .flat_map(|&j| {
            let w = nu[j] * nu[j];
            [n_total, floor].map(|n| node_curve(n, lambda, k).map(|c| -c.1 * w))
        })
        .collect();
    let slopes = slopes?;
    let lam_lo = slopes.iter().copied().fold(f64::INFINITY, f64::min);
    let lam_hi = slopes.iter().copied().fold(0.0, f64::max);
    let total_at = |lam: f64| -> Result<f64> { active.iter().map(|&j| node_budget(j, lam)).sum() };
    let lam = bisect_log(lam_lo, lam_hi, 200, |lam| Ok(total_at(lam)? <= n_total))?;

    let mut photons = vec![0.0; nu.len()];
    for &j in &active {
        photons[j] = node_budget(j, lam)?;
    }
    // absorb the bisection residue proportionally
    let sum: f64 = photons.iter().sum();
    photons.iter_mut().for_each(|n| *n *= n_total / sum);
    let mut squeezed = vec![0.0; nu.len()];
    let mut variance = 0.0;
    for &j in &active {
        let (f, _, s) = node_curve(photons[j], lambda, k)?;
        squeezed[j] = s;
        variance += nu[j] * nu[j] * f;
    }
    Ok(SeparableOptimum {
        variance,
        photons,
        squeezed,
    })
}

/// Entangled and separable optima at equal total photon number.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GainComparison {
    pub entangled: f64,
    pub separable: f64,
    /// `separable / entangled`.
    pub gain: f64,
}

pub fn entangled_gain(n_total: f64, lambda: f64, k: f64, nu: &[f64]) -> Result<GainComparison> {
    let entangled = optimize_squeezing(n_total, lambda, k, nu)?.variance;
    let separable = separable_optimum(n_total, lambda, k, nu)?.variance;
    Ok(GainComparison {
        entangled,
        separable,
        gain: separable / entangled,
    })
}

/// Named weight patterns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightPattern {
    /// `(1, 1, …, 1)/d`.
    Ave,
    /// `(1, −1, 1, …)/d`.
    Stag,
    /// First half `+1`, second half `−1`, over `d`.
    Asym,
    /// All weight on the first node.
    Single,
}

impl WeightPattern {
    pub fn weights(&self, d: usize) -> Vec<f64> {
        let w = 1.0 / d as f64;
        (0..d)
            .map(|j| match self {
                WeightPattern::Ave => w,
                WeightPattern::Stag => {
                    if j % 2 == 0 {
                        w
                    } else {
                        -w
                    }
                }
                WeightPattern::Asym => {
                    if j < d.div_ceil(2) {
                        w
                    } else {
                        -w
                    }
                }
                WeightPattern::Single => {
                    if j == 0 {
                        1.0
                    } else {
                        0.0
                    }
                }
            })
            .collect()
    }

    pub fn name(&self) -> &'static str {
        match self {
            WeightPattern::Ave => "ave",
            WeightPattern::Stag => "stag",
            WeightPattern::Asym => "asym",
            WeightPattern::Single => "single",
        }
    }
}

/// Either a named pattern or an explicit weight list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Weights {
    Pattern(WeightPattern),
    Explicit(Vec<f64>),
}

impl Default for Weights {
    fn default() -> Self {
        Weights::Pattern(WeightPattern::Ave)
    }
}

impl Weights {
    pub fn resolve(&self, d: usize) -> Result<Vec<f64>> {
        match self {
            Weights::Pattern(p) => Ok(p.weights(d)),
            Weights::Explicit(v) if v.len() == d => Ok(v.clone()),
            Weights::Explicit(v) => Err(Error::config(
                "weights",
                format!("expected {d} entries, got {}", v.len()),
            )),
        }
    }
}

fn one() -> f64 {
    1.0
}

fn one_u32() -> u32 {
    1
}

/// A network described by its resources; allocation is always optimal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatingPoint {
    pub d: usize,
    #[serde(default)]
    pub weights: Weights,
    /// Total coherent photons, or per node when `coherent_per_node` is set.
    #[serde(default)]
    pub n_c: f64,
    #[serde(default)]
    pub coherent_per_node: bool,
    #[serde(default)]
    pub r: f64,
    /// When set, the squeezing is optimized at this total photon number and
    /// `n_c`, `r` are ignored.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_total: Option<f64>,
    #[serde(default = "one_u32")]
    pub passes: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(default = "one")]
    pub eta_dis: f64,
    #[serde(default = "one")]
    pub eta_mzi: f64,
    #[serde(default = "one")]
    pub eta_m: f64,
}

impl OperatingPoint {
    pub fn new(d: usize, n_c: f64, r: f64) -> Self {
        Self {
            d,
            weights: Weights::default(),
            n_c,
            coherent_per_node: false,
            r,
            n_total: None,
            passes: 1,
            mu: None,
            eta_dis: 1.0,
            eta_mzi: 1.0,
            eta_m: 1.0,
        }
    }

    pub fn loss_model(&self) -> Result<LossModel> {
        LossModel::new(self.eta_dis, self.eta_mzi, self.eta_m, self.passes)
    }

    pub fn enhancement(&self) -> f64 {
        let k = self.passes as f64;
        self.mu.unwrap_or(1.0 / k) * k * k
    }

    pub fn coherent_total(&self) -> f64 {
        if self.coherent_per_node {
            self.n_c * self.d as f64
        } else {
            self.n_c
        }
    }

    /// Optimally allocated network with squeezing `r` and `n_c` coherent photons.
    pub fn network(&self, n_c: f64, r: f64) -> Result<NetworkConfig> {
        let nu = self.weights.resolve(self.d)?;
        let alloc = optimal_allocation(&nu, n_c)?;
        let config = NetworkConfig {
            d: self.d,
            passes: self.passes,
            mu: self.mu,
            r,
            alphas: alloc.alphas,
            thetas: vec![0.0; self.d],
            weights: nu,
            split: alloc.split,
            eta_dis: self.eta_dis,
            eta_mzi: self.eta_mzi,
            eta_m: self.eta_m,
            topology: Topology::Entangled,
            node_squeezing: None,
        };
        config.validate()?;
        Ok(config)
    }
}

/// Scan parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScanAxis {
    #[serde(rename = "n_c")]
    CoherentPhotons,
    #[serde(rename = "eta_dis")]
    EtaDis,
    #[serde(rename = "K", alias = "passes")]
    Passes,
    #[serde(rename = "d", alias = "sensors")]
    Sensors,
    #[serde(rename = "n_T", alias = "n_total")]
    TotalPhotons,
}

impl ScanAxis {
    pub fn name(&self) -> &'static str {
        match self {
            ScanAxis::CoherentPhotons => "n_c",
            ScanAxis::EtaDis => "eta_dis",
            ScanAxis::Passes => "K",
            ScanAxis::Sensors => "d",
            ScanAxis::TotalPhotons => "n_T",
        }
    }

    fn integral(&self) -> bool {
        matches!(self, ScanAxis::Passes | ScanAxis::Sensors)
    }

    /// Copy of `base` with this axis set to `value`.
    pub fn apply(&self, base: &OperatingPoint, value: f64) -> Result<OperatingPoint> {
        if !value.is_finite() {
            return Err(Error::config(self.name(), "grid value must be finite"));
        }
        if self.integral() && (value < 1.0 || value.fract() != 0.0) {
            return Err(Error::config(
                self.name(),
                format!("{value} is not a positive integer"),
            ));
        }
        let mut p = base.clone();
        match self {
            ScanAxis::CoherentPhotons => p.n_c = value,
            ScanAxis::EtaDis => p.eta_dis = value,
            ScanAxis::Passes => p.passes = value as u32,
            ScanAxis::Sensors => p.d = value as usize,
            ScanAxis::TotalPhotons => p.n_total = Some(value),
        }
        Ok(p)
    }
}

/// One evaluated operating point. Optional fields are empty when the point failed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanRow {
    pub axis_value: f64,
    pub variance_numeric: Option<f64>,
    pub variance_closed_form: Option<f64>,
    pub variance_qcrb: Option<f64>,
    pub sql: Option<f64>,
    pub db_below_sql: Option<f64>,
    pub regime: Option<Regime>,
    pub n_s_opt: Option<f64>,
    pub variance_oracle: Option<f64>,
    pub status: String,
}

impl ScanRow {
    fn failed(axis_value: f64, err: &Error) -> Self {
        Self {
            axis_value,
            variance_numeric: None,
            variance_closed_form: None,
            variance_qcrb: None,
            sql: None,
            db_below_sql: None,
            regime: None,
            n_s_opt: None,
            variance_oracle: None,
            status: format!("error: {err}"),
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

/// An operating point turned into a concrete network.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub config: NetworkConfig,
    pub nu: Vec<f64>,
    pub n_c: f64,
    pub r: f64,
    pub n_s_opt: Option<f64>,
    pub closed_form: f64,
    pub lambda: f64,
    pub k: f64,
}

impl OperatingPoint {
    /// Optimal network for this point; with `n_total` set the squeezing is
    /// optimized first.
    pub fn resolve(&self) -> Result<Resolved> {
        let lambda = self.loss_model()?.lambda();
        let k = self.enhancement();
        let nu = self.weights.resolve(self.d)?;
        let (n_c, r, n_s_opt, closed_form) = match self.n_total {
            Some(n_t) => {
                let opt = optimize_squeezing(n_t, lambda, k, &nu)?;
                (n_t - opt.n_s, opt.r, Some(opt.n_s), opt.variance)
            }
            None => {
                let n_c = self.coherent_total();
                let v = laws::optimized_variance(n_c, self.r, lambda, k, &nu)?;
                (n_c, self.r, None, v)
            }
        };
        Ok(Resolved {
            config: self.network(n_c, r)?,
            nu,
            n_c,
            r,
            n_s_opt,
            closed_form,
            lambda,
            k,
        })
    }
}

/// Optional engines of a scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EvalOptions {
    /// Also run the Fock-space oracle on every point.
    pub oracle: bool,
}

/// Evaluates one operating point with the network engine and the closed forms.
pub fn evaluate(point: &OperatingPoint, axis_value: f64, options: &EvalOptions) -> ScanRow {
    evaluate_inner(point, axis_value, options).unwrap_or_else(|e| ScanRow::failed(axis_value, &e))
}

fn evaluate_inner(
    point: &OperatingPoint,
    axis_value: f64,
    options: &EvalOptions,
) -> Result<ScanRow> {
    let res = point.resolve()?;
    let nu = &res.nu;
    let numeric = network::sensitivity_numeric(&res.config, nu)?;
    let n_total = res.n_c + laws::r_to_ns(res.r)?;
    let sql = laws::sql_variance(n_total, nu)?;
    let mut row = ScanRow {
        axis_value,
        variance_numeric: Some(numeric),
        variance_closed_form: Some(res.closed_form),
        variance_qcrb: Some(laws::qcrb(res.n_c, res.r, res.k, nu)?),
        sql: Some(sql),
        db_below_sql: Some(10.0 * (sql / numeric).log10()),
        regime: Some(Regime::classify(n_total, res.lambda)),
        n_s_opt: res.n_s_opt,
        variance_oracle: None,
        status: "ok".into(),
    };
    if options.oracle {
        match fock::oracle_sensitivity(&res.config, nu) {
            Ok(o) => row.variance_oracle = Some(o.variance),
            Err(e) => row.status = format!("oracle error: {e}"),
        }
    }
    Ok(row)
}

/// Worker pool sized by `MZINET_THREADS` when set.
pub fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("MZINET_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| Error::config("MZINET_THREADS", format!("`{v}` is not a thread count")))?;
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| Error::Resource(format!("thread pool: {e}")))
}

/// Evaluates labelled operating points in parallel; rows keep input order.
pub fn evaluate_all(
    points: &[(f64, Result<OperatingPoint>)],
    options: &EvalOptions,
) -> Result<Vec<ScanRow>> {
    let pool = thread_pool()?;
    Ok(pool.install(|| {
        points
            .par_iter()
            .map(|(x, p)| match p {
                Ok(p) => evaluate(p, *x, options),
                Err(e) => ScanRow::failed(*x, e),
            })
            .collect()
    }))
}

/// One row per grid value along `axis`; per-point failures are recorded in the
/// row's status and do not stop the scan.
pub fn scan(axis: ScanAxis, grid: &[f64], base: &OperatingPoint) -> Result<Vec<ScanRow>> {
    scan_with(axis, grid, base, &EvalOptions::default())
}

pub fn scan_with(
    axis: ScanAxis,
    grid: &[f64],
    base: &OperatingPoint,
    options: &EvalOptions,
) -> Result<Vec<ScanRow>> {
    if grid.is_empty() {
        return Err(Error::config("grid", "empty"));
    }
    let points: Vec<_> = grid.iter().map(|&x| (x, axis.apply(base, x))).collect();
    evaluate_all(&points, options)
}

/// First `x` where `y(x)` crosses `level`, by linear interpolation.
pub fn crossover(xs: &[f64], ys: &[f64], level: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| x.is_finite() && y.is_finite())
        .map(|(x, y)| (*x, *y - level))
        .collect();
    pts.windows(2).find_map(|w| {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        if y0 == 0.0 {
            Some(x0)
        } else if y0.signum() != y1.signum() {
            Some(x0 + (x1 - x0) * y0 / (y0 - y1))
        } else {
            None
        }
    })
}

/// Distribution efficiency at which the squeezed network meets the
/// conventional baseline `(Σ|ν|)²/n_T`, found by bisection on `[lo, 1]`.
pub fn sub_sql_threshold(base: &OperatingPoint, lo: f64) -> Result<f64> {
    let excess = |eta: f64| -> Result<f64> {
        let p = ScanAxis::EtaDis.apply(base, eta)?;
        let row = evaluate_inner(&p, eta, &EvalOptions::default())?;
        Ok(row.variance_numeric.unwrap_or(f64::NAN) / row.sql.unwrap_or(f64::NAN) - 1.0)
    };
    let (mut a, mut b) = (lo, 1.0);
    let (fa, fb) = (excess(a)?, excess(b)?);
    if fa.signum() == fb.signum() {
        return Err(Error::Analysis(format!(
            "no baseline crossing on [{lo}, 1]"
        )));
    }
    for _ in 0..100 {
        let m = 0.5 * (a + b);
        if excess(m)?.signum() == fa.signum() {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn allocation_examples() {
        let a = optimal_allocation(&WeightPattern::Ave.weights(6), 60.0).unwrap();
        assert!(a
            .alphas
            .iter()
            .all(|c| rel(c.amplitude.powi(2), 10.0) < 1e-14));
        assert!(a.split.iter().all(|p| rel(*p, 1.0 / 6.0) < 1e-14));

        let a = optimal_allocation(&[0.5, -0.5], 100.0).unwrap();
        assert!(rel(a.alphas[0].amplitude.powi(2), 50.0) < 1e-14);
        assert_eq!(a.alphas[0].phase, 0.0);
        assert_eq!(a.alphas[1].phase, PI);
        assert_eq!(a.split, vec![0.5, 0.5]);

        let a = optimal_allocation(&[1.0, 0.0, 0.0], 100.0).unwrap();
        assert_eq!(a.split, vec![1.0, 0.0, 0.0]);
        assert!(rel(a.alphas[0].amplitude.powi(2), 100.0) < 1e-14);
        assert!(optimal_allocation(&[0.0, 0.0], 1.0).is_err());
    }

    #[test]
    fn squeezing_optimum_lossless() {
        let o = optimize_squeezing(100.0, 0.0, 1.0, &[1.0]).unwrap();
        assert!((o.n_s - 50.0).abs() < 0.5);
        assert!(rel(o.variance, 1e-4) < 0.02);
        let brute = (1..1_000_000)
            .map(|i| {
                let ns = 100.0 * i as f64 / 1e6;
                laws::variance_vs_ns(100.0, ns, 0.0, 1.0, &[1.0]).unwrap()
            })
            .fold(f64::INFINITY, f64::min);
        assert!(o.variance <= brute * (1.0 + 1e-12));
    }

    #[test]
    fn squeezing_optimum_small_n() {
        let lam = 0.136;
        let o = optimize_squeezing(1e-4, lam, 5.0, &[1.0]).unwrap();
        assert!(o.n_s < 1e-7);
        assert!(rel(o.variance, (1.0 + lam) / (5.0 * 1e-4)) < 1e-3);
    }

    #[test]
    fn separable_matches_entangled_at_one_node() {
        let g = entangled_gain(50.0, 0.05, 2.0, &[1.0]).unwrap();
        assert!(rel(g.gain, 1.0) < 1e-9);
    }

    #[test]
    fn gain_in_heisenberg_regime() {
        let nu = WeightPattern::Ave.weights(4);
        let g = entangled_gain(1e5, 1e-9, 1.0, &nu).unwrap();
        assert!(rel(g.gain, 4.0) < 0.02, "{g:?}");
    }

    #[test]
    fn scan_records_errors_in_row() {
        let base = OperatingPoint::new(2, 100.0, 0.5);
        let rows = scan(ScanAxis::EtaDis, &[1.0, 1.5, 0.5], &base).unwrap();
        assert_eq!(rows.len(), 3);
        assert!(rows[0].is_ok() && rows[2].is_ok());
        assert!(!rows[1].is_ok());
        assert_eq!(rows[1].axis_value, 1.5);
        assert!(rows[1].variance_numeric.is_none());
    }

    #[test]
    fn scan_numeric_matches_closed_form() {
        let mut base = OperatingPoint::new(6, 1e4, 0.75);
        base.eta_mzi = 0.9;
        base.passes = 3;
        for row in scan(ScanAxis::CoherentPhotons, &[1e2, 1e4, 1e8], &base).unwrap() {
            assert!(
                rel(
                    row.variance_numeric.unwrap(),
                    row.variance_closed_form.unwrap()
                ) < 1e-9
            );
            assert!(row.variance_numeric.unwrap() >= row.variance_qcrb.unwrap());
        }
    }

    #[test]
    fn sensors_scan_follows_inverse_d() {
        let mut base = OperatingPoint::new(6, 4.5e15, 0.75);
        base.coherent_per_node = true;
        let rows = scan(ScanAxis::Sensors, &[3.0, 5.0, 6.0], &base).unwrap();
        let std: Vec<f64> = rows
            .iter()
            .map(|r| r.variance_numeric.unwrap().sqrt())
            .collect();
        assert!(rel(std[0] / std[2], (6.0f64 / 3.0).sqrt()) < 1e-9);
        assert!(rel(std[1] / std[2], (6.0f64 / 5.0).sqrt()) < 1e-9);
        assert!(scan(ScanAxis::Sensors, &[2.5], &base).unwrap()[0]
            .status
            .starts_with("error"));
    }

    #[test]
    fn crossover_interpolates() {
        let x = [0.0, 1.0, 2.0];
        let y = [3.0, 1.0, -1.0];
        assert_eq!(crossover(&x, &y, 0.0), Some(1.5));
        assert_eq!(crossover(&x, &y, 5.0), None);
    }

    #[test]
    fn weight_patterns() {
        assert_eq!(
            WeightPattern::Asym.weights(6),
            vec![
                1.0 / 6.0,
                1.0 / 6.0,
                1.0 / 6.0,
                -1.0 / 6.0,
                -1.0 / 6.0,
                -1.0 / 6.0
            ]
        );
        assert_eq!(WeightPattern::Stag.weights(2), vec![0.5, -0.5]);
        let w: Weights = serde_json::from_str("\"stag\"").unwrap();
        assert_eq!(w, Weights::Pattern(WeightPattern::Stag));
        let w: Weights = serde_json::from_str("[1, 2]").unwrap();
        assert!(w.resolve(3).is_err());
    }
}
