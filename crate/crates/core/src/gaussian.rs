//! Phase-space engine for multimode Gaussian states.
//!
//! Quadratures are ordered `(q_1, p_1, ..., q_n, p_n)` with `q = b + b†` and
//! `p = (b - b†)/i`, so the vacuum covariance is the identity. Every operation
//! mutates the caller-owned state in place and maps the moments exactly:
//! `mean -> M mean`, `cov -> M cov Mᵀ (+ noise)`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Which quadrature a homodyne detector reads out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Quadrature {
    Q,
    P,
}

impl Quadrature {
    fn offset(self) -> usize {
        match self {
            Quadrature::Q => 0,
            Quadrature::P => 1,
        }
    }
}

/// First and second moments of an `n`-mode Gaussian state.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    n_modes: usize,
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

impl GaussianState {
    /// The `n_modes`-mode vacuum: zero mean, identity covariance.
    pub fn vacuum(n_modes: usize) -> Result<Self> {
        if n_modes == 0 {
            return Err(Error::InvalidDimension(
                "a Gaussian state needs at least one mode".into(),
            ));
        }
        Ok(Self {
            n_modes,
            mean: DVector::zeros(2 * n_modes),
            cov: DMatrix::identity(2 * n_modes, 2 * n_modes),
        })
    }

    /// Builds a state from raw moments, checking shapes and symmetry.
    pub fn from_moments(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let dim = mean.len();
        if dim == 0 || dim % 2 != 0 {
            return Err(Error::InvalidDimension(format!(
                "mean vector length {dim} is not a positive even number"
            )));
        }
        if cov.nrows() != dim || cov.ncols() != dim {
            return Err(Error::InvalidDimension(format!(
                "covariance is {}x{}, expected {dim}x{dim}",
                cov.nrows(),
                cov.ncols()
            )));
        }
        if (&cov - cov.transpose()).amax() > 1e-12 {
            return Err(Error::InvalidDimension(
                "covariance is not symmetric".into(),
            ));
        }
        Ok(Self {
            n_modes: dim / 2,
            mean,
            cov,
        })
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.n_modes {
            Err(Error::ModeIndex {
                mode,
                n_modes: self.n_modes,
            })
        } else {
            Ok(())
        }
    }

    fn check_pair(&self, i: usize, j: usize) -> Result<()> {
        self.check_mode(i)?;
        self.check_mode(j)?;
        if i == j {
            return Err(Error::param(
                "mode",
                i as f64,
                "two-mode operation needs distinct modes",
            ));
        }
        Ok(())
    }

    /// Replaces quadrature rows/columns `idx` by `m · x[idx]`.
    fn transform(&mut self, idx: &[usize], m: &DMatrix<f64>) {
        let k = idx.len();
        let old_mean: Vec<f64> = idx.iter().map(|&i| self.mean[i]).collect();
        for (r, &i) in idx.iter().enumerate() {
            self.mean[i] = (0..k).map(|c| m[(r, c)] * old_mean[c]).sum();
        }
        let dim = self.cov.nrows();
        // rows
        let old_rows: Vec<Vec<f64>> = idx
            .iter()
            .map(|&i| (0..dim).map(|c| self.cov[(i, c)]).collect())
            .collect();
        for (r, &i) in idx.iter().enumerate() {
            for col in 0..dim {
                self.cov[(i, col)] = (0..k).map(|c| m[(r, c)] * old_rows[c][col]).sum();
            }
        }
        // columns
        let old_cols: Vec<Vec<f64>> = idx
            .iter()
            .map(|&i| (0..dim).map(|row| self.cov[(row, i)]).collect())
            .collect();
        for (r, &i) in idx.iter().enumerate() {
            for row in 0..dim {
                self.cov[(row, i)] = (0..k).map(|c| m[(r, c)] * old_cols[c][row]).sum();
            }
        }
    }

    /// Real 2x2 mode mixing applied identically to the q and p blocks.
    fn mix_modes(&mut self, i: usize, j: usize, m: [[f64; 2]; 2]) {
        let mat = DMatrix::from_row_slice(2, 2, &[m[0][0], m[0][1], m[1][0], m[1][1]]);
        self.transform(&[2 * i, 2 * j], &mat);
        self.transform(&[2 * i + 1, 2 * j + 1], &mat);
    }

    /// Single-mode squeezer with real parameter: `q -> e^{-r} q`, `p -> e^{r} p`.
    pub fn apply_squeezer(&mut self, mode: usize, r: f64) -> Result<()> {
        self.check_mode(mode)?;
        if !(r >= 0.0) || !r.is_finite() {
            return Err(Error::param(
                "r",
                r,
                "squeezing strength must be finite and >= 0",
            ));
        }
        let m = DMatrix::from_row_slice(2, 2, &[(-r).exp(), 0.0, 0.0, r.exp()]);
        self.transform(&[2 * mode, 2 * mode + 1], &m);
        Ok(())
    }

    /// Coherent displacement by `α = amplitude · e^{iφ}`.
    pub fn apply_displacement(&mut self, mode: usize, amplitude: f64, phase: f64) -> Result<()> {
        self.check_mode(mode)?;
        if !(amplitude >= 0.0) || !amplitude.is_finite() {
            return Err(Error::param(
                "amplitude",
                amplitude,
                "must be finite and >= 0",
            ));
        }
        self.mean[2 * mode] += 2.0 * amplitude * phase.cos();
        self.mean[2 * mode + 1] += 2.0 * amplitude * phase.sin();
        Ok(())
    }

    /// Phase shifter `b -> b e^{-iφ}`.
    pub fn apply_phase_rotation(&mut self, mode: usize, phase: f64) -> Result<()> {
        self.check_mode(mode)?;
        let (s, c) = phase.sin_cos();
        let m = DMatrix::from_row_slice(2, 2, &[c, s, -s, c]);
        self.transform(&[2 * mode, 2 * mode + 1], &m);
        Ok(())
    }

    /// Beam splitter of transmissivity `T`:
    /// `b_i -> √T b_i − √(1−T) b_j`, `b_j -> √(1−T) b_i + √T b_j`.
    ///
    /// Light entering port `i` reaches port `j` with a positive amplitude, so a
    /// cascade driven from one port distributes `+√P_j` to every output.
    pub fn apply_beam_splitter(&mut self, i: usize, j: usize, transmissivity: f64) -> Result<()> {
        self.check_pair(i, j)?;
        if !(0.0..=1.0).contains(&transmissivity) {
            return Err(Error::param(
                "transmissivity",
                transmissivity,
                "must lie in [0, 1]",
            ));
        }
        let t = transmissivity.sqrt();
        let s = (1.0 - transmissivity).sqrt();
        self.mix_modes(i, j, [[t, -s], [s, t]]);
        Ok(())
    }

    /// Mach-Zehnder interferometer with generator `(a†b − b†a)/(2i)`:
    /// `b -> b cos(θ/2) + a sin(θ/2)`, `a -> a cos(θ/2) − b sin(θ/2)`.
    pub fn apply_mzi(&mut self, mode_a: usize, mode_b: usize, theta: f64) -> Result<()> {
        self.check_pair(mode_a, mode_b)?;
        let (s, c) = (0.5 * theta).sin_cos();
        self.mix_modes(mode_a, mode_b, [[c, -s], [s, c]]);
        Ok(())
    }

    /// Pure-loss channel of transmission `eta` (beam splitter with a vacuum ancilla).
    pub fn apply_loss(&mut self, mode: usize, eta: f64) -> Result<()> {
        self.check_mode(mode)?;
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::param("eta", eta, "transmission must lie in [0, 1]"));
        }
        let g = eta.sqrt();
        let m = DMatrix::from_row_slice(2, 2, &[g, 0.0, 0.0, g]);
        self.transform(&[2 * mode, 2 * mode + 1], &m);
        self.cov[(2 * mode, 2 * mode)] += 1.0 - eta;
        self.cov[(2 * mode + 1, 2 * mode + 1)] += 1.0 - eta;
        Ok(())
    }

    /// Restriction of the moments to the selected homodyne quadratures.
    pub fn homodyne_moments(
        &self,
        selection: &[(usize, Quadrature)],
    ) -> Result<(DVector<f64>, DMatrix<f64>)> {
        let mut seen = vec![false; self.n_modes];
        for &(mode, _) in selection {
            self.check_mode(mode)?;
            if std::mem::replace(&mut seen[mode], true) {
                return Err(Error::DuplicateMode(mode));
            }
        }
        let idx: Vec<usize> = selection
            .iter()
            .map(|&(mode, quad)| 2 * mode + quad.offset())
            .collect();
        let mean = DVector::from_iterator(idx.len(), idx.iter().map(|&i| self.mean[i]));
        let cov = DMatrix::from_fn(idx.len(), idx.len(), |r, c| self.cov[(idx[r], idx[c])]);
        Ok((mean, cov))
    }

    /// `⟨b†b⟩ = (⟨q⟩² + ⟨p⟩² + V_qq + V_pp − 2)/4`.
    pub fn mean_photon_number(&self, mode: usize) -> Result<f64> {
        self.check_mode(mode)?;
        let (q, p) = (2 * mode, 2 * mode + 1);
        Ok(
            (self.mean[q].powi(2) + self.mean[p].powi(2) + self.cov[(q, q)] + self.cov[(p, p)]
                - 2.0)
                / 4.0,
        )
    }

    pub fn total_photon_number(&self) -> f64 {
        (0..self.n_modes)
            .map(|m| self.mean_photon_number(m).unwrap_or(0.0))
            .sum()
    }

    /// Smallest eigenvalue of `cov + iΩ`; non-negative for physical states.
    pub fn uncertainty_margin(&self) -> f64 {
        let dim = 2 * self.n_modes;
        let h = DMatrix::<Complex64>::from_fn(dim, dim, |r, c| {
            let omega = if r / 2 == c / 2 {
                match (r % 2, c % 2) {
                    (0, 1) => 1.0,
                    (1, 0) => -1.0,
                    _ => 0.0,
                }
            } else {
                0.0
            };
            Complex64::new(self.cov[(r, c)], omega)
        });
        h.symmetric_eigenvalues().min()
    }
}
