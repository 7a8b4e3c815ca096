//! Atomic frequency comb: a Gaussian envelope of width `big_gamma` filled
//! with Gaussian teeth of FWHM `gamma_fwhm` spaced by `delta0`.
//!
//! Frequencies enter in Hz through [`CombParams`] and are converted to
//! angular frequencies once, when a [`Comb`] is built. Everything past that
//! point works in rad/s and seconds.
//!
//! The optical depth `alpha_L` is the peak depth of the central tooth. The
//! envelope equals one at zero detuning, so off-centre teeth are shallower
//! by the envelope factor.

use std::f64::consts::{LN_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_non_negative, check_positive, Error, Result};

/// FWHM to standard deviation for a Gaussian, `sqrt(8 ln 2)`.
pub fn fwhm_per_sigma() -> f64 {
    (8.0 * LN_2).sqrt()
}

/// Ratio between the comb-averaged and the peak absorption at unit finesse,
/// `sqrt(pi / (4 ln 2))`.
pub fn depth_reduction() -> f64 {
    (PI / (4.0 * LN_2)).sqrt()
}

/// Comb geometry as configured, in Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CombParams {
    /// FWHM of a single tooth (Hz).
    pub gamma_fwhm: f64,
    /// Tooth separation (Hz).
    pub delta0: f64,
    /// Standard deviation of the Gaussian envelope (Hz).
    pub big_gamma: f64,
    /// Peak optical depth of the central tooth.
    #[serde(rename = "alpha_L")]
    pub alpha_l: f64,
    /// Usable bandwidth for multimode storage (Hz). Defaults to `big_gamma`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub usable_span: Option<f64>,
}

impl CombParams {
    pub fn new(gamma_fwhm: f64, delta0: f64, big_gamma: f64, alpha_l: f64) -> Self {
        Self {
            gamma_fwhm,
            delta0,
            big_gamma,
            alpha_l,
            usable_span: None,
        }
    }

    /// Comb with a given finesse: the tooth width follows from `delta0 / finesse`.
    pub fn with_finesse(finesse: f64, delta0: f64, big_gamma: f64, alpha_l: f64) -> Self {
        Self::new(delta0 / finesse, delta0, big_gamma, alpha_l)
    }

    pub fn validate(&self) -> Result<()> {
        check_positive("gamma_fwhm", self.gamma_fwhm)?;
        check_positive("delta0", self.delta0)?;
        check_positive("big_gamma", self.big_gamma)?;
        check_non_negative("alpha_L", self.alpha_l)?;
        if let Some(span) = self.usable_span {
            check_positive("usable_span", span)?;
        }
        Ok(())
    }

    pub fn build(&self) -> Result<Comb> {
        Comb::new(*self)
    }
}

/// Gates for the `big_gamma >> delta0 >> gamma` regime.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegimeThresholds {
    /// Minimum `big_gamma / delta0`.
    pub r1: f64,
    /// Minimum `delta0 / gamma_fwhm`.
    pub r2: f64,
}

impl Default for RegimeThresholds {
    fn default() -> Self {
        Self { r1: 10.0, r2: 2.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RegimeWarning {
    NarrowEnvelope { ratio: f64, required: f64 },
    LowFinesse { finesse: f64, required: f64 },
    StrongWritePulse { theta0_sq: f64, threshold: f64 },
}

impl std::fmt::Display for RegimeWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RegimeWarning::NarrowEnvelope { ratio, required } => write!(
                f,
                "big_gamma/delta0 = {ratio:.3} is below {required}; comb is not well resolved"
            ),
            RegimeWarning::LowFinesse { finesse, required } => {
                write!(f, "finesse {finesse:.3} is below {required}; teeth overlap")
            }
            RegimeWarning::StrongWritePulse {
                theta0_sq,
                threshold,
            } => write!(
                f,
                "theta0_sq = {theta0_sq} exceeds {threshold}; first-order emission estimate degrades"
            ),
        }
    }
}

/// Validated comb in angular units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Comb {
    params: CombParams,
    /// Tooth standard deviation, rad/s.
    tooth_sigma: f64,
    /// Tooth spacing, rad/s.
    spacing: f64,
    /// Envelope standard deviation, rad/s.
    envelope_sigma: f64,
    truncation_k: f64,
}

impl Comb {
    pub const DEFAULT_TRUNCATION_K: f64 = 6.0;

    pub fn new(params: CombParams) -> Result<Self> {
        params.validate()?;
        let to_angular = 2.0 * PI;
        Ok(Self {
            params,
            tooth_sigma: to_angular * params.gamma_fwhm / fwhm_per_sigma(),
            spacing: to_angular * params.delta0,
            envelope_sigma: to_angular * params.big_gamma,
            truncation_k: Self::DEFAULT_TRUNCATION_K,
        })
    }

    /// Sets the number of envelope deviations `K` kept in the tooth sum.
    pub fn with_truncation(mut self, k: f64) -> Result<Self> {
        check_positive("truncation_k", k)?;
        self.truncation_k = k;
        Ok(self)
    }

    pub fn params(&self) -> &CombParams {
        &self.params
    }

    pub fn tooth_sigma(&self) -> f64 {
        self.tooth_sigma
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn envelope_sigma(&self) -> f64 {
        self.envelope_sigma
    }

    pub fn alpha_l(&self) -> f64 {
        self.params.alpha_l
    }

    /// First rephasing time `2 pi / delta0` (s).
    pub fn revival_time(&self) -> f64 {
        2.0 * PI / self.spacing
    }

    /// Temporal mode duration `sqrt(2 pi) / big_gamma` (s).
    pub fn mode_duration(&self) -> f64 {
        (2.0 * PI).sqrt() / self.envelope_sigma
    }

    /// Largest tooth index kept, `ceil(K * big_gamma / delta0)`.
    pub fn max_tooth(&self) -> i64 {
        (self.truncation_k * self.envelope_sigma / self.spacing).ceil() as i64
    }

    pub fn finesse(&self) -> f64 {
        finesse(&self.params)
    }

    pub fn effective_depth(&self) -> f64 {
        effective_depth(&self.params)
    }

    pub fn well_resolved(&self, th: &RegimeThresholds) -> bool {
        self.regime_warnings(th).is_empty()
    }

    pub fn regime_warnings(&self, th: &RegimeThresholds) -> Vec<RegimeWarning> {
        let mut out = Vec::new();
        let ratio = self.params.big_gamma / self.params.delta0;
        if ratio < th.r1 {
            out.push(RegimeWarning::NarrowEnvelope {
                ratio,
                required: th.r1,
            });
        }
        let f = self.finesse();
        if f < th.r2 {
            out.push(RegimeWarning::LowFinesse {
                finesse: f,
                required: th.r2,
            });
        }
        out
    }

    fn prefactor(&self) -> f64 {
        self.spacing / (2.0 * PI * self.tooth_sigma * self.envelope_sigma)
    }

    /// Spectral density at angular detuning `delta` (rad/s), normalized so
    /// that it integrates to one over `d delta`.
    pub fn density_angular(&self, delta: f64) -> f64 {
        let jmax = self.max_tooth();
        // teeth further than 10 sigma contribute below 1e-21 relative
        let reach = (10.0 * self.tooth_sigma / self.spacing).ceil() as i64 + 1;
        let centre = (-delta / self.spacing).round() as i64;
        let lo = (centre - reach).max(-jmax);
        let hi = (centre + reach).min(jmax);
        let two_var = 2.0 * self.tooth_sigma * self.tooth_sigma;
        let mut teeth = 0.0;
        for j in lo..=hi {
            let x = delta + j as f64 * self.spacing;
            teeth += (-x * x / two_var).exp();
        }
        let env = (-delta * delta / (2.0 * self.envelope_sigma * self.envelope_sigma)).exp();
        self.prefactor() * env * teeth
    }

    /// Spectral density per Hz at detuning `delta_hz`.
    pub fn density(&self, delta_hz: f64) -> f64 {
        2.0 * PI * self.density_angular(2.0 * PI * delta_hz)
    }

    /// Absorption depth at angular detuning `delta`, peak of the central
    /// tooth being `alpha_L`.
    pub fn absorption_depth(&self, delta: f64) -> f64 {
        self.effective_depth() * (2.0 * PI).sqrt() * self.envelope_sigma * self.density_angular(delta)
    }

    /// Fourier transform of the density at time `t` (s), closed form.
    ///
    /// The tooth train transforms into a train of revivals of width
    /// `1/big_gamma` at multiples of `2 pi / delta0`, weighted by the tooth
    /// envelope `exp(-tooth_sigma^2 t_k^2 / 2)`:
    ///
    /// `sum_k exp(-s^2 t_k^2 / 2) exp(-G^2 (t - t_k)^2 / 2)`, `t_k = 2 pi k / delta0`.
    pub fn fourier(&self, t: f64) -> Complex64 {
        let period = self.revival_time();
        let g = self.envelope_sigma;
        let s = self.tooth_sigma;
        let reach = (9.0 / (g * period)).ceil() as i64 + 1;
        let centre = (t / period).round() as i64;
        let mut acc = 0.0;
        for k in (centre - reach)..=(centre + reach) {
            let tk = k as f64 * period;
            let dt = t - tk;
            acc += (-0.5 * s * s * tk * tk - 0.5 * g * g * dt * dt).exp();
        }
        Complex64::new(acc, 0.0)
    }

    /// Fixed-grid quadrature over the truncated comb support.
    pub fn quadrature(&self, samples_per_fwhm: f64) -> SpectralQuadrature {
        SpectralQuadrature::new(self, samples_per_fwhm)
    }
}

/// Composite Simpson rule over `[-K G - 8 s, K G + 8 s]` holding the
/// sampled density, for quadrature-based checks of the closed forms.
#[derive(Debug, Clone)]
pub struct SpectralQuadrature {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl SpectralQuadrature {
    pub const DEFAULT_SAMPLES_PER_FWHM: f64 = 40.0;

    fn new(comb: &Comb, samples_per_fwhm: f64) -> Self {
        let fwhm = comb.tooth_sigma * fwhm_per_sigma();
        let half = comb.truncation_k * comb.envelope_sigma + 8.0 * comb.tooth_sigma;
        let mut n = ((2.0 * half) / (fwhm / samples_per_fwhm.max(1.0))).ceil() as usize;
        if n % 2 == 1 {
            n += 1;
        }
        let n = n.max(2);
        let h = 2.0 * half / n as f64;
        let mut nodes = Vec::with_capacity(n + 1);
        let mut weights = Vec::with_capacity(n + 1);
        for i in 0..=n {
            let x = -half + i as f64 * h;
            let simpson = if i == 0 || i == n {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            nodes.push(x);
            weights.push(simpson * h / 3.0 * comb.density_angular(x));
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Integral of the density, ideally one.
    pub fn normalization(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn fourier(&self, t: f64) -> Complex64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| Complex64::from_polar(w, -x * t))
            .sum()
    }
}

/// Comb finesse `delta0 / gamma_fwhm`.
pub fn finesse(c: &CombParams) -> f64 {
    c.delta0 / c.gamma_fwhm
}

/// Comb-averaged optical depth `sqrt(pi/(4 ln 2)) alpha_L / F`.
pub fn effective_depth(c: &CombParams) -> f64 {
    depth_reduction() * c.alpha_l / finesse(c)
}

/// Dephasing penalty at the first revival, `exp(-pi^2 / (2 ln 2 F^2))`.
pub fn dephasing_factor(finesse: f64) -> f64 {
    (-PI * PI / (2.0 * LN_2 * finesse * finesse)).exp()
}

impl TryFrom<CombParams> for Comb {
    type Error = Error;

    fn try_from(p: CombParams) -> Result<Self> {
        Comb::new(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn comb(f: f64, ratio: f64, alpha_l: f64) -> Comb {
        let delta0 = 150e3;
        CombParams::with_finesse(f, delta0, ratio * delta0, alpha_l)
            .build()
            .unwrap()
    }

    #[test]
    fn finesse_examples() {
        assert_relative_eq!(finesse(&CombParams::new(30e3, 150e3, 2e6, 10.0)), 5.0);
        assert_relative_eq!(finesse(&CombParams::new(7.0, 7.0, 2e6, 10.0)), 1.0);
        let f = finesse(&CombParams::new(30e3, 113.2e3, 2e6, 0.1));
        assert!((f - 3.773).abs() < 1e-3, "{f}");
    }

    #[test]
    fn effective_depth_examples() {
        let c = CombParams::new(30e3, 150e3, 2e6, 10.0);
        assert!((effective_depth(&c) - 2.129).abs() < 5e-4);
        assert_eq!(effective_depth(&CombParams::new(30e3, 150e3, 2e6, 0.0)), 0.0);
        let f = depth_reduction();
        let c = CombParams::with_finesse(f, 150e3, 2e6, 10.0);
        assert_relative_eq!(effective_depth(&c), 10.0, max_relative = 1e-14);
    }

    #[test]
    fn effective_depth_matches_period_average() {
        // independent route: average the tooth train over one period
        let c = CombParams::new(30e3, 150e3, 2e6, 10.0);
        let sigma = c.gamma_fwhm / fwhm_per_sigma();
        let n = 20_000;
        let h = c.delta0 / n as f64;
        let mut acc = 0.0;
        for i in 0..n {
            let x = -c.delta0 / 2.0 + (i as f64 + 0.5) * h;
            let teeth: f64 = (-50..=50)
                .map(|j| {
                    let y = x + j as f64 * c.delta0;
                    (-y * y / (2.0 * sigma * sigma)).exp()
                })
                .sum();
            acc += c.alpha_l * teeth * h;
        }
        assert_relative_eq!(acc / c.delta0, effective_depth(&c), max_relative = 1e-9);
    }

    #[test]
    fn rejects_bad_params() {
        assert!(CombParams::new(0.0, 1.0, 1.0, 1.0).build().is_err());
        assert!(CombParams::new(1.0, -1.0, 1.0, 1.0).build().is_err());
        assert!(CombParams::new(1.0, 1.0, f64::NAN, 1.0).build().is_err());
        assert!(CombParams::new(1.0, 1.0, 1.0, -0.1).build().is_err());
    }

    #[test]
    fn regime_flags() {
        let th = RegimeThresholds::default();
        assert!(comb(5.0, 20.0, 1.0).well_resolved(&th));
        let w = comb(5.0, 5.0, 1.0).regime_warnings(&th);
        assert!(matches!(w[..], [RegimeWarning::NarrowEnvelope { .. }]));
        let w = comb(1.5, 20.0, 1.0).regime_warnings(&th);
        assert!(matches!(w[..], [RegimeWarning::LowFinesse { .. }]));
    }

    #[test]
    fn density_peaks_at_zero() {
        let c = comb(5.0, 20.0, 1.0);
        let peak = c.density_angular(0.0);
        for i in 1..2000 {
            let d = (i as f64 - 1000.0) * c.spacing() * 0.0137;
            assert!(c.density_angular(d) <= peak);
        }
    }

    #[test]
    fn normalization_by_quadrature() {
        let c = comb(10.0, 20.0, 1.0);
        let q = c.quadrature(SpectralQuadrature::DEFAULT_SAMPLES_PER_FWHM);
        assert!((q.normalization() - 1.0).abs() < 1e-4);
    }

    #[test]
    fn midpoint_suppression() {
        // the two neighbouring teeth both sit half a period away
        let f = 10.0;
        let c = comb(f, 20.0, 1.0);
        let ratio = c.density_angular(c.spacing() / 2.0) / c.density_angular(0.0);
        let expected = 2.0 * (-f * f * LN_2).exp() * (-1.0_f64 / (8.0 * 400.0)).exp();
        assert_relative_eq!(ratio, expected, max_relative = 1e-6);
    }

    #[test]
    fn fourier_examples() {
        let c = comb(5.0, 20.0, 1.0);
        assert_relative_eq!(c.fourier(0.0).re, 1.0, max_relative = 1e-12);
        let revival = c.fourier(c.revival_time()).norm_sqr();
        assert_relative_eq!(revival, dephasing_factor(5.0), max_relative = 1e-9);
        assert!(c.fourier(c.revival_time() / 2.0).norm() < 1e-6 * revival);
    }

    #[test]
    fn closed_form_matches_quadrature() {
        for f in [3.0, 5.0, 10.0] {
            let c = comb(f, 20.0, 1.0);
            let q = c.quadrature(SpectralQuadrature::DEFAULT_SAMPLES_PER_FWHM);
            let t_end = 2.0 * c.revival_time();
            for i in 0..=200 {
                let t = t_end * i as f64 / 200.0;
                let d = (c.fourier(t) - q.fourier(t)).norm();
                assert!(d < 1e-3, "F={f} t={t} diff={d}");
            }
        }
    }

    #[test]
    fn absorption_at_centre_is_alpha_l() {
        let c = comb(5.0, 20.0, 10.0);
        // neighbouring teeth add exp(-F^2 4 ln 2) ~ 1e-30
        assert_relative_eq!(c.absorption_depth(0.0), 10.0, max_relative = 1e-9);
    }
}
