//! Closed-form predictions for the comb-shaped Raman source.
//!
//! Every function here is a direct formula in the effective depth
//! `D = sqrt(pi/(4 ln 2)) alpha_L / F` and the dephasing factor
//! `exp(-pi^2/(2 ln 2 F^2))`. None of them clamp: a value outside [0, 1]
//! for valid inputs would be a bug.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::comb::{dephasing_factor, effective_depth, finesse, CombParams, RegimeThresholds, RegimeWarning};
use crate::error::{check_non_negative, check_positive, Error, Result};

/// Upper bound on `theta0_sq`; the first-order model is meaningless beyond.
pub const THETA0_SQ_MAX: f64 = 0.3;
/// Above this the first-order emission estimate is off by more than ~5%.
pub const THETA0_SQ_WARN: f64 = 0.1;

fn default_read_area() -> f64 {
    PI
}

fn default_branching() -> f64 {
    1.0
}

/// Pulse areas and timing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolParams {
    /// Squared write-pulse area at the crystal entrance.
    pub theta0_sq: f64,
    /// Stokes detection time after the write pulse (s).
    pub t_d: f64,
    /// Delay between detection and read pulse (s).
    pub tau: f64,
    /// Read pulse area; only a perfect pi pulse is modelled.
    #[serde(default = "default_read_area")]
    pub read_area: f64,
    /// Fraction of excited atoms decaying towards `s`.
    #[serde(default = "default_branching")]
    pub branching_ratio: f64,
}

impl ProtocolParams {
    pub fn new(theta0_sq: f64, t_d: f64, tau: f64) -> Self {
        Self {
            theta0_sq,
            t_d,
            tau,
            read_area: PI,
            branching_ratio: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_non_negative("theta0_sq", self.theta0_sq)?;
        if self.theta0_sq > THETA0_SQ_MAX {
            return Err(Error::Regime(format!(
                "theta0_sq = {} exceeds the perturbative limit {THETA0_SQ_MAX}",
                self.theta0_sq
            )));
        }
        check_non_negative("t_d", self.t_d)?;
        check_non_negative("tau", self.tau)?;
        if (self.read_area - PI).abs() > 1e-6 {
            return Err(Error::invalid(
                "read_area",
                format!("only a pi read pulse is modelled, got {}", self.read_area),
            ));
        }
        if !(self.branching_ratio > 0.0 && self.branching_ratio <= 1.0) {
            return Err(Error::invalid(
                "branching_ratio",
                format!("must lie in (0, 1], got {}", self.branching_ratio),
            ));
        }
        Ok(())
    }

    /// Checks the protocol against a comb: detection must precede the
    /// first revival, otherwise the echo would come before the read pulse.
    pub fn validate_for(&self, comb: &CombParams) -> Result<()> {
        self.validate()?;
        let revival = 1.0 / comb.delta0;
        if self.t_d >= revival {
            return Err(Error::Regime(format!(
                "t_d = {:.6e} s must be < 2pi/delta0 = {:.6e} s",
                self.t_d, revival
            )));
        }
        Ok(())
    }

    pub fn warnings(&self) -> Vec<RegimeWarning> {
        if self.theta0_sq > THETA0_SQ_WARN {
            vec![RegimeWarning::StrongWritePulse {
                theta0_sq: self.theta0_sq,
                threshold: THETA0_SQ_WARN,
            }]
        } else {
            Vec::new()
        }
    }
}

/// Direction of anti-Stokes retrieval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Forward,
    Backward,
}

/// Mean Stokes photons per temporal mode of duration `sqrt(2 pi)/big_gamma`,
/// i.e. the heralding probability `p`.
pub fn stokes_photons_per_mode(c: &CombParams, p: &ProtocolParams) -> f64 {
    let d = effective_depth(c);
    p.branching_ratio * p.theta0_sq * (-(-d).exp_m1())
}

/// Mean Stokes photons over the whole storage window `2 pi / delta0`.
pub fn photons_per_write_attempt(c: &CombParams, p: &ProtocolParams) -> f64 {
    (2.0 * PI).sqrt() * c.big_gamma / c.delta0 * stokes_photons_per_mode(c, p)
}

/// Photons per mode with the whole ensemble inverted, `exp(D) - 1`.
pub fn saturated_gain_photons(c: &CombParams) -> f64 {
    effective_depth(c).exp_m1()
}

/// Backward retrieval efficiency: `(1 - e^-D) * dephasing(F)`.
pub fn readout_efficiency_backward(c: &CombParams) -> f64 {
    backward_from_depth(effective_depth(c), finesse(c))
}

/// Forward retrieval efficiency, limited by reabsorption:
/// `D^2 e^-D / (1 - e^-D) * dephasing(F)`.
pub fn readout_efficiency_forward(c: &CombParams) -> f64 {
    forward_from_depth(effective_depth(c), finesse(c))
}

pub(crate) fn backward_from_depth(d: f64, f: f64) -> f64 {
    -(-d).exp_m1() * dephasing_factor(f)
}

pub(crate) fn forward_from_depth(d: f64, f: f64) -> f64 {
    if d == 0.0 {
        return 0.0;
    }
    d * d * (-d).exp() / -(-d).exp_m1() * dephasing_factor(f)
}

pub(crate) fn memory_from_depth(d: f64, f: f64, direction: Direction) -> f64 {
    let absorbed = -(-d).exp_m1();
    match direction {
        Direction::Backward => absorbed * absorbed * dephasing_factor(f),
        Direction::Forward => d * d * (-d).exp() * dephasing_factor(f),
    }
}

/// Efficiency of a comb quantum memory on the same comb; the input photon
/// has to be absorbed first.
pub fn afc_memory_efficiency(c: &CombParams, direction: Direction) -> f64 {
    memory_from_depth(effective_depth(c), finesse(c), direction)
}

/// Worst-case spontaneous noise in the anti-Stokes mode,
/// `(theta0^2/2)(1 - e^-2D)`.
pub fn noise_per_mode(c: &CombParams, p: &ProtocolParams) -> f64 {
    let d = effective_depth(c);
    p.branching_ratio * 0.5 * p.theta0_sq * (-(-2.0 * d).exp_m1())
}

/// Lower bound on the anti-Stokes signal-to-noise ratio at finite depth.
/// Equals `readout_efficiency_backward / noise_per_mode`.
pub fn snr_bound(c: &CombParams, p: &ProtocolParams) -> Result<f64> {
    let noise = noise_per_mode(c, p);
    if noise == 0.0 {
        return Err(Error::invalid(
            "theta0_sq",
            "signal-to-noise bound is undefined without noise (theta0_sq = 0 or alpha_L = 0)",
        ));
    }
    Ok(readout_efficiency_backward(c) / noise)
}

/// Large-depth, optimized-finesse limit `2 / theta0^2`.
pub fn snr_asymptotic(p: &ProtocolParams) -> Result<f64> {
    check_positive("theta0_sq", p.theta0_sq)?;
    Ok(2.0 / p.theta0_sq)
}

/// Usable bandwidth for temporal multiplexing (Hz).
pub fn usable_span(c: &CombParams) -> f64 {
    c.usable_span.unwrap_or(c.big_gamma)
}

/// Number of temporally multiplexed spin waves, roughly the number of teeth
/// in the usable bandwidth.
pub fn mode_capacity(c: &CombParams) -> u64 {
    let ratio = usable_span(c) / c.delta0;
    // absorb rounding when the span is an exact multiple of the spacing
    (ratio * (1.0 + 4.0 * f64::EPSILON)).floor() as u64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EfficiencyReport {
    pub finesse: f64,
    pub effective_depth: f64,
    pub p_stokes: f64,
    pub photons_per_write_attempt: f64,
    pub eta_readout: f64,
    pub eta_readout_forward: f64,
    pub eta_memory_backward: f64,
    pub eta_memory_forward: f64,
    pub noise_per_mode: f64,
    /// `None` when there is no write pulse.
    pub snr_lower_bound: Option<f64>,
    pub snr_asymptotic: Option<f64>,
    /// First revival after the write pulse, `2 pi / delta0` (s).
    pub echo_time: f64,
    pub mode_capacity: u64,
    pub warnings: Vec<String>,
}

pub fn full_report(c: &CombParams, p: &ProtocolParams) -> Result<EfficiencyReport> {
    c.validate()?;
    p.validate_for(c)?;
    let comb = c.build()?;
    let mut warnings: Vec<String> = comb
        .regime_warnings(&RegimeThresholds::default())
        .iter()
        .chain(p.warnings().iter())
        .map(ToString::to_string)
        .collect();
    warnings.dedup();
    let snr = if p.theta0_sq > 0.0 && c.alpha_l > 0.0 {
        Some(snr_bound(c, p)?)
    } else {
        None
    };
    let snr_asym = if p.theta0_sq > 0.0 {
        Some(snr_asymptotic(p)?)
    } else {
        None
    };
    Ok(EfficiencyReport {
        finesse: finesse(c),
        effective_depth: effective_depth(c),
        p_stokes: stokes_photons_per_mode(c, p),
        photons_per_write_attempt: photons_per_write_attempt(c, p),
        eta_readout: readout_efficiency_backward(c),
        eta_readout_forward: readout_efficiency_forward(c),
        eta_memory_backward: afc_memory_efficiency(c, Direction::Backward),
        eta_memory_forward: afc_memory_efficiency(c, Direction::Forward),
        noise_per_mode: noise_per_mode(c, p),
        snr_lower_bound: snr,
        snr_asymptotic: snr_asym,
        echo_time: comb.revival_time(),
        mode_capacity: mode_capacity(c),
        warnings,
    })
}
