//! Heralded entanglement between two crystals whose Stokes modes meet on a
//! beamsplitter at a central station.

use serde::{Deserialize, Serialize};

use crate::analytic::{self, EfficiencyReport, ProtocolParams};
use crate::comb::CombParams;
use crate::error::{check_positive, check_unit_interval, Error, Result};

/// Fidelity formula stops being trustworthy above this emission probability.
pub const P_WARN: f64 = 0.2;

const BUILTIN_PRESETS: &str = include_str!("../presets/materials.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceConvention {
    /// Each photon crosses half the separation to the central station.
    #[default]
    HalfDistance,
    /// Loss of the full separation is charged to each photon.
    FullDistance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialPreset {
    pub name: String,
    /// Narrowest practical tooth FWHM (Hz).
    pub gamma_fwhm: f64,
    /// Spectral range usable for the comb (Hz).
    pub big_gamma_span: f64,
    #[serde(rename = "alpha_L")]
    pub alpha_l: f64,
    pub wavelength_nm: f64,
    pub attenuation_db_per_km: f64,
}

impl MaterialPreset {
    pub fn validate(&self) -> Result<()> {
        check_positive("gamma_fwhm", self.gamma_fwhm)?;
        check_positive("big_gamma_span", self.big_gamma_span)?;
        check_positive("alpha_L", self.alpha_l)?;
        check_positive("wavelength_nm", self.wavelength_nm)?;
        check_positive("attenuation_db_per_km", self.attenuation_db_per_km)?;
        Ok(())
    }

    /// Comb at the given finesse with the narrowest teeth; the span doubles
    /// as the envelope width and the usable bandwidth.
    pub fn comb(&self, finesse: f64) -> Result<CombParams> {
        check_positive("finesse", finesse)?;
        let c = CombParams {
            gamma_fwhm: self.gamma_fwhm,
            delta0: finesse * self.gamma_fwhm,
            big_gamma: self.big_gamma_span,
            alpha_l: self.alpha_l,
            usable_span: Some(self.big_gamma_span),
        };
        c.validate()?;
        Ok(c)
    }
}

pub fn builtin_presets() -> Vec<MaterialPreset> {
    parse_presets(BUILTIN_PRESETS).expect("bundled presets parse")
}

pub fn parse_presets(json: &str) -> Result<Vec<MaterialPreset>> {
    let presets: Vec<MaterialPreset> = serde_json::from_str(json)?;
    for p in &presets {
        p.validate()?;
    }
    Ok(presets)
}

pub fn find_preset(name: &str) -> Result<MaterialPreset> {
    builtin_presets()
        .into_iter()
        .find(|p| p.name == name)
        .ok_or_else(|| Error::Config(format!("unknown preset `{name}`")))
}

fn default_distance() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkParams {
    /// Separation between the two crystals (km).
    #[serde(default = "default_distance")]
    pub distance_km: f64,
    pub attenuation_db_per_km: f64,
    /// Fiber coupling efficiency.
    pub eta_c: f64,
    /// Detector efficiency.
    pub eta_d: f64,
    /// Repetition rate (Hz).
    pub rate_hz: f64,
    /// Stokes emission probability per mode.
    pub p: f64,
    #[serde(default)]
    pub convention: DistanceConvention,
}

impl LinkParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.distance_km.is_finite() && self.distance_km >= 0.0) {
            return Err(Error::invalid("distance_km", "must be finite and >= 0"));
        }
        check_positive("attenuation_db_per_km", self.attenuation_db_per_km)?;
        check_unit_interval("eta_c", self.eta_c)?;
        check_unit_interval("eta_d", self.eta_d)?;
        check_positive("rate_hz", self.rate_hz)?;
        if !(self.p > 0.0 && self.p < 1.0) {
            return Err(Error::invalid("p", format!("must lie in (0, 1), got {}", self.p)));
        }
        Ok(())
    }

    pub fn transmission(&self) -> f64 {
        let d = match self.convention {
            DistanceConvention::HalfDistance => self.distance_km,
            DistanceConvention::FullDistance => 2.0 * self.distance_km,
        };
        transmission(d, self.attenuation_db_per_km)
    }
}

/// Fiber transmission from one crystal to the central station, `distance_km`
/// being the crystal separation.
pub fn transmission(distance_km: f64, attenuation_db_per_km: f64) -> f64 {
    10f64.powf(-attenuation_db_per_km * (distance_km / 2.0) / 10.0)
}

/// Mean time to herald entanglement, `1 / (2 r p eta_c eta_t eta_d)`.
pub fn entangle_time(lp: &LinkParams) -> Result<f64> {
    for (name, v) in [
        ("rate_hz", lp.rate_hz),
        ("p", lp.p),
        ("eta_c", lp.eta_c),
        ("eta_d", lp.eta_d),
        ("eta_t", lp.transmission()),
    ] {
        if v <= 0.0 {
            return Err(Error::Unreachable(name));
        }
    }
    Ok(1.0 / (2.0 * lp.rate_hz * lp.p * lp.eta_c * lp.transmission() * lp.eta_d))
}

/// Entanglement fidelity `1 - 3 p (1 - eta_c eta_t eta_d)`.
pub fn fidelity(lp: &LinkParams) -> Result<f64> {
    if lp.p > P_WARN {
        log::warn!("p = {} exceeds {P_WARN}; fidelity estimate is unreliable", lp.p);
    }
    let f = 1.0 - 3.0 * lp.p * (1.0 - lp.eta_c * lp.transmission() * lp.eta_d);
    if !(0.0..=1.0).contains(&f) {
        return Err(Error::Regime(format!(
            "fidelity {f} falls outside [0, 1]; p = {} is far outside the low-emission regime",
            lp.p
        )));
    }
    Ok(f)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkReport {
    pub eta_t: f64,
    #[serde(rename = "T_entangle_s")]
    pub t_entangle_s: f64,
    pub fidelity: f64,
}

pub fn link_report(lp: &LinkParams) -> Result<LinkReport> {
    lp.validate()?;
    Ok(LinkReport {
        eta_t: lp.transmission(),
        t_entangle_s: entangle_time(lp)?,
        fidelity: fidelity(lp)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeasibilityReport {
    pub preset: MaterialPreset,
    pub comb: CombParams,
    pub efficiency: EfficiencyReport,
    pub link: LinkReport,
    /// Emission probability used for the link.
    pub p_link: f64,
    pub heralds_needed: f64,
    pub tomography_time_s: f64,
    pub notes: Vec<String>,
}

pub const DEFAULT_HERALDS: f64 = 1e4;

/// End-to-end budget for a material at a given finesse. With `use_comb_p`
/// the link runs at the Stokes probability predicted for the comb instead
/// of `link.p`.
pub fn feasibility_report(
    preset: &MaterialPreset,
    finesse: f64,
    link: &LinkParams,
    use_comb_p: bool,
    pp: &ProtocolParams,
    heralds_needed: f64,
) -> Result<FeasibilityReport> {
    preset.validate()?;
    check_positive("heralds_needed", heralds_needed)?;
    let comb = preset.comb(finesse)?;
    let efficiency = analytic::full_report(&comb, pp)?;
    let mut lp = *link;
    if use_comb_p {
        lp.p = efficiency.p_stokes;
    }
    let link = link_report(&lp)?;
    Ok(FeasibilityReport {
        preset: preset.clone(),
        comb,
        p_link: lp.p,
        heralds_needed,
        tomography_time_s: heralds_needed * link.t_entangle_s,
        link,
        efficiency,
        notes: vec!["fiber lengths must be actively phase stabilized over the tomography time".to_string()],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    pub(crate) fn reference_link() -> LinkParams {
        LinkParams {
            distance_km: 1.0,
            attenuation_db_per_km: 9.0,
            eta_c: 0.5,
            eta_d: 0.7,
            rate_hz: 1e3,
            p: 0.05,
            convention: DistanceConvention::HalfDistance,
        }
    }

    #[test]
    fn transmission_examples() {
        assert!((transmission(1.0, 9.0) - 0.355).abs() < 1e-3);
        assert_eq!(transmission(0.0, 9.0), 1.0);
        assert!((transmission(2.0, 9.0) - 0.126).abs() < 1e-3);
        assert_relative_eq!(
            transmission(3.0, 9.0),
            transmission(1.0, 9.0) * transmission(2.0, 9.0),
            max_relative = 1e-12
        );
    }

    #[test]
    fn entangle_time_examples() {
        let lp = reference_link();
        let t = entangle_time(&lp).unwrap();
        assert!((t - 0.081).abs() < 1e-3, "{t}");
        let fast = LinkParams { rate_hz: 2e3, ..lp };
        assert_relative_eq!(entangle_time(&fast).unwrap(), t / 2.0, max_relative = 1e-12);
        let ideal = LinkParams {
            distance_km: 0.0,
            eta_c: 1.0,
            eta_d: 1.0,
            rate_hz: 1.0,
            p: 1.0,
            ..lp
        };
        assert_relative_eq!(entangle_time(&ideal).unwrap(), 0.5);
        let dead = LinkParams { eta_d: 0.0, ..lp };
        assert!(matches!(entangle_time(&dead), Err(Error::Unreachable("eta_d"))));
    }

    #[test]
    fn fidelity_examples() {
        let lp = reference_link();
        assert!((fidelity(&lp).unwrap() - 0.869).abs() < 1e-3);
        let lossless = LinkParams {
            distance_km: 0.0,
            eta_c: 1.0,
            eta_d: 1.0,
            ..lp
        };
        assert_eq!(fidelity(&lossless).unwrap(), 1.0);
        let tiny = LinkParams { p: 1e-300, ..lp };
        assert!((fidelity(&tiny).unwrap() - 1.0).abs() < 1e-12);
        let huge = LinkParams { p: 0.9, eta_c: 0.0, ..lp };
        assert!(fidelity(&huge).is_err());
    }

    #[test]
    fn full_distance_convention() {
        let lp = LinkParams {
            convention: DistanceConvention::FullDistance,
            ..reference_link()
        };
        assert!((entangle_time(&lp).unwrap() - 0.23).abs() < 0.01);
    }

    #[test]
    fn presets_roundtrip() {
        let presets = builtin_presets();
        let json = serde_json::to_string(&presets).unwrap();
        assert_eq!(parse_presets(&json).unwrap(), presets);
        assert!(find_preset("pr_yso_606nm").is_ok());
        assert!(find_preset("nope").is_err());
    }

    #[test]
    fn feasibility_composition() {
        let preset = find_preset("pr_yso_606nm").unwrap();
        let pp = ProtocolParams::new(0.1, 1e-6, 10e-6);
        let r = feasibility_report(&preset, 5.0, &reference_link(), false, &pp, DEFAULT_HERALDS).unwrap();
        assert!((r.efficiency.eta_readout - 0.66).abs() < 0.01);
        assert!(r.efficiency.snr_lower_bound.unwrap() > 13.0);
        assert!((r.link.t_entangle_s - 0.08).abs() < 0.005);
        assert!((r.link.fidelity - 0.87).abs() < 0.005);
        assert_eq!(r.efficiency.mode_capacity, 13);
        let derived = feasibility_report(&preset, 5.0, &reference_link(), true, &pp, DEFAULT_HERALDS).unwrap();
        assert_eq!(derived.p_link, derived.efficiency.p_stokes);
    }

    #[test]
    fn lossless_link_time() {
        let lp = LinkParams {
            distance_km: 0.0,
            eta_c: 1.0,
            eta_d: 1.0,
            ..reference_link()
        };
        assert_relative_eq!(entangle_time(&lp).unwrap(), 1.0 / (2.0 * 1e3 * 0.05));
    }
}
