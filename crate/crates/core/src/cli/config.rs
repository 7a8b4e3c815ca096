use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analytic::{Direction, ProtocolParams};
use crate::comb::CombParams;
use crate::dynamics::GridSpec;
use crate::error::{Error, Result};
use crate::link::LinkParams;
use crate::optimize::Objective;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    #[default]
    Json,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputOptions {
    #[serde(default)]
    pub format: OutputFormat,
    /// Directory for `simulate`, file for `sweep` and `optimize` curves.
    #[serde(default)]
    pub path: Option<PathBuf>,
}

fn backward() -> Direction {
    Direction::Backward
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateOptions {
    #[serde(default = "backward")]
    pub direction: Direction,
    /// Extra detections for a multimode run; the protocol's `t_d` is always included.
    #[serde(default)]
    pub detection_times: Vec<f64>,
}

impl Default for SimulateOptions {
    fn default() -> Self {
        Self {
            direction: Direction::Backward,
            detection_times: Vec::new(),
        }
    }
}

/// A sweep axis: explicit values or `num` evenly spaced points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Axis {
    Values(Vec<f64>),
    Range { start: f64, stop: f64, num: usize },
}

impl Axis {
    pub fn values(&self, name: &'static str) -> Result<Vec<f64>> {
        let v = match self {
            Axis::Values(v) => v.clone(),
            Axis::Range { start, stop, num } => match num {
                0 => Vec::new(),
                1 => vec![*start],
                n => (0..*n)
                    .map(|i| start + (stop - start) * i as f64 / (*n - 1) as f64)
                    .collect(),
            },
        };
        if v.is_empty() {
            return Err(Error::Config(format!("sweep axis `{name}` is empty")));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::Config(format!("sweep axis `{name}` has non-finite values")));
        }
        Ok(v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepOptions {
    #[serde(rename = "alpha_L")]
    pub alpha_l: Axis,
    pub finesse: Axis,
    pub theta0_sq: Axis,
    /// Also run the ensemble oracle at every point.
    #[serde(default)]
    pub dynamics: bool,
}

fn raman_backward() -> Objective {
    Objective::RamanBackward
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizeOptions {
    #[serde(rename = "alpha_L")]
    pub alpha_l: f64,
    #[serde(default = "raman_backward")]
    pub objective: Objective,
    #[serde(default)]
    pub f_min: Option<f64>,
    /// Depth grid for an efficiency curve.
    #[serde(default)]
    pub curve: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkOptions {
    pub params: LinkParams,
    /// Material preset for a full feasibility report.
    #[serde(default)]
    pub preset: Option<String>,
    #[serde(default)]
    pub finesse: Option<f64>,
    #[serde(default)]
    pub heralds_needed: Option<f64>,
    /// Use the comb's predicted Stokes probability as `p`.
    #[serde(default)]
    pub p_from_comb: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub comb: Option<CombParams>,
    #[serde(default)]
    pub protocol: Option<ProtocolParams>,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub simulate: SimulateOptions,
    #[serde(default)]
    pub sweep: Option<SweepOptions>,
    #[serde(default)]
    pub optimize: Option<OptimizeOptions>,
    #[serde(default)]
    pub link: Option<LinkOptions>,
    #[serde(default)]
    pub output: OutputOptions,
}

/// Quick-exploration overrides applied after parsing.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub theta0_sq: Option<f64>,
    pub alpha_l: Option<f64>,
    pub finesse: Option<f64>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(c) = self.comb.as_mut() {
            if let Some(a) = o.alpha_l {
                c.alpha_l = a;
            }
            if let Some(f) = o.finesse {
                c.gamma_fwhm = c.delta0 / f;
            }
        }
        if let (Some(p), Some(t)) = (self.protocol.as_mut(), o.theta0_sq) {
            p.theta0_sq = t;
        }
        if let (Some(opt), Some(a)) = (self.optimize.as_mut(), o.alpha_l) {
            opt.alpha_l = a;
        }
    }

    pub fn comb(&self) -> Result<CombParams> {
        let c = self
            .comb
            .ok_or_else(|| Error::Config("missing key `comb`".to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn protocol(&self) -> Result<ProtocolParams> {
        self.protocol
            .ok_or_else(|| Error::Config("missing key `protocol`".to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_key_is_named() {
        let err = RunConfig::from_json(r#"{"comb": {"gamma_fwhm": 1, "delta0": 5, "big_gamma": 100, "alpha_L": 1, "bogus": 3}}"#)
            .unwrap_err();
        assert!(err.to_string().contains("bogus"), "{err}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn axis_forms() {
        let a: Axis = serde_json::from_str("[1, 2, 3]").unwrap();
        assert_eq!(a.values("x").unwrap(), vec![1.0, 2.0, 3.0]);
        let r: Axis = serde_json::from_str(r#"{"start": 0, "stop": 1, "num": 5}"#).unwrap();
        assert_eq!(r.values("x").unwrap(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        let e: Axis = serde_json::from_str("[]").unwrap();
        assert!(e.values("x").is_err());
    }

    #[test]
    fn overrides() {
        let mut cfg = RunConfig::from_json(
            r#"{"comb": {"gamma_fwhm": 30000, "delta0": 150000, "big_gamma": 2e6, "alpha_L": 10},
                "protocol": {"theta0_sq": 0.1, "t_d": 1e-6, "tau": 1e-5}}"#,
        )
        .unwrap();
        cfg.apply(&Overrides {
            theta0_sq: Some(0.05),
            alpha_l: Some(3.0),
            finesse: Some(10.0),
        });
        let c = cfg.comb().unwrap();
        assert_eq!(c.alpha_l, 3.0);
        assert_eq!(c.gamma_fwhm, 15000.0);
        assert_eq!(cfg.protocol().unwrap().theta0_sq, 0.05);
    }
}
