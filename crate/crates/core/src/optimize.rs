//! Finesse optimization: more absorption wants broad teeth, less dephasing
//! wants narrow ones.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{backward_from_depth, forward_from_depth, memory_from_depth, Direction};
use crate::comb::depth_reduction;
use crate::error::{check_non_negative, check_positive, Error, Result};

pub const F_MIN: f64 = 1.2;
pub const F_MAX: f64 = 100.0;
pub const F_TOL: f64 = 1e-3;
const COARSE_POINTS: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    RamanBackward,
    RamanForward,
    MemoryBackward,
    MemoryForward,
}

impl Objective {
    pub const ALL: [Objective; 4] = [
        Objective::RamanBackward,
        Objective::RamanForward,
        Objective::MemoryBackward,
        Objective::MemoryForward,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Objective::RamanBackward => "raman_backward",
            Objective::RamanForward => "raman_forward",
            Objective::MemoryBackward => "memory_backward",
            Objective::MemoryForward => "memory_forward",
        }
    }

    /// Efficiency at effective depth `d` and finesse `f` (`f = inf` drops dephasing).
    pub fn from_depth(&self, d: f64, f: f64) -> f64 {
        match self {
            Objective::RamanBackward => backward_from_depth(d, f),
            Objective::RamanForward => forward_from_depth(d, f),
            Objective::MemoryBackward => memory_from_depth(d, f, Direction::Backward),
            Objective::MemoryForward => memory_from_depth(d, f, Direction::Forward),
        }
    }

    /// Efficiency at tooth depth `alpha_l` and finesse `f`.
    pub fn evaluate(&self, alpha_l: f64, f: f64) -> f64 {
        self.from_depth(depth_reduction() * alpha_l / f, f)
    }
}

impl std::str::FromStr for Objective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Objective::ALL
            .into_iter()
            .find(|o| o.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown objective `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanMeta {
    pub lower: f64,
    pub upper: f64,
    pub coarse_points: usize,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub objective: Objective,
    #[serde(rename = "alpha_L")]
    pub alpha_l: f64,
    /// Optimal finesse, or `None` for depth optimizations.
    pub f_star: Option<f64>,
    /// Effective depth at the optimum.
    pub depth_star: f64,
    pub eta_star: f64,
    /// True when the maximum sits on a scan bound (objective monotone there).
    pub at_boundary: bool,
    pub scan: ScanMeta,
}

/// Maximizes `f` on `[lo, hi]`: coarse scan on `points` nodes, then golden
/// section inside the bracket around the best node. Returns `(x*, f(x*), on_bound)`.
pub fn maximize<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, points: usize, tol: f64) -> (f64, f64, bool) {
    let points = points.max(3);
    let step = (hi - lo) / (points - 1) as f64;
    let mut best = 0;
    let mut best_val = f64::NEG_INFINITY;
    for i in 0..points {
        let v = f(lo + i as f64 * step);
        if v > best_val {
            best_val = v;
            best = i;
        }
    }
    if best == 0 || best == points - 1 {
        let x = lo + best as f64 * step;
        return (x, best_val, true);
    }
    let (x, v) = golden_section(&f, lo + (best - 1) as f64 * step, lo + (best + 1) as f64 * step, tol);
    if v >= best_val {
        (x, v, false)
    } else {
        (lo + best as f64 * step, best_val, false)
    }
}

fn golden_section<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Best finesse on `[F_MIN, F_MAX]` at fixed tooth depth.
pub fn optimize_finesse(alpha_l: f64, objective: Objective) -> Result<OptimizationResult> {
    optimize_finesse_bounded(alpha_l, objective, F_MIN)
}

/// Best finesse with a lower bound, e.g. from the narrowest tooth a material supports.
pub fn optimize_finesse_bounded(alpha_l: f64, objective: Objective, f_min: f64) -> Result<OptimizationResult> {
    check_positive("alpha_L", alpha_l)?;
    check_positive("f_min", f_min)?;
    let lower = f_min.max(F_MIN);
    if lower >= F_MAX {
        return Err(Error::invalid("f_min", format!("must be below {F_MAX}, got {f_min}")));
    }
    let (f_star, eta, at_boundary) = maximize(|f| objective.evaluate(alpha_l, f), lower, F_MAX, COARSE_POINTS, F_TOL);
    Ok(OptimizationResult {
        objective,
        alpha_l,
        f_star: Some(f_star),
        depth_star: depth_reduction() * alpha_l / f_star,
        eta_star: eta,
        at_boundary,
        scan: ScanMeta {
            lower,
            upper: F_MAX,
            coarse_points: COARSE_POINTS,
            tolerance: F_TOL,
        },
    })
}

/// Best effective depth with dephasing removed (infinite finesse), which
/// exposes the reabsorption limit of forward retrieval.
pub fn optimize_depth(objective: Objective, max_depth: f64) -> Result<OptimizationResult> {
    check_positive("max_depth", max_depth)?;
    let lower = 1e-3;
    let tol = 1e-6;
    let (d, eta, at_boundary) = maximize(|d| objective.from_depth(d, f64::INFINITY), lower, max_depth, COARSE_POINTS, tol);
    Ok(OptimizationResult {
        objective,
        alpha_l: f64::INFINITY,
        f_star: None,
        depth_star: d,
        eta_star: eta,
        at_boundary,
        scan: ScanMeta {
            lower,
            upper: max_depth,
            coarse_points: COARSE_POINTS,
            tolerance: tol,
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    #[serde(rename = "alpha_L")]
    pub alpha_l: f64,
    #[serde(rename = "F_star")]
    pub f_star: f64,
    pub eta_star: f64,
}

/// Optimized efficiency for each depth of a sorted, non-negative grid.
/// A zero depth yields zero efficiency at the lower finesse bound.
pub fn efficiency_curve(objective: Objective, alpha_l_grid: &[f64]) -> Result<Vec<CurveRow>> {
    for &a in alpha_l_grid {
        check_non_negative("alpha_L", a)?;
    }
    if alpha_l_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::invalid("alpha_L", "grid must be sorted ascending"));
    }
    alpha_l_grid
        .par_iter()
        .map(|&a| {
            if a == 0.0 {
                return Ok(CurveRow {
                    alpha_l: 0.0,
                    f_star: F_MIN,
                    eta_star: 0.0,
                });
            }
            let r = optimize_finesse(a, objective)?;
            Ok(CurveRow {
                alpha_l: a,
                f_star: r.f_star.unwrap_or(F_MIN),
                eta_star: r.eta_star,
            })
        })
        .collect()
}

pub fn write_curve_csv<W: std::io::Write>(rows: &[CurveRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["alpha_L", "F_star", "eta_star"])?;
    for r in rows {
        out.write_record([format!("{:?}", r.alpha_l), format!("{:?}", r.f_star), format!("{:?}", r.eta_star)])?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{LN_2, PI};

    fn brute_force(alpha_l: f64, objective: Objective) -> (f64, f64) {
        let n = 10_000;
        (0..n)
            .map(|i| {
                let f = F_MIN + (F_MAX - F_MIN) * i as f64 / (n - 1) as f64;
                (f, objective.evaluate(alpha_l, f))
            })
            .fold((0.0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc })
    }

    #[test]
    fn small_depth_raman() {
        let r = optimize_finesse(0.1, Objective::RamanBackward).unwrap();
        // D -> 0 gives F* = sqrt(pi^2 / ln 2); finite depth shifts it to F^2 = 2a / (1 - D/2)
        let a = PI * PI / (2.0 * LN_2);
        let d = depth_reduction() * 0.1 / 3.8;
        let shifted = (2.0 * a / (1.0 - d / 2.0)).sqrt();
        assert!((r.f_star.unwrap() - shifted).abs() < 5e-3, "{r:?}");
        assert!((r.f_star.unwrap() - 3.77).abs() < 0.04);
        assert!((r.eta_star - 1.7e-2).abs() < 1e-3);
        assert!(!r.at_boundary);
    }

    #[test]
    fn small_depth_memory() {
        let r = optimize_finesse(0.1, Objective::MemoryBackward).unwrap();
        assert!((r.eta_star - 6e-4).abs() < 1e-4, "{r:?}");
    }

    #[test]
    fn large_depth_tends_to_unity() {
        let small = optimize_finesse(10.0, Objective::RamanBackward).unwrap();
        let large = optimize_finesse(1000.0, Objective::RamanBackward).unwrap();
        assert!(large.eta_star > 0.97);
        assert!(large.f_star.unwrap() > small.f_star.unwrap());
    }

    #[test]
    fn matches_brute_force() {
        for a in [0.1, 1.0, 10.0] {
            for obj in Objective::ALL {
                let r = optimize_finesse(a, obj).unwrap();
                let (bf, be) = brute_force(a, obj);
                assert!((r.f_star.unwrap() - bf).abs() < 1e-2, "{obj:?} {a}: {r:?} vs {bf}");
                assert!((r.eta_star - be).abs() < 1e-4);
            }
        }
    }

    #[test]
    fn forward_limits() {
        let raman = optimize_depth(Objective::RamanForward, 20.0).unwrap();
        assert!((raman.eta_star - 0.648).abs() < 1e-3);
        assert!((raman.depth_star - 1.60).abs() < 0.01, "{raman:?}");
        let memory = optimize_depth(Objective::MemoryForward, 20.0).unwrap();
        assert!((memory.eta_star - 4.0 * (-2.0f64).exp()).abs() < 1e-9);
        assert!((memory.depth_star - 2.0).abs() < 1e-3);
    }

    #[test]
    fn boundary_flagged() {
        let r = optimize_finesse_bounded(0.1, Objective::RamanBackward, 50.0).unwrap();
        assert!(r.at_boundary);
        assert_eq!(r.f_star, Some(50.0));
    }

    #[test]
    fn curve_examples() {
        let grid = [0.0, 0.1, 0.3, 1.0, 3.0, 10.0, 30.0];
        let raman = efficiency_curve(Objective::RamanBackward, &grid).unwrap();
        assert_eq!(raman[0].eta_star, 0.0);
        assert!(raman.windows(2).all(|w| w[1].eta_star >= w[0].eta_star));
        let memory = efficiency_curve(Objective::MemoryBackward, &grid).unwrap();
        // at the memory's own optimal finesse the ratio is 1/(1 - e^-D)
        let f = memory[1].f_star;
        let d = depth_reduction() * 0.1 / f;
        let ratio = Objective::RamanBackward.evaluate(0.1, f) / memory[1].eta_star;
        assert!((ratio - 1.0 / (1.0 - (-d).exp())).abs() < 1e-9 * ratio);
        assert!(ratio > 10.0);
        assert!(efficiency_curve(Objective::RamanBackward, &[1.0, 0.5]).is_err());
    }

    #[test]
    fn objective_parsing() {
        assert_eq!("memory_forward".parse::<Objective>().unwrap(), Objective::MemoryForward);
        assert!("nope".parse::<Objective>().is_err());
    }
}
