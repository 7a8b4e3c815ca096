//! Discretized ensemble oracle for the write, herald, read and noise steps.
//!
//! The crystal is cut into `n_z` slices and the comb into detuning classes
//! with weights taken from the spectral density, so that every cell
//! `(z, delta)` stands for a fraction `w_z * w_delta` of the atoms. Field
//! retardation is neglected and the populations are replaced by their mean
//! values, so propagation reduces to gain/attenuation factors along `z` and
//! free evolution to a phase `exp(-i delta t)` per class. The field observables
//! are then sums over cells: incoherent (sum of intensities) for spontaneous
//! Stokes emission and noise, coherent (sum of amplitudes) for the collective
//! anti-Stokes readout.
//!
//! Photon numbers are reported per temporal mode of duration
//! `sqrt(2 pi)/big_gamma`; the coupling enters only through the effective
//! depth `D`.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, weighted::WeightedIndex};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{Direction, ProtocolParams};
use crate::comb::{Comb, CombParams};
use crate::error::{check_positive, Error, Result};

/// Minimum detuning classes per tooth FWHM accepted without `force`.
pub const MIN_CLASSES_PER_FWHM: f64 = 8.0;

/// How detuning classes are drawn from the comb.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Sampling {
    /// Uniform lattice commensurate with the tooth spacing, weights from the density.
    Deterministic,
    /// Seeded draws from the density with equal weights.
    MonteCarlo { seed: u64, samples: usize },
}

fn default_n_z() -> usize {
    128
}
fn default_cpf() -> f64 {
    MIN_CLASSES_PER_FWHM
}
fn default_window() -> f64 {
    6.0
}
fn default_k() -> f64 {
    Comb::DEFAULT_TRUNCATION_K
}
fn default_steps() -> f64 {
    20.0
}
fn default_sampling() -> Sampling {
    Sampling::Deterministic
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    /// Spatial slices over the crystal.
    #[serde(default = "default_n_z")]
    pub n_z: usize,
    /// Detuning lattice points per tooth FWHM.
    #[serde(default = "default_cpf")]
    pub classes_per_fwhm: f64,
    /// Half width kept around each tooth, in tooth standard deviations.
    #[serde(default = "default_window")]
    pub tooth_window: f64,
    /// Envelope deviations kept in the tooth sum.
    #[serde(default = "default_k")]
    pub truncation_k: f64,
    /// Time samples per `1/big_gamma`.
    #[serde(default = "default_steps")]
    pub steps_per_mode: f64,
    /// Accept grids below [`MIN_CLASSES_PER_FWHM`].
    #[serde(default)]
    pub force: bool,
    #[serde(default = "default_sampling")]
    pub sampling: Sampling,
    /// Residual phase mismatch `delta_k * L` (rad) imprinted on the spin wave.
    #[serde(default)]
    pub phase_mismatch: f64,
    /// Keep the ground-state overlap `G` in the coherent readout sum
    /// instead of setting it to one.
    #[serde(default)]
    pub include_ground_overlap: bool,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            n_z: default_n_z(),
            classes_per_fwhm: default_cpf(),
            tooth_window: default_window(),
            truncation_k: default_k(),
            steps_per_mode: default_steps(),
            force: false,
            sampling: Sampling::Deterministic,
            phase_mismatch: 0.0,
            include_ground_overlap: false,
        }
    }
}

impl GridSpec {
    /// Doubles the resolution in both `z` and detuning.
    pub fn refined(&self) -> Self {
        Self {
            n_z: self.n_z * 2,
            classes_per_fwhm: self.classes_per_fwhm * 2.0,
            ..*self
        }
    }
}

/// Quadrature grid over position and detuning.
#[derive(Debug, Clone)]
pub struct EnsembleGrid {
    comb: Comb,
    depth: f64,
    pub z_nodes: Vec<f64>,
    pub z_weights: Vec<f64>,
    /// Angular detunings (rad/s).
    pub detunings: Vec<f64>,
    pub weights: Vec<f64>,
    /// Achieved lattice resolution; `None` for Monte Carlo grids.
    pub classes_per_fwhm: Option<f64>,
    pub time_step: f64,
    pub steps_per_revival: usize,
    spec: GridSpec,
}

impl EnsembleGrid {
    pub fn n_z(&self) -> usize {
        self.z_nodes.len()
    }

    pub fn n_freq(&self) -> usize {
        self.detunings.len()
    }

    pub fn n_cells(&self) -> usize {
        self.n_z() * self.n_freq()
    }

    pub fn comb(&self) -> &Comb {
        &self.comb
    }

    /// Effective optical depth `D` used for every propagation factor.
    pub fn depth(&self) -> f64 {
        self.depth
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    /// Trace sample times relative to the read reference `tau`, covering
    /// two revival periods.
    pub fn times(&self) -> Vec<f64> {
        (0..=2 * self.steps_per_revival)
            .map(|k| k as f64 * self.time_step)
            .collect()
    }

    fn cell_weight(&self, iz: usize, ifreq: usize) -> f64 {
        self.z_weights[iz] * self.weights[ifreq]
    }
}

pub fn build_grid(c: &CombParams, spec: &GridSpec) -> Result<EnsembleGrid> {
    if spec.n_z == 0 {
        return Err(Error::invalid("n_z", "must be at least 1"));
    }
    check_positive("classes_per_fwhm", spec.classes_per_fwhm)?;
    check_positive("tooth_window", spec.tooth_window)?;
    check_positive("steps_per_mode", spec.steps_per_mode)?;
    if !spec.phase_mismatch.is_finite() {
        return Err(Error::invalid("phase_mismatch", "must be finite"));
    }
    let comb = Comb::new(*c)?.with_truncation(spec.truncation_k)?;

    let n_z = spec.n_z;
    let z_nodes: Vec<f64> = (0..n_z).map(|k| (k as f64 + 0.5) / n_z as f64).collect();
    let z_weights = vec![1.0 / n_z as f64; n_z];

    let (detunings, weights, cpf) = match spec.sampling {
        Sampling::Deterministic => {
            let (d, w, cpf) = lattice_classes(&comb, spec)?;
            (d, w, Some(cpf))
        }
        Sampling::MonteCarlo { seed, samples } => {
            let (d, w) = sampled_classes(&comb, seed, samples)?;
            (d, w, None)
        }
    };

    let revival = comb.revival_time();
    let steps = (comb.envelope_sigma() * revival * spec.steps_per_mode).ceil() as usize;
    let steps = steps.max(1);

    Ok(EnsembleGrid {
        depth: comb.effective_depth(),
        comb,
        z_nodes,
        z_weights,
        detunings,
        weights,
        classes_per_fwhm: cpf,
        time_step: revival / steps as f64,
        steps_per_revival: steps,
        spec: *spec,
    })
}

fn lattice_classes(comb: &Comb, spec: &GridSpec) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    let f = comb.finesse();
    let per_period = (spec.classes_per_fwhm * f).ceil().max(1.0) as i64;
    let achieved = per_period as f64 / f;
    if achieved < MIN_CLASSES_PER_FWHM && !spec.force {
        return Err(Error::UnderResolved {
            classes_per_fwhm: achieved,
            required: MIN_CLASSES_PER_FWHM,
        });
    }
    let spacing = comb.spacing();
    let h = spacing / per_period as f64;
    let window = spec.tooth_window * comb.tooth_sigma();
    let jmax = comb.max_tooth();
    let kmax = ((jmax as f64 * spacing + window) / h).ceil() as i64;

    let mut detunings = Vec::new();
    let mut weights = Vec::new();
    for k in -kmax..=kmax {
        let x = k as f64 * h;
        let tooth = (x / spacing).round();
        if tooth.abs() > jmax as f64 {
            continue;
        }
        if (x - tooth * spacing).abs() > window {
            continue;
        }
        let w = comb.density_angular(x);
        if w > 0.0 {
            detunings.push(x);
            weights.push(w);
        }
    }
    normalize(&mut weights);
    Ok((detunings, weights, achieved))
}

fn sampled_classes(comb: &Comb, seed: u64, samples: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if samples == 0 {
        return Err(Error::invalid("samples", "must be at least 1"));
    }
    let jmax = comb.max_tooth();
    let s2 = comb.tooth_sigma().powi(2);
    let g2 = comb.envelope_sigma().powi(2);
    // product of envelope and tooth Gaussians is again Gaussian
    let total = g2 + s2;
    let teeth: Vec<i64> = (-jmax..=jmax).collect();
    let tooth_mass: Vec<f64> = teeth
        .iter()
        .map(|&j| {
            let c = j as f64 * comb.spacing();
            (-c * c / (2.0 * total)).exp()
        })
        .collect();
    let pick = WeightedIndex::new(&tooth_mass).map_err(|e| Error::invalid("samples", e.to_string()))?;
    let width = (g2 * s2 / total).sqrt();
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut detunings: Vec<f64> = (0..samples)
        .map(|_| {
            let j = teeth[pick.sample(&mut rng)] as f64;
            let mean = -j * comb.spacing() * g2 / total;
            mean + width * unit.sample(&mut rng)
        })
        .collect();
    detunings.sort_by(f64::total_cmp);
    Ok((detunings, vec![1.0 / samples as f64; samples]))
}

fn normalize(w: &mut [f64]) {
    let total: f64 = w.iter().sum();
    for x in w.iter_mut() {
        *x /= total;
    }
}

/// Per-cell amplitudes after the write pulse, stored z-major.
#[derive(Debug, Clone)]
pub struct EnsembleState {
    n_z: usize,
    n_freq: usize,
    theta0_sq: f64,
    /// Amplitude on `g`.
    pub ground: Vec<Complex64>,
    /// Amplitude on `e`.
    pub excited: Vec<Complex64>,
}

impl EnsembleState {
    pub fn theta0_sq(&self) -> f64 {
        self.theta0_sq
    }

    pub fn cell(&self, iz: usize, ifreq: usize) -> (Complex64, Complex64) {
        let i = iz * self.n_freq + ifreq;
        (self.ground[i], self.excited[i])
    }

    /// Population of `e` averaged over detuning in slice `iz`.
    fn slice_population(&self, g: &EnsembleGrid, iz: usize) -> f64 {
        let row = &self.excited[iz * self.n_freq..(iz + 1) * self.n_freq];
        row.iter().zip(&g.weights).map(|(e, w)| w * e.norm_sqr()).sum()
    }

    /// Fraction of atoms transferred to `e`.
    pub fn excited_fraction(&self, g: &EnsembleGrid) -> f64 {
        (0..self.n_z)
            .map(|iz| g.z_weights[iz] * self.slice_population(g, iz))
            .sum()
    }

    pub fn max_norm_error(&self) -> f64 {
        self.ground
            .iter()
            .zip(&self.excited)
            .map(|(a, b)| (a.norm_sqr() + b.norm_sqr() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// Weak write pulse attenuated along the crystal: `E ~ theta0 exp(-D z / 2)`.
pub fn write_step(g: &EnsembleGrid, p: &ProtocolParams) -> Result<EnsembleState> {
    p.validate()?;
    let d = g.depth;
    let theta0 = p.theta0_sq.sqrt();
    let n_freq = g.n_freq();
    let mut ground = Vec::with_capacity(g.n_cells());
    let mut excited = Vec::with_capacity(g.n_cells());
    for &z in &g.z_nodes {
        let atten = (-d * z).exp();
        let gr = 1.0 - 0.5 * p.theta0_sq * atten;
        let ex = theta0 * (-0.5 * d * z).exp();
        let norm = (gr * gr + ex * ex).sqrt();
        let gr = Complex64::new(gr / norm, 0.0);
        let ex = Complex64::new(ex / norm, 0.0);
        ground.extend(std::iter::repeat_n(gr, n_freq));
        excited.extend(std::iter::repeat_n(ex, n_freq));
    }
    Ok(EnsembleState {
        n_z: g.n_z(),
        n_freq,
        theta0_sq: p.theta0_sq,
        ground,
        excited,
    })
}

/// Stokes photons per mode leaving the crystal at time `t` after the write
/// pulse: each cell radiates incoherently and is amplified by the inverted
/// population between its slice and the output face.
pub fn stokes_count(s: &EnsembleState, g: &EnsembleGrid, t: f64) -> f64 {
    let d = g.depth;
    let dz = 1.0 / g.n_z() as f64;
    let pops: Vec<f64> = (0..g.n_z()).map(|iz| s.slice_population(g, iz)).collect();
    // gain exponent from each slice midpoint to z = L
    let mut tail = 0.0;
    let mut gain = vec![0.0; g.n_z()];
    for iz in (0..g.n_z()).rev() {
        gain[iz] = (d * (tail + 0.5 * pops[iz] * dz)).exp();
        tail += pops[iz] * dz;
    }
    let mut total = 0.0;
    for (iz, (row, gz)) in s.excited.chunks(s.n_freq).zip(&gain).enumerate() {
        let mut slice = 0.0;
        for (ifreq, e) in row.iter().enumerate() {
            let amp = e * Complex64::from_polar(1.0, -g.detunings[ifreq] * t);
            slice += g.weights[ifreq] * amp.norm_sqr();
        }
        total += g.z_weights[iz] * gz * slice;
    }
    d * total
}

/// Stokes photon flux (photons/s) at time `t`.
pub fn stokes_flux(s: &EnsembleState, g: &EnsembleGrid, t: f64) -> f64 {
    stokes_count(s, g, t) / g.comb.mode_duration()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceKind {
    ForwardStokes,
    BackwardAntiStokes,
    ForwardAntiStokes,
}

impl TraceKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            TraceKind::ForwardStokes => "forward_stokes",
            TraceKind::BackwardAntiStokes => "backward_anti_stokes",
            TraceKind::ForwardAntiStokes => "forward_anti_stokes",
        }
    }
}

/// Time-resolved photon flux at the output face.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldTrace {
    pub direction: TraceKind,
    /// Absolute times after the write pulse (s).
    pub times: Vec<f64>,
    /// Photons per second.
    pub flux: Vec<f64>,
    /// Mode duration `sqrt(2 pi)/big_gamma` (s).
    pub mode_duration: f64,
    /// Time of the located revival (s).
    pub peak_time: f64,
    /// Peak flux times the mode duration: photons per mode at the revival.
    pub mode_integrated_counts: f64,
    /// Flux integrated over a rectangular mode window centred on the peak.
    pub window_counts: f64,
    /// Flux integrated over the whole trace.
    pub total_counts: f64,
}

impl FieldTrace {
    fn new(direction: TraceKind, times: Vec<f64>, flux: Vec<f64>, mode_duration: f64, peak: usize) -> Self {
        let dt = if times.len() > 1 { times[1] - times[0] } else { 0.0 };
        let total_counts = trapezoid(&flux, dt);
        let half = 0.5 * mode_duration;
        let lo = times.partition_point(|&t| t < times[peak] - half);
        let hi = times.partition_point(|&t| t <= times[peak] + half);
        let window_counts = trapezoid(&flux[lo..hi], dt);
        Self {
            direction,
            peak_time: times[peak],
            mode_integrated_counts: flux[peak] * mode_duration,
            window_counts,
            total_counts,
            mode_duration,
            times,
            flux,
        }
    }

    pub fn time_step(&self) -> f64 {
        if self.times.len() > 1 {
            self.times[1] - self.times[0]
        } else {
            0.0
        }
    }

    /// Index of the largest flux sample within `half_width` of `centre`.
    pub fn locate_peak(&self, centre: f64, half_width: f64) -> Option<usize> {
        let lo = self.times.partition_point(|&t| t < centre - half_width);
        let hi = self.times.partition_point(|&t| t <= centre + half_width);
        (lo..hi).max_by(|&a, &b| self.flux[a].total_cmp(&self.flux[b]).then(b.cmp(&a)))
    }

    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["t_seconds", "flux", "direction"])?;
        for (t, f) in self.times.iter().zip(&self.flux) {
            out.write_record([format!("{t:?}"), format!("{f:?}"), self.direction.as_str().to_string()])?;
        }
        out.flush()?;
        Ok(())
    }
}

fn trapezoid(y: &[f64], dt: f64) -> f64 {
    if y.len() < 2 {
        return 0.0;
    }
    let inner: f64 = y[1..y.len() - 1].iter().sum();
    dt * (inner + 0.5 * (y[0] + y[y.len() - 1]))
}

/// Normalized spin wave heralded by a Stokes detection at `t_d`, collapsed
/// along `z` with the propagation kernel of the chosen direction. Returns
/// one complex amplitude per detuning class.
fn collapsed_spin_wave(
    s: &EnsembleState,
    g: &EnsembleGrid,
    t_d: f64,
    direction: Direction,
) -> Vec<Complex64> {
    let d = g.depth;
    let theta0 = s.theta0_sq.sqrt();
    let mismatch = g.spec.phase_mismatch;
    let profile = |iz: usize, ifreq: usize| -> Complex64 {
        let (_, e) = s.cell(iz, ifreq);
        let amp = if theta0 > 0.0 {
            e / theta0
        } else {
            Complex64::new((-0.5 * d * g.z_nodes[iz]).exp(), 0.0)
        };
        amp * Complex64::from_polar(1.0, mismatch * g.z_nodes[iz])
    };

    let mut norm = 0.0;
    for iz in 0..g.n_z() {
        for ifreq in 0..g.n_freq() {
            norm += g.cell_weight(iz, ifreq) * profile(iz, ifreq).norm_sqr();
        }
    }
    let scale = 1.0 / norm.sqrt();

    let mut collapsed = vec![Complex64::new(0.0, 0.0); g.n_freq()];
    for iz in 0..g.n_z() {
        let z = g.z_nodes[iz];
        let kernel = match direction {
            Direction::Backward => (-0.5 * d * z).exp(),
            Direction::Forward => (-0.5 * d * (1.0 - z)).exp(),
        };
        let wz = g.z_weights[iz] * kernel * scale;
        for (ifreq, slot) in collapsed.iter_mut().enumerate() {
            let mut amp = profile(iz, ifreq);
            if g.spec.include_ground_overlap {
                amp *= s.cell(iz, ifreq).0;
            }
            *slot += wz * amp;
        }
    }
    // free evolution between write and detection
    for (slot, &delta) in collapsed.iter_mut().zip(&g.detunings) {
        *slot *= Complex64::from_polar(1.0, -delta * t_d);
    }
    collapsed
}

const CHUNK: usize = 64;

/// `|sum_j w_j b_j exp(-i delta_j s)|^2` for every `s` in `offsets`.
fn coherent_intensity(g: &EnsembleGrid, amplitudes: &[Complex64], offsets: &[f64]) -> Vec<f64> {
    let weighted: Vec<Complex64> = amplitudes.iter().zip(&g.weights).map(|(a, w)| a * w).collect();
    let dt = g.time_step;
    let step: Vec<Complex64> = g.detunings.iter().map(|&x| Complex64::from_polar(1.0, -x * dt)).collect();
    offsets
        .par_chunks(CHUNK)
        .flat_map_iter(|chunk| {
            let start = chunk[0];
            let mut phase: Vec<Complex64> = g
                .detunings
                .iter()
                .zip(&weighted)
                .map(|(&x, a)| a * Complex64::from_polar(1.0, -x * start))
                .collect();
            let mut out = Vec::with_capacity(chunk.len());
            for _ in chunk {
                let sum: Complex64 = phase.iter().sum();
                out.push(sum.norm_sqr());
                for (p, r) in phase.iter_mut().zip(&step) {
                    *p *= r;
                }
            }
            out
        })
        .collect()
}

fn readout(s: &EnsembleState, g: &EnsembleGrid, p: &ProtocolParams, direction: Direction) -> Result<FieldTrace> {
    p.validate_for(g.comb.params())?;
    let amplitudes = collapsed_spin_wave(s, g, p.t_d, direction);
    let times = g.times();
    // phase accumulated since the read pulse is delta (s - t_d)
    let offsets: Vec<f64> = times.iter().map(|&x| x - p.t_d).collect();
    let counts = coherent_intensity(g, &amplitudes, &offsets);
    let mode = g.comb.mode_duration();
    let flux: Vec<f64> = times
        .iter()
        .zip(&counts)
        .map(|(&x, &c)| if x < p.t_d { 0.0 } else { g.depth * c / mode })
        .collect();
    let abs_times: Vec<f64> = times.iter().map(|&x| x + p.tau).collect();
    let kind = match direction {
        Direction::Backward => TraceKind::BackwardAntiStokes,
        Direction::Forward => TraceKind::ForwardAntiStokes,
    };
    let revival = g.comb.revival_time();
    let provisional = FieldTrace::new(kind, abs_times, flux, mode, 0);
    let lo = (p.tau + p.t_d).max(p.tau + 0.5 * revival);
    let hi = p.tau + 1.5 * revival;
    let peak = provisional
        .locate_peak(0.5 * (lo + hi), 0.5 * (hi - lo))
        .unwrap_or(0);
    Ok(FieldTrace::new(kind, provisional.times, provisional.flux, mode, peak))
}

/// Backward anti-Stokes emission after a pi read pulse at `t_d + tau`.
/// The trace spans `t - tau` in `[0, 2 * 2pi/delta0]`; the flux is zero
/// before the read pulse.
pub fn heralded_readout(s: &EnsembleState, g: &EnsembleGrid, p: &ProtocolParams) -> Result<FieldTrace> {
    readout(s, g, p, Direction::Backward)
}

/// Same collective emission collected in the forward direction, where it is
/// reabsorbed by the rest of the crystal.
pub fn forward_readout(s: &EnsembleState, g: &EnsembleGrid, p: &ProtocolParams) -> Result<FieldTrace> {
    readout(s, g, p, Direction::Forward)
}

/// Photons per mode if the atoms radiated independently: the cross terms
/// of the coherent sum are dropped, each cell acting as one emitter.
pub fn incoherent_readout(s: &EnsembleState, g: &EnsembleGrid, p: &ProtocolParams) -> Result<f64> {
    p.validate_for(g.comb.params())?;
    let d = g.depth;
    let theta0 = s.theta0_sq.sqrt();
    let mut norm = 0.0;
    let mut acc = 0.0;
    for iz in 0..g.n_z() {
        let kernel = (-d * g.z_nodes[iz]).exp();
        for ifreq in 0..g.n_freq() {
            let w = g.cell_weight(iz, ifreq);
            let (_, e) = s.cell(iz, ifreq);
            let amp2 = if theta0 > 0.0 {
                e.norm_sqr() / s.theta0_sq
            } else {
                (-d * g.z_nodes[iz]).exp()
            };
            norm += w * amp2;
            acc += w * w * amp2 * kernel;
        }
    }
    Ok(d * acc / norm)
}

/// Anti-Stokes noise per mode `s_off` seconds after `tau`, from atoms left in
/// `e` by the write pulse that decayed to `s` and were swapped back by the
/// read pulse. Incoherent, hence flat in time.
pub fn noise_count_at(g: &EnsembleGrid, p: &ProtocolParams, s_off: f64) -> Result<f64> {
    let state = write_step(g, p)?;
    let d = g.depth;
    let mut acc = 0.0;
    for iz in 0..g.n_z() {
        let kernel = (-0.5 * d * g.z_nodes[iz]).exp();
        for ifreq in 0..g.n_freq() {
            let (_, e) = state.cell(iz, ifreq);
            let population = p.branching_ratio * e.norm_sqr();
            let amp = kernel * Complex64::from_polar(1.0, -g.detunings[ifreq] * (s_off - p.t_d));
            acc += g.cell_weight(iz, ifreq) * population * amp.norm_sqr();
        }
    }
    Ok(d * acc)
}

/// Noise photons per mode at the first revival.
pub fn noise_flux(g: &EnsembleGrid, p: &ProtocolParams) -> Result<f64> {
    noise_count_at(g, p, g.comb.revival_time())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultimodeResult {
    /// Detection times after merging exact duplicates (s).
    pub detections: Vec<f64>,
    /// Spin waves per detection time.
    pub multiplicity: Vec<u32>,
    /// `tau + 2pi/delta0 - (t_dk - t_d1)` (s).
    pub predicted: Vec<f64>,
    /// Located flux maxima nearest each prediction (s).
    pub located: Vec<f64>,
    /// Photons per mode at each located maximum.
    pub peak_counts: Vec<f64>,
    pub time_step: f64,
    pub trace: FieldTrace,
}

impl MultimodeResult {
    /// Largest distance between a located and a predicted revival, in steps.
    pub fn max_offset_steps(&self) -> f64 {
        self.located
            .iter()
            .zip(&self.predicted)
            .map(|(a, b)| (a - b).abs() / self.time_step)
            .fold(0.0, f64::max)
    }
}

/// Independent spin waves heralded at several detection times, all read by
/// one pi pulse sent `tau` after the first detection.
pub fn multimode_rephasing(
    detection_times: &[f64],
    tau: f64,
    g: &EnsembleGrid,
    p: &ProtocolParams,
) -> Result<MultimodeResult> {
    if detection_times.is_empty() {
        return Err(Error::invalid("detection_times", "at least one detection is required"));
    }
    let mut sorted = detection_times.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut detections: Vec<f64> = Vec::new();
    let mut multiplicity: Vec<u32> = Vec::new();
    for t in sorted {
        if detections.last() == Some(&t) {
            *multiplicity.last_mut().unwrap() += 1;
        } else {
            detections.push(t);
            multiplicity.push(1);
        }
    }
    let first = detections[0];
    let revival = g.comb.revival_time();
    let read_time = first + tau;
    for &t in &detections {
        let proto = ProtocolParams { t_d: t, tau, ..*p };
        proto.validate_for(g.comb.params())?;
        if t > read_time {
            return Err(Error::Regime(format!(
                "detection at {t:.6e} s comes after the read pulse at {read_time:.6e} s"
            )));
        }
    }
    let min_sep = 2.0 / g.comb.envelope_sigma();
    for (i, pair) in detections.windows(2).enumerate() {
        let sep = pair[1] - pair[0];
        if sep < min_sep {
            return Err(Error::OverlappingRevivals {
                first: i,
                second: i + 1,
                separation: sep,
                min_separation: min_sep,
            });
        }
    }

    let state = write_step(g, &ProtocolParams { t_d: first, tau, ..*p })?;
    let times = g.times();
    let offsets: Vec<f64> = times.iter().map(|&x| x - first).collect();
    let mut intensity = vec![0.0; times.len()];
    for (&t_d, &mult) in detections.iter().zip(&multiplicity) {
        let amps = collapsed_spin_wave(&state, g, t_d, Direction::Backward);
        let counts = coherent_intensity(g, &amps, &offsets);
        for (acc, c) in intensity.iter_mut().zip(counts) {
            *acc += mult as f64 * c;
        }
    }
    let mode = g.comb.mode_duration();
    let flux: Vec<f64> = times
        .iter()
        .zip(&intensity)
        .map(|(&x, &c)| if x < first { 0.0 } else { g.depth * c / mode })
        .collect();
    let abs_times: Vec<f64> = times.iter().map(|&x| x + tau).collect();
    let predicted: Vec<f64> = detections.iter().map(|&t| tau + revival - (t - first)).collect();
    let provisional = FieldTrace::new(TraceKind::BackwardAntiStokes, abs_times, flux, mode, 0);
    let mut located = Vec::with_capacity(predicted.len());
    let mut peak_counts = Vec::with_capacity(predicted.len());
    for &target in &predicted {
        let idx = provisional
            .locate_peak(target, 0.5 * min_sep)
            .ok_or_else(|| Error::Regime(format!("revival at {target:.6e} s falls outside the trace")))?;
        located.push(provisional.times[idx]);
        peak_counts.push(provisional.flux[idx] * mode);
    }
    let main_peak = provisional.locate_peak(predicted[0], 0.5 * min_sep).unwrap_or(0);
    let trace = FieldTrace::new(
        TraceKind::BackwardAntiStokes,
        provisional.times,
        provisional.flux,
        mode,
        main_peak,
    );
    Ok(MultimodeResult {
        detections,
        multiplicity,
        predicted,
        located,
        peak_counts,
        time_step: g.time_step,
        trace,
    })
}

/// Write, herald and read in one call; returns the trace in the chosen direction.
pub fn simulate_readout(
    c: &CombParams,
    p: &ProtocolParams,
    spec: &GridSpec,
    direction: Direction,
) -> Result<FieldTrace> {
    let grid = build_grid(c, spec)?;
    let state = write_step(&grid, p)?;
    readout(&state, &grid, p, direction)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleSummary {
    pub eta_readout: f64,
    pub stokes_per_mode: f64,
    pub noise_per_mode: f64,
    pub peak_time: f64,
    pub n_cells: usize,
}

/// Runs the full oracle chain on one grid.
pub fn oracle_summary(c: &CombParams, p: &ProtocolParams, spec: &GridSpec) -> Result<OracleSummary> {
    let grid = build_grid(c, spec)?;
    let state = write_step(&grid, p)?;
    let trace = heralded_readout(&state, &grid, p)?;
    Ok(OracleSummary {
        eta_readout: trace.mode_integrated_counts,
        stokes_per_mode: stokes_count(&state, &grid, p.t_d),
        noise_per_mode: noise_flux(&grid, p)?,
        peak_time: trace.peak_time,
        n_cells: grid.n_cells(),
    })
}
