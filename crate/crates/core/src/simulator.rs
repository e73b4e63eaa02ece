//! Synthetic GC-MS ground truth.
//!
//! Each solute owns a template of Gaussian chromatographic peaks on a
//! 20-minute retention axis plus a fragment pattern over a fixed m/z grid.
//! Solvents shift every peak by a fixed amount and scale template heights;
//! interferents add unrelated peaks, a slow baseline, retention jitter and
//! noise. Solute contributions come from independent random streams, so a
//! noiseless mixture is exactly the sum of its single-solute renderings.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectrum::{
    detect_peaks, min_max_normalize, ConditionLabel, Interference, PeakOptions, RetentionAxis, Scan, Solute,
    Solvent, Spectrum,
};

pub const RUN_MINUTES: f64 = 20.0;
pub const MZ_BINS: usize = 64;
pub const MZ_START: f64 = 25.0;
pub const MZ_STEP: f64 = 3.0;
pub const MIN_LENGTH: usize = 64;
pub const DEFAULT_LENGTH: usize = 512;

/// Half-width, in indices, of the peak-presence mask around each apex.
pub const MASK_HALF_WIDTH: usize = 2;

const HEIGHT_JITTER: f64 = 0.1;

const INTERFERENCE_STREAM: u64 = 100;
const NOISE_STREAM: u64 = 200;

pub fn mz_axis() -> Vec<f64> {
    (0..MZ_BINS).map(|b| MZ_START + MZ_STEP * b as f64).collect()
}

fn mz_bin(mz: f64) -> usize {
    (((mz - MZ_START) / MZ_STEP).round().max(0.0) as usize).min(MZ_BINS - 1)
}

fn pattern_from_ions(ions: &[(f64, f64)]) -> Vec<f64> {
    let mut p = vec![0.0; MZ_BINS];
    for &(mz, rel) in ions {
        p[mz_bin(mz)] += rel;
    }
    let m = p.iter().cloned().fold(0.0, f64::max);
    p.iter_mut().for_each(|v| *v /= m);
    p
}

/// Retention and fragmentation template of one solute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentTemplate {
    pub solute: Solute,
    /// Peak centers in minutes.
    pub peak_centers: Vec<f64>,
    /// Gaussian widths in minutes.
    pub peak_widths: Vec<f64>,
    pub peak_heights: Vec<f64>,
    pub fragment_pattern: Vec<f64>,
}

impl AgentTemplate {
    pub fn for_solute(solute: Solute) -> Self {
        let (centers, widths, heights, ions): (&[f64], &[f64], &[f64], &[(f64, f64)]) = match solute {
            Solute::Dmmp => (
                &[6.2, 9.6],
                &[0.10, 0.12],
                &[1.0, 0.55],
                &[(79.0, 1.0), (94.0, 0.8), (124.0, 0.35), (109.0, 0.2)],
            ),
            Solute::Dfp => (
                &[8.1, 11.2],
                &[0.09, 0.11],
                &[0.8, 1.0],
                &[(101.0, 1.0), (127.0, 0.6), (143.0, 0.4), (43.0, 0.5)],
            ),
            Solute::Cees => (
                &[1.6, 7.4],
                &[0.08, 0.10],
                &[0.7, 1.0],
                &[(75.0, 1.0), (47.0, 0.6), (124.0, 0.3), (61.0, 0.4)],
            ),
            Solute::Ceps => (
                &[5.2, 12.6, 14.8],
                &[0.10, 0.10, 0.12],
                &[1.0, 0.6, 0.45],
                &[(109.0, 1.0), (123.0, 0.7), (172.0, 0.3), (91.0, 0.5)],
            ),
            Solute::Nitrophenol => (
                &[16.1, 17.8],
                &[0.11, 0.12],
                &[1.0, 0.5],
                &[(139.0, 1.0), (109.0, 0.5), (65.0, 0.6), (93.0, 0.3)],
            ),
            Solute::Ethylenediamine => (
                &[2.6, 4.1],
                &[0.08, 0.09],
                &[1.0, 0.65],
                &[(30.0, 1.0), (42.0, 0.3), (60.0, 0.4), (44.0, 0.2)],
            ),
        };
        Self {
            solute,
            peak_centers: centers.to_vec(),
            peak_widths: widths.to_vec(),
            peak_heights: heights.to_vec(),
            fragment_pattern: pattern_from_ions(ions),
        }
    }

    /// Peak centers as fractional retention indices for length `t` under `solvent`.
    pub fn centers_at(&self, t: usize, solvent: Solvent) -> Vec<f64> {
        let shift = solvent_shift(solvent, t);
        self.peak_centers.iter().map(|m| minutes_to_index(*m, t) + shift).collect()
    }

    pub fn widths_at(&self, t: usize) -> Vec<f64> {
        self.peak_widths.iter().map(|w| w * t as f64 / RUN_MINUTES).collect()
    }
}

pub fn minutes_to_index(minutes: f64, t: usize) -> f64 {
    minutes * t as f64 / RUN_MINUTES
}

pub fn retention_axis(t: usize) -> RetentionAxis {
    RetentionAxis {
        start: 0.0,
        step: RUN_MINUTES / t as f64,
    }
}

/// Retention shift of a solvent in indices, scaled from a 512-point axis.
pub fn solvent_shift(solvent: Solvent, t: usize) -> f64 {
    let at_512 = match solvent {
        Solvent::EtOH => 0.0,
        Solvent::MeOH => 3.0,
        Solvent::MC => -5.0,
        Solvent::THF => 8.0,
    };
    at_512 * t as f64 / 512.0
}

/// Height scale applied to a solute's template in a given solvent.
pub fn solvent_height_factor(solvent: Solvent, solute: Solute) -> f64 {
    const TABLE: [[f64; 6]; 4] = [
        // DMMP, DFP, 2-CEES, 2-CEPS, 4-NP, EDA
        [1.00, 0.90, 1.10, 0.95, 1.05, 0.85],
        [0.85, 1.15, 0.95, 1.20, 0.80, 1.10],
        [1.25, 0.75, 1.30, 0.80, 1.15, 0.70],
        [0.70, 1.05, 0.80, 1.10, 1.30, 1.20],
    ];
    TABLE[solvent.index()][solute.index()]
}

/// Perturbations contributed by an interfering material.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterferenceModel {
    pub kind: Interference,
    /// Inclusive range for the number of unrelated peaks.
    pub extra_peaks: (usize, usize),
    pub baseline_drift: f64,
    /// Maximum whole-record retention jitter in indices on a 512-point axis.
    pub retention_shift: usize,
    pub noise_std: f64,
}

impl InterferenceModel {
    /// No perturbation at all: exact template peaks.
    pub fn noiseless() -> Self {
        Self {
            kind: Interference::None,
            extra_peaks: (0, 0),
            baseline_drift: 0.0,
            retention_shift: 0,
            noise_std: 0.0,
        }
    }

    pub fn preset(kind: Interference) -> Self {
        let (extra_peaks, baseline_drift, retention_shift, noise_std) = match kind {
            Interference::None => ((0, 0), 0.0, 0, 0.01),
            Interference::Brick => ((1, 2), 0.02, 1, 0.01),
            Interference::Soil => ((2, 3), 0.05, 2, 0.015),
            Interference::Grass => ((2, 4), 0.03, 2, 0.012),
            Interference::Asphalt => ((3, 5), 0.08, 3, 0.02),
            Interference::Kerosene => ((4, 6), 0.06, 2, 0.02),
            Interference::Acetone => ((1, 1), 0.01, 1, 0.01),
        };
        Self {
            kind,
            extra_peaks,
            baseline_drift,
            retention_shift,
            noise_std,
        }
    }

    pub fn with_noise(mut self, noise_std: f64) -> Self {
        self.noise_std = noise_std;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.baseline_drift >= 0.0 && self.noise_std >= 0.0) {
            return Err(Error::config("interference amplitudes must be non-negative"));
        }
        if self.extra_peaks.0 > self.extra_peaks.1 {
            return Err(Error::config("extra peak range is inverted"));
        }
        Ok(())
    }
}

impl Default for InterferenceModel {
    fn default() -> Self {
        Self::preset(Interference::None)
    }
}

/// One rendered chromatographic peak.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruePeak {
    pub index: usize,
    pub center: f64,
    pub sigma: f64,
    pub height: f64,
    /// `None` for interference peaks.
    pub solute: Option<Solute>,
    pub pattern: Vec<f64>,
}

impl TruePeak {
    fn value_at(&self, i: f64) -> f64 {
        let z = (i - self.center) / self.sigma;
        self.height * (-0.5 * z * z).exp()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    /// Peaks sorted by apex index.
    pub peaks: Vec<TruePeak>,
    /// 1 within the mask half-width of any apex, else 0.
    pub mask: Vec<f64>,
}

impl GroundTruth {
    pub fn indices(&self) -> Vec<usize> {
        self.peaks.iter().map(|p| p.index).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulatedRecord {
    pub spectrum: Spectrum,
    pub truth: GroundTruth,
}

impl SimulatedRecord {
    pub fn label(&self) -> &ConditionLabel {
        self.spectrum.condition.as_ref().expect("simulated records carry a label")
    }
}

/// Unnormalized TIC plus the rendered peaks.
#[derive(Debug, Clone)]
pub struct RawRendering {
    pub tic: Vec<f64>,
    pub peaks: Vec<TruePeak>,
    pub label: ConditionLabel,
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn random_pattern<R: Rng + ?Sized>(rng: &mut R) -> Vec<f64> {
    let n = rng.random_range(3..=5);
    let ions: Vec<(f64, f64)> = (0..n)
        .map(|_| (rng.random_range(MZ_START..MZ_START + MZ_STEP * (MZ_BINS - 1) as f64), rng.random_range(0.2..1.0)))
        .collect();
    pattern_from_ions(&ions)
}

/// Renders the TIC before clipping and normalization.
pub fn render_raw(label: &ConditionLabel, model: &InterferenceModel, t: usize, seed: u64) -> Result<RawRendering> {
    if t < MIN_LENGTH {
        return Err(Error::config(format!("simulated spectra need T >= {MIN_LENGTH}, got {t}")));
    }
    model.validate()?;
    let label = label.with_interference(model.kind)?;
    let scale = t as f64 / 512.0;
    let mut irng = stream(seed, INTERFERENCE_STREAM);
    let jitter = if model.retention_shift > 0 {
        let r = model.retention_shift as i64;
        irng.random_range(-r..=r) as f64 * scale
    } else {
        0.0
    };

    let mut peaks = Vec::new();
    for &solute in label.solutes() {
        let tpl = AgentTemplate::for_solute(solute);
        let mut srng = stream(seed, 1 + solute.index() as u64);
        let factor = solvent_height_factor(label.solvent(), solute);
        for ((c, s), h) in tpl.centers_at(t, label.solvent()).iter().zip(tpl.widths_at(t)).zip(&tpl.peak_heights) {
            let jittered = h * factor * (1.0 + srng.random_range(-HEIGHT_JITTER..=HEIGHT_JITTER));
            let center = (c + jitter).clamp(0.0, (t - 1) as f64);
            peaks.push(TruePeak {
                index: center.round() as usize,
                center,
                sigma: s.max(0.5),
                height: jittered,
                solute: Some(solute),
                pattern: tpl.fragment_pattern.clone(),
            });
        }
    }

    let (lo, hi) = model.extra_peaks;
    if hi > 0 {
        let count = irng.random_range(lo..=hi);
        let min_distance = PeakOptions::for_length(t).min_distance as f64;
        for _ in 0..count {
            let sigma = irng.random_range(0.08..0.15) * t as f64 / RUN_MINUTES;
            let height = irng.random_range(0.2..0.6);
            let pattern = random_pattern(&mut irng);
            let margin = 4.0 * sigma;
            // A bounded number of placement attempts keeps rendering deterministic.
            for _ in 0..100 {
                let center = irng.random_range(margin..(t as f64 - 1.0 - margin));
                let clear = peaks
                    .iter()
                    .all(|p| (p.center - center).abs() >= 3.0 * (p.sigma + sigma) + min_distance);
                if clear {
                    peaks.push(TruePeak {
                        index: center.round() as usize,
                        center,
                        sigma,
                        height,
                        solute: None,
                        pattern: pattern.clone(),
                    });
                    break;
                }
            }
        }
    }
    peaks.sort_by(|a, b| a.center.total_cmp(&b.center));

    let mut tic = vec![0.0; t];
    for p in &peaks {
        let reach = (6.0 * p.sigma).ceil() as i64;
        let c = p.center.round() as i64;
        for i in (c - reach).max(0)..=(c + reach).min(t as i64 - 1) {
            tic[i as usize] += p.value_at(i as f64);
        }
    }
    if model.baseline_drift > 0.0 {
        let phase = irng.random_range(0.0..std::f64::consts::TAU);
        let slope = irng.random_range(0.0..1.0);
        for (i, v) in tic.iter_mut().enumerate() {
            let u = i as f64 / (t - 1) as f64;
            *v += model.baseline_drift * (0.5 * slope * u + 0.25 * (1.0 + (std::f64::consts::TAU * u + phase).sin()));
        }
    }
    if model.noise_std > 0.0 {
        let mut nrng = stream(seed, NOISE_STREAM);
        let normal = Normal::new(0.0, model.noise_std).map_err(|e| Error::config(e.to_string()))?;
        tic.iter_mut().for_each(|v| *v += normal.sample(&mut nrng));
    }
    Ok(RawRendering { tic, peaks, label })
}

/// Mass scan at fractional index `i` from every rendered peak, unscaled.
fn surface_scan(peaks: &[TruePeak], i: f64) -> Vec<f64> {
    let mut mz = vec![0.0; MZ_BINS];
    for p in peaks {
        let g = p.value_at(i);
        if g > 1e-12 {
            mz.iter_mut().zip(&p.pattern).for_each(|(m, v)| *m += g * v);
        }
    }
    mz
}

pub fn peak_mask(indices: &[usize], t: usize) -> Vec<f64> {
    let mut mask = vec![0.0; t];
    for &i in indices {
        let lo = i.saturating_sub(MASK_HALF_WIDTH);
        let hi = (i + MASK_HALF_WIDTH).min(t - 1);
        mask[lo..=hi].iter_mut().for_each(|m| *m = 1.0);
    }
    mask
}

/// Simulates one labeled record; the model's kind becomes the label's interference tag.
pub fn simulate_spectrum(
    label: &ConditionLabel,
    model: &InterferenceModel,
    t: usize,
    seed: u64,
) -> Result<SimulatedRecord> {
    let raw = render_raw(label, model, t, seed)?;
    let clipped: Vec<f64> = raw.tic.iter().map(|v| v.max(0.0)).collect();
    let lo = clipped.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = clipped.iter().cloned().fold(0.0, f64::max);
    let range = if hi > lo { hi - lo } else { 1.0 };
    let tic = min_max_normalize(&clipped);

    let mut nrng = stream(seed, NOISE_STREAM + 1);
    let scan_noise = Normal::new(0.0, model.noise_std.max(0.0)).map_err(|e| Error::config(e.to_string()))?;
    let mut scans: Vec<Scan> = Vec::new();
    for p in &raw.peaks {
        if scans.last().is_some_and(|s| s.t == p.index) {
            continue;
        }
        let mz = surface_scan(&raw.peaks, p.index as f64)
            .into_iter()
            .map(|v| {
                let noise = if model.noise_std > 0.0 { scan_noise.sample(&mut nrng) } else { 0.0 };
                (v / range + noise).max(0.0)
            })
            .collect();
        scans.push(Scan { t: p.index, mz });
    }

    let mask = peak_mask(&raw.peaks.iter().map(|p| p.index).collect::<Vec<_>>(), t);
    let spectrum = Spectrum {
        tic,
        scans,
        t_minutes: Some(retention_axis(t)),
        condition: Some(raw.label),
    };
    spectrum.validate()?;
    Ok(SimulatedRecord {
        spectrum,
        truth: GroundTruth { peaks: raw.peaks, mask },
    })
}

/// `n_per_condition` records for each condition, seeds derived from `seed`.
pub fn make_dataset(
    n_per_condition: usize,
    conditions: &[ConditionLabel],
    model: &InterferenceModel,
    t: usize,
    seed: u64,
) -> Result<Vec<SimulatedRecord>> {
    if n_per_condition == 0 {
        return Err(Error::config("records per condition must be at least 1"));
    }
    make_balanced_dataset(n_per_condition * conditions.len(), conditions, model, t, seed)
}

/// `total` records assigned to conditions round-robin.
pub fn make_balanced_dataset(
    total: usize,
    conditions: &[ConditionLabel],
    model: &InterferenceModel,
    t: usize,
    seed: u64,
) -> Result<Vec<SimulatedRecord>> {
    if conditions.is_empty() {
        return Err(Error::config("no conditions to simulate"));
    }
    let mut seeds = ChaCha8Rng::seed_from_u64(seed);
    (0..total)
        .map(|i| simulate_spectrum(&conditions[i % conditions.len()], model, t, seeds.random()))
        .collect()
}

/// Mass scans for a TIC that has no measured scans, taken at its detected peaks.
///
/// A detected peak close to an expected template peak of one of the label's
/// solutes receives that solute's fragment pattern scaled by the TIC height;
/// unmatched peaks get no scan.
pub fn synthesize_scans(tic: &[f64], label: &ConditionLabel) -> Vec<Scan> {
    let t = tic.len();
    if t < 3 {
        return Vec::new();
    }
    let mut expected: Vec<(f64, f64, &'static str, Vec<f64>)> = Vec::new();
    for &solute in label.solutes() {
        let tpl = AgentTemplate::for_solute(solute);
        for (c, s) in tpl.centers_at(t, label.solvent()).into_iter().zip(tpl.widths_at(t)) {
            expected.push((c, s, solute.name(), tpl.fragment_pattern.clone()));
        }
    }
    let tol_base = (t as f64 / 100.0).max(2.0);
    let mut scans = Vec::new();
    for peak in detect_peaks(tic, &PeakOptions::for_length(t)).peaks {
        let best = expected
            .iter()
            .map(|e| ((e.0 - peak.index as f64).abs(), e))
            .filter(|(d, e)| *d <= tol_base + 3.0 * e.1)
            .min_by(|a, b| a.0.total_cmp(&b.0));
        if let Some((_, e)) = best {
            scans.push(Scan {
                t: peak.index,
                mz: e.3.iter().map(|v| v * tic[peak.index]).collect(),
            });
        }
    }
    scans
}
