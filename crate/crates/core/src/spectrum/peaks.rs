use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Thresholds for [`detect_peaks`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakOptions {
    /// Minimum prominence as a fraction of the global maximum, in (0, 1].
    pub min_prominence: f64,
    /// Minimum index distance between two retained peaks.
    pub min_distance: usize,
}

impl PeakOptions {
    pub fn new(min_prominence: f64, min_distance: usize) -> Result<Self> {
        if !(min_prominence > 0.0 && min_prominence <= 1.0) {
            return Err(Error::contract("min_prominence must lie in (0, 1]"));
        }
        Ok(Self {
            min_prominence,
            min_distance: min_distance.max(1),
        })
    }

    /// 5% prominence and a spacing of one hundredth of the signal length.
    pub fn for_length(len: usize) -> Self {
        Self {
            min_prominence: 0.05,
            min_distance: len.div_ceil(100).max(1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub index: usize,
    pub height: f64,
    pub area: f64,
    pub prominence: f64,
    /// Support used for the area, inclusive.
    pub left: usize,
    pub right: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PeakList {
    pub peaks: Vec<Peak>,
}

impl PeakList {
    pub fn len(&self) -> usize {
        self.peaks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.peaks.is_empty()
    }

    pub fn indices(&self) -> Vec<usize> {
        self.peaks.iter().map(|p| p.index).collect()
    }
}

/// Interior local maxima; flat tops resolve to their middle sample.
fn local_maxima(x: &[f64]) -> Vec<usize> {
    let n = x.len();
    let mut out = Vec::new();
    let mut i = 1;
    while i + 1 < n {
        if x[i - 1] < x[i] {
            let mut ahead = i + 1;
            while ahead + 1 < n && x[ahead] == x[i] {
                ahead += 1;
            }
            if x[ahead] < x[i] {
                out.push((i + ahead - 1) / 2);
                i = ahead;
                continue;
            }
        }
        i += 1;
    }
    out
}

/// Prominence and bases, using the same walk-until-higher rule as common signal toolkits.
fn prominence(x: &[f64], p: usize) -> (f64, usize, usize) {
    let h = x[p];
    let (mut left_min, mut left_base) = (h, p);
    let mut i = p;
    while i > 0 {
        i -= 1;
        if x[i] > h {
            break;
        }
        if x[i] < left_min {
            left_min = x[i];
            left_base = i;
        }
    }
    let (mut right_min, mut right_base) = (h, p);
    let mut i = p;
    while i + 1 < x.len() {
        i += 1;
        if x[i] > h {
            break;
        }
        if x[i] < right_min {
            right_min = x[i];
            right_base = i;
        }
    }
    (h - left_min.max(right_min), left_base, right_base)
}

fn trapezoid(x: &[f64], lo: usize, hi: usize) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    x[lo..=hi].windows(2).map(|w| 0.5 * (w[0] + w[1])).sum()
}

fn argmin_between(x: &[f64], lo: usize, hi: usize) -> usize {
    let mut best = lo;
    for i in lo..=hi {
        if x[i] < x[best] {
            best = i;
        }
    }
    best
}

/// Prominence-filtered local maxima with a minimum spacing.
///
/// Signals shorter than three samples, constant signals and all-zero signals
/// yield an empty list. Tall peaks win spacing conflicts.
pub fn detect_peaks(x: &[f64], opts: &PeakOptions) -> PeakList {
    if x.len() < 3 || x.iter().any(|v| !v.is_finite()) {
        return PeakList::default();
    }
    let max = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = x.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(max > min) || max <= 0.0 {
        return PeakList::default();
    }
    let threshold = opts.min_prominence * max;

    let mut candidates: Vec<(usize, f64, usize, usize)> = local_maxima(x)
        .into_iter()
        .filter_map(|p| {
            let (prom, lb, rb) = prominence(x, p);
            (prom >= threshold).then_some((p, prom, lb, rb))
        })
        .collect();

    // spacing: keep in order of decreasing height, ties by index
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&a, &b| {
        x[candidates[b].0]
            .total_cmp(&x[candidates[a].0])
            .then(candidates[a].0.cmp(&candidates[b].0))
    });
    let mut keep = vec![true; candidates.len()];
    for (rank, &i) in order.iter().enumerate() {
        if !keep[i] {
            continue;
        }
        for &j in &order[rank + 1..] {
            if keep[j] && candidates[i].0.abs_diff(candidates[j].0) < opts.min_distance {
                keep[j] = false;
            }
        }
    }
    let mut k = 0;
    candidates.retain(|_| {
        k += 1;
        keep[k - 1]
    });

    // area support is the prominence base range, clipped at the valleys to neighbours
    let mut peaks = Vec::with_capacity(candidates.len());
    for (i, &(p, prom, lb, rb)) in candidates.iter().enumerate() {
        let mut left = lb;
        let mut right = rb;
        if i > 0 {
            left = left.max(argmin_between(x, candidates[i - 1].0, p));
        }
        if i + 1 < candidates.len() {
            right = right.min(argmin_between(x, p, candidates[i + 1].0));
        }
        peaks.push(Peak {
            index: p,
            height: x[p],
            area: trapezoid(x, left, right),
            prominence: prom,
            left,
            right,
        });
    }
    PeakList { peaks }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakStats {
    pub total_peak_area: f64,
    pub mean_intensity: f64,
    pub std_intensity: f64,
}

/// Total peak area plus mean and population standard deviation of the whole signal.
pub fn peak_stats(x: &[f64], peaks: &PeakList) -> PeakStats {
    let n = x.len().max(1) as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    PeakStats {
        total_peak_area: peaks.peaks.iter().map(|p| p.area).sum(),
        mean_intensity: mean,
        std_intensity: var.sqrt(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn gaussian(len: usize, center: f64, sigma: f64, height: f64) -> Vec<f64> {
        (0..len)
            .map(|i| height * (-0.5 * ((i as f64 - center) / sigma).powi(2)).exp())
            .collect()
    }

    #[test]
    fn zeros_have_no_peaks() {
        let opts = PeakOptions::new(0.05, 3).unwrap();
        assert!(detect_peaks(&[0.0; 32], &opts).is_empty());
        assert!(detect_peaks(&[2.5; 32], &opts).is_empty());
    }

    #[test]
    fn triangle_peak_at_ten() {
        let x: Vec<f64> = (0..21).map(|i| 10.0 - (i as f64 - 10.0).abs()).collect();
        let peaks = detect_peaks(&x, &PeakOptions::new(0.05, 1).unwrap());
        assert_eq!(peaks.indices(), vec![10]);
        assert_eq!(peaks.peaks[0].prominence, 10.0);
    }

    #[test]
    fn plateau_resolves_to_middle() {
        let x = [0.0, 1.0, 3.0, 3.0, 3.0, 1.0, 0.0];
        let peaks = detect_peaks(&x, &PeakOptions::new(0.1, 1).unwrap());
        assert_eq!(peaks.indices(), vec![3]);
    }

    #[test]
    fn spacing_prefers_taller_peak() {
        let mut x = gaussian(60, 20.0, 1.5, 1.0);
        let g = gaussian(60, 24.0, 1.5, 0.6);
        x.iter_mut().zip(&g).for_each(|(a, b)| *a += b);
        let close = detect_peaks(&x, &PeakOptions::new(0.01, 8).unwrap());
        assert_eq!(close.len(), 1);
        assert!((close.peaks[0].index as i64 - 20).abs() <= 1);
        let loose = detect_peaks(&x, &PeakOptions::new(0.01, 2).unwrap());
        assert_eq!(loose.len(), 2);
    }

    #[test]
    fn prominence_threshold_drops_ripples() {
        let mut x = gaussian(100, 50.0, 3.0, 1.0);
        x[10] = 0.02;
        let peaks = detect_peaks(&x, &PeakOptions::new(0.05, 2).unwrap());
        assert_eq!(peaks.indices(), vec![50]);
    }

    #[test]
    fn options_validate_prominence() {
        assert!(PeakOptions::new(0.0, 1).is_err());
        assert!(PeakOptions::new(1.5, 1).is_err());
        assert_eq!(PeakOptions::for_length(512).min_distance, 6);
    }

    #[test]
    fn stats_trivial_cases() {
        let z = [0.0; 10];
        let s = peak_stats(&z, &detect_peaks(&z, &PeakOptions::for_length(10)));
        assert_eq!((s.total_peak_area, s.mean_intensity, s.std_intensity), (0.0, 0.0, 0.0));
        let c = [3.0; 10];
        let s = peak_stats(&c, &detect_peaks(&c, &PeakOptions::for_length(10)));
        assert_eq!((s.total_peak_area, s.mean_intensity, s.std_intensity), (0.0, 3.0, 0.0));
    }

    /// Composite Simpson integration of the continuous Gaussian on a fine grid.
    fn simpson_gaussian(sigma: f64, half_width: f64) -> f64 {
        let n = 20_000usize;
        let h = 2.0 * half_width / n as f64;
        let f = |t: f64| (-0.5 * (t / sigma).powi(2)).exp();
        let mut acc = f(-half_width) + f(half_width);
        for i in 1..n {
            let t = -half_width + i as f64 * h;
            acc += if i % 2 == 1 { 4.0 * f(t) } else { 2.0 * f(t) };
        }
        acc * h / 3.0
    }

    #[test]
    fn unit_gaussian_area() {
        let oracle = simpson_gaussian(1.0, 12.0);
        assert!((oracle - (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-9);
        let x = gaussian(64, 32.0, 1.0, 1.0);
        let peaks = detect_peaks(&x, &PeakOptions::new(0.05, 1).unwrap());
        assert_eq!(peaks.len(), 1);
        let area = peak_stats(&x, &peaks).total_peak_area;
        assert!((area - oracle).abs() / oracle < 0.05, "area {area} vs {oracle}");
    }

    proptest! {
        #[test]
        fn deterministic_spacing_and_padding_invariance(
            centers in prop::collection::vec(10usize..80, 1..5),
            heights in prop::collection::vec(0.2f64..1.0, 5),
            pad in 1usize..20,
        ) {
            let mut x = vec![0.0; 100];
            for (c, h) in centers.iter().zip(&heights) {
                for (i, v) in gaussian(100, *c as f64, 2.0, *h).iter().enumerate() {
                    x[i] += v;
                }
            }
            // clamp the tails so the support ends inside the signal
            x.iter_mut().for_each(|v| if *v < 1e-9 { *v = 0.0 });
            let opts = PeakOptions::new(0.05, 4).unwrap();
            let a = detect_peaks(&x, &opts);
            let b = detect_peaks(&x, &opts);
            prop_assert_eq!(&a, &b);
            for w in a.peaks.windows(2) {
                prop_assert!(w[1].index >= w[0].index + 4);
            }
            for p in &a.peaks {
                prop_assert!(p.height > 0.0);
                prop_assert!(p.prominence >= 0.05 * x.iter().cloned().fold(0.0, f64::max) - 1e-12);
            }
            let mut padded = x.clone();
            padded.extend(std::iter::repeat(0.0).take(pad));
            let area_a = peak_stats(&x, &a).total_peak_area;
            let area_b = peak_stats(&padded, &detect_peaks(&padded, &opts)).total_peak_area;
            prop_assert!((area_a - area_b).abs() < 1e-12);
        }
    }
}
