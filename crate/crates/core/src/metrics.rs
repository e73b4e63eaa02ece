//! Similarity metrics, detection scores, mesh export and comparison reports.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simulator::{mz_axis, MZ_BINS};
use crate::spectrum::{detect_peaks, mean_vector, ConditionLabel, PeakOptions, Solute, Spectrum};

/// Multi-hot solute set indexed by [`Solute::index`].
pub type MultiHot = [bool; 6];

pub fn multi_hot(solutes: &[Solute]) -> MultiHot {
    let mut m = [false; 6];
    for s in solutes {
        m[s.index()] = true;
    }
    m
}

fn check_lengths(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::contract(format!("vectors differ in length: {} vs {}", a.len(), b.len())));
    }
    Ok(())
}

pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64> {
    check_lengths(a, b)?;
    let na = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    let nb = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(Error::UndefinedMetric("cosine similarity of a zero vector".into()));
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    Ok((dot / (na * nb)).clamp(-1.0, 1.0))
}

pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    check_lengths(a, b)?;
    if a.len() < 2 {
        return Err(Error::UndefinedMetric("correlation needs at least two samples".into()));
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::UndefinedMetric("correlation of a constant vector".into()));
    }
    Ok((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

/// Peak counts of two signals under identical thresholds.
pub fn peak_count_match(real: &[f64], generated: &[f64], opts: &PeakOptions) -> (usize, usize) {
    (detect_peaks(real, opts).len(), detect_peaks(generated, opts).len())
}

/// Writes `t,mz,intensity` rows sorted by `(t, mz)`.
///
/// `t` is in minutes when the spectrum carries a retention axis and an index
/// otherwise; `mz` is the m/z value on the simulator grid, or the bin index
/// for scans of another width.
pub fn export_mesh(spectrum: &Spectrum, path: &Path) -> Result<usize> {
    if spectrum.scans.is_empty() {
        return Err(Error::contract("mesh export needs at least one mass scan"));
    }
    let axis = mz_axis();
    let mut rows: Vec<(f64, f64, f64)> = Vec::new();
    for scan in &spectrum.scans {
        let t = spectrum.t_minutes.map_or(scan.t as f64, |a| a.minutes(scan.t));
        for (b, v) in scan.mz.iter().enumerate() {
            let mz = if scan.mz.len() == MZ_BINS { axis[b] } else { b as f64 };
            rows.push((t, mz, *v));
        }
    }
    rows.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut w = std::io::BufWriter::new(fs::File::create(path)?);
    writeln!(w, "t,mz,intensity")?;
    for (t, mz, v) in &rows {
        writeln!(w, "{t},{mz},{v}")?;
    }
    w.flush()?;
    Ok(rows.len())
}

pub fn read_mesh(path: &Path) -> Result<Vec<(f64, f64, f64)>> {
    let text = fs::read_to_string(path)?;
    let mut rows = Vec::new();
    for (n, line) in text.lines().enumerate().skip(1) {
        let parse = |s: Option<&str>| -> Result<f64> {
            s.and_then(|v| v.trim().parse().ok())
                .ok_or_else(|| Error::Format(format!("mesh line {} is malformed", n + 1)))
        };
        let mut parts = line.split(',');
        rows.push((parse(parts.next())?, parse(parts.next())?, parse(parts.next())?));
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionScores {
    /// Fraction of records whose predicted set equals the true set.
    pub accuracy: f64,
    /// Indexed by [`Solute::index`].
    pub per_class: Vec<ClassScores>,
    pub macro_f1: f64,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn detection_scores(predictions: &[MultiHot], labels: &[MultiHot]) -> Result<DetectionScores> {
    if predictions.len() != labels.len() {
        return Err(Error::contract(format!(
            "{} predictions for {} labels",
            predictions.len(),
            labels.len()
        )));
    }
    let exact = predictions.iter().zip(labels).filter(|(p, l)| p == l).count();
    let per_class: Vec<ClassScores> = (0..6)
        .map(|k| {
            let (mut tp, mut fp, mut fne) = (0, 0, 0);
            for (p, l) in predictions.iter().zip(labels) {
                match (p[k], l[k]) {
                    (true, true) => tp += 1,
                    (true, false) => fp += 1,
                    (false, true) => fne += 1,
                    _ => {}
                }
            }
            let precision = ratio(tp, tp + fp);
            let recall = ratio(tp, tp + fne);
            let f1 = if precision + recall > 0.0 {
                2.0 * precision * recall / (precision + recall)
            } else {
                0.0
            };
            ClassScores { precision, recall, f1 }
        })
        .collect();
    let macro_f1 = per_class.iter().map(|c| c.f1).sum::<f64>() / 6.0;
    Ok(DetectionScores {
        accuracy: ratio(exact, predictions.len()),
        per_class,
        macro_f1,
    })
}

/// Header of the data-volume report.
pub fn table5_header() -> String {
    let mut h = String::from("train_size,accuracy");
    for s in Solute::REPORT_ORDER {
        let n = s.name();
        h.push_str(&format!(",{n}_P,{n}_R,{n}_F1"));
    }
    h.push_str(",avg_F1");
    h
}

pub fn table5_row(train_size: usize, scores: &DetectionScores) -> String {
    let mut r = format!("{train_size},{:.4}", scores.accuracy);
    for s in Solute::REPORT_ORDER {
        let c = scores.per_class[s.index()];
        r.push_str(&format!(",{:.4},{:.4},{:.4}", c.precision, c.recall, c.f1));
    }
    r.push_str(&format!(",{:.4}", scores.macro_f1));
    r
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowStatus {
    Ok,
    AbsentReal,
    AbsentGen,
}

impl RowStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RowStatus::Ok => "ok",
            RowStatus::AbsentReal => "absent_real",
            RowStatus::AbsentGen => "absent_gen",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionRow {
    pub condition: String,
    pub status: RowStatus,
    pub pcc: Option<f64>,
    pub cosine: Option<f64>,
    pub peaks_real: Option<usize>,
    pub peaks_gen: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MsRow {
    pub condition: String,
    pub t: usize,
    pub minutes: Option<f64>,
    pub status: RowStatus,
    pub pcc: Option<f64>,
    pub cosine: Option<f64>,
    pub peaks_real: Option<usize>,
    pub peaks_gen: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    pub conditions: Vec<ConditionRow>,
    pub ms: Vec<MsRow>,
}

fn group<'a>(set: &'a [Spectrum]) -> Result<Vec<(ConditionLabel, Vec<&'a Spectrum>)>> {
    let mut groups: Vec<(ConditionLabel, Vec<&Spectrum>)> = Vec::new();
    for s in set {
        let label = s
            .condition
            .as_ref()
            .ok_or_else(|| Error::data("every compared spectrum needs a condition label"))?;
        match groups.iter_mut().find(|(l, _)| l == label) {
            Some((_, v)) => v.push(s),
            None => groups.push((label.clone(), vec![s])),
        }
    }
    Ok(groups)
}

fn class_mean(members: &[&Spectrum]) -> Result<Vec<f64>> {
    mean_vector(members.iter().map(|s| s.tic.as_slice()))
        .ok_or_else(|| Error::data("spectra of one condition differ in length"))
}

/// Mean scan over members, each contributing its scan nearest to `t` within `tol`.
fn mean_scan_near(members: &[&Spectrum], t: usize, tol: usize) -> Option<Vec<f64>> {
    let picked: Vec<&[f64]> = members
        .iter()
        .filter_map(|s| {
            s.scans
                .iter()
                .filter(|sc| sc.t.abs_diff(t) <= tol)
                .min_by_key(|sc| sc.t.abs_diff(t))
                .map(|sc| sc.mz.as_slice())
        })
        .collect();
    if picked.is_empty() {
        return None;
    }
    mean_vector(picked)
}

/// Apexes of the two tallest detected peaks of a class-mean TIC, in index order.
pub fn representative_times(mean_tic: &[f64]) -> Vec<usize> {
    let mut peaks = detect_peaks(mean_tic, &PeakOptions::for_length(mean_tic.len())).peaks;
    peaks.sort_by(|a, b| b.height.total_cmp(&a.height).then(a.index.cmp(&b.index)));
    let mut times: Vec<usize> = peaks.iter().take(2).map(|p| p.index).collect();
    times.sort_unstable();
    times
}

/// Compares class-mean TICs per condition, and class-mean mass scans at
/// representative times.
///
/// `times` maps a condition to its representative indices; conditions it
/// does not cover use [`representative_times`] of the real class mean.
pub fn quality_report(
    real: &[Spectrum],
    generated: &[Spectrum],
    times: &dyn Fn(&ConditionLabel) -> Option<Vec<usize>>,
) -> Result<QualityReport> {
    let real_groups = group(real)?;
    let gen_groups = group(generated)?;
    let mut labels: Vec<ConditionLabel> = real_groups.iter().map(|(l, _)| l.clone()).collect();
    for (l, _) in &gen_groups {
        if !labels.contains(l) {
            labels.push(l.clone());
        }
    }
    let mut report = QualityReport::default();
    for label in labels {
        let r = real_groups.iter().find(|(l, _)| *l == label).map(|(_, m)| m);
        let g = gen_groups.iter().find(|(l, _)| *l == label).map(|(_, m)| m);
        let condition = label.to_string();
        let (r, g) = match (r, g) {
            (Some(r), Some(g)) => (r, g),
            (r, _) => {
                report.conditions.push(ConditionRow {
                    condition,
                    status: if r.is_none() { RowStatus::AbsentReal } else { RowStatus::AbsentGen },
                    pcc: None,
                    cosine: None,
                    peaks_real: None,
                    peaks_gen: None,
                });
                continue;
            }
        };
        let mr = class_mean(r)?;
        let mg = class_mean(g)?;
        let opts = PeakOptions::for_length(mr.len());
        let (nr, ng) = peak_count_match(&mr, &mg, &opts);
        report.conditions.push(ConditionRow {
            condition: condition.clone(),
            status: RowStatus::Ok,
            pcc: pearson(&mr, &mg).ok(),
            cosine: cosine_similarity(&mr, &mg).ok(),
            peaks_real: Some(nr),
            peaks_gen: Some(ng),
        });

        let axis = r[0].t_minutes;
        let tol = 2 * opts.min_distance;
        let ms_opts = PeakOptions::new(0.05, 1)?;
        for t in times(&label).unwrap_or_else(|| representative_times(&mr)) {
            let (sr, sg) = (mean_scan_near(r, t, tol), mean_scan_near(g, t, tol));
            let status = match (&sr, &sg) {
                (None, _) => RowStatus::AbsentReal,
                (_, None) => RowStatus::AbsentGen,
                _ => RowStatus::Ok,
            };
            let mut row = MsRow {
                condition: condition.clone(),
                t,
                minutes: axis.map(|a| a.minutes(t)),
                status,
                pcc: None,
                cosine: None,
                peaks_real: None,
                peaks_gen: None,
            };
            if let (Some(a), Some(b)) = (sr, sg) {
                if a.len() == b.len() {
                    row.pcc = pearson(&a, &b).ok();
                    row.cosine = cosine_similarity(&a, &b).ok();
                    let (pr, pg) = peak_count_match(&a, &b, &ms_opts);
                    row.peaks_real = Some(pr);
                    row.peaks_gen = Some(pg);
                }
            }
            report.ms.push(row);
        }
    }
    Ok(report)
}

fn opt_f(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| format!("{x:.4}"))
}

fn peaks_cell(r: Option<usize>, g: Option<usize>) -> String {
    match (r, g) {
        (Some(r), Some(g)) => format!("{r}/{g}"),
        _ => "NA".into(),
    }
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "\"\""))
}

impl QualityReport {
    pub fn conditions_csv(&self) -> String {
        let mut out = String::from("condition,pcc,cosine,peaks_real_gen,status\n");
        for r in &self.conditions {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                quote(&r.condition),
                opt_f(r.pcc),
                opt_f(r.cosine),
                peaks_cell(r.peaks_real, r.peaks_gen),
                r.status.as_str()
            ));
        }
        out
    }

    pub fn ms_csv(&self) -> String {
        let mut out = String::from("condition,t_index,t_minutes,pcc,cosine,peaks_real_gen,status\n");
        for r in &self.ms {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                quote(&r.condition),
                r.t,
                r.minutes.map_or_else(|| "NA".to_string(), |m| format!("{m:.3}")),
                opt_f(r.pcc),
                opt_f(r.cosine),
                peaks_cell(r.peaks_real, r.peaks_gen),
                r.status.as_str()
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulator::{make_dataset, simulate_spectrum, InterferenceModel};
    use crate::spectrum::{Scan, Solvent};
    use proptest::prelude::*;

    #[test]
    fn cosine_examples() {
        assert!((cosine_similarity(&[1.0, 2.0], &[1.0, 2.0]).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(cosine_similarity(&[1.0, 0.0], &[0.0, 3.0]).unwrap(), 0.0);
        let c = cosine_similarity(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap();
        assert!((c - 10.0 / 14.0).abs() < 1e-15);
        assert!(matches!(cosine_similarity(&[0.0; 3], &[1.0; 3]), Err(Error::UndefinedMetric(_))));
        assert!(matches!(cosine_similarity(&[1.0; 3], &[1.0; 2]), Err(Error::Contract(_))));
    }

    #[test]
    fn pearson_examples() {
        let a = [1.0, 2.0, 3.0, 4.0];
        assert!((pearson(&a, &a).unwrap() - 1.0).abs() < 1e-15);
        let neg: Vec<f64> = a.iter().map(|v| -v).collect();
        assert!((pearson(&a, &neg).unwrap() + 1.0).abs() < 1e-15);
        let b = [2.0, 4.0, 5.0, 9.0];
        // n Σab − Σa Σb over the root of the matching variance terms
        let (sa, sb, sab, saa, sbb): (f64, f64, f64, f64, f64) = (10.0, 20.0, 61.0, 30.0, 126.0);
        let want = (4.0 * sab - sa * sb) / ((4.0 * saa - sa * sa) * (4.0 * sbb - sb * sb)).sqrt();
        assert!((pearson(&a, &b).unwrap() - want).abs() < 1e-12);
        assert!(matches!(pearson(&[1.0; 4], &b), Err(Error::UndefinedMetric(_))));
    }

    #[test]
    fn detection_score_fixture() {
        use Solute::*;
        let h = |s: &[Solute]| multi_hot(s);
        let labels = vec![
            h(&[Dmmp]),
            h(&[Dmmp]),
            h(&[Dfp]),
            h(&[Dfp, Cees]),
            h(&[Cees]),
            h(&[Ceps]),
            h(&[Ceps]),
            h(&[Nitrophenol]),
            h(&[Nitrophenol]),
            h(&[Dmmp, Ceps]),
        ];
        let preds = vec![
            h(&[Dmmp]),
            h(&[Dfp]),
            h(&[Dfp]),
            h(&[Dfp]),
            h(&[Cees]),
            h(&[Ceps]),
            h(&[Ceps, Cees]),
            h(&[Nitrophenol]),
            h(&[]),
            h(&[Dmmp, Ceps]),
        ];
        let s = detection_scores(&preds, &labels).unwrap();
        // exact matches: records 0, 2, 4, 5, 7, 9
        assert!((s.accuracy - 0.6).abs() < 1e-15);
        // DMMP: tp 2, fp 0, fn 1
        let d = s.per_class[Dmmp.index()];
        assert!((d.precision - 1.0).abs() < 1e-15 && (d.recall - 2.0 / 3.0).abs() < 1e-15);
        assert!((d.f1 - 0.8).abs() < 1e-15);
        // DFP: tp 2, fp 1, fn 0
        let f = s.per_class[Dfp.index()];
        assert!((f.precision - 2.0 / 3.0).abs() < 1e-15 && f.recall == 1.0);
        // 2-CEES: tp 1, fp 1, fn 1
        assert!((s.per_class[Cees.index()].f1 - 0.5).abs() < 1e-15);
        // 2-CEPS: tp 3, fp 0, fn 0
        assert_eq!(s.per_class[Ceps.index()].f1, 1.0);
        // 4-nitrophenol: tp 1, fn 1
        assert!((s.per_class[Nitrophenol.index()].f1 - 2.0 / 3.0).abs() < 1e-15);
        // ethylenediamine: never present, never predicted
        assert_eq!(s.per_class[Ethylenediamine.index()], ClassScores { precision: 0.0, recall: 0.0, f1: 0.0 });
        let want = (0.8 + 0.8 + 0.5 + 1.0 + 2.0 / 3.0 + 0.0) / 6.0;
        assert!((s.macro_f1 - want).abs() < 1e-15);
        assert!(detection_scores(&preds[..3], &labels).is_err());
    }

    #[test]
    fn perfect_predictions() {
        let labels = vec![multi_hot(&[Solute::Dmmp]), multi_hot(&Solute::ALL)];
        let s = detection_scores(&labels, &labels).unwrap();
        assert_eq!(s.accuracy, 1.0);
        assert!(s.per_class.iter().all(|c| c.f1 == 1.0));
    }

    #[test]
    fn table5_layout() {
        let h = table5_header();
        assert!(h.starts_with("train_size,accuracy,2-CEES_P,2-CEES_R,2-CEES_F1,2-CEPS_P"));
        assert!(h.ends_with("ethylenediamine_F1,avg_F1"));
        let labels = vec![multi_hot(&[Solute::Dmmp])];
        let row = table5_row(12, &detection_scores(&labels, &labels).unwrap());
        assert_eq!(row.split(',').count(), h.split(',').count());
    }

    #[test]
    fn peak_counts() {
        let label = ConditionLabel::clean(Solvent::EtOH, &[Solute::Ceps]).unwrap();
        let a = simulate_spectrum(&label, &InterferenceModel::noiseless(), 512, 1).unwrap();
        let b = simulate_spectrum(&label, &InterferenceModel::noiseless(), 512, 2).unwrap();
        let opts = PeakOptions::for_length(512);
        assert_eq!(peak_count_match(&a.spectrum.tic, &b.spectrum.tic, &opts), (3, 3));
        assert_eq!(peak_count_match(&a.spectrum.tic, &[0.0; 512], &opts), (3, 0));
    }

    #[test]
    fn mesh_round_trip() {
        let mut s = Spectrum::new(vec![0.0, 1.0, 0.5, 0.2]).unwrap();
        s.scans = vec![
            Scan { t: 2, mz: vec![0.3, 0.1, 0.2] },
            Scan { t: 1, mz: vec![1.0, 0.123456789012345, 0.0] },
        ];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("mesh.csv");
        assert_eq!(export_mesh(&s, &path).unwrap(), 6);
        let rows = read_mesh(&path).unwrap();
        assert_eq!(rows.len(), 6);
        assert_eq!(rows[0], (1.0, 0.0, 1.0));
        assert_eq!(rows[1].2, 0.123456789012345);
        assert!(rows.windows(2).all(|w| (w[0].0, w[0].1) < (w[1].0, w[1].1)));
        s.scans.clear();
        assert!(export_mesh(&s, &path).is_err());
    }

    #[test]
    fn self_report_is_perfect() {
        let conds = ConditionLabel::evaluation_conditions();
        let data: Vec<Spectrum> = make_dataset(2, &conds, &InterferenceModel::default(), 256, 3)
            .unwrap()
            .into_iter()
            .map(|r| r.spectrum)
            .collect();
        let rep = quality_report(&data, &data, &|_| None).unwrap();
        assert_eq!(rep.conditions.len(), 16);
        for r in &rep.conditions {
            assert_eq!(r.status, RowStatus::Ok);
            assert!((r.pcc.unwrap() - 1.0).abs() < 1e-12 && (r.cosine.unwrap() - 1.0).abs() < 1e-12);
            assert_eq!(r.peaks_real, r.peaks_gen);
        }
        assert!(!rep.ms.is_empty());
        assert!(rep.ms.iter().all(|r| r.status == RowStatus::Ok && (r.cosine.unwrap() - 1.0).abs() < 1e-12));

        let partial: Vec<Spectrum> = data.iter().filter(|s| s.condition.as_ref() != Some(&conds[0])).cloned().collect();
        let rep = quality_report(&data, &partial, &|_| None).unwrap();
        assert_eq!(rep.conditions[0].status, RowStatus::AbsentGen);
        assert!(rep.conditions_csv().lines().nth(1).unwrap().ends_with("absent_gen"));
    }

    proptest! {
        #[test]
        fn similarity_symmetry_and_scale(
            a in prop::collection::vec(-10.0f64..10.0, 3..40),
            seed in 0u64..1000,
            c in 0.1f64..10.0,
            shift in -5.0f64..5.0,
        ) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let b: Vec<f64> = a.iter().map(|_| rng.random_range(-10.0..10.0)).collect();
            let cab = cosine_similarity(&a, &b).unwrap();
            prop_assert!((cab - cosine_similarity(&b, &a).unwrap()).abs() < 1e-12);
            let scaled: Vec<f64> = b.iter().map(|v| c * v).collect();
            prop_assert!((cab - cosine_similarity(&a, &scaled).unwrap()).abs() < 1e-12);
            let pab = pearson(&a, &b).unwrap();
            prop_assert!((pab - pearson(&b, &a).unwrap()).abs() < 1e-12);
            let affine: Vec<f64> = b.iter().map(|v| c * v + shift).collect();
            prop_assert!((pab - pearson(&a, &affine).unwrap()).abs() < 1e-10);
            prop_assert!((-1.0..=1.0).contains(&pab) && (-1.0..=1.0).contains(&cab));
        }

        #[test]
        fn scores_are_bounded(bits in prop::collection::vec((0u8..64, 0u8..64), 1..30)) {
            let to = |b: u8| -> MultiHot { std::array::from_fn(|k| b >> k & 1 == 1) };
            let preds: Vec<MultiHot> = bits.iter().map(|p| to(p.0)).collect();
            let labels: Vec<MultiHot> = bits.iter().map(|p| to(p.1)).collect();
            let s = detection_scores(&preds, &labels).unwrap();
            prop_assert!((0.0..=1.0).contains(&s.accuracy));
            let best = s.per_class.iter().map(|c| c.f1).fold(0.0, f64::max);
            prop_assert!(s.macro_f1 <= best + 1e-15);
        }
    }
}
