//! Spectra, condition labels, peak picking and exploratory statistics.

mod label;
mod peaks;

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use label::{ConditionLabel, Interference, Solute, Solvent};
pub use peaks::{detect_peaks, peak_stats, Peak, PeakList, PeakOptions, PeakStats};

use crate::error::{Error, Result};

/// One mass scan taken at a retention index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scan {
    pub t: usize,
    pub mz: Vec<f64>,
}

/// Linear mapping from retention index to minutes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RetentionAxis {
    pub start: f64,
    pub step: f64,
}

impl RetentionAxis {
    pub fn minutes(&self, index: usize) -> f64 {
        self.start + self.step * index as f64
    }
}

/// Total-ion chromatogram plus optional mass scans.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Spectrum {
    pub tic: Vec<f64>,
    #[serde(default)]
    pub scans: Vec<Scan>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_minutes: Option<RetentionAxis>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub condition: Option<ConditionLabel>,
}

impl Spectrum {
    pub fn new(tic: Vec<f64>) -> Result<Self> {
        let s = Self {
            tic,
            scans: Vec::new(),
            t_minutes: None,
            condition: None,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn len(&self) -> usize {
        self.tic.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tic.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.tic.len() < 2 {
            return Err(Error::contract("a spectrum needs at least two retention points"));
        }
        if self.tic.iter().any(|v| !v.is_finite()) {
            return Err(Error::contract("non-finite TIC intensity"));
        }
        let m = self.scans.first().map(|s| s.mz.len());
        for scan in &self.scans {
            if scan.t >= self.tic.len() {
                return Err(Error::contract(format!(
                    "scan retention index {} outside [0, {})",
                    scan.t,
                    self.tic.len()
                )));
            }
            if Some(scan.mz.len()) != m || scan.mz.iter().any(|v| !v.is_finite()) {
                return Err(Error::contract("mass scans must share a finite m/z axis"));
            }
        }
        Ok(())
    }

    pub fn mz_bins(&self) -> Option<usize> {
        self.scans.first().map(|s| s.mz.len())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let s: Spectrum = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        fs::write(path, serde_json::to_vec(self)?)?;
        Ok(())
    }

    /// Two-column CSV (`index,intensity`) of the TIC.
    pub fn write_tic_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "index,intensity")?;
        for (i, v) in self.tic.iter().enumerate() {
            writeln!(w, "{i},{v}")?;
        }
        Ok(())
    }
}

/// `(x - min) / (max - min)`; a constant input maps to zeros.
pub fn min_max_normalize(x: &[f64]) -> Vec<f64> {
    let (lo, hi) = x
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let range = hi - lo;
    if x.is_empty() || !(range > 0.0) {
        return vec![0.0; x.len()];
    }
    x.iter().map(|v| (v - lo) / range).collect()
}

pub fn mean(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    x.iter().sum::<f64>() / x.len() as f64
}

/// Element-wise mean of equally long vectors.
pub fn mean_vector<'a>(rows: impl IntoIterator<Item = &'a [f64]>) -> Option<Vec<f64>> {
    let mut acc: Option<Vec<f64>> = None;
    let mut n = 0usize;
    for r in rows {
        match acc.as_mut() {
            None => acc = Some(r.to_vec()),
            Some(a) => {
                if a.len() != r.len() {
                    return None;
                }
                a.iter_mut().zip(r).for_each(|(a, b)| *a += b);
            }
        }
        n += 1;
    }
    acc.map(|mut a| {
        a.iter_mut().for_each(|v| *v /= n as f64);
        a
    })
}
