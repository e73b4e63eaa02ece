//! Append-only record store in a single JSON-lines file.
//!
//! Every insert appends one complete line and syncs it; opening the store
//! replays the file into an in-memory table. A torn final line (no trailing
//! newline) from an interrupted write is discarded on open.

use std::fmt;
use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::{DateTime, NaiveDateTime, SecondsFormat, TimeZone, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectrum::{ConditionLabel, Spectrum};

pub const DB_ENV: &str = "GCMS_DB";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataType {
    Real,
    Synthetic,
}

impl fmt::Display for DataType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DataType::Real => "real",
            DataType::Synthetic => "synthetic",
        })
    }
}

impl FromStr for DataType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "real" => Ok(DataType::Real),
            "synthetic" => Ok(DataType::Synthetic),
            other => Err(Error::Query(format!("unknown data type '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumRecord {
    pub id: u64,
    pub data_type: DataType,
    /// Interference tag.
    pub condition: String,
    pub solvent: String,
    /// Comma-joined solute names.
    pub solute: String,
    /// ISO-8601 UTC, second precision.
    pub date: String,
    /// Spectrum JSON path relative to the store's directory.
    pub file_name: String,
}

impl SpectrumRecord {
    pub fn solutes(&self) -> impl Iterator<Item = &str> {
        self.solute.split(',').map(str::trim)
    }
}

/// Insert payload; the store assigns the id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NewRecord {
    pub data_type: DataType,
    pub condition: String,
    pub solvent: String,
    pub solute: String,
    /// `None` stamps the current time.
    pub date: Option<String>,
    pub file_name: String,
}

impl NewRecord {
    pub fn for_label(data_type: DataType, label: &ConditionLabel, file_name: impl Into<String>) -> Self {
        Self {
            data_type,
            condition: label.interference().to_string(),
            solvent: label.solvent().to_string(),
            solute: label.solute_field(),
            date: None,
            file_name: file_name.into(),
        }
    }
}

/// Current UTC time, or `SOURCE_DATE_EPOCH` when that variable is set.
pub fn timestamp_now() -> String {
    let now = std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|s| s.trim().parse::<i64>().ok())
        .and_then(|secs| Utc.timestamp_opt(secs, 0).single())
        .unwrap_or_else(Utc::now);
    format_timestamp(now)
}

pub fn format_timestamp(t: DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::Secs, true)
}

/// Accepts RFC 3339 timestamps, naive `YYYY-MM-DDTHH:MM:SS` (UTC) and bare dates.
pub fn parse_timestamp(s: &str) -> Result<DateTime<Utc>> {
    let s = s.trim();
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Ok(t.with_timezone(&Utc));
    }
    if let Ok(t) = NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M:%S") {
        return Ok(t.and_utc());
    }
    if let Ok(d) = chrono::NaiveDate::parse_from_str(s, "%Y-%m-%d") {
        return Ok(d.and_hms_opt(0, 0, 0).expect("midnight").and_utc());
    }
    Err(Error::Query(format!("'{s}' is not an ISO-8601 timestamp")))
}

/// Conjunctive record predicates; `None` matches everything.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RecordFilter {
    pub data_type: Option<DataType>,
    pub condition: Option<String>,
    pub solvent: Option<String>,
    /// Matches records whose solute list contains this name.
    pub solute: Option<String>,
    pub date_from: Option<String>,
    pub date_to: Option<String>,
}

impl RecordFilter {
    pub fn data_type(mut self, t: DataType) -> Self {
        self.data_type = Some(t);
        self
    }

    pub fn solvent(mut self, s: impl Into<String>) -> Self {
        self.solvent = Some(s.into());
        self
    }

    pub fn solute(mut self, s: impl Into<String>) -> Self {
        self.solute = Some(s.into());
        self
    }

    pub fn condition(mut self, s: impl Into<String>) -> Self {
        self.condition = Some(s.into());
        self
    }

    pub fn dates(mut self, from: Option<&str>, to: Option<&str>) -> Self {
        self.date_from = from.map(str::to_string);
        self.date_to = to.map(str::to_string);
        self
    }
}

#[derive(Debug)]
pub struct Store {
    path: PathBuf,
    root: PathBuf,
    records: Vec<SpectrumRecord>,
    file: File,
}

impl Store {
    /// Opens or creates the store file and replays it.
    pub fn open(path: &Path) -> Result<Self> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        let text = if path.exists() { fs::read_to_string(path)? } else { String::new() };
        let mut records: Vec<SpectrumRecord> = Vec::new();
        let mut valid_len = 0usize;
        for line in text.split_inclusive('\n') {
            let complete = line.ends_with('\n');
            let body = line.trim_end();
            if body.is_empty() {
                valid_len += line.len();
                continue;
            }
            match serde_json::from_str::<SpectrumRecord>(body) {
                Ok(rec) => {
                    if records.last().is_some_and(|r| r.id >= rec.id) {
                        return Err(Error::Format(format!("record ids out of order at id {}", rec.id)));
                    }
                    records.push(rec);
                    valid_len += line.len();
                }
                Err(_) if !complete => break,
                Err(e) => return Err(Error::Format(format!("corrupt store line: {e}"))),
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        if valid_len < text.len() {
            file.set_len(valid_len as u64)?;
        }
        let root = path
            .parent()
            .filter(|d| !d.as_os_str().is_empty())
            .map_or_else(|| PathBuf::from("."), Path::to_path_buf);
        Ok(Self {
            path: path.to_path_buf(),
            root,
            records,
            file,
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Directory that record file names are relative to.
    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn resolve(&self, rec: &SpectrumRecord) -> PathBuf {
        self.root.join(&rec.file_name)
    }

    pub fn insert(&mut self, rec: NewRecord) -> Result<u64> {
        let target = self.root.join(&rec.file_name);
        if !target.is_file() {
            return Err(Error::MissingFile(target));
        }
        let date = match rec.date {
            Some(d) => {
                parse_timestamp(&d).map_err(|_| Error::data(format!("record date '{d}' is not ISO-8601")))?;
                d
            }
            None => timestamp_now(),
        };
        let id = self.records.last().map_or(1, |r| r.id + 1);
        let stored = SpectrumRecord {
            id,
            data_type: rec.data_type,
            condition: rec.condition,
            solvent: rec.solvent,
            solute: rec.solute,
            date,
            file_name: rec.file_name,
        };
        let mut line = serde_json::to_string(&stored)?;
        line.push('\n');
        self.file.write_all(line.as_bytes())?;
        self.file.sync_data()?;
        self.records.push(stored);
        Ok(id)
    }

    /// Writes `spectrum` under the store root and records it.
    pub fn insert_spectrum(&mut self, data_type: DataType, spectrum: &Spectrum, file_name: &str) -> Result<u64> {
        let label = spectrum
            .condition
            .as_ref()
            .ok_or_else(|| Error::data("stored spectra need a condition label"))?;
        spectrum.save(&self.root.join(file_name))?;
        self.insert(NewRecord::for_label(data_type, label, file_name))
    }

    pub fn get(&self, id: u64) -> Option<&SpectrumRecord> {
        self.records
            .binary_search_by_key(&id, |r| r.id)
            .ok()
            .map(|i| &self.records[i])
    }

    pub fn all(&self) -> &[SpectrumRecord] {
        &self.records
    }

    pub fn query(&self, filter: &RecordFilter) -> Result<Vec<SpectrumRecord>> {
        let from = filter.date_from.as_deref().map(parse_timestamp).transpose()?;
        let to = filter.date_to.as_deref().map(parse_timestamp).transpose()?;
        if let (Some(a), Some(b)) = (from, to) {
            if a > b {
                return Err(Error::Query("date range ends before it starts".into()));
            }
        }
        let eq = |want: &Option<String>, have: &str| want.as_deref().is_none_or(|w| w.eq_ignore_ascii_case(have));
        let mut out = Vec::new();
        for r in &self.records {
            if filter.data_type.is_some_and(|t| t != r.data_type)
                || !eq(&filter.condition, &r.condition)
                || !eq(&filter.solvent, &r.solvent)
            {
                continue;
            }
            if let Some(s) = &filter.solute {
                if !r.solutes().any(|x| x.eq_ignore_ascii_case(s)) {
                    continue;
                }
            }
            if from.is_some() || to.is_some() {
                let d = parse_timestamp(&r.date)?;
                if from.is_some_and(|f| d < f) || to.is_some_and(|t| d > t) {
                    continue;
                }
            }
            out.push(r.clone());
        }
        Ok(out)
    }

    pub fn load_spectrum(&self, rec: &SpectrumRecord) -> Result<Spectrum> {
        let path = self.resolve(rec);
        if !path.is_file() {
            return Err(Error::MissingFile(path));
        }
        Spectrum::load(&path)
    }

    pub fn export_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let q = |s: &str| format!("\"{}\"", s.replace('"', "\"\""));
        writeln!(w, "id,data_type,condition,solvent,solute,date,file_name")?;
        for r in &self.records {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                r.id,
                r.data_type,
                q(&r.condition),
                q(&r.solvent),
                q(&r.solute),
                r.date,
                q(&r.file_name)
            )?;
        }
        Ok(())
    }
}
