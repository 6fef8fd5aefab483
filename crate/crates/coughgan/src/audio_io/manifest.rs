//! Crowdsourced-manifest CSV ingestion and quality filtering.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// Self-reported status column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Status {
    Healthy,
    Symptomatic,
    Covid19,
}

impl Status {
    pub fn parse(s: &str) -> Option<Status> {
        match s {
            "healthy" => Some(Status::Healthy),
            "symptomatic" => Some(Status::Symptomatic),
            "COVID-19" => Some(Status::Covid19),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Healthy => "healthy",
            Status::Symptomatic => "symptomatic",
            Status::Covid19 => "COVID-19",
        }
    }
}

/// Semi-supervised relabeling column; binary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum SslStatus {
    Healthy,
    Covid19,
}

impl SslStatus {
    pub fn parse(s: &str) -> Option<SslStatus> {
        match s {
            "healthy" => Some(SslStatus::Healthy),
            "COVID-19" => Some(SslStatus::Covid19),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            SslStatus::Healthy => "healthy",
            SslStatus::Covid19 => "COVID-19",
        }
    }

    /// Class index used by the models: healthy = 0, COVID-19 = 1.
    pub fn class_index(&self) -> usize {
        match self {
            SslStatus::Healthy => 0,
            SslStatus::Covid19 => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestRecord {
    pub uuid: String,
    /// Audio file beside the manifest, named by uuid.
    pub audio_path: PathBuf,
    pub cough_detected: f64,
    pub status: Option<Status>,
    pub status_ssl: Option<SslStatus>,
    pub snr: Option<f64>,
}

impl ManifestRecord {
    /// The label used for stratification and training: the relabeled column
    /// when present, else the self-reported one.
    pub fn class_label(&self) -> Option<&'static str> {
        self.status_ssl
            .map(|s| s.as_str())
            .or_else(|| self.status.map(|s| s.as_str()))
    }
}

/// Loads the manifest; one record per data row, order preserved. Unknown
/// columns are ignored; empty cells become absent optionals.
pub fn load_manifest(csv_path: &Path) -> Result<Vec<ManifestRecord>> {
    let dir = csv_path.parent().unwrap_or_else(|| Path::new("."));
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(csv_path)
        .map_err(|e| Error::Schema(format!("cannot open manifest {}: {e}", csv_path.display())))?;

    let headers = reader
        .headers()
        .map_err(|e| Error::Schema(format!("manifest has no header row: {e}")))?
        .clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let uuid_col = col("uuid").ok_or_else(|| Error::Schema("missing column uuid".into()))?;
    let cough_col = col("cough_detected")
        .ok_or_else(|| Error::Schema("missing column cough_detected".into()))?;
    let status_col = col("status");
    let ssl_col = col("status_SSL");
    let snr_col = col("SNR");

    let mut records = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (i, row) in reader.records().enumerate() {
        let data_row = i + 1;
        let row = row.map_err(|e| Error::Row {
            row: data_row,
            message: e.to_string(),
        })?;
        let field = |idx: Option<usize>| idx.and_then(|c| row.get(c)).filter(|s| !s.is_empty());

        let uuid = field(Some(uuid_col))
            .ok_or_else(|| Error::Row {
                row: data_row,
                message: "empty uuid".into(),
            })?
            .to_string();
        if !seen.insert(uuid.clone()) {
            return Err(Error::Row {
                row: data_row,
                message: format!("duplicate uuid {uuid}"),
            });
        }
        let cough_detected: f64 = field(Some(cough_col))
            .ok_or_else(|| Error::Row {
                row: data_row,
                message: "empty cough_detected".into(),
            })?
            .parse()
            .map_err(|_| Error::Row {
                row: data_row,
                message: "unparsable cough_detected".into(),
            })?;
        if !(0.0..=1.0).contains(&cough_detected) {
            return Err(Error::Row {
                row: data_row,
                message: format!("cough_detected {cough_detected} outside [0,1]"),
            });
        }
        let status = match field(status_col) {
            None => None,
            Some(s) => Some(Status::parse(s).ok_or_else(|| Error::Row {
                row: data_row,
                message: format!("unknown status {s:?}"),
            })?),
        };
        let status_ssl = match field(ssl_col) {
            None => None,
            Some(s) => Some(SslStatus::parse(s).ok_or_else(|| Error::Row {
                row: data_row,
                message: format!("unknown status_SSL {s:?}"),
            })?),
        };
        let snr = match field(snr_col) {
            None => None,
            Some(s) => Some(s.parse().map_err(|_| Error::Row {
                row: data_row,
                message: "unparsable SNR".into(),
            })?),
        };

        records.push(ManifestRecord {
            audio_path: dir.join(format!("{uuid}.wav")),
            uuid,
            cough_detected,
            status,
            status_ssl,
            snr,
        });
    }
    Ok(records)
}

/// Keeps records with `cough_detected >= min_cough_detected` (the boundary is
/// inclusive) and, when `require_ssl` is set, a present status_SSL label.
/// Order is preserved.
pub fn filter_manifest(
    records: &[ManifestRecord],
    min_cough_detected: f64,
    require_ssl: bool,
) -> Vec<ManifestRecord> {
    records
        .iter()
        .filter(|r| r.cough_detected >= min_cough_detected)
        .filter(|r| !require_ssl || r.status_ssl.is_some())
        .cloned()
        .collect()
}

pub const HISTOGRAM_BINS: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestStats {
    pub total: usize,
    pub class_counts: BTreeMap<String, usize>,
    pub unlabeled: usize,
    /// cough_detected histogram over [0,1] in 10 equal bins, last inclusive.
    pub cough_detected_histogram: [usize; HISTOGRAM_BINS],
}

pub fn manifest_stats(records: &[ManifestRecord]) -> ManifestStats {
    let mut class_counts = BTreeMap::new();
    let mut unlabeled = 0;
    let mut histogram = [0usize; HISTOGRAM_BINS];
    for r in records {
        match r.class_label() {
            Some(label) => *class_counts.entry(label.to_string()).or_insert(0) += 1,
            None => unlabeled += 1,
        }
        let bin = ((r.cough_detected * HISTOGRAM_BINS as f64) as usize).min(HISTOGRAM_BINS - 1);
        histogram[bin] += 1;
    }
    ManifestStats {
        total: records.len(),
        class_counts,
        unlabeled,
        cough_detected_histogram: histogram,
    }
}

impl fmt::Display for ManifestStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "records: {}", self.total)?;
        for (label, count) in &self.class_counts {
            writeln!(f, "  {label}: {count}")?;
        }
        if self.unlabeled > 0 {
            writeln!(f, "  (unlabeled): {}", self.unlabeled)?;
        }
        writeln!(f, "cough_detected histogram:")?;
        for (i, count) in self.cough_detected_histogram.iter().enumerate() {
            let lo = i as f64 / HISTOGRAM_BINS as f64;
            let hi = lo + 1.0 / HISTOGRAM_BINS as f64;
            writeln!(f, "  [{lo:.1}, {hi:.1}): {count}")?;
        }
        Ok(())
    }
}
