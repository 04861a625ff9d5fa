//! On-disk formats: JSON Lines report files, POI CSV, scan traces, place
//! profiles and submission transcripts.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::anonymity::{Decision, PoiIndex};
use crate::error::{Error, Result};
use crate::model::{Crs, GeoPoint, OwnerTag, Report, ReportPool};
use crate::place::{Fingerprint, PlaceProfile};

/// Wire form of a [`Report`]: one JSON object per line.
///
/// Exactly one of the coordinate pairs `x`/`y` (planar meters) or `lat`/`lon`
/// (degrees) must be present.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportRecord {
    pub ap_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lat: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lon: Option<f64>,
    #[serde(default)]
    pub accuracy_m: f64,
    #[serde(default)]
    pub signal_dbm: f64,
    #[serde(default)]
    pub link_quality_mbps: f64,
    #[serde(default)]
    pub ambient_aps: Vec<String>,
    #[serde(default)]
    pub timestamp: i64,
    #[serde(default)]
    pub owner: OwnerTag,
}

impl From<&Report> for ReportRecord {
    fn from(r: &Report) -> Self {
        let (x, y, lat, lon) = match r.location.crs {
            Crs::Planar => (Some(r.location.x), Some(r.location.y), None, None),
            Crs::Geographic => (None, None, Some(r.location.lat()), Some(r.location.lon())),
        };
        Self {
            ap_id: r.ap_id.clone(),
            x,
            y,
            lat,
            lon,
            accuracy_m: r.accuracy_m,
            signal_dbm: r.signal_dbm,
            link_quality_mbps: r.link_quality_mbps,
            ambient_aps: r.ambient_aps.iter().cloned().collect(),
            timestamp: r.timestamp,
            owner: r.owner,
        }
    }
}

impl TryFrom<ReportRecord> for Report {
    type Error = String;

    fn try_from(rec: ReportRecord) -> std::result::Result<Self, String> {
        let location = match (rec.x, rec.y, rec.lat, rec.lon) {
            (Some(x), Some(y), None, None) => GeoPoint::planar(x, y),
            (None, None, Some(lat), Some(lon)) => GeoPoint {
                x: lon,
                y: lat,
                crs: Crs::Geographic,
            },
            (None, None, None, None) => return Err("missing field `location` (x/y or lat/lon)".into()),
            _ => return Err("location needs exactly one of the pairs x/y or lat/lon".into()),
        };
        let report = Report {
            ap_id: rec.ap_id,
            location,
            accuracy_m: rec.accuracy_m,
            signal_dbm: rec.signal_dbm,
            link_quality_mbps: rec.link_quality_mbps,
            ambient_aps: rec.ambient_aps.into_iter().collect(),
            timestamp: rec.timestamp,
            owner: rec.owner,
        };
        report.validate().map_err(|e| e.to_string())?;
        Ok(report)
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

/// Iterates the non-blank lines of a JSONL file as `(1-based line number, value)`.
fn read_jsonl<T, F>(path: &Path, mut convert: F) -> Result<Vec<T>>
where
    F: FnMut(usize, serde_json::Value) -> Result<T>,
{
    let reader = open(path)?;
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        out.push(convert(line_no, value)?);
    }
    Ok(out)
}

fn schema<T: for<'de> Deserialize<'de>>(line: usize, value: serde_json::Value) -> Result<T> {
    serde_json::from_value(value).map_err(|e| Error::Schema {
        line,
        message: e.to_string(),
    })
}

/// Loads a JSONL report file, preserving line order.
pub fn load_reports(path: impl AsRef<Path>) -> Result<ReportPool> {
    let path = path.as_ref();
    let mut pool = ReportPool::default();
    read_jsonl(path, |line, value| {
        let rec: ReportRecord = schema(line, value)?;
        let report = Report::try_from(rec).map_err(|message| Error::Schema { line, message })?;
        pool.push(report).map_err(|e| Error::Schema {
            line,
            message: e.to_string(),
        })
    })?;
    Ok(pool)
}

pub fn save_reports(pool: &ReportPool, path: impl AsRef<Path>) -> Result<()> {
    write_reports(pool.reports(), path)
}

pub fn write_reports(reports: &[Report], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    write_reports_to(create(path)?, reports).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

/// Serializes reports as JSON lines to any writer.
pub fn write_reports_to<W: Write>(mut w: W, reports: &[Report]) -> Result<()> {
    for r in reports {
        serde_json::to_writer(&mut w, &ReportRecord::from(r))?;
        w.write_all(b"\n").map_err(|e| Error::io("<output>", e))?;
    }
    w.flush().map_err(|e| Error::io("<output>", e))
}

/// Loads a POI CSV with header `name,lat,lon` (geographic) or `name,x,y` (planar).
pub fn load_pois(path: impl AsRef<Path>) -> Result<PoiIndex> {
    let path = path.as_ref();
    let mut rdr = csv::Reader::from_reader(open(path)?);
    let headers = rdr.headers()?.clone();
    let cols: Vec<&str> = headers.iter().map(str::trim).collect();
    let crs = match cols.as_slice() {
        ["name", "lat", "lon"] => Crs::Geographic,
        ["name", "x", "y"] => Crs::Planar,
        _ => {
            return Err(Error::Schema {
                line: 1,
                message: format!("expected header name,lat,lon or name,x,y, got {}", cols.join(",")),
            })
        }
    };
    let mut pois = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec?;
        let num = |j: usize| -> Result<f64> {
            rec.get(j)
                .and_then(|s| s.trim().parse::<f64>().ok())
                .ok_or_else(|| Error::Schema {
                    line,
                    message: format!("column {} is not a number", cols[j]),
                })
        };
        let (a, b) = (num(1)?, num(2)?);
        let location = match crs {
            Crs::Planar => GeoPoint::planar(a, b),
            Crs::Geographic => GeoPoint { x: b, y: a, crs },
        };
        location.validate().map_err(|e| Error::Schema {
            line,
            message: e.to_string(),
        })?;
        pois.push((rec.get(0).unwrap_or_default().to_string(), location));
    }
    PoiIndex::new(pois)
}

#[derive(Serialize, Deserialize)]
struct ScanRecord {
    timestamp: i64,
    bssids: Vec<String>,
}

/// Loads a JSONL scan trace of `{timestamp, bssids: [...]}` records.
pub fn load_scans(path: impl AsRef<Path>) -> Result<Vec<Fingerprint>> {
    read_jsonl(path.as_ref(), |line, value| {
        let rec: ScanRecord = schema(line, value)?;
        Ok(Fingerprint::new(rec.bssids, rec.timestamp))
    })
}

pub fn write_scans(scans: &[Fingerprint], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    for s in scans {
        let rec = ScanRecord {
            timestamp: s.timestamp,
            bssids: s.bssids.iter().cloned().collect(),
        };
        serde_json::to_writer(&mut w, &rec)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn load_profile(path: impl AsRef<Path>) -> Result<PlaceProfile> {
    let path = path.as_ref();
    let profile: PlaceProfile = serde_json::from_reader(open(path)?)?;
    profile.validate()?;
    Ok(profile)
}

pub fn save_profile(profile: &PlaceProfile, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, profile)?;
    w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Serialize)]
struct TranscriptRecord<'a> {
    decision: &'static str,
    members: Vec<ReportRecord>,
    real_index: Option<usize>,
    degraded: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    note: Option<&'a str>,
}

/// Appends one decision to a submission transcript as a JSON line.
pub fn write_transcript_line<W: Write>(mut w: W, decision: &Decision) -> Result<()> {
    let rec = match decision {
        Decision::Suppressed => TranscriptRecord {
            decision: "suppressed",
            members: Vec::new(),
            real_index: None,
            degraded: false,
            note: None,
        },
        Decision::Submit(set) => TranscriptRecord {
            decision: "submit",
            members: set.members.iter().map(ReportRecord::from).collect(),
            real_index: Some(set.real_index),
            degraded: set.degraded,
            note: set.degraded.then_some("fewer than k members available"),
        },
    };
    serde_json::to_writer(&mut w, &rec)?;
    writeln!(w).map_err(|e| Error::io("<transcript>", e))
}
