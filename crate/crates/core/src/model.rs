//! Report and dataset types shared by every other module.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coordinate reference of a [`GeoPoint`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Crs {
    /// East/north offsets in meters on a local plane.
    Planar,
    /// Longitude/latitude in degrees.
    Geographic,
}

impl Crs {
    /// The distance mode that matches this reference system.
    pub fn distance_mode(self) -> DistanceMode {
        match self {
            Crs::Planar => DistanceMode::Euclidean,
            Crs::Geographic => DistanceMode::Haversine,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistanceMode {
    Euclidean,
    Haversine,
}

impl DistanceMode {
    pub fn crs(self) -> Crs {
        match self {
            DistanceMode::Euclidean => Crs::Planar,
            DistanceMode::Haversine => Crs::Geographic,
        }
    }
}

/// A location. In planar mode `x`/`y` are meters east/north; in geographic mode
/// `x` is longitude and `y` is latitude, both in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub x: f64,
    pub y: f64,
    pub crs: Crs,
}

impl GeoPoint {
    pub fn planar(x: f64, y: f64) -> Self {
        Self {
            x,
            y,
            crs: Crs::Planar,
        }
    }

    /// Geographic point from latitude and longitude in degrees.
    pub fn geographic(lat: f64, lon: f64) -> Result<Self> {
        let p = Self {
            x: lon,
            y: lat,
            crs: Crs::Geographic,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn lat(&self) -> f64 {
        self.y
    }

    pub fn lon(&self) -> f64 {
        self.x
    }

    pub fn validate(&self) -> Result<()> {
        if !self.x.is_finite() || !self.y.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "non-finite coordinates ({}, {})",
                self.x, self.y
            )));
        }
        if self.crs == Crs::Geographic
            && (!(-90.0..=90.0).contains(&self.y) || !(-180.0..=180.0).contains(&self.x))
        {
            return Err(Error::InvalidConfig(format!(
                "latitude {} / longitude {} out of range",
                self.y, self.x
            )));
        }
        Ok(())
    }
}

/// Anything that carries a location; lets the metrics run on bare points or reports.
pub trait Located {
    fn location(&self) -> &GeoPoint;
}

impl Located for GeoPoint {
    fn location(&self) -> &GeoPoint {
        self
    }
}

impl Located for Report {
    fn location(&self) -> &GeoPoint {
        &self.location
    }
}

impl<T: Located + ?Sized> Located for &T {
    fn location(&self) -> &GeoPoint {
        (**self).location()
    }
}

/// Whether a report was submitted by this device (`C`) or by someone else (`C̄`).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OwnerTag {
    #[default]
    Mine,
    Other,
}

/// One location-tagged WiFi-quality observation.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    /// BSSID of the associated access point.
    pub ap_id: String,
    pub location: GeoPoint,
    /// Positioning accuracy in meters.
    pub accuracy_m: f64,
    pub signal_dbm: f64,
    /// Observed link speed.
    pub link_quality_mbps: f64,
    /// BSSIDs visible at sensing time.
    pub ambient_aps: BTreeSet<String>,
    /// Seconds since the Unix epoch.
    pub timestamp: i64,
    pub owner: OwnerTag,
}

impl Report {
    /// A report carrying only a location, as used by the simulations.
    pub fn synthetic(location: GeoPoint, owner: OwnerTag) -> Self {
        Self {
            ap_id: "sim".to_string(),
            location,
            accuracy_m: 0.0,
            signal_dbm: 0.0,
            link_quality_mbps: 0.0,
            ambient_aps: BTreeSet::new(),
            timestamp: 0,
            owner,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.location.validate()?;
        if !(self.accuracy_m >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "accuracy_m must be non-negative, got {}",
                self.accuracy_m
            )));
        }
        if !(self.link_quality_mbps >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "link_quality_mbps must be non-negative, got {}",
                self.link_quality_mbps
            )));
        }
        if !self.signal_dbm.is_finite() {
            return Err(Error::InvalidConfig("signal_dbm must be finite".into()));
        }
        Ok(())
    }
}

/// The crowdsourced dataset `Ω`, split by owner into `C` (mine) and `C̄` (others').
///
/// The split is derived from [`Report::owner`] alone. All reports share one [`Crs`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReportPool {
    reports: Vec<Report>,
    mine: Vec<usize>,
    others: Vec<usize>,
}

impl ReportPool {
    pub fn new(reports: Vec<Report>) -> Result<Self> {
        let mut pool = Self::default();
        for r in reports {
            pool.push(r)?;
        }
        Ok(pool)
    }

    /// Appends a report, keeping the pool homogeneous in coordinate reference.
    pub fn push(&mut self, report: Report) -> Result<()> {
        if let Some(crs) = self.crs() {
            if report.location.crs != crs {
                return Err(Error::CrsMismatch {
                    expected: crs,
                    found: report.location.crs,
                });
            }
        }
        let idx = self.reports.len();
        match report.owner {
            OwnerTag::Mine => self.mine.push(idx),
            OwnerTag::Other => self.others.push(idx),
        }
        self.reports.push(report);
        Ok(())
    }

    pub fn reports(&self) -> &[Report] {
        &self.reports
    }

    pub fn get(&self, idx: usize) -> Option<&Report> {
        self.reports.get(idx)
    }

    /// Pool indices of this user's own reports (`C`), in pool order.
    pub fn mine(&self) -> &[usize] {
        &self.mine
    }

    /// Pool indices of other users' reports (`C̄`), in pool order.
    pub fn others(&self) -> &[usize] {
        &self.others
    }

    pub fn len(&self) -> usize {
        self.reports.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reports.is_empty()
    }

    /// The shared coordinate reference, or `None` for an empty pool.
    pub fn crs(&self) -> Option<Crs> {
        self.reports.first().map(|r| r.location.crs)
    }

    pub fn into_reports(self) -> Vec<Report> {
        self.reports
    }
}

/// Normalization and distance settings for the exposure metrics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsConfig {
    /// Normalizing diameter `D_max` in meters.
    pub d_max: f64,
    pub distance_mode: DistanceMode,
}

impl MetricsConfig {
    pub fn new(d_max: f64, distance_mode: DistanceMode) -> Result<Self> {
        let cfg = Self {
            d_max,
            distance_mode,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.d_max > 0.0) || !self.d_max.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "d_max must be a positive finite number of meters, got {}",
                self.d_max
            )));
        }
        Ok(())
    }
}
