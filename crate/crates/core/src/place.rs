//! Private-place learning and detection from ambient WiFi fingerprints.
//!
//! A candidate place starts as the BSSID set of a scan taken somewhere unknown.
//! While later scans keep matching it (similarity ≥ Δ) the candidate shrinks to
//! the intersection; once the matched span exceeds Δ_L it becomes a private
//! place. A scan that matches a learned place is "in a private place", and
//! crowdsensed reports sensed there are never submitted.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type BssidSet = BTreeSet<String>;

/// The BSSIDs visible in one WiFi scan.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fingerprint {
    pub bssids: BssidSet,
    /// Seconds since the Unix epoch.
    pub timestamp: i64,
}

impl Fingerprint {
    pub fn new<I, S>(bssids: I, timestamp: i64) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            bssids: bssids.into_iter().map(Into::into).collect(),
            timestamp,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaceConfig {
    /// Similarity threshold Δ in `[0, 1]`.
    pub delta: f64,
    /// Minimum continuous stay Δ_L before a candidate is promoted, in seconds.
    pub delta_l_seconds: i64,
}

impl Default for PlaceConfig {
    fn default() -> Self {
        Self {
            delta: 0.2,
            delta_l_seconds: 3600,
        }
    }
}

impl PlaceConfig {
    pub fn new(delta: f64, delta_l_seconds: i64) -> Result<Self> {
        let cfg = Self {
            delta,
            delta_l_seconds,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.delta) {
            return Err(Error::InvalidConfig(format!(
                "delta must lie in [0, 1], got {}",
                self.delta
            )));
        }
        if self.delta_l_seconds <= 0 {
            return Err(Error::InvalidConfig(format!(
                "delta-l must be positive, got {}",
                self.delta_l_seconds
            )));
        }
        Ok(())
    }
}

/// A place being learned.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Candidate {
    pub bssids: BssidSet,
    /// Timestamp of the scan that started the current matched run.
    pub started_at: i64,
}

/// The learned private places plus in-progress learning state.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlaceProfile {
    pub places: Vec<BssidSet>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidate: Option<Candidate>,
    /// Timestamp of the last observed scan, for ordering checks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub last_timestamp: Option<i64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    InPrivatePlace,
    NotPrivate,
}

/// `|scan ∩ profile| / |profile|`.
pub fn similarity(profile: &BssidSet, scan: &BssidSet) -> Result<f64> {
    if profile.is_empty() {
        return Err(Error::EmptyFingerprint);
    }
    Ok(overlap(profile, scan))
}

fn overlap(profile: &BssidSet, scan: &BssidSet) -> f64 {
    let (small, large) = if profile.len() <= scan.len() {
        (profile, scan)
    } else {
        (scan, profile)
    };
    let common = small.iter().filter(|b| large.contains(*b)).count();
    common as f64 / profile.len() as f64
}

impl PlaceProfile {
    pub fn validate(&self) -> Result<()> {
        let empty_place = self.places.iter().any(BTreeSet::is_empty);
        let empty_candidate = self.candidate.as_ref().is_some_and(|c| c.bssids.is_empty());
        if empty_place || empty_candidate {
            return Err(Error::EmptyFingerprint);
        }
        Ok(())
    }

    /// Index of the first learned place matching `scan`, if any.
    pub fn matching_place(&self, scan: &Fingerprint, cfg: &PlaceConfig) -> Option<usize> {
        self.places
            .iter()
            .position(|p| !p.is_empty() && overlap(p, &scan.bssids) >= cfg.delta)
    }
}

/// Whether `scan` falls inside any learned place. Does not learn.
pub fn is_private(profile: &PlaceProfile, scan: &Fingerprint, cfg: &PlaceConfig) -> bool {
    profile.matching_place(scan, cfg).is_some()
}

/// Feeds one scan through the learning and detection state machine.
///
/// Detection runs first; a scan inside a learned place also drops any candidate,
/// since the user is no longer at an unknown place.
pub fn observe_scan(
    mut profile: PlaceProfile,
    scan: &Fingerprint,
    cfg: &PlaceConfig,
) -> Result<(PlaceProfile, Verdict)> {
    cfg.validate()?;
    if scan.bssids.is_empty() {
        return Err(Error::EmptyFingerprint);
    }
    if let Some(previous) = profile.last_timestamp {
        if scan.timestamp < previous {
            return Err(Error::OutOfOrderScan {
                previous,
                got: scan.timestamp,
            });
        }
    }
    profile.last_timestamp = Some(scan.timestamp);

    if is_private(&profile, scan, cfg) {
        profile.candidate = None;
        return Ok((profile, Verdict::InPrivatePlace));
    }

    let fresh = Candidate {
        bssids: scan.bssids.clone(),
        started_at: scan.timestamp,
    };
    profile.candidate = match profile.candidate.take() {
        None => Some(fresh),
        Some(c) if overlap(&c.bssids, &scan.bssids) >= cfg.delta => {
            let bssids: BssidSet = c.bssids.intersection(&scan.bssids).cloned().collect();
            if bssids.is_empty() {
                // Only reachable with Δ = 0.
                None
            } else if scan.timestamp - c.started_at > cfg.delta_l_seconds {
                profile.places.push(bssids);
                None
            } else {
                Some(Candidate { bssids, ..c })
            }
        }
        Some(_) => Some(fresh),
    };
    Ok((profile, Verdict::NotPrivate))
}

/// Runs a whole trace; returns the final profile and the verdict for each scan.
pub fn replay(
    profile: PlaceProfile,
    scans: &[Fingerprint],
    cfg: &PlaceConfig,
) -> Result<(PlaceProfile, Vec<Verdict>)> {
    let mut verdicts = Vec::with_capacity(scans.len());
    let profile = scans.iter().try_fold(profile, |p, scan| {
        let (p, v) = observe_scan(p, scan, cfg)?;
        verdicts.push(v);
        Ok::<_, Error>(p)
    })?;
    Ok((profile, verdicts))
}
