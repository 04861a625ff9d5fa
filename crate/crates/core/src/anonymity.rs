//! k-anonymity mode and the dual-mode dispatcher.
//!
//! An outgoing report is cloaked in two phases. Obfuscation snaps its location to
//! the nearest point of interest. Anonymization then grows the set `Φ = {real}`
//! one dummy at a time: while other users' reports (`C̄`) remain, it takes the one
//! that minimizes the exposure of `Φ ∪ {r}`; otherwise it falls back to the
//! user's own report whose location is least frequent in `C`.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::metrics::{self, raw_distance, ExposureSummary, EARTH_RADIUS_M};
use crate::model::{Crs, GeoPoint, MetricsConfig, Report, ReportPool};
use crate::place::{self, Fingerprint, PlaceConfig, PlaceProfile};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnonymityConfig {
    /// Size of the submitted set, genuine report included.
    pub k: usize,
    pub metrics: MetricsConfig,
    /// Grid cell size in meters used to decide when two of the user's own
    /// locations are "the same" for frequency counting.
    pub quantize_m: f64,
}

impl AnonymityConfig {
    pub fn new(k: usize, metrics: MetricsConfig) -> Result<Self> {
        let cfg = Self {
            k,
            metrics,
            quantize_m: 10.0,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.metrics.validate()?;
        if self.k < 1 {
            return Err(Error::InvalidConfig("k must be at least 1".into()));
        }
        if !(self.quantize_m > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "quantize_m must be positive, got {}",
                self.quantize_m
            )));
        }
        Ok(())
    }
}

/// Local point-of-interest index used for obfuscation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PoiIndex {
    pois: Vec<(String, GeoPoint)>,
}

impl PoiIndex {
    pub fn new(pois: Vec<(String, GeoPoint)>) -> Result<Self> {
        if let Some((_, first)) = pois.first() {
            if let Some((_, odd)) = pois.iter().find(|(_, p)| p.crs != first.crs) {
                return Err(Error::CrsMismatch {
                    expected: first.crs,
                    found: odd.crs,
                });
            }
        }
        Ok(Self { pois })
    }

    pub fn pois(&self) -> &[(String, GeoPoint)] {
        &self.pois
    }

    pub fn len(&self) -> usize {
        self.pois.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pois.is_empty()
    }

    pub fn crs(&self) -> Option<Crs> {
        self.pois.first().map(|(_, p)| p.crs)
    }

    /// Index of the POI closest to `p`; ties go to the lowest index.
    pub fn nearest(&self, p: &GeoPoint) -> Option<usize> {
        let mode = p.crs.distance_mode();
        let mut best: Option<(usize, f64)> = None;
        for (i, (_, q)) in self.pois.iter().enumerate() {
            let d = raw_distance(p, q, mode);
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((i, d));
            }
        }
        best.map(|(i, _)| i)
    }
}

/// The set `Φ` submitted in place of a single report.
#[derive(Debug, Clone, PartialEq)]
pub struct AnonymitySet {
    /// The genuine report followed by the dummies in selection order.
    pub members: Vec<Report>,
    /// Position of the genuine report in `members`.
    pub real_index: usize,
    /// Pool index of each dummy, aligned with `members` after the genuine report.
    pub picks: Vec<usize>,
    /// Set when the pool could not supply `k − 1` dummies.
    pub degraded: bool,
}

impl AnonymitySet {
    pub fn real(&self) -> &Report {
        &self.members[self.real_index]
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

fn ensure_crs(found: Crs, expected: Crs) -> Result<()> {
    if found == expected {
        Ok(())
    } else {
        Err(Error::CrsMismatch { expected, found })
    }
}

const METERS_PER_DEGREE: f64 = EARTH_RADIUS_M * std::f64::consts::PI / 180.0;

fn grid_cell(p: &GeoPoint, cell_m: f64) -> (i64, i64) {
    let (east, north) = match p.crs {
        Crs::Planar => (p.x, p.y),
        Crs::Geographic => (
            p.x * METERS_PER_DEGREE * p.y.to_radians().cos(),
            p.y * METERS_PER_DEGREE,
        ),
    };
    ((east / cell_m).floor() as i64, (north / cell_m).floor() as i64)
}

/// Picks the `C̄` report minimizing the exposure of `Φ ∪ {r}`.
fn best_foreign(
    pool: &ReportPool,
    used: &[bool],
    members: &[Report],
    summary: &ExposureSummary,
    cfg: &MetricsConfig,
) -> Result<Option<(usize, ExposureSummary)>> {
    let mut best: Option<(usize, ExposureSummary)> = None;
    for &idx in pool.others() {
        if used[idx] {
            continue;
        }
        let s = metrics::extend_summary(summary, members, &pool.reports()[idx], cfg)?;
        if best.as_ref().is_none_or(|(_, b)| s.exposure < b.exposure) {
            best = Some((idx, s));
        }
    }
    Ok(best)
}

/// Picks the unused `C` report whose grid cell occurs least often in `C`.
fn least_frequent_own(pool: &ReportPool, used: &[bool], counts: &HashMap<(i64, i64), usize>, cell_m: f64) -> Option<usize> {
    let mut best: Option<(usize, usize)> = None;
    for &idx in pool.mine() {
        if used[idx] {
            continue;
        }
        let c = counts[&grid_cell(&pool.reports()[idx].location, cell_m)];
        if best.is_none_or(|(_, bc)| c < bc) {
            best = Some((idx, c));
        }
    }
    best.map(|(i, _)| i)
}

/// Builds the k-anonymity set for `real` from the report pool.
///
/// Dummies are drawn without replacement within one set; the pool itself is not
/// consumed. When the pool runs dry before `k` members the set is returned short
/// with `degraded` set.
pub fn build_anonymity_set(real: &Report, pool: &ReportPool, cfg: &AnonymityConfig) -> Result<AnonymitySet> {
    cfg.validate()?;
    let crs = cfg.metrics.distance_mode.crs();
    ensure_crs(real.location.crs, crs)?;
    if let Some(pool_crs) = pool.crs() {
        ensure_crs(pool_crs, crs)?;
    }

    let mut members = vec![real.clone()];
    let mut picks = Vec::with_capacity(cfg.k.saturating_sub(1));
    let mut summary = metrics::exposure(&members, &cfg.metrics)?;
    let mut used = vec![false; pool.len()];
    let mut own_counts: Option<HashMap<(i64, i64), usize>> = None;

    while members.len() < cfg.k {
        let next = match best_foreign(pool, &used, &members, &summary, &cfg.metrics)? {
            Some((idx, s)) => Some((idx, s)),
            None => {
                let counts = own_counts.get_or_insert_with(|| {
                    let mut m = HashMap::new();
                    for &i in pool.mine() {
                        *m.entry(grid_cell(&pool.reports()[i].location, cfg.quantize_m)).or_insert(0) += 1;
                    }
                    m
                });
                match least_frequent_own(pool, &used, counts, cfg.quantize_m) {
                    Some(idx) => {
                        let s = metrics::extend_summary(&summary, &members, &pool.reports()[idx], &cfg.metrics)?;
                        Some((idx, s))
                    }
                    None => None,
                }
            }
        };
        let Some((idx, s)) = next else { break };
        used[idx] = true;
        picks.push(idx);
        members.push(pool.reports()[idx].clone());
        summary = s;
    }

    Ok(AnonymitySet {
        degraded: members.len() < cfg.k,
        members,
        real_index: 0,
        picks,
    })
}

/// Replaces the report's location with the nearest POI.
///
/// With an empty index this is an error unless `allow_raw` is set, in which case
/// the report is returned unchanged.
pub fn obfuscate(real: &Report, poi: &PoiIndex, allow_raw: bool) -> Result<Report> {
    let Some(i) = poi.nearest(&real.location) else {
        return if allow_raw {
            Ok(real.clone())
        } else {
            Err(Error::EmptyPoiIndex)
        };
    };
    let location = poi.pois()[i].1;
    ensure_crs(location.crs, real.location.crs)?;
    Ok(Report {
        location,
        ..real.clone()
    })
}

/// What the user is about to send.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RequestKind {
    /// A location-based query; always submitted, never suppressed.
    Query,
    /// A crowdsensed data report; suppressed inside private places.
    CrowdsensedReport,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Decision {
    /// Nothing leaves the device.
    Suppressed,
    Submit(AnonymitySet),
}

/// Device-side state consulted for every outgoing report.
#[derive(Debug, Clone, Copy)]
pub struct SensingContext<'a> {
    pub profile: &'a PlaceProfile,
    pub pool: &'a ReportPool,
    pub poi: &'a PoiIndex,
    pub place: PlaceConfig,
    pub anonymity: AnonymityConfig,
    /// Submit the raw location when the POI index is empty.
    pub allow_raw_location: bool,
}

/// The dual-mode dispatcher: place-aware suppression for crowdsensed reports,
/// then obfuscation and k-anonymity for anything that is sent.
pub fn process_outgoing(
    kind: RequestKind,
    real: &Report,
    scan: &Fingerprint,
    ctx: &SensingContext<'_>,
) -> Result<Decision> {
    if kind == RequestKind::CrowdsensedReport && place::is_private(ctx.profile, scan, &ctx.place) {
        return Ok(Decision::Suppressed);
    }
    let cloaked = obfuscate(real, ctx.poi, ctx.allow_raw_location)?;
    build_anonymity_set(&cloaked, ctx.pool, &ctx.anonymity).map(Decision::Submit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DistanceMode, OwnerTag};

    const PLANAR_500: MetricsConfig = MetricsConfig {
        d_max: 500.0,
        distance_mode: DistanceMode::Euclidean,
    };

    fn report(x: f64, y: f64, owner: OwnerTag) -> Report {
        Report::synthetic(GeoPoint::planar(x, y), owner)
    }

    fn cfg(k: usize) -> AnonymityConfig {
        AnonymityConfig::new(k, PLANAR_500).unwrap()
    }

    #[test]
    fn k_one_is_just_the_real_report() {
        let pool = ReportPool::new(vec![report(1.0, 1.0, OwnerTag::Other)]).unwrap();
        let real = report(5.0, 5.0, OwnerTag::Mine);
        let set = build_anonymity_set(&real, &pool, &cfg(1)).unwrap();
        assert_eq!(set.members, vec![real]);
        assert!(!set.degraded);
    }

    #[test]
    fn picks_exhaustive_argmin_among_three() {
        let pool = ReportPool::new(vec![
            report(0.0, 0.0, OwnerTag::Other),
            report(260.0, 250.0, OwnerTag::Other),
            report(500.0, 500.0, OwnerTag::Other),
        ])
        .unwrap();
        let real = report(250.0, 250.0, OwnerTag::Mine);
        // Ψ({real, r}) = 1 − min(d, 500)/500 for a two-point set, so
        // (0,0) and (500,500) both give 1 − 353.55/500 and the lower index wins.
        let psi: Vec<f64> = pool
            .reports()
            .iter()
            .map(|r| metrics::exposure(&[real.clone(), r.clone()], &PLANAR_500).unwrap().exposure)
            .collect();
        assert!((psi[0] - (1.0 - 250.0 * 2f64.sqrt() / 500.0)).abs() < 1e-12);
        assert!((psi[1] - 0.98).abs() < 1e-12);
        assert_eq!(psi[0], psi[2]);
        let set = build_anonymity_set(&real, &pool, &cfg(2)).unwrap();
        assert_eq!(set.picks, vec![0]);
    }

    #[test]
    fn fallback_picks_least_frequent_own_location() {
        let pool = ReportPool::new(vec![
            report(0.0, 0.0, OwnerTag::Mine),
            report(1.0, 1.0, OwnerTag::Mine),
            report(300.0, 0.0, OwnerTag::Mine),
        ])
        .unwrap();
        let real = report(0.0, 0.0, OwnerTag::Mine);
        let set = build_anonymity_set(&real, &pool, &cfg(2)).unwrap();
        assert_eq!(set.picks, vec![2]);
        let set = build_anonymity_set(&real, &pool, &cfg(4)).unwrap();
        assert_eq!(set.picks, vec![2, 0, 1]);
    }

    #[test]
    fn foreign_reports_preferred_over_own() {
        let pool = ReportPool::new(vec![
            report(300.0, 0.0, OwnerTag::Mine),
            report(10.0, 0.0, OwnerTag::Other),
        ])
        .unwrap();
        let set = build_anonymity_set(&report(0.0, 0.0, OwnerTag::Mine), &pool, &cfg(3)).unwrap();
        assert_eq!(set.picks, vec![1, 0]);
    }

    #[test]
    fn empty_pool_degrades() {
        let real = report(0.0, 0.0, OwnerTag::Mine);
        let set = build_anonymity_set(&real, &ReportPool::default(), &cfg(5)).unwrap();
        assert_eq!(set.len(), 1);
        assert!(set.degraded);
    }

    #[test]
    fn small_pool_yields_all_distinct_members() {
        let pool = ReportPool::new((0..4).map(|i| report(i as f64 * 50.0, 0.0, OwnerTag::Other)).collect()).unwrap();
        let set = build_anonymity_set(&report(0.0, 100.0, OwnerTag::Mine), &pool, &cfg(10)).unwrap();
        assert_eq!(set.len(), 5);
        assert!(set.degraded);
        let mut picks = set.picks.clone();
        picks.sort();
        picks.dedup();
        assert_eq!(picks.len(), 4);
    }

    #[test]
    fn obfuscation_snaps_to_nearest_poi() {
        let poi = PoiIndex::new(vec![
            ("a".into(), GeoPoint::planar(0.0, 0.0)),
            ("b".into(), GeoPoint::planar(100.0, 100.0)),
        ])
        .unwrap();
        let mut real = report(10.0, 10.0, OwnerTag::Mine);
        real.signal_dbm = -61.0;
        real.ambient_aps.insert("x".into());
        let out = obfuscate(&real, &poi, false).unwrap();
        assert_eq!(out.location, GeoPoint::planar(0.0, 0.0));
        assert_eq!(Report { location: real.location, ..out }, real);

        let on = report(100.0, 100.0, OwnerTag::Mine);
        assert_eq!(obfuscate(&on, &poi, false).unwrap().location, on.location);
    }

    #[test]
    fn empty_poi_index_requires_override() {
        let real = report(10.0, 10.0, OwnerTag::Mine);
        assert!(matches!(
            obfuscate(&real, &PoiIndex::default(), false),
            Err(Error::EmptyPoiIndex)
        ));
        assert_eq!(obfuscate(&real, &PoiIndex::default(), true).unwrap(), real);
    }

    #[test]
    fn poi_ties_go_to_lowest_index() {
        let poi = PoiIndex::new(vec![
            ("w".into(), GeoPoint::planar(-1.0, 0.0)),
            ("e".into(), GeoPoint::planar(1.0, 0.0)),
        ])
        .unwrap();
        assert_eq!(poi.nearest(&GeoPoint::planar(0.0, 0.0)), Some(0));
    }

    #[test]
    fn crs_mismatch_rejected() {
        let pool = ReportPool::default();
        let geo = Report::synthetic(GeoPoint::geographic(1.0, 1.0).unwrap(), OwnerTag::Mine);
        assert!(build_anonymity_set(&geo, &pool, &cfg(2)).is_err());
    }

    #[test]
    fn geographic_grid_cells_are_about_ten_meters() {
        let a = GeoPoint::geographic(1.3, 103.8).unwrap();
        let b = GeoPoint::geographic(1.3 + 5.0 / METERS_PER_DEGREE * 0.5, 103.8).unwrap();
        let c = GeoPoint::geographic(1.3 + 25.0 / METERS_PER_DEGREE, 103.8).unwrap();
        assert_eq!(grid_cell(&a, 10.0).0, grid_cell(&b, 10.0).0);
        assert_ne!(grid_cell(&a, 10.0).1, grid_cell(&c, 10.0).1);
    }

    fn ctx<'a>(profile: &'a PlaceProfile, pool: &'a ReportPool, poi: &'a PoiIndex, k: usize) -> SensingContext<'a> {
        SensingContext {
            profile,
            pool,
            poi,
            place: PlaceConfig::default(),
            anonymity: cfg(k),
            allow_raw_location: true,
        }
    }

    #[test]
    fn dispatcher_modes() {
        let pool = ReportPool::new((0..20).map(|i| report(i as f64 * 10.0, 0.0, OwnerTag::Other)).collect()).unwrap();
        let poi = PoiIndex::default();
        let home: place::BssidSet = ["h1", "h2"].iter().map(|s| s.to_string()).collect();
        let learned = PlaceProfile {
            places: vec![home.clone()],
            ..Default::default()
        };
        let at_home = Fingerprint {
            bssids: home,
            timestamp: 0,
        };
        let real = report(3.0, 4.0, OwnerTag::Mine);

        let c = ctx(&learned, &pool, &poi, 10);
        assert_eq!(
            process_outgoing(RequestKind::CrowdsensedReport, &real, &at_home, &c).unwrap(),
            Decision::Suppressed
        );
        match process_outgoing(RequestKind::Query, &real, &at_home, &c).unwrap() {
            Decision::Submit(set) => assert_eq!(set.len(), 10),
            d => panic!("query must be submitted, got {d:?}"),
        }

        let empty = PlaceProfile::default();
        let c = ctx(&empty, &pool, &poi, 10);
        match process_outgoing(RequestKind::CrowdsensedReport, &real, &at_home, &c).unwrap() {
            Decision::Submit(set) => {
                assert_eq!(set.len(), 10);
                assert_eq!(set.real(), &real);
            }
            d => panic!("expected submit, got {d:?}"),
        }
    }

    #[test]
    fn dispatcher_refuses_raw_location_without_override() {
        let pool = ReportPool::default();
        let poi = PoiIndex::default();
        let profile = PlaceProfile::default();
        let mut c = ctx(&profile, &pool, &poi, 1);
        c.allow_raw_location = false;
        let scan = Fingerprint::new(["a"], 0);
        assert!(matches!(
            process_outgoing(RequestKind::Query, &report(0.0, 0.0, OwnerTag::Mine), &scan, &c),
            Err(Error::EmptyPoiIndex)
        ));
    }
}
