//! Activity coverage, activity uniformity and privacy exposure.
//!
//! Coverage is the diameter of an enclosing disc normalized by `d_max`. The exact
//! smallest enclosing disc is replaced by the disc centered on the centroid, so
//! `D = min(d_max, 2 · max_j d(centroid, l_j))`. Uniformity is Jain's fairness
//! index over all unordered pairwise distances. Exposure is `1 − coverage · uniformity`.
//!
//! Every function here needs at least one location; an empty set is an error.

use crate::error::{Error, Result};
use crate::model::{Crs, DistanceMode, GeoPoint, Located, MetricsConfig};

/// Mean Earth radius used by the haversine distance.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// Metric values for one set of reports, plus the pair sums needed to extend it
/// by another report without a full recomputation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExposureSummary {
    pub n: usize,
    pub coverage: f64,
    pub uniformity: f64,
    pub exposure: f64,
    /// Approximate enclosing diameter `D` in meters, after the `d_max` cap.
    pub diameter: f64,
    /// Sum of distances over unordered pairs, in meters.
    pub sum_dist: f64,
    /// Sum of squared distances over unordered pairs, in square meters.
    pub sum_dist_sq: f64,
    pub centroid: GeoPoint,
}

/// Distance between two points, in meters.
pub fn distance(a: &GeoPoint, b: &GeoPoint, mode: DistanceMode) -> Result<f64> {
    let expected = mode.crs();
    for p in [a, b] {
        if p.crs != expected {
            return Err(Error::CrsMismatch {
                expected,
                found: p.crs,
            });
        }
    }
    Ok(raw_distance(a, b, mode))
}

#[inline]
pub(crate) fn raw_distance(a: &GeoPoint, b: &GeoPoint, mode: DistanceMode) -> f64 {
    match mode {
        DistanceMode::Euclidean => (a.x - b.x).hypot(a.y - b.y),
        DistanceMode::Haversine => {
            let (lat1, lat2) = (a.y.to_radians(), b.y.to_radians());
            let dlat = lat2 - lat1;
            let dlon = (b.x - a.x).to_radians();
            let h = (dlat / 2.0).sin().powi(2) + lat1.cos() * lat2.cos() * (dlon / 2.0).sin().powi(2);
            2.0 * EARTH_RADIUS_M * h.min(1.0).sqrt().asin()
        }
    }
}

fn check<T: Located>(points: &[T], mode: DistanceMode) -> Result<()> {
    if points.is_empty() {
        return Err(Error::EmptyReportSet);
    }
    let expected = mode.crs();
    match points.iter().find(|p| p.location().crs != expected) {
        Some(p) => Err(Error::CrsMismatch {
            expected,
            found: p.location().crs,
        }),
        None => Ok(()),
    }
}

/// Arithmetic mean of the coordinates (also for geographic points, where it is a
/// city-scale approximation).
fn centroid<'a>(points: impl ExactSizeIterator<Item = &'a GeoPoint>, crs: Crs) -> GeoPoint {
    let n = points.len() as f64;
    let (sx, sy) = points.fold((0.0, 0.0), |(sx, sy), p| (sx + p.x, sy + p.y));
    GeoPoint {
        x: sx / n,
        y: sy / n,
        crs,
    }
}

/// Returns `(centroid, capped diameter)`.
fn enclosing<'a, I>(points: I, cfg: &MetricsConfig) -> (GeoPoint, f64)
where
    I: ExactSizeIterator<Item = &'a GeoPoint> + Clone,
{
    let c = centroid(points.clone(), cfg.distance_mode.crs());
    let max_r = points
        .map(|p| raw_distance(&c, p, cfg.distance_mode))
        .fold(0.0, f64::max);
    (c, (2.0 * max_r).min(cfg.d_max))
}

fn jain(sum: f64, sum_sq: f64, pairs: usize) -> f64 {
    if pairs == 0 || sum_sq <= 0.0 {
        // No pairs, or every pair at distance zero.
        return 1.0;
    }
    (sum * sum / (pairs as f64 * sum_sq)).clamp(0.0, 1.0)
}

fn pair_sums<T: Located>(points: &[T], mode: DistanceMode) -> (f64, f64) {
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            let d = raw_distance(a.location(), b.location(), mode);
            sum += d;
            sum_sq += d * d;
        }
    }
    (sum, sum_sq)
}

fn pairs(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// Activity coverage `λ ∈ [0, 1]`.
pub fn coverage<T: Located>(reports: &[T], cfg: &MetricsConfig) -> Result<f64> {
    cfg.validate()?;
    check(reports, cfg.distance_mode)?;
    let (_, d) = enclosing(reports.iter().map(Located::location), cfg);
    Ok(d / cfg.d_max)
}

/// Activity uniformity `U ∈ [0, 1]`: Jain's index of the pairwise distances.
///
/// Defined as 1 when there are no pairs or all pairwise distances are zero.
pub fn uniformity<T: Located>(reports: &[T], mode: DistanceMode) -> Result<f64> {
    check(reports, mode)?;
    let (sum, sum_sq) = pair_sums(reports, mode);
    Ok(jain(sum, sum_sq, pairs(reports.len())))
}

/// Computes coverage, uniformity and exposure in one go.
pub fn exposure<T: Located>(reports: &[T], cfg: &MetricsConfig) -> Result<ExposureSummary> {
    cfg.validate()?;
    check(reports, cfg.distance_mode)?;
    let (sum_dist, sum_dist_sq) = pair_sums(reports, cfg.distance_mode);
    let (centroid, diameter) = enclosing(reports.iter().map(Located::location), cfg);
    Ok(summarize(reports.len(), diameter, sum_dist, sum_dist_sq, centroid, cfg))
}

fn summarize(
    n: usize,
    diameter: f64,
    sum_dist: f64,
    sum_dist_sq: f64,
    centroid: GeoPoint,
    cfg: &MetricsConfig,
) -> ExposureSummary {
    let coverage = diameter / cfg.d_max;
    let uniformity = jain(sum_dist, sum_dist_sq, pairs(n));
    ExposureSummary {
        n,
        coverage,
        uniformity,
        exposure: 1.0 - coverage * uniformity,
        diameter,
        sum_dist,
        sum_dist_sq,
        centroid,
    }
}

/// The summary of `reports ∪ {new}`, given the summary `s` of `reports`.
///
/// Pair sums are updated with the `n` new pairs; centroid and radius are
/// recomputed in a single linear pass, so the cost is `O(n)`.
pub fn extend_summary<T: Located>(
    s: &ExposureSummary,
    reports: &[T],
    new: &T,
    cfg: &MetricsConfig,
) -> Result<ExposureSummary> {
    debug_assert_eq!(s.n, reports.len(), "summary does not describe `reports`");
    let mode = cfg.distance_mode;
    let np = new.location();
    if np.crs != mode.crs() {
        return Err(Error::CrsMismatch {
            expected: mode.crs(),
            found: np.crs,
        });
    }
    let mut sum_dist = s.sum_dist;
    let mut sum_dist_sq = s.sum_dist_sq;
    for r in reports {
        let d = raw_distance(r.location(), np, mode);
        sum_dist += d;
        sum_dist_sq += d * d;
    }
    let all = reports
        .iter()
        .map(Located::location)
        .chain(std::iter::once(np));
    let (centroid, diameter) = enclosing(ExactChain(all, reports.len() + 1), cfg);
    Ok(summarize(reports.len() + 1, diameter, sum_dist, sum_dist_sq, centroid, cfg))
}

/// `Chain` is not `ExactSizeIterator`; this wrapper supplies the known length.
#[derive(Clone)]
struct ExactChain<I>(I, usize);

impl<I: Iterator> Iterator for ExactChain<I> {
    type Item = I::Item;

    fn next(&mut self) -> Option<Self::Item> {
        let item = self.0.next();
        if item.is_some() {
            self.1 -= 1;
        }
        item
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        (self.1, Some(self.1))
    }
}

impl<I: Iterator> ExactSizeIterator for ExactChain<I> {}
