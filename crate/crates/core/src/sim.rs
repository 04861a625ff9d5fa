//! Monte-Carlo campaigns: how activity patterns drive the metrics, and how the
//! k-anonymity mode compares with random dummies and with no cloaking at all.
//!
//! Run `i` uses seed `base_seed + i`; separate ChaCha streams of that seed feed
//! the crowdsourced pool, the user's real reports and the random baseline, so
//! all algorithms in a run see the same real-report sequence. Runs may execute
//! in parallel; per-run results are summed in run order, which makes parallel
//! and sequential execution bit-identical.

use std::fmt;
use std::io::Write;

use rand::seq::index;
use rand::SeedableRng;
use rayon::prelude::*;

use crate::anonymity::{self, AnonymityConfig, Decision, PoiIndex, RequestKind, SensingContext};
use crate::error::{Error, Result};
use crate::metrics::{self, ExposureSummary};
use crate::model::{DistanceMode, GeoPoint, MetricsConfig, OwnerTag, Report, ReportPool};
use crate::pattern::{self, AngleMode, PatternKind, PatternSpec, SimRng, RNG_NAME};
use crate::place::{Fingerprint, PlaceConfig, PlaceProfile};

const STREAM_OMEGA: u64 = 1;
const STREAM_REAL: u64 = 2;
const STREAM_RANDOM: u64 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    /// Greedy exposure-minimizing k-anonymity.
    Ours,
    /// k − 1 dummies drawn uniformly at random.
    RandomK,
    /// Real reports only.
    Naive,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::Ours, Algorithm::RandomK, Algorithm::Naive];
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Ours => "ours",
            Algorithm::RandomK => "random",
            Algorithm::Naive => "naive",
        })
    }
}

/// Metrics of everything exposed after one submission.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceStep {
    /// 1-based submission index.
    pub step: usize,
    /// Reports transmitted so far, dummies included.
    pub n: usize,
    pub coverage: f64,
    pub uniformity: f64,
    pub exposure: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioTrace {
    pub algorithm: Algorithm,
    pub pattern: PatternSpec,
    pub steps: Vec<TraceStep>,
    /// Base seed; run `i` used `seed + i`.
    pub seed: u64,
}

impl ScenarioTrace {
    pub fn last(&self) -> Option<&TraceStep> {
        self.steps.last()
    }
}

fn run_rng(seed: u64, run: usize, stream: u64) -> SimRng {
    let mut rng = SimRng::seed_from_u64(seed.wrapping_add(run as u64));
    rng.set_stream(stream);
    rng
}

fn planar(d_max: f64) -> Result<MetricsConfig> {
    MetricsConfig::new(d_max, DistanceMode::Euclidean)
}

fn map_runs<T, F>(runs: usize, parallel: bool, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    if parallel {
        (0..runs).into_par_iter().map(f).collect()
    } else {
        (0..runs).map(f).collect()
    }
}

/// A growing report set with its metrics kept current.
struct Exposed {
    points: Vec<GeoPoint>,
    summary: Option<ExposureSummary>,
}

impl Exposed {
    fn new(capacity: usize) -> Self {
        Self {
            points: Vec::with_capacity(capacity),
            summary: None,
        }
    }

    fn push(&mut self, p: GeoPoint, cfg: &MetricsConfig) -> Result<()> {
        let s = match &self.summary {
            None => metrics::exposure(&[p], cfg)?,
            Some(s) => metrics::extend_summary(s, &self.points, &p, cfg)?,
        };
        self.summary = Some(s);
        self.points.push(p);
        Ok(())
    }

    fn step(&self, step: usize) -> TraceStep {
        let s = self.summary.expect("scored after at least one submission");
        TraceStep {
            step,
            n: s.n,
            coverage: s.coverage,
            uniformity: s.uniformity,
            exposure: s.exposure,
        }
    }
}

// ----------------------------------------------------------------------------
// Metric study

#[derive(Debug, Clone, PartialEq)]
pub struct MetricStudyConfig {
    pub patterns: Vec<PatternKind>,
    pub n_max: usize,
    pub step: usize,
    pub runs: usize,
    pub seed: u64,
    pub d_max: f64,
    pub angle: AngleMode,
    pub parallel: bool,
}

impl Default for MetricStudyConfig {
    fn default() -> Self {
        Self {
            patterns: PatternKind::study_set(),
            n_max: 1200,
            step: 100,
            runs: 100,
            seed: 1,
            d_max: 500.0,
            angle: AngleMode::Shared,
            parallel: true,
        }
    }
}

/// Averaged metrics for one pattern at one point count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricRow {
    pub pattern: PatternKind,
    pub n: usize,
    pub coverage: f64,
    pub uniformity: f64,
    pub exposure: f64,
}

/// Metrics at `n = step, 2·step, …, n_max` for each pattern, averaged over runs.
///
/// Within a run the sizes are nested prefixes of one `n_max`-point sample.
pub fn run_metric_study(cfg: &MetricStudyConfig) -> Result<Vec<MetricRow>> {
    if cfg.runs < 1 || cfg.step < 1 {
        return Err(Error::InvalidConfig("runs and step must be at least 1".into()));
    }
    let mcfg = planar(cfg.d_max)?;
    let sizes: Vec<usize> = (cfg.step..=cfg.n_max).step_by(cfg.step).collect();
    let mut rows = Vec::with_capacity(cfg.patterns.len() * sizes.len());

    for (pi, &kind) in cfg.patterns.iter().enumerate() {
        let spec = PatternSpec {
            kind,
            d_max: cfg.d_max,
            seed: cfg.seed,
            angle: cfg.angle,
        };
        spec.validate()?;
        let per_run = map_runs(cfg.runs, cfg.parallel, |run| {
            let mut rng = run_rng(cfg.seed, run, pi as u64);
            let points = pattern::generate_points_with(&spec, cfg.n_max, &mut rng)?;
            let mut exposed = Exposed::new(cfg.n_max);
            let mut out = Vec::with_capacity(sizes.len());
            for p in points {
                exposed.push(p, &mcfg)?;
                if exposed.points.len().is_multiple_of(cfg.step) {
                    let s = exposed.summary.expect("non-empty");
                    out.push([s.coverage, s.uniformity, s.exposure]);
                }
            }
            Ok(out)
        })?;

        for (j, &n) in sizes.iter().enumerate() {
            let mut acc = [0.0; 3];
            for run in &per_run {
                for (a, v) in acc.iter_mut().zip(run[j]) {
                    *a += v;
                }
            }
            let runs = cfg.runs as f64;
            rows.push(MetricRow {
                pattern: kind,
                n,
                coverage: acc[0] / runs,
                uniformity: acc[1] / runs,
                exposure: acc[2] / runs,
            });
        }
    }
    Ok(rows)
}

// ----------------------------------------------------------------------------
// Anonymity study

#[derive(Debug, Clone, PartialEq)]
pub struct AnonymityStudyConfig {
    pub pattern: PatternKind,
    /// Size of the crowdsourced pool of other users' reports.
    pub omega_size: usize,
    /// Number of real reports the user submits.
    pub n_real: usize,
    pub k: usize,
    pub runs: usize,
    pub seed: u64,
    pub d_max: f64,
    pub angle: AngleMode,
    pub parallel: bool,
}

impl Default for AnonymityStudyConfig {
    fn default() -> Self {
        Self {
            pattern: PatternKind::Beta {
                alpha: 5.0,
                beta: 30.0,
            },
            omega_size: 1000,
            n_real: 100,
            k: 10,
            runs: 100,
            seed: 1,
            d_max: 500.0,
            angle: AngleMode::Shared,
            parallel: true,
        }
    }
}

impl AnonymityStudyConfig {
    fn validate(&self) -> Result<()> {
        if self.k < 1 {
            return Err(Error::InvalidConfig("k must be at least 1".into()));
        }
        if self.runs < 1 {
            return Err(Error::InvalidConfig("runs must be at least 1".into()));
        }
        if self.omega_size + 1 < self.k {
            return Err(Error::InvalidConfig(format!(
                "pool of {} reports cannot supply k - 1 = {} dummies",
                self.omega_size,
                self.k - 1
            )));
        }
        Ok(())
    }

    fn spec(&self) -> PatternSpec {
        PatternSpec {
            kind: self.pattern,
            d_max: self.d_max,
            seed: self.seed,
            angle: self.angle,
        }
    }
}

/// Draws `k − 1` dummies uniformly without replacement from `C̄`, topping up
/// from `C` when `C̄` is too small.
pub fn random_anonymity_set(real: &Report, pool: &ReportPool, k: usize, rng: &mut SimRng) -> Vec<Report> {
    let mut members = vec![real.clone()];
    let mut want = k.saturating_sub(1);
    for part in [pool.others(), pool.mine()] {
        let take = want.min(part.len());
        for i in index::sample(rng, part.len(), take) {
            members.push(pool.reports()[part[i]].clone());
        }
        want -= take;
    }
    members
}

/// Per-algorithm traces of a single run, in [`Algorithm::ALL`] order.
pub fn run_anonymity_once(cfg: &AnonymityStudyConfig, run: usize) -> Result<[Vec<TraceStep>; 3]> {
    cfg.validate()?;
    let mcfg = planar(cfg.d_max)?;

    let field = PatternSpec {
        kind: PatternKind::Uniform,
        d_max: cfg.d_max,
        seed: cfg.seed,
        angle: AngleMode::Independent,
    };
    let omega = pattern::generate_points_with(&field, cfg.omega_size, &mut run_rng(cfg.seed, run, STREAM_OMEGA))?;
    let pool = ReportPool::new(
        omega
            .into_iter()
            .map(|p| Report::synthetic(p, OwnerTag::Other))
            .collect(),
    )?;
    let reals = pattern::generate_points_with(&cfg.spec(), cfg.n_real, &mut run_rng(cfg.seed, run, STREAM_REAL))?;
    let mut random_rng = run_rng(cfg.seed, run, STREAM_RANDOM);

    let profile = PlaceProfile::default();
    let poi = PoiIndex::default();
    let ctx = SensingContext {
        profile: &profile,
        pool: &pool,
        poi: &poi,
        place: PlaceConfig::default(),
        anonymity: AnonymityConfig::new(cfg.k, mcfg)?,
        allow_raw_location: true,
    };
    let no_scan = Fingerprint::new(Vec::<String>::new(), 0);

    let mut exposed: [Exposed; 3] = std::array::from_fn(|_| Exposed::new(cfg.n_real * cfg.k));
    let mut traces: [Vec<TraceStep>; 3] = std::array::from_fn(|_| Vec::with_capacity(cfg.n_real));

    for (i, &p) in reals.iter().enumerate() {
        let real = Report::synthetic(p, OwnerTag::Mine);

        let ours = match anonymity::process_outgoing(RequestKind::CrowdsensedReport, &real, &no_scan, &ctx)? {
            Decision::Submit(set) => set.members,
            Decision::Suppressed => Vec::new(),
        };
        let random = random_anonymity_set(&real, &pool, cfg.k, &mut random_rng);
        let submitted = [ours, random, vec![real]];

        for (slot, members) in submitted.iter().enumerate() {
            for m in members {
                exposed[slot].push(m.location, &mcfg)?;
            }
            traces[slot].push(exposed[slot].step(i + 1));
        }
    }
    Ok(traces)
}

/// Runs the three-algorithm comparison and returns the run-averaged traces in
/// [`Algorithm::ALL`] order.
pub fn run_anonymity_study(cfg: &AnonymityStudyConfig) -> Result<Vec<ScenarioTrace>> {
    cfg.validate()?;
    let per_run = map_runs(cfg.runs, cfg.parallel, |run| run_anonymity_once(cfg, run))?;
    let runs = cfg.runs as f64;

    Ok(Algorithm::ALL
        .iter()
        .enumerate()
        .map(|(slot, &algorithm)| {
            let steps = (0..cfg.n_real)
                .map(|j| {
                    let mut acc = [0.0; 3];
                    for run in &per_run {
                        let s = &run[slot][j];
                        acc[0] += s.coverage;
                        acc[1] += s.uniformity;
                        acc[2] += s.exposure;
                    }
                    TraceStep {
                        step: j + 1,
                        n: per_run[0][slot][j].n,
                        coverage: acc[0] / runs,
                        uniformity: acc[1] / runs,
                        exposure: acc[2] / runs,
                    }
                })
                .collect();
            ScenarioTrace {
                algorithm,
                pattern: cfg.spec(),
                steps,
                seed: cfg.seed,
            }
        })
        .collect())
}

/// Relative exposure improvement of `ours` over `baseline`, as a fraction.
pub fn relative_improvement(ours: f64, baseline: f64) -> f64 {
    (baseline - ours) / baseline
}

// ----------------------------------------------------------------------------
// CSV output

fn pattern_id(kind: &PatternKind) -> String {
    match kind {
        PatternKind::Uniform => "uniform".into(),
        PatternKind::Beta { alpha, beta } => format!("beta:{alpha}:{beta}"),
    }
}

fn angle_id(angle: AngleMode) -> &'static str {
    match angle {
        AngleMode::Shared => "shared",
        AngleMode::Independent => "independent",
    }
}

fn io_err(e: std::io::Error) -> Error {
    Error::io("<csv output>", e)
}

/// Writes `pattern,n,coverage,uniformity,exposure` rows after a `#` metadata line.
pub fn write_metric_csv<W: Write>(mut w: W, cfg: &MetricStudyConfig, rows: &[MetricRow]) -> Result<()> {
    writeln!(
        w,
        "# seed={} runs={} n_max={} step={} d_max={} angle={} rng={}",
        cfg.seed,
        cfg.runs,
        cfg.n_max,
        cfg.step,
        cfg.d_max,
        angle_id(cfg.angle),
        RNG_NAME
    )
    .map_err(io_err)?;
    writeln!(w, "pattern,n,coverage,uniformity,exposure").map_err(io_err)?;
    for r in rows {
        writeln!(
            w,
            "{},{},{:.9},{:.9},{:.9}",
            pattern_id(&r.pattern),
            r.n,
            r.coverage,
            r.uniformity,
            r.exposure
        )
        .map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

/// Writes `pattern,algorithm,step,n,coverage,uniformity,exposure` rows after a
/// `#` metadata line.
pub fn write_anonymity_csv<W: Write>(mut w: W, cfg: &AnonymityStudyConfig, traces: &[ScenarioTrace]) -> Result<()> {
    writeln!(
        w,
        "# seed={} runs={} k={} d_max={} omega={} n_real={} angle={} rng={}",
        cfg.seed,
        cfg.runs,
        cfg.k,
        cfg.d_max,
        cfg.omega_size,
        cfg.n_real,
        angle_id(cfg.angle),
        RNG_NAME
    )
    .map_err(io_err)?;
    writeln!(w, "pattern,algorithm,step,n,coverage,uniformity,exposure").map_err(io_err)?;
    for t in traces {
        let pid = pattern_id(&t.pattern.kind);
        for s in &t.steps {
            writeln!(
                w,
                "{},{},{},{},{:.9},{:.9},{:.9}",
                pid, t.algorithm, s.step, s.n, s.coverage, s.uniformity, s.exposure
            )
            .map_err(io_err)?;
        }
    }
    w.flush().map_err(io_err)
}
