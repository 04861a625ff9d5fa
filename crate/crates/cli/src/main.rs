//! `geoveil` command-line tool.
//!
//! Exit codes: 0 on success, 2 for usage or validation errors, 1 for internal
//! failures.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use geoveil::anonymity::{self, AnonymityConfig, Decision, PoiIndex, RequestKind, SensingContext};
use geoveil::io;
use geoveil::pattern::{self, AngleMode, PatternKind, PatternSpec};
use geoveil::place::{self, Fingerprint, PlaceConfig, PlaceProfile, Verdict};
use geoveil::sim::{self, AnonymityStudyConfig, MetricStudyConfig};
use geoveil::{metrics, DistanceMode, Error, MetricsConfig, OwnerTag, Profile, Report, ReportPool};

const SEED_ENV: &str = "GEOVEIL_SEED";

#[derive(Parser)]
#[command(name = "geoveil", version, about = "Spatial privacy exposure toolkit for location-tagged reports")]
struct Cli {
    /// Parameter preset: `sim` (500 m field, k=10, planar) or `deploy` (50 km, k=30, geographic).
    #[arg(long, global = true, value_enum, default_value_t = ProfileArg::Sim)]
    profile: ProfileArg,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProfileArg {
    Sim,
    Deploy,
}

impl From<ProfileArg> for Profile {
    fn from(p: ProfileArg) -> Self {
        match p {
            ProfileArg::Sim => Profile::Sim,
            ProfileArg::Deploy => Profile::Deploy,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum DistanceArg {
    Planar,
    Geo,
}

impl From<DistanceArg> for DistanceMode {
    fn from(d: DistanceArg) -> Self {
        match d {
            DistanceArg::Planar => DistanceMode::Euclidean,
            DistanceArg::Geo => DistanceMode::Haversine,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Report,
    Query,
}

#[derive(Clone, Copy, ValueEnum)]
enum OwnerArg {
    Mine,
    Other,
}

#[derive(Subcommand)]
enum Command {
    /// Print coverage, uniformity and exposure of a report file.
    Metrics {
        #[arg(long)]
        input: PathBuf,
        /// Normalizing diameter in meters.
        #[arg(long)]
        dmax: Option<f64>,
        /// Distance mode; defaults to the file's coordinate type.
        #[arg(long, value_enum)]
        distance: Option<DistanceArg>,
    },
    /// Generate synthetic activity points as a JSONL report file.
    Gen {
        #[arg(long, default_value = "uniform")]
        pattern: String,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        dmax: Option<f64>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = OwnerArg::Mine)]
        owner: OwnerArg,
        /// Draw the polar angle independently of the radius.
        #[arg(long)]
        independent_angle: bool,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run reports through place-aware suppression and k-anonymity, writing a transcript.
    Anonymize {
        /// Reports to submit, in order.
        #[arg(long)]
        input: PathBuf,
        /// Crowdsourced pool (owner `mine` = own past reports, `other` = everyone else).
        #[arg(long)]
        pool: PathBuf,
        /// POI CSV used for obfuscation.
        #[arg(long)]
        poi: Option<PathBuf>,
        /// Submit raw locations when no POI index is available.
        #[arg(long)]
        allow_raw_location: bool,
        /// Learned private places (JSON), as written by `place-replay`.
        #[arg(long)]
        places: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = KindArg::Report)]
        kind: KindArg,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        k: Option<u64>,
        #[arg(long)]
        dmax: Option<f64>,
        #[arg(long, value_enum)]
        distance: Option<DistanceArg>,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Replay a WiFi scan trace through place learning.
    PlaceReplay {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        delta: Option<f64>,
        /// Minimum stay in seconds before a place is learned.
        #[arg(long)]
        delta_l: Option<i64>,
        /// Continue from a previously saved profile.
        #[arg(long)]
        places: Option<PathBuf>,
        /// Where to write the learned profile.
        #[arg(long)]
        output: PathBuf,
    },
    /// Metric study over the activity patterns.
    SimMetricStudy {
        /// Patterns to study (`uniform` or `beta:A:B`); repeatable. Defaults to the six standard patterns.
        #[arg(long)]
        pattern: Vec<String>,
        /// Largest number of activity points.
        #[arg(long, default_value_t = 1200)]
        n: usize,
        #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
        step: u64,
        #[command(flatten)]
        common: SimArgs,
    },
    /// Compare the k-anonymity mode with random dummies and no cloaking.
    SimAnonymity {
        #[arg(long, default_value = "beta:5:30")]
        pattern: String,
        /// Size of the crowdsourced pool.
        #[arg(long, default_value_t = 1000)]
        omega: usize,
        /// Number of real reports submitted.
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        k: Option<u64>,
        #[command(flatten)]
        common: SimArgs,
    },
}

#[derive(Args)]
struct SimArgs {
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    runs: u64,
    /// Base seed; overridden by GEOVEIL_SEED when set.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    dmax: Option<f64>,
    #[arg(long)]
    independent_angle: bool,
    /// Run Monte-Carlo repetitions on one thread.
    #[arg(long)]
    sequential: bool,
    #[arg(long)]
    output: Option<PathBuf>,
}

fn angle(independent: bool) -> AngleMode {
    if independent {
        AngleMode::Independent
    } else {
        AngleMode::Shared
    }
}

fn effective_seed(flag: u64) -> Result<u64, Error> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("{SEED_ENV}={v} is not an unsigned integer"))),
        Err(_) => Ok(flag),
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>, Error> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| Error::Io {
                path: p.to_path_buf(),
                source: e,
            })?,
        )),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    })
}

fn run(cli: Cli) -> Result<(), Error> {
    let defaults = Profile::from(cli.profile).defaults();
    match cli.command {
        Command::Metrics { input, dmax, distance } => {
            let pool = io::load_reports(&input)?;
            let mode = match (distance, pool.crs()) {
                (Some(d), _) => d.into(),
                (None, Some(crs)) => crs.distance_mode(),
                (None, None) => defaults.distance_mode,
            };
            let cfg = MetricsConfig::new(dmax.unwrap_or(defaults.d_max), mode)?;
            let s = metrics::exposure(pool.reports(), &cfg)?;
            println!("n {}", s.n);
            println!("coverage {:.6}", s.coverage);
            println!("uniformity {:.6}", s.uniformity);
            println!("exposure {:.6}", s.exposure);
        }

        Command::Gen {
            pattern: pat,
            n,
            dmax,
            seed,
            owner,
            independent_angle,
            output: out,
        } => {
            let spec = PatternSpec {
                angle: angle(independent_angle),
                ..PatternSpec::new(pat.parse()?, dmax.unwrap_or(defaults.d_max), effective_seed(seed)?)?
            };
            let owner = match owner {
                OwnerArg::Mine => OwnerTag::Mine,
                OwnerArg::Other => OwnerTag::Other,
            };
            let reports: Vec<Report> = pattern::generate_points(&spec, n)?
                .into_iter()
                .map(|p| Report::synthetic(p, owner))
                .collect();
            io::write_reports_to(output(out.as_deref())?, &reports)?;
        }

        Command::Anonymize {
            input,
            pool,
            poi,
            allow_raw_location,
            places,
            kind,
            k,
            dmax,
            distance,
            delta,
            output: out,
        } => {
            let reals = io::load_reports(&input)?;
            let mut pool: ReportPool = io::load_reports(&pool)?;
            let poi = match poi {
                Some(p) => io::load_pois(p)?,
                None => PoiIndex::default(),
            };
            let profile = match places {
                Some(p) => io::load_profile(p)?,
                None => PlaceProfile::default(),
            };
            let mode = match (distance, reals.crs()) {
                (Some(d), _) => d.into(),
                (None, Some(crs)) => crs.distance_mode(),
                (None, None) => defaults.distance_mode,
            };
            let metrics_cfg = MetricsConfig::new(dmax.unwrap_or(defaults.d_max), mode)?;
            let anon = AnonymityConfig {
                quantize_m: defaults.quantize_m,
                ..AnonymityConfig::new(k.map_or(defaults.k, |k| k as usize), metrics_cfg)?
            };
            let place_cfg = PlaceConfig::new(delta.unwrap_or(defaults.delta), defaults.delta_l_seconds)?;
            let kind = match kind {
                KindArg::Report => RequestKind::CrowdsensedReport,
                KindArg::Query => RequestKind::Query,
            };

            let mut w = output(out.as_deref())?;
            let (mut submitted, mut suppressed, mut transmitted, mut degraded) = (0, 0, 0, 0);
            for real in reals.reports() {
                let scan = Fingerprint {
                    bssids: real.ambient_aps.clone(),
                    timestamp: real.timestamp,
                };
                let ctx = SensingContext {
                    profile: &profile,
                    pool: &pool,
                    poi: &poi,
                    place: place_cfg,
                    anonymity: anon,
                    allow_raw_location,
                };
                let decision = anonymity::process_outgoing(kind, real, &scan, &ctx)?;
                io::write_transcript_line(&mut w, &decision)?;
                match decision {
                    Decision::Suppressed => suppressed += 1,
                    Decision::Submit(set) => {
                        submitted += 1;
                        transmitted += set.len();
                        degraded += usize::from(set.degraded);
                        // The submitted genuine report joins this user's own history.
                        pool.push(Report {
                            owner: OwnerTag::Mine,
                            ..set.real().clone()
                        })?;
                    }
                }
            }
            w.flush().map_err(|e| Error::Io {
                path: out.unwrap_or_else(|| "<stdout>".into()),
                source: e,
            })?;
            eprintln!("submitted {submitted}, suppressed {suppressed}, reports transmitted {transmitted}");
            if degraded > 0 {
                eprintln!("warning: {degraded} submissions carried fewer than k reports (pool exhausted)");
            }
        }

        Command::PlaceReplay {
            input,
            delta,
            delta_l,
            places,
            output: out,
        } => {
            let cfg = PlaceConfig::new(
                delta.unwrap_or(defaults.delta),
                delta_l.unwrap_or(defaults.delta_l_seconds),
            )?;
            let scans = io::load_scans(&input)?;
            let start = match places {
                Some(p) => io::load_profile(p)?,
                None => PlaceProfile::default(),
            };
            let (profile, verdicts) = place::replay(start, &scans, &cfg)?;
            io::save_profile(&profile, &out)?;
            let in_place = verdicts.iter().filter(|v| **v == Verdict::InPrivatePlace).count();
            println!("places_learned {}", profile.places.len());
            println!("suppressed_scans {in_place}");
        }

        Command::SimMetricStudy {
            pattern: pats,
            n,
            step,
            common,
        } => {
            let patterns = if pats.is_empty() {
                PatternKind::study_set()
            } else {
                pats.iter().map(|p| p.parse()).collect::<Result<_, _>>()?
            };
            let cfg = MetricStudyConfig {
                patterns,
                n_max: n,
                step: step as usize,
                runs: common.runs as usize,
                seed: effective_seed(common.seed)?,
                d_max: common.dmax.unwrap_or(defaults.d_max),
                angle: angle(common.independent_angle),
                parallel: !common.sequential,
            };
            let rows = sim::run_metric_study(&cfg)?;
            sim::write_metric_csv(output(common.output.as_deref())?, &cfg, &rows)?;
        }

        Command::SimAnonymity {
            pattern: pat,
            omega,
            n,
            k,
            common,
        } => {
            let cfg = AnonymityStudyConfig {
                pattern: pat.parse()?,
                omega_size: omega,
                n_real: n,
                k: k.map_or(defaults.k, |k| k as usize),
                runs: common.runs as usize,
                seed: effective_seed(common.seed)?,
                d_max: common.dmax.unwrap_or(defaults.d_max),
                angle: angle(common.independent_angle),
                parallel: !common.sequential,
            };
            let traces = sim::run_anonymity_study(&cfg)?;
            sim::write_anonymity_csv(output(common.output.as_deref())?, &cfg, &traces)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_usage() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
