//! Synthetic activity points on a circular field.
//!
//! A point is placed in polar coordinates from a draw `ρ ∈ [0, 1]`:
//! radius `√ρ · d_max / 2` and angle `ρ · 2π`. By default one `ρ` feeds both, so
//! skewed distributions produce points that are both near the center and within
//! a narrow angular sector. [`AngleMode::Independent`] draws the angle from a
//! second `ρ` instead; with the uniform kind that gives an area-uniform disc.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution};

use crate::error::{Error, Result};
use crate::model::GeoPoint;

/// Identifier of the generator recorded in simulation output headers.
pub const RNG_NAME: &str = "chacha8";

pub type SimRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PatternKind {
    Uniform,
    Beta { alpha: f64, beta: f64 },
}

impl PatternKind {
    pub fn beta(alpha: f64, beta: f64) -> Result<Self> {
        let kind = PatternKind::Beta { alpha, beta };
        kind.validate()?;
        Ok(kind)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            PatternKind::Uniform => Ok(()),
            PatternKind::Beta { alpha, beta } if alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite() => {
                Ok(())
            }
            PatternKind::Beta { alpha, beta } => Err(Error::InvalidConfig(format!(
                "beta shape parameters must be positive, got ({alpha}, {beta})"
            ))),
        }
    }

    /// The six activity patterns of the metric study.
    pub fn study_set() -> Vec<PatternKind> {
        let b = |alpha, beta| PatternKind::Beta { alpha, beta };
        vec![
            PatternKind::Uniform,
            b(5.0, 2.0),
            b(2.0, 30.0),
            b(30.0, 5.0),
            b(30.0, 30.0),
            b(5.0, 30.0),
        ]
    }
}

/// Human-readable label, e.g. `uniform` or `BD(5,30)`.
impl fmt::Display for PatternKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PatternKind::Uniform => f.write_str("uniform"),
            PatternKind::Beta { alpha, beta } => write!(f, "BD({alpha},{beta})"),
        }
    }
}

/// Parses `uniform` or `beta:A:B`.
impl FromStr for PatternKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("uniform") {
            return Ok(PatternKind::Uniform);
        }
        let bad = || Error::InvalidConfig(format!("pattern must be `uniform` or `beta:A:B`, got `{s}`"));
        let rest = s.strip_prefix("beta:").ok_or_else(bad)?;
        let (a, b) = rest.split_once(':').ok_or_else(bad)?;
        let alpha = a.parse().map_err(|_| bad())?;
        let beta = b.parse().map_err(|_| bad())?;
        PatternKind::beta(alpha, beta)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum AngleMode {
    /// The radial draw also sets the angle.
    #[default]
    Shared,
    /// The angle comes from a second, independent draw.
    Independent,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatternSpec {
    pub kind: PatternKind,
    /// Field diameter in meters.
    pub d_max: f64,
    pub seed: u64,
    pub angle: AngleMode,
}

impl PatternSpec {
    pub fn new(kind: PatternKind, d_max: f64, seed: u64) -> Result<Self> {
        let spec = Self {
            kind,
            d_max,
            seed,
            angle: AngleMode::Shared,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        self.kind.validate()?;
        if !(self.d_max > 0.0) || !self.d_max.is_finite() {
            return Err(Error::InvalidConfig(format!("d_max must be positive, got {}", self.d_max)));
        }
        Ok(())
    }

    pub fn rng(&self) -> SimRng {
        SimRng::seed_from_u64(self.seed)
    }
}

enum Sampler {
    Uniform,
    Beta(Beta<f64>),
}

impl Sampler {
    fn new(kind: PatternKind) -> Result<Self> {
        kind.validate()?;
        Ok(match kind {
            PatternKind::Uniform => Sampler::Uniform,
            PatternKind::Beta { alpha, beta } => {
                Sampler::Beta(Beta::new(alpha, beta).map_err(|e| Error::InvalidConfig(e.to_string()))?)
            }
        })
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Sampler::Uniform => rng.random::<f64>(),
            Sampler::Beta(b) => b.sample(rng),
        }
    }
}

/// One draw of `ρ` from the pattern's distribution.
pub fn sample_rho<R: Rng + ?Sized>(spec: &PatternSpec, rng: &mut R) -> Result<f64> {
    Ok(Sampler::new(spec.kind)?.sample(rng))
}

/// Maps a radial draw and an angular draw to a point on the field.
pub fn polar_point(rho_radius: f64, rho_angle: f64, d_max: f64) -> GeoPoint {
    let radius = rho_radius.sqrt() * d_max / 2.0;
    let theta = rho_angle * TAU;
    GeoPoint::planar(radius * theta.cos(), radius * theta.sin())
}

/// `n` points from the spec, seeded by `spec.seed`.
pub fn generate_points(spec: &PatternSpec, n: usize) -> Result<Vec<GeoPoint>> {
    generate_points_with(spec, n, &mut spec.rng())
}

/// `n` points from the pattern using the caller's generator (its seed is ignored).
pub fn generate_points_with<R: Rng + ?Sized>(spec: &PatternSpec, n: usize, rng: &mut R) -> Result<Vec<GeoPoint>> {
    spec.validate()?;
    let sampler = Sampler::new(spec.kind)?;
    Ok((0..n)
        .map(|_| {
            let rho = sampler.sample(rng);
            let rho_angle = match spec.angle {
                AngleMode::Shared => rho,
                AngleMode::Independent => sampler.sample(rng),
            };
            polar_point(rho, rho_angle, spec.d_max)
        })
        .collect())
}
