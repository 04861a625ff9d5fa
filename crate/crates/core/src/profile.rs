//! Parameter presets for the two operating regimes: the 500 m simulation field
//! and a city-scale deployment.

use std::str::FromStr;

use crate::error::Error;
use crate::model::DistanceMode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Profile {
    #[default]
    Sim,
    Deploy,
}

/// Default parameters of a [`Profile`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Defaults {
    pub d_max: f64,
    pub k: usize,
    pub distance_mode: DistanceMode,
    pub delta: f64,
    pub delta_l_seconds: i64,
    pub quantize_m: f64,
}

impl Profile {
    pub fn defaults(self) -> Defaults {
        match self {
            Profile::Sim => Defaults {
                d_max: 500.0,
                k: 10,
                distance_mode: DistanceMode::Euclidean,
                delta: 0.2,
                delta_l_seconds: 3600,
                quantize_m: 10.0,
            },
            Profile::Deploy => Defaults {
                d_max: 50_000.0,
                k: 30,
                distance_mode: DistanceMode::Haversine,
                delta: 0.2,
                delta_l_seconds: 3600,
                quantize_m: 10.0,
            },
        }
    }
}

impl FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "sim" => Ok(Profile::Sim),
            "deploy" => Ok(Profile::Deploy),
            other => Err(Error::InvalidConfig(format!("unknown profile `{other}`"))),
        }
    }
}
