//! Disjoint arms across annuli, arm probabilities, and pivotal sites.

mod alternating;
mod domain;
mod estimate;
mod flow;
mod mono;
mod pivotal;

pub use alternating::{has_alternating_arms, sector_word};
pub use estimate::{estimate_arm_probability, ArmFamily};
pub use mono::{count_disjoint_monochromatic, count_disjoint_arms};
pub use pivotal::{find_pivotals, pivotal_chain};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::lattice::Annulus;
use crate::percolation::Color;

#[derive(Debug, Error, PartialEq)]
pub enum ArmError {
    #[error("annulus {0:?} does not fit inside the sampled box")]
    OutsideSupport(Annulus),
    #[error("half-plane annulus center must lie on the bottom line of the box")]
    HalfPlaneNotAnchored,
    #[error("color sequence must be nonempty")]
    EmptySigma,
    #[error("bad color sequence {0:?}: use letters O and C")]
    BadSigma(String),
    #[error("configuration has no open left-right crossing")]
    NoCrossing,
}

/// Color sequence of arms, read clockwise.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Sigma(Vec<Color>);

impl Sigma {
    pub fn new(colors: Vec<Color>) -> Result<Self, ArmError> {
        if colors.is_empty() {
            return Err(ArmError::EmptySigma);
        }
        Ok(Sigma(colors))
    }

    /// `j` alternating colors starting with open.
    pub fn alternating(j: usize) -> Self {
        assert!(j >= 1);
        Sigma((0..j).map(|i| if i % 2 == 0 { Color::Open } else { Color::Closed }).collect())
    }

    pub fn monochromatic(color: Color, j: usize) -> Self {
        assert!(j >= 1);
        Sigma(vec![color; j])
    }

    pub fn colors(&self) -> &[Color] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.0.iter().all(|&c| c == self.0[0])
    }
}

impl FromStr for Sigma {
    type Err = ArmError;

    fn from_str(s: &str) -> Result<Self, ArmError> {
        let colors: Option<Vec<Color>> = s.chars().map(Color::from_letter).collect();
        Sigma::new(colors.ok_or_else(|| ArmError::BadSigma(s.to_string()))?)
    }
}

impl fmt::Display for Sigma {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.0 {
            write!(f, "{}", c.letter())?;
        }
        Ok(())
    }
}

impl Serialize for Sigma {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Sigma {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmQuery {
    pub annulus: Annulus,
    pub sigma: Sigma,
    pub half_plane: bool,
}

impl ArmQuery {
    pub fn new(annulus: Annulus, sigma: Sigma, half_plane: bool) -> Self {
        ArmQuery { annulus, sigma, half_plane }
    }
}

/// Hit counts for an arm event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmCount {
    pub query: ArmQuery,
    /// Whether any sample realized the event.
    pub satisfied: bool,
    pub n_samples: u64,
    pub n_hits: u64,
}

impl ArmCount {
    pub fn estimate(&self) -> f64 {
        self.n_hits as f64 / self.n_samples as f64
    }

    /// Binomial standard error of [`ArmCount::estimate`].
    pub fn std_err(&self) -> f64 {
        let p = self.estimate();
        (p * (1.0 - p) / self.n_samples as f64).sqrt()
    }
}
