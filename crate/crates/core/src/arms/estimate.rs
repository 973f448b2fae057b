use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::alternating::arm_event;
use super::domain::{ArmDomain, Probe, Scratch};
use super::{ArmCount, ArmError, ArmQuery, Sigma};
use crate::lattice::{Annulus, LatticeBox, TriCoord};
use crate::percolation::LazyConfiguration;
use crate::rng::derive_seed;

/// Arm event `A_σ(r, R)` around the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmFamily {
    pub r: u32,
    #[serde(rename = "R")]
    pub big_r: u32,
    pub sigma: Sigma,
    pub half_plane: bool,
}

impl ArmFamily {
    pub fn new(r: u32, big_r: u32, sigma: Sigma, half_plane: bool) -> Self {
        ArmFamily { r, big_r, sigma, half_plane }
    }

    pub fn query(&self) -> ArmQuery {
        ArmQuery::new(Annulus::new(TriCoord::ORIGIN, self.r, self.big_r), self.sigma.clone(), self.half_plane)
    }

    /// Sampling box: `B(0, 2R)`, or its upper half anchored at the origin's row.
    pub fn frame(&self) -> LatticeBox {
        let m = 2 * self.big_r as i32 - 1;
        if self.half_plane {
            LatticeBox::new(TriCoord::new(-m, 0), 2 * m as u32 + 1)
        } else {
            LatticeBox::new(TriCoord::new(-m, -m), 2 * m as u32 + 1)
        }
    }
}

/// Count samples `i = 0..n_samples` (seeded by `derive_seed(seed, R, i)`)
/// realizing the event. Sites are evaluated lazily, so only the explored part
/// of the annulus is ever sampled.
pub fn estimate_arm_probability(family: &ArmFamily, n_samples: u64, seed: u64) -> Result<ArmCount, ArmError> {
    let query = family.query();
    let frame = family.frame();
    let dom = ArmDomain::new(query.annulus, query.half_plane);
    dom.check_support(frame)?;
    let size = family.big_r as u64;
    let hits = (0..n_samples as usize)
        .into_par_iter()
        .with_min_len(64)
        .map_init(Scratch::new, |sc, i| {
            let cfg = LazyConfiguration::new(frame, derive_seed(seed, size, i as u64), 0.5);
            let mut probe = Probe::new(&cfg, dom, sc);
            arm_event(&mut probe, &query.sigma) as u64
        })
        .sum::<u64>();
    Ok(ArmCount { query, satisfied: hits > 0, n_samples, n_hits: hits })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arms::has_alternating_arms;
    use crate::percolation::Color;

    #[test]
    fn center_open_is_half() {
        let fam = ArmFamily::new(1, 1, Sigma::monochromatic(Color::Open, 1), false);
        let n = 40_000;
        let c = estimate_arm_probability(&fam, n, 11).unwrap();
        assert!((c.estimate() - 0.5).abs() <= 4.0 * (0.25 / n as f64).sqrt(), "{}", c.estimate());
    }

    #[test]
    fn lazy_estimate_matches_materialized() {
        let fam = ArmFamily::new(2, 6, Sigma::alternating(4), false);
        let c = estimate_arm_probability(&fam, 300, 5).unwrap();
        let mut hits = 0;
        for i in 0..300 {
            let lazy = LazyConfiguration::new(fam.frame(), derive_seed(5, 6, i), 0.5);
            let cfg = lazy.materialize(fam.frame());
            hits += has_alternating_arms(&cfg, &fam.query()).unwrap() as u64;
        }
        assert_eq!(c.n_hits, hits);
    }

    #[test]
    fn monotone_in_outer_radius() {
        // Same seeds, nested events: A(1, 8) ⊇ A(1, 16) sample-wise on a shared frame.
        let small = ArmFamily::new(1, 8, Sigma::monochromatic(Color::Open, 1), false);
        let big = ArmFamily::new(1, 16, Sigma::monochromatic(Color::Open, 1), false);
        let frame = big.frame();
        for i in 0..200 {
            let cfg = LazyConfiguration::new(frame, i, 0.5);
            let b = has_alternating_arms(&cfg, &big.query()).unwrap();
            let s = has_alternating_arms(&cfg, &small.query()).unwrap();
            assert!(!b || s);
        }
    }
}
