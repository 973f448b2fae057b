mod common;

use common::*;
use perc_lab::arms::count_disjoint_arms;
use perc_lab::lattice::{Annulus, TriCoord};
use perc_lab::percolation::{Color, Configuration};

#[test]
fn crossing_duality_on_lambda_3() {
    assert_eq!(crossing_exhaustive(), (512, 0));
}

#[test]
fn brute_force_arm_counts_by_hand() {
    let full = |r_in, r_out, half| {
        let ann = Annulus::new(TriCoord::ORIGIN, r_in, r_out);
        let cfg = Configuration::open(ann.bounding_box());
        (brute_disjoint_arms(&cfg, &ann, half, Color::Open), count_disjoint_arms(&cfg, ann, half, Color::Open).unwrap())
    };
    // One inner site: one path.
    assert_eq!(full(1, 3, false), (1, 1));
    // Six of the eight layer-one sites touch the center.
    assert_eq!(full(2, 3, false), (6, 6));
    let ann = Annulus::new(TriCoord::ORIGIN, 2, 3);
    let closed = Configuration::closed(ann.bounding_box());
    assert_eq!(brute_disjoint_arms(&closed, &ann, false, Color::Open), 0);
    assert_eq!(brute_disjoint_arms(&closed, &ann, false, Color::Closed), 6);
}

#[test]
fn small_annuli_cover_both_planes() {
    let a = small_annuli(40);
    assert!(a.iter().any(|x| x.1) && a.iter().any(|x| !x.1));
    assert!(a.iter().any(|(ann, h)| !h && (ann.r_in, ann.r_out) == (3, 4)));
}

#[test]
fn max_flow_matches_brute_force() {
    let (instances, failures) = menger_check(26, 150, 5);
    assert!(instances > 1000);
    assert_eq!(failures, 0);
}

#[test]
fn resistance_solver_and_laws() {
    let r = resistance_check(25, 600, 3);
    assert!(r.max_rel_err <= 1e-8, "{}", r.max_rel_err);
    assert_eq!(r.law_failures, 0);
    assert!(r.series_checked > 0 && r.rayleigh_checked > 0);
}

#[test]
fn gh_exactness_checks() {
    let g = gh_check(60, 4);
    assert_eq!((g.two_point_failures, g.identity_failures, g.dominance_failures), (0, 0, 0));
}
