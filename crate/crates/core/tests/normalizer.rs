use perc_lab::normalizer::{acceptance_rate, detect_event_e, default_delta};
use perc_lab::percolation::Configuration;
use perc_lab::LatticeBox;

#[test]
fn acceptance_is_stable_in_n() {
    let rates: Vec<f64> = [16, 32, 64].iter().map(|&n| acceptance_rate(n, 40_000, 77, false)).collect();
    let (lo, hi) = rates.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &r| (a.min(r), b.max(r)));
    assert!(lo > 0.0 && hi <= 3.0 * lo, "{rates:?}");
}

#[test]
fn no_closed_crossing_no_event() {
    for n in [4, 9, 30] {
        let r = detect_event_e(&Configuration::open(LatticeBox::lambda(n)), default_delta(n), false);
        assert!(!r.holds && r.u.is_none() && r.v.is_none());
    }
}
