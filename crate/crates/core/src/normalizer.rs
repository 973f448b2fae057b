//! The normalizing event on `Λ_n`: two closed left-right crossings squeezing
//! an open one, the touch points `u`, `v` where the closed clusters nearly
//! meet, and the conditional quantiles of `X_n = D(u, v)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::{left_to_right, LatticeBox, Side, TriCoord};
use crate::metrics::geodesic_distance;
use crate::percolation::{
    crossing_cluster_count, label_clusters, sample, ClusterId, ClusterLabeling, Color, Configuration, Direction,
};
use crate::resistance::{resistance_between, ClusterGraph, ResistanceError, DEFAULT_MAX_ITERS, DEFAULT_TOLERANCE};
use crate::rng::derive_seed;
use crate::stats::quantile_with_ci;

pub const BOOTSTRAP_RESAMPLES: usize = 1000;
pub const MAX_ATTEMPTS: u64 = 10_000_000;
pub const MIN_ACCEPTANCE: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    Geo,
    Res,
}

impl std::str::FromStr for MetricKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "geo" => Ok(MetricKind::Geo),
            "res" => Ok(MetricKind::Res),
            _ => Err(format!("unknown metric {s:?} (expected geo or res)")),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum NormalizerError {
    #[error("touch points missing or not on one open cluster")]
    Structural,
    #[error(transparent)]
    Resistance(#[from] ResistanceError),
    #[error("p must lie in (0, 1/2], got {0}")]
    BadLevel(f64),
    #[error("need at least 100 conditional samples, got {0}")]
    TooFewSamples(usize),
    #[error("event accepted {accepted} of {attempts} attempts at n = {n}; rate below {MIN_ACCEPTANCE}")]
    Infeasible { n: u32, attempts: u64, accepted: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventEReport {
    pub holds: bool,
    pub top_cluster_id: Option<ClusterId>,
    pub bottom_cluster_id: Option<ClusterId>,
    pub middle_open_cluster_id: Option<ClusterId>,
    pub u: Option<TriCoord>,
    pub v: Option<TriCoord>,
    pub delta_used: f64,
    pub strict: bool,
}

impl EventEReport {
    fn fail(delta: f64, strict: bool) -> Self {
        EventEReport {
            holds: false,
            top_cluster_id: None,
            bottom_cluster_id: None,
            middle_open_cluster_id: None,
            u: None,
            v: None,
            delta_used: delta,
            strict,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileEstimate {
    pub n: u32,
    pub p: f64,
    pub metric_kind: MetricKind,
    pub q_hat: f64,
    pub n_conditional_samples: usize,
    pub ci: (f64, f64),
    pub attempts: u64,
    pub acceptance_rate: f64,
    pub delta: f64,
    pub strict: bool,
}

/// `max(1/10000, 4/n)`, capped at `1/8` so small boxes stay below `1/4`.
pub fn default_delta(n: u32) -> f64 {
    (4.0 / n as f64).clamp(1e-4, 0.125)
}

/// Position in the unit square, sites taken at cell centers.
fn unit_position(bx: &LatticeBox, s: TriCoord) -> (f64, f64) {
    let n = bx.side as f64;
    ((s.a - bx.lo.a) as f64 / n + 0.5 / n, (s.b - bx.lo.b) as f64 / n + 0.5 / n)
}

/// Side midpoints, clockwise from the top.
const MIDPOINTS: [(f64, f64); 4] = [(0.5, 1.0), (1.0, 0.5), (0.5, 0.0), (0.0, 0.5)];

fn near(p: (f64, f64), c: (f64, f64), r: f64) -> bool {
    (p.0 - c.0).hypot(p.1 - c.1) <= r
}

/// Cluster touches `side` within `delta` of midpoint `hit` and stays beyond
/// `2 delta` of every midpoint in `avoid`.
fn midpoint_window(lab: &ClusterLabeling, id: ClusterId, side: Side, hit: usize, avoid: &[usize], delta: f64) -> bool {
    let bx = lab.domain();
    let mut touched = false;
    for s in lab.members(id) {
        let p = unit_position(&bx, s);
        if avoid.iter().any(|&k| near(p, MIDPOINTS[k], 2.0 * delta)) {
            return false;
        }
        touched |= bx.on_side(s, side) && near(p, MIDPOINTS[hit], delta);
    }
    touched
}

/// Decide the event and find the touch points.
pub fn detect_event_e(cfg: &Configuration, delta: f64, strict: bool) -> EventEReport {
    detect_event_e_in(&label_clusters(cfg), delta, strict)
}

pub fn detect_event_e_in(lab: &ClusterLabeling, delta: f64, strict: bool) -> EventEReport {
    assert!(delta > 0.0 && delta < 0.25, "delta must lie in (0, 1/4)");
    let fail = EventEReport::fail(delta, strict);
    let bx = lab.domain();
    let closed = lab.spanning(Color::Closed, Side::Left, Side::Right);
    if closed.len() < 2 {
        return fail;
    }
    // Disjoint crossing clusters are stacked vertically; the highest contact
    // with the left side orders them.
    let height = |id: ClusterId| {
        bx.boundary_sites(Side::Left).into_iter().filter(|&s| lab.label(s) == Some(id)).map(|s| s.b).max().unwrap()
    };
    let top = *closed.iter().max_by_key(|&&id| height(id)).unwrap();
    let bottom = *closed.iter().min_by_key(|&&id| height(id)).unwrap();

    let mut touch: Vec<TriCoord> = bx
        .sites()
        .filter(|&s| lab.config().get(s))
        .filter(|&s| {
            let nb = bx.neighbors(s);
            nb.iter().any(|&t| lab.label(t) == Some(top)) && nb.iter().any(|&t| lab.label(t) == Some(bottom))
        })
        .collect();
    if touch.is_empty() {
        return fail;
    }
    touch.sort_by(left_to_right);
    let (u, v) = (touch[0], *touch.last().unwrap());
    let middle = lab.label(u).unwrap();
    if !lab.spanning(Color::Open, Side::Left, Side::Right).contains(&middle) {
        return fail;
    }
    debug_assert!(touch.iter().all(|&s| lab.label(s) == Some(middle)));
    if strict
        && !(midpoint_window(lab, top, Side::Top, 0, &[1, 2, 3], delta)
            && midpoint_window(lab, bottom, Side::Bottom, 2, &[0, 1, 3], delta)
            && midpoint_window(lab, middle, Side::Left, 3, &[0, 2], delta)
            && midpoint_window(lab, middle, Side::Right, 1, &[0, 2], delta))
    {
        return fail;
    }
    EventEReport {
        holds: true,
        top_cluster_id: Some(top),
        bottom_cluster_id: Some(bottom),
        middle_open_cluster_id: Some(middle),
        u: Some(u),
        v: Some(v),
        delta_used: delta,
        strict,
    }
}

/// `X = D(u, v)` on the middle open cluster.
pub fn compute_xn(cfg: &Configuration, report: &EventEReport, kind: MetricKind) -> Result<f64, NormalizerError> {
    compute_xn_in(&label_clusters(cfg), report, kind)
}

pub fn compute_xn_in(lab: &ClusterLabeling, report: &EventEReport, kind: MetricKind) -> Result<f64, NormalizerError> {
    let (Some(u), Some(v)) = (report.u, report.v) else { return Err(NormalizerError::Structural) };
    let id = lab.label(u).ok_or(NormalizerError::Structural)?;
    if id.color != Color::Open || lab.label(v) != Some(id) {
        return Err(NormalizerError::Structural);
    }
    if u == v {
        return Ok(0.0);
    }
    match kind {
        MetricKind::Geo => {
            let d = geodesic_distance(lab, u, v).map_err(|_| NormalizerError::Structural)?;
            Ok(d.finite().ok_or(NormalizerError::Structural)? as f64)
        }
        MetricKind::Res => {
            let g = ClusterGraph::from_cluster(lab, id);
            Ok(resistance_between(&g, &[u], &[v], DEFAULT_TOLERANCE, DEFAULT_MAX_ITERS)?)
        }
    }
}

/// Conditional samples of `X_n`: attempts `i = 0, 1, …` use seed
/// `derive_seed(seed, n, i)`; the first `count` accepted attempts in index
/// order are kept, so the result does not depend on the thread count.
pub fn sample_xn(n: u32, kind: MetricKind, count: usize, seed: u64, strict: bool) -> Result<(Vec<f64>, u64), NormalizerError> {
    let (mut xs, attempts) = sample_xn_kinds(n, &[kind], count, seed, strict)?;
    Ok((xs.pop().unwrap(), attempts))
}

/// Like [`sample_xn`] but evaluating several metrics on the same accepted
/// configurations; one sample vector per kind.
pub fn sample_xn_kinds(
    n: u32,
    kinds: &[MetricKind],
    count: usize,
    seed: u64,
    strict: bool,
) -> Result<(Vec<Vec<f64>>, u64), NormalizerError> {
    let delta = default_delta(n);
    let bx = LatticeBox::lambda(n);
    let attempt = |i: u64| -> Result<Option<Vec<f64>>, NormalizerError> {
        let cfg = sample(bx, derive_seed(seed, n as u64, i), 0.5);
        // Cheap rejection: the event needs two closed left-right crossing clusters.
        if crossing_cluster_count(&cfg, Color::Closed, Direction::LR) < 2 {
            return Ok(None);
        }
        let lab = label_clusters(&cfg);
        let report = detect_event_e_in(&lab, delta, strict);
        if !report.holds {
            return Ok(None);
        }
        kinds.iter().map(|&k| compute_xn_in(&lab, &report, k)).collect::<Result<Vec<_>, _>>().map(Some)
    };
    let mut xs: Vec<Vec<f64>> = vec![Vec::with_capacity(count); kinds.len()];
    let mut accepted = 0;
    let mut next = 0u64;
    while accepted < count {
        let rate = if next == 0 { 0.01 } else { (accepted as f64 / next as f64).max(1e-3) };
        let batch = (((count - accepted) as f64 / rate * 1.1) as u64).clamp(256, 1 << 16);
        let results: Vec<_> = (next..next + batch).into_par_iter().map(attempt).collect();
        for (k, r) in results.into_iter().enumerate() {
            if let Some(vals) = r? {
                for (dst, v) in xs.iter_mut().zip(vals) {
                    dst.push(v);
                }
                accepted += 1;
                if accepted == count {
                    return Ok((xs, next + k as u64 + 1));
                }
            }
        }
        next += batch;
        if next >= MAX_ATTEMPTS && (accepted as f64) < MIN_ACCEPTANCE * next as f64 {
            return Err(NormalizerError::Infeasible { n, attempts: next, accepted });
        }
    }
    Ok((xs, next))
}

/// Empirical `(1 − p)` quantile of `X_n` given the event, with a bootstrap
/// 95% interval.
pub fn estimate_qn(
    n: u32,
    p: f64,
    kind: MetricKind,
    n_conditional: usize,
    seed: u64,
    strict: bool,
) -> Result<QuantileEstimate, NormalizerError> {
    if !(p > 0.0 && p <= 0.5) {
        return Err(NormalizerError::BadLevel(p));
    }
    if n_conditional < 100 {
        return Err(NormalizerError::TooFewSamples(n_conditional));
    }
    let (xs, attempts) = sample_xn(n, kind, n_conditional, seed, strict)?;
    Ok(quantile_from_samples(n, p, kind, &xs, attempts, seed, strict))
}

/// Quantile record from already drawn conditional samples.
pub fn quantile_from_samples(n: u32, p: f64, kind: MetricKind, xs: &[f64], attempts: u64, seed: u64, strict: bool) -> QuantileEstimate {
    let (q_hat, ci) = quantile_with_ci(xs, 1.0 - p, BOOTSTRAP_RESAMPLES, derive_seed(seed, n as u64, u64::MAX));
    QuantileEstimate {
        n,
        p,
        metric_kind: kind,
        q_hat,
        n_conditional_samples: xs.len(),
        ci,
        attempts,
        acceptance_rate: xs.len() as f64 / attempts as f64,
        delta: default_delta(n),
        strict,
    }
}

/// Fraction of `attempts` samples of `Λ_n` realizing the event.
pub fn acceptance_rate(n: u32, attempts: u64, seed: u64, strict: bool) -> f64 {
    let bx = LatticeBox::lambda(n);
    let delta = default_delta(n);
    let hits: u64 = (0..attempts)
        .into_par_iter()
        .map(|i| {
            let cfg = sample(bx, derive_seed(seed, n as u64, i), 0.5);
            (crossing_cluster_count(&cfg, Color::Closed, Direction::LR) >= 2 && detect_event_e(&cfg, delta, strict).holds)
                as u64
        })
        .sum();
    hits as f64 / attempts as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arms::{has_alternating_arms, ArmQuery, Sigma};
    use crate::lattice::Annulus;
    use crate::percolation::{has_crossing, Direction};
    use crate::resistance::resistance_exact_between;
    use num_rational::BigRational;
    use num_traits::ToPrimitive;

    fn t(a: i32, b: i32) -> TriCoord {
        TriCoord::new(a, b)
    }

    /// Λ_9 with closed bars on rows 2 and 6, open elsewhere, plus closed spurs.
    fn bars(spurs: &[(i32, i32)]) -> Configuration {
        let bx = LatticeBox::lambda(9);
        Configuration::from_fn(bx, |s| s.b != 2 && s.b != 6 && !spurs.contains(&(s.a, s.b)))
    }

    /// Hand oracle: open sites with a closed neighbor in the row-6 cluster and
    /// one in the row-2 cluster, by flood fill from those rows.
    fn touch_oracle(cfg: &Configuration) -> Vec<TriCoord> {
        let bx = cfg.domain();
        let flood = |row: i32| {
            let mut seen = vec![false; bx.len()];
            let mut stack: Vec<_> = bx.sites().filter(|s| s.b == row && !cfg.get(*s)).collect();
            while let Some(s) = stack.pop() {
                if std::mem::replace(&mut seen[bx.index(s)], true) {
                    continue;
                }
                stack.extend(bx.neighbors(s).into_iter().filter(|&t| !cfg.get(t)));
            }
            seen
        };
        let (hi, lo) = (flood(6), flood(2));
        let mut out: Vec<_> = bx
            .sites()
            .filter(|&s| cfg.get(s))
            .filter(|&s| bx.neighbors(s).iter().any(|&t| hi[bx.index(t)]) && bx.neighbors(s).iter().any(|&t| lo[bx.index(t)]))
            .collect();
        out.sort_by(left_to_right);
        out
    }

    #[test]
    fn all_open_fails() {
        let cfg = Configuration::open(LatticeBox::lambda(9));
        assert!(!detect_event_e(&cfg, 0.1, false).holds);
    }

    #[test]
    fn single_pinch() {
        let cfg = bars(&[(4, 5), (4, 3)]);
        assert_eq!(touch_oracle(&cfg), vec![t(4, 4)]);
        let r = detect_event_e(&cfg, default_delta(9), false);
        assert!(r.holds);
        assert_eq!((r.u, r.v), (Some(t(4, 4)), Some(t(4, 4))));
        assert_ne!(r.top_cluster_id, r.bottom_cluster_id);
        let lab = label_clusters(&cfg);
        assert_eq!(r.top_cluster_id, lab.label(t(0, 6)));
        assert_eq!(r.bottom_cluster_id, lab.label(t(0, 2)));
        assert_eq!(compute_xn(&cfg, &r, MetricKind::Geo).unwrap(), 0.0);
        assert_eq!(compute_xn(&cfg, &r, MetricKind::Res).unwrap(), 0.0);
    }

    #[test]
    fn two_pinches_six_hops() {
        let cfg = bars(&[(1, 5), (1, 3), (7, 5), (7, 3)]);
        assert_eq!(touch_oracle(&cfg), vec![t(1, 4), t(7, 4)]);
        let r = detect_event_e(&cfg, default_delta(9), false);
        assert!(r.holds);
        assert_eq!((r.u, r.v), (Some(t(1, 4)), Some(t(7, 4))));
        assert_eq!(compute_xn(&cfg, &r, MetricKind::Geo).unwrap(), 6.0);
        let lab = label_clusters(&cfg);
        let g = ClusterGraph::from_cluster(&lab, r.middle_open_cluster_id.unwrap());
        let exact: BigRational = resistance_exact_between(&g, &[t(1, 4)], &[t(7, 4)], 2000).unwrap();
        let res = compute_xn(&cfg, &r, MetricKind::Res).unwrap();
        assert!((res - exact.to_f64().unwrap()).abs() < 1e-9);
    }

    #[test]
    fn adjacent_touch_points() {
        let cfg = bars(&[(3, 5), (3, 3), (4, 5), (4, 3)]);
        let r = detect_event_e(&cfg, default_delta(9), false);
        assert_eq!(touch_oracle(&cfg), vec![t(3, 4), t(4, 4)]);
        assert_eq!((r.u, r.v), (Some(t(3, 4)), Some(t(4, 4))));
        assert_eq!(compute_xn(&cfg, &r, MetricKind::Geo).unwrap(), 1.0);
    }

    #[test]
    fn merged_closed_clusters_fail() {
        // A closed column joins the two bars into one cluster.
        let cfg = bars(&[(4, 5), (4, 4), (4, 3)]);
        let lab = label_clusters(&cfg);
        assert_eq!(lab.label(t(0, 6)), lab.label(t(0, 2)));
        assert!(!detect_event_e(&cfg, default_delta(9), false).holds);
    }

    #[test]
    fn far_apart_bars_fail() {
        assert!(!detect_event_e(&bars(&[]), default_delta(9), false).holds);
    }

    #[test]
    fn structural_error_on_bad_report() {
        let cfg = bars(&[(4, 5), (4, 3)]);
        let mut r = detect_event_e(&cfg, default_delta(9), false);
        r.v = Some(t(0, 2));
        assert_eq!(compute_xn(&cfg, &r, MetricKind::Geo), Err(NormalizerError::Structural));
    }

    /// Closed rows `lo` and `hi` with spurs meeting at `(c, mid)`, and closed
    /// stems from the spurs' columns to the bottom and top sides.
    fn squeeze(n: u32, lo: i32, hi: i32, stems: bool) -> Configuration {
        let c = n as i32 / 2;
        let mid = (lo + hi) / 2;
        Configuration::from_fn(LatticeBox::lambda(n), |s| {
            let top = s.b == hi || (s.a == c && s.b > mid && (stems || s.b < hi));
            let bottom = s.b == lo || (s.a == c && s.b < mid && (stems || s.b > lo));
            !(top || bottom)
        })
    }

    #[test]
    fn strict_windows() {
        // Bars close to mid-height touch the left and right sides within
        // 2 delta of their midpoints: loose holds, strict fails.
        let cfg = squeeze(21, 8, 12, true);
        let loose = detect_event_e(&cfg, default_delta(21), false);
        assert!(loose.holds);
        assert_eq!((loose.u, loose.v), (Some(t(10, 10)), Some(t(10, 10))));
        assert!(!detect_event_e(&cfg, default_delta(21), true).holds);

        // Bars at heights 1/4 and 3/4 with stems to the top and bottom midpoints.
        let cfg = squeeze(41, 10, 30, true);
        let strict = detect_event_e(&cfg, default_delta(41), true);
        assert!(strict.holds);
        assert_eq!(strict.u, Some(t(20, 20)));
        // With the closed clusters pinned to the top and bottom sides, every
        // open crossing of the whole box goes through the touch point.
        assert!(has_crossing(&cfg, Color::Open, Direction::LR));
        assert!(!has_crossing(&cfg.with(t(20, 20), false), Color::Open, Direction::LR));
        // Without stems the closed clusters never reach the top and bottom sides.
        let cfg = squeeze(41, 10, 30, false);
        assert!(detect_event_e(&cfg, default_delta(41), false).holds);
        assert!(!detect_event_e(&cfg, default_delta(41), true).holds);
    }

    #[test]
    fn touch_points_are_pivotal_with_four_arms() {
        let n = 24;
        let bx = LatticeBox::lambda(n);
        let mut held = 0;
        let mut armed = 0;
        for seed in 0..6000 {
            let cfg = sample(bx, seed, 0.5);
            let r = detect_event_e(&cfg, default_delta(n), false);
            if !r.holds {
                continue;
            }
            held += 1;
            assert_eq!(touch_oracle_general(&cfg, &r), (r.u.unwrap(), r.v.unwrap()));
            let lab = label_clusters(&cfg);
            let middle = Configuration::from_fn(bx, |s| lab.label(s) == r.middle_open_cluster_id);
            for x in [r.u.unwrap(), r.v.unwrap()] {
                // Every open left-right crossing inside the middle cluster uses x.
                assert!(!has_crossing(&middle.with(x, false), Color::Open, Direction::LR), "seed {seed}");
                let room = (2..n).take_while(|&k| bx.contains_box(&Annulus::new(x, 2, k).bounding_box())).last();
                if let Some(big) = room.filter(|&k| k >= 3) {
                    let q = ArmQuery::new(Annulus::new(x, 2, big), Sigma::alternating(4), false);
                    assert!(has_alternating_arms(&cfg, &q).unwrap(), "seed {seed} at {x}");
                    armed += 1;
                }
            }
        }
        assert!(held > 15 && armed > 10, "{held} {armed}");
    }

    /// Extreme touch points by flood fill from the two extreme closed crossings.
    fn touch_oracle_general(cfg: &Configuration, r: &EventEReport) -> (TriCoord, TriCoord) {
        let lab = label_clusters(cfg);
        let bx = cfg.domain();
        let mut pts: Vec<_> = bx
            .sites()
            .filter(|&s| {
                cfg.get(s)
                    && s.neighbors6().iter().any(|&t| bx.contains(t) && lab.label(t) == r.top_cluster_id)
                    && s.neighbors6().iter().any(|&t| bx.contains(t) && lab.label(t) == r.bottom_cluster_id)
            })
            .collect();
        pts.sort_by(left_to_right);
        (pts[0], *pts.last().unwrap())
    }

    #[test]
    fn quantile_estimates() {
        let est = estimate_qn(16, 0.5, MetricKind::Geo, 200, 3, false).unwrap();
        assert!(est.ci.0 <= est.q_hat && est.q_hat <= est.ci.1);
        assert_eq!(est, estimate_qn(16, 0.5, MetricKind::Geo, 200, 3, false).unwrap());
        let (xs, attempts) = sample_xn(16, MetricKind::Geo, 200, 3, false).unwrap();
        assert_eq!(attempts, est.attempts);
        let mut sorted = xs.clone();
        sorted.sort_by(|a, b| a.total_cmp(b));
        assert_eq!(est.q_hat, sorted[99]);
        let qs: Vec<f64> = [0.5, 0.25, 0.1]
            .iter()
            .map(|&p| quantile_from_samples(16, p, MetricKind::Geo, &xs, attempts, 3, false).q_hat)
            .collect();
        assert!(qs[0] <= qs[1] && qs[1] <= qs[2]);
        assert_eq!(estimate_qn(16, 0.6, MetricKind::Geo, 200, 3, false), Err(NormalizerError::BadLevel(0.6)));
        assert_eq!(estimate_qn(16, 0.5, MetricKind::Geo, 10, 3, false), Err(NormalizerError::TooFewSamples(10)));
    }

    #[test]
    fn thread_count_does_not_matter() {
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let a = one.install(|| sample_xn(12, MetricKind::Res, 120, 9, false).unwrap());
        let b = sample_xn(12, MetricKind::Res, 120, 9, false).unwrap();
        assert_eq!(a, b);
        let (both, attempts) = sample_xn_kinds(12, &[MetricKind::Geo, MetricKind::Res], 120, 9, false).unwrap();
        assert_eq!((both[1].clone(), attempts), b);
        assert!(both[0].iter().zip(&both[1]).all(|(g, r)| *r <= g + 1e-9));
    }
}
