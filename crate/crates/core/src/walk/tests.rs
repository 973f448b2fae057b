use num_rational::BigRational;
use num_traits::{One, Zero};

use super::*;
use crate::arms::{estimate_arm_probability, ArmFamily, Sigma};
use crate::percolation::{sample, Configuration};
use crate::scalar::rational;

fn t(a: i32, b: i32) -> TriCoord {
    TriCoord::new(a, b)
}

fn env_from(cfg: Configuration, start: TriCoord) -> WalkEnvironment {
    WalkEnvironment::new(label_clusters(&cfg), start, Conditioning::None).unwrap()
}

fn open_sites(n: u32, sites: &[(i32, i32)]) -> Configuration {
    let v: Vec<_> = sites.iter().map(|&(a, b)| t(a, b)).collect();
    Configuration::from_open_sites(LatticeBox::lambda(n), &v)
}

/// Random small clusters (size in `lo..=hi`) with a start site.
fn small_envs(count: usize, lo: usize, hi: usize, seed0: u64) -> Vec<WalkEnvironment> {
    let mut out = Vec::new();
    let mut seed = seed0;
    while out.len() < count {
        seed += 1;
        let cfg = sample(LatticeBox::lambda(14), seed, 0.55);
        let lab = label_clusters(&cfg);
        let Some(c) = lab.clusters().iter().find(|c| c.id.color == Color::Open && (lo..=hi).contains(&c.size)) else {
            continue;
        };
        let start = lab.members(c.id).nth(seed as usize % c.size).unwrap();
        out.push(WalkEnvironment::new(lab, start, Conditioning::None).unwrap());
    }
    out
}

#[test]
fn return_examples() {
    let single = env_from(open_sites(3, &[(1, 1)]), t(1, 1));
    let p: Vec<BigRational> = return_probabilities(single.graph(), 0, 5);
    assert!(p.iter().all(|x| x.is_one()));

    let edge = env_from(open_sites(3, &[(0, 0), (1, 0)]), t(0, 0));
    let p: Vec<BigRational> = return_probabilities(edge.graph(), edge.start_node(), 5);
    assert!(p.iter().all(|x| x.is_one()));

    let tri = env_from(open_sites(3, &[(0, 0), (1, 0), (0, 1)]), t(0, 0));
    let p: Vec<BigRational> = return_probabilities(tri.graph(), tri.start_node(), 3);
    assert_eq!(p[1], rational(1, 2));
    // From a triangle vertex: p_{2t} = 1/3 + (2/3)(1/4)^t.
    for (k, q) in p.iter().enumerate() {
        let quarter = BigRational::from_integer(4.into()).recip();
        let pow = (0..k).fold(BigRational::one(), |acc, _| acc * quarter.clone());
        assert_eq!(*q, rational(1, 3) + rational(2, 3) * pow);
    }
    assert_eq!(return_probability_series(&tri, 1).unwrap(), vec![1.0, 0.5]);
    assert_eq!(
        return_probability_series_capped(&tri, 1, 2),
        Err(WalkError::TooLarge { size: 3, cap: 2 })
    );
    let closed = WalkEnvironment::new(label_clusters(&open_sites(3, &[])), t(0, 0), Conditioning::None);
    assert!(matches!(closed, Err(WalkError::ClosedStart(_))));
}

#[test]
fn kernel_rows_sum_to_one_exactly() {
    for env in small_envs(30, 1, 100, 0) {
        let g = env.graph();
        for x in 0..g.len() {
            let row: Vec<(usize, BigRational)> = kernel_row(g, x);
            let total = row.iter().fold(BigRational::zero(), |acc, (_, w)| acc + w.clone());
            assert!(total.is_one());
        }
    }
}

#[test]
fn degree_measure_is_stationary() {
    for env in small_envs(30, 5, 300, 100) {
        let g = env.graph();
        let total: f64 = (0..g.len()).map(|x| g.degree(x).max(1) as f64).sum();
        let pi: Vec<f64> = (0..g.len()).map(|x| g.degree(x).max(1) as f64 / total).collect();
        let mut next = vec![0.0; g.len()];
        for x in 0..g.len() {
            for (y, w) in kernel_row::<f64>(g, x) {
                next[y] += pi[x] * w;
            }
        }
        assert!(pi.iter().zip(&next).all(|(a, b)| (a - b).abs() <= 1e-12));
    }
}

#[test]
fn return_probabilities_nonincreasing() {
    for env in small_envs(40, 2, 400, 200) {
        let p = return_probability_series(&env, 60).unwrap();
        assert_eq!(p[0], 1.0);
        assert!(p.windows(2).all(|w| w[1] <= w[0] + 1e-15));
        assert!(p.iter().all(|&q| (0.0..=1.0).contains(&q)));
    }
}

/// Exit times by dense Gaussian elimination on `u = 1 + P u` off the exit set.
fn exit_time_oracle(env: &WalkEnvironment, radius: u32) -> BigRational {
    let g = env.graph();
    let inside: Vec<usize> = (0..g.len()).filter(|&x| g.sites()[x].sup_dist(env.start) < radius).collect();
    let m = inside.len();
    let pos = |x: usize| inside.iter().position(|&y| y == x);
    let mut a = vec![vec![BigRational::zero(); m + 1]; m];
    for (i, &x) in inside.iter().enumerate() {
        a[i][i] = BigRational::one();
        a[i][m] = BigRational::one();
        for (y, w) in kernel_row::<BigRational>(g, x) {
            if let Some(j) = pos(y) {
                a[i][j] = a[i][j].clone() - w;
            }
        }
    }
    // Rows of parts that never exit are singular; callers avoid them.
    for c in 0..m {
        let p = (c..m).find(|&r| !a[r][c].is_zero()).expect("singular exit system");
        a.swap(c, p);
        let piv = a[c][c].clone();
        for k in c..=m {
            a[c][k] = a[c][k].clone() / piv.clone();
        }
        for r in 0..m {
            if r != c && !a[r][c].is_zero() {
                let f = a[r][c].clone();
                for k in c..=m {
                    a[r][k] = a[r][k].clone() - f.clone() * a[c][k].clone();
                }
            }
        }
    }
    a[pos(env.start_node()).unwrap()][m].clone()
}

#[test]
fn exit_time_examples() {
    let path = env_from(open_sites(3, &[(0, 0), (1, 0), (2, 0)]), t(0, 0));
    assert!((expected_exit_time(&path, 2).unwrap() - 4.0).abs() < 1e-9);
    assert_eq!(exit_time_oracle(&path, 2), rational(4, 1));
    assert_eq!(expected_exit_time(&path, 0).unwrap(), 0.0);
    assert_eq!(expected_exit_time(&path, 3), Err(WalkError::NoExit(3)));
}

#[test]
fn exit_times_match_elimination() {
    let mut checked = 0;
    for env in small_envs(60, 8, 80, 300) {
        for radius in 1..5 {
            let Ok(e) = expected_exit_time(&env, radius) else { continue };
            // Components that cannot exit make the dense system singular;
            // the solver only sees the start's component, which can.
            let g = env.graph();
            let is_exit = |x: usize| g.sites()[x].sup_dist(env.start) >= radius;
            let (region, _) = exit_region(g, env.start_node(), &is_exit);
            let all_inside = (0..g.len()).filter(|&x| !is_exit(x)).count();
            if region.len() != all_inside {
                continue;
            }
            let truth = exit_time_oracle(&env, radius).to_f64_lossy();
            assert!((e - truth).abs() <= 1e-8 * truth.max(1.0), "{e} vs {truth}");
            checked += 1;
        }
    }
    assert!(checked > 60);
}

#[test]
fn exit_times_nondecreasing_in_radius() {
    let lab = label_clusters(&sample(LatticeBox::lambda(40), 5, 0.6));
    let id = lab.widest(Color::Open).unwrap();
    let start = lab.members(id).next().unwrap();
    let env = WalkEnvironment::new(lab, start, Conditioning::None).unwrap();
    let mut prev = 0.0;
    for r in 0..30 {
        let Ok(e) = expected_exit_time(&env, r) else { break };
        assert!(e >= prev - 1e-9);
        prev = e;
    }
    assert!(prev > 10.0);
}

#[test]
fn monte_carlo_examples() {
    let tri = env_from(open_sites(3, &[(0, 0), (1, 0), (0, 1)]), t(0, 0));
    let mc = simulate_walk_paths(&tri, 100_000, 2, None, 1);
    assert!((mc.p_return[1] - 0.5).abs() <= 4.0 * mc.p_return_se[1]);

    let path = env_from(open_sites(3, &[(0, 0), (1, 0), (2, 0)]), t(0, 0));
    let mc = simulate_walk_paths(&path, 100_000, 1, Some(2), 2);
    let (m, se) = mc.exit_time.unwrap();
    assert!((m - 4.0).abs() <= 4.0 * se, "{m} ± {se}");

    let single = env_from(open_sites(3, &[(1, 1)]), t(1, 1));
    let mc = simulate_walk_paths(&single, 100, 10, None, 3);
    assert!(mc.p_return.iter().all(|&p| p == 1.0));
}

#[test]
fn monte_carlo_agrees_with_exact() {
    for (k, env) in small_envs(20, 10, 120, 500).into_iter().enumerate() {
        let exact = return_probability_series(&env, 12).unwrap();
        let radius = 3;
        let exit = expected_exit_time(&env, radius).ok();
        let mc = simulate_walk_paths(&env, 20_000, 12, exit.map(|_| radius), 40 + k as u64);
        for tt in [1, 2, 5, 12] {
            let se = mc.p_return_se[tt].max(1e-3 / 20_000f64.sqrt());
            assert!((mc.p_return[tt] - exact[tt]).abs() <= 4.0 * se, "cluster {k} t {tt}");
        }
        if let Some(e) = exit {
            let (m, se) = mc.exit_time.unwrap();
            assert!((m - e).abs() <= 4.0 * se.max(1e-9), "cluster {k}: {m} ± {se} vs {e}");
            // Holding times Exp(deg) have mean 1/deg, so the continuous clock
            // runs slower than steps but not by more than a factor 6.
            let (c, _) = mc.exit_time_vsrw.unwrap();
            assert!(c <= m + 1e-9 && c >= m / 6.0 - 1e-9);
        }
    }
}

#[test]
fn deterministic_monte_carlo() {
    let env = &small_envs(1, 20, 60, 9)[0];
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let a = one.install(|| simulate_walk_paths(env, 500, 5, Some(2), 4));
    assert_eq!(a, simulate_walk_paths(env, 500, 5, Some(2), 4));
}

#[test]
fn iic_environments() {
    assert!(matches!(sample_iic_environment(4, 50, 1), Err(WalkError::SmallFactor(50))));
    // r = 1: the start is open; acceptance rate tracks the one-arm probability.
    let count = 600u64;
    let mut attempts = 0;
    for s in 0..count {
        let env = sample_iic_environment(1, 128, s).unwrap();
        assert!(env.labeling.config().get(TriCoord::ORIGIN));
        assert_eq!(env.conditioning, Conditioning::OneArm { radius: 128 });
        attempts += env.attempts;
    }
    let rate = count as f64 / attempts as f64;
    let arm = estimate_arm_probability(&ArmFamily::new(1, 128, Sigma::monochromatic(Color::Open, 1), false), 20_000, 7).unwrap();
    // Geometric waiting times: SE of the rate is about rate·sqrt((1-rate)/count).
    let se = (rate * rate * (1.0 - rate) / count as f64 + arm.std_err().powi(2)).sqrt();
    assert!((rate - arm.estimate()).abs() <= 4.0 * se, "{rate} vs {}", arm.estimate());

    for s in 0..4 {
        let env = sample_iic_environment(8, 128, 100 + s).unwrap();
        let reach = env.graph().sites().iter().map(|x| x.sup_dist(TriCoord::ORIGIN)).max().unwrap();
        assert_eq!(reach, 8);
        assert!(expected_exit_time(&env, 8).is_ok());
    }
}

#[test]
fn spectral_fit_recovers_power_law() {
    let p: Vec<f64> = (0..200).map(|t| if t == 0 { 1.0 } else { 0.8 * (t as f64).powf(-0.66) }).collect();
    let (ds, fit) = fit_spectral_dimension(&p, 10, 150).unwrap();
    assert!((ds - 1.32).abs() < 1e-9);
    assert_eq!(fit.n_points, 141);
}
