use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use super::{ExperimentKind, ExperimentPlan, HarnessError};
use crate::arms::{estimate_arm_probability, ArmFamily};
use crate::ghtool::{cluster_net, covering_radius, gh_upper_nearest, FiniteMetricSpace};
use crate::lattice::{LatticeBox, TriCoord};
use crate::measures::{box_count_yk, cluster_measure};
use crate::metrics::{metric_sample, Distance};
use crate::normalizer::{quantile_from_samples, sample_xn_kinds};
use crate::percolation::{has_crossing, label_clusters, sample, Color, Configuration, Direction};
use crate::resistance::pairwise_resistance_fill;
use crate::rng::{derive_seed, mix64, RNG_ALGORITHM_ID, SEED_DERIVATION};
use crate::walk::{sample_iic_environment, walk_stats};

/// Samples evaluated in parallel before their records are written in order.
const CHUNK: u64 = 256;

const MODULES: [&str; 10] =
    ["lattice", "percolation", "arms", "metrics", "resistance", "normalizer", "measures", "walk", "ghtool", "harness"];

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub output: PathBuf,
    pub manifest: PathBuf,
    pub records: u64,
    pub errors: u64,
    /// False when an up-to-date output was reused.
    pub executed: bool,
}

/// `<output>.manifest.json`.
pub fn manifest_path(output: &Path) -> PathBuf {
    let mut name = output.file_name().map(|s| s.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    output.with_file_name(name)
}

/// Log-spaced times: every `t ≤ 16`, then `round(2^{j/8})`, always ending at `t_max`.
pub fn t_grid(t_max: usize) -> Vec<usize> {
    let mut ts: Vec<usize> = (1..=t_max.min(16)).collect();
    let mut j = 33;
    loop {
        let t = 2f64.powf(j as f64 / 8.0).round() as usize;
        if t >= t_max {
            break;
        }
        if t > *ts.last().unwrap() {
            ts.push(t);
        }
        j += 1;
    }
    if *ts.last().unwrap() < t_max {
        ts.push(t_max);
    }
    ts
}

struct Sink {
    out: BufWriter<File>,
    path: PathBuf,
    records: u64,
    errors: u64,
}

impl Sink {
    fn write(&mut self, v: &Value) -> Result<(), HarnessError> {
        if v["kind"] == "error" {
            self.errors += 1;
        }
        self.records += 1;
        // serde_json maps are ordered by key, so records come out key-sorted.
        let line = serde_json::to_string(v).expect("records serialize");
        writeln!(self.out, "{line}").map_err(|e| HarnessError::io(&self.path, e))
    }
}

type TaskResult = Result<Vec<Value>, String>;

fn error_record(n: u32, sample: Option<u64>, seed: u64, err: String) -> Value {
    json!({"kind": "error", "n": n, "sample": sample, "seed": seed, "error": err})
}

/// Executes every `(size, sample)` task of the plan, streaming records in
/// `(size, sample index)` order, then writes the manifest. Output is the same
/// for any worker count.
pub fn run(plan: &ExperimentPlan, workers: Option<usize>) -> Result<RunSummary, HarnessError> {
    plan.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.unwrap_or(0))
        .build()
        .map_err(|e| HarnessError::Pool(e.to_string()))?;
    let path = plan.output_path.clone();
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    }
    let file = File::create(&path).map_err(|e| HarnessError::io(&path, e))?;
    let mut sink = Sink { out: BufWriter::new(file), path: path.clone(), records: 0, errors: 0 };
    pool.install(|| -> Result<(), HarnessError> {
        for &n in &plan.sizes {
            match plan.kind {
                ExperimentKind::Arms | ExperimentKind::Qn => {
                    let recs = if plan.kind == ExperimentKind::Arms { arms_task(plan, n) } else { qn_task(plan, n) };
                    match recs {
                        Ok(v) => v.iter().try_for_each(|r| sink.write(r))?,
                        Err(e) => sink.write(&error_record(n, None, plan.base_seed, e))?,
                    }
                }
                _ => {
                    let mut lo = 0;
                    while lo < plan.samples {
                        let hi = (lo + CHUNK).min(plan.samples);
                        let out: Vec<(u64, u64, TaskResult)> = (lo..hi)
                            .into_par_iter()
                            .map(|i| {
                                let seed = derive_seed(plan.base_seed, n as u64, i);
                                (i, seed, sample_task(plan, n, i, seed))
                            })
                            .collect();
                        for (i, seed, res) in out {
                            match res {
                                Ok(v) => v.iter().try_for_each(|r| sink.write(r))?,
                                Err(e) => sink.write(&error_record(n, Some(i), seed, e))?,
                            }
                        }
                        lo = hi;
                    }
                }
            }
        }
        Ok(())
    })?;
    sink.out.flush().map_err(|e| HarnessError::io(&path, e))?;
    let manifest = manifest_path(&path);
    let created = std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let body = json!({
        "plan": plan,
        "code_version": env!("CARGO_PKG_VERSION"),
        "rng": RNG_ALGORITHM_ID,
        "seed_derivation": SEED_DERIVATION,
        "modules": MODULES.iter().map(|m| (m.to_string(), Value::from(env!("CARGO_PKG_VERSION")))).collect::<serde_json::Map<_, _>>(),
        "records": sink.records,
        "errors": sink.errors,
        "created_unix": created,
    });
    std::fs::write(&manifest, serde_json::to_string_pretty(&body).unwrap() + "\n").map_err(|e| HarnessError::io(&manifest, e))?;
    Ok(RunSummary { output: path, manifest, records: sink.records, errors: sink.errors, executed: true })
}

/// Reuses an existing output whose manifest records the same plan and code
/// version; runs the plan otherwise.
pub fn run_unless_current(plan: &ExperimentPlan, workers: Option<usize>) -> Result<RunSummary, HarnessError> {
    let manifest = manifest_path(&plan.output_path);
    if plan.output_path.exists() {
        if let Some(m) = std::fs::read_to_string(&manifest).ok().and_then(|s| serde_json::from_str::<Value>(&s).ok()) {
            if m["plan"] == serde_json::to_value(plan).unwrap() && m["code_version"] == env!("CARGO_PKG_VERSION") {
                return Ok(RunSummary {
                    output: plan.output_path.clone(),
                    manifest,
                    records: m["records"].as_u64().unwrap_or(0),
                    errors: m["errors"].as_u64().unwrap_or(0),
                    executed: false,
                });
            }
        }
    }
    run(plan, workers)
}

/// All records of a JSONL file; parse errors name the line.
pub fn read_records(path: &Path) -> Result<Vec<Value>, HarnessError> {
    let file = File::open(path).map_err(|e| HarnessError::io(path, e))?;
    let mut out = Vec::new();
    for (k, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| HarnessError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let v = serde_json::from_str(&line)
            .map_err(|e| HarnessError::Parse { path: path.to_path_buf(), message: format!("line {}: {e}", k + 1) })?;
        out.push(v);
    }
    Ok(out)
}

fn arms_task(plan: &ExperimentPlan, big_r: u32) -> TaskResult {
    let a = plan.arms.as_ref().expect("validated");
    let fam = ArmFamily::new(a.r, big_r, a.sigma.clone(), a.half_plane);
    let c = estimate_arm_probability(&fam, plan.samples, plan.base_seed).map_err(|e| e.to_string())?;
    Ok(vec![json!({
        "kind": "arm", "r": a.r, "R": big_r, "sigma": a.sigma.to_string(), "half": a.half_plane,
        "hits": c.n_hits, "samples": c.n_samples, "seed": plan.base_seed,
    })])
}

fn qn_task(plan: &ExperimentPlan, n: u32) -> TaskResult {
    let kinds = plan.metric_kind.kinds();
    let (xs, attempts) =
        sample_xn_kinds(n, &kinds, plan.samples as usize, plan.base_seed, plan.strict).map_err(|e| e.to_string())?;
    Ok(kinds
        .iter()
        .zip(&xs)
        .map(|(&k, x)| {
            let est = quantile_from_samples(n, plan.p, k, x, attempts, plan.base_seed, plan.strict);
            let mut v = serde_json::to_value(est).unwrap();
            v["kind"] = json!("qn");
            v
        })
        .collect())
}

fn sample_task(plan: &ExperimentPlan, n: u32, i: u64, seed: u64) -> TaskResult {
    match plan.kind {
        ExperimentKind::Crossing => {
            let cfg = sample(LatticeBox::lambda(n), seed, 0.5);
            Ok(vec![json!({
                "kind": "crossing", "n": n, "sample": i, "seed": seed,
                "open_lr": has_crossing(&cfg, Color::Open, Direction::LR),
                "closed_tb": has_crossing(&cfg, Color::Closed, Direction::TB),
            })])
        }
        ExperimentKind::Metrics => metrics_task(n, i, seed),
        ExperimentKind::Volume => volume_task(plan, n, i, seed),
        ExperimentKind::Walk => walk_task(plan, n, i, seed),
        ExperimentKind::Gh => gh_task(plan, n, i, seed),
        ExperimentKind::Arms | ExperimentKind::Qn => unreachable!(),
    }
}

fn pair(s: TriCoord) -> Value {
    json!([s.a, s.b])
}

/// Two uniform sites of the largest open cluster.
fn metrics_task(n: u32, i: u64, seed: u64) -> TaskResult {
    let lab = label_clusters(&sample(LatticeBox::lambda(n), seed, 0.5));
    let id = lab.largest_by_size(Color::Open).ok_or("no open cluster")?;
    let members = lab.member_indices(id);
    let mut rng = ChaCha8Rng::seed_from_u64(mix64(seed));
    let bx = lab.domain();
    let x = bx.site(members[rng.gen_range(0..members.len())] as usize);
    let y = bx.site(members[rng.gen_range(0..members.len())] as usize);
    let mut ms = metric_sample(&lab, x, y, n).map_err(|e| e.to_string())?;
    pairwise_resistance_fill(&lab, std::slice::from_mut(&mut ms)).map_err(|e| e.to_string())?;
    let d_geo = match ms.d_geo {
        Distance::Finite(d) => json!(d),
        Distance::Infinite => json!("inf"),
    };
    Ok(vec![json!({
        "kind": "metric", "n": n, "sample": i, "seed": seed, "x": pair(ms.x), "y": pair(ms.y),
        "d_geo": d_geo, "d_path_lo": ms.d_path_lo, "d_path_hi": ms.d_path_hi, "d_res": ms.d_res,
    })])
}

/// `Y_k` of the largest open cluster, and its measure when normalized.
fn volume_task(plan: &ExperimentPlan, n: u32, i: u64, seed: u64) -> TaskResult {
    let sec = plan.volume.clone().unwrap_or_default();
    let lab = label_clusters(&sample(LatticeBox::lambda(n), seed, 0.5));
    let id = lab.largest_by_size(Color::Open).ok_or("no open cluster")?;
    let levels = sec.levels.unwrap_or_else(|| (0..=n.ilog2()).collect());
    let mut out: Vec<Value> = levels
        .iter()
        .map(|&k| json!({"kind": "yk", "n": n, "sample": i, "k": k, "count": box_count_yk(&lab, id, k)}))
        .collect();
    if let Some(a) = sec.one_arm_hat {
        let mu = cluster_measure(&lab, id, a).map_err(|e| e.to_string())?;
        let size = lab.cluster(id).map(|c| c.size).unwrap_or(0);
        out.push(json!({"kind": "measure", "n": n, "sample": i, "cluster": size, "mass": mu.total_mass()}));
    }
    Ok(out)
}

fn walk_task(plan: &ExperimentPlan, r: u32, i: u64, seed: u64) -> TaskResult {
    let sec = plan.walk.clone().unwrap_or_default();
    let radii: Vec<u32> = if sec.radii.is_empty() {
        (2..).map(|j| 1u32 << j).take_while(|&x| 2 * x <= r).collect()
    } else {
        sec.radii.clone()
    };
    let env = sample_iic_environment(r, sec.r_factor, seed).map_err(|e| e.to_string())?;
    let stats = walk_stats(&env, sec.t_max, &radii).map_err(|e| e.to_string())?;
    let mut out = vec![json!({
        "kind": "environment", "n": r, "sample": i, "seed": seed, "conditioning": env.conditioning,
        "attempts": env.attempts, "cluster_size": env.graph().len(), "r_factor": sec.r_factor,
    })];
    out.extend(t_grid(sec.t_max).into_iter().map(|t| json!({"kind": "walk", "n": r, "sample": i, "t": t, "p2t": stats.p_return[t]})));
    out.extend(stats.exit_times.iter().map(|&(radius, e)| json!({"kind": "exit", "n": r, "sample": i, "radius": radius, "e_tau": e})));
    Ok(out)
}

/// Box `Λ_n` obtained from a `Λ_{2n}` sample by majority vote over the fine
/// triangles `(2a, 2b), (2a+1, 2b), (2a, 2b+1)`. The triangles are disjoint,
/// so the coarse sites are again independent fair coins.
pub(crate) fn coupled_pair(n: u32, seed: u64) -> (Configuration, Configuration) {
    let fine = sample(LatticeBox::lambda(2 * n), seed, 0.5);
    let coarse = Configuration::from_fn(LatticeBox::lambda(n), |s| {
        let (a, b) = (2 * s.a, 2 * s.b);
        let votes = [(a, b), (a + 1, b), (a, b + 1)].iter().filter(|&&(x, y)| fine.get(TriCoord::new(x, y))).count();
        votes >= 2
    });
    (coarse, fine)
}

/// Farthest-point net of the largest open cluster, distances divided by the
/// net's diameter.
fn normalized_net(cfg: &Configuration, k: usize) -> Result<FiniteMetricSpace, String> {
    let lab = label_clusters(cfg);
    let id = lab.largest_by_size(Color::Open).ok_or("no open cluster")?;
    let mut net = cluster_net(&lab, id, k, 1.0);
    let diam = net.dist.iter().flatten().fold(0.0f64, |a, &b| a.max(b));
    if diam > 0.0 {
        net.dist.iter_mut().flatten().for_each(|d| *d /= diam);
    }
    Ok(net)
}

fn gh_task(plan: &ExperimentPlan, n: u32, i: u64, seed: u64) -> TaskResult {
    let k = plan.gh.clone().unwrap_or_default().net_points;
    let (coarse, fine) = coupled_pair(n, seed);
    let x = normalized_net(&coarse, k)?;
    let y = normalized_net(&fine, k)?;
    let radius = covering_radius(&x, &y).map_err(|e| e.to_string())?;
    let value = gh_upper_nearest(&x, &y).map_err(|e| e.to_string())?;
    Ok(vec![json!({
        "kind": "gh", "n1": n, "n2": 2 * n, "sample": i, "seed": seed, "metric": "geo",
        "value": value, "match_radius": radius,
    })])
}
