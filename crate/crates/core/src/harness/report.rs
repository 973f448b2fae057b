use std::collections::HashMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::fit::{fit_points, mean_by, ExponentFit};
use super::run::read_records;
use super::{
    ArmsSection, ExperimentKind, ExperimentPlan, HarnessError, MetricSelection, VolumeSection, WalkSection,
};
use crate::arms::Sigma;

/// Oracle check records written next to the experiment outputs.
pub const CHECKS_FILE: &str = "checks.jsonl";
pub const REPORT_FILE: &str = "acceptance.json";

const ONE_ARM_SIZES: [u32; 7] = [8, 16, 32, 64, 128, 256, 512];
const ARM_SIZES: [u32; 5] = [8, 16, 32, 64, 128];
const QN_SIZES: [u32; 4] = [32, 64, 128, 256];
const VOLUME_N: u32 = 2048;
const VOLUME_LEVELS: [u32; 4] = [6, 7, 8, 9];
const WALK_R: u32 = 64;
const WALK_T_MAX: usize = 2000;
/// Return-probability fit window in steps.
pub const SPECTRAL_WINDOW: (f64, f64) = (20.0, 2000.0);
const EXIT_RADII: [u32; 3] = [8, 16, 32];
const QM_RADII: (u32, u32, u32) = (4, 16, 64);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Fail,
    MissingInput,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub id: String,
    pub status: Status,
    pub value: Option<f64>,
    pub target: String,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceReport {
    pub verdicts: Vec<Verdict>,
}

impl AcceptanceReport {
    pub fn all_pass(&self) -> bool {
        self.verdicts.iter().all(|v| v.status == Status::Pass)
    }

    pub fn table(&self) -> String {
        let mut s = String::new();
        for v in &self.verdicts {
            let status = match v.status {
                Status::Pass => "PASS",
                Status::Fail => "FAIL",
                Status::MissingInput => "MISSING",
            };
            let value = v.value.map(|x| format!("{x:.4}")).unwrap_or_else(|| "-".into());
            s += &format!("{status:<8} {:<22} value {value:<10} target {:<30} {}\n", v.id, v.target, v.detail);
        }
        s
    }
}

/// The experiment plans whose outputs the report reads, rooted at `dir`.
pub fn acceptance_plans(dir: &Path, base_seed: u64) -> Vec<ExperimentPlan> {
    use ExperimentKind::*;
    let plan = |kind, sizes: &[u32], samples, file: &str| ExperimentPlan::new(kind, sizes.to_vec(), samples, base_seed, dir.join(file));
    let arms = |sigma: &str, r, half_plane| Some(ArmsSection { sigma: sigma.parse::<Sigma>().unwrap(), r, half_plane });
    vec![
        plan(Crossing, &[64], 10_000, "crossing_duality.jsonl"),
        plan(Crossing, &[8, 32, 128], 100_000, "crossing_mc.jsonl"),
        ExperimentPlan { arms: arms("O", 1, false), ..plan(Arms, &ONE_ARM_SIZES, 100_000, "one_arm.jsonl") },
        ExperimentPlan { arms: arms("OCOC", 2, false), ..plan(Arms, &ARM_SIZES, 200_000, "four_arm.jsonl") },
        ExperimentPlan { arms: arms("OCO", 2, true), ..plan(Arms, &ARM_SIZES, 2_000_000, "half_plane.jsonl") },
        ExperimentPlan {
            volume: Some(VolumeSection { levels: Some(VOLUME_LEVELS.to_vec()), one_arm_hat: None }),
            ..plan(Volume, &[VOLUME_N], 200, "volume.jsonl")
        },
        ExperimentPlan { metric_kind: MetricSelection::Both, ..plan(Qn, &QN_SIZES, 500, "qn.jsonl") },
        ExperimentPlan {
            walk: Some(WalkSection { r_factor: 128, t_max: WALK_T_MAX, radii: EXIT_RADII.to_vec() }),
            ..plan(Walk, &[WALK_R], 400, "walk.jsonl")
        },
        ExperimentPlan { arms: arms("OCOC", QM_RADII.0, false), ..plan(Arms, &[QM_RADII.1, QM_RADII.2], 200_000, "qm_inner.jsonl") },
        ExperimentPlan { arms: arms("OCOC", QM_RADII.1, false), ..plan(Arms, &[QM_RADII.2], 200_000, "qm_outer.jsonl") },
    ]
}

enum Problem {
    Missing(String),
    Broken(String),
}

type Outcome = Result<(bool, Option<f64>, String), Problem>;

struct Inputs {
    dir: PathBuf,
    cache: HashMap<String, Result<Vec<Value>, String>>,
}

impl Inputs {
    fn load(&mut self, file: &str) -> Result<&[Value], Problem> {
        let path = self.dir.join(file);
        let entry = self.cache.entry(file.to_string()).or_insert_with(|| {
            if !path.exists() {
                return Err(String::new());
            }
            read_records(&path).map_err(|e| e.to_string())
        });
        match entry {
            Ok(v) => Ok(v),
            Err(e) if e.is_empty() => Err(Problem::Missing(format!("{file} not found"))),
            Err(e) => Err(Problem::Broken(e.clone())),
        }
    }

    /// The single check record for `criterion`.
    fn check(&mut self, criterion: &str) -> Result<Value, Problem> {
        let recs = self.load(CHECKS_FILE)?;
        recs.iter()
            .find(|r| r["kind"] == "check" && r["criterion"] == criterion)
            .cloned()
            .ok_or_else(|| Problem::Missing(format!("no {criterion} record in {CHECKS_FILE}")))
    }
}

fn field(r: &Value, name: &str, file: &str) -> Result<f64, Problem> {
    r.get(name).and_then(Value::as_f64).ok_or_else(|| Problem::Broken(format!("{file}: record lacks numeric {name:?}: {r}")))
}

fn fit(points: &[(f64, f64)], window: (f64, f64), what: &str) -> Result<ExponentFit, Problem> {
    fit_points(points, window).map_err(|e| Problem::Broken(format!("{what}: {e}")))
}

fn crossing(inp: &mut Inputs) -> Outcome {
    let ex = inp.check("crossing-exhaustive")?;
    let (configs, exceptions) = (field(&ex, "configs", CHECKS_FILE)?, field(&ex, "exceptions", CHECKS_FILE)?);
    let mut ok = configs == 512.0 && exceptions == 0.0;
    let mut detail = format!("Λ_3: {exceptions} exceptions in {configs}");
    let count = |recs: &[Value], n: u32| {
        let rs: Vec<&Value> = recs.iter().filter(|r| r["kind"] == "crossing" && r["n"] == n).collect();
        let bad = rs.iter().filter(|r| r["open_lr"] == r["closed_tb"]).count();
        let open = rs.iter().filter(|r| r["open_lr"] == true).count();
        (rs.len(), bad, open)
    };
    let (m, bad, _) = count(inp.load("crossing_duality.jsonl")?, 64);
    ok &= m >= 10_000 && bad == 0;
    detail += &format!("; Λ_64: {bad} exceptions in {m}");
    let mut worst = 0.0f64;
    let recs = inp.load("crossing_mc.jsonl")?.to_vec();
    for n in [8, 32, 128] {
        let (m, bad, open) = count(&recs, n);
        if m < 100_000 {
            return Err(Problem::Missing(format!("crossing_mc.jsonl: n={n} has {m} < 100000 samples")));
        }
        let z = (open as f64 / m as f64 - 0.5) / (0.25 / m as f64).sqrt();
        worst = worst.max(z.abs());
        ok &= bad == 0 && z.abs() <= 4.0;
        detail += &format!("; n={n}: P={:.4} z={z:+.2}", open as f64 / m as f64);
    }
    Ok((ok, Some(worst), detail))
}

/// Estimates `(R, hits/samples, se)` for the arm records matching the family.
fn arm_points(
    inp: &mut Inputs,
    file: &str,
    sigma: &str,
    r: u32,
    half: bool,
    sizes: &[u32],
    min_samples: f64,
) -> Result<Vec<(f64, f64, f64)>, Problem> {
    let recs = inp.load(file)?.to_vec();
    let mut out = Vec::new();
    for &big in sizes {
        let rec = recs
            .iter()
            .find(|x| x["kind"] == "arm" && x["sigma"] == sigma && x["r"] == r && x["half"] == half && x["R"] == big)
            .ok_or_else(|| Problem::Missing(format!("{file}: no {sigma} record with r={r} R={big}")))?;
        let (hits, m) = (field(rec, "hits", file)?, field(rec, "samples", file)?);
        if m < min_samples {
            return Err(Problem::Missing(format!("{file}: R={big} has {m} < {min_samples} samples")));
        }
        let p = hits / m;
        out.push((big as f64, p, (p * (1.0 - p) / m).sqrt()));
    }
    Ok(out)
}

fn arm_slope(inp: &mut Inputs, file: &str, sigma: &str, r: u32, half: bool, sizes: &[u32], min: f64, target: (f64, f64)) -> Outcome {
    let pts = arm_points(inp, file, sigma, r, half, sizes, min)?;
    let f = fit(&pts.iter().map(|p| (p.0, p.1)).collect::<Vec<_>>(), (0.0, f64::INFINITY), file)?;
    Ok((f.slope >= target.0 && f.slope <= target.1, Some(f.slope), format!("stderr {:.4} over R = {sizes:?}", f.stderr)))
}

fn volume_fit(inp: &mut Inputs) -> Result<ExponentFit, Problem> {
    let recs: Vec<Value> = inp.load("volume.jsonl")?.iter().filter(|r| r["n"] == VOLUME_N).cloned().collect();
    let means = mean_by(&recs, "yk", "k", "count");
    let pts: Vec<(f64, f64)> = means.iter().filter(|m| VOLUME_LEVELS.contains(&(m.0 as u32))).map(|m| (2f64.powf(m.0), m.1)).collect();
    if pts.len() < VOLUME_LEVELS.len() {
        return Err(Problem::Missing(format!("volume.jsonl: need Y_k at n={VOLUME_N} for k in {VOLUME_LEVELS:?}")));
    }
    fit(&pts, (0.0, f64::INFINITY), "volume")
}

fn qn_fit(inp: &mut Inputs, kind: &str) -> Result<ExponentFit, Problem> {
    let recs = inp.load("qn.jsonl")?.to_vec();
    let mut pts = Vec::new();
    for n in QN_SIZES {
        let r = recs
            .iter()
            .find(|r| r["kind"] == "qn" && r["metric_kind"] == kind && r["n"] == n)
            .ok_or_else(|| Problem::Missing(format!("qn.jsonl: no {kind} estimate at n={n}")))?;
        pts.push((n as f64, field(r, "q_hat", "qn.jsonl")?));
    }
    fit(&pts, (0.0, f64::INFINITY), kind)
}

fn walk_means(inp: &mut Inputs, kind: &str, key: &str, value: &str) -> Result<Vec<(f64, f64, usize)>, Problem> {
    let recs: Vec<Value> = inp.load("walk.jsonl")?.iter().filter(|r| r["n"] == WALK_R).cloned().collect();
    let m = mean_by(&recs, kind, key, value);
    if m.is_empty() {
        return Err(Problem::Missing(format!("walk.jsonl: no {kind} records at r={WALK_R}")));
    }
    Ok(m)
}

fn spectral(inp: &mut Inputs) -> Outcome {
    let means = walk_means(inp, "walk", "t", "p2t")?;
    let pts: Vec<(f64, f64)> = means.iter().map(|m| (m.0, m.1)).collect();
    let f = fit(&pts, SPECTRAL_WINDOW, "spectral")?;
    let ds = -2.0 * f.slope;
    Ok((
        (1.20..=1.45).contains(&ds),
        Some(ds),
        format!("{} environments, t in {SPECTRAL_WINDOW:?}, off 1.318 by {:+.3}", means[0].2, ds - 1.318),
    ))
}

fn einstein(inp: &mut Inputs) -> Outcome {
    let means = walk_means(inp, "exit", "radius", "e_tau")?;
    let pts: Vec<(f64, f64)> = means.iter().map(|m| (m.0, m.1)).collect();
    let exit = fit(&pts, (0.0, f64::INFINITY), "exit")?.slope;
    let vol = volume_fit(inp)?.slope;
    let res = qn_fit(inp, "res")?.slope;
    let gap = exit - vol - res;
    Ok((gap.abs() <= 0.15, Some(gap), format!("exit {exit:.3}, volume {vol:.3}, resistance {res:.3}")))
}

fn resistance_oracle(inp: &mut Inputs) -> Outcome {
    let r = inp.check("resistance-oracle")?;
    let (m, err, laws) = (field(&r, "instances", CHECKS_FILE)?, field(&r, "max_rel_err", CHECKS_FILE)?, field(&r, "law_failures", CHECKS_FILE)?);
    Ok((m >= 200.0 && err <= 1e-8 && laws == 0.0, Some(err), format!("{m} clusters, {laws} law failures")))
}

fn menger(inp: &mut Inputs) -> Outcome {
    let r = inp.check("menger")?;
    let (m, bad) = (field(&r, "instances", CHECKS_FILE)?, field(&r, "failures", CHECKS_FILE)?);
    Ok((m >= 1.0 && bad == 0.0, Some(bad), format!("{m} annulus instances")))
}

fn gh_exact(inp: &mut Inputs) -> Outcome {
    let r = inp.check("gh-exactness")?;
    let m = field(&r, "instances", CHECKS_FILE)?;
    let bad = field(&r, "two_point_failures", CHECKS_FILE)? + field(&r, "identity_failures", CHECKS_FILE)? + field(&r, "dominance_failures", CHECKS_FILE)?;
    Ok((m >= 100.0 && bad == 0.0, Some(bad), format!("{m} random instances")))
}

fn quasi_multiplicativity(inp: &mut Inputs) -> Outcome {
    let (a, b, c) = QM_RADII;
    let inner = arm_points(inp, "qm_inner.jsonl", "OCOC", a, false, &[b, c], 1.0)?;
    let outer = arm_points(inp, "qm_outer.jsonl", "OCOC", b, false, &[c], 1.0)?;
    let ((_, p12, s12), (_, p13, s13), (_, p23, s23)) = (inner[0], inner[1], outer[0]);
    let product = p12 * p23;
    let se = (s13 * s13 + (p23 * s12).powi(2) + (p12 * s23).powi(2)).sqrt();
    let ratio = p13 / product;
    Ok((
        ratio > 0.1 && p13 <= product + 5.0 * se,
        Some(ratio),
        format!("P({a},{c}) = {p13:.5}, P({a},{b})·P({b},{c}) = {product:.5}, se {se:.1e}"),
    ))
}

/// Evaluates every criterion against the outputs in `dir`, writes
/// `acceptance.json` there, and returns the verdicts.
pub fn acceptance_report(dir: &Path) -> Result<AcceptanceReport, HarnessError> {
    let mut inp = Inputs { dir: dir.to_path_buf(), cache: HashMap::new() };
    let one_arm = -5.0 / 48.0;
    let vol = 91.0 / 48.0;
    type Eval = Box<dyn Fn(&mut Inputs) -> Outcome>;
    let criteria: Vec<(&str, String, Eval)> = vec![
        ("crossing-duality", "0 exceptions, |z| <= 4".into(), Box::new(crossing)),
        ("one-arm", format!("{:.4} ± 0.03", one_arm), Box::new(move |i| arm_slope(i, "one_arm.jsonl", "O", 1, false, &ONE_ARM_SIZES, 1e5, (one_arm - 0.03, one_arm + 0.03)))),
        ("four-arm", "-1.25 ± 0.12".into(), Box::new(|i| arm_slope(i, "four_arm.jsonl", "OCOC", 2, false, &ARM_SIZES, 1.0, (-1.37, -1.13)))),
        ("half-plane-three-arm", "-2 ± 0.2".into(), Box::new(|i| arm_slope(i, "half_plane.jsonl", "OCO", 2, true, &ARM_SIZES, 1.0, (-2.2, -1.8)))),
        ("volume-growth", format!("{vol:.4} ± 0.08"), Box::new(move |i| {
            let f = volume_fit(i)?;
            Ok(((f.slope - vol).abs() <= 0.08, Some(f.slope), format!("stderr {:.4}, n={VOLUME_N}, k in {VOLUME_LEVELS:?}", f.stderr)))
        })),
        ("chemical-distance", "(1.0, 1.3333)".into(), Box::new(|i| {
            let f = qn_fit(i, "geo")?;
            Ok((f.slope > 1.0 && f.slope < 4.0 / 3.0, Some(f.slope), format!("stderr {:.4}, off 1.131 by {:+.3}", f.stderr, f.slope - 1.131)))
        })),
        ("resistance-exponent", "[0.65, 1.4333]".into(), Box::new(|i| {
            let f = qn_fit(i, "res")?;
            Ok((f.slope >= 0.65 && f.slope <= 4.0 / 3.0 + 0.1, Some(f.slope), format!("stderr {:.4}", f.stderr)))
        })),
        ("spectral-dimension", "[1.20, 1.45]".into(), Box::new(spectral)),
        ("einstein-relation", "|gap| <= 0.15".into(), Box::new(einstein)),
        ("resistance-oracle", "rel err <= 1e-8".into(), Box::new(resistance_oracle)),
        ("menger", "0 mismatches".into(), Box::new(menger)),
        ("gh-exactness", "0 failures".into(), Box::new(gh_exact)),
        ("quasi-multiplicativity", "C > 0.1, upper within 5 se".into(), Box::new(quasi_multiplicativity)),
    ];
    let verdicts = criteria
        .into_iter()
        .map(|(id, target, eval)| {
            let (status, value, detail) = match eval(&mut inp) {
                Ok((pass, value, detail)) => (if pass { Status::Pass } else { Status::Fail }, value, detail),
                Err(Problem::Missing(d)) => (Status::MissingInput, None, d),
                Err(Problem::Broken(d)) => (Status::Fail, None, d),
            };
            Verdict { id: id.to_string(), status, value, target, detail }
        })
        .collect();
    let report = AcceptanceReport { verdicts };
    let path = dir.join(REPORT_FILE);
    if dir.is_dir() {
        std::fs::write(&path, serde_json::to_string_pretty(&report).unwrap() + "\n").map_err(|e| HarnessError::io(&path, e))?;
    }
    Ok(report)
}
