use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use perc_lab::harness::{
    acceptance_plans, acceptance_report, fit_exponent, fit_points, mean_by, read_records, run, run_unless_current, ArmsSection,
    ExperimentKind, ExperimentPlan, GhSection, MetricSelection, VolumeSection, WalkSection,
};
use perc_lab::lattice::LatticeBox;
use perc_lab::percolation::{sample, write_configuration};

#[derive(Parser)]
#[command(name = "perc-lab", version, about = "Critical site percolation experiments on the triangular lattice")]
struct Cli {
    /// Base seed; per-sample seeds derive from (seed, size, index).
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (0: one per core).
    #[arg(long, global = true, env = "PERC_LAB_WORKERS")]
    workers: Option<usize>,
    /// Output file (or directory for `report`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Box sides (or radii), ascending, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    sizes: Vec<u32>,
    #[arg(long, default_value_t = 1000)]
    samples: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Write one configuration of Λ_n in the binary PERC1 format.
    Sample {
        #[arg(long)]
        n: u32,
        #[arg(long, default_value_t = 0.5)]
        p: f64,
    },
    /// Left-right open and top-bottom closed crossings, one record per sample.
    Crossing(Common),
    /// Arm event counts in A(r, R) for each R in --sizes.
    Arms {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        sigma: String,
        #[arg(long, default_value_t = 1)]
        r: u32,
        #[arg(long)]
        half_plane: bool,
    },
    /// Quantile q_n(p) of the metric normalizer.
    Qn {
        #[arg(long)]
        n: u32,
        #[arg(long, default_value_t = 0.25)]
        p: f64,
        #[arg(long, value_enum, default_value = "geo")]
        metric: Metric,
        #[arg(long, default_value_t = 2000)]
        samples: u64,
        #[arg(long)]
        strict: bool,
    },
    /// Geodesic, path and resistance distances between random sites of the largest cluster.
    Metrics(Common),
    /// Dyadic box counts Y_k of the largest cluster.
    Volume {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        levels: Option<Vec<u32>>,
        #[arg(long)]
        one_arm_hat: Option<f64>,
    },
    /// Return probabilities and exit times on one-arm conditioned environments.
    Walk {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 128)]
        r_factor: u32,
        #[arg(long, default_value_t = 2000)]
        t_max: usize,
        #[arg(long, value_delimiter = ',')]
        radii: Vec<u32>,
    },
    /// Gromov-Hausdorff upper bounds between coupled n and 2n clusters.
    Gh {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 50)]
        net_points: usize,
    },
    /// Run a TOML experiment plan.
    Run {
        plan: PathBuf,
    },
    /// Log-log fit of one record field against another.
    Fit {
        input: PathBuf,
        #[arg(long)]
        x: String,
        #[arg(long)]
        y: String,
        /// Average y over records of this kind grouped by x first.
        #[arg(long)]
        mean_of: Option<String>,
        #[arg(long, num_args = 2, value_names = ["LO", "HI"])]
        window: Option<Vec<f64>>,
    },
    /// Evaluate the acceptance criteria over a result directory.
    Report {
        /// Run (or reuse) the experiment plans first.
        #[arg(long)]
        run: bool,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum Metric {
    Geo,
    Res,
    Both,
}

fn default_out(out: &Option<PathBuf>, name: &str) -> PathBuf {
    out.clone().unwrap_or_else(|| Path::new("results").join(format!("{name}.jsonl")))
}

fn execute(plan: ExperimentPlan, workers: Option<usize>, echo: bool) -> Result<(), String> {
    let s = run(&plan, workers).map_err(|e| e.to_string())?;
    if echo {
        for r in read_records(&s.output).map_err(|e| e.to_string())? {
            println!("{r}");
        }
    }
    eprintln!("{} records ({} errors) -> {}", s.records, s.errors, s.output.display());
    Ok(())
}

fn main_inner(cli: Cli) -> Result<bool, String> {
    let plan = |kind: ExperimentKind, c: &Common, name: &str| {
        ExperimentPlan::new(kind, c.sizes.clone(), c.samples, cli.seed, default_out(&cli.out, name))
    };
    match &cli.command {
        Command::Sample { n, p } => {
            let cfg = sample(LatticeBox::lambda(*n), cli.seed, *p);
            let path = cli.out.clone().unwrap_or_else(|| PathBuf::from(format!("lambda{n}_{}.perc", cli.seed)));
            let f = std::fs::File::create(&path).map_err(|e| format!("{}: {e}", path.display()))?;
            write_configuration(&cfg, std::io::BufWriter::new(f)).map_err(|e| e.to_string())?;
            eprintln!("{} open of {} -> {}", cfg.open_count(), n * n, path.display());
        }
        Command::Crossing(c) => execute(plan(ExperimentKind::Crossing, c, "crossing"), cli.workers, false)?,
        Command::Arms { common, sigma, r, half_plane } => {
            let sigma = sigma.parse().map_err(|e: perc_lab::arms::ArmError| e.to_string())?;
            let p = ExperimentPlan {
                arms: Some(ArmsSection { sigma, r: *r, half_plane: *half_plane }),
                ..plan(ExperimentKind::Arms, common, "arms")
            };
            execute(p, cli.workers, true)?;
        }
        Command::Qn { n, p, metric, samples, strict } => {
            let metric_kind = match metric {
                Metric::Geo => MetricSelection::Geo,
                Metric::Res => MetricSelection::Res,
                Metric::Both => MetricSelection::Both,
            };
            let plan = ExperimentPlan {
                metric_kind,
                p: *p,
                strict: *strict,
                ..ExperimentPlan::new(ExperimentKind::Qn, vec![*n], *samples, cli.seed, default_out(&cli.out, "qn"))
            };
            execute(plan, cli.workers, true)?;
        }
        Command::Metrics(c) => execute(plan(ExperimentKind::Metrics, c, "metrics"), cli.workers, false)?,
        Command::Volume { common, levels, one_arm_hat } => {
            let p = ExperimentPlan {
                volume: Some(VolumeSection { levels: levels.clone(), one_arm_hat: *one_arm_hat }),
                ..plan(ExperimentKind::Volume, common, "volume")
            };
            execute(p, cli.workers, false)?;
        }
        Command::Walk { common, r_factor, t_max, radii } => {
            let p = ExperimentPlan {
                walk: Some(WalkSection { r_factor: *r_factor, t_max: *t_max, radii: radii.clone() }),
                ..plan(ExperimentKind::Walk, common, "walk")
            };
            execute(p, cli.workers, false)?;
        }
        Command::Gh { common, net_points } => {
            let p = ExperimentPlan { gh: Some(GhSection { net_points: *net_points }), ..plan(ExperimentKind::Gh, common, "gh") };
            execute(p, cli.workers, false)?;
        }
        Command::Run { plan } => {
            let p = ExperimentPlan::load(plan).map_err(|e| e.to_string())?;
            execute(p, cli.workers, false)?;
        }
        Command::Fit { input, x, y, mean_of, window } => {
            let recs = read_records(input).map_err(|e| e.to_string())?;
            let window = window.as_ref().map(|w| (w[0], w[1])).unwrap_or((f64::NEG_INFINITY, f64::INFINITY));
            let fit = match mean_of {
                Some(kind) => {
                    let pts: Vec<(f64, f64)> = mean_by(&recs, kind, x, y).into_iter().map(|m| (m.0, m.1)).collect();
                    fit_points(&pts, window)
                }
                None => fit_exponent(&recs, x, y, window),
            }
            .map_err(|e| e.to_string())?;
            println!("{}", serde_json::to_string(&fit).unwrap());
        }
        Command::Report { run } => {
            let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("results/acceptance"));
            if *run {
                for p in acceptance_plans(&dir, cli.seed) {
                    let s = run_unless_current(&p, cli.workers).map_err(|e| e.to_string())?;
                    eprintln!("{} {}", if s.executed { "ran" } else { "reused" }, s.output.display());
                }
            }
            let rep = acceptance_report(&dir).map_err(|e| e.to_string())?;
            print!("{}", rep.table());
            return Ok(rep.all_pass());
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match main_inner(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
