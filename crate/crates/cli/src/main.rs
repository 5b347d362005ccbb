use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use popcode::analysis::{t_min, t_of_rho_sampled, CellBudget, DiscriminationProfile};
use popcode::experiments::{run_figure, shape_checks, svg, verify_bounds, CodeSpec, ExperimentConfig, FAST_TRIALS};
use popcode::geometry::CirclePoint;
use popcode::montecarlo::empirical_tmin;
use popcode::Error;

#[derive(Parser)]
#[command(name = "popcode", version, about = "Discrimination times of place and grid cell codes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate both panels of the discrimination-time figure.
    RunFigure {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sim: Sim,
        /// Output directory for the CSV files.
        #[arg(long)]
        out: Option<PathBuf>,
        /// 500 trials and three times wider shape tolerances.
        #[arg(long)]
        fast: bool,
        /// Also render both panels as SVG.
        #[arg(long)]
        svg: bool,
    },
    /// Check every applicable inequality and write a JSON report.
    VerifyBounds {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sim: Sim,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Discrimination statistic between two stimuli.
    Delta {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        pair: Pair,
    },
    /// Minimal discrimination time `1 / Delta` of a pair, or its simulated
    /// counterpart with `--empirical`.
    Tmin {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        pair: Pair,
        #[command(flatten)]
        sim: Sim,
        #[arg(long)]
        empirical: bool,
    },
    /// Worst-case discrimination time over pairs at distance at least `rho`.
    TOfRho {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        rho: f64,
        /// Enumerate breakpoint cells (default).
        #[arg(long, conflicts_with = "sampled")]
        exact: bool,
        /// Anchored proxy over the configured rho grid.
        #[arg(long)]
        sampled: bool,
    },
    /// Print the selected code as JSON.
    GenCode {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Use a named preset as the code.
    #[arg(long)]
    preset: Option<String>,
    /// Cell budget of exact enumeration.
    #[arg(long)]
    cell_budget: Option<usize>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct Sim {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    alpha: Option<f64>,
}

#[derive(Args)]
struct Pair {
    #[arg(long)]
    theta1: f64,
    #[arg(long)]
    theta2: f64,
}

enum Failure {
    Validation(String),
    Bounds(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Validation(e.to_string())
    }
}

type Outcome = std::result::Result<(), Failure>;

fn load(common: &Common, sim: Option<&Sim>) -> std::result::Result<ExperimentConfig, Failure> {
    let mut cfg = match &common.config {
        Some(path) => {
            let src = fs::read_to_string(path).map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))?;
            ExperimentConfig::from_json_str(&src).map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(name) = &common.preset {
        cfg.code = Some(CodeSpec::preset(name)?);
    }
    if let Some(b) = common.cell_budget {
        cfg.cell_budget = b;
    }
    if let Some(sim) = sim {
        if let Some(s) = sim.seed {
            cfg.master_seed = s;
        }
        if let Some(t) = sim.trials {
            cfg.trials = t;
        }
        if let Some(a) = sim.alpha {
            cfg.alpha = a;
        }
    }
    cfg.validate().map_err(|(key, msg)| Failure::Validation(format!("{key}: {msg}")))?;
    Ok(cfg)
}

fn single_code(cfg: &ExperimentConfig) -> std::result::Result<(String, popcode::codes::Code), Failure> {
    let (id, spec) = match &cfg.code {
        Some(spec) => (spec.id(), spec.clone()),
        None => {
            return Err(Failure::Validation(
                "this command needs one code: pass --preset NAME or a config with \"code\"".into(),
            ))
        }
    };
    Ok((id, spec.build(cfg.mu)?))
}

fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        json!("inf")
    }
}

fn point(theta: f64) -> std::result::Result<CirclePoint, Failure> {
    CirclePoint::unit(theta).map_err(Failure::from)
}

fn write(path: &Path, text: &str) -> Outcome {
    fs::write(path, text).map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))
}

fn run(cmd: Command) -> Outcome {
    match cmd {
        Command::RunFigure {
            common,
            mut sim,
            out,
            fast,
            svg: want_svg,
        } => {
            if fast && sim.trials.is_none() {
                sim.trials = Some(FAST_TRIALS);
            }
            let cfg = load(&common, Some(&sim))?;
            let out = out.or(cfg.out.clone().map(PathBuf::from)).unwrap_or_else(|| PathBuf::from("out"));
            fs::create_dir_all(&out).map_err(|e| Failure::Validation(format!("{}: {e}", out.display())))?;
            let fig = run_figure(&cfg)?;
            write(&out.join("left.csv"), &fig.left_csv())?;
            write(&out.join("right.csv"), &fig.right_csv())?;
            if want_svg {
                write(&out.join("left.svg"), &svg::left_panel(&fig))?;
                write(&out.join("right.svg"), &svg::right_panel(&fig))?;
            }
            let report = shape_checks(&fig, if fast { 3.0 } else { 1.0 });
            let text = serde_json::to_string_pretty(&report).expect("serializable");
            write(&out.join("shape.json"), &format!("{text}\n"))?;
            println!("{text}");
            if report.pass() {
                Ok(())
            } else {
                Err(Failure::Bounds("figure shape checks failed".into()))
            }
        }
        Command::VerifyBounds { common, sim, out } => {
            let cfg = load(&common, Some(&sim))?;
            let report = verify_bounds(&cfg)?;
            let text = format!("{}\n", serde_json::to_string_pretty(&report).expect("serializable"));
            match out {
                Some(path) => write(&path, &text)?,
                None => print!("{text}"),
            }
            if report.pass {
                Ok(())
            } else {
                let failed: Vec<String> = report.checks.iter().filter(|c| !c.pass).map(|c| format!("{}[{}]", c.name, c.code)).collect();
                Err(Failure::Bounds(format!("failed checks: {}", failed.join(", "))))
            }
        }
        Command::Delta { common, pair } => {
            let cfg = load(&common, None)?;
            let (id, code) = single_code(&cfg)?;
            let r = code.delta(&point(pair.theta1)?, &point(pair.theta2)?)?;
            println!("{}", json!({ "code": id, "theta1": pair.theta1, "theta2": pair.theta2, "delta": r.delta, "only_in_1": r.only_in_1, "only_in_2": r.only_in_2, "per_module": r.per_module }));
            Ok(())
        }
        Command::Tmin {
            common,
            pair,
            sim,
            empirical,
        } => {
            let cfg = load(&common, Some(&sim))?;
            let (id, code) = single_code(&cfg)?;
            let (s1, s2) = (point(pair.theta1)?, point(pair.theta2)?);
            let value = if empirical {
                let t = empirical_tmin(&code, &s1, &s2, cfg.alpha, &cfg.t_points()?, cfg.trials, cfg.master_seed)?;
                json!({ "code": id, "empirical_tmin": t.map_or(json!("NA"), num), "alpha": cfg.alpha, "trials": cfg.trials, "seed": cfg.master_seed })
            } else {
                json!({ "code": id, "t_min": num(t_min(&code, &s1, &s2)?) })
            };
            println!("{value}");
            Ok(())
        }
        Command::TOfRho {
            common, rho, sampled, ..
        } => {
            let cfg = load(&common, None)?;
            let (id, code) = single_code(&cfg)?;
            let (mode, t) = if sampled {
                ("sampled", t_of_rho_sampled(&code, &cfg.anchor_point(), rho, &cfg.rho_points()?)?)
            } else {
                let profile = DiscriminationProfile::new(&code, CellBudget::with_cells(cfg.cell_budget))?;
                ("exact", profile.t_of_rho(rho)?)
            };
            println!("{}", json!({ "code": id, "rho": rho, "mode": mode, "t": num(t) }));
            Ok(())
        }
        Command::GenCode { common } => {
            let cfg = load(&common, None)?;
            let (_, code) = single_code(&cfg)?;
            println!("{}", code.to_json_pretty());
            Ok(())
        }
    }
}

fn workers(cmd: &Command) -> Option<usize> {
    match cmd {
        Command::RunFigure { common, .. }
        | Command::VerifyBounds { common, .. }
        | Command::Delta { common, .. }
        | Command::Tmin { common, .. }
        | Command::TOfRho { common, .. }
        | Command::GenCode { common } => common.workers,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let outcome = match workers(&cli.command) {
        Some(0) => Err(Failure::Validation("--workers must be at least 1".into())),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| run(cli.command)),
            Err(e) => Err(Failure::Validation(e.to_string())),
        },
        None => run(cli.command),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Bounds(msg)) => {
            eprintln!("bound check failed: {msg}");
            ExitCode::from(3)
        }
    }
}
