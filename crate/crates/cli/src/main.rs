use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use log::info;

use neutral_host_core::domain::{generate_scenario, Scenario, SimConfig};
use neutral_host_core::feasibility;
use neutral_host_core::oracle::{oracle_check, TinyConfig};
use neutral_host_core::rlt::{linearize, write_lp, LinearizeOptions};
use neutral_host_core::sim::{
    sweep_nested, timeslot_run, to_csv, Application, Arrival, SweepAxis, TimeslotOptions,
};
use neutral_host_core::solver::{solve, to_assignment, GroupSize, RequestOrder, Solution, SolveOptions};
use neutral_host_core::Error;

#[derive(Parser)]
#[command(name = "neutral-host", version, about = "Exact neutral-host spectrum sharing optimizer")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a scenario from a simulation config.
    GenScenario {
        /// SimConfig JSON file.
        config: PathBuf,
        /// Run index within the campaign.
        #[arg(long, default_value_t = 0)]
        run: u64,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        out: Output,
    },
    /// Compute an optimal allocation.
    Solve {
        /// Scenario JSON file.
        scenario: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
        /// Write 0 as the wall time.
        #[arg(long)]
        no_timing: bool,
        #[command(flatten)]
        out: Output,
    },
    /// Check a solution against every constraint; exits 1 on any violation.
    Validate {
        scenario: PathBuf,
        solution: PathBuf,
    },
    /// Write the linearized 0-1 model in LP format.
    ExportLp {
        scenario: PathBuf,
        /// Keep variables at non-covering sites and unsupported PRBs.
        #[arg(long)]
        no_variable_reduction: bool,
        #[command(flatten)]
        out: Output,
    },
    /// Compare the solver with brute force on random tiny instances.
    OracleCheck {
        #[arg(long, default_value_t = 200)]
        instances: usize,
        #[arg(long)]
        seed: u64,
    },
    /// Run Monte Carlo campaigns and print one CSV row per sweep point.
    Simulate {
        /// SimConfig JSON file.
        config: PathBuf,
        /// `axis=v1,v2,...` with axis one of I, B, W, K, p_ns, p_sb. Repeat
        /// to nest; the first axis varies slowest.
        #[arg(long)]
        sweep: Vec<SweepAxis>,
        /// Worker threads; 0 uses every core.
        #[arg(long, env = "NEUTRAL_HOST_JOBS", default_value_t = 0)]
        jobs: usize,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the number of runs per point.
        #[arg(long)]
        runs: Option<usize>,
        /// Leave the solve-time column empty.
        #[arg(long)]
        no_timing: bool,
        #[command(flatten)]
        out: Output,
    },
    /// Replay timed arrivals through slotted admission; prints JSON lines.
    Timeslot {
        /// JSON list of `{"time": seconds, "request": {...}}`.
        arrivals: PathBuf,
        /// Scenario whose sites and spectrum serve the arrivals.
        #[arg(long)]
        scenario: PathBuf,
        /// Slot length in seconds.
        #[arg(long)]
        delta: f64,
        /// Seconds from admission to service start.
        #[arg(long, conflicts_with = "application")]
        latency: Option<f64>,
        /// Use the measured latency of an application: base_station,
        /// core_network, near_rt_ric or xapp.
        #[arg(long)]
        application: Option<Application>,
        /// Last slot boundary to process.
        #[arg(long)]
        horizon: Option<f64>,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        out: Output,
    },
}

#[derive(Args)]
struct SolverArgs {
    /// PRB group size: a number, `auto` (GCD of demands) or `off`.
    #[arg(long, default_value = "off")]
    group_size: GroupSize,
    /// Seconds before returning the best allocation found so far.
    #[arg(long)]
    time_limit: Option<f64>,
    /// Branch on requests in input order.
    #[arg(long)]
    input_order: bool,
    /// Disable bounds and state caching.
    #[arg(long)]
    no_prune: bool,
}

impl SolverArgs {
    fn options(&self) -> Result<SolveOptions, Error> {
        let time_limit = match self.time_limit {
            Some(t) if t.is_finite() && t >= 0.0 => Some(Duration::from_secs_f64(t)),
            Some(t) => return Err(Error::InvalidArgument(format!("--time-limit must be non-negative, got {t}"))),
            None => None,
        };
        let order = if self.input_order { RequestOrder::InputOrder } else { RequestOrder::MostConstrainedFirst };
        Ok(SolveOptions { time_limit, order, group_size: self.group_size, prune: !self.no_prune })
    }
}

#[derive(Args)]
struct Output {
    /// Output file; standard output when absent.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

impl Output {
    fn write(&self, text: &str) -> Result<(), Error> {
        match &self.output {
            Some(p) => fs::write(p, text)?,
            None => io::stdout().lock().write_all(text.as_bytes())?,
        }
        Ok(())
    }
}

enum Failure {
    /// Bad input or I/O trouble.
    Usage(Error),
    /// The inputs were fine but the check they asked for failed.
    Check(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Self::Usage(e)
    }
}

fn read(path: &Path) -> Result<String, Error> {
    fs::read_to_string(path)
        .map_err(|e| Error::InvalidArgument(format!("cannot read {}: {e}", path.display())))
}

fn in_file<T>(path: &Path, r: Result<T, Error>) -> Result<T, Error> {
    r.map_err(|e| Error::InvalidArgument(format!("{}: {e}", path.display())))
}

fn load_scenario(path: &Path) -> Result<Scenario, Error> {
    in_file(path, Scenario::from_json(&read(path)?))
}

fn load_config(path: &Path, seed: Option<u64>) -> Result<SimConfig, Error> {
    let mut cfg = in_file(path, SimConfig::from_json(&read(path)?))?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn with_newline(mut s: String) -> String {
    s.push('\n');
    s
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::GenScenario { config, run, seed, out } => {
            let cfg = load_config(&config, seed)?;
            let s = generate_scenario(&cfg, run)?;
            out.write(&with_newline(s.to_json()?))?;
        }
        Command::Solve { scenario, solver, no_timing, out } => {
            let s = load_scenario(&scenario)?;
            let sol = solve(&s, &solver.options()?)?;
            info!(
                "objective {} with {} of {} requests, optimal {}, {} nodes",
                sol.objective,
                sol.accepted.len(),
                s.num_requests(),
                sol.optimal,
                sol.stats.nodes
            );
            out.write(&with_newline(sol.to_json(!no_timing)?))?;
        }
        Command::Validate { scenario, solution } => {
            let s = load_scenario(&scenario)?;
            let sol = in_file(&solution, Solution::from_json(&read(&solution)?))?;
            let asg = to_assignment(&sol, &s).map_err(|e| Failure::Check(e.to_string()))?;
            let violations = feasibility::check(&s, &asg)?;
            let objective = feasibility::objective(&s, &asg);
            for v in &violations {
                println!("{v}");
            }
            if !violations.is_empty() {
                return Err(Failure::Check(format!("{} violated constraints", violations.len())));
            }
            if (objective - sol.objective).abs() > 1e-9 * objective.abs().max(1.0) {
                return Err(Failure::Check(format!(
                    "solution claims objective {} but its placements are worth {objective}",
                    sol.objective
                )));
            }
            println!("feasible, objective {objective}");
        }
        Command::ExportLp { scenario, no_variable_reduction, out } => {
            let s = load_scenario(&scenario)?;
            let m = linearize(&s, &LinearizeOptions { variable_reduction: !no_variable_reduction });
            let mut buf = Vec::new();
            write_lp(&m, &mut buf)?;
            out.write(&String::from_utf8_lossy(&buf))?;
        }
        Command::OracleCheck { instances, seed } => {
            let report = oracle_check(&TinyConfig::default(), instances, seed)?;
            for m in &report.mismatches {
                eprintln!(
                    "instance {}: solver {} oracle {}\n{}",
                    m.index,
                    m.solver,
                    m.oracle,
                    serde_json::to_string_pretty(&m.scenario).map_err(Error::from)?
                );
            }
            println!("{}/{} matched", report.matched, report.instances);
            if !report.mismatches.is_empty() {
                return Err(Failure::Check(format!("{} mismatches", report.mismatches.len())));
            }
        }
        Command::Simulate { config, sweep, jobs, seed, runs, no_timing, out } => {
            let mut cfg = load_config(&config, seed)?;
            if let Some(r) = runs {
                cfg.runs = r;
            }
            let records = sweep_nested(&cfg, &sweep, jobs)?;
            for r in &records {
                if r.is_tainted() {
                    log::warn!(
                        "I={} B={} W={} K={}: runs {:?} hit the time limit",
                        r.num_requests,
                        r.num_sites,
                        r.num_bands,
                        r.group_size,
                        r.tainted_runs
                    );
                }
            }
            out.write(&to_csv(&records, !no_timing))?;
        }
        Command::Timeslot { arrivals, scenario, delta, latency, application, horizon, solver, out } => {
            let base = load_scenario(&scenario)?;
            let list: Vec<Arrival> = in_file(&arrivals, serde_json::from_str(&read(&arrivals)?).map_err(Error::from))?;
            let activation_latency = match (latency, application) {
                (Some(l), _) => l,
                (None, Some(a)) => a.activation_latency(),
                (None, None) => return Err(Error::InvalidArgument("give --latency or --application".into()).into()),
            };
            let opts = TimeslotOptions { delta, activation_latency, horizon, solve: solver.options()? };
            let trace = timeslot_run(&list, &base, &opts)?;
            out.write(&trace.to_json_lines()?)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(Error::Io(e))) if e.kind() == io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
