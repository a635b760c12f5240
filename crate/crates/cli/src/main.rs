use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dstr::baseline::{greedy_allocate, Order};
use dstr::channel::CollisionModel;
use dstr::experiment::{run_experiment, ExperimentSpec};
use dstr::protocol::TxSlot;
use dstr::sim::{run, validate_allocation, RunResult, Scenario, StopCondition};
use dstr::topology::FormationSpec;
use dstr::Error;

const EXIT_CONFIG: u8 = 1;
const EXIT_VALIDATION: u8 = 2;
const EXIT_NOT_CONVERGED: u8 = 3;

#[derive(Parser)]
#[command(name = "dstr", version, about = "Distributed TDMA slot allocation simulator for UAV formations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Overrides {
    /// Seed of the (first) run, or base seed of a sweep.
    #[arg(long)]
    seed: Option<u64>,
    /// resolution, convergence or slots:N.
    #[arg(long)]
    stop: Option<StopCondition>,
    /// Management slot collision model.
    #[arg(long, value_parser = parse_mgmt_model)]
    mgmt_model: Option<CollisionModel>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one scenario and print the result as JSON.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
        /// Consecutive seeds to run; more than one prints a JSON array.
        #[arg(long, default_value_t = 1)]
        reps: u32,
        /// Record per-UAV state every superframe.
        #[arg(long)]
        trace: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an experiment spec: CSV rows plus a JSON summary per cell.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
        /// Replications per cell, overriding the spec.
        #[arg(long)]
        reps: Option<u32>,
        /// CSV destination; the summary goes next to it as .summary.json.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = default_jobs())]
        jobs: usize,
    },
    /// Centralized greedy schedule for the scenario's formation.
    Baseline {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "by-id")]
        order: Order,
        /// Schedule CSV destination.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-check a schedule CSV (uav,slot) or a run result JSON against the
    /// scenario's formation and channel.
    Validate {
        #[arg(long)]
        config: PathBuf,
        schedule: PathBuf,
        /// Superframe size; defaults to the run's final size or the highest slot.
        #[arg(long)]
        superframe: Option<u32>,
        /// Accept unused slots.
        #[arg(long)]
        allow_empty: bool,
    },
    /// Emit formation positions as id,x,y,z CSV.
    GenTopology {
        #[arg(long, conflicts_with_all = ["rows", "single", "config"])]
        rings: Option<usize>,
        #[arg(long, requires = "cols", conflicts_with_all = ["single", "config"])]
        rows: Option<usize>,
        #[arg(long, requires = "rows")]
        cols: Option<usize>,
        #[arg(long, conflicts_with = "config")]
        single: Option<usize>,
        /// Take the formation from a scenario file.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 10.0)]
        spacing: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn default_jobs() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

fn parse_mgmt_model(s: &str) -> Result<CollisionModel, String> {
    match s {
        "collision" | "pessimistic" => Ok(CollisionModel::Pessimistic),
        "sinr" => Ok(CollisionModel::Sinr),
        other => Err(format!("unknown model {other:?}, expected collision or sinr")),
    }
}

/// What went wrong, mapped onto the exit code contract.
enum Failure {
    Config(String),
    Validation(String),
    NotConverged(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Validation(_) | Error::Fault { .. } => Failure::Validation(e.to_string()),
            _ => Failure::Config(e.to_string()),
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

fn load_scenario(path: &Path) -> Result<Scenario, Failure> {
    Scenario::from_json(&read(path)?).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    match path {
        Some(p) => Ok(Box::new(
            fs::File::create(p).map_err(|e| Failure::Config(format!("{}: {e}", p.display())))?,
        )),
        None => Ok(Box::new(io::stdout().lock())),
    }
}

fn io_err(e: io::Error) -> Failure {
    Failure::Config(e.to_string())
}

fn apply(sc: &mut Scenario, o: &Overrides) {
    if let Some(seed) = o.seed {
        sc.seed = seed;
    }
    if let Some(stop) = o.stop {
        sc.stop = stop;
    }
    if let Some(m) = o.mgmt_model {
        sc.mgmt_model = m;
    }
}

fn check_run(r: &RunResult, stop: StopCondition) -> Result<(), Failure> {
    if stop == StopCondition::Convergence {
        if r.converged && !r.valid {
            return Err(Failure::Validation(format!("seed {}: converged allocation fails validation", r.seed)));
        }
        if !r.converged {
            return Err(Failure::NotConverged(format!("seed {}: no convergence after {} slots", r.seed, r.slots)));
        }
    }
    Ok(())
}

fn cmd_run(config: &Path, o: &Overrides, reps: u32, trace: bool, out: Option<&Path>) -> Result<(), Failure> {
    let mut sc = load_scenario(config)?;
    apply(&mut sc, o);
    sc.trace |= trace;
    if reps == 0 {
        return Err(Failure::Config("--reps must be >= 1".into()));
    }
    let results = (0..reps as u64)
        .map(|k| {
            let mut s = sc.clone();
            s.seed = sc.seed.wrapping_add(k);
            run(&s)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut w = output(out)?;
    let text = if reps == 1 {
        serde_json::to_string_pretty(&results[0])
    } else {
        serde_json::to_string_pretty(&results)
    }
    .map_err(|e| Failure::Config(e.to_string()))?;
    writeln!(w, "{text}").map_err(io_err)?;
    w.flush().map_err(io_err)?;
    results.iter().try_for_each(|r| check_run(r, sc.stop))
}

fn cmd_sweep(config: &Path, o: &Overrides, reps: Option<u32>, out: Option<&Path>, jobs: usize) -> Result<(), Failure> {
    let mut spec = ExperimentSpec::from_json(&read(config)?)
        .map_err(|e| Failure::Config(format!("{}: {e}", config.display())))?;
    if let Some(seed) = o.seed {
        spec.base_seed = seed;
    }
    apply(&mut spec.scenario, &Overrides { seed: None, stop: o.stop, mgmt_model: o.mgmt_model });
    if let Some(r) = reps {
        spec.replications = r;
    }
    let result = run_experiment(&spec, jobs)?;

    let csv_path = out.map(Path::to_path_buf).or_else(|| spec.outputs.csv.clone());
    result.write_csv(output(csv_path.as_deref())?)?;
    let summary = result.summary_json()?;
    let summary_path = spec.outputs.summary.clone().or_else(|| csv_path.map(|p| p.with_extension("summary.json")));
    match summary_path {
        Some(p) => fs::write(&p, summary + "\n").map_err(|e| Failure::Config(format!("{}: {e}", p.display())))?,
        None => eprintln!("{summary}"),
    }
    if spec.scenario.stop == StopCondition::Convergence && !result.all_converged() {
        let missing = result.rows.iter().filter(|r| r.convergence_slots.is_none()).count();
        return Err(Failure::NotConverged(format!("{missing} of {} runs did not converge", result.rows.len())));
    }
    Ok(())
}

fn cmd_baseline(config: &Path, order: Order, out: Option<&Path>) -> Result<(), Failure> {
    let sc = load_scenario(config)?;
    let formation = sc.formation.build(sc.safety_radius)?;
    let params = sc.protocol.resolve(&formation, &sc.channel)?;
    let schedule = greedy_allocate(&formation, &sc.channel, params.beacon_tx_power, order);
    if let Some(p) = out {
        schedule.write_csv(output(Some(p))?)?;
    }
    let report = serde_json::json!({
        "uav_count": formation.len(),
        "slot_count": schedule.slot_count,
        "reuse": formation.len() as f64 / schedule.slot_count.max(1) as f64,
        "order": order,
    });
    println!("{}", serde_json::to_string_pretty(&report).map_err(|e| Failure::Config(e.to_string()))?);
    Ok(())
}

fn load_assignment(path: &Path, uav_count: usize) -> Result<(Vec<Option<TxSlot>>, Option<u32>), Failure> {
    let text = read(path)?;
    if path.extension().is_some_and(|e| e == "json") {
        let r: RunResult =
            serde_json::from_str(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
        if r.allocation.len() != uav_count {
            return Err(Failure::Config(format!("{} UAVs in result, {uav_count} in formation", r.allocation.len())));
        }
        return Ok((r.allocation, Some(r.final_superframe)));
    }
    let mut assignment = vec![None; uav_count];
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    for (line, row) in reader.deserialize::<(usize, u32)>().enumerate() {
        let (uav, slot) = row.map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
        if uav >= uav_count || slot == 0 {
            return Err(Failure::Config(format!("{}: row {}: uav {uav} slot {slot} out of range", path.display(), line + 2)));
        }
        assignment[uav] = Some(TxSlot::new(slot));
    }
    Ok((assignment, None))
}

fn cmd_validate(config: &Path, schedule: &Path, superframe: Option<u32>, allow_empty: bool) -> Result<(), Failure> {
    let sc = load_scenario(config)?;
    let formation = sc.formation.build(sc.safety_radius)?;
    let params = sc.protocol.resolve(&formation, &sc.channel)?;
    let (assignment, final_size) = load_assignment(schedule, formation.len())?;
    let highest = assignment.iter().flatten().map(|s| s.number()).max().unwrap_or(0);
    let size = superframe.or(final_size).unwrap_or(highest);
    let violations =
        validate_allocation(&formation, &assignment, size, &sc.channel, params.beacon_tx_power, !allow_empty);
    let report = serde_json::json!({ "superframe": size, "valid": violations.is_empty(), "violations": violations });
    println!("{}", serde_json::to_string_pretty(&report).map_err(|e| Failure::Config(e.to_string()))?);
    if violations.is_empty() {
        Ok(())
    } else {
        Err(Failure::Validation(format!("{} violations", violations.len())))
    }
}

fn cmd_gen_topology(
    rings: Option<usize>,
    rows: Option<usize>,
    cols: Option<usize>,
    single: Option<usize>,
    config: Option<&Path>,
    spacing: f64,
    out: Option<&Path>,
) -> Result<(), Failure> {
    let (spec, radius) = match (rings, rows.zip(cols), single, config) {
        (Some(rings), ..) => (FormationSpec::HexRings { rings, spacing }, 10.0),
        (_, Some((rows, cols)), ..) => (FormationSpec::HexGrid { rows, cols, spacing }, 10.0),
        (_, _, Some(count), _) => (FormationSpec::SingleHop { count }, 10.0),
        (_, _, _, Some(path)) => {
            let sc = load_scenario(path)?;
            (sc.formation, sc.safety_radius)
        }
        _ => return Err(Failure::Config("one of --rings, --rows/--cols, --single or --config is required".into())),
    };
    spec.build(radius)?.write_csv(output(out)?)?;
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Run { config, overrides, reps, trace, out } => cmd_run(&config, &overrides, reps, trace, out.as_deref()),
        Command::Sweep { config, overrides, reps, out, jobs } => cmd_sweep(&config, &overrides, reps, out.as_deref(), jobs),
        Command::Baseline { config, order, out } => cmd_baseline(&config, order, out.as_deref()),
        Command::Validate { config, schedule, superframe, allow_empty } => {
            cmd_validate(&config, &schedule, superframe, allow_empty)
        }
        Command::GenTopology { rings, rows, cols, single, config, spacing, out } => {
            cmd_gen_topology(rings, rows, cols, single, config.as_deref(), spacing, out.as_deref())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Validation(msg)) => {
            eprintln!("validation failed: {msg}");
            ExitCode::from(EXIT_VALIDATION)
        }
        Err(Failure::NotConverged(msg)) => {
            eprintln!("not converged: {msg}");
            ExitCode::from(EXIT_NOT_CONVERGED)
        }
    }
}
