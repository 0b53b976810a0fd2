use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sniffy_core::batch::{self, SweepRow};
use sniffy_core::trial::{record_of, summarize};
use sniffy_core::{Error, ExperimentConfig, PlannerKind, Result, Simulation};

/// Multi-robot gas source localization experiments.
#[derive(Parser, Debug)]
#[command(name = "sniffy", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a batch of trials and write results.csv and summary.json.
    Run(Common),
    /// Re-run one seed with a full trajectory and optional belief dumps.
    Replay {
        #[command(flatten)]
        common: Common,
        /// Dump the belief map every N ticks (0 dumps only the final map).
        #[arg(long, value_name = "N")]
        dump_belief: Option<usize>,
    },
    /// Vary one config key over a list of values.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Dotted key such as `team.tau` or `plume.release_rate`.
        #[arg(long)]
        key: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
    },
    /// Run every planner on the same seeds.
    Compare(Common),
}

#[derive(Args, Debug)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    trials: Option<usize>,
    /// Base seed; trial i uses seed + i.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Replaces the world file named in the config.
    #[arg(long)]
    world: Option<PathBuf>,
    #[arg(long)]
    planner: Option<PlannerKind>,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::load(&self.config)?;
        if let Some(w) = &self.world {
            cfg = cfg.with_world(w)?;
        }
        if let Some(p) = self.planner {
            cfg = cfg.with_planner(p);
        }
        let e = &mut cfg.experiment;
        if let Some(n) = self.trials {
            if n == 0 {
                return Err(Error::Usage("--trials must be at least 1".into()));
            }
            e.n_trials = n;
        }
        if let Some(s) = self.seed {
            e.base_seed = s;
        }
        if let Some(w) = self.workers {
            e.workers = w.max(1);
        }
        if let Some(o) = &self.out {
            e.output = o.clone();
        }
        Ok(cfg)
    }
}

fn print_json<T: serde::Serialize>(v: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn replay(cfg: &ExperimentConfig, dump_every: Option<usize>) -> Result<()> {
    let seed = cfg.experiment.base_seed;
    let dir = &cfg.experiment.output;
    std::fs::create_dir_all(dir).map_err(|e| Error::Usage(format!("cannot create {}: {e}", dir.display())))?;
    let mut sim = Simulation::new(&cfg.scenario, seed)?;
    let mut tick = 0usize;
    let dump = |sim: &Simulation<'_>, tick: usize| dump_belief(&dir.join(format!("belief_{seed}_{tick:05}.csv")), sim);
    while sim.outcome == sniffy_core::Outcome::Running {
        if let Some(n) = dump_every {
            if n > 0 && tick % n == 0 {
                dump(&sim, tick)?;
            }
        }
        sim.run_tick()?;
        tick += 1;
    }
    if dump_every.is_some() {
        dump(&sim, tick)?;
    }
    let rec = record_of(&sim, seed, 1)?;
    batch::write_trajectory(&dir.join(format!("trajectory_{seed}.csv")), &rec)?;
    let json = serde_json::to_string_pretty(&rec)?;
    let path = dir.join(format!("trial_{seed}.json"));
    std::fs::write(&path, json + "\n").map_err(|e| Error::Usage(format!("cannot write {}: {e}", path.display())))?;
    print_json(&serde_json::json!({
        "seed": seed,
        "outcome": rec.outcome,
        "elapsed": rec.elapsed,
        "ticks": tick,
    }))
}

fn dump_belief(path: &Path, sim: &Simulation<'_>) -> Result<()> {
    let world = &sim.scenario.world;
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["col", "row", "x", "y", "p"])?;
    for (c, p) in world.free_cells().iter().zip(&sim.belief.p) {
        let ctr = world.cell_center(*c);
        w.write_record([c.col.to_string(), c.row.to_string(), ctr.x.to_string(), ctr.y.to_string(), p.to_string()])?;
    }
    w.flush().map_err(|e| Error::Usage(format!("cannot write {}: {e}", path.display())))
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Command::Run(c) => {
            let cfg = c.load()?;
            let recs = batch::run_config(&cfg)?;
            let s = batch::write_batch(&cfg.experiment.output, &recs, true)?;
            print_json(&s)
        }
        Command::Replay { common, dump_belief } => {
            let cfg = common.load()?;
            replay(&cfg, dump_belief)
        }
        Command::Sweep { common, key, values } => {
            let cfg = common.load()?;
            let runs = batch::sweep(&cfg, &key, &values)?;
            let rows: Vec<SweepRow> = runs.into_iter().map(|(r, _)| r).collect();
            batch::write_sweep(&cfg.experiment.output, &rows)?;
            print_json(&rows)
        }
        Command::Compare(c) => {
            let cfg = c.load()?;
            let runs = batch::compare(&cfg)?;
            batch::write_compare(&cfg.experiment.output, &runs)?;
            let keyed: std::collections::BTreeMap<String, _> = runs
                .iter()
                .map(|(k, recs)| summarize(recs).map(|s| (k.to_string(), s)))
                .collect::<Result<_>>()?;
            print_json(&keyed)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config_error() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
