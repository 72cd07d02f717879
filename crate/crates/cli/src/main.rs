use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tvta::{
    dataset, report, run_all, train, tuning, CliError, Experiment, ExperimentConfig, Result, RunOptions, ThreadFleet,
    DEMO_CONFIG, OUT_DIR_ENV,
};

#[derive(Parser)]
#[command(name = "tvta", version, about = "Importance-guided overlay and schedule autotuning on a virtual FPGA toolchain")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Implement sampled design points and write the training dataset.
    Dataset(Common),
    /// Cross-validate boosted trees and write feature importance.
    Train(Common),
    /// Run the tuning matrix and write traces and convergence curves.
    Tune(Common),
    /// Summarize tuning traces into roofline and convergence tables.
    Report(Common),
    /// Check that trace files are well-formed.
    Validate {
        /// Files or directories to check (default: the output directory).
        paths: Vec<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Run the whole pipeline on a small built-in experiment.
    Demo {
        /// Print the demo config and exit.
        #[arg(long)]
        print_config: bool,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args, Clone)]
struct Common {
    /// Experiment config (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Run only this tuning seed (also reseeds dataset and training).
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: available cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory (overrides the env var and the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Omit wall-clock fields so outputs are byte-reproducible.
    #[arg(long)]
    no_timestamps: bool,
}

impl Common {
    fn experiment(&self, fallback: Option<&str>) -> Result<(Experiment, RunOptions)> {
        let mut cfg = match (&self.config, fallback) {
            (Some(p), _) => ExperimentConfig::load(p)?,
            (None, Some(text)) => ExperimentConfig::from_toml(text)?,
            (None, None) => return Err(CliError::Config("--config is required".into())),
        };
        if let Some(s) = self.seed {
            cfg.seeds = vec![s];
            cfg.dataset.seed = s;
            cfg.gbt.seed = s;
        }
        let out = self
            .out
            .clone()
            .or_else(|| std::env::var_os(OUT_DIR_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
            .or_else(|| cfg.out.clone())
            .unwrap_or_else(|| PathBuf::from("out").join(&cfg.experiment_id));
        let workers = match self.workers {
            Some(0) => return Err(CliError::Config("--workers must be at least 1".into())),
            Some(n) => n,
            None => tvta_core::tuner::Fleet::workers(&ThreadFleet::available()),
        };
        let exp = cfg.resolve()?;
        Ok((exp, RunOptions { out, workers, timestamps: !self.no_timestamps }))
    }
}

fn validate(paths: &[PathBuf]) -> Result<()> {
    let mut files = Vec::new();
    for p in paths {
        if p.is_dir() {
            collect_jsonl(p, &mut files)?;
        } else if p.exists() {
            files.push(p.clone());
        } else {
            return Err(CliError::Missing(format!("{} not found", p.display())));
        }
    }
    if files.is_empty() {
        return Err(CliError::Missing("no trace files found".into()));
    }
    let mut bad = 0;
    for f in &files {
        let (_, rep) = tvta::trace::read_trace(f)?;
        if rep.errors.is_empty() {
            println!("ok      {} ({} records)", f.display(), rep.records);
        } else {
            bad += 1;
            println!("invalid {}: {}", f.display(), rep.errors.join("; "));
        }
    }
    if bad > 0 {
        return Err(CliError::Failed(format!("{bad} of {} files are invalid", files.len())));
    }
    Ok(())
}

fn collect_jsonl(dir: &std::path::Path, out: &mut Vec<PathBuf>) -> Result<()> {
    let mut entries: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| CliError::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .collect();
    entries.sort();
    for p in entries {
        if p.is_dir() {
            collect_jsonl(&p, out)?;
        } else if p.extension().is_some_and(|x| x == "jsonl") {
            out.push(p);
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Dataset(c) => {
            let (exp, opts) = c.experiment(None)?;
            let s = dataset::generate_dataset(&exp, &opts)?;
            for (p, n) in &s.per_precision {
                println!("precision {p}: {n} samples");
            }
            println!("wrote {}", opts.dataset_file().display());
        }
        Command::Train(c) => {
            let (exp, opts) = c.experiment(None)?;
            let f = train::train_importance(&exp, &opts)?;
            print!("{}", train::summary_table(&f));
        }
        Command::Tune(c) => {
            let (exp, opts) = c.experiment(None)?;
            let runs = tuning::run_tuning(&exp, &opts)?;
            for (k, s) in &runs {
                println!("{:<40} best {:>9.2} GOPs  t95 {:?}", k.stem(), s.best_gops, s.t95);
            }
        }
        Command::Report(c) => {
            let (exp, opts) = c.experiment(None)?;
            let r = report::report(&exp, &opts)?;
            print!("{}", report::summary_text(&r));
        }
        Command::Validate { paths, common } => {
            let paths = if paths.is_empty() { vec![common.experiment(None)?.1.out] } else { paths };
            validate(&paths)?;
        }
        Command::Demo { print_config, common } => {
            if print_config {
                print!("{DEMO_CONFIG}");
                return Ok(());
            }
            let (exp, opts) = common.experiment(Some(DEMO_CONFIG))?;
            let r = run_all(&exp, &opts)?;
            print!("{}", report::summary_text(&r));
            println!("outputs in {}", opts.out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let first = e.to_string().lines().next().unwrap_or_default().trim_start_matches("error: ").to_string();
            let c = CliError::Config(first);
            eprint!("{}", e.render());
            eprintln!("{}", c.to_json_line());
            std::process::exit(c.exit_code())
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json_line());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
