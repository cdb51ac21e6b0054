use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use calorix_cli::{run_task, task_catalog, CliError, ExperimentConfig, TaskName};
use clap::Parser;

#[derive(Debug, Parser)]
#[command(name = "calorix", version, about = "Anisotropic heat potentials and caloric polynomial fits")]
struct Args {
    /// Task to run, or `list-tasks`.
    task: String,
    /// JSON configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; defaults to `output.directory` next to the configuration.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, env = "CALORIX_THREADS")]
    threads: Option<usize>,
}

fn list_tasks() {
    let mut out = std::io::stdout().lock();
    for (task, purpose, params) in task_catalog() {
        if writeln!(out, "{task}\n    {purpose}\n    parameters: {params}").is_err() {
            return;
        }
    }
}

fn run(args: Args) -> Result<(), CliError> {
    if args.task == "list-tasks" {
        list_tasks();
        return Ok(());
    }
    let task: TaskName = args.task.parse()?;
    let path = args.config.ok_or_else(|| CliError::Config(format!("task {task} needs --config <path>")))?;
    let config = ExperimentConfig::load(&path)?;
    if let Some(threads) = args.threads {
        if threads == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Config(format!("cannot configure threads: {e}")))?;
    }
    let out = args.out.unwrap_or_else(|| {
        let base = path.parent().map(PathBuf::from).unwrap_or_default();
        base.join(&config.output.directory)
    });
    let report = run_task(task, &config)?;
    print!("{}", report.summary());
    for written in report.write(&config, &out)? {
        println!("wrote {}", written.display());
    }
    match report.first_failure() {
        Some(c) => Err(CliError::TaskFailed(format!("{} = {:e} exceeds {:e}", c.name, c.value, c.limit))),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("calorix: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
