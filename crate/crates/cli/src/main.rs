use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use beliefnet::check::check;
use beliefnet::config::{Scenario, Settings, BUILTIN_PREFIX};
use beliefnet::output;
use beliefnet::reproduce::{reproduce, Figure, DEFAULT_RUNS};
use beliefnet::runner::{run_rows, run_rows_traced};

const EXIT_USAGE: u8 = 64;
const EXIT_CONFIG: u8 = 65;
const EXIT_IO: u8 = 74;

#[derive(Parser)]
#[command(name = "beliefnet", version, about = "Belief consistency in management peer groups")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load a knowledge base and print the state of every datum.
    Check {
        /// `.jkb` file.
        kb: PathBuf,
        /// Justification asserted locally (repeatable).
        #[arg(long, value_name = "ID")]
        generated: Vec<String>,
        /// Justification learned from a peer (repeatable).
        #[arg(long, value_name = "ID")]
        received: Vec<String>,
    },
    /// Run one experiment.
    Simulate(ExperimentArgs),
    /// Run an experiment for every value of the list-valued setting.
    Sweep(ExperimentArgs),
    /// Regenerate the data and plotting script for one figure.
    Reproduce {
        figure: Figure,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_RUNS)]
        runs: usize,
    },
}

#[derive(Args)]
struct ExperimentArgs {
    /// Settings file (`key = value` lines); flags take precedence over it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Results CSV; a `.summary.csv` is written next to it. Defaults to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the tab-separated event trace of every run to this file.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[command(flatten)]
    keys: KeyFlags,
}

/// One flag per settings key, same names with dashes.
#[derive(Args)]
struct KeyFlags {
    #[arg(long, value_name = "N[,N...]")]
    group_size: Option<String>,
    /// `complete` or `random_regular(k)`.
    #[arg(long)]
    topology: Option<String>,
    /// `unbridled` or `controlled`.
    #[arg(long)]
    strategy: Option<String>,
    #[arg(long, value_name = "RHO[,RHO...]")]
    rho: Option<String>,
    /// Backoff window in cycles.
    #[arg(long)]
    backoff: Option<String>,
    #[arg(long, value_name = "P[,P...]")]
    loss_prob: Option<String>,
    #[arg(long)]
    delay: Option<String>,
    #[arg(long)]
    delay_max: Option<String>,
    #[arg(long)]
    crash_prob: Option<String>,
    #[arg(long)]
    runs: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// `.jkb` path or `builtin:<name>`.
    #[arg(long)]
    kb_fixture: Option<String>,
    #[arg(long)]
    target_datum: Option<String>,
    #[arg(long)]
    changed_justification: Option<String>,
}

impl KeyFlags {
    fn settings(&self) -> anyhow::Result<Settings> {
        let kb_fixture = self.kb_fixture.as_ref().map(|v| {
            // Flag paths are relative to the working directory, not the config file.
            if v.starts_with(BUILTIN_PREFIX) || Path::new(v).is_absolute() {
                v.clone()
            } else {
                std::env::current_dir().map(|d| d.join(v).display().to_string()).unwrap_or_else(|_| v.clone())
            }
        });
        let pairs = [
            ("group_size", &self.group_size),
            ("topology", &self.topology),
            ("strategy", &self.strategy),
            ("rho", &self.rho),
            ("backoff", &self.backoff),
            ("loss_prob", &self.loss_prob),
            ("delay", &self.delay),
            ("delay_max", &self.delay_max),
            ("crash_prob", &self.crash_prob),
            ("runs", &self.runs),
            ("seed", &self.seed),
            ("kb_fixture", &kb_fixture),
            ("target_datum", &self.target_datum),
            ("changed_justification", &self.changed_justification),
        ];
        let mut s = Settings::default();
        for (key, value) in pairs {
            if let Some(v) = value {
                s.set(key, v)?;
            }
        }
        Ok(s)
    }
}

struct Failure {
    code: u8,
    error: anyhow::Error,
}

fn fail(code: u8) -> impl FnOnce(anyhow::Error) -> Failure {
    move |error| Failure { code, error }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure { code, error }) => {
            eprintln!("error: {error:#}");
            ExitCode::from(code)
        }
    }
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Check { kb, generated, received } => {
            let text = std::fs::read_to_string(&kb)
                .with_context(|| format!("cannot read {}", kb.display()))
                .map_err(fail(EXIT_IO))?;
            match check(&text, &generated, &received) {
                Ok(lines) => {
                    let mut out = std::io::stdout().lock();
                    for line in lines {
                        writeln!(out, "{line}").context("writing report").map_err(fail(EXIT_IO))?;
                    }
                    Ok(())
                }
                Err(e) => {
                    let code = e.exit_code() as u8;
                    Err(Failure { code, error: anyhow::Error::new(e).context(kb.display().to_string()) })
                }
            }
        }
        Command::Simulate(args) => experiment(args, false),
        Command::Sweep(args) => experiment(args, true),
        Command::Reproduce { figure, out_dir, seed, runs } => {
            let written = reproduce(figure, &out_dir, seed, runs).map_err(|e| {
                let code = match e {
                    beliefnet::reproduce::ReproduceError::Sim(_) => EXIT_CONFIG,
                    _ => EXIT_IO,
                };
                Failure { code, error: e.into() }
            })?;
            for path in written {
                eprintln!("wrote {}", path.display());
            }
            Ok(())
        }
    }
}

fn scenario(args: &ExperimentArgs) -> anyhow::Result<Scenario> {
    let mut settings = Settings::defaults();
    let mut base_dir = PathBuf::from(".");
    if let Some(path) = &args.config {
        settings = settings.merged(&Settings::read(path)?);
        if let Some(dir) = path.parent() {
            base_dir = dir.to_path_buf();
        }
    }
    settings = settings.merged(&args.keys.settings()?);
    Ok(settings.scenario(&base_dir)?)
}

fn experiment(args: ExperimentArgs, sweep: bool) -> Result<(), Failure> {
    let sc = scenario(&args).map_err(fail(EXIT_CONFIG))?;
    match (&sc.axis, sweep) {
        (Some(a), false) => {
            return Err(fail(EXIT_CONFIG)(anyhow::anyhow!(
                "`{}` holds a list; use `sweep` for several values",
                a.name()
            )))
        }
        (None, true) => {
            return Err(fail(EXIT_CONFIG)(anyhow::anyhow!(
                "nothing to sweep: give a list for group_size, loss_prob or rho"
            )))
        }
        _ => {}
    }
    let axis_name = sc.axis.as_ref().map_or(output::NO_AXIS, |a| a.name());

    let rows = match &args.trace {
        None => run_rows(&sc.template, sc.axis.as_ref()).map_err(|e| fail(EXIT_CONFIG)(e.into()))?,
        Some(path) => {
            let (rows, traces) =
                run_rows_traced(&sc.template, sc.axis.as_ref()).map_err(|e| fail(EXIT_CONFIG)(e.into()))?;
            let mut text = String::new();
            for (row, run, events) in traces {
                if let Some(a) = &sc.axis {
                    text.push_str(&format!("# {}={} run={run}\n", a.name(), a.value(row)));
                } else {
                    text.push_str(&format!("# run={run}\n"));
                }
                for e in events {
                    text.push_str(&e.to_string());
                    text.push('\n');
                }
            }
            std::fs::write(path, text)
                .with_context(|| format!("writing {}", path.display()))
                .map_err(fail(EXIT_IO))?;
            rows
        }
    };

    match &args.out {
        None => output::write_results(std::io::stdout().lock(), axis_name, &rows)
            .context("writing results")
            .map_err(fail(EXIT_IO))?,
        Some(path) => {
            let file = std::fs::File::create(path)
                .with_context(|| format!("creating {}", path.display()))
                .map_err(fail(EXIT_IO))?;
            output::write_results(file, axis_name, &rows).context("writing results").map_err(fail(EXIT_IO))?;
            let summary = output::summary_path(path);
            let file = std::fs::File::create(&summary)
                .with_context(|| format!("creating {}", summary.display()))
                .map_err(fail(EXIT_IO))?;
            output::write_summary(file, axis_name, &rows).context("writing summary").map_err(fail(EXIT_IO))?;
        }
    }
    for row in &rows {
        eprintln!(
            "{axis_name}={} runs={} mean messages_sent={:.2} mean coherent_fraction={:.4}",
            if row.axis_value.is_nan() { "-".to_string() } else { row.axis_value.to_string() },
            row.metrics.runs.len(),
            row.metrics.mean_messages_sent(),
            row.metrics.mean_coherent_fraction()
        );
    }
    Ok(())
}
