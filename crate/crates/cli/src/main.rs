use std::net::IpAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use railshop_cli::commands::{self, Format, PipelineArgs};
use railshop_cli::config::{self, FileConfig, Overrides, ServeConfig, DATA_DIR_ENV};
use railshop_cli::CliError;
use railshop_core::Timestamp;

#[derive(Parser)]
#[command(name = "railshop", version, about = "Workshop safety workflow service and tools")]
struct Cli {
    /// JSON config file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Data directory (default: $RAILSHOP_DATA_DIR, then the config file, then ./data).
    #[arg(long, global = true)]
    data_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the HTTP gateway.
    Serve {
        #[arg(long)]
        port: Option<u16>,
        #[arg(long)]
        bind: Option<IpAddr>,
        /// Zone layout to install at startup.
        #[arg(long)]
        zones: Option<PathBuf>,
        /// Static console assets served under /console.
        #[arg(long)]
        console: Option<PathBuf>,
        /// Seconds between expiry sweeps.
        #[arg(long)]
        sweep_secs: Option<u64>,
    },
    /// Create users, zones, machines and contractors from a fixture.
    Seed {
        #[arg(long)]
        file: PathBuf,
    },
    /// Replay a scripted scenario on a simulated clock.
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
    },
    #[command(subcommand)]
    Report(Report),
    #[command(subcommand)]
    Audit(Audit),
    #[command(subcommand)]
    Snapshot(Snapshot),
}

#[derive(Subcommand)]
enum Report {
    /// Manual vs digital stage durations.
    Pipeline {
        /// Baseline or scenario file with manual timings.
        #[arg(long)]
        baseline: Option<PathBuf>,
        #[arg(long, value_parser = parse_ts)]
        from: Option<Timestamp>,
        #[arg(long, value_parser = parse_ts)]
        to: Option<Timestamp>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Incident share per category.
    Incidents {
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
}

#[derive(Subcommand)]
enum Audit {
    /// Verify the hash chain of the journal on disk.
    Verify,
}

#[derive(Subcommand)]
enum Snapshot {
    /// Write state.snapshot.json for the current state.
    Create,
}

fn parse_ts(text: &str) -> Result<Timestamp, String> {
    railshop_core::time::parse(text).map_err(|e| e.to_string())
}

fn run(cli: Cli) -> Result<String, CliError> {
    let file = match &cli.config {
        Some(path) => FileConfig::read(path)?,
        None => FileConfig::default(),
    };
    let env = std::env::var(DATA_DIR_ENV).ok();
    let data_dir = config::data_dir(cli.data_dir.as_deref(), env.as_deref(), &file);
    let dir: &Path = &data_dir;
    match cli.command {
        Command::Serve {
            port,
            bind,
            zones,
            console,
            sweep_secs,
        } => {
            let flags = Overrides {
                data_dir: cli.data_dir.clone(),
                bind,
                port,
                zones,
                console_dir: console,
                sweep_interval_secs: sweep_secs,
            };
            commands::serve(ServeConfig::resolve(&file, &flags, env.as_deref())?)
        }
        Command::Seed { file } => commands::seed(dir, &file),
        Command::Simulate { scenario } => commands::simulate(dir, &scenario),
        Command::Report(Report::Pipeline {
            baseline,
            from,
            to,
            format,
        }) => commands::report_pipeline(
            dir,
            PipelineArgs {
                baseline: baseline.as_deref(),
                from,
                to,
                format,
            },
        ),
        Command::Report(Report::Incidents { format }) => commands::report_incidents(dir, format),
        Command::Audit(Audit::Verify) => commands::audit_verify(dir),
        Command::Snapshot(Snapshot::Create) => commands::snapshot_create(dir),
    }
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(out) => {
            print!("{out}");
            if !out.ends_with('\n') {
                println!();
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
