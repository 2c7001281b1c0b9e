//! Subcommand bodies. Each returns the text to print on success.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use railshop_core::audit::verify_journal_bytes;
use railshop_core::metrics::{compare_pipelines, incident_stats, stage_durations};
use railshop_core::persistence::{self, journal_path, OpenOptions};
use railshop_core::*;

use crate::baseline;
use crate::config::ServeConfig;
use crate::gateway::{self, AppState};
use crate::scenario::{Runner, Scenario};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

fn open_system(dir: &Path, config: EngineConfig, fsync: bool) -> Result<Engine, CliError> {
    Ok(persistence::open(
        dir,
        Arc::new(SystemClock),
        config,
        OpenOptions { fsync, crash: None },
    )?)
}

pub fn serve(config: ServeConfig) -> Result<String, CliError> {
    let engine = open_system(&config.data_dir, config.engine.clone(), config.fsync)?;
    if let Some(path) = &config.zones {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        engine.install_zones(ZoneLayout::from_json(&text)?)?;
    }
    if engine.users().is_empty() {
        tracing::warn!("no users yet; run `railshop seed --file <fixture>` first");
    }
    let state = AppState {
        engine: Arc::new(engine),
        baseline_dir: Some(config.data_dir.clone()),
    };
    let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::Failed(e.to_string()))?;
    runtime
        .block_on(gateway::serve(
            state,
            config.addr,
            Some(config.console_dir.clone()),
            config.sweep_every,
        ))
        .map_err(|e| CliError::Failed(format!("bind {}: {e}", config.addr)))?;
    Ok("stopped".into())
}

pub fn seed(data_dir: &Path, file: &Path) -> Result<String, CliError> {
    let scenario = Scenario::read(file)?;
    let engine = open_system(data_dir, EngineConfig::default(), true)?;
    Runner::new(&engine, &scenario).setup(&scenario)?;
    Ok(format!(
        "seeded {} users, {} machines, {} contractors (seq {})",
        scenario.users.len(),
        scenario.machines.len(),
        scenario.contractors.len(),
        engine.last_seq()
    ))
}

/// Runs setup and script on a manual clock, then stores the scenario's
/// baseline next to the journal for later reports.
pub fn simulate(data_dir: &Path, file: &Path) -> Result<String, CliError> {
    let scenario = Scenario::read(file)?;
    let start = scenario
        .start_time()
        .ok_or_else(|| CliError::Usage("scenario needs `start` or a script".into()))?;
    let clock = ManualClock::new(start);
    let engine = persistence::open(data_dir, Arc::new(clock.clone()), EngineConfig::default(), OpenOptions::default())?;
    let mut runner = Runner::new(&engine, &scenario);
    runner.setup(&scenario)?;
    for (i, step) in scenario.script.iter().enumerate() {
        clock.set(step.at.max(clock.now()));
        runner
            .step(step)
            .map_err(|e| prefix(e, &format!("step {} ({})", i + 1, step.op)))?;
    }
    if !scenario.baseline.is_empty() {
        let text = serde_json::to_string_pretty(&scenario.baseline).expect("timings serialize");
        std::fs::write(data_dir.join(baseline::DEFAULT_FILE), text + "\n").map_err(Error::from)?;
    }
    Ok(format!(
        "simulated {} steps (seq {})",
        scenario.script.len(),
        engine.last_seq()
    ))
}

fn prefix(e: CliError, context: &str) -> CliError {
    match e {
        CliError::Usage(m) => CliError::Usage(format!("{context}: {m}")),
        CliError::Failed(m) => CliError::Failed(format!("{context}: {m}")),
        CliError::Domain(d) => CliError::Failed(format!("{context}: {}: {d}", d.code())),
    }
}

pub struct PipelineArgs<'a> {
    pub baseline: Option<&'a Path>,
    pub from: Option<Timestamp>,
    pub to: Option<Timestamp>,
    pub format: Format,
}

pub fn report_pipeline(data_dir: &Path, args: PipelineArgs<'_>) -> Result<String, CliError> {
    let default = data_dir.join(baseline::DEFAULT_FILE);
    let path = match args.baseline {
        Some(p) => p.to_path_buf(),
        None if default.is_file() => default,
        None => return Err(CliError::Usage("no baseline: pass --baseline <file>".into())),
    };
    let manual = baseline::read(&path).map_err(CliError::Usage)?;
    let loaded = persistence::load(data_dir)?;
    let first = loaded.entries.first().map(|e| e.at);
    let last = loaded.entries.last().map(|e| e.at);
    let (Some(from), Some(to)) = (args.from.or(first), args.to.or(last)) else {
        return Err(CliError::Failed("journal is empty".into()));
    };
    let digital: Vec<StageTiming> = stage_durations(&loaded.entries, from, to)?
        .into_iter()
        .map(|(stage, duration)| StageTiming { stage, duration })
        .collect();
    let report = compare_pipelines(&manual, &digital)?;
    Ok(match args.format {
        Format::Csv => report.to_csv(),
        Format::Json => serde_json::to_string_pretty(&report).expect("report serializes"),
    })
}

pub fn report_incidents(data_dir: &Path, format: Format) -> Result<String, CliError> {
    let loaded = persistence::load(data_dir)?;
    let incidents: Vec<Incident> = loaded.store.incidents().cloned().collect();
    let stats: BTreeMap<IncidentCategory, f64> = incident_stats(&incidents);
    Ok(match format {
        Format::Json => serde_json::to_string_pretty(&stats).expect("stats serialize"),
        Format::Csv => {
            let mut out = String::from("category,percent\n");
            for (category, pct) in &stats {
                let name = serde_json::to_value(category).expect("category serializes");
                let _ = writeln!(out, "{},{pct}", name.as_str().unwrap_or("?"));
            }
            out
        }
    })
}

/// Checks the journal bytes as they are on disk.
pub fn audit_verify(data_dir: &Path) -> Result<String, CliError> {
    let path = journal_path(data_dir);
    let bytes = match std::fs::read(&path) {
        Ok(b) => b,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Vec::new(),
        Err(e) => return Err(Error::from(e).into()),
    };
    let report = verify_journal_bytes(&bytes);
    match report.first_bad_seq {
        None => Ok(format!("chain valid ({} entries)", report.entries)),
        Some(seq) => Err(CliError::Failed(format!("chain broken at seq {seq}"))),
    }
}

pub fn snapshot_create(data_dir: &Path) -> Result<String, CliError> {
    let engine = open_system(data_dir, EngineConfig::default(), true)?;
    let snap = persistence::write_snapshot(&engine, data_dir)?;
    Ok(format!("snapshot at seq {}", snap.last_seq))
}
