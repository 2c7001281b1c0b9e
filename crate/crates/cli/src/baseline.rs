//! Manual-pipeline baselines for pipeline reports.
//!
//! A baseline file is either a bare list of stage timings or any JSON
//! object (typically a scenario file) with a `baseline` list.

use std::path::Path;

use railshop_core::StageTiming;
use serde::Deserialize;

/// File name `simulate` writes into the data directory.
pub const DEFAULT_FILE: &str = "baseline.json";

#[derive(Deserialize)]
#[serde(untagged)]
enum Doc {
    List(Vec<StageTiming>),
    Object { baseline: Vec<StageTiming> },
}

pub fn parse(text: &str) -> Result<Vec<StageTiming>, String> {
    match serde_json::from_str::<Doc>(text) {
        Ok(Doc::List(list)) | Ok(Doc::Object { baseline: list }) => Ok(list),
        Err(_) => Err("expected a list of {stage, duration} or an object with a `baseline` list".into()),
    }
}

pub fn read(path: &Path) -> Result<Vec<StageTiming>, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    parse(&text).map_err(|e| format!("{}: {e}", path.display()))
}

/// A bare file name; anything that could walk out of the directory is refused.
pub fn is_plain_name(name: &str) -> bool {
    !name.is_empty() && !name.starts_with('.') && !name.contains(['/', '\\'])
}
