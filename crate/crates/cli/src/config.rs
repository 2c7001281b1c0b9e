//! Service configuration: flags override a JSON config file, which
//! overrides defaults. `RAILSHOP_DATA_DIR` stands in for `--data-dir`.

use std::net::{IpAddr, Ipv4Addr, SocketAddr};
use std::path::{Path, PathBuf};
use std::time::Duration;

use railshop_core::EngineConfig;
use serde::Deserialize;

use crate::CliError;

pub const DATA_DIR_ENV: &str = "RAILSHOP_DATA_DIR";

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub data_dir: Option<PathBuf>,
    pub bind: Option<IpAddr>,
    pub port: Option<u16>,
    pub zones: Option<PathBuf>,
    pub console_dir: Option<PathBuf>,
    pub sweep_interval_secs: Option<u64>,
    pub session_ttl_minutes: Option<i64>,
    pub activation_grace_minutes: Option<i64>,
    pub min_safety_rating: Option<u8>,
    pub fsync: Option<bool>,
}

impl FileConfig {
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))
    }
}

/// Flag values; `None` means "not given".
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub data_dir: Option<PathBuf>,
    pub bind: Option<IpAddr>,
    pub port: Option<u16>,
    pub zones: Option<PathBuf>,
    pub console_dir: Option<PathBuf>,
    pub sweep_interval_secs: Option<u64>,
}

#[derive(Debug, Clone)]
pub struct ServeConfig {
    pub data_dir: PathBuf,
    pub addr: SocketAddr,
    pub zones: Option<PathBuf>,
    pub console_dir: PathBuf,
    pub sweep_every: Duration,
    pub fsync: bool,
    pub engine: EngineConfig,
}

/// Flag, then `RAILSHOP_DATA_DIR`, then the config file, then `./data`.
pub fn data_dir(flag: Option<&Path>, env: Option<&str>, file: &FileConfig) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| env.filter(|v| !v.is_empty()).map(PathBuf::from))
        .or_else(|| file.data_dir.clone())
        .unwrap_or_else(|| PathBuf::from("data"))
}

impl ServeConfig {
    pub fn resolve(file: &FileConfig, flags: &Overrides, env_data_dir: Option<&str>) -> Result<Self, CliError> {
        let mut engine = EngineConfig::default();
        if let Some(m) = file.session_ttl_minutes {
            if m <= 0 {
                return Err(CliError::Usage("session_ttl_minutes must be > 0".into()));
            }
            engine.session_ttl = chrono::Duration::minutes(m);
        }
        if let Some(m) = file.activation_grace_minutes {
            if m < 0 {
                return Err(CliError::Usage("activation_grace_minutes must be >= 0".into()));
            }
            engine.activation_grace = chrono::Duration::minutes(m);
        }
        engine.min_safety_rating = file.min_safety_rating;
        let sweep = flags.sweep_interval_secs.or(file.sweep_interval_secs).unwrap_or(60);
        if sweep == 0 {
            return Err(CliError::Usage("sweep interval must be > 0".into()));
        }
        let bind = flags.bind.or(file.bind).unwrap_or(IpAddr::V4(Ipv4Addr::LOCALHOST));
        let port = flags.port.or(file.port).unwrap_or(8080);
        Ok(Self {
            data_dir: data_dir(flags.data_dir.as_deref(), env_data_dir, file),
            addr: SocketAddr::new(bind, port),
            zones: flags.zones.clone().or_else(|| file.zones.clone()),
            console_dir: flags
                .console_dir
                .clone()
                .or_else(|| file.console_dir.clone())
                .unwrap_or_else(|| PathBuf::from("console")),
            sweep_every: Duration::from_secs(sweep),
            fsync: file.fsync.unwrap_or(true),
            engine,
        })
    }
}
