//! Service configuration.
//!
//! Sources, strongest first: command-line flags, environment variables, an
//! optional TOML file, built-in defaults. Every source fills the same set of
//! optional [`Overrides`]; the merged result is validated once.

use std::collections::HashMap;
use std::net::IpAddr;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Deserialize;

use crate::engine::types::TemperatureTable;
use crate::engine::EngineConfig;
use crate::provider::{ProviderConfig, ProviderKind};
use crate::resolver::UnresolvedPolicy;

pub const ENV_HOST: &str = "ORCHID_HOST";
pub const ENV_PORT: &str = "ORCHID_PORT";
pub const ENV_DATA_DIR: &str = "ORCHID_DATA_DIR";
pub const ENV_PROVIDER: &str = "ORCHID_PROVIDER";
pub const ENV_PROVIDER_ENDPOINT: &str = "ORCHID_PROVIDER_ENDPOINT";
pub const ENV_PROVIDER_TOKEN_VAR: &str = "ORCHID_PROVIDER_TOKEN_VAR";
pub const ENV_PROVIDER_FIXTURES: &str = "ORCHID_PROVIDER_FIXTURES";

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub host: IpAddr,
    /// 0 binds an ephemeral port.
    pub port: u16,
    pub data_dir: PathBuf,
    pub provider: ProviderConfig,
    pub engine: EngineConfig,
    /// How long shutdown waits for running jobs before cancelling them.
    pub shutdown_grace: Duration,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            host: IpAddr::from([127, 0, 0, 1]),
            port: 8080,
            data_dir: PathBuf::from("orchid-data"),
            provider: ProviderConfig::default(),
            engine: EngineConfig::default(),
            shutdown_grace: Duration::from_secs(10),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid config field {field}: {reason}")]
pub struct InvalidConfig {
    pub field: String,
    pub reason: String,
}

fn invalid(field: &str, reason: impl Into<String>) -> InvalidConfig {
    InvalidConfig { field: field.to_owned(), reason: reason.into() }
}

/// One configuration source. `None` means "not set here".
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub host: Option<IpAddr>,
    pub port: Option<u16>,
    pub data_dir: Option<PathBuf>,
    pub provider: Option<ProviderKind>,
    pub provider_endpoint: Option<String>,
    pub provider_token_var: Option<String>,
    pub provider_fixtures: Option<PathBuf>,
    pub provider_timeout: Option<Duration>,
    pub provider_max_retries: Option<u32>,
    pub temperatures: Option<TemperatureTable>,
    pub max_concurrent_jobs: Option<usize>,
    pub job_timeout: Option<Duration>,
    pub max_output_tokens: Option<u32>,
    pub unresolved_mentions: Option<UnresolvedPolicy>,
    pub shutdown_grace: Option<Duration>,
}

impl Overrides {
    fn apply(self, c: &mut Config) {
        macro_rules! set {
            ($src:expr => $dst:expr) => {
                if let Some(v) = $src {
                    $dst = v;
                }
            };
        }
        set!(self.host => c.host);
        set!(self.port => c.port);
        set!(self.data_dir => c.data_dir);
        set!(self.provider => c.provider.kind);
        set!(self.provider_endpoint.map(Some) => c.provider.endpoint);
        set!(self.provider_token_var.map(Some) => c.provider.token_var);
        set!(self.provider_fixtures.map(Some) => c.provider.fixtures);
        set!(self.provider_timeout => c.provider.timeout);
        set!(self.provider_max_retries => c.provider.max_retries);
        set!(self.temperatures => c.engine.temperatures);
        set!(self.max_concurrent_jobs => c.engine.max_concurrent_jobs);
        set!(self.job_timeout => c.engine.job_timeout);
        set!(self.max_output_tokens => c.engine.max_output_tokens);
        set!(self.unresolved_mentions => c.engine.unresolved);
        set!(self.shutdown_grace => c.shutdown_grace);
    }
}

pub fn parse_provider_kind(s: &str) -> Result<ProviderKind, String> {
    match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
        "scripted" => Ok(ProviderKind::Scripted),
        "remote_http" | "remote" | "http" => Ok(ProviderKind::RemoteHttp),
        other => Err(format!("unknown provider {other:?} (expected scripted or remote_http)")),
    }
}

/// Reads the `ORCHID_*` variables from `env`.
pub fn env_overrides(env: &HashMap<String, String>) -> Result<Overrides, InvalidConfig> {
    let get = |k: &str| env.get(k).map(|v| v.trim()).filter(|v| !v.is_empty());
    let mut o = Overrides::default();
    if let Some(v) = get(ENV_HOST) {
        o.host = Some(v.parse().map_err(|e| invalid(ENV_HOST, format!("{e}")))?);
    }
    if let Some(v) = get(ENV_PORT) {
        o.port = Some(v.parse().map_err(|_| invalid(ENV_PORT, format!("{v:?} is not a port number")))?);
    }
    o.data_dir = get(ENV_DATA_DIR).map(PathBuf::from);
    if let Some(v) = get(ENV_PROVIDER) {
        o.provider = Some(parse_provider_kind(v).map_err(|e| invalid(ENV_PROVIDER, e))?);
    }
    o.provider_endpoint = get(ENV_PROVIDER_ENDPOINT).map(str::to_owned);
    o.provider_token_var = get(ENV_PROVIDER_TOKEN_VAR).map(str::to_owned);
    o.provider_fixtures = get(ENV_PROVIDER_FIXTURES).map(PathBuf::from);
    Ok(o)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileTemperatures {
    precise: Option<f64>,
    balanced: Option<f64>,
    creative: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileProvider {
    kind: Option<String>,
    endpoint: Option<String>,
    token_var: Option<String>,
    fixtures: Option<PathBuf>,
    timeout_secs: Option<f64>,
    max_retries: Option<u32>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    host: Option<IpAddr>,
    port: Option<u16>,
    data_dir: Option<PathBuf>,
    max_concurrent_jobs: Option<usize>,
    job_timeout_secs: Option<f64>,
    max_output_tokens: Option<u32>,
    unresolved_mentions: Option<UnresolvedPolicy>,
    shutdown_grace_secs: Option<f64>,
    temperatures: Option<FileTemperatures>,
    provider: Option<FileProvider>,
}

fn secs(field: &str, v: Option<f64>) -> Result<Option<Duration>, InvalidConfig> {
    v.map(|s| Duration::try_from_secs_f64(s).map_err(|e| invalid(field, e.to_string()))).transpose()
}

/// Parses a TOML config file body. Relative paths inside it are resolved
/// against `base`.
pub fn file_overrides(text: &str, base: &Path) -> Result<Overrides, InvalidConfig> {
    let f: FileConfig = toml::from_str(text).map_err(|e| invalid("config file", e.message().to_owned()))?;
    let resolve = |p: PathBuf| if p.is_relative() { base.join(p) } else { p };
    let temperatures = f
        .temperatures
        .map(|t| {
            let need = |v: Option<f64>, name: &str| v.ok_or_else(|| invalid(&format!("temperatures.{name}"), "missing"));
            Ok::<_, InvalidConfig>(TemperatureTable {
                precise: need(t.precise, "precise")?,
                balanced: need(t.balanced, "balanced")?,
                creative: need(t.creative, "creative")?,
            })
        })
        .transpose()?;
    let p = f.provider;
    let provider = p
        .as_ref()
        .and_then(|p| p.kind.as_deref())
        .map(|k| parse_provider_kind(k).map_err(|e| invalid("provider.kind", e)))
        .transpose()?;
    Ok(Overrides {
        host: f.host,
        port: f.port,
        data_dir: f.data_dir.map(resolve),
        provider,
        provider_endpoint: p.as_ref().and_then(|p| p.endpoint.clone()),
        provider_token_var: p.as_ref().and_then(|p| p.token_var.clone()),
        provider_fixtures: p.as_ref().and_then(|p| p.fixtures.clone()).map(resolve),
        provider_timeout: secs("provider.timeout_secs", p.as_ref().and_then(|p| p.timeout_secs))?,
        provider_max_retries: p.as_ref().and_then(|p| p.max_retries),
        temperatures,
        max_concurrent_jobs: f.max_concurrent_jobs,
        job_timeout: secs("job_timeout_secs", f.job_timeout_secs)?,
        max_output_tokens: f.max_output_tokens,
        unresolved_mentions: f.unresolved_mentions,
        shutdown_grace: secs("shutdown_grace_secs", f.shutdown_grace_secs)?,
    })
}

/// True if `dir` exists and is a writable directory, or does not exist and
/// its nearest existing ancestor is. Creates nothing.
fn writable_dir(dir: &Path) -> Result<(), String> {
    let mut probe = Some(dir);
    while let Some(p) = probe {
        match std::fs::metadata(p) {
            Ok(m) if !m.is_dir() => return Err(format!("{} is not a directory", p.display())),
            Ok(m) if m.permissions().readonly() => return Err(format!("{} is read-only", p.display())),
            Ok(_) => return Ok(()),
            Err(_) => probe = p.parent().filter(|q| !q.as_os_str().is_empty()),
        }
    }
    Ok(())
}

pub fn validate(c: &Config) -> Result<(), InvalidConfig> {
    c.engine.temperatures.validate().map_err(|e| invalid("temperatures", e))?;
    if c.engine.max_concurrent_jobs == 0 {
        return Err(invalid("max_concurrent_jobs", "must be at least 1"));
    }
    if c.engine.job_timeout.is_zero() {
        return Err(invalid("job_timeout_secs", "must be positive"));
    }
    if c.engine.max_output_tokens == 0 {
        return Err(invalid("max_output_tokens", "must be positive"));
    }
    writable_dir(&c.data_dir).map_err(|e| invalid("data_dir", e))?;
    c.provider.validate().map_err(|(f, r)| invalid(f, r))?;
    if let Some(f) = &c.provider.fixtures {
        if !f.is_file() {
            return Err(invalid("provider.fixtures", format!("{} does not exist", f.display())));
        }
    }
    Ok(())
}

/// Merges defaults, the optional file, `env` and `flags`, then validates.
pub fn load_config(
    env: &HashMap<String, String>,
    flags: Overrides,
    file: Option<&Path>,
) -> Result<Config, InvalidConfig> {
    let mut config = Config::default();
    if let Some(path) = file {
        let text = std::fs::read_to_string(path)
            .map_err(|e| invalid("config file", format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        file_overrides(&text, base)?.apply(&mut config);
    }
    env_overrides(env)?.apply(&mut config);
    flags.apply(&mut config);
    validate(&config)?;
    Ok(config)
}
