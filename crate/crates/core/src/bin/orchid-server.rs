use std::collections::HashMap;
use std::net::IpAddr;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::Parser;
use orchid::config::{load_config, parse_provider_kind, Overrides};
use tracing_subscriber::EnvFilter;

/// Serve an Orchid workspace over HTTP.
///
/// Flags override ORCHID_* environment variables, which override the
/// config file.
#[derive(Debug, Parser)]
#[command(version)]
struct Args {
    /// TOML config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Listen address [env: ORCHID_HOST].
    #[arg(long)]
    host: Option<IpAddr>,
    /// Listen port, 0 for any [env: ORCHID_PORT].
    #[arg(long)]
    port: Option<u16>,
    /// Workspace and audit log directory [env: ORCHID_DATA_DIR].
    #[arg(long)]
    data_dir: Option<PathBuf>,
    /// scripted or remote_http [env: ORCHID_PROVIDER].
    #[arg(long, value_parser = parse_provider_kind)]
    provider: Option<orchid::provider::ProviderKind>,
    /// Completion endpoint URL [env: ORCHID_PROVIDER_ENDPOINT].
    #[arg(long)]
    provider_endpoint: Option<String>,
    /// Name of the variable holding the bearer token [env: ORCHID_PROVIDER_TOKEN_VAR].
    #[arg(long)]
    provider_token_var: Option<String>,
    /// Scripted provider fixture file [env: ORCHID_PROVIDER_FIXTURES].
    #[arg(long)]
    provider_fixtures: Option<PathBuf>,
    /// Per-job provider timeout in seconds.
    #[arg(long)]
    job_timeout: Option<f64>,
    /// Upper bound on concurrently running jobs.
    #[arg(long)]
    max_concurrent_jobs: Option<usize>,
}

impl Args {
    fn overrides(&self) -> Result<Overrides, String> {
        let job_timeout =
            self.job_timeout.map(Duration::try_from_secs_f64).transpose().map_err(|e| format!("--job-timeout: {e}"))?;
        Ok(Overrides {
            host: self.host,
            port: self.port,
            data_dir: self.data_dir.clone(),
            provider: self.provider,
            provider_endpoint: self.provider_endpoint.clone(),
            provider_token_var: self.provider_token_var.clone(),
            provider_fixtures: self.provider_fixtures.clone(),
            job_timeout,
            max_concurrent_jobs: self.max_concurrent_jobs,
            ..Overrides::default()
        })
    }
}

#[tokio::main]
async fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")))
        .with_writer(std::io::stderr)
        .init();
    let args = Args::parse();
    let env: HashMap<String, String> = std::env::vars().collect();
    let config = match args.overrides().map_err(|e| e.to_string()).and_then(|flags| {
        load_config(&env, flags, args.config.as_deref()).map_err(|e| e.to_string())
    }) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("orchid-server: {e}");
            return ExitCode::from(2);
        }
    };
    let handle = match orchid::api::serve(config).await {
        Ok(h) => h,
        Err(e) => {
            eprintln!("orchid-server: {e}");
            return ExitCode::FAILURE;
        }
    };
    println!("listening on http://{}", handle.addr);
    if let Err(e) = tokio::signal::ctrl_c().await {
        eprintln!("orchid-server: waiting for ctrl-c: {e}");
    }
    match handle.shutdown().await {
        Ok(report) => {
            tracing::info!(cancelled = report.cancelled, "shut down");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("orchid-server: {e}");
            ExitCode::FAILURE
        }
    }
}
