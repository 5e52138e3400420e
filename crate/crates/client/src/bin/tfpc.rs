use std::io;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::atomic::AtomicBool;
use std::time::Duration;

use clap::{Parser, Subcommand};
use tfpaas_client::{
    cmd_create_test, cmd_experiment, cmd_init, cmd_run_critical, cmd_run_master, cmd_validate,
    cmd_watch, Console, RunOptions, WatchOptions, DEFAULT_POLL_INTERVAL, DEFAULT_POLL_TIMEOUT,
    SERVICE_URL_ENV,
};
use tfpaas_experiment::ExperimentConfig;

/// Test-first performance client.
///
/// Exit codes: 0 pass, 1 performance criteria failed, 2 validation error,
/// 3 missing test case, 4 transport or protocol error, 5 filesystem error.
#[derive(Parser)]
#[command(name = "tfpc", version)]
struct Cli {
    /// Base URL of the service (overrides TFPC_SERVICE_URL and tfp.conf).
    #[arg(long, global = true)]
    service_url: Option<String>,
    /// Request timeout in seconds.
    #[arg(long, global = true, value_name = "SECONDS")]
    timeout: Option<u64>,
    /// Override the number of requests of the script's load profile.
    #[arg(long, global = true)]
    requests: Option<u32>,
    /// Override the concurrency of the script's load profile.
    #[arg(long, global = true)]
    concurrency: Option<u32>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Create the TFP project template.
    Init {
        #[arg(long, default_value = ".")]
        root: PathBuf,
        /// User name stored in the project identity (defaults to $USER).
        #[arg(long)]
        user: Option<String>,
    },
    /// Create the critical test script for a service source file.
    CreateTest {
        service_file: PathBuf,
        #[arg(long, default_value = ".")]
        root: PathBuf,
    },
    /// Validate test scripts.
    Validate {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
        /// Keep running and re-validate whenever a file changes.
        #[arg(long)]
        watch: bool,
    },
    /// Run the critical test of a service and print the verdict.
    RunCritical {
        service_file: PathBuf,
        #[arg(long, default_value = ".")]
        root: PathBuf,
    },
    /// Submit the master test suite and wait for its result.
    RunMaster {
        #[arg(long, default_value = ".")]
        root: PathBuf,
        #[arg(long, value_name = "MS", default_value_t = DEFAULT_POLL_INTERVAL.as_millis() as u64)]
        poll_interval_ms: u64,
        #[arg(long, value_name = "SECONDS", default_value_t = DEFAULT_POLL_TIMEOUT.as_secs())]
        poll_timeout_s: u64,
    },
    /// Compare validation in the service with validation in the client.
    Experiment {
        #[arg(long, default_value_t = 50)]
        validation_ms: u64,
        #[arg(long, default_value_t = 10)]
        rest_ms: u64,
        /// Comma-separated request counts (default 1,6,...,46).
        #[arg(long, value_delimiter = ',')]
        counts: Vec<u32>,
        #[arg(long, default_value_t = 5)]
        repetitions: u32,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

#[tokio::main]
async fn main() -> ExitCode {
    let cli = Cli::parse();
    let (mut stdout, mut stderr) = (io::stdout(), io::stderr());
    let mut con = Console {
        out: &mut stdout,
        err: &mut stderr,
    };
    let opts = RunOptions {
        service_url: cli.service_url,
        env_service_url: std::env::var(SERVICE_URL_ENV).ok(),
        timeout: cli.timeout.map(Duration::from_secs),
        requests: cli.requests,
        concurrency: cli.concurrency,
    };
    let exit = match cli.command {
        Command::Init { root, user } => {
            let user = user
                .or_else(|| std::env::var("USER").ok())
                .or_else(|| std::env::var("USERNAME").ok())
                .unwrap_or_default();
            cmd_init(&mut con, &root, &user)
        }
        Command::CreateTest { service_file, root } => cmd_create_test(&mut con, &root, &service_file),
        Command::Validate { paths, watch: false } => cmd_validate(&mut con, &paths),
        Command::Validate { paths, watch: true } => {
            let stop = AtomicBool::new(false);
            cmd_watch(&mut con, &paths, WatchOptions::default(), &stop)
        }
        Command::RunCritical { service_file, root } => {
            cmd_run_critical(&mut con, &root, &service_file, &opts).await
        }
        Command::RunMaster {
            root,
            poll_interval_ms,
            poll_timeout_s,
        } => {
            cmd_run_master(
                &mut con,
                &root,
                &opts,
                Duration::from_millis(poll_interval_ms),
                Duration::from_secs(poll_timeout_s),
            )
            .await
        }
        Command::Experiment {
            validation_ms,
            rest_ms,
            counts,
            repetitions,
            out,
        } => {
            let defaults = ExperimentConfig::default();
            let cfg = ExperimentConfig {
                request_counts: if counts.is_empty() {
                    defaults.request_counts
                } else {
                    counts
                },
                validation_delay_ms: validation_ms,
                rest_delay_ms: rest_ms,
                repetitions,
            };
            cmd_experiment(&mut con, &cfg, &out).await
        }
    };
    exit.into()
}
