use std::net::SocketAddr;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use clap::{Parser, Subcommand};
use tfpaas_runcenter::load::{LoadGenerator, DEFAULT_REQUEST_TIMEOUT};
use tfpaas_runcenter::server::{router, DEFAULT_DISPATCH_TIMEOUT};
use tfpaas_runcenter::{RunCenter, DEFAULT_CONCURRENCY_CAP};

#[derive(Parser)]
#[command(name = "tfprun", version, about = "Remote test run center")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Serve POST /execute and GET /status.
    Serve {
        #[arg(long)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        bind: std::net::IpAddr,
        /// Upper bound on one run, in seconds.
        #[arg(long, default_value_t = DEFAULT_DISPATCH_TIMEOUT.as_secs())]
        dispatch_timeout_s: u64,
        /// Per-request timeout against the target, in seconds.
        #[arg(long, default_value_t = DEFAULT_REQUEST_TIMEOUT.as_secs())]
        request_timeout_s: u64,
        /// Highest concurrency an adaptive search may reach.
        #[arg(long, default_value_t = DEFAULT_CONCURRENCY_CAP)]
        max_concurrency: u32,
    },
}

#[tokio::main]
async fn main() -> ExitCode {
    let Command::Serve {
        port,
        bind,
        dispatch_timeout_s,
        request_timeout_s,
        max_concurrency,
    } = Cli::parse().command;
    let center = Arc::new(
        RunCenter::new(LoadGenerator::new(Duration::from_secs(request_timeout_s)))
            .with_concurrency_cap(max_concurrency),
    );
    let app = router(center, Duration::from_secs(dispatch_timeout_s));
    let listener = match tokio::net::TcpListener::bind(SocketAddr::new(bind, port)).await {
        Ok(l) => l,
        Err(e) => {
            eprintln!("tfprun: cannot bind {bind}:{port}: {e}");
            return ExitCode::from(5);
        }
    };
    match listener.local_addr() {
        Ok(addr) => println!("tfprun listening on http://{addr}"),
        Err(e) => eprintln!("tfprun: {e}"),
    }
    let shutdown = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    if let Err(e) = axum::serve(listener, app).with_graceful_shutdown(shutdown).await {
        eprintln!("tfprun: {e}");
        return ExitCode::FAILURE;
    }
    ExitCode::SUCCESS
}
