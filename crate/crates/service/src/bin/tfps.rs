use std::net::{IpAddr, Ipv4Addr, SocketAddr};
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use clap::{Parser, Subcommand};
use tfpaas_service::{router, Dispatcher, Service, ServiceConfig};

#[derive(Parser)]
#[command(name = "tfps", version, about = "Test-first performance testing service")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Serve POST /tfps and GET /results/{task_id}[.xml].
    Serve {
        #[arg(long)]
        port: u16,
        #[arg(long)]
        data_dir: PathBuf,
        /// Remote run center; runs in-process when omitted.
        #[arg(long)]
        runcenter_url: Option<String>,
        #[arg(long, default_value = "127.0.0.1")]
        bind: IpAddr,
        /// Prefix for detail URLs; defaults to the listening address.
        #[arg(long)]
        public_url: Option<String>,
        /// Timeout of a synchronous critical run, in seconds.
        #[arg(long, default_value_t = 120)]
        critical_timeout_s: u64,
    },
}

#[tokio::main]
async fn main() -> ExitCode {
    let Command::Serve {
        port,
        data_dir,
        runcenter_url,
        bind,
        public_url,
        critical_timeout_s,
    } = Cli::parse().command;
    let listener = match tokio::net::TcpListener::bind(SocketAddr::new(bind, port)).await {
        Ok(l) => l,
        Err(e) => {
            eprintln!("tfps: cannot bind {bind}:{port}: {e}");
            return ExitCode::from(5);
        }
    };
    let local = match listener.local_addr() {
        Ok(a) => a,
        Err(e) => {
            eprintln!("tfps: {e}");
            return ExitCode::from(5);
        }
    };
    let advertised = if local.ip().is_unspecified() {
        SocketAddr::new(IpAddr::V4(Ipv4Addr::LOCALHOST), local.port())
    } else {
        local
    };
    let base_url = public_url.unwrap_or_else(|| format!("http://{advertised}"));
    let dispatcher = match &runcenter_url {
        Some(url) => Dispatcher::remote(url.clone()),
        None => Dispatcher::embedded(),
    };
    let mut config = ServiceConfig::new(&data_dir, base_url.clone());
    config.critical_timeout = Duration::from_secs(critical_timeout_s);
    let (service, scan) = match Service::open(config, dispatcher) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("tfps: cannot open store {}: {e}", data_dir.display());
            return ExitCode::from(5);
        }
    };
    for skipped in &scan.skipped {
        eprintln!("tfps: skipped {skipped}");
    }
    println!(
        "tfps listening on {base_url} (data {}, {} stored task(s), run center {})",
        data_dir.display(),
        scan.loaded,
        runcenter_url.as_deref().unwrap_or("embedded")
    );
    let shutdown = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    if let Err(e) = axum::serve(listener, router(Arc::new(service)))
        .with_graceful_shutdown(shutdown)
        .await
    {
        eprintln!("tfps: {e}");
        return ExitCode::FAILURE;
    }
    ExitCode::SUCCESS
}
