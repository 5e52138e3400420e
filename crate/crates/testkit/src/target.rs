//! A local HTTP target with scripted latency, status and body size.
//!
//! The server runs on its own thread and runtime, so it can be used from
//! synchronous tests and from inside other runtimes alike.

use std::net::{SocketAddr, TcpListener};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::thread;
use std::time::Duration;

use axum::body::Body;
use axum::extract::State;
use axum::http::{Response, StatusCode};
use axum::Router;
use tokio::sync::oneshot;

#[derive(Debug, Clone)]
pub struct TargetBehavior {
    pub delay: Duration,
    /// Extra delay per request in flight, including the current one.
    pub delay_per_in_flight: Duration,
    pub status: u16,
    pub body_bytes: usize,
}

impl TargetBehavior {
    pub fn fixed(delay_ms: u64) -> Self {
        TargetBehavior {
            delay: Duration::from_millis(delay_ms),
            delay_per_in_flight: Duration::ZERO,
            status: 200,
            body_bytes: 64,
        }
    }

    pub fn status(mut self, status: u16) -> Self {
        self.status = status;
        self
    }

    pub fn body_bytes(mut self, n: usize) -> Self {
        self.body_bytes = n;
        self
    }

    pub fn per_in_flight(mut self, d: Duration) -> Self {
        self.delay_per_in_flight = d;
        self
    }
}

#[derive(Default)]
struct Counters {
    requests: AtomicU64,
    in_flight: AtomicU64,
    max_in_flight: AtomicU64,
    body_bytes_received: AtomicU64,
}

struct Shared {
    behavior: TargetBehavior,
    counters: Counters,
}

pub struct MockTarget {
    addr: SocketAddr,
    shared: Arc<Shared>,
    shutdown: Option<oneshot::Sender<()>>,
    thread: Option<thread::JoinHandle<()>>,
}

impl MockTarget {
    pub fn spawn(behavior: TargetBehavior) -> MockTarget {
        let listener = TcpListener::bind("127.0.0.1:0").expect("bind mock target");
        listener.set_nonblocking(true).expect("nonblocking listener");
        let addr = listener.local_addr().expect("local addr");
        let shared = Arc::new(Shared {
            behavior,
            counters: Counters::default(),
        });
        let (tx, rx) = oneshot::channel::<()>();
        let state = shared.clone();
        let thread = thread::spawn(move || {
            let rt = tokio::runtime::Builder::new_multi_thread()
                .worker_threads(4)
                .enable_all()
                .build()
                .expect("mock target runtime");
            rt.block_on(async move {
                let listener = tokio::net::TcpListener::from_std(listener).expect("tokio listener");
                let app = Router::new().fallback(handle).with_state(state);
                axum::serve(listener, app)
                    .with_graceful_shutdown(async {
                        let _ = rx.await;
                    })
                    .await
                    .expect("mock target serve");
            });
        });
        MockTarget {
            addr,
            shared,
            shutdown: Some(tx),
            thread: Some(thread),
        }
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    /// Base URL with a trailing path, e.g. `http://127.0.0.1:4242/svc`.
    pub fn url(&self, path: &str) -> String {
        format!("http://{}/{}", self.addr, path.trim_start_matches('/'))
    }

    pub fn requests(&self) -> u64 {
        self.shared.counters.requests.load(Ordering::SeqCst)
    }

    pub fn max_in_flight(&self) -> u64 {
        self.shared.counters.max_in_flight.load(Ordering::SeqCst)
    }

    pub fn body_bytes_received(&self) -> u64 {
        self.shared.counters.body_bytes_received.load(Ordering::SeqCst)
    }
}

impl Drop for MockTarget {
    fn drop(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

async fn handle(State(shared): State<Arc<Shared>>, body: axum::body::Bytes) -> Response<Body> {
    let c = &shared.counters;
    c.requests.fetch_add(1, Ordering::SeqCst);
    c.body_bytes_received
        .fetch_add(body.len() as u64, Ordering::SeqCst);
    let now = c.in_flight.fetch_add(1, Ordering::SeqCst) + 1;
    c.max_in_flight.fetch_max(now, Ordering::SeqCst);
    let b = &shared.behavior;
    let delay = b.delay + b.delay_per_in_flight * now as u32;
    tokio::time::sleep(delay).await;
    c.in_flight.fetch_sub(1, Ordering::SeqCst);
    Response::builder()
        .status(StatusCode::from_u16(b.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR))
        .body(Body::from(vec![b'x'; b.body_bytes]))
        .expect("response")
}
