//! Test run center: executes instruction sets by generating HTTP load and
//! runs the adaptive master-suite search.
//!
//! The service embeds a [`RunCenter`] in-process or talks to a remote one
//! through [`server::router`] (`POST /execute`, `GET /status`).

pub mod adaptive;
pub mod load;
pub mod server;

use std::sync::atomic::{AtomicBool, Ordering};
use std::time::Duration;

use tfpaas_core::model::AdaptiveOutcome;
use tfpaas_core::protocol::{InstructionSet, RunReport};
use tokio::sync::Mutex;

pub use adaptive::{
    adaptive_master, ensure_complete, replay_schedule, Probe, SyntheticProbe, UNCAPPED,
};
pub use load::LoadGenerator;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RunError {
    #[error("E_TARGET_UNRESOLVABLE: {url}: {reason}")]
    TargetUnresolvable { url: String, reason: String },
    #[error("E_ITERATION_BUDGET: search stopped after {} iterations", .0.traces.len())]
    IterationBudget(Box<AdaptiveOutcome>),
    #[error("E_DISPATCH_TIMEOUT: run exceeded {0:?}")]
    Timeout(Duration),
    #[error("E_INVALID_INSTRUCTIONS: {0}")]
    Invalid(String),
    #[error("E_INTERNAL: {0}")]
    Internal(String),
}

impl RunError {
    pub fn code(&self) -> &'static str {
        match self {
            RunError::TargetUnresolvable { .. } => "E_TARGET_UNRESOLVABLE",
            RunError::IterationBudget(_) => "E_ITERATION_BUDGET",
            RunError::Timeout(_) => "E_DISPATCH_TIMEOUT",
            RunError::Invalid(_) => "E_INVALID_INSTRUCTIONS",
            RunError::Internal(_) => "E_INTERNAL",
        }
    }
}

/// Highest concurrency the adaptive search will try by default. Keeps a
/// never-degrading target from ramping into the local file-descriptor limit.
pub const DEFAULT_CONCURRENCY_CAP: u32 = 1024;

/// Executes one instruction set at a time; later callers queue.
#[derive(Debug)]
pub struct RunCenter {
    generator: LoadGenerator,
    concurrency_cap: u32,
    gate: Mutex<()>,
    busy: AtomicBool,
}

impl Default for RunCenter {
    fn default() -> Self {
        RunCenter::new(LoadGenerator::default())
    }
}

impl RunCenter {
    pub fn new(generator: LoadGenerator) -> Self {
        RunCenter {
            generator,
            concurrency_cap: DEFAULT_CONCURRENCY_CAP,
            gate: Mutex::new(()),
            busy: AtomicBool::new(false),
        }
    }

    pub fn with_concurrency_cap(mut self, cap: u32) -> Self {
        self.concurrency_cap = cap.max(1);
        self
    }

    pub fn is_busy(&self) -> bool {
        self.busy.load(Ordering::SeqCst)
    }

    /// Critical instruction sets yield a measurement, master ones an adaptive
    /// outcome. An unconverged search is still returned, flagged incomplete.
    pub async fn run(&self, i: &InstructionSet) -> Result<RunReport, RunError> {
        i.validate().map_err(|e| RunError::Invalid(e.to_string()))?;
        let _turn = self.gate.lock().await;
        self.busy.store(true, Ordering::SeqCst);
        let result = match &i.adaptive {
            None => self
                .generator
                .execute(&i.case, &i.profile)
                .await
                .map(RunReport::Measurement),
            Some(params) => {
                let mut probe = adaptive::HttpProbe {
                    generator: &self.generator,
                    case: &i.case,
                };
                adaptive_master(&mut probe, &i.criteria, params, self.concurrency_cap)
                    .await
                    .map(RunReport::Outcome)
            }
        };
        self.busy.store(false, Ordering::SeqCst);
        result
    }

    /// [`RunCenter::run`] bounded by `limit`.
    pub async fn run_with_timeout(&self, i: &InstructionSet, limit: Duration) -> Result<RunReport, RunError> {
        tokio::time::timeout(limit, self.run(i))
            .await
            .map_err(|_| RunError::Timeout(limit))?
    }
}
