//! Hands instruction sets to a run center, in-process or over HTTP.

use std::sync::Arc;
use std::time::Duration;

use tfpaas_core::protocol::{decode_run_report, encode_instructions, InstructionSet, RunReport};
use tfpaas_runcenter::{RunCenter, RunError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DispatchError {
    #[error(transparent)]
    Run(#[from] RunError),
    #[error("E_DISPATCH: {0}")]
    Remote(String),
    #[error("E_DISPATCH_TIMEOUT: no reply within {0:?}")]
    Timeout(Duration),
}

pub enum Dispatcher {
    Embedded(Arc<RunCenter>),
    Remote { client: reqwest::Client, base_url: String },
}

impl Dispatcher {
    pub fn embedded() -> Self {
        Dispatcher::Embedded(Arc::new(RunCenter::default()))
    }

    pub fn remote(base_url: impl Into<String>) -> Self {
        let client = reqwest::Client::builder()
            .no_proxy()
            .build()
            .expect("HTTP client configuration is static");
        Dispatcher::Remote {
            client,
            base_url: base_url.into().trim_end_matches('/').to_string(),
        }
    }

    pub async fn dispatch(&self, i: &InstructionSet, limit: Duration) -> Result<RunReport, DispatchError> {
        match self {
            Dispatcher::Embedded(center) => center.run_with_timeout(i, limit).await.map_err(|e| match e {
                RunError::Timeout(d) => DispatchError::Timeout(d),
                other => DispatchError::Run(other),
            }),
            Dispatcher::Remote { client, base_url } => {
                let body = encode_instructions(i).map_err(|e| DispatchError::Remote(e.to_string()))?;
                let resp = client
                    .post(format!("{base_url}/execute"))
                    .header("content-type", tfpaas_core::protocol::XML_CONTENT_TYPE)
                    .body(body)
                    .timeout(limit)
                    .send()
                    .await
                    .map_err(|e| {
                        if e.is_timeout() {
                            DispatchError::Timeout(limit)
                        } else {
                            DispatchError::Remote(format!("run center unreachable: {e}"))
                        }
                    })?;
                let status = resp.status();
                let text = resp
                    .text()
                    .await
                    .map_err(|e| DispatchError::Remote(e.to_string()))?;
                if !status.is_success() {
                    return Err(if status == reqwest::StatusCode::GATEWAY_TIMEOUT {
                        DispatchError::Timeout(limit)
                    } else {
                        DispatchError::Remote(format!("run center replied {status}: {text}"))
                    });
                }
                decode_run_report(&text)
                    .map(|d| d.value)
                    .map_err(|e| DispatchError::Remote(format!("bad run center reply: {e}")))
            }
        }
    }
}
