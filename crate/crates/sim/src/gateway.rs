use std::time::Duration;

use sensorloop_core::protocol::{
    CommandAck, FailureReport, GatewayRegistration, IngestAck, Measurement, SlotNotice,
};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("dashboard unreachable at {url}: {message}")]
    Transport { url: String, message: String },
    #[error("dashboard refused {what} ({status}): {message}")]
    Rejected { what: String, status: u16, message: String },
}

/// The gateway's uplink: forwards node traffic to the dashboard over HTTP,
/// one request at a time.
pub struct Gateway {
    base_url: String,
    agent: ureq::Agent,
}

impl Gateway {
    pub fn new(base_url: &str) -> Self {
        let agent = ureq::AgentBuilder::new()
            .timeout_connect(Duration::from_secs(2))
            .timeout(Duration::from_secs(30))
            .build();
        Self { base_url: base_url.trim_end_matches('/').to_string(), agent }
    }

    fn post<B: serde::Serialize, R: serde::de::DeserializeOwned>(&self, path: &str, body: &B) -> Result<R, GatewayError> {
        let url = format!("{}{path}", self.base_url);
        let body = serde_json::to_value(body).expect("protocol types serialize");
        match self.agent.post(&url).send_json(body) {
            Ok(resp) => resp.into_json().map_err(|e| GatewayError::Transport { url, message: e.to_string() }),
            Err(ureq::Error::Status(status, resp)) => Err(GatewayError::Rejected {
                what: format!("POST {path}"),
                status,
                message: resp.into_string().unwrap_or_default(),
            }),
            Err(e) => Err(GatewayError::Transport { url, message: e.to_string() }),
        }
    }

    pub fn register(&self, registration: &GatewayRegistration) -> Result<(), GatewayError> {
        self.post::<_, serde_json::Value>("/gateways", registration).map(drop)
    }

    pub fn forward(&self, m: &Measurement) -> Result<IngestAck, GatewayError> {
        self.post("/measurements", m)
    }

    /// Tells the dashboard a DPS node stayed silent at this tick.
    pub fn slot(&self, notice: &SlotNotice) -> Result<IngestAck, GatewayError> {
        self.post("/slots", notice)
    }

    pub fn acknowledge(&self, command_id: u64, ack: &CommandAck) -> Result<(), GatewayError> {
        self.post::<_, serde_json::Value>(&format!("/reconfig/{command_id}/ack"), ack).map(drop)
    }

    pub fn report_failure(&self, report: &FailureReport) -> Result<(), GatewayError> {
        self.post::<_, serde_json::Value>("/failures", report).map(drop)
    }
}
