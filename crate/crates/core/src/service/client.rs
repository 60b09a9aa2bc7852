//! Controller-side access to a [`RicService`], in process or over HTTP.

use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::{ActionAck, RicService, ServiceError};
use crate::sim::{Action, CellReport, UeNeighbourReport, UeServingReport};

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("request rejected ({status}): {message}")]
    Rejected { status: u16, message: String },
    #[error("malformed response: {0}")]
    Decode(String),
}

/// The raw, possibly corrupted, report rows of one collection round.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawKpms {
    pub cells: Vec<CellReport>,
    pub serving: Vec<UeServingReport>,
    pub neighbours: Vec<UeNeighbourReport>,
}

pub trait RicClient {
    fn cells(&mut self) -> Result<Vec<CellReport>, ClientError>;
    fn ue_serving(&mut self) -> Result<Vec<UeServingReport>, ClientError>;
    fn ue_neighbours(&mut self) -> Result<Vec<UeNeighbourReport>, ClientError>;
    fn post_action(&mut self, cell_id: &str, action: Action) -> Result<ActionAck, ClientError>;

    fn fetch(&mut self) -> Result<RawKpms, ClientError> {
        Ok(RawKpms {
            cells: self.cells()?,
            serving: self.ue_serving()?,
            neighbours: self.ue_neighbours()?,
        })
    }
}

/// Calls the service directly; used for lockstep campaigns.
#[derive(Clone)]
pub struct InProcessClient {
    service: RicService,
}

impl InProcessClient {
    pub fn new(service: RicService) -> Self {
        Self { service }
    }
}

fn from_service(e: ServiceError) -> ClientError {
    let status = super::http::status_of(&e);
    ClientError::Rejected {
        status,
        message: e.to_string(),
    }
}

impl RicClient for InProcessClient {
    fn cells(&mut self) -> Result<Vec<CellReport>, ClientError> {
        self.service.cells(None).map_err(from_service)
    }

    fn ue_serving(&mut self) -> Result<Vec<UeServingReport>, ClientError> {
        self.service.ue_serving(None).map_err(from_service)
    }

    fn ue_neighbours(&mut self) -> Result<Vec<UeNeighbourReport>, ClientError> {
        self.service.ue_neighbours(None).map_err(from_service)
    }

    fn post_action(&mut self, cell_id: &str, action: Action) -> Result<ActionAck, ClientError> {
        self.service.post_action(cell_id, action).map_err(from_service)
    }
}

/// Talks to the HTTP surface served by [`super::http::router`].
pub struct HttpRicClient {
    base: String,
    agent: ureq::Agent,
}

impl HttpRicClient {
    pub fn new(base_url: &str, timeout: Duration) -> Self {
        let config = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(timeout))
            .build();
        Self {
            base: base_url.trim_end_matches('/').to_string(),
            agent: config.into(),
        }
    }

    fn read<T: DeserializeOwned>(mut resp: ureq::http::Response<ureq::Body>) -> Result<T, ClientError> {
        let status = resp.status().as_u16();
        let body = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| ClientError::Transport(e.to_string()))?;
        if !(200..300).contains(&status) {
            return Err(ClientError::Rejected { status, message: body });
        }
        serde_json::from_str(&body).map_err(|e| ClientError::Decode(e.to_string()))
    }

    pub fn get<T: DeserializeOwned>(&self, path: &str) -> Result<T, ClientError> {
        let resp = self
            .agent
            .get(&format!("{}{path}", self.base))
            .call()
            .map_err(|e| ClientError::Transport(e.to_string()))?;
        Self::read(resp)
    }

    pub fn post<B: Serialize, T: DeserializeOwned>(&self, path: &str, body: &B) -> Result<T, ClientError> {
        let text = serde_json::to_string(body).map_err(|e| ClientError::Decode(e.to_string()))?;
        let resp = self
            .agent
            .post(&format!("{}{path}", self.base))
            .header("content-type", "application/json")
            .send(text)
            .map_err(|e| ClientError::Transport(e.to_string()))?;
        Self::read(resp)
    }
}

impl RicClient for HttpRicClient {
    fn cells(&mut self) -> Result<Vec<CellReport>, ClientError> {
        self.get("/kpm/cells")
    }

    fn ue_serving(&mut self) -> Result<Vec<UeServingReport>, ClientError> {
        self.get("/kpm/ue-serving")
    }

    fn ue_neighbours(&mut self) -> Result<Vec<UeNeighbourReport>, ClientError> {
        self.get("/kpm/ue-neighbours")
    }

    fn post_action(&mut self, cell_id: &str, action: Action) -> Result<ActionAck, ClientError> {
        self.post(
            "/action",
            &serde_json::json!({ "cell_id": cell_id, "action": action }),
        )
    }
}
