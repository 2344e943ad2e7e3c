//! Blocking client for the service API, and a [`Backend`] trait that lets the
//! simulated user drive either a remote server or an in-process [`Service`].

use reqwest::blocking::{Client, Response};
use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

use crate::grid::Move;
use crate::service::{
    AccountCreated, ApiError, MoveAccepted, Registered, RegistrationRequest, ResourceContent,
    Service, SessionCreated, SessionRequest, SubmitResult,
};

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("{0}")]
    Api(ApiError),
    #[error("transport: {0}")]
    Transport(String),
}

impl From<ApiError> for ClientError {
    fn from(e: ApiError) -> Self {
        Self::Api(e)
    }
}

impl From<reqwest::Error> for ClientError {
    fn from(e: reqwest::Error) -> Self {
        Self::Transport(e.to_string())
    }
}

impl ClientError {
    pub fn api(&self) -> Option<&ApiError> {
        match self {
            Self::Api(e) => Some(e),
            Self::Transport(_) => None,
        }
    }
}

pub trait Backend {
    fn create_account(&self, account_id: Option<String>) -> Result<String, ClientError>;
    fn register(
        &self,
        account_id: &str,
        req: RegistrationRequest,
    ) -> Result<Registered, ClientError>;
    fn start_session(
        &self,
        account_id: &str,
        req: SessionRequest,
    ) -> Result<SessionCreated, ClientError>;
    fn record_move(&self, session_id: &str, m: Move) -> Result<usize, ClientError>;
    fn submit(&self, session_id: &str) -> Result<SubmitResult, ClientError>;
    fn resource(&self, resource_id: &str, session_id: &str)
        -> Result<ResourceContent, ClientError>;
}

impl Backend for Service {
    fn create_account(&self, account_id: Option<String>) -> Result<String, ClientError> {
        Ok(Service::create_account(self, account_id)?)
    }

    fn register(
        &self,
        account_id: &str,
        req: RegistrationRequest,
    ) -> Result<Registered, ClientError> {
        Ok(Service::register(self, account_id, req)?)
    }

    fn start_session(
        &self,
        account_id: &str,
        req: SessionRequest,
    ) -> Result<SessionCreated, ClientError> {
        Ok(Service::start_session(self, account_id, req)?)
    }

    fn record_move(&self, session_id: &str, m: Move) -> Result<usize, ClientError> {
        Ok(Service::record_move(self, session_id, m)?)
    }

    fn submit(&self, session_id: &str) -> Result<SubmitResult, ClientError> {
        Ok(Service::submit(self, session_id)?)
    }

    fn resource(
        &self,
        resource_id: &str,
        session_id: &str,
    ) -> Result<ResourceContent, ClientError> {
        Ok(Service::resource(self, resource_id, Some(session_id))?)
    }
}

pub struct HttpClient {
    base: String,
    http: Client,
}

impl HttpClient {
    pub fn new(base_url: impl Into<String>) -> Self {
        Self {
            base: base_url.into().trim_end_matches('/').to_string(),
            http: Client::new(),
        }
    }

    fn decode<T: DeserializeOwned>(resp: Response) -> Result<T, ClientError> {
        if resp.status().is_success() {
            Ok(resp.json()?)
        } else {
            let status = resp.status();
            let text = resp.text()?;
            Err(serde_json::from_str::<ApiError>(&text)
                .map(ClientError::Api)
                .unwrap_or_else(|_| ClientError::Transport(format!("{status}: {text}"))))
        }
    }

    pub fn post<B: Serialize, T: DeserializeOwned>(
        &self,
        path: &str,
        body: &B,
    ) -> Result<T, ClientError> {
        Self::decode(
            self.http
                .post(format!("{}{path}", self.base))
                .json(body)
                .send()?,
        )
    }

    pub fn get<T: DeserializeOwned>(&self, path: &str) -> Result<T, ClientError> {
        Self::decode(self.http.get(format!("{}{path}", self.base)).send()?)
    }

    /// Raw GET returning the status code and body.
    pub fn get_raw(&self, path: &str) -> Result<(u16, Vec<u8>), ClientError> {
        let resp = self.http.get(format!("{}{path}", self.base)).send()?;
        Ok((resp.status().as_u16(), resp.bytes()?.to_vec()))
    }
}

impl Backend for HttpClient {
    fn create_account(&self, account_id: Option<String>) -> Result<String, ClientError> {
        let created: AccountCreated = self.post(
            "/accounts",
            &serde_json::json!({ "account_id": account_id }),
        )?;
        Ok(created.account_id)
    }

    fn register(
        &self,
        account_id: &str,
        req: RegistrationRequest,
    ) -> Result<Registered, ClientError> {
        self.post(&format!("/accounts/{account_id}/registration"), &req)
    }

    fn start_session(
        &self,
        account_id: &str,
        req: SessionRequest,
    ) -> Result<SessionCreated, ClientError> {
        self.post(&format!("/accounts/{account_id}/sessions"), &req)
    }

    fn record_move(&self, session_id: &str, m: Move) -> Result<usize, ClientError> {
        let r: MoveAccepted = self.post(&format!("/sessions/{session_id}/moves"), &m)?;
        Ok(r.transcript_len)
    }

    fn submit(&self, session_id: &str) -> Result<SubmitResult, ClientError> {
        self.post(
            &format!("/sessions/{session_id}/submit"),
            &serde_json::json!({}),
        )
    }

    fn resource(
        &self,
        resource_id: &str,
        session_id: &str,
    ) -> Result<ResourceContent, ClientError> {
        self.get(&format!("/resources/{resource_id}?session={session_id}"))
    }
}
