//! HTTP client for a running service, used by the CLI's `--remote` mode.

use futures::stream::{self, BoxStream};
use futures::StreamExt;
use serde::de::DeserializeOwned;

use crate::app::{QueryEvent, QueryInput};
use crate::document::DocOp;
use crate::domain::{decode_fusion_document, DocumentId, FusionDocument, ModelId, SessionId, TurnId};
use crate::service::{ErrorBody, FuseInput, SessionCreated, DOCUMENT_HEADER, TURN_HEADER};
use crate::sse::{SseDecoder, SseEvent};
use crate::store::{FeedbackInput, HistoryEntry, TurnRecord};

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    #[error("request failed: {0}")]
    Http(#[from] reqwest::Error),
    /// The service answered with an error status.
    #[error("{message} (HTTP {status})")]
    Status { status: u16, message: String },
    #[error("unexpected response: {0}")]
    Decode(String),
}

pub type RemoteEvents = BoxStream<'static, Result<QueryEvent, ClientError>>;

pub struct RemoteClient {
    base: String,
    http: reqwest::Client,
}

fn event_from_sse(ev: SseEvent) -> Result<QueryEvent, ClientError> {
    let name = ev.event.unwrap_or_default();
    let data: serde_json::Value = serde_json::from_str(&ev.data).map_err(|e| ClientError::Decode(e.to_string()))?;
    serde_json::from_value(serde_json::json!({ "event": name, "data": data }))
        .map_err(|e| ClientError::Decode(format!("event {name}: {e}")))
}

impl RemoteClient {
    pub fn new(base: impl Into<String>) -> Self {
        Self {
            base: base.into().trim_end_matches('/').to_owned(),
            http: reqwest::Client::new(),
        }
    }

    fn url(&self, path: &str) -> String {
        format!("{}{path}", self.base)
    }

    async fn checked(resp: reqwest::Response) -> Result<reqwest::Response, ClientError> {
        if resp.status().is_success() {
            return Ok(resp);
        }
        let status = resp.status().as_u16();
        let text = resp.text().await.unwrap_or_default();
        let message = serde_json::from_str::<ErrorBody>(&text).map(|b| b.error).unwrap_or(text);
        Err(ClientError::Status { status, message })
    }

    async fn get_json<T: DeserializeOwned>(&self, path: &str) -> Result<T, ClientError> {
        let resp = Self::checked(self.http.get(self.url(path)).send().await?).await?;
        let bytes = resp.bytes().await?;
        serde_json::from_slice(&bytes).map_err(|e| ClientError::Decode(e.to_string()))
    }

    async fn post(&self, path: &str, body: Vec<u8>) -> Result<reqwest::Response, ClientError> {
        let req = self
            .http
            .post(self.url(path))
            .header(reqwest::header::CONTENT_TYPE, "application/json")
            .body(body);
        Self::checked(req.send().await?).await
    }

    fn header(resp: &reqwest::Response, name: &str) -> Result<String, ClientError> {
        resp.headers()
            .get(name)
            .and_then(|v| v.to_str().ok())
            .map(str::to_owned)
            .ok_or_else(|| ClientError::Decode(format!("missing {name} header")))
    }

    async fn document(resp: reqwest::Response) -> Result<FusionDocument, ClientError> {
        let bytes = resp.bytes().await?;
        decode_fusion_document(&bytes).map_err(|e| ClientError::Decode(e.to_string()))
    }

    fn events(resp: reqwest::Response) -> RemoteEvents {
        let body = resp.bytes_stream().boxed();
        let state = (body, SseDecoder::new(), std::collections::VecDeque::new(), false);
        stream::unfold(state, |(mut body, mut decoder, mut pending, mut ended)| async move {
            loop {
                if let Some(ev) = pending.pop_front() {
                    return Some((event_from_sse(ev), (body, decoder, pending, ended)));
                }
                if ended {
                    return None;
                }
                match body.next().await {
                    Some(Ok(bytes)) => pending.extend(decoder.push(&bytes)),
                    Some(Err(e)) => {
                        ended = true;
                        return Some((Err(ClientError::Http(e)), (body, decoder, pending, ended)));
                    }
                    None => {
                        ended = true;
                        pending.extend(decoder.finish());
                    }
                }
            }
        })
        .boxed()
    }

    pub async fn create_session(&self) -> Result<SessionId, ClientError> {
        let resp = self.post("/sessions", Vec::new()).await?;
        let bytes = resp.bytes().await?;
        let created: SessionCreated = serde_json::from_slice(&bytes).map_err(|e| ClientError::Decode(e.to_string()))?;
        Ok(created.id)
    }

    pub async fn history(&self, session: &SessionId) -> Result<Vec<HistoryEntry>, ClientError> {
        self.get_json(&format!("/sessions/{session}/history")).await
    }

    pub async fn turn(&self, turn: &TurnId) -> Result<TurnRecord, ClientError> {
        self.get_json(&format!("/turns/{turn}")).await
    }

    pub async fn query(&self, session: &SessionId, input: &QueryInput) -> Result<(TurnId, RemoteEvents), ClientError> {
        let body = serde_json::to_vec(input).expect("query body");
        let resp = self.post(&format!("/sessions/{session}/query"), body).await?;
        let turn = TurnId(Self::header(&resp, TURN_HEADER)?);
        Ok((turn, Self::events(resp)))
    }

    pub async fn run(&self, turn: &TurnId, model: &ModelId) -> Result<RemoteEvents, ClientError> {
        Ok(Self::events(self.post(&format!("/turns/{turn}/run/{model}"), Vec::new()).await?))
    }

    pub async fn regenerate(&self, turn: &TurnId, model: &ModelId) -> Result<RemoteEvents, ClientError> {
        Ok(Self::events(self.post(&format!("/turns/{turn}/regenerate/{model}"), Vec::new()).await?))
    }

    pub async fn fuse(&self, turn: &TurnId, models: &[ModelId]) -> Result<(DocumentId, FusionDocument), ClientError> {
        let body = serde_json::to_vec(&FuseInput { models: models.to_vec() }).expect("fuse body");
        let resp = self.post(&format!("/turns/{turn}/fuse"), body).await?;
        let id = DocumentId(Self::header(&resp, DOCUMENT_HEADER)?);
        Ok((id, Self::document(resp).await?))
    }

    pub async fn get_document(&self, doc: &DocumentId) -> Result<FusionDocument, ClientError> {
        let resp = Self::checked(self.http.get(self.url(&format!("/documents/{doc}"))).send().await?).await?;
        Self::document(resp).await
    }

    pub async fn apply_op(&self, doc: &DocumentId, op: &DocOp) -> Result<FusionDocument, ClientError> {
        let resp = self.post(&format!("/documents/{doc}/ops"), serde_json::to_vec(op).expect("op body")).await?;
        Self::document(resp).await
    }

    pub async fn export(&self, doc: &DocumentId) -> Result<String, ClientError> {
        let resp = Self::checked(self.http.get(self.url(&format!("/documents/{doc}/export"))).send().await?).await?;
        Ok(resp.text().await?)
    }

    pub async fn feedback(&self, turn: &TurnId, input: &FeedbackInput) -> Result<(), ClientError> {
        self.post(&format!("/turns/{turn}/feedback"), serde_json::to_vec(input).expect("feedback body"))
            .await?;
        Ok(())
    }
}
