//! Chat-completion adapter for OpenAI-compatible endpoints with streamed
//! server-sent events.

use async_trait::async_trait;
use futures::stream::{self, StreamExt};
use serde_json::{json, Value};

use super::{ChunkStream, Provider, ProviderError, UpstreamPrompt};
use crate::sse::{SseDecoder, SseEvent};

pub struct OpenAiCompatible {
    client: reqwest::Client,
    endpoint: String,
    upstream_model: String,
    auth_env: Option<String>,
}

impl OpenAiCompatible {
    pub fn new(endpoint: String, upstream_model: String, auth_env: Option<String>) -> Self {
        Self {
            client: reqwest::Client::new(),
            endpoint,
            upstream_model,
            auth_env,
        }
    }
}

/// Extracts the content delta of one streamed chat-completion event.
/// Returns `Ok(None)` for the terminal `[DONE]` marker.
pub fn parse_delta(data: &str) -> Result<Option<String>, ProviderError> {
    if data.trim() == "[DONE]" {
        return Ok(None);
    }
    let value: Value = serde_json::from_str(data)
        .map_err(|e| ProviderError::Protocol(format!("bad event payload: {e}")))?;
    if let Some(err) = value.get("error") {
        return Err(ProviderError::Upstream(err.to_string()));
    }
    let text = value
        .pointer("/choices/0/delta/content")
        .and_then(Value::as_str)
        .unwrap_or("");
    Ok(Some(text.to_owned()))
}

struct State {
    body: futures::stream::BoxStream<'static, reqwest::Result<bytes::Bytes>>,
    decoder: SseDecoder,
    pending: std::collections::VecDeque<SseEvent>,
    done: bool,
}

#[async_trait]
impl Provider for OpenAiCompatible {
    async fn stream(&self, prompt: &UpstreamPrompt) -> Result<ChunkStream, ProviderError> {
        let body = json!({
            "model": self.upstream_model,
            "messages": [{"role": "user", "content": prompt.text}],
            "temperature": prompt.temperature,
            "stream": true,
        });
        let mut request = self.client.post(&self.endpoint).json(&body);
        if let Some(var) = &self.auth_env {
            let key = std::env::var(var)
                .map_err(|_| ProviderError::Config(format!("environment variable {var} not set")))?;
            request = request.bearer_auth(key);
        }
        let response = request
            .send()
            .await
            .map_err(|e| ProviderError::Transport(e.to_string()))?;
        let status = response.status();
        if !status.is_success() {
            let text = response.text().await.unwrap_or_default();
            return Err(ProviderError::Upstream(format!("HTTP {status}: {text}")));
        }
        let state = State {
            body: response.bytes_stream().boxed(),
            decoder: SseDecoder::new(),
            pending: Default::default(),
            done: false,
        };
        let chunks = stream::unfold(state, |mut st| async move {
            loop {
                if st.done {
                    return None;
                }
                if let Some(ev) = st.pending.pop_front() {
                    match parse_delta(&ev.data) {
                        Ok(Some(text)) if text.is_empty() => continue,
                        Ok(Some(text)) => return Some((Ok(text), st)),
                        Ok(None) => return None,
                        Err(e) => {
                            st.done = true;
                            return Some((Err(e), st));
                        }
                    }
                }
                match st.body.next().await {
                    Some(Ok(bytes)) => {
                        let events = st.decoder.push(&bytes);
                        st.pending.extend(events);
                    }
                    Some(Err(e)) => {
                        st.done = true;
                        return Some((Err(ProviderError::Transport(e.to_string())), st));
                    }
                    None => match st.decoder.finish() {
                        Some(ev) => st.pending.push_back(ev),
                        None => return None,
                    },
                }
            }
        });
        Ok(chunks.boxed())
    }
}
