//! Uniform access to the chat and embedding providers.
//!
//! The live backend speaks the OpenAI-compatible `/chat/completions` and
//! `/embeddings` contract. In replay mode every call is answered from the
//! [`FixtureStore`]; in record mode live answers are written to it before
//! being returned.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::json;
use transpec_core::Embedding;

use crate::config::{Config, Mode};
use crate::fixtures::{fixture_key, FixtureEntry, FixtureError, FixtureKind, FixtureOutput, FixtureStore};

const INPUT_PREFIX_CHARS: usize = 60;

#[derive(Debug, thiserror::Error)]
pub enum ProviderError {
    #[error("network error: {0}")]
    Network(String),
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("provider returned HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("invalid provider response: {0}")]
    InvalidResponse(String),
    #[error("no {kind} fixture for key {key} (input starts {input_prefix:?})")]
    FixtureMiss { kind: FixtureKind, key: String, input_prefix: String },
    #[error(transparent)]
    Fixture(#[from] FixtureError),
    #[error("{0}")]
    Precondition(String),
}

impl ProviderError {
    pub fn code(&self) -> &'static str {
        match self {
            Self::Network(_) => "provider.network",
            Self::Auth(_) => "provider.auth",
            Self::Http { .. } => "provider.http",
            Self::InvalidResponse(_) => "provider.invalid_response",
            Self::FixtureMiss { .. } => "provider.fixture_miss",
            Self::Fixture(_) => "provider.fixture_store",
            Self::Precondition(_) => "provider.precondition",
        }
    }
}

/// One chat-completion call.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRequest {
    pub prompt: String,
    pub model_id: String,
    pub temperature: f64,
    pub max_tokens: u32,
    /// Sample number for repeated calls with the same prompt. Samples after
    /// the first get their own fixture key; the prompt sent is unchanged.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample: Option<u32>,
}

impl GenerationRequest {
    pub fn new(prompt: impl Into<String>, config: &Config) -> Self {
        Self {
            prompt: prompt.into(),
            model_id: config.chat_model.clone(),
            temperature: config.temperature,
            max_tokens: config.max_tokens,
            sample: None,
        }
    }

    /// The text the fixture key is computed over.
    pub fn fixture_input(&self) -> String {
        match self.sample {
            Some(k) if k > 1 => format!("{}\n\u{0}sample={k}", self.prompt),
            _ => self.prompt.clone(),
        }
    }
}

fn prefix(text: &str) -> String {
    text.chars().take(INPUT_PREFIX_CHARS).collect()
}

/// OpenAI-compatible HTTP client.
#[derive(Debug, Clone)]
pub struct LiveClient {
    http: reqwest::Client,
    chat_base_url: String,
    embed_base_url: String,
    api_key: String,
    max_retries: u32,
}

impl LiveClient {
    pub fn new(config: &Config) -> Result<Self, ProviderError> {
        let api_key = config
            .api_key
            .clone()
            .ok_or_else(|| ProviderError::Auth("no API key set (TRANSPEC_API_KEY or OPENAI_API_KEY)".into()))?;
        let http = reqwest::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| ProviderError::Network(e.to_string()))?;
        Ok(Self {
            http,
            chat_base_url: config.chat_base_url.trim_end_matches('/').to_owned(),
            embed_base_url: config.embed_base_url.trim_end_matches('/').to_owned(),
            api_key,
            max_retries: config.max_retries,
        })
    }

    async fn post(&self, url: &str, body: &serde_json::Value) -> Result<serde_json::Value, ProviderError> {
        let mut attempt = 0;
        loop {
            let response = self
                .http
                .post(url)
                .bearer_auth(&self.api_key)
                .json(body)
                .send()
                .await
                .map_err(|e| ProviderError::Network(e.to_string()))?;
            let status = response.status();
            if status.is_success() {
                return response.json().await.map_err(|e| ProviderError::InvalidResponse(e.to_string()));
            }
            let text = response.text().await.unwrap_or_default();
            match status.as_u16() {
                401 | 403 => return Err(ProviderError::Auth(format!("HTTP {status}: {text}"))),
                429 | 500..=599 if attempt < self.max_retries => {
                    attempt += 1;
                    tokio::time::sleep(Duration::from_millis(250 << attempt)).await;
                }
                code => return Err(ProviderError::Http { status: code, body: text }),
            }
        }
    }

    pub async fn chat(&self, request: &GenerationRequest) -> Result<String, ProviderError> {
        let body = json!({
            "model": request.model_id,
            "messages": [{"role": "user", "content": request.prompt}],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        });
        let value = self.post(&format!("{}/chat/completions", self.chat_base_url), &body).await?;
        value
            .pointer("/choices/0/message/content")
            .and_then(|c| c.as_str())
            .map(str::to_owned)
            .ok_or_else(|| ProviderError::InvalidResponse("missing choices[0].message.content".into()))
    }

    pub async fn embed(&self, text: &str, model_id: &str) -> Result<Vec<f64>, ProviderError> {
        let body = json!({"model": model_id, "input": text});
        let value = self.post(&format!("{}/embeddings", self.embed_base_url), &body).await?;
        let raw = value
            .pointer("/data/0/embedding")
            .and_then(|e| e.as_array())
            .ok_or_else(|| ProviderError::InvalidResponse("missing data[0].embedding".into()))?;
        raw.iter()
            .map(|v| v.as_f64().ok_or_else(|| ProviderError::InvalidResponse("non-numeric embedding component".into())))
            .collect()
    }
}

/// Routes calls to the live provider and/or the fixture store by mode.
#[derive(Debug, Clone)]
pub struct Gateway {
    mode: Mode,
    store: FixtureStore,
    live: Option<LiveClient>,
}

impl Gateway {
    pub fn new(config: &Config) -> Result<Self, ProviderError> {
        let live = match config.mode {
            Mode::Replay => None,
            Mode::Live | Mode::Record => Some(LiveClient::new(config)?),
        };
        Ok(Self { mode: config.mode, store: FixtureStore::new(&config.fixtures_dir), live })
    }

    /// Replay-only gateway over a fixture directory.
    pub fn replay(store: FixtureStore) -> Self {
        Self { mode: Mode::Replay, store, live: None }
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn store(&self) -> &FixtureStore {
        &self.store
    }

    fn live(&self) -> Result<&LiveClient, ProviderError> {
        self.live.as_ref().ok_or_else(|| ProviderError::Precondition(format!("no live backend in {} mode", self.mode)))
    }

    fn lookup(&self, kind: FixtureKind, model_id: &str, input: &str) -> Result<FixtureOutput, ProviderError> {
        match self.store.get(kind, model_id, input)? {
            Some(entry) => Ok(entry.output),
            None => Err(ProviderError::FixtureMiss {
                kind,
                key: fixture_key(kind, model_id, input),
                input_prefix: prefix(input),
            }),
        }
    }

    pub async fn generate(&self, request: &GenerationRequest) -> Result<String, ProviderError> {
        if request.prompt.trim().is_empty() {
            return Err(ProviderError::Precondition("prompt must not be empty".into()));
        }
        let input = request.fixture_input();
        match self.mode {
            Mode::Replay => match self.lookup(FixtureKind::Chat, &request.model_id, &input)? {
                FixtureOutput::Text(text) => Ok(text),
                FixtureOutput::Vector(_) => Err(ProviderError::InvalidResponse("chat fixture holds a vector".into())),
            },
            Mode::Live => self.live()?.chat(request).await,
            Mode::Record => {
                let text = self.live()?.chat(request).await?;
                self.store.put(&FixtureEntry::new(
                    FixtureKind::Chat,
                    &request.model_id,
                    &input,
                    FixtureOutput::Text(text.clone()),
                ))?;
                Ok(text)
            }
        }
    }

    pub async fn embed(&self, text: &str, model_id: &str) -> Result<Embedding, ProviderError> {
        if text.trim().is_empty() {
            return Err(ProviderError::Precondition("embedding input must not be empty".into()));
        }
        let values = match self.mode {
            Mode::Replay => match self.lookup(FixtureKind::Embed, model_id, text)? {
                FixtureOutput::Vector(v) => v,
                FixtureOutput::Text(_) => {
                    return Err(ProviderError::InvalidResponse("embedding fixture holds text".into()))
                }
            },
            Mode::Live => self.live()?.embed(text, model_id).await?,
            Mode::Record => {
                let values = self.live()?.embed(text, model_id).await?;
                if !values.is_empty() {
                    self.store.put(&FixtureEntry::new(
                        FixtureKind::Embed,
                        model_id,
                        text,
                        FixtureOutput::Vector(values.clone()),
                    ))?;
                }
                values
            }
        };
        if values.is_empty() {
            return Err(ProviderError::InvalidResponse("embedding has dimension zero".into()));
        }
        Embedding::new(values, model_id).map_err(|e| ProviderError::InvalidResponse(e.to_string()))
    }
}
