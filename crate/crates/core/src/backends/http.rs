//! JSON-over-HTTP backend clients.
//!
//! `POST <endpoint>/translate` with `{"texts": [...], "source": "en",
//! "target": "de"}` answers `{"translations": [...]}`; `POST
//! <endpoint>/fill_mask` with `{"text": "...", "top_k": 3}` answers
//! `{"candidates": [["word", score], ...]}`. Transport errors and 5xx
//! responses are retried with exponential backoff; other statuses fail
//! immediately.

use std::time::Duration;

use serde::Deserialize;
use serde_json::json;

use super::{
    finalize_candidates, validate_single_mask, BackendError, MaskedLmBackend, Semaphore,
    TranslationBackend,
};

/// Connection settings shared by both HTTP backends.
#[derive(Debug, Clone)]
pub struct HttpBackendConfig {
    pub endpoint: String,
    /// Texts per translate request; longer batches are split.
    pub max_batch: usize,
    /// Concurrent in-flight requests.
    pub max_in_flight: usize,
    /// Sleep before each retry; its length is the retry count.
    pub backoff: Vec<Duration>,
    pub timeout: Duration,
}

impl HttpBackendConfig {
    pub fn new(endpoint: impl Into<String>) -> HttpBackendConfig {
        HttpBackendConfig {
            endpoint: endpoint.into(),
            max_batch: 32,
            max_in_flight: 4,
            backoff: vec![
                Duration::from_millis(500),
                Duration::from_secs(1),
                Duration::from_secs(2),
            ],
            timeout: Duration::from_secs(30),
        }
    }
}

struct HttpClient {
    config: HttpBackendConfig,
    agent: ureq::Agent,
    gate: Semaphore,
}

impl HttpClient {
    fn new(config: HttpBackendConfig) -> HttpClient {
        let agent_config = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(config.timeout))
            .build();
        HttpClient {
            gate: Semaphore::new(config.max_in_flight),
            agent: ureq::Agent::new_with_config(agent_config),
            config,
        }
    }

    fn post_json(&self, path: &str, body: &serde_json::Value) -> Result<serde_json::Value, BackendError> {
        let url = format!("{}/{}", self.config.endpoint.trim_end_matches('/'), path);
        let mut attempts = 0;
        loop {
            attempts += 1;
            let outcome = {
                let _permit = self.gate.acquire();
                self.agent.post(&url).send_json(body)
            };
            let retry_after = |attempts: usize| self.config.backoff.get(attempts - 1).copied();
            match outcome {
                Ok(mut response) => {
                    let status = response.status().as_u16();
                    if (200..300).contains(&status) {
                        return response.body_mut().read_json().map_err(|e| {
                            BackendError::Protocol(format!("invalid JSON response: {e}"))
                        });
                    }
                    if status >= 500 {
                        if let Some(pause) = retry_after(attempts) {
                            std::thread::sleep(pause);
                            continue;
                        }
                    }
                    return Err(BackendError::Http { status, attempts });
                }
                Err(error) => {
                    if let Some(pause) = retry_after(attempts) {
                        std::thread::sleep(pause);
                        continue;
                    }
                    return Err(BackendError::Transport {
                        attempts,
                        message: error.to_string(),
                    });
                }
            }
        }
    }
}

/// Translation client for the `/translate` wire protocol.
pub struct HttpTranslationBackend {
    client: HttpClient,
}

impl HttpTranslationBackend {
    pub fn new(config: HttpBackendConfig) -> HttpTranslationBackend {
        HttpTranslationBackend {
            client: HttpClient::new(config),
        }
    }
}

#[derive(Deserialize)]
struct TranslateResponse {
    translations: Vec<String>,
}

impl TranslationBackend for HttpTranslationBackend {
    fn translate_batch(
        &self,
        texts: &[String],
        source: &str,
        target: &str,
    ) -> Result<Vec<String>, BackendError> {
        let mut out = Vec::with_capacity(texts.len());
        for chunk in texts.chunks(self.client.config.max_batch.max(1)) {
            let body = json!({ "texts": chunk, "source": source, "target": target });
            let value = self.client.post_json("translate", &body)?;
            let parsed: TranslateResponse = serde_json::from_value(value)
                .map_err(|e| BackendError::Protocol(format!("bad translate response: {e}")))?;
            if parsed.translations.len() != chunk.len() {
                return Err(BackendError::Protocol(format!(
                    "asked for {} translations, got {}",
                    chunk.len(),
                    parsed.translations.len()
                )));
            }
            for (input, translation) in chunk.iter().zip(&parsed.translations) {
                if !input.trim().is_empty() && translation.trim().is_empty() {
                    return Err(BackendError::Protocol(format!(
                        "empty translation for non-empty input `{input}`"
                    )));
                }
            }
            out.extend(parsed.translations);
        }
        Ok(out)
    }
}

/// Masked-LM client for the `/fill_mask` wire protocol.
pub struct HttpMaskedLmBackend {
    client: HttpClient,
}

impl HttpMaskedLmBackend {
    pub fn new(config: HttpBackendConfig) -> HttpMaskedLmBackend {
        HttpMaskedLmBackend {
            client: HttpClient::new(config),
        }
    }
}

#[derive(Deserialize)]
struct FillMaskResponse {
    candidates: Vec<(String, f64)>,
}

impl MaskedLmBackend for HttpMaskedLmBackend {
    fn fill_mask(
        &self,
        text_with_single_mask: &str,
        top_k: usize,
    ) -> Result<Vec<(String, f64)>, BackendError> {
        validate_single_mask(text_with_single_mask)?;
        let body = json!({ "text": text_with_single_mask, "top_k": top_k });
        let value = self.client.post_json("fill_mask", &body)?;
        let parsed: FillMaskResponse = serde_json::from_value(value)
            .map_err(|e| BackendError::Protocol(format!("bad fill_mask response: {e}")))?;
        finalize_candidates(parsed.candidates, top_k)
    }
}
