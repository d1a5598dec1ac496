//! Shared blocking HTTP plumbing for endpoint-backed sources: JSON POST with
//! exponential backoff on transport errors, auth failures surfaced as their
//! own class so callers can abort batches.

use std::time::Duration;

use crate::error::Error;
use crate::Result;

#[derive(Debug, Clone)]
pub(crate) struct RetryPolicy {
    pub max_attempts: u32,
    pub backoff_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy { max_attempts: 3, backoff_ms: 250 }
    }
}

pub(crate) fn build_client(timeout_secs: u64) -> Result<reqwest::blocking::Client> {
    reqwest::blocking::Client::builder()
        .timeout(Duration::from_secs(timeout_secs.max(1)))
        .build()
        .map_err(|e| Error::Transport { attempts: 0, reason: format!("client build failed: {e}") })
}

/// POSTs `body` as JSON and returns the parsed JSON reply. Transport errors
/// and 5xx/429 responses are retried with exponential backoff; 401/403 is an
/// auth failure; other client errors are not retried.
pub(crate) fn post_json(
    client: &reqwest::blocking::Client,
    url: &str,
    bearer_token: Option<&str>,
    body: &serde_json::Value,
    policy: &RetryPolicy,
) -> Result<serde_json::Value> {
    let attempts = policy.max_attempts.max(1);
    let mut last_reason = String::new();
    for attempt in 1..=attempts {
        if attempt > 1 {
            let delay = policy.backoff_ms.saturating_mul(1 << (attempt - 2).min(8));
            std::thread::sleep(Duration::from_millis(delay));
        }
        let mut request = client.post(url).json(body);
        if let Some(token) = bearer_token {
            request = request.bearer_auth(token);
        }
        match request.send() {
            Err(e) => {
                last_reason = format!("request to {url} failed: {e}");
            }
            Ok(response) => {
                let status = response.status();
                if status == reqwest::StatusCode::UNAUTHORIZED
                    || status == reqwest::StatusCode::FORBIDDEN
                {
                    return Err(Error::Auth {
                        endpoint: url.to_string(),
                        reason: format!("endpoint returned {status}"),
                    });
                }
                if status.is_server_error() || status == reqwest::StatusCode::TOO_MANY_REQUESTS {
                    last_reason = format!("endpoint returned {status}");
                    continue;
                }
                if !status.is_success() {
                    let text = response.text().unwrap_or_default();
                    return Err(Error::Transport {
                        attempts: attempt,
                        reason: format!("endpoint returned {status}: {text}"),
                    });
                }
                return response.json().map_err(|e| Error::Transport {
                    attempts: attempt,
                    reason: format!("reply was not valid JSON: {e}"),
                });
            }
        }
    }
    Err(Error::Transport { attempts, reason: last_reason })
}

/// Resolves a bearer token from the named environment variable. An empty
/// name means the endpoint needs no auth. The token value itself is never
/// stored in any config or log.
pub(crate) fn resolve_token(env_var: &str, endpoint: &str) -> Result<Option<String>> {
    if env_var.is_empty() {
        return Ok(None);
    }
    match std::env::var(env_var) {
        Ok(token) if !token.is_empty() => Ok(Some(token)),
        _ => Err(Error::Auth {
            endpoint: endpoint.to_string(),
            reason: format!("auth token environment variable {env_var} is unset or empty"),
        }),
    }
}
