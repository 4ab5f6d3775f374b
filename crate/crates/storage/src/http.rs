//! Client for the generic HTTP blob protocol.
//!
//! ```text
//! PUT    /v1/o/{key}        store object, body = octets, returns a receipt
//! GET    /v1/o/{key}        fetch object
//! DELETE /v1/o/{key}        remove object
//! GET    /v1/o?prefix=...   list keys, returns {"keys": [...]}
//! ```
//!
//! Every request carries `Authorization: Bearer <token>`.

use std::time::Duration;

use serde::Deserialize;
use ureq::Agent;

use crate::backend::{Backend, Receipt};
use crate::error::{Result, StorageError};
use crate::key::ObjectKey;
use crate::retry::RetryPolicy;
use crate::token::StorageToken;

#[derive(Debug, Deserialize)]
pub(crate) struct KeyList {
    pub keys: Vec<String>,
}

pub struct HttpBackend {
    name: String,
    base: String,
    agent: Agent,
    retry: RetryPolicy,
}

impl std::fmt::Debug for HttpBackend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HttpBackend")
            .field("name", &self.name)
            .field("base", &self.base)
            .finish()
    }
}

impl HttpBackend {
    pub fn new(name: &str, base_url: &str, retry: RetryPolicy) -> Result<Self> {
        if !(base_url.starts_with("http://") || base_url.starts_with("https://")) {
            return Err(StorageError::Other(format!(
                "{name}: endpoint {base_url:?} is not an http(s) URL"
            )));
        }
        let agent: Agent = Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(120)))
            .build()
            .into();
        Ok(HttpBackend {
            name: name.to_string(),
            base: base_url.trim_end_matches('/').to_string(),
            agent,
            retry,
        })
    }

    fn url(&self, key: &ObjectKey) -> String {
        format!("{}/v1/o/{}", self.base, key.as_str())
    }

    fn bearer(token: &StorageToken) -> String {
        format!("Bearer {}", token.expose())
    }

    fn transport(&self, e: ureq::Error) -> StorageError {
        StorageError::Unavailable {
            backend: self.name.clone(),
            reason: e.to_string(),
        }
    }

    fn status_error(&self, status: u16, key: Option<&ObjectKey>, size: u64) -> StorageError {
        let backend = self.name.clone();
        match status {
            401 | 403 => StorageError::AuthRejected { backend },
            404 => StorageError::NotFound {
                backend,
                key: key.map(|k| k.to_string()).unwrap_or_default(),
            },
            413 => StorageError::QuotaExceeded { backend, size },
            429 => StorageError::Throttled { backend },
            s if s >= 500 => StorageError::Unavailable {
                backend,
                reason: format!("http status {s}"),
            },
            s => StorageError::Other(format!("{backend}: unexpected http status {s}")),
        }
    }

    fn read_body(&self, mut resp: ureq::http::Response<ureq::Body>) -> Result<Vec<u8>> {
        resp.body_mut()
            .with_config()
            .limit(u64::MAX)
            .read_to_vec()
            .map_err(|e| self.transport(e))
    }
}

impl Backend for HttpBackend {
    fn name(&self) -> &str {
        &self.name
    }

    fn put_object(&self, key: &ObjectKey, data: &[u8], token: &StorageToken) -> Result<Receipt> {
        self.retry.run(|| {
            let resp = self
                .agent
                .put(&self.url(key))
                .header("Authorization", &Self::bearer(token))
                .header("Content-Type", "application/octet-stream")
                .send(data)
                .map_err(|e| self.transport(e))?;
            let status = resp.status().as_u16();
            if status != 200 && status != 201 {
                return Err(self.status_error(status, Some(key), data.len() as u64));
            }
            let body = self.read_body(resp)?;
            let receipt: Receipt = serde_json::from_slice(&body)
                .map_err(|e| StorageError::Other(format!("{}: bad receipt: {e}", self.name)))?;
            if receipt != Receipt::for_data(data) {
                return Err(StorageError::Integrity {
                    backend: self.name.clone(),
                    key: key.to_string(),
                });
            }
            Ok(receipt)
        })
    }

    fn get_object(&self, key: &ObjectKey, token: &StorageToken) -> Result<Vec<u8>> {
        self.retry.run(|| {
            let resp = self
                .agent
                .get(&self.url(key))
                .header("Authorization", &Self::bearer(token))
                .call()
                .map_err(|e| self.transport(e))?;
            let status = resp.status().as_u16();
            if status != 200 {
                return Err(self.status_error(status, Some(key), 0));
            }
            self.read_body(resp)
        })
    }

    fn list_objects(&self, prefix: &str, token: &StorageToken) -> Result<Vec<String>> {
        self.retry.run(|| {
            let resp = self
                .agent
                .get(&format!("{}/v1/o", self.base))
                .query("prefix", prefix)
                .header("Authorization", &Self::bearer(token))
                .call()
                .map_err(|e| self.transport(e))?;
            let status = resp.status().as_u16();
            if status != 200 {
                return Err(self.status_error(status, None, 0));
            }
            let body = self.read_body(resp)?;
            let list: KeyList = serde_json::from_slice(&body)
                .map_err(|e| StorageError::Other(format!("{}: bad key list: {e}", self.name)))?;
            Ok(list.keys)
        })
    }

    fn delete_object(&self, key: &ObjectKey, token: &StorageToken) -> Result<()> {
        self.retry.run(|| {
            let resp = self
                .agent
                .delete(&self.url(key))
                .header("Authorization", &Self::bearer(token))
                .call()
                .map_err(|e| self.transport(e))?;
            match resp.status().as_u16() {
                200 | 204 | 404 => Ok(()),
                s => Err(self.status_error(s, Some(key), 0)),
            }
        })
    }
}
