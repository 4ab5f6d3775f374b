//! Storage backends and share dispersal.
//!
//! A [`Backend`] is one independent provider. Three implementations share
//! one contract: [`MemoryBackend`], [`LocalDirBackend`] and the
//! [`HttpBackend`] client for a minimal bearer-token blob protocol. The
//! [`mock`] module serves that protocol for tests, with outage, latency,
//! tamper and token-revocation faults and a token-bucket rate limiter.
//!
//! [`ops`] spreads shares and manifest replicas over `n` backends and pulls
//! back any `k`.

pub mod backend;
mod error;
pub mod http;
pub mod key;
pub mod local;
pub mod memory;
pub mod mock;
pub mod ops;
pub mod retry;
mod token;

pub use backend::{validate_descriptors, Backend, BackendDescriptor, BackendKind, Receipt};
pub use error::{Result, StorageError};
pub use http::HttpBackend;
pub use key::{KeyKind, ObjectKey};
pub use local::LocalDirBackend;
pub use memory::MemoryBackend;
pub use ops::{
    download_any_k, fetch_all_shares, list_file_ids, read_manifest, upload_all, upload_objects, BackendOutcome,
    BackendTarget, Download, DownloadedShare, ManifestRead, UploadReport,
};
pub use retry::RetryPolicy;
pub use token::StorageToken;

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/storage.md")]
mod book_storage {}
