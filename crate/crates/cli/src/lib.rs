//! The `xorsplit` command-line client.
//!
//! `put` splits a file into chunks, shares each chunk across the configured
//! backends and replicates the manifest to all of them. `get` reads the
//! majority manifest, fetches any `k` digest-valid shares and reassembles
//! the file. Backend tokens come from the vault, unlocked with the master
//! password from `PASSAT_PW` or a no-echo prompt.
//!
//! Exit codes are listed in [`exit`].

pub mod bench;
pub mod cli;
pub mod commands;
pub mod config;
pub mod exit;
pub mod secrets;
pub mod state;

pub use commands::{cmd_get, cmd_init, cmd_ls, cmd_put, cmd_resume, cmd_verify, Outcome, Session};
pub use config::{Config, Overrides};

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/cli.md")]
mod book_cli {}
