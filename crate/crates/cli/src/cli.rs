//! Argument parsing and dispatch.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::time::Duration;

use clap::{Parser, Subcommand};
use xorsplit_storage::mock::{MockConfig, MockServer};
use xorsplit_storage::StorageToken;
use xorsplit_vault::VaultOptions;

use crate::bench::{cmd_bench, BenchArgs};
use crate::commands::{self, InitOptions, Outcome};
use crate::config::Overrides;
use crate::exit::{self, CliError};

#[derive(Debug, Parser)]
#[command(
    name = "xorsplit",
    version,
    about = "Share files across independent storage backends"
)]
pub struct Cli {
    /// Config file.
    #[arg(long, global = true, default_value = "xorsplit.toml")]
    pub config: PathBuf,
    /// Override the threshold k.
    #[arg(long, global = true)]
    pub k: Option<usize>,
    /// Override the number of shares n.
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// Override the block size in bits.
    #[arg(long, global = true)]
    pub block_bits: Option<u32>,
    /// Machine-readable output on stdout.
    #[arg(long, global = true)]
    pub json: bool,
    /// Seconds to wait after a wrong master password.
    #[arg(long, global = true, default_value_t = 0.0)]
    pub attempt_delay: f64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a config file and a vault with one token per backend.
    Init {
        /// Backend as NAME=KIND:ENDPOINT; repeat for each. Defaults to three
        /// local directories.
        #[arg(long = "backend")]
        backends: Vec<String>,
        /// Replace an existing config and vault.
        #[arg(long)]
        force: bool,
    },
    /// Share a file across the backends; prints its file id.
    Put { path: PathBuf },
    /// Reassemble a file from any k backends.
    Get {
        file_id: String,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// List stored files.
    Ls,
    /// Check every share of a file and name deviating backends.
    Verify { file_id: String },
    /// Upload objects left pending by an incomplete put.
    Resume { file_id: Option<String> },
    /// Run benchmarks and emit CSV.
    Bench(BenchArgs),
    /// Run a mock blob server. Accepted tokens are read from
    /// PASSAT_SERVE_TOKENS (comma separated).
    Serve {
        #[arg(long, default_value = "127.0.0.1:8700")]
        listen: SocketAddr,
        /// Requests per second allowed per token.
        #[arg(long)]
        rps: Option<f64>,
        /// Bucket size for --rps.
        #[arg(long, default_value_t = 5.0)]
        burst: f64,
    },
}

impl Cli {
    fn overrides(&self) -> Overrides {
        Overrides {
            k: self.k,
            n: self.n,
            block_bits: self.block_bits,
        }
    }

    fn vault_options(&self) -> VaultOptions {
        VaultOptions {
            attempt_delay: Duration::from_secs_f64(self.attempt_delay.max(0.0)),
            ..VaultOptions::default()
        }
    }
}

pub const SERVE_TOKENS_ENV: &str = "PASSAT_SERVE_TOKENS";

fn serve(listen: SocketAddr, rps: Option<f64>, burst: f64) -> Result<Outcome, CliError> {
    let tokens = std::env::var(SERVE_TOKENS_ENV).unwrap_or_default();
    let tokens = tokens
        .split(',')
        .filter(|t| !t.is_empty())
        .map(StorageToken::new)
        .collect::<Result<Vec<_>, _>>()?;
    let mut cfg = MockConfig::new(tokens);
    if let Some(rps) = rps {
        cfg = cfg.with_rate_limit(rps, burst);
    }
    MockServer::run_forever(listen, cfg).map_err(|e| CliError::usage(format!("serve {listen}: {e}")))?;
    Ok(Outcome {
        code: exit::OK,
        text: String::new(),
        json: serde_json::Value::Null,
        warnings: Vec::new(),
    })
}

pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    let open = || commands::open_session(&cli.config, cli.overrides(), &cli.vault_options());
    match &cli.command {
        Command::Init { backends, force } => commands::cmd_init(
            &cli.config,
            cli.overrides(),
            &InitOptions {
                backends: backends.clone(),
                force: *force,
                vault: cli.vault_options(),
            },
        ),
        Command::Put { path } => commands::cmd_put(&open()?, path),
        Command::Get { file_id, out } => commands::cmd_get(&open()?, file_id, out.as_deref()),
        Command::Ls => commands::cmd_ls(&open()?),
        Command::Verify { file_id } => commands::cmd_verify(&open()?, file_id),
        Command::Resume { file_id } => commands::cmd_resume(&open()?, file_id.as_deref()),
        Command::Bench(args) => cmd_bench(args),
        Command::Serve { listen, rps, burst } => serve(*listen, *rps, *burst),
    }
}
