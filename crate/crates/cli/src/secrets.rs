//! Reading the master password and backend tokens without echo. Neither is
//! ever accepted as a command-line argument.

use std::io::{BufRead, IsTerminal};

use xorsplit_storage::StorageToken;
use xorsplit_vault::MasterPassword;

use crate::exit::CliError;

pub const PASSWORD_ENV: &str = "PASSAT_PW";

/// Environment variable consulted for a backend's token during `init`.
pub fn token_env(backend: &str) -> String {
    let name: String = backend
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() {
                c.to_ascii_uppercase()
            } else {
                '_'
            }
        })
        .collect();
    format!("PASSAT_TOKEN_{name}")
}

fn prompt(label: &str) -> Result<String, CliError> {
    if std::io::stdin().is_terminal() {
        rpassword::prompt_password(label).map_err(|e| CliError::usage(format!("reading secret: {e}")))
    } else {
        let mut line = String::new();
        std::io::stdin()
            .lock()
            .read_line(&mut line)
            .map_err(|e| CliError::usage(format!("reading secret: {e}")))?;
        Ok(line.trim_end_matches(['\r', '\n']).to_string())
    }
}

/// From `PASSAT_PW`, else a no-echo prompt. `confirm` asks twice.
pub fn master_password(confirm: bool) -> Result<MasterPassword, CliError> {
    if let Some(pw) = MasterPassword::from_env(PASSWORD_ENV) {
        return Ok(pw?);
    }
    let first = prompt("master password: ")?;
    if confirm && prompt("repeat master password: ")? != first {
        return Err(CliError::usage("passwords do not match"));
    }
    Ok(MasterPassword::new(first)?)
}

/// From `PASSAT_TOKEN_<NAME>`, else a no-echo prompt; a blank answer
/// generates a random token.
pub fn backend_token(backend: &str) -> Result<StorageToken, CliError> {
    let raw = match std::env::var(token_env(backend)) {
        Ok(v) => v,
        Err(_) if std::io::stdin().is_terminal() => prompt(&format!("token for {backend} (blank to generate): "))?,
        Err(_) => String::new(),
    };
    if raw.is_empty() {
        return StorageToken::generate(&mut rand::rngs::SysRng).map_err(CliError::from);
    }
    StorageToken::new(raw).map_err(|e| CliError::usage(format!("token for {backend}: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn env_names() {
        assert_eq!(token_env("s1"), "PASSAT_TOKEN_S1");
        assert_eq!(token_env("my-drive.eu"), "PASSAT_TOKEN_MY_DRIVE_EU");
    }
}
