use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::TryRng;
use serde_json::{json, Value};
use xorsplit_core::{
    derive_file_id, merge, reconstruct_file, share_chunks_parallel, split, verify_integrity, Manifest, Placement,
    ShareFile, Verdict,
};
use xorsplit_storage::ops::objects_for;
use xorsplit_storage::{
    download_any_k, fetch_all_shares, list_file_ids, read_manifest, upload_all, upload_objects, BackendDescriptor,
    BackendKind, BackendTarget, ObjectKey, StorageError, UploadReport,
};
use xorsplit_vault::{MasterPassword, Vault, VaultOptions};

use crate::config::{Config, Overrides};
use crate::exit::{self, CliError};
use crate::secrets;
use crate::state::{PendingUpload, StateDir};

/// What a command produced: data for stdout, diagnostics for stderr and the
/// exit code.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub code: i32,
    pub text: String,
    pub json: Value,
    pub warnings: Vec<String>,
}

impl Outcome {
    fn ok(text: impl Into<String>, json: Value) -> Self {
        Outcome {
            code: exit::OK,
            text: text.into(),
            json,
            warnings: Vec::new(),
        }
    }
}

type Result<T, E = CliError> = std::result::Result<T, E>;

/// Parses `NAME=KIND:ENDPOINT`, e.g. `s1=http:http://127.0.0.1:9000`.
pub fn parse_backend_spec(spec: &str, share_index: usize) -> Result<BackendDescriptor> {
    let bad = || CliError::usage(format!("backend {spec:?} is not NAME=KIND:ENDPOINT"));
    let (name, rest) = spec.split_once('=').ok_or_else(bad)?;
    let (kind, endpoint) = rest.split_once(':').unwrap_or((rest, ""));
    let kind = match kind {
        "local-dir" => BackendKind::LocalDir,
        "memory" => BackendKind::Memory,
        "http" => BackendKind::Http,
        _ => return Err(bad()),
    };
    if name.is_empty() {
        return Err(bad());
    }
    Ok(BackendDescriptor {
        name: name.to_string(),
        kind,
        endpoint: endpoint.to_string(),
        share_index,
    })
}

pub struct InitOptions {
    pub backends: Vec<String>,
    pub force: bool,
    pub vault: VaultOptions,
}

/// Writes a config file and a vault holding one token per backend.
pub fn cmd_init(config_path: &Path, overrides: Overrides, opts: &InitOptions) -> Result<Outcome> {
    if config_path.exists() && !opts.force {
        return Err(CliError::usage(format!(
            "{} exists; pass --force to replace it",
            config_path.display()
        )));
    }
    let backends = if opts.backends.is_empty() {
        Config::local_backends(overrides.n.unwrap_or(3))
    } else {
        opts.backends
            .iter()
            .enumerate()
            .map(|(i, s)| parse_backend_spec(s, i))
            .collect::<Result<Vec<_>>>()?
    };
    let mut cfg = Config::scaffold(overrides.k.unwrap_or(2), backends);
    if let Some(n) = overrides.n {
        cfg.n = n;
    }
    if let Some(b) = overrides.block_bits {
        cfg.block_bits = b;
    }
    cfg.validate()?;

    let dir = config_path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| CliError::usage(format!("{}: {e}", dir.display())))?;
    std::fs::write(config_path, cfg.to_toml())
        .map_err(|e| CliError::usage(format!("cannot write {}: {e}", config_path.display())))?;

    let resolved = Config::load(config_path, Overrides::default())?;
    if resolved.vault_path.exists() {
        if !opts.force {
            return Err(CliError::usage(format!(
                "{} exists; pass --force to replace it",
                resolved.vault_path.display()
            )));
        }
        std::fs::remove_file(&resolved.vault_path)
            .map_err(|e| CliError::usage(format!("{}: {e}", resolved.vault_path.display())))?;
    }
    let pw = secrets::master_password(true)?;
    let mut vault = Vault::create(&resolved.vault_path, &pw, &opts.vault)?;
    for b in &resolved.backends {
        vault.store_token(&b.name, secrets::backend_token(&b.name)?)?;
    }
    Ok(Outcome::ok(
        config_path.display().to_string(),
        json!({"config": config_path, "vault": resolved.vault_path, "backends": resolved.n}),
    ))
}

/// Everything a storage command needs.
pub struct Session {
    pub config: Config,
    pub targets: Vec<BackendTarget>,
}

impl Session {
    /// Unlocks the vault and opens every backend with its token.
    pub fn open(config: Config, pw: &MasterPassword, vault_opts: &VaultOptions) -> Result<Session> {
        let mut vault = Vault::open(&config.vault_path, pw, vault_opts)?;
        let mut targets = Vec::with_capacity(config.backends.len());
        for b in &config.backends {
            let token = vault.fetch_token(&b.name)?;
            targets.push(BackendTarget::new(b.open(config.retry)?, token, b.share_index));
        }
        vault.close();
        Ok(Session { config, targets })
    }

    fn state(&self) -> StateDir {
        StateDir::new(&self.config.state_dir)
    }
}

fn describe(e: &StorageError) -> String {
    match e {
        StorageError::Integrity { backend, key } => {
            format!("backend {backend} returned {key} with a bad digest (tampered or corrupted); used another backend")
        }
        other => other.to_string(),
    }
}

/// Exit code for an upload that did not complete everywhere.
fn upload_code(report: &UploadReport, k: usize) -> i32 {
    let committed = report.outcomes.iter().filter(|o| o.is_ok()).count();
    if report
        .failures()
        .any(|o| o.error.as_ref().is_some_and(StorageError::is_auth))
    {
        exit::AUTH
    } else if committed < k {
        exit::UNAVAILABLE
    } else {
        exit::PARTIAL
    }
}

fn outcome_json(report: &UploadReport) -> Value {
    Value::Array(
        report
            .outcomes
            .iter()
            .map(|o| {
                json!({
                    "backend": o.backend,
                    "share_index": o.share_index,
                    "stored": o.stored.len(),
                    "pending": o.pending.len(),
                    "error": o.error.as_ref().map(|e| e.to_string()),
                })
            })
            .collect(),
    )
}

/// Splits, shares and uploads `path`. Prints the new file id.
pub fn cmd_put(session: &Session, path: &Path) -> Result<Outcome> {
    let cfg = &session.config;
    let data = std::fs::read(path).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    let name = path
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| CliError::usage(format!("{} has no usable file name", path.display())))?;
    let scheme = cfg.scheme()?;
    let plan = cfg.plan()?;

    let chunks = split(&data, &plan);
    let slices: Vec<&[u8]> = chunks.iter().map(|c| c.data).collect();
    let shared = share_chunks_parallel(&slices, &scheme, cfg.threads, rand::rng)?;

    let mut nonce = [0u8; 16];
    rand::rngs::SysRng
        .try_fill_bytes(&mut nonce)
        .map_err(|e| CliError::usage(format!("randomness source failed: {e}")))?;
    let file_id = derive_file_id(name, &nonce);
    let placement = cfg
        .backends
        .iter()
        .map(|b| Placement {
            backend: b.name.clone(),
            share_index: b.share_index,
        })
        .collect();
    let lens: Vec<(u64, &_)> = chunks
        .iter()
        .zip(&shared)
        .map(|(c, s)| (c.data.len() as u64, s))
        .collect();
    let manifest = Manifest::new(file_id.clone(), name, &scheme, plan, &lens, placement)?;

    let report = upload_all(&session.targets, &manifest, &shared)?;
    let mut out = Outcome::ok(
        file_id.clone(),
        json!({"file_id": file_id, "chunks": shared.len(), "complete": report.is_complete(), "backends": outcome_json(&report)}),
    );
    if report.is_complete() {
        return Ok(out);
    }

    let manifest_bytes = manifest.to_canonical_json();
    let mut pending = BTreeMap::new();
    let mut payloads: BTreeMap<String, &[u8]> = BTreeMap::new();
    for o in report.failures() {
        for (key, data) in objects_for(&manifest, &manifest_bytes, &shared, o.share_index)? {
            payloads.insert(key.to_string(), data);
        }
        pending.insert(
            o.backend.clone(),
            o.pending.iter().map(ToString::to_string).collect::<Vec<_>>(),
        );
        let why = o.error.as_ref().map(describe).unwrap_or_default();
        out.warnings.push(format!("upload to {} incomplete: {why}", o.backend));
    }
    let state = PendingUpload {
        file_id: file_id.clone(),
        pending,
    };
    let dir = session
        .state()
        .save(&state, |k: &ObjectKey| payloads.get(k.as_str()).copied())?;
    out.warnings.push(format!(
        "pending objects recorded in {}; run `resume {file_id}` once the backends are back",
        dir.display()
    ));
    out.code = upload_code(&report, cfg.k);
    Ok(out)
}

/// Uploads what earlier `put`s left pending.
pub fn cmd_resume(session: &Session, file_id: Option<&str>) -> Result<Outcome> {
    let state_dir = session.state();
    let ids = match file_id {
        Some(id) => vec![id.to_string()],
        None => state_dir.list()?,
    };
    let mut out = Outcome::ok(String::new(), Value::Null);
    let mut done = Vec::new();
    let mut code = exit::OK;
    for id in &ids {
        let mut state = state_dir.load(id)?;
        let mut report = UploadReport { outcomes: Vec::new() };
        for (backend, keys) in state.pending.iter_mut() {
            if keys.is_empty() {
                continue;
            }
            let target = session
                .targets
                .iter()
                .find(|t| t.name() == backend.as_str())
                .ok_or_else(|| CliError::usage(format!("backend {backend} is no longer configured")))?;
            let payloads = keys
                .iter()
                .map(|k| Ok((ObjectKey::parse(k)?, state_dir.payload(id, k)?)))
                .collect::<Result<Vec<_>>>()?;
            let objects: Vec<(ObjectKey, &[u8])> = payloads.iter().map(|(k, d)| (k.clone(), &d[..])).collect();
            let o = upload_objects(target, &objects);
            *keys = o.pending.iter().map(ToString::to_string).collect();
            if let Some(e) = &o.error {
                out.warnings.push(format!("resume {id} on {backend}: {}", describe(e)));
            }
            report.outcomes.push(o);
        }
        state_dir.update(&state)?;
        if report.is_complete() {
            done.push(id.clone());
        } else {
            let c = upload_code(&report, 0);
            code = code.max(if c == exit::UNAVAILABLE { exit::PARTIAL } else { c });
        }
    }
    out.code = code;
    out.text = done.join("\n");
    out.json = json!({"completed": done, "remaining": ids.len() - done.len()});
    Ok(out)
}

/// Downloads any `k` shares, reconstructs and writes the file.
pub fn cmd_get(session: &Session, file_id: &str, out_path: Option<&Path>) -> Result<Outcome> {
    let mut warnings = Vec::new();
    let read = read_manifest(file_id, &session.targets)?;
    for e in &read.failures {
        warnings.push(format!("manifest replica unavailable: {e}"));
    }
    for b in &read.dissenting {
        warnings.push(format!(
            "backend {b} holds a manifest replica that disagrees with the majority"
        ));
    }
    let manifest = read.manifest;
    let scheme = manifest.scheme()?;
    let dl = download_any_k(&manifest, &session.targets, scheme.k())?;
    warnings.extend(dl.failures.iter().map(describe));

    let mut parts = Vec::with_capacity(manifest.chunks.len());
    for (pos, entry) in manifest.chunks.iter().enumerate() {
        let shares: Vec<&ShareFile> = dl.shares.iter().map(|s| &s.chunks[pos]).collect();
        parts.push((
            entry.chunk_tag,
            reconstruct_file(&shares, &scheme, entry.chunk_len as usize)?,
        ));
    }
    let data = merge(parts)?;
    if data.len() as u64 != manifest.original_len {
        return Err(CliError::new(
            exit::VERIFY_FAILED,
            "reassembled length disagrees with the manifest",
        ));
    }

    let target = match out_path {
        Some(p) => p.to_path_buf(),
        None => PathBuf::from(
            Path::new(&manifest.original_name)
                .file_name()
                .ok_or_else(|| CliError::usage("manifest has no usable file name; pass -o"))?,
        ),
    };
    write_atomic(&target, &data)?;
    let used: Vec<&str> = dl.shares.iter().map(|s| s.backend.as_str()).collect();
    Ok(Outcome {
        code: exit::OK,
        text: target.display().to_string(),
        json: json!({"output": target, "octets": data.len(), "backends_used": used, "warnings": warnings}),
        warnings,
    })
}

fn write_atomic(path: &Path, data: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".part");
    let tmp = PathBuf::from(tmp);
    let err = |e: std::io::Error| CliError::usage(format!("{}: {e}", path.display()));
    std::fs::create_dir_all(dir).map_err(err)?;
    std::fs::write(&tmp, data).map_err(err)?;
    std::fs::rename(&tmp, path).map_err(err)
}

/// Lists stored files.
pub fn cmd_ls(session: &Session) -> Result<Outcome> {
    let (ids, failures) = list_file_ids(&session.targets);
    let mut warnings: Vec<String> = failures.iter().map(|e| format!("listing skipped: {e}")).collect();
    let mut lines = Vec::new();
    let mut rows = Vec::new();
    for id in ids {
        match read_manifest(&id, &session.targets) {
            Ok(r) => {
                let m = r.manifest;
                lines.push(format!("{}\t{}\t{}", m.file_id, m.original_len, m.original_name));
                rows.push(json!({"file_id": m.file_id, "name": m.original_name, "octets": m.original_len}));
            }
            Err(e) => warnings.push(format!("{id}: {e}")),
        }
    }
    Ok(Outcome {
        code: exit::OK,
        text: lines.join("\n"),
        json: Value::Array(rows),
        warnings,
    })
}

/// Reconstructs from every subset of the reachable shares and reports a
/// verdict per share.
pub fn cmd_verify(session: &Session, file_id: &str) -> Result<Outcome> {
    let mut warnings = Vec::new();
    let read = read_manifest(file_id, &session.targets)?;
    let manifest = read.manifest;
    let all = fetch_all_shares(&manifest, &session.targets);
    for e in &all.failures {
        warnings.push(format!("share unavailable: {e}"));
    }
    let name_of = |idx: usize| manifest.backend_for(idx).unwrap_or("?").to_string();

    let mut failed = !read.dissenting.is_empty();
    let mut lines = Vec::new();
    for b in &read.dissenting {
        lines.push(format!("manifest\tbackend {b}\tdisagrees with majority"));
    }
    let mut reports = Vec::new();
    for (pos, entry) in manifest.chunks.iter().enumerate() {
        let shares: Vec<ShareFile> = all.shares.iter().map(|s| s.chunks[pos].clone()).collect();
        let report = verify_integrity(&shares, &manifest, entry.chunk_tag)?;
        for s in &report.shares {
            let verdict = match s.verdict {
                Verdict::Ok => "ok",
                Verdict::DigestMismatch => "digest-mismatch",
                Verdict::CrossPairMismatch => "cross-pair-mismatch",
            };
            lines.push(format!(
                "chunk {}\tshare {}\tbackend {}\t{verdict}",
                entry.chunk_tag,
                s.share_index,
                name_of(s.share_index)
            ));
        }
        for m in &report.missing {
            lines.push(format!(
                "chunk {}\tshare {m}\tbackend {}\tmissing",
                entry.chunk_tag,
                name_of(*m)
            ));
        }
        if !report.is_clean() {
            failed = true;
            if let Some(d) = report.deviating {
                warnings.push(format!(
                    "chunk {}: share {d} on backend {} deviates",
                    entry.chunk_tag,
                    name_of(d)
                ));
            }
        }
        reports.push(report);
    }
    Ok(Outcome {
        code: if failed { exit::VERIFY_FAILED } else { exit::OK },
        text: lines.join("\n"),
        json: json!({
            "file_id": manifest.file_id,
            "clean": !failed,
            "dissenting_manifests": read.dissenting,
            "chunks": reports,
            "backends": (0..manifest.params.n).map(name_of).collect::<Vec<_>>(),
        }),
        warnings,
    })
}

pub fn open_session(config_path: &Path, overrides: Overrides, vault_opts: &VaultOptions) -> Result<Session> {
    let config = Config::load(config_path, overrides)?;
    let pw = secrets::master_password(false)?;
    Session::open(config, &pw, vault_opts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn backend_specs() {
        let b = parse_backend_spec("s1=http:http://127.0.0.1:9000", 0).unwrap();
        assert_eq!(
            (b.kind, b.endpoint.as_str()),
            (BackendKind::Http, "http://127.0.0.1:9000")
        );
        let b = parse_backend_spec("m=memory", 2).unwrap();
        assert_eq!((b.kind, b.share_index), (BackendKind::Memory, 2));
        assert!(parse_backend_spec("nokind", 0).is_err());
        assert!(parse_backend_spec("x=ftp:host", 0).is_err());
    }
}
