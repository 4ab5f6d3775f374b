//! Local record of uploads that did not reach every backend.
//!
//! ```text
//! <state_dir>/<file_id>/pending.json     {"file_id": .., "pending": {backend: [key, ..]}}
//! <state_dir>/<file_id>/objects/<key>    payload of each pending object
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use xorsplit_storage::ObjectKey;

use crate::exit::CliError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PendingUpload {
    pub file_id: String,
    /// Backend name to keys still to upload, in upload order.
    pub pending: BTreeMap<String, Vec<String>>,
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |e| CliError::usage(format!("{}: {e}", path.display()))
}

fn write_private(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let mut opts = fs::OpenOptions::new();
    opts.write(true).create(true).truncate(true);
    #[cfg(unix)]
    std::os::unix::fs::OpenOptionsExt::mode(&mut opts, 0o600);
    let mut f = opts.open(path).map_err(io(path))?;
    f.write_all(bytes).map_err(io(path))?;
    f.sync_all().map_err(io(path))
}

pub struct StateDir {
    root: PathBuf,
}

impl StateDir {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        StateDir { root: root.into() }
    }

    fn dir(&self, file_id: &str) -> PathBuf {
        self.root.join(file_id)
    }

    /// Records `pending` with the payloads it refers to. `payload` returns
    /// the octets for a key.
    pub fn save<'a>(
        &self,
        state: &PendingUpload,
        payload: impl Fn(&ObjectKey) -> Option<&'a [u8]>,
    ) -> Result<PathBuf, CliError> {
        let dir = self.dir(&state.file_id);
        let objects = dir.join("objects");
        fs::create_dir_all(&objects).map_err(io(&objects))?;
        for key in state.pending.values().flatten() {
            let k = ObjectKey::parse(key).map_err(|e| CliError::usage(e.to_string()))?;
            let data = payload(&k).ok_or_else(|| CliError::usage(format!("no payload for {key}")))?;
            write_private(&objects.join(key), data)?;
        }
        let path = dir.join("pending.json");
        let json = serde_json::to_vec_pretty(state).expect("state serializes");
        write_private(&path, &json)?;
        Ok(dir)
    }

    pub fn load(&self, file_id: &str) -> Result<PendingUpload, CliError> {
        let path = self.dir(file_id).join("pending.json");
        let bytes = fs::read(&path).map_err(io(&path))?;
        serde_json::from_slice(&bytes).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
    }

    pub fn payload(&self, file_id: &str, key: &str) -> Result<Vec<u8>, CliError> {
        let path = self.dir(file_id).join("objects").join(key);
        fs::read(&path).map_err(io(&path))
    }

    /// File ids with recorded pending uploads, sorted.
    pub fn list(&self) -> Result<Vec<String>, CliError> {
        let entries = match fs::read_dir(&self.root) {
            Ok(e) => e,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(io(&self.root)(e)),
        };
        let mut ids: Vec<String> = entries
            .filter_map(|e| e.ok())
            .filter(|e| e.path().join("pending.json").is_file())
            .filter_map(|e| e.file_name().into_string().ok())
            .collect();
        ids.sort();
        Ok(ids)
    }

    /// Rewrites the record with what is still pending, or removes it.
    pub fn update(&self, state: &PendingUpload) -> Result<(), CliError> {
        let dir = self.dir(&state.file_id);
        if state.pending.values().all(Vec::is_empty) {
            return fs::remove_dir_all(&dir).map_err(io(&dir));
        }
        let path = dir.join("pending.json");
        write_private(&path, &serde_json::to_vec_pretty(state).expect("state serializes"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn save_load_update_clear() {
        let dir = tempfile::tempdir().unwrap();
        let sd = StateDir::new(dir.path().join("state"));
        assert!(sd.list().unwrap().is_empty());
        let mut state = PendingUpload {
            file_id: "abc".into(),
            pending: BTreeMap::from([(
                "s2".to_string(),
                vec!["abc.c0.s1".to_string(), "abc.manifest".to_string()],
            )]),
        };
        sd.save(&state, |k| {
            Some(if k.as_str() == "abc.manifest" {
                &b"{}"[..]
            } else {
                &b"xyz"[..]
            })
        })
        .unwrap();
        assert_eq!(sd.list().unwrap(), ["abc"]);
        assert_eq!(sd.load("abc").unwrap(), state);
        assert_eq!(sd.payload("abc", "abc.c0.s1").unwrap(), b"xyz");
        state.pending.get_mut("s2").unwrap().remove(0);
        sd.update(&state).unwrap();
        assert_eq!(sd.load("abc").unwrap().pending["s2"], ["abc.manifest"]);
        state.pending.clear();
        sd.update(&state).unwrap();
        assert!(sd.list().unwrap().is_empty());
    }
}
