use std::fs::{self, File};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use thiserror::Error;

use super::{StoryDocument, SCHEMA_VERSION};

#[derive(Debug, Error)]
pub enum PersistError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("corrupt document: {0}")]
    CorruptDocument(String),
    #[error("document violates its invariants: {0}")]
    Invalid(String),
}

impl PersistError {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Io(_) => "IoError",
            Self::CorruptDocument(_) => "CorruptDocument",
            Self::Invalid(_) => "InvalidDocument",
        }
    }
}

static TEMP_COUNTER: AtomicU64 = AtomicU64::new(0);

/// A write that becomes visible all at once: bytes go to a sibling temp file
/// which replaces the target only on [`AtomicWrite::commit`]. Dropping an
/// uncommitted write removes the temp file and leaves the target untouched.
pub struct AtomicWrite {
    target: PathBuf,
    temp: PathBuf,
    file: Option<File>,
}

impl AtomicWrite {
    pub fn begin(target: impl AsRef<Path>) -> io::Result<Self> {
        let target = target.as_ref().to_path_buf();
        let dir = parent_dir(&target);
        fs::create_dir_all(&dir)?;
        let name = target
            .file_name()
            .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "target has no file name"))?
            .to_string_lossy();
        let n = TEMP_COUNTER.fetch_add(1, Ordering::Relaxed);
        let temp = dir.join(format!(".{name}.tmp-{}-{n}", std::process::id()));
        let file = File::create(&temp)?;
        Ok(Self { target, temp, file: Some(file) })
    }

    pub fn temp_path(&self) -> &Path {
        &self.temp
    }

    pub fn write_all(&mut self, bytes: &[u8]) -> io::Result<()> {
        self.file.as_mut().expect("write after commit").write_all(bytes)
    }

    pub fn commit(mut self) -> io::Result<()> {
        let file = self.file.take().expect("double commit");
        file.sync_all()?;
        drop(file);
        fs::rename(&self.temp, &self.target)?;
        // make the rename itself durable
        if let Ok(dir) = File::open(parent_dir(&self.target)) {
            let _ = dir.sync_all();
        }
        Ok(())
    }
}

impl Drop for AtomicWrite {
    fn drop(&mut self) {
        if self.file.take().is_some() {
            let _ = fs::remove_file(&self.temp);
        }
    }
}

fn parent_dir(path: &Path) -> PathBuf {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    }
}

pub fn write_atomic(path: impl AsRef<Path>, bytes: &[u8]) -> io::Result<()> {
    let mut w = AtomicWrite::begin(path)?;
    w.write_all(bytes)?;
    w.commit()
}

/// Writes the document's canonical JSON form atomically.
pub fn save_document(doc: &StoryDocument, path: impl AsRef<Path>) -> Result<(), PersistError> {
    doc.validate().map_err(PersistError::Invalid)?;
    let mut bytes = serde_json::to_vec_pretty(doc).map_err(|e| PersistError::Invalid(e.to_string()))?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)?;
    Ok(())
}

pub fn load_document(path: impl AsRef<Path>) -> Result<StoryDocument, PersistError> {
    let raw = fs::read_to_string(path)?;
    let doc: StoryDocument =
        serde_json::from_str(&raw).map_err(|e| PersistError::CorruptDocument(e.to_string()))?;
    if doc.schema_version > SCHEMA_VERSION {
        return Err(PersistError::CorruptDocument(format!(
            "schema version {} is newer than supported {SCHEMA_VERSION}",
            doc.schema_version
        )));
    }
    doc.validate().map_err(PersistError::CorruptDocument)?;
    Ok(doc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{EntityKind, EntitySource, FragmentDraft};

    fn sample() -> StoryDocument {
        let mut d = StoryDocument::new("doc-1", "Sample", vec!["The soldier met the witch.".into()]);
        let s = d.add_entity(EntityKind::Person, "soldier", EntitySource::Manual, 1.0).unwrap();
        let w = d.add_entity(EntityKind::Person, "witch", EntitySource::ProviderRule, 0.7).unwrap();
        d.create_fragment(FragmentDraft { persons: vec![s.clone(), w], ..Default::default() }).unwrap();
        d.create_fragment(FragmentDraft { persons: vec![s], ..Default::default() }).unwrap();
        d
    }

    #[test]
    fn round_trip_is_identity() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("doc.json");
        let d = sample();
        save_document(&d, &path).unwrap();
        assert_eq!(load_document(&path).unwrap(), d);
        // no temp files left behind
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn unknown_fields_survive() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("doc.json");
        save_document(&sample(), &path).unwrap();
        let mut v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
        v["futureField"] = serde_json::json!({"x": [1, 2]});
        fs::write(&path, serde_json::to_string(&v).unwrap()).unwrap();
        let d = load_document(&path).unwrap();
        save_document(&d, &path).unwrap();
        let again: serde_json::Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
        assert_eq!(again["futureField"], serde_json::json!({"x": [1, 2]}));
    }

    #[test]
    fn truncated_file_is_corrupt() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("doc.json");
        save_document(&sample(), &path).unwrap();
        let raw = fs::read_to_string(&path).unwrap();
        fs::write(&path, &raw[..raw.len() / 2]).unwrap();
        assert!(matches!(load_document(&path), Err(PersistError::CorruptDocument(_))));
    }

    #[test]
    fn dangling_reference_is_corrupt() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("doc.json");
        save_document(&sample(), &path).unwrap();
        let raw = fs::read_to_string(&path).unwrap();
        let mut v: serde_json::Value = serde_json::from_str(&raw).unwrap();
        v["fragments"][0]["persons"][0] = serde_json::json!("e999");
        fs::write(&path, serde_json::to_string(&v).unwrap()).unwrap();
        let err = load_document(&path).unwrap_err();
        assert!(matches!(&err, PersistError::CorruptDocument(m) if m.contains("e999")), "{err}");
    }

    #[test]
    fn missing_file_is_io() {
        assert!(matches!(load_document("/nonexistent/doc.json"), Err(PersistError::Io(_))));
    }

    #[test]
    fn abandoned_write_leaves_target_untouched() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("doc.json");
        write_atomic(&path, b"before").unwrap();
        {
            let mut w = AtomicWrite::begin(&path).unwrap();
            w.write_all(b"after, but never committed").unwrap();
        }
        assert_eq!(fs::read(&path).unwrap(), b"before");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
