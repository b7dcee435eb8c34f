//! Content-hashed evidence registry.
//!
//! The registry is one JSON file. Artifact paths are stored relative to the
//! registry's directory with `/` separators.

use std::io::Write as _;
use std::path::{Component, Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::SCHEMA_VERSION;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EvidenceKind {
    RequirementsRationale,
    DataEvaluationReport,
    InternalTestResults,
    DevelopmentLog,
    VerificationResults,
    IntegrationResults,
    PassLog,
}

impl EvidenceKind {
    pub const ALL: [EvidenceKind; 7] = [
        EvidenceKind::RequirementsRationale,
        EvidenceKind::DataEvaluationReport,
        EvidenceKind::InternalTestResults,
        EvidenceKind::DevelopmentLog,
        EvidenceKind::VerificationResults,
        EvidenceKind::IntegrationResults,
        EvidenceKind::PassLog,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EvidenceKind::RequirementsRationale => "RequirementsRationale",
            EvidenceKind::DataEvaluationReport => "DataEvaluationReport",
            EvidenceKind::InternalTestResults => "InternalTestResults",
            EvidenceKind::DevelopmentLog => "DevelopmentLog",
            EvidenceKind::VerificationResults => "VerificationResults",
            EvidenceKind::IntegrationResults => "IntegrationResults",
            EvidenceKind::PassLog => "PassLog",
        }
    }

    fn prefix(self) -> &'static str {
        match self {
            EvidenceKind::RequirementsRationale => "req",
            EvidenceKind::DataEvaluationReport => "data",
            EvidenceKind::InternalTestResults => "itest",
            EvidenceKind::DevelopmentLog => "devlog",
            EvidenceKind::VerificationResults => "verif",
            EvidenceKind::IntegrationResults => "integ",
            EvidenceKind::PassLog => "pass",
        }
    }
}

impl std::str::FromStr for EvidenceKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        EvidenceKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                let names: Vec<_> = EvidenceKind::ALL.iter().map(|k| k.name()).collect();
                format!("unknown evidence kind `{s}` (expected one of {})", names.join(", "))
            })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvidenceArtifact {
    pub id: String,
    pub kind: EvidenceKind,
    pub path: String,
    pub sha256: String,
    pub producer: String,
    pub registered_at: String,
}

#[derive(Debug, Error)]
pub enum EvidenceError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("registry {path}: {message}")]
    Registry { path: String, message: String },
    #[error("{path} has the same content as {existing} ({existing_kind}) but was registered as {kind}")]
    KindCollision {
        path: String,
        existing: String,
        existing_kind: &'static str,
        kind: &'static str,
    },
    #[error("{path} lies outside the project directory")]
    OutsideProject { path: String },
    #[error("unknown evidence id `{0}`")]
    UnknownId(String),
    #[error("evidence {id}: {path} changed since registration (registered {expected}, now {found})")]
    StaleHash {
        id: String,
        path: String,
        expected: String,
        found: String,
    },
    #[error("evidence {id}: {path} is missing")]
    MissingFile { id: String, path: String },
}

pub fn sha256_bytes(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> Result<String, EvidenceError> {
    let bytes = std::fs::read(path).map_err(|source| EvidenceError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(sha256_bytes(&bytes))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvidenceRegistry {
    pub schema_version: u32,
    pub artifacts: Vec<EvidenceArtifact>,
}

impl Default for EvidenceRegistry {
    fn default() -> Self {
        EvidenceRegistry {
            schema_version: SCHEMA_VERSION,
            artifacts: Vec::new(),
        }
    }
}

/// Lexical normalisation; `..` that would climb above the base is kept so
/// the caller can reject it.
fn relative_to(base: &Path, path: &Path) -> Option<String> {
    let abs = if path.is_absolute() {
        path.to_path_buf()
    } else {
        base.join(path)
    };
    let norm = |p: &Path| {
        let mut out: Vec<String> = Vec::new();
        for c in p.components() {
            match c {
                Component::ParentDir => {
                    out.pop();
                }
                Component::Normal(s) => out.push(s.to_string_lossy().into_owned()),
                _ => {}
            }
        }
        out
    };
    let a = norm(&abs);
    let b = norm(base);
    if a.len() < b.len() || a[..b.len()] != b[..] {
        return None;
    }
    Some(a[b.len()..].join("/"))
}

impl EvidenceRegistry {
    /// Reads a registry; a missing file is an empty registry.
    pub fn load(path: &Path) -> Result<EvidenceRegistry, EvidenceError> {
        match std::fs::read_to_string(path) {
            Ok(text) => serde_json::from_str(&text).map_err(|e| EvidenceError::Registry {
                path: path.display().to_string(),
                message: e.to_string(),
            }),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(EvidenceRegistry::default()),
            Err(source) => Err(EvidenceError::Io {
                path: path.display().to_string(),
                source,
            }),
        }
    }

    /// Writes to a temporary file in the same directory, then renames.
    pub fn save(&self, path: &Path) -> Result<(), EvidenceError> {
        let io = |source| EvidenceError::Io {
            path: path.display().to_string(),
            source,
        };
        let dir = path
            .parent()
            .filter(|p| !p.as_os_str().is_empty())
            .unwrap_or(Path::new("."));
        let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
        let text = serde_json::to_string_pretty(self).expect("registry serializes") + "\n";
        tmp.write_all(text.as_bytes()).map_err(io)?;
        tmp.persist(path).map_err(|e| io(e.error))?;
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&EvidenceArtifact> {
        self.artifacts.iter().find(|a| a.id == id)
    }

    /// Records `file` (absolute or relative to `base`). Identical content
    /// registered again returns the existing artifact.
    pub fn register(
        &mut self,
        base: &Path,
        file: &Path,
        kind: EvidenceKind,
        producer: &str,
    ) -> Result<EvidenceArtifact, EvidenceError> {
        let abs: PathBuf = if file.is_absolute() {
            file.to_path_buf()
        } else {
            base.join(file)
        };
        let rel = relative_to(base, &abs).ok_or_else(|| EvidenceError::OutsideProject {
            path: file.display().to_string(),
        })?;
        let hash = sha256_file(&abs)?;
        if let Some(existing) = self.artifacts.iter().find(|a| a.sha256 == hash) {
            if existing.kind != kind {
                return Err(EvidenceError::KindCollision {
                    path: rel,
                    existing: existing.id.clone(),
                    existing_kind: existing.kind.name(),
                    kind: kind.name(),
                });
            }
            return Ok(existing.clone());
        }
        let art = EvidenceArtifact {
            id: format!("{}-{}", kind.prefix(), &hash[..12]),
            kind,
            path: rel,
            sha256: hash,
            producer: producer.to_string(),
            registered_at: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        };
        self.artifacts.push(art.clone());
        self.artifacts.sort_by(|a, b| a.id.cmp(&b.id));
        Ok(art)
    }

    /// Re-hashes the artifact's file.
    pub fn verify(&self, base: &Path, id: &str) -> Result<&EvidenceArtifact, EvidenceError> {
        let art = self.get(id).ok_or_else(|| EvidenceError::UnknownId(id.to_string()))?;
        let path = base.join(&art.path);
        let found = match std::fs::read(&path) {
            Ok(bytes) => sha256_bytes(&bytes),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                return Err(EvidenceError::MissingFile {
                    id: id.to_string(),
                    path: art.path.clone(),
                })
            }
            Err(source) => {
                return Err(EvidenceError::Io {
                    path: path.display().to_string(),
                    source,
                })
            }
        };
        if found != art.sha256 {
            return Err(EvidenceError::StaleHash {
                id: id.to_string(),
                path: art.path.clone(),
                expected: art.sha256.clone(),
                found,
            });
        }
        Ok(art)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_digest() {
        assert_eq!(
            sha256_bytes(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn register_is_idempotent_and_persisted() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::create_dir(dir.path().join("out")).unwrap();
        std::fs::write(dir.path().join("out/campaign.json"), b"{}").unwrap();
        let mut reg = EvidenceRegistry::default();
        let a = reg
            .register(
                dir.path(),
                Path::new("out/campaign.json"),
                EvidenceKind::VerificationResults,
                "test",
            )
            .unwrap();
        assert_eq!(a.path, "out/campaign.json");
        assert_eq!(a.sha256.len(), 64);
        let b = reg
            .register(
                dir.path(),
                &dir.path().join("out/campaign.json"),
                EvidenceKind::VerificationResults,
                "test",
            )
            .unwrap();
        assert_eq!(a.id, b.id);
        assert_eq!(reg.artifacts.len(), 1);

        let file = dir.path().join("evidence.json");
        reg.save(&file).unwrap();
        assert_eq!(EvidenceRegistry::load(&file).unwrap(), reg);
        assert!(reg.verify(dir.path(), &a.id).is_ok());
    }

    #[test]
    fn errors() {
        let dir = tempfile::tempdir().unwrap();
        let mut reg = EvidenceRegistry::default();
        assert!(matches!(
            reg.register(dir.path(), Path::new("nope.json"), EvidenceKind::PassLog, "t"),
            Err(EvidenceError::Io { .. })
        ));
        std::fs::write(dir.path().join("a.txt"), b"same").unwrap();
        std::fs::write(dir.path().join("b.txt"), b"same").unwrap();
        reg.register(dir.path(), Path::new("a.txt"), EvidenceKind::DevelopmentLog, "t")
            .unwrap();
        assert!(matches!(
            reg.register(dir.path(), Path::new("b.txt"), EvidenceKind::PassLog, "t"),
            Err(EvidenceError::KindCollision { .. })
        ));
        assert!(matches!(
            reg.register(dir.path(), Path::new("../x"), EvidenceKind::PassLog, "t"),
            Err(EvidenceError::OutsideProject { .. })
        ));
        assert!(matches!(
            reg.verify(dir.path(), "zzz"),
            Err(EvidenceError::UnknownId(_))
        ));
    }

    #[test]
    fn single_byte_edit_is_stale() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("log.md");
        std::fs::write(&p, b"model development log\n").unwrap();
        let mut reg = EvidenceRegistry::default();
        let a = reg.register(dir.path(), &p, EvidenceKind::DevelopmentLog, "t").unwrap();
        let mut bytes = std::fs::read(&p).unwrap();
        bytes[0] ^= 1;
        std::fs::write(&p, bytes).unwrap();
        assert!(matches!(
            reg.verify(dir.path(), &a.id),
            Err(EvidenceError::StaleHash { .. })
        ));
        std::fs::remove_file(&p).unwrap();
        assert!(matches!(
            reg.verify(dir.path(), &a.id),
            Err(EvidenceError::MissingFile { .. })
        ));
    }

    #[test]
    fn kind_names_parse() {
        for k in EvidenceKind::ALL {
            assert_eq!(k.name().parse::<EvidenceKind>().unwrap(), k);
        }
        assert!("Bogus".parse::<EvidenceKind>().is_err());
    }
}
