//! Versioned artifact files.
//!
//! Layout:
//!
//! ```text
//! handicap-lab/v1/<kind>
//! sha256:<hex digest of the body>
//! <JSON body>
//! ```
//!
//! Reals are written in shortest round-trip form and parsed exactly, so a
//! saved value reloads bit-for-bit.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const ARTIFACT_FORMAT: &str = "handicap-lab";
pub const ARTIFACT_VERSION: u32 = 1;

/// A value that can be persisted as an artifact file.
pub trait Artifact: Serialize + DeserializeOwned {
    /// Kind tag written into the header line.
    const KIND: &'static str;
}

#[derive(Debug, Error)]
pub enum ArtifactError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("not a {ARTIFACT_FORMAT} artifact (header {0:?})")]
    BadHeader(String),
    #[error("unsupported artifact version {found:?}, expected v{ARTIFACT_VERSION}")]
    Version { found: String },
    #[error("artifact kind {found:?}, expected {expected:?}")]
    Kind { expected: &'static str, found: String },
    #[error("integrity check failed: body digest {actual} does not match recorded {recorded}")]
    Digest { recorded: String, actual: String },
    #[error("artifact body: {0}")]
    Json(#[from] serde_json::Error),
}

/// Writes `value` to `out` in artifact format.
pub fn write_artifact<T: Artifact, W: Write>(mut out: W, value: &T) -> Result<(), ArtifactError> {
    let body = serde_json::to_vec_pretty(value)?;
    let digest = hex::encode(Sha256::digest(&body));
    let io = |source| ArtifactError::Io {
        path: PathBuf::from("<writer>"),
        source,
    };
    writeln!(out, "{ARTIFACT_FORMAT}/v{ARTIFACT_VERSION}/{}", T::KIND).map_err(io)?;
    writeln!(out, "sha256:{digest}").map_err(io)?;
    out.write_all(&body).map_err(io)?;
    out.write_all(b"\n").map_err(io)?;
    Ok(())
}

fn split_line(bytes: &[u8]) -> (&[u8], &[u8]) {
    match bytes.iter().position(|&b| b == b'\n') {
        Some(i) => (&bytes[..i], &bytes[i + 1..]),
        None => (bytes, &[]),
    }
}

/// Reads an artifact of kind `T::KIND`, checking version and digest.
pub fn read_artifact<T: Artifact, R: Read>(mut input: R) -> Result<T, ArtifactError> {
    let mut bytes = Vec::new();
    input
        .read_to_end(&mut bytes)
        .map_err(|source| ArtifactError::Io {
            path: PathBuf::from("<reader>"),
            source,
        })?;

    let (header, rest) = split_line(&bytes);
    let header = String::from_utf8_lossy(header).trim_end().to_string();
    let mut parts = header.splitn(3, '/');
    let (format, version, kind) = match (parts.next(), parts.next(), parts.next()) {
        (Some(f), Some(v), Some(k)) => (f, v, k),
        _ => return Err(ArtifactError::BadHeader(header)),
    };
    if format != ARTIFACT_FORMAT {
        return Err(ArtifactError::BadHeader(header));
    }
    if version != format!("v{ARTIFACT_VERSION}") {
        return Err(ArtifactError::Version {
            found: version.to_string(),
        });
    }
    if kind != T::KIND {
        return Err(ArtifactError::Kind {
            expected: T::KIND,
            found: kind.to_string(),
        });
    }

    let (digest_line, body) = split_line(rest);
    let digest_line = String::from_utf8_lossy(digest_line);
    let recorded = digest_line
        .trim_end()
        .strip_prefix("sha256:")
        .unwrap_or("")
        .to_string();
    let body = body.strip_suffix(b"\n").unwrap_or(body);
    let actual = hex::encode(Sha256::digest(body));
    if recorded != actual {
        return Err(ArtifactError::Digest { recorded, actual });
    }
    Ok(serde_json::from_slice(body)?)
}

pub fn save_artifact<T: Artifact>(path: impl AsRef<Path>, value: &T) -> Result<(), ArtifactError> {
    let path = path.as_ref();
    let io = |source| ArtifactError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut buf = Vec::new();
    write_artifact(&mut buf, value)?;
    fs::write(path, buf).map_err(io)
}

pub fn load_artifact<T: Artifact>(path: impl AsRef<Path>) -> Result<T, ArtifactError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| ArtifactError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_artifact(bytes.as_slice())
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::Deserialize;

    #[derive(Debug, PartialEq, Serialize, Deserialize)]
    struct Probe {
        xs: Vec<f64>,
    }

    impl Artifact for Probe {
        const KIND: &'static str = "probe";
    }

    fn bytes(p: &Probe) -> Vec<u8> {
        let mut buf = Vec::new();
        write_artifact(&mut buf, p).unwrap();
        buf
    }

    #[test]
    fn reals_round_trip_exactly() {
        let p = Probe {
            xs: vec![0.1 + 0.2, 1.0 / 3.0, -0.0756, f64::MIN_POSITIVE, 1e300, 0.018 * 3.0],
        };
        let back: Probe = read_artifact(bytes(&p).as_slice()).unwrap();
        for (a, b) in p.xs.iter().zip(&back.xs) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn header_names_kind_and_version() {
        let b = bytes(&Probe { xs: vec![] });
        assert!(b.starts_with(b"handicap-lab/v1/probe\nsha256:"));
    }

    #[test]
    fn unknown_version_is_rejected() {
        let b = bytes(&Probe { xs: vec![1.0] });
        let text = String::from_utf8(b).unwrap().replacen("/v1/", "/v9/", 1);
        assert!(matches!(
            read_artifact::<Probe, _>(text.as_bytes()),
            Err(ArtifactError::Version { found }) if found == "v9"
        ));
    }

    #[test]
    fn truncation_fails_integrity() {
        let b = bytes(&Probe { xs: vec![1.0, 2.0, 3.0] });
        let cut = &b[..b.len() - 8];
        assert!(matches!(
            read_artifact::<Probe, _>(cut),
            Err(ArtifactError::Digest { .. })
        ));
        assert!(matches!(
            read_artifact::<Probe, _>(&b[..10]),
            Err(ArtifactError::BadHeader(_))
        ));
    }

    #[test]
    fn wrong_kind_is_rejected() {
        #[derive(Debug, Serialize, Deserialize)]
        struct Other {
            xs: Vec<f64>,
        }
        impl Artifact for Other {
            const KIND: &'static str = "other";
        }
        let b = bytes(&Probe { xs: vec![] });
        assert!(matches!(
            read_artifact::<Other, _>(b.as_slice()),
            Err(ArtifactError::Kind { .. })
        ));
    }
}
