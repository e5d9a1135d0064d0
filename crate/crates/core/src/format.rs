//! On-disk formats: coefficient files, certificate files and trace CSV.
//!
//! Coefficient and certificate files are JSON documents tagged with a
//! `format` name, a `version` and the monomial ordering they use. Coefficient
//! payloads are either inline decimal numbers (`"encoding": "inline"`) or a
//! sidecar file of little-endian `f64` values (`"encoding": "f64le"`) whose
//! path is relative to the JSON file. Inline numbers are written in shortest
//! round-trip form, so both encodings reproduce coefficients bit for bit.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::certificate::Certificate;
use crate::instances::{InstanceSpec, SosStatus};
use crate::monomials::{monomial_count, pair_count, PAIR_ORDERING, QUARTIC_ORDERING};
use crate::optimizer::TracePoint;
use crate::quartic::{Quadratic, QuarticError, QuarticForm};
use crate::scalar::Scalar;

pub const COEFF_FORMAT: &str = "qsos-coefficients";
pub const CERT_FORMAT: &str = "qsos-certificate";
pub const FORMAT_VERSION: u32 = 1;
/// Payloads longer than this are written as a binary sidecar under [`PayloadEncoding::Auto`].
pub const BINARY_THRESHOLD: usize = 100_000;
pub const TRACE_HEADER: &str = "iteration,squared_error,relative_error,wall_time_s";

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: malformed JSON: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{path}: {msg}")]
    Invalid { path: PathBuf, msg: String },
    #[error(transparent)]
    Quartic(#[from] QuarticError),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> FormatError + '_ {
    move |source| FormatError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn invalid(path: &Path, msg: impl Into<String>) -> FormatError {
    FormatError::Invalid {
        path: path.to_path_buf(),
        msg: msg.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PayloadEncoding {
    /// Binary above [`BINARY_THRESHOLD`] coefficients, inline otherwise.
    #[default]
    Auto,
    Inline,
    Binary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "encoding", rename_all = "kebab-case")]
enum Payload {
    Inline { values: Vec<f64> },
    F64le { file: String, sha256: String },
}

/// Generator metadata carried alongside the coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceMeta {
    #[serde(flatten)]
    pub spec: InstanceSpec,
    pub status: SosStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct CoeffDoc {
    format: String,
    version: u32,
    n: usize,
    degree: u32,
    ordering: String,
    count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    instance: Option<InstanceMeta>,
    payload: Payload,
}

/// Contents of a coefficient file.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientFile {
    pub form: QuarticForm<f64>,
    pub instance: Option<InstanceMeta>,
}

fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".bin");
    path.with_file_name(name)
}

fn resolve(path: &Path, rel: &str) -> PathBuf {
    path.parent().unwrap_or(Path::new(".")).join(rel)
}

/// Writes `form` to `path`; returns the sidecar path when one was written.
pub fn write_coefficients<T: Scalar>(
    path: &Path,
    form: &QuarticForm<T>,
    instance: Option<InstanceMeta>,
    encoding: PayloadEncoding,
) -> Result<Option<PathBuf>, FormatError> {
    let values: Vec<f64> = form.coeffs().iter().map(|c| c.as_f64()).collect();
    let binary = match encoding {
        PayloadEncoding::Auto => values.len() > BINARY_THRESHOLD,
        PayloadEncoding::Inline => false,
        PayloadEncoding::Binary => true,
    };
    let mut sidecar = None;
    let payload = if binary {
        let bin = sidecar_path(path);
        let mut bytes = Vec::with_capacity(values.len() * 8);
        for v in &values {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        fs::write(&bin, &bytes).map_err(io_err(&bin))?;
        let file = bin.file_name().unwrap_or_default().to_string_lossy().into_owned();
        sidecar = Some(bin);
        Payload::F64le {
            file,
            sha256: hex::encode(Sha256::digest(&bytes)),
        }
    } else {
        Payload::Inline { values }
    };
    let doc = CoeffDoc {
        format: COEFF_FORMAT.into(),
        version: FORMAT_VERSION,
        n: form.n(),
        degree: 4,
        ordering: QUARTIC_ORDERING.into(),
        count: form.len(),
        instance,
        payload,
    };
    write_json(path, &doc)?;
    Ok(sidecar)
}

pub fn read_coefficients(path: &Path) -> Result<CoefficientFile, FormatError> {
    let doc: CoeffDoc = read_json(path)?;
    if doc.format != COEFF_FORMAT {
        return Err(invalid(path, format!("expected format {COEFF_FORMAT:?}, found {:?}", doc.format)));
    }
    if doc.version != FORMAT_VERSION {
        return Err(invalid(path, format!("unsupported version {}", doc.version)));
    }
    if doc.degree != 4 {
        return Err(invalid(path, format!("only degree 4 is supported, found {}", doc.degree)));
    }
    if doc.ordering != QUARTIC_ORDERING {
        return Err(invalid(path, format!("unknown monomial ordering {:?}", doc.ordering)));
    }
    let expected = monomial_count(doc.n);
    if doc.count != expected {
        return Err(invalid(path, format!("count {} != C(n+3,4) = {expected}", doc.count)));
    }
    let values = match doc.payload {
        Payload::Inline { values } => values,
        Payload::F64le { file, sha256 } => {
            let bin = resolve(path, &file);
            let bytes = fs::read(&bin).map_err(io_err(&bin))?;
            if hex::encode(Sha256::digest(&bytes)) != sha256 {
                return Err(invalid(&bin, "payload checksum mismatch"));
            }
            if bytes.len() != expected * 8 {
                return Err(invalid(&bin, format!("payload has {} bytes, expected {}", bytes.len(), expected * 8)));
            }
            bytes
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
                .collect()
        }
    };
    if values.len() != expected {
        return Err(invalid(path, format!("payload has {} values, expected {expected}", values.len())));
    }
    let form = QuarticForm::new(doc.n, values).map_err(|e| invalid(path, e.to_string()))?;
    Ok(CoefficientFile {
        form,
        instance: doc.instance,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct CertDoc {
    format: String,
    version: u32,
    n: usize,
    k: usize,
    residual: f64,
    target_digest: String,
    ordering: String,
    quadratics: Vec<Vec<f64>>,
}

pub fn write_certificate<T: Scalar>(path: &Path, cert: &Certificate<T>) -> Result<(), FormatError> {
    let doc = CertDoc {
        format: CERT_FORMAT.into(),
        version: FORMAT_VERSION,
        n: cert.n(),
        k: cert.k(),
        residual: cert.residual,
        target_digest: cert.target_digest().to_string(),
        ordering: PAIR_ORDERING.into(),
        quadratics: cert
            .quadratics()
            .iter()
            .map(|q| q.coeffs().iter().map(|c| c.as_f64()).collect())
            .collect(),
    };
    write_json(path, &doc)
}

pub fn read_certificate(path: &Path) -> Result<Certificate<f64>, FormatError> {
    let doc: CertDoc = read_json(path)?;
    if doc.format != CERT_FORMAT {
        return Err(invalid(path, format!("expected format {CERT_FORMAT:?}, found {:?}", doc.format)));
    }
    if doc.version != FORMAT_VERSION {
        return Err(invalid(path, format!("unsupported version {}", doc.version)));
    }
    if doc.ordering != PAIR_ORDERING {
        return Err(invalid(path, format!("unknown pair ordering {:?}", doc.ordering)));
    }
    if doc.k != doc.quadratics.len() {
        return Err(invalid(path, format!("header says k = {} but {} quadratics follow", doc.k, doc.quadratics.len())));
    }
    let p = pair_count(doc.n);
    let quadratics = doc
        .quadratics
        .into_iter()
        .enumerate()
        .map(|(r, c)| {
            if c.len() != p {
                return Err(invalid(path, format!("quadratic {r} has {} coefficients, expected {p}", c.len())));
            }
            Quadratic::new(doc.n, c).map_err(|e| invalid(path, e.to_string()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Certificate::with_digest(doc.n, quadratics, doc.target_digest, doc.residual)
        .map_err(|e| invalid(path, e.to_string()))
}

/// Trace CSV with columns [`TRACE_HEADER`].
pub fn write_trace(out: &mut impl Write, trace: &[TracePoint]) -> io::Result<()> {
    writeln!(out, "{TRACE_HEADER}")?;
    for p in trace {
        writeln!(
            out,
            "{},{:e},{:e},{}",
            p.iteration, p.squared_error, p.relative_error, p.wall_time_s
        )?;
    }
    Ok(())
}

pub fn write_trace_file(path: &Path, trace: &[TracePoint]) -> Result<(), FormatError> {
    let mut f = io::BufWriter::new(fs::File::create(path).map_err(io_err(path))?);
    write_trace(&mut f, trace).and_then(|_| f.flush()).map_err(io_err(path))
}

fn write_json(path: &Path, doc: &impl Serialize) -> Result<(), FormatError> {
    let mut text = serde_json::to_string_pretty(doc).map_err(|source| FormatError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    text.push('\n');
    fs::write(path, text).map_err(io_err(path))
}

fn read_json<D: for<'de> Deserialize<'de>>(path: &Path) -> Result<D, FormatError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|source| FormatError::Json {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{Family, InstanceSpec};
    use proptest::prelude::*;

    fn sample(n: usize, seed: u64) -> (QuarticForm<f64>, InstanceMeta) {
        let spec = InstanceSpec::new(Family::FineStructure, n, seed);
        let (q, status) = spec.generate().unwrap();
        (q, InstanceMeta { spec, status })
    }

    #[test]
    fn inline_and_binary_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let (q, meta) = sample(4, 1);
        for enc in [PayloadEncoding::Inline, PayloadEncoding::Binary] {
            let path = dir.path().join(format!("{enc:?}.json"));
            let side = write_coefficients(&path, &q, Some(meta.clone()), enc).unwrap();
            assert_eq!(side.is_some(), enc == PayloadEncoding::Binary);
            let back = read_coefficients(&path).unwrap();
            assert_eq!(back.form, q);
            assert_eq!(back.instance.as_ref(), Some(&meta));
        }
    }

    #[test]
    fn identical_writes_are_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let (q, meta) = sample(5, 2);
        let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
        write_coefficients(&a, &q, Some(meta.clone()), PayloadEncoding::Auto).unwrap();
        write_coefficients(&b, &q, Some(meta), PayloadEncoding::Auto).unwrap();
        assert_eq!(fs::read(a).unwrap(), fs::read(b).unwrap());
    }

    #[test]
    fn rejects_wrong_tags_and_lengths() {
        let dir = tempfile::tempdir().unwrap();
        let (q, _) = sample(3, 0);
        let path = dir.path().join("c.json");
        write_coefficients(&path, &q, None, PayloadEncoding::Inline).unwrap();
        let text = fs::read_to_string(&path).unwrap();

        let bad = dir.path().join("bad.json");
        fs::write(&bad, text.replace(QUARTIC_ORDERING, "grlex")).unwrap();
        assert!(matches!(read_coefficients(&bad), Err(FormatError::Invalid { .. })));

        fs::write(&bad, text.replace("\"count\": 15", "\"count\": 14")).unwrap();
        assert!(matches!(read_coefficients(&bad), Err(FormatError::Invalid { .. })));

        fs::write(&bad, "{ not json").unwrap();
        assert!(matches!(read_coefficients(&bad), Err(FormatError::Json { .. })));

        assert!(matches!(
            read_coefficients(&dir.path().join("missing.json")),
            Err(FormatError::Io { .. })
        ));
    }

    #[test]
    fn corrupted_sidecar_is_detected() {
        let dir = tempfile::tempdir().unwrap();
        let (q, _) = sample(3, 0);
        let path = dir.path().join("c.json");
        let bin = write_coefficients(&path, &q, None, PayloadEncoding::Binary).unwrap().unwrap();
        let mut bytes = fs::read(&bin).unwrap();
        bytes[3] ^= 1;
        fs::write(&bin, bytes).unwrap();
        assert!(matches!(read_coefficients(&path), Err(FormatError::Invalid { .. })));
    }

    #[test]
    fn certificate_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let q1 = Quadratic::from_terms(2, [((0, 0), 1.0), ((1, 1), 1.0)]).unwrap();
        let q2 = Quadratic::from_terms(2, [((0, 1), 0.1)]).unwrap();
        let target = crate::quartic::square_and_sum(2, &[q1.clone(), q2.clone()]).unwrap();
        let cert = Certificate::new(vec![q1, q2], &target, 1e-9).unwrap();
        let path = dir.path().join("cert.json");
        write_certificate(&path, &cert).unwrap();
        assert_eq!(read_certificate(&path).unwrap(), cert);
    }

    #[test]
    fn trace_csv_layout() {
        let trace = [TracePoint {
            iteration: 10,
            squared_error: 0.25,
            relative_error: 1e-3,
            wall_time_s: 0.5,
        }];
        let mut out = Vec::new();
        write_trace(&mut out, &trace).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text, format!("{TRACE_HEADER}\n10,2.5e-1,1e-3,0.5\n"));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn arbitrary_coefficients_round_trip_bitwise(
            n in 1usize..5,
            raw in proptest::collection::vec(proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO, 70),
            binary in any::<bool>(),
        ) {
            let dir = tempfile::tempdir().unwrap();
            let len = monomial_count(n);
            let q = QuarticForm::new(n, raw[..len].to_vec()).unwrap();
            let path = dir.path().join("p.json");
            let enc = if binary { PayloadEncoding::Binary } else { PayloadEncoding::Inline };
            write_coefficients(&path, &q, None, enc).unwrap();
            let back = read_coefficients(&path).unwrap().form;
            let same = back.coeffs().iter().zip(q.coeffs()).all(|(a, b)| a.to_bits() == b.to_bits());
            prop_assert!(same);
        }
    }
}
