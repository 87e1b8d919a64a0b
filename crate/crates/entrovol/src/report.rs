//! Artifact serialization: pretty JSON with floats pinned to 12
//! significant digits, sha256 manifests, and atomic file writes. Pinning
//! the float rendering (and writing via tmp+rename) is what makes rerun
//! outputs byte-comparable.

use std::fs;
use std::io;
use std::path::Path;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("serialization failed: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

// ==================== float formatting ====================

/// Render a finite float with 12 significant digits: positional notation
/// for decimal exponents in [-4, 15], e-notation outside, and always at
/// least one fractional digit so the value reads back as a float.
pub(crate) fn format_sig12(v: f64) -> String {
    if v == 0.0 {
        return "0.0".to_string();
    }
    let sci = format!("{v:.11e}");
    let (mant, exp) = sci.split_once('e').expect("{:e} always carries an exponent");
    let exp: i32 = exp.parse().expect("well-formed exponent");
    let neg = mant.starts_with('-');
    let digits: String = mant.chars().filter(|c| c.is_ascii_digit()).collect();
    let digits = digits.trim_end_matches('0');
    let digits = if digits.is_empty() { "0" } else { digits };

    let mut out = String::new();
    if neg {
        out.push('-');
    }
    if (-4..=15).contains(&exp) {
        if exp >= 0 {
            let int_len = exp as usize + 1;
            if digits.len() <= int_len {
                out.push_str(digits);
                for _ in 0..int_len - digits.len() {
                    out.push('0');
                }
                out.push_str(".0");
            } else {
                out.push_str(&digits[..int_len]);
                out.push('.');
                out.push_str(&digits[int_len..]);
            }
        } else {
            out.push_str("0.");
            for _ in 0..(-exp as usize) - 1 {
                out.push('0');
            }
            out.push_str(digits);
        }
    } else {
        out.push_str(&digits[..1]);
        out.push('.');
        if digits.len() > 1 {
            out.push_str(&digits[1..]);
        } else {
            out.push('0');
        }
        out.push('e');
        out.push_str(&exp.to_string());
    }
    out
}

/// Pretty formatter that routes every float through [`format_sig12`].
struct SigFigFormatter<'a> {
    inner: PrettyFormatter<'a>,
}

impl<'a> SigFigFormatter<'a> {
    fn new() -> Self {
        Self { inner: PrettyFormatter::new() }
    }
}

impl<'a> Formatter for SigFigFormatter<'a> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(format_sig12(value).as_bytes())
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        writer.write_all(format_sig12(f64::from(value)).as_bytes())
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.begin_array(writer)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_array(writer)
    }

    fn begin_array_value<W: ?Sized + io::Write>(
        &mut self,
        writer: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.inner.begin_array_value(writer, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_array_value(writer)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.begin_object(writer)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_object(writer)
    }

    fn begin_object_key<W: ?Sized + io::Write>(
        &mut self,
        writer: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.inner.begin_object_key(writer, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.begin_object_value(writer)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_object_value(writer)
    }
}

/// Serialize to pretty JSON (two-space indent, 12-significant-digit
/// floats, trailing newline).
pub fn to_json_pretty<T: Serialize>(value: &T) -> Result<String, ReportError> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SigFigFormatter::new());
    value.serialize(&mut ser)?;
    let mut s = String::from_utf8(out).expect("serde_json emits UTF-8");
    s.push('\n');
    Ok(s)
}

// ==================== filesystem ====================

/// Write via a sibling tmp file and rename, creating parent directories
/// as needed. Readers never observe a half-written artifact.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> io::Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    let name = path
        .file_name()
        .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "path has no file name"))?;
    let mut tmp = path.to_path_buf();
    tmp.set_file_name(format!("{}.tmp", name.to_string_lossy()));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), ReportError> {
    let text = to_json_pretty(value)?;
    atomic_write(path, text.as_bytes())?;
    Ok(())
}

// ==================== manifest ====================

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ManifestEntry {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

/// Hash the given files (paths relative to `dir`), sorted by path with
/// duplicates collapsed.
pub fn manifest_for(dir: &Path, rel_paths: &[String]) -> io::Result<Vec<ManifestEntry>> {
    let mut names: Vec<String> = rel_paths.to_vec();
    names.sort();
    names.dedup();
    let mut entries = Vec::with_capacity(names.len());
    for rel in names {
        let data = fs::read(dir.join(&rel))?;
        entries.push(ManifestEntry {
            path: rel,
            bytes: data.len() as u64,
            sha256: sha256_hex(&data),
        });
    }
    Ok(entries)
}
