//! Versioned text artifacts.
//!
//! Every artifact written by the pipeline starts with a tag line
//! `#sclom <kind> v<version>`, optionally followed by `key=value` fields.
//! Readers refuse a tag with a different kind or an unknown version.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;
const TAG: &str = "#sclom";

pub fn header_line(kind: &str, fields: &[(&str, &str)]) -> String {
    let mut line = format!("{TAG} {kind} v{FORMAT_VERSION}");
    for (key, value) in fields {
        line.push(' ');
        line.push_str(key);
        line.push('=');
        line.push_str(value);
    }
    line
}

pub fn is_header(line: &str) -> bool {
    line.starts_with(TAG)
}

/// Validates a tag line and returns its `key=value` fields.
pub fn check_header(line: &str, kind: &'static str) -> Result<Vec<(String, String)>> {
    let mut parts = line.split_whitespace();
    if parts.next() != Some(TAG) {
        return Err(Error::Version {
            kind,
            found: "<missing>".into(),
            expected: FORMAT_VERSION,
        });
    }
    let found_kind = parts.next().unwrap_or("");
    if found_kind != kind {
        return Err(Error::Version {
            kind,
            found: format!("{found_kind} (wrong artifact kind)"),
            expected: FORMAT_VERSION,
        });
    }
    let version = parts.next().unwrap_or("");
    if version != format!("v{FORMAT_VERSION}") {
        return Err(Error::Version {
            kind,
            found: version.to_string(),
            expected: FORMAT_VERSION,
        });
    }
    Ok(parts
        .filter_map(|kv| kv.split_once('=').map(|(k, v)| (k.to_string(), v.to_string())))
        .collect())
}

pub fn open(path: &Path) -> Result<BufReader<File>> {
    match File::open(path) {
        Ok(f) => Ok(BufReader::new(f)),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Err(Error::MissingArtifact(path.to_path_buf())),
        Err(e) => Err(e.into()),
    }
}

pub fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    Ok(BufWriter::new(File::create(path)?))
}

/// Line reader that tracks line numbers for error messages.
pub struct Lines<R> {
    inner: std::io::Lines<R>,
    pub name: String,
    pub line_no: usize,
}

impl<R> Lines<R> {
    pub fn error(&self, message: impl Into<String>) -> Error {
        Error::parse(&self.name, self.line_no, message)
    }
}

impl<R: BufRead> Lines<R> {
    pub fn new(reader: R, name: impl Into<String>) -> Self {
        Lines {
            inner: reader.lines(),
            name: name.into(),
            line_no: 0,
        }
    }

    pub fn next_line(&mut self) -> Result<Option<String>> {
        match self.inner.next() {
            None => Ok(None),
            Some(line) => {
                self.line_no += 1;
                Ok(Some(line?))
            }
        }
    }

    pub fn expect_line(&mut self) -> Result<String> {
        self.next_line()?
            .ok_or_else(|| Error::parse(&self.name, self.line_no + 1, "unexpected end of file"))
    }

    /// Reads the tag line for `kind` and returns its fields.
    pub fn expect_header(&mut self, kind: &'static str) -> Result<Vec<(String, String)>> {
        let line = self.expect_line()?;
        check_header(&line, kind)
    }
}

pub fn parse_floats<R>(lines: &Lines<R>, fields: &[&str]) -> Result<Vec<f64>> {
    fields
        .iter()
        .map(|s| {
            let v: f64 = s.parse().map_err(|_| lines.error(format!("bad number `{s}`")))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(lines.error(format!("non-finite value `{s}`")))
            }
        })
        .collect()
}

pub fn write_floats<W: Write>(w: &mut W, values: &[f64]) -> Result<()> {
    let mut first = true;
    for v in values {
        if !first {
            w.write_all(b" ")?;
        }
        first = false;
        write!(w, "{v}")?;
    }
    w.write_all(b"\n")?;
    Ok(())
}

/// FNV-1a over the bit patterns of a float slice; stable identifier for
/// matrices referenced by other artifacts.
pub fn fingerprint(values: &[f64]) -> String {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for v in values {
        for byte in v.to_bits().to_le_bytes() {
            hash ^= u64::from(byte);
            hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    format!("{hash:016x}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_round_trip() {
        let line = header_line("model", &[("theta", "abc")]);
        assert_eq!(line, "#sclom model v1 theta=abc");
        let fields = check_header(&line, "model").unwrap();
        assert_eq!(fields, vec![("theta".to_string(), "abc".to_string())]);
    }

    #[test]
    fn rejects_unknown_version_and_kind() {
        assert!(matches!(check_header("#sclom model v2", "model"), Err(Error::Version { .. })));
        assert!(matches!(check_header("#sclom vocab v1", "model"), Err(Error::Version { .. })));
        assert!(matches!(check_header("3 4", "model"), Err(Error::Version { .. })));
    }

    #[test]
    fn fingerprint_distinguishes_signed_zero() {
        assert_ne!(fingerprint(&[0.0]), fingerprint(&[-0.0]));
        assert_eq!(fingerprint(&[1.0, 2.0]), fingerprint(&[1.0, 2.0]));
    }
}
