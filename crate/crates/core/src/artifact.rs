// SPDX-License-Identifier: Apache-2.0

//! Line-oriented artifact files shared by every pipeline stage.
//!
//! Each artifact starts with a single header line
//!
//! ```text
//! #semno<TAB>v1<TAB>stage=<kind><TAB>lineage=<hash><TAB>key=value...
//! ```
//!
//! followed by a body whose layout belongs to the artifact type. Files are
//! written through a temporary sibling and renamed into place, so a crashed
//! writer never leaves a truncated artifact behind.

use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub const MAGIC: &str = "#semno";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Header {
    pub stage: String,
    pub lineage: String,
    pub params: Vec<(String, String)>,
}

impl Header {
    pub fn new(lineage: impl Into<String>) -> Self {
        Header {
            stage: String::new(),
            lineage: lineage.into(),
            params: Vec::new(),
        }
    }

    /// Sets `key`, replacing an earlier value in place.
    pub fn with(mut self, key: impl Into<String>, value: impl ToString) -> Self {
        let (key, value) = (key.into(), value.to_string());
        match self.params.iter_mut().find(|(k, _)| *k == key) {
            Some(slot) => slot.1 = value,
            None => self.params.push((key, value)),
        }
        self
    }

    pub fn extend<I, K, V>(self, params: I) -> Self
    where
        I: IntoIterator<Item = (K, V)>,
        K: Into<String>,
        V: ToString,
    {
        params.into_iter().fold(self, |h, (k, v)| h.with(k, v))
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.params
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn to_line(&self) -> String {
        let mut line = format!(
            "{MAGIC}\tv{FORMAT_VERSION}\tstage={}\tlineage={}",
            escape(&self.stage),
            escape(&self.lineage)
        );
        for (k, v) in &self.params {
            line.push('\t');
            line.push_str(&escape(k));
            line.push('=');
            line.push_str(&escape(v));
        }
        line
    }

    pub fn parse(line: &str, path: &Path) -> Result<Header> {
        let mut fields = line.trim_end_matches(['\r', '\n']).split('\t');
        let magic = fields.next().unwrap_or_default();
        let version = fields.next().unwrap_or_default();
        if magic != MAGIC || version != format!("v{FORMAT_VERSION}") {
            let found: String = line.chars().take(40).collect();
            return Err(Error::VersionMismatch {
                path: path.to_path_buf(),
                found,
                expected: FORMAT_VERSION,
            });
        }
        let mut header = Header::default();
        for field in fields {
            let (k, v) = field
                .split_once('=')
                .ok_or_else(|| Error::format(path, format!("bad header field `{field}`")))?;
            let (k, v) = (unescape(k), unescape(v));
            match k.as_str() {
                "stage" => header.stage = v,
                "lineage" => header.lineage = v,
                _ => header.params.push((k, v)),
            }
        }
        Ok(header)
    }
}

/// An artifact body with a fixed kind tag.
pub trait Artifact: Sized {
    const KIND: &'static str;

    fn write_body(&self, w: &mut dyn Write) -> io::Result<()>;

    /// Parses the body; errors are plain reasons, the caller attaches the path.
    fn read_body(lines: &mut dyn Iterator<Item = io::Result<String>>) -> Result<Self, String>;
}

pub fn persist<A: Artifact>(artifact: &A, header: &Header, path: &Path) -> Result<()> {
    let mut header = header.clone();
    header.stage = A::KIND.to_string();
    write_atomic(path, |w| {
        writeln!(w, "{}", header.to_line())?;
        artifact.write_body(w)
    })
}

pub fn load<A: Artifact>(path: &Path) -> Result<(Header, A)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines();
    let first = match lines.next() {
        Some(line) => line.map_err(|e| Error::io(path, e))?,
        None => return Err(Error::format(path, "empty file")),
    };
    let header = Header::parse(&first, path)?;
    if header.stage != A::KIND {
        return Err(Error::StageMismatch {
            path: path.to_path_buf(),
            expected: A::KIND.to_string(),
            found: header.stage,
        });
    }
    let body = A::read_body(&mut lines).map_err(|reason| Error::format(path, reason))?;
    Ok((header, body))
}

pub fn read_header(path: &Path) -> Result<Header> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut first = String::new();
    BufReader::new(file)
        .read_line(&mut first)
        .map_err(|e| Error::io(path, e))?;
    Header::parse(&first, path)
}

/// Writes `path` through a temporary file in the same directory. The target
/// is only replaced when `body` succeeds.
pub fn write_atomic<F>(path: &Path, body: F) -> Result<()>
where
    F: FnOnce(&mut dyn Write) -> io::Result<()>,
{
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut builder = tempfile::Builder::new();
    builder.prefix(".semno-").suffix(".tmp");
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        builder.permissions(fs::Permissions::from_mode(0o644));
    }
    let tmp = builder
        .tempfile_in(dir)
        .map_err(|e| Error::io(dir, e))?;
    {
        let mut w = BufWriter::new(tmp.as_file());
        body(&mut w).map_err(|e| Error::io(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))?;
    }
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

/// Escapes tabs, newlines and backslashes so a value fits in one TSV field.
pub fn escape(s: &str) -> String {
    if !s.contains(['\\', '\t', '\n', '\r']) {
        return s.to_string();
    }
    let mut out = String::with_capacity(s.len() + 4);
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out
}

pub fn unescape(s: &str) -> String {
    if !s.contains('\\') {
        return s.to_string();
    }
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            Some(other) => out.push(other),
            None => out.push('\\'),
        }
    }
    out
}

/// Pulls the next body line, turning read errors into reasons.
pub(crate) fn next_line(
    lines: &mut dyn Iterator<Item = io::Result<String>>,
) -> Result<Option<String>, String> {
    match lines.next() {
        None => Ok(None),
        Some(Ok(l)) => Ok(Some(l)),
        Some(Err(e)) => Err(e.to_string()),
    }
}

pub(crate) fn parse_field<T: std::str::FromStr>(field: &str, what: &str) -> Result<T, String> {
    field
        .parse()
        .map_err(|_| format!("invalid {what} `{field}`"))
}
