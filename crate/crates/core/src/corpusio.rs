// SPDX-License-Identifier: Apache-2.0

//! Corpus ingestion: delimited files with one labeled document per row,
//! rule-based sentence segmentation, and the raw-corpus artifact.

use std::collections::HashSet;
use std::fmt;
use std::fs::File;
use std::io::{self, Read, Write};
use std::path::Path;

use crate::artifact::{self, escape, next_line, parse_field, unescape, Artifact};
use crate::error::{Error, Result};

/// A document category, normalized so it is a single whitespace-free token.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ClassLabel(String);

impl ClassLabel {
    /// Collapses runs of whitespace and commas into `-`
    /// (`"Service Brakes"` becomes `Service-Brakes`). Returns `None` for
    /// labels that are empty after trimming.
    pub fn normalize(raw: &str) -> Option<ClassLabel> {
        let mut out = String::with_capacity(raw.len());
        let mut pending_sep = false;
        for c in raw.trim().chars() {
            if c.is_whitespace() || c == ',' {
                pending_sep = true;
                continue;
            }
            if c.is_control() {
                continue;
            }
            if pending_sep && !out.is_empty() {
                out.push('-');
            }
            pending_sep = false;
            out.push(c);
        }
        (!out.is_empty()).then_some(ClassLabel(out))
    }

    /// Accepts an already-normalized name.
    pub fn new(name: &str) -> Result<ClassLabel> {
        match ClassLabel::normalize(name) {
            Some(label) if label.0 == name => Ok(label),
            _ => Err(Error::InvalidParameter(format!(
                "`{name}` is not a normalized class label"
            ))),
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawSentence {
    pub doc_id: String,
    pub index: usize,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub id: String,
    pub class: ClassLabel,
    pub raw_text: String,
    pub sentences: Vec<RawSentence>,
}

impl Document {
    pub fn new(id: impl Into<String>, class: ClassLabel, raw_text: impl Into<String>) -> Self {
        let id = id.into();
        let raw_text = raw_text.into();
        let sentences = split_sentences(&id, &raw_text);
        Document {
            id,
            class,
            raw_text,
            sentences,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    pub documents: Vec<Document>,
}

impl Corpus {
    pub fn sentence_count(&self) -> usize {
        self.documents.iter().map(|d| d.sentences.len()).sum()
    }

    /// Distinct class labels in first-seen order.
    pub fn classes(&self) -> Vec<ClassLabel> {
        let mut seen = HashSet::new();
        self.documents
            .iter()
            .filter(|d| seen.insert(&d.class))
            .map(|d| d.class.clone())
            .collect()
    }
}

/// Which columns of the input file hold what.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusSchema {
    pub class_col: String,
    pub text_col: String,
    /// Optional document id column; row numbers are used otherwise.
    pub id_col: Option<String>,
    pub delimiter: u8,
}

impl Default for CorpusSchema {
    fn default() -> Self {
        CorpusSchema {
            class_col: "Component".into(),
            text_col: "Ticket Text".into(),
            id_col: None,
            delimiter: b',',
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct LoadReport {
    pub corpus: Corpus,
    pub data_rows: usize,
    pub skipped_empty: usize,
    pub skipped_malformed: usize,
    pub warnings: Vec<String>,
}

impl LoadReport {
    pub fn skipped(&self) -> usize {
        self.skipped_empty + self.skipped_malformed
    }
}

pub fn load_corpus(path: &Path, schema: &CorpusSchema) -> Result<LoadReport> {
    if !path.exists() {
        return Err(Error::MissingInput(path.to_path_buf()));
    }
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    load_corpus_from_reader(file, schema)
}

pub fn load_corpus_from_reader<R: Read>(reader: R, schema: &CorpusSchema) -> Result<LoadReport> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(schema.delimiter)
        .has_headers(true)
        .flexible(false)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Config(format!("unreadable corpus header: {e}")))?
        .clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let class_idx = column(&schema.class_col)?;
    let text_idx = column(&schema.text_col)?;
    let id_idx = schema.id_col.as_deref().map(column).transpose()?;

    let mut report = LoadReport::default();
    let mut ids = HashSet::new();
    for (row, record) in rdr.records().enumerate() {
        report.data_rows += 1;
        let line = row + 2;
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                report.skipped_malformed += 1;
                report.warnings.push(format!("row at line {line}: {e}"));
                continue;
            }
        };
        let text = record.get(text_idx).unwrap_or_default();
        if text.trim().is_empty() {
            report.skipped_empty += 1;
            continue;
        }
        let Some(class) = ClassLabel::normalize(record.get(class_idx).unwrap_or_default()) else {
            report.skipped_malformed += 1;
            report.warnings.push(format!("row at line {line}: empty class label"));
            continue;
        };
        let id = match id_idx {
            Some(i) => record.get(i).unwrap_or_default().trim().to_string(),
            None => (row + 1).to_string(),
        };
        if id.is_empty() || !ids.insert(id.clone()) {
            report.skipped_malformed += 1;
            report
                .warnings
                .push(format!("row at line {line}: missing or duplicate id `{id}`"));
            continue;
        }
        report.corpus.documents.push(Document::new(id, class, text));
    }
    Ok(report)
}

/// Splits on `.`, `?` or `!` followed by whitespace or end of text.
/// Abbreviations ("Dr. Smith") split too; that is accepted.
pub fn split_sentences(doc_id: &str, text: &str) -> Vec<RawSentence> {
    let mut out = Vec::new();
    let mut push = |s: &str| {
        let s = s.trim();
        if !s.is_empty() {
            out.push(RawSentence {
                doc_id: doc_id.to_string(),
                index: out.len(),
                text: s.to_string(),
            });
        }
    };
    let mut start = 0;
    let mut chars = text.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        if matches!(c, '.' | '?' | '!') {
            let at_boundary = match chars.peek() {
                None => true,
                Some((_, next)) => next.is_whitespace(),
            };
            if at_boundary {
                let end = i + c.len_utf8();
                push(&text[start..end]);
                start = end;
            }
        }
    }
    push(&text[start..]);
    out
}

impl Artifact for Corpus {
    const KIND: &'static str = "corpus";

    fn write_body(&self, w: &mut dyn Write) -> io::Result<()> {
        for doc in &self.documents {
            writeln!(
                w,
                "D\t{}\t{}\t{}\t{}",
                escape(&doc.id),
                doc.class,
                doc.sentences.len(),
                escape(&doc.raw_text)
            )?;
            for s in &doc.sentences {
                writeln!(w, "S\t{}\t{}", s.index, escape(&s.text))?;
            }
        }
        Ok(())
    }

    fn read_body(lines: &mut dyn Iterator<Item = io::Result<String>>) -> Result<Self, String> {
        let mut corpus = Corpus::default();
        while let Some(line) = next_line(lines)? {
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != 5 || f[0] != "D" {
                return Err(format!("expected document line, got `{line}`"));
            }
            let id = unescape(f[1]);
            let class = ClassLabel::new(f[2]).map_err(|e| e.to_string())?;
            let count: usize = parse_field(f[3], "sentence count")?;
            let mut sentences = Vec::with_capacity(count);
            for _ in 0..count {
                let line = next_line(lines)?.ok_or("truncated document")?;
                let (tag, rest) = line.split_once('\t').ok_or("bad sentence line")?;
                let (index, text) = rest.split_once('\t').ok_or("bad sentence line")?;
                if tag != "S" {
                    return Err(format!("expected sentence line, got `{line}`"));
                }
                sentences.push(RawSentence {
                    doc_id: id.clone(),
                    index: parse_field(index, "sentence index")?,
                    text: unescape(text),
                });
            }
            corpus.documents.push(Document {
                id,
                class,
                raw_text: unescape(f[4]),
                sentences,
            });
        }
        Ok(corpus)
    }
}

pub fn persist_corpus(corpus: &Corpus, header: &artifact::Header, path: &Path) -> Result<()> {
    artifact::persist(corpus, header, path)
}
