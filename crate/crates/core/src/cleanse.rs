// SPDX-License-Identifier: Apache-2.0

//! Basic text cleansing: lowercase, strip everything outside `[a-z0-9]`,
//! split on whitespace, drop stop words.

use std::collections::BTreeSet;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::artifact::{escape, next_line, parse_field, unescape, Artifact};
use crate::corpusio::{ClassLabel, Corpus, RawSentence};
use crate::error::{Error, Result};
use crate::seed::fingerprint;

/// English stop words, apostrophe-free subset of the common NLTK list.
/// Pinned: its fingerprint is recorded in artifact headers.
const ENGLISH: &[&str] = &[
    "a", "about", "above", "after", "again", "against", "ain", "all", "am", "an", "and", "any",
    "are", "aren", "as", "at", "be", "because", "been", "before", "being", "below", "between",
    "both", "but", "by", "can", "couldn", "d", "did", "didn", "do", "does", "doesn", "doing",
    "don", "down", "during", "each", "few", "for", "from", "further", "had", "hadn", "has",
    "hasn", "have", "haven", "having", "he", "her", "here", "hers", "herself", "him", "himself",
    "his", "how", "i", "if", "in", "into", "is", "isn", "it", "its", "itself", "just", "ll", "m",
    "ma", "me", "mightn", "more", "most", "mustn", "my", "myself", "needn", "no", "nor", "not",
    "now", "o", "of", "off", "on", "once", "only", "or", "other", "our", "ours", "ourselves",
    "out", "over", "own", "re", "s", "same", "shan", "she", "should", "shouldn", "so", "some",
    "such", "t", "than", "that", "the", "their", "theirs", "them", "themselves", "then", "there",
    "these", "they", "this", "those", "through", "to", "too", "under", "until", "up", "ve",
    "very", "was", "wasn", "we", "were", "weren", "what", "when", "where", "which", "while",
    "who", "whom", "why", "will", "with", "won", "wouldn", "y", "you", "your", "yours",
    "yourself", "yourselves",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StopwordList {
    language: String,
    words: BTreeSet<String>,
}

impl StopwordList {
    pub fn from_words<I, S>(language: &str, words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let words = words
            .into_iter()
            .map(|w| w.as_ref().trim().to_lowercase())
            .filter(|w| !w.is_empty())
            .collect();
        StopwordList {
            language: language.to_string(),
            words,
        }
    }

    pub fn builtin(tag: &str) -> Result<Self> {
        match tag.to_ascii_lowercase().as_str() {
            "english" | "en" => Ok(StopwordList::from_words("english", ENGLISH)),
            "none" => Ok(StopwordList::from_words("none", std::iter::empty::<&str>())),
            _ => Err(Error::UnknownStopwords(tag.to_string())),
        }
    }

    /// One word per line; blank lines ignored.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let language = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        Ok(StopwordList::from_words(&language, text.lines()))
    }

    /// Resolves a builtin tag first, then a file path.
    pub fn load(spec: &str) -> Result<Self> {
        match StopwordList::builtin(spec) {
            Ok(list) => Ok(list),
            Err(_) if Path::new(spec).is_file() => StopwordList::from_file(Path::new(spec)),
            Err(e) => Err(e),
        }
    }

    pub fn contains(&self, word: &str) -> bool {
        if word.bytes().any(|b| b.is_ascii_uppercase()) || !word.is_ascii() {
            self.words.contains(&word.to_lowercase())
        } else {
            self.words.contains(word)
        }
    }

    pub fn language(&self) -> &str {
        &self.language
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Content hash of the (sorted) word set.
    pub fn fingerprint(&self) -> String {
        let joined = self.words.iter().cloned().collect::<Vec<_>>().join("\n");
        fingerprint(joined.as_bytes())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CleanSentence {
    pub doc_id: String,
    pub index: usize,
    pub class: ClassLabel,
    pub tokens: Vec<String>,
}

impl CleanSentence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Lowercased `[a-z0-9]+` runs of `text`.
pub fn tokenize(text: &str) -> Vec<String> {
    let lowered = text.to_lowercase();
    lowered
        .split(|c: char| !(c.is_ascii_lowercase() || c.is_ascii_digit()))
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

pub fn clean_tokens(text: &str, stops: &StopwordList) -> Vec<String> {
    let mut tokens = tokenize(text);
    tokens.retain(|t| !stops.contains(t));
    tokens
}

pub fn clean_sentence(s: &RawSentence, class: &ClassLabel, stops: &StopwordList) -> CleanSentence {
    CleanSentence {
        doc_id: s.doc_id.clone(),
        index: s.index,
        class: class.clone(),
        tokens: clean_tokens(&s.text, stops),
    }
}

/// Sentence-level token corpus; also used for the infused corpus's
/// un-anchored view and the filtered output.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CleanCorpus {
    pub sentences: Vec<CleanSentence>,
}

impl CleanCorpus {
    pub fn token_count(&self) -> usize {
        self.sentences.iter().map(CleanSentence::len).sum()
    }

    pub fn token_lists(&self) -> Vec<&[String]> {
        self.sentences.iter().map(|s| s.tokens.as_slice()).collect()
    }
}

/// Cleans every sentence; empty results keep their slot.
pub fn clean_corpus(corpus: &Corpus, stops: &StopwordList) -> CleanCorpus {
    let sentences = corpus
        .documents
        .par_iter()
        .flat_map_iter(|doc| {
            doc.sentences
                .iter()
                .map(move |s| clean_sentence(s, &doc.class, stops))
        })
        .collect();
    CleanCorpus { sentences }
}

pub(crate) fn write_token_line(
    w: &mut dyn Write,
    doc_id: &str,
    index: usize,
    class: &ClassLabel,
    tokens: &[String],
) -> io::Result<()> {
    writeln!(w, "{}\t{}\t{}\t{}", escape(doc_id), index, class, tokens.join(" "))
}

pub(crate) fn parse_token_line(line: &str) -> Result<(String, usize, ClassLabel, Vec<String>), String> {
    let f: Vec<&str> = line.splitn(4, '\t').collect();
    if f.len() != 4 {
        return Err(format!("expected 4 tab-separated fields in `{line}`"));
    }
    let class = ClassLabel::new(f[2]).map_err(|e| e.to_string())?;
    let tokens = f[3].split(' ').filter(|t| !t.is_empty()).map(str::to_string).collect();
    Ok((unescape(f[0]), parse_field(f[1], "sentence index")?, class, tokens))
}

impl Artifact for CleanCorpus {
    const KIND: &'static str = "cleaned";

    fn write_body(&self, w: &mut dyn Write) -> io::Result<()> {
        for s in &self.sentences {
            write_token_line(w, &s.doc_id, s.index, &s.class, &s.tokens)?;
        }
        Ok(())
    }

    fn read_body(lines: &mut dyn Iterator<Item = io::Result<String>>) -> Result<Self, String> {
        let mut sentences = Vec::new();
        while let Some(line) = next_line(lines)? {
            let (doc_id, index, class, tokens) = parse_token_line(&line)?;
            sentences.push(CleanSentence {
                doc_id,
                index,
                class,
                tokens,
            });
        }
        Ok(CleanCorpus { sentences })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::artifact::{self, Header};
    use crate::corpusio::Document;
    use proptest::prelude::*;

    fn english() -> StopwordList {
        StopwordList::builtin("english").unwrap()
    }

    fn raw(text: &str) -> RawSentence {
        RawSentence {
            doc_id: "d".into(),
            index: 0,
            text: text.into(),
        }
    }

    fn label() -> ClassLabel {
        ClassLabel::new("Service-Brakes").unwrap()
    }

    #[test]
    fn brakes_sentence() {
        let c = clean_sentence(
            &raw("When applying brakes, excessive effort is necessary"),
            &label(),
            &english(),
        );
        assert_eq!(c.tokens, ["applying", "brakes", "excessive", "effort", "necessary"]);
        assert_eq!(c.len(), 5);
    }

    #[test]
    fn all_stopwords_and_empty_give_empty() {
        assert!(clean_sentence(&raw("the and he his"), &label(), &english()).is_empty());
        assert!(clean_sentence(&raw(""), &label(), &english()).is_empty());
    }

    #[test]
    fn symbols_split_tokens_and_digits_survive() {
        assert_eq!(
            clean_tokens("Rear latch/striker failed -- 2001 Ford's $1100.00!", &english()),
            ["rear", "latch", "striker", "failed", "2001", "ford", "1100", "00"]
        );
    }

    #[test]
    fn builtin_english() {
        let e = english();
        assert!(e.contains("the") && e.contains("THE") && e.contains("his"));
        assert!(!e.contains("brake"));
        assert!(matches!(StopwordList::builtin("klingon"), Err(Error::UnknownStopwords(_))));
    }

    #[test]
    fn file_lists_dedup_and_skip_blanks() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("custom.txt");
        fs::write(&p, "The\nthe\n").unwrap();
        assert_eq!(StopwordList::from_file(&p).unwrap().len(), 1);
        fs::write(&p, "a\n\n  \nb\n\n").unwrap();
        let l = StopwordList::load(p.to_str().unwrap()).unwrap();
        assert_eq!(l.len(), 2);
        assert!(StopwordList::from_file(&dir.path().join("missing.txt")).is_err());
        assert!(StopwordList::load("/no/such/list").is_err());
    }

    #[test]
    fn fingerprint_is_order_independent() {
        let a = StopwordList::from_words("x", ["b", "a"]);
        let b = StopwordList::from_words("y", ["A", "b", "a"]);
        assert_eq!(a.fingerprint(), b.fingerprint());
        assert_ne!(a.fingerprint(), english().fingerprint());
    }

    #[test]
    fn corpus_keeps_empty_slots_in_order() {
        let corpus = Corpus {
            documents: vec![Document::new("1", label(), "Brakes failed. And then he was. Police came.")],
        };
        let c = clean_corpus(&corpus, &english());
        assert_eq!(c.sentences.len(), 3);
        assert!(c.sentences[1].is_empty());
        assert_eq!(c.sentences[2].tokens, ["police", "came"]);
        assert_eq!(c.sentences.iter().map(|s| s.index).collect::<Vec<_>>(), [0, 1, 2]);
    }

    #[test]
    fn artifact_round_trip_with_empty_sentence() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("cleaned.tsv");
        let corpus = CleanCorpus {
            sentences: vec![
                CleanSentence { doc_id: "a b".into(), index: 0, class: label(), tokens: vec!["x".into(), "y".into()] },
                CleanSentence { doc_id: "a b".into(), index: 1, class: label(), tokens: vec![] },
            ],
        };
        artifact::persist(&corpus, &Header::new("l"), &p).unwrap();
        let text = fs::read_to_string(&p).unwrap();
        assert!(text.lines().nth(1).unwrap() == "a b\t0\tService-Brakes\tx y");
        assert_eq!(artifact::load::<CleanCorpus>(&p).unwrap().1, corpus);
    }

    proptest! {
        #[test]
        fn cleaning_is_idempotent(text in "[ -~]{0,80}") {
            let stops = english();
            let once = clean_tokens(&text, &stops);
            let twice = clean_tokens(&once.join(" "), &stops);
            prop_assert_eq!(&once, &twice);
            for t in &once {
                prop_assert!(!stops.contains(t));
                prop_assert!(t.bytes().all(|b| b.is_ascii_lowercase() || b.is_ascii_digit()));
            }
        }

        #[test]
        fn unicode_input_stays_in_alphabet(text in "\\PC{0,40}") {
            for t in clean_tokens(&text, &english()) {
                prop_assert!(!t.is_empty());
                prop_assert!(t.bytes().all(|b| b.is_ascii_lowercase() || b.is_ascii_digit()));
            }
        }
    }
}
