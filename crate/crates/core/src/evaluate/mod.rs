// SPDX-License-Identifier: Apache-2.0

//! Precision, recall and F1 of noise verdicts against annotations, the
//! annotation sampler, and a synthetic corpus generator.

mod sample;
mod synth;

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io;
use std::path::Path;

pub use sample::{sample_for_annotation, SampleEntry, SampleManifest};
pub use synth::{generate_synthetic, SyntheticCorpus, SyntheticSpec};

use crate::artifact::{unescape, write_atomic};
use crate::corpusio::ClassLabel;
use crate::error::{Error, Result};
use crate::filter::NoiseVerdict;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Annotation {
    pub doc_id: String,
    pub index: usize,
    /// `true` for noise.
    pub tag: bool,
}

/// Reads `doc_id<TAB>index<TAB>tag` lines; `#` lines and blanks are skipped.
pub fn load_annotations(path: &Path) -> Result<Vec<Annotation>> {
    let text = fs::read_to_string(path).map_err(|e| match e.kind() {
        io::ErrorKind::NotFound => Error::MissingInput(path.to_path_buf()),
        _ => Error::io(path, e),
    })?;
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        let bad = || Error::format(path, format!("line {}: expected doc_id, index, tag", n + 1));
        let [doc, index, tag] = f[..] else {
            return Err(bad());
        };
        out.push(Annotation {
            doc_id: unescape(doc),
            index: index.trim().parse().map_err(|_| bad())?,
            tag: match tag.trim() {
                "1" => true,
                "0" => false,
                _ => return Err(bad()),
            },
        });
    }
    Ok(out)
}

pub fn write_annotations(annotations: &[Annotation], path: &Path) -> Result<()> {
    write_atomic(path, |w| {
        for a in annotations {
            writeln!(
                w,
                "{}\t{}\t{}",
                crate::artifact::escape(&a.doc_id),
                a.index,
                u8::from(a.tag)
            )?;
        }
        Ok(())
    })
}

/// Counts behind one class's scores. Undefined ratios are `None`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    /// `|Ŝ|`, sentences predicted noise.
    pub predicted: usize,
    /// `|S|`, sentences annotated noise.
    pub actual: usize,
    /// `|Ŝ ∩ S|`.
    pub both: usize,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
}

pub fn metrics(predicted: usize, actual: usize, both: usize) -> Metrics {
    assert!(both <= predicted.min(actual), "intersection exceeds a set");
    let ratio = |a: usize, b: usize| (b > 0).then(|| a as f64 / b as f64);
    let precision = ratio(both, predicted);
    let recall = ratio(both, actual);
    let f1 = match (precision, recall) {
        (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
        _ => None,
    };
    Metrics {
        predicted,
        actual,
        both,
        precision,
        recall,
        f1,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassReport {
    pub class: ClassLabel,
    pub annotated: usize,
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreReport {
    /// Ordered by class name.
    pub classes: Vec<ClassReport>,
}

fn mean(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let defined: Vec<f64> = values.flatten().collect();
    (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64)
}

impl ScoreReport {
    /// Means over the classes where each value is defined.
    pub fn macro_precision(&self) -> Option<f64> {
        mean(self.classes.iter().map(|c| c.metrics.precision))
    }

    pub fn macro_recall(&self) -> Option<f64> {
        mean(self.classes.iter().map(|c| c.metrics.recall))
    }

    pub fn macro_f1(&self) -> Option<f64> {
        mean(self.classes.iter().map(|c| c.metrics.f1))
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        fn fmt(v: Option<f64>) -> String {
            v.map_or_else(|| "undefined".to_string(), |x| format!("{x:.4}"))
        }
        write_atomic(path, |w| {
            let mut out = csv::Writer::from_writer(w);
            let io_err = |e: csv::Error| io::Error::other(e.to_string());
            out.write_record([
                "class",
                "annotated",
                "predicted_noise",
                "annotated_noise",
                "both",
                "precision",
                "recall",
                "f1",
            ])
            .map_err(io_err)?;
            for c in &self.classes {
                let m = &c.metrics;
                out.write_record([
                    c.class.to_string(),
                    c.annotated.to_string(),
                    m.predicted.to_string(),
                    m.actual.to_string(),
                    m.both.to_string(),
                    fmt(m.precision),
                    fmt(m.recall),
                    fmt(m.f1),
                ])
                .map_err(io_err)?;
            }
            let total = |f: fn(&Metrics) -> usize| self.classes.iter().map(|c| f(&c.metrics)).sum::<usize>().to_string();
            out.write_record([
                "macro".to_string(),
                self.classes.iter().map(|c| c.annotated).sum::<usize>().to_string(),
                total(|m| m.predicted),
                total(|m| m.actual),
                total(|m| m.both),
                fmt(self.macro_precision()),
                fmt(self.macro_recall()),
                fmt(self.macro_f1()),
            ])
            .map_err(io_err)?;
            out.flush()
        })
    }
}

/// Scores predicted noise against annotated noise on the annotated sample,
/// per class of the annotated sentence.
pub fn score(verdicts: &[NoiseVerdict], annotations: &[Annotation]) -> Result<ScoreReport> {
    let by_id: HashMap<(&str, usize), &NoiseVerdict> = verdicts
        .iter()
        .map(|v| ((v.doc_id.as_str(), v.index), v))
        .collect();
    let mut unknown = Vec::new();
    let mut seen = HashMap::new();
    // class -> (annotated, predicted, actual, both)
    let mut counts: BTreeMap<&ClassLabel, [usize; 4]> = BTreeMap::new();
    for a in annotations {
        let Some(v) = by_id.get(&(a.doc_id.as_str(), a.index)) else {
            unknown.push(format!("{}:{}", a.doc_id, a.index));
            continue;
        };
        if let Some(prev) = seen.insert((a.doc_id.as_str(), a.index), a.tag) {
            if prev != a.tag {
                return Err(Error::InvalidParameter(format!(
                    "conflicting annotations for {}:{}",
                    a.doc_id, a.index
                )));
            }
            continue;
        }
        let c = counts.entry(&v.class).or_default();
        c[0] += 1;
        c[1] += usize::from(v.is_noise);
        c[2] += usize::from(a.tag);
        c[3] += usize::from(v.is_noise && a.tag);
    }
    if !unknown.is_empty() {
        return Err(Error::UnknownSentences(unknown));
    }
    Ok(ScoreReport {
        classes: counts
            .into_iter()
            .map(|(class, [annotated, p, s, both])| ClassReport {
                class: class.clone(),
                annotated,
                metrics: metrics(p, s, both),
            })
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filter::CommunityEncodedVector;

    fn verdict(doc: &str, index: usize, class: &str, noise: bool) -> NoiseVerdict {
        NoiseVerdict {
            doc_id: doc.into(),
            index,
            class: ClassLabel::new(class).unwrap(),
            is_noise: noise,
            vector: CommunityEncodedVector(vec![u32::from(!noise)]),
            matched_terms: Vec::new(),
        }
    }

    fn ann(doc: &str, index: usize, tag: bool) -> Annotation {
        Annotation {
            doc_id: doc.into(),
            index,
            tag,
        }
    }

    #[test]
    fn perfect_agreement() {
        let m = metrics(3, 3, 3);
        assert_eq!((m.precision, m.recall, m.f1), (Some(1.0), Some(1.0), Some(1.0)));
    }

    #[test]
    fn disjoint_sets_have_undefined_f1() {
        let m = metrics(2, 3, 0);
        assert_eq!((m.precision, m.recall, m.f1), (Some(0.0), Some(0.0), None));
        let m = metrics(0, 0, 0);
        assert_eq!((m.precision, m.recall, m.f1), (None, None, None));
    }

    #[test]
    fn ten_sentence_fixture() {
        // Class X: predicted noise {0,1,2,3}, annotated noise {2,3,4}.
        // Class Y: predicted none, annotated {7}.
        let verdicts: Vec<NoiseVerdict> = (0..10)
            .map(|i| {
                let class = if i < 6 { "X" } else { "Y" };
                verdict("d", i, class, i < 4)
            })
            .collect();
        let anns: Vec<Annotation> = (0..10).map(|i| ann("d", i, matches!(i, 2 | 3 | 4 | 7))).collect();
        let r = score(&verdicts, &anns).unwrap();
        let x = &r.classes[0].metrics;
        assert_eq!((x.predicted, x.actual, x.both), (4, 3, 2));
        assert_eq!(x.precision, Some(0.5));
        assert_eq!(x.recall, Some(2.0 / 3.0));
        assert_eq!(x.f1, Some(2.0 * 0.5 * (2.0 / 3.0) / (0.5 + 2.0 / 3.0)));
        let y = &r.classes[1].metrics;
        assert_eq!((y.precision, y.recall, y.f1), (None, Some(0.0), None));
        assert_eq!(r.macro_precision(), Some(0.5));
        assert_eq!(r.macro_recall(), Some(1.0 / 3.0));
    }

    #[test]
    fn unknown_sentences_listed() {
        let verdicts = vec![verdict("d", 0, "X", true)];
        let err = score(&verdicts, &[ann("d", 0, true), ann("e", 4, false)]).unwrap_err();
        match err {
            Error::UnknownSentences(ids) => assert_eq!(ids, ["e:4"]),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn annotation_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.tsv");
        fs::write(&p, "# doc\tindex\ttag\n7\t0\t1\n\n7\t1\t0\n").unwrap();
        let a = load_annotations(&p).unwrap();
        assert_eq!(a, [ann("7", 0, true), ann("7", 1, false)]);
        write_annotations(&a, &p).unwrap();
        assert_eq!(load_annotations(&p).unwrap(), a);
        fs::write(&p, "7\t0\tx\n").unwrap();
        assert!(matches!(load_annotations(&p), Err(Error::Format { .. })));
    }

    #[test]
    fn report_marks_undefined() {
        let verdicts = vec![verdict("d", 0, "X", false)];
        let r = score(&verdicts, &[ann("d", 0, false)]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.csv");
        r.write_csv(&p).unwrap();
        let text = fs::read_to_string(&p).unwrap();
        assert!(text.contains("X,1,0,0,0,undefined,undefined,undefined"));
    }
}
