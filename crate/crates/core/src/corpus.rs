//! Vector sets, trial lists, enrollment maps, and score files.
//!
//! All on-disk formats are whitespace-separated UTF-8 text with one record
//! per line (LF, trailing newline optional, blank lines ignored):
//!
//! * vector file:  `<utterance_id> <class_id> <v1> ... <vd>` where `-`
//!   stands for an absent class label;
//! * trial file:   `<enroll_id> <test_utterance_id> [target|nontarget]`;
//! * enroll map:   `<enroll_id> <utterance_id> [utterance_id ...]`;
//! * score file:   `<enroll_id> <test_utterance_id> <score>`.
//!
//! Floats are written as the shortest decimal that round-trips to the same
//! 64-bit value, so write-then-read reproduces a set bit-exactly.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::numeric::format_f64;

/// One labelled (or unlabelled) fixed-dimension vector.
#[derive(Debug, Clone, PartialEq)]
pub struct UtteranceRecord {
    pub utterance_id: String,
    pub class_id: Option<String>,
    pub values: Vec<f64>,
}

/// Records of one class, in record order.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassGroup {
    pub class_id: String,
    /// Indices into [`VectorSet::records`].
    pub members: Vec<usize>,
}

/// A collection of same-dimension utterance vectors with a class index.
///
/// Classes are kept in order of first appearance so that every iteration
/// over them is deterministic.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorSet {
    dim: usize,
    records: Vec<UtteranceRecord>,
    by_utterance: HashMap<String, usize>,
    classes: Vec<ClassGroup>,
    class_index: HashMap<String, usize>,
}

impl VectorSet {
    /// Builds a set from records, validating the shared-dimension,
    /// unique-id, and finite-values invariants.
    pub fn from_records(records: Vec<UtteranceRecord>) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::Invalid("vector set must not be empty".into()));
        }
        let dim = records[0].values.len();
        if dim == 0 {
            return Err(Error::Invalid("vector dimension must be at least 1".into()));
        }
        let mut by_utterance = HashMap::with_capacity(records.len());
        let mut classes: Vec<ClassGroup> = Vec::new();
        let mut class_index: HashMap<String, usize> = HashMap::new();
        for (pos, rec) in records.iter().enumerate() {
            if rec.utterance_id.is_empty() || rec.utterance_id.contains(char::is_whitespace) {
                return Err(Error::Invalid(format!(
                    "invalid utterance id {:?}",
                    rec.utterance_id
                )));
            }
            if rec.values.len() != dim {
                return Err(Error::Invalid(format!(
                    "utterance '{}' has dimension {} but the set has dimension {}",
                    rec.utterance_id,
                    rec.values.len(),
                    dim
                )));
            }
            if rec.values.iter().any(|v| !v.is_finite()) {
                return Err(Error::Invalid(format!(
                    "utterance '{}' contains a non-finite value",
                    rec.utterance_id
                )));
            }
            if by_utterance.insert(rec.utterance_id.clone(), pos).is_some() {
                return Err(Error::Invalid(format!(
                    "duplicate utterance id '{}'",
                    rec.utterance_id
                )));
            }
            if let Some(class_id) = &rec.class_id {
                match class_index.get(class_id) {
                    Some(&ci) => classes[ci].members.push(pos),
                    None => {
                        class_index.insert(class_id.clone(), classes.len());
                        classes.push(ClassGroup {
                            class_id: class_id.clone(),
                            members: vec![pos],
                        });
                    }
                }
            }
        }
        Ok(VectorSet {
            dim,
            records,
            by_utterance,
            classes,
            class_index,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[UtteranceRecord] {
        &self.records
    }

    pub fn get(&self, utterance_id: &str) -> Option<&UtteranceRecord> {
        self.by_utterance.get(utterance_id).map(|&i| &self.records[i])
    }

    /// Classes in order of first appearance.
    pub fn classes(&self) -> &[ClassGroup] {
        &self.classes
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    /// True when every record carries a class label.
    pub fn fully_labeled(&self) -> bool {
        self.records.iter().all(|r| r.class_id.is_some())
    }

    /// Applies `f` to every value vector, producing a new set with the same
    /// ids and labels. The mapped vectors may change dimension but must all
    /// agree on it.
    pub fn map_values<F>(&self, mut f: F) -> Result<VectorSet>
    where
        F: FnMut(&UtteranceRecord) -> Result<Vec<f64>>,
    {
        let mut records = Vec::with_capacity(self.records.len());
        for rec in &self.records {
            records.push(UtteranceRecord {
                utterance_id: rec.utterance_id.clone(),
                class_id: rec.class_id.clone(),
                values: f(rec)?,
            });
        }
        VectorSet::from_records(records)
    }
}

/// Verification trial label.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Label {
    Target,
    Nontarget,
    Unknown,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Target => "target",
            Label::Nontarget => "nontarget",
            Label::Unknown => "unknown",
        }
    }
}

/// One verification question: an enrolled model against a test utterance.
#[derive(Debug, Clone, PartialEq)]
pub struct Trial {
    pub enroll_id: String,
    pub test_id: String,
    pub label: Label,
}

/// Ordered list of trials, preserving file order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrialList {
    pub entries: Vec<Trial>,
}

impl TrialList {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// True when no entry has an [`Label::Unknown`] label.
    pub fn fully_labeled(&self) -> bool {
        self.entries.iter().all(|t| t.label != Label::Unknown)
    }
}

/// Mapping from enrollment model id to its utterance ids, in file order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EnrollMap {
    entries: Vec<(String, Vec<String>)>,
    index: HashMap<String, usize>,
}

impl EnrollMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, enroll_id: String, utterances: Vec<String>) -> Result<()> {
        if utterances.is_empty() {
            return Err(Error::Invalid(format!(
                "enrollment '{enroll_id}' lists no utterances"
            )));
        }
        if self.index.contains_key(&enroll_id) {
            return Err(Error::Invalid(format!(
                "duplicate enrollment id '{enroll_id}'"
            )));
        }
        self.index.insert(enroll_id.clone(), self.entries.len());
        self.entries.push((enroll_id, utterances));
        Ok(())
    }

    pub fn get(&self, enroll_id: &str) -> Option<&[String]> {
        self.index
            .get(enroll_id)
            .map(|&i| self.entries[i].1.as_slice())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[String])> {
        self.entries.iter().map(|(id, u)| (id.as_str(), u.as_slice()))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// One line of a score file.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreEntry {
    pub enroll_id: String,
    pub test_id: String,
    pub score: f64,
}

fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write_string(path: &Path, content: &str) -> Result<()> {
    fs::write(path, content).map_err(|e| Error::io(path, e))
}

/// Non-blank lines with their 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty())
}

/// Reads a vector file. Every diagnostic names the offending line.
pub fn read_vectors(path: impl AsRef<Path>) -> Result<VectorSet> {
    let path = path.as_ref();
    let text = read_to_string(path)?;
    let mut records = Vec::new();
    let mut dim: Option<usize> = None;
    let mut seen: HashMap<String, usize> = HashMap::new();
    for (line_no, line) in content_lines(&text) {
        let mut fields = line.split_whitespace();
        let utterance_id = fields
            .next()
            .ok_or_else(|| Error::parse(path, line_no, "missing utterance id"))?
            .to_string();
        let class_field = fields
            .next()
            .ok_or_else(|| Error::parse(path, line_no, "missing class id"))?;
        let class_id = if class_field == "-" {
            None
        } else {
            Some(class_field.to_string())
        };
        let mut values = Vec::new();
        for field in fields {
            let v: f64 = field.parse().map_err(|_| {
                Error::parse(path, line_no, format!("unparseable number '{field}'"))
            })?;
            if !v.is_finite() {
                return Err(Error::parse(
                    path,
                    line_no,
                    format!("non-finite value '{field}'"),
                ));
            }
            values.push(v);
        }
        if values.is_empty() {
            return Err(Error::parse(path, line_no, "no vector values"));
        }
        match dim {
            None => dim = Some(values.len()),
            Some(d) if d != values.len() => {
                return Err(Error::parse(
                    path,
                    line_no,
                    format!("dimension {} does not match dimension {} of line 1", values.len(), d),
                ));
            }
            _ => {}
        }
        if let Some(prev) = seen.insert(utterance_id.clone(), line_no) {
            return Err(Error::parse(
                path,
                line_no,
                format!("duplicate utterance id '{utterance_id}' (first seen on line {prev})"),
            ));
        }
        records.push(UtteranceRecord {
            utterance_id,
            class_id,
            values,
        });
    }
    if records.is_empty() {
        return Err(Error::parse(path, 1, "empty vector file"));
    }
    VectorSet::from_records(records)
}

/// Writes a vector file; `read_vectors` reproduces the set bit-exactly.
pub fn write_vectors(set: &VectorSet, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if set.is_empty() {
        return Err(Error::Invalid("refusing to write an empty vector set".into()));
    }
    let mut out = String::new();
    for rec in set.records() {
        out.push_str(&rec.utterance_id);
        out.push(' ');
        out.push_str(rec.class_id.as_deref().unwrap_or("-"));
        for v in &rec.values {
            out.push(' ');
            out.push_str(&format_f64(*v));
        }
        out.push('\n');
    }
    write_string(path, &out)
}

/// Reads a trial list. The third field is optional; when absent the label
/// is [`Label::Unknown`].
pub fn read_trials(path: impl AsRef<Path>) -> Result<TrialList> {
    let path = path.as_ref();
    let text = read_to_string(path)?;
    let mut entries = Vec::new();
    for (line_no, line) in content_lines(&text) {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() < 2 || fields.len() > 3 {
            return Err(Error::parse(
                path,
                line_no,
                format!("expected 2 or 3 fields, found {}", fields.len()),
            ));
        }
        let label = match fields.get(2) {
            None => Label::Unknown,
            Some(&"target") => Label::Target,
            Some(&"nontarget") => Label::Nontarget,
            Some(other) => {
                return Err(Error::parse(
                    path,
                    line_no,
                    format!("invalid label '{other}' (expected target or nontarget)"),
                ));
            }
        };
        entries.push(Trial {
            enroll_id: fields[0].to_string(),
            test_id: fields[1].to_string(),
            label,
        });
    }
    if entries.is_empty() {
        return Err(Error::parse(path, 1, "empty trial file"));
    }
    Ok(TrialList { entries })
}

pub fn write_trials(trials: &TrialList, path: impl AsRef<Path>) -> Result<()> {
    let mut out = String::new();
    for t in &trials.entries {
        out.push_str(&t.enroll_id);
        out.push(' ');
        out.push_str(&t.test_id);
        if t.label != Label::Unknown {
            out.push(' ');
            out.push_str(t.label.as_str());
        }
        out.push('\n');
    }
    write_string(path.as_ref(), &out)
}

pub fn read_enroll_map(path: impl AsRef<Path>) -> Result<EnrollMap> {
    let path = path.as_ref();
    let text = read_to_string(path)?;
    let mut map = EnrollMap::new();
    for (line_no, line) in content_lines(&text) {
        let mut fields = line.split_whitespace();
        let enroll_id = fields.next().expect("non-blank line").to_string();
        let utterances: Vec<String> = fields.map(str::to_string).collect();
        if utterances.is_empty() {
            return Err(Error::parse(
                path,
                line_no,
                format!("enrollment '{enroll_id}' lists no utterances"),
            ));
        }
        map.insert(enroll_id, utterances)
            .map_err(|e| Error::parse(path, line_no, e.to_string()))?;
    }
    if map.is_empty() {
        return Err(Error::parse(path, 1, "empty enrollment map"));
    }
    Ok(map)
}

pub fn write_enroll_map(map: &EnrollMap, path: impl AsRef<Path>) -> Result<()> {
    let mut out = String::new();
    for (id, utts) in map.iter() {
        out.push_str(id);
        for u in utts {
            out.push(' ');
            out.push_str(u);
        }
        out.push('\n');
    }
    write_string(path.as_ref(), &out)
}

pub fn read_scores(path: impl AsRef<Path>) -> Result<Vec<ScoreEntry>> {
    let path = path.as_ref();
    let text = read_to_string(path)?;
    let mut entries = Vec::new();
    for (line_no, line) in content_lines(&text) {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(Error::parse(
                path,
                line_no,
                format!("expected 3 fields, found {}", fields.len()),
            ));
        }
        let score: f64 = fields[2]
            .parse()
            .map_err(|_| Error::parse(path, line_no, format!("unparseable score '{}'", fields[2])))?;
        if !score.is_finite() {
            return Err(Error::parse(path, line_no, "non-finite score"));
        }
        entries.push(ScoreEntry {
            enroll_id: fields[0].to_string(),
            test_id: fields[1].to_string(),
            score,
        });
    }
    if entries.is_empty() {
        return Err(Error::parse(path, 1, "empty score file"));
    }
    Ok(entries)
}

/// Writes scores with 17 significant digits, enough to reproduce each `f64`.
pub fn write_scores(entries: &[ScoreEntry], path: impl AsRef<Path>) -> Result<()> {
    let mut out = String::new();
    for e in entries {
        out.push_str(&format!("{} {} {:.16e}\n", e.enroll_id, e.test_id, e.score));
    }
    write_string(path.as_ref(), &out)
}
