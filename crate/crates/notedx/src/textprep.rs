//! Admission-note preprocessing: cleaning, de-identification handling,
//! diagnosis extraction, alias resolution, truncation, label filtering,
//! and dataset splitting.
//!
//! The cleaning rules are deliberately mechanical so they are reproducible:
//! `[** ... **]` spans and standalone numbers become the literal token `***`,
//! every character outside `[a-z0-9*]` becomes its own token, and whitespace
//! collapses to single spaces. `clean_note` is idempotent on its own output.

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::parallel;
use crate::rng::Rng;

/// One raw note as it arrives in the input corpus.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawNote {
    pub id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sections: Option<BTreeMap<String, String>>,
}

/// A preprocessed note: lowercase tokens plus an optional canonical label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub tokens: Vec<String>,
    #[serde(default)]
    pub label: Option<String>,
}

impl Document {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Manual disease-alias groups: every alias maps to its group's canonical name.
#[derive(Debug, Clone, Default)]
pub struct AliasMap {
    groups: Vec<(String, Vec<String>)>,
    canonical_of: HashMap<String, String>,
}

impl AliasMap {
    pub fn empty() -> Self {
        AliasMap::default()
    }

    /// Build from `(canonical, aliases)` pairs. The canonical name is always
    /// a member of its own group; alias sets must be pairwise disjoint.
    pub fn new(groups: Vec<(String, Vec<String>)>) -> Result<Self> {
        let mut canonical_of = HashMap::new();
        let mut kept = Vec::with_capacity(groups.len());
        for (canonical, mut aliases) in groups {
            if canonical.trim().is_empty() {
                return Err(Error::Config("alias group with empty canonical name".into()));
            }
            if !aliases.contains(&canonical) {
                aliases.push(canonical.clone());
            }
            for alias in &aliases {
                if let Some(prev) = canonical_of.insert(alias.clone(), canonical.clone()) {
                    if prev != canonical {
                        return Err(Error::Config(format!(
                            "alias {alias:?} appears in groups {prev:?} and {canonical:?}"
                        )));
                    }
                }
            }
            kept.push((canonical, aliases));
        }
        Ok(AliasMap {
            groups: kept,
            canonical_of,
        })
    }

    /// Parse `canonical<TAB>alias1<TAB>alias2...` lines; `#` starts a comment.
    pub fn from_lines<I: IntoIterator<Item = String>>(lines: I) -> Result<Self> {
        let mut groups = Vec::new();
        for line in lines {
            let line = line.trim_end_matches(['\r', '\n']);
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let mut fields = line.split('\t').map(|s| s.trim().to_string());
            let canonical = fields.next().unwrap_or_default();
            let aliases: Vec<String> = fields.filter(|s| !s.is_empty()).collect();
            groups.push((canonical, aliases));
        }
        AliasMap::new(groups)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        let lines: Vec<String> = BufReader::new(file).lines().collect::<std::io::Result<_>>()?;
        AliasMap::from_lines(lines)
    }

    pub fn groups(&self) -> &[(String, Vec<String>)] {
        &self.groups
    }

    /// Canonical name for `raw_label`; unmapped labels pass through unchanged.
    pub fn resolve<'a>(&'a self, raw_label: &'a str) -> &'a str {
        self.canonical_of
            .get(raw_label)
            .map(String::as_str)
            .unwrap_or(raw_label)
    }
}

/// Canonical name for `raw_label` under `map` (identity when unmapped).
pub fn resolve_alias(raw_label: &str, map: &AliasMap) -> String {
    map.resolve(raw_label).to_string()
}

fn is_token_char(c: char) -> bool {
    c.is_ascii_lowercase() || c.is_ascii_digit() || c == '*'
}

/// Replace every `[** ... **]` de-identification span with ` *** `.
fn blank_deid_spans(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(start) = rest.find("[**") {
        out.push_str(&rest[..start]);
        match rest[start + 3..].find("**]") {
            Some(end) => {
                out.push_str(" *** ");
                rest = &rest[start + 3 + end + 3..];
            }
            None => {
                // unterminated span: keep the text, tokenization will split it
                out.push_str(&rest[start..]);
                rest = "";
            }
        }
    }
    out.push_str(rest);
    out
}

fn tokenize_lowercased(text: &str, out: &mut Vec<String>) {
    let mut run = String::new();
    let flush = |run: &mut String, out: &mut Vec<String>| {
        if !run.is_empty() {
            out.push(std::mem::take(run));
        }
    };
    for c in text.chars().flat_map(char::to_lowercase) {
        if is_token_char(c) {
            run.push(c);
        } else {
            flush(&mut run, out);
            if !c.is_whitespace() {
                out.push(c.to_string());
            }
        }
    }
    flush(&mut run, out);
}

/// Clean one note into a single line of space-separated tokens.
///
/// When the note has named sections and `admission_sections` is nonempty,
/// only the listed sections (in list order, case-insensitive names) are used;
/// otherwise the whole text is. De-identification spans and standalone
/// numbers become `***`, punctuation is split into standalone tokens, and
/// everything is lowercased.
pub fn clean_note(raw: &RawNote, admission_sections: &[String]) -> String {
    clean_note_tokens(raw, admission_sections).join(" ")
}

/// Token form of [`clean_note`].
pub fn clean_note_tokens(raw: &RawNote, admission_sections: &[String]) -> Vec<String> {
    let mut parts: Vec<&str> = Vec::new();
    match (&raw.sections, admission_sections.is_empty()) {
        (Some(sections), false) => {
            for wanted in admission_sections {
                let wanted_lower = wanted.to_lowercase();
                for (name, text) in sections {
                    if name.to_lowercase() == wanted_lower {
                        parts.push(text);
                    }
                }
            }
        }
        _ => parts.push(&raw.text),
    }
    let mut tokens = Vec::new();
    for part in parts {
        let blanked = blank_deid_spans(part);
        tokenize_lowercased(&blanked, &mut tokens);
    }
    for tok in tokens.iter_mut() {
        if !tok.is_empty() && tok.chars().all(|c| c.is_ascii_digit()) {
            *tok = "***".to_string();
        }
    }
    tokens
}

/// How diagnosis phrases are located and split.
#[derive(Debug, Clone)]
pub struct DiagnosisRules {
    /// Section headers tried in order, matched case-insensitively at line
    /// starts, optionally followed by a colon.
    pub headers: Vec<String>,
    /// Characters separating listed items.
    pub delimiters: Vec<char>,
}

impl Default for DiagnosisRules {
    fn default() -> Self {
        DiagnosisRules {
            headers: vec![
                "discharge diagnosis".to_string(),
                "primary diagnosis".to_string(),
                "diagnosis".to_string(),
            ],
            delimiters: vec![',', ';'],
        }
    }
}

fn normalize_label(s: &str) -> String {
    s.to_lowercase().split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Extract the first disease phrase listed under the first matching
/// diagnosis header, lowercased and whitespace-normalized. Returns `None`
/// when no header is found or nothing is listed under it.
pub fn extract_primary_diagnosis(raw: &RawNote, rules: &DiagnosisRules) -> Option<String> {
    let lines: Vec<&str> = raw.text.lines().collect();
    for (i, line) in lines.iter().enumerate() {
        let lower = line.trim().to_lowercase();
        for header in &rules.headers {
            if !lower.starts_with(header.as_str()) {
                continue;
            }
            let after = lower[header.len()..].trim_start();
            let inline = match after.strip_prefix(':') {
                Some(rest) => rest.trim(),
                None if after.is_empty() => "",
                None => continue, // e.g. "diagnosis of ..." — prose, not a header
            };
            let source = if !inline.is_empty() {
                Some(inline.to_string())
            } else {
                lines[i + 1..]
                    .iter()
                    .map(|l| l.trim())
                    .find(|l| !l.is_empty())
                    .map(|l| l.to_string())
            };
            let first = source.and_then(|text| {
                text.split(|c| rules.delimiters.contains(&c))
                    .next()
                    .map(normalize_label)
                    .filter(|s| !s.is_empty())
            });
            return first;
        }
    }
    None
}

/// Smallest length `L` such that at least `quantile` of the corpus has
/// length ≤ `L` (empirical nearest-rank percentile).
pub fn compute_truncation_length(corpus: &[Document], quantile: f64) -> Result<usize> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut lengths: Vec<usize> = corpus.iter().map(Document::len).collect();
    lengths.sort_unstable();
    // nearest rank: ceil(q·N), computed with a nudge so that exact products
    // like 0.9·10 do not land on 9.000000000000002 and round up to 10
    let n = lengths.len();
    let rank = ((quantile * n as f64) - 1e-9).ceil() as usize;
    let rank = rank.clamp(1, n);
    Ok(lengths[rank - 1])
}

/// Drop tokens beyond `l_max`; shorter documents pass through unchanged.
pub fn truncate(mut doc: Document, l_max: usize) -> Document {
    if doc.tokens.len() > l_max {
        doc.tokens.truncate(l_max);
    }
    doc
}

/// Keep documents whose label is among the `k` most frequent; returns the
/// retained label set in descending frequency (ties lexicographic).
pub fn filter_top_k_labels(corpus: Vec<Document>, k: usize) -> Result<(Vec<Document>, Vec<String>)> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    for doc in &corpus {
        let label = doc.label.as_deref().ok_or_else(|| {
            Error::InvalidArgument(format!("document {:?} has no label", doc.id))
        })?;
        *counts.entry(label.to_string()).or_insert(0) += 1;
    }
    if counts.len() < k {
        return Err(Error::InsufficientData(format!(
            "{} distinct labels, need {k}",
            counts.len()
        )));
    }
    let mut ordered: Vec<(String, u64)> = counts.into_iter().collect();
    // descending count; the BTreeMap already gave lexicographic order for ties
    ordered.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ordered.truncate(k);
    let keep: Vec<String> = ordered.into_iter().map(|(l, _)| l).collect();
    let keep_set: std::collections::HashSet<&str> = keep.iter().map(String::as_str).collect();
    let docs = corpus
        .iter()
        .filter(|d| keep_set.contains(d.label.as_deref().unwrap_or("")))
        .cloned()
        .collect();
    Ok((docs, keep))
}

/// Train/validation/test partition of a corpus.
#[derive(Debug, Clone)]
pub struct CorpusSplit {
    pub train: Vec<Document>,
    pub validation: Vec<Document>,
    pub test: Vec<Document>,
    pub seed: u64,
    pub ratios: (f64, f64, f64),
}

/// Seeded uniform shuffle followed by contiguous slicing at
/// `⌊r_train·T⌋` and `⌊(r_train+r_val)·T⌋`.
pub fn split_dataset(corpus: &[Document], seed: u64, ratios: (f64, f64, f64)) -> Result<CorpusSplit> {
    let (rt, rv, rs) = ratios;
    if rt <= 0.0 || rv <= 0.0 || rs <= 0.0 || ((rt + rv + rs) - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "ratios must be positive and sum to 1, got {ratios:?}"
        )));
    }
    const SPLIT_STREAM: u64 = 0x53504c49; // "SPLI"
    let t = corpus.len();
    let mut order: Vec<usize> = (0..t).collect();
    let mut rng = Rng::with_stream(seed, SPLIT_STREAM);
    rng.shuffle(&mut order);
    // nudge before flooring so 0.70·13140 lands on 9198, not 9197.999…
    let cut1 = (rt * t as f64 + 1e-9).floor() as usize;
    let cut2 = ((rt + rv) * t as f64 + 1e-9).floor() as usize;
    if cut1 == 0 || cut2 <= cut1 || cut2 >= t {
        return Err(Error::InsufficientData(format!(
            "split of {t} documents at {ratios:?} leaves an empty part"
        )));
    }
    let pick = |idx: &[usize]| idx.iter().map(|&i| corpus[i].clone()).collect::<Vec<_>>();
    Ok(CorpusSplit {
        train: pick(&order[..cut1]),
        validation: pick(&order[cut1..cut2]),
        test: pick(&order[cut2..]),
        seed,
        ratios,
    })
}

// -- corpus files -------------------------------------------------------------

/// Read a JSON-lines corpus of raw notes.
pub fn read_raw_corpus(path: &Path) -> Result<Vec<RawNote>> {
    let file = std::fs::File::open(path)?;
    let mut notes = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let note: RawNote = serde_json::from_str(&line).map_err(|e| {
            Error::Corrupt(format!("{}:{}: {e}", path.display(), lineno + 1))
        })?;
        notes.push(note);
    }
    Ok(notes)
}

/// Read a JSON-lines corpus of preprocessed documents.
pub fn read_documents(path: &Path) -> Result<Vec<Document>> {
    let file = std::fs::File::open(path)?;
    let mut docs = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let doc: Document = serde_json::from_str(&line).map_err(|e| {
            Error::Corrupt(format!("{}:{}: {e}", path.display(), lineno + 1))
        })?;
        docs.push(doc);
    }
    Ok(docs)
}

pub fn write_documents(path: &Path, docs: &[Document]) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    for doc in docs {
        serde_json::to_writer(&mut out, doc)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// Options for the end-to-end preprocessing pass.
#[derive(Debug, Clone)]
pub struct PreprocessOptions {
    pub admission_sections: Vec<String>,
    pub diagnosis: DiagnosisRules,
    pub alias: AliasMap,
    pub top_k: usize,
    pub truncation_quantile: f64,
    pub sequential: bool,
}

impl Default for PreprocessOptions {
    fn default() -> Self {
        PreprocessOptions {
            admission_sections: Vec::new(),
            diagnosis: DiagnosisRules::default(),
            alias: AliasMap::empty(),
            top_k: 10,
            truncation_quantile: 0.90,
            sequential: false,
        }
    }
}

/// Result of [`preprocess_corpus`].
#[derive(Debug, Clone)]
pub struct PreprocessedCorpus {
    pub documents: Vec<Document>,
    /// Retained labels in descending frequency.
    pub labels: Vec<String>,
    pub l_max: usize,
}

/// Full preprocessing pass: clean every note, compute the truncation length
/// on the cleaned corpus, truncate, attach canonical labels (provided label
/// if present, extracted otherwise), drop unlabeled notes, and keep the
/// top-`k` labels.
pub fn preprocess_corpus(notes: &[RawNote], opts: &PreprocessOptions) -> Result<PreprocessedCorpus> {
    if notes.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let cleaned: Vec<Document> = parallel::map_indexed(notes, opts.sequential, |_, note| {
        let tokens = clean_note_tokens(note, &opts.admission_sections);
        let raw_label = note
            .label
            .clone()
            .map(|l| normalize_label(&l))
            .filter(|l| !l.is_empty())
            .or_else(|| extract_primary_diagnosis(note, &opts.diagnosis));
        let label = raw_label.map(|l| resolve_alias(&l, &opts.alias));
        Document {
            id: note.id.clone(),
            tokens,
            label,
        }
    });
    let l_max = compute_truncation_length(&cleaned, opts.truncation_quantile)?;
    let truncated: Vec<Document> = cleaned.into_iter().map(|d| truncate(d, l_max)).collect();
    let labeled: Vec<Document> = truncated.into_iter().filter(|d| d.label.is_some()).collect();
    if labeled.is_empty() {
        return Err(Error::InsufficientData("no labeled documents".into()));
    }
    let (documents, labels) = filter_top_k_labels(labeled, opts.top_k)?;
    Ok(PreprocessedCorpus {
        documents,
        labels,
        l_max,
    })
}
